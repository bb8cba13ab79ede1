use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{certify, CertifyConfig, Outcome, Property, PropertyVerdict};
use crate::error::Result;
use crate::sot::SotFamily;

/// Table glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Glyph {
    #[serde(rename = "✓")]
    Check,
    #[serde(rename = "✗")]
    Cross,
    /// Holds on a restricted domain.
    #[serde(rename = "∗")]
    Star,
    /// Undetermined.
    #[serde(rename = "?")]
    Question,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl fmt::Display for Glyph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Glyph::Check => "✓",
            Glyph::Cross => "✗",
            Glyph::Star => "∗",
            Glyph::Question => "?",
            Glyph::NotApplicable => "n/a",
        })
    }
}

/// Known pattern of the eight tabulated families. `None` for families or
/// properties outside the table.
pub fn expected_glyph(family: &SotFamily, property: Property) -> Option<Glyph> {
    use Glyph::{Check as Y, Cross as N, Question as Q, Star as S};
    if property == Property::M {
        return Some(Y);
    }
    // P1 P2 P3 P4 P5 P7 A
    let row: [Glyph; 7] = match family {
        SotFamily::Uncorrelated => [Y, Y, Y, N, Y, N, N],
        SotFamily::Ohya => [Y, Y, Y, N, Y, S, Q],
        SotFamily::LeiferSpekkens | SotFamily::TRotated { .. } | SotFamily::Sth { .. } => [Y, Y, N, N, Y, Y, N],
        SotFamily::SymmetricBloom => [Y, N, N, Y, Y, Y, Y],
        SotFamily::RightBloom | SotFamily::LeftBloom => [N, N, N, Y, Y, Y, Y],
        _ => return None,
    };
    if property == Property::P6 {
        return Some(if row[3] == Y && row[4] == Y { Y } else { N });
    }
    let k = Property::TABLE.iter().position(|p| *p == property)?;
    Some(row[k])
}

fn glyph_of(v: &PropertyVerdict) -> Glyph {
    if matches!(v.family, SotFamily::Ohya) && v.property == Property::A {
        return Glyph::Question;
    }
    match v.outcome {
        Outcome::Holds { .. } if v.qualifier.is_some() => Glyph::Star,
        Outcome::Holds { .. } => Glyph::Check,
        Outcome::Fails { .. } => Glyph::Cross,
        Outcome::Inconclusive { .. } => Glyph::Question,
        Outcome::Insufficient | Outcome::Inapplicable { .. } => Glyph::NotApplicable,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub glyph: Glyph,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected: Option<Glyph>,
    #[serde(flatten)]
    pub verdict: PropertyVerdict,
}

impl Cell {
    /// Whether the cell agrees with its expected glyph. `∗` requires a
    /// (qualified) pass; `?` accepts anything.
    pub fn matches_expected(&self) -> Option<bool> {
        self.expected.map(|g| match g {
            Glyph::Star => self.verdict.holds(),
            Glyph::Question => true,
            other => other == self.glyph,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub family: SotFamily,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableConfig {
    pub families: Vec<SotFamily>,
    pub properties: Vec<Property>,
    pub certify: CertifyConfig,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            families: SotFamily::table_families(),
            properties: Property::TABLE.to_vec(),
            certify: CertifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableReport {
    pub schema_version: u32,
    pub config: TableConfig,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    /// Certifies every (family, property) cell.
    pub fn run(config: &TableConfig) -> Result<Self> {
        let mut rows = Vec::with_capacity(config.families.len());
        for fam in &config.families {
            let mut cells = Vec::with_capacity(config.properties.len());
            for &p in &config.properties {
                let verdict = certify(fam, p, &config.certify)?;
                cells.push(Cell {
                    glyph: glyph_of(&verdict),
                    expected: expected_glyph(fam, p),
                    verdict,
                });
            }
            rows.push(TableRow { family: *fam, cells });
        }
        Ok(Self {
            schema_version: crate::wire::SCHEMA_VERSION,
            config: config.clone(),
            rows,
        })
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.rows.iter().flat_map(|r| r.cells.iter())
    }

    /// Cells whose glyph disagrees with the expected pattern.
    pub fn mismatches(&self) -> Vec<&Cell> {
        self.cells().filter(|c| c.matches_expected() == Some(false)).collect()
    }

    /// True when every cell with an expected glyph agrees with it.
    pub fn matches_expected(&self) -> bool {
        self.mismatches().is_empty()
    }

    /// Families that fail block positivity while passing positivity, which
    /// is impossible since positivity implies block positivity.
    pub fn consistency_violations(&self) -> Vec<SotFamily> {
        self.rows
            .iter()
            .filter(|r| {
                let get = |p| r.cells.iter().find(|c| c.verdict.property == p);
                matches!((get(Property::P2), get(Property::P3)), (Some(b), Some(p)) if b.verdict.fails() && p.verdict.holds())
            })
            .map(|r| r.family)
            .collect()
    }

    /// Aligned text rendering followed by one line per counterexample.
    pub fn render_text(&self) -> String {
        let names: Vec<String> = self.rows.iter().map(|r| r.family.to_string()).collect();
        let w = names.iter().map(|n| n.chars().count()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<w$}", "family");
        if let Some(r) = self.rows.first() {
            for c in &r.cells {
                let _ = write!(out, "  {:<3}", c.verdict.property.to_string());
            }
        }
        out.push('\n');
        for (row, name) in self.rows.iter().zip(&names) {
            let _ = write!(out, "{name:<w$}");
            for c in &row.cells {
                let mark = if c.matches_expected() == Some(false) { "!" } else { "" };
                let g = format!("{}{mark}", c.glyph);
                let _ = write!(out, "  {g:<3}");
            }
            out.push('\n');
        }
        for c in self.cells() {
            if let Outcome::Fails { violation, witness } = &c.verdict.outcome {
                let _ = writeln!(
                    out,
                    "{} {}: violation {violation:.3e} (trial {}, seed {:#x})",
                    c.verdict.family, c.verdict.property, witness.trial, c.verdict.seed
                );
            }
            if let Some(q) = &c.verdict.qualifier {
                let _ = writeln!(out, "{} {}: {} {q}", c.verdict.family, c.verdict.property, c.glyph);
            }
        }
        out
    }
}
