//! JSON interchange.
//!
//! Complex numbers are `[re, im]` pairs. A shape is a list of
//! `{label, dim}` blocks; an element is `{shape, blocks: {label: rows}}`;
//! a linear map is `{source, target, matrix}` where rows and columns are
//! indexed by matrix units ordered by (block label, row, column), row-major
//! within a block. Floats are written with shortest round-trip
//! representation, so serialize∘parse is the identity on finite values.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{AlgebraElement, AlgebraShape, Block, DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::scenarios::ScenarioSpec;
use crate::sot::SotFamily;

pub const SCHEMA_VERSION: u32 = 1;

impl Serialize for AlgebraShape {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraShape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<Block>::deserialize(d)?;
        AlgebraShape::new(blocks).map_err(D::Error::custom)
    }
}

fn rows(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<C64>], what: &str) -> Result<DMatrix<C64>> {
    let n = r.len();
    let m = r.first().map_or(0, Vec::len);
    if r.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidShape(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| r[i][j]))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRepr {
    shape: AlgebraShape,
    blocks: BTreeMap<String, Vec<Vec<C64>>>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .shape()
            .blocks()
            .iter()
            .zip(self.blocks())
            .map(|(b, m)| (b.label.clone(), rows(m)))
            .collect();
        ElementRepr {
            shape: self.shape().clone(),
            blocks,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        let mut blocks = Vec::with_capacity(repr.shape.num_blocks());
        for b in repr.shape.blocks() {
            let r = repr
                .blocks
                .get(&b.label)
                .ok_or_else(|| D::Error::custom(format!("missing block '{}'", b.label)))?;
            blocks.push(from_rows(r, &b.label).map_err(D::Error::custom)?);
        }
        if repr.blocks.len() != repr.shape.num_blocks() {
            return Err(D::Error::custom("blocks do not match the shape labels"));
        }
        AlgebraElement::new(repr.shape, blocks).map_err(D::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.element().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DensityMatrix::new(AlgebraElement::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Positions of the internal matrix units in (label, row, column) order.
fn label_order(shape: &AlgebraShape) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..shape.algebra_dim()).collect();
    idx.sort_by_key(|&k| {
        let (x, i, j) = shape.unit_at(k);
        (shape.blocks()[x].label.clone(), i, j)
    });
    idx
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRepr {
    source: AlgebraShape,
    target: AlgebraShape,
    matrix: Vec<Vec<C64>>,
}

impl Serialize for LinearMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let ro = label_order(self.target());
        let co = label_order(self.source());
        let m = self.matrix();
        let matrix = ro.iter().map(|&r| co.iter().map(|&c| m[(r, c)]).collect()).collect();
        MapRepr {
            source: self.source().clone(),
            target: self.target().clone(),
            matrix,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MapRepr::deserialize(d)?;
        let wire = from_rows(&repr.matrix, "matrix").map_err(D::Error::custom)?;
        let (nt, ns) = (repr.target.algebra_dim(), repr.source.algebra_dim());
        if wire.nrows() != nt || wire.ncols() != ns {
            return Err(D::Error::custom(format!(
                "matrix is {}x{}, shapes require {nt}x{ns}",
                wire.nrows(),
                wire.ncols()
            )));
        }
        let ro = label_order(&repr.target);
        let co = label_order(&repr.source);
        let mut m = DMatrix::zeros(nt, ns);
        for (wr, &r) in ro.iter().enumerate() {
            for (wc, &c) in co.iter().enumerate() {
                m[(r, c)] = wire[(wr, wc)];
            }
        }
        LinearMap::new(repr.source, repr.target, m).map_err(D::Error::custom)
    }
}

/// Payload of a [`Document`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Shape { shape: AlgebraShape },
    Element { element: AlgebraElement },
    State { state: DensityMatrix },
    Channel { channel: LinearMap },
    SotFamily { family: SotFamily },
    Scenario { scenario: ScenarioSpec },
}

/// Versioned top-level JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    #[serde(flatten)]
    pub payload: Payload,
}

impl Document {
    pub fn new(payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            payload,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::Shape { .. } => "shape",
            Payload::Element { .. } => "element",
            Payload::State { .. } => "state",
            Payload::Channel { .. } => "channel",
            Payload::SotFamily { .. } => "sot_family",
            Payload::Scenario { .. } => "scenario",
        }
    }
}

/// Failure to read a document: either malformed JSON (with position) or a
/// well-formed document that fails validation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid document at line {line}, column {column}: {message}")]
    Invalid { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {0}")]
    Version(u32),
}

fn parse_error(e: serde_json::Error) -> ParseError {
    use serde_json::error::Category;
    let (line, column, message) = (e.line(), e.column(), e.to_string());
    match e.classify() {
        Category::Data => ParseError::Invalid { line, column, message },
        _ => ParseError::Syntax { line, column, message },
    }
}

/// Parses a document and checks its schema version.
pub fn parse_document(text: &str) -> std::result::Result<Document, ParseError> {
    let doc: Document = serde_json::from_str(text).map_err(parse_error)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ParseError::Version(doc.schema_version));
    }
    Ok(doc)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("values serialize")
}
