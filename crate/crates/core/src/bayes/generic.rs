use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, DensityMatrix, Svd, C64};
use crate::error::{Error, Result};
use crate::maps::{time_reversal, LinearMap};
use crate::sot::{formula, Branch, SotFamily};

/// Whether Bayes' rule pins down the Bayes map.
#[derive(Debug, Clone)]
pub enum Uniqueness {
    Unique,
    /// The solution set is an affine space of dimension `nullity`; the
    /// witnesses are distinct trace-preserving solutions.
    NonUnique { nullity: usize, witnesses: Vec<LinearMap> },
    /// Not determined by the routine that produced the map.
    Unknown,
}

impl Uniqueness {
    pub fn is_unique(&self) -> bool {
        matches!(self, Uniqueness::Unique)
    }
}

/// Output of [`generic_bayes`].
#[derive(Debug, Clone)]
pub struct GenericSolution {
    pub map: LinearMap,
    /// `||E⋆ρ - τ(~X ⋆ E(ρ))||` for the returned map.
    pub residual: f64,
    pub uniqueness: Uniqueness,
    /// Singular values of the reduced linear system, descending.
    pub singular_values: Vec<f64>,
}

/// Relative singular-value cut-off used to decide the rank.
pub const RANK_TOL: f64 = 1e-8;

/// `||E⋆ρ - τ(~X ⋆ E(ρ))||`, with both sides given by the family's formula
/// (extended linearly in the process argument).
pub fn bayes_residual(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix, x: &LinearMap) -> Result<f64> {
    if x.source() != e.target() || x.target() != e.source() {
        return Err(Error::ShapeMismatch("candidate map must run from the target back to the source".into()));
    }
    let forward = formula(family, e, rho, Branch::Support)?;
    let sigma = e.apply(rho)?.hermitian_part();
    let backward = time_reversal(&formula(family, &x.tilde(), &sigma, Branch::Support)?)?;
    Ok(forward.distance(&backward))
}

/// Solves Bayes' rule `E⋆ρ = τ(~X ⋆ E(ρ))` for a trace-preserving
/// `X: B → A` by constrained least squares.
///
/// `X ↦ τ(~X ⋆ σ)` is linear because `~` and `τ` are both conjugate linear
/// and the family is linear in its process argument. The trace-preservation
/// constraints are eliminated by parametrizing each column of `X`; rank is
/// decided with [`RANK_TOL`] relative to the largest singular value.
///
/// # Errors
/// [`Error::Unsupported`] for families that are not process-linear.
pub fn generic_bayes(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix) -> Result<GenericSolution> {
    if !family.is_process_linear() {
        return Err(Error::Unsupported(format!("{family} is not linear in the process")));
    }
    if !e.classification().trace_preserving {
        return Err(Error::NotTracePreserving { defect: e.defects().trace });
    }
    let a = e.source().clone();
    let b = e.target().clone();
    let da = a.algebra_dim();
    let db = b.algebra_dim();
    let sigma = e.apply(rho)?.hermitian_part();
    let target = formula(family, e, rho, Branch::Support)?.to_vector();
    let n_out = target.len();

    // columns of the full system: unknown (r, c) is entry X[r, c], index r * db + c
    let mut full = DMatrix::<C64>::zeros(n_out, da * db);
    let ta = crate::maps::transposed_units(&a);
    let tb = crate::maps::transposed_units(&b);
    for r in 0..da {
        for c in 0..db {
            // ~ of the single-entry map (r, c) is the single-entry map at the transposed units
            let mut m = DMatrix::zeros(da, db);
            m[(ta[r], tb[c])] = C64::new(1.0, 0.0);
            let tilde = LinearMap::new(b.clone(), a.clone(), m)?;
            let img = time_reversal(&formula(family, &tilde, &sigma, Branch::Support)?)?;
            full.set_column(r * db + c, &img.to_vector());
        }
    }

    // trace preservation: Σ_{diag d} X[d, c] = tr(e_c) for each column c
    let diag: Vec<usize> = (0..da)
        .filter(|&k| {
            let (_, i, j) = a.unit_at(k);
            i == j
        })
        .collect();
    let pivot = diag[0];
    let mut particular = DVector::<C64>::zeros(da * db);
    for c in 0..db {
        let (_, i, j) = b.unit_at(c);
        if i == j {
            particular[pivot * db + c] = C64::new(1.0, 0.0);
        }
    }
    let mut null_cols: Vec<DVector<C64>> = Vec::new();
    for c in 0..db {
        for r in 0..da {
            if r == pivot {
                continue;
            }
            let mut v = DVector::zeros(da * db);
            v[r * db + c] = C64::new(1.0, 0.0);
            if diag.contains(&r) {
                v[pivot * db + c] = C64::new(-1.0, 0.0);
            }
            null_cols.push(v);
        }
    }
    let basis = if null_cols.is_empty() {
        // one-dimensional source: trace preservation fixes every entry
        DMatrix::zeros(da * db, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    let reduced = &full * &basis;
    let rhs = &target - &full * &particular;

    let svd = Svd::new(&reduced);
    let sv = svd.singular_values().to_vec();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * smax.max(1.0);
    let nz = basis.ncols();
    let (z, rank) = svd.solve(&rhs, cut);
    let nullity = nz - rank;
    let to_map = |z: &DVector<C64>| -> Result<LinearMap> {
        let x = &particular + &basis * z;
        let m = DMatrix::from_fn(da, db, |r, c| x[r * db + c]);
        LinearMap::new(b.clone(), a.clone(), m)
    };
    let map = to_map(&z)?;
    let residual = (&full * (&particular + &basis * &z) - &target).norm();
    let uniqueness = if nullity == 0 {
        Uniqueness::Unique
    } else {
        // shift along a null direction; unit length keeps the witness well separated
        let dir = svd.smallest_right_vector();
        let other = to_map(&(&z + dir))?;
        Uniqueness::NonUnique {
            nullity,
            witnesses: vec![map.clone(), other],
        }
    };
    Ok(GenericSolution {
        map,
        residual,
        uniqueness,
        singular_values: sv,
    })
}

/// Convenience: the element `τ(~X ⋆ E(ρ))` for a candidate Bayes map.
pub fn reversed_state(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix, x: &LinearMap) -> Result<AlgebraElement> {
    let sigma = e.apply(rho)?.hermitian_part();
    time_reversal(&formula(family, &x.tilde(), &sigma, Branch::Support)?)
}
