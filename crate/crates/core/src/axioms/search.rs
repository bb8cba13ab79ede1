//! Block-positivity search over product vectors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{eigh_matrix, AlgebraElement, C64};
use crate::error::Result;
use crate::random::random_unit_vector;

/// Product vector `a ⊗ b` in block `(x, y)` of `A ⊗ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductVectors {
    pub block_a: usize,
    pub block_b: usize,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

/// `⟨a ⊗ b| T |a ⊗ b⟩` for `T` on `A ⊗ B`.
pub fn product_pairing(t: &AlgebraElement, v: &ProductVectors) -> Result<C64> {
    let (_, fb) = t.shape().require_factors()?;
    let m = t.block(v.block_a * fb.num_blocks() + v.block_b);
    let a = DVector::from_column_slice(&v.a);
    let b = DVector::from_column_slice(&v.b);
    let ab = a.kronecker(&b);
    Ok(ab.dotc(&(m * &ab)))
}

// (1 ⊗ <b|) M (1 ⊗ |b>)
fn reduce_second(m: &DMatrix<C64>, b: &DVector<C64>, na: usize, nb: usize) -> DMatrix<C64> {
    DMatrix::from_fn(na, na, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..nb {
            for l in 0..nb {
                s += b[k].conj() * m[(i * nb + k, j * nb + l)] * b[l];
            }
        }
        s
    })
}

// (<a| ⊗ 1) M (|a> ⊗ 1)
fn reduce_first(m: &DMatrix<C64>, a: &DVector<C64>, na: usize, nb: usize) -> DMatrix<C64> {
    DMatrix::from_fn(nb, nb, |k, l| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..na {
            for j in 0..na {
                s += a[i].conj() * m[(i * nb + k, j * nb + l)] * a[j];
            }
        }
        s
    })
}

fn lowest(m: &DMatrix<C64>) -> (f64, DVector<C64>) {
    let (vals, vecs) = eigh_matrix(m);
    (vals[0], vecs.column(0).into_owned())
}

/// Minimizes `⟨a ⊗ b| H |a ⊗ b⟩` over unit product vectors for a hermitian
/// block `H` by alternating exact minimization in `a` and `b`.
fn see_saw(h: &DMatrix<C64>, na: usize, nb: usize, b0: DVector<C64>) -> (f64, DVector<C64>, DVector<C64>) {
    let mut b = b0;
    let mut best = f64::INFINITY;
    let mut a = DVector::zeros(na);
    for _ in 0..60 {
        let (_, a_new) = lowest(&reduce_second(h, &b, na, nb));
        a = a_new;
        let (val, b_new) = lowest(&reduce_first(h, &a, na, nb));
        b = b_new;
        if best - val < 1e-14 {
            best = best.min(val);
            break;
        }
        best = val;
    }
    (best, a, b)
}

/// Outcome of the block-positivity search.
#[derive(Debug, Clone)]
pub struct BlockPositivity {
    /// Smallest value of `Re⟨a ⊗ b|T|a ⊗ b⟩` found.
    pub min_real: f64,
    /// Largest `|Im⟨a ⊗ b|T|a ⊗ b⟩|` found.
    pub max_imag: f64,
    /// Product vector attaining the violation `max(-min_real, max_imag)`.
    pub witness: ProductVectors,
}

impl BlockPositivity {
    pub fn violation(&self) -> f64 {
        (-self.min_real).max(self.max_imag).max(0.0)
    }
}

/// Multi-start search for product vectors with a negative or complex
/// pairing against `T`. The imaginary part is only searched when `T` is not
/// hermitian to `herm_tol`.
pub fn block_positivity(t: &AlgebraElement, starts: usize, herm_tol: f64, rng: &mut impl Rng) -> Result<BlockPositivity> {
    let (fa, fb) = t.shape().require_factors()?;
    let (fa, fb) = (fa.clone(), fb.clone());
    let hermitian = t.hermitian_defect() <= herm_tol;
    let h = t.hermitian_part();
    let k = t.antihermitian_part();
    let mut out = BlockPositivity {
        min_real: f64::INFINITY,
        max_imag: 0.0,
        witness: ProductVectors { block_a: 0, block_b: 0, a: vec![], b: vec![] },
    };
    let mut best_violation = f64::NEG_INFINITY;
    let pairs: Vec<(usize, usize)> = (0..fa.num_blocks())
        .flat_map(|x| (0..fb.num_blocks()).map(move |y| (x, y)))
        .collect();
    for s in 0..starts.max(1) {
        let (x, y) = pairs[s % pairs.len()];
        let (na, nb) = (fa.block_dim(x), fb.block_dim(y));
        let idx = x * fb.num_blocks() + y;
        let b0 = random_unit_vector(rng, nb);
        let mut candidates = vec![see_saw(h.block(idx), na, nb, b0.clone())];
        if !hermitian {
            let kb = k.block(idx);
            candidates.push(see_saw(kb, na, nb, b0.clone()));
            candidates.push(see_saw(&-kb, na, nb, b0));
        }
        for (_, a, b) in candidates {
            let v = ProductVectors {
                block_a: x,
                block_b: y,
                a: a.iter().copied().collect(),
                b: b.iter().copied().collect(),
            };
            let z = product_pairing(t, &v)?;
            out.min_real = out.min_real.min(z.re);
            out.max_imag = out.max_imag.max(z.im.abs());
            let viol = (-z.re).max(z.im.abs());
            if viol > best_violation {
                best_violation = viol;
                out.witness = v;
            }
        }
    }
    Ok(out)
}
