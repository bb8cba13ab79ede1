//! Seeded samplers for states, channels and unitaries.
//!
//! Every sampler draws only Gaussian numbers from the supplied generator, and
//! the parameter structs ([`StateParams`], [`ChannelParams`],
//! [`UnitaryParams`]) keep those draws so that instances can be perturbed and
//! re-realized during counterexample searches.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{eigh_matrix, AlgebraElement, AlgebraShape, DensityMatrix, C64};
use crate::maps::{KrausOperator, LinearMap};

pub type Rng64 = ChaCha8Rng;

/// Deterministic generator for a seed.
pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of counters.
pub fn derive_seed(base: u64, counters: &[u64]) -> u64 {
    counters.iter().fold(splitmix(base), |acc, &c| splitmix(acc ^ splitmix(c)))
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

fn perturb_matrix(m: &DMatrix<C64>, rng: &mut impl Rng, eps: f64) -> DMatrix<C64> {
    m + ginibre(rng, m.nrows(), m.ncols()) * C64::new(eps, 0.0)
}

/// Isometric part `Z (Z^dagger Z)^{-1/2}` of the polar decomposition.
pub fn polar_isometry(z: &DMatrix<C64>) -> DMatrix<C64> {
    let g = z.adjoint() * z;
    let (vals, vecs) = eigh_matrix(&g);
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let f = C64::new(1.0 / l.max(1e-300).sqrt(), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= f;
        }
    }
    z * (scaled * vecs.adjoint())
}

/// Softmax of Gaussian logits: a strictly positive probability vector.
fn softmax(u: &[f64]) -> Vec<f64> {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = u.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gaussian draws behind a random state: one Ginibre matrix per block and
/// logits for the block weights.
#[derive(Debug, Clone)]
pub struct StateParams {
    pub shape: AlgebraShape,
    pub ginibre: Vec<DMatrix<C64>>,
    pub logits: Vec<f64>,
}

impl StateParams {
    pub fn sample(rng: &mut impl Rng, shape: &AlgebraShape) -> Self {
        Self {
            shape: shape.clone(),
            ginibre: shape.dims().into_iter().map(|m| ginibre(rng, m, m)).collect(),
            logits: (0..shape.num_blocks()).map(|_| normal(rng)).collect(),
        }
    }

    /// `ρ = ⊕_x w_x G_x G_x^dagger / tr(G_x G_x^dagger)`.
    pub fn realize(&self) -> DensityMatrix {
        let w = softmax(&self.logits);
        let blocks = self
            .ginibre
            .iter()
            .zip(&w)
            .map(|(g, &wx)| {
                let p = g * g.adjoint();
                let tr = p.trace().re;
                p * C64::new(wx / tr, 0.0)
            })
            .collect();
        let a = AlgebraElement::new(self.shape.clone(), blocks).expect("blocks follow the shape");
        DensityMatrix::new(a.hermitian_part()).expect("Ginibre construction is a state")
    }

    pub fn perturb(&self, rng: &mut impl Rng, eps: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            ginibre: self.ginibre.iter().map(|g| perturb_matrix(g, rng, eps)).collect(),
            logits: self.logits.iter().map(|l| l + eps * normal(rng)).collect(),
        }
    }
}

/// Gaussian draws behind a random unitary (polar part of a Ginibre matrix,
/// which is Haar distributed).
#[derive(Debug, Clone)]
pub struct UnitaryParams {
    pub shape: AlgebraShape,
    pub ginibre: Vec<DMatrix<C64>>,
}

impl UnitaryParams {
    pub fn sample(rng: &mut impl Rng, shape: &AlgebraShape) -> Self {
        Self {
            shape: shape.clone(),
            ginibre: shape.dims().into_iter().map(|m| ginibre(rng, m, m)).collect(),
        }
    }

    pub fn realize(&self) -> AlgebraElement {
        let blocks = self.ginibre.iter().map(polar_isometry).collect();
        AlgebraElement::new(self.shape.clone(), blocks).expect("blocks follow the shape")
    }

    pub fn perturb(&self, rng: &mut impl Rng, eps: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            ginibre: self.ginibre.iter().map(|g| perturb_matrix(g, rng, eps)).collect(),
        }
    }
}

/// Gaussian draws behind a random channel: for every source block a Ginibre
/// matrix whose polar part is a Stinespring isometry into
/// `(⊕_y C^{n_y}) ⊗ C^env`.
#[derive(Debug, Clone)]
pub struct ChannelParams {
    pub source: AlgebraShape,
    pub target: AlgebraShape,
    pub env: usize,
    pub dilations: Vec<DMatrix<C64>>,
}

impl ChannelParams {
    /// Environment dimension is twice the Hilbert-space dimension of the
    /// source.
    pub fn sample(rng: &mut impl Rng, source: &AlgebraShape, target: &AlgebraShape) -> Self {
        let env = 2 * source.hilbert_dim();
        let rows = target.hilbert_dim() * env;
        Self {
            source: source.clone(),
            target: target.clone(),
            env,
            dilations: source.dims().into_iter().map(|m| ginibre(rng, rows, m)).collect(),
        }
    }

    pub fn kraus_operators(&self) -> Vec<KrausOperator> {
        let mut ops = Vec::new();
        for (x, z) in self.dilations.iter().enumerate() {
            let v = polar_isometry(z);
            let mut off = 0;
            for y in 0..self.target.num_blocks() {
                let n = self.target.block_dim(y);
                for e in 0..self.env {
                    let rows: Vec<usize> = (0..n).map(|k| (off + k) * self.env + e).collect();
                    let k = DMatrix::from_fn(n, v.ncols(), |r, c| v[(rows[r], c)]);
                    ops.push(KrausOperator { from: x, to: y, matrix: k });
                }
                off += n;
            }
        }
        ops
    }

    pub fn realize(&self) -> LinearMap {
        LinearMap::from_kraus(&self.source, &self.target, &self.kraus_operators()).expect("Kraus sizes follow shapes")
    }

    pub fn perturb(&self, rng: &mut impl Rng, eps: f64) -> Self {
        Self {
            source: self.source.clone(),
            target: self.target.clone(),
            env: self.env,
            dilations: self.dilations.iter().map(|g| perturb_matrix(g, rng, eps)).collect(),
        }
    }
}

pub fn random_state(rng: &mut impl Rng, shape: &AlgebraShape) -> DensityMatrix {
    StateParams::sample(rng, shape).realize()
}

pub fn random_channel(rng: &mut impl Rng, source: &AlgebraShape, target: &AlgebraShape) -> LinearMap {
    ChannelParams::sample(rng, source, target).realize()
}

pub fn random_unitary(rng: &mut impl Rng, shape: &AlgebraShape) -> AlgebraElement {
    UnitaryParams::sample(rng, shape).realize()
}

/// Haar-random unitary matrix of size `n`.
pub fn random_unitary_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
    polar_isometry(&ginibre(rng, n, n))
}

/// Random unit vector in `C^n`.
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> nalgebra::DVector<C64> {
    let g = ginibre(rng, n, 1);
    let norm = g.norm();
    nalgebra::DVector::from_column_slice((g / C64::new(norm, 0.0)).as_slice())
}

/// Strictly positive probability vector.
pub fn random_probabilities(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let u: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
    softmax(&u)
}

/// Column-stochastic `ny x nx` matrix with strictly positive entries.
pub fn random_stochastic(rng: &mut impl Rng, ny: usize, nx: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(ny, nx);
    for x in 0..nx {
        let p = random_probabilities(rng, ny);
        for y in 0..ny {
            f[(y, x)] = p[y];
        }
    }
    f
}

/// Random hermitian element with Gaussian entries.
pub fn random_hermitian(rng: &mut impl Rng, shape: &AlgebraShape) -> AlgebraElement {
    let blocks = shape
        .dims()
        .into_iter()
        .map(|m| {
            let g = ginibre(rng, m, m);
            (&g + g.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect();
    AlgebraElement::new(shape.clone(), blocks).expect("blocks follow the shape")
}

/// Random element with Gaussian entries (not hermitian).
pub fn random_element(rng: &mut impl Rng, shape: &AlgebraShape) -> AlgebraElement {
    let blocks = shape.dims().into_iter().map(|m| ginibre(rng, m, m)).collect();
    AlgebraElement::new(shape.clone(), blocks).expect("blocks follow the shape")
}

/// Unital channel `Σ_k p_k Ad_{U_k}` on `M_n`.
pub fn random_unital_channel(rng: &mut impl Rng, shape: &AlgebraShape, terms: usize) -> LinearMap {
    let p = random_probabilities(rng, terms);
    let mut acc = LinearMap::zero(shape, shape);
    for pk in p {
        let u = random_unitary(rng, shape);
        acc = acc
            .add(&LinearMap::conjugation(&u).scale(C64::new(pk, 0.0)))
            .expect("same shapes");
    }
    acc
}

/// Random shape with every block of dimension at most `max_dim` and total
/// Hilbert-space dimension at most `max_dim`.
pub fn random_shape(rng: &mut impl Rng, max_dim: usize, single_block: bool) -> AlgebraShape {
    let mut options: Vec<Vec<usize>> = Vec::new();
    for n in 2..=max_dim.max(2) {
        options.push(vec![n]);
        options.push(vec![n]);
    }
    if !single_block {
        options.push(vec![1, 1]);
        if max_dim >= 3 {
            options.push(vec![1, 2]);
            options.push(vec![2, 1]);
            options.push(vec![1, 1, 1]);
        }
    }
    let k = rng.gen_range(0..options.len());
    AlgebraShape::from_dims(&options[k]).expect("nonempty positive dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let s = AlgebraShape::from_dims(&[2, 1]).unwrap();
        let a = random_state(&mut rng(5), &s);
        let b = random_state(&mut rng(5), &s);
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    }

    #[test]
    fn random_channels_are_cptp() {
        let mut r = rng(11);
        for _ in 0..20 {
            let src = random_shape(&mut r, 3, false);
            let tgt = random_shape(&mut r, 3, false);
            let e = random_channel(&mut r, &src, &tgt);
            assert!(e.is_cptp(), "{src} -> {tgt}");
        }
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut r = rng(3);
        let s = AlgebraShape::from_dims(&[3, 1]).unwrap();
        let u = random_unitary(&mut r, &s);
        assert!((&u * &u.adjoint()).distance(&AlgebraElement::identity(&s)) < 1e-13);
    }

    #[test]
    fn random_unital_is_unital() {
        let mut r = rng(4);
        let e = random_unital_channel(&mut r, &AlgebraShape::matrix(3), 3);
        let c = e.classification();
        assert!(c.unital && c.is_cptp());
    }
}
