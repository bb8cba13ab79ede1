use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraShape, DensityMatrix, C64};
use crate::maps::{channel_state, LinearMap};
use crate::random::{normal, random_shape, ChannelParams, StateParams, UnitaryParams};
use crate::tolerance::Tolerances;

/// Construction behind a commuting channel–state pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalPairKind {
    /// Replacement channel `A ↦ tr(A) σ` with any prior.
    Replacement,
    /// Measure in the eigenbasis of the prior, then prepare.
    MeasurePrepare,
    /// Central prior `⊕_x p_x 1/m_x` with any channel.
    Central,
    /// Stochastic matrix between commutative algebras.
    Classical,
}

impl ClassicalPairKind {
    pub const ALL: [ClassicalPairKind; 4] = [
        ClassicalPairKind::Replacement,
        ClassicalPairKind::MeasurePrepare,
        ClassicalPairKind::Central,
        ClassicalPairKind::Classical,
    ];
}

/// Parameters of a commuting pair; see [`ClassicalPairKind`].
#[derive(Debug, Clone)]
pub enum ClassicalPairParams {
    Replacement {
        prior: StateParams,
        output: StateParams,
    },
    MeasurePrepare {
        basis: UnitaryParams,
        logits: Vec<f64>,
        outputs: Vec<StateParams>,
    },
    Central {
        source: AlgebraShape,
        logits: Vec<f64>,
        channel: ChannelParams,
    },
    Classical {
        prior_logits: Vec<f64>,
        channel_logits: DMatrix<f64>,
    },
}

/// A channel and prior with `[D[E], ρ ⊗ 1] = 0`.
#[derive(Debug, Clone)]
pub struct ClassicalPair {
    pub kind: ClassicalPairKind,
    pub channel: LinearMap,
    pub prior: DensityMatrix,
}

fn softmax(u: &[f64]) -> Vec<f64> {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = u.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl ClassicalPairParams {
    /// Samples a pair of the given kind. With `matrix_only` the algebras are
    /// single matrix blocks (and `Central`/`Classical` fall back to
    /// `Replacement`, since their priors would be degenerate or their
    /// algebras commutative).
    pub fn sample(rng: &mut impl Rng, kind: ClassicalPairKind, matrix_only: bool) -> Self {
        let kind = if matrix_only && matches!(kind, ClassicalPairKind::Central | ClassicalPairKind::Classical) {
            ClassicalPairKind::Replacement
        } else {
            kind
        };
        let a = random_shape(rng, 3, matrix_only);
        let b = random_shape(rng, 3, matrix_only);
        match kind {
            ClassicalPairKind::Replacement => ClassicalPairParams::Replacement {
                prior: StateParams::sample(rng, &a),
                output: StateParams::sample(rng, &b),
            },
            ClassicalPairKind::MeasurePrepare => {
                let n = a.hilbert_dim();
                ClassicalPairParams::MeasurePrepare {
                    basis: UnitaryParams::sample(rng, &a),
                    logits: (0..n).map(|_| normal(rng)).collect(),
                    outputs: (0..n).map(|_| StateParams::sample(rng, &b)).collect(),
                }
            }
            ClassicalPairKind::Central => ClassicalPairParams::Central {
                logits: (0..a.num_blocks()).map(|_| normal(rng)).collect(),
                channel: ChannelParams::sample(rng, &a, &b),
                source: a,
            },
            ClassicalPairKind::Classical => {
                let nx = rng.gen_range(2..=5);
                let ny = rng.gen_range(2..=5);
                ClassicalPairParams::Classical {
                    prior_logits: (0..nx).map(|_| normal(rng)).collect(),
                    channel_logits: DMatrix::from_fn(ny, nx, |_, _| normal(rng)),
                }
            }
        }
    }

    pub fn kind(&self) -> ClassicalPairKind {
        match self {
            ClassicalPairParams::Replacement { .. } => ClassicalPairKind::Replacement,
            ClassicalPairParams::MeasurePrepare { .. } => ClassicalPairKind::MeasurePrepare,
            ClassicalPairParams::Central { .. } => ClassicalPairKind::Central,
            ClassicalPairParams::Classical { .. } => ClassicalPairKind::Classical,
        }
    }

    pub fn realize(&self) -> ClassicalPair {
        let (channel, prior) = match self {
            ClassicalPairParams::Replacement { prior, output } => {
                let rho = prior.realize();
                let e = LinearMap::replacement(rho.shape(), &output.realize());
                (e, rho)
            }
            ClassicalPairParams::MeasurePrepare { basis, logits, outputs } => {
                let u = basis.realize();
                let shape = u.shape().clone();
                let p = softmax(logits);
                let mut rho = AlgebraElement::zeros(&shape);
                let mut vectors = Vec::new();
                let mut k = 0;
                for x in 0..shape.num_blocks() {
                    for j in 0..shape.block_dim(x) {
                        let v = u.block(x).column(j).clone_owned();
                        *rho.block_mut(x) += &v * v.adjoint() * C64::new(p[k], 0.0);
                        vectors.push((x, v));
                        k += 1;
                    }
                }
                let sigmas: Vec<DensityMatrix> = outputs.iter().map(|o| o.realize()).collect();
                let target = sigmas[0].shape().clone();
                let e = LinearMap::from_fn(&shape, &target, |a| {
                    let mut out = AlgebraElement::zeros(&target);
                    for ((x, v), s) in vectors.iter().zip(&sigmas) {
                        let w = (v.adjoint() * a.block(*x) * v)[(0, 0)];
                        out = &out + &s.scale(w);
                    }
                    out
                });
                (e, DensityMatrix::new(rho.hermitian_part()).expect("convex mixture of projectors"))
            }
            ClassicalPairParams::Central { source, logits, channel } => {
                let p = softmax(logits);
                let blocks = source
                    .dims()
                    .into_iter()
                    .zip(&p)
                    .map(|(m, &px)| DMatrix::from_diagonal_element(m, m, C64::new(px / m as f64, 0.0)))
                    .collect();
                let rho = AlgebraElement::new(source.clone(), blocks).expect("central blocks");
                (channel.realize(), DensityMatrix::new(rho).expect("central state"))
            }
            ClassicalPairParams::Classical { prior_logits, channel_logits } => {
                let p = softmax(prior_logits);
                let mut f = DMatrix::zeros(channel_logits.nrows(), channel_logits.ncols());
                for x in 0..f.ncols() {
                    let col: Vec<f64> = channel_logits.column(x).iter().copied().collect();
                    for (y, v) in softmax(&col).into_iter().enumerate() {
                        f[(y, x)] = v;
                    }
                }
                (
                    LinearMap::classical_channel(&f).expect("softmax columns"),
                    DensityMatrix::from_probabilities(&p).expect("softmax prior"),
                )
            }
        };
        ClassicalPair {
            kind: self.kind(),
            channel,
            prior,
        }
    }

    pub fn perturb(&self, rng: &mut impl Rng, eps: f64) -> Self {
        match self {
            ClassicalPairParams::Replacement { prior, output } => ClassicalPairParams::Replacement {
                prior: prior.perturb(rng, eps),
                output: output.perturb(rng, eps),
            },
            ClassicalPairParams::MeasurePrepare { basis, logits, outputs } => ClassicalPairParams::MeasurePrepare {
                basis: basis.perturb(rng, eps),
                logits: logits.iter().map(|l| l + eps * normal(rng)).collect(),
                outputs: outputs.iter().map(|o| o.perturb(rng, eps)).collect(),
            },
            ClassicalPairParams::Central { source, logits, channel } => ClassicalPairParams::Central {
                source: source.clone(),
                logits: logits.iter().map(|l| l + eps * normal(rng)).collect(),
                channel: channel.perturb(rng, eps),
            },
            ClassicalPairParams::Classical { prior_logits, channel_logits } => ClassicalPairParams::Classical {
                prior_logits: prior_logits.iter().map(|l| l + eps * normal(rng)).collect(),
                channel_logits: channel_logits.map(|l| l + eps * normal(rng)),
            },
        }
    }
}

/// `||[D[E], ρ ⊗ 1]||`.
pub fn commutation_defect(e: &LinearMap, rho: &AlgebraElement) -> f64 {
    let d = channel_state(e);
    let r = rho.tensor(&AlgebraElement::identity(e.target()));
    d.commutator(&r).norm()
}

/// `n` random commuting pairs, cycling through the four constructions.
/// Every returned pair has commutation defect below `1e-12`.
pub fn classical_limit_pairs(rng: &mut impl Rng, n: usize, matrix_only: bool) -> Vec<ClassicalPair> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while out.len() < n {
        let kind = ClassicalPairKind::ALL[k % 4];
        k += 1;
        let pair = ClassicalPairParams::sample(rng, kind, matrix_only).realize();
        if commutation_defect(&pair.channel, &pair.prior) < 1e-12 {
            out.push(pair);
        }
    }
    out
}

/// Smallest gap between distinct nonzero eigenvalues is above the grouping
/// tolerance, i.e. no nonzero eigenvalue repeats.
pub fn has_simple_spectrum(rho: &AlgebraElement) -> bool {
    let sys = crate::algebra::eigh_unchecked(rho);
    let mut vals: Vec<f64> = sys
        .values
        .into_iter()
        .flatten()
        .filter(|&l| l > Tolerances::DEFAULT.faithfulness)
        .collect();
    vals.sort_by(f64::total_cmp);
    vals.windows(2).all(|w| w[1] - w[0] > 1e3 * Tolerances::DEFAULT.eigen_group)
}
