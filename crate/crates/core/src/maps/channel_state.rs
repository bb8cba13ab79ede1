use nalgebra::DMatrix;

use super::linear_map::LinearMap;
use crate::algebra::{AlgebraElement, AlgebraShape, C64};
use crate::error::{Error, Result};

/// Fills block `(x, y)` slot `(i, j)` with `E(E^x_ij)` (Choi) or
/// `E(E^x_ji)` (channel state).
pub(crate) fn unit_table(e: &LinearMap, swapped: bool) -> AlgebraElement {
    let src = e.source();
    let tgt = e.target();
    let shape = AlgebraShape::tensor(src, tgt);
    let nb = tgt.num_blocks();
    let mut blocks = Vec::with_capacity(shape.num_blocks());
    let m = e.matrix();
    for x in 0..src.num_blocks() {
        let mx = src.block_dim(x);
        for y in 0..nb {
            let ny = tgt.block_dim(y);
            let mut b = DMatrix::zeros(mx * ny, mx * ny);
            for i in 0..mx {
                for j in 0..mx {
                    let col = if swapped { src.unit_index(x, j, i) } else { src.unit_index(x, i, j) };
                    for k in 0..ny {
                        for l in 0..ny {
                            b[(i * ny + k, j * ny + l)] = m[(tgt.unit_index(y, k, l), col)];
                        }
                    }
                }
            }
            blocks.push(b);
        }
    }
    AlgebraElement::new(shape, blocks).expect("tensor blocks have matching sizes")
}

pub(crate) fn from_unit_table(t: &AlgebraElement, swapped: bool) -> Result<LinearMap> {
    let (src, tgt) = t.shape().require_factors()?;
    let nb = tgt.num_blocks();
    let mut m = DMatrix::zeros(tgt.algebra_dim(), src.algebra_dim());
    for x in 0..src.num_blocks() {
        let mx = src.block_dim(x);
        for y in 0..nb {
            let ny = tgt.block_dim(y);
            let b = t.block(x * nb + y);
            for i in 0..mx {
                for j in 0..mx {
                    let col = if swapped { src.unit_index(x, j, i) } else { src.unit_index(x, i, j) };
                    for k in 0..ny {
                        for l in 0..ny {
                            m[(tgt.unit_index(y, k, l), col)] = b[(i * ny + k, j * ny + l)];
                        }
                    }
                }
            }
        }
    }
    LinearMap::new(src.clone(), tgt.clone(), m)
}

/// `μ*(1_A) = Σ_x Σ_ij E^x_ij ⊗ E^x_ji`, the adjoint of multiplication
/// applied to the unit. It sits in the diagonal blocks `(x, x)` of `A ⊗ A`,
/// where it is the swap operator.
pub fn mu_adjoint_unit(shape: &AlgebraShape) -> AlgebraElement {
    unit_table(&LinearMap::identity(shape), true)
}

/// Channel state `D[E] = (id ⊗ E)(μ*(1_A)) = Σ_ij E_ij ⊗ E(E_ji)` on `A ⊗ B`.
pub fn channel_state(e: &LinearMap) -> AlgebraElement {
    unit_table(e, true)
}

/// Inverse of [`channel_state`].
///
/// # Errors
/// [`Error::NotTensorShape`] if the element has no recorded factors.
pub fn channel_from_state(d: &AlgebraElement) -> Result<LinearMap> {
    from_unit_table(d, true)
}

/// Time-reversal `τ: B ⊗ A → A ⊗ B`, the conjugate-linear extension of
/// `b ⊗ a ↦ a^dagger ⊗ b^dagger`.
pub fn time_reversal(t: &AlgebraElement) -> Result<AlgebraElement> {
    Ok(t.swap_factors()?.adjoint())
}

/// `(Φ ⊗ id)(t)` for `t` on `A ⊗ B` and `Φ: A → A'`.
pub fn apply_first(phi: &LinearMap, t: &AlgebraElement) -> Result<AlgebraElement> {
    let (a, b) = t.shape().require_factors()?;
    if phi.source() != a {
        return Err(Error::ShapeMismatch(format!("map from {} applied to first factor {}", phi.source(), a)));
    }
    let ap = phi.target();
    let nb = b.num_blocks();
    let mut out = AlgebraElement::zeros(&AlgebraShape::tensor(ap, b));
    for x in 0..a.num_blocks() {
        let mx = a.block_dim(x);
        for i in 0..mx {
            for j in 0..mx {
                let img = phi.image_of_unit(a.unit_index(x, i, j));
                for y in 0..nb {
                    let slot = t.tensor_slot(x, y, i, j)?;
                    if slot.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                        continue;
                    }
                    for xp in 0..ap.num_blocks() {
                        let p = img.block(xp);
                        if p.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                            continue;
                        }
                        *out.block_mut(xp * nb + y) += p.kronecker(&slot);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `(id ⊗ Φ)(t)` for `t` on `A ⊗ B` and `Φ: B → B'`.
pub fn apply_second(phi: &LinearMap, t: &AlgebraElement) -> Result<AlgebraElement> {
    let swapped = t.swap_factors()?;
    apply_first(phi, &swapped)?.swap_factors()
}

/// Decomposition `E = C1 - C2 + i C3 - i C4` into completely positive maps.
#[derive(Debug, Clone)]
pub struct CpDecomposition {
    pub parts: [LinearMap; 4],
}

impl CpDecomposition {
    /// `C1 - C2 + i C3 - i C4`.
    pub fn recombine(&self) -> LinearMap {
        let [c1, c2, c3, c4] = &self.parts;
        let i = C64::new(0.0, 1.0);
        let re = c1.sub(c2).expect("parallel parts");
        let im = c3.sub(c4).expect("parallel parts");
        re.add(&im.scale(i)).expect("parallel parts")
    }
}

/// Splits the Choi matrix into hermitian and anti-hermitian parts and each of
/// those into positive and negative spectral parts.
pub fn cp_decompose(e: &LinearMap) -> CpDecomposition {
    let choi = e.choi();
    let h1 = choi.hermitian_part();
    let h2 = choi.antihermitian_part();
    let split = |h: &AlgebraElement| {
        let sys = crate::algebra::eigh_unchecked(h);
        let pos = crate::algebra::apply_spectral(&sys, h.shape(), |l| C64::new(l.max(0.0), 0.0));
        let neg = crate::algebra::apply_spectral(&sys, h.shape(), |l| C64::new((-l).max(0.0), 0.0));
        (pos, neg)
    };
    let (p1, n1) = split(&h1);
    let (p2, n2) = split(&h2);
    let to_map = |c: &AlgebraElement| LinearMap::from_choi(c).expect("choi keeps its tensor shape");
    CpDecomposition {
        parts: [to_map(&p1), to_map(&n1), to_map(&p2), to_map(&n2)],
    }
}
