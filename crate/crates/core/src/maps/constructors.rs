use nalgebra::DMatrix;

use super::linear_map::LinearMap;
use crate::algebra::{AlgebraElement, AlgebraShape, DensityMatrix, Factor, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// One Kraus operator between blocks: a `dim(to) x dim(from)` matrix acting
/// from source block `from` into target block `to`.
#[derive(Debug, Clone)]
pub struct KrausOperator {
    pub from: usize,
    pub to: usize,
    pub matrix: DMatrix<C64>,
}

impl LinearMap {
    /// `Ad_K: X ↦ K X K^dagger` on the algebra of `K`.
    pub fn conjugation(k: &AlgebraElement) -> LinearMap {
        let kd = k.adjoint();
        LinearMap::from_fn(k.shape(), k.shape(), |x| &(k * x) * &kd)
    }

    /// `L_B: X ↦ B X`.
    pub fn left_multiplication(b: &AlgebraElement) -> LinearMap {
        LinearMap::from_fn(b.shape(), b.shape(), |x| b * x)
    }

    /// `R_B: X ↦ X B`.
    pub fn right_multiplication(b: &AlgebraElement) -> LinearMap {
        LinearMap::from_fn(b.shape(), b.shape(), |x| x * b)
    }

    /// Unitary channel `Ad_U`.
    ///
    /// # Errors
    /// [`Error::InvalidArgument`] if `U` is not unitary to `atol`.
    pub fn unitary_channel(u: &AlgebraElement) -> Result<LinearMap> {
        let defect = (&(u * &u.adjoint()) - &AlgebraElement::identity(u.shape())).norm();
        if defect > Tolerances::DEFAULT.atol {
            return Err(Error::InvalidArgument(format!("not unitary (defect {defect:.3e})")));
        }
        Ok(Self::conjugation(u))
    }

    /// Map `X ↦ Σ K X K^dagger` from blockwise Kraus operators.
    ///
    /// # Errors
    /// [`Error::ShapeMismatch`] for block indices or sizes that do not fit.
    pub fn from_kraus(source: &AlgebraShape, target: &AlgebraShape, ops: &[KrausOperator]) -> Result<LinearMap> {
        for op in ops {
            if op.from >= source.num_blocks() || op.to >= target.num_blocks() {
                return Err(Error::ShapeMismatch("Kraus block index out of range".into()));
            }
            if op.matrix.ncols() != source.block_dim(op.from) || op.matrix.nrows() != target.block_dim(op.to) {
                return Err(Error::ShapeMismatch("Kraus operator has wrong size".into()));
            }
        }
        Ok(LinearMap::from_fn(source, target, |a| {
            let mut out = AlgebraElement::zeros(target);
            for op in ops {
                *out.block_mut(op.to) += &op.matrix * a.block(op.from) * op.matrix.adjoint();
            }
            out
        }))
    }

    /// Kraus map `M_m → M_n` from `n x m` operators.
    pub fn kraus(ops: &[DMatrix<C64>]) -> Result<LinearMap> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("no Kraus operators".into()))?;
        let source = AlgebraShape::matrix(first.ncols());
        let target = AlgebraShape::matrix(first.nrows());
        let ops: Vec<KrausOperator> = ops
            .iter()
            .map(|m| KrausOperator { from: 0, to: 0, matrix: m.clone() })
            .collect();
        Self::from_kraus(&source, &target, &ops)
    }

    /// Classical channel `C^X → C^Y` from a column-stochastic matrix with
    /// `f[(y, x)] = P(y | x)`.
    ///
    /// # Errors
    /// [`Error::InvalidArgument`] for negative entries or columns not summing
    /// to one.
    pub fn classical_channel(f: &DMatrix<f64>) -> Result<LinearMap> {
        let tol = Tolerances::DEFAULT.atol;
        for x in 0..f.ncols() {
            let col = f.column(x);
            if col.iter().any(|&v| v < -tol) || (col.sum() - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("column {x} is not a probability vector")));
            }
        }
        let source = AlgebraShape::classical(f.ncols());
        let target = AlgebraShape::classical(f.nrows());
        let m = f.map(|v| C64::new(v, 0.0));
        LinearMap::new(source, target, m)
    }

    /// Measurement channel `A ↦ ⊕_y tr(M_y A)` into `C^Y`.
    ///
    /// # Errors
    /// [`Error::InvalidArgument`] unless the effects are positive and sum to
    /// the unit.
    pub fn povm(effects: &[AlgebraElement]) -> Result<LinearMap> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty POVM".into()))?;
        let shape = first.shape().clone();
        let tol = Tolerances::DEFAULT;
        let mut sum = AlgebraElement::zeros(&shape);
        for (y, m) in effects.iter().enumerate() {
            let sys = crate::algebra::eigh(m)
                .map_err(|_| Error::InvalidArgument(format!("effect {y} is not hermitian")))?;
            if sys.min() < -tol.atol {
                return Err(Error::InvalidArgument(format!("effect {y} is not positive")));
            }
            sum = sum
                .checked_add(m)
                .map_err(|_| Error::InvalidArgument("effects have different shapes".into()))?;
        }
        if sum.distance(&AlgebraElement::identity(&shape)) > tol.atol {
            return Err(Error::InvalidArgument("effects do not sum to the unit".into()));
        }
        let target = AlgebraShape::classical(effects.len());
        let m = DMatrix::from_fn(effects.len(), shape.algebra_dim(), |y, k| {
            let (x, i, j) = shape.unit_at(k);
            effects[y].block(x)[(j, i)]
        });
        LinearMap::new(shape, target, m)
    }

    /// Preparation channel `C^X → A`, `δ_x ↦ ρ_x`.
    pub fn ensemble(states: &[DensityMatrix]) -> Result<LinearMap> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let target = first.shape().clone();
        if states.iter().any(|s| s.shape() != &target) {
            return Err(Error::InvalidArgument("ensemble states differ in shape".into()));
        }
        let source = AlgebraShape::classical(states.len());
        let mut m = DMatrix::zeros(target.algebra_dim(), states.len());
        for (x, s) in states.iter().enumerate() {
            m.set_column(x, &s.to_vector());
        }
        LinearMap::new(source, target, m)
    }

    /// Instrument `A → B ⊗ C^X` from completely positive parts `F_x: A → B`
    /// whose sum is trace preserving.
    ///
    /// # Errors
    /// [`Error::InvalidArgument`] if a part is not completely positive, the
    /// parts disagree in shape, or their sum is not trace preserving.
    pub fn instrument(parts: &[LinearMap]) -> Result<LinearMap> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty instrument".into()))?;
        let a = first.source().clone();
        let b = first.target().clone();
        let mut total = LinearMap::zero(&a, &b);
        for (x, p) in parts.iter().enumerate() {
            if p.source() != &a || p.target() != &b {
                return Err(Error::InvalidArgument("instrument parts differ in shape".into()));
            }
            if !p.classification().completely_positive {
                return Err(Error::InvalidArgument(format!("part {x} is not completely positive")));
            }
            total = total.add(p)?;
        }
        if !total.classification().trace_preserving {
            return Err(Error::InvalidArgument("instrument is not trace preserving".into()));
        }
        let cx = AlgebraShape::classical(parts.len());
        let target = AlgebraShape::tensor(&b, &cx);
        let nx = parts.len();
        Ok(LinearMap::from_fn(&a, &target, |e| {
            let blocks = (0..b.num_blocks())
                .flat_map(|y| (0..nx).map(move |x| (y, x)))
                .map(|(y, x)| parts[x].apply(e).expect("source checked").block(y).clone())
                .collect();
            AlgebraElement::new(target.clone(), blocks).expect("instrument blocks")
        }))
    }

    /// Partial trace `A ⊗ B → B` (`Factor::First`) or `A ⊗ B → A`
    /// (`Factor::Second`).
    pub fn partial_trace_channel(shape: &AlgebraShape, factor: Factor) -> Result<LinearMap> {
        let (a, b) = shape.require_factors()?;
        let target = match factor {
            Factor::First => b.clone(),
            Factor::Second => a.clone(),
        };
        Ok(LinearMap::from_fn(shape, &target, |t| {
            t.partial_trace(factor).expect("tensor shape checked")
        }))
    }

    /// Replacement channel `A ↦ tr(A) σ`.
    pub fn replacement(source: &AlgebraShape, sigma: &AlgebraElement) -> LinearMap {
        LinearMap::from_fn(source, sigma.shape(), |a| sigma.scale(a.trace()))
    }

    /// Transpose `A ↦ A^T` (blockwise).
    pub fn transpose(shape: &AlgebraShape) -> LinearMap {
        LinearMap::from_fn(shape, shape, |a| a.map_blocks(|b| b.transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn amplitude_damping_is_cptp() {
        let g: f64 = 0.3;
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - g).sqrt(), 0.0)]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(g.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = LinearMap::kraus(&[k0, k1]).unwrap();
        let cl = e.classification();
        assert!(cl.is_cptp() && cl.dagger_preserving && !cl.unital);
    }

    #[test]
    fn transpose_is_positive_but_not_cp() {
        let t = LinearMap::transpose(&AlgebraShape::matrix(2));
        let cl = t.classification();
        assert!(cl.trace_preserving && cl.dagger_preserving && cl.unital);
        assert!(!cl.completely_positive);
    }

    #[test]
    fn classical_channel_rejects_bad_columns() {
        let f = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.6, 0.8]);
        assert!(LinearMap::classical_channel(&f).is_err());
    }

    #[test]
    fn povm_probabilities() {
        let m0 = AlgebraElement::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(0.25, 0.0),
        ])));
        let m1 = &AlgebraElement::identity(m0.shape()) - &m0;
        let e = LinearMap::povm(&[m0.clone(), m1]).unwrap();
        let rho = AlgebraElement::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.4, 0.0)],
        ));
        let p = e.apply(&rho).unwrap();
        assert!((p.block(0)[(0, 0)] - (&m0 * &rho).trace()).norm() < 1e-15);
        assert!(e.is_cptp());
    }

    #[test]
    fn instrument_marginal_is_sum_of_parts() {
        let p0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let f0 = LinearMap::kraus(&[p0]).unwrap();
        let f1 = LinearMap::kraus(&[p1]).unwrap();
        let inst = LinearMap::instrument(&[f0, f1]).unwrap();
        assert!(inst.is_cptp());
        let tr = LinearMap::partial_trace_channel(inst.target(), Factor::Second).unwrap();
        let dephase = tr.compose(&inst).unwrap();
        let rho = AlgebraElement::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.4, 0.0)],
        ));
        let out = dephase.apply(&rho).unwrap();
        assert!((out.block(0)[(0, 1)]).norm() < 1e-15);
        assert!((out.block(0)[(0, 0)] - c(0.6, 0.0)).norm() < 1e-15);
    }
}
