use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{eigh_matrix, AlgebraElement, AlgebraShape, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Structural properties of a linear map, computed once at construction with
/// the default tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub trace_preserving: bool,
    pub dagger_preserving: bool,
    pub completely_positive: bool,
    pub unital: bool,
}

impl Classification {
    pub fn is_cptp(&self) -> bool {
        self.trace_preserving && self.completely_positive
    }

    /// Short name: `"CPTP"`, `"HPTP"`, `"TP"` or `"other"`.
    pub fn summary(&self) -> &'static str {
        match (self.trace_preserving, self.completely_positive, self.dagger_preserving) {
            (true, true, _) => "CPTP",
            (true, false, true) => "HPTP",
            (true, false, false) => "TP",
            _ => "other",
        }
    }
}

/// Numerical defects behind a [`Classification`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defects {
    /// `max_k |tr E(e_k) - tr e_k|` over matrix units.
    pub trace: f64,
    /// `max_k ||E(e_k^dagger) - E(e_k)^dagger||`.
    pub dagger: f64,
    /// `||E(1) - 1||`.
    pub unital: f64,
    /// Smallest eigenvalue of the hermitian part of the Choi matrix.
    pub choi_min: f64,
    /// Hermiticity defect of the Choi matrix.
    pub choi_hermitian: f64,
}

/// A linear map between multi-matrix algebras, stored as a dense matrix in the
/// matrix-unit bases: column `k` holds the coordinates of `E(e_k)`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    source: AlgebraShape,
    target: AlgebraShape,
    matrix: DMatrix<C64>,
    class: Classification,
}

impl PartialEq for LinearMap {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.target == other.target && self.matrix == other.matrix
    }
}

impl LinearMap {
    /// # Errors
    /// [`Error::ShapeMismatch`] if the matrix is not
    /// `dim(target) x dim(source)`.
    pub fn new(source: AlgebraShape, target: AlgebraShape, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != target.algebra_dim() || matrix.ncols() != source.algebra_dim() {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, maps need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.algebra_dim(),
                source.algebra_dim()
            )));
        }
        let mut map = Self {
            source,
            target,
            matrix,
            class: Classification {
                trace_preserving: false,
                dagger_preserving: false,
                completely_positive: false,
                unital: false,
            },
        };
        map.class = map.classify_with(&Tolerances::DEFAULT);
        Ok(map)
    }

    /// Builds the map from its action on matrix units.
    ///
    /// # Panics
    /// If `f` returns an element whose shape is not `target`.
    pub fn from_fn(source: &AlgebraShape, target: &AlgebraShape, f: impl Fn(&AlgebraElement) -> AlgebraElement) -> Self {
        let n = source.algebra_dim();
        let mut m = DMatrix::zeros(target.algebra_dim(), n);
        for k in 0..n {
            let out = f(&AlgebraElement::basis(source, k));
            assert!(out.shape() == target, "image has shape {}, expected {}", out.shape(), target);
            m.set_column(k, &out.to_vector());
        }
        Self::new(source.clone(), target.clone(), m).expect("dimensions are consistent")
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let n = shape.algebra_dim();
        Self::new(shape.clone(), shape.clone(), DMatrix::identity(n, n)).expect("square identity")
    }

    pub fn zero(source: &AlgebraShape, target: &AlgebraShape) -> Self {
        Self::new(
            source.clone(),
            target.clone(),
            DMatrix::zeros(target.algebra_dim(), source.algebra_dim()),
        )
        .expect("zero map dimensions")
    }

    pub fn source(&self) -> &AlgebraShape {
        &self.source
    }

    pub fn target(&self) -> &AlgebraShape {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn classification(&self) -> Classification {
        self.class
    }

    pub fn is_cptp(&self) -> bool {
        self.class.is_cptp()
    }

    /// Same map with different shapes of equal block dimensions.
    pub fn with_shapes(&self, source: AlgebraShape, target: AlgebraShape) -> Result<Self> {
        if source.dims() != self.source.dims() || target.dims() != self.target.dims() {
            return Err(Error::ShapeMismatch("relabelled shapes differ in dimensions".into()));
        }
        Ok(Self {
            source,
            target,
            matrix: self.matrix.clone(),
            class: self.class,
        })
    }

    /// # Errors
    /// [`Error::ShapeMismatch`] if `a` does not live on the source algebra.
    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if a.shape() != &self.source {
            return Err(Error::ShapeMismatch(format!(
                "map from {} applied to element of {}",
                self.source,
                a.shape()
            )));
        }
        let v = &self.matrix * a.to_vector();
        AlgebraElement::from_vector(&self.target, v.as_slice())
    }

    /// Image of the `k`-th matrix unit.
    pub fn image_of_unit(&self, k: usize) -> AlgebraElement {
        AlgebraElement::from_vector(&self.target, self.matrix.column(k).clone_owned().as_slice())
            .expect("column length matches target")
    }

    /// `self ∘ inner`.
    ///
    /// # Errors
    /// [`Error::ShapeMismatch`] unless `inner` lands in the source of `self`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.target != self.source {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.source, self.target, inner.source, inner.target
            )));
        }
        Self::new(inner.source.clone(), self.target.clone(), &self.matrix * &inner.matrix)
    }

    fn check_parallel(&self, other: &LinearMap) -> Result<()> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::ShapeMismatch("maps have different source or target".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &LinearMap) -> Result<LinearMap> {
        self.check_parallel(other)?;
        Self::new(self.source.clone(), self.target.clone(), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        self.check_parallel(other)?;
        Self::new(self.source.clone(), self.target.clone(), &self.matrix - &other.matrix)
    }

    pub fn scale(&self, c: C64) -> LinearMap {
        Self::new(self.source.clone(), self.target.clone(), &self.matrix * c).expect("same dimensions")
    }

    /// `λ self + (1 - λ) other`, with complex `λ` allowed.
    pub fn affine_combination(&self, other: &LinearMap, lambda: C64) -> Result<LinearMap> {
        self.check_parallel(other)?;
        let one = C64::new(1.0, 0.0);
        Self::new(
            self.source.clone(),
            self.target.clone(),
            &self.matrix * lambda + &other.matrix * (one - lambda),
        )
    }

    /// Frobenius distance between the representing matrices.
    pub fn distance(&self, other: &LinearMap) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Hilbert–Schmidt adjoint: `tr(E(A)^dagger B) = tr(A^dagger E*(B))`.
    pub fn adjoint(&self) -> LinearMap {
        Self::new(self.target.clone(), self.source.clone(), self.matrix.adjoint()).expect("transposed dims")
    }

    /// `~E = † ∘ E ∘ †`, so `~E(A) = E(A^dagger)^dagger`.
    pub fn tilde(&self) -> LinearMap {
        let rows = self.target.algebra_dim();
        let cols = self.source.algebra_dim();
        let tr = transposed_units(&self.target);
        let sc = transposed_units(&self.source);
        let m = DMatrix::from_fn(rows, cols, |r, c| self.matrix[(tr[r], sc[c])].conj());
        Self::new(self.source.clone(), self.target.clone(), m).expect("same dims")
    }

    /// `Σ_ij E_ij ⊗ E(E_ij)` on `source ⊗ target`, blockwise.
    pub fn choi(&self) -> AlgebraElement {
        super::channel_state::unit_table(self, false)
    }

    /// Inverse of [`choi`](Self::choi).
    pub fn from_choi(c: &AlgebraElement) -> Result<LinearMap> {
        super::channel_state::from_unit_table(c, false)
    }

    /// Numerical defects used for classification.
    pub fn defects(&self) -> Defects {
        let src = &self.source;
        let tgt = &self.target;
        let diag_rows: Vec<usize> = (0..tgt.num_blocks())
            .flat_map(|y| (0..tgt.block_dim(y)).map(move |i| tgt.unit_index(y, i, i)))
            .collect();
        let mut trace: f64 = 0.0;
        let mut unit = nalgebra::DVector::<C64>::zeros(tgt.algebra_dim());
        for k in 0..src.algebra_dim() {
            let (_, i, j) = src.unit_at(k);
            let t: C64 = diag_rows.iter().map(|&r| self.matrix[(r, k)]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            trace = trace.max((t - C64::new(expected, 0.0)).norm());
            if i == j {
                unit += self.matrix.column(k);
            }
        }
        let mut unital = 0.0;
        for k in 0..tgt.algebra_dim() {
            let (_, i, j) = tgt.unit_at(k);
            let expected = if i == j { 1.0 } else { 0.0 };
            unital += (unit[k] - C64::new(expected, 0.0)).norm_sqr();
        }
        let st = transposed_units(src);
        let tt = transposed_units(tgt);
        let mut dagger: f64 = 0.0;
        for k in 0..src.algebra_dim() {
            let mut d = 0.0;
            for r in 0..tgt.algebra_dim() {
                d += (self.matrix[(r, st[k])] - self.matrix[(tt[r], k)].conj()).norm_sqr();
            }
            dagger = dagger.max(d.sqrt());
        }
        let choi = self.choi();
        let mut choi_min = f64::INFINITY;
        for b in choi.blocks() {
            let (vals, _) = eigh_matrix(b);
            choi_min = choi_min.min(vals[0]);
        }
        Defects {
            trace,
            dagger,
            unital: unital.sqrt(),
            choi_min,
            choi_hermitian: choi.hermitian_defect(),
        }
    }

    /// Classification with explicit tolerances.
    pub fn classify_with(&self, tol: &Tolerances) -> Classification {
        let d = self.defects();
        let scale = self.matrix.norm().max(1.0);
        Classification {
            trace_preserving: d.trace <= tol.atol,
            dagger_preserving: d.dagger <= tol.atol * scale,
            completely_positive: d.choi_hermitian <= tol.atol * scale && d.choi_min >= -tol.cp,
            unital: d.unital <= tol.atol,
        }
    }
}

/// Permutation sending the index of `E^x_{ij}` to that of `E^x_{ji}`.
pub(crate) fn transposed_units(shape: &AlgebraShape) -> Vec<usize> {
    (0..shape.algebra_dim())
        .map(|k| {
            let (x, i, j) = shape.unit_at(k);
            shape.unit_index(x, j, i)
        })
        .collect()
}
