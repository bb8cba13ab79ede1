use nalgebra::{DMatrix, DVector};

use super::element::AlgebraElement;
use super::C64;
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// How powers treat eigenvalues at or below the faithfulness tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportMode {
    /// Restrict to the support: zero eigenvalues map to zero.
    #[default]
    Lenient,
    /// Refuse elements with an eigenvalue below the faithfulness tolerance.
    Strict,
}

/// Eigenvalues and orthonormal eigenvectors of each block of a hermitian
/// element. Within a block eigenvalues are sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<Vec<f64>>,
    pub vectors: Vec<DMatrix<C64>>,
}

impl Eigensystem {
    /// Smallest eigenvalue over all blocks.
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Hermitian eigendecomposition of one square matrix, ascending eigenvalues.
pub fn eigh_matrix(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], DMatrix::identity(1, 1));
    }
    let h = faer::Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = h
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("hermitian eigensolver converges on finite input");
    let (s, u) = (eig.S(), eig.U());
    let values = (0..n).map(|k| s[k].re).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    (values, vectors)
}

/// Eigendecomposition of a hermitian element.
///
/// # Errors
/// [`Error::NotHermitian`] if the hermiticity defect exceeds the tolerance.
pub fn eigh(a: &AlgebraElement) -> Result<Eigensystem> {
    check_hermitian(a)?;
    Ok(eigh_unchecked(a))
}

pub(crate) fn eigh_unchecked(a: &AlgebraElement) -> Eigensystem {
    let mut values = Vec::with_capacity(a.blocks().len());
    let mut vectors = Vec::with_capacity(a.blocks().len());
    for b in a.blocks() {
        let (v, w) = eigh_matrix(b);
        values.push(v);
        vectors.push(w);
    }
    Eigensystem { values, vectors }
}

pub(crate) fn check_hermitian(a: &AlgebraElement) -> Result<()> {
    let defect = a.hermitian_defect();
    if defect > Tolerances::DEFAULT.hermitian * a.norm().max(1.0) {
        Err(Error::NotHermitian { defect })
    } else {
        Ok(())
    }
}

/// Applies `f` to every eigenvalue: `Σ f(λ) |v⟩⟨v|` blockwise.
pub fn apply_spectral(sys: &Eigensystem, shape: &super::AlgebraShape, f: impl Fn(f64) -> C64) -> AlgebraElement {
    let blocks = sys
        .values
        .iter()
        .zip(&sys.vectors)
        .map(|(vals, vecs)| {
            let n = vals.len();
            let mut scaled = vecs.clone();
            for (j, &l) in vals.iter().enumerate() {
                let fl = f(l);
                for i in 0..n {
                    scaled[(i, j)] *= fl;
                }
            }
            scaled * vecs.adjoint()
        })
        .collect();
    AlgebraElement::new(shape.clone(), blocks).expect("spectral blocks keep their shape")
}

/// Functional calculus `f(A)` for hermitian `A`.
///
/// # Errors
/// [`Error::NotHermitian`] for non-hermitian input.
pub fn functional_calculus(a: &AlgebraElement, f: impl Fn(f64) -> C64) -> Result<AlgebraElement> {
    let sys = eigh(a)?;
    Ok(apply_spectral(&sys, a.shape(), f))
}

/// `λ^r` for a positive real `λ` and complex exponent.
pub fn real_pow(l: f64, r: C64) -> C64 {
    if r.im == 0.0 {
        C64::new(l.powf(r.re), 0.0)
    } else {
        (r * l.ln()).exp()
    }
}

/// Complex power `A^r` of a positive semidefinite element.
///
/// Eigenvalues at or below the faithfulness tolerance are outside the support
/// and are sent to zero, so `A^0` is the support projector and negative
/// exponents give the inverse on the support. In [`SupportMode::Strict`] such
/// eigenvalues are an error instead.
///
/// # Errors
/// [`Error::NotHermitian`], [`Error::NegativeEigenvalue`] below `-atol`, or
/// [`Error::NotFaithful`] in strict mode.
pub fn power(a: &AlgebraElement, r: C64, mode: SupportMode) -> Result<AlgebraElement> {
    let sys = eigh(a)?;
    power_of(&sys, a.shape(), r, mode)
}

/// Real-exponent shorthand for [`power`].
pub fn power_real(a: &AlgebraElement, r: f64, mode: SupportMode) -> Result<AlgebraElement> {
    power(a, C64::new(r, 0.0), mode)
}

pub(crate) fn power_of(
    sys: &Eigensystem,
    shape: &super::AlgebraShape,
    r: C64,
    mode: SupportMode,
) -> Result<AlgebraElement> {
    let tol = Tolerances::DEFAULT;
    let min = sys.min();
    if min < -tol.atol {
        return Err(Error::NegativeEigenvalue { value: min });
    }
    if mode == SupportMode::Strict && min <= tol.faithfulness {
        return Err(Error::NotFaithful { value: min });
    }
    Ok(apply_spectral(sys, shape, |l| {
        if l <= tol.faithfulness {
            C64::new(0.0, 0.0)
        } else {
            real_pow(l, r)
        }
    }))
}

/// Power of a hermitian element through the principal branch of the
/// logarithm, `(-λ)^r = λ^r e^{iπr}`. Zero eigenvalues map to zero.
///
/// This continues formulas written for states to arbitrary hermitian
/// arguments.
pub fn power_principal(a: &AlgebraElement, r: C64) -> Result<AlgebraElement> {
    let tol = Tolerances::DEFAULT.faithfulness;
    functional_calculus(a, |l| {
        if l.abs() <= tol {
            C64::new(0.0, 0.0)
        } else if l > 0.0 {
            real_pow(l, r)
        } else {
            (r * C64::new((-l).ln(), std::f64::consts::PI)).exp()
        }
    })
}

/// One eigenvalue group `λ_α` with its spectral projector `P_α`.
#[derive(Debug, Clone)]
pub struct SpectralComponent {
    pub eigenvalue: f64,
    pub projector: AlgebraElement,
    pub multiplicity: usize,
}

/// Grouped spectral decomposition `A = Σ_α λ_α P_α` of a hermitian element.
///
/// Eigenvalues from all blocks are sorted and grouped when consecutive values
/// differ by at most `group_tol`; each group's eigenvalue is the mean of its
/// members. Groups are returned in ascending order.
pub fn spectral_decomposition(a: &AlgebraElement, group_tol: f64) -> Result<Vec<SpectralComponent>> {
    let sys = eigh(a)?;
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (x, vals) in sys.values.iter().enumerate() {
        for (k, &l) in vals.iter().enumerate() {
            all.push((l, x, k));
        }
    }
    all.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut groups: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for item in all {
        match groups.last_mut() {
            Some(g) if item.0 - g.last().unwrap().0 <= group_tol => g.push(item),
            _ => groups.push(vec![item]),
        }
    }
    let shape = a.shape();
    Ok(groups
        .into_iter()
        .map(|g| {
            let mut p = AlgebraElement::zeros(shape);
            for &(_, x, k) in &g {
                let v = sys.vectors[x].column(k);
                *p.block_mut(x) += v * v.adjoint();
            }
            SpectralComponent {
                eigenvalue: g.iter().map(|t| t.0).sum::<f64>() / g.len() as f64,
                projector: p,
                multiplicity: g.len(),
            }
        })
        .collect())
}

/// Full SVD of a complex matrix, used for least squares with a rank cut.
///
/// Computed with faer: nalgebra's SVD can return factors that do not
/// reconstruct the input when singular values cluster.
pub(crate) struct Svd {
    u: DMatrix<C64>,
    v: DMatrix<C64>,
    /// Descending.
    values: Vec<f64>,
}

impl Svd {
    pub(crate) fn new(m: &DMatrix<C64>) -> Self {
        let (rows, cols) = m.shape();
        let svd = faer::Mat::from_fn(rows, cols, |i, j| m[(i, j)])
            .svd()
            .expect("SVD converges on finite input");
        let (u, v, s) = (svd.U(), svd.V(), svd.S());
        Self {
            u: DMatrix::from_fn(rows, rows, |i, j| u[(i, j)]),
            v: DMatrix::from_fn(cols, cols, |i, j| v[(i, j)]),
            values: (0..rows.min(cols)).map(|k| s[k].re).collect(),
        }
    }

    pub(crate) fn singular_values(&self) -> &[f64] {
        &self.values
    }

    /// Minimum-norm least-squares solution keeping singular values above
    /// `cut`, and the rank that was kept.
    pub(crate) fn solve(&self, rhs: &DVector<C64>, cut: f64) -> (DVector<C64>, usize) {
        let mut x = DVector::<C64>::zeros(self.v.nrows());
        let mut rank = 0;
        for (k, &s) in self.values.iter().enumerate() {
            if s > cut {
                rank += 1;
                x += self.v.column(k) * (self.u.column(k).dotc(rhs) / s);
            }
        }
        (x, rank)
    }

    /// Unit right singular vector of the smallest singular value; lies in
    /// the kernel when the matrix is rank deficient or wide.
    pub(crate) fn smallest_right_vector(&self) -> DVector<C64> {
        self.v.column(self.v.ncols() - 1).into_owned()
    }
}
