use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use super::shape::AlgebraShape;
use super::C64;
use crate::error::{Error, Result};

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// A block-diagonal element of a multi-matrix algebra.
///
/// The arithmetic operators panic on shape mismatch; the `checked_*` methods
/// return [`Error::ShapeMismatch`] instead.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    shape: AlgebraShape,
    blocks: Vec<DMatrix<C64>>,
}

impl AlgebraElement {
    /// # Errors
    /// Fails if the number or sizes of blocks disagree with `shape`.
    pub fn new(shape: AlgebraShape, blocks: Vec<DMatrix<C64>>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks given for {} block shape",
                blocks.len(),
                shape.num_blocks()
            )));
        }
        for (x, b) in blocks.iter().enumerate() {
            let m = shape.block_dim(x);
            if b.nrows() != m || b.ncols() != m {
                return Err(Error::ShapeMismatch(format!(
                    "block {x} is {}x{}, expected {m}x{m}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { shape, blocks })
    }

    /// Element of a single-block algebra `M_n` from a square matrix.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let shape = AlgebraShape::matrix(m.nrows());
        Self { shape, blocks: vec![m] }
    }

    /// Element of `C^k` from a function on `k` points.
    pub fn from_function(values: &[C64]) -> Self {
        let shape = AlgebraShape::classical(values.len());
        let blocks = values.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        Self { shape, blocks }
    }

    /// Diagonal element of `C^k` from real weights.
    pub fn from_real_function(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&p| C64::new(p, 0.0)).collect();
        Self::from_function(&v)
    }

    pub fn zeros(shape: &AlgebraShape) -> Self {
        let blocks = shape.dims().into_iter().map(|m| DMatrix::zeros(m, m)).collect();
        Self { shape: shape.clone(), blocks }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let blocks = shape.dims().into_iter().map(|m| DMatrix::identity(m, m)).collect();
        Self { shape: shape.clone(), blocks }
    }

    /// The uniform state `1 / tr(1)`.
    pub fn maximally_mixed(shape: &AlgebraShape) -> Self {
        Self::identity(shape).scale_real(1.0 / shape.unit_trace())
    }

    /// Matrix unit `E^x_{ij}`.
    pub fn matrix_unit(shape: &AlgebraShape, x: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zeros(shape);
        e.blocks[x][(i, j)] = C64::new(1.0, 0.0);
        e
    }

    /// Basis element number `k` in the flattened matrix-unit order.
    pub fn basis(shape: &AlgebraShape, k: usize) -> Self {
        let (x, i, j) = shape.unit_at(k);
        Self::matrix_unit(shape, x, i, j)
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn block(&self, x: usize) -> &DMatrix<C64> {
        &self.blocks[x]
    }

    pub fn block_mut(&mut self, x: usize) -> &mut DMatrix<C64> {
        &mut self.blocks[x]
    }

    pub fn into_blocks(self) -> Vec<DMatrix<C64>> {
        self.blocks
    }

    /// Same data viewed in a shape with identical block dimensions.
    ///
    /// # Errors
    /// Fails if the block dimensions differ.
    pub fn with_shape(mut self, shape: AlgebraShape) -> Result<Self> {
        if shape.dims() != self.shape.dims() {
            return Err(Error::ShapeMismatch(format!("cannot view {} as {}", self.shape, shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Coordinates in the matrix-unit basis (row-major inside each block).
    pub fn to_vector(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.shape.algebra_dim());
        let mut k = 0;
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v[k] = b[(i, j)];
                    k += 1;
                }
            }
        }
        v
    }

    /// Inverse of [`to_vector`](Self::to_vector).
    pub fn from_vector(shape: &AlgebraShape, v: &[C64]) -> Result<Self> {
        if v.len() != shape.algebra_dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for algebra of dimension {}",
                v.len(),
                shape.algebra_dim()
            )));
        }
        let mut k = 0;
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for m in shape.dims() {
            blocks.push(DMatrix::from_row_slice(m, m, &v[k..k + m * m]));
            k += m * m;
        }
        Ok(Self { shape: shape.clone(), blocks })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{} vs {}", self.shape, other.shape)))
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Self {
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Self { shape: self.shape.clone(), blocks }
    }

    pub fn map_blocks(&self, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        let blocks = self.blocks.iter().map(f).collect();
        Self { shape: self.shape.clone(), blocks }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.zip(other, |a, b| a * b))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_blocks(|b| b * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Hilbert–Schmidt inner product `tr(self^dagger other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dotc(b)).sum()
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Frobenius distance to another element of the same shape.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    /// `||A - A^dagger||` in Frobenius norm.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        self.map_blocks(|b| (b + b.adjoint()) * C64::new(0.5, 0.0))
    }

    /// `(A - A^dagger) / 2i`, so that `A = H + iK`.
    pub fn antihermitian_part(&self) -> Self {
        self.map_blocks(|b| (b - b.adjoint()) * C64::new(0.0, -0.5))
    }

    /// Commutator `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Jordan product `{A, B} = AB + BA` (no factor one half).
    pub fn jordan(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// `A ⊗ B` on the tensor shape of the two algebras.
    pub fn tensor(&self, other: &Self) -> Self {
        let shape = AlgebraShape::tensor(&self.shape, &other.shape);
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for a in &self.blocks {
            for b in &other.blocks {
                blocks.push(a.kronecker(b));
            }
        }
        Self { shape, blocks }
    }

    /// Partial trace over one factor of a tensor-shaped element.
    ///
    /// # Errors
    /// [`Error::NotTensorShape`] when the shape has no recorded factors.
    pub fn partial_trace(&self, factor: Factor) -> Result<Self> {
        let (a, b) = self.shape.require_factors()?;
        let nb = b.num_blocks();
        match factor {
            Factor::Second => {
                let mut out = Self::zeros(a);
                for x in 0..a.num_blocks() {
                    let m = a.block_dim(x);
                    for y in 0..nb {
                        let n = b.block_dim(y);
                        let t = &self.blocks[x * nb + y];
                        let o = &mut out.blocks[x];
                        for i in 0..m {
                            for j in 0..m {
                                let mut s = C64::new(0.0, 0.0);
                                for k in 0..n {
                                    s += t[(i * n + k, j * n + k)];
                                }
                                o[(i, j)] += s;
                            }
                        }
                    }
                }
                Ok(out)
            }
            Factor::First => {
                let mut out = Self::zeros(b);
                for x in 0..a.num_blocks() {
                    let m = a.block_dim(x);
                    for y in 0..nb {
                        let n = b.block_dim(y);
                        let t = &self.blocks[x * nb + y];
                        let o = &mut out.blocks[y];
                        for k in 0..n {
                            for l in 0..n {
                                let mut s = C64::new(0.0, 0.0);
                                for i in 0..m {
                                    s += t[(i * n + k, i * n + l)];
                                }
                                o[(k, l)] += s;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Linear swap `γ: A ⊗ B → B ⊗ A`, `a ⊗ b ↦ b ⊗ a`.
    pub fn swap_factors(&self) -> Result<Self> {
        let (a, b) = self.shape.require_factors()?;
        let shape = AlgebraShape::tensor(b, a);
        let na = a.num_blocks();
        let nb = b.num_blocks();
        let mut blocks = vec![DMatrix::zeros(0, 0); na * nb];
        for x in 0..na {
            let m = a.block_dim(x);
            for y in 0..nb {
                let n = b.block_dim(y);
                let t = &self.blocks[x * nb + y];
                let mut s = DMatrix::zeros(m * n, m * n);
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..n {
                            for l in 0..n {
                                s[(k * m + i, l * m + j)] = t[(i * n + k, j * n + l)];
                            }
                        }
                    }
                }
                blocks[y * na + x] = s;
            }
        }
        Ok(Self { shape, blocks })
    }

    /// Sub-block `T_{ij} ∈ M_{n_y}` of block `(x, y)` in a tensor element,
    /// i.e. the coefficient of `E^x_{ij}` there.
    pub(crate) fn tensor_slot(&self, x: usize, y: usize, i: usize, j: usize) -> Result<DMatrix<C64>> {
        let (_, b) = self.shape.require_factors()?;
        let n = b.block_dim(y);
        let t = &self.blocks[x * b.num_blocks() + y];
        Ok(t.view((i * n, j * n), (n, n)).into_owned())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.norm().max(1.0)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_add(rhs).expect("shape mismatch in addition")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_sub(rhs).expect("shape mismatch in subtraction")
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_mul(rhs).expect("shape mismatch in product")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}
