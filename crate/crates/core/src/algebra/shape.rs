use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One direct summand `M_dim` of a multi-matrix algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug)]
struct Inner {
    blocks: Vec<Block>,
    // offset of each block in the flattened matrix-unit basis
    offsets: Vec<usize>,
    factors: Option<(AlgebraShape, AlgebraShape)>,
}

/// Block structure of a multi-matrix algebra `⊕_x M_{m_x}`.
///
/// Blocks keep the order they were declared in. The matrix-unit basis of the
/// algebra is ordered by block, then row, then column. Shapes produced by
/// [`AlgebraShape::tensor`] remember their two factors so that partial traces
/// and swaps can be taken later.
#[derive(Clone)]
pub struct AlgebraShape(Arc<Inner>);

impl AlgebraShape {
    /// Builds a shape from labelled blocks.
    ///
    /// # Errors
    /// Fails on an empty block list, a zero dimension or a repeated label.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidShape("no blocks".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::InvalidShape(format!("block '{}' has dimension 0", b.label)));
            }
            if blocks[..i].iter().any(|c| c.label == b.label) {
                return Err(Error::InvalidShape(format!("duplicate label '{}'", b.label)));
            }
        }
        Ok(Self::build(blocks, None))
    }

    fn build(blocks: Vec<Block>, factors: Option<(AlgebraShape, AlgebraShape)>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for b in &blocks {
            offsets.push(acc);
            acc += b.dim * b.dim;
        }
        AlgebraShape(Arc::new(Inner { blocks, offsets, factors }))
    }

    /// Builds a shape from dimensions, labelling blocks `"0"`, `"1"`, ...
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Self::new(
            dims.iter()
                .enumerate()
                .map(|(i, &dim)| Block { label: i.to_string(), dim })
                .collect(),
        )
    }

    /// The full matrix algebra `M_n`.
    pub fn matrix(n: usize) -> Self {
        Self::from_dims(&[n]).expect("matrix algebra dimension must be positive")
    }

    /// The commutative algebra `C^k` of functions on `k` points.
    pub fn classical(k: usize) -> Self {
        Self::from_dims(&vec![1; k]).expect("classical algebra needs at least one point")
    }

    /// Tensor product shape. Block `(x, y)` has dimension `m_x n_y`; blocks
    /// are ordered lexicographically by the positions of `x` and `y`.
    pub fn tensor(a: &AlgebraShape, b: &AlgebraShape) -> Self {
        let mut blocks = Vec::with_capacity(a.num_blocks() * b.num_blocks());
        for x in a.blocks() {
            for y in b.blocks() {
                blocks.push(Block {
                    label: format!("({},{})", x.label, y.label),
                    dim: x.dim * y.dim,
                });
            }
        }
        Self::build(blocks, Some((a.clone(), b.clone())))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.0.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.0.blocks.len()
    }

    pub fn block_dim(&self, x: usize) -> usize {
        self.0.blocks[x].dim
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.blocks.iter().map(|b| b.dim).collect()
    }

    /// Position of the block with the given label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.blocks.iter().position(|b| b.label == label)
    }

    /// Dimension of the Hilbert space the algebra acts on, `Σ m_x`.
    pub fn hilbert_dim(&self) -> usize {
        self.0.blocks.iter().map(|b| b.dim).sum()
    }

    /// Dimension of the algebra as a vector space, `Σ m_x²`.
    pub fn algebra_dim(&self) -> usize {
        self.0.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    /// Trace of the unit, which equals [`hilbert_dim`](Self::hilbert_dim).
    pub fn unit_trace(&self) -> f64 {
        self.hilbert_dim() as f64
    }

    /// Index of the matrix unit `E^x_{ij}` in the flattened basis.
    pub fn unit_index(&self, x: usize, i: usize, j: usize) -> usize {
        let m = self.block_dim(x);
        self.0.offsets[x] + i * m + j
    }

    /// Inverse of [`unit_index`](Self::unit_index).
    pub fn unit_at(&self, k: usize) -> (usize, usize, usize) {
        let x = match self.0.offsets.binary_search(&k) {
            Ok(x) => {
                // several blocks cannot share an offset since dims are positive
                x
            }
            Err(x) => x - 1,
        };
        let m = self.block_dim(x);
        let r = k - self.0.offsets[x];
        (x, r / m, r % m)
    }

    pub fn is_single_block(&self) -> bool {
        self.num_blocks() == 1
    }

    pub fn is_commutative(&self) -> bool {
        self.0.blocks.iter().all(|b| b.dim == 1)
    }

    /// The two factors if this shape came from [`AlgebraShape::tensor`].
    pub fn factors(&self) -> Option<(&AlgebraShape, &AlgebraShape)> {
        self.0.factors.as_ref().map(|(a, b)| (a, b))
    }

    /// Factors of a tensor shape, or [`Error::NotTensorShape`].
    pub fn require_factors(&self) -> Result<(&AlgebraShape, &AlgebraShape)> {
        self.factors().ok_or(Error::NotTensorShape)
    }

    /// Re-brackets `(A ⊗ B) ⊗ C` as `A ⊗ (B ⊗ C)`.
    ///
    /// Block order and the layout inside each block are unchanged, so element
    /// data can be reused as is.
    pub fn reassociate_right(&self) -> Result<AlgebraShape> {
        let (ab, c) = self.require_factors()?;
        let (a, b) = ab.require_factors()?;
        Ok(AlgebraShape::tensor(a, &AlgebraShape::tensor(b, c)))
    }

    /// Inverse of [`reassociate_right`](Self::reassociate_right).
    pub fn reassociate_left(&self) -> Result<AlgebraShape> {
        let (a, bc) = self.require_factors()?;
        let (b, c) = bc.require_factors()?;
        Ok(AlgebraShape::tensor(&AlgebraShape::tensor(a, b), c))
    }

    /// Same blocks, factor information dropped.
    pub fn flattened(&self) -> AlgebraShape {
        Self::build(self.0.blocks.clone(), None)
    }
}

impl PartialEq for AlgebraShape {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.blocks == other.0.blocks
    }
}

impl Eq for AlgebraShape {}

impl fmt::Debug for AlgebraShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AlgebraShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .blocks
            .iter()
            .map(|b| format!("M{}[{}]", b.dim, b.label))
            .collect();
        write!(f, "{}", parts.join(" ⊕ "))
    }
}
