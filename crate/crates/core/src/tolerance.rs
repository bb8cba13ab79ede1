/// Numerical tolerances shared by every routine in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// General absolute tolerance for equalities and marginal checks.
    pub atol: f64,
    /// Maximum Frobenius defect `||A - A^dagger||` accepted as hermitian.
    pub hermitian: f64,
    /// Eigenvalues closer than this are grouped into one spectral projector.
    pub eigen_group: f64,
    /// Eigenvalues at or below this count as zero (outside the support).
    pub faithfulness: f64,
    /// Minimum Choi eigenvalue still accepted as completely positive.
    pub cp: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        atol: 1e-9,
        hermitian: 1e-10,
        eigen_group: 1e-8,
        faithfulness: 1e-10,
        cp: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
