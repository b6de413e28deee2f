//! Numerical tolerances shared across the crate.

/// Tolerance record. `Default` carries the normative values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed asymmetry `|m_ij - conj(m_ji)|` when constructing a Hermitian matrix.
    pub hermitian: f64,
    /// Jacobi stops once the off-diagonal Frobenius mass falls below this
    /// (relative to the Frobenius norm of the input, floored at 1).
    pub jacobi_off_diagonal: f64,
    /// Hard cap on cyclic Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// PSD and sum-to-identity slack for POVMs, states and correlations.
    pub povm: f64,
    /// Default SDP solver tolerance.
    pub sdp: f64,
    /// Default SDP iteration cap.
    pub sdp_max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

/// The default tolerances.
pub const TOL: Tolerances = Tolerances {
    hermitian: 1e-12,
    jacobi_off_diagonal: 1e-12,
    jacobi_max_sweeps: 100,
    povm: 1e-9,
    sdp: 1e-6,
    sdp_max_iters: 50_000,
};
