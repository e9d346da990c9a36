//! Global tolerance configuration.

use serde::{Deserialize, Serialize};

/// Tolerances used throughout the toolkit. All thresholds that involve a
/// matrix are scale-relative: they are multiplied by `max(1, ‖M‖)` so results
/// are invariant under modest rescaling of the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Rank decisions: an eigenvalue/singular value below `tol_rank · scale`
    /// is treated as zero.
    pub tol_rank: f64,
    /// Orthonormality and endpoint-matching checks.
    pub tol_orth: f64,
    /// Residual bound for eigendecompositions, relative to `‖M‖`.
    pub tol_eig: f64,
    /// Resolution of crossing localisation in the path parameter.
    pub lambda_res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        // Two orders of magnitude above double-precision noise at desk scale.
        Tolerances {
            tol_rank: 1e-9,
            tol_orth: 1e-10,
            tol_eig: 1e-11,
            lambda_res: 1e-10,
        }
    }
}

impl Tolerances {
    /// Principal-angle intersection rule `cos θ ≥ 1 − tol_rank` translated to
    /// the sine/singular-value scale: `sin θ ≤ √(2·tol_rank)` up to O(tol²).
    pub fn angle_sin_tol(&self) -> f64 {
        (2.0 * self.tol_rank).sqrt()
    }
}
