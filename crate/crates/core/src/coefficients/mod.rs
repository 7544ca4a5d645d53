//! Limit-law coefficients: the drift `ζ`, the diffusion coefficient `σ̂²_t`,
//! centering sequences and their admissibility gaps.

mod centering;
mod drift;
mod inadmissible;
mod sigma;

pub use centering::{
    admissibility_gap, centering_from_step_means, centering_gap, explicit_centering, lebesgue_centering,
    measure_centering, split_time, step_means, step_means_many, CenteringCurve, CenteringKind,
};
pub use drift::{drift_zeta, drift_zeta_with, srb_mean, DriftCurve, DEFAULT_INTERVALS_PER_PIECE};
pub use inadmissible::{
    inadmissible_centering, inadmissible_divergence_bound, inadmissible_epsilon, inadmissible_mean_exact,
    inverse_square_tail, smallest_admissible_k,
};
pub use sigma::{
    diffusion_curve, sigma2_at, sigma2_for_map, sigma_sqrt, DiffusionCurve, SigmaValue, DEFAULT_GK_TOL, K_MAX,
};

/// SRB tolerance used when solving frozen maps for coefficients.
pub(crate) const COEFF_SRB_TOL: f64 = 1e-12;
