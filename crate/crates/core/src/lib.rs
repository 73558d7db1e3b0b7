//! Numerical toolkit for the inhomogeneous biharmonic Schrodinger equation
//!
//!   i u_t - Lap^2 u + mu Lap u = -kappa |x|^{-b} |u|^alpha u
//!
//! on periodic boxes in dimensions 1-3: spectral time stepping, ground-state
//! solvers, variational threshold classification, Lorentz-norm diagnostics
//! and decay/scattering probes.

pub mod classifier;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod integrator;
pub mod functionals;
pub mod lorentz;
pub mod numutil;
pub mod params;
pub mod propagator;
pub mod resample;
pub mod scattering;
pub mod virial;
pub mod weight;

pub use classifier::{
    classify_a, classify_b, equivalence_audit, h2_bound_from_action, omega_star, threshold_report,
    AVerdict, AuditReport, BVerdict, BoundaryTol, OmegaStar, SampleAudit, ThresholdReport,
};
pub use error::{Error, Result};
pub use field::{Field, SobolevNorms, Space};
pub use functionals::{
    evaluate_functionals, find_lambda0, gn_defect, mass_critical_rescale, weinstein,
    FunctionalSnapshot,
};
pub use grid::{make_grid, Grid};
pub use groundstate::{
    petviashvili_solve, pohozaev_check, rescale_ground_state, sharp_constant, stationary_weight,
    GroundState, PohozaevRatios,
};
pub use integrator::{
    evolve, evolve_observed, nonlinear_substep, strang_step, AdaptPolicy, IntegratorConfig,
    RunVerdict, TrajectoryRecord,
};
pub use lorentz::{
    decreasing_rearrangement, lk_accumulate, lorentz_norm, weight_rearrangement,
    RearrangementProfile,
};
pub use propagator::{dispersive_decay_fit, group_property_check, linear_evolve, plateau_packet, LinearSymbol};
pub use resample::dilate;
pub use params::{
    classify_regime, critical_exponents, gamma_c, is_biharmonic_admissible, sigma_c,
    validate_params, CriticalExponents, Kappa, PhysParams, Regime, RegimeTag, ValidationMode,
};
pub use scattering::{
    decay_probe, duhamel_profile, dyadic_window_sums, scatter_verdict, DecayProbe, ScatterStatus,
    ScatterVerdict, HORIZON_MIN, SNAPSHOTS_MIN,
};
pub use virial::{
    build_cutoff_profile, build_smooth_cutoff, cutoff_identity_check, second_derivative,
    spacetime_growth_fit, virial_quantity, virial_rate, virial_rate_check, CutoffIdentityReport,
    CutoffProfile, GrowthFit, SmoothCutoff, VirialRatePoint, VirialRateReport,
};
pub use weight::{make_weight, WeightField};
