pub mod error;
pub mod extreal;
pub mod grid;

pub use error::{Error, Result};
pub use extreal::{oplus, otimes, ExtReal};
pub use grid::{domain_masks, Axis, DomainMask, Grid, GridFn, Tag};
pub mod conjugacy;
pub use conjugacy::{
    coercivity_report, conjugate, conjugate_with_argmax, dual_conjugate, fc_membership, legendre_fast,
    subdifferential_map, CoercivityConfig, CoercivityReport, Evidence, Kernel, KernelSpec, SubdiffMap, Window,
};
pub mod covering;
pub use covering::{
    build_covering, quasicontinuity_check, quasicontinuity_check_tol, resolution_tolerance, solve_preimage, verdict,
    CoveringReport, Existence, PreimageReport, QuasiContinuity, Uniqueness, Verdict, VerdictConfig,
};
pub mod quasilinear;
pub mod special;
pub use quasilinear::{density_of, rho_estimate, tightness_check, QuasiLinearForm, RhoEstimate, Span, TightnessConfig, TightnessReport, YSet};
pub mod convergence;
pub use convergence::{
    asymptotic_tightness_check, default_interval_sets, estimate_rate, ldp_bounds_check, trend, weak_convergence_check,
    CheckConfig, ConvergenceReport, Extrapolation, Flag, FormSequence, NamedSet, SequenceSpec, SetKind, Statement,
};
pub mod gartner;
pub use gartner::{
    compute_g, compute_g_detailed, pipeline, pipeline_from_g, tightness_criterion, GComputation, GartnerInput,
    GartnerOutput, GartnerVerdict, Mode, TightnessCriterion,
};
pub mod merton;
