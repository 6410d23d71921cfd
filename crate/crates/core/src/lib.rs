//! Mean-field Blume-Emery-Griffiths model: exact finite-n laws of the total
//! spin, limiting densities, Stein-method bounds and convergence-rate scans.

pub mod bounds;
pub mod cases;
pub mod density;
pub mod distance;
pub mod error;
pub mod exact_law;
pub mod mcmc;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod rates;
pub mod stein;

pub use bounds::{evaluate_bound, variance_term, BoundKind, BoundReport};
pub use cases::{case_catalog, find_case, CaseSpec, Theorem};
pub use density::{build_comparison_density, normalize_density, Drift, Pattern, PolyDensity};
pub use distance::{Cdf, Normal};
pub use error::{BegError, Result};
pub use exact_law::{build_joint_law, kolmogorov_distance, moment, moment_set, JointLaw, MomentSet};
pub use model::{classify_region, critical_k, g_derivs_at_zero, ModelParams, RegionTag, Schedule, BETA_C};
pub use rates::{fit_loglog, run_case, run_sweep, RateReport, ScanOptions};
pub use stein::{estimate_stein_constants, SteinConstants};
