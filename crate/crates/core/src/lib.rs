//! Numerical laboratory for densification limits of cellular networks with
//! bounded path loss.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`models`] and [`fading`]: path-loss and small-scale fading models,
//!   plus the feasibility gate for path-loss models;
//! * [`numerics`]: semi-infinite adaptive quadrature with divergence
//!   detection;
//! * [`analytic`]: the area integral `γ`, the asymptotic ASE limit and the
//!   per-model closed forms;
//! * [`conditions`]: numeric checks of the sufficient conditions for the
//!   limit, built on the Laplace functional of the interference;
//! * [`sim`]: Monte Carlo estimation of the throughput metrics.

pub mod numerics;
pub mod analytic;
pub mod fading;
pub mod models;
pub mod sim;
pub mod conditions;

pub use conditions::{ConditionVerdict, Corollary, Holds, InterferenceFunctional};
pub use fading::FadingModel;
pub use models::{check_feasibility, FeasibilityReport, LosNlosComposite, LosProbability, ModelError, MultiSlope, PathLossModel, Segment};
pub use numerics::{QuadSettings, QuadratureResult, QuadratureStatus};
