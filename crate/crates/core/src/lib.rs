//! Subcopulas, copula extensions and Sklar composition for discrete and
//! piecewise-linear distributions, with an exact rational track.

pub mod compose;
pub mod error;
pub mod extension;
pub mod io;
pub mod joint;
pub mod marginfree;
pub mod margins;
pub mod measures;
pub mod numerics;
pub mod oracle;
pub mod report;
pub mod subcopula;

pub use compose::{roundtrip_check, sklar_compose, ComposedJoint};
pub use error::{Error, Result};
pub use extension::{Copula, CopulaFn, ExtensionKind, Fill};
pub use joint::JointPmf;
pub use marginfree::{ipf, DiscreteCopula, IpfDiagnostics};
pub use margins::{Margin, RanSet};
pub use measures::{kendall_tau, spearman_rho_checkerboard, MeasureReport};
pub use numerics::{rational, ExtReal, Rational, Scalar, TolerancePolicy};
pub use report::{Location, Report, Witness};
pub use subcopula::Subcopula;

pub type ExactJoint = JointPmf<Rational>;
pub type FloatJoint = JointPmf<f64>;
pub type ExactMargin = Margin<Rational>;
pub type FloatMargin = Margin<f64>;
pub type ExactSubcopula = Subcopula<Rational>;
pub type ExactCopula = Copula<Rational>;
pub type FloatCopula = Copula<f64>;
