//! Precision limits for estimating both quadratures of an optical displacement with one or two
//! squeezed modes.
//!
//! * [`gaussian`]: covariance-matrix representation of Gaussian probes and symplectic maps.
//! * [`holevo`]: numerical Holevo Cramér-Rao bound over linear dual observables.
//! * [`closed_forms`]: analytic bounds, optimal probes and tradeoff curves.
//! * [`region`]: accessible `(v_x, v_y)` regions swept over probe settings and weights.
//! * [`measurement`]: dual-homodyne schemes and Monte-Carlo checks of their variances.
//!
//! Conventions: quadratures ordered `(X1, Y1, X2, Y2)`, `[X, Y] = 2i`, vacuum covariance `I`.

pub mod closed_forms;
pub mod error;
pub mod gaussian;
pub mod holevo;
pub mod measurement;
pub mod optim;
pub mod region;

pub use error::{Error, Result};
pub use gaussian::{build_probe, ChannelParams, GaussianState, ProbeConfig, SymplecticTransform};
pub use holevo::{solve, BoundResult, DualCoefficients, Weights};
