//! Visible-light path-loss toolkit for vehicle-to-infrastructure links.
//!
//! - [`model`]: Lambertian and simplified log-distance models, pass-by geometry.
//! - [`radiometry`]: photodetector voltage to optical power.
//! - [`trace`]: raw traces, peak alignment, time-to-distance transform, static averaging.
//! - [`fitting`]: least-squares estimation of `(K_dB, gamma)` and residual diagnostics.
//! - [`simulator`]: seeded synthetic pass-by and static measurements.
//! - [`cli`]: the `vlc-pathloss` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fitting;
pub mod model;
pub mod radiometry;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};
pub use fitting::{evaluate_fit, fit_log_linear, fit_with_correction, FitConfig, FitReport, FittedModel};
pub use model::{ChannelParams, LambertianSource, PassGeometry, Preset, Regime};
pub use radiometry::DetectorProfile;
pub use simulator::{synthesize_passby, synthesize_static, ScenarioConfig};
pub use trace::{DistanceTrace, RawTrace, StaticPointSet, Unit};
