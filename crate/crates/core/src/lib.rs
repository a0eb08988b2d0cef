//! Propagation of a weak, linearly polarized probe through a coherently
//! driven tripod-atom medium: steady-state linear response, a full
//! Maxwell–Bloch integrator, the analytic continuous-wave solution, the
//! resulting magnetometer sensitivity, and the quantum cross-phase
//! modulation of the two circular probe components.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod config;
pub mod error;
pub mod magnetometer;
pub mod output;
pub mod propagation;
pub mod response;
pub mod units;
pub mod xpm;

pub use bloch::{AtomicState, GridSpec, MbMedium, PulseShape, PulseSpec, SpaceTimeField};
pub use error::{Error, Result};
pub use magnetometer::{MagnetometerConfig, MagnetometerResult, SweepAxis};
pub use num_complex::Complex64 as C64;
pub use propagation::{CwResult, KappaConvention, PropagationCoeffs};
pub use response::ComplexResponse;
pub use units::{Absorption, DerivedParams, DriveZeemanConfig, Geometry, MediumParams, RegimeReport};
pub use xpm::{
    CoherentAmplitudes, CphaseMetrics, ModeGrid, SinglePhotonState, TwoPhotonAmplitudes, XpmAngles, XpmMedium,
};
