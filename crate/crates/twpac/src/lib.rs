//! Simulation toolkit for traveling-wave parametric amplifier/converters
//! (TWPACs) built from dc-biased Josephson-junction transmission lines.
//!
//! The toolkit covers the full design loop for such a device:
//!
//! * [`device`] — physical description of the line and the small-signal
//!   expansion of the dc-biased junction nonlinearity,
//! * [`dispersion`] — linear frequency response of the loaded line from
//!   ABCD-matrix cascades (transmission, wavenumber, impedance, stopbands),
//! * [`cme`] / [`modes`] — seven-mode coupled-mode equations for forward
//!   gain and backward isolation, with port reflections with 3WM and
//!   optional 4WM mixing,
//! * [`phasematch`] — placement of the amplification and conversion pumps
//!   from the phase-matching conditions,
//! * [`transient`] — time-domain integration of the full Josephson ladder
//!   network, used as an independent cross-check of the coupled-mode model,
//! * [`noisecal`] — two-stage amplifier-chain noise fitting and input
//!   attenuation calibration.

// Validation guards are written `!(x > 0.0)` so NaN inputs are rejected
// along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cme;
pub mod config;
pub mod constants;
pub mod device;
pub mod dispersion;
pub mod error;
pub mod modes;
pub mod noisecal;
pub mod ode;
pub mod phasematch;
pub mod transient;

pub use error::{Error, Result};
