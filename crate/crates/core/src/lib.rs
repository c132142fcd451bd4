//! Indoor localization and radio map construction by manifold alignment.
//!
//! A source data set that carries the spatial structure of the floor (a
//! simulated radio map, or plan coordinates padded to the RSS dimension) is
//! aligned with a handful of calibration fingerprints and the observations to
//! be localized. Localized readings accumulate into an estimated radio map.

pub mod alignment;
pub mod environment;
pub mod error;
pub mod harness;
pub mod lle;
pub mod localizer;
pub mod mapbuilder;

pub use error::{Error, Result};
