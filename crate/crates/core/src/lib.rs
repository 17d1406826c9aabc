//! Spatially-spread OTFS (SS-OTFS) integrated sensing and communication.
//!
//! The crate is organised along the signal chain:
//!
//! - [`otfs`]: frame geometry, delay-Doppler/time-delay transforms, and the
//!   cyclic delay shift and Doppler phase ramp operators.
//! - [`angular`]: steering vectors and the discretised angular channel that
//!   spatial spreading produces.
//! - [`channel`]: random scenarios and the communication/radar channels.
//! - [`tx`]: symbol-wise precoding, power allocation and spatial spreading.
//! - [`radar`]: beam tracking, angle estimation and max-min echo power
//!   allocation.
//! - [`comm`]: effective delay-Doppler channel, detectors, the (7,5)
//!   convolutional code and frame error rate measurement.
//! - [`analysis`]: codeword difference matrices, PEP bounds and Gram
//!   determinant tools.
//!
//! Every structured operator is applied in O(MN) without forming dense
//! matrices. Dense forms are only built where a caller asks for them.

pub mod analysis;
pub mod angular;
pub mod channel;
pub mod comm;
pub mod constellation;
pub mod error;
pub mod otfs;
pub mod radar;
pub mod rng;
pub mod stats;
pub mod tx;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use otfs::{DdFrame, FrameParams, TdFrame};
