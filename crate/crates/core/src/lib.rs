//! NR reference signals, Q1.15 sample handling, OFDM and RTT ranging.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chanest;
pub mod dataset;
pub mod fixedpoint;
pub mod metrics;
pub mod ofdm;
pub mod refsig;
pub mod simchan;
pub mod tracefmt;

pub use num_complex::Complex64;

pub use fixedpoint::{Amplitude, IqBufferQ15, SampleQ15};
pub use ofdm::{NumerologyConfig, ReIndex, ResourceGrid};
pub use refsig::ReferenceSignal;
