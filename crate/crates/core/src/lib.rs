//! Perception and deduction scoring for ECG reasoning traces.
//!
//! Perception checks whether the waveform findings a trace describes are
//! present in the signal. Deduction checks whether the censored trace
//! retrieves diagnostic criteria of the right label from a knowledge base.

pub mod deduction;
pub mod delineation;
pub mod findings;
pub mod kb;
pub mod limits;
pub mod perception;
pub mod signal;
pub mod synthetic;
pub mod util;
