//! Slot-level Monte Carlo of the random pilot-hopping access protocol.
//!
//! Per slot, every active device sends the pilot its hopping pattern
//! selects; the receiver detects the pilots in use, estimates the summed
//! large-scale gain on each by channel hardening, forms the scaled MMSE
//! estimate and combines with MRC. The SINR of each MRC output is measured
//! with knowledge of the true channels, which the receiver itself never uses.
//! Devices are identified by matching hopping patterns against the
//! detections buffered across the frame.
//!
//! Pilot indices are zero-based.

mod frame;
mod hopping;
mod receiver;

pub use frame::{
    run_frame, run_plan, simulate, Estimator, FramePlan, FrameReport, SimConfig, SimSummary,
    SlotOutcome,
};
pub use hopping::{match_patterns, HoppingScheme};
pub use receiver::{
    combiner_gains, detect_pilots, estimate_channel, estimate_sum_power, genie_mmse,
    mrc_and_measure, mrc_output, receive_data, DetectionThreshold, MrcMeasurement,
    PilotObservation,
};
