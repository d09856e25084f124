//! The black-box evaluator: circuitry in, heat duty and pressure drop out.

mod evaluator;
mod instance;
mod model;

pub use evaluator::{
    evaluate_q, evaluate_ratio, read_log, EvalLogRecord, Evaluation, Evaluator, Lookup, Outcome,
    RatioOutcome, DP_FLOOR_KPA,
};
pub use instance::{HexInstance, SimulatorConfig};
pub use model::{simulate, CircuitResult, SegmentDetail, SimulationResult};
