//! Declarative experiment orchestration: sweep plans, the external
//! predictor protocol, error tracing, and report rendering.

pub mod external;
pub mod plan;
pub mod render;
pub mod runner;
pub mod trace;

pub use external::{
    run_external_predictor, ExternalPredictor, PredictInput, PredictRequest, WireMessage,
};
pub use plan::{
    DatasetRef, MetricSpec, PlanWorkload, PredictorSpec, SweepAxis, SweepPlan, ToyPredictorSpec,
};
pub use runner::{
    evaluate, run_plan, run_plan_observed, slice_dataset, CellOutcome, CellStatus, SweepResult,
};
pub use trace::{trace_errors, TraceOutput};
