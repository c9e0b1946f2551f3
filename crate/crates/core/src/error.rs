//! Error types, one enum per pipeline stage.

use thiserror::Error;

/// Invariant violations on domain types.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("frame {time_index}: {field} has {got} rows but species list has {expected}")]
    ShapeMismatch {
        time_index: i64,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("frame {time_index}: non-finite value in {field}")]
    NonFinite {
        time_index: i64,
        field: &'static str,
    },
    #[error("trajectory has no frames")]
    EmptyTrajectory,
    #[error("duplicate time_index {0} in trajectory")]
    DuplicateTimeIndex(i64),
    #[error("frame {time_index}: species list differs from the trajectory's first frame")]
    SpeciesMismatch { time_index: i64 },
    #[error("event {event_id}: particle list is empty")]
    EmptyParticles { event_id: i64 },
    #[error("event {event_id}: non-finite 4-momentum component")]
    NonFiniteMomentum { event_id: i64 },
    #[error("event {event_id}: stored jet_energy {stored} differs from constituent sum {computed} by more than 1e-6 relative")]
    JetEnergyMismatch {
        event_id: i64,
        stored: f64,
        computed: f64,
    },
    #[error("duplicate event_id {0}")]
    DuplicateEventId(i64),
    #[error("event {event_id}: frame count {got} does not equal input_len {p} + output_len {f}")]
    FrameCountMismatch {
        event_id: i64,
        got: usize,
        p: usize,
        f: usize,
    },
    #[error("event {event_id}, frame {frame}: negative intensity {value}")]
    NegativeIntensity {
        event_id: i64,
        frame: usize,
        value: f64,
    },
    #[error("event {event_id}, frame {frame}: non-finite intensity")]
    NonFiniteIntensity { event_id: i64, frame: usize },
    #[error("event {event_id}: frame {frame} is {gh}x{gw}, expected {eh}x{ew}")]
    GridDimsMismatch {
        event_id: i64,
        frame: usize,
        gh: usize,
        gw: usize,
        eh: usize,
        ew: usize,
    },
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("class scores must lie in [0,1] and sum to 1, got {0:?}")]
    BadClassScores(Vec<f64>),
    #[error("prediction for sample {id} has the wrong shape: {detail}")]
    PredictionShape { id: i64, detail: String },
    #[error("no prediction for sample {0}")]
    MissingPrediction(i64),
}

/// File loading and parsing failures.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {detail}")]
    MalformedRecord {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: DataError,
    },
    #[error("{path}: bad magic, expected \"SAIB\"")]
    BadMagic { path: String },
    #[error("{path}: unsupported format version {0}", .version)]
    BadVersion { path: String, version: u32 },
    #[error("{path}: file holds {got} frame floats but header dims require {expected}")]
    SizeMismatch {
        path: String,
        got: usize,
        expected: usize,
    },
    #[error("{path}: manifest dims {manifest:?} disagree with frame file header {header:?}")]
    DimsDisagree {
        path: String,
        manifest: (usize, usize, usize),
        header: (usize, usize, usize),
    },
    #[error("{path}: {detail}")]
    BadManifest { path: String, detail: String },
}

/// Report construction and serialization failures.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("aggregates are inconsistent with per_sample values: {field} stored {stored} vs recomputed {recomputed}")]
    AggregateMismatch {
        field: &'static str,
        stored: f64,
        recomputed: f64,
    },
    #[error("aggregates present but per_sample is empty")]
    EmptyPerSample,
    #[error("non-finite value in report ({0})")]
    NonFinite(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
}

/// Problem-space slicing failures.
#[derive(Debug, Error)]
pub enum SliceError {
    #[error("invalid slice spec: {0}")]
    InvalidSpec(String),
    #[error("window [{start_frac}, {start_frac}+{size_frac}) selects zero frames")]
    EmptyWindow { start_frac: f64, size_frac: f64 },
    #[error("window grid is empty after filtering by max_end")]
    EmptyGrid,
    #[error("subsample count {count} exceeds population {population}")]
    CountExceedsPopulation { count: usize, population: usize },
    #[error("{0} values fall outside [lo, hi): ids {1:?}")]
    OutOfRange(usize, Vec<i64>),
    #[error("bin {bin} holds {got} samples but {needed} are required")]
    InsufficientBin {
        bin: usize,
        got: usize,
        needed: usize,
    },
    #[error("selected bin {0} does not exist")]
    UnknownBin(usize),
    #[error("no prediction for event {0}")]
    MissingPrediction(i64),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Transform and descriptor failures.
#[derive(Debug, Error)]
pub enum TransformError {
    #[error("event {event_id}: particle {index} has zero momentum")]
    ZeroMomentumParticle { event_id: i64, index: usize },
    #[error("event {event_id}: summed jet momentum is zero")]
    ZeroJetMomentum { event_id: i64 },
    #[error("theta must be finite")]
    NonFiniteAngle,
    #[error("rotation sweep covers {0} degrees, more than 360")]
    SweepTooWide(f64),
    #[error("invalid descriptor params: {0}")]
    InvalidParams(String),
    #[error("frame {0}: descriptor needs at least 2 atoms")]
    TooFewAtoms(i64),
    #[error("window is empty")]
    EmptyWindow,
    #[error("window references time_index {0} not present in the trajectory")]
    UnknownFrame(i64),
}

/// Metric kernel failures.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("frames are {a:?} and {b:?}, shapes must match")]
    ShapeMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("frame {0} carries no {1} label")]
    Unlabeled(i64, &'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("input holds a single class; both classes are required")]
    SingleClass,
    #[error("score {0} outside [0,1]")]
    ScoreOutOfRange(f64),
    #[error("{which} frame has zero total mass")]
    ZeroMass { which: &'static str },
    #[error("frame index {0} out of range ({1})")]
    IndexOutOfRange(i64, String),
    #[error("xs have zero variance, fit is degenerate")]
    DegenerateVariance,
    #[error("histogram needs an explicit range for empty input")]
    EmptyHistogramInput,
    #[error("events have mixed output lengths ({0} vs {1})")]
    MixedOutputLen(usize, usize),
    #[error("predictor failed on run {run}: {detail}")]
    PredictorRun { run: usize, detail: String },
    #[error("stability analysis needs runs >= 2, got {0}")]
    TooFewRuns(usize),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Toy generator failures.
#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator params: {0}")]
    InvalidParams(String),
    #[error("blob leaves the frame (frame {frame}: center ({x:.2}, {y:.2}) needs {margin:.1} px of margin)")]
    OutOfBounds {
        frame: usize,
        x: f64,
        y: f64,
        margin: f64,
    },
    #[error("empty train slice for {0}")]
    EmptyTrainSlice(&'static str),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Sweep-plan validation and execution failures.
#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan validation: {0}")]
    Invalid(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("dataset {0:?} is not resolvable: {1}")]
    Dataset(String, String),
    #[error("joined reports share no sample ids")]
    EmptyJoin,
    #[error("report is not renderable as {kind}: {detail}")]
    Unrenderable { kind: &'static str, detail: String },
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// External-predictor protocol failures.
#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("failed to spawn {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no response for request id {0}")]
    MissingResponse(i64),
    #[error("response for unknown request id {0}")]
    UnknownResponse(i64),
    #[error("timed out after {0:?} waiting for a response")]
    Timeout(std::time::Duration),
    #[error("predictor exited with {0}")]
    NonZeroExit(String),
    #[error("predictor error for id {id}: {detail}")]
    Remote { id: i64, detail: String },
    #[error("i/o with predictor failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}
