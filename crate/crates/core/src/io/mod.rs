//! Configuration, persistence and run dispatch.

mod config;
mod matrix;
mod run;

pub use config::{
    ChainSpec, Command, EncodingKind, EncodingSpec, FloquetSpec, GateSpec, RunConfig, SearchSpec, Tolerances,
    GATE_STREAM, STATE_STREAM,
};
pub use matrix::{load_matrix, matrix_from_json, matrix_to_json, save_matrix, write_atomic};
pub use run::{
    curve_to_tsv, emit_curve, replay_config, run, EigenstateRow, FloquetPayload, GateSummary, LightconePayload,
    Payload, RunOutput, RunRecord, SpectrumPayload, VerifyPayload, ARTIFACT_VERSION,
};
