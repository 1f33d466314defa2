//! Configuration, execution and aggregation of benchmark runs.

mod aggregate;
mod config;
mod run;

pub use aggregate::{
    aggregate_best_run, aggregate_group, summarize_sweep, Aggregate, CurvePoint, SweepPoint,
};
pub use config::{
    apply_override, hash_json, CachePolicy, CallbackSpec, DatasetConfig, DatasetSpec,
    RunConfig, StorageSpec, SynclfHardSpec, DATASET_GENERATORS,
};
pub use run::{
    bootstrap_rows, find_record_files, parse_sizes, read_records, run, run_with_callbacks, strip_timing,
    sweep_sample_size, write_records, AprioriMetrics, RunOutcome, RunRecord, Timing,
    CONFIG_ECHO_FILE, RECORDS_FILE, SCHEMA_VERSION,
};
