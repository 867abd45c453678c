//! Data ingestion, synthetic scenarios, run configuration and the replication
//! benchmark.

pub mod bench;
pub mod config;
pub mod io;
pub mod scenario;

pub use bench::{
    load_data, load_replication, run_bench, run_classification_replication, run_replication,
    write_scenario_files, BenchOutput, ClassificationRecord, ClassificationSummary,
    ReplicationData,
};
pub use config::{ConfigBuilder, DataSource, Method, RunConfig, CONFIG_FORMAT_TAG, CONFIG_KEYS};
pub use io::{load_base_csv, load_labeled_csv, write_base_csv, write_labeled_csv};
pub use scenario::{generate_scenario, Scenario, ScenarioKind, ScenarioSpec};
