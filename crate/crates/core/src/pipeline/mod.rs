//! Experiment orchestration: configuration, the full pipeline, metrics and
//! artifacts.

pub mod cache;
pub mod config;
pub mod metrics;
pub mod output;
pub mod run;

pub use cache::{content_hash, Cache};
pub use config::{ExperimentConfig, IterationSource, Normalization, PhantomSpec, PriorMethod};
pub use metrics::{compute_metrics, field_metrics, Metrics};
pub use output::{read_grid_csv, write_grid_csv, write_outputs, write_png, ColorScale, Manifest};
pub use run::{
    noise_seed, run_noise_case, run_pipeline, Experiment, MeasuredData, NoiseCase, PipelineResult, PriorRun, SweepCell,
};
