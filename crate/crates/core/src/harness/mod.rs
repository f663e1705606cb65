//! Repeated stratified cross-validation over datasets, oversamplers and
//! classifiers, and the report files derived from it.

mod config;
mod report;
mod run;

pub use config::{
    resolve_seed, BenchmarkConfig, ConvGenSpec, DatasetSpec, OversamplerKind, OversamplerSpec, SEED_ENV,
};
pub use report::{
    emit_report, load_raw, render, render_csv, render_markdown, render_raw, render_test_folds, ReportFormat,
    MEANS_FILE, RAW_FILE, TABLES_FILE, TEST_FOLDS_FILE, TIMINGS_FILE,
};
pub use run::{
    load_external_predictions, load_synthetic, mean_std, run_benchmark, run_on_datasets, sanitize,
    BenchmarkReport, Cell, CellStatus, DatasetSummary, FoldFailure, FoldRecord, FoldScore, JobTiming,
    OversamplerAudit, RunOptions,
};
