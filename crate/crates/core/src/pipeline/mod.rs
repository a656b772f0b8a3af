//! Training and the three evaluations: clean test set, noise sweep, and
//! occluded frames.

mod eval;
mod report;
mod train;

pub use eval::{
    check_mode, evaluate, evaluate_frames, evaluate_occluded, predict_frames, sweep_frames,
    sweep_noise, validate_sigma2_list, ConfusionMatrix, EvalNoise, Selector, SweepPoint,
    SweepResult, DEFAULT_SIGMA2, EVAL_BATCH,
};
pub use report::{
    config_hash, sha256_hex, sweep_csv, write_report, write_sweep_csv, Evaluation, Report,
    TrainingLog, REPORT_CSV, REPORT_JSON, REPORT_TEXT,
};
pub use train::{
    batch_ranges, train, train_frames, train_with_progress, EpochLog, TrainConfig, TrainOutcome,
};
