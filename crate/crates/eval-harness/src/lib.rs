//! Metrics and experiment runners over the cascade: per-window pose,
//! direction, and speed errors, dt sweeps (retraining the stack per window
//! length), and noise-robustness sweeps against clean-trained models.

mod error;
mod metrics;
mod report;
mod run;

pub use error::EvalError;
pub use metrics::{angle_err_deg, window_errors, WindowErrors};
pub use report::{
    write_noise_csv, write_sweep_csv, BinStats, EvalReport, SequenceEval, REFERENCE_DT500,
};
pub use run::{
    dt_sweep, evaluate, evaluate_with, noise_sweep, predict_window, train_stack, StackReports,
    SweepCfg, TrainedStack, WindowPrediction,
};
