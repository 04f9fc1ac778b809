//! Losses, optimization, evaluation and the training loop.

mod adam;
pub mod gradcheck;
mod loss;
mod metrics;
mod trainer;

pub use self::adam::{adam_step, AdamConfig, OptimizerState};
pub use self::gradcheck::{gradcheck_suite, gradient_check, GradCheckCase, GradCheckReport};
pub use self::loss::{
    instance_gradient, instance_loss, ner_loss, ner_loss_grad, relation_loss, relation_loss_grad,
    total_loss,
};
pub use self::metrics::{evaluate_predictions, f1_score, EvalReport, RelationCounts};
pub use self::trainer::{
    evaluate, frozen_tensors, init_model, metric_log, predict_all, prepare_examples, timing_log,
    train, EpochRecord, Example, TrainConfig, TrainOutcome, METRIC_LOG_HEADER,
};
