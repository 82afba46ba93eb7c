//! Two-layer ReLU networks, their trainers, and exact parity certificates.

mod certificate;
mod checkpoint;
mod config;
mod eval;
mod gradcheck;
mod layerwise;
mod linalg;
mod loss;
mod mlp;
mod net;
mod train;

pub use certificate::{build_parity_certificate, build_parity_interpolant};
pub use checkpoint::{
    load_two_layer, mlp_from_bytes, mlp_to_bytes, save_two_layer, two_layer_from_bytes,
    two_layer_to_bytes,
};
pub use config::{Init, MetricsRow, StopReason, TrainConfig, TrainRun};
pub use eval::{zero_one_error, ErrorMode, TestSet};
pub use gradcheck::gradient_check;
pub use layerwise::{
    auto_l1_step, cov_first_layer_gradient, l1_first_layer_gradient, l1_prox_step,
    layerwise_junta_cov, layerwise_parity_l1, online_ridge_step, L1Step,
};
pub use loss::{soft_threshold, soft_threshold_slice, Loss};
pub use mlp::{Mlp, MlpWorkspace};
pub use net::{sign, Model, TwoLayerNet, TwoLayerWorkspace};
pub use train::{train_joint_sgd, train_mlp_sgd, train_sgd};
