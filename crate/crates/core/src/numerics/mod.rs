//! Tensors, seeded randomness, optimizers and the finite-difference oracle.

mod gradcheck;
mod optim;
mod rng;
mod tensor;

pub use gradcheck::{finite_diff_grad, relative_error};
pub use optim::{
    adam_step, clip_global_norm, sgd_step, AdamConfig, AdamState, Optimizer, OptimizerConfig,
};
pub use rng::{sample_latent, SeededRng};
pub use tensor::{sigmoid, Tensor};
