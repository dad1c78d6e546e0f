//! Dense tensors, reverse-mode gradients, initialization and optimizers.

mod checkpoint;
mod gradcheck;
mod graph;
mod init;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use gradcheck::finite_difference_check;
pub use graph::{Graph, Var};
pub use init::{xavier_bound, xavier_init, xavier_with};
pub use optim::{adam_step, sgd_step, Optimizer, OptimizerConfig, OptimizerKind};
pub use params::{Gradients, ParamId, ParameterSet};
pub use tensor::{matmul_t, Tensor};
