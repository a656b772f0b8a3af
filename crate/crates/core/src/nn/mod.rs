//! Fixed-graph CNN engine with explicit backward passes.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod maxpool;
pub mod model;
pub mod tensor;

pub use activation::{relu_backward, relu_forward};
pub use adam::AdamState;
pub use batchnorm::{BatchNorm, Mode};
pub use conv::Conv2d;
pub use linear::Linear;
pub use loss::{argmax, softmax_cross_entropy, CrossEntropy};
pub use maxpool::{maxpool_backward, maxpool_forward};
pub use model::{InputMode, RadarCnnModel};
pub use tensor::{Scalar, Tensor};
