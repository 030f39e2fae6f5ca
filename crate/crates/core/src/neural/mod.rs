//! Small hand-written neural network core in double precision: dense, LSTM and 1-D
//! convolution layers with exact backward passes, MSE loss, Adam, Glorot initialisation,
//! finite-difference gradient checking and the two forecasting architectures.

mod adam;
mod conv;
mod dense;
mod gradcheck;
mod init;
mod lstm;
mod loss;
mod model;
mod params;
mod serialize;
mod tensor;
mod train;

pub use adam::AdamState;
pub use conv::{Conv1dPool, ConvCache};
pub use dense::{leaky_relu, Activation, Dense, DenseCache, LEAKY_SLOPE};
pub use gradcheck::{grad_check, GradCheckReport, REL_ERROR_FLOOR};
pub use init::glorot_uniform;
pub use lstm::{Lstm, LstmCache};
pub use loss::mse_loss;
pub use model::{CnnLstmNet, CnnLstmShape, LstmNet, LstmShape, Network};
pub use params::Params;
pub use serialize::{read_params, write_params};
pub use tensor::Tensor;
pub use train::{train, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    BadTensor { shape: Vec<usize>, len: usize },
    #[error("sequence of length {len} is shorter than the kernel ({kernel})")]
    SequenceTooShort { len: usize, kernel: usize },
    #[error("cache was produced before the parameters last changed")]
    StaleCache,
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), NeuralError> {
    if expected == found {
        Ok(())
    } else {
        Err(NeuralError::ShapeMismatch {
            expected: vec![expected],
            found: vec![found],
        })
    }
}
