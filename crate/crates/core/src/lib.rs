pub mod bench;
pub mod centro;
pub mod eig;
pub mod eri;
pub mod error;
pub mod format;
pub mod index;
pub mod matrix;
pub mod pschol;
pub mod psym;
pub mod tensor4;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
