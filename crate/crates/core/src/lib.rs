pub mod bounded;
pub mod divided_diff;
pub mod eigen;
pub mod experiment;
pub mod ensemble;
pub mod error;
pub mod greens;
pub mod matrix;
pub mod quadrature;
pub mod sensitivity;
pub mod spectral_split;

pub use error::{Error, Result};
pub use greens::{GreensFunction, GreensReport};
pub use matrix::ComplexMatrix;
pub use spectral_split::SpectrumSplit;
