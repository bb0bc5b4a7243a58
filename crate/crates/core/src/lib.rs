pub mod error;
pub mod mesh;
pub mod quadrature;
pub mod tensor;

pub use error::{Error, Result};
pub mod fem;
pub mod laminate;
pub mod optimizer;
pub mod estimator;
pub mod scenario;
pub mod adaptivity;
pub mod extrapolation;
pub mod study;
pub mod export;
