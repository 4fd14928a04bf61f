pub mod error;
pub mod mesh;

pub use error::{Error, Result};
pub mod fe_basis;
pub mod adaptivity;
pub mod assembly;
pub mod companion;
pub mod linalg;
pub mod spaces;
pub mod benchmarks;
pub mod diagnostics;
pub mod driver;
