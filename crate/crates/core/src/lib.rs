pub mod axial;
pub mod error;
pub mod group;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod presets;
pub mod scenario;
pub mod sim;
pub mod spectral;
pub mod state;
pub mod tol;

pub use error::{Error, Result};
