//! Planar inextensible filaments driven by a preferred curvature in a
//! resistive-force-theory fluid.

pub mod analytics;
pub mod angle;
pub mod coeffs;
pub mod eigen;
pub mod error;
pub mod forcing;
pub mod linalg;
pub mod nodal;
pub mod optimizer;
pub mod quadrature;
pub mod sim;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
