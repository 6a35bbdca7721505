//! Linear structured population dynamics on signed atomic measures.
//!
//! The model is the transport equation with decay and non-local births
//!
//! ```text
//! d/dt mu + d/dx (b mu) + c mu = int eta(y) dmu(y),   x >= 0,
//! ```
//!
//! where `eta(y)` is the (atomic) offspring distribution of an individual of
//! state `y`. Solutions are measured in the flat (dual bounded-Lipschitz) norm.

pub mod asymptotics;
pub mod bl_functions;
pub mod dual_solver;
pub mod error;
pub mod flat_metric;
pub mod forward_solver;
pub mod io;
pub mod measures;
pub mod model_config;

pub use bl_functions::{Extension, PiecewiseLinearFn};
pub use error::{Error, Result};
pub use flat_metric::{flat_distance, flat_norm, flat_norm_oracle, NormVariant, Witness};
pub use measures::{Atom, AtomicMeasure};
pub use model_config::{Channel, Kernel, ModelIngredients, ValidationReport};
