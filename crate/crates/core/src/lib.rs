//! Ultimate ruin probabilities for the compound-Poisson surplus process
//! perturbed by a Wiener process.
//!
//! The crate provides an "exact" value by numerical inversion of the
//! Pollaczek-Khinchine transform, lattice upper/lower bounds built with the
//! Panjer recursion, a family of closed-form approximations (De Vylder,
//! Renyi, one-point and two-point Padé) and an event-driven Monte Carlo
//! oracle.
//!
//! ```
//! use ruinkit::{claims::Claims, model::PerturbedModel, exact};
//!
//! let model = PerturbedModel::with_loading(1.0, 1.0, 0.01, Claims::exponential(1.0).unwrap()).unwrap();
//! let psi = exact::exact_ruin(&model, 1.0).unwrap();
//! assert!((psi - 0.989188).abs() < 5e-7);
//! ```

pub mod approx;
pub mod bounds;
pub mod claims;
pub mod cli;
pub mod coefficients;
pub mod curve;
pub mod error;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod roots;

pub use curve::RuinCurve;
pub use error::{Result, RuinError};
