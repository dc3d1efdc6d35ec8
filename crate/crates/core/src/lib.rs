//! Spectral map of positive Hankel operators, computed through the
//! Cauchy-like model matrix `M_ij = √(w_i w_j)/(x_i + x_j)` of an atomic
//! measure `Σ w_i δ_{x_i}`.

pub mod discretize;
pub mod eigensolve;
pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod measures;
pub mod model_operator;
pub mod quadrature;
pub mod reference;
pub mod spectral_map;

pub use error::{Error, Result};
pub use measures::{Atom, AtomicMeasure, DensityKind, DensityMeasure, Measure, MeasureClass, Support};
