//! Numerical toolkit for bilinear time-frequency analysis.

pub mod error;
pub mod grid;
pub mod intervals;
pub mod multiplier;
pub mod numeric;
pub mod pseudo;
pub mod scalar;
pub mod squarefn;
pub mod timefreq;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use scalar::Real;

/// Double-precision complex number.
pub type C64 = Complex<f64>;
/// Double-precision grid.
pub type Grid = grid::GridSpec<f64>;
/// Double-precision sampled function.
pub type Function = grid::SampledFunction<f64>;
/// Double-precision exponent triple.
pub type Exponents = grid::ExponentTriple<f64>;
/// Double-precision interval.
pub type Interval = intervals::Interval<f64>;
/// Double-precision interval collection.
pub type Collection = intervals::IntervalCollection<f64>;
/// Double-precision symbol.
pub type Symbol = multiplier::SymbolDescriptor<f64>;
