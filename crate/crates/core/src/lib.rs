#![no_std]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod error;
pub mod analysis;
pub mod cone;
pub mod linalg;
pub mod newton;
pub mod poly;
pub mod scalar;
pub mod jordan;
pub mod series;
pub mod topology;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use poly::{DerivTensorHandle, Poly, PolyMap};
pub use scalar::{ComplexRational, Field, Rational, C64};
pub use series::{CurveSeries, MatSeries, Valuation, VecSeries};
