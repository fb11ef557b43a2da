pub mod error;
pub mod cli;
pub mod fit;
pub mod grid;
pub mod io;
pub mod lp;
pub mod normlab;
pub mod operators;
pub mod quad;
pub mod sphere;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{make_grid, Complex, FrequencyIndex, GridFunction, GridSpec};
pub use sphere::{SphereSymbol, SymbolSpec};
pub use weights::{ApReport, CubeFamily, Weight, WeightSpec};
