pub mod boundarycycles;
pub mod cli;
pub mod cosets;
pub mod error;
pub mod exactlinalg;
pub mod foxhomology;
pub mod heckeops;
pub mod ordinary;
pub mod psl2words;
pub mod symcoeffs;

pub use error::{Error, Result};
