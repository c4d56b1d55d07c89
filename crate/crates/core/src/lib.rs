pub mod brachistochrone;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod gates;
pub mod metrology;
pub mod numerics;
pub mod pulses;
pub mod readout;
pub mod spinsys;
pub mod table;
pub mod tomography;

pub use error::{Error, Result};
