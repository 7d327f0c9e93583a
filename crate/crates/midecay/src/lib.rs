//! File formats, parallel curve estimation and the `midecay` command line
//! on top of [`midecay_core`].

pub mod cli;
pub mod error;
pub mod idx;
pub mod io;
pub mod parallel;

pub use error::{Error, IdxError, Result};
pub use idx::IdxImages;
pub use parallel::par_decay_curve;
