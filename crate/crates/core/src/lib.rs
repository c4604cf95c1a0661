#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod fracop;
pub mod hamiltonian;
pub mod response;
pub mod threelevel;

pub use error::{Error, Result};
