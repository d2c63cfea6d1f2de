//! Exact super-hedging of vulnerable claims on finite markets whose trading
//! horizon is cut by a random time.
//!
//! All arithmetic is exact rational arithmetic. Sigma-algebras are partitions
//! of a finite outcome set, so every almost-sure statement becomes an
//! outcome-wise equality that can be checked without tolerance.

pub mod decomp;
pub mod error;
pub mod gen;
pub mod ext;
pub mod fixtures;
pub mod horizon;
pub mod lp;
pub mod market;
pub mod model;
pub mod pricing;
pub mod prob;
pub mod verify;

pub use error::{Error, Result};
pub use ext::{Ext, Q};
