//! Coupled world/regulator machines, codelength estimators, block tables and
//! an exhaustively enumerable prefix micro-universe.

pub mod bits;
pub mod codec;
pub mod contrast;
pub mod ctm;
pub mod error;
pub mod machine;
pub mod micro;
pub mod worlds;

pub use error::{AgarError, Result};
