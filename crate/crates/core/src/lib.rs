//! Multi-pass streaming set cover.
//!
//! The engine reads a set family through [`stream::PassStream`], which counts
//! every physical scan, and charges every stored index to a
//! [`stream::SpaceLedger`]. On top of that sit the iterative sampling solver
//! ([`iter_cover`]), its geometric points/discs variant ([`geom`]), the offline
//! subroutines it calls ([`offline`]), and an independent brute-force
//! [`oracle`] used to check all of them.
//!
//! Two lower-bound constructions are executable as well: the set-chasing
//! gadget in [`reduction`] and the family-recovery procedure in [`recovery`].

mod bitset;
pub mod error;
pub mod generate;
pub mod geom;
pub mod io;
pub mod iter_cover;
pub mod model;
pub mod offline;
pub mod oracle;
pub mod recovery;
pub mod reduction;
pub mod sampling;
pub mod stream;

pub use error::{Error, Result};
pub use model::{Cover, ElementId, OfflineMode, RunStats, SetId, SetRecord, SetSystem, SolveParams};
