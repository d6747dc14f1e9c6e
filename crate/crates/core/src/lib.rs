//! Broadcast-channel coding toolkit.
//!
//! Channels, codes and linear programs are generic over [`Scalar`], which
//! covers `f64`, `f32` and exact rationals. The aliases below fix the common
//! choices.

pub mod approx;
pub mod channel;
pub mod commands;
pub mod error;
pub mod exact;
pub mod graph;
pub mod hardness;
pub mod io;
pub mod lp;
pub mod report;
pub mod scalar;

pub use channel::{ChannelTable, DeterministicChannel, MarginalTable};
pub use error::{Error, Result};
pub use exact::{Code, SolveReport, Witness};
pub use graph::{BipartiteGraph, Partition, Side};
pub use io::{ChannelFile, LoadedChannel};
pub use lp::{LpModel, LpSolution, NsSolution, Objective};
pub use num_rational::BigRational;
pub use report::Report;
pub use scalar::Scalar;

pub type Channel = ChannelTable<f64>;
pub type Channel32 = ChannelTable<f32>;
pub type ExactChannel = ChannelTable<BigRational>;
pub type Lp = LpModel<f64>;
pub type ExactLp = LpModel<BigRational>;
