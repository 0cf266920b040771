//! Rate allocation and strategic reporting on a two-user binary symmetric
//! broadcast channel.
//!
//! The library is split along the analysis pipeline: [`bsc`] holds the
//! channel math (entropy, Pareto surface, the proportional-fair objective
//! and its derivatives), [`allocator`] solves for the fair time-sharing
//! point and evaluates realized rates under possibly untruthful reports,
//! [`strategy`] studies best responses and equilibria of the reporting
//! game, and [`side_info`] quantifies the value of side information about
//! the opponent's announcement. [`scenario`] and the `bscgame` binary wrap
//! the whole thing in a file-driven CLI; [`verify`] bundles the
//! property-check suites behind `bscgame verify`.

pub mod allocator;
pub mod bsc;
pub mod error;
pub mod scenario;
pub mod side_info;
mod solve;
pub mod strategy;
pub mod verify;

pub use allocator::{allocate, solve_beta_opt, AllocationResult, Announcements, TrueChannels, UserIndex};
pub use bsc::{binary_convolve, binary_entropy, pareto_rates, CrossoverProb, RatePair, TimeSharing};
pub use error::{Error, Result};
