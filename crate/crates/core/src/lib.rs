//! Rank-based dependence measures, functional-dependence measures and a
//! Monte Carlo harness for local power studies.

pub mod basis;
pub mod cli;
pub mod error;
pub mod functional;
pub mod global;
pub mod harness;
pub mod local;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod sample;
pub mod statistic;

pub use error::{Error, Result};
pub use sample::{compute_ranks, ingest_csv, CsvOptions, EmpiricalCopula, PairedSample, RankData};
pub use statistic::{StatInput, StatValue, Statistic, Tail};
