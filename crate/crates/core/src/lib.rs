//! Distribution-free property testers for total orderings, monotone decision
//! lists and general decision lists, with instance generators, brute-force
//! ground truth, birthday-paradox experiments and a benchmarking harness.

pub mod birthday;
pub mod bits;
pub mod dist;
pub mod dl;
pub mod dl_model;
pub mod error;
pub mod exact;
pub mod harness;
pub mod instances;
pub mod io;
pub mod mdl;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod total;
pub mod verdict;

pub use bits::BitString;
pub use dist::{FiniteDistribution, PairDistribution};
pub use error::{CoreError, TestError};
pub use rng::SeededRng;
