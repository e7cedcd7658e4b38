pub mod attacks;
pub mod cli;
pub mod field;
pub mod keyed_hash;
pub mod net_sim;
pub mod sss;
pub mod stats_harness;
pub mod three_party;
pub mod two_party;
