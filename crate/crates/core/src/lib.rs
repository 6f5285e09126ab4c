pub mod classify;
pub mod cli;
pub mod data;
pub mod harness;
pub mod lp;
pub mod numkit;
pub mod sieve;
pub mod synth;
