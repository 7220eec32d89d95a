pub mod error;
pub mod linalg;
pub mod dmd;
pub mod admm;
pub mod lifted;
pub mod systems;
pub mod runner;
pub mod snapshot_io;
pub mod harness;
