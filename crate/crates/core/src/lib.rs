//! Symbolic controllers stored as reduced ordered multi-terminal decision
//! diagrams, and algorithms that shrink them by determinization.

pub mod bench;
pub mod controller;
pub mod determinize;
pub mod mtbdd;
pub mod reduction;
pub mod setcover;
pub mod symreg;
