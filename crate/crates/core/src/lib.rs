pub mod eval;
pub mod graph;
pub mod harness;
pub mod matcher;
pub mod rational;
pub mod tree;
