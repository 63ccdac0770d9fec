pub mod agent;
pub mod buchi;
pub mod checker;
pub mod grid;
pub mod psl;
