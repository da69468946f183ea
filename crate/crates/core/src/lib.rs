pub mod cli;
pub mod crusade;
pub mod cure;
pub mod experiments;
pub mod graph;
pub mod sim;
