//! Tree-structured reasoning search with a per-step sampling temperature
//! driven by a particle-swarm style controller.

pub mod backend;
pub mod controller;
pub mod experiment;
pub mod game24;
pub mod record;
pub mod report;
pub mod search;
pub mod writing;
