pub mod cli;
pub mod gadgets;
pub mod image;
pub mod isa;
pub mod overlapforge;
pub mod pathgraph;
pub mod samples;
