pub mod identities;
pub mod matrix;
pub mod parallel;
pub mod qarith;
pub mod qtorus;
pub mod relations;
pub mod seeds;
