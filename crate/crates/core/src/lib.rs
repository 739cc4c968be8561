//! Decide whether a graph manifold, given as a tree of Seifert fibered
//! pieces, is an L-space, and produce checkable non-L-space certificates.

pub mod certs;
pub mod cli;
pub mod dsl;
pub mod engine;
pub mod homology;
pub mod loopmodel;
pub mod seifert;
pub mod slopes;
pub mod tree;
