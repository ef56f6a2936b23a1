//! Circular proofs of multiplicative linear logic with fixed points.
//!
//! Proof graphs with back-edges, bouncing threads and their pushdown
//! automaton, bounded-height validity checking, multicut reduction and a
//! compiler from two-counter machines to proof graphs.

pub mod address;
pub mod formula;
pub mod multicut;
pub mod priority;
pub mod proof;
pub mod shortcut;
pub mod thread;
pub mod validity;
pub mod gadget;
