//! Algorithmic core for PSO-driven network topology search.
//!
//! This crate holds the pieces that are pure computation: a bounded
//! continuous particle swarm optimizer ([`pso`]), the mapping between
//! swarm positions and integer network topologies ([`topology`]), a
//! minimal feedforward regression network with exact backpropagation
//! ([`mlp`]), and the tolerance-window accuracy metric ([`fitness`]).
//!
//! The crate is `no_std` (with `alloc`); IO, datasets, caching, and the
//! experiment CLI live in the companion `swarmtune` crate.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fitness;
pub mod mlp;
pub mod pso;
pub mod seed;
pub mod topology;
