//! Unique continuation checks for P1/Q1 finite-element discretizations of the Laplacian.
//!
//! The pipeline is mesh -> [`assembly`] -> [`graph`] / [`spectra`]: generate or load
//! a mesh, assemble stiffness and mass matrices with their interior/boundary
//! blocks, then ask combinatorial questions (zero forcing) or spectral ones
//! (inner solutions, Dirichlet-to-Neumann maps, interlacing).

pub mod assembly;
pub mod cli;
pub mod graph;
pub mod io;
pub mod mesh;
pub mod rng;
pub mod spectra;
