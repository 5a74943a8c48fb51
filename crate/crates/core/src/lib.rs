//! Morley-type nonconforming virtual element method for the clamped
//! von Kármán plate equations on polygonal meshes.

pub mod assembly;
pub mod cli;
pub mod element;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod solver;
