//! JSON mesh files: `{"vertices": [[x, y], ...], "cells": [[i, j, k, ...], ...]}`.
//! Boundary edges are recovered from edge multiplicity on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MeshError, PolygonalMesh};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolygonalMesh> for MeshFile {
    fn from(mesh: &PolygonalMesh) -> Self {
        MeshFile {
            vertices: mesh.vertices().to_vec(),
            cells: mesh.cells().to_vec(),
        }
    }
}

pub fn mesh_to_json(mesh: &PolygonalMesh) -> String {
    serde_json::to_string(&MeshFile::from(mesh)).expect("mesh serialisation cannot fail")
}

pub fn mesh_from_json(text: &str) -> Result<PolygonalMesh, MeshError> {
    let file: MeshFile = serde_json::from_str(text)
        .map_err(|e| MeshError::Parse(format!("invalid mesh file: {e}")))?;
    if let Some((i, p)) = file
        .vertices
        .iter()
        .enumerate()
        .find(|(_, p)| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(MeshError::Parse(format!("vertices[{i}] is not finite: {p:?}")));
    }
    PolygonalMesh::new(file.vertices, file.cells)
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut text = mesh_to_json(mesh);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh, MeshError> {
    mesh_from_json(&fs::read_to_string(path)?)
}
