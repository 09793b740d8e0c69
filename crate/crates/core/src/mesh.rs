//! Uniform one-dimensional mesh on `[0, L]`.
//!
//! Node 0 is the clamped end, node `n` carries the tip body.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    elements: usize,
    length: f64,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(elements: usize, length: f64) -> Result<Self> {
        if elements < 2 {
            return Err(Error::TooFewElements(elements));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mesh length must be > 0, got {length}"
            )));
        }
        let h = length / elements as f64;
        let nodes = (0..=elements)
            .map(|i| if i == elements { length } else { i as f64 * h })
            .collect();
        Ok(Self {
            elements,
            length,
            h,
            nodes,
        })
    }

    /// Number of elements `n`.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// All `n + 1` node coordinates, including the clamped node.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Coordinates of the free nodes `1..=n` (the unknowns of one field).
    pub fn free_nodes(&self) -> &[f64] {
        &self.nodes[1..]
    }
}
