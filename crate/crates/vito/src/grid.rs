//! Uniform time grids and sampled paths, the containers every other module
//! consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of [0, horizon] into `n_steps` cells of width `dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::Domain(format!(
                "grid horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps < 2 {
            return Err(Error::Domain(format!(
                "grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Node `i * dt`; the last node reproduces the horizon exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    /// Index of a grid-aligned time, rejecting times off the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        if !t.is_finite() {
            return Err(Error::Misaligned(t));
        }
        let r = t / self.dt();
        let i = r.round();
        if (r - i).abs() > 1e-6 || i < 0.0 || i > self.n_steps as f64 {
            return Err(Error::Misaligned(t));
        }
        Ok(i as usize)
    }
}

/// A path sampled on a [`TimeGrid`], values stored node major with `dim`
/// components per node.
#[derive(Clone, Debug)]
pub struct SamplePath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("path dimension must be positive".into()));
        }
        if values.len() != grid.n_nodes() * dim {
            return Err(Error::Domain(format!(
                "path storage has {} entries, grid with dim {} needs {}",
                values.len(),
                dim,
                grid.n_nodes() * dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        let values = vec![0.0; grid.n_nodes() * dim];
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn value_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.dim..(node + 1) * self.dim]
    }

    /// First component at a node, convenient for scalar paths.
    pub fn scalar(&self, node: usize) -> f64 {
        self.values[node * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest and largest entry over all nodes and components, used for
    /// frequency anti-aliasing checks.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn grid_nodes_and_alignment() {
        let g = TimeGrid::new(2.0, 8).unwrap();
        assert_eq!(g.n_nodes(), 9);
        assert!((g.dt() - 0.25).abs() < 1e-15);
        assert_eq!(g.node(8), 2.0);
        assert_eq!(g.index_of(0.75).unwrap(), 3);
        assert!(g.index_of(0.7).is_err());
        assert!(g.index_of(2.25).is_err());
    }

    #[test]
    fn path_layout_roundtrip() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let mut p = SamplePath::zeros(g, 2);
        p.value_mut(3)[1] = 7.5;
        assert_eq!(p.value(3), &[0.0, 7.5]);
        assert_eq!(p.scalar(3), 0.0);
        assert_eq!(p.range(), (0.0, 7.5));
        assert!(SamplePath::new(g, 2, vec![0.0; 9]).is_err());
    }
}
