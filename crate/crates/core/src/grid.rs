//! Densities tabulated on a uniform cell-centered grid.

use crate::densities::Density;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cells` equal cells covering [lo, hi]; values live at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("grid range [{lo}, {hi}] is empty")));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter(format!("grid needs at least 2 cells, got {cells}")));
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// Cell index containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi {
            return None;
        }
        Some((((x - self.lo) / self.dx()) as usize).min(self.cells - 1))
    }
}

/// Piecewise-constant density: `values[i]` on cell `i`. Integrals are cell
/// sums `Σ Δx f(ρ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.cells
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("grid density value {v} is not a finite nonnegative number")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers.
    pub fn from_fn<F: FnMut(f64) -> f64>(grid: UniformGrid, f: F) -> Result<Self> {
        let values = grid.centers().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Copy with unit cell-sum mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::InvalidParameter("grid density has zero mass".into()));
        }
        Ok(Self { grid: self.grid, values: self.values.iter().map(|v| v / m).collect() })
    }

    /// `Σ Δx g(x_i) ρ_i`.
    pub fn expectation<G: FnMut(f64) -> f64>(&self, mut g: G) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().enumerate().map(|(i, v)| dx * v * g(self.grid.center(i))).sum()
    }

    /// `−Σ Δx ρ_i ln ρ_i`, with 0 ln 0 = 0.
    pub fn entropy(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().filter(|v| **v > 0.0).map(|v| -dx * v * v.ln()).sum()
    }
}

impl Density for GridDensity {
    fn value(&self, x: f64) -> f64 {
        self.grid.locate(x).map_or(0.0, |i| self.values[i])
    }

    fn breaks(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        (0..=self.grid.cells).map(|i| self.grid.lo + i as f64 * dx).collect()
    }

    fn as_grid(&self) -> Option<&GridDensity> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = UniformGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.center(0), 0.25);
        assert_eq!(g.locate(2.0), Some(3));
        assert_eq!(g.locate(-0.1), None);
        assert!(UniformGrid::new(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn normalization_and_entropy() {
        let g = UniformGrid::new(0.0, 4.0, 400).unwrap();
        let d = GridDensity::from_fn(g, |x| 3.0 * (-x).exp()).unwrap().normalized().unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-14);
        // truncated exponential: entropy close to 1 minus the cut tail
        assert!((d.entropy() - 1.0).abs() < 0.1);
        assert!(GridDensity::new(g, vec![-1.0; 400]).is_err());
        assert!(GridDensity::new(g, vec![1.0; 3]).is_err());
    }
}
