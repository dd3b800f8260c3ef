//! Sampled complex functions on frequency grids, the symmetry operator, and
//! band norms.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex function sampled on complex abscissae, with optional quadrature
/// weights and free-form tags (band, units, ...).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<C64>,
    pub values: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

const MATCH_TOL: f64 = 1e-9;

impl GridFunction {
    pub fn new(grid: Vec<C64>, values: Vec<C64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Param("grid and values must have equal length".into()));
        }
        for i in 0..grid.len() {
            for j in 0..i {
                if (grid[i] - grid[j]).norm() < MATCH_TOL {
                    return Err(Error::Param(format!("duplicate abscissa at index {i}")));
                }
            }
        }
        Ok(Self { grid, values, weights: None, metadata: BTreeMap::new() })
    }

    /// Sample a function on a grid.
    pub fn sample<F: FnMut(C64) -> C64>(grid: Vec<C64>, mut f: F) -> Result<Self> {
        let values = grid.iter().map(|&w| f(w)).collect();
        Self::new(grid, values)
    }

    /// Index of the reflected abscissa `-conj(w)` for every grid point.
    fn reflection_indices(&self) -> Result<Vec<usize>> {
        self.grid
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let target = -w.conj();
                self.grid
                    .iter()
                    .position(|&u| (u - target).norm() < MATCH_TOL)
                    .ok_or(Error::GridNotSymmetric { index: i })
            })
            .collect()
    }
}

/// The symmetry operator `S f(w) = conj(f(-conj w))` applied sample-wise.
/// The grid must be closed under `w -> -conj(w)`.
pub fn apply_s(g: &GridFunction) -> Result<GridFunction> {
    let idx = g.reflection_indices()?;
    let values = idx.iter().map(|&j| g.values[j].conj()).collect();
    Ok(GridFunction {
        grid: g.grid.clone(),
        values,
        weights: g.weights.clone(),
        metadata: g.metadata.clone(),
    })
}

/// `max |f - S f|` over the grid.
pub fn symmetry_defect(g: &GridFunction) -> Result<f64> {
    let sg = apply_s(g)?;
    Ok(g.values
        .iter()
        .zip(&sg.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// L2 norm of the samples over `[a, b]` using the attached rule.
pub fn band_norm(g: &GridFunction, a: f64, b: f64) -> Result<f64> {
    let weights = g.weights.as_ref().ok_or(Error::Coverage)?;
    if weights.len() != g.grid.len() {
        return Err(Error::Coverage);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in &g.grid {
        if w.im.abs() > MATCH_TOL {
            return Err(Error::Coverage);
        }
        lo = lo.min(w.re);
        hi = hi.max(w.re);
    }
    // the rule's span must cover the requested interval
    if lo > a + 0.05 * (b - a) || hi < b - 0.05 * (b - a) {
        return Err(Error::Coverage);
    }
    Ok(g.values
        .iter()
        .zip(weights)
        .map(|(v, &w)| w * v.norm_sqr())
        .sum::<f64>()
        .sqrt())
}
