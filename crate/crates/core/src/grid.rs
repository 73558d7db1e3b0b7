//! Uniform periodic grids on [-L, L)^dim with the matching wavenumber
//! lattice.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tensor grid with n points per axis, spacing h = 2L/n. Physical samples sit
/// at -L + i*h (plus half a cell when `offset` is set, which keeps the origin
/// off the grid). Wavenumbers are xi_j = (pi/L) * j with signed index j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
    #[serde(default)]
    offset: bool,
}

pub fn make_grid(dim: usize, n_points: usize, half_width: f64) -> Result<Grid> {
    Grid::new(dim, n_points, half_width, false)
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64, offset: bool) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half_width must be positive, got {half_width}")));
        }
        Ok(Grid { dim, n, half_width, offset })
    }

    pub fn offset(dim: usize, n: usize, half_width: f64) -> Result<Grid> {
        Grid::new(dim, n, half_width, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn is_offset(&self) -> bool {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Physical coordinate of axis index i.
    pub fn axis_coord(&self, i: usize) -> f64 {
        let shift = if self.offset { 0.5 } else { 0.0 };
        -self.half_width + (i as f64 + shift) * self.spacing()
    }

    /// Signed frequency index of FFT bin k; the Nyquist bin maps to -n/2.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wavenumber of FFT bin k along one axis.
    pub fn axis_wavenumber(&self, k: usize) -> f64 {
        std::f64::consts::PI / self.half_width * self.signed_index(k) as f64
    }

    /// Wavenumber for odd multipliers (first derivatives): the unpaired
    /// Nyquist bin is zeroed so that d/dx maps real data to real data.
    pub fn odd_wavenumber(&self, k: usize) -> f64 {
        if k == self.n / 2 {
            0.0
        } else {
            self.axis_wavenumber(k)
        }
    }

    /// Decomposes a flat storage index into per-axis indices (x fastest).
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for item in idx.iter_mut().take(self.dim) {
            *item = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    /// Physical coordinates of a flat index; unused axes read zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0f64; 3];
        for a in 0..self.dim {
            x[a] = self.axis_coord(idx[a]);
        }
        x
    }

    /// Squared radius of a flat index.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let x = self.point(flat);
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }

    /// Squared wavenumber |xi|^2 of a flat spectral index.
    pub fn wavenumber_sq(&self, flat: usize) -> f64 {
        let idx = self.unravel(flat);
        let mut s = 0.0;
        for a in 0..self.dim {
            let xi = self.axis_wavenumber(idx[a]);
            s += xi * xi;
        }
        s
    }
}
