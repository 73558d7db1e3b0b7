//! The singular potential weight |x|^{-b}, sampled with an optional
//! regularization (|x|^2 + eps^2)^{-b/2}.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    grid: Grid,
    b: f64,
    eps_reg: f64,
    values: Vec<f64>,
}

/// Samples (|x|^2 + eps^2)^{-b/2} on the grid. `eps_reg = None` selects the
/// default h/2; an explicit 0 is allowed only when no grid point coincides
/// with the origin.
pub fn make_weight(grid: Grid, b: f64, eps_reg: Option<f64>) -> Result<WeightField> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("weight exponent b must be positive, got {b}")));
    }
    let eps = eps_reg.unwrap_or(grid.spacing() / 2.0);
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("eps_reg must be >= 0, got {eps}")));
    }
    if eps == 0.0 && !grid.is_offset() {
        return Err(Error::SingularOrigin);
    }
    let eps2 = eps * eps;
    let mut values = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let r2 = grid.radius_sq(flat);
        values.push((r2 + eps2).powf(-b / 2.0));
    }
    Ok(WeightField { grid, b, eps_reg: eps, values })
}

impl WeightField {
    /// Assembles a weight from externally computed samples; used by the
    /// stationary solver's quadrature-corrected kernel.
    pub(crate) fn from_parts(grid: Grid, b: f64, eps_reg: f64, values: Vec<f64>) -> Self {
        WeightField { grid, b, eps_reg, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eps_reg(&self) -> f64 {
        self.eps_reg
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
