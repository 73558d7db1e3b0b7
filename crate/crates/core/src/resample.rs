//! Band-limited coordinate dilation x -> lambda x by per-axis evaluation of
//! the trigonometric interpolant.

use crate::error::Result;
use crate::field::{Field, Space};
use num_complex::Complex64;

/// Evaluates the interpolant of one line at fractional index positions.
/// `line` holds physical samples; `tau` are target positions in index
/// coordinates (sample i sits at tau = i). The unpaired Nyquist mode is
/// evaluated as a cosine so real lines stay real.
fn resample_line(line: &[Complex64], tau: &[f64]) -> Vec<Complex64> {
    let n = line.len();
    let mut spec = line.to_vec();
    crate::fft::transform_all(
        &mut spec,
        &crate::grid::make_grid(1, n, 1.0).expect("line grid"),
        true,
    );
    let scale = (n as f64).sqrt().recip();
    let base = 2.0 * std::f64::consts::PI / n as f64;
    let mut out = Vec::with_capacity(tau.len());
    for &t in tau {
        let mut acc = Complex64::default();
        for (k, c) in spec.iter().enumerate() {
            if k == n / 2 {
                // Nyquist: symmetric half-sum of e^{+i pi t} and e^{-i pi t}.
                acc += c * (std::f64::consts::PI * t).cos();
            } else {
                let j = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                acc += c * Complex64::new(0.0, base * j * t).exp();
            }
        }
        out.push(acc * scale);
    }
    out
}

/// Samples f(lambda x) on the same grid via separable per-axis interpolation.
/// Targets that land outside the box read as zero rather than wrapping, so a
/// contraction (lambda > 1) does not drag in periodic images of the profile.
pub fn dilate(f: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(crate::error::Error::ParameterOutOfRange(format!(
            "dilation factor must be positive and finite, got {lambda}"
        )));
    }
    let phys = f.physical_copy();
    let grid = *phys.grid();
    let n = grid.n_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    let off = if grid.is_offset() { 0.5 } else { 0.0 };
    // Target index coordinate of lambda * x_i along any axis, and whether the
    // target still lies in the box [-L, L).
    let mut tau = Vec::with_capacity(n);
    let mut in_box = Vec::with_capacity(n);
    for i in 0..n {
        let y = lambda * grid.axis_coord(i);
        tau.push((y + l) / h - off);
        in_box.push((-l..l).contains(&y));
    }

    let mut data = phys.data().to_vec();
    for axis in 0..grid.dim() {
        let stride = n.pow(axis as u32);
        let plane = stride * n;
        let n_planes = data.len() / plane;
        let mut line = vec![Complex64::default(); n];
        for p in 0..n_planes {
            for q in 0..stride {
                let basei = p * plane + q;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[basei + i * stride];
                }
                let res = resample_line(&line, &tau);
                for (i, v) in res.iter().enumerate() {
                    data[basei + i * stride] = if in_box[i] { *v } else { Complex64::default() };
                }
            }
        }
    }
    Field::from_raw(grid, Space::Physical, data)
}
