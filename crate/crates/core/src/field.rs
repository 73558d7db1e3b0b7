//! Complex scalar fields on a periodic grid, in physical or spectral
//! representation, with the Sobolev bookkeeping used everywhere else.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

impl Space {
    pub fn as_str(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    space: Space,
    data: Vec<Complex64>,
}

/// Unsquared L^2-based norms: ||f||, ||grad f||, ||Lap f|| and the full H^2
/// norm sqrt(||f||^2 + ||grad f||^2 + ||Lap f||^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevNorms {
    pub l2: f64,
    pub h1dot: f64,
    pub h2dot: f64,
    pub h2: f64,
}

pub fn assert_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field { grid, space: Space::Physical, data: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_raw(grid: Grid, space: Space, data: Vec<Complex64>) -> Result<Field> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "data length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, space, data })
    }

    /// Samples a function of the physical coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 3]) -> Complex64) -> Field {
        let mut out = Field::zeros(grid);
        for (flat, v) in out.data.iter_mut().enumerate() {
            *v = f(&grid.point(flat));
        }
        out
    }

    /// Isotropic Gaussian a * exp(-|x - c|^2 / (2 w^2)).
    pub fn gaussian(grid: Grid, amplitude: f64, width: f64, center: [f64; 3]) -> Field {
        let inv = 1.0 / (2.0 * width * width);
        Field::from_fn(grid, |x| {
            let mut r2 = 0.0;
            for a in 0..grid.dim() {
                let dxa = x[a] - center[a];
                r2 += dxa * dxa;
            }
            Complex64::new(amplitude * (-r2 * inv).exp(), 0.0)
        })
    }

    /// Annular bump a * exp(-(|x| - r0)^2 / (2 w^2)).
    pub fn ring(grid: Grid, amplitude: f64, r0: f64, width: f64) -> Field {
        let inv = 1.0 / (2.0 * width * width);
        Field::from_fn(grid, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let dr = r - r0;
            Complex64::new(amplitude * (-dr * dr * inv).exp(), 0.0)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn expect_space(&self, want: Space) -> Result<()> {
        if self.space != want {
            return Err(Error::SpaceMismatch {
                expected: want.as_str(),
                got: self.space.as_str(),
            });
        }
        Ok(())
    }

    /// Physical -> spectral, unitary.
    pub fn forward(&mut self) -> Result<()> {
        self.expect_space(Space::Physical)?;
        fft::transform_all(&mut self.data, &self.grid, true);
        self.space = Space::Spectral;
        Ok(())
    }

    /// Spectral -> physical, unitary.
    pub fn inverse(&mut self) -> Result<()> {
        self.expect_space(Space::Spectral)?;
        fft::transform_all(&mut self.data, &self.grid, false);
        self.space = Space::Physical;
        Ok(())
    }

    pub fn spectral_copy(&self) -> Field {
        let mut c = self.clone();
        if c.space == Space::Physical {
            c.forward().expect("space checked");
        }
        c
    }

    pub fn physical_copy(&self) -> Field {
        let mut c = self.clone();
        if c.space == Space::Spectral {
            c.inverse().expect("space checked");
        }
        c
    }

    /// Squared L^2 norm, identical in both spaces by unitarity.
    pub fn l2_sq(&self) -> f64 {
        let cell = self.grid.cell_volume();
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
    }

    /// Hermitian inner product <f, g> = h^dim * sum conj(f) g, same-space.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        assert_same_grid(self, other)?;
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                expected: self.space.as_str(),
                got: other.space.as_str(),
            });
        }
        let cell = self.grid.cell_volume();
        let mut acc = Complex64::default();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a.conj() * b;
        }
        Ok(acc * cell)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in self.data.iter_mut() {
            *v *= c;
        }
    }

    pub fn add_scaled(&mut self, other: &Field, c: Complex64) -> Result<()> {
        assert_same_grid(self, other)?;
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                expected: self.space.as_str(),
                got: other.space.as_str(),
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    /// ||f||, ||grad f||, ||Lap f|| and the combined H^2 norm via Plancherel.
    pub fn sobolev_norms(&self) -> SobolevNorms {
        let spec = match self.space {
            Space::Spectral => None,
            Space::Physical => Some(self.spectral_copy()),
        };
        let f = spec.as_ref().unwrap_or(self);
        let cell = self.grid.cell_volume();
        let (mut s0, mut s2, mut s4) = (0.0f64, 0.0f64, 0.0f64);
        for (flat, v) in f.data.iter().enumerate() {
            let m = v.norm_sqr();
            let xi2 = self.grid.wavenumber_sq(flat);
            s0 += m;
            s2 += xi2 * m;
            s4 += xi2 * xi2 * m;
        }
        s0 *= cell;
        s2 *= cell;
        s4 *= cell;
        SobolevNorms {
            l2: s0.sqrt(),
            h1dot: s2.sqrt(),
            h2dot: s4.sqrt(),
            h2: (s0 + s2 + s4).sqrt(),
        }
    }

    /// Applies a spectral multiplier given |xi|^2.
    pub fn spectral_map(&mut self, f: impl Fn(f64) -> Complex64) -> Result<()> {
        self.expect_space(Space::Spectral)?;
        for flat in 0..self.data.len() {
            let xi2 = self.grid.wavenumber_sq(flat);
            self.data[flat] *= f(xi2);
        }
        Ok(())
    }

    /// Spectral derivative along one axis, returned in physical space. The
    /// unpaired Nyquist mode is dropped so real fields stay real.
    pub fn gradient_component(&self, axis: usize) -> Result<Field> {
        if axis >= self.grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} out of range for dim {}",
                self.grid.dim()
            )));
        }
        let mut spec = self.spectral_copy();
        let grid = self.grid;
        for (flat, v) in spec.data.iter_mut().enumerate() {
            let idx = grid.unravel(flat);
            let xi = grid.odd_wavenumber(idx[axis]);
            *v *= Complex64::new(0.0, xi);
        }
        spec.inverse()?;
        Ok(spec)
    }

    /// Spectral Laplacian, returned in physical space.
    pub fn laplacian(&self) -> Field {
        let mut spec = self.spectral_copy();
        for (flat, v) in spec.data.iter_mut().enumerate() {
            let xi2 = self.grid.wavenumber_sq(flat);
            *v *= -xi2;
        }
        spec.inverse().expect("spectral state");
        spec
    }

    /// Spectral bi-Laplacian, returned in physical space.
    pub fn bilaplacian(&self) -> Field {
        let mut spec = self.spectral_copy();
        for (flat, v) in spec.data.iter_mut().enumerate() {
            let xi2 = self.grid.wavenumber_sq(flat);
            *v *= xi2 * xi2;
        }
        spec.inverse().expect("spectral state");
        spec
    }

    /// Mass fraction in the outer shell where max_a |x_a| >= (1-shell)*L.
    pub fn boundary_mass_fraction(&self, shell: f64) -> Result<f64> {
        self.expect_space(Space::Physical)?;
        let cut = (1.0 - shell) * self.grid.half_width();
        let mut outer = 0.0;
        let mut total = 0.0;
        for (flat, v) in self.data.iter().enumerate() {
            let x = self.grid.point(flat);
            let m = v.norm_sqr();
            total += m;
            let linf = x.iter().take(self.grid.dim()).fold(0.0f64, |acc, c| acc.max(c.abs()));
            if linf >= cut {
                outer += m;
            }
        }
        if total == 0.0 {
            return Ok(0.0);
        }
        Ok(outer / total)
    }

    /// Peak spectral magnitude in the outer tenth of the frequency lattice,
    /// relative to the global peak. Near 0 for well-resolved fields.
    pub fn spectral_tail_ratio(&self) -> f64 {
        let spec = match self.space {
            Space::Spectral => None,
            Space::Physical => Some(self.spectral_copy()),
        };
        let f = spec.as_ref().unwrap_or(self);
        let jmax = (self.grid.n_per_axis() / 2) as f64;
        let cut = 0.9 * jmax;
        let mut peak = 0.0f64;
        let mut tail = 0.0f64;
        for (flat, v) in f.data.iter().enumerate() {
            let m = v.norm();
            peak = peak.max(m);
            let idx = self.grid.unravel(flat);
            let far = (0..self.grid.dim())
                .any(|a| (self.grid.signed_index(idx[a]).unsigned_abs() as f64) >= cut);
            if far {
                tail = tail.max(m);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            tail / peak
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_gaussian_1d() -> Field {
        let g = make_grid(1, 256, 16.0).unwrap();
        Field::gaussian(g, 1.0, 1.0, [0.0; 3])
    }

    #[test]
    fn gaussian_l2_matches_closed_form() {
        // integral of exp(-x^2) over R is sqrt(pi).
        let f = unit_gaussian_1d();
        assert_relative_eq!(f.l2_sq(), std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        // Coarser 3D grid: aliasing of exp(-x^2) at h = 0.625 sits near 6e-11.
        let g3 = make_grid(3, 32, 10.0).unwrap();
        let f3 = Field::gaussian(g3, 1.0, 1.0, [0.0; 3]);
        assert_relative_eq!(f3.l2_sq(), std::f64::consts::PI.powf(1.5), max_relative = 1e-9);
    }

    #[test]
    fn sobolev_norms_of_gaussian() {
        let f = unit_gaussian_1d();
        let n = f.sobolev_norms();
        let pi = std::f64::consts::PI;
        // ||f'||^2 = sqrt(pi)/2, ||f''||^2 = 3 sqrt(pi)/4 for exp(-x^2/2).
        assert_relative_eq!(n.l2 * n.l2, pi.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(n.h1dot * n.h1dot, pi.sqrt() / 2.0, max_relative = 1e-12);
        assert_relative_eq!(n.h2dot * n.h2dot, 0.75 * pi.sqrt(), max_relative = 1e-12);
        let sum = n.l2 * n.l2 + n.h1dot * n.h1dot + n.h2dot * n.h2dot;
        assert_relative_eq!(n.h2, sum.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn plane_wave_concentrates_in_one_bin() {
        let g = make_grid(1, 64, 8.0).unwrap();
        let xi = g.axis_wavenumber(5);
        let f = Field::from_fn(g, |x| Complex64::new(0.0, xi * x[0]).exp());
        let spec = f.spectral_copy();
        let mags: Vec<f64> = spec.data().iter().map(|v| v.norm()).collect();
        let (argmax, _) =
            mags.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
        assert_eq!(argmax, 5);
        let rest: f64 =
            mags.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, m)| m * m).sum();
        assert!(rest < 1e-22 * mags[5] * mags[5]);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = make_grid(1, 64, 8.0).unwrap();
        let xi = g.axis_wavenumber(3);
        let f = Field::from_fn(g, |x| Complex64::new(0.0, xi * x[0]).exp());
        let df = f.gradient_component(0).unwrap();
        for (flat, v) in df.data().iter().enumerate() {
            let x = g.point(flat)[0];
            let want = Complex64::new(0.0, xi) * Complex64::new(0.0, xi * x).exp();
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_gaussian() {
        let f = unit_gaussian_1d();
        let lap = f.laplacian();
        for (flat, v) in lap.data().iter().enumerate() {
            let x = f.grid().point(flat)[0];
            let want = (x * x - 1.0) * (-0.5 * x * x).exp();
            assert!((v.re - want).abs() < 1e-10, "x = {x}: {} vs {want}", v.re);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_mass_of_centered_and_shifted() {
        let g = make_grid(1, 256, 16.0).unwrap();
        let centered = Field::gaussian(g, 1.0, 1.0, [0.0; 3]);
        assert!(centered.boundary_mass_fraction(0.1).unwrap() < 1e-30);
        let shifted = Field::gaussian(g, 1.0, 1.0, [15.0, 0.0, 0.0]);
        assert!(shifted.boundary_mass_fraction(0.1).unwrap() > 0.5);
    }

    #[test]
    fn space_mismatch_is_reported() {
        let mut f = unit_gaussian_1d();
        assert!(f.inverse().is_err());
        f.forward().unwrap();
        assert!(f.forward().is_err());
        f.inverse().unwrap();
    }

    fn random_field(seed: u64, n: usize) -> Field {
        let g = make_grid(1, n, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Field::from_raw(g, Space::Physical, data).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval_and_roundtrip(seed in 0u64..1000) {
            let f = random_field(seed, 128);
            let spec = f.spectral_copy();
            // Plancherel: the L^2 norm is preserved exactly by the unitary DFT.
            prop_assert!((f.l2_sq() - spec.l2_sq()).abs() <= 1e-12 * f.l2_sq());
            // Forward then inverse returns the samples.
            let back = spec.physical_copy();
            let err: f64 = f
                .data()
                .iter()
                .zip(back.data())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            prop_assert!(err <= 1e-12 * f.l2_sq().sqrt() / f.grid().cell_volume().sqrt());
        }

        #[test]
        fn inner_product_is_sesquilinear(seed in 0u64..500) {
            let f = random_field(seed, 64);
            let g = random_field(seed + 7, 64);
            let c = Complex64::new(0.3, -1.2);
            let mut fc = f.clone();
            fc.scale(c);
            let lhs = fc.inner(&g).unwrap();
            let rhs = c.conj() * f.inner(&g).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }
}
