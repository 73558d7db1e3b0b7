//! Discrete Lorentz norms via the decreasing rearrangement.
//!
//! Every grid sample carries measure h^dim, so the rearrangement is a step
//! function and the quasi-norm
//!   ||f||_{r,rho} = ((rho/r) int_0^inf (s^{1/r} f*(s))^rho ds/s)^{1/rho}
//! has a closed form per step; rho = inf takes sup s^{1/r} f*(s).

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::weight::WeightField;

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    /// |f| samples sorted in nonincreasing order.
    values: Vec<f64>,
    /// Measure of a single sample.
    cell: f64,
}

impl RearrangementProfile {
    pub fn from_samples(mut magnitudes: Vec<f64>, cell: f64) -> Result<RearrangementProfile> {
        if magnitudes.is_empty() {
            return Err(Error::EmptySeries("rearrangement of an empty sample set".into()));
        }
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::InvalidGrid(format!("cell measure must be positive, got {cell}")));
        }
        if magnitudes.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::ParameterOutOfRange(
                "magnitudes must be finite and nonnegative".into(),
            ));
        }
        magnitudes.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(RearrangementProfile { values: magnitudes, cell })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn total_measure(&self) -> f64 {
        self.cell * self.values.len() as f64
    }

    /// Distribution function d_f(lambda) = |{ |f| > lambda }|.
    pub fn distribution(&self, lambda: f64) -> f64 {
        // values are sorted descending; count strictly greater entries.
        let count = self.values.partition_point(|v| *v > lambda);
        count as f64 * self.cell
    }

    /// Right-continuous rearrangement f*(s) = inf { lambda : d_f(lambda) <= s }.
    pub fn quantile(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.values[0];
        }
        let j = (s / self.cell).floor() as usize;
        if j >= self.values.len() {
            0.0
        } else {
            self.values[j]
        }
    }
}

/// Rearrangement of a physical-space field.
pub fn decreasing_rearrangement(f: &Field) -> Result<RearrangementProfile> {
    if f.space() != Space::Physical {
        return Err(Error::SpaceMismatch { expected: "physical", got: "spectral" });
    }
    let mags: Vec<f64> = f.data().iter().map(|v| v.norm()).collect();
    RearrangementProfile::from_samples(mags, f.grid().cell_volume())
}

/// Rearrangement of the sampled weight.
pub fn weight_rearrangement(w: &WeightField) -> Result<RearrangementProfile> {
    RearrangementProfile::from_samples(w.values().to_vec(), w.grid().cell_volume())
}

/// Lorentz quasi-norm of the profile; `rho = f64::INFINITY` gives the weak
/// norm.
pub fn lorentz_norm(profile: &RearrangementProfile, r: f64, rho: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidExponent(format!("r must be finite and positive, got {r}")));
    }
    if !(rho > 0.0) || rho.is_nan() {
        return Err(Error::InvalidExponent(format!("rho must be positive, got {rho}")));
    }
    let cell = profile.cell;
    if rho.is_infinite() {
        let mut sup: f64 = 0.0;
        for (j, v) in profile.values.iter().enumerate() {
            if *v == 0.0 {
                break;
            }
            let s_right = (j + 1) as f64 * cell;
            sup = sup.max(s_right.powf(1.0 / r) * v);
        }
        return Ok(sup);
    }
    // Per-step closed form: the rho/r prefactor cancels against the
    // antiderivative of s^{rho/r - 1}.
    let e = rho / r;
    let mut acc = 0.0;
    let mut s_left_pow = 0.0;
    for (j, v) in profile.values.iter().enumerate() {
        let s_right_pow = ((j + 1) as f64 * cell).powf(e);
        if *v > 0.0 {
            acc += v.powf(rho) * (s_right_pow - s_left_pow);
        }
        s_left_pow = s_right_pow;
    }
    Ok(acc.powf(1.0 / rho))
}

/// Accumulates (sum_j dt_j * v_j^k)^{1/k} by left-endpoint quadrature over
/// the snapshot times; a single snapshot is weighted with dt = 1.
pub fn lk_accumulate(times: &[f64], values: &[f64], k: f64) -> Result<f64> {
    if times.is_empty() || values.is_empty() {
        return Err(Error::EmptySeries("time-norm accumulation needs at least one snapshot".into()));
    }
    if times.len() != values.len() {
        return Err(Error::EmptySeries(format!(
            "times ({}) and values ({}) differ in length",
            times.len(),
            values.len()
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidExponent(format!("k must be finite and positive, got {k}")));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::ParameterOutOfRange("norm series must be finite and nonnegative".into()));
    }
    if times.len() == 1 {
        return Ok(values[0]);
    }
    let mut acc = 0.0;
    for j in 0..times.len() - 1 {
        let dt = times[j + 1] - times[j];
        if !(dt > 0.0) {
            return Err(Error::EmptySeries("snapshot times must be strictly increasing".into()));
        }
        acc += dt * values[j].powf(k);
    }
    Ok(acc.powf(1.0 / k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Space;
    use crate::grid::make_grid;
    use crate::weight::make_weight;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn indicator(count: usize, n: usize, l: f64) -> (Field, f64) {
        let g = make_grid(1, n, l).unwrap();
        let data: Vec<Complex64> = (0..n)
            .map(|i| if i < count { Complex64::new(1.0, 0.0) } else { Complex64::default() })
            .collect();
        (Field::from_raw(g, Space::Physical, data).unwrap(), count as f64 * g.spacing())
    }

    #[test]
    fn indicator_norm_is_measure_to_the_1_over_r() {
        let (f, m) = indicator(37, 128, 8.0);
        let prof = decreasing_rearrangement(&f).unwrap();
        for &(r, rho) in
            &[(2.0, 2.0), (2.0, 1.0), (3.0, 2.0), (1.5, f64::INFINITY), (4.0, f64::INFINITY)]
        {
            let norm = lorentz_norm(&prof, r, rho).unwrap();
            assert_relative_eq!(norm, m.powf(1.0 / r), max_relative = 1e-13);
        }
    }

    #[test]
    fn l_rr_recovers_lr() {
        let g = make_grid(1, 256, 10.0).unwrap();
        let f = Field::gaussian(g, 1.3, 0.8, [0.5, 0.0, 0.0]);
        let prof = decreasing_rearrangement(&f).unwrap();
        for r in [1.5, 2.0, 3.0, 4.5] {
            let lorentz = lorentz_norm(&prof, r, r).unwrap();
            let lr: f64 = f
                .data()
                .iter()
                .map(|v| v.norm().powf(r))
                .sum::<f64>()
                .mul_add(g.cell_volume(), 0.0)
                .powf(1.0 / r);
            assert_relative_eq!(lorentz, lr, max_relative = 1e-12);
        }
    }

    #[test]
    fn power_identity() {
        let g = make_grid(1, 128, 6.0).unwrap();
        let f = Field::gaussian(g, 0.9, 1.1, [0.0; 3]);
        let prof = decreasing_rearrangement(&f).unwrap();
        let theta = 2.5;
        let powered: Vec<f64> = f.data().iter().map(|v| v.norm().powf(theta)).collect();
        let prof_pow =
            RearrangementProfile::from_samples(powered, g.cell_volume()).unwrap();
        let (r, rho) = (3.0, 2.0);
        let lhs = lorentz_norm(&prof_pow, r, rho).unwrap();
        let rhs = lorentz_norm(&prof, theta * r, theta * rho).unwrap().powf(theta);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn weak_norm_of_weight_on_offset_grid() {
        // ||(|x|^2+eps^2)^{-b/2}||_{L^{d/b, inf}} approaches |B(0,1)|^{b/d} = 2^b
        // in d = 1 under refinement with eps fixed.
        let b = 0.25;
        let eps = 0.05;
        let target = 2.0f64.powf(b);
        let mut prev_err = f64::INFINITY;
        for n in [512usize, 1024, 2048, 4096] {
            let g = make_grid(1, n, 16.0).unwrap();
            let w = make_weight(g, b, Some(eps)).unwrap();
            let prof = weight_rearrangement(&w).unwrap();
            let norm = lorentz_norm(&prof, 1.0 / b, f64::INFINITY).unwrap();
            let err = (norm - target).abs() / target;
            assert!(err < prev_err * 1.0001, "no refinement improvement at n = {n}");
            prev_err = err;
        }
        assert!(prev_err < 0.02, "final relative error {prev_err}");
    }

    #[test]
    fn lk_quadrature_basics() {
        // Constant-in-time value over [0, T]: norm = T^{1/k} * v.
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let vals = vec![2.0; 11];
        let k = 4.0;
        let norm = lk_accumulate(&times, &vals, k).unwrap();
        assert_relative_eq!(norm, 5.0f64.powf(1.0 / k) * 2.0, max_relative = 1e-13);
        // Single snapshot: unit weight.
        assert_relative_eq!(lk_accumulate(&[0.3], &[1.7], k).unwrap(), 1.7);
        // Degenerate series are rejected.
        assert!(lk_accumulate(&[], &[], k).is_err());
        assert!(lk_accumulate(&[0.0, 0.0], &[1.0, 1.0], k).is_err());
    }

    #[test]
    fn invalid_exponents_are_rejected() {
        let (f, _) = indicator(10, 64, 4.0);
        let prof = decreasing_rearrangement(&f).unwrap();
        assert!(lorentz_norm(&prof, 0.0, 2.0).is_err());
        assert!(lorentz_norm(&prof, -1.0, 2.0).is_err());
        assert!(lorentz_norm(&prof, f64::INFINITY, 2.0).is_err());
        assert!(lorentz_norm(&prof, 2.0, 0.0).is_err());
        assert!(lorentz_norm(&prof, 2.0, -3.0).is_err());
        assert!(lorentz_norm(&prof, f64::NAN, 2.0).is_err());
    }

    fn random_profile(seed: u64) -> RearrangementProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..3.0)).collect();
        RearrangementProfile::from_samples(vals, 0.05).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Rearrangement is invariant under sample shuffling, norms scale
        /// with |c|, and the secondary index is nesting:
        /// rho1 <= rho2 implies ||f||_{r,rho2} <= ||f||_{r,rho1}.
        #[test]
        fn profile_properties(seed in 0u64..300, c in 0.1f64..5.0) {
            let prof = random_profile(seed);
            // shuffle = re-sorting the same multiset, same profile.
            let mut shuffled = prof.values().to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 999);
            for i in (1..shuffled.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled.swap(i, j);
            }
            let prof2 = RearrangementProfile::from_samples(shuffled, prof.cell()).unwrap();
            prop_assert_eq!(prof.values(), prof2.values());

            let scaled: Vec<f64> = prof.values().iter().map(|v| c * v).collect();
            let prof_c = RearrangementProfile::from_samples(scaled, prof.cell()).unwrap();
            for &(r, rho) in &[(2.0, 1.0), (2.0, 2.0), (2.0, 3.5), (2.0, f64::INFINITY)] {
                let base = lorentz_norm(&prof, r, rho).unwrap();
                let sc = lorentz_norm(&prof_c, r, rho).unwrap();
                prop_assert!((sc - c * base).abs() <= 1e-10 * (c * base).max(1e-300));
            }
            let n1 = lorentz_norm(&prof, 2.0, 1.0).unwrap();
            let n2 = lorentz_norm(&prof, 2.0, 2.0).unwrap();
            let n35 = lorentz_norm(&prof, 2.0, 3.5).unwrap();
            let ninf = lorentz_norm(&prof, 2.0, f64::INFINITY).unwrap();
            prop_assert!(n2 <= n1 * (1.0 + 1e-12));
            prop_assert!(n35 <= n2 * (1.0 + 1e-12));
            prop_assert!(ninf <= n35 * (1.0 + 1e-12));
        }

        /// quantile and distribution are mutually consistent.
        #[test]
        fn quantile_inverts_distribution(seed in 0u64..300, s in 0.0f64..10.0) {
            let prof = random_profile(seed);
            let v = prof.quantile(s);
            // d_f(f*(s)) <= s by right-continuity of the step profile.
            prop_assert!(prof.distribution(v) <= s + 1e-12);
        }
    }
}
