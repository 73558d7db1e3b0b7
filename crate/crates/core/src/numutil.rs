//! Small numeric helpers shared across modules.

use crate::error::{Error, Result};

/// Computes m2^e (m2 = |u|^2 >= 0), using exact half-integer powers when
/// possible; powf dominates the stepping cost otherwise.
#[inline]
pub fn pow_m2(m2: f64, e: f64) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    let twice = 2.0 * e;
    let k = twice.round();
    if (twice - k).abs() < 1e-12 && (0.0..=128.0).contains(&k) {
        let k = k as i32;
        let whole = m2.powi(k / 2);
        if k % 2 == 0 {
            whole
        } else {
            whole * m2.sqrt()
        }
    } else {
        m2.powf(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub r2: f64,
}

/// Ordinary least squares y = slope * x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::EmptySeries(format!(
            "linear fit needs >= 2 paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::EmptySeries("linear fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LineFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_integer_powers() {
        for (m2, e) in [(2.0, 2.5), (3.7, 5.0), (0.5, 1.5), (1.9, 0.125)] {
            assert_relative_eq!(pow_m2(m2, e), m2.powf(e), max_relative = 1e-14);
        }
        assert_eq!(pow_m2(0.0, 2.0), 0.0);
        assert_eq!(pow_m2(5.0, 0.0), 1.0);
    }

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, 3.0, max_relative = 1e-14);
        assert_relative_eq!(fit.intercept, -1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-14);
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }
}
