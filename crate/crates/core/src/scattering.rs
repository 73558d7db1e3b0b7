//! Scattering indicators over recorded trajectories: the Duhamel profile
//! w(t) = U_mu(-t) u(t), its Cauchy behavior in H^2, decay of the potential
//! term, and a desk-scale stand-in for the L^k_t L^{r,2}_x finiteness
//! criterion.
//!
//! None of this certifies scattering: the flow lives on a periodic box over a
//! finite horizon, so every verdict is an indicator with its thresholds (1%
//! potential decay, 3x H^2 growth, factor-2 window decay) spelled out here
//! and recorded in the output.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::integrator::{RunVerdict, TrajectoryRecord, TAIL_LOST};
use crate::lorentz::{decreasing_rearrangement, lorentz_norm};
use crate::numutil::linear_fit;
use crate::params::{CriticalExponents, PhysParams};
use crate::propagator::{linear_evolve, LinearSymbol};
use crate::weight::WeightField;
use num_complex::Complex64;
use serde::Serialize;

/// Shortest horizon (and snapshot count) on which the verdict machinery is
/// willing to speak for a completed run.
pub const HORIZON_MIN: f64 = 20.0;
pub const SNAPSHOTS_MIN: usize = 20;

/// Inverts the free propagator snapshot by snapshot: w(t_j) = U_mu(-t_j) u(t_j).
/// For a purely linear trajectory the profiles are constant in time to 1e-12.
pub fn duhamel_profile(traj: &TrajectoryRecord, sym: &LinearSymbol) -> Result<Vec<Field>> {
    if traj.fields.is_empty() {
        return Err(Error::NoSnapshots);
    }
    if traj.fields.len() != traj.times.len() {
        return Err(Error::InsufficientSnapshots(format!(
            "{} field snapshots against {} recorded times",
            traj.fields.len(),
            traj.times.len()
        )));
    }
    traj.fields
        .iter()
        .zip(&traj.times)
        .map(|(u, &t)| linear_evolve(u, -t, sym))
        .collect()
}

/// Splits [t_0, t_end] into n successively halving windows
/// [t_0, m_1], [m_1, m_2], ... with m_i = t_0 + span (1 - 2^-i) and returns
/// the amount of `increments` falling in each, where increments[j] belongs to
/// the interval (times[j], times[j+1]). The cumulative sum is interpolated
/// linearly at window boundaries, so no window comes back empty. Equal
/// increments on an equispaced grid give exactly halving window sums.
pub fn dyadic_window_sums(times: &[f64], increments: &[f64], n_windows: usize) -> Result<Vec<f64>> {
    if times.len() < 2 || increments.len() + 1 != times.len() {
        return Err(Error::EmptySeries(format!(
            "window sums need n times and n-1 increments, got {} and {}",
            times.len(),
            increments.len()
        )));
    }
    if n_windows == 0 {
        return Err(Error::ParameterOutOfRange("need at least one window".into()));
    }
    let span = times[times.len() - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::EmptySeries("snapshot times must be strictly increasing".into()));
    }
    let mut cumulative = Vec::with_capacity(times.len());
    cumulative.push(0.0);
    for inc in increments {
        cumulative.push(cumulative.last().unwrap() + inc);
    }
    let interp = |t: f64| -> f64 {
        let idx = times.partition_point(|&x| x < t).clamp(1, times.len() - 1);
        let (t0, t1) = (times[idx - 1], times[idx]);
        let (c0, c1) = (cumulative[idx - 1], cumulative[idx]);
        c0 + (c1 - c0) * ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
    };
    let mut sums = Vec::with_capacity(n_windows);
    let mut left = times[0];
    for i in 1..=n_windows {
        let right = times[0] + span * (1.0 - 0.5f64.powi(i as i32));
        sums.push(interp(right) - interp(left));
        left = right;
    }
    Ok(sums)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterStatus {
    ScatteringIndicated,
    Undecided,
    Growth,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterVerdict {
    pub status: ScatterStatus,
    /// ||w(t_{j+1}) - w(t_j)||_{H^2} per snapshot pair
    pub cauchy_series: Vec<f64>,
    /// P(u(t_j)) as recorded along the run
    pub potential_series: Vec<f64>,
    /// running (int_0^{t_j} ||u||^k_{L^{r,2}} dt)^{1/k}, nondecreasing
    pub lk_norm_series: Vec<f64>,
    /// the final Duhamel profile when scattering is indicated
    #[serde(skip)]
    pub u_plus: Option<Field>,
    /// last Cauchy increment: the error bar on u_plus standing in for the
    /// Duhamel tail beyond the horizon
    pub tail_error: f64,
}

impl ScatterVerdict {
    pub fn csv(&self, times: &[f64]) -> String {
        let mut out = String::from("t,cauchy,potential,lk_norm\n");
        for (j, &t) in times.iter().enumerate() {
            let cauchy = if j == 0 { 0.0 } else { self.cauchy_series[j - 1] };
            out.push_str(&format!(
                "{t:.16e},{cauchy:.16e},{:.16e},{:.16e}\n",
                self.potential_series[j], self.lk_norm_series[j]
            ));
        }
        out
    }
}

/// Numerical scattering indicator for a recorded trajectory with field
/// snapshots. Growth is declared when the H^2 norm exceeds 3x its initial
/// value or spectral resolution is lost (such runs may end before the
/// horizon; an early blow-up is decisive). Otherwise the run must reach
/// t >= 20 with >= 20 snapshots, and scattering is indicated when all of
/// the following hold over four halving windows of the horizon:
/// the summed Cauchy increments of w are non-increasing window over window,
/// the potential has dropped below 1% of its initial value, and the running
/// L^k-norm increments decay by a factor >= 2 per window.
pub fn scatter_verdict(
    traj: &TrajectoryRecord,
    p: &PhysParams,
    ce: &CriticalExponents,
    sym: &LinearSymbol,
    w: &WeightField,
) -> Result<ScatterVerdict> {
    if sym.mu() != p.mu {
        return Err(Error::ParameterOutOfRange(format!(
            "propagator built for mu = {}, parameters say mu = {}",
            sym.mu(),
            p.mu
        )));
    }
    let profiles = duhamel_profile(traj, sym)?;
    if *traj.fields[0].grid() != *w.grid() {
        return Err(Error::GridMismatch);
    }
    if traj.functionals.len() != traj.times.len() {
        return Err(Error::InsufficientSnapshots(
            "functional series does not cover every snapshot".into(),
        ));
    }

    let n = traj.times.len();
    let mut cauchy_series = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let mut diff = profiles[j].clone();
        diff.add_scaled(&profiles[j - 1], Complex64::new(-1.0, 0.0))?;
        cauchy_series.push(diff.sobolev_norms().h2);
    }
    let potential_series: Vec<f64> = traj.functionals.iter().map(|s| s.potential).collect();
    let mut lk_norm_series = Vec::with_capacity(n);
    lk_norm_series.push(0.0);
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let prof = decreasing_rearrangement(&traj.fields[j])?;
        let v = lorentz_norm(&prof, ce.r, 2.0)?;
        acc += (traj.times[j + 1] - traj.times[j]) * v.powf(ce.k);
        lk_norm_series.push(acc.powf(1.0 / ce.k));
    }
    let tail_error = cauchy_series.last().copied().unwrap_or(0.0);

    let h2: Vec<f64> = traj.fields.iter().map(|u| u.sobolev_norms().h2).collect();
    let blown = h2.iter().any(|&v| v > 3.0 * h2[0]);
    let resolution_lost = traj.verdict == RunVerdict::ResolutionLost
        || traj.fields.last().map(|u| u.spectral_tail_ratio() > TAIL_LOST).unwrap_or(false);
    if blown || resolution_lost {
        return Ok(ScatterVerdict {
            status: ScatterStatus::Growth,
            cauchy_series,
            potential_series,
            lk_norm_series,
            u_plus: None,
            tail_error,
        });
    }

    if traj.last_time() < HORIZON_MIN || n < SNAPSHOTS_MIN {
        return Err(Error::HorizonTooShort(format!(
            "verdict needs t_end >= {HORIZON_MIN} with >= {SNAPSHOTS_MIN} snapshots, \
             got t_end = {} with {n}",
            traj.last_time()
        )));
    }

    // All three indicator conditions run over the same four halving windows.
    let floor = 1e-12 * h2[0].max(f64::MIN_POSITIVE);
    let cauchy_windows = dyadic_window_sums(&traj.times, &cauchy_series, 4)?;
    let cauchy_ok = cauchy_windows.windows(2).all(|p| p[1] <= p[0] + floor);

    let potential_ok =
        potential_series[0] <= 0.0 || potential_series[n - 1] <= 0.01 * potential_series[0];

    let lk_increments: Vec<f64> =
        lk_norm_series.windows(2).map(|p| p[1] - p[0]).collect();
    let lk_windows = dyadic_window_sums(&traj.times, &lk_increments, 4)?;
    let lk_floor = 1e-12 * lk_norm_series[n - 1].max(f64::MIN_POSITIVE);
    let lk_ok = lk_windows.windows(2).all(|p| p[1] <= 0.5 * p[0] + lk_floor);

    let indicated = cauchy_ok && potential_ok && lk_ok;
    Ok(ScatterVerdict {
        status: if indicated {
            ScatterStatus::ScatteringIndicated
        } else {
            ScatterStatus::Undecided
        },
        cauchy_series,
        potential_series,
        lk_norm_series,
        u_plus: indicated.then(|| profiles[n - 1].clone()),
        tail_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayProbe {
    /// log-log slope of P(u(t)) against t
    pub p_decay_exponent: f64,
    pub r2: f64,
    /// set when the fitted exponent is indistinguishable from zero
    pub undecided: bool,
}

/// Fits the decay exponent of the potential along a trajectory: a log-log
/// least-squares line through (t_j, P(u(t_j))) over the positive-time
/// snapshots. Wants at least a decade of time span.
pub fn decay_probe(traj: &TrajectoryRecord) -> Result<DecayProbe> {
    if traj.functionals.len() != traj.times.len() {
        return Err(Error::EmptySeries("functional series does not cover every snapshot".into()));
    }
    let pairs: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.functionals)
        .filter(|(&t, s)| t > 0.0 && s.potential > 0.0)
        .map(|(&t, s)| (t, s.potential))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::EmptySeries(format!(
            "potential fit needs >= 3 positive snapshots, got {}",
            pairs.len()
        )));
    }
    let (t_first, t_last) = (pairs[0].0, pairs[pairs.len() - 1].0);
    if t_last < 10.0 * t_first {
        return Err(Error::SpanTooShort(format!(
            "potential fit wants a decade of span, got [{t_first}, {t_last}]"
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, p)| p.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayProbe {
        p_decay_exponent: fit.slope,
        r2: fit.r2,
        undecided: fit.slope.abs() < 0.05,
    })
}
