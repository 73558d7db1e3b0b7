//! Physical parameters, criticality indices and the exponent system used by
//! the space-time estimates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sign of the nonlinear coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Kappa {
    Focusing,
    Defocusing,
}

impl Kappa {
    /// +1 for focusing, -1 for defocusing.
    pub fn sign(self) -> f64 {
        match self {
            Kappa::Focusing => 1.0,
            Kappa::Defocusing => -1.0,
        }
    }
}

impl TryFrom<i8> for Kappa {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Kappa::Focusing),
            -1 => Ok(Kappa::Defocusing),
            other => Err(format!("kappa must be +1 or -1, got {other}")),
        }
    }
}

impl From<Kappa> for i8 {
    fn from(k: Kappa) -> i8 {
        match k {
            Kappa::Focusing => 1,
            Kappa::Defocusing => -1,
        }
    }
}

/// Parameters of i u_t - Lap^2 u + mu Lap u = -kappa |x|^{-b} |u|^alpha u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub d: usize,
    pub mu: f64,
    pub b: f64,
    pub alpha: f64,
    pub kappa: Kappa,
    pub omega: f64,
}

impl PhysParams {
    pub fn new(d: usize, mu: f64, b: f64, alpha: f64, kappa: Kappa, omega: f64) -> Self {
        PhysParams { d, mu, b, alpha, kappa, omega }
    }

    /// d*alpha + 2b, the scaling weight of the potential term.
    pub fn dab(&self) -> f64 {
        self.d as f64 * self.alpha + 2.0 * self.b
    }

    /// 8 - 2b - (d-4)*alpha, positive exactly in the energy-subcritical range.
    pub fn energy_gap(&self) -> f64 {
        8.0 - 2.0 * self.b - (self.d as f64 - 4.0) * self.alpha
    }
}

/// Which well-posedness framework the parameters must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Ground-state / variational range: 0 < b < min(d, 4).
    Variational,
    /// Dynamical range: 0 < b < min(d/2, 4).
    Evolution,
}

/// Checks positivity and the b-window for the requested mode.
pub fn validate_params(p: &PhysParams, mode: ValidationMode) -> Result<()> {
    if p.d < 1 {
        return Err(Error::ParameterOutOfRange("d must be a positive integer".into()));
    }
    if !(p.alpha > 0.0) || !p.alpha.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("alpha must be positive, got {}", p.alpha)));
    }
    if !(p.b > 0.0) || !p.b.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("b must be positive, got {}", p.b)));
    }
    if !(p.mu >= 0.0) || !p.mu.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("mu must be >= 0, got {}", p.mu)));
    }
    if !(p.omega > 0.0) || !p.omega.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("omega must be > 0, got {}", p.omega)));
    }
    let d = p.d as f64;
    let b_cap = match mode {
        ValidationMode::Variational => d.min(4.0),
        ValidationMode::Evolution => (d / 2.0).min(4.0),
    };
    if p.b >= b_cap {
        return Err(Error::ParameterOutOfRange(format!(
            "b = {} must lie below {} for this mode (d = {})",
            p.b, b_cap, p.d
        )));
    }
    if p.d >= 5 && p.alpha >= (8.0 - 2.0 * p.b) / (d - 4.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "alpha = {} reaches the energy-critical power {} in d = {}",
            p.alpha,
            (8.0 - 2.0 * p.b) / (d - 4.0),
            p.d
        )));
    }
    Ok(())
}

/// Scaling-criticality index gamma_c = d/2 - (4-b)/alpha.
pub fn gamma_c(p: &PhysParams) -> f64 {
    p.d as f64 / 2.0 - (4.0 - p.b) / p.alpha
}

/// sigma_c = (2 - gamma_c)/gamma_c; +inf at the mass-critical point.
pub fn sigma_c(p: &PhysParams) -> f64 {
    let g = gamma_c(p);
    if g == 0.0 {
        f64::INFINITY
    } else {
        (2.0 - g) / g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeTag {
    MassSubcritical,
    MassCritical,
    Intercritical,
    EnergyCritical,
    EnergySupercritical,
}

/// Criticality classification together with the symmetry requirement of the
/// decay theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub gamma_c: f64,
    pub sigma_c: f64,
    pub tag: RegimeTag,
    /// True when the decay estimates are only available for radial data:
    /// d = 4 with b <= 1, or d = 3 with b < 3/2. In d >= 5, and in d = 4
    /// with 1 < b < 2, general data is admissible.
    pub radial_required: bool,
}

const TIE_TOL: f64 = 1e-12;

/// Classifies the parameters by gamma_c, breaking ties toward the critical
/// labels.
pub fn classify_regime(p: &PhysParams) -> Regime {
    let g = gamma_c(p);
    let tag = if g.abs() <= TIE_TOL {
        RegimeTag::MassCritical
    } else if (g - 2.0).abs() <= TIE_TOL {
        RegimeTag::EnergyCritical
    } else if g < 0.0 {
        RegimeTag::MassSubcritical
    } else if g < 2.0 {
        RegimeTag::Intercritical
    } else {
        RegimeTag::EnergySupercritical
    };
    let radial_required = match p.d {
        4 => p.b <= 1.0,
        3 => p.b < 1.5,
        _ => false,
    };
    Regime { gamma_c: g, sigma_c: sigma_c(p), tag, radial_required }
}

/// Exponent system for the space-time norms, plus the growth rate of the
/// long-time bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub q: f64,
    pub r: f64,
    pub k: f64,
    pub m: f64,
    pub gamma_c: f64,
    pub sigma_c: f64,
    pub rho_growth: f64,
}

/// Builds the exponent quadruple
///   q = 8(alpha+2)/(d alpha + 2b),
///   r = d(alpha+2)/(d-b),
///   k = 4 alpha (alpha+2) / (8 - 2b - (d-4) alpha),
///   m = 4 alpha (alpha+2) / (d alpha^2 + (d-4+2b) alpha - 8 + 2b),
/// valid in the intercritical window. `radial` selects the growth exponent
/// 1/3; otherwise rho = 1/(1 + min(2, b)).
pub fn critical_exponents(p: &PhysParams, radial: bool) -> Result<CriticalExponents> {
    validate_params(p, ValidationMode::Evolution)?;
    let d = p.d as f64;
    let g = gamma_c(p);
    if g <= 0.0 {
        return Err(Error::ParameterOutOfRange(format!(
            "exponent system needs the mass-supercritical range alpha > {}, got alpha = {}",
            (8.0 - 2.0 * p.b) / d,
            p.alpha
        )));
    }
    if g >= 2.0 {
        return Err(Error::ParameterOutOfRange(format!(
            "exponent system needs gamma_c < 2, got gamma_c = {g}"
        )));
    }
    let a = p.alpha;
    let q = 8.0 * (a + 2.0) / p.dab();
    let r = d * (a + 2.0) / (d - p.b);
    let k = 4.0 * a * (a + 2.0) / p.energy_gap();
    let m = 4.0 * a * (a + 2.0) / (d * a * a + (d - 4.0 + 2.0 * p.b) * a - 8.0 + 2.0 * p.b);
    let rho_growth = if radial { 1.0 / 3.0 } else { 1.0 / (1.0 + p.b.min(2.0)) };
    Ok(CriticalExponents { q, r, k, m, gamma_c: g, sigma_c: sigma_c(p), rho_growth })
}

/// A pair (q, r) is admissible for the fourth-order flow when
/// 4/q + d/r = d/2 with r in [2, 2d/(d-4)] (d >= 5), [2, inf) (d = 4) or
/// [2, inf] (d <= 3). Infinite entries are allowed where the range permits.
pub fn is_biharmonic_admissible(q: f64, r: f64, d: usize) -> bool {
    if q.is_nan() || r.is_nan() || q <= 0.0 || r <= 0.0 {
        return false;
    }
    let df = d as f64;
    let scaling = 4.0 / q + df / r;
    if (scaling - df / 2.0).abs() > 1e-12 {
        return false;
    }
    if r < 2.0 - 1e-12 {
        return false;
    }
    match d {
        0 => false,
        1..=3 => true,
        4 => r.is_finite(),
        _ => r <= 2.0 * df / (df - 4.0) + 1e-12,
    }
}
