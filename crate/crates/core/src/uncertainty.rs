//! Nominal distributions of forecast errors and the deterministic margins
//! that replace worst-case expectation constraints over KL-divergence balls.
//!
//! For a loss `ξ` with nominal `P0` and radius `η`,
//!
//! ```text
//! max_{D(P‖P0) ≤ η} E_P[ξ] = min_{α > 0} α η + α ln E_P0[e^{ξ/α}]
//! ```
//!
//! With a Gaussian nominal the right side is `μ + σ sqrt(2η)`. With a
//! Gaussian-kernel density estimate it becomes
//! `g(α) = α η + h²/(2α) + α ln((1/N) Σ e^{ξ_i/α})`, convex in `α`, which
//! is minimised numerically.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

use crate::optimize::LogGoldenSection;

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("non-finite sample value")]
    NonFiniteSample,
    #[error("bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("risk level must lie in (0, 1], got {0}")]
    BadRiskLevel(f64),
    #[error("radius must be a finite non-negative number, got {0}")]
    BadRadius(f64),
    #[error("horizon must be at least one slot")]
    EmptyHorizon,
    #[error("probabilities must be non-negative and sum to one (sum = {0})")]
    BadDistribution(f64),
    #[error("dual minimiser failed to bracket: scanned alpha in [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },
}

/// Which forecast quantity an error record belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StreamId {
    /// Outdoor temperature, °C.
    Temperature,
    /// Zonal net demand (load minus PV) of the named zone, kW.
    Power(String),
}

impl StreamId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "temp" | "temperature" => Some(Self::Temperature),
            "power" => Some(Self::Power(String::new())),
            _ => s
                .strip_prefix("power:")
                .filter(|z| !z.is_empty())
                .map(|z| Self::Power(z.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Temperature => "temp".to_string(),
            Self::Power(z) if z.is_empty() => "power".to_string(),
            Self::Power(z) => format!("power:{z}"),
        }
    }
}

/// Historical prediction errors of one stream at one schedule slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistory {
    pub stream: StreamId,
    pub slot: usize,
    pub samples: Vec<f64>,
}

impl ErrorHistory {
    pub fn new(stream: StreamId, slot: usize, samples: Vec<f64>) -> Self {
        Self { stream, slot, samples }
    }

    fn checked(&self, needed: usize) -> Result<&[f64], UncertaintyError> {
        if self.samples.len() < needed {
            return Err(UncertaintyError::TooFewSamples {
                needed,
                got: self.samples.len(),
            });
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(UncertaintyError::NonFiniteSample);
        }
        Ok(&self.samples)
    }
}

/// One-dimensional distribution with a closed-form CDF.
pub trait Distribution1d {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mu: f64,
    pub sigma: f64,
}

impl Distribution1d for GaussianModel {
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    fn cdf(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x >= self.mu { 1.0 } else { 0.0 };
        }
        normal_cdf((x - self.mu) / self.sigma)
    }
}

/// Sample mean and population (÷N) standard deviation.
pub fn fit_gaussian(history: &ErrorHistory) -> Result<GaussianModel, UncertaintyError> {
    let xs = history.checked(2)?;
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    Ok(GaussianModel { mu, sigma: var.sqrt() })
}

/// Gaussian-kernel density estimate: an equal-weight mixture of
/// `N(ξ_i, h²)` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    centers: Vec<f64>,
    bandwidth: f64,
}

impl KdeModel {
    pub fn new(centers: Vec<f64>, bandwidth: f64) -> Result<Self, UncertaintyError> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(UncertaintyError::BadBandwidth(bandwidth));
        }
        if centers.is_empty() {
            return Err(UncertaintyError::TooFewSamples { needed: 1, got: 0 });
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(UncertaintyError::NonFiniteSample);
        }
        Ok(Self { centers, bandwidth })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn mean(&self) -> f64 {
        self.centers.iter().sum::<f64>() / self.centers.len() as f64
    }

    /// The same estimate for the negated loss `-ξ`.
    pub fn negated(&self) -> Self {
        Self {
            centers: self.centers.iter().map(|c| -c).collect(),
            bandwidth: self.bandwidth,
        }
    }

    /// Dual objective `g(α)` of the worst-case expectation over the
    /// KL ball of radius `eta`.
    pub fn dual_objective(&self, alpha: f64, eta: f64) -> f64 {
        let uniform = 1.0 / self.centers.len() as f64;
        alpha * eta
            + self.bandwidth * self.bandwidth / (2.0 * alpha)
            + scaled_log_mgf(self.centers.iter().map(|&c| (c, uniform)), alpha)
    }
}

impl Distribution1d for KdeModel {
    fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (h * (2.0 * PI).sqrt() * self.centers.len() as f64);
        norm * self
            .centers
            .iter()
            .map(|c| {
                let z = (x - c) / h;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
    }

    fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.centers.iter().map(|c| normal_cdf((x - c) / h)).sum::<f64>() / self.centers.len() as f64
    }
}

pub fn fit_kde(history: &ErrorHistory, bandwidth: f64) -> Result<KdeModel, UncertaintyError> {
    let xs = history.checked(1)?;
    KdeModel::new(xs.to_vec(), bandwidth)
}

/// Default kernel bandwidth for zonal power errors, kW.
pub const DEFAULT_POWER_BANDWIDTH: f64 = 0.2;
/// Default kernel bandwidth for outdoor temperature errors, °C.
pub const DEFAULT_TEMPERATURE_BANDWIDTH: f64 = 0.1;

/// KL-divergence radius of an ambiguity set, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmbiguityRadius(f64);

impl AmbiguityRadius {
    pub const ZERO: Self = Self(0.0);

    pub fn new(eta: f64) -> Result<Self, UncertaintyError> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(UncertaintyError::BadRadius(eta));
        }
        Ok(Self(eta))
    }

    pub fn eta(self) -> f64 {
        self.0
    }
}

/// `η = -ln β`.
pub fn radius_from_risk(beta: f64) -> Result<AmbiguityRadius, UncertaintyError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(UncertaintyError::BadRiskLevel(beta));
    }
    // -ln(1) is -0.0; keep the radius a clean zero
    Ok(AmbiguityRadius((-beta.ln()).max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMode {
    #[default]
    Constant,
    /// `η_t = -ln(β) sqrt(t)` with `t` the end time of the slot in hours.
    SqrtT,
}

pub fn radius_schedule(
    beta: f64,
    horizon: usize,
    dt_hours: f64,
    mode: RadiusMode,
) -> Result<Vec<AmbiguityRadius>, UncertaintyError> {
    let base = radius_from_risk(beta)?;
    if horizon == 0 {
        return Err(UncertaintyError::EmptyHorizon);
    }
    Ok((0..horizon)
        .map(|slot| match mode {
            RadiusMode::Constant => base,
            RadiusMode::SqrtT => AmbiguityRadius(base.0 * ((slot + 1) as f64 * dt_hours).sqrt()),
        })
        .collect())
}

/// `μ + σ sqrt(2η)`.
pub fn gaussian_margin(model: &GaussianModel, eta: AmbiguityRadius) -> f64 {
    model.mu + model.sigma * (2.0 * eta.0).sqrt()
}

/// `α ln Σ w_i e^{v_i/α}` evaluated as `m + α ln Σ w_i e^{(v_i - m)/α}`.
fn scaled_log_mgf<I: Iterator<Item = (f64, f64)> + Clone>(atoms: I, alpha: f64) -> f64 {
    let m = atoms.clone().map(|(v, _)| v).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = atoms.map(|(v, w)| w * ((v - m) / alpha).exp()).sum();
    m + alpha * s.ln()
}

fn search_scale(values: &[f64], h: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    h.max(hi - lo).max(1.0)
}

fn minimize_dual<F: Fn(f64) -> f64>(f: F, scale: f64) -> Result<f64, UncertaintyError> {
    let opt = LogGoldenSection {
        floor: 1e-18 * scale,
        ceiling: 1e18 * scale,
        ..Default::default()
    };
    let min = opt.minimize(&f, 1e-6 * scale, 1e6 * scale);
    if !min.value.is_finite() {
        return Err(UncertaintyError::NoBracket {
            lo: min.bracket.0,
            hi: min.bracket.1,
        });
    }
    Ok(min.value)
}

/// Minimum over `α > 0` of the KDE dual objective. For `eta = 0` this is
/// the infimum approached as `α → ∞`, the mean of the centers.
pub fn g_min_kde(model: &KdeModel, eta: AmbiguityRadius) -> Result<f64, UncertaintyError> {
    if eta.0 == 0.0 {
        return Ok(model.mean());
    }
    let scale = search_scale(&model.centers, model.bandwidth);
    minimize_dual(|a| model.dual_objective(a, eta.0), scale)
}

/// Finite nominal distribution over loss values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, UncertaintyError> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.is_empty() || atoms.iter().any(|(v, p)| !v.is_finite() || !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(UncertaintyError::BadDistribution(total));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    fn max_value(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|a| a.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Probability mass sitting on the largest value.
    fn mass_at_max(&self) -> f64 {
        let m = self.max_value();
        self.atoms.iter().filter(|a| a.0 == m).map(|a| a.1).sum()
    }
}

/// Primal worst-case expectation over the KL ball, by exponential tilting
/// `Q_i(s) ∝ p_i e^{s v_i}` with `s` bisected until `D(Q(s)‖P) = η`.
pub fn worst_case_expectation(nominal: &DiscreteDistribution, eta: AmbiguityRadius) -> Result<f64, UncertaintyError> {
    let eta = eta.0;
    if eta == 0.0 {
        return Ok(nominal.mean());
    }
    let vmax = nominal.max_value();
    // the ball reaches the distribution concentrated on the maximisers
    if eta >= -nominal.mass_at_max().ln() {
        return Ok(vmax);
    }
    let tilt = |s: f64| -> (f64, f64) {
        let weights: Vec<f64> = nominal.atoms.iter().map(|(v, p)| p * (s * (v - vmax)).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mean: f64 = nominal.atoms.iter().zip(&weights).map(|((v, _), w)| v * w).sum::<f64>() / z;
        // D(Q‖P) = s E_Q[v] - ln E_P[e^{s v}]
        let kl = s * (mean - vmax) - z.ln();
        (kl, mean)
    };
    let mut hi = 1.0;
    while tilt(hi).0 < eta {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(vmax);
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tilt(mid).0 < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(tilt(0.5 * (lo + hi)).1)
}

/// Dual value `min_{α>0} α η + α ln E_P[e^{v/α}]` for a discrete nominal.
pub fn dual_worst_case(nominal: &DiscreteDistribution, eta: AmbiguityRadius) -> Result<f64, UncertaintyError> {
    if eta.0 == 0.0 {
        return Ok(nominal.mean());
    }
    let values: Vec<f64> = nominal.atoms.iter().map(|a| a.0).collect();
    let scale = search_scale(&values, 0.0);
    let atoms = nominal.atoms.iter().copied().filter(|a| a.1 > 0.0);
    minimize_dual(|a| a * eta.0 + scaled_log_mgf(atoms.clone(), a), scale)
}

/// Histogram-versus-model divergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub nats: f64,
    pub bins: usize,
    /// A bin with observed frequency had zero model probability.
    pub divergent: bool,
}

/// `Σ_b f_b ln(f_b / p_b)` over an equal-width histogram of the samples
/// with Sturges' bin count.
pub fn kl_divergence_estimate<D: Distribution1d + ?Sized>(
    samples: &[f64],
    model: &D,
) -> Result<KlEstimate, UncertaintyError> {
    if samples.len() < 100 {
        return Err(UncertaintyError::TooFewSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(UncertaintyError::NonFiniteSample);
    }
    let n = samples.len();
    let bins = (n as f64).log2().ceil() as usize + 1;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let mut nats = 0.0;
    let mut divergent = false;
    for (b, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let f = count as f64 / n as f64;
        let left = lo + b as f64 * width;
        let right = if b + 1 == bins { hi } else { left + width };
        let p = model.cdf(right) - model.cdf(left);
        if p <= 0.0 {
            divergent = true;
            nats = f64::INFINITY;
            continue;
        }
        nats += f * (f / p).ln();
    }
    Ok(KlEstimate { nats, bins, divergent })
}
