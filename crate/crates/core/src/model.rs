//! Assembly of the day-ahead scheduling MILP.
//!
//! Every variant shares one variable catalogue: a binary ON/OFF decision
//! per house and slot (house-major, index `k * H + t`) followed by one
//! continuous peak variable per zone. Robust variants differ from the
//! deterministic model only through constant margins added to forecasts,
//! so the constraint matrices are identical and only right-hand sides move.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermal::{build_affine_maps, AffineThermalMap, HouseSpec, ThermalError};
use crate::uncertainty::{g_min_kde, gaussian_margin, AmbiguityRadius, GaussianModel, KdeModel, UncertaintyError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("{what}: got {got} entries, expected {expected}")]
    Dimension { what: String, got: usize, expected: usize },
    #[error("zone {zone}: {detail}")]
    Zone { zone: String, detail: String },
    #[error("horizon of {0} slots is too short for the switching rule (need at least 3)")]
    HorizonTooShort(usize),
    #[error("slot length must be positive, got {0}")]
    BadSlotLength(f64),
    #[error("invalid forecast value: {0}")]
    BadForecast(String),
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("infeasible by construction at {tag}: {detail}")]
    Infeasible { tag: RowTag, detail: String },
}

/// A transformer zone and the houses it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub name: String,
    /// Ids of member houses.
    pub houses: Vec<usize>,
    /// Transformer rating, kW.
    pub trans_capacity: f64,
    /// Peak cost factor, $/kW.
    pub psi: f64,
}

/// Day-ahead forecasts over `H` slots of `dt` hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    /// Outdoor temperature, °C.
    pub t_out: Vec<f64>,
    /// Net non-heat-pump demand (load minus PV) per zone and slot, kW.
    pub net_load: Vec<Vec<f64>>,
    /// Electricity price per slot, $/kWh.
    pub price: Vec<f64>,
    pub dt: f64,
}

impl ForecastSet {
    pub fn horizon(&self) -> usize {
        self.t_out.len()
    }

    pub fn validate(&self, zones: usize) -> Result<(), ModelError> {
        let h = self.horizon();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ModelError::BadSlotLength(self.dt));
        }
        dim("price forecast", self.price.len(), h)?;
        dim("zonal net-load forecasts", self.net_load.len(), zones)?;
        for series in &self.net_load {
            dim("net-load forecast", series.len(), h)?;
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.t_out) || !self.net_load.iter().all(|s| finite(s)) {
            return Err(ModelError::BadForecast("non-finite entry".into()));
        }
        if let Some(p) = self.price.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(ModelError::BadForecast(format!("price {p} is negative or non-finite")));
        }
        Ok(())
    }
}

fn dim(what: &str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::Dimension {
            what: what.to_string(),
            got,
            expected,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Deterministic,
    KdeaDro,
    GaDro,
    Ro,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Deterministic => "deterministic",
            Self::KdeaDro => "kdea-dro",
            Self::GaDro => "ga-dro",
            Self::Ro => "ro",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Deterministic, Self::KdeaDro, Self::GaDro, Self::Ro]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowKind {
    /// Zonal load in a slot bounded by the zone's peak variable.
    PeakBalance,
    /// Peak bounded by the transformer rating.
    Capacity,
    ComfortUpper,
    ComfortLower,
    /// End-of-day tank temperature at least its initial value.
    WaterHold,
    /// `2 x_t - x_{t-1} - x_{t+1} <= 1`
    SwitchUpper,
    /// `2 x_t - x_{t-1} - x_{t+1} >= -1`
    SwitchLower,
}

impl RowKind {
    pub const ALL: [RowKind; 7] = [
        Self::PeakBalance,
        Self::Capacity,
        Self::ComfortUpper,
        Self::ComfortLower,
        Self::WaterHold,
        Self::SwitchUpper,
        Self::SwitchLower,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Self::PeakBalance => "PK",
            Self::Capacity => "CAP",
            Self::ComfortUpper => "CU",
            Self::ComfortLower => "CL",
            Self::WaterHold => "WH",
            Self::SwitchUpper => "SU",
            Self::SwitchLower => "SL",
        }
    }
}

/// Identifies a constraint row by kind plus the zone, house (index into
/// the house list) and slot it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub kind: RowKind,
    pub zone: Option<usize>,
    pub house: Option<usize>,
    pub slot: Option<usize>,
}

impl RowTag {
    fn new(kind: RowKind) -> Self {
        Self {
            kind,
            zone: None,
            house: None,
            slot: None,
        }
    }

    fn zone(mut self, z: usize) -> Self {
        self.zone = Some(z);
        self
    }

    fn house(mut self, k: usize) -> Self {
        self.house = Some(k);
        self
    }

    fn slot(mut self, t: usize) -> Self {
        self.slot = Some(t);
        self
    }

    /// Short row name: the kind code followed by base-36 indices.
    pub fn compact_name(&self) -> String {
        let mut s = self.kind.code().to_string();
        for (v, width) in [(self.zone, 1), (self.house, 2), (self.slot, 3)] {
            if let Some(v) = v {
                s.push_str(&base36(v, width));
            }
        }
        s
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(z) = self.zone {
            write!(f, " zone={z}")?;
        }
        if let Some(k) = self.house {
            write!(f, " house={k}")?;
        }
        if let Some(t) = self.slot {
            write!(f, " slot={t}")?;
        }
        Ok(())
    }
}

pub(crate) fn base36(mut v: usize, width: usize) -> String {
    const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let mut out = Vec::new();
    loop {
        out.push(DIGITS[v % 36]);
        v /= 36;
        if v == 0 {
            break;
        }
    }
    while out.len() < width {
        out.push(b'0');
    }
    out.reverse();
    String::from_utf8(out).expect("ascii digits")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub tag: RowTag,
    /// Sparse `(variable, coefficient)` pairs with distinct variables.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Signed distance to violation: non-negative when satisfied.
    pub fn slack(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => self.rhs - act,
            Sense::Ge => act - self.rhs,
            Sense::Eq => -(act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// How the binaries of an instance map onto houses and slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub houses: usize,
    pub horizon: usize,
    pub zones: usize,
}

impl Layout {
    pub fn binary(&self, house: usize, slot: usize) -> usize {
        house * self.horizon + slot
    }

    pub fn peak(&self, zone: usize) -> usize {
        self.houses * self.horizon + zone
    }

    pub fn binaries(&self) -> usize {
        self.houses * self.horizon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpInstance {
    pub variant: Variant,
    pub variables: Vec<Variable>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Present for instances produced by the builders. Solver heuristics
    /// use it to locate a house's schedule.
    pub layout: Option<Layout>,
}

impl MilpInstance {
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&j| self.variables[j].kind == VarKind::Binary)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.variables.len();
        dim("objective", self.objective.len(), n)?;
        for c in &self.constraints {
            if let Some(&(j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(ModelError::Dimension {
                    what: format!("variable index in row {}", c.tag),
                    got: j,
                    expected: n,
                });
            }
        }
        Ok(())
    }
}

/// Constant forecast shifts applied by the robust variants.
///
/// Upper comfort rows see `T_out + temp_upper`, lower comfort and tank
/// rows see `T_out - temp_lower`, zonal load rows see `P + power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub power: Vec<Vec<f64>>,
    pub temp_upper: Vec<f64>,
    pub temp_lower: Vec<f64>,
}

impl Margins {
    pub fn zero(zones: usize, horizon: usize) -> Self {
        Self {
            power: vec![vec![0.0; horizon]; zones],
            temp_upper: vec![0.0; horizon],
            temp_lower: vec![0.0; horizon],
        }
    }

    fn validate(&self, zones: usize, horizon: usize) -> Result<(), ModelError> {
        dim("zonal power margins", self.power.len(), zones)?;
        for p in &self.power {
            dim("power margin", p.len(), horizon)?;
        }
        dim("upper temperature margin", self.temp_upper.len(), horizon)?;
        dim("lower temperature margin", self.temp_lower.len(), horizon)?;
        let all = self
            .power
            .iter()
            .flatten()
            .chain(&self.temp_upper)
            .chain(&self.temp_lower);
        if let Some(v) = all.into_iter().find(|v| !v.is_finite()) {
            return Err(ModelError::BadForecast(format!("margin {v}")));
        }
        Ok(())
    }
}

/// Per-slot ambiguity radii of the power and temperature streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusPlan {
    pub power: Vec<AmbiguityRadius>,
    pub temp: Vec<AmbiguityRadius>,
}

/// Margins from Gaussian nominals. `power[z][t]`, `temp[t]`.
///
/// The lower temperature margin is taken on the negated error stream,
/// `-mu + sigma sqrt(2 eta)`, unless `same_lower` requests the symmetric
/// form that reuses the upper margin.
pub fn gaussian_margins(
    power: &[Vec<GaussianModel>],
    temp: &[GaussianModel],
    radii: &RadiusPlan,
    same_lower: bool,
) -> Result<Margins, ModelError> {
    let h = temp.len();
    dim("power radii", radii.power.len(), h)?;
    dim("temperature radii", radii.temp.len(), h)?;
    let power = power
        .iter()
        .map(|zone| {
            dim("power models", zone.len(), h)?;
            Ok(zone
                .iter()
                .zip(&radii.power)
                .map(|(g, &eta)| gaussian_margin(g, eta))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>, ModelError>>()?;
    let temp_upper: Vec<f64> = temp
        .iter()
        .zip(&radii.temp)
        .map(|(g, &eta)| gaussian_margin(g, eta))
        .collect();
    let temp_lower = if same_lower {
        temp_upper.clone()
    } else {
        temp.iter()
            .zip(&radii.temp)
            .map(|(g, &eta)| {
                let neg = GaussianModel {
                    mu: -g.mu,
                    sigma: g.sigma,
                };
                gaussian_margin(&neg, eta)
            })
            .collect()
    };
    Ok(Margins {
        power,
        temp_upper,
        temp_lower,
    })
}

/// Margins from kernel density nominals, each the minimum of the convex
/// dual objective.
pub fn kde_margins(
    power: &[Vec<KdeModel>],
    temp: &[KdeModel],
    radii: &RadiusPlan,
    same_lower: bool,
) -> Result<Margins, ModelError> {
    let h = temp.len();
    dim("power radii", radii.power.len(), h)?;
    dim("temperature radii", radii.temp.len(), h)?;
    let mut power_margins = Vec::with_capacity(power.len());
    for zone in power {
        dim("power models", zone.len(), h)?;
        let row = zone
            .iter()
            .zip(&radii.power)
            .map(|(m, &eta)| g_min_kde(m, eta))
            .collect::<Result<Vec<_>, _>>()?;
        power_margins.push(row);
    }
    let temp_upper = temp
        .iter()
        .zip(&radii.temp)
        .map(|(m, &eta)| g_min_kde(m, eta))
        .collect::<Result<Vec<_>, _>>()?;
    let temp_lower = if same_lower {
        temp_upper.clone()
    } else {
        temp.iter()
            .zip(&radii.temp)
            .map(|(m, &eta)| g_min_kde(&m.negated(), eta))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(Margins {
        power: power_margins,
        temp_upper,
        temp_lower,
    })
}

/// Closed error interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ModelError::EmptyInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }
}

/// How an error interval is cut from historical samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalRule {
    /// Smallest `[-a, a]` holding the given fraction of samples.
    Symmetric { coverage: f64 },
    /// Empirical percentiles, e.g. 2.5 and 97.5.
    Percentiles { lower: f64, upper: f64 },
}

impl Default for IntervalRule {
    fn default() -> Self {
        Self::Symmetric { coverage: 0.95 }
    }
}

/// Linear-interpolation percentile of an ascending slice, `q` in [0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn interval_from_samples(samples: &[f64], rule: IntervalRule) -> Result<Interval, ModelError> {
    if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Uncertainty(UncertaintyError::NonFiniteSample));
    }
    match rule {
        IntervalRule::Symmetric { coverage } => {
            let mut abs: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let a = percentile(&abs, 100.0 * coverage);
            Interval::new(-a, a)
        }
        IntervalRule::Percentiles { lower, upper } => {
            let mut s = samples.to_vec();
            s.sort_by(f64::total_cmp);
            Interval::new(percentile(&s, lower), percentile(&s, upper))
        }
    }
}

/// Worst-case interval endpoints as margins.
pub fn interval_margins(power: &[Vec<Interval>], temp: &[Interval]) -> Result<Margins, ModelError> {
    let h = temp.len();
    for zone in power {
        dim("power intervals", zone.len(), h)?;
    }
    Ok(Margins {
        power: power.iter().map(|z| z.iter().map(|i| i.hi).collect()).collect(),
        temp_upper: temp.iter().map(|i| i.hi).collect(),
        temp_lower: temp.iter().map(|i| -i.lo).collect(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Also apply the switching rule across the day boundary.
    pub cyclic_switching: bool,
}

/// Objective coefficients over the shared variable catalogue, $.
pub fn build_objective(houses: &[HouseSpec], zones: &[ZoneSpec], forecast: &ForecastSet) -> Vec<f64> {
    let layout = Layout {
        houses: houses.len(),
        horizon: forecast.horizon(),
        zones: zones.len(),
    };
    let mut c = vec![0.0; layout.binaries() + zones.len()];
    for (k, house) in houses.iter().enumerate() {
        for (t, price) in forecast.price.iter().enumerate() {
            c[layout.binary(k, t)] = price * forecast.dt * house.p_hp;
        }
    }
    for (z, zone) in zones.iter().enumerate() {
        c[layout.peak(z)] = zone.psi;
    }
    c
}

/// Switching rows on interior slots (or all slots when cyclic) for one
/// house whose binaries start at `offset`.
pub fn switching_rows(house: usize, offset: usize, horizon: usize, cyclic: bool) -> Vec<Constraint> {
    if horizon < 3 {
        return Vec::new();
    }
    let slots: Vec<usize> = if cyclic {
        (0..horizon).collect()
    } else {
        (1..horizon - 1).collect()
    };
    let mut rows = Vec::with_capacity(2 * slots.len());
    for t in slots {
        let prev = (t + horizon - 1) % horizon;
        let next = (t + 1) % horizon;
        let coeffs = vec![(offset + prev, -1.0), (offset + t, 2.0), (offset + next, -1.0)];
        rows.push(Constraint {
            tag: RowTag::new(RowKind::SwitchUpper).house(house).slot(t),
            coeffs: coeffs.clone(),
            sense: Sense::Le,
            rhs: 1.0,
        });
        rows.push(Constraint {
            tag: RowTag::new(RowKind::SwitchLower).house(house).slot(t),
            coeffs,
            sense: Sense::Ge,
            rhs: -1.0,
        });
    }
    rows
}

/// Maps each house (by position) to its zone, checking that every house
/// sits in exactly one zone.
fn zone_of_houses(houses: &[HouseSpec], zones: &[ZoneSpec]) -> Result<Vec<usize>, ModelError> {
    let position: HashMap<usize, usize> = houses.iter().enumerate().map(|(i, h)| (h.id, i)).collect();
    if position.len() != houses.len() {
        return Err(ModelError::Zone {
            zone: String::new(),
            detail: "duplicate house ids".into(),
        });
    }
    let mut owner = vec![usize::MAX; houses.len()];
    for (z, zone) in zones.iter().enumerate() {
        let err = |detail: String| ModelError::Zone {
            zone: zone.name.clone(),
            detail,
        };
        if zone.houses.is_empty() {
            return Err(err("no member houses".into()));
        }
        if !(zone.trans_capacity.is_finite() && zone.trans_capacity > 0.0) {
            return Err(err(format!(
                "transformer capacity {} must be positive",
                zone.trans_capacity
            )));
        }
        if !(zone.psi.is_finite() && zone.psi >= 0.0) {
            return Err(err(format!("peak cost factor {} must be non-negative", zone.psi)));
        }
        for id in &zone.houses {
            let &k = position.get(id).ok_or_else(|| err(format!("unknown house id {id}")))?;
            if owner[k] != usize::MAX {
                return Err(err(format!("house {id} assigned to more than one zone")));
            }
            owner[k] = z;
        }
    }
    if let Some(k) = owner.iter().position(|&z| z == usize::MAX) {
        return Err(ModelError::Zone {
            zone: String::new(),
            detail: format!("house {} belongs to no zone", houses[k].id),
        });
    }
    Ok(owner)
}

const FEAS_TOL: f64 = 1e-9;

/// Builds one model variant from precomputed margins.
pub fn build_instance(
    variant: Variant,
    houses: &[HouseSpec],
    zones: &[ZoneSpec],
    forecast: &ForecastSet,
    margins: &Margins,
    opts: BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let h = forecast.horizon();
    if h < 3 {
        return Err(ModelError::HorizonTooShort(h));
    }
    forecast.validate(zones.len())?;
    margins.validate(zones.len(), h)?;
    let owner = zone_of_houses(houses, zones)?;
    let layout = Layout {
        houses: houses.len(),
        horizon: h,
        zones: zones.len(),
    };

    let mut variables = Vec::with_capacity(layout.binaries() + zones.len());
    for (k, house) in houses.iter().enumerate() {
        for t in 0..h {
            debug_assert_eq!(variables.len(), layout.binary(k, t));
            variables.push(Variable {
                name: format!("X{}{}", base36(house.id, 2), base36(t, 3)),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            });
        }
    }
    for (z, zone) in zones.iter().enumerate() {
        variables.push(Variable {
            name: format!("PMAX{}", base36(z, 2)),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: zone.trans_capacity,
        });
    }

    let mut constraints = Vec::new();

    for (z, zone) in zones.iter().enumerate() {
        for t in 0..h {
            let mut coeffs: Vec<(usize, f64)> = (0..houses.len())
                .filter(|&k| owner[k] == z)
                .map(|k| (layout.binary(k, t), houses[k].p_hp))
                .collect();
            coeffs.push((layout.peak(z), -1.0));
            let base_load = forecast.net_load[z][t] + margins.power[z][t];
            let tag = RowTag::new(RowKind::PeakBalance).zone(z).slot(t);
            if base_load > zone.trans_capacity + FEAS_TOL {
                return Err(ModelError::Infeasible {
                    tag,
                    detail: format!(
                        "net load {base_load:.3} kW exceeds the transformer rating {:.3} kW with every heat pump off",
                        zone.trans_capacity
                    ),
                });
            }
            constraints.push(Constraint {
                tag,
                coeffs,
                sense: Sense::Le,
                rhs: -base_load,
            });
        }
        constraints.push(Constraint {
            tag: RowTag::new(RowKind::Capacity).zone(z),
            coeffs: vec![(layout.peak(z), 1.0)],
            sense: Sense::Le,
            rhs: zone.trans_capacity,
        });
    }

    let hot: Vec<f64> = forecast
        .t_out
        .iter()
        .zip(&margins.temp_upper)
        .map(|(t, g)| t + g)
        .collect();
    let cold: Vec<f64> = forecast
        .t_out
        .iter()
        .zip(&margins.temp_lower)
        .map(|(t, g)| t - g)
        .collect();
    let zeros = vec![0.0; h];
    let ones = vec![1.0; h];

    for (k, house) in houses.iter().enumerate() {
        let maps = build_affine_maps(house, h, forecast.dt)?;
        let free_hot = maps.indoor(&zeros, &hot);
        let free_cold = maps.indoor(&zeros, &cold);
        let heated_cold = maps.indoor(&ones, &cold);
        for t in 0..h {
            let coeffs = indoor_row(&maps, &layout, k, t);
            let upper = house.t_hi - free_hot[t];
            let lower = house.t_lo - free_cold[t];
            let up_tag = RowTag::new(RowKind::ComfortUpper).house(k).slot(t);
            let lo_tag = RowTag::new(RowKind::ComfortLower).house(k).slot(t);
            if upper < -FEAS_TOL {
                return Err(ModelError::Infeasible {
                    tag: up_tag,
                    detail: format!(
                        "indoor temperature {:.3} °C exceeds the upper bound with the heat pump off",
                        free_hot[t]
                    ),
                });
            }
            if heated_cold[t] < house.t_lo - FEAS_TOL {
                return Err(ModelError::Infeasible {
                    tag: lo_tag,
                    detail: format!(
                        "continuous heating reaches only {:.3} °C, below the lower bound {}",
                        heated_cold[t], house.t_lo
                    ),
                });
            }
            if lower > upper + FEAS_TOL {
                return Err(ModelError::Infeasible {
                    tag: lo_tag,
                    detail: format!(
                        "margins empty the comfort band: need {lower:.4} <= heating response <= {upper:.4}"
                    ),
                });
            }
            constraints.push(Constraint {
                tag: up_tag,
                coeffs: coeffs.clone(),
                sense: Sense::Le,
                rhs: upper,
            });
            constraints.push(Constraint {
                tag: lo_tag,
                coeffs,
                sense: Sense::Ge,
                rhs: lower,
            });
        }
        let last = h - 1;
        let tank_cold = maps.tank(&zeros, &cold);
        let tank_heated = maps.tank(&ones, &cold);
        let tag = RowTag::new(RowKind::WaterHold).house(k).slot(last);
        if tank_heated[last] < house.tw0 - FEAS_TOL {
            return Err(ModelError::Infeasible {
                tag,
                detail: format!(
                    "continuous heating leaves the tank at {:.3} °C, below its initial {}",
                    tank_heated[last], house.tw0
                ),
            });
        }
        constraints.push(Constraint {
            tag,
            coeffs: (0..h)
                .map(|s| (layout.binary(k, s), maps.m[(last, s)]))
                .filter(|&(_, a)| a != 0.0)
                .collect(),
            sense: Sense::Ge,
            rhs: house.tw0 - tank_cold[last],
        });
        constraints.extend(switching_rows(k, layout.binary(k, 0), h, opts.cyclic_switching));
    }

    Ok(MilpInstance {
        variant,
        variables,
        objective: build_objective(houses, zones, forecast),
        constraints,
        layout: Some(layout),
    })
}

fn indoor_row(maps: &AffineThermalMap, layout: &Layout, k: usize, t: usize) -> Vec<(usize, f64)> {
    (0..=t)
        .map(|s| (layout.binary(k, s), maps.j[(t, s)]))
        .filter(|&(_, a)| a != 0.0)
        .collect()
}

pub fn build_deterministic(
    houses: &[HouseSpec],
    zones: &[ZoneSpec],
    forecast: &ForecastSet,
    opts: BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let margins = Margins::zero(zones.len(), forecast.horizon());
    build_instance(Variant::Deterministic, houses, zones, forecast, &margins, opts)
}

/// Uncertainty inputs of a robust variant.
#[derive(Debug, Clone, Copy)]
pub struct RobustInputs<'a, M> {
    /// `power[z][t]`
    pub power: &'a [Vec<M>],
    /// `temp[t]`
    pub temp: &'a [M],
    pub radii: &'a RadiusPlan,
    /// Reuse the upper temperature margin for lower-bound rows.
    pub same_lower: bool,
}

pub fn build_kdea_dro(
    houses: &[HouseSpec],
    zones: &[ZoneSpec],
    forecast: &ForecastSet,
    inputs: RobustInputs<'_, KdeModel>,
    opts: BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let margins = kde_margins(inputs.power, inputs.temp, inputs.radii, inputs.same_lower)?;
    build_instance(Variant::KdeaDro, houses, zones, forecast, &margins, opts)
}

pub fn build_ga_dro(
    houses: &[HouseSpec],
    zones: &[ZoneSpec],
    forecast: &ForecastSet,
    inputs: RobustInputs<'_, GaussianModel>,
    opts: BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let margins = gaussian_margins(inputs.power, inputs.temp, inputs.radii, inputs.same_lower)?;
    build_instance(Variant::GaDro, houses, zones, forecast, &margins, opts)
}

pub fn build_ro(
    houses: &[HouseSpec],
    zones: &[ZoneSpec],
    forecast: &ForecastSet,
    power: &[Vec<Interval>],
    temp: &[Interval],
    opts: BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let margins = interval_margins(power, temp)?;
    build_instance(Variant::Ro, houses, zones, forecast, &margins, opts)
}

/// ON/OFF decisions, `x[house][slot]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub x: Vec<Vec<bool>>,
}

impl Schedule {
    pub fn all(houses: usize, horizon: usize, on: bool) -> Self {
        Self {
            x: vec![vec![on; horizon]; houses],
        }
    }

    pub fn houses(&self) -> usize {
        self.x.len()
    }

    pub fn horizon(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn from_values(layout: &Layout, values: &[f64]) -> Self {
        Self {
            x: (0..layout.houses)
                .map(|k| (0..layout.horizon).map(|t| values[layout.binary(k, t)] > 0.5).collect())
                .collect(),
        }
    }

    pub fn as_f64(&self, house: usize) -> Vec<f64> {
        self.x[house].iter().map(|&b| f64::from(u8::from(b))).collect()
    }

    pub fn on_count(&self) -> usize {
        self.x.iter().flatten().filter(|&&b| b).count()
    }
}

/// Full variable vector for a schedule, with each zone's peak set to the
/// smallest value its load rows allow.
pub fn values_for_schedule(instance: &MilpInstance, schedule: &Schedule) -> Result<Vec<f64>, ModelError> {
    let layout = instance.layout.ok_or_else(|| ModelError::Dimension {
        what: "instance layout".into(),
        got: 0,
        expected: 1,
    })?;
    dim("schedule houses", schedule.houses(), layout.houses)?;
    for row in &schedule.x {
        dim("schedule slots", row.len(), layout.horizon)?;
    }
    let mut values = vec![0.0; instance.variables.len()];
    for k in 0..layout.houses {
        for t in 0..layout.horizon {
            values[layout.binary(k, t)] = f64::from(u8::from(schedule.x[k][t]));
        }
    }
    for c in &instance.constraints {
        if c.tag.kind != RowKind::PeakBalance {
            continue;
        }
        let z = c.tag.zone.expect("peak rows carry a zone");
        let p = layout.peak(z);
        let load: f64 = c
            .coeffs
            .iter()
            .filter(|(j, _)| *j != p)
            .map(|&(j, a)| a * values[j])
            .sum::<f64>()
            - c.rhs;
        values[p] = values[p].max(load);
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub tag: RowTag,
    pub activity: f64,
    pub rhs: f64,
    /// Negative: amount by which the row is violated.
    pub slack: f64,
}

/// Rows of `instance` violated by `values` beyond `tol`, plus bound
/// violations reported against the variable's own index.
pub fn validate_values(instance: &MilpInstance, values: &[f64], tol: f64) -> Vec<Violation> {
    instance
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(row, c)| {
            let slack = c.slack(values);
            (slack < -tol).then(|| Violation {
                row,
                tag: c.tag,
                activity: c.activity(values),
                rhs: c.rhs,
                slack,
            })
        })
        .collect()
}

/// Evaluates every row for a schedule (peaks at their smallest feasible
/// values) and lists the violated ones.
pub fn validate_schedule(schedule: &Schedule, instance: &MilpInstance) -> Result<Vec<Violation>, ModelError> {
    let values = values_for_schedule(instance, schedule)?;
    Ok(validate_values(instance, &values, 1e-6))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_setup(n: usize, h: usize) -> (Vec<HouseSpec>, Vec<ZoneSpec>, ForecastSet) {
        let houses: Vec<HouseSpec> = HouseSpec::reference_fleet().into_iter().take(n).collect();
        let zones = vec![ZoneSpec {
            name: "z".into(),
            houses: houses.iter().map(|h| h.id).collect(),
            trans_capacity: 60.0,
            psi: 10.0,
        }];
        let forecast = ForecastSet {
            t_out: vec![-2.0; h],
            net_load: vec![vec![3.0; h]],
            price: vec![1.0; h],
            dt: 0.5,
        };
        (houses, zones, forecast)
    }

    fn count(inst: &MilpInstance, kind: RowKind) -> usize {
        inst.constraints.iter().filter(|c| c.tag.kind == kind).count()
    }

    #[test]
    fn row_and_variable_counts() {
        let (houses, zones, forecast) = tiny_setup(2, 4);
        let inst = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        assert_eq!(inst.variables.len(), 9);
        assert_eq!(inst.binary_indices().len(), 8);
        assert_eq!(count(&inst, RowKind::PeakBalance), 4);
        assert_eq!(count(&inst, RowKind::Capacity), 1);
        assert_eq!(
            count(&inst, RowKind::ComfortUpper) + count(&inst, RowKind::ComfortLower),
            16
        );
        assert_eq!(count(&inst, RowKind::WaterHold), 2);
        // two interior slots, two rows each, per house
        assert_eq!(
            count(&inst, RowKind::SwitchUpper) + count(&inst, RowKind::SwitchLower),
            8
        );
        let cyclic = build_deterministic(&houses, &zones, &forecast, BuildOptions { cyclic_switching: true }).unwrap();
        assert_eq!(count(&cyclic, RowKind::SwitchUpper), 8);
    }

    #[test]
    fn every_binary_has_a_switching_row() {
        let (houses, zones, forecast) = tiny_setup(2, 5);
        let inst = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        for j in inst.binary_indices() {
            assert!(inst
                .constraints
                .iter()
                .filter(|c| matches!(c.tag.kind, RowKind::SwitchUpper | RowKind::SwitchLower))
                .any(|c| c.coeffs.iter().any(|&(v, _)| v == j)));
        }
    }

    #[test]
    fn objective_energy_term() {
        let (houses, mut zones, mut forecast) = tiny_setup(1, 288);
        forecast.dt = 1.0 / 12.0;
        zones[0].psi = 10.0;
        let c = build_objective(&houses, &zones, &forecast);
        let energy: f64 = c[..288].iter().sum();
        assert!((energy - 120.0).abs() < 1e-9);
        assert_eq!(c[288], 10.0);
        zones[0].psi = 0.0;
        forecast.price = vec![0.0; 288];
        assert!(build_objective(&houses, &zones, &forecast).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn switching_patterns() {
        let check = |x: &[bool]| -> usize {
            let rows = switching_rows(0, 0, x.len(), false);
            let vals: Vec<f64> = x.iter().map(|&b| f64::from(u8::from(b))).collect();
            rows.iter().filter(|r| r.slack(&vals) < 0.0).count()
        };
        assert_eq!(check(&[true, false, true]), 1);
        assert_eq!(check(&[false, true, false]), 1);
        assert_eq!(check(&[true, true, false, false, true, true]), 0);
        assert!(switching_rows(0, 0, 2, false).is_empty());
    }

    #[test]
    fn all_on_schedule_reports_switching_and_comfort_violations() {
        let (houses, zones, forecast) = tiny_setup(1, 6);
        let inst = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        let alternating = Schedule {
            x: vec![vec![true, false, true, false, true, false]],
        };
        let report = validate_schedule(&alternating, &inst).unwrap();
        assert!(report
            .iter()
            .any(|v| v.tag.kind == RowKind::SwitchLower && v.tag.slot == Some(1)));
        assert!(report
            .iter()
            .any(|v| v.tag.kind == RowKind::SwitchUpper && v.tag.slot == Some(2)));
    }

    #[test]
    fn zero_margins_match_deterministic_and_matrices_are_shared() {
        let (houses, zones, forecast) = tiny_setup(2, 6);
        let det = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        let ro = build_ro(
            &houses,
            &zones,
            &forecast,
            &[vec![Interval::new(0.0, 0.0).unwrap(); 6]],
            &[Interval::new(0.0, 0.0).unwrap(); 6],
            BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(det.constraints, ro.constraints);
        let shifted = build_ro(
            &houses,
            &zones,
            &forecast,
            &[vec![Interval::new(-0.5, 0.5).unwrap(); 6]],
            &[Interval::new(-0.3, 0.3).unwrap(); 6],
            BuildOptions::default(),
        )
        .unwrap();
        for (a, b) in det.constraints.iter().zip(&shifted.constraints) {
            assert_eq!((a.tag, &a.coeffs, a.sense), (b.tag, &b.coeffs, b.sense));
            // robust rows are never looser
            match a.sense {
                Sense::Le => assert!(b.rhs <= a.rhs + 1e-12),
                Sense::Ge => assert!(b.rhs >= a.rhs - 1e-12),
                Sense::Eq => unreachable!(),
            }
        }
    }

    #[test]
    fn infeasibility_is_named() {
        let (mut houses, zones, mut forecast) = tiny_setup(1, 4);
        forecast.t_out = vec![-60.0; 4];
        houses[0].t0 = 18.0;
        let err = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap_err();
        match err {
            ModelError::Infeasible { tag, .. } => assert_eq!(tag.kind, RowKind::ComfortLower),
            other => panic!("unexpected {other}"),
        }
        let (houses, zones, mut forecast) = tiny_setup(1, 4);
        forecast.net_load[0][2] = 75.0;
        let err = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            ModelError::Infeasible {
                tag: RowTag {
                    kind: RowKind::PeakBalance,
                    slot: Some(2),
                    ..
                },
                ..
            }
        ));
        let (houses, zones, forecast) = tiny_setup(1, 4);
        let wide = Margins {
            power: vec![vec![0.0; 4]],
            temp_upper: vec![40.0; 4],
            temp_lower: vec![40.0; 4],
        };
        assert!(matches!(
            build_instance(
                Variant::GaDro,
                &houses,
                &zones,
                &forecast,
                &wide,
                BuildOptions::default()
            ),
            Err(ModelError::Infeasible { .. })
        ));
    }

    #[test]
    fn zone_membership_checked() {
        let (houses, mut zones, forecast) = tiny_setup(2, 4);
        zones[0].houses = vec![houses[0].id];
        assert!(matches!(
            build_deterministic(&houses, &zones, &forecast, BuildOptions::default()),
            Err(ModelError::Zone { .. })
        ));
        zones[0].houses = vec![houses[0].id, houses[1].id, 99];
        assert!(build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).is_err());
    }

    #[test]
    fn forecast_length_checked() {
        let (houses, zones, mut forecast) = tiny_setup(1, 6);
        forecast.price.pop();
        assert!(matches!(
            build_deterministic(&houses, &zones, &forecast, BuildOptions::default()),
            Err(ModelError::Dimension { .. })
        ));
    }

    #[test]
    fn interval_rules() {
        let samples: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0 - 0.2).collect();
        let p = interval_from_samples(
            &samples,
            IntervalRule::Percentiles {
                lower: 2.5,
                upper: 97.5,
            },
        )
        .unwrap();
        assert!((p.lo - (-0.175)).abs() < 1e-12 && (p.hi - 0.775).abs() < 1e-12);
        let s = interval_from_samples(&samples, IntervalRule::default()).unwrap();
        assert_eq!(s.lo, -s.hi);
        let inside = samples.iter().filter(|v| v.abs() <= s.hi).count();
        assert!(inside as f64 >= 0.95 * samples.len() as f64);
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    #[test]
    fn compact_names_fit_mps_fields() {
        let tag = RowTag::new(RowKind::ComfortUpper).house(9).slot(287);
        assert_eq!(tag.compact_name(), "CU0907Z");
        assert_eq!(base36(0, 2), "00");
        assert_eq!(base36(35, 1), "Z");
    }
}
