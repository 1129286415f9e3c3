//! First-order RC dynamics of a house heated through a water tank.
//!
//! The tank and the indoor air form a coupled two-state linear system
//!
//! ```text
//! C_w dTw/dt = x * cop * P_hp + (T - Tw) / R_w
//! C   dT/dt  = (T_out - T) / R + eff_w2h * (Tw - T) / R_w
//! ```
//!
//! Inputs (the ON/OFF state `x` and the outdoor temperature) are held
//! constant over a step, so the exact zero-order-hold discretisation is an
//! affine map `s' = Phi s + g_out T_out + g_x x`. Capacitances are in
//! kWh/°C, resistances in °C/kW, power in kW and time in hours.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThermalError {
    #[error("house {id}: invalid parameter {field} = {value}")]
    InvalidParameter { id: usize, field: &'static str, value: f64 },
    #[error("house {id}: {detail}")]
    InconsistentBounds { id: usize, detail: String },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("fine step {fine_s} s must be shorter than and divide the coarse step {coarse_s} s")]
    BadFineStep { fine_s: f64, coarse_s: f64 },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

/// Thermal parameters of one house, its tank and its heat pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseSpec {
    pub id: usize,
    /// House thermal resistance, °C/kW.
    pub r: f64,
    /// House thermal capacitance, kWh/°C.
    pub c: f64,
    /// Tank-to-house thermal resistance, °C/kW.
    pub r_w: f64,
    /// Tank thermal capacitance, kWh/°C.
    pub c_w: f64,
    /// Rated electrical power of the heat pump, kW.
    pub p_hp: f64,
    pub cop: f64,
    pub eff_w2h: f64,
    pub t0: f64,
    pub tw0: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Tank hysteresis band used only by the unscheduled controller.
    pub tw_lo: f64,
    pub tw_hi: f64,
}

impl HouseSpec {
    pub fn validate(&self) -> Result<(), ThermalError> {
        let positive = [
            ("r", self.r),
            ("c", self.c),
            ("r_w", self.r_w),
            ("c_w", self.c_w),
            ("p_hp", self.p_hp),
            ("cop", self.cop),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ThermalError::InvalidParameter {
                    id: self.id,
                    field,
                    value,
                });
            }
        }
        if !(self.eff_w2h > 0.0 && self.eff_w2h <= 1.0) {
            return Err(ThermalError::InvalidParameter {
                id: self.id,
                field: "eff_w2h",
                value: self.eff_w2h,
            });
        }
        for (field, value) in [
            ("t0", self.t0),
            ("tw0", self.tw0),
            ("t_lo", self.t_lo),
            ("t_hi", self.t_hi),
            ("tw_lo", self.tw_lo),
            ("tw_hi", self.tw_hi),
        ] {
            if !value.is_finite() {
                return Err(ThermalError::InvalidParameter {
                    id: self.id,
                    field,
                    value,
                });
            }
        }
        if self.t_lo >= self.t_hi {
            return Err(ThermalError::InconsistentBounds {
                id: self.id,
                detail: format!("comfort band [{}, {}] is empty", self.t_lo, self.t_hi),
            });
        }
        if self.tw_lo >= self.tw_hi {
            return Err(ThermalError::InconsistentBounds {
                id: self.id,
                detail: format!("tank band [{}, {}] is empty", self.tw_lo, self.tw_hi),
            });
        }
        if self.t0 < self.t_lo || self.t0 > self.t_hi {
            return Err(ThermalError::InconsistentBounds {
                id: self.id,
                detail: format!(
                    "initial temperature {} outside comfort band [{}, {}]",
                    self.t0, self.t_lo, self.t_hi
                ),
            });
        }
        Ok(())
    }

    /// The ten reference houses: COP 3, water-to-house efficiency 1,
    /// comfort band [18, 24] °C and tank band [40, 45] °C.
    pub fn reference_fleet() -> Vec<HouseSpec> {
        const R: [f64; 10] = [2.8, 2.9, 3.0, 2.9, 3.1, 3.1, 2.8, 3.0, 2.6, 3.2];
        const C: [f64; 10] = [5.4, 5.2, 4.6, 4.1, 5.9, 4.7, 5.1, 5.3, 5.1, 4.5];
        const T0: [f64; 10] = [19.0, 20.0, 21.0, 20.0, 19.0, 19.0, 20.0, 21.0, 20.0, 19.0];
        const RW: [f64; 10] = [2.2, 2.4, 2.5, 2.6, 2.4, 2.8, 2.4, 2.6, 2.6, 2.5];
        const CW: [f64; 10] = [4.9, 4.9, 4.8, 5.0, 5.0, 5.4, 5.8, 5.2, 4.9, 5.3];
        const TW0: [f64; 10] = [42.0, 45.0, 47.0, 45.0, 42.0, 42.0, 45.0, 47.0, 45.0, 42.0];
        const P: [f64; 10] = [5.0, 4.7, 4.3, 4.7, 4.8, 5.0, 4.7, 4.3, 4.7, 4.8];
        (0..10)
            .map(|i| HouseSpec {
                id: i + 1,
                r: R[i],
                c: C[i],
                r_w: RW[i],
                c_w: CW[i],
                p_hp: P[i],
                cop: 3.0,
                eff_w2h: 1.0,
                t0: T0[i],
                tw0: TW0[i],
                t_lo: 18.0,
                t_hi: 24.0,
                tw_lo: 40.0,
                tw_hi: 45.0,
            })
            .collect()
    }

    fn initial_state(&self) -> ThermalState {
        ThermalState {
            t: self.t0,
            tw: self.tw0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    /// Indoor air temperature, °C.
    pub t: f64,
    /// Tank water temperature, °C.
    pub tw: f64,
}

type Mat2 = [[f64; 2]; 2];

/// Exact discrete-time propagator for a fixed step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    phi: Mat2,
    g_out: [f64; 2],
    g_x: [f64; 2],
}

impl Propagator {
    pub fn new(spec: &HouseSpec, dt: f64) -> Result<Self, ThermalError> {
        spec.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ThermalError::BadStep(dt));
        }
        let a = system_matrix(spec);
        let (phi, phi_minus_i) = expm2(&a, dt);
        // Psi = A^-1 (Phi - I) integrates e^{As} over the step.
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
        let psi = mul2(&inv, &phi_minus_i);
        let out_gain = 1.0 / (spec.r * spec.c);
        let x_gain = spec.cop * spec.p_hp / spec.c_w;
        Ok(Self {
            phi,
            g_out: [psi[0][0] * out_gain, psi[1][0] * out_gain],
            g_x: [psi[0][1] * x_gain, psi[1][1] * x_gain],
        })
    }

    #[inline]
    pub fn step(&self, s: ThermalState, x: f64, t_out: f64) -> ThermalState {
        let p = &self.phi;
        ThermalState {
            t: p[0][0] * s.t + p[0][1] * s.tw + self.g_out[0] * t_out + self.g_x[0] * x,
            tw: p[1][0] * s.t + p[1][1] * s.tw + self.g_out[1] * t_out + self.g_x[1] * x,
        }
    }
}

fn system_matrix(spec: &HouseSpec) -> Mat2 {
    let house_loss = 1.0 / (spec.r * spec.c);
    let tank_to_house = spec.eff_w2h / (spec.r_w * spec.c);
    let house_to_tank = 1.0 / (spec.r_w * spec.c_w);
    [
        [-house_loss - tank_to_house, tank_to_house],
        [house_to_tank, -house_to_tank],
    ]
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `(e^{A h}, e^{A h} - I)` for a 2x2 matrix with real distinct eigenvalues
/// `m ± q`, using `e^{Ah} = e^{mh} [cosh(qh) I + sinh(qh)/q (A - mI)]`.
fn expm2(a: &Mat2, h: f64) -> (Mat2, Mat2) {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let half_diff = 0.5 * (a[0][0] - a[1][1]);
    // discriminant is positive: off-diagonal terms of the RC system are positive
    let q = (half_diff * half_diff + a[0][1] * a[1][0]).sqrt();
    let (l1, l2) = (m + q, m - q);
    let diag_minus_one = 0.5 * ((l1 * h).exp_m1() + (l2 * h).exp_m1());
    let shaped = if q * h > 1e-8 {
        (m * h).exp() * (q * h).sinh() / q
    } else {
        (m * h).exp() * h
    };
    let b = [[a[0][0] - m, a[0][1]], [a[1][0], a[1][1] - m]];
    let mut phi_minus_i = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            phi_minus_i[i][j] = shaped * b[i][j] + if i == j { diag_minus_one } else { 0.0 };
        }
    }
    let mut phi = phi_minus_i;
    phi[0][0] += 1.0;
    phi[1][1] += 1.0;
    (phi, phi_minus_i)
}

/// Advances the house/tank state by one step of `dt` hours with the heat
/// pump state and outdoor temperature held constant.
pub fn step_thermal(
    state: ThermalState,
    x: bool,
    t_out: f64,
    spec: &HouseSpec,
    dt: f64,
) -> Result<ThermalState, ThermalError> {
    if !state.t.is_finite() || !state.tw.is_finite() {
        return Err(ThermalError::NonFinite("thermal state"));
    }
    if !t_out.is_finite() {
        return Err(ThermalError::NonFinite("outdoor temperature"));
    }
    let prop = Propagator::new(spec, dt)?;
    Ok(prop.step(state, if x { 1.0 } else { 0.0 }, t_out))
}

/// Decoupled affine trajectory maps over a horizon of `H` steps.
///
/// Row `r` describes the temperatures at the end of step `r` (that is,
/// time index `r + 1`):
/// `T = J x + K T_out + l` and `Tw = M x + N T_out + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineThermalMap {
    pub j: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub l: Vec<f64>,
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub p: Vec<f64>,
    pub horizon: usize,
    pub dt: f64,
}

impl AffineThermalMap {
    pub fn indoor(&self, x: &[f64], t_out: &[f64]) -> Vec<f64> {
        affine_eval(&self.j, &self.k, &self.l, x, t_out)
    }

    pub fn tank(&self, x: &[f64], t_out: &[f64]) -> Vec<f64> {
        affine_eval(&self.m, &self.n, &self.p, x, t_out)
    }

    /// Writes the six blocks as one long-format CSV (`block,row,col,value`).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["block", "row", "col", "value"])?;
        for (name, mat) in [("J", &self.j), ("K", &self.k), ("M", &self.m), ("N", &self.n)] {
            for r in 0..self.horizon {
                for c in 0..=r {
                    out.write_record([name.to_string(), r.to_string(), c.to_string(), mat[(r, c)].to_string()])?;
                }
            }
        }
        for (name, v) in [("l", &self.l), ("p", &self.p)] {
            for (r, value) in v.iter().enumerate() {
                out.write_record([name.to_string(), r.to_string(), String::new(), value.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn affine_eval(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &[f64], x: &[f64], u: &[f64]) -> Vec<f64> {
    let h = c.len();
    (0..h)
        .map(|r| {
            let mut v = c[r];
            for s in 0..=r {
                v += a[(r, s)] * x[s] + b[(r, s)] * u[s];
            }
            v
        })
        .collect()
}

/// Materialises the affine maps by forward recursion of the step
/// propagator. The system is time invariant, so every block is a lower
/// triangular Toeplitz matrix built from impulse responses.
pub fn build_affine_maps(spec: &HouseSpec, horizon: usize, dt: f64) -> Result<AffineThermalMap, ThermalError> {
    if horizon == 0 {
        return Err(ThermalError::EmptyHorizon);
    }
    let prop = Propagator::new(spec, dt)?;
    let zero = ThermalState { t: 0.0, tw: 0.0 };
    // impulse responses Phi^k g for k = 0..H-1
    let mut resp_x = Vec::with_capacity(horizon);
    let mut resp_out = Vec::with_capacity(horizon);
    let mut sx = prop.step(zero, 1.0, 0.0);
    let mut so = prop.step(zero, 0.0, 1.0);
    for _ in 0..horizon {
        resp_x.push(sx);
        resp_out.push(so);
        sx = prop.step(sx, 0.0, 0.0);
        so = prop.step(so, 0.0, 0.0);
    }
    let mut j = DMatrix::zeros(horizon, horizon);
    let mut k = DMatrix::zeros(horizon, horizon);
    let mut m = DMatrix::zeros(horizon, horizon);
    let mut n = DMatrix::zeros(horizon, horizon);
    for r in 0..horizon {
        for s in 0..=r {
            let lag = r - s;
            j[(r, s)] = resp_x[lag].t;
            m[(r, s)] = resp_x[lag].tw;
            k[(r, s)] = resp_out[lag].t;
            n[(r, s)] = resp_out[lag].tw;
        }
    }
    let mut l = Vec::with_capacity(horizon);
    let mut p = Vec::with_capacity(horizon);
    let mut free = spec.initial_state();
    for _ in 0..horizon {
        free = prop.step(free, 0.0, 0.0);
        l.push(free.t);
        p.push(free.tw);
    }
    Ok(AffineThermalMap {
        j,
        k,
        l,
        m,
        n,
        p,
        horizon,
        dt,
    })
}

/// Temperatures at the slot boundaries, index 0 being the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub indoor: Vec<f64>,
    pub tank: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FineScheme {
    #[default]
    Exact,
    Euler,
}

/// Reference plant: integrates the continuous model at `fine_dt_s`
/// seconds with the schedule held over each coarse slot of `dt` hours.
pub fn simulate_fine(
    spec: &HouseSpec,
    x: &[bool],
    t_out: &[f64],
    dt: f64,
    fine_dt_s: f64,
    scheme: FineScheme,
) -> Result<Trajectory, ThermalError> {
    let sim = FineSimulator::new(spec, dt, fine_dt_s, scheme)?;
    sim.run(x, t_out)
}

/// A reusable fine-step integrator; building it once per house avoids
/// recomputing the propagator for every Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct FineSimulator {
    spec: HouseSpec,
    substeps: usize,
    kernel: FineKernel,
}

#[derive(Debug, Clone)]
enum FineKernel {
    Exact(Propagator),
    Euler { a: Mat2, h: f64 },
}

impl FineSimulator {
    pub fn new(spec: &HouseSpec, dt: f64, fine_dt_s: f64, scheme: FineScheme) -> Result<Self, ThermalError> {
        spec.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ThermalError::BadStep(dt));
        }
        let coarse_s = dt * 3600.0;
        let bad = ThermalError::BadFineStep {
            fine_s: fine_dt_s,
            coarse_s,
        };
        if !(fine_dt_s.is_finite() && fine_dt_s > 0.0) || fine_dt_s >= coarse_s {
            return Err(bad);
        }
        let ratio = coarse_s / fine_dt_s;
        let substeps = ratio.round();
        if (ratio - substeps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(bad);
        }
        let h = fine_dt_s / 3600.0;
        let kernel = match scheme {
            FineScheme::Exact => FineKernel::Exact(Propagator::new(spec, h)?),
            FineScheme::Euler => FineKernel::Euler {
                a: system_matrix(spec),
                h,
            },
        };
        Ok(Self {
            spec: spec.clone(),
            substeps: substeps as usize,
            kernel,
        })
    }

    pub fn run(&self, x: &[bool], t_out: &[f64]) -> Result<Trajectory, ThermalError> {
        if x.len() != t_out.len() {
            return Err(ThermalError::LengthMismatch {
                what: "outdoor temperature profile",
                got: t_out.len(),
                expected: x.len(),
            });
        }
        if t_out.iter().any(|v| !v.is_finite()) {
            return Err(ThermalError::NonFinite("outdoor temperature"));
        }
        let horizon = x.len();
        let mut indoor = Vec::with_capacity(horizon + 1);
        let mut tank = Vec::with_capacity(horizon + 1);
        let mut s = self.spec.initial_state();
        indoor.push(s.t);
        tank.push(s.tw);
        let spec = &self.spec;
        for (&on, &out) in x.iter().zip(t_out) {
            let u = if on { 1.0 } else { 0.0 };
            match &self.kernel {
                FineKernel::Exact(prop) => {
                    for _ in 0..self.substeps {
                        s = prop.step(s, u, out);
                    }
                }
                FineKernel::Euler { a, h } => {
                    let b0 = out / (spec.r * spec.c);
                    let b1 = u * spec.cop * spec.p_hp / spec.c_w;
                    for _ in 0..self.substeps {
                        let dt_ = a[0][0] * s.t + a[0][1] * s.tw + b0;
                        let dtw = a[1][0] * s.t + a[1][1] * s.tw + b1;
                        s.t += h * dt_;
                        s.tw += h * dtw;
                    }
                }
            }
            indoor.push(s.t);
            tank.push(s.tw);
        }
        Ok(Trajectory { indoor, tank })
    }
}

/// Coarse-step trajectory from repeated application of [`step_thermal`].
pub fn simulate_coarse(spec: &HouseSpec, x: &[bool], t_out: &[f64], dt: f64) -> Result<Trajectory, ThermalError> {
    if x.len() != t_out.len() {
        return Err(ThermalError::LengthMismatch {
            what: "outdoor temperature profile",
            got: t_out.len(),
            expected: x.len(),
        });
    }
    let prop = Propagator::new(spec, dt)?;
    let mut s = spec.initial_state();
    let mut indoor = vec![s.t];
    let mut tank = vec![s.tw];
    for (&on, &out) in x.iter().zip(t_out) {
        s = prop.step(s, if on { 1.0 } else { 0.0 }, out);
        indoor.push(s.t);
        tank.push(s.tw);
    }
    Ok(Trajectory { indoor, tank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn house1() -> HouseSpec {
        HouseSpec::reference_fleet()[0].clone()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let s = ThermalState { t: 20.0, tw: 20.0 };
        let next = step_thermal(s, false, 20.0, &house1(), 1.0 / 12.0).unwrap();
        assert_relative_eq!(next.t, 20.0, epsilon = 1e-12);
        assert_relative_eq!(next.tw, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn cold_outdoors_cools_house_and_tank_follows() {
        let s = ThermalState { t: 20.0, tw: 20.0 };
        let next = step_thermal(s, false, 0.0, &house1(), 1.0 / 12.0).unwrap();
        assert!(next.t < 20.0);
        assert!(next.tw <= 20.0 && next.tw > next.t);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn golden_step_house1() {
        // 40-digit matrix exponential of the continuous model
        let s = ThermalState { t: 19.0, tw: 42.0 };
        let next = step_thermal(s, true, -5.0, &house1(), 1.0 / 12.0).unwrap();
        assert_relative_eq!(next.t, 19.029_148_761_735_113, epsilon = 1e-12);
        assert_relative_eq!(next.tw, 42.077_117_887_162_336, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_input() {
        let s = ThermalState { t: f64::NAN, tw: 20.0 };
        assert!(matches!(
            step_thermal(s, false, 0.0, &house1(), 0.1),
            Err(ThermalError::NonFinite(_))
        ));
        let s = ThermalState { t: 20.0, tw: 20.0 };
        assert!(step_thermal(s, false, f64::INFINITY, &house1(), 0.1).is_err());
        assert!(matches!(
            step_thermal(s, false, 0.0, &house1(), 0.0),
            Err(ThermalError::BadStep(_))
        ));
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut h = house1();
        h.eff_w2h = 1.5;
        assert!(h.validate().is_err());
        let mut h = house1();
        h.t0 = 30.0;
        assert!(h.validate().is_err());
        let mut h = house1();
        h.c = 0.0;
        assert!(matches!(
            h.validate(),
            Err(ThermalError::InvalidParameter { field: "c", .. })
        ));
    }

    #[test]
    fn one_step_map_matches_step_coefficients() {
        let spec = house1();
        let dt = 1.0 / 12.0;
        let maps = build_affine_maps(&spec, 1, dt).unwrap();
        let zero = ThermalState { t: 0.0, tw: 0.0 };
        let on = step_thermal(zero, true, 0.0, &spec, dt).unwrap();
        let out = step_thermal(zero, false, 1.0, &spec, dt).unwrap();
        assert_relative_eq!(maps.j[(0, 0)], on.t, epsilon = 1e-15);
        assert_relative_eq!(maps.m[(0, 0)], on.tw, epsilon = 1e-15);
        assert_relative_eq!(maps.k[(0, 0)], out.t, epsilon = 1e-15);
        assert_relative_eq!(maps.n[(0, 0)], out.tw, epsilon = 1e-15);
        let free = step_thermal(
            ThermalState {
                t: spec.t0,
                tw: spec.tw0,
            },
            false,
            0.0,
            &spec,
            dt,
        )
        .unwrap();
        assert_relative_eq!(maps.l[0], free.t, epsilon = 1e-12);
        assert_relative_eq!(maps.p[0], free.tw, epsilon = 1e-12);
    }

    #[test]
    fn zero_inputs_give_free_response() {
        let spec = house1();
        let maps = build_affine_maps(&spec, 24, 0.5).unwrap();
        let zeros = vec![0.0; 24];
        assert_eq!(maps.indoor(&zeros, &zeros), maps.l);
        assert_eq!(maps.tank(&zeros, &zeros), maps.p);
    }

    #[test]
    fn empty_horizon_rejected() {
        assert_eq!(build_affine_maps(&house1(), 0, 0.5), Err(ThermalError::EmptyHorizon));
    }

    #[test]
    fn maps_are_causal_and_nonnegative() {
        let maps = build_affine_maps(&house1(), 48, 0.5).unwrap();
        for r in 0..48 {
            for s in 0..48 {
                for mat in [&maps.j, &maps.k, &maps.m, &maps.n] {
                    if s > r {
                        assert_eq!(mat[(r, s)], 0.0);
                    } else {
                        assert!(mat[(r, s)] >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn outdoor_row_sums_approach_one() {
        let maps = build_affine_maps(&house1(), 24 * 12, 1.0 / 12.0).unwrap();
        let row_sum = |r: usize| (0..=r).map(|s| maps.k[(r, s)]).sum::<f64>();
        let early = row_sum(10);
        let late = row_sum(24 * 12 - 1);
        assert!(early < late);
        // slow mode of the coupled system has a time constant near 40 h
        assert!(late > 0.4 && late < 1.0);
        let long = build_affine_maps(&house1(), 2000, 1.0).unwrap();
        assert_relative_eq!((0..2000).map(|s| long.k[(1999, s)]).sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fine_step_must_divide_coarse() {
        let spec = house1();
        let x = vec![false; 4];
        let t = vec![0.0; 4];
        assert!(matches!(
            simulate_fine(&spec, &x, &t, 0.5, 1800.0, FineScheme::Exact),
            Err(ThermalError::BadFineStep { .. })
        ));
        assert!(simulate_fine(&spec, &x, &t, 0.5, 7.0, FineScheme::Exact).is_err());
        assert!(simulate_fine(&spec, &x, &t, 0.5, 5.0, FineScheme::Exact).is_ok());
    }

    #[test]
    fn fine_equilibrium_is_constant() {
        let mut spec = house1();
        spec.t0 = 20.0;
        spec.tw0 = 20.0;
        let traj = simulate_fine(&spec, &[false; 12], &[20.0; 12], 1.0 / 12.0, 5.0, FineScheme::Euler).unwrap();
        assert!(traj.indoor.iter().all(|&t| (t - 20.0).abs() < 1e-12));
        assert!(traj.tank.iter().all(|&t| (t - 20.0).abs() < 1e-12));
    }
}
