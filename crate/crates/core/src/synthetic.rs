//! Example inputs: a winter day forecast, a time-of-use tariff and
//! forecast error histories with skewed, time-growing spread.

use std::f64::consts::PI;

use rand_distr::{ChiSquared, Distribution, Gamma};

use crate::evaluation::{substream, POWER_ERROR_DOF};
use crate::model::{ForecastSet, ZoneSpec};
use crate::uncertainty::{ErrorHistory, StreamId};

/// Days of temperature error history per slot.
pub const TEMPERATURE_HISTORY_DAYS: usize = 92;
/// Power error samples per slot.
pub const POWER_HISTORY_SAMPLES: usize = 5000;
/// Shape of the gamma law behind the temperature errors.
const TEMPERATURE_SKEW_SHAPE: f64 = 4.0;

/// Hour of day at the start of slot `t`.
fn hour(t: usize, dt: f64) -> f64 {
    (t as f64 * dt) % 24.0
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((h - centre) / width).powi(2)).exp()
}

/// Outdoor temperature, coldest before dawn and warmest mid-afternoon, °C.
pub fn outdoor_temperature(t: usize, dt: f64) -> f64 {
    -5.0 + 5.0 * (2.0 * PI * (hour(t, dt) - 14.0) / 24.0).cos()
}

/// Household demand net of rooftop PV, kW: a night base, a morning bump,
/// an evening peak around 19:30 and a midday solar dip.
pub fn household_net_load(t: usize, dt: f64) -> f64 {
    let h = hour(t, dt);
    let pv = (PI * (h - 6.0) / 12.0).sin().max(0.0);
    0.7 + 0.9 * bump(h, 8.0, 1.2) + 3.0 * bump(h, 19.5, 1.5) - 0.6 * pv
}

/// Three-level tariff (valley overnight, peak in the evening) scaled to a
/// mean of exactly one per kWh over the horizon.
pub fn tou_price(horizon: usize, dt: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..horizon)
        .map(|t| match hour(t, dt) {
            h if !(7.0..23.0).contains(&h) => 0.5,
            h if (17.0..21.0).contains(&h) => 1.8,
            _ => 1.0,
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / horizon as f64;
    let mut price: Vec<f64> = raw.iter().map(|p| p / mean).collect();
    // absorb the rounding of the division into the largest entry
    let drift = price.iter().sum::<f64>() - horizon as f64;
    if let Some(top) = price.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *top -= drift;
    }
    price
}

pub fn forecast(zones: &[ZoneSpec], horizon: usize, dt: f64) -> ForecastSet {
    ForecastSet {
        t_out: (0..horizon).map(|t| outdoor_temperature(t, dt)).collect(),
        net_load: zones
            .iter()
            .map(|z| {
                (0..horizon)
                    .map(|t| z.houses.len() as f64 * household_net_load(t, dt))
                    .collect()
            })
            .collect(),
        price: tou_price(horizon, dt),
        dt,
    }
}

/// Standard deviation of the temperature error at slot `t`, growing
/// linearly from 0.3 °C at the first slot to 1 °C at the last.
pub fn temperature_error_sd(t: usize, horizon: usize) -> f64 {
    let frac = if horizon > 1 {
        t as f64 / (horizon - 1) as f64
    } else {
        0.0
    };
    0.3 + 0.7 * frac
}

/// Zero-mean, right-skewed temperature errors: a standardised gamma draw
/// scaled by [`temperature_error_sd`].
pub fn temperature_histories(horizon: usize, seed: u64) -> Vec<ErrorHistory> {
    let k = TEMPERATURE_SKEW_SHAPE;
    let gamma = Gamma::new(k, 1.0).expect("valid gamma");
    (0..horizon)
        .map(|t| {
            let mut rng = substream(seed, "history:temperature", t as u64);
            let sd = temperature_error_sd(t, horizon);
            let samples = (0..TEMPERATURE_HISTORY_DAYS)
                .map(|_| round_to(sd * (gamma.sample(&mut rng) - k) / k.sqrt(), 4))
                .collect();
            ErrorHistory::new(StreamId::Temperature, t, samples)
        })
        .collect()
}

/// Zonal power errors `-0.15 chi2_5 + 0.75` kW, one stream per zone.
pub fn power_histories(zones: &[ZoneSpec], horizon: usize, seed: u64) -> Vec<ErrorHistory> {
    let chi = ChiSquared::new(POWER_ERROR_DOF).expect("positive dof");
    let mut out = Vec::with_capacity(zones.len() * horizon);
    for z in zones {
        for t in 0..horizon {
            let mut rng = substream(seed, &format!("history:power:{}", z.name), t as u64);
            let samples = (0..POWER_HISTORY_SAMPLES)
                .map(|_| round_to(-0.15 * chi.sample(&mut rng) + 0.75, 5))
                .collect();
            out.push(ErrorHistory::new(StreamId::Power(z.name.clone()), t, samples));
        }
    }
    out
}

/// Nearest double to `v` printed with `decimals` places, so the CSV text
/// stays short.
fn round_to(v: f64, decimals: usize) -> f64 {
    format!("{v:.decimals$}").parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_mean_is_one() {
        for (h, dt) in [(48, 0.5), (288, 1.0 / 12.0), (24, 1.0)] {
            let p = tou_price(h, dt);
            let mean = p.iter().sum::<f64>() / h as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{mean}");
            assert!(p.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn evening_is_the_price_and_load_peak() {
        let p = tou_price(48, 0.5);
        let peak_slot = (0..48).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        assert!((17.0..21.0).contains(&(peak_slot as f64 * 0.5)));
        let load: Vec<f64> = (0..48).map(|t| household_net_load(t, 0.5)).collect();
        let top = (0..48).max_by(|&a, &b| load[a].total_cmp(&load[b])).unwrap();
        assert!((18.0..21.0).contains(&(top as f64 * 0.5)), "{top}");
        assert!(load.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn temperature_errors_grow_and_skew_right() {
        let hist = temperature_histories(48, 7);
        let sd = |s: &[f64]| {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
        };
        assert!(sd(&hist[0].samples) < sd(&hist[47].samples));
        let pooled: Vec<f64> = hist
            .iter()
            .enumerate()
            .flat_map(|(t, h)| h.samples.iter().map(move |v| v / temperature_error_sd(t, 48)))
            .collect();
        let m = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let m3 = pooled.iter().map(|v| (v - m).powi(3)).sum::<f64>() / pooled.len() as f64;
        assert!(m.abs() < 0.1 && m3 > 0.0, "mean {m} third moment {m3}");
    }

    #[test]
    fn histories_are_seeded() {
        let z = vec![ZoneSpec {
            name: "a".into(),
            houses: vec![1],
            trans_capacity: 60.0,
            psi: 10.0,
        }];
        assert_eq!(power_histories(&z, 2, 3), power_histories(&z, 2, 3));
        assert_ne!(power_histories(&z, 2, 3), power_histories(&z, 2, 4));
        assert!(power_histories(&z, 2, 3)[0].samples.iter().all(|&v| v <= 0.75));
    }
}
