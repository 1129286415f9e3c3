use super::flips::FlipEvaluator;
use super::{ScheduleSolution, SolveStatus, SolverError};
use crate::model::{MilpInstance, Schedule};

pub const MAX_ENUMERATED_BINARIES: usize = 22;

/// Exact optimum by visiting every binary assignment in Gray-code order.
///
/// Each row may hold at most one continuous variable; given the binaries,
/// such a variable is set to the cheapest value its rows and bounds allow.
pub fn enumerate_small(instance: &MilpInstance) -> Result<ScheduleSolution, SolverError> {
    let count = instance.binary_indices().len();
    if count > MAX_ENUMERATED_BINARIES {
        return Err(SolverError::TooManyBinaries {
            got: count,
            limit: MAX_ENUMERATED_BINARIES,
        });
    }
    let mut ev = FlipEvaluator::new(instance)?;
    let binaries = ev.binaries().to_vec();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total: u64 = 1 << count;
    for step in 0..total {
        if step > 0 {
            // Gray code: the bit that changes is the lowest set bit of step
            ev.flip(binaries[step.trailing_zeros() as usize]);
        }
        if !ev.binary_rows_hold() {
            continue;
        }
        let Some(obj) = ev.complete() else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-12 * (1.0 + b.abs())) {
            best = Some((obj, ev.values().to_vec()));
        }
    }

    let nodes = usize::try_from(total).unwrap_or(usize::MAX);
    Ok(match best {
        None => ScheduleSolution {
            status: SolveStatus::Infeasible,
            values: None,
            schedule: None,
            p_max: Vec::new(),
            objective_value: None,
            best_bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes,
            lp_iterations: 0,
        },
        Some((obj, values)) => {
            let (schedule, p_max) = match instance.layout {
                Some(l) => (
                    Some(Schedule::from_values(&l, &values)),
                    (0..l.zones).map(|z| values[l.peak(z)]).collect(),
                ),
                None => (None, Vec::new()),
            };
            ScheduleSolution {
                status: SolveStatus::Optimal,
                values: Some(values),
                schedule,
                p_max,
                objective_value: Some(obj),
                best_bound: obj,
                gap: 0.0,
                nodes,
                lp_iterations: 0,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_deterministic, BuildOptions, Constraint, ForecastSet, RowKind, RowTag, Sense, VarKind, Variable, Variant,
        ZoneSpec,
    };
    use crate::thermal::HouseSpec;

    fn single_binary(price: f64, hold_rhs: f64) -> MilpInstance {
        MilpInstance {
            variant: Variant::Deterministic,
            variables: vec![Variable {
                name: "X".into(),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            }],
            objective: vec![price],
            constraints: vec![Constraint {
                tag: RowTag {
                    kind: RowKind::WaterHold,
                    zone: None,
                    house: Some(0),
                    slot: Some(0),
                },
                coeffs: vec![(0, 0.8)],
                sense: Sense::Ge,
                rhs: hold_rhs,
            }],
            layout: None,
        }
    }

    #[test]
    fn single_binary_follows_water_hold() {
        let slack = enumerate_small(&single_binary(2.0, -1.0)).unwrap();
        assert_eq!(slack.values.unwrap(), vec![0.0]);
        let binding = enumerate_small(&single_binary(2.0, 0.5)).unwrap();
        assert_eq!(binding.values.unwrap(), vec![1.0]);
        let impossible = enumerate_small(&single_binary(2.0, 0.9)).unwrap();
        assert_eq!(impossible.status, SolveStatus::Infeasible);
    }

    #[test]
    fn peak_is_set_analytically() {
        let houses: Vec<HouseSpec> = HouseSpec::reference_fleet().into_iter().take(1).collect();
        let zones = vec![ZoneSpec {
            name: "z".into(),
            houses: vec![1],
            trans_capacity: 60.0,
            psi: 10.0,
        }];
        let forecast = ForecastSet {
            t_out: vec![0.0; 6],
            net_load: vec![vec![2.0, 2.0, 4.0, 2.0, 1.0, 1.0]],
            price: vec![1.0; 6],
            dt: 0.5,
        };
        let inst = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        let sol = enumerate_small(&inst).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let v = sol.values.unwrap();
        let sched = sol.schedule.unwrap();
        let peak = (0..6)
            .map(|t| forecast.net_load[0][t] + if sched.x[0][t] { 5.0 } else { 0.0 })
            .fold(0.0, f64::max);
        assert!((v[6] - peak).abs() < 1e-12);
    }

    #[test]
    fn too_many_binaries_rejected() {
        let mut inst = single_binary(1.0, 0.0);
        inst.variables = vec![inst.variables[0].clone(); 23];
        inst.objective = vec![1.0; 23];
        assert!(matches!(
            enumerate_small(&inst),
            Err(SolverError::TooManyBinaries { .. })
        ));
    }
}
