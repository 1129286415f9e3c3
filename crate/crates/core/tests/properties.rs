use proptest::collection::vec;
use proptest::prelude::*;

use hpdro::thermal::{build_affine_maps, HouseSpec};
use hpdro::uncertainty::{
    dual_worst_case, g_min_kde, gaussian_margin, radius_from_risk, worst_case_expectation, AmbiguityRadius,
    DiscreteDistribution, GaussianModel, KdeModel,
};

fn radius(eta: f64) -> AmbiguityRadius {
    AmbiguityRadius::new(eta).unwrap()
}

fn kde_strategy() -> impl Strategy<Value = KdeModel> {
    (vec(-5.0..5.0f64, 1..40), -2.0..0.5f64)
        .prop_map(|(centers, log_h)| KdeModel::new(centers, 10f64.powf(log_h)).unwrap())
}

fn discrete_strategy() -> impl Strategy<Value = DiscreteDistribution> {
    vec((-5.0..5.0f64, 0.01..1.0f64), 1..=10).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().map(|(v, p)| (v, p / total)).collect();
        let head: f64 = atoms[..atoms.len() - 1].iter().map(|a| a.1).sum();
        atoms.last_mut().unwrap().1 = 1.0 - head;
        DiscreteDistribution::new(atoms).unwrap()
    })
}

proptest! {
    #[test]
    fn risk_and_radius_invert(beta in 1e-6..1.0f64) {
        let eta = radius_from_risk(beta).unwrap().eta();
        prop_assert!(eta >= 0.0);
        prop_assert!(((-eta).exp() - beta).abs() < 1e-12);
    }

    #[test]
    fn risk_mapping_is_decreasing(a in 1e-6..1.0f64, b in 1e-6..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(radius_from_risk(lo).unwrap().eta() >= radius_from_risk(hi).unwrap().eta());
    }

    #[test]
    fn kde_margin_sits_between_mean_and_gaussian_cap(kde in kde_strategy(), eta in 0.0..7.0f64) {
        let m = g_min_kde(&kde, radius(eta)).unwrap();
        let max = kde.centers().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= kde.mean() - 1e-9);
        prop_assert!(m <= max + kde.bandwidth() * (2.0 * eta).sqrt() + 1e-7);
    }

    #[test]
    fn kde_margin_grows_with_radius(kde in kde_strategy(), a in 0.0..7.0f64, b in 0.0..7.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = g_min_kde(&kde, radius(lo)).unwrap();
        let m_hi = g_min_kde(&kde, radius(hi)).unwrap();
        prop_assert!(m_hi >= m_lo - 1e-7, "{m_lo} -> {m_hi}");
    }

    #[test]
    fn kde_margin_is_shift_equivariant(kde in kde_strategy(), shift in -10.0..10.0f64, eta in 0.01..7.0f64) {
        let moved = KdeModel::new(kde.centers().iter().map(|c| c + shift).collect(), kde.bandwidth()).unwrap();
        let a = g_min_kde(&kde, radius(eta)).unwrap();
        let b = g_min_kde(&moved, radius(eta)).unwrap();
        prop_assert!((b - a - shift).abs() < 1e-6, "{a} + {shift} vs {b}");
    }

    #[test]
    fn negated_kde_mirrors_centers(kde in kde_strategy()) {
        let neg = kde.negated();
        prop_assert!((neg.mean() + kde.mean()).abs() < 1e-12);
        prop_assert_eq!(neg.bandwidth(), kde.bandwidth());
    }

    #[test]
    fn gaussian_margin_is_affine_in_the_nominal(mu in -5.0..5.0f64, sigma in 0.01..3.0f64, eta in 0.0..7.0f64) {
        let unit = gaussian_margin(&GaussianModel { mu: 0.0, sigma: 1.0 }, radius(eta));
        let m = gaussian_margin(&GaussianModel { mu, sigma }, radius(eta));
        prop_assert!((m - (mu + sigma * unit)).abs() < 1e-12);
    }

    #[test]
    fn worst_case_lies_between_mean_and_max(p in discrete_strategy(), eta in 0.0..5.0f64) {
        let w = worst_case_expectation(&p, radius(eta)).unwrap();
        let max = p.atoms().iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(w >= p.mean() - 1e-9 && w <= max + 1e-9);
        let d = dual_worst_case(&p, radius(eta)).unwrap();
        prop_assert!((w - d).abs() < 1e-6, "primal {w} dual {d}");
    }

    #[test]
    fn worst_case_grows_with_radius(p in discrete_strategy(), a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let w_lo = worst_case_expectation(&p, radius(lo)).unwrap();
        let w_hi = worst_case_expectation(&p, radius(hi)).unwrap();
        prop_assert!(w_hi >= w_lo - 1e-9);
    }

    #[test]
    fn affine_maps_superpose(
        house in 0..10usize,
        x1 in vec(0.0..=1.0f64, 24),
        x2 in vec(0.0..=1.0f64, 24),
        out in vec(-15.0..10.0f64, 24),
    ) {
        let spec = &HouseSpec::reference_fleet()[house];
        let maps = build_affine_maps(spec, 24, 1.0).unwrap();
        let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let zero = vec![0.0; 24];
        let base = maps.tank(&zero, &out);
        let a = maps.tank(&x1, &out);
        let b = maps.tank(&x2, &out);
        let ab = maps.tank(&sum, &out);
        for t in 0..24 {
            prop_assert!((ab[t] - (a[t] + b[t] - base[t])).abs() < 1e-9);
        }
    }

    #[test]
    fn heating_never_cools(house in 0..10usize, x in vec(0.0..=1.0f64, 48), slot in 0..48usize) {
        let spec = &HouseSpec::reference_fleet()[house];
        let maps = build_affine_maps(spec, 48, 0.5).unwrap();
        let out = vec![-5.0; 48];
        let mut more = x.clone();
        more[slot] = 1.0;
        let (t0, w0) = (maps.indoor(&x, &out), maps.tank(&x, &out));
        let (t1, w1) = (maps.indoor(&more, &out), maps.tank(&more, &out));
        for t in 0..48 {
            prop_assert!(t1[t] >= t0[t] - 1e-12 && w1[t] >= w0[t] - 1e-12);
        }
    }
}
