//! Derivative-free minimisation of unimodal scalar functions on `(0, ∞)`.

/// Golden-section search over `ln(x)` on `[lo, hi]`, expanding the bracket
/// geometrically while the minimum sits on an edge.
#[derive(Debug, Clone, Copy)]
pub struct LogGoldenSection {
    /// Stop once the bracket in log space is narrower than this.
    pub rel_tol: f64,
    /// Multiplicative bracket growth per expansion.
    pub expand: f64,
    /// Hard limits for the expanded bracket.
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for LogGoldenSection {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            expand: 1e3,
            floor: 1e-300,
            ceiling: 1e300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub arg: f64,
    pub value: f64,
    /// The final bracket rested on a hard limit; `value` is then the
    /// infimum approached at that limit, not an interior minimum.
    pub at_limit: bool,
    /// Final search bracket.
    pub bracket: (f64, f64),
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl LogGoldenSection {
    pub fn minimize<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Minimum {
        let mut lo = lo.max(self.floor);
        let mut hi = hi.min(self.ceiling);
        loop {
            let (arg, value) = self.search(&f, lo.ln(), hi.ln());
            let width = (hi / lo).ln();
            let near_lo = (arg / lo).ln() < 1e-3 * width;
            let near_hi = (hi / arg).ln() < 1e-3 * width;
            if near_lo && lo > self.floor {
                hi = (lo * self.expand.sqrt()).min(hi);
                lo = (lo / self.expand).max(self.floor);
                continue;
            }
            if near_hi && hi < self.ceiling {
                lo = (hi / self.expand.sqrt()).max(lo);
                hi = (hi * self.expand).min(self.ceiling);
                continue;
            }
            return Minimum {
                arg,
                value,
                at_limit: near_lo || near_hi,
                bracket: (lo, hi),
            };
        }
    }

    fn search<F: Fn(f64) -> f64>(&self, f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
        let g = |u: f64| f(u.exp());
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = g(c);
        let mut fd = g(d);
        let mut best = (a, g(a));
        let fb = g(b);
        if fb < best.1 {
            best = (b, fb);
        }
        while (b - a).abs() > self.rel_tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = g(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = g(d);
            }
        }
        for (u, v) in [(c, fc), (d, fd)] {
            if v <= best.1 {
                best = (u, v);
            }
        }
        (best.0.exp(), best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        // a/x + b x has its minimum 2 sqrt(ab) at sqrt(a/b)
        let m = LogGoldenSection::default().minimize(|x| 2.0 / x + 8.0 * x, 1e-3, 1e3);
        assert!((m.arg - 0.5).abs() < 1e-8);
        assert!((m.value - 8.0).abs() < 1e-12);
        assert!(!m.at_limit);
    }

    #[test]
    fn expands_when_minimum_is_outside_bracket() {
        let m = LogGoldenSection::default().minimize(|x| 1.0 / x + 1e-12 * x, 1e-3, 1e3);
        assert!((m.arg / 1e6 - 1.0).abs() < 1e-6);
        let m = LogGoldenSection::default().minimize(|x| 1e-14 / x + x, 1.0, 1e3);
        assert!((m.arg / 1e-7 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_limit_for_monotone_function() {
        let opt = LogGoldenSection {
            floor: 1e-20,
            ..Default::default()
        };
        let m = opt.minimize(|x| x, 1e-3, 1e3);
        assert!(m.at_limit);
        assert!(m.value < 1e-19);
    }
}
