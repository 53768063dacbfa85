//! Endogeny of the Bernoulli recursive tree process at a fixed point of `f`.
//!
//! Two copies of the leaf data, coupled through one tree, disagree at the
//! root as `(1, 0)` with probability `b_n`, where `b_{n+1} = h(b_n)` and
//! `h(b) = R(2R(x) - R(x - b)) - R(R(x))`.

use crate::dist::OffspringDistribution;
use crate::error::{Error, Result};
use serde::Serialize;

pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const SLOPE_TOL: f64 = 1e-9;
pub const STAR_TOL: f64 = 1e-12;
const SLACK: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;
const TRACE_LEN: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Endogenous,
    NonEndogenous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndogenyReport {
    pub x: f64,
    pub f_prime: f64,
    pub verdict: Verdict,
    pub b_star: f64,
    /// `(n, h^n(b_0))`; the first 200 steps, then the final one.
    pub iterates: Vec<(usize, f64)>,
}

fn check_fixed(dist: &OffspringDistribution, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        });
    }
    let residual = (dist.f(x) - x).abs();
    if residual > FIXED_POINT_TOL {
        return Err(Error::NotAFixedPoint { x, residual });
    }
    Ok(())
}

fn h_unchecked(dist: &OffspringDistribution, x: f64, b: f64) -> Result<f64> {
    let rx = dist.r(x);
    let inner = 2.0 * rx - dist.r(x - b);
    if !(-SLACK..=1.0 + SLACK).contains(&inner) {
        return Err(Error::Domain {
            value: inner,
            domain: "[0, 1] (inner argument of h)",
        });
    }
    Ok(dist.r(inner.clamp(0.0, 1.0)) - dist.r(rx))
}

/// `h(b)` for `b` in `[0, min(x, 1 - x)]`.
pub fn h_map(dist: &OffspringDistribution, x: f64, b: f64) -> Result<f64> {
    check_fixed(dist, x)?;
    let top = x.min(1.0 - x);
    if !(-SLACK..=top + SLACK).contains(&b) {
        return Err(Error::Domain {
            value: b,
            domain: "[0, min(x, 1 - x)]",
        });
    }
    h_unchecked(dist, x, b.clamp(0.0, top))
}

/// `b_0, h(b_0), ..., h^n(b_0)`.
pub fn h_iterates(dist: &OffspringDistribution, x: f64, b0: f64, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut b = b0;
    out.push(b);
    for _ in 0..n {
        b = h_map(dist, x, b)?;
        out.push(b);
    }
    Ok(out)
}

/// `(b, h(b) - b)` on `points` evenly spaced `b` in `[0, min(x, 1 - x)]`.
pub fn h_table(dist: &OffspringDistribution, x: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    check_fixed(dist, x)?;
    let top = x.min(1.0 - x);
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| {
            let b = top * i as f64 / n as f64;
            Ok((b, h_unchecked(dist, x, b)? - b))
        })
        .collect()
}

fn f_prime(dist: &OffspringDistribution, x: f64) -> f64 {
    dist.jet_f(x, 1).map_or(f64::INFINITY, |j| j.coeff(1))
}

pub fn decide_endogeny(dist: &OffspringDistribution, x: f64) -> Result<EndogenyReport> {
    check_fixed(dist, x)?;
    let fp = f_prime(dist, x);
    let mut report = EndogenyReport {
        x,
        f_prime: fp,
        verdict: Verdict::Endogenous,
        b_star: 0.0,
        iterates: Vec::new(),
    };
    // constant values at the endpoints
    if x == 0.0 || x == 1.0 {
        return Ok(report);
    }
    let top = x.min(1.0 - x);
    let b0 = top * 1e-3;
    if fp <= 1.0 + SLOPE_TOL {
        let mut b = b0;
        report.iterates.push((0, b));
        for n in 1..=TRACE_LEN {
            b = h_unchecked(dist, x, b)?;
            report.iterates.push((n, b));
        }
        return Ok(report);
    }
    report.verdict = Verdict::NonEndogenous;
    let mut b = b0;
    report.iterates.push((0, b));
    let mut converged = false;
    for n in 1..=MAX_ITER {
        let next = h_unchecked(dist, x, b)?.clamp(0.0, top);
        let step = (next - b).abs();
        b = next;
        if n <= TRACE_LEN {
            report.iterates.push((n, b));
        }
        if step <= STAR_TOL {
            if n > TRACE_LEN {
                report.iterates.push((n, b));
            }
            converged = true;
            break;
        }
    }
    if !converged {
        // slow approach near tangency: bisect h(b) - b on [b0, top]
        let d = |t: f64| h_unchecked(dist, x, t).map_or(f64::NAN, |v| v - t);
        b = crate::analysis::bisect(d, b0, top);
        report.iterates.push((MAX_ITER, b));
    }
    report.b_star = b;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcsim::{simulate_bivariate, Boundary, SimConfig};

    fn dist(s: &str) -> OffspringDistribution {
        OffspringDistribution::parse(s).unwrap()
    }

    const PEARL: f64 = 0.618_033_988_749_894_8;

    fn interior_fixed_points(d: &OffspringDistribution) -> Vec<f64> {
        crate::analysis::find_fixed_points(d, 1e-11)
            .unwrap()
            .points()
            .iter()
            .map(|p| p.q)
            .filter(|&q| q > 0.0 && q < 1.0)
            .collect()
    }

    #[test]
    fn h_vanishes_at_zero_with_slope_f_prime() {
        for spec in [
            "regular:2",
            "finite:1=0.45,3=0.55",
            "finite:1=0.7,3=0.3",
            "regular:3",
        ] {
            let d = dist(spec);
            for x in interior_fixed_points(&d) {
                assert_eq!(h_map(&d, x, 0.0).unwrap(), 0.0);
                let e = 1e-5;
                let slope = (-3.0 * 0.0 + 4.0 * h_map(&d, x, e).unwrap()
                    - h_map(&d, x, 2.0 * e).unwrap())
                    / (2.0 * e);
                let fp = f_prime(&d, x);
                assert!(
                    (slope - fp).abs() < 1e-6 * fp.max(1.0),
                    "{spec} {x}: {slope} vs {fp}"
                );
            }
        }
    }

    #[test]
    fn regular_two_concave() {
        let d = dist("regular:2");
        let t = h_table(&d, PEARL, 401).unwrap();
        let h: Vec<f64> = t.iter().map(|(b, v)| v + b).collect();
        assert!(h.windows(2).all(|w| w[1] > w[0]));
        assert!(h.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] < 0.0));
    }

    #[test]
    fn regular_two_non_endogenous() {
        let d = dist("regular:2");
        let rep = decide_endogeny(&d, PEARL).unwrap();
        assert_eq!(rep.verdict, Verdict::NonEndogenous);
        assert!(rep.f_prime > 1.5);
        // closed form R(x) = 1 - x^2, root of h(b) - b by bisection
        let r = |y: f64| 1.0 - y * y;
        let h = |b: f64| r(2.0 * r(PEARL) - r(PEARL - b)) - r(r(PEARL)) - b;
        let (mut lo, mut hi) = (1e-6, 1.0 - PEARL);
        assert!(h(lo) > 0.0 && h(hi) <= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((rep.b_star - lo).abs() < 1e-9, "{} vs {lo}", rep.b_star);
        assert!(rep.b_star > 1e-3 && rep.b_star <= 1.0 - PEARL);
        assert!(rep.iterates.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn stable_interior_point_is_endogenous() {
        let d = dist("finite:1=0.7,3=0.3");
        let xs = interior_fixed_points(&d);
        assert_eq!(xs.len(), 1);
        let rep = decide_endogeny(&d, xs[0]).unwrap();
        assert_eq!(rep.verdict, Verdict::Endogenous);
        assert_eq!(rep.b_star, 0.0);
        for (b, d) in h_table(&d, xs[0], 101).unwrap() {
            assert!(d <= 1e-15, "{b}");
        }
    }

    #[test]
    fn identity_law_is_endogenous_everywhere() {
        let d = dist("geometric:0.5");
        for x in [0.1, 0.5, 0.9] {
            let rep = decide_endogeny(&d, x).unwrap();
            assert_eq!(rep.verdict, Verdict::Endogenous);
            assert!((rep.f_prime - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dichotomy_near_zero() {
        let d = dist("finite:1=0.45,3=0.55");
        for x in interior_fixed_points(&d) {
            let fp = f_prime(&d, x);
            let e = 1e-4 * x.min(1.0 - x);
            let above = h_map(&d, x, e).unwrap() > e;
            assert_eq!(above, fp > 1.0, "{x}");
        }
    }

    #[test]
    fn endpoints_and_errors() {
        let d = dist("finite:1=0.7,3=0.3");
        assert_eq!(
            decide_endogeny(&d, 0.0).unwrap().verdict,
            Verdict::Endogenous
        );
        assert!(matches!(
            decide_endogeny(&d, 0.3),
            Err(Error::NotAFixedPoint { .. })
        ));
        let r = dist("regular:2");
        assert!(h_map(&r, PEARL, 0.5).is_err());
    }

    #[test]
    fn bivariate_monte_carlo_matches_h() {
        let d = dist("regular:2");
        let x = PEARL;
        let b0 = x * (1.0 - x);
        let hs = h_iterates(&d, x, b0, 3).unwrap();
        for n in 1..=3u32 {
            let cfg = SimConfig::new(d.clone(), 2 * n, 20_000, 100 + n as u64)
                .with_boundary(Boundary::BivariateBernoulli { x });
            let run = simulate_bivariate(&cfg).unwrap();
            let (p, se) = run.proportion(1, 0);
            let want = hs[n as usize];
            assert!(
                (p - want).abs() < 3.0 * se,
                "n={n}: {p} vs {want} (se {se})"
            );
            let (p0, se0) = {
                let m = (run.counts[0][0] + run.counts[0][1]) as f64 / run.accepted() as f64;
                (m, (x * (1.0 - x) / run.accepted() as f64).sqrt())
            };
            assert!((p0 - x).abs() < 3.0 * se0);
        }
    }
}
