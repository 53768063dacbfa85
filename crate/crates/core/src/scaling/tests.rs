use super::*;
use crate::analysis::{find_fixed_points, FixedPointSet};

fn dist(s: &str) -> OffspringDistribution {
    OffspringDistribution::parse(s).unwrap()
}

fn record_at(d: &OffspringDistribution, q: f64) -> FixedPointRecord {
    let set = find_fixed_points(d, DEFAULT_TOL).unwrap();
    set.points()
        .iter()
        .min_by(|a, b| (a.q - q).abs().partial_cmp(&(b.q - q).abs()).unwrap())
        .unwrap()
        .clone()
}

const PEARL: f64 = 0.618_033_988_749_894_8;

#[test]
fn grid_shape() {
    let g = case_a_grid(200);
    assert_eq!(g.len(), 200);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
    assert!(g.contains(&0.0));
    assert_eq!(g[0], -1e3);
    assert_eq!(*g.last().unwrap(), 1e3);
    assert!(g.iter().any(|&x| (x - 1e-3).abs() < 1e-18));
}

#[test]
fn regular_two_case_a() {
    let d = dist("regular:2");
    let fp = record_at(&d, PEARL);
    // f'(x) = 4x(1 - x^2) and q^2 = 1 - q
    assert!((fp.xi - 4.0 * (1.0 - PEARL)).abs() < 1e-9);
    let grid = case_a_grid(200);
    let ScalingRegime::CaseA {
        q_tilde,
        table,
        max_residual,
        ..
    } = solve_case_a(&d, &fp, &grid, DEFAULT_MAX_N, Precision::Double).unwrap()
    else {
        panic!()
    };
    assert!((q_tilde - PEARL).abs() < 1e-12);
    assert!(max_residual <= 1e-8, "{max_residual}");
    let at0 = table.iter().find(|r| r.0 == 0.0).unwrap().1;
    assert!((at0 - PEARL).abs() < 1e-12);
    assert!(table.windows(2).all(|w| w[1].1 >= w[0].1));
    assert!(table[0].1 < 1e-6);
    assert!(table.last().unwrap().1 > 1.0 - 1e-6);
}

#[test]
fn slope_at_zero_is_one() {
    let d = dist("regular:2");
    let fp = record_at(&d, PEARL);
    let s = CaseASolver::new(&d, &fp, Precision::Double, DEFAULT_MAX_N).unwrap();
    let h = 1e-4;
    let slope = (s.eval(h).unwrap() - s.eval(-h).unwrap()) / (2.0 * h);
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn g_n_is_eventually_monotone() {
    let d = dist("regular:2");
    let fp = record_at(&d, PEARL);
    let s = CaseASolver::new(&d, &fp, Precision::Double, DEFAULT_MAX_N).unwrap();
    for x in [-5.0, -0.3, 0.2, 7.0] {
        let v: Vec<f64> = (30..60).map(|n| s.g_n(x, n).unwrap()).collect();
        let diffs: Vec<f64> = v
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| d.abs() > 1e-15)
            .collect();
        assert!(diffs.iter().all(|d| d.signum() == diffs[0].signum()), "{x}");
    }
}

#[test]
fn double_and_extended_agree() {
    for (spec, q) in [
        ("regular:2", PEARL),
        ("finite:1=0.7,3=0.3", 0.0),
        ("regular:3", 0.5),
    ] {
        let d = dist(spec);
        let fp = record_at(&d, q);
        if fp.xi <= 1.0 + XI_ONE_TOL {
            continue;
        }
        let a = CaseASolver::new(&d, &fp, Precision::Double, DEFAULT_MAX_N).unwrap();
        let b = CaseASolver::new(&d, &fp, Precision::Extended, DEFAULT_MAX_N).unwrap();
        for x in [-20.0, -1.0, -0.01, 0.003, 0.5, 40.0] {
            let (u, v) = (a.eval(x).unwrap(), b.eval(x).unwrap());
            assert!((u - v).abs() < 1e-9, "{spec} {x}: {u} vs {v}");
        }
    }
}

#[test]
fn one_sided_law_at_endpoint() {
    // p1 mu = 0.7 * 1.6 > 1: atom at 0 with xi = 1.12, law on the positive half-line
    let d = dist("finite:1=0.7,3=0.3");
    let fp = record_at(&d, 0.0);
    assert!((fp.xi - 1.12).abs() < 1e-9);
    let s = CaseASolver::new(&d, &fp, Precision::Double, DEFAULT_MAX_N).unwrap();
    assert_eq!(s.eval(-1.0).unwrap(), 0.0);
    assert_eq!(s.eval(0.0).unwrap(), 0.0);
    let v = s.eval(1.0).unwrap();
    assert!(v > 0.0 && v < 1.0);
    assert!(s.residual(1.0).unwrap() < 1e-8);
}

#[test]
fn case_a_rejects_other_regimes() {
    let d = dist("finite:1=0.5,2=0.25,4=0.25");
    let fp = record_at(&d, 0.0);
    assert!(CaseASolver::new(&d, &fp, Precision::Double, 10).is_err());
    let g = dist("geometric:0.5");
    assert!(CaseASolver::new(&g, &fp, Precision::Extended, 10).is_err());
}

/// One-sided second difference of `f` at 0 (oracle for `f''(0)`).
fn second_derivative_at_zero(d: &OffspringDistribution) -> f64 {
    let h = 1e-3;
    (2.0 * d.f(0.0) - 5.0 * d.f(h) + 4.0 * d.f(2.0 * h) - d.f(3.0 * h)) / (h * h)
}

#[test]
fn case_b_boundary_law() {
    let d = dist("finite:1=0.5,2=0.25,4=0.25");
    let fp = record_at(&d, 0.0);
    assert!((fp.xi - 1.0).abs() < 1e-12);
    let ScalingRegime::CaseB {
        k,
        a,
        mass_plus,
        mass_minus,
        ..
    } = solve_case_b(&d, &fp).unwrap()
    else {
        panic!()
    };
    assert_eq!(k, 2);
    let oracle = 2.0 / second_derivative_at_zero(&d);
    assert!((a - oracle).abs() / oracle < 1e-4, "{a} vs {oracle}");
    assert_eq!((mass_plus, mass_minus), (1.0, 0.0));
    let t = case_b_empirical_threshold(&d, &fp, k, a, Side::Right, 100_000).unwrap();
    assert!((t - a).abs() / a < 0.05, "{t} vs {a}");
    assert!(case_b_empirical_threshold(&d, &fp, k, a, Side::Left, 10).is_err());
}

#[test]
fn case_b_inflection() {
    let d = dist("finite:2=0.7051194448610318,12=0.2948805551389682");
    let fp = record_at(&d, 0.6755460884212945);
    assert_eq!(fp.stability, Stability::UnstableBoth);
    let ScalingRegime::CaseB {
        k,
        a,
        mass_plus,
        mass_minus,
        ..
    } = solve_case_b(&d, &fp).unwrap()
    else {
        panic!()
    };
    assert_eq!(k, 3);
    // neighbours by direct iteration from q +- 1e-3
    let run = |mut y: f64| {
        for _ in 0..2_000_000 {
            y = d.f(y);
        }
        y
    };
    let (lo, hi) = (run(fp.q - 1e-3), run(fp.q + 1e-3));
    let len = hi - lo;
    assert!((mass_plus - (hi - fp.q) / len).abs() < 1e-6);
    assert!((mass_minus - (fp.q - lo) / len).abs() < 1e-6);
    assert!(mass_plus > 0.0 && mass_minus > 0.0);
    assert!((mass_plus + mass_minus - 1.0).abs() < 1e-12);
    for side in [Side::Left, Side::Right] {
        let t = case_b_empirical_threshold(&d, &fp, k, a, side, 100_000).unwrap();
        assert!((t - a).abs() / a < 0.05, "{side:?}: {t} vs {a}");
    }
}

#[test]
fn case_b_missing_order() {
    let d = dist("finite:1=0.5,2=0.25,4=0.25");
    let fp = record_at(&d, 0.0);
    assert!(matches!(
        solve_case_b_with(&d, &fp, 1),
        Err(Error::DerivativeOrderNotFound { .. })
    ));
}

#[test]
fn case_c_power_law() {
    let d = dist("powerlaw:1.5");
    let ScalingRegime::CaseC {
        k_min,
        p_k,
        rho,
        exponent,
        c0,
        c1,
        ..
    } = solve_case_c(&d).unwrap()
    else {
        panic!()
    };
    assert_eq!(k_min, 1);
    assert!((rho - 0.5).abs() < 0.01, "{rho}");
    // direct partial sums of k^-1/2 fitted independently
    let mut acc = 0.0;
    let mut pts = Vec::new();
    for k in 1..=100_000usize {
        acc += (k as f64).powf(-0.5);
        if k >= 100 && (k as f64).log10().fract() < 1e-9 {
            pts.push(((k as f64).ln(), acc.ln()));
        }
    }
    let (x0, y0) = pts[0];
    let (x1, y1) = *pts.last().unwrap();
    assert!(((y1 - y0) / (x1 - x0) - rho).abs() / rho < 0.02);
    let window = slope_window(&d);
    assert_eq!(window, (4, 8));
    let (s0, s1) = endpoint_slopes(&d, window);
    assert!(
        (s0 - exponent).abs() / exponent < 0.05,
        "{s0} vs {exponent}"
    );
    assert!(
        (s1 - exponent).abs() / exponent < 0.05,
        "{s1} vs {exponent}"
    );
    let kf = k_min as f64;
    let rhs = c0.powf(kf) * p_k.powf(1.0 - kf * (1.0 - rho));
    assert!((c1 - rhs).abs() < 1e-6);
}

#[test]
fn case_c_untruncated_slopes() {
    let d = dist("powerlaw:1.5,inf");
    let ScalingRegime::CaseC { exponent, .. } = solve_case_c(&d).unwrap() else {
        panic!()
    };
    let (s0, s1) = endpoint_slopes(&d, slope_window(&d));
    assert!((s0 - exponent).abs() / exponent < 0.05, "{s0}");
    assert!((s1 - exponent).abs() / exponent < 0.05, "{s1}");
}

#[test]
fn case_c_rejects_finite_mean() {
    assert!(matches!(
        solve_case_c(&dist("finite:1=0.45,3=0.55")),
        Err(Error::AssumptionViolated(_))
    ));
}

#[test]
fn case_c_verification_stabilises() {
    let d = dist("powerlaw:1.5,inf");
    let regime = solve_case_c(&d).unwrap();
    let rep = verify_case_c_scaling(&d, &regime, 6, 20_000, 3).unwrap();
    assert!(rep.min_value > 0.0);
    assert!(rep.accepted_zero >= MIN_CONDITIONED && rep.accepted_one >= MIN_CONDITIONED);
    assert!(
        CaseCVerification::drift_decreasing(&rep.drift_zero),
        "{:?}",
        rep.drift_zero
    );
    assert!(
        CaseCVerification::drift_decreasing(&rep.drift_one),
        "{:?}",
        rep.drift_one
    );
    assert!(verify_case_c_scaling(&d, &regime, 1, 10, 3).is_err());
}

#[test]
fn auto_selection() {
    let grid = case_a_grid(21);
    let r = dist("regular:2");
    assert!(matches!(
        solve(&r, &record_at(&r, PEARL), &grid, Precision::Double).unwrap(),
        ScalingRegime::CaseA { .. }
    ));
    let b = dist("finite:1=0.5,2=0.25,4=0.25");
    assert!(matches!(
        solve(&b, &record_at(&b, 0.0), &grid, Precision::Double).unwrap(),
        ScalingRegime::CaseB { .. }
    ));
    let c = dist("powerlaw:1.5,inf");
    assert!(matches!(
        solve(&c, &record_at(&c, 0.0), &grid, Precision::Double).unwrap(),
        ScalingRegime::CaseC { .. }
    ));
    let s = dist("finite:1=0.45,3=0.55");
    let set = find_fixed_points(&s, DEFAULT_TOL).unwrap();
    assert!(!matches!(set, FixedPointSet::Identity));
    assert!(solve(&s, &record_at(&s, 0.0), &grid, Precision::Double).is_err());
}
