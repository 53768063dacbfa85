//! Rescaled fluctuations of `W_2n` around an atom.
//!
//! Three regimes by `xi = f'(q)`: a continuous limit law for `xi` in `(1, inf)`,
//! a two-point law at `+-a` for `xi = 1`, and a log-scale law for `xi = inf`.

use crate::analysis::{find_fixed_points, FixedPointRecord, Stability, DEFAULT_TOL};
use crate::dd::Dd;
use crate::dist::{softplus, OffspringDistribution, Truncation};
use crate::error::{Error, Result};
use crate::mcsim::QuantileSampler;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

pub const DEFAULT_MAX_N: usize = 2000;
pub const DEFAULT_JET_ORDER: usize = 12;
pub const CAUCHY_TOL: f64 = 1e-12;
pub const XI_ONE_TOL: f64 = 1e-9;
pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
pub const MIN_CONDITIONED: usize = 100;

/// Arithmetic used for the iteration of the conditioned map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double; finite-support laws only.
    Extended,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ScalingRegime {
    CaseA {
        q: f64,
        xi: f64,
        q_minus: f64,
        q_plus: f64,
        q_tilde: f64,
        /// `(x, F_V(x))`.
        table: Vec<(f64, f64)>,
        /// Largest `|F_V(x) - f~(F_V(x / xi))|` over the table.
        max_residual: f64,
    },
    CaseB {
        q: f64,
        k: usize,
        a: f64,
        mass_plus: f64,
        mass_minus: f64,
    },
    CaseC {
        k_min: usize,
        p_k: f64,
        rho: f64,
        c: f64,
        exponent: f64,
        c0: f64,
        c1: f64,
        fit_residual: f64,
    },
}

/// `n - 1` nonzero points log-spaced over `1e-3..1e3` on both sides, plus 0.
pub fn case_a_grid(n: usize) -> Vec<f64> {
    let n = n.max(3);
    let neg = (n - 1) / 2;
    let pos = n - 1 - neg;
    let side = |m: usize| -> Vec<f64> {
        if m == 1 {
            return vec![1.0];
        }
        (0..m)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (m - 1) as f64))
            .collect()
    };
    let mut out: Vec<f64> = side(neg).into_iter().rev().map(|x| -x).collect();
    out.push(0.0);
    out.extend(side(pos));
    out
}

/// Iterates `f` around a fixed point with `1 < xi < inf`, in deviation form
/// `delta -> f(q + delta) - q` to keep tiny perturbations exact.
#[derive(Clone, Debug)]
pub struct CaseASolver<'a> {
    dist: &'a OffspringDistribution,
    q: f64,
    q_minus: f64,
    q_plus: f64,
    xi: f64,
    /// Taylor coefficients `c_1..c_m` of `f(q + d) - q`.
    jet: Vec<f64>,
    radius: f64,
    q_dd: Option<Dd>,
    max_n: usize,
}

impl<'a> CaseASolver<'a> {
    pub fn new(
        dist: &'a OffspringDistribution,
        fp: &FixedPointRecord,
        precision: Precision,
        max_n: usize,
    ) -> Result<Self> {
        if !(fp.xi > 1.0 + XI_ONE_TOL && fp.xi.is_finite()) {
            return Err(Error::Precondition(format!(
                "continuous rescaled law needs 1 < f'(q) < inf, got {}",
                fp.xi
            )));
        }
        if !fp.stability.is_unstable() {
            return Err(Error::Precondition("fixed point is stable".into()));
        }
        let j = dist.jet_f(fp.q, DEFAULT_JET_ORDER)?;
        let jet: Vec<f64> = j.coeffs()[1..].to_vec();
        let cm = jet.last().copied().unwrap_or(0.0).abs();
        let m = jet.len() as f64;
        let radius = if cm > 0.0 {
            (1e-18 / cm).powf(1.0 / m).min(1e-2)
        } else {
            1e-2
        };
        let q_dd = match precision {
            Precision::Double => None,
            Precision::Extended => {
                if !dist.supports_extended_precision() {
                    return Err(Error::Precondition(
                        "extended precision needs a finite-support law".into(),
                    ));
                }
                let mut q = Dd::from(fp.q);
                for _ in 0..4 {
                    let r = (dist.f_dd(q).unwrap() - q).to_f64();
                    q = q + (-r / (fp.xi - 1.0));
                }
                Some(q)
            }
        };
        Ok(Self {
            dist,
            q: fp.q,
            q_minus: fp.q_minus,
            q_plus: fp.q_plus,
            xi: fp.xi,
            jet,
            radius,
            q_dd,
            max_n,
        })
    }

    pub fn len(&self) -> f64 {
        self.q_plus - self.q_minus
    }

    pub fn q_tilde(&self) -> f64 {
        (self.q - self.q_minus) / self.len()
    }

    /// Conditioned map `f~(y) = (f(q- + yL) - q-) / L`.
    pub fn f_tilde(&self, y: f64) -> f64 {
        let l = self.len();
        (self.dist.f(self.q_minus + y * l) - self.q_minus) / l
    }

    fn phi(&self, d: f64) -> f64 {
        if d.abs() <= self.radius {
            let mut acc = 0.0;
            for c in self.jet.iter().rev() {
                acc = (acc + c) * d;
            }
            acc
        } else {
            self.dist.f(self.q + d) - self.q
        }
    }

    fn clamp_dev(&self, d: f64) -> f64 {
        d.clamp(self.q_minus - self.q, self.q_plus - self.q)
    }

    /// `g_n(x) = f~^n(q~ + x / xi^n)`.
    pub fn g_n(&self, x: f64, n: usize) -> Result<f64> {
        let l = self.len();
        let d0 = l * x / self.xi.powi(n as i32);
        let dev = match self.q_dd {
            None => {
                if d0 != 0.0 && d0.abs() < 1e-300 {
                    return Err(Error::PrecisionLoss { x, iterations: n });
                }
                let mut d = d0;
                for _ in 0..n {
                    d = self.clamp_dev(self.phi(d));
                }
                d
            }
            Some(q) => {
                if d0 != 0.0 && (d0.abs() < 1e-300 || d0.abs() < 1e-30 * self.q) {
                    return Err(Error::PrecisionLoss { x, iterations: n });
                }
                let mut d = Dd::from(d0);
                for _ in 0..n {
                    d = self.dist.f_dd(q + d).unwrap() - q;
                    let c = self.clamp_dev(d.to_f64());
                    if c != d.to_f64() {
                        d = Dd::from(c);
                    }
                }
                d.to_f64()
            }
        };
        Ok(((self.q - self.q_minus) + dev) / l)
    }

    /// `F_V(x) = lim g_n(x)`, stopping on `|g_n - g_{n-1}| < 1e-12`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.q_tilde());
        }
        if x < 0.0 && self.q_minus == self.q {
            return Ok(0.0);
        }
        if x > 0.0 && self.q_plus == self.q {
            return Ok(1.0);
        }
        let width = if x > 0.0 {
            self.q_plus - self.q
        } else {
            self.q - self.q_minus
        };
        // start once the initial perturbation is well inside the interval
        let ratio = self.len() * x.abs() / (1e-3 * width);
        let n0 = if ratio > 1.0 {
            (ratio.ln() / self.xi.ln()).ceil() as usize
        } else {
            1
        }
        .max(1);
        let mut prev = self.g_n(x, n0)?;
        let mut change = f64::INFINITY;
        for n in n0 + 1..=self.max_n.max(n0 + 1) {
            let cur = self.g_n(x, n)?;
            change = (cur - prev).abs();
            if change < CAUCHY_TOL {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NoConvergence {
            iterations: self.max_n,
            last_change: change,
        })
    }

    /// `|F_V(x) - f~(F_V(x / xi))|`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        Ok((self.eval(x)? - self.f_tilde(self.eval(x / self.xi)?)).abs())
    }
}

fn par_map<T: Send, U: Send>(items: Vec<T>, f: impl Fn(T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

pub fn solve_case_a(
    dist: &OffspringDistribution,
    fp: &FixedPointRecord,
    grid: &[f64],
    max_n: usize,
    precision: Precision,
) -> Result<ScalingRegime> {
    let solver = CaseASolver::new(dist, fp, precision, max_n)?;
    let rows = par_map(grid.to_vec(), |x| -> Result<(f64, f64, f64)> {
        let v = solver.eval(x)?;
        let r = (v - solver.f_tilde(solver.eval(x / solver.xi)?)).abs();
        Ok((x, v, r))
    });
    let mut table = Vec::with_capacity(rows.len());
    let mut max_residual: f64 = 0.0;
    for row in rows {
        let (x, v, r) = row?;
        table.push((x, v));
        max_residual = max_residual.max(r);
    }
    Ok(ScalingRegime::CaseA {
        q: fp.q,
        xi: fp.xi,
        q_minus: fp.q_minus,
        q_plus: fp.q_plus,
        q_tilde: solver.q_tilde(),
        table,
        max_residual,
    })
}

pub fn solve_case_b(dist: &OffspringDistribution, fp: &FixedPointRecord) -> Result<ScalingRegime> {
    solve_case_b_with(dist, fp, DEFAULT_JET_ORDER)
}

pub fn solve_case_b_with(
    dist: &OffspringDistribution,
    fp: &FixedPointRecord,
    max_order: usize,
) -> Result<ScalingRegime> {
    if (fp.xi - 1.0).abs() > XI_ONE_TOL {
        return Err(Error::Precondition(format!("f'(q) = {} is not 1", fp.xi)));
    }
    let len = fp.q_plus - fp.q_minus;
    if len <= 0.0 {
        return Err(Error::Precondition("fixed point is stable".into()));
    }
    let jet = dist.jet_f(fp.q, max_order)?;
    let k = (2..=max_order)
        .find(|&r| jet.coeff(r).abs() > 1e-9)
        .ok_or(Error::DerivativeOrderNotFound { q: fp.q, max_order })?;
    // a = (k (k-2)! / |f^(k)(q)|)^(1/(k-1)) with f^(k) = k! c_k
    let ck = jet.coeff(k).abs();
    let a = (1.0 / ((k - 1) as f64 * ck)).powf(1.0 / (k - 1) as f64);
    Ok(ScalingRegime::CaseB {
        q: fp.q,
        k,
        a,
        mass_plus: (fp.q_plus - fp.q) / len,
        mass_minus: (fp.q - fp.q_minus) / len,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Brute-force location of the `xi = 1` dichotomy: the `x` where
/// `f^n(q + x n^{-1/(k-1)})` lands halfway between `q` and its neighbour.
/// Converges to `a` as `n` grows.
pub fn case_b_empirical_threshold(
    dist: &OffspringDistribution,
    fp: &FixedPointRecord,
    k: usize,
    a: f64,
    side: Side,
    n: usize,
) -> Result<f64> {
    let (target, sign) = match side {
        Side::Right if fp.q_plus > fp.q => (0.5 * (fp.q + fp.q_plus), 1.0),
        Side::Left if fp.q_minus < fp.q => (0.5 * (fp.q + fp.q_minus), -1.0),
        _ => {
            return Err(Error::Precondition(
                "fixed point is stable on that side".into(),
            ))
        }
    };
    let scale = (n as f64).powf(-1.0 / (k - 1) as f64);
    let h = |x: f64| {
        let mut y = fp.q + sign * x * scale;
        for _ in 0..n {
            y = dist.f(y);
        }
        sign * (y - target)
    };
    let (mut lo, mut hi) = (0.5 * a, 2.0 * a);
    for _ in 0..20 {
        if h(lo) < 0.0 {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..20 {
        if h(hi) > 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if h(lo) >= 0.0 || h(hi) <= 0.0 {
        return Err(Error::NoConvergence {
            iterations: n,
            last_change: f64::NAN,
        });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub rho: f64,
    pub c: f64,
    /// Root-mean-square residual of the log-log fit.
    pub rms: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - icept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icept, rms)
}

/// Fit `sum_{k<=n} k p_k ~ c n^rho` on about 60 log-spaced `n` in `[n_lo, n_hi]`.
pub fn fit_partial_mean_exponent(
    dist: &OffspringDistribution,
    n_lo: usize,
    n_hi: usize,
) -> Result<PowerFit> {
    if n_lo < 1 || n_hi < 2 * n_lo {
        return Err(Error::Config(format!("bad fit window [{n_lo}, {n_hi}]")));
    }
    let sums = dist.partial_mean_sums(n_hi);
    let points = 60;
    let (l0, l1) = ((n_lo as f64).ln(), (n_hi as f64).ln());
    let mut ns: Vec<usize> = (0..points)
        .map(|i| {
            (l0 + (l1 - l0) * i as f64 / (points - 1) as f64)
                .exp()
                .round() as usize
        })
        .collect();
    ns.dedup();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ns.iter().map(|&n| sums[n - 1].ln()).collect();
    let (rho, icept, rms) = least_squares(&xs, &ys);
    Ok(PowerFit {
        rho,
        c: icept.exp(),
        rms,
    })
}

/// Fit window for the partial-sum exponent.
pub fn partial_sum_window(dist: &OffspringDistribution) -> (usize, usize) {
    match dist.truncation() {
        Some(Truncation::At(n)) => (100, (n as usize / 10).max(200)),
        _ => (100, 100_000),
    }
}

/// Range of `j` for slopes at `t = 2^-j`. Truncation at `N` bends `f` back to
/// linear below `t ~ 1/N`, so the window stops where `p_K t^K N >= 1000`.
pub fn slope_window(dist: &OffspringDistribution) -> (i32, i32) {
    match dist.truncation() {
        Some(Truncation::At(n)) => {
            let k = dist.min_support() as f64;
            let pk = dist.mass(dist.min_support());
            let t = (1000.0 / (pk * n as f64)).powf(1.0 / k);
            let hi = (-t.log2()).floor() as i32;
            (4, hi.max(6))
        }
        _ => (10, 30),
    }
}

/// Log-log slopes of `f(t)` and `1 - f(1 - t)` over `t = 2^-j`, `j` in `window`.
pub fn endpoint_slopes(dist: &OffspringDistribution, window: (i32, i32)) -> (f64, f64) {
    let js: Vec<i32> = (window.0..=window.1).collect();
    let xs: Vec<f64> = js
        .iter()
        .map(|&j| -(j as f64) * std::f64::consts::LN_2)
        .collect();
    let at0: Vec<f64> = xs.iter().map(|&l| dist.ln_rc(dist.ln_g(l))).collect();
    let at1: Vec<f64> = xs.iter().map(|&l| dist.ln_g(dist.ln_rc(l))).collect();
    (least_squares(&xs, &at0).0, least_squares(&xs, &at1).0)
}

pub fn solve_case_c(dist: &OffspringDistribution) -> Result<ScalingRegime> {
    if !dist.has_infinite_mean() && !dist.is_power_law() {
        return Err(Error::AssumptionViolated(
            "partial mean sums do not grow like a power".into(),
        ));
    }
    let (lo, hi) = partial_sum_window(dist);
    let fit = fit_partial_mean_exponent(dist, lo, hi)?;
    if fit.rms > 0.05 || !(fit.rho > 0.0 && fit.rho < 1.0) {
        return Err(Error::AssumptionViolated(format!(
            "power fit rho = {}, rms residual = {}",
            fit.rho, fit.rms
        )));
    }
    let k_min = dist.min_support();
    let p_k = dist.mass(k_min);
    let kf = k_min as f64;
    let exponent = kf * (1.0 - fit.rho);
    if exponent >= 1.0 {
        return Err(Error::AssumptionViolated(format!(
            "K(1 - rho) = {exponent} is not below 1"
        )));
    }
    let base = fit.c * gamma(1.0 + fit.rho) / (1.0 - fit.rho);
    let c0 = base * p_k.powf(1.0 - fit.rho);
    let c1 = p_k * base.powf(kf);
    if (c0 - 1.0).abs() < 1e-12 && (c1 - 1.0).abs() < 1e-12 {
        return Err(Error::AssumptionViolated(
            "both log-scale constants equal 1".into(),
        ));
    }
    Ok(ScalingRegime::CaseC {
        k_min,
        p_k,
        rho: fit.rho,
        c: fit.c,
        exponent,
        c0,
        c1,
        fit_residual: fit.rms,
    })
}

/// Picks the regime for a fixed point from `f'(q)` (and the law's tail at the endpoints).
pub fn solve(
    dist: &OffspringDistribution,
    fp: &FixedPointRecord,
    grid: &[f64],
    precision: Precision,
) -> Result<ScalingRegime> {
    let endpoint = fp.q == 0.0 || fp.q == 1.0;
    if fp.stability == Stability::Stable {
        return Err(Error::Precondition(format!(
            "fixed point {} is stable",
            fp.q
        )));
    }
    if endpoint && (fp.xi.is_infinite() || dist.is_power_law()) {
        solve_case_c(dist)
    } else if (fp.xi - 1.0).abs() <= XI_ONE_TOL {
        solve_case_b(dist, fp)
    } else if fp.xi > 1.0 && fp.xi.is_finite() {
        solve_case_a(dist, fp, grid, DEFAULT_MAX_N, precision)
    } else {
        Err(Error::Precondition(format!(
            "no rescaled law at q = {}",
            fp.q
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRow {
    pub n: u32,
    pub at_zero: Vec<f64>,
    pub at_one: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseCVerification {
    pub exponent: f64,
    pub levels: Vec<f64>,
    pub samples: usize,
    pub accepted_zero: usize,
    pub accepted_one: usize,
    pub rows: Vec<QuantileRow>,
    /// `max_level |Q_{n+1} - Q_n|` for `n = 1..depth_n-1`.
    pub drift_zero: Vec<f64>,
    pub drift_one: Vec<f64>,
    pub min_value: f64,
}

impl CaseCVerification {
    pub fn drift_decreasing(drift: &[f64]) -> bool {
        drift.windows(2).all(|w| w[1] < w[0])
    }
}

fn quantiles(mut v: Vec<f64>, levels: &[f64]) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    levels
        .iter()
        .map(|&l| v[((l * n as f64).ceil() as usize).clamp(1, n) - 1])
        .collect()
}

fn drifts(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Quantiles of `-alpha^n log W_2n` given `W_2n <= q+` (and of
/// `-alpha^n log(1 - W_2n)` given `W_2n >= q-`) for `n = 1..=depth_n`,
/// with `W_2n = f^{-n}(U)` drawn exactly.
pub fn verify_case_c_scaling(
    dist: &OffspringDistribution,
    regime: &ScalingRegime,
    depth_n: u32,
    samples: usize,
    seed: u64,
) -> Result<CaseCVerification> {
    let ScalingRegime::CaseC {
        exponent, c0, c1, ..
    } = regime
    else {
        return Err(Error::Precondition(
            "regime is not the infinite-derivative case".into(),
        ));
    };
    if (c0 - 1.0).abs() < 1e-12 && (c1 - 1.0).abs() < 1e-12 {
        return Err(Error::Precondition(
            "both log-scale constants equal 1".into(),
        ));
    }
    if depth_n < 2 {
        return Err(Error::Config("need at least two depths".into()));
    }
    let set = find_fixed_points(dist, DEFAULT_TOL)?;
    let pts = set.points();
    let q_plus = pts.iter().find(|p| p.q == 0.0).map_or(1.0, |p| p.q_plus);
    let q_minus = pts.iter().find(|p| p.q == 1.0).map_or(0.0, |p| p.q_minus);
    let (zp, zm) = (
        q_plus.ln() - (-q_plus).ln_1p(),
        q_minus.ln() - (-q_minus).ln_1p(),
    );

    let paths = QuantileSampler::new(dist).sample_paths(samples, depth_n, seed);
    let zero: Vec<&Vec<f64>> = paths.iter().filter(|p| p[0] <= zp).collect();
    let one: Vec<&Vec<f64>> = paths.iter().filter(|p| p[0] >= zm).collect();
    let need = MIN_CONDITIONED;
    for acc in [zero.len(), one.len()] {
        if acc < need {
            return Err(Error::InsufficientConditionedSamples {
                accepted: acc,
                required: need,
            });
        }
    }
    let mut rows = Vec::new();
    let mut q0 = Vec::new();
    let mut q1 = Vec::new();
    let mut min_value = f64::INFINITY;
    for n in 1..=depth_n {
        let s = exponent.powi(n as i32);
        let y0: Vec<f64> = zero.iter().map(|p| s * softplus(-p[n as usize])).collect();
        let y1: Vec<f64> = one.iter().map(|p| s * softplus(p[n as usize])).collect();
        min_value = y0.iter().chain(&y1).copied().fold(min_value, f64::min);
        let a = quantiles(y0, &QUANTILE_LEVELS);
        let b = quantiles(y1, &QUANTILE_LEVELS);
        q0.push(a.clone());
        q1.push(b.clone());
        rows.push(QuantileRow {
            n,
            at_zero: a,
            at_one: b,
        });
    }
    Ok(CaseCVerification {
        exponent: *exponent,
        levels: QUANTILE_LEVELS.to_vec(),
        samples,
        accepted_zero: zero.len(),
        accepted_one: one.len(),
        rows,
        drift_zero: drifts(&q0),
        drift_one: drifts(&q1),
        min_value,
    })
}

#[cfg(test)]
mod tests;
