//! Fixed points of `f`, their stability, and the unscaled limit law of `W_2n`.

use crate::dist::OffspringDistribution;
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    UnstableLeft,
    UnstableRight,
    UnstableBoth,
}

impl Stability {
    pub fn is_unstable(self) -> bool {
        self != Stability::Stable
    }

    fn from_sides(left: bool, right: bool) -> Self {
        match (left, right) {
            (false, false) => Stability::Stable,
            (true, false) => Stability::UnstableLeft,
            (false, true) => Stability::UnstableRight,
            (true, true) => Stability::UnstableBoth,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointRecord {
    pub q: f64,
    /// `f'(q)`; infinite when the derivative diverges.
    pub xi: f64,
    /// First `r >= 2` with a non-vanishing `f^(r)(q)`.
    pub order_k: Option<usize>,
    pub stability: Stability,
    pub q_minus: f64,
    pub q_plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FixedPointSet {
    /// `f` is the identity: every point is fixed.
    Identity,
    Points {
        points: Vec<FixedPointRecord>,
    },
}

impl FixedPointSet {
    pub fn points(&self) -> &[FixedPointRecord] {
        match self {
            FixedPointSet::Identity => &[],
            FixedPointSet::Points { points } => points,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, FixedPointSet::Identity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LimitLaw {
    IdentityUniform,
    Discrete { atoms: Vec<Atom> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointCriterion {
    NoEndpointAtoms,
    EndpointAtoms,
    BoundaryCase,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub grid: usize,
    pub tol: f64,
    /// Local minima of `|f(x) - x|` below this are treated as possible tangencies.
    pub touch_threshold: f64,
    pub jet_order: usize,
    /// Taylor coefficients below this count as vanishing when picking `order_k`.
    pub zero_coeff: f64,
    pub identity_grid: usize,
    pub identity_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid: 10_000,
            tol: 1e-11,
            touch_threshold: 1e-7,
            jet_order: 12,
            zero_coeff: 1e-9,
            identity_grid: 1001,
            identity_tol: 1e-10,
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-11;

pub fn is_identity(dist: &OffspringDistribution, grid_size: usize, tol: f64) -> bool {
    let n = grid_size.max(100) - 1;
    (0..=n).all(|i| {
        let x = i as f64 / n as f64;
        (dist.f(x) - x).abs() <= tol
    })
}

/// `(x_i, f(x_i) - x_i)` on `grid_size + 1` equally spaced points.
pub fn curve(dist: &OffspringDistribution, grid_size: usize) -> Vec<(f64, f64)> {
    let n = grid_size.max(1);
    (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            (x, dist.f(x) - x)
        })
        .collect()
}

fn grid_values(dist: &OffspringDistribution, n: usize) -> Vec<f64> {
    let eval = |i: usize| {
        let x = i as f64 / n as f64;
        dist.f(x) - x
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..=n).into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..=n).map(eval).collect()
    }
}

/// Root of a sign-changing `h` on `[lo, hi]` refined to adjacent floats.
pub(crate) fn bisect(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut hlo = h(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return mid;
        }
        if (hm > 0.0) == (hlo > 0.0) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    if h(lo).abs() <= h(hi).abs() {
        lo
    } else {
        hi
    }
}

fn golden_min(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - inv_phi * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + inv_phi * (b - a);
            hd = h(d);
        }
    }
    0.5 * (a + b)
}

/// Fixed point of `R` (always exists and is unique; `f` fixes it too).
pub fn fixed_point_of_r(dist: &OffspringDistribution) -> f64 {
    bisect(|x| dist.r(x) - x, 0.0, 1.0)
}

fn raw_roots(dist: &OffspringDistribution, opts: &ScanOptions) -> Result<Vec<f64>> {
    let n = opts.grid.max(10);
    let d = grid_values(dist, n);
    let x = |i: usize| i as f64 / n as f64;
    let h = |t: f64| dist.f(t) - t;
    let mut roots = vec![0.0, 1.0];
    for i in 1..=n {
        if i < n && d[i] == 0.0 {
            roots.push(x(i));
        }
        let (a, b) = (d[i - 1], d[i]);
        if a != 0.0 && b != 0.0 && (a > 0.0) != (b > 0.0) {
            roots.push(bisect(h, x(i - 1), x(i)));
        }
    }
    // touchpoints: same-sign local minima of |f - x|
    for i in 2..n - 1 {
        let (a, b, c) = (d[i - 1], d[i], d[i + 1]);
        let same = (a > 0.0 && b > 0.0 && c > 0.0) || (a < 0.0 && b < 0.0 && c < 0.0);
        if !same || b.abs() > a.abs() || b.abs() > c.abs() || b.abs() >= opts.touch_threshold {
            continue;
        }
        let sigma = b.signum();
        let (lo, hi) = (x(i - 1), x(i + 1));
        let xm = golden_min(|t| sigma * h(t), lo, hi);
        let m = sigma * h(xm);
        if m < 0.0 {
            roots.push(bisect(h, lo, xm));
            roots.push(bisect(h, xm, hi));
        } else if m <= opts.tol {
            roots.push(xm);
        } else if m <= opts.touch_threshold {
            return Err(Error::UnresolvedTouchpoint { x: xm, residual: m });
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);

    // f - x is flat near a pitchfork at the fixed point of R; snap the
    // closest root there onto it.
    let qr = fixed_point_of_r(dist);
    if h(qr).abs() <= opts.tol {
        if let Some((idx, dist_to)) = roots
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - qr).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        {
            if dist_to <= 1e-5 {
                roots[idx] = qr;
            }
        }
    }
    Ok(roots)
}

/// Classification and derivative data for a sorted list of roots.
fn classify(
    dist: &OffspringDistribution,
    roots: &[f64],
    opts: &ScanOptions,
) -> Vec<FixedPointRecord> {
    let h = |t: f64| dist.f(t) - t;
    let base_delta = 10.0 * opts.tol.sqrt();
    let noise = 1e-14;
    let m = roots.len();
    let mut sides = Vec::with_capacity(m);
    let mut jets = Vec::with_capacity(m);
    for (i, &q) in roots.iter().enumerate() {
        let gap_l = if i > 0 {
            q - roots[i - 1]
        } else {
            f64::INFINITY
        };
        let gap_r = if i + 1 < m {
            roots[i + 1] - q
        } else {
            f64::INFINITY
        };
        let delta = base_delta.min(0.5 * gap_l).min(0.5 * gap_r);
        let jet = dist.jet_f(q, opts.jet_order).ok();
        let (xi, order_k, ck) = match &jet {
            Some(j) => {
                let xi = j.coeff(1);
                let k = (2..=j.order()).find(|&r| j.coeff(r).abs() > opts.zero_coeff);
                (xi, k, k.map(|r| j.coeff(r)))
            }
            None => (f64::INFINITY, None, None),
        };
        // sign test first; fall back to the Taylor data when the sign is lost in rounding
        let side = |s: f64| -> bool {
            let mut v = h(q + s * delta);
            if v.abs() <= noise {
                v = if (xi - 1.0).abs() > 1e-9 {
                    (xi - 1.0) * s
                } else {
                    match (order_k, ck) {
                        (Some(k), Some(c)) => c * s.powi(k as i32),
                        _ => 0.0,
                    }
                };
            }
            if s > 0.0 {
                v > 0.0
            } else {
                v < 0.0
            }
        };
        let left = i > 0 && q > 0.0 && side(-1.0);
        let right = i + 1 < m && q < 1.0 && side(1.0);
        sides.push((left, right));
        jets.push((xi, order_k));
    }
    roots
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let (left, right) = sides[i];
            FixedPointRecord {
                q,
                xi: jets[i].0,
                order_k: jets[i].1,
                stability: Stability::from_sides(left, right),
                q_minus: if left { roots[i - 1] } else { q },
                q_plus: if right { roots[i + 1] } else { q },
            }
        })
        .collect()
}

pub fn find_fixed_points(dist: &OffspringDistribution, tol: f64) -> Result<FixedPointSet> {
    find_fixed_points_with(
        dist,
        &ScanOptions {
            tol,
            ..ScanOptions::default()
        },
    )
}

pub fn find_fixed_points_with(
    dist: &OffspringDistribution,
    opts: &ScanOptions,
) -> Result<FixedPointSet> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if is_identity(dist, opts.identity_grid, opts.identity_tol) {
        return Ok(FixedPointSet::Identity);
    }
    let roots = raw_roots(dist, opts)?;
    Ok(FixedPointSet::Points {
        points: classify(dist, &roots, opts),
    })
}

pub fn limit_law_from(set: &FixedPointSet) -> LimitLaw {
    match set {
        FixedPointSet::Identity => LimitLaw::IdentityUniform,
        FixedPointSet::Points { points } => LimitLaw::Discrete {
            atoms: points
                .iter()
                .filter(|p| p.stability.is_unstable())
                .map(|p| Atom {
                    location: p.q,
                    mass: p.q_plus - p.q_minus,
                })
                .collect(),
        },
    }
}

pub fn limit_law(dist: &OffspringDistribution) -> Result<LimitLaw> {
    Ok(limit_law_from(&find_fixed_points(dist, DEFAULT_TOL)?))
}

pub fn endpoint_atom_criterion(dist: &OffspringDistribution) -> EndpointCriterion {
    let p1 = dist.p1();
    if dist.has_infinite_mean() {
        return if p1 > 0.0 {
            EndpointCriterion::EndpointAtoms
        } else {
            EndpointCriterion::BoundaryCase
        };
    }
    let v = p1 * dist.mean();
    if (v - 1.0).abs() <= 1e-12 {
        EndpointCriterion::BoundaryCase
    } else if v < 1.0 {
        EndpointCriterion::NoEndpointAtoms
    } else {
        EndpointCriterion::EndpointAtoms
    }
}

/// One row of a parameter sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub param: f64,
    pub p1_mu: f64,
    pub criterion: EndpointCriterion,
    /// `None` when the scan hit an unresolved touchpoint.
    pub fixed_points: Option<usize>,
    pub unstable_interior: Option<usize>,
    pub identity: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transition {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq)]
struct Signature {
    criterion: EndpointCriterion,
    count: Option<usize>,
    identity: bool,
}

impl Signature {
    fn describe(&self) -> String {
        let c = match self.criterion {
            EndpointCriterion::NoEndpointAtoms => "p1mu<1",
            EndpointCriterion::EndpointAtoms => "p1mu>1",
            EndpointCriterion::BoundaryCase => "p1mu=1",
        };
        match (self.identity, self.count) {
            (true, _) => format!("identity,{c}"),
            (false, Some(n)) => format!("{n} fixed points,{c}"),
            (false, None) => format!("unresolved,{c}"),
        }
    }
}

fn scan_row(dist: &OffspringDistribution, param: f64, opts: &ScanOptions) -> ScanRow {
    let fp = find_fixed_points_with(dist, opts);
    let (fixed_points, unstable_interior, identity) = match &fp {
        Ok(FixedPointSet::Identity) => (None, None, true),
        Ok(FixedPointSet::Points { points }) => (
            Some(points.len()),
            Some(
                points
                    .iter()
                    .filter(|p| p.q > 0.0 && p.q < 1.0 && p.stability.is_unstable())
                    .count(),
            ),
            false,
        ),
        Err(_) => (None, None, false),
    };
    ScanRow {
        param,
        p1_mu: dist.p1() * dist.mean(),
        criterion: endpoint_atom_criterion(dist),
        fixed_points,
        unstable_interior,
        identity,
    }
}

fn signature(row: &ScanRow) -> Signature {
    Signature {
        criterion: row.criterion,
        count: row.fixed_points,
        identity: row.identity,
    }
}

/// Sweeps a one-parameter family and locates every change in the fixed-point
/// structure or endpoint criterion by bisection on the parameter.
pub fn scan_family<F>(family: F, params: &[f64], opts: &ScanOptions) -> Result<ScanReport>
where
    F: Fn(f64) -> Result<OffspringDistribution>,
{
    let mut rows = Vec::with_capacity(params.len());
    for &p in params {
        rows.push(scan_row(&family(p)?, p, opts));
    }
    let mut transitions = Vec::new();
    for w in rows.windows(2) {
        let (sa, sb) = (signature(&w[0]), signature(&w[1]));
        if sa == sb {
            continue;
        }
        // several changes may hide between two rows; peel them off left to right
        let mut cur_lo = w[0].param;
        let mut cur = sa;
        for _ in 0..8 {
            let (mut lo, mut hi) = (cur_lo, w[1].param);
            let mut sig_hi = sb.clone();
            for _ in 0..48 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let sm = signature(&scan_row(&family(mid)?, mid, opts));
                if sm == cur {
                    lo = mid;
                } else {
                    hi = mid;
                    sig_hi = sm;
                }
            }
            transitions.push(Transition {
                lo,
                hi,
                estimate: 0.5 * (lo + hi),
                from: cur.describe(),
                to: sig_hi.describe(),
            });
            if sig_hi == sb {
                break;
            }
            cur_lo = hi;
            cur = sig_hi;
        }
    }
    Ok(ScanReport { rows, transitions })
}
