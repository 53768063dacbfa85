use crate::expr;
use crate::output::{open, write_csv, write_json, Meta};
use crate::{Common, Format, PrecisionArg};
use anyhow::Result;
use gw_minimax::analysis::{
    curve as f_curve, endpoint_atom_criterion, find_fixed_points_with, limit_law_from, scan_family,
    ScanOptions,
};
use gw_minimax::endogeny::{decide_endogeny, h_iterates, EndogenyReport};
use gw_minimax::mcsim::{
    analytic_cdf, ks_statistic, simulate as run_sim, simulate_bivariate, Boundary, EmpiricalCdf,
    KsReport, SimConfig,
};
use gw_minimax::scaling::{
    case_a_grid, endpoint_slopes, slope_window, solve, verify_case_c_scaling, CaseCVerification,
    Precision,
};
use gw_minimax::{
    DistSpec, EndpointCriterion, Error, FixedPointRecord, FixedPointSet, LimitLaw,
    OffspringDistribution, ScalingRegime, Stability,
};
use serde::Serialize;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

/// Invalid command-line input that is not a library error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TOUCHPOINT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_BUDGET: u8 = 5;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::UnresolvedTouchpoint { .. }) => EXIT_TOUCHPOINT,
        Some(
            Error::NoConvergence { .. }
            | Error::AssumptionViolated(_)
            | Error::PrecisionLoss { .. }
            | Error::DerivativeOrderNotFound { .. }
            | Error::InsufficientConditionedSamples { .. }
            | Error::InfiniteDerivative { .. },
        ) => EXIT_NUMERIC,
        Some(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        Some(_) => EXIT_CONFIG,
        None => 1,
    }
}

/// Text, inline JSON, or a path to a file holding either.
pub fn load_dist(src: &str) -> Result<OffspringDistribution> {
    let path = Path::new(src);
    let text = if !src.contains(':') && !src.trim_start().starts_with('{') && path.is_file() {
        std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {src}: {e}")))?
    } else {
        src.to_string()
    };
    Ok(OffspringDistribution::new(DistSpec::parse(&text)?)?)
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn criterion_text(c: EndpointCriterion) -> &'static str {
    match c {
        EndpointCriterion::NoEndpointAtoms => "p1*mu < 1: 0 and 1 are stable",
        EndpointCriterion::EndpointAtoms => "p1*mu > 1: atoms at 0 and 1",
        EndpointCriterion::BoundaryCase => "p1*mu = 1: boundary case",
    }
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::UnstableLeft => "unstable_left",
        Stability::UnstableRight => "unstable_right",
        Stability::UnstableBoth => "unstable_both",
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    mean: Option<f64>,
    p1_mu: Option<f64>,
    endpoint_criterion: EndpointCriterion,
    fixed_points: FixedPointSet,
    limit_law: LimitLaw,
}

pub fn analyze(common: &Common, tol: f64, grid: usize) -> Result<ExitCode> {
    let d = load_dist(&common.dist)?;
    let opts = ScanOptions {
        tol,
        grid,
        ..ScanOptions::default()
    };
    let set = find_fixed_points_with(&d, &opts)?;
    let mean = d.mean();
    let rep = AnalyzeReport {
        mean: mean.is_finite().then_some(mean),
        p1_mu: mean.is_finite().then(|| d.p1() * mean),
        endpoint_criterion: endpoint_atom_criterion(&d),
        limit_law: limit_law_from(&set),
        fixed_points: set,
    };
    let meta = Meta::new("analyze", Some(&d));
    let mut out = open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Text) {
        Format::Json => write_json(&mut out, &meta, &rep)?,
        Format::Text => {
            writeln!(out, "distribution  {}", d.spec())?;
            match rep.mean {
                Some(m) => writeln!(out, "mean          {m}")?,
                None => writeln!(out, "mean          infinite")?,
            }
            writeln!(
                out,
                "endpoints     {}",
                criterion_text(rep.endpoint_criterion)
            )?;
            match &rep.fixed_points {
                FixedPointSet::Identity => writeln!(
                    out,
                    "f is the identity: every x is fixed, W_2n ~ Uniform(0,1)"
                )?,
                FixedPointSet::Points { points } => {
                    writeln!(out, "fixed points")?;
                    writeln!(
                        out,
                        "  {:<20} {:<20} {:<5} {:<15} {:<20} {:<20}",
                        "q", "xi", "k", "stability", "q-", "q+"
                    )?;
                    for p in points {
                        writeln!(
                            out,
                            "  {:<20} {:<20} {:<5} {:<15} {:<20} {:<20}",
                            format!("{:.15}", p.q),
                            if p.xi.is_finite() {
                                format!("{:.15}", p.xi)
                            } else {
                                "inf".into()
                            },
                            p.order_k.map_or("-".into(), |k| k.to_string()),
                            stability_name(p.stability),
                            format!("{:.15}", p.q_minus),
                            format!("{:.15}", p.q_plus),
                        )?;
                    }
                }
            }
            if let LimitLaw::Discrete { atoms } = &rep.limit_law {
                writeln!(out, "limit law")?;
                for a in atoms {
                    writeln!(out, "  atom at {:.15} with mass {:.15}", a.location, a.mass)?;
                }
            }
        }
        Format::Csv => return Err(config("analyze supports text and json output")),
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn curve(common: &Common, grid: usize) -> Result<ExitCode> {
    if grid == 0 {
        return Err(config("--grid must be positive"));
    }
    let d = load_dist(&common.dist)?;
    let pts = f_curve(&d, grid);
    let meta = Meta::new("curve", Some(&d));
    let mut out = open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(
            &mut out,
            &meta,
            &[],
            &["x", "f_minus_x"],
            pts.iter().map(|(x, y)| vec![num(*x), num(*y)]),
        )?,
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                points: &'a [(f64, f64)],
            }
            write_json(&mut out, &meta, &Body { points: &pts })?
        }
        Format::Text => return Err(config("curve supports csv and json output")),
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn family_dist(template: &str, p: f64) -> gw_minimax::Result<OffspringDistribution> {
    let text = expr::instantiate(template, p)
        .map_err(|e| Error::InvalidDistribution(format!("family template: {e}")))?;
    OffspringDistribution::new(DistSpec::parse(&text)?)
}

fn describe_points(set: &gw_minimax::Result<FixedPointSet>) -> String {
    match set {
        Ok(FixedPointSet::Identity) => "identity".into(),
        Ok(FixedPointSet::Points { points }) => points
            .iter()
            .map(|p| format!("{}:{}", p.q, stability_name(p.stability)))
            .collect::<Vec<_>>()
            .join(";"),
        Err(e) => format!("error: {e}"),
    }
}

pub fn scan(
    family: &str,
    from: f64,
    to: f64,
    step: f64,
    grid: usize,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<ExitCode> {
    if step.is_nan() || step <= 0.0 || from.is_nan() || to.is_nan() || to < from {
        return Err(config("need step > 0 and to >= from"));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(config("too many scan points"));
    }
    let params: Vec<f64> = (0..=n)
        .map(|i| ((from + step * i as f64) * 1e12).round() / 1e12)
        .collect();
    // fail early on a template that does not produce a valid law
    family_dist(family, params[0])?;
    let opts = ScanOptions {
        grid,
        ..ScanOptions::default()
    };
    let rep = scan_family(|p| family_dist(family, p), &params, &opts)?;
    let points: Vec<String> = params
        .iter()
        .map(|&p| {
            describe_points(&family_dist(family, p).and_then(|d| find_fixed_points_with(&d, &opts)))
        })
        .collect();
    let meta = Meta::new("scan", None);
    let mut w = open(out)?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let trans: Vec<String> = rep
                .transitions
                .iter()
                .map(|t| {
                    format!(
                        "# transition: p in [{}, {}], estimate {}, {} -> {}",
                        t.lo, t.hi, t.estimate, t.from, t.to
                    )
                })
                .collect();
            let rows = rep.rows.iter().zip(&points).map(|(r, pts)| {
                vec![
                    num(r.param),
                    if r.p1_mu.is_finite() {
                        num(r.p1_mu)
                    } else {
                        "inf".into()
                    },
                    snake(&r.criterion),
                    r.fixed_points.map_or("".into(), |c| c.to_string()),
                    r.unstable_interior.map_or("".into(), |c| c.to_string()),
                    r.identity.to_string(),
                    pts.clone(),
                ]
            });
            write_csv(
                &mut w,
                &meta,
                &trans,
                &[
                    "param",
                    "p1_mu",
                    "criterion",
                    "fixed_points",
                    "unstable_interior",
                    "identity",
                    "points",
                ],
                rows,
            )?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                family: &'a str,
                report: &'a gw_minimax::analysis::ScanReport,
                points: &'a [String],
            }
            write_json(
                &mut w,
                &meta,
                &Body {
                    family,
                    report: &rep,
                    points: &points,
                },
            )?
        }
        Format::Text => return Err(config("scan supports csv and json output")),
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub struct SimArgs {
    pub depth: u32,
    pub samples: usize,
    pub seed: u64,
    pub boundary: String,
    pub budget: u64,
    pub pruned: bool,
    pub grid: usize,
}

fn parse_boundary(s: &str) -> Result<Boundary> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let x = || -> Result<f64> {
        arg.trim().parse().map_err(|_| {
            config(format!(
                "boundary '{s}' needs a parameter, e.g. bernoulli:0.5"
            ))
        })
    };
    match kind.trim() {
        "uniform" => Ok(Boundary::Uniform01),
        "bernoulli" => Ok(Boundary::Bernoulli { x: x()? }),
        "bivariate" => Ok(Boundary::BivariateBernoulli { x: x()? }),
        other => Err(config(format!("unknown boundary '{other}'"))),
    }
}

#[derive(Serialize)]
struct Estimate {
    estimate: f64,
    std_error: f64,
    predicted: Option<f64>,
}

#[derive(Serialize)]
struct SimReport {
    depth: u32,
    boundary: Boundary,
    samples: usize,
    accepted: usize,
    budget_exceeded: usize,
    node_budget: u64,
    nodes: u64,
    pruned: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks: Option<KsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cdf: Option<Vec<(f64, f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_root_zero: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<[[usize; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_root_one_zero: Option<Estimate>,
}

pub fn simulate(common: &Common, a: SimArgs) -> Result<ExitCode> {
    let d = load_dist(&common.dist)?;
    let boundary = parse_boundary(&a.boundary)?;
    let mut cfg = SimConfig::new(d.clone(), a.depth, a.samples, a.seed).with_boundary(boundary);
    cfg.node_budget = a.budget;
    cfg.pruned = a.pruned;
    cfg.validate().map_err(|e| config(e.to_string()))?;
    let mut rep = SimReport {
        depth: a.depth,
        boundary,
        samples: a.samples,
        accepted: 0,
        budget_exceeded: 0,
        node_budget: a.budget,
        nodes: 0,
        pruned: a.pruned,
        ks: None,
        cdf: None,
        p_root_zero: None,
        counts: None,
        p_root_one_zero: None,
    };
    match boundary {
        Boundary::BivariateBernoulli { x } => {
            let run = simulate_bivariate(&cfg)?;
            rep.accepted = run.accepted();
            rep.budget_exceeded = run.budget_exceeded;
            rep.nodes = run.nodes;
            rep.counts = Some(run.counts);
            if rep.accepted > 0 {
                let (p, se) = run.proportion(1, 0);
                let predicted = if a.depth % 2 == 0 && (d.f(x) - x).abs() <= 1e-9 {
                    h_iterates(&d, x, x * (1.0 - x), a.depth as usize / 2)
                        .ok()
                        .and_then(|v| v.last().copied())
                } else {
                    None
                };
                rep.p_root_one_zero = Some(Estimate {
                    estimate: p,
                    std_error: se,
                    predicted,
                });
            }
        }
        _ => {
            let run = run_sim(&cfg)?;
            rep.accepted = run.values.len();
            rep.budget_exceeded = run.budget_exceeded;
            rep.nodes = run.nodes;
            let n = run.values.len();
            if let Boundary::Bernoulli { x } = boundary {
                if n > 0 {
                    let p = run.values.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
                    rep.p_root_zero = Some(Estimate {
                        estimate: p,
                        std_error: (p * (1.0 - p) / n as f64).sqrt(),
                        predicted: Some(analytic_cdf(&d, a.depth, x)),
                    });
                }
            } else if n > 0 {
                let emp = EmpiricalCdf::new(run.values)?;
                if n >= 100 {
                    rep.ks = Some(ks_statistic(&emp, |x| analytic_cdf(&d, a.depth, x))?);
                }
                let g = a.grid.max(1);
                rep.cdf = Some(
                    (0..=g)
                        .map(|i| {
                            let x = i as f64 / g as f64;
                            (x, emp.eval(x), analytic_cdf(&d, a.depth, x))
                        })
                        .collect(),
                );
            }
        }
    }
    let mut meta = Meta::new("simulate", Some(&d));
    meta.seed = Some(a.seed);
    let mut out = open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&mut out, &meta, &rep)?,
        Format::Csv => {
            let Some(cdf) = &rep.cdf else {
                return Err(config(
                    "csv output is the CDF table; it needs uniform leaves",
                ));
            };
            let mut comments = vec![format!(
                "# accepted: {}, budget_exceeded: {}",
                rep.accepted, rep.budget_exceeded
            )];
            if let Some(ks) = &rep.ks {
                comments.push(format!(
                    "# ks: statistic {}, threshold {}, passed {}",
                    ks.statistic, ks.threshold, ks.passed
                ));
            }
            write_csv(
                &mut out,
                &meta,
                &comments,
                &["x", "empirical", "analytic"],
                cdf.iter().map(|(x, e, f)| vec![num(*x), num(*e), num(*f)]),
            )?
        }
        Format::Text => {
            writeln!(out, "distribution     {}", d.spec())?;
            writeln!(out, "depth            {}", a.depth)?;
            writeln!(out, "accepted         {} of {}", rep.accepted, a.samples)?;
            writeln!(out, "budget exceeded  {}", rep.budget_exceeded)?;
            if let Some(ks) = &rep.ks {
                writeln!(
                    out,
                    "ks               D = {:.6} (99% bound {:.6}) {}",
                    ks.statistic,
                    ks.threshold,
                    if ks.passed { "pass" } else { "fail" }
                )?;
            }
            for (label, e) in [
                ("P(root = 0)", &rep.p_root_zero),
                ("P(root = (1,0))", &rep.p_root_one_zero),
            ] {
                if let Some(e) = e {
                    write!(out, "{label:<16} {:.6} +- {:.6}", e.estimate, e.std_error)?;
                    match e.predicted {
                        Some(p) => writeln!(out, " (predicted {p:.6})")?,
                        None => writeln!(out)?,
                    }
                }
            }
        }
    }
    out.flush()?;
    if rep.budget_exceeded * 2 > a.samples {
        eprintln!(
            "error: {} of {} samples exceeded the node budget",
            rep.budget_exceeded, a.samples
        );
        return Ok(ExitCode::from(EXIT_BUDGET));
    }
    Ok(ExitCode::SUCCESS)
}

fn select_point(set: &FixedPointSet, at: Option<f64>) -> Result<FixedPointRecord> {
    let pts = set.points();
    if pts.is_empty() {
        return Err(
            Error::Precondition("f is the identity; there are no atoms to rescale".into()).into(),
        );
    }
    let chosen = match at {
        Some(x) => pts
            .iter()
            .min_by(|a, b| (a.q - x).abs().partial_cmp(&(b.q - x).abs()).unwrap()),
        None => pts
            .iter()
            .find(|p| p.stability.is_unstable() && p.q > 0.0 && p.q < 1.0)
            .or_else(|| pts.iter().find(|p| p.stability.is_unstable())),
    };
    chosen
        .cloned()
        .ok_or_else(|| Error::Precondition("no unstable fixed point".into()).into())
}

#[derive(Serialize)]
struct ScalingReport {
    fixed_point: FixedPointRecord,
    regime: ScalingRegime,
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoint_slopes: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<CaseCVerification>,
}

pub fn scaling(
    common: &Common,
    at: Option<f64>,
    grid: usize,
    precision: PrecisionArg,
    depth: u32,
    samples: usize,
    seed: u64,
) -> Result<ExitCode> {
    let d = load_dist(&common.dist)?;
    let precision = match precision {
        PrecisionArg::Double => Precision::Double,
        PrecisionArg::Extended => Precision::Extended,
    };
    let set = find_fixed_points_with(&d, &ScanOptions::default())?;
    let fp = select_point(&set, at)?;
    let regime = solve(&d, &fp, &case_a_grid(grid), precision)?;
    let mut rep = ScalingReport {
        fixed_point: fp,
        regime,
        endpoint_slopes: None,
        verification: None,
    };
    if matches!(rep.regime, ScalingRegime::CaseC { .. }) {
        rep.endpoint_slopes = Some(endpoint_slopes(&d, slope_window(&d)));
        if depth > 0 {
            rep.verification = Some(verify_case_c_scaling(
                &d,
                &rep.regime,
                depth,
                samples,
                seed,
            )?);
        }
    }
    let mut meta = Meta::new("scaling", Some(&d));
    meta.precision = match precision {
        Precision::Double => "double".into(),
        Precision::Extended => "extended".into(),
    };
    if rep.verification.is_some() {
        meta.seed = Some(seed);
    }
    let mut out = open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&mut out, &meta, &rep)?,
        Format::Csv => match (&rep.regime, &rep.verification) {
            (ScalingRegime::CaseA { table, xi, .. }, _) => write_csv(
                &mut out,
                &meta,
                &[format!("# q: {}, xi: {}", rep.fixed_point.q, xi)],
                &["x", "F_V"],
                table.iter().map(|(x, v)| vec![num(*x), num(*v)]),
            )?,
            (ScalingRegime::CaseC { exponent, .. }, Some(v)) => {
                let mut header = vec!["n".to_string()];
                for side in ["zero", "one"] {
                    for l in &v.levels {
                        header.push(format!("{side}_q{l}"));
                    }
                }
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                write_csv(
                    &mut out,
                    &meta,
                    &[format!(
                        "# exponent: {exponent}, accepted at 0: {}, accepted at 1: {}",
                        v.accepted_zero, v.accepted_one
                    )],
                    &header,
                    v.rows.iter().map(|r| {
                        std::iter::once(r.n.to_string())
                            .chain(r.at_zero.iter().chain(&r.at_one).map(|x| num(*x)))
                            .collect()
                    }),
                )?
            }
            _ => {
                return Err(config(
                    "csv output needs the continuous regime or --depth for the log-scale check",
                ))
            }
        },
        Format::Text => {
            let fp = &rep.fixed_point;
            writeln!(out, "distribution  {}", d.spec())?;
            writeln!(
                out,
                "fixed point   q = {} ({})",
                fp.q,
                stability_name(fp.stability)
            )?;
            match &rep.regime {
                ScalingRegime::CaseA {
                    xi,
                    q_tilde,
                    max_residual,
                    table,
                    ..
                } => {
                    writeln!(out, "regime        continuous limit, xi = {xi}")?;
                    writeln!(out, "F_V(0)        {q_tilde}")?;
                    writeln!(
                        out,
                        "grid points   {} (max residual {max_residual:.2e})",
                        table.len()
                    )?;
                }
                ScalingRegime::CaseB {
                    k,
                    a,
                    mass_plus,
                    mass_minus,
                    ..
                } => {
                    writeln!(out, "regime        xi = 1, order k = {k}")?;
                    writeln!(
                        out,
                        "atoms         +{a} (mass {mass_plus}), -{a} (mass {mass_minus})"
                    )?;
                }
                ScalingRegime::CaseC {
                    rho,
                    exponent,
                    c0,
                    c1,
                    ..
                } => {
                    writeln!(out, "regime        xi = inf, rho = {rho}")?;
                    writeln!(out, "exponent      K(1-rho) = {exponent}")?;
                    writeln!(out, "constants     C0 = {c0}, C1 = {c1}")?;
                    if let Some((s0, s1)) = rep.endpoint_slopes {
                        writeln!(out, "slopes        {s0} at 0, {s1} at 1")?;
                    }
                    if let Some(v) = &rep.verification {
                        writeln!(out, "drift at 0    {:?}", v.drift_zero)?;
                        writeln!(out, "drift at 1    {:?}", v.drift_one)?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EndogenyCheck {
    depth: u32,
    samples: usize,
    estimate: f64,
    std_error: f64,
    predicted: f64,
}

#[derive(Serialize)]
struct EndogenyEntry {
    report: EndogenyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<EndogenyCheck>,
}

pub fn endogeny(
    common: &Common,
    x: Option<f64>,
    depth: u32,
    samples: usize,
    seed: u64,
) -> Result<ExitCode> {
    let d = load_dist(&common.dist)?;
    if depth % 2 == 1 {
        return Err(config("--depth must be even"));
    }
    let xs: Vec<f64> = match x {
        Some(x) => vec![x],
        None => {
            let set = find_fixed_points_with(&d, &ScanOptions::default())?;
            if set.is_identity() {
                return Err(config("every x is fixed for this law; pass --x"));
            }
            set.points()
                .iter()
                .map(|p| p.q)
                .filter(|&q| q > 0.0 && q < 1.0)
                .collect()
        }
    };
    let mut entries = Vec::new();
    for x in xs {
        let report = decide_endogeny(&d, x)?;
        let monte_carlo = if depth > 0 {
            let cfg = SimConfig::new(d.clone(), depth, samples, seed)
                .with_boundary(Boundary::BivariateBernoulli { x });
            let run = simulate_bivariate(&cfg)?;
            let (p, se) = run.proportion(1, 0);
            let h = h_iterates(&d, x, x * (1.0 - x), depth as usize / 2)?;
            Some(EndogenyCheck {
                depth,
                samples,
                estimate: p,
                std_error: se,
                predicted: *h.last().unwrap(),
            })
        } else {
            None
        };
        entries.push(EndogenyEntry {
            report,
            monte_carlo,
        });
    }
    let mut meta = Meta::new("endogeny", Some(&d));
    if depth > 0 {
        meta.seed = Some(seed);
    }
    let mut out = open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Text) {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                points: &'a [EndogenyEntry],
            }
            write_json(&mut out, &meta, &Body { points: &entries })?
        }
        Format::Text => {
            writeln!(out, "distribution  {}", d.spec())?;
            if entries.is_empty() {
                writeln!(out, "no interior fixed points")?;
            }
            for e in &entries {
                let r = &e.report;
                writeln!(
                    out,
                    "x = {}  f'(x) = {}  {:?}  b* = {}",
                    r.x, r.f_prime, r.verdict, r.b_star
                )?;
                if let Some(m) = &e.monte_carlo {
                    writeln!(
                        out,
                        "  depth {}: P(root = (1,0)) = {:.6} +- {:.6}, h^n(x(1-x)) = {:.6}",
                        m.depth, m.estimate, m.std_error, m.predicted
                    )?;
                }
            }
        }
        Format::Csv => {
            write_csv(
                &mut out,
                &meta,
                &[],
                &["x", "f_prime", "verdict", "b_star"],
                entries.iter().map(|e| {
                    vec![
                        num(e.report.x),
                        num(e.report.f_prime),
                        snake(&e.report.verdict),
                        num(e.report.b_star),
                    ]
                }),
            )?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
