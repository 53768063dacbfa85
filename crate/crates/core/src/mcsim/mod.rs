//! Depth-first Monte Carlo of truncated minimax trees.
//!
//! Sample `i` of a run draws from its own ChaCha8 stream keyed by `(seed, i)`,
//! so results are identical for any thread count or chunking.

mod ks;
mod offspring;
mod quantile;

pub use ks::{ks_statistic, ks_two_sample, EmpiricalCdf, KsReport};
pub use offspring::OffspringSampler;
pub use quantile::QuantileSampler;

use crate::dist::OffspringDistribution;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Uniform01,
    /// Leaves are 1 with probability `1 - x`.
    Bernoulli {
        x: f64,
    },
    /// Pairs of independent Bernoulli(1 - x) leaves on one shared tree.
    BivariateBernoulli {
        x: f64,
    },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dist: OffspringDistribution,
    pub depth: u32,
    pub boundary: Boundary,
    pub samples: usize,
    pub seed: u64,
    pub node_budget: u64,
    /// Alpha-beta cutoffs; consumes fewer draws, so streams differ from the plain mode.
    pub pruned: bool,
}

impl SimConfig {
    pub fn new(dist: OffspringDistribution, depth: u32, samples: usize, seed: u64) -> Self {
        Self {
            dist,
            depth,
            boundary: Boundary::Uniform01,
            samples,
            seed,
            node_budget: DEFAULT_NODE_BUDGET,
            pruned: false,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.node_budget < u64::from(self.depth).max(1) {
            return Err(Error::Config(
                "node budget must be at least the depth".into(),
            ));
        }
        match self.boundary {
            Boundary::Bernoulli { x } | Boundary::BivariateBernoulli { x }
                if !(0.0..=1.0).contains(&x) =>
            {
                Err(Error::Config(format!(
                    "boundary parameter {x} outside [0,1]"
                )))
            }
            Boundary::BivariateBernoulli { .. } if self.pruned => Err(Error::Config(
                "pruning is only available for scalar leaves".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// The RNG for sample `index` of a run seeded with `seed`.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

trait Leaf: Copy {
    fn draw<R: Rng>(boundary: &Boundary, rng: &mut R) -> Self;
    fn lo() -> Self;
    fn hi() -> Self;
    fn min(self, o: Self) -> Self;
    fn max(self, o: Self) -> Self;
}

impl Leaf for f64 {
    fn draw<R: Rng>(boundary: &Boundary, rng: &mut R) -> f64 {
        match *boundary {
            Boundary::Uniform01 => rng.random::<f64>(),
            Boundary::Bernoulli { x } | Boundary::BivariateBernoulli { x } => {
                if rng.random::<f64>() < 1.0 - x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
    fn lo() -> f64 {
        f64::NEG_INFINITY
    }
    fn hi() -> f64 {
        f64::INFINITY
    }
    fn min(self, o: f64) -> f64 {
        f64::min(self, o)
    }
    fn max(self, o: f64) -> f64 {
        f64::max(self, o)
    }
}

impl Leaf for (u8, u8) {
    fn draw<R: Rng>(boundary: &Boundary, rng: &mut R) -> (u8, u8) {
        let a = f64::draw(boundary, rng) as u8;
        let b = f64::draw(boundary, rng) as u8;
        (a, b)
    }
    fn lo() -> (u8, u8) {
        (0, 0)
    }
    fn hi() -> (u8, u8) {
        (1, 1)
    }
    fn min(self, o: Self) -> Self {
        (self.0.min(o.0), self.1.min(o.1))
    }
    fn max(self, o: Self) -> Self {
        (self.0.max(o.0), self.1.max(o.1))
    }
}

struct Walker<'a, R> {
    offspring: &'a OffspringSampler,
    boundary: Boundary,
    rng: &'a mut R,
    nodes: u64,
    budget: u64,
}

impl<R: Rng> Walker<'_, R> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(Error::BudgetExceeded {
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    /// Even heights take the min over children, odd heights the max.
    fn eval<L: Leaf>(&mut self, height: u32) -> Result<L> {
        self.tick()?;
        if height == 0 {
            return Ok(L::draw(&self.boundary, self.rng));
        }
        let m = self.offspring.sample(self.rng);
        let is_min = height % 2 == 0;
        let mut acc = if is_min { L::hi() } else { L::lo() };
        for _ in 0..m {
            let v = self.eval::<L>(height - 1)?;
            acc = if is_min { acc.min(v) } else { acc.max(v) };
        }
        Ok(acc)
    }

    fn eval_pruned(&mut self, height: u32, alpha: f64, beta: f64) -> Result<f64> {
        self.tick()?;
        if height == 0 {
            return Ok(f64::draw(&self.boundary, self.rng));
        }
        let m = self.offspring.sample(self.rng);
        if height % 2 == 0 {
            let mut v = f64::INFINITY;
            for _ in 0..m {
                v = v.min(self.eval_pruned(height - 1, alpha, beta.min(v))?);
                if v <= alpha {
                    break;
                }
            }
            Ok(v)
        } else {
            let mut v = f64::NEG_INFINITY;
            for _ in 0..m {
                v = v.max(self.eval_pruned(height - 1, alpha.max(v), beta)?);
                if v >= beta {
                    break;
                }
            }
            Ok(v)
        }
    }
}

fn run_one<R: Rng, L: Leaf>(
    config: &SimConfig,
    offspring: &OffspringSampler,
    rng: &mut R,
) -> (Result<L>, u64) {
    let mut w = Walker {
        offspring,
        boundary: config.boundary,
        rng,
        nodes: 0,
        budget: config.node_budget,
    };
    let v = w.eval::<L>(config.depth);
    (v, w.nodes)
}

/// One root value; the root is a min level for even depth and a max level for odd depth.
pub fn sample_root<R: Rng>(
    config: &SimConfig,
    offspring: &OffspringSampler,
    rng: &mut R,
) -> Result<f64> {
    if config.pruned {
        let mut w = Walker {
            offspring,
            boundary: config.boundary,
            rng,
            nodes: 0,
            budget: config.node_budget,
        };
        return w.eval_pruned(config.depth, f64::NEG_INFINITY, f64::INFINITY);
    }
    run_one::<R, f64>(config, offspring, rng).0
}

/// As [`sample_root`], for odd depths (max at the root).
pub fn sample_root_odd<R: Rng>(
    config: &SimConfig,
    offspring: &OffspringSampler,
    rng: &mut R,
) -> Result<f64> {
    if config.depth % 2 == 0 {
        return Err(Error::Config("sample_root_odd needs an odd depth".into()));
    }
    sample_root(config, offspring, rng)
}

pub fn sample_bivariate_root<R: Rng>(
    config: &SimConfig,
    offspring: &OffspringSampler,
    rng: &mut R,
) -> Result<(u8, u8)> {
    run_one::<R, (u8, u8)>(config, offspring, rng).0
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationRun {
    /// Root values of the samples that stayed within budget, in sample order.
    pub values: Vec<f64>,
    pub budget_exceeded: usize,
    pub nodes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BivariateRun {
    /// `counts[a][b]` = number of roots equal to `(a, b)`.
    pub counts: [[usize; 2]; 2],
    pub budget_exceeded: usize,
    pub nodes: u64,
}

impl BivariateRun {
    pub fn accepted(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Estimate and standard error of `P(root = (a, b))`.
    pub fn proportion(&self, a: usize, b: usize) -> (f64, f64) {
        let n = self.accepted() as f64;
        let p = self.counts[a][b] as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

fn map_samples<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimulationRun> {
    config.validate()?;
    if matches!(config.boundary, Boundary::BivariateBernoulli { .. }) {
        return Err(Error::Config(
            "use simulate_bivariate for paired leaves".into(),
        ));
    }
    let offspring = OffspringSampler::new(&config.dist);
    let outcomes = map_samples(config.samples, |i| {
        let mut rng = sample_stream(config.seed, i);
        if config.pruned {
            let mut w = Walker {
                offspring: &offspring,
                boundary: config.boundary,
                rng: &mut rng,
                nodes: 0,
                budget: config.node_budget,
            };
            let v = w.eval_pruned(config.depth, f64::NEG_INFINITY, f64::INFINITY);
            (v, w.nodes)
        } else {
            run_one::<_, f64>(config, &offspring, &mut rng)
        }
    });
    let mut run = SimulationRun {
        values: Vec::with_capacity(config.samples),
        budget_exceeded: 0,
        nodes: 0,
    };
    for (v, nodes) in outcomes {
        run.nodes += nodes;
        match v {
            Ok(x) => run.values.push(x),
            Err(Error::BudgetExceeded { .. }) => run.budget_exceeded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

pub fn simulate_bivariate(config: &SimConfig) -> Result<BivariateRun> {
    config.validate()?;
    if !matches!(config.boundary, Boundary::BivariateBernoulli { .. }) {
        return Err(Error::Config(
            "bivariate run needs a BivariateBernoulli boundary".into(),
        ));
    }
    let offspring = OffspringSampler::new(&config.dist);
    let outcomes = map_samples(config.samples, |i| {
        let mut rng = sample_stream(config.seed, i);
        run_one::<_, (u8, u8)>(config, &offspring, &mut rng)
    });
    let mut run = BivariateRun {
        counts: [[0; 2]; 2],
        budget_exceeded: 0,
        nodes: 0,
    };
    for (v, nodes) in outcomes {
        run.nodes += nodes;
        match v {
            Ok((a, b)) => run.counts[a as usize][b as usize] += 1,
            Err(Error::BudgetExceeded { .. }) => run.budget_exceeded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// `P(W <= x)` for the root at `depth` with uniform leaves: `f^{n}(x)` for
/// `depth = 2n`, `G(f^{n-1}(x))` for `depth = 2n - 1`.
pub fn analytic_cdf(dist: &OffspringDistribution, depth: u32, x: f64) -> f64 {
    let mut y = x.clamp(0.0, 1.0);
    for _ in 0..depth / 2 {
        y = dist.f(y);
    }
    if depth % 2 == 1 {
        y = dist.g(y);
    }
    y
}
