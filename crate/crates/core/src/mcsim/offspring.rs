use crate::dist::{Model, OffspringDistribution};
use rand::Rng;
use statrs::function::gamma::ln_gamma;
use std::sync::Arc;

const POLY_TABLE: usize = 1 << 20;
const HUGE: u64 = 1 << 62;

#[derive(Clone, Debug)]
enum Kind {
    Constant(u64),
    Table(Arc<Vec<f64>>),
    Geometric {
        ln_q: f64,
    },
    /// Sum of `copies` Sibuya(gamma) draws, times `scale`.
    Sibuya {
        gamma: f64,
        ln_g1: f64,
        copies: u32,
        scale: u64,
    },
    PowerTail {
        cdf: Arc<Vec<f64>>,
        alpha: f64,
        zeta: f64,
    },
}

/// Inverse-CDF sampler for the offspring count `M`.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    kind: Kind,
}

fn uniform_open<R: Rng>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

impl OffspringSampler {
    pub fn new(dist: &OffspringDistribution) -> Self {
        let kind = match dist.model() {
            Model::Table(t) => {
                if t.p.len() - 1 == t.k_min {
                    Kind::Constant(t.k_min as u64)
                } else {
                    let mut acc = 0.0;
                    let mut cdf: Vec<f64> =
                        t.p.iter()
                            .map(|p| {
                                acc += p;
                                acc
                            })
                            .collect();
                    *cdf.last_mut().unwrap() = 1.0;
                    Kind::Table(Arc::new(cdf))
                }
            }
            Model::Geometric { p } => Kind::Geometric { ln_q: (-p).ln_1p() },
            Model::InvolutionB { n } | Model::InvolutionC { n } if *n == 1 => Kind::Constant(1),
            Model::InvolutionB { n } => {
                let gamma = 1.0 / *n as f64;
                Kind::Sibuya {
                    gamma,
                    ln_g1: ln_gamma(1.0 - gamma),
                    copies: *n,
                    scale: 1,
                }
            }
            Model::InvolutionC { n } => {
                let gamma = 1.0 / *n as f64;
                Kind::Sibuya {
                    gamma,
                    ln_g1: ln_gamma(1.0 - gamma),
                    copies: 1,
                    scale: *n as u64,
                }
            }
            Model::Polylog(l) => {
                let z = l.poly.zeta_s();
                let mut acc = 0.0;
                let cdf = (0..POLY_TABLE)
                    .map(|k| {
                        if k > 0 {
                            acc += (k as f64).powf(-l.alpha) / z;
                        }
                        acc
                    })
                    .collect();
                Kind::PowerTail {
                    cdf: Arc::new(cdf),
                    alpha: l.alpha,
                    zeta: z,
                }
            }
        };
        Self { kind }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            Kind::Constant(k) => *k,
            Kind::Table(cdf) => {
                let u = rng.random::<f64>();
                cdf.partition_point(|&c| c <= u) as u64
            }
            Kind::Geometric { ln_q } => {
                let u = uniform_open(rng);
                let k = 1.0 + (u.ln() / ln_q).floor();
                if k >= HUGE as f64 {
                    HUGE
                } else {
                    k as u64
                }
            }
            Kind::Sibuya {
                gamma,
                ln_g1,
                copies,
                scale,
            } => {
                let mut total: u64 = 0;
                for _ in 0..*copies {
                    total = total.saturating_add(sibuya(*gamma, *ln_g1, uniform_open(rng)));
                }
                total.saturating_mul(*scale)
            }
            Kind::PowerTail { cdf, alpha, zeta } => {
                let u = rng.random::<f64>();
                if u < cdf[cdf.len() - 1] {
                    return cdf.partition_point(|&c| c <= u) as u64;
                }
                // P(M > k) ~ (k + 1/2)^{1-alpha} / ((alpha - 1) zeta)
                let tail = (1.0 - u) * (alpha - 1.0) * zeta;
                let k = tail.powf(-1.0 / (alpha - 1.0)) - 0.5;
                if k >= HUGE as f64 {
                    HUGE
                } else {
                    (k.ceil() as u64).max(cdf.len() as u64)
                }
            }
        }
    }
}

/// Smallest `k >= 1` with `P(X > k) < u`, where
/// `P(X > k) = prod_{j<=k} (1 - gamma/j) = Gamma(k+1-gamma) / (Gamma(k+1) Gamma(1-gamma))`.
fn sibuya(gamma: f64, ln_g1: f64, u: f64) -> u64 {
    let mut s = 1.0;
    for k in 1..=64u64 {
        s *= 1.0 - gamma / k as f64;
        if s < u {
            return k;
        }
    }
    let ln_u = u.ln();
    let ln_s = |k: u64| {
        let k = k as f64;
        ln_gamma(k + 1.0 - gamma) - ln_gamma(k + 1.0) - ln_g1
    };
    let mut lo = 64u64;
    let mut hi = 128u64;
    while ln_s(hi) >= ln_u {
        lo = hi;
        if hi >= HUGE / 2 {
            return HUGE;
        }
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_s(mid) < ln_u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
