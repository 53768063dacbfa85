use super::sample_stream;
use crate::dist::OffspringDistribution;
use rand::Rng;

const MAX_BISECT: usize = 400;

/// Exact sampler for the even-depth root value `W_2n = f^{-n}(U)`.
///
/// Works in logit coordinates so that values within `1e-300` of 0 or 1 stay
/// resolvable. One uniform drives every depth of a path.
#[derive(Clone, Debug)]
pub struct QuantileSampler {
    dist: OffspringDistribution,
}

fn logit(u: f64) -> f64 {
    u.ln() - (-u).ln_1p()
}

impl QuantileSampler {
    pub fn new(dist: &OffspringDistribution) -> Self {
        Self { dist: dist.clone() }
    }

    /// `z` with `logit_f(z) = target`.
    pub fn inverse_logit_f(&self, target: f64) -> f64 {
        let h = |z: f64| self.dist.logit_f(z) - target;
        let mut lo = target;
        let mut hi = target;
        let mut step = 1.0f64.max(target.abs() * 0.1);
        if h(target) > 0.0 {
            loop {
                lo -= step;
                step *= 2.0;
                if h(lo) <= 0.0 || !lo.is_finite() {
                    break;
                }
                hi = lo;
            }
        } else {
            loop {
                hi += step;
                step *= 2.0;
                if h(hi) >= 0.0 || !hi.is_finite() {
                    break;
                }
                lo = hi;
            }
        }
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-13 * mid.abs().max(1.0) {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `logit W_{2n}` for `n = 0..=n_max` driven by the uniform `u`.
    pub fn logit_path(&self, u: f64, n_max: u32) -> Vec<f64> {
        let mut z = logit(u);
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(z);
        for _ in 0..n_max {
            z = self.inverse_logit_f(z);
            out.push(z);
        }
        out
    }

    /// One logit path per sample; sample `i` uses the stream `(seed, i)`.
    pub fn sample_paths(&self, samples: usize, n_max: u32, seed: u64) -> Vec<Vec<f64>> {
        let one = |i: u64| {
            let mut rng = sample_stream(seed, i);
            let u = 1.0 - rng.random::<f64>();
            self.logit_path(u.min(1.0 - f64::EPSILON / 2.0), n_max)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..samples as u64).into_par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..samples as u64).map(one).collect()
        }
    }
}
