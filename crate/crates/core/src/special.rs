//! Riemann zeta on the real line and the polylogarithm pieces needed by the
//! untruncated power law.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

const BORWEIN_N: usize = 48;

/// Dirichlet eta via Borwein's accelerated alternating series.
fn eta(s: f64) -> f64 {
    let n = BORWEIN_N;
    let mut d = vec![0.0; n + 1];
    let mut term = 1.0 / n as f64;
    let mut acc = term;
    d[0] = n as f64 * acc;
    for i in 0..n {
        let fi = i as f64;
        let fnn = n as f64;
        term *= 4.0 * (fnn + fi) * (fnn - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
        acc += term;
        d[i + 1] = fnn * acc;
    }
    let dn = d[n];
    let mut sum = 0.0;
    for (k, dk) in d.iter().take(n).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (dk - dn) / ((k + 1) as f64).powf(s);
    }
    -sum / dn
}

/// Riemann zeta for real `s != 1`.
pub fn zeta(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s >= 0.0 {
        if s > 60.0 {
            return 1.0 + 2f64.powf(-s);
        }
        eta(s) / (1.0 - 2f64.powf(1.0 - s))
    } else {
        2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(1.0 - s) * zeta(1.0 - s)
    }
}

const MU_TERMS: usize = 40;

/// `Li_s(x)` for a fixed real order `s` in (1,2), with the complement
/// `zeta(s) - Li_s(x)` evaluated without cancellation near `x = 1`.
#[derive(Clone, Debug)]
pub struct Polylog {
    s: f64,
    zeta_s: f64,
    neg_gamma: f64,
    /// zeta(s-k)/k!
    b: Vec<f64>,
    /// k^{-s} for k < POW_TABLE
    pow: Vec<f64>,
}

const POW_TABLE: usize = 512;

impl Polylog {
    pub fn new(s: f64) -> Self {
        let mut b = Vec::with_capacity(MU_TERMS + 1);
        let mut fact = 1.0;
        for k in 0..=MU_TERMS {
            if k > 0 {
                fact *= k as f64;
            }
            b.push(zeta(s - k as f64) / fact);
        }
        let pow = (0..POW_TABLE)
            .map(|k| if k == 0 { 0.0 } else { (k as f64).powf(-s) })
            .collect();
        Self {
            s,
            pow,
            zeta_s: b[0],
            neg_gamma: -gamma(1.0 - s),
            b,
        }
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn zeta_s(&self) -> f64 {
        self.zeta_s
    }

    /// `-Gamma(1-s)`, positive for s in (1,2).
    pub fn neg_gamma(&self) -> f64 {
        self.neg_gamma
    }

    /// zeta(s-k)/k! for k = 0..=40.
    pub fn mu_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// `sum_{k>=1} x^{k-1} k^{-s}` for `x <= 1/2`; `Li_s(x) = x * inner`.
    pub fn direct_inner(&self, x: f64) -> f64 {
        let mut acc = 1.0;
        let mut p = 1.0;
        for k in 2..POW_TABLE {
            p *= x;
            let t = p * self.pow[k];
            acc += t;
            if t <= 1e-18 * acc {
                break;
            }
        }
        acc
    }

    /// Regular part `sum_{k>=1} b_k mu^k`.
    pub fn regular_part(&self, mu: f64) -> f64 {
        let mut acc = 0.0;
        for &bk in self.b[1..].iter().rev() {
            acc = acc * mu + bk;
        }
        acc * mu
    }

    /// `zeta(s) - Li_s(e^mu)` for `mu` in `[-ln 2, 0]`.
    pub fn complement_mu(&self, mu: f64) -> f64 {
        if mu == 0.0 {
            return 0.0;
        }
        self.neg_gamma * (-mu).powf(self.s - 1.0) - self.regular_part(mu)
    }

    pub fn li(&self, x: f64) -> f64 {
        if x <= 0.5 {
            x * self.direct_inner(x)
        } else {
            self.zeta_s - self.complement_mu(x.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zeta_known_values() {
        assert_relative_eq!(zeta(2.0), PI * PI / 6.0, epsilon = 1e-14);
        assert_relative_eq!(zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_relative_eq!(zeta(0.0), -0.5, epsilon = 1e-14);
        assert_relative_eq!(zeta(-1.0), -1.0 / 12.0, epsilon = 1e-14);
        // mpmath: zeta(1.5), zeta(0.5), zeta(-0.5)
        assert_relative_eq!(zeta(1.5), 2.612_375_348_685_488, epsilon = 1e-13);
        assert_relative_eq!(zeta(0.5), -1.460_354_508_809_586_8, epsilon = 1e-13);
        assert_relative_eq!(zeta(-0.5), -0.207_886_224_977_354_57, epsilon = 1e-13);
    }

    #[test]
    fn trivial_zeros() {
        assert!(zeta(-2.0).abs() < 1e-15);
        assert!(zeta(-4.0).abs() < 1e-15);
    }

    #[test]
    fn polylog_branches_agree_with_direct_sum() {
        let p = Polylog::new(1.5);
        for &x in &[0.1f64, 0.5, 0.6, 0.9] {
            let direct: f64 = (1..200_000)
                .map(|k| x.powi(k) * (k as f64).powf(-1.5))
                .sum();
            assert_relative_eq!(p.li(x), direct, epsilon = 1e-13);
        }
        // continuity across the branch switch
        let below = 0.5 * p.direct_inner(0.5);
        let above = p.zeta_s() - p.complement_mu(0.5f64.ln());
        assert_relative_eq!(below, above, epsilon = 1e-14);
        assert_relative_eq!(p.li(1.0), p.zeta_s());
    }
}
