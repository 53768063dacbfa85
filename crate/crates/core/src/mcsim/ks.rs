use crate::error::{Error, Result};
use serde::Serialize;

/// 99% Kolmogorov critical value.
pub const KS_C99: f64 = 1.63;

#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("NaN in sample".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Lower empirical quantile.
    pub fn quantile(&self, level: f64) -> f64 {
        let n = self.sorted.len();
        let i = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub threshold: f64,
    pub n: usize,
    pub m: Option<usize>,
    pub passed: bool,
}

/// `sup_x |F_n(x) - F(x)|` for a continuous `F`.
pub fn ks_statistic(emp: &EmpiricalCdf, analytic: impl Fn(f64) -> f64) -> Result<KsReport> {
    let n = emp.len();
    if n < 100 {
        return Err(Error::Config(format!(
            "KS needs at least 100 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in emp.sorted.iter().enumerate() {
        let f = analytic(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let threshold = KS_C99 / nf.sqrt();
    Ok(KsReport {
        statistic: d,
        threshold,
        n,
        m: None,
        passed: d <= threshold,
    })
}

pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> Result<KsReport> {
    let (n, m) = (a.len(), b.len());
    if n < 100 || m < 100 {
        return Err(Error::Config(
            "KS needs at least 100 samples per side".into(),
        ));
    }
    let (xa, xb) = (a.sorted(), b.sorted());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xa[i].min(xb[j]);
        while i < n && xa[i] <= x {
            i += 1;
        }
        while j < m && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let threshold = KS_C99 * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsReport {
        statistic: d,
        threshold,
        n,
        m: Some(m),
        passed: d <= threshold,
    })
}
