//! Sample summaries and goodness-of-fit tests.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Significance level used when a caller does not pick one.
pub const DEFAULT_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased.
    pub variance: f64,
    /// Adjusted Fisher-Pearson `G1`; `None` for constant or too-short input.
    pub skewness: Option<f64>,
    /// Bias-corrected `G2`; `None` for constant or too-short input.
    pub excess_kurtosis: Option<f64>,
    pub se_mean: f64,
    pub se_variance: f64,
    /// Delta-method standard error of the excess kurtosis, valid for
    /// non-Gaussian samples too.
    pub se_excess_kurtosis: Option<f64>,
}

/// Two-pass summary.
pub fn summarize(samples: &[f64]) -> Result<SampleSummary> {
    let n = samples.len();
    if n == 0 {
        return Err(invalid("cannot summarize an empty sample"));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    // Biased central moments m2..m8.
    let mut c = [0.0f64; 9];
    for &x in samples {
        let d = x - mean;
        let mut pow = d * d;
        for k in 2..=8 {
            c[k] += pow;
            pow *= d;
        }
    }
    for v in c.iter_mut() {
        *v /= nf;
    }
    Ok(summary_from_central(n, mean, &c))
}

fn summary_from_central(n: usize, mean: f64, c: &[f64; 9]) -> SampleSummary {
    let nf = n as f64;
    let (m2, m3, m4) = (c[2], c[3], c[4]);
    let variance = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
    let degenerate = m2 <= (1e-14 * mean.abs()).powi(2);
    let skewness =
        (!degenerate && n > 2).then(|| m3 / m2.powf(1.5) * (nf * (nf - 1.0)).sqrt() / (nf - 2.0));
    let excess_kurtosis = (!degenerate && n > 3).then(|| {
        let g2 = m4 / (m2 * m2) - 3.0;
        ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0))
    });
    let se_mean = if n > 1 {
        (variance / nf).sqrt()
    } else {
        f64::NAN
    };
    let se_variance = if n > 1 {
        ((m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf)
            .max(0.0)
            .sqrt()
    } else {
        f64::NAN
    };
    let se_excess_kurtosis = (!degenerate && n > 3).then(|| {
        // Asymptotic covariances of sample central moments.
        let (m5, m6, m8) = (c[5], c[6], c[8]);
        let var_m2 = m4 - m2 * m2;
        let var_m4 = m8 - m4 * m4 - 8.0 * m3 * m5 + 16.0 * m2 * m3 * m3;
        let cov = m6 - m2 * m4 - 4.0 * m3 * m3;
        let d2 = -2.0 * m4 / (m2 * m2 * m2);
        let d4 = 1.0 / (m2 * m2);
        ((d2 * d2 * var_m2 + d4 * d4 * var_m4 + 2.0 * d2 * d4 * cov) / nf)
            .max(0.0)
            .sqrt()
    });
    SampleSummary {
        count: n,
        mean,
        variance,
        skewness,
        excess_kurtosis,
        se_mean,
        se_variance,
        se_excess_kurtosis,
    }
}

/// One-pass accumulator of the first four moments.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn skewness(&self) -> Option<f64> {
        let n = self.n as f64;
        (self.n > 2 && self.m2 > 0.0).then(|| {
            let g1 = (n.sqrt() * self.m3) / self.m2.powf(1.5);
            g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
        })
    }

    pub fn excess_kurtosis(&self) -> Option<f64> {
        let n = self.n as f64;
        (self.n > 3 && self.m2 > 0.0).then(|| {
            let g2 = n * self.m4 / (self.m2 * self.m2) - 3.0;
            ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

impl Decision {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Decision::Pass
        } else {
            Decision::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Decision::Pass
    }
}

/// Outcome of one check. Hypothesis tests carry a p-value and level;
/// tolerance checks carry the threshold the statistic was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub level: Option<f64>,
    pub threshold: Option<f64>,
    pub decision: Decision,
    /// What prediction was tested.
    pub context: String,
}

impl TestReport {
    pub fn hypothesis(name: &str, statistic: f64, p_value: f64, level: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.to_string(),
            statistic,
            p_value: Some(p_value),
            level: Some(level),
            threshold: None,
            decision: Decision::from_bool(p_value >= level),
            context: String::new(),
        }
    }

    /// Passes when `statistic <= threshold`.
    pub fn at_most(name: &str, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            p_value: None,
            level: None,
            threshold: Some(threshold),
            decision: Decision::from_bool(statistic <= threshold),
            context: String::new(),
        }
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.decision.passed()
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda.is_nan() {
        return f64::NAN;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Small-λ series for the CDF.
        let pi2 = std::f64::consts::PI.powi(2);
        let factor = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            let term = (-(j * j) * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-17 * cdf {
                break;
            }
        }
        (1.0 - factor * cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of a KS statistic at effective sample size `ne`.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let root = ne.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    v
}

/// `sup |F_a - F_b|` between two empirical CDFs.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("two-sample KS needs two nonempty samples"));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestReport> {
    let d = ks_two_sample_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let p = ks_p_value(d, na * nb / (na + nb));
    Ok(TestReport::hypothesis("ks-two-sample", d, p, level))
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("one-sample KS needs a nonempty sample"));
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    }))
}

pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestReport> {
    let d = ks_one_sample_statistic(samples, cdf)?;
    let p = ks_p_value(d, samples.len() as f64);
    Ok(TestReport::hypothesis("ks-one-sample", d, p, level))
}

pub fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (2.0 * variance).sqrt())
}

pub fn ks_one_sample_gaussian(
    samples: &[f64],
    mean: f64,
    variance: f64,
    level: f64,
) -> Result<TestReport> {
    if !(variance > 0.0) {
        return Err(invalid(format!(
            "gaussian KS needs variance > 0, got {variance}"
        )));
    }
    let mut report = ks_one_sample(samples, |x| normal_cdf(x, mean, variance), level)?;
    report.name = "ks-gaussian".to_string();
    Ok(report)
}

/// Relative frequency of each distinct value, sorted by value.
pub fn empirical_frequencies(samples: &[f64]) -> Vec<(f64, f64)> {
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for x in xs {
        match out.last_mut() {
            Some((v, c)) if *v == x => *c += 1.0,
            _ => out.push((x, 1.0)),
        }
    }
    for entry in &mut out {
        entry.1 /= n;
    }
    out
}

/// Default binning tolerance for the atoms of a discrete law.
pub fn default_atom_tolerance(atoms: &[(f64, f64)]) -> f64 {
    1e-9 * atoms.iter().fold(0.0f64, |m, a| m.max(a.0.abs()))
}

/// Total variation between an empirical law and a finite law.
///
/// Each empirical value goes to its nearest atom if within `tolerance`,
/// otherwise it stays unassigned. The result is
/// `½ Σ_atoms |empirical - law| + ½ · unassigned mass`.
pub fn tv_distance_discrete(
    empirical: &[(f64, f64)],
    atoms: &[(f64, f64)],
    tolerance: f64,
) -> Result<f64> {
    if atoms.is_empty() {
        return Err(invalid("law has no atoms"));
    }
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            if (a.0 - b.0).abs() <= 2.0 * tolerance {
                return Err(invalid(format!(
                    "atoms {} and {} overlap at tolerance {tolerance}",
                    a.0, b.0
                )));
            }
        }
    }
    let mut assigned = vec![0.0; atoms.len()];
    let mut unassigned = 0.0;
    for &(value, weight) in empirical {
        let (best, dist) = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i, (a.0 - value).abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("atoms nonempty");
        if dist <= tolerance {
            assigned[best] += weight;
        } else {
            unassigned += weight;
        }
    }
    let diff: f64 = atoms
        .iter()
        .zip(&assigned)
        .map(|(a, e)| (e - a.1).abs())
        .sum();
    Ok((0.5 * (diff + unassigned)).clamp(0.0, 1.0))
}
