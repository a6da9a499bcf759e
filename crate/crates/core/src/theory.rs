//! Closed-form limit laws of the magnetization and of its fluctuations.

use libm::lgamma as ln_gamma;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coloring::ColorMeasure;
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, StreamTag};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    Supercritical,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subcritical" => Ok(Regime::Subcritical),
            "supercritical" => Ok(Regime::Supercritical),
            other => Err(invalid(format!(
                "unknown regime `{other}` (expected subcritical or supercritical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Laws known only through a sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "kebab-case")]
pub enum SampledLaw {
    /// `(1 - θ) m + θ Z` with `Z ~ ν`.
    AffineColor { theta: f64, nu: ColorMeasure },
    /// `x + y (z - m)` with `x ~ N(0, finite_variance)`, `y ~ N(0, sigma_p2)`,
    /// `z ~ ν` independent.
    GammaProduct {
        finite_variance: f64,
        sigma_p2: f64,
        nu: ColorMeasure,
    },
}

impl SampledLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SampledLaw::AffineColor { theta, nu } => {
                (1.0 - theta) * nu.mean() + theta * nu.sample(rng)
            }
            SampledLaw::GammaProduct {
                finite_variance,
                sigma_p2,
                nu,
            } => {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let z = nu.sample(rng);
                finite_variance.sqrt() * x + sigma_p2.sqrt() * y * (z - nu.mean())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SampledLaw::AffineColor { nu, .. } => nu.mean(),
            SampledLaw::GammaProduct { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            SampledLaw::AffineColor { theta, nu } => theta * theta * nu.variance(),
            SampledLaw::GammaProduct {
                finite_variance,
                sigma_p2,
                nu,
            } => finite_variance + sigma_p2 * nu.variance(),
        }
    }

    pub fn fourth_central_moment(&self) -> f64 {
        match self {
            SampledLaw::AffineColor { theta, nu } => theta.powi(4) * nu.central_moment(4),
            SampledLaw::GammaProduct {
                finite_variance: a,
                sigma_p2: b,
                nu,
            } => 3.0 * a * a + 6.0 * a * b * nu.variance() + 3.0 * b * b * nu.central_moment(4),
        }
    }
}

/// A predicted limit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitLaw {
    PointMass {
        value: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Two distinct atoms `(value, probability)`.
    TwoPoint {
        atoms: [(f64, f64); 2],
    },
    GaussianMixture {
        components: Vec<MixtureComponent>,
    },
    Sampled(SampledLaw),
}

impl LimitLaw {
    /// Gaussian, or an exact point mass when the variance vanishes.
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        if variance == 0.0 {
            LimitLaw::PointMass { value: mean }
        } else {
            LimitLaw::Gaussian { mean, variance }
        }
    }

    /// Finite law from atoms: merges equal values and drops null weights.
    fn from_atoms(atoms: &[(f64, f64)]) -> Option<Self> {
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for &(v, w) in atoms.iter().filter(|a| a.1 > 0.0) {
            match merged.iter_mut().find(|m| m.0 == v) {
                Some(m) => m.1 += w,
                None => merged.push((v, w)),
            }
        }
        match merged[..] {
            [(value, _)] => Some(LimitLaw::PointMass { value }),
            [a, b] => Some(LimitLaw::TwoPoint { atoms: [a, b] }),
            _ => None,
        }
    }

    fn mixture(components: Vec<MixtureComponent>) -> Self {
        let mut merged: Vec<MixtureComponent> = Vec::new();
        for c in components.into_iter().filter(|c| c.weight > 0.0) {
            let same = |m: &&mut MixtureComponent| {
                m.mean == c.mean
                    && (m.variance - c.variance).abs() <= 1e-12 * m.variance.max(c.variance)
            };
            match merged.iter_mut().find(same) {
                Some(m) => m.weight += c.weight,
                None => merged.push(c),
            }
        }
        if let [only] = merged[..] {
            LimitLaw::gaussian(only.mean, only.variance)
        } else {
            LimitLaw::GaussianMixture { components: merged }
        }
    }

    /// Atoms of a finite law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            LimitLaw::PointMass { value } => Some(vec![(*value, 1.0)]),
            LimitLaw::TwoPoint { atoms } => Some(atoms.to_vec()),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LimitLaw::PointMass { value } => *value,
            LimitLaw::Gaussian { mean, .. } => *mean,
            LimitLaw::TwoPoint { atoms } => atoms.iter().map(|(v, p)| v * p).sum(),
            LimitLaw::GaussianMixture { components } => {
                components.iter().map(|c| c.weight * c.mean).sum()
            }
            LimitLaw::Sampled(s) => s.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        match self {
            LimitLaw::PointMass { .. } => 0.0,
            LimitLaw::Gaussian { variance, .. } => *variance,
            LimitLaw::TwoPoint { atoms } => atoms.iter().map(|(v, p)| p * (v - m).powi(2)).sum(),
            LimitLaw::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * (c.variance + (c.mean - m).powi(2)))
                .sum(),
            LimitLaw::Sampled(s) => s.variance(),
        }
    }

    pub fn fourth_central_moment(&self) -> f64 {
        let m = self.mean();
        match self {
            LimitLaw::PointMass { .. } => 0.0,
            LimitLaw::Gaussian { variance, .. } => 3.0 * variance * variance,
            LimitLaw::TwoPoint { atoms } => atoms.iter().map(|(v, p)| p * (v - m).powi(4)).sum(),
            LimitLaw::GaussianMixture { components } => components
                .iter()
                .map(|c| {
                    let d = c.mean - m;
                    c.weight * (d.powi(4) + 6.0 * d * d * c.variance + 3.0 * c.variance.powi(2))
                })
                .sum(),
            LimitLaw::Sampled(s) => s.fourth_central_moment(),
        }
    }

    /// `μ4 / σ⁴ - 3`; `None` for laws without spread.
    pub fn excess_kurtosis(&self) -> Option<f64> {
        let v = self.variance();
        (v > 0.0).then(|| self.fourth_central_moment() / (v * v) - 3.0)
    }

    /// CDF when available in closed form.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        let step = |v: f64| if x >= v { 1.0 } else { 0.0 };
        match self {
            LimitLaw::PointMass { value } => Some(step(*value)),
            LimitLaw::Gaussian { mean, variance } => Some(normal_cdf(x, *mean, *variance)),
            LimitLaw::TwoPoint { atoms } => Some(atoms.iter().map(|(v, p)| p * step(*v)).sum()),
            LimitLaw::GaussianMixture { components } => Some(
                components
                    .iter()
                    .map(|c| {
                        let f = if c.variance > 0.0 {
                            normal_cdf(x, c.mean, c.variance)
                        } else {
                            step(c.mean)
                        };
                        c.weight * f
                    })
                    .sum(),
            ),
            LimitLaw::Sampled(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LimitLaw::PointMass { value } => *value,
            LimitLaw::Gaussian { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            LimitLaw::TwoPoint { atoms } => {
                if rng.random::<f64>() < atoms[0].1 {
                    atoms[0].0
                } else {
                    atoms[1].0
                }
            }
            LimitLaw::GaussianMixture { components } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = *c;
                        break;
                    }
                }
                let z: f64 = rng.sample(StandardNormal);
                chosen.mean + chosen.variance.sqrt() * z
            }
            LimitLaw::Sampled(s) => s.sample(rng),
        }
    }

    /// `count` draws from the gamma-sampler stream of `seed`.
    pub fn sample_n(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, StreamTag::GammaSampler);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {x} outside [0, 1]")))
    }
}

/// Law of `(1 - θ) m + θ Z` with `Z ~ ν`.
pub fn lln_limit_law(nu: &ColorMeasure, theta: f64) -> Result<LimitLaw> {
    check_unit("theta", theta)?;
    let m = nu.mean();
    if theta == 0.0 {
        return Ok(LimitLaw::PointMass { value: m });
    }
    match nu {
        ColorMeasure::Gaussian { variance, .. } => {
            Ok(LimitLaw::gaussian(m, theta * theta * variance))
        }
        _ => {
            let atoms: Vec<(f64, f64)> = nu
                .atoms()
                .unwrap_or_default()
                .into_iter()
                .map(|(v, w)| ((1.0 - theta) * m + theta * v, w))
                .collect();
            Ok(LimitLaw::from_atoms(&atoms).unwrap_or_else(|| {
                LimitLaw::Sampled(SampledLaw::AffineColor {
                    theta,
                    nu: nu.clone(),
                })
            }))
        }
    }
}

/// Limit magnetization for `ν = (1 - α) δ_{-1} + α δ_{+1}`:
/// `2α(1-θ) + 2θ - 1` with probability α, `2α(1-θ) - 1` otherwise.
pub fn two_point_magnetization(alpha: f64, theta: f64) -> Result<LimitLaw> {
    check_unit("alpha", alpha)?;
    check_unit("theta", theta)?;
    let base = 2.0 * alpha * (1.0 - theta);
    let up = base + 2.0 * theta - 1.0;
    let down = base - 1.0;
    Ok(LimitLaw::from_atoms(&[(down, 1.0 - alpha), (up, alpha)]).expect("at most two atoms"))
}

/// Whether the sign of the limit magnetization is deterministic for the
/// ±1 measure with `P(+1) = alpha`.
pub fn sign_deterministic(alpha: f64, theta: f64) -> bool {
    alpha.max(1.0 - alpha) * (1.0 - theta) >= 0.5
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be finite and nonnegative, got {x}"
        )))
    }
}

/// Sampler for the annealed fluctuation law: `x + y (z - m)` with
/// `x ~ N(0, chi_f σ²)`, `y ~ N(0, σ_p²)`, `z ~ ν`.
pub fn gamma_sampler(
    chi_f: f64,
    sigma2: f64,
    sigma_p2: f64,
    nu: &ColorMeasure,
) -> Result<SampledLaw> {
    check_nonnegative("chi_f", chi_f)?;
    check_nonnegative("sigma2", sigma2)?;
    check_nonnegative("sigma_p2", sigma_p2)?;
    Ok(SampledLaw::GammaProduct {
        finite_variance: chi_f * sigma2,
        sigma_p2,
        nu: nu.clone(),
    })
}

/// The annealed fluctuation law, in closed form whenever one exists:
/// Gaussian when subcritical, a centered Gaussian mixture for finite ν
/// when supercritical, and the raw sampler otherwise.
pub fn gamma_law(
    regime: Regime,
    chi_f: f64,
    sigma2: f64,
    sigma_p2: f64,
    nu: &ColorMeasure,
) -> Result<LimitLaw> {
    let sampler = gamma_sampler(chi_f, sigma2, sigma_p2, nu)?;
    let finite = chi_f * sigma2;
    if regime == Regime::Subcritical {
        return Ok(LimitLaw::gaussian(0.0, finite));
    }
    let m = nu.mean();
    match nu.atoms() {
        Some(atoms) => Ok(LimitLaw::mixture(
            atoms
                .iter()
                .map(|&(z, w)| MixtureComponent {
                    weight: w,
                    mean: 0.0,
                    variance: finite + (z - m).powi(2) * sigma_p2,
                })
                .collect(),
        )),
        None if nu.variance() == 0.0 || sigma_p2 == 0.0 => Ok(LimitLaw::gaussian(0.0, finite)),
        None => Ok(LimitLaw::Sampled(sampler)),
    }
}

/// True iff the supercritical fluctuation law is Gaussian, i.e. ν is
/// `½(δ_a + δ_b)` (point masses included via `a = b`).
pub fn is_gamma_gaussian(nu: &ColorMeasure) -> bool {
    if nu.variance() == 0.0 {
        return true;
    }
    match nu {
        ColorMeasure::TwoPoint { alpha, .. } => *alpha == 0.5,
        ColorMeasure::Gaussian { .. } => false,
        ColorMeasure::Discrete { .. } => {
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (v, w) in nu.atoms().unwrap_or_default() {
                match merged.iter_mut().find(|m| m.0 == v) {
                    Some(m) => m.1 += w,
                    None => merged.push((v, w)),
                }
            }
            merged.len() == 2 && merged.iter().all(|m| (m.1 - 0.5).abs() <= 1e-12)
        }
    }
}

/// `(2k)! / (k! 2^k)`: exact below 11, via log-gamma above.
pub fn gaussian_moment_factor(k: u32) -> f64 {
    if k <= 10 {
        crate::coloring::double_factorial_odd(k)
    } else {
        let k = k as f64;
        (ln_gamma(2.0 * k + 1.0) - ln_gamma(k + 1.0) - k * std::f64::consts::LN_2).exp()
    }
}

/// 2k-th moment of `γ' = ∫ N(0, (z - m)² σ_p²) dν(z)`.
pub fn gamma_prime_moment(k: u32, nu: &ColorMeasure, sigma_p2: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("moment order k must be positive"));
    }
    check_nonnegative("sigma_p2", sigma_p2)?;
    Ok(gaussian_moment_factor(k) * nu.central_even_moment(k) * sigma_p2.powi(k as i32))
}

/// Annealed `Cov(X_0, X_k) = σ² P(k ∈ C(0))`.
pub fn covariance_prediction(sigma2: f64, connect_prob: f64) -> Result<f64> {
    check_nonnegative("sigma2", sigma2)?;
    check_unit("connect_prob", connect_prob)?;
    Ok(sigma2 * connect_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, summarize};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pm(alpha: f64) -> ColorMeasure {
        ColorMeasure::plus_minus(alpha).unwrap()
    }

    #[test]
    fn lln_limits() {
        let nu = pm(0.3);
        assert_eq!(
            lln_limit_law(&nu, 0.0).unwrap(),
            LimitLaw::PointMass { value: nu.mean() }
        );
        assert_eq!(
            lln_limit_law(&nu, 1.0).unwrap(),
            LimitLaw::TwoPoint {
                atoms: [(-1.0, 0.7), (1.0, 0.3)]
            }
        );
        let g = ColorMeasure::gaussian(0.0, 1.0).unwrap();
        assert_eq!(
            lln_limit_law(&g, 0.6).unwrap(),
            LimitLaw::Gaussian {
                mean: 0.0,
                variance: 0.36
            }
        );
        let d = ColorMeasure::discrete(vec![(0.0, 0.2), (1.0, 0.3), (4.0, 0.5)]).unwrap();
        assert!(matches!(
            lln_limit_law(&d, 0.5).unwrap(),
            LimitLaw::Sampled(_)
        ));
        assert!(lln_limit_law(&nu, 1.2).is_err());
    }

    #[test]
    fn magnetization_examples() {
        assert_eq!(
            two_point_magnetization(0.5, 0.0).unwrap(),
            LimitLaw::PointMass { value: 0.0 }
        );
        assert_eq!(
            two_point_magnetization(0.5, 0.5).unwrap(),
            LimitLaw::TwoPoint {
                atoms: [(-0.5, 0.5), (0.5, 0.5)]
            }
        );
        let LimitLaw::TwoPoint { atoms } = two_point_magnetization(0.8, 0.25).unwrap() else {
            panic!("expected two atoms");
        };
        assert_relative_eq!(atoms[0].0, 0.2, epsilon = 1e-12);
        assert_relative_eq!(atoms[0].1, 0.2, epsilon = 1e-12);
        assert_relative_eq!(atoms[1].0, 0.7, epsilon = 1e-12);
        assert_relative_eq!(atoms[1].1, 0.8, epsilon = 1e-12);
        assert_eq!(
            two_point_magnetization(0.7, 1.0).unwrap(),
            LimitLaw::TwoPoint {
                atoms: [(-1.0, 1.0 - 0.7), (1.0, 0.7)]
            }
        );
    }

    #[test]
    fn magnetization_agrees_with_general_law() {
        for alpha in [0.1, 0.5, 0.7] {
            for theta in [0.2, 0.5, 0.9] {
                let a = two_point_magnetization(alpha, theta)
                    .unwrap()
                    .atoms()
                    .unwrap();
                let b = lln_limit_law(&pm(alpha), theta).unwrap().atoms().unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert_relative_eq!(x.0, y.0, epsilon = 1e-12);
                    assert_relative_eq!(x.1, y.1, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sign_criterion() {
        assert!(sign_deterministic(0.9, 0.1));
        assert!(!sign_deterministic(0.5, 0.6));
        assert!(sign_deterministic(1.0, 0.0));
        // θ ≥ ½ rules out a deterministic sign unless ν is degenerate.
        for alpha in [0.2, 0.5, 0.8] {
            assert!(!sign_deterministic(alpha, 0.55));
        }
    }

    #[test]
    fn gamma_examples() {
        let half = pm(0.5);
        assert_eq!(
            gamma_law(Regime::Subcritical, 2.0, 1.0, 0.0, &half).unwrap(),
            LimitLaw::Gaussian {
                mean: 0.0,
                variance: 2.0
            }
        );
        assert_eq!(
            gamma_law(Regime::Supercritical, 1.3, 1.0, 0.7, &half).unwrap(),
            LimitLaw::Gaussian {
                mean: 0.0,
                variance: 1.3 + 0.7
            }
        );
        let (alpha, chi, sp) = (0.3, 1.4, 2.1);
        let LimitLaw::GaussianMixture { components } = gamma_law(
            Regime::Supercritical,
            chi,
            4.0 * alpha * (1.0 - alpha),
            sp,
            &pm(alpha),
        )
        .unwrap() else {
            panic!("expected mixture");
        };
        let base = 4.0 * alpha * (1.0 - alpha) * chi;
        // Atom -1 (weight 1 - α), atom +1 (weight α).
        assert_relative_eq!(components[0].weight, 1.0 - alpha);
        assert_relative_eq!(
            components[0].variance,
            base + 4.0 * alpha * alpha * sp,
            epsilon = 1e-12
        );
        assert_relative_eq!(components[1].weight, alpha);
        assert_relative_eq!(
            components[1].variance,
            base + 4.0 * (1.0 - alpha).powi(2) * sp,
            epsilon = 1e-12
        );
        assert!(gamma_law(Regime::Subcritical, -1.0, 1.0, 0.0, &half).is_err());
        let point = ColorMeasure::point_mass(3.0).unwrap();
        assert_eq!(
            gamma_law(Regime::Supercritical, 1.0, 0.0, 1.0, &point).unwrap(),
            LimitLaw::PointMass { value: 0.0 }
        );
        let g = ColorMeasure::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            gamma_law(Regime::Supercritical, 1.0, 1.0, 1.0, &g).unwrap(),
            LimitLaw::Sampled(_)
        ));
    }

    #[test]
    fn gaussianity_criterion() {
        assert!(is_gamma_gaussian(&pm(0.5)));
        assert!(!is_gamma_gaussian(&pm(0.3)));
        assert!(!is_gamma_gaussian(
            &ColorMeasure::gaussian(0.0, 1.0).unwrap()
        ));
        assert!(is_gamma_gaussian(
            &ColorMeasure::two_point(2.0, 5.0, 0.5).unwrap()
        ));
        assert!(is_gamma_gaussian(&ColorMeasure::point_mass(1.0).unwrap()));
        assert!(is_gamma_gaussian(
            &ColorMeasure::discrete(vec![(0.0, 0.5), (3.0, 0.5)]).unwrap()
        ));
        assert!(!is_gamma_gaussian(
            &ColorMeasure::discrete(vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]).unwrap()
        ));
    }

    #[test]
    fn gamma_prime_moments() {
        let s = 1.7;
        assert_relative_eq!(gamma_prime_moment(1, &pm(0.5), s).unwrap(), s);
        assert_relative_eq!(gamma_prime_moment(2, &pm(0.5), s).unwrap(), 3.0 * s * s);
        let g = ColorMeasure::gaussian(0.0, 1.0).unwrap();
        assert_relative_eq!(gamma_prime_moment(2, &g, s).unwrap(), 9.0 * s * s);
        assert!(gamma_prime_moment(0, &g, s).is_err());
    }

    #[test]
    fn moment_factor_switches_smoothly() {
        // (2k-1)!! for k = 10 and 11.
        assert_eq!(gaussian_moment_factor(10), 654_729_075.0);
        assert_relative_eq!(
            gaussian_moment_factor(11),
            13_749_310_575.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            gaussian_moment_factor(30) / gaussian_moment_factor(29),
            59.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn covariance() {
        assert_eq!(covariance_prediction(0.84, 1.0).unwrap(), 0.84);
        assert_eq!(covariance_prediction(0.84, 0.0).unwrap(), 0.0);
        let alpha: f64 = 0.3;
        assert_relative_eq!(
            covariance_prediction(4.0 * alpha * (1.0 - alpha), 0.6).unwrap(),
            4.0 * 0.3 * 0.7 * 0.6
        );
        assert!(covariance_prediction(1.0, 1.5).is_err());
    }

    #[test]
    fn mixture_sampler_matches_closed_form() {
        let nu = ColorMeasure::discrete(vec![(-1.0, 0.2), (0.5, 0.5), (2.0, 0.3)]).unwrap();
        let (chi, sp) = (1.2, 0.8);
        let closed = gamma_law(Regime::Supercritical, chi, nu.variance(), sp, &nu).unwrap();
        assert!(matches!(closed, LimitLaw::GaussianMixture { .. }));
        let raw = LimitLaw::Sampled(gamma_sampler(chi, nu.variance(), sp, &nu).unwrap());
        let a = closed.sample_n(100_000, 1);
        let b = raw.sample_n(100_000, 2);
        assert!(ks_two_sample(&a, &b, 0.01).unwrap().passed());
        assert_relative_eq!(closed.variance(), raw.variance(), max_relative = 1e-12);
        assert_relative_eq!(
            closed.fourth_central_moment(),
            raw.fourth_central_moment(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_form_kurtosis_matches_draws() {
        let law = gamma_law(Regime::Supercritical, 1.0, 0.84, 2.0, &pm(0.3)).unwrap();
        let s = summarize(&law.sample_n(400_000, 9)).unwrap();
        let k = law.excess_kurtosis().unwrap();
        assert!((s.excess_kurtosis.unwrap() - k).abs() < 4.0 * s.se_excess_kurtosis.unwrap());
    }

    #[test]
    fn symmetric_two_point_gamma_has_no_excess_kurtosis() {
        let raw = LimitLaw::Sampled(gamma_sampler(1.5, 1.0, 0.9, &pm(0.5)).unwrap());
        let s = summarize(&raw.sample_n(1_000_000, 4)).unwrap();
        let k = s.excess_kurtosis.unwrap();
        assert!(k.abs() < 0.05, "kurtosis {k}");

        let skewed = LimitLaw::Sampled(gamma_sampler(1.0, 0.84, 3.0, &pm(0.3)).unwrap());
        let s = summarize(&skewed.sample_n(1_000_000, 5)).unwrap();
        let exact = gamma_law(Regime::Supercritical, 1.0, 0.84, 3.0, &pm(0.3))
            .unwrap()
            .excess_kurtosis()
            .unwrap();
        let (k, se) = (s.excess_kurtosis.unwrap(), s.se_excess_kurtosis.unwrap());
        assert!(k.abs() > 5.0 * se, "kurtosis {k} ± {se}");
        assert!((k - exact).abs() < 4.0 * se, "{k} vs exact {exact}");
    }

    #[test]
    fn gamma_prime_moments_match_draws() {
        // γ' = y (z - m): centered mixture with no finite part.
        let sp = 1.3;
        for nu in [pm(0.3), ColorMeasure::gaussian(0.5, 0.8).unwrap()] {
            let draws =
                LimitLaw::Sampled(gamma_sampler(0.0, 0.0, sp, &nu).unwrap()).sample_n(400_000, 17);
            for k in 1..=3u32 {
                let powers: Vec<f64> = draws.iter().map(|x| x.powi(2 * k as i32)).collect();
                let s = summarize(&powers).unwrap();
                let exact = gamma_prime_moment(k, &nu, sp).unwrap();
                assert!(
                    (s.mean - exact).abs() < 4.0 * s.se_mean,
                    "k = {k}: {} ± {} vs {exact}",
                    s.mean,
                    s.se_mean
                );
            }
        }
    }

    proptest! {
        #[test]
        fn lln_law_is_shift_equivariant(alpha in 0.0f64..=1.0, theta in 0.0f64..=1.0, c in -5.0f64..5.0, var in 0.0f64..4.0) {
            let measures = [
                pm(alpha),
                ColorMeasure::gaussian(0.5, var).unwrap(),
                ColorMeasure::discrete(vec![(-2.0, 0.25), (0.0, 0.25), (1.0, 0.5)]).unwrap(),
            ];
            for nu in measures {
                let base = lln_limit_law(&nu, theta).unwrap();
                let moved = lln_limit_law(&nu.shifted(c), theta).unwrap();
                prop_assert!((moved.mean() - base.mean() - c).abs() < 1e-9);
                prop_assert!((moved.variance() - base.variance()).abs() < 1e-9);
                if let (Some(a), Some(b)) = (base.atoms(), moved.atoms()) {
                    prop_assert_eq!(a.len(), b.len());
                    for (x, y) in a.iter().zip(&b) {
                        prop_assert!((y.0 - x.0 - c).abs() < 1e-9);
                        prop_assert!((y.1 - x.1).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn magnetization_weights_sum_to_one(alpha in 0.0f64..=1.0, theta in 0.0f64..=1.0) {
            let law = two_point_magnetization(alpha, theta).unwrap();
            let total: f64 = law.atoms().unwrap().iter().map(|a| a.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
