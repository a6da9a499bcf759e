//! Color measures and the painting of clusters: one independent draw per
//! cluster, shared by every site of that cluster.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::percolation::ClusterLabeling;
use crate::rng::{stream, StreamTag};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// The single-site color law ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColorMeasure {
    /// `(1 - alpha) δ_a + alpha δ_b`.
    TwoPoint {
        a: f64,
        b: f64,
        alpha: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Atoms `(value, weight)`.
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
}

impl ColorMeasure {
    pub fn two_point(a: f64, b: f64, alpha: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(invalid("two-point atoms must be finite"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("two-point alpha {alpha} outside [0, 1]")));
        }
        Ok(ColorMeasure::TwoPoint { a, b, alpha })
    }

    /// `(1 - alpha) δ_{-1} + alpha δ_{+1}`.
    pub fn plus_minus(alpha: f64) -> Result<Self> {
        Self::two_point(-1.0, 1.0, alpha)
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(invalid(format!(
                "gaussian needs finite mean and nonnegative variance, got ({mean}, {variance})"
            )));
        }
        Ok(ColorMeasure::Gaussian { mean, variance })
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("discrete measure needs at least one atom"));
        }
        if atoms
            .iter()
            .any(|&(v, w)| !v.is_finite() || !w.is_finite() || w < 0.0)
        {
            return Err(invalid(
                "discrete atoms need finite values and nonnegative weights",
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(invalid(format!("discrete weights sum to {total}, not 1")));
        }
        Ok(ColorMeasure::Discrete { atoms })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::discrete(vec![(value, 1.0)])
    }

    /// Atoms with positive weight, or `None` for the Gaussian law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => Some(
                [(*a, 1.0 - alpha), (*b, *alpha)]
                    .into_iter()
                    .filter(|&(_, w)| w > 0.0)
                    .collect(),
            ),
            ColorMeasure::Gaussian { .. } => None,
            ColorMeasure::Discrete { atoms } => {
                Some(atoms.iter().copied().filter(|&(_, w)| w > 0.0).collect())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => (1.0 - alpha) * a + alpha * b,
            ColorMeasure::Gaussian { mean, .. } => *mean,
            ColorMeasure::Discrete { atoms } => atoms.iter().map(|(v, w)| v * w).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => alpha * (1.0 - alpha) * (b - a) * (b - a),
            ColorMeasure::Gaussian { variance, .. } => *variance,
            ColorMeasure::Discrete { .. } => self.central_moment(2),
        }
    }

    /// `∫ (z - m)^order dν(z)`.
    pub fn central_moment(&self, order: u32) -> f64 {
        if order == 0 {
            return 1.0;
        }
        let m = self.mean();
        match self {
            ColorMeasure::Gaussian { variance, .. } => {
                if order % 2 == 1 {
                    0.0
                } else {
                    double_factorial_odd(order / 2) * variance.powi((order / 2) as i32)
                }
            }
            _ => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .map(|(v, w)| w * (v - m).powi(order as i32))
                .sum(),
        }
    }

    /// `∫ (z - m)^{2k} dν(z)`.
    pub fn central_even_moment(&self, k: u32) -> f64 {
        self.central_moment(2 * k)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => {
                if rng.random::<f64>() < *alpha {
                    *b
                } else {
                    *a
                }
            }
            ColorMeasure::Gaussian { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            ColorMeasure::Discrete { atoms } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                for &(v, w) in atoms {
                    acc += w;
                    if u < acc {
                        return v;
                    }
                }
                // Rounding left `acc` just below 1.
                atoms
                    .iter()
                    .rev()
                    .find(|a| a.1 > 0.0)
                    .map_or(atoms[atoms.len() - 1].0, |a| a.0)
            }
        }
    }

    /// The same law translated by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => ColorMeasure::TwoPoint {
                a: a + c,
                b: b + c,
                alpha: *alpha,
            },
            ColorMeasure::Gaussian { mean, variance } => ColorMeasure::Gaussian {
                mean: mean + c,
                variance: *variance,
            },
            ColorMeasure::Discrete { atoms } => ColorMeasure::Discrete {
                atoms: atoms.iter().map(|&(v, w)| (v + c, w)).collect(),
            },
        }
    }
}

/// `(2k - 1)!! = (2k)! / (k! 2^k)`.
pub(crate) fn double_factorial_odd(k: u32) -> f64 {
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

/// `(m, σ², k ↦ ∫(z-m)^{2k} dν)`.
pub fn moments(nu: &ColorMeasure) -> (f64, f64, impl Fn(u32) -> f64 + '_) {
    (nu.mean(), nu.variance(), move |k| nu.central_even_moment(k))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("cannot parse {what} `{s}` as a number")))
}

/// Text forms: `two-point:a,b,alpha`, `gaussian:mean,var`,
/// `discrete:v1:w1,v2:w2,...`.
impl FromStr for ColorMeasure {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| invalid(format!("color measure `{spec}` lacks a `kind:` prefix")))?;
        match kind.trim() {
            "two-point" => {
                let parts: Vec<&str> = body.split(',').collect();
                let [a, b, alpha] = parts[..] else {
                    return Err(invalid(format!("two-point needs a,b,alpha; got `{body}`")));
                };
                Self::two_point(
                    parse_f64(a, "atom a")?,
                    parse_f64(b, "atom b")?,
                    parse_f64(alpha, "alpha")?,
                )
            }
            "gaussian" => {
                let parts: Vec<&str> = body.split(',').collect();
                let [mean, var] = parts[..] else {
                    return Err(invalid(format!("gaussian needs mean,var; got `{body}`")));
                };
                Self::gaussian(parse_f64(mean, "mean")?, parse_f64(var, "variance")?)
            }
            "discrete" => {
                let atoms = body
                    .split(',')
                    .map(|atom| {
                        // Split at the last ':' so negative values parse.
                        let (v, w) = atom.rsplit_once(':').ok_or_else(|| {
                            invalid(format!("discrete atom `{atom}` must be value:weight"))
                        })?;
                        Ok((parse_f64(v, "atom value")?, parse_f64(w, "atom weight")?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::discrete(atoms)
            }
            other => Err(invalid(format!(
                "unknown color measure `{other}` (expected two-point, gaussian or discrete)"
            ))),
        }
    }
}

impl fmt::Display for ColorMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorMeasure::TwoPoint { a, b, alpha } => write!(f, "two-point:{a},{b},{alpha}"),
            ColorMeasure::Gaussian { mean, variance } => write!(f, "gaussian:{mean},{variance}"),
            ColorMeasure::Discrete { atoms } => {
                write!(f, "discrete:")?;
                for (i, (v, w)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}:{w}")?;
                }
                Ok(())
            }
        }
    }
}

/// A painted configuration. Colors are stored per cluster.
#[derive(Debug, Clone)]
pub struct ColorField<'a> {
    labeling: &'a ClusterLabeling,
    cluster_color: Vec<f64>,
    z: f64,
}

impl<'a> ColorField<'a> {
    pub fn labeling(&self) -> &'a ClusterLabeling {
        self.labeling
    }

    /// `X(x)`.
    #[inline]
    pub fn at(&self, site: usize) -> f64 {
        self.cluster_color[self.labeling.cluster_of(site)]
    }

    pub fn cluster_color(&self, cluster: usize) -> f64 {
        self.cluster_color[cluster]
    }

    pub fn cluster_colors(&self) -> &[f64] {
        &self.cluster_color
    }

    /// Color of the infinite proxy, 0 without one.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn window_sum(&self, window: &[usize]) -> f64 {
        window.iter().map(|&s| self.at(s)).sum()
    }
}

/// Draws one color per cluster, in cluster-id order, from the given stream.
pub fn color_clusters<'a>(
    labeling: &'a ClusterLabeling,
    nu: &ColorMeasure,
    seed: u64,
    stream_tag: StreamTag,
) -> ColorField<'a> {
    let mut rng = stream(seed, stream_tag);
    let cluster_color: Vec<f64> = (0..labeling.cluster_count())
        .map(|_| nu.sample(&mut rng))
        .collect();
    let z = labeling.infinite_proxy().map_or(0.0, |c| cluster_color[c]);
    ColorField {
        labeling,
        cluster_color,
        z,
    }
}

/// Magnetization over a window.
pub fn field_mean(field: &ColorField<'_>, window: &[usize]) -> Result<f64> {
    if window.is_empty() {
        return Err(invalid("window must be nonempty"));
    }
    Ok(field.window_sum(window) / window.len() as f64)
}
