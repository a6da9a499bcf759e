//! Experiment drivers. Each run simulates, estimates the percolation
//! functionals it needs, builds the predicted law and tests the simulation
//! against it.
//!
//! Seeds: replicate `r` of a batch uses `replicate_seed(batch_seed, r)`,
//! split into the graph and color roles. Quenched runs pin the graph to
//! replicate 0 and vary only the color replicate.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coloring::{color_clusters, ColorField, ColorMeasure};
use crate::error::{invalid, Error, Result};
use crate::exec::map_replicates;
use crate::lattice::BoxLattice;
use crate::percolation::{
    aggregate_estimates, check_probability, default_margin, estimate_functionals,
    near_critical_warning, observe, replicate_labeling, sigma_p2_from_volumes, square_sums,
    ClusterLabeling, PercolationEstimates, ProxyRule,
};
use crate::rng::{replicate_seed, StreamTag};
use crate::stats::{
    empirical_frequencies, ks_one_sample, ks_one_sample_gaussian, ks_two_sample, summarize,
    tv_distance_discrete, SampleSummary, TestReport,
};
use crate::theory::{gamma_law, gamma_sampler, lln_limit_law, LimitLaw, Regime, SampledLaw};

/// Batch index reserved for the estimation batch of quenched runs.
const ESTIMATION_BATCH: u64 = u64::MAX;
/// Batch index reserved for reference draws from a sampled law.
const REFERENCE_BATCH: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Quenched,
    Annealed,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quenched" => Ok(Mode::Quenched),
            "annealed" => Ok(Mode::Annealed),
            other => Err(invalid(format!(
                "unknown mode `{other}` (expected quenched or annealed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Significance level of every hypothesis test.
    pub level: f64,
    /// Relative error allowed against an exact fixed-graph variance.
    pub exact_variance: f64,
    /// Relative error allowed against an asymptotic variance.
    pub asymptotic_variance: f64,
    /// Relative error of the weighted-LLN condition ratio.
    pub ratio: f64,
    pub tv: f64,
    /// Absolute error of a located atom.
    pub atom: f64,
    /// Relative disagreement of σ_p² between box sizes.
    pub sigma_p2_agreement: f64,
    /// Standard errors allowed between a mean and its target.
    pub mean_se: f64,
    /// Standard errors allowed for an exactly centered statistic.
    pub centering_se: f64,
    /// Quenched LLN deviation bound; derived from the run when unset.
    pub lln_deviation: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            level: crate::stats::DEFAULT_LEVEL,
            exact_variance: 0.05,
            asymptotic_variance: 0.15,
            ratio: 0.15,
            tv: 0.1,
            atom: 0.02,
            sigma_p2_agreement: 0.2,
            mean_se: 3.0,
            centering_se: 4.0,
            lln_deviation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// Box radii; runs at a single size use the largest.
    pub radii: Vec<usize>,
    pub p: f64,
    pub nu: ColorMeasure,
    pub mode: Mode,
    pub graph_replicates: usize,
    pub color_replicates: usize,
    pub master_seed: u64,
    pub margin: Option<usize>,
    pub proxy_rule: ProxyRule,
    pub regime: Option<Regime>,
    /// Overrides the estimated σ_p² in the infinite-cluster CLT.
    pub reference_sigma_p2: Option<f64>,
    pub tolerances: Tolerances,
    #[serde(skip, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(dim: usize, radius: usize, p: f64, nu: ColorMeasure) -> Self {
        Self {
            dim,
            radii: vec![radius],
            p,
            nu,
            mode: Mode::Annealed,
            graph_replicates: 100,
            color_replicates: 1000,
            master_seed: 0,
            margin: None,
            proxy_rule: ProxyRule::BoundaryLargest,
            regime: None,
            reference_sigma_p2: None,
            tolerances: Tolerances::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if self.radii.is_empty() {
            return Err(invalid("at least one radius is required"));
        }
        check_probability(self.p)?;
        if self.graph_replicates == 0 || self.color_replicates == 0 {
            return Err(invalid("replicate counts must be at least 1"));
        }
        if let Some(s) = self.reference_sigma_p2 {
            if !(s.is_finite() && s >= 0.0) {
                return Err(invalid(format!(
                    "reference σ_p² must be nonnegative, got {s}"
                )));
            }
        }
        Ok(())
    }

    fn largest_radius(&self) -> usize {
        *self.radii.iter().max().expect("validated nonempty")
    }

    fn require_mode(&self, mode: Mode, experiment: &str) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(invalid(format!(
                "{experiment} needs mode {mode:?}, got {:?}",
                self.mode
            )))
        }
    }
}

/// Regime known from the critical point: p_c = 1 for d = 1, ½ for d = 2.
pub fn infer_regime(dim: usize, p: f64) -> Option<Regime> {
    let pc = match dim {
        1 => 1.0,
        2 => 0.5,
        _ => return None,
    };
    if p < pc {
        Some(Regime::Subcritical)
    } else if p > pc || dim == 1 {
        Some(Regime::Supercritical)
    } else {
        None
    }
}

/// One replicate (or, for trajectories, one window) of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub radius: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_volume: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub square_sum_density: Option<f64>,
    /// The value dumped for this record.
    pub statistic: f64,
}

impl ReplicateRecord {
    fn new(replicate: u64, radius: usize, statistic: f64) -> Self {
        Self {
            replicate,
            radius,
            m_n: None,
            q_n: None,
            z: None,
            proxy_volume: None,
            k_n: None,
            square_sum_density: None,
            statistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<LimitLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Prediction {
    pub fn law(name: &str, law: LimitLaw) -> Self {
        Self {
            name: name.to_string(),
            law: Some(law),
            value: None,
        }
    }

    pub fn value(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            law: None,
            value: Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAudit {
    pub master_seed: u64,
    pub streams: Vec<StreamTag>,
    /// Batches derived from the master seed, by purpose.
    pub batches: Vec<(String, u64)>,
    /// Graph replicate used by quenched runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quenched_graph_replicate: Option<u64>,
}

impl SeedAudit {
    fn new(master_seed: u64, streams: &[StreamTag]) -> Self {
        Self {
            master_seed,
            streams: streams.to_vec(),
            batches: Vec::new(),
            quenched_graph_replicate: None,
        }
    }

    fn batch(mut self, purpose: &str, seed: u64) -> Self {
        self.batches.push((purpose.to_string(), seed));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub workers: usize,
}

/// The dumped statistic. Values go to CSV; the summary goes to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDump {
    pub statistic: String,
    pub unit: String,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub summary: Option<SampleSummary>,
}

impl SampleDump {
    fn new(statistic: &str, unit: &str, values: Vec<f64>) -> Self {
        let summary = summarize(&values).ok();
        Self {
            statistic: statistic.to_string(),
            unit: unit.to_string(),
            values,
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSampleConfig {
    pub nu: ColorMeasure,
    pub regime: Regime,
    pub chi_f: f64,
    /// Variance of ν.
    pub sigma2: f64,
    pub sigma_p2: f64,
    pub draws: usize,
    pub master_seed: u64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResolvedConfig {
    Experiment(ExperimentConfig),
    GammaSample(GammaSampleConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment: String,
    pub config: ResolvedConfig,
    pub estimates: Option<PercolationEstimates>,
    pub predictions: Vec<Prediction>,
    pub tests: Vec<TestReport>,
    pub diagnostics: Vec<String>,
    pub seeds: SeedAudit,
    pub timing: Timing,
    pub samples: SampleDump,
    /// Per-replicate detail; written to CSV, not to the JSON report.
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.tests.iter().all(TestReport::passed)
    }

    pub fn test(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn prediction(&self, name: &str) -> Option<&Prediction> {
        self.predictions.iter().find(|p| p.name == name)
    }
}

/// Settings shared by every run after defaults are resolved.
struct Setup {
    config: ExperimentConfig,
    lattice: BoxLattice,
    margin: usize,
    rule: ProxyRule,
    diagnostics: Vec<String>,
    started: Instant,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let started = Instant::now();
        config.validate()?;
        let mut config = config.clone();
        let mut diagnostics = Vec::new();
        if let Some(w) = near_critical_warning(config.dim, config.p) {
            diagnostics.push(w);
        }
        if config.regime.is_none() {
            config.regime = infer_regime(config.dim, config.p);
        }
        if config.regime == Some(Regime::Subcritical) && config.proxy_rule != ProxyRule::Disabled {
            diagnostics.push("subcritical regime: no cluster is treated as infinite".to_string());
            config.proxy_rule = ProxyRule::Disabled;
        }
        let lattice = BoxLattice::new(config.dim, config.largest_radius())?;
        let margin = config.margin.unwrap_or_else(|| default_margin(&lattice));
        if margin > lattice.radius() {
            return Err(invalid(format!(
                "margin {margin} exceeds the radius {}",
                lattice.radius()
            )));
        }
        config.margin = Some(margin);
        let rule = config.proxy_rule;
        Ok(Self {
            config,
            lattice,
            margin,
            rule,
            diagnostics,
            started,
        })
    }

    fn sigma2(&self) -> f64 {
        self.config.nu.variance()
    }

    fn m(&self) -> f64 {
        self.config.nu.mean()
    }

    fn level(&self) -> f64 {
        self.config.tolerances.level
    }

    fn finish(
        self,
        experiment: &str,
        estimates: Option<PercolationEstimates>,
        predictions: Vec<Prediction>,
        tests: Vec<TestReport>,
        seeds: SeedAudit,
        samples: SampleDump,
        records: Vec<ReplicateRecord>,
    ) -> RunResult {
        RunResult {
            experiment: experiment.to_string(),
            timing: Timing {
                wall_seconds: self.started.elapsed().as_secs_f64(),
                workers: self.config.workers,
            },
            config: ResolvedConfig::Experiment(self.config),
            estimates,
            predictions,
            tests,
            diagnostics: self.diagnostics,
            seeds,
            samples,
            records,
        }
    }
}

/// `Σ_{x∉I} (X(x) - m)` over the whole box.
fn finite_deviation(labeling: &ClusterLabeling, field: &ColorField<'_>, m: f64) -> f64 {
    (0..labeling.cluster_count())
        .filter(|&c| !labeling.is_proxy(c))
        .map(|c| labeling.size(c) as f64 * (field.cluster_color(c) - m))
        .sum()
}

/// Box magnetization, written as `m + Σ (X - m) / |Λ|` so that constant
/// fields give exactly their value.
fn magnetization(labeling: &ClusterLabeling, field: &ColorField<'_>, m: f64) -> f64 {
    let total =
        finite_deviation(labeling, field, m) + labeling.proxy_volume() as f64 * (field.z() - m);
    m + total / labeling.lattice().site_count() as f64
}

fn relative_error(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (value / target - 1.0).abs()
    }
}

fn identically_zero(name: &str, values: &[f64], context: &str) -> TestReport {
    let worst = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    TestReport::at_most(name, worst, 0.0).with_context(context)
}

fn merge_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (v, w) in atoms {
        if w <= 0.0 {
            continue;
        }
        match merged.iter_mut().find(|a| a.0 == v) {
            Some(a) => a.1 += w,
            None => merged.push((v, w)),
        }
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    merged
}

/// Quenched LLN: one graph at the largest radius, one coloring, and the
/// magnetization over nested windows.
pub fn run_quenched_lln(config: &ExperimentConfig) -> Result<RunResult> {
    config.require_mode(Mode::Quenched, "quenched LLN")?;
    if config.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("window radii must be strictly increasing"));
    }
    let setup = Setup::new(config)?;
    let cfg = &setup.config;
    let lat = setup.lattice;
    let (m, sigma2) = (setup.m(), setup.sigma2());

    let graph_seed = cfg.master_seed;
    let labeling = replicate_labeling(&lat, cfg.p, graph_seed, 0, setup.rule)?;
    let field = color_clusters(
        &labeling,
        &cfg.nu,
        replicate_seed(graph_seed, 0),
        StreamTag::Color,
    );
    let z = field.z();

    let mut records = Vec::with_capacity(cfg.radii.len());
    let mut worst_identity = 0.0f64;
    let mut identity_scale = 0.0f64;
    for &k in &cfg.radii {
        let window = lat.inner_window(lat.radius() - k)?;
        let counts = labeling.window_counts(&window);
        let direct: f64 = window.iter().map(|&s| field.at(s)).sum();
        let mut split = 0.0;
        for c in 0..labeling.cluster_count() {
            if !labeling.is_proxy(c) {
                split += counts[c] as f64 * field.cluster_color(c);
            }
        }
        let in_proxy = labeling.infinite_proxy().map_or(0, |c| counts[c]);
        split += z * in_proxy as f64;
        worst_identity = worst_identity.max((split - direct).abs());
        identity_scale += window.iter().map(|&s| field.at(s).abs()).sum::<f64>();

        let dev: f64 = (0..labeling.cluster_count())
            .filter(|&c| !labeling.is_proxy(c))
            .map(|c| counts[c] as f64 * (field.cluster_color(c) - m))
            .sum::<f64>()
            + in_proxy as f64 * (z - m);
        let mut rec = ReplicateRecord::new(0, k, m + dev / window.len() as f64);
        rec.m_n = Some(rec.statistic);
        rec.z = Some(z);
        rec.proxy_volume = Some(in_proxy);
        records.push(rec);
    }

    let est_seed = replicate_seed(cfg.master_seed, ESTIMATION_BATCH);
    let est = estimate_functionals(
        &lat,
        cfg.p,
        cfg.graph_replicates,
        est_seed,
        setup.margin,
        setup.rule,
        cfg.workers,
    )?;
    let theta = est.theta_hat;
    let target = (1.0 - theta) * m + theta * z;
    let terminal = records.last().expect("radii nonempty").statistic;
    let deviation = (terminal - target).abs();

    let full = lat.inner_window(0)?;
    let box_ssd = square_sums(&labeling, &full).per_cluster as f64 / full.len() as f64;
    let theta_var = if est.replicates > 1 {
        est.theta_se.powi(2) * (est.replicates as f64 + 1.0)
    } else {
        0.0
    };
    let tolerance = cfg.tolerances.lln_deviation.unwrap_or_else(|| {
        4.0 * (sigma2 * box_ssd / full.len() as f64 + (z - m).powi(2) * theta_var).sqrt() + 1e-9
    });

    let tests = vec![
        TestReport::at_most("lln-deviation", deviation, tolerance).with_context("quenched-limit"),
        TestReport::at_most(
            "decomposition",
            worst_identity,
            1e-9 * identity_scale.max(1.0),
        )
        .with_context("decomposition-identity"),
    ];
    let predictions = vec![
        Prediction::law("lln-limit", lln_limit_law(&cfg.nu, theta)?),
        Prediction::value("quenched-limit", target),
        Prediction::value("decomposition-identity", 0.0),
    ];
    let seeds = SeedAudit {
        quenched_graph_replicate: Some(0),
        ..SeedAudit::new(cfg.master_seed, &[StreamTag::Graph, StreamTag::Color])
            .batch("graph-and-coloring", graph_seed)
            .batch("estimation", est_seed)
    };
    let values = records.iter().map(|r| r.statistic).collect();
    let samples = SampleDump::new("M_k", "color", values);
    Ok(setup.finish(
        "quenched-lln",
        Some(est),
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

struct AnnealedDraw {
    obs: crate::percolation::GraphObservables,
    finite_dev: f64,
    z: f64,
    m_n: f64,
}

fn annealed_batch(setup: &Setup, seed: u64) -> Result<Vec<AnnealedDraw>> {
    let cfg = &setup.config;
    let lat = setup.lattice;
    let window = lat.inner_window(setup.margin)?;
    let m = setup.m();
    map_replicates(cfg.graph_replicates, cfg.workers, |r| {
        let labeling = replicate_labeling(&lat, cfg.p, seed, r, setup.rule)?;
        let field = color_clusters(
            &labeling,
            &cfg.nu,
            replicate_seed(seed, r),
            StreamTag::Color,
        );
        Ok(AnnealedDraw {
            obs: observe(&labeling, &window)?,
            finite_dev: finite_deviation(&labeling, &field, m),
            z: field.z(),
            m_n: magnetization(&labeling, &field, m),
        })
    })
}

fn draw_record(r: usize, radius: usize, d: &AnnealedDraw, statistic: f64) -> ReplicateRecord {
    let mut rec = ReplicateRecord::new(r as u64, radius, statistic);
    rec.m_n = Some(d.m_n);
    rec.z = Some(d.z);
    rec.proxy_volume = Some(d.obs.proxy_volume);
    rec.k_n = Some(d.obs.cluster_count);
    rec.square_sum_density = Some(d.obs.window_square_sum as f64 / d.obs.window_size as f64);
    rec
}

/// Annealed LLN: fresh (graph, coloring) pairs at the largest radius; the
/// empirical law of `M_n` against the predicted limit law.
pub fn run_annealed_lln(config: &ExperimentConfig) -> Result<RunResult> {
    config.require_mode(Mode::Annealed, "annealed LLN")?;
    let mut setup = Setup::new(config)?;
    if setup.config.radii.len() > 1 {
        setup.diagnostics.push(format!(
            "annealed LLN runs at the largest radius {}",
            setup.lattice.radius()
        ));
    }
    let cfg = setup.config.clone();
    let lat = setup.lattice;
    let (m, sigma2) = (setup.m(), setup.sigma2());
    let draws = annealed_batch(&setup, cfg.master_seed)?;
    let obs: Vec<_> = draws.iter().map(|d| d.obs).collect();
    let est = aggregate_estimates(&obs, setup.margin)?;
    let theta = est.theta_hat;
    let law = lln_limit_law(&cfg.nu, theta)?;
    let values: Vec<f64> = draws.iter().map(|d| d.m_n).collect();

    let mut tests = Vec::new();
    let atoms = match cfg.nu.atoms() {
        Some(nu_atoms) if theta > 0.0 => Some(merge_atoms(
            nu_atoms
                .iter()
                .map(|&(z, w)| ((1.0 - theta) * m + theta * z, w)),
        )),
        Some(_) => Some(vec![(m, 1.0)]),
        None => law.atoms(),
    };
    match atoms {
        Some(atoms) => {
            let bin = if atoms.len() > 1 {
                let gap = atoms
                    .windows(2)
                    .map(|w| w[1].0 - w[0].0)
                    .fold(f64::INFINITY, f64::min);
                0.45 * gap
            } else {
                let spread = (sigma2 * est.chi_f_hat / lat.site_count() as f64).sqrt();
                (6.0 * spread).max(1e-9 * (1.0 + atoms[0].0.abs()))
            };
            let tv = tv_distance_discrete(&empirical_frequencies(&values), &atoms, bin)?;
            tests.push(
                TestReport::at_most("tv-distance", tv, cfg.tolerances.tv).with_context("lln-limit"),
            );

            // Atom locations: mean of M_n within each color class of Z.
            let mut worst = 0.0f64;
            match cfg.nu.atoms() {
                Some(nu_atoms) if theta > 0.0 => {
                    for (z, _) in merge_atoms(nu_atoms) {
                        let group: Vec<f64> = draws
                            .iter()
                            .filter(|d| d.obs.has_proxy && d.z == z)
                            .map(|d| d.m_n)
                            .collect();
                        if !group.is_empty() {
                            let mean = group.iter().sum::<f64>() / group.len() as f64;
                            worst = worst.max((mean - ((1.0 - theta) * m + theta * z)).abs());
                        }
                    }
                }
                _ => {
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    worst = (mean - atoms[0].0).abs();
                }
            }
            tests.push(
                TestReport::at_most("atom-location", worst, cfg.tolerances.atom)
                    .with_context("lln-limit"),
            );
        }
        None => {
            let report = match law.cdf(0.0) {
                Some(_) => {
                    ks_one_sample(&values, |x| law.cdf(x).expect("closed form"), setup.level())?
                }
                None => {
                    let reference = law.sample_n(
                        (20 * values.len()).max(10_000),
                        replicate_seed(cfg.master_seed, REFERENCE_BATCH),
                    );
                    ks_two_sample(&values, &reference, setup.level())?
                }
            };
            tests.push(report.with_context("lln-limit"));
        }
    }

    let records = draws
        .iter()
        .enumerate()
        .map(|(r, d)| draw_record(r, lat.radius(), d, d.m_n))
        .collect();
    let predictions = vec![Prediction::law("lln-limit", law)];
    let seeds = SeedAudit::new(cfg.master_seed, &[StreamTag::Graph, StreamTag::Color])
        .batch("replicates", cfg.master_seed);
    let samples = SampleDump::new("M_n", "color", values);
    Ok(setup.finish(
        "annealed-lln",
        Some(est),
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Quenched CLT: one graph, many colorings, statistic
/// `Σ_{x∈W∖I} (X(x) - m) / √|W|`.
pub fn run_quenched_clt(config: &ExperimentConfig) -> Result<RunResult> {
    config.require_mode(Mode::Quenched, "quenched CLT")?;
    let setup = Setup::new(config)?;
    let cfg = &setup.config;
    let lat = setup.lattice;
    let (m, sigma2) = (setup.m(), setup.sigma2());

    let graph_seed = cfg.master_seed;
    let labeling = replicate_labeling(&lat, cfg.p, graph_seed, 0, setup.rule)?;
    let window = lat.inner_window(setup.margin)?;
    let sums = square_sums(&labeling, &window);
    if !sums.agree() {
        return Err(Error::InvariantViolation(format!(
            "square sums disagree: {} per site, {} per cluster",
            sums.per_site, sums.per_cluster
        )));
    }
    let ssd = sums.per_cluster as f64 / window.len() as f64;
    let counts = labeling.window_counts(&window);
    let finite: Vec<(usize, f64)> = (0..labeling.cluster_count())
        .filter(|&c| !labeling.is_proxy(c) && counts[c] > 0)
        .map(|c| (c, counts[c] as f64))
        .collect();
    let scale = (window.len() as f64).sqrt();

    let values = map_replicates(cfg.color_replicates, cfg.workers, |c| {
        let field = color_clusters(
            &labeling,
            &cfg.nu,
            replicate_seed(graph_seed, c),
            StreamTag::Color,
        );
        Ok(finite
            .iter()
            .map(|&(cl, n)| n * (field.cluster_color(cl) - m))
            .sum::<f64>()
            / scale)
    })?;

    let est_seed = replicate_seed(cfg.master_seed, ESTIMATION_BATCH);
    let est = estimate_functionals(
        &lat,
        cfg.p,
        cfg.graph_replicates,
        est_seed,
        setup.margin,
        setup.rule,
        cfg.workers,
    )?;

    let exact = sigma2 * ssd;
    let asymptotic = sigma2 * est.chi_f_hat;
    let summary = summarize(&values)?;
    let tol = cfg.tolerances;
    let mut tests = Vec::new();
    if exact == 0.0 {
        tests.push(identically_zero(
            "identically-zero",
            &values,
            "exact-variance",
        ));
    } else {
        tests.push(
            TestReport::at_most(
                "exact-variance",
                relative_error(summary.variance, exact),
                tol.exact_variance,
            )
            .with_context("exact-variance"),
        );
        tests.push(
            TestReport::at_most(
                "asymptotic-variance",
                relative_error(summary.variance, asymptotic),
                tol.asymptotic_variance,
            )
            .with_context("asymptotic-variance"),
        );
        tests.push(
            ks_one_sample_gaussian(&values, 0.0, exact, setup.level())?
                .with_context("quenched-clt"),
        );
        if values.len() > 1 {
            tests.push(
                TestReport::at_most(
                    "centering",
                    summary.mean.abs(),
                    tol.centering_se * summary.se_mean,
                )
                .with_context("quenched-clt"),
            );
        }
    }

    let predictions = vec![
        Prediction::value("exact-variance", exact),
        Prediction::value("asymptotic-variance", asymptotic),
        Prediction::law("quenched-clt", LimitLaw::gaussian(0.0, exact)),
    ];
    let records = values
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            let mut rec = ReplicateRecord::new(c as u64, lat.radius(), v);
            rec.square_sum_density = Some(ssd);
            rec
        })
        .collect();
    let seeds = SeedAudit {
        quenched_graph_replicate: Some(0),
        ..SeedAudit::new(cfg.master_seed, &[StreamTag::Graph, StreamTag::Color])
            .batch("graph-and-colorings", graph_seed)
            .batch("estimation", est_seed)
    };
    let samples = SampleDump::new("S_W", "color*sqrt(site)", values);
    Ok(setup.finish(
        "quenched-clt",
        Some(est),
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Annealed CLT: fresh (graph, coloring) pairs;
/// `Q_n = (Σ_Λ X - ((1-θ̂) m + θ̂ Z) |Λ|) / √|Λ|` with the pooled θ̂.
pub fn run_annealed_clt(config: &ExperimentConfig) -> Result<RunResult> {
    config.require_mode(Mode::Annealed, "annealed CLT")?;
    let mut setup = Setup::new(config)?;
    let cfg = setup.config.clone();
    let regime = cfg.regime.ok_or_else(|| {
        invalid("the regime cannot be inferred for this dimension and p; declare it")
    })?;
    let lat = setup.lattice;
    let (m, sigma2) = (setup.m(), setup.sigma2());
    let draws = annealed_batch(&setup, cfg.master_seed)?;
    let obs: Vec<_> = draws.iter().map(|d| d.obs).collect();
    let est = aggregate_estimates(&obs, setup.margin)?;

    let r = draws.len();
    if regime == Regime::Supercritical && 2 * est.proxy_found <= r {
        return Err(Error::RegimeMismatch(format!(
            "supercritical regime declared but a proxy cluster appeared in only {} of {r} replicates",
            est.proxy_found
        )));
    }

    let sites = lat.site_count() as f64;
    let total_volume: u64 = obs.iter().map(|o| o.proxy_volume).sum();
    let theta_pooled = if regime == Regime::Subcritical {
        0.0
    } else {
        total_volume as f64 / (r as f64 * sites)
    };
    let values: Vec<f64> = draws
        .iter()
        .map(|d| {
            let volume_dev = d.obs.proxy_volume as f64 - theta_pooled * sites;
            (d.finite_dev + (d.z - m) * volume_dev) / sites.sqrt()
        })
        .collect();

    let sigma_p2 = match regime {
        Regime::Subcritical => 0.0,
        Regime::Supercritical => cfg.reference_sigma_p2.unwrap_or(est.sigma_p2_hat),
    };
    let law = gamma_law(regime, est.chi_f_hat, sigma2, sigma_p2, &cfg.nu)?;
    let sampler = gamma_sampler(est.chi_f_hat, sigma2, sigma_p2, &cfg.nu)?;
    setup.diagnostics.push(format!(
        "centered with pooled θ̂ = {theta_pooled} from this batch"
    ));

    let mut tests = Vec::new();
    if law.variance() == 0.0 {
        tests.push(identically_zero("identically-zero", &values, "gamma"));
    } else {
        let reference = LimitLaw::Sampled(sampler.clone()).sample_n(
            (20 * values.len()).max(10_000),
            replicate_seed(cfg.master_seed, REFERENCE_BATCH),
        );
        tests
            .push(ks_two_sample(&values, &reference, setup.level())?.with_context("gamma-sampler"));
        if law.cdf(0.0).is_some() {
            let mut report =
                ks_one_sample(&values, |x| law.cdf(x).expect("closed form"), setup.level())?;
            report.name = "ks-closed-form".to_string();
            tests.push(report.with_context("gamma"));
        }
        let summary = summarize(&values)?;
        if let (Some(k), Some(se), Some(pred)) = (
            summary.excess_kurtosis,
            summary.se_excess_kurtosis,
            law.excess_kurtosis(),
        ) {
            tests.push(
                TestReport::at_most(
                    "excess-kurtosis",
                    (k - pred).abs(),
                    cfg.tolerances.centering_se * se,
                )
                .with_context("gamma-excess-kurtosis"),
            );
        }
    }

    let mut predictions = vec![
        Prediction::law("gamma", law.clone()),
        Prediction::law("gamma-sampler", LimitLaw::Sampled(sampler)),
        Prediction::value("theta-pooled", theta_pooled),
    ];
    if let Some(k) = law.excess_kurtosis() {
        predictions.push(Prediction::value("gamma-excess-kurtosis", k));
    }
    let records = draws
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (d, &q))| {
            let mut rec = draw_record(i, lat.radius(), d, q);
            rec.q_n = Some(q);
            rec
        })
        .collect();
    let seeds = SeedAudit::new(
        cfg.master_seed,
        &[StreamTag::Graph, StreamTag::Color, StreamTag::GammaSampler],
    )
    .batch("replicates", cfg.master_seed)
    .batch(
        "reference-draws",
        replicate_seed(cfg.master_seed, REFERENCE_BATCH),
    );
    let samples = SampleDump::new("Q_n", "color*sqrt(site)", values);
    Ok(setup.finish(
        "annealed-clt",
        Some(est),
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Seed of the batch run at one radius of a multi-size experiment.
fn radius_batch_seed(master: u64, radius: usize) -> u64 {
    replicate_seed(master, (1u64 << 32) + radius as u64)
}

/// Infinite-cluster CLT: `(|Λ_n ∩ I| - θ̂ |Λ_n|) / √|Λ_n|` at every radius,
/// against `N(0, σ_p²)` with σ_p² from the largest radius.
pub fn run_cluster_clt(config: &ExperimentConfig) -> Result<RunResult> {
    let mut setup = Setup::new(config)?;
    let cfg = setup.config.clone();
    if cfg.graph_replicates < 2 {
        return Err(invalid(
            "the infinite-cluster CLT needs at least 2 replicates",
        ));
    }
    let mut radii = cfg.radii.clone();
    radii.sort_unstable();
    radii.dedup();

    let mut seeds = SeedAudit::new(cfg.master_seed, &[StreamTag::Graph]);
    struct PerRadius {
        radius: usize,
        volumes: Vec<u64>,
        sigma_p2: (f64, f64),
        statistics: Vec<f64>,
        estimates: PercolationEstimates,
    }
    let mut per_radius = Vec::new();
    for &radius in &radii {
        let lat = BoxLattice::new(cfg.dim, radius)?;
        let margin = setup.margin.min(radius);
        let window = lat.inner_window(margin)?;
        let seed = radius_batch_seed(cfg.master_seed, radius);
        seeds = seeds.batch(&format!("radius-{radius}"), seed);
        let obs = map_replicates(cfg.graph_replicates, cfg.workers, |r| {
            observe(
                &replicate_labeling(&lat, cfg.p, seed, r, setup.rule)?,
                &window,
            )
        })?;
        let volumes: Vec<u64> = obs.iter().map(|o| o.proxy_volume).collect();
        let sites = lat.site_count() as i128;
        let reps = volumes.len() as i128;
        let total: i128 = volumes.iter().map(|&v| v as i128).sum();
        // (R v - Σv) / (R √|Λ|): exact integer centering.
        let denom = reps as f64 * (sites as f64).sqrt();
        let statistics = volumes
            .iter()
            .map(|&v| (reps * v as i128 - total) as f64 / denom)
            .collect();
        per_radius.push(PerRadius {
            radius,
            sigma_p2: sigma_p2_from_volumes(&volumes, sites as u64),
            volumes,
            statistics,
            estimates: aggregate_estimates(&obs, margin)?,
        });
    }

    let largest = per_radius.last().expect("radii nonempty");
    let reference = cfg.reference_sigma_p2.unwrap_or(largest.sigma_p2.0);
    let mut tests = Vec::new();
    let mut predictions = vec![Prediction::law(
        "cluster-clt",
        LimitLaw::gaussian(0.0, reference),
    )];
    for pr in &per_radius {
        predictions.push(Prediction::value(
            &format!("sigma-p2-radius-{}", pr.radius),
            pr.sigma_p2.0,
        ));
        let context = format!("cluster-clt radius {}", pr.radius);
        if reference == 0.0 {
            tests.push(identically_zero(
                &format!("identically-zero-radius-{}", pr.radius),
                &pr.statistics,
                &context,
            ));
        } else {
            let mut report = ks_one_sample_gaussian(&pr.statistics, 0.0, reference, setup.level())?;
            report.name = format!("ks-gaussian-radius-{}", pr.radius);
            tests.push(report.with_context(context));
        }
    }
    for pr in &per_radius[..per_radius.len() - 1] {
        tests.push(
            TestReport::at_most(
                &format!("sigma-p2-agreement-radius-{}", pr.radius),
                relative_error(pr.sigma_p2.0, largest.sigma_p2.0),
                cfg.tolerances.sigma_p2_agreement,
            )
            .with_context(format!("sigma-p2-radius-{}", largest.radius)),
        );
    }
    if largest.estimates.proxy_found == 0 {
        setup
            .diagnostics
            .push("no proxy cluster in any replicate".to_string());
    }

    let mut records = Vec::new();
    let mut values = Vec::new();
    for pr in &per_radius {
        for (r, (&v, &s)) in pr.volumes.iter().zip(&pr.statistics).enumerate() {
            let mut rec = ReplicateRecord::new(r as u64, pr.radius, s);
            rec.proxy_volume = Some(v);
            records.push(rec);
            values.push(s);
        }
    }
    let estimates = Some(largest.estimates);
    let samples = SampleDump::new("I_n", "sqrt(site)", values);
    Ok(setup.finish(
        "cluster-clt",
        estimates,
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Weighted-LLN check: per replicate, the weighted color average over
/// finite clusters and the condition ratio `(Σ α²) k(n) / (Σ α)²`, where
/// `α_i = |C'_n(a_i)|` and `k(n)` counts the finite clusters.
pub fn run_weighted_lln_check(config: &ExperimentConfig) -> Result<RunResult> {
    let mut setup = Setup::new(config)?;
    let cfg = setup.config.clone();
    let lat = setup.lattice;
    let m = setup.m();
    let window = lat.inner_window(setup.margin)?;
    let seed = cfg.master_seed;

    struct Weighted {
        obs: crate::percolation::GraphObservables,
        sum: u64,
        sum_sq: u64,
        k: u64,
        average: Option<f64>,
    }
    let rows = map_replicates(cfg.graph_replicates, cfg.workers, |r| {
        let labeling = replicate_labeling(&lat, cfg.p, seed, r, setup.rule)?;
        let field = color_clusters(
            &labeling,
            &cfg.nu,
            replicate_seed(seed, r),
            StreamTag::Color,
        );
        let (mut sum, mut sum_sq, mut k, mut dev) = (0u64, 0u64, 0u64, 0.0f64);
        for c in (0..labeling.cluster_count()).filter(|&c| !labeling.is_proxy(c)) {
            let a = labeling.size(c) as u64;
            sum += a;
            sum_sq += a * a;
            k += 1;
            dev += a as f64 * (field.cluster_color(c) - m);
        }
        Ok(Weighted {
            obs: observe(&labeling, &window)?,
            sum,
            sum_sq,
            k,
            average: (sum > 0).then(|| m + dev / sum as f64),
        })
    })?;
    let obs: Vec<_> = rows.iter().map(|w| w.obs).collect();
    let est = aggregate_estimates(&obs, setup.margin)?;

    let usable: Vec<&Weighted> = rows.iter().filter(|w| w.sum > 0).collect();
    let mut tests = Vec::new();
    let mut predictions = Vec::new();
    let mut records = Vec::new();
    let mut values = Vec::new();
    if usable.is_empty() {
        setup.diagnostics.push(
            "every site lies in the infinite cluster; weighted-LLN check skipped".to_string(),
        );
    } else {
        if usable.len() < rows.len() {
            setup.diagnostics.push(format!(
                "{} replicates without finite clusters were skipped",
                rows.len() - usable.len()
            ));
        }
        let ratios: Vec<f64> = usable
            .iter()
            .map(|w| w.sum_sq as f64 * w.k as f64 / (w.sum as f64).powi(2))
            .collect();
        let averages: Vec<f64> = usable
            .iter()
            .map(|w| w.average.expect("finite mass"))
            .collect();
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let predicted = est.chi_f_hat * est.kappa_hat / (1.0 - est.theta_hat).powi(2);
        tests.push(
            TestReport::at_most(
                "condition-ratio",
                relative_error(mean_ratio, predicted),
                cfg.tolerances.ratio,
            )
            .with_context("condition-ratio"),
        );
        let avg = summarize(&averages)?;
        // Constant colors leave only rounding in the mean.
        let bound = (cfg.tolerances.mean_se * avg.se_mean).max(1e-12 * m.abs().max(1.0));
        tests.push(
            TestReport::at_most("weighted-average", (avg.mean - m).abs(), bound)
                .with_context("weighted-average"),
        );
        predictions.push(Prediction::value("condition-ratio", predicted));
        predictions.push(Prediction::value("weighted-average", m));
        predictions.push(Prediction::value("condition-ratio-mean", mean_ratio));

        for (r, w) in rows.iter().enumerate() {
            let Some(a) = w.average else { continue };
            let mut rec = ReplicateRecord::new(r as u64, lat.radius(), a);
            rec.k_n = Some(w.k);
            rec.proxy_volume = Some(w.obs.proxy_volume);
            rec.square_sum_density = Some(w.sum_sq as f64 / w.sum as f64);
            records.push(rec);
            values.push(a);
        }
    }
    let seeds = SeedAudit::new(cfg.master_seed, &[StreamTag::Graph, StreamTag::Color])
        .batch("replicates", seed);
    let samples = SampleDump::new("weighted_average", "color", values);
    Ok(setup.finish(
        "weighted-lln",
        Some(est),
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Percolation functionals at the largest radius.
pub fn run_estimate(config: &ExperimentConfig) -> Result<RunResult> {
    let setup = Setup::new(config)?;
    let cfg = &setup.config;
    let lat = setup.lattice;
    let window = lat.inner_window(setup.margin)?;
    let obs = map_replicates(cfg.graph_replicates, cfg.workers, |r| {
        observe(
            &replicate_labeling(&lat, cfg.p, cfg.master_seed, r, setup.rule)?,
            &window,
        )
    })?;
    let est = aggregate_estimates(&obs, setup.margin)?;
    let records = obs
        .iter()
        .enumerate()
        .map(|(r, o)| {
            let mut rec = ReplicateRecord::new(
                r as u64,
                lat.radius(),
                o.window_in_proxy as f64 / o.window_size as f64,
            );
            rec.proxy_volume = Some(o.proxy_volume);
            rec.k_n = Some(o.cluster_count);
            rec.square_sum_density = Some(o.window_square_sum as f64 / o.window_size as f64);
            rec
        })
        .collect::<Vec<_>>();
    let values = records.iter().map(|r| r.statistic).collect();
    let seeds =
        SeedAudit::new(cfg.master_seed, &[StreamTag::Graph]).batch("replicates", cfg.master_seed);
    let samples = SampleDump::new("theta_window", "fraction", values);
    Ok(setup.finish(
        "estimate",
        Some(est),
        Vec::new(),
        Vec::new(),
        seeds,
        samples,
        records,
    ))
}

/// Square-sum identity on `graph_replicates` random configurations, over
/// the full box and the inner window.
pub fn run_identity_check(config: &ExperimentConfig) -> Result<RunResult> {
    let setup = Setup::new(config)?;
    let cfg = &setup.config;
    let lat = setup.lattice;
    let windows = [lat.inner_window(0)?, lat.inner_window(setup.margin)?];
    let violations = map_replicates(cfg.graph_replicates, cfg.workers, |r| {
        let labeling = replicate_labeling(&lat, cfg.p, cfg.master_seed, r, setup.rule)?;
        Ok(windows
            .iter()
            .filter(|w| !square_sums(&labeling, w).agree())
            .count() as u64)
    })?;
    let total: u64 = violations.iter().sum();
    let tests = vec![
        TestReport::at_most("identity-violations", total as f64, 0.0)
            .with_context("square-sum-identity"),
    ];
    let predictions = vec![Prediction::value("square-sum-identity", 0.0)];
    let records = violations
        .iter()
        .enumerate()
        .map(|(r, &v)| ReplicateRecord::new(r as u64, lat.radius(), v as f64))
        .collect::<Vec<_>>();
    let values = violations.iter().map(|&v| v as f64).collect();
    let seeds =
        SeedAudit::new(cfg.master_seed, &[StreamTag::Graph]).batch("replicates", cfg.master_seed);
    let samples = SampleDump::new("violations", "count", values);
    Ok(setup.finish(
        "check-identity",
        None,
        predictions,
        tests,
        seeds,
        samples,
        records,
    ))
}

/// Draws from the annealed fluctuation law and checks them against its
/// closed form.
pub fn run_gamma_sample(config: &GammaSampleConfig) -> Result<RunResult> {
    let started = Instant::now();
    if config.draws == 0 {
        return Err(invalid("draws must be at least 1"));
    }
    let sampler = gamma_sampler(config.chi_f, config.sigma2, config.sigma_p2, &config.nu)?;
    let sampler = match config.regime {
        Regime::Subcritical => SampledLaw::GammaProduct {
            finite_variance: config.chi_f * config.sigma2,
            sigma_p2: 0.0,
            nu: config.nu.clone(),
        },
        Regime::Supercritical => sampler,
    };
    let law = gamma_law(
        config.regime,
        config.chi_f,
        config.sigma2,
        config.sigma_p2,
        &config.nu,
    )?;
    let seed = config.master_seed;
    let values = LimitLaw::Sampled(sampler.clone()).sample_n(config.draws, seed);

    let mut tests = Vec::new();
    if law.variance() == 0.0 {
        tests.push(identically_zero("identically-zero", &values, "gamma"));
    } else {
        if law.cdf(0.0).is_some() {
            let mut report =
                ks_one_sample(&values, |x| law.cdf(x).expect("closed form"), config.level)?;
            report.name = "ks-closed-form".to_string();
            tests.push(report.with_context("gamma"));
        }
        let summary = summarize(&values)?;
        if let (Some(k), Some(se), Some(pred)) = (
            summary.excess_kurtosis,
            summary.se_excess_kurtosis,
            law.excess_kurtosis(),
        ) {
            tests.push(
                TestReport::at_most("excess-kurtosis", (k - pred).abs(), 4.0 * se)
                    .with_context("gamma-excess-kurtosis"),
            );
        }
    }
    let mut predictions = vec![
        Prediction::law("gamma", law.clone()),
        Prediction::law("gamma-sampler", LimitLaw::Sampled(sampler)),
    ];
    if let Some(k) = law.excess_kurtosis() {
        predictions.push(Prediction::value("gamma-excess-kurtosis", k));
    }
    let records = values
        .iter()
        .enumerate()
        .map(|(i, &v)| ReplicateRecord::new(i as u64, 0, v))
        .collect();
    let seeds = SeedAudit::new(seed, &[StreamTag::GammaSampler]).batch("draws", seed);
    Ok(RunResult {
        experiment: "gamma-sample".to_string(),
        config: ResolvedConfig::GammaSample(config.clone()),
        estimates: None,
        predictions,
        tests,
        diagnostics: Vec::new(),
        seeds,
        timing: Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
            workers: 1,
        },
        samples: SampleDump::new("gamma", "color*sqrt(site)", values),
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub offset: Vec<i64>,
    /// Mean of `(X_0 - m)(X_k - m)` with the exact `m`.
    pub covariance: f64,
    pub se: f64,
    pub connect_probability: f64,
    pub connect_se: f64,
    pub replicates: usize,
}

/// Annealed `Cov(X_0, X_k)` from fresh (graph, coloring) pairs.
pub fn annealed_covariance(
    lattice: &BoxLattice,
    p: f64,
    nu: &ColorMeasure,
    offset: &[i64],
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<CovarianceEstimate> {
    check_probability(p)?;
    if replicates < 2 {
        return Err(invalid("covariance needs at least 2 replicates"));
    }
    let target = lattice
        .index_of(offset)
        .ok_or_else(|| invalid(format!("offset {offset:?} lies outside the box")))?;
    let origin = lattice.origin();
    let m = nu.mean();
    let pairs = map_replicates(replicates, workers, |r| {
        let labeling = replicate_labeling(lattice, p, seed, r, ProxyRule::Disabled)?;
        let field = color_clusters(&labeling, nu, replicate_seed(seed, r), StreamTag::Color);
        Ok((
            (field.at(origin) - m) * (field.at(target) - m),
            labeling.same_cluster(origin, target),
        ))
    })?;
    let products: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let hits: Vec<f64> = pairs.iter().map(|p| if p.1 { 1.0 } else { 0.0 }).collect();
    let prod = summarize(&products)?;
    let conn = summarize(&hits)?;
    Ok(CovarianceEstimate {
        offset: offset.to_vec(),
        covariance: prod.mean,
        se: prod.se_mean,
        connect_probability: conn.mean,
        connect_se: conn.se_mean,
        replicates,
    })
}
