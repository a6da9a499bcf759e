//! Bernoulli bond percolation on a box, cluster labeling, and estimators of
//! the percolation functionals (θ, χ^f, κ, σ_p²).

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::map_replicates;
use crate::lattice::BoxLattice;
use crate::rng::{replicate_seed, stream, StreamTag};
use crate::union_find::UnionFind;

/// How the finite-volume stand-in for the infinite cluster is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyRule {
    /// Largest cluster touching the box boundary, ties to the smallest id.
    /// Isolated sites never qualify.
    BoundaryLargest,
    /// No cluster is treated as infinite.
    Disabled,
}

impl std::str::FromStr for ProxyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary-largest" => Ok(ProxyRule::BoundaryLargest),
            "disabled" => Ok(ProxyRule::Disabled),
            other => Err(invalid(format!(
                "unknown proxy rule `{other}` (expected boundary-largest or disabled)"
            ))),
        }
    }
}

/// Default inner-window margin for a box: `ceil(4 ln(side))`, clamped to
/// half the radius so the window keeps a quarter of the box width.
pub fn default_margin(lattice: &BoxLattice) -> usize {
    let m = (4.0 * (lattice.side() as f64).ln()).ceil() as usize;
    m.min(lattice.radius() / 2)
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("probability {p} outside [0, 1]")))
    }
}

/// Near-critical warning for the square lattice, where p_c = 1/2.
pub fn near_critical_warning(dim: usize, p: f64) -> Option<String> {
    (dim == 2 && (p - 0.5).abs() < 0.02).then(|| {
        format!("p = {p} is within 0.02 of the critical point p_c = 1/2; the limit theorems exclude p_c")
    })
}

/// One sampled set of open edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConfig {
    lattice: BoxLattice,
    open: BitVec<u64, Lsb0>,
    p: f64,
    seed: u64,
    stream_tag: StreamTag,
}

impl EdgeConfig {
    /// Configuration with exactly the listed edge indices open.
    pub fn from_open_edges(
        lattice: &BoxLattice,
        open_edges: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut open = bitvec![u64, Lsb0; 0; lattice.edge_count()];
        for e in open_edges {
            if e >= lattice.edge_count() {
                return Err(invalid(format!("edge index {e} out of range")));
            }
            open.set(e, true);
        }
        Ok(Self {
            lattice: *lattice,
            open,
            p: f64::NAN,
            seed: 0,
            stream_tag: StreamTag::Graph,
        })
    }

    pub fn lattice(&self) -> &BoxLattice {
        &self.lattice
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_tag(&self) -> StreamTag {
        self.stream_tag
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.open[edge]
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones()
    }

    /// Open edges as `(lower, upper)` site pairs.
    pub fn open_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.lattice
            .edges()
            .zip(self.open.iter().by_vals())
            .filter_map(|(e, open)| open.then_some(e))
    }
}

/// Opens every edge independently with probability `p`. Each edge consumes
/// one uniform draw, so two configs with the same seed and tag are coupled:
/// raising `p` only ever opens more edges.
pub fn sample_config(
    lattice: &BoxLattice,
    p: f64,
    seed: u64,
    stream_tag: StreamTag,
) -> Result<EdgeConfig> {
    check_probability(p)?;
    let mut rng = stream(seed, stream_tag);
    let mut open = BitVec::<u64, Lsb0>::with_capacity(lattice.edge_count());
    for _ in 0..lattice.edge_count() {
        open.push(rng.random::<f64>() < p);
    }
    Ok(EdgeConfig {
        lattice: *lattice,
        open,
        p,
        seed,
        stream_tag,
    })
}

/// Partition of the box sites into open clusters.
///
/// Cluster ids are dense and ordered by the smallest site index of each
/// cluster, so id order doubles as the canonical cluster order.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    lattice: BoxLattice,
    cluster_id: Vec<u32>,
    sizes: Vec<u32>,
    representatives: Vec<u32>,
    boundary_touching: Vec<bool>,
    infinite_proxy: Option<usize>,
    merges: usize,
}

pub fn label_clusters(config: &EdgeConfig, rule: ProxyRule) -> ClusterLabeling {
    let lat = config.lattice;
    let n = lat.site_count();
    let mut uf = UnionFind::new(n);
    for (u, v) in config.open_edges() {
        uf.union(u, v);
    }

    const UNSET: u32 = u32::MAX;
    let mut root_label = vec![UNSET; n];
    let mut cluster_id = Vec::with_capacity(n);
    let mut sizes: Vec<u32> = Vec::with_capacity(uf.set_count());
    let mut representatives = Vec::with_capacity(uf.set_count());
    let mut boundary_touching = Vec::with_capacity(uf.set_count());
    for site in 0..n {
        let root = uf.find(site);
        let mut label = root_label[root];
        if label == UNSET {
            label = sizes.len() as u32;
            root_label[root] = label;
            sizes.push(0);
            representatives.push(site as u32);
            boundary_touching.push(false);
        }
        let c = label as usize;
        sizes[c] += 1;
        if !boundary_touching[c] && lat.on_boundary(site) {
            boundary_touching[c] = true;
        }
        cluster_id.push(label);
    }

    let infinite_proxy = match rule {
        ProxyRule::Disabled => None,
        ProxyRule::BoundaryLargest => {
            let mut best: Option<usize> = None;
            for c in 0..sizes.len() {
                if boundary_touching[c] && sizes[c] >= 2 && best.is_none_or(|b| sizes[c] > sizes[b])
                {
                    best = Some(c);
                }
            }
            best
        }
    };

    ClusterLabeling {
        lattice: lat,
        cluster_id,
        sizes,
        representatives,
        boundary_touching,
        infinite_proxy,
        merges: uf.merges(),
    }
}

impl ClusterLabeling {
    pub fn lattice(&self) -> &BoxLattice {
        &self.lattice
    }

    #[inline]
    pub fn cluster_of(&self, site: usize) -> usize {
        self.cluster_id[site] as usize
    }

    /// Number of clusters in the box, `k_n`.
    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, cluster: usize) -> usize {
        self.sizes[cluster] as usize
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.sizes.iter().map(|&s| s as usize)
    }

    /// Smallest site index of the cluster.
    pub fn representative(&self, cluster: usize) -> usize {
        self.representatives[cluster] as usize
    }

    pub fn touches_boundary(&self, cluster: usize) -> bool {
        self.boundary_touching[cluster]
    }

    pub fn infinite_proxy(&self) -> Option<usize> {
        self.infinite_proxy
    }

    pub fn is_proxy(&self, cluster: usize) -> bool {
        self.infinite_proxy == Some(cluster)
    }

    pub fn in_proxy(&self, site: usize) -> bool {
        self.is_proxy(self.cluster_of(site))
    }

    /// `|Λ_n ∩ I|`, zero without a proxy.
    pub fn proxy_volume(&self) -> usize {
        self.infinite_proxy.map_or(0, |c| self.size(c))
    }

    /// `|C'(x)|` measured in the full box: zero on the proxy.
    pub fn finite_size_at(&self, site: usize) -> usize {
        let c = self.cluster_of(site);
        if self.is_proxy(c) {
            0
        } else {
            self.size(c)
        }
    }

    /// One representative site `a_i` per finite (non-proxy) cluster.
    pub fn finite_cluster_reps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cluster_count())
            .filter(|&c| !self.is_proxy(c))
            .map(|c| self.representative(c))
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.cluster_id[a] == self.cluster_id[b]
    }

    /// Number of unions that joined distinct clusters, i.e. the rank of the
    /// open edge set. `cluster_count() == site_count - merges()`.
    pub fn merges(&self) -> usize {
        self.merges
    }

    /// Per-cluster counts of window sites, `|A_i ∩ W|`.
    pub fn window_counts(&self, window: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.cluster_count()];
        for &s in window {
            counts[self.cluster_of(s)] += 1;
        }
        counts
    }
}

/// Both sides of the square-sum identity over a window `W`:
/// `Σ_{x∈W} |C'(x) ∩ W|` and `Σ_{finite i} |A_i ∩ W|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareSums {
    pub per_site: u64,
    pub per_cluster: u64,
    pub window_size: u64,
}

impl SquareSums {
    pub fn agree(&self) -> bool {
        self.per_site == self.per_cluster
    }
}

pub fn square_sums(labeling: &ClusterLabeling, window: &[usize]) -> SquareSums {
    let counts = labeling.window_counts(window);
    let per_site = window
        .iter()
        .map(|&x| {
            let c = labeling.cluster_of(x);
            if labeling.is_proxy(c) {
                0
            } else {
                counts[c]
            }
        })
        .sum();
    let per_cluster = counts
        .iter()
        .enumerate()
        .filter(|&(c, _)| !labeling.is_proxy(c))
        .map(|(_, &k)| k * k)
        .sum();
    SquareSums {
        per_site,
        per_cluster,
        window_size: window.len() as u64,
    }
}

fn checked_square_sum(labeling: &ClusterLabeling, window: &[usize]) -> Result<u64> {
    let sums = square_sums(labeling, window);
    if !sums.agree() {
        return Err(Error::InvariantViolation(format!(
            "square-sum identity broken: per-site {} != per-cluster {}",
            sums.per_site, sums.per_cluster
        )));
    }
    Ok(sums.per_site)
}

/// `(1/|W|) Σ_{x∈W} |C'(x) ∩ W|` over the inner window of the given margin,
/// computed per site and per cluster and checked for exact agreement.
pub fn square_sum_density(labeling: &ClusterLabeling, window_margin: usize) -> Result<f64> {
    let window = labeling.lattice().inner_window(window_margin)?;
    let total = checked_square_sum(labeling, &window)?;
    Ok(total as f64 / window.len() as f64)
}

/// Integer observables of one labeled graph, relative to a window `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphObservables {
    pub window_size: u64,
    /// `|W ∩ I|`.
    pub window_in_proxy: u64,
    /// `Σ_{x∈W} |C'(x)|`, clusters measured in the full box.
    pub window_finite_mass: u64,
    /// `Σ_{x∈W} |C'(x) ∩ W|`.
    pub window_square_sum: u64,
    pub cluster_count: u64,
    pub site_count: u64,
    /// `|Λ_n ∩ I|`.
    pub proxy_volume: u64,
    pub has_proxy: bool,
}

pub fn observe(labeling: &ClusterLabeling, window: &[usize]) -> Result<GraphObservables> {
    let window_in_proxy = window.iter().filter(|&&x| labeling.in_proxy(x)).count() as u64;
    let window_finite_mass = window
        .iter()
        .map(|&x| labeling.finite_size_at(x) as u64)
        .sum();
    Ok(GraphObservables {
        window_size: window.len() as u64,
        window_in_proxy,
        window_finite_mass,
        window_square_sum: checked_square_sum(labeling, window)?,
        cluster_count: labeling.cluster_count() as u64,
        site_count: labeling.lattice().site_count() as u64,
        proxy_volume: labeling.proxy_volume() as u64,
        has_proxy: labeling.infinite_proxy().is_some(),
    })
}

/// Samples and labels the graph of one replicate.
pub fn replicate_labeling(
    lattice: &BoxLattice,
    p: f64,
    master_seed: u64,
    replicate: u64,
    rule: ProxyRule,
) -> Result<ClusterLabeling> {
    let config = sample_config(
        lattice,
        p,
        replicate_seed(master_seed, replicate),
        StreamTag::Graph,
    )?;
    Ok(label_clusters(&config, rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationEstimates {
    pub theta_hat: f64,
    pub theta_se: f64,
    pub chi_f_hat: f64,
    pub chi_f_se: f64,
    pub kappa_hat: f64,
    pub kappa_se: f64,
    pub sigma_p2_hat: f64,
    pub sigma_p2_se: f64,
    pub square_sum_density: f64,
    pub square_sum_density_se: f64,
    pub replicates: usize,
    pub margin: usize,
    pub window_size: u64,
    /// Replicates in which a proxy cluster was found.
    pub proxy_found: usize,
}

/// Standard error of the mean of per-replicate values (NaN below two).
fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Sample variance of the proxy volume divided by the site count, with a
/// variance-of-variance standard error.
pub fn sigma_p2_from_volumes(volumes: &[u64], site_count: u64) -> (f64, f64) {
    let n = volumes.len();
    if n < 2 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = volumes.iter().map(|&v| v as f64).sum::<f64>() / nf;
    let dev: Vec<f64> = volumes.iter().map(|&v| v as f64 - mean).collect();
    let s2 = dev.iter().map(|d| d * d).sum::<f64>() / (nf - 1.0);
    let m4 = dev.iter().map(|d| d.powi(4)).sum::<f64>() / nf;
    let var_s2 = if n > 3 {
        ((m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0)
    } else {
        f64::NAN
    };
    let scale = site_count as f64;
    (s2 / scale, var_s2.sqrt() / scale)
}

/// Aggregates per-replicate observables. Means are ratios of integer
/// totals, so degenerate inputs give exact results.
pub fn aggregate_estimates(
    obs: &[GraphObservables],
    margin: usize,
) -> Result<PercolationEstimates> {
    let first = obs
        .first()
        .ok_or_else(|| invalid("at least one replicate is required"))?;
    let r = obs.len() as f64;
    let w = first.window_size as f64;
    let sites = first.site_count as f64;
    let total = |f: fn(&GraphObservables) -> u64| obs.iter().map(f).sum::<u64>() as f64;
    let per = |f: fn(&GraphObservables) -> u64, denom: f64| -> Vec<f64> {
        obs.iter().map(|o| f(o) as f64 / denom).collect()
    };

    let theta_f = |o: &GraphObservables| o.window_in_proxy;
    let chi_f = |o: &GraphObservables| o.window_finite_mass;
    let kappa_f = |o: &GraphObservables| o.cluster_count;
    let ssd_f = |o: &GraphObservables| o.window_square_sum;

    let volumes: Vec<u64> = obs.iter().map(|o| o.proxy_volume).collect();
    let (sigma_p2_hat, sigma_p2_se) = sigma_p2_from_volumes(&volumes, first.site_count);
    let se = |v: Vec<f64>| {
        if obs.len() < 2 {
            f64::NAN
        } else {
            standard_error(&v)
        }
    };

    Ok(PercolationEstimates {
        theta_hat: total(theta_f) / (r * w),
        theta_se: se(per(theta_f, w)),
        chi_f_hat: total(chi_f) / (r * w),
        chi_f_se: se(per(chi_f, w)),
        kappa_hat: total(kappa_f) / (r * sites),
        kappa_se: se(per(kappa_f, sites)),
        sigma_p2_hat,
        sigma_p2_se,
        square_sum_density: total(ssd_f) / (r * w),
        square_sum_density_se: se(per(ssd_f, w)),
        replicates: obs.len(),
        margin,
        window_size: first.window_size,
        proxy_found: obs.iter().filter(|o| o.has_proxy).count(),
    })
}

/// Monte Carlo estimates of θ, χ^f, κ, σ_p² and the square-sum density.
pub fn estimate_functionals(
    lattice: &BoxLattice,
    p: f64,
    replicates: usize,
    seed: u64,
    margin: usize,
    rule: ProxyRule,
    workers: usize,
) -> Result<PercolationEstimates> {
    check_probability(p)?;
    if replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    let window = lattice.inner_window(margin)?;
    let obs = map_replicates(replicates, workers, |r| {
        let labeling = replicate_labeling(lattice, p, seed, r, rule)?;
        observe(&labeling, &window)
    })?;
    aggregate_estimates(&obs, margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaP2Estimate {
    pub value: f64,
    pub se: f64,
    pub replicates: usize,
    pub proxy_found: usize,
    /// Set when no replicate produced a proxy; `value` is then 0.
    pub no_proxy: bool,
}

/// Finite-volume σ_p²: across-config variance of `|Λ_n ∩ I|` over `|Λ_n|`.
pub fn estimate_sigma_p2(
    lattice: &BoxLattice,
    p: f64,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<SigmaP2Estimate> {
    check_probability(p)?;
    if replicates < 2 {
        return Err(invalid("σ_p² needs at least 2 replicates"));
    }
    let volumes = map_replicates(replicates, workers, |r| {
        let labeling = replicate_labeling(lattice, p, seed, r, ProxyRule::BoundaryLargest)?;
        Ok((
            labeling.proxy_volume() as u64,
            labeling.infinite_proxy().is_some(),
        ))
    })?;
    let proxy_found = volumes.iter().filter(|v| v.1).count();
    if proxy_found == 0 {
        return Ok(SigmaP2Estimate {
            value: 0.0,
            se: 0.0,
            replicates,
            proxy_found,
            no_proxy: true,
        });
    }
    let vols: Vec<u64> = volumes.iter().map(|v| v.0).collect();
    let (value, se) = sigma_p2_from_volumes(&vols, lattice.site_count() as u64);
    Ok(SigmaP2Estimate {
        value,
        se,
        replicates,
        proxy_found,
        no_proxy: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityEstimate {
    pub offset: Vec<i64>,
    pub probability: f64,
    pub se: f64,
}

/// Empirical `P(k ∈ C(0))` for each offset `k`.
pub fn connectivity_profile(
    lattice: &BoxLattice,
    p: f64,
    offsets: &[Vec<i64>],
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<ConnectivityEstimate>> {
    check_probability(p)?;
    if replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    let targets: Vec<usize> = offsets
        .iter()
        .map(|k| {
            lattice
                .index_of(k)
                .ok_or_else(|| invalid(format!("offset {k:?} lies outside the box")))
        })
        .collect::<Result<_>>()?;
    let origin = lattice.origin();
    let hits = map_replicates(replicates, workers, |r| {
        let labeling = replicate_labeling(lattice, p, seed, r, ProxyRule::Disabled)?;
        Ok(targets
            .iter()
            .map(|&t| labeling.same_cluster(origin, t))
            .collect::<Vec<bool>>())
    })?;
    let rf = replicates as f64;
    Ok(offsets
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let count = hits.iter().filter(|h| h[i]).count() as f64;
            let prob = count / rf;
            ConnectivityEstimate {
                offset: k.clone(),
                probability: prob,
                se: (prob * (1.0 - prob) / rf).sqrt(),
            }
        })
        .collect())
}
