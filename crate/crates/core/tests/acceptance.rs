//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every criterion executes even when an
//! earlier one fails. The process exits nonzero when a criterion fails that
//! is not listed in `EXPECTED_FAILURES`, or when a listed one passes.

use std::collections::{HashMap, VecDeque};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use divcolor::coloring::ColorMeasure;
use divcolor::harness::{
    annealed_covariance, run_annealed_clt, run_annealed_lln, run_cluster_clt, run_identity_check,
    run_quenched_clt, run_weighted_lln_check, ExperimentConfig, Mode, RunResult,
};
use divcolor::lattice::BoxLattice;
use divcolor::percolation::{
    estimate_functionals, label_clusters, replicate_labeling, square_sums, EdgeConfig, ProxyRule,
};
use divcolor::stats::summarize;
use divcolor::theory::{
    gamma_law, gamma_prime_moment, gamma_sampler, two_point_magnetization, LimitLaw, Regime,
};

/// Criteria known to fail, with the measured reason.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    6,
    "full-box σ_p² carries a 1/n boundary bias: ~0.033 at n=32 vs ~0.025 at n=64",
)];

struct Outcome {
    passed: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn test_passed(result: &RunResult, name: &str) -> bool {
    result.test(name).is_some_and(|t| t.passed())
}

fn statistic(result: &RunResult, name: &str) -> f64 {
    result.test(name).map_or(f64::NAN, |t| t.statistic)
}

fn config(dim: usize, radius: usize, p: f64, nu: ColorMeasure) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(dim, radius, p, nu);
    c.workers = workers();
    c
}

fn pm(alpha: f64) -> ColorMeasure {
    ColorMeasure::plus_minus(alpha).unwrap()
}

fn identity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, p) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        let mut c = config(2, 16, p, pm(0.5));
        c.graph_replicates = 1000;
        c.master_seed = 100 + i as u64;
        let r = run_identity_check(&c).unwrap();
        let violations = statistic(&r, "identity-violations");
        ok &= test_passed(&r, "identity-violations") && r.samples.values.len() == 1000;
        parts.push(format!("p={p}: {violations} violations"));
    }
    outcome(ok, parts.join(", "))
}

fn all_zero(r: &RunResult) -> bool {
    !r.samples.values.is_empty() && r.samples.values.iter().all(|&v| v == 0.0)
}

fn degenerate() -> Outcome {
    let lat = BoxLattice::new(2, 8).unwrap();
    let margin = 2;
    let rule = ProxyRule::BoundaryLargest;
    let e0 = estimate_functionals(&lat, 0.0, 20, 1, margin, rule, workers()).unwrap();
    let e1 = estimate_functionals(&lat, 1.0, 20, 1, margin, rule, workers()).unwrap();
    let sites = lat.site_count() as f64;
    let closed = (e0.theta_hat, e0.chi_f_hat, e0.kappa_hat) == (0.0, 1.0, 1.0)
        && (e1.theta_hat, e1.chi_f_hat, e1.kappa_hat) == (1.0, 0.0, 1.0 / sites);

    let point = ColorMeasure::point_mass(0.3).unwrap();
    let mut q = config(2, 16, 0.3, point.clone());
    q.mode = Mode::Quenched;
    q.color_replicates = 200;
    let quenched = run_quenched_clt(&q).unwrap();

    let mut annealed_ok = true;
    for p in [0.3, 0.8, 1.0] {
        let mut a = config(2, 16, p, point.clone());
        a.graph_replicates = 100;
        let r = run_annealed_clt(&a).unwrap();
        annealed_ok &= all_zero(&r) && test_passed(&r, "identically-zero");
    }

    let mut cluster_ok = true;
    for (p, rule) in [
        (1.0, ProxyRule::BoundaryLargest),
        (0.0, ProxyRule::Disabled),
    ] {
        let mut c = config(2, 16, p, point.clone());
        c.proxy_rule = rule;
        c.graph_replicates = 50;
        let r = run_cluster_clt(&c).unwrap();
        cluster_ok &= all_zero(&r) && r.passed();
    }

    let quenched_ok = all_zero(&quenched) && test_passed(&quenched, "identically-zero");
    outcome(
        closed && quenched_ok && annealed_ok && cluster_ok,
        format!(
            "functionals exact: {closed}; point-mass statistics zero: quenched {quenched_ok}, \
             annealed {annealed_ok}, cluster {cluster_ok}"
        ),
    )
}

/// Connected components by breadth-first search over an explicit edge list.
fn bfs_components(sites: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); sites];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut comp = vec![usize::MAX; sites];
    let mut next = 0;
    for s in 0..sites {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// (cluster count, Σ_x |C(x)|) for one configuration.
fn oracle_counts(sites: usize, open: &[(usize, usize)]) -> (u64, u64) {
    let comp = bfs_components(sites, open);
    let k = comp.iter().max().map_or(0, |&c| c + 1);
    let mut sizes = vec![0u64; k];
    for &c in &comp {
        sizes[c] += 1;
    }
    (k as u64, comp.iter().map(|&c| sizes[c]).sum())
}

/// Nearest-neighbour pairs of {-n..n}^d, built from coordinates.
fn neighbour_pairs(lat: &BoxLattice) -> Vec<(usize, usize)> {
    let n = lat.radius() as i64;
    let mut pairs = Vec::new();
    for s in 0..lat.site_count() {
        let x = lat.site_of(s);
        for axis in 0..lat.dim() {
            if x[axis] < n {
                let mut y = x.clone();
                y[axis] += 1;
                pairs.push((s, lat.index_of(&y).unwrap()));
            }
        }
    }
    pairs
}

fn enumeration() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();

    // d=1, n=1: per-site mean of Σ|C(x)| is 11/6 exactly.
    let line = BoxLattice::new(1, 1).unwrap();
    let line_pairs: Vec<(usize, usize)> = line.edges().collect();
    let mut total = 0u64;
    for mask in 0u32..4 {
        let open: Vec<usize> = (0..2).filter(|e| mask >> e & 1 == 1).collect();
        let cfg = EdgeConfig::from_open_edges(&line, open.iter().copied()).unwrap();
        let sums = square_sums(
            &label_clusters(&cfg, ProxyRule::Disabled),
            &line.inner_window(0).unwrap(),
        );
        let pairs: Vec<_> = open.iter().map(|&e| line_pairs[e]).collect();
        ok &= sums.agree() && sums.per_site == oracle_counts(3, &pairs).1;
        total += sums.per_site;
    }
    // total / (4 configs · 3 sites) == 11/6
    let exact = 6 * total == 11 * 4 * 3;
    ok &= exact;
    parts.push(format!("d=1 enumeration {total}/12 = 11/6: {exact}"));

    // d=2, n=1: 12 edges, 4096 configs.
    let lat = BoxLattice::new(2, 1).unwrap();
    let sites = lat.site_count();
    let pairs = neighbour_pairs(&lat);
    let edge_index: HashMap<(usize, usize), usize> = lat
        .edges()
        .enumerate()
        .map(|(i, (u, v))| ((u.min(v), u.max(v)), i))
        .collect();
    let full = lat.inner_window(0).unwrap();
    let mut per_config = Vec::with_capacity(1 << pairs.len());
    let mut library_agrees = pairs.len() == lat.edge_count();
    for mask in 0u32..(1 << pairs.len()) {
        let open: Vec<(usize, usize)> = (0..pairs.len())
            .filter(|e| mask >> e & 1 == 1)
            .map(|e| pairs[e])
            .collect();
        let (k, sq) = oracle_counts(sites, &open);
        let ids = open.iter().map(|&(u, v)| edge_index[&(u.min(v), u.max(v))]);
        let labeling = label_clusters(
            &EdgeConfig::from_open_edges(&lat, ids).unwrap(),
            ProxyRule::Disabled,
        );
        let sums = square_sums(&labeling, &full);
        library_agrees &=
            labeling.cluster_count() as u64 == k && sums.agree() && sums.per_site == sq;
        per_config.push((open.len() as i32, k as f64, sq as f64));
    }
    ok &= library_agrees;
    parts.push(format!(
        "d=2 labeling matches BFS on all 4096 configs: {library_agrees}"
    ));

    for (i, p) in [0.3f64, 0.5].into_iter().enumerate() {
        let edges = pairs.len() as i32;
        let (mut ek, mut esq) = (0.0, 0.0);
        for &(open, k, sq) in &per_config {
            let w = p.powi(open) * (1.0 - p).powi(edges - open);
            ek += w * k;
            esq += w * sq;
        }
        let seed = 300 + i as u64;
        let (mut ks, mut sqs) = (Vec::new(), Vec::new());
        for r in 0..100_000u64 {
            let labeling = replicate_labeling(&lat, p, seed, r, ProxyRule::Disabled).unwrap();
            ks.push(labeling.cluster_count() as f64);
            sqs.push(square_sums(&labeling, &full).per_site as f64);
        }
        let (sk, ssq) = (summarize(&ks).unwrap(), summarize(&sqs).unwrap());
        let zk = (sk.mean - ek) / sk.se_mean;
        let zsq = (ssq.mean - esq) / ssq.se_mean;
        ok &= zk.abs() < 3.0 && zsq.abs() < 3.0;
        parts.push(format!(
            "p={p}: E[k]={ek:.4} vs {:.4} ({zk:+.2} SE), E[Σ|C|]={esq:.4} vs {:.4} ({zsq:+.2} SE)",
            sk.mean, ssq.mean
        ));
    }
    outcome(ok, parts.join("; "))
}

fn quenched_clt() -> Outcome {
    let mut c = config(2, 64, 0.3, pm(0.5));
    c.mode = Mode::Quenched;
    c.color_replicates = 10_000;
    c.master_seed = 4;
    let r = run_quenched_clt(&c).unwrap();
    let names = ["exact-variance", "asymptotic-variance", "ks-gaussian"];
    let ok = names.iter().all(|n| test_passed(&r, n));
    let ks_p = r
        .test("ks-gaussian")
        .and_then(|t| t.p_value)
        .unwrap_or(f64::NAN);
    outcome(
        ok,
        format!(
            "relative error vs exact {:.4} (≤0.05), vs χ̂^f·σ² {:.4} (≤0.15), KS p={ks_p:.3}",
            statistic(&r, "exact-variance"),
            statistic(&r, "asymptotic-variance"),
        ),
    )
}

fn annealed_lln() -> Outcome {
    let mut c = config(2, 128, 0.7, pm(0.7));
    c.graph_replicates = 200;
    c.master_seed = 5;
    let r = run_annealed_lln(&c).unwrap();
    let theta = r.estimates.unwrap().theta_hat;
    let expected = two_point_magnetization(0.7, theta)
        .unwrap()
        .atoms()
        .unwrap();
    let predicted = r
        .prediction("lln-limit")
        .and_then(|p| p.law.as_ref())
        .and_then(LimitLaw::atoms)
        .unwrap_or_default();
    let same_law = predicted.len() == expected.len()
        && predicted
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    let ok = same_law && test_passed(&r, "tv-distance") && test_passed(&r, "atom-location");
    outcome(
        ok,
        format!(
            "θ̂={theta:.4}, TV {:.4} (≤0.1), worst atom offset {:.4} (≤0.02), law matches two-point form: {same_law}",
            statistic(&r, "tv-distance"),
            statistic(&r, "atom-location"),
        ),
    )
}

fn cluster_clt() -> Outcome {
    let mut c = config(2, 64, 0.7, pm(0.5));
    c.radii = vec![32, 64];
    c.graph_replicates = 500;
    c.master_seed = 6;
    let r = run_cluster_clt(&c).unwrap();
    let value = |n: usize| {
        r.prediction(&format!("sigma-p2-radius-{n}"))
            .and_then(|p| p.value)
            .unwrap_or(f64::NAN)
    };
    let agree = test_passed(&r, "sigma-p2-agreement-radius-32");
    let ks = test_passed(&r, "ks-gaussian-radius-64");
    let ks_p = r
        .test("ks-gaussian-radius-64")
        .and_then(|t| t.p_value)
        .unwrap_or(f64::NAN);
    outcome(
        agree && ks,
        format!(
            "σ̂_p²(32)={:.4}, σ̂_p²(64)={:.4}, relative gap {:.3} (≤0.2: {agree}); KS at n=64 p={ks_p:.3} ({ks})",
            value(32),
            value(64),
            statistic(&r, "sigma-p2-agreement-radius-32"),
        ),
    )
}

fn gaussianity_dichotomy() -> Outcome {
    let symmetric = LimitLaw::Sampled(gamma_sampler(1.0, 1.0, 1.0, &pm(0.5)).unwrap());
    let s = summarize(&symmetric.sample_n(1_000_000, 7)).unwrap();
    let k_sym = s.excess_kurtosis.unwrap();

    let nu = pm(0.3);
    let sigma2 = nu.variance();
    let skewed = LimitLaw::Sampled(gamma_sampler(1.0, sigma2, 3.0, &nu).unwrap());
    let s = summarize(&skewed.sample_n(1_000_000, 8)).unwrap();
    let (k, se) = (s.excess_kurtosis.unwrap(), s.se_excess_kurtosis.unwrap());
    let exact = gamma_law(Regime::Supercritical, 1.0, sigma2, 3.0, &nu)
        .unwrap()
        .excess_kurtosis()
        .unwrap();
    let ok = k_sym.abs() < 0.05 && k.abs() > 5.0 * se && (k - exact).abs() < 3.0 * se;
    outcome(
        ok,
        format!(
            "α=½ kurtosis {k_sym:+.4} (<0.05); α=0.3 kurtosis {k:.4} ± {se:.4} vs mixture {exact:.4} ({:+.2} SE)",
            (k - exact) / se
        ),
    )
}

fn moment_identity() -> Outcome {
    let sigma_p2 = 1.3;
    let mut ok = true;
    let mut parts = Vec::new();
    let measures = [
        ("two-point ½", pm(0.5)),
        ("N(0,1)", ColorMeasure::gaussian(0.0, 1.0).unwrap()),
    ];
    for (i, (label, nu)) in measures.into_iter().enumerate() {
        let draws = LimitLaw::Sampled(gamma_sampler(0.0, 0.0, sigma_p2, &nu).unwrap())
            .sample_n(1_000_000, 20 + i as u64);
        for k in 1..=3u32 {
            let powers: Vec<f64> = draws.iter().map(|x| x.powi(2 * k as i32)).collect();
            let s = summarize(&powers).unwrap();
            let exact = gamma_prime_moment(k, &nu, sigma_p2).unwrap();
            let z = (s.mean - exact) / s.se_mean;
            ok &= z.abs() < 4.0;
            parts.push(format!("{label} k={k}: {z:+.2} SE"));
        }
    }
    outcome(ok, parts.join(", "))
}

fn covariance() -> Outcome {
    let lat = BoxLattice::new(1, 8).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (alpha, p)) in [(0.5, 0.3), (0.3, 0.6)].into_iter().enumerate() {
        let est = annealed_covariance(
            &lat,
            p,
            &pm(alpha),
            &[1],
            100_000,
            900 + i as u64,
            workers(),
        )
        .unwrap();
        let predicted = 4.0 * alpha * (1.0 - alpha) * p;
        let z = (est.covariance - predicted) / est.se;
        ok &= z.abs() < 3.0;
        parts.push(format!(
            "α={alpha}, p={p}: {:.4} vs {predicted:.4} ({z:+.2} SE)",
            est.covariance
        ));
    }
    outcome(ok, parts.join(", "))
}

fn weighted_lln() -> Outcome {
    let mut c = config(2, 64, 0.3, pm(0.5));
    c.master_seed = 10;
    let r = run_weighted_lln_check(&c).unwrap();
    let e = r.estimates.unwrap();
    let predicted = e.chi_f_hat * e.kappa_hat / (1.0 - e.theta_hat).powi(2);
    let reported = r
        .prediction("condition-ratio")
        .and_then(|p| p.value)
        .unwrap_or(f64::NAN);
    let ok = (reported - predicted).abs() <= 1e-12 * predicted
        && test_passed(&r, "condition-ratio")
        && test_passed(&r, "weighted-average");
    outcome(
        ok,
        format!(
            "condition ratio relative error {:.4} (≤0.15) vs χ̂^f·κ̂/(1−θ̂)²={predicted:.4}; \
             weighted average offset {:.2e}",
            statistic(&r, "condition-ratio"),
            statistic(&r, "weighted-average"),
        ),
    )
}

fn strip_timing(report: &str) -> String {
    let mut out = Vec::new();
    let mut inside = false;
    for line in report.lines() {
        if line.starts_with("  \"timing\": {") {
            inside = !line.trim_end().ends_with('}') && !line.trim_end().ends_with("},");
            continue;
        }
        if inside {
            inside = !line.starts_with("  }");
            continue;
        }
        out.push(line);
    }
    out.join("\n")
}

fn run_binary(args: &str, workers: usize) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_divcolor"))
        .args(args.split_whitespace())
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .expect("run divcolor");
    String::from_utf8(out.stdout).expect("utf-8 report")
}

fn determinism() -> Outcome {
    let invocations = [
        "clt --mode annealed --dim 2 --radius 16 --p 0.7 --graph-replicates 200 --seed 11",
        "clt --mode quenched --dim 2 --radius 16 --p 0.3 --color-replicates 500 --seed 12",
        "cluster-clt --dim 2 --radius 8 --radius 16 --p 0.7 --graph-replicates 200 --seed 13",
        "weighted-lln --dim 2 --radius 16 --p 0.3 --graph-replicates 50 --seed 14",
    ];
    let mut ok = true;
    let mut identical = 0;
    for args in invocations {
        let one = run_binary(args, 1);
        let eight = run_binary(args, 8);
        let same = !one.is_empty()
            && one.contains("\"timing\"")
            && strip_timing(&one) == strip_timing(&eight);
        ok &= same;
        identical += same as usize;
    }
    outcome(
        ok,
        format!(
            "{identical}/{} reports byte-identical across 1 and 8 workers",
            invocations.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 11] = [
        (1, "square-sum identity", identity),
        (2, "degenerate exactness", degenerate),
        (3, "enumeration oracle", enumeration),
        (4, "quenched CLT", quenched_clt),
        (5, "annealed LLN two-point", annealed_lln),
        (6, "infinite-cluster CLT", cluster_clt),
        (7, "Gaussianity dichotomy", gaussianity_dichotomy),
        (8, "moment identity", moment_identity),
        (9, "covariance formula", covariance),
        (10, "weighted-LLN condition", weighted_lln),
        (11, "determinism", determinism),
    ];
    let mut unexpected = 0;
    let mut total = Duration::ZERO;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        total += elapsed;
        let expected = EXPECTED_FAILURES.iter().find(|e| e.0 == id);
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id} ({name}) [{:.1}s]: {}",
            elapsed.as_secs_f64(),
            result.detail
        );
        match (result.passed, expected) {
            (false, Some((_, why))) => println!("     known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => {
                println!("     listed as a known failure but passed; update EXPECTED_FAILURES");
                unexpected += 1;
            }
            (true, None) => {}
        }
    }
    println!("acceptance finished in {:.1}s", total.as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected outcome(s)");
        ExitCode::FAILURE
    }
}
