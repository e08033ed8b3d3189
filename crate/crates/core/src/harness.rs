//! Config-driven runner behind the `loopsoup` binary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{self, prob_equal, prob_finer, prob_finer_exit};
use crate::coalescent::{cover_and_coalescence_times, CoverRow};
use crate::error::{Error, Result};
use crate::graph::{GraphSpec, WeightedGraph};
use crate::loops::{enumerate_mass, total_mass};
use crate::partition::{for_each_set_partition, Partition};
use crate::percolation::{estimate_theta, kappa_threshold_scan, Boundary};
use crate::permanent::{alpha_permanent_partition_form, alpha_permanent_permutation_form};
use crate::renewal::{gap_law, subordinator_limit_check, RenewalParams};
use crate::rng::{par_replicas, replica_rng};
use crate::sampler::{sample_soup_with, SamplerPlan};
use crate::stats::{bootstrap_interval, ks_p_value, ks_statistic};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_VERIFY_SEED: u64 = 20130401;

const K4_FIXTURE: &str = include_str!("../fixtures/k4.json");
const PATH4_FIXTURE: &str = include_str!("../fixtures/path4.json");
const TWO_VERTEX_FIXTURE: &str = include_str!("../fixtures/two_vertex.json");

#[derive(Debug, Parser)]
#[command(name = "loopsoup", version, about = "Loop soup experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact cluster probabilities on a small graph.
    Exact,
    /// Sample loop soups.
    Sample,
    /// Cross-check exact formulas against each other and against sampling.
    Verify,
    /// Cover and coalescence times of the complete-graph coalescent.
    Kn,
    /// Closed-edge renewal tables on the line and the scaling check.
    Renewal,
    /// Percolation estimates on lattice boxes.
    Perc,
}

/// Graph given inline, by file or by a generator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    Inline { graph: GraphSpec },
    File { path: PathBuf },
    Complete { n: usize, kappa: f64 },
    Path { n: usize, kappa: f64 },
    Cycle { n: usize, kappa: f64 },
    TwoVertex { c: f64, kappa: f64 },
    Fixture { name: String },
}

impl GraphSource {
    pub fn load(&self) -> Result<WeightedGraph> {
        let g = match self {
            GraphSource::Inline { graph } => WeightedGraph::from_spec(graph),
            GraphSource::File { path } => {
                let s = fs::read_to_string(path)?;
                WeightedGraph::from_json(&s)
            }
            GraphSource::Complete { n, kappa } => WeightedGraph::complete(*n, *kappa),
            GraphSource::Path { n, kappa } => WeightedGraph::path(*n, *kappa),
            GraphSource::Cycle { n, kappa } => WeightedGraph::cycle(*n, *kappa),
            GraphSource::TwoVertex { c, kappa } => WeightedGraph::two_vertex(*c, *kappa),
            GraphSource::Fixture { name } => WeightedGraph::from_json(fixture(name)?),
        };
        g.map_err(|e| match e {
            Error::Io(e) => Error::Io(e),
            other => Error::ConfigInvalid(format!("graph: {other}")),
        })
    }
}

pub fn fixture(name: &str) -> Result<&'static str> {
    match name {
        "k4" => Ok(K4_FIXTURE),
        "path4" => Ok(PATH4_FIXTURE),
        "two_vertex" => Ok(TWO_VERTEX_FIXTURE),
        _ => Err(Error::ConfigInvalid(format!("unknown fixture {name}"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub graph: GraphSource,
    pub alphas: Vec<f64>,
    /// Partitions as block lists; all partitions of the vertex set when absent.
    #[serde(default)]
    pub partitions: Option<Vec<Vec<Vec<usize>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub graph: GraphSource,
    pub alpha: f64,
    #[serde(default = "default_eps_tail")]
    pub eps_tail: f64,
    pub replicas: usize,
    pub seed: Option<u64>,
    /// Replicas whose loops are dumped as JSON lines.
    #[serde(default)]
    pub dump: usize,
}

fn default_eps_tail() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub fixtures: Vec<String>,
    pub alphas: Vec<f64>,
    pub replicas: usize,
    pub seed: Option<u64>,
    pub tolerance: f64,
    /// Standard deviations allowed in Monte Carlo checks.
    pub z_max: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            fixtures: vec!["k4".into(), "path4".into(), "two_vertex".into()],
            alphas: vec![0.5, 1.0, 2.0],
            replicas: 20_000,
            seed: Some(DEFAULT_VERIFY_SEED),
            tolerance: 1e-10,
            z_max: 4.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnConfig {
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    pub replicas: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_bootstrap() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalConfig {
    pub kappa: f64,
    pub alpha: f64,
    pub n_max: usize,
    /// Scaling check; skipped when empty.
    #[serde(default)]
    pub s_grid: Vec<f64>,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercConfig {
    pub d: usize,
    pub sides: Vec<usize>,
    pub bc: Boundary,
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub replicas: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub theta_cut: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub steps: usize,
}

/// What a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let s = fs::read_to_string(p)?;
            serde_json::from_str(&s).map(Some).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", p.display())))
        }
    }
}

fn require<T>(cfg: Option<T>, what: &str) -> Result<T> {
    cfg.ok_or_else(|| Error::ConfigInvalid(format!("{what} needs --config")))
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::ConfigInvalid("randomized runs need an explicit seed".into()))
}

/// Hex SHA-256 of the config's JSON form.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let s = serde_json::to_string(cfg).expect("config serializes");
    format!("{:x}", Sha256::digest(s.as_bytes()))
}

struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path, hash: String) -> Result<Outputs> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), hash, files: Vec::new() })
    }

    fn csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(fs::File::create(&path)?);
        writeln!(f, "# loopsoup {VERSION} config_sha256 {}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn json<S: Serialize, C: Serialize>(&mut self, name: &str, config: &C, body: &S) -> Result<()> {
        let path = self.dir.join(name);
        let doc = serde_json::json!({
            "version": VERSION,
            "config_hash": self.hash,
            "config": config,
            "result": body,
        });
        let mut f = BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        f.flush()?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one subcommand. Flags override values from the config file.
pub fn run(cmd: Command, args: &CommonArgs) -> Result<RunReport> {
    match cmd {
        Command::Exact => run_exact(args),
        Command::Sample => run_sample(args),
        Command::Verify => run_verify(args),
        Command::Kn => run_kn(args),
        Command::Renewal => run_renewal(args),
        Command::Perc => run_perc(args),
    }
}

fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    for_each_set_partition(n, |rgs, _| out.push(Partition::from_labels(rgs)));
    out
}

fn block_string(p: &Partition) -> String {
    p.blocks()
        .iter()
        .map(|b| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Serialize)]
struct ExactRow {
    alpha: f64,
    partition: String,
    prob_finer: f64,
    prob_finer_exit: f64,
    prob_equal: Option<f64>,
}

fn run_exact(args: &CommonArgs) -> Result<RunReport> {
    let cfg: ExactConfig = require(read_config(&args.config)?, "exact")?;
    let g = cfg.graph.load()?;
    let parts = match &cfg.partitions {
        Some(ps) => ps
            .iter()
            .map(|b| Partition::from_blocks(g.n(), b).map_err(|e| Error::ConfigInvalid(format!("partition: {e}"))))
            .collect::<Result<Vec<_>>>()?,
        None if g.n() <= 8 => all_partitions(g.n()),
        None => return Err(Error::ConfigInvalid("list partitions explicitly for graphs above 8 vertices".into())),
    };
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    let mut rows = Vec::new();
    for &a in &cfg.alphas {
        for p in &parts {
            rows.push(ExactRow {
                alpha: a,
                partition: block_string(p),
                prob_finer: prob_finer(&g, p, a, None)?,
                prob_finer_exit: prob_finer_exit(&g, p, a)?,
                prob_equal: if g.n() <= 12 { Some(prob_equal(&g, p, a, None)?) } else { None },
            });
        }
    }
    out.csv("exact.csv", &rows)?;
    let all: Vec<usize> = (0..g.n()).collect();
    let mass = total_mass(&g, &all)?;
    out.json("exact.json", &cfg, &serde_json::json!({ "total_mass": mass }))?;
    Ok(RunReport { command: "exact".into(), config_hash: hash, files: out.files, failures: vec![] })
}

#[derive(Serialize)]
struct SampleRow {
    replica: usize,
    loops: usize,
    clusters: usize,
    open_edges: usize,
}

fn run_sample(args: &CommonArgs) -> Result<RunReport> {
    let mut cfg: SampleConfig = require(read_config(&args.config)?, "sample")?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    let seed = require_seed(cfg.seed)?;
    let g = cfg.graph.load()?;
    let plan = SamplerPlan::build(&g, cfg.eps_tail)?;
    let soups = par_replicas(seed, cfg.replicas, |_, rng| sample_soup_with(&plan, cfg.alpha, rng));
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    let mut rows = Vec::new();
    for (i, s) in soups.into_iter().enumerate() {
        let mut s = s?;
        s.seed = seed;
        s.replica = i as u64;
        rows.push(SampleRow { replica: i, loops: s.len(), clusters: s.clusters().num_blocks(), open_edges: s.open_edges().len() });
        if i < cfg.dump {
            let path = out.dir.join(format!("soup_{i}.jsonl"));
            s.write_jsonl(BufWriter::new(fs::File::create(&path)?))?;
            out.files.push(path);
        }
    }
    out.csv("sample.csv", &rows)?;
    out.json(
        "sample.json",
        &cfg,
        &serde_json::json!({
            "l_max": plan.l_max(),
            "total_mass": plan.total_mass(),
            "tail_mass": plan.tail_mass(),
            "tv_bound": plan.tv_bound(cfg.alpha),
        }),
    )?;
    Ok(RunReport { command: "sample".into(), config_hash: hash, files: out.files, failures: vec![] })
}

/// One named check of the verify suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: String, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Dual formulas, normalization, enumeration and Monte Carlo checks on the
/// named fixtures.
pub fn verify_suite(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let seed = require_seed(cfg.seed)?;
    let tol = cfg.tolerance;
    let mut out = Vec::new();
    for (fi, name) in cfg.fixtures.iter().enumerate() {
        let g = WeightedGraph::from_json(fixture(name)?)?;
        let n = g.n();
        let all: Vec<usize> = (0..n).collect();
        let mass = total_mass(&g, &all)?;
        let via_green = crate::linalg::log_det_green(&g, &all)? + g.lambdas().iter().map(|l| l.ln()).sum::<f64>();
        out.push(check(format!("{name}: mass identity"), (mass - via_green).abs() < tol, format!("{mass} vs {via_green}")));
        let l_max = ((7.0 / (n.max(2) as f64).log10()) as usize).min(20);
        let e = enumerate_mass(&g, &all, l_max)?;
        out.push(check(
            format!("{name}: enumerated mass within tail bound"),
            e.value <= mass + tol && mass - e.value <= e.tail_bound + tol,
            format!("enumerated {} total {mass} bound {}", e.value, e.tail_bound),
        ));
        let parts = all_partitions(n);
        for &a in &cfg.alphas {
            let mut worst: f64 = 0.0;
            let mut sum_equal = 0.0;
            for p in &parts {
                worst = worst.max((prob_finer(&g, p, a, None)? - prob_finer_exit(&g, p, a)?).abs());
                sum_equal += prob_equal(&g, p, a, None)?;
            }
            out.push(check(format!("{name}: finer vs exit form, alpha {a}"), worst < tol, format!("max diff {worst:e}")));
            out.push(check(
                format!("{name}: partition law sums to one, alpha {a}"),
                (sum_equal - 1.0).abs() < 1e-9,
                format!("sum {sum_equal}"),
            ));
        }
        // Monte Carlo against the exact semigroup at alpha = 1
        let plan = SamplerPlan::build(&g, 1e-10)?;
        let clusters: Vec<Result<Partition>> =
            par_replicas(crate::rng::derive_seed(seed, fi as u64), cfg.replicas, |_, rng| Ok(sample_soup_with(&plan, 1.0, rng)?.clusters()));
        let clusters = clusters.into_iter().collect::<Result<Vec<_>>>()?;
        let mut worst_z: f64 = 0.0;
        for p in &parts {
            let hits = clusters.iter().filter(|c| c.refines(p)).count();
            let z = crate::stats::binomial_z(hits, cfg.replicas, prob_finer(&g, p, 1.0, None)?).abs();
            worst_z = worst_z.max(z);
        }
        out.push(check(format!("{name}: sampled clusters vs exact"), worst_z < cfg.z_max, format!("max |z| {worst_z:.3}")));
    }
    // closed forms on complete graphs
    for n in 3..=6 {
        let g = WeightedGraph::complete(n, 1.5)?;
        let mut worst: f64 = 0.0;
        for p in all_partitions(n) {
            let a = prob_finer(&g, &p, 0.7, None)?;
            let b = analytics::complete::prob_finer(n, 1.5, 0.7, &p.block_sizes());
            worst = worst.max((a - b).abs());
        }
        out.push(check(format!("K_{n}: closed form vs determinants"), worst < tol, format!("max diff {worst:e}")));
    }
    // permanents: permutation sum against partition sum
    let mut rng = replica_rng(seed, 1 << 40);
    for r in 2..=6 {
        let m: Vec<Vec<f64>> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { 0.0 } else { rand::Rng::gen_range(&mut rng, -1.0..1.0) }).collect())
            .collect();
        let a = alpha_permanent_permutation_form(&m, 0.6)?;
        let b = alpha_permanent_partition_form(&m, 0.6)?;
        out.push(check(format!("permanent forms agree, r {r}"), (a - b).abs() < 1e-12 * (1.0 + a.abs()), format!("{a} vs {b}")));
    }
    Ok(out)
}

fn run_verify(args: &CommonArgs) -> Result<RunReport> {
    let mut cfg: VerifyConfig = read_config(&args.config)?.unwrap_or_default();
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = t;
    }
    let checks = verify_suite(&cfg)?;
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    out.json("verify.json", &cfg, &checks)?;
    let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    for c in &checks {
        log::info!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(first) = failures.first() {
        return Err(Error::VerificationFailed(first.clone()));
    }
    Ok(RunReport { command: "verify".into(), config_hash: hash, files: out.files, failures })
}

#[derive(Serialize)]
struct KnSummary {
    n: usize,
    replicas: usize,
    ks_cover: f64,
    ks_cover_p: f64,
    ks_cover_band: (f64, f64),
    ks_coalescence: f64,
    ks_coalescence_p: f64,
    ks_coalescence_band: (f64, f64),
}

fn run_kn(args: &CommonArgs) -> Result<RunReport> {
    let mut cfg: KnConfig = require(read_config(&args.config)?, "kn")?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    let seed = require_seed(cfg.seed)?;
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    let mut rows: Vec<CoverRow> = Vec::new();
    let mut summary = Vec::new();
    for (i, &n) in cfg.sizes.iter().enumerate() {
        let s = cover_and_coalescence_times(n, cfg.epsilon, cfg.replicas, crate::rng::derive_seed(seed, i as u64))?;
        let t: Vec<f64> = s.rows.iter().map(|r| r.t_norm).collect();
        let tau: Vec<f64> = s.rows.iter().map(|r| r.tau_norm).collect();
        let mut rng = replica_rng(seed, (1 << 32) + i as u64);
        let ks = |x: &[f64]| ks_statistic(x, crate::stats::gumbel_cdf);
        summary.push(KnSummary {
            n,
            replicas: cfg.replicas,
            ks_cover: s.ks_cover,
            ks_cover_p: ks_p_value(s.ks_cover, cfg.replicas),
            ks_cover_band: bootstrap_interval(&t, ks, cfg.bootstrap, 0.95, &mut rng),
            ks_coalescence: s.ks_coalescence,
            ks_coalescence_p: ks_p_value(s.ks_coalescence, cfg.replicas),
            ks_coalescence_band: bootstrap_interval(&tau, ks, cfg.bootstrap, 0.95, &mut rng),
        });
        rows.extend(s.rows.into_iter().map(|mut r| {
            r.seed = seed;
            r
        }));
    }
    out.csv("kn.csv", &rows)?;
    out.json("kn_summary.json", &cfg, &summary)?;
    Ok(RunReport { command: "kn".into(), config_hash: hash, files: out.files, failures: vec![] })
}

#[derive(Serialize)]
struct RenewalRow {
    n: usize,
    q: f64,
    nu: f64,
}

fn run_renewal(args: &CommonArgs) -> Result<RunReport> {
    let cfg: RenewalConfig = require(read_config(&args.config)?, "renewal")?;
    let p = RenewalParams::new(cfg.kappa, cfg.alpha).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let gl = gap_law(&p, cfg.n_max)?;
    let rows: Vec<RenewalRow> = (1..=cfg.n_max)
        .map(|n| RenewalRow { n, q: crate::renewal::conditional_closed_prob(&p, n), nu: gl.nu(n) })
        .collect();
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    out.csv("renewal.csv", &rows)?;
    let limit = if cfg.s_grid.is_empty() || cfg.eps_grid.is_empty() {
        vec![]
    } else {
        subordinator_limit_check(cfg.kappa, cfg.alpha, &cfg.s_grid, &cfg.eps_grid)?
    };
    out.json(
        "renewal.json",
        &cfg,
        &serde_json::json!({
            "closed_edge_prob": crate::renewal::closed_edge_prob(&p),
            "rho": p.rho,
            "gap_deficit": gl.deficit,
            "limit_check": limit,
        }),
    )?;
    Ok(RunReport { command: "renewal".into(), config_hash: hash, files: out.files, failures: vec![] })
}

fn run_perc(args: &CommonArgs) -> Result<RunReport> {
    let mut cfg: PercConfig = require(read_config(&args.config)?, "perc")?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    let seed = require_seed(cfg.seed)?;
    let mut rows = Vec::new();
    for &a in &cfg.alphas {
        for &k in &cfg.kappas {
            rows.extend(estimate_theta(cfg.d, &cfg.sides, cfg.bc, a, k, cfg.replicas, seed)?);
        }
    }
    let hash = config_hash(&cfg);
    let mut out = Outputs::new(&args.out, hash.clone())?;
    out.csv("theta.csv", &rows)?;
    if let Some(sc) = &cfg.scan {
        let side = *cfg.sides.iter().max().ok_or_else(|| Error::ConfigInvalid("no box sides".into()))?;
        let brackets = kappa_threshold_scan(
            cfg.d,
            side,
            &cfg.alphas,
            sc.theta_cut,
            (sc.kappa_min, sc.kappa_max),
            sc.steps,
            true,
            cfg.replicas,
            seed,
        )?;
        out.json("scan.json", &cfg, &brackets)?;
    }
    Ok(RunReport { command: "perc".into(), config_hash: hash, files: out.files, failures: vec![] })
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_) => 2,
        Error::VerificationFailed(_) => 3,
        Error::Io(_) | Error::Csv(_) => 4,
        Error::Json(_) => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_blocks_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"graph": {"kind": "complete", "n": 3, "kappa": 1.0}, "alphas": [1.0], "partitions": [[[0, 1], [1, 2]]]}"#)
            .unwrap();
        let args = CommonArgs { config: Some(cfg), out: dir.path().join("o"), ..Default::default() };
        let e = run(Command::Exact, &args).unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid(_)), "{e}");
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn sample_requires_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"graph": {"kind": "fixture", "name": "k4"}, "alpha": 1.0, "replicas": 3}"#).unwrap();
        let args = CommonArgs { config: Some(cfg), out: dir.path().join("o"), ..Default::default() };
        assert!(matches!(run(Command::Sample, &args), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn fixtures_load() {
        for f in ["k4", "path4", "two_vertex"] {
            WeightedGraph::from_json(fixture(f).unwrap()).unwrap();
        }
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn hash_changes_with_config() {
        let a = VerifyConfig::default();
        let mut b = a.clone();
        b.replicas += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
