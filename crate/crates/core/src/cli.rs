//! Experiment commands behind the `locinv` binary.
//!
//! Every command writes into `--out-dir` and finishes by writing
//! `manifest.json`, which records the command line, the parsed
//! configuration, SHA-256 hashes of inputs and outputs and the wall time.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    count_entries_above, decay_vs_cut, decay_vs_distance, parse_scaling_csv, scaling_csv, stability_experiment,
    DecayProfile, ScalingModel, ScalingSeries,
};
use crate::error::{Error, Result};
use crate::factor::{factorize_geometric, verify_factorization, FactorConfig, LeafSolver, Method};
use crate::geometry::{cut_distance, IndexGeometry, PartitionTree};
use crate::matrix::market::{read_matrix_market, save_general, MarketMatrix};
use crate::matrix::NormKind;
use crate::refine::{RefineOptions, StopRule};
use crate::systems::{build_lattice, load_overlap, LatticeSpec};

#[derive(Parser, Debug, Serialize)]
#[command(name = "locinv", version, about = "Recursive and localized inverse factorization experiments")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized steps; recorded in the manifest.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Exit with failure if the factorization residual exceeds this.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub fail_above: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a lattice matrix and its coordinates.
    Lattice(LatticeArgs),
    /// Factorize a matrix given with coordinates.
    Factorize(FactorizeArgs),
    /// Decay, count, scaling and stability analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Factorize growing lattices and count entries of Z and K0.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct LatticeArgs {
    #[arg(long)]
    pub dim: usize,
    /// Vertices per axis; a single value is used for every axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub size: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// File stem for `<name>.mtx` and `<name>.xyz`.
    #[arg(long, default_value = "lattice")]
    pub name: String,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Recursive,
    Localized,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Spectral,
    Frobenius,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Spectral => NormKind::Spectral,
            NormArg::Frobenius => NormKind::Frobenius,
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Recursive => Method::Recursive,
            MethodArg::Localized => Method::Localized,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FactorizeArgs {
    /// Symmetric Matrix Market file.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Coordinate file, one `x [y [z]]` line per index.
    #[arg(long)]
    pub coords: PathBuf,
    #[arg(long, value_enum, default_value = "localized")]
    pub method: MethodArg,
    /// Refinement order m.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub leaf_size: usize,
    /// Drop threshold for products; 0 keeps every entry.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "frobenius")]
    pub norm: NormArg,
    /// Stop at this error norm instead of the parameterless rule.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also write the per-level corrections K<l>.mtx.
    #[arg(long)]
    pub corrections: bool,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzeCommand {
    /// Magnitude against distance between indices.
    Decay(MatrixGeometryArgs),
    /// Magnitude against distance to a cut of a partition.
    CutDecay(CutDecayArgs),
    /// Entries with magnitude above a threshold.
    Count(CountArgs),
    /// Least-squares fit of counts from a sweep.
    Scaling(ScalingArgs),
    /// Wilson-matrix stability experiment.
    Stability(StabilityArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct MatrixGeometryArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CutDecayArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub coords: PathBuf,
    /// `partition.json` written by `factorize`.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Tree path of the node whose cut is used.
    #[arg(long, default_value = "0")]
    pub node: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScalingArgs {
    /// CSV with `n,count,threshold` rows.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_model)]
    pub model: ScalingModel,
}

fn parse_model(s: &str) -> std::result::Result<ScalingModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_enum, default_value = "localized")]
    pub method: MethodArg,
    #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-8")]
    pub thresholds: Vec<f64>,
}

/// Lattice parameters of the benchmark systems and their size ladders.
pub fn benchmark_ladder(dim: usize) -> Result<(Vec<usize>, f64)> {
    match dim {
        1 => Ok(((3..=9).map(|k| 1 << k).collect(), 0.25)),
        2 => Ok(((2..=6).map(|k| 1 << k).collect(), 0.05)),
        3 => Ok(((1..=4).map(|k| 1 << k).collect(), 0.01)),
        d => Err(Error::InvalidArgument(format!("lattice dimension {d} not in 1..=3"))),
    }
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_time_s: f64,
    pub status: String,
    /// Command-specific results, e.g. the final residual.
    pub summary: Value,
}

/// Outcome of one command.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: RunManifest,
    /// False when the residual exceeded `--fail-above`.
    pub passed: bool,
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Default)]
struct Files {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Files {
    fn input(&mut self, p: &Path) -> PathBuf {
        self.inputs.push(p.to_path_buf());
        p.to_path_buf()
    }

    fn output(&mut self, dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn records(paths: &[PathBuf]) -> Vec<FileRecord> {
        paths
            .iter()
            .filter(|p| p.exists())
            .map(|p| FileRecord {
                path: p.clone(),
                sha256: sha256_file(p).unwrap_or_default(),
            })
            .collect()
    }
}

struct Report {
    summary: Value,
    passed: bool,
}

/// Parse `args` (including the program name) and run the command.
pub fn run_from<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    run(&cli, command_line)
}

/// Run a parsed command line. `manifest.json` is written even when the
/// command fails; the error is returned after that.
pub fn run(cli: &Cli, command_line: Vec<String>) -> Result<Outcome> {
    fs::create_dir_all(&cli.out_dir)?;
    let start = Instant::now();
    let mut files = Files::default();
    let result = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| dispatch(cli, &mut files)),
        None => dispatch(cli, &mut files),
    };
    let manifest_path = cli.out_dir.join("manifest.json");
    let (status, summary, passed) = match &result {
        Ok(r) if r.passed => ("ok".to_string(), r.summary.clone(), true),
        Ok(r) => ("residual above --fail-above".to_string(), r.summary.clone(), false),
        Err(e) => (format!("error: {e}"), Value::Null, false),
    };
    let manifest = RunManifest {
        command_line,
        config: serde_json::to_value(cli)?,
        inputs: Files::records(&files.inputs),
        outputs: Files::records(&files.outputs),
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
        summary,
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    result?;
    Ok(Outcome { manifest, passed })
}

fn dispatch(cli: &Cli, files: &mut Files) -> Result<Report> {
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Lattice(a) => cmd_lattice(a, out, files),
        Command::Factorize(a) => cmd_factorize(a, cli.fail_above, out, files),
        Command::Analyze(a) => cmd_analyze(a, out, files),
        Command::Sweep(a) => cmd_sweep(a, out, files),
    }
}

fn ok(summary: Value) -> Result<Report> {
    Ok(Report { summary, passed: true })
}

fn cmd_lattice(a: &LatticeArgs, out: &Path, files: &mut Files) -> Result<Report> {
    let extents = if a.size.len() == 1 { vec![a.size[0]; a.dim] } else { a.size.clone() };
    let spec = LatticeSpec {
        dim: a.dim,
        extents,
        alpha: a.alpha,
        beta: a.beta,
    };
    let sys = build_lattice(&spec)?;
    let m = files.output(out, &format!("{}.mtx", a.name));
    let c = files.output(out, &format!("{}.xyz", a.name));
    sys.save(&m, &c)?;
    ok(json!({ "n": sys.n(), "nnz": sys.matrix.nnz(), "min_eigenvalue": spec.min_eigenvalue() }))
}

fn cmd_factorize(a: &FactorizeArgs, fail_above: f64, out: &Path, files: &mut Files) -> Result<Report> {
    let sys = load_overlap(&files.input(&a.matrix), &files.input(&a.coords))?;
    let mut cfg = FactorConfig::new(a.method.into())
        .with_leaf_size(a.leaf_size)
        .with_corrections(a.corrections)
        .with_refine(RefineOptions {
            m: a.order,
            norm: a.norm.into(),
            stop: a.epsilon.map_or(StopRule::Parameterless, StopRule::Threshold),
            threshold: a.threshold,
            ..Default::default()
        });
    if a.leaf_size == 1 {
        cfg.leaf_solver = LeafSolver::ScalarRsqrt;
    }
    let run = factorize_geometric(&sys.matrix, &sys.geometry, &cfg)?;
    let residual = verify_factorization(&sys.matrix, &run.result.z, NormKind::Frobenius)?;

    save_general(&files.output(out, "Z.mtx"), &run.result.z)?;
    fs::write(files.output(out, "partition.json"), serde_json::to_string_pretty(&run.tree.to_json())?)?;
    let convention = match cfg.method {
        Method::Localized => "sum of the updates M_i at each node",
        Method::Recursive => "Z_after - Z_before at each node (convention, not part of the method)",
    };
    let trace = json!({
        "method": cfg.method,
        "order": a.order,
        "leaf_size": a.leaf_size,
        "threshold": a.threshold,
        "norm": cfg.refine.norm,
        "residual_frobenius": residual,
        "correction_convention": convention,
        "nodes": run.result.traces,
    });
    fs::write(files.output(out, "trace.json"), serde_json::to_string_pretty(&trace)?)?;
    if let Some(k) = &run.result.corrections {
        for (l, kl) in k.levels.iter().enumerate() {
            save_general(&files.output(out, &format!("K{l}.mtx")), kl)?;
        }
    }
    println!("residual ||I - Z*SZ||_F = {residual:.6e}");
    Ok(Report {
        summary: json!({
            "n": sys.n(),
            "residual_frobenius": residual,
            "iterations": run.result.total_iterations(),
            "nnz_z": run.result.z.nnz(),
        }),
        passed: residual <= fail_above,
    })
}

enum AnyMatrix {
    Symmetric(crate::matrix::HermMatrix),
    General(crate::matrix::GeneralMatrix),
}

fn read_any(path: &Path) -> Result<AnyMatrix> {
    Ok(match read_matrix_market(path)? {
        MarketMatrix::Symmetric(h) => AnyMatrix::Symmetric(h),
        MarketMatrix::General(g) => AnyMatrix::General(g),
    })
}

fn envelope_summary(p: &DecayProfile) -> Value {
    match p.envelope_fit(0.0, f64::INFINITY) {
        Ok(f) => json!({ "samples": p.len(), "slope": f.slope, "r2": f.r2 }),
        Err(_) => json!({ "samples": p.len() }),
    }
}

fn cmd_analyze(a: &AnalyzeCommand, out: &Path, files: &mut Files) -> Result<Report> {
    match a {
        AnalyzeCommand::Decay(a) => {
            let m = read_any(&files.input(&a.matrix))?;
            let g = IndexGeometry::read(&files.input(&a.coords))?;
            let p = match &m {
                AnyMatrix::Symmetric(h) => decay_vs_distance(h, &g)?,
                AnyMatrix::General(z) => decay_vs_distance(z, &g)?,
            };
            p.write_csv(&files.output(out, "decay.csv"))?;
            ok(envelope_summary(&p))
        }
        AnalyzeCommand::CutDecay(a) => {
            let part = a
                .partition
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("cut-decay needs --partition".into()))?;
            let tree = PartitionTree::from_json(&serde_json::from_str(&fs::read_to_string(files.input(part))?)?)?;
            let id = tree
                .nodes()
                .iter()
                .position(|n| n.path == a.node)
                .ok_or_else(|| Error::InvalidArgument(format!("no partition node `{}`", a.node)))?;
            let (side_a, side_c) = tree
                .split(id)
                .ok_or_else(|| Error::InvalidArgument(format!("partition node `{}` is a leaf", a.node)))?;
            let g = IndexGeometry::read(&files.input(&a.coords))?;
            let m = read_any(&files.input(&a.matrix))?;
            let cut = cut_distance(&g, side_a, side_c)?;
            let p = match &m {
                AnyMatrix::Symmetric(h) => decay_vs_cut(h, &cut)?,
                AnyMatrix::General(z) => decay_vs_cut(z, &cut)?,
            };
            p.write_csv(&files.output(out, "cut_decay.csv"))?;
            ok(envelope_summary(&p))
        }
        AnalyzeCommand::Count(a) => {
            let m = read_any(&files.input(&a.matrix))?;
            let (n, count) = match &m {
                AnyMatrix::Symmetric(h) => (h.n(), count_entries_above(h, a.threshold)?),
                AnyMatrix::General(z) => (z.rows(), count_entries_above(z, a.threshold)?),
            };
            let series = [ScalingSeries {
                threshold: a.threshold,
                points: vec![(n, count)],
            }];
            fs::write(files.output(out, "count.csv"), scaling_csv(&series))?;
            println!("{count} entries above {:e}", a.threshold);
            ok(json!({ "n": n, "count": count, "threshold": a.threshold }))
        }
        AnalyzeCommand::Scaling(a) => {
            let input = files.input(&a.input);
            let series = parse_scaling_csv(&fs::read_to_string(&input)?, &input)?;
            let mut fits = Vec::new();
            for s in &series {
                let f = s.fit(a.model)?;
                println!(
                    "threshold {:e}: {} R2 = {:.6}, coefficients {:?}",
                    s.threshold,
                    a.model.name(),
                    f.r2,
                    f.coefficients
                );
                fits.push(json!({
                    "threshold": s.threshold,
                    "model": f.model,
                    "coefficients": f.coefficients,
                    "r2": f.r2,
                    "rss": f.rss,
                }));
            }
            let fits = Value::Array(fits);
            fs::write(files.output(out, "scaling_fit.json"), serde_json::to_string_pretty(&fits)?)?;
            ok(fits)
        }
        AnalyzeCommand::Stability(a) => {
            let r = stability_experiment(a.iters)?;
            r.write_csv(&files.output(out, "stability.csv"))?;
            ok(json!({ "rows": r.rows.len() }))
        }
    }
}

fn cmd_sweep(a: &SweepArgs, out: &Path, files: &mut Files) -> Result<Report> {
    let (sides, beta) = benchmark_ladder(a.dim)?;
    if a.thresholds.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::InvalidArgument("thresholds must be nonnegative".into()));
    }
    let mut z_series: Vec<ScalingSeries> = a
        .thresholds
        .iter()
        .map(|&t| ScalingSeries {
            threshold: t,
            points: Vec::new(),
        })
        .collect();
    let mut k_series = z_series.clone();
    for side in sides {
        let sys = build_lattice(&LatticeSpec::cube(a.dim, side, 1.0, beta))?;
        let cfg = FactorConfig::new(a.method.into()).with_corrections(true);
        let run = factorize_geometric(&sys.matrix, &sys.geometry, &cfg)?.result;
        let k0 = &run.corrections.as_ref().ok_or(Error::CaptureDisabled)?.levels[0];
        for (zs, ks) in z_series.iter_mut().zip(k_series.iter_mut()) {
            zs.points.push((sys.n(), count_entries_above(&run.z, zs.threshold)?));
            ks.points.push((sys.n(), count_entries_above(k0, ks.threshold)?));
        }
        println!("n = {:6}: nnz(Z) = {}", sys.n(), run.z.nnz());
    }
    fs::write(files.output(out, "sweep_Z.csv"), scaling_csv(&z_series))?;
    fs::write(files.output(out, "sweep_K0.csv"), scaling_csv(&k_series))?;
    ok(json!({ "Z": z_series, "K0": k_series }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladders() {
        assert_eq!(benchmark_ladder(1).unwrap().0, vec![8, 16, 32, 64, 128, 256, 512]);
        assert_eq!(benchmark_ladder(2).unwrap().0, vec![4, 8, 16, 32, 64]);
        assert_eq!(benchmark_ladder(3).unwrap().0, vec![2, 4, 8, 16]);
        assert!(benchmark_ladder(4).is_err());
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "locinv", "--out-dir", "x", "factorize", "--matrix", "a.mtx", "--coords", "a.xyz", "--method", "recursive",
            "--order", "2", "--norm", "spectral", "--corrections",
        ])
        .unwrap();
        let Command::Factorize(f) = cli.command else { panic!() };
        assert!(matches!(f.method, MethodArg::Recursive));
        assert_eq!(f.order, 2);
        assert!(f.corrections);
        assert_eq!(cli.seed, 42);
        assert_eq!(cli.fail_above, 1e-6);
        let cli = Cli::try_parse_from(["locinv", "lattice", "--dim", "3", "--size", "16,16,16", "--beta", "0.01"]).unwrap();
        let Command::Lattice(l) = cli.command else { panic!() };
        assert_eq!(l.size, vec![16, 16, 16]);
        assert!(Cli::try_parse_from(["locinv", "analyze", "scaling", "--input", "x", "--model", "cubic"]).is_err());
    }
}
