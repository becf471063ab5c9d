//! Command-line interface: sampling, scoring, tail estimation, rate bounds,
//! verification suites, L-calibration, and SVG rendering.
//!
//! Every stochastic command takes an explicit `--seed` (there is no
//! wall-clock default) and produces byte-identical artifacts for identical
//! arguments, independent of the worker count. Estimates are printed as
//! JSON lines on stdout; errors go to stderr as JSON records.
//!
//! Exit codes: 0 success, 1 parameter error, 2 rare-event exhaustion,
//! 3 verification violation.

mod svg;

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use lowtail::entropy::rate_upper_bound;
use lowtail::error::Error;
use lowtail::geometry::{sample_poisson, to_text, BoxWindow, PointConfig, RngStream};
use lowtail::graphs::{knn_graph, rng_graph, voronoi_cell};
use lowtail::lemmas::{run_suites, SuiteParams, SUITE_NAMES};
use lowtail::parallel::with_workers;
use lowtail::scores::{h_n, score_all, ScoreKind, ScoreSpec};
use lowtail::sprinkling::{regularity_trial, RadiusKind};
use lowtail::stabilization::{cone_cover_2d, stab_radius_voronoi};
use lowtail::tails::{conditional_sample, estimate_tail, rate_curve, sample_h_values, TailEstimate};

#[derive(Parser)]
#[command(
    name = "lowtail",
    version,
    about = "Score functionals of Poisson point processes: sampling, lower-tail Monte Carlo, rate bounds, and lemma verification"
)]
struct Cli {
    /// Worker threads for trial loops (default: all cores; results do not
    /// depend on this)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Defaults file with `key = value` lines; explicit flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Poisson configuration and print or save it
    Sample(SampleArgs),
    /// Sample one configuration and evaluate a score at every window point
    Score(ScoreArgs),
    /// Estimate the lower-tail probability P(H_n < a)
    Tail(TailArgs),
    /// Tail estimates along a list of window sides
    RateCurve(RateCurveArgs),
    /// Entropy upper bound on the rate at level a over the Poisson family
    RateBound(RateBoundArgs),
    /// Run the verification suites; nonzero exit on any violation
    Verify(VerifyArgs),
    /// Render a typical (and optionally a conditioned) realization to SVG
    Render(RenderArgs),
    /// Sweep the grid constant L in the regularity construction
    CalibrateL(CalibrateArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Window side length n (the box Q_n)
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `json` or `text` (line-oriented)
    #[arg(long)]
    format: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Score spec string, e.g. `rgg:alpha=0,t=1` or `knn:k=2,alpha=1,mode=undirected;cap=5`
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the full per-point scores here (summary always goes to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TailArgs {
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use P(H_n <= a) instead of the strict P(H_n < a)
    #[arg(long)]
    non_strict: bool,
    /// CSV output file (created or overwritten)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RateCurveArgs {
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// Comma-separated window sides, e.g. `4,6,8`
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    /// Trials per window side
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RateBoundArgs {
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// Lower end of the intensity bracket
    #[arg(long)]
    lo: Option<f64>,
    /// Upper end of the intensity bracket
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Trials per Palm-mean estimate
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of `sampling`, `lemmas`, `events`, `all`
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scoring box side for sampled configurations
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Also write the reports here as JSON lines
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also render a realization with H_n below this fraction of the
    /// typical level (e.g. 0.75)
    #[arg(long)]
    conditioned: Option<f64>,
    /// Explicit level a for the conditioned render (overrides the pilot)
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    max_attempts: Option<u64>,
    /// Output path prefix; files are `<out>_typical.svg` and
    /// `<out>_conditioned.svg`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Scoring box side
    #[arg(long)]
    n: Option<f64>,
    /// Stabilization threshold M
    #[arg(long)]
    m: Option<f64>,
    /// Comma-separated L values, e.g. `4,6,8,12,16`
    #[arg(long)]
    l_list: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let defaults = match Defaults::load(cli.config.as_deref()) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    let workers = cli.workers.or(defaults.get("workers").ok().flatten());
    let outcome = with_workers(workers, || run(cli.command, &defaults));
    match outcome {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let (kind, code) = match e {
        Error::Exhausted { .. } => ("rare_event_exhaustion", 2),
        _ => ("parameter_error", 1),
    };
    let mut record = serde_json::json!({
        "error": kind,
        "message": e.to_string(),
    });
    if let Error::Exhausted {
        attempts, best_h, ..
    } = e
    {
        record["attempts"] = (*attempts).into();
        record["best_h"] = (*best_h).into();
    }
    eprintln!("{record}");
    ExitCode::from(code)
}

/// Fallback values from a `key = value` file.
struct Defaults(HashMap<String, String>);

impl Defaults {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Format(format!("config line `{line}` is not `key = value`"))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Format(format!("config value `{raw}` for `{key}`"))),
        }
    }
}

fn resolve<T: FromStr>(
    flag: Option<T>,
    defaults: &Defaults,
    key: &str,
) -> Result<Option<T>, Error> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => defaults.get(key),
    }
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Parameter(format!("missing required parameter `{key}`")))
}

fn parse_list(raw: &str) -> Result<Vec<f64>, Error> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("bad list entry `{s}`")))
        })
        .collect()
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn tail_csv(estimates: &[TailEstimate]) -> String {
    let mut csv = String::from("n,a,trials,hits,p_hat,ci_lo,ci_hi,rate\n");
    for e in estimates {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.n,
            e.a,
            e.trials,
            e.hits,
            e.p_hat,
            e.ci95.0,
            e.ci95.1,
            e.empirical_rate.map(|r| r.to_string()).unwrap_or_default()
        ));
    }
    csv
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let line =
        serde_json::to_string(value).map_err(|e| Error::Format(format!("serialization: {e}")))?;
    println!("{line}");
    Ok(())
}

fn run(command: Command, d: &Defaults) -> Result<ExitCode, Error> {
    match command {
        Command::Sample(args) => {
            let n = require(resolve(args.n, d, "n")?, "n")?;
            let intensity = resolve(args.intensity, d, "intensity")?.unwrap_or(1.0);
            let dim = resolve(args.dim, d, "dim")?.unwrap_or(2);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let format = resolve(args.format, d, "format")?.unwrap_or_else(|| "json".into());
            let window = BoxWindow::centered(dim, n)?;
            let cfg = sample_poisson(intensity, &window, RngStream::new(seed))?;
            let content = match format.as_str() {
                "text" => to_text(&cfg)?,
                "json" => {
                    let mut s =
                        serde_json::to_string(&cfg).map_err(|e| Error::Format(e.to_string()))?;
                    s.push('\n');
                    s
                }
                other => {
                    return Err(Error::Parameter(format!(
                        "unknown format `{other}` (json|text)"
                    )))
                }
            };
            write_or_print(args.out.as_deref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Score(args) => {
            let spec: ScoreSpec = require(resolve(args.spec, d, "spec")?, "spec")?.parse()?;
            let n = require(resolve(args.n, d, "n")?, "n")?;
            let margin = resolve(args.margin, d, "margin")?.unwrap_or(0.0);
            let dim = resolve(args.dim, d, "dim")?.unwrap_or(2);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let sampling = BoxWindow::centered(dim, n + 2.0 * margin)?;
            let scoring = BoxWindow::centered(dim, n)?;
            let cfg = sample_poisson(1.0, &sampling, RngStream::new(seed))?;
            let scored = score_all(&spec, cfg, &scoring)?;
            json_line(&serde_json::json!({
                "spec": spec.to_string(),
                "n": n,
                "margin": margin,
                "seed": seed,
                "points_scored": scored.scores.len(),
                "flagged": scored.flagged_count(),
                "h_n": h_n(&scored),
            }))?;
            if let Some(path) = args.out.as_deref() {
                let full =
                    serde_json::to_string(&scored).map_err(|e| Error::Format(e.to_string()))?;
                write_or_print(Some(path), &(full + "\n"))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Tail(args) => {
            let spec: ScoreSpec = require(resolve(args.spec, d, "spec")?, "spec")?.parse()?;
            let n = require(resolve(args.n, d, "n")?, "n")?;
            let a = require(resolve(args.a, d, "a")?, "a")?;
            let margin = resolve(args.margin, d, "margin")?.unwrap_or(3.0);
            let trials = require(resolve(args.trials, d, "trials")?, "trials")?;
            let dim = resolve(args.dim, d, "dim")?.unwrap_or(2);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let est = estimate_tail(
                &spec,
                n,
                dim,
                a,
                margin,
                trials,
                RngStream::new(seed),
                !args.non_strict,
            )?;
            json_line(&est)?;
            if let Some(csv) = args.csv.as_deref() {
                write_or_print(Some(csv), &tail_csv(std::slice::from_ref(&est)))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::RateCurve(args) => {
            let spec: ScoreSpec = require(resolve(args.spec, d, "spec")?, "spec")?.parse()?;
            let a = require(resolve(args.a, d, "a")?, "a")?;
            let n_list = parse_list(&require(resolve(args.n_list, d, "n_list")?, "n-list")?)?;
            let margin = resolve(args.margin, d, "margin")?.unwrap_or(3.0);
            let trials = require(resolve(args.trials, d, "trials")?, "trials")?;
            let dim = resolve(args.dim, d, "dim")?.unwrap_or(2);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let estimates =
                rate_curve(&spec, a, &n_list, dim, margin, trials, RngStream::new(seed))?;
            for e in &estimates {
                json_line(e)?;
            }
            if let Some(csv) = args.csv.as_deref() {
                write_or_print(Some(csv), &tail_csv(&estimates))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::RateBound(args) => {
            let spec: ScoreSpec = require(resolve(args.spec, d, "spec")?, "spec")?.parse()?;
            let a = require(resolve(args.a, d, "a")?, "a")?;
            let lo = require(resolve(args.lo, d, "lo")?, "lo")?;
            let hi = require(resolve(args.hi, d, "hi")?, "hi")?;
            let margin = resolve(args.margin, d, "margin")?.unwrap_or(3.0);
            let trials = resolve(args.trials, d, "trials")?.unwrap_or(4000);
            let dim = resolve(args.dim, d, "dim")?.unwrap_or(2);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let bound =
                rate_upper_bound(&spec, a, (lo, hi), dim, margin, trials, RngStream::new(seed))?;
            json_line(&bound)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify(args) => {
            let suite = resolve(args.suite, d, "suite")?.unwrap_or_else(|| "all".into());
            if !SUITE_NAMES.contains(&suite.as_str()) {
                return Err(Error::Parameter(format!(
                    "unknown suite `{suite}` (expected one of {SUITE_NAMES:?})"
                )));
            }
            let trials = resolve(args.trials, d, "trials")?.unwrap_or(1000);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let mut params = SuiteParams::new(trials, RngStream::new(seed));
            if let Some(side) = resolve(args.side, d, "side")? {
                params.side = side;
            }
            if let Some(margin) = resolve(args.margin, d, "margin")? {
                params.margin = margin;
            }
            let reports = run_suites(&suite, &params)?;
            let mut all_pass = true;
            let mut lines = String::new();
            for r in &reports {
                all_pass &= r.passed();
                let line = serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?;
                println!("{line}");
                lines.push_str(&line);
                lines.push('\n');
            }
            let summary = serde_json::json!({
                "suite": suite,
                "checks": reports.len(),
                "failed": reports.iter().filter(|r| !r.passed()).count(),
                "pass": all_pass,
            });
            println!("{summary}");
            if let Some(path) = args.out.as_deref() {
                lines.push_str(&summary.to_string());
                lines.push('\n');
                write_or_print(Some(path), &lines)?;
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }

        Command::Render(args) => {
            let spec: ScoreSpec = require(resolve(args.spec, d, "spec")?, "spec")?.parse()?;
            let n = require(resolve(args.n, d, "n")?, "n")?;
            let margin = resolve(args.margin, d, "margin")?.unwrap_or(3.0);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let conditioned = resolve(args.conditioned, d, "conditioned")?;
            let a_override = resolve(args.a, d, "a")?;
            let max_attempts = resolve(args.max_attempts, d, "max_attempts")?.unwrap_or(100_000);
            let prefix =
                resolve(args.out, d, "out")?.unwrap_or_else(|| PathBuf::from("render"));
            let rng = RngStream::new(seed);

            let sampling = BoxWindow::centered(2, n + 2.0 * margin)?;
            let scoring = BoxWindow::centered(2, n)?;
            let typical_cfg = sample_poisson(1.0, &sampling, rng.substream(0))?;
            let typical = score_all(&spec, typical_cfg, &scoring)?;
            let h_typical = h_n(&typical);
            let scene = scene_for(
                &spec,
                &typical.config,
                n,
                format!("typical: H_n = {h_typical:.4}"),
            )?;
            let typical_path = path_with(&prefix, "typical");
            fs::write(&typical_path, svg::render(&scene)).map_err(|e| {
                Error::Parameter(format!("cannot write {}: {e}", typical_path.display()))
            })?;
            println!(
                "{}",
                serde_json::json!({"file": typical_path.display().to_string(), "h_n": h_typical})
            );

            if let Some(fraction) = conditioned {
                let a = match a_override {
                    Some(a) => a,
                    None => {
                        // pilot for the typical level, then scale it
                        let pilot = sample_h_values(&spec, n, 2, margin, 200, rng.substream(1))?;
                        let mean = pilot.iter().sum::<f64>() / pilot.len() as f64;
                        fraction * mean
                    }
                };
                let sample =
                    conditional_sample(&spec, n, 2, a, margin, max_attempts, rng.substream(2))?;
                let title = format!(
                    "conditioned: H_n = {:.4} < a = {a:.4} ({} attempts)",
                    sample.h_value, sample.attempts
                );
                let scene = scene_for(&spec, &sample.config, n, title)?;
                let path = path_with(&prefix, "conditioned");
                fs::write(&path, svg::render(&scene)).map_err(|e| {
                    Error::Parameter(format!("cannot write {}: {e}", path.display()))
                })?;
                println!(
                    "{}",
                    serde_json::json!({
                        "file": path.display().to_string(),
                        "h_n": sample.h_value,
                        "a": a,
                        "attempts": sample.attempts,
                    })
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::CalibrateL(args) => {
            let n = resolve(args.n, d, "n")?.unwrap_or(4.0);
            let m = resolve(args.m, d, "m")?.unwrap_or(4.0);
            let l_list = parse_list(
                &resolve(args.l_list, d, "l_list")?.unwrap_or_else(|| "4,6,8,12,16".into()),
            )?;
            let trials = resolve(args.trials, d, "trials")?.unwrap_or(200);
            let seed = require(resolve(args.seed, d, "seed")?, "seed")?;
            let window = BoxWindow::centered(2, n)?;
            for (idx, &l) in l_list.iter().enumerate() {
                let stream = RngStream::new(seed).substream(idx as u64);
                let outcomes: Vec<Result<bool, Error>> =
                    lowtail::parallel::map_trials(trials, |i| {
                        regularity_trial(&window, m, l, RadiusKind::Voronoi, stream.substream(i))
                    });
                let mut successes = 0u64;
                for o in outcomes {
                    successes += o? as u64;
                }
                json_line(&serde_json::json!({
                    "l": l,
                    "m": m,
                    "n": n,
                    "trials": trials,
                    "successes": successes,
                    "success_rate": successes as f64 / trials as f64,
                }))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn path_with(prefix: &Path, suffix: &str) -> PathBuf {
    let stem = prefix.to_string_lossy();
    PathBuf::from(format!("{stem}_{suffix}.svg"))
}

/// Build the drawable scene for a spec: the graph its score lives on, or
/// Voronoi cells for the intrinsic-volume scores.
fn scene_for<'a>(
    spec: &ScoreSpec,
    config: &'a PointConfig,
    border_side: f64,
    title: impl Display,
) -> Result<svg::Scene<'a>, Error> {
    let mut edges = Vec::new();
    let mut polygons = Vec::new();
    match *spec.kind() {
        ScoreKind::CliqueCount { t, .. } | ScoreKind::PowerEdgeRgg { t, .. } => {
            for i in 0..config.len() {
                for j in (i + 1)..config.len() {
                    if lowtail::geometry::dist(config.point(i), config.point(j)) < t {
                        edges.push((i, j));
                    }
                }
            }
        }
        ScoreKind::KnnPower { k, mode, .. } => {
            let g = knn_graph(config, k, mode)?;
            edges.extend(g.edges().iter().map(|e| (e[0] as usize, e[1] as usize)));
        }
        ScoreKind::RngPower { .. } => {
            let g = rng_graph(config)?;
            edges.extend(g.edges().iter().map(|e| (e[0] as usize, e[1] as usize)));
        }
        ScoreKind::VoronoiIntrinsic { .. } => {
            let cover = cone_cover_2d();
            for i in 0..config.len() {
                let r = stab_radius_voronoi(config, i, &cover)?;
                if !r.is_finite() {
                    continue;
                }
                let cell = voronoi_cell(config, i, r)?;
                if cell.bounded {
                    polygons.push(cell.vertices);
                }
            }
        }
    }
    Ok(svg::Scene {
        config,
        edges,
        polygons,
        border_side,
        title: title.to_string(),
    })
}
