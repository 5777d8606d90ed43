//! Command-line surface for the lilypond hard-core growth model:
//! deterministic solvers on point files plus the Monte Carlo
//! experiment harnesses, all emitting machine-readable reports.

mod kv;
mod points;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lilypond::clusters::{cluster_stats, components, kappa};
use lilypond::experiments::{
    clt_run, estimate_pz, percolation_sweep, renormalized_field, tail_survey, Functional,
    PointProcess,
};
use lilypond::lilypond::RadiiAssignment;
use lilypond::stabilization::{stab_radius, stopping_set};
use lilypond::{solve, verify, SeedSpec};

use kv::{parse_list, RunConfig};
use report::ReportFiles;

#[derive(Parser)]
#[command(name = "lilypond", version, about = "Hard-core germ-grain growth model tools")]
struct Cli {
    /// Flat key=value defaults file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: LILYPOND_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Stream index under the master seed.
    #[arg(long)]
    stream: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute grain radii for a point file.
    Solve {
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a radii file against the defining properties; exit 1 on violation.
    Verify { points: PathBuf, radii: PathBuf },
    /// Stopping sets and the stabilization radius of a point file.
    Stab {
        points: PathBuf,
        /// Restrict to the stopping set of this point index.
        #[arg(long)]
        anchor: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connected components of the (optionally enhanced) grain union.
    Cluster {
        points: PathBuf,
        /// Enhancement added to every radius for adjacency.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Volume-fraction estimate by indicator and moment routes.
    Pz {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        window_radius: Option<f64>,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Survival curves for the certified origin cluster.
    Tails {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        reps: Option<u64>,
        /// Comma-separated diameter thresholds.
        #[arg(long)]
        diam_grid: Option<String>,
        /// Comma-separated volume thresholds.
        #[arg(long)]
        volume_grid: Option<String>,
        /// Comma-separated cardinality thresholds.
        #[arg(long)]
        card_grid: Option<String>,
        /// Starting window radius for certification.
        #[arg(long)]
        l0: Option<f64>,
        /// Also emit per-replicate raw records.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance scaling and normality of additive functionals.
    Clt {
        #[arg(long)]
        d: Option<usize>,
        /// volume | kappa | constant:<c>
        #[arg(long)]
        functional: Option<String>,
        /// poisson | binomial
        #[arg(long)]
        process: Option<String>,
        /// Comma-separated expected point counts.
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        reps: Option<u64>,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Face-crossing probabilities of the enhanced union (d >= 2).
    Perc {
        #[arg(long)]
        d: Option<usize>,
        /// Comma-separated enhancement values.
        #[arg(long)]
        delta_grid: Option<String>,
        /// Comma-separated cube window volumes.
        #[arg(long)]
        scales: Option<String>,
        #[arg(long)]
        reps: Option<u64>,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One draw of the renormalized lattice site field.
    Field {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        half_extent: Option<i64>,
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_grid(flag: Option<&str>, file: Option<Vec<f64>>, default: &[f64], what: &str) -> Result<Vec<f64>> {
    match flag {
        Some(raw) => parse_list(raw, what),
        None => Ok(file.unwrap_or_else(|| default.to_vec())),
    }
}

fn seed_spec(args: &SeedArgs, cfg: &RunConfig) -> Result<SeedSpec> {
    let master = pick(args.seed, cfg.get("seed")?, 0);
    let stream = pick(args.stream, cfg.get("stream")?, 0);
    Ok(SeedSpec::new(master, stream))
}

fn init_threads(flag: Option<usize>, cfg: &RunConfig) -> Result<()> {
    let from_env = std::env::var("LILYPOND_THREADS")
        .ok()
        .map(|v| v.parse::<usize>().context("LILYPOND_THREADS"))
        .transpose()?;
    if let Some(n) = flag.or(cfg.get("threads")?).or(from_env) {
        if n == 0 {
            bail!("threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn emit(files: &ReportFiles, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            for path in files.write(dir)? {
                println!("{}", path.display());
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&files.summary)?),
    }
    Ok(())
}

fn emit_json(value: &Value, out: Option<&Path>, name: &str) -> Result<()> {
    match out {
        Some(path) => {
            let path = if path.extension().is_some() {
                path.to_path_buf()
            } else {
                std::fs::create_dir_all(path)
                    .with_context(|| format!("creating {}", path.display()))?;
                path.join(format!("{name}.json"))
            };
            let text = serde_json::to_string_pretty(value)?;
            std::fs::write(&path, text + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn radii_json(rho: &RadiiAssignment) -> Value {
    Value::Array(
        rho.radii()
            .iter()
            .map(|&r| if r.is_finite() { json!(r) } else { json!("inf") })
            .collect(),
    )
}

fn parse_functional(raw: &str) -> Result<Functional> {
    match raw {
        "volume" => Ok(Functional::GrainVolume),
        "kappa" => Ok(Functional::Kappa),
        _ => match raw.strip_prefix("constant:") {
            Some(c) => Ok(Functional::Constant(
                c.parse::<f64>().with_context(|| format!("bad constant in {raw:?}"))?,
            )),
            None => bail!("functional must be volume, kappa, or constant:<c>, got {raw:?}"),
        },
    }
}

fn parse_process(raw: &str) -> Result<PointProcess> {
    match raw {
        "poisson" => Ok(PointProcess::Poisson),
        "binomial" => Ok(PointProcess::Binomial),
        _ => bail!("process must be poisson or binomial, got {raw:?}"),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Solve { points, out } => {
            cfg.check_known(&["threads"])?;
            init_threads(cli.threads, &cfg)?;
            let phi = points::read_points(&points)?;
            let rho = solve(&phi)?;
            for &r in rho.radii() {
                println!("{r:?}");
            }
            if let Some(dir) = out {
                emit_json(&json!({"radii": radii_json(&rho)}), Some(&dir), "radii")?;
            }
            Ok(0)
        }
        Cmd::Verify { points, radii } => {
            cfg.check_known(&["threads"])?;
            init_threads(cli.threads, &cfg)?;
            let phi = points::read_points(&points)?;
            let radii = points::read_radii(&radii)?;
            if radii.len() != phi.len() {
                bail!("{} radii for {} points", radii.len(), phi.len());
            }
            let rho = RadiiAssignment::from_radii(radii);
            let rep = verify(&phi, &rho);
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "hard_core": rep.hard_core,
                    "smaller_neighbour": rep.smaller_neighbour,
                    "max_hard_core_excess": rep.max_hard_core_excess,
                    "worst_neighbour_residual": rep.worst_neighbour_residual,
                    "passed": rep.passed(),
                }))?
            );
            Ok(if rep.passed() { 0 } else { 1 })
        }
        Cmd::Stab { points, anchor, out } => {
            cfg.check_known(&["threads"])?;
            init_threads(cli.threads, &cfg)?;
            let phi = points::read_points(&points)?;
            let value = match anchor {
                Some(i) => {
                    if i >= phi.len() {
                        bail!("anchor {i} out of range for {} points", phi.len());
                    }
                    let set = stopping_set(phi.point(i), &phi);
                    json!({
                        "anchor": i,
                        "enclosing_radius": set.enclosing_radius(),
                        "stopping_set": set,
                    })
                }
                None => {
                    let sets: Vec<Value> = (0..phi.len())
                        .map(|i| {
                            let set = stopping_set(phi.point(i), &phi);
                            json!({"anchor": i, "enclosing_radius": set.enclosing_radius()})
                        })
                        .collect();
                    json!({"stab_radius": stab_radius(&phi), "per_point": sets})
                }
            };
            emit_json(&value, out.as_deref(), "stab")?;
            Ok(0)
        }
        Cmd::Cluster { points, delta, out } => {
            cfg.check_known(&["threads"])?;
            init_threads(cli.threads, &cfg)?;
            let phi = points::read_points(&points)?;
            let rho = solve(&phi)?;
            let comps = components(&phi, &rho, delta)?;
            let stats: Vec<_> = comps
                .iter()
                .map(|c| cluster_stats(phi.point(c[0]), &phi, &rho))
                .collect::<lilypond::Result<_>>()?;
            let value = json!({
                "delta": delta,
                "kappa": kappa(&phi, &rho)?,
                "components": comps,
                "stats": stats,
                "radii": radii_json(&rho),
            });
            emit_json(&value, out.as_deref(), "cluster")?;
            Ok(0)
        }
        Cmd::Pz { d, reps, window_radius, seed, out } => {
            cfg.check_known(&["threads", "d", "reps", "window_radius", "seed", "stream"])?;
            init_threads(cli.threads, &cfg)?;
            let d = pick(d, cfg.get("d")?, 1);
            let reps = pick(reps, cfg.get("reps")?, 1000);
            let l = pick_opt(window_radius, cfg.get("window_radius")?);
            let rep = estimate_pz(d, reps, seed_spec(&seed, &cfg)?, l)?;
            emit(&ReportFiles::from_pz(&rep)?, out.as_deref())?;
            Ok(0)
        }
        Cmd::Tails { d, reps, diam_grid, volume_grid, card_grid, l0, raw, seed, out } => {
            cfg.check_known(&[
                "threads", "d", "reps", "diam_grid", "volume_grid", "card_grid", "l0", "seed",
                "stream",
            ])?;
            init_threads(cli.threads, &cfg)?;
            let d = pick(d, cfg.get("d")?, 1);
            let reps = pick(reps, cfg.get("reps")?, 1000);
            let diam = pick_grid(diam_grid.as_deref(), cfg.get_list("diam_grid")?, &[1.0, 2.0, 4.0, 8.0], "diam_grid")?;
            let vol = pick_grid(volume_grid.as_deref(), cfg.get_list("volume_grid")?, &[1.0, 2.0, 4.0, 8.0], "volume_grid")?;
            let card_f = pick_grid(card_grid.as_deref(), cfg.get_list("card_grid")?, &[2.0, 4.0, 8.0, 16.0], "card_grid")?;
            let card: Vec<u64> = card_f
                .iter()
                .map(|&c| {
                    if c >= 0.0 && c.fract() == 0.0 {
                        Ok(c as u64)
                    } else {
                        Err(anyhow!("card_grid entries must be nonnegative integers"))
                    }
                })
                .collect::<Result<_>>()?;
            let l0 = pick_opt(l0, cfg.get("l0")?);
            let rep = tail_survey(d, &diam, &vol, &card, reps, seed_spec(&seed, &cfg)?, l0, raw)?;
            emit(&ReportFiles::from_tails(&rep)?, out.as_deref())?;
            Ok(0)
        }
        Cmd::Clt { d, functional, process, n_grid, reps, seed, out } => {
            cfg.check_known(&[
                "threads", "d", "functional", "process", "n_grid", "reps", "seed", "stream",
            ])?;
            init_threads(cli.threads, &cfg)?;
            let d = pick(d, cfg.get("d")?, 1);
            let functional =
                parse_functional(&pick(functional, cfg.get("functional")?, "volume".into()))?;
            let process = parse_process(&pick(process, cfg.get("process")?, "poisson".into()))?;
            let n_grid: Vec<u64> = match n_grid.as_deref() {
                Some(raw) => parse_list(raw, "n_grid")?,
                None => cfg
                    .get_list("n_grid")?
                    .unwrap_or_else(|| vec![250, 500, 1000, 2000]),
            };
            let reps = pick(reps, cfg.get("reps")?, 2000);
            let rep = clt_run(d, functional, process, &n_grid, reps, seed_spec(&seed, &cfg)?)?;
            emit(&ReportFiles::from_clt(&rep)?, out.as_deref())?;
            Ok(0)
        }
        Cmd::Perc { d, delta_grid, scales, reps, seed, out } => {
            cfg.check_known(&["threads", "d", "delta_grid", "scales", "reps", "seed", "stream"])?;
            init_threads(cli.threads, &cfg)?;
            let d = pick(d, cfg.get("d")?, 2);
            let deltas = pick_grid(
                delta_grid.as_deref(),
                cfg.get_list("delta_grid")?,
                &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0],
                "delta_grid",
            )?;
            let scales =
                pick_grid(scales.as_deref(), cfg.get_list("scales")?, &[64.0, 256.0], "scales")?;
            let reps = pick(reps, cfg.get("reps")?, 50);
            let rep = percolation_sweep(d, &deltas, &scales, reps, seed_spec(&seed, &cfg)?)?;
            emit(&ReportFiles::from_perc(&rep)?, out.as_deref())?;
            Ok(0)
        }
        Cmd::Field { d, r, delta, half_extent, seed, out } => {
            cfg.check_known(&["threads", "d", "r", "delta", "half_extent", "seed", "stream"])?;
            init_threads(cli.threads, &cfg)?;
            let d = pick(d, cfg.get("d")?, 1);
            let r = pick(r, cfg.get("r")?, 30.0);
            let delta = pick(delta, cfg.get("delta")?, 0.25);
            let m = pick(half_extent, cfg.get("half_extent")?, 3);
            let rep = renormalized_field(d, r, delta, m, seed_spec(&seed, &cfg)?)?;
            emit(&ReportFiles::from_field(&rep)?, out.as_deref())?;
            Ok(0)
        }
    }
}
