//! Command-line front end: symbol validation, kernel and norm experiments,
//! the mild solver, estimate verification sweeps, the dyadic decomposition
//! demo, and the acceptance-suite reproducer.

use clap::{Args, Parser, Subcommand};
use specprop::config::Config;
use specprop::error::{Error, Result};
use specprop::experiments::{self, Suite};
use specprop::grid::{Field, SpacetimeField};
use specprop::report::{fmt_f64, key_value_block, write_atomic};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "specprop",
    about = "Pseudo-spectral solver and estimate verifier for parabolic equations \
             with time-measurable Fourier multipliers"
)]
struct Cli {
    /// Configuration file (section.key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random ensemble.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the ellipticity and derivative bounds of the configured symbol.
    ValidateSymbol {
        /// Config section holding the symbol (default: symbol).
        #[arg(long, default_value = "symbol")]
        symbol: String,
        /// Validation tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Kernel L1/L2/weighted norms over a gap sweep.
    KernelNorms(KernelArgs),
    /// Solve the zero-initial-data problem for a source dump or a generated
    /// ensemble member.
    Solve {
        /// Space-time source dump (binary); generated from config when absent.
        #[arg(long)]
        f: Option<PathBuf>,
        /// Override the time step count.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Norm report for one field dump.
    Norms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Norm routes to compute: lp, fd or both.
        #[arg(long, default_value = "both")]
        route: String,
        /// Optional Holder order n, paired with --alpha.
        #[arg(long)]
        holder_n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Ratio sweep for the space-time norm estimate.
    VerifyEstimate {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value = "inf")]
        p: String,
        #[arg(long, default_value = "lipschitz")]
        family: String,
        #[arg(long, default_value_t = 30)]
        ensemble_size: usize,
    },
    /// Decompose a step function and verify the property list.
    CzDemo {
        /// Comma-separated breakpoints.
        #[arg(long)]
        breakpoints: String,
        /// Comma-separated piece values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        lambda: f64,
    },
    /// Run the acceptance suite and write its artifact bundle.
    Reproduce {
        #[arg(long, default_value = "smoke")]
        suite: String,
        /// Print criterion ids without running anything.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args)]
struct KernelArgs {
    /// Config section holding the symbol (default: symbol).
    #[arg(long, default_value = "symbol")]
    symbol: String,
    #[arg(long, default_value_t = 0)]
    a: u32,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    /// Multi-index entries, comma separated (e.g. 1 or 1,0).
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated gap sweep.
    #[arg(long)]
    gaps: Option<String>,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::defaults(),
    };
    cfg.apply_env();
    if let Some(seed) = cli.seed {
        cfg.set("experiment.seed", seed);
    }
    if let Some(out) = &cli.out {
        cfg.set("output.dir", out.display());
    }
    Ok(cfg)
}

fn out_dir(cfg: &Config) -> PathBuf {
    PathBuf::from(cfg.get("output.dir").unwrap_or("out"))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::ValidateSymbol { symbol, tol } => {
            if symbol != "symbol" {
                return Err(Error::config(format!(
                    "--symbol {symbol}: only the 'symbol' section is defined"
                )));
            }
            let spec = cfg.build_symbol()?;
            let report = spec.validate(&specprop::symbol::SamplePlan::default(), tol)?;
            print!(
                "{}",
                key_value_block(&[
                    ("passed", report.passed.to_string()),
                    ("worst_sym1_margin", fmt_f64(report.worst_sym1_margin)),
                    ("worst_sym2_ratio", fmt_f64(report.worst_sym2_ratio)),
                    ("sample_count", report.sample_count.to_string()),
                    ("d0", report.d0.to_string()),
                ])
            );
            Ok(report.passed)
        }
        Command::KernelNorms(args) => {
            if args.symbol != "symbol" {
                return Err(Error::config(format!(
                    "--symbol {}: only the 'symbol' section is defined",
                    args.symbol
                )));
            }
            cfg.set("experiment.name", "kernel-norms");
            cfg.set("experiment.a", args.a);
            cfg.set("experiment.b", args.b);
            if let Some(g) = args.gaps {
                cfg.set("experiment.gaps", g);
            }
            if let Some(alpha) = args.alpha {
                cfg.set("experiment.alpha_index", alpha);
            }
            let artifacts = experiments::run_experiment(&cfg)?;
            emit(&cfg, &artifacts)?;
            Ok(true)
        }
        Command::Solve { f, steps } => {
            if let Some(k) = steps {
                cfg.set("time.steps", k);
            }
            let spec = cfg.build_symbol()?;
            let source = match f {
                Some(path) => {
                    let mut file = std::fs::File::open(path)?;
                    SpacetimeField::read_binary(&mut file)?
                }
                None => {
                    let grid = cfg.build_grid()?;
                    let es = specprop::solver::EnsembleSpec {
                        grid,
                        t_end: cfg.get_f64("time.t_end")?,
                        steps: cfg.get_usize("time.steps")?,
                        band: (grid.nyquist() / 16.0, grid.nyquist() / 4.0),
                        members: 1,
                        seed: cfg.get_u64("experiment.seed")?,
                        pieces_choices: vec![4, 8],
                    };
                    specprop::solver::ensemble_member(&es, 0)?
                }
            };
            let sol = specprop::solver::solve_mild(&spec, &source)?;
            let dir = out_dir(&cfg);
            std::fs::create_dir_all(&dir)?;
            let mut buf = Vec::new();
            sol.u.write_binary(&mut buf)?;
            std::fs::write(dir.join("solution.bin"), &buf)?;
            print!(
                "{}",
                key_value_block(&[
                    ("steps", sol.steps.to_string()),
                    ("inner_substeps", sol.inner_substeps.to_string()),
                    ("max_propagator_modulus", fmt_f64(sol.max_propagator_modulus)),
                    ("min_re_integral", fmt_f64(sol.min_re_integral)),
                    ("solution", dir.join("solution.bin").display().to_string()),
                ])
            );
            Ok(true)
        }
        Command::Norms { input, m, route, holder_n, alpha } => {
            let mut file = std::fs::File::open(input)?;
            let field = Field::read_binary(&mut file)?;
            let holder = holder_n.map(|n| (n, alpha));
            match route.as_str() {
                "lp" | "fd" | "both" => {}
                other => return Err(Error::config(format!("--route: unknown route '{other}'"))),
            }
            let (block, bands) = experiments::norms_for_field(&field, m, holder, &route, true)?;
            print!("{block}");
            let dir = out_dir(&cfg);
            write_atomic(&dir.join("bands.csv"), &bands)?;
            Ok(true)
        }
        Command::VerifyEstimate { m, p, family, ensemble_size } => {
            cfg.set("experiment.name", "verify-estimate");
            cfg.set("experiment.m", m);
            cfg.set("experiment.p", p);
            cfg.set("experiment.family", family);
            cfg.set("experiment.ensemble_size", ensemble_size);
            let artifacts = experiments::run_experiment(&cfg)?;
            emit(&cfg, &artifacts)?;
            Ok(true)
        }
        Command::CzDemo { breakpoints, values, lambda } => {
            cfg.set("experiment.name", "cz-demo");
            cfg.set("experiment.breakpoints", breakpoints);
            cfg.set("experiment.values", values);
            cfg.set("experiment.lambda", lambda);
            let artifacts = experiments::run_experiment(&cfg)?;
            emit(&cfg, &artifacts)?;
            let ok = artifacts
                .iter()
                .any(|(name, body)| name.ends_with("cz_report.txt") && body.contains("all_ok = true"));
            Ok(ok)
        }
        Command::Reproduce { suite, list } => {
            if list {
                for &(id, name) in experiments::CRITERIA {
                    println!("{id} {name}");
                }
                return Ok(true);
            }
            let suite = match suite.as_str() {
                "smoke" => Suite::Smoke,
                "full" => Suite::Full,
                other => return Err(Error::config(format!("--suite: unknown suite '{other}'"))),
            };
            let seed = cfg.get_u64("experiment.seed")?;
            let dir = out_dir(&cfg);
            let report = experiments::reproduce(suite, Some(&dir), seed)?;
            print!("{}", report.text);
            Ok(report.all_passed)
        }
    }
}

fn emit(cfg: &Config, artifacts: &[(String, String)]) -> Result<()> {
    let dir = out_dir(cfg);
    for (rel, contents) in artifacts {
        let path = dir.join(rel);
        write_atomic(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
