use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bmx_core::oracle::{inner_wire_for, serve, ServerFault};
use bmx_core::{oracle_handshake, BochnerView, MatrixAccessor};
use bmx_experiments::{
    build_bvp_matrix, emit_report, run_abcdx, run_comparison, seed_range, AbcdxStudy, BvpConfig, ComparisonOptions,
    Space, DEFAULT_CROSS_RTOL, DEFAULT_HOSVD_RTOL, PRNG_NAME,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bmx", version, about = "Cross approximation of Bochner snapshot matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare ABCD, post-processed ABCD, random crosses and HOSVD on the
    /// boundary-value snapshot matrix.
    Bvp(BvpArgs),
    /// Run ABCDX against an oracle process or the snapshot matrix.
    Abcdx(AbcdxArgs),
    /// Serve the snapshot matrix over the oracle protocol on stdin/stdout.
    ServeBvp(ServeArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, default_value = "l2")]
    space: Space,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of sine modes.
    #[arg(long = "k", default_value_t = 75)]
    k_max: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 2.0)]
    beta_max: f64,
}

impl ProblemArgs {
    fn config(&self) -> BvpConfig {
        BvpConfig {
            alpha_max: self.alpha_max,
            beta_max: self.beta_max,
            m: self.m,
            n: self.n,
            k_max: self.k_max,
            space: self.space,
        }
    }
}

#[derive(Args)]
struct BvpArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Iteration counts, as `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1..40")]
    ranks: String,
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value_t = 1)]
    n_rook: usize,
    #[arg(long, default_value_t = DEFAULT_CROSS_RTOL)]
    cross_rtol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AbcdxArgs {
    /// Oracle command line, split with shell quoting rules. Without it the
    /// snapshot matrix is used.
    #[arg(long)]
    oracle: Option<String>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 16)]
    n_abcd: usize,
    #[arg(short = 'r', long = "rank", default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    n_rook: usize,
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Stop a run once a round's largest pivot drops below this fraction
    /// of the first pivot.
    #[arg(long)]
    stop_rtol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_CROSS_RTOL)]
    cross_rtol: f64,
    /// In oracle mode, fetch the whole matrix once to measure errors.
    #[arg(long)]
    reference_full: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
}

/// Failure classes with their exit codes.
enum Failure {
    Config(anyhow::Error),
    Oracle(anyhow::Error),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<bmx_core::Error>() {
            Some(bmx_core::Error::Oracle(_)) => Failure::Oracle(e),
            Some(bmx_core::Error::InvalidSpec(_)) => Failure::Config(e),
            _ => Failure::Other(e),
        }
    }
}

fn parse_ranks(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    let ranks: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().with_context(|| format!("bad rank range {s:?}"))?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().with_context(|| format!("bad rank range {s:?}"))?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().with_context(|| format!("bad rank {t:?}")))
            .collect::<Result<_>>()?
    };
    if ranks.is_empty() || ranks.contains(&0) {
        bail!("ranks must be a nonempty list of positive integers, got {s:?}");
    }
    Ok(ranks)
}

fn write_meta(out: &Path, meta: serde_json::Value) -> Result<()> {
    let mut path = out.as_os_str().to_owned();
    path.push(".meta.json");
    let text = serde_json::to_string_pretty(&meta)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", Path::new(&path).display()))
}

fn cmd_bvp(args: BvpArgs) -> Result<(), Failure> {
    let cfg = args.problem.config();
    cfg.validate().map_err(|e| Failure::Config(anyhow::anyhow!(e)))?;
    let ranks = parse_ranks(&args.ranks).map_err(Failure::Config)?;
    if args.seeds == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--seeds must be positive")));
    }
    let seeds = seed_range(args.seed_base, args.seeds);
    eprintln!("bmx: prng {PRNG_NAME}, seeds {}..={}", seeds[0], seeds[seeds.len() - 1]);
    let a = build_bvp_matrix(&cfg).map_err(anyhow::Error::from)?;
    let mut opts = ComparisonOptions::new(ranks.clone(), seeds.clone(), args.n_rook);
    opts.cross_rtol = args.cross_rtol;
    let report = run_comparison(&a, &opts).map_err(anyhow::Error::from)?;
    emit_report(&report, &args.out)?;
    write_meta(
        &args.out,
        json!({
            "command": "bvp",
            "prng": PRNG_NAME,
            "seed_base": args.seed_base,
            "seeds": seeds,
            "space": cfg.space.to_string(),
            "m": cfg.m,
            "n": cfg.n,
            "k": cfg.k_max,
            "alpha_max": cfg.alpha_max,
            "beta_max": cfg.beta_max,
            "ranks": ranks,
            "n_rook": args.n_rook,
            "cross_rtol": opts.cross_rtol,
            "hosvd_rtol": opts.hosvd_rtol,
        }),
    )?;
    Ok(())
}

fn cmd_abcdx(args: AbcdxArgs) -> Result<(), Failure> {
    if args.n_abcd == 0 || args.r == 0 || args.seeds == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--n-abcd, -r and --seeds must be positive")));
    }
    let seeds = seed_range(args.seed_base, args.seeds);
    eprintln!("bmx: prng {PRNG_NAME}, seeds {}..={}", seeds[0], seeds[seeds.len() - 1]);
    let study = AbcdxStudy {
        n_abcd: args.n_abcd,
        r: args.r,
        n_rook: args.n_rook,
        stop_rtol: args.stop_rtol,
        cross_rtol: args.cross_rtol,
        hosvd_rtol: DEFAULT_HOSVD_RTOL,
    };
    let (report, source, wire) = match &args.oracle {
        Some(cmdline) => {
            let argv = shlex::split(cmdline)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Failure::Config(anyhow::anyhow!("cannot split --oracle {cmdline:?}")))?;
            let (acc, hello) = oracle_handshake(&argv).map_err(anyhow::Error::from)?;
            eprintln!("bmx: oracle reports {}x{} entries of length {}", hello.m, hello.n, hello.dim);
            // measurement apparatus only: fetched before the runs, not counted below
            let reference = if args.reference_full {
                Some(acc.materialize().map_err(anyhow::Error::from)?)
            } else {
                None
            };
            let before = acc.wire_messages();
            let report = run_abcdx(&acc, reference.as_ref(), &study, &seeds).map_err(anyhow::Error::from)?;
            let wire = json!({
                "reference_messages": before,
                "run_messages": acc.wire_messages() - before,
            });
            if let Some(status) = acc.close() {
                if !status.success() {
                    eprintln!("bmx: oracle exited with {status}");
                }
            }
            (report, json!({ "oracle": cmdline, "reference_full": args.reference_full }), wire)
        }
        None => {
            let cfg = args.problem.config();
            cfg.validate().map_err(|e| Failure::Config(anyhow::anyhow!(e)))?;
            let a = build_bvp_matrix(&cfg).map_err(anyhow::Error::from)?;
            let acc = MatrixAccessor::dense(a.clone());
            let report = run_abcdx(&acc, Some(&a), &study, &seeds).map_err(anyhow::Error::from)?;
            let source = json!({
                "bvp": {
                    "space": cfg.space.to_string(),
                    "m": cfg.m,
                    "n": cfg.n,
                    "k": cfg.k_max,
                    "alpha_max": cfg.alpha_max,
                    "beta_max": cfg.beta_max,
                }
            });
            (report, source, serde_json::Value::Null)
        }
    };
    emit_report(&report, &args.out)?;
    write_meta(
        &args.out,
        json!({
            "command": "abcdx",
            "prng": PRNG_NAME,
            "seed_base": args.seed_base,
            "seeds": seeds,
            "source": source,
            "n_abcd": args.n_abcd,
            "r": args.r,
            "n_rook": args.n_rook,
            "stop_rtol": args.stop_rtol,
            "cross_rtol": args.cross_rtol,
            "wire": wire,
        }),
    )?;
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), Failure> {
    let cfg = args.problem.config();
    cfg.validate().map_err(|e| Failure::Config(anyhow::anyhow!(e)))?;
    let a = build_bvp_matrix(&cfg).map_err(anyhow::Error::from)?;
    let inner = inner_wire_for(a.spec(), None).map_err(anyhow::Error::from)?;
    serve(&a, &inner, ServerFault::None, io::stdin().lock(), BufWriter::new(io::stdout().lock()))
        .map_err(anyhow::Error::from)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bvp(a) => cmd_bvp(a),
        Command::Abcdx(a) => cmd_abcdx(a),
        Command::ServeBvp(a) => cmd_serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("bmx: configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Oracle(e)) => {
            eprintln!("bmx: oracle error: {e:#}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("bmx: {e:#}");
            ExitCode::FAILURE
        }
    }
}
