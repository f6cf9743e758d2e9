use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ia_dof::alignment::{build_block_system, chain_spec, zero_propagation};
use ia_dof::basis_change::{achieved_mask, apply_cb, build_cb, target_pattern, wrap, CrossSide};
use ia_dof::channel::draw_channels;
use ia_dof::harness::{emit, run_sweep, write_csv, json_report, OutputFormat, SimConfig, SlopeWindow, SnrGrid};
use ia_dof::verification::{elimination_p2_acs, elimination_p2_noacs, run_verification, EliminationCheck, EliminationMatrix};
use ia_dof::{Execution, IaError, Scheme};

#[derive(Parser)]
#[command(name = "ia-dof", version, about = "Interference-alignment precoding for the 3-user (p, p+1) MIMO interference channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sum-rate sweep over an SNR grid.
    Simulate(SimulateArgs),
    /// Check full rank, DoF and leakage over many seeded draws (JSON report).
    Verify(VerifyArgs),
    /// Print the zero-propagation steps of one alignment chain.
    ZpTrace(ZpTraceArgs),
    /// Print the zero pattern reached by the change of basis.
    CbCheck(CbCheckArgs),
    /// Print the p = 2 elimination matrices with and without ACS.
    ElimDemo(ElimDemoArgs),
}

#[derive(Args)]
struct ExecArgs {
    /// Run drops/trials on one thread.
    #[arg(long)]
    sequential: bool,
}

impl ExecArgs {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    p: usize,
    /// Comma-separated list of `acs`, `time-only`.
    #[arg(long, default_value = "acs,time-only", value_delimiter = ',')]
    schemes: Vec<Scheme>,
    /// SNR grid `start:stop:step` in dB.
    #[arg(long, default_value = "0:100:5")]
    snr: SnrGrid,
    #[arg(long, default_value_t = 50)]
    drops: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// High-SNR window `lo:hi` in dB for the slope fit.
    #[arg(long, default_value = "80:100")]
    slope_window: SlopeWindow,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "acs")]
    mode: Scheme,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct ZpTraceArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    chain: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CbCheckArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ElimDemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn check_p(p: usize) -> Result<(), IaError> {
    if p < 2 {
        return Err(IaError::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), IaError> {
    let cfg = SimConfig {
        p: args.p,
        schemes: args.schemes,
        snr: args.snr,
        drops: args.drops,
        seed: args.seed,
        slope_window: args.slope_window,
        output_path: args.out.clone(),
        output_format: args.format,
        execution: args.exec.execution(),
    };
    let result = run_sweep(&cfg)?;
    match &args.out {
        Some(path) => {
            emit(&result, &cfg, args.format, path)?;
            for s in &result.schemes {
                let slope = s.slope.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                let dof = s.dof_per_user.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                println!(
                    "{}: slope {} over {}–{} dB, DoF/user {}, optimal {}, degenerate draws {}",
                    s.scheme, slope, cfg.slope_window.lo_db, cfg.slope_window.hi_db, dof,
                    ia_dof::optimal_dof(cfg.p), s.degenerate_draws
                );
            }
            println!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let fail = |e: String| IaError::Output {
                path: PathBuf::from("<stdout>"),
                message: e,
            };
            match args.format {
                OutputFormat::Csv => write_csv(&result, &mut lock).map_err(|e| fail(e.to_string()))?,
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut lock, &json_report(&result, &cfg))
                        .map_err(|e| fail(e.to_string()))?;
                    writeln!(lock).map_err(|e| fail(e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), IaError> {
    let summary = run_verification(args.p, args.mode, args.trials, args.seed, args.exec.execution())?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &args.out {
        Some(path) => {
            std::fs::write(path, format!("{text}\n")).map_err(|source| IaError::Io {
                path: path.clone(),
                source,
            })?;
            println!(
                "p={} {}: full rank {:.2}, DoF {} (optimal {}), {} failures, wrote {}",
                summary.p,
                summary.mode,
                summary.full_rank_fraction,
                summary.achieved_dof,
                summary.optimal_dof,
                summary.failures.len(),
                path.display()
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn zp_trace(args: ZpTraceArgs) -> Result<(), IaError> {
    check_p(args.p)?;
    let draw = draw_channels(args.p, args.seed)?;
    let cb = build_cb(&draw)?;
    let sc = apply_cb::<f64>(&draw, &cb)?;
    let chain = chain_spec(args.p, args.chain as usize);
    let sys = build_block_system(&chain, &sc);
    println!(
        "chain {}: users {:?}, receivers {:?}",
        chain.k, chain.users, chain.receivers
    );
    println!("block columns (user, sub-block, antenna row):");
    for (c, l) in sys.labels.iter().enumerate() {
        println!("  {:>3}: V{}^({},{}) row {}", c + 1, l.user, chain.k, l.occurrence, l.antenna_row);
    }
    println!("initial support:");
    print!("{}", sys.render_support());
    let done = zero_propagation(&sys);
    for (n, step) in done.trace.iter().enumerate() {
        let (t, rx, q) = done.row_label(step.row);
        println!(
            "step {}: row {} (condition {t}, receiver {rx}, q={q}) has a single block at column {} -> zero it",
            n + 1,
            step.row + 1,
            step.col + 1
        );
    }
    println!("zeroed blocks: {:?}", done.zeroed_blocks());
    Ok(())
}

fn cb_check(args: CbCheckArgs) -> Result<(), IaError> {
    check_p(args.p)?;
    let draw = draw_channels(args.p, args.seed)?;
    let cb = build_cb(&draw)?;
    let p = args.p;
    let pattern = target_pattern(p);
    for j in 1..=3 {
        let mask = achieved_mask(&cb, &draw, j, 1e-10);
        println!(
            "receiver {j}: [G{j}{} | G{j}{}]  (# non-zero, . zero, ! forbidden entry not cleared)",
            wrap(j, -1),
            wrap(j, 1)
        );
        for (q, row) in mask.iter().enumerate() {
            let cells: String = row
                .iter()
                .enumerate()
                .map(|(c, &nz)| {
                    let (side, r) = if c < p {
                        (CrossSide::Previous, c)
                    } else {
                        (CrossSide::Next, c - p)
                    };
                    let sep = if c == p { " |" } else { "" };
                    let mark = match (nz, pattern.allows(side, q, r)) {
                        (true, true) => " #",
                        (true, false) => " !",
                        (false, _) => " .",
                    };
                    format!("{sep}{mark}")
                })
                .collect();
            println!("  {cells}");
        }
    }
    println!("max forbidden-entry residual: {:e}", cb.pattern_residual);
    Ok(())
}

fn print_check(name: &str, check: &EliminationCheck) {
    println!("{name} (null dimension {}):", check.null_dim);
    match &check.matrix {
        EliminationMatrix::Real(m) => {
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:>10.4}")).collect();
                println!("  [{}]", cells.join(" "));
            }
        }
        EliminationMatrix::Complex(m) => {
            for row in m.row_iter() {
                let cells: Vec<String> = row
                    .iter()
                    .map(|x| format!("{:>8.4}{:+.4}i", x.re, x.im))
                    .collect();
                println!("  [{}]", cells.join(" "));
            }
        }
    }
    if let Some(r) = check.null_residual {
        println!("  null vector residual {r:e}");
    }
}

fn elim_demo(args: ElimDemoArgs) -> Result<(), IaError> {
    let draw = draw_channels(2, args.seed)?;
    print_check("with ACS, 3x2 real", &elimination_p2_acs(&draw)?);
    print_check("without ACS, 3x4 complex", &elimination_p2_noacs(&draw)?);
    Ok(())
}

fn error_json(kind: &str, message: &str, seed: Option<u64>) -> String {
    let mut v = serde_json::json!({ "error": kind, "message": message });
    if let Some(s) = seed {
        v["seed"] = serde_json::json!(s);
    }
    v.to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim(), None));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::ZpTrace(a) => zp_trace(a),
        Command::CbCheck(a) => cb_check(a),
        Command::ElimDemo(a) => elim_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string(), e.seed()));
            ExitCode::FAILURE
        }
    }
}
