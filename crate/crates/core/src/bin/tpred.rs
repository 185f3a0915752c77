//! `tpred`: generate layouts, plan, evaluate and sweep from the command line.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid arguments
//! (including `t > T`), 3 layout generation stalled, 4 unknown layout id.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tpred::formats::{
    load_layouts, save_layouts, write_results_table, write_sweep_table, RunMeta,
};
use tpred::harness::{
    diagonal_checks, evaluate, generate_layouts, model_validity, run_pipeline, sweep, EvalConfig,
    GainStatistic, GeneratorConfig, PipelineConfig, StartPlacement,
};
use tpred::planner::choose_plan;
use tpred::{
    t_predictability_approx, t_predictability_exact, Bounds, Error, Mode, PlannerSpec, Point2,
    Rationality,
};

#[derive(Parser)]
#[command(name = "tpred", version, about = "t-predictable planning for open-TSP tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random layouts, optionally running the selection pipeline.
    Gen(GenArgs),
    /// Plan a single layout and report its predictability.
    Plan(PlanArgs),
    /// Evaluate planners against simulated observers.
    Eval(EvalArgs),
    /// Compare exact and approximate predictability over a beta or l grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ObserverArgs {
    /// Observer rationality coefficient.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// exact | approx
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Number of remainders in the approximate denominator.
    #[arg(long, default_value_t = 2)]
    l: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 270)]
    count: usize,
    #[arg(long, default_value_t = 5)]
    targets_min: usize,
    #[arg(long, default_value_t = 6)]
    targets_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side length of the square domain `[0, S]²`.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Minimum distance between any two generated points, in domain widths.
    #[arg(long, default_value_t = 0.1)]
    min_separation: f64,
    /// Fixed start point `X,Y`; drawn like the targets when omitted.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    start: Option<Vec<f64>>,
    /// Run the distinguishability and confound filters and rank by gain.
    #[arg(long)]
    filter: bool,
    /// Keep only the top N ranked layouts (with --filter).
    #[arg(long)]
    top: Option<usize>,
    /// Confound capture radius, in domain widths.
    #[arg(long, default_value_t = 0.05)]
    capture_radius: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    planner_ts: Vec<usize>,
    /// sum | difference
    #[arg(long, default_value = "sum")]
    gain: GainStatistic,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    layouts: PathBuf,
    #[arg(long)]
    layout_id: String,
    #[arg(long)]
    t: usize,
    #[command(flatten)]
    observer: ObserverArgs,
    /// text | json
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    layouts: PathBuf,
    #[arg(long, alias = "t", value_delimiter = ',', default_value = "0,1,2")]
    ts: Vec<usize>,
    #[arg(long, alias = "k", value_delimiter = ',', default_value = "0,1,2")]
    ks: Vec<usize>,
    #[command(flatten)]
    observer: ObserverArgs,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Recorded in the run metadata.
    #[arg(long, default_value_t = 0.05)]
    capture_radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    layouts: PathBuf,
    #[arg(long)]
    t: usize,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    ls: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::GenerationStalled { .. } => 3,
        Error::UnknownLayout(_) => 4,
        Error::HorizonExceeded { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidRationality(_) => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("TPRED_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("TPRED_THREADS={raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    let start = match args.start.as_deref() {
        Some([x, y]) => StartPlacement::Fixed(Point2::new(*x, *y)),
        _ => StartPlacement::Uniform,
    };
    let config = GeneratorConfig {
        count: args.count,
        targets_min: args.targets_min,
        targets_max: args.targets_max,
        bounds: Bounds::square(args.scale)?,
        min_separation: args.min_separation * args.scale,
        start,
        seed: args.seed,
        ..Default::default()
    };
    let layouts = generate_layouts(&config)?;
    println!("generated {}", layouts.len());
    if !args.filter {
        return save_layouts(&args.out, &layouts);
    }
    let pipeline = PipelineConfig {
        planner_ts: args.planner_ts,
        rationality: Rationality::from_beta(args.beta)?,
        capture_radius: args.capture_radius * config.bounds.width(),
        statistic: args.gain,
        top: args.top,
    };
    let report = run_pipeline(&layouts, &pipeline)?;
    println!("distinguishable {}", report.distinguishable);
    println!("no_confounds {}", report.no_confounds);
    println!("selected {}", report.selected);
    let selected: Vec<_> = report.layouts.into_iter().map(|r| r.layout).collect();
    save_layouts(&args.out, &selected)
}

fn cmd_plan(args: PlanArgs) -> Result<(), Error> {
    let layouts = load_layouts(&args.layouts, &Bounds::unbounded())?;
    let layout = layouts
        .iter()
        .find(|l| l.id() == args.layout_id)
        .ok_or_else(|| Error::UnknownLayout(args.layout_id.clone()))?;
    let rationality = Rationality::from_beta(args.observer.beta)?;
    let spec = PlannerSpec {
        t: args.t,
        rationality,
        mode: args.observer.mode,
        l: args.observer.l,
    };
    let choice = choose_plan(layout, &spec)?;
    let exact = t_predictability_exact(layout, &choice.plan, args.t, rationality)?;
    let approx = match spec.mode {
        Mode::Approximate => Some(t_predictability_approx(
            layout,
            &choice.plan,
            args.t,
            rationality,
            spec.l,
        )?),
        Mode::Exact => None,
    };
    match args.format.as_str() {
        "json" => {
            let mut v = json!({
                "layout_id": layout.id(),
                "t": args.t,
                "beta": rationality.beta(),
                "mode": spec.mode.as_str(),
                "order": choice.plan.order(),
                "cost": choice.cost,
                "exact_p": exact,
            });
            if let Some(a) = approx {
                v["l"] = json!(spec.l);
                v["approx_p"] = json!(a);
            }
            println!("{v}");
        }
        "text" => {
            println!("order {}", choice.plan);
            println!("cost {}", choice.cost);
            println!("exact_p {exact}");
            if let Some(a) = approx {
                println!("approx_p {a}");
            }
        }
        other => return Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let layouts = load_layouts(&args.layouts, &Bounds::unbounded())?;
    let rationality = Rationality::from_beta(args.observer.beta)?;
    let config = EvalConfig {
        planner_ts: args.ts.clone(),
        ks: args.ks.clone(),
        rationality,
        mode: args.observer.mode,
        l: args.observer.l,
        n_samples: args.samples,
        seed: args.seed,
    };
    let records = evaluate(&layouts, &config)?;
    let meta = RunMeta {
        beta: rationality.beta(),
        mode: args.observer.mode,
        l: args.observer.l,
        seed: args.seed,
    };
    std::fs::write(&args.out, write_results_table(&records, &meta))?;
    let mut meta_path = args.out.clone().into_os_string();
    meta_path.push(".meta.json");
    let sidecar = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "beta": rationality.beta(),
        "mode": args.observer.mode.as_str(),
        "l": args.observer.l,
        "seed": args.seed,
        "samples": args.samples,
        "planner_ts": args.ts,
        "ks": args.ks,
        "capture_radius": args.capture_radius,
    });
    std::fs::write(&meta_path, format!("{sidecar}\n"))?;

    println!("rows {}", records.len());
    for check in diagonal_checks(&records) {
        println!(
            "diagonal k={} t=k:{:.4} best_t!=k:{:.4} {}",
            check.k,
            check.diagonal_rate,
            check.best_off_diagonal_rate,
            if check.holds() { "ok" } else { "VIOLATED" }
        );
    }
    match model_validity(&records) {
        Ok(r) => println!("correlation {r:.4}"),
        Err(e) => println!("correlation n/a ({e})"),
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let layouts = load_layouts(&args.layouts, &Bounds::unbounded())?;
    let rows = sweep(&layouts, args.t, &args.betas, &args.ls)?;
    std::fs::write(&args.out, write_sweep_table(&rows))?;
    println!("rows {}", rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
