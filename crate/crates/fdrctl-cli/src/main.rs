//! Command-line front end: `apply`, `simulate`, `shapes` and `check`.
//!
//! Exit codes: 0 on success, 2 on usage errors (from argument parsing),
//! 1 on runtime failures. Diagnostics go to stderr; data goes to files
//! or stdout.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fdrctl::conditions::{
    check_self_consistency, dc_estimate, monotonicity_probe, prds_curve_estimate,
    pvalue_volume_sampler, AnalyticSampler,
};
use fdrctl::io::{read_pvalue_csv, write_apply_csv, write_report_csv, write_shape_table_csv};
use fdrctl::simulation::ExperimentConfig;
use fdrctl::specs::{CompiledProcedure, ProcedureSpec, ShapeSpec};
use fdrctl::{
    run_experiment, shape_table, weighted_pvalues, DependenceModel, HypothesisSpace, PValueVector,
};

#[derive(Parser)]
#[command(name = "fdrctl", version, about = "Multiple testing with FDR control")]
struct Cli {
    /// Master seed; all randomness flows from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for simulation: a count or `auto`.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_threads)]
    threads: Threads,

    /// Suppress diagnostic notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug)]
enum Threads {
    Auto,
    Count(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    s.parse()
        .map(Threads::Count)
        .map_err(|_| format!("`{s}` is not a thread count (expected a number or `auto`)"))
}

#[derive(Subcommand)]
enum Command {
    /// Apply a multiple-testing procedure to a CSV of p-values.
    Apply {
        /// Procedure spec: su|sd|sud:<lambda>|rank:<kind>|adaptive:<a0>,<a1>,
        /// optionally with an embedded shape (e.g. `su:linear`).
        #[arg(long)]
        procedure: String,
        /// Target FDR level.
        #[arg(long)]
        alpha: f64,
        /// Shape spec used when the procedure spec does not embed one.
        #[arg(long)]
        shape: Option<String>,
        /// Input CSV with header `id,p[,pi,lambda,is_null]`.
        #[arg(long)]
        input: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a batch Monte-Carlo experiment described by a JSON config.
    Simulate {
        /// JSON config with procedures, models, alpha grid, n_trials, seed.
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit the normalized shape table `m^-1 beta(r)` as CSV.
    Shapes {
        /// Number of hypotheses.
        #[arg(long)]
        m: usize,
        /// Comma-separated shape specs (e.g. `linear,by,prior:uniform,holm`).
        #[arg(long)]
        shapes: String,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical condition checks, reported as JSON on stdout.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckMode {
    /// Self-consistency of a factorized procedure on a data set.
    Sc,
    /// Dependency-control estimates over a grid of c values.
    Dc,
    /// Volume monotonicity under single p-value decreases.
    Mono,
    /// Conditional curve u -> P(|R| < r | p_h <= u).
    Prds,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    mode: CheckMode,

    /// Procedure spec (modes sc, mono, prds, and the `stepup` sampler).
    #[arg(long, default_value = "su:linear")]
    procedure: String,

    /// Level for the procedure under test.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    /// Shape of the dependency-control functional (mode dc).
    #[arg(long, default_value = "linear")]
    shape: String,

    /// Input p-value CSV (modes sc and mono).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Sampler for mode dc: const1 | oneminus | halfu | stepup.
    #[arg(long, default_value = "stepup")]
    sampler: String,

    /// Comma-separated c grid (mode dc).
    #[arg(long, default_value = "0.01,0.05,0.1,0.5,1")]
    c_grid: String,

    /// Monte-Carlo sample count (modes dc and prds).
    #[arg(long, default_value_t = 100_000)]
    n: u64,

    /// Perturbation count (mode mono).
    #[arg(long, default_value_t = 1000)]
    n_perturb: u64,

    /// Model kind: independent | equicorrelated | negative.
    #[arg(long, default_value = "independent")]
    model: String,

    /// Model size (also used to materialize shapes in mode dc).
    #[arg(long, default_value_t = 100)]
    m: usize,

    /// True null count of the model.
    #[arg(long)]
    m0: Option<usize>,

    /// Equicorrelation parameter.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,

    /// Alternative mean shift.
    #[arg(long, default_value_t = 3.0)]
    mu1: f64,

    /// True-null hypothesis index conditioned on (modes dc and prds).
    #[arg(long, default_value_t = 0)]
    h: usize,

    /// Volume threshold of the conditional event (mode prds).
    #[arg(long, default_value_t = 1.0)]
    r: f64,

    /// Comma-separated conditioning grid in (0, 1] (mode prds).
    #[arg(long, default_value = "0.05,0.1,0.2,0.4,0.7,1.0")]
    u_grid: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Threads::Count(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already initialized")?;
    }
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Apply {
            procedure,
            alpha,
            shape,
            input,
            output,
        } => apply(
            &procedure,
            alpha,
            shape.as_deref(),
            &input,
            output,
            cli.quiet,
        ),
        Command::Simulate { config } => simulate(&config, cli.seed, cli.quiet),
        Command::Shapes { m, shapes, out } => emit_shapes(m, &shapes, out),
        Command::Check(args) => check(&args, seed),
    }
}

fn open_output(path: Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("`{t}` is not a number"))
        })
        .collect()
}

fn apply(
    procedure: &str,
    alpha: f64,
    shape: Option<&str>,
    input: &PathBuf,
    output: Option<PathBuf>,
    quiet: bool,
) -> Result<()> {
    let table = read_pvalue_csv(
        File::open(input).with_context(|| format!("cannot open {}", input.display()))?,
    )?;
    let shape_spec = shape.map(ShapeSpec::parse).transpose()?;
    let spec = ProcedureSpec::parse(procedure)?.with_default_shape(shape_spec);
    let compiled = spec.compile(alpha, table.space.len())?;
    let outcome = compiled.apply(&table.pvalues, &table.space)?;
    let weighted = weighted_pvalues(&table.pvalues, &table.space)?;
    let rejected = outcome.rejections.mask(&table.space);
    let mut out = open_output(output)?;
    write_apply_csv(
        &mut out,
        &table.space,
        &table.pvalues,
        &weighted,
        &rejected,
        outcome.rejections.volume(),
        outcome.pi0_hat,
    )?;
    out.flush()?;
    if !quiet {
        // H0 is unknown on real data; report the worst-case budget.
        let budget = alpha * table.space.pi_volume_total();
        eprintln!("note: FDR <= alpha * Pi(H) = {budget}");
    }
    Ok(())
}

fn simulate(config_path: &PathBuf, seed_override: Option<u64>, quiet: bool) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read {}", config_path.display()))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", config_path.display()))?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let reports = run_experiment(&config)?;
    let csv_path = config
        .out_csv
        .clone()
        .unwrap_or_else(|| "report.csv".into());
    let json_path = config
        .out_json
        .clone()
        .unwrap_or_else(|| "report.json".into());
    let mut csv_out = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("cannot create {csv_path}"))?,
    );
    write_report_csv(&mut csv_out, &reports)?;
    csv_out.flush()?;
    let mut json_out = BufWriter::new(
        File::create(&json_path).with_context(|| format!("cannot create {json_path}"))?,
    );
    serde_json::to_writer_pretty(&mut json_out, &reports)?;
    json_out.write_all(b"\n")?;
    json_out.flush()?;
    if !quiet {
        eprintln!(
            "note: wrote {} reports to {csv_path} and {json_path}",
            reports.len()
        );
    }
    Ok(())
}

fn emit_shapes(m: usize, shapes: &str, out: Option<PathBuf>) -> Result<()> {
    let specs: Vec<ShapeSpec> = shapes
        .split(',')
        .map(|s| ShapeSpec::parse(s.trim()))
        .collect::<fdrctl::Result<_>>()?;
    if specs.is_empty() {
        bail!("no shapes given");
    }
    let names: Vec<String> = specs.iter().map(|s| s.canonical()).collect();
    let curves = specs
        .iter()
        .map(|s| s.table_curve(m))
        .collect::<fdrctl::Result<Vec<_>>>()?;
    let rows = shape_table(&curves, m);
    let mut w = open_output(out)?;
    write_shape_table_csv(&mut w, &names, &rows)?;
    w.flush()?;
    Ok(())
}

fn build_model(args: &CheckArgs) -> Result<DependenceModel> {
    let m0 = args.m0.unwrap_or(args.m);
    Ok(match args.model.as_str() {
        "independent" => DependenceModel::independent(args.m, m0, args.mu1)?,
        "equicorrelated" => DependenceModel::equicorrelated(args.rho, args.m, m0, args.mu1)?,
        "negative" => DependenceModel::negative(args.rho, args.m, m0, args.mu1)?,
        other => bail!("unknown model `{other}`"),
    })
}

fn factorized_of(compiled: &CompiledProcedure) -> Result<&fdrctl::FactorizedThresholds> {
    match compiled {
        CompiledProcedure::StepUp(delta)
        | CompiledProcedure::StepDown(delta)
        | CompiledProcedure::StepUpDown { delta, .. } => Ok(delta),
        _ => bail!("self-consistency checks need a factorized procedure (su, sd or sud)"),
    }
}

fn check(args: &CheckArgs, seed: u64) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match args.mode {
        CheckMode::Sc => {
            let input = args
                .input
                .as_ref()
                .ok_or_else(|| anyhow!("mode sc needs --input"))?;
            let table = read_pvalue_csv(File::open(input)?)?;
            let spec = ProcedureSpec::parse(&args.procedure)?;
            let compiled = spec.compile(args.alpha, table.space.len())?;
            let delta = factorized_of(&compiled)?;
            let outcome = compiled.apply(&table.pvalues, &table.space)?;
            let sc =
                check_self_consistency(&outcome.rejections, delta, &table.pvalues, &table.space)?;
            let json = serde_json::json!({
                "mode": "sc",
                "procedure": spec.canonical(),
                "alpha": args.alpha,
                "ok": sc.holds,
                "witness": sc.witness.map(|h| table.space.label(h).to_string()),
                "r_hat": outcome.rejections.volume(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
        }
        CheckMode::Dc => {
            let c_grid = parse_grid(&args.c_grid)?;
            let beta = ShapeSpec::parse(&args.shape)?.materialize(args.m)?;
            let analytic = |s: AnalyticSampler| {
                dc_estimate(move |rng| s.sample(rng), &beta, &c_grid, args.n, seed)
            };
            let estimates = match args.sampler.as_str() {
                "const1" => analytic(AnalyticSampler::ConstantOne)?,
                "oneminus" => analytic(AnalyticSampler::OneMinusU)?,
                "halfu" => analytic(AnalyticSampler::HalfU)?,
                "stepup" => {
                    let model = build_model(args)?;
                    let space = HypothesisSpace::standard(model.m());
                    let spec = ProcedureSpec::parse(&args.procedure)?;
                    let compiled = spec.compile(args.alpha, model.m())?;
                    let procedure = |p: &PValueVector, s: &HypothesisSpace| {
                        compiled.apply(p, s).map(|o| o.rejections)
                    };
                    let sampler = pvalue_volume_sampler(&model, &space, procedure, args.h);
                    dc_estimate(sampler, &beta, &c_grid, args.n, seed)?
                }
                other => bail!("unknown sampler `{other}`"),
            };
            let rows: Vec<serde_json::Value> = estimates
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "c": e.c,
                        "estimate": e.estimate,
                        "se": e.se,
                        "n_used": e.n_used,
                        "violations": e.violations,
                        "pass": e.passes(),
                    })
                })
                .collect();
            let json =
                serde_json::json!({"mode": "dc", "sampler": args.sampler, "estimates": rows});
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
        }
        CheckMode::Mono => {
            let input = args
                .input
                .as_ref()
                .ok_or_else(|| anyhow!("mode mono needs --input"))?;
            let table = read_pvalue_csv(File::open(input)?)?;
            let spec = ProcedureSpec::parse(&args.procedure)?;
            let compiled = spec.compile(args.alpha, table.space.len())?;
            let violations = monotonicity_probe(
                |p, s| compiled.apply(p, s).map(|o| o.rejections),
                &table.pvalues,
                &table.space,
                args.n_perturb,
                seed,
            )?;
            let json = serde_json::json!({
                "mode": "mono",
                "procedure": spec.canonical(),
                "n_perturb": args.n_perturb,
                "violations": violations,
                "pass": violations == 0,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
        }
        CheckMode::Prds => {
            let model = build_model(args)?;
            let space = HypothesisSpace::standard(model.m());
            let spec = ProcedureSpec::parse(&args.procedure)?;
            let compiled = spec.compile(args.alpha, model.m())?;
            let u_grid = parse_grid(&args.u_grid)?;
            let curve = prds_curve_estimate(
                &model,
                &space,
                |p, s| compiled.apply(p, s).map(|o| o.rejections),
                args.h,
                args.r,
                &u_grid,
                args.n,
                seed,
            )?;
            let json = serde_json::json!({
                "mode": "prds",
                "procedure": spec.canonical(),
                "r": args.r,
                "nondecreasing_within_noise": curve.nondecreasing_within_noise,
                "points": curve.points,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
        }
    }
    Ok(())
}
