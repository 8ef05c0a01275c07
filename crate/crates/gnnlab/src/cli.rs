//! Command-line front end.
//!
//! Subcommands: `gen`, `train`, `bounds`, `sweep`, `validate-norms`,
//! `estimate-trc`, `cora`. Configuration comes from an optional file plus
//! repeated `--set section.key=value` overrides that mirror the config keys
//! one-to-one; flags override file values. No behavior depends on
//! environment variables: randomness is a pure function of `--seed` (and the
//! config seed), and the worker count comes from `--jobs` or the detected
//! core count.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, bad config), 2 runtime
//! failure (I/O, divergence, numerical preconditions).

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    bound_report, measure_bound_norms, trc_upper, BoundInputs, BoundReport, NormSource, VcKind,
};
use crate::data_io::{
    apply_override, load_cora, load_dataset, load_model, parse_config, save_dataset, save_model,
    write_results_commented, OptimizerKind, RunConfig,
};
use crate::experiments::{
    build_gnn_config, materialize_planted, run_single_on, run_sweep,
    validate_expected_norms_with_slack, SweepKind, SweepSpec, TrendReport,
};
use crate::gnn::{measure_param_norms, Activation, LossKind, Metrics};
use crate::graph_ops::{
    build_diffusion, numerical_rank, rank_at_least, DiffusionOperator, DEFAULT_RANK_REL_TOL,
};
use crate::planted::{generate_dataset, Dataset, Labels};
use crate::svg::{line_plot, Series};
use crate::trc::{empirical_trc_lower, SigmaSampler};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gnnlab",
    version,
    about = "Planted-graph GCN laboratory: datasets, training, and generalization bounds",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file (key = value sections); "default" for built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<String>,

    /// Override one config key, e.g. --set planted.n=500 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Master seed (overrides planted.seed from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted dataset and write it to a file.
    Gen(GenArgs),
    /// Train one network and print its metric trajectory.
    Train(TrainArgs),
    /// Print the generalization-bound report for a dataset.
    Bounds(BoundsArgs),
    /// Run a parameter sweep; write rows CSV and an optional SVG plot.
    Sweep(SweepArgs),
    /// Monte Carlo validation of the expected-norm table.
    ValidateNorms(ValidateNormsArgs),
    /// Monte Carlo lower estimate of the network class's transductive
    /// Rademacher complexity, next to its closed-form upper bound.
    EstimateTrc(EstimateTrcArgs),
    /// Load a citation network (content/cites files) and train the
    /// standard two-layer classifier on it.
    Cora(CoraArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output dataset file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Load this dataset instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Write the trained model checkpoint here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Load this dataset instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Measure the weight/bias budgets from this trained checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Weight-norm budget (overrides config bounds.omega).
    #[arg(long)]
    omega: Option<f64>,
    /// Bias-norm budget (overrides config bounds.beta).
    #[arg(long)]
    beta: Option<f64>,
    /// Also report the residual-network bound for this interpolation weight.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep kind: alignment | graph-size | labeled-count | depth |
    /// residual-alpha | feature-noise (overrides config sweep.kind).
    #[arg(long)]
    kind: Option<String>,
    /// Output CSV file.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write an SVG plot of mean gap and scaled bound.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateNormsArgs {
    /// Diffusion to validate: normalized | selfloop (default: config value).
    #[arg(long)]
    diffusion: Option<String>,
    /// Operator power for the norm-growth row.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Monte Carlo sample count (>= 30).
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Pass tolerance: empirical mean <= table * (1 + slack).
    #[arg(long, default_value_t = 0.1)]
    slack: f64,
}

#[derive(Args)]
struct EstimateTrcArgs {
    /// Load this dataset instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Rademacher vector draws per hypothesis set.
    #[arg(long, default_value_t = 200)]
    num_sigma: usize,
    /// Random boundary models in the hypothesis sample.
    #[arg(long, default_value_t = 64)]
    num_models: usize,
    /// Sign probability (default m(n-m)/n^2).
    #[arg(long)]
    p_sigma: Option<f64>,
    /// Weight-norm budget (overrides config bounds.omega).
    #[arg(long)]
    omega: Option<f64>,
    /// Bias-norm budget (overrides config bounds.beta).
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct CoraArgs {
    /// Node file: "id feature... label" rows.
    #[arg(long)]
    content: PathBuf,
    /// Edge file: "cited citing" rows.
    #[arg(long)]
    cites: PathBuf,
    /// Write the trained model checkpoint here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

/// Entry point: parse, execute, map errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let config = match effective_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("usage error: {e}");
            return 1;
        }
    };
    if let Err(e) = preflight(&cli.command, &config) {
        eprintln!("usage error: {e}");
        return 1;
    }
    init_thread_pool(cli.jobs);
    match execute(cli.command, config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// File config, then subcommand protocol defaults, then --set overrides,
/// then --seed — later layers win.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match cli.config.as_deref() {
        None | Some("default") => RunConfig::default(),
        Some(path) => parse_config(Path::new(path))?,
    };
    if matches!(cli.command, Command::Cora(_)) {
        apply_cora_protocol(&mut config);
    }
    for (idx, assignment) in cli.sets.iter().enumerate() {
        apply_override(&mut config, assignment, idx + 1)?;
    }
    if let Some(seed) = cli.seed {
        config.planted.seed = seed;
    }
    Ok(config)
}

/// Citation-network training protocol: multiclass NLL with Adam 0.01 for
/// 200 epochs. Folded in before --set so explicit overrides still win.
fn apply_cora_protocol(config: &mut RunConfig) {
    config.gnn.loss = LossKind::MulticlassNll;
    config.train.optimizer = OptimizerKind::Adam;
    config.train.lr = 0.01;
    config.train.epochs = 200;
    config.train.eval_every = 20;
}

/// Reject malformed argument *values* (not runtime failures) before any
/// work starts, so they exit with the usage code.
fn preflight(command: &Command, config: &RunConfig) -> Result<()> {
    match command {
        Command::Sweep(args) => match args.kind.as_deref().or(config.sweep.kind.as_deref()) {
            Some(name) => SweepKind::parse(name).map(|_| ()),
            None => Err(Error::InvalidConfig(
                "sweep needs a kind: pass --kind or set sweep.kind".into(),
            )),
        },
        Command::ValidateNorms(args) => match args.diffusion.as_deref() {
            None | Some("normalized") | Some("selfloop") => Ok(()),
            Some(other) => Err(Error::InvalidInput(format!(
                "diffusion must be normalized or selfloop, got \"{other}\""
            ))),
        },
        _ => Ok(()),
    }
}

/// Explicit worker count; the detected core count when --jobs is absent
/// (never an environment variable).
fn init_thread_pool(jobs: Option<usize>) {
    let threads = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    // Ignore the error from double initialization (e.g. under test
    // harnesses that already built a pool); output never depends on the
    // worker count.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global();
}

fn execute(command: Command, config: RunConfig) -> Result<()> {
    match command {
        Command::Gen(args) => cmd_gen(&config, &args),
        Command::Train(args) => cmd_train(&config, &args),
        Command::Bounds(args) => cmd_bounds(&config, &args),
        Command::Sweep(args) => cmd_sweep(config, &args),
        Command::ValidateNorms(args) => cmd_validate_norms(&config, &args),
        Command::EstimateTrc(args) => cmd_estimate_trc(&config, &args),
        Command::Cora(config_args) => cmd_cora(config, &config_args),
    }
}

fn dataset_from(config: &RunConfig, data: Option<&PathBuf>) -> Result<Dataset> {
    match data {
        Some(path) => load_dataset(path),
        None => {
            let planted = materialize_planted(&config.planted, None)?;
            generate_dataset(&planted, config.train.m)
        }
    }
}

fn cmd_gen(config: &RunConfig, args: &GenArgs) -> Result<()> {
    let planted = materialize_planted(&config.planted, None)?;
    let dataset = generate_dataset(&planted, config.train.m)?;
    save_dataset(&dataset, &args.out)?;
    let edges = dataset.adjacency.sum() / 2.0;
    let gamma = match &dataset.labels {
        Labels::Planted(lab) => format!("{}", lab.gamma_actual),
        Labels::Classes(_) => "-".to_string(),
    };
    println!(
        "wrote {}: n={} d={} m={} edges={} gamma={}",
        args.out.display(),
        dataset.n(),
        dataset.d(),
        dataset.m(),
        edges as u64,
        gamma,
    );
    Ok(())
}

fn print_metrics_header() {
    println!(
        "{:>6} {:>12} {:>14} {:>10} {:>10} {:>13}",
        "epoch", "train_loss", "unlabeled_loss", "gap_loss", "train_err", "unlabeled_err"
    );
}

fn print_metrics_row(m: &Metrics) {
    println!(
        "{:>6} {:>12.6} {:>14.6} {:>10.6} {:>10.4} {:>13.4}",
        m.epoch, m.train_loss, m.unlabeled_loss, m.gap_loss, m.train_err01, m.unlabeled_err01
    );
}

fn cmd_train(config: &RunConfig, args: &TrainArgs) -> Result<()> {
    let dataset = dataset_from(config, args.data.as_ref())?;
    let run = run_single_on(config, dataset)?;
    print_metrics_header();
    for m in &run.metrics {
        print_metrics_row(m);
    }
    let norms = measure_param_norms(&run.model);
    println!(
        "final: epoch={} unlabeled_err={:.4} gap_loss={:.6} measured omega={:.6} beta={:.6}",
        run.final_metrics.epoch,
        run.final_metrics.unlabeled_err01,
        run.final_metrics.gap_loss,
        norms.omega,
        norms.beta,
    );
    if let Some(path) = &args.save_model {
        save_model(&run.model, path)?;
        println!("saved model checkpoint to {}", path.display());
    }
    Ok(())
}

fn cmd_bounds(config: &RunConfig, args: &BoundsArgs) -> Result<()> {
    let dataset = dataset_from(config, args.data.as_ref())?;
    let s = build_diffusion(&dataset.adjacency, config.bounds.diffusion)?;
    let measured = measure_bound_norms(&s, &dataset.features);

    // Network shape: from the checkpoint when given, else from the config.
    let (k_layers, hidden_dims, activation, model_norms) = match &args.model {
        Some(path) => {
            let model = load_model(path)?;
            if model.config.layer_dims[0] != dataset.d() {
                return Err(Error::InvalidInput(format!(
                    "model expects input width {}, dataset has {}",
                    model.config.layer_dims[0],
                    dataset.d()
                )));
            }
            let dims = model.config.layer_dims.clone();
            let hidden = dims[1..dims.len() - 1].to_vec();
            let norms = measure_param_norms(&model);
            (model.config.k_layers(), hidden, model.config.activation, Some(norms))
        }
        None => {
            let gnn = build_gnn_config(
                &config.gnn,
                dataset.d(),
                dataset.num_classes,
                config.planted.seed,
            )?;
            (gnn.k_layers(), config.gnn.hidden.clone(), config.gnn.activation, None)
        }
    };

    let norm_source = if model_norms.is_some() || config.bounds.measure_norms {
        NormSource::Measured
    } else {
        NormSource::Fixed
    };
    let (omega, beta) = match (&model_norms, args.omega, args.beta) {
        (Some(norms), o, b) => (o.unwrap_or(norms.omega), b.unwrap_or(norms.beta)),
        (None, o, b) => (
            o.unwrap_or(config.bounds.omega),
            b.unwrap_or(config.bounds.beta),
        ),
    };

    let inputs = BoundInputs {
        n: dataset.n(),
        m: dataset.m(),
        k_layers,
        d: dataset.d(),
        lipschitz: config.bounds.lipschitz,
        omega,
        beta,
        s_inf: measured.s_inf,
        sx_2inf: measured.sx_2inf,
        x_inf: measured.x_inf,
        delta: config.bounds.delta,
    };

    let vc_kind = match activation {
        Activation::Identity => VcKind::Linear,
        Activation::Relu => VcKind::ReluUpper,
    };
    // Rank of S: certify rank >= the other capacity terms first (cheap),
    // and only fall back to a full spectrum when the certificate fails.
    let cap_others = match vc_kind {
        VcKind::Linear => dataset
            .d()
            .min(hidden_dims.iter().copied().min().unwrap_or(dataset.d())),
        VcKind::ReluUpper => *hidden_dims.last().unwrap_or(&dataset.d()),
    };
    let rank_s = if rank_at_least(&s, cap_others.min(dataset.n()), DEFAULT_RANK_REL_TOL) {
        dataset.n()
    } else {
        numerical_rank(&s, DEFAULT_RANK_REL_TOL)?
    };

    let report = bound_report(
        &inputs,
        rank_s,
        &hidden_dims,
        vc_kind,
        norm_source,
        args.alpha,
    )?;
    print_bound_report(&report, config.bounds.diffusion, args.alpha);
    Ok(())
}

fn print_bound_report(r: &BoundReport, diffusion: DiffusionOperator, alpha: Option<f64>) {
    println!("bound report");
    println!(
        "  data: n={} m={} d={} layers={} diffusion={}",
        r.n,
        r.m,
        r.d,
        r.k_layers,
        diffusion.name()
    );
    println!(
        "  data norms: |S|_inf={:.6} |SX|_2inf={:.6} |X|_inf={:.6}",
        r.s_inf, r.sx_2inf, r.x_inf
    );
    println!(
        "  budgets ({}): omega={:.6} beta={:.6} lipschitz={} delta={}",
        r.norm_source.name(),
        r.omega,
        r.beta,
        r.lipschitz,
        r.delta
    );
    println!("  constants: c1={:.6} c2={:.6} c3={:.6}", r.c1, r.c2, r.c3);
    println!(
        "  vc: cap={} ({}) gap_bound={:.6}",
        r.vc_cap,
        if r.vc_exact { "exact" } else { "upper bound" },
        r.vc_gap_bound
    );
    println!("  trc_upper = {:.6}", r.trc_upper);
    if let (Some(res), Some(a)) = (r.residual_trc_upper, alpha) {
        println!("  residual_trc_upper(alpha={a}) = {res:.6}");
    }
    println!(
        "  slack: c4_term={:.6} c5_term={:.6}",
        r.slack_c4_term, r.slack_c5_term
    );
    println!("  total_gap_bound = {:.6}", r.total_gap_bound);
}

fn cmd_sweep(mut config: RunConfig, args: &SweepArgs) -> Result<()> {
    if let Some(kind) = &args.kind {
        config.sweep.kind = Some(kind.clone());
    }
    let spec = SweepSpec::from_config(&config)?;
    let (rows, report) = run_sweep(&spec)?;

    // Effective config + trend summary as provenance comments.
    let mut comments = spec.base.echo_lines();
    comments.push(format!(
        "sweep kind={} scale_factor={} cells={}x{}",
        spec.kind.name(),
        spec.scale_factor,
        spec.grid.len(),
        spec.seeds
    ));
    comments.push(match report.spearman_rho {
        Some(rho) => format!("spearman_rho = {rho:.6}"),
        None => "spearman_rho = undefined".to_string(),
    });
    for flag in &report.flags {
        comments.push(format!("flag: {flag}"));
    }
    write_results_commented(&rows, &comments, &args.out)?;
    println!(
        "wrote {} rows to {} ({} grid points x {} seeds)",
        rows.len(),
        args.out.display(),
        spec.grid.len(),
        spec.seeds
    );
    print_trend_report(&report);
    if let Some(svg_path) = &args.svg {
        write_sweep_svg(&report, svg_path)?;
        println!("wrote plot to {}", svg_path.display());
    }
    Ok(())
}

fn print_trend_report(report: &TrendReport) {
    println!(
        "trend ({} vs mean gap): {}",
        report.param_name,
        match report.spearman_rho {
            Some(rho) => format!("spearman_rho = {rho:.4}"),
            None => "spearman_rho undefined".to_string(),
        }
    );
    println!(
        "{:>12} {:>12} {:>14} {:>16}",
        report.param_name, "mean_gap", "bound", "bound/scale"
    );
    for i in 0..report.param_values.len() {
        println!(
            "{:>12} {:>12.6} {:>14.6} {:>16.6}",
            report.param_values[i],
            report.mean_gap[i],
            report.bound_values[i],
            report.scaled_bound_values[i]
        );
    }
    for flag in &report.flags {
        println!("note: {flag}");
    }
}

fn write_sweep_svg(report: &TrendReport, path: &Path) -> Result<()> {
    if report.param_values.is_empty() {
        return Err(Error::InvalidInput(
            "no surviving grid points to plot".into(),
        ));
    }
    let bound_label = format!("bound / {}", report.scale_factor);
    line_plot(
        &format!("{} sweep", report.param_name),
        &report.param_name,
        &report.param_values,
        &[
            Series {
                label: "mean gap",
                ys: &report.mean_gap,
            },
            Series {
                label: &bound_label,
                ys: &report.scaled_bound_values,
            },
        ],
        path,
    )
}

fn cmd_validate_norms(config: &RunConfig, args: &ValidateNormsArgs) -> Result<()> {
    let kind = match args.diffusion.as_deref() {
        None => config.bounds.diffusion,
        Some("normalized") => DiffusionOperator::DegreeNormalized,
        Some("selfloop") => DiffusionOperator::SelfLoop,
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "diffusion must be normalized or selfloop, got \"{other}\""
            )))
        }
    };
    let planted = materialize_planted(&config.planted, None)?;
    let checks = validate_expected_norms_with_slack(&planted, kind, args.k, args.samples, args.slack)?;
    println!(
        "expected-norm validation: n={} p={} q={} diffusion={} k={} samples={}",
        planted.n,
        planted.p,
        planted.q,
        kind.name(),
        args.k,
        args.samples
    );
    let label = |row| match row {
        crate::bounds::NormTableRow::SInfPow => "E |S|_inf^k",
        crate::bounds::NormTableRow::SmsX => "E |(S-S_pop) X_pop|_2inf^2",
        crate::bounds::NormTableRow::XmxS => "E |S (X-X_pop)|_2inf^2",
        crate::bounds::NormTableRow::SxDet => "|S_pop X_pop|_2inf",
    };
    for c in &checks {
        println!(
            "  {} {:<28} empirical {:>14.6e} vs table {:>14.6e} (slack {})",
            if c.pass { "PASS" } else { "FAIL" },
            label(c.row),
            c.empirical_mean,
            c.table_value,
            c.slack
        );
    }
    Ok(())
}

fn cmd_estimate_trc(config: &RunConfig, args: &EstimateTrcArgs) -> Result<()> {
    let dataset = dataset_from(config, args.data.as_ref())?;
    let s = build_diffusion(&dataset.adjacency, config.bounds.diffusion)?;
    let omega = args.omega.unwrap_or(config.bounds.omega);
    let beta = args.beta.unwrap_or(config.bounds.beta);
    // The complexity is defined for scalar-output networks; pin the head
    // width regardless of the configured loss.
    let mut gnn_section = config.gnn.clone();
    gnn_section.loss = LossKind::SquaredBinary;
    let gnn = build_gnn_config(
        &gnn_section,
        dataset.d(),
        dataset.num_classes,
        config.planted.seed,
    )?;
    let estimate = empirical_trc_lower(
        &s,
        &dataset.features,
        dataset.m(),
        omega,
        beta,
        &gnn,
        args.p_sigma,
        args.num_sigma,
        args.num_models,
        config.planted.seed,
    )?;
    let measured = measure_bound_norms(&s, &dataset.features);
    let inputs = BoundInputs {
        n: dataset.n(),
        m: dataset.m(),
        k_layers: gnn.k_layers(),
        d: dataset.d(),
        lipschitz: config.bounds.lipschitz,
        omega,
        beta,
        s_inf: measured.s_inf,
        sx_2inf: measured.sx_2inf,
        x_inf: measured.x_inf,
        delta: config.bounds.delta,
    };
    let upper = trc_upper(&inputs)?;
    println!(
        "empirical TRC lower estimate: {:.6e} (se {:.2e}, {} sigma draws, {} hypothesis vectors, p_sigma {:.4})",
        estimate.mean,
        estimate.standard_error,
        estimate.num_sigma_draws,
        estimate.num_hypothesis_samples,
        estimate.p_sigma
    );
    println!(
        "closed-form TRC upper bound: {upper:.6e} (measured |S|_inf={:.4}, |SX|_2inf={:.4}; omega={omega}, beta={beta})",
        measured.s_inf, measured.sx_2inf
    );
    println!(
        "lower/upper ratio: {:.3e}  (Q = {:.6})",
        estimate.mean / upper,
        SigmaSampler::q_factor(dataset.n(), dataset.m())
    );
    Ok(())
}

fn cmd_cora(config: RunConfig, args: &CoraArgs) -> Result<()> {
    let load = load_cora(&args.content, &args.cites, config.planted.seed)?;
    if load.dropped_unknown > 0 {
        eprintln!(
            "warning: dropped {} citation(s) referencing unknown ids",
            load.dropped_unknown
        );
    }
    if load.dropped_self_loops > 0 {
        eprintln!(
            "warning: dropped {} self-citation(s)",
            load.dropped_self_loops
        );
    }
    let dataset = load.dataset;
    println!(
        "loaded citation network: n={} d={} classes={} m={} edges={}",
        dataset.n(),
        dataset.d(),
        dataset.num_classes,
        dataset.m(),
        (dataset.adjacency.sum() / 2.0) as u64
    );
    let run = run_single_on(&config, dataset)?;
    print_metrics_header();
    for m in &run.metrics {
        print_metrics_row(m);
    }
    println!(
        "final: epoch={} unlabeled 0-1 error = {:.4}",
        run.final_metrics.epoch, run.final_metrics.unlabeled_err01
    );
    if let Some(path) = &args.save_model {
        save_model(&run.model, path)?;
        println!("saved model checkpoint to {}", path.display());
    }
    Ok(())
}
