//! Command-line front end for the pipeline fitter.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 when no hardware option
//! fits the target under the thresholds, 4 on internal errors.

use clap::{Parser, Subcommand, ValueEnum};
use lanefit::cost::{self, HardwareOption, HardwareTarget};
use lanefit::dse::{self, DseError, Thresholds};
use lanefit::emit::DesignBundle;
use lanefit::ir;
use lanefit::pipeline::{self, ParsedModel, PipelineError, Strategy};
use lanefit::quant::{self, QuantSpec};
use lanefit::sim;
use std::path::PathBuf;

/// Environment variable naming a target catalog file that replaces the
/// built-in device list.
const TARGETS_ENV: &str = "LANEFIT_TARGETS";

#[derive(Parser)]
#[command(name = "lanefit", version, about = "Fit a CNN onto a pipelined FPGA accelerator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Exhaustive scan of the legal space.
    Bf,
    /// Q-learning agent walk over the legal space.
    Rl,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a model and print its lowered layers and pipeline stages.
    Parse {
        model: PathBuf,
    },
    /// Search the legal hardware options for the best fit on a target.
    Explore {
        model: PathBuf,
        /// Device name or unique fragment of one (see the catalog).
        #[arg(long)]
        target: String,
        /// Utilization ceilings as lut,dsp,mem,reg percentages.
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_enum, default_value = "bf")]
        strategy: StrategyArg,
        /// Seed for the learning strategy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run both strategies and report whether they agree.
        #[arg(long)]
        compare: bool,
        /// Print the per-step search trace.
        #[arg(long)]
        trace: bool,
        /// Also list the K best feasible options (0 = all).
        #[arg(long, default_value_t = 0)]
        top_k: usize,
    },
    /// Explore, quantize and write a deployable configuration bundle.
    Build {
        model: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_enum, default_value = "bf")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip exploration and use this option, given as ni,nl.
        #[arg(long)]
        option: Option<String>,
        /// Per-stage fixed-point config file (lines: stage m_w m_b m_in m_out).
        #[arg(long)]
        quant_config: Option<PathBuf>,
        /// Fractional bits for stages the config file does not cover.
        #[arg(long, default_value_t = 4)]
        global_m: i32,
        /// Output directory for the bundle.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a bundle in the functional simulator on one input.
    Emulate {
        /// Bundle directory written by `build`.
        #[arg(long)]
        bundle: PathBuf,
        /// Activation file: a `c h w` header line, then little-endian f32s.
        #[arg(long)]
        input: PathBuf,
        /// Print per-stage work reports.
        #[arg(long)]
        reports: bool,
    },
    /// List the device catalog in use.
    Targets,
    #[command(hide = true)]
    SelftestPanic,
}

fn catalog() -> Result<Vec<HardwareTarget>, PipelineError> {
    match std::env::var_os(TARGETS_ENV) {
        Some(path) => {
            let text = std::fs::read_to_string(&path)?;
            Ok(cost::parse_catalog(&text)?)
        }
        None => Ok(cost::default_targets()),
    }
}

fn thresholds_arg(text: &Option<String>) -> Result<Thresholds, PipelineError> {
    match text {
        Some(t) => Ok(Thresholds::parse(t)?),
        None => Ok(Thresholds::default()),
    }
}

fn load_model(path: &PathBuf) -> Result<(Vec<u8>, ParsedModel), PipelineError> {
    let bytes = std::fs::read(path)?;
    let model = pipeline::parse_model_bytes(&bytes)?;
    for note in &model.diagnostics {
        eprintln!("note: {note}");
    }
    Ok((bytes, model))
}

fn parse_option(text: &str) -> Result<HardwareOption, String> {
    let (a, b) = text.split_once(',').ok_or_else(|| format!("expected ni,nl; got {text:?}"))?;
    let n_i = a.trim().parse::<usize>().map_err(|_| format!("bad vector width {a:?}"))?;
    let n_l = b.trim().parse::<usize>().map_err(|_| format!("bad lane count {b:?}"))?;
    if n_i == 0 || n_l == 0 {
        return Err("option components must be positive".into());
    }
    Ok(HardwareOption::new(n_i, n_l))
}

fn print_estimate(est: &lanefit::cost::ResourceEstimate) {
    println!(
        "utilization lut={:.2} dsp={:.2} mem={:.2} reg={:.2}",
        est.p_lut, est.p_dsp, est.p_mem, est.p_reg
    );
}

fn strategy_of(arg: StrategyArg, seed: u64) -> Strategy {
    match arg {
        StrategyArg::Bf => Strategy::Brute,
        StrategyArg::Rl => Strategy::Rl { seed },
    }
}

fn pick_option(
    model: &ParsedModel,
    target: &HardwareTarget,
    th: &Thresholds,
    strategy: Strategy,
) -> Result<HardwareOption, PipelineError> {
    let outcome = pipeline::explore(model, target, th, strategy)?;
    match outcome.result.h_best {
        Some(opt) => Ok(opt),
        None => Err(DseError::NoFeasibleOption { evaluations: outcome.result.evaluations }.into()),
    }
}

fn cmd_parse(model_path: &PathBuf) -> Result<(), PipelineError> {
    let (_, model) = load_model(model_path)?;
    match model.graph.opset {
        Some(v) => println!("opset {v}"),
        None => println!("opset unspecified"),
    }
    println!("layers {}", model.layers.len());
    print!("{}", ir::dump_ir(&model.layers));
    println!("stages {}", model.stages.len());
    for (k, stage) in model.stages.iter().enumerate() {
        println!(
            "stage {k} {} in={} out={} buffer={}B",
            stage.buffer_kind,
            stage.in_shape(),
            stage.out_shape(),
            stage.buffer_bytes()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_explore(
    model_path: &PathBuf,
    target_name: &str,
    thresholds: &Option<String>,
    strategy: StrategyArg,
    seed: u64,
    compare: bool,
    trace: bool,
    top_k: usize,
) -> Result<(), PipelineError> {
    let (_, model) = load_model(model_path)?;
    let targets = catalog()?;
    let target = cost::find_target(&targets, target_name)?;
    let th = thresholds_arg(thresholds)?;
    println!("target {} thresholds {:?}", target.name, th.as_array());

    if compare {
        let bf = pipeline::explore(&model, target, &th, Strategy::Brute)?;
        let rl = pipeline::explore(&model, target, &th, Strategy::Rl { seed })?;
        let show = |label: &str, outcome: &pipeline::ExplorationOutcome| {
            match outcome.result.h_best {
                Some(opt) => println!(
                    "{label} {opt} favg {:.2} evaluations {}",
                    outcome.result.f_max, outcome.result.evaluations
                ),
                None => println!("{label} none favg 0.00 evaluations {}", outcome.result.evaluations),
            }
        };
        show("brute", &bf);
        show("rl", &rl);
        println!("agreement {}", bf.result.h_best == rl.result.h_best);
        return Ok(());
    }

    let outcome = pipeline::explore(&model, target, &th, strategy_of(strategy, seed))?;
    println!("space {} options", outcome.space.len());
    match outcome.result.h_best {
        Some(best) => {
            println!("best {best} favg {:.2}", outcome.result.f_max);
            let est = lanefit::cost::ResourceEstimator::estimate(
                &lanefit::cost::CostModel::default(),
                &model.stages,
                best,
                target,
            );
            print_estimate(&est);
            println!("evaluations {}", outcome.result.evaluations);
        }
        None => {
            println!("evaluations {}", outcome.result.evaluations);
            return Err(DseError::NoFeasibleOption { evaluations: outcome.result.evaluations }.into());
        }
    }
    if top_k > 0 {
        for (rank, (opt, _, f)) in pipeline::rank_options(&model, target, &th, top_k)?.iter().enumerate() {
            println!("rank {} {opt} favg {f:.2}", rank + 1);
        }
    }
    if trace {
        print!("{}", dse::render_trace(&outcome.result.trace));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    model_path: &PathBuf,
    target_name: &str,
    thresholds: &Option<String>,
    strategy: StrategyArg,
    seed: u64,
    option: &Option<String>,
    quant_config: &Option<PathBuf>,
    global_m: i32,
    out: &PathBuf,
) -> Result<(), PipelineError> {
    let (bytes, model) = load_model(model_path)?;
    let targets = catalog()?;
    let target = cost::find_target(&targets, target_name)?;
    let th = thresholds_arg(thresholds)?;

    let opt = match option {
        Some(text) => {
            let opt = parse_option(text).map_err(|e| {
                PipelineError::Io(std::io::Error::new(std::io::ErrorKind::InvalidInput, e))
            })?;
            if !pipeline::option_is_legal(&model, opt)? {
                return Err(PipelineError::Io(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    format!("option {opt} is not in the model's legal space"),
                )));
            }
            opt
        }
        None => pick_option(&model, target, &th, strategy_of(strategy, seed))?,
    };

    let spec = match quant_config {
        Some(path) => QuantSpec::parse(&std::fs::read_to_string(path)?, global_m)?,
        None => QuantSpec::uniform(global_m),
    };
    let bundle = pipeline::build_bundle(&bytes, &model, opt, &spec)?;
    let written = bundle.emit(out)?;
    println!("option {opt}");
    println!("fingerprint {}", bundle.fingerprint);
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_emulate(bundle_dir: &PathBuf, input_path: &PathBuf, reports: bool) -> Result<(), PipelineError> {
    let bundle = DesignBundle::load(bundle_dir)?;
    let stages = bundle.to_stages();
    let spec = bundle.quant_spec();
    let (shape, values) = sim::read_input_file(input_path)?;
    let m_in = spec.for_stage(0).m_in;
    let (codes, saturated) = quant::quantize_slice(&values, m_in);
    if saturated > 0 {
        eprintln!("note: {saturated} input values saturated at m={m_in}");
    }
    let input = quant::QuantizedTensor::new(vec![shape.c, shape.h, shape.w], codes, m_in);
    let (logits, stage_reports) = sim::run_network(&stages, &input, bundle.option, &spec)?;

    let dequant = logits.dequantized();
    let rendered: Vec<String> = dequant.iter().map(|v| format!("{v:.4}")).collect();
    println!("logits {}", rendered.join(" "));
    let argmax = dequant
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    println!("argmax {argmax}");
    let wants_softmax = bundle
        .stages
        .last()
        .and_then(|s| s.compute.as_ref())
        .is_some_and(|c| c.softmax);
    if wants_softmax {
        let probs: Vec<String> = sim::softmax(&logits).iter().map(|p| format!("{p:.4}")).collect();
        println!("probs {}", probs.join(" "));
    }
    if reports {
        print!("{}", sim::render_reports(&stage_reports));
    }
    Ok(())
}

fn cmd_targets() -> Result<(), PipelineError> {
    for t in catalog()? {
        println!(
            "{} alm={} dsp={} ram={} membits={}",
            t.name, t.alm_capacity, t.dsp_capacity, t.ram_block_capacity, t.mem_bit_capacity
        );
    }
    Ok(())
}

fn run() -> Result<(), PipelineError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Parse { model } => cmd_parse(model),
        Command::Explore { model, target, thresholds, strategy, seed, compare, trace, top_k } => {
            cmd_explore(model, target, thresholds, *strategy, *seed, *compare, *trace, *top_k)
        }
        Command::Build { model, target, thresholds, strategy, seed, option, quant_config, global_m, out } => {
            cmd_build(model, target, thresholds, *strategy, *seed, option, quant_config, *global_m, out)
        }
        Command::Emulate { bundle, input, reports } => cmd_emulate(bundle, input, *reports),
        Command::Targets => cmd_targets(),
        Command::SelftestPanic => panic!("deliberate self-test panic"),
    }
}

fn exit_code(err: &PipelineError) -> i32 {
    match err {
        PipelineError::Dse(DseError::NoFeasibleOption { .. }) => 3,
        _ => 2,
    }
}

fn main() {
    let outcome = std::panic::catch_unwind(run);
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&err)
        }
        Err(_) => {
            eprintln!("internal error: unexpected panic");
            4
        }
    };
    std::process::exit(code);
}
