//! Command-line front end for the memchan toolkit.
//!
//! All times are expressed in units of the environment relaxation time
//! (`tau_e = 1` internally). Exit codes: 0 success, 1 validation failure,
//! 2 usage error.

mod rates_cmd;
mod sweep;

use clap::{Args, Parser, Subcommand};
use memchan::channels::CarrierSequence;
use memchan::markov::{
    markov_decompose, markov_reconstruct, DecoherentEnvironment, DecoherentRelaxation,
    ProbabilityConvention,
};
use memchan::quantum::trace_distance;
use memchan::rates::{dephasing_classical_capacity, dephasing_quantum_capacity};
use memchan::validate::{all_passed, run_suite, ValidateOptions};
use memchan::{channels, sampling};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use sweep::{OutputFormat, SweepConfig, TauGrid};

const USAGE_ERROR: u8 = 2;
const VALIDATION_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "memchan",
    version,
    about = "Quantum memory-channel toolkit: capacities, attenuation sweeps, rates, validation",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantum and classical capacity of the dephasing channel.
    Capacity(CapacityArgs),
    /// Sweep the noise-attenuation protocol and write a CSV/JSON table.
    AttenuationSweep(SweepArgs),
    /// Transmission rates for a carrier sequence or protocol.
    Rates(rates_cmd::RatesArgs),
    /// Cross-check the Markov path-sum against direct sequence composition.
    MarkovCheck(MarkovCheckArgs),
    /// Run the structural invariant suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CapacityArgs {
    /// Coherence factor g of the phase-damping channel.
    #[arg(long, value_name = "G", allow_hyphen_values = true)]
    g: Option<f64>,
    /// Coupling strength; implies g = sqrt(lambda).
    #[arg(long, value_name = "LAMBDA")]
    lambda: Option<f64>,
    /// Emit a JSON run record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; flags override individual fields.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Comma-separated coupling strengths.
    #[arg(long, value_name = "L1,L2,...", value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Comma-separated programming-block lengths.
    #[arg(long, value_name = "N1,N2,...", value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_name = "TAU")]
    tau_start: Option<f64>,
    #[arg(long, value_name = "TAU")]
    tau_stop: Option<f64>,
    #[arg(long, value_name = "COUNT")]
    tau_steps: Option<usize>,
    /// Hold the population fixed at this value instead of optimizing.
    #[arg(long, value_name = "P")]
    fixed_p: Option<f64>,
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
    /// Output format: csv or json.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Evaluate rows on this many threads (output order is unaffected).
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct MarkovCheckArgs {
    /// Carriers per instance (1..=4).
    #[arg(long, default_value_t = 3)]
    carriers: usize,
    /// Number of random instances.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0x6d6b)]
    seed: u64,
    /// Coupling strength of the qubit instance.
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Negative control: shift the relaxation parameter out of range.
    #[arg(long)]
    inject_eta_fault: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Capacity(args) => cmd_capacity(args),
        Command::AttenuationSweep(args) => cmd_sweep(args),
        Command::Rates(args) => rates_cmd::run(args),
        Command::MarkovCheck(args) => cmd_markov_check(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(USAGE_ERROR)
}

pub(crate) fn run_record(inputs: serde_json::Value, outputs: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "inputs": inputs,
        "outputs": outputs,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339(),
    })
}

fn cmd_capacity(args: CapacityArgs) -> ExitCode {
    let g = match (args.g, args.lambda) {
        (Some(g), None) => g,
        (None, Some(lambda)) => {
            if !(0.0..=1.0).contains(&lambda) {
                return usage_error("--lambda must lie in [0, 1]");
            }
            lambda.sqrt()
        }
        _ => return usage_error("pass exactly one of --g or --lambda"),
    };
    let (q, c) = match (dephasing_quantum_capacity(g), dephasing_classical_capacity(g)) {
        (Ok(q), Ok(c)) => (q, c),
        _ => return usage_error("--g must lie in [-1, 1]"),
    };
    if args.json {
        let record = run_record(
            serde_json::json!({ "g": g, "lambda": args.lambda }),
            serde_json::json!({
                "quantum_capacity": sweep::round_sig(q),
                "classical_capacity": sweep::round_sig(c),
            }),
        );
        println!("{}", serde_json::to_string_pretty(&record).expect("serializable record"));
    } else {
        println!("g = {}", sweep::fmt_sig(g));
        println!("Q = {} qubits/use", sweep::fmt_sig(q));
        println!("C = {} bits/use", sweep::fmt_sig(c));
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    // Precedence: built-in defaults < config file < flags.
    let mut config = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str::<SweepConfig>(&text) {
                Ok(c) => c,
                Err(e) => return usage_error(&format!("config {path}: {e}")),
            },
            Err(e) => return usage_error(&format!("config {path}: {e}")),
        },
        None => SweepConfig {
            lambda_values: vec![0.01],
            n_values: vec![1],
            tau_over_tau_e: TauGrid { start: 0.02, stop: 1.0, steps: 50 },
            optimize_p: true,
            p: 1.0,
            output_path: "attenuation_sweep.csv".into(),
            format: OutputFormat::Csv,
        },
    };
    if !args.lambda.is_empty() {
        config.lambda_values = args.lambda.clone();
    }
    if !args.n.is_empty() {
        config.n_values = args.n.clone();
    }
    if let Some(start) = args.tau_start {
        config.tau_over_tau_e.start = start;
    }
    if let Some(stop) = args.tau_stop {
        config.tau_over_tau_e.stop = stop;
    }
    if let Some(steps) = args.tau_steps {
        config.tau_over_tau_e.steps = steps;
    }
    if let Some(p) = args.fixed_p {
        config.optimize_p = false;
        config.p = p;
    }
    if let Some(output) = &args.output {
        config.output_path = output.clone();
    }
    if let Some(format) = &args.format {
        config.format = match format.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return usage_error(&format!("unknown format {other:?}; use csv or json")),
        };
    }

    let rows = match sweep::run_sweep(&config, args.jobs.max(1)) {
        Ok(rows) => rows,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Err(e) = sweep::write_output(&config, &rows) {
        return usage_error(&e.to_string());
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.gamma.partial_cmp(&b.gamma).expect("finite gamma"))
        .expect("non-empty grid");
    println!(
        "wrote {} rows to {}; max gamma {} at lambda={} n={} tau/tau_e={}",
        rows.len(),
        config.output_path,
        sweep::fmt_sig(best.gamma),
        sweep::fmt_sig(best.lambda),
        best.n,
        sweep::fmt_sig(best.tau_over_tau_e),
    );
    ExitCode::SUCCESS
}

fn cmd_markov_check(args: MarkovCheckArgs) -> ExitCode {
    if args.carriers == 0 || args.carriers > 4 {
        return usage_error("--carriers must lie in 1..=4");
    }
    if !(0.0..=1.0).contains(&args.lambda) {
        return usage_error("--lambda must lie in [0, 1]");
    }
    let coupling = match channels::qubit_control_coupling(args.lambda) {
        Ok(u) => u,
        Err(e) => return usage_error(&e.to_string()),
    };
    let env = DecoherentEnvironment::new(
        coupling,
        2,
        DecoherentRelaxation::qubit_rotation(1.0),
        1.0,
    )
    .expect("qubit rotation family is decoherent");
    let model = env.to_model().expect("decoherent model is well formed");

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..args.instances {
        let n = rng.gen_range(1..=args.carriers);
        let s = CarrierSequence::periodic(vec![
            rng.gen_range(0.05..1.5),
            rng.gen_range(0.05..1.5),
        ])
        .expect("positive intervals");
        let input = sampling::random_density(&mut rng, 1usize << n);
        let decomp = match markov_decompose(&env, &s, n, ProbabilityConvention::Normalized) {
            Ok(d) => d,
            Err(e) => return usage_error(&e.to_string()),
        };
        let rebuilt = markov_reconstruct(&decomp, &input).expect("dimensions match");
        let direct =
            channels::apply_sequence(&model, &s, n, &input).expect("within state budget");
        worst = worst.max(trace_distance(&rebuilt, &direct));
    }
    println!(
        "markov-check: {} instances, up to {} carriers, max trace distance {}",
        args.instances,
        args.carriers,
        sweep::fmt_sig(worst)
    );
    if worst < 1e-10 {
        println!("markov-check: PASS");
        ExitCode::SUCCESS
    } else {
        println!("markov-check: FAIL (tolerance 1e-10)");
        ExitCode::from(VALIDATION_FAILURE)
    }
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let results = run_suite::<f64>(ValidateOptions { inject_eta_fault: args.inject_eta_fault });
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {name}: {detail}", name = r.name, detail = r.detail);
    }
    if all_passed(&results) {
        println!("validate: all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        let failed = results.iter().filter(|r| !r.passed).count();
        println!("validate: {failed} of {} checks failed", results.len());
        ExitCode::from(VALIDATION_FAILURE)
    }
}
