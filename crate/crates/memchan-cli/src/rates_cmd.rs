//! The `rates` subcommand: transmission rates per regime.

use crate::{run_record, sweep};
use clap::Args;
use memchan::attenuation::AttenuationProtocol;
use memchan::channels::{CarrierSequence, EnvironmentModel};
use memchan::rates::{
    dephasing_quantum_capacity, gamma_ratio, group_coherent_info_exact, rate_attenuation,
    sequence_stats,
};
use std::process::ExitCode;

#[derive(Args)]
pub struct RatesArgs {
    /// Regime: memoryless, perfect, grouped or attenuation. Auto-detected
    /// from --pattern when omitted (all intervals >= 1 -> memoryless, all
    /// <= 0.02 -> perfect).
    #[arg(long, value_name = "REGIME")]
    regime: Option<String>,
    /// Comma-separated carrier intervals in units of tau_e; for grouped,
    /// the intra-group intervals.
    #[arg(long, value_name = "T1,T2,...", value_delimiter = ',')]
    pattern: Vec<f64>,
    /// Treat the pattern as repeating indefinitely.
    #[arg(long)]
    periodic: bool,
    /// Average carrier spacing, when no pattern is given.
    #[arg(long, value_name = "TAU")]
    tau_s: Option<f64>,
    /// Coupling strength of the qubit instance.
    #[arg(long, value_name = "LAMBDA")]
    lambda: Option<f64>,
    /// Attenuation: number of programming carriers.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Attenuation: programming-carrier spacing.
    #[arg(long, value_name = "TAU")]
    tau: Option<f64>,
    /// Attenuation: fixed programming population (optimized when omitted).
    #[arg(long, value_name = "P")]
    p: Option<f64>,
    /// Grouped: separation between groups (defaults to one relaxation time).
    #[arg(long, value_name = "TAU", default_value_t = 1.0)]
    separation: f64,
    /// Emit a JSON run record instead of text.
    #[arg(long)]
    json: bool,
}

fn usage(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

struct Rates {
    regime: &'static str,
    r_q: f64,
    r_q_upper: Option<f64>,
    r_c: f64,
    notes: String,
}

pub fn run(args: RatesArgs) -> ExitCode {
    let regime = match &args.regime {
        Some(r) => r.clone(),
        None => {
            if args.pattern.is_empty() {
                return usage("pass --regime or --pattern");
            }
            if args.pattern.iter().all(|&t| t >= 1.0) {
                "memoryless".to_string()
            } else if args.pattern.iter().all(|&t| t <= 0.02) {
                "perfect".to_string()
            } else {
                return usage(
                    "pattern mixes memory and memoryless spacings; pass --regime explicitly",
                );
            }
        }
    };

    let result = match regime.as_str() {
        "memoryless" => memoryless(&args),
        "perfect" => perfect(&args),
        "grouped" => grouped(&args),
        "attenuation" => attenuation(&args),
        other => return usage(&format!("unknown regime {other:?}")),
    };
    let rates = match result {
        Ok(r) => r,
        Err(code) => return code,
    };

    if args.json {
        let record = run_record(
            serde_json::json!({
                "regime": rates.regime,
                "pattern": args.pattern,
                "tau_s": args.tau_s,
                "lambda": args.lambda,
                "n": args.n,
                "tau": args.tau,
                "p": args.p,
            }),
            serde_json::json!({
                "r_q": sweep::round_sig(rates.r_q),
                "r_q_upper": rates.r_q_upper.map(sweep::round_sig),
                "r_c": sweep::round_sig(rates.r_c),
                "notes": rates.notes,
            }),
        );
        println!("{}", serde_json::to_string_pretty(&record).expect("serializable record"));
    } else {
        println!("regime: {}", rates.regime);
        match rates.r_q_upper {
            Some(hi) => println!(
                "r_q in [{}, {}] qubits per unit time (irregular sequence)",
                sweep::fmt_sig(rates.r_q),
                sweep::fmt_sig(hi)
            ),
            None => println!("r_q = {} qubits per unit time", sweep::fmt_sig(rates.r_q)),
        }
        println!("r_c = {} bits per unit time", sweep::fmt_sig(rates.r_c));
        if !rates.notes.is_empty() {
            println!("{}", rates.notes);
        }
    }
    ExitCode::SUCCESS
}

fn spacing(args: &RatesArgs) -> Result<(f64, Option<(f64, f64)>), ExitCode> {
    if let Some(tau_s) = args.tau_s {
        if !(tau_s > 0.0) {
            return Err(usage("--tau-s must be positive"));
        }
        return Ok((tau_s, None));
    }
    if args.pattern.is_empty() {
        return Err(usage("pass --tau-s or --pattern"));
    }
    let s = CarrierSequence::new(args.pattern.clone(), args.periodic)
        .map_err(|e| usage(&e.to_string()))?;
    let stats = sequence_stats(&s).map_err(|e| usage(&e.to_string()))?;
    match stats.tau_s {
        Some(tau_s) => Ok((tau_s, None)),
        None => Ok((stats.tau_prime, Some((stats.tau_prime, stats.tau_double_prime)))),
    }
}

fn lambda_of(args: &RatesArgs) -> Result<f64, ExitCode> {
    match args.lambda {
        Some(l) if (0.0..=1.0).contains(&l) => Ok(l),
        Some(_) => Err(usage("--lambda must lie in [0, 1]")),
        None => Err(usage("this regime needs --lambda")),
    }
}

fn memoryless(args: &RatesArgs) -> Result<Rates, ExitCode> {
    let lambda = lambda_of(args)?;
    let q = dephasing_quantum_capacity(lambda.sqrt()).expect("valid coherence factor");
    let (tau_s, interval) = spacing(args)?;
    match interval {
        None => Ok(Rates {
            regime: "memoryless",
            r_q: q / tau_s,
            r_q_upper: None,
            r_c: 1.0 / tau_s,
            notes: String::new(),
        }),
        Some((lo, hi)) => Ok(Rates {
            regime: "memoryless",
            r_q: q / hi,
            r_q_upper: Some(q / lo),
            r_c: 1.0 / hi,
            notes: "sequence is irregular; rates bracket the achievable value".into(),
        }),
    }
}

fn perfect(args: &RatesArgs) -> Result<Rates, ExitCode> {
    let (tau_s, interval) = spacing(args)?;
    if interval.is_some() {
        return Err(usage("perfect-memory rates need a regular spacing"));
    }
    Ok(Rates {
        regime: "perfect",
        r_q: 1.0 / tau_s,
        r_q_upper: None,
        r_c: 1.0 / tau_s,
        notes: String::new(),
    })
}

fn grouped(args: &RatesArgs) -> Result<Rates, ExitCode> {
    let lambda = lambda_of(args)?;
    if args.pattern.is_empty() {
        return Err(usage("grouped rates need --pattern with the intra-group intervals"));
    }
    if args.pattern.iter().any(|&t| !(t > 0.0)) {
        return Err(usage("intra-group intervals must be positive"));
    }
    if !(args.separation > 0.0) {
        return Err(usage("--separation must be positive"));
    }
    let m = args.pattern.len() + 1;
    let env = EnvironmentModel::dephasing_qubit(lambda, 1.0).map_err(|e| usage(&e.to_string()))?;
    // Uniform intra spacing keeps the closed evaluation simple; reject mixes.
    let intra = args.pattern[0];
    if args.pattern.iter().any(|&t| (t - intra).abs() > 1e-12) {
        return Err(usage("grouped rates currently need uniform intra-group intervals"));
    }
    let j = group_coherent_info_exact(&env, intra, m).map_err(|e| usage(&e.to_string()))?;
    let span = (m - 1) as f64 * intra + args.separation.max(1.0);
    Ok(Rates {
        regime: "grouped",
        r_q: j.max(0.0) / span,
        r_q_upper: None,
        r_c: m as f64 / span,
        notes: format!("group of {m} carriers; quantum rate is a coherent-information lower bound"),
    })
}

fn attenuation(args: &RatesArgs) -> Result<Rates, ExitCode> {
    let lambda = lambda_of(args)?;
    let n = args.n.ok_or_else(|| usage("attenuation rates need --n"))?;
    let tau = args.tau.ok_or_else(|| usage("attenuation rates need --tau"))?;
    let p = match args.p {
        Some(p) if (0.0..=1.0).contains(&p) => Some(p),
        Some(_) => return Err(usage("--p must lie in [0, 1]")),
        None => None,
    };
    let (population, note) = match p {
        Some(p) => (p, String::new()),
        None => {
            let (p_star, _) = memchan::attenuation::optimize_gbar(lambda, n.max(1), tau, 1.0)
                .map_err(|e| usage(&e.to_string()))?;
            (p_star, format!("population optimized to p = {}", sweep::fmt_sig(p_star)))
        }
    };
    let proto = AttenuationProtocol::new(n, tau, population, lambda, 1.0)
        .map_err(|e| usage(&e.to_string()))?;
    let report = rate_attenuation(&proto).map_err(|e| usage(&e.to_string()))?;
    let mut notes = note;
    if n >= 1 {
        if let Ok(gamma) = gamma_ratio(lambda, n, tau, 1.0) {
            if !notes.is_empty() {
                notes.push_str("; ");
            }
            notes.push_str(&format!("gain over memoryless line: {}", sweep::fmt_sig(gamma)));
        }
    }
    Ok(Rates {
        regime: "attenuation",
        r_q: report.r_q,
        r_q_upper: None,
        r_c: report.r_c,
        notes,
    })
}
