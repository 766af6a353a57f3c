//! Command-line front end for the RBH thermal-order experiment sweeps.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! assertion failures (a verification command finding a violation, or a
//! computation failing mid-run). Every file-emitting command writes its
//! results atomically together with a `<output>.manifest.json` that makes
//! the run reproducible (same seed, same build => same bytes).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rbh_lab::disentangle2d::{
    build_circuit, conjugate_hamiltonian, default_square_side, is_valid, lemma1_gap,
    matches_target, p_beta, sample_sinks, valid_probability, TriLattice,
};
use rbh_lab::gauging::{kernel_matches_symmetry_orbits, Gauger};
use rbh_lab::homology::CubicLattice;
use rbh_lab::loopgas::{decompose_loops, energy, exact_ensemble, EnsembleParams, Sampler};
use rbh_lab::membrane::{
    build_membranes, build_membranes_auto, max_admissible_alpha, order_parameter,
    order_parameter_exact, OrderEstimate,
};
use rbh_lab::restore::{logical_error_rate, Method};
use rbh_lab::runio::{
    emit_csv, emit_jsonl, format_f64, split_seed, RunManifest, DECODE_CSV_HEADER,
    ORDER_PARAM_CSV_HEADER,
};
use rbh_lab::Error;

#[derive(Parser)]
#[command(name = "rbh-lab", version, about = "RBH thermal-order experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; per-task seeds are derived deterministically from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (CSV or JSON-lines depending on the command).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Greedy,
    Exact,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Greedy => Method::Greedy,
            MethodArg::Exact => Method::Exact,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the membrane order parameter at one (d, beta) point.
    OrderParam {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        beta: f64,
        /// Monte Carlo measurements (one per sweep).
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Override the correction-radius constant c in alpha = ceil(c ln d).
        #[arg(long)]
        alpha_c: Option<f64>,
        /// Exhaustive enumeration instead of Monte Carlo (d = 2 only).
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the decoder failure rate over a (d, p) grid.
    DecodeThreshold {
        /// Comma-separated lattice sizes, e.g. 4,6,8.
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        d_list: Vec<usize>,
        /// Comma-separated flip probabilities, e.g. 0.01,0.02,0.03.
        #[arg(long, value_delimiter = ',')]
        p_list: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Greedy)]
        method: MethodArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run one loop-gas chain and emit its diagnostics record.
    LoopgasDiag {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        sweeps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Verify both gauging dualities on a d^3 lattice.
    GaugeVerify {
        #[arg(long)]
        d: usize,
    },
    /// Sample sink configurations, build and verify disentangling circuits.
    DisentangleVerify {
        #[arg(long = "L")]
        l_size: usize,
        #[arg(long)]
        beta: f64,
        /// Grid constant: square side l = ceil(sqrt(c log L)).
        #[arg(long, default_value_t = 8.0)]
        c: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Exact 9-qubit comparison of the symmetric Gibbs ensemble against the
    /// free sink ensemble.
    Lemma1Check {
        #[arg(long)]
        beta: f64,
    },
}

enum CliError {
    /// Invalid configuration: exit 2.
    Config(String),
    /// Runtime assertion failure or I/O failure mid-run: exit 3.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::InvalidParameter(_) | Error::Dimension(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::OrderParam { d, beta, samples, alpha_c, exact, common } => {
            cmd_order_param(d, beta, samples, alpha_c, exact, common)
        }
        Command::DecodeThreshold { d_list, p_list, trials, method, common } => {
            cmd_decode_threshold(&d_list, &p_list, trials, method.into(), common)
        }
        Command::LoopgasDiag { d, beta, sweeps, common } => {
            cmd_loopgas_diag(d, beta, sweeps, common)
        }
        Command::GaugeVerify { d } => cmd_gauge_verify(d),
        Command::DisentangleVerify { l_size, beta, c, trials, common } => {
            cmd_disentangle_verify(l_size, beta, c, trials, common)
        }
        Command::Lemma1Check { beta } => cmd_lemma1_check(beta),
    }
}

fn order_param_row(d: usize, beta: f64, est: &OrderEstimate, seed: u64) -> Vec<String> {
    vec![
        d.to_string(),
        format_f64(1.0 / beta),
        est.n_samples.to_string(),
        format_f64(est.o_raw),
        format_f64(est.o_corrected),
        format_f64(est.stderr),
        est.alpha.to_string(),
        seed.to_string(),
    ]
}

fn cmd_order_param(
    d: usize,
    beta: f64,
    samples: usize,
    alpha_c: Option<f64>,
    exact: bool,
    common: Common,
) -> Result<(), CliError> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(CliError::Config("beta must be positive".into()));
    }
    let lat = CubicLattice::new(d)?;
    let pair = match alpha_c {
        None => build_membranes_auto(&lat, beta)?,
        Some(c) => {
            if c.is_nan() || c <= 0.0 {
                return Err(CliError::Config("alpha-c must be positive".into()));
            }
            let (z_l, z_r) = (0usize, d / 2);
            let cap = max_admissible_alpha(d, d / 2);
            let alpha = ((c * (d as f64).ln()).ceil() as usize).min(cap);
            let alpha = if alpha < 2 { 0 } else { alpha };
            build_membranes(&lat, z_l, z_r, alpha)?
        }
    };
    let est = if exact {
        if d != 2 {
            return Err(CliError::Config("--exact enumeration requires d = 2".into()));
        }
        order_parameter_exact(&lat, &pair, beta)?
    } else {
        let params = EnsembleParams::new(beta, d, common.seed)?;
        order_parameter(&lat, &pair, &params, samples)?
    };

    let rows = vec![order_param_row(d, beta, &est, common.seed)];
    let out = common.out.unwrap_or_else(|| PathBuf::from("order_param.csv"));
    let mut manifest = RunManifest::new(
        "order-param",
        serde_json::json!({
            "d": d, "beta": beta, "samples": samples,
            "alpha_c": alpha_c, "exact": exact, "alpha": est.alpha,
        }),
        common.seed,
    );
    manifest.task_seeds = vec![common.seed];
    manifest.finish();
    emit_csv(&out, &ORDER_PARAM_CSV_HEADER, &rows, &manifest)?;
    println!(
        "d={d} T={} O_raw={} O_corrected={} +- {} (alpha={}) -> {}",
        format_f64(1.0 / beta),
        format_f64(est.o_raw),
        format_f64(est.o_corrected),
        format_f64(est.stderr),
        est.alpha,
        out.display()
    );
    Ok(())
}

/// Temperature whose Nishimori-line flip probability equals p.
fn t_equiv(p: f64) -> f64 {
    2.0 / ((1.0 - p) / p).ln()
}

fn cmd_decode_threshold(
    d_list: &[usize],
    p_list: &[f64],
    trials: usize,
    method: Method,
    common: Common,
) -> Result<(), CliError> {
    if d_list.is_empty() || p_list.is_empty() {
        return Err(CliError::Config("d-list and p-list must be non-empty".into()));
    }
    if p_list.iter().any(|&p| !(p > 0.0 && p < 0.5)) {
        return Err(CliError::Config("every p must lie in (0, 0.5)".into()));
    }
    let mut rows = Vec::new();
    let mut task_seeds = Vec::new();
    let method_name = match method {
        Method::Greedy => "greedy",
        Method::Exact => "exact",
    };
    for (i, &d) in d_list.iter().enumerate() {
        for (j, &p) in p_list.iter().enumerate() {
            let seed = split_seed(common.seed, (i * p_list.len() + j) as u64);
            task_seeds.push(seed);
            let rate = logical_error_rate(d, p, trials, method, seed)?;
            rows.push(vec![
                d.to_string(),
                format_f64(p),
                format_f64(t_equiv(p)),
                trials.to_string(),
                format_f64(rate.fail_rate),
                format_f64(rate.stderr),
                method_name.to_string(),
                seed.to_string(),
            ]);
            println!("d={d} p={} fail_rate={}", format_f64(p), format_f64(rate.fail_rate));
        }
    }
    let out = common.out.unwrap_or_else(|| PathBuf::from("decode_threshold.csv"));
    let mut manifest = RunManifest::new(
        "decode-threshold",
        serde_json::json!({
            "d_list": d_list, "p_list": p_list,
            "trials": trials, "method": method_name,
        }),
        common.seed,
    );
    manifest.task_seeds = task_seeds;
    manifest.finish();
    emit_csv(&out, &DECODE_CSV_HEADER, &rows, &manifest)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_loopgas_diag(d: usize, beta: f64, sweeps: usize, common: Common) -> Result<(), CliError> {
    let lat = CubicLattice::new(d)?;
    let mut params = EnsembleParams::new(beta, d, common.seed)?;
    params.sweeps = sweeps;
    let mut sampler = Sampler::new(&lat, &params)?;
    for _ in 0..params.burn_in {
        sampler.sweep();
    }
    let mut energy_sum = rbh_lab::runio::Kahan::new();
    let mut largest_hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut largest_hist_dual: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..sweeps {
        sampler.sweep();
        energy_sum.add(energy(sampler.cfg()) as f64);
        let cfg = sampler.cfg();
        *largest_hist.entry(decompose_loops(&lat, cfg.gamma())?.largest()).or_default() += 1;
        *largest_hist_dual
            .entry(decompose_loops(&lat, cfg.gamma_prime())?.largest())
            .or_default() += 1;
    }
    let hist_json = |h: &BTreeMap<usize, usize>| {
        serde_json::Map::from_iter(
            h.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))),
        )
    };
    let mut record = serde_json::json!({
        "d": d,
        "beta": beta,
        "seed": common.seed,
        "sweeps": sweeps,
        "burn_in": params.burn_in,
        "acceptance_rate": sampler.acceptance_rate(),
        "mean_energy": energy_sum.mean(),
        "largest_loop_hist": hist_json(&largest_hist),
        "largest_loop_hist_dual": hist_json(&largest_hist_dual),
    });
    if d == 2 && beta.is_finite() {
        let exact = exact_ensemble(&lat, beta)?;
        record["exact_expected_largest_loop"] =
            serde_json::json!(exact.gamma.expected_largest_loop());
    }
    let out = common.out.unwrap_or_else(|| PathBuf::from("loopgas_diag.jsonl"));
    let mut manifest = RunManifest::new(
        "loopgas-diag",
        serde_json::json!({"d": d, "beta": beta, "sweeps": sweeps}),
        common.seed,
    );
    manifest.task_seeds = vec![common.seed];
    manifest.finish();
    emit_jsonl(&out, &[record], &manifest)?;
    println!(
        "d={d} beta={} sweeps={sweeps} acceptance_rate={} mean_energy={} -> {}",
        format_f64(beta),
        format_f64(sampler.acceptance_rate()),
        format_f64(energy_sum.mean()),
        out.display()
    );
    Ok(())
}

fn cmd_gauge_verify(d: usize) -> Result<(), CliError> {
    let lat = CubicLattice::new(d)?;
    let gauger = Gauger::new(&lat);
    let report = gauger.verify_dualities()?;
    println!(
        "d={d} trivial-model -> two toric codes: {}",
        if report.trivial_to_toric { "PASS" } else { "FAIL" }
    );
    println!(
        "d={d} cluster-model -> Hadamard image:  {}",
        if report.cluster_to_hadamard { "PASS" } else { "FAIL" }
    );
    let kernel_ok = kernel_matches_symmetry_orbits(&lat);
    println!(
        "d={d} state-map kernel = symmetry orbit span: {}",
        if kernel_ok { "PASS" } else { "FAIL" }
    );
    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    if report.ok() && kernel_ok {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gauging verification failed at d = {d} ({} mismatches)",
            report.mismatches.len()
        )))
    }
}

fn cmd_disentangle_verify(
    l_size: usize,
    beta: f64,
    c: f64,
    trials: usize,
    common: Common,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(CliError::Config("c must be positive".into()));
    }
    let lat = TriLattice::new(l_size)?;
    let l = default_square_side(&lat, c);
    let mut valid = 0usize;
    let mut max_depth = 0usize;
    let mut all_ok = true;
    for i in 0..trials {
        let mut rng = ChaCha20Rng::seed_from_u64(split_seed(common.seed, i as u64));
        let cfg = sample_sinks(&lat, beta, &mut rng);
        if !is_valid(&lat, &cfg, l)? {
            continue;
        }
        valid += 1;
        let circuit = build_circuit(&lat, &cfg, l)?;
        max_depth = max_depth.max(circuit.depth());
        let terms = conjugate_hamiltonian(&lat, &cfg, &circuit)?;
        if !matches_target(&cfg, &terms) || circuit.depth() > 2 * circuit.max_region_diameter {
            all_ok = false;
        }
    }
    let record = serde_json::json!({
        "L": l_size,
        "beta": beta,
        "c": c,
        "square_side": l,
        "trials": trials,
        "valid_fraction": valid as f64 / trials as f64,
        "expected_valid_probability": valid_probability(&lat, l, beta)?,
        "sink_probability": p_beta(beta),
        "max_depth": max_depth,
        "all_conjugations_ok": all_ok,
    });
    let out = common.out.unwrap_or_else(|| PathBuf::from("disentangle_verify.jsonl"));
    let mut manifest = RunManifest::new(
        "disentangle-verify",
        serde_json::json!({"L": l_size, "beta": beta, "c": c, "trials": trials}),
        common.seed,
    );
    manifest.task_seeds = (0..trials as u64).map(|i| split_seed(common.seed, i)).collect();
    manifest.finish();
    emit_jsonl(&out, std::slice::from_ref(&record), &manifest)?;
    println!("{record}");
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Runtime(
            "a valid configuration failed conjugation or the depth bound".into(),
        ))
    }
}

fn cmd_lemma1_check(beta: f64) -> Result<(), CliError> {
    let (distance, bound) = lemma1_gap(3, beta)?;
    println!(
        "beta={} trace_distance={} bound={}",
        format_f64(beta),
        format_f64(distance),
        format_f64(bound)
    );
    if distance <= bound + 1e-10 {
        println!("PASS: distance within the closed-form bound");
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "trace distance {distance} exceeds the closed-form bound {bound}"
        )))
    }
}
