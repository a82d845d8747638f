mod args;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use collide_charge::experiments::{
    ensemble_rows, run_ensemble, run_regime, run_stationary, summarize_ensemble,
    write_ensemble_csv, EnsembleConfig, StationaryConfig, CANONICAL_FUELS,
};
use collide_charge::markov::{
    classify_empirical, classify_qubit_chain_with, estimate_return_stats, EstimationBudget,
};
use collide_charge::{
    classify_state, sample_path, AutoGrow, Error, QuditState, Result, TransitionMatrix,
};
use serde::Serialize;

use args::{
    fuel_pair, load_config, parse_alpha, parse_class, ChainArgs, Cli, ClassifyArgs, Command,
    EnsembleArgs, Merge, RegimesArgs, SampleArgs, StationaryArgs,
};

const THREADS_ENV: &str = "COLLIDE_CHARGE_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e));
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::TruncationOverflow { .. } => 3,
        Error::Convergence(_) | Error::Sampler(_) => 4,
        Error::Reducible(_) => 5,
        _ => 2,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV}='{raw}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.as_deref();
    let out = cli.out.as_path();
    match cli.command {
        Command::Regimes(a) => regimes(a.merge(load_config(cfg)?), out),
        Command::Ensemble(a) => ensemble(a.merge(load_config(cfg)?), out),
        Command::Stationary(a) => stationary(a.merge(load_config(cfg)?), out),
        Command::Classify(a) => classify(a.merge(load_config(cfg)?), out),
        Command::Sample(a) => sample(a.merge(load_config(cfg)?), out),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn echo_config<T: Serialize>(out: &Path, command: &str, resolved: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a, T> {
        command: &'a str,
        #[serde(flatten)]
        resolved: &'a T,
    }
    let mut w = create(out, "config.resolved.json")?;
    serde_json::to_writer_pretty(&mut w, &Echo { command, resolved })
        .map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn regimes(a: RegimesArgs, out: &Path) -> Result<()> {
    let fuels = match &a.fuel {
        Some(v) => vec![fuel_pair(v, "fuel")?],
        None => CANONICAL_FUELS.to_vec(),
    };
    let resolved = RegimesArgs {
        fuel: a.fuel.clone(),
        steps: Some(a.steps.clone().unwrap_or_else(|| vec![10, 100, 1000])),
        n: Some(a.n.unwrap_or(200)),
    };
    let (steps, n) = (resolved.steps.clone().unwrap(), resolved.n.unwrap());
    echo_config(out, "regimes", &resolved)?;
    for (s1, s2) in fuels {
        let xi = QuditState::qubit(s1, s2)?;
        let label = classify_state(&xi, collide_charge::state::PASSIVITY_TOL)?.label();
        let r = run_regime(&xi, &steps, n, &AutoGrow::default())?;
        let mut w = create(out, &format!("regime_{label}_snapshots.csv"))?;
        r.trajectory.write_snapshots_csv(&mut w)?;
        w.flush()?;
        let mut w = create(out, &format!("regime_{label}_trajectory.csv"))?;
        r.trajectory.write_csv(&mut w)?;
        w.flush()?;
        println!("fuel: {s1} {s2} ({label})");
        print!("{}", r.class.to_report());
        for rec in r.trajectory.records.iter().filter(|rec| steps.contains(&rec.step)) {
            println!(
                "step {}: mean_energy = {} ergotropy = {}",
                rec.step, rec.mean_energy, rec.ergotropy
            );
        }
        println!();
    }
    Ok(())
}

fn ensemble(a: EnsembleArgs, out: &Path) -> Result<()> {
    let seed = a
        .seed
        .ok_or_else(|| Error::InvalidParameter("ensemble needs --seed".into()))?;
    let mut cfg = EnsembleConfig::new(
        a.d.unwrap_or(5),
        a.runs.unwrap_or(20),
        a.steps.unwrap_or(5000),
        seed,
    );
    cfg.initial_level = a.initial_level.unwrap_or(cfg.initial_level);
    cfg.n0 = a.n.unwrap_or(cfg.n0).max(cfg.initial_level);
    cfg.fuel_class = a.fuel_class.as_deref().map(parse_class).transpose()?;
    echo_config(
        out,
        "ensemble",
        &EnsembleArgs {
            d: Some(cfg.d),
            runs: Some(cfg.num_runs),
            steps: Some(cfg.steps),
            seed: Some(seed),
            initial_level: Some(cfg.initial_level),
            n: Some(cfg.n0),
            fuel_class: cfg.fuel_class.map(|c| c.label().to_string()),
        },
    )?;
    let rows = ensemble_rows(&run_ensemble(&cfg)?);
    let mut w = create(out, "ensemble.csv")?;
    write_ensemble_csv(&rows, &mut w)?;
    w.flush()?;
    let report = summarize_ensemble(&rows).to_report();
    let mut w = create(out, "ensemble_summary.txt")?;
    w.write_all(report.as_bytes())?;
    w.flush()?;
    print!("{report}");
    Ok(())
}

fn stationary(a: StationaryArgs, out: &Path) -> Result<()> {
    let mut cfg = StationaryConfig::new(a.d.unwrap_or(5), a.seed_a.unwrap_or(1), a.seed_b.unwrap_or(2));
    cfg.fuel_seed = a.fuel_seed.unwrap_or(cfg.seed_a);
    cfg.n0 = a.n.unwrap_or(cfg.n0);
    cfg.tol = a.tol.unwrap_or(cfg.tol);
    echo_config(
        out,
        "stationary",
        &StationaryArgs {
            d: Some(cfg.d),
            seed_a: Some(cfg.seed_a),
            seed_b: Some(cfg.seed_b),
            fuel_seed: Some(cfg.fuel_seed),
            n: Some(cfg.n0),
            tol: Some(cfg.tol),
        },
    )?;
    let cmp = run_stationary(&cfg)?;
    let mut w = create(out, "stationary.csv")?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    let (ea, eb) = cmp.ergotropies();
    println!("fuel: {:?}", cmp.fuel.probs());
    println!("levels_a: {}\nlevels_b: {}", cmp.a.len(), cmp.b.len());
    println!("ergotropy_a: {ea:e}\nergotropy_b: {eb:e}\ntv_distance: {}", cmp.tv);
    Ok(())
}

/// Resolved chain source plus the matrix it describes.
enum Chain {
    Qubit { xi: QuditState, params: collide_charge::QubitSwapParams, n: usize },
    Matrix(TransitionMatrix),
}

impl Chain {
    fn resolve(a: &ChainArgs) -> Result<(Chain, ChainArgs)> {
        if let Some(path) = &a.matrix {
            let t = TransitionMatrix::from_text(&fs::read_to_string(path)?)?;
            return Ok((Chain::Matrix(t), a.clone()));
        }
        let (s1, s2) = fuel_pair(a.qubit.as_deref().unwrap_or(&[0.7, 0.3]), "qubit")?;
        let n = a.n.unwrap_or(4096);
        let alpha = a.alpha.clone().unwrap_or_else(|| "const:1".into());
        let params = parse_alpha(&alpha, n + 1)?;
        let resolved = ChainArgs {
            qubit: Some(vec![s1, s2]),
            alpha: Some(alpha),
            matrix: None,
            n: Some(n),
        };
        Ok((Chain::Qubit { xi: QuditState::qubit(s1, s2)?, params, n }, resolved))
    }

    fn matrix(&self) -> Result<TransitionMatrix> {
        match self {
            Chain::Qubit { xi, params, n } => {
                collide_charge::qubit_transition_matrix(params, xi, *n)
            }
            Chain::Matrix(t) => Ok(t.clone()),
        }
    }
}

fn classify(a: ClassifyArgs, out: &Path) -> Result<()> {
    let (chain, resolved_chain) = Chain::resolve(&a.chain)?;
    let defaults = EstimationBudget::default();
    let budget = EstimationBudget {
        trials: a.trials.unwrap_or(defaults.trials),
        horizons: a.horizons.clone().unwrap_or(defaults.horizons.clone()),
        seed: a.seed.unwrap_or(defaults.seed),
        truncation: resolved_chain.n.unwrap_or(defaults.truncation),
        ..defaults
    };
    let origin = a.origin.unwrap_or(1);
    echo_config(
        out,
        "classify",
        &ClassifyArgs {
            chain: resolved_chain,
            origin: Some(origin),
            trials: Some(budget.trials),
            horizons: Some(budget.horizons.clone()),
            seed: Some(budget.seed),
        },
    )?;
    let class = match &chain {
        Chain::Qubit { xi, params, .. } if origin == 1 => {
            classify_qubit_chain_with(params, xi, &budget)?
        }
        _ => classify_empirical(&chain.matrix()?, origin, &budget)?,
    };
    print!("{}", class.to_report());
    Ok(())
}

fn sample(a: SampleArgs, out: &Path) -> Result<()> {
    let (chain, resolved_chain) = Chain::resolve(&a.chain)?;
    let t = chain.matrix()?;
    let start = a.start.unwrap_or(1);
    let horizon = a.horizon.unwrap_or(1000);
    let seed = a.seed.unwrap_or(0);
    echo_config(
        out,
        "sample",
        &SampleArgs {
            chain: resolved_chain,
            start: Some(start),
            horizon: Some(horizon),
            seed: Some(seed),
            trials: a.trials,
        },
    )?;
    let path = sample_path(&t, start, horizon, seed)?;
    let mut w = create(out, "path.csv")?;
    writeln!(w, "step,level")?;
    for (i, level) in path.levels.iter().enumerate() {
        writeln!(w, "{i},{level}")?;
    }
    w.flush()?;
    println!("path_status: {:?}\npath_steps: {}", path.status, path.levels.len() - 1);
    if let Some(trials) = a.trials {
        let stats = estimate_return_stats(&t, start, trials, horizon as u64, seed)?;
        println!("trials: {}", stats.trials);
        println!("returns: {}", stats.return_count);
        println!("edge_hits: {}", stats.edge_count);
        println!("return_probability: {}", stats.return_probability());
        match stats.mean_return_time() {
            Some(m) => println!("mean_return_time: {m}"),
            None => println!("mean_return_time: none"),
        }
    }
    Ok(())
}
