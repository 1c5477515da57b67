//! `incompat`: compatibility checks, robustness estimates and theorem tables
//! from the command line. Structured output is JSON; exit codes are
//! 0/1/2 for feasible/infeasible/undecided (or pass/fail), 64 for usage and
//! input errors, 70 for internal failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use incompat::compat::{
    channel_compat_feasible, jm_feasible, obs_channel_feasible, SolverConfig, Verdict,
};
use incompat::covariance::{weyl_rep, CovariantObsPair};
use incompat::devices::{ChannelChoi, DevicePair, Povm};
use incompat::robustness::{
    k_robustness_sampled, relative_robustness, to_r, CompatOracle, EstimateMode, DEVICE_BISECT_TOL,
};
use incompat::theorems::{
    cloner_marginal, decodable_noise, monotonicity_suite, run_suite, suite_json, suite_table,
    vn_noise, weyl_pair_and_noise, Theorem,
};
use serde::Serialize;
use serde_json::json;

const EX_USAGE: u8 = 64;
const EX_SOFTWARE: u8 = 70;

#[derive(Parser, Debug)]
#[command(
    name = "incompat",
    version,
    about = "Incompatibility robustness of quantum devices"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalFlags {
    /// Feasibility tolerance on the smallest eigenvalue.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    /// Iteration cap for the feasibility solver.
    #[arg(long, global = true, default_value_t = 20_000)]
    max_iters: usize,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide compatibility of two devices read from JSON files.
    Check {
        kind: Kind,
        first: PathBuf,
        second: PathBuf,
    },
    /// Robustness of a device pair against one or more noise pairs.
    Robustness {
        /// Device pair JSON (`{"kind": ..., "first": ..., "second": ...}`).
        pair: PathBuf,
        /// Noise pair JSON; may be repeated.
        #[arg(long)]
        noise: Vec<PathBuf>,
        /// Directory of noise pair JSON files, read in name order.
        #[arg(long)]
        noise_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEVICE_BISECT_TOL)]
        bisect_tol: f64,
    },
    /// Closed forms against numerics for the certified examples.
    VerifyTheorems {
        /// Comma-separated dimensions in 2..=5.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
        /// Restrict to one theorem (weyl_pair, decodable_channels, vn_obs_decodable).
        #[arg(long)]
        theorem: Option<String>,
        /// Also print the JSON rows to stdout.
        #[arg(long)]
        json: bool,
    },
    /// Robustness monotonicity under random processings.
    Monotonicity,
    /// Write a named device or device pair as JSON.
    Export {
        name: ExportName,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Jm,
    Chan,
    Obschan,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExportName {
    /// Position observable.
    Q,
    /// Momentum observable.
    P,
    /// Uniform trivial observable.
    Trivial,
    Identity,
    Depolarizing,
    DecodableNoise,
    ClonerMarginal,
    /// (Q, P) as a jm pair.
    WeylPair,
    WeylNoise,
    /// (id, id) as a chan pair.
    IdentityPair,
    DecodableNoisePair,
    /// (computational basis, id) as an obschan pair.
    VnPair,
    VnNoisePair,
}

/// Everything a command needs beyond its own arguments.
#[derive(Debug, Clone)]
struct RunConfig {
    solver: SolverConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl RunConfig {
    fn from_flags(g: &GlobalFlags) -> Result<Self, Failure> {
        let solver = SolverConfig {
            feas_tol: g.tol,
            max_iters: g.max_iters,
            infeas_threshold: SolverConfig::default().infeas_threshold.max(10.0 * g.tol),
            ..SolverConfig::default()
        };
        solver.validate().map_err(Failure::usage)?;
        if g.max_iters == 0 {
            return Err(Failure::usage("--max-iters must be positive"));
        }
        Ok(Self {
            solver,
            seed: g.seed,
            out: g.out.clone(),
        })
    }

    fn emit(&self, json: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, format!("{json}\n"))
                .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display()))),
            None => {
                println!("{json}");
                Ok(())
            }
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Self {
            code: EX_USAGE,
            message: e.to_string(),
        }
    }

    fn internal(e: impl ToString) -> Self {
        Self {
            code: EX_SOFTWARE,
            message: e.to_string(),
        }
    }
}

impl From<incompat::Error> for Failure {
    fn from(e: incompat::Error) -> Self {
        match e {
            incompat::Error::Oracle(_) => Failure::internal(e),
            _ => Failure::usage(e),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(Failure::internal)
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Feasible => 0,
        Verdict::Infeasible => 1,
        Verdict::Undecided => 2,
    }
}

fn cmd_check(cfg: &RunConfig, kind: Kind, first: &Path, second: &Path) -> Result<u8, Failure> {
    let (verdict, json) = match kind {
        Kind::Jm => {
            let r = jm_feasible(
                &read_json::<Povm>(first)?,
                &read_json::<Povm>(second)?,
                &cfg.solver,
            )?;
            (r.verdict, to_json(&r)?)
        }
        Kind::Chan => {
            let r = channel_compat_feasible(&read_json(first)?, &read_json(second)?, &cfg.solver)?;
            (r.verdict, to_json(&r)?)
        }
        Kind::Obschan => {
            let r = obs_channel_feasible(
                &read_json::<Povm>(first)?,
                &read_json::<ChannelChoi>(second)?,
                &cfg.solver,
            )?;
            (r.verdict, to_json(&r)?)
        }
    };
    cfg.emit(&json)?;
    Ok(verdict_code(verdict))
}

fn noise_files(files: &[PathBuf], dir: Option<&Path>) -> Result<Vec<PathBuf>, Failure> {
    let mut all = files.to_vec();
    if let Some(dir) = dir {
        let entries = fs::read_dir(dir)
            .map_err(|e| Failure::usage(format!("cannot list {}: {e}", dir.display())))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        found.sort();
        all.extend(found);
    }
    if all.is_empty() {
        return Err(Failure::usage(
            "no noise candidates: pass --noise or --noise-dir",
        ));
    }
    Ok(all)
}

fn cmd_robustness(
    cfg: &RunConfig,
    pair: &Path,
    noise: &[PathBuf],
    noise_dir: Option<&Path>,
    bisect_tol: f64,
) -> Result<u8, Failure> {
    let x: DevicePair = read_json(pair)?;
    let files = noise_files(noise, noise_dir)?;
    let candidates = files
        .iter()
        .map(|f| read_json::<DevicePair>(f))
        .collect::<Result<Vec<_>, _>>()?;
    for (f, y) in files.iter().zip(&candidates) {
        if y.kind() != x.kind() || y.dim() != x.dim() {
            return Err(Failure::usage(format!(
                "{}: a {} pair in d={} does not match",
                f.display(),
                y.kind(),
                y.dim()
            )));
        }
    }
    let oracle = CompatOracle::new(cfg.solver.clone());
    let est = if candidates.len() == 1 {
        relative_robustness(&x, &candidates[0], &oracle, bisect_tol)?
    } else {
        k_robustness_sampled(&x, &candidates, &oracle, bisect_tol)?
    };
    let source = files[est.candidate.unwrap_or(0)].display().to_string();
    let out = json!({
        "kind": x.kind(),
        "d": x.dim(),
        "value": est.value,
        "bracket": est.bracket,
        "robustness_r": to_r(est.value),
        "mode": est.mode,
        // a single noise pair gives its own robustness; several give a lower
        // bound on the supremum over all noise
        "lower_bound_only": est.mode == EstimateMode::KAbsoluteSampled,
        "noise_source": source,
        "candidate": est.candidate,
        "oracle_calls": est.oracle_calls,
        "witness_y": est.witness_y,
    });
    cfg.emit(&to_json(&out)?)?;
    Ok(0)
}

fn cmd_verify_theorems(
    cfg: &RunConfig,
    dims: &[usize],
    theorem: Option<&str>,
    print_json: bool,
) -> Result<u8, Failure> {
    if dims.is_empty() {
        return Err(Failure::usage("--dims is empty"));
    }
    if let Some(&d) = dims.iter().find(|&&d| !(2..=5).contains(&d)) {
        return Err(Failure::usage(format!("dimension {d} is outside 2..=5")));
    }
    let only = theorem.map(str::parse::<Theorem>).transpose()?;
    let reports = run_suite(dims, only, &cfg.solver)?;
    print!("{}", suite_table(&reports));
    let json = suite_json(&reports);
    if let Some(path) = &cfg.out {
        fs::write(path, format!("{json}\n"))
            .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    }
    if print_json {
        println!("{json}");
    }
    Ok(if reports.iter().all(|r| r.passed()) {
        0
    } else {
        1
    })
}

fn cmd_monotonicity(cfg: &RunConfig) -> Result<u8, Failure> {
    let report = monotonicity_suite(cfg.seed, &cfg.solver)?;
    cfg.emit(&to_json(&report)?)?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_export(cfg: &RunConfig, name: ExportName, d: usize) -> Result<u8, Failure> {
    if d < 2 {
        return Err(Failure::usage(format!("--dim must be at least 2, got {d}")));
    }
    let rep = weyl_rep(d)?;
    let weyl = |pair: &CovariantObsPair| -> Result<DevicePair, Failure> {
        let (first, second) = pair.observables(&rep)?;
        Ok(DevicePair::Jm { first, second })
    };
    let id = ChannelChoi::identity(d);
    let basis = Povm::computational(d);
    let json = match name {
        ExportName::Q => to_json(&rep.position())?,
        ExportName::P => to_json(&rep.momentum())?,
        ExportName::Trivial => to_json(&incompat::devices::uniform_trivial_observable(d))?,
        ExportName::Identity => to_json(&id)?,
        ExportName::Depolarizing => to_json(&ChannelChoi::depolarizing(d))?,
        ExportName::DecodableNoise => to_json(&decodable_noise(d)?)?,
        ExportName::ClonerMarginal => to_json(&cloner_marginal(d)?)?,
        ExportName::WeylPair => to_json(&weyl(&weyl_pair_and_noise(d)?.0)?)?,
        ExportName::WeylNoise => to_json(&weyl(&weyl_pair_and_noise(d)?.1)?)?,
        ExportName::IdentityPair => to_json(&DevicePair::Chan {
            first: id.clone(),
            second: id,
        })?,
        ExportName::DecodableNoisePair => {
            let e = decodable_noise(d)?;
            to_json(&DevicePair::Chan {
                first: e.clone(),
                second: e,
            })?
        }
        ExportName::VnPair => to_json(&DevicePair::Obschan {
            first: basis,
            second: id,
        })?,
        ExportName::VnNoisePair => {
            let (b, e) = vn_noise(d)?;
            to_json(&DevicePair::Obschan {
                first: b,
                second: e,
            })?
        }
    };
    cfg.emit(&json)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = RunConfig::from_flags(&cli.global)?;
    match &cli.command {
        Command::Check {
            kind,
            first,
            second,
        } => cmd_check(&cfg, *kind, first, second),
        Command::Robustness {
            pair,
            noise,
            noise_dir,
            bisect_tol,
        } => cmd_robustness(&cfg, pair, noise, noise_dir.as_deref(), *bisect_tol),
        Command::VerifyTheorems {
            dims,
            theorem,
            json,
        } => cmd_verify_theorems(&cfg, dims, theorem.as_deref(), *json),
        Command::Monotonicity => cmd_monotonicity(&cfg),
        Command::Export { name, dim } => cmd_export(&cfg, *name, *dim),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code 2 would collide with "undecided"
            let code = if e.use_stderr() { EX_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("incompat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
