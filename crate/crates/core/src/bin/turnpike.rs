//! `turnpike`: spectra, static optima, optimal trajectories and turnpike
//! sweeps for oscillator chains, driven by a JSON config.
//!
//! Exit codes: 0 success, 1 config or I/O error, 2 solver failure or a
//! failed threshold check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use turnpike_core::beam::{mode_table_csv, modes};
use turnpike_core::config::{ConfigError, RunConfig};
use turnpike_core::lq_solver::{
    dichotomy_solve, dynamic_cost, pmp_residual, resolved_samples, solve_riccati_oracle, stationarity_check,
    HorizonSpec,
};
use turnpike_core::model::{check_assumptions, doubling_truncations, StateVector};
use turnpike_core::spectral::{rouche_certificate, spectrum, spectrum_csv};
use turnpike_core::static_opt::{solve_static, static_cost};
use turnpike_core::turnpike::{sweep, FitWindow, InitialState, SweepSpec};

#[derive(Parser)]
#[command(
    name = "turnpike",
    version,
    about = "Spectral LQ control and turnpike diagnostics for oscillator chains"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; built-in unit beam defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Print a machine-readable summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Oracle agreement tolerance (relative sup norm).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue quadruples, localization and Rouché certificates.
    Spectrum {
        #[arg(long)]
        n: Option<usize>,
        /// Relative certificate radius in (0, 1).
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Optimal steady state.
    Static {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Optimal trajectory on one horizon.
    Solve {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Also run the Riccati oracle and compare.
        #[arg(long)]
        oracle: bool,
        /// Random control perturbations for the stationarity check.
        #[arg(long, default_value_t = 0)]
        directions: usize,
    },
    /// Sweep over truncations and horizons with envelope diagnostics.
    Turnpike {
        #[arg(long)]
        beta: Vec<f64>,
        #[arg(long)]
        n: Vec<usize>,
        #[arg(long)]
        horizon: Vec<f64>,
        /// Decay-fit window `a:b`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Beam mode table.
    Beam {
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Numerical verdicts on the standing assumptions.
    Check {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a < b {
        Ok((a, b))
    } else {
        Err(format!("empty window {a}:{b}"))
    }
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<turnpike_core::Error> for Failure {
    fn from(e: turnpike_core::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    json: bool,
}

impl Ctx {
    fn write(&self, name: &str, body: &str) -> Outcome {
        write_file(&self.out.join(name), &format!("{}{body}", self.cfg.header()))
    }

    fn write_json(&self, name: &str, mut value: serde_json::Value) -> Outcome {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_sha256".into(), json!(self.cfg.sha256()));
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Config(e.to_string()))?;
        write_file(&self.out.join(name), &(text.clone() + "\n"))?;
        if self.json {
            println!("{text}");
        }
        Ok(())
    }
}

fn write_file(path: &Path, body: &str) -> Outcome {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, body).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(tol) = cli.common.tol {
        let mut t = cfg.tolerances();
        t.oracle_rel = tol;
        cfg.tolerances = Some(t);
    }
    let jobs = cli.common.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let command = cli.command;
    let (out, json) = (cli.common.out, cli.common.json);
    pool.install(move || match command {
        Command::Spectrum { n, kappa } => {
            cfg.n = n.or(cfg.n);
            cfg.kappa = kappa.or(cfg.kappa);
            cmd_spectrum(Ctx {
                cfg: checked(cfg)?,
                out,
                json,
            })
        }
        Command::Static { n } => {
            cfg.n = n.or(cfg.n);
            cmd_static(Ctx {
                cfg: checked(cfg)?,
                out,
                json,
            })
        }
        Command::Solve {
            n,
            horizon,
            oracle,
            directions,
        } => {
            cfg.n = n.or(cfg.n);
            cfg.horizon = horizon.or(cfg.horizon);
            cmd_solve(
                Ctx {
                    cfg: checked(cfg)?,
                    out,
                    json,
                },
                oracle,
                directions,
            )
        }
        Command::Turnpike {
            beta,
            n,
            horizon,
            window,
        } => {
            if !beta.is_empty() {
                cfg.betas = Some(beta);
            }
            if !n.is_empty() {
                cfg.n_list = Some(n);
            }
            if !horizon.is_empty() {
                cfg.t_list = Some(horizon);
            }
            cfg.window = window.or(cfg.window);
            cmd_turnpike(Ctx {
                cfg: checked(cfg)?,
                out,
                json,
            })
        }
        Command::Beam { n_max } => {
            cfg.n = n_max.or(cfg.n);
            cmd_beam(Ctx {
                cfg: checked(cfg)?,
                out,
                json,
            })
        }
        Command::Check { n, rho, alpha } => {
            cfg.n = n.or(cfg.n);
            cfg.rho = rho.or(cfg.rho);
            cfg.alpha = alpha.or(cfg.alpha);
            cmd_check(Ctx {
                cfg: checked(cfg)?,
                out,
                json,
            })
        }
    })
}

fn checked(cfg: RunConfig) -> Result<RunConfig, Failure> {
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_spectrum(ctx: Ctx) -> Outcome {
    let sys = ctx.cfg.system()?;
    let kappa = ctx.cfg.kappa.unwrap_or(0.5);
    let quads = spectrum(&sys)?;
    let certs: Vec<_> = (1..=sys.len())
        .map(|k| rouche_certificate(k, kappa, &sys).ok())
        .collect();
    ctx.write("spectrum.csv", &spectrum_csv(&quads, &certs))?;
    let residual_max = quads.iter().map(|q| q.residual).fold(0.0, f64::max);
    let nu_ratio = quads.iter().map(|q| q.nu.norm() / sys.b_norm()).fold(0.0, f64::max);
    let eps_ok = quads.iter().filter(|q| q.k >= 5).all(|q| q.eps_within_half);
    let count = |f: fn(&Option<_>) -> bool| certs.iter().filter(|c| f(c)).count();
    let summary = json!({
        "N": sys.len(),
        "kappa": kappa,
        "residual_max": residual_max,
        "max_nu_over_b_norm": nu_ratio,
        "eps_within_half_from_k5": eps_ok,
        "certificates_pass": count(|c: &Option<turnpike_core::spectral::RoucheCertificate>| c.is_some_and(|c| c.holds)),
        "certificates_fail": count(|c: &Option<turnpike_core::spectral::RoucheCertificate>| c.is_some_and(|c| !c.holds)),
        "certificates_not_applicable": count(|c: &Option<turnpike_core::spectral::RoucheCertificate>| c.is_none()),
    });
    if !ctx.json {
        println!(
            "N = {}: max residual {residual_max:.3e}, max |nu|/||b|| {nu_ratio:.6}, |eps_k| < lambda0/2 for k >= 5: {eps_ok}",
            sys.len()
        );
    }
    ctx.write_json("spectrum.json", summary)
}

fn cmd_static(ctx: Ctx) -> Outcome {
    let sys = ctx.cfg.system()?;
    let target = ctx.cfg.target()?;
    let sol = solve_static(&target, &sys)?;
    let cost = static_cost(&sol, &target)?;
    let csv = sol.to_csv();
    ctx.write("static.csv", &csv)?;
    if !ctx.json {
        println!("# J_s={cost:.16e}");
        print!("{csv}");
    }
    ctx.write_json(
        "static.json",
        json!({ "N": sys.len(), "u_hat": sol.uhat, "static_cost": cost,
                "constraint_residual": sol.constraint_residual(&sys), "stationarity_residual": sol.stationarity_residual(&target, &sys) }),
    )
}

fn cmd_solve(ctx: Ctx, oracle: bool, directions: usize) -> Outcome {
    let sys = ctx.cfg.system()?;
    let target = ctx.cfg.target()?;
    let st = solve_static(&target, &sys)?;
    let x0 = ctx
        .cfg
        .initial_state(sys.len())?
        .unwrap_or_else(|| StateVector::zeros(sys.len()));
    let hs: HorizonSpec = ctx.cfg.horizon_spec(x0)?;
    let sol = dichotomy_solve(&sys, &target, &hs, &st)?;
    let traj = sol.trajectory(&hs.grid)?;
    let pmp = pmp_residual(&traj, &sys, &target)?;
    let cost = dynamic_cost(&traj, &target)?;
    ctx.write("trajectory.csv", &traj.to_csv())?;
    let tol = ctx.cfg.tolerances();
    let mut report = json!({
        "N": sys.len(), "T": hs.horizon, "cost": cost, "static_cost": static_cost(&st, &target)?,
        "pmp_residual": pmp.value, "condition": sol.condition, "ill_conditioned": sol.ill_conditioned,
        "off_block_mass": sol.off_block_mass,
    });
    let mut failed = Vec::new();
    if pmp.value > tol.pmp {
        failed.push(format!("PMP residual {:.3e} > {:.1e}", pmp.value, tol.pmp));
    }
    if oracle {
        let reference = solve_riccati_oracle(&sys, &target, &hs, &st)?;
        let rel = reference.relative_difference(&traj)?;
        report["oracle_relative_difference"] = json!(rel);
        if rel > tol.oracle_rel {
            failed.push(format!("oracle difference {rel:.3e} > {:.1e}", tol.oracle_rel));
        }
    }
    if directions > 0 {
        let s = stationarity_check(&sys, &target, &sol, directions, ctx.cfg.seed.unwrap_or(0))?;
        report["stationarity_max_abs_linear"] = json!(s.max_abs_linear);
        report["stationarity_min_quadratic"] = json!(s.min_quadratic);
    }
    if !ctx.json {
        println!(
            "N = {}, T = {}: cost {cost:.10e}, PMP residual {:.3e}, condition {:.3e}",
            sys.len(),
            hs.horizon,
            pmp.value,
            sol.condition
        );
    }
    ctx.write_json("solve.json", report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(failed.join("; ")))
    }
}

fn cmd_turnpike(ctx: Ctx) -> Outcome {
    let cfg = &ctx.cfg;
    let defaults = SweepSpec::default();
    let n_list = cfg.n_list.clone().unwrap_or(defaults.n_list);
    let n_max = *n_list
        .iter()
        .max()
        .ok_or_else(|| Failure::Config("empty `n_list`".into()))?;
    let base = cfg.system_with(n_max)?;
    let target = cfg.target_with(n_max)?;
    let spec = SweepSpec {
        n_list,
        t_list: cfg.t_list.clone().unwrap_or(defaults.t_list),
        betas: cfg.betas.clone().unwrap_or(defaults.betas),
        samples: cfg.samples(),
        fit_window: Some(match cfg.window {
            Some((lo, hi)) => FitWindow::Absolute(lo, hi),
            None => FitWindow::Relative(1.0, 0.5),
        }),
        initial: match cfg.initial_state(n_max)? {
            Some(x) => InitialState::Explicit(x),
            None => InitialState::SteadyPlusBump,
        },
    };
    let report = sweep(&base, &target, &spec)?;

    ctx.write("sweep.csv", &report.to_csv())?;
    for (run, prof) in report.runs.iter().zip(&report.profiles) {
        let stem = format!("profiles/profile_N{}_T{}_beta{}", run.n, run.horizon, run.beta);
        ctx.write(&format!("{stem}.csv"), &prof.to_csv())?;
        ctx.write(&format!("{stem}_loglog.csv"), &prof.to_log_csv())?;
    }

    let tol = cfg.tolerances();
    let mut failed = Vec::new();
    let mut spreads = serde_json::Map::new();
    for &beta in &spec.betas {
        let s = report.envelope_spread(beta);
        spreads.insert(format!("{beta}"), json!(s));
        if !(s < tol.envelope_spread) {
            failed.push(format!(
                "envelope spread {s:.3} at beta = {beta} not below {}",
                tol.envelope_spread
            ));
        }
    }
    let variation = report.shooting_variation();
    if !(variation < tol.shooting_variation) {
        failed.push(format!(
            "shooting ratio variation {variation:.3} not below {}",
            tol.shooting_variation
        ));
    }

    // Oracle comparison on the cheapest configuration of the ladder.
    let n0 = *spec.n_list.iter().min().unwrap();
    let t0 = spec.t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let sys0 = base.truncate(n0)?;
    let tgt0 = cfg.target_with(n0)?;
    let st0 = solve_static(&tgt0, &sys0)?;
    let x0 = match &spec.initial {
        InitialState::Explicit(x) => StateVector::new(x.xi[..n0].to_vec(), x.eta[..n0].to_vec())?,
        InitialState::SteadyPlusBump => {
            let mut x = st0.xhat.clone();
            x.xi[0] += sys0.b()[0].abs();
            x
        }
    };
    let hs0 = HorizonSpec::uniform(t0, x0, resolved_samples(&sys0, t0, spec.samples))?;
    let traj0 = dichotomy_solve(&sys0, &tgt0, &hs0, &st0)?.trajectory(&hs0.grid)?;
    let oracle_rel = solve_riccati_oracle(&sys0, &tgt0, &hs0, &st0)?.relative_difference(&traj0)?;
    let pmp0 = pmp_residual(&traj0, &sys0, &tgt0)?.value;
    if !(oracle_rel <= tol.oracle_rel) {
        failed.push(format!(
            "oracle difference {oracle_rel:.3e} at N = {n0}, T = {t0} above {:.1e}",
            tol.oracle_rel
        ));
    }
    if !(pmp0 <= tol.pmp) {
        failed.push(format!(
            "PMP residual {pmp0:.3e} at N = {n0}, T = {t0} above {:.1e}",
            tol.pmp
        ));
    }

    if !ctx.json {
        let mut table = String::from("    N        T   beta   envelope   exponent   shooting\n");
        for r in &report.runs {
            let fit = r.fitted_exponent.map_or("-".to_string(), |f| format!("{f:.4}"));
            let _ = writeln!(
                table,
                "{:>5} {:>8} {:>6} {:>10.5} {:>10} {:>10.5}",
                r.n, r.horizon, r.beta, r.envelope_constant, fit, r.shooting_ratio
            );
        }
        print!("{table}");
        println!("oracle check N = {n0}, T = {t0}: relative difference {oracle_rel:.3e}, PMP {pmp0:.3e}");
    }
    ctx.write_json(
        "sweep.json",
        json!({
            "runs": report.runs,
            "envelope_spread": spreads,
            "shooting_variation": variation,
            "oracle": { "N": n0, "T": t0, "relative_difference": oracle_rel, "pmp_residual": pmp0 },
            "passed": failed.is_empty(),
            "failures": failed,
        }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(failed.join("; ")))
    }
}

fn cmd_beam(ctx: Ctx) -> Outcome {
    let n = ctx.cfg.size();
    let params = ctx.cfg.beam_params()?;
    let table = modes(n, &params)?;
    let body = format!("# sign_convention=k_n>0 so that b_n>0\n{}", mode_table_csv(&table));
    ctx.write("modes.csv", &body)?;
    if !ctx.json {
        println!("wrote {} modes to {}", n, ctx.out.join("modes.csv").display());
    }
    ctx.write_json(
        "modes.json",
        json!({ "N": n, "c": params.c, "l": params.l, "d": params.d, "sign_convention": "k_n>0 so that b_n>0", "modes": table }),
    )
}

fn cmd_check(ctx: Ctx) -> Outcome {
    let sys = ctx.cfg.system()?;
    let rho = ctx.cfg.rho.unwrap_or(1.4);
    let alpha = ctx.cfg.alpha.unwrap_or(0.5);
    let ladder = doubling_truncations(sys.len(), 4);
    let report = check_assumptions(&sys, rho, alpha, &ladder)?;
    if !ctx.json {
        println!("assumption  verdict       detail");
        for v in report.verdicts() {
            println!("{:<11} {:<13} {}", v.name, v.verdict.to_string(), v.detail);
        }
    }
    let value = serde_json::to_value(&report).map_err(|e| Failure::Config(e.to_string()))?;
    ctx.write_json("check.json", value)
}
