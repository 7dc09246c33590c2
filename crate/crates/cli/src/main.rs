use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use flutterlab_core::checks::run_checks;
use flutterlab_core::output::{to_json, write_atomic, write_csv, write_outputs};
use flutterlab_core::sim::{frequency_scan, integrate, metrics, sweep};
use flutterlab_core::{load_config, Error, Model64, RunConfig, RunStatus};

/// Environment variable fixing the size of the worker pool.
const THREADS_VAR: &str = "FLUTTERLAB_THREADS";
const CHECK_SEED: u64 = 20_240_917;

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "flutterlab", version, about = "Wing flutter analysis and feather-based suppression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the bending and torsion mode shapes.
    Modes(Common),
    /// Dump per-feather coefficients at the scenario speed.
    Coeffs(Common),
    /// Locate the flutter speed by bisection.
    FlutterSpeed(Common),
    /// Track the two oscillatory eigenvalue branches over a speed grid.
    FreqScan(Common),
    /// Integrate the configured scenario.
    Simulate(Common),
    /// Run the configured sweep in parallel.
    Sweep(Common),
    /// Run the property suites.
    Check(Common),
}

enum Failure {
    Core(Error),
    Diverged(String),
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Core(Error::Divergence { .. }) | Failure::Diverged(_) => EXIT_DIVERGENCE,
        Failure::Core(Error::Io { .. }) => EXIT_IO,
        Failure::Core(_) => EXIT_VALIDATION,
        Failure::ChecksFailed(_) => EXIT_CHECK,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Diverged(msg) => eprintln!("error: {msg}"),
                Failure::ChecksFailed(n) => eprintln!("error: {n} property check(s) failed"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn load(c: &Common) -> Result<Self, Failure> {
        let cfg = load_config(&c.config)?;
        let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok(Self { cfg, out })
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        write_atomic(&path, to_json(value, self.cfg.output.pretty_json)?.as_bytes())?;
        Ok(path)
    }

    /// Flutter speed, needed only when speeds are given relative to it.
    fn v_flat_if_needed(&self, model: &Model64) -> Result<Option<f64>, Failure> {
        if self.cfg.speed_scale::<f64>(None).is_ok() {
            return Ok(None);
        }
        Ok(Some(self.cfg.flutter_speed(model)?.v_flat))
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Modes(c) => modes(&Ctx::load(&c)?),
        Command::Coeffs(c) => coeffs(&Ctx::load(&c)?),
        Command::FlutterSpeed(c) => flutter_speed(&Ctx::load(&c)?),
        Command::FreqScan(c) => freq_scan(&Ctx::load(&c)?),
        Command::Simulate(c) => simulate(&Ctx::load(&c)?),
        Command::Sweep(c) => run_sweep(&Ctx::load(&c)?),
        Command::Check(c) => check(&Ctx::load(&c)?),
    }
}

fn modes(ctx: &Ctx) -> Result<(), Failure> {
    let model = ctx.cfg.build_model::<f64>()?;
    let m = &model.modes;
    let rows: Vec<Vec<f64>> = (0..m.len()).map(|i| vec![m.grid[i], m.f[i], m.f2[i], m.phi[i], m.phi1[i]]).collect();
    let path = ctx.out.join("modes.csv");
    write_csv(&path, "z,f,f2,phi,phi1", &rows)?;
    let res = m.boundary_residuals();
    let worst = res.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    println!("lambda {:.10}  max boundary residual {worst:.3e}", m.lambda());
    println!("wrote {}", path.display());
    Ok(())
}

fn coeffs(ctx: &Ctx) -> Result<(), Failure> {
    let model = ctx.cfg.build_model::<f64>()?;
    let v_flat = ctx.v_flat_if_needed(&model)?;
    let sc = ctx.cfg.build_scenario(model, v_flat)?;
    let v = sc.speed.at(0.0);
    let ss = sc.model.state_space(v)?;
    let rows: Vec<Vec<f64>> = sc
        .model
        .feathers
        .iter()
        .zip(&sc.model.feather_coeffs)
        .enumerate()
        .map(|(p, (f, c))| {
            let s = &c.shape;
            vec![
                f.id as f64, s.g, s.h, s.i, s.j, c.a, c.b, c.c, c.d, c.a_bar, c.b_bar, c.c_bar, c.d_bar, ss.s1[p], ss.s2[p],
                ss.mu[p], ss.nu[p],
            ]
        })
        .collect();
    let csv = ctx.out.join("coeffs.csv");
    write_csv(&csv, "id,G,H,I,J,A,B,C,D,A_bar,B_bar,C_bar,D_bar,s1,s2,mu,nu", &rows)?;
    let modal = ctx.write_json("modal.json", &json!({ "v": v, "modal": sc.model.modal }))?;
    println!("speed {v:.6} m/s, {} feathers", rows.len());
    println!("wrote {}", csv.display());
    println!("wrote {}", modal.display());
    Ok(())
}

fn flutter_speed(ctx: &Ctx) -> Result<(), Failure> {
    let model = ctx.cfg.build_model::<f64>()?;
    let fl = ctx.cfg.flutter_speed(&model)?;
    let path = ctx.write_json("flutter.json", &json!(fl))?;
    println!(
        "v_flat {:.6} m/s  omega {:.6} rad/s  abscissa {:.2e}  ({} bisection steps)",
        fl.v_flat, fl.omega, fl.alpha, fl.iterations
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn freq_scan(ctx: &Ctx) -> Result<(), Failure> {
    let scan = ctx
        .cfg
        .scan
        .ok_or_else(|| Failure::Core(Error::Config { field: "scan".into(), message: "freq-scan needs a `scan` block".into() }))?;
    let model = ctx.cfg.build_model::<f64>()?;
    let grid: Vec<f64> = (0..scan.points)
        .map(|i| scan.v_min + (scan.v_max - scan.v_min) * i as f64 / (scan.points - 1) as f64)
        .collect();
    let rows = frequency_scan(&model.modal, &grid)?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let [p, q] = r.branches;
            vec![r.v, p.re, p.im, q.re, q.im, r.residual, if r.flagged { 1.0 } else { 0.0 }]
        })
        .collect();
    let path = ctx.out.join("freq_scan.csv");
    write_csv(&path, "v,re_1,im_1,re_2,im_2,residual,flagged", &table)?;
    let flagged = rows.iter().filter(|r| r.flagged).count();
    println!("{} speeds, {flagged} flagged", rows.len());
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(ctx: &Ctx) -> Result<(), Failure> {
    let model = ctx.cfg.build_model::<f64>()?;
    let v_flat = match ctx.v_flat_if_needed(&model)? {
        Some(v) => v,
        None => ctx.cfg.flutter_speed(&model).map(|f| f.v_flat).unwrap_or(f64::INFINITY),
    };
    let sc = ctx.cfg.build_scenario(model, Some(v_flat))?;
    let rec = integrate(&sc)?;
    let t1 = sc.speed.crossing_time(v_flat).unwrap_or(0.0);
    let m = metrics(&rec, &sc.model.goals, t1);
    let v_flat = v_flat.is_finite().then_some(v_flat);
    for p in write_outputs(&rec, &m, &ctx.cfg, v_flat, &ctx.out)? {
        println!("wrote {}", p.display());
    }
    println!("status {:?}  t_damp {:?}  E_max {:.4e}  hold {}", m.status, m.t_damp, m.e_max, m.hold);
    if m.status == RunStatus::AbortedDivergent {
        return Err(Failure::Diverged(format!("energy exceeded e_abort at t = {} s", rec.t.last().copied().unwrap_or(0.0))));
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn run_sweep(ctx: &Ctx) -> Result<(), Failure> {
    let spec = ctx
        .cfg
        .sweep_spec::<f64>()
        .ok_or_else(|| Failure::Core(Error::Config { field: "sweep".into(), message: "sweep needs a `sweep` block".into() }))?;
    let model = ctx.cfg.build_model::<f64>()?;
    let fl = ctx.cfg.flutter_speed(&model)?;
    let base = ctx.cfg.build_scenario(model, Some(fl.v_flat))?;
    let v_scale = ctx.cfg.speed_scale(Some(fl.v_flat))?;
    let entries = sweep(&base, &spec, v_scale, fl.v_flat);
    let mut summary = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let dir = ctx.out.join(format!("{i:03}_{}", sanitize(&e.label)));
        match &e.result {
            Ok((rec, m)) => {
                write_outputs(rec, m, &ctx.cfg, Some(fl.v_flat), &dir)?;
                summary.push(json!({ "label": e.label, "dir": dir, "metrics": m }));
                println!("{:<16} {:?}  t_damp {:?}  E_max {:.4e}", e.label, m.status, m.t_damp, m.e_max);
            }
            Err(msg) => {
                summary.push(json!({ "label": e.label, "error": msg }));
                println!("{:<16} failed: {msg}", e.label);
            }
        }
    }
    let path = ctx.write_json("sweep.json", &json!({ "v_flat": fl.v_flat, "entries": summary }))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn check(ctx: &Ctx) -> Result<(), Failure> {
    let model = ctx.cfg.build_model::<f64>()?;
    let v_flat = ctx.v_flat_if_needed(&model)?;
    let v_eval = ctx.cfg.build_scenario(model.clone(), v_flat)?.speed.at(0.0);
    let reports = run_checks(&model, ctx.cfg.flutter.v_hi, v_eval, CHECK_SEED)?;
    for r in &reports {
        println!("{} {:<12} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let path = ctx.write_json("checks.json", &json!(reports))?;
    println!("wrote {}", path.display());
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::ChecksFailed(failed));
    }
    Ok(())
}
