use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sl_iosp::critical::amplitude_for;
use sl_iosp::spectral_error::{dilation_residual_with, error_value, ErrorOptions};
use sl_iosp::{classify, RegimeClass};

use crate::args::{
    Command, DilationArgs, ErrorArgs, Format, RangeArgs, ReconstructArgs, SweepArgs, VerifyArgs,
};
use crate::config::{FileValues, RunConfig, Settings};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VERIFY};
use crate::report::{build_report, reconstruct, DEFAULT_EIG_TOL, DEFAULT_NORM_TOL, SCHEMA_VERSION};

pub const JOBS_ENV: &str = "SL_IOSP_JOBS";
pub const DILATION_THRESHOLD: f64 = 1e-7;

/// What a subcommand produced: the text to emit, where to put it, and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub output: Option<PathBuf>,
    pub code: i32,
}

impl Outcome {
    fn ok(body: String, output: Option<PathBuf>) -> Self {
        Outcome {
            body,
            output,
            code: EXIT_OK,
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

fn load(common: &crate::args::CommonArgs) -> CliResult<(FileValues, Settings)> {
    let file = FileValues::load(common.config.as_deref())?;
    let settings = Settings::resolve(common, &file)?;
    Ok((file, settings))
}

pub fn execute(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Classify(common) => {
            let (_, s) = load(common)?;
            classify_cmd(&RunConfig::from_settings(&s)?)
        }
        Command::Amplitude(common) => {
            let (_, s) = load(common)?;
            amplitude_cmd(&RunConfig::from_settings(&s)?)
        }
        Command::Error(args) => error_cmd(args),
        Command::Reconstruct(args) => reconstruct_cmd(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Sweep(args) => sweep_cmd(args),
        Command::Dilation(args) => dilation_cmd(args),
    }
}

fn epsilon_text(eps: i8) -> String {
    match eps {
        0 => "0".to_string(),
        e => format!("{e:+}"),
    }
}

pub fn classify_text(class: &RegimeClass) -> String {
    format!("{}, epsilon={}, gap={}", class.regime, epsilon_text(class.epsilon), class.gap)
}

fn classify_cmd(cfg: &RunConfig) -> CliResult<Outcome> {
    let class = classify(&cfg.spec);
    let body = match cfg.format {
        None => format!("{}\n", classify_text(&class)),
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "regime": class.regime.name(),
            "epsilon": class.epsilon,
            "gap": class.gap,
        })),
        Some(Format::Csv) => format!(
            "regime,epsilon,gap\n{},{},{}\n",
            class.regime,
            class.epsilon,
            fmt17(class.gap)
        ),
    };
    Ok(Outcome::ok(body, cfg.output_path.clone()))
}

fn amplitude_cmd(cfg: &RunConfig) -> CliResult<Outcome> {
    let class = classify(&cfg.spec);
    let a = amplitude_for(&class, cfg.spec.m, cfg.spec.p, cfg.tol)?;
    let body = match cfg.format {
        None => format!("{}, a_m={}, k={}\n", class.regime, a.a_m, a.k),
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "regime": class.regime.name(),
            "epsilon": class.epsilon,
            "a_m": a.a_m,
            "k": a.k,
            "bracket_lo": a.bracket_lo,
            "bracket_hi": a.bracket_hi,
            "iterations": a.iterations,
        })),
        Some(Format::Csv) => format!(
            "regime,a_m,k,bracket_lo,bracket_hi,iterations\n{},{},{},{},{},{}\n",
            class.regime,
            fmt17(a.a_m),
            fmt17(a.k),
            fmt17(a.bracket_lo),
            fmt17(a.bracket_hi),
            a.iterations
        ),
    };
    Ok(Outcome::ok(body, cfg.output_path.clone()))
}

fn error_cmd(args: &ErrorArgs) -> CliResult<Outcome> {
    let (file, s) = load(&args.common)?;
    let cfg = RunConfig::from_settings(&s)?;
    if args.report {
        let report = build_report(&cfg, file.method(None)?)?;
        return Ok(Outcome::ok(pretty(&report), cfg.output_path));
    }
    let spec = &cfg.spec;
    let opts = ErrorOptions {
        tol: cfg.tol,
        boundary_tol: 0.0,
    };
    let e = error_value(spec.gap(), spec.m, spec.p, &opts)?;
    let body = match cfg.format {
        None => format!("{}\n", e.value),
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "regime": e.branch.regime.name(),
            "gap": e.x,
            "error_lp": e.value,
        })),
        Some(Format::Csv) => format!("gap,error_lp\n{},{}\n", fmt17(e.x), fmt17(e.value)),
    };
    Ok(Outcome::ok(body, cfg.output_path))
}

fn reconstruct_cmd(args: &ReconstructArgs) -> CliResult<Outcome> {
    let (file, s) = load(&args.common)?;
    let cfg = RunConfig::from_settings(&s)?;
    let method = file.method(args.method)?;
    let (_, profile) = reconstruct(&cfg, method)?;
    let body = match cfg.format {
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "regime": profile.branch.regime.name(),
            "x": profile.x,
            "u": profile.u,
            "q_hat": profile.q_hat,
        })),
        _ => {
            let mut out = String::with_capacity(64 * (profile.n + 2));
            out.push_str("x,u,q_hat\n");
            for i in 0..=profile.n {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt17(profile.x[i]),
                    fmt17(profile.u[i]),
                    fmt17(profile.q_hat[i])
                ));
            }
            out
        }
    };
    Ok(Outcome::ok(body, cfg.output_path))
}

fn verify_cmd(args: &VerifyArgs) -> CliResult<Outcome> {
    let (file, s) = load(&args.common)?;
    let cfg = RunConfig::from_settings(&s)?;
    let eig_tol = file.real(args.eig_tol, "eig-tol")?.unwrap_or(DEFAULT_EIG_TOL);
    let norm_tol = file.real(args.norm_tol, "norm-tol")?.unwrap_or(DEFAULT_NORM_TOL);
    if !(eig_tol > 0.0 && norm_tol > 0.0) {
        return Err(CliError::Input("--eig-tol and --norm-tol must be positive".into()));
    }
    let report = build_report(&cfg, file.method(args.method)?)?;
    let passed = report.eig_ok(cfg.spec.lambda_star, eig_tol) && report.norm_ok(norm_tol);
    Ok(Outcome {
        body: pretty(&report),
        output: cfg.output_path,
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
    })
}

/// `steps` evenly spaced points from `x_min` to `x_max`, endpoints included.
pub fn gap_grid(x_min: f64, x_max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![x_min];
    }
    let h = (x_max - x_min) / (steps - 1) as f64;
    (0..steps)
        .map(|i| if i == steps - 1 { x_max } else { x_min + i as f64 * h })
        .collect()
}

fn resolve_range(
    range: &RangeArgs,
    file: &FileValues,
    fallback: Option<(f64, f64, i64)>,
) -> CliResult<(f64, f64, usize)> {
    let need = |v: Option<f64>, name: &str, d: Option<f64>| {
        v.or(d)
            .ok_or_else(|| CliError::Input(format!("missing required flag {name}")))
    };
    let x_min = need(file.real(range.x_min, "x-min")?, "--x-min", fallback.map(|f| f.0))?;
    let x_max = need(file.real(range.x_max, "x-max")?, "--x-max", fallback.map(|f| f.1))?;
    let steps = file
        .integer(range.steps, "steps")?
        .or(fallback.map(|f| f.2))
        .ok_or_else(|| CliError::Input("missing required flag --steps".into()))?;
    if !(x_min.is_finite() && x_max.is_finite()) || x_max < x_min {
        return Err(CliError::Input(format!("invalid range [{x_min}, {x_max}]")));
    }
    if steps < 1 {
        return Err(CliError::Input(format!("--steps {steps} must be at least 1")));
    }
    Ok((x_min, x_max, steps as usize))
}

/// Worker count: flag, then the environment, then the config file, then the
/// machine's available parallelism.
pub fn resolve_jobs(flag: Option<usize>, env: Option<&str>, file: &FileValues) -> CliResult<usize> {
    let from_env = match env {
        Some(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("{JOBS_ENV}={v} is not a count")))?,
        ),
        None => None,
    };
    let jobs = match flag.or(from_env) {
        Some(j) => j,
        None => file
            .count(None, "jobs")?
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if jobs == 0 {
        return Err(CliError::Input("job count must be at least 1".into()));
    }
    Ok(jobs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub gap: f64,
    /// `None` when the point failed to evaluate
    pub error_lp: Option<f64>,
}

/// Evaluates `Z_m` at every gap independently; output order follows `gaps`.
/// Gaps within half a grid step of `0` or `m²π²` are snapped onto that boundary.
pub fn sweep_points(gaps: &[f64], m: u32, p: f64, tol: f64, jobs: usize) -> CliResult<Vec<SweepPoint>> {
    let boundary_tol = if gaps.len() > 1 {
        0.5 * (gaps[gaps.len() - 1] - gaps[0]) / (gaps.len() - 1) as f64
    } else {
        0.0
    };
    let opts = ErrorOptions { tol, boundary_tol };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| {
        gaps.par_iter()
            .map(|&gap| SweepPoint {
                gap,
                error_lp: error_value(gap, m, p, &opts).ok().map(|e| e.value),
            })
            .collect()
    }))
}

fn sweep_cmd(args: &SweepArgs) -> CliResult<Outcome> {
    let (file, s) = load(&args.common)?;
    let (m, p) = s.index_and_exponent()?;
    let (x_min, x_max, steps) = resolve_range(&args.range, &file, None)?;
    let env = std::env::var(JOBS_ENV).ok();
    let jobs = resolve_jobs(args.jobs, env.as_deref(), &file)?;
    let points = sweep_points(&gap_grid(x_min, x_max, steps), m, p, s.tol, jobs)?;
    let failed = points.iter().any(|pt| pt.error_lp.is_none());
    let body = match s.format {
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "m": m,
            "p": p,
            "points": points,
        })),
        _ => {
            let mut out = String::from("gap,error_lp\n");
            for pt in &points {
                let value = pt.error_lp.map(fmt17).unwrap_or_default();
                out.push_str(&format!("{},{}\n", fmt17(pt.gap), value));
            }
            out
        }
    };
    Ok(Outcome {
        body,
        output: s.output_path,
        code: if failed { EXIT_VERIFY } else { EXIT_OK },
    })
}

fn dilation_cmd(args: &DilationArgs) -> CliResult<Outcome> {
    let (file, s) = load(&args.common)?;
    let (m, p) = s.index_and_exponent()?;
    let (x_min, x_max, steps) = resolve_range(&args.range, &file, Some((-20.0, 60.0, 25)))?;
    let threshold = file
        .real(args.threshold, "threshold")?
        .unwrap_or(DILATION_THRESHOLD);
    let opts = ErrorOptions {
        tol: s.tol,
        boundary_tol: 0.0,
    };
    let mut worst = 0.0_f64;
    for x in gap_grid(x_min, x_max, steps) {
        let r = dilation_residual_with(x, m, p, &opts)?;
        worst = worst.max(r.abs());
    }
    let body = match s.format {
        None => format!("max_residual={worst}, points={steps}\n"),
        Some(Format::Json) => pretty(&json!({
            "schema": SCHEMA_VERSION,
            "m": m,
            "p": p,
            "points": steps,
            "max_residual": worst,
            "threshold": threshold,
        })),
        Some(Format::Csv) => format!("m,p,points,max_residual\n{m},{p},{steps},{}\n", fmt17(worst)),
    };
    Ok(Outcome {
        body,
        output: s.output_path,
        code: if worst < threshold { EXIT_OK } else { EXIT_VERIFY },
    })
}

/// Runs a command and writes its output; returns the process exit code.
pub fn run(command: &Command) -> i32 {
    match execute(command) {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(outcome: &Outcome) -> CliResult<()> {
    match &outcome.output {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{}", outcome.body);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for &v in &[0.0, -0.0, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -123456.789e10, f64::MIN_POSITIVE] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(gap_grid(-1.0, 1.0, 1), vec![-1.0]);
        let g = gap_grid(-10.0, 40.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!((g[0], g[199]), (-10.0, 40.0));
    }

    #[test]
    fn jobs_precedence() {
        let file = FileValues::parse("jobs = 3").unwrap();
        assert_eq!(resolve_jobs(Some(2), Some("5"), &file).unwrap(), 2);
        assert_eq!(resolve_jobs(None, Some("5"), &file).unwrap(), 5);
        assert_eq!(resolve_jobs(None, None, &file).unwrap(), 3);
        assert!(resolve_jobs(None, None, &FileValues::default()).unwrap() >= 1);
        assert!(resolve_jobs(Some(0), None, &file).is_err());
        assert!(resolve_jobs(None, Some("many"), &file).is_err());
    }

    #[test]
    fn classify_text_examples() {
        let spec = sl_iosp::ProblemSpec::new(0.0, 20.0, 1, 2.0).unwrap();
        assert_eq!(classify_text(&classify(&spec)), "Above, epsilon=+1, gap=20");
        let spec = sl_iosp::ProblemSpec::new(3.0, 1.0, 2, 1.5).unwrap();
        assert_eq!(classify_text(&classify(&spec)), "Below, epsilon=-1, gap=-2");
        let spec = sl_iosp::ProblemSpec::new(0.0, 9.869_604_401_089_358, 1, 2.0).unwrap();
        assert!(classify_text(&classify(&spec)).starts_with("Resonant, epsilon=0"));
    }

    #[test]
    fn sweep_is_order_preserving_and_job_independent() {
        let gaps = gap_grid(-5.0, 30.0, 15);
        let one = sweep_points(&gaps, 1, 2.0, 1e-10, 1).unwrap();
        let four = sweep_points(&gaps, 1, 2.0, 1e-10, 4).unwrap();
        assert_eq!(one, four);
        assert!(one.iter().zip(&gaps).all(|(pt, &g)| pt.gap == g));
    }
}
