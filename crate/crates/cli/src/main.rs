//! Command-line laboratory for self-similar blow-up in the radial
//! supercritical nonlinear Schrodinger equation: profile solving and
//! continuation, profile diagnostics, dynamic rescaling simulation, and
//! trace analysis, with reproducible manifests next to every output.
//!
//! Exit codes: 0 ok, 2 bad flags, 3 no convergence, 4 trivial solution,
//! 5 instability, 6 not blowing up, 7 file-format error.

mod manifest;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use manifest::ManifestBuilder;
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use supercrit_core::analysis::{analyze, write_report, AnalysisSettings};
use supercrit_core::numerics::newton::NewtonSettings;
use supercrit_core::profile::{
    c0_check, continue_in_parameter, count_maxima, detect_oscillation, format as profile_format,
    hamiltonian_study, identity_residuals, initial_guess_by_shooting, phase_path, rescale_family,
    solve_profile, volterra_residual, ContinuationError, OscillationSettings, ProblemParams,
    ProfileError, ProfileSolution,
};
use supercrit_core::simulator::{
    run, write_trace, BoundaryKind, SimConfig, SimError, SimulationTrace,
};

const EXIT_BAD_FLAGS: i32 = 2;
const EXIT_NO_CONVERGENCE: i32 = 3;
const EXIT_TRIVIAL: i32 = 4;
const EXIT_INSTABILITY: i32 = 5;
const EXIT_NOT_BLOWING_UP: i32 = 6;
const EXIT_FORMAT: i32 = 7;

struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

type CmdResult = Result<(), Failure>;

fn bad_flags(err: anyhow::Error) -> Failure {
    Failure::new(EXIT_BAD_FLAGS, err)
}

fn format_error(err: anyhow::Error) -> Failure {
    Failure::new(EXIT_FORMAT, err)
}

#[derive(Parser)]
#[command(
    name = "supercrit",
    version,
    about = "Self-similar blow-up laboratory for the radial supercritical NLS"
)]
struct Cli {
    /// Key-value configuration file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blow-up profile computations.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Evolve physical initial data with the dynamic rescaling method.
    Simulate(SimulateArgs),
    /// Post-process a simulation trace.
    Analyze(AnalyzeArgs),
}

#[derive(Subcommand)]
enum ProfileCommand {
    /// Solve the profile equation from shooting estimates of a and Q(0).
    Solve(SolveArgs),
    /// Walk the dimension and/or nonlinearity from a solved profile.
    Continue(ContinueArgs),
    /// Run the diagnostic battery on a profile file.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Estimate of the eigen-parameter a.
    #[arg(long)]
    a0: Option<f64>,
    /// Estimate of Q(0).
    #[arg(long)]
    q00: Option<f64>,
    /// Collocation points.
    #[arg(long)]
    n: Option<usize>,
    /// Truncation radius of the computational interval.
    #[arg(long = "l-d")]
    l_d: Option<f64>,
    /// Newton residual target (sup norm).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ContinueArgs {
    /// Profile file to start from.
    #[arg(long = "from-file")]
    from_file: PathBuf,
    #[arg(long)]
    target_d: Option<f64>,
    #[arg(long)]
    target_sigma: Option<f64>,
    /// Largest parameter increment per continuation step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long = "profile-file")]
    profile_file: PathBuf,
    /// Truncation radii for the Hamiltonian study (comma separated).
    #[arg(long)]
    k_list: Option<String>,
    /// Points for the integral-identity residuals (comma separated).
    #[arg(long)]
    xi_list: Option<String>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Initial data family: gaussian:A for A e^{-r^2} or rational:A for
    /// A/(1+r^2)^4.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    dtau: Option<f64>,
    #[arg(long = "l-d")]
    l_d: Option<f64>,
    /// Far-field closure: exact-interpolation or adams-bashforth-ode.
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    stop_l: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Reference profile for distance tracking (d, sigma must match).
    #[arg(long = "profile-file")]
    profile_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "trace-file")]
    trace_file: PathBuf,
    #[arg(long = "profile-file")]
    profile_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Key-value configuration file: `key = value` lines, `#` comments.
fn load_config(path: Option<&PathBuf>) -> Result<HashMap<String, String>, Failure> {
    let mut map = HashMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(bad_flags)?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(bad_flags(anyhow!("config line without '=': {line}")));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Flag beats config beats default.
fn pick<T: FromStr + Clone>(
    flag: &Option<T>,
    cfg: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, Failure> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| bad_flags(anyhow!("config key {key} has unparsable value '{raw}'"))),
        None => Ok(None),
    }
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| bad_flags(anyhow!("missing required parameter --{name}")))
}

fn parse_params(d: f64, sigma: f64) -> Result<ProblemParams, Failure> {
    ProblemParams::new(d, sigma).map_err(|e| bad_flags(anyhow!(e)))
}

fn load_profile(path: &Path) -> Result<ProfileSolution, Failure> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening profile {}", path.display()))
        .map_err(format_error)?;
    profile_format::read_profile(std::io::BufReader::new(file))
        .map_err(|e| format_error(anyhow!(e)))
}

fn load_trace(path: &Path) -> Result<SimulationTrace, Failure> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening trace {}", path.display()))
        .map_err(format_error)?;
    supercrit_core::simulator::read_trace(std::io::BufReader::new(file))
        .map_err(|e| format_error(anyhow!(e)))
}

fn map_profile_error(e: ProfileError) -> Failure {
    let code = match e {
        ProfileError::TrivialSolution { .. } => EXIT_TRIVIAL,
        ProfileError::NoConvergence { .. }
        | ProfileError::SingularJacobian
        | ProfileError::NonPositiveRate { .. } => EXIT_NO_CONVERGENCE,
        ProfileError::NonFinite => EXIT_BAD_FLAGS,
    };
    Failure::new(code, anyhow!(e))
}

fn cmd_profile_solve(args: &SolveArgs, cfg: &HashMap<String, String>) -> CmdResult {
    let d = required(pick(&args.d, cfg, "d")?, "d")?;
    let sigma = required(pick(&args.sigma, cfg, "sigma")?, "sigma")?;
    let a0 = required(pick(&args.a0, cfg, "a0")?, "a0")?;
    let q00 = required(pick(&args.q00, cfg, "q00")?, "q00")?;
    let n = pick(&args.n, cfg, "n")?.unwrap_or(257);
    let l_d = pick(&args.l_d, cfg, "l_d")?.unwrap_or(200.0);
    let tol = pick(&args.tol, cfg, "tol")?.unwrap_or(1e-15);
    if !(a0 > 0.0 && q00 > 0.0) {
        return Err(bad_flags(anyhow!("a0 and q00 must be positive")));
    }

    let params = parse_params(d, sigma)?;
    let grid = supercrit_core::numerics::chebyshev::build_grid(n, l_d)
        .map_err(|e| bad_flags(anyhow!(e)))?;
    let settings = NewtonSettings {
        residual_tol: tol,
        ..NewtonSettings::default()
    };

    let mut mf = ManifestBuilder::new("profile-solve");
    mf.flag("d", d)
        .flag("sigma", sigma)
        .flag("a0", a0)
        .flag("q00", q00)
        .flag("n", n)
        .flag("l_d", l_d)
        .flag("tol", tol)
        .output(&args.out);

    let guess = initial_guess_by_shooting(&params, a0, q00, &grid)
        .map_err(|e| Failure::new(EXIT_NO_CONVERGENCE, anyhow!(e)))?;
    let sol = solve_profile(&params, &grid, guess, &settings).map_err(map_profile_error)?;

    let manifest_name = mf.write(&args.out).map_err(|e| Failure::new(1, e))?;
    let mut out = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(|e| Failure::new(1, e))?;
    profile_format::write_profile(&sol, &mut out, Some(&manifest_name))
        .map_err(|e| Failure::new(1, anyhow!(e)))?;

    let path = phase_path(&sol);
    let (oscillating, sign_changes) = detect_oscillation(&path, &OscillationSettings::default());
    println!(
        "d = {d}, sigma = {sigma}: a = {:.12}, Q(0) = {:.12}, residual = {:.3e}, \
         iterations = {}, maxima = {}, oscillating = {oscillating} ({sign_changes} sign changes)",
        sol.a,
        sol.q0(),
        sol.residual_norm,
        sol.newton_iterations,
        count_maxima(&sol.abs_q()),
    );
    Ok(())
}

fn cmd_profile_continue(args: &ContinueArgs, cfg: &HashMap<String, String>) -> CmdResult {
    let step = pick(&args.step, cfg, "step")?.unwrap_or(0.1);
    let start = load_profile(&args.from_file)?;
    let target_d = pick(&args.target_d, cfg, "target_d")?.unwrap_or(start.params.d);
    let target_sigma = pick(&args.target_sigma, cfg, "target_sigma")?.unwrap_or(start.params.sigma);
    let target = parse_params(target_d, target_sigma)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(|e| Failure::new(1, e))?;
    let record_path = args.out_dir.join("continuation.txt");

    let mut mf = ManifestBuilder::new("profile-continue");
    mf.flag("target_d", target_d)
        .flag("target_sigma", target_sigma)
        .flag("step", step)
        .input(&args.from_file)
        .output(&record_path);

    let settings = NewtonSettings::default();
    let outcome = continue_in_parameter(&start, &target, step, &settings);
    let (record, solutions, failure) = match outcome {
        Ok(c) => (c.record, c.solutions, None),
        Err(ContinuationError::Stalled {
            d,
            sigma,
            step,
            record,
        }) => (
            record,
            Vec::new(),
            Some(Failure::new(
                EXIT_NO_CONVERGENCE,
                anyhow!("continuation stalled at d = {d}, sigma = {sigma} (step {step:e})"),
            )),
        ),
        Err(e) => return Err(bad_flags(anyhow!(e))),
    };

    let manifest_name = mf.write(&record_path).map_err(|e| Failure::new(1, e))?;
    let mut out = std::fs::File::create(&record_path).map_err(|e| Failure::new(1, e.into()))?;
    writeln!(out, "# continuation").map_err(|e| Failure::new(1, e.into()))?;
    writeln!(out, "# manifest = {manifest_name}").map_err(|e| Failure::new(1, e.into()))?;
    writeln!(out, "# columns: d sigma a Q0 converged iterations")
        .map_err(|e| Failure::new(1, e.into()))?;
    for entry in &record.entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            profile_format::fmt_f64(entry.params.d),
            profile_format::fmt_f64(entry.params.sigma),
            profile_format::fmt_f64(entry.a),
            profile_format::fmt_f64(entry.q0),
            entry.converged,
            entry.iterations
        )
        .map_err(|e| Failure::new(1, e.into()))?;
    }

    for sol in &solutions {
        let name = format!("profile_d{:.4}_s{:.4}.txt", sol.params.d, sol.params.sigma);
        let path = args.out_dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(|e| Failure::new(1, e.into()))?;
        profile_format::write_profile(sol, &mut f, Some(&manifest_name))
            .map_err(|e| Failure::new(1, anyhow!(e)))?;
    }

    println!(
        "continuation wrote {} converged points to {}",
        solutions.len(),
        args.out_dir.display()
    );
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn parse_list(text: &Option<String>, default: &[f64]) -> Result<Vec<f64>, Failure> {
    match text {
        None => Ok(default.to_vec()),
        Some(t) => t
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| bad_flags(anyhow!("bad list entry '{tok}': {e}")))
            })
            .collect(),
    }
}

fn cmd_profile_diagnose(args: &DiagnoseArgs, cfg: &HashMap<String, String>) -> CmdResult {
    let sol = load_profile(&args.profile_file)?;
    let k_default: Vec<f64> = (1..=10)
        .map(|i| sol.grid.domain_length * i as f64 / 10.0)
        .collect();
    let k_list = parse_list(&pick(&args.k_list, cfg, "k_list")?, &k_default)?;
    let xi_list = parse_list(&pick(&args.xi_list, cfg, "xi_list")?, &[1.0, 5.0, 10.0, 50.0])?;

    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "# profile-diagnostics").unwrap();
    let manifest_name = match &args.out {
        Some(out) => {
            let mut mf = ManifestBuilder::new("profile-diagnose");
            mf.input(&args.profile_file).output(out);
            let name = mf.write(out).map_err(|e| Failure::new(1, e))?;
            writeln!(buf, "# manifest = {name}").unwrap();
            Some(name)
        }
        None => None,
    };
    let _ = manifest_name;

    writeln!(buf, "d = {}", profile_format::fmt_f64(sol.params.d)).unwrap();
    writeln!(buf, "sigma = {}", profile_format::fmt_f64(sol.params.sigma)).unwrap();
    writeln!(buf, "a = {}", profile_format::fmt_f64(sol.a)).unwrap();
    writeln!(buf, "Q0 = {}", profile_format::fmt_f64(sol.q0())).unwrap();
    writeln!(buf, "s_c = {}", profile_format::fmt_f64(sol.params.s_c())).unwrap();
    writeln!(buf, "maxima_count = {}", count_maxima(&sol.abs_q())).unwrap();

    let path = phase_path(&sol);
    let (osc, changes) = detect_oscillation(&path, &OscillationSettings::default());
    writeln!(buf, "oscillating = {osc}").unwrap();
    writeln!(buf, "sign_changes = {changes}").unwrap();

    match c0_check(&sol) {
        Ok(c) => {
            writeln!(buf, "c0_xi_star = {}", profile_format::fmt_f64(c.xi_star)).unwrap();
            writeln!(buf, "c0_num = {}", profile_format::fmt_f64(c.c_num)).unwrap();
            writeln!(buf, "c0_pred = {}", profile_format::fmt_f64(c.c_pred)).unwrap();
            writeln!(buf, "c0_abs_err = {}", profile_format::fmt_f64(c.abs_err)).unwrap();
            writeln!(buf, "c0_rel_err = {}", profile_format::fmt_f64(c.rel_err)).unwrap();
        }
        Err(_) => {
            writeln!(buf, "c0 = not-energy-critical").unwrap();
        }
    }

    let vres = volterra_residual(&sol, 50.0f64.min(sol.grid.domain_length));
    writeln!(buf, "volterra_residual_xi50 = {}", profile_format::fmt_f64(vres)).unwrap();

    writeln!(buf, "\n[identities]").unwrap();
    for &xi in &xi_list {
        let (r1, r2) = identity_residuals(&sol, xi).map_err(|e| bad_flags(anyhow!(e)))?;
        writeln!(
            buf,
            "{}\t{}\t{}",
            profile_format::fmt_f64(xi),
            profile_format::fmt_f64(r1),
            profile_format::fmt_f64(r2)
        )
        .unwrap();
    }

    writeln!(buf, "\n[hamiltonian]").unwrap();
    let study = hamiltonian_study(&sol, &k_list);
    for (k, h) in &study.entries {
        writeln!(buf, "{}\t{}", profile_format::fmt_f64(*k), profile_format::fmt_f64(*h)).unwrap();
    }

    writeln!(buf, "\n[phase_path]").unwrap();
    for p in &path.points {
        writeln!(
            buf,
            "{}\t{}\t{}\t{}",
            profile_format::fmt_f64(p.xi),
            profile_format::fmt_f64(p.c),
            profile_format::fmt_f64(p.d_log),
            profile_format::fmt_f64(p.psi)
        )
        .unwrap();
    }

    match &args.out {
        Some(out) => std::fs::write(out, &buf).map_err(|e| Failure::new(1, e.into()))?,
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Failure::new(1, e.into()))?,
    }
    Ok(())
}

fn parse_init(text: &str) -> Result<(String, f64, Box<dyn Fn(f64) -> f64>), Failure> {
    let (family, amp_text) = text
        .split_once(':')
        .ok_or_else(|| bad_flags(anyhow!("--init must look like gaussian:5 or rational:3")))?;
    let amp: f64 = amp_text
        .trim()
        .parse()
        .map_err(|e| bad_flags(anyhow!("bad amplitude '{amp_text}': {e}")))?;
    let f: Box<dyn Fn(f64) -> f64> = match family {
        "gaussian" => Box::new(move |r: f64| amp * (-r * r).exp()),
        "rational" => Box::new(move |r: f64| amp / (1.0 + r * r).powi(4)),
        other => return Err(bad_flags(anyhow!("unknown initial family '{other}'"))),
    };
    Ok((family.to_string(), amp, f))
}

fn cmd_simulate(args: &SimulateArgs, cfg: &HashMap<String, String>) -> CmdResult {
    let d = required(pick(&args.d, cfg, "d")?, "d")?;
    let sigma = required(pick(&args.sigma, cfg, "sigma")?, "sigma")?;
    let init_text = required(pick(&args.init, cfg, "init")?, "init")?;
    let params = parse_params(d, sigma)?;
    let mut config = SimConfig::defaults(params);
    if let Some(h) = pick(&args.h, cfg, "h")? {
        config.h = h;
    }
    if let Some(dtau) = pick(&args.dtau, cfg, "dtau")? {
        config.dtau = dtau;
    }
    if let Some(l_d) = pick(&args.l_d, cfg, "l_d")? {
        config.domain_length = l_d;
    }
    if let Some(stop_l) = pick(&args.stop_l, cfg, "stop_l")? {
        config.stop_l = stop_l;
    }
    if let Some(tau_max) = pick(&args.tau_max, cfg, "tau_max")? {
        config.tau_max = tau_max;
    }
    if let Some(every) = pick(&args.record_every, cfg, "record_every")? {
        config.record_every = every;
    }
    if let Some(bc) = pick(&args.bc, cfg, "bc")? {
        config.bc_kind = BoundaryKind::parse(&bc)
            .ok_or_else(|| bad_flags(anyhow!("unknown bc kind '{bc}'")))?;
    }

    let (family, amp, u0) = parse_init(&init_text)?;

    let reference = match &args.profile_file {
        Some(path) => {
            let sol = load_profile(path)?;
            if (sol.params.d - d).abs() > 1e-9 || (sol.params.sigma - sigma).abs() > 1e-9 {
                return Err(bad_flags(anyhow!(
                    "profile parameters (d = {}, sigma = {}) do not match the run",
                    sol.params.d,
                    sol.params.sigma
                )));
            }
            Some(rescale_family(&sol, 1.0))
        }
        None => None,
    };

    let mut mf = ManifestBuilder::new("simulate");
    mf.flag("d", d)
        .flag("sigma", sigma)
        .flag("init", format!("{family}:{amp}"))
        .flag("h", config.h)
        .flag("dtau", config.dtau)
        .flag("l_d", config.domain_length)
        .flag("bc", config.bc_kind.name())
        .flag("stop_l", config.stop_l)
        .flag("tau_max", config.tau_max)
        .flag("record_every", config.record_every)
        .output(&args.out);
    if let Some(p) = &args.profile_file {
        mf.input(p);
    }

    let write_out = |trace: &SimulationTrace, mf: &ManifestBuilder| -> Result<(), Failure> {
        let manifest_name = mf.write(&args.out).map_err(|e| Failure::new(1, e))?;
        let mut out = std::fs::File::create(&args.out).map_err(|e| Failure::new(1, e.into()))?;
        write_trace(trace, &mut out, Some(&manifest_name)).map_err(|e| Failure::new(1, anyhow!(e)))
    };

    match run(u0, &config, reference.as_ref()) {
        Ok(trace) => {
            write_out(&trace, &mf)?;
            println!(
                "run complete: tau_end = {:.4}, a_end = {:.10}, T = {:.8e}, records = {}",
                trace.tau_end,
                trace.a_end,
                trace.t_total,
                trace.records.len()
            );
            Ok(())
        }
        Err(SimError::Instability { step_index, trace })
        | Err(SimError::AmplitudeDrift {
            step_index, trace, ..
        }) => {
            write_out(&trace, &mf)?;
            Err(Failure::new(
                EXIT_INSTABILITY,
                anyhow!("instability at step {step_index}; partial trace written"),
            ))
        }
        Err(SimError::NotBlowingUp { trace }) => {
            write_out(&trace, &mf)?;
            Err(Failure::new(
                EXIT_NOT_BLOWING_UP,
                anyhow!("run is not blowing up; partial trace written"),
            ))
        }
        Err(e @ SimError::ZetaOutOfRange { .. }) => Err(Failure::new(EXIT_NOT_BLOWING_UP, anyhow!(e))),
        Err(e @ (SimError::Config(_) | SimError::SupNotAtOrigin { .. } | SimError::NonFiniteInitial)) => {
            Err(bad_flags(anyhow!(e)))
        }
        Err(e) => Err(Failure::new(EXIT_INSTABILITY, anyhow!(e))),
    }
}

fn cmd_analyze(args: &AnalyzeArgs, _cfg: &HashMap<String, String>) -> CmdResult {
    let trace = load_trace(&args.trace_file)?;
    let profile = match &args.profile_file {
        Some(p) => Some(load_profile(p)?),
        None => None,
    };

    let mut mf = ManifestBuilder::new("analyze");
    mf.input(&args.trace_file);
    if let Some(p) = &args.profile_file {
        mf.input(p);
    }
    mf.output(&args.out);

    let report = analyze(&trace, profile.as_ref(), &AnalysisSettings::default()).map_err(|e| {
        use supercrit_core::analysis::AnalysisError::*;
        match e {
            ParameterMismatch { .. } => bad_flags(anyhow!(e)),
            EmptyTrace | InsufficientRecords { .. } | EmptyOverlap => format_error(anyhow!(e)),
        }
    })?;

    let manifest_name = mf.write(&args.out).map_err(|e| Failure::new(1, e))?;
    let mut out = std::fs::File::create(&args.out).map_err(|e| Failure::new(1, e.into()))?;
    write_report(&report, &mut out, Some(&manifest_name)).map_err(|e| Failure::new(1, e.into()))?;

    println!(
        "slope = {:.6}, residual_rms = {:.3e}, records in fit = {}",
        report.rate.slope, report.rate.residual_rms, report.rate.n_records
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = (|| -> CmdResult {
        let cfg = load_config(cli.config.as_ref())?;
        match &cli.command {
            Command::Profile(ProfileCommand::Solve(args)) => cmd_profile_solve(args, &cfg),
            Command::Profile(ProfileCommand::Continue(args)) => cmd_profile_continue(args, &cfg),
            Command::Profile(ProfileCommand::Diagnose(args)) => cmd_profile_diagnose(args, &cfg),
            Command::Simulate(args) => cmd_simulate(args, &cfg),
            Command::Analyze(args) => cmd_analyze(args, &cfg),
        }
    })();
    if let Err(failure) = result {
        eprintln!("error: {:#}", failure.error);
        std::process::exit(failure.code);
    }
}
