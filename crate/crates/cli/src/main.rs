mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use otoc_core::amplitudes::compute_amplitudes;
use otoc_core::analysis::{
    early_time_report, fit_front_points, fmt_f64, scan_epsilon, write_csv, EarlyTimeRow, Engine, FitOptions,
    GridWindow, OtocGrid, ScanRow,
};
use otoc_core::brute_force::{Observable, Parity, DEFAULT_BUDGET};
use otoc_core::coords::from_light_cone;
use otoc_core::gate::{dual_unitarity_defect, is_dual_unitary, Gate, GateJson};
use otoc_core::linalg::{pauli_x, pauli_y, pauli_z, unitarity_defect};
use otoc_core::path_integral::{front_params, FrontParams};

use config::{read_gate, Config, GateSpec, DEFAULT_SEED};

/// Admissible-range slack for OTOC values re-checked before output.
const VALUE_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "otoc", version, about = "OTOCs of brickwork circuits of perturbed dual-unitary gates")]
struct Cli {
    /// JSON config; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// seed for every random draw not pinned by the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads for grid and scan evaluation (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// write output here instead of stdout
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate, validate or serialize two-site gates
    #[command(subcommand)]
    Gate(GateCmd),
    /// Scattering amplitudes B_k and z_k of a gate
    Amplitudes(AmplitudesArgs),
    /// OTOC values from one of the four engines
    Otoc(OtocArgs),
    /// Closed-form 1-step (or 2-step with --z2) OTOC on a grid
    ClosedForm(ClosedArgs),
    /// Fit an erf front to a fixed-t slice
    Fit(FitArgs),
    /// Front parameters across a range of perturbation strengths
    Scan(ScanArgs),
    /// Exact light-cone OTOC and its relaxation timescale
    EarlyTime(EarlyTimeArgs),
}

#[derive(Subcommand)]
enum GateCmd {
    Generate(GenerateArgs),
    Validate(ValidateArgs),
    Serialize(SerializeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GateKind {
    Du,
    Perturbed,
    Haar,
    Swap,
    Identity,
}

#[derive(Args)]
struct GenerateArgs {
    /// falls back to the config's gate section
    #[arg(long, value_enum)]
    kind: Option<GateKind>,
    #[arg(long, default_value_t = 0.3)]
    j: f64,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    w_seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    q: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SerializeArgs {
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GateFormat::Json)]
    format: GateFormat,
}

#[derive(Args)]
struct AmplitudesArgs {
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long = "kmax")]
    k_max: Option<usize>,
    /// emit {"q", "B", "z"} instead of CSV
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OtocArgs {
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    gate: Option<PathBuf>,
    /// amplitudes z_1,z_2,...; otherwise computed from the gate
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// + or -
    #[arg(long, allow_hyphen_values = true)]
    parity: Option<String>,
    /// x0:x1,t0:t1
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// x, y, z or avg
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, default_value_t = 2)]
    q: usize,
}

#[derive(Args)]
struct ClosedArgs {
    #[arg(long)]
    z1: f64,
    #[arg(long)]
    z2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, default_value_t = 2)]
    q: usize,
}

#[derive(Args)]
struct FitArgs {
    /// grid CSV with columns x,t,C; without it the MCS slice for --z is used
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
    #[arg(long)]
    t: Option<i64>,
    #[arg(long)]
    window_c: Option<f64>,
    #[arg(long, default_value_t = 2)]
    q: usize,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    w_seed: Option<u64>,
    #[arg(long)]
    t_fit: Option<i64>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    window_c: Option<f64>,
}

#[derive(Args)]
struct EarlyTimeArgs {
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    m_max: Option<usize>,
}

struct Ctx {
    cfg: Config,
    seed: u64,
    /// set by --seed or the config, as opposed to the default
    seed_given: bool,
}

impl Ctx {
    fn gate(&self, path: Option<&Path>) -> Result<Gate> {
        match (path, &self.cfg.gate) {
            (Some(p), _) => read_gate(p),
            (None, Some(spec)) => spec.build(self.seed),
            (None, None) => bail!("no gate given: pass --gate or set \"gate\" in the config"),
        }
    }
}

/// Collected invariant failures; output is still written.
type Violations = Vec<String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) if v.is_empty() => ExitCode::SUCCESS,
        Ok(v) => {
            for msg in v {
                eprintln!("invariant violated: {msg}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<Violations> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = Config::load(cli.config.as_deref())?;
    let given = cli.seed.or(cfg.seed);
    let ctx = Ctx { cfg, seed: given.unwrap_or(DEFAULT_SEED), seed_given: given.is_some() };
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let v = match cli.cmd {
        Cmd::Gate(GateCmd::Generate(a)) => gate_generate(&ctx, a, &mut out)?,
        Cmd::Gate(GateCmd::Validate(a)) => gate_validate(&ctx, a, &mut out)?,
        Cmd::Gate(GateCmd::Serialize(a)) => gate_serialize(&ctx, a, &mut out)?,
        Cmd::Amplitudes(a) => amplitudes(&ctx, a, &mut out)?,
        Cmd::Otoc(a) => otoc(&ctx, a, &mut out)?,
        Cmd::ClosedForm(a) => closed_form(a, &mut out)?,
        Cmd::Fit(a) => fit(&ctx, a, &mut out)?,
        Cmd::Scan(a) => scan(&ctx, a, &mut out)?,
        Cmd::EarlyTime(a) => early_time(&ctx, a, &mut out)?,
    };
    out.flush()?;
    Ok(v)
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn gate_generate(ctx: &Ctx, a: GenerateArgs, out: &mut dyn Write) -> Result<Violations> {
    let spec = match a.kind {
        None => ctx.cfg.gate.clone().ok_or_else(|| anyhow!("no gate kind: pass --kind or set \"gate\" in the config"))?,
        Some(GateKind::Du) => GateSpec::Du { j: a.j, seed: None },
        Some(GateKind::Perturbed) => GateSpec::Perturbed {
            j: a.j,
            eps: a.eps.ok_or_else(|| anyhow!("--kind perturbed needs --eps"))?,
            seed: None,
            w_seed: a.w_seed,
        },
        Some(GateKind::Haar) => GateSpec::Haar { q: a.q, seed: None },
        Some(GateKind::Swap) => GateSpec::Swap { q: a.q },
        Some(GateKind::Identity) => GateSpec::Identity { q: a.q },
    };
    write_json(out, &spec.build(ctx.seed)?.to_json())?;
    Ok(vec![])
}

fn gate_validate(ctx: &Ctx, a: ValidateArgs, out: &mut dyn Write) -> Result<Violations> {
    // load without the unitarity check so the defect can be reported
    let g = match &a.gate {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading gate {}", p.display()))?;
            Gate::from_json(&serde_json::from_str::<GateJson>(&text)?, f64::INFINITY)?
        }
        None => ctx.gate(None)?,
    };
    let u_def = unitarity_defect(g.matrix());
    let du_def = dual_unitarity_defect(&g);
    let amps = compute_amplitudes(&g, 1);
    let header = ["q", "unitarity_defect", "dual_unitarity_defect", "dual_unitary", "B1", "z1"];
    let row = vec![
        g.q().to_string(),
        fmt_f64(u_def),
        fmt_f64(du_def),
        is_dual_unitary(&g, a.tol).to_string(),
        fmt_f64(amps.b[0]),
        fmt_f64(amps.z1()),
    ];
    write_csv(&mut *out, &header, &[row])?;
    Ok(if u_def > a.tol { vec![format!("max |U†U - 1| = {u_def:e} exceeds {:e}", a.tol)] } else { vec![] })
}

fn gate_serialize(ctx: &Ctx, a: SerializeArgs, out: &mut dyn Write) -> Result<Violations> {
    let g = ctx.gate(a.gate.as_deref())?;
    match a.format {
        GateFormat::Json => write_json(out, &g.to_json())?,
        GateFormat::Csv => {
            let u = g.matrix();
            let d = u.nrows();
            let rows: Vec<_> = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| vec![i.to_string(), j.to_string(), fmt_f64(u[(i, j)].re), fmt_f64(u[(i, j)].im)])
                .collect();
            write_csv(&mut *out, &["row", "col", "re", "im"], &rows)?;
        }
    }
    Ok(vec![])
}

fn amplitudes(ctx: &Ctx, a: AmplitudesArgs, out: &mut dyn Write) -> Result<Violations> {
    let g = ctx.gate(a.gate.as_deref())?;
    let k_max = a.k_max.or(ctx.cfg.amplitudes.k_max).unwrap_or(8);
    if k_max == 0 {
        bail!("--kmax must be at least 1");
    }
    let amps = compute_amplitudes(&g, k_max);
    if a.json {
        write_json(out, &amps)?;
    } else {
        let rows: Vec<_> =
            (0..k_max).map(|i| vec![(i + 1).to_string(), fmt_f64(amps.b[i]), fmt_f64(amps.z[i])]).collect();
        write_csv(&mut *out, &["k", "B", "z"], &rows)?;
    }
    Ok(amps.check_bounds(1e-9).err().map(|e| e.to_string()).into_iter().collect())
}

fn parse_parity(s: &str) -> Result<Parity> {
    match s {
        "+" | "plus" => Ok(Parity::Plus),
        "-" | "minus" => Ok(Parity::Minus),
        _ => bail!("parity must be + or -, got '{s}'"),
    }
}

fn parse_observable(s: &str, q: usize) -> Result<Observable> {
    let pauli = match s {
        "avg" | "averaged" => return Ok(Observable::Averaged),
        "x" => pauli_x(),
        "y" => pauli_y(),
        "z" => pauli_z(),
        _ => bail!("observable must be x, y, z or avg, got '{s}'"),
    };
    if q != 2 {
        bail!("Pauli observables need q = 2; use avg");
    }
    Ok(Observable::Explicit(pauli))
}

fn otoc(ctx: &Ctx, a: OtocArgs, out: &mut dyn Write) -> Result<Violations> {
    let c = &ctx.cfg.otoc;
    let engine: Engine = a.engine.as_deref().or(c.engine.as_deref()).unwrap_or("mcs").parse()?;
    let parity = parse_parity(a.parity.as_deref().or(c.parity.as_deref()).unwrap_or("+"))?;
    let grid = a.grid.or_else(|| c.grid.clone());
    let (n, m) = (a.n.or(c.n), a.m.or(c.m));
    let point = match (&grid, n, m) {
        (Some(_), None, None) => None,
        (None, Some(n), Some(m)) if n >= 1 && m >= 1 => Some((n, m)),
        (None, Some(_), Some(_)) => bail!("--n and --m must be at least 1"),
        _ => bail!("give either --grid or both --n and --m"),
    };
    let window = match (&grid, point) {
        (Some(g), _) => g.parse::<GridWindow>()?,
        (None, Some((n, m))) => {
            let (x, t) = from_light_cone(n, m, parity);
            GridWindow { x0: x, x1: x, t0: t, t1: t }
        }
        (None, None) => unreachable!(),
    };
    let needs_gate = engine == Engine::Brute || (engine == Engine::Mcs && parity == Parity::Minus);
    let z_given = a.z.or_else(|| c.z.clone());
    let gate_path = a.gate.as_deref();
    let gate = if needs_gate || z_given.is_none() { Some(ctx.gate(gate_path)?) } else { None };
    let q = gate.as_ref().map_or(a.q, |g| g.q());
    let alpha = parse_observable(a.alpha.as_deref().or(c.alpha.as_deref()).unwrap_or("avg"), q)?;
    let beta = parse_observable(a.beta.as_deref().or(c.beta.as_deref()).unwrap_or("avg"), q)?;
    let n_max = ((window.t1 - window.x0 + 2) / 2).max(1) as usize;
    let z = match (&z_given, &gate) {
        (Some(z), _) => z.clone(),
        (None, Some(g)) => compute_amplitudes(g, if engine == Engine::Mcs { n_max } else { 2 }).z,
        (None, None) => unreachable!(),
    };
    if engine != Engine::Brute && z.is_empty() {
        bail!("--z needs at least one amplitude");
    }
    if matches!(engine, Engine::Closed1 | Engine::Closed2) && parity == Parity::Minus {
        bail!("closed forms are available for parity + only");
    }
    let og = match engine {
        Engine::Brute => OtocGrid::brute(gate.as_ref().unwrap(), &window, parity, &alpha, &beta, DEFAULT_BUDGET)?,
        Engine::Mcs => OtocGrid::mcs(&z, q, &window, parity, gate.as_ref().map(|g| (g, &beta)))?,
        Engine::Closed1 => OtocGrid::closed(z[0], None, q, &window)?,
        Engine::Closed2 => OtocGrid::closed(z[0], Some(z.get(1).copied().unwrap_or(0.0)), q, &window)?,
    };
    match point {
        None => write_csv(&mut *out, &["x", "t", "C"], &og.to_csv_rows())?,
        Some((n, m)) => {
            let v = og.points.first().map_or(1.0, |p| p.2);
            let p = if parity == Parity::Plus { "+" } else { "-" };
            write_csv(&mut *out, &["n", "m", "parity", "C"], &[vec![n.to_string(), m.to_string(), p.into(), fmt_f64(v)]])?
        }
    }
    Ok(og.validate(VALUE_TOL).err().map(|e| e.to_string()).into_iter().collect())
}

fn closed_form(a: ClosedArgs, out: &mut dyn Write) -> Result<Violations> {
    let og = OtocGrid::closed(a.z1, a.z2, a.q, &a.grid.parse()?)?;
    write_csv(&mut *out, &["x", "t", "C"], &og.to_csv_rows())?;
    Ok(og.validate(VALUE_TOL).err().map(|e| e.to_string()).into_iter().collect())
}

/// Rows `x,t,C` as written by `otoc --grid`.
fn read_grid_slice(path: &Path, t: i64) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,t,C") {
        bail!("{}: expected header x,t,C", path.display());
    }
    let mut pts = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || anyhow!("{}: malformed row {}", path.display(), i + 2);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        let (x, tt): (i64, i64) = (f[0].parse().map_err(|_| bad())?, f[1].parse().map_err(|_| bad())?);
        if tt == t {
            pts.push((x, f[2].parse::<f64>().map_err(|_| bad())?));
        }
    }
    pts.sort_by_key(|p| p.0);
    Ok(pts.into_iter().map(|(x, v)| (x as f64, v)).unzip())
}

fn fit(ctx: &Ctx, a: FitArgs, out: &mut dyn Write) -> Result<Violations> {
    let t = a.t.or(ctx.cfg.fit.t).ok_or_else(|| anyhow!("--t is required"))?;
    let window_c = a.window_c.or(ctx.cfg.fit.window_c).unwrap_or(FitOptions::default().window_c);
    let z = a.z.or_else(|| ctx.cfg.otoc.z.clone());
    let (xs, ys) = match (&a.input, &z) {
        (Some(p), _) => read_grid_slice(p, t)?,
        (None, Some(z)) => {
            let og = OtocGrid::mcs(z, a.q, &GridWindow::slice(t), Parity::Plus, None)?;
            og.slice(t).into_iter().map(|(x, v)| (x as f64, v)).unzip()
        }
        (None, None) => bail!("give --input or --z"),
    };
    let reference: Option<FrontParams> = match &z {
        Some(z) if !z.is_empty() => Some(front_params(z[0], z.get(1).copied().unwrap_or(0.0), a.q)?),
        _ => None,
    };
    let f = fit_front_points(&xs, &ys, t as f64, &FitOptions { window_c, ..Default::default() })?;
    let r = |g: fn(&FrontParams) -> f64| fmt_f64(reference.as_ref().map_or(f64::NAN, g));
    let header = [
        "t", "window_c", "v_B_hat", "D_hat", "cov_vv", "cov_vd", "cov_dd", "x_half", "x_lo", "x_hi", "n_points",
        "residual_rms", "converged", "iterations", "D_variance", "v_B1", "D1", "v_B2", "D2",
    ];
    let row = vec![
        t.to_string(),
        fmt_f64(window_c),
        fmt_f64(f.v_b_hat),
        fmt_f64(f.d_hat),
        fmt_f64(f.cov_vv),
        fmt_f64(f.cov_vd),
        fmt_f64(f.cov_dd),
        fmt_f64(f.x_half),
        fmt_f64(f.x_lo),
        fmt_f64(f.x_hi),
        f.n_points.to_string(),
        fmt_f64(f.residual_rms),
        f.converged.to_string(),
        f.iterations.to_string(),
        fmt_f64(f.d_variance.unwrap_or(f64::NAN)),
        r(|p| p.v_b1),
        r(|p| p.d1),
        r(|p| p.v_b2),
        r(|p| p.d2),
    ];
    write_csv(&mut *out, &header, &[row])?;
    Ok(if f.converged { vec![] } else { vec![format!("front fit at t = {t} did not converge")] })
}

fn scan(ctx: &Ctx, a: ScanArgs, out: &mut dyn Write) -> Result<Violations> {
    let mut cfg = ctx.cfg.scan.clone().unwrap_or_default();
    if ctx.seed_given {
        cfg.base.seed = ctx.seed;
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    cfg.base.j = a.j.unwrap_or(cfg.base.j);
    cfg.w_seed = a.w_seed.unwrap_or(cfg.w_seed);
    cfg.t_fit = a.t_fit.unwrap_or(cfg.t_fit);
    cfg.k_max = a.k_max.unwrap_or(cfg.k_max);
    cfg.window_c = a.window_c.unwrap_or(cfg.window_c);
    if let Some(e) = cfg.eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
        bail!("eps values must lie in [0, 1), got {e}");
    }
    let mut rows = scan_epsilon(&cfg);
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    write_csv(&mut *out, &ScanRow::HEADER, &rows.iter().map(ScanRow::csv).collect::<Vec<_>>())?;
    // a row whose fit failed is flagged, not fatal; broken amplitude bounds are
    let mut violations = vec![];
    for r in rows.iter().filter(|r| !r.ok()) {
        if r.status.contains("invariant violated") {
            violations.push(format!("eps = {}: {}", r.eps, r.status));
        } else {
            eprintln!("warning: eps = {}: {}", r.eps, r.status);
        }
    }
    Ok(violations)
}

fn early_time(ctx: &Ctx, a: EarlyTimeArgs, out: &mut dyn Write) -> Result<Violations> {
    let g = ctx.gate(a.gate.as_deref())?;
    let m_max = a.m_max.or(ctx.cfg.early_time.m_max).unwrap_or(40);
    let rows = early_time_report(&g, m_max)?;
    write_csv(&mut *out, &EarlyTimeRow::HEADER, &rows.iter().map(EarlyTimeRow::csv).collect::<Vec<_>>())?;
    let lo = -1.0 / ((g.q() * g.q()) as f64 - 1.0) - VALUE_TOL;
    Ok(rows
        .iter()
        .filter(|r| !(r.c_plus >= lo && r.c_plus <= 1.0 + VALUE_TOL))
        .map(|r| format!("C+({0},{0}) = {1} outside [{lo}, 1]", r.t, r.c_plus))
        .collect())
}
