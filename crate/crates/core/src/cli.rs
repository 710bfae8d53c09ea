//! Command-line front end: `pt`, `figure2`, `rus`, `wstate`, `validate`.
//!
//! Exit codes: 0 ok, 1 a validation check failed, 2 configuration error,
//! 3 numerical or output failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::amalg::HalfInt;
use crate::analytic::{figure2_table, p_coeff, p_s0_closed, w_schedule, Exactness, FirstRoundCurve, WModel, WStateEvolution};
use crate::config::{PolicyKind, RunConfig};
use crate::error::{Error, Result};
use crate::evolve::{diagonalize, propagate_taylor, HybridPropagator};
use crate::hamiltonian::{collective_block, full_hamiltonian, NetworkConfig, SpinOperator, Topology};
use crate::measure::Measurable;
use crate::rus::{JsonLinesSink, RunSummary, RusEngine};
use crate::statespace::{dicke_expand, initial_state, up_count, StateVector, ToFull, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Rounds to 12 significant digits. The shortest representation of the
/// result never has more than 12 digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Topology { .. } | Error::SizeLimit { .. } | Error::Mismatch(_) => {
            EXIT_CONFIG
        }
        Error::Numerical(_) | Error::Inconsistent(_) | Error::Pole(_) | Error::Sink(_) => EXIT_NUMERICAL,
    }
}

#[derive(Parser, Debug)]
#[command(name = "symnet", version, about = "Symmetric-state generation on spin networks")]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TopologyArg {
    Bipartite,
    Star,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Greedy,
    Fixed,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    topology: Option<TopologyArg>,
    /// Supplementary spins.
    #[arg(long = "n", global = true)]
    n_supplementary: Option<usize>,
    /// Target spins.
    #[arg(long = "m", global = true)]
    m_target: Option<usize>,
    #[arg(long, global = true)]
    coupling: Option<f64>,
    #[arg(long, global = true)]
    anisotropy: Option<f64>,
    /// Uniform field.
    #[arg(long, global = true)]
    field: Option<f64>,
    /// Extra field on the supplementary (center) spins.
    #[arg(long, global = true)]
    center_field: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First-round success probability curve on the mirror network.
    Pt {
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal first-round probability for even N up to n_max.
    Figure2 {
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat-until-success ensemble.
    Rus {
        #[arg(long)]
        target_k: Option<usize>,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        trajectories: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        policy: Option<PolicyArg>,
        /// Comma-separated measurement times for the fixed policy.
        #[arg(long, value_delimiter = ',')]
        timetable: Option<Vec<f64>>,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// W-state fidelity on the star network.
    Wstate {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Cross-checks of the collective, hybrid and full representations.
    Validate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(t) = self.topology {
            c.topology = match t {
                TopologyArg::Bipartite => Topology::Bipartite,
                TopologyArg::Star => Topology::Star,
            };
        }
        macro_rules! set {
            ($($src:ident => $dst:ident),*) => {
                $(if let Some(v) = self.$src.clone() { c.$dst = v; })*
            };
        }
        set!(n_supplementary => n_supplementary, m_target => m_target, coupling => coupling,
             anisotropy => anisotropy, field => field_uniform, center_field => field_center_extra,
             seed => master_seed);
        if let Some(d) = &self.output_dir {
            c.outputs.output_dir = d.clone();
        }
    }
}

fn apply_command(cmd: &Command, c: &mut RunConfig) -> Result<()> {
    match cmd {
        Command::Pt { t_min, t_max, points, out } => {
            if let Some(v) = t_min {
                c.time_window[0] = *v;
            }
            if let Some(v) = t_max {
                c.time_window[1] = *v;
            }
            if let Some(v) = points {
                c.curve_points = *v;
            }
            if let Some(v) = out {
                c.outputs.curve = v.clone();
            }
        }
        Command::Figure2 { n_max, out } => {
            if let Some(v) = n_max {
                c.n_max = *v;
            }
            if let Some(v) = out {
                c.outputs.table = v.clone();
            }
        }
        Command::Rus {
            target_k,
            max_rounds,
            trajectories,
            grid,
            policy,
            timetable,
            sequential,
            out,
            summary,
        } => {
            if target_k.is_some() {
                c.target_k = *target_k;
            }
            if let Some(v) = max_rounds {
                c.max_rounds = *v;
            }
            if let Some(v) = trajectories {
                c.trajectories = *v;
            }
            if let Some(v) = grid {
                c.grid_points = *v;
            }
            if let Some(p) = policy {
                c.policy = match p {
                    PolicyArg::Greedy => PolicyKind::Greedy,
                    PolicyArg::Fixed => PolicyKind::Fixed,
                };
            }
            if let Some(t) = timetable {
                c.timetable = t.clone();
            }
            if *sequential {
                c.parallel = false;
            }
            if let Some(v) = out {
                c.outputs.trajectories = v.clone();
            }
            if let Some(v) = summary {
                c.outputs.summary = v.clone();
            }
        }
        Command::Wstate { model, points, out, report } => {
            if let Some(m) = model {
                c.w_model = WModel::parse(m)?;
            }
            if let Some(v) = points {
                c.curve_points = *v;
            }
            if let Some(v) = out {
                c.outputs.wstate_curve = v.clone();
            }
            if let Some(v) = report {
                c.outputs.wstate_report = v.clone();
            }
        }
        Command::Validate { out } => {
            if let Some(v) = out {
                c.outputs.validation_report = v.clone();
            }
        }
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Sink(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Sink(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn linspace(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |i| if i + 1 == points { hi } else { lo + step * i as f64 })
}

/// Writes the `t,p` curve; returns its path.
pub fn cmd_pt(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate_pt()?;
    let curve = FirstRoundCurve::new(cfg.n_supplementary)?;
    let mut text = String::from("t,p\n");
    for t in linspace(cfg.time_window[0], cfg.time_window[1], cfg.curve_points) {
        text.push_str(&format!("{},{}\n", fmt12(t), fmt12(curve.probability(t))));
    }
    let path = cfg.outputs.resolve(&cfg.outputs.curve);
    write_text(&path, &text)?;
    Ok(path)
}

pub fn cmd_figure2(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate_figure2()?;
    let rows = figure2_table(cfg.n_max)?;
    for pair in rows.windows(2) {
        if pair[1].p_max > pair[0].p_max + 1e-12 {
            return Err(Error::Numerical(format!(
                "p_max increases from N = {} to N = {}",
                pair[0].n, pair[1].n
            )));
        }
    }
    let mut text = String::from("N,t_star,p_max,p_eq7_regularized,p_eq7_plain,abs_gap\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            fmt12(r.t_star),
            fmt12(r.p_max),
            fmt12(r.p_eq7_regularized),
            fmt12(r.p_eq7_plain),
            fmt12(r.abs_gap)
        ));
    }
    let path = cfg.outputs.resolve(&cfg.outputs.table);
    write_text(&path, &text)?;
    Ok(path)
}

#[derive(Serialize)]
struct SummaryFile {
    success_rate: f64,
    mean_rounds_to_success: Option<f64>,
    per_round_first_success: Vec<u64>,
    master_seed: u64,
    trajectories: u64,
    successes: u64,
    target_k: usize,
    max_rounds: usize,
}

pub fn cmd_rus(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate_rus()?;
    let engine = RusEngine::new(&cfg.network(), cfg.target_k(), cfg.policy()?)?;
    let traj_path = cfg.outputs.resolve(&cfg.outputs.trajectories);
    let mut sink = JsonLinesSink::with_float_format(create(&traj_path)?, round12);
    let summary = engine.run_ensemble(cfg.max_rounds, cfg.trajectories, cfg.master_seed, &mut sink, cfg.execution())?;
    sink.into_inner().flush().map_err(|e| io_err(&traj_path, e))?;
    let file = SummaryFile {
        success_rate: round12(summary.success_rate),
        mean_rounds_to_success: summary.mean_rounds_to_success.map(round12),
        per_round_first_success: summary.per_round_first_success.clone(),
        master_seed: summary.master_seed,
        trajectories: summary.trajectories,
        successes: summary.successes,
        target_k: cfg.target_k(),
        max_rounds: cfg.max_rounds,
    };
    write_json(&cfg.outputs.resolve(&cfg.outputs.summary), &file)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WStateReport {
    pub model: WModel,
    pub m: usize,
    pub lambda: f64,
    pub field_center_extra: f64,
    pub scheduled_time: f64,
    pub fidelity_at_schedule: f64,
    /// Fidelity without the center phase correction.
    pub raw_fidelity_at_schedule: f64,
    pub center_phase: f64,
    pub exactness: Exactness,
}

pub fn cmd_wstate(cfg: &RunConfig) -> Result<WStateReport> {
    cfg.validate_wstate()?;
    let sched = w_schedule(cfg.m_target, cfg.w_model)?;
    let evo = WStateEvolution::new(sched.clone())?;
    let t_s = sched.measurement_time;
    let mut text = String::from("t,fidelity\n");
    for t in linspace(0.0, 2.0 * t_s, cfg.curve_points) {
        text.push_str(&format!("{},{}\n", fmt12(t), fmt12(evo.scored_fidelity(t)?)));
    }
    write_text(&cfg.outputs.resolve(&cfg.outputs.wstate_curve), &text)?;
    let phased = evo.fidelity_with_center_phase(t_s)?;
    let fidelity = evo.scored_fidelity(t_s)?;
    let report = WStateReport {
        model: sched.model,
        m: sched.m,
        lambda: round12(sched.anisotropy),
        field_center_extra: round12(sched.field_center_extra),
        scheduled_time: round12(t_s),
        fidelity_at_schedule: round12(fidelity),
        raw_fidelity_at_schedule: round12(evo.fidelity(t_s)?),
        center_phase: round12(if sched.exactness == Exactness::Exact { 0.0 } else { phased.phase }),
        exactness: sched.exactness,
    };
    write_json(&cfg.outputs.resolve(&cfg.outputs.wstate_report), &report)?;
    if fidelity < 1.0 - 1e-9 {
        return Err(Error::Numerical(format!(
            "{} reaches fidelity {fidelity} at its scheduled time",
            sched.model.name()
        )));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_deviation: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub m: usize,
    pub time_points: usize,
    /// Spectrum of the collective block holding the initial state.
    pub collective_spectrum: Vec<f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

const AGREEMENT_THRESHOLD: f64 = 1e-10;
const CG_THRESHOLD: f64 = 1e-12;
/// Full sectors up to this size are diagonalized for spectrum checks.
const FULL_SPECTRUM_MAX_DIM: usize = 1500;

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sorted_eigenvalues(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest distance from an element of `sub` to the nearest one of `sup`.
fn containment_gap(sub: &[f64], sup: &[f64]) -> f64 {
    sub.iter()
        .map(|x| sup.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn check(name: &str, dev: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        max_deviation: round12(dev),
        threshold,
        pass: dev <= threshold,
    }
}

/// Runs every cross-check for the configured bipartite network.
pub fn validation_report(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate_validation()?;
    let net: NetworkConfig = cfg.network();
    let (n, m) = (net.n_supplementary, net.m_target);
    let init = initial_state(n, m)?;
    let block = collective_block(&net, init.s1(), init.s2(), init.total_sz())?;
    let coll = diagonalize(&block)?;
    let hybrid = HybridPropagator::new(&net)?;
    let full = full_hamiltonian(&net)?;

    // fewer samples for the expensive full-space oracle on large systems
    let points = if n + m <= 12 { 32 } else { 8 };
    let times: Vec<f64> = linspace(cfg.time_window[0], cfg.time_window[1], points).collect();
    let h0 = dicke_expand(&init)?;
    let mut full_psi = init.to_full()?.amplitudes().to_vec();
    let mut t_prev = 0.0;
    let (mut dev_ch, mut dev_hf, mut dev_born) = (0.0f64, 0.0f64, 0.0f64);
    let mut dev_norm = 0.0f64;
    for &t in &times {
        let c_t = coll.propagate(&init, t)?;
        let h_t = hybrid.propagate(&h0, t)?;
        full_psi = propagate_taylor(&full, &full_psi, t - t_prev)?;
        t_prev = t;
        let c_h = dicke_expand(&c_t)?;
        dev_ch = dev_ch.max(max_abs_diff(c_h.amplitudes(), h_t.amplitudes()));
        dev_hf = dev_hf.max(max_abs_diff(h_t.to_full()?.amplitudes(), &full_psi));
        let mut full_born = vec![0.0; n + 1];
        for (i, a) in full_psi.iter().enumerate() {
            full_born[up_count(n, i & ((1 << n) - 1))] += a.norm_sqr();
        }
        let dc = c_t.outcome_distribution();
        let dh = h_t.outcome_distribution();
        for (w, &fb) in full_born.iter().enumerate() {
            dev_born = dev_born.max((dc.get(w) - dh.get(w)).abs()).max((dh.get(w) - fb).abs());
        }
        dev_norm = dev_norm.max((c_t.norm_sqr() - 1.0).abs()).max((h_t.norm_sqr() - 1.0).abs());
    }

    let mut checks = vec![
        check("collective_vs_hybrid_evolution", dev_ch, AGREEMENT_THRESHOLD),
        check("hybrid_vs_full_evolution", dev_hf, AGREEMENT_THRESHOLD),
        check("born_consistency", dev_born, AGREEMENT_THRESHOLD),
        check("norm_conservation", dev_norm, AGREEMENT_THRESHOLD),
        check(
            "collective_eigendecomposition",
            coll.reconstruction_error(&block.matrix).max(coll.orthonormality_error()),
            AGREEMENT_THRESHOLD,
        ),
    ];

    let coll_spec = sorted_eigenvalues(block.matrix.clone());
    if net.is_unit_heisenberg() {
        let (s1, s2, sz) = (init.s1().value(), init.s2().value(), init.total_sz());
        let mut rule = Vec::new();
        let mut s = sz.abs();
        while s <= init.s1() + init.s2() {
            let sv = s.value();
            rule.push(sv * (sv + 1.0) - s1 * (s1 + 1.0) - s2 * (s2 + 1.0) + net.field_uniform * sz.value());
            s = s + HalfInt::integer(1);
        }
        rule.sort_by(f64::total_cmp);
        let dev = if rule.len() == coll_spec.len() {
            rule.iter().zip(&coll_spec).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        checks.push(check("total_spin_eigenvalue_rule", dev, AGREEMENT_THRESHOLD));
    }
    let twice_sz = init.total_sz().twice();
    let hyb_spec = sorted_eigenvalues(hybrid.hamiltonian().sector_block(twice_sz).matrix);
    checks.push(check(
        "collective_spectrum_in_hybrid",
        containment_gap(&coll_spec, &hyb_spec),
        AGREEMENT_THRESHOLD,
    ));
    if full.sector_indices(twice_sz).len() <= FULL_SPECTRUM_MAX_DIM {
        let full_spec = sorted_eigenvalues(full.sector_block(twice_sz).matrix);
        checks.push(check(
            "hybrid_spectrum_in_full",
            containment_gap(&hyb_spec, &full_spec),
            AGREEMENT_THRESHOLD,
        ));
    }

    let top = n.max(m).div_ceil(2) * 2;
    let mut dev_cg = 0.0f64;
    for nn in (2..=top.max(2)).step_by(2) {
        for s in 0..=nn {
            dev_cg = dev_cg.max((p_s0_closed(nn, s)? - p_coeff(nn, s, HalfInt::ZERO)?).abs());
        }
    }
    checks.push(check("cg_closed_form", dev_cg, CG_THRESHOLD));

    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        n,
        m,
        time_points: points,
        collective_spectrum: coll_spec.into_iter().map(round12).collect(),
        checks,
        warnings: net.warnings(),
        pass,
    })
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let report = validation_report(cfg)?;
    write_json(&cfg.outputs.resolve(&cfg.outputs.validation_report), &report)?;
    Ok(report)
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    apply_command(&cli.command, &mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    for w in cfg.network().warnings() {
        eprintln!("warning: {w}");
    }
    match &cli.command {
        Command::Pt { .. } => {
            let p = cmd_pt(&cfg)?;
            println!("wrote {}", p.display());
        }
        Command::Figure2 { .. } => {
            let p = cmd_figure2(&cfg)?;
            println!("wrote {}", p.display());
        }
        Command::Rus { .. } => {
            let s = cmd_rus(&cfg)?;
            println!(
                "success rate {} over {} trajectories",
                fmt12(s.success_rate),
                s.trajectories
            );
        }
        Command::Wstate { .. } => {
            let r = cmd_wstate(&cfg)?;
            println!("{} M = {}: fidelity {} at t = {}", r.model.name(), r.m, r.fidelity_at_schedule, r.scheduled_time);
        }
        Command::Validate { .. } => {
            let r = cmd_validate(&cfg)?;
            for c in &r.checks {
                println!("{:<34} {:>10e}  {}", c.name, c.max_deviation, if c.pass { "ok" } else { "FAILED" });
            }
            if !r.pass {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("symnet: {e}");
            exit_code(&e)
        }
    }
}
