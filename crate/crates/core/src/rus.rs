//! Repeat-until-success: evolve, measure the supplementary register, and
//! repeat until the target register lands in the requested symmetric state.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;

use once_cell::sync::OnceCell;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amalg::HalfInt;
use crate::error::{Error, Result};
use crate::evolve::{diagonalize, HybridPropagator, Propagator, SpectralTrace};
use crate::hamiltonian::{collective_block, NetworkConfig, Topology};
use crate::measure::{trajectory_rng, Measurable, MeasurementOutcome};
use crate::search::maximize;
use crate::statespace::{initial_state, CollectiveState, HybridState, StateVector};

/// Lower bound on the greedy window from round 2 on. Right after a
/// measurement the state is an outcome eigenstate, so `t → 0` would simply
/// repeat the last result.
pub const T_MIN_FLOOR: f64 = 0.05;
/// Smallest grid accepted by the greedy optimizer.
pub const MIN_GRID: usize = 256;
pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_WINDOW: (f64, f64) = (0.0, PI);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimetableEntry {
    pub round: usize,
    pub time: f64,
    pub predicted_success: f64,
}

/// Measurement times per round. Rounds past the last entry reuse its time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timetable {
    pub entries: Vec<TimetableEntry>,
}

impl Timetable {
    /// Timetable with rounds numbered from 1 and no predictions.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        let t = Timetable {
            entries: times
                .iter()
                .enumerate()
                .map(|(i, &time)| TimetableEntry {
                    round: i + 1,
                    time,
                    predicted_success: f64::NAN,
                })
                .collect(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Config("timetable has no entries".into()));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.round != i + 1 {
                return Err(Error::Config(format!("timetable entry {i} has round {}, expected {}", e.round, i + 1)));
            }
            if !(e.time > 0.0 && e.time.is_finite()) {
                return Err(Error::Config(format!("timetable round {}: time must be positive, got {}", e.round, e.time)));
            }
            if !e.predicted_success.is_nan() && !(0.0..=1.0).contains(&e.predicted_success) {
                return Err(Error::Config(format!(
                    "timetable round {}: predicted probability {} outside [0, 1]",
                    e.round, e.predicted_success
                )));
            }
        }
        Ok(())
    }

    pub fn time_for(&self, round: usize) -> f64 {
        let i = round.clamp(1, self.entries.len()) - 1;
        self.entries[i].time
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    FixedTimetable(Timetable),
    /// Per round, the time in `window` maximizing the chance of success in
    /// that round.
    Greedy { window: (f64, f64), grid: usize },
}

impl Default for Policy {
    fn default() -> Self {
        Policy::Greedy {
            window: DEFAULT_WINDOW,
            grid: DEFAULT_GRID,
        }
    }
}

impl Policy {
    fn validate(&self) -> Result<()> {
        match self {
            Policy::FixedTimetable(t) => t.validate(),
            Policy::Greedy { window, grid } => check_window(*window, *grid),
        }
    }
}

fn check_window(window: (f64, f64), grid: usize) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
        return Err(Error::Domain(format!("empty or invalid time window [{lo}, {hi}]")));
    }
    if grid < MIN_GRID {
        return Err(Error::Domain(format!("grid of {grid} points is below the minimum {MIN_GRID}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Success,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub time: f64,
    pub cumulative_time: f64,
    pub pattern: u64,
    pub up_count: usize,
    pub inferred_k: usize,
    /// Target Dicke indices with weight after the measurement.
    pub target_support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub trajectory_index: u64,
    pub master_seed: u64,
    pub target_k: usize,
    pub rounds: Vec<RoundRecord>,
    pub status: TerminalStatus,
    pub rounds_used: usize,
}

impl TrajectoryRecord {
    pub fn succeeded(&self) -> bool {
        self.status == TerminalStatus::Success
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trajectories: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// `None` when no trajectory succeeded.
    pub mean_rounds_to_success: Option<f64>,
    /// Entry `r - 1` counts trajectories first succeeding in round `r`.
    pub per_round_first_success: Vec<u64>,
    pub master_seed: u64,
}

/// Consumer of finished trajectories, fed in trajectory order.
pub trait RecordSink {
    fn accept(&mut self, record: &TrajectoryRecord) -> Result<()>;
}

impl RecordSink for Vec<TrajectoryRecord> {
    fn accept(&mut self, record: &TrajectoryRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards every record.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _: &TrajectoryRecord) -> Result<()> {
        Ok(())
    }
}

#[derive(Serialize)]
struct RoundLine {
    trajectory: u64,
    round: usize,
    time: f64,
    up_count: usize,
    inferred_k: usize,
    success: bool,
}

/// One JSON object per round:
/// `{"trajectory", "round", "time", "up_count", "inferred_k", "success"}`.
pub struct JsonLinesSink<W: Write> {
    out: W,
    format: fn(f64) -> f64,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        JsonLinesSink { out, format: |x| x }
    }

    /// Passes every time through `format` before printing.
    pub fn with_float_format(out: W, format: fn(f64) -> f64) -> Self {
        JsonLinesSink { out, format }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for JsonLinesSink<W> {
    fn accept(&mut self, record: &TrajectoryRecord) -> Result<()> {
        for r in &record.rounds {
            let success = record.succeeded() && r.round == record.rounds_used;
            let line = RoundLine {
                trajectory: record.trajectory_index,
                round: r.round,
                time: (self.format)(r.time),
                up_count: r.up_count,
                inferred_k: r.inferred_k,
                success,
            };
            let text = serde_json::to_string(&line).map_err(|e| Error::Sink(e.to_string()))?;
            writeln!(self.out, "{text}").map_err(|e| Error::Sink(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// State entering a round.
#[derive(Clone, Debug, PartialEq)]
pub enum RusState {
    Collective(CollectiveState),
    Hybrid(HybridState),
}

impl RusState {
    fn round_key(&self) -> Option<usize> {
        match self {
            RusState::Collective(_) => None,
            // a post-measurement state is one basis vector up to a phase
            RusState::Hybrid(h) => {
                let mut nz = h.amplitudes().iter().enumerate().filter(|(_, a)| a.norm_sqr() > 0.0);
                match (nz.next(), nz.next()) {
                    (Some((i, _)), None) => Some(i),
                    _ => None,
                }
            }
        }
    }
}

/// Propagators and per-state greedy results for one network and target.
pub struct RusEngine {
    cfg: NetworkConfig,
    target_k: usize,
    initial: CollectiveState,
    collective: Propagator,
    hybrid: HybridPropagator,
    first_round: OnceCell<(f64, f64)>,
    later_rounds: Mutex<HashMap<usize, (f64, f64)>>,
    policy: Policy,
}

/// Star networks are handled as the bipartite network with one
/// supplementary spin.
fn as_bipartite(cfg: &NetworkConfig) -> NetworkConfig {
    let mut c = cfg.clone();
    c.topology = Topology::Bipartite;
    c
}

impl RusEngine {
    pub fn new(cfg: &NetworkConfig, target_k: usize, policy: Policy) -> Result<Self> {
        cfg.validate()?;
        policy.validate()?;
        let cfg = as_bipartite(cfg);
        let (n, m) = (cfg.n_supplementary, cfg.m_target);
        if target_k > m {
            return Err(Error::Domain(format!("target index {target_k} exceeds M = {m}")));
        }
        let initial = initial_state(n, m)?;
        let block = collective_block(&cfg, initial.s1(), initial.s2(), initial.total_sz())?;
        let collective = diagonalize(&block)?;
        let hybrid = HybridPropagator::new(&cfg)?;
        Ok(RusEngine {
            cfg,
            target_k,
            initial,
            collective,
            hybrid,
            first_round: OnceCell::new(),
            later_rounds: Mutex::new(HashMap::new()),
            policy,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn target_k(&self) -> usize {
        self.target_k
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn initial(&self) -> RusState {
        RusState::Collective(self.initial.clone())
    }

    /// Success probability of measuring at `t` as a function of `t`.
    fn success_traces(&self, state: &RusState) -> Result<Vec<SpectralTrace>> {
        let k = self.target_k;
        match state {
            RusState::Collective(c) => {
                let rows: Vec<usize> = c
                    .m1_values()
                    .enumerate()
                    .filter(|&(_, m1)| c.target_k_for(m1) == k)
                    .map(|(i, _)| i)
                    .collect();
                Ok(vec![self.collective.spectral_trace(c.amplitudes(), &rows)?])
            }
            RusState::Hybrid(h) => {
                let m = h.m_target();
                self.hybrid.spectral_trace(h, |i| i % (m + 1) == k)
            }
        }
    }

    /// Greedy choice `(t_star, p_star)` on `window`.
    pub fn optimize(&self, state: &RusState, window: (f64, f64), grid: usize) -> Result<(f64, f64)> {
        check_window(window, grid)?;
        let traces = self.success_traces(state)?;
        let p = |t: f64| traces.iter().map(|tr| tr.probability(t)).sum::<f64>();
        // a vanishing probability is returned as is
        let best = maximize(p, window.0, window.1, grid, window.0 == 0.0);
        Ok((best.t, best.value.clamp(0.0, 1.0)))
    }

    fn greedy_window(round: usize, window: (f64, f64)) -> (f64, f64) {
        if round >= 2 {
            (window.0.max(T_MIN_FLOOR), window.1)
        } else {
            window
        }
    }

    /// Measurement time for `round` entering with `state`.
    pub fn next_time(&self, state: &RusState, round: usize) -> Result<f64> {
        match &self.policy {
            Policy::FixedTimetable(t) => Ok(t.time_for(round)),
            Policy::Greedy { window, grid } => {
                let w = Self::greedy_window(round, *window);
                match (state, state.round_key()) {
                    (RusState::Collective(c), _) if *c == self.initial => {
                        self.first_round.get_or_try_init(|| self.optimize(state, w, *grid)).map(|r| r.0)
                    }
                    (RusState::Hybrid(_), Some(key)) => {
                        if let Some(r) = self.later_rounds.lock().expect("greedy cache poisoned").get(&key) {
                            return Ok(r.0);
                        }
                        // the optimum does not depend on the global phase
                        let r = self.optimize(state, w, *grid)?;
                        self.later_rounds.lock().expect("greedy cache poisoned").insert(key, r);
                        Ok(r.0)
                    }
                    _ => Ok(self.optimize(state, w, *grid)?.0),
                }
            }
        }
    }

    /// Evolves `state` for `t` and measures.
    pub fn step<R: rand::Rng + ?Sized>(
        &self,
        state: &RusState,
        t: f64,
        rng: &mut R,
    ) -> Result<(MeasurementOutcome, HybridState)> {
        match state {
            RusState::Collective(c) => self.collective.propagate(c, t)?.sample_and_collapse(rng),
            RusState::Hybrid(h) => self.hybrid.propagate(h, t)?.sample_and_collapse(rng),
        }
    }

    pub fn run_trajectory(&self, max_rounds: usize, master_seed: u64, index: u64) -> Result<TrajectoryRecord> {
        if max_rounds == 0 {
            return Err(Error::Domain("max_rounds must be at least 1".into()));
        }
        let mut rng = trajectory_rng(master_seed, index);
        let mut state = self.initial();
        let mut rounds = Vec::new();
        let mut elapsed = 0.0;
        let mut status = TerminalStatus::Exhausted;
        for round in 1..=max_rounds {
            let t = self.next_time(&state, round)?;
            let (outcome, post) = self.step(&state, t, &mut rng)?;
            elapsed += t;
            let support = post.target_support();
            if support != [outcome.inferred_k] {
                return Err(Error::Inconsistent(format!(
                    "round {round}: target support {support:?} is not the single index {}",
                    outcome.inferred_k
                )));
            }
            rounds.push(RoundRecord {
                round,
                time: t,
                cumulative_time: elapsed,
                pattern: outcome.pattern,
                up_count: outcome.up_count,
                inferred_k: outcome.inferred_k,
                target_support: support,
            });
            if outcome.inferred_k == self.target_k {
                status = TerminalStatus::Success;
                break;
            }
            state = RusState::Hybrid(post);
        }
        Ok(TrajectoryRecord {
            trajectory_index: index,
            master_seed,
            target_k: self.target_k,
            rounds_used: rounds.len(),
            rounds,
            status,
        })
    }

    pub fn run_ensemble(
        &self,
        max_rounds: usize,
        trajectories: u64,
        master_seed: u64,
        sink: &mut dyn RecordSink,
        execution: Execution,
    ) -> Result<RunSummary> {
        if trajectories == 0 {
            return Err(Error::Domain("at least one trajectory is required".into()));
        }
        if max_rounds == 0 {
            return Err(Error::Domain("max_rounds must be at least 1".into()));
        }
        let mut acc = Accumulator::new(max_rounds);
        match execution {
            Execution::Sequential => {
                for i in 0..trajectories {
                    let rec = self.run_trajectory(max_rounds, master_seed, i)?;
                    acc.add(&rec);
                    sink.accept(&rec)?;
                }
            }
            Execution::Parallel => {
                const CHUNK: u64 = 1024;
                let mut start = 0;
                while start < trajectories {
                    let end = (start + CHUNK).min(trajectories);
                    let records: Vec<Result<TrajectoryRecord>> = (start..end)
                        .into_par_iter()
                        .map(|i| self.run_trajectory(max_rounds, master_seed, i))
                        .collect();
                    for rec in records {
                        let rec = rec?;
                        acc.add(&rec);
                        sink.accept(&rec)?;
                    }
                    start = end;
                }
            }
        }
        Ok(acc.finish(trajectories, master_seed))
    }
}

struct Accumulator {
    successes: u64,
    rounds_to_success: u64,
    histogram: Vec<u64>,
}

impl Accumulator {
    fn new(max_rounds: usize) -> Self {
        Accumulator {
            successes: 0,
            rounds_to_success: 0,
            histogram: vec![0; max_rounds],
        }
    }

    fn add(&mut self, rec: &TrajectoryRecord) {
        if rec.succeeded() {
            self.successes += 1;
            self.rounds_to_success += rec.rounds_used as u64;
            self.histogram[rec.rounds_used - 1] += 1;
        }
    }

    fn finish(self, trajectories: u64, master_seed: u64) -> RunSummary {
        RunSummary {
            trajectories,
            successes: self.successes,
            success_rate: self.successes as f64 / trajectories as f64,
            mean_rounds_to_success: (self.successes > 0)
                .then(|| self.rounds_to_success as f64 / self.successes as f64),
            per_round_first_success: self.histogram,
            master_seed,
        }
    }
}

/// Greedy `(t_star, p_star)` for measuring `state` next.
pub fn optimize_next_time(
    state: &RusState,
    cfg: &NetworkConfig,
    target_k: usize,
    window: (f64, f64),
    grid: usize,
) -> Result<(f64, f64)> {
    let engine = RusEngine::new(cfg, target_k, Policy::Greedy { window, grid })?;
    check_state(&engine, state)?;
    engine.optimize(state, window, grid)
}

fn check_state(engine: &RusEngine, state: &RusState) -> Result<()> {
    let (n, m) = match state {
        RusState::Collective(c) => (c.n_supplementary(), c.m_target()),
        RusState::Hybrid(h) => (h.n_supplementary(), h.m_target()),
    };
    if (n, m) != (engine.cfg.n_supplementary, engine.cfg.m_target) {
        return Err(Error::Mismatch(format!(
            "state (N = {n}, M = {m}) vs network (N = {}, M = {})",
            engine.cfg.n_supplementary, engine.cfg.m_target
        )));
    }
    if let RusState::Collective(c) = state {
        if c.s1() != HalfInt::half(n) || c.total_sz() != engine.initial.total_sz() {
            return Err(Error::Mismatch("collective state outside the initial sector".into()));
        }
    }
    Ok(())
}

pub fn run_trajectory(
    cfg: &NetworkConfig,
    target_k: usize,
    policy: Policy,
    max_rounds: usize,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    RusEngine::new(cfg, target_k, policy)?.run_trajectory(max_rounds, master_seed, index)
}

#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    cfg: &NetworkConfig,
    target_k: usize,
    policy: Policy,
    max_rounds: usize,
    trajectories: u64,
    master_seed: u64,
    sink: &mut dyn RecordSink,
    execution: Execution,
) -> Result<RunSummary> {
    RusEngine::new(cfg, target_k, policy)?.run_ensemble(max_rounds, trajectories, master_seed, sink, execution)
}
