//! C ABI for the symnet simulator.
//!
//! Every function returns a [`SymnetStatus`]; results go through out
//! pointers. On failure, [`symnet_last_error_message`] describes the error
//! for the calling thread. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use symnet::amalg::{cg, HalfInt};
use symnet::analytic::{self, WModel, WTarget};
use symnet::evolve::{diagonalize, HybridPropagator, Propagator};
use symnet::hamiltonian::{collective_block, NetworkConfig, Topology};
use symnet::measure::{trajectory_rng, Measurable};
use symnet::rus::{Execution, NullSink, Policy, RusEngine, RusState};
use symnet::statespace::initial_state;
use symnet::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymnetStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Pole = 3,
    SizeLimit = 4,
    Topology = 5,
    Mismatch = 6,
    Numerical = 7,
    Inconsistent = 8,
    Config = 9,
    Sink = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for SymnetStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => SymnetStatus::Domain,
            Error::Pole(_) => SymnetStatus::Pole,
            Error::SizeLimit { .. } => SymnetStatus::SizeLimit,
            Error::Topology { .. } => SymnetStatus::Topology,
            Error::Mismatch(_) => SymnetStatus::Mismatch,
            Error::Numerical(_) => SymnetStatus::Numerical,
            Error::Inconsistent(_) => SymnetStatus::Inconsistent,
            Error::Config(_) => SymnetStatus::Config,
            Error::Sink(_) => SymnetStatus::Sink,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn symnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

enum Failure {
    Lib(Error),
    Status(SymnetStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(SymnetStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SymnetStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SymnetStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            SymnetStatus::from(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SymnetStatus::Panic
        }
    }
}

/// Writes `value` through `out`, failing on NULL.
///
/// # Safety
/// `out` must be NULL or valid for writes of `T`.
unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymnetTopology {
    Bipartite = 0,
    Star = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymnetNetworkParams {
    pub topology: SymnetTopology,
    pub n_supplementary: usize,
    pub m_target: usize,
    pub coupling: f64,
    pub anisotropy: f64,
    pub field_uniform: f64,
    pub field_center_extra: f64,
}

/// Heisenberg bipartite network with `J = 1` and no fields.
#[no_mangle]
pub extern "C" fn symnet_network_params_default(n_supplementary: usize, m_target: usize) -> SymnetNetworkParams {
    SymnetNetworkParams {
        topology: SymnetTopology::Bipartite,
        n_supplementary,
        m_target,
        coupling: 1.0,
        anisotropy: 1.0,
        field_uniform: 0.0,
        field_center_extra: 0.0,
    }
}

impl SymnetNetworkParams {
    fn to_config(self) -> NetworkConfig {
        NetworkConfig {
            topology: match self.topology {
                SymnetTopology::Bipartite => Topology::Bipartite,
                SymnetTopology::Star => Topology::Star,
            },
            n_supplementary: self.n_supplementary,
            m_target: self.m_target,
            coupling: self.coupling,
            anisotropy: self.anisotropy,
            field_uniform: self.field_uniform,
            field_center_extra: self.field_center_extra,
        }
    }
}

/// A network with its propagators.
pub struct SymnetNetwork {
    cfg: NetworkConfig,
    collective: Propagator,
    hybrid: HybridPropagator,
}

/// A state of a network's spins.
pub struct SymnetState {
    inner: RusState,
}

fn network_ref<'a>(p: *const SymnetNetwork) -> Result<&'a SymnetNetwork, Failure> {
    // SAFETY: non-NULL handles come from symnet_network_new
    unsafe { p.as_ref() }.ok_or_else(|| null("network handle"))
}

fn state_ref<'a>(p: *const SymnetState) -> Result<&'a SymnetState, Failure> {
    // SAFETY: non-NULL handles come from this library
    unsafe { p.as_ref() }.ok_or_else(|| null("state handle"))
}

fn boxed_state(inner: RusState) -> *mut SymnetState {
    Box::into_raw(Box::new(SymnetState { inner }))
}

/// Creates a network. Star networks are simulated as the bipartite network
/// with one supplementary spin.
///
/// # Safety
/// `params` must point to a valid struct; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_network_new(
    params: *const SymnetNetworkParams,
    out: *mut *mut SymnetNetwork,
) -> SymnetStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let mut cfg = params.to_config();
        cfg.validate()?;
        cfg.topology = Topology::Bipartite;
        let init = initial_state(cfg.n_supplementary, cfg.m_target)?;
        let collective = diagonalize(&collective_block(&cfg, init.s1(), init.s2(), init.total_sz())?)?;
        let hybrid = HybridPropagator::new(&cfg)?;
        let handle = Box::into_raw(Box::new(SymnetNetwork { cfg, collective, hybrid }));
        store(out, handle).inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `network` must be NULL or a handle from [`symnet_network_new`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn symnet_network_free(network: *mut SymnetNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// The initial state: supplementary spins down, target spins up.
///
/// # Safety
/// `network` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_state_initial(network: *const SymnetNetwork, out: *mut *mut SymnetState) -> SymnetStatus {
    guard(|| {
        let net = network_ref(network)?;
        let s = initial_state(net.cfg.n_supplementary, net.cfg.m_target)?;
        let handle = boxed_state(RusState::Collective(s));
        store(out, handle).inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `state` must be NULL or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn symnet_state_free(state: *mut SymnetState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Evolves `state` for time `t` into a new handle.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_state_evolve(
    network: *const SymnetNetwork,
    state: *const SymnetState,
    t: f64,
    out: *mut *mut SymnetState,
) -> SymnetStatus {
    guard(|| {
        let net = network_ref(network)?;
        let st = state_ref(state)?;
        if !t.is_finite() {
            return Err(Failure::Lib(Error::Domain(format!("time {t} is not finite"))));
        }
        let evolved = match &st.inner {
            RusState::Collective(c) => RusState::Collective(net.collective.propagate(c, t)?),
            RusState::Hybrid(h) => RusState::Hybrid(net.hybrid.propagate(h, t)?),
        };
        let handle = boxed_state(evolved);
        store(out, handle).inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Writes the probability of each supplementary up count `w = 0..=N` into
/// `probs`, which must hold at least `N + 1` values.
///
/// # Safety
/// `state` must be live; `probs` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_state_outcome_distribution(
    state: *const SymnetState,
    probs: *mut f64,
    len: usize,
) -> SymnetStatus {
    guard(|| {
        let st = state_ref(state)?;
        let dist = match &st.inner {
            RusState::Collective(c) => c.outcome_distribution(),
            RusState::Hybrid(h) => h.outcome_distribution(),
        };
        if probs.is_null() {
            return Err(null("probs"));
        }
        if len < dist.0.len() {
            return Err(Failure::Status(
                SymnetStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", dist.0.len()),
            ));
        }
        std::slice::from_raw_parts_mut(probs, dist.0.len()).copy_from_slice(&dist.0);
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymnetOutcome {
    pub pattern: u64,
    pub up_count: usize,
    pub inferred_k: usize,
    pub probability: f64,
}

/// Measures the supplementary register with the random stream
/// `(seed, stream)` and returns the collapsed state as a new handle.
///
/// # Safety
/// `state` must be live; out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_state_measure(
    state: *const SymnetState,
    seed: u64,
    stream: u64,
    outcome: *mut SymnetOutcome,
    out: *mut *mut SymnetState,
) -> SymnetStatus {
    guard(|| {
        let st = state_ref(state)?;
        if outcome.is_null() || out.is_null() {
            return Err(null("output pointer"));
        }
        let mut rng = trajectory_rng(seed, stream);
        let (o, post) = match &st.inner {
            RusState::Collective(c) => c.sample_and_collapse(&mut rng)?,
            RusState::Hybrid(h) => h.sample_and_collapse(&mut rng)?,
        };
        store(
            outcome,
            SymnetOutcome {
                pattern: o.pattern,
                up_count: o.up_count,
                inferred_k: o.inferred_k,
                probability: o.probability,
            },
        )?;
        store(out, boxed_state(RusState::Hybrid(post)))
    })
}

/// Clebsch-Gordan coefficient with every quantum number given as twice its
/// value.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_cg(
    twice_j1: i64,
    twice_m1: i64,
    twice_j2: i64,
    twice_m2: i64,
    twice_j: i64,
    twice_m: i64,
    out: *mut f64,
) -> SymnetStatus {
    guard(|| {
        let h = HalfInt::from_twice;
        let v = cg(h(twice_j1), h(twice_m1), h(twice_j2), h(twice_m2), h(twice_j), h(twice_m))?;
        store(out, v.to_f64())
    })
}

/// `P_{S,m}` for `N` supplementary and `N` target spins, `m` given as twice
/// its value.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_p_coeff(n: usize, s: usize, twice_m: i64, out: *mut f64) -> SymnetStatus {
    guard(|| store(out, analytic::p_coeff(n, s, HalfInt::from_twice(twice_m))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_p_s0_closed(n: usize, s: usize, out: *mut f64) -> SymnetStatus {
    guard(|| store(out, analytic::p_s0_closed(n, s)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_p_of_t(n: usize, t: f64, out: *mut f64) -> SymnetStatus {
    guard(|| store(out, analytic::p_of_t(n, t)?))
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymnetFirstRoundMaximum {
    pub t_star: f64,
    pub p_star: f64,
    pub alignment_bound: f64,
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_p_max_numeric(n: usize, out: *mut SymnetFirstRoundMaximum) -> SymnetStatus {
    guard(|| {
        let m = analytic::p_max_numeric(n)?;
        store(
            out,
            SymnetFirstRoundMaximum {
                t_star: m.t_star,
                p_star: m.p_star,
                alignment_bound: m.alignment_bound,
            },
        )
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymnetWModel {
    XxOuter = 0,
    XxLocalUnitary = 1,
    XxzTuned = 2,
    XxCenterField = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymnetWSchedule {
    pub anisotropy: f64,
    pub field_center_extra: f64,
    pub measurement_time: f64,
    /// Nonzero when the target is the whole network, zero for the outer spins.
    pub targets_all_spins: u8,
    /// Nonzero when exact only up to a phase on the center spin.
    pub needs_center_phase: u8,
    /// Fidelity at the scheduled time, phase-corrected where applicable.
    pub fidelity: f64,
}

/// Schedule of a W-state model on a star network with `m` outer spins.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn symnet_w_schedule(m: usize, model: SymnetWModel, out: *mut SymnetWSchedule) -> SymnetStatus {
    guard(|| {
        let model = match model {
            SymnetWModel::XxOuter => WModel::XxOuter,
            SymnetWModel::XxLocalUnitary => WModel::XxLocalUnitary,
            SymnetWModel::XxzTuned => WModel::XxzTuned,
            SymnetWModel::XxCenterField => WModel::XxCenterField,
        };
        let s = analytic::w_schedule(m, model)?;
        let fidelity = analytic::WStateEvolution::new(s.clone())?.scored_fidelity(s.measurement_time)?;
        store(
            out,
            SymnetWSchedule {
                anisotropy: s.anisotropy,
                field_center_extra: s.field_center_extra,
                measurement_time: s.measurement_time,
                targets_all_spins: u8::from(s.target == WTarget::AllSpins),
                needs_center_phase: u8::from(s.exactness != analytic::Exactness::Exact),
                fidelity,
            },
        )
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymnetRunSummary {
    pub trajectories: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// NaN when no trajectory succeeded.
    pub mean_rounds_to_success: f64,
}

/// Greedy repeat-until-success ensemble on `network`. When `histogram` is
/// not NULL it receives, for each round `r <= histogram_len`, the number of
/// trajectories first succeeding in round `r`.
///
/// # Safety
/// `network` must be live; `out` must be valid for writes; `histogram` must
/// be NULL or valid for `histogram_len` writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn symnet_run_ensemble(
    network: *const SymnetNetwork,
    target_k: usize,
    max_rounds: usize,
    trajectories: u64,
    master_seed: u64,
    out: *mut SymnetRunSummary,
    histogram: *mut u64,
    histogram_len: usize,
) -> SymnetStatus {
    guard(|| {
        let net = network_ref(network)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let engine = RusEngine::new(&net.cfg, target_k, Policy::default())?;
        let s = engine.run_ensemble(max_rounds, trajectories, master_seed, &mut NullSink, Execution::Parallel)?;
        if !histogram.is_null() {
            let dst = std::slice::from_raw_parts_mut(histogram, histogram_len);
            for (i, slot) in dst.iter_mut().enumerate() {
                *slot = s.per_round_first_success.get(i).copied().unwrap_or(0);
            }
        }
        store(
            out,
            SymnetRunSummary {
                trajectories: s.trajectories,
                successes: s.successes,
                success_rate: s.success_rate,
                mean_rounds_to_success: s.mean_rounds_to_success.unwrap_or(f64::NAN),
            },
        )
    })
}
