//! Closed-form first-round quantities on the mirror network and the W-state
//! schedules on the star network.
//!
//! On the mirror network (`N = M`, Heisenberg, `J = 1`) the first-round
//! amplitude on `|N/2, m⟩|N/2, -m⟩` is `Σ_S exp(-i E_S t) P_{S,m}` with
//! `E_S = S(S+1)` up to a constant and
//! `P_{S,m} = ⟨N/2 -N/2; N/2 N/2 | S 0⟩ ⟨N/2 m; N/2 -m | S 0⟩`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amalg::{cg, hyp2f1_terminating, log_gamma, ExactRadical, HalfInt};
use crate::error::{Error, Result};
use crate::evolve::{diagonalize, Propagator};
use crate::hamiltonian::{star_block, NetworkConfig};
use crate::search::maximize;
use crate::statespace::C64;

/// Minimum grid used by [`p_max_numeric`].
pub const MIN_PEAK_GRID: usize = 4096;
/// Required agreement between the numeric maximum and `(Σ|P_{S,0}|)²`.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-9;

fn require_even(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("mirror-network formulas need an even N >= 2, got {n}")));
    }
    Ok(())
}

/// `P_{S,m}` as an exact signed radical.
pub fn p_coeff_exact(n: usize, s: usize, m: HalfInt) -> Result<ExactRadical> {
    if s > n {
        return Err(Error::Domain(format!("S = {s} exceeds N = {n}")));
    }
    let j = HalfInt::half(n);
    let total = HalfInt::integer(s as i64);
    let a = cg(j, -j, j, j, total, HalfInt::ZERO)?;
    let b = cg(j, m, j, -m, total, HalfInt::ZERO)?;
    Ok(&a * &b)
}

pub fn p_coeff(n: usize, s: usize, m: HalfInt) -> Result<f64> {
    Ok(p_coeff_exact(n, s, m)?.to_f64())
}

/// The Gamma-function closed form of `P_{S,0}` for even `N`.
pub fn p_s0_closed(n: usize, s: usize) -> Result<f64> {
    require_even(n)?;
    if s > n {
        return Err(Error::Domain(format!("S = {s} exceeds N = {n}")));
    }
    if s % 2 == 1 {
        // 1 + cos(πS) vanishes
        return Ok(0.0);
    }
    let (nf, sf) = (n as f64, s as f64);
    let sign = if ((n + s) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let ln_num = -(nf + 2.0) * 2f64.ln()
        + (2.0 * sf + 1.0).ln()
        + log_gamma(nf + 1.0)?.ln_abs
        + log_gamma((sf + 1.0) / 2.0)?.ln_abs
        + 2f64.ln();
    let ln_den = log_gamma((nf - sf + 2.0) / 2.0)?.ln_abs
        + log_gamma(sf / 2.0 + 1.0)?.ln_abs
        + log_gamma((nf + sf + 3.0) / 2.0)?.ln_abs;
    Ok(sign * (ln_num - ln_den).exp())
}

/// First-round success probability `P(t)` towards `|S(N, N/2)⟩` on the
/// mirror network, with the `P_{S,0}` precomputed.
#[derive(Clone, Debug)]
pub struct FirstRoundCurve {
    n: usize,
    /// `(S(S+1), P_{S,0})` for every nonvanishing term.
    terms: Vec<(f64, f64)>,
}

impl FirstRoundCurve {
    pub fn new(n: usize) -> Result<Self> {
        require_even(n)?;
        let terms = (0..=n)
            .step_by(2)
            .map(|s| Ok(((s * (s + 1)) as f64, p_coeff(n, s, HalfInt::ZERO)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FirstRoundCurve { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probability(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(e, p)| C64::from_polar(p, -e * t))
            .sum::<C64>()
            .norm_sqr()
    }

    /// `(Σ_S |P_{S,0}|)²`, reached when all phases align.
    pub fn alignment_bound(&self) -> f64 {
        self.terms.iter().map(|(_, p)| p.abs()).sum::<f64>().powi(2)
    }

    /// Largest frequency `N(N+1)`.
    fn max_frequency(&self) -> f64 {
        self.terms.last().map(|t| t.0).unwrap_or(0.0)
    }
}

pub fn p_of_t(n: usize, t: f64) -> Result<f64> {
    Ok(FirstRoundCurve::new(n)?.probability(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstRoundMaximum {
    pub t_star: f64,
    pub p_star: f64,
    pub alignment_bound: f64,
}

/// Maximizes `P(t)` over `(0, π]`. Every frequency is an even integer, so
/// `π` is a period.
pub fn p_max_numeric(n: usize) -> Result<FirstRoundMaximum> {
    let curve = FirstRoundCurve::new(n)?;
    // at least 8 samples per period of the fastest term
    let grid = MIN_PEAK_GRID.max((8.0 * curve.max_frequency()).ceil() as usize);
    let best = maximize(|t| curve.probability(t), 0.0, PI, grid, true);
    let bound = curve.alignment_bound();
    if (best.value - bound).abs() > ALIGNMENT_TOLERANCE {
        return Err(Error::Numerical(format!(
            "N = {n}: maximum {} misses the alignment value {bound}",
            best.value
        )));
    }
    Ok(FirstRoundMaximum {
        t_star: best.t,
        p_star: best.value,
        alignment_bound: bound,
    })
}

/// Literal evaluation of the printed maximum-probability formula
///
/// ```text
/// { Γ((N+1)/2) [ √(2π) / (Γ(-1/4) Γ((2N+5)/4))
///              + N ₂F₁(3/2, 1-N/2; (N+5)/2; -1) / (2 Γ((N+5)/2)) ] }²
/// ```
///
/// with `₂F₁` regularized or not. Reported next to [`p_max_numeric`]; the
/// two do not agree.
pub fn p_max_closed_as_printed(n: usize, regularized: bool) -> Result<f64> {
    require_even(n)?;
    let nf = n as f64;
    let lg_prefactor = log_gamma((nf + 1.0) / 2.0)?;
    let g_quarter = log_gamma(-0.25)?;
    let lg_b = log_gamma((2.0 * nf + 5.0) / 4.0)?;
    let first = g_quarter.sign
        * lg_b.sign
        * (lg_prefactor.ln_abs + 0.5 * (2.0 * PI).ln() - g_quarter.ln_abs - lg_b.ln_abs).exp();
    let f = hyp2f1_terminating(1.5, 1.0 - nf / 2.0, (nf + 5.0) / 2.0, -1.0, regularized)?;
    let lg_c = log_gamma((nf + 5.0) / 2.0)?;
    let second = nf * f / 2.0 * (lg_prefactor.ln_abs - lg_c.ln_abs).exp();
    let value = (first + second).powi(2);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("printed formula is not finite at N = {n}")));
    }
    Ok(value)
}

/// One row of the first-round optimum table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure2Row {
    pub n: usize,
    pub t_star: f64,
    pub p_max: f64,
    pub p_eq7_regularized: f64,
    pub p_eq7_plain: f64,
    /// Distance from `p_max` to the closer of the two printed readings.
    pub abs_gap: f64,
}

pub fn figure2_row(n: usize) -> Result<Figure2Row> {
    let best = p_max_numeric(n)?;
    let reg = p_max_closed_as_printed(n, true)?;
    let plain = p_max_closed_as_printed(n, false)?;
    Ok(Figure2Row {
        n,
        t_star: best.t_star,
        p_max: best.p_star,
        p_eq7_regularized: reg,
        p_eq7_plain: plain,
        abs_gap: (best.p_star - reg).abs().min((best.p_star - plain).abs()),
    })
}

/// Rows for every even `N` in `2..=n_max`, ascending.
pub fn figure2_table(n_max: usize) -> Result<Vec<Figure2Row>> {
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max = {n_max} leaves no even N >= 2")));
    }
    (2..=n_max).step_by(2).collect::<Vec<_>>().into_par_iter().map(figure2_row).collect()
}

/// Star-network W-state preparation schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WModel {
    /// XX coupling; the outer spins end in `|S(M, M-1)⟩`.
    XxOuter,
    /// XX coupling; all spins reach `|S(M+1, M)⟩` up to a phase on the center.
    XxLocalUnitary,
    /// XXZ with `λ = 2/(1-M)`; exact `|S(M+1, M)⟩`.
    XxzTuned,
    /// XX with an extra field `-2` on the center; exact `|S(M+1, M)⟩`.
    XxCenterField,
}

impl WModel {
    pub const ALL: [WModel; 4] = [
        WModel::XxOuter,
        WModel::XxLocalUnitary,
        WModel::XxzTuned,
        WModel::XxCenterField,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WModel::XxOuter => "xx_outer",
            WModel::XxLocalUnitary => "xx_local_unitary",
            WModel::XxzTuned => "xxz_tuned",
            WModel::XxCenterField => "xx_center_field",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        WModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown W-state model '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WTarget {
    /// `|S(M, M-1)⟩` on the outer spins, center traced out.
    OuterSpins,
    /// `|S(M+1, M)⟩` on center and outer spins.
    AllSpins,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpToLocalUnitaryOnCenter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WSchedule {
    pub model: WModel,
    pub m: usize,
    pub anisotropy: f64,
    pub field_center_extra: f64,
    pub measurement_time: f64,
    pub target: WTarget,
    pub exactness: Exactness,
}

pub fn w_schedule(m: usize, model: WModel) -> Result<WSchedule> {
    if m < 2 {
        return Err(Error::Domain(format!("W-state schedules need M >= 2, got {m}")));
    }
    let mf = m as f64;
    let sched = match model {
        WModel::XxOuter => WSchedule {
            model,
            m,
            anisotropy: 0.0,
            field_center_extra: 0.0,
            measurement_time: PI / (2.0 * mf.sqrt()),
            target: WTarget::OuterSpins,
            exactness: Exactness::Exact,
        },
        WModel::XxLocalUnitary => WSchedule {
            model,
            m,
            anisotropy: 0.0,
            field_center_extra: 0.0,
            measurement_time: mf.sqrt().atan() / mf.sqrt(),
            target: WTarget::AllSpins,
            exactness: Exactness::UpToLocalUnitaryOnCenter,
        },
        WModel::XxzTuned => WSchedule {
            model,
            m,
            anisotropy: 2.0 / (1.0 - mf),
            field_center_extra: 0.0,
            measurement_time: PI / (2.0 * (mf + 1.0).sqrt()),
            target: WTarget::AllSpins,
            exactness: Exactness::Exact,
        },
        WModel::XxCenterField => WSchedule {
            model,
            m,
            anisotropy: 0.0,
            field_center_extra: -2.0,
            measurement_time: PI / (2.0 * (mf + 1.0).sqrt()),
            target: WTarget::AllSpins,
            exactness: Exactness::Exact,
        },
    };
    Ok(sched)
}

impl WSchedule {
    pub fn network(&self) -> NetworkConfig {
        NetworkConfig::star(self.m)
            .with_anisotropy(self.anisotropy)
            .with_center_field(self.field_center_extra)
    }
}

/// Fidelity of the scheduled target along the evolution of the star
/// network from `|1⟩|M/2, M/2⟩`.
#[derive(Clone, Debug)]
pub struct WStateEvolution {
    schedule: WSchedule,
    propagator: Propagator,
}

/// Fidelity after the best phase rotation `diag(e^{iφ}, 1)` on the center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptimized {
    pub fidelity: f64,
    pub phase: f64,
}

impl WStateEvolution {
    pub fn new(schedule: WSchedule) -> Result<Self> {
        Self::with_network(schedule.clone(), &schedule.network())
    }

    /// Same target and schedule under a different star Hamiltonian.
    pub fn with_network(schedule: WSchedule, cfg: &NetworkConfig) -> Result<Self> {
        let propagator = diagonalize(&star_block(cfg)?)?;
        Ok(WStateEvolution { schedule, propagator })
    }

    pub fn schedule(&self) -> &WSchedule {
        &self.schedule
    }

    /// Star-basis amplitudes at time `t` (index `c * (M + 1) + k`).
    pub fn state(&self, t: f64) -> Result<Vec<C64>> {
        let m = self.schedule.m;
        let mut psi = vec![C64::new(0.0, 0.0); 2 * (m + 1)];
        psi[(m + 1) + m] = C64::new(1.0, 0.0);
        self.propagator.apply(&psi, t)
    }

    /// `(⟨c=1, k=M|ψ⟩, ⟨c=0, k=M-1|ψ⟩)`.
    fn single_excitation(&self, t: f64) -> Result<(C64, C64)> {
        let m = self.schedule.m;
        let psi = self.state(t)?;
        Ok((psi[(m + 1) + m], psi[m - 1]))
    }

    /// `⟨target|ψ(t)⟩` for the all-spin target; `None` for the outer target,
    /// whose fidelity involves a partial trace.
    pub fn overlap(&self, t: f64) -> Result<Option<C64>> {
        if self.schedule.target == WTarget::OuterSpins {
            return Ok(None);
        }
        let (a, b) = self.single_excitation(t)?;
        let mf = self.schedule.m as f64;
        Ok(Some((a + b * mf.sqrt()) / (mf + 1.0).sqrt()))
    }

    pub fn fidelity(&self, t: f64) -> Result<f64> {
        match self.schedule.target {
            WTarget::OuterSpins => {
                let m = self.schedule.m;
                let psi = self.state(t)?;
                Ok(psi[m - 1].norm_sqr() + psi[(m + 1) + m - 1].norm_sqr())
            }
            WTarget::AllSpins => Ok(self.overlap(t)?.unwrap().norm_sqr()),
        }
    }

    pub fn fidelity_with_center_phase(&self, t: f64) -> Result<PhaseOptimized> {
        if self.schedule.target == WTarget::OuterSpins {
            return Ok(PhaseOptimized {
                fidelity: self.fidelity(t)?,
                phase: 0.0,
            });
        }
        let (a, b) = self.single_excitation(t)?;
        let mf = self.schedule.m as f64;
        // e^{iφ} on the center-up component lines it up with the other one
        let phase = if b.norm() > 0.0 && a.norm() > 0.0 { a.arg() - b.arg() } else { 0.0 };
        let rotated = (a + b * C64::from_polar(1.0, phase) * mf.sqrt()) / (mf + 1.0).sqrt();
        Ok(PhaseOptimized {
            fidelity: rotated.norm_sqr(),
            phase,
        })
    }

    /// The fidelity this model is judged by: phase-optimized for the
    /// local-unitary model, plain otherwise.
    pub fn scored_fidelity(&self, t: f64) -> Result<f64> {
        match self.schedule.exactness {
            Exactness::Exact => self.fidelity(t),
            Exactness::UpToLocalUnitaryOnCenter => Ok(self.fidelity_with_center_phase(t)?.fidelity),
        }
    }
}

/// Fidelity with `|S(M+1, M)⟩` at `t = π/(2√(M+1))` when the `-2` field is
/// applied to every spin instead of the center only.
pub fn uniform_field_reading_fidelity(m: usize) -> Result<f64> {
    let sched = w_schedule(m, WModel::XxCenterField)?;
    let cfg = NetworkConfig::star(m).with_field(-2.0);
    WStateEvolution::with_network(sched.clone(), &cfg)?.fidelity(sched.measurement_time)
}
