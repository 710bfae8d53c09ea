//! Run configuration shared by every CLI command.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::WModel;
use crate::error::{Error, Result};
use crate::hamiltonian::{NetworkConfig, Topology};
use crate::rus::{Execution, Policy, Timetable, MIN_GRID};
use crate::statespace::{FULL_MAX_SPINS, HYBRID_MAX_SUPPLEMENTARY};

pub const FIGURE2_MAX_N: usize = 128;
pub const WSTATE_MAX_M: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Greedy,
    Fixed,
}

/// Output file names; relative names are resolved against `output_dir`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub output_dir: PathBuf,
    pub curve: PathBuf,
    pub table: PathBuf,
    pub trajectories: PathBuf,
    pub summary: PathBuf,
    pub wstate_curve: PathBuf,
    pub wstate_report: PathBuf,
    pub validation_report: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            output_dir: PathBuf::from("."),
            curve: "pt.csv".into(),
            table: "figure2.csv".into(),
            trajectories: "trajectories.jsonl".into(),
            summary: "summary.json".into(),
            wstate_curve: "wstate.csv".into(),
            wstate_report: "wstate_report.json".into(),
            validation_report: "validation.json".into(),
        }
    }
}

impl OutputPaths {
    pub fn resolve(&self, file: &Path) -> PathBuf {
        self.output_dir.join(file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub topology: Topology,
    pub n_supplementary: usize,
    pub m_target: usize,
    pub coupling: f64,
    pub anisotropy: f64,
    pub field_uniform: f64,
    pub field_center_extra: f64,

    /// Defaults to `floor(M / 2)`.
    pub target_k: Option<usize>,
    pub time_window: [f64; 2],
    /// Greedy optimizer grid.
    pub grid_points: usize,
    /// Samples in written curves.
    pub curve_points: usize,
    pub max_rounds: usize,
    pub trajectories: u64,
    pub master_seed: u64,
    pub policy: PolicyKind,
    /// Measurement times for the fixed policy, round 1 first.
    pub timetable: Vec<f64>,
    pub parallel: bool,

    pub n_max: usize,
    pub w_model: WModel,

    pub outputs: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            topology: Topology::Bipartite,
            n_supplementary: 2,
            m_target: 2,
            coupling: 1.0,
            anisotropy: 1.0,
            field_uniform: 0.0,
            field_center_extra: 0.0,
            target_k: None,
            time_window: [0.0, PI],
            grid_points: 1024,
            curve_points: 1001,
            max_rounds: 50,
            trajectories: 1000,
            master_seed: 0,
            policy: PolicyKind::Greedy,
            timetable: Vec::new(),
            parallel: true,
            n_max: 40,
            w_model: WModel::XxOuter,
            outputs: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical JSON form: every field present, in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn network(&self) -> NetworkConfig {
        NetworkConfig {
            topology: self.topology,
            n_supplementary: self.n_supplementary,
            m_target: self.m_target,
            coupling: self.coupling,
            anisotropy: self.anisotropy,
            field_uniform: self.field_uniform,
            field_center_extra: self.field_center_extra,
        }
    }

    pub fn target_k(&self) -> usize {
        self.target_k.unwrap_or(self.m_target / 2)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.time_window[0], self.time_window[1])
    }

    pub fn policy(&self) -> Result<Policy> {
        match self.policy {
            PolicyKind::Greedy => Ok(Policy::Greedy {
                window: self.window(),
                grid: self.grid_points,
            }),
            PolicyKind::Fixed => Ok(Policy::FixedTimetable(
                Timetable::from_times(&self.timetable).map_err(|e| Error::Config(e.to_string()))?,
            )),
        }
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.network().validate().map_err(cfg_err)?;
        let [lo, hi] = self.time_window;
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
            return Err(Error::Config(format!("time_window [{lo}, {hi}] is empty or invalid")));
        }
        if self.grid_points < MIN_GRID {
            return Err(Error::Config(format!("grid_points must be at least {MIN_GRID}")));
        }
        if self.curve_points < 2 {
            return Err(Error::Config("curve_points must be at least 2".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        if self.trajectories == 0 {
            return Err(Error::Config("trajectories must be at least 1".into()));
        }
        if let Some(k) = self.target_k {
            if k > self.m_target {
                return Err(Error::Config(format!("target_k = {k} exceeds M = {}", self.m_target)));
            }
        }
        if self.policy == PolicyKind::Fixed {
            self.policy()?;
        }
        Ok(())
    }

    pub fn validate_pt(&self) -> Result<()> {
        let net = self.network();
        if net.topology != Topology::Bipartite
            || net.n_supplementary != net.m_target
            || !net.n_supplementary.is_multiple_of(2)
            || !net.is_unit_heisenberg()
            || net.field_uniform != 0.0
        {
            return Err(Error::Config(
                "the P(t) curve needs a mirror network with even N, J = 1, λ = 1 and no fields".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_figure2(&self) -> Result<()> {
        if self.n_max < 2 || !self.n_max.is_multiple_of(2) || self.n_max > FIGURE2_MAX_N {
            return Err(Error::Config(format!(
                "n_max must be even and in 2..={FIGURE2_MAX_N}, got {}",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn validate_rus(&self) -> Result<()> {
        let n = match self.topology {
            Topology::Bipartite => self.n_supplementary,
            Topology::Star => 1,
        };
        if n > HYBRID_MAX_SUPPLEMENTARY {
            return Err(Error::Config(format!(
                "RUS needs N <= {HYBRID_MAX_SUPPLEMENTARY}, got {n}"
            )));
        }
        Ok(())
    }

    pub fn validate_wstate(&self) -> Result<()> {
        if !(2..=WSTATE_MAX_M).contains(&self.m_target) {
            return Err(Error::Config(format!("W-state runs need 2 <= M <= {WSTATE_MAX_M}, got {}", self.m_target)));
        }
        Ok(())
    }

    pub fn validate_validation(&self) -> Result<()> {
        if self.topology != Topology::Bipartite {
            return Err(Error::Config("validation runs on bipartite networks".into()));
        }
        if self.n_supplementary + self.m_target > FULL_MAX_SPINS {
            return Err(Error::Config(format!(
                "validation needs N + M <= {FULL_MAX_SPINS}, got {}",
                self.n_supplementary + self.m_target
            )));
        }
        if self.n_supplementary > HYBRID_MAX_SUPPLEMENTARY {
            return Err(Error::Config(format!("validation needs N <= {HYBRID_MAX_SUPPLEMENTARY}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.coupling, 1.0);
        assert_eq!(c.anisotropy, 1.0);
        assert_eq!(c.field_uniform, 0.0);
        assert_eq!(c.field_center_extra, 0.0);
        assert_eq!(c.target_k(), 1);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c = RunConfig::from_json(r#"{"n_supplementary": 4, "m_target": 4, "outputs": {"output_dir": "out"}}"#).unwrap();
        assert_eq!(c.n_supplementary, 4);
        assert_eq!(c.outputs.output_dir, PathBuf::from("out"));
        assert_eq!(c.outputs.curve, PathBuf::from("pt.csv"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"n": 3}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"outputs": {"x": "y"}}"#), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            r#"{"trajectories": 0}"#,
            r#"{"max_rounds": 0}"#,
            r#"{"time_window": [1.0, 0.5]}"#,
            r#"{"grid_points": 10}"#,
            r#"{"target_k": 3}"#,
            r#"{"policy": "fixed"}"#,
            r#"{"policy": "fixed", "timetable": [0.3, -1.0]}"#,
            r#"{"topology": "star", "n_supplementary": 2}"#,
            r#"{"w_model": "ghz"}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn command_specific_checks() {
        let mut c = RunConfig::default();
        c.validate_pt().unwrap();
        c.n_supplementary = 3;
        c.m_target = 3;
        assert!(c.validate_pt().is_err());
        c.n_max = 130;
        assert!(c.validate_figure2().is_err());
        c.n_supplementary = 9;
        c.m_target = 8;
        assert!(c.validate_validation().is_err());
        c.m_target = 1;
        assert!(c.validate_wstate().is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            1usize..6,
            1usize..6,
            -3.0f64..3.0,
            any::<u64>(),
            prop::option::of(0usize..2),
            prop::sample::select(vec![PolicyKind::Greedy, PolicyKind::Fixed]),
            prop::collection::vec(0.01f64..3.0, 1..4),
            any::<bool>(),
        )
            .prop_map(|(n, m, b, seed, k, policy, times, parallel)| RunConfig {
                n_supplementary: n,
                m_target: m,
                field_uniform: b,
                master_seed: seed,
                target_k: k,
                policy,
                timetable: times,
                parallel,
                ..RunConfig::default()
            })
    }

    proptest! {
        #[test]
        fn config_round_trip(c in arb_config()) {
            let text = c.to_json();
            let back = RunConfig::from_json(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
