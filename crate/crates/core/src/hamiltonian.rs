//! Hamiltonian builders for the bipartite and star networks.
//!
//! With collective spins `S = ½Σσ` the bipartite Hamiltonian is
//!
//! ```text
//! H = 2J (S1x S2x + S1y S2y + λ S1z S2z) + B (S1z + S2z) + b0 S1z
//!   = J (S1+ S2- + S1- S2+) + 2Jλ S1z S2z + B (S1z + S2z) + b0 S1z
//! ```
//!
//! and the star network is the `N = 1` case with the center as the single
//! supplementary spin. `b0` is an extra field on the supplementary register
//! (the center), zero by default.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::amalg::{lowering_element, raising_element, HalfInt};
use crate::error::{Error, Result};
use crate::statespace::{
    check_full_size, full_twice_sz, hybrid_twice_sz, CollectiveState, C64, HYBRID_MAX_SUPPLEMENTARY,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Bipartite,
    Star,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Bipartite => "bipartite",
            Topology::Star => "star",
        }
    }
}

/// Network geometry and Hamiltonian parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub n_supplementary: usize,
    pub m_target: usize,
    pub coupling: f64,
    pub anisotropy: f64,
    pub field_uniform: f64,
    pub field_center_extra: f64,
}

impl NetworkConfig {
    /// Heisenberg coupling `J = 1`, no fields.
    pub fn bipartite(n: usize, m: usize) -> Self {
        NetworkConfig {
            topology: Topology::Bipartite,
            n_supplementary: n,
            m_target: m,
            coupling: 1.0,
            anisotropy: 1.0,
            field_uniform: 0.0,
            field_center_extra: 0.0,
        }
    }

    /// Bipartite network with `N = M`.
    pub fn mirror(n: usize) -> Self {
        Self::bipartite(n, n)
    }

    /// Star network with `m` outer spins, XX coupling (`λ = 0`), no fields.
    pub fn star(m: usize) -> Self {
        NetworkConfig {
            topology: Topology::Star,
            n_supplementary: 1,
            m_target: m,
            coupling: 1.0,
            anisotropy: 0.0,
            field_uniform: 0.0,
            field_center_extra: 0.0,
        }
    }

    pub fn with_coupling(mut self, j: f64) -> Self {
        self.coupling = j;
        self
    }

    pub fn with_anisotropy(mut self, lambda: f64) -> Self {
        self.anisotropy = lambda;
        self
    }

    pub fn with_field(mut self, b: f64) -> Self {
        self.field_uniform = b;
        self
    }

    pub fn with_center_field(mut self, b0: f64) -> Self {
        self.field_center_extra = b0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_supplementary == 0 || self.m_target == 0 {
            return Err(Error::Config("network needs N >= 1 and M >= 1".into()));
        }
        if self.topology == Topology::Star && self.n_supplementary != 1 {
            return Err(Error::Config(format!(
                "star network has a single center spin, got N = {}",
                self.n_supplementary
            )));
        }
        for (name, v) in [
            ("coupling", self.coupling),
            ("anisotropy", self.anisotropy),
            ("field_uniform", self.field_uniform),
            ("field_center_extra", self.field_center_extra),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.topology == Topology::Bipartite && 2 * self.n_supplementary < self.m_target {
            out.push(format!(
                "N = {} < M/2 = {}: the supplementary register cannot reach every target index",
                self.n_supplementary,
                self.m_target as f64 / 2.0
            ));
        }
        out
    }

    /// True when `J = 1, λ = 1, b0 = 0`: the eigenvalue rule
    /// `E = S(S+1) - s1(s1+1) - s2(s2+1) + B Sz` applies.
    pub fn is_unit_heisenberg(&self) -> bool {
        self.coupling == 1.0 && self.anisotropy == 1.0 && self.field_center_extra == 0.0
    }

    /// Diagonal energy of `|s1, m1⟩|s2, m2⟩`.
    fn diagonal(&self, m1: f64, m2: f64) -> f64 {
        2.0 * self.coupling * self.anisotropy * m1 * m2
            + self.field_uniform * (m1 + m2)
            + self.field_center_extra * m1
    }
}

/// Sector label of a [`BlockMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorLabel {
    TotalSz(HalfInt),
    /// The whole `2(M+1)`-dimensional star space `|c⟩|M/2, m⟩`.
    StarDicke,
}

/// Ordered basis of a [`BlockMatrix`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    /// `m1` ascending from the lowest allowed value.
    Collective {
        n: usize,
        m: usize,
        s1: HalfInt,
        s2: HalfInt,
        total_sz: HalfInt,
    },
    /// Star basis; index `c * (M + 1) + k` with `c` the center bit and `k`
    /// the number of outer spins up. Same layout as a hybrid `N = 1` state.
    Star { m: usize },
    /// Subset of hybrid indices `z * (M + 1) + k`.
    HybridSector { n: usize, m: usize, indices: Vec<usize> },
    /// Subset of computational basis indices.
    FullSector { n: usize, m: usize, indices: Vec<usize> },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Collective { s1, s2, total_sz, .. } => CollectiveState::m1_range(*s1, *s2, *total_sz)
                .map(|(lo, hi)| ((hi - lo).twice() / 2 + 1) as usize)
                .unwrap_or(0),
            Basis::Star { m } => 2 * (m + 1),
            Basis::HybridSector { indices, .. } | Basis::FullSector { indices, .. } => indices.len(),
        }
    }
}

/// A dense Hamiltonian block over one conserved sector.
///
/// Every Hamiltonian here is real symmetric, so the entries are stored as
/// `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    pub sector: SectorLabel,
    pub matrix: DMatrix<f64>,
    pub basis: Basis,
}

impl BlockMatrix {
    /// Largest `|H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let h = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..h.nrows() {
            for j in 0..i {
                worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Tridiagonal block over `m1` at fixed `(s1, s2, total_sz)`.
pub fn collective_block(cfg: &NetworkConfig, s1: HalfInt, s2: HalfInt, total_sz: HalfInt) -> Result<BlockMatrix> {
    if cfg.topology != Topology::Bipartite {
        return Err(Error::Topology {
            expected: "bipartite",
            found: cfg.topology.name(),
        });
    }
    cfg.validate()?;
    let (lo, hi) = CollectiveState::m1_range(s1, s2, total_sz)
        .ok_or_else(|| Error::Domain(format!("empty sector s1 = {s1}, s2 = {s2}, Sz = {total_sz}")))?;
    let dim = ((hi - lo).twice() / 2 + 1) as usize;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let one = HalfInt::integer(1);
    for i in 0..dim {
        let m1 = lo + HalfInt::integer(i as i64);
        let m2 = total_sz - m1;
        h[(i, i)] = cfg.diagonal(m1.value(), m2.value());
        if i + 1 < dim {
            // <m1+1, m2-1| J S1+ S2- |m1, m2>
            let v = cfg.coupling * raising_element(s1, m1)? * lowering_element(s2, m2)?;
            debug_assert_eq!(lo + HalfInt::integer(i as i64 + 1), m1 + one);
            h[(i + 1, i)] = v;
            h[(i, i + 1)] = v;
        }
    }
    Ok(BlockMatrix {
        sector: SectorLabel::TotalSz(total_sz),
        matrix: h,
        basis: Basis::Collective {
            n: cfg.n_supplementary,
            m: cfg.m_target,
            s1,
            s2,
            total_sz,
        },
    })
}

/// The star Hamiltonian on `{|c⟩|M/2, m⟩}`, dimension `2(M + 1)`.
pub fn star_block(cfg: &NetworkConfig) -> Result<BlockMatrix> {
    if cfg.topology != Topology::Star {
        return Err(Error::Topology {
            expected: "star",
            found: cfg.topology.name(),
        });
    }
    cfg.validate()?;
    let m = cfg.m_target;
    let j = HalfInt::half(m);
    let dim = 2 * (m + 1);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..2usize {
        // center up (c = 0) carries s0z = +1/2
        let center = if c == 0 { 0.5 } else { -0.5 };
        for k in 0..=m {
            let mz = k as f64 - m as f64 / 2.0;
            h[(c * (m + 1) + k, c * (m + 1) + k)] = cfg.diagonal(center, mz);
        }
    }
    // J s0+ S- : |1>|m> -> |0>|m-1>
    for k in 1..=m {
        let mz = HalfInt::from_twice(2 * k as i64 - m as i64);
        let v = cfg.coupling * lowering_element(j, mz)?;
        let from = (m + 1) + k;
        let to = k - 1;
        h[(to, from)] = v;
        h[(from, to)] = v;
    }
    Ok(BlockMatrix {
        sector: SectorLabel::StarDicke,
        matrix: h,
        basis: Basis::Star { m },
    })
}

/// A Hamiltonian on a large basis, stored implicitly: columns are generated
/// on demand.
pub trait SpinOperator: Sync {
    fn dim(&self) -> usize;

    /// Twice the total `Sz` of basis vector `index`.
    fn twice_sz(&self, index: usize) -> i64;

    /// Appends the nonzero entries `(row, value)` of column `col`.
    fn column(&self, col: usize, out: &mut Vec<(usize, f64)>);

    /// `H x`.
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        let mut entries = Vec::new();
        for (col, &xc) in x.iter().enumerate() {
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            entries.clear();
            self.column(col, &mut entries);
            for &(row, v) in &entries {
                y[row] += xc * v;
            }
        }
        y
    }

    /// Indices of the total-`Sz` sector, ascending.
    fn sector_indices(&self, twice_sz: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.twice_sz(i) == twice_sz).collect()
    }

    /// Sectors present in the basis, ascending.
    fn sectors(&self) -> Vec<i64> {
        let mut s: Vec<i64> = (0..self.dim()).map(|i| self.twice_sz(i)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Dense restriction to `indices`.
    fn dense_block(&self, indices: &[usize]) -> DMatrix<f64> {
        let pos: std::collections::HashMap<usize, usize> =
            indices.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut h = DMatrix::<f64>::zeros(indices.len(), indices.len());
        let mut entries = Vec::new();
        for (pc, &col) in indices.iter().enumerate() {
            entries.clear();
            self.column(col, &mut entries);
            for &(row, v) in &entries {
                if let Some(&pr) = pos.get(&row) {
                    h[(pr, pc)] += v;
                }
            }
        }
        h
    }
}

/// Bipartite (or star) Hamiltonian on hybrid states: each supplementary
/// spin in the computational basis, the target register as one spin `M/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridHamiltonian {
    cfg: NetworkConfig,
    /// `lowering[k] = ⟨k-1|S2-|k⟩` for the target spin `M/2`.
    lowering: Vec<f64>,
}

pub fn hybrid_hamiltonian(cfg: &NetworkConfig) -> Result<HybridHamiltonian> {
    cfg.validate()?;
    if cfg.n_supplementary > HYBRID_MAX_SUPPLEMENTARY {
        return Err(Error::SizeLimit {
            what: "supplementary spins (hybrid)",
            value: cfg.n_supplementary,
            max: HYBRID_MAX_SUPPLEMENTARY,
        });
    }
    let m = cfg.m_target;
    let j = HalfInt::half(m);
    let lowering = (0..=m)
        .map(|k| lowering_element(j, HalfInt::from_twice(2 * k as i64 - m as i64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HybridHamiltonian { cfg: cfg.clone(), lowering })
}

impl HybridHamiltonian {
    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn sector_block(&self, twice_sz: i64) -> BlockMatrix {
        let indices = self.sector_indices(twice_sz);
        BlockMatrix {
            sector: SectorLabel::TotalSz(HalfInt::from_twice(twice_sz)),
            matrix: self.dense_block(&indices),
            basis: Basis::HybridSector {
                n: self.cfg.n_supplementary,
                m: self.cfg.m_target,
                indices,
            },
        }
    }
}

impl SpinOperator for HybridHamiltonian {
    fn dim(&self) -> usize {
        (1usize << self.cfg.n_supplementary) * (self.cfg.m_target + 1)
    }

    fn twice_sz(&self, index: usize) -> i64 {
        let m = self.cfg.m_target;
        hybrid_twice_sz(self.cfg.n_supplementary, m, index / (m + 1), index % (m + 1))
    }

    fn column(&self, col: usize, out: &mut Vec<(usize, f64)>) {
        let (n, m) = (self.cfg.n_supplementary, self.cfg.m_target);
        let (z, k) = (col / (m + 1), col % (m + 1));
        let j = self.cfg.coupling;
        let m2 = k as f64 - m as f64 / 2.0;
        let m1 = (n as f64 - 2.0 * z.count_ones() as f64) / 2.0;
        out.push((col, self.cfg.diagonal(m1, m2)));
        for i in 0..n {
            let bit = 1usize << i;
            if z & bit != 0 && k >= 1 {
                // σi+ S2- : spin i down -> up, target k -> k-1
                out.push(((z & !bit) * (m + 1) + k - 1, j * self.lowering[k]));
            } else if z & bit == 0 && k < m {
                // σi- S2+ : spin i up -> down, target k -> k+1
                out.push(((z | bit) * (m + 1) + k + 1, j * self.lowering[k + 1]));
            }
        }
    }
}

/// The literal pairwise Hamiltonian on all `N + M` spins:
///
/// ```text
/// H = (J/2) Σ_{i,j} (σx_i σx_j + σy_i σy_j + λ σz_i σz_j)
///     + (B/2) Σ_all σz + (b0/2) Σ_supp σz
/// ```
///
/// with `i` over supplementary spins and `j` over target spins. Used as an
/// independent oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct FullHamiltonian {
    cfg: NetworkConfig,
}

pub fn full_hamiltonian(cfg: &NetworkConfig) -> Result<FullHamiltonian> {
    cfg.validate()?;
    check_full_size(cfg.n_supplementary, cfg.m_target)?;
    Ok(FullHamiltonian { cfg: cfg.clone() })
}

impl FullHamiltonian {
    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn sector_block(&self, twice_sz: i64) -> BlockMatrix {
        let indices = self.sector_indices(twice_sz);
        BlockMatrix {
            sector: SectorLabel::TotalSz(HalfInt::from_twice(twice_sz)),
            matrix: self.dense_block(&indices),
            basis: Basis::FullSector {
                n: self.cfg.n_supplementary,
                m: self.cfg.m_target,
                indices,
            },
        }
    }

    /// Twice the total `Sz` operator applied to `x` (i.e. `Σσz x`).
    pub fn apply_sigma_z_total(&self, x: &[C64]) -> Vec<C64> {
        let spins = self.cfg.n_supplementary + self.cfg.m_target;
        x.iter()
            .enumerate()
            .map(|(b, &a)| a * full_twice_sz(spins, b) as f64)
            .collect()
    }
}

impl SpinOperator for FullHamiltonian {
    fn dim(&self) -> usize {
        1usize << (self.cfg.n_supplementary + self.cfg.m_target)
    }

    fn twice_sz(&self, index: usize) -> i64 {
        full_twice_sz(self.cfg.n_supplementary + self.cfg.m_target, index)
    }

    fn column(&self, col: usize, out: &mut Vec<(usize, f64)>) {
        let (n, m) = (self.cfg.n_supplementary, self.cfg.m_target);
        let c = &self.cfg;
        let spin_z = |b: usize| if col >> b & 1 == 0 { 1.0 } else { -1.0 };
        let mut diag = 0.0;
        for b in 0..n + m {
            diag += 0.5 * c.field_uniform * spin_z(b);
        }
        for b in 0..n {
            diag += 0.5 * c.field_center_extra * spin_z(b);
        }
        for i in 0..n {
            for jj in n..n + m {
                diag += 0.5 * c.coupling * c.anisotropy * spin_z(i) * spin_z(jj);
                if spin_z(i) != spin_z(jj) {
                    // (σxσx + σyσy)/2 swaps an antiparallel pair with unit weight
                    out.push((col ^ (1 << i) ^ (1 << jj), c.coupling));
                }
            }
        }
        out.push((col, diag));
    }
}
