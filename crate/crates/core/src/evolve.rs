//! Exact time evolution by eigendecomposition of Hamiltonian blocks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use once_cell::sync::OnceCell;

use crate::error::{Error, Result};
use crate::hamiltonian::{hybrid_hamiltonian, Basis, BlockMatrix, HybridHamiltonian, NetworkConfig, SpinOperator};
use crate::statespace::{CollectiveState, HybridState, StateVector, C64};

const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Eigenvalues closer than this are merged when building spectral traces.
const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Spectral decomposition `H = V diag(E) Vᵀ` of a real symmetric block.
#[derive(Clone, Debug)]
pub struct Propagator {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors; the first nonzero component of each is
    /// positive.
    pub eigenvectors: DMatrix<f64>,
    pub basis: Basis,
}

pub fn diagonalize(h: &BlockMatrix) -> Result<Propagator> {
    let n = h.matrix.nrows();
    if n != h.matrix.ncols() {
        return Err(Error::Mismatch("Hamiltonian block is not square".into()));
    }
    let scale = h.matrix.amax().max(1.0);
    if h.asymmetry() > SYMMETRY_TOLERANCE * scale {
        return Err(Error::Domain(format!("block is not symmetric (defect {})", h.asymmetry())));
    }
    if n == 0 {
        return Ok(Propagator {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
            basis: h.basis.clone(),
        });
    }
    let eig = SymmetricEigen::try_new(h.matrix.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge (dim {n})")))?;
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().find(|v| v.abs() > 1e-14).copied().unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(dst, &(col * sign));
    }
    Ok(Propagator {
        eigenvalues,
        eigenvectors,
        basis: h.basis.clone(),
    })
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `‖V diag(E) Vᵀ - H‖_max`.
    pub fn reconstruction_error(&self, h: &DMatrix<f64>) -> f64 {
        let v = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        (v * d * v.transpose() - h).amax()
    }

    /// `‖Vᵀ V - I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        (v.transpose() * v - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// Eigenbasis coefficients `Vᵀ ψ`.
    fn coefficients(&self, amplitudes: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|e| {
                let col = self.eigenvectors.column(e);
                (0..n).map(|r| amplitudes[r] * col[r]).sum()
            })
            .collect()
    }

    /// `exp(-iHt) ψ` for an amplitude vector in this propagator's basis.
    pub fn apply(&self, amplitudes: &[C64], t: f64) -> Result<Vec<C64>> {
        let n = self.dim();
        if amplitudes.len() != n {
            return Err(Error::Mismatch(format!(
                "propagator dimension {n}, vector length {}",
                amplitudes.len()
            )));
        }
        if t == 0.0 {
            return Ok(amplitudes.to_vec());
        }
        let c = self.coefficients(amplitudes);
        let phased: Vec<C64> = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ci, &e)| ci * C64::from_polar(1.0, -e * t))
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (e, pe) in phased.iter().enumerate() {
            let col = self.eigenvectors.column(e);
            for r in 0..n {
                out[r] += pe * col[r];
            }
        }
        Ok(out)
    }

    /// Precomputes `ψ_r(t) = Σ_e V[r,e] c_e exp(-i E_e t)` for the rows in
    /// `rows`, so that `Σ_r |ψ_r(t)|²` is cheap to evaluate at many times.
    pub fn spectral_trace(&self, amplitudes: &[C64], rows: &[usize]) -> Result<SpectralTrace> {
        if amplitudes.len() != self.dim() {
            return Err(Error::Mismatch("spectral trace: vector length".into()));
        }
        let c = self.coefficients(amplitudes);
        // group degenerate levels
        let mut levels: Vec<(f64, Vec<usize>)> = Vec::new();
        for (e, &val) in self.eigenvalues.iter().enumerate() {
            match levels.last_mut() {
                Some((v, members)) if (val - *v).abs() < DEGENERACY_TOLERANCE => members.push(e),
                _ => levels.push((val, vec![e])),
            }
        }
        let mut frequencies = Vec::new();
        let mut weights = vec![Vec::new(); rows.len()];
        for (val, members) in &levels {
            let w: Vec<C64> = rows
                .iter()
                .map(|&r| members.iter().map(|&e| c[e] * self.eigenvectors[(r, e)]).sum())
                .collect();
            if w.iter().all(|x: &C64| x.norm() < 1e-300) {
                continue;
            }
            frequencies.push(*val);
            for (slot, wi) in weights.iter_mut().zip(w) {
                slot.push(wi);
            }
        }
        Ok(SpectralTrace { frequencies, weights })
    }

    pub fn propagate(&self, state: &CollectiveState, t: f64) -> Result<CollectiveState> {
        match &self.basis {
            Basis::Collective { n, m, s1, total_sz, .. }
                if *n == state.n_supplementary()
                    && *m == state.m_target()
                    && *s1 == state.s1()
                    && *total_sz == state.total_sz() => {}
            other => {
                return Err(Error::Mismatch(format!(
                    "collective state (s1 = {}, Sz = {}) vs propagator basis {:?}",
                    state.s1(),
                    state.total_sz(),
                    other
                )))
            }
        }
        Ok(state.with_amplitudes(self.apply(state.amplitudes(), t)?))
    }
}

/// Time-dependent weight `Σ_r |Σ_l w[r][l] exp(-i E_l t)|²` of a set of
/// basis rows under free evolution.
#[derive(Clone, Debug)]
pub struct SpectralTrace {
    frequencies: Vec<f64>,
    weights: Vec<Vec<C64>>,
}

impl SpectralTrace {
    pub fn probability(&self, t: f64) -> f64 {
        let phases: Vec<C64> = self.frequencies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        self.weights
            .iter()
            .map(|w| w.iter().zip(&phases).map(|(a, p)| a * p).sum::<C64>().norm_sqr())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Convenience wrapper: `exp(-iHt)` applied to a collective state.
pub fn propagate(p: &Propagator, state: &CollectiveState, t: f64) -> Result<CollectiveState> {
    p.propagate(state, t)
}

/// One diagonalized total-`Sz` block of the hybrid Hamiltonian.
#[derive(Debug)]
pub struct SectorPropagator {
    pub indices: Vec<usize>,
    pub propagator: Propagator,
}

type SectorSlot = Arc<OnceCell<Arc<SectorPropagator>>>;

/// Hybrid-space evolution with per-sector eigendecompositions built once and
/// shared between threads.
#[derive(Debug)]
pub struct HybridPropagator {
    hamiltonian: HybridHamiltonian,
    sectors: Mutex<HashMap<i64, SectorSlot>>,
}

impl HybridPropagator {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        Ok(HybridPropagator {
            hamiltonian: hybrid_hamiltonian(cfg)?,
            sectors: Mutex::new(HashMap::new()),
        })
    }

    pub fn hamiltonian(&self) -> &HybridHamiltonian {
        &self.hamiltonian
    }

    /// Number of sectors diagonalized so far.
    pub fn cached_sectors(&self) -> usize {
        self.sectors
            .lock()
            .expect("sector cache poisoned")
            .values()
            .filter(|s| s.get().is_some())
            .count()
    }

    pub fn sector(&self, twice_sz: i64) -> Result<Arc<SectorPropagator>> {
        let slot = {
            let mut map = self.sectors.lock().expect("sector cache poisoned");
            map.entry(twice_sz).or_default().clone()
        };
        slot.get_or_try_init(|| {
            let block = self.hamiltonian.sector_block(twice_sz);
            let indices = match &block.basis {
                Basis::HybridSector { indices, .. } => indices.clone(),
                _ => unreachable!("hybrid sector block has a hybrid basis"),
            };
            Ok(Arc::new(SectorPropagator {
                indices,
                propagator: diagonalize(&block)?,
            }))
        })
        .cloned()
    }

    fn check_layout(&self, state: &HybridState) -> Result<()> {
        let cfg = self.hamiltonian.config();
        if state.n_supplementary() != cfg.n_supplementary || state.m_target() != cfg.m_target {
            return Err(Error::Mismatch(format!(
                "hybrid state (N = {}, M = {}) vs Hamiltonian (N = {}, M = {})",
                state.n_supplementary(),
                state.m_target(),
                cfg.n_supplementary,
                cfg.m_target
            )));
        }
        Ok(())
    }

    /// Sectors in which `state` has weight, ascending.
    fn occupied_sectors(&self, state: &HybridState) -> Vec<i64> {
        let mut s: Vec<i64> = state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, _)| self.hamiltonian.twice_sz(i))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn propagate(&self, state: &HybridState, t: f64) -> Result<HybridState> {
        self.check_layout(state)?;
        let amps = state.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for sz in self.occupied_sectors(state) {
            let sector = self.sector(sz)?;
            let sub: Vec<C64> = sector.indices.iter().map(|&i| amps[i]).collect();
            let evolved = sector.propagator.apply(&sub, t)?;
            for (&i, a) in sector.indices.iter().zip(evolved) {
                out[i] = a;
            }
        }
        Ok(state.with_amplitudes(out))
    }

    /// Spectral trace of the weight on hybrid indices selected by `keep`.
    pub fn spectral_trace(&self, state: &HybridState, keep: impl Fn(usize) -> bool) -> Result<Vec<SpectralTrace>> {
        self.check_layout(state)?;
        let amps = state.amplitudes();
        let mut traces = Vec::new();
        for sz in self.occupied_sectors(state) {
            let sector = self.sector(sz)?;
            let sub: Vec<C64> = sector.indices.iter().map(|&i| amps[i]).collect();
            let rows: Vec<usize> = sector
                .indices
                .iter()
                .enumerate()
                .filter(|(_, &i)| keep(i))
                .map(|(p, _)| p)
                .collect();
            if !rows.is_empty() {
                traces.push(sector.propagator.spectral_trace(&sub, &rows)?);
            }
        }
        Ok(traces)
    }
}

/// `exp(-iHt)` on a hybrid state.
pub fn propagate_hybrid(op: &HybridPropagator, state: &HybridState, t: f64) -> Result<HybridState> {
    op.propagate(state, t)
}

/// Evolution on an implicit operator by a truncated Taylor series in short
/// steps. Independent of the eigendecomposition path and used for the
/// full-space oracle.
pub fn propagate_taylor<O: SpinOperator + ?Sized>(op: &O, amplitudes: &[C64], t: f64) -> Result<Vec<C64>> {
    if amplitudes.len() != op.dim() {
        return Err(Error::Mismatch("taylor propagation: vector length".into()));
    }
    if t == 0.0 {
        return Ok(amplitudes.to_vec());
    }
    // column-sum norm bound, ‖H‖ ≤ max_j Σ_i |H_ij|
    let mut bound = 0.0f64;
    let mut entries = Vec::new();
    for col in 0..op.dim() {
        entries.clear();
        op.column(col, &mut entries);
        bound = bound.max(entries.iter().map(|(_, v)| v.abs()).sum());
    }
    let steps = ((bound * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut psi = amplitudes.to_vec();
    for _ in 0..steps {
        let mut term = psi.clone();
        let mut acc = psi.clone();
        for order in 1..60 {
            let h_term = op.apply(&term);
            let factor = C64::new(0.0, -dt / order as f64);
            term = h_term.into_iter().map(|x| x * factor).collect();
            let size: f64 = term.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += x;
            }
            if size < 1e-18 {
                break;
            }
        }
        psi = acc;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalg::HalfInt;
    use crate::hamiltonian::{collective_block, full_hamiltonian, star_block, SectorLabel};
    use crate::statespace::{dicke_expand, initial_state, overlap, ToFull};
    use std::f64::consts::PI;

    fn block(m: DMatrix<f64>) -> BlockMatrix {
        let n = m.nrows();
        BlockMatrix {
            sector: SectorLabel::TotalSz(HalfInt::ZERO),
            matrix: m,
            basis: Basis::HybridSector {
                n: 1,
                m: 1,
                indices: (0..n).collect(),
            },
        }
    }

    #[test]
    fn diagonal_input() {
        let p = diagonalize(&block(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0])))).unwrap();
        assert_eq!(p.eigenvalues, vec![-1.0, 2.0, 3.0]);
        for e in 0..3 {
            assert_eq!(p.eigenvectors.column(e).iter().filter(|v| v.abs() > 0.0).count(), 1);
            assert!(p.eigenvectors.column(e).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn two_by_two_flip() {
        let p = diagonalize(&block(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]))).unwrap();
        assert!((p.eigenvalues[0] + 2.0).abs() < 1e-15);
        assert!((p.eigenvalues[1] - 2.0).abs() < 1e-15);
        for e in 0..2 {
            assert!(p.eigenvectors[(0, e)] > 0.0);
        }
    }

    #[test]
    fn rejects_asymmetric_blocks() {
        let r = diagonalize(&block(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn mirror_spectrum_and_reconstruction() {
        for n in 1..=10usize {
            let s = HalfInt::half(n);
            let b = collective_block(&NetworkConfig::mirror(n), s, s, HalfInt::ZERO).unwrap();
            let p = diagonalize(&b).unwrap();
            let base = n as f64 / 2.0 * (n as f64 + 2.0);
            for (sval, e) in p.eigenvalues.iter().enumerate() {
                let s = sval as f64;
                assert!((e - (s * (s + 1.0) - base)).abs() < 1e-10, "N = {n}");
            }
            assert!(p.reconstruction_error(&b.matrix) <= 1e-11);
            assert!(p.orthonormality_error() <= 1e-12);
        }
    }

    #[test]
    fn mirror_two_closed_trajectory() {
        let s = HalfInt::integer(1);
        let p = diagonalize(&collective_block(&NetworkConfig::mirror(2), s, s, HalfInt::ZERO).unwrap()).unwrap();
        let init = initial_state(2, 2).unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.077;
            let st = p.propagate(&init, t).unwrap();
            let p0 = st.amplitude_at(HalfInt::ZERO).norm_sqr();
            assert!((p0 - 2.0 / 9.0 * (1.0 - (6.0 * t).cos())).abs() < 1e-13);
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.propagate(&init, 0.0).unwrap(), init);
    }

    #[test]
    fn star_rabi_oscillation() {
        for m in 2..=7usize {
            let p = diagonalize(&star_block(&NetworkConfig::star(m)).unwrap()).unwrap();
            let mut psi = vec![C64::new(0.0, 0.0); 2 * (m + 1)];
            psi[(m + 1) + m] = C64::new(1.0, 0.0);
            for i in 0..16 {
                let t = 0.13 * i as f64;
                let out = p.apply(&psi, t).unwrap();
                let w = (m as f64).sqrt() * t;
                // exp(-iHt) with a positive flip-flop element gives -i sin
                assert!((out[(m + 1) + m] - C64::new(w.cos(), 0.0)).norm() < 1e-12);
                assert!((out[m - 1] - C64::new(0.0, -w.sin())).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn composition_and_reversal() {
        let cfg = NetworkConfig::bipartite(3, 2).with_anisotropy(0.4).with_field(0.3);
        let hp = HybridPropagator::new(&cfg).unwrap();
        let init = dicke_expand(&initial_state(3, 2).unwrap()).unwrap();
        let a = hp.propagate(&hp.propagate(&init, 0.7).unwrap(), 1.1).unwrap();
        let b = hp.propagate(&init, 1.8).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-10);
        }
        let back = hp.propagate(&hp.propagate(&init, 2.3).unwrap(), -2.3).unwrap();
        assert!((overlap(&back, &init).unwrap().norm() - 1.0).abs() < 1e-11);
        assert_eq!(hp.cached_sectors(), 1);
    }

    #[test]
    fn hybrid_matches_collective_round_one() {
        let cfg = NetworkConfig::bipartite(3, 4).with_anisotropy(0.7).with_field(0.2).with_center_field(-0.3);
        let init = initial_state(3, 4).unwrap();
        let p = diagonalize(&collective_block(&cfg, init.s1(), init.s2(), init.total_sz()).unwrap()).unwrap();
        let hp = HybridPropagator::new(&cfg).unwrap();
        let h0 = dicke_expand(&init).unwrap();
        let energy = |s: &HybridState| -> f64 {
            let hv = hp.hamiltonian().apply(s.amplitudes());
            s.amplitudes().iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
        };
        let e0 = energy(&h0);
        for i in 0..12 {
            let t = 0.31 * i as f64;
            let via_collective = dicke_expand(&p.propagate(&init, t).unwrap()).unwrap();
            let via_hybrid = hp.propagate(&h0, t).unwrap();
            for (x, y) in via_collective.amplitudes().iter().zip(via_hybrid.amplitudes()) {
                assert!((x - y).norm() < 1e-11);
            }
            assert!((via_hybrid.norm_sqr() - 1.0).abs() < 1e-11);
            assert!((energy(&via_hybrid) - e0).abs() < 1e-11);
        }
    }

    #[test]
    fn taylor_oracle_agrees_with_eigen_route() {
        let cfg = NetworkConfig::bipartite(2, 3).with_anisotropy(-0.5).with_field(0.4);
        let init = initial_state(2, 3).unwrap();
        let full = full_hamiltonian(&cfg).unwrap();
        let p = diagonalize(&collective_block(&cfg, init.s1(), init.s2(), init.total_sz()).unwrap()).unwrap();
        let f0 = init.to_full().unwrap();
        for t in [0.0, 0.4, 1.7, 5.0] {
            let a = propagate_taylor(&full, f0.amplitudes(), t).unwrap();
            let b = p.propagate(&init, t).unwrap().to_full().unwrap();
            for (x, y) in a.iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-11, "t = {t}");
            }
        }
    }

    #[test]
    fn spectral_trace_matches_propagation() {
        let s = HalfInt::integer(2);
        let p = diagonalize(&collective_block(&NetworkConfig::mirror(4), s, s, HalfInt::ZERO).unwrap()).unwrap();
        let init = initial_state(4, 4).unwrap();
        let trace = p.spectral_trace(init.amplitudes(), &[2]).unwrap();
        for i in 0..20 {
            let t = 0.21 * i as f64;
            let direct = p.propagate(&init, t).unwrap().amplitude_at(HalfInt::ZERO).norm_sqr();
            assert!((trace.probability(t) - direct).abs() < 1e-13);
        }
        assert!((trace.probability(PI / 2.0) - 16.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let s = HalfInt::integer(1);
        let p = diagonalize(&collective_block(&NetworkConfig::mirror(2), s, s, HalfInt::ZERO).unwrap()).unwrap();
        let other = initial_state(2, 4).unwrap();
        assert!(matches!(p.propagate(&other, 1.0), Err(Error::Mismatch(_))));
        let hp = HybridPropagator::new(&NetworkConfig::mirror(2)).unwrap();
        let h = HybridState::basis(2, 3, 0, 0).unwrap();
        assert!(matches!(hp.propagate(&h, 1.0), Err(Error::Mismatch(_))));
    }

    #[test]
    fn cache_builds_each_sector_once_across_threads() {
        let hp = Arc::new(HybridPropagator::new(&NetworkConfig::mirror(3)).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let hp = hp.clone();
                std::thread::spawn(move || Arc::as_ptr(&hp.sector(-1).unwrap()) as usize)
            })
            .collect();
        let ptrs: Vec<usize> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(ptrs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(hp.cached_sectors(), 1);
    }
}
