//! State vectors in the three representations used by the simulator.
//!
//! * [`CollectiveState`]: amplitudes over `|s1, m1⟩|s2, m2⟩` at fixed total
//!   `Sz`, one per allowed `m1`.
//! * [`HybridState`]: supplementary spins in the computational basis, target
//!   spins in the Dicke basis. Index `z * (M + 1) + k`.
//! * [`FullState`]: all `N + M` spins in the computational basis.
//!
//! Bit conventions: bit value 0 is spin up (`σz = +1`), 1 is spin down. The
//! supplementary register occupies bits `0..N`, the target register bits
//! `N..N+M`. The target Dicke index `k` counts target spins that are up, so
//! `|S(M, k)⟩ = |M/2, k - M/2⟩`.

use num_complex::Complex64;

use crate::amalg::HalfInt;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest supplementary register handled by the hybrid representation.
pub const HYBRID_MAX_SUPPLEMENTARY: usize = 12;
/// Largest total spin count for the brute-force computational basis.
pub const FULL_MAX_SPINS: usize = 16;

/// Amplitudes with squared norm this far from 1 are rejected on construction.
const NORM_TOLERANCE: f64 = 1e-10;

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub(crate) fn norm_sqr(amplitudes: &[C64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

fn check_norm(amplitudes: &[C64]) -> Result<()> {
    let n = norm_sqr(amplitudes);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Domain(format!("state is not normalized: |ψ|² = {n}")));
    }
    Ok(())
}

/// Which representation a state vector lives in, with its dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Collective {
        n: usize,
        m: usize,
        s1: HalfInt,
        total_sz: HalfInt,
    },
    Hybrid {
        n: usize,
        m: usize,
    },
    Full {
        n: usize,
        m: usize,
    },
}

/// Common read access to the amplitude vector of a state.
pub trait StateVector {
    fn amplitudes(&self) -> &[C64];
    fn layout(&self) -> Layout;

    /// The single total-`Sz` sector the state occupies, or `None` when the
    /// support spans several sectors.
    fn magnetization_sector(&self) -> Option<HalfInt>;

    fn norm_sqr(&self) -> f64 {
        norm_sqr(self.amplitudes())
    }
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn overlap<S: StateVector>(a: &S, b: &S) -> Result<C64> {
    if a.layout() != b.layout() {
        return Err(Error::Mismatch(format!(
            "overlap between {:?} and {:?}",
            a.layout(),
            b.layout()
        )));
    }
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Twice the total `Sz` of hybrid basis vector `(z, k)`.
#[inline]
pub fn hybrid_twice_sz(n: usize, m: usize, z: usize, k: usize) -> i64 {
    n as i64 - 2 * z.count_ones() as i64 + 2 * k as i64 - m as i64
}

/// Twice the total `Sz` of a computational basis state of `n_spins` spins.
#[inline]
pub fn full_twice_sz(n_spins: usize, bits: usize) -> i64 {
    n_spins as i64 - 2 * bits.count_ones() as i64
}

/// Number of up spins in supplementary pattern `z`.
#[inline]
pub fn up_count(n: usize, z: usize) -> usize {
    n - z.count_ones() as usize
}

/// Renders a computational pattern as a bit string, lowest bit first
/// (supplementary register first).
pub fn pattern_string(bits: usize, len: usize) -> String {
    (0..len)
        .map(|i| if bits >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveState {
    n: usize,
    m: usize,
    s1: HalfInt,
    s2: HalfInt,
    total_sz: HalfInt,
    amplitudes: Vec<C64>,
}

impl CollectiveState {
    /// Allowed `m1` range for `(s1, s2, total_sz)`, inclusive, or `None` if
    /// the sector is empty.
    pub fn m1_range(s1: HalfInt, s2: HalfInt, total_sz: HalfInt) -> Option<(HalfInt, HalfInt)> {
        let lo = (-s1).max(total_sz - s2);
        let hi = s1.min(total_sz + s2);
        (lo <= hi && lo.same_parity(s1) && (total_sz - lo).same_parity(s2)).then_some((lo, hi))
    }

    /// Builds a state from amplitudes listed for ascending `m1`.
    pub fn new(
        n: usize,
        m: usize,
        s1: HalfInt,
        total_sz: HalfInt,
        amplitudes: Vec<C64>,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain("collective state needs N >= 1 and M >= 1".into()));
        }
        if s1 > HalfInt::half(n) || s1.twice() < 0 || !s1.same_parity(HalfInt::half(n)) {
            return Err(Error::Domain(format!("s1 = {s1} is not a spin of {n} spin-1/2 particles")));
        }
        let s2 = HalfInt::half(m);
        let (lo, hi) = Self::m1_range(s1, s2, total_sz)
            .ok_or_else(|| Error::Domain(format!("empty sector s1 = {s1}, s2 = {s2}, Sz = {total_sz}")))?;
        let dim = ((hi - lo).twice() / 2 + 1) as usize;
        if amplitudes.len() != dim {
            return Err(Error::Mismatch(format!(
                "collective sector has dimension {dim}, got {} amplitudes",
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(CollectiveState {
            n,
            m,
            s1,
            s2,
            total_sz,
            amplitudes,
        })
    }

    /// Same layout as `self` with new amplitudes; no normalization check.
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        CollectiveState {
            amplitudes,
            ..self.clone()
        }
    }

    pub fn n_supplementary(&self) -> usize {
        self.n
    }

    pub fn m_target(&self) -> usize {
        self.m
    }

    pub fn s1(&self) -> HalfInt {
        self.s1
    }

    pub fn s2(&self) -> HalfInt {
        self.s2
    }

    pub fn total_sz(&self) -> HalfInt {
        self.total_sz
    }

    pub fn m1_min(&self) -> HalfInt {
        Self::m1_range(self.s1, self.s2, self.total_sz).unwrap().0
    }

    /// The `m1` label of each amplitude, ascending.
    pub fn m1_values(&self) -> impl Iterator<Item = HalfInt> + '_ {
        let lo = self.m1_min();
        (0..self.amplitudes.len()).map(move |i| lo + HalfInt::integer(i as i64))
    }

    pub fn amplitude_at(&self, m1: HalfInt) -> C64 {
        let offset = (m1 - self.m1_min()).twice();
        if offset < 0 || offset % 2 != 0 {
            return C64::new(0.0, 0.0);
        }
        self.amplitudes
            .get((offset / 2) as usize)
            .copied()
            .unwrap_or_default()
    }

    /// Target Dicke index paired with `m1` in this sector.
    pub fn target_k_for(&self, m1: HalfInt) -> usize {
        let m2 = self.total_sz - m1;
        ((m2 + self.s2).twice() / 2) as usize
    }
}

impl StateVector for CollectiveState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    fn layout(&self) -> Layout {
        Layout::Collective {
            n: self.n,
            m: self.m,
            s1: self.s1,
            total_sz: self.total_sz,
        }
    }

    fn magnetization_sector(&self) -> Option<HalfInt> {
        Some(self.total_sz)
    }
}

/// The product state with every supplementary spin down and every target
/// spin up, `|N/2, -N/2⟩|M/2, M/2⟩`.
pub fn initial_state(n: usize, m: usize) -> Result<CollectiveState> {
    let s1 = HalfInt::half(n);
    let total_sz = HalfInt::half(m) - HalfInt::half(n);
    let (lo, hi) = CollectiveState::m1_range(s1, HalfInt::half(m), total_sz)
        .ok_or_else(|| Error::Domain(format!("no sector for N = {n}, M = {m}")))?;
    let dim = ((hi - lo).twice() / 2 + 1) as usize;
    let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
    // m1 = -N/2 is the lowest allowed value in this sector
    debug_assert_eq!(lo, -s1);
    amplitudes[0] = C64::new(1.0, 0.0);
    CollectiveState::new(n, m, s1, total_sz, amplitudes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    n: usize,
    m: usize,
    amplitudes: Vec<C64>,
}

impl HybridState {
    pub fn dimension(n: usize, m: usize) -> usize {
        (1usize << n) * (m + 1)
    }

    pub fn new(n: usize, m: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain("hybrid state needs N >= 1 and M >= 1".into()));
        }
        if n > HYBRID_MAX_SUPPLEMENTARY {
            return Err(Error::SizeLimit {
                what: "supplementary spins (hybrid)",
                value: n,
                max: HYBRID_MAX_SUPPLEMENTARY,
            });
        }
        let dim = Self::dimension(n, m);
        if amplitudes.len() != dim {
            return Err(Error::Mismatch(format!(
                "hybrid space has dimension {dim}, got {} amplitudes",
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(HybridState { n, m, amplitudes })
    }

    /// The basis vector `|z⟩|S(M, k)⟩`.
    pub fn basis(n: usize, m: usize, z: usize, k: usize) -> Result<Self> {
        if z >= 1 << n || k > m {
            return Err(Error::Domain(format!("basis label (z = {z}, k = {k}) out of range")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); Self::dimension(n, m)];
        amplitudes[z * (m + 1) + k] = C64::new(1.0, 0.0);
        Self::new(n, m, amplitudes)
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        HybridState {
            n: self.n,
            m: self.m,
            amplitudes,
        }
    }

    pub fn n_supplementary(&self) -> usize {
        self.n
    }

    pub fn m_target(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn index(&self, z: usize, k: usize) -> usize {
        z * (self.m + 1) + k
    }

    #[inline]
    pub fn label(&self, index: usize) -> (usize, usize) {
        (index / (self.m + 1), index % (self.m + 1))
    }

    pub fn amplitude(&self, z: usize, k: usize) -> C64 {
        self.amplitudes[self.index(z, k)]
    }

    /// Target Dicke indices carrying nonzero weight, ascending.
    pub fn target_support(&self) -> Vec<usize> {
        let mut weight = vec![0.0; self.m + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            weight[i % (self.m + 1)] += a.norm_sqr();
        }
        weight
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, _)| k)
            .collect()
    }
}

impl StateVector for HybridState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    fn layout(&self) -> Layout {
        Layout::Hybrid {
            n: self.n,
            m: self.m,
        }
    }

    fn magnetization_sector(&self) -> Option<HalfInt> {
        let mut sector = None;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (z, k) = self.label(i);
            let sz = hybrid_twice_sz(self.n, self.m, z, k);
            match sector {
                None => sector = Some(sz),
                Some(s) if s != sz => return None,
                _ => {}
            }
        }
        sector.map(HalfInt::from_twice)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    n: usize,
    m: usize,
    amplitudes: Vec<C64>,
}

impl FullState {
    pub fn new(n: usize, m: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_full_size(n, m)?;
        if amplitudes.len() != 1 << (n + m) {
            return Err(Error::Mismatch(format!(
                "full space has dimension {}, got {} amplitudes",
                1usize << (n + m),
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(FullState { n, m, amplitudes })
    }

    pub fn n_supplementary(&self) -> usize {
        self.n
    }

    pub fn m_target(&self) -> usize {
        self.m
    }

    pub fn n_spins(&self) -> usize {
        self.n + self.m
    }
}

impl StateVector for FullState {
    fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    fn layout(&self) -> Layout {
        Layout::Full {
            n: self.n,
            m: self.m,
        }
    }

    fn magnetization_sector(&self) -> Option<HalfInt> {
        let spins = self.n + self.m;
        let mut sector = None;
        for (bits, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sz = full_twice_sz(spins, bits);
            match sector {
                None => sector = Some(sz),
                Some(s) if s != sz => return None,
                _ => {}
            }
        }
        sector.map(HalfInt::from_twice)
    }
}

pub(crate) fn check_full_size(n: usize, m: usize) -> Result<()> {
    if n + m > FULL_MAX_SPINS {
        return Err(Error::SizeLimit {
            what: "total spins (full basis)",
            value: n + m,
            max: FULL_MAX_SPINS,
        });
    }
    Ok(())
}

/// Expands the symmetric supplementary register into computational patterns:
/// `|N/2, m1⟩` becomes the uniform superposition of the `C(N, w)` patterns
/// with `w = m1 + N/2` up spins.
pub fn dicke_expand(state: &CollectiveState) -> Result<HybridState> {
    let (n, m) = (state.n, state.m);
    if state.s1 != HalfInt::half(n) {
        return Err(Error::Domain(format!(
            "dicke_expand needs the symmetric sector s1 = N/2 = {}, got {}",
            HalfInt::half(n),
            state.s1
        )));
    }
    if n > HYBRID_MAX_SUPPLEMENTARY {
        return Err(Error::SizeLimit {
            what: "supplementary spins (hybrid)",
            value: n,
            max: HYBRID_MAX_SUPPLEMENTARY,
        });
    }
    let mut amplitudes = vec![C64::new(0.0, 0.0); HybridState::dimension(n, m)];
    let half_n = HalfInt::half(n);
    for (m1, &c) in state.m1_values().zip(&state.amplitudes) {
        let w = ((m1 + half_n).twice() / 2) as usize;
        let k = state.target_k_for(m1);
        let weight = c / binomial(n, w).sqrt();
        for z in 0..1usize << n {
            if up_count(n, z) == w {
                amplitudes[z * (m + 1) + k] = weight;
            }
        }
    }
    HybridState::new(n, m, amplitudes)
}

/// Either representation convertible to the full computational basis.
pub trait ToFull {
    fn to_full(&self) -> Result<FullState>;
}

impl ToFull for HybridState {
    fn to_full(&self) -> Result<FullState> {
        let (n, m) = (self.n, self.m);
        check_full_size(n, m)?;
        let mut out = vec![C64::new(0.0, 0.0); 1 << (n + m)];
        let norms: Vec<f64> = (0..=m).map(|k| binomial(m, m - k).sqrt()).collect();
        for t in 0..1usize << m {
            let k = up_count(m, t);
            for z in 0..1usize << n {
                out[z | (t << n)] = self.amplitudes[z * (m + 1) + k] / norms[k];
            }
        }
        FullState::new(n, m, out)
    }
}

impl ToFull for CollectiveState {
    fn to_full(&self) -> Result<FullState> {
        check_full_size(self.n, self.m)?;
        dicke_expand(self)?.to_full()
    }
}

/// Embeds a target-register Dicke vector `|S(M, k)⟩` into `M` qubits.
pub fn symmetric_state(m: usize, k: usize) -> Result<Vec<C64>> {
    if k > m {
        return Err(Error::Domain(format!("symmetric index k = {k} exceeds M = {m}")));
    }
    if m > FULL_MAX_SPINS {
        return Err(Error::SizeLimit {
            what: "qubits",
            value: m,
            max: FULL_MAX_SPINS,
        });
    }
    let amp = C64::new(1.0 / binomial(m, k).sqrt(), 0.0);
    Ok((0..1usize << m)
        .map(|t| if up_count(m, t) == k { amp } else { C64::new(0.0, 0.0) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn initial_states() {
        let s = initial_state(2, 2).unwrap();
        assert_eq!(s.total_sz(), HalfInt::ZERO);
        assert_eq!(s.m1_min(), HalfInt::integer(-1));
        assert_eq!(s.amplitude_at(HalfInt::integer(-1)), c(1.0));
        assert_eq!(s.amplitudes().len(), 3);

        let s = initial_state(4, 4).unwrap();
        assert_eq!(s.amplitude_at(HalfInt::integer(-2)), c(1.0));
        assert_eq!(s.amplitudes().len(), 5);

        let s = initial_state(1, 3).unwrap();
        assert_eq!(s.total_sz(), HalfInt::integer(1));
        assert_eq!(s.amplitude_at(HalfInt::from_twice(-1)), c(1.0));
        // m1 = +1/2 pairs with m2 = 1/2
        assert_eq!(s.amplitudes().len(), 2);
    }

    #[test]
    fn dicke_expansion_weights() {
        // N = 1 relabels m1 = -1/2, +1/2 as patterns 1, 0
        let s = initial_state(1, 1).unwrap();
        let h = dicke_expand(&s).unwrap();
        assert_eq!(h.amplitude(1, 1), c(1.0));

        let s = CollectiveState::new(2, 2, HalfInt::integer(1), HalfInt::ZERO, vec![c(0.0), c(1.0), c(0.0)]).unwrap();
        let h = dicke_expand(&s).unwrap();
        let r = 0.5f64.sqrt();
        assert!((h.amplitude(0b01, 1) - c(r)).norm() < 1e-15);
        assert!((h.amplitude(0b10, 1) - c(r)).norm() < 1e-15);
        assert_eq!(h.amplitude(0b00, 1), c(0.0));

        // N = 3, m1 = 1/2: w = 2 up spins, one down
        let s = CollectiveState::new(3, 3, HalfInt::half(3), HalfInt::ZERO, {
            let mut v = vec![c(0.0); 4];
            v[2] = c(1.0);
            v
        })
        .unwrap();
        assert_eq!(s.m1_values().nth(2), Some(HalfInt::from_twice(1)));
        let h = dicke_expand(&s).unwrap();
        for z in [0b001, 0b010, 0b100] {
            assert!((h.amplitude(z, 1) - c(1.0 / 3f64.sqrt())).norm() < 1e-15);
        }
    }

    #[test]
    fn dicke_expand_rejects_lower_multiplets() {
        let s = CollectiveState::new(2, 2, HalfInt::ZERO, HalfInt::ZERO, vec![c(1.0)]).unwrap();
        assert!(dicke_expand(&s).is_err());
    }

    #[test]
    fn full_embedding_conventions() {
        let f = initial_state(2, 2).unwrap().to_full().unwrap();
        let (idx, _) = f
            .amplitudes()
            .iter()
            .enumerate()
            .find(|(_, a)| a.norm() > 0.5)
            .unwrap();
        assert_eq!(pattern_string(idx, 4), "1100");

        let s21 = symmetric_state(2, 1).unwrap();
        assert!((s21[0b01] - c(0.5f64.sqrt())).norm() < 1e-15);
        assert!((s21[0b10] - c(0.5f64.sqrt())).norm() < 1e-15);
        let s32 = symmetric_state(3, 2).unwrap();
        for t in [0b001, 0b010, 0b100] {
            assert!((s32[t] - c(1.0 / 3f64.sqrt())).norm() < 1e-15);
        }
        assert_eq!(s32.iter().filter(|a| a.norm() > 0.0).count(), 3);

        // hybrid basis vector |z=0>|S(2,1)> lands on target patterns 01, 10
        let h = HybridState::basis(1, 2, 0, 1).unwrap();
        let f = h.to_full().unwrap();
        assert!((f.amplitudes()[0b010] - c(0.5f64.sqrt())).norm() < 1e-15);
        assert!((f.amplitudes()[0b100] - c(0.5f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn overlap_basics() {
        let a = HybridState::basis(2, 2, 0b01, 1).unwrap();
        let b = HybridState::basis(2, 2, 0b01, 2).unwrap();
        assert_eq!(overlap(&a, &a).unwrap(), c(1.0));
        assert_eq!(overlap(&a, &b).unwrap(), c(0.0));
        let other = HybridState::basis(2, 3, 0, 0).unwrap();
        assert!(matches!(overlap(&a, &other), Err(Error::Mismatch(_))));
    }

    #[test]
    fn size_caps() {
        assert!(matches!(initial_state(9, 8).unwrap().to_full(), Err(Error::SizeLimit { .. })));
        assert!(matches!(HybridState::basis(13, 1, 0, 0), Err(Error::SizeLimit { .. })));
        assert!(matches!(dicke_expand(&initial_state(13, 2).unwrap()), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn magnetization_sectors() {
        let s = initial_state(3, 2).unwrap();
        let h = dicke_expand(&s).unwrap();
        let f = h.to_full().unwrap();
        assert_eq!(h.magnetization_sector(), Some(s.total_sz()));
        assert_eq!(f.magnetization_sector(), Some(s.total_sz()));
        let mut v = vec![c(0.0); HybridState::dimension(1, 1)];
        v[0] = c(0.5f64.sqrt());
        v[1] = c(0.5f64.sqrt());
        assert_eq!(HybridState::new(1, 1, v).unwrap().magnetization_sector(), None);
    }

    /// Random normalized collective states in the symmetric sector.
    fn collective(n: usize, m: usize) -> impl Strategy<Value = CollectiveState> {
        let s1 = HalfInt::half(n);
        let s2 = HalfInt::half(m);
        let tsz_range = -((n + m) as i64)..=((n + m) as i64);
        prop::sample::select(tsz_range.step_by(2).collect::<Vec<_>>()).prop_flat_map(move |tsz| {
            let total_sz = HalfInt::from_twice(tsz);
            let (lo, hi) = CollectiveState::m1_range(s1, s2, total_sz).unwrap();
            let dim = ((hi - lo).twice() / 2 + 1) as usize;
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("nonzero", move |raw| {
                let v: Vec<C64> = raw.into_iter().map(|(r, i)| C64::new(r, i)).collect();
                let nrm = norm_sqr(&v).sqrt();
                (nrm > 1e-3).then(|| {
                    CollectiveState::new(n, m, s1, total_sz, v.iter().map(|a| a / nrm).collect()).unwrap()
                })
            })
        })
    }

    fn pair() -> impl Strategy<Value = (CollectiveState, CollectiveState)> {
        (1usize..5, 1usize..5).prop_flat_map(|(n, m)| {
            collective(n, m).prop_flat_map(move |a| {
                let sz = a.total_sz();
                let b = collective(n, m).prop_filter("same sector", move |b| b.total_sz() == sz);
                (Just(a), b)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn conversions_are_isometries((a, b) in pair()) {
            let direct = overlap(&a, &b).unwrap();
            let (ha, hb) = (dicke_expand(&a).unwrap(), dicke_expand(&b).unwrap());
            let (fa, fb) = (ha.to_full().unwrap(), hb.to_full().unwrap());
            prop_assert!((overlap(&ha, &hb).unwrap() - direct).norm() < 1e-13);
            prop_assert!((overlap(&fa, &fb).unwrap() - direct).norm() < 1e-13);
            prop_assert!((fa.norm_sqr() - 1.0).abs() < 1e-14);
            prop_assert_eq!(fa.magnetization_sector(), Some(a.total_sz()));
        }

        #[test]
        fn full_amplitudes_match_dicke_weights(a in (1usize..5, 1usize..5).prop_flat_map(|(n, m)| collective(n, m))) {
            let f = a.to_full().unwrap();
            let (n, m) = (a.n_supplementary(), a.m_target());
            for (bits, amp) in f.amplitudes().iter().enumerate() {
                let z = bits & ((1 << n) - 1);
                let t = bits >> n;
                let w = up_count(n, z);
                let k = up_count(m, t);
                let m1 = HalfInt::from_twice(2 * w as i64 - n as i64);
                let expected = if a.target_k_for(m1) == k && m1 >= a.m1_min() {
                    a.amplitude_at(m1) / (binomial(n, w) * binomial(m, k)).sqrt()
                } else {
                    C64::new(0.0, 0.0)
                };
                prop_assert!((amp - expected).norm() < 1e-13);
            }
        }
    }
}
