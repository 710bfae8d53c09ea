//! Projective z-measurement of the whole supplementary register.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amalg::HalfInt;
use crate::error::{Error, Result};
use crate::statespace::{up_count, CollectiveState, HybridState, StateVector, C64};

/// Random stream for trajectory `index` of an ensemble seeded with
/// `master_seed`. Streams are independent of each other and of the order in
/// which trajectories run.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Result of measuring every supplementary spin along z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    /// Measured supplementary bits (1 = down), spin `i` at bit `i`.
    pub pattern: u64,
    /// Number of supplementary spins found up.
    pub up_count: usize,
    /// Target symmetric index implied by magnetization conservation.
    pub inferred_k: usize,
    /// Born probability of observing this up count.
    pub probability: f64,
}

/// Probability of each supplementary up count `w = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution(pub Vec<f64>);

impl OutcomeDistribution {
    pub fn get(&self, w: usize) -> f64 {
        self.0.get(w).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (w, &p) in self.0.iter().enumerate() {
            if p > 0.0 {
                last_nonzero = w;
            }
            acc += p;
            if u < acc {
                return w;
            }
        }
        last_nonzero
    }
}

/// States whose supplementary register can be measured.
pub trait Measurable {
    fn outcome_distribution(&self) -> OutcomeDistribution;

    fn sample_and_collapse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(MeasurementOutcome, HybridState)>;
}

/// Target index implied by `w` supplementary up spins in sector `total_sz`:
/// `k = total_sz - (w - N/2) + M/2`.
pub fn infer_target_k(w: usize, n: usize, m: usize, total_sz: HalfInt) -> Result<usize> {
    if w > n {
        return Err(Error::Inconsistent(format!("up count {w} exceeds N = {n}")));
    }
    let twice_k = total_sz.twice() - (2 * w as i64 - n as i64) + m as i64;
    if twice_k % 2 != 0 || twice_k < 0 || twice_k > 2 * m as i64 {
        return Err(Error::Inconsistent(format!(
            "w = {w} in sector Sz = {total_sz} implies target index {} outside 0..={m}",
            HalfInt::from_twice(twice_k)
        )));
    }
    Ok((twice_k / 2) as usize)
}

pub fn outcome_distribution<S: Measurable>(state: &S) -> OutcomeDistribution {
    state.outcome_distribution()
}

pub fn sample_and_collapse<S: Measurable, R: Rng + ?Sized>(
    state: &S,
    rng: &mut R,
) -> Result<(MeasurementOutcome, HybridState)> {
    state.sample_and_collapse(rng)
}

impl Measurable for CollectiveState {
    fn outcome_distribution(&self) -> OutcomeDistribution {
        let n = self.n_supplementary();
        let half_n = HalfInt::half(n);
        let mut p = vec![0.0; n + 1];
        for (m1, a) in self.m1_values().zip(self.amplitudes()) {
            p[((m1 + half_n).twice() / 2) as usize] += a.norm_sqr();
        }
        OutcomeDistribution(p)
    }

    fn sample_and_collapse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(MeasurementOutcome, HybridState)> {
        let (n, m) = (self.n_supplementary(), self.m_target());
        if self.s1() != HalfInt::half(n) {
            return Err(Error::Domain("measurement of a non-symmetric supplementary register".into()));
        }
        let dist = self.outcome_distribution();
        let w = dist.sample(rng);
        // the symmetric register puts equal weight on each pattern with w up spins
        let mut pattern = 0usize;
        for i in sample(rng, n, n - w) {
            pattern |= 1 << i;
        }
        let m1 = HalfInt::from_twice(2 * w as i64 - n as i64);
        let k = infer_target_k(w, n, m, self.total_sz())?;
        debug_assert_eq!(k, self.target_k_for(m1));
        let a = self.amplitude_at(m1);
        let mut amplitudes = vec![C64::new(0.0, 0.0); HybridState::dimension(n, m)];
        amplitudes[pattern * (m + 1) + k] = a / a.norm();
        let post = HybridState::new(n, m, amplitudes)?;
        Ok((
            MeasurementOutcome {
                pattern: pattern as u64,
                up_count: w,
                inferred_k: k,
                probability: dist.get(w) / dist.total(),
            },
            post,
        ))
    }
}

impl Measurable for HybridState {
    fn outcome_distribution(&self) -> OutcomeDistribution {
        let n = self.n_supplementary();
        let mut p = vec![0.0; n + 1];
        for (i, a) in self.amplitudes().iter().enumerate() {
            let (z, _) = self.label(i);
            p[up_count(n, z)] += a.norm_sqr();
        }
        OutcomeDistribution(p)
    }

    fn sample_and_collapse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(MeasurementOutcome, HybridState)> {
        let (n, m) = (self.n_supplementary(), self.m_target());
        let total_sz = self
            .magnetization_sector()
            .ok_or_else(|| Error::Inconsistent("state spans several magnetization sectors".into()))?;
        let dist = self.outcome_distribution();
        let w = dist.sample(rng);

        // Born rule over the patterns with w up spins
        let pattern_weight: Vec<(usize, f64)> = (0..1usize << n)
            .filter(|&z| up_count(n, z) == w)
            .map(|z| (z, (0..=m).map(|k| self.amplitude(z, k).norm_sqr()).sum()))
            .collect();
        let total: f64 = pattern_weight.iter().map(|(_, p)| p).sum();
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pattern = pattern_weight
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(z, _)| *z)
            .unwrap_or(0);
        for &(z, p) in &pattern_weight {
            acc += p;
            if u < acc {
                pattern = z;
                break;
            }
        }

        let norm: f64 = (0..=m).map(|k| self.amplitude(pattern, k).norm_sqr()).sum::<f64>().sqrt();
        let mut amplitudes = vec![C64::new(0.0, 0.0); HybridState::dimension(n, m)];
        for k in 0..=m {
            amplitudes[pattern * (m + 1) + k] = self.amplitude(pattern, k) / norm;
        }
        let post = HybridState::new(n, m, amplitudes)?;
        let k = infer_target_k(w, n, m, total_sz)?;
        let support = post.target_support();
        if support != [k] {
            return Err(Error::Inconsistent(format!(
                "post-measurement target support {support:?} differs from inferred index {k}"
            )));
        }
        Ok((
            MeasurementOutcome {
                pattern: pattern as u64,
                up_count: w,
                inferred_k: k,
                probability: dist.get(w) / dist.total(),
            },
            post,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{diagonalize, HybridPropagator};
    use crate::hamiltonian::{collective_block, full_hamiltonian, NetworkConfig};
    use crate::statespace::{dicke_expand, initial_state, ToFull};
    use std::f64::consts::PI;

    fn mirror_two_at(t: f64) -> CollectiveState {
        let s = HalfInt::integer(1);
        let p = diagonalize(&collective_block(&NetworkConfig::mirror(2), s, s, HalfInt::ZERO).unwrap()).unwrap();
        p.propagate(&initial_state(2, 2).unwrap(), t).unwrap()
    }

    #[test]
    fn initial_state_is_deterministic() {
        for (n, m) in [(1, 1), (3, 2), (4, 4)] {
            let s = initial_state(n, m).unwrap();
            let d = s.outcome_distribution();
            assert_eq!(d.get(0), 1.0);
            assert_eq!(d.total(), 1.0);
            let mut rng = trajectory_rng(1, 0);
            let (o, post) = s.sample_and_collapse(&mut rng).unwrap();
            assert_eq!(o.up_count, 0);
            assert_eq!(o.inferred_k, m);
            assert_eq!(o.probability, 1.0);
            assert_eq!(o.pattern, (1 << n) - 1);
            assert_eq!(post.target_support(), vec![m]);
        }
    }

    #[test]
    fn inference_rule() {
        for n in 1..6usize {
            let sz = HalfInt::ZERO;
            for w in 0..=n {
                assert_eq!(infer_target_k(w, n, n, sz).unwrap(), n - w);
            }
        }
        assert_eq!(infer_target_k(4, 4, 4, HalfInt::ZERO).unwrap(), 0);
        assert_eq!(infer_target_k(2, 4, 4, HalfInt::ZERO).unwrap(), 2);
        assert!(matches!(infer_target_k(0, 4, 2, HalfInt::ZERO), Err(Error::Inconsistent(_))));
        assert!(matches!(infer_target_k(5, 4, 4, HalfInt::ZERO), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn mirror_two_distribution_at_pi_over_six() {
        let d = mirror_two_at(PI / 6.0).outcome_distribution();
        assert!((d.get(1) - 4.0 / 9.0).abs() < 1e-13);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn born_frequencies() {
        let state = mirror_two_at(PI / 6.0);
        let d = state.outcome_distribution();
        let trials = 10_000;
        let mut counts = [0usize; 3];
        for i in 0..trials {
            let (o, post) = state.sample_and_collapse(&mut trajectory_rng(99, i as u64)).unwrap();
            counts[o.up_count] += 1;
            assert_eq!(post.target_support(), vec![o.inferred_k]);
        }
        for (w, &count) in counts.iter().enumerate() {
            let p = d.get(w);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let freq = count as f64 / trials as f64;
            assert!((freq - p).abs() <= 4.0 * sigma + 1e-12, "w = {w}: {freq} vs {p}");
        }
    }

    #[test]
    fn patterns_are_uniform_given_up_count() {
        let state = mirror_two_at(PI / 6.0);
        let mut seen = [0usize; 4];
        for i in 0..4000 {
            let (o, _) = state.sample_and_collapse(&mut trajectory_rng(5, i)).unwrap();
            if o.up_count == 1 {
                seen[o.pattern as usize] += 1;
            }
        }
        assert_eq!(seen[0] + seen[3], 0);
        let (a, b) = (seen[1] as f64, seen[2] as f64);
        let sigma = ((a + b) * 0.25).sqrt();
        assert!(((a - b) / 2.0).abs() <= 4.0 * sigma);
    }

    #[test]
    fn remeasurement_is_idempotent() {
        let state = dicke_expand(&mirror_two_at(0.9)).unwrap();
        for i in 0..50 {
            let mut rng = trajectory_rng(3, i);
            let (o1, post) = state.sample_and_collapse(&mut rng).unwrap();
            let (o2, again) = post.sample_and_collapse(&mut rng).unwrap();
            assert_eq!(o1.up_count, o2.up_count);
            assert_eq!(o1.pattern, o2.pattern);
            assert_eq!(o2.probability, 1.0);
            assert_eq!(post, again);
        }
    }

    #[test]
    fn collapse_matches_full_projection() {
        let cfg = NetworkConfig::bipartite(3, 3).with_anisotropy(0.5);
        let hp = HybridPropagator::new(&cfg).unwrap();
        let full = full_hamiltonian(&cfg).unwrap();
        let init = dicke_expand(&initial_state(3, 3).unwrap()).unwrap();
        // round two starts from a measured pattern, off the symmetric sector
        let (_, mid) = hp.propagate(&init, 0.8).unwrap().sample_and_collapse(&mut trajectory_rng(7, 0)).unwrap();
        let state = hp.propagate(&mid, 1.3).unwrap();
        let f = crate::evolve::propagate_taylor(&full, mid.to_full().unwrap().amplitudes(), 1.3).unwrap();
        for i in 0..40 {
            let (o, post) = state.sample_and_collapse(&mut trajectory_rng(11, i)).unwrap();
            let mask = (1usize << 3) - 1;
            let mut projected: Vec<C64> = f
                .iter()
                .enumerate()
                .map(|(b, a)| if b & mask == o.pattern as usize { *a } else { C64::new(0.0, 0.0) })
                .collect();
            let nrm = projected.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            projected.iter_mut().for_each(|a| *a /= nrm);
            let got = post.to_full().unwrap();
            for (x, y) in got.amplitudes().iter().zip(&projected) {
                assert!((x - y).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn mixed_sector_state_is_rejected() {
        let mut v = vec![C64::new(0.0, 0.0); HybridState::dimension(1, 1)];
        v[0] = C64::new(0.6, 0.0);
        v[1] = C64::new(0.8, 0.0);
        let s = HybridState::new(1, 1, v).unwrap();
        assert!(matches!(
            s.sample_and_collapse(&mut trajectory_rng(0, 0)),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| trajectory_rng(1, 2).gen()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = trajectory_rng(1, 2).gen();
        let y: u64 = trajectory_rng(1, 3).gen();
        assert_ne!(x, y);
    }
}
