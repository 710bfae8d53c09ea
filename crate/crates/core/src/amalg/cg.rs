use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use super::{ExactRadical, HalfInt};
use crate::error::{domain, Result};

const FACTORIAL_TABLE_LEN: usize = 512;

static FACTORIALS: Lazy<Vec<BigUint>> = Lazy::new(|| {
    let mut table = Vec::with_capacity(FACTORIAL_TABLE_LEN);
    let mut acc = BigUint::one();
    table.push(acc.clone());
    for k in 1..FACTORIAL_TABLE_LEN {
        acc *= k as u64;
        table.push(acc.clone());
    }
    table
});

pub(crate) fn factorial(n: u64) -> BigUint {
    if (n as usize) < FACTORIAL_TABLE_LEN {
        return FACTORIALS[n as usize].clone();
    }
    let mut acc = FACTORIALS[FACTORIAL_TABLE_LEN - 1].clone();
    for k in FACTORIAL_TABLE_LEN as u64..=n {
        acc *= k;
    }
    acc
}

fn fact_int(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    BigInt::from(factorial(n as u64))
}

fn check_pair(name: &str, j: HalfInt, m: HalfInt) -> Result<()> {
    if j.twice() < 0 {
        return domain(format!("{name}: negative angular momentum j = {j}"));
    }
    if !j.same_parity(m) {
        return domain(format!("{name}: parity mismatch between j = {j} and m = {m}"));
    }
    if m.abs() > j {
        return domain(format!("{name}: |m| = {} exceeds j = {j}", m.abs()));
    }
    Ok(())
}

/// Clebsch-Gordan coefficient `⟨j1 m1; j2 m2 | j m⟩` in the Condon-Shortley
/// phase convention, evaluated exactly from the Racah sum.
///
/// Returns zero when `m1 + m2 != m`. Triangle or parity violations are
/// domain errors.
pub fn cg(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<ExactRadical> {
    check_pair("cg(j1, m1)", j1, m1)?;
    check_pair("cg(j2, m2)", j2, m2)?;
    check_pair("cg(J, M)", j, m)?;
    let (tj1, tj2, tj) = (j1.twice(), j2.twice(), j.twice());
    if (tj1 + tj2 + tj) % 2 != 0 {
        return domain(format!("cg: j1 + j2 + J = {} is not an integer", HalfInt::from_twice(tj1 + tj2 + tj)));
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 {
        return domain(format!("cg: triangle rule violated for ({j1}, {j2}, {j})"));
    }
    if m1 + m2 != m {
        return Ok(ExactRadical::zero());
    }

    // every combination below is an integer by the parity checks above
    let half = |x: i64| x / 2;
    let (tm1, tm2, tm) = (m1.twice(), m2.twice(), m.twice());

    let j1_plus_j2_minus_j = half(tj1 + tj2 - tj);
    let j1_minus_m1 = half(tj1 - tm1);
    let j2_plus_m2 = half(tj2 + tm2);
    let j_minus_j2_plus_m1 = half(tj - tj2 + tm1);
    let j_minus_j1_minus_m2 = half(tj - tj1 - tm2);

    let triangle = BigRational::new(
        BigInt::from(tj + 1)
            * fact_int(half(tj + tj1 - tj2))
            * fact_int(half(tj - tj1 + tj2))
            * fact_int(j1_plus_j2_minus_j),
        fact_int(half(tj1 + tj2 + tj) + 1),
    );
    let projections = fact_int(half(tj + tm))
        * fact_int(half(tj - tm))
        * fact_int(j1_minus_m1)
        * fact_int(half(tj1 + tm1))
        * fact_int(half(tj2 - tm2))
        * fact_int(j2_plus_m2);

    let k_min = 0.max(-j_minus_j2_plus_m1).max(-j_minus_j1_minus_m2);
    let k_max = j1_plus_j2_minus_j.min(j1_minus_m1).min(j2_plus_m2);

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = fact_int(k)
            * fact_int(j1_plus_j2_minus_j - k)
            * fact_int(j1_minus_m1 - k)
            * fact_int(j2_plus_m2 - k)
            * fact_int(j_minus_j2_plus_m1 + k)
            * fact_int(j_minus_j1_minus_m2 + k);
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        sum += BigRational::new(sign, denom);
    }

    let sign = if sum.is_zero() {
        0
    } else if sum > BigRational::zero() {
        1
    } else {
        -1
    };
    let radicand = triangle * BigRational::from_integer(projections) * &sum * &sum;
    Ok(ExactRadical::new(sign, radicand))
}

/// Matrix element `⟨j, m-1| S₋ |j, m⟩ = √((j+m)(j-m+1))`; zero at `m = -j`.
pub fn lowering_element(j: HalfInt, m: HalfInt) -> Result<f64> {
    check_pair("lowering_element", j, m)?;
    let (tj, tm) = (j.twice(), m.twice());
    // (2j+2m)(2j-2m+2)/4
    let prod = (tj + tm) * (tj - tm + 2);
    Ok(((prod as f64) / 4.0).sqrt())
}

/// Matrix element `⟨j, m+1| S₊ |j, m⟩ = √((j-m)(j+m+1))`; zero at `m = j`.
pub fn raising_element(j: HalfInt, m: HalfInt) -> Result<f64> {
    check_pair("raising_element", j, m)?;
    if m == j {
        return Ok(0.0);
    }
    lowering_element(j, m + HalfInt::integer(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(twice: i64) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn coupling_with_spin_zero_is_identity() {
        for tj in 0..6 {
            for tm in (-tj..=tj).step_by(2) {
                let c = cg(h(tj), h(tm), h(0), h(0), h(tj), h(tm)).unwrap();
                assert_eq!(c, ExactRadical::one());
            }
        }
    }

    #[test]
    fn spin_half_triplet_zero() {
        let c = cg(h(1), h(1), h(1), h(-1), h(2), h(0)).unwrap();
        assert_eq!(c.sign(), 1);
        assert_eq!(c.square(), q(1, 2));
    }

    #[test]
    fn condon_shortley_sign_for_two_spin_ones() {
        // two spin-1 singlet: (|1,-1> - |0,0> + |-1,1>)/√3
        let c = cg(h(2), h(-2), h(2), h(2), h(0), h(0)).unwrap();
        assert_eq!(c.sign(), 1);
        assert_eq!(c.square(), q(1, 3));
        let c0 = cg(h(2), h(0), h(2), h(0), h(0), h(0)).unwrap();
        assert_eq!(c0.signed_square(), q(-1, 3));
    }

    #[test]
    fn mismatched_projection_is_zero() {
        let c = cg(h(1), h(1), h(1), h(1), h(2), h(0)).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn rejects_invalid_quantum_numbers() {
        assert!(cg(h(1), h(3), h(1), h(1), h(2), h(2)).is_err());
        assert!(cg(h(1), h(0), h(1), h(1), h(2), h(2)).is_err());
        assert!(cg(h(2), h(0), h(2), h(0), h(6), h(0)).is_err());
        assert!(cg(h(2), h(0), h(1), h(1), h(2), h(1)).is_err());
    }

    #[test]
    fn ladder_elements() {
        assert_eq!(lowering_element(h(1), h(1)).unwrap(), 1.0);
        assert!((lowering_element(h(2), h(0)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lowering_element(h(9), h(9)).unwrap(), 3.0);
        assert_eq!(lowering_element(h(4), h(-4)).unwrap(), 0.0);
        assert_eq!(raising_element(h(4), h(4)).unwrap(), 0.0);
        assert!(lowering_element(h(2), h(4)).is_err());
    }

    /// Brute-force oracle: two spin-1/2 particles built into Dicke-like
    /// product sums reproduce the table of j1=1, j2=1/2 coefficients.
    #[test]
    fn spin_one_times_half_table() {
        // <1 1; 1/2 -1/2 | 3/2 1/2> = √(1/3), <1 0; 1/2 1/2 | 3/2 1/2> = √(2/3)
        assert_eq!(cg(h(2), h(2), h(1), h(-1), h(3), h(1)).unwrap().signed_square(), q(1, 3));
        assert_eq!(cg(h(2), h(0), h(1), h(1), h(3), h(1)).unwrap().signed_square(), q(2, 3));
        // <1 1; 1/2 -1/2 | 1/2 1/2> = √(2/3), <1 0; 1/2 1/2 | 1/2 1/2> = -√(1/3)
        assert_eq!(cg(h(2), h(2), h(1), h(-1), h(1), h(1)).unwrap().signed_square(), q(2, 3));
        assert_eq!(cg(h(2), h(0), h(1), h(1), h(1), h(1)).unwrap().signed_square(), q(-1, 3));
    }

    fn coupling_case() -> impl Strategy<Value = (i64, i64, i64, i64)> {
        (0i64..9, 0i64..9).prop_flat_map(|(tj1, tj2)| {
            let m1 = (0..=tj1).prop_map(move |i| 2 * i - tj1);
            let m2 = (0..=tj2).prop_map(move |i| 2 * i - tj2);
            (Just(tj1), m1, Just(tj2), m2)
        })
    }

    proptest! {
        #[test]
        fn orthonormal_completeness((tj1, tm1, tj2, tm2) in coupling_case()) {
            let tm = tm1 + tm2;
            let mut total = BigRational::zero();
            let mut tj = (tj1 - tj2).abs();
            while tj <= tj1 + tj2 {
                if tm.abs() <= tj {
                    total += cg(h(tj1), h(tm1), h(tj2), h(tm2), h(tj), h(tm)).unwrap().square();
                }
                tj += 2;
            }
            prop_assert_eq!(total, BigRational::one());
        }

        #[test]
        fn exchange_symmetry((tj1, tm1, tj2, tm2) in coupling_case()) {
            let tm = tm1 + tm2;
            let mut tj = (tj1 - tj2).abs().max(tm.abs());
            if (tj - tm) % 2 != 0 { tj += 1; }
            while tj <= tj1 + tj2 {
                let a = cg(h(tj1), h(tm1), h(tj2), h(tm2), h(tj), h(tm)).unwrap();
                let b = cg(h(tj2), h(tm2), h(tj1), h(tm1), h(tj), h(tm)).unwrap();
                let phase = ((tj1 + tj2 - tj) / 2) % 2;
                let expected = if phase == 0 { b.signed_square() } else { -b.signed_square() };
                prop_assert_eq!(a.signed_square(), expected);
                tj += 2;
            }
        }

        #[test]
        fn ladder_round_trip(tj in 0i64..30, i in 0i64..30) {
            prop_assume!(i <= tj);
            let tm = 2 * i - tj;
            let down = lowering_element(h(tj), h(tm)).unwrap();
            let (j, m) = (tj as f64 / 2.0, tm as f64 / 2.0);
            if tm > -tj {
                // S+ S- |j,m> = (j+m)(j-m+1) |j,m>
                let up = raising_element(h(tj), h(tm - 2)).unwrap();
                prop_assert!((down * up - (j + m) * (j - m + 1.0)).abs() < 1e-12);
            } else {
                prop_assert_eq!(down, 0.0);
            }
        }
    }
}
