//! Power sums `sum_k k^{-s}` for the power-law ratio families.

use crate::scalar::Scalar;

// B_2, B_4, ..., B_16 divided by (2j)!
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Hurwitz zeta `sum_{k>=0} (a + k)^{-s}` by Euler-Maclaurin summation.
///
/// Valid for every real `s != 1` and `a > 0`; for `s < 1` this is the
/// analytic continuation, which is what the partial-sum identities below need.
pub fn hurwitz_zeta<T: Scalar>(s: T, a: T) -> T {
    debug_assert!(a > T::zero());
    debug_assert!(s != T::one());
    let n = (s.abs().ceil().to_usize().unwrap_or(0) + 12).max(16);
    let mut acc = T::zero();
    for k in 0..n {
        acc = acc + (a + T::of_usize(k)).powf(-s);
    }
    let x = a + T::of_usize(n);
    acc = acc + x.powf(T::one() - s) / (s - T::one()) + x.powf(-s) / T::of(2.0);
    // rising factorial s (s+1) ... (s+2j-2) times x^{-s-2j+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - T::one());
    let x2 = x * x;
    for (j, &c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc = acc + T::of(c) * rising * xpow;
        let m = T::of_usize(2 * j + 1);
        rising = rising * (s + m) * (s + m + T::one());
        xpow = xpow / x2;
    }
    acc
}

/// Riemann zeta for real `s != 1`.
pub fn zeta<T: Scalar>(s: T) -> T {
    hurwitz_zeta(s, T::one())
}

fn digamma<T: Scalar>(x: T) -> T {
    let mut x = x;
    let mut acc = T::zero();
    while x < T::of(10.0) {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv2 = (x * x).recip();
    acc + x.ln() - T::of(0.5) / x
        - inv2 * (T::of(1.0 / 12.0) - inv2 * (T::of(1.0 / 120.0) - inv2 * T::of(1.0 / 252.0)))
}

/// Natural log of the head sum `sum_{k=1}^{K} k^{-s}` with `K = floor(exp(ln_k))`.
///
/// `ln_k` may be astronomically large; the asymptotic form is used once `K`
/// exceeds `1e15`.
pub fn log_head_power_sum<T: Scalar>(s: T, ln_k: T) -> T {
    if ln_k < T::zero() {
        return T::neg_infinity();
    }
    let one = T::one();
    if ln_k > T::of(15.0 * std::f64::consts::LN_10) {
        if s > one {
            return zeta(s).ln() + (one - (hurwitz_zeta(s, ln_k.exp()) / zeta(s))).ln();
        }
        if s == one {
            return (ln_k + T::of(EULER_GAMMA)).ln();
        }
        let lead = (one - s) * ln_k - (one - s).ln();
        let correction = zeta(s) * (-lead).exp();
        return lead + correction.ln_1p();
    }
    let k = ln_k.exp().floor();
    if k < T::one() {
        return T::neg_infinity();
    }
    if k <= T::of(1e5) {
        let n = k.to_usize().unwrap_or(0);
        let mut acc = T::zero();
        for j in (1..=n).rev() {
            acc = acc + T::of_usize(j).powf(-s);
        }
        return acc.ln();
    }
    if s == one {
        return (digamma(k + one) + T::of(EULER_GAMMA)).ln();
    }
    (zeta(s) - hurwitz_zeta(s, k + one)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(s: f64, from: usize, to: usize) -> f64 {
        (from..=to).rev().map(|k| (k as f64).powf(-s)).sum()
    }

    #[test]
    fn zeta_known_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-13);
        assert!((zeta(0.5f64) - (-1.460_354_508_809_586_8)).abs() < 1e-12);
        assert!((zeta(0.0f64) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_tail_matches_direct_sum() {
        // tail from 11 to infinity at s = 3, direct sum to 10^6 plus integral remainder
        let n = 1_000_000usize;
        let expected = direct(3.0, 11, n) + (n as f64 + 0.5).powf(-2.0) / 2.0;
        assert!((hurwitz_zeta(3.0, 11.0) - expected).abs() < 1e-13);
    }

    #[test]
    fn head_sums_against_direct_summation() {
        for &s in &[0.3, 1.0, 1.5, 2.5] {
            for &k in &[1usize, 7, 1000, 200_000] {
                let expected = direct(s, 1, k).ln();
                let got = log_head_power_sum(s, (k as f64).ln() + 1e-12);
                assert!((got - expected).abs() < 1e-10, "s={s} k={k}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn head_sums_grow_without_bound_when_divergent() {
        let a = log_head_power_sum(1.0, 100.0);
        let b = log_head_power_sum(1.0, 1000.0);
        assert!(b > a && a > 4.0);
        let c = log_head_power_sum(0.5, 200.0);
        assert!((c - (0.5 * 200.0 - 0.5f64.ln())).abs() < 1e-6);
    }
}
