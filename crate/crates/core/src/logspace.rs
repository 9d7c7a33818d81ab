//! Log-space arithmetic on extended reals.
//!
//! Partition sums over `2^k` words at depth `k` in the thousands are far
//! outside the range of any float, so all sums are carried as natural logs.
//! `-inf` is the log of an empty sum and `+inf` marks a divergent one.

use crate::scalar::Scalar;

#[inline]
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    if a == T::infinity() || b == T::infinity() {
        return T::infinity();
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum_i exp(x_i))`, stable for large magnitudes.
pub fn log_sum_exp<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let values: Vec<T> = values.into_iter().collect();
    let mut max = T::neg_infinity();
    for &v in &values {
        if v.is_nan() {
            return v;
        }
        if v > max {
            max = v;
        }
    }
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let mut acc = T::zero();
    for &v in &values {
        acc = acc + (v - max).exp();
    }
    max + acc.ln()
}

/// `log(1 - exp(x))` for `x <= 0`.
#[inline]
pub fn log1m_exp<T: Scalar>(x: T) -> T {
    if x > -T::LN_2() {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Compensated (Neumaier) sum.
pub fn neumaier_sum<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
