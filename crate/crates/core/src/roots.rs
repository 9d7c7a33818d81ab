use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Final bracket of a bisection on a non-increasing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Bracket<T> {
    pub fn mid(&self) -> T {
        (self.lo + self.hi) / T::of(2.0)
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

/// Bisection for the sign change of a non-increasing `f` on `[lo, hi]`.
///
/// The caller guarantees `f(lo) > 0` and `f(hi) <= 0`; only signs are used,
/// so `f` may be discontinuous or take infinite values. Points where
/// `f == 0` are treated as the right side of the bracket.
pub fn bisect_sign<T: Scalar, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T) -> Bracket<T> {
    let mut b = Bracket { lo, hi };
    // hard cap so a tolerance below the float resolution terminates
    for _ in 0..200 {
        if b.width() <= tol {
            break;
        }
        let m = b.mid();
        if m <= b.lo || m >= b.hi {
            break;
        }
        if f(m) > T::zero() {
            b.lo = m;
        } else {
            b.hi = m;
        }
    }
    b
}

/// Values this close above 0 at the cap are rounding noise from a zero
/// sitting exactly at the cap (full-dimensional systems).
const CAP_SLACK: f64 = 1e-12;

/// Zero of a non-increasing pressure proxy on `[0, cap]` as `(estimate, bracket width)`.
///
/// A proxy that is not positive at 0 has its zero at 0. A proxy still
/// positive at `cap` is an error rather than a silent clamp.
pub fn proxy_root<T: Scalar, F: FnMut(T) -> T>(mut f: F, cap: T, tol: T) -> Result<(T, T)> {
    if f(T::zero()) <= T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let at_cap = f(cap);
    if at_cap > T::of(CAP_SLACK) {
        return Err(Error::CapTooSmall { cap: cap.f64() });
    }
    if at_cap > T::zero() {
        return Ok((cap, T::zero()));
    }
    let b = bisect_sign(f, T::zero(), cap, tol);
    Ok((b.mid(), b.width()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_linear_root() {
        let b = bisect_sign(|t: f64| 2f64.ln() - t * 3f64.ln(), 0.0, 1.0, 1e-12);
        assert!(b.width() <= 1e-12);
        assert!((b.mid() - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn handles_infinite_values() {
        let f = |t: f64| if t < 0.25 { f64::INFINITY } else { f64::NEG_INFINITY };
        let b = bisect_sign(f, 0.0, 1.0, 1e-9);
        assert!((b.mid() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn proxy_root_edges() {
        assert_eq!(proxy_root(|t: f64| -t, 1.0, 1e-9).unwrap(), (0.0, 0.0));
        assert_eq!(proxy_root(|t: f64| 2.0 - t, 1.0, 1e-9), Err(Error::CapTooSmall { cap: 1.0 }));
        assert_eq!(proxy_root(|t: f64| (1.0 - t) + 1e-15, 1.0, 1e-9).unwrap(), (1.0, 0.0));
        let (r, w) = proxy_root(|t: f64| 0.3 - t, 1.0, 1e-9).unwrap();
        assert!((r - 0.3).abs() < 1e-9 && w <= 1e-9);
    }

    #[test]
    fn tolerance_below_resolution_terminates() {
        let b = bisect_sign(|t: f64| 0.5 - t, 0.0, 1.0, 0.0);
        assert!((b.mid() - 0.5).abs() < 1e-15);
    }
}
