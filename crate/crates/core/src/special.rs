//! Exponential integrals.

#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;
/// Arguments above this use the continued fraction, below it the series.
const SERIES_LIMIT: f64 = 1.0;

/// Exponential integral `Ei(x) = int_{-inf}^x e^t / t dt` for `x < 0`.
///
/// Uses `Ei(x) = -E_1(-x)`.
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain("Ei is only evaluated at negative arguments"));
    }
    let t = -x;
    if t > SERIES_LIMIT {
        Ok(-(scaled_cf(1, t) * (-t).exp()))
    } else {
        Ok(-series_en(1, t))
    }
}

/// `e^x E_n(x)` for `x > 0`, `n >= 1`, where `E_n(x) = int_1^inf e^{-xt} t^{-n} dt`.
///
/// The scaled form stays finite for large `x`, where `E_n` itself underflows.
pub fn scaled_expint_en(n: u32, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("order must be at least one"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain("argument must be finite and non-negative"));
    }
    if x == 0.0 {
        return if n == 1 {
            Ok(f64::INFINITY)
        } else {
            Ok(1.0 / f64::from(n - 1))
        };
    }
    if x > SERIES_LIMIT {
        Ok(scaled_cf(n, x))
    } else {
        Ok(series_en(n, x) * x.exp())
    }
}

/// `-e^{1/eta} Ei(-1/eta) = E[ln(1 + eta X)]` for `X ~ Exp(1)`, `eta > 0`.
pub fn mean_log1p_exponential(eta: f64) -> f64 {
    scaled_expint_en(1, 1.0 / eta).unwrap_or(0.0)
}

/// Modified Lentz evaluation of the continued fraction for `e^x E_n(x)`.
fn scaled_cf(n: u32, x: f64) -> f64 {
    let nm1 = f64::from(n) - 1.0;
    let mut b = x + f64::from(n);
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Power series for `E_n(x)`, accurate for `0 < x <= 1`.
fn series_en(n: u32, x: f64) -> f64 {
    let nm1 = i64::from(n) - 1;
    let mut ans = if nm1 != 0 {
        1.0 / nm1 as f64
    } else {
        -x.ln() - EULER_GAMMA
    };
    let mut fact = 1.0;
    for i in 1..MAX_ITER as i64 {
        fact *= -x / i as f64;
        let del = if i != nm1 {
            -fact / (i - nm1) as f64
        } else {
            let psi = -EULER_GAMMA + harmonic(nm1 as u32);
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            break;
        }
    }
    ans
}

/// `H_n = 1 + 1/2 + ... + 1/n`, with `H_0 = 0`. Equals `psi(n + 1) + C`.
pub fn harmonic(n: u32) -> f64 {
    (1..=n).map(|i| 1.0 / f64::from(i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(expint_ei(-1.0).unwrap(), -0.219_383_934_395_520_27, max_relative = 1e-14);
        assert_relative_eq!(expint_ei(-10.0).unwrap(), -4.156_968_929_685_324e-6, max_relative = 1e-13);
        assert!(expint_ei(0.0).is_err());
        assert!(expint_ei(1.0).is_err());
    }

    #[test]
    fn series_and_fraction_agree_at_switch() {
        for n in 1..6 {
            let a = series_en(n, 1.0) * 1.0f64.exp();
            let b = scaled_cf(n, 1.0);
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn higher_orders_follow_recurrence() {
        // E_{n+1}(x) = (e^{-x} - x E_n(x)) / n, scaled by e^x
        for &x in &[0.05, 0.7, 2.5, 12.0] {
            for n in 1..5u32 {
                let en = scaled_expint_en(n, x).unwrap();
                let next = scaled_expint_en(n + 1, x).unwrap();
                assert_relative_eq!(next, (1.0 - x * en) / f64::from(n), max_relative = 1e-10);
            }
        }
        assert_eq!(scaled_expint_en(3, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn large_scale_limit() {
        // -e^{1/eta} Ei(-1/eta) -> ln(eta) - C
        let eta = 1e6;
        assert!((mean_log1p_exponential(eta) - (eta.ln() - EULER_GAMMA)).abs() < 1e-4);
    }
}
