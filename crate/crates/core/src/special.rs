//! Modified Bessel functions of the first kind for real order.

use statrs::function::gamma::gamma;

const SERIES_LIMIT: f64 = 30.0;

/// `I_nu(x)` for `x >= 0` and real `nu > -1`.
pub fn bessel_i(nu: f64, x: f64) -> f64 {
    if x > SERIES_LIMIT {
        bessel_i_scaled(nu, x) * x.exp()
    } else {
        series(nu, x)
    }
}

/// `exp(-x) I_nu(x)`, finite for any `x >= 0`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x > SERIES_LIMIT {
        asymptotic_scaled(nu, x)
    } else {
        series(nu, x) * (-x).exp()
    }
}

// Power series; every term is positive for nu > -1 so there is no cancellation.
fn series(nu: f64, x: f64) -> f64 {
    assert!(nu > -1.0, "series requires nu > -1");
    assert!(x >= 0.0, "argument must be non-negative");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 0..500 {
        let k = k as f64;
        term *= q / ((k + 1.0) * (k + nu + 1.0));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

// Hankel expansion, truncated at the smallest term.
fn asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() >= last {
            break;
        }
        sum += term;
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn half_integer_orders_match_elementary_forms() {
        for &x in &[0.05, 0.5, 1.0, 4.0, 12.0, 29.0, 31.0, 60.0] {
            let pref = (2.0 / (PI * x)).sqrt();
            assert_relative_eq!(bessel_i(0.5, x), pref * x.sinh(), max_relative = 1e-13);
            assert_relative_eq!(bessel_i(-0.5, x), pref * x.cosh(), max_relative = 1e-13);
        }
    }

    #[test]
    fn series_and_asymptotic_agree_at_switch() {
        for nu in [-0.25, 0.25, 1.0] {
            let s = series(nu, 30.0) * (-30.0f64).exp();
            let a = asymptotic_scaled(nu, 30.0);
            assert_relative_eq!(s, a, max_relative = 1e-13);
        }
    }

    #[test]
    fn integer_order_reference_values() {
        // I_0(1), I_1(1) from standard tables.
        assert_relative_eq!(
            bessel_i(0.0, 1.0),
            1.266_065_877_752_008_4,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            bessel_i(1.0, 1.0),
            0.565_159_103_992_485,
            max_relative = 1e-14
        );
    }
}
