//! Log-domain Gaussian tails and log-sum-exp helpers.

use libm::erfc;
use std::f64::consts::{LN_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `log(e^a + e^b)`, with `-inf` as the neutral element.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log Σ e^{t_i}` shifted by the maximum. Empty or all `-inf` gives `-inf`.
pub fn log_sum_exp(ts: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = ts.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = ts.into_iter().map(|t| (t - m).exp()).sum();
    m + s.ln()
}

/// `log(e^a - e^b)` for `a >= b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// `log P(N(0,1) > z)`.
pub fn log_phi_bar(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    if z < -5.0 {
        return (-0.5 * erfc(-z / SQRT_2)).ln_1p();
    }
    if z < 5.0 {
        return (erfc(z / SQRT_2)).ln() - LN_2;
    }
    // Mills ratio continued fraction, evaluated backwards
    let mut t = z;
    for k in (1..=60).rev() {
        t = z + k as f64 / t;
    }
    -0.5 * z * z - LN_SQRT_2PI - t.ln()
}

/// `log P(N(0,1) <= z)`.
pub fn log_phi(z: f64) -> f64 {
    log_phi_bar(-z)
}

/// `log P(l < N(0,1) < u)`.
pub fn log_std_interval(l: f64, u: f64) -> f64 {
    if u <= l {
        return f64::NEG_INFINITY;
    }
    if l >= 0.0 {
        log_sub_exp(log_phi_bar(l), log_phi_bar(u))
    } else if u <= 0.0 {
        log_sub_exp(log_phi_bar(-u), log_phi_bar(-l))
    } else {
        let outside = log_add_exp(log_phi_bar(-l), log_phi_bar(u));
        (-outside.exp()).ln_1p()
    }
}
