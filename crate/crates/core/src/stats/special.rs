//! Distribution tails used by the two-sample tests.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta;

const KOLMOGOROV_TERM_EPS: f64 = 1e-12;

/// Two-sided standard normal tail, `P(|Z| >= |z|) = 2 (1 - Φ(|z|))`.
pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    libm::erfc(z.abs() / SQRT_2).clamp(0.0, 1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Two-sided Student t tail with (possibly fractional) `df` degrees of freedom,
/// evaluated as `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    if x <= 0.0 {
        return 0.0;
    }
    match beta::checked_beta_reg(0.5 * df, 0.5, x) {
        Ok(p) => p.clamp(0.0, 1.0),
        // continued fraction failed to converge: very large df
        Err(_) => normal_two_sided(t),
    }
}

/// Kolmogorov limiting distribution tail `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²)`.
///
/// For small λ the alternating series converges too slowly, so the equivalent
/// Jacobi-theta form `1 - √(2π)/λ Σ exp(-(2k-1)²π²/(8λ²))` is summed instead.
/// Both series stop once a term drops below 1e-12.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        let scale = (2.0 * PI).sqrt() / lambda;
        let denom = 8.0 * lambda * lambda;
        let mut sum = 0.0;
        for k in 1..1000u32 {
            let odd = f64::from(2 * k - 1);
            let term = (-(odd * odd) * PI * PI / denom).exp();
            sum += term;
            if term * scale < KOLMOGOROV_TERM_EPS {
                break;
            }
        }
        1.0 - scale * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..1000u32 {
            let kf = f64::from(k);
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += sign * term;
            if term < KOLMOGOROV_TERM_EPS {
                break;
            }
            sign = -sign;
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}
