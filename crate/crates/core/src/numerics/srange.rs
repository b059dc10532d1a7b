//! Distribution of the studentized range `Q = (max - min) / s` of `k`
//! independent standard normals, with `s^2 ~ chi^2_df / df` independent.
//!
//! `P(Q <= q) = ∫ f_s(s) W(q s) ds` where
//! `W(w) = k ∫ φ(z) [Φ(z) - Φ(z - w)]^{k-1} dz` is the range CDF for known scale.

use super::quad;
use super::special::{gamma_p, gamma_q, ln_gamma, normal_cdf, normal_pdf, normal_sf};
use super::NumericsError;

const Z_LIMIT: f64 = 8.5;
const TAIL_MASS: f64 = 1e-13;
/// Above this df the scale density is treated as a point mass at 1.
const DF_AS_INFINITE: f64 = 1e7;

/// Range CDF `W(w)` for `k` standard normals with known unit scale.
pub fn range_cdf(w: f64, k: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let kf = k as f64;
    let mut integrand = |z: f64| {
        // Φ(z) - Φ(z - w) written via whichever tail keeps precision
        let band = if z > 0.0 {
            normal_sf(z - w) - normal_sf(z)
        } else {
            normal_cdf(z) - normal_cdf(z - w)
        };
        kf * normal_pdf(z) * band.max(0.0).powi(km1)
    };
    // The band is non-zero on [-Z, Z + w]; φ(z) kills everything beyond ±Z.
    let v = quad::integrate(&mut integrand, -Z_LIMIT, Z_LIMIT, 1e-13, 8);
    v.clamp(0.0, 1.0)
}

fn scale_log_density(s: f64, df: f64, log_norm: f64) -> f64 {
    log_norm + (df - 1.0) * s.ln() - df * s * s / 2.0
}

/// Bounds outside which the scale variable has less than `TAIL_MASS` probability.
fn scale_support(df: f64) -> (f64, f64) {
    let a = df / 2.0;
    // s^2 df / 2 ~ Gamma(df/2, 1)
    let mut lo = 1.0;
    while gamma_p(a, df * lo * lo / 2.0) > TAIL_MASS && lo > 1e-300 {
        lo /= 2.0;
    }
    let mut hi = 1.0;
    while gamma_q(a, df * hi * hi / 2.0) > TAIL_MASS {
        hi *= 2.0;
    }
    // tighten both ends by bisection
    let (mut a_lo, mut a_hi) = (lo, 1.0);
    for _ in 0..60 {
        let m = 0.5 * (a_lo + a_hi);
        if gamma_p(a, df * m * m / 2.0) > TAIL_MASS {
            a_hi = m;
        } else {
            a_lo = m;
        }
    }
    let (mut b_lo, mut b_hi) = (1.0, hi);
    for _ in 0..60 {
        let m = 0.5 * (b_lo + b_hi);
        if gamma_q(a, df * m * m / 2.0) > TAIL_MASS {
            b_lo = m;
        } else {
            b_hi = m;
        }
    }
    (a_lo, b_hi)
}

/// CDF of the studentized range.
pub fn studentized_range_cdf(q: f64, k: u32, df: f64) -> Result<f64, NumericsError> {
    validate(q, k, df)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    if df >= DF_AS_INFINITE {
        return Ok(range_cdf(q, k));
    }
    let log_norm = std::f64::consts::LN_2 + (df / 2.0) * (df / 2.0).ln() - ln_gamma(df / 2.0);
    let (lo, hi) = scale_support(df);
    let mut outer = |s: f64| scale_log_density(s, df, log_norm).exp() * range_cdf(q * s, k);
    let v = quad::integrate(&mut outer, lo, hi, 1e-10, 4);
    Ok(v.clamp(0.0, 1.0))
}

/// Survival function `P(Q > q)` of the studentized range.
pub fn studentized_range_sf(q: f64, k: u32, df: f64) -> Result<f64, NumericsError> {
    validate(q, k, df)?;
    if q == 0.0 {
        return Ok(1.0);
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    if df >= DF_AS_INFINITE {
        return Ok((1.0 - range_cdf(q, k)).clamp(0.0, 1.0));
    }
    let log_norm = std::f64::consts::LN_2 + (df / 2.0) * (df / 2.0).ln() - ln_gamma(df / 2.0);
    let (lo, hi) = scale_support(df);
    let mut outer = |s: f64| scale_log_density(s, df, log_norm).exp() * (1.0 - range_cdf(q * s, k));
    let v = quad::integrate(&mut outer, lo, hi, 1e-10, 4);
    Ok(v.clamp(0.0, 1.0))
}

fn validate(q: f64, k: u32, df: f64) -> Result<(), NumericsError> {
    if k < 2 {
        return Err(NumericsError::Domain(format!("studentized range needs k >= 2, got {k}")));
    }
    if !(df > 0.0) {
        return Err(NumericsError::Domain(format!("studentized range df must be positive, got {df}")));
    }
    if !(q >= 0.0) {
        return Err(NumericsError::Domain(format!("studentized range q must be non-negative, got {q}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::t_two_sided_sf;

    #[test]
    fn zero_and_domain() {
        assert_eq!(studentized_range_sf(0.0, 4, 10.0).unwrap(), 1.0);
        assert!(studentized_range_sf(1.0, 1, 10.0).is_err());
        assert!(studentized_range_sf(-1.0, 3, 10.0).is_err());
        assert!(studentized_range_sf(1.0, 3, 0.0).is_err());
    }

    #[test]
    fn k2_reduces_to_student_t() {
        for &df in &[1.0, 2.0, 5.0, 12.0, 60.0, 384.0] {
            for &q in &[0.1, 0.8, 1.5, 2.77, 3.5, 5.0, 9.0] {
                let sf = studentized_range_sf(q, 2, df).unwrap();
                let t = t_two_sided_sf(q / std::f64::consts::SQRT_2, df).unwrap();
                assert!((sf - t).abs() < 1e-6, "q={q} df={df}: {sf} vs {t}");
            }
        }
    }

    #[test]
    fn known_upper_quantiles() {
        // Classic tables: q_{0.05}(3, 10) = 3.877, q_{0.05}(6, 60) = 4.163, q_{0.01}(4, 20) = 5.018
        assert!((studentized_range_sf(3.877, 3, 10.0).unwrap() - 0.05).abs() < 2e-4);
        assert!((studentized_range_sf(4.163, 6, 60.0).unwrap() - 0.05).abs() < 2e-4);
        assert!((studentized_range_sf(5.018, 4, 20.0).unwrap() - 0.01).abs() < 1e-4);
    }

    #[test]
    fn range_cdf_k2_known_scale() {
        // max - min of two N(0,1) is |N(0, 2)|
        for &w in &[0.5, 1.0, 2.0, 4.0] {
            let exact = 1.0 - 2.0 * normal_sf(w / std::f64::consts::SQRT_2);
            assert!((range_cdf(w, 2) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_and_sf_complement() {
        for &(q, k, df) in &[(1.0, 3, 6.0), (3.46, 3, 6.0), (4.5, 6, 40.0)] {
            let c = studentized_range_cdf(q, k, df).unwrap();
            let s = studentized_range_sf(q, k, df).unwrap();
            assert!((c + s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_in_q() {
        let mut prev = 1.0;
        for i in 0..40 {
            let v = studentized_range_sf(i as f64 * 0.2, 5, 15.0).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}
