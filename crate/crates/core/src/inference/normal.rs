//! Standard normal distribution function and quantile.

#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `Φ(x)`, accurate to about 1e-16 absolute over the whole real line.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Shaw, Luu & Brickman rational approximation in v = -ln(2u), u <= 1/2.
const SHAW_P: [f64; 8] = [
    1.2533141359896652729,
    3.0333178251950406994,
    2.3884158540184385711,
    0.73176759583280610539,
    0.085838533424158257377,
    0.0034424140686962222423,
    0.000036313870818023761224,
    4.3304513840364031401e-8,
];
const SHAW_Q: [f64; 8] = [
    1.0,
    2.9202373175993672857,
    2.9373357991677046357,
    1.2356513216582148689,
    0.2168237095066675527,
    0.014494272424798068406,
    0.00030617264753008793976,
    1.3141263119543315917e-6,
];

fn horner(z: f64, coeff: &[f64]) -> f64 {
    coeff.iter().rev().fold(0.0, |acc, c| acc.mul_add(z, *c))
}

/// Lower-tail quantile for `0 < u <= 1/2`.
fn lower_quantile(u: f64) -> f64 {
    let v = -(2.0 * u).ln();
    let mut x = -v * horner(v, &SHAW_P) / horner(v, &SHAW_Q);
    // Two Newton steps on ln Φ(x) = ln u; ln Φ is concave, so the steps
    // do not overshoot in the far tail.
    let target = u.ln();
    for _ in 0..2 {
        let cdf = norm_cdf(x);
        let pdf = norm_pdf(x);
        if cdf == 0.0 || pdf == 0.0 {
            break;
        }
        x -= (cdf.ln() - target) * cdf / pdf;
    }
    x
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(format!(
            "quantile level must lie in (0, 1), got {p}"
        )));
    }
    Ok(if p <= 0.5 {
        lower_quantile(p)
    } else {
        // 1 - p is exact for p >= 1/2.
        -lower_quantile(1.0 - p)
    })
}
