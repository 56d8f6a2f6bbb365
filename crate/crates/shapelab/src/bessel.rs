//! Bessel functions of the first kind with real nonnegative order, and
//! their positive zeros.
//!
//! Two evaluation branches are used: the ascending power series for small
//! arguments, and Miller's downward recurrence normalized by the Neumann
//! sum `sum_k c_k J_{nu+2k}(x) = (x/2)^nu / Gamma(nu+1)` for larger
//! arguments. The branches overlap and are cross-checked in tests; the
//! recurrence branch stays accurate for orders far beyond the reach of the
//! Hankel asymptotic expansion at moderate `x`.

use crate::{Error, Result};

/// Switch from the power series to downward recurrence above this argument.
const SERIES_MAX_X: f64 = 9.0;

/// Natural log of the Gamma function for positive arguments (Lanczos, g=7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires a positive argument");
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `J_nu(x)` by the ascending power series. Accurate for `x <= SERIES_MAX_X`.
fn bessel_j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half_x = 0.5 * x;
    // leading term (x/2)^nu / Gamma(nu+1), in log space to dodge under/overflow
    let ln_t0 = nu * half_x.ln() - ln_gamma(nu + 1.0);
    if ln_t0 < -700.0 {
        return 0.0;
    }
    let mut term = ln_t0.exp();
    let mut sum = term;
    let q = half_x * half_x;
    for p in 0..220 {
        let pf = p as f64;
        term *= -q / ((pf + 1.0) * (pf + nu + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// `J_nu(x)` and `J_{nu+1}(x)` by Miller's downward recurrence.
///
/// Normalization by the Neumann sum keeps the result accurate for any
/// order on the half-line, at cost linear in `x + nu`.
fn bessel_j_miller(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    // start well above the turning point mu ~ x, where J_mu(x) underflows fast
    let top = x.max(nu);
    let extra = 18.0 * (top + 1.0).cbrt() + 40.0;
    let n_steps = (top - nu + extra).ceil() as usize;
    let mut vals = vec![0.0f64; n_steps + 2];
    vals[n_steps + 1] = 0.0;
    vals[n_steps] = 1e-30;
    // downward: J_{mu-1} = (2 mu / x) J_mu - J_{mu+1}
    for k in (0..n_steps).rev() {
        let mu = nu + (k + 1) as f64;
        let v = (2.0 * mu / x) * vals[k + 1] - vals[k + 2];
        vals[k] = v;
        if v.abs() > 1e250 {
            for w in vals[k..].iter_mut() {
                *w /= 1e250;
            }
        }
    }
    // Neumann-sum normalization: S = sum_m c_m f_{2m},
    // c_0 = 1, c_{m+1}/c_m = (nu+2m+2)(nu+m) / ((m+1)(nu+2m)).
    // Accumulated in log magnitude to survive large orders.
    let mut ln_c = 0.0f64;
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n_steps / 2 + 1);
    let mut m = 0usize;
    loop {
        let idx = 2 * m;
        if idx > n_steps {
            break;
        }
        let f = vals[idx];
        if f != 0.0 {
            terms.push((ln_c + f.abs().ln(), f.signum()));
        }
        let mf = m as f64;
        let num = (nu + 2.0 * mf + 2.0) * (nu + mf);
        let den = (mf + 1.0) * (nu + 2.0 * mf);
        if den > 0.0 && num > 0.0 {
            ln_c += (num / den).ln();
        } else {
            // nu == 0, m == 0: limit value c_1 = 2
            ln_c += 2.0f64.ln();
        }
        m += 1;
    }
    let l_max = terms
        .iter()
        .map(|t| t.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let s_scaled: f64 = terms.iter().map(|&(l, s)| s * (l - l_max).exp()).sum();
    // J_{nu+k} = vals[k] * (x/2)^nu / (Gamma(nu+1) * S)
    let ln_norm = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) - l_max - s_scaled.abs().ln();
    let sign = s_scaled.signum();
    let j0 = sign * vals[0].signum() * (ln_norm + vals[0].abs().max(1e-300).ln()).exp();
    let j1 = sign * vals[1].signum() * (ln_norm + vals[1].abs().max(1e-300).ln()).exp();
    let j0 = if vals[0] == 0.0 { 0.0 } else { j0 };
    let j1 = if vals[1] == 0.0 { 0.0 } else { j1 };
    (j0, j1)
}

/// Bessel function of the first kind `J_nu(x)`, `nu >= 0`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_j requires nu >= 0 and x >= 0, got nu={nu}, x={x}"
        )));
    }
    if x <= SERIES_MAX_X {
        Ok(bessel_j_series(nu, x))
    } else {
        Ok(bessel_j_miller(nu, x).0)
    }
}

/// Derivative `J_nu'(x)` via `J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x)`.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_j_prime requires nu >= 0 and x >= 0, got nu={nu}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(match nu {
            v if v == 0.0 => 0.0,
            v if v == 1.0 => 0.5,
            _ => 0.0,
        });
    }
    let (jn, jn1) = if x <= SERIES_MAX_X {
        (bessel_j_series(nu, x), bessel_j_series(nu + 1.0, x))
    } else {
        bessel_j_miller(nu, x)
    };
    Ok((nu / x) * jn - jn1)
}

/// State returned when zero bracketing or refinement fails.
#[derive(Debug, Clone, Copy)]
pub struct BracketState {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// The `p`-th positive zero `j_{nu,p}` of `J_nu`, absolute error <= 1e-11.
pub fn bessel_zero(nu: f64, p: u32) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::Domain(format!("bessel_zero requires nu >= 0, got {nu}")));
    }
    if p == 0 {
        return Err(Error::Domain("bessel_zero requires p >= 1".into()));
    }
    let mut prev = 0.0f64;
    for q in 1..=p {
        prev = next_zero_after(nu, prev, q == 1)?;
    }
    Ok(prev)
}

/// All zeros of `J_nu` up to `x_max`, in increasing order.
pub fn bessel_zeros_up_to(nu: f64, x_max: f64) -> Result<Vec<f64>> {
    let mut zs = Vec::new();
    let mut prev = 0.0f64;
    loop {
        let z = next_zero_after(nu, prev, zs.is_empty())?;
        if z > x_max {
            return Ok(zs);
        }
        zs.push(z);
        prev = z;
    }
}

/// Locate the first sign change of `J_nu` strictly after `from`.
fn next_zero_after(nu: f64, from: f64, first: bool) -> Result<f64> {
    // Scan start: the first zero sits above the turning point at x ~ nu;
    // subsequent zeros are at distance in (pi - eps, ~1.5 nu^{1/3}).
    let mut a = if first {
        // J_nu > 0 on (0, j_{nu,1})
        (nu - 1.0).max(1e-3)
    } else {
        from + 0.05
    };
    let step = if nu > 3.0 { 0.35 * nu.cbrt().max(1.0) } else { 0.4 };
    let step = step.min(1.2);
    let mut fa = bessel_j(nu, a)?;
    // at very small x and large nu, J underflows to 0; move up to a live value
    let mut guard = 0usize;
    while fa == 0.0 && first {
        a += step.max(0.5);
        fa = bessel_j(nu, a)?;
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Numeric(format!(
                "bessel_zero: no nonzero value found scanning J_{nu}"
            )));
        }
    }
    let mut b = a;
    let mut fb = fa;
    for _ in 0..2_000_000 {
        a = b;
        fa = fb;
        b = a + step;
        fb = bessel_j(nu, b)?;
        if fa == 0.0 {
            continue;
        }
        if fa.signum() != fb.signum() {
            return refine_zero(nu, a, b, fa, fb);
        }
    }
    Err(Error::Numeric(format!(
        "bessel_zero: scan exhausted for nu={nu} after {from}"
    )))
}

/// Safeguarded Newton refinement inside a sign-change bracket.
fn refine_zero(nu: f64, mut lo: f64, mut hi: f64, mut f_lo: f64, mut f_hi: f64) -> Result<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = bessel_j(nu, x)?;
        if f == 0.0 {
            return Ok(x);
        }
        if f.signum() == f_lo.signum() {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
            f_hi = f;
        }
        let df = bessel_j_prime(nu, x)?;
        let newton = x - f / df;
        x = if df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-13 * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Numeric(format!(
        "bessel_zero: refinement stalled, bracket [{lo}, {hi}], values [{f_lo}, {f_hi}]"
    )))
}
