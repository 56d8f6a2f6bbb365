//! Exact Dirichlet spectrum of the unit n-ball.
//!
//! Every eigenvalue of the ball is `j_{nu,p}^2` with `nu = d + (n-2)/2`
//! for a unique pair `(d, p)`; its multiplicity is the dimension of the
//! space of degree-`d` harmonic homogeneous polynomials. Distinct `(d, p)`
//! pairs never share a zero, so enumeration reduces to generating zeros
//! over a sufficient `(d, p)` frontier and sorting.

use crate::bessel::{bessel_j, bessel_j_prime, bessel_zeros_up_to};
use crate::{unit_ball_volume, Error, Result};

/// A single Laplace eigenmode of the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMode {
    /// Ambient dimension.
    pub n: u32,
    /// Angular degree of the harmonic polynomial factor.
    pub d: u32,
    /// Radial index: which positive zero of `J_nu` is used.
    pub p: u32,
    /// Bessel order `d + (n-2)/2`.
    pub nu: f64,
    /// The zero `j_{nu,p}`.
    pub zero: f64,
    /// Eigenvalue `zero^2`.
    pub lambda: f64,
    /// Multiplicity `dim H_{n,d}`.
    pub mult: u64,
    /// First 1-based index this mode occupies in the ordered spectrum.
    pub index_lo: u64,
    /// Last 1-based index this mode occupies.
    pub index_hi: u64,
}

/// Ordered ball spectrum covering indices `1..=count`.
#[derive(Debug, Clone)]
pub struct BallSpectrum {
    pub n: u32,
    pub modes: Vec<BallMode>,
    pub count: u64,
    /// Pairs of adjacent distinct modes whose zeros differ by less than 1e-9.
    pub near_collisions: Vec<(usize, usize, f64)>,
}

/// Li-Yau constant `a_n = (n/(n+2)) 4 pi^2 / omega_n^{4/n}`.
pub fn li_yau_constant(n: u32) -> f64 {
    let nf = n as f64;
    let omega = unit_ball_volume(n);
    (nf / (nf + 2.0)) * 4.0 * std::f64::consts::PI.powi(2) / omega.powf(4.0 / nf)
}

/// Dimension of the space of harmonic homogeneous polynomials of degree `d`
/// in `n` variables.
pub fn harmonic_dim(n: u32, d: u32) -> Result<u64> {
    if n < 2 {
        return Err(Error::Invalid(format!("harmonic_dim requires n >= 2, got {n}")));
    }
    if d > 10_000 {
        return Err(Error::Invalid(format!("harmonic_dim: degree {d} exceeds the cap 10^4")));
    }
    if d == 0 {
        return Ok(1);
    }
    if n == 2 {
        return Ok(2);
    }
    // (2d + n - 2) (d + n - 3)! / (d! (n-2)!) computed as a running product
    // with overflow detection.
    let mut num: u128 = (2 * d as u128) + (n as u128) - 2;
    // (d + n - 3)! / d! = (d+1)(d+2)...(d+n-3)
    for f in 1..=(n - 3) {
        num = num
            .checked_mul(d as u128 + f as u128)
            .ok_or_else(|| Error::Numeric("harmonic_dim: integer overflow".into()))?;
    }
    let mut den: u128 = 1;
    for f in 1..=(n - 2) {
        den *= f as u128;
    }
    let v = num / den;
    debug_assert_eq!(num % den, 0);
    u64::try_from(v).map_err(|_| Error::Numeric("harmonic_dim: result exceeds u64".into()))
}

/// Enumerate the ball spectrum covering at least indices `1..=k_target`.
pub fn enumerate_spectrum(n: u32, k_target: u64) -> Result<BallSpectrum> {
    if n < 2 {
        return Err(Error::Invalid(format!("dimension must be >= 2, got {n}")));
    }
    if k_target == 0 || k_target > 100_000 {
        return Err(Error::Invalid(format!("index count must be in 1..=10^5, got {k_target}")));
    }
    let nf = n as f64;
    let half_shift = (nf - 2.0) / 2.0;
    let lambda_1 = {
        let nu0 = half_shift;
        let j = crate::bessel::bessel_zero(nu0, 1)?;
        j * j
    };
    // Chen-Yang upper bound on lambda_K gives a sufficient zero frontier:
    // j_{nu,p} is increasing in both nu and p, so no mode outside the
    // frontier can undercut a mode inside it.
    let lambda_cap = (1.0 + 4.0 / nf) * lambda_1 * (k_target as f64).powf(2.0 / nf);
    let j_bound = lambda_cap.sqrt() * 1.2;

    let mut modes: Vec<BallMode> = Vec::new();
    let mut d = 0u32;
    loop {
        let nu = d as f64 + half_shift;
        let zeros = bessel_zeros_up_to(nu, j_bound)?;
        if zeros.is_empty() {
            break;
        }
        let mult = harmonic_dim(n, d)?;
        for (i, &z) in zeros.iter().enumerate() {
            modes.push(BallMode {
                n,
                d,
                p: (i + 1) as u32,
                nu,
                zero: z,
                lambda: z * z,
                mult,
                index_lo: 0,
                index_hi: 0,
            });
        }
        d += 1;
    }
    modes.sort_by(|a, b| a.zero.partial_cmp(&b.zero).unwrap());

    let mut near_collisions = Vec::new();
    for i in 1..modes.len() {
        let gap = modes[i].zero - modes[i - 1].zero;
        if gap < 1e-9 {
            near_collisions.push((i - 1, i, gap));
        }
    }

    let mut idx = 0u64;
    for m in modes.iter_mut() {
        m.index_lo = idx + 1;
        m.index_hi = idx + m.mult;
        idx = m.index_hi;
    }
    if idx < k_target {
        return Err(Error::Numeric(format!(
            "spectrum enumeration incomplete: frontier covered {idx} indices, requested {k_target}"
        )));
    }
    Ok(BallSpectrum { n, modes, count: idx, near_collisions })
}

impl BallSpectrum {
    /// Eigenvalue at 1-based index `k`.
    pub fn lambda(&self, k: u64) -> Result<f64> {
        self.mode_at(k).map(|m| m.lambda)
    }

    /// The mode occupying index `k`.
    pub fn mode_at(&self, k: u64) -> Result<&BallMode> {
        if k == 0 || k > self.count {
            return Err(Error::Invalid(format!(
                "index {k} outside enumerated range 1..={}",
                self.count
            )));
        }
        let pos = self
            .modes
            .partition_point(|m| m.index_hi < k);
        Ok(&self.modes[pos])
    }

    /// The full equality cluster `[index_lo, index_hi]` containing index `k`.
    pub fn cluster_of(&self, k: u64) -> Result<(u64, u64)> {
        let m = self.mode_at(k)?;
        Ok((m.index_lo, m.index_hi))
    }

    /// Spectral gap `g_n(k) = min(1, inf_{lambda_i != lambda_k} |lambda_i - lambda_k|)`.
    ///
    /// Errors if the enumeration does not extend past the cluster of `k`.
    pub fn spectral_gap(&self, k: u64) -> Result<f64> {
        let m = self.mode_at(k)?;
        let pos = self.modes.iter().position(|x| std::ptr::eq(x, m)).unwrap();
        if pos + 1 >= self.modes.len() {
            return Err(Error::Numeric(format!(
                "spectral_gap: enumeration depth insufficient above index {k}"
            )));
        }
        let up = self.modes[pos + 1].lambda - m.lambda;
        let down = if pos > 0 {
            m.lambda - self.modes[pos - 1].lambda
        } else {
            f64::INFINITY
        };
        Ok(1.0f64.min(up.min(down)))
    }

    /// Indices `k <= k_max` whose eigenvalue is simple.
    pub fn simple_indices(&self, k_max: u64) -> Vec<u64> {
        self.modes
            .iter()
            .filter(|m| m.mult == 1 && m.index_lo <= k_max)
            .map(|m| m.index_lo)
            .collect()
    }

    /// Smallest observed zero gap between adjacent distinct modes.
    pub fn min_zero_gap(&self) -> f64 {
        self.modes
            .windows(2)
            .map(|w| w[1].zero - w[0].zero)
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV export: `index_lo,index_hi,d,p,nu,zero,lambda,mult` per mode.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index_lo,index_hi,d,p,nu,zero,lambda,mult\n");
        for m in &self.modes {
            out.push_str(&format!(
                "{},{},{},{},{:.17e},{:.17e},{:.17e},{}\n",
                m.index_lo, m.index_hi, m.d, m.p, m.nu, m.zero, m.lambda, m.mult
            ));
        }
        out
    }
}

/// Torsional rigidity of the unit n-ball, `T(B) = omega_n / (n (n+2))`.
pub fn ball_torsion(n: u32) -> f64 {
    let nf = n as f64;
    unit_ball_volume(n) / (nf * (nf + 2.0))
}

/// Constant value of `sum_{i=k}^{l} |grad u_i|^2` on the boundary sphere,
/// for a full equality cluster `[k, l]` of the ball spectrum.
///
/// The radial factor of each eigenfunction is normalized by quadrature of
/// `int_0^1 J_nu(j r)^2 r dr`, the boundary gradient is `j |J_nu'(j)|`
/// times the angular factor, and the angular sum over an orthonormal
/// harmonic basis of fixed degree is constant on the sphere by the
/// addition theorem, equal to `mult / |S^{n-1}|`.
pub fn cluster_boundary_gradient_sq(spec: &BallSpectrum, k: u64, l: u64) -> Result<f64> {
    let mode = spec.mode_at(k)?;
    if mode.index_lo != k || mode.index_hi != l {
        return Err(Error::Invalid(format!(
            "[{k}, {l}] is not a full equality cluster (expected [{}, {}])",
            mode.index_lo, mode.index_hi
        )));
    }
    let nu = mode.nu;
    let j = mode.zero;
    // L^2 normalization of the radial factor: int_0^1 J_nu(j r)^2 r dr,
    // composite Simpson; the closed form J_nu'(j)^2 / 2 is asserted in tests.
    let m_pts = 4096usize;
    let h = 1.0 / m_pts as f64;
    let f = |r: f64| -> Result<f64> {
        let v = bessel_j(nu, j * r)?;
        Ok(v * v * r)
    };
    let mut quad = f(0.0)? + f(1.0)?;
    for i in 1..m_pts {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        quad += w * f(i as f64 * h)?;
    }
    quad *= h / 3.0;
    let djdr = j * bessel_j_prime(nu, j)?;
    let sphere_area = mode.n as f64 * unit_ball_volume(mode.n);
    Ok(djdr * djdr / quad * mode.mult as f64 / sphere_area)
}
