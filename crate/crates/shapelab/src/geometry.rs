//! Nearly circular planar domains from Fourier boundary profiles.
//!
//! A domain is the star-shaped set `{ r < scale * (1 + h(theta)) }`
//! translated so its barycenter sits at the origin, where `h` is a
//! trigonometric polynomial with `sup |h| <= 1/2`. Area normalization and
//! barycenter are analytic in the Fourier coefficients, so constructed
//! domains have area `pi` to machine precision.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Truncated Fourier series on the circle:
/// `h(t) = a_0 + sum_{m=1}^{M} (a_m cos mt + b_m sin mt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierProfile {
    /// Cosine coefficients `a_0..a_M`.
    pub a: Vec<f64>,
    /// Sine coefficients `b_1..b_M`.
    pub b: Vec<f64>,
}

impl FourierProfile {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Invalid("profile needs at least a_0".into()));
        }
        if b.len() + 1 != a.len() {
            return Err(Error::Invalid(format!(
                "coefficient length mismatch: {} cosine vs {} sine terms",
                a.len(),
                b.len()
            )));
        }
        let p = Self { a, b };
        p.check_sup_norm()?;
        Ok(p)
    }

    /// Zero profile (the unit disk).
    pub fn zero() -> Self {
        Self { a: vec![0.0], b: vec![] }
    }

    /// Trigonometric polynomial without the sup-norm restriction. For
    /// perturbation directions, which are not domain profiles themselves.
    pub fn direction(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(Error::Invalid("coefficient length mismatch".into()));
        }
        Ok(Self { a, b })
    }

    /// Single-mode direction `amp * cos(m t)` (or `amp * sin(m t)`),
    /// unrestricted amplitude.
    pub fn mode(m: usize, amp: f64, sine: bool) -> Self {
        let mut a = vec![0.0; m + 1];
        let mut b = vec![0.0; m];
        if m == 0 {
            a[0] = amp;
        } else if sine {
            b[m - 1] = amp;
        } else {
            a[m] = amp;
        }
        Self { a, b }
    }

    /// Single-mode profile `amp * cos(m t)` (or `amp * sin(m t)`).
    pub fn single(m: usize, amp: f64, sine: bool) -> Result<Self> {
        let mut a = vec![0.0; m + 1];
        let mut b = vec![0.0; m];
        if m == 0 {
            a[0] = amp;
        } else if sine {
            b[m - 1] = amp;
        } else {
            a[m] = amp;
        }
        Self::new(a, b)
    }

    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.a[0];
        for m in 1..self.a.len() {
            let mt = m as f64 * t;
            v += self.a[m] * mt.cos() + self.b[m - 1] * mt.sin();
        }
        v
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for m in 1..self.a.len() {
            let mf = m as f64;
            let mt = mf * t;
            v += -self.a[m] * mf * mt.sin() + self.b[m - 1] * mf * mt.cos();
        }
        v
    }

    pub fn eval_deriv2(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for m in 1..self.a.len() {
            let mf = m as f64;
            let mt = mf * t;
            v += -self.a[m] * mf * mf * mt.cos() - self.b[m - 1] * mf * mf * mt.sin();
        }
        v
    }

    /// Scale all coefficients by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            a: self.a.iter().map(|x| c * x).collect(),
            b: self.b.iter().map(|x| c * x).collect(),
        }
    }

    /// Rotate the profile by angle `phi` (relabeling of the boundary).
    pub fn rotated(&self, phi: f64) -> Self {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for m in 1..self.a.len() {
            let mf = m as f64;
            let (c, s) = ((mf * phi).cos(), (mf * phi).sin());
            a[m] = self.a[m] * c + self.b[m - 1] * s;
            b[m - 1] = -self.a[m] * s + self.b[m - 1] * c;
        }
        Self { a, b }
    }

    /// Enforce `sup |h| <= 1/2` by dense sampling plus a derivative bound.
    fn check_sup_norm(&self) -> Result<()> {
        let m_deg = self.degree().max(1);
        let n = 16 * m_deg.max(16);
        let deriv_bound: f64 = (1..self.a.len())
            .map(|m| m as f64 * (self.a[m].abs() + self.b[m - 1].abs()))
            .sum();
        let step = 2.0 * PI / n as f64;
        let mut sup = 0.0f64;
        for i in 0..n {
            sup = sup.max(self.eval(i as f64 * step).abs());
        }
        if sup + deriv_bound * step / 2.0 > 0.5 {
            return Err(Error::Invalid(format!(
                "profile sup norm {:.3} (+ slack) exceeds 1/2",
                sup
            )));
        }
        Ok(())
    }

    /// Parse the plain-text format: one line `m a_m b_m` per mode.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, f64, f64)> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Invalid(format!("profile line {} malformed: {line}", ln + 1)));
            }
            let m: usize = parts[0]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad mode number on line {}", ln + 1)))?;
            let am: f64 = parts[1]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad a_m on line {}", ln + 1)))?;
            let bm: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad b_m on line {}", ln + 1)))?;
            entries.push((m, am, bm));
        }
        let deg = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut a = vec![0.0; deg + 1];
        let mut b = vec![0.0; deg];
        for (m, am, bm) in entries {
            a[m] = am;
            if m > 0 {
                b[m - 1] = bm;
            } else if bm != 0.0 {
                return Err(Error::Invalid("mode 0 has no sine coefficient".into()));
            }
        }
        Self::new(a, b)
    }

    /// Serialize to the plain-text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("0 {:.17e} 0\n", self.a[0]));
        for m in 1..self.a.len() {
            out.push_str(&format!("{} {:.17e} {:.17e}\n", m, self.a[m], self.b[m - 1]));
        }
        out
    }
}

/// Volume-normalized centered star-shaped domain.
#[derive(Debug, Clone)]
pub struct Domain2D {
    pub profile: FourierProfile,
    /// Scale factor making the area exactly `pi`.
    pub scale: f64,
    /// Translation subtracted so the stored domain is centered.
    pub barycenter_shift: [f64; 2],
}

/// Norms of a boundary profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileNorms {
    pub l1: f64,
    pub l2: f64,
    /// `H^{1/2}` norm defined via the harmonic extension.
    pub h_half: f64,
    /// Sampled sup norm of `h`.
    pub c0: f64,
    /// Sampled sup norm of `h'`.
    pub c1: f64,
}

/// Area of `{ r < 1 + h }` from the Fourier coefficients:
/// `(1/2) int (1+h)^2 = pi (1 + 2 a_0 + a_0^2 + (1/2) sum (a_m^2 + b_m^2))`.
pub fn raw_area(profile: &FourierProfile) -> f64 {
    let a0 = profile.a[0];
    let mut s = 0.0;
    for m in 1..profile.a.len() {
        s += profile.a[m] * profile.a[m] + profile.b[m - 1] * profile.b[m - 1];
    }
    PI * (1.0 + 2.0 * a0 + a0 * a0 + 0.5 * s)
}

/// Build the volume-normalized centered domain for a boundary profile.
pub fn make_domain(profile: FourierProfile) -> Result<Domain2D> {
    // radius positivity
    let n = 64 * profile.degree().max(4);
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        if 1.0 + profile.eval(t) <= 0.0 {
            return Err(Error::Invalid("boundary radius non-positive".into()));
        }
    }
    profile.check_sup_norm()?;
    let scale = (PI / raw_area(&profile)).sqrt();
    // barycenter = (1/pi) (1/3) int R^3 (cos t, sin t) dt with R = scale (1+h);
    // the integrand is a trigonometric polynomial, so the uniform trapezoid
    // rule below is exact once the node count exceeds the degree.
    let nq = (4 * (profile.degree() + 2)).max(64);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..nq {
        let t = 2.0 * PI * i as f64 / nq as f64;
        let r = scale * (1.0 + profile.eval(t));
        let r3 = r * r * r / 3.0;
        cx += r3 * t.cos();
        cy += r3 * t.sin();
    }
    let w = 2.0 * PI / nq as f64 / PI;
    Ok(Domain2D { profile, scale, barycenter_shift: [cx * w, cy * w] })
}

impl Domain2D {
    /// The unit disk.
    pub fn disk() -> Self {
        Domain2D { profile: FourierProfile::zero(), scale: 1.0, barycenter_shift: [0.0, 0.0] }
    }

    /// Boundary radius of the centered domain along polar angle `theta`.
    ///
    /// Solves for the parameter `t` whose (translated) boundary point lies
    /// on the ray of angle `theta`; Newton from `t = theta` with the cross
    /// product as residual.
    pub fn radius(&self, theta: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let c = self.barycenter_shift;
        let mut t = theta;
        for _ in 0..60 {
            let r = self.scale * (1.0 + self.profile.eval(t));
            let dr = self.scale * self.profile.eval_deriv(t);
            let (s, co) = t.sin_cos();
            let px = r * co - c[0];
            let py = r * s - c[1];
            // cross((px,py), (ct,st)) = 0 on the ray
            let f = px * st - py * ct;
            let dpx = dr * co - r * s;
            let dpy = dr * s + r * co;
            let df = dpx * st - dpy * ct;
            let step = f / df;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let r = self.scale * (1.0 + self.profile.eval(t));
        let (s, co) = t.sin_cos();
        (r * co - c[0]) * ct + (r * s - c[1]) * st
    }

    /// Boundary parameter `t` matching polar angle `theta` (see [`radius`]).
    pub fn boundary_param(&self, theta: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let c = self.barycenter_shift;
        let mut t = theta;
        for _ in 0..60 {
            let r = self.scale * (1.0 + self.profile.eval(t));
            let dr = self.scale * self.profile.eval_deriv(t);
            let (s, co) = t.sin_cos();
            let f = (r * co - c[0]) * st - (r * s - c[1]) * ct;
            let dpx = dr * co - r * s;
            let dpy = dr * s + r * co;
            let df = dpx * st - dpy * ct;
            t -= f / df;
        }
        t
    }

    /// Area of the domain (always `pi` by construction; recomputed here).
    pub fn area(&self) -> f64 {
        self.scale * self.scale * raw_area(&self.profile)
    }

    /// Barycenter of the centered domain, by dense polar quadrature.
    pub fn barycenter(&self) -> [f64; 2] {
        let nq = 4096;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..nq {
            let t = 2.0 * PI * (i as f64 + 0.5) / nq as f64;
            let r = self.radius(t);
            let r3 = r * r * r / 3.0;
            cx += r3 * t.cos();
            cy += r3 * t.sin();
        }
        let w = 2.0 * PI / nq as f64 / PI;
        [cx * w, cy * w]
    }

    /// CSV boundary polyline `(theta, r)` with `n` samples.
    pub fn boundary_csv(&self, n: usize) -> String {
        let mut out = String::from("theta,r\n");
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            out.push_str(&format!("{:.17e},{:.17e}\n", t, self.radius(t)));
        }
        out
    }
}

/// `|Omega Delta (B + shift)|` by angular quadrature of radial overlaps.
///
/// Returns the value and a quadrature error estimate (difference against
/// the half-resolution rule).
pub fn sym_diff_with_ball(domain: &Domain2D, shift: [f64; 2]) -> (f64, f64) {
    let coarse = sym_diff_quad(domain, shift, 1024);
    let fine = sym_diff_quad(domain, shift, 2048);
    (fine, (fine - coarse).abs())
}

fn sym_diff_quad(domain: &Domain2D, shift: [f64; 2], n: usize) -> f64 {
    // |A Delta B| = |A| + |B| - 2 |A cap B|; the intersection is computed in
    // polar coordinates about the origin (inside both sets for |shift| < 1/2).
    let d2 = shift[0] * shift[0] + shift[1] * shift[1];
    let mut inter = 0.0;
    for i in 0..n {
        let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
        let r_dom = domain.radius(t);
        let xe = shift[0] * t.cos() + shift[1] * t.sin();
        let r_ball = xe + (1.0 - d2 + xe * xe).sqrt();
        let r = r_dom.min(r_ball);
        inter += 0.5 * r * r;
    }
    inter *= 2.0 * PI / n as f64;
    domain.area() + PI - 2.0 * inter
}

/// Fraenkel asymmetry: `inf_x |(B + x) Delta Omega|` by compass search over
/// translations, started at the origin. Returns the value and an error
/// estimate combining search and quadrature tolerances.
pub fn fraenkel_asymmetry(domain: &Domain2D) -> Result<(f64, f64)> {
    let f = |x: [f64; 2]| sym_diff_with_ball(domain, x).0;
    let mut center = [0.0f64, 0.0];
    let mut best = f(center);
    let mut step = 0.05;
    while step > 2e-5 {
        let mut improved = false;
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0f64]] {
            let cand = [center[0] + step * dir[0], center[1] + step * dir[1]];
            if cand[0] * cand[0] + cand[1] * cand[1] > 0.25 {
                return Err(Error::Numeric(
                    "fraenkel_asymmetry: translation search left the trust region".into(),
                ));
            }
            let v = f(cand);
            if v < best {
                best = v;
                center = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let (val, quad_err) = sym_diff_with_ball(domain, center);
    Ok((val, quad_err + 2e-3))
}

/// Closed-form and quadrature norms of a profile.
pub fn profile_norms(profile: &FourierProfile) -> ProfileNorms {
    let a0 = profile.a[0];
    let mut l2_sq = 2.0 * PI * a0 * a0;
    let mut hh_sq = 2.0 * PI * a0 * a0;
    for m in 1..profile.a.len() {
        let mag = profile.a[m] * profile.a[m] + profile.b[m - 1] * profile.b[m - 1];
        l2_sq += PI * mag;
        // harmonic extension of cos/sin(mt) is r^m cos/sin(mt) with
        // Dirichlet energy pi m, hence the (1 + m) weight
        hh_sq += PI * (1.0 + m as f64) * mag;
    }
    let l1 = adaptive_abs_integral(profile);
    let nq = 4096;
    let mut c0 = 0.0f64;
    let mut c1 = 0.0f64;
    for i in 0..nq {
        let t = 2.0 * PI * i as f64 / nq as f64;
        c0 = c0.max(profile.eval(t).abs());
        c1 = c1.max(profile.eval_deriv(t).abs());
    }
    ProfileNorms { l1, l2: l2_sq.sqrt(), h_half: hh_sq.sqrt(), c0, c1 }
}

/// Adaptive Simpson quadrature of `|h|` over the circle.
fn adaptive_abs_integral(profile: &FourierProfile) -> f64 {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let f = |t: f64| profile.eval(t).abs();
    // split at a resolution past the highest mode so kinks are localized
    let n = (4 * profile.degree().max(4)).max(16);
    let mut total = 0.0;
    for i in 0..n {
        let a = 2.0 * PI * i as f64 / n as f64;
        let b = 2.0 * PI * (i + 1) as f64 / n as f64;
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        total += recurse(&f, a, b, fa, fm, fb, whole, 1e-12, 24);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_profile_is_unit_disk() {
        let d = make_domain(FourierProfile::zero()).unwrap();
        assert_eq!(d.scale, 1.0);
        assert_abs_diff_eq!(d.barycenter_shift[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.barycenter_shift[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.radius(1.3), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cos2_scale_matches_formula() {
        let eps = 0.1;
        let d = make_domain(FourierProfile::single(2, eps, false).unwrap()).unwrap();
        assert_abs_diff_eq!(d.scale, (1.0 + eps * eps / 2.0f64).powf(-0.5), epsilon = 1e-14);
        assert_abs_diff_eq!(d.barycenter_shift[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.area(), PI, epsilon = 1e-12);
    }

    #[test]
    fn cos1_profile_centers_properly() {
        let eps = 0.08;
        let d = make_domain(FourierProfile::single(1, eps, false).unwrap()).unwrap();
        // first-order shift is (eps, 0)
        assert!((d.barycenter_shift[0] - eps).abs() < 0.02 * eps);
        assert_abs_diff_eq!(d.barycenter_shift[1], 0.0, epsilon = 1e-13);
        let bc = d.barycenter();
        assert!(bc[0].abs() < 1e-10 && bc[1].abs() < 1e-10, "barycenter {bc:?}");
        assert_abs_diff_eq!(d.area(), PI, epsilon = 1e-12);
    }

    #[test]
    fn constructed_domains_are_normalized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let deg = rng.gen_range(1..=6);
            let mut a = vec![0.0; deg + 1];
            let mut b = vec![0.0; deg];
            for m in 1..=deg {
                a[m] = rng.gen_range(-0.04..0.04);
                b[m - 1] = rng.gen_range(-0.04..0.04);
            }
            let d = make_domain(FourierProfile::new(a, b).unwrap()).unwrap();
            assert_abs_diff_eq!(d.area(), PI, epsilon = 1e-12);
            let bc = d.barycenter();
            assert!(bc[0].abs() < 1e-10 && bc[1].abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_profile_rejected() {
        // 1 + h dips below zero
        assert!(FourierProfile::new(vec![0.0, 0.9], vec![0.0]).is_err());
    }

    #[test]
    fn sym_diff_disk_against_lens_expansion() {
        let disk = Domain2D::disk();
        let (v0, _) = sym_diff_with_ball(&disk, [0.0, 0.0]);
        assert!(v0.abs() < 1e-12);
        // two unit disks at distance t: |sym diff| = 4 t + O(t^3)
        for &t in &[0.01, 0.02, 0.05] {
            let (v, _) = sym_diff_with_ball(&disk, [t, 0.0]);
            assert!((v - 4.0 * t).abs() < 0.2 * t * t + 1e-6, "t={t}, v={v}");
        }
        // monotone in |shift|
        let mut prev = 0.0;
        for i in 1..=8 {
            let t = 0.05 * i as f64;
            let (v, _) = sym_diff_with_ball(&disk, [0.0, t]);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn fraenkel_disk_is_zero() {
        let (f, _) = fraenkel_asymmetry(&Domain2D::disk()).unwrap();
        assert!(f.abs() < 2e-3);
    }

    #[test]
    fn fraenkel_cos2_against_monte_carlo() {
        let d = make_domain(FourierProfile::single(2, 0.1, false).unwrap()).unwrap();
        let (f, _) = fraenkel_asymmetry(&d).unwrap();
        assert!(f > 0.0);
        // Monte-Carlo oracle for |Omega Delta B| at the centered position
        // (optimal shift is 0 by symmetry)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 10_000_000usize;
        let box_half = 1.3f64;
        let mut hits = 0u64;
        for _ in 0..n {
            let x = rng.gen_range(-box_half..box_half);
            let y = rng.gen_range(-box_half..box_half);
            let r = (x * x + y * y).sqrt();
            let t = y.atan2(x);
            let in_dom = r < d.radius(t);
            let in_ball = r < 1.0;
            if in_dom != in_ball {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64 * (2.0 * box_half) * (2.0 * box_half);
        assert!((f - mc).abs() < 1e-3, "search {f} vs MC {mc}");
    }

    #[test]
    fn fraenkel_rotation_invariance() {
        let p = FourierProfile::new(vec![0.0, 0.0, 0.08, 0.02], vec![0.0, 0.0, 0.05]).unwrap();
        let d1 = make_domain(p.clone()).unwrap();
        let d2 = make_domain(p.rotated(0.73)).unwrap();
        let (f1, e1) = fraenkel_asymmetry(&d1).unwrap();
        let (f2, e2) = fraenkel_asymmetry(&d2).unwrap();
        assert!((f1 - f2).abs() < e1 + e2, "{f1} vs {f2}");
    }

    #[test]
    fn norms_closed_forms() {
        // h = cos(mt): l2^2 = pi, energy = pi m, h_half^2 = pi (1 + m)
        for m in [1usize, 2, 5] {
            let p = FourierProfile::single(m, 0.3, false).unwrap();
            let n = profile_norms(&p);
            assert_abs_diff_eq!(n.l2 * n.l2, PI * 0.09, epsilon = 1e-12);
            assert_abs_diff_eq!(n.h_half * n.h_half, PI * (1.0 + m as f64) * 0.09, epsilon = 1e-12);
        }
        // constant profile: h_half^2 = 2 pi c^2
        let p = FourierProfile::single(0, 0.2, false).unwrap();
        let n = profile_norms(&p);
        assert_abs_diff_eq!(n.h_half * n.h_half, 2.0 * PI * 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(n.l1, 2.0 * PI * 0.2, epsilon = 1e-9);
        // mixed: h = 0.3 cos 2t + 0.1 sin 5t
        let p = FourierProfile::new(vec![0.0, 0.0, 0.3, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0, 0.1])
            .unwrap();
        let n = profile_norms(&p);
        assert_abs_diff_eq!(
            n.h_half * n.h_half,
            PI * (3.0 * 0.09 + 6.0 * 0.01),
            epsilon = 1e-12
        );
    }

    #[test]
    fn profile_text_round_trip() {
        let p = FourierProfile::new(vec![0.01, 0.0, 0.1], vec![0.0, -0.05]).unwrap();
        let q = FourierProfile::parse(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn h_half_dominates_l2(amp2 in -0.15f64..0.15, amp3 in -0.15f64..0.15) {
            let p = FourierProfile::new(vec![0.0, 0.0, amp2, amp3], vec![0.0, 0.0, 0.0]).unwrap();
            let n = profile_norms(&p);
            prop_assert!(n.h_half >= n.l2 - 1e-14);
        }

        #[test]
        fn fraenkel_bounded_by_centered_sym_diff(amp in 0.0f64..0.12) {
            let d = make_domain(FourierProfile::single(3, amp, false).unwrap()).unwrap();
            let (f, _) = fraenkel_asymmetry(&d).unwrap();
            let (sd, e) = sym_diff_with_ball(&d, [0.0, 0.0]);
            prop_assert!(f <= sd + e + 1e-9);
        }

        #[test]
        fn fraenkel_reflection_invariance(a2 in -0.06f64..0.06, b3 in -0.06f64..0.06) {
            let p1 = FourierProfile::new(vec![0.0, 0.0, a2, 0.0], vec![0.0, 0.0, b3]).unwrap();
            let p2 = FourierProfile::new(vec![0.0, 0.0, a2, 0.0], vec![0.0, 0.0, -b3]).unwrap();
            let (f1, e1) = fraenkel_asymmetry(&make_domain(p1).unwrap()).unwrap();
            let (f2, e2) = fraenkel_asymmetry(&make_domain(p2).unwrap()).unwrap();
            prop_assert!((f1 - f2).abs() <= e1 + e2);
        }
    }
}
