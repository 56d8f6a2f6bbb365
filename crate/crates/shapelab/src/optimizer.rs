//! Local-optimality probes of penalized torsion functionals
//! `1/T + delta * F(lambda)` at the disk: finite-difference Hessian scans
//! over Fourier boundary modes, stability thresholds in `delta`, the
//! reverse torsion-eigenvalue exponent, and projected gradient descent.
//!
//! The search space is the volume-normalized class of nearly circular
//! domains `r = 1 + h(theta)`; modes `m = 0` (volume) and `m = 1`
//! (translation) are excluded from the scan directions. The constraint is
//! enforced exactly by solving for the mean coefficient `a_0`.

use crate::ball_spectrum::{ball_torsion, enumerate_spectrum};
use crate::dirichlet_solver::{boundary_gradient_trace, build_mesh, solve_eigs, solve_torsion};
use crate::geometry::{make_domain, FourierProfile};
use crate::shape_calculus::boundary_weighted_integral;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Eigenvalue part of a penalized functional. Only combinations that are
/// differentiable at the disk are accepted: a simple eigenvalue, or a
/// symmetric function of a full equality cluster.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum EigenFunctional {
    Single { k: usize },
    ClusterSum { lo: usize, hi: usize },
    ClusterGeomMean { lo: usize, hi: usize },
}

impl EigenFunctional {
    pub fn k_max(&self) -> usize {
        match *self {
            EigenFunctional::Single { k } => k,
            EigenFunctional::ClusterSum { hi, .. } | EigenFunctional::ClusterGeomMean { hi, .. } => hi,
        }
    }

    pub fn eval(&self, lambdas: &[f64]) -> f64 {
        match *self {
            EigenFunctional::Single { k } => lambdas[k - 1],
            EigenFunctional::ClusterSum { lo, hi } => lambdas[lo - 1..hi].iter().sum(),
            EigenFunctional::ClusterGeomMean { lo, hi } => {
                let m = (hi - lo + 1) as f64;
                (lambdas[lo - 1..hi].iter().map(|l| l.ln()).sum::<f64>() / m).exp()
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            EigenFunctional::Single { k } => format!("lambda_{k}"),
            EigenFunctional::ClusterSum { lo, hi } => format!("sum(lambda_{lo}..{hi})"),
            EigenFunctional::ClusterGeomMean { lo, hi } => format!("geomean(lambda_{lo}..{hi})"),
        }
    }
}

/// `1/T + delta * F(lambda)` over volume-normalized domains.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalSpec {
    pub eigen: EigenFunctional,
    pub delta: f64,
}

impl FunctionalSpec {
    /// Validates differentiability at the disk: the index range must be a
    /// simple eigenvalue or a full equality cluster, and the eigenvalue
    /// function must have equal partial derivatives across the cluster
    /// (checked by finite differences at the disk spectrum).
    pub fn new(eigen: EigenFunctional, delta: f64) -> Result<Self> {
        let spec = enumerate_spectrum(2, eigen.k_max() as u64 + 1)?;
        let (lo, hi) = match eigen {
            EigenFunctional::Single { k } => {
                let mode = spec.mode_at(k as u64)?;
                if mode.mult != 1 {
                    return Err(Error::Invalid(format!(
                        "disk eigenvalue {k} is multiple; a single eigenvalue there is not \
                         differentiable — use the full cluster {}..{}",
                        mode.index_lo, mode.index_hi
                    )));
                }
                (k, k)
            }
            EigenFunctional::ClusterSum { lo, hi } | EigenFunctional::ClusterGeomMean { lo, hi } => {
                let mode = spec.mode_at(lo as u64)?;
                if (mode.index_lo, mode.index_hi) != (lo as u64, hi as u64) {
                    return Err(Error::Invalid(format!(
                        "{lo}..{hi} is not a full equality cluster of the disk \
                         (cluster is {}..{})",
                        mode.index_lo, mode.index_hi
                    )));
                }
                (lo, hi)
            }
        };
        // symmetry of the partials across the cluster
        let lambdas: Vec<f64> = (1..=hi as u64).map(|k| spec.lambda(k).unwrap()).collect();
        let eps = 1e-6;
        let mut partials = Vec::new();
        for i in lo..=hi {
            let mut up = lambdas.clone();
            let mut dn = lambdas.clone();
            up[i - 1] += eps;
            dn[i - 1] -= eps;
            partials.push((eigen.eval(&up) - eigen.eval(&dn)) / (2.0 * eps));
        }
        let pmax = partials.iter().cloned().fold(f64::MIN, f64::max);
        let pmin = partials.iter().cloned().fold(f64::MAX, f64::min);
        if pmax - pmin > 1e-6 * pmax.abs().max(1e-12) {
            return Err(Error::Invalid(format!(
                "eigenvalue functional is not symmetric on the cluster: partials {partials:?}"
            )));
        }
        Ok(FunctionalSpec { eigen, delta })
    }
}

// ---------------------------------------------------------------------------
// coefficient space

/// Scan directions `cos(m theta), sin(m theta)` for `m = 2..=m_max`.
fn directions(m_max: usize) -> Vec<(String, usize, bool)> {
    let mut dirs = Vec::new();
    for m in 2..=m_max {
        dirs.push((format!("cos{m}"), m, false));
        dirs.push((format!("sin{m}"), m, true));
    }
    dirs
}

/// Profile with the given mode coefficients and `a_0` chosen so that the
/// enclosed area is exactly pi: `(1+a_0)^2 = 1 - (1/2) sum c^2`.
fn unit_area_profile(coeffs: &[f64], dirs: &[(String, usize, bool)]) -> Result<FourierProfile> {
    let s: f64 = coeffs.iter().map(|c| c * c).sum();
    if s >= 1.8 {
        return Err(Error::Invalid("mode coefficients too large for the unit-area class".into()));
    }
    let a0 = (1.0 - 0.5 * s).sqrt() - 1.0;
    let deg = dirs.iter().map(|d| d.1).max().unwrap_or(0);
    let mut a = vec![0.0; deg + 1];
    let mut b = vec![0.0; deg];
    a[0] = a0;
    for (c, (_, m, sine)) in coeffs.iter().zip(dirs) {
        if *sine {
            b[m - 1] += c;
        } else {
            a[*m] += c;
        }
    }
    FourierProfile::new(a, b)
}

/// `(1/T, F(lambda))` of the unit-area domain with the given coefficients,
/// from single-level FEM solves. The discretization error is smooth in the
/// coefficients, so it cancels out of finite differences.
fn eval_point(
    coeffs: &[f64],
    dirs: &[(String, usize, bool)],
    eigen: EigenFunctional,
    level: u32,
) -> Result<(f64, f64)> {
    let profile = unit_area_profile(coeffs, dirs)?;
    let domain = make_domain(profile)?;
    let mesh = build_mesh(&domain, level)?;
    let t = solve_torsion(&mesh)?.t;
    let res = solve_eigs(&mesh, eigen.k_max())?;
    Ok((1.0 / t, eigen.eval(&res.lambdas)))
}

// ---------------------------------------------------------------------------
// Hessian scan

/// Finite-difference Hessians of `1/T` and of the eigenvalue functional at
/// the disk, over the Fourier mode directions. The combined Hessian of
/// `1/T + delta F` is affine in `delta`, so one scan serves every `delta`.
#[derive(Debug, Clone, Serialize)]
pub struct HessianScan {
    pub functional: String,
    pub m_max: usize,
    pub step: f64,
    pub level: u32,
    pub directions: Vec<String>,
    pub h_torsion: Vec<Vec<f64>>,
    pub h_eigen: Vec<Vec<f64>>,
    pub delta: f64,
    pub min_eigenvalue: f64,
    /// Largest antisymmetric residual seen while symmetrizing; finite
    /// difference noise scale.
    pub fd_noise: f64,
}

impl HessianScan {
    /// Hessian of `1/T + delta F` as a flat matrix.
    pub fn combined(&self, delta: f64) -> Vec<Vec<f64>> {
        let d = self.directions.len();
        (0..d)
            .map(|i| (0..d).map(|j| self.h_torsion[i][j] + delta * self.h_eigen[i][j]).collect())
            .collect()
    }

    pub fn min_eig_at(&self, delta: f64) -> f64 {
        let h = self.combined(delta);
        let d = h.len();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| h[i][j]);
        nalgebra::SymmetricEigen::new(m).eigenvalues.into_iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serialization")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dir_i,dir_j,h_torsion,h_eigen\n");
        for (i, di) in self.directions.iter().enumerate() {
            for (j, dj) in self.directions.iter().enumerate() {
                out.push_str(&format!(
                    "{di},{dj},{:.17e},{:.17e}\n",
                    self.h_torsion[i][j], self.h_eigen[i][j]
                ));
            }
        }
        out
    }
}

/// Second differences of `(1/T, F)` along all direction pairs.
pub fn fd_hessian(spec: &FunctionalSpec, m_max: usize, step: f64, level: u32) -> Result<HessianScan> {
    if !(2..=8).contains(&m_max) {
        return Err(Error::Invalid("mode cutoff must be in 2..=8".into()));
    }
    if !(1e-3..=0.1).contains(&step) {
        return Err(Error::Invalid("step must be in [1e-3, 0.1]".into()));
    }
    let dirs = directions(m_max);
    let d = dirs.len();
    // stencil points: origin, +-e_i, and the four corners per pair
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for i in 0..d {
        for s in [step, -step] {
            let mut p = vec![0.0; d];
            p[i] = s;
            points.push(p);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut p = vec![0.0; d];
                p[i] = si * step;
                p[j] = sj * step;
                points.push(p);
            }
        }
    }
    let values: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| eval_point(p, &dirs, spec.eigen, level))
        .collect::<Result<Vec<_>>>()?;

    let at = |p: &[f64]| -> (f64, f64) {
        let idx = points.iter().position(|q| q == p).unwrap();
        values[idx]
    };
    let f0 = values[0];
    let h2 = step * step;
    let mut h_t = vec![vec![0.0; d]; d];
    let mut h_e = vec![vec![0.0; d]; d];
    for i in 0..d {
        let mut pp = vec![0.0; d];
        pp[i] = step;
        let mut pm = vec![0.0; d];
        pm[i] = -step;
        let (tp, ep) = at(&pp);
        let (tm, em) = at(&pm);
        h_t[i][i] = (tp - 2.0 * f0.0 + tm) / h2;
        h_e[i][i] = (ep - 2.0 * f0.1 + em) / h2;
        for j in i + 1..d {
            let corner = |si: f64, sj: f64| {
                let mut p = vec![0.0; d];
                p[i] = si * step;
                p[j] = sj * step;
                at(&p)
            };
            let (a, b, c, e) = (corner(1.0, 1.0), corner(1.0, -1.0), corner(-1.0, 1.0), corner(-1.0, -1.0));
            let vt = (a.0 - b.0 - c.0 + e.0) / (4.0 * h2);
            let ve = (a.1 - b.1 - c.1 + e.1) / (4.0 * h2);
            h_t[i][j] = vt;
            h_t[j][i] = vt;
            h_e[i][j] = ve;
            h_e[j][i] = ve;
        }
    }
    let mut scan = HessianScan {
        functional: format!("1/T + delta*{}", spec.eigen.label()),
        m_max,
        step,
        level,
        directions: dirs.iter().map(|d| d.0.clone()).collect(),
        h_torsion: h_t,
        h_eigen: h_e,
        delta: spec.delta,
        min_eigenvalue: 0.0,
        fd_noise: 0.0,
    };
    // noise scale: cross-stencil asymmetry is already symmetrized away, so
    // estimate from the zero entries the block structure forces (cos m vs
    // sin m' couplings vanish at the disk by rotational symmetry)
    let mut noise = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if dirs[i].1 != dirs[j].1 {
                noise = noise.max(scan.h_torsion[i][j].abs());
            }
        }
    }
    scan.fd_noise = noise;
    scan.min_eigenvalue = scan.min_eig_at(spec.delta);
    Ok(scan)
}

// ---------------------------------------------------------------------------
// delta thresholds and the reverse exponent

/// Stability interval of `1/T + delta F` at the disk per sign of `delta`:
/// `[stable, unstable]` bisection brackets on `|delta|`, or `None` when no
/// instability appears below `probe_cap`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub plus: Option<[f64; 2]>,
    pub minus: Option<[f64; 2]>,
    pub probe_cap: f64,
}

impl ThresholdReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold serialization")
    }
}

/// Bisection on `delta` for the sign change of the minimum Hessian
/// eigenvalue. The pencil `H_T + delta H_F` makes this pure arithmetic on
/// an existing scan.
pub fn delta_threshold(scan: &HessianScan, probe_cap: f64) -> Result<ThresholdReport> {
    if scan.min_eig_at(0.0) <= 0.0 {
        return Err(Error::Numeric(
            "torsion Hessian is not positive definite at delta = 0; scan too noisy".into(),
        ));
    }
    let mut out = [None, None];
    for (slot, sign) in [(0usize, 1.0f64), (1, -1.0)] {
        let mut lo = 0.0f64; // stable
        let mut hi = 1e-4f64;
        while scan.min_eig_at(sign * hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > probe_cap {
                break;
            }
        }
        if hi > probe_cap {
            continue; // stable for every probed delta of this sign
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if scan.min_eig_at(sign * mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out[slot] = Some([lo, hi]);
    }
    Ok(ThresholdReport { plus: out[0], minus: out[1], probe_cap })
}

/// Local estimate of the exponent above which `T * lambda_1^{1/p}` is
/// maximal at the disk.
#[derive(Debug, Clone, Serialize)]
pub struct ReverseKjEstimate {
    /// `1 / (delta_* T(B) lambda_1(B))` from the negative-delta threshold
    /// of `1/T + delta lambda_1`.
    pub p_from_threshold: f64,
    /// Direct bisection on `p` for positive semidefiniteness of the pencil.
    pub p_direct: f64,
    pub bracket_width: f64,
    /// Minimum pencil eigenvalue at the classical exponent `p = 2/(n+2)`,
    /// where the product inequality holds in the opposite direction;
    /// expected negative.
    pub min_eig_at_classical: f64,
}

pub fn reverse_kj_exponent(m_max: usize, step: f64, level: u32) -> Result<ReverseKjEstimate> {
    let spec = FunctionalSpec::new(EigenFunctional::Single { k: 1 }, 0.0)?;
    let scan = fd_hessian(&spec, m_max, step, level)?;
    let thr = delta_threshold(&scan, 1e6)?;
    let bracket = thr.minus.ok_or_else(|| {
        Error::Numeric("no instability of 1/T - delta lambda_1 found below the probe cap".into())
    })?;
    let t_b = ball_torsion(2);
    let lam1_b = enumerate_spectrum(2, 1)?.lambda(1)?;
    let delta_star = 0.5 * (bracket[0] + bracket[1]);
    let p_from_threshold = 1.0 / (delta_star * t_b * lam1_b);
    let bracket_width = (1.0 / (bracket[0] * t_b * lam1_b) - 1.0 / (bracket[1] * t_b * lam1_b)).abs();

    // direct route: T lambda_1^{1/p} maximal iff H(1/T) - (1/p)(T lambda_1)^{-1} H(lambda_1) >= 0
    let pencil_min = |p: f64| scan.min_eig_at(-1.0 / (p * t_b * lam1_b));
    let (mut lo, mut hi) = (0.5, 64.0);
    if pencil_min(hi) <= 0.0 {
        return Err(Error::Numeric("pencil not stabilized even at large p".into()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if pencil_min(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ReverseKjEstimate {
        p_from_threshold,
        p_direct: 0.5 * (lo + hi),
        bracket_width,
        min_eig_at_classical: pencil_min(2.0 / (2.0 + 2.0)),
    })
}

// ---------------------------------------------------------------------------
// projected descent

/// Gradient descent trajectory in mode-coefficient space.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub functional: String,
    pub coeffs: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub converged: bool,
}

impl Trajectory {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialization")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,value,grad_norm,coeffs\n");
        for (i, v) in self.values.iter().enumerate() {
            let cs: Vec<String> = self.coeffs[i].iter().map(|c| format!("{c:.17e}")).collect();
            out.push_str(&format!("{i},{v:.17e},{:.17e},{}\n", self.grad_norms[i], cs.join(";")));
        }
        out
    }
}

fn descent_value(
    coeffs: &[f64],
    dirs: &[(String, usize, bool)],
    spec: &FunctionalSpec,
    level: u32,
) -> Result<f64> {
    let (inv_t, f) = eval_point(coeffs, dirs, spec.eigen, level)?;
    Ok(inv_t + spec.delta * f)
}

/// Projected gradient descent of `1/T + delta F` within the unit-area
/// class, starting from a mode-coefficient vector over `cos/sin m theta`,
/// `m = 2..=m_max`. Gradients come from the boundary formulas (one solve
/// per iterate), the area constraint is eliminated exactly through `a_0`,
/// and steps backtrack until the value decreases.
pub fn projected_descent(
    spec: &FunctionalSpec,
    start: &[f64],
    m_max: usize,
    max_steps: usize,
    level: u32,
) -> Result<Trajectory> {
    if matches!(spec.eigen, EigenFunctional::ClusterGeomMean { .. }) {
        return Err(Error::Invalid(
            "descent supports simple eigenvalues and cluster sums; the geometric mean lacks \
             a boundary gradient formula here"
            .into(),
        ));
    }
    let dirs = directions(m_max);
    if start.len() != dirs.len() {
        return Err(Error::Invalid(format!(
            "start vector needs {} coefficients (cos/sin m, m = 2..={m_max})",
            dirs.len()
        )));
    }
    let (lo, hi) = match spec.eigen {
        EigenFunctional::Single { k } => (k, k),
        EigenFunctional::ClusterSum { lo, hi } => (lo, hi),
        EigenFunctional::ClusterGeomMean { .. } => unreachable!(),
    };
    let mut coeffs = start.to_vec();
    let mut traj = Trajectory {
        functional: format!("1/T + {}*{}", spec.delta, spec.eigen.label()),
        coeffs: Vec::new(),
        values: Vec::new(),
        grad_norms: Vec::new(),
        converged: false,
    };
    let mut step_len = 1e-3;
    let mut value = descent_value(&coeffs, &dirs, spec, level)?;
    for _ in 0..max_steps {
        // one solve per iterate, boundary integrals per direction
        let profile = unit_area_profile(&coeffs, &dirs)?;
        let a0 = profile.a[0];
        let domain = make_domain(profile)?;
        let mesh = build_mesh(&domain, level)?;
        let tor = solve_torsion(&mesh)?;
        let tr_w = boundary_gradient_trace(&mesh, &tor.w);
        let sq_w: Vec<f64> = tr_w.iter().map(|v| v * v).collect();
        let res = solve_eigs(&mesh, hi)?;
        let mut sq_u = vec![0.0; mesh.n_theta];
        for k in lo..=hi {
            for (j, v) in res.boundary_grad[k - 1].iter().enumerate() {
                sq_u[j] += v * v;
            }
        }
        let raw_grad = |g: &FourierProfile| -> f64 {
            let t_prime = boundary_weighted_integral(&mesh, &domain, &sq_w, g);
            let f_prime = -boundary_weighted_integral(&mesh, &domain, &sq_u, g);
            -t_prime / (tor.t * tor.t) + spec.delta * f_prime
        };
        let g_const = raw_grad(&FourierProfile::mode(0, 1.0, false));
        let mut grad = Vec::with_capacity(dirs.len());
        for (c, (_, m, sine)) in coeffs.iter().zip(&dirs) {
            let g = raw_grad(&FourierProfile::mode(*m, 1.0, *sine));
            // chain rule through the area-eliminating a_0(c)
            grad.push(g - c / (2.0 * (1.0 + a0)) * g_const);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        traj.coeffs.push(coeffs.clone());
        traj.values.push(value);
        traj.grad_norms.push(gnorm);
        if gnorm < 1e-4 {
            traj.converged = true;
            return Ok(traj);
        }
        // backtracking line search
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<f64> = coeffs.iter().zip(&grad).map(|(c, g)| c - step_len * g).collect();
            match descent_value(&trial, &dirs, spec, level) {
                Ok(v) if v < value - 1e-13 => {
                    coeffs = trial;
                    value = v;
                    step_len *= 1.5;
                    accepted = true;
                    break;
                }
                _ => step_len *= 0.5,
            }
        }
        if !accepted {
            traj.converged = gnorm < 1e-2;
            return Ok(traj);
        }
    }
    traj.coeffs.push(coeffs.clone());
    traj.values.push(value);
    traj.grad_norms.push(f64::NAN);
    Ok(traj)
}
