//! First and second shape derivatives of Dirichlet eigenvalues and torsion
//! under radial boundary perturbations.
//!
//! A perturbation is a Fourier profile `g`; the perturbed boundary is
//! `r = R(theta) + t g(theta)`, so the normal speed of the boundary is
//! `zeta . nu = g R / sqrt(R^2 + R'^2)` and surface integrals against it
//! reduce to `int f g R dtheta`.

use crate::ball_spectrum::enumerate_spectrum;
use crate::bessel;
use crate::dirichlet_solver::{
    assemble, assemble_full, boundary_gradient_trace, build_mesh, solve_eigs, solve_torsion, Csr,
    IncChol, Mesh,
};
use crate::geometry::{Domain2D, FourierProfile};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// One computed shape derivative, serializable for downstream tooling.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub functional: String,
    pub direction: String,
    pub order: u8,
    pub value: f64,
    /// Independent re-evaluation through a different formula, when one exists.
    pub alt_value: Option<f64>,
    pub err_est: f64,
}

impl DerivativeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Second derivative of an eigenvalue at the unit disk.
#[derive(Debug, Clone, Serialize)]
pub struct BallSecondDerivative {
    pub lambda: f64,
    /// First derivative along the family `r < 1 + t h`.
    pub first: f64,
    /// Plain second derivative along `r < 1 + t h`.
    pub raw: f64,
    /// Second derivative of the area-renormalized eigenvalue
    /// `lambda(Omega_t) * |Omega_t| / pi`.
    pub volume_normalized: f64,
}

/// Star-shaped domain `r < 1 + h(theta)` with no rescaling or centering.
/// Perturbation families for finite differences live on these.
pub fn raw_domain(profile: &FourierProfile) -> Domain2D {
    Domain2D { profile: profile.clone(), scale: 1.0, barycenter_shift: [0.0, 0.0] }
}

/// Coefficient-wise `base + t * dir`.
pub fn perturbed(base: &FourierProfile, dir: &FourierProfile, t: f64) -> Result<FourierProfile> {
    let deg = base.degree().max(dir.degree());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let a: Vec<f64> = (0..=deg).map(|i| get(&base.a, i) + t * get(&dir.a, i)).collect();
    let b: Vec<f64> = (1..=deg).map(|i| get(&base.b, i - 1) + t * get(&dir.b, i - 1)).collect();
    FourierProfile::new(a, b)
}

pub(crate) fn boundary_weighted_integral(
    mesh: &Mesh,
    domain: &Domain2D,
    f: &[f64],
    g: &FourierProfile,
) -> f64 {
    // int f(theta) g(theta) R(theta) dtheta over the boundary angles
    let n = mesh.n_theta;
    let mut acc = 0.0;
    for j in 0..n {
        let th = mesh.boundary_thetas[j];
        acc += f[j] * g.eval(th) * domain.radius(th);
    }
    acc * 2.0 * PI / n as f64
}

/// Hadamard derivative of a simple eigenvalue:
/// `-int_boundary |d_nu u_k|^2 (zeta . nu) ds`.
///
/// Fails when the eigenvalue is too close to a neighbor for the sign of the
/// derivative to be meaningful.
pub fn d_lambda_simple(
    domain: &Domain2D,
    dir: &FourierProfile,
    k: usize,
    level: u32,
) -> Result<DerivativeReport> {
    if k == 0 {
        return Err(Error::Invalid("eigenvalue index is 1-based".into()));
    }
    let mesh = build_mesh(domain, level)?;
    let res = solve_eigs(&mesh, k + 1)?;
    let lam = res.lambdas[k - 1];
    let gap_up = res.lambdas[k] - lam;
    let gap_down = if k >= 2 { lam - res.lambdas[k - 2] } else { f64::INFINITY };
    let gap = gap_up.min(gap_down);
    let guard = (10.0 * res.err_est[k - 1]).max(1e-8 * lam);
    if gap < guard {
        return Err(Error::Numeric(format!(
            "eigenvalue {k} is degenerate at this resolution (gap {gap:.3e}); \
             use the cluster or directional forms"
        )));
    }
    let sq: Vec<f64> = res.boundary_grad[k - 1].iter().map(|v| v * v).collect();
    let value = -boundary_weighted_integral(&mesh, domain, &sq, dir);
    Ok(DerivativeReport {
        functional: format!("lambda_{k}"),
        direction: dir.to_text(),
        order: 1,
        value,
        alt_value: None,
        err_est: res.err_est[k - 1],
    })
}

/// Derivative of a cluster sum `lambda_{k_lo} + .. + lambda_{k_hi}`, which is
/// differentiable even when the individual eigenvalues are not.
pub fn d_cluster_sum(
    domain: &Domain2D,
    dir: &FourierProfile,
    k_lo: usize,
    k_hi: usize,
    level: u32,
) -> Result<DerivativeReport> {
    if k_lo == 0 || k_hi < k_lo {
        return Err(Error::Invalid(format!("bad cluster range {k_lo}..{k_hi}")));
    }
    let mesh = build_mesh(domain, level)?;
    let res = solve_eigs(&mesh, k_hi)?;
    let mut sq = vec![0.0; mesh.n_theta];
    for k in k_lo..=k_hi {
        for (j, v) in res.boundary_grad[k - 1].iter().enumerate() {
            sq[j] += v * v;
        }
    }
    let value = -boundary_weighted_integral(&mesh, domain, &sq, dir);
    let err = res.err_est[k_lo - 1..k_hi].iter().cloned().fold(0.0, f64::max);
    Ok(DerivativeReport {
        functional: format!("lambda_{k_lo}..{k_hi}"),
        direction: dir.to_text(),
        order: 1,
        value,
        alt_value: None,
        err_est: err,
    })
}

/// Derivative of torsional rigidity, through both the boundary formula
/// `int |d_nu w|^2 (zeta.nu) ds` (`value`) and the distributed formula
/// `int (2w - |grad w|^2) div zeta + grad w . (Dzeta + Dzeta^T) grad w`
/// (`alt_value`); their difference is the error estimate.
pub fn d_torsion(domain: &Domain2D, dir: &FourierProfile, level: u32) -> Result<DerivativeReport> {
    let mesh = build_mesh(domain, level)?;
    let tor = solve_torsion(&mesh)?;
    let tr = boundary_gradient_trace(&mesh, &tor.w);
    let sq: Vec<f64> = tr.iter().map(|v| v * v).collect();
    let boundary_form = boundary_weighted_integral(&mesh, domain, &sq, dir);
    let volume_form = torsion_volume_form(&mesh, domain, dir, &tor.w);
    Ok(DerivativeReport {
        functional: "torsion".into(),
        direction: dir.to_text(),
        order: 1,
        value: boundary_form,
        alt_value: Some(volume_form),
        err_est: (boundary_form - volume_form).abs(),
    })
}

/// Radial extension of the boundary field `g(theta) e_r`: a smooth ramp in
/// the relative radius rho = r / R(theta), zero near the origin, one at the
/// boundary, with vanishing radial slope there.
fn ramp(rho: f64) -> (f64, f64) {
    const R0: f64 = 0.3;
    if rho <= R0 {
        (0.0, 0.0)
    } else if rho >= 1.0 {
        (1.0, 0.0)
    } else {
        let t = (rho - R0) / (1.0 - R0);
        (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t) / (1.0 - R0))
    }
}

fn torsion_volume_form(mesh: &Mesh, domain: &Domain2D, dir: &FourierProfile, w: &[f64]) -> f64 {
    let mut acc = 0.0;
    let dth = 1e-6;
    for tri in &mesh.triangles {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let area = 0.5 * det;
        let grads = [
            [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
            [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
            [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
        ];
        let wv = [w[tri[0]], w[tri[1]], w[tri[2]]];
        let gw = [
            wv[0] * grads[0][0] + wv[1] * grads[1][0] + wv[2] * grads[2][0],
            wv[0] * grads[0][1] + wv[1] * grads[1][1] + wv[2] * grads[2][1],
        ];
        let wbar = (wv[0] + wv[1] + wv[2]) / 3.0;
        let cx = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        let cy = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        let r = (cx * cx + cy * cy).sqrt();
        if r < 1e-12 {
            continue;
        }
        let th = cy.atan2(cx);
        let big_r = domain.radius(th);
        let rp = (domain.radius(th + dth) - domain.radius(th - dth)) / (2.0 * dth);
        let rho = r / big_r;
        let (phi, phi_d) = ramp(rho);
        let g = dir.eval(th);
        let gp = dir.eval_deriv(th);
        // psi(r, theta) = phi(r/R) g(theta), zeta = psi e_r
        let psi = phi * g;
        let psi_r = phi_d * g / big_r;
        let psi_th = phi_d * (-r * rp / (big_r * big_r)) * g + phi * gp;
        let (ct, st) = (th.cos(), th.sin());
        let er = [ct, st];
        let eth = [-st, ct];
        // Jacobian of zeta: psi_r e_r e_r^T + (psi_th/r) e_r e_th^T + (psi/r) e_th e_th^T
        let mut dz = [[0.0f64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                dz[i][j] = psi_r * er[i] * er[j] + (psi_th / r) * er[i] * eth[j] + (psi / r) * eth[i] * eth[j];
            }
        }
        let div = dz[0][0] + dz[1][1];
        let grad_sq = gw[0] * gw[0] + gw[1] * gw[1];
        let mut sym_term = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                sym_term += gw[i] * (dz[i][j] + dz[j][i]) * gw[j];
            }
        }
        acc += area * ((2.0 * wbar - grad_sq) * div + sym_term);
    }
    acc
}

fn energy_pair(k_full: &Csr, m_full: &Csr, x: &[f64]) -> (f64, f64) {
    (k_full.quad_form(x), m_full.quad_form(x))
}

/// Conjugate gradients on a caller-supplied SPD operator.
fn cg_operator<F: Fn(&[f64], &mut [f64])>(
    apply: F,
    prec: &IncChol,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        prec.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numeric("deflated Helmholtz solve failed to converge".into()))
}

/// Second derivative of a simple disk eigenvalue along `r < 1 + t h`.
///
/// The eigenfunction derivative solves the Helmholtz problem
/// `-Delta u' - lambda u' = lambda' u` with `u' = -h d_nu u` on the circle,
/// discretized and solved with the near-null directions deflated. The second
/// derivative adds the boundary term `int |d_nu u|^2 h^2 dtheta` (the circle
/// has curvature one and the radial field no tangential component).
pub fn d2_lambda_at_ball(k: u64, h: &FourierProfile, level: u32) -> Result<BallSecondDerivative> {
    let spec = enumerate_spectrum(2, k + 2)?;
    let mode = spec.mode_at(k)?;
    if mode.mult != 1 {
        return Err(Error::Invalid(format!(
            "eigenvalue {k} of the disk is multiple; second derivatives need a simple one"
        )));
    }
    let j = mode.zero;
    let lam = mode.lambda;
    let jp = bessel::bessel_j_prime(mode.nu, j)?;
    // L2-normalized radial mode u = c J_0(j r), d_nu u = c j J_0'(j)
    let c = 1.0 / (PI.sqrt() * jp.abs());
    let dnu_u = c * j * jp;

    let disk = Domain2D::disk();
    let mesh = build_mesh(&disk, level)?;
    let (k_int, m_int, _) = assemble(&mesh);
    let (k_full, m_full) = assemble_full(&mesh);
    let n_nodes = mesh.nodes.len();
    let n_int = k_int.n;

    // analytic mode on the nodes
    let mut u_full = vec![0.0; n_nodes];
    for (id, p) in mesh.nodes.iter().enumerate() {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        u_full[id] = c * bessel::bessel_j(mode.nu, j * r).unwrap_or(0.0);
    }
    for &b in &mesh.boundary_nodes {
        u_full[b] = 0.0;
    }

    // first derivative and the extension carrying the boundary data of u'
    let h_int_1: f64 = quad_theta(|t| h.eval(t));
    let h_int_2: f64 = quad_theta(|t| h.eval(t) * h.eval(t));
    let d1 = -dnu_u * dnu_u * h_int_1;
    let mut ext = vec![0.0; n_nodes];
    for (pos, &b) in mesh.boundary_nodes.iter().enumerate() {
        ext[b] = -h.eval(mesh.boundary_thetas[pos]) * dnu_u;
    }

    // rhs of the interior Helmholtz system: lambda' M u - (K - lambda M) ext
    let mut tmp1 = vec![0.0; n_nodes];
    let mut tmp2 = vec![0.0; n_nodes];
    m_full.matvec(&u_full, &mut tmp1);
    k_full.matvec(&ext, &mut tmp2);
    let mut tmp3 = vec![0.0; n_nodes];
    m_full.matvec(&ext, &mut tmp3);
    let mut rhs = vec![0.0; n_int];
    for (dof, &node) in mesh.interior_nodes.iter().enumerate() {
        rhs[dof] = d1 * tmp1[node] - (tmp2[node] - lam * tmp3[node]);
    }

    // deflate the discrete eigenvectors at and below the target eigenvalue
    let k_defl = (k as usize + 2).min(12);
    let eig = solve_eigs(&mesh, k_defl)?;
    let defl: Vec<Vec<f64>> = eig
        .modes
        .iter()
        .map(|m| mesh.interior_nodes.iter().map(|&n| m[n]).collect())
        .collect();
    let m_defl: Vec<Vec<f64>> = defl
        .iter()
        .map(|v| {
            let mut out = vec![0.0; n_int];
            m_int.matvec(v, &mut out);
            out
        })
        .collect();
    // project the rhs off the deflated directions
    for (v, mv) in defl.iter().zip(&m_defl) {
        let comp: f64 = v.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        for i in 0..n_int {
            rhs[i] -= comp * mv[i];
        }
    }
    let prec = IncChol::new(&k_int)?;
    let apply = |x: &[f64], y: &mut [f64]| {
        k_int.matvec(x, y);
        let mut my = vec![0.0; n_int];
        m_int.matvec(x, &mut my);
        for i in 0..n_int {
            y[i] -= lam * my[i];
        }
        // rank-one shifts keep the operator positive on the deflated span
        for mv in &m_defl {
            let comp: f64 = mv.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            for i in 0..n_int {
                y[i] += lam * comp * mv[i];
            }
        }
    };
    let mut v = vec![0.0; n_int];
    cg_operator(apply, &prec, &rhs, &mut v, 1e-12, 20_000)?;
    // remove residual components along the deflated directions
    for (vec_j, mv) in defl.iter().zip(&m_defl) {
        let comp: f64 = mv.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        for i in 0..n_int {
            v[i] -= comp * vec_j[i];
        }
    }

    let mut u_prime = ext;
    for (dof, &node) in mesh.interior_nodes.iter().enumerate() {
        u_prime[node] += v[dof];
    }
    // enforce int u' u = 0 exactly
    let mut mu = vec![0.0; n_nodes];
    m_full.matvec(&u_full, &mut mu);
    let uu: f64 = mu.iter().zip(&u_full).map(|(a, b)| a * b).sum();
    let cross: f64 = mu.iter().zip(&u_prime).map(|(a, b)| a * b).sum();
    for i in 0..n_nodes {
        u_prime[i] -= cross / uu * u_full[i];
    }

    let (a_en, b_en) = energy_pair(&k_full, &m_full, &u_prime);
    let raw = 2.0 * (a_en - lam * b_en) + dnu_u * dnu_u * h_int_2;

    // area renormalization: lambda(Omega_t) |Omega_t| / pi restores |.| = pi
    let a0 = h.a[0];
    let area_dd = 2.0 * (a0 * a0 + (h_int_2 - 2.0 * PI * a0 * a0) / (2.0 * PI));
    let volume_normalized = raw + 2.0 * d1 * 2.0 * a0 + lam * area_dd;

    Ok(BallSecondDerivative { lambda: lam, first: d1, raw, volume_normalized })
}

fn quad_theta<F: Fn(f64) -> f64>(f: F) -> f64 {
    let n = 4096;
    (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).sum::<f64>() * 2.0 * PI / n as f64
}

/// Directional derivatives of a multiple disk eigenvalue: the eigenvalues of
/// the cluster matrix `Q_ij = -int (d_nu u_i)(d_nu u_j) h dtheta`, ascending.
pub fn double_eigenvalue_directional(
    k_lo: usize,
    k_hi: usize,
    h: &FourierProfile,
    level: u32,
) -> Result<Vec<f64>> {
    if k_lo == 0 || k_hi < k_lo {
        return Err(Error::Invalid(format!("bad cluster range {k_lo}..{k_hi}")));
    }
    let disk = Domain2D::disk();
    let mesh = build_mesh(&disk, level)?;
    let res = solve_eigs(&mesh, k_hi)?;
    let m = k_hi - k_lo + 1;
    let spread = res.lambdas[k_hi - 1] - res.lambdas[k_lo - 1];
    if spread > 1e-4 * res.lambdas[k_lo - 1] {
        return Err(Error::Invalid(format!(
            "indices {k_lo}..{k_hi} do not form an eigenvalue cluster (spread {spread:.3e})"
        )));
    }
    let nb = mesh.n_theta;
    let mut q = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for jj in i..m {
            let gi = &res.boundary_grad[k_lo - 1 + i];
            let gj = &res.boundary_grad[k_lo - 1 + jj];
            let mut acc = 0.0;
            for t in 0..nb {
                acc += gi[t] * gj[t] * h.eval(mesh.boundary_thetas[t]);
            }
            let val = -acc * 2.0 * PI / nb as f64;
            q[(i, jj)] = val;
            q[(jj, i)] = val;
        }
    }
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(q).eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball_spectrum::ball_torsion;
    use approx::assert_abs_diff_eq;

    fn lambda_raw(profile: &FourierProfile, k: usize, level: u32) -> f64 {
        let mesh = build_mesh(&raw_domain(profile), level).unwrap();
        solve_eigs(&mesh, k).unwrap().lambdas[k - 1]
    }

    fn torsion_raw(profile: &FourierProfile, level: u32) -> f64 {
        let mesh = build_mesh(&raw_domain(profile), level).unwrap();
        solve_torsion(&mesh).unwrap().t
    }

    /// Richardson-extrapolated central difference along base + t dir.
    fn fd1<F: Fn(&FourierProfile) -> f64>(
        base: &FourierProfile,
        dir: &FourierProfile,
        t: f64,
        f: F,
    ) -> f64 {
        let d = |s: f64| {
            let p = perturbed(base, dir, s).unwrap();
            f(&p)
        };
        let c = |s: f64| (d(s) - d(-s)) / (2.0 * s);
        (4.0 * c(t) - c(2.0 * t)) / 3.0
    }

    #[test]
    fn lambda1_dilation_derivative() {
        // growing the disk radially: lambda((1+t)B) = lambda/(1+t)^2
        let disk = Domain2D::disk();
        let one = FourierProfile::mode(0, 1.0, false);
        let rep = d_lambda_simple(&disk, &one, 1, 2).unwrap();
        let lam1 = crate::ball_spectrum::enumerate_spectrum(2, 1).unwrap().lambda(1).unwrap();
        assert!((rep.value + 2.0 * lam1).abs() < 1e-2 * lam1, "{} vs {}", rep.value, -2.0 * lam1);
    }

    #[test]
    fn lambda1_symmetric_direction_is_critical() {
        let disk = Domain2D::disk();
        let dir = FourierProfile::mode(3, 1.0, false);
        let rep = d_lambda_simple(&disk, &dir, 1, 2).unwrap();
        assert!(rep.value.abs() < 1e-2, "disk should be critical, got {}", rep.value);
    }

    #[test]
    fn lambda1_matches_finite_differences_off_the_disk() {
        let base = FourierProfile::single(2, 0.1, false).unwrap();
        let dir = FourierProfile::mode(3, 1.0, true);
        let rep = d_lambda_simple(&raw_domain(&base), &dir, 1, 1).unwrap();
        let fd = fd1(&base, &dir, 0.01, |p| lambda_raw(p, 1, 1));
        assert!(
            (rep.value - fd).abs() <= 2e-2 * fd.abs().max(1e-3),
            "boundary form {} vs finite difference {}",
            rep.value,
            fd
        );
    }

    #[test]
    fn degenerate_eigenvalue_is_rejected() {
        let disk = Domain2D::disk();
        let dir = FourierProfile::mode(2, 1.0, false);
        assert!(d_lambda_simple(&disk, &dir, 2, 1).is_err());
    }

    #[test]
    fn cluster_sum_derivative_dilation_and_fd() {
        let disk = Domain2D::disk();
        let one = FourierProfile::mode(0, 1.0, false);
        let rep = d_cluster_sum(&disk, &one, 2, 3, 2).unwrap();
        let spec = crate::ball_spectrum::enumerate_spectrum(2, 3).unwrap();
        let sum = spec.lambda(2).unwrap() + spec.lambda(3).unwrap();
        assert!((rep.value + 2.0 * sum).abs() < 1e-2 * sum);

        // against finite differences in an asymmetric direction
        let zero = FourierProfile::zero();
        let dir = FourierProfile::mode(2, 1.0, false);
        let rep = d_cluster_sum(&raw_domain(&zero), &dir, 2, 3, 1).unwrap();
        let fd = fd1(&zero, &dir, 0.01, |p| {
            let mesh = build_mesh(&raw_domain(p), 1).unwrap();
            let r = solve_eigs(&mesh, 3).unwrap();
            r.lambdas[1] + r.lambdas[2]
        });
        assert!((rep.value - fd).abs() <= 2e-2 * fd.abs().max(1e-2), "{} vs {}", rep.value, fd);
    }

    #[test]
    fn torsion_derivative_dilation_fd_and_form_agreement() {
        let disk = Domain2D::disk();
        let one = FourierProfile::mode(0, 1.0, false);
        let rep = d_torsion(&disk, &one, 2).unwrap();
        let expect = 4.0 * ball_torsion(2);
        assert!((rep.value - expect).abs() < 1e-2 * expect, "{} vs {expect}", rep.value);
        let alt = rep.alt_value.unwrap();
        assert!((alt - expect).abs() < 1e-2 * expect, "volume form {alt} vs {expect}");

        let base = FourierProfile::single(2, 0.08, false).unwrap();
        let dir = FourierProfile::mode(1, 1.0, true);
        let rep = d_torsion(&raw_domain(&base), &dir, 1).unwrap();
        let fd = fd1(&base, &dir, 0.01, |p| torsion_raw(p, 1));
        assert!((rep.value - fd).abs() <= 2e-2 * fd.abs().max(1e-3), "{} vs {}", rep.value, fd);
        let alt = rep.alt_value.unwrap();
        assert!((alt - fd).abs() <= 2e-2 * fd.abs().max(1e-3), "volume {} vs {}", alt, fd);
    }

    #[test]
    fn fd_convergence_order() {
        // along the dilation family lambda(s) = lambda_1 / (1+s)^2, so the
        // central-difference error has a visible O(t^2) term
        let zero = FourierProfile::zero();
        let dir = FourierProfile::mode(0, 1.0, false);
        let d = |s: f64| lambda_raw(&perturbed(&zero, &dir, s).unwrap(), 1, 1);
        let c = |s: f64| (d(s) - d(-s)) / (2.0 * s);
        let ref_val = (4.0 * c(0.005) - c(0.01)) / 3.0;
        let e1 = (c(0.02) - ref_val).abs();
        let e2 = (c(0.04) - ref_val).abs();
        assert!(e2 / e1 > 2.0f64.powf(1.5), "orders: e(0.04)={e2:.3e} e(0.02)={e1:.3e}");
    }

    #[test]
    fn second_derivative_closed_form_on_disk() {
        // for u = c J_0(j r) and h = cos(m theta), the eigenfunction
        // derivative is itself a Bessel mode and everything is explicit
        let spec = crate::ball_spectrum::enumerate_spectrum(2, 1).unwrap();
        let j = spec.mode_at(1).unwrap().zero;
        let m = 2usize;
        let jp0 = bessel::bessel_j_prime(0.0, j).unwrap();
        let c = 1.0 / (PI.sqrt() * jp0.abs());
        let dnu = c * j * jp0;
        let jm = bessel::bessel_j(m as f64, j).unwrap();
        let jmp = bessel::bessel_j_prime(m as f64, j).unwrap();
        let alpha = -dnu / jm;
        let exact = 2.0 * alpha * alpha * j * jm * jmp * PI + dnu * dnu * PI;

        let h = FourierProfile::mode(m, 1.0, false);
        let got = d2_lambda_at_ball(1, &h, 2).unwrap();
        assert!(
            (got.raw - exact).abs() < 1e-2 * exact.abs(),
            "raw second derivative {} vs closed form {}",
            got.raw,
            exact
        );
        // volume-normalized adds lambda * int h^2 / pi = lambda
        let lam = got.lambda;
        assert_abs_diff_eq!(got.volume_normalized, got.raw + lam, epsilon = 1e-9 * lam);
    }

    #[test]
    fn second_derivative_against_finite_differences() {
        let h = FourierProfile::mode(3, 1.0, true);
        let got = d2_lambda_at_ball(1, &h, 2).unwrap();
        let zero = FourierProfile::zero();
        let f = |s: f64| lambda_raw(&perturbed(&zero, &h, s).unwrap(), 1, 2);
        let f0 = f(0.0);
        let d2 = |t: f64| (f(t) - 2.0 * f0 + f(-t)) / (t * t);
        let fd = (4.0 * d2(0.02) - d2(0.04)) / 3.0;
        assert!(
            (got.raw - fd).abs() <= 2e-2 * fd.abs(),
            "second derivative {} vs finite differences {}",
            got.raw,
            fd
        );
    }

    #[test]
    fn second_derivative_is_quadratic_in_the_direction() {
        let h = FourierProfile::mode(4, 1.0, false);
        let h2 = h.scaled(2.0);
        let a = d2_lambda_at_ball(1, &h, 1).unwrap();
        let b = d2_lambda_at_ball(1, &h2, 1).unwrap();
        assert_abs_diff_eq!(b.raw, 4.0 * a.raw, epsilon = 1e-6 * a.raw.abs());
    }

    #[test]
    fn multiple_eigenvalue_rejected_for_second_derivative() {
        let h = FourierProfile::mode(2, 1.0, false);
        assert!(d2_lambda_at_ball(2, &h, 1).is_err());
    }

    #[test]
    fn directional_derivatives_of_the_double_eigenvalue() {
        // cluster {2,3}: traces are multiples of cos/sin, and against
        // h = cos 2theta the cluster matrix has eigenvalues -lambda, +lambda
        let h = FourierProfile::mode(2, 1.0, false);
        let vals = double_eigenvalue_directional(2, 3, &h, 2).unwrap();
        let lam = crate::ball_spectrum::enumerate_spectrum(2, 2).unwrap().lambda(2).unwrap();
        assert_eq!(vals.len(), 2);
        assert!((vals[0] + lam).abs() < 2e-2 * lam, "{} vs {}", vals[0], -lam);
        assert!((vals[1] - lam).abs() < 2e-2 * lam, "{} vs {}", vals[1], lam);

        // trace identity: sum of directional derivatives = cluster-sum derivative
        let disk = Domain2D::disk();
        let rep = d_cluster_sum(&disk, &h, 2, 3, 2).unwrap();
        let tr: f64 = vals.iter().sum();
        assert!((tr - rep.value).abs() <= 1e-3 * lam, "trace {} vs sum {}", tr, rep.value);
    }

    #[test]
    fn non_cluster_rejected() {
        let h = FourierProfile::mode(2, 1.0, false);
        assert!(double_eigenvalue_directional(1, 2, &h, 1).is_err());
    }

    #[test]
    fn report_serializes() {
        let rep = DerivativeReport {
            functional: "lambda_1".into(),
            direction: "0 0 0\n2 0.1 0".into(),
            order: 1,
            value: -1.25,
            alt_value: None,
            err_est: 1e-8,
        };
        let js = rep.to_json();
        assert!(js.contains("\"functional\""));
        assert!(js.contains("lambda_1"));
    }
}
