//! Numerical audits of the explicit eigenvalue/torsion inequalities on
//! star-shaped planar domains, plus normalized-ratio tracking for the
//! stability estimates whose constants are not explicit.
//!
//! Everything here is two-dimensional: domains are Fourier perturbations of
//! the unit disk and spectra come from the finite-element solver. Audits of
//! explicit inequalities assert direction within a combined error budget;
//! implicit-constant estimates are only tracked through normalized ratios.

use crate::ball_spectrum::{ball_torsion, enumerate_spectrum, li_yau_constant, BallSpectrum};
use crate::dirichlet_solver::{build_mesh, build_mesh_radial, extrapolate, solve_eigs, solve_torsion};
use crate::geometry::{
    fraenkel_asymmetry, make_domain, profile_norms, sym_diff_with_ball, Domain2D, FourierProfile,
};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const N: u32 = 2;
const OMEGA_N: f64 = PI;

/// One audited inequality instance.
#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub inequality_id: String,
    pub domain_id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Combined numerical error budget granted on top of the right side.
    pub budget: f64,
    /// `lhs <= rhs + budget`.
    pub satisfied: bool,
    pub margin: f64,
    /// `lhs / rhs` where the inequality carries an implicit constant.
    pub normalized_ratio: Option<f64>,
}

fn entry(
    inequality_id: impl Into<String>,
    domain_id: impl Into<String>,
    lhs: f64,
    rhs: f64,
    budget: f64,
) -> AuditEntry {
    AuditEntry {
        inequality_id: inequality_id.into(),
        domain_id: domain_id.into(),
        lhs,
        rhs,
        budget,
        satisfied: lhs <= rhs + budget,
        margin: rhs - lhs,
        normalized_ratio: None,
    }
}

/// Collection of audit entries with serialization helpers.
#[derive(Debug, Clone, Serialize, Default)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("inequality_id,domain_id,lhs,rhs,budget,satisfied,margin,normalized_ratio\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{},{:.17e},{}\n",
                e.inequality_id,
                e.domain_id,
                e.lhs,
                e.rhs,
                e.budget,
                e.satisfied,
                e.margin,
                e.normalized_ratio.map(|r| format!("{r:.17e}")).unwrap_or_default()
            ));
        }
        out
    }
}

/// Deficits of one domain against the ball of the same area.
#[derive(Debug, Clone, Serialize)]
pub struct DeficitRecord {
    pub lambda1_deficit: f64,
    pub torsion_deficit: f64,
    pub asymmetry: f64,
    pub eigen_devs: Vec<f64>,
    pub lambda_budget: Vec<f64>,
    pub torsion_budget: f64,
}

/// All solver outputs an audit needs for one domain, with per-quantity
/// budgets from two-level Richardson extrapolation.
#[derive(Debug, Clone)]
pub struct DomainData {
    pub id: String,
    pub domain: Domain2D,
    pub lambdas: Vec<f64>,
    pub lam_budget: Vec<f64>,
    pub torsion: f64,
    pub torsion_budget: f64,
    pub w_max: f64,
    pub w_max_budget: f64,
    /// Fine-level sup of |u_k| over the nodes, per eigenfunction.
    pub mode_sup: Vec<f64>,
    pub mode_sup_budget: Vec<f64>,
    /// Fine-level max over nodes of |u_k| / w.
    pub uw_ratio: Vec<f64>,
}

/// Solve a domain at `level-1` and `level` and extrapolate everything.
pub fn compute_domain_data(
    domain: &Domain2D,
    id: &str,
    k_eigs: usize,
    level: u32,
) -> Result<DomainData> {
    if level == 0 {
        return Err(Error::Invalid("audits need level >= 1 for two-level budgets".into()));
    }
    let mesh_c = build_mesh(domain, level - 1)?;
    let mesh_f = build_mesh(domain, level)?;
    let eig_c = solve_eigs(&mesh_c, k_eigs)?;
    let eig_f = solve_eigs(&mesh_f, k_eigs)?;
    let tor_c = solve_torsion(&mesh_c)?;
    let tor_f = solve_torsion(&mesh_f)?;
    let mut lambdas = Vec::with_capacity(k_eigs);
    let mut lam_budget = Vec::with_capacity(k_eigs);
    for i in 0..k_eigs {
        let e = extrapolate(eig_c.lambdas[i], eig_f.lambdas[i], true);
        lambdas.push(e.value);
        lam_budget.push(e.err_est);
    }
    let te = extrapolate(tor_c.t, tor_f.t, false);
    let sup_of = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut mode_sup = Vec::with_capacity(k_eigs);
    let mut mode_sup_budget = Vec::with_capacity(k_eigs);
    let mut uw_ratio = Vec::with_capacity(k_eigs);
    for i in 0..k_eigs {
        let sf = sup_of(&eig_f.modes[i]);
        let sc = sup_of(&eig_c.modes[i]);
        mode_sup.push(sf);
        mode_sup_budget.push((sf - sc).abs());
        let mut ratio = 0.0f64;
        for (node, &wv) in tor_f.w.iter().enumerate() {
            if wv > 1e-12 {
                ratio = ratio.max(eig_f.modes[i][node].abs() / wv);
            }
        }
        uw_ratio.push(ratio);
    }
    Ok(DomainData {
        id: id.to_string(),
        domain: domain.clone(),
        lambdas,
        lam_budget,
        torsion: te.value,
        torsion_budget: te.err_est,
        w_max: tor_f.w_max,
        w_max_budget: (tor_f.w_max - tor_c.w_max).abs(),
        mode_sup,
        mode_sup_budget,
        uw_ratio,
    })
}

fn ball_lambda(spec: &BallSpectrum, k: u64) -> f64 {
    spec.lambda(k).expect("enumerated index")
}

impl DomainData {
    pub fn deficits(&self, spec: &BallSpectrum) -> DeficitRecord {
        let (asym, _) = fraenkel_asymmetry(&self.domain).unwrap_or((f64::NAN, f64::NAN));
        DeficitRecord {
            lambda1_deficit: self.lambdas[0] - ball_lambda(spec, 1),
            torsion_deficit: 1.0 / self.torsion - 1.0 / ball_torsion(N),
            asymmetry: asym,
            eigen_devs: self
                .lambdas
                .iter()
                .enumerate()
                .map(|(i, l)| l - ball_lambda(spec, i as u64 + 1))
                .collect(),
            lambda_budget: self.lam_budget.clone(),
            torsion_budget: self.torsion_budget,
        }
    }
}

// ---------------------------------------------------------------------------
// explicit-constant audits

/// Polynomial growth of the spectrum and the eigenvalue-torsion product:
/// `a_n k^{2/n} <= lambda_k <= (1+4/n) lambda_1 k^{2/n}` and
/// `lambda_1 T <= omega_n`.
pub fn audit_growth(data: &DomainData) -> Vec<AuditEntry> {
    let a = li_yau_constant(N);
    let nf = N as f64;
    let mut out = Vec::new();
    for (i, &lam) in data.lambdas.iter().enumerate() {
        let k = (i + 1) as f64;
        out.push(entry(
            format!("growth-lower:k={}", i + 1),
            &data.id,
            a * k.powf(2.0 / nf),
            lam,
            data.lam_budget[i],
        ));
        out.push(entry(
            format!("growth-upper:k={}", i + 1),
            &data.id,
            lam,
            (1.0 + 4.0 / nf) * data.lambdas[0] * k.powf(2.0 / nf),
            data.lam_budget[i] + (1.0 + 4.0 / nf) * data.lam_budget[0] * k.powf(2.0 / nf),
        ));
    }
    let prod = data.lambdas[0] * data.torsion;
    let prod_budget = data.lam_budget[0] * data.torsion + data.lambdas[0] * data.torsion_budget;
    out.push(entry("eigenvalue-torsion-product", &data.id, prod, OMEGA_N, prod_budget));
    out
}

/// Sup-norm bounds: `w <= 1/(2n)`, `|u_k| <= e^{1/8pi} lambda_k^{n/4}` and
/// the pointwise `|u_k| <= e^{1/8pi} lambda_k^{1+n/4} w`.
pub fn audit_supnorm(data: &DomainData) -> Vec<AuditEntry> {
    let nf = N as f64;
    let c = (1.0f64 / (8.0 * PI)).exp();
    let mut out = Vec::new();
    out.push(entry(
        "torsion-sup",
        &data.id,
        data.w_max,
        1.0 / (2.0 * nf),
        data.w_max_budget + 1e-4,
    ));
    for (i, &lam) in data.lambdas.iter().enumerate() {
        out.push(entry(
            format!("mode-sup:k={}", i + 1),
            &data.id,
            data.mode_sup[i],
            c * lam.powf(nf / 4.0),
            data.mode_sup_budget[i],
        ));
        out.push(entry(
            format!("mode-vs-torsion:k={}", i + 1),
            &data.id,
            data.uw_ratio[i],
            c * lam.powf(1.0 + nf / 4.0),
            data.mode_sup_budget[i] * 10.0,
        ));
    }
    out
}

/// Nested-domain resolvent bound: for `inner` contained in `outer`,
/// `1/lambda_k(outer) - 1/lambda_k(inner) <= e^{1/4pi} k lambda_k(outer)^{n/2}
/// (T(outer) - T(inner))`.
pub fn audit_nested(inner: &DomainData, outer: &DomainData, k: usize) -> Result<AuditEntry> {
    // containment by radial comparison at matching angles
    for i in 0..4096 {
        let th = 2.0 * PI * i as f64 / 4096.0;
        if inner.domain.radius(th) > outer.domain.radius(th) + 1e-9 {
            return Err(Error::Invalid(format!(
                "domains are not nested at angle {th:.4} \
                 ({} vs {})",
                inner.domain.radius(th),
                outer.domain.radius(th)
            )));
        }
    }
    let nf = N as f64;
    let lo = outer.lambdas[k - 1];
    let li = inner.lambdas[k - 1];
    let lhs = 1.0 / lo - 1.0 / li;
    let rhs = (1.0f64 / (4.0 * PI)).exp()
        * k as f64
        * lo.powf(nf / 2.0)
        * (outer.torsion - inner.torsion);
    let budget = outer.lam_budget[k - 1] / (lo * lo)
        + inner.lam_budget[k - 1] / (li * li)
        + (1.0f64 / (4.0 * PI)).exp()
            * k as f64
            * lo.powf(nf / 2.0)
            * (outer.torsion_budget + inner.torsion_budget);
    Ok(entry(format!("nested-resolvent:k={k}"), format!("{}>{}", outer.id, inner.id), lhs, rhs, budget))
}

/// Resolvent distance to the ball through torsion and symmetric difference:
/// `|1/lambda_k(Omega) - 1/lambda_k(B)| <= (1+4/n)^{n/2} e^{1/4pi} k^2
/// lambda_1(Omega)^{n/2} [T(B) - T(Omega) + (1/n + 1/n^2)|Omega Delta B|]`.
pub fn audit_auxiliary(data: &DomainData, spec: &BallSpectrum, k: usize) -> AuditEntry {
    let nf = N as f64;
    let lam = data.lambdas[k - 1];
    let lam_b = ball_lambda(spec, k as u64);
    let lhs = (1.0 / lam - 1.0 / lam_b).abs();
    let (sym, sym_err) = sym_diff_with_ball(&data.domain, [0.0, 0.0]);
    let factor = (1.0 + 4.0 / nf).powf(nf / 2.0)
        * (1.0f64 / (4.0 * PI)).exp()
        * (k * k) as f64
        * data.lambdas[0].powf(nf / 2.0);
    let geom = ball_torsion(N) - data.torsion + (1.0 / nf + 1.0 / (nf * nf)) * sym;
    let rhs = factor * geom;
    let budget = data.lam_budget[k - 1] / (lam * lam)
        + factor * (data.torsion_budget + (1.0 / nf + 1.0 / (nf * nf)) * sym_err);
    entry(format!("resolvent-vs-ball:k={k}"), &data.id, lhs, rhs, budget)
}

/// Torsion loss under intersection with the ball:
/// `T(Omega) - T(Omega ∩ B) <= (1/n + 1/n^2) |Omega \ B|`.
pub fn audit_torsion_intersection(domain: &Domain2D, id: &str, level: u32) -> Result<AuditEntry> {
    if level == 0 {
        return Err(Error::Invalid("audits need level >= 1".into()));
    }
    let nf = N as f64;
    let tor = |lev: u32| -> Result<(f64, f64)> {
        let mesh_full = build_mesh(domain, lev)?;
        let mesh_cap = build_mesh_radial(|th| domain.radius(th).min(1.0), lev)?;
        Ok((solve_torsion(&mesh_full)?.t, solve_torsion(&mesh_cap)?.t))
    };
    let (tc_full, tc_cap) = tor(level - 1)?;
    let (tf_full, tf_cap) = tor(level)?;
    let e_full = extrapolate(tc_full, tf_full, false);
    let e_cap = extrapolate(tc_cap, tf_cap, false);
    // |Omega \ B| = 1/2 int (R^2 - min(R,1)^2)
    let nq = 8192;
    let mut excess = 0.0;
    for i in 0..nq {
        let th = 2.0 * PI * i as f64 / nq as f64;
        let r = domain.radius(th);
        excess += r * r - r.min(1.0).powi(2);
    }
    excess *= PI / nq as f64;
    let lhs = e_full.value - e_cap.value;
    let rhs = (1.0 / nf + 1.0 / (nf * nf)) * excess;
    Ok(entry(
        "torsion-intersection",
        id,
        lhs,
        rhs,
        e_full.err_est + e_cap.err_est,
    ))
}

/// The torsion-eigenvalue product inequality and the chained bound it
/// implies on the torsion deficit.
pub fn audit_kohler_jobin(data: &DomainData, spec: &BallSpectrum) -> Vec<AuditEntry> {
    let nf = N as f64;
    let p = (nf + 2.0) / 2.0;
    let lam1 = data.lambdas[0];
    let lam1_b = ball_lambda(spec, 1);
    let t_b = ball_torsion(N);
    let lhs = t_b * lam1_b.powf(p);
    let rhs = data.torsion * lam1.powf(p);
    let budget = data.torsion_budget * lam1.powf(p)
        + data.torsion * p * lam1.powf(p - 1.0) * data.lam_budget[0];
    let kj = entry("torsion-eigenvalue-product", &data.id, lhs, rhs, budget);

    let lhs2 = 1.0 / data.torsion - 1.0 / t_b;
    let rhs2 = p * lam1_b.powf(-p) / t_b * lam1.powf(nf / 2.0) * (lam1 - lam1_b);
    let budget2 = data.torsion_budget / (data.torsion * data.torsion)
        + p * lam1_b.powf(-p) / t_b
            * (lam1.powf(nf / 2.0) + nf / 2.0 * lam1.powf(nf / 2.0 - 1.0) * (lam1 - lam1_b).abs())
            * data.lam_budget[0];
    let chained = entry("torsion-deficit-chained", &data.id, lhs2, rhs2, budget2);
    vec![kj, chained]
}

// ---------------------------------------------------------------------------
// implicit-constant audits

/// Quantitative isoperimetric-type audit: both deficits must be nonnegative
/// and their ratios to the squared asymmetry are tracked; returns the
/// entries and the smallest observed ratio (empirical stability constant).
pub fn audit_quantitative_fk(family: &[DomainData], spec: &BallSpectrum) -> (Vec<AuditEntry>, f64) {
    let mut entries = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for data in family {
        let d = data.deficits(spec);
        if !d.asymmetry.is_finite() || d.asymmetry < 1e-8 {
            continue; // ball-like: ratio undefined
        }
        let f2 = d.asymmetry * d.asymmetry;
        let mut e1 = entry(
            "eigenvalue-deficit-positivity",
            &data.id,
            0.0,
            d.lambda1_deficit,
            d.lambda_budget[0],
        );
        e1.normalized_ratio = Some(d.lambda1_deficit / f2);
        let mut e2 = entry(
            "torsion-deficit-positivity",
            &data.id,
            0.0,
            d.torsion_deficit,
            d.torsion_budget / (data.torsion * data.torsion),
        );
        e2.normalized_ratio = Some(d.torsion_deficit / f2);
        min_ratio = min_ratio.min(d.lambda1_deficit / f2).min(d.torsion_deficit / f2);
        entries.push(e1);
        entries.push(e2);
    }
    (entries, min_ratio)
}

/// Which eigenvalue functional a stability audit tracks.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum SpectralTarget {
    /// A simple ball eigenvalue; deviation expected linear in the torsion
    /// deficit.
    Simple(usize),
    /// One eigenvalue out of a multiple ball eigenvalue; deviation expected
    /// like the square root of the torsion deficit.
    Double(usize),
    /// Full cluster sum; deviation expected linear again.
    ClusterSum(usize, usize),
}

/// Log-log fit of eigenvalue deviation against torsion deficit.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// (log deficit, log deviation) pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    pub dropped_floor: usize,
}

/// Stability audit over the family `r = 1 + eps cos(2 theta)` (normalized):
/// computes deviation and torsion deficit per epsilon, reports the
/// unit-constant normalized ratios of the corresponding stability estimate,
/// and fits the deviation exponent on the smallest epsilons.
pub fn audit_main_theorems(
    target: SpectralTarget,
    eps_grid: &[f64],
    level: u32,
) -> Result<(Vec<AuditEntry>, ExponentFit)> {
    let (k_lo, k_hi) = match target {
        SpectralTarget::Simple(k) | SpectralTarget::Double(k) => (k, k),
        SpectralTarget::ClusterSum(k, l) => (k, l),
    };
    let spec = enumerate_spectrum(N, k_hi as u64 + 1)?;
    let gap = spec.spectral_gap(k_lo as u64)?;
    let nf = N as f64;
    let t_b = ball_torsion(N);
    let (id, k_power) = match target {
        SpectralTarget::Simple(k) => {
            if spec.mode_at(k as u64)?.mult != 1 {
                return Err(Error::Invalid(format!("eigenvalue {k} of the disk is not simple")));
            }
            ("stability-linear-simple", (k as f64).powf(4.0 + 8.0 / nf) / gap)
        }
        SpectralTarget::Double(k) => {
            ("stability-sqrt", (k as f64).powf(2.0 + 4.0 / nf))
        }
        SpectralTarget::ClusterSum(k, l) => {
            let mode = spec.mode_at(k as u64)?;
            if (mode.index_lo, mode.index_hi) != (k as u64, l as u64) {
                return Err(Error::Invalid(format!("{k}..{l} is not a full cluster")));
            }
            ("stability-linear-cluster", (k as f64).powf(6.0 + 10.0 / nf) / gap)
        }
    };

    let results: Vec<Result<(f64, f64, f64, f64, f64)>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let profile = FourierProfile::single(2, eps, false)?;
            let domain = make_domain(profile)?;
            let data = compute_domain_data(&domain, &format!("eps={eps}"), k_hi + 1, level)?;
            let (dev, dev_budget, scale) = match target {
                SpectralTarget::Simple(k) | SpectralTarget::Double(k) => (
                    (data.lambdas[k - 1] - ball_lambda(&spec, k as u64)).abs(),
                    data.lam_budget[k - 1],
                    ball_lambda(&spec, k as u64),
                ),
                SpectralTarget::ClusterSum(k, l) => {
                    let mut dev = 0.0;
                    let mut b = 0.0;
                    let mut s = 0.0;
                    for i in k..=l {
                        dev += data.lambdas[i - 1] - ball_lambda(&spec, i as u64);
                        b += data.lam_budget[i - 1];
                        s += ball_lambda(&spec, i as u64);
                    }
                    (dev.abs(), b, s)
                }
            };
            // The plain two-level difference over-states the error of the
            // extrapolated value; the residual after extrapolation is one
            // factor of h^2 ~ budget/lambda smaller.
            let dev_floor = dev_budget * dev_budget / scale;
            let tdef = 1.0 / data.torsion - 1.0 / t_b;
            Ok((eps, dev, dev_budget, dev_floor, tdef))
        })
        .collect();

    let mut entries = Vec::new();
    let mut samples = Vec::new();
    for r in results {
        let (eps, dev, dev_budget, dev_floor, tdef) = r?;
        let area = PI; // family is volume-normalized
        let rhs = match target {
            SpectralTarget::Double(_) => {
                // square-root form with unit constant
                let spec1 = ball_lambda(&spec, 1); // lambda_1(Omega) ~ lambda_1(B) at small eps
                k_power * spec1.sqrt() * area.sqrt() * tdef.max(0.0).sqrt()
            }
            _ => k_power * area * tdef,
        };
        let mut e = entry(format!("{id}:eps={eps}"), format!("eps={eps}"), dev, rhs, f64::INFINITY);
        e.budget = dev_budget;
        e.satisfied = true; // implicit constant: ratio tracked, not asserted
        e.normalized_ratio = Some(dev / rhs.max(1e-300));
        entries.push(e);
        samples.push((eps, dev, dev_floor, tdef));
    }

    // fit on the 4 smallest eps, dropping solver-floor points
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut points = Vec::new();
    let mut dropped = 0usize;
    for &(_, dev, dev_floor, tdef) in samples.iter().take(4) {
        if dev < 10.0 * dev_floor.max(1e-12) {
            dropped += 1;
            continue;
        }
        points.push((tdef.ln(), dev.ln()));
    }
    if points.len() < 2 {
        return Err(Error::Numeric(
            "not enough resolvable points above the solver floor for the exponent fit".into(),
        ));
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    Ok((entries, ExponentFit { slope, intercept, points, dropped_floor: dropped }))
}

/// Coercivity of the torsion at the ball under centered volume-normalized
/// profiles: `T(B_h) <= T(B) - ||h||^2_{H^{1/2}} / (32 n^2)`, plus tracked
/// ratios `|lambda_k(B_h) - lambda_k(B)| / ||h||^2` for simple k.
pub fn audit_fuglede(profiles: &[FourierProfile], level: u32) -> Result<Vec<AuditEntry>> {
    let spec = enumerate_spectrum(N, 7)?;
    let nf = N as f64;
    let mut out = Vec::new();
    for (i, h) in profiles.iter().enumerate() {
        let id = format!("profile-{i}");
        let norms = profile_norms(h);
        let hh2 = norms.h_half * norms.h_half;
        let domain = make_domain(h.clone())?;
        let data = compute_domain_data(&domain, &id, 6, level)?;
        out.push(entry(
            "torsion-coercivity",
            &id,
            data.torsion,
            ball_torsion(N) - hh2 / (32.0 * nf * nf),
            data.torsion_budget,
        ));
        for k in [1usize, 6] {
            let dev = (data.lambdas[k - 1] - ball_lambda(&spec, k as u64)).abs();
            let mut e = entry(
                format!("eigenvalue-quadratic-response:k={k}"),
                &id,
                dev,
                f64::INFINITY,
                data.lam_budget[k - 1],
            );
            e.rhs = f64::NAN;
            e.normalized_ratio = Some(dev / hh2);
            out.push(e);
        }
    }
    Ok(out)
}

/// Overdetermined-boundary constant of the perturbed optimality system:
/// `Q = (T^2/omega_n)((n+2)/(nT) + (2/n) delta S)` with `S` the eigenvalue
/// (or cluster sum); reports `|Q - 1/n^2|` against `k^{2/n} |delta|`.
pub fn audit_q(
    torsion: f64,
    eigen_sum: f64,
    delta: f64,
    k: usize,
    budget: f64,
) -> AuditEntry {
    let nf = N as f64;
    let q = torsion * torsion / OMEGA_N * ((nf + 2.0) / (nf * torsion) + 2.0 / nf * delta * eigen_sum);
    let dev = (q - 1.0 / (nf * nf)).abs();
    let scale = (k as f64).powf(2.0 / nf) * delta.abs();
    let mut e = entry(format!("q-constant:k={k},delta={delta}"), "domain", dev, scale, budget);
    e.satisfied = if delta == 0.0 { dev <= budget } else { true };
    e.normalized_ratio = if scale > 0.0 { Some(dev / scale) } else { None };
    e
}

// ---------------------------------------------------------------------------
// standard family

/// Seed-fixed family of admissible random profiles: modes up to 6,
/// amplitude up to `amp_max`, deterministic for a given seed.
pub fn standard_family(count: usize, amp_max: f64, seed: u64) -> Vec<FourierProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let degree = rng.gen_range(2..=6usize);
        let mut a = vec![0.0f64; degree + 1];
        let mut b = vec![0.0f64; degree];
        for m in 1..=degree {
            a[m] = rng.gen_range(-1.0..1.0);
            b[m - 1] = rng.gen_range(-1.0..1.0);
        }
        let raw_sup: f64 = (1..=degree).map(|m| (a[m].powi(2) + b[m - 1].powi(2)).sqrt()).sum();
        let amp = rng.gen_range(0.1 * amp_max..amp_max);
        let s = amp / raw_sup;
        for m in 1..=degree {
            a[m] *= s;
            b[m - 1] *= s;
        }
        if let Ok(p) = FourierProfile::new(a, b) {
            if make_domain(p.clone()).is_ok() {
                out.push(p);
            }
        }
    }
    out
}

/// Run every explicit-constant audit over a family of profiles at the given
/// resolution; the workhorse behind the `audit` command.
pub fn audit_family(profiles: &[FourierProfile], k_eigs: usize, level: u32) -> Result<AuditReport> {
    if k_eigs < 4 {
        return Err(Error::Invalid("family audit needs at least 4 eigenvalues".into()));
    }
    let spec = enumerate_spectrum(N, k_eigs as u64 + 1)?;
    let data: Vec<Result<DomainData>> = profiles
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let domain = make_domain(p.clone())?;
            compute_domain_data(&domain, &format!("family-{i}"), k_eigs, level)
        })
        .collect();
    let mut report = AuditReport::default();
    let mut family = Vec::new();
    for d in data {
        family.push(d?);
    }
    for d in &family {
        report.entries.extend(audit_growth(d));
        report.entries.extend(audit_supnorm(d));
        report.entries.extend(audit_kohler_jobin(d, &spec));
        for k in [1usize, 4] {
            report.entries.push(audit_auxiliary(d, &spec, k));
        }
        report.entries.push(audit_torsion_intersection(&d.domain, &d.id, level)?);
    }
    let (qfk, _) = audit_quantitative_fk(&family, &spec);
    report.entries.extend(qfk);
    Ok(report)
}
