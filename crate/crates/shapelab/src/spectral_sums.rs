//! Spectral-sum functionals: heat traces with rigorous tail certificates,
//! gap-based cluster partitions of the ball spectrum, and weighted sums of
//! derivative envelopes of a spectral weight.
//!
//! Every partial sum carries a tail bound obtained from the polynomial lower
//! bound `lambda_k >= a_n k^{2/n}` and integral comparison; values are never
//! reported without one.

use crate::ball_spectrum::{enumerate_spectrum, li_yau_constant, BallSpectrum};
use crate::bessel::ln_gamma;
use crate::{Error, Result};
use serde::Serialize;

/// Maximal index of a contiguous block of the spectrum, relative to its
/// minimal index, as permitted inside one cluster.
pub fn cluster_ratio_cap(n: u32) -> f64 {
    let nf = n as f64;
    let spec = enumerate_spectrum(n, 1).expect("ball spectrum");
    let lam1 = spec.lambda(1).expect("first eigenvalue");
    ((1.0 + 4.0 / nf) * 2.0 * lam1 / li_yau_constant(n)).powf(nf / 2.0)
}

/// One interval of the cluster partition.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterInterval {
    pub lo: u64,
    pub hi: u64,
    /// Sub-intervals of indices sharing the exact same eigenvalue.
    pub equality_classes: Vec<(u64, u64)>,
}

/// Partition of `1..=k_max` into spectral clusters: consecutive indices stay
/// together exactly when the eigenvalue gap is below `c_n i^{2/n - 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterPartition {
    pub n: u32,
    pub k_max: u64,
    /// Gap threshold constant `a_n / n`.
    pub c_n: f64,
    /// Cap on the index ratio `hi/lo` within one interval.
    pub d_n: f64,
    pub intervals: Vec<ClusterInterval>,
    /// Largest observed `hi/lo` over the intervals.
    pub max_ratio: f64,
    /// Whether every interval satisfies `hi <= d_n * lo`.
    pub ratio_ok: bool,
}

pub fn cluster_partition(n: u32, k_max: u64) -> Result<ClusterPartition> {
    if k_max == 0 {
        return Err(Error::Invalid("empty partition".into()));
    }
    let spec = enumerate_spectrum(n, k_max + 1)?;
    let nf = n as f64;
    let c_n = li_yau_constant(n) / nf;
    let d_n = cluster_ratio_cap(n);
    let mut intervals: Vec<ClusterInterval> = Vec::new();
    let mut lo = 1u64;
    for i in 1..=k_max {
        let gap = spec.lambda(i + 1)? - spec.lambda(i)?;
        let threshold = c_n * (i as f64).powf(2.0 / nf - 1.0);
        let joined = gap < threshold;
        if !joined || i == k_max {
            let hi = i;
            intervals.push(ClusterInterval {
                lo,
                hi,
                equality_classes: equality_classes(&spec, lo, hi),
            });
            lo = i + 1;
        }
    }
    let mut max_ratio = 0.0f64;
    for iv in &intervals {
        max_ratio = max_ratio.max(iv.hi as f64 / iv.lo as f64);
    }
    Ok(ClusterPartition {
        n,
        k_max,
        c_n,
        d_n,
        max_ratio,
        ratio_ok: max_ratio <= d_n,
        intervals,
    })
}

fn equality_classes(spec: &BallSpectrum, lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut k = lo;
    while k <= hi {
        let mode = spec.mode_at(k).expect("enumerated index");
        let end = mode.index_hi.min(hi);
        out.push((k, end));
        k = end + 1;
    }
    out
}

impl ClusterPartition {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,size,equality_classes\n");
        for iv in &self.intervals {
            let classes: Vec<String> = iv
                .equality_classes
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                iv.lo,
                iv.hi,
                iv.hi - iv.lo + 1,
                classes.join(";")
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// incomplete gamma

/// Regularized upper incomplete gamma `Q(s, x) = Gamma(s, x) / Gamma(s)`.
pub fn gamma_q(s: f64, x: f64) -> Result<f64> {
    if s <= 0.0 || x < 0.0 {
        return Err(Error::Domain(format!("gamma_q needs s > 0, x >= 0; got ({s}, {x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < s + 1.0 {
        // lower series: P(s,x) = x^s e^-x / Gamma(s) * sum x^k / (s)_{k+1}
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..500 {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                let p = (s * x.ln() - x - ln_gamma(s)).exp() * sum;
                return Ok((1.0 - p).max(0.0));
            }
        }
        Err(Error::Numeric("incomplete gamma series stalled".into()))
    } else {
        // continued fraction (modified Lentz)
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok((s * x.ln() - x - ln_gamma(s)).exp() * h);
            }
        }
        Err(Error::Numeric("incomplete gamma fraction stalled".into()))
    }
}

/// Upper incomplete gamma `Gamma(s, x)`.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    Ok(gamma_q(s, x)? * ln_gamma(s).exp())
}

// ---------------------------------------------------------------------------
// heat traces

/// Tail certificate for the ball heat trace cut at index `k`:
/// `sum_{i>k} e^{-t lambda_i} <= (n/2) (t a_n)^{-n/2} Gamma(n/2, t a_n k^{2/n})`.
pub fn heat_tail_bound(n: u32, t: f64, k: u64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Domain("heat trace needs t > 0".into()));
    }
    let nf = n as f64;
    let a = li_yau_constant(n);
    let x = t * a * (k as f64).powf(2.0 / nf);
    Ok(nf / 2.0 * (t * a).powf(-nf / 2.0) * upper_incomplete_gamma(nf / 2.0, x)?)
}

/// Heat trace of the unit ball: partial sum to an automatically chosen cut
/// plus the integral tail certificate, `tail <= 1e-10 * value`.
pub fn heat_trace_ball(n: u32, t: f64, k_cut: u64) -> Result<(f64, f64)> {
    if t <= 0.0 {
        return Err(Error::Domain("heat trace needs t > 0".into()));
    }
    // size the cut from the tail formula alone before enumerating anything;
    // the value is at least e^{-t lambda_1}
    let lam1 = enumerate_spectrum(n, 1)?.lambda(1)?;
    let floor = (-t * lam1).exp();
    let mut k = k_cut.max(8);
    while heat_tail_bound(n, t, k)? > 1e-10 * floor {
        if k >= 100_000 {
            return Err(Error::Numeric(format!(
                "t = {t} too small: tail certificate not reached within the enumeration cap"
            )));
        }
        k = (k * 2).min(100_000);
    }
    let spec = enumerate_spectrum(n, k)?;
    let mut value = 0.0;
    for i in 1..=k {
        value += (-t * spec.lambda(i)?).exp();
    }
    let tail = heat_tail_bound(n, t, k)?;
    debug_assert!(tail <= 1e-10 * value);
    Ok((value, tail))
}

/// Heat trace of a computed domain spectrum: partial sum over the supplied
/// eigenvalues with their error budgets propagated, plus the polynomial-tail
/// certificate from the truncation index.
///
/// Valid because domain eigenvalues also obey `lambda_k >= a_n k^{2/n}`
/// at unit volume.
pub fn heat_trace_domain(lambdas: &[f64], errs: &[f64], n: u32, t: f64) -> Result<(f64, f64)> {
    if t <= 0.0 {
        return Err(Error::Domain("heat trace needs t > 0".into()));
    }
    if lambdas.is_empty() || lambdas.len() != errs.len() {
        return Err(Error::Invalid("eigenvalue/budget length mismatch".into()));
    }
    let mut value = 0.0;
    let mut budget = 0.0;
    for (l, e) in lambdas.iter().zip(errs) {
        value += (-t * l).exp();
        budget += t * (-t * l).exp() * e;
    }
    let tail = heat_tail_bound(n, t, lambdas.len() as u64)?;
    Ok((value, budget + tail))
}

/// Normalized heat-trace deficit `|Z_domain - Z_ball| / (t^{-(4n+3)} * dlam)`
/// where `dlam` is the first-eigenvalue deficit.
pub fn heat_deficit_ratio(n: u32, t: f64, z_domain: f64, z_ball: f64, dlam1: f64) -> Result<f64> {
    if dlam1 <= 0.0 {
        return Err(Error::Domain("first-eigenvalue deficit must be positive".into()));
    }
    let p = -(4.0 * n as f64 + 3.0);
    Ok((z_domain - z_ball).abs() / (t.powf(p) * dlam1))
}

// ---------------------------------------------------------------------------
// weighted derivative sums

/// Spectral weight whose derivative envelopes have closed forms.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum WeightSpec {
    /// `f(lambda) = exp(-t lambda)`, `t > 0`.
    Heat { t: f64 },
    /// `f(lambda) = lambda^{-s}`.
    Power { s: f64 },
}

impl WeightSpec {
    /// `(sup |f'|, sup |f''|)` over `[x, inf)`; both derivatives decrease in
    /// magnitude for these weights, so the sup sits at the left endpoint.
    fn derivative_sups(&self, x: f64) -> (f64, f64) {
        match *self {
            WeightSpec::Heat { t } => {
                let e = (-t * x).exp();
                (t * e, t * t * e)
            }
            WeightSpec::Power { s } => (s * x.powf(-s - 1.0), s * (s + 1.0) * x.powf(-s - 2.0)),
        }
    }
}

/// Weighted derivative sum over the polynomial eigenvalue floor.
#[derive(Debug, Clone, Serialize)]
pub struct BnReport {
    pub value: f64,
    /// Whether the full series converges for this weight.
    pub finite: bool,
    /// First index from which the terms decrease.
    pub decay_onset: Option<usize>,
    pub terms: usize,
    pub tail_note: String,
}

/// Partial sum of
/// `sum_i i^{7+8/n} sup_{lambda >= a_n i^{2/n}} |f'| + i^{6+10/n} sup |f''|`.
///
/// Power weights with `s <= 4n+3` make the series diverge; the partial sum is
/// still returned, flagged.
pub fn b_n_sum(n: u32, weight: &WeightSpec, cutoff: usize) -> Result<BnReport> {
    if cutoff == 0 {
        return Err(Error::Invalid("cutoff must be positive".into()));
    }
    match *weight {
        WeightSpec::Heat { t } if t <= 0.0 => {
            return Err(Error::Domain("exponential weight needs t > 0".into()))
        }
        WeightSpec::Power { s } if s <= 0.0 => {
            return Err(Error::Domain("power weight needs s > 0".into()))
        }
        _ => {}
    }
    let nf = n as f64;
    let a = li_yau_constant(n);
    let finite = match *weight {
        WeightSpec::Heat { .. } => true,
        WeightSpec::Power { s } => s > 4.0 * nf + 3.0,
    };
    let mut value = 0.0;
    let mut prev = f64::INFINITY;
    let mut decay_onset = None;
    for i in 1..=cutoff {
        let x = a * (i as f64).powf(2.0 / nf);
        let (s1, s2) = weight.derivative_sups(x);
        let term = (i as f64).powf(7.0 + 8.0 / nf) * s1 + (i as f64).powf(6.0 + 10.0 / nf) * s2;
        value += term;
        if decay_onset.is_none() && term < prev && i > 1 {
            decay_onset = Some(i);
        }
        prev = term;
    }
    let tail_note = if finite {
        let x = a * (cutoff as f64).powf(2.0 / nf);
        let (s1, s2) = weight.derivative_sups(x);
        let last = (cutoff as f64).powf(7.0 + 8.0 / nf) * s1
            + (cutoff as f64).powf(6.0 + 10.0 / nf) * s2;
        format!("convergent; last term {last:.3e}")
    } else {
        "divergent series: power weight needs s > 4n+3".to_string()
    };
    Ok(BnReport { value, finite, decay_onset, terms: cutoff, tail_note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet_solver::{build_mesh, extrapolate, solve_eigs};
    use crate::geometry::{make_domain, Domain2D, FourierProfile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn incomplete_gamma_closed_forms() {
        // Gamma(1, x) = e^{-x}; Gamma(2, x) = (1 + x) e^{-x}
        for &x in &[0.3, 1.0, 4.0, 12.0] {
            assert_abs_diff_eq!(
                upper_incomplete_gamma(1.0, x).unwrap(),
                (-x as f64).exp(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                upper_incomplete_gamma(2.0, x).unwrap(),
                (1.0 + x) * (-x as f64).exp(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn incomplete_gamma_against_quadrature() {
        // direct Simpson integration of t^{s-1} e^{-t} on [x, x+80]
        for &(s, x) in &[(1.5f64, 0.7f64), (2.5, 3.0), (0.8, 0.2), (3.0, 10.0)] {
            let f = |t: f64| t.powf(s - 1.0) * (-t).exp();
            let n = 200_000;
            let hi = x + 80.0;
            let h = (hi - x) / n as f64;
            let mut acc = f(x) + f(hi);
            for i in 1..n {
                acc += f(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let reference = acc * h / 3.0;
            let got = upper_incomplete_gamma(s, x).unwrap();
            assert_abs_diff_eq!(got, reference, epsilon = 1e-10 * reference.max(1e-10));
        }
    }

    #[test]
    fn partition_small_case() {
        let p = cluster_partition(2, 10).unwrap();
        // indices 2 and 3 share an eigenvalue, hence an equality class
        let holder = p
            .intervals
            .iter()
            .find(|iv| iv.lo <= 2 && 3 <= iv.hi)
            .expect("2 and 3 must share an interval");
        assert!(holder.equality_classes.contains(&(2, 3)));
        // intervals tile 1..=10
        let mut expect = 1;
        for iv in &p.intervals {
            assert_eq!(iv.lo, expect);
            expect = iv.hi + 1;
        }
        assert_eq!(expect, 11);
        // the gap rule is reproduced exactly
        let spec = enumerate_spectrum(2, 11).unwrap();
        for iv in &p.intervals {
            for i in iv.lo..iv.hi {
                let gap = spec.lambda(i + 1).unwrap() - spec.lambda(i).unwrap();
                assert!(gap < p.c_n * (i as f64).powf(0.0), "rule violated inside interval");
            }
        }
    }

    #[test]
    fn partition_ratio_cap_holds_to_500() {
        let p = cluster_partition(2, 500).unwrap();
        assert!(p.ratio_ok, "max ratio {} exceeds cap {}", p.max_ratio, p.d_n);
        // singleton intervals satisfy the cap trivially; d_n > 1
        assert!(p.d_n > 1.0);
    }

    #[test]
    fn partition_is_deterministic() {
        let a = cluster_partition(2, 120).unwrap();
        let b = cluster_partition(2, 120).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn partition_in_three_dimensions() {
        let p = cluster_partition(3, 60).unwrap();
        assert!(p.ratio_ok);
        // first eigenvalue is simple and multiplicities are respected
        assert_eq!(p.intervals[0].equality_classes[0], (1, 1));
    }

    #[test]
    fn ball_heat_trace_certificate() {
        let (value, tail) = heat_trace_ball(2, 1.0, 8).unwrap();
        assert!(tail <= 1e-10 * value);
        // dominated by the first three indices at t = 1
        let spec = enumerate_spectrum(2, 3).unwrap();
        let s3: f64 = (1..=3).map(|i| (-spec.lambda(i).unwrap()).exp()).sum();
        let tail3 = heat_tail_bound(2, 1.0, 3).unwrap();
        assert!((value - s3).abs() <= tail3);

        // strictly decreasing in t
        let mut prev = f64::INFINITY;
        for &t in &[0.3, 0.5, 1.0, 2.0, 4.0] {
            let (v, _) = heat_trace_ball(2, t, 8).unwrap();
            assert!(v < prev);
            prev = v;
        }

        // small t still certifies
        let (v, tl) = heat_trace_ball(2, 0.1, 8).unwrap();
        assert!(tl <= 1e-10 * v);
    }

    #[test]
    fn heat_trace_rejects_bad_t() {
        assert!(heat_trace_ball(2, 0.0, 8).is_err());
        assert!(heat_trace_ball(2, 1e-6, 8).is_err());
    }

    #[test]
    fn domain_heat_trace_matches_ball_on_the_disk() {
        let disk = Domain2D::disk();
        let k = 12usize;
        let mut levels = Vec::new();
        for level in [0u32, 1] {
            let mesh = build_mesh(&disk, level).unwrap();
            levels.push(solve_eigs(&mesh, k).unwrap());
        }
        let mut lambdas = Vec::new();
        let mut errs = Vec::new();
        for i in 0..k {
            let e = extrapolate(levels[0].lambdas[i], levels[1].lambdas[i], true);
            lambdas.push(e.value);
            errs.push(e.err_est);
        }
        let t = 0.5;
        let (zd, budget) = heat_trace_domain(&lambdas, &errs, 2, t).unwrap();
        let (zb, tailb) = heat_trace_ball(2, t, 16).unwrap();
        // extrapolated budgets absorb the coarse grids
        assert!(
            (zd - zb).abs() <= budget + tailb,
            "disk trace {zd} vs ball {zb}, budget {budget}"
        );
    }

    #[test]
    fn deficit_ratio_tracks_a_constant_across_t() {
        let domain = make_domain(FourierProfile::single(2, 0.1, false).unwrap()).unwrap();
        let k = 12usize;
        let mesh = build_mesh(&domain, 1).unwrap();
        let res = solve_eigs(&mesh, k).unwrap();
        let spec = enumerate_spectrum(2, 1).unwrap();
        let dlam = res.lambdas[0] - spec.lambda(1).unwrap();
        assert!(dlam > 0.0, "volume-normalized perturbation must raise lambda_1");
        let errs = vec![1e-2; k];
        let mut ratios = Vec::new();
        for &t in &[0.5, 1.0, 2.0] {
            let (zd, _) = heat_trace_domain(&res.lambdas, &errs, 2, t).unwrap();
            let (zb, _) = heat_trace_ball(2, t, 16).unwrap();
            let r = heat_deficit_ratio(2, t, zd, zb, dlam).unwrap();
            assert!(r.is_finite() && r > 0.0);
            ratios.push(r);
        }
        let max = ratios.iter().cloned().fold(0.0f64, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        // the normalizer t^{-(4n+3)} vastly overshoots at these t, but the
        // ratio must stay bounded on the grid
        assert!(max / min < 1e6, "ratios {ratios:?}");
    }

    #[test]
    fn weighted_sum_exponential_converges() {
        let w = WeightSpec::Heat { t: 1.0 };
        let r1 = b_n_sum(2, &w, 40).unwrap();
        let r2 = b_n_sum(2, &w, 400).unwrap();
        assert!(r1.finite && r2.finite);
        assert!(r2.value >= r1.value);
        // stabilized well before 400 terms
        assert!((r2.value - r1.value) <= 1e-9 * r2.value);
        assert!(r1.decay_onset.is_some());
    }

    #[test]
    fn weighted_sum_power_threshold() {
        // n = 2: finite needs s > 11
        let fine = b_n_sum(2, &WeightSpec::Power { s: 12.0 }, 200).unwrap();
        assert!(fine.finite);
        let bad = b_n_sum(2, &WeightSpec::Power { s: 10.0 }, 200).unwrap();
        assert!(!bad.finite);
        assert!(bad.tail_note.contains("divergent"));
    }

    #[test]
    fn weighted_sum_monotone_in_cutoff() {
        let w = WeightSpec::Power { s: 12.0 };
        let mut prev = 0.0;
        for cutoff in [10, 20, 40, 80] {
            let r = b_n_sum(2, &w, cutoff).unwrap();
            assert!(r.value > prev);
            prev = r.value;
        }
    }
}
