//! Heat traces with tail certificates, the eigenvalue cluster partition,
//! and weighted spectral sums.

use shapelab::spectral_sums::{b_n_sum, cluster_partition, heat_trace_ball, WeightSpec};

fn main() {
    println!("disk heat trace (value, rigorous tail bound):");
    for t in [0.1, 0.5, 1.0, 2.0] {
        let (z, tail) = heat_trace_ball(2, t, 64).unwrap();
        println!("  t={t:<4} Z={z:<22.15e} tail<= {tail:.3e}");
    }

    let part = cluster_partition(2, 100).unwrap();
    println!(
        "cluster partition of 1..100: {} intervals, max sup/inf {:.3}, cap D_2 = {:.3}, gap rule ok: {}",
        part.intervals.len(),
        part.max_ratio,
        part.d_n,
        part.ratio_ok
    );
    println!("first intervals: {:?}", &part.intervals[..6.min(part.intervals.len())]);

    // weighted sums: exponential weight converges, lambda^{-s} needs s > 11
    for (label, w) in [
        ("exp(-lambda)", WeightSpec::Heat { t: 1.0 }),
        ("lambda^-12  ", WeightSpec::Power { s: 12.0 }),
        ("lambda^-10  ", WeightSpec::Power { s: 10.0 }),
    ] {
        let r = b_n_sum(2, &w, 200).unwrap();
        println!(
            "B_2[{label}] = {:<14.6e} finite: {:<5} decay onset i = {:?}",
            r.value, r.finite, r.decay_onset
        );
    }
}
