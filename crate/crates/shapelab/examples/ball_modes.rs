//! Exact Dirichlet spectrum of the unit ball: mode table, multiplicity
//! clusters, simple indices and spectral gaps.

use shapelab::ball_spectrum::{ball_torsion, enumerate_spectrum, li_yau_constant};

fn main() {
    let spec = enumerate_spectrum(2, 600).unwrap();
    println!("unit disk, first thirty eigenvalues (with multiplicity):");
    for k in 1..=30u64 {
        let m = spec.mode_at(k).unwrap();
        if k == m.index_lo {
            println!(
                "  k={:>3}..{:<3}  lambda={:<12.6} (d={}, p={}, mult={})",
                m.index_lo, m.index_hi, m.lambda, m.d, m.p, m.mult
            );
        }
    }
    println!("simple indices up to 600: {:?}", spec.simple_indices(600));
    println!(
        "spectral gaps g(k) at the simple indices: {:?}",
        spec.simple_indices(600)
            .iter()
            .map(|&k| format!("{:.3}", spec.spectral_gap(k).unwrap()))
            .collect::<Vec<_>>()
    );
    println!("growth constant a_2 = {} (exact: 2 pi^2 / pi = 2 pi)", li_yau_constant(2));
    println!("T(disk) = {} (= pi/8)", ball_torsion(2));

    // higher dimension: multiplicities 1, 3, 5, ... of the 3-ball
    let s3 = enumerate_spectrum(3, 20).unwrap();
    println!("3-ball clusters:");
    for m in &s3.modes {
        println!("  lambda={:<12.6} mult={}", m.lambda, m.mult);
    }
}
