//! Local optimality of the disk for 1/T + delta (lambda_2 + lambda_3):
//! finite-difference Hessian over Fourier modes, delta thresholds, and the
//! reverse torsion-eigenvalue exponent.

use shapelab::optimizer::{
    delta_threshold, fd_hessian, reverse_kj_exponent, EigenFunctional, FunctionalSpec,
};

fn main() {
    let spec = FunctionalSpec::new(EigenFunctional::ClusterSum { lo: 2, hi: 3 }, 1e-3).unwrap();
    let scan = fd_hessian(&spec, 4, 0.02, 1).unwrap();
    println!("directions: {:?}", scan.directions);
    println!("Hessian of 1/T (diagonal): {:?}",
        (0..scan.directions.len()).map(|i| format!("{:.3}", scan.h_torsion[i][i])).collect::<Vec<_>>());
    println!("Hessian of lambda_2+lambda_3 (diagonal): {:?}",
        (0..scan.directions.len()).map(|i| format!("{:.3}", scan.h_eigen[i][i])).collect::<Vec<_>>());
    for delta in [0.0, 1e-3, -1e-3, -0.5] {
        println!("  min eig at delta={delta:<6}: {:+.4}", scan.min_eig_at(delta));
    }

    let thr = delta_threshold(&scan, 1e6).unwrap();
    println!("delta thresholds (stable/unstable brackets): +{:?} -{:?}", thr.plus, thr.minus);

    let kj = reverse_kj_exponent(4, 0.02, 1).unwrap();
    println!(
        "reverse product exponent: p = {:.4} (direct bisection {:.4}); \
         at the classical exponent the pencil flips sign: min eig {:+.3}",
        kj.p_from_threshold, kj.p_direct, kj.min_eig_at_classical
    );
}
