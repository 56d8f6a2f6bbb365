//! Finite-element eigenvalues and torsion of the disk against the exact
//! Bessel values, with Richardson extrapolation across two mesh levels.

use shapelab::ball_spectrum::{ball_torsion, enumerate_spectrum};
use shapelab::dirichlet_solver::{build_mesh, extrapolate, solve_eigs, solve_torsion};
use shapelab::geometry::Domain2D;

fn main() {
    let disk = Domain2D::disk();
    let spec = enumerate_spectrum(2, 6).unwrap();

    let coarse = build_mesh(&disk, 1).unwrap();
    let fine = build_mesh(&disk, 2).unwrap();
    let ec = solve_eigs(&coarse, 6).unwrap();
    let ef = solve_eigs(&fine, 6).unwrap();
    println!("  k   exact          level 1        level 2        extrapolated   rel err");
    for k in 1..=6usize {
        let exact = spec.lambda(k as u64).unwrap();
        let ex = extrapolate(ec.lambdas[k - 1], ef.lambdas[k - 1], true);
        println!(
            "  {k}   {exact:<14.8} {:<14.8} {:<14.8} {:<14.8} {:.2e}",
            ec.lambdas[k - 1],
            ef.lambdas[k - 1],
            ex.value,
            (ex.value - exact).abs() / exact
        );
        // conforming elements approach from above
        assert!(ef.lambdas[k - 1] >= exact);
    }

    let tc = solve_torsion(&coarse).unwrap();
    let tf = solve_torsion(&fine).unwrap();
    let tx = extrapolate(tc.t, tf.t, false);
    println!(
        "  T   {:<14.10} extrapolated {:<14.10} rel err {:.2e} (lower bounds: {} {})",
        ball_torsion(2),
        tx.value,
        (tx.value - ball_torsion(2)).abs() / ball_torsion(2),
        tc.t <= ball_torsion(2),
        tf.t <= ball_torsion(2),
    );
    println!("  max of the torsion function: {} (continuum bound 1/4)", tf.w_max);
}
