//! Shape derivatives at and near the disk: criticality of the ball,
//! first derivatives off-center, and the second derivative of a simple
//! eigenvalue along a Fourier direction.

use shapelab::geometry::{make_domain, Domain2D, FourierProfile};
use shapelab::shape_calculus::{
    d2_lambda_at_ball, d_cluster_sum, d_lambda_simple, d_torsion, double_eigenvalue_directional,
};

fn main() {
    let disk = Domain2D::disk();
    let level = 2;

    println!("first derivatives at the disk along cos(m theta) (all ~ 0):");
    for m in 2..=4 {
        let dir = FourierProfile::mode(m, 1.0, false);
        let t = d_torsion(&disk, &dir, level).unwrap();
        let l1 = d_lambda_simple(&disk, &dir, 1, level).unwrap();
        let cl = d_cluster_sum(&disk, &dir, 2, 3, level).unwrap();
        println!("  m={m}: T'={:+.2e}  lambda_1'={:+.2e}  (l2+l3)'={:+.2e}", t.value, l1.value, cl.value);
    }

    // off the disk the derivatives are genuinely nonzero
    let domain = make_domain(FourierProfile::single(3, 0.1, false).unwrap()).unwrap();
    let dir = FourierProfile::mode(3, 1.0, false);
    let t = d_torsion(&domain, &dir, level).unwrap();
    println!(
        "at r = 1 + 0.1 cos(3t): T' = {:.6} (volume form {:.6}, difference is the error scale)",
        t.value,
        t.alt_value.unwrap()
    );

    // second derivative of lambda_6 (simple) along cos(2 theta), area fixed
    let h = FourierProfile::mode(2, 1.0, false);
    let d2 = d2_lambda_at_ball(6, &h, level).unwrap();
    println!(
        "lambda_6''[cos 2t]: raw {:.4}, volume-normalized {:.4}",
        d2.raw, d2.volume_normalized
    );

    // the double eigenvalue lambda_2 = lambda_3 only has directional
    // derivatives; along cos(2 theta) they split symmetrically
    let dirs = double_eigenvalue_directional(2, 3, &h, level).unwrap();
    println!("directional derivatives of the (2,3) cluster along cos 2t: {dirs:?}");
}
