//! Stability exponents over the family r = 1 + eps cos(2 theta): how fast
//! eigenvalues drift from the disk values as the torsion deficit grows.
//!
//! Expected slopes: 1.0 for a simple eigenvalue and for the full cluster
//! sum, 0.5 for one eigenvalue out of a split double eigenvalue.

use shapelab::inequality_audit::{audit_main_theorems, SpectralTarget};

fn main() {
    let eps = [0.01, 0.02, 0.04, 0.08, 0.16];
    for (name, target) in [
        ("lambda_6 (simple)      ", SpectralTarget::Simple(6)),
        ("lambda_2 (split double)", SpectralTarget::Double(2)),
        ("lambda_2 + lambda_3    ", SpectralTarget::ClusterSum(2, 3)),
    ] {
        let (entries, fit) = audit_main_theorems(target, &eps, 2).unwrap();
        println!("{name}: slope {:.3} ({} points, {} below floor)", fit.slope, fit.points.len(), fit.dropped_floor);
        for e in &entries {
            println!("    {:<30} ratio {:.4e}", e.inequality_id, e.normalized_ratio.unwrap());
        }
    }
}
