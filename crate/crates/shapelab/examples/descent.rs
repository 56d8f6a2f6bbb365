//! Projected gradient descent of 1/T + delta (lambda_2 + lambda_3) in the
//! unit-area class, from an elliptical start back to the disk.

use shapelab::optimizer::{projected_descent, EigenFunctional, FunctionalSpec};

fn main() {
    let spec = FunctionalSpec::new(EigenFunctional::ClusterSum { lo: 2, hi: 3 }, 1e-3).unwrap();
    let start = [0.1, 0.0, 0.0, 0.0]; // h = 0.1 cos(2 theta)
    let traj = projected_descent(&spec, &start, 3, 40, 1).unwrap();
    println!("step  value            |grad|      coefficients");
    for (i, v) in traj.values.iter().enumerate() {
        let c: Vec<String> = traj.coeffs[i].iter().map(|x| format!("{x:+.5}")).collect();
        println!("{i:>4}  {v:.10}  {:.3e}  [{}]", traj.grad_norms[i], c.join(", "));
    }
    println!("converged: {}", traj.converged);
}
