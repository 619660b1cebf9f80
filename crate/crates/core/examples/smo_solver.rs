//! The SMO dual solver on a small 2-D problem, with the KKT certificate
//! checked by hand.
//!
//! Run:
//!   cargo run -p emg-affect --example smo_solver

use emg_affect::svm::rbf;
use emg_affect::svm::smo::{solve, KernelMatrix, SmoParams};

fn main() {
    let points = [[0.0, 0.0], [0.3, 0.8], [1.0, 0.2], [2.0, 2.1], [2.4, 1.5], [1.2, 1.3], [0.9, 1.0]];
    let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0];
    let gamma = 0.8;
    let k = KernelMatrix::from_fn(points.len(), |i, j| rbf(gamma, &points[i], &points[j]));
    let params = SmoParams { c: 2.0, tolerance: 1e-6, max_passes: 200, seed: 0 };

    let mut trace = Vec::new();
    let sol = solve(&k, &y, &params, &mut |alpha| trace.push(alpha.to_vec()));
    println!("converged {} after {} passes and {} steps", sol.converged, sol.passes, sol.steps);
    println!("objective {:.6}, bias {:.6}, gap {:.2e}", sol.objective, sol.bias, sol.gap);

    println!("\n  i   y    alpha   y*f(x)");
    for i in 0..points.len() {
        let f: f64 = (0..points.len()).map(|j| sol.alpha[j] * y[j] * k.get(i, j)).sum::<f64>() + sol.bias;
        println!("{i:>3} {:>+3} {:>8.4} {:>8.4}", y[i] as i32, sol.alpha[i], y[i] * f);
    }
    let s: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
    println!("\nsum alpha_i y_i = {s:.2e}; {} intermediate multiplier vectors observed", trace.len());
}
