//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! maximize   W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! Pairs are chosen with the two-loop heuristic: the outer loop alternates
//! between sweeps over all examples and sweeps over the non-bound ones; the
//! second multiplier maximizes `|E1 - E2|`, first over the partners that
//! violate optimality together with the first, then over the non-bound
//! examples, falling back to seeded random starts over the non-bound and then
//! all examples. Violations are measured
//! against the extreme thresholds `b_low`/`b_up` rather than a running bias,
//! so termination certifies the KKT conditions for the final bias. When a
//! full sweep makes no progress while the optimality gap is still open, the
//! maximal violating pair is optimized directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    /// Panics if `data.len() != n * n`.
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "kernel matrix must be n x n");
        Self { n, data }
    }

    pub fn from_fn(n: usize, mut k: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = k(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective at `alpha`.
    pub objective: f64,
    /// `b_low - b_up` at exit; at most `tolerance` when converged.
    pub gap: f64,
    pub passes: usize,
    pub steps: usize,
    pub converged: bool,
}

struct Solver<'a> {
    k: &'a KernelMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    // f[i] = y_i - sum_j a_j y_j K_ij
    f: Vec<f64>,
    rng: ChaCha8Rng,
    steps: usize,
}

impl Solver<'_> {
    fn in_low(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] < self.c) || (self.y[i] < 0.0 && self.alpha[i] > 0.0)
    }

    fn in_up(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] > 0.0) || (self.y[i] < 0.0 && self.alpha[i] < self.c)
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    /// `(b_low, i_low, b_up, i_up)`.
    fn thresholds(&self) -> (f64, usize, f64, usize) {
        let (mut b_low, mut i_low) = (f64::NEG_INFINITY, usize::MAX);
        let (mut b_up, mut i_up) = (f64::INFINITY, usize::MAX);
        for i in 0..self.y.len() {
            if self.in_low(i) && self.f[i] > b_low {
                b_low = self.f[i];
                i_low = i;
            }
            if self.in_up(i) && self.f[i] < b_up {
                b_up = self.f[i];
                i_up = i;
            }
        }
        (b_low, i_low, b_up, i_up)
    }

    fn snap(&self, a: f64) -> f64 {
        let eps = 1e-12 * self.c;
        if a <= eps {
            0.0
        } else if a >= self.c - eps {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize, observer: &mut dyn FnMut(&[f64])) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let (f1, f2) = (self.f[i1], self.f[i2]);
        let eta = self.k.get(i1, i1) + self.k.get(i2, i2) - 2.0 * self.k.get(i1, i2);
        // objective gain for moving a2 by delta along the constraint line
        let gain = |delta: f64| delta * y2 * (f2 - f1) - 0.5 * eta * delta * delta;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (f2 - f1) / eta).clamp(lo, hi)
        } else {
            let (g_lo, g_hi) = (gain(lo - a2), gain(hi - a2));
            if g_lo > g_hi {
                lo
            } else {
                hi
            }
        };
        a2_new = self.snap(a2_new);
        if gain(a2_new - a2) <= 0.0 || (a2_new - a2).abs() <= 1e-12 * (a2_new + a2 + 1e-12) {
            return false;
        }
        let a1_new = self.snap((a1 + s * (a2 - a2_new)).clamp(0.0, self.c));
        let (d1, d2) = ((a1_new - a1) * y1, (a2_new - a2) * y2);
        for i in 0..self.f.len() {
            self.f[i] -= d1 * self.k.get(i, i1) + d2 * self.k.get(i, i2);
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.steps += 1;
        observer(&self.alpha);
        true
    }

    fn examine(&mut self, i2: usize, observer: &mut dyn FnMut(&[f64])) -> bool {
        let n = self.y.len();
        let f2 = self.f[i2];
        let (b_low, i_low, b_up, i_up) = self.thresholds();
        let low_gap = if self.in_low(i2) { f2 - b_up } else { f64::NEG_INFINITY };
        let up_gap = if self.in_up(i2) { b_low - f2 } else { f64::NEG_INFINITY };
        if low_gap.max(up_gap) <= self.tol {
            return false;
        }

        // second choice: the partner with the largest |E1 - E2| among those
        // that form a violating pair with i2, then among non-bound examples
        let partner = if low_gap >= up_gap { i_up } else { i_low };
        if self.take_step(partner, i2, observer) {
            return true;
        }
        let best = (0..n).filter(|&i| i != i2 && self.non_bound(i)).map(|i| (i, (self.f[i] - f2).abs())).fold(
            None::<(usize, f64)>,
            |acc, (i, d)| match acc {
                Some((_, best)) if best >= d => acc,
                _ => Some((i, d)),
            },
        );
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2, observer) {
                return true;
            }
        }

        let start = self.rng.random_range(0..n);
        for offset in 0..n {
            let i1 = (start + offset) % n;
            if self.non_bound(i1) && self.take_step(i1, i2, observer) {
                return true;
            }
        }
        let start = self.rng.random_range(0..n);
        for offset in 0..n {
            let i1 = (start + offset) % n;
            if self.take_step(i1, i2, observer) {
                return true;
            }
        }
        false
    }

    fn objective(&self) -> f64 {
        // W = 1/2 sum_i a_i (1 + y_i f_i)
        0.5 * self.alpha.iter().zip(self.y.iter().zip(&self.f)).map(|(&a, (&y, &f))| a * (1.0 + y * f)).sum::<f64>()
    }
}

/// Solves the dual for labels `y` in `{-1, +1}` (both present).
///
/// `observer` sees the multipliers after every accepted pair update.
pub fn solve(k: &KernelMatrix, y: &[f64], params: &SmoParams, observer: &mut dyn FnMut(&[f64])) -> SmoSolution {
    let n = y.len();
    assert_eq!(k.len(), n, "kernel size must match label count");
    let mut solver = Solver {
        k,
        y,
        c: params.c,
        tol: params.tolerance,
        alpha: vec![0.0; n],
        f: y.to_vec(),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        steps: 0,
    };

    let mut passes = 0;
    let mut examine_all = true;
    let mut converged = false;
    while passes < params.max_passes {
        let mut changed = 0usize;
        for i in 0..n {
            if (examine_all || solver.non_bound(i)) && solver.examine(i, observer) {
                changed += 1;
            }
        }
        passes += 1;
        if examine_all {
            if changed == 0 {
                let (b_low, i_low, b_up, i_up) = solver.thresholds();
                if b_low - b_up <= params.tolerance {
                    converged = true;
                    break;
                }
                if !solver.take_step(i_low, i_up, observer) {
                    break;
                }
            } else {
                examine_all = false;
            }
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let (b_low, _, b_up, _) = solver.thresholds();
    if !converged && b_low - b_up <= params.tolerance {
        converged = true;
    }
    SmoSolution {
        bias: 0.5 * (b_low + b_up),
        objective: solver.objective(),
        gap: b_low - b_up,
        passes,
        steps: solver.steps,
        converged,
        alpha: solver.alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SmoParams {
        SmoParams { c: 1.0, tolerance: 1e-3, max_passes: 200, seed: 0 }
    }

    #[test]
    fn two_points_hit_the_box() {
        // K = [[1, e^-4], [e^-4, 1]]; the unconstrained optimum exceeds C = 1
        let off = (-4.0f64).exp();
        let k = KernelMatrix::new(2, vec![1.0, off, off, 1.0]);
        let sol = solve(&k, &[-1.0, 1.0], &params(), &mut |_| {});
        assert!(sol.converged);
        assert_eq!(sol.alpha, vec![1.0, 1.0]);
        assert!(sol.bias.abs() < 1e-12);
        assert!((sol.objective - (2.0 - (1.0 - off))).abs() < 1e-12);
    }

    #[test]
    fn two_points_interior_solution() {
        let off = 0.5;
        let k = KernelMatrix::new(2, vec![1.0, off, off, 1.0]);
        let p = SmoParams { c: 10.0, ..params() };
        let sol = solve(&k, &[-1.0, 1.0], &p, &mut |_| {});
        // a = 2 / (K11 + K22 - 2 K12)
        assert!((sol.alpha[0] - 2.0).abs() < 1e-12);
        assert!((sol.alpha[1] - 2.0).abs() < 1e-12);
        assert!(sol.gap <= 1e-3);
    }

    #[test]
    fn duplicate_points_with_opposite_labels() {
        // eta = 0: the objective is linear along the pair direction
        let k = KernelMatrix::new(2, vec![1.0; 4]);
        let sol = solve(&k, &[-1.0, 1.0], &params(), &mut |_| {});
        assert_eq!(sol.alpha, vec![1.0, 1.0]);
        assert!(sol.converged);
    }

    #[test]
    fn feasibility_holds_after_every_step() {
        let pts: [f64; 6] = [0.0, 0.3, 1.1, 1.7, 2.5, 3.0];
        let y = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        let k = KernelMatrix::from_fn(6, |i, j| (-(pts[i] - pts[j]) * (pts[i] - pts[j])).exp());
        let mut worst = 0.0f64;
        solve(&k, &y, &params(), &mut |a| {
            let s: f64 = a.iter().zip(&y).map(|(a, y)| a * y).sum();
            worst = worst.max(s.abs());
        });
        assert!(worst < 1e-9);
    }
}
