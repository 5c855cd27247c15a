//! Quasi-Newton minimization (BFGS with Armijo backtracking).

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub max_iter: usize,
    /// Stop when |Δf| ≤ rel_tol · (|f| + 1e-12) between accepted steps.
    pub rel_tol: f64,
    /// Stop when ‖∇f‖∞ ≤ grad_tol.
    pub grad_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 2000,
            rel_tol: 1e-9,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(g: &DVector<f64>) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(f: F, x0: &[f64], opts: Options) -> Outcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g) = f(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;

    if !fx.is_finite() {
        return Outcome {
            x: x.as_slice().to_vec(),
            f: fx,
            iterations: 0,
            converged: false,
        };
    }

    for iter in 1..=opts.max_iter {
        if inf_norm(&g) <= opts.grad_tol {
            return done(x, fx, iter - 1, true);
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &d * step;
            let (fxn, gn) = f(xn.as_slice());
            if fxn.is_finite() && fxn <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fxn, DVector::from_vec(gn)));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            if fresh {
                return done(x, fx, iter - 1, inf_norm(&g) <= 1e-6 * (1.0 + fx.abs()));
            }
            h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let change = (fx - fxn).abs();
        x = xn;
        g = gn;
        let f_prev = fx;
        fx = fxn;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← H + (1+ρ yᵀHy) ρ ssᵀ − ρ (H y sᵀ + s yᵀ H)
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        if change <= opts.rel_tol * (f_prev.abs() + 1e-12) {
            return done(x, fx, iter, true);
        }
    }
    let conv = inf_norm(&g) <= opts.grad_tol;
    done(x, fx, opts.max_iter, conv)
}

fn done(x: DVector<f64>, f: f64, iterations: usize, converged: bool) -> Outcome {
    Outcome {
        x: x.as_slice().to_vec(),
        f,
        iterations,
        converged,
    }
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let fp = f(&p);
            p[i] = orig - h;
            let fm = f(&p);
            p[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (v, g)
        };
        let out = minimize(f, &[-1.2, 1.0], Options { rel_tol: 0.0, ..Options::default() });
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn quadratic_in_few_steps() {
        let f = |x: &[f64]| {
            let v: f64 = x.iter().enumerate().map(|(i, t)| (i as f64 + 1.0) * (t - 2.0).powi(2)).sum();
            let g = x.iter().enumerate().map(|(i, t)| 2.0 * (i as f64 + 1.0) * (t - 2.0)).collect();
            (v, g)
        };
        let out = minimize(f, &[0.0; 5], Options::default());
        assert!(out.converged);
        assert!(out.x.iter().all(|t| (t - 2.0).abs() < 1e-4));
        assert!(out.iterations < 50);
    }

    #[test]
    fn numeric_gradient_matches_analytic() {
        let g = numeric_gradient(|x| x[0].sin() * x[1], &[0.3, 2.0], 1e-6);
        assert!((g[0] - 0.3f64.cos() * 2.0).abs() < 1e-8);
        assert!((g[1] - 0.3f64.sin()).abs() < 1e-8);
    }
}
