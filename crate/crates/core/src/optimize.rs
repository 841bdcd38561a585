//! Local quasi-Newton minimization with a multi-start driver.
//!
//! The variational norms and entropies in this crate are smooth but
//! nonconvex functions of a complex matrix `G`. They are minimized with BFGS
//! (Armijo backtracking) from several starting points; the spread of the
//! restart values is reported so callers can detect multimodality.

use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::C64;

/// A smooth real function of `dim()` real variables.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Value and analytic gradient, or `None` when only finite differences are available.
    fn value_and_gradient(&self, _x: &[f64], _grad: &mut [f64]) -> Option<f64> {
        None
    }
}

/// Maximization adaptor: minimizes `-f`.
pub struct Negated<'a, O: ?Sized>(pub &'a O);

impl<O: Objective + ?Sized> Objective for Negated<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        -self.0.value(x)
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let v = self.0.value_and_gradient(x, grad)?;
        grad.iter_mut().for_each(|g| *g = -*g);
        Some(-v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Use the objective's analytic gradient when it provides one.
    Analytic,
    /// Central finite differences.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub fd_step: f64,
    pub gradient: GradientMode,
}

impl Default for Settings {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-9, fd_step: 1e-6, gradient: GradientMode::Analytic }
    }
}

#[derive(Debug, Clone)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Central-difference gradient.
pub fn finite_difference_gradient<O: Objective + ?Sized>(obj: &O, x: &[f64], step: f64, grad: &mut [f64]) {
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = obj.value(&probe);
        probe[i] = orig - step;
        let fm = obj.value(&probe);
        probe[i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
}

fn evaluate<O: Objective + ?Sized>(obj: &O, x: &[f64], settings: &Settings, grad: &mut [f64]) -> f64 {
    if settings.gradient == GradientMode::Analytic {
        if let Some(v) = obj.value_and_gradient(x, grad) {
            return v;
        }
    }
    finite_difference_gradient(obj, x, settings.fd_step, grad);
    obj.value(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// BFGS from `x0`. The recorded history is nonincreasing.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], settings: &Settings) -> LocalResult {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "starting point has wrong dimension");
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = evaluate(obj, &x, settings, &mut g);
    let mut history = vec![f];
    let mut h = identity_matrix(n);
    let mut fresh_h = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut stalls = 0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    while iterations < settings.max_iters {
        if !f.is_finite() {
            break;
        }
        if inf_norm(&g) <= settings.grad_tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut d = mat_vec_neg(&h, &g);
        let mut slope = dot(&d, &g);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity_matrix(n);
            fresh_h = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let mut alpha = if fresh_h { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + alpha * d[i];
            }
            let trial = obj.value(&x_new);
            if trial.is_finite() && trial <= f + 1e-4 * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        let Some(_) = accepted else {
            if !fresh_h {
                h = identity_matrix(n);
                fresh_h = true;
                continue;
            }
            // No descent possible along the gradient: stationary to working precision.
            converged = inf_norm(&g) <= settings.grad_tol.sqrt() * f.abs().max(1.0);
            break;
        };
        let f_new = evaluate(obj, &x_new, settings, &mut g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh_h {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
                fresh_h = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let decrease = f - f_new;
        if decrease <= 1e-15 * f.abs().max(1.0) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        history.push(f);
        if stalls >= 5 {
            converged = inf_norm(&g) <= settings.grad_tol.sqrt() * f.abs().max(1.0);
            break;
        }
    }
    LocalResult { x, value: f, iterations, converged, history }
}

fn identity_matrix(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec_neg(h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], g)).collect()
}

// H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Outcome of a multi-start minimization.
#[derive(Debug, Clone)]
pub struct MultiResult {
    pub best: LocalResult,
    /// Final value of every restart, in start order.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub all_converged: bool,
}

impl MultiResult {
    pub fn spread(&self) -> f64 {
        let finite = self.values.iter().filter(|v| v.is_finite());
        let max = finite.clone().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = finite.fold(f64::INFINITY, |a, &b| a.min(b));
        if max >= min {
            max - min
        } else {
            0.0
        }
    }
}

/// Run [`minimize`] from every start and keep the lowest value. Ties keep the
/// earliest start, so the result does not depend on evaluation order.
pub fn multistart<O: Objective + ?Sized>(obj: &O, starts: &[Vec<f64>], settings: &Settings) -> MultiResult {
    assert!(!starts.is_empty(), "multistart needs at least one start");
    let mut best: Option<LocalResult> = None;
    let mut values = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    let mut all_converged = true;
    for x0 in starts {
        let r = minimize(obj, x0, settings);
        iterations += r.iterations;
        all_converged &= r.converged;
        values.push(r.value);
        let better = match &best {
            None => true,
            Some(b) => r.value < b.value || (!b.value.is_finite() && r.value.is_finite()),
        };
        if better {
            best = Some(r);
        }
    }
    MultiResult { best: best.expect("at least one start"), values, iterations, all_converged }
}

/// Packing of a complex `rows × cols` matrix into `2·rows·cols` reals:
/// real parts row-major, then imaginary parts row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixParam {
    pub rows: usize,
    pub cols: usize,
}

impl MatrixParam {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn len(&self) -> usize {
        2 * self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unpack(&self, x: &[f64]) -> ComplexMatrix {
        let n = self.rows * self.cols;
        ComplexMatrix::from_fn(self.rows, self.cols, |r, c| {
            let i = r * self.cols + c;
            C64::new(x[i], x[n + i])
        })
    }

    pub fn pack(&self, m: &ComplexMatrix) -> Vec<f64> {
        assert_eq!((m.nrows(), m.ncols()), (self.rows, self.cols));
        let n = self.rows * self.cols;
        let mut x = vec![0.0; 2 * n];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                x[i] = m[(r, c)].re;
                x[n + i] = m[(r, c)].im;
            }
        }
        x
    }

    /// Gradient of a real function whose differential is `df = 2 Re Tr(W dG)`,
    /// `W` being `cols × rows`.
    pub fn gradient_from_differential(&self, w: &ComplexMatrix, scale: f64, grad: &mut [f64]) {
        let n = self.rows * self.cols;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                let v = w[(c, r)];
                grad[i] = 2.0 * scale * v.re;
                grad[n + i] = -2.0 * scale * v.im;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn value_and_gradient(&self, x: &[f64], g: &mut [f64]) -> Option<f64> {
            g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
            Some(self.value(x))
        }
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        for mode in [GradientMode::Analytic, GradientMode::FiniteDifference] {
            let s = Settings { gradient: mode, ..Settings::default() };
            let r = minimize(&Rosenbrock, &[-1.2, 1.0], &s);
            assert!((r.x[0] - 1.0).abs() < 1e-5, "{mode:?}: {:?}", r.x);
            assert!((r.x[1] - 1.0).abs() < 1e-5);
            assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn multistart_keeps_best() {
        // two wells, the deeper one at x = 2
        struct Wells;
        impl Objective for Wells {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                let t = x[0];
                (t + 1.0).powi(2) * (t - 2.0).powi(2) - 0.5 * t
            }
        }
        let r = multistart(&Wells, &[vec![-1.5], vec![2.5]], &Settings::default());
        assert!((r.best.x[0] - 2.0).abs() < 0.1);
        assert!(r.spread() > 0.5);
        assert_eq!(r.values.len(), 2);
    }

    #[test]
    fn matrix_param_round_trip_and_gradient() {
        let p = MatrixParam::new(2, 3);
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.3).collect();
        let m = p.unpack(&x);
        assert_eq!(p.pack(&m), x);

        // f(G) = Re Tr(M G) has df = Re Tr(M dG) = 2 Re Tr((M/2) dG)
        let mm = ComplexMatrix::from_fn(3, 2, |r, c| C64::new(r as f64 + 1.0, c as f64 - 0.5));
        struct Lin(ComplexMatrix, MatrixParam);
        impl Objective for Lin {
            fn dim(&self) -> usize {
                self.1.len()
            }
            fn value(&self, x: &[f64]) -> f64 {
                (&self.0 * self.1.unpack(x)).trace().re
            }
        }
        let obj = Lin(mm.clone(), p);
        let mut fd = vec![0.0; 12];
        finite_difference_gradient(&obj, &x, 1e-6, &mut fd);
        let mut an = vec![0.0; 12];
        p.gradient_from_differential(&mm, 0.5, &mut an);
        for (a, b) in fd.iter().zip(&an) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
