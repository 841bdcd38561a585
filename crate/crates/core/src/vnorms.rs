//! Vector-valued Schatten norms on `C^d ⊗ C^n`.
//!
//! For PSD `X` with first marginal `X₁ = Tr₂ X`:
//!
//! * `‖X‖_(p,1) = ‖X₁‖_p`,
//! * `‖X‖_(1,p) = inf_B ‖X^{1/2}(B^{1/p−1} ⊗ I)X^{1/2}‖_p` over densities `B`,
//! * `‖X‖_(∞,p) = sup_{A>0} ‖(A ⊗ I)X(A ⊗ I)‖_p / ‖A²‖_p`.
//!
//! The last two are nonconvex optimizations solved by multi-start BFGS.
//! Matrices `A` and `B` are parametrized by an unconstrained complex `G`
//! (`A = |G|`, `B = GG^dag / Tr GG^dag + ε_B I`).


use crate::error::{Error, Result};
use crate::linalg::{
    self, check_psd, clip_spectrum, hermitian_spectrum, identity, kron, partial_trace, psd_power, ComplexMatrix,
    DimSplit,
};
use crate::optimize::{multistart, GradientMode, MatrixParam, MultiResult, Negated, Objective, Settings};
use crate::random::{ginibre, rng_from_seed};

/// Identity regularization added to every parametrized density `B`.
pub const EPS_B: f64 = 1e-12;
/// Largest exponent accepted by the variational norms.
pub const P_MAX: f64 = 64.0;
/// Agreement expected between [`maxmin_p`] and the Schatten norm.
pub const MAXMIN_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub p: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub gradient: GradientMode,
}

impl Default for NormParams {
    fn default() -> Self {
        Self { p: 2.0, restarts: 20, max_iters: 2000, grad_tol: 1e-9, seed: 0, gradient: GradientMode::Analytic }
    }
}

impl NormParams {
    pub fn with_p(self, p: f64) -> Self {
        Self { p, ..self }
    }

    pub fn settings(&self) -> Settings {
        Settings { max_iters: self.max_iters, grad_tol: self.grad_tol, gradient: self.gradient, ..Settings::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_variational_exponent(self.p)?;
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_variational_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    if p > P_MAX {
        return Err(Error::InvalidParameter(format!("exponent {p} exceeds the supported maximum {P_MAX}")));
    }
    Ok(())
}

/// Outcome of a variational norm computation.
#[derive(Debug, Clone)]
pub struct OptReport {
    pub value: f64,
    /// Optimal `A` (sup forms, normalized to `Tr A² = 1`) or `B` (inf forms, a density).
    pub argument: ComplexMatrix,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// Largest minus smallest value across restarts.
    pub spread: f64,
}

/// `Tr F(M^dag M)` and `C = M F'(M^dag M)`, computed on the smaller Gram matrix.
/// `F'` must be finite at zero; eigenvalues below the clip threshold are zeroed.
pub(crate) fn gram_trace(
    m: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
    fprime: impl Fn(f64) -> f64,
) -> (f64, ComplexMatrix) {
    let right = m.ncols() <= m.nrows();
    let gram = if right { m.adjoint() * m } else { m * m.adjoint() };
    let spec = hermitian_spectrum(&gram);
    let ev = clip_spectrum(&spec.eigenvalues);
    let value = ev.iter().map(|&t| if t > 0.0 { f(t) } else { 0.0 }).sum();
    let v = &spec.eigenvectors;
    let mut scaled = v.clone();
    for (c, &t) in ev.iter().enumerate() {
        let w = fprime(t);
        scaled.column_mut(c).scale_mut(w);
    }
    let deriv = scaled * v.adjoint();
    let c = if right { m * deriv } else { deriv * m };
    (value, c)
}

/// `Tr (M^dag M)^p` and `C = M (M^dag M)^{p−1}`.
pub(crate) fn gram_power(m: &ComplexMatrix, p: f64) -> (f64, ComplexMatrix) {
    gram_trace(m, |t| t.powf(p), |t| if t > 0.0 { t.powf(p - 1.0) } else if p == 1.0 { 1.0 } else { 0.0 })
}

/// Factor `L` with `X = L L^dag`, keeping only the positive part of the spectrum.
pub(crate) fn psd_factor(x: &ComplexMatrix) -> ComplexMatrix {
    let spec = hermitian_spectrum(x);
    let ev = clip_spectrum(&spec.eigenvalues);
    let rank = ev.iter().filter(|&&t| t > 0.0).count().max(1);
    ComplexMatrix::from_fn(x.nrows(), rank, |r, c| spec.eigenvectors[(r, c)] * ev[c].max(0.0).sqrt())
}

fn check_bipartite_psd(x: &ComplexMatrix, split: &DimSplit) -> Result<(usize, usize)> {
    let dims = split.dims();
    if dims.len() != 2 {
        return Err(Error::DimMismatch("vector-valued norms need a bipartite split".into()));
    }
    split.check(x)?;
    check_psd(x)?;
    Ok((dims[0], dims[1]))
}

/// `‖X‖_(p,1) = ‖Tr₂ X‖_p`.
pub fn norm_p1(x: &ComplexMatrix, split: &DimSplit, p: f64) -> Result<f64> {
    check_bipartite_psd(x, split)?;
    linalg::schatten_norm_hermitian(&partial_trace(x, split, &[0])?, p)
}

/// `log ‖(G ⊗ I)X(G ⊗ I)^dag‖_p − log ‖G G^dag‖_p` with `X = L L^dag`.
pub(crate) struct InfpObjective {
    l: ComplexMatrix,
    d: usize,
    n: usize,
    p: f64,
    param: MatrixParam,
}

impl InfpObjective {
    pub(crate) fn new(x: &ComplexMatrix, d: usize, n: usize, p: f64) -> Self {
        Self { l: psd_factor(x), d, n, p, param: MatrixParam::new(d, d) }
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let g = self.param.unpack(x);
        let m = kron(&g, &identity(self.n)) * &self.l;
        let (num, c_num) = gram_power(&m, self.p);
        let (den, c_den) = gram_power(&g, self.p);
        if num <= 0.0 || den <= 0.0 {
            if let Some(grad) = grad {
                grad.iter_mut().for_each(|v| *v = 0.0);
            }
            return f64::NEG_INFINITY;
        }
        if let Some(grad) = grad {
            let split = DimSplit::pair(self.d, self.n);
            let w_num = partial_trace(&(&self.l * c_num.adjoint()), &split, &[0]).expect("consistent split");
            let w = w_num.unscale(num) - c_den.adjoint().unscale(den);
            self.param.gradient_from_differential(&w, 1.0, grad);
        }
        (num.ln() - den.ln()) / self.p
    }
}

impl Objective for InfpObjective {
    fn dim(&self) -> usize {
        self.param.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        Some(self.eval(x, Some(grad)))
    }
}

/// Starting points: `first` (if any), then Ginibre matrices from `seed`.
pub(crate) fn starts(
    param: MatrixParam,
    first: &[ComplexMatrix],
    restarts: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let mut out: Vec<Vec<f64>> = first.iter().take(restarts).map(|m| param.pack(m)).collect();
    while out.len() < restarts.max(1) {
        out.push(param.pack(&ginibre(param.rows, param.cols, &mut rng)));
    }
    out
}

pub(crate) fn maximize<O: Objective>(obj: &O, starts: &[Vec<f64>], settings: &Settings) -> MultiResult {
    let mut r = multistart(&Negated(obj), starts, settings);
    r.best.value = -r.best.value;
    r.values.iter_mut().for_each(|v| *v = -*v);
    r.best.history.iter_mut().for_each(|v| *v = -*v);
    r
}

/// `|G| / ‖G‖_F`.
pub(crate) fn positive_part_normalized(g: &ComplexMatrix) -> ComplexMatrix {
    let a = psd_power(&(g.adjoint() * g), 0.5);
    let n = a.norm();
    a.unscale(n)
}

fn exp_spread(r: &MultiResult) -> f64 {
    let vals: Vec<f64> = r.values.iter().filter(|v| v.is_finite()).map(|v| v.exp()).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if max >= min {
        max - min
    } else {
        0.0
    }
}

/// `‖X‖_(∞,p)` for PSD `X`, maximizing over `A > 0`; restart 0 starts at `A = I`.
pub fn norm_infp(x: &ComplexMatrix, split: &DimSplit, params: &NormParams) -> Result<OptReport> {
    params.validate()?;
    let (d, n) = check_bipartite_psd(x, split)?;
    let obj = InfpObjective::new(x, d, n, params.p);
    let st = starts(obj.param, &[identity(d)], params.restarts, params.seed);
    let r = maximize(&obj, &st, &params.settings());
    Ok(OptReport {
        value: r.best.value.exp(),
        argument: positive_part_normalized(&obj.param.unpack(&r.best.x)),
        iterations: r.iterations,
        restarts_used: st.len(),
        converged: r.all_converged,
        spread: exp_spread(&r),
    })
}

/// `‖L^dag (B^s ⊗ I) L‖_q` with `B = GG^dag / Tr GG^dag + ε_B I`, `s ≤ 0`.
struct InfFormObjective {
    l: ComplexMatrix,
    n: usize,
    s: f64,
    q: f64,
    param: MatrixParam,
}

impl InfFormObjective {
    fn density(&self, x: &[f64]) -> ComplexMatrix {
        density_from(&self.param.unpack(x))
    }

    fn at(&self, b: &ComplexMatrix) -> f64 {
        let bs = psd_power(b, self.s);
        let v = self.l.adjoint() * kron(&bs, &identity(self.n)) * &self.l;
        linalg::lp_norm(&clip_spectrum(&linalg::hermitian_eigenvalues(&v)), self.q)
    }
}

impl Objective for InfFormObjective {
    fn dim(&self) -> usize {
        self.param.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let g = self.param.unpack(x);
        if g.norm() == 0.0 {
            return f64::INFINITY;
        }
        self.at(&self.density(x))
    }
}

/// `GG^dag / Tr GG^dag + ε_B I`.
pub(crate) fn density_from(g: &ComplexMatrix) -> ComplexMatrix {
    let b = g * g.adjoint();
    let t = linalg::trace(&b).re;
    b.unscale(t) + identity(g.nrows()).scale(EPS_B)
}

fn g_from_density(b: &ComplexMatrix) -> ComplexMatrix {
    psd_power(b, 0.5)
}

/// `‖Q‖_(p,q)` for PSD `Q` and `1 ≤ p ≤ q`, as the infimum over densities `B` of
/// `‖(B^{−1/2r} ⊗ I) Q (B^{−1/2r} ⊗ I)‖_q` with `1/p = 1/q + 1/r`.
///
/// The optimizer returns a feasible `B`, so the value is an upper bound on the
/// true infimum. Restarts start at `B = Q₁/Tr Q₁` and `B = I/d`.
pub fn norm_pq_inf(x: &ComplexMatrix, split: &DimSplit, p: f64, q: f64, params: &NormParams) -> Result<OptReport> {
    params.validate()?;
    check_variational_exponent(p)?;
    check_variational_exponent(q)?;
    if p > q {
        return Err(Error::InvalidParameter(format!("infimum form needs p <= q (got p={p}, q={q})")));
    }
    let (d, n) = check_bipartite_psd(x, split)?;
    let x1 = partial_trace(x, split, &[0])?;
    let t1 = linalg::trace(&x1).re;
    if t1 <= 0.0 {
        return Ok(OptReport {
            value: 0.0,
            argument: identity(d).unscale(d as f64),
            iterations: 0,
            restarts_used: 0,
            converged: true,
            spread: 0.0,
        });
    }
    let x1_density = x1.unscale(t1);
    if p == q {
        return Ok(OptReport {
            value: linalg::schatten_norm_hermitian(x, q)?,
            argument: x1_density,
            iterations: 0,
            restarts_used: 0,
            converged: true,
            spread: 0.0,
        });
    }
    let obj = InfFormObjective {
        l: psd_factor(x),
        n,
        s: 1.0 / q - 1.0 / p,
        q,
        param: MatrixParam::new(d, d),
    };
    let seeds = [g_from_density(&x1_density), identity(d)];
    let st = starts(obj.param, &seeds, params.restarts, params.seed);
    let settings = Settings { gradient: GradientMode::FiniteDifference, ..params.settings() };
    let r = multistart(&obj, &st, &settings);
    Ok(OptReport {
        value: r.best.value,
        argument: obj.density(&r.best.x),
        iterations: r.iterations,
        restarts_used: st.len(),
        converged: r.all_converged,
        spread: r.spread(),
    })
}

/// `‖X‖_(1,p) = inf_B ‖X^{1/2}(B^{1/p−1} ⊗ I)X^{1/2}‖_p`. At `p = 1` the value
/// is `Tr X` and the argument is `X₁ / Tr X₁`.
pub fn norm_1p(x: &ComplexMatrix, split: &DimSplit, params: &NormParams) -> Result<OptReport> {
    if params.p == 1.0 {
        params.validate()?;
        let (d, _) = check_bipartite_psd(x, split)?;
        let x1 = partial_trace(x, split, &[0])?;
        let t = linalg::trace(&x1).re;
        return Ok(OptReport {
            value: t,
            argument: if t > 0.0 { x1.unscale(t) } else { identity(d).unscale(d as f64) },
            iterations: 0,
            restarts_used: 0,
            converged: true,
            spread: 0.0,
        });
    }
    norm_pq_inf(x, split, 1.0, params.p, params)
}

/// Value of the `(1,p)` objective `‖X^{1/2}(B^{1/p−1} ⊗ I)X^{1/2}‖_p` at a given density `B`.
pub fn v_objective(x: &ComplexMatrix, split: &DimSplit, b: &ComplexMatrix, p: f64) -> Result<f64> {
    let (d, n) = check_bipartite_psd(x, split)?;
    if b.shape() != (d, d) {
        return Err(Error::DimMismatch("B must act on the first factor".into()));
    }
    let obj = InfFormObjective { l: psd_factor(x), n, s: 1.0 / p - 1.0, q: p, param: MatrixParam::new(d, d) };
    Ok(obj.at(b))
}

/// The minimizing density `B(p)` of `‖X‖_(1,p)`.
pub fn minimizer_b(x: &ComplexMatrix, split: &DimSplit, params: &NormParams) -> Result<ComplexMatrix> {
    Ok(norm_1p(x, split, params)?.argument)
}

/// `sup_A ‖(A^{1/2p} ⊗ I) Z (A^{1/2p} ⊗ I)‖_p` over densities `A`, which is `‖Z‖_(∞,p)`.
struct MaxMinObjective {
    y: ComplexMatrix,
    d: usize,
    n: usize,
    p: f64,
    inner_restarts: usize,
    inner_settings: Settings,
    param: MatrixParam,
}

impl MaxMinObjective {
    fn inner(&self, b: &ComplexMatrix) -> f64 {
        let w = kron(&psd_power(b, -0.5 / self.p), &identity(self.n));
        let z = &w * &self.y * &w;
        let obj = InfpObjective::new(&z, self.d, self.n, self.p);
        let st = starts(obj.param, &[identity(self.d)], self.inner_restarts, 0);
        maximize(&obj, &st, &self.inner_settings).best.value.exp()
    }
}

impl Objective for MaxMinObjective {
    fn dim(&self) -> usize {
        self.param.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let g = self.param.unpack(x);
        if g.norm() == 0.0 {
            return f64::INFINITY;
        }
        self.inner(&density_from(&g))
    }
}

/// The max-min expression for `‖Y‖_p`: infimum over densities `B` of the
/// supremum over densities `A`. The outer problem uses finite differences over
/// the inner optimum; agreement with `‖Y‖_p` is expected to [`MAXMIN_TOL`].
pub fn maxmin_p(y: &ComplexMatrix, split: &DimSplit, params: &NormParams) -> Result<OptReport> {
    params.validate()?;
    let (d, n) = check_bipartite_psd(y, split)?;
    let obj = MaxMinObjective {
        y: y.clone(),
        d,
        n,
        p: params.p,
        inner_restarts: 3,
        inner_settings: Settings { max_iters: 500, grad_tol: 1e-10, ..Settings::default() },
        param: MatrixParam::new(d, d),
    };
    let y1 = partial_trace(y, split, &[0])?;
    let t = linalg::trace(&y1).re;
    let mut seeds = vec![identity(d)];
    if t > 0.0 {
        seeds.insert(0, g_from_density(&y1.unscale(t)));
    }
    let st = starts(obj.param, &seeds, params.restarts, params.seed);
    let settings = Settings {
        gradient: GradientMode::FiniteDifference,
        fd_step: 1e-5,
        grad_tol: params.grad_tol.max(1e-7),
        max_iters: params.max_iters.min(200),
    };
    let r = multistart(&obj, &st, &settings);
    Ok(OptReport {
        value: r.best.value,
        argument: density_from(&obj.param.unpack(&r.best.x)),
        iterations: r.iterations,
        restarts_used: st.len(),
        converged: r.all_converged,
        spread: r.spread(),
    })
}
