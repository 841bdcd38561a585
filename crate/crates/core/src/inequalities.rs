//! Randomized verification suites for entropy and trace inequalities.
//!
//! Every suite draws trial `i` from `rng_from_seed(cfg.seed + i)`, evaluates
//! both sides of an inequality `lhs ≤ rhs` and records `slack = rhs − lhs`.
//! A trial is a violation when `slack < −slack_tol · max(1, |lhs|, |rhs|)`.
//! Random PSD instances are Ginibre-induced `GG^dag / Tr GG^dag`; random
//! non-PSD inputs are complex Gaussian matrices.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channels::{Channel, EbtSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigenvalues, partial_trace, psd_power, schatten_norm, schatten_norm_hermitian, trace_power,
    von_neumann_entropy, ComplexMatrix, DimSplit,
};
use crate::optimize::{MatrixParam, Objective};
use crate::random::{ginibre, random_density, random_density_rank, random_povm, rng_from_seed, InstanceRng};
use crate::vnorms::{
    self, gram_power, maximize, norm_1p, norm_pq_inf, starts, v_objective, NormParams, OptReport,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialConfig {
    pub trials: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// The suite's exponent (`p` or `t`).
    pub exponent: f64,
    pub slack_tol: f64,
}

impl TrialConfig {
    pub fn new(trials: usize, seed: u64, dims: &[usize], exponent: f64) -> Self {
        Self { trials, seed, dims: dims.to_vec(), exponent, slack_tol: 1e-9 }
    }

    pub fn with_slack_tol(self, slack_tol: f64) -> Self {
        Self { slack_tol, ..self }
    }

    fn split(&self) -> Result<DimSplit> {
        DimSplit::new(&self.dims)
    }

    fn require_factors(&self, n: usize, what: &str) -> Result<()> {
        if self.dims.len() != n || self.dims.contains(&0) {
            return Err(Error::DimMismatch(format!("{what} needs {n} positive dimensions, got {:?}", self.dims)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub seed: u64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub passed: usize,
    /// Violating trials, sorted by instance seed.
    pub violations: Vec<Violation>,
    pub min_slack: f64,
    /// Seed of the trial with the smallest slack.
    pub min_slack_seed: u64,
    /// Set for searches of open conjectures, where a violation is a finding rather than a failure.
    pub exploratory: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SuiteReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Both sides of one inequality instance, `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    fn scale(&self) -> f64 {
        1f64.max(self.lhs.abs()).max(self.rhs.abs())
    }

    /// The component with the smallest scaled slack.
    fn tightest(items: &[Sides]) -> Sides {
        *items
            .iter()
            .min_by(|a, b| (a.slack() / a.scale()).total_cmp(&(b.slack() / b.scale())))
            .expect("at least one component")
    }
}

fn run_suite(
    name: &str,
    cfg: &TrialConfig,
    exploratory: bool,
    mut trial: impl FnMut(&mut InstanceRng, &mut BTreeMap<String, f64>) -> Result<Sides>,
) -> Result<SuiteReport> {
    let mut violations = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut min_slack_seed = cfg.seed;
    let mut diagnostics = BTreeMap::new();
    for i in 0..cfg.trials {
        let seed = cfg.seed.wrapping_add(i as u64);
        let sides = trial(&mut rng_from_seed(seed), &mut diagnostics)?;
        let slack = sides.slack();
        if slack < min_slack {
            min_slack = slack;
            min_slack_seed = seed;
        }
        if slack < -cfg.slack_tol * sides.scale() {
            violations.push(Violation { seed, slack });
        }
    }
    violations.sort_by_key(|v| v.seed);
    Ok(SuiteReport {
        suite: name.to_string(),
        trials: cfg.trials,
        passed: cfg.trials - violations.len(),
        violations,
        min_slack,
        min_slack_seed,
        exploratory,
        diagnostics,
    })
}

fn track_max(diag: &mut BTreeMap<String, f64>, key: &str, value: f64) {
    let e = diag.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
    *e = e.max(value);
}

fn track_min(diag: &mut BTreeMap<String, f64>, key: &str, value: f64) {
    let e = diag.entry(key.to_string()).or_insert(f64::INFINITY);
    *e = e.min(value);
}

/// Entropy in bits of the marginal of `q` on the factors in `keep`.
pub fn marginal_entropy(q: &ComplexMatrix, split: &DimSplit, keep: &[usize]) -> Result<f64> {
    if keep.is_empty() {
        return Ok(0.0);
    }
    von_neumann_entropy(&partial_trace(q, split, keep)?)
}

/// `S(Q₁₂₃) + S(Q₃) ≤ S(Q₂₃) + S(Q₁₃)`.
pub fn ssa_sides(q: &ComplexMatrix, split: &DimSplit) -> Result<Sides> {
    let s = |keep: &[usize]| marginal_entropy(q, split, keep);
    Ok(Sides { lhs: s(&[0, 1, 2])? + s(&[2])?, rhs: s(&[1, 2])? + s(&[0, 2])? })
}

pub fn ssa_check(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(3, "strong subadditivity")?;
    let split = cfg.split()?;
    run_suite("ssa", cfg, false, |rng, _| ssa_sides(&random_density(split.total(), rng), &split))
}

/// Conditional-entropy subadditivity on `E₁ E₂ A₁ A₂` and its two SSA summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondSubadd {
    pub sides: Sides,
    pub ssa_first: Sides,
    pub ssa_second: Sides,
}

pub fn cond_subadd_sides(q: &ComplexMatrix, split: &DimSplit) -> Result<CondSubadd> {
    let (e1, e2, a1, a2) = (0, 1, 2, 3);
    let s = |keep: &[usize]| marginal_entropy(q, split, keep);
    let s_all = s(&[e1, e2, a1, a2])?;
    let s_e1e2 = s(&[e1, e2])?;
    let s_e1a1 = s(&[e1, a1])?;
    let s_e1 = s(&[e1])?;
    let s_e2a2 = s(&[e2, a2])?;
    let s_e2 = s(&[e2])?;
    let s_e1e2a2 = s(&[e1, e2, a2])?;
    Ok(CondSubadd {
        sides: Sides { lhs: s_all - s_e1e2, rhs: s_e1a1 - s_e1 + s_e2a2 - s_e2 },
        ssa_first: Sides { lhs: s_all + s_e1, rhs: s_e1a1 + s_e1e2a2 },
        ssa_second: Sides { lhs: s_e1e2a2 + s_e2, rhs: s_e1e2 + s_e2a2 },
    })
}

/// Dimensions are `(e₁, e₂, a₁, a₂)`.
pub fn cond_subadd_check(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(4, "conditional subadditivity")?;
    let split = cfg.split()?;
    run_suite("cond_subadd", cfg, false, |rng, diag| {
        let c = cond_subadd_sides(&random_density(split.total(), rng), &split)?;
        let residual = (c.sides.slack() - c.ssa_first.slack() - c.ssa_second.slack()).abs();
        track_max(diag, "max_decomposition_residual", residual);
        Ok(c.sides)
    })
}

/// `[Tr₁(Tr₂ Q)^t]^{1/t}` and `Tr₂(Tr₁ Q^t)^{1/t}`; the first is the smaller for `t ≥ 1`.
pub fn mink_mat_sides(q: &ComplexMatrix, split: &DimSplit, t: f64) -> Result<Sides> {
    let left = trace_power(&partial_trace(q, split, &[0])?, t).powf(1.0 / t);
    let right = trace_power(&partial_trace(&psd_power(q, t), split, &[1])?, 1.0 / t);
    Ok(if t >= 1.0 { Sides { lhs: left, rhs: right } } else { Sides { lhs: right, rhs: left } })
}

/// `[Tr₁(Tr₂ R^q)^{p/q}]^{1/p} ≤ [Tr₂(Tr₁ R^p)^{q/p}]^{1/q}` for `q ≤ p`.
pub fn mink_qp_sides(r: &ComplexMatrix, split: &DimSplit, q: f64, p: f64) -> Result<Sides> {
    let lhs = trace_power(&partial_trace(&psd_power(r, q), split, &[0])?, p / q).powf(1.0 / p);
    let rhs = trace_power(&partial_trace(&psd_power(r, p), split, &[1])?, q / p).powf(1.0 / q);
    Ok(Sides { lhs, rhs })
}

/// `‖W₂‖_p ≤ ‖W₁₂‖_(1,p)`. The right side is the smaller of the objective at
/// `B = W₁ / Tr W₁` and at the optimizer's `B`, both feasible points.
#[derive(Debug, Clone)]
pub struct MinkQ1 {
    pub sides: Sides,
    pub at_marginal: f64,
    pub at_optimizer: f64,
    /// `"marginal"` or `"optimizer"`, whichever certified the right side.
    pub certificate: &'static str,
}

pub fn mink_q1_sides(w: &ComplexMatrix, split: &DimSplit, params: &NormParams) -> Result<MinkQ1> {
    let p = params.p;
    let lhs = schatten_norm_hermitian(&partial_trace(w, split, &[1])?, p)?;
    let w1 = partial_trace(w, split, &[0])?;
    let b1 = w1.unscale(linalg::trace(&w1).re);
    let at_marginal = v_objective(w, split, &b1, p)?;
    let opt = norm_1p(w, split, params)?;
    let at_optimizer = if p == 1.0 { opt.value } else { v_objective(w, split, &opt.argument, p)? };
    let (rhs, certificate) =
        if at_optimizer < at_marginal { (at_optimizer, "optimizer") } else { (at_marginal, "marginal") };
    Ok(MinkQ1 { sides: Sides { lhs, rhs }, at_marginal, at_optimizer, certificate })
}

/// Exponents used for the `(q, p)` instance at suite exponent `t`.
pub fn mink_qp_exponents(t: f64) -> (f64, f64) {
    let q = 1.25;
    (q, q * t.max(1.0 / t))
}

/// Per trial: the matrix Minkowski inequality at `t` (reversed for `t < 1`),
/// the `(q, p)` form at [`mink_qp_exponents`], and `‖W₂‖_p ≤ ‖W₁₂‖_(1,p)` at
/// `p = max(t, 1/t)`. The recorded slack is the tightest of the three.
pub fn minkowski_checks(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(2, "Minkowski checks")?;
    let t = cfg.exponent;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::BadExponent(t));
    }
    let split = cfg.split()?;
    let (q, p) = mink_qp_exponents(t);
    let norm_params = NormParams { p: t.max(1.0 / t), restarts: 1, max_iters: 300, ..NormParams::default() };
    let name = format!("minkowski(t={t})");
    run_suite(&name, cfg, false, |rng, diag| {
        let w = random_density(split.total(), rng);
        let mat = mink_mat_sides(&w, &split, t)?;
        let qp = mink_qp_sides(&w, &split, q, p)?;
        let q1 = mink_q1_sides(&w, &split, &norm_params)?;
        track_min(diag, "min_slack_mink_mat", mat.slack());
        track_min(diag, "min_slack_mink_qp", qp.slack());
        track_min(diag, "min_slack_mink_q1", q1.sides.slack());
        let from_opt = if q1.certificate == "optimizer" { 1.0 } else { 0.0 };
        *diag.entry("q1_certified_by_optimizer".into()).or_insert(0.0) += from_opt;
        Ok(Sides::tightest(&[mat, qp, q1.sides]))
    })
}

/// `Tr₃[Tr₂(Tr₁ Q)^t]^{1/t} ≤ Tr₁₃(Tr₂ Q^t)^{1/t}`.
pub fn mink3_sides(q: &ComplexMatrix, split: &DimSplit, t: f64) -> Result<Sides> {
    let dims = split.dims();
    let q23 = partial_trace(q, split, &[1, 2])?;
    let r3 = partial_trace(&psd_power(&q23, t), &DimSplit::pair(dims[1], dims[2]), &[1])?;
    let lhs = trace_power(&r3, 1.0 / t);
    let s13 = partial_trace(&psd_power(q, t), split, &[0, 2])?;
    let rhs = trace_power(&s13, 1.0 / t);
    Ok(Sides { lhs, rhs })
}

/// Randomized counterexample search for the three-factor Minkowski conjecture.
/// Violations are reported as findings (`exploratory = true`).
pub fn mink3_search(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(3, "three-factor Minkowski search")?;
    let t = cfg.exponent;
    if !(1.0..=2.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("search exponent t={t} outside [1, 2]")));
    }
    let split = cfg.split()?;
    run_suite(&format!("mink3(t={t})"), cfg, true, |rng, _| mink3_sides(&random_density(split.total(), rng), &split, t))
}

/// `Tr (C^dag D C)^p ≤ Tr (C C^dag)^p D^p` for `p ≥ 1`, `D ≥ 0`.
pub fn lieb_thirring_sides(c: &ComplexMatrix, d: &ComplexMatrix, p: f64) -> Result<Sides> {
    linalg::check_psd(d)?;
    let lhs = trace_power(&(c.adjoint() * d * c), p);
    let rhs = linalg::trace(&(psd_power(&(c * c.adjoint()), p) * psd_power(d, p))).re;
    Ok(Sides { lhs, rhs })
}

/// Dimensions `(n)`; exponent `p ≥ 1`.
pub fn lieb_thirring_check(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(1, "Lieb-Thirring")?;
    let p = cfg.exponent;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let n = cfg.dims[0];
    run_suite(&format!("lieb_thirring(p={p})"), cfg, false, |rng, _| {
        let c = ginibre(n, n, rng);
        let d = random_density(n, rng);
        lieb_thirring_sides(&c, &d, p)
    })
}

/// `Tr(A − B) ≤ Tr A log A − Tr A log B` (natural log) for full-rank PSD `A`, `B`.
pub fn klein_sides(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Sides> {
    let log = |m: &ComplexMatrix| linalg::matrix_fn_psd(m, |x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY });
    let (la, lb) = (log(a)?, log(b)?);
    let rhs = linalg::trace(&(a * (la - lb))).re;
    let lhs = linalg::trace(&(a - b)).re;
    Ok(Sides { lhs, rhs })
}

/// Dimensions `(n)`. `A` is a random density and `B` a random density scaled by a factor in `[0.5, 1.5)`.
pub fn klein_check(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(1, "Klein")?;
    let n = cfg.dims[0];
    run_suite("klein", cfg, false, |rng, _| {
        use rand::Rng;
        let a = random_density(n, rng);
        let b = random_density(n, rng).scale(rng.random_range(0.5..1.5));
        klein_sides(&a, &b)
    })
}

/// `‖(I_n ⊗ Φ)(Q)‖_p ≤ ‖Tr₂ Q‖_p` for an entanglement-breaking channel.
pub fn ebt_lemma_sides(channel: &Channel, q: &ComplexMatrix, n: usize, p: f64) -> Result<Sides> {
    let split = DimSplit::pair(n, channel.d_in());
    let lhs = schatten_norm_hermitian(&channel.apply_extended(q, &split)?, p)?;
    let rhs = schatten_norm_hermitian(&partial_trace(q, &split, &[0])?, p)?;
    Ok(Sides { lhs, rhs })
}

/// Dimensions `(n)`: the reference size for `Q` on `C^n ⊗ C^{d_in}`.
pub fn ebt_lemma_check(channel: &Channel, cfg: &TrialConfig) -> Result<SuiteReport> {
    if !channel.is_entanglement_breaking() {
        return Err(Error::NotEbt);
    }
    cfg.require_factors(1, "EBT lemma")?;
    let n = cfg.dims[0];
    let p = cfg.exponent;
    run_suite(&format!("ebt_lemma(p={p})"), cfg, false, |rng, _| {
        let q = random_density(n * channel.d_in(), rng);
        ebt_lemma_sides(channel, &q, n, p)
    })
}

/// Random measure-and-prepare channel with `outcomes` POVM elements.
pub fn random_ebt(d_in: usize, d_out: usize, outcomes: usize, rng: &mut InstanceRng) -> Result<Channel> {
    let povm = random_povm(d_in, outcomes, rng);
    let states = (0..outcomes).map(|_| random_density_rank(d_out, 1 + outcomes % d_out, rng)).collect();
    Channel::ebt(&EbtSpec { states, povm })
}

/// Dimensions `(n, d_in, d_out)`: a fresh random EBT channel (3 outcomes) and a random `Q` per trial.
pub fn ebt_random_check(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.require_factors(3, "random EBT battery")?;
    let (n, d_in, d_out) = (cfg.dims[0], cfg.dims[1], cfg.dims[2]);
    let p = cfg.exponent;
    run_suite(&format!("ebt_random(p={p})"), cfg, false, |rng, _| {
        let ch = random_ebt(d_in, d_out, 3, rng)?;
        let q = random_density(n * d_in, rng);
        ebt_lemma_sides(&ch, &q, n, p)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivCheck {
    /// `(δ, (‖X‖_(1,1+δ)^{1+δ} − Tr X)/δ)` in bits.
    pub slopes: Vec<(f64, f64)>,
    /// Linear extrapolation of the slopes to `δ = 0`, bits.
    pub fd_slope: f64,
    /// `S(X₁) − S(X₁₂)` in bits.
    pub target: f64,
    pub err: f64,
}

pub const DEFAULT_DELTA_GRID: [f64; 3] = [0.08, 0.04, 0.02];

fn sorted_deltas(delta_grid: &[f64]) -> Result<Vec<f64>> {
    if delta_grid.len() < 2 {
        return Err(Error::InvalidParameter("need at least two δ values".into()));
    }
    if let Some(&bad) = delta_grid.iter().find(|&&d| !(d > 0.0 && d <= 0.2)) {
        return Err(Error::InvalidParameter(format!("δ={bad} outside (0, 0.2]")));
    }
    let mut g = delta_grid.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    Ok(g)
}

/// Finite-difference derivative of `p ↦ ‖X‖_(1,p)^p` at `p = 1` against `S(X₁) − S(X₁₂)`.
pub fn deriv_1p_check(x: &ComplexMatrix, split: &DimSplit, delta_grid: &[f64], params: &NormParams) -> Result<DerivCheck> {
    let deltas = sorted_deltas(delta_grid)?;
    let tr = linalg::trace(x).re;
    let x = x.unscale(tr);
    let mut slopes = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let p = 1.0 + delta;
        let v = norm_1p(&x, split, &params.with_p(p))?.value;
        slopes.push((delta, (v.powf(p) - 1.0) / delta / LN_2));
    }
    let n = slopes.len();
    let ((d1, s1), (d2, s2)) = (slopes[n - 1], slopes[n - 2]);
    let fd_slope = s1 - d1 * (s2 - s1) / (d2 - d1);
    let target = von_neumann_entropy(&partial_trace(&x, split, &[0])?)? - von_neumann_entropy(&x)?;
    Ok(DerivCheck { slopes, fd_slope, target, err: (fd_slope - target).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpCheck {
    /// `(δ, ‖B(1+δ) − X₁‖₁)` with `δ` decreasing.
    pub distances: Vec<(f64, f64)>,
    pub final_distance: f64,
    /// No distance exceeds its predecessor by more than `0.02`.
    pub decreasing: bool,
}

/// Trace distance of the `(1,p)` minimizer `B(p)` to `X₁` as `p → 1+`.
pub fn bp_convergence_check(x: &ComplexMatrix, split: &DimSplit, delta_grid: &[f64], params: &NormParams) -> Result<BpCheck> {
    let deltas = sorted_deltas(delta_grid)?;
    let x1 = partial_trace(x, split, &[0])?;
    let x1 = x1.unscale(linalg::trace(&x1).re);
    let mut distances = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let b = vnorms::minimizer_b(x, split, &params.with_p(1.0 + delta))?;
        distances.push((delta, schatten_norm_hermitian(&(b - &x1), 1.0)?));
    }
    let decreasing = distances.windows(2).all(|w| w[1].1 <= w[0].1 + 0.02);
    let final_distance = distances.last().map(|d| d.1).unwrap_or(f64::NAN);
    Ok(BpCheck { distances, final_distance, decreasing })
}

/// `(1/p) log ‖Φ(GG^dag)‖_p − (1/q) log ‖GG^dag‖_q`.
struct QpObjective<'a> {
    channel: &'a Channel,
    q: f64,
    p: f64,
    param: MatrixParam,
}

impl QpObjective<'_> {
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let g = self.param.unpack(x);
        let (d_in, d_out) = (self.channel.d_in(), self.channel.d_out());
        let kraus = self.channel.kraus();
        let mut m = ComplexMatrix::zeros(d_out, kraus.len() * d_in);
        for (j, k) in kraus.iter().enumerate() {
            m.view_mut((0, j * d_in), (d_out, d_in)).copy_from(&(k * &g));
        }
        let (num, c_num) = gram_power(&m, self.p);
        let (den, c_den) = gram_power(&g, self.q);
        if num <= 0.0 || den <= 0.0 {
            if let Some(gr) = grad {
                gr.iter_mut().for_each(|v| *v = 0.0);
            }
            return f64::NEG_INFINITY;
        }
        if let Some(gr) = grad {
            let mut w_num = ComplexMatrix::zeros(d_in, d_in);
            for (j, k) in kraus.iter().enumerate() {
                w_num += c_num.view((0, j * d_in), (d_out, d_in)).adjoint() * k;
            }
            // ‖GG^dag‖_q^q = Tr (G^dag G)^q
            let w = w_num.unscale(num) - c_den.adjoint().unscale(den);
            self.param.gradient_from_differential(&w, 1.0, gr);
        }
        num.ln() / self.p - den.ln() / self.q
    }
}

impl Objective for QpObjective<'_> {
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

/// `‖Φ‖⁺_{q→p} = sup_{ρ ≥ 0} ‖Φ(ρ)‖_p / ‖ρ‖_q`. Restarts begin at the
/// computational basis projectors and `I`, then Ginibre draws.
pub fn psd_q_to_p_norm(channel: &Channel, q: f64, p: f64, params: &NormParams) -> Result<OptReport> {
    vnorms::check_variational_exponent(q)?;
    vnorms::check_variational_exponent(p)?;
    params.validate()?;
    let d = channel.d_in();
    let obj = QpObjective { channel, q, p, param: MatrixParam::new(d, d) };
    let mut first: Vec<ComplexMatrix> = (0..d)
        .map(|i| ComplexMatrix::from_fn(d, d, |r, c| if r == i && c == i { 1.0.into() } else { 0.0.into() }))
        .collect();
    first.push(linalg::identity(d));
    let st = starts(obj.param, &first, params.restarts.max(first.len()), params.seed);
    let r = maximize(&obj, &st, &params.settings());
    let g = obj.param.unpack(&r.best.x);
    let rho = &g * g.adjoint();
    let rho = rho.unscale(linalg::trace(&rho).re);
    let value = schatten_norm_hermitian(&channel.apply(&rho)?, p)? / schatten_norm_hermitian(&rho, q)?;
    let vals: Vec<f64> = r.values.iter().filter(|v| v.is_finite()).map(|v| v.exp()).collect();
    let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OptReport {
        value,
        argument: rho,
        iterations: r.iterations,
        restarts_used: st.len(),
        converged: r.all_converged,
        spread: spread.max(0.0),
    })
}

/// `‖Φ(A)‖_p / ‖A‖_q` for an arbitrary input.
pub fn q_to_p_ratio(channel: &Channel, a: &ComplexMatrix, q: f64, p: f64) -> Result<f64> {
    Ok(schatten_norm(&channel.apply(a)?, p)? / schatten_norm(a, q)?)
}

/// Random non-PSD inputs never beat the PSD optimum `‖Φ‖⁺_{q→p}`. The PSD
/// optimum is recorded in the diagnostics together with the largest ratio
/// reached by random PSD inputs.
pub fn positive_achiever_check(channel: &Channel, q: f64, p: f64, cfg: &TrialConfig, params: &NormParams) -> Result<SuiteReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let sup = psd_q_to_p_norm(channel, q, p, params)?;
    let d = channel.d_in();
    let mut report = run_suite(&format!("positive_achiever(q={q},p={p})"), cfg, false, |rng, diag| {
        let a = ginibre(d, d, rng);
        let ratio = q_to_p_ratio(channel, &a, q, p)?;
        let psd = random_density(d, rng);
        track_max(diag, "max_random_psd_ratio", q_to_p_ratio(channel, &psd, q, p)?);
        track_max(diag, "max_non_psd_ratio", ratio);
        Ok(Sides { lhs: ratio, rhs: sup.value })
    })?;
    report.diagnostics.insert("psd_optimum".into(), sup.value);
    report.diagnostics.insert("psd_optimum_spread".into(), sup.spread);
    Ok(report)
}

/// `‖(I ⊗ Φ)(Q)‖_p ≤ ‖Φ‖⁺_{q→p} ‖Q‖_(p,q)` for `q ≥ p` and random PSD `Q` on
/// `C^{d_ext} ⊗ C^{d_in}`. `‖Q‖_(p,q)` is an infimum; its optimizer value is an
/// upper bound, so this check cannot report false violations from optimizer
/// slack in the denominator.
pub fn q_geq_p_cb_check(
    channel: &Channel,
    q: f64,
    p: f64,
    d_ext: usize,
    cfg: &TrialConfig,
    params: &NormParams,
) -> Result<SuiteReport> {
    if q < p {
        return Err(Error::InvalidParameter(format!("need q >= p (got q={q}, p={p})")));
    }
    if cfg.trials == 0 || d_ext == 0 {
        return Err(Error::InvalidParameter("trials and d_ext must be positive".into()));
    }
    let sup = psd_q_to_p_norm(channel, q, p, params)?;
    let split = DimSplit::pair(d_ext, channel.d_in());
    let inner = NormParams { restarts: params.restarts.min(3), ..*params };
    let mut report = run_suite(&format!("q_geq_p_cb(q={q},p={p})"), cfg, false, |rng, _| {
        let x = random_density(split.total(), rng);
        let lhs = schatten_norm_hermitian(&channel.apply_extended(&x, &split)?, p)?;
        let denom = norm_pq_inf(&x, &split, p, q, &inner)?.value;
        Ok(Sides { lhs, rhs: sup.value * denom })
    })?;
    report.diagnostics.insert("psd_q_to_p_norm".into(), sup.value);
    Ok(report)
}

/// Smallest eigenvalue helper for diagnostics.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).last().copied().unwrap_or(0.0)
}
