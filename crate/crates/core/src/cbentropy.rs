//! CB norms `ω_p`, output norms `ν_p` and the CB minimal conditional entropy.
//!
//! A pure input `ψ = Σ A_{jk} e_j ⊗ e_k` on reference ⊗ input produces
//! `γ₁₂ = (I ⊗ Φ)(ψψ^dag)` with reference marginal `γ₁ = A A^dag`. Then
//!
//! * `ω_p(Φ) = sup_ψ ‖γ₁₂‖_p / ‖γ₁‖_p`,
//! * `ν_p(Φ) = sup_ρ ‖Φ(ρ)‖_p` (reference dimension 1),
//! * `S_CB,min(Φ) = inf_ψ S(γ₁₂) − S(γ₁)`, in bits.
//!
//! The optimizations run over `A` with analytic gradients. Writing the columns
//! of `M` as `vec(A K_j^T)` gives `γ₁₂ = M M^dag`, so every trace function of
//! `γ₁₂` is a trace function of the small Gram matrix `M^dag M`.

use std::f64::consts::LN_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::linalg::{
    self, conditional_entropy, identity, partial_trace, schatten_norm_hermitian, BipartiteState, ComplexMatrix,
    DimSplit,
};
use crate::optimize::{multistart, MatrixParam, MultiResult, Objective};
use crate::vnorms::{self, gram_power, gram_trace, maximize, starts, NormParams, OptReport};

/// Threshold printed for the sign change of `S_CB,min` of the qubit depolarizing channel.
pub const PUBLISHED_MU_STAR: f64 = 0.74592;

/// Default `p` grid for [`cb_limit_estimate`], decreasing toward 1.
pub const DEFAULT_P_GRID: [f64; 5] = [1.2, 1.1, 1.05, 1.02, 1.01];

#[derive(Debug, Clone)]
pub struct CbResult {
    pub value: f64,
    pub state: BipartiteState,
    pub report: OptReport,
}

/// `u(p, γ₁₂) = (1 − Tr γ₁₂^p / Tr γ₁^p) / (p − 1)`, converted from nats to bits.
pub fn u_fn(p: f64, g12: &ComplexMatrix, split: &DimSplit) -> Result<f64> {
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::BadExponent(p));
    }
    linalg::check_psd(g12)?;
    let g1 = partial_trace(g12, split, &[0])?;
    let ratio = linalg::trace_power(g12, p) / linalg::trace_power(&g1, p);
    Ok((1.0 - ratio) / (p - 1.0) / LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// `log ‖γ₁₂‖_p − log ‖γ₁‖_p`.
    LogRatio(f64),
    /// `S(γ₁₂) − S(γ₁)` in nats.
    ConditionalEntropy,
}

/// Objective over the coefficient matrix `A` (`d_ref × d_in`).
struct ChannelObjective<'a> {
    channel: &'a Channel,
    kraus_t: Vec<ComplexMatrix>,
    d_ref: usize,
    kind: Kind,
    param: MatrixParam,
}

fn entropy_f(t: f64) -> f64 {
    t * t.ln()
}

fn entropy_fprime(t: f64) -> f64 {
    if t > 0.0 {
        t.ln() + 1.0
    } else {
        0.0
    }
}

impl<'a> ChannelObjective<'a> {
    fn new(channel: &'a Channel, d_ref: usize, kind: Kind) -> Self {
        Self {
            channel,
            kraus_t: channel.kraus().iter().map(|k| k.transpose()).collect(),
            d_ref,
            kind,
            param: MatrixParam::new(d_ref, channel.d_in()),
        }
    }

    /// Columns `vec(A K_j^T)` (row-major vectorization).
    fn output_factor(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let d_out = self.channel.d_out();
        let mut m = ComplexMatrix::zeros(self.d_ref * d_out, self.kraus_t.len());
        for (j, kt) in self.kraus_t.iter().enumerate() {
            let ak = a * kt;
            for r in 0..self.d_ref {
                for c in 0..d_out {
                    m[(r * d_out + c, j)] = ak[(r, c)];
                }
            }
        }
        m
    }

    /// `Σ_j K_j^T C_j^dag` where `C_j` is column `j` of `c` reshaped to `d_ref × d_out`.
    fn pull_back(&self, c: &ComplexMatrix) -> ComplexMatrix {
        let d_out = self.channel.d_out();
        let mut w = ComplexMatrix::zeros(self.channel.d_in(), self.d_ref);
        for (j, kt) in self.kraus_t.iter().enumerate() {
            let cj = ComplexMatrix::from_fn(self.d_ref, d_out, |r, col| c[(r * d_out + col, j)]);
            w += kt * cj.adjoint();
        }
        w
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let a = self.param.unpack(x);
        let m = self.output_factor(&a);
        match self.kind {
            Kind::LogRatio(p) => {
                let (num, c_num) = gram_power(&m, p);
                let (den, c_den) = gram_power(&a, p);
                if num <= 0.0 || den <= 0.0 {
                    if let Some(g) = grad {
                        g.iter_mut().for_each(|v| *v = 0.0);
                    }
                    return f64::NEG_INFINITY;
                }
                if let Some(g) = grad {
                    let w = self.pull_back(&c_num).unscale(num) - c_den.adjoint().unscale(den);
                    self.param.gradient_from_differential(&w, 1.0, g);
                }
                (num.ln() - den.ln()) / p
            }
            Kind::ConditionalEntropy => {
                let n = a.norm_squared();
                if n <= 0.0 {
                    if let Some(g) = grad {
                        g.iter_mut().for_each(|v| *v = 0.0);
                    }
                    return f64::INFINITY;
                }
                let (f12, c12) = gram_trace(&m, entropy_f, entropy_fprime);
                let (f1, c1) = gram_trace(&a, entropy_f, entropy_fprime);
                let h = f1 - f12;
                if let Some(g) = grad {
                    let w_h = c1.adjoint() - self.pull_back(&c12);
                    let w = w_h.unscale(n) - a.adjoint().scale(h / (n * n));
                    self.param.gradient_from_differential(&w, 1.0, g);
                }
                h / n
            }
        }
    }
}

impl Objective for ChannelObjective<'_> {
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

fn check_p(p: f64) -> Result<()> {
    vnorms::check_variational_exponent(p)
}

/// `‖(I ⊗ Φ)(ψψ^dag)‖_p / ‖γ₁‖_p` for a given input state.
pub fn omega_ratio(channel: &Channel, state: &BipartiteState, p: f64) -> Result<f64> {
    let (d_ref, d_in) = state.dims();
    if d_in != channel.d_in() {
        return Err(Error::DimMismatch(format!("state input dimension {d_in} != channel d_in {}", channel.d_in())));
    }
    let g12 = channel.apply_extended(&state.density(), &DimSplit::pair(d_ref, d_in))?;
    Ok(schatten_norm_hermitian(&g12, p)? / schatten_norm_hermitian(&state.marginal_first(), p)?)
}

/// `S(γ₁₂) − S(γ₁)` in bits for a given input state.
pub fn conditional_output_entropy(channel: &Channel, state: &BipartiteState) -> Result<f64> {
    let (d_ref, d_in) = state.dims();
    let g12 = channel.apply_extended(&state.density(), &DimSplit::pair(d_ref, d_in))?;
    conditional_entropy(&g12, &DimSplit::pair(d_ref, channel.d_out()))
}

fn spread_of(r: &MultiResult, transform: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = r.values.iter().filter(|v| v.is_finite()).map(|&v| transform(v)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if max >= min {
        max - min
    } else {
        0.0
    }
}

fn single_point_report(a: &ComplexMatrix, value: f64) -> OptReport {
    OptReport { value, argument: a.clone(), iterations: 0, restarts_used: 1, converged: true, spread: 0.0 }
}

fn state_from(a: &ComplexMatrix) -> Result<BipartiteState> {
    BipartiteState::new(a.clone())
}

/// `ω_p(Φ)`, optimizing over inputs unless `use_max_entangled` restricts to
/// `A = I/√d`. Restart 0 is the maximally entangled state.
pub fn omega_p(channel: &Channel, p: f64, params: &NormParams, use_max_entangled: bool) -> Result<CbResult> {
    omega_p_seeded(channel, p, params, use_max_entangled, &[])
}

/// [`omega_p`] with extra starting coefficient matrices tried first.
pub fn omega_p_seeded(
    channel: &Channel,
    p: f64,
    params: &NormParams,
    use_max_entangled: bool,
    seeds: &[ComplexMatrix],
) -> Result<CbResult> {
    check_p(p)?;
    params.validate()?;
    let d = channel.d_in();
    let mes = BipartiteState::maximally_entangled(d);
    if use_max_entangled {
        let value = omega_ratio(channel, &mes, p)?;
        return Ok(CbResult { value, report: single_point_report(mes.coeffs(), value), state: mes });
    }
    let obj = ChannelObjective::new(channel, d, Kind::LogRatio(p));
    let mut first: Vec<ComplexMatrix> = seeds.to_vec();
    first.push(identity(d));
    let st = starts(obj.param, &first, params.restarts.max(first.len()), params.seed);
    let r = maximize(&obj, &st, &params.settings());
    let state = state_from(&obj.param.unpack(&r.best.x))?;
    let value = omega_ratio(channel, &state, p)?;
    Ok(CbResult {
        value,
        report: OptReport {
            value,
            argument: state.coeffs().clone(),
            iterations: r.iterations,
            restarts_used: st.len(),
            converged: r.all_converged,
            spread: spread_of(&r, f64::exp),
        },
        state,
    })
}

/// `ν_p(Φ) = sup_ρ ‖Φ(ρ)‖_p`, optimized over pure inputs. The returned state
/// has a one-dimensional reference, so its coefficient row is the input vector.
pub fn nu_p(channel: &Channel, p: f64, params: &NormParams) -> Result<CbResult> {
    check_p(p)?;
    params.validate()?;
    let obj = ChannelObjective::new(channel, 1, Kind::LogRatio(p));
    let d = channel.d_in();
    let basis: Vec<ComplexMatrix> = (0..d)
        .map(|i| ComplexMatrix::from_fn(1, d, |_, c| if c == i { 1.0.into() } else { 0.0.into() }))
        .collect();
    let st = starts(obj.param, &basis, params.restarts.max(1), params.seed);
    let r = maximize(&obj, &st, &params.settings());
    let state = state_from(&obj.param.unpack(&r.best.x))?;
    let value = omega_ratio(channel, &state, p)?;
    Ok(CbResult {
        value,
        report: OptReport {
            value,
            argument: state.coeffs().clone(),
            iterations: r.iterations,
            restarts_used: st.len(),
            converged: r.all_converged,
            spread: spread_of(&r, f64::exp),
        },
        state,
    })
}

/// `S_CB,min(Φ)` in bits; requires a trace-preserving channel.
pub fn s_cb_min(channel: &Channel, params: &NormParams, use_max_entangled: bool) -> Result<CbResult> {
    s_cb_min_seeded(channel, params, use_max_entangled, &[])
}

/// [`s_cb_min`] with extra starting coefficient matrices tried first.
pub fn s_cb_min_seeded(
    channel: &Channel,
    params: &NormParams,
    use_max_entangled: bool,
    seeds: &[ComplexMatrix],
) -> Result<CbResult> {
    channel.require_tp()?;
    if params.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let d = channel.d_in();
    let mes = BipartiteState::maximally_entangled(d);
    if use_max_entangled {
        let value = conditional_output_entropy(channel, &mes)?;
        return Ok(CbResult { value, report: single_point_report(mes.coeffs(), value), state: mes });
    }
    let obj = ChannelObjective::new(channel, d, Kind::ConditionalEntropy);
    let mut first: Vec<ComplexMatrix> = seeds.to_vec();
    first.push(identity(d));
    let st = starts(obj.param, &first, params.restarts.max(first.len()), params.seed);
    let r = multistart(&obj, &st, &params.settings());
    let state = state_from(&obj.param.unpack(&r.best.x))?;
    let value = conditional_output_entropy(channel, &state)?;
    Ok(CbResult {
        value,
        report: OptReport {
            value,
            argument: state.coeffs().clone(),
            iterations: r.iterations,
            restarts_used: st.len(),
            converged: r.all_converged,
            spread: spread_of(&r, |v| v / LN_2),
        },
        state,
    })
}

/// One grid point of the limit formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitPoint {
    pub p: f64,
    pub omega: f64,
    /// `(1 − ω_p^p)/(p − 1)` in bits.
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    /// Linear extrapolation to `p = 1` from the two grid points closest to 1, in bits.
    pub estimate: f64,
    pub points: Vec<LimitPoint>,
}

/// `lim_{p→1+} (1 − ω_p^p)/(p − 1)` estimated on `p_grid`. Each grid point is
/// warm-started from the previous optimal input.
pub fn cb_limit_estimate(channel: &Channel, p_grid: &[f64], params: &NormParams) -> Result<LimitEstimate> {
    channel.require_tp()?;
    if p_grid.len() < 2 {
        return Err(Error::InvalidParameter("limit estimate needs at least two grid points".into()));
    }
    if let Some(&bad) = p_grid.iter().find(|&&p| !(p > 1.0 && p <= 2.0)) {
        return Err(Error::InvalidParameter(format!("grid point {bad} outside (1, 2]")));
    }
    let mut grid = p_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::with_capacity(grid.len());
    let mut warm: Vec<ComplexMatrix> = Vec::new();
    for &p in &grid {
        let r = omega_p_seeded(channel, p, params, false, &warm)?;
        warm = vec![r.state.coeffs().clone()];
        let quotient = (1.0 - r.value.powf(p)) / (p - 1.0) / LN_2;
        points.push(LimitPoint { p, omega: r.value, quotient });
    }
    let n = points.len();
    let (lo, hi) = (points[n - 1], points[n - 2]);
    let slope = (hi.quotient - lo.quotient) / (hi.p - lo.p);
    let estimate = lo.quotient - slope * (lo.p - 1.0);
    Ok(LimitEstimate { estimate, points })
}

/// Closed-form values for the depolarizing and Werner–Holevo families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    OmegaDep,
    ScbDep,
    OmegaWh,
    NuWh,
    ScbWh,
    NuDepQubit,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 6] = [
        ClosedForm::OmegaDep,
        ClosedForm::ScbDep,
        ClosedForm::OmegaWh,
        ClosedForm::NuWh,
        ClosedForm::ScbWh,
        ClosedForm::NuDepQubit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClosedForm::OmegaDep => "omega_dep",
            ClosedForm::ScbDep => "scb_dep",
            ClosedForm::OmegaWh => "omega_wh",
            ClosedForm::NuWh => "nu_wh",
            ClosedForm::ScbWh => "scb_wh",
            ClosedForm::NuDepQubit => "nu_dep_qubit",
        }
    }
}

impl FromStr for ClosedForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClosedForm::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::BadName(s.to_string()))
    }
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Evaluate a closed form. Arguments a form does not use are ignored.
pub fn closed_form(form: ClosedForm, d: usize, mu: f64, p: f64) -> Result<f64> {
    let df = d as f64;
    let needs_p = matches!(form, ClosedForm::OmegaDep | ClosedForm::OmegaWh | ClosedForm::NuWh | ClosedForm::NuDepQubit);
    if needs_p && (!p.is_finite() || p < 1.0) {
        return Err(Error::BadExponent(p));
    }
    let dep_range = |mu: f64| {
        let lo = -1.0 / (df * df - 1.0);
        if d < 2 || !(lo - 1e-12..=1.0 + 1e-12).contains(&mu) {
            Err(Error::InvalidParameter(format!("mu={mu} outside the CP range [{lo}, 1] for d={d}")))
        } else {
            Ok(())
        }
    };
    let wh_range = || {
        if d < 2 {
            Err(Error::InvalidParameter(format!("Werner-Holevo needs d >= 2, got {d}")))
        } else {
            Ok(())
        }
    };
    match form {
        ClosedForm::OmegaDep => {
            dep_range(mu)?;
            let big = 1.0 - mu + df * df * mu;
            let small = 1.0 - mu;
            Ok(df.powf(-(p + 1.0) / p) * (big.powf(p) + (df * df - 1.0) * small.powf(p)).powf(1.0 / p))
        }
        ClosedForm::ScbDep => {
            dep_range(mu)?;
            let big = 1.0 - mu + df * df * mu;
            let small = 1.0 - mu;
            Ok(df.log2() - (xlog2x(big) + (df * df - 1.0) * xlog2x(small)) / (df * df))
        }
        ClosedForm::OmegaWh => {
            wh_range()?;
            Ok((2.0 / (df - 1.0)).powf(1.0 - 1.0 / p))
        }
        ClosedForm::NuWh => {
            wh_range()?;
            Ok((1.0 / (df - 1.0)).powf(1.0 - 1.0 / p))
        }
        ClosedForm::ScbWh => {
            wh_range()?;
            Ok(((df - 1.0) / 2.0).log2())
        }
        ClosedForm::NuDepQubit => {
            if d != 2 {
                return Err(Error::InvalidParameter(format!("nu_dep_qubit is defined for d = 2, got {d}")));
            }
            dep_range(mu)?;
            Ok(0.5 * ((1.0 + mu).powf(p) + (1.0 - mu).powf(p)).powf(1.0 / p))
        }
    }
}

/// Outcome of a tensor-product check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCheck {
    /// Value for the product channel.
    pub lhs: f64,
    /// Product (for `ω_p`) or sum (for `S_CB,min`) of the factor values.
    pub rhs: f64,
    pub gap: f64,
    pub factor_values: [f64; 2],
    /// Restart spread of the product-channel optimization.
    pub spread: f64,
}

fn tensor_params(params: &NormParams) -> NormParams {
    NormParams { restarts: params.restarts * 3, ..*params }
}

/// `ω_p(Φ_A ⊗ Φ_B)` against `ω_p(Φ_A) ω_p(Φ_B)`. One restart of the product
/// optimization starts at the product of the factor optima.
pub fn mult_check_omega(a: &Channel, b: &Channel, p: f64, params: &NormParams) -> Result<TensorCheck> {
    let ra = omega_p(a, p, params, false)?;
    let rb = omega_p(b, p, params, false)?;
    let seed = linalg::kron(ra.state.coeffs(), rb.state.coeffs());
    let rab = omega_p_seeded(&a.tensor(b), p, &tensor_params(params), false, &[seed])?;
    let rhs = ra.value * rb.value;
    Ok(TensorCheck {
        lhs: rab.value,
        rhs,
        gap: rab.value - rhs,
        factor_values: [ra.value, rb.value],
        spread: rab.report.spread,
    })
}

/// `S_CB,min(Φ_A ⊗ Φ_B)` against `S_CB,min(Φ_A) + S_CB,min(Φ_B)`, product-seeded.
pub fn add_check_scb(a: &Channel, b: &Channel, params: &NormParams) -> Result<TensorCheck> {
    let ra = s_cb_min(a, params, false)?;
    let rb = s_cb_min(b, params, false)?;
    let seed = linalg::kron(ra.state.coeffs(), rb.state.coeffs());
    let rab = s_cb_min_seeded(&a.tensor(b), &tensor_params(params), false, &[seed])?;
    let rhs = ra.value + rb.value;
    Ok(TensorCheck {
        lhs: rab.value,
        rhs,
        gap: rab.value - rhs,
        factor_values: [ra.value, rb.value],
        spread: rab.report.spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuStar {
    pub d: usize,
    /// Root of `scb_dep(d, μ)` on the bracket.
    pub root: f64,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub iterations: usize,
    /// Whether `scb_dep` decreased strictly across the sampled bracket.
    pub monotone: bool,
    /// Published threshold for `d = 2`, if applicable.
    pub published_value: Option<f64>,
    pub discrepancy: Option<f64>,
    pub discrepancy_flagged: bool,
}

/// Bisection root of `S_CB,min(Ω_μ) = 0` in `μ`.
pub fn mu_star(d: usize, bracket: [f64; 2], tol: f64) -> Result<MuStar> {
    let [lo, hi] = bracket;
    if lo.is_nan() || hi.is_nan() || lo >= hi || tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("bad bracket {bracket:?} or tol {tol}")));
    }
    let f = |mu: f64| closed_form(ClosedForm::ScbDep, d, mu, 1.0);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 && f_hi == 0.0 {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let samples = 64;
    let mut monotone = true;
    let mut prev = f_lo;
    for i in 1..=samples {
        let v = f(lo + (hi - lo) * i as f64 / samples as f64)?;
        monotone &= v < prev;
        prev = v;
    }
    let (mut a, mut b, mut fa) = (lo, hi, f_lo);
    let mut iterations = 0;
    while b - a > tol * 1e-3 && iterations < 200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        iterations += 1;
    }
    let root = 0.5 * (a + b);
    let published_value = (d == 2).then_some(PUBLISHED_MU_STAR);
    let discrepancy = published_value.map(|v| root - v);
    Ok(MuStar {
        d,
        root,
        bracket,
        tol,
        iterations,
        monotone,
        published_value,
        discrepancy,
        discrepancy_flagged: discrepancy.is_some_and(|x| x.abs() > tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub a: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub lambda: f64,
    pub tau: f64,
    pub p: f64,
    /// Grid point with the largest ratio (earliest on ties).
    pub a_star: f64,
    pub curve: Vec<SweepPoint>,
}

/// Default `a` grid `0.01, 0.02, …, 0.99`.
pub fn default_a_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// `γ₁₂ = (I ⊗ Φ)(ψ_a ψ_a^dag)` for `ψ_a = √a |00⟩ + √(1−a) |11⟩` and the nonunital qubit map.
pub fn nonunital_gamma12(lambda: f64, tau: f64, a: f64) -> Result<ComplexMatrix> {
    let ch = Channel::nonunital_qubit(lambda, tau)?;
    let psi = BipartiteState::two_level(a)?;
    ch.apply_extended(&psi.density(), &DimSplit::pair(2, 2))
}

/// `‖γ₁₂‖_p / ‖γ₁‖_p` along `ψ_a` for the nonunital qubit map.
pub fn nonunital_sweep(lambda: f64, tau: f64, p: f64, a_grid: &[f64]) -> Result<Sweep> {
    check_p(p)?;
    if a_grid.is_empty() {
        return Err(Error::InvalidParameter("empty a grid".into()));
    }
    let ch = Channel::nonunital_qubit(lambda, tau)?;
    let mut curve = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let psi = BipartiteState::two_level(a)?;
        curve.push(SweepPoint { a, ratio: omega_ratio(&ch, &psi, p)? });
    }
    let best = curve.iter().fold(&curve[0], |best, pt| if pt.ratio > best.ratio { pt } else { best });
    Ok(Sweep { lambda, tau, p, a_star: best.a, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron};
    use crate::optimize::finite_difference_gradient;
    use crate::random::{ginibre, rng_from_seed};
    use approx::assert_abs_diff_eq;

    fn quick() -> NormParams {
        NormParams { restarts: 4, ..NormParams::default() }
    }

    #[test]
    fn u_fn_examples() {
        let bell = BipartiteState::maximally_entangled(2).density();
        let split = DimSplit::pair(2, 2);
        assert_abs_diff_eq!(u_fn(1.001, &bell, &split).unwrap(), -1.0, epsilon = 2e-3);
        let pure = kron(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]));
        assert_abs_diff_eq!(u_fn(1.5, &pure, &split).unwrap(), 0.0, epsilon = 1e-12);
        let mixed = identity(4).scale(0.25);
        assert_abs_diff_eq!(u_fn(2.0, &mixed, &split).unwrap(), 0.5 / LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(u_fn(1.0001, &mixed, &split).unwrap(), 1.0, epsilon = 1e-3);
        assert!(matches!(u_fn(1.0, &mixed, &split), Err(Error::BadExponent(_))));
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = rng_from_seed(21);
        let ch = Channel::random_cpt(2, 3, 2, 4).unwrap();
        for kind in [Kind::LogRatio(1.0), Kind::LogRatio(1.7), Kind::LogRatio(3.0), Kind::ConditionalEntropy] {
            for d_ref in [1, 2, 3] {
                let obj = ChannelObjective::new(&ch, d_ref, kind);
                let x = obj.param.pack(&ginibre(d_ref, 2, &mut rng));
                let mut analytic = vec![0.0; obj.dim()];
                obj.value_and_gradient(&x, &mut analytic);
                let mut fd = vec![0.0; obj.dim()];
                finite_difference_gradient(&obj, &x, 1e-6, &mut fd);
                for (a, f) in analytic.iter().zip(&fd) {
                    assert!((a - f).abs() <= 1e-4 * (1.0 + f.abs()), "{kind:?} d_ref={d_ref}: {a} vs {f}");
                }
            }
        }
    }

    #[test]
    fn objective_values_match_direct_evaluation() {
        let mut rng = rng_from_seed(2);
        let ch = Channel::random_cpt(2, 2, 3, 8).unwrap();
        let a = ginibre(2, 2, &mut rng);
        let state = BipartiteState::new(a.clone()).unwrap();
        let p = 2.5;
        let obj = ChannelObjective::new(&ch, 2, Kind::LogRatio(p));
        assert_abs_diff_eq!(obj.value(&obj.param.pack(&a)).exp(), omega_ratio(&ch, &state, p).unwrap(), epsilon = 1e-12);
        let obj = ChannelObjective::new(&ch, 2, Kind::ConditionalEntropy);
        assert_abs_diff_eq!(
            obj.value(&obj.param.pack(&a)) / LN_2,
            conditional_output_entropy(&ch, &state).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn omega_examples() {
        let r = omega_p(&Channel::identity(2), 2.0, &quick(), false).unwrap();
        assert_abs_diff_eq!(r.value, 2f64.sqrt(), epsilon = 1e-8);
        for p in [1.5, 2.0, 4.0] {
            let r = omega_p(&Channel::depolarizing(2, 1.0 / 3.0).unwrap(), p, &quick(), false).unwrap();
            assert!(r.value <= 1.0 + 1e-6);
        }
        let r = omega_p(&Channel::werner_holevo(3).unwrap(), 2.0, &quick(), false).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn omega_agrees_with_choi_norm() {
        let split = DimSplit::pair(2, 2);
        for seed in 0..3 {
            let ch = Channel::random_cpt(2, 2, 2, seed).unwrap();
            let a = omega_p(&ch, 2.0, &quick(), false).unwrap().value;
            let b = vnorms::norm_infp(&ch.choi().matrix, &split, &quick()).unwrap().value;
            assert!((a - b).abs() <= 1e-4 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn nu_examples() {
        assert_abs_diff_eq!(nu_p(&Channel::identity(3), 2.0, &quick()).unwrap().value, 1.0, epsilon = 1e-9);
        let dep = Channel::depolarizing(2, 0.5).unwrap();
        assert_abs_diff_eq!(nu_p(&dep, 2.0, &quick()).unwrap().value, 0.790569415, epsilon = 1e-8);
        let wh = Channel::werner_holevo(3).unwrap();
        assert_abs_diff_eq!(nu_p(&wh, 2.0, &quick()).unwrap().value, 0.5f64.sqrt(), epsilon = 1e-8);
        let omega = omega_p(&dep, 2.0, &quick(), false).unwrap().value;
        assert!(omega > nu_p(&dep, 2.0, &quick()).unwrap().value + 0.1);
    }

    #[test]
    fn scb_examples() {
        assert_abs_diff_eq!(s_cb_min(&Channel::identity(2), &quick(), false).unwrap().value, -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s_cb_min(&Channel::completely_noisy(2), &quick(), false).unwrap().value, 1.0, epsilon = 1e-8);
        let wh2 = Channel::werner_holevo(2).unwrap();
        assert_abs_diff_eq!(s_cb_min(&wh2, &quick(), false).unwrap().value, -1.0, epsilon = 1e-6);
        let wh3 = Channel::werner_holevo(3).unwrap();
        assert_abs_diff_eq!(s_cb_min(&wh3, &quick(), false).unwrap().value, 0.0, epsilon = 1e-6);
        let non_tp = Channel::from_kraus(2, 2, vec![identity(2).scale(0.5)]).unwrap();
        assert!(matches!(s_cb_min(&non_tp, &quick(), false), Err(Error::NotTp { .. })));
    }

    #[test]
    fn scb_value_matches_state() {
        let ch = Channel::random_cpt(2, 2, 2, 31).unwrap();
        let r = s_cb_min(&ch, &quick(), false).unwrap();
        assert_abs_diff_eq!(r.value, conditional_output_entropy(&ch, &r.state).unwrap(), epsilon = 1e-9);
        assert!(r.value >= -1.0 - 1e-9 && r.value <= 1.0 + 1e-9);
    }

    #[test]
    fn covariant_shortcut_agrees() {
        for ch in [Channel::depolarizing(2, 0.6).unwrap(), Channel::werner_holevo(3).unwrap()] {
            let full = s_cb_min(&ch, &quick(), false).unwrap().value;
            let mes = s_cb_min(&ch, &quick(), true).unwrap().value;
            assert_abs_diff_eq!(full, mes, epsilon = 1e-5);
            let full = omega_p(&ch, 2.0, &quick(), false).unwrap().value;
            let mes = omega_p(&ch, 2.0, &quick(), true).unwrap().value;
            assert_abs_diff_eq!(full, mes, epsilon = 1e-5);
        }
    }

    #[test]
    fn limit_examples() {
        let grid = [1.1, 1.05, 1.01];
        let est = cb_limit_estimate(&Channel::identity(2), &grid, &quick()).unwrap();
        assert_abs_diff_eq!(est.estimate, -1.0, epsilon = 0.05);
        let est = cb_limit_estimate(&Channel::completely_noisy(2), &grid, &quick()).unwrap();
        assert_abs_diff_eq!(est.estimate, 1.0, epsilon = 0.05);
        assert!(cb_limit_estimate(&Channel::identity(2), &[1.1], &quick()).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(closed_form(ClosedForm::OmegaDep, 2, 1.0, 2.0).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form(ClosedForm::ScbWh, 5, 0.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        // entropy of the spectrum {(1+3μ)/4, (1−μ)/4 ×3} minus one bit
        let mu: f64 = 0.74592;
        let big = (1.0 + 3.0 * mu) / 4.0;
        let small = (1.0 - mu) / 4.0;
        let h = -big * big.log2() - 3.0 * small * small.log2();
        assert_abs_diff_eq!(closed_form(ClosedForm::ScbDep, 2, mu, 1.0).unwrap(), h - 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h - 1.0, 0.00467, epsilon = 1e-5);
        assert_abs_diff_eq!(closed_form(ClosedForm::ScbDep, 2, 1.0, 1.0).unwrap(), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form(ClosedForm::ScbDep, 3, 0.0, 1.0).unwrap(), 3f64.log2(), epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form(ClosedForm::NuDepQubit, 2, 0.5, 2.0).unwrap(), 0.790569415, epsilon = 1e-9);
        assert!(matches!("omega_xyz".parse::<ClosedForm>(), Err(Error::BadName(_))));
        assert_eq!("nu_wh".parse::<ClosedForm>().unwrap(), ClosedForm::NuWh);
        assert!(closed_form(ClosedForm::NuDepQubit, 3, 0.5, 2.0).is_err());
    }

    #[test]
    fn closed_forms_match_covariant_evaluation() {
        for d in [2, 3] {
            for mu in [-0.1, 0.3, 0.8] {
                let ch = Channel::depolarizing(d, mu).unwrap();
                let omega = omega_p(&ch, 2.5, &quick(), true).unwrap().value;
                assert_abs_diff_eq!(omega, closed_form(ClosedForm::OmegaDep, d, mu, 2.5).unwrap(), epsilon = 1e-12);
                let scb = s_cb_min(&ch, &quick(), true).unwrap().value;
                assert_abs_diff_eq!(scb, closed_form(ClosedForm::ScbDep, d, mu, 1.0).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let id = Channel::identity(2);
        let r = mult_check_omega(&id, &id, 2.0, &quick()).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.rhs, 2.0, epsilon = 1e-8);
        let r = add_check_scb(&id, &id, &quick()).unwrap();
        assert_abs_diff_eq!(r.lhs, -2.0, epsilon = 1e-8);
        let noisy = Channel::completely_noisy(2);
        let r = add_check_scb(&noisy, &noisy, &quick()).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn mu_star_examples() {
        let r = mu_star(2, [0.5, 0.9], 1e-6).unwrap();
        assert!(r.monotone);
        // scalar oracle: bisection on the binary entropy-style spectrum condition H = 1 bit
        let h = |mu: f64| {
            let big = (1.0 + 3.0 * mu) / 4.0;
            let small = (1.0 - mu) / 4.0;
            -big * big.log2() - 3.0 * small * small.log2() - 1.0
        };
        let (mut lo, mut hi) = (0.5, 0.9);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if h(m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert_abs_diff_eq!(r.root, lo, epsilon = 1e-5);
        assert!(r.discrepancy_flagged);
        assert_abs_diff_eq!(r.discrepancy.unwrap(), lo - PUBLISHED_MU_STAR, epsilon = 1e-5);
        assert!(matches!(mu_star(2, [0.1, 0.5], 1e-6), Err(Error::NoSignChange { .. })));
        assert!(closed_form(ClosedForm::ScbDep, 2, 0.5, 1.0).unwrap() > 0.0);
        assert!(closed_form(ClosedForm::ScbDep, 2, 0.9, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn sweep_examples() {
        let grid = default_a_grid();
        let s = nonunital_sweep(0.8, 0.0, 2.0, &grid).unwrap();
        assert_abs_diff_eq!(s.a_star, 0.5, epsilon = 1e-12);
        let s = nonunital_sweep(0.6, 0.3, 2.0, &grid).unwrap();
        assert!(s.a_star > 0.5);
        let s = nonunital_sweep(0.6, -0.3, 2.0, &grid).unwrap();
        assert!(s.a_star < 0.5);
        let s = nonunital_sweep(0.8, 0.15, 3.0, &grid).unwrap();
        assert!(s.a_star > 0.5);
        assert!(matches!(nonunital_sweep(0.8, 0.3, 2.0, &grid), Err(Error::NotCp { .. })));
    }
}
