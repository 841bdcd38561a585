//! Dense complex linear algebra on small Hermitian matrices.
//!
//! Matrices are `nalgebra` dense matrices of [`C64`]. Tensor factors are
//! ordered left to right: on `C^{d1} ⊗ C^{d2}` the basis vector
//! `e_j ⊗ e_k` has index `j * d2 + k`. Entropies are in bits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Dense complex matrix carrying states, operators and Choi matrices.
pub type ComplexMatrix = DMatrix<C64>;

/// Numerical tolerances shared by every module.
pub mod tol {
    /// Relative Hermiticity / positivity tolerance.
    pub const HERM: f64 = 1e-10;
    /// Eigendecomposition accuracy.
    pub const EIG: f64 = 1e-9;
    /// Allowed deviation of a trace from one.
    pub const TRACE: f64 = 1e-9;
    /// Eigenvalues below `EIG_CLIP * max_eigenvalue` are treated as zero.
    pub const EIG_CLIP: f64 = 1e-15;
    /// Allowed residual of `sum K^dag K - I`.
    pub const TP: f64 = 1e-9;
}

/// Factor dimensions of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimSplit {
    dims: Vec<usize>,
}

impl DimSplit {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimMismatch(format!("invalid factor dimensions {dims:?}")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    pub fn pair(d1: usize, d2: usize) -> Self {
        Self::new(&[d1, d2]).expect("nonzero dimensions")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimMismatch(format!(
                "matrix is {}x{} but split {:?} needs side {}",
                m.nrows(),
                m.ncols(),
                self.dims,
                n
            )));
        }
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors stored as columns, in the same order as `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&d) * self.eigenvectors.adjoint()
    }
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
    DMatrix::from_diagonal(&v)
}

/// Matrix with real entries given row by row.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| C64::new(entries[i * cols + j], 0.0))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `||M - M^dag||_F / ||M||_F` (zero for the zero matrix).
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let residual = hermiticity_residual(m);
    if residual > tol::HERM {
        return Err(Error::NonHermitian { residual });
    }
    Ok(())
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part of `m`, descending. No validation.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Full eigendecomposition of the Hermitian part of `m`. No validation.
pub fn hermitian_spectrum(m: &ComplexMatrix) -> Spectrum {
    let h = hermitian_part(m);
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Spectrum { eigenvalues, eigenvectors }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn herm_eig(h: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian(h)?;
    Ok(hermitian_spectrum(h))
}

/// Zero out eigenvalues below the clip threshold (including negative noise).
pub fn clip_spectrum(eigenvalues: &[f64]) -> Vec<f64> {
    let max = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let cut = tol::EIG_CLIP * max;
    eigenvalues.iter().map(|&x| if x <= cut { 0.0 } else { x }).collect()
}

/// Validate positivity: Hermitian and `min eig >= -tol_herm * ||Q||_F`.
pub fn check_psd(q: &ComplexMatrix) -> Result<Spectrum> {
    let spec = herm_eig(q)?;
    let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -tol::HERM * q.norm() {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(spec)
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `(Σ x_i^p)^{1/p}` for nonnegative `x`, scaled to avoid overflow; `p = ∞` gives the max.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    let max = values.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    if max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    let s: f64 = values.iter().map(|&x| (x.abs() / max).powf(p)).sum();
    max * s.powf(1.0 / p)
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    Ok(())
}

/// Schatten p-norm `(Tr |M|^p)^{1/p}`; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm(&singular_values(m), p))
}

/// Schatten norm of a Hermitian matrix via its eigenvalues.
pub fn schatten_norm_hermitian(h: &ComplexMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let ev: Vec<f64> = hermitian_eigenvalues(h).into_iter().map(f64::abs).collect();
    Ok(lp_norm(&ev, p))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(ms: &[&ComplexMatrix]) -> ComplexMatrix {
    ms.iter().fold(ComplexMatrix::identity(1, 1), |acc, m| acc.kronecker(*m))
}

/// Partial trace keeping the factors listed in `keep` (0-based, any order;
/// the result keeps the original factor order).
pub fn partial_trace(m: &ComplexMatrix, split: &DimSplit, keep: &[usize]) -> Result<ComplexMatrix> {
    split.check(m)?;
    let dims = split.dims();
    let nf = dims.len();
    if let Some(&bad) = keep.iter().find(|&&k| k >= nf) {
        return Err(Error::DimMismatch(format!("factor {bad} out of range for split {dims:?}")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..nf).filter(|f| !kept.contains(f)).collect();

    let mut strides = vec![1usize; nf];
    for f in (0..nf.saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * dims[f]);
            for &o in &out {
                for digit in 0..dims[f] {
                    next.push(o + digit * strides[f]);
                }
            }
            out = next;
        }
        out
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);
    let k = keep_off.len();
    Ok(ComplexMatrix::from_fn(k, k, |r, c| {
        trace_off
            .iter()
            .map(|&t| m[(keep_off[r] + t, keep_off[c] + t)])
            .sum()
    }))
}

/// Apply a scalar function to the spectrum of a PSD matrix. Eigenvalues
/// below the clip threshold are passed to `f` as exactly zero.
pub fn matrix_fn_psd(q: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let spec = check_psd(q)?;
    Ok(apply_to_spectrum(&spec, f))
}

/// `V f(Λ) V^dag` with clipped eigenvalues. No validation.
pub fn apply_to_spectrum(spec: &Spectrum, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let clipped = clip_spectrum(&spec.eigenvalues);
    let n = clipped.len();
    let v = &spec.eigenvectors;
    let mut scaled = v.clone();
    for c in 0..n {
        let fc = f(clipped[c]);
        for r in 0..n {
            scaled[(r, c)] *= fc;
        }
    }
    scaled * v.adjoint()
}

/// `Q^s` for PSD `Q` without validation (`0^s = 0` for every `s`).
pub fn psd_power(q: &ComplexMatrix, s: f64) -> ComplexMatrix {
    apply_to_spectrum(&hermitian_spectrum(q), |x| if x > 0.0 { x.powf(s) } else { 0.0 })
}

/// `Σ λ_i^p` over clipped eigenvalues of a PSD matrix.
pub fn trace_power(q: &ComplexMatrix, p: f64) -> f64 {
    clip_spectrum(&hermitian_eigenvalues(q))
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x.powf(p))
        .sum()
}

/// Shannon entropy in nats of a (clipped) spectrum, `0 log 0 = 0`.
pub fn spectrum_entropy_nats(eigenvalues: &[f64]) -> f64 {
    clip_spectrum(eigenvalues)
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// Shannon entropy in bits of a (clipped) spectrum.
pub fn spectrum_entropy_bits(eigenvalues: &[f64]) -> f64 {
    spectrum_entropy_nats(eigenvalues) / std::f64::consts::LN_2
}

/// Von Neumann entropy `-Tr ρ log₂ ρ`. A state whose trace is off by more
/// than `tol::TRACE` is normalized first and a warning is logged.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let spec = check_psd(rho)?;
    let mut ev = clip_spectrum(&spec.eigenvalues);
    let t: f64 = ev.iter().sum();
    if (t - 1.0).abs() > tol::TRACE {
        log::warn!("entropy of a matrix with trace {t}; normalizing");
        if t > 0.0 {
            ev.iter_mut().for_each(|x| *x /= t);
        }
    }
    Ok(spectrum_entropy_bits(&ev))
}

/// `S(γ₁₂) − S(γ₁)` in bits, `γ₁` the marginal on the first factor.
pub fn conditional_entropy(g12: &ComplexMatrix, split: &DimSplit) -> Result<f64> {
    if split.dims().len() != 2 {
        return Err(Error::DimMismatch("conditional entropy needs a bipartite split".into()));
    }
    let g1 = partial_trace(g12, split, &[0])?;
    Ok(von_neumann_entropy(g12)? - von_neumann_entropy(&g1)?)
}

/// Pure state on `C^{d1} ⊗ C^{d2}` stored by its coefficient matrix:
/// `ψ = Σ_{jk} A_{jk} e_j ⊗ e_k`, so the first marginal is `A A^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    coeffs: ComplexMatrix,
}

impl BipartiteState {
    /// Normalizes `coeffs` to unit Frobenius norm.
    pub fn new(coeffs: ComplexMatrix) -> Result<Self> {
        let n = coeffs.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("zero or non-finite state".into()));
        }
        Ok(Self { coeffs: coeffs.unscale(n) })
    }

    /// Maximally entangled state `(1/√d) Σ e_j ⊗ e_j`.
    pub fn maximally_entangled(d: usize) -> Self {
        Self { coeffs: identity(d).unscale((d as f64).sqrt()) }
    }

    /// `√a |00⟩ + √(1−a) |11⟩`.
    pub fn two_level(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!("a = {a} outside [0, 1]")));
        }
        Self::new(diag(&[a.sqrt(), (1.0 - a).sqrt()]))
    }

    pub fn coeffs(&self) -> &ComplexMatrix {
        &self.coeffs
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.coeffs.nrows(), self.coeffs.ncols())
    }

    pub fn split(&self) -> DimSplit {
        DimSplit::pair(self.coeffs.nrows(), self.coeffs.ncols())
    }

    /// State vector, row-major flattening of the coefficients.
    pub fn vector(&self) -> DVector<C64> {
        let (r, c) = self.dims();
        DVector::from_fn(r * c, |i, _| self.coeffs[(i / c, i % c)])
    }

    pub fn density(&self) -> ComplexMatrix {
        let v = self.vector();
        &v * v.adjoint()
    }

    /// `Tr₂ |ψ⟩⟨ψ| = A A^dag`.
    pub fn marginal_first(&self) -> ComplexMatrix {
        &self.coeffs * self.coeffs.adjoint()
    }

    /// `Tr₁ |ψ⟩⟨ψ| = A^T conj(A)`.
    pub fn marginal_second(&self) -> ComplexMatrix {
        self.coeffs.transpose() * self.coeffs.conjugate()
    }

    /// Tensor product, with factors reordered as `(R_a R_b) ⊗ (S_a S_b)`.
    pub fn tensor(&self, other: &BipartiteState) -> BipartiteState {
        BipartiteState { coeffs: kron(&self.coeffs, &other.coeffs) }
    }
}

/// Purification of a density matrix on `C^d ⊗ C^d`: ancilla basis vector `k`
/// pairs with the eigenvector of the `k`-th largest eigenvalue.
pub fn purify(rho: &ComplexMatrix) -> Result<BipartiteState> {
    let spec = check_psd(rho)?;
    let ev = clip_spectrum(&spec.eigenvalues);
    let d = rho.nrows();
    let mut coeffs = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let w = ev[k].sqrt();
        for j in 0..d {
            coeffs[(j, k)] = spec.eigenvectors[(j, k)] * w;
        }
    }
    BipartiteState::new(coeffs)
}

/// Schmidt decomposition `ψ = Σ_k μ_k φ_k ⊗ χ_k`.
#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Schmidt coefficients, descending.
    pub coefficients: Vec<f64>,
    /// `φ_k` as columns.
    pub left: ComplexMatrix,
    /// `χ_k` as columns.
    pub right: ComplexMatrix,
}

pub fn schmidt(psi: &BipartiteState) -> Schmidt {
    let svd = psi.coeffs.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients = order.iter().map(|&i| svd.singular_values[i]).collect();
    let left = ComplexMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    // A = U Σ V^dag; the k-th right Schmidt vector is the conjugate of column k of V,
    // i.e. row k of V^dag.
    let right = ComplexMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Schmidt { coefficients, left, right }
}
