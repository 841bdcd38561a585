//! Completely positive maps in Kraus form, with Choi and Stinespring views.
//!
//! The Kraus list is the canonical representation. The Choi matrix
//! `X_Φ = Σ_{jk} |j⟩⟨k| ⊗ Φ(|j⟩⟨k|)` lives on `C^{d_in} ⊗ C^{d_out}` and is
//! computed once on demand.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_spectrum, identity, kron, partial_trace, tol, ComplexMatrix, DimSplit,
};
use crate::random::{random_isometry, rng_from_seed};
use crate::C64;

/// Eigenvalues of a Choi matrix below `RANK_TOL * λ_max` produce no Kraus operator.
pub const RANK_TOL: f64 = 1e-12;

/// Choi matrix on `C^{d_in} ⊗ C^{d_out}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub split: DimSplit,
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        if matrix.nrows() != d_in * d_out || matrix.ncols() != d_in * d_out {
            return Err(Error::DimMismatch(format!(
                "Choi matrix is {}x{}, expected side {}",
                matrix.nrows(),
                matrix.ncols(),
                d_in * d_out
            )));
        }
        Ok(Self { matrix, split: DimSplit::pair(d_in, d_out) })
    }

    pub fn d_in(&self) -> usize {
        self.split.dims()[0]
    }

    pub fn d_out(&self) -> usize {
        self.split.dims()[1]
    }
}

/// Measure-and-prepare data `Φ(ρ) = Σ_k R_k Tr(ρ E_k)`.
#[derive(Debug, Clone)]
pub struct EbtSpec {
    pub states: Vec<ComplexMatrix>,
    pub povm: Vec<ComplexMatrix>,
}

impl EbtSpec {
    pub fn validate(&self) -> Result<(usize, usize)> {
        if self.states.is_empty() || self.states.len() != self.povm.len() {
            return Err(Error::DimMismatch(format!(
                "{} states for {} POVM elements",
                self.states.len(),
                self.povm.len()
            )));
        }
        let d_in = self.povm[0].nrows();
        let d_out = self.states[0].nrows();
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for e in &self.povm {
            if e.shape() != (d_in, d_in) {
                return Err(Error::DimMismatch("POVM elements differ in size".into()));
            }
            linalg::check_psd(e)?;
            sum += e;
        }
        let residual = (sum - identity(d_in)).norm();
        if residual > tol::TP {
            return Err(Error::BadPovm { residual });
        }
        for r in &self.states {
            if r.shape() != (d_out, d_out) {
                return Err(Error::DimMismatch("prepared states differ in size".into()));
            }
            linalg::check_psd(r)?;
            let t = linalg::trace(r).re;
            if (t - 1.0).abs() > tol::TRACE {
                return Err(Error::InvalidParameter(format!("prepared state has trace {t}")));
            }
        }
        Ok((d_in, d_out))
    }
}

/// Isometry `V: C^{d_in} → C^{d_out} ⊗ C^{d_env}`, `V|φ⟩ = Σ_j K_j|φ⟩ ⊗ |j⟩`.
#[derive(Debug, Clone)]
pub struct StinespringIsometry {
    pub v: ComplexMatrix,
    pub d_out: usize,
    pub d_env: usize,
}

impl StinespringIsometry {
    pub fn split(&self) -> DimSplit {
        DimSplit::pair(self.d_out, self.d_env)
    }

    /// `V ρ V^dag` on output ⊗ environment.
    pub fn dilate(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        &self.v * rho * self.v.adjoint()
    }

    /// `Tr_E V ρ V^dag`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        partial_trace(&self.dilate(rho), &self.split(), &[0])
    }

    /// `Tr_out V ρ V^dag`.
    pub fn environment(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        partial_trace(&self.dilate(rho), &self.split(), &[1])
    }
}

/// A completely positive map `M_{d_in} → M_{d_out}` stored by Kraus operators.
#[derive(Debug, Clone)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexMatrix>,
    entanglement_breaking: bool,
    choi: OnceLock<ChoiMatrix>,
}

impl Channel {
    pub fn from_kraus(d_in: usize, d_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::DimMismatch("channel dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("empty Kraus list".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.shape() != (d_out, d_in)) {
            return Err(Error::DimMismatch(format!(
                "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self { d_in, d_out, kraus, entanglement_breaking: false, choi: OnceLock::new() })
    }

    /// Builds the channel from its action on matrix units via the Choi matrix.
    pub fn from_map(d_in: usize, d_out: usize, map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let n = d_in * d_out;
        let mut x = ComplexMatrix::zeros(n, n);
        for j in 0..d_in {
            for k in 0..d_in {
                let mut unit = ComplexMatrix::zeros(d_in, d_in);
                unit[(j, k)] = C64::new(1.0, 0.0);
                let out = map(&unit);
                x.view_mut((j * d_out, k * d_out), (d_out, d_out)).copy_from(&out);
            }
        }
        Self::from_choi(&ChoiMatrix::new(x, d_in, d_out)?)
    }

    /// Kraus operators from the eigenvectors of a PSD Choi matrix.
    pub fn from_choi(choi: &ChoiMatrix) -> Result<Self> {
        let x = &choi.matrix;
        let residual = linalg::hermiticity_residual(x);
        if residual > tol::HERM {
            return Err(Error::NonHermitian { residual });
        }
        let spec = hermitian_spectrum(x);
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -tol::HERM * x.norm() {
            return Err(Error::NotCp { min_eigenvalue: min });
        }
        let (d_in, d_out) = (choi.d_in(), choi.d_out());
        let max = spec.eigenvalues[0].max(0.0);
        let mut kraus = Vec::new();
        for (idx, &lambda) in spec.eigenvalues.iter().enumerate() {
            if lambda <= RANK_TOL * max || lambda <= 0.0 {
                continue;
            }
            let w = lambda.sqrt();
            let v = spec.eigenvectors.column(idx);
            kraus.push(ComplexMatrix::from_fn(d_out, d_in, |a, i| v[i * d_out + a] * w));
        }
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(d_out, d_in));
        }
        let ch = Self::from_kraus(d_in, d_out, kraus)?;
        let _ = ch.choi.set(choi.clone());
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(d, d, vec![identity(d)]).expect("valid identity")
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        let d = u.nrows();
        let ch = Self::from_kraus(u.ncols(), d, vec![u])?;
        if !ch.is_tp() {
            return Err(Error::NotTp { residual: ch.tp_residual() });
        }
        Ok(ch)
    }

    /// `ρ ↦ (Tr ρ) I/d`.
    pub fn completely_noisy(d: usize) -> Self {
        Self::depolarizing(d, 0.0).expect("valid noisy channel")
    }

    /// `Ω_μ(ρ) = μ ρ + (1 − μ)(Tr ρ) I/d`, CP for `μ ∈ [−1/(d²−1), 1]`.
    pub fn depolarizing(d: usize, mu: f64) -> Result<Self> {
        if d == 0 || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("depolarizing(d={d}, mu={mu})")));
        }
        let noise = identity(d).unscale(d as f64);
        Self::from_map(d, d, |e| e.scale(mu) + noise.scale((1.0 - mu) * linalg::trace(e).re))
    }

    /// `Φ(ρ) = [(Tr ρ) I − ρ^T] / (d − 1)`.
    pub fn werner_holevo(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("Werner-Holevo needs d >= 2, got {d}")));
        }
        let w = 1.0 / (d as f64 - 1.0);
        Self::from_map(d, d, |e| (identity(d) * linalg::trace(e) - e.transpose()).scale(w))
    }

    /// `Φ(ρ) = λρ + ((1−λ)/2 I + (τ/2) σ_z) Tr ρ`. The CP region is checked
    /// numerically through the Choi matrix.
    pub fn nonunital_qubit(lambda: f64, tau: f64) -> Result<Self> {
        if !lambda.is_finite() || !tau.is_finite() {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        let shift = linalg::diag(&[(1.0 - lambda + tau) / 2.0, (1.0 - lambda - tau) / 2.0]);
        Self::from_map(2, 2, |e| e.scale(lambda) + &shift * linalg::trace(e))
    }

    /// Entanglement-breaking channel `Φ(ρ) = Σ_k R_k Tr(ρ E_k)`.
    pub fn ebt(spec: &EbtSpec) -> Result<Self> {
        let (d_in, d_out) = spec.validate()?;
        let mut ch = Self::from_map(d_in, d_out, |e| {
            spec.states
                .iter()
                .zip(&spec.povm)
                .fold(ComplexMatrix::zeros(d_out, d_out), |acc, (r, ek)| acc + r * (e * ek).trace())
        })?;
        ch.entanglement_breaking = true;
        Ok(ch)
    }

    /// Random channel from a Haar isometry `C^{d_in} → C^{d_out} ⊗ C^{d_env}`.
    pub fn random_cpt(d_in: usize, d_out: usize, d_env: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out * d_env < d_in {
            return Err(Error::DimMismatch(format!(
                "need d_out*d_env >= d_in (got {d_out}*{d_env} < {d_in})"
            )));
        }
        let v = random_isometry(d_out * d_env, d_in, &mut rng_from_seed(seed));
        let kraus = (0..d_env)
            .map(|j| ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(a * d_env + j, i)]))
            .collect();
        Self::from_kraus(d_in, d_out, kraus)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn is_entanglement_breaking(&self) -> bool {
        self.entanglement_breaking
    }

    /// `||Σ K^dag K − I||_F`.
    pub fn tp_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.d_in, self.d_in), |acc, k| acc + k.adjoint() * k);
        (s - identity(self.d_in)).norm()
    }

    pub fn is_tp(&self) -> bool {
        self.tp_residual() <= tol::TP
    }

    pub fn require_tp(&self) -> Result<()> {
        let residual = self.tp_residual();
        if residual > tol::TP {
            return Err(Error::NotTp { residual });
        }
        Ok(())
    }

    /// `X_Φ = Σ_j vec(K_j) vec(K_j)^dag` with `vec(K)_{(i,a)} = K_{ai}`.
    pub fn choi(&self) -> &ChoiMatrix {
        self.choi.get_or_init(|| {
            let n = self.d_in * self.d_out;
            let mut x = ComplexMatrix::zeros(n, n);
            for k in &self.kraus {
                let v = DVector::from_fn(n, |idx, _| k[(idx % self.d_out, idx / self.d_out)]);
                x += &v * v.adjoint();
            }
            ChoiMatrix { matrix: x, split: DimSplit::pair(self.d_in, self.d_out) }
        })
    }

    /// `Φ(ρ) = Σ_j K_j ρ K_j^dag`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.d_in, self.d_in) {
            return Err(Error::DimMismatch(format!(
                "input is {}x{}, channel expects {}x{}",
                rho.nrows(),
                rho.ncols(),
                self.d_in,
                self.d_in
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.d_out, self.d_out), |acc, k| acc + k * rho * k.adjoint()))
    }

    /// Heisenberg-picture map `Φ^dag(Y) = Σ_j K_j^dag Y K_j`.
    pub fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.shape() != (self.d_out, self.d_out) {
            return Err(Error::DimMismatch("adjoint input has wrong size".into()));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.d_in, self.d_in), |acc, k| acc + k.adjoint() * y * k))
    }

    /// `(I_d ⊗ Φ)(Q)` for `Q` on `C^d ⊗ C^{d_in}`.
    pub fn apply_extended(&self, q: &ComplexMatrix, split: &DimSplit) -> Result<ComplexMatrix> {
        let dims = split.dims();
        if dims.len() != 2 || dims[1] != self.d_in || q.shape() != (split.total(), split.total()) {
            return Err(Error::DimMismatch(format!(
                "extended input needs split (d, {}) matching the matrix",
                self.d_in
            )));
        }
        let id = identity(dims[0]);
        let n = dims[0] * self.d_out;
        Ok(self.kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
            let big = kron(&id, k);
            acc + &big * q * big.adjoint()
        }))
    }

    /// `Φ_A ⊗ Φ_B`, Kraus operators `A_i ⊗ B_j` ordered with `i` outermost.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        let mut ch = Channel::from_kraus(self.d_in * other.d_in, self.d_out * other.d_out, kraus)
            .expect("tensor of valid channels");
        ch.entanglement_breaking = self.entanglement_breaking && other.entanglement_breaking;
        ch
    }

    pub fn stinespring(&self) -> Result<StinespringIsometry> {
        self.require_tp()?;
        let d_env = self.kraus.len();
        let v = ComplexMatrix::from_fn(self.d_out * d_env, self.d_in, |row, i| {
            self.kraus[row % d_env][(row / d_env, i)]
        });
        Ok(StinespringIsometry { v, d_out: self.d_out, d_env })
    }

    /// Channel to the environment, `ρ ↦ Tr_out V ρ V^dag`.
    pub fn complementary(&self) -> Result<Channel> {
        self.require_tp()?;
        let d_env = self.kraus.len();
        let kraus = (0..self.d_out)
            .map(|a| ComplexMatrix::from_fn(d_env, self.d_in, |j, i| self.kraus[j][(a, i)]))
            .collect();
        Channel::from_kraus(self.d_in, d_env, kraus)
    }

    pub fn to_spec(&self) -> ChannelSpec {
        ChannelSpec {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self
                .kraus
                .iter()
                .map(|k| {
                    (0..k.nrows())
                        .map(|r| (0..k.ncols()).map(|c| [k[(r, c)].re, k[(r, c)].im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &ChannelSpec) -> Result<Self> {
        let mut kraus = Vec::with_capacity(spec.kraus.len());
        for (idx, op) in spec.kraus.iter().enumerate() {
            if op.len() != spec.d_out || op.iter().any(|row| row.len() != spec.d_in) {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator {idx} is not {}x{}",
                    spec.d_out, spec.d_in
                )));
            }
            kraus.push(ComplexMatrix::from_fn(spec.d_out, spec.d_in, |r, c| {
                let [re, im] = op[r][c];
                C64::new(re, im)
            }));
        }
        Self::from_kraus(spec.d_in, spec.d_out, kraus)
    }

    /// Builtin channels by name: `depolarizing:d=2,mu=0.5`, `werner-holevo:d=3`,
    /// `nonunital:lambda=0.8,tau=0.3`, `identity:d=2`, `noisy:d=2`.
    pub fn from_builtin(spec: &str) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = BTreeMap::new();
        for part in args.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("'{v}' is not a number (key '{k}')")))?;
            kv.insert(k.trim().to_string(), value);
        }
        let get = |key: &str| {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("builtin '{name}' needs '{key}='")))
        };
        let dim = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::Parse(format!("{key}={v} is not a positive integer")));
            }
            Ok(v as usize)
        };
        let allowed: &[&str] = match name.trim() {
            "depolarizing" => &["d", "mu"],
            "werner-holevo" | "identity" | "noisy" => &["d"],
            "nonunital" => &["lambda", "tau"],
            other => return Err(Error::BadName(other.to_string())),
        };
        if let Some(extra) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unexpected key '{extra}' for '{name}'")));
        }
        match name.trim() {
            "depolarizing" => Self::depolarizing(dim("d")?, get("mu")?),
            "werner-holevo" => Self::werner_holevo(dim("d")?),
            "nonunital" => Self::nonunital_qubit(get("lambda")?, get("tau")?),
            "identity" => Ok(Self::identity(dim("d")?)),
            _ => Ok(Self::completely_noisy(dim("d")?)),
        }
    }
}

/// JSON channel description: `{"d_in", "d_out", "kraus": [op][row][col] = [re, im]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, hermitian_eigenvalues, BipartiteState};
    use crate::random::random_density;
    use approx::assert_abs_diff_eq;

    fn sorted_eigs(m: &ComplexMatrix) -> Vec<f64> {
        hermitian_eigenvalues(m)
    }

    #[test]
    fn choi_examples() {
        let id = Channel::identity(2);
        let ev = sorted_eigs(&id.choi().matrix);
        assert_abs_diff_eq!(ev[0], 2.0, epsilon = 1e-14);
        assert!(ev[1..].iter().all(|x| x.abs() < 1e-14));

        let noisy = Channel::completely_noisy(2);
        assert!((&noisy.choi().matrix - identity(4).scale(0.5)).norm() < 1e-14);

        // eigenvalues of (I ⊗ Ω)(Φ⁺) scaled by d
        let dep = Channel::depolarizing(2, 0.5).unwrap();
        let ev = sorted_eigs(&dep.choi().matrix);
        for (got, want) in ev.iter().zip([1.25, 0.25, 0.25, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn choi_from_kraus_matches_map_definition() {
        let ch = Channel::random_cpt(2, 3, 2, 4).unwrap();
        let mut x = ComplexMatrix::zeros(6, 6);
        for j in 0..2 {
            for k in 0..2 {
                let mut e = ComplexMatrix::zeros(2, 2);
                e[(j, k)] = C64::new(1.0, 0.0);
                let mut unit = ComplexMatrix::zeros(2, 2);
                unit[(j, k)] = C64::new(1.0, 0.0);
                x += kron(&unit, &ch.apply(&e).unwrap());
            }
        }
        assert!((x - &ch.choi().matrix).norm() < 1e-13);
    }

    #[test]
    fn kraus_from_choi_examples() {
        let id = Channel::from_choi(Channel::identity(2).choi()).unwrap();
        assert_eq!(id.kraus().len(), 1);
        let k = &id.kraus()[0];
        let phase = k[(0, 0)];
        assert!((k - identity(2) * phase).norm() < 1e-12);
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-12);

        let noisy = Channel::from_choi(&ChoiMatrix::new(identity(4).scale(0.5), 2, 2).unwrap()).unwrap();
        assert_eq!(noisy.kraus().len(), 4);
        for k in noisy.kraus() {
            // each operator is a rank-one |i⟩⟨j|/√2 up to the unitary freedom in the
            // degenerate eigenspace: its squared Frobenius norm is 1/2
            assert_abs_diff_eq!(k.norm_squared(), 0.5, epsilon = 1e-12);
        }
        assert!(noisy.is_tp());

        let ch = Channel::random_cpt(3, 2, 3, 11).unwrap();
        let back = Channel::from_choi(ch.choi()).unwrap();
        let mut fresh = back.clone();
        fresh.choi = OnceLock::new();
        assert!((&fresh.choi().matrix - &ch.choi().matrix).norm() <= 1e-9);
        assert!(back.kraus().len() <= 6);
    }

    #[test]
    fn kraus_from_choi_rejects_non_cp() {
        let mut x = Channel::identity(2).choi().matrix.clone();
        x[(1, 1)] = C64::new(-0.3, 0.0);
        let choi = ChoiMatrix::new(x, 2, 2).unwrap();
        assert!(matches!(Channel::from_choi(&choi), Err(Error::NotCp { .. })));
    }

    #[test]
    fn apply_examples() {
        let mu = 0.3;
        let dep = Channel::depolarizing(2, mu).unwrap();
        let out = dep.apply(&diag(&[1.0, 0.0])).unwrap();
        assert!((out - diag(&[(1.0 + mu) / 2.0, (1.0 - mu) / 2.0])).norm() < 1e-13);

        let wh = Channel::werner_holevo(3).unwrap();
        let mixed = identity(3).unscale(3.0);
        assert!((wh.apply(&mixed).unwrap() - &mixed).norm() < 1e-13);

        let noisy = Channel::completely_noisy(3);
        let rho = random_density(3, &mut rng_from_seed(1));
        assert!((noisy.apply(&rho).unwrap() - &mixed).norm() < 1e-13);

        assert!(matches!(noisy.apply(&identity(2)), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn apply_extended_examples() {
        let dep = Channel::depolarizing(2, 0.5).unwrap();
        let bell = BipartiteState::maximally_entangled(2).density();
        let split = DimSplit::pair(2, 2);
        let ev = sorted_eigs(&dep.apply_extended(&bell, &split).unwrap());
        for (got, want) in ev.iter().zip([0.625, 0.125, 0.125, 0.125]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }

        let wh = Channel::werner_holevo(3).unwrap();
        let phi = BipartiteState::maximally_entangled(3).density();
        let ev = sorted_eigs(&wh.apply_extended(&phi, &DimSplit::pair(3, 3)).unwrap());
        for x in &ev[..3] {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert!(ev[3..].iter().all(|x| x.abs() < 1e-12));

        assert!(matches!(
            dep.apply_extended(&bell, &DimSplit::pair(1, 4)),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn nonunital_extended_output_in_cp_region() {
        let (lambda, tau, a) = (0.6, 0.3, 0.35);
        let ch = Channel::nonunital_qubit(lambda, tau).unwrap();
        let psi = BipartiteState::two_level(a).unwrap();
        let got = ch.apply_extended(&psi.density(), &DimSplit::pair(2, 2)).unwrap();
        let s = (a * (1.0 - a)).sqrt();
        // basis order |00⟩, |01⟩, |10⟩, |11⟩
        let want = crate::linalg::real_matrix(
            4,
            4,
            &[
                a * (1.0 + tau + lambda), 0.0, 0.0, 2.0 * lambda * s,
                0.0, a * (1.0 - tau - lambda), 0.0, 0.0,
                0.0, 0.0, (1.0 - a) * (1.0 + tau - lambda), 0.0,
                2.0 * lambda * s, 0.0, 0.0, (1.0 - a) * (1.0 - tau + lambda),
            ],
        )
        .scale(0.5);
        assert!((&got - want).camax() <= 1e-12);
        let g1 = partial_trace(&got, &DimSplit::pair(2, 2), &[0]).unwrap();
        assert!((g1 - diag(&[a, 1.0 - a])).camax() <= 1e-12);
    }

    #[test]
    fn depolarizing_builder() {
        let id = Channel::depolarizing(2, 1.0).unwrap();
        assert_eq!(id.kraus().len(), 1);
        assert!((&id.choi().matrix - &Channel::identity(2).choi().matrix).norm() < 1e-12);
        let noisy = Channel::depolarizing(3, 0.0).unwrap();
        assert_eq!(noisy.kraus().len(), 9);
        assert!(noisy.is_tp());
        // lower end of the CP range
        assert!(Channel::depolarizing(2, -1.0 / 3.0).is_ok());
        assert!(matches!(Channel::depolarizing(2, -0.5), Err(Error::NotCp { .. })));
        let err = Channel::depolarizing(2, 1.5).unwrap_err();
        match err {
            Error::NotCp { min_eigenvalue } => assert_abs_diff_eq!(min_eigenvalue, -0.25, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn werner_holevo_builder() {
        let wh = Channel::werner_holevo(2).unwrap();
        assert!((wh.apply(&diag(&[1.0, 0.0])).unwrap() - diag(&[0.0, 1.0])).norm() < 1e-13);
        for d in 2..=4 {
            let wh = Channel::werner_holevo(d).unwrap();
            assert!(wh.is_tp());
            let ev = sorted_eigs(&wh.choi().matrix);
            let antisym = d * (d - 1) / 2;
            for x in &ev[..antisym] {
                assert_abs_diff_eq!(*x, 2.0 / (d as f64 - 1.0), epsilon = 1e-12);
            }
            assert!(ev[antisym..].iter().all(|x| x.abs() < 1e-12));
        }
        assert!(Channel::werner_holevo(1).is_err());
    }

    #[test]
    fn nonunital_builder() {
        let id = Channel::nonunital_qubit(1.0, 0.0).unwrap();
        assert!((&id.choi().matrix - &Channel::identity(2).choi().matrix).norm() < 1e-12);
        let noisy = Channel::nonunital_qubit(0.0, 0.0).unwrap();
        assert!((&noisy.choi().matrix - &Channel::completely_noisy(2).choi().matrix).norm() < 1e-12);
        let ch = Channel::nonunital_qubit(0.6, 0.3).unwrap();
        assert!(ch.is_tp());
        // outside the CP region: Φ(|0⟩⟨0|) acquires a negative eigenvalue (1−λ−τ)/2
        match Channel::nonunital_qubit(0.8, 0.3) {
            Err(Error::NotCp { min_eigenvalue }) => assert_abs_diff_eq!(min_eigenvalue, -0.05, epsilon = 1e-12),
            other => panic!("expected NotCp, got {other:?}"),
        }
    }

    fn tetrahedral_ebt() -> EbtSpec {
        // Bloch vectors of a regular tetrahedron
        let s = 1.0 / 3f64.sqrt();
        let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let proj = |n: &[f64; 3]| {
            ComplexMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new((1.0 + n[2]) / 2.0, 0.0),
                    C64::new(n[0] / 2.0, -n[1] / 2.0),
                    C64::new(n[0] / 2.0, n[1] / 2.0),
                    C64::new((1.0 - n[2]) / 2.0, 0.0),
                ],
            )
        };
        EbtSpec {
            states: dirs.iter().map(proj).collect(),
            povm: dirs.iter().map(|n| proj(n).scale(0.5)).collect(),
        }
    }

    #[test]
    fn ebt_builder() {
        // measure and prepare in the computational basis
        let spec = EbtSpec {
            states: vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])],
            povm: vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])],
        };
        let ch = Channel::ebt(&spec).unwrap();
        assert!(ch.is_entanglement_breaking() && ch.is_tp());
        let bell = BipartiteState::maximally_entangled(2).density();
        let out = ch.apply_extended(&bell, &DimSplit::pair(2, 2)).unwrap();
        assert!((out - diag(&[0.5, 0.0, 0.0, 0.5])).norm() < 1e-13);

        let sigma = random_density(3, &mut rng_from_seed(4));
        let constant = Channel::ebt(&EbtSpec { states: vec![sigma.clone()], povm: vec![identity(2)] }).unwrap();
        let rho = random_density(2, &mut rng_from_seed(5));
        assert!((constant.apply(&rho).unwrap() - &sigma).norm() < 1e-12);

        let tetra = Channel::ebt(&tetrahedral_ebt()).unwrap();
        let dep = Channel::depolarizing(2, 1.0 / 3.0).unwrap();
        assert!((&tetra.choi().matrix - &dep.choi().matrix).norm() < 1e-9);

        let bad = EbtSpec { states: vec![diag(&[1.0, 0.0])], povm: vec![diag(&[1.0, 0.5])] };
        assert!(matches!(Channel::ebt(&bad), Err(Error::BadPovm { .. })));
    }

    #[test]
    fn random_cpt_examples() {
        let u = Channel::random_cpt(2, 2, 1, 3).unwrap();
        assert_eq!(u.kraus().len(), 1);
        assert!((u.kraus()[0].adjoint() * &u.kraus()[0] - identity(2)).norm() < 1e-12);
        assert!(Channel::random_cpt(2, 2, 4, 7).unwrap().is_tp());
        let a = Channel::random_cpt(3, 2, 2, 9).unwrap();
        let b = Channel::random_cpt(3, 2, 2, 9).unwrap();
        assert_eq!(a.kraus(), b.kraus());
        assert!(matches!(Channel::random_cpt(5, 2, 2, 0), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn tensor_examples() {
        let ii = Channel::identity(2).tensor(&Channel::identity(2));
        assert_eq!(ii.d_in(), 4);
        assert!((&ii.kraus()[0] - identity(4)).norm() < 1e-15);

        let dep = Channel::depolarizing(2, 0.4).unwrap();
        let pair = dep.tensor(&Channel::identity(3));
        let rho = random_density(2, &mut rng_from_seed(1));
        let sigma = random_density(3, &mut rng_from_seed(2));
        let got = pair.apply(&kron(&rho, &sigma)).unwrap();
        assert!((got - kron(&dep.apply(&rho).unwrap(), &sigma)).norm() < 1e-12);

        let four = Channel::depolarizing(2, 0.2).unwrap();
        let three = Channel::random_cpt(2, 2, 3, 1).unwrap();
        assert_eq!(four.kraus().len(), 4);
        assert_eq!(four.tensor(&three).kraus().len(), 12);
    }

    #[test]
    fn stinespring_examples() {
        let v = Channel::identity(2).stinespring().unwrap();
        assert_eq!(v.d_env, 1);
        assert!((&v.v - identity(2)).norm() < 1e-15);

        let noisy = Channel::depolarizing(2, 0.0).unwrap().stinespring().unwrap();
        let rho = random_density(2, &mut rng_from_seed(8));
        assert!((noisy.apply(&rho).unwrap() - identity(2).scale(0.5)).norm() < 1e-12);

        let ch = Channel::random_cpt(2, 3, 2, 5).unwrap();
        let iso = ch.stinespring().unwrap();
        assert!((iso.v.adjoint() * &iso.v - identity(2)).norm() < 1e-12);
        let mut rng = rng_from_seed(77);
        for _ in 0..50 {
            let rho = random_density(2, &mut rng);
            assert!((iso.apply(&rho).unwrap() - ch.apply(&rho).unwrap()).norm() <= 1e-9);
        }

        let non_tp = Channel::from_kraus(2, 2, vec![identity(2).scale(0.5)]).unwrap();
        assert!(matches!(non_tp.stinespring(), Err(Error::NotTp { .. })));
    }

    #[test]
    fn complementary_examples() {
        let u = Channel::random_cpt(2, 2, 1, 6).unwrap();
        let comp = u.complementary().unwrap();
        assert_eq!(comp.d_out(), 1);
        let rho = random_density(2, &mut rng_from_seed(1));
        assert_abs_diff_eq!(comp.apply(&rho).unwrap()[(0, 0)].re, 1.0, epsilon = 1e-12);

        // exchange entropy: S(Φ^C(I/2)) = S(Choi / d)
        let noisy = Channel::completely_noisy(2);
        let comp = noisy.complementary().unwrap();
        assert!(comp.is_tp());
        let s_env = linalg::von_neumann_entropy(&comp.apply(&identity(2).scale(0.5)).unwrap()).unwrap();
        let s_choi = linalg::von_neumann_entropy(&noisy.choi().matrix.scale(0.5)).unwrap();
        assert_abs_diff_eq!(s_env, s_choi, epsilon = 1e-10);

        let ch = Channel::random_cpt(2, 2, 3, 12).unwrap();
        let iso = ch.stinespring().unwrap();
        let comp = ch.complementary().unwrap();
        let rho = random_density(2, &mut rng_from_seed(2));
        assert!((iso.environment(&rho).unwrap() - comp.apply(&rho).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn builtin_grammar() {
        let ch = Channel::from_builtin("identity:d=3").unwrap();
        assert_eq!((ch.d_in(), ch.kraus().len()), (3, 1));
        assert!(Channel::from_builtin("depolarizing:d=2,mu=0.5").is_ok());
        assert!(Channel::from_builtin("werner-holevo:d=3").is_ok());
        assert!(Channel::from_builtin("noisy:d=2").is_ok());
        assert!(Channel::from_builtin("nonunital:lambda=0.6,tau=0.3").is_ok());
        assert!(matches!(
            Channel::from_builtin("depolarizing:d=2,mu=1.5"),
            Err(Error::NotCp { .. })
        ));
        assert!(matches!(Channel::from_builtin("bogus:d=2"), Err(Error::BadName(_))));
        assert!(matches!(Channel::from_builtin("identity:d=2.5"), Err(Error::Parse(_))));
        assert!(matches!(Channel::from_builtin("identity:n=2"), Err(Error::Parse(_))));
    }

    #[test]
    fn spec_round_trip() {
        let ch = Channel::werner_holevo(3).unwrap();
        let json = serde_json::to_string(&ch.to_spec()).unwrap();
        let back = Channel::from_spec(&serde_json::from_str(&json).unwrap()).unwrap();
        for (a, b) in ch.kraus().iter().zip(back.kraus()) {
            assert!((a - b).camax() <= 1e-15);
        }
    }
}
