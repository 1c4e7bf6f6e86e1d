// SPDX-License-Identifier: Apache-2.0

//! State-vector simulation of small spin chains.
//!
//! Two model builders share one matrix-free operator
//! `H = −Jg Σ σˣᵢ + D`, with `D` diagonal in the `σᶻ` basis:
//!
//! * the long-range Ising chain,
//!   `D = s_p J Σ_{j>i} r_{ij}^{−α} σᶻᵢ σᶻⱼ` (open distances by default) with `s_p = +1` for
//!   antiferromagnetic (`p = 0`) and `−1` for ferromagnetic (`p = 1`) couplings;
//! * the periodic nearest-neighbour ring `D = −J Σ λᵢ σᶻᵢ σᶻᵢ₊₁`, used as a
//!   brute-force oracle for the free-fermion solvers.
//!
//! Basis index bit `i` set means spin `i` points down (`σᶻᵢ = −1`).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::ControlProtocol;
use crate::error::{Error, Result};
use crate::ode::{integrate, Tolerance};
use crate::quench::try_par_map;
use crate::spectral::{gap_profile, ModelSpec};

pub const MAX_SITES: usize = 14;
/// Residual `‖Hψ − Eψ‖` accepted from the eigensolver.
pub const EIGEN_RESIDUAL: f64 = 1e-10;
const KRYLOV_DIM: usize = 120;
const MAX_RESTARTS: usize = 200;
const EXACT_GAP_POINTS: usize = 21;

/// How pair distances are measured in the long-range chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainBoundary {
    /// `r = |i − j|`.
    #[default]
    Open,
    /// `r = min(|i − j|, N − |i − j|)`; at large `α` this is the periodic ring.
    MinImage,
}

impl ChainBoundary {
    pub fn distance(self, n: usize, i: usize, k: usize) -> usize {
        let d = i.abs_diff(k);
        match self {
            Self::Open => d,
            Self::MinImage => d.min(n - d),
        }
    }
}

/// Long-range transverse-field Ising model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRangeIsingSpec {
    pub n: usize,
    #[serde(default = "one")]
    pub j: f64,
    pub alpha: f64,
    /// 0 antiferromagnetic, 1 ferromagnetic.
    #[serde(default)]
    pub p: u8,
    /// `λ` of the reference model used to build the corrected control.
    #[serde(default = "one")]
    pub lambda_correction: f64,
    #[serde(default)]
    pub boundary: ChainBoundary,
}

fn one() -> f64 {
    1.0
}

impl LongRangeIsingSpec {
    pub fn new(n: usize, alpha: f64, p: u8) -> Self {
        Self {
            n,
            j: 1.0,
            alpha,
            p,
            lambda_correction: 1.0,
            boundary: ChainBoundary::Open,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_sites(self.n)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be non-negative, got {}", self.alpha),
            ));
        }
        if self.p > 1 {
            return Err(Error::invalid(
                "p",
                format!("must be 0 or 1, got {}", self.p),
            ));
        }
        check_energy(self.j)?;
        if !(self.lambda_correction > 0.0 && self.lambda_correction.is_finite()) {
            return Err(Error::invalid("lambda_correction", "must be positive"));
        }
        Ok(())
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewParticles(n));
    }
    if n > MAX_SITES {
        return Err(Error::invalid(
            "N",
            format!("dense simulation supports N <= {MAX_SITES}, got {n}"),
        ));
    }
    Ok(())
}

fn check_energy(j: f64) -> Result<()> {
    if j > 0.0 && j.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("J", format!("must be positive, got {j}")))
    }
}

#[inline]
fn spin(x: usize, i: usize) -> f64 {
    if x >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Matrix-free `H(g) = −Jg Σ σˣᵢ + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    pub n: usize,
    pub j: f64,
    diagonal: Vec<f64>,
}

impl SpinOperator {
    pub fn long_range(spec: &LongRangeIsingSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let sign = if spec.p == 0 { 1.0 } else { -1.0 };
        let mut pairs = Vec::new();
        for i in 0..n {
            for k in i + 1..n {
                let r = spec.boundary.distance(n, i, k) as f64;
                pairs.push((i, k, sign * spec.j * r.powf(-spec.alpha)));
            }
        }
        Ok(Self::from_pairs(n, spec.j, &pairs))
    }

    /// Periodic ring `−J(g Σ σˣ + Σ λᵢ σᶻᵢ σᶻᵢ₊₁)`.
    pub fn periodic_tfim(j: f64, lambdas: &[f64]) -> Result<Self> {
        let n = lambdas.len();
        check_sites(n)?;
        check_energy(j)?;
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, -j * lambdas[i])).collect();
        Ok(Self::from_pairs(n, j, &pairs))
    }

    fn from_pairs(n: usize, j: f64, pairs: &[(usize, usize, f64)]) -> Self {
        let diagonal = (0..1usize << n)
            .map(|x| {
                pairs
                    .iter()
                    .map(|&(a, b, c)| c * spin(x, a) * spin(x, b))
                    .sum()
            })
            .collect();
        Self { n, j, diagonal }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `out = H(g) x` for real vectors.
    pub fn apply(&self, g: f64, x: &[f64], out: &mut [f64]) {
        let field = self.j * g;
        for (s, o) in out.iter_mut().enumerate() {
            let flips: f64 = (0..self.n).map(|i| x[s ^ (1 << i)]).sum();
            *o = self.diagonal[s] * x[s] - field * flips;
        }
    }

    /// `out = H(g) x` for complex vectors.
    pub fn apply_complex(&self, g: f64, x: &[Complex64], out: &mut [Complex64]) {
        let field = self.j * g;
        for (s, o) in out.iter_mut().enumerate() {
            let flips: Complex64 = (0..self.n).map(|i| x[s ^ (1 << i)]).sum();
            *o = x[s] * self.diagonal[s] - flips * field;
        }
    }

    /// Explicit matrix, for small systems and tests.
    pub fn to_dense(&self, g: f64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for c in 0..dim {
            e[c] = 1.0;
            self.apply(g, &e, &mut col);
            m.column_mut(c).copy_from_slice(&col);
            e[c] = 0.0;
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(a: &mut [f64]) -> f64 {
    let norm = dot(a, a).sqrt();
    if norm > 0.0 {
        a.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// An eigenpair with its explicit residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Lowest eigenpair orthogonal to `deflate`, by restarted Lanczos with full
/// reorthogonalization from `start`.
pub fn lanczos_lowest(
    op: &SpinOperator,
    g: f64,
    start: &[f64],
    deflate: &[Vec<f64>],
) -> Result<Eigenpair> {
    let dim = op.dim();
    let m_max = KRYLOV_DIM.min(dim - deflate.len());
    let mut x = start.to_vec();
    let mut hx = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        project_out(&mut x, deflate);
        if normalize(&mut x) == 0.0 {
            return Err(Error::invalid(
                "start",
                "start vector lies in the deflated space",
            ));
        }
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        loop {
            let v = basis.last().unwrap();
            op.apply(g, v, &mut w);
            alphas.push(dot(v, &w));
            project_out(&mut w, deflate);
            project_out(&mut w, &basis);
            let beta = normalize(&mut w);
            if basis.len() == m_max || beta < 1e-13 * alphas.last().unwrap().abs().max(1.0) {
                break;
            }
            betas.push(beta);
            basis.push(w.clone());
        }
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let imin = eig.eigenvalues.imin();
        let y = eig.eigenvectors.column(imin);
        x.iter_mut().for_each(|v| *v = 0.0);
        for (coef, b) in y.iter().zip(&basis) {
            x.iter_mut().zip(b).for_each(|(v, bb)| *v += coef * bb);
        }
        project_out(&mut x, deflate);
        normalize(&mut x);
        op.apply(g, &x, &mut hx);
        let energy = dot(&x, &hx);
        residual = hx
            .iter()
            .zip(&x)
            .map(|(h, v)| (h - energy * v).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < EIGEN_RESIDUAL {
            return Ok(Eigenpair {
                energy,
                vector: x,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_RESTARTS,
        residual,
    })
}

fn uniform_start(dim: usize) -> Vec<f64> {
    vec![1.0 / (dim as f64).sqrt(); dim]
}

/// Ground state from the uniform superposition (symmetric under global spin flip).
pub fn dense_ground_state(op: &SpinOperator, g: f64) -> Result<Eigenpair> {
    lanczos_lowest(op, g, &uniform_start(op.dim()), &[])
}

/// Two lowest levels of the sector reachable from the uniform superposition,
/// which is even under global spin flip and under reflection.
pub fn two_lowest(op: &SpinOperator, g: f64) -> Result<(Eigenpair, Eigenpair)> {
    let ground = dense_ground_state(op, g)?;
    // depends on x only through the magnetization, so it stays in the same sector
    let half = op.n as f64 / 2.0;
    let start: Vec<f64> = (0..op.dim())
        .map(|x| 1.0 + (x.count_ones() as f64 - half).powi(2))
        .collect();
    let second = lanczos_lowest(op, g, &start, std::slice::from_ref(&ground.vector))?;
    Ok((ground, second))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn from_real(v: &[f64]) -> Self {
        Self {
            amplitudes: v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `|⟨φ|ψ⟩|²` for a real `φ`.
    pub fn overlap_real(&self, phi: &[f64]) -> f64 {
        let s: Complex64 = self.amplitudes.iter().zip(phi).map(|(a, &p)| a * p).sum();
        s.norm_sqr()
    }

    /// `(1/N) Σ ⟨(1 − σᶻᵢ σᶻᵢ₊₁)/2⟩` around the ring.
    pub fn kink_density(&self, n: usize) -> f64 {
        let total: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(x, a)| {
                let kinks = (0..n)
                    .filter(|&i| spin(x, i) != spin(x, (i + 1) % n))
                    .count();
                a.norm_sqr() * kinks as f64
            })
            .sum();
        total / n as f64
    }
}

/// Integrates `i ψ̇ = H(g(t)) ψ` from `start`.
pub fn evolve_dense(
    op: &SpinOperator,
    protocol: &ControlProtocol,
    start: &DenseState,
    tol: Tolerance,
) -> Result<DenseState> {
    let mut psi = start.amplitudes.clone();
    let minus_i = Complex64::new(0.0, -1.0);
    integrate(
        |t, y: &[Complex64], dy: &mut [Complex64]| {
            op.apply_complex(protocol.eval(t), y, dy);
            dy.iter_mut().for_each(|d| *d *= minus_i);
        },
        0.0,
        protocol.tau,
        &mut psi,
        tol,
    )?;
    Ok(DenseState { amplitudes: psi })
}

/// Outcome of one dense quench.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseQuench {
    pub state: DenseState,
    pub fidelity: f64,
    /// Weight on the two lowest final levels.
    pub subspace_overlap: f64,
    pub norm_drift: f64,
}

/// Prepares the ground state at `g0`, evolves, and projects on the lowest levels at `g1`.
pub fn dense_quench(
    op: &SpinOperator,
    protocol: &ControlProtocol,
    tol: Tolerance,
) -> Result<DenseQuench> {
    let start = DenseState::from_real(&dense_ground_state(op, protocol.g0)?.vector);
    let end = evolve_dense(op, protocol, &start, tol)?;
    let (ground, second) = two_lowest(op, protocol.g1)?;
    let fidelity = end.overlap_real(&ground.vector);
    let subspace_overlap = fidelity + end.overlap_real(&second.vector);
    let norm_drift = (end.norm() - 1.0).abs();
    Ok(DenseQuench {
        state: end,
        fidelity,
        subspace_overlap,
        norm_drift,
    })
}

/// Which gap sets `τ_QSL` for the long-range model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauQslMode {
    /// Minimum gap `4Jλ sin(π/N)` of the reference chain.
    #[default]
    Reference,
    /// Minimum of the exact lowest gap over a grid of `g` values.
    Exact,
}

/// `π / Δ` of the reference chain with coupling `λ` along `g0 → g1`.
pub fn reference_tau_qsl(n: usize, j: f64, lambda: f64, g0: f64, g1: f64) -> Result<f64> {
    let modes = ModelSpec::ref_tfim(n, j, lambda).decompose()?;
    Ok(gap_profile(&modes, g0, g1)?.tau_qsl)
}

/// `π / Δ` from the exact lowest gap, sampled on an even grid of `g`.
pub fn exact_tau_qsl(op: &SpinOperator, g0: f64, g1: f64) -> Result<f64> {
    let gaps = (0..EXACT_GAP_POINTS)
        .map(|i| {
            let g = g0 + (g1 - g0) * i as f64 / (EXACT_GAP_POINTS - 1) as f64;
            two_lowest(op, g).map(|(a, b)| b.energy - a.energy)
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = gaps.into_iter().fold(f64::INFINITY, f64::min);
    if !(delta > 0.0) {
        return Err(Error::DegenerateGap { gap: delta });
    }
    Ok(std::f64::consts::PI / delta)
}

/// Sweep over `α` for the long-range chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSweepConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub p: u8,
    pub alphas: Vec<f64>,
    /// `λ(α)` per entry of `alphas`; missing entries run uncorrected.
    #[serde(default)]
    pub lambda_corrections: Vec<Option<f64>>,
    pub g0: f64,
    pub g1: f64,
    pub tau_over_qsl: f64,
    #[serde(default = "default_k")]
    pub k_order: usize,
    #[serde(default)]
    pub tau_qsl_mode: TauQslMode,
    #[serde(default)]
    pub boundary: ChainBoundary,
    #[serde(default)]
    pub tolerance: Tolerance,
}

fn default_k() -> usize {
    3
}

/// One CSV row of an `α` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrRow {
    pub alpha: f64,
    pub p: u8,
    pub lambda_correction: f64,
    pub tau_over_qsl: f64,
    pub tau_qsl: f64,
    pub protocol: String,
    pub fidelity: f64,
    pub infidelity: f64,
    pub subspace_overlap: f64,
}

/// For each `α`: the uncorrected invariant control, the `λ`-corrected one
/// when `λ(α)` is given, and the linear ramp, all at the same `τ`.
pub fn run_lr_ising_sweep(config: &LrSweepConfig) -> Result<Vec<LrRow>> {
    let jobs: Vec<(usize, &str)> = config
        .alphas
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            let mut v = vec![(i, "invariant"), (i, "linear")];
            if config
                .lambda_corrections
                .get(i)
                .copied()
                .flatten()
                .is_some()
            {
                v.insert(1, (i, "invariant_corrected"));
            }
            v
        })
        .collect();
    try_par_map(&jobs, |_, &(i, label)| {
        let alpha = config.alphas[i];
        let lambda = config
            .lambda_corrections
            .get(i)
            .copied()
            .flatten()
            .unwrap_or(1.0);
        let spec = LongRangeIsingSpec {
            n: config.n,
            j: config.j,
            alpha,
            p: config.p,
            lambda_correction: lambda,
            boundary: config.boundary,
        };
        let op = SpinOperator::long_range(&spec)?;
        let tau_qsl = match config.tau_qsl_mode {
            TauQslMode::Reference => {
                reference_tau_qsl(config.n, config.j, lambda, config.g0, config.g1)?
            }
            TauQslMode::Exact => exact_tau_qsl(&op, config.g0, config.g1)?,
        };
        let tau = config.tau_over_qsl * tau_qsl;
        let protocol = match label {
            "linear" => ControlProtocol::linear(config.g0, config.g1, tau)?,
            _ => {
                let lam = if label == "invariant" { 1.0 } else { lambda };
                let mode = ModelSpec::ref_tfim(config.n, config.j, lam).lowest_mode()?;
                ControlProtocol::invariant(&mode, config.g0, config.g1, tau, config.k_order, 1.0)?
            }
        };
        let q = dense_quench(&op, &protocol, config.tolerance)?;
        Ok(LrRow {
            alpha,
            p: config.p,
            lambda_correction: lambda,
            tau_over_qsl: config.tau_over_qsl,
            tau_qsl,
            protocol: label.to_string(),
            fidelity: q.fidelity,
            infidelity: 1.0 - q.fidelity,
            subspace_overlap: q.subspace_overlap,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_chain(n: usize, site_ops: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
        let id = DMatrix::<f64>::identity(2, 2);
        // site 0 is the least significant bit
        (0..n)
            .rev()
            .fold(DMatrix::from_element(1, 1, 1.0), |acc, site| {
                let op = site_ops
                    .iter()
                    .find(|(s, _)| *s == site)
                    .map(|(_, m)| m.clone())
                    .unwrap_or(id.clone());
                acc.kronecker(&op)
            })
    }

    fn kron_hamiltonian(n: usize, j: f64, g: f64, pairs: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let mut h = DMatrix::zeros(1 << n, 1 << n);
        for i in 0..n {
            h -= pauli_chain(n, &[(i, sx.clone())]) * (j * g);
        }
        for &(a, b, c) in pairs {
            h += pauli_chain(n, &[(a, sz.clone()), (b, sz.clone())]) * c;
        }
        h
    }

    fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn two_sites_classical() {
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(2, 1.7, 1)).unwrap();
        assert_eq!(sorted_eigs(op.to_dense(0.0)), vec![-1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_sites_transverse() {
        // −J(σˣ₁ + σˣ₂ + σᶻ₁σᶻ₂) has spectrum {−√5, −1, 1, √5}
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(2, 3.0, 1)).unwrap();
        let e = sorted_eigs(op.to_dense(1.0));
        let expected = [-5f64.sqrt(), -1.0, 1.0, 5f64.sqrt()];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let kron = kron_hamiltonian(2, 1.0, 1.0, &[(0, 1, -1.0)]);
        assert!((op.to_dense(1.0) - kron).abs().max() < 1e-12);
        let gs = dense_ground_state(&op, 1.0).unwrap();
        assert!((gs.energy + 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn min_image_large_alpha_is_the_ring() {
        let n = 6;
        let mut spec = LongRangeIsingSpec::new(n, 400.0, 1);
        spec.boundary = ChainBoundary::MinImage;
        let op = SpinOperator::long_range(&spec).unwrap();
        let ring = SpinOperator::periodic_tfim(1.0, &vec![1.0; n]).unwrap();
        let diff = op
            .diagonal()
            .iter()
            .zip(ring.diagonal())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert_eq!(ChainBoundary::MinImage.distance(6, 0, 5), 1);
        assert_eq!(ChainBoundary::Open.distance(6, 0, 5), 5);
    }

    #[test]
    fn matrix_free_matches_kronecker_build() {
        for (n, alpha, p) in [(4, 1.5, 0u8), (5, 0.0, 1), (6, 2.5, 0)] {
            let spec = LongRangeIsingSpec::new(n, alpha, p);
            let op = SpinOperator::long_range(&spec).unwrap();
            let sign = if p == 0 { 1.0 } else { -1.0 };
            let pairs: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |k| (i, k, sign * ((k - i) as f64).powf(-alpha))))
                .collect();
            let diff = (op.to_dense(0.8) - kron_hamiltonian(n, 1.0, 0.8, &pairs))
                .abs()
                .max();
            assert!(diff < 1e-12, "n={n}: {diff}");
        }
        let lambdas = [1.1, 0.9, 1.05, 0.95, 1.0];
        let ring = SpinOperator::periodic_tfim(1.0, &lambdas).unwrap();
        let pairs: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5, -lambdas[i])).collect();
        assert!(
            (ring.to_dense(0.4) - kron_hamiltonian(5, 1.0, 0.4, &pairs))
                .abs()
                .max()
                < 1e-12
        );
    }

    #[test]
    fn hermitian_on_random_vectors() {
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(8, 2.0, 0)).unwrap();
        let dim = op.dim();
        let phi: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let psi: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 * 0.73).cos(), (i as f64 * 0.29).sin()))
            .collect();
        let (mut hphi, mut hpsi) = (
            vec![Complex64::default(); dim],
            vec![Complex64::default(); dim],
        );
        op.apply_complex(1.3, &phi, &mut hphi);
        op.apply_complex(1.3, &psi, &mut hpsi);
        let a: Complex64 = phi.iter().zip(&hpsi).map(|(x, y)| x.conj() * y).sum();
        let b: Complex64 = psi.iter().zip(&hphi).map(|(x, y)| x.conj() * y).sum();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn large_alpha_is_open_nearest_neighbour() {
        let n = 6;
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(n, 400.0, 1)).unwrap();
        assert!(2f64.powf(-400.0) < 1e-12);
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1, -1.0)).collect();
        let a = sorted_eigs(op.to_dense(0.9));
        let b = sorted_eigs(kron_hamiltonian(n, 1.0, 0.9, &pairs));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_too_many_sites() {
        assert!(SpinOperator::long_range(&LongRangeIsingSpec::new(15, 2.0, 0)).is_err());
        assert!(SpinOperator::long_range(&LongRangeIsingSpec::new(6, 2.0, 2)).is_err());
    }

    #[test]
    fn lanczos_matches_dense_eigensolve() {
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(8, 1.5, 0)).unwrap();
        for g in [0.05, 0.6, 3.0] {
            let gs = dense_ground_state(&op, g).unwrap();
            let exact = sorted_eigs(op.to_dense(g))[0];
            assert!(
                (gs.energy - exact).abs() < 1e-10,
                "g={g}: {} vs {exact}",
                gs.energy
            );
            assert!(gs.residual < EIGEN_RESIDUAL);
        }
    }

    #[test]
    fn zero_field_ground_state_is_cat() {
        let op = SpinOperator::periodic_tfim(1.0, &[1.0; 6]).unwrap();
        let gs = dense_ground_state(&op, 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((gs.vector[0].abs() - r).abs() < 1e-10);
        assert!((gs.vector[63].abs() - r).abs() < 1e-10);
        assert!((gs.energy + 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_stationary() {
        let op = SpinOperator::long_range(&LongRangeIsingSpec::new(6, 2.0, 0)).unwrap();
        let p = ControlProtocol::linear(1.2, 1.2, 5.0).unwrap();
        let q = dense_quench(&op, &p, Tolerance::default()).unwrap();
        assert!((q.fidelity - 1.0).abs() < 1e-8);
        assert!(q.norm_drift < 1e-8);
    }

    #[test]
    fn reference_tau_qsl_formula() {
        let n = 12;
        let tau = reference_tau_qsl(n, 1.0, 0.8, 10.0, 0.01).unwrap();
        let expected = std::f64::consts::PI / (4.0 * 0.8 * (std::f64::consts::PI / n as f64).sin());
        assert!((tau - expected).abs() < 1e-12 * expected);
    }
}
