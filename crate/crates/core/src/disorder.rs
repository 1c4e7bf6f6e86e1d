// SPDX-License-Identifier: Apache-2.0

//! Coupling-disordered transverse-field Ising ring in real space.
//!
//! The Jordan-Wigner fermions of
//! `H = −J (g Σ σˣᵢ + Σ λᵢ σᶻᵢ σᶻᵢ₊₁)` in the even-parity sector form the
//! quadratic Hamiltonian `Ψ† H_f Ψ`, `H_f = [[A, B], [−B, −A]]`, with
//! antiperiodic corner terms. The positive-energy eigenvectors `(u; v)` of
//! `H_f` evolve as `Ẇ = −2i H_f(t) W`.
//!
//! With `M = (v − u)(u† + v†)` the bond correlators are
//! `⟨σᶻᵢ σᶻᵢ₊₁⟩ = M_{i,i+1}` for `i < N` and `⟨σᶻ_N σᶻ₁⟩ = −M_{N,1}`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::ControlProtocol;
use crate::error::{Error, Result};
use crate::ode::{integrate_observed, Tolerance};
use crate::quench::try_par_map;

/// Largest tolerated `‖u†u + v†v − 𝕀‖_max` during an evolution.
pub const ISOMETRY_LIMIT: f64 = 1e-6;
pub const IMAGINARY_LIMIT: f64 = 1e-8;
/// Smallest `|ε|` of `H_f`, in units of `J`, that still separates the two halves of the spectrum.
pub const BDG_GAP_FLOOR: f64 = 1e-12;
pub const DEFAULT_REALIZATIONS: usize = 10;
const ISOMETRY_CHECK_EVERY: usize = 256;

/// Site couplings `λᵢ ∈ [1 − Λ, 1 + Λ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub lambdas: Vec<f64>,
    pub seed: u64,
    #[serde(rename = "Lambda")]
    pub lambda_width: f64,
}

/// Independent uniform couplings from a ChaCha stream keyed by `seed`.
pub fn sample_disorder(n: usize, lambda_width: f64, seed: u64) -> Result<DisorderRealization> {
    if !(0.0..1.0).contains(&lambda_width) {
        return Err(Error::invalid(
            "Lambda",
            format!("must lie in [0, 1), got {lambda_width}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambdas = (0..n)
        .map(|_| 1.0 - lambda_width + 2.0 * lambda_width * rng.random::<f64>())
        .collect();
    Ok(DisorderRealization {
        lambdas,
        seed,
        lambda_width,
    })
}

/// Coupling data of `H_f`; the control `g` enters only the diagonal of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdGSystem {
    pub j: f64,
    pub lambdas: Vec<f64>,
}

impl BdGSystem {
    pub fn new(j: f64, lambdas: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n < 4 {
            return Err(Error::TooFewParticles(n));
        }
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::invalid("J", format!("must be positive, got {j}")));
        }
        Ok(Self { j, lambdas })
    }

    pub fn uniform(n: usize, j: f64) -> Result<Self> {
        Self::new(j, vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Bond amplitude `−Jλᵢ/2` between `i` and `i + 1`, sign-flipped on the wrap-around bond.
    #[inline]
    fn bond(&self, i: usize) -> f64 {
        let n = self.n();
        let t = -0.5 * self.j * self.lambdas[i];
        if i == n - 1 {
            -t
        } else {
            t
        }
    }

    pub fn a_matrix(&self, g: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::from_diagonal_element(n, n, self.j * g);
        for i in 0..n {
            let k = (i + 1) % n;
            a[(i, k)] = self.bond(i);
            a[(k, i)] = self.bond(i);
        }
        a
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            let k = (i + 1) % n;
            b[(i, k)] = self.bond(i);
            b[(k, i)] = -self.bond(i);
        }
        b
    }

    pub fn h_f(&self, g: f64) -> DMatrix<f64> {
        let n = self.n();
        let (a, b) = (self.a_matrix(g), self.b_matrix());
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&a);
        h.view_mut((0, n), (n, n)).copy_from(&b);
        h.view_mut((n, 0), (n, n)).copy_from(&(-&b));
        h.view_mut((n, n), (n, n)).copy_from(&(-&a));
        h
    }

    /// `out = −2i H_f(g) W` for one column `W = (u; v)`, using the sparsity.
    #[inline]
    fn rhs_column(&self, g: f64, w: &[Complex64], out: &mut [Complex64]) {
        let n = self.n();
        let (u, v) = w.split_at(n);
        let (du, dv) = out.split_at_mut(n);
        let diag = self.j * g;
        let minus_2i = Complex64::new(0.0, -2.0);
        for i in 0..n {
            let next = (i + 1) % n;
            let prev = (i + n - 1) % n;
            let (bn, bp) = (self.bond(i), self.bond(prev));
            // A u + B v and A v + B u; B has +bond above the diagonal, −bond below
            let au = u[next] * bn + u[prev] * bp + u[i] * diag;
            let av = v[next] * bn + v[prev] * bp + v[i] * diag;
            let bv = v[next] * bn - v[prev] * bp;
            let bu = u[next] * bn - u[prev] * bp;
            du[i] = minus_2i * (au + bv);
            dv[i] = -minus_2i * (av + bu);
        }
    }
}

/// Bogoliubov coefficients, `N` columns of the `2N`-vector `(u; v)`, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BdGState {
    pub n: usize,
    pub w: Vec<Complex64>,
}

impl BdGState {
    #[inline]
    pub fn u(&self, i: usize, mu: usize) -> Complex64 {
        self.w[mu * 2 * self.n + i]
    }

    #[inline]
    pub fn v(&self, i: usize, mu: usize) -> Complex64 {
        self.w[mu * 2 * self.n + self.n + i]
    }

    /// `max |(u†u + v†v − 𝕀)_{μν}|`.
    pub fn isometry_drift(&self) -> f64 {
        isometry_drift(self.n, &self.w)
    }

    /// `[(v − u)(u† + v†)]_{i,j}`.
    pub fn kink_matrix_element(&self, i: usize, j: usize) -> Complex64 {
        (0..self.n)
            .map(|mu| (self.v(i, mu) - self.u(i, mu)) * (self.u(j, mu) + self.v(j, mu)).conj())
            .sum()
    }

    /// `⟨σᶻᵢ σᶻᵢ₊₁⟩` around the ring.
    pub fn bond_correlators(&self) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                if i + 1 < n {
                    self.kink_matrix_element(i, i + 1)
                } else {
                    -self.kink_matrix_element(n - 1, 0)
                }
            })
            .collect()
    }
}

fn isometry_drift(n: usize, w: &[Complex64]) -> f64 {
    let col = |mu: usize| &w[mu * 2 * n..(mu + 1) * 2 * n];
    let mut worst = 0.0f64;
    for mu in 0..n {
        for nu in mu..n {
            let dot: Complex64 = col(mu).iter().zip(col(nu)).map(|(a, b)| a.conj() * b).sum();
            let target = if mu == nu { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Positive-energy eigenvectors of `H_f(g)` and the spectrum in ascending order.
pub fn initial_bdg(system: &BdGSystem, g: f64) -> Result<(BdGState, Vec<f64>)> {
    let n = system.n();
    let eig = SymmetricEigen::new(system.h_f(g));
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let gap = spectrum[n].min(-spectrum[n - 1]);
    if gap < BDG_GAP_FLOOR * system.j {
        return Err(Error::DegenerateBdG { gap });
    }
    let mut w = Vec::with_capacity(2 * n * n);
    for &idx in &order[n..] {
        w.extend(
            eig.eigenvectors
                .column(idx)
                .iter()
                .map(|&x| Complex64::new(x, 0.0)),
        );
    }
    Ok((BdGState { n, w }, spectrum))
}

/// Ground-state energy `−Σ ε₊` of the even-parity ring.
pub fn ground_energy(spectrum: &[f64]) -> f64 {
    let n = spectrum.len() / 2;
    -spectrum[n..].iter().sum::<f64>()
}

/// Integrates `u̇ = −2i(Au + Bv)`, `v̇ = 2i(Av + Bu)` over `[0, τ]`.
pub fn evolve_bdg(
    state: &BdGState,
    system: &BdGSystem,
    protocol: &ControlProtocol,
    tol: Tolerance,
) -> Result<BdGState> {
    let n = system.n();
    if state.n != n {
        return Err(Error::invalid("state", "size does not match the system"));
    }
    let mut w = state.w.clone();
    let mut accepted = 0usize;
    integrate_observed(
        |t, y: &[Complex64], dy: &mut [Complex64]| {
            let g = protocol.eval(t);
            for (col, out) in y.chunks_exact(2 * n).zip(dy.chunks_exact_mut(2 * n)) {
                system.rhs_column(g, col, out);
            }
        },
        0.0,
        protocol.tau,
        &mut w,
        tol,
        |_, y| {
            accepted += 1;
            if accepted.is_multiple_of(ISOMETRY_CHECK_EVERY) {
                check_isometry(n, y)?;
            }
            Ok(())
        },
    )?;
    check_isometry(n, &w)?;
    Ok(BdGState { n, w })
}

fn check_isometry(n: usize, w: &[Complex64]) -> Result<()> {
    let drift = isometry_drift(n, w);
    if drift > ISOMETRY_LIMIT {
        Err(Error::IsometryDrift { drift })
    } else {
        Ok(())
    }
}

/// Kink density `(1/N) Σ ⟨(1 − σᶻᵢ σᶻᵢ₊₁)/2⟩`.
pub fn defect_density_disordered(state: &BdGState) -> Result<f64> {
    let total: Complex64 = state
        .bond_correlators()
        .into_iter()
        .map(|c| 0.5 * (Complex64::new(1.0, 0.0) - c))
        .sum();
    let nd = total / state.n as f64;
    if nd.im.abs() > IMAGINARY_LIMIT {
        return Err(Error::ImaginaryResidue { imag: nd.im });
    }
    Ok(nd.re)
}

/// One disordered quench: sample, prepare at `g0`, evolve, measure.
pub fn defect_density_for(
    n: usize,
    j: f64,
    lambda_width: f64,
    seed: u64,
    protocol: &ControlProtocol,
    tol: Tolerance,
) -> Result<f64> {
    let realization = sample_disorder(n, lambda_width, seed)?;
    let system = BdGSystem::new(j, realization.lambdas)?;
    let (start, _) = initial_bdg(&system, protocol.g0)?;
    let end = evolve_bdg(&start, &system, protocol, tol)?;
    defect_density_disordered(&end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Sample standard deviation (zero for a single realization).
    pub stddev: f64,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
}

/// Realizations with seeds `base_seed + i`, run concurrently, reported in seed order.
pub fn disorder_ensemble(
    n: usize,
    j: f64,
    protocol: &ControlProtocol,
    lambda_width: f64,
    n_realizations: usize,
    base_seed: u64,
    tol: Tolerance,
) -> Result<EnsembleStats> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    let seeds: Vec<u64> = (0..n_realizations as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();
    let values = try_par_map(&seeds, |i, &seed| {
        defect_density_for(n, j, lambda_width, seed, protocol, tol).map_err(|e| {
            Error::RealizationFailed {
                index: i,
                source: Box::new(e),
            }
        })
    })?;
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let stddev = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleStats {
        mean,
        stddev,
        seeds,
        values,
    })
}

/// One CSV row per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRow {
    #[serde(rename = "Lambda")]
    pub lambda_width: f64,
    pub seed: u64,
    pub tau_over_qsl: f64,
    pub n_d: f64,
}

/// One aggregated CSV row per `(Λ, τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSummaryRow {
    #[serde(rename = "Lambda")]
    pub lambda_width: f64,
    pub tau_over_qsl: f64,
    pub mean: f64,
    pub stddev: f64,
    pub realizations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModelSpec;

    #[test]
    fn uniform_when_width_zero() {
        let r = sample_disorder(50, 0.0, 3).unwrap();
        assert!(r.lambdas.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn range_and_determinism() {
        let a = sample_disorder(50, 0.2, 42).unwrap();
        let b = sample_disorder(50, 0.2, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.lambdas.iter().all(|&l| (0.8..=1.2).contains(&l)));
        assert_ne!(a.lambdas, sample_disorder(50, 0.2, 43).unwrap().lambdas);
        assert!(sample_disorder(10, 1.0, 0).is_err());
        assert!(sample_disorder(10, -0.1, 0).is_err());
    }

    #[test]
    fn sample_mean_within_three_sigma() {
        let width = 0.3;
        let r = sample_disorder(10_000, width, 9).unwrap();
        let mean = r.lambdas.iter().sum::<f64>() / 1e4;
        let sigma = width / (3.0f64 * 1e4).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn block_structure() {
        let sys = BdGSystem::new(1.3, sample_disorder(7, 0.2, 1).unwrap().lambdas).unwrap();
        let (a, b) = (sys.a_matrix(0.7), sys.b_matrix());
        assert_eq!(a, a.transpose());
        assert_eq!(b, -b.transpose());
        assert_eq!(a[(6, 0)], 0.5 * 1.3 * sys.lambdas[6]);
        assert_eq!(a[(0, 1)], -0.5 * 1.3 * sys.lambdas[0]);
        assert_eq!(b[(0, 1)], -0.5 * 1.3 * sys.lambdas[0]);
        assert_eq!(b[(6, 0)], 0.5 * 1.3 * sys.lambdas[6]);
        for i in 0..7 {
            for k in 0..7 {
                let d = (i as isize - k as isize).rem_euclid(7);
                if !(d == 0 || d == 1 || d == 6) {
                    assert_eq!(a[(i, k)], 0.0);
                    assert_eq!(b[(i, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn sparse_rhs_matches_dense_product() {
        let sys = BdGSystem::new(1.0, sample_disorder(6, 0.3, 5).unwrap().lambdas).unwrap();
        let g = 0.8;
        let h = sys.h_f(g);
        let w: Vec<Complex64> = (0..12)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut out = vec![Complex64::default(); 12];
        sys.rhs_column(g, &w, &mut out);
        for r in 0..12 {
            let dense: Complex64 =
                (0..12).map(|c| w[c] * h[(r, c)]).sum::<Complex64>() * Complex64::new(0.0, -2.0);
            assert!((dense - out[r]).norm() < 1e-14);
        }
    }

    #[test]
    fn uniform_spectrum_matches_momentum_gaps() {
        let n = 8;
        let g = 0.6;
        let (state, spectrum) = initial_bdg(&BdGSystem::uniform(n, 1.0).unwrap(), g).unwrap();
        let modes = ModelSpec::tfim(n, 1.0).decompose().unwrap();
        let mut expected: Vec<f64> = modes.iter().flat_map(|m| [m.gap(g) / 4.0; 2]).collect();
        expected.sort_by(f64::total_cmp);
        for (e, x) in spectrum[n..].iter().zip(&expected) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
        assert!(spectrum.iter().sum::<f64>().abs() < 1e-10);
        assert!(state.isometry_drift() < 1e-12);
    }

    #[test]
    fn paramagnet_kinks_near_half() {
        let (state, _) = initial_bdg(&BdGSystem::uniform(8, 1.0).unwrap(), 10.0).unwrap();
        let nd = defect_density_disordered(&state).unwrap();
        assert!((nd - 0.5).abs() < 0.05, "{nd}");
    }

    #[test]
    fn stationary_column_only_rotates() {
        let sys = BdGSystem::new(1.0, sample_disorder(6, 0.2, 2).unwrap().lambdas).unwrap();
        let (start, _) = initial_bdg(&sys, 1.7).unwrap();
        let p = ControlProtocol::linear(1.7, 1.7, 4.0).unwrap();
        let end = evolve_bdg(&start, &sys, &p, Tolerance::default()).unwrap();
        for (a, b) in start.w.iter().zip(&end.w) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
        assert!(end.isometry_drift() < 1e-10);
    }

    #[test]
    fn ensemble_edge_cases() {
        let p = ControlProtocol::linear(10.0, 0.0, 3.0).unwrap();
        let clean = disorder_ensemble(8, 1.0, &p, 0.0, 3, 11, Tolerance::default()).unwrap();
        assert_eq!(clean.stddev, 0.0);
        let a = disorder_ensemble(8, 1.0, &p, 0.2, 3, 11, Tolerance::default()).unwrap();
        let b = disorder_ensemble(8, 1.0, &p, 0.2, 3, 11, Tolerance::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seeds, vec![11, 12, 13]);
        assert!(disorder_ensemble(8, 1.0, &p, 0.2, 0, 11, Tolerance::default()).is_err());
    }
}
