// SPDX-License-Identifier: Apache-2.0

//! Momentum-space evolution and the observables built from it.
//!
//! Every positive-`k` subspace is evolved under the same schedule `g(t)`,
//! either as a pure state or, with white control noise, as a Bloch vector
//! obeying the dephasing master equation. Cross-momentum noise terms are
//! discarded, so the noisy dynamics also factorizes over `k`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlProtocol, ProtocolFamily};
use crate::error::{Error, Result};
use crate::ode::{integrate, Tolerance};
use crate::spectral::{gap_profile, ModelSpec, MomentumMode};

/// Gaps below this are treated as degenerate (energy units of `J`).
pub const DEGENERATE_GAP: f64 = 1e-14;
/// Observable values below this floor are dropped from scaling fits.
pub const OBSERVABLE_FLOOR: f64 = 1e-13;
pub const MIN_FIT_POINTS: usize = 5;

/// Order-preserving parallel map; the first error by index wins, so the
/// outcome does not depend on scheduling.
pub fn try_par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync + Send,
{
    let results: Vec<Result<R>> = items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
    results.into_iter().collect()
}

/// Pure state of one subspace, amplitudes on `(|1⟩, |0⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceState {
    pub amplitudes: [Complex64; 2],
}

impl SubspaceState {
    pub fn norm(&self) -> f64 {
        self.amplitudes[0].norm_sqr() + self.amplitudes[1].norm_sqr()
    }

    pub fn inner(&self, other: &SubspaceState) -> Complex64 {
        self.amplitudes[0].conj() * other.amplitudes[0]
            + self.amplitudes[1].conj() * other.amplitudes[1]
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of the normalized state.
    pub fn bloch(&self) -> [f64; 3] {
        let [c1, c0] = self.amplitudes;
        let norm = self.norm();
        let off = c1.conj() * c0;
        [
            2.0 * off.re / norm,
            2.0 * off.im / norm,
            (c1.norm_sqr() - c0.norm_sqr()) / norm,
        ]
    }
}

/// Mixed state of one subspace, stored as its Bloch vector, so that
/// `ρ = (1 + r·σ)/2` is Hermitian with unit trace by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceDensity {
    pub bloch: [f64; 3],
}

impl SubspaceDensity {
    pub fn pure(state: &SubspaceState) -> Self {
        Self {
            bloch: state.bloch(),
        }
    }

    /// Density matrix on `(|1⟩, |0⟩)`.
    pub fn rho(&self) -> [[Complex64; 2]; 2] {
        let [x, y, z] = self.bloch;
        [
            [
                Complex64::new(0.5 * (1.0 + z), 0.0),
                Complex64::new(0.5 * x, -0.5 * y),
            ],
            [
                Complex64::new(0.5 * x, 0.5 * y),
                Complex64::new(0.5 * (1.0 - z), 0.0),
            ],
        ]
    }

    pub fn trace(&self) -> f64 {
        let rho = self.rho();
        (rho[0][0] + rho[1][1]).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let [x, y, z] = self.bloch;
        0.5 * (1.0 - (x * x + y * y + z * z).sqrt())
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn population(&self, state: &SubspaceState) -> f64 {
        let [x, y, z] = self.bloch;
        let [a, b, c] = state.bloch();
        0.5 * (1.0 + x * a + y * b + z * c)
    }

    /// Frobenius distance between density matrices.
    pub fn distance(&self, other: &SubspaceDensity) -> f64 {
        let d2: f64 = self
            .bloch
            .iter()
            .zip(other.bloch)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (0.5 * d2).sqrt()
    }
}

/// White Gaussian control noise of amplitude `W`, giving the dephasing rate `Γ = 4J²W²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub w: f64,
    pub gamma: f64,
}

impl NoiseSpec {
    pub fn new(w: f64, j: f64) -> Result<Self> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::invalid(
                "W",
                format!("must be non-negative, got {w}"),
            ));
        }
        Ok(Self {
            w,
            gamma: 4.0 * j * j * w * w,
        })
    }
}

/// Half-angle `θ/2` with `θ = atan2(h_x, h_z) ∈ (0, π)` for positive `h_x`.
fn half_angle(mode: &MomentumMode, g: f64) -> Result<f64> {
    let hz = mode.hz(g);
    let gap = hz.hypot(mode.h_x);
    if gap < DEGENERATE_GAP || !gap.is_finite() {
        return Err(Error::DegenerateGap { gap });
    }
    Ok(0.5 * mode.h_x.atan2(hz))
}

/// Lower eigenvector of `h_z σz/2 + h_x σx/2`.
pub fn ground_state(mode: &MomentumMode, g: f64) -> Result<SubspaceState> {
    let half = half_angle(mode, g)?;
    let (s, c) = half.sin_cos();
    let mut a = [-s, c];
    // first nonzero component real and non-negative
    if a[0] < 0.0 || (a[0] == 0.0 && a[1] < 0.0) {
        a = [-a[0], -a[1]];
    }
    Ok(SubspaceState {
        amplitudes: [Complex64::new(a[0], 0.0), Complex64::new(a[1], 0.0)],
    })
}

/// Upper eigenvector, orthogonal to [`ground_state`].
pub fn excited_state(mode: &MomentumMode, g: f64) -> Result<SubspaceState> {
    let (s, c) = half_angle(mode, g)?.sin_cos();
    Ok(SubspaceState {
        amplitudes: [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
    })
}

/// Probability of the upper level, `|⟨+|ψ⟩|² / ‖ψ‖²`; keeps full relative
/// precision when it is tiny.
pub fn excitation(mode: &MomentumMode, g: f64, state: &SubspaceState) -> Result<f64> {
    let up = excited_state(mode, g)?;
    Ok(up.inner(state).norm_sqr() / state.norm())
}

/// Integrates `i ψ̇ = H_k(g(t)) ψ` from the ground state at `g0`.
pub fn evolve_unitary(
    mode: &MomentumMode,
    protocol: &ControlProtocol,
    tol: Tolerance,
) -> Result<SubspaceState> {
    let start = ground_state(mode, protocol.g0)?;
    let mut psi = start.amplitudes;
    let (hx, slope, offset) = (0.5 * mode.h_x, 0.5 * mode.hz_slope, 0.5 * mode.hz_offset);
    let i = Complex64::i();
    integrate(
        |t, y: &[Complex64], dy: &mut [Complex64]| {
            let hz = slope * protocol.eval(t) + offset;
            dy[0] = -i * (hz * y[0] + hx * y[1]);
            dy[1] = -i * (hx * y[0] - hz * y[1]);
        },
        0.0,
        protocol.tau,
        &mut psi,
        tol,
    )?;
    Ok(SubspaceState { amplitudes: psi })
}

/// Integrates `ρ̇ = −i[H_k, ρ] + Γ(σz ρ σz − ρ)` from the ground-state projector at `g0`.
pub fn evolve_lindblad(
    mode: &MomentumMode,
    protocol: &ControlProtocol,
    noise: &NoiseSpec,
    tol: Tolerance,
) -> Result<SubspaceDensity> {
    let start = SubspaceDensity::pure(&ground_state(mode, protocol.g0)?);
    evolve_lindblad_from(mode, protocol, noise, start, tol)
}

/// [`evolve_lindblad`] from an arbitrary initial density.
pub fn evolve_lindblad_from(
    mode: &MomentumMode,
    protocol: &ControlProtocol,
    noise: &NoiseSpec,
    start: SubspaceDensity,
    tol: Tolerance,
) -> Result<SubspaceDensity> {
    let mut r = start.bloch;
    let hx = mode.h_x;
    let damp = 2.0 * noise.gamma;
    integrate(
        |t, r: &[f64], dr: &mut [f64]| {
            let hz = mode.hz(protocol.eval(t));
            // ṙ = b × r with b = (h_x, 0, h_z), then dephasing of the transverse part
            dr[0] = -hz * r[1] - damp * r[0];
            dr[1] = hz * r[0] - hx * r[2] - damp * r[1];
            dr[2] = hx * r[1];
        },
        0.0,
        protocol.tau,
        &mut r,
        tol,
    )?;
    Ok(SubspaceDensity { bloch: r })
}

/// Final state of one subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Pure(SubspaceState),
    Mixed(SubspaceDensity),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchResult {
    pub tau: f64,
    pub tau_over_qsl: f64,
    /// `1 − p_k` per positive momentum, `p_k` the upper-level population.
    pub per_mode_overlap: Vec<f64>,
    pub per_mode_excitation: Vec<f64>,
    pub final_states: Vec<ModeState>,
    /// `(2/N) Σ p_k`.
    pub n: f64,
    /// `Π (1 − p_k)`.
    pub fidelity: f64,
    pub infidelity: f64,
}

impl QuenchResult {
    fn from_excitations(
        n_sites: usize,
        tau: f64,
        tau_qsl: f64,
        excitations: Vec<f64>,
        final_states: Vec<ModeState>,
    ) -> Self {
        let n = 2.0 / n_sites as f64 * excitations.iter().sum::<f64>();
        let log_fidelity: f64 = excitations.iter().map(|p| (-p).ln_1p()).sum();
        Self {
            tau,
            tau_over_qsl: tau / tau_qsl,
            per_mode_overlap: excitations.iter().map(|p| 1.0 - p).collect(),
            per_mode_excitation: excitations,
            final_states,
            n,
            fidelity: log_fidelity.exp(),
            infidelity: -log_fidelity.exp_m1(),
        }
    }

    pub fn observable(&self, which: Observable) -> f64 {
        match which {
            Observable::N => self.n,
            Observable::Infidelity => self.infidelity,
        }
    }
}

/// Applies `protocol` to every positive-`k` mode of `spec`.
pub fn quench_all_modes(
    spec: &ModelSpec,
    protocol: &ControlProtocol,
    noise: Option<&NoiseSpec>,
    tol: Tolerance,
) -> Result<QuenchResult> {
    let modes = spec.decompose()?;
    let tau_qsl = gap_profile(&modes, protocol.g0, protocol.g1)?.tau_qsl;
    let per_mode = try_par_map(&modes, |i, mode| {
        let fail = |e| Error::ModeFailed {
            mode: i,
            source: Box::new(e),
        };
        let target = ground_state(mode, protocol.g1).map_err(fail)?;
        match noise {
            Some(noise) => {
                let rho = evolve_lindblad(mode, protocol, noise, tol).map_err(fail)?;
                Ok((1.0 - rho.population(&target), ModeState::Mixed(rho)))
            }
            None => {
                let psi = evolve_unitary(mode, protocol, tol).map_err(fail)?;
                let p = excitation(mode, protocol.g1, &psi).map_err(fail)?;
                Ok((p, ModeState::Pure(psi)))
            }
        }
    })?;
    let (excitations, states) = per_mode.into_iter().unzip();
    Ok(QuenchResult::from_excitations(
        spec.n,
        protocol.tau,
        tau_qsl,
        excitations,
        states,
    ))
}

/// Single Landau-Zener passage with fixed `h_x`, reported like a two-site chain
/// so that `n` is the upper-level population; `τ_QSL = π/|h_x|`.
pub fn quench_two_level(
    h_x: f64,
    protocol: &ControlProtocol,
    tol: Tolerance,
) -> Result<QuenchResult> {
    if !(h_x != 0.0 && h_x.is_finite()) {
        return Err(Error::invalid(
            "h_x",
            format!("must be finite and nonzero, got {h_x}"),
        ));
    }
    let mode = MomentumMode::two_level(h_x);
    let psi = evolve_unitary(&mode, protocol, tol)?;
    let p = excitation(&mode, protocol.g1, &psi)?;
    let tau_qsl = std::f64::consts::PI / h_x.abs();
    Ok(QuenchResult::from_excitations(
        2,
        protocol.tau,
        tau_qsl,
        vec![p],
        vec![ModeState::Pure(psi)],
    ))
}

/// Protocol settings shared by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub family: ProtocolFamily,
    pub g0: f64,
    pub g1: f64,
    pub k_order: usize,
    pub k_norm: f64,
    pub tolerance: Tolerance,
}

impl SweepSettings {
    pub fn new(family: ProtocolFamily, g0: f64, g1: f64, k_order: usize) -> Self {
        Self {
            family,
            g0,
            g1,
            k_order,
            k_norm: 1.0,
            tolerance: Tolerance::default(),
        }
    }
}

/// Builds the protocol for the lowest-energy mode of `spec` at `τ = ratio · τ_QSL`.
pub fn protocol_for(
    spec: &ModelSpec,
    settings: &SweepSettings,
    tau_over_qsl: f64,
) -> Result<ControlProtocol> {
    let modes = spec.decompose()?;
    let tau_qsl = gap_profile(&modes, settings.g0, settings.g1)?.tau_qsl;
    ControlProtocol::build(
        settings.family,
        &modes[0],
        settings.g0,
        settings.g1,
        tau_over_qsl * tau_qsl,
        settings.k_order,
        settings.k_norm,
    )
}

/// One quench per requested `τ/τ_QSL`, in input order.
pub fn sweep_tau(
    spec: &ModelSpec,
    settings: &SweepSettings,
    taus_over_qsl: &[f64],
    noise: Option<&NoiseSpec>,
) -> Result<Vec<QuenchResult>> {
    try_par_map(taus_over_qsl, |_, &ratio| {
        let protocol = protocol_for(spec, settings, ratio)?;
        quench_all_modes(spec, &protocol, noise, settings.tolerance)
    })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// One CSV row of a momentum-space sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchRow {
    pub family: ProtocolFamily,
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub k_order: Option<usize>,
    pub tau: f64,
    pub tau_over_qsl: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub n: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

impl QuenchRow {
    pub fn new(spec: &ModelSpec, settings: &SweepSettings, w: f64, result: &QuenchResult) -> Self {
        Self {
            family: settings.family,
            n_sites: spec.n,
            k_order: (settings.family == ProtocolFamily::Invariant).then_some(settings.k_order),
            tau: result.tau,
            tau_over_qsl: result.tau_over_qsl,
            w,
            n: result.n,
            fidelity: result.fidelity,
            infidelity: result.infidelity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    N,
    Infidelity,
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    /// Standard error of the slope (zero for two points or an exact fit).
    pub slope_stderr: f64,
    pub points_used: usize,
}

/// Fits `ln y = slope · ln x + intercept`, dropping points below [`OBSERVABLE_FLOOR`].
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("points", "x and y lengths differ"));
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: x.len(),
        });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveObservable { index, value });
    }
    if let Some(&bad) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::invalid(
            "tau",
            format!("fit abscissa must be positive, got {bad}"),
        ));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v >= OBSERVABLE_FLOOR)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    let m = lx.len();
    if m < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: m });
    }
    let mf = m as f64;
    let mx = lx.iter().sum::<f64>() / mf;
    let my = ly.iter().sum::<f64>() / mf;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("tau", "fit abscissae are all equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Ok(ScalingFit {
        slope,
        intercept,
        residual: (ss_res / mf).sqrt(),
        slope_stderr: (ss_res / ((mf - 2.0) * sxx)).sqrt(),
        points_used: m,
    })
}

/// Log-log fit of `observable` against `τ/τ_QSL`.
pub fn fit_scaling(results: &[QuenchResult], observable: Observable) -> Result<ScalingFit> {
    let x: Vec<f64> = results.iter().map(|r| r.tau_over_qsl).collect();
    let y: Vec<f64> = results.iter().map(|r| r.observable(observable)).collect();
    fit_log_log(&x, &y)
}
