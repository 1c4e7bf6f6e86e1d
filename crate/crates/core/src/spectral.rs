// SPDX-License-Identifier: Apache-2.0

//! Model definitions and their decomposition into momentum-space
//! two-level systems `H_k = h_z(g) σ_z/2 + h_x σ_x/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    /// Periodic transverse-field Ising chain.
    Tfim,
    /// Long-range Kitaev chain with Kac-normalized hopping and pairing.
    Lrk,
    /// Transverse-field Ising chain with a rescaled Ising coupling λ.
    RefTfim,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Tfim => "tfim",
            ModelFamily::Lrk => "lrk",
            ModelFamily::RefTfim => "ref_tfim",
        }
    }
}

/// Which distance enters the long-range couplings `J_r`, `d_r`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrkDistance {
    /// `r = 1..=N/2`, couplings `1/(N_γ r^γ)`.
    #[default]
    Chain,
    /// Minimum-image distance `min(r, N/2 - r)` for `r = 1..N/2`; the
    /// zero-distance term at `r = N/2` is dropped.
    MinImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// Number of sites / particles, even and at least 4.
    pub n: usize,
    /// Energy scale (ħ = 1).
    #[serde(default = "one")]
    pub j: f64,
    /// Lattice spacing; only the product `k a` matters.
    #[serde(default = "one")]
    pub a: f64,
    /// Long-range hopping exponent (LRK only).
    #[serde(default = "inf")]
    pub alpha: f64,
    /// Long-range pairing exponent (LRK only).
    #[serde(default = "inf")]
    pub beta: f64,
    /// Ising coupling rescaling (REF_TFIM only).
    #[serde(default = "one")]
    pub lambda_ref: f64,
    #[serde(default)]
    pub lrk_distance: LrkDistance,
}

fn one() -> f64 {
    1.0
}

fn inf() -> f64 {
    400.0
}

impl ModelSpec {
    pub fn tfim(n: usize, j: f64) -> Self {
        Self {
            family: ModelFamily::Tfim,
            n,
            j,
            a: 1.0,
            alpha: inf(),
            beta: inf(),
            lambda_ref: 1.0,
            lrk_distance: LrkDistance::Chain,
        }
    }

    pub fn lrk(n: usize, j: f64, alpha: f64, beta: f64) -> Self {
        Self {
            family: ModelFamily::Lrk,
            alpha,
            beta,
            ..Self::tfim(n, j)
        }
    }

    pub fn ref_tfim(n: usize, j: f64, lambda_ref: f64) -> Self {
        Self {
            family: ModelFamily::RefTfim,
            lambda_ref,
            ..Self::tfim(n, j)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::OddParticleCount(self.n));
        }
        if self.n < 4 {
            return Err(Error::TooFewParticles(self.n));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(Error::invalid(
                "J",
                format!("must be positive, got {}", self.j),
            ));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::invalid(
                "a",
                format!("must be positive, got {}", self.a),
            ));
        }
        match self.family {
            ModelFamily::Lrk => {
                if !(self.alpha > 1.0) {
                    return Err(Error::invalid(
                        "alpha",
                        format!("must exceed 1, got {}", self.alpha),
                    ));
                }
                if !(self.beta > 1.0) {
                    return Err(Error::invalid(
                        "beta",
                        format!("must exceed 1, got {}", self.beta),
                    ));
                }
            }
            ModelFamily::RefTfim => {
                if !(self.lambda_ref > 0.0 && self.lambda_ref.is_finite()) {
                    return Err(Error::invalid(
                        "lambda_ref",
                        format!("must be positive, got {}", self.lambda_ref),
                    ));
                }
            }
            ModelFamily::Tfim => {}
        }
        Ok(())
    }

    /// All positive-momentum modes, `k` ascending.
    pub fn decompose(&self) -> Result<Vec<MomentumMode>> {
        match self.family {
            ModelFamily::Tfim | ModelFamily::RefTfim => decompose_tfim(self),
            ModelFamily::Lrk => decompose_lrk(self),
        }
    }

    /// The lowest-energy subspace `k₀ = π/(N a)`.
    pub fn lowest_mode(&self) -> Result<MomentumMode> {
        Ok(self.decompose()?[0])
    }
}

/// One decoupled two-level subsystem with `h_z(g) = hz_slope·g + hz_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumMode {
    pub k: f64,
    pub h_x: f64,
    pub hz_slope: f64,
    pub hz_offset: f64,
}

impl MomentumMode {
    /// A bare Landau-Zener system whose control is `h_z` itself.
    pub fn two_level(h_x: f64) -> Self {
        Self {
            k: 0.0,
            h_x,
            hz_slope: 1.0,
            hz_offset: 0.0,
        }
    }

    #[inline]
    pub fn hz(&self, g: f64) -> f64 {
        self.hz_slope * g + self.hz_offset
    }

    /// Inverse of the affine map `g ↦ h_z(g)`.
    #[inline]
    pub fn g_for_hz(&self, hz: f64) -> f64 {
        (hz - self.hz_offset) / self.hz_slope
    }

    /// Level splitting `√(h_z² + h_x²)`.
    #[inline]
    pub fn gap(&self, g: f64) -> f64 {
        self.hz(g).hypot(self.h_x)
    }

    /// Control value where `h_z` vanishes, if `h_z` depends on `g`.
    pub fn critical_g(&self) -> Option<f64> {
        (self.hz_slope != 0.0).then(|| -self.hz_offset / self.hz_slope)
    }

    /// Minimum of the gap over the closed interval spanned by `g_start`, `g_end`.
    pub fn min_gap_on(&self, g_start: f64, g_end: f64) -> (f64, f64) {
        let (lo, hi) = if g_start <= g_end {
            (g_start, g_end)
        } else {
            (g_end, g_start)
        };
        if let Some(gc) = self.critical_g() {
            if (lo..=hi).contains(&gc) {
                return (self.h_x.abs(), gc);
            }
        }
        let (glo, ghi) = (self.gap(lo), self.gap(hi));
        if glo <= ghi {
            (glo, lo)
        } else {
            (ghi, hi)
        }
    }
}

/// Antiperiodic momenta `(2n - 1)π/(N a)`, `n = 1..=N/2`.
pub fn momenta(n: usize, a: f64) -> Vec<f64> {
    (1..=n / 2)
        .map(|m| (2 * m - 1) as f64 * PI / (n as f64 * a))
        .collect()
}

/// Kac normalization `N_γ = 2 Σ_{r=1}^{N/2} r^{-γ}`.
pub fn kac_norm(gamma: f64, n: usize) -> f64 {
    2.0 * (1..=n / 2).map(|r| (r as f64).powf(-gamma)).sum::<f64>()
}

pub fn decompose_tfim(spec: &ModelSpec) -> Result<Vec<MomentumMode>> {
    spec.validate()?;
    let lambda = match spec.family {
        ModelFamily::Tfim => 1.0,
        ModelFamily::RefTfim => spec.lambda_ref,
        ModelFamily::Lrk => {
            return Err(Error::invalid(
                "family",
                "decompose_tfim needs TFIM or REF_TFIM",
            ));
        }
    };
    let four_j = 4.0 * spec.j;
    Ok(momenta(spec.n, spec.a)
        .into_iter()
        .map(|k| {
            let ka = k * spec.a;
            MomentumMode {
                k,
                h_x: four_j * lambda * ka.sin(),
                hz_slope: four_j,
                hz_offset: -four_j * lambda * ka.cos(),
            }
        })
        .collect())
}

/// Distances and Kac-normalized weights for one long-range exponent.
fn lrk_weights(gamma: f64, n: usize, distance: LrkDistance) -> Vec<(f64, f64)> {
    let half = n / 2;
    let pairs: Vec<(f64, f64)> = match distance {
        LrkDistance::Chain => (1..=half)
            .map(|r| (r as f64, (r as f64).powf(-gamma)))
            .collect(),
        LrkDistance::MinImage => (1..half)
            .map(|r| {
                let rbar = r.min(half - r) as f64;
                (r as f64, rbar.powf(-gamma))
            })
            .collect(),
    };
    let norm = 2.0 * pairs.iter().map(|(_, w)| w).sum::<f64>();
    pairs.into_iter().map(|(r, w)| (r, w / norm)).collect()
}

pub fn decompose_lrk(spec: &ModelSpec) -> Result<Vec<MomentumMode>> {
    spec.validate()?;
    if spec.family != ModelFamily::Lrk {
        return Err(Error::invalid("family", "decompose_lrk needs LRK"));
    }
    let hopping = lrk_weights(spec.alpha, spec.n, spec.lrk_distance);
    let pairing = lrk_weights(spec.beta, spec.n, spec.lrk_distance);
    let j = spec.j;
    Ok(momenta(spec.n, spec.a)
        .into_iter()
        .map(|k| {
            let ka = k * spec.a;
            let hop: f64 = hopping.iter().map(|&(r, w)| w * (ka * r).cos()).sum();
            let pair: f64 = pairing.iter().map(|&(r, w)| w * (ka * r).sin()).sum();
            MomentumMode {
                k,
                h_x: -2.0 * j * pair,
                hz_slope: 1.0,
                hz_offset: -4.0 * j * hop,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub modes: Vec<MomentumMode>,
    pub delta_min: f64,
    /// Index of the mode attaining `delta_min`.
    pub argmin_mode: usize,
    /// Control value where `delta_min` is attained.
    pub g_at_min: f64,
    pub tau_qsl: f64,
}

impl GapProfile {
    pub fn mode_gap(&self, mode: usize, g: f64) -> f64 {
        self.modes[mode].gap(g)
    }
}

/// Minimum gap over all modes along the straight path `g_start → g_end`,
/// in closed form (each `h_z` is affine in `g`).
pub fn gap_profile(modes: &[MomentumMode], g_start: f64, g_end: f64) -> Result<GapProfile> {
    if modes.is_empty() {
        return Err(Error::invalid("modes", "at least one mode is required"));
    }
    if g_start == g_end {
        return Err(Error::invalid(
            "g_end",
            "quench path must have g_start != g_end",
        ));
    }
    let (argmin_mode, (delta_min, g_at_min)) = modes
        .iter()
        .map(|m| m.min_gap_on(g_start, g_end))
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("nonempty");
    if !(delta_min > 0.0) {
        return Err(Error::DegenerateGap { gap: delta_min });
    }
    Ok(GapProfile {
        modes: modes.to_vec(),
        delta_min,
        argmin_mode,
        g_at_min,
        tau_qsl: PI / delta_min,
    })
}
