// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration files.
//!
//! A config is TOML with five sections (`model`, `protocol`, `sweep`,
//! `numerics`, `output`) below a top-level `experiment` key. Keys that carry a
//! unit say so in their name, e.g. `tau_over_qsl`.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::control::{build_fz, feasibility, ProtocolFamily};
use crate::exact_diag::{ChainBoundary, LongRangeIsingSpec, TauQslMode, MAX_SITES};
use crate::ode::Tolerance;
use crate::spectral::{gap_profile, LrkDistance, ModelFamily, ModelSpec, MomentumMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Quenches at the listed durations plus the controls at the shortest one.
    Quench,
    /// Duration sweep with log-log fits.
    Scaling,
    /// Duration sweep under dephasing noise, one series per `W`.
    Noise,
    /// Real-space quenches of disordered chains.
    Disorder,
    /// Dense simulation of the long-range Ising chain over `α`.
    EdSweep,
    /// Minimum feasible duration of the invariant control per order `k`.
    Feasibility,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quench => "quench",
            Self::Scaling => "scaling",
            Self::Noise => "noise",
            Self::Disorder => "disorder",
            Self::EdSweep => "ed_sweep",
            Self::Feasibility => "feasibility",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tfim,
    Lrk,
    RefTfim,
    /// Bare Landau-Zener passage `h_z = g`, fixed `h_x`.
    TwoLevel,
    /// Long-range transverse-field Ising chain (dense simulation).
    LongRangeIsing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "far")]
    pub alpha: f64,
    #[serde(default = "far")]
    pub beta: f64,
    #[serde(default = "one")]
    pub lambda_ref: f64,
    #[serde(default)]
    pub lrk_distance: LrkDistance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_x: Option<f64>,
    /// 0 antiferromagnetic, 1 ferromagnetic (long-range Ising only).
    #[serde(default)]
    pub p: u8,
    #[serde(default)]
    pub boundary: ChainBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default = "default_families")]
    pub families: Vec<ProtocolFamily>,
    #[serde(default = "default_orders")]
    pub k_orders: Vec<usize>,
    #[serde(default = "one")]
    pub k_norm: f64,
    pub g0: f64,
    pub g1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_over_qsl: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_over_qsl_range: Option<LogRange>,
    /// Absolute durations (`ħ/J` units); only for the two-level model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_width: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<f64>,
    /// `λ(α)` per entry of `alphas`; empty runs only the uncorrected control.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_corrections: Vec<f64>,
    #[serde(default)]
    pub tau_qsl_mode: TauQslMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

impl NumericsSection {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.rtol, self.atol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSection,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

fn far() -> f64 {
    400.0
}

fn default_families() -> Vec<ProtocolFamily> {
    vec![ProtocolFamily::Invariant]
}

fn default_orders() -> Vec<usize> {
    vec![3]
}

fn default_rtol() -> f64 {
    Tolerance::default().rtol
}

fn default_atol() -> f64 {
    Tolerance::default().atol
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One violated field of a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Default)]
struct Issues(Vec<Issue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.0.push(Issue {
            field: field.into(),
            reason: reason.into(),
        });
    }

    fn check(&mut self, ok: bool, field: &str, reason: impl FnOnce() -> String) {
        if !ok {
            self.push(field, reason());
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Canonical TOML; the config hash is taken over this text.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn tolerance(&self) -> Tolerance {
        self.numerics.tolerance()
    }

    /// Momentum-space model for `α` (ignored unless the family is LRK).
    pub fn model_spec(&self, alpha: Option<f64>) -> Option<ModelSpec> {
        let m = &self.model;
        let family = match m.family {
            ModelKind::Tfim => ModelFamily::Tfim,
            ModelKind::Lrk => ModelFamily::Lrk,
            ModelKind::RefTfim => ModelFamily::RefTfim,
            _ => return None,
        };
        Some(ModelSpec {
            family,
            n: m.n.unwrap_or(0),
            j: m.j,
            a: m.a,
            alpha: alpha.unwrap_or(m.alpha),
            beta: m.beta,
            lambda_ref: m.lambda_ref,
            lrk_distance: m.lrk_distance,
        })
    }

    /// `α` values of an LRK sweep, or a single `None`.
    pub fn lrk_alphas(&self) -> Vec<Option<f64>> {
        if self.model.family == ModelKind::Lrk && !self.sweep.alphas.is_empty() {
            self.sweep.alphas.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        }
    }

    /// Requested `τ/τ_QSL`, ascending and deduplicated.
    pub fn taus_over_qsl(&self) -> Vec<f64> {
        let mut taus = self.sweep.tau_over_qsl.clone();
        if let Some(r) = self.sweep.tau_over_qsl_range {
            taus.extend(crate::quench::log_space(r.from, r.to, r.count));
        }
        sorted_unique(taus)
    }

    /// Absolute durations for the two-level model, ascending and deduplicated.
    pub fn taus_absolute(&self) -> Vec<f64> {
        sorted_unique(self.sweep.tau.clone())
    }

    /// Invariant orders paired with each family; other families run once.
    pub fn family_orders(&self) -> Vec<(ProtocolFamily, usize)> {
        let mut out = Vec::new();
        for &family in &self.protocol.families {
            if family == ProtocolFamily::Invariant {
                out.extend(self.protocol.k_orders.iter().map(|&k| (family, k)));
            } else {
                out.push((family, self.protocol.k_orders.first().copied().unwrap_or(3)));
            }
        }
        out
    }

    pub fn realizations(&self) -> usize {
        self.sweep
            .realizations
            .unwrap_or(crate::disorder::DEFAULT_REALIZATIONS)
    }

    /// The mode a control is designed on: lowest momentum, or the bare two-level system.
    pub fn design_mode(&self, alpha: Option<f64>) -> Option<MomentumMode> {
        match self.model.family {
            ModelKind::TwoLevel => self.model.h_x.map(MomentumMode::two_level),
            _ => self.model_spec(alpha)?.lowest_mode().ok(),
        }
    }

    /// `τ_QSL` of the design model.
    pub fn tau_qsl(&self, alpha: Option<f64>) -> Option<f64> {
        match self.model.family {
            ModelKind::TwoLevel => self.model.h_x.map(|h| std::f64::consts::PI / h.abs()),
            _ => {
                let modes = self.model_spec(alpha)?.decompose().ok()?;
                gap_profile(&modes, self.protocol.g0, self.protocol.g1)
                    .ok()
                    .map(|p| p.tau_qsl)
            }
        }
    }

    /// Every violated field, in section order. Empty means the config is runnable.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Issues::default();
        self.validate_model(&mut issues);
        self.validate_protocol(&mut issues);
        self.validate_sweep(&mut issues);
        let n = &self.numerics;
        issues.check(n.rtol > 0.0 && n.rtol < 1.0, "numerics.rtol", || {
            format!("must lie in (0, 1), got {}", n.rtol)
        });
        issues.check(n.atol > 0.0 && n.atol.is_finite(), "numerics.atol", || {
            format!("must be positive, got {}", n.atol)
        });
        if issues.0.is_empty() {
            self.validate_feasible(&mut issues);
        }
        issues.0
    }

    fn validate_model(&self, issues: &mut Issues) {
        let kind = self.experiment;
        let family = self.model.family;
        let allowed: &[ModelKind] = match kind {
            ExperimentKind::Quench | ExperimentKind::Scaling | ExperimentKind::Feasibility => &[
                ModelKind::Tfim,
                ModelKind::Lrk,
                ModelKind::RefTfim,
                ModelKind::TwoLevel,
            ],
            ExperimentKind::Noise => &[ModelKind::Tfim, ModelKind::Lrk, ModelKind::RefTfim],
            ExperimentKind::Disorder => &[ModelKind::Tfim],
            ExperimentKind::EdSweep => &[ModelKind::LongRangeIsing],
        };
        if !allowed.contains(&family) {
            issues.push(
                "model.family",
                format!(
                    "experiment `{}` does not accept model family {:?}",
                    kind.as_str(),
                    family
                ),
            );
            return;
        }
        match family {
            ModelKind::TwoLevel => match self.model.h_x {
                Some(h) if h != 0.0 && h.is_finite() => {}
                Some(h) => issues.push("model.h_x", format!("must be finite and nonzero, got {h}")),
                None => issues.push("model.h_x", "required for the two-level model"),
            },
            ModelKind::LongRangeIsing => {
                let Some(n) = self.model.n else {
                    issues.push("model.n", "required");
                    return;
                };
                let alphas = if self.sweep.alphas.is_empty() {
                    vec![self.model.alpha]
                } else {
                    self.sweep.alphas.clone()
                };
                for alpha in alphas {
                    let mut spec = LongRangeIsingSpec::new(n, alpha, self.model.p);
                    spec.j = self.model.j;
                    spec.boundary = self.model.boundary;
                    if let Err(e) = spec.validate() {
                        issues.push("model", format!("{e} (N <= {MAX_SITES}, alpha = {alpha})"));
                    }
                }
            }
            _ => {
                if self.model.n.is_none() {
                    issues.push("model.n", "required");
                    return;
                }
                for alpha in self.lrk_alphas() {
                    let spec = self.model_spec(alpha).expect("momentum model");
                    if let Err(e) = spec.validate() {
                        issues.push(model_field(&e), e.to_string());
                    }
                }
            }
        }
    }

    fn validate_protocol(&self, issues: &mut Issues) {
        let p = &self.protocol;
        issues.check(!p.families.is_empty(), "protocol.families", || {
            "must not be empty".into()
        });
        issues.check(!p.k_orders.is_empty(), "protocol.k_orders", || {
            "must not be empty".into()
        });
        for &k in &p.k_orders {
            issues.check(k >= 3, "protocol.k_orders", || {
                format!("each order must be at least 3, got {k}")
            });
        }
        issues.check(
            p.k_norm > 0.0 && p.k_norm.is_finite(),
            "protocol.k_norm",
            || format!("must be positive, got {}", p.k_norm),
        );
        issues.check(p.g0.is_finite(), "protocol.g0", || "must be finite".into());
        issues.check(p.g1.is_finite(), "protocol.g1", || "must be finite".into());
        issues.check(p.g0 != p.g1, "protocol.g1", || "must differ from g0".into());
        match self.experiment {
            ExperimentKind::Disorder => {
                issues.check(p.families.len() == 1, "protocol.families", || {
                    "disorder runs take exactly one family".into()
                })
            }
            ExperimentKind::EdSweep => {
                issues.check(p.k_orders.len() == 1, "protocol.k_orders", || {
                    "ed_sweep runs take exactly one order".into()
                })
            }
            ExperimentKind::Feasibility => issues.check(
                p.families.iter().all(|&f| f == ProtocolFamily::Invariant),
                "protocol.families",
                || "feasibility applies to the invariant family only".into(),
            ),
            _ => {}
        }
    }

    fn validate_sweep(&self, issues: &mut Issues) {
        let s = &self.sweep;
        let two_level = self.model.family == ModelKind::TwoLevel;
        if let Some(r) = s.tau_over_qsl_range {
            issues.check(
                r.from > 0.0 && r.to >= r.from && r.to.is_finite(),
                "sweep.tau_over_qsl_range",
                || format!("needs 0 < from <= to, got {} .. {}", r.from, r.to),
            );
            issues.check(r.count >= 1, "sweep.tau_over_qsl_range.count", || {
                "must be at least 1".into()
            });
        }
        for &t in s.tau_over_qsl.iter().chain(&s.tau) {
            issues.check(t > 0.0 && t.is_finite(), "sweep.tau", || {
                format!("durations must be positive, got {t}")
            });
        }
        let relative = !s.tau_over_qsl.is_empty() || s.tau_over_qsl_range.is_some();
        if two_level {
            issues.check(relative ^ !s.tau.is_empty(), "sweep.tau", || {
                "give either tau or tau_over_qsl for the two-level model".into()
            });
        } else {
            issues.check(s.tau.is_empty(), "sweep.tau", || {
                "absolute durations are only accepted for the two-level model; use tau_over_qsl"
                    .into()
            });
            let needs_taus = self.experiment != ExperimentKind::Feasibility;
            issues.check(!needs_taus || relative, "sweep.tau_over_qsl", || {
                "must list at least one duration".into()
            });
        }
        for &w in &s.w {
            issues.check(w >= 0.0 && w.is_finite(), "sweep.w", || {
                format!("must be non-negative, got {w}")
            });
        }
        match self.experiment {
            ExperimentKind::Noise => issues.check(!s.w.is_empty(), "sweep.w", || {
                "must list at least one W".into()
            }),
            ExperimentKind::Disorder => {
                issues.check(!s.lambda_width.is_empty(), "sweep.lambda_width", || {
                    "must list at least one Lambda".into()
                });
                for &l in &s.lambda_width {
                    issues.check((0.0..1.0).contains(&l), "sweep.lambda_width", || {
                        format!("must lie in [0, 1), got {l}")
                    });
                }
                issues.check(self.realizations() >= 1, "sweep.realizations", || {
                    "must be at least 1".into()
                });
            }
            ExperimentKind::EdSweep => {
                issues.check(!s.alphas.is_empty(), "sweep.alphas", || {
                    "must list at least one alpha".into()
                });
                issues.check(
                    s.lambda_corrections.is_empty() || s.lambda_corrections.len() == s.alphas.len(),
                    "sweep.lambda_corrections",
                    || {
                        format!(
                            "needs one entry per alpha ({}), got {}",
                            s.alphas.len(),
                            s.lambda_corrections.len()
                        )
                    },
                );
                for &l in &s.lambda_corrections {
                    issues.check(l > 0.0 && l.is_finite(), "sweep.lambda_corrections", || {
                        format!("must be positive, got {l}")
                    });
                }
            }
            _ => {}
        }
        if self.experiment != ExperimentKind::EdSweep && self.model.family != ModelKind::Lrk {
            issues.check(s.alphas.is_empty(), "sweep.alphas", || {
                "alpha sweeps apply to the lrk and long_range_ising models only".into()
            });
        }
    }

    /// Invariant controls only exist above `τ_min`; checked before any evolution.
    fn validate_feasible(&self, issues: &mut Issues) {
        if self.experiment == ExperimentKind::EdSweep
            || self.experiment == ExperimentKind::Feasibility
        {
            return;
        }
        let p = &self.protocol;
        if !p.families.contains(&ProtocolFamily::Invariant) {
            return;
        }
        for alpha in self.lrk_alphas() {
            let (Some(mode), Some(tau_qsl)) = (self.design_mode(alpha), self.tau_qsl(alpha)) else {
                issues.push("model", "lowest mode or gap profile unavailable");
                return;
            };
            let taus: Vec<f64> =
                if self.model.family == ModelKind::TwoLevel && !self.sweep.tau.is_empty() {
                    self.taus_absolute()
                } else {
                    self.taus_over_qsl().iter().map(|r| r * tau_qsl).collect()
                };
            let Some(&shortest) = taus.first() else {
                continue;
            };
            for &k in &p.k_orders {
                match build_fz(&mode, p.g0, p.g1, shortest, k, p.k_norm) {
                    Ok(ansatz) => {
                        let tau_min = feasibility(&ansatz, &mode).tau_min;
                        if shortest < tau_min {
                            let at = alpha.map(|a| format!(", alpha = {a}")).unwrap_or_default();
                            issues.push(
                                "sweep.tau_over_qsl",
                                format!(
                                    "shortest duration {:.6} tau_QSL is below tau_min = {:.6} tau_QSL of the k = {k} invariant control{at}",
                                    shortest / tau_qsl,
                                    tau_min / tau_qsl
                                ),
                            );
                        }
                    }
                    Err(e) => issues.push("protocol", e.to_string()),
                }
            }
        }
    }
}

fn model_field(e: &crate::Error) -> String {
    match e {
        crate::Error::OddParticleCount(_) | crate::Error::TooFewParticles(_) => "model.n".into(),
        crate::Error::InvalidParameter { name, .. } => format!("model.{}", name.to_lowercase()),
        _ => "model".into(),
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "scaling"
[model]
family = "tfim"
n = 20
[protocol]
g0 = 10.0
g1 = 0.0
[sweep]
tau_over_qsl = [3.0, 2.0, 2.0]
"#;

    #[test]
    fn minimal_config_validates() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        assert_eq!(c.taus_over_qsl(), vec![2.0, 3.0]);
        assert_eq!(c.family_orders(), vec![(ProtocolFamily::Invariant, 3)]);
    }

    #[test]
    fn odd_n_names_parity_rule() {
        let c = ExperimentConfig::from_toml(&MINIMAL.replace("n = 20", "n = 21")).unwrap();
        let issues = c.validate();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].field, "model.n");
        assert!(issues[0].reason.contains("must be even"));
    }

    #[test]
    fn every_violation_is_listed() {
        let text = MINIMAL
            .replace("n = 20", "n = 21")
            .replace("g1 = 0.0", "g1 = 10.0\nk_orders = [2]");
        let fields: Vec<String> = ExperimentConfig::from_toml(&text)
            .unwrap()
            .validate()
            .into_iter()
            .map(|i| i.field)
            .collect();
        assert_eq!(fields, vec!["model.n", "protocol.k_orders", "protocol.g1"]);
    }

    #[test]
    fn too_short_invariant_is_rejected_up_front() {
        let c =
            ExperimentConfig::from_toml(&MINIMAL.replace("[3.0, 2.0, 2.0]", "[0.5, 2.0]")).unwrap();
        let issues = c.validate();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].reason.contains("below tau_min"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(
            ExperimentConfig::from_toml(&MINIMAL.replace("n = 20", "n = 20\nspins = 3")).is_err()
        );
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_canonical_toml()).unwrap();
        assert_eq!(c, again);
    }
}
