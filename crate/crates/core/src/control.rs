// SPDX-License-Identifier: Apache-2.0

//! Quench schedules `g(t)`: invariant-based, FAQUAD and linear.
//!
//! The invariant-based schedule is inverse engineered from an auxiliary
//! polynomial `f_z(s)`, `s = t/τ`, for one designated two-level mode
//! (normally the lowest-energy momentum `k₀`). With `h_x` fixed and
//! `h_y = 0`, the Lewis-Riesenfeld invariant `I = f·σ/2` of constant norm
//! `|f|² = K` determines the control
//!
//! ```text
//! h_z = (f̈_z + f_z h_x²) / (|h_x| √(K − f_z² − (ḟ_z/h_x)²))
//! ```
//!
//! and the frictionless conditions at `t = 0, τ` pin `f_z` to the
//! Hamiltonian's eigenvector there and make its first `k − 1` derivatives
//! vanish.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::MomentumMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolFamily {
    Invariant,
    Faquad,
    Linear,
}

impl ProtocolFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolFamily::Invariant => "invariant",
            ProtocolFamily::Faquad => "faquad",
            ProtocolFamily::Linear => "linear",
        }
    }
}

impl std::fmt::Display for ProtocolFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invariant" => Ok(ProtocolFamily::Invariant),
            "faquad" => Ok(ProtocolFamily::Faquad),
            "linear" => Ok(ProtocolFamily::Linear),
            other => Err(Error::invalid(
                "family",
                format!("unknown protocol `{other}`"),
            )),
        }
    }
}

/// Square-root arguments at or below `NON_REAL_FLOOR · K` are treated as non-real.
pub const NON_REAL_FLOOR: f64 = 1e-14;
/// Inside this fraction of τ from a boundary the control is the boundary value.
pub const BOUNDARY_WINDOW: f64 = 1e-8;
const FEASIBILITY_GRID: usize = 4096;

/// Polynomial in `s` with all its derivative polynomials precomputed.
#[derive(Debug, Clone, PartialEq)]
struct Polynomial {
    derivatives: Vec<Vec<f64>>,
}

impl Polynomial {
    fn new(coefficients: Vec<f64>) -> Self {
        let mut derivatives = vec![coefficients];
        loop {
            let last = derivatives.last().unwrap();
            if last.len() <= 1 {
                break;
            }
            let next = last
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| j as f64 * c)
                .collect();
            derivatives.push(next);
        }
        Self { derivatives }
    }

    fn coefficients(&self) -> &[f64] {
        &self.derivatives[0]
    }

    /// `order`-th derivative at `s` (zero beyond the degree).
    #[inline]
    fn eval(&self, order: usize, s: f64) -> f64 {
        match self.derivatives.get(order) {
            Some(c) => c.iter().rev().fold(0.0, |acc, &c| acc * s + c),
            None => 0.0,
        }
    }
}

/// `(1 − u, 1 + u)` for `u = h_z / √(h_x² + h_z²)`, free of cancellation.
fn cos_complements(h_x: f64, hz: f64) -> (f64, f64) {
    let e = hz.hypot(h_x);
    let hx2 = h_x * h_x;
    if hz >= 0.0 {
        (hx2 / (e * (e + hz)), (e + hz) / e)
    } else {
        ((e - hz) / e, hx2 / (e * (e - hz)))
    }
}

/// Auxiliary function `f_z(s) = F₀ + (F₁ − F₀) S(s)` of degree `2k − 1`,
/// where `S` is the unit step with `k − 1` flat derivatives at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct FzAnsatz {
    pub order_k: usize,
    /// Invariant norm constant.
    pub k_norm: f64,
    pub fz0: f64,
    pub fz1: f64,
    pub tau: f64,
    step: Polynomial,
    // √K ∓ F at both ends, so that K − f² keeps its digits near |f| → √K
    root_minus: [f64; 2],
    root_plus: [f64; 2],
}

impl FzAnsatz {
    /// Coefficients of `f_z` in `s = t/τ`, lowest order first.
    pub fn coefficients(&self) -> Vec<f64> {
        let span = self.fz1 - self.fz0;
        let mut c: Vec<f64> = self.step.coefficients().iter().map(|c| span * c).collect();
        c[0] += self.fz0;
        c
    }

    pub fn degree(&self) -> usize {
        2 * self.order_k - 1
    }

    /// `d^m f_z / ds^m` at `s`.
    #[inline]
    pub fn s_derivative(&self, m: usize, s: f64) -> f64 {
        let d = (self.fz1 - self.fz0) * self.step.eval(m, s);
        if m == 0 {
            self.fz0 + d
        } else {
            d
        }
    }

    /// `d^m f_z / dt^m` at time `t`.
    #[inline]
    pub fn derivative(&self, m: usize, t: f64) -> f64 {
        self.s_derivative(m, t / self.tau) / self.tau.powi(m as i32)
    }

    /// Same polynomial, different duration.
    pub fn with_tau(&self, tau: f64) -> Self {
        Self {
            tau,
            ..self.clone()
        }
    }

    /// `K − f_z²` at `s`.
    fn norm_slack(&self, s: f64) -> f64 {
        let w = self.step.eval(0, s);
        let minus = self.root_minus[0] * (1.0 - w) + self.root_minus[1] * w;
        let plus = self.root_plus[0] * (1.0 - w) + self.root_plus[1] * w;
        minus * plus
    }

    /// `K − f_z² − (ḟ_z/h_x)²` at time `t`.
    pub fn reality_margin(&self, h_x: f64, t: f64) -> f64 {
        self.margin_at_s(h_x, t / self.tau)
    }

    fn margin_at_s(&self, h_x: f64, s: f64) -> f64 {
        let fd = self.s_derivative(1, s) / (self.tau * h_x);
        self.norm_slack(s) - fd * fd
    }
}

/// Boundary value of `f_z` that makes the invariant commute with `H(t_B)`.
pub fn frictionless_fz(mode: &MomentumMode, g: f64, k_norm: f64) -> f64 {
    let hz = mode.hz(g);
    hz * (k_norm / (mode.h_x * mode.h_x + hz * hz)).sqrt()
}

/// Solves the `2k` boundary conditions for the degree-`(2k − 1)` polynomial.
pub fn build_fz(
    mode: &MomentumMode,
    g0: f64,
    g1: f64,
    tau: f64,
    order_k: usize,
    k_norm: f64,
) -> Result<FzAnsatz> {
    if order_k < 3 {
        return Err(Error::invalid(
            "k_order",
            format!("must be at least 3, got {order_k}"),
        ));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(
            "tau",
            format!("must be positive, got {tau}"),
        ));
    }
    if !(k_norm > 0.0 && k_norm.is_finite()) {
        return Err(Error::invalid(
            "K",
            format!("must be positive, got {k_norm}"),
        ));
    }
    if mode.h_x == 0.0 || !mode.h_x.is_finite() {
        return Err(Error::invalid("h_x", "transverse field must be nonzero"));
    }

    let dim = 2 * order_k;
    let mut lhs = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    // rows 0..k: derivatives 0..k-1 at s = 0; rows k..2k: same at s = 1
    for m in 0..order_k {
        lhs[(m, m)] = falling_factorial(m, m);
        for j in m..dim {
            lhs[(order_k + m, j)] = falling_factorial(j, m);
        }
    }
    rhs[order_k] = 1.0;
    let lu = lhs.clone().lu();
    let mut step = lu.solve(&rhs).expect("boundary system is nonsingular");
    // one round of iterative refinement; the monomial system is mildly ill-conditioned
    let residual = &rhs - &lhs * &step;
    step += lu.solve(&residual).expect("boundary system is nonsingular");

    let root = k_norm.sqrt();
    let ends = [g0, g1].map(|g| cos_complements(mode.h_x, mode.hz(g)));
    Ok(FzAnsatz {
        order_k,
        k_norm,
        fz0: frictionless_fz(mode, g0, k_norm),
        fz1: frictionless_fz(mode, g1, k_norm),
        tau,
        step: Polynomial::new(step.iter().copied().collect()),
        root_minus: [root * ends[0].0, root * ends[1].0],
        root_plus: [root * ends[0].1, root * ends[1].1],
    })
}

/// `j! / (j − m)!`
fn falling_factorial(j: usize, m: usize) -> f64 {
    ((j + 1 - m)..=j).map(|x| x as f64).product()
}

/// Raw evaluation of the inverse-engineered control at time `t`.
pub fn eval_invariant_control(ansatz: &FzAnsatz, mode: &MomentumMode, t: f64) -> Result<f64> {
    let s = t / ansatz.tau;
    let hx = mode.h_x.abs();
    let f = ansatz.s_derivative(0, s);
    let fdd = ansatz.derivative(2, t);
    let arg = ansatz.margin_at_s(hx, s);
    if arg <= NON_REAL_FLOOR * ansatz.k_norm {
        return Err(Error::NonRealControl { t, margin: arg });
    }
    let hz = (fdd + f * hx * hx) / (hx * arg.sqrt());
    Ok(mode.g_for_hz(hz))
}

/// Closed-form `dg/dt` of the inverse-engineered control.
fn invariant_rate(ansatz: &FzAnsatz, mode: &MomentumMode, t: f64) -> f64 {
    let hx = mode.h_x.abs();
    let hx2 = hx * hx;
    let f = ansatz.derivative(0, t);
    let f1 = ansatz.derivative(1, t);
    let f2 = ansatz.derivative(2, t);
    let f3 = ansatz.derivative(3, t);
    let arg = ansatz.margin_at_s(hx, t / ansatz.tau);
    let root = arg.sqrt();
    let numerator =
        (f3 + f1 * hx2) * root + (f2 + f * hx2) * (f1 * f * hx2 + f2 * f1) / (hx2 * root);
    numerator / (arg * hx) / mode.hz_slope
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub tau_min: f64,
    /// `min_t K − f_z² − (ḟ_z/h_x)²` at the ansatz's own τ.
    pub margin: f64,
}

impl FeasibilityReport {
    pub fn is_real(&self) -> bool {
        self.margin > 0.0
    }
}

/// Minimum of the reality margin over `[0, τ]`: dense grid, then golden-section refinement.
pub fn reality_margin(ansatz: &FzAnsatz, h_x: f64) -> f64 {
    let n = FEASIBILITY_GRID;
    let at = |s: f64| ansatz.margin_at_s(h_x, s);
    let (imin, mut best) = (0..n)
        .map(|i| (i, at(i as f64 / (n - 1) as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is nonempty");
    let step = 1.0 / (n - 1) as f64;
    let mut lo = (imin as f64 - 1.0).max(0.0) * step;
    let mut hi = (imin as f64 + 1.0).min((n - 1) as f64) * step;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (at(x1), at(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = at(x2);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    best = best.min(f1).min(f2);
    best
}

/// Margin at the ansatz's τ and the bisected minimum feasible duration.
pub fn feasibility(ansatz: &FzAnsatz, mode: &MomentumMode) -> FeasibilityReport {
    let h_x = mode.h_x;
    let margin = reality_margin(ansatz, h_x);
    let sign_at = |tau: f64| reality_margin(&ansatz.with_tau(tau), h_x) > 0.0;

    // The derivative term falls as 1/τ², so the margin is increasing in τ.
    let mut hi = ansatz.tau;
    while !sign_at(hi) {
        hi *= 2.0;
    }
    let mut lo = hi;
    while sign_at(lo) && lo > 1e-300 {
        lo *= 0.5;
    }
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if sign_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    FeasibilityReport {
        tau_min: hi,
        margin,
    }
}

/// Invariant-based control for one designated mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantControl {
    pub ansatz: FzAnsatz,
    pub mode: MomentumMode,
}

impl InvariantControl {
    /// `d^{k−2} g / dt^{k−2}` at a boundary, the leading nonzero
    /// derivative of the control there: `f_z^{(k)} √(h_x²+h_z²) / (√K h_x² ∂h_z/∂g)`.
    pub fn boundary_jet(&self, at_end: bool, g_boundary: f64) -> f64 {
        let k = self.ansatz.order_k;
        let t = if at_end { self.ansatz.tau } else { 0.0 };
        let fk = self.ansatz.derivative(k, t);
        let hx2 = self.mode.h_x * self.mode.h_x;
        fk * self.mode.gap(g_boundary) / (self.ansatz.k_norm.sqrt() * hx2 * self.mode.hz_slope)
    }
}

/// FAQUAD schedule: constant adiabaticity parameter
/// `μ = |h_x ḣ_z| / (2 (h_x² + h_z²)^{3/2})`.
///
/// Along such a schedule `u = h_z / √(h_x² + h_z²)` is linear in time, so
/// the schedule is inverted exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FaquadControl {
    pub mode: MomentumMode,
    u0: f64,
    u1: f64,
    // 1 − u and 1 + u at both ends, computed without cancellation
    one_minus: [f64; 2],
    one_plus: [f64; 2],
}

impl FaquadControl {
    fn new(mode: MomentumMode, g0: f64, g1: f64) -> Self {
        let ends = [g0, g1].map(|g| {
            let hz = mode.hz(g);
            let (minus, plus) = cos_complements(mode.h_x, hz);
            (hz / mode.gap(g), minus, plus)
        });
        Self {
            mode,
            u0: ends[0].0,
            u1: ends[1].0,
            one_minus: [ends[0].1, ends[1].1],
            one_plus: [ends[0].2, ends[1].2],
        }
    }

    fn hz_at(&self, s: f64) -> f64 {
        let u = self.u0 * (1.0 - s) + self.u1 * s;
        let minus = self.one_minus[0] * (1.0 - s) + self.one_minus[1] * s;
        let plus = self.one_plus[0] * (1.0 - s) + self.one_plus[1] * s;
        self.mode.h_x.abs() * u / (minus * plus).sqrt()
    }

    fn hz_rate(&self, s: f64, tau: f64) -> f64 {
        let minus = self.one_minus[0] * (1.0 - s) + self.one_minus[1] * s;
        let plus = self.one_plus[0] * (1.0 - s) + self.one_plus[1] * s;
        self.mode.h_x.abs() * (minus * plus).powf(-1.5) * (self.u1 - self.u0) / tau
    }

    /// The constant value of the adiabaticity parameter for duration `tau`.
    pub fn adiabaticity(&self, tau: f64) -> f64 {
        (self.u1 - self.u0).abs() / (2.0 * self.mode.h_x.abs() * tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Invariant(InvariantControl),
    Faquad(FaquadControl),
    Linear,
}

/// An evaluable schedule `g(t)` on `[0, τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProtocol {
    pub family: ProtocolFamily,
    pub g0: f64,
    pub g1: f64,
    pub tau: f64,
    shape: Shape,
}

impl ControlProtocol {
    /// Invariant-based control for `mode`; fails with `NonRealControl`
    /// when `tau` is below the minimum feasible duration.
    pub fn invariant(
        mode: &MomentumMode,
        g0: f64,
        g1: f64,
        tau: f64,
        order_k: usize,
        k_norm: f64,
    ) -> Result<Self> {
        let ansatz = build_fz(mode, g0, g1, tau, order_k, k_norm)?;
        let margin = reality_margin(&ansatz, mode.h_x);
        if margin <= NON_REAL_FLOOR * k_norm {
            return Err(Error::NonRealControl {
                t: f64::NAN,
                margin,
            });
        }
        Ok(Self {
            family: ProtocolFamily::Invariant,
            g0,
            g1,
            tau,
            shape: Shape::Invariant(InvariantControl {
                ansatz,
                mode: *mode,
            }),
        })
    }

    pub fn faquad(mode: &MomentumMode, g0: f64, g1: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if g0 == g1 {
            return Err(Error::invalid("g1", "FAQUAD needs g0 != g1"));
        }
        if mode.h_x == 0.0 || !mode.h_x.is_finite() {
            return Err(Error::invalid("h_x", "transverse field must be nonzero"));
        }
        Ok(Self {
            family: ProtocolFamily::Faquad,
            g0,
            g1,
            tau,
            shape: Shape::Faquad(FaquadControl::new(*mode, g0, g1)),
        })
    }

    pub fn linear(g0: f64, g1: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            family: ProtocolFamily::Linear,
            g0,
            g1,
            tau,
            shape: Shape::Linear,
        })
    }

    /// Builds any family; `order_k` and `k_norm` only matter for invariant controls.
    pub fn build(
        family: ProtocolFamily,
        mode: &MomentumMode,
        g0: f64,
        g1: f64,
        tau: f64,
        order_k: usize,
        k_norm: f64,
    ) -> Result<Self> {
        match family {
            ProtocolFamily::Invariant => Self::invariant(mode, g0, g1, tau, order_k, k_norm),
            ProtocolFamily::Faquad => Self::faquad(mode, g0, g1, tau),
            ProtocolFamily::Linear => Self::linear(g0, g1, tau),
        }
    }

    pub fn order_k(&self) -> Option<usize> {
        match &self.shape {
            Shape::Invariant(c) => Some(c.ansatz.order_k),
            _ => None,
        }
    }

    pub fn invariant_control(&self) -> Option<&InvariantControl> {
        match &self.shape {
            Shape::Invariant(c) => Some(c),
            _ => None,
        }
    }

    pub fn faquad_control(&self) -> Option<&FaquadControl> {
        match &self.shape {
            Shape::Faquad(c) => Some(c),
            _ => None,
        }
    }

    /// `g(t)`, with `t` clamped to `[0, τ]`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.g0;
        }
        if t >= self.tau {
            return self.g1;
        }
        let s = t / self.tau;
        match &self.shape {
            Shape::Linear => self.g0 + (self.g1 - self.g0) * s,
            Shape::Faquad(c) => c.mode.g_for_hz(c.hz_at(s)),
            Shape::Invariant(c) => {
                if s < BOUNDARY_WINDOW {
                    self.g0
                } else if 1.0 - s < BOUNDARY_WINDOW {
                    self.g1
                } else {
                    eval_invariant_control(&c.ansatz, &c.mode, t).unwrap_or(f64::NAN)
                }
            }
        }
    }

    /// `dg/dt` in closed form, with `t` clamped to `[0, τ]`.
    pub fn eval_rate(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.tau);
        match &self.shape {
            Shape::Linear => (self.g1 - self.g0) / self.tau,
            Shape::Faquad(c) => c.hz_rate(t / self.tau, self.tau) / c.mode.hz_slope,
            Shape::Invariant(c) => invariant_rate(&c.ansatz, &c.mode, t),
        }
    }

    /// `rows` equally spaced samples `(t, g, dg/dt)` including both ends.
    pub fn tabulate(&self, rows: usize) -> Vec<[f64; 3]> {
        let rows = rows.max(2);
        (0..rows)
            .map(|i| {
                let t = self.tau * i as f64 / (rows - 1) as f64;
                [t, self.eval(t), self.eval_rate(t)]
            })
            .collect()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "tau",
            format!("must be positive, got {tau}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gap_profile, ModelSpec};

    fn lz(delta: f64) -> MomentumMode {
        MomentumMode::two_level(delta)
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(5, 0), 1.0);
        assert_eq!(falling_factorial(5, 2), 20.0);
        assert_eq!(falling_factorial(3, 3), 6.0);
    }

    #[test]
    fn degree_five_matches_closed_form() {
        let (g0, delta, tau) = (10.0, 0.3, 40.0);
        let a = build_fz(&lz(delta), g0, -g0, tau, 3, 1.0).unwrap();
        assert_eq!(a.degree(), 5);
        let n0 = g0 / (delta * delta + g0 * g0).sqrt();
        let closed = |t: f64| {
            (-n0 * (t - tau).powi(3) * (6.0 * t * t + 3.0 * tau * t + tau * tau)
                + -n0 * t.powi(3) * (6.0 * t * t - 15.0 * t * tau + 10.0 * tau * tau))
                / tau.powi(5)
        };
        for i in 0..=20 {
            let t = tau * i as f64 / 20.0;
            assert!((a.derivative(0, t) - closed(t)).abs() < 1e-13);
        }
        assert!((a.derivative(0, 0.0) - n0).abs() < 1e-15);
        assert!((a.derivative(0, tau) + n0).abs() < 1e-14);
        assert!(a.derivative(0, tau / 2.0).abs() < 1e-14);
    }

    #[test]
    fn equal_boundaries_give_constant_fz() {
        for k in 3..=6 {
            let a = build_fz(&lz(0.5), 2.0, 2.0, 3.0, k, 1.0).unwrap();
            for i in 0..=10 {
                let t = 0.3 * i as f64;
                assert!((a.derivative(0, t) - a.fz0).abs() < 1e-13);
                assert!(a.derivative(1, t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn higher_order_boundary_derivatives_vanish() {
        // k = 4: derivatives 1..=3 vanish at both ends, the fourth does not
        let tau = 7.0;
        let a = build_fz(&lz(0.2), 5.0, -1.0, tau, 4, 1.0).unwrap();
        assert_eq!(a.degree(), 7);
        for m in 1..=3 {
            assert!(a.derivative(m, 0.0).abs() < 1e-12, "m={m}");
            assert!(a.derivative(m, tau).abs() < 1e-12, "m={m}");
        }
        assert!(a.derivative(4, 0.0).abs() > 1e-6);
    }

    #[test]
    fn unit_step_matches_binomial_smoothstep() {
        // S_k(s) = s^k Σ_{n<k} C(k−1+n, n) (1−s)^n
        fn binom(n: u64, r: u64) -> f64 {
            (1..=r).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
        }
        for k in 3..=8usize {
            let a = build_fz(&lz(0.3), 2.0, -1.0, 1.0, k, 1.0).unwrap();
            // monomial evaluation loses digits in proportion to the coefficient size
            let scale: f64 = a.coefficients().iter().map(|c| c.abs()).sum();
            for i in 0..=50 {
                let s = i as f64 / 50.0;
                let smooth: f64 = s.powi(k as i32)
                    * (0..k as u64)
                        .map(|n| binom(k as u64 - 1 + n, n) * (1.0 - s).powi(n as i32))
                        .sum::<f64>();
                let expected = a.fz0 + (a.fz1 - a.fz0) * smooth;
                assert!(
                    (a.s_derivative(0, s) - expected).abs() < 1e-14 * scale,
                    "k={k} s={s}"
                );
            }
        }
    }
    #[test]
    fn frictionless_boundary_values() {
        let mode = ModelSpec::tfim(50, 1.0).lowest_mode().unwrap();
        let a = build_fz(&mode, 10.0, 0.0, 40.0, 3, 2.5).unwrap();
        for (g, f) in [(10.0, a.fz0), (0.0, a.fz1)] {
            let hz = mode.hz(g);
            let expected = hz * (2.5 / (mode.h_x.powi(2) + hz * hz)).sqrt();
            assert!((f - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn invariant_boundaries_and_constant_case() {
        let mode = ModelSpec::tfim(200, 1.0).lowest_mode().unwrap();
        let profile =
            gap_profile(&ModelSpec::tfim(200, 1.0).decompose().unwrap(), 10.0, 0.0).unwrap();
        let tau = 2.0 * profile.tau_qsl;
        let p = ControlProtocol::invariant(&mode, 10.0, 0.0, tau, 3, 1.0).unwrap();
        assert_eq!(p.eval(0.0), 10.0);
        assert_eq!(p.eval(tau), 0.0);
        // raw formula at the boundaries, no window
        let c = p.invariant_control().unwrap();
        let g0 = eval_invariant_control(&c.ansatz, &mode, 0.0).unwrap();
        let g1 = eval_invariant_control(&c.ansatz, &mode, tau).unwrap();
        assert!((g0 - 10.0).abs() < 1e-12 * 10.0);
        assert!(g1.abs() < 1e-12);

        let flat = ControlProtocol::invariant(&mode, 3.0, 3.0, 5.0, 4, 1.0).unwrap();
        for i in 0..=50 {
            assert!((flat.eval(0.1 * i as f64) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invariant_schedule_shape_n200() {
        let spec = ModelSpec::tfim(200, 1.0);
        let mode = spec.lowest_mode().unwrap();
        let tau_qsl = gap_profile(&spec.decompose().unwrap(), 10.0, 0.0)
            .unwrap()
            .tau_qsl;
        let tau = 2.0 * tau_qsl;
        let p = ControlProtocol::invariant(&mode, 10.0, 0.0, tau, 3, 1.0).unwrap();
        let samples = p.tabulate(2001);
        for w in samples.windows(2) {
            assert!(w[1][1] <= w[0][1] + 1e-12, "not monotone at t={}", w[0][0]);
        }
        // slow plateau near g_c ≈ 1 around the midpoint, fast variation near the ends
        let mid = p.eval(0.5 * tau);
        assert!((mid - 1.0).abs() < 0.05, "g(τ/2) = {mid}");
        let rate_mid = p.eval_rate(0.5 * tau).abs();
        let rate_early = p.eval_rate(0.1 * tau).abs();
        assert!(rate_early > 10.0 * rate_mid);
    }

    #[test]
    fn symmetric_schedule_is_antisymmetric_in_hz() {
        let mode = lz(0.4);
        let tau = 60.0;
        let p = ControlProtocol::invariant(&mode, 8.0, -8.0, tau, 3, 1.0).unwrap();
        for i in 1..100 {
            let t = tau * i as f64 / 100.0;
            let a = mode.hz(p.eval(t));
            let b = mode.hz(p.eval(tau - t));
            assert!((a + b).abs() < 1e-10, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn rates_match_finite_differences() {
        let spec = ModelSpec::tfim(60, 1.0);
        let mode = spec.lowest_mode().unwrap();
        let tau_qsl = gap_profile(&spec.decompose().unwrap(), 10.0, 0.0)
            .unwrap()
            .tau_qsl;
        let tau = 3.0 * tau_qsl;
        for p in [
            ControlProtocol::invariant(&mode, 10.0, 0.0, tau, 3, 1.0).unwrap(),
            ControlProtocol::invariant(&mode, 10.0, 0.0, tau, 5, 1.0).unwrap(),
            ControlProtocol::faquad(&mode, 10.0, 0.0, tau).unwrap(),
            ControlProtocol::linear(10.0, 0.0, tau).unwrap(),
        ] {
            let h = 1e-6 * tau;
            for i in 1..40 {
                let t = tau * (0.05 + 0.9 * i as f64 / 40.0);
                let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
                let exact = p.eval_rate(t);
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3),
                    "{}: t={t} fd={fd} exact={exact}",
                    p.family
                );
            }
        }
    }

    #[test]
    fn boundary_rate_law_k3() {
        let spec = ModelSpec::tfim(100, 1.0);
        let mode = spec.lowest_mode().unwrap();
        let taus = [40.0, 60.0, 90.0, 135.0, 200.0];
        let mut pts = Vec::new();
        for &tau in &taus {
            let p = ControlProtocol::invariant(&mode, 10.0, 1.0, tau, 3, 1.0).unwrap();
            let rate = p.eval_rate(0.0);
            let c = p.invariant_control().unwrap();
            let predicted = c.boundary_jet(false, 10.0);
            assert!(
                (rate - predicted).abs() < 1e-10 * predicted.abs(),
                "{rate} vs {predicted}"
            );
            pts.push((tau.ln(), rate.abs().ln()));
        }
        let slope = (pts[4].1 - pts[0].1) / (pts[4].0 - pts[0].0);
        assert!((slope + 3.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn boundary_jet_higher_orders() {
        // g(t) − g0 ≈ jet · t^{k−2}/(k−2)! near t = 0; the jet scales as τ^{−k}
        let mode = lz(1.0);
        for k in [4usize, 5] {
            let mut logs = Vec::new();
            for &tau in &[20.0, 40.0, 80.0] {
                let p = ControlProtocol::invariant(&mode, 3.0, -3.0, tau, k, 1.0).unwrap();
                let jet = p.invariant_control().unwrap().boundary_jet(false, 3.0);
                let eps = 1e-3 * tau;
                let c = p.invariant_control().unwrap();
                let g = eval_invariant_control(&c.ansatz, &mode, eps).unwrap();
                let fact: f64 = (1..=(k - 2)).map(|x| x as f64).product();
                let est = (g - 3.0) * fact / eps.powi(k as i32 - 2);
                assert!(
                    (est - jet).abs() < 0.05 * jet.abs(),
                    "k={k} tau={tau}: {est} vs {jet}"
                );
                logs.push((tau.ln(), jet.abs().ln()));
            }
            let slope = (logs[2].1 - logs[0].1) / (logs[2].0 - logs[0].0);
            assert!((slope + k as f64).abs() < 0.05, "k={k} slope {slope}");
        }
    }

    #[test]
    fn tau_min_matches_closed_form_symmetric() {
        for &(g0, delta) in &[(10.0, 0.1), (3.0, 0.7), (10.0, 0.0628)] {
            let mode = lz(delta);
            let a = build_fz(&mode, g0, -g0, 1.0, 3, 1.0).unwrap();
            let report = feasibility(&a, &mode);
            let closed = 15.0 * g0 / (4.0 * delta * (delta * delta + g0 * g0).sqrt());
            assert!(
                (report.tau_min - closed).abs() < 1e-3 * closed,
                "{} vs {closed}",
                report.tau_min
            );
        }
    }

    #[test]
    fn tau_min_about_1_2_tau_qsl_for_small_gap() {
        let delta = 0.01;
        let mode = lz(delta);
        let a = build_fz(&mode, 10.0, -10.0, 1.0, 3, 1.0).unwrap();
        let ratio = feasibility(&a, &mode).tau_min / (std::f64::consts::PI / delta);
        assert!((ratio - 15.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-3);
        assert!((ratio - 1.2).abs() < 0.05);
    }

    #[test]
    fn margin_tends_to_k_minus_max_fz_squared() {
        let mode = lz(0.3);
        let a = build_fz(&mode, 4.0, -2.0, 1e6, 3, 1.0).unwrap();
        let m = reality_margin(&a, mode.h_x);
        let max_f2 = a.fz0.powi(2).max(a.fz1.powi(2));
        assert!((m - (1.0 - max_f2)).abs() < 1e-9);
    }

    #[test]
    fn tau_min_bisection_matches_grid_scan_n200() {
        let spec = ModelSpec::tfim(200, 1.0);
        let mode = spec.lowest_mode().unwrap();
        let a = build_fz(&mode, 10.0, 0.0, 1.0, 3, 1.0).unwrap();
        let report = feasibility(&a, &mode);
        // independent route: τ_min = max_s |f'(s)| / (|h_x| √(K − f(s)²)) on a fine grid
        let n = 1_000_000;
        let scan = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                let f = a.s_derivative(0, s);
                a.s_derivative(1, s).abs() / (mode.h_x * (1.0 - f * f).sqrt())
            })
            .fold(0.0, f64::max);
        assert!(
            (report.tau_min - scan).abs() < 2e-6 * scan,
            "{} vs {scan}",
            report.tau_min
        );
        let tau_qsl = gap_profile(&spec.decompose().unwrap(), 10.0, 0.0)
            .unwrap()
            .tau_qsl;
        let ratio = report.tau_min / tau_qsl;
        assert!(ratio > 0.5 && ratio < 1.5, "tau_min/tau_qsl = {ratio}");
    }

    #[test]
    fn below_tau_min_is_non_real() {
        let mode = lz(0.1);
        let a = build_fz(&mode, 10.0, -10.0, 1.0, 3, 1.0).unwrap();
        let tau_min = feasibility(&a, &mode).tau_min;
        let err =
            ControlProtocol::invariant(&mode, 10.0, -10.0, 0.8 * tau_min, 3, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonRealControl { .. }));
        let short = a.with_tau(0.8 * tau_min);
        assert!(matches!(
            eval_invariant_control(&short, &mode, 0.4 * tau_min),
            Err(Error::NonRealControl { .. })
        ));
        assert!(ControlProtocol::invariant(&mode, 10.0, -10.0, 1.01 * tau_min, 3, 1.0).is_ok());
    }

    #[test]
    fn faquad_adiabaticity_is_constant() {
        let spec = ModelSpec::tfim(200, 1.0);
        let mode = spec.lowest_mode().unwrap();
        let tau = 120.0;
        let p = ControlProtocol::faquad(&mode, 10.0, 0.0, tau).unwrap();
        assert_eq!(p.eval(0.0), 10.0);
        assert_eq!(p.eval(tau), 0.0);
        let mu0 = p.faquad_control().unwrap().adiabaticity(tau);
        for i in 1..=100 {
            let t = tau * i as f64 / 101.0;
            let g = p.eval(t);
            let mu =
                (mode.h_x * p.eval_rate(t) * mode.hz_slope).abs() / (2.0 * mode.gap(g).powi(3));
            assert!((mu - mu0).abs() < 1e-6 * mu0, "t={t}: {mu} vs {mu0}");
        }
    }

    #[test]
    fn faquad_two_level_shape() {
        // h_z: 10 → −1 with h_x = 0.1: fast initial drop, long plateau near h_z = 0
        let mode = lz(0.1);
        let tau = 38.0;
        let p = ControlProtocol::faquad(&mode, 10.0, -1.0, tau).unwrap();
        assert!(p.eval(0.05 * tau) < 2.0);
        let plateau = (20..80)
            .filter(|&i| p.eval(tau * i as f64 / 100.0).abs() < 0.5)
            .count();
        assert!(plateau > 50, "{plateau}");
    }

    #[test]
    fn linear_ramp() {
        let p = ControlProtocol::linear(10.0, 0.0, 50.0).unwrap();
        assert_eq!(p.eval(25.0), 5.0);
        assert_eq!(p.eval_rate(3.0), -0.2);
        assert_eq!(p.eval_rate(40.0), -0.2);
        assert!(ControlProtocol::linear(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn parse_family() {
        assert_eq!(
            "faquad".parse::<ProtocolFamily>().unwrap(),
            ProtocolFamily::Faquad
        );
        assert!("krotov".parse::<ProtocolFamily>().is_err());
    }
}
