// SPDX-License-Identifier: Apache-2.0

//! Adaptive explicit Runge-Kutta integration.
//!
//! Dormand-Prince 8(5,3) with Hairer's combined 5th/3rd order error
//! estimate and a PI step-size controller. The state is a flat slice of
//! real or complex components, so the same integrator drives two-level
//! amplitudes, Bloch vectors, BdG coefficient matrices and dense
//! many-body state vectors.

#![allow(clippy::excessive_precision)] // tableau digits as published

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A state component the integrator can combine and measure.
pub trait Component:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn magnitude(self) -> f64;
}

impl Component for f64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Component for Complex64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Local error tolerance, mixed relative/absolute per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }

    pub fn halved(self) -> Self {
        Self {
            rtol: 0.5 * self.rtol,
            atol: 0.5 * self.atol,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::invalid(
                "rtol",
                format!("must be positive, got {}", self.rtol),
            ));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::invalid(
                "atol",
                format!("must be positive, got {}", self.atol),
            ));
        }
        Ok(())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-14)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Steps below this fraction of the integration span are reported as underflow.
pub const STEP_UNDERFLOW_FRACTION: f64 = 1e-14;
const DEFAULT_MAX_STEPS: usize = 200_000_000;

const STAGES: usize = 12;

const C: [f64; STAGES] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

// Lower-triangular stage matrix; row i holds a_{i+1, 1..=i}.
const A: [[f64; STAGES - 1]; STAGES] = [
    [0.0; 11],
    [
        5.26001519587677318785587544488E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        1.97250569845378994544595329183E-2,
        5.91751709536136983633785987549E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.95875854768068491816892993775E-2,
        0.0,
        8.87627564304205475450678981324E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.41365134159266685502369798665E-1,
        0.0,
        -8.84549479328286085344864962717E-1,
        9.24834003261792003115737966543E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.7037037037037037037037037037E-2,
        0.0,
        0.0,
        1.70828608729473871279604482173E-1,
        1.25467687566822425016691814123E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.7109375E-2,
        0.0,
        0.0,
        1.70252211019544039314978060272E-1,
        6.02165389804559606850219397283E-2,
        -1.7578125E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.70920001185047927108779319836E-2,
        0.0,
        0.0,
        1.70383925712239993810214054705E-1,
        1.07262030446373284651809199168E-1,
        -1.53194377486244017527936158236E-2,
        8.27378916381402288758473766002E-3,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        6.24110958716075717114429577812E-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825E0,
        -8.68219346841726006818189891453E-1,
        2.75920996994467083049415600797E1,
        2.01540675504778934086186788979E1,
        -4.34898841810699588477366255144E1,
        0.0,
        0.0,
        0.0,
    ],
    [
        4.77662536438264365890433908527E-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468E0,
        -5.90290826836842996371446475743E-1,
        2.12300514481811942347288949897E1,
        1.52792336328824235832596922938E1,
        -3.32882109689848629194453265587E1,
        -2.03312017085086261358222928593E-2,
        0.0,
        0.0,
    ],
    [
        -9.3714243008598732571704021658E-1,
        0.0,
        0.0,
        5.18637242884406370830023853209E0,
        1.09143734899672957818500254654E0,
        -8.14978701074692612513997267357E0,
        -1.85200656599969598641566180701E1,
        2.27394870993505042818970056734E1,
        2.49360555267965238987089396762E0,
        -3.0467644718982195003823669022E0,
        0.0,
    ],
    [
        2.27331014751653820792359768449E0,
        0.0,
        0.0,
        -1.05344954667372501984066689879E1,
        -2.00087205822486249909675718444E0,
        -1.79589318631187989172765950534E1,
        2.79488845294199600508499808837E1,
        -2.85899827713502369474065508674E0,
        -8.87285693353062954433549289258E0,
        1.23605671757943030647266201528E1,
        6.43392746015763530355970484046E-1,
    ],
];

const B: [f64; STAGES] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

// 3rd order embedded weights on stages 1, 9 and 12.
const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

// 5th order error weights (difference to the 8th order solution).
const E5: [f64; STAGES] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const PI_BETA: f64 = 0.04;
const ORDER: f64 = 8.0;

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` in place.
pub fn integrate<T, F>(rhs: F, t0: f64, t1: f64, y: &mut [T], tol: Tolerance) -> Result<StepStats>
where
    T: Component,
    F: FnMut(f64, &[T], &mut [T]),
{
    integrate_observed(rhs, t0, t1, y, tol, |_, _| Ok(()))
}

/// Like [`integrate`], calling `observe(t, y)` after every accepted step.
/// An error returned by the observer aborts the integration.
pub fn integrate_observed<T, F, O>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y: &mut [T],
    tol: Tolerance,
    mut observe: O,
) -> Result<StepStats>
where
    T: Component,
    F: FnMut(f64, &[T], &mut [T]),
    O: FnMut(f64, &[T]) -> Result<()>,
{
    tol.validate()?;
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span == 0.0 || y.is_empty() {
        return Ok(stats);
    }
    if !(span > 0.0) {
        return Err(Error::invalid(
            "t1",
            format!("must exceed t0 (t0 = {t0}, t1 = {t1})"),
        ));
    }

    let n = y.len();
    let mut k: Vec<Vec<T>> = (0..STAGES).map(|_| vec![T::default(); n]).collect();
    let mut y_stage = vec![T::default(); n];
    let mut y_new = vec![T::default(); n];
    let mut f_new = vec![T::default(); n];

    let h_max = span;
    let min_step = STEP_UNDERFLOW_FRACTION * span;

    rhs(t0, y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(&mut rhs, t0, y, &k[0], &mut y_stage, &mut f_new, h_max, tol);
    stats.evaluations += 1;

    let expo = 1.0 / ORDER - PI_BETA * 0.2;
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut t = t0;

    loop {
        if h < min_step {
            return Err(Error::StepUnderflow { t, h });
        }
        if stats.accepted + stats.rejected >= DEFAULT_MAX_STEPS {
            return Err(Error::TooManySteps {
                t,
                max_steps: DEFAULT_MAX_STEPS,
            });
        }
        let mut last = false;
        if t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }

        for s in 1..STAGES {
            let row = &A[s];
            for i in 0..n {
                let mut acc = T::default();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = row[j];
                    if a != 0.0 {
                        acc = acc + kj[i] * a;
                    }
                }
                y_stage[i] = y[i] + acc * h;
            }
            rhs(t + C[s] * h, &y_stage, &mut k[s]);
        }
        stats.evaluations += STAGES - 1;

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let mut incr = T::default();
            let mut e5 = T::default();
            for s in 0..STAGES {
                if B[s] != 0.0 {
                    incr = incr + k[s][i] * B[s];
                }
                if E5[s] != 0.0 {
                    e5 = e5 + k[s][i] * E5[s];
                }
            }
            let e3 = incr - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
            y_new[i] = y[i] + incr * h;
            let sk = tol.atol + tol.rtol * y[i].magnitude().max(y_new[i].magnitude());
            let r5 = e5.magnitude() / sk;
            let r3 = e3.magnitude() / sk;
            err5 += r5 * r5;
            err3 += r3 * r3;
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * (1.0 / (n as f64 * deno)).sqrt();

        let fac11 = err.powf(expo);
        let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if err <= 1.0 {
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            rhs(t, y, &mut f_new);
            stats.evaluations += 1;
            std::mem::swap(&mut k[0], &mut f_new);
            observe(t, y)?;
            if last {
                return Ok(stats);
            }
            h_new = h_new.min(h_max);
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
        } else {
            stats.rejected += 1;
            h_new = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            rejected_last = true;
        }
        h = h_new;
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<T, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[T],
    f0: &[T],
    y1: &mut [T],
    f1: &mut [T],
    h_max: f64,
    tol: Tolerance,
) -> f64
where
    T: Component,
    F: FnMut(f64, &[T], &mut [T]),
{
    let scale = |v: T| tol.atol + tol.rtol * v.magnitude();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for (&yi, &fi) in y0.iter().zip(f0) {
        let sk = scale(yi);
        dnf += (fi.magnitude() / sk).powi(2);
        dny += (yi.magnitude() / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max);
    for i in 0..y0.len() {
        y1[i] = y0[i] + f0[i] * h;
    }
    rhs(t0 + h, y1, f1);
    let mut der2 = 0.0;
    for i in 0..y0.len() {
        der2 += ((f1[i] - f0[i]).magnitude() / scale(y0[i])).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / ORDER)
    };
    (100.0 * h).min(h1).min(h_max)
}
