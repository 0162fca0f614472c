//! Adaptive Dormand–Prince 8(5,3) integration with 7th-order dense output.
//!
//! Coefficients and step-size control follow Hairer's DOP853, except that the
//! error is the max-norm of the fifth-order estimate. States are flat
//! `f64` slices; complex mode vectors are integrated through their interleaved
//! real view.

use num_complex::Complex64;
use thiserror::Error;

use crate::flow::Charges;
use crate::modes::{as_complex, as_complex_mut, as_real, ModeSpectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("step limit {steps} reached at t = {t}")]
    MaxSteps { t: f64, steps: usize },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on `|h|`.
    pub max_step: f64,
    /// Spacing of emitted samples; the end point is always emitted.
    pub sample_interval: f64,
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            sample_interval: 0.1,
            max_steps: 5_000_000,
            initial_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = dt;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |what: &str| Err(IntegrateError::InvalidConfig(what.to_string()));
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad("rel_tol must lie in (0, 1)");
        }
        if !(self.abs_tol > 0.0 && self.abs_tol < 1.0) {
            return bad("abs_tol must lie in (0, 1)");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample_interval must be positive and finite");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

mod tableau {
    pub const C: [f64; 16] = [
        0.0,
        0.526001519587677318785587544488e-1,
        0.789002279381515978178381316732e-1,
        0.118350341907227396726757197510,
        0.281649658092772603273242802490,
        0.333333333333333333333333333333,
        0.25,
        0.307692307692307692307692307692,
        0.651282051282051282051282051282,
        0.6,
        0.857142857142857142857142857142,
        1.0,
        1.0,
        0.1,
        0.2,
        0.777777777777777777777777777778,
    ];

    // Row i holds a_{i+1, 1..=i}; row 12 (stage 13) is the FSAL evaluation and is unused.
    pub const A: [&[f64]; 16] = [
        &[],
        &[5.26001519587677318785587544488e-2],
        &[1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2],
        &[2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2],
        &[
            2.41365134159266685502369798665e-1,
            0.0,
            -8.84549479328286085344864962717e-1,
            9.24834003261792003115737966543e-1,
        ],
        &[
            3.7037037037037037037037037037e-2,
            0.0,
            0.0,
            1.70828608729473871279604482173e-1,
            1.25467687566822425016691814123e-1,
        ],
        &[
            3.7109375e-2,
            0.0,
            0.0,
            1.70252211019544039314978060272e-1,
            6.02165389804559606850219397283e-2,
            -1.7578125e-2,
        ],
        &[
            3.70920001185047927108779319836e-2,
            0.0,
            0.0,
            1.70383925712239993810214054705e-1,
            1.07262030446373284651809199168e-1,
            -1.53194377486244017527936158236e-2,
            8.27378916381402288758473766002e-3,
        ],
        &[
            6.24110958716075717114429577812e-1,
            0.0,
            0.0,
            -3.36089262944694129406857109825,
            -8.68219346841726006818189891453e-1,
            2.75920996994467083049415600797e1,
            2.01540675504778934086186788979e1,
            -4.34898841810699588477366255144e1,
        ],
        &[
            4.77662536438264365890433908527e-1,
            0.0,
            0.0,
            -2.48811461997166764192642586468,
            -5.90290826836842996371446475743e-1,
            2.12300514481811942347288949897e1,
            1.52792336328824235832596922938e1,
            -3.32882109689848629194453265587e1,
            -2.03312017085086261358222928593e-2,
        ],
        &[
            -9.3714243008598732571704021658e-1,
            0.0,
            0.0,
            5.18637242884406370830023853209,
            1.09143734899672957818500254654,
            -8.14978701074692612513997267357,
            -1.85200656599969598641566180701e1,
            2.27394870993505042818970056734e1,
            2.49360555267965238987089396762,
            -3.0467644718982195003823669022,
        ],
        &[
            2.27331014751653820792359768449,
            0.0,
            0.0,
            -1.05344954667372501984066689879e1,
            -2.00087205822486249909675718444,
            -1.79589318631187989172765950534e1,
            2.79488845294199600508499808837e1,
            -2.85899827713502369474065508674,
            -8.87285693353062954433549289258,
            1.23605671757943030647266201528e1,
            6.43392746015763530355970484046e-1,
        ],
        &[],
        &[
            5.61675022830479523392909219681e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            2.53500210216624811088794765333e-1,
            -2.46239037470802489917441475441e-1,
            -1.24191423263816360469010140626e-1,
            1.5329179827876569731206322685e-1,
            8.20105229563468988491666602057e-3,
            7.56789766054569976138603589584e-3,
            -8.298e-3,
        ],
        &[
            3.18346481635021405060768473261e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            2.83009096723667755288322961402e-2,
            5.35419883074385676223797384372e-2,
            -5.49237485713909884646569340306e-2,
            0.0,
            0.0,
            -1.08347328697249322858509316994e-4,
            3.82571090835658412954920192323e-4,
            -3.40465008687404560802977114492e-4,
            1.41312443674632500278074618366e-1,
        ],
        &[
            -4.28896301583791923408573538692e-1,
            0.0,
            0.0,
            0.0,
            0.0,
            -4.69762141536116384314449447206,
            7.68342119606259904184240953878,
            4.06898981839711007970213554331,
            3.56727187455281109270669543021e-1,
            0.0,
            0.0,
            0.0,
            -1.39902416515901462129418009734e-3,
            2.9475147891527723389556272149,
            -9.15095847217987001081870187138,
        ],
    ];

    pub const B: [f64; 12] = [
        5.42937341165687622380535766363e-2,
        0.0,
        0.0,
        0.0,
        0.0,
        4.45031289275240888144113950566,
        1.89151789931450038304281599044,
        -5.8012039600105847814672114227,
        3.1116436695781989440891606237e-1,
        -1.52160949662516078556178806805e-1,
        2.01365400804030348374776537501e-1,
        4.47106157277725905176885569043e-2,
    ];

    pub const E: [f64; 12] = [
        0.1312004499419488073250102996e-1,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.1225156446376204440720569753e1,
        -0.4957589496572501915214079952,
        0.1664377182454986536961530415e1,
        -0.3503288487499736816886487290,
        0.3341791187130174790297318841,
        0.8192320648511571246570742613e-1,
        -0.2235530786388629525884427845e-1,
    ];

    pub const D: [[f64; 16]; 4] = [
        [
            -0.84289382761090128651353491142e1,
            0.0,
            0.0,
            0.0,
            0.0,
            0.56671495351937776962531783590,
            -0.30689499459498916912797304727e1,
            0.23846676565120698287728149680e1,
            0.21170345824450282767155149946e1,
            -0.87139158377797299206789907490,
            0.22404374302607882758541771650e1,
            0.63157877876946881815570249290,
            -0.88990336451333310820698117400e-1,
            0.18148505520854727256656404962e2,
            -0.91946323924783554000451984436e1,
            -0.44360363875948939664310572000e1,
        ],
        [
            0.10427508642579134603413151009e2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.24228349177525818288430175319e3,
            0.16520045171727028198505394887e3,
            -0.37454675472269020279518312152e3,
            -0.22113666853125306036270938578e2,
            0.77334326684722638389603898808e1,
            -0.30674084731089398182061213626e2,
            -0.93321305264302278729567221706e1,
            0.15697238121770843886131091075e2,
            -0.31139403219565177677282850411e2,
            -0.93529243588444783865713862664e1,
            0.35816841486394083752465898540e2,
        ],
        [
            0.19985053242002433820987653617e2,
            0.0,
            0.0,
            0.0,
            0.0,
            -0.38703730874935176555105901742e3,
            -0.18917813819516756882830838328e3,
            0.52780815920542364900561016686e3,
            -0.11573902539959630126141871134e2,
            0.68812326946963000169666922661e1,
            -0.10006050966910838403183860980e1,
            0.77771377980534432092869265740,
            -0.27782057523535084065932004339e1,
            -0.60196695231264120758267380846e2,
            0.84320405506677161018159903784e2,
            0.11992291136182789328035130030e2,
        ],
        [
            -0.25693933462703749003312586129e2,
            0.0,
            0.0,
            0.0,
            0.0,
            -0.15418974869023643374053993627e3,
            -0.23152937917604549567536039109e3,
            0.35763911791061412378285349910e3,
            0.93405324183624310003907691704e2,
            -0.37458323136451633156875139351e2,
            0.10409964950896230045147246184e3,
            0.29840293426660503123344363579e2,
            -0.43533456590011143754432175058e2,
            0.96324553959188282948394950600e2,
            -0.39177261675615439165231486172e2,
            -0.14972683625798562581422125276e3,
        ],
    ];
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const EXPO: f64 = 1.0 / 8.0;

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Step-by-step DOP853 integrator for `y' = f(t, y)`.
///
/// Each call to [`Dop853::step`] performs one accepted step and refreshes the
/// dense-output polynomial on `[t_prev, t]`.
pub struct Dop853<F> {
    f: F,
    cfg: IntegratorConfig,
    t: f64,
    t_end: f64,
    dir: f64,
    y: Vec<f64>,
    h: f64,
    // stages 1..=16; index 12 holds f(t + h, y_new)
    k: Vec<Vec<f64>>,
    cont: [Vec<f64>; 8],
    t_prev: f64,
    h_prev: f64,
    fac_old: f64,
    rejected_last: bool,
    steps: usize,
    evals: usize,
    scratch: Vec<f64>,
}

impl<F> Dop853<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(mut f: F, t0: f64, y0: &[f64], t_end: f64, cfg: &IntegratorConfig) -> Result<Self, IntegrateError> {
        cfg.validate()?;
        let dim = y0.len();
        let mut k = vec![vec![0.0; dim]; 16];
        f(t0, y0, &mut k[0]);
        if !all_finite(&k[0]) || !all_finite(y0) {
            return Err(IntegrateError::NonFinite { t: t0 });
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut s = Self {
            f,
            cfg: cfg.clone(),
            t: t0,
            t_end,
            dir,
            y: y0.to_vec(),
            h: 0.0,
            k,
            cont: std::array::from_fn(|_| vec![0.0; dim]),
            t_prev: t0,
            h_prev: 0.0,
            fac_old: 1e-4,
            rejected_last: false,
            steps: 0,
            evals: 1,
            scratch: vec![0.0; dim],
        };
        s.h = match cfg.initial_step {
            Some(h) => dir * h.abs().min(cfg.max_step),
            None => s.initial_step(),
        };
        // the dense polynomial starts out as the constant initial state
        s.cont[0].copy_from_slice(y0);
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Derivative at the current point.
    pub fn dy(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn evaluations(&self) -> usize {
        self.evals
    }

    pub fn finished(&self) -> bool {
        self.t == self.t_end
    }

    fn scale(&self, i: usize, y_new: f64) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs().max(y_new.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let dim = self.y.len();
        if dim == 0 {
            return self.dir * (self.t_end - self.t).abs().max(1e-6);
        }
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..dim {
            let sk = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs();
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.k[0][i] / sk).powi(2);
        }
        let mut h0 = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
        h0 = h0.min(self.cfg.max_step);
        let h0 = self.dir * h0;
        for i in 0..dim {
            self.scratch[i] = self.y[i] + h0 * self.k[0][i];
        }
        let mut f1 = vec![0.0; dim];
        (self.f)(self.t + h0, &self.scratch, &mut f1);
        self.evals += 1;
        let mut d2 = 0.0;
        for i in 0..dim {
            let sk = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs();
            d2 += ((f1[i] - self.k[0][i]) / sk).powi(2);
        }
        let d2 = d2.sqrt() / h0.abs();
        let d1 = d1.sqrt();
        let h1 = if d1.max(d2) <= 1e-15 {
            1e-6_f64.max(h0.abs() * 1e-3)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        let h = (100.0 * h0.abs()).min(h1).min(self.cfg.max_step);
        if h.is_finite() && h > 0.0 {
            self.dir * h
        } else {
            self.dir * 1e-6
        }
    }

    /// Fills stage `s` (0-based) from stages `0..s` at step size `h`.
    fn stage(&mut self, s: usize, h: f64) -> bool {
        let row = tableau::A[s];
        let dim = self.y.len();
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, a) in row.iter().enumerate() {
                if *a != 0.0 {
                    acc += a * self.k[j][i];
                }
            }
            self.scratch[i] = self.y[i] + h * acc;
        }
        let t = self.t + tableau::C[s] * h;
        let (_, tail) = self.k.split_at_mut(s);
        (self.f)(t, &self.scratch, &mut tail[0]);
        self.evals += 1;
        all_finite(&self.k[s])
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self) -> Result<(), IntegrateError> {
        if self.finished() {
            return Ok(());
        }
        let dim = self.y.len();
        let mut y_new = vec![0.0; dim];
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(IntegrateError::MaxSteps {
                    t: self.t,
                    steps: self.steps,
                });
            }
            if 0.1 * self.h.abs() <= f64::EPSILON * self.t.abs() || self.h == 0.0 {
                return Err(IntegrateError::StepSizeUnderflow { t: self.t, h: self.h });
            }
            let mut last = false;
            if (self.t + 1.01 * self.h - self.t_end) * self.dir > 0.0 {
                self.h = self.t_end - self.t;
                last = true;
            }
            let h = self.h;
            self.steps += 1;

            let mut finite = true;
            for s in 1..12 {
                if !self.stage(s, h) {
                    finite = false;
                    break;
                }
            }
            if !finite {
                // treat as a failed step; blow-ups shrink the step until underflow
                self.h *= 0.1;
                self.rejected_last = true;
                continue;
            }

            // max-norm of the fifth-order estimate: every component meets its tolerance
            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut b = 0.0;
                let mut e = 0.0;
                for j in 0..12 {
                    b += tableau::B[j] * self.k[j][i];
                    e += tableau::E[j] * self.k[j][i];
                }
                y_new[i] = self.y[i] + h * b;
                err = err.max((h * e).abs() / self.scale(i, y_new[i]));
            }
            if err.is_nan() {
                err = f64::INFINITY;
            }

            let fac11 = err.powf(EXPO);
            let fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac11 / SAFETY));
            let mut h_new = h / fac;

            if err <= 1.0 && err.is_finite() {
                self.fac_old = err.max(1e-4);
                let t_new = if last { self.t_end } else { self.t + h };
                (self.f)(t_new, &y_new, &mut self.k[12]);
                self.evals += 1;
                if !all_finite(&self.k[12]) {
                    return Err(IntegrateError::NonFinite { t: t_new });
                }
                self.build_dense(h, &y_new);

                if h_new.abs() > self.cfg.max_step {
                    h_new = self.dir * self.cfg.max_step;
                }
                if self.rejected_last {
                    h_new = self.dir * h_new.abs().min(h.abs());
                }
                self.rejected_last = false;

                let fsal = std::mem::take(&mut self.k[12]);
                self.k[12] = std::mem::replace(&mut self.k[0], fsal);
                self.y.copy_from_slice(&y_new);
                self.t_prev = self.t;
                self.h_prev = h;
                self.t = t_new;
                self.h = h_new;
                return Ok(());
            }
            let denom = (1.0 / FAC_MIN).min(fac11 / SAFETY);
            self.h = if denom.is_finite() { h / denom } else { h * FAC_MIN };
            self.rejected_last = true;
        }
    }

    fn build_dense(&mut self, h: f64, y_new: &[f64]) {
        let dim = self.y.len();
        for i in 0..dim {
            let ydiff = y_new[i] - self.y[i];
            let bspl = h * self.k[0][i] - ydiff;
            self.cont[0][i] = self.y[i];
            self.cont[1][i] = ydiff;
            self.cont[2][i] = bspl;
            self.cont[3][i] = ydiff - h * self.k[12][i] - bspl;
        }
        // three extra stages for the 7th-order interpolant
        for s in 13..16 {
            let row = tableau::A[s];
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate() {
                    if *a != 0.0 {
                        acc += a * self.k[j][i];
                    }
                }
                self.scratch[i] = self.y[i] + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            (self.f)(self.t + tableau::C[s] * h, &self.scratch, &mut tail[0]);
            self.evals += 1;
        }
        for (r, drow) in tableau::D.iter().enumerate() {
            let out = &mut self.cont[4 + r];
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, d) in drow.iter().enumerate() {
                    if *d != 0.0 {
                        acc += d * self.k[j][i];
                    }
                }
                out[i] = h * acc;
            }
        }
    }

    /// Dense-output value at `t` inside the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        if self.h_prev == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = (t - self.t_prev) / self.h_prev;
        let th1 = 1.0 - th;
        let c = &self.cont;
        for (i, o) in out.iter_mut().enumerate() {
            let conpar = c[4][i] + th * (c[5][i] + th1 * (c[6][i] + th * c[7][i]));
            *o = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * conpar)));
        }
    }

    /// Start of the last accepted step.
    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }
}

/// Sample times `t0 + k·dt` toward `t_end`, with `t_end` itself always last.
pub fn sample_times(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let span = t_end - t0;
    let dir = span.signum();
    let mut out = vec![t0];
    if span == 0.0 {
        return out;
    }
    let count = (span.abs() / dt).floor() as usize;
    let tiny = 1e-12 * span.abs().max(1.0);
    for k in 1..=count {
        let t = t0 + dir * k as f64 * dt;
        if (t_end - t).abs() > tiny {
            out.push(t);
        }
    }
    out.push(t_end);
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` and hands every sample to `observe`.
pub fn integrate_real<F, O>(
    f: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<(), IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let mut solver = Dop853::new(f, t0, y0, t_end, cfg)?;
    let times = sample_times(t0, t_end, cfg.sample_interval);
    let mut buf = vec![0.0; y0.len()];
    observe(t0, y0);
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    for &ts in &times[1..] {
        while (solver.t() - ts) * dir < 0.0 {
            solver.step()?;
        }
        if solver.t() == ts {
            observe(ts, solver.y());
        } else {
            solver.dense(ts, &mut buf);
            observe(ts, &buf);
        }
    }
    Ok(())
}

/// Sampled solution with a conserved-quantity log per sample.
///
/// `times` is monotone in the direction of integration, so a backward run
/// stores decreasing times.
#[derive(Clone, Debug)]
pub struct Trajectory<S, C> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub charge_log: Vec<C>,
}

impl<S, C> Default for Trajectory<S, C> {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            charge_log: Vec::new(),
        }
    }
}

impl<S, C> Trajectory<S, C> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: S, charges: C) {
        self.times.push(t);
        self.states.push(state);
        self.charge_log.push(charges);
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }
}

/// Floor for the denominator of relative drifts, so vanishing charges stay finite.
pub const DRIFT_FLOOR: f64 = 1e-12;

/// `max_t |C(t) - C(0)| / max(|C(0)|, floor)` for every logged charge.
pub fn conservation_drift<S, C: Charges>(traj: &Trajectory<S, C>) -> Vec<(&'static str, f64)> {
    let Some(first) = traj.charge_log.first() else {
        return Vec::new();
    };
    let base = first.components();
    let mut out: Vec<(&'static str, f64)> = base.iter().map(|(n, _)| (*n, 0.0)).collect();
    for c in &traj.charge_log[1..] {
        for ((slot, (_, c0)), (_, v)) in out.iter_mut().zip(&base).zip(c.components()) {
            let d = (v - c0).abs() / c0.abs().max(DRIFT_FLOOR);
            if d > slot.1 || d.is_nan() {
                slot.1 = d;
            }
        }
    }
    out
}

/// Largest entry of [`conservation_drift`].
pub fn max_drift<S, C: Charges>(traj: &Trajectory<S, C>) -> f64 {
    conservation_drift(traj).iter().map(|(_, d)| *d).fold(0.0, f64::max)
}

/// Integrates an autonomous complex system `α̇ = rhs(α)` over mode spectra.
pub fn integrate<F, G, C>(
    mut rhs: F,
    state0: &ModeSpectrum,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut charges: G,
) -> Result<Trajectory<ModeSpectrum, C>, IntegrateError>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
    G: FnMut(&ModeSpectrum) -> C,
{
    let mut traj = Trajectory::default();
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| rhs(as_complex(y), as_complex_mut(dy));
    integrate_real(f, as_real(state0.amps()), 0.0, t_end, cfg, |t, y| {
        let s = ModeSpectrum::from_vec_unchecked(as_complex(y).to_vec());
        let c = charges(&s);
        traj.push(t, s, c);
    })?;
    Ok(traj)
}

/// Final state only, without sampling.
pub fn integrate_to<F>(mut rhs: F, state0: &ModeSpectrum, t_end: f64, cfg: &IntegratorConfig) -> Result<ModeSpectrum, IntegrateError>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| rhs(as_complex(y), as_complex_mut(dy));
    let mut solver = Dop853::new(f, 0.0, as_real(state0.amps()), t_end, cfg)?;
    while !solver.finished() {
        solver.step()?;
    }
    Ok(ModeSpectrum::from_vec_unchecked(as_complex(solver.y()).to_vec()))
}

/// Locates a zero of `g(t, y)` between consecutive dense samples by bisection
/// on the interpolant of the last step.
pub fn refine_crossing<F, G>(solver: &Dop853<F>, mut g: G, tol: f64) -> Option<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> f64,
{
    let mut buf = vec![0.0; solver.y().len()];
    let (mut lo, mut hi) = (solver.t_prev(), solver.t());
    solver.dense(lo, &mut buf);
    let mut glo = g(lo, &buf);
    let ghi = g(hi, solver.y());
    if glo == 0.0 {
        return Some(lo);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        solver.dense(mid, &mut buf);
        let gm = g(mid, &buf);
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{charges, flow_rhs_into, ChargeSet};

    #[test]
    fn harmonic_oscillator_period() {
        let cfg = IntegratorConfig::with_tol(1e-12).sample_interval(0.5);
        let mut last = vec![];
        integrate_real(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            0.0,
            2.0 * std::f64::consts::PI,
            &cfg,
            |_, y| last = y.to_vec(),
        )
        .unwrap();
        assert!((last[0] - 1.0).abs() < 1e-10 && last[1].abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let cfg = IntegratorConfig::with_tol(1e-11).sample_interval(0.013);
        let mut worst: f64 = 0.0;
        integrate_real(|_t, y, dy| dy[0] = y[0], &[1.0], 0.0, 3.0, &cfg, |t, y| {
            worst = worst.max((y[0] - t.exp()).abs() / t.exp());
        })
        .unwrap();
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos t, y = sin t
        let cfg = IntegratorConfig::with_tol(1e-12);
        let mut solver = Dop853::new(|t, _y, dy: &mut [f64]| dy[0] = t.cos(), 0.0, &[0.0], 4.0, &cfg).unwrap();
        while !solver.finished() {
            solver.step().unwrap();
        }
        assert!((solver.y()[0] - 4f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn one_mode_flow_phase() {
        let s = ModeSpectrum::from_real(&[1.0]);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let end = integrate_to(flow_rhs_into, &s, std::f64::consts::PI, &cfg).unwrap();
        assert!((end[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = ModeSpectrum::zeros(4);
        let traj = integrate(flow_rhs_into, &s, 2.0, &IntegratorConfig::default(), charges).unwrap();
        assert!(traj.states.iter().all(|st| st.max_abs() == 0.0));
        assert_eq!(max_drift(&traj), 0.0);
    }

    #[test]
    fn backward_run_has_decreasing_times() {
        let s = ModeSpectrum::from_real(&[0.5, 0.2]);
        let cfg = IntegratorConfig::default().sample_interval(0.25);
        let traj = integrate(flow_rhs_into, &s, -1.0, &cfg, charges).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*traj.times.last().unwrap(), -1.0);
    }

    #[test]
    fn single_sample_drift_is_zero() {
        let mut traj: Trajectory<(), ChargeSet> = Trajectory::default();
        traj.push(0.0, (), ChargeSet { q: 1.0, e: 2.0, h: 3.0 });
        assert_eq!(max_drift(&traj), 0.0);
    }

    #[test]
    fn sample_grid() {
        assert_eq!(sample_times(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(sample_times(0.0, -0.5, 0.2), vec![0.0, -0.2, -0.4, -0.5]);
        assert_eq!(sample_times(2.0, 2.0, 0.1), vec![2.0]);
    }

    #[test]
    fn blowup_is_reported() {
        // y' = y², y(0)=1 blows up at t = 1
        let cfg = IntegratorConfig::with_tol(1e-8);
        let r = integrate_real(|_t, y, dy| dy[0] = y[0] * y[0], &[1.0], 0.0, 2.0, &cfg, |_, _| {});
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = IntegratorConfig { rel_tol: 0.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(IntegrateError::InvalidConfig(_))));
    }

    #[test]
    fn crossing_refinement() {
        let cfg = IntegratorConfig::with_tol(1e-12);
        let mut solver = Dop853::new(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            3.0,
            &cfg,
        )
        .unwrap();
        let mut found = None;
        while !solver.finished() && found.is_none() {
            solver.step().unwrap();
            found = refine_crossing(&solver, |_, y| y[0], 1e-13);
        }
        assert!((found.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
