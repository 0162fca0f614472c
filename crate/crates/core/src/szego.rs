//! The cubic Szegő equation `i α̇_n = Σ_j Σ_{k≤n+j} conj(α_j) α_k α_{n+j-k}`.
//!
//! Same truncation convention as the conformal flow: terms touching a mode
//! outside the window are dropped.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::flow::Charges;
use crate::genfunc::RationalGenFn;
use crate::integrator::{integrate, IntegrateError, IntegratorConfig, Trajectory};
use crate::modes::ModeSpectrum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Window size above which the FFT path is used by default.
pub const FFT_THRESHOLD: usize = 48;

/// `P(s) = Σ_{k+m=s} α_k α_m`, `s ≤ 2N-2`.
fn cauchy_square(a: &[Complex64]) -> Vec<Complex64> {
    let len = a.len();
    let mut p = vec![ZERO; 2 * len - 1];
    for (k, x) in a.iter().enumerate() {
        for (m, y) in a.iter().enumerate() {
            p[k + m] += x * y;
        }
    }
    p
}

/// `T_n = Σ_j conj(α_j) P(n+j)` by direct summation.
pub fn szego_sum_reference(state: &ModeSpectrum) -> Vec<Complex64> {
    let a = state.amps();
    if a.is_empty() {
        return Vec::new();
    }
    let p = cauchy_square(a);
    (0..a.len())
        .map(|n| a.iter().enumerate().map(|(j, aj)| aj.conj() * p[n + j]).sum())
        .collect()
}

/// FFT evaluation of [`szego_sum_reference`] with reusable plans and buffers.
pub struct SzegoFft {
    len: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf_a: Vec<Complex64>,
    buf_p: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SzegoFft {
    pub fn new(len: usize) -> Self {
        // no wrap-around for either the square or the correlation once size ≥ 2N - 1
        let size = (2 * len.max(1) - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            len,
            size,
            forward,
            inverse,
            buf_a: vec![ZERO; size],
            buf_p: vec![ZERO; size],
            scratch: vec![ZERO; scratch_len],
        }
    }

    /// Writes `T_n` for the first `len` modes of `a` into `out`.
    pub fn sum_into(&mut self, a: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(a.len(), self.len);
        if self.len == 0 {
            return;
        }
        self.buf_a.fill(ZERO);
        self.buf_a[..self.len].copy_from_slice(a);
        self.forward.process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let inv = 1.0 / self.size as f64;
        // P = IFFT(Â²); the correlation with conj(α) is then P̂ · conj(Â)
        for (p, x) in self.buf_p.iter_mut().zip(&self.buf_a) {
            *p = x * x;
        }
        self.inverse.process_with_scratch(&mut self.buf_p, &mut self.scratch);
        for v in self.buf_p.iter_mut().skip(2 * self.len - 1) {
            *v = ZERO;
        }
        for v in self.buf_p.iter_mut() {
            *v *= inv;
        }
        self.forward.process_with_scratch(&mut self.buf_p, &mut self.scratch);
        for (p, x) in self.buf_p.iter_mut().zip(&self.buf_a) {
            *p *= x.conj();
        }
        self.inverse.process_with_scratch(&mut self.buf_p, &mut self.scratch);
        for (o, v) in out.iter_mut().zip(&self.buf_p) {
            *o = v * inv;
        }
    }

    /// `α̇ = -i T` into `out`.
    pub fn rhs_into(&mut self, a: &[Complex64], out: &mut [Complex64]) {
        self.sum_into(a, out);
        for v in out.iter_mut() {
            *v *= -I;
        }
    }
}

pub fn szego_rhs_reference(state: &ModeSpectrum) -> ModeSpectrum {
    let t = szego_sum_reference(state);
    ModeSpectrum::from_vec_unchecked(t.into_iter().map(|v| -I * v).collect())
}

pub fn szego_rhs_fft(state: &ModeSpectrum) -> ModeSpectrum {
    let mut out = vec![ZERO; state.truncation()];
    SzegoFft::new(state.truncation()).rhs_into(state.amps(), &mut out);
    ModeSpectrum::from_vec_unchecked(out)
}

/// `α̇_n = -i T_n`; direct summation for small windows, FFT otherwise.
pub fn szego_rhs(state: &ModeSpectrum) -> ModeSpectrum {
    if state.truncation() <= FFT_THRESHOLD {
        szego_rhs_reference(state)
    } else {
        szego_rhs_fft(state)
    }
}

/// Mass, momentum and Hamiltonian of the Szegő flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SzegoCharges {
    /// `Σ |α_n|²`
    pub m: f64,
    /// `Σ n |α_n|²`
    pub p: f64,
    /// `Σ_s |Σ_{k+m=s} α_k α_m|²`
    pub h: f64,
}

impl Charges for SzegoCharges {
    fn components(&self) -> Vec<(&'static str, f64)> {
        vec![("M", self.m), ("P", self.p), ("H", self.h)]
    }
}

pub fn szego_charges(state: &ModeSpectrum) -> SzegoCharges {
    let m = state.iter().map(|a| a.norm_sqr()).sum();
    let p = state.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum();
    let h = if state.truncation() == 0 {
        0.0
    } else if state.truncation() <= FFT_THRESHOLD {
        cauchy_square(state.amps()).iter().map(|v| v.norm_sqr()).sum()
    } else {
        let t = {
            let mut out = vec![ZERO; state.truncation()];
            SzegoFft::new(state.truncation()).sum_into(state.amps(), &mut out);
            out
        };
        state.iter().zip(&t).map(|(a, tn)| (a.conj() * tn).re).sum()
    };
    SzegoCharges { m, p, h }
}

/// Evolves mode-space data, with charges logged at every sample.
pub fn evolve_szego(
    state0: &ModeSpectrum,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> std::result::Result<Trajectory<ModeSpectrum, SzegoCharges>, IntegrateError> {
    let len = state0.truncation();
    if len <= FFT_THRESHOLD {
        let rhs = |y: &[Complex64], dy: &mut [Complex64]| {
            let p = cauchy_square(y);
            for (n, d) in dy.iter_mut().enumerate() {
                let t: Complex64 = y.iter().enumerate().map(|(j, aj)| aj.conj() * p[n + j]).sum();
                *d = -I * t;
            }
        };
        if len == 0 {
            return integrate(|_, _| {}, state0, t_end, cfg, szego_charges);
        }
        integrate(rhs, state0, t_end, cfg, szego_charges)
    } else {
        let mut fft = SzegoFft::new(len);
        integrate(|y, dy| fft.rhs_into(y, dy), state0, t_end, cfg, szego_charges)
    }
}

/// `u(z) = (b + a z)/(1 - p z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SzegoPoleState {
    pub a: Complex64,
    pub b: Complex64,
    pub p: Complex64,
}

impl SzegoPoleState {
    pub fn new(a: Complex64, b: Complex64, p: Complex64) -> Result<Self> {
        if !(p.norm() < 1.0) {
            return Err(Error::domain(format!("|p| = {} must be < 1", p.norm())));
        }
        Ok(Self { a, b, p })
    }

    pub fn real(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0), Complex64::new(p, 0.0))
    }

    /// `α_0 = b`, `α_n = (a + b p) p^{n-1}`.
    pub fn lift(&self, truncation: usize) -> ModeSpectrum {
        let mut amps = Vec::with_capacity(truncation);
        let mut v = self.a + self.b * self.p;
        for n in 0..truncation {
            if n == 0 {
                amps.push(self.b);
            } else {
                amps.push(v);
                v *= self.p;
            }
        }
        ModeSpectrum::from_vec_unchecked(amps)
    }

    /// Reads `(a, b, p)` back from the first three modes of a lifted state.
    pub fn from_modes(state: &ModeSpectrum) -> Result<Self> {
        let (a0, a1, a2) = (state.get(0), state.get(1), state.get(2));
        if a1.norm() == 0.0 {
            return Err(Error::domain("mode 1 vanishes; the pole parameter is undetermined"));
        }
        let p = a2 / a1;
        Self::new(a1 - a0 * p, a0, p)
    }

    /// `(M, P)` in closed form.
    pub fn charges(&self) -> (f64, f64) {
        let r = self.p.norm_sqr();
        let c = (self.a + self.b * self.p).norm_sqr();
        (self.b.norm_sqr() + c / (1.0 - r), c / (1.0 - r).powi(2))
    }

    /// Reduced equations `iȧ = Ma`, `iḃ = (M+P)b + P a p̄`, `iṗ = Mp + a b̄`.
    pub fn rates(&self) -> [Complex64; 3] {
        let (m, p) = self.charges();
        [
            -I * self.a * m,
            -I * (self.b * (m + p) + self.a * self.p.conj() * p),
            -I * (self.p * m + self.a * self.b.conj()),
        ]
    }
}

/// Mode energies of a single-pole state from `(M, P)` and `|p|²`.
pub fn pole_mass_spectrum(m: f64, p: f64, rho: f64, truncation: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(truncation);
    let mut rn = 1.0;
    for n in 0..truncation {
        if n == 0 {
            out.push(m - p * (1.0 - rho));
        } else {
            out.push(p * (1.0 - rho).powi(2) * rn);
            rn *= rho;
        }
    }
    out
}

/// `sin(ωt)/ω`, continuous through `ω = 0`.
fn sinc_t(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-4 {
        t * (1.0 - x * x / 6.0)
    } else {
        x.sin() / omega
    }
}

/// Closed-form single-pole evolution from real initial data.
pub fn single_pole_solution(a0: f64, b0: f64, p0: f64, t: f64) -> Result<SzegoPoleState> {
    let init = SzegoPoleState::real(a0, b0, p0)?;
    let (m, pp) = init.charges();
    let omega = single_pole_omega(a0, b0, p0)?;
    let (c, s) = ((omega * t).cos(), sinc_t(omega, t));
    let a = Complex64::new(a0, 0.0) * Complex64::from_polar(1.0, -m * t);
    let b = (Complex64::new(b0 * c, 0.0) - I * (b0 * (m + pp) + 2.0 * a0 * p0 * pp) / 2.0 * s)
        * Complex64::from_polar(1.0, -(m + pp) * t / 2.0);
    let p = (Complex64::new(p0 * c, 0.0) - I * (p0 * (m + pp) + 2.0 * a0 * b0) / 2.0 * s)
        * Complex64::from_polar(1.0, -(m - pp) * t / 2.0);
    Ok(SzegoPoleState { a, b, p })
}

/// `ω = ½((M+P)² - 4 P a₀²)^{1/2}`.
pub fn single_pole_omega(a0: f64, b0: f64, p0: f64) -> Result<f64> {
    let (m, p) = SzegoPoleState::real(a0, b0, p0)?.charges();
    Ok(0.5 * ((m + p).powi(2) - 4.0 * p * a0 * a0).max(0.0).sqrt())
}

/// Numerically integrates the three reduced pole equations.
pub fn evolve_pole(
    s0: &SzegoPoleState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<SzegoPoleState, ()>> {
    let mut traj = Trajectory::default();
    let y0 = ModeSpectrum::from_vec_unchecked(vec![s0.a, s0.b, s0.p]);
    let inner = integrate(
        |y, dy| {
            let r = SzegoPoleState { a: y[0], b: y[1], p: y[2] }.rates();
            dy.copy_from_slice(&r);
        },
        &y0,
        t_end,
        cfg,
        |_| (),
    )?;
    for (t, s) in inner.times.iter().zip(&inner.states) {
        traj.push(*t, SzegoPoleState { a: s[0], b: s[1], p: s[2] }, ());
    }
    Ok(traj)
}

/// Two-mode data `a₀ = 1, b₀ = 2ε, p₀ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeInstability {
    pub omega: f64,
    /// `sup_t |p(t)| = (1+ε²)^{-1/2}`
    pub sup_p: f64,
    /// `sup_t |α_n(t)|²` for the first modes.
    pub envelope: Vec<f64>,
}

pub fn two_mode_instability(eps: f64, modes: usize) -> Result<TwoModeInstability> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain("ε must be positive"));
    }
    let omega = 2.0 * eps * (1.0 + eps * eps).sqrt();
    let sup_p = 1.0 / (1.0 + eps * eps).sqrt();
    let (m, p) = SzegoPoleState::real(1.0, 2.0 * eps, 0.0)?.charges();
    let x_max = sup_p * sup_p;
    // |α_n|² = P(1-x)² x^{n-1} with x = |p|² ∈ [0, x_max]; mode 0 is largest at x = 0
    let envelope = (0..modes)
        .map(|n| {
            if n == 0 {
                m - p * (1.0 - x_max)
            } else {
                let star = (n as f64 - 1.0) / (n as f64 + 1.0);
                let x = star.min(x_max);
                p * (1.0 - x).powi(2) * x.powi(n as i32 - 1)
            }
        })
        .collect();
    Ok(TwoModeInstability { omega, sup_p, envelope })
}

/// A Szegő stationary state with frequencies `λ_n = λ + (n - ℓ)ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SzegoStationary {
    pub amplitudes: ModeSpectrum,
    pub lambda: f64,
    pub omega: f64,
    pub shift: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SzegoStationaryKind {
    /// `c Π (p̄_k - z)/(1 - p_k z)`
    Blaschke { c: Complex64, zeros: Vec<Complex64> },
    /// `c z^ℓ/(1 - pᴺ zᴺ)` with `ℓ < N`
    Decimated { c: Complex64, p: Complex64, period: usize, shift: usize },
}

/// `max_n |λ_n A_n - T_n|`.
pub fn szego_residual(amps: &ModeSpectrum, lambda: f64, omega: f64, shift: usize) -> f64 {
    let t = if amps.truncation() <= FFT_THRESHOLD {
        szego_sum_reference(amps)
    } else {
        let mut out = vec![ZERO; amps.truncation()];
        SzegoFft::new(amps.truncation()).sum_into(amps.amps(), &mut out);
        out
    };
    amps.iter()
        .zip(&t)
        .enumerate()
        .map(|(n, (a, tn))| (a * (lambda + (n as f64 - shift as f64) * omega) - tn).norm())
        .fold(0.0, f64::max)
}

pub fn szego_stationary(kind: &SzegoStationaryKind, truncation: usize) -> Result<SzegoStationary> {
    let (f, lambda, omega, shift) = match kind {
        SzegoStationaryKind::Blaschke { c, zeros } => (RationalGenFn::blaschke(*c, zeros)?, c.norm_sqr(), 0.0, 0usize),
        SzegoStationaryKind::Decimated { c, p, period, shift } => {
            if *period == 0 || shift >= period {
                return Err(Error::domain("need period ≥ 1 and shift < period"));
            }
            if !(p.norm() < 1.0) {
                return Err(Error::domain(format!("|p| = {} must be < 1", p.norm())));
            }
            let q = p.powu(*period as u32);
            let d = 1.0 - q.norm_sqr();
            let mut amps = vec![ZERO; truncation];
            let mut v = *c;
            for n in (*shift..truncation).step_by(*period) {
                amps[n] = v;
                v *= q;
            }
            let amplitudes = ModeSpectrum::from_vec_unchecked(amps);
            let lambda = c.norm_sqr() / (d * d);
            let omega = c.norm_sqr() / (d * *period as f64);
            let residual = szego_residual(&amplitudes, lambda, omega, *shift);
            return Ok(SzegoStationary { amplitudes, lambda, omega, shift: *shift, residual });
        }
    };
    let amplitudes = f.taylor(truncation);
    let residual = szego_residual(&amplitudes, lambda, omega, shift);
    Ok(SzegoStationary {
        amplitudes,
        lambda,
        omega,
        shift,
        residual,
    })
}
