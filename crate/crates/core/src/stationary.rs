//! Stationary states `α_n(t) = A_n e^{-i(λ - nω)t}` of the conformal flow.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{charge_e, charge_q, hamiltonian, resonant_sum};
use crate::genfunc::RationalGenFn;
use crate::modes::ModeSpectrum;
use crate::subspace::{lift, SubspaceState};

/// `p★ = 2 - √3`, the largest `|p|` carrying the `ω ≠ 0` families.
pub const P_STAR: f64 = 0.267_949_192_431_122_7;

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryState {
    pub amplitudes: ModeSpectrum,
    pub lambda: f64,
    pub omega: f64,
    /// Zeros of the generating function in the disk, counted with multiplicity,
    /// for the `ω = 0` families.
    pub zeros: Option<usize>,
    /// Bound on the residual caused by truncating the infinite sums.
    pub tail: f64,
}

impl StationaryState {
    /// `λ_n = λ - nω`
    pub fn frequency(&self, n: usize) -> f64 {
        self.lambda - n as f64 * self.omega
    }

    /// The state at time `t`.
    pub fn at(&self, t: f64) -> ModeSpectrum {
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, -self.frequency(n) * t))
            .collect();
        ModeSpectrum::from_vec_unchecked(amps)
    }

    /// Residual allowance: the analytic tail bound or `floor`, whichever is larger.
    pub fn tolerance(&self, floor: f64) -> f64 {
        floor.max(self.tail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// `max_n |(n+1)(λ - nω)A_n - T_n|` over the truncation window.
pub fn residual(st: &StationaryState) -> f64 {
    residual_of(&st.amplitudes, st.lambda, st.omega)
}

pub fn residual_of(amps: &ModeSpectrum, lambda: f64, omega: f64) -> f64 {
    let t = resonant_sum(amps);
    amps.iter()
        .zip(&t)
        .enumerate()
        .map(|(n, (a, tn))| {
            let nf = n as f64;
            (a * ((nf + 1.0) * (lambda - nf * omega)) - tn).norm()
        })
        .fold(0.0, f64::max)
}

/// Bound on `|T_n^∞ - T_n^trunc|` over the window: every dropped term has one
/// index `≥ N` and a coefficient at most `n + 1`, so the defect is at most
/// `3 N · (Σ_{i≥N} |A_i|) · (Σ_i |A_i|)²`.
fn truncation_tail(f: &RationalGenFn, truncation: usize) -> f64 {
    let r = f.decay_rate();
    if r == 0.0 {
        return 0.0;
    }
    // extend until the geometric decay makes the remainder negligible
    let mut len = (2 * truncation).max(64);
    loop {
        let coeffs = f.taylor(len);
        let head: f64 = coeffs.iter().take(truncation).map(|a| a.norm()).sum();
        let tail: f64 = coeffs.iter().skip(truncation).map(|a| a.norm()).sum();
        let last = coeffs.amps()[len - 8..].iter().map(|a| a.norm()).fold(0.0, f64::max);
        if last <= 1e-30 * (head + tail).max(1e-300) || len > 64 * truncation.max(64) {
            let total = head + tail;
            // geometric remainder beyond the computed window
            let rest = last * r / (1.0 - r) * 8.0;
            return 3.0 * truncation as f64 * (tail + rest) * total * total;
        }
        len *= 2;
    }
}

fn from_genfn(
    f: RationalGenFn,
    truncation: usize,
    lambda: f64,
    omega: f64,
    zeros: Option<usize>,
) -> StationaryState {
    StationaryState {
        amplitudes: f.taylor(truncation),
        lambda,
        omega,
        zeros,
        tail: truncation_tail(&f, truncation),
    }
}

/// `A_n = c δ_{n,mode}`, `λ = |c|²`.
pub fn one_mode(truncation: usize, mode: usize, c: Complex64) -> Result<StationaryState> {
    Ok(StationaryState {
        amplitudes: ModeSpectrum::single(truncation, mode, c)?,
        lambda: c.norm_sqr(),
        omega: 0.0,
        zeros: Some(mode),
        tail: 0.0,
    })
}

/// `A_n = c pⁿ`, `λ = Q = |c|²/(1-|p|²)²`.
pub fn family_a0(c: Complex64, p: Complex64, truncation: usize) -> Result<StationaryState> {
    let f = RationalGenFn::geometric(c, p)?;
    let lambda = c.norm_sqr() / (1.0 - p.norm_sqr()).powi(2);
    Ok(from_genfn(f, truncation, lambda, 0.0, Some(0)))
}

/// `b = -2c|p|²`, `a = c(1-|p|²)`, `λ = |c|²|p|²/(1-|p|²)² = Q/2`.
pub fn family_omega0(c: Complex64, p: Complex64, truncation: usize) -> Result<StationaryState> {
    let rho = p.norm_sqr();
    let s = SubspaceState::new(c * (-2.0 * rho), c * (1.0 - rho), p)?;
    let f = RationalGenFn::subspace(s.b, s.a, s.p)?;
    let lambda = c.norm_sqr() * rho / (1.0 - rho).powi(2);
    let mut st = from_genfn(f, truncation, lambda, 0.0, Some(1));
    st.amplitudes = lift(&s, truncation)?;
    Ok(st)
}

/// `κ = (|p|⁴ - 14|p|² + 1)^{1/2}`, defined for `|p| ≤ p★`.
pub fn kappa(p_abs: f64) -> Result<f64> {
    if !(p_abs >= 0.0) || p_abs > P_STAR * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::domain(format!(
            "|p| = {p_abs} exceeds p* = 2 - sqrt(3) = {P_STAR:.6}; the omega != 0 families do not exist there"
        )));
    }
    let r = p_abs * p_abs;
    let k2 = r * r - 14.0 * r + 1.0;
    Ok(k2.max(0.0).sqrt())
}

/// `(λ, ω)` of the `±` families.
pub fn pm_frequencies(c: Complex64, p_abs: f64, branch: Branch) -> Result<(f64, f64)> {
    let k = branch.sign() * kappa(p_abs)?;
    let r = p_abs * p_abs;
    let cc = c.norm_sqr();
    let omega = cc / 3.0 * (1.0 + r + k) / (1.0 - r);
    let lambda = 2.0 * cc / 3.0 * ((3.0 - 4.0 * r) / (1.0 - r) + (3.0 + 4.0 * r) * k / (1.0 - r).powi(2));
    Ok((lambda, omega))
}

/// `Q± = (6/7)(λ± + ω±)`, `E± = 6ω±`.
pub fn pm_charges(c: Complex64, p_abs: f64, branch: Branch) -> Result<(f64, f64)> {
    let (l, w) = pm_frequencies(c, p_abs, branch)?;
    Ok((6.0 / 7.0 * (l + w), 6.0 * w))
}

/// `b = -c(1 + 5|p|² ± κ)`, `a = 2c(1-|p|²)`, rotating `p(t) = p e^{iωt}`.
pub fn family_pm(c: Complex64, p: Complex64, branch: Branch, truncation: usize) -> Result<StationaryState> {
    let pa = p.norm();
    let k = branch.sign() * kappa(pa)?;
    let r = pa * pa;
    let b = -c * (1.0 + 5.0 * r + k);
    let a = c * (2.0 * (1.0 - r));
    let (lambda, omega) = pm_frequencies(c, pa, branch)?;
    let f = RationalGenFn::subspace(b, a, p)?;
    Ok(from_genfn(f, truncation, lambda, omega, None))
}

/// `c Π (p̄_k - z)/(1 - p_k z)`, `λ = |c|²`, `ω = 0`.
pub fn blaschke_state(c: Complex64, zeros: &[Complex64], truncation: usize) -> Result<StationaryState> {
    let f = RationalGenFn::blaschke(c, zeros)?;
    Ok(from_genfn(f, truncation, c.norm_sqr(), 0.0, Some(zeros.len())))
}

/// `c z^{N-1}/(1 - pᴺ zᴺ)`, `λ = |c|²/(1 - |p|^{2N})²`: only every `N`-th mode is active.
pub fn decimated_state(c: Complex64, p: Complex64, period: usize, truncation: usize) -> Result<StationaryState> {
    if !(p.norm() < 1.0) {
        return Err(Error::domain(format!("|p| = {} must be < 1", p.norm())));
    }
    let q = p.powu(period as u32);
    let f = RationalGenFn::decimated(c, q, period)?;
    let lambda = c.norm_sqr() / (1.0 - q.norm_sqr()).powi(2);
    Ok(from_genfn(f, truncation, lambda, 0.0, Some(period.saturating_sub(1))))
}

/// `K = ½H - λQ + ω(E - Q)`.
pub fn k_functional(state: &ModeSpectrum, lambda: f64, omega: f64) -> f64 {
    let q = charge_q(state);
    0.5 * hamiltonian(state) - lambda * q + omega * (charge_e(state) - q)
}

/// Euclidean norm of the central-difference gradient of `K` with respect to
/// the real and imaginary parts of every amplitude.
pub fn k_gradient_norm(state: &ModeSpectrum, lambda: f64, omega: f64, step: f64) -> f64 {
    let mut work = state.clone();
    let mut sum = 0.0;
    for n in 0..state.truncation() {
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let base = work.amps()[n];
            work.amps_mut()[n] = base + dir * step;
            let kp = k_functional(&work, lambda, omega);
            work.amps_mut()[n] = base - dir * step;
            let km = k_functional(&work, lambda, omega);
            work.amps_mut()[n] = base;
            sum += ((kp - km) / (2.0 * step)).powi(2);
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn one_mode_examples() {
        let s = one_mode(8, 0, c(1.0)).unwrap();
        assert_eq!(s.lambda, 1.0);
        assert_eq!(residual(&s), 0.0);
        let z = one_mode(8, 2, c(0.0)).unwrap();
        assert_eq!((z.lambda, residual(&z)), (0.0, 0.0));
        let t = one_mode(8, 1, c(2.0)).unwrap();
        assert_eq!(t.lambda, 4.0);
        assert_eq!(residual(&t), 0.0);
    }

    #[test]
    fn a0_family() {
        let s = family_a0(c(1.0), c(0.5), 128).unwrap();
        assert!((s.lambda - 16.0 / 9.0).abs() < 1e-15);
        assert!(residual(&s) <= s.tolerance(1e-10));
        assert!((charge_q(&s.amplitudes) - s.lambda).abs() < 1e-10);
    }

    #[test]
    fn omega0_family() {
        let s = family_omega0(c(1.0), c(0.5), 128).unwrap();
        assert!((s.lambda - 4.0 / 9.0).abs() < 1e-15);
        assert!((charge_q(&s.amplitudes) - 8.0 / 9.0).abs() < 1e-12);
        let s4 = family_omega0(c(1.0), Complex64::new(0.24, 0.32), 128).unwrap();
        assert!(residual(&s4) <= s4.tolerance(1e-10));
    }

    #[test]
    fn pm_at_bifurcation() {
        assert!(kappa(P_STAR).unwrap().abs() < 1e-12);
        let (_, w) = pm_frequencies(c(1.0), P_STAR, Branch::Plus).unwrap();
        let s3 = 3f64.sqrt();
        assert!((w - (8.0 - 4.0 * s3) / (4.0 * s3 - 6.0) / 3.0).abs() < 1e-9);
        assert!((w - 0.38490).abs() < 1e-5);
        assert!(family_pm(c(1.0), c(0.27), Branch::Plus, 16).is_err());
    }

    #[test]
    fn pm_residual_and_charges() {
        for br in [Branch::Plus, Branch::Minus] {
            let p = Complex64::from_polar(0.2, 0.7);
            let s = family_pm(Complex64::new(0.8, -0.3), p, br, 128).unwrap();
            assert!(residual(&s) <= s.tolerance(1e-10), "{br:?}: {}", residual(&s));
            let (q, e) = pm_charges(Complex64::new(0.8, -0.3), 0.2, br).unwrap();
            assert!((charge_q(&s.amplitudes) - q).abs() < 1e-10);
            assert!((charge_e(&s.amplitudes) - e).abs() < 1e-10);
        }
    }

    #[test]
    fn blaschke_and_decimated() {
        let b1 = blaschke_state(c(1.0), &[c(0.3)], 128).unwrap();
        assert!(residual(&b1) <= 1e-8);
        assert!((charge_q(&b1.amplitudes) - 2.0).abs() < 1e-8);
        let b0 = blaschke_state(c(1.0), &[], 8).unwrap();
        assert_eq!(b0.amplitudes, one_mode(8, 0, c(1.0)).unwrap().amplitudes);
        let d = decimated_state(c(1.0), c(0.5), 2, 128).unwrap();
        assert!((d.lambda - (16.0f64 / 15.0).powi(2)).abs() < 1e-14);
        assert!(residual(&d) <= d.tolerance(1e-10));
        assert!(d.amplitudes.iter().step_by(2).all(|a| a.norm() == 0.0));
        let d1 = decimated_state(c(1.0), c(0.5), 1, 32).unwrap();
        assert_eq!(d1.amplitudes, family_a0(c(1.0), c(0.5), 32).unwrap().amplitudes);
    }

    #[test]
    fn k_gradient() {
        let s = one_mode(6, 0, c(1.0)).unwrap();
        assert!(k_gradient_norm(&s.amplitudes, 1.0, 0.0, 1e-5) <= 1e-6);
        assert_eq!(k_functional(&ModeSpectrum::zeros(4), 1.0, 0.5), 0.0);
        let r = ModeSpectrum::from_real(&[0.5, -0.4, 0.3, 0.2]);
        assert!(k_gradient_norm(&r, 1.0, 0.0, 1e-5) > 0.1);
        assert!(residual_of(&r, 1.0, 0.0) > 0.1);
    }
}
