//! The conformal flow: right-hand side, Hamiltonian, charges and symmetries.
//!
//! Truncation follows the Hamiltonian: every term that references a mode at or
//! beyond the window `N` is dropped, in the right-hand side and in `H` alike.
//! The truncated flow is then itself Hamiltonian and conserves the truncated
//! `Q`, `E` and `H` exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interaction::resonant_coefficient;
use crate::modes::ModeSpectrum;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Conserved quantities of the conformal flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeSet {
    /// `Σ (n+1)|α_n|²`
    pub q: f64,
    /// `Σ (n+1)²|α_n|²`
    pub e: f64,
    pub h: f64,
}

/// A named list of conserved quantities, used for drift monitoring.
pub trait Charges {
    fn components(&self) -> Vec<(&'static str, f64)>;
}

impl Charges for ChargeSet {
    fn components(&self) -> Vec<(&'static str, f64)> {
        vec![("Q", self.q), ("E", self.e), ("H", self.h)]
    }
}

/// `T_n = Σ_j Σ_{k≤n+j} [min(n,j,k,n+j-k)+1] conj(α_j) α_k α_{n+j-k}` by the
/// plain double sum, `O(N³)` overall.
pub fn resonant_sum_reference(state: &ModeSpectrum) -> Vec<Complex64> {
    let a = state.amps();
    let len = a.len();
    (0..len)
        .map(|n| {
            let mut acc = ZERO;
            for (j, aj) in a.iter().enumerate() {
                let s = n + j;
                // k and m = s - k must both lie inside the window
                let k_lo = s.saturating_sub(len - 1);
                let k_hi = s.min(len - 1);
                let mut inner = ZERO;
                for k in k_lo..=k_hi {
                    let w = resonant_coefficient(n, j, k) as f64;
                    inner += a[k] * a[s - k] * w;
                }
                acc += aj.conj() * inner;
            }
            acc
        })
        .collect()
}

/// Same sum as [`resonant_sum_reference`] in `O(N²)`.
///
/// With `s = n + j`, `2 min(n,j,k,s-k) = s - |k-n| - |k-j|`, and the pair
/// symmetry `k ↔ s-k` turns `Σ_k |k-j| α_k α_{s-k}` into `Σ_k |k-n| α_k α_{s-k}`.
/// Hence the weight splits into `(s+2)/2 · P(s) - W_s(n)` with the Cauchy
/// square `P(s) = Σ_{k+m=s} α_k α_m` and `W_s(n) = Σ_k |k-n| α_k α_{s-k}`, and
/// each `W_s(·)` follows from two prefix sums over `k`.
pub fn resonant_sum(state: &ModeSpectrum) -> Vec<Complex64> {
    let a = state.amps();
    let len = a.len();
    if len == 0 {
        return Vec::new();
    }
    let smax = 2 * (len - 1);
    // bracket[s][n] = (s+2)/2 P(s) - W_s(n), stored only for n ≤ s, n < len
    let mut bracket: Vec<Vec<Complex64>> = Vec::with_capacity(smax + 1);
    let mut prefix0 = vec![ZERO; len];
    let mut prefix1 = vec![ZERO; len];
    for s in 0..=smax {
        let k_lo = s.saturating_sub(len - 1);
        let k_hi = s.min(len - 1);
        let n_hi = k_hi;
        // prefix sums of the pair products c_k = α_k α_{s-k}, zero below k_lo
        let mut tot0 = ZERO;
        let mut tot1 = ZERO;
        for k in 0..=k_hi {
            if k >= k_lo {
                let c = a[k] * a[s - k];
                tot0 += c;
                tot1 += c * k as f64;
            }
            prefix0[k] = tot0;
            prefix1[k] = tot1;
        }
        let half = (s as f64 + 2.0) * 0.5;
        let row: Vec<Complex64> = (0..=n_hi)
            .map(|n| {
                let nf = n as f64;
                let w = prefix0[n] * (2.0 * nf) - prefix1[n] * 2.0 + tot1 - tot0 * nf;
                tot0 * half - w
            })
            .collect();
        bracket.push(row);
    }
    (0..len)
        .map(|n| {
            a.iter()
                .enumerate()
                .map(|(j, aj)| aj.conj() * bracket[n + j][n])
                .sum()
        })
        .collect()
}

/// Time derivative `α̇_n = -i T_n / (n+1)` of the truncated conformal flow.
pub fn flow_rhs(state: &ModeSpectrum) -> ModeSpectrum {
    let t = resonant_sum(state);
    ModeSpectrum::from_vec_unchecked(scale_rhs(t))
}

/// [`flow_rhs`] through the plain double sum.
pub fn flow_rhs_reference(state: &ModeSpectrum) -> ModeSpectrum {
    let t = resonant_sum_reference(state);
    ModeSpectrum::from_vec_unchecked(scale_rhs(t))
}

fn scale_rhs(mut t: Vec<Complex64>) -> Vec<Complex64> {
    for (n, v) in t.iter_mut().enumerate() {
        *v = -I * *v / (n + 1) as f64;
    }
    t
}

/// Allocation-light right-hand side on interleaved real storage, for the integrator.
pub fn flow_rhs_into(y: &[Complex64], dy: &mut [Complex64]) {
    let state = ModeSpectrum::from_vec_unchecked(y.to_vec());
    let t = resonant_sum(&state);
    for (n, (d, v)) in dy.iter_mut().zip(t).enumerate() {
        *d = -I * v / (n + 1) as f64;
    }
}

/// `H = Σ_n conj(α_n) T_n`, real for every state.
pub fn hamiltonian(state: &ModeSpectrum) -> f64 {
    hamiltonian_from_sum(state, &resonant_sum(state))
}

pub(crate) fn hamiltonian_from_sum(state: &ModeSpectrum, t: &[Complex64]) -> f64 {
    state
        .iter()
        .zip(t)
        .map(|(a, tn)| (a.conj() * tn).re)
        .sum()
}

pub fn charge_q(state: &ModeSpectrum) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(n, a)| (n + 1) as f64 * a.norm_sqr())
        .sum()
}

pub fn charge_e(state: &ModeSpectrum) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(n, a)| ((n + 1) * (n + 1)) as f64 * a.norm_sqr())
        .sum()
}

pub fn charges(state: &ModeSpectrum) -> ChargeSet {
    ChargeSet {
        q: charge_q(state),
        e: charge_e(state),
        h: hamiltonian(state),
    }
}

/// `α_n → λ e^{iθ_g} e^{inθ_m} α_n`: scaling, global phase and mode-dependent phase.
pub fn apply_symmetry(state: &ModeSpectrum, scale: f64, global_phase: f64, mode_phase: f64) -> ModeSpectrum {
    let amps = state
        .iter()
        .enumerate()
        .map(|(n, a)| a * Complex64::from_polar(scale, global_phase + n as f64 * mode_phase))
        .collect();
    ModeSpectrum::from_vec_unchecked(amps)
}

/// Spreads mode `m` to mode `m(step+1) + step`, zero elsewhere.
///
/// The generating-function image is `z^step u(z^{step+1})`, which maps
/// solutions of the flow to solutions without rescaling time.
pub fn decimate(state: &ModeSpectrum, step: usize, out_truncation: usize) -> Result<ModeSpectrum> {
    let required = step + state.truncation() * (step + 1);
    if out_truncation < required {
        return Err(Error::TruncationOverflow {
            required,
            available: out_truncation,
        });
    }
    let mut out = ModeSpectrum::zeros(out_truncation);
    for (m, a) in state.iter().enumerate() {
        out.amps_mut()[m * (step + 1) + step] = *a;
    }
    Ok(out)
}

/// Wirtinger gradients `∂C/∂conj(α_n)` of `Q`, `E` and `H`.
///
/// Used for the algebraic conservation check `Re Σ conj(∂C/∂conj α_n) α̇_n = 0`.
pub fn charge_gradients(state: &ModeSpectrum) -> [Vec<Complex64>; 3] {
    let t = resonant_sum(state);
    let gq = state.iter().enumerate().map(|(n, a)| a * (n + 1) as f64).collect();
    let ge = state
        .iter()
        .enumerate()
        .map(|(n, a)| a * ((n + 1) * (n + 1)) as f64)
        .collect();
    let gh = t.iter().map(|v| v * 2.0).collect();
    [gq, ge, gh]
}

/// `dC/dt = 2 Re Σ conj(∂C/∂conj α_n) α̇_n` for `C ∈ {Q, E, H}` at `state`.
pub fn charge_rates(state: &ModeSpectrum) -> [f64; 3] {
    let rhs = flow_rhs(state);
    let grads = charge_gradients(state);
    grads.map(|g| {
        2.0 * g
            .iter()
            .zip(rhs.iter())
            .map(|(gn, d)| (gn.conj() * d).re)
            .sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ones() -> ModeSpectrum {
        ModeSpectrum::from_real(&[1.0, 1.0])
    }

    #[test]
    fn one_mode_rotates() {
        let amp = c(0.3, -0.7);
        let s = ModeSpectrum::single(6, 2, amp).unwrap();
        let d = flow_rhs(&s);
        for n in 0..6 {
            let expect = if n == 2 { -I * amp.norm_sqr() * amp } else { ZERO };
            assert!((d[n] - expect).norm() < 1e-15, "mode {n}");
        }
    }

    #[test]
    fn zero_state() {
        let d = flow_rhs(&ModeSpectrum::zeros(5));
        assert!(d.iter().all(|v| v.norm() == 0.0));
        assert_eq!(hamiltonian(&ModeSpectrum::zeros(5)), 0.0);
    }

    #[test]
    fn two_ones_rhs() {
        let d = flow_rhs(&ones());
        assert!((d[0] - c(0.0, -3.0)).norm() < 1e-15);
        assert!((d[1] - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_values() {
        assert!((hamiltonian(&ModeSpectrum::from_real(&[1.0])) - 1.0).abs() < 1e-15);
        assert!((hamiltonian(&ones()) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn charges_values() {
        let ch = charges(&ones());
        assert_eq!((ch.q, ch.e), (3.0, 5.0));
        let ch2 = charges(&ones().scaled(c(2.0, 0.0)));
        assert_eq!((ch2.q, ch2.e), (12.0, 20.0));
        let d = charges(&ModeSpectrum::from_real(&[1.0]));
        assert_eq!((d.q, d.e), (1.0, 1.0));
    }

    #[test]
    fn symmetry_examples() {
        let s = ModeSpectrum::from_real(&[1.0]);
        let flipped = apply_symmetry(&s, 1.0, std::f64::consts::PI, 0.0);
        assert!((flipped[0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((hamiltonian(&apply_symmetry(&ones(), 2.0, 0.0, 0.0)) - 112.0).abs() < 1e-12);
    }

    #[test]
    fn decimation_identity_and_one_mode() {
        let s = ones();
        assert_eq!(decimate(&s, 0, 2).unwrap(), s);
        let d = decimate(&ModeSpectrum::from_real(&[1.0]), 2, 5).unwrap();
        assert_eq!(d.get(2), c(1.0, 0.0));
        assert!((flow_rhs(&d)[2] - c(0.0, -1.0)).norm() < 1e-15);
        assert!(decimate(&s, 2, 7).is_err());
    }

    #[test]
    fn fast_sum_matches_reference_small() {
        let s = ModeSpectrum::new(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, -0.4), c(0.05, 0.2)]).unwrap();
        let a = resonant_sum(&s);
        let b = resonant_sum_reference(&s);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn empty_window() {
        assert!(flow_rhs(&ModeSpectrum::zeros(0)).amps().is_empty());
    }
}
