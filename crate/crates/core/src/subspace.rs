//! The three-dimensional invariant subspace `α_n = (b + a n) pⁿ`.
//!
//! The reduced equations were obtained by substituting the ansatz into the
//! flow, summing the resulting series in closed form and matching the
//! coefficients of `1, n, n²` (every sum carries a common factor `n + 1`).
//! With `y = |p|²/(1-|p|²)`:
//!
//! ```text
//! i ṗ/p = (1+y)² a (2y ā + b̄) / 6
//! i ȧ   = (1+y)² a (5|b|² + (18y²+4y)|a|² + (6y-1) b̄a + 10y ā b) / 6
//! i ḃ   = (1+y)² (b + a y) (|b|² + (4y²+2y)|a|² + y b̄a + 2y ā b)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::Charges;
use crate::integrator::{integrate_real, IntegratorConfig, Trajectory};
use crate::modes::ModeSpectrum;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Discriminants above this (negative) threshold count as a stationary orbit.
pub const REALIZABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceState {
    pub b: Complex64,
    pub a: Complex64,
    pub p: Complex64,
}

impl SubspaceState {
    pub fn new(b: Complex64, a: Complex64, p: Complex64) -> Result<Self> {
        let s = Self { b, a, p };
        s.check()?;
        Ok(s)
    }

    pub fn real(b: f64, a: f64, p: f64) -> Result<Self> {
        Self::new(Complex64::new(b, 0.0), Complex64::new(a, 0.0), Complex64::new(p, 0.0))
    }

    fn check(&self) -> Result<()> {
        let finite = [self.b, self.a, self.p].iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::domain("subspace state has non-finite entries"));
        }
        if self.p.norm() >= 1.0 {
            return Err(Error::domain(format!("|p| = {} must be < 1", self.p.norm())));
        }
        Ok(())
    }

    /// `|p|²`
    pub fn rho(&self) -> f64 {
        self.p.norm_sqr()
    }

    /// `y = |p|²/(1-|p|²)`
    pub fn y(&self) -> f64 {
        let r = self.rho();
        r / (1.0 - r)
    }

    fn to_array(self) -> [f64; 6] {
        [self.b.re, self.b.im, self.a.re, self.a.im, self.p.re, self.p.im]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            b: Complex64::new(x[0], x[1]),
            a: Complex64::new(x[2], x[3]),
            p: Complex64::new(x[4], x[5]),
        }
    }
}

/// Time derivatives of `(b, a, p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceRates {
    pub b: Complex64,
    pub a: Complex64,
    pub p: Complex64,
}

/// `α_n = (b + a n) pⁿ` for `n < truncation`.
pub fn lift(s: &SubspaceState, truncation: usize) -> Result<ModeSpectrum> {
    s.check()?;
    let mut amps = Vec::with_capacity(truncation);
    let mut pn = Complex64::new(1.0, 0.0);
    for n in 0..truncation {
        amps.push((s.b + s.a * n as f64) * pn);
        pn *= s.p;
    }
    Ok(ModeSpectrum::from_vec_unchecked(amps))
}

/// Upper bound on the discarded linear energy `Σ_{n≥N} (n+1)²|α_n|²` of a lift.
///
/// Sums the majorant `(n+1)²(|b| + |a|n)²|p|^{2n}` until its terms are negligible.
pub fn lift_tail(s: &SubspaceState, truncation: usize) -> Result<f64> {
    s.check()?;
    let r = s.rho();
    if r == 0.0 {
        return Ok(0.0);
    }
    let (bn, an) = (s.b.norm(), s.a.norm());
    let mut sum = 0.0;
    let mut n = truncation as f64;
    let mut rn = r.powf(n);
    loop {
        let term = (n + 1.0).powi(2) * (bn + an * n).powi(2) * rn;
        sum += term;
        // the ratio of consecutive terms falls below 1 once n exceeds 4r/(1-r)
        if (term <= 1e-18 * sum || term == 0.0) && n > 4.0 * r / (1.0 - r) + truncation as f64 {
            break;
        }
        n += 1.0;
        rn *= r;
    }
    Ok(sum)
}

pub fn subspace_rhs(s: &SubspaceState) -> Result<SubspaceRates> {
    s.check()?;
    Ok(rates(s))
}

fn rates(s: &SubspaceState) -> SubspaceRates {
    let y = s.y();
    let (b, a, p) = (s.b, s.a, s.p);
    let w = (1.0 + y) * (1.0 + y);
    let bb = b.norm_sqr();
    let aa = a.norm_sqr();
    let ba = b.conj() * a;
    let ab = a.conj() * b;
    let ip = p * w * a * (a.conj() * 2.0 * y + b.conj()) / 6.0;
    let ia = a * w * (bb * 5.0 + aa * (18.0 * y * y + 4.0 * y) + ba * (6.0 * y - 1.0) + ab * (10.0 * y)) / 6.0;
    let ib = (b + a * y) * w * (bb + aa * (4.0 * y * y + 2.0 * y) + ba * y + ab * (2.0 * y));
    SubspaceRates {
        b: -I * ib,
        a: -I * ia,
        p: -I * ip,
    }
}

/// `ẏ = y(1+y)³ Im(b̄a)/3`
pub fn y_rate(s: &SubspaceState) -> f64 {
    let y = s.y();
    y * (1.0 + y).powi(3) * (s.b.conj() * s.a).im / 3.0
}

/// Conserved quantities on the subspace; `h` equals `q² - 2s²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceCharges {
    pub q: f64,
    pub e: f64,
    pub s: f64,
    pub h: f64,
}

impl Charges for SubspaceCharges {
    fn components(&self) -> Vec<(&'static str, f64)> {
        vec![("Q", self.q), ("E", self.e), ("S", self.s), ("H", self.h)]
    }
}

pub fn subspace_charges(s: &SubspaceState) -> Result<SubspaceCharges> {
    s.check()?;
    Ok(charges_unchecked(s))
}

fn charges_unchecked(s: &SubspaceState) -> SubspaceCharges {
    let y = s.y();
    let bb = s.b.norm_sqr();
    let aa = s.a.norm_sqr();
    let re = (s.b.conj() * s.a).re;
    let w = (1.0 + y) * (1.0 + y);
    let q = w * (bb + 4.0 * y * re + 2.0 * y * (3.0 * y + 1.0) * aa);
    let e = w * ((1.0 + 2.0 * y) * bb + 4.0 * y * (3.0 * y + 2.0) * re + 4.0 * y * (6.0 * y * y + 6.0 * y + 1.0) * aa);
    let sc = aa * y * (1.0 + y).powi(3);
    SubspaceCharges {
        q,
        e,
        s: sc,
        h: q * q - 2.0 * sc * sc,
    }
}

/// Closed-form oscillation `y(t) = B + A sin(Ω t + ψ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YOscillation {
    pub center: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub psi: f64,
    pub y_minus: f64,
    pub y_plus: f64,
}

impl YOscillation {
    pub fn y(&self, t: f64) -> f64 {
        self.center + self.amplitude * (self.omega * t + self.psi).sin()
    }

    pub fn y_dot(&self, t: f64) -> f64 {
        self.amplitude * self.omega * (self.omega * t + self.psi).cos()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// `(1+y₊)/(1+y₋)`, the spread of the spectrum's decay rate over one period.
    pub fn cascade_ratio(&self) -> f64 {
        (1.0 + self.y_plus) / (1.0 + self.y_minus)
    }

    pub fn is_stationary(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// Solves the quadratic `ẏ² = Ω²(2By - y² - q)` implied by conservation of `Q`, `E`, `S`.
///
/// `rising` selects the sign of `ẏ(0)`; it only matters away from turning points.
pub fn y_oscillation(q: f64, e: f64, s: f64, y0: f64, rising: bool) -> Result<YOscillation> {
    let g = q * q + 12.0 * s * s;
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::NotRealizable {
            q,
            e,
            s,
            discriminant: f64::NAN,
        });
    }
    let center = -0.5 * (1.0 - e * (q + 2.0 * s) / g);
    let qc = (e - q - 2.0 * s).powi(2) / (4.0 * g);
    let disc = center * center - qc;
    if disc < -REALIZABILITY_TOL * center.abs().max(1.0).powi(2) {
        return Err(Error::NotRealizable { q, e, s, discriminant: disc });
    }
    let amplitude = if disc <= REALIZABILITY_TOL * center.abs().max(1.0).powi(2) { 0.0 } else { disc.sqrt() };
    let omega = g.sqrt() / 6.0;
    let psi = if amplitude == 0.0 {
        0.0
    } else {
        let sigma = ((y0 - center) / amplitude).clamp(-1.0, 1.0);
        let cos = (1.0 - sigma * sigma).sqrt();
        sigma.atan2(if rising { cos } else { -cos })
    };
    Ok(YOscillation {
        center,
        amplitude,
        omega,
        psi,
        y_minus: center - amplitude,
        y_plus: center + amplitude,
    })
}

/// Oscillation of `y` along the orbit through `s`.
pub fn oscillation_of(s: &SubspaceState) -> Result<YOscillation> {
    let c = subspace_charges(s)?;
    y_oscillation(c.q, c.e, c.s, s.y(), y_rate(s) >= 0.0)
}

/// Spectrum coefficients recovered from `(Q, E, S)` and `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction {
    pub b_sq: f64,
    pub a_sq: f64,
    pub re_ba: f64,
}

/// Inverts the charge formulas for `|b|²`, `|a|²`, `Re(b̄a)` at a given `y > 0`.
pub fn reconstruct(q: f64, e: f64, s: f64, y: f64) -> Reconstruction {
    let w3 = (1.0 + y).powi(3);
    Reconstruction {
        b_sq: (2.0 * q - e + 3.0 * y * (q + 2.0 * s)) / w3,
        a_sq: s / (y * w3),
        re_ba: (e - q - 2.0 * s - 2.0 * y * (q + 6.0 * s)) / (4.0 * y * w3),
    }
}

/// Closed-form mode energies `|α_n(t)|²`, `n < truncation`, along the orbit through `s0`.
pub fn spectrum_series(s0: &SubspaceState, t: f64, truncation: usize) -> Result<Vec<f64>> {
    let c = subspace_charges(s0)?;
    let osc = oscillation_of(s0)?;
    let y = osc.y(t).max(0.0);
    Ok(spectrum_at(c.q, c.e, c.s, y, truncation))
}

/// `|α_n|² = (|b|² + 2n Re(b̄a) + n²|a|²) ρⁿ` with every `yⁿ⁻¹` factor kept explicit,
/// so that `y → 0` is harmless.
pub fn spectrum_at(q: f64, e: f64, s: f64, y: f64, truncation: usize) -> Vec<f64> {
    let w = 1.0 + y;
    let b_sq = (2.0 * q - e + 3.0 * y * (q + 2.0 * s)) / w.powi(3);
    let re_num = (e - q - 2.0 * s - 2.0 * y * (q + 6.0 * s)) / 4.0;
    let rho = y / w;
    let mut out = Vec::with_capacity(truncation);
    // ratio = yⁿ⁻¹ / (1+y)^{n+3}
    let mut rho_n = 1.0;
    let mut ratio = 1.0 / w.powi(4);
    for n in 0..truncation {
        let v = if n == 0 {
            b_sq
        } else {
            let nf = n as f64;
            b_sq * rho_n + (2.0 * nf * re_num + nf * nf * s) * ratio
        };
        out.push(v.max(0.0));
        if n >= 1 {
            ratio *= rho;
        }
        rho_n *= rho;
    }
    out
}

/// Numerically evolves the reduced system.
pub fn evolve_subspace(
    s0: &SubspaceState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<SubspaceState, SubspaceCharges>> {
    s0.check()?;
    let mut traj = Trajectory::default();
    let f = |_t: f64, x: &[f64], dx: &mut [f64]| {
        let st = SubspaceState::from_slice(x);
        if st.p.norm() >= 1.0 {
            dx.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        }
        let r = rates(&st);
        dx.copy_from_slice(&[r.b.re, r.b.im, r.a.re, r.a.im, r.p.re, r.p.im]);
    };
    integrate_real(f, &s0.to_array(), 0.0, t_end, cfg, |t, x| {
        let st = SubspaceState::from_slice(x);
        traj.push(t, st, charges_unchecked(&st));
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_rhs;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn reference() -> SubspaceState {
        SubspaceState::real(1.0, 1.0, FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn lift_of_constant() {
        let s = SubspaceState::real(1.0, 0.0, 0.0).unwrap();
        let l = lift(&s, 4).unwrap();
        assert_eq!(l, ModeSpectrum::from_real(&[1.0, 0.0, 0.0, 0.0]));
        assert!(SubspaceState::real(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reference_charges() {
        let c = subspace_charges(&reference()).unwrap();
        assert!((c.q - 52.0).abs() < 1e-12);
        assert!((c.e - 300.0).abs() < 1e-12);
        assert!((c.s - 8.0).abs() < 1e-12);
        assert!((c.h - 2576.0).abs() < 1e-9);
    }

    #[test]
    fn a_zero_rotates_b_only() {
        let s = SubspaceState::new(Complex64::new(0.3, 0.4), Complex64::new(0.0, 0.0), Complex64::new(0.2, -0.1)).unwrap();
        let r = subspace_rhs(&s).unwrap();
        assert_eq!(r.p, Complex64::new(0.0, 0.0));
        let lam = s.b.norm_sqr() / (1.0 - s.rho()).powi(2);
        assert!((r.b - (-I * lam * s.b)).norm() < 1e-15);
    }

    #[test]
    fn lift_commutes_with_flow() {
        let s = SubspaceState::new(Complex64::new(0.7, -0.2), Complex64::new(0.3, 0.5), Complex64::new(0.3, 0.4)).unwrap();
        let n = 120;
        let l = lift(&s, n).unwrap();
        let d = flow_rhs(&l);
        let r = rates(&s);
        for k in 0..40 {
            let kf = k as f64;
            let pk = s.p.powu(k as u32);
            let pk1 = if k == 0 { Complex64::new(0.0, 0.0) } else { s.p.powu(k as u32 - 1) };
            let expect = (r.b + r.a * kf) * pk + (s.b + s.a * kf) * kf * pk1 * r.p;
            assert!((d[k] - expect).norm() < 1e-9 * (1.0 + expect.norm()), "mode {k}");
        }
    }

    #[test]
    fn reference_oscillation() {
        let o = oscillation_of(&reference()).unwrap();
        assert!((o.omega - 3472f64.sqrt() / 6.0).abs() < 1e-12);
        assert!((o.y_minus - 1.0).abs() < 1e-10);
        assert!((o.y_plus - 3.875576).abs() < 1e-5);
        assert!((o.cascade_ratio() - 2.4378).abs() < 1e-4);
        assert!((o.y(0.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_inverts_charges() {
        let s = SubspaceState::new(Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.3), Complex64::new(0.5, 0.2)).unwrap();
        let c = subspace_charges(&s).unwrap();
        let r = reconstruct(c.q, c.e, c.s, s.y());
        assert!((r.b_sq - s.b.norm_sqr()).abs() < 1e-12);
        assert!((r.a_sq - s.a.norm_sqr()).abs() < 1e-12);
        assert!((r.re_ba - (s.b.conj() * s.a).re).abs() < 1e-12);
        let spec = spectrum_at(c.q, c.e, c.s, s.y(), 10);
        let direct = lift(&s, 10).unwrap().mode_energies();
        for (x, y) in spec.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn real_data_has_turning_point() {
        assert_eq!(y_rate(&reference()), 0.0);
    }

    #[test]
    fn tail_bound_decreases() {
        let s = reference();
        let t1 = lift_tail(&s, 50).unwrap();
        let t2 = lift_tail(&s, 100).unwrap();
        assert!(t2 < t1 && t2 < 1e-9);
    }
}
