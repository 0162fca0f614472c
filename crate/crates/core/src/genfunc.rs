//! Generating functions `u(z) = Σ α_n zⁿ` and the sums behind the flow's
//! complex-plane representation.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::interaction::resonant_coefficient;
use crate::modes::ModeSpectrum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A rational function `N(z)/D(z)` with `D(0) = 1`, regular on the closed unit disk.
///
/// `poles` lists the parameters `p_k` of the denominator factors `1 - p_k z`,
/// so the actual poles sit at `1/p_k` outside the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalGenFn {
    numerator: Vec<Complex64>,
    denominator: Vec<Complex64>,
    poles: Vec<Complex64>,
    /// Zero parameters of Blaschke factors `(p̄ - z)/(1 - p z)`, if built that way.
    blaschke: Vec<Complex64>,
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_poles(poles: &[Complex64]) -> Result<()> {
    for p in poles {
        if !(p.norm() < 1.0) {
            return Err(Error::domain(format!("pole parameter {p} must satisfy |p| < 1")));
        }
    }
    Ok(())
}

impl RationalGenFn {
    /// `numerator(z) / Π_k (1 - p_k z)`.
    pub fn from_poles(numerator: Vec<Complex64>, poles: &[Complex64]) -> Result<Self> {
        check_poles(poles)?;
        let mut den = vec![ONE];
        for p in poles {
            den = poly_mul(&den, &[ONE, -p]);
        }
        Ok(Self {
            numerator,
            denominator: den,
            poles: poles.to_vec(),
            blaschke: Vec::new(),
        })
    }

    /// `c / (1 - p z)`, coefficients `c pⁿ`.
    pub fn geometric(c: Complex64, p: Complex64) -> Result<Self> {
        Self::from_poles(vec![c], &[p])
    }

    /// `(b + (a - b) p z)/(1 - p z)²`, coefficients `(b + a n) pⁿ`.
    pub fn subspace(b: Complex64, a: Complex64, p: Complex64) -> Result<Self> {
        Self::from_poles(vec![b, (a - b) * p], &[p, p])
    }

    /// `c Π_k (p̄_k - z)/(1 - p_k z)`.
    pub fn blaschke(c: Complex64, zeros: &[Complex64]) -> Result<Self> {
        check_poles(zeros)?;
        let mut num = vec![c];
        for p in zeros {
            num = poly_mul(&num, &[p.conj(), -ONE]);
        }
        let mut f = Self::from_poles(num, zeros)?;
        f.blaschke = zeros.to_vec();
        Ok(f)
    }

    /// `c z^{N-1} / (1 - q z^N)`: only modes `N-1 + mN` are populated, with `c q^m`.
    pub fn decimated(c: Complex64, q: Complex64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("decimation period must be at least 1"));
        }
        if !(q.norm() < 1.0) {
            return Err(Error::domain(format!("|q| = {} must be < 1", q.norm())));
        }
        let mut num = vec![ZERO; n];
        num[n - 1] = c;
        let mut den = vec![ZERO; n + 1];
        den[0] = ONE;
        den[n] = -q;
        // the poles are the N-th roots of q
        let r = q.norm().powf(1.0 / n as f64);
        let arg = q.arg() / n as f64;
        let poles = (0..n)
            .map(|k| Complex64::from_polar(r, arg + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        Ok(Self {
            numerator: num,
            denominator: den,
            poles,
            blaschke: Vec::new(),
        })
    }

    /// Multiplies by `z^shift`.
    pub fn shifted(mut self, shift: usize) -> Self {
        let mut num = vec![ZERO; shift];
        num.extend_from_slice(&self.numerator);
        self.numerator = num;
        self
    }

    pub fn numerator(&self) -> &[Complex64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Complex64] {
        &self.denominator
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn blaschke_zeros(&self) -> &[Complex64] {
        &self.blaschke
    }

    /// Largest pole parameter modulus: coefficients decay like that power.
    pub fn decay_rate(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// First `truncation` Taylor coefficients by the exact linear recurrence
    /// `Σ_i d_i α_{n-i} = N_n`.
    pub fn taylor(&self, truncation: usize) -> ModeSpectrum {
        let d = &self.denominator;
        let mut out: Vec<Complex64> = Vec::with_capacity(truncation);
        for n in 0..truncation {
            let mut v = self.numerator.get(n).copied().unwrap_or(ZERO);
            for i in 1..d.len().min(n + 1) {
                v -= d[i] * out[n - i];
            }
            out.push(v / d[0]);
        }
        ModeSpectrum::from_vec_unchecked(out)
    }

    /// Value `u(z)` for `|z|` inside the disk of convergence.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let horner = |c: &[Complex64]| c.iter().rev().fold(ZERO, |acc, x| acc * z + x);
        horner(&self.numerator) / horner(&self.denominator)
    }
}

/// `Σ_j Σ_{k≤n+j} [min(n,j,k,n+j-k)+1] ρʲ θᵏ` in closed form,
/// `(1 + θ + … + θⁿ)/((1-ρ)(1-θρ))`.
pub fn master_sum(rho: Complex64, theta: Complex64, n: usize) -> Result<Complex64> {
    check_master(rho, theta)?;
    let mut geo = ZERO;
    let mut tk = ONE;
    for _ in 0..=n {
        geo += tk;
        tk *= theta;
    }
    Ok(geo / ((ONE - rho) * (ONE - theta * rho)))
}

fn check_master(rho: Complex64, theta: Complex64) -> Result<()> {
    if !(rho.norm() < 1.0 && (rho * theta).norm() < 1.0) {
        return Err(Error::domain("master sum needs |ρ| < 1 and |θρ| < 1"));
    }
    Ok(())
}

/// The same sum by direct summation over `j` until the remaining terms are negligible.
pub fn master_sum_brute(rho: Complex64, theta: Complex64, n: usize) -> Result<Complex64> {
    check_master(rho, theta)?;
    let mut total = ZERO;
    let mut rj = ONE;
    let mut quiet = 0;
    for j in 0.. {
        let mut inner = ZERO;
        let mut tk = ONE;
        for k in 0..=(n + j) {
            inner += tk * resonant_coefficient(n, j, k) as f64;
            tk *= theta;
        }
        let term = rj * inner;
        total += term;
        // terms decay like j |θρ|^j or j |ρ|^j eventually; wait for a run of tiny ones
        if term.norm() <= 1e-18 * total.norm().max(1e-300) {
            quiet += 1;
            if quiet >= 8 {
                break;
            }
        } else {
            quiet = 0;
        }
        if j > 200_000 {
            break;
        }
        rj *= rho;
    }
    Ok(total)
}

/// Index pairs `(K, L)` of the eight sums `Σ_j Σ_k [min+1] jᴷ kᴸ ρʲ`, in order.
pub const APPENDIX_PAIRS: [(u32, u32); 8] = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (2, 1), (1, 2)];

/// Arithmetic needed to evaluate the closed-form sums in any field.
pub trait Field: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<Output = Self> + std::ops::Div<Output = Self> {
    fn int(v: i64) -> Self;
}

impl Field for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }
}

impl Field for Ratio<i128> {
    fn int(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
}

/// Closed forms of the eight sums, in the order of [`APPENDIX_PAIRS`].
pub fn appendix_closed<T: Field>(n: u64, rho: T) -> [T; 8] {
    let c = |v: i64| T::int(v);
    let n = c(n as i64);
    let n1 = n + c(1);
    let d = c(1) - rho;
    let d2 = d * d;
    let d3 = d2 * d;
    let d4 = d3 * d;
    let d5 = d4 * d;
    let r2 = rho * rho;
    let r3 = r2 * rho;
    [
        n1 / d2,
        c(2) * n1 * rho / d3,
        n * n1 / (c(2) * d2) + n1 * rho / d3,
        c(2) * n1 * rho / d3 + c(6) * n1 * r2 / d4,
        n * n1 * (c(2) * n + c(1)) / (c(6) * d2) + n1 * n1 * rho / d3 + c(2) * n1 * r2 / d4,
        n1 * n1 * rho / d3 + c(3) * n1 * r2 / d4,
        n1 * n1 * rho / d3 + c(3) * n1 * (n + c(3)) * r2 / d4 + c(12) * n1 * r3 / d5,
        n1 * (c(2) * n * n + c(4) * n + c(3)) * rho / (c(3) * d3) + n1 * (c(3) * n + c(7)) * r2 / d4 + c(8) * n1 * r3 / d5,
    ]
}

/// Closed-form sums in floating point; `ρ = |p|²` must lie in `[0, 1)`.
pub fn appendix_sums(n: u64, rho: f64) -> Result<[f64; 8]> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("ρ = {rho} must lie in [0, 1)")));
    }
    Ok(appendix_closed(n, rho))
}

/// The eight sums by direct summation.
pub fn appendix_sums_brute(n: u64, rho: f64) -> Result<[f64; 8]> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("ρ = {rho} must lie in [0, 1)")));
    }
    let n = n as usize;
    let mut out = [0.0; 8];
    let mut rj = 1.0;
    let mut quiet = 0;
    for j in 0.. {
        let mut terms = [0.0; 8];
        for k in 0..=(n + j) {
            let w = resonant_coefficient(n, j, k) as f64;
            for (slot, (kk, ll)) in terms.iter_mut().zip(APPENDIX_PAIRS) {
                *slot += w * (j as f64).powi(kk as i32) * (k as f64).powi(ll as i32);
            }
        }
        let mut small = true;
        for (o, t) in out.iter_mut().zip(terms) {
            let v = rj * t;
            *o += v;
            if v.abs() > 1e-18 * o.abs() {
                small = false;
            }
        }
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 8 || rho == 0.0 || j > 100_000 {
            break;
        }
        rj *= rho;
    }
    Ok(out)
}

/// Checks that each closed-form sum divided by `n + 1` is a polynomial in `n`
/// of degree `L`, exactly, over `n ≤ n_max`: its `(L+1)`-th finite
/// differences vanish in rational arithmetic.
pub fn appendix_divisibility_exact(rho: Ratio<i128>, n_max: u64) -> [bool; 8] {
    let quotients: Vec<[Ratio<i128>; 8]> = (0..=n_max)
        .map(|n| {
            let v = appendix_closed(n, rho);
            let n1 = Ratio::from_integer(n as i128 + 1);
            v.map(|x| x / n1)
        })
        .collect();
    let mut ok = [true; 8];
    for (idx, (_, l)) in APPENDIX_PAIRS.iter().enumerate() {
        let mut seq: Vec<Ratio<i128>> = quotients.iter().map(|q| q[idx]).collect();
        for _ in 0..=*l {
            seq = seq.windows(2).map(|w| w[1] - w[0]).collect();
        }
        ok[idx] = seq.iter().all(|x| *x == Ratio::from_integer(0));
    }
    ok
}

/// Flow right-hand side from the complex-plane representation
/// `i ∂_t ∂_z(z u) = (1/2πi) ∮ ds/s ũ(s) ((s u(s) - z u(z))/(s - z))²`,
/// with the `s` integral replaced by the mean over `samples` equispaced points on `|s| = radius`.
///
/// For a truncated state every factor is a Laurent polynomial in `s`, so the
/// discrete mean is exact once the sample count exceeds the spread of powers.
pub fn rhs_via_contour(state: &ModeSpectrum, samples: usize, radius: f64) -> Result<ModeSpectrum> {
    let len = state.truncation();
    let required = 4 * len.max(1);
    if !samples.is_power_of_two() || samples < required {
        return Err(Error::InsufficientSampling { samples, required });
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::domain(format!("contour radius {radius} must lie in (0, 1)")));
    }
    let a = state.amps();
    let mut acc = vec![ZERO; len];
    let mut g = vec![ZERO; len];
    for m in 0..samples {
        let s = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * m as f64 / samples as f64);
        // ũ(s) = Σ conj(α_j) s^{-j}
        let sinv = s.inv();
        let u_tilde = a.iter().rev().fold(ZERO, |acc, x| acc * sinv + x.conj());
        // G_b(s) = Σ_{n≥b} α_n s^{n-b}, the z^b coefficient of (s u(s) - z u(z))/(s - z)
        let mut run = ZERO;
        for b in (0..len).rev() {
            run = run * s + a[b];
            g[b] = run;
        }
        for n in 0..len {
            let mut c = ZERO;
            for b in 0..=n {
                c += g[b] * g[n - b];
            }
            acc[n] += u_tilde * c;
        }
    }
    let inv = 1.0 / samples as f64;
    let out = acc
        .iter()
        .enumerate()
        .map(|(n, v)| -Complex64::i() * v * inv / (n + 1) as f64)
        .collect();
    Ok(ModeSpectrum::from_vec_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometric_coefficients() {
        let t = RationalGenFn::geometric(ONE, c(0.5, 0.0)).unwrap().taylor(5);
        for n in 0..5 {
            assert!((t[n].re - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn subspace_coefficients() {
        let (b, a, p) = (c(0.3, 0.1), c(-0.2, 0.4), c(0.5, -0.3));
        let t = RationalGenFn::subspace(b, a, p).unwrap().taylor(20);
        for n in 0..20 {
            let expect = (b + a * n as f64) * p.powu(n as u32);
            assert!((t[n] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn blaschke_coefficients() {
        let t = RationalGenFn::blaschke(ONE, &[c(0.3, 0.0)]).unwrap().taylor(5);
        assert!((t[0] - c(0.3, 0.0)).norm() < 1e-15);
        assert!((t[1] - c(-0.91, 0.0)).norm() < 1e-15);
        assert!((t[2] - c(-0.273, 0.0)).norm() < 1e-15);
        assert!((t[3] - c(-0.0819, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decimated_populates_every_nth() {
        let t = RationalGenFn::decimated(ONE, c(0.25, 0.0), 2).unwrap().taylor(10);
        for n in 0..10 {
            let expect = if n % 2 == 1 { 0.25f64.powi((n / 2) as i32) } else { 0.0 };
            assert_eq!(t[n].re, expect);
        }
    }

    #[test]
    fn eval_matches_series() {
        let f = RationalGenFn::blaschke(c(0.7, 0.2), &[c(0.3, 0.1), c(-0.2, 0.4)]).unwrap();
        let z = c(0.4, -0.3);
        let series: Complex64 = f.taylor(200).iter().enumerate().map(|(n, a)| a * z.powu(n as u32)).sum();
        assert!((series - f.eval(z)).norm() < 1e-13);
        // unimodular on the circle
        assert!((f.eval(c(0.0, 1.0)).norm() - c(0.7, 0.2).norm()).abs() < 1e-13);
    }

    #[test]
    fn master_sum_examples() {
        let v = master_sum(c(0.5, 0.0), c(0.5, 0.0), 0).unwrap();
        assert!((v - c(8.0 / 3.0, 0.0)).norm() < 1e-14);
        let b = master_sum_brute(c(0.5, 0.0), c(0.5, 0.0), 0).unwrap();
        assert!((b - v).norm() < 1e-12);
        let z = master_sum(c(0.3, 0.0), ZERO, 4).unwrap();
        assert!((z - c(1.0 / 0.7, 0.0)).norm() < 1e-14);
        assert!(master_sum(c(1.0, 0.0), ZERO, 1).is_err());
    }

    #[test]
    fn appendix_first_formula() {
        let s = appendix_sums(0, 0.5).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-14);
        let b = appendix_sums_brute(0, 0.5).unwrap();
        assert!((b[0] - 4.0).abs() < 1e-12);
        assert!(appendix_sums(0, 1.0).is_err());
    }

    #[test]
    fn divisibility_quarter() {
        assert_eq!(appendix_divisibility_exact(Ratio::new(1, 4), 20), [true; 8]);
    }

    #[test]
    fn contour_one_mode() {
        let amp = c(0.6, -0.3);
        let s = ModeSpectrum::single(3, 0, amp).unwrap();
        let d = rhs_via_contour(&s, 16, 0.8).unwrap();
        assert!((d[0] - (-Complex64::i() * amp.norm_sqr() * amp)).norm() < 1e-14);
        assert!(d[1].norm() < 1e-14 && d[2].norm() < 1e-14);
        assert!(matches!(rhs_via_contour(&s, 8, 0.8), Err(Error::InsufficientSampling { .. })));
        assert!(rhs_via_contour(&s, 24, 0.8).is_err());
    }
}
