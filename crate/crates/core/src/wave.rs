//! The parent cubic wave equation on the three-sphere in sine modes.
//!
//! `c̈_n + (n+1)² c_n = -Σ_{jkl} S_{jkln} c_j c_k c_l`, with the field
//! `v(t, x) = Σ c_n sin((n+1)x)` and `φ = v / sin x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{flow_rhs_into, resonant_sum};
use crate::integrator::{integrate_real, IntegratorConfig};
use crate::interaction::interaction_coefficient;
use crate::modes::{as_complex, as_complex_mut, ModeSpectrum};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default upper limit on the window for which the full tensor is built.
pub const MAX_TENSOR_MODES: usize = 48;

/// Nonzero `S_{jkln}` over a window, one entry per sorted index quadruple.
#[derive(Clone, Debug)]
pub struct CanonicalTensor {
    modes: usize,
    entries: Vec<([u16; 4], f64)>,
}

fn sorted4(mut q: [usize; 4]) -> [u16; 4] {
    q.sort_unstable();
    [q[0] as u16, q[1] as u16, q[2] as u16, q[3] as u16]
}

/// Number of distinct orderings of a multiset of three indices.
fn orderings3(r: [u16; 3]) -> f64 {
    match (r[0] == r[1], r[1] == r[2], r[0] == r[2]) {
        (true, true, _) => 1.0,
        (false, false, false) => 6.0,
        _ => 3.0,
    }
}

impl CanonicalTensor {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn entries(&self) -> &[([u16; 4], f64)] {
        &self.entries
    }

    /// `S_{jkln}` for any ordering of the indices; zero outside the window.
    pub fn get(&self, j: usize, k: usize, l: usize, n: usize) -> f64 {
        if j.max(k).max(l).max(n) >= self.modes {
            return 0.0;
        }
        let key = sorted4([j, k, l, n]);
        self.entries
            .binary_search_by(|e| e.0.cmp(&key))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// `F_n = Σ_{jkl} S_{jkln} c_j c_k c_l`.
    pub fn contract3(&self, c: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (q, s) in &self.entries {
            for pos in 0..4 {
                // each distinct value of n once
                if pos > 0 && q[pos] == q[pos - 1] {
                    continue;
                }
                let mut r = [0u16; 3];
                let mut i = 0;
                for (p, v) in q.iter().enumerate() {
                    if p != pos {
                        r[i] = *v;
                        i += 1;
                    }
                }
                out[q[pos] as usize] +=
                    s * orderings3(r) * c[r[0] as usize] * c[r[1] as usize] * c[r[2] as usize];
            }
        }
    }

    /// `Σ_{jkln} S_{jkln} c_j c_k c_l c_n`.
    pub fn contract4(&self, c: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(q, s)| {
                let mut counts = [0usize; 4];
                let mut distinct = 0;
                for i in 0..4 {
                    if i == 0 || q[i] != q[i - 1] {
                        distinct += 1;
                    }
                    counts[distinct - 1] += 1;
                }
                let fact = |k: usize| (1..=k).product::<usize>() as f64;
                let mult = 24.0 / counts[..distinct].iter().map(|&k| fact(k)).product::<f64>();
                s * mult * q.iter().map(|&i| c[i as usize]).product::<f64>()
            })
            .sum()
    }
}

/// All `S_{jkln}` with indices below `modes`, from the closed form.
pub fn full_tensor(modes: usize) -> Result<CanonicalTensor> {
    full_tensor_with_limit(modes, MAX_TENSOR_MODES)
}

pub fn full_tensor_with_limit(modes: usize, limit: usize) -> Result<CanonicalTensor> {
    if modes > limit {
        return Err(Error::domain(format!(
            "full tensor for {modes} modes exceeds the limit of {limit}"
        )));
    }
    let mut entries = Vec::new();
    for a in 0..modes {
        for b in a..modes {
            for c in b..modes {
                for d in c..modes {
                    let s = interaction_coefficient(a, b, c, d);
                    if s != 0 {
                        entries.push(([a as u16, b as u16, c as u16, d as u16], s as f64));
                    }
                }
            }
        }
    }
    Ok(CanonicalTensor { modes, entries })
}

/// Exact midpoint quadrature of the nonlinearity: `F_n = (2/π) ∫_0^π φ³ sin x sin((n+1)x) dx`.
///
/// The integrand has degree at most `4N - 2`, so `4N` nodes on the full
/// period are exact; by symmetry only the first half is evaluated.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    modes: usize,
    half: usize,
    // sin((n+1) x_i), row-major by node
    sines: Vec<f64>,
    inv_sin: Vec<f64>,
    sin_x: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(modes: usize) -> Self {
        let nodes = 4 * modes.max(1);
        let half = nodes / 2;
        let h = 2.0 * PI / nodes as f64;
        let mut sines = Vec::with_capacity(half * modes);
        let mut inv_sin = Vec::with_capacity(half);
        let mut sin_x = Vec::with_capacity(half);
        for i in 0..half {
            let x = (i as f64 + 0.5) * h;
            for n in 0..modes {
                sines.push(((n + 1) as f64 * x).sin());
            }
            inv_sin.push(1.0 / x.sin());
            sin_x.push(x.sin());
        }
        Self {
            modes,
            half,
            sines,
            inv_sin,
            sin_x,
        }
    }

    fn phi(&self, i: usize, c: &[f64]) -> f64 {
        let row = &self.sines[i * self.modes..(i + 1) * self.modes];
        row.iter().zip(c).map(|(s, c)| s * c).sum::<f64>() * self.inv_sin[i]
    }

    pub fn contract3(&self, c: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let w = 4.0 / (2 * self.half) as f64;
        for i in 0..self.half {
            let phi = self.phi(i, c);
            let g = w * phi * phi * phi * self.sin_x[i];
            let row = &self.sines[i * self.modes..(i + 1) * self.modes];
            for (o, s) in out.iter_mut().zip(row) {
                *o += g * s;
            }
        }
    }

    /// `(2/π) ∫_0^π φ⁴ sin²x dx`.
    pub fn contract4(&self, c: &[f64]) -> f64 {
        let w = 4.0 / (2 * self.half) as f64;
        (0..self.half)
            .map(|i| {
                let phi = self.phi(i, c);
                let v = phi * self.sin_x[i];
                w * phi * phi * v * v
            })
            .sum()
    }
}

/// How the cubic term is evaluated.
#[derive(Clone, Debug)]
pub enum Nonlinearity {
    Tensor(CanonicalTensor),
    Quadrature(QuadratureGrid),
    /// Linear oscillators only.
    Off,
}

#[derive(Clone, Debug)]
pub struct Oscillators {
    modes: usize,
    nonlinearity: Nonlinearity,
}

impl Oscillators {
    pub fn tensor(modes: usize) -> Result<Self> {
        Ok(Self {
            modes,
            nonlinearity: Nonlinearity::Tensor(full_tensor(modes)?),
        })
    }

    pub fn quadrature(modes: usize) -> Self {
        Self {
            modes,
            nonlinearity: Nonlinearity::Quadrature(QuadratureGrid::new(modes)),
        }
    }

    pub fn linear(modes: usize) -> Self {
        Self {
            modes,
            nonlinearity: Nonlinearity::Off,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `Σ_{jkl} S_{jkln} c_j c_k c_l`.
    pub fn cubic(&self, c: &[f64], out: &mut [f64]) {
        match &self.nonlinearity {
            Nonlinearity::Tensor(t) => t.contract3(c, out),
            Nonlinearity::Quadrature(q) => q.contract3(c, out),
            Nonlinearity::Off => out.fill(0.0),
        }
    }

    fn quartic(&self, c: &[f64]) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Tensor(t) => t.contract4(c),
            Nonlinearity::Quadrature(q) => q.contract4(c),
            Nonlinearity::Off => 0.0,
        }
    }

    /// Real first-order form on `y = [c, ċ]`.
    pub fn rhs_into(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.modes;
        let (c, cd) = y.split_at(n);
        let (dc, dcd) = dy.split_at_mut(n);
        dc.copy_from_slice(cd);
        self.cubic(c, dcd);
        for (k, (a, ck)) in dcd.iter_mut().zip(c).enumerate() {
            let w = (k + 1) as f64;
            *a = -w * w * ck - *a;
        }
    }

    /// `c̈_n`.
    pub fn accelerations(&self, fs: &FieldState) -> Vec<f64> {
        let mut y = fs.c.clone();
        y.extend_from_slice(&fs.cdot);
        let mut dy = vec![0.0; y.len()];
        self.rhs_into(&y, &mut dy);
        dy.split_off(self.modes)
    }

    /// `½Σċ² + ½Σ(n+1)²c² + ¼ΣS cccc`.
    pub fn energy(&self, fs: &FieldState) -> f64 {
        let kinetic: f64 = fs.cdot.iter().map(|v| v * v).sum();
        let potential: f64 = fs
            .c
            .iter()
            .enumerate()
            .map(|(n, v)| ((n + 1) as f64 * v).powi(2))
            .sum();
        0.5 * kinetic + 0.5 * potential + 0.25 * self.quartic(&fs.c)
    }

    /// Evolves the field, returning samples on the configured grid.
    pub fn evolve(&self, fs: &FieldState, t_end: f64, cfg: &IntegratorConfig) -> Result<Vec<(f64, FieldState)>> {
        if fs.c.len() != self.modes || fs.cdot.len() != self.modes {
            return Err(Error::domain("field state does not match the mode window"));
        }
        let mut y0 = fs.c.clone();
        y0.extend_from_slice(&fs.cdot);
        let mut out = Vec::new();
        integrate_real(
            |_, y, dy| self.rhs_into(y, dy),
            &y0,
            0.0,
            t_end,
            cfg,
            |t, y| out.push((t, FieldState::from_slices(&y[..self.modes], &y[self.modes..], fs.epsilon))),
        )?;
        Ok(out)
    }
}

/// Mode coefficients and velocities of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub c: Vec<f64>,
    pub cdot: Vec<f64>,
    pub epsilon: f64,
}

impl FieldState {
    pub fn new(c: Vec<f64>, cdot: Vec<f64>, epsilon: f64) -> Result<Self> {
        if c.len() != cdot.len() {
            return Err(Error::domain("c and ċ must have the same length"));
        }
        if c.iter().chain(&cdot).any(|v| !v.is_finite()) {
            return Err(Error::domain("field coefficients must be finite"));
        }
        Ok(Self { c, cdot, epsilon })
    }

    fn from_slices(c: &[f64], cdot: &[f64], epsilon: f64) -> Self {
        Self {
            c: c.to_vec(),
            cdot: cdot.to_vec(),
            epsilon,
        }
    }

    pub fn modes(&self) -> usize {
        self.c.len()
    }
}

/// `β_n = ½(c_n − i ċ_n/(n+1)) e^{−i(n+1)t}`.
pub fn to_envelope(fs: &FieldState, t: f64) -> ModeSpectrum {
    let amps = fs
        .c
        .iter()
        .zip(&fs.cdot)
        .enumerate()
        .map(|(n, (c, cd))| {
            let w = (n + 1) as f64;
            0.5 * Complex64::new(*c, -cd / w) * Complex64::from_polar(1.0, -w * t)
        })
        .collect();
    ModeSpectrum::from_vec_unchecked(amps)
}

/// `c_n = 2 Re(β_n e^{i(n+1)t})`, `ċ_n = −2(n+1) Im(β_n e^{i(n+1)t})`.
pub fn from_envelope(beta: &ModeSpectrum, t: f64, epsilon: f64) -> FieldState {
    let mut c = Vec::with_capacity(beta.truncation());
    let mut cdot = Vec::with_capacity(beta.truncation());
    for (n, b) in beta.iter().enumerate() {
        let w = (n + 1) as f64;
        let z = b * Complex64::from_polar(1.0, w * t);
        c.push(2.0 * z.re);
        cdot.push(-2.0 * w * z.im);
    }
    FieldState { c, cdot, epsilon }
}

/// `dα_n/dτ = (3i/(2(n+1))) Σ S ᾱ_j α_k α_{n+j−k}`, factors kept as in the averaged system.
pub fn averaged_rhs(alpha: &ModeSpectrum) -> ModeSpectrum {
    let t = resonant_sum(alpha);
    let amps = t
        .into_iter()
        .enumerate()
        .map(|(n, v)| I * v * (1.5 / (n + 1) as f64))
        .collect();
    ModeSpectrum::from_vec_unchecked(amps)
}

fn averaged_rhs_into(y: &[Complex64], dy: &mut [Complex64]) {
    flow_rhs_into(y, dy);
    for v in dy.iter_mut() {
        *v *= -1.5;
    }
}

/// Evolves the averaged system in slow time, sampling at the given step.
pub fn evolve_averaged(alpha0: &ModeSpectrum, tau_end: f64, cfg: &IntegratorConfig) -> Result<Vec<(f64, ModeSpectrum)>> {
    let mut out = Vec::new();
    let y0: Vec<f64> = crate::modes::as_real(alpha0.amps()).to_vec();
    integrate_real(
        |_, y, dy| averaged_rhs_into(as_complex(y), as_complex_mut(dy)),
        &y0,
        0.0,
        tau_end,
        cfg,
        |t, y| out.push((t, ModeSpectrum::from_vec_unchecked(as_complex(y).to_vec()))),
    )?;
    Ok(out)
}

/// Outcome of one averaging comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingReport {
    pub epsilon: f64,
    /// Fast-time horizon `c_T/ε²`.
    pub horizon: f64,
    /// `max_{n,t} |β_n(t) − ε α_n(ε²t)|` over the samples.
    pub error: f64,
    pub scaled_error: f64,
    /// Largest share of `Σ(n+1)|α_n|²` held by the top quarter of the window.
    pub tail_fraction: f64,
    pub samples: usize,
}

/// Threshold on the tail share before a run is rejected.
pub const TAIL_LIMIT: f64 = 1e-6;

fn tail_fraction(alpha: &ModeSpectrum) -> f64 {
    let n = alpha.truncation();
    let w: Vec<f64> = alpha.iter().enumerate().map(|(k, a)| (k + 1) as f64 * a.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    w[n - n / 4..].iter().sum::<f64>() / total
}

/// Compares the full oscillator system against the averaged system.
///
/// `samples` equally spaced times in `[0, c_T/ε²]` enter the error maximum.
pub fn validate_averaging(
    alpha0: &ModeSpectrum,
    epsilon: f64,
    horizon_factor: f64,
    modes: usize,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<AveragingReport> {
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(Error::domain(format!("ε = {epsilon} must lie in (0, 0.2]")));
    }
    if !(horizon_factor > 0.0) || !horizon_factor.is_finite() {
        return Err(Error::domain("horizon factor must be positive"));
    }
    if modes < 4 || samples == 0 {
        return Err(Error::domain("need at least 4 modes and one sample"));
    }
    let dropped: f64 = alpha0.iter().skip(modes).map(|a| a.norm_sqr()).sum();
    if dropped.sqrt() > 1e-10 {
        return Err(Error::domain("initial data is not resolved by the mode window"));
    }
    let alpha0 = alpha0.resized(modes);
    let horizon = horizon_factor / (epsilon * epsilon);
    let dt = horizon / samples as f64;

    let slow = evolve_averaged(&alpha0, horizon_factor, &cfg.clone().sample_interval(dt * epsilon * epsilon))?;
    let mut tail = 0.0f64;
    for (tau, a) in &slow {
        let f = tail_fraction(a);
        tail = tail.max(f);
        if f > TAIL_LIMIT {
            return Err(Error::TailOverflow { fraction: f, t: tau / (epsilon * epsilon) });
        }
    }

    let sys = Oscillators::quadrature(modes);
    let fs0 = from_envelope(&alpha0.scaled(Complex64::new(epsilon, 0.0)), 0.0, epsilon);
    let fast = sys.evolve(&fs0, horizon, &cfg.clone().sample_interval(dt))?;
    if fast.len() != slow.len() {
        return Err(Error::domain("sample grids of the two systems differ"));
    }
    let mut error = 0.0f64;
    for ((t, fs), (_, a)) in fast.iter().zip(&slow) {
        let beta = to_envelope(fs, *t);
        error = error.max(beta.max_distance(&a.scaled(Complex64::new(epsilon, 0.0))));
    }
    Ok(AveragingReport {
        epsilon,
        horizon,
        error,
        scaled_error: error / (epsilon * epsilon),
        tail_fraction: tail,
        samples: fast.len(),
    })
}

/// `max_n |⟨dβ_n/dt⟩ − (dβ_n/dt)_resonant|`, averaged over one fast period
/// with the envelope held fixed.
pub fn nonresonant_average(sys: &Oscillators, beta: &ModeSpectrum) -> f64 {
    let n = sys.modes();
    let beta = beta.resized(n);
    // all frequencies are integers below 4N + 4
    let nodes = 8 * n + 8;
    let mut mean = vec![Complex64::new(0.0, 0.0); n];
    let mut f = vec![0.0; n];
    for i in 0..nodes {
        let t = 2.0 * PI * i as f64 / nodes as f64;
        let fs = from_envelope(&beta, t, 0.0);
        sys.cubic(&fs.c, &mut f);
        for (k, m) in mean.iter_mut().enumerate() {
            let w = (k + 1) as f64;
            *m += I * f[k] * Complex64::from_polar(1.0, -w * t) / (2.0 * w);
        }
    }
    let res = averaged_rhs(&beta);
    mean.iter()
        .zip(res.iter())
        .map(|(m, r)| (m / nodes as f64 - r).norm())
        .fold(0.0, f64::max)
}

/// Field values `v` and `φ = v/sin x` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridValues {
    pub v: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Sine-series synthesis; `φ` uses `U_n(cos x)` so it stays finite at the poles.
pub fn grid_evaluate(fs: &FieldState, xs: &[f64]) -> GridValues {
    let mut v = Vec::with_capacity(xs.len());
    let mut phi = Vec::with_capacity(xs.len());
    for &x in xs {
        let y = x.cos();
        // U_0 = 1, U_1 = 2y, U_{n+1} = 2y U_n − U_{n−1}
        let (mut u_prev, mut u) = (0.0, 1.0);
        let mut acc = 0.0;
        for c in &fs.c {
            acc += c * u;
            let next = 2.0 * y * u - u_prev;
            u_prev = u;
            u = next;
        }
        phi.push(acc);
        if x == 0.0 || x == PI {
            v.push(0.0);
        } else {
            v.push(fs.c.iter().enumerate().map(|(n, c)| c * ((n + 1) as f64 * x).sin()).sum());
        }
    }
    GridValues { v, phi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::quadrature_coefficient;

    fn field(c: &[f64], cd: &[f64]) -> FieldState {
        FieldState::new(c.to_vec(), cd.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let t = full_tensor(6).unwrap();
        assert_eq!(t.get(0, 0, 0, 0), 1.0);
        assert_eq!(t.get(0, 0, 1, 1), 1.0);
        assert_eq!(t.get(0, 0, 0, 1), 0.0);
        assert_eq!(t.get(5, 1, 3, 2), t.get(1, 2, 3, 5));
        for q in [[0, 1, 2, 3], [1, 1, 4, 4], [2, 3, 5, 0], [5, 5, 5, 5]] {
            assert!((t.get(q[0], q[1], q[2], q[3]) - quadrature_coefficient(q[0], q[1], q[2], q[3])).abs() < 1e-10);
        }
        assert!(full_tensor(49).is_err());
    }

    #[test]
    fn backends_agree() {
        let n = 10;
        let c: Vec<f64> = (0..n).map(|k| ((k * 7 + 3) as f64).sin() * 0.8f64.powi(k as i32)).collect();
        let t = Oscillators::tensor(n).unwrap();
        let q = Oscillators::quadrature(n);
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        t.cubic(&c, &mut a);
        q.cubic(&c, &mut b);
        // brute force over all ordered triples
        for m in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += interaction_coefficient(j, k, l, m) as f64 * c[j] * c[k] * c[l];
                    }
                }
            }
            assert!((a[m] - s).abs() < 1e-12 && (b[m] - s).abs() < 1e-12);
        }
        let fs = field(&c, &vec![0.0; n]);
        assert!((t.energy(&fs) - q.energy(&fs)).abs() < 1e-12);
    }

    #[test]
    fn linear_limit_is_harmonic() {
        let sys = Oscillators::linear(3);
        let fs = field(&[1.0, 0.5, 0.0], &[0.0, 0.0, 1.0]);
        let cfg = IntegratorConfig::with_tol(1e-12).sample_interval(1.0);
        let out = sys.evolve(&fs, 5.0, &cfg).unwrap();
        let (t, last) = out.last().unwrap();
        assert!((last.c[0] - t.cos()).abs() < 1e-9);
        assert!((last.c[1] - 0.5 * (2.0 * t).cos()).abs() < 1e-9);
        assert!((last.c[2] - (3.0 * t).sin() / 3.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_round_trip() {
        let fs = field(&[0.3, -0.2, 0.1], &[0.05, 0.4, -0.7]);
        for t in [0.0, 1.3, 17.0] {
            let back = from_envelope(&to_envelope(&fs, t), t, 0.0);
            for k in 0..3 {
                assert!((back.c[k] - fs.c[k]).abs() < 1e-15 && (back.cdot[k] - fs.cdot[k]).abs() < 1e-15);
            }
        }
        // c = cos((n+1)t) gives β = ½
        let t: f64 = 0.7;
        let b = to_envelope(&field(&[t.cos()], &[-t.sin()]), t);
        assert!((b[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn averaged_examples() {
        let c = Complex64::new(0.6, 0.3);
        let d = averaged_rhs(&ModeSpectrum::single(3, 0, c).unwrap());
        assert!((d[0] - I * 1.5 * c.norm_sqr() * c).norm() < 1e-15);
        let ones = ModeSpectrum::from_real(&[1.0, 1.0]);
        let f = crate::flow::flow_rhs(&ones);
        let d = averaged_rhs(&ones);
        for k in 0..2 {
            assert!((d[k] + 1.5 * f[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn duffing_frequency_shift() {
        // c̈ = −c − c³ with amplitude 2ε has frequency 1 + (3/8)(2ε)²
        let eps = 0.01;
        let sys = Oscillators::quadrature(1);
        let fs = field(&[2.0 * eps], &[0.0]);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let mut solver = crate::integrator::Dop853::new(|_, y: &[f64], dy: &mut [f64]| sys.rhs_into(y, dy), 0.0, &[fs.c[0], 0.0], 200.0, &cfg).unwrap();
        let mut crossings = Vec::new();
        while !solver.finished() {
            let prev = solver.y()[1];
            solver.step().unwrap();
            if prev < 0.0 && solver.y()[1] >= 0.0 {
                crossings.push(crate::integrator::refine_crossing(&solver, |_, y| y[1], 1e-13).unwrap());
            }
        }
        let period = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        let freq = 2.0 * PI / period;
        assert!((freq - 1.0 - 1.5 * eps * eps).abs() < 1e-7, "{freq}");
    }

    #[test]
    fn nonresonant_terms_average_out() {
        let sys = Oscillators::quadrature(8);
        let beta = ModeSpectrum::from_real(&[0.1, 0.1]);
        assert!(nonresonant_average(&sys, &beta) < 1e-15);
    }

    #[test]
    fn grid_values() {
        let g = grid_evaluate(&field(&[1.0], &[0.0]), &[PI / 2.0]);
        assert!((g.v[0] - 1.0).abs() < 1e-15);
        let fs = field(&[0.3, 0.2, -0.4], &[0.0; 3]);
        let g = grid_evaluate(&fs, &[0.0, PI]);
        assert_eq!(g.v, vec![0.0, 0.0]);
        assert!((g.phi[0] - (0.3 + 0.4 - 1.2)).abs() < 1e-15);
        let x = 0.37;
        let g = grid_evaluate(&fs, &[x]);
        assert!((g.phi[0] - g.v[0] / x.sin()).abs() < 1e-14);
        // odd modes only: φ(π − x) = −φ(x)
        let odd = field(&[0.0, 0.5, 0.0, -0.3], &[0.0; 4]);
        let g = grid_evaluate(&odd, &[x, PI - x]);
        assert!((g.phi[0] + g.phi[1]).abs() < 1e-14);
    }

    #[test]
    fn averaging_rejects_bad_input() {
        let a = ModeSpectrum::from_real(&[1.0, 1.0]);
        let cfg = IntegratorConfig::default();
        assert!(validate_averaging(&a, 0.3, 1.0, 16, 10, &cfg).is_err());
        let r = validate_averaging(&ModeSpectrum::zeros(2), 0.1, 1.0, 8, 10, &cfg).unwrap();
        assert_eq!(r.error, 0.0);
    }
}
