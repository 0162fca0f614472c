//! Truncated mode-amplitude vectors.

use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A truncated state `(α_0, …, α_{N-1})` of a resonant system.
///
/// Indices at or beyond the truncation read as zero, which is how every
/// right-hand side in this crate realises the truncated Hamiltonian.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModeSpectrum {
    amps: Vec<Complex64>,
}

impl ModeSpectrum {
    /// Wraps an amplitude vector, rejecting NaN or infinite entries.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if let Some(index) = amps.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { amps })
    }

    pub(crate) fn from_vec_unchecked(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn zeros(truncation: usize) -> Self {
        Self {
            amps: vec![Complex64::new(0.0, 0.0); truncation],
        }
    }

    /// `c δ_{n,mode}` in a window of `truncation` modes.
    pub fn single(truncation: usize, mode: usize, c: Complex64) -> Result<Self> {
        if mode >= truncation {
            return Err(Error::TruncationOverflow {
                required: mode + 1,
                available: truncation,
            });
        }
        let mut s = Self::zeros(truncation);
        s.amps[mode] = c;
        Ok(s)
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            amps: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.amps
    }

    /// Amplitude of mode `n`, zero outside the window.
    #[inline]
    pub fn get(&self, n: usize) -> Complex64 {
        self.amps.get(n).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.amps.iter()
    }

    /// Per-mode energies `|α_n|²`.
    pub fn mode_energies(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Euclidean norm `(Σ|α_n|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Copy into a window of `truncation` modes, zero-padding or cutting.
    pub fn resized(&self, truncation: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(truncation, Complex64::new(0.0, 0.0));
        Self { amps }
    }

    /// Max-norm distance between two spectra; the shorter one is zero-padded.
    pub fn max_distance(&self, other: &Self) -> f64 {
        let n = self.truncation().max(other.truncation());
        (0..n)
            .map(|i| (self.get(i) - other.get(i)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for ModeSpectrum {
    type Output = Complex64;

    fn index(&self, n: usize) -> &Complex64 {
        &self.amps[n]
    }
}

impl From<ModeSpectrum> for Vec<Complex64> {
    fn from(s: ModeSpectrum) -> Self {
        s.amps
    }
}

impl<'a> IntoIterator for &'a ModeSpectrum {
    type Item = &'a Complex64;
    type IntoIter = std::slice::Iter<'a, Complex64>;

    fn into_iter(self) -> Self::IntoIter {
        self.amps.iter()
    }
}

/// Reinterpret complex amplitudes as interleaved `(re, im)` pairs.
pub fn as_real(z: &[Complex64]) -> &[f64] {
    bytemuck::cast_slice(z)
}

pub fn as_real_mut(z: &mut [Complex64]) -> &mut [f64] {
    bytemuck::cast_slice_mut(z)
}

pub fn as_complex(x: &[f64]) -> &[Complex64] {
    bytemuck::cast_slice(x)
}

pub fn as_complex_mut(x: &mut [f64]) -> &mut [Complex64] {
    bytemuck::cast_slice_mut(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = ModeSpectrum::new(vec![Complex64::new(1.0, 0.0), Complex64::new(f64::NAN, 0.0)]);
        assert!(matches!(err, Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn reads_zero_outside_window() {
        let s = ModeSpectrum::from_real(&[1.0, 2.0]);
        assert_eq!(s.get(5), Complex64::new(0.0, 0.0));
        assert_eq!(s[1], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn real_view_interleaves() {
        let z = [Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)];
        assert_eq!(as_real(&z), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(as_complex(as_real(&z)), &z);
    }

    #[test]
    fn single_mode_out_of_window() {
        assert!(ModeSpectrum::single(3, 3, Complex64::new(1.0, 0.0)).is_err());
    }
}
