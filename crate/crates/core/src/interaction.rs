//! Interaction coefficients of the cubic conformal wave equation in sine modes.
//!
//! `S_{jkln} = (2/π) ∫_0^π sin((j+1)x) sin((k+1)x) sin((l+1)x) sin((n+1)x) / sin²x dx`.
//!
//! Writing `sin((j+1)x)/sin x = U_j(cos x)` and expanding `U_j U_k` in Chebyshev
//! polynomials of the second kind, `S` counts the common terms of the two
//! ladders `{|j-k|, |j-k|+2, …, j+k}` and `{|l-n|, …, l+n}`.

use std::f64::consts::PI;

/// Closed form of `S_{jkln}` for arbitrary nonnegative indices.
///
/// Zero unless `j+k ≡ l+n (mod 2)`; otherwise the overlap length of the two
/// Chebyshev ladders. On the resonant set `j+k = l+n` this is `min(j,k,l,n)+1`.
pub fn interaction_coefficient(j: usize, k: usize, l: usize, n: usize) -> u64 {
    if (j + k) % 2 != (l + n) % 2 {
        return 0;
    }
    let top = (j + k).min(l + n) as i64;
    let bottom = j.abs_diff(k).max(l.abs_diff(n)) as i64;
    if top < bottom {
        0
    } else {
        ((top - bottom) / 2 + 1) as u64
    }
}

/// Resonant-set coefficient `min(n, j, k, n+j-k) + 1` for `0 ≤ k ≤ n + j`.
#[inline]
pub fn resonant_coefficient(n: usize, j: usize, k: usize) -> u64 {
    debug_assert!(k <= n + j);
    let m = n + j - k;
    (n.min(j).min(k).min(m) + 1) as u64
}

/// `S_{jkln}` by numerical quadrature of the defining integral.
///
/// The integrand `U_j U_k sin((l+1)x) sin((n+1)x)` is an even trigonometric
/// polynomial of degree at most `j+k+l+n+2`, so the offset midpoint rule on the
/// full period with more nodes than that degree integrates it exactly; the
/// nodes never touch the removable singularities at `0` and `π`.
pub fn quadrature_coefficient(j: usize, k: usize, l: usize, n: usize) -> f64 {
    let degree = j + k + l + n + 2;
    let nodes = (2 * degree + 8).next_power_of_two();
    let h = 2.0 * PI / nodes as f64;
    let mut acc = 0.0;
    for i in 0..nodes {
        let x = (i as f64 + 0.5) * h;
        let s = x.sin();
        let term = ((j + 1) as f64 * x).sin() * ((k + 1) as f64 * x).sin() / (s * s)
            * ((l + 1) as f64 * x).sin()
            * ((n + 1) as f64 * x).sin();
        acc += term;
    }
    // (2/π) ∫_0^π = (1/π) ∫_0^{2π}
    acc * h / PI
}
