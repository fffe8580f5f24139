//! Shared oracles for integration tests: a scaling-and-squaring matrix
//! exponential that is independent of the library's eigendecomposition
//! route, and small matrix helpers.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

/// exp(M) by scaling-and-squaring with a Taylor series on the scaled matrix.
pub fn expm(m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let inf_norm: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if inf_norm > 0.25 {
        (inf_norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(-(squarings as i32));
    let scaled = m.mapv(|z| z * scale);

    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=30 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Matrix of â + â† on the first `n` Fock states.
pub fn ladder_sum(n: usize) -> Array2<C64> {
    let mut x = Array2::<C64>::zeros((n, n));
    for k in 1..n {
        let v = (k as f64).sqrt();
        x[(k - 1, k)] = C64::new(v, 0.0);
        x[(k, k - 1)] = C64::new(v, 0.0);
    }
    x
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// 2×2 model U(η) = exp(i(c·I + s(η−η₀)σ_z + (g/2)σ_x)): eigenphases
/// c ± √(s²(η−η₀)² + g²/4), minimal gap g at η₀.
pub fn landau_zener_matrix(eta: f64, c: f64, slope: f64, eta0: f64, gap: f64) -> Array2<C64> {
    let d = slope * (eta - eta0);
    let r = (d * d + gap * gap / 4.0).sqrt();
    let phase = C64::from_polar(1.0, c);
    let (cos_r, sinc_r) = if r == 0.0 {
        (1.0, 1.0)
    } else {
        (r.cos(), r.sin() / r)
    };
    let i = C64::new(0.0, 1.0);
    let mut m = Array2::<C64>::zeros((2, 2));
    m[(0, 0)] = phase * (C64::new(cos_r, 0.0) + i * sinc_r * d);
    m[(1, 1)] = phase * (C64::new(cos_r, 0.0) - i * sinc_r * d);
    m[(0, 1)] = phase * i * sinc_r * (gap / 2.0);
    m[(1, 0)] = phase * i * sinc_r * (gap / 2.0);
    m
}
