//! Dense linear algebra helpers on top of LAPACK (via ndarray-linalg).
//!
//! The one non-trivial routine is [`diagonalize_unitary`]: a unitary matrix
//! is normal, so its Hermitian and anti-Hermitian parts A = (U + U†)/2 and
//! B = (U − U†)/(2i) commute and share an orthonormal eigenbasis. We
//! diagonalize A with the symmetric eigensolver, then split every cluster of
//! nearly equal A-eigenvalues (cos φ folds ±φ together) by diagonalizing the
//! projected B block, and finally re-split sub-blocks that B left degenerate.
//! Every transformation is unitary, so the returned eigenbasis is orthonormal
//! to machine precision independent of eigenvalue gaps — which a general
//! nonsymmetric solver does not guarantee for clustered spectra.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{KhoError, Result};

/// Cluster tolerance on eigenvalues of A = Re U (operator norm of A is ≤ 1).
const CLUSTER_TOL_A: f64 = 1e-6;
/// Sub-cluster tolerance on eigenvalues of the projected B blocks.
const CLUSTER_TOL_B: f64 = 1e-8;
/// Eigenvalues closer than this are one degenerate multiplet for gauge
/// fixing.
const DEGENERATE_GAUGE_TOL: f64 = 1e-10;

/// Eigendecomposition of a real symmetric matrix; eigenvectors are the
/// columns of the returned matrix, eigenvalues ascending.
pub(crate) fn eigh_real(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    m.eigh(UPLO::Lower)
        .map_err(|e| KhoError::numeric("real symmetric eigensolver", e.to_string()))
}

/// Eigendecomposition of a complex Hermitian matrix; eigenvectors are the
/// columns of the returned matrix, eigenvalues ascending.
///
/// ndarray-linalg hands the row-major array to LAPACK in place, which makes
/// LAPACK see Aᵀ = A* and report the conjugated eigenbasis; we conjugate back
/// here. Pinned by the residual tests below.
pub(crate) fn eigh_hermitian(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (w, v) = m
        .eigh(UPLO::Lower)
        .map_err(|e| KhoError::numeric("hermitian eigensolver", e.to_string()))?;
    Ok((w, v.mapv(|z| z.conj())))
}

/// Conjugate transpose.
pub(crate) fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// ‖M†M − I‖_max.
pub(crate) fn unitarity_defect(m: &Array2<C64>) -> f64 {
    let p = adjoint(m).dot(m);
    let n = p.nrows();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            defect = defect.max((p[(i, j)] - expected).norm());
        }
    }
    defect
}

/// Full eigendecomposition of a (numerically) unitary matrix.
#[derive(Debug, Clone)]
pub(crate) struct UnitaryEigen {
    /// Eigenvalues, on the unit circle up to the accuracy of the input.
    pub values: Vec<C64>,
    /// Orthonormal eigenvectors, column j belongs to `values[j]`.
    pub vectors: Array2<C64>,
    /// Per-pair residuals ‖U v − λ v‖₂.
    pub residuals: Vec<f64>,
}

/// Diagonalize a unitary matrix via its commuting Hermitian parts.
pub(crate) fn diagonalize_unitary(u: &Array2<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(KhoError::numeric(
            "unitary diagonalization",
            format!("matrix is {}x{}, expected square", n, u.ncols()),
        ));
    }
    let udag = adjoint(u);
    let a_mat = (u + &udag).mapv(|z| 0.5 * z);
    let b_mat = (u - &udag).mapv(|z| z * C64::new(0.0, -0.5));

    let (a_vals, mut vectors) = eigh_hermitian(&a_mat)?;
    let a = a_vals.to_vec();

    // B in the A eigenbasis; block-diagonal across distinct A eigenvalues up
    // to the normality defect of the input.
    let b_prime = adjoint(&vectors).dot(&b_mat).dot(&vectors);

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && a[end] - a[end - 1] <= CLUSTER_TOL_A {
            end += 1;
        }
        if end - start > 1 {
            split_cluster(&b_prime, &mut vectors, &a_mat, start, end)?;
        }
        start = end;
    }

    // Exactly degenerate multiplets leave the eigenbasis gauge arbitrary;
    // rotate each into the axis-aligned polar gauge so that, e.g., the K = 0
    // propagator reports plain Fock states rather than random mixtures.
    {
        let probe = u.dot(&vectors);
        let lam: Vec<C64> = (0..n)
            .map(|j| {
                vectors
                    .column(j)
                    .iter()
                    .zip(probe.column(j).iter())
                    .map(|(&vi, &wi)| vi.conj() * wi)
                    .sum()
            })
            .collect();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && (lam[j] - lam[j - 1]).norm() < DEGENERATE_GAUGE_TOL {
                j += 1;
            }
            if j - i > 1 {
                canonicalize_degenerate_block(&mut vectors, i, j)?;
            }
            i = j;
        }
    }

    // Rayleigh quotients λ_j = ⟨v_j|U|v_j⟩ are the residual-minimizing
    // eigenvalues for the constructed basis; the residual columns of
    // U V − V Λ then measure the remaining defect.
    let mut uv = u.dot(&vectors);
    let values: Vec<C64> = (0..n)
        .map(|j| {
            vectors
                .column(j)
                .iter()
                .zip(uv.column(j).iter())
                .map(|(&vi, &wi)| vi.conj() * wi)
                .sum()
        })
        .collect();
    for (j, &lambda) in values.iter().enumerate() {
        let col = vectors.column(j);
        let mut r = uv.column_mut(j);
        r.zip_mut_with(&col, |ri, &vi| *ri -= lambda * vi);
    }
    let residuals: Vec<f64> = (0..n)
        .map(|j| uv.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    Ok(UnitaryEigen {
        values,
        vectors,
        residuals,
    })
}

/// Diagonalize the B block of one A cluster and, where B is itself
/// degenerate, re-diagonalize the A projection inside that sub-block.
fn split_cluster(
    b_prime: &Array2<C64>,
    vectors: &mut Array2<C64>,
    a_mat: &Array2<C64>,
    start: usize,
    end: usize,
) -> Result<()> {
    let size = end - start;
    let block = b_prime.slice(s![start..end, start..end]).to_owned();
    let (b_vals, s_rot) = eigh_hermitian(&block)?;

    let cluster = vectors.slice(s![.., start..end]).to_owned();
    let rotated = cluster.dot(&s_rot);
    vectors.slice_mut(s![.., start..end]).assign(&rotated);

    // sub-blocks degenerate in B: restore A purity there
    let mut s0 = 0;
    while s0 < size {
        let mut s1 = s0 + 1;
        while s1 < size && b_vals[s1] - b_vals[s1 - 1] <= CLUSTER_TOL_B {
            s1 += 1;
        }
        if s1 - s0 > 1 {
            let sub = vectors.slice(s![.., start + s0..start + s1]).to_owned();
            let a_sub = adjoint(&sub).dot(a_mat).dot(&sub);
            let (_, t_rot) = eigh_hermitian(&a_sub)?;
            let rotated = sub.dot(&t_rot);
            vectors
                .slice_mut(s![.., start + s0..start + s1])
                .assign(&rotated);
        }
        s0 = s1;
    }
    Ok(())
}

/// Rotate the columns [start, end) — an orthonormal basis of one degenerate
/// eigenspace — so that the submatrix on the subspace's m dominant rows
/// becomes Hermitian positive (the polar gauge). For an eigenspace spanned
/// by Fock states this recovers the Fock states themselves, with positive
/// real amplitudes, ordered by level.
fn canonicalize_degenerate_block(
    vectors: &mut Array2<C64>,
    start: usize,
    end: usize,
) -> Result<()> {
    let m = end - start;
    let block = vectors.slice(s![.., start..end]).to_owned();
    let mut row_norms: Vec<(f64, usize)> = block
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r.iter().map(|z| z.norm_sqr()).sum::<f64>(), i))
        .collect();
    row_norms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut rows: Vec<usize> = row_norms[..m].iter().map(|&(_, i)| i).collect();
    rows.sort_unstable();

    let mut s_mat = Array2::<C64>::zeros((m, m));
    for (ri, &r) in rows.iter().enumerate() {
        s_mat.row_mut(ri).assign(&block.row(r));
    }
    let ss = s_mat.dot(&adjoint(&s_mat));
    let (d, p) = eigh_hermitian(&ss)?;
    if d[0] <= 1e-6 {
        // dominant rows do not resolve the subspace; keep the current gauge
        return Ok(());
    }
    // R = S† (S S†)^{−1/2}, unitary because S S† is positive definite
    let mut scaled = p.clone();
    for (k, &dk) in d.iter().enumerate() {
        let f = dk.sqrt().recip();
        scaled.column_mut(k).mapv_inplace(|z| z * f);
    }
    let inv_sqrt = scaled.dot(&adjoint(&p));
    let rotation = adjoint(&s_mat).dot(&inv_sqrt);
    let rotated = block.dot(&rotation);
    vectors.slice_mut(s![.., start..end]).assign(&rotated);
    Ok(())
}

/// Max |⟨v_i|v_j⟩ − δ_ij| over all column pairs.
pub(crate) fn orthonormality_defect(vectors: &Array2<C64>) -> f64 {
    unitarity_defect(vectors)
}
