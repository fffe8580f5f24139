//! Kick and Floquet operators in a truncated Fock basis.
//!
//! Matrix elements of cos[η(â + â†)] are evaluated in closed form through
//! associated Laguerre polynomials, so finite N is an exact projection of the
//! infinite-dimensional operator argument onto the first N levels. The
//! one-cycle propagator U = e^{−iα â†â} · e^{−iK̃ cos[η(â + â†)]} is then
//! assembled by exponentiating that projection through its symmetric
//! eigendecomposition, which makes both factors — and hence U — unitary to
//! machine precision at any N. Truncation error therefore shows up only as
//! state leakage into the top of the basis (tracked by the propagation
//! module), never as a unitarity defect.

use std::io::{Read, Write};

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::error::{KhoError, Result};
use crate::linalg;
use crate::params::SystemParams;

const DUMP_MAGIC: &[u8; 4] = b"KHOP";
const DUMP_VERSION: u32 = 1;

/// Truncated harmonic-oscillator eigenbasis |0⟩ … |N−1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    size: usize,
}

impl FockBasis {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(KhoError::domain(format!(
                "Fock basis needs at least 2 levels, got {size}"
            )));
        }
        Ok(FockBasis { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// i^d for the phase of displacement matrix elements.
fn i_power(d: usize) -> C64 {
    match d % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// √(n!/(n+d)!) · η^d · e^{−η²/2} · L_n^{(d)}(η²), evaluated by a recurrence
/// on n with the prefactor folded in, so no factorial is ever formed. The
/// base case uses log space; every ŵ is a matrix element of a unitary and
/// hence bounded by 1.
fn weighted_laguerre(n: usize, d: usize, eta: f64, ln_fact_d: f64) -> f64 {
    let x = eta * eta;
    let w0 = if eta == 0.0 {
        if d == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (d as f64 * eta.ln() - 0.5 * x - 0.5 * ln_fact_d).exp()
    };
    if n == 0 {
        return w0;
    }
    let mut w_prev = 0.0;
    let mut w = w0;
    for j in 0..n {
        let jf = j as f64;
        let df = d as f64;
        let next = ((2.0 * jf + 1.0 + df - x) * w - (jf * (jf + df)).sqrt() * w_prev)
            / (((jf + 1.0) * (jf + 1.0 + df)).sqrt());
        w_prev = w;
        w = next;
    }
    w
}

fn ln_factorial(d: usize) -> f64 {
    (1..=d).map(|k| (k as f64).ln()).sum()
}

/// Matrix element ⟨m|e^{iη(â+â†)}|n⟩.
///
/// For m ≥ n this is √(n!/m!) (iη)^{m−n} e^{−η²/2} L_n^{(m−n)}(η²); the
/// operator is complex symmetric in the Fock basis, so the element is
/// unchanged under m ↔ n. Negative indices are unrepresentable by the
/// signature.
pub fn displacement_element(m: usize, n: usize, eta: f64) -> C64 {
    assert!(eta >= 0.0, "eta must be >= 0");
    let (lo, d) = if m >= n { (n, m - n) } else { (m, n - m) };
    i_power(d) * weighted_laguerre(lo, d, eta, ln_factorial(d))
}

/// Real symmetric N×N matrix of ⟨m|cos[η(â+â†)]|n⟩.
///
/// Elements with odd m−n vanish by parity; the stored matrix is the exact
/// projection of the infinite-dimensional operator onto the first N levels,
/// so its entries do not depend on N.
#[derive(Debug, Clone)]
pub struct HermitianCosineOperator {
    basis: FockBasis,
    eta: f64,
    matrix: Array2<f64>,
}

impl HermitianCosineOperator {
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// Build the cosine operator, (D + D*)/2 with D the displacement matrix.
pub fn cosine_operator(eta: f64, basis: FockBasis) -> HermitianCosineOperator {
    assert!(eta >= 0.0, "eta must be >= 0");
    let n = basis.size();
    let mut matrix = Array2::<f64>::zeros((n, n));
    let mut ln_fact = 0.0;
    let mut d = 0;
    while d < n {
        // i^d is real for even d: sign (−1)^{d/2}
        let sign = if d % 4 == 0 { 1.0 } else { -1.0 };
        if d > 0 {
            ln_fact += ((d - 1) as f64).ln() + (d as f64).ln();
        }
        let x = eta * eta;
        let w0 = if eta == 0.0 {
            if d == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (d as f64 * eta.ln() - 0.5 * x - 0.5 * ln_fact).exp()
        };
        let mut w_prev = 0.0;
        let mut w = w0;
        for row in 0..(n - d) {
            let value = sign * w;
            matrix[(row + d, row)] = value;
            matrix[(row, row + d)] = value;
            let jf = row as f64;
            let df = d as f64;
            let next = ((2.0 * jf + 1.0 + df - x) * w - (jf * (jf + df)).sqrt() * w_prev)
                / (((jf + 1.0) * (jf + 1.0 + df)).sqrt());
            w_prev = w;
            w = next;
        }
        d += 2;
    }
    HermitianCosineOperator { basis, eta, matrix }
}

/// exp(−i K̃ C) through the eigendecomposition of the real symmetric C.
pub fn kick_operator(ktilde: f64, cosine: &HermitianCosineOperator) -> Result<Array2<C64>> {
    let n = cosine.basis.size();
    let (w, v) = linalg::eigh_real(cosine.matrix()).map_err(|e| match e {
        KhoError::Numeric { message, .. } => KhoError::numeric(
            format!(
                "kick operator eigensolve (eta={}, ktilde={}, N={})",
                cosine.eta, ktilde, n
            ),
            message,
        ),
        other => other,
    })?;
    let mut w_cos = v.clone();
    let mut w_sin = v.clone();
    for (k, &wk) in w.iter().enumerate() {
        let (s, c) = (ktilde * wk).sin_cos();
        w_cos.column_mut(k).mapv_inplace(|x| x * c);
        w_sin.column_mut(k).mapv_inplace(|x| x * (-s));
    }
    let re = w_cos.dot(&v.t());
    let im = w_sin.dot(&v.t());
    let mut out = Array2::<C64>::zeros((n, n));
    azip_combine(&mut out, &re, &im);
    Ok(out)
}

fn azip_combine(out: &mut Array2<C64>, re: &Array2<f64>, im: &Array2<f64>) {
    ndarray::Zip::from(out)
        .and(re)
        .and(im)
        .for_each(|o, &r, &i| *o = C64::new(r, i));
}

/// Free-evolution phases e^{−iαn}, n = 0..N−1.
pub fn free_phases(alpha: f64, basis: FockBasis) -> Vec<C64> {
    (0..basis.size())
        .map(|n| C64::from_polar(1.0, -alpha * n as f64))
        .collect()
}

/// One-cycle Floquet propagator U = diag(e^{−iαn}) · e^{−iK̃ cos[η(â+â†)]}.
#[derive(Debug, Clone)]
pub struct FloquetOperator {
    basis: FockBasis,
    params: SystemParams,
    matrix: Array2<C64>,
}

impl FloquetOperator {
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// ‖U†U − I‖_max; identically small at any N because both factors are
    /// unitary by construction.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    /// Serialize as magic, version, N, η, K̃, α, then row-major complex
    /// doubles, all little-endian.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        out.write_all(&(self.basis.size() as u32).to_le_bytes())?;
        out.write_all(&self.params.eta().to_le_bytes())?;
        out.write_all(&self.params.ktilde().to_le_bytes())?;
        out.write_all(&self.params.alpha().to_le_bytes())?;
        for z in self.matrix.iter() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`FloquetOperator::dump`]. K and q are reconstructed from
    /// (η, K̃, α).
    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(KhoError::domain("operator dump: bad magic".to_string()));
        }
        let version = read_u32(&mut input)?;
        if version != DUMP_VERSION {
            return Err(KhoError::domain(format!(
                "operator dump: unsupported version {version}"
            )));
        }
        let n = read_u32(&mut input)? as usize;
        let eta = read_f64(&mut input)?;
        let ktilde = read_f64(&mut input)?;
        let alpha = read_f64(&mut input)?;
        let basis = FockBasis::new(n)?;
        let q = (2.0 * std::f64::consts::PI / alpha).round();
        let params = SystemParams::new(ktilde * 2.0 * eta * eta, q as u32, eta)?;
        let mut matrix = Array2::<C64>::zeros((n, n));
        for z in matrix.iter_mut() {
            let re = read_f64(&mut input)?;
            let im = read_f64(&mut input)?;
            *z = C64::new(re, im);
        }
        Ok(FloquetOperator {
            basis,
            params,
            matrix,
        })
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Assemble the Floquet propagator for the given parameters and truncation.
pub fn floquet_operator(params: &SystemParams, basis: FockBasis) -> Result<FloquetOperator> {
    let cosine = cosine_operator(params.eta(), basis);
    let mut matrix = kick_operator(params.ktilde(), &cosine)?;
    for (m, phase) in free_phases(params.alpha(), basis).into_iter().enumerate() {
        matrix.row_mut(m).mapv_inplace(|z| z * phase);
    }
    Ok(FloquetOperator {
        basis,
        params: *params,
        matrix,
    })
}
