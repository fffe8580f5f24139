//! Stroboscopic quantum evolution under the Floquet propagator.
//!
//! Observables are recorded once per full cycle (kick, then free rotation).
//! Mean energy is reported in units of ℏν including the zero-point half,
//! ⟨n̂⟩ + 1/2, so quantum and classical heating curves start at 0.5 for the
//! vacuum and its matched Gaussian ensemble. Truncation error is tracked as
//! leakage — population in the top decile of the basis — and a curve counts
//! as converged only while leakage stays below [`LEAKAGE_TOL`].

use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use crate::error::{KhoError, Result};
use crate::fock::{floquet_operator, FloquetOperator, FockBasis};
use crate::params::SystemParams;

/// Fraction of the basis top counted as leakage.
pub const LEAKAGE_FRACTION: f64 = 0.1;
/// Leakage bound for a curve to be trusted.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Maximum relative change of any energy sample allowed when the basis is
/// doubled; the operational convergence criterion.
pub const DOUBLING_TOL: f64 = 1e-6;
/// Norm tolerance at state construction.
const NORM_TOL: f64 = 1e-8;

/// Normalized amplitude vector over a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: FockBasis,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wrap amplitudes, enforcing the unit-norm invariant.
    pub fn new(basis: FockBasis, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != basis.size() {
            return Err(KhoError::DimensionMismatch {
                left: amplitudes.len(),
                right: basis.size(),
            });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(KhoError::domain(format!(
                "state norm {norm} differs from 1 by more than {NORM_TOL:.1e}"
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    fn new_unchecked(basis: FockBasis, amplitudes: Array1<C64>) -> Self {
        debug_assert!(
            (amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs() < 1e-6
        );
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨φ|ψ⟩ with `self` as φ.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(KhoError::DimensionMismatch {
                left: self.basis.size(),
                right: other.basis.size(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(&a, &b)| a.conj() * b)
            .sum())
    }
}

/// The oscillator ground state |0⟩.
pub fn vacuum_state(basis: FockBasis) -> StateVector {
    let mut amplitudes = Array1::<C64>::zeros(basis.size());
    amplitudes[0] = C64::new(1.0, 0.0);
    StateVector::new_unchecked(basis, amplitudes)
}

/// How displacement centers (x1, x2) are mapped to the coherent amplitude β.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterConvention {
    /// (x1, x2) = (v/2η, u/2η): β = x1 + i·x2, independent of η. The axes
    /// used for the Husimi plots.
    HusimiAxes,
    /// (x1, x2) = (v, u): β = (x1 + i·x2)/(2η).
    ScaledPhaseSpace,
}

/// Coherent amplitude for a displacement center under the given convention.
pub fn coherent_amplitude(center: (f64, f64), convention: CenterConvention, eta: f64) -> C64 {
    match convention {
        CenterConvention::HusimiAxes => C64::new(center.0, center.1),
        CenterConvention::ScaledPhaseSpace => C64::new(center.0, center.1) / (2.0 * eta),
    }
}

/// Vacuum displaced to coherent amplitude β: c_n = e^{−|β|²/2} βⁿ/√(n!),
/// renormalized after truncation. Rejected if the basis cannot hold the
/// state (|β|² > N/4 or norm deficit beyond 1e-8).
pub fn displaced_vacuum(basis: FockBasis, beta: C64) -> Result<StateVector> {
    let n = basis.size();
    if beta.norm_sqr() > n as f64 / 4.0 {
        return Err(KhoError::InsufficientBasis {
            deficit: f64::NAN,
            basis_size: n,
            limit: n as f64 / 4.0,
        });
    }
    let mut amplitudes = Array1::<C64>::zeros(n);
    let mut c = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        amplitudes[k] = c;
        c = c * beta / ((k + 1) as f64).sqrt();
    }
    let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let deficit = 1.0 - norm_sq;
    if deficit > NORM_TOL {
        return Err(KhoError::InsufficientBasis {
            deficit,
            basis_size: n,
            limit: NORM_TOL,
        });
    }
    let scale = norm_sq.sqrt().recip();
    amplitudes.mapv_inplace(|z| z * scale);
    Ok(StateVector::new_unchecked(basis, amplitudes))
}

/// One Floquet cycle, |ψ⟩ → U|ψ⟩.
pub fn apply_floquet(state: &StateVector, u: &FloquetOperator) -> Result<StateVector> {
    if state.basis() != u.basis() {
        return Err(KhoError::DimensionMismatch {
            left: state.basis().size(),
            right: u.basis().size(),
        });
    }
    let amplitudes = u.matrix().dot(state.amplitudes());
    Ok(StateVector {
        basis: state.basis,
        amplitudes,
    })
}

/// Mean energy in units of ℏν: Σ (n + 1/2)|c_n|².
pub fn mean_energy(state: &StateVector) -> f64 {
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, z)| (n as f64 + 0.5) * z.norm_sqr())
        .sum()
}

/// Population in the top ⌈fraction·N⌉ basis levels.
pub fn leakage(state: &StateVector, top_fraction: f64) -> f64 {
    assert!(
        top_fraction > 0.0 && top_fraction < 1.0,
        "top_fraction must be in (0, 1)"
    );
    let n = state.basis.size();
    let top = ((top_fraction * n as f64).ceil() as usize).max(1);
    state
        .amplitudes
        .iter()
        .skip(n - top)
        .map(|z| z.norm_sqr())
        .sum()
}

/// Mean energy and leakage per kick.
#[derive(Debug, Clone)]
pub struct HeatingCurve {
    pub params: SystemParams,
    pub basis_size: usize,
    pub n_kicks: usize,
    /// energies[i] after i kicks; entry 0 is the initial state's energy.
    pub energies: Vec<f64>,
    pub leakage: Vec<f64>,
    /// False as soon as leakage exceeded [`LEAKAGE_TOL`] at any kick.
    pub converged: bool,
}

/// Evolve `initial` for `n_kicks` cycles, recording energy and leakage after
/// every cycle.
pub fn heating_curve(
    params: &SystemParams,
    basis: FockBasis,
    n_kicks: usize,
    initial: &StateVector,
) -> Result<HeatingCurve> {
    let u = floquet_operator(params, basis)?;
    heating_curve_with(&u, n_kicks, initial)
}

/// Same as [`heating_curve`] but reusing a prebuilt operator.
pub fn heating_curve_with(
    u: &FloquetOperator,
    n_kicks: usize,
    initial: &StateVector,
) -> Result<HeatingCurve> {
    if initial.basis() != u.basis() {
        return Err(KhoError::DimensionMismatch {
            left: initial.basis().size(),
            right: u.basis().size(),
        });
    }
    let mut energies = Vec::with_capacity(n_kicks + 1);
    let mut leak = Vec::with_capacity(n_kicks + 1);
    let mut state = initial.clone();
    energies.push(mean_energy(&state));
    leak.push(leakage(&state, LEAKAGE_FRACTION));
    for _ in 0..n_kicks {
        state = apply_floquet(&state, u)?;
        energies.push(mean_energy(&state));
        leak.push(leakage(&state, LEAKAGE_FRACTION));
    }
    let converged = leak.iter().all(|&l| l < LEAKAGE_TOL);
    Ok(HeatingCurve {
        params: *u.params(),
        basis_size: u.basis().size(),
        n_kicks,
        energies,
        leakage: leak,
        converged,
    })
}

/// Initial-state recipe that can be rebuilt at any basis size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Vacuum,
    Displaced {
        center: (f64, f64),
        convention: CenterConvention,
    },
}

impl InitialState {
    pub fn build(&self, basis: FockBasis, eta: f64) -> Result<StateVector> {
        match *self {
            InitialState::Vacuum => Ok(vacuum_state(basis)),
            InitialState::Displaced { center, convention } => {
                displaced_vacuum(basis, coherent_amplitude(center, convention, eta))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialState::Vacuum => "vacuum".to_string(),
            InitialState::Displaced { center, convention } => format!(
                "displaced({}, {}, {})",
                center.0,
                center.1,
                match convention {
                    CenterConvention::HusimiAxes => "husimi-axes",
                    CenterConvention::ScaledPhaseSpace => "phase-space",
                }
            ),
        }
    }
}

/// Outcome of the automatic basis-size search.
#[derive(Debug, Clone)]
pub struct ConvergenceInfo {
    /// Basis size whose curve is returned.
    pub accepted_n: usize,
    /// Max relative energy change when doubling to 2·accepted_n; None when
    /// the cap prevented the doubling check.
    pub doubling_drift: Option<f64>,
    /// Leakage stayed below tolerance and the doubling check passed.
    pub validated: bool,
}

/// Double the basis until the curve's leakage stays below tolerance and the
/// doubling check passes, starting from `n_start` and giving up at `n_cap`.
///
/// The accepted curve (computed at the smallest passing N) is returned along
/// with the search record; if the cap is reached the largest curve is
/// returned with `validated = false`.
pub fn converged_heating_curve(
    params: &SystemParams,
    n_kicks: usize,
    initial: &InitialState,
    n_start: usize,
    n_cap: usize,
) -> Result<(HeatingCurve, ConvergenceInfo)> {
    assert!(n_start >= 2 && n_cap >= n_start, "invalid basis bounds");
    let mut n = n_start;
    let mut current: Option<HeatingCurve> = None;
    loop {
        let curve = match current.take() {
            Some(c) => c,
            None => {
                let basis = FockBasis::new(n)?;
                heating_curve(params, basis, n_kicks, &initial.build(basis, params.eta())?)?
            }
        };
        if !curve.converged {
            if 2 * n > n_cap {
                return Ok((
                    curve,
                    ConvergenceInfo {
                        accepted_n: n,
                        doubling_drift: None,
                        validated: false,
                    },
                ));
            }
            n *= 2;
            continue;
        }
        if 2 * n > n_cap {
            return Ok((
                curve,
                ConvergenceInfo {
                    accepted_n: n,
                    doubling_drift: None,
                    validated: false,
                },
            ));
        }
        let basis2 = FockBasis::new(2 * n)?;
        let doubled = heating_curve(
            params,
            basis2,
            n_kicks,
            &initial.build(basis2, params.eta())?,
        )?;
        let drift = max_relative_drift(&curve.energies, &doubled.energies);
        if drift < DOUBLING_TOL {
            return Ok((
                curve,
                ConvergenceInfo {
                    accepted_n: n,
                    doubling_drift: Some(drift),
                    validated: true,
                },
            ));
        }
        n *= 2;
        current = Some(doubled);
    }
}

fn max_relative_drift(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn basis(n: usize) -> FockBasis {
        FockBasis::new(n).unwrap()
    }

    #[test]
    fn vacuum_properties() {
        let v = vacuum_state(basis(16));
        assert_eq!(mean_energy(&v), 0.5);
        assert_eq!(v.norm(), 1.0);
        let self_overlap = v.overlap(&v).unwrap();
        assert_eq!(self_overlap, C64::new(1.0, 0.0));
        assert_eq!(leakage(&v, 0.5), 0.0);
    }

    #[test]
    fn displaced_vacuum_zero_center_is_vacuum() {
        let d = displaced_vacuum(basis(16), C64::new(0.0, 0.0)).unwrap();
        let v = vacuum_state(basis(16));
        assert_abs_diff_eq!(d.overlap(&v).unwrap().norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn displaced_vacuum_coherent_moments() {
        // (1.2, 2.0): ⟨n̂⟩ = |β|² = 5.44, so energy = 5.94
        let b = C64::new(1.2, 2.0);
        let d = displaced_vacuum(basis(80), b).unwrap();
        assert_relative_eq!(mean_energy(&d), 5.94, max_relative = 1e-10);
        let norm_sq: f64 = d.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((1.0 - norm_sq).abs() < 1e-12);
    }

    #[test]
    fn displaced_vacuum_rejects_small_basis() {
        match displaced_vacuum(basis(8), C64::new(3.0, 0.0)) {
            Err(KhoError::InsufficientBasis { .. }) => {}
            other => panic!("expected InsufficientBasis, got {other:?}"),
        }
    }

    #[test]
    fn coherent_amplitude_conventions() {
        let eta = 0.464;
        let husimi = coherent_amplitude((1.2, 2.0), CenterConvention::HusimiAxes, eta);
        assert_eq!(husimi, C64::new(1.2, 2.0));
        let phase = coherent_amplitude((1.2, 2.0), CenterConvention::ScaledPhaseSpace, eta);
        assert_relative_eq!(phase.re, 1.2 / (2.0 * eta), max_relative = 1e-15);
        assert_relative_eq!(phase.im, 2.0 / (2.0 * eta), max_relative = 1e-15);
    }

    #[test]
    fn zero_kick_evolution_is_pure_phases() {
        let params = SystemParams::new(0.0, 6, 0.464).unwrap();
        let b = basis(12);
        let u = floquet_operator(&params, b).unwrap();
        // vacuum picks up the n = 0 phase, i.e. none at all
        let v = vacuum_state(b);
        let v1 = apply_floquet(&v, &u).unwrap();
        assert_abs_diff_eq!((v1.amplitudes()[0] - C64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        // |3⟩ → e^{−iπ}|3⟩ = −|3⟩ at q = 6
        let mut amps = Array1::<C64>::zeros(12);
        amps[3] = C64::new(1.0, 0.0);
        let f3 = StateVector::new(b, amps).unwrap();
        let f3 = apply_floquet(&f3, &u).unwrap();
        assert_abs_diff_eq!((f3.amplitudes()[3] - C64::new(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn superposition_energy() {
        let b = basis(8);
        let mut amps = Array1::<C64>::zeros(8);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = C64::new(r, 0.0);
        amps[2] = C64::new(r, 0.0);
        let s = StateVector::new(b, amps).unwrap();
        assert_relative_eq!(mean_energy(&s), 1.5, max_relative = 1e-14);
    }

    #[test]
    fn top_state_leaks_fully() {
        let b = basis(20);
        let mut amps = Array1::<C64>::zeros(20);
        amps[19] = C64::new(1.0, 0.0);
        let s = StateVector::new(b, amps).unwrap();
        assert_eq!(leakage(&s, 0.1), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let params = SystemParams::new(2.0, 6, 0.464).unwrap();
        let u = floquet_operator(&params, basis(16)).unwrap();
        let v = vacuum_state(basis(8));
        assert!(matches!(
            apply_floquet(&v, &u),
            Err(KhoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_is_conserved_over_many_kicks() {
        let params = SystemParams::new(2.0, 6, 0.464).unwrap();
        let b = basis(64);
        let u = floquet_operator(&params, b).unwrap();
        let mut state = vacuum_state(b);
        for _ in 0..600 {
            state = apply_floquet(&state, &u).unwrap();
        }
        assert!((state.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_kick_heating_curve_is_constant() {
        let params = SystemParams::new(0.0, 6, 0.464).unwrap();
        let b = basis(24);
        let initial = displaced_vacuum(b, C64::new(0.8, -0.3)).unwrap();
        let curve = heating_curve(&params, b, 50, &initial).unwrap();
        assert_eq!(curve.energies.len(), 51);
        let e0 = curve.energies[0];
        assert_relative_eq!(e0, mean_energy(&initial), max_relative = 1e-15);
        for &e in &curve.energies {
            assert_relative_eq!(e, e0, max_relative = 1e-12);
        }
        assert!(curve.converged);
    }

    #[test]
    fn curve_flags_leakage() {
        // deliberately tiny basis at strong kick: population reaches the top
        let params = SystemParams::new(2.0, 6, 0.464).unwrap();
        let b = basis(16);
        let initial = displaced_vacuum(b, C64::new(1.2, 0.9)).unwrap();
        let curve = heating_curve(&params, b, 50, &initial).unwrap();
        assert!(!curve.converged);
    }

    #[test]
    fn auto_convergence_reaches_a_stable_basis() {
        let params = SystemParams::new(2.0, 6, 0.459).unwrap();
        let (curve, info) =
            converged_heating_curve(&params, 30, &InitialState::Vacuum, 16, 512).unwrap();
        assert!(info.validated, "search ended at cap: {info:?}");
        assert!(curve.converged);
        assert_eq!(curve.basis_size, info.accepted_n);
        assert!(info.doubling_drift.unwrap() < DOUBLING_TOL);
        assert_relative_eq!(curve.energies[0], 0.5, max_relative = 1e-12);
    }
}
