//! Reduced parameters of the kicked harmonic oscillator.
//!
//! The classical phase-space structure is fixed by the stochasticity
//! parameter K = Ak²/(mν) and the resonance ratio α = ντ = 2π/q; the quantum
//! dynamics additionally depends on the Lamb-Dicke parameter η = k√(ℏ/2mν),
//! whose square plays the role of an effective Planck constant. Every other
//! module consumes [`SystemParams`] only.

use std::f64::consts::PI;

use crate::error::{KhoError, Result};

/// Relative tolerance on 2π/(ντ) being an integer.
const RESONANCE_TOL: f64 = 1e-9;

/// The q values for which the stochastic web tiles phase space periodically.
const CRYSTAL_Q: [u32; 3] = [3, 4, 6];

/// Dimensionless parameter set fixing both the classical map and the
/// one-cycle quantum propagator.
///
/// α = 2π/q and K̃ = K/(2η²) are recomputed on access rather than stored, so
/// they can never drift out of sync with the primary fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    kick_strength: f64,
    q: u32,
    eta: f64,
}

impl SystemParams {
    /// Build the reduced parameter set from (K, q, η).
    ///
    /// K = 0 is accepted: the kick-free oscillator is the analytic reference
    /// used throughout the test suites.
    pub fn new(kick_strength: f64, q: u32, eta: f64) -> Result<Self> {
        if !(kick_strength >= 0.0) || !kick_strength.is_finite() {
            return Err(KhoError::domain(format!(
                "kick strength K must be finite and >= 0, got {kick_strength}"
            )));
        }
        if q < 3 {
            return Err(KhoError::domain(format!(
                "resonance index q must be an integer >= 3, got {q}"
            )));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(KhoError::domain(format!(
                "Lamb-Dicke parameter eta must be finite and > 0, got {eta}"
            )));
        }
        Ok(SystemParams {
            kick_strength,
            q,
            eta,
        })
    }

    /// Stochasticity parameter K.
    pub fn kick_strength(&self) -> f64 {
        self.kick_strength
    }

    /// Resonance index q (kicks per oscillator period).
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Lamb-Dicke parameter η.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Rotation angle per kick, α = 2π/q.
    pub fn alpha(&self) -> f64 {
        2.0 * PI / self.q as f64
    }

    /// Quantum kick prefactor K̃ = K/(2η²).
    pub fn ktilde(&self) -> f64 {
        self.kick_strength / (2.0 * self.eta * self.eta)
    }

    /// True for q ∈ {3, 4, 6}: the web tiles phase space like a crystal;
    /// all other integers give a quasicrystal web.
    pub fn is_crystal(&self) -> bool {
        CRYSTAL_Q.contains(&self.q)
    }

    /// Same K and q, different Lamb-Dicke parameter. Used by η sweeps.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        SystemParams::new(self.kick_strength, self.q, eta)
    }
}

/// Trap and kick quantities in one consistent unit system supplied by the
/// caller. ℏ is an explicit field so unit-system checks are possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Particle mass m.
    pub mass: f64,
    /// Trap angular frequency ν.
    pub trap_freq: f64,
    /// Kick period τ.
    pub kick_period: f64,
    /// Kick-potential wave vector k.
    pub wave_vector: f64,
    /// Kick-potential depth A (zero allowed: no kick).
    pub kick_depth: f64,
    /// Planck constant ℏ in the caller's units.
    pub hbar: f64,
}

impl PhysicalParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("trap_freq", self.trap_freq),
            ("kick_period", self.kick_period),
            ("wave_vector", self.wave_vector),
            ("hbar", self.hbar),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(KhoError::domain(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if !(self.kick_depth >= 0.0) || !self.kick_depth.is_finite() {
            return Err(KhoError::domain(format!(
                "kick_depth must be finite and >= 0, got {}",
                self.kick_depth
            )));
        }
        Ok(())
    }

    /// Reduce physical trap quantities to the dimensionless parameter set:
    /// K = Ak²/(mν), η = k√(ℏ/2mν), q = 2π/(ντ).
    ///
    /// The web (and quantum revival) condition requires integer q; a ratio
    /// further than [`RESONANCE_TOL`] (relative) from the nearest integer is
    /// rejected as non-resonant.
    pub fn reduce(&self) -> Result<SystemParams> {
        self.validate()?;
        let ratio = 2.0 * PI / (self.trap_freq * self.kick_period);
        let q = ratio.round();
        let deviation = (ratio - q).abs();
        if deviation > RESONANCE_TOL * ratio {
            return Err(KhoError::NonResonant {
                ratio,
                deviation,
                tolerance: RESONANCE_TOL,
            });
        }
        if q < 3.0 {
            return Err(KhoError::domain(format!(
                "resonant ratio q = {q} is below the minimum 3"
            )));
        }
        let kick_strength =
            self.kick_depth * self.wave_vector * self.wave_vector / (self.mass * self.trap_freq);
        let eta = self.wave_vector * (self.hbar / (2.0 * self.mass * self.trap_freq)).sqrt();
        SystemParams::new(kick_strength, q as u32, eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn q6_figure_parameters() {
        let p = SystemParams::new(2.0, 6, 0.464).unwrap();
        assert_relative_eq!(p.alpha(), PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.ktilde(), 2.0 / (2.0 * 0.464 * 0.464), max_relative = 1e-15);
        assert!(p.is_crystal());
    }

    #[test]
    fn zero_kick_is_allowed() {
        let p = SystemParams::new(0.0, 4, 0.5).unwrap();
        assert_relative_eq!(p.alpha(), PI / 2.0, max_relative = 1e-15);
        assert_eq!(p.ktilde(), 0.0);
    }

    #[test]
    fn q5_is_quasicrystal() {
        let p = SystemParams::new(2.0, 5, 0.4).unwrap();
        assert_relative_eq!(p.alpha(), 2.0 * PI / 5.0, max_relative = 1e-15);
        assert!(!p.is_crystal());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(SystemParams::new(-1.0, 6, 0.5).is_err());
        assert!(SystemParams::new(2.0, 2, 0.5).is_err());
        assert!(SystemParams::new(2.0, 6, 0.0).is_err());
        assert!(SystemParams::new(2.0, 6, -0.1).is_err());
        assert!(SystemParams::new(f64::NAN, 6, 0.5).is_err());
    }

    #[test]
    fn physical_reduction_unit_case() {
        // m = ν = k = ℏ = 1, A = 2, τ = 2π/6.
        let p = PhysicalParams {
            mass: 1.0,
            trap_freq: 1.0,
            kick_period: 2.0 * PI / 6.0,
            wave_vector: 1.0,
            kick_depth: 2.0,
            hbar: 1.0,
        };
        let s = p.reduce().unwrap();
        assert_relative_eq!(s.kick_strength(), 2.0, max_relative = 1e-14);
        assert_eq!(s.q(), 6);
        assert_relative_eq!(s.eta(), 1.0 / 2.0f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn zero_depth_gives_zero_k() {
        let p = PhysicalParams {
            mass: 3.0,
            trap_freq: 0.7,
            kick_period: 2.0 * PI / (0.7 * 5.0),
            wave_vector: 1.3,
            kick_depth: 0.0,
            hbar: 2.0,
        };
        let s = p.reduce().unwrap();
        assert_eq!(s.kick_strength(), 0.0);
        assert_eq!(s.q(), 5);
    }

    #[test]
    fn non_resonant_ratio_is_rejected() {
        let p = PhysicalParams {
            mass: 1.0,
            trap_freq: 1.0,
            kick_period: 1.0, // 2π/(ντ) = 2π, irrational
            wave_vector: 1.0,
            kick_depth: 1.0,
            hbar: 1.0,
        };
        match p.reduce() {
            Err(KhoError::NonResonant { .. }) => {}
            other => panic!("expected NonResonant, got {other:?}"),
        }
    }

    #[test]
    fn reduction_matches_formulas_for_random_traps() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let mass = rng.random_range(0.1..10.0);
            let trap_freq = rng.random_range(0.1..10.0);
            let wave_vector = rng.random_range(0.1..10.0);
            let kick_depth = rng.random_range(0.0..10.0);
            let hbar = rng.random_range(0.1..10.0);
            let q = rng.random_range(3..40u32);
            let p = PhysicalParams {
                mass,
                trap_freq,
                kick_period: 2.0 * PI / (trap_freq * q as f64),
                wave_vector,
                kick_depth,
                hbar,
            };
            let s = p.reduce().unwrap();
            assert_eq!(s.q(), q);
            assert_relative_eq!(
                s.kick_strength(),
                kick_depth * wave_vector * wave_vector / (mass * trap_freq),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                s.eta(),
                wave_vector * (hbar / (2.0 * mass * trap_freq)).sqrt(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn rescaling_mass_and_depth_leaves_k_invariant() {
        let base = PhysicalParams {
            mass: 1.7,
            trap_freq: 2.3,
            kick_period: 2.0 * PI / (2.3 * 6.0),
            wave_vector: 0.9,
            kick_depth: 1.1,
            hbar: 1.0,
        };
        let s0 = base.reduce().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c: f64 = rng.random_range(0.01..100.0);
            let scaled = PhysicalParams {
                mass: c * base.mass,
                kick_depth: c * base.kick_depth,
                ..base
            };
            let s = scaled.reduce().unwrap();
            assert_relative_eq!(s.kick_strength(), s0.kick_strength(), max_relative = 1e-12);
            assert_relative_eq!(s.eta(), s0.eta() / c.sqrt(), max_relative = 1e-12);
        }
    }
}
