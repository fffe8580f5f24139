//! Classical stochastic-web map in scaled coordinates (v, u) = (kx, kp/(mν)).
//!
//! One kick period consists of a momentum kick u → u + K sin v followed by a
//! harmonic rotation of (v, u) by α = 2π/q. For integer q the map generates a
//! stochastic web along which trajectories diffuse to arbitrarily large
//! radius; the modules here provide the map itself, Monte Carlo heating
//! curves against a vacuum-matched Gaussian ensemble, and phase-space
//! occupancy histograms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{KhoError, Result};
use crate::params::SystemParams;

/// Fixed chunk size for ensemble reductions. Partial sums are computed per
/// chunk and merged in chunk order, so results are identical for any worker
/// count.
const REDUCTION_CHUNK: usize = 512;

/// A point of the scaled classical phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub v: f64,
    pub u: f64,
}

impl PhasePoint {
    /// Rejects NaN and infinite coordinates.
    pub fn new(v: f64, u: f64) -> Result<Self> {
        if !v.is_finite() || !u.is_finite() {
            return Err(KhoError::domain(format!(
                "phase point coordinates must be finite, got ({v}, {u})"
            )));
        }
        Ok(PhasePoint { v, u })
    }

    pub fn radius_sq(&self) -> f64 {
        self.v * self.v + self.u * self.u
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.u.is_finite()
    }
}

/// One period of the web map: kick u by K sin v, then rotate by α.
pub fn web_map_step(pt: PhasePoint, params: &SystemParams) -> PhasePoint {
    let u1 = pt.u + params.kick_strength() * pt.v.sin();
    let (sin_a, cos_a) = params.alpha().sin_cos();
    PhasePoint {
        v: pt.v * cos_a + u1 * sin_a,
        u: -pt.v * sin_a + u1 * cos_a,
    }
}

/// A stroboscopic trajectory. `points[0]` is the initial condition; if the
/// orbit overflowed to non-finite values, `escaped_at` holds the index of the
/// last finite point and the sequence stops there.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<PhasePoint>,
    pub escaped_at: Option<usize>,
}

/// Iterate the web map `n_kicks` times from `pt`.
pub fn iterate_trajectory(pt: PhasePoint, params: &SystemParams, n_kicks: usize) -> Trajectory {
    let mut points = Vec::with_capacity(n_kicks + 1);
    points.push(pt);
    let mut current = pt;
    for i in 0..n_kicks {
        current = web_map_step(current, params);
        if !current.is_finite() {
            return Trajectory {
                points,
                escaped_at: Some(i),
            };
        }
        points.push(current);
    }
    Trajectory {
        points,
        escaped_at: None,
    }
}

/// A Monte Carlo cloud of phase points, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub points: Vec<PhasePoint>,
    pub seed: u64,
}

/// Gaussian cloud matching the vacuum state's second moments,
/// ⟨v²⟩ = ⟨u²⟩ = η². Deterministic for a fixed seed.
pub fn sample_vacuum_ensemble(eta: f64, size: usize, seed: u64) -> Result<Ensemble> {
    if size == 0 {
        return Err(KhoError::domain("ensemble size must be >= 1".to_string()));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(KhoError::domain(format!(
            "eta must be finite and > 0, got {eta}"
        )));
    }
    let normal = Normal::new(0.0, eta).expect("std validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..size)
        .map(|_| {
            let v = normal.sample(&mut rng);
            let u = normal.sample(&mut rng);
            PhasePoint { v, u }
        })
        .collect();
    Ok(Ensemble { points, seed })
}

/// Energy in units of ℏν: E = (v² + u²)/(4η²). With this normalization the
/// classical curves share an axis with the quantum ⟨n̂⟩ + 1/2.
pub fn scaled_energy(pt: PhasePoint, eta: f64) -> f64 {
    assert!(eta > 0.0, "eta must be > 0");
    pt.radius_sq() / (4.0 * eta * eta)
}

/// Ensemble-mean energy after each of `n_kicks` map steps.
#[derive(Debug, Clone)]
pub struct ClassicalHeatingCurve {
    pub energies: Vec<f64>,
    /// Points that overflowed to non-finite values during the run; they are
    /// excluded from every mean from the step they escape onwards.
    pub escaped: usize,
    pub ensemble_size: usize,
}

/// Evolve every ensemble member and record the mean scaled energy after each
/// kick. Reduction order is fixed, so the result does not depend on the
/// worker count.
pub fn ensemble_heating_curve(
    ensemble: &Ensemble,
    params: &SystemParams,
    n_kicks: usize,
) -> ClassicalHeatingCurve {
    let eta = params.eta();
    let partials: Vec<(Vec<f64>, Vec<usize>)> = ensemble
        .points
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut sums = vec![0.0; n_kicks + 1];
            let mut counts = vec![0usize; n_kicks + 1];
            for &p0 in chunk {
                let mut p = p0;
                for (step, (sum, count)) in sums.iter_mut().zip(counts.iter_mut()).enumerate() {
                    if !p.is_finite() {
                        break;
                    }
                    *sum += scaled_energy(p, eta);
                    *count += 1;
                    if step < n_kicks {
                        p = web_map_step(p, params);
                    }
                }
            }
            (sums, counts)
        })
        .collect();

    let mut sums = vec![0.0; n_kicks + 1];
    let mut counts = vec![0usize; n_kicks + 1];
    for (s, c) in &partials {
        for i in 0..=n_kicks {
            sums[i] += s[i];
            counts[i] += c[i];
        }
    }
    let energies = sums
        .iter()
        .zip(counts.iter())
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    ClassicalHeatingCurve {
        energies,
        escaped: ensemble.points.len() - counts[n_kicks],
        ensemble_size: ensemble.points.len(),
    }
}

/// Rectangular binning grid for phase-space occupancy.
#[derive(Debug, Clone, Copy)]
pub struct HistogramSpec {
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub nv: usize,
    pub nu: usize,
}

impl HistogramSpec {
    /// Square grid centered on the origin.
    pub fn centered(half_width: f64, bins: usize) -> Result<Self> {
        let spec = HistogramSpec {
            v_min: -half_width,
            v_max: half_width,
            u_min: -half_width,
            u_max: half_width,
            nv: bins,
            nu: bins,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_min, self.v_max, self.u_min, self.u_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.v_min >= self.v_max || self.u_min >= self.u_max {
            return Err(KhoError::domain(
                "histogram bounds must be finite with min < max".to_string(),
            ));
        }
        if self.nv == 0 || self.nu == 0 {
            return Err(KhoError::domain(
                "histogram bin counts must be >= 1".to_string(),
            ));
        }
        Ok(())
    }

    fn bin(&self, pt: &PhasePoint) -> Option<(usize, usize)> {
        if pt.v < self.v_min || pt.v > self.v_max || pt.u < self.u_min || pt.u > self.u_max {
            return None;
        }
        let iv = (((pt.v - self.v_min) / (self.v_max - self.v_min)) * self.nv as f64) as usize;
        let iu = (((pt.u - self.u_min) / (self.u_max - self.u_min)) * self.nu as f64) as usize;
        Some((iv.min(self.nv - 1), iu.min(self.nu - 1)))
    }
}

/// Per-bin visit counts of a trajectory; points outside the grid are tallied
/// in `overflow`, so `counts.sum() + overflow` equals the number of points.
#[derive(Debug, Clone)]
pub struct OccupancyHistogram {
    pub spec: HistogramSpec,
    /// counts[iv][iu], row index along v.
    pub counts: Vec<Vec<u32>>,
    pub overflow: usize,
}

impl OccupancyHistogram {
    pub fn total_in_range(&self) -> u64 {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as u64).sum::<u64>())
            .sum()
    }

    /// Bin indices with at least one visit.
    pub fn occupied_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for (iv, row) in self.counts.iter().enumerate() {
            for (iu, &c) in row.iter().enumerate() {
                if c > 0 {
                    cells.push((iv, iu));
                }
            }
        }
        cells
    }
}

/// Bin a trajectory onto the grid.
pub fn occupancy_histogram(points: &[PhasePoint], spec: &HistogramSpec) -> Result<OccupancyHistogram> {
    spec.validate()?;
    let mut counts = vec![vec![0u32; spec.nu]; spec.nv];
    let mut overflow = 0usize;
    for pt in points {
        match spec.bin(pt) {
            Some((iv, iu)) => counts[iv][iu] += 1,
            None => overflow += 1,
        }
    }
    Ok(OccupancyHistogram {
        spec: *spec,
        counts,
        overflow,
    })
}
