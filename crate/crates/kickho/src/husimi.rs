//! Husimi Q distributions on the phase-space axes (x1, x2) = (v/2η, u/2η).
//!
//! Q(β) = |⟨β|ψ⟩|²/π with β = x1 + i·x2, normalized so that ∫ Q d²β = 1.
//! A localization fraction — the share of Q mass inside a disc around the
//! origin — classifies Floquet eigenstates into island-localized and
//! web-extended ones.

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{KhoError, Result};
use crate::propagate::StateVector;

/// Default disc radius for the localized/extended split.
pub const LOCALIZATION_RADIUS: f64 = 1.5;
/// A state with more than this fraction of its mass inside the disc counts
/// as localized.
pub const LOCALIZATION_THRESHOLD: f64 = 0.5;

/// Rectangular evaluation grid in (x1, x2); nodes include both endpoints.
#[derive(Debug, Clone, Copy)]
pub struct HusimiGridSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl HusimiGridSpec {
    /// Square grid centered on the origin.
    pub fn centered(half_width: f64, nodes: usize) -> Result<Self> {
        let spec = HusimiGridSpec {
            x1_min: -half_width,
            x1_max: half_width,
            x2_min: -half_width,
            x2_max: half_width,
            n1: nodes,
            n2: nodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1_min, self.x1_max, self.x2_min, self.x2_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.x1_min >= self.x1_max || self.x2_min >= self.x2_max {
            return Err(KhoError::domain(
                "grid bounds must be finite with min < max".to_string(),
            ));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(KhoError::domain("grid needs at least 2x2 nodes".to_string()));
        }
        Ok(())
    }

    pub fn x1_nodes(&self) -> Vec<f64> {
        linspace(self.x1_min, self.x1_max, self.n1)
    }

    pub fn x2_nodes(&self) -> Vec<f64> {
        linspace(self.x2_min, self.x2_max, self.n2)
    }

    /// Area element of one cell.
    pub fn cell_area(&self) -> f64 {
        let d1 = (self.x1_max - self.x1_min) / (self.n1 - 1) as f64;
        let d2 = (self.x2_max - self.x2_min) / (self.n2 - 1) as f64;
        d1 * d2
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Husimi values on a grid; `values[(i, j)]` belongs to (x1_nodes[i],
/// x2_nodes[j]).
#[derive(Debug, Clone)]
pub struct HusimiField {
    pub spec: HusimiGridSpec,
    pub values: Array2<f64>,
}

impl HusimiField {
    /// Riemann-sum mass over the whole grid; ≈ 1 for a grid covering the
    /// state's support.
    pub fn total_mass(&self) -> f64 {
        self.values.sum() * self.spec.cell_area()
    }

    /// Grid node closest to the maximum of Q.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (0, 0);
        let mut best_val = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
        (self.spec.x1_nodes()[best.0], self.spec.x2_nodes()[best.1])
    }
}

/// ⟨β|ψ⟩ = Σ_n e^{−|β|²/2} (β*)ⁿ/√(n!) · c_n, built up by a multiplicative
/// recurrence; every partial coefficient is bounded by 1, so no factorial or
/// power ever overflows. Accuracy degrades once |β|² approaches N/4.
pub fn coherent_overlap(state: &StateVector, beta: C64) -> C64 {
    let n = state.basis().size();
    if beta.norm_sqr() > n as f64 / 4.0 {
        log::warn!(
            "coherent_overlap: |beta|^2 = {:.2} beyond the accurate domain N/4 = {:.2}",
            beta.norm_sqr(),
            n as f64 / 4.0
        );
    }
    let mut coeff = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    let beta_conj = beta.conj();
    let mut acc = C64::new(0.0, 0.0);
    for (k, &c) in state.amplitudes().iter().enumerate() {
        acc += coeff * c;
        coeff = coeff * beta_conj / ((k + 1) as f64).sqrt();
    }
    acc
}

/// Evaluate Q over the grid; rows are independent and run in parallel.
pub fn husimi_grid(state: &StateVector, spec: &HusimiGridSpec) -> Result<HusimiField> {
    spec.validate()?;
    let x1 = spec.x1_nodes();
    let x2 = spec.x2_nodes();
    let rows: Vec<Vec<f64>> = x1
        .par_iter()
        .map(|&a| {
            x2.iter()
                .map(|&b| {
                    let q = coherent_overlap(state, C64::new(a, b));
                    q.norm_sqr() / std::f64::consts::PI
                })
                .collect()
        })
        .collect();
    let mut values = Array2::<f64>::zeros((spec.n1, spec.n2));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(HusimiField { spec: *spec, values })
}

/// Fraction of the grid's Q mass inside |β| ≤ radius. The grid must cover
/// the disc.
pub fn localization_fraction(field: &HusimiField, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(KhoError::domain("radius must be > 0".to_string()));
    }
    let s = &field.spec;
    if s.x1_min > -radius || s.x1_max < radius || s.x2_min > -radius || s.x2_max < radius {
        return Err(KhoError::GridCoverage(format!(
            "disc of radius {radius} exceeds grid [{}, {}]x[{}, {}]",
            s.x1_min, s.x1_max, s.x2_min, s.x2_max
        )));
    }
    let x1 = s.x1_nodes();
    let x2 = s.x2_nodes();
    let r_sq = radius * radius;
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, &a) in x1.iter().enumerate() {
        for (j, &b) in x2.iter().enumerate() {
            let v = field.values[(i, j)];
            total += v;
            if a * a + b * b <= r_sq {
                inside += v;
            }
        }
    }
    if total == 0.0 {
        return Err(KhoError::domain("field has zero total mass".to_string()));
    }
    Ok(inside / total)
}

/// Island-localized vs web-extended, per the localization fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    Localized,
    Extended,
}

impl std::fmt::Display for StateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateClass::Localized => write!(f, "localized"),
            StateClass::Extended => write!(f, "extended"),
        }
    }
}

/// Classify by the default radius/threshold.
pub fn classify(field: &HusimiField) -> Result<StateClass> {
    classify_with(field, LOCALIZATION_RADIUS, LOCALIZATION_THRESHOLD)
}

pub fn classify_with(field: &HusimiField, radius: f64, threshold: f64) -> Result<StateClass> {
    let fraction = localization_fraction(field, radius)?;
    Ok(if fraction > threshold {
        StateClass::Localized
    } else {
        StateClass::Extended
    })
}
