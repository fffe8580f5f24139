//! Quasienergy spectra and their evolution along the Lamb-Dicke parameter.
//!
//! Quasienergies follow the convention Û|ε⟩ = e^{+iφ}|ε⟩ with φ ∈ (−π, π].
//! A sweep over an η grid keeps, per grid point, only the eigenstates whose
//! overlap with a reference initial state exceeds a threshold; bands are then
//! tracked through maximal eigenvector overlap between neighbouring grid
//! points (phases collide at crossings, eigenvectors do not), and avoided
//! crossings are located as local minima of the circular phase gap between
//! band pairs, refined by golden-section re-diagonalization in η.

use std::f64::consts::PI;

use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{KhoError, Result};
use crate::fock::{floquet_operator, FloquetOperator, FockBasis};
use crate::husimi::{classify, husimi_grid, HusimiGridSpec, StateClass};
use crate::linalg;
use crate::params::SystemParams;
use crate::propagate::{InitialState, StateVector};

/// Residual and eigenvalue-modulus bound treated as an error when breached.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Circular phase distance below which levels count as one degenerate band.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Minimum eigenvector overlap for a band continuation.
pub const CONTINUATION_OVERLAP: f64 = 0.5;
/// Eigenphase drift below which the spectrum counts as saturated in N.
pub const SATURATION_TOL: f64 = 1e-6;

/// Map a phase to (−π, π].
pub fn wrap_phase(p: f64) -> f64 {
    let mut r = (p + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        r = PI;
    }
    r
}

/// Distance on the quasienergy circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Midpoint of the shorter arc between two phases.
pub fn circular_midpoint(a: f64, b: f64) -> f64 {
    wrap_phase(a + 0.5 * wrap_phase(b - a))
}

/// Complete eigensystem of one Floquet operator, sorted by phase.
#[derive(Debug, Clone)]
pub struct QuasienergySpectrum {
    basis: FockBasis,
    phases: Vec<f64>,
    /// Column j is the eigenvector of `phases[j]`.
    eigenvectors: Array2<C64>,
    residuals: Vec<f64>,
}

impl QuasienergySpectrum {
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn eigenvector(&self, j: usize) -> ArrayView1<'_, C64> {
        self.eigenvectors.column(j)
    }

    /// |⟨ε_j|ψ⟩|² for every eigenstate.
    pub fn overlaps(&self, state: &StateVector) -> Result<Vec<f64>> {
        if state.basis() != self.basis {
            return Err(KhoError::DimensionMismatch {
                left: state.basis().size(),
                right: self.basis.size(),
            });
        }
        let projections = linalg::adjoint(&self.eigenvectors).dot(state.amplitudes());
        Ok(projections.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Max orthonormality violation of the eigenbasis.
    pub fn orthonormality_defect(&self) -> f64 {
        linalg::orthonormality_defect(&self.eigenvectors)
    }
}

/// Diagonalize a Floquet operator; numeric failures carry (K, q, η, N).
pub fn diagonalize(u: &FloquetOperator) -> Result<QuasienergySpectrum> {
    let p = u.params();
    let context = format!(
        "diagonalize(K={}, q={}, eta={}, N={})",
        p.kick_strength(),
        p.q(),
        p.eta(),
        u.basis().size()
    );
    diagonalize_matrix(u.matrix(), &context)
}

/// Diagonalize a raw unitary matrix under the same contract; residual or
/// modulus breaches are errors, not warnings.
pub fn diagonalize_matrix(matrix: &Array2<C64>, context: &str) -> Result<QuasienergySpectrum> {
    let eig = linalg::diagonalize_unitary(matrix).map_err(|e| match e {
        KhoError::Numeric { message, .. } => KhoError::numeric(context, message),
        other => other,
    })?;
    let n = eig.values.len();
    for (j, &r) in eig.residuals.iter().enumerate() {
        if r > RESIDUAL_TOL {
            return Err(KhoError::numeric(
                context,
                format!("eigenpair {j} residual {r:.3e} exceeds {RESIDUAL_TOL:.1e}"),
            ));
        }
    }
    for (j, &lambda) in eig.values.iter().enumerate() {
        let dev = (lambda.norm() - 1.0).abs();
        if dev > RESIDUAL_TOL {
            return Err(KhoError::numeric(
                context,
                format!("eigenvalue {j} modulus deviates from 1 by {dev:.3e}"),
            ));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let phases_raw: Vec<f64> = eig.values.iter().map(|z| wrap_phase(z.arg())).collect();
    order.sort_by(|&a, &b| phases_raw[a].total_cmp(&phases_raw[b]));

    let phases: Vec<f64> = order.iter().map(|&j| phases_raw[j]).collect();
    let residuals: Vec<f64> = order.iter().map(|&j| eig.residuals[j]).collect();
    let mut eigenvectors = Array2::<C64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&eig.vectors.column(src));
    }
    let basis = FockBasis::new(n)?;
    Ok(QuasienergySpectrum {
        basis,
        phases,
        eigenvectors,
        residuals,
    })
}

/// One surviving level of an overlap filter.
#[derive(Debug, Clone)]
pub struct FilteredLevel {
    pub phase: f64,
    /// |⟨ε|ψ₀⟩|².
    pub overlap: f64,
    pub vector: Array1<C64>,
}

/// Keep eigenstates with |⟨ε_j|ψ₀⟩|² ≥ threshold, sorted by phase.
pub fn overlap_filter(
    spectrum: &QuasienergySpectrum,
    psi0: &StateVector,
    threshold: f64,
) -> Result<Vec<FilteredLevel>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(KhoError::domain(format!(
            "overlap threshold must be in (0, 1), got {threshold}"
        )));
    }
    let overlaps = spectrum.overlaps(psi0)?;
    Ok(overlaps
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= threshold)
        .map(|(j, &w)| FilteredLevel {
            phase: spectrum.phases[j],
            overlap: w,
            vector: spectrum.eigenvector(j).to_owned(),
        })
        .collect())
}

/// Filtered spectrum at one η.
#[derive(Debug, Clone)]
pub struct LevelSlice {
    pub eta: f64,
    pub levels: Vec<FilteredLevel>,
    /// |1 − Σ_j |⟨ε_j|ψ₀⟩|²| over the full, unfiltered spectrum.
    pub completeness_defect: f64,
}

/// Overlap-filtered level dynamics along an η grid.
#[derive(Debug, Clone)]
pub struct LevelDynamics {
    pub threshold: f64,
    pub psi0: String,
    pub slices: Vec<LevelSlice>,
    /// η values whose diagonalization failed, with the error text.
    pub failures: Vec<(f64, String)>,
}

/// Diagonalize and filter at every η of a sorted grid. Grid points are
/// independent and run in parallel; results are collected in grid order, so
/// serial and parallel execution produce identical output.
pub fn eta_sweep(
    kick_strength: f64,
    q: u32,
    basis: FockBasis,
    eta_grid: &[f64],
    initial: &InitialState,
    threshold: f64,
) -> Result<LevelDynamics> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(KhoError::domain(format!(
            "overlap threshold must be in (0, 1), got {threshold}"
        )));
    }
    if eta_grid.is_empty() {
        return Err(KhoError::domain("eta grid must be non-empty".to_string()));
    }
    if eta_grid.windows(2).any(|w| w[0] >= w[1]) || eta_grid[0] <= 0.0 {
        return Err(KhoError::domain(
            "eta grid must be positive and strictly increasing".to_string(),
        ));
    }

    let outcomes: Vec<std::result::Result<LevelSlice, (f64, String)>> = eta_grid
        .par_iter()
        .map(|&eta| {
            let slice = (|| -> Result<LevelSlice> {
                let params = SystemParams::new(kick_strength, q, eta)?;
                let u = floquet_operator(&params, basis)?;
                let spectrum = diagonalize(&u)?;
                let psi0 = initial.build(basis, eta)?;
                let overlaps = spectrum.overlaps(&psi0)?;
                let total: f64 = overlaps.iter().sum();
                let levels = overlaps
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w >= threshold)
                    .map(|(j, &w)| FilteredLevel {
                        phase: spectrum.phases[j],
                        overlap: w,
                        vector: spectrum.eigenvector(j).to_owned(),
                    })
                    .collect();
                Ok(LevelSlice {
                    eta,
                    levels,
                    completeness_defect: (1.0 - total).abs(),
                })
            })();
            slice.map_err(|e| (eta, e.to_string()))
        })
        .collect();

    let mut slices = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(s) => slices.push(s),
            Err(f) => failures.push(f),
        }
    }
    Ok(LevelDynamics {
        threshold,
        psi0: initial.describe(),
        slices,
        failures,
    })
}

/// A node of the tracking graph: one level, or one merged multiplet of
/// levels closer than [`DEGENERACY_TOL`].
#[derive(Debug, Clone)]
struct Node {
    phase: f64,
    overlap: f64,
    /// Representative level (largest overlap of the multiplet).
    rep: usize,
    members: usize,
}

fn merge_degenerate(levels: &[FilteredLevel]) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut i = 0;
    while i < levels.len() {
        let mut j = i + 1;
        while j < levels.len()
            && circular_distance(levels[j].phase, levels[j - 1].phase) < DEGENERACY_TOL
        {
            j += 1;
        }
        let rep = (i..j)
            .max_by(|&a, &b| levels[a].overlap.total_cmp(&levels[b].overlap))
            .unwrap();
        nodes.push(Node {
            phase: levels[rep].phase,
            overlap: levels[i..j].iter().map(|l| l.overlap).sum(),
            rep,
            members: j - i,
        });
        i = j;
    }
    // the (−π, π] seam can hide one more degenerate pair
    if nodes.len() > 1 {
        let first = nodes.first().unwrap();
        let last = nodes.last().unwrap();
        if circular_distance(first.phase, last.phase) < DEGENERACY_TOL {
            let last = nodes.pop().unwrap();
            let first = &mut nodes[0];
            if last.overlap > first.overlap {
                first.phase = last.phase;
                first.rep = last.rep;
            }
            first.overlap += last.overlap;
            first.members += last.members;
        }
    }
    nodes
}

/// One tracked level along the sweep.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    /// Index into `LevelDynamics::slices`.
    pub slice: usize,
    /// Representative level index within that slice.
    pub level: usize,
    pub eta: f64,
    pub phase: f64,
    pub overlap: f64,
    /// Number of degenerate levels merged into this point.
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
    /// True when the branch ended because no continuation reached the
    /// overlap bar, rather than by leaving the filter.
    pub ambiguous_end: bool,
}

impl Branch {
    pub fn point_at_slice(&self, slice: usize) -> Option<&BranchPoint> {
        self.points.iter().find(|p| p.slice == slice)
    }
}

/// Connect filtered levels across neighbouring η points into branches by
/// greedy maximal eigenvector overlap.
pub fn track_bands(ld: &LevelDynamics) -> Vec<Branch> {
    let mut branches: Vec<Branch> = Vec::new();
    // open[k] = (branch index, node rep level in previous slice)
    let mut open: Vec<(usize, usize)> = Vec::new();

    for (slice_idx, slice) in ld.slices.iter().enumerate() {
        let nodes = merge_degenerate(&slice.levels);
        let mut assigned_prev = vec![false; open.len()];
        let mut assigned_next = vec![false; nodes.len()];
        let mut next_open: Vec<(usize, usize)> = Vec::new();

        if !open.is_empty() && !nodes.is_empty() {
            let prev_slice = &ld.slices[slice_idx - 1];
            let mut scored: Vec<(f64, usize, usize)> = Vec::new();
            for (pi, &(_, prev_rep)) in open.iter().enumerate() {
                let pv = &prev_slice.levels[prev_rep].vector;
                for (ni, node) in nodes.iter().enumerate() {
                    let nv = &slice.levels[node.rep].vector;
                    let ov: C64 = pv.iter().zip(nv.iter()).map(|(&a, &b)| a.conj() * b).sum();
                    scored.push((ov.norm(), pi, ni));
                }
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            for (value, pi, ni) in scored {
                if value < CONTINUATION_OVERLAP {
                    break;
                }
                if assigned_prev[pi] || assigned_next[ni] {
                    continue;
                }
                assigned_prev[pi] = true;
                assigned_next[ni] = true;
                let branch_idx = open[pi].0;
                let node = &nodes[ni];
                branches[branch_idx].points.push(BranchPoint {
                    slice: slice_idx,
                    level: node.rep,
                    eta: slice.eta,
                    phase: node.phase,
                    overlap: node.overlap,
                    multiplicity: node.members,
                });
                next_open.push((branch_idx, node.rep));
            }
        }

        // unmatched previous branches end; flag those that had candidates
        // but none above the bar
        for (pi, &(branch_idx, _)) in open.iter().enumerate() {
            if !assigned_prev[pi] && !nodes.is_empty() {
                branches[branch_idx].ambiguous_end = true;
            }
        }
        // unmatched nodes start new branches
        for (ni, node) in nodes.iter().enumerate() {
            if assigned_next[ni] {
                continue;
            }
            let id = branches.len();
            branches.push(Branch {
                id,
                points: vec![BranchPoint {
                    slice: slice_idx,
                    level: node.rep,
                    eta: slice.eta,
                    phase: node.phase,
                    overlap: node.overlap,
                    multiplicity: node.members,
                }],
                ambiguous_end: false,
            });
            next_open.push((id, node.rep));
        }
        open = next_open;
    }
    branches
}

/// A located avoided crossing between two tracked branches.
#[derive(Debug, Clone)]
pub struct AvoidedCrossing {
    pub eta_center: f64,
    /// Circular midpoint of the two phases at closest approach.
    pub phase_center: f64,
    pub min_gap: f64,
    pub branches: (usize, usize),
    /// Largest ψ₀ overlap either branch reaches on the bracketing window;
    /// lets callers apply a relevance marker such as 10⁻².
    pub max_overlap: f64,
    /// False when golden-section refinement failed and grid values are
    /// reported instead.
    pub refined: bool,
    /// Gap below [`DEGENERACY_TOL`]: an exact degeneracy, not an avoided
    /// crossing.
    pub degenerate: bool,
}

/// Gap between the two levels continuing `ref_a`, `ref_b` at a probe η.
fn gap_at(
    spectrum: &QuasienergySpectrum,
    ref_a: &Array1<C64>,
    ref_b: &Array1<C64>,
) -> (f64, f64, f64) {
    let n = spectrum.len();
    let score = |reference: &Array1<C64>, j: usize| -> f64 {
        let col = spectrum.eigenvector(j);
        let ov: C64 = reference
            .iter()
            .zip(col.iter())
            .map(|(&a, &b)| a.conj() * b)
            .sum();
        ov.norm()
    };
    let ja = (0..n)
        .max_by(|&x, &y| score(ref_a, x).total_cmp(&score(ref_a, y)))
        .expect("non-empty spectrum");
    let jb = (0..n)
        .filter(|&j| j != ja)
        .max_by(|&x, &y| score(ref_b, x).total_cmp(&score(ref_b, y)))
        .expect("spectrum with at least two levels");
    let pa = spectrum.phases()[ja];
    let pb = spectrum.phases()[jb];
    (circular_distance(pa, pb), pa, pb)
}

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_8;

/// Candidate pruning and refinement controls for the crossing search.
#[derive(Debug, Clone, Copy)]
pub struct CrossingSearch {
    /// Bracket width in η below which refinement stops.
    pub refine_tol: f64,
    /// Grid-level gap above which a local minimum is not treated as an
    /// avoided crossing (far-apart band pairs produce shallow minima too).
    pub max_grid_gap: f64,
    /// Candidates where neither branch ever reaches this ψ₀ overlap on the
    /// bracket are skipped.
    pub min_overlap: f64,
}

impl Default for CrossingSearch {
    fn default() -> Self {
        CrossingSearch {
            refine_tol: 1e-4,
            max_grid_gap: 0.3,
            min_overlap: 0.0,
        }
    }
}

impl CrossingSearch {
    pub fn with_refine_tol(refine_tol: f64) -> Self {
        CrossingSearch {
            refine_tol,
            ..Default::default()
        }
    }
}

/// Find local minima of the circular phase gap between every pair of tracked
/// branches and refine each by golden-section search in η, re-diagonalizing
/// through `probe` at every probe point. Candidates run in parallel.
pub fn find_avoided_crossings<F>(
    ld: &LevelDynamics,
    branches: &[Branch],
    search: CrossingSearch,
    probe: F,
) -> Result<Vec<AvoidedCrossing>>
where
    F: Fn(f64) -> Result<QuasienergySpectrum> + Sync,
{
    if !(search.refine_tol > 0.0) {
        return Err(KhoError::domain("refine_tol must be > 0".to_string()));
    }
    // (a, b, index into common support, mid slice, phase at minimum, overlap)
    struct Candidate {
        ia: usize,
        ib: usize,
        t: usize,
        s_mid: usize,
        phase: f64,
        overlap: f64,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    for (ia, ba) in branches.iter().enumerate() {
        for (ib, bb) in branches.iter().enumerate().skip(ia + 1) {
            // slices where both branches exist
            let common: Vec<usize> = ba
                .points
                .iter()
                .filter_map(|p| bb.point_at_slice(p.slice).map(|_| p.slice))
                .collect();
            if common.len() < 3 {
                continue;
            }
            let points: Vec<(&BranchPoint, &BranchPoint)> = common
                .iter()
                .map(|&s| (ba.point_at_slice(s).unwrap(), bb.point_at_slice(s).unwrap()))
                .collect();
            let gaps: Vec<f64> = points
                .iter()
                .map(|(pa, pb)| circular_distance(pa.phase, pb.phase))
                .collect();
            for t in 1..gaps.len() - 1 {
                if gaps[t] < gaps[t - 1] && gaps[t] <= gaps[t + 1] && gaps[t] <= search.max_grid_gap
                {
                    let (pa, pb) = &points[t];
                    candidates.push(Candidate {
                        ia,
                        ib,
                        t,
                        s_mid: common[t],
                        phase: circular_midpoint(pa.phase, pb.phase),
                        overlap: pa.overlap.max(pb.overlap),
                    });
                }
            }
        }
    }

    // A multi-level complex (band multiplets crossing band multiplets)
    // produces one candidate per branch pair; keep a single representative
    // per phase-space location, preferring the strongest ψ₀ overlap.
    candidates.sort_by(|a, b| b.overlap.total_cmp(&a.overlap));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        let duplicate = kept.iter().any(|k| {
            k.s_mid.abs_diff(c.s_mid) <= 2 && circular_distance(k.phase, c.phase) <= 0.05
        });
        if !duplicate {
            kept.push(c);
        }
    }

    let crossings_nested: Vec<Option<AvoidedCrossing>> = kept
        .par_iter()
        .map(|c| refine_candidate(ld, branches, c.ia, c.ib, c.t, &search, &probe))
        .collect();
    let mut crossings: Vec<AvoidedCrossing> = crossings_nested.into_iter().flatten().collect();
    crossings.sort_by(|a, b| a.eta_center.total_cmp(&b.eta_center));
    Ok(crossings)
}

fn refine_candidate<F>(
    ld: &LevelDynamics,
    branches: &[Branch],
    ia: usize,
    ib: usize,
    t: usize,
    search: &CrossingSearch,
    probe: &F,
) -> Option<AvoidedCrossing>
where
    F: Fn(f64) -> Result<QuasienergySpectrum> + Sync,
{
    {
        let ba = &branches[ia];
        let bb = &branches[ib];
        let common: Vec<usize> = ba
            .points
            .iter()
            .filter_map(|p| bb.point_at_slice(p.slice).map(|_| p.slice))
            .collect();
        let (s_lo, s_mid, s_hi) = (common[t - 1], common[t], common[t + 1]);
        let eta_lo = ld.slices[s_lo].eta;
        let eta_hi = ld.slices[s_hi].eta;
        let max_overlap = [s_lo, s_mid, s_hi]
            .iter()
            .flat_map(|&s| {
                [
                    ba.point_at_slice(s).unwrap().overlap,
                    bb.point_at_slice(s).unwrap().overlap,
                ]
            })
            .fold(0.0f64, f64::max);
        if max_overlap < search.min_overlap {
            return None;
        }

        // reference vectors from the left bracket edge track the pair
        // through the hybridization region
        let pa = ba.point_at_slice(s_lo).unwrap();
        let pb = bb.point_at_slice(s_lo).unwrap();
        let ref_a = ld.slices[s_lo].levels[pa.level].vector.clone();
        let ref_b = ld.slices[s_lo].levels[pb.level].vector.clone();

        let eval = |eta: f64| -> Result<(f64, f64, f64)> {
            let spectrum = probe(eta)?;
            Ok(gap_at(&spectrum, &ref_a, &ref_b))
        };

        let refined = golden_section(eta_lo, eta_hi, search.refine_tol, &eval);
        let (eta_center, (min_gap, phase_a, phase_b), refined_ok) = match refined {
            Ok((eta, val)) => (eta, val, true),
            Err(_) => {
                let pm_a = ba.point_at_slice(s_mid).unwrap();
                let pm_b = bb.point_at_slice(s_mid).unwrap();
                (
                    ld.slices[s_mid].eta,
                    (
                        circular_distance(pm_a.phase, pm_b.phase),
                        pm_a.phase,
                        pm_b.phase,
                    ),
                    false,
                )
            }
        };
        Some(AvoidedCrossing {
            eta_center,
            phase_center: circular_midpoint(phase_a, phase_b),
            min_gap,
            branches: (ba.id, bb.id),
            max_overlap,
            refined: refined_ok,
            degenerate: min_gap < DEGENERACY_TOL,
        })
    }
}

/// Golden-section minimization of the gap over [lo, hi] down to width `tol`;
/// returns the minimizer and its full evaluation.
fn golden_section<E>(
    lo: f64,
    hi: f64,
    tol: f64,
    eval: &E,
) -> Result<(f64, (f64, f64, f64))>
where
    E: Fn(f64) -> Result<(f64, f64, f64)>,
{
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - GOLDEN_RATIO * (b - a);
    let mut x2 = a + GOLDEN_RATIO * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > tol {
        if f1.0 <= f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN_RATIO * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN_RATIO * (b - a);
            f2 = eval(x2)?;
        }
    }
    Ok(if f1.0 <= f2.0 { (x1, f1) } else { (x2, f2) })
}

/// Husimi classification of the two partners of a crossing, evaluated at the
/// asymptotic ends of the branches' common support.
#[derive(Debug, Clone)]
pub struct CrossingClassification {
    pub eta_left: f64,
    pub eta_right: f64,
    /// (branch a, branch b) classes at `eta_left`.
    pub left: (StateClass, StateClass),
    /// (branch a, branch b) classes at `eta_right`.
    pub right: (StateClass, StateClass),
}

/// Classify the crossing partners at the outermost η where both exist.
pub fn classify_crossing(
    ld: &LevelDynamics,
    branches: &[Branch],
    crossing: &AvoidedCrossing,
    grid: &HusimiGridSpec,
) -> Result<CrossingClassification> {
    let ba = branches
        .iter()
        .find(|b| b.id == crossing.branches.0)
        .ok_or_else(|| KhoError::domain("unknown branch id".to_string()))?;
    let bb = branches
        .iter()
        .find(|b| b.id == crossing.branches.1)
        .ok_or_else(|| KhoError::domain("unknown branch id".to_string()))?;
    let common: Vec<usize> = ba
        .points
        .iter()
        .filter_map(|p| bb.point_at_slice(p.slice).map(|_| p.slice))
        .collect();
    if common.is_empty() {
        return Err(KhoError::domain(
            "branches share no grid support".to_string(),
        ));
    }
    let class_of = |slice: usize, branch: &Branch| -> Result<StateClass> {
        let point = branch.point_at_slice(slice).unwrap();
        let vector = ld.slices[slice].levels[point.level].vector.clone();
        let basis = FockBasis::new(vector.len())?;
        let state = StateVector::new(basis, vector)?;
        let field = husimi_grid(&state, grid)?;
        classify(&field)
    };
    let (s_left, s_right) = (*common.first().unwrap(), *common.last().unwrap());
    Ok(CrossingClassification {
        eta_left: ld.slices[s_left].eta,
        eta_right: ld.slices[s_right].eta,
        left: (class_of(s_left, ba)?, class_of(s_left, bb)?),
        right: (class_of(s_right, ba)?, class_of(s_right, bb)?),
    })
}

/// Phase drift between two consecutive basis sizes.
#[derive(Debug, Clone)]
pub struct ConvergencePair {
    pub n_from: usize,
    pub n_to: usize,
    /// Max circular phase drift over matched filtered levels.
    pub max_drift: f64,
    pub matched: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub pairs: Vec<ConvergencePair>,
    /// First basis size at which the drift fell below [`SATURATION_TOL`].
    pub saturated_at: Option<usize>,
}

/// Track how the filtered eigenphases move as the basis grows. Levels are
/// matched across sizes by eigenvector overlap on the common subspace.
pub fn convergence_report(
    kick_strength: f64,
    q: u32,
    eta: f64,
    basis_sizes: &[usize],
    initial: &InitialState,
    threshold: f64,
) -> Result<ConvergenceReport> {
    if basis_sizes.len() < 2 {
        return Err(KhoError::domain(
            "need at least two basis sizes".to_string(),
        ));
    }
    if basis_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(KhoError::domain(
            "basis sizes must be strictly increasing".to_string(),
        ));
    }
    let spectra: Vec<(usize, QuasienergySpectrum, Vec<FilteredLevel>)> = basis_sizes
        .iter()
        .map(|&n| -> Result<_> {
            let params = SystemParams::new(kick_strength, q, eta)?;
            let basis = FockBasis::new(n)?;
            let u = floquet_operator(&params, basis)?;
            let spectrum = diagonalize(&u)?;
            let psi0 = initial.build(basis, eta)?;
            let filtered = overlap_filter(&spectrum, &psi0, threshold)?;
            Ok((n, spectrum, filtered))
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut saturated_at = None;
    for w in spectra.windows(2) {
        let (n1, _, ref filtered) = w[0];
        let (n2, ref spec2, _) = w[1];
        let mut max_drift = 0.0f64;
        let mut matched = 0;
        let mut taken = vec![false; spec2.len()];
        for level in filtered {
            // best continuation in the larger basis, on the common subspace
            let mut best = (0.0f64, usize::MAX);
            for j in 0..spec2.len() {
                if taken[j] {
                    continue;
                }
                let col = spec2.eigenvector(j);
                let ov: C64 = level
                    .vector
                    .iter()
                    .zip(col.iter().take(n1))
                    .map(|(&a, &b)| a.conj() * b)
                    .sum();
                let score = ov.norm();
                if score > best.0 {
                    best = (score, j);
                }
            }
            if best.1 != usize::MAX && best.0 >= CONTINUATION_OVERLAP {
                taken[best.1] = true;
                matched += 1;
                max_drift = max_drift.max(circular_distance(level.phase, spec2.phases()[best.1]));
            }
        }
        if matched > 0 && max_drift < SATURATION_TOL && saturated_at.is_none() {
            saturated_at = Some(n2);
        }
        pairs.push(ConvergencePair {
            n_from: n1,
            n_to: n2,
            max_drift,
            matched,
        });
    }
    Ok(ConvergenceReport { pairs, saturated_at })
}
