//! Cross-checks of the closed-form operator construction against an
//! independent matrix-exponential oracle, and of the quantum kick against
//! the classical map in the semiclassical regime.

mod common;

use common::{expm, ladder_sum, max_abs_diff};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;

use kickho::classical::{web_map_step, PhasePoint};
use kickho::fock::{
    cosine_operator, displacement_element, floquet_operator, free_phases, kick_operator, FockBasis,
};
use kickho::params::SystemParams;
use kickho::propagate::{apply_floquet, displaced_vacuum};

/// ⟨m|e^{iη(â+â†)}|n⟩ against exp of the truncated generator. The oracle is
/// built at N = 60 so its top-left 20×20 block is free of truncation error.
#[test]
fn displacement_elements_match_matrix_exponential() {
    let n_oracle = 60;
    for eta in [0.1, 0.3, 0.464, 0.5, 0.8] {
        let gen = ladder_sum(n_oracle).mapv(|z| z * C64::new(0.0, eta));
        let oracle = expm(&gen);
        for m in 0..20 {
            for n in 0..20 {
                let closed = displacement_element(m, n, eta);
                let diff = (closed - oracle[(m, n)]).norm();
                assert!(
                    diff < 1e-10,
                    "eta={eta} ({m},{n}): closed {closed} oracle {} diff {diff:.2e}",
                    oracle[(m, n)]
                );
            }
        }
    }
}

#[test]
fn cosine_matrix_matches_matrix_exponential() {
    let n_oracle = 60;
    let eta = 0.464;
    let gen = ladder_sum(n_oracle).mapv(|z| z * C64::new(0.0, eta));
    let plus = expm(&gen);
    let minus = expm(&gen.mapv(|z| -z));
    let c = cosine_operator(eta, FockBasis::new(20).unwrap());
    for m in 0..20 {
        for n in 0..20 {
            let oracle = 0.5 * (plus[(m, n)] + minus[(m, n)]);
            assert!(oracle.im.abs() < 1e-12);
            let diff = (c.matrix()[(m, n)] - oracle.re).abs();
            assert!(diff < 1e-10, "({m},{n}) diff {diff:.2e}");
        }
    }
}

/// Criterion: kick operator vs scaling-and-squaring at N = 16 within 1e-10.
#[test]
fn kick_operator_matches_matrix_exponential() {
    let basis = FockBasis::new(16).unwrap();
    let eta = 0.3;
    let ktilde = 1.0;
    let c = cosine_operator(eta, basis);
    let via_eigh = kick_operator(ktilde, &c).unwrap();
    let gen = c.matrix().mapv(|x| C64::new(0.0, -ktilde * x));
    let via_expm = expm(&gen);
    let diff = max_abs_diff(&via_eigh, &via_expm);
    assert!(diff < 1e-10, "max elementwise diff {diff:.2e}");
}

/// Full Floquet operator against (diagonal phases)·expm(−iK̃C) at N = 20.
#[test]
fn floquet_operator_matches_phased_exponential() {
    let params = SystemParams::new(2.0, 6, 0.464).unwrap();
    let basis = FockBasis::new(20).unwrap();
    let u = floquet_operator(&params, basis).unwrap();
    let c = cosine_operator(params.eta(), basis);
    let gen = c.matrix().mapv(|x| C64::new(0.0, -params.ktilde() * x));
    let mut oracle = expm(&gen);
    for (m, phase) in free_phases(params.alpha(), basis).into_iter().enumerate() {
        oracle.row_mut(m).mapv_inplace(|z| z * phase);
    }
    let diff = max_abs_diff(u.matrix(), &oracle);
    assert!(diff < 1e-9, "max elementwise diff {diff:.2e}");
}

/// Deep in the semiclassical regime (small η) one Floquet cycle moves the
/// centroid of a coherent state along the classical web map.
#[test]
fn single_cycle_centroid_follows_classical_map() {
    // post-kick energy must stay well inside the truncation: with K = 1 and
    // this start the kicked state sits near ⟨n̂⟩ ≈ 110 ≪ N
    let eta = 0.05;
    let params = SystemParams::new(1.0, 6, eta).unwrap();
    let basis = FockBasis::new(512).unwrap();
    let start = PhasePoint { v: 0.6, u: 0.3 };
    let beta = C64::new(start.v, start.u) / (2.0 * eta);
    let state = displaced_vacuum(basis, beta).unwrap();

    let u = floquet_operator(&params, basis).unwrap();
    let kicked = apply_floquet(&state, &u).unwrap();

    // ⟨â⟩ = (⟨v̂⟩ + i⟨û⟩)/2η
    let amps = kicked.amplitudes();
    let mut a_mean = C64::new(0.0, 0.0);
    for k in 1..basis.size() {
        a_mean += amps[k - 1].conj() * amps[k] * (k as f64).sqrt();
    }
    let v_mean = 2.0 * eta * a_mean.re;
    let u_mean = 2.0 * eta * a_mean.im;

    let classical = web_map_step(start, &params);
    // wave-packet smearing corrects the kick at O(e^{−η²/2} − 1) ≈ 1e-3
    assert!(
        (v_mean - classical.v).abs() < 5e-3,
        "v: quantum {v_mean} classical {}",
        classical.v
    );
    assert!(
        (u_mean - classical.u).abs() < 5e-3,
        "u: quantum {u_mean} classical {}",
        classical.u
    );
}
