// scratch probe for calibrating acceptance anchors; not part of the build
use kickho::fock::{floquet_operator, FockBasis};
use kickho::husimi::{husimi_grid, localization_fraction, HusimiGridSpec};
use kickho::params::SystemParams;
use kickho::propagate::{InitialState, StateVector};
use kickho::spectral::{
    circular_distance, convergence_report, diagonalize, eta_sweep, find_avoided_crossings,
    track_bands, CrossingSearch,
};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use std::time::Instant;

fn continuation_state(
    reference: &Array1<C64>,
    eta: f64,
    basis: FockBasis,
    exclude: Option<usize>,
) -> (usize, f64, StateVector) {
    let params = SystemParams::new(2.0, 6, eta).unwrap();
    let u = floquet_operator(&params, basis).unwrap();
    let spectrum = diagonalize(&u).unwrap();
    let score = |j: usize| -> f64 {
        let col = spectrum.eigenvector(j);
        let ov: C64 = reference
            .iter()
            .zip(col.iter())
            .map(|(&a, &b)| a.conj() * b)
            .sum();
        ov.norm()
    };
    let j = (0..spectrum.len())
        .filter(|&j| Some(j) != exclude)
        .max_by(|&x, &y| score(x).total_cmp(&score(y)))
        .unwrap();
    let state = StateVector::new(basis, spectrum.eigenvector(j).to_owned()).unwrap();
    (j, spectrum.phases()[j], state)
}

fn main() {
    let t0 = Instant::now();
    let basis = FockBasis::new(300).unwrap();

    // criterion-2-style pipeline on the pinned window
    let grid: Vec<f64> = (0..101).map(|i| 0.44 + 0.0005 * i as f64).collect();
    let ld = eta_sweep(2.0, 6, basis, &grid, &InitialState::Vacuum, 1e-3).unwrap();
    println!("sweep: {:?}", t0.elapsed());
    let branches = track_bands(&ld);
    let search = CrossingSearch {
        refine_tol: 1e-4,
        max_grid_gap: 0.3,
        min_overlap: 1e-2,
    };
    let crossings = find_avoided_crossings(&ld, &branches, search, |eta| {
        let params = SystemParams::new(2.0, 6, eta).unwrap();
        let u = floquet_operator(&params, basis).unwrap();
        diagonalize(&u)
    })
    .unwrap();
    println!("crossings: {:?} found {}", t0.elapsed(), crossings.len());
    let matching: Vec<_> = crossings
        .iter()
        .filter(|x| {
            x.eta_center >= 0.459
                && x.eta_center <= 0.469
                && circular_distance(x.phase_center, 1.35) <= 0.1
        })
        .collect();
    for x in &matching {
        println!(
            "  match: eta={:.5} phase={:+.4} gap={:.3e} ovmax={:.3} branches {:?}",
            x.eta_center, x.phase_center, x.min_gap, x.max_overlap, x.branches
        );
    }
    let best = matching
        .iter()
        .max_by(|a, b| a.max_overlap.total_cmp(&b.max_overlap))
        .expect("a matching crossing");
    println!(
        "selected: eta={:.5} phase={:+.4} gap={:.3e} branches {:?}",
        best.eta_center, best.phase_center, best.min_gap, best.branches
    );

    // localization exchange between 0.459 and 0.469 via vector continuation
    let ba = branches.iter().find(|b| b.id == best.branches.0).unwrap();
    let bb = branches.iter().find(|b| b.id == best.branches.1).unwrap();
    let grid_spec = HusimiGridSpec::centered(12.0, 241).unwrap();
    for &eta_ref in &[0.459f64, 0.469] {
        // use each branch's endpoint vector nearest eta_ref as the reference
        let nearest = |b: &kickho::spectral::Branch| {
            b.points
                .iter()
                .min_by(|p, q| {
                    (p.eta - eta_ref)
                        .abs()
                        .total_cmp(&(q.eta - eta_ref).abs())
                })
                .unwrap()
                .clone()
        };
        let pa = nearest(ba);
        let pb = nearest(bb);
        let va = ld.slices[pa.slice].levels[pa.level].vector.clone();
        let vb = ld.slices[pb.slice].levels[pb.level].vector.clone();
        let (ja, phase_a, sa) = continuation_state(&va, eta_ref, basis, None);
        let (_jb, phase_b, sb) = continuation_state(&vb, eta_ref, basis, Some(ja));
        let fa = localization_fraction(&husimi_grid(&sa, &grid_spec).unwrap(), 1.5).unwrap();
        let fb = localization_fraction(&husimi_grid(&sb, &grid_spec).unwrap(), 1.5).unwrap();
        let out_a =
            1.0 - localization_fraction(&husimi_grid(&sa, &grid_spec).unwrap(), 3.0).unwrap();
        let out_b =
            1.0 - localization_fraction(&husimi_grid(&sb, &grid_spec).unwrap(), 3.0).unwrap();
        println!(
            "eta={eta_ref}: A(phase {:+.4}) frac1.5={:.3} out3={:.3} | B(phase {:+.4}) frac1.5={:.3} out3={:.3}",
            phase_a, fa, out_a, phase_b, fb, out_b
        );
    }
    println!("exchange probe: {:?}", t0.elapsed());

    // criterion-7 saturation: drift of THE crossing pair across N
    let s_mid = ba
        .points
        .iter()
        .min_by(|p, q| {
            (p.eta - best.eta_center)
                .abs()
                .total_cmp(&(q.eta - best.eta_center).abs())
        })
        .unwrap()
        .slice;
    let pa = ba
        .point_at_slice(s_mid)
        .unwrap_or_else(|| ba.points.last().unwrap());
    let pb = bb
        .point_at_slice(s_mid)
        .unwrap_or_else(|| bb.points.last().unwrap());
    let ref_a = ld.slices[pa.slice].levels[pa.level].vector.clone();
    let ref_b = ld.slices[pb.slice].levels[pb.level].vector.clone();
    let eta_c = best.eta_center;
    let mut phases_by_n = Vec::new();
    for n in [200usize, 300, 400] {
        let bn = FockBasis::new(n).unwrap();
        let params = SystemParams::new(2.0, 6, eta_c).unwrap();
        let u = floquet_operator(&params, bn).unwrap();
        let spectrum = diagonalize(&u).unwrap();
        let m = n.min(ref_a.len());
        let score = |reference: &Array1<C64>, j: usize| -> f64 {
            let col = spectrum.eigenvector(j);
            let ov: C64 = reference
                .iter()
                .take(m)
                .zip(col.iter().take(m))
                .map(|(&a, &b)| a.conj() * b)
                .sum();
            ov.norm()
        };
        let j1 = (0..n)
            .max_by(|&x, &y| score(&ref_a, x).total_cmp(&score(&ref_a, y)))
            .unwrap();
        let j2 = (0..n)
            .filter(|&j| j != j1)
            .max_by(|&x, &y| score(&ref_b, x).total_cmp(&score(&ref_b, y)))
            .unwrap();
        println!(
            "N={n}: pair phases {:+.6} {:+.6} (scores {:.3} {:.3})",
            spectrum.phases()[j1],
            spectrum.phases()[j2],
            score(&ref_a, j1),
            score(&ref_b, j2)
        );
        phases_by_n.push((spectrum.phases()[j1], spectrum.phases()[j2]));
    }
    let drift = |a: (f64, f64), b: (f64, f64)| -> f64 {
        circular_distance(a.0, b.0).max(circular_distance(a.1, b.1))
    };
    let d1 = drift(phases_by_n[0], phases_by_n[1]);
    let d2 = drift(phases_by_n[1], phases_by_n[2]);
    println!("pair drift 200->300: {d1:.3e}, 300->400: {d2:.3e}, monotone: {}", d2 < d1);

    // general report, for reference
    let report = convergence_report(2.0, 6, 0.464, &[200, 300, 400], &InitialState::Vacuum, 1e-2)
        .unwrap();
    for p in &report.pairs {
        println!(
            "filtered-set drift {}->{}: {:.3e} (matched {})",
            p.n_from, p.n_to, p.max_drift, p.matched
        );
    }
    println!("total: {:?}", t0.elapsed());
}
