//! Cross-module protocol tests.

use std::sync::Arc;

use num_complex::Complex64;

use bbchain::basis::SectorBasis;
use bbchain::control::adiabatic_threshold;
use bbchain::evolve::{evolve_full, EvolveOptions};
use bbchain::params::{BBParams, SiteState};
use bbchain::profile::{default_x_grid, spectral_profile};
use bbchain::schedule::CouplingSchedule;
use bbchain::state::{dimer_state, FreeSide, FreeSpin, StateVector};

/// Orthonormal two-state basis of the three-site transfer subspace built
/// from the left/right dimer states.
fn reduced_basis(basis: &Arc<SectorBasis>) -> (Vec<Complex64>, Vec<Complex64>) {
    let left = dimer_state(basis, FreeSide::LeftFree, &FreeSpin::Pure(SiteState::Plus)).unwrap();
    let right = dimer_state(basis, FreeSide::RightFree, &FreeSpin::Pure(SiteState::Plus)).unwrap();
    let n1 = 3.0_f64.sqrt() / (2.0 * 2.0_f64.sqrt());
    let n2 = 3.0_f64.sqrt() / 2.0;
    let b1: Vec<Complex64> = left
        .amps
        .iter()
        .zip(&right.amps)
        .map(|(l, r)| (l + r) * n1)
        .collect();
    let b2: Vec<Complex64> = left
        .amps
        .iter()
        .zip(&right.amps)
        .map(|(l, r)| (l - r) * n2)
        .collect();
    (b1, b2)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn full_propagation_matches_two_level_reduction() {
    // The three-site dynamics started in the transfer subspace stays there;
    // its amplitudes follow the 2x2 Hamiltonian
    //   -alpha/2 I + (alpha/6) [[-1, -2 sqrt(2) x], [-2 sqrt(2) x, 1]].
    let alpha = 1.0;
    let duration = 9.7;
    let params = BBParams::dimerized(3, alpha).unwrap();
    let basis = Arc::new(SectorBasis::new(3, 1).unwrap());
    let (b1, b2) = reduced_basis(&basis);
    let psi0 = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Pure(SiteState::Plus)).unwrap();
    let schedule = CouplingSchedule::linear(duration).unwrap();
    let (_, full) = evolve_full(&params, &schedule, &psi0, &EvolveOptions::default()).unwrap();

    // direct 2x2 propagation with a tiny RK step
    let x_of = |t: f64| (duration - 2.0 * t) / duration;
    let h2 = |t: f64| {
        let x = x_of(t);
        [
            [-alpha / 2.0 - alpha / 6.0, -alpha / 6.0 * 2.0 * 2.0_f64.sqrt() * x],
            [-alpha / 6.0 * 2.0 * 2.0_f64.sqrt() * x, -alpha / 2.0 + alpha / 6.0],
        ]
    };
    let mut c = [
        inner(&b1, &psi0.amps),
        inner(&b2, &psi0.amps),
    ];
    let steps = 200_000usize;
    let dt = duration / steps as f64;
    let deriv = |t: f64, c: &[Complex64; 2]| -> [Complex64; 2] {
        let h = h2(t);
        let i = Complex64::new(0.0, 1.0);
        [
            -i * (c[0] * h[0][0] + c[1] * h[0][1]),
            -i * (c[0] * h[1][0] + c[1] * h[1][1]),
        ]
    };
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = deriv(t, &c);
        let c2 = [c[0] + k1[0] * (dt / 2.0), c[1] + k1[1] * (dt / 2.0)];
        let k2 = deriv(t + dt / 2.0, &c2);
        let c3 = [c[0] + k2[0] * (dt / 2.0), c[1] + k2[1] * (dt / 2.0)];
        let k3 = deriv(t + dt / 2.0, &c3);
        let c4 = [c[0] + k3[0] * dt, c[1] + k3[1] * dt];
        let k4 = deriv(t + dt, &c4);
        for j in 0..2 {
            c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
    }

    // the full state projected onto the subspace
    let a = [inner(&b1, &full.amps), inner(&b2, &full.amps)];
    let in_subspace = a[0].norm_sqr() + a[1].norm_sqr();
    assert!((in_subspace - 1.0).abs() < 1e-10, "leaked out of the subspace");
    let overlap = (a[0].conj() * c[0] + a[1].conj() * c[1]).norm();
    assert!(
        (overlap - 1.0).abs() < 1e-8,
        "2x2 and full propagation disagree: |<a|c>| = {overlap}"
    );
}

#[test]
fn threshold_composes_from_profile_extrema() {
    let params = BBParams::dimerized(7, 1.0).unwrap();
    let grid = default_x_grid();
    let profile = spectral_profile(&params, &grid, 1).unwrap();
    let threshold = adiabatic_threshold(&profile).unwrap();
    let expect = profile.max_coupling() / profile.min_gap();
    assert!((threshold - expect).abs() < 1e-14);
    // both extrema sit at the band center
    let center = grid.iter().position(|&x| x == 0.0).unwrap();
    assert_eq!(
        profile
            .gap
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0,
        center
    );
    assert_eq!(
        profile
            .coupling
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0,
        center
    );
}

#[test]
fn general_superposition_transfers_in_full_basis() {
    // A coherent superposition of m = +1 and m = 0 transported on N = 3;
    // the final last-site density matrix reproduces the input state.
    let params = BBParams::dimerized(3, 1.0).unwrap();
    let basis = Arc::new(SectorBasis::full(3).unwrap());
    let w = 1.0 / 2.0_f64.sqrt();
    let phi = [
        Complex64::new(w, 0.0),
        Complex64::new(0.0, w),
        Complex64::new(0.0, 0.0),
    ];
    let psi0 = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Amplitudes(phi)).unwrap();
    let schedule = CouplingSchedule::linear(120.0).unwrap();
    let (record, fin) = evolve_full(&params, &schedule, &psi0, &EvolveOptions::default()).unwrap();
    assert!(record.norm_drift < 1e-8);
    let fid = bbchain::evolve::transfer_fidelity(&fin, &FreeSpin::Amplitudes(phi)).unwrap();
    assert!(fid > 0.999, "superposition fidelity = {fid}");
    let target = dimer_state(&basis, FreeSide::RightFree, &FreeSpin::Amplitudes(phi)).unwrap();
    let overlap = bbchain::evolve::target_overlap(&fin, &target);
    assert!(overlap > 0.999, "target overlap = {overlap}");
}

#[test]
fn ground_state_is_unique_across_sectors_and_sizes() {
    // E1 - E0 > 0 at representative x for every sector the protocol touches.
    for n in [3usize, 5, 7] {
        let params = BBParams::dimerized(n, 1.0).unwrap();
        for m in [-1i32, 0, 1] {
            let basis = Arc::new(SectorBasis::new(n, m).unwrap());
            for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
                let h = bbchain::sparse::build_transfer_hamiltonian(&params, x, &basis).unwrap();
                let pairs = bbchain::eigen::lowest_eigenpairs(&h, 2).unwrap();
                assert!(
                    pairs[1].energy - pairs[0].energy > 1e-6,
                    "degenerate ground at N={n}, M={m}, x={x}"
                );
            }
        }
    }
}

#[test]
fn state_vector_round_trips_through_record_csv() {
    let params = BBParams::dimerized(3, 1.0).unwrap();
    let basis = Arc::new(SectorBasis::new(3, 1).unwrap());
    let psi0 = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Pure(SiteState::Plus)).unwrap();
    let schedule = CouplingSchedule::linear(10.0).unwrap();
    let (record, _) = evolve_full(&params, &schedule, &psi0, &EvolveOptions::default()).unwrap();
    let mut buf = Vec::new();
    record.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,p_1,p_2,p_3,norm");
    assert_eq!(lines.len(), 202);
    // populations parse back to the recorded values
    let last: Vec<f64> = lines[201]
        .split(',')
        .map(|v| v.parse::<f64>().unwrap())
        .collect();
    assert!((last[0] - 10.0).abs() < 1e-12);
    assert!((last[3] - record.fidelity).abs() < 1e-15);
    let _ = StateVector::new(Arc::clone(&basis), psi0.amps.clone()).unwrap();
}
