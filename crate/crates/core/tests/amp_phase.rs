use chirpdec::{
    amplitude_pencil, least_squares_amplitudes, sample_capture, to_amp_phase, unit_chirp_hankel,
    AmplitudeSource, Error, HankelTriplet, LfmComponent, NoiseSpec, SamplingGrid,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid() -> SamplingGrid {
    SamplingGrid::new(0.0, 1e-3, 127).unwrap()
}

fn beta_of(c: &LfmComponent) -> Complex64 {
    Complex64::from_polar(c.a, c.phi)
}

// Entries of L are the unit chirp itself, evaluated directly.
#[test]
fn unit_chirp_matrix_is_the_sampled_chirp() {
    let g = SamplingGrid::new(0.05, 2e-3, 31).unwrap();
    let (k, f) = (-2.5e3, 321.0);
    let l = unit_chirp_hankel(k, f, &g, 16).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            let t = 0.05 + (i + j) as f64 * 2e-3;
            let want = Complex64::from_polar(1.0, k * t * t + 2.0 * PI * f * t);
            assert!((l.l.get(i, j) - want).norm() <= 1e-13);
        }
    }
}

#[test]
fn pencil_recovers_single_component() {
    let c = LfmComponent::new(1.7, 3.2e3, 2345.6, 2.4).unwrap();
    let cap = sample_capture(&[c], grid(), NoiseSpec::noiseless()).unwrap();
    let x = HankelTriplet::from_capture(&cap, 0, 16).unwrap().x;
    let l = unit_chirp_hankel(c.k, c.f, &grid(), 16).unwrap();
    // Directions just above the range cut carry errors of order eps / sigma,
    // so the cut sits well clear of the roundoff floor.
    let cands = amplitude_pencil(&x, &l, 1e-5).unwrap();
    assert!(cands.len() > 1);
    for cand in &cands {
        assert_eq!(cand.source, AmplitudeSource::Pencil);
        assert!(
            (cand.beta - beta_of(&c)).norm() <= 1e-8 * c.a,
            "{:?}",
            cand.beta
        );
    }
}

#[test]
fn pencil_picks_out_one_of_two_components() {
    let cs = [
        LfmComponent::new(1.0, 150.0, 3210.0, 0.5).unwrap(),
        LfmComponent::new(0.6, -90.0, 7777.0, -1.1).unwrap(),
    ];
    let cap = sample_capture(&cs, grid(), NoiseSpec::noiseless()).unwrap();
    let x = HankelTriplet::from_capture(&cap, 0, 16).unwrap().x;
    for c in &cs {
        let l = unit_chirp_hankel(c.k, c.f, &grid(), 16).unwrap();
        let cands = amplitude_pencil(&x, &l, 1e-5).unwrap();
        let best = cands
            .iter()
            .map(|p| (p.beta - beta_of(c)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-6 * c.a, "{best:e}");
    }
}

#[test]
fn zero_signal_has_no_pencil_candidates() {
    let cap = sample_capture(&[], grid(), NoiseSpec::noiseless()).unwrap();
    let x = HankelTriplet::from_capture(&cap, 0, 8).unwrap().x;
    let l = unit_chirp_hankel(10.0, 10.0, &grid(), 8).unwrap();
    assert!(amplitude_pencil(&x, &l, 1e-10).unwrap().is_empty());
    let l = unit_chirp_hankel(10.0, 10.0, &grid(), 9).unwrap();
    assert!(matches!(
        amplitude_pencil(&x, &l, 1e-10),
        Err(Error::Structure(_))
    ));
}

#[test]
fn least_squares_single_and_constant() {
    let c = LfmComponent::new(0.9, -4.4e4, 1234.0, -3.0).unwrap();
    let cap = sample_capture(&[c], grid(), NoiseSpec::noiseless()).unwrap();
    let b = least_squares_amplitudes(&cap, &[(c.k, c.f)]).unwrap();
    assert!((b[0] - beta_of(&c)).norm() <= 1e-12);

    let mut flat = cap.clone();
    flat.x
        .iter_mut()
        .for_each(|z| *z = Complex64::new(3.0, 0.0));
    flat.xdot
        .iter_mut()
        .for_each(|z| *z = Complex64::new(0.0, 0.0));
    let b = least_squares_amplitudes(&flat, &[(0.0, 0.0)]).unwrap();
    assert!((b[0] - Complex64::new(3.0, 0.0)).norm() <= 1e-12);
    assert!(least_squares_amplitudes(&cap, &[]).unwrap().is_empty());
}

#[test]
fn least_squares_and_pencil_agree() {
    let cs = [
        LfmComponent::new(1.0, 220.0, 1500.0, 0.2).unwrap(),
        LfmComponent::new(0.7, -130.0, 5200.0, 1.9).unwrap(),
        LfmComponent::new(0.4, 60.0, -3100.0, -2.6).unwrap(),
    ];
    let cap = sample_capture(&cs, grid(), NoiseSpec::noiseless()).unwrap();
    let params: Vec<(f64, f64)> = cs.iter().map(|c| (c.k, c.f)).collect();
    let ls = least_squares_amplitudes(&cap, &params).unwrap();
    let x = HankelTriplet::from_capture(&cap, 0, 16).unwrap().x;
    for (c, b) in cs.iter().zip(&ls) {
        assert!((b - beta_of(c)).norm() <= 1e-10);
        let l = unit_chirp_hankel(c.k, c.f, &grid(), 16).unwrap();
        let near = amplitude_pencil(&x, &l, 1e-5)
            .unwrap()
            .iter()
            .map(|p| (p.beta - b).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(near <= 1e-6, "{near:e}");
    }
}

// Two chirps that coincide on the sample grid: the derivative rows separate them.
#[test]
fn aliased_pair_is_separated_by_derivative_rows() {
    let dt = 1e-3;
    let cs = [
        LfmComponent::new(1.0, 0.0, 100.0, 0.3).unwrap(),
        LfmComponent::new(0.5, 0.0, 100.0 + 1.0 / dt, -0.8).unwrap(),
    ];
    let cap = sample_capture(&cs, grid(), NoiseSpec::noiseless()).unwrap();
    let ls = least_squares_amplitudes(&cap, &[(0.0, 100.0), (0.0, 1100.0)]).unwrap();
    for (c, b) in cs.iter().zip(&ls) {
        assert!((b - beta_of(c)).norm() <= 1e-9, "{b}");
    }
    assert!(least_squares_amplitudes(&cap, &[(0.0, 100.0), (0.0, 100.0)]).is_err());
}

proptest! {
    #[test]
    fn amp_phase_round_trip(a in 1e-6f64..1e6, phi in -PI + 1e-9..PI) {
        let (a2, phi2) = to_amp_phase(Complex64::from_polar(a, phi)).unwrap();
        prop_assert!((a2 - a).abs() <= 1e-14 * a);
        prop_assert!((phi2 - phi).abs() <= 1e-12);
    }
}

#[test]
fn amp_phase_edges() {
    assert!(matches!(
        to_amp_phase(Complex64::new(0.0, 0.0)),
        Err(Error::Degenerate(_))
    ));
    assert!(to_amp_phase(Complex64::new(f64::NAN, 1.0)).is_err());
    let (_, phi) = to_amp_phase(Complex64::new(-1.0, 0.0)).unwrap();
    assert_eq!(phi, PI);
}
