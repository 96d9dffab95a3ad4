use chirpdec::{
    eval_derivative, eval_signal, nyquist_deficit, sample_capture, LfmComponent, NoiseSpec,
    SamplingGrid,
};
use num_complex::Complex64;
use proptest::prelude::*;

// Rates kept below ~1700 rad/s so the O((w h)^2) truncation error of the
// central difference stays under the 1e-6 tolerance.
fn comp() -> impl Strategy<Value = LfmComponent> {
    (0.1f64..3.0, -400f64..400.0, -200f64..200.0, -3.0f64..3.0)
        .prop_map(|(a, k, f, phi)| LfmComponent { a, k, f, phi })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Central difference of x against the analytic derivative.
    #[test]
    fn derivative_matches_central_difference(cs in prop::collection::vec(comp(), 1..4), t in -0.5f64..0.5) {
        let h = 1e-6 * t.abs().max(1.0);
        let xp = eval_signal(&cs, &[t + h]).unwrap()[0];
        let xm = eval_signal(&cs, &[t - h]).unwrap()[0];
        let fd = (xp - xm) / (2.0 * h);
        let d = eval_derivative(&cs, &[t]).unwrap()[0];
        let scale: f64 = cs.iter().map(|c| c.a * (2.0 * c.k * t + std::f64::consts::TAU * c.f).abs()).sum();
        prop_assert!((fd - d).norm() <= 1e-6 * scale.max(1.0), "fd {fd} analytic {d}");
    }

    #[test]
    fn signal_is_sum_of_components(cs in prop::collection::vec(comp(), 1..4), t in -1.0f64..1.0) {
        let total = eval_signal(&cs, &[t]).unwrap()[0];
        let parts: Complex64 = cs.iter().map(|c| eval_signal(&[*c], &[t]).unwrap()[0]).sum();
        prop_assert!((total - parts).norm() <= 1e-12 * cs.len() as f64 * 3.0);
    }
}

#[test]
fn measured_snr_matches_request() {
    let tone = LfmComponent::new(1.7, 40.0, 123.0, 0.2).unwrap();
    let grid = SamplingGrid::new(0.0, 1e-4, 100_000).unwrap();
    let clean = sample_capture(&[tone], grid, NoiseSpec::noiseless()).unwrap();
    let noisy = sample_capture(&[tone], grid, NoiseSpec::new(20.0, 99)).unwrap();
    for (c, n) in [(&clean.x, &noisy.x), (&clean.xdot, &noisy.xdot)] {
        let ps: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let pn: f64 = c
            .iter()
            .zip(n.iter())
            .map(|(a, b)| (b - a).norm_sqr())
            .sum();
        let snr = 10.0 * (ps / pn).log10();
        assert!((snr - 20.0).abs() <= 0.5, "measured {snr} dB");
    }
}

#[test]
fn derivative_channel_can_have_its_own_snr() {
    let tone = LfmComponent::new(1.0, 0.0, 50.0, 0.0).unwrap();
    let grid = SamplingGrid::new(0.0, 1e-3, 50_000).unwrap();
    let clean = sample_capture(&[tone], grid, NoiseSpec::noiseless()).unwrap();
    let noise = NoiseSpec {
        xdot_snr_db: Some(40.0),
        ..NoiseSpec::new(10.0, 3)
    };
    let cap = sample_capture(&[tone], grid, noise).unwrap();
    let snr = |c: &[Complex64], n: &[Complex64]| {
        let ps: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let pn: f64 = c.iter().zip(n).map(|(a, b)| (b - a).norm_sqr()).sum();
        10.0 * (ps / pn).log10()
    };
    assert!((snr(&clean.x, &cap.x) - 10.0).abs() < 0.5);
    assert!((snr(&clean.xdot, &cap.xdot) - 40.0).abs() < 0.5);
}

#[test]
fn different_seeds_differ_same_seed_repeats() {
    let c = [LfmComponent::new(1.0, 300.0, 4000.0, 1.0).unwrap()];
    let g = SamplingGrid::new(0.0, 1e-3, 127).unwrap();
    let a = sample_capture(&c, g, NoiseSpec::new(10.0, 1)).unwrap();
    let b = sample_capture(&c, g, NoiseSpec::new(10.0, 1)).unwrap();
    let d = sample_capture(&c, g, NoiseSpec::new(10.0, 2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.x, d.x);
}

// Peak of |2kt + w| found by scanning a fine grid against the endpoint formula.
#[test]
fn deficit_matches_dense_scan() {
    let k = std::f64::consts::TAU * 1e6;
    let chirp = LfmComponent::new(1.0, k, 0.0, 0.0).unwrap();
    let grid = SamplingGrid::new(0.0, 1e-3, 101).unwrap();
    let d = nyquist_deficit(&[chirp], &grid).unwrap();
    // 2 k t / 2pi at t = 0.1 s is 2e5 Hz, against a 500 Hz Nyquist frequency.
    assert!((d - 400.0).abs() < 1e-9, "{d}");

    let cs = [
        LfmComponent::new(1.0, -3e4, 2e3, 0.0).unwrap(),
        LfmComponent::new(0.5, 1e4, -7e3, 0.0).unwrap(),
    ];
    let grid = SamplingGrid::new(-0.05, 2e-3, 80).unwrap();
    let scan = (0..=100_000)
        .map(|i| grid.t0 + (grid.end() - grid.t0) * i as f64 / 100_000.0)
        .flat_map(|t| cs.iter().map(move |c| c.inst_omega(t).abs()))
        .fold(0.0, f64::max);
    let expect = scan / std::f64::consts::TAU / (0.5 / grid.dt);
    assert!((nyquist_deficit(&cs, &grid).unwrap() - expect).abs() <= 1e-9 * expect);
}
