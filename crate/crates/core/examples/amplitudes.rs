//! Complex amplitudes once (k, f) are known: the (X, L) pencil and least squares.

use chirpdec::{
    amplitude_pencil, least_squares_amplitudes, sample_capture, to_amp_phase, unit_chirp_hankel,
    HankelTriplet, LfmComponent, NoiseSpec, SamplingGrid,
};

fn main() -> chirpdec::Result<()> {
    let truth = [
        LfmComponent::new(1.0, 150.0, 3210.0, 0.5)?,
        LfmComponent::new(0.6, -90.0, 7777.0, -1.1)?,
    ];
    let grid = SamplingGrid::new(0.0, 1e-3, 127)?;
    let cap = sample_capture(&truth, grid, NoiseSpec::noiseless())?;

    let params: Vec<(f64, f64)> = truth.iter().map(|c| (c.k, c.f)).collect();
    let ls = least_squares_amplitudes(&cap, &params)?;
    let x = HankelTriplet::from_capture(&cap, 0, 16)?.x;
    for (c, beta) in truth.iter().zip(&ls) {
        let (a, phi) = to_amp_phase(*beta)?;
        let l = unit_chirp_hankel(c.k, c.f, &grid, 16)?;
        let nearest = amplitude_pencil(&x, &l, 1e-5)?
            .into_iter()
            .map(|p| (p.beta - beta).norm())
            .fold(f64::INFINITY, f64::min);
        println!(
            "a {a:.6} phi {phi:+.6}  (truth {:.6} {:+.6})  pencil gap {nearest:.1e}",
            c.a, c.phi
        );
    }
    Ok(())
}
