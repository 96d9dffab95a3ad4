//! The coupled pencil problem by hand: Hankel triplets on two windows,
//! operator determinants, eigenpairs and the (k, f) mapping.

use chirpdec::{
    build_problem, filter_and_map, operator_determinants_projected, sample_capture, solve_pencils,
    FilterConfig, LfmComponent, NoiseSpec, SamplingGrid,
};

fn main() -> chirpdec::Result<()> {
    let truth = [
        LfmComponent::new(1.0, 120.0, 3210.0, 0.3)?,
        LfmComponent::new(0.7, -250.0, 7777.0, 2.0)?,
    ];
    let grid = SamplingGrid::new(0.0, 1e-3, 127)?;
    let cap = sample_capture(&truth, grid, NoiseSpec::noiseless())?;

    let problem = build_problem(&cap, 16, 0, 31)?;
    let deltas = operator_determinants_projected(&problem, 1e-7)?;
    let mut est = solve_pencils(&deltas, 1e-14)?;
    println!("{} eigenpairs", est.len());

    let filter = FilterConfig {
        time_span: problem.time_span().unwrap_or(1.0),
        reference_times: [grid.t0, grid.end()],
        ..Default::default()
    };
    for m in filter_and_map(&mut est, &filter)? {
        println!("k {:>10.4} rad/s^2  f {:>10.4} Hz", m.k, m.f);
    }
    Ok(())
}
