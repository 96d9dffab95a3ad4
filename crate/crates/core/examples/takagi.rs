//! Takagi factorization A = V^T S V of a Hankel matrix.

use chirpdec::{hankel, sample_capture, takagi, LfmComponent, NoiseSpec, SamplingGrid};

fn main() -> chirpdec::Result<()> {
    let grid = SamplingGrid::new(0.0, 1e-3, 15)?;
    let cap = sample_capture(
        &[LfmComponent::new(1.0, 2e4, 130.0, 0.0)?],
        grid,
        NoiseSpec::noiseless(),
    )?;
    let a = hankel(&cap.x)?.to_mat();
    let t = takagi(a.as_ref())?;
    let rec = t.reconstruct();
    let mut err = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            err = err.max((rec[(i, j)] - a[(i, j)]).norm());
        }
    }
    let s: Vec<String> = t.s.iter().map(|v| format!("{v:.1e}")).collect();
    println!("takagi values {}", s.join(" "));
    println!("max reconstruction error {err:.1e}");
    Ok(())
}
