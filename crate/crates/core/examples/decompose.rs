//! Full decomposition of a sub-Nyquist capture, with diagnostics.

use chirpdec::{
    decompose, nyquist_deficit, sample_capture, DecomposeConfig, LfmComponent, NoiseSpec,
    SamplingGrid,
};

fn main() -> chirpdec::Result<()> {
    let truth = [
        LfmComponent::new(1.0, 800.0, 8730.0, 2.0)?,
        LfmComponent::new(0.8, -400.0, 5420.0, 1.0)?,
        LfmComponent::new(0.5, 200.0, 1210.0, 0.0)?,
    ];
    let grid = SamplingGrid::new(0.0, 1e-3, 127)?;
    let cap = sample_capture(&truth, grid, NoiseSpec::noiseless())?;
    println!("nyquist deficit {:.1}", nyquist_deficit(&truth, &grid)?);

    let r = decompose(&cap, &DecomposeConfig::default())?;
    for c in &r.components {
        let e = c.component;
        println!(
            "a {:.6} k {:>9.3} f {:>9.3} phi {:+.6} ({:?})",
            e.a, e.k, e.f, e.phi, c.amp_source
        );
    }
    println!("reconstruction error {:.1e}", r.reconstruction_rel_error);
    println!(
        "model order {:?} at n = 16, premise warning {}, selected tol {:?}",
        r.diagnostics.model_order, r.premise_warning, r.diagnostics.selected_tol
    );
    Ok(())
}
