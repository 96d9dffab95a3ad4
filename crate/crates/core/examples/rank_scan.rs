//! Numerical rank of single-chirp Hankel matrices as the curvature grows.

use chirpdec::rank_ratio_scan;

fn main() -> chirpdec::Result<()> {
    let ks = [0.0, 100.0, 1e3, 1e4, 1e5];
    let rows = rank_ratio_scan(&ks, &[1e-3], 16, 1e-10)?;
    println!("{:>10} {:>5} {:>6}", "k", "rank", "ratio");
    for r in rows {
        println!("{:>10.0} {:>5} {:>6.3}", r.k, r.rank, r.ratio);
    }
    Ok(())
}
