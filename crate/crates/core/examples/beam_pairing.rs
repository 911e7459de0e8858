//! Runs the beam pairing on a small random mask and prints the action log,
//! the permuted mask and its diagonal blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srbp::channel::sample_bernoulli_mask;
use srbp::srbp::{block_triangulate, initialize, lower_triangulate};

fn main() -> srbp::Result<()> {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mask = sample_bernoulli_mask(n, n, 1.5 / n as f64, &mut rng)?;
    println!("mask:\n{mask}");

    let tri = lower_triangulate(initialize(&mask), &mut rng);
    tri.verify(&mask)?;
    print!("{}", tri.trace().to_text());
    println!(
        "\nN_d={} N_ex={} residual={} (N={n})",
        tri.n_d(),
        tri.n_ex_active(),
        tri.n_residual()
    );

    let blocks = block_triangulate(&tri, &mask)?;
    println!("\npermuted:\n{}", blocks.permuted_mask());
    for b in blocks.blocks() {
        let (r, c) = b.shape();
        println!(
            "{r}x{c} {:?} rows {:?} cols {:?}",
            b.class(),
            b.rows,
            b.cols
        );
    }
    Ok(())
}
