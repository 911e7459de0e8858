//! Builds a multipath channel, moves it to the angular domain and shows which
//! virtual entries carry energy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srbp::channel::{synthesize_physical_channel, virtual_decompose, PathSet};
use srbp::spectral::squared_singular_values;

fn main() -> srbp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 16;
    let paths = PathSet::random_on_grid(4, n, n, &mut rng)?;
    let h = synthesize_physical_channel(&paths, n, n)?;
    let v = virtual_decompose(&h);

    let mask = v.significant_mask();
    println!(
        "{} paths on the DFT grid, {} significant virtual entries",
        paths.len(),
        mask.nnz()
    );
    println!("{mask}");

    let err = (v.reconstruct() - h.matrix()).norm() / h.matrix().norm();
    println!("round-trip relative error {err:.2e}");
    let a = squared_singular_values(h.matrix());
    let b = squared_singular_values(&v.h_v);
    println!(
        "largest squared singular value: physical {:.6}, virtual {:.6}",
        a.as_slice()[0],
        b.as_slice()[0]
    );
    Ok(())
}
