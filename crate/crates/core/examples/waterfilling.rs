//! Compares the SVD transceiver with the beam-pairing transceiver on one
//! sparse channel realization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srbp::channel::{apply_mask, sample_bernoulli_mask};
use srbp::spectral::{db_to_linear, srbp_capacity, svd_capacity, waterfill, GainProfile};
use srbp::srbp::{block_triangulate, extract_blocks, initialize, lower_triangulate};

fn main() -> srbp::Result<()> {
    let alloc = waterfill(&GainProfile::new(vec![4.0, 1.0])?, 2.0)?;
    println!(
        "gains [4, 1], budget 2: powers {:?}, water level {}",
        alloc.powers, alloc.water_level
    );

    let n = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mask = sample_bernoulli_mask(n, n, 1.0 / n as f64, &mut rng)?;
    let channel = apply_mask(&mask, &mut rng);
    let tri = lower_triangulate(initialize(&mask), &mut rng);
    let blocks = extract_blocks(&block_triangulate(&tri, &mask)?, &channel)?;

    println!("\nsnr_db  c_svd    c_srbp   streams(svd/srbp)");
    for snr_db in [0.0, 10.0, 20.0, 30.0] {
        let rho = db_to_linear(snr_db);
        let svd = svd_capacity(&channel, rho);
        let srbp = srbp_capacity(&blocks, rho);
        println!(
            "{snr_db:>6}  {:>7.3}  {:>7.3}  {}/{}",
            svd.capacity, srbp.capacity, svd.dof, srbp.dof
        );
    }
    Ok(())
}
