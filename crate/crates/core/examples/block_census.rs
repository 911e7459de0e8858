//! Size classes of the diagonal blocks left after beam pairing.

use srbp::montecarlo::{run_block_census, ExperimentConfig};

fn main() -> srbp::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64);
    let report = run_block_census(&ExperimentConfig::new(n).with_trials(5_000).with_seed(1))?;
    let c = &report.census;
    println!("N={n}, {:.2} blocks per trial", c.blocks_per_trial);
    for (name, share) in [
        ("single", c.single),
        ("row vector", c.row_vector),
        ("column vector", c.column_vector),
        ("other", c.other),
    ] {
        println!(
            "{name:>14}: {:>7.3} per trial ({:.2}%)",
            share.average, share.percentage
        );
    }
    println!(
        "active exclusions {:.3}, N_bar - N_d {:.3}",
        report.mean("n_ex_active"),
        report.mean("n_bar_minus_n_d")
    );
    println!("block bound violations: {}", report.block_bound_violations);
    Ok(())
}
