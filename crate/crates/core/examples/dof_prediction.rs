//! Analytical beam-pair count next to simulated SRBP and SVD degrees of freedom.

use srbp::dof::predict_dof;
use srbp::montecarlo::{run_dof_trials, ExperimentConfig};

fn main() -> srbp::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2_000);
    println!(
        "{:>5} {:>10} {:>10} {:>10}",
        "N", "predicted", "srbp", "svd"
    );
    for n in [8, 16, 32, 64, 128] {
        let predicted = predict_dof(n, 1.0 / n as f64)?;
        let report = run_dof_trials(&ExperimentConfig::new(n).with_trials(trials).with_seed(1))?;
        println!(
            "{n:>5} {:>10.3} {:>10.3} {:>10.3}",
            predicted.n_d,
            report.mean("n_d"),
            report.mean("svd_rank")
        );
    }

    let p = predict_dof(64, 1.0 / 64.0)?;
    println!("\nN=64: expected steps without a pair {:.3}", p.n_ex);
    for s in p.trajectory.iter().step_by(8) {
        println!(
            "  step {:>2}: m={:.3} N_1={:.3} p_ex={:.2e}",
            s.step,
            s.m,
            s.n1(),
            s.p_ex
        );
    }
    Ok(())
}
