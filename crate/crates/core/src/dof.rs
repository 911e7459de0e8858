//! Analytical prediction of the average number of beam pairs.
//!
//! Row weights of a Bernoulli(`δ`) mask are approximated as Poisson(`β = Nδ`).
//! The recursion tracks, step by step, the mean number of live rows `m`, the
//! mean number of weight-`k` rows `N_k`, and the probability `p_ex` that the
//! step has to exclude a column because no weight-1 row is left. The predicted
//! number of exclusions is `Σ p_ex` over the `N` steps and the predicted number
//! of pairs is `N − Σ p_ex`.
//!
//! At step `ℓ` the operating matrix has `N − ℓ + 1` columns. Removing one
//! column reduces a weight-`k` row with probability `α_k = k / (N − ℓ + 2)`,
//! capped at 1.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Weight classes are truncated once the Poisson tail beyond them is below this.
pub const TAIL_MASS: f64 = 1e-12;

/// `e^{−β} β^k / k!`.
pub fn poisson_row_weight_pmf(beta: f64, k: i64) -> Result<f64> {
    if k < 0 {
        return Err(invalid(format!("row weight must be nonnegative, got {k}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(poisson_pmf(beta, k as u64))
}

fn poisson_pmf(beta: f64, k: u64) -> f64 {
    let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * beta.ln() - beta - log_fact).exp()
}

/// Recursion state at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofRecursionState {
    /// 1-based step index `ℓ`.
    pub step: usize,
    /// Mean number of rows of the operating matrix.
    pub m: f64,
    /// `weight_counts[k - 1]` is the mean number of weight-`k` rows.
    pub weight_counts: Vec<f64>,
    pub p1: f64,
    pub p_ex: f64,
    /// `Σ p_ex` over steps `1..=step`.
    pub n_ex: f64,
}

impl DofRecursionState {
    fn with_counts(step: usize, m: f64, weight_counts: Vec<f64>, n_ex_before: f64) -> Self {
        let n1 = weight_counts.first().copied().unwrap_or(0.0);
        let p1 = if m > 0.0 { (n1 / m).min(1.0) } else { 0.0 };
        let p_ex = exclusion_probability(p1, m);
        Self {
            step,
            m,
            weight_counts,
            p1,
            p_ex,
            n_ex: n_ex_before + p_ex,
        }
    }

    pub fn n1(&self) -> f64 {
        self.weight_counts.first().copied().unwrap_or(0.0)
    }
}

/// `(1 − p1)^m` with `(·)^0 = 1` and `0^m = 0` for `m > 0`.
fn exclusion_probability(p1: f64, m: f64) -> f64 {
    if m <= 0.0 {
        1.0
    } else if p1 >= 1.0 {
        0.0
    } else {
        (m * (-p1).ln_1p()).exp()
    }
}

/// State after dropping the all-zero rows, before the first peeling step.
pub fn init_state(n: usize, delta: f64) -> Result<DofRecursionState> {
    if n == 0 {
        return Err(invalid("antenna count must be at least 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    let beta = n as f64 * delta;
    let p0 = poisson_pmf(beta, 0);
    let m = n as f64 * (1.0 - p0);

    let mut counts = Vec::new();
    let mut cumulative = p0;
    let mut k = 1u64;
    loop {
        let pk = poisson_pmf(beta, k);
        cumulative += pk;
        counts.push(m * pk / (1.0 - p0));
        // stop when the remaining tail is negligible, also guarding against
        // cumulative round-off stalling just below one
        let tail = 1.0 - cumulative;
        if tail < TAIL_MASS || (k as f64 > beta && pk < TAIL_MASS * 1e-3) {
            break;
        }
        k += 1;
    }
    Ok(DofRecursionState::with_counts(1, m, counts, 0.0))
}

/// Advances the recursion by one step for an `n`-column mask.
pub fn step(state: &DofRecursionState, n: usize) -> DofRecursionState {
    let denom = (n as f64 - state.step as f64 + 2.0).max(1.0);
    let alpha = |k: usize| (k as f64 / denom).min(1.0);
    let counts = &state.weight_counts;

    let q1 = (1.0 - alpha(1)) * (1.0 - state.p_ex) + alpha(1) * state.m * state.p1;
    let q = |k: usize| -> f64 {
        match k {
            1 => q1,
            _ if k <= counts.len() => alpha(k) * counts[k - 1],
            _ => 0.0,
        }
    };

    let m = (state.m - q1).max(0.0);
    let next: Vec<f64> = (1..=counts.len())
        .map(|k| (counts[k - 1] - q(k) + q(k + 1)).max(0.0))
        .collect();
    DofRecursionState::with_counts(state.step + 1, m, next, state.n_ex)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofPrediction {
    pub n: usize,
    pub delta: f64,
    pub n_d: f64,
    pub n_ex: f64,
    pub trajectory: Vec<DofRecursionState>,
}

impl DofPrediction {
    /// CSV with columns `step,m,n1,p1,p_ex`.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
        w.write_record(["step", "m", "n1", "p1", "p_ex"])
            .map_err(io)?;
        for s in &self.trajectory {
            w.write_record([
                s.step.to_string(),
                s.m.to_string(),
                s.n1().to_string(),
                s.p1.to_string(),
                s.p_ex.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| invalid(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Runs the recursion over all `n` steps.
pub fn predict_dof(n: usize, delta: f64) -> Result<DofPrediction> {
    let mut state = init_state(n, delta)?;
    let mut trajectory = Vec::with_capacity(n);
    while state.step < n {
        let next = step(&state, n);
        trajectory.push(state);
        state = next;
    }
    let n_ex = state.n_ex;
    trajectory.push(state);
    Ok(DofPrediction {
        n,
        delta,
        n_d: n as f64 - n_ex,
        n_ex,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_3;

    #[test]
    fn pmf_values() {
        assert!((poisson_row_weight_pmf(1.0, 0).unwrap() - E_INV).abs() < 1e-15);
        assert!((poisson_row_weight_pmf(1.0, 1).unwrap() - E_INV).abs() < 1e-15);
        let expected = (-2f64).exp() * 8.0 / 6.0;
        assert!((poisson_row_weight_pmf(2.0, 3).unwrap() - expected).abs() < 1e-15);
        assert!((poisson_row_weight_pmf(2.0, 3).unwrap() - 0.180_45).abs() < 1e-5);
    }

    #[test]
    fn pmf_rejects_bad_input() {
        assert!(poisson_row_weight_pmf(1.0, -1).is_err());
        assert!(poisson_row_weight_pmf(0.0, 1).is_err());
    }

    #[test]
    fn initial_state_typical() {
        let s = init_state(64, 1.0 / 64.0).unwrap();
        assert!((s.m - 64.0 * (1.0 - E_INV)).abs() < 1e-12);
        assert!((s.m - 40.4557).abs() < 1e-4);
        assert!((s.p1 - E_INV / (1.0 - E_INV)).abs() < 1e-12);
        assert!((s.p1 - 0.5820).abs() < 1e-4);
        assert!((s.weight_counts.iter().sum::<f64>() - s.m).abs() < 1e-9);
        // beta = 1 needs classes up to k = 14 before the tail drops below 1e-12
        assert!(s.weight_counts.len() <= 16);
        // direct evaluation of (1 - p1)^m
        let direct = (1.0 - s.p1).powf(s.m);
        assert!((s.p_ex - direct).abs() / direct < 1e-12);
        assert!(s.p_ex > 4.0e-16 && s.p_ex < 5.5e-16);
    }

    #[test]
    fn dense_start_keeps_every_row() {
        let s = init_state(64, 1.0).unwrap();
        assert!((s.m - 64.0).abs() < 1e-12);
        assert!((s.weight_counts.iter().sum::<f64>() - s.m).abs() < 1e-9);
    }

    #[test]
    fn empty_state_always_excludes() {
        let s = DofRecursionState::with_counts(5, 0.0, vec![0.0, 0.0], 1.0);
        assert_eq!(s.p_ex, 1.0);
        let t = step(&s, 10);
        assert_eq!(t.m, 0.0);
        assert_eq!(t.p_ex, 1.0);
        assert_eq!(t.n_ex, 3.0);
    }

    #[test]
    fn weight_mass_is_conserved() {
        for n in [8usize, 16, 64, 128] {
            let p = predict_dof(n, 1.0 / n as f64).unwrap();
            assert_eq!(p.trajectory.len(), n);
            for s in &p.trajectory {
                assert!(
                    (s.weight_counts.iter().sum::<f64>() - s.m).abs() < 1e-6,
                    "n={n} step={}",
                    s.step
                );
            }
            assert_eq!(p.n_d, n as f64 - p.n_ex);
        }
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let p = predict_dof(4, 0.25).unwrap();
        let mut buf = Vec::new();
        p.write_trajectory_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,m,n1,p1,p_ex\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
