//! Acceptance suite. Runs every criterion at its stated tolerance and prints one
//! `[PASS]`/`[FAIL]` line per criterion, with the individual checks indented
//! below it. Exits nonzero if any check fails.

use std::collections::HashSet;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srbp::channel::{
    sample_bernoulli_mask, synthesize_physical_channel, virtual_decompose, MaskMatrix, PathSet,
};
use srbp::dof::predict_dof;
use srbp::montecarlo::{
    run_block_census, run_capacity_sweep, run_dof_trials, AggregateReport, ExperimentConfig,
};
use srbp::spectral::{rate, squared_singular_values, waterfill, GainProfile};
use srbp::srbp::{
    block_triangulate, initialize, lower_triangulate, Action, BlockDecomposition,
    TriangulationResult,
};

const SEED: u64 = 1;
const TRIALS: usize = 10_000;

type CriterionFn = fn() -> Criterion;
type Runner = fn(&ExperimentConfig) -> srbp::Result<AggregateReport>;

struct Check {
    label: String,
    ok: bool,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Criterion {
    fn check(&mut self, ok: bool, label: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            ok,
        });
    }

    fn within(&mut self, name: &str, got: f64, target: f64, rel: f64) {
        let ok = (got - target).abs() <= rel * target.abs();
        self.check(
            ok,
            format!("{name}: {got:.4} vs {target} ±{}%", rel * 100.0),
        );
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "[PASS]"
    } else {
        "[FAIL]"
    }
}

fn table_ii() -> Criterion {
    let ns = [8usize, 16, 32, 64, 128];
    let srbp_ref = [4.43, 8.74, 17.39, 34.59, 69.83];
    let svd_ref = [4.49, 8.79, 17.44, 34.64, 69.88];
    let analytic_ref = [4.59, 8.95, 17.56, 34.8, 69.99];
    let mut c = Criterion::default();
    for (k, &n) in ns.iter().enumerate() {
        let cfg = ExperimentConfig::new(n).with_trials(TRIALS).with_seed(SEED);
        let report = run_dof_trials(&cfg).expect("dof trials");
        c.within(
            &format!("N={n} SRBP DoF"),
            report.mean("n_d"),
            srbp_ref[k],
            0.03,
        );
        c.within(
            &format!("N={n} SVD DoF"),
            report.mean("svd_rank"),
            svd_ref[k],
            0.03,
        );
        let analytic = predict_dof(n, 1.0 / n as f64).expect("prediction").n_d;
        c.within(
            &format!("N={n} analytical DoF"),
            analytic,
            analytic_ref[k],
            0.02,
        );
    }
    c
}

fn table_iii() -> Criterion {
    let cfg = ExperimentConfig::new(64)
        .with_trials(TRIALS)
        .with_seed(SEED);
    let report = run_block_census(&cfg).expect("census");
    let census = &report.census;
    let mut c = Criterion::default();
    c.within("single-entry blocks", census.single.average, 24.65, 0.05);
    c.within("row-vector blocks", census.row_vector.average, 4.76, 0.10);
    c.within(
        "column-vector blocks",
        census.column_vector.average,
        5.17,
        0.10,
    );
    let share = census.single_or_vector_percentage();
    c.check(
        share > 99.0,
        format!("single + vector share: {share:.3}% > 99%"),
    );
    c.within("other blocks", census.other.average, 0.42, 0.25);
    c
}

fn side_statistics() -> Criterion {
    let cfg = ExperimentConfig::new(64)
        .with_trials(TRIALS)
        .with_seed(SEED);
    let report = run_dof_trials(&cfg).expect("dof trials");
    let mut c = Criterion::default();
    c.within("active exclusions", report.mean("n_ex_active"), 5.8, 0.15);
    c.within("N_bar - N_d", report.mean("n_bar_minus_n_d"), 5.4, 0.15);
    c
}

fn capacity_closeness() -> Criterion {
    let mut c = Criterion::default();
    for n in [32usize, 64] {
        let cfg = ExperimentConfig::new(n).with_trials(TRIALS).with_seed(SEED);
        let report = run_capacity_sweep(&cfg).expect("sweep");
        c.check(
            report.achievability_violations == 0,
            format!(
                "N={n}: C_srbp <= C_svd + 1e-9 on every realization ({} violations)",
                report.achievability_violations
            ),
        );
        let ratios: Vec<(f64, f64)> = report
            .curves
            .iter()
            .map(|p| (p.snr_db, p.ratio().expect("ratio")))
            .collect();
        for &(snr, r) in &ratios {
            c.check(
                r >= 0.85,
                format!("N={n} {snr:>4} dB: ratio {r:.4} >= 0.85"),
            );
        }
        let monotone = ratios.windows(2).all(|w| w[1].1 >= w[0].1);
        c.check(
            monotone,
            format!("N={n}: ratio nondecreasing over the SNR grid"),
        );

        // unit energy per physical antenna pair instead of per virtual entry
        let physical = cfg.clone().with_entry_variance(n as f64);
        let report = run_capacity_sweep(&physical).expect("sweep");
        let worst = report
            .curves
            .iter()
            .filter_map(|p| p.ratio())
            .fold(f64::INFINITY, f64::min);
        c.notes.push(format!(
            "N={n} with entry variance 1/delta: smallest ratio {worst:.4}"
        ));
    }
    c
}

/// Independent replay of a triangulation on a dense copy of the mask.
fn replay_ok(mask: &MaskMatrix, tri: &TriangulationResult) -> Result<(), String> {
    let (nr, nc) = (mask.n_rows(), mask.n_cols());
    let mut rows: Vec<bool> = (0..nr).map(|i| (0..nc).any(|j| mask.get(i, j))).collect();
    let mut cols = vec![true; nc];
    let weight = |i: usize, cols: &[bool]| (0..nc).filter(|&j| cols[j] && mask.get(i, j)).count();
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for a in &tri.trace().actions {
        let w1: Vec<usize> = (0..nr)
            .filter(|&i| rows[i] && weight(i, &cols) == 1)
            .collect();
        let col = match *a {
            Action::Pair { row, col, .. } => {
                if !w1.contains(&row) || !mask.get(row, col) || !cols[col] {
                    return Err(format!("pair ({row},{col}) is not a weight-1 row entry"));
                }
                rows[row] = false;
                pairs.push((row, col));
                col
            }
            Action::Exclude { col, .. } => {
                if !w1.is_empty() || !cols[col] {
                    return Err(format!(
                        "exclusion of column {col} while a weight-1 row exists"
                    ));
                }
                excluded.push(col);
                col
            }
        };
        cols[col] = false;
        for (i, alive) in rows.iter_mut().enumerate() {
            if *alive && weight(i, &cols) == 0 {
                *alive = false;
            }
        }
    }
    if rows.iter().any(|&r| r) {
        return Err("rows left after the trace".into());
    }
    if pairs != tri.pairs() || excluded != tri.excluded() {
        return Err("replayed pairs or exclusions differ".into());
    }
    // A = paired rows x paired columns, lower triangular with unit diagonal
    for (t, &(r, _)) in pairs.iter().enumerate() {
        for (s, &(_, col)) in pairs.iter().enumerate() {
            if (s == t) != mask.get(r, col) && s >= t {
                return Err(format!("A entry ({t},{s}) breaks lower-triangular form"));
            }
        }
    }
    let residual = cols.iter().filter(|&&c| c).count();
    if tri.n_d() + tri.n_ex_active() + tri.n_residual() != nc || residual != tri.n_residual() {
        return Err("accounting identity fails".into());
    }
    Ok(())
}

fn blocks_ok(
    mask: &MaskMatrix,
    tri: &TriangulationResult,
    d: &BlockDecomposition,
) -> Result<(), String> {
    let blocks = d.blocks();
    if blocks.len() != tri.n_d() {
        return Err("one block per beam pair expected".into());
    }
    for (b, &(r, c)) in blocks.iter().zip(tri.pairs()) {
        if b.rows[0] != r || b.cols[0] != c {
            return Err("block does not start at its beam pair".into());
        }
    }
    let rows = d.row_order();
    let cols = d.col_order();
    let live: HashSet<usize> = (0..mask.n_rows())
        .filter(|&i| mask.row_weight(i) > 0)
        .collect();
    if rows.len() != live.len() || rows.iter().copied().collect::<HashSet<_>>() != live {
        return Err("block rows do not partition the live rows".into());
    }
    if cols.len() != mask.n_cols()
        || cols.iter().copied().collect::<HashSet<_>>().len() != mask.n_cols()
    {
        return Err("block columns do not partition the columns".into());
    }
    // entry conservation through the permutation
    let permuted = d.permuted_mask();
    if permuted.nnz() != mask.nnz() || tri.permuted_mask(mask).nnz() != mask.nnz() {
        return Err("permutation lost or created entries".into());
    }
    for (i, bi) in blocks.iter().enumerate() {
        for bj in &blocks[i + 1..] {
            for &r in &bi.rows {
                if bj.cols.iter().any(|&c| mask.get(r, c)) {
                    return Err(format!("nonzero above the block diagonal in row {r}"));
                }
            }
        }
    }
    Ok(())
}

fn structural_invariants() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let masks = 100_000;
    let mut failures = Vec::new();
    for k in 0..masks {
        let n = rng.random_range(2..=16usize);
        let delta = if k % 2 == 0 {
            1.0 / n as f64
        } else {
            rng.random_range(0.02..0.8)
        };
        let mask = sample_bernoulli_mask(n, n, delta, &mut rng).expect("mask");
        let tri = lower_triangulate(initialize(&mask), &mut rng);
        let outcome = replay_ok(&mask, &tri)
            .and_then(|_| block_triangulate(&tri, &mask).map_err(|e| e.to_string()))
            .and_then(|d| blocks_ok(&mask, &tri, &d));
        if let Err(e) = outcome {
            failures.push(format!("mask {k}: {e}"));
        }
    }
    let mut c = Criterion::default();
    c.check(
        failures.is_empty(),
        format!(
            "{masks} random masks, N in 2..=16: {} violations",
            failures.len()
        ),
    );
    for f in failures.iter().take(5) {
        c.check(false, f.clone());
    }
    c
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest number of ones placeable on distinct rows and columns, by brute force.
fn brute_force_rank(mask: &MaskMatrix) -> usize {
    let n = mask.n_rows();
    permutations(n)
        .iter()
        .map(|p| (0..n).filter(|&i| mask.get(i, p[i])).count())
        .max()
        .unwrap_or(0)
}

fn small_instance_oracle() -> Criterion {
    let mut bound_failures = 0;
    let mut equality_failures = 0;
    let mut without_exclusion = 0;
    for bits in 0u32..512 {
        let mask = MaskMatrix::from_fn(3, 3, |i, j| bits >> (3 * i + j) & 1 == 1);
        let rank = brute_force_rank(&mask);
        for seed in 0..8 {
            let tri = lower_triangulate(initialize(&mask), &mut ChaCha8Rng::seed_from_u64(seed));
            if tri.n_d() > rank {
                bound_failures += 1;
            }
            if tri.n_ex_active() == 0 {
                without_exclusion += 1;
                if tri.n_d() != rank {
                    equality_failures += 1;
                }
            }
        }
    }
    let mut c = Criterion::default();
    c.check(
        bound_failures == 0,
        format!("512 masks x 8 seeds: n_d <= structural rank ({bound_failures} violations)"),
    );
    c.check(
        equality_failures == 0,
        format!("{without_exclusion} exclusion-free runs: n_d = structural rank ({equality_failures} violations)"),
    );
    c
}

fn numerical_checks() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let eps = 1e-4;
    let mut kkt_failures = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..=16usize);
        let gains: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    -rng.random::<f64>().ln() * 10f64.powf(rng.random_range(-1.0..1.0))
                }
            })
            .collect();
        if gains.iter().all(|&g| g == 0.0) {
            continue;
        }
        let rho = 10f64.powf(rng.random_range(-2.0..3.0));
        let alloc = waterfill(&GainProfile::new(gains.clone()).unwrap(), rho).expect("waterfill");
        let base = rate(&gains, &alloc.powers);
        let slack = 1e-12 * base.max(1.0);
        let active: Vec<usize> = (0..len).filter(|&i| alloc.powers[i] >= eps).collect();
        'outer: for &i in &active {
            for j in 0..len {
                if i == j || gains[j] == 0.0 {
                    continue;
                }
                let mut p = alloc.powers.clone();
                p[i] -= eps;
                p[j] += eps;
                if rate(&gains, &p) > base + slack {
                    kkt_failures += 1;
                    break 'outer;
                }
            }
        }
    }
    c.check(kkt_failures == 0, format!("10^4 gain profiles: no eps=1e-4 reallocation improves capacity ({kkt_failures} violations)"));

    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let n_t = rng.random_range(2..=32usize);
        let n_r = rng.random_range(2..=32usize);
        let paths = PathSet::random(rng.random_range(1..=8usize), &mut rng).expect("paths");
        let h = synthesize_physical_channel(&paths, n_t, n_r).expect("channel");
        let v = virtual_decompose(&h);
        let a = squared_singular_values(h.matrix());
        let b = squared_singular_values(&v.h_v);
        let smax = a.as_slice()[0].sqrt();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            worst = worst.max((x.sqrt() - y.sqrt()).abs() / smax);
        }
    }
    c.check(
        worst < 1e-9,
        format!(
            "10^3 synthesized channels: singular values of H and H_v agree to {worst:.2e} < 1e-9"
        ),
    );

    let n = 128;
    let masks = 2_000;
    let mut hist = vec![0usize; n + 1];
    for _ in 0..masks {
        let m = sample_bernoulli_mask(n, n, 1.0 / n as f64, &mut rng).expect("mask");
        for i in 0..n {
            hist[m.row_weight(i)] += 1;
        }
    }
    let total = (masks * n) as f64;
    let mut pmf = (-1f64).exp();
    let mut tv = 0.0;
    for (k, &count) in hist.iter().enumerate() {
        if k > 0 {
            pmf /= k as f64;
        }
        tv += (count as f64 / total - pmf).abs();
    }
    tv /= 2.0;
    c.check(
        tv < 0.02,
        format!("N=128 row weights vs Poisson(1): TV {tv:.4} < 0.02"),
    );
    c
}

fn determinism() -> Criterion {
    let mut c = Criterion::default();
    let runs: [(&str, Runner); 3] = [
        ("dof", run_dof_trials),
        ("block-census", run_block_census),
        ("capacity-sweep", run_capacity_sweep),
    ];
    for (name, run) in runs {
        let json: Vec<String> = [1usize, 4, 16]
            .iter()
            .map(|&t| {
                let cfg = ExperimentConfig::new(32)
                    .with_trials(500)
                    .with_seed(7)
                    .with_threads(t);
                run(&cfg).and_then(|r| r.to_json()).expect("report")
            })
            .collect();
        let again = run(&ExperimentConfig::new(32)
            .with_trials(500)
            .with_seed(7)
            .with_threads(4))
        .and_then(|r| r.to_json())
        .expect("report");
        let same = json.iter().all(|j| *j == json[0]) && again == json[0];
        c.check(
            same,
            format!("{name}: JSON byte-identical under 1, 4 and 16 threads and on repeat"),
        );
    }
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, CriterionFn); 8] = [
        ("DoF table reproduction", table_ii),
        ("block-size census", table_iii),
        ("exclusion statistics", side_statistics),
        ("capacity closeness", capacity_closeness),
        ("structural invariants", structural_invariants),
        ("small-instance oracle", small_instance_oracle),
        ("numerical checks", numerical_checks),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let c = run();
        all &= c.passed();
        println!("{} criterion {}: {name}", tag(c.passed()), k + 1);
        for check in &c.checks {
            println!("    {} {}", tag(check.ok), check.label);
        }
        for note in &c.notes {
            println!("    [NOTE] {note}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
