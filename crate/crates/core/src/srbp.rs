//! Semi-random beam pairing: structure discovery on the binary mask.
//!
//! Three phases:
//!
//! 1. [`initialize`] drops the all-zero rows of the mask.
//! 2. [`lower_triangulate`] repeatedly pairs a weight-1 row with the column of
//!    its single one (a beam pair), or, when no weight-1 row is left, excludes
//!    a random column. Each step removes one column and every row that became
//!    all-zero. The loop ends when no rows remain.
//! 3. [`block_triangulate`] attaches excluded columns and unpaired rows to the
//!    paired diagonal so that the permuted mask is block lower-triangular.
//!
//! All indices stored here refer to the original mask coordinates (0-based).
//! The text form of a trace uses 1-based indices.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{MaskMatrix, SparseVirtualChannel};
use crate::error::{invalid, Error, Result};
use crate::CMatrix;

/// The mask with its all-zero rows removed, ready for peeling.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingMatrix {
    n_rows: usize,
    n_cols: usize,
    /// original row index of each surviving row
    row_index: Vec<usize>,
    /// original column indices of the ones in each surviving row
    supports: Vec<Vec<usize>>,
}

impl OperatingMatrix {
    /// Number of surviving rows (`N̄`).
    pub fn n_bar(&self) -> usize {
        self.row_index.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Rows of the original mask.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn row_index(&self) -> &[usize] {
        &self.row_index
    }

    pub fn row_support(&self, r: usize) -> &[usize] {
        &self.supports[r]
    }

    /// Dense view of the operating matrix.
    pub fn to_mask(&self) -> MaskMatrix {
        MaskMatrix::from_fn(self.n_bar(), self.n_cols, |r, c| {
            self.supports[r].contains(&c)
        })
    }
}

pub fn initialize(mask: &MaskMatrix) -> OperatingMatrix {
    let mut row_index = Vec::new();
    let mut supports = Vec::new();
    for i in 0..mask.n_rows() {
        let s: Vec<usize> = mask.row_support(i).collect();
        if !s.is_empty() {
            row_index.push(i);
            supports.push(s);
        }
    }
    OperatingMatrix {
        n_rows: mask.n_rows(),
        n_cols: mask.n_cols(),
        row_index,
        supports,
    }
}

/// One peeling step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Pair { step: usize, row: usize, col: usize },
    Exclude { step: usize, col: usize },
}

impl Action {
    pub fn step(&self) -> usize {
        match *self {
            Action::Pair { step, .. } | Action::Exclude { step, .. } => step,
        }
    }
}

/// `ℓ:pair(i,j)` or `ℓ:exclude(k)`, indices 1-based.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Action::Pair { step, row, col } => write!(f, "{step}:pair({},{})", row + 1, col + 1),
            Action::Exclude { step, col } => write!(f, "{step}:exclude({})", col + 1),
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("malformed trace action {s:?}"));
        let (step, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let step: usize = step.parse().map_err(|_| bad())?;
        let one_based = |t: &str| -> Result<usize> {
            match t.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(bad()),
            }
        };
        if let Some(args) = rest.strip_prefix("pair(").and_then(|r| r.strip_suffix(')')) {
            let (i, j) = args.split_once(',').ok_or_else(bad)?;
            Ok(Action::Pair {
                step,
                row: one_based(i)?,
                col: one_based(j)?,
            })
        } else if let Some(arg) = rest
            .strip_prefix("exclude(")
            .and_then(|r| r.strip_suffix(')'))
        {
            Ok(Action::Exclude {
                step,
                col: one_based(arg)?,
            })
        } else {
            Err(bad())
        }
    }
}

/// Row/column orders of the triangulated mask plus the per-step action log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationTrace {
    /// Surviving rows: paired rows in pairing order, then the remaining rows in
    /// the order they became all-zero.
    pub row_order: Vec<usize>,
    /// Paired columns in pairing order, then excluded columns in exclusion
    /// order, then residual columns.
    pub col_order: Vec<usize>,
    pub actions: Vec<Action>,
}

impl PermutationTrace {
    /// One action per line.
    pub fn to_text(&self) -> String {
        self.actions.iter().map(|a| format!("{a}\n")).collect()
    }

    pub fn parse_actions(text: &str) -> Result<Vec<Action>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect()
    }
}

/// Output of [`lower_triangulate`].
///
/// Regions of the permuted mask: `A` is paired rows × paired columns (lower
/// triangular with unit diagonal), `B` is all rows × excluded columns, `C` is
/// unpaired rows × paired columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangulationResult {
    n_rows: usize,
    n_cols: usize,
    n_bar: usize,
    pairs: Vec<(usize, usize)>,
    excluded: Vec<usize>,
    residual: Vec<usize>,
    unpaired_rows: Vec<usize>,
    trace: PermutationTrace,
}

impl TriangulationResult {
    /// Number of beam pairs (`N_d`).
    pub fn n_d(&self) -> usize {
        self.pairs.len()
    }

    /// Exclusions performed while rows remained.
    pub fn n_ex_active(&self) -> usize {
        self.excluded.len()
    }

    /// Columns never processed because the rows ran out.
    pub fn n_residual(&self) -> usize {
        self.residual.len()
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `(row, col)` beam pairs in pairing order: the `A` diagonal.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Excluded columns in exclusion order: the columns of `B`.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn residual(&self) -> &[usize] {
        &self.residual
    }

    /// Rows that were removed as all-zero: the rows of `C`.
    pub fn unpaired_rows(&self) -> &[usize] {
        &self.unpaired_rows
    }

    pub fn trace(&self) -> &PermutationTrace {
        &self.trace
    }

    /// Checks the structural guarantees against the mask this result came from:
    /// orders are bijections, every pair was a weight-1 row when taken (replay),
    /// `A` is lower-triangular with unit diagonal, and the column accounting holds.
    pub fn verify(&self, mask: &MaskMatrix) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolation(m));
        if mask.n_rows() != self.n_rows || mask.n_cols() != self.n_cols {
            return fail("mask dimensions differ from the triangulation".into());
        }
        if self.n_d() + self.n_ex_active() + self.n_residual() != self.n_cols {
            return fail("n_d + n_ex_active + n_residual != N".into());
        }
        let live_rows: Vec<usize> = (0..mask.n_rows())
            .filter(|&i| mask.row_weight(i) > 0)
            .collect();
        if !is_permutation_of(&self.trace.row_order, &live_rows) {
            return fail("row order is not a permutation of the surviving rows".into());
        }
        let all_cols: Vec<usize> = (0..self.n_cols).collect();
        if !is_permutation_of(&self.trace.col_order, &all_cols) {
            return fail("column order is not a permutation of the columns".into());
        }
        if self.n_residual() != mask.zero_columns() {
            return fail("residual columns differ from the all-zero columns".into());
        }

        // replay
        let mut row_alive: Vec<bool> = (0..mask.n_rows()).map(|i| mask.row_weight(i) > 0).collect();
        let mut col_alive = vec![true; self.n_cols];
        for (k, action) in self.trace.actions.iter().enumerate() {
            if action.step() != k + 1 {
                return fail(format!("action {k} carries step {}", action.step()));
            }
            let removed = match *action {
                Action::Pair { row, col, .. } => {
                    if !row_alive[row] || !col_alive[col] || !mask.get(row, col) {
                        return fail(format!("step {}: pair on a dead or zero entry", k + 1));
                    }
                    let weight = mask.row_support(row).filter(|&c| col_alive[c]).count();
                    if weight != 1 {
                        return fail(format!("step {}: paired row has weight {weight}", k + 1));
                    }
                    row_alive[row] = false;
                    col
                }
                Action::Exclude { col, .. } => {
                    if !col_alive[col] {
                        return fail(format!("step {}: excluded a dead column", k + 1));
                    }
                    let any_w1 = (0..mask.n_rows()).any(|r| {
                        row_alive[r] && mask.row_support(r).filter(|&c| col_alive[c]).count() == 1
                    });
                    if any_w1 {
                        return fail(format!(
                            "step {}: excluded while a weight-1 row existed",
                            k + 1
                        ));
                    }
                    col
                }
            };
            col_alive[removed] = false;
            for (r, alive) in row_alive.iter_mut().enumerate() {
                if *alive && !mask.row_support(r).any(|c| col_alive[c]) {
                    *alive = false;
                }
            }
        }
        if row_alive.iter().any(|&a| a) {
            return fail("rows remain after the last action".into());
        }

        // A region
        for (t, &(row, _)) in self.pairs.iter().enumerate() {
            for (s, &(_, col)) in self.pairs.iter().enumerate() {
                let bit = mask.get(row, col);
                if s == t && !bit {
                    return fail(format!("A diagonal entry {t} is zero"));
                }
                if s > t && bit {
                    return fail(format!("A has a one above the diagonal at ({t},{s})"));
                }
            }
        }
        Ok(())
    }

    /// The surviving mask permuted into `row_order × col_order`.
    pub fn permuted_mask(&self, mask: &MaskMatrix) -> MaskMatrix {
        let (r, c) = (&self.trace.row_order, &self.trace.col_order);
        MaskMatrix::from_fn(r.len(), c.len(), |i, j| mask.get(r[i], c[j]))
    }
}

fn is_permutation_of(order: &[usize], set: &[usize]) -> bool {
    let mut a = order.to_vec();
    a.sort_unstable();
    let mut b = set.to_vec();
    b.sort_unstable();
    a == b
}

/// Peels the operating matrix into beam pairs.
///
/// When several weight-1 rows exist the one with the smallest index is paired.
/// When none exists a column is excluded, chosen uniformly among the live
/// columns that still hold a one.
pub fn lower_triangulate<R: Rng + ?Sized>(op: OperatingMatrix, rng: &mut R) -> TriangulationResult {
    let n_bar = op.n_bar();
    let n_cols = op.n_cols;
    let mut weight: Vec<usize> = op.supports.iter().map(Vec::len).collect();
    let mut row_alive = vec![true; n_bar];
    let mut col_alive = vec![true; n_cols];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    for (r, s) in op.supports.iter().enumerate() {
        for &c in s {
            col_rows[c].push(r);
        }
    }
    // live rows holding a one in each column
    let mut col_weight: Vec<usize> = col_rows.iter().map(Vec::len).collect();

    let mut live = n_bar;
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    let mut unpaired = Vec::new();
    let mut actions = Vec::new();
    let mut step = 0;

    while live > 0 {
        step += 1;
        let removed_col = match (0..n_bar).find(|&r| row_alive[r] && weight[r] == 1) {
            Some(r) => {
                let col = op.supports[r]
                    .iter()
                    .copied()
                    .find(|&c| col_alive[c])
                    .expect("weight-1 row has a live column");
                row_alive[r] = false;
                live -= 1;
                for &c in &op.supports[r] {
                    if col_alive[c] {
                        col_weight[c] -= 1;
                    }
                }
                pairs.push((op.row_index[r], col));
                actions.push(Action::Pair {
                    step,
                    row: op.row_index[r],
                    col,
                });
                col
            }
            None => {
                let candidates: Vec<usize> = (0..n_cols)
                    .filter(|&c| col_alive[c] && col_weight[c] > 0)
                    .collect();
                let col = candidates[rng.random_range(0..candidates.len())];
                excluded.push(col);
                actions.push(Action::Exclude { step, col });
                col
            }
        };

        col_alive[removed_col] = false;
        for &r in &col_rows[removed_col] {
            if !row_alive[r] {
                continue;
            }
            weight[r] -= 1;
            if weight[r] == 0 {
                row_alive[r] = false;
                live -= 1;
                unpaired.push(op.row_index[r]);
            }
        }
    }

    let residual: Vec<usize> = (0..n_cols).filter(|&c| col_alive[c]).collect();
    let row_order = pairs
        .iter()
        .map(|&(r, _)| r)
        .chain(unpaired.iter().copied())
        .collect();
    let col_order = pairs
        .iter()
        .map(|&(_, c)| c)
        .chain(excluded.iter().copied())
        .chain(residual.iter().copied())
        .collect();

    TriangulationResult {
        n_rows: op.n_rows,
        n_cols,
        n_bar,
        pairs,
        excluded,
        residual,
        unpaired_rows: unpaired,
        trace: PermutationTrace {
            row_order,
            col_order,
            actions,
        },
    }
}

/// Shape class of a diagonal block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockClass {
    /// 1 × 1
    Single,
    /// one row, several columns (absorbed excluded columns)
    RowVector,
    /// one column, several rows (absorbed unpaired rows)
    ColumnVector,
    Other,
}

/// Index rectangle of one diagonal block. The first row and column are the
/// block's beam pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Block {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn class(&self) -> BlockClass {
        match self.shape() {
            (1, 1) => BlockClass::Single,
            (1, _) => BlockClass::RowVector,
            (_, 1) => BlockClass::ColumnVector,
            _ => BlockClass::Other,
        }
    }
}

/// Diagonal blocks of the block lower-triangular permuted mask.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    mask: MaskMatrix,
    blocks: Vec<Block>,
    unassigned_rows: Vec<usize>,
    unassigned_cols: Vec<usize>,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn mask(&self) -> &MaskMatrix {
        &self.mask
    }

    /// Surviving rows attached to no block.
    pub fn unassigned_rows(&self) -> &[usize] {
        &self.unassigned_rows
    }

    /// Excluded columns with no paired-row support, followed by the residual columns.
    pub fn unassigned_cols(&self) -> &[usize] {
        &self.unassigned_cols
    }

    /// Block rows in order, then unassigned rows.
    pub fn row_order(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|b| b.rows.iter().copied())
            .chain(self.unassigned_rows.iter().copied())
            .collect()
    }

    /// Block columns in order, then unassigned columns.
    pub fn col_order(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|b| b.cols.iter().copied())
            .chain(self.unassigned_cols.iter().copied())
            .collect()
    }

    pub fn permuted_mask(&self) -> MaskMatrix {
        let (r, c) = (self.row_order(), self.col_order());
        MaskMatrix::from_fn(r.len(), c.len(), |i, j| self.mask.get(r[i], c[j]))
    }

    /// Every one lying in block `i`'s rows and block `j`'s columns has `j <= i`.
    pub fn check_zero_upper(&self) -> Result<()> {
        let mut block_of_col = vec![None; self.mask.n_cols()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &c in &block.cols {
                block_of_col[c] = Some(b);
            }
        }
        for (i, block) in self.blocks.iter().enumerate() {
            for &r in &block.rows {
                for c in self.mask.row_support(r) {
                    if let Some(j) = block_of_col[c] {
                        if j > i {
                            return Err(Error::InvariantViolation(format!(
                                "one at ({r},{c}) lies above the block diagonal (block {i} row, block {j} column)"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Groups the triangulated mask into diagonal blocks.
///
/// Each excluded column joins the block of its topmost paired row holding a
/// one; columns with no such row stay unassigned. Then each unpaired row joins
/// the block of its rightmost one among the block columns, or stays unassigned.
pub fn block_triangulate(
    tri: &TriangulationResult,
    mask: &MaskMatrix,
) -> Result<BlockDecomposition> {
    if mask.n_rows() != tri.n_rows || mask.n_cols() != tri.n_cols {
        return Err(invalid("mask dimensions differ from the triangulation"));
    }
    let mut block_of_row = vec![None; mask.n_rows()];
    let mut blocks: Vec<Block> = tri
        .pairs
        .iter()
        .enumerate()
        .map(|(t, &(r, c))| {
            block_of_row[r] = Some(t);
            Block {
                rows: vec![r],
                cols: vec![c],
            }
        })
        .collect();

    let mut unassigned_cols = Vec::new();
    for &x in &tri.excluded {
        let top = (0..mask.n_rows())
            .filter(|&r| mask.get(r, x))
            .filter_map(|r| block_of_row[r])
            .min();
        match top {
            Some(t) => blocks[t].cols.push(x),
            None => unassigned_cols.push(x),
        }
    }
    unassigned_cols.extend_from_slice(&tri.residual);

    let mut block_of_col = vec![None; mask.n_cols()];
    for (b, block) in blocks.iter().enumerate() {
        for &c in &block.cols {
            block_of_col[c] = Some(b);
        }
    }
    let mut unassigned_rows = Vec::new();
    for &r in &tri.unpaired_rows {
        match mask.row_support(r).filter_map(|c| block_of_col[c]).max() {
            Some(b) => blocks[b].rows.push(r),
            None => unassigned_rows.push(r),
        }
    }

    let decomp = BlockDecomposition {
        mask: mask.clone(),
        blocks,
        unassigned_rows,
        unassigned_cols,
    };
    decomp.check_zero_upper()?;
    Ok(decomp)
}

/// Submatrices of the channel at each block's index rectangle.
pub fn extract_blocks(
    decomp: &BlockDecomposition,
    channel: &SparseVirtualChannel,
) -> Result<Vec<CMatrix>> {
    if channel.mask() != &decomp.mask {
        return Err(invalid("channel mask does not match the decomposition"));
    }
    let h = channel.values();
    Ok(decomp
        .blocks
        .iter()
        .map(|b| CMatrix::from_fn(b.rows.len(), b.cols.len(), |i, j| h[(b.rows[i], b.cols[j])]))
        .collect())
}

/// Largest block dimensions allowed after a triangulation: `(N̄ − N_d + 1) × (N_ex + 1)`.
pub fn block_size_bound(tri: &TriangulationResult) -> (usize, usize) {
    (tri.n_bar - tri.n_d() + 1, tri.n_ex_active() + 1)
}
