//! Physical multipath channels, their virtual angular representation, and the
//! Bernoulli-mask sparse channel model.
//!
//! Angles are normalized spatial frequencies in `[0, 1)`. The virtual grids are
//! `i / n` for `i = 0..n`, so the transform matrices are unitary DFT matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::{CMatrix, CVector, Complex};

/// Energy below this fraction of the mean entry energy counts as zero when a
/// mask is derived from a physical virtual channel.
pub const NEAR_ZERO_ENERGY_RATIO: f64 = 1e-6;

/// Array steering (or response) vector of an `n`-element ULA.
///
/// Entry `k` is `exp(-j 2π ω k) / √n`.
pub fn steering_vector(n: usize, omega: f64) -> Result<CVector> {
    if n == 0 {
        return Err(invalid("steering vector length must be at least 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CVector::from_fn(n, |k, _| {
        Complex::from_polar(scale, -2.0 * PI * omega * k as f64)
    }))
}

/// Unitary DFT matrix whose column `i` is the steering vector at grid angle `i / n`.
pub fn dft_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(invalid("DFT size must be at least 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |k, i| {
        // reduce the phase index mod n to keep the argument small
        let phase = ((k * i) % n) as f64 / n as f64;
        Complex::from_polar(scale, -2.0 * PI * phase)
    }))
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex,
    /// Angle of departure.
    pub aod: f64,
    /// Angle of arrival.
    pub aoa: f64,
}

/// A non-empty set of propagation paths with angles in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("path set must contain at least one path"));
        }
        for (i, p) in paths.iter().enumerate() {
            let in_range = |a: f64| (0.0..1.0).contains(&a);
            if !in_range(p.aod) || !in_range(p.aoa) {
                return Err(invalid(format!("path {i}: angles must lie in [0, 1)")));
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(invalid(format!("path {i}: gain is not finite")));
            }
        }
        Ok(Self { paths })
    }

    /// `count` paths with CN(0, 1/L) gains and uniform angles.
    pub fn random<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Self> {
        if count == 0 {
            return Err(invalid("path count must be at least 1"));
        }
        let variance = 1.0 / count as f64;
        let paths = (0..count)
            .map(|_| Path {
                gain: complex_gaussian(rng, variance),
                aod: rng.random::<f64>(),
                aoa: rng.random::<f64>(),
            })
            .collect();
        Self::new(paths)
    }

    /// Like [`PathSet::random`] but with angles snapped onto the virtual grids.
    pub fn random_on_grid<R: Rng + ?Sized>(
        count: usize,
        n_t: usize,
        n_r: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(invalid("array sizes must be at least 1"));
        }
        let mut set = Self::random(count, rng)?;
        for p in &mut set.paths {
            p.aod = (p.aod * n_t as f64).floor() / n_t as f64;
            p.aoa = (p.aoa * n_r as f64).floor() / n_r as f64;
        }
        Ok(set)
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Physical `n_r × n_t` channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalChannel {
    matrix: CMatrix,
}

impl PhysicalChannel {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(invalid("channel dimensions must be positive"));
        }
        if matrix
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_t(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `H = √(N_r N_t) Σ g a_r(ω_r) a_t(ω_t)^H`.
pub fn synthesize_physical_channel(
    paths: &PathSet,
    n_t: usize,
    n_r: usize,
) -> Result<PhysicalChannel> {
    if paths.is_empty() {
        return Err(invalid("path set is empty"));
    }
    if n_t == 0 || n_r == 0 {
        return Err(invalid("array sizes must be at least 1"));
    }
    let scale = ((n_r * n_t) as f64).sqrt();
    let mut h = CMatrix::zeros(n_r, n_t);
    for p in paths.paths() {
        let a_r = steering_vector(n_r, p.aoa)?;
        let a_t = steering_vector(n_t, p.aod)?;
        h += (&a_r * a_t.adjoint()) * (p.gain * scale);
    }
    PhysicalChannel::new(h)
}

/// Angular-domain representation `H_v = A_r^H H A_t`.
#[derive(Debug, Clone)]
pub struct VirtualChannel {
    pub h_v: CMatrix,
    pub a_r: CMatrix,
    pub a_t: CMatrix,
}

impl VirtualChannel {
    /// `A_r H_v A_t^H`.
    pub fn reconstruct(&self) -> CMatrix {
        &self.a_r * &self.h_v * self.a_t.adjoint()
    }

    /// Virtual receive grid `i / N_r`.
    pub fn rx_grid(&self) -> Vec<f64> {
        let n = self.a_r.nrows();
        (0..n).map(|i| i as f64 / n as f64).collect()
    }

    /// Virtual transmit grid `j / N_t`.
    pub fn tx_grid(&self) -> Vec<f64> {
        let n = self.a_t.nrows();
        (0..n).map(|j| j as f64 / n as f64).collect()
    }

    /// Binary pattern of non-negligible virtual entries.
    ///
    /// An entry is zero when its energy is below [`NEAR_ZERO_ENERGY_RATIO`]
    /// times the mean entry energy.
    pub fn significant_mask(&self) -> MaskMatrix {
        let n = self.h_v.len() as f64;
        let mean = self.h_v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let threshold = NEAR_ZERO_ENERGY_RATIO * mean;
        MaskMatrix::from_fn(self.h_v.nrows(), self.h_v.ncols(), |i, j| {
            mean > 0.0 && self.h_v[(i, j)].norm_sqr() >= threshold
        })
    }
}

pub fn virtual_decompose(h: &PhysicalChannel) -> VirtualChannel {
    // dimensions are positive by construction of PhysicalChannel
    let a_r = dft_matrix(h.n_r()).expect("n_r >= 1");
    let a_t = dft_matrix(h.n_t()).expect("n_t >= 1");
    let h_v = a_r.adjoint() * h.matrix() * &a_t;
    VirtualChannel { h_v, a_r, a_t }
}

/// Binary sparsity pattern of a virtual channel, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskMatrix {
    n_rows: usize,
    n_cols: usize,
    bits: Vec<bool>,
    nnz: usize,
}

impl MaskMatrix {
    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                bits.push(f(i, j));
            }
        }
        let nnz = bits.iter().filter(|&&b| b).count();
        Self {
            n_rows,
            n_cols,
            bits,
            nnz,
        }
    }

    /// Builds a mask from equal-length rows.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != n_cols) {
            return Err(invalid(format!("row {i} has a different length")));
        }
        Ok(Self::from_fn(rows.len(), n_cols, |i, j| {
            rows[i].as_ref()[j]
        }))
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_fn(n_rows, n_cols, |_, _| false)
    }

    pub fn ones(n_rows: usize, n_cols: usize) -> Self {
        Self::from_fn(n_rows, n_cols, |_, _| true)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i == j)
    }

    /// Mask of the permutation matrix with a one at `(i, perm[i])`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        Self::from_fn(n, n, |i, j| perm[i] == j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n_cols + j]
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Column indices of the ones in row `i`.
    pub fn row_support(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(j, _)| j)
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    pub fn col_weight(&self, j: usize) -> usize {
        (0..self.n_rows).filter(|&i| self.get(i, j)).count()
    }

    pub fn zero_columns(&self) -> usize {
        (0..self.n_cols)
            .filter(|&j| self.col_weight(j) == 0)
            .count()
    }

    pub fn zero_rows(&self) -> usize {
        (0..self.n_rows)
            .filter(|&i| self.row_weight(i) == 0)
            .count()
    }
}

/// Text grid of `0`/`1`, one row per line.
impl fmt::Display for MaskMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_rows {
            for &b in self.row(i) {
                f.write_str(if b { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parses lines of `0`/`1` characters with equal lengths and no separators.
/// Trailing blank lines are ignored; line numbers in errors are 1-based.
impl FromStr for MaskMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lines: Vec<&str> = s.lines().map(|l| l.trim_end_matches('\r')).collect();
        let used = lines
            .iter()
            .rposition(|l| !l.is_empty())
            .map_or(0, |p| p + 1);
        if used == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "mask is empty".into(),
            });
        }
        let mut rows = Vec::with_capacity(used);
        for (idx, line) in lines[..used].iter().enumerate() {
            let line_no = idx + 1;
            let mut row = Vec::with_capacity(line.len());
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!(
                                "unexpected character {other:?} at column {}",
                                col + 1
                            ),
                        })
                    }
                }
            }
            if row.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty row".into(),
                });
            }
            if let Some(first) = rows.first().map(|r: &Vec<bool>| r.len()) {
                if row.len() != first {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("row has {} entries, expected {first}", row.len()),
                    });
                }
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Bernoulli parameter `δ` together with the mean row weight `β = N δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityConfig {
    pub delta: f64,
    pub beta: f64,
}

impl SparsityConfig {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            delta,
            beta: n as f64 * delta,
        })
    }

    /// `δ = 1 / N`.
    pub fn typical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("antenna count must be at least 1"));
        }
        Self::new(n, 1.0 / n as f64)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
    }
}

/// I.i.d. Bernoulli(`delta`) mask, drawn row-major.
pub fn sample_bernoulli_mask<R: Rng + ?Sized>(
    n_r: usize,
    n_t: usize,
    delta: f64,
    rng: &mut R,
) -> Result<MaskMatrix> {
    check_delta(delta)?;
    Ok(MaskMatrix::from_fn(n_r, n_t, |_, _| {
        rng.random::<f64>() < delta
    }))
}

/// Masked i.i.d. Gaussian virtual channel `M ⊙ H_iid`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVirtualChannel {
    values: CMatrix,
    mask: MaskMatrix,
}

impl SparseVirtualChannel {
    /// Pairs explicit values with a mask. Masked-out entries must be exactly zero.
    pub fn new(values: CMatrix, mask: MaskMatrix) -> Result<Self> {
        if values.nrows() != mask.n_rows() || values.ncols() != mask.n_cols() {
            return Err(invalid("values and mask dimensions differ"));
        }
        for i in 0..mask.n_rows() {
            for j in 0..mask.n_cols() {
                if !mask.get(i, j) && values[(i, j)] != Complex::new(0.0, 0.0) {
                    return Err(Error::PatternMismatch);
                }
            }
        }
        Ok(Self { values, mask })
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn mask(&self) -> &MaskMatrix {
        &self.mask
    }
}

/// Fills every one of `mask` with a unit-variance complex Gaussian, row-major.
pub fn apply_mask<R: Rng + ?Sized>(mask: &MaskMatrix, rng: &mut R) -> SparseVirtualChannel {
    let mut values = CMatrix::zeros(mask.n_rows(), mask.n_cols());
    for i in 0..mask.n_rows() {
        for j in mask.row_support(i) {
            values[(i, j)] = complex_gaussian(rng, 1.0);
        }
    }
    SparseVirtualChannel {
        values,
        mask: mask.clone(),
    }
}
