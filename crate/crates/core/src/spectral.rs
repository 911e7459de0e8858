//! Singular values, water-filling and capacity of the SVD and SRBP transceivers.
//!
//! Noise has unit variance, so the power budget `rho` is the total transmit SNR.
//! Capacities are in bits/s/Hz unless converted with [`CapacityResult::in_base`].

use serde::Serialize;

use crate::channel::SparseVirtualChannel;
use crate::error::{Error, Result};
use crate::CMatrix;

/// A squared singular value counts toward the rank when it exceeds this
/// fraction of the largest one.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Squared singular values (channel power gains), nonnegative and finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainProfile(Vec<f64>);

impl GainProfile {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidArgument(
                "gains must be finite and nonnegative".into(),
            ));
        }
        Ok(Self(gains))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Every gain multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|g| g * c).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of gains above [`RANK_THRESHOLD`] times the largest gain.
    pub fn effective_rank(&self) -> usize {
        let max = self.0.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return 0;
        }
        self.0.iter().filter(|&&g| g > RANK_THRESHOLD * max).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub budget: f64,
    pub water_level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Svd,
    Srbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LogBase {
    /// bits/s/Hz
    #[default]
    Two,
    /// nats/s/Hz
    E,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityResult {
    /// bits/s/Hz
    pub capacity: f64,
    pub allocation: PowerAllocation,
    pub gains: GainProfile,
    pub scheme: Scheme,
    /// Streams counted toward the DoF: the numerical rank for SVD, the block count for SRBP.
    pub dof: usize,
}

impl CapacityResult {
    pub fn in_base(&self, base: LogBase) -> f64 {
        match base {
            LogBase::Two => self.capacity,
            LogBase::E => self.capacity * std::f64::consts::LN_2,
        }
    }

    /// `Σ log₂(1 + ρ_i λ_i²)` recomputed from the stored allocation.
    pub fn recompute(&self) -> f64 {
        rate(self.gains.as_slice(), &self.allocation.powers)
    }
}

/// Sum rate in bits for the given gains and per-stream powers.
pub fn rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains
        .iter()
        .zip(powers)
        .map(|(g, p)| (p * g).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Descending squared singular values; length `min(m, n)`.
pub fn squared_singular_values(matrix: &CMatrix) -> GainProfile {
    let k = matrix.nrows().min(matrix.ncols());
    if k == 0 {
        return GainProfile(Vec::new());
    }
    let mut gains: Vec<f64> = if k == 1 {
        vec![matrix.iter().map(|z| z.norm_sqr()).sum()]
    } else {
        matrix.singular_values().iter().map(|s| s * s).collect()
    };
    gains.sort_by(|a, b| b.total_cmp(a));
    GainProfile(gains)
}

/// Largest squared singular value. Vectors take the closed form `‖v‖²`.
pub fn largest_squared_singular_value(matrix: &CMatrix) -> f64 {
    if matrix.nrows() == 1 || matrix.ncols() == 1 {
        matrix.iter().map(|z| z.norm_sqr()).sum()
    } else {
        squared_singular_values(matrix)
            .as_slice()
            .first()
            .copied()
            .unwrap_or(0.0)
    }
}

/// Drops all-zero rows and columns; the nonzero singular values are unchanged.
pub fn compact(matrix: &CMatrix) -> CMatrix {
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let rows: Vec<usize> = (0..matrix.nrows())
        .filter(|&i| matrix.row(i).iter().any(|z| *z != zero))
        .collect();
    let cols: Vec<usize> = (0..matrix.ncols())
        .filter(|&j| matrix.column(j).iter().any(|z| *z != zero))
        .collect();
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| matrix[(rows[i], cols[j])])
}

/// Exact water-filling: `ρ_i = max(0, μ − 1/λ_i²)`, `Σ ρ_i = ρ`.
///
/// Channels are activated in descending gain order and the water level is
/// solved in closed form for each candidate active set. Powers are returned
/// in the order of `gains`.
pub fn waterfill(gains: &GainProfile, rho: f64) -> Result<PowerAllocation> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "power budget must be positive, got {rho}"
        )));
    }
    let g = gains.as_slice();
    let mut order: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::NoUsableSubchannel);
    }
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));

    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        let inv = 1.0 / g[i];
        let candidate = (rho + inv_sum + inv) / (k + 1) as f64;
        if candidate <= inv {
            break;
        }
        inv_sum += inv;
        level = candidate;
        active = k + 1;
    }
    debug_assert!(active >= 1);

    let mut powers = vec![0.0; g.len()];
    for &i in &order[..active] {
        powers[i] = (level - 1.0 / g[i]).max(0.0);
    }
    Ok(PowerAllocation {
        powers,
        budget: rho,
        water_level: level,
    })
}

fn capacity_from_gains(gains: GainProfile, rho: f64, scheme: Scheme, dof: usize) -> CapacityResult {
    match waterfill(&gains, rho) {
        Ok(allocation) => {
            let capacity = rate(gains.as_slice(), &allocation.powers);
            CapacityResult {
                capacity,
                allocation,
                gains,
                scheme,
                dof,
            }
        }
        Err(_) => CapacityResult {
            capacity: 0.0,
            allocation: PowerAllocation {
                powers: vec![0.0; gains.len()],
                budget: rho,
                water_level: 0.0,
            },
            gains,
            scheme,
            dof,
        },
    }
}

/// SVD transceiver capacity from a precomputed gain profile.
pub fn svd_capacity_from_gains(gains: GainProfile, rho: f64) -> CapacityResult {
    let dof = gains.effective_rank();
    capacity_from_gains(gains, rho, Scheme::Svd, dof)
}

/// Capacity of the optimal SVD transceiver on an arbitrary matrix.
pub fn svd_capacity_matrix(matrix: &CMatrix, rho: f64) -> CapacityResult {
    svd_capacity_from_gains(squared_singular_values(&compact(matrix)), rho)
}

/// Capacity of the optimal SVD transceiver. A zero channel yields capacity 0.
pub fn svd_capacity(channel: &SparseVirtualChannel, rho: f64) -> CapacityResult {
    svd_capacity_matrix(channel.values(), rho)
}

/// Per-block gains used by the SRBP transceiver: the largest squared
/// singular value of each diagonal block.
pub fn block_gains(blocks: &[CMatrix]) -> GainProfile {
    GainProfile(blocks.iter().map(largest_squared_singular_value).collect())
}

/// SRBP capacity from a precomputed block gain profile.
pub fn srbp_capacity_from_gains(gains: GainProfile, rho: f64) -> CapacityResult {
    let dof = gains.len();
    capacity_from_gains(gains, rho, Scheme::Srbp, dof)
}

/// Capacity of the SRBP transceiver: one stream per diagonal block, water-filled.
pub fn srbp_capacity(blocks: &[CMatrix], rho: f64) -> CapacityResult {
    srbp_capacity_from_gains(block_gains(blocks), rho)
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex;

    fn gp(v: &[f64]) -> GainProfile {
        GainProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_gains() {
        let g = squared_singular_values(&CMatrix::identity(3, 3));
        for x in g.as_slice() {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_gains_sorted() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex::new(3.0, 0.0);
        m[(1, 1)] = Complex::new(0.0, 2.0);
        let g = squared_singular_values(&m);
        assert!((g.as_slice()[0] - 9.0).abs() < 1e-12);
        assert!((g.as_slice()[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gains_sum_to_frobenius() {
        let m = CMatrix::from_fn(5, 5, |i, j| {
            Complex::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64)
        });
        let sum: f64 = squared_singular_values(&m).as_slice().iter().sum();
        let fro = m.norm_squared();
        assert!((sum - fro).abs() / fro < 1e-10);
    }

    #[test]
    fn rectangular_gain_count() {
        let m = CMatrix::from_element(2, 5, Complex::new(1.0, 0.0));
        assert_eq!(squared_singular_values(&m).len(), 2);
        assert!((largest_squared_singular_value(&m) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn waterfill_symmetric() {
        let a = waterfill(&gp(&[1.0, 1.0]), 2.0).unwrap();
        assert!((a.powers[0] - 1.0).abs() < 1e-12 && (a.powers[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn waterfill_low_power_uses_best_channel() {
        let a = waterfill(&gp(&[4.0, 1.0]), 0.1).unwrap();
        assert!((a.powers[0] - 0.1).abs() < 1e-12);
        assert_eq!(a.powers[1], 0.0);
        assert!((a.water_level - 0.35).abs() < 1e-12);
    }

    #[test]
    fn waterfill_two_active() {
        let a = waterfill(&gp(&[4.0, 1.0]), 2.0).unwrap();
        assert!((a.powers[0] - 1.375).abs() < 1e-12);
        assert!((a.powers[1] - 0.625).abs() < 1e-12);
        assert!((a.water_level - 1.625).abs() < 1e-12);
    }

    #[test]
    fn waterfill_keeps_input_order_and_skips_zeros() {
        let a = waterfill(&gp(&[0.0, 1.0, 4.0]), 2.0).unwrap();
        assert_eq!(a.powers[0], 0.0);
        assert!((a.powers[1] - 0.625).abs() < 1e-12);
        assert!((a.powers[2] - 1.375).abs() < 1e-12);
    }

    #[test]
    fn waterfill_errors() {
        assert_eq!(
            waterfill(&gp(&[0.0, 0.0]), 1.0).unwrap_err(),
            Error::NoUsableSubchannel
        );
        assert_eq!(
            waterfill(&gp(&[]), 1.0).unwrap_err(),
            Error::NoUsableSubchannel
        );
        assert!(matches!(
            waterfill(&gp(&[1.0]), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(GainProfile::new(vec![-1.0]).is_err());
    }

    #[test]
    fn unit_scalar_channel_one_bit() {
        let c = svd_capacity_matrix(&CMatrix::identity(1, 1), 1.0);
        assert!((c.capacity - 1.0).abs() < 1e-12);
        assert_eq!(c.dof, 1);
        assert!((c.in_base(LogBase::E) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_zero_capacity() {
        let c = svd_capacity_matrix(&CMatrix::zeros(3, 3), 5.0);
        assert_eq!(c.capacity, 0.0);
        assert_eq!(c.dof, 0);
        assert!(c.allocation.powers.is_empty());
        assert_eq!(srbp_capacity(&[], 1.0).capacity, 0.0);
    }

    #[test]
    fn rank_one_block() {
        let block = CMatrix::from_element(2, 2, Complex::new(1.0, 0.0));
        let c = srbp_capacity(&[block], 1.0);
        assert!((c.gains.as_slice()[0] - 4.0).abs() < 1e-12);
        assert!((c.capacity - 5f64.log2()).abs() < 1e-12);
        assert!((c.recompute() - c.capacity).abs() < 1e-12);
    }

    #[test]
    fn compact_strips_zero_lines() {
        let mut m = CMatrix::zeros(3, 4);
        m[(2, 1)] = Complex::new(1.0, 1.0);
        let c = compact(&m);
        assert_eq!((c.nrows(), c.ncols()), (1, 1));
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(0.0) - 1.0).abs() < 1e-15);
    }
}
