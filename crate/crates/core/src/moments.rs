//! Raw moments of `(Y, X, Z)` triples and the correlations built from them.
//!
//! The partial correlation between a response `Y` and a feature `X` given a
//! conditional variable `Z` is a smooth function of nine raw moments
//! (`E[XY]`, `E[XZ]`, `E[YZ]`, `E[X]`, `E[Y]`, `E[Z]`, `E[X²]`, `E[Y²]`,
//! `E[Z²]`). Those moments are plain means, so they can be accumulated on
//! disjoint shards and merged by count-weighted averaging without loss.

use crate::error::{Error, Result, Variable};

/// Relative floor on a variance: `var(A) < VARIANCE_FLOOR * E[A²]` is degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Floor on `(1 − ρ²_XZ)(1 − ρ²_YZ)`, the squared partial-correlation denominator.
pub const DENOM_FLOOR: f64 = 1e-8;
/// Correlations are clamped to `[−1 + CLAMP_EPS, 1 − CLAMP_EPS]`.
pub const CLAMP_EPS: f64 = 1e-12;

/// Minimum number of observations for any correlation estimate.
pub const MIN_SAMPLES: usize = 3;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// The nine raw moments of one `(Y, X, Z)` triple plus the sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector {
    pub mean_xy: f64,
    pub mean_xz: f64,
    pub mean_yz: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub mean_xx: f64,
    pub mean_yy: f64,
    pub mean_zz: f64,
    pub count: u64,
}

/// Which pair of variables a marginal correlation is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    XY,
    XZ,
    YZ,
}

impl MomentVector {
    /// Moments in the order `E[XY], E[XZ], E[YZ], E[X], E[Y], E[Z], E[X²], E[Y²], E[Z²]`.
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.mean_xy,
            self.mean_xz,
            self.mean_yz,
            self.mean_x,
            self.mean_y,
            self.mean_z,
            self.mean_xx,
            self.mean_yy,
            self.mean_zz,
        ]
    }

    pub fn from_array(t: [f64; 9], count: u64) -> Self {
        MomentVector {
            mean_xy: t[0],
            mean_xz: t[1],
            mean_yz: t[2],
            mean_x: t[3],
            mean_y: t[4],
            mean_z: t[5],
            mean_xx: t[6],
            mean_yy: t[7],
            mean_zz: t[8],
            count,
        }
    }

    fn pair_moments(&self, pair: Pair) -> (f64, f64, f64, f64, f64, Variable, Variable) {
        match pair {
            Pair::XY => (
                self.mean_xy,
                self.mean_x,
                self.mean_y,
                self.mean_xx,
                self.mean_yy,
                Variable::Feature,
                Variable::Response,
            ),
            Pair::XZ => (
                self.mean_xz,
                self.mean_x,
                self.mean_z,
                self.mean_xx,
                self.mean_zz,
                Variable::Feature,
                Variable::Conditional,
            ),
            Pair::YZ => (
                self.mean_yz,
                self.mean_y,
                self.mean_z,
                self.mean_yy,
                self.mean_zz,
                Variable::Response,
                Variable::Conditional,
            ),
        }
    }
}

/// Borrowed view of one `(Y, X, Z)` sample of common length `n ≥ 3`.
#[derive(Debug, Clone, Copy)]
pub struct TripleSample<'a> {
    y: &'a [f64],
    x: &'a [f64],
    z: &'a [f64],
}

impl<'a> TripleSample<'a> {
    pub fn new(y: &'a [f64], x: &'a [f64], z: &'a [f64]) -> Result<Self> {
        if y.len() != x.len() || y.len() != z.len() {
            return Err(Error::ShapeMismatch(format!(
                "triple lengths differ: y={}, x={}, z={}",
                y.len(),
                x.len(),
                z.len()
            )));
        }
        if y.len() < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_SAMPLES,
                got: y.len(),
            });
        }
        if y.iter().chain(x).chain(z).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(TripleSample { y, x, z })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Compensated sums of the `(Y, Z)`-only products, shared by every feature of a shard.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ResponseSums {
    pub yz: f64,
    pub y: f64,
    pub z: f64,
    pub yy: f64,
    pub zz: f64,
    pub count: usize,
}

impl ResponseSums {
    pub(crate) fn accumulate(y: &[f64], z: &[f64]) -> Self {
        let mut acc = [CompensatedSum::default(); 5];
        for (&yi, &zi) in y.iter().zip(z) {
            acc[0].add(yi * zi);
            acc[1].add(yi);
            acc[2].add(zi);
            acc[3].add(yi * yi);
            acc[4].add(zi * zi);
        }
        ResponseSums {
            yz: acc[0].value(),
            y: acc[1].value(),
            z: acc[2].value(),
            yy: acc[3].value(),
            zz: acc[4].value(),
            count: y.len(),
        }
    }
}

/// Raw (unnormalized) sums of all nine products for one feature.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MomentSums {
    pub xy: f64,
    pub xz: f64,
    pub x: f64,
    pub xx: f64,
    pub shared: ResponseSums,
}

impl MomentSums {
    pub(crate) fn accumulate(shared: ResponseSums, y: &[f64], x: &[f64], z: &[f64]) -> Self {
        let mut acc = [CompensatedSum::default(); 4];
        for ((&yi, &xi), &zi) in y.iter().zip(x).zip(z) {
            acc[0].add(xi * yi);
            acc[1].add(xi * zi);
            acc[2].add(xi);
            acc[3].add(xi * xi);
        }
        MomentSums {
            xy: acc[0].value(),
            xz: acc[1].value(),
            x: acc[2].value(),
            xx: acc[3].value(),
            shared,
        }
    }

    pub(crate) fn to_moments(&self) -> MomentVector {
        let n = self.shared.count as f64;
        let s = &self.shared;
        MomentVector {
            mean_xy: self.xy / n,
            mean_xz: self.xz / n,
            mean_yz: s.yz / n,
            mean_x: self.x / n,
            mean_y: s.y / n,
            mean_z: s.z / n,
            mean_xx: self.xx / n,
            mean_yy: s.yy / n,
            mean_zz: s.zz / n,
            count: s.count as u64,
        }
    }

    /// Moments of the sample with one observation removed.
    #[inline]
    pub(crate) fn without_row(&self, y: f64, x: f64, z: f64) -> MomentVector {
        let s = &self.shared;
        let n = (s.count - 1) as f64;
        MomentVector {
            mean_xy: (self.xy - x * y) / n,
            mean_xz: (self.xz - x * z) / n,
            mean_yz: (s.yz - y * z) / n,
            mean_x: (self.x - x) / n,
            mean_y: (s.y - y) / n,
            mean_z: (s.z - z) / n,
            mean_xx: (self.xx - x * x) / n,
            mean_yy: (s.yy - y * y) / n,
            mean_zz: (s.zz - z * z) / n,
            count: (s.count - 1) as u64,
        }
    }
}

/// Sample means of the nine per-observation products.
pub fn accumulate_moments(sample: &TripleSample<'_>) -> MomentVector {
    let shared = ResponseSums::accumulate(sample.y, sample.z);
    MomentSums::accumulate(shared, sample.y, sample.x, sample.z).to_moments()
}

/// Count-weighted average of two moment vectors: the moments of the
/// concatenated samples.
pub fn merge_moments(a: &MomentVector, b: &MomentVector) -> Result<MomentVector> {
    if a.count == 0 || b.count == 0 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: 0,
        });
    }
    let count = a.count.checked_add(b.count).ok_or(Error::CountOverflow)?;
    let (wa, wb, total) = (a.count as f64, b.count as f64, count as f64);
    let ta = a.to_array();
    let tb = b.to_array();
    let mut out = [0.0; 9];
    for s in 0..9 {
        out[s] = (wa * ta[s] + wb * tb[s]) / total;
    }
    Ok(MomentVector::from_array(out, count))
}

/// Pearson correlation of one pair from its moments, clamped away from ±1.
pub fn pearson_from_moments(m: &MomentVector, pair: Pair) -> Result<f64> {
    let (mean_ab, mean_a, mean_b, mean_aa, mean_bb, var_a_name, var_b_name) =
        m.pair_moments(pair);
    let var_a = mean_aa - mean_a * mean_a;
    let var_b = mean_bb - mean_b * mean_b;
    if !(var_a > VARIANCE_FLOOR * mean_aa) {
        return Err(Error::DegenerateVariance(var_a_name));
    }
    if !(var_b > VARIANCE_FLOOR * mean_bb) {
        return Err(Error::DegenerateVariance(var_b_name));
    }
    let r = (mean_ab - mean_a * mean_b) / (var_a * var_b).sqrt();
    Ok(r.clamp(-1.0 + CLAMP_EPS, 1.0 - CLAMP_EPS))
}

/// Partial correlation of `Y` and `X` given `Z` from the nine raw moments.
pub fn partial_correlation(m: &MomentVector) -> Result<f64> {
    let r_yx = pearson_from_moments(m, Pair::XY)?;
    let r_xz = pearson_from_moments(m, Pair::XZ)?;
    let r_yz = pearson_from_moments(m, Pair::YZ)?;
    partial_from_correlations(r_yx, r_xz, r_yz)
}

#[inline]
pub(crate) fn partial_from_correlations(r_yx: f64, r_xz: f64, r_yz: f64) -> Result<f64> {
    let denom_sq = (1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz);
    if !(denom_sq >= DENOM_FLOOR) {
        return Err(Error::CollinearWithCondition);
    }
    let r = (r_yx - r_xz * r_yz) / denom_sq.sqrt();
    Ok(r.clamp(-1.0 + CLAMP_EPS, 1.0 - CLAMP_EPS))
}

/// Partial correlation of a triple straight from the data.
pub fn partial_correlation_of(sample: &TripleSample<'_>) -> Result<f64> {
    partial_correlation(&accumulate_moments(sample))
}
