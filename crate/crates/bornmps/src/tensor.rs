//! Dense real tensors with explicit shape and row-major storage.
//!
//! A [`DenseTensor`] is a flat `Vec<f64>` plus a shape; the last index varies
//! fastest. Three operations carry the rest of the crate: pairwise
//! [`contract`]ion, axis permutation, and the rank-revealing [`svd_split`]
//! used to adapt bond dimensions.
//!
//! All operations are pure functions on immutable inputs.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} entries but {actual} were provided")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("tensor contains a non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("axis {axis} is out of range for rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("axis {axis} appears more than once in a contraction list")]
    RepeatedAxis { axis: usize },
    #[error("contraction lists have different lengths ({left} vs {right})")]
    AxisCountMismatch { left: usize, right: usize },
    #[error(
        "contracted axis {axis_a} of the left tensor (extent {extent_a}) does not match \
         axis {axis_b} of the right tensor (extent {extent_b})"
    )]
    ExtentMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },
    #[error("cannot reshape {from} entries into shape {to:?}")]
    ReshapeSize { from: usize, to: Vec<usize> },
    #[error("{perm:?} is not a permutation of the {rank} axes")]
    InvalidPermutation { perm: Vec<usize>, rank: usize },
    #[error("expected a rank-2 tensor, got rank {rank}")]
    NotAMatrix { rank: usize },
    #[error("max_rank must be at least 1")]
    ZeroMaxRank,
}

/// Row-major strides for a shape (last axis has stride 1).
fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Dense n-dimensional real tensor. Scalars have shape `[]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor, validating the entry count and finiteness of every entry.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                shape,
                expected,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    /// Internal constructor for data produced by operations that preserve
    /// finiteness; skips the per-entry scan.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entry at a full multi-index. Panics on a malformed index; intended for
    /// small tensors and tests.
    pub fn at(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let st = strides(&self.shape);
        let mut flat = 0;
        for (axis, (&i, &s)) in index.iter().zip(&st).enumerate() {
            assert!(i < self.shape[axis], "index out of bounds on axis {axis}");
            flat += i * s;
        }
        self.data[flat]
    }

    /// Value of a scalar (shape `[]`) tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        if self.shape.is_empty() {
            Some(self.data[0])
        } else {
            None
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Same data under a new shape with identical entry count.
    pub fn reshape(&self, new_shape: Vec<usize>) -> Result<Self, TensorError> {
        let expected: usize = new_shape.iter().product();
        if expected != self.data.len() {
            return Err(TensorError::ReshapeSize {
                from: self.data.len(),
                to: new_shape,
            });
        }
        Ok(Self {
            shape: new_shape,
            data: self.data.clone(),
        })
    }

    /// Reorders axes: axis `i` of the result is axis `perm[i]` of the input.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self, TensorError> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        let mut valid = perm.len() == rank;
        for &p in perm {
            if !valid {
                break;
            }
            if p >= rank || seen[p] {
                valid = false;
            } else {
                seen[p] = true;
            }
        }
        if !valid {
            return Err(TensorError::InvalidPermutation {
                perm: perm.to_vec(),
                rank,
            });
        }
        let old_strides = strides(&self.shape);
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let gather: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut data = vec![0.0; self.data.len()];
        let mut index = vec![0usize; rank];
        let mut src = 0usize;
        for slot in data.iter_mut() {
            *slot = self.data[src];
            // odometer increment over the output multi-index
            for axis in (0..rank).rev() {
                index[axis] += 1;
                src += gather[axis];
                if index[axis] < new_shape[axis] {
                    break;
                }
                src -= gather[axis] * new_shape[axis];
                index[axis] = 0;
            }
        }
        Ok(Self {
            shape: new_shape,
            data,
        })
    }
}

/// Plain m×k by k×n row-major matrix product.
pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            if av != 0.0 {
                let b_row = &b[p * n..(p + 1) * n];
                for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                    *cv += av * bv;
                }
            }
        }
    }
    c
}

/// Sums over paired axes of two tensors.
///
/// The result carries the remaining axes of `a` (in order) followed by the
/// remaining axes of `b`. Empty axis lists give the outer product; contracting
/// every axis gives a scalar of shape `[]`.
pub fn contract(
    a: &DenseTensor,
    b: &DenseTensor,
    axes_a: &[usize],
    axes_b: &[usize],
) -> Result<DenseTensor, TensorError> {
    if axes_a.len() != axes_b.len() {
        return Err(TensorError::AxisCountMismatch {
            left: axes_a.len(),
            right: axes_b.len(),
        });
    }
    check_axes(axes_a, a.rank())?;
    check_axes(axes_b, b.rank())?;
    for (&ax_a, &ax_b) in axes_a.iter().zip(axes_b) {
        if a.shape[ax_a] != b.shape[ax_b] {
            return Err(TensorError::ExtentMismatch {
                axis_a: ax_a,
                extent_a: a.shape[ax_a],
                axis_b: ax_b,
                extent_b: b.shape[ax_b],
            });
        }
    }

    let kept_a: Vec<usize> = (0..a.rank()).filter(|i| !axes_a.contains(i)).collect();
    let kept_b: Vec<usize> = (0..b.rank()).filter(|i| !axes_b.contains(i)).collect();

    // Move contracted axes to the back of `a` and the front of `b`, then the
    // sum is a single matrix product.
    let perm_a: Vec<usize> = kept_a.iter().chain(axes_a).copied().collect();
    let perm_b: Vec<usize> = axes_b.iter().chain(&kept_b).copied().collect();
    let at = a.transpose(&perm_a)?;
    let bt = b.transpose(&perm_b)?;

    let m: usize = kept_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = axes_a.iter().map(|&i| a.shape[i]).product();
    let n: usize = kept_b.iter().map(|&i| b.shape[i]).product();

    let data = matmul(&at.data, &bt.data, m, k, n);
    let shape: Vec<usize> = kept_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(kept_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(DenseTensor::from_parts(shape, data))
}

fn check_axes(axes: &[usize], rank: usize) -> Result<(), TensorError> {
    for (i, &ax) in axes.iter().enumerate() {
        if ax >= rank {
            return Err(TensorError::AxisOutOfRange { axis: ax, rank });
        }
        if axes[..i].contains(&ax) {
            return Err(TensorError::RepeatedAxis { axis: ax });
        }
    }
    Ok(())
}

/// Truncated thin SVD of a matrix.
#[derive(Debug, Clone)]
pub struct SvdSplit {
    /// m×r isometry; columns orthonormal.
    pub left: DenseTensor,
    /// Kept singular values, non-increasing, all non-negative.
    pub singular_values: Vec<f64>,
    /// r×n isometry; rows orthonormal.
    pub right: DenseTensor,
    /// Sum of squares of dropped singular values over the sum of squares of
    /// all singular values. Zero when nothing was dropped.
    pub discarded_weight: f64,
}

/// Thin SVD with rank truncation.
///
/// Keeps `r = min(max_rank, |{i : s_i / s_0 > cutoff}|)` singular values, so
/// the cutoff is relative to the largest singular value. The retained factors
/// reconstruct the input up to a squared Frobenius error equal to the sum of
/// squares of the dropped values.
pub fn svd_split(m: &DenseTensor, max_rank: usize, cutoff: f64) -> Result<SvdSplit, TensorError> {
    if m.rank() != 2 {
        return Err(TensorError::NotAMatrix { rank: m.rank() });
    }
    if max_rank == 0 {
        return Err(TensorError::ZeroMaxRank);
    }
    if let Some(index) = m.data.iter().position(|x| !x.is_finite()) {
        return Err(TensorError::NonFinite { index });
    }
    let (rows, cols) = (m.shape[0], m.shape[1]);
    let mat = DMatrix::from_row_slice(rows, cols, &m.data);
    let svd = mat.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;

    // Defensive descending sort; nalgebra already orders them but the
    // truncation rule depends on it.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite singular values"));

    let s_sorted: Vec<f64> = order.iter().map(|&i| s[i].max(0.0)).collect();
    let total_sq: f64 = s_sorted.iter().map(|v| v * v).sum();
    let s0 = s_sorted[0];
    let above_cutoff = if s0 > 0.0 {
        s_sorted.iter().filter(|&&v| v / s0 > cutoff).count()
    } else {
        0
    };
    // A zero matrix still yields a rank-1 (zero) split so bond structure
    // survives degenerate inputs.
    let r = max_rank.min(above_cutoff).max(1).min(s_sorted.len());

    let kept: Vec<f64> = s_sorted[..r].to_vec();
    let dropped_sq: f64 = s_sorted[r..].iter().map(|v| v * v).sum();
    let discarded_weight = if total_sq > 0.0 {
        dropped_sq / total_sq
    } else {
        0.0
    };

    let mut left = vec![0.0; rows * r];
    for i in 0..rows {
        for (jj, &j) in order[..r].iter().enumerate() {
            left[i * r + jj] = u[(i, j)];
        }
    }
    let mut right = vec![0.0; r * cols];
    for (ii, &i) in order[..r].iter().enumerate() {
        for j in 0..cols {
            right[ii * cols + j] = vt[(i, j)];
        }
    }

    Ok(SvdSplit {
        left: DenseTensor::from_parts(vec![rows, r], left),
        singular_values: kept,
        right: DenseTensor::from_parts(vec![r, cols], right),
        discarded_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tensor(shape: &[usize], data: &[f64]) -> DenseTensor {
        DenseTensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    /// Independent nested-loop contraction used as the oracle for `contract`.
    fn naive_contract(
        a: &DenseTensor,
        b: &DenseTensor,
        axes_a: &[usize],
        axes_b: &[usize],
    ) -> DenseTensor {
        let kept_a: Vec<usize> = (0..a.rank()).filter(|i| !axes_a.contains(i)).collect();
        let kept_b: Vec<usize> = (0..b.rank()).filter(|i| !axes_b.contains(i)).collect();
        let out_shape: Vec<usize> = kept_a
            .iter()
            .map(|&i| a.shape()[i])
            .chain(kept_b.iter().map(|&i| b.shape()[i]))
            .collect();
        let sum_extents: Vec<usize> = axes_a.iter().map(|&i| a.shape()[i]).collect();
        let out_len: usize = out_shape.iter().product();
        let mut out = vec![0.0; out_len];

        let decompose = |mut flat: usize, dims: &[usize]| -> Vec<usize> {
            let mut idx = vec![0usize; dims.len()];
            for i in (0..dims.len()).rev() {
                idx[i] = flat % dims[i];
                flat /= dims[i];
            }
            idx
        };

        for (flat_out, slot) in out.iter_mut().enumerate() {
            let out_idx = decompose(flat_out, &out_shape);
            let sum_len: usize = sum_extents.iter().product::<usize>().max(1);
            let mut acc = 0.0;
            for flat_sum in 0..sum_len {
                let sum_idx = decompose(flat_sum, &sum_extents);
                let mut ia = vec![0usize; a.rank()];
                for (pos, &ax) in kept_a.iter().enumerate() {
                    ia[ax] = out_idx[pos];
                }
                for (pos, &ax) in axes_a.iter().enumerate() {
                    ia[ax] = sum_idx[pos];
                }
                let mut ib = vec![0usize; b.rank()];
                for (pos, &ax) in kept_b.iter().enumerate() {
                    ib[ax] = out_idx[kept_a.len() + pos];
                }
                for (pos, &ax) in axes_b.iter().enumerate() {
                    ib[ax] = sum_idx[pos];
                }
                acc += a.at(&ia) * b.at(&ib);
            }
            *slot = acc;
        }
        DenseTensor::new(out_shape, out).unwrap()
    }

    #[test]
    fn contract_with_identity_is_identity() {
        let a = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let eye = tensor(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let c = contract(&a, &eye, &[1], &[0]).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.data(), a.data());
    }

    #[test]
    fn contract_vector_dot() {
        let v = tensor(&[3], &[1.0, 2.0, 3.0]);
        let c = contract(&v, &v, &[0], &[0]).unwrap();
        assert_eq!(c.shape(), &[] as &[usize]);
        assert_eq!(c.scalar_value(), Some(14.0));
    }

    #[test]
    fn contract_matrix_product() {
        let a = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = tensor(&[2, 2], &[5.0, 6.0, 7.0, 8.0]);
        let c = contract(&a, &b, &[1], &[0]).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn contract_extent_mismatch_names_axes() {
        let a = tensor(&[2, 3], &[0.0; 6]);
        let b = tensor(&[2, 2], &[0.0; 4]);
        match contract(&a, &b, &[1], &[0]) {
            Err(TensorError::ExtentMismatch {
                axis_a,
                extent_a,
                axis_b,
                extent_b,
            }) => {
                assert_eq!((axis_a, extent_a, axis_b, extent_b), (1, 3, 0, 2));
            }
            other => panic!("expected extent mismatch, got {other:?}"),
        }
    }

    #[test]
    fn contract_rejects_repeated_axis() {
        let a = tensor(&[2, 2], &[0.0; 4]);
        assert!(matches!(
            contract(&a, &a, &[0, 0], &[0, 1]),
            Err(TensorError::RepeatedAxis { axis: 0 })
        ));
    }

    #[test]
    fn reshape_preserves_layout() {
        let t = tensor(&[4], &[1.0, 2.0, 3.0, 4.0]);
        let m = t.reshape(vec![2, 2]).unwrap();
        assert_eq!(m.at(&[0, 1]), 2.0);
        assert_eq!(m.at(&[1, 0]), 3.0);
        assert!(t.reshape(vec![3, 2]).is_err());
    }

    #[test]
    fn transpose_matrix() {
        let t = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let tt = t.transpose(&[1, 0]).unwrap();
        assert_eq!(tt.data(), &[1.0, 3.0, 2.0, 4.0]);
        assert!(t.transpose(&[0, 0]).is_err());
        assert!(t.transpose(&[0]).is_err());
    }

    #[test]
    fn transpose_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = tensor(&[2, 3, 4], &data);
        let perm = [2, 0, 1];
        // inverse permutation of [2,0,1] is [1,2,0]
        let back = t.transpose(&perm).unwrap().transpose(&[1, 2, 0]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn svd_identity_keeps_everything() {
        let eye = tensor(&[3, 3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let split = svd_split(&eye, 3, 0.0).unwrap();
        assert_eq!(split.singular_values.len(), 3);
        for s in &split.singular_values {
            assert_relative_eq!(*s, 1.0, max_relative = 1e-12);
        }
        assert_eq!(split.discarded_weight, 0.0);
    }

    #[test]
    fn svd_rank_one() {
        // outer product of [1,0] and [0,2]
        let m = tensor(&[2, 2], &[0.0, 2.0, 0.0, 0.0]);
        let split = svd_split(&m, 2, 0.0).unwrap();
        assert_eq!(split.singular_values.len(), 1);
        assert_relative_eq!(split.singular_values[0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = DenseTensor::from_parts(vec![1, 2], vec![1.0, f64::NAN]);
        assert!(matches!(
            svd_split(&m, 1, 0.0),
            Err(TensorError::NonFinite { .. })
        ));
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        tensor(&[rows, cols], &data)
    }

    fn reconstruct(split: &SvdSplit) -> DenseTensor {
        let r = split.singular_values.len();
        let rows = split.left.shape()[0];
        let cols = split.right.shape()[1];
        let mut scaled = split.left.data().to_vec();
        for i in 0..rows {
            for j in 0..r {
                scaled[i * r + j] *= split.singular_values[j];
            }
        }
        let data = matmul(&scaled, split.right.data(), rows, r, cols);
        DenseTensor::from_parts(vec![rows, cols], data)
    }

    #[test]
    fn svd_truncation_error_matches_dropped_weight() {
        let m = random_matrix(6, 6, 11);
        let full = svd_split(&m, 6, 0.0).unwrap();
        let truncated = svd_split(&m, 3, 0.0).unwrap();
        let dropped_sq: f64 = full.singular_values[3..].iter().map(|s| s * s).sum();
        let err_sq: f64 = reconstruct(&truncated)
            .data()
            .iter()
            .zip(m.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert_relative_eq!(err_sq, dropped_sq, max_relative = 1e-10);
        let total_sq: f64 = full.singular_values.iter().map(|s| s * s).sum();
        assert_relative_eq!(
            truncated.discarded_weight,
            dropped_sq / total_sq,
            max_relative = 1e-10
        );
    }

    #[test]
    fn svd_factors_are_isometries() {
        for seed in 0..5 {
            let m = random_matrix(5, 7, seed);
            let split = svd_split(&m, 4, 0.0).unwrap();
            let l = &split.left;
            let gram = contract(l, l, &[0], &[0]).unwrap();
            let r = split.singular_values.len();
            for i in 0..r {
                for j in 0..r {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((gram.at(&[i, j]) - expect).abs() < 1e-10);
                }
            }
            let rt = &split.right;
            let gram_r = contract(rt, rt, &[1], &[1]).unwrap();
            for i in 0..r {
                for j in 0..r {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((gram_r.at(&[i, j]) - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn discarded_weight_non_increasing_in_max_rank() {
        let m = random_matrix(6, 5, 3);
        let mut last = f64::INFINITY;
        for max_rank in 1..=5 {
            let split = svd_split(&m, max_rank, 0.0).unwrap();
            assert!(split.discarded_weight <= last + 1e-15);
            last = split.discarded_weight;
        }
    }

    proptest! {
        #[test]
        fn contract_matches_naive_oracle(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank_a = rng.gen_range(1..=3usize);
            let rank_b = rng.gen_range(1..=3usize);
            let shape_a: Vec<usize> = (0..rank_a).map(|_| rng.gen_range(1..=4)).collect();
            let mut shape_b: Vec<usize> = (0..rank_b).map(|_| rng.gen_range(1..=4)).collect();
            let n_contracted = rng.gen_range(1..=rank_a.min(rank_b));
            let mut axes_a: Vec<usize> = (0..rank_a).collect();
            let mut axes_b: Vec<usize> = (0..rank_b).collect();
            // shuffle via index draws
            for i in (1..axes_a.len()).rev() {
                axes_a.swap(i, rng.gen_range(0..=i));
            }
            for i in (1..axes_b.len()).rev() {
                axes_b.swap(i, rng.gen_range(0..=i));
            }
            let axes_a = &axes_a[..n_contracted];
            let axes_b = &axes_b[..n_contracted];
            for (&ax_a, &ax_b) in axes_a.iter().zip(axes_b) {
                shape_b[ax_b] = shape_a[ax_a];
            }
            let len_a: usize = shape_a.iter().product();
            let len_b: usize = shape_b.iter().product();
            let a = DenseTensor::new(
                shape_a,
                (0..len_a).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ).unwrap();
            let b = DenseTensor::new(
                shape_b,
                (0..len_b).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ).unwrap();

            let fast = contract(&a, &b, axes_a, axes_b).unwrap();
            let slow = naive_contract(&a, &b, axes_a, axes_b);
            prop_assert_eq!(fast.shape(), slow.shape());
            for (x, y) in fast.data().iter().zip(slow.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn contract_is_bilinear(seed in 0u64..50, alpha in -4.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DenseTensor::new(
                vec![2, 3],
                (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ).unwrap();
            let b = DenseTensor::new(
                vec![3, 2],
                (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            ).unwrap();
            let scaled = DenseTensor::new(
                vec![2, 3],
                a.data().iter().map(|x| alpha * x).collect(),
            ).unwrap();
            let lhs = contract(&scaled, &b, &[1], &[0]).unwrap();
            let rhs = contract(&a, &b, &[1], &[0]).unwrap();
            for (x, y) in lhs.data().iter().zip(rhs.data()) {
                prop_assert!((x - alpha * y).abs() < 1e-10);
            }
        }
    }
}
