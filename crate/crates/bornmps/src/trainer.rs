//! Sweep training: variational two-site updates with adaptive bonds.
//!
//! One sweep walks the bonds left to right and back. At each bond the two
//! adjacent sites are merged into a single order-4 tensor `T`, a few plain
//! gradient-descent steps are taken on it, and the updated tensor is split
//! back by truncated SVD, which is where bond dimensions grow or shrink.
//!
//! The model is kept in mixed-canonical form at the active bond throughout,
//! so the normalizer is just `Z = |T|^2` and the loss gradient has the closed
//! form
//!
//! ```text
//! dL/dT = 2 T / |T|^2  -  (2 / |batch|) * sum_v  Phi(v) / psi(v)
//! ```
//!
//! where `Phi(v)`, the derivative of `psi(v)` in `T`, is the outer product of
//! the row's left environment, its value indicators at the two open sites,
//! and its right environment. Environments are cached per row and updated
//! incrementally as the sweep moves, so a bond update costs
//! `O(|batch| * D^2)` rather than a fresh contraction per row.
//!
//! After every split the singular values are rescaled so `Z = 1`; gradients
//! then keep their simple form at the next bond.

use std::time::Instant;

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mps::{apply_left, apply_right, Configuration, MpsModel};
use crate::tensor::{contract, svd_split, DenseTensor, TensorError};

/// Amplitudes smaller than this are clamped (sign preserved) inside gradient
/// terms so a single near-zero row cannot produce an infinite update.
const PSI_FLOOR: f64 = 1e-150;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training rows are empty")]
    EmptyRows,
    #[error("row {row}: value {value} out of range for feature {feature} (dimension {dim})")]
    InvalidRow {
        row: usize,
        feature: usize,
        value: usize,
        dim: usize,
    },
    #[error("bond {bond} out of range; model has {bonds} bonds")]
    BondOutOfRange { bond: usize, bonds: usize },
    #[error("canonical center must sit on site {bond} or {}; found {found:?}", bond + 1)]
    CenterMisplaced { bond: usize, found: Option<usize> },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("merged tensor has zero norm")]
    ZeroNormTensor,
    #[error("loss became non-finite during sweep {sweep}")]
    NonFiniteLoss { sweep: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Rows per gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    /// Every row, every update. The default; fully deterministic economics.
    Full,
    /// Mini-batches drawn without replacement from a per-sweep shuffle.
    Rows(usize),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Full left-right-left sweeps.
    pub epochs: usize,
    pub learning_rate: f64,
    pub max_bond: usize,
    /// Relative singular-value cutoff handed to the SVD splits.
    pub sv_cutoff: f64,
    pub batch_size: BatchSize,
    pub descent_steps_per_bond: usize,
    /// Seeds mini-batch shuffling; recorded alongside saved models.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 0.05,
            max_bond: 32,
            sv_cutoff: 1e-7,
            batch_size: BatchSize::Full,
            descent_steps_per_bond: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if self.max_bond == 0 {
            return Err(TrainError::InvalidConfig("max_bond must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.sv_cutoff) {
            return Err(TrainError::InvalidConfig(
                "sv_cutoff must lie in [0, 1)".into(),
            ));
        }
        if self.descent_steps_per_bond == 0 {
            return Err(TrainError::InvalidConfig(
                "descent_steps_per_bond must be positive".into(),
            ));
        }
        if let BatchSize::Rows(0) = self.batch_size {
            return Err(TrainError::InvalidConfig(
                "batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-sweep training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training-set NLL measured after each full sweep.
    pub nll_per_sweep: Vec<f64>,
    /// Largest bond dimension after each sweep.
    pub max_bond_per_sweep: Vec<usize>,
    /// Wall time of each sweep in seconds.
    pub seconds_per_sweep: Vec<f64>,
}

impl TrainReport {
    pub fn final_nll(&self) -> f64 {
        *self.nll_per_sweep.last().expect("at least one sweep")
    }
}

/// Which way the sweep is traveling; decides where the singular values are
/// absorbed and where the canonical center lands after a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Right,
    Left,
}

/// Contracts sites `k` and `k+1` over their shared bond into an order-4
/// tensor `(D_{k-1}, d_k, d_{k+1}, D_{k+1})`. The canonical center must sit
/// on one of the two sites.
pub fn merge_pair(m: &MpsModel, k: usize) -> Result<DenseTensor, TrainError> {
    let n = m.num_sites();
    if n < 2 || k >= n - 1 {
        return Err(TrainError::BondOutOfRange {
            bond: k,
            bonds: n.saturating_sub(1),
        });
    }
    match m.canonical_center() {
        Some(c) if c == k || c == k + 1 => {}
        found => return Err(TrainError::CenterMisplaced { bond: k, found }),
    }
    Ok(contract(m.site(k), m.site(k + 1), &[2], &[0])?)
}

/// Borrowed per-row environments around one bond.
struct RowEnv<'a> {
    left: &'a [f64],
    right: &'a [f64],
    vk: usize,
    vk1: usize,
}

fn merged_amplitude(t: &DenseTensor, env: &RowEnv<'_>) -> f64 {
    let shape = t.shape();
    let (dk1, dr) = (shape[2], shape[3]);
    let stride_a = shape[1] * dk1 * dr;
    let base = env.vk * dk1 * dr + env.vk1 * dr;
    let data = t.data();
    let mut psi = 0.0;
    for (a, &l) in env.left.iter().enumerate() {
        if l != 0.0 {
            let block = &data[a * stride_a + base..][..dr];
            let dot: f64 = block.iter().zip(env.right).map(|(x, y)| x * y).sum();
            psi += l * dot;
        }
    }
    psi
}

/// `dL/dT` for the merged tensor at a bond, assuming mixed-canonical form so
/// that `Z = |T|^2`.
fn gradient_from_envs(t: &DenseTensor, envs: &[RowEnv<'_>]) -> Result<DenseTensor, TrainError> {
    if envs.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let norm_sq: f64 = t.data().iter().map(|x| x * x).sum();
    if norm_sq <= 0.0 {
        return Err(TrainError::ZeroNormTensor);
    }
    let shape = t.shape();
    let (dk1, dr) = (shape[2], shape[3]);
    let stride_a = shape[1] * dk1 * dr;
    let inv_n = 1.0 / envs.len() as f64;
    let acc = crate::parallel::accumulate_chunked(envs, t.len(), |acc, env| {
        let mut psi = merged_amplitude(t, env);
        if psi.abs() < PSI_FLOOR {
            psi = if psi < 0.0 { -PSI_FLOOR } else { PSI_FLOOR };
        }
        let coeff = 2.0 * inv_n / psi;
        let base = env.vk * dk1 * dr + env.vk1 * dr;
        for (a, &l) in env.left.iter().enumerate() {
            let la = l * coeff;
            if la != 0.0 {
                let block = &mut acc[a * stride_a + base..a * stride_a + base + dr];
                for (slot, &r) in block.iter_mut().zip(env.right) {
                    *slot += la * r;
                }
            }
        }
    });
    let grad: Vec<f64> = t
        .data()
        .iter()
        .zip(&acc)
        .map(|(&x, &a)| 2.0 * x / norm_sq - a)
        .collect();
    Ok(DenseTensor::from_parts(shape.to_vec(), grad))
}

/// Gradient of the batch NLL in the merged tensor at bond `k`, with the
/// environments recomputed from scratch. The sweep loop uses the same math
/// through its incremental caches.
pub fn two_site_gradient(
    m: &MpsModel,
    k: usize,
    merged: &DenseTensor,
    batch: &[Configuration],
) -> Result<DenseTensor, TrainError> {
    let n = m.num_sites();
    if n < 2 || k >= n - 1 {
        return Err(TrainError::BondOutOfRange {
            bond: k,
            bonds: n.saturating_sub(1),
        });
    }
    match m.canonical_center() {
        Some(c) if c == k || c == k + 1 => {}
        found => return Err(TrainError::CenterMisplaced { bond: k, found }),
    }
    validate_rows(m, batch)?;
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let lefts: Vec<Vec<f64>> = batch
        .iter()
        .map(|row| {
            let mut env = vec![1.0];
            for j in 0..k {
                env = apply_left(&env, m.site(j), row.values()[j]);
            }
            env
        })
        .collect();
    let rights: Vec<Vec<f64>> = batch
        .iter()
        .map(|row| {
            let mut env = vec![1.0];
            for j in ((k + 2)..n).rev() {
                env = apply_right(&env, m.site(j), row.values()[j]);
            }
            env
        })
        .collect();
    let envs: Vec<RowEnv<'_>> = batch
        .iter()
        .enumerate()
        .map(|(i, row)| RowEnv {
            left: &lefts[i],
            right: &rights[i],
            vk: row.values()[k],
            vk1: row.values()[k + 1],
        })
        .collect();
    gradient_from_envs(merged, &envs)
}

/// Splits an updated merged tensor back into two sites by truncated SVD,
/// absorbing the singular values in the direction of travel, rescaling them
/// so `Z = 1`, and moving the canonical center to the site the sweep lands
/// on. Returns the discarded weight of the truncation.
pub fn split_pair(
    m: &mut MpsModel,
    k: usize,
    merged: &DenseTensor,
    max_bond: usize,
    sv_cutoff: f64,
    direction: SweepDirection,
) -> Result<f64, TrainError> {
    let shape = merged.shape().to_vec();
    let (dl, dk, dk1, dr) = (shape[0], shape[1], shape[2], shape[3]);
    let matrix = merged.reshape(vec![dl * dk, dk1 * dr])?;
    let split = svd_split(&matrix, max_bond, sv_cutoff)?;
    let rank = split.singular_values.len();
    let s_norm = split
        .singular_values
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();
    if s_norm <= 0.0 {
        return Err(TrainError::ZeroNormTensor);
    }
    let scaled: Vec<f64> = split.singular_values.iter().map(|s| s / s_norm).collect();

    let (left_site, right_site, center) = match direction {
        SweepDirection::Right => {
            // left keeps the isometry, right absorbs the spectrum
            let mut right = split.right.data().to_vec();
            for (i, &s) in scaled.iter().enumerate() {
                for x in &mut right[i * dk1 * dr..(i + 1) * dk1 * dr] {
                    *x *= s;
                }
            }
            (
                split.left.reshape(vec![dl, dk, rank])?,
                DenseTensor::from_parts(vec![rank, dk1, dr], right),
                k + 1,
            )
        }
        SweepDirection::Left => {
            let mut left = split.left.data().to_vec();
            for row in 0..dl * dk {
                for (i, &s) in scaled.iter().enumerate() {
                    left[row * rank + i] *= s;
                }
            }
            (
                DenseTensor::from_parts(vec![dl, dk, rank], left),
                split.right.reshape(vec![rank, dk1, dr])?,
                k,
            )
        }
    };
    m.set_pair(k, left_site, right_site, center);
    Ok(split.discarded_weight)
}

fn validate_rows(m: &MpsModel, rows: &[Configuration]) -> Result<(), TrainError> {
    let dims = m.physical_dims();
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dims.len() {
            return Err(TrainError::InvalidRow {
                row: r,
                feature: row.len().min(dims.len()),
                value: 0,
                dim: 0,
            });
        }
        for (feature, (&value, &dim)) in row.values().iter().zip(dims).enumerate() {
            if value >= dim {
                return Err(TrainError::InvalidRow {
                    row: r,
                    feature,
                    value,
                    dim,
                });
            }
        }
    }
    Ok(())
}

/// Flat per-row environment storage for one cut.
struct EnvLayer {
    dim: usize,
    data: Vec<f64>,
}

impl EnvLayer {
    fn ones(rows: usize) -> Self {
        Self {
            dim: 1,
            data: vec![1.0; rows],
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// `layers[j]` = product of sites `j..N` selected by each row, so the right
/// environment at bond `k` is `layers[k + 2]`.
fn build_right_layers(m: &MpsModel, rows: &[Configuration]) -> Vec<EnvLayer> {
    let n = m.num_sites();
    let mut layers: Vec<EnvLayer> = (0..=n).map(|_| EnvLayer::ones(0)).collect();
    layers[n] = EnvLayer::ones(rows.len());
    for j in (0..n).rev() {
        let dim = m.site(j).shape()[0];
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            data.extend(apply_right(layers[j + 1].row(i), m.site(j), row.values()[j]));
        }
        layers[j] = EnvLayer { dim, data };
    }
    layers
}

/// `layers[j]` = product of sites `0..j` selected by each row: the left
/// environment at bond `k` is `layers[k]`.
fn build_left_layers(m: &MpsModel, rows: &[Configuration]) -> Vec<EnvLayer> {
    let n = m.num_sites();
    let mut layers: Vec<EnvLayer> = Vec::with_capacity(n);
    layers.push(EnvLayer::ones(rows.len()));
    for j in 0..n - 1 {
        let dim = m.site(j).shape()[2];
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            data.extend(apply_left(layers[j].row(i), m.site(j), row.values()[j]));
        }
        layers.push(EnvLayer { dim, data });
    }
    layers
}

fn advance_layer(layer: &mut EnvLayer, m: &MpsModel, rows: &[Configuration], site: usize, from_left: bool) {
    let dim = if from_left {
        m.site(site).shape()[2]
    } else {
        m.site(site).shape()[0]
    };
    let mut data = Vec::with_capacity(rows.len() * dim);
    for (i, row) in rows.iter().enumerate() {
        let v = row.values()[site];
        if from_left {
            data.extend(apply_left(layer.row(i), m.site(site), v));
        } else {
            data.extend(apply_right(layer.row(i), m.site(site), v));
        }
    }
    *layer = EnvLayer { dim, data };
}

/// Mini-batch scheduler: one shuffle per sweep, consumed without replacement,
/// wrapping around when exhausted.
struct BatchRing {
    indices: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
    size: Option<usize>,
}

impl BatchRing {
    fn new(rows: usize, cfg: &TrainConfig) -> Self {
        let size = match cfg.batch_size {
            BatchSize::Full => None,
            BatchSize::Rows(r) => Some(r.min(rows)),
        };
        Self {
            indices: (0..rows).collect(),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            size,
        }
    }

    fn start_sweep(&mut self) {
        if self.size.is_some() {
            self.indices.shuffle(&mut self.rng);
            self.cursor = 0;
        }
    }

    /// `None` means the full row set.
    fn next_batch(&mut self) -> Option<Vec<usize>> {
        let size = self.size?;
        let mut batch = Vec::with_capacity(size);
        for _ in 0..size {
            if self.cursor == self.indices.len() {
                self.indices.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            batch.push(self.indices[self.cursor]);
            self.cursor += 1;
        }
        Some(batch)
    }
}

/// Trains a copy of `m` on `rows`, sweeping `cfg.epochs` times over the bonds
/// (left to right, then back). Returns the trained model, normalized and
/// canonicalized to site 0, along with the per-sweep report.
pub fn train(
    m: &MpsModel,
    rows: &[Configuration],
    cfg: &TrainConfig,
) -> Result<(MpsModel, TrainReport), TrainError> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(TrainError::EmptyRows);
    }
    validate_rows(m, rows)?;

    if m.num_sites() == 1 {
        return train_single_site(m, rows, cfg);
    }

    let mut model = m.normalized(0);
    let n = model.num_sites();
    let mut ring = BatchRing::new(rows.len(), cfg);
    let mut report = TrainReport {
        nll_per_sweep: Vec::with_capacity(cfg.epochs),
        max_bond_per_sweep: Vec::with_capacity(cfg.epochs),
        seconds_per_sweep: Vec::with_capacity(cfg.epochs),
    };

    for sweep in 0..cfg.epochs {
        let started = Instant::now();
        ring.start_sweep();

        // left-to-right half sweep
        let right_layers = build_right_layers(&model, rows);
        let mut left_cur = EnvLayer::ones(rows.len());
        for k in 0..n - 1 {
            optimize_bond(
                &mut model,
                k,
                rows,
                &left_cur,
                &right_layers[k + 2],
                &mut ring,
                cfg,
                SweepDirection::Right,
            )?;
            advance_layer(&mut left_cur, &model, rows, k, true);
        }

        // right-to-left half sweep
        let left_layers = build_left_layers(&model, rows);
        let mut right_cur = EnvLayer::ones(rows.len());
        for k in (0..n - 1).rev() {
            optimize_bond(
                &mut model,
                k,
                rows,
                &left_layers[k],
                &right_cur,
                &mut ring,
                cfg,
                SweepDirection::Left,
            )?;
            advance_layer(&mut right_cur, &model, rows, k + 1, false);
        }

        let nll = model.nll(rows).expect("rows validated");
        if !nll.is_finite() {
            return Err(TrainError::NonFiniteLoss { sweep });
        }
        report.nll_per_sweep.push(nll);
        report.max_bond_per_sweep.push(model.max_bond_dim());
        report.seconds_per_sweep.push(started.elapsed().as_secs_f64());
    }
    Ok((model, report))
}

#[allow(clippy::too_many_arguments)]
fn optimize_bond(
    model: &mut MpsModel,
    k: usize,
    rows: &[Configuration],
    left: &EnvLayer,
    right: &EnvLayer,
    ring: &mut BatchRing,
    cfg: &TrainConfig,
    direction: SweepDirection,
) -> Result<(), TrainError> {
    let mut merged = merge_pair(model, k)?;
    for _ in 0..cfg.descent_steps_per_bond {
        let batch = ring.next_batch();
        let envs: Vec<RowEnv<'_>> = match &batch {
            None => rows
                .iter()
                .enumerate()
                .map(|(i, row)| RowEnv {
                    left: left.row(i),
                    right: right.row(i),
                    vk: row.values()[k],
                    vk1: row.values()[k + 1],
                })
                .collect(),
            Some(batch) => batch
                .iter()
                .map(|&i| RowEnv {
                    left: left.row(i),
                    right: right.row(i),
                    vk: rows[i].values()[k],
                    vk1: rows[i].values()[k + 1],
                })
                .collect(),
        };
        let grad = gradient_from_envs(&merged, &envs)?;
        let data = merged.data_mut();
        for (x, g) in data.iter_mut().zip(grad.data()) {
            *x -= cfg.learning_rate * g;
        }
    }
    split_pair(model, k, &merged, cfg.max_bond, cfg.sv_cutoff, direction)?;
    Ok(())
}

/// Degenerate single-feature model: the merged tensor is the lone site.
fn train_single_site(
    m: &MpsModel,
    rows: &[Configuration],
    cfg: &TrainConfig,
) -> Result<(MpsModel, TrainReport), TrainError> {
    let mut model = m.normalized(0);
    let d = model.physical_dims()[0];
    let mut ring = BatchRing::new(rows.len(), cfg);
    let mut report = TrainReport {
        nll_per_sweep: Vec::new(),
        max_bond_per_sweep: Vec::new(),
        seconds_per_sweep: Vec::new(),
    };
    for sweep in 0..cfg.epochs {
        let started = Instant::now();
        ring.start_sweep();
        let mut data = model.site(0).data().to_vec();
        for _ in 0..cfg.descent_steps_per_bond {
            let batch = ring.next_batch();
            let counts = {
                let mut counts = vec![0usize; d];
                match &batch {
                    None => {
                        for row in rows {
                            counts[row.values()[0]] += 1;
                        }
                    }
                    Some(batch) => {
                        for &i in batch {
                            counts[rows[i].values()[0]] += 1;
                        }
                    }
                }
                counts
            };
            let batch_len: usize = counts.iter().sum();
            let norm_sq: f64 = data.iter().map(|x| x * x).sum();
            if norm_sq <= 0.0 {
                return Err(TrainError::ZeroNormTensor);
            }
            for (v, x) in data.iter_mut().enumerate() {
                let mut psi = *x;
                if psi.abs() < PSI_FLOOR {
                    psi = if psi < 0.0 { -PSI_FLOOR } else { PSI_FLOOR };
                }
                let grad = 2.0 * *x / norm_sq
                    - 2.0 * counts[v] as f64 / (batch_len as f64 * psi);
                *x -= cfg.learning_rate * grad;
            }
        }
        let norm: f64 = data.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(TrainError::ZeroNormTensor);
        }
        for x in &mut data {
            *x /= norm;
        }
        let site = DenseTensor::from_parts(vec![1, d, 1], data);
        model = MpsModel::from_sites(vec![site])
            .expect("single site stays structurally valid")
            .normalized(0);
        let nll = model.nll(rows).expect("rows validated");
        if !nll.is_finite() {
            return Err(TrainError::NonFiniteLoss { sweep });
        }
        report.nll_per_sweep.push(nll);
        report.max_bond_per_sweep.push(1);
        report.seconds_per_sweep.push(started.elapsed().as_secs_f64());
    }
    Ok((model, report))
}
