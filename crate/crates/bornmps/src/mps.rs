//! The Born machine: a matrix product state over categorical features.
//!
//! A model with `N` features holds one order-3 site tensor per feature,
//! site `k` shaped `(D_{k-1}, d_k, D_k)` with open boundaries
//! `D_0 = D_N = 1`. Fixing one value per feature selects one matrix per
//! site, and the amplitude of a configuration is the product of those
//! matrices:
//!
//! ```text
//! psi(v_1 .. v_N) = A^(1)[v_1] · A^(2)[v_2] · ... · A^(N)[v_N]
//! ```
//!
//! The model assigns probability `P(v) = psi(v)^2 / Z` with
//! `Z = sum_v psi(v)^2`, so any real parameterization is a distribution.
//! `Z` is computed by transfer-matrix contraction in `O(N d D^3)`; it never
//! requires enumerating configurations.
//!
//! Canonical forms gauge the chain so that every site left of a chosen
//! center is a left isometry and every site right of it a right isometry,
//! which makes `Z` the squared Frobenius norm of the center tensor. Training
//! sweeps and direct sampling both lean on this.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::DenseTensor;

/// Smallest probability fed to a logarithm; keeps scores of effectively
/// impossible configurations large but finite.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a model needs at least one feature")]
    EmptyModel,
    #[error("site {site} has rank {rank}, expected rank 3")]
    SiteRank { site: usize, rank: usize },
    #[error("boundary bond of site {site} has extent {extent}, expected 1")]
    BoundaryBond { site: usize, extent: usize },
    #[error("right bond of site {site} ({right}) does not match left bond of site {next} ({left})")]
    BondMismatch {
        site: usize,
        right: usize,
        next: usize,
        left: usize,
    },
    #[error("feature {site} has physical dimension {dim}, expected at least 2")]
    PhysicalDimTooSmall { site: usize, dim: usize },
    #[error("configuration has {actual} values, model has {expected} features")]
    ConfigurationLength { expected: usize, actual: usize },
    #[error("value {value} out of range for feature {feature} (dimension {dim})")]
    ValueOutOfRange {
        feature: usize,
        value: usize,
        dim: usize,
    },
    #[error("row set is empty")]
    EmptyRows,
}

/// One integer value per feature, `values[k] < d_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration(pub Vec<usize>);

impl Configuration {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for Configuration {
    fn from(values: Vec<usize>) -> Self {
        Configuration(values)
    }
}

/// Matrix product state with open boundaries.
///
/// Values of this type behave immutably: gauge changes return new models.
/// The trainer uses crate-internal in-place updates during sweeps.
#[derive(Debug, Clone)]
pub struct MpsModel {
    sites: Vec<DenseTensor>,
    physical_dims: Vec<usize>,
    canonical_center: Option<usize>,
}

impl MpsModel {
    /// Builds a model from site tensors, validating bond structure.
    pub fn from_sites(sites: Vec<DenseTensor>) -> Result<Self, ModelError> {
        if sites.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        for (k, site) in sites.iter().enumerate() {
            if site.rank() != 3 {
                return Err(ModelError::SiteRank {
                    site: k,
                    rank: site.rank(),
                });
            }
            if site.shape()[1] < 2 {
                return Err(ModelError::PhysicalDimTooSmall {
                    site: k,
                    dim: site.shape()[1],
                });
            }
        }
        if sites[0].shape()[0] != 1 {
            return Err(ModelError::BoundaryBond {
                site: 0,
                extent: sites[0].shape()[0],
            });
        }
        let last = sites.len() - 1;
        if sites[last].shape()[2] != 1 {
            return Err(ModelError::BoundaryBond {
                site: last,
                extent: sites[last].shape()[2],
            });
        }
        for k in 0..last {
            let right = sites[k].shape()[2];
            let left = sites[k + 1].shape()[0];
            if right != left {
                return Err(ModelError::BondMismatch {
                    site: k,
                    right,
                    next: k + 1,
                    left,
                });
            }
        }
        let physical_dims = sites.iter().map(|s| s.shape()[1]).collect();
        Ok(Self {
            sites,
            physical_dims,
            canonical_center: None,
        })
    }

    /// Near-uniform random initialization: every entry is `1.0` plus uniform
    /// noise in `[-0.1, 0.1]`, then the model is canonicalized to site 0 and
    /// normalized so `Z = 1`. Deterministic in `seed`.
    pub fn init_random(
        physical_dims: &[usize],
        initial_bond: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if physical_dims.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        for (k, &d) in physical_dims.iter().enumerate() {
            if d < 2 {
                return Err(ModelError::PhysicalDimTooSmall { site: k, dim: d });
            }
        }
        let initial_bond = initial_bond.max(1);
        let n = physical_dims.len();
        // Interior bonds are capped by what either side of the cut can carry.
        let mut bonds = vec![1usize; n + 1];
        let mut left_cap = 1usize;
        for k in 1..n {
            left_cap = left_cap.saturating_mul(physical_dims[k - 1]).min(initial_bond);
            bonds[k] = left_cap;
        }
        let mut right_cap = 1usize;
        for k in (1..n).rev() {
            right_cap = right_cap.saturating_mul(physical_dims[k]).min(initial_bond);
            bonds[k] = bonds[k].min(right_cap);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = (0..n)
            .map(|k| {
                let len = bonds[k] * physical_dims[k] * bonds[k + 1];
                let data: Vec<f64> = (0..len).map(|_| 1.0 + rng.gen_range(-0.1..0.1)).collect();
                DenseTensor::from_parts(vec![bonds[k], physical_dims[k], bonds[k + 1]], data)
            })
            .collect();
        let model = Self::from_sites(sites)?;
        Ok(model.normalized(0))
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn physical_dims(&self) -> &[usize] {
        &self.physical_dims
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &DenseTensor {
        &self.sites[k]
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.canonical_center
    }

    /// Bond extents `D_0 .. D_N` (length `N + 1`, both ends 1).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.sites.iter().map(|s| s.shape()[0]).collect();
        dims.push(1);
        dims
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_configuration(&self, v: &Configuration) -> Result<(), ModelError> {
        if v.len() != self.num_sites() {
            return Err(ModelError::ConfigurationLength {
                expected: self.num_sites(),
                actual: v.len(),
            });
        }
        for (k, (&value, &dim)) in v.values().iter().zip(&self.physical_dims).enumerate() {
            if value >= dim {
                return Err(ModelError::ValueOutOfRange {
                    feature: k,
                    value,
                    dim,
                });
            }
        }
        Ok(())
    }

    /// Amplitude `psi(v)`: the product of the matrices selected by `v`.
    pub fn amplitude(&self, v: &Configuration) -> Result<f64, ModelError> {
        self.check_configuration(v)?;
        let mut vec = vec![1.0];
        for (site, &value) in self.sites.iter().zip(v.values()) {
            vec = apply_left(&vec, site, value);
        }
        debug_assert_eq!(vec.len(), 1);
        Ok(vec[0])
    }

    /// Normalizer `Z = sum_v psi(v)^2`, contracted site by site.
    pub fn partition_function(&self) -> f64 {
        let mut env = vec![1.0]; // 1x1
        for site in &self.sites {
            env = transfer_left(&env, site, None);
        }
        debug_assert_eq!(env.len(), 1);
        env[0]
    }

    /// `P(v) = psi(v)^2 / Z`.
    pub fn probability(&self, v: &Configuration) -> Result<f64, ModelError> {
        let amp = self.amplitude(v)?;
        Ok(amp * amp / self.partition_function())
    }

    /// Mean negative log-likelihood of `rows` in nats, probabilities clamped
    /// below at [`PROB_FLOOR`].
    pub fn nll(&self, rows: &[Configuration]) -> Result<f64, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyRows);
        }
        for row in rows {
            self.check_configuration(row)?;
        }
        let z = self.partition_function();
        Ok(crate::parallel::mean_chunked(rows, |row| {
            let amp = self.amplitude(row).expect("row validated");
            -(amp * amp / z).max(PROB_FLOOR).ln()
        }))
    }

    /// Gauge transformation returning an equivalent model in mixed-canonical
    /// form centered at `center`. Every amplitude is preserved.
    pub fn canonicalized(&self, center: usize) -> MpsModel {
        let mut model = self.clone();
        model.canonicalize_in_place(center);
        model
    }

    /// Canonicalized with the center tensor rescaled so `Z = 1`.
    pub fn normalized(&self, center: usize) -> MpsModel {
        let mut model = self.canonicalized(center);
        let norm = model.sites[center].frobenius_norm();
        assert!(norm > 0.0, "cannot normalize a model with zero norm");
        for x in model.sites[center].data_mut() {
            *x /= norm;
        }
        model
    }

    /// In-place gauge transformation; used by the trainer between sweeps.
    pub(crate) fn canonicalize_in_place(&mut self, center: usize) {
        let n = self.num_sites();
        assert!(center < n, "center {center} out of range for {n} sites");
        // Left-to-right QR pass up to the center.
        for k in 0..center {
            let (dl, d, dr) = site_dims(&self.sites[k]);
            let (q, r) = thin_qr(self.sites[k].data(), dl * d, dr);
            let new_bond = q.len() / (dl * d);
            self.sites[k] = DenseTensor::from_parts(vec![dl, d, new_bond], q);
            self.absorb_from_left(k + 1, &r, new_bond, dr);
        }
        // Right-to-left pass down to the center. QR of the transpose yields
        // the row-orthonormal factor.
        for k in ((center + 1)..n).rev() {
            let (dl, d, dr) = site_dims(&self.sites[k]);
            let mat = self.sites[k]
                .reshape(vec![dl, d * dr])
                .expect("site reshape");
            let transposed = mat.transpose(&[1, 0]).expect("matrix transpose");
            let (q, r) = thin_qr(transposed.data(), d * dr, dl);
            let new_bond = q.len() / (d * dr);
            // q is (d*dr) x new_bond; the site wants (new_bond, d, dr).
            let site = DenseTensor::from_parts(vec![d * dr, new_bond], q)
                .transpose(&[1, 0])
                .expect("transpose back");
            self.sites[k] = site.reshape(vec![new_bond, d, dr]).expect("site reshape");
            // r is new_bond x dl; absorb its transpose into the left neighbor.
            self.absorb_from_right(k - 1, &r, new_bond, dl);
        }
        self.canonical_center = Some(center);
    }

    /// Multiplies `carry` (new_bond x old_bond) into the left bond of site `k`.
    fn absorb_from_left(&mut self, k: usize, carry: &[f64], new_bond: usize, old_bond: usize) {
        let (dl, d, dr) = site_dims(&self.sites[k]);
        debug_assert_eq!(dl, old_bond);
        let data = crate::tensor::matmul(carry, self.sites[k].data(), new_bond, old_bond, d * dr);
        self.sites[k] = DenseTensor::from_parts(vec![new_bond, d, dr], data);
    }

    /// Multiplies the transpose of `carry` (new_bond x old_bond) into the
    /// right bond of site `k`.
    fn absorb_from_right(&mut self, k: usize, carry: &[f64], new_bond: usize, old_bond: usize) {
        let (dl, d, dr) = site_dims(&self.sites[k]);
        debug_assert_eq!(dr, old_bond);
        // site (dl*d x dr) times carry^T (dr x new_bond)
        let mut carry_t = vec![0.0; old_bond * new_bond];
        for i in 0..new_bond {
            for j in 0..old_bond {
                carry_t[j * new_bond + i] = carry[i * old_bond + j];
            }
        }
        let data = crate::tensor::matmul(self.sites[k].data(), &carry_t, dl * d, old_bond, new_bond);
        self.sites[k] = DenseTensor::from_parts(vec![dl, d, new_bond], data);
    }

    /// Marks a loaded model's canonical center; callers must verify the
    /// isometry conditions actually hold.
    pub(crate) fn restore_canonical_center(&mut self, center: usize) {
        debug_assert!(center < self.num_sites());
        self.canonical_center = Some(center);
    }

    /// Replaces sites `k` and `k+1` after a two-site update.
    pub(crate) fn set_pair(
        &mut self,
        k: usize,
        left: DenseTensor,
        right: DenseTensor,
        center: usize,
    ) {
        debug_assert_eq!(left.shape()[2], right.shape()[0]);
        self.sites[k] = left;
        self.sites[k + 1] = right;
        self.canonical_center = Some(center);
    }

    /// Largest deviation of any off-center site from its isometry condition.
    /// Diagnostic used by tests; `None` when the model has no center.
    pub fn isometry_defect(&self) -> Option<f64> {
        let center = self.canonical_center?;
        let mut worst: f64 = 0.0;
        for (k, site) in self.sites.iter().enumerate() {
            let (dl, d, dr) = site_dims(site);
            if k < center {
                // left isometry: sum_{a,s} A[a,s,b] A[a,s,b'] = delta_{b,b'}
                let gram = gram_left(site.data(), dl * d, dr);
                worst = worst.max(identity_defect(&gram, dr));
            } else if k > center {
                // right isometry: sum_{s,b} A[a,s,b] A[a',s,b] = delta_{a,a'}
                let gram = gram_right(site.data(), dl, d * dr);
                worst = worst.max(identity_defect(&gram, dl));
            }
        }
        Some(worst)
    }

    /// Draws `count` configurations by left-to-right ancestral sampling.
    ///
    /// Each site's conditional distribution given the already-fixed prefix is
    /// computed exactly from the right marginal environments, so the chain of
    /// conditionals multiplies to `P(v)`. Deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Configuration> {
        let right_envs = self.right_marginal_envs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut values = Vec::with_capacity(self.num_sites());
                let mut prefix = vec![1.0];
                for (k, site) in self.sites.iter().enumerate() {
                    let weights = step_weights(&prefix, site, &right_envs[k + 1]);
                    let total: f64 = weights.iter().sum();
                    let choice = if total > 0.0 {
                        let r = rng.gen::<f64>() * total;
                        let mut acc = 0.0;
                        let mut chosen = weights.len() - 1;
                        for (i, &w) in weights.iter().enumerate() {
                            acc += w;
                            if r < acc {
                                chosen = i;
                                break;
                            }
                        }
                        chosen
                    } else {
                        0
                    };
                    values.push(choice);
                    prefix = apply_left(&prefix, site, choice);
                }
                Configuration(values)
            })
            .collect()
    }

    /// Exact distribution of feature `prefix.len()` conditioned on the given
    /// prefix values; the per-step conditional used by [`MpsModel::sample`].
    pub fn conditional_distribution(&self, prefix: &[usize]) -> Vec<f64> {
        assert!(prefix.len() < self.num_sites(), "prefix covers every site");
        for (k, &v) in prefix.iter().enumerate() {
            assert!(v < self.physical_dims[k], "prefix value out of range");
        }
        let right_envs = self.right_marginal_envs();
        let mut vec = vec![1.0];
        for (k, &v) in prefix.iter().enumerate() {
            vec = apply_left(&vec, &self.sites[k], v);
        }
        let k = prefix.len();
        let weights = step_weights(&vec, &self.sites[k], &right_envs[k + 1]);
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter().map(|w| w / total).collect()
        } else {
            weights
        }
    }

    /// Marginal environments `W_k = sum over sites k..N of the squared chain`,
    /// one `D_{k-1} x D_{k-1}` matrix per cut; `W_N = [[1]]`.
    fn right_marginal_envs(&self) -> Vec<Vec<f64>> {
        let n = self.num_sites();
        let mut envs = vec![Vec::new(); n + 1];
        envs[n] = vec![1.0];
        for k in (0..n).rev() {
            envs[k] = transfer_right(&envs[k + 1], &self.sites[k], None);
        }
        envs
    }
}

pub(crate) fn site_dims(site: &DenseTensor) -> (usize, usize, usize) {
    let s = site.shape();
    (s[0], s[1], s[2])
}

/// `out[b] = sum_a input[a] * site[a, v, b]`.
pub(crate) fn apply_left(input: &[f64], site: &DenseTensor, v: usize) -> Vec<f64> {
    let (dl, d, dr) = site_dims(site);
    debug_assert_eq!(input.len(), dl);
    let data = site.data();
    let mut out = vec![0.0; dr];
    for (a, &x) in input.iter().enumerate() {
        if x != 0.0 {
            let row = &data[a * d * dr + v * dr..][..dr];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
    }
    out
}

/// `out[a] = sum_b site[a, v, b] * input[b]`.
pub(crate) fn apply_right(input: &[f64], site: &DenseTensor, v: usize) -> Vec<f64> {
    let (dl, d, dr) = site_dims(site);
    debug_assert_eq!(input.len(), dr);
    let data = site.data();
    let mut out = vec![0.0; dl];
    for (a, o) in out.iter_mut().enumerate() {
        let row = &data[a * d * dr + v * dr..][..dr];
        *o = row.iter().zip(input).map(|(w, x)| w * x).sum();
    }
    out
}

/// Transfer step from the left: `E' = sum_v M_v^T E M_v` where `E` is
/// `D_l x D_l` and `M_v = site[:, v, :]`. Passing `Some(v)` keeps a single
/// term, which implements value selectors for conditionals.
pub(crate) fn transfer_left(env: &[f64], site: &DenseTensor, select: Option<usize>) -> Vec<f64> {
    let (dl, d, dr) = site_dims(site);
    debug_assert_eq!(env.len(), dl * dl);
    let data = site.data();
    let mut out = vec![0.0; dr * dr];
    let values: Vec<usize> = match select {
        Some(v) => vec![v],
        None => (0..d).collect(),
    };
    for &v in &values {
        // y = E * M_v  (dl x dr)
        let mut y = vec![0.0; dl * dr];
        for a in 0..dl {
            let y_row = &mut y[a * dr..(a + 1) * dr];
            for a2 in 0..dl {
                let e = env[a * dl + a2];
                if e != 0.0 {
                    let m_row = &data[a2 * d * dr + v * dr..][..dr];
                    for (yv, &mv) in y_row.iter_mut().zip(m_row) {
                        *yv += e * mv;
                    }
                }
            }
        }
        // out += M_v^T * y  (dr x dr)
        for a in 0..dl {
            let m_row = &data[a * d * dr + v * dr..][..dr];
            let y_row = &y[a * dr..(a + 1) * dr];
            for (b, &mv) in m_row.iter().enumerate() {
                if mv != 0.0 {
                    let out_row = &mut out[b * dr..(b + 1) * dr];
                    for (ov, &yv) in out_row.iter_mut().zip(y_row) {
                        *ov += mv * yv;
                    }
                }
            }
        }
    }
    out
}

/// Transfer step from the right: `E' = sum_v M_v E M_v^T` with `E` sized
/// `D_r x D_r` and the result `D_l x D_l`.
pub(crate) fn transfer_right(env: &[f64], site: &DenseTensor, select: Option<usize>) -> Vec<f64> {
    let (dl, d, dr) = site_dims(site);
    debug_assert_eq!(env.len(), dr * dr);
    let data = site.data();
    let mut out = vec![0.0; dl * dl];
    let values: Vec<usize> = match select {
        Some(v) => vec![v],
        None => (0..d).collect(),
    };
    for &v in &values {
        // y = M_v * E  (dl x dr)
        let mut y = vec![0.0; dl * dr];
        for a in 0..dl {
            let m_row = &data[a * d * dr + v * dr..][..dr];
            let y_row = &mut y[a * dr..(a + 1) * dr];
            for (b, &mv) in m_row.iter().enumerate() {
                if mv != 0.0 {
                    let e_row = &env[b * dr..(b + 1) * dr];
                    for (yv, &ev) in y_row.iter_mut().zip(e_row) {
                        *yv += mv * ev;
                    }
                }
            }
        }
        // out += y * M_v^T  (dl x dl)
        for a in 0..dl {
            let y_row = &y[a * dr..(a + 1) * dr];
            let out_row = &mut out[a * dl..(a + 1) * dl];
            for (a2, ov) in out_row.iter_mut().enumerate() {
                let m_row = &data[a2 * d * dr + v * dr..][..dr];
                *ov += y_row.iter().zip(m_row).map(|(yv, mv)| yv * mv).sum::<f64>();
            }
        }
    }
    out
}

/// Unnormalized conditional weights of each value at one site given a prefix
/// vector and the right marginal environment of the next cut.
fn step_weights(prefix: &[f64], site: &DenseTensor, right_env: &[f64]) -> Vec<f64> {
    let (_, d, dr) = site_dims(site);
    (0..d)
        .map(|v| {
            let q = apply_left(prefix, site, v);
            let mut w = 0.0;
            for b in 0..dr {
                if q[b] != 0.0 {
                    let row = &right_env[b * dr..(b + 1) * dr];
                    w += q[b] * row.iter().zip(&q).map(|(e, x)| e * x).sum::<f64>();
                }
            }
            // tiny negative values are contraction round-off
            w.max(0.0)
        })
        .collect()
}

/// Thin QR of a row-major `rows x cols` matrix with the sign convention that
/// the diagonal of R is non-negative, making the factorization unique.
fn thin_qr(data: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mat = DMatrix::from_row_slice(rows, cols, data);
    let qr = mat.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let rank = q.ncols();
    for j in 0..rank {
        if r[(j, j)] < 0.0 {
            for i in 0..rows {
                q[(i, j)] = -q[(i, j)];
            }
            for c in j..cols {
                r[(j, c)] = -r[(j, c)];
            }
        }
    }
    let mut q_out = vec![0.0; rows * rank];
    for i in 0..rows {
        for j in 0..rank {
            q_out[i * rank + j] = q[(i, j)];
        }
    }
    let mut r_out = vec![0.0; rank * cols];
    for i in 0..rank {
        for j in 0..cols {
            r_out[i * cols + j] = r[(i, j)];
        }
    }
    (q_out, r_out)
}

fn gram_left(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    // G = A^T A for a rows x cols matrix
    let mut g = vec![0.0; cols * cols];
    for i in 0..rows {
        let row = &data[i * cols..(i + 1) * cols];
        for (a, &x) in row.iter().enumerate() {
            if x != 0.0 {
                let g_row = &mut g[a * cols..(a + 1) * cols];
                for (gv, &y) in g_row.iter_mut().zip(row) {
                    *gv += x * y;
                }
            }
        }
    }
    g
}

fn gram_right(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    // G = A A^T for a rows x cols matrix
    let mut g = vec![0.0; rows * rows];
    for i in 0..rows {
        let ri = &data[i * cols..(i + 1) * cols];
        for j in 0..rows {
            let rj = &data[j * cols..(j + 1) * cols];
            g[i * rows + j] = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
        }
    }
    g
}

fn identity_defect(gram: &[f64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[i * n + j] - expect).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::oracle::brute_force_oracle;
    use crate::testutil::{all_configurations, random_model};
    use approx::assert_relative_eq;

    #[test]
    fn single_site_amplitude_reads_entry() {
        let site = DenseTensor::new(vec![1, 2, 1], vec![3.0, 4.0]).unwrap();
        let m = MpsModel::from_sites(vec![site]).unwrap();
        assert_eq!(m.amplitude(&Configuration(vec![0])).unwrap(), 3.0);
        assert_eq!(m.amplitude(&Configuration(vec![1])).unwrap(), 4.0);
        assert!(matches!(
            m.amplitude(&Configuration(vec![2])),
            Err(ModelError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn product_state_amplitudes() {
        let a = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![0.0, 1.0]).unwrap();
        let m = MpsModel::from_sites(vec![a, b]).unwrap();
        assert_eq!(m.amplitude(&Configuration(vec![0, 1])).unwrap(), 1.0);
        assert_eq!(m.amplitude(&Configuration(vec![0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn amplitude_matches_enumerated_state_vector() {
        let m = random_model(&[2, 2, 2, 2], 3, 42);
        let summary = brute_force_oracle(&m).unwrap();
        for (i, v) in all_configurations(m.physical_dims()).iter().enumerate() {
            let amp = m.amplitude(v).unwrap();
            assert!((amp - summary.state[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_function_matches_enumeration() {
        for seed in [1u64, 2, 3] {
            let m = random_model(&[2, 3, 2, 2, 3], 4, seed);
            let summary = brute_force_oracle(&m).unwrap();
            assert_relative_eq!(m.partition_function(), summary.partition, max_relative = 1e-10);
        }
    }

    #[test]
    fn partition_function_scales_quadratically() {
        let m = random_model(&[2, 2, 2], 2, 9);
        let z = m.partition_function();
        let mut sites = m.sites().to_vec();
        let scaled: Vec<f64> = sites[1].data().iter().map(|x| 2.0 * x).collect();
        sites[1] = DenseTensor::new(sites[1].shape().to_vec(), scaled).unwrap();
        let m2 = MpsModel::from_sites(sites).unwrap();
        assert_relative_eq!(m2.partition_function(), 4.0 * z, max_relative = 1e-12);
    }

    #[test]
    fn normalized_model_has_unit_partition_function() {
        let m = random_model(&[2, 2, 3], 3, 5).normalized(1);
        assert_relative_eq!(m.partition_function(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_site_probabilities() {
        let site = DenseTensor::new(vec![1, 2, 1], vec![3.0, 4.0]).unwrap();
        let m = MpsModel::from_sites(vec![site]).unwrap();
        assert_relative_eq!(
            m.probability(&Configuration(vec![0])).unwrap(),
            9.0 / 25.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            m.probability(&Configuration(vec![1])).unwrap(),
            16.0 / 25.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = random_model(&[2, 2, 2, 2], 3, 17);
        let total: f64 = all_configurations(m.physical_dims())
            .iter()
            .map(|v| m.probability(v).unwrap())
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn canonicalize_preserves_amplitudes() {
        let m = random_model(&[2, 3, 2, 2], 4, 23);
        for center in 0..4 {
            let c = m.canonicalized(center);
            assert_eq!(c.canonical_center(), Some(center));
            assert!(c.isometry_defect().unwrap() < 1e-10);
            for v in all_configurations(m.physical_dims()) {
                let before = m.amplitude(&v).unwrap();
                let after = c.amplitude(&v).unwrap();
                assert!(
                    (before - after).abs() <= 1e-10 * before.abs().max(1.0),
                    "amplitude changed at {v:?}: {before} vs {after}"
                );
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let m = random_model(&[2, 2, 3], 3, 31).canonicalized(1);
        let again = m.canonicalized(1);
        for (a, b) in m.sites().iter().zip(again.sites()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partition_function_equals_center_norm() {
        let m = random_model(&[2, 2, 2, 3], 3, 12);
        let z = m.partition_function();
        for center in 0..4 {
            let c = m.canonicalized(center);
            let norm = c.site(center).frobenius_norm();
            assert_relative_eq!(norm * norm, z, max_relative = 1e-10);
        }
    }

    #[test]
    fn nll_of_uniform_model_is_ln4() {
        let site = |_: usize| DenseTensor::new(vec![1, 2, 1], vec![0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
        let m = MpsModel::from_sites(vec![site(0), site(1)]).unwrap();
        let rows = vec![Configuration(vec![0, 1]), Configuration(vec![1, 1])];
        assert_relative_eq!(m.nll(&rows).unwrap(), 4.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn nll_of_point_mass_is_zero() {
        let a = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![0.0, 1.0]).unwrap();
        let m = MpsModel::from_sites(vec![a, b]).unwrap();
        let rows = vec![Configuration(vec![0, 1]); 3];
        assert_relative_eq!(m.nll(&rows).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nll_matches_enumeration() {
        let m = random_model(&[2, 2, 3, 2], 3, 77).normalized(0);
        let summary = brute_force_oracle(&m).unwrap();
        let rows = vec![
            Configuration(vec![0, 1, 2, 0]),
            Configuration(vec![1, 0, 0, 1]),
            Configuration(vec![0, 0, 1, 0]),
        ];
        let expect = -rows
            .iter()
            .map(|v| summary.probability_of(v.values()).max(PROB_FLOOR).ln())
            .sum::<f64>()
            / rows.len() as f64;
        assert_relative_eq!(m.nll(&rows).unwrap(), expect, max_relative = 1e-10);
    }

    #[test]
    fn nll_rejects_empty_rows() {
        let m = random_model(&[2, 2], 2, 1);
        assert!(matches!(m.nll(&[]), Err(ModelError::EmptyRows)));
    }

    #[test]
    fn init_random_is_deterministic_and_near_uniform() {
        let a = MpsModel::init_random(&[2, 2], 1, 7).unwrap();
        let b = MpsModel::init_random(&[2, 2], 1, 7).unwrap();
        for (x, y) in a.sites().iter().zip(b.sites()) {
            assert_eq!(x.data(), y.data());
        }
        // near-uniform product state for a handful of fixed seeds, checked by
        // full enumeration
        for seed in [7u64, 19, 101] {
            let m = MpsModel::init_random(&[2, 2], 1, seed).unwrap();
            let summary = brute_force_oracle(&m).unwrap();
            for p in &summary.probabilities {
                assert!((p - 0.25).abs() < 0.05, "seed {seed}: P={p}");
            }
        }
    }

    #[test]
    fn init_random_single_site_normalizes() {
        let m = MpsModel::init_random(&[2], 1, 3).unwrap();
        let p0 = m.probability(&Configuration(vec![0])).unwrap();
        let p1 = m.probability(&Configuration(vec![1])).unwrap();
        assert_relative_eq!(p0 + p1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn init_random_rejects_empty_dims() {
        assert!(matches!(
            MpsModel::init_random(&[], 2, 0),
            Err(ModelError::EmptyModel)
        ));
    }

    #[test]
    fn sampling_point_mass() {
        let a = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![0.0, 1.0]).unwrap();
        let m = MpsModel::from_sites(vec![a, b]).unwrap();
        for v in m.sample(50, 4) {
            assert_eq!(v.values(), &[0, 1]);
        }
    }

    #[test]
    fn sampling_correlated_pair() {
        // psi ~ |00> + |11> via a bond-2 chain
        let left = DenseTensor::new(vec![1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let right = DenseTensor::new(vec![2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = MpsModel::from_sites(vec![left, right]).unwrap().normalized(0);
        let samples = m.sample(100_000, 99);
        let mut count00 = 0usize;
        for v in &samples {
            match v.values() {
                [0, 0] => count00 += 1,
                [1, 1] => {}
                other => panic!("impossible sample {other:?}"),
            }
        }
        let frac = count00 as f64 / samples.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "fraction of 00 was {frac}");
    }

    #[test]
    fn conditional_chain_multiplies_to_probability() {
        let m = random_model(&[2, 3, 2], 3, 55).normalized(0);
        for v in all_configurations(m.physical_dims()) {
            let mut product = 1.0;
            for k in 0..v.len() {
                let cond = m.conditional_distribution(&v.values()[..k]);
                product *= cond[v.values()[k]];
            }
            let p = m.probability(&v).unwrap();
            assert!(
                (product - p).abs() < 1e-10,
                "chain {product} vs joint {p} at {v:?}"
            );
        }
    }

    #[test]
    fn from_sites_validates_structure() {
        let bad_rank = DenseTensor::new(vec![1, 2], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            MpsModel::from_sites(vec![bad_rank]),
            Err(ModelError::SiteRank { .. })
        ));

        let a = DenseTensor::new(vec![1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = DenseTensor::new(vec![3, 2, 1], vec![0.0; 6]).unwrap();
        assert!(matches!(
            MpsModel::from_sites(vec![a, b]),
            Err(ModelError::BondMismatch { .. })
        ));

        let tiny = DenseTensor::new(vec![1, 1, 1], vec![1.0]).unwrap();
        assert!(matches!(
            MpsModel::from_sites(vec![tiny]),
            Err(ModelError::PhysicalDimTooSmall { .. })
        ));
    }
}
