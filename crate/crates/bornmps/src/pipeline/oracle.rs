//! Exhaustive-enumeration ground truth for small models.
//!
//! Everything here is computed by explicit loops over the full configuration
//! space: the state vector is rebuilt by direct summation, reduced density
//! matrices by explicit partial traces of its outer product, and entropies
//! from a local Jacobi eigensolver. None of it shares code with the
//! transfer-matrix or environment contractions it is used to check.

use crate::mps::MpsModel;
use crate::pipeline::PipelineError;

/// Largest configuration space the oracle will enumerate.
pub const MAX_STATES: usize = 1 << 20;

/// Exact summary of a small model, obtained by enumeration.
#[derive(Debug, Clone)]
pub struct ExactSummary {
    pub dims: Vec<usize>,
    /// Normalizer `Z`, the plain sum of squared amplitudes.
    pub partition: f64,
    /// Raw amplitudes in row-major configuration order.
    pub state: Vec<f64>,
    /// Exact probabilities, same order.
    pub probabilities: Vec<f64>,
    pub site_marginals: Vec<Vec<f64>>,
    /// Row-major `d_i x d_i` density matrices per feature.
    pub site_rdms: Vec<Vec<f64>>,
    pub site_entropies: Vec<f64>,
    /// One entry per feature pair `i < j`.
    pub pairs: Vec<PairSummary>,
    /// Classical mutual information of the diagonal joint distributions.
    pub mi_classical: Vec<Vec<f64>>,
    /// Entropy-based mutual information `S_i + S_j - S_ij`.
    pub mi_quantum: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PairSummary {
    pub features: (usize, usize),
    /// Joint distribution, row-major `d_i x d_j`.
    pub joint: Vec<f64>,
    /// Density matrix of the pair, extent `d_i * d_j`.
    pub rdm: Vec<f64>,
    pub entropy: f64,
}

impl ExactSummary {
    pub fn config_index(&self, values: &[usize]) -> usize {
        assert_eq!(values.len(), self.dims.len());
        let mut idx = 0;
        for (&v, &d) in values.iter().zip(&self.dims) {
            debug_assert!(v < d);
            idx = idx * d + v;
        }
        idx
    }

    pub fn probability_of(&self, values: &[usize]) -> f64 {
        self.probabilities[self.config_index(values)]
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairSummary {
        let key = (i.min(j), i.max(j));
        self.pairs
            .iter()
            .find(|p| p.features == key)
            .expect("pair exists for every i != j")
    }
}

/// Enumerates every configuration of `m` and summarizes the exact model.
///
/// Fails when the configuration space exceeds [`MAX_STATES`].
pub fn brute_force_oracle(m: &MpsModel) -> Result<ExactSummary, PipelineError> {
    let dims = m.physical_dims().to_vec();
    let n = dims.len();
    let mut total = 1usize;
    for &d in &dims {
        total = total.saturating_mul(d);
        if total > MAX_STATES {
            return Err(PipelineError::StateSpaceTooLarge {
                limit: MAX_STATES,
            });
        }
    }

    // Rebuild the full state vector by direct summation over bond indices.
    // amps is indexed by (prefix configuration, current bond).
    let mut amps = vec![1.0f64];
    let mut configs = 1usize;
    for site in m.sites() {
        let shape = site.shape();
        let (dl, d, dr) = (shape[0], shape[1], shape[2]);
        let data = site.data();
        let mut next = vec![0.0; configs * d * dr];
        for c in 0..configs {
            for b in 0..dl {
                let x = amps[c * dl + b];
                if x == 0.0 {
                    continue;
                }
                for s in 0..d {
                    for (b2, slot) in next[(c * d + s) * dr..(c * d + s + 1) * dr]
                        .iter_mut()
                        .enumerate()
                    {
                        *slot += x * data[b * d * dr + s * dr + b2];
                    }
                }
            }
        }
        amps = next;
        configs *= d;
    }
    debug_assert_eq!(amps.len(), total);
    let state = amps;

    let partition: f64 = state.iter().map(|a| a * a).sum();
    let probabilities: Vec<f64> = state.iter().map(|a| a * a / partition).collect();

    let strides = {
        let mut s = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };

    let mut site_marginals = Vec::with_capacity(n);
    let mut site_rdms = Vec::with_capacity(n);
    let mut site_entropies = Vec::with_capacity(n);
    for i in 0..n {
        let d = dims[i];
        let stride = strides[i];
        let mut marginal = vec![0.0; d];
        let mut rdm = vec![0.0; d * d];
        for (idx, &a) in state.iter().enumerate() {
            let s = (idx / stride) % d;
            marginal[s] += probabilities[idx];
            if a == 0.0 {
                continue;
            }
            let base = idx - s * stride;
            for s2 in 0..d {
                rdm[s * d + s2] += a * state[base + s2 * stride];
            }
        }
        for x in &mut rdm {
            *x /= partition;
        }
        let entropy = entropy_of_spectrum(&jacobi_eigenvalues(rdm.clone(), d));
        site_marginals.push(marginal);
        site_rdms.push(rdm);
        site_entropies.push(entropy);
    }

    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (di, dj) = (dims[i], dims[j]);
            let ext = di * dj;
            let mut joint = vec![0.0; ext];
            let mut rdm = vec![0.0; ext * ext];
            for (idx, &a) in state.iter().enumerate() {
                let si = (idx / strides[i]) % di;
                let sj = (idx / strides[j]) % dj;
                joint[si * dj + sj] += probabilities[idx];
                if a == 0.0 {
                    continue;
                }
                let base = idx - si * strides[i] - sj * strides[j];
                let row = (si * dj + sj) * ext;
                for ti in 0..di {
                    for tj in 0..dj {
                        rdm[row + ti * dj + tj] +=
                            a * state[base + ti * strides[i] + tj * strides[j]];
                    }
                }
            }
            for x in &mut rdm {
                *x /= partition;
            }
            let entropy = entropy_of_spectrum(&jacobi_eigenvalues(rdm.clone(), ext));
            pairs.push(PairSummary {
                features: (i, j),
                joint,
                rdm,
                entropy,
            });
        }
    }

    let mut mi_classical = vec![vec![0.0; n]; n];
    let mut mi_quantum = vec![vec![0.0; n]; n];
    for pair in &pairs {
        let (i, j) = pair.features;
        let (di, dj) = (dims[i], dims[j]);
        let mut classical = 0.0;
        for x in 0..di {
            for y in 0..dj {
                let pxy = pair.joint[x * dj + y];
                if pxy > 0.0 {
                    classical += pxy * (pxy / (site_marginals[i][x] * site_marginals[j][y])).ln();
                }
            }
        }
        let quantum = site_entropies[i] + site_entropies[j] - pair.entropy;
        mi_classical[i][j] = classical;
        mi_classical[j][i] = classical;
        mi_quantum[i][j] = quantum;
        mi_quantum[j][i] = quantum;
    }

    Ok(ExactSummary {
        dims,
        partition,
        state,
        probabilities,
        site_marginals,
        site_rdms,
        site_entropies,
        pairs,
        mi_classical,
        mi_quantum,
    })
}

fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l > 1e-12)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric row-major matrix.
fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    if n <= 1 {
        return a;
    }
    for _ in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-26 {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
