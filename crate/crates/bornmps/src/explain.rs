//! Reading the model: reduced density matrices and everything built on them.
//!
//! The density matrix of a feature subset is obtained by contracting the
//! squared chain over every other feature. Its diagonal is the subset's
//! marginal distribution; its spectrum gives the Von Neumann entropy
//! `S = -tr(rho ln rho)`, which here measures how strongly a feature is
//! entangled with the rest of the table. Pairwise entropies combine into the
//! mutual information `I(A;B) = S(A) + S(B) - S(AB)`.
//!
//! Inserting a diagonal 0/1 selector at a site instead of summing over it
//! fixes that feature's value, which turns the same contraction into a
//! conditional distribution.
//!
//! Everything here is read-only over the model and gauge invariant.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::mps::{site_dims, transfer_left, transfer_right, Configuration, MpsModel};
use crate::tensor::{matmul, DenseTensor};

/// Probability below which conditioning evidence is treated as impossible.
const EVIDENCE_FLOOR: f64 = 1e-300;

/// Eigenvalues at or below this floor contribute nothing to entropies
/// (the `0 ln 0 = 0` convention).
const EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("evidence may not fix the target feature {feature}")]
    EvidenceOnTarget { feature: usize },
    #[error("evidence fixes feature {feature} twice")]
    DuplicateEvidence { feature: usize },
    #[error("evidence value {value} out of range for feature {feature} (dimension {dim})")]
    EvidenceOutOfRange {
        feature: usize,
        value: usize,
        dim: usize,
    },
    #[error("conditioning evidence has probability below {EVIDENCE_FLOOR:e}")]
    ImpossibleEvidence,
    #[error("{class} row set is empty")]
    EmptyClass { class: &'static str },
    #[error("distribution has {actual} entries, feature has {expected} values")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("empirical distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
}

/// Reduced density matrix of an ordered feature subset: square, symmetric,
/// positive semidefinite, unit trace.
#[derive(Debug, Clone)]
pub struct Rdm {
    pub subset: Vec<usize>,
    /// Square matrix of extent `prod(d_i)` over the subset, row-major with
    /// the subset's value indices ordered as given.
    pub matrix: DenseTensor,
}

impl Rdm {
    pub fn extent(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.extent();
        (0..n).map(|i| self.matrix.data()[i * n + i]).collect()
    }
}

/// Gathers `site[:, v, :]` into a contiguous `dl x dr` matrix.
fn physical_slice(site: &DenseTensor, v: usize) -> Vec<f64> {
    let (dl, d, dr) = site_dims(site);
    let mut out = vec![0.0; dl * dr];
    for a in 0..dl {
        out[a * dr..(a + 1) * dr]
            .copy_from_slice(&site.data()[a * d * dr + v * dr..][..dr]);
    }
    out
}

/// Left marginal environment at site `i`, with evidence sites contracted
/// through their selector instead of summed.
fn left_env(m: &MpsModel, i: usize, evidence: &[(usize, usize)]) -> Vec<f64> {
    let mut env = vec![1.0];
    for k in 0..i {
        let select = evidence.iter().find(|(f, _)| *f == k).map(|&(_, v)| v);
        env = transfer_left(&env, m.site(k), select);
    }
    env
}

/// Right marginal environment at site `i` (see [`left_env`]).
fn right_env(m: &MpsModel, i: usize, evidence: &[(usize, usize)]) -> Vec<f64> {
    let mut env = vec![1.0];
    for k in ((i + 1)..m.num_sites()).rev() {
        let select = evidence.iter().find(|(f, _)| *f == k).map(|&(_, v)| v);
        env = transfer_right(&env, m.site(k), select);
    }
    env
}

/// Single-site density matrix sandwiched between the given environments,
/// not yet normalized.
fn sandwich_site(m: &MpsModel, i: usize, left: &[f64], right: &[f64]) -> Vec<f64> {
    let site = m.site(i);
    let (dl, d, dr) = site_dims(site);
    let slices: Vec<Vec<f64>> = (0..d).map(|v| physical_slice(site, v)).collect();
    let mut rho = vec![0.0; d * d];
    for s in 0..d {
        // g = L * M_s * R, then rho[s, s'] = <g, M_s'>
        let lm = matmul(left, &slices[s], dl, dl, dr);
        let g = matmul(&lm, right, dl, dr, dr);
        for (s2, slice) in slices.iter().enumerate() {
            rho[s * d + s2] = g.iter().zip(slice).map(|(x, y)| x * y).sum();
        }
    }
    rho
}

/// Density matrix of feature `i`: `d_i x d_i`.
pub fn rdm_site(m: &MpsModel, i: usize) -> Rdm {
    assert!(i < m.num_sites(), "feature {i} out of range");
    let left = left_env(m, i, &[]);
    let right = right_env(m, i, &[]);
    let mut rho = sandwich_site(m, i, &left, &right);
    let d = m.physical_dims()[i];
    normalize_trace(&mut rho, d);
    Rdm {
        subset: vec![i],
        matrix: DenseTensor::from_parts(vec![d, d], rho),
    }
}

/// Marginal distribution of feature `i`: the diagonal of its density matrix.
pub fn marginal(m: &MpsModel, i: usize) -> Vec<f64> {
    rdm_site(m, i).diagonal()
}

/// Density matrix of the ordered pair `(i, j)` with `i < j`; extent
/// `d_i * d_j`, row index `s_i * d_j + s_j`. Sites strictly between the two
/// are traced through transfer steps.
pub fn rdm_pair(m: &MpsModel, i: usize, j: usize) -> Rdm {
    assert!(i < j && j < m.num_sites(), "need i < j < N");
    let left = left_env(m, i, &[]);
    let right = right_env(m, j, &[]);
    let site_i = m.site(i);
    let site_j = m.site(j);
    let (dl, di, dm) = site_dims(site_i);
    let (_, dj, dr) = site_dims(site_j);

    // One open-index block per (s_i, s_i'): C = M_si^T * L * M_si', carried
    // through the intermediate transfer matrices.
    let slices_i: Vec<Vec<f64>> = (0..di).map(|v| physical_slice(site_i, v)).collect();
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(di * di);
    for si in 0..di {
        let lt = transpose(&slices_i[si], dl, dm); // M_si^T, dm x dl
        let ltl = matmul(&lt, &left, dm, dl, dl);
        for si2 in 0..di {
            blocks.push(matmul(&ltl, &slices_i[si2], dm, dl, dm));
        }
    }
    for k in (i + 1)..j {
        for block in &mut blocks {
            *block = transfer_left(block, m.site(k), None);
        }
    }

    let slices_j: Vec<Vec<f64>> = (0..dj).map(|v| physical_slice(site_j, v)).collect();
    let ext = di * dj;
    let mut rho = vec![0.0; ext * ext];
    let dmid = m.site(j).shape()[0];
    for si in 0..di {
        for si2 in 0..di {
            let block = &blocks[si * di + si2];
            for sj in 0..dj {
                // g = C^T * M_sj * R, then entry = <g, M_sj'>
                let ct = transpose(block, dmid, dmid);
                let cm = matmul(&ct, &slices_j[sj], dmid, dmid, dr);
                let g = matmul(&cm, &right, dmid, dr, dr);
                for (sj2, slice) in slices_j.iter().enumerate() {
                    let value: f64 = g.iter().zip(slice).map(|(x, y)| x * y).sum();
                    rho[(si * dj + sj) * ext + (si2 * dj + sj2)] = value;
                }
            }
        }
    }
    normalize_trace(&mut rho, ext);
    Rdm {
        subset: vec![i, j],
        matrix: DenseTensor::from_parts(vec![ext, ext], rho),
    }
}

/// Density matrix of feature `i` conditioned on fixed values at other sites.
///
/// Each `(feature, value)` pair inserts a diagonal selector (1 at the value,
/// 0 elsewhere) at that site; the result is renormalized to unit trace, so
/// its diagonal is `P(v_i | evidence)`.
pub fn conditional_rdm(
    m: &MpsModel,
    i: usize,
    evidence: &[(usize, usize)],
) -> Result<Rdm, ExplainError> {
    assert!(i < m.num_sites(), "feature {i} out of range");
    for (pos, &(feature, value)) in evidence.iter().enumerate() {
        if feature == i {
            return Err(ExplainError::EvidenceOnTarget { feature });
        }
        if evidence[..pos].iter().any(|(f, _)| *f == feature) {
            return Err(ExplainError::DuplicateEvidence { feature });
        }
        let dim = *m
            .physical_dims()
            .get(feature)
            .ok_or(ExplainError::EvidenceOutOfRange {
                feature,
                value,
                dim: 0,
            })?;
        if value >= dim {
            return Err(ExplainError::EvidenceOutOfRange {
                feature,
                value,
                dim,
            });
        }
    }
    let left = left_env(m, i, evidence);
    let right = right_env(m, i, evidence);
    let mut rho = sandwich_site(m, i, &left, &right);
    let d = m.physical_dims()[i];
    let trace: f64 = (0..d).map(|s| rho[s * d + s]).sum();
    if trace / m.partition_function() < EVIDENCE_FLOOR {
        return Err(ExplainError::ImpossibleEvidence);
    }
    for x in &mut rho {
        *x /= trace;
    }
    Ok(Rdm {
        subset: vec![i],
        matrix: DenseTensor::from_parts(vec![d, d], rho),
    })
}

/// `S = -sum lambda ln lambda` over the spectrum, natural log, eigenvalues
/// floored at 1e-12.
pub fn von_neumann_entropy(rho: &Rdm) -> f64 {
    let n = rho.extent();
    let mat = DMatrix::from_row_slice(n, n, rho.matrix.data());
    let eigen = SymmetricEigen::new(mat);
    -eigen
        .eigenvalues
        .iter()
        .filter(|&&l| l > EIGENVALUE_FLOOR)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Von Neumann entropy of every feature, in feature order.
pub fn entropy_profile(m: &MpsModel) -> Vec<f64> {
    (0..m.num_sites())
        .map(|i| von_neumann_entropy(&rdm_site(m, i)))
        .collect()
}

/// `I(i; j) = S(i) + S(j) - S(i, j)`, symmetric in its arguments.
pub fn mutual_information(m: &MpsModel, i: usize, j: usize) -> f64 {
    assert!(i != j, "mutual information needs two distinct features");
    let (a, b) = (i.min(j), i.max(j));
    let s_a = von_neumann_entropy(&rdm_site(m, a));
    let s_b = von_neumann_entropy(&rdm_site(m, b));
    let s_ab = von_neumann_entropy(&rdm_pair(m, a, b));
    s_a + s_b - s_ab
}

/// Full mutual-information matrix, zero on the diagonal by convention.
pub fn mi_matrix(m: &MpsModel) -> DenseTensor {
    let n = m.num_sites();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values = crate::parallel::map_items(&pairs, |&(i, j)| mutual_information(m, i, j));
    let mut matrix = vec![0.0; n * n];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        matrix[i * n + j] = v;
        matrix[j * n + i] = v;
    }
    DenseTensor::from_parts(vec![n, n], matrix)
}

/// Mean model probability of each feature's observed values, per class.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportanceTable {
    /// Mean marginal probability of the observed value per feature, over
    /// benign rows.
    pub benign_mean: Vec<f64>,
    /// Same, over attack rows.
    pub attack_mean: Vec<f64>,
    /// Product of the benign means across features.
    pub benign_total: f64,
    /// Product of the attack means across features.
    pub attack_total: f64,
}

/// Averages the per-feature marginal probabilities of the observed values
/// over each class of rows.
pub fn feature_importance(
    m: &MpsModel,
    benign_rows: &[Configuration],
    attack_rows: &[Configuration],
) -> Result<FeatureImportanceTable, ExplainError> {
    if benign_rows.is_empty() {
        return Err(ExplainError::EmptyClass { class: "benign" });
    }
    if attack_rows.is_empty() {
        return Err(ExplainError::EmptyClass { class: "attack" });
    }
    let n = m.num_sites();
    let marginals: Vec<Vec<f64>> = (0..n).map(|i| marginal(m, i)).collect();
    let mean_for = |rows: &[Configuration]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                rows.iter()
                    .map(|row| marginals[i][row.values()[i]])
                    .sum::<f64>()
                    / rows.len() as f64
            })
            .collect()
    };
    let benign_mean = mean_for(benign_rows);
    let attack_mean = mean_for(attack_rows);
    let benign_total = benign_mean.iter().product();
    let attack_total = attack_mean.iter().product();
    Ok(FeatureImportanceTable {
        benign_mean,
        attack_mean,
        benign_total,
        attack_total,
    })
}

/// Hellinger distance between an empirical distribution and the model's
/// marginal for feature `i`: `(1/sqrt 2) * sqrt(sum_k (sqrt e_k - sqrt m_k)^2)`,
/// bounded in `[0, 1]`.
pub fn distribution_discrepancy(
    m: &MpsModel,
    i: usize,
    empirical: &[f64],
) -> Result<f64, ExplainError> {
    let d = m.physical_dims()[i];
    if empirical.len() != d {
        return Err(ExplainError::LengthMismatch {
            expected: d,
            actual: empirical.len(),
        });
    }
    let sum: f64 = empirical.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ExplainError::NotNormalized { sum });
    }
    let model = marginal(m, i);
    let sq_sum: f64 = empirical
        .iter()
        .zip(&model)
        .map(|(e, p)| {
            let diff = e.max(0.0).sqrt() - p.max(0.0).sqrt();
            diff * diff
        })
        .sum();
    Ok((0.5 * sq_sum).sqrt())
}

fn normalize_trace(rho: &mut [f64], n: usize) {
    let trace: f64 = (0..n).map(|i| rho[i * n + i]).sum();
    if trace != 0.0 {
        for x in rho.iter_mut() {
            *x /= trace;
        }
    }
}

fn transpose(mat: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = mat[i * cols + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::oracle::brute_force_oracle;
    use crate::testutil::{all_configurations, random_model};
    use approx::assert_relative_eq;

    fn product_model() -> MpsModel {
        // site 0 amplitudes (0.6, 0.8); site 1 amplitudes (1, 0)
        let a = DenseTensor::new(vec![1, 2, 1], vec![0.6, 0.8]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        MpsModel::from_sites(vec![a, b]).unwrap()
    }

    fn correlated_pair() -> MpsModel {
        let left = DenseTensor::new(vec![1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let right = DenseTensor::new(vec![2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        MpsModel::from_sites(vec![left, right])
            .unwrap()
            .normalized(0)
    }

    fn assert_rdm_invariants(rdm: &Rdm) {
        let n = rdm.extent();
        let data = rdm.matrix.data();
        let trace: f64 = (0..n).map(|i| data[i * n + i]).sum();
        assert_relative_eq!(trace, 1.0, epsilon = 1e-10);
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (data[i * n + j] - data[j * n + i]).abs() < 1e-10,
                    "not symmetric at ({i},{j})"
                );
            }
        }
        let mat = DMatrix::from_row_slice(n, n, data);
        let eigen = SymmetricEigen::new(mat);
        for &l in eigen.eigenvalues.iter() {
            assert!(l >= -1e-10, "negative eigenvalue {l}");
        }
    }

    #[test]
    fn product_state_site_rdm_diagonal_is_the_marginal() {
        // the state is pure, so the matrix is the rank-1 projector onto
        // (0.6, 0.8) and its diagonal carries the value probabilities
        let rdm = rdm_site(&product_model(), 0);
        assert_relative_eq!(rdm.matrix.at(&[0, 0]), 0.36, epsilon = 1e-12);
        assert_relative_eq!(rdm.matrix.at(&[1, 1]), 0.64, epsilon = 1e-12);
        assert_relative_eq!(rdm.matrix.at(&[0, 1]), 0.48, epsilon = 1e-12);
        assert_relative_eq!(von_neumann_entropy(&rdm), 0.0, epsilon = 1e-10);
        assert_rdm_invariants(&rdm);
    }

    #[test]
    fn correlated_pair_site_rdm_is_maximally_mixed() {
        let m = correlated_pair();
        for i in 0..2 {
            let rdm = rdm_site(&m, i);
            assert_relative_eq!(rdm.matrix.at(&[0, 0]), 0.5, epsilon = 1e-10);
            assert_relative_eq!(rdm.matrix.at(&[1, 1]), 0.5, epsilon = 1e-10);
            assert!(rdm.matrix.at(&[0, 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn site_rdm_matches_enumerated_partial_trace() {
        let m = random_model(&[2, 3, 2, 2, 3], 4, 71);
        let summary = brute_force_oracle(&m).unwrap();
        for i in 0..m.num_sites() {
            let rdm = rdm_site(&m, i);
            assert_rdm_invariants(&rdm);
            for (a, b) in rdm.matrix.data().iter().zip(&summary.site_rdms[i]) {
                assert!((a - b).abs() < 1e-10, "site {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn product_state_pair_rdm_is_kronecker_product() {
        let m = product_model();
        let pair = rdm_pair(&m, 0, 1);
        let r0 = rdm_site(&m, 0);
        let r1 = rdm_site(&m, 1);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let expect = r0.matrix.at(&[a, c]) * r1.matrix.at(&[b, d]);
                        let got = pair.matrix.at(&[a * 2 + b, c * 2 + d]);
                        assert!((got - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn whole_system_pair_rdm_is_pure() {
        let m = correlated_pair();
        let pair = rdm_pair(&m, 0, 1);
        assert_rdm_invariants(&pair);
        assert_relative_eq!(von_neumann_entropy(&pair), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn pair_rdm_matches_enumerated_partial_trace() {
        let m = random_model(&[2, 2, 3, 2, 2, 2], 4, 99);
        let summary = brute_force_oracle(&m).unwrap();
        for &(i, j) in &[(1usize, 4usize), (0, 2), (2, 5), (0, 5)] {
            let rdm = rdm_pair(&m, i, j);
            assert_rdm_invariants(&rdm);
            for (a, b) in rdm.matrix.data().iter().zip(&summary.pair(i, j).rdm) {
                assert!((a - b).abs() < 1e-10, "pair ({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn marginal_examples() {
        let half = 0.5f64.sqrt();
        let site = DenseTensor::new(vec![1, 2, 1], vec![half, half]).unwrap();
        let uniform = MpsModel::from_sites(vec![site.clone(), site]).unwrap();
        let m0 = marginal(&uniform, 0);
        assert_relative_eq!(m0[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(m0[1], 0.5, epsilon = 1e-12);

        let point = DenseTensor::new(vec![1, 3, 1], vec![0.0, 0.0, 1.0]).unwrap();
        let other = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let deterministic = MpsModel::from_sites(vec![point, other]).unwrap();
        assert_eq!(marginal(&deterministic, 0), vec![0.0, 0.0, 1.0]);

        let m = random_model(&[2, 3, 2, 2], 3, 40);
        let summary = brute_force_oracle(&m).unwrap();
        for i in 0..m.num_sites() {
            for (a, b) in marginal(&m, i).iter().zip(&summary.site_marginals[i]) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conditioning_a_product_state_changes_nothing() {
        let m = product_model();
        let unconditioned = rdm_site(&m, 0);
        let conditioned = conditional_rdm(&m, 0, &[(1, 0)]).unwrap();
        for (a, b) in conditioned
            .matrix
            .data()
            .iter()
            .zip(unconditioned.matrix.data())
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn conditioning_a_correlated_pair_pins_the_other_site() {
        let m = correlated_pair();
        let rdm = conditional_rdm(&m, 0, &[(1, 0)]).unwrap();
        assert_relative_eq!(rdm.matrix.at(&[0, 0]), 1.0, epsilon = 1e-10);
        assert!(rdm.matrix.at(&[1, 1]).abs() < 1e-10);
    }

    #[test]
    fn conditional_matches_bayes_rule_on_enumeration() {
        let m = random_model(&[2, 2, 3, 2, 2], 4, 17);
        let summary = brute_force_oracle(&m).unwrap();
        let evidence = [(1usize, 1usize), (3, 0)];
        let target = 2;
        let rdm = conditional_rdm(&m, target, &evidence).unwrap();
        assert_rdm_invariants(&rdm);
        // P(v_2 | evidence) from the enumerated joint
        let dims = m.physical_dims();
        let mut joint = vec![0.0; dims[target]];
        for v in all_configurations(dims) {
            if evidence.iter().all(|&(f, val)| v.values()[f] == val) {
                joint[v.values()[target]] += summary.probability_of(v.values());
            }
        }
        let total: f64 = joint.iter().sum();
        for (got, expect) in rdm.diagonal().iter().zip(joint.iter().map(|p| p / total)) {
            assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
        }
    }

    #[test]
    fn certain_evidence_equals_unconditioned() {
        // feature 1 is deterministic, so conditioning on its only outcome is
        // a no-op
        let a = DenseTensor::new(vec![1, 2, 1], vec![0.6, 0.8]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let m = MpsModel::from_sites(vec![a, b]).unwrap();
        let base = rdm_site(&m, 0);
        let cond = conditional_rdm(&m, 0, &[(1, 0)]).unwrap();
        for (x, y) in cond.matrix.data().iter().zip(base.matrix.data()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn impossible_evidence_is_an_error() {
        let a = DenseTensor::new(vec![1, 2, 1], vec![0.6, 0.8]).unwrap();
        let b = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let m = MpsModel::from_sites(vec![a, b]).unwrap();
        assert!(matches!(
            conditional_rdm(&m, 0, &[(1, 1)]),
            Err(ExplainError::ImpossibleEvidence)
        ));
        assert!(matches!(
            conditional_rdm(&m, 0, &[(0, 0)]),
            Err(ExplainError::EvidenceOnTarget { feature: 0 })
        ));
        assert!(matches!(
            conditional_rdm(&m, 0, &[(1, 0), (1, 0)]),
            Err(ExplainError::DuplicateEvidence { feature: 1 })
        ));
        assert!(matches!(
            conditional_rdm(&m, 0, &[(1, 9)]),
            Err(ExplainError::EvidenceOutOfRange { .. })
        ));
    }

    #[test]
    fn entropy_of_pure_and_mixed_states() {
        let pure = Rdm {
            subset: vec![0],
            matrix: DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
        };
        assert_relative_eq!(von_neumann_entropy(&pure), 0.0, epsilon = 1e-12);
        let mixed = Rdm {
            subset: vec![0],
            matrix: DenseTensor::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
        };
        assert_relative_eq!(von_neumann_entropy(&mixed), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn entropy_matches_enumerated_spectrum() {
        let m = random_model(&[2, 2, 3, 2], 4, 123);
        let summary = brute_force_oracle(&m).unwrap();
        for i in 0..m.num_sites() {
            let s = von_neumann_entropy(&rdm_site(&m, i));
            assert!((s - summary.site_entropies[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_profile_of_product_state_is_zero() {
        for s in entropy_profile(&product_model()) {
            assert!(s.abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_profile_respects_rank_bound() {
        let m = random_model(&[2, 3, 2, 2], 4, 7);
        let profile = entropy_profile(&m);
        for (i, s) in profile.iter().enumerate() {
            let site = m.site(i);
            let bound = (m.physical_dims()[i].min(site.shape()[0] * site.shape()[2]) as f64).ln();
            assert!(*s <= bound + 1e-9, "site {i}: {s} > {bound}");
        }
    }

    #[test]
    fn entropy_profile_is_gauge_invariant() {
        let m = random_model(&[2, 2, 2, 3], 4, 51);
        let base = entropy_profile(&m);
        for center in 0..m.num_sites() {
            let gauged = m.canonicalized(center);
            for (a, b) in entropy_profile(&gauged).iter().zip(&base) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mutual_information_closed_forms() {
        for (i, j) in [(0usize, 1usize), (1, 0)] {
            assert!(mutual_information(&product_model(), i, j).abs() < 1e-9);
        }
        assert_relative_eq!(
            mutual_information(&correlated_pair(), 0, 1),
            2.0 * 2.0f64.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn mutual_information_matches_enumeration() {
        let m = random_model(&[2, 3, 2, 2, 2], 4, 29);
        let summary = brute_force_oracle(&m).unwrap();
        for i in 0..m.num_sites() {
            for j in 0..m.num_sites() {
                if i == j {
                    continue;
                }
                let mi = mutual_information(&m, i, j);
                assert!(mi >= -1e-9);
                assert!((mi - summary.mi_quantum[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mi_matrix_is_exactly_symmetric_with_zero_diagonal() {
        let m = random_model(&[2, 2, 3, 2], 3, 63);
        let mi = mi_matrix(&m);
        let n = m.num_sites();
        for i in 0..n {
            assert_eq!(mi.at(&[i, i]), 0.0);
            for j in 0..n {
                assert_eq!(mi.at(&[i, j]), mi.at(&[j, i]));
            }
        }
    }

    #[test]
    fn feature_importance_uniform_model() {
        let half = 0.5f64.sqrt();
        let site = DenseTensor::new(vec![1, 2, 1], vec![half, half]).unwrap();
        let m = MpsModel::from_sites(vec![site.clone(), site.clone(), site]).unwrap();
        let rows = vec![
            Configuration(vec![0, 1, 0]),
            Configuration(vec![1, 1, 1]),
        ];
        let table = feature_importance(&m, &rows, &rows).unwrap();
        assert_eq!(table.benign_mean, table.attack_mean);
        for mean in &table.benign_mean {
            assert_relative_eq!(*mean, 0.5, epsilon = 1e-12);
        }
        assert_relative_eq!(table.benign_total, 0.125, epsilon = 1e-12);
        assert!(matches!(
            feature_importance(&m, &[], &rows),
            Err(ExplainError::EmptyClass { class: "benign" })
        ));
    }

    #[test]
    fn hellinger_distance_examples() {
        let m = product_model();
        // identical distributions
        let zero = distribution_discrepancy(&m, 0, &[0.36, 0.64]).unwrap();
        assert!(zero.abs() < 1e-12);
        // disjoint support on a point-mass feature
        let point = DenseTensor::new(vec![1, 2, 1], vec![0.0, 1.0]).unwrap();
        let trivial = DenseTensor::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let pm = MpsModel::from_sites(vec![point, trivial]).unwrap();
        let one = distribution_discrepancy(&pm, 0, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(one, 1.0, epsilon = 1e-12);
        // uniform empirical against the (0.36, 0.64) marginal; value computed
        // by direct evaluation of the formula
        let h = distribution_discrepancy(&m, 0, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(h, 0.100252213631, epsilon = 1e-9);

        assert!(matches!(
            distribution_discrepancy(&m, 0, &[1.0]),
            Err(ExplainError::LengthMismatch { .. })
        ));
        assert!(matches!(
            distribution_discrepancy(&m, 0, &[0.9, 0.2]),
            Err(ExplainError::NotNormalized { .. })
        ));
    }

    #[test]
    fn rdm_invariants_hold_on_random_models() {
        for seed in [3u64, 14, 159] {
            let m = random_model(&[2, 3, 2, 2], 4, seed);
            for i in 0..m.num_sites() {
                assert_rdm_invariants(&rdm_site(&m, i));
            }
            assert_rdm_invariants(&rdm_pair(&m, 0, 3));
            assert_rdm_invariants(&conditional_rdm(&m, 2, &[(0, 1)]).unwrap());
        }
    }
}
