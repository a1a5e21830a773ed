//! Helpers shared by the unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mps::{Configuration, MpsModel};
use crate::tensor::DenseTensor;

/// Random signed model with bond dimensions drawn up to `max_bond`, capped by
/// what each cut can carry.
pub(crate) fn random_model(dims: &[usize], max_bond: usize, seed: u64) -> MpsModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.len();
    let mut bonds = vec![1usize; n + 1];
    for k in 1..n {
        let left: usize = dims[..k].iter().product();
        let right: usize = dims[k..].iter().product();
        let cap = left.min(right).min(max_bond).max(1);
        bonds[k] = rng.gen_range(1..=cap);
    }
    let sites = (0..n)
        .map(|k| {
            let len = bonds[k] * dims[k] * bonds[k + 1];
            let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            DenseTensor::new(vec![bonds[k], dims[k], bonds[k + 1]], data).unwrap()
        })
        .collect();
    MpsModel::from_sites(sites).unwrap()
}

/// Every configuration of the given dimensions in row-major order.
pub(crate) fn all_configurations(dims: &[usize]) -> Vec<Configuration> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut v = vec![0usize; dims.len()];
            for i in (0..dims.len()).rev() {
                v[i] = flat % dims[i];
                flat /= dims[i];
            }
            Configuration(v)
        })
        .collect()
}
