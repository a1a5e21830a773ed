//! Plain-text model files.
//!
//! A saved model is a single self-describing document: format version, site
//! count, physical and bond dimensions, canonical center, the seed it was
//! trained with, the feature vocabulary (as one JSON line, or `none`), and
//! one flat row-major data block per site. Floats are written in Rust's
//! shortest round-trip form, so loading reproduces the model bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::mps::{ModelError, MpsModel};
use crate::pipeline::FeatureVocabulary;
use crate::tensor::DenseTensor;

pub const FORMAT_HEADER: &str = "bornmps model v1";

/// Isometry slack tolerated when trusting a stored canonical center.
const CENTER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A model plus the artifacts needed to reuse it on raw tables.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: MpsModel,
    /// Present when the model was fitted through the table pipeline; needed
    /// to encode new rows and decode samples.
    pub vocabulary: Option<FeatureVocabulary>,
    /// Seed provenance of the run that produced the model.
    pub seed: Option<u64>,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<(), StorageError> {
        write_atomic(path, self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StorageError> {
        let text = fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.model;
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "sites {}", m.num_sites()).unwrap();
        writeln!(out, "physical_dims {}", join_usize(m.physical_dims())).unwrap();
        writeln!(out, "bond_dims {}", join_usize(&m.bond_dims())).unwrap();
        match m.canonical_center() {
            Some(c) => writeln!(out, "canonical_center {c}").unwrap(),
            None => writeln!(out, "canonical_center none").unwrap(),
        }
        match self.seed {
            Some(s) => writeln!(out, "seed {s}").unwrap(),
            None => writeln!(out, "seed none").unwrap(),
        }
        match &self.vocabulary {
            Some(v) => writeln!(
                out,
                "vocabulary {}",
                serde_json::to_string(v).expect("vocabulary serializes")
            )
            .unwrap(),
            None => writeln!(out, "vocabulary none").unwrap(),
        }
        for (k, site) in m.sites().iter().enumerate() {
            let shape = site.shape();
            writeln!(out, "site {k} {} {} {}", shape[0], shape[1], shape[2]).unwrap();
            let mut first = true;
            for value in site.data() {
                if !first {
                    out.push(' ');
                }
                write!(out, "{value}").unwrap();
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, StorageError> {
        let mut lines = text.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), StorageError> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| StorageError::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {expect}"),
                })
        };

        let (line_no, header) = next("format header")?;
        if header.trim() != FORMAT_HEADER {
            return Err(StorageError::Parse {
                line: line_no,
                message: format!("unrecognized header {header:?}"),
            });
        }
        let sites: usize = parse_field(&mut next, "sites")?;
        let physical_dims: Vec<usize> = parse_list(&mut next, "physical_dims")?;
        let bond_dims: Vec<usize> = parse_list(&mut next, "bond_dims")?;
        let center: Option<usize> = parse_optional(&mut next, "canonical_center")?;
        let seed: Option<u64> = parse_optional(&mut next, "seed")?;

        let (line_no, vocab_line) = next("vocabulary")?;
        let vocabulary = match vocab_line.strip_prefix("vocabulary ") {
            Some("none") => None,
            Some(json) => Some(serde_json::from_str(json).map_err(|e| StorageError::Parse {
                line: line_no,
                message: format!("bad vocabulary: {e}"),
            })?),
            None => {
                return Err(StorageError::Parse {
                    line: line_no,
                    message: "expected vocabulary line".into(),
                })
            }
        };

        if physical_dims.len() != sites || bond_dims.len() != sites + 1 {
            return Err(StorageError::Parse {
                line: line_no,
                message: "dimension counts disagree with the site count".into(),
            });
        }

        let mut tensors = Vec::with_capacity(sites);
        for k in 0..sites {
            let (line_no, site_line) = next("site header")?;
            let parts: Vec<&str> = site_line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "site" || parts[1] != k.to_string() {
                return Err(StorageError::Parse {
                    line: line_no,
                    message: format!("expected `site {k} <dl> <d> <dr>`"),
                });
            }
            let dims: Vec<usize> = parts[2..]
                .iter()
                .map(|p| p.parse())
                .collect::<Result<_, _>>()
                .map_err(|e| StorageError::Parse {
                    line: line_no,
                    message: format!("bad site dimensions: {e}"),
                })?;
            let (data_line_no, data_line) = next("site data")?;
            let data: Vec<f64> = data_line
                .split_whitespace()
                .map(|p| p.parse())
                .collect::<Result<_, _>>()
                .map_err(|e| StorageError::Parse {
                    line: data_line_no,
                    message: format!("bad site data: {e}"),
                })?;
            let tensor = DenseTensor::new(dims.clone(), data).map_err(|e| StorageError::Parse {
                line: data_line_no,
                message: e.to_string(),
            })?;
            tensors.push(tensor);
        }

        let mut model = MpsModel::from_sites(tensors)?;
        if model.physical_dims() != physical_dims.as_slice() {
            return Err(StorageError::Parse {
                line: 3,
                message: "physical_dims disagree with the stored sites".into(),
            });
        }
        if model.bond_dims() != bond_dims {
            return Err(StorageError::Parse {
                line: 4,
                message: "bond_dims disagree with the stored sites".into(),
            });
        }
        if let Some(c) = center {
            if c >= model.num_sites() {
                return Err(StorageError::Parse {
                    line: 5,
                    message: format!("canonical center {c} out of range"),
                });
            }
            model.restore_canonical_center(c);
            if model.isometry_defect().unwrap_or(f64::INFINITY) > CENTER_TOLERANCE {
                return Err(StorageError::Parse {
                    line: 5,
                    message: "stored canonical center violates its isometry conditions".into(),
                });
            }
        }
        Ok(Self {
            model,
            vocabulary,
            seed,
        })
    }
}

/// Writes a file through a temporary sibling plus rename, so readers never
/// observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), std::io::Error> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut tmp_name = name.to_os_string();
            tmp_name.push(".tmp");
            path.with_file_name(tmp_name)
        }
        None => path.with_extension("tmp"),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

type NextLine<'a> = dyn FnMut(&str) -> Result<(usize, String), StorageError> + 'a;

fn parse_field<T: std::str::FromStr>(
    next: &mut NextLine<'_>,
    key: &str,
) -> Result<T, StorageError>
where
    T::Err: std::fmt::Display,
{
    let (line, text) = next(key)?;
    let rest = text
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| StorageError::Parse {
            line,
            message: format!("expected `{key} ...`"),
        })?;
    rest.parse().map_err(|e| StorageError::Parse {
        line,
        message: format!("bad {key}: {e}"),
    })
}

fn parse_list<T: std::str::FromStr>(
    next: &mut NextLine<'_>,
    key: &str,
) -> Result<Vec<T>, StorageError>
where
    T::Err: std::fmt::Display,
{
    let (line, text) = next(key)?;
    let rest = text
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| StorageError::Parse {
            line,
            message: format!("expected `{key} ...`"),
        })?;
    rest.split_whitespace()
        .map(|p| {
            p.parse().map_err(|e| StorageError::Parse {
                line,
                message: format!("bad {key}: {e}"),
            })
        })
        .collect()
}

fn parse_optional<T: std::str::FromStr>(
    next: &mut NextLine<'_>,
    key: &str,
) -> Result<Option<T>, StorageError>
where
    T::Err: std::fmt::Display,
{
    let (line, text) = next(key)?;
    let rest = text
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| StorageError::Parse {
            line,
            message: format!("expected `{key} ...`"),
        })?;
    if rest == "none" {
        return Ok(None);
    }
    rest.parse().map(Some).map_err(|e| StorageError::Parse {
        line,
        message: format!("bad {key}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::Configuration;
    use crate::testutil::{all_configurations, random_model};

    #[test]
    fn round_trip_reproduces_amplitudes_exactly() {
        let model = random_model(&[2, 3, 2, 2], 4, 1001).normalized(2);
        let file = ModelFile {
            model: model.clone(),
            vocabulary: None,
            seed: Some(99),
        };
        let text = file.to_text();
        let loaded = ModelFile::from_text(&text).unwrap();
        assert_eq!(loaded.seed, Some(99));
        assert_eq!(loaded.model.canonical_center(), Some(2));
        for v in all_configurations(model.physical_dims()) {
            let a = model.amplitude(&v).unwrap();
            let b = loaded.model.amplitude(&v).unwrap();
            assert_eq!(a, b, "amplitude drifted at {v:?}");
        }
        // identical text on re-save
        assert_eq!(loaded.to_text(), text);
    }

    #[test]
    fn round_trip_keeps_the_vocabulary() {
        let rows = vec![
            vec!["a".to_string(), "x".to_string()],
            vec!["b".to_string(), "x, with a comma".to_string()],
        ];
        let vocab = crate::pipeline::FeatureVocabulary::fit(None, &rows).unwrap();
        let model = crate::mps::MpsModel::init_random(&vocab.physical_dims(), 2, 3).unwrap();
        let file = ModelFile {
            model,
            vocabulary: Some(vocab.clone()),
            seed: None,
        };
        let loaded = ModelFile::from_text(&file.to_text()).unwrap();
        assert_eq!(loaded.vocabulary, Some(vocab));
        assert_eq!(loaded.seed, None);
    }

    #[test]
    fn save_and_load_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.mps");
        let model = random_model(&[2, 2], 2, 4).normalized(0);
        let file = ModelFile {
            model,
            vocabulary: None,
            seed: Some(7),
        };
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        let v = Configuration(vec![1, 0]);
        assert_eq!(
            loaded.model.amplitude(&v).unwrap(),
            file.model.amplitude(&v).unwrap()
        );
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(matches!(
            ModelFile::from_text("not a model"),
            Err(StorageError::Parse { line: 1, .. })
        ));
        let model = random_model(&[2, 2], 2, 4).normalized(0);
        let file = ModelFile {
            model,
            vocabulary: None,
            seed: None,
        };
        let text = file.to_text();
        let broken = text.replace("bond_dims 1", "bond_dims 7");
        assert!(ModelFile::from_text(&broken).is_err());
        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(ModelFile::from_text(&truncated).is_err());
    }

    #[test]
    fn rejects_a_center_that_is_not_canonical() {
        let model = random_model(&[2, 2, 2], 3, 12); // never canonicalized
        let file = ModelFile {
            model,
            vocabulary: None,
            seed: None,
        };
        let text = file.to_text().replace("canonical_center none", "canonical_center 0");
        assert!(matches!(
            ModelFile::from_text(&text),
            Err(StorageError::Parse { .. })
        ));
    }
}
