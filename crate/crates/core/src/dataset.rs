//! Ingests MVTec-AD-style directory trees into query samples and selects the
//! per-category reference image.
//!
//! Layout convention: `<category>/train/good/*` holds normal training
//! images and `<category>/test/<subfolder>/*` the evaluation samples, where
//! the `good` subfolder is normal (label 0) and every other subfolder is
//! anomalous (label 1). Point-cloud and time-series datasets reuse the same
//! tree with `.xyz`/`.csv` files; a directory of frames under a test
//! subfolder is one video sample.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::modality_for_path;
use crate::types::{Label, Modality, QuerySample, SampleSource};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no category directories found under {0}")]
    EmptyDataset(PathBuf),
    #[error("category {0:?} has no usable train/good images")]
    CategoryMissingTrain(String),
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One labelled test file (or frame directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSample {
    pub path: PathBuf,
    pub label: Label,
}

/// Scan result for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub name: String,
    /// Normal training files, lexicographically sorted by file name.
    pub train_normal: Vec<PathBuf>,
    /// Test files with labels, ordered by subfolder then file name.
    pub test_samples: Vec<TestSample>,
    /// Always the first train_normal entry under lexicographic ordering.
    pub reference: PathBuf,
}

/// Deterministic scan of a dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub categories: Vec<CategoryEntry>,
}

/// Returns the category's reference image: the lexicographically first
/// normal training file.
pub fn select_reference(entry: &CategoryEntry) -> &Path {
    &entry.train_normal[0]
}

/// Walks the tree and builds a manifest. Every directory directly under
/// `root` that contains a `train` or `test` subdirectory is a category;
/// hidden files and unrecognized extensions are skipped; files sort
/// lexicographically (byte-wise) within each folder.
pub fn scan_layout(root: &Path) -> Result<DatasetManifest, DatasetError> {
    let mut categories = Vec::new();
    for dir in sorted_dirs(root)? {
        let name = file_name_string(&dir);
        if !dir.join("train").is_dir() && !dir.join("test").is_dir() {
            continue;
        }

        let train_normal = list_samples(&dir.join("train").join("good"))?;
        if train_normal.is_empty() {
            return Err(DatasetError::CategoryMissingTrain(name));
        }

        let mut test_samples = Vec::new();
        let test_dir = dir.join("test");
        if test_dir.is_dir() {
            for sub in sorted_dirs(&test_dir)? {
                let label = if file_name_string(&sub) == "good" {
                    Label::Normal
                } else {
                    Label::Anomalous
                };
                for path in list_samples(&sub)? {
                    test_samples.push(TestSample { path, label });
                }
            }
        }

        let reference = train_normal[0].clone();
        categories.push(CategoryEntry { name, train_normal, test_samples, reference });
    }
    if categories.is_empty() {
        return Err(DatasetError::EmptyDataset(root.to_path_buf()));
    }
    Ok(DatasetManifest { root: root.to_path_buf(), categories })
}

impl DatasetManifest {
    pub fn category(&self, name: &str) -> Option<&CategoryEntry> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Restricts the manifest to the named categories, keeping scan order.
    pub fn filtered(&self, names: &[String]) -> DatasetManifest {
        DatasetManifest {
            root: self.root.clone(),
            categories: self
                .categories
                .iter()
                .filter(|c| names.contains(&c.name))
                .cloned()
                .collect(),
        }
    }

    /// Keeps only the first `k` test samples per test subfolder, for
    /// desk-scale runs and fixture recording.
    pub fn limited(&self, k: usize) -> DatasetManifest {
        let mut manifest = self.clone();
        for category in &mut manifest.categories {
            let mut kept = Vec::new();
            let mut current_dir: Option<PathBuf> = None;
            let mut taken = 0usize;
            for sample in &category.test_samples {
                let dir = sample.path.parent().map(Path::to_path_buf).unwrap_or_default();
                if current_dir.as_ref() != Some(&dir) {
                    current_dir = Some(dir);
                    taken = 0;
                }
                if taken < k {
                    kept.push(sample.clone());
                    taken += 1;
                }
            }
            category.test_samples = kept;
        }
        manifest
    }

    /// Materializes the category's test samples as query samples. Ids are
    /// paths relative to the dataset root, so they are unique within a run.
    pub fn query_samples(&self, category: &CategoryEntry) -> Vec<QuerySample> {
        category
            .test_samples
            .iter()
            .filter_map(|sample| {
                let modality = modality_for_path(&sample.path)?;
                Some(QuerySample {
                    id: self.relative_id(&sample.path),
                    modality,
                    source: SampleSource::Path(sample.path.clone()),
                    category: category.name.clone(),
                    ground_truth: Some(sample.label),
                })
            })
            .collect()
    }

    pub fn relative_id(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace(std::path::MAIN_SEPARATOR, "/")
    }

    /// Structured-text export for audit.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }
}

/// Modality-bearing files (and, for videos, frame directories) in `dir`,
/// lexicographically sorted by file name. Hidden entries are skipped. A
/// missing directory yields an empty list.
fn list_samples(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = read_dir(dir)?
        .into_iter()
        .filter(|p| !file_name_string(p).starts_with('.'))
        .filter(|p| modality_for_path(p).is_some())
        .filter(|p| !p.is_dir() || dir_has_frames(p))
        .collect();
    files.sort_by(|a, b| file_name_string(a).cmp(&file_name_string(b)));
    Ok(files)
}

fn dir_has_frames(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries.flatten().any(|e| {
                let p = e.path();
                p.is_file() && modality_for_path(&p) == Some(Modality::RgbImage)
            })
        })
        .unwrap_or(false)
}

fn sorted_dirs(root: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut dirs: Vec<PathBuf> = read_dir(root)?
        .into_iter()
        .filter(|p| p.is_dir() && !file_name_string(p).starts_with('.'))
        .collect();
    dirs.sort_by(|a, b| file_name_string(a).cmp(&file_name_string(b)));
    Ok(dirs)
}

fn read_dir(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let entries = std::fs::read_dir(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e })?;
    Ok(entries.flatten().map(|e| e.path()).collect())
}

fn file_name_string(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(path: &Path) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, b"x").unwrap();
    }

    fn make_tree(root: &Path) {
        touch(&root.join("bottle/train/good/000.png"));
        touch(&root.join("bottle/train/good/001.png"));
        touch(&root.join("bottle/test/good/000.png"));
        touch(&root.join("bottle/test/broken/000.png"));
    }

    #[test]
    fn synthetic_tree_scans_with_expected_labels() {
        let dir = tempfile::tempdir().unwrap();
        make_tree(dir.path());
        let manifest = scan_layout(dir.path()).unwrap();
        assert_eq!(manifest.categories.len(), 1);
        let bottle = &manifest.categories[0];
        assert_eq!(bottle.name, "bottle");
        assert_eq!(bottle.reference, dir.path().join("bottle/train/good/000.png"));
        let labels: Vec<Label> = bottle.test_samples.iter().map(|s| s.label).collect();
        // "broken" sorts before "good"
        assert_eq!(labels, vec![Label::Anomalous, Label::Normal]);
    }

    #[test]
    fn rescan_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        make_tree(dir.path());
        touch(&dir.path().join("cable/train/good/010.png"));
        touch(&dir.path().join("cable/test/bent/000.png"));
        let a = scan_layout(dir.path()).unwrap();
        let b = scan_layout(dir.path()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reference_is_lexicographic_not_numeric() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("widget/train/good/2.png"));
        touch(&dir.path().join("widget/train/good/10.png"));
        let manifest = scan_layout(dir.path()).unwrap();
        let widget = manifest.category("widget").unwrap();
        assert_eq!(select_reference(widget), dir.path().join("widget/train/good/10.png"));
    }

    #[test]
    fn empty_test_good_keeps_only_positive_samples() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("cap/train/good/000.png"));
        std::fs::create_dir_all(dir.path().join("cap/test/good")).unwrap();
        touch(&dir.path().join("cap/test/dent/000.png"));
        touch(&dir.path().join("cap/test/dent/001.png"));
        let manifest = scan_layout(dir.path()).unwrap();
        let cap = manifest.category("cap").unwrap();
        assert_eq!(cap.test_samples.len(), 2);
        assert!(cap.test_samples.iter().all(|s| s.label == Label::Anomalous));
    }

    #[test]
    fn hidden_and_foreign_files_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        make_tree(dir.path());
        touch(&dir.path().join("bottle/test/good/.hidden.png"));
        touch(&dir.path().join("bottle/test/good/readme.txt"));
        let manifest = scan_layout(dir.path()).unwrap();
        assert_eq!(manifest.categories[0].test_samples.len(), 2);
    }

    #[test]
    fn error_paths() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(scan_layout(dir.path()), Err(DatasetError::EmptyDataset(_))));

        touch(&dir.path().join("ghost/test/broken/000.png"));
        match scan_layout(dir.path()) {
            Err(DatasetError::CategoryMissingTrain(name)) => assert_eq!(name, "ghost"),
            other => panic!("expected CategoryMissingTrain, got {other:?}"),
        }
    }

    #[test]
    fn sample_limit_applies_per_test_folder() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..5 {
            touch(&dir.path().join(format!("w/test/good/{i:03}.png")));
            touch(&dir.path().join(format!("w/test/bad/{i:03}.png")));
        }
        touch(&dir.path().join("w/train/good/000.png"));
        let manifest = scan_layout(dir.path()).unwrap().limited(2);
        let w = manifest.category("w").unwrap();
        assert_eq!(w.test_samples.len(), 4);
    }

    #[test]
    fn query_samples_carry_modality_and_relative_ids() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("sensor/train/good/000.csv"));
        touch(&dir.path().join("sensor/test/good/000.csv"));
        touch(&dir.path().join("sensor/test/spike/000.xyz"));
        let manifest = scan_layout(dir.path()).unwrap();
        let sensor = manifest.category("sensor").unwrap();
        let samples = manifest.query_samples(sensor);
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].id, "sensor/test/good/000.csv");
        assert_eq!(samples[0].modality, Modality::TimeSeries);
        assert_eq!(samples[1].modality, Modality::PointCloud);
        assert_eq!(samples[1].ground_truth, Some(Label::Anomalous));
    }
}
