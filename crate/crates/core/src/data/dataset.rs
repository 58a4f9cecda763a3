use std::fs;
use std::path::{Path, PathBuf};

use super::augment::resize;
use super::image::Image;
use super::rng::Rng;
use crate::error::{Error, Result};
use crate::nn::fnv1a;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub image: Image,
    pub label: usize,
    /// Stable identifier, e.g. `class/file.ppm` or `synth/c2/17`.
    pub source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    items: Vec<Item>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(items: Vec<Item>, class_names: Vec<String>) -> Result<Self> {
        if class_names.is_empty() {
            return Err(Error::Dataset("a dataset needs at least one class".into()));
        }
        let size = items.first().map(|i| (i.image.height(), i.image.width()));
        for item in &items {
            if item.label >= class_names.len() {
                return Err(Error::Dataset(format!(
                    "{}: label {} out of range for {} classes",
                    item.source,
                    item.label,
                    class_names.len()
                )));
            }
            if Some((item.image.height(), item.image.width())) != size {
                return Err(Error::Dataset(format!(
                    "{}: image is {}x{}, dataset images are {:?}",
                    item.source,
                    item.image.height(),
                    item.image.width(),
                    size.unwrap_or_default()
                )));
            }
        }
        Ok(Self { items, class_names })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn items_mut(&mut self) -> &mut [Item] {
        &mut self.items
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `(H, W)` shared by every image, `None` when empty.
    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.items
            .first()
            .map(|i| (i.image.height(), i.image.width()))
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for item in &self.items {
            counts[item.label] += 1;
        }
        counts
    }

    pub fn label_of(&self, class: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass {
                name: class.to_string(),
                available: self.class_names.clone(),
            })
    }

    /// Images at `indices` as a `[N, 3, H, W]` batch, plus their labels.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        let images: Vec<&Image> = indices.iter().map(|&i| &self.items[i].image).collect();
        let labels = indices.iter().map(|&i| self.items[i].label).collect();
        Ok((Image::stack(&images)?, labels))
    }

    /// Order-independent fingerprint of the membership (sources and labels),
    /// as 16 lowercase hex digits.
    pub fn membership_hash(&self) -> String {
        let mut keys: Vec<String> = self
            .items
            .iter()
            .map(|i| format!("{}\u{1f}{}", self.class_names[i.label], i.source))
            .collect();
        keys.sort();
        format!("{:016x}", fnv1a(keys.join("\u{1e}").as_bytes()))
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Stratified split: for each class, `floor(fraction * n_c)` items go to
    /// train and the rest to test, after a per-class seeded shuffle. Both
    /// halves keep the original item order.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie strictly between 0 and 1, got {train_fraction}"
            )));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (label, name) in self.class_names.iter().enumerate() {
            let mut members: Vec<usize> = (0..self.items.len())
                .filter(|&i| self.items[i].label == label)
                .collect();
            if members.len() < 2 {
                return Err(Error::Dataset(format!(
                    "cannot stratify class `{name}` with {} item(s); need at least 2",
                    members.len()
                )));
            }
            Rng::derived(seed, &[label as u64]).shuffle(&mut members);
            let k = (train_fraction * members.len() as f64).floor() as usize;
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train), self.subset(&test)))
    }
}

/// A file that could not be ingested; loading continues past it.
#[derive(Clone, Debug)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct FolderLoad {
    pub dataset: LabeledDataset,
    pub skipped: Vec<SkippedFile>,
}

fn is_ppm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if !hidden {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Reads `root/<class>/*.ppm`. Class directories are sorted by name to assign
/// labels. With `resize`, every image is bilinearly resized to `(H, W)`;
/// without it, all images must already share one size.
pub fn load_folder(
    root: impl AsRef<Path>,
    resize_to: Option<(usize, usize)>,
) -> Result<FolderLoad> {
    let root = root.as_ref();
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    if class_dirs.is_empty() {
        return Err(Error::Dataset(format!(
            "{} has no class subdirectories",
            root.display()
        )));
    }
    let mut class_names = Vec::new();
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    let mut size = resize_to;
    for (label, dir) in class_dirs.iter().enumerate() {
        let class = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut loaded = 0;
        for path in sorted_entries(dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_ppm(p))
        {
            let image = match Image::read_ppm(&path) {
                Ok(img) => img,
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    skipped.push(SkippedFile {
                        path,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let dims = (image.height(), image.width());
            let image = match (resize_to, size) {
                (Some((h, w)), _) => resize(&image, h, w),
                (None, Some(expected)) if expected != dims => {
                    return Err(Error::Dataset(format!(
                        "{} is {}x{} but earlier images are {}x{}; pass a resize target",
                        path.display(),
                        dims.0,
                        dims.1,
                        expected.0,
                        expected.1
                    )))
                }
                _ => image,
            };
            size.get_or_insert(dims);
            let file = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            items.push(Item {
                image,
                label,
                source: format!("{class}/{file}"),
            });
            loaded += 1;
        }
        if loaded == 0 {
            return Err(Error::Dataset(format!(
                "class `{class}` has no readable PPM images"
            )));
        }
        class_names.push(class);
    }
    Ok(FolderLoad {
        dataset: LabeledDataset::new(items, class_names)?,
        skipped,
    })
}
