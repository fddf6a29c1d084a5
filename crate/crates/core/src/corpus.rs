//! Labelled image collections.
//!
//! A dataset is a directory with one subdirectory per class:
//! `root/<class>/<image>.{pgm,png,ndh}`. Classes and images are ordered by the
//! byte order of their names, so "the n-th image of a class" is well defined
//! on every platform. Image ids are `<class>/<file name>`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureRecord};
use crate::io::{self, ImageFormat};
use crate::ndgrid::NdImage;

/// Identifies the synthetic corpus PRNG and how it is seeded.
pub const GENERATOR_ID: &str = "rand_chacha-0.3/ChaCha8Rng seed_from_u64(seed) stream=class*per_class+image";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    /// Relative to the manifest root.
    pub path: PathBuf,
    pub dims: Vec<usize>,
    pub levels: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassImages {
    pub label: String,
    pub images: Vec<ImageRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<ClassImages>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

impl DatasetManifest {
    pub fn image_count(&self) -> usize {
        self.classes.iter().map(|c| c.images.len()).sum()
    }

    /// `(class, record)` pairs in manifest order.
    pub fn records(&self) -> impl Iterator<Item = (&str, &ImageRecord)> {
        self.classes
            .iter()
            .flat_map(|c| c.images.iter().map(move |r| (c.label.as_str(), r)))
    }

    pub fn read_image(&self, record: &ImageRecord) -> Result<NdImage> {
        io::read_image(&self.root.join(&record.path))
    }

    /// Features for every image, in manifest order.
    pub fn extract_features(&self, config: &FeatureConfig) -> Result<Vec<FeatureRecord>> {
        let records: Vec<_> = self.records().collect();
        records
            .par_iter()
            .map(|(class, r)| {
                let path = self.root.join(&r.path);
                let features = config.extract(&self.read_image(r)?).map_err(|e| Error::Format {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                Ok(FeatureRecord {
                    id: r.id.clone(),
                    class: class.to_string(),
                    features,
                })
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn utf8_name(path: &Path) -> Result<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::format(path, "file name is not valid UTF-8"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    paths.retain(|p| {
        !p.file_name()
            .is_some_and(|n| n.as_encoded_bytes().starts_with(b"."))
    });
    paths.sort_by(|a, b| {
        let name = |p: &PathBuf| p.file_name().map(|n| n.as_encoded_bytes().to_vec());
        name(a).cmp(&name(b))
    });
    Ok(paths)
}

/// Scans a class-per-directory tree and reads every image's metadata.
///
/// Files with unrecognised extensions are ignored; a recognised file that
/// fails to parse aborts the scan with an error naming it.
pub fn load_dataset(root: &Path) -> Result<DatasetManifest> {
    let mut pending = Vec::new();
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = utf8_name(&class_dir)?;
        let files: Vec<PathBuf> = sorted_entries(&class_dir)?
            .into_iter()
            .filter(|p| p.is_file() && ImageFormat::from_path(p).is_some())
            .collect();
        if files.is_empty() {
            return Err(Error::format(&class_dir, "class directory holds no images"));
        }
        pending.push((label, files));
    }
    if pending.is_empty() {
        return Err(Error::format(root, "dataset root has no class directories"));
    }
    let classes = pending
        .into_iter()
        .map(|(label, files)| {
            let images = files
                .par_iter()
                .map(|path| {
                    let img = io::read_image(path)?;
                    let name = utf8_name(path)?;
                    Ok(ImageRecord {
                        id: format!("{label}/{name}"),
                        path: PathBuf::from(&label).join(&name),
                        dims: img.dims().to_vec(),
                        levels: img.levels(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ClassImages { label, images })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        classes,
        generator: None,
    })
}

/// Cuts an image into a `rows × cols` grid of equal tiles, row-major.
///
/// `rows` splits axis 1 and `cols` splits axis 0; further axes are kept whole.
pub fn split_master(image: &NdImage, rows: usize, cols: usize) -> Result<Vec<NdImage>> {
    if image.ndim() < 2 {
        return Err(Error::Shape("splitting needs an image with at least 2 axes".into()));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Domain("grid factors must be positive".into()));
    }
    let dims = image.dims();
    if !dims[0].is_multiple_of(cols) || !dims[1].is_multiple_of(rows) {
        return Err(Error::Shape(format!(
            "extent {}x{} is not divisible by a {rows}x{cols} grid",
            dims[0], dims[1]
        )));
    }
    let mut shape = dims.to_vec();
    shape[0] /= cols;
    shape[1] /= rows;
    let mut tiles = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut origin = vec![0; dims.len()];
            origin[0] = c * shape[0];
            origin[1] = r * shape[1];
            tiles.push(image.crop(&origin, &shape)?);
        }
    }
    Ok(tiles)
}

/// Parameters of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    /// Side length of the square 2-D images.
    pub size: usize,
    pub levels: u32,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.per_class < 2 {
            return Err(Error::Domain("need at least 2 classes with at least 2 images each".into()));
        }
        if self.size < 8 {
            return Err(Error::Domain(format!("image size {} is below the minimum of 8", self.size)));
        }
        if !(4..=crate::ndgrid::MAX_LEVELS).contains(&self.levels) {
            return Err(Error::Domain(format!("levels {} outside 4..=65536", self.levels)));
        }
        Ok(())
    }
}

/// A parameterised texture family. Parameters are fixed per class; every image
/// draws its own noise and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TextureFamily {
    /// `base` plus uniform integer noise in `[-amplitude, amplitude]`.
    Constant { base: u32, amplitude: u32 },
    /// Alternating bands of `lo` and `hi`, each `period / 2` pixels wide.
    Stripes { period: usize, lo: u32, hi: u32, vertical: bool, amplitude: u32 },
    /// Square cells of side `period / 2` alternating between `lo` and `hi`.
    Checkerboard { period: usize, lo: u32, hi: u32, amplitude: u32 },
    /// White noise box-filtered with radius `correlation_length`, stretched to `[lo, hi]`.
    SmoothNoise { correlation_length: usize, lo: u32, hi: u32 },
}

impl TextureFamily {
    /// The family of class `class` out of `classes`; independent of the seed.
    pub fn for_class(class: usize, classes: usize, levels: u32) -> Self {
        let variants = classes.div_ceil(4).max(1);
        let v = class / 4;
        let top = f64::from(levels - 1);
        // Grey-level centre sweeps the range across variants.
        let centre = (v as f64 + 0.5) / variants as f64;
        let level = |x: f64| (x.clamp(0.0, 1.0) * top).round() as u32;
        let span = [0.12, 0.25, 0.45][v % 3];
        let (lo, hi) = (level(centre - span / 2.0), level(centre + span / 2.0));
        match class % 4 {
            0 => TextureFamily::Constant {
                base: level(centre),
                amplitude: (v % 3) as u32 * (levels / 32).max(1),
            },
            1 => TextureFamily::Stripes {
                period: [2, 4, 8][(v / 3) % 3],
                lo,
                hi,
                vertical: v % 2 == 1,
                amplitude: (levels / 64) * ((v + 1) % 2) as u32,
            },
            2 => TextureFamily::Checkerboard {
                period: [2, 4, 8][(v / 3) % 3],
                lo,
                hi,
                amplitude: (levels / 64) * (v % 2) as u32,
            },
            _ => TextureFamily::SmoothNoise {
                correlation_length: [1, 2, 4][(v / 3) % 3],
                lo,
                hi,
            },
        }
    }

    pub fn render(&self, size: usize, levels: u32, rng: &mut ChaCha8Rng) -> Result<NdImage> {
        let top = i64::from(levels - 1);
        let clip = |v: i64| v.clamp(0, top) as u32;
        let jitter = |rng: &mut ChaCha8Rng, a: u32| {
            if a == 0 {
                0
            } else {
                rng.gen_range(-i64::from(a)..=i64::from(a))
            }
        };
        let dims = vec![size, size];
        match *self {
            TextureFamily::Constant { base, amplitude } => NdImage::from_fn(dims, levels, |_| {
                clip(i64::from(base) + jitter(rng, amplitude))
            }),
            TextureFamily::Stripes { period, lo, hi, vertical, amplitude } => {
                let phase = rng.gen_range(0..period);
                NdImage::from_fn(dims, levels, |p| {
                    let t = if vertical { p[0] } else { p[1] };
                    let v = if ((t + phase) / (period / 2).max(1)) % 2 == 0 { lo } else { hi };
                    clip(i64::from(v) + jitter(rng, amplitude))
                })
            }
            TextureFamily::Checkerboard { period, lo, hi, amplitude } => {
                let (px, py) = (rng.gen_range(0..period), rng.gen_range(0..period));
                let cell = (period / 2).max(1);
                NdImage::from_fn(dims, levels, |p| {
                    let v = if ((p[0] + px) / cell + (p[1] + py) / cell) % 2 == 0 { lo } else { hi };
                    clip(i64::from(v) + jitter(rng, amplitude))
                })
            }
            TextureFamily::SmoothNoise { correlation_length, lo, hi } => {
                let noise: Vec<f64> = (0..size * size).map(|_| rng.gen::<f64>()).collect();
                let r = correlation_length as isize;
                let n = size as isize;
                let mut smooth = vec![0.0; size * size];
                for y in 0..n {
                    for x in 0..n {
                        let mut acc = 0.0;
                        let mut cnt = 0.0;
                        for dy in -r..=r {
                            for dx in -r..=r {
                                // Wrap around so every pixel sees a full window.
                                let (xx, yy) = ((x + dx).rem_euclid(n), (y + dy).rem_euclid(n));
                                acc += noise[(yy * n + xx) as usize];
                                cnt += 1.0;
                            }
                        }
                        smooth[(y * n + x) as usize] = acc / cnt;
                    }
                }
                let (mn, mx) = smooth
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let range = (mx - mn).max(f64::MIN_POSITIVE);
                let (lo, hi) = (f64::from(lo), f64::from(hi));
                NdImage::new(
                    dims,
                    levels,
                    smooth
                        .iter()
                        .map(|&v| clip((lo + (v - mn) / range * (hi - lo)).round() as i64))
                        .collect(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub label: String,
    pub family: TextureFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub id: String,
    pub class: String,
    pub file_name: String,
    pub image: NdImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub spec: SynthSpec,
    pub classes: Vec<SynthClass>,
    /// Class-major, image order within a class.
    pub images: Vec<SynthImage>,
}

fn digits(n: usize) -> usize {
    n.max(1).to_string().len()
}

/// Deterministic synthetic corpus: identical `spec` gives identical pixels.
pub fn generate_synthetic(spec: SynthSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let class_width = digits(spec.classes - 1);
    let image_width = digits(spec.per_class - 1);
    let classes: Vec<SynthClass> = (0..spec.classes)
        .map(|c| SynthClass {
            label: format!("c{c:0class_width$}"),
            family: TextureFamily::for_class(c, spec.classes, spec.levels),
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..spec.classes)
        .flat_map(|c| (0..spec.per_class).map(move |i| (c, i)))
        .collect();
    let images = jobs
        .par_iter()
        .map(|&(c, i)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((c * spec.per_class + i) as u64);
            let image = classes[c].family.render(spec.size, spec.levels, &mut rng)?;
            let file_name = format!("img_{i:0image_width$}.pgm");
            Ok(SynthImage {
                id: format!("{}/{file_name}", classes[c].label),
                class: classes[c].label.clone(),
                file_name,
                image,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticCorpus {
        spec,
        classes,
        images,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: SynthSpec,
    pub seed: u64,
    pub generator: String,
    pub classes: Vec<SynthClass>,
}

impl SyntheticCorpus {
    /// In-memory manifest with the same ids and relative paths as [`Self::write_tree`].
    pub fn manifest(&self, root: &Path) -> DatasetManifest {
        let classes = self
            .classes
            .iter()
            .map(|c| ClassImages {
                label: c.label.clone(),
                images: self
                    .images
                    .iter()
                    .filter(|i| i.class == c.label)
                    .map(|i| ImageRecord {
                        id: i.id.clone(),
                        path: PathBuf::from(&i.class).join(&i.file_name),
                        dims: i.image.dims().to_vec(),
                        levels: i.image.levels(),
                    })
                    .collect(),
            })
            .collect();
        DatasetManifest {
            root: root.to_path_buf(),
            classes,
            generator: Some(GENERATOR_ID.to_string()),
        }
    }

    /// Features for every image without touching the filesystem.
    pub fn extract_features(&self, config: &FeatureConfig) -> Result<Vec<FeatureRecord>> {
        self.images
            .par_iter()
            .map(|i| {
                Ok(FeatureRecord {
                    id: i.id.clone(),
                    class: i.class.clone(),
                    features: config.extract(&i.image)?,
                })
            })
            .collect()
    }

    /// Writes `root/<class>/<image>.pgm`, `manifest.json` and `provenance.json`.
    pub fn write_tree(&self, root: &Path) -> Result<DatasetManifest> {
        for c in &self.classes {
            let dir = root.join(&c.label);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        self.images
            .par_iter()
            .try_for_each(|i| io::write_pgm(&root.join(&i.class).join(&i.file_name), &i.image))?;
        let manifest = self.manifest(root);
        manifest.save(&root.join("manifest.json"))?;
        let provenance = Provenance {
            spec: self.spec,
            seed: self.spec.seed,
            generator: GENERATOR_ID.to_string(),
            classes: self.classes.clone(),
        };
        let path = root.join("provenance.json");
        fs::write(&path, serde_json::to_string_pretty(&provenance)?).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
