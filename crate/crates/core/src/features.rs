//! Texture descriptors extracted from normalised co-occurrence matrices.
//!
//! The trace is the probability mass on the main diagonal, i.e. the fraction of
//! pixel pairs that share an intensity; large values mean large constant
//! regions. The quartered trace splits the diagonal into four contiguous
//! intensity bands, `[floor(q*N/4), floor((q+1)*N/4))` for `q = 0..4`, and sums
//! each band. Contrast, correlation, energy and homogeneity follow the usual
//! GLCM definitions:
//!
//! ```text
//! contrast    = Σ (i-j)² p(i,j)
//! correlation = Σ (i-μi)(j-μj) p(i,j) / (σi σj)     (0 when σi σj = 0)
//! energy      = Σ p(i,j)²
//! homogeneity = Σ p(i,j) / (1 + |i-j|)
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooccur::{compute_glcm, enumerate_directions, DirectionPattern, NormCoMatrix};
use crate::error::{Error, Result};
use crate::ndgrid::NdImage;

/// Marginal variances at or below this are treated as zero in the correlation.
const DEGENERATE_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub trace: f64,
    /// Absent when the matrix has fewer than four grey levels.
    pub quarters: Option<[f64; 4]>,
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Haralick4 {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

pub fn trace(m: &NormCoMatrix) -> f64 {
    (0..m.order()).map(|i| m.prob(i, i)).sum()
}

/// Diagonal mass in four contiguous intensity bands.
pub fn trace_quarters(m: &NormCoMatrix) -> Result<[f64; 4]> {
    let n = m.order();
    if n < 4 {
        return Err(Error::Domain(format!(
            "quartered trace needs at least 4 grey levels, matrix has {n}"
        )));
    }
    let mut out = [0.0; 4];
    for (q, slot) in out.iter_mut().enumerate() {
        *slot = (q * n / 4..(q + 1) * n / 4).map(|i| m.prob(i, i)).sum();
    }
    Ok(out)
}

pub fn haralick4(m: &NormCoMatrix) -> Haralick4 {
    let n = m.order();
    let p = m.probs();
    let mut contrast = 0.0;
    let mut energy = 0.0;
    let mut homogeneity = 0.0;
    let mut mu_i = 0.0;
    let mut mu_j = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let d = i as f64 - j as f64;
            contrast += d * d * v;
            energy += v * v;
            homogeneity += v / (1.0 + d.abs());
            mu_i += i as f64 * v;
            mu_j += j as f64 * v;
        }
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    for (i, row) in p.iter().enumerate() {
        let di = i as f64 - mu_i;
        for (j, &v) in row.iter().enumerate().take(n) {
            let dj = j as f64 - mu_j;
            var_i += di * di * v;
            var_j += dj * dj * v;
            cov += di * dj * v;
        }
    }
    let correlation = if var_i <= DEGENERATE_VARIANCE || var_j <= DEGENERATE_VARIANCE {
        0.0
    } else {
        (cov / (var_i.sqrt() * var_j.sqrt())).clamp(-1.0, 1.0)
    };
    Haralick4 {
        contrast,
        correlation,
        energy,
        homogeneity,
    }
}

/// All descriptors of one matrix. Quarters are skipped below four grey levels.
pub fn extract(m: &NormCoMatrix) -> FeatureVector {
    let h = haralick4(m);
    FeatureVector {
        trace: trace(m),
        quarters: trace_quarters(m).ok(),
        contrast: h.contrast,
        correlation: h.correlation,
        energy: h.energy,
        homogeneity: h.homogeneity,
    }
}

impl FeatureVector {
    /// Componentwise arithmetic mean, summed in slice order.
    pub fn mean(vectors: &[FeatureVector]) -> Result<FeatureVector> {
        if vectors.is_empty() {
            return Err(Error::Domain("cannot average zero feature vectors".into()));
        }
        let n = vectors.len() as f64;
        let avg = |f: fn(&FeatureVector) -> f64| vectors.iter().map(f).sum::<f64>() / n;
        let quarters = if vectors.iter().all(|v| v.quarters.is_some()) {
            let mut q = [0.0; 4];
            for (b, slot) in q.iter_mut().enumerate() {
                *slot = vectors.iter().map(|v| v.quarters.unwrap()[b]).sum::<f64>() / n;
            }
            Some(q)
        } else {
            None
        };
        Ok(FeatureVector {
            trace: avg(|v| v.trace),
            quarters,
            contrast: avg(|v| v.contrast),
            correlation: avg(|v| v.correlation),
            energy: avg(|v| v.energy),
            homogeneity: avg(|v| v.homogeneity),
        })
    }
}

/// How per-direction matrices are combined into one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Extract features from every direction's matrix, then average the features.
    #[default]
    PerDirection,
    /// Average the normalised matrices, then extract features once.
    MeanMatrix,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-direction" => Ok(Self::PerDirection),
            "mean-matrix" => Ok(Self::MeanMatrix),
            other => Err(Error::Domain(format!(
                "unknown averaging `{other}` (expected per-direction or mean-matrix)"
            ))),
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::PerDirection => "per-direction",
            Self::MeanMatrix => "mean-matrix",
        })
    }
}

fn normalized_matrices(
    image: &NdImage,
    k: usize,
    directions: &[DirectionPattern],
) -> Result<Vec<NormCoMatrix>> {
    if directions.is_empty() {
        return Err(Error::Domain("at least one direction is required".into()));
    }
    // Sorting makes the reduction order, and so the floating-point result,
    // independent of the caller's direction order.
    let mut sorted = directions.to_vec();
    sorted.sort();
    sorted
        .par_iter()
        .map(|d| {
            compute_glcm(image, d, k)?
                .normalize()
                .map_err(|e| match e {
                    Error::EmptyMatrix => Error::NoPairs {
                        direction: d.to_string(),
                        distance: k,
                    },
                    e => e,
                })
        })
        .collect()
}

/// Mean of the per-direction feature vectors at distance `k`.
pub fn averaged_features(
    image: &NdImage,
    k: usize,
    directions: &[DirectionPattern],
) -> Result<FeatureVector> {
    let per_direction: Vec<FeatureVector> = normalized_matrices(image, k, directions)?
        .iter()
        .map(extract)
        .collect();
    FeatureVector::mean(&per_direction)
}

/// Features of the direction-averaged normalised matrix.
pub fn mean_matrix_features(
    image: &NdImage,
    k: usize,
    directions: &[DirectionPattern],
) -> Result<FeatureVector> {
    let mats = normalized_matrices(image, k, directions)?;
    Ok(extract(&NormCoMatrix::mean(&mats)?))
}

/// Feature extraction settings shared by the dataset tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub distance: usize,
    /// Requantize every image to this many grey levels first.
    pub levels: Option<u32>,
    /// `None` means every canonical direction of the image's dimensionality.
    pub directions: Option<Vec<DirectionPattern>>,
    pub averaging: Averaging,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            distance: 1,
            levels: None,
            directions: None,
            averaging: Averaging::PerDirection,
        }
    }
}

impl FeatureConfig {
    pub fn extract(&self, image: &NdImage) -> Result<FeatureVector> {
        let quantized;
        let image = match self.levels {
            Some(l) if l != image.levels() => {
                quantized = image.quantize(l)?;
                &quantized
            }
            _ => image,
        };
        let defaults;
        let directions = match &self.directions {
            Some(d) => d.as_slice(),
            None => {
                defaults = enumerate_directions(image.ndim())?;
                &defaults
            }
        };
        match self.averaging {
            Averaging::PerDirection => averaged_features(image, self.distance, directions),
            Averaging::MeanMatrix => mean_matrix_features(image, self.distance, directions),
        }
    }
}

/// Which components of a [`FeatureVector`] feed the retrieval index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    /// The four quartered-trace sums.
    Trace4,
    /// Contrast, correlation, energy, homogeneity.
    Haralick4,
    /// Both of the above.
    Combined8,
}

const QUARTER_NAMES: [&str; 4] = ["q1", "q2", "q3", "q4"];
const HARALICK_NAMES: [&str; 4] = ["contrast", "correlation", "energy", "homogeneity"];

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [Self::Trace4, Self::Haralick4, Self::Combined8];

    pub fn names(self) -> Vec<&'static str> {
        match self {
            Self::Trace4 => QUARTER_NAMES.to_vec(),
            Self::Haralick4 => HARALICK_NAMES.to_vec(),
            Self::Combined8 => QUARTER_NAMES.iter().chain(&HARALICK_NAMES).copied().collect(),
        }
    }

    pub fn select(self, v: &FeatureVector) -> Result<Vec<f64>> {
        let haralick = [v.contrast, v.correlation, v.energy, v.homogeneity];
        let quarters = || {
            v.quarters.ok_or_else(|| {
                Error::Domain(format!("feature set {self} needs at least 4 grey levels"))
            })
        };
        Ok(match self {
            Self::Trace4 => quarters()?.to_vec(),
            Self::Haralick4 => haralick.to_vec(),
            Self::Combined8 => quarters()?.iter().chain(&haralick).copied().collect(),
        })
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace4" => Ok(Self::Trace4),
            "haralick4" => Ok(Self::Haralick4),
            "combined8" => Ok(Self::Combined8),
            other => Err(Error::Domain(format!(
                "unknown feature set `{other}` (expected trace4, haralick4 or combined8)"
            ))),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Trace4 => "trace4",
            Self::Haralick4 => "haralick4",
            Self::Combined8 => "combined8",
        })
    }
}

/// One labelled image's features, as written to feature tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub class: String,
    pub features: FeatureVector,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: String,
    class: String,
    trace: f64,
    q1: Option<f64>,
    q2: Option<f64>,
    q3: Option<f64>,
    q4: Option<f64>,
    contrast: f64,
    correlation: f64,
    energy: f64,
    homogeneity: f64,
}

/// Writes `id,class,trace,q1..q4,contrast,correlation,energy,homogeneity` rows.
pub fn write_feature_csv<W: Write>(writer: W, records: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let f = &r.features;
        let q = f.quarters.map(|q| q.map(Some)).unwrap_or([None; 4]);
        w.serialize(CsvRow {
            id: r.id.clone(),
            class: r.class.clone(),
            trace: f.trace,
            q1: q[0],
            q2: q[1],
            q3: q[2],
            q4: q[3],
            contrast: f.contrast,
            correlation: f.correlation,
            energy: f.energy,
            homogeneity: f.homogeneity,
        })?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(reader: R) -> Result<Vec<FeatureRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            let quarters = match (row.q1, row.q2, row.q3, row.q4) {
                (Some(a), Some(b), Some(c), Some(d)) => Some([a, b, c, d]),
                _ => None,
            };
            Ok(FeatureRecord {
                id: row.id,
                class: row.class,
                features: FeatureVector {
                    trace: row.trace,
                    quarters,
                    contrast: row.contrast,
                    correlation: row.correlation,
                    energy: row.energy,
                    homogeneity: row.homogeneity,
                },
            })
        })
        .collect()
}
