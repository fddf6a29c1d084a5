//! Co-occurrence matrices over n-dimensional images.
//!
//! A displacement is a [`DirectionPattern`] in `{-1, 0, +1}^n` scaled by a
//! distance `k`, so every axis moves by `0`, `k` or `-k`. The matrix for `-p`
//! is the transpose of the matrix for `p`, which is why only one sign
//! representative per direction is enumerated.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndgrid::NdImage;

/// Highest dimensionality accepted by [`enumerate_directions`].
pub const MAX_ENUMERATED_DIMS: usize = 16;

/// Unit displacement pattern; the realised offset is `k * components`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<i8>", try_from = "Vec<i8>")]
pub struct DirectionPattern {
    components: Vec<i8>,
}

impl DirectionPattern {
    pub fn new(components: Vec<i8>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Shape("direction needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| !(-1..=1).contains(*c)) {
            return Err(Error::Domain(format!(
                "direction components must be -1, 0 or 1, got {c}"
            )));
        }
        if components.iter().all(|&c| c == 0) {
            return Err(Error::Domain("the zero displacement is not a direction".into()));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[i8] {
        &self.components
    }

    pub fn ndim(&self) -> usize {
        self.components.len()
    }

    pub fn negated(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| -c).collect(),
        }
    }

    /// True when the first nonzero component is `+1`.
    pub fn is_canonical(&self) -> bool {
        self.components.iter().find(|&&c| c != 0) == Some(&1)
    }

    /// The representative of `{p, -p}` whose first nonzero component is `+1`.
    pub fn canonical(&self) -> Self {
        if self.is_canonical() {
            self.clone()
        } else {
            self.negated()
        }
    }
}

impl From<DirectionPattern> for Vec<i8> {
    fn from(p: DirectionPattern) -> Self {
        p.components
    }
}

impl TryFrom<Vec<i8>> for DirectionPattern {
    type Error = Error;

    fn try_from(components: Vec<i8>) -> Result<Self> {
        Self::new(components)
    }
}

impl fmt::Display for DirectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for DirectionPattern {
    type Err = Error;

    /// Parses `"1,0,-1"`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let components = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i8>()
                    .map_err(|_| Error::Domain(format!("bad direction component `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }
}

/// The `(3^n - 1) / 2` canonical directions in `n` dimensions, sorted lexicographically.
pub fn enumerate_directions(n: usize) -> Result<Vec<DirectionPattern>> {
    if n == 0 {
        return Err(Error::Domain("dimensionality must be at least 1".into()));
    }
    if n > MAX_ENUMERATED_DIMS {
        return Err(Error::Domain(format!(
            "enumerating directions is limited to n <= {MAX_ENUMERATED_DIMS}"
        )));
    }
    let total = 3usize.pow(n as u32);
    let mut out = Vec::with_capacity((total - 1) / 2);
    // Odometer over {-1, 0, 1}^n with the last axis fastest gives lexicographic order.
    let mut digits = vec![0u8; n];
    for _ in 0..total {
        let components: Vec<i8> = digits.iter().map(|&d| d as i8 - 1).collect();
        if components.iter().find(|&&c| c != 0) == Some(&1) {
            out.push(DirectionPattern { components });
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < 3 {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Raw pair counts `G[i][j]` for one displacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoMatrix {
    order: usize,
    pair_total: u64,
    counts: Vec<Vec<u64>>,
}

impl CoMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            pair_total: 0,
            counts: vec![vec![0; order]; order],
        }
    }

    /// Builds a matrix from square row-major counts.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let order = counts.len();
        if let Some(r) = counts.iter().position(|row| row.len() != order) {
            return Err(Error::Shape(format!(
                "row {r} has {} entries, matrix order is {order}",
                counts[r].len()
            )));
        }
        let pair_total = counts.iter().flatten().sum();
        Ok(Self {
            order,
            pair_total,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pair_total(&self) -> u64 {
        self.pair_total
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn transpose(&self) -> CoMatrix {
        let counts = (0..self.order)
            .map(|i| (0..self.order).map(|j| self.counts[j][i]).collect())
            .collect();
        CoMatrix {
            order: self.order,
            pair_total: self.pair_total,
            counts,
        }
    }

    /// Elementwise sum; `m.symmetrize(&m.transpose())` is the symmetric GLCM.
    pub fn symmetrize(&self, reverse: &CoMatrix) -> Result<CoMatrix> {
        if self.order != reverse.order {
            return Err(Error::Shape(format!(
                "cannot add matrices of order {} and {}",
                self.order, reverse.order
            )));
        }
        let counts = self
            .counts
            .iter()
            .zip(&reverse.counts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(CoMatrix {
            order: self.order,
            pair_total: self.pair_total + reverse.pair_total,
            counts,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.order).all(|i| (0..i).all(|j| self.counts[i][j] == self.counts[j][i]))
    }

    /// Joint probabilities `counts / pair_total`.
    pub fn normalize(&self) -> Result<NormCoMatrix> {
        if self.pair_total == 0 {
            return Err(Error::EmptyMatrix);
        }
        let total = self.pair_total as f64;
        let probs = self
            .counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / total).collect())
            .collect();
        Ok(NormCoMatrix {
            order: self.order,
            pair_total: self.pair_total,
            probs,
        })
    }

    /// CSV with an `order=..,pair_total=..` header line followed by one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("order={},pair_total={}\n", self.order, self.pair_total);
        for row in &self.counts {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Normalised co-occurrence matrix: a joint distribution over intensity pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCoMatrix {
    order: usize,
    pair_total: u64,
    probs: Vec<Vec<f64>>,
}

/// Allowed deviation of a probability matrix's total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-9;

impl NormCoMatrix {
    /// Wraps square probabilities; entries must be finite, non-negative and sum to 1.
    pub fn from_probs(probs: Vec<Vec<f64>>) -> Result<Self> {
        let order = probs.len();
        if order == 0 {
            return Err(Error::Shape("probability matrix must be non-empty".into()));
        }
        if probs.iter().any(|row| row.len() != order) {
            return Err(Error::Shape("probability matrix must be square".into()));
        }
        if probs.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain("probabilities must be finite and non-negative".into()));
        }
        let mass: f64 = probs.iter().flatten().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Domain(format!("probabilities sum to {mass}, not 1")));
        }
        Ok(Self {
            order,
            pair_total: 0,
            probs,
        })
    }

    /// Entrywise mean of equally ordered matrices.
    pub fn mean(matrices: &[NormCoMatrix]) -> Result<NormCoMatrix> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Domain("cannot average zero matrices".into()))?;
        let order = first.order;
        if matrices.iter().any(|m| m.order != order) {
            return Err(Error::Shape("averaged matrices differ in order".into()));
        }
        let scale = 1.0 / matrices.len() as f64;
        let mut probs = vec![vec![0.0; order]; order];
        for m in matrices {
            for (acc, row) in probs.iter_mut().zip(&m.probs) {
                for (a, p) in acc.iter_mut().zip(row) {
                    *a += p;
                }
            }
        }
        probs.iter_mut().flatten().for_each(|p| *p *= scale);
        Ok(NormCoMatrix {
            order,
            pair_total: matrices.iter().map(|m| m.pair_total).sum(),
            probs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Pair count the matrix was normalised from (0 when built from probabilities).
    pub fn pair_total(&self) -> u64 {
        self.pair_total
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i][j]
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn transpose(&self) -> NormCoMatrix {
        let probs = (0..self.order)
            .map(|i| (0..self.order).map(|j| self.probs[j][i]).collect())
            .collect();
        NormCoMatrix {
            order: self.order,
            pair_total: self.pair_total,
            probs,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("order={},pair_total={}\n", self.order, self.pair_total);
        for row in &self.probs {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn join<T: fmt::Display>(values: impl Iterator<Item = T>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Counts intensity pairs `(f(x), f(x + k * pattern))` over every `x` whose
/// partner lies inside the grid.
///
/// The kernel walks only the sub-box of valid origins. Axis 0 is contiguous in
/// memory, so each run along it compares two slices at a fixed flat offset.
pub fn compute_glcm(image: &NdImage, pattern: &DirectionPattern, k: usize) -> Result<CoMatrix> {
    if pattern.ndim() != image.ndim() {
        return Err(Error::Shape(format!(
            "direction {pattern} has {} components, image has {} axes",
            pattern.ndim(),
            image.ndim()
        )));
    }
    if k == 0 {
        return Err(Error::Domain("distance k must be at least 1".into()));
    }
    let order = image.levels() as usize;
    let dims = image.dims();
    let strides = image.strides();

    // Valid origin range per axis, and the flat offset to the partner.
    let mut lo = Vec::with_capacity(dims.len());
    let mut hi = Vec::with_capacity(dims.len());
    let mut offset = 0isize;
    for ((&c, &d), &s) in pattern.components().iter().zip(dims).zip(&strides) {
        let (a, b) = match c {
            1 => (0, d.saturating_sub(k)),
            -1 => (k.min(d), d),
            _ => (0, d),
        };
        if a >= b {
            return Ok(CoMatrix::zeros(order));
        }
        lo.push(a);
        hi.push(b);
        offset += c as isize * (k * s) as isize;
    }

    let data = image.data();
    let mut flat = vec![0u64; order * order];
    let run = hi[0] - lo[0];
    let mut outer: Vec<usize> = lo[1..].to_vec();
    loop {
        let base = lo[0]
            + outer
                .iter()
                .zip(&strides[1..])
                .map(|(x, s)| x * s)
                .sum::<usize>();
        let partner = (base as isize + offset) as usize;
        for (&a, &b) in data[base..base + run].iter().zip(&data[partner..partner + run]) {
            flat[a as usize * order + b as usize] += 1;
        }
        // Advance the odometer over axes 1..n.
        let mut axis = 0;
        loop {
            if axis == outer.len() {
                let counts: Vec<Vec<u64>> = flat.chunks(order).map(<[u64]>::to_vec).collect();
                let pair_total = counts.iter().flatten().sum();
                return Ok(CoMatrix {
                    order,
                    pair_total,
                    counts,
                });
            }
            outer[axis] += 1;
            if outer[axis] < hi[axis + 1] {
                break;
            }
            outer[axis] = lo[axis + 1];
            axis += 1;
        }
    }
}

/// One matrix per direction, computed in parallel and returned in input order.
pub fn compute_glcms(
    image: &NdImage,
    patterns: &[DirectionPattern],
    k: usize,
) -> Result<Vec<CoMatrix>> {
    patterns
        .par_iter()
        .map(|p| compute_glcm(image, p, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> NdImage {
        NdImage::from_slices(
            &[
                vec![vec![0, 0, 1], vec![0, 1, 2], vec![0, 2, 3]],
                vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 2]],
                vec![vec![1, 3, 0], vec![0, 3, 1], vec![3, 2, 1]],
            ],
            4,
        )
        .unwrap()
    }

    fn dir(c: &[i8]) -> DirectionPattern {
        DirectionPattern::new(c.to_vec()).unwrap()
    }

    const FORWARD_G: [[u64; 4]; 4] = [[1, 3, 2, 1], [0, 0, 3, 1], [0, 1, 0, 3], [1, 1, 1, 0]];
    const REVERSE_G: [[u64; 4]; 4] = [[1, 0, 0, 1], [3, 0, 1, 1], [2, 3, 0, 1], [1, 1, 3, 0]];

    fn as_matrix(rows: [[u64; 4]; 4]) -> CoMatrix {
        CoMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn worked_example_golden() {
        let g = compute_glcm(&worked_example(), &dir(&[1, 0, 0]), 1).unwrap();
        assert_eq!(g, as_matrix(FORWARD_G));
        assert_eq!(g.pair_total(), 18);
        assert_eq!(g.transpose(), as_matrix(REVERSE_G));
        let rev = compute_glcm(&worked_example(), &dir(&[-1, 0, 0]), 1).unwrap();
        assert_eq!(rev, as_matrix(REVERSE_G));
    }

    #[test]
    fn constant_image_puts_all_mass_on_one_cell() {
        let img = NdImage::filled(vec![5, 3], 4, 2).unwrap();
        let g = compute_glcm(&img, &dir(&[1, 0]), 1).unwrap();
        assert_eq!(g.count(2, 2), 12);
        assert_eq!(g.pair_total(), 12);
    }

    #[test]
    fn checkerboard_pairs() {
        let img = NdImage::from_rows(&[vec![0, 1], vec![1, 0]], 2).unwrap();
        let g = compute_glcm(&img, &dir(&[1, 0]), 1).unwrap();
        assert_eq!(g.counts(), &[vec![0, 1], vec![1, 0]]);
        assert_eq!(g.pair_total(), 2);
    }

    #[test]
    fn arity_and_distance_errors() {
        let img = worked_example();
        assert!(matches!(compute_glcm(&img, &dir(&[1, 0]), 1), Err(Error::Shape(_))));
        assert!(matches!(compute_glcm(&img, &dir(&[1, 0, 0]), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn offset_beyond_extent_gives_zero_pairs() {
        let g = compute_glcm(&worked_example(), &dir(&[1, 1, 0]), 3).unwrap();
        assert_eq!(g.pair_total(), 0);
        assert!(matches!(g.normalize(), Err(Error::EmptyMatrix)));
        let single = NdImage::filled(vec![1, 1], 3, 0).unwrap();
        for p in enumerate_directions(2).unwrap() {
            let g = compute_glcm(&single, &p, 1).unwrap();
            assert!(matches!(g.normalize(), Err(Error::EmptyMatrix)));
        }
    }

    #[test]
    fn direction_enumeration() {
        let d1 = enumerate_directions(1).unwrap();
        assert_eq!(d1, vec![dir(&[1])]);
        let d2 = enumerate_directions(2).unwrap();
        assert_eq!(d2, vec![dir(&[0, 1]), dir(&[1, -1]), dir(&[1, 0]), dir(&[1, 1])]);
        assert_eq!(enumerate_directions(3).unwrap().len(), 13);
        assert!(enumerate_directions(0).is_err());
    }

    #[test]
    fn direction_parsing() {
        assert_eq!("1,0,-1".parse::<DirectionPattern>().unwrap(), dir(&[1, 0, -1]));
        assert_eq!("(0, 1)".parse::<DirectionPattern>().unwrap(), dir(&[0, 1]));
        assert!("0,0".parse::<DirectionPattern>().is_err());
        assert!("2,0".parse::<DirectionPattern>().is_err());
        assert!("a".parse::<DirectionPattern>().is_err());
        assert_eq!(dir(&[0, -1, 1]).canonical(), dir(&[0, 1, -1]));
        assert_eq!(dir(&[1, -1]).to_string(), "(1,-1)");
    }

    #[test]
    fn symmetrize_examples() {
        let g = as_matrix(FORWARD_G);
        let s = g.symmetrize(&as_matrix(REVERSE_G)).unwrap();
        assert!(s.is_symmetric());
        assert_eq!(s.count(0, 1), 3);
        assert_eq!(s.count(1, 0), 3);
        assert_eq!(s.pair_total(), 36);
        let z = CoMatrix::zeros(3);
        assert_eq!(z.symmetrize(&z).unwrap(), z);
        assert!(matches!(g.symmetrize(&z), Err(Error::Shape(_))));
    }

    #[test]
    fn transpose_fixes_diagonal() {
        let d = CoMatrix::from_counts(vec![vec![2, 0], vec![0, 5]]).unwrap();
        assert_eq!(d.transpose(), d);
    }

    #[test]
    fn normalize_examples() {
        let n = as_matrix(FORWARD_G).normalize().unwrap();
        assert_eq!(n.prob(0, 1), 3.0 / 18.0);
        let sum: f64 = n.probs().iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let single = CoMatrix::from_counts(vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(single.normalize().unwrap().prob(1, 0), 1.0);
    }

    #[test]
    fn serialization_formats() {
        let g = as_matrix(FORWARD_G);
        let csv = g.to_csv();
        assert!(csv.starts_with("order=4,pair_total=18\n1,3,2,1\n"));
        let v: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        assert_eq!(v["order"], 4);
        assert_eq!(v["pair_total"], 18);
        assert_eq!(v["counts"][0][1], 3);
        let n: serde_json::Value =
            serde_json::from_str(&g.normalize().unwrap().to_json().unwrap()).unwrap();
        assert!(n["probs"][0][0].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn from_probs_validation() {
        assert!(NormCoMatrix::from_probs(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).is_ok());
        assert!(NormCoMatrix::from_probs(vec![vec![0.5, 0.4], vec![0.0, 0.0]]).is_err());
        assert!(NormCoMatrix::from_probs(vec![vec![1.5, -0.5], vec![0.0, 0.0]]).is_err());
        assert!(NormCoMatrix::from_probs(vec![vec![1.0, 0.0]]).is_err());
    }
}
