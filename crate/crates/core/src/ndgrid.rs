//! n-dimensional grey-scale images.
//!
//! An [`NdImage`] is a dense box `[0, dims[0]) × … × [0, dims[n-1])` of integer
//! intensities in `[0, levels)`. Storage is flat with axis 0 varying fastest:
//! `index = x0 + dims0 * (x1 + dims1 * (x2 + …))`. For 2-D images axis 0 is the
//! column within a row and axis 1 is the row; stacked 2-D slices use axis 2.

use crate::error::{Error, Result};

/// Largest supported number of grey levels.
pub const MAX_LEVELS: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdImage {
    dims: Vec<usize>,
    levels: u32,
    data: Vec<u16>,
}

fn check_levels(levels: u32) -> Result<()> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::Domain(format!(
            "grey level count must be in 1..={MAX_LEVELS}, got {levels}"
        )));
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Shape("an image needs at least one axis".into()));
    }
    if let Some(axis) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Shape(format!("axis {axis} has zero extent")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("extent product of {dims:?} overflows")))
}

impl NdImage {
    /// Builds an image from flat data laid out with axis 0 fastest.
    pub fn new(dims: Vec<usize>, levels: u32, data: Vec<u32>) -> Result<Self> {
        check_levels(levels)?;
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {len} values, got {}",
                data.len()
            )));
        }
        let data = data
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v < levels {
                    Ok(v as u16)
                } else {
                    Err(Error::Domain(format!(
                        "intensity {v} at flat index {i} is outside [0, {levels})"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dims, levels, data })
    }

    /// Builds an image by evaluating `f` at every point, in storage order.
    pub fn from_fn(dims: Vec<usize>, levels: u32, mut f: impl FnMut(&[usize]) -> u32) -> Result<Self> {
        let len = check_dims(&dims)?;
        let mut data = Vec::with_capacity(len);
        let mut point = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&point));
            for (c, &d) in point.iter_mut().zip(&dims) {
                *c += 1;
                if *c < d {
                    break;
                }
                *c = 0;
            }
        }
        Self::new(dims, levels, data)
    }

    /// An image holding `value` everywhere.
    pub fn filled(dims: Vec<usize>, levels: u32, value: u32) -> Result<Self> {
        let len = check_dims(&dims)?;
        Self::new(dims, levels, vec![value; len])
    }

    /// A 2-D image from rows of pixels. Columns run along axis 0, rows along axis 1.
    pub fn from_rows(rows: &[Vec<u32>], levels: u32) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|row| row.len() != width) {
            return Err(Error::Shape(format!(
                "row {r} has {} columns, expected {width}",
                rows[r].len()
            )));
        }
        Self::new(vec![width, height], levels, rows.concat())
    }

    /// A 3-D image from a stack of equally sized 2-D slices.
    ///
    /// Element `(x0, x1, x2)` is column `x0` of row `x1` in slice `x2`.
    pub fn from_slices(slices: &[Vec<Vec<u32>>], levels: u32) -> Result<Self> {
        let depth = slices.len();
        let height = slices.first().map_or(0, Vec::len);
        let width = slices
            .first()
            .and_then(|s| s.first())
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(width * height * depth);
        for (z, slice) in slices.iter().enumerate() {
            if slice.len() != height {
                return Err(Error::Shape(format!(
                    "slice {z} has {} rows, expected {height}",
                    slice.len()
                )));
            }
            for (y, row) in slice.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Shape(format!(
                        "slice {z} row {y} has {} columns, expected {width}",
                        row.len()
                    )));
                }
                data.extend_from_slice(row);
            }
        }
        Self::new(vec![width, height, depth], levels, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Flat intensities, axis 0 fastest.
    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat-index step for a unit move along each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.dims.len());
        let mut s = 1;
        for &d in &self.dims {
            strides.push(s);
            s *= d;
        }
        strides
    }

    /// Flat index of `point`, or `None` when it lies outside the grid.
    pub fn linear_index(&self, point: &[i64]) -> Result<Option<usize>> {
        if point.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, image has {} axes",
                point.len(),
                self.dims.len()
            )));
        }
        let mut index = 0usize;
        for ((&x, &d), s) in point.iter().zip(&self.dims).zip(self.strides()) {
            if x < 0 || x as u64 >= d as u64 {
                return Ok(None);
            }
            index += x as usize * s;
        }
        Ok(Some(index))
    }

    /// Intensity at `point`; `Ok(None)` signals out of bounds.
    pub fn get(&self, point: &[i64]) -> Result<Option<u32>> {
        Ok(self.linear_index(point)?.map(|i| u32::from(self.data[i])))
    }

    /// Coordinates of a flat index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let c = index % d;
                index /= d;
                c
            })
            .collect()
    }

    /// Uniform re-binning to `target_levels`: `v -> floor(v * target / levels)`.
    pub fn quantize(&self, target_levels: u32) -> Result<NdImage> {
        check_levels(target_levels)?;
        let (from, to) = (u64::from(self.levels), u64::from(target_levels));
        let data = self
            .data
            .iter()
            .map(|&v| (u64::from(v) * to / from) as u16)
            .collect();
        Ok(NdImage {
            dims: self.dims.clone(),
            levels: target_levels,
            data,
        })
    }

    /// Axis-aligned sub-box starting at `origin` with extents `shape`.
    pub fn crop(&self, origin: &[usize], shape: &[usize]) -> Result<NdImage> {
        if origin.len() != self.ndim() || shape.len() != self.ndim() {
            return Err(Error::Shape("crop origin/shape arity mismatch".into()));
        }
        for (axis, ((&o, &s), &d)) in origin.iter().zip(shape).zip(&self.dims).enumerate() {
            if s == 0 || o + s > d {
                return Err(Error::Shape(format!(
                    "crop [{o}, {}) exceeds extent {d} on axis {axis}",
                    o + s
                )));
            }
        }
        let strides = self.strides();
        let data = Self::from_fn(shape.to_vec(), self.levels, |p| {
            let idx: usize = p
                .iter()
                .zip(origin)
                .zip(&strides)
                .map(|((&x, &o), &s)| (x + o) * s)
                .sum();
            u32::from(self.data[idx])
        })?;
        Ok(data)
    }
}
