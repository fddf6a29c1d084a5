#![allow(dead_code)]

use ndglcm::{CoMatrix, DirectionPattern, NdImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference counter: visit every point, bounds-check the partner, increment.
/// Shares nothing with the library kernel beyond the public data layout.
pub fn naive_glcm(image: &NdImage, pattern: &[i8], k: usize) -> Vec<Vec<u64>> {
    let dims = image.dims();
    let levels = image.levels() as usize;
    let data = image.data();
    let mut counts = vec![vec![0u64; levels]; levels];
    let flat = |c: &[i64]| -> usize {
        let mut idx = 0usize;
        for axis in (0..dims.len()).rev() {
            idx = idx * dims[axis] + c[axis] as usize;
        }
        idx
    };
    let total: usize = dims.iter().product();
    for i in 0..total {
        let mut rest = i;
        let mut here = Vec::with_capacity(dims.len());
        for &d in dims {
            here.push((rest % d) as i64);
            rest /= d;
        }
        let there: Vec<i64> = here
            .iter()
            .zip(pattern)
            .map(|(&x, &p)| x + k as i64 * p as i64)
            .collect();
        if there.iter().zip(dims).any(|(&x, &d)| x < 0 || x >= d as i64) {
            continue;
        }
        counts[data[flat(&here)] as usize][data[flat(&there)] as usize] += 1;
    }
    counts
}

pub fn random_image(rng: &mut ChaCha8Rng, ndim: std::ops::RangeInclusive<usize>, extent: std::ops::RangeInclusive<usize>, levels: std::ops::RangeInclusive<u32>) -> NdImage {
    let n = rng.gen_range(ndim);
    let dims: Vec<usize> = (0..n).map(|_| rng.gen_range(extent.clone())).collect();
    let levels = rng.gen_range(levels);
    let len: usize = dims.iter().product();
    let data = (0..len).map(|_| rng.gen_range(0..levels)).collect();
    NdImage::new(dims, levels, data).unwrap()
}

/// Any nonzero pattern in {-1, 0, 1}^n, canonical or not.
pub fn random_pattern(rng: &mut ChaCha8Rng, n: usize) -> DirectionPattern {
    loop {
        let c: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        if let Ok(p) = DirectionPattern::new(c) {
            return p;
        }
    }
}

pub fn matrix(rows: &[[u64; 4]; 4]) -> CoMatrix {
    CoMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

pub fn worked_example() -> NdImage {
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

pub const FORWARD_G: [[u64; 4]; 4] = [[1, 3, 2, 1], [0, 0, 3, 1], [0, 1, 0, 3], [1, 1, 1, 0]];
pub const REVERSE_G: [[u64; 4]; 4] = [[1, 0, 0, 1], [3, 0, 1, 1], [2, 3, 0, 1], [1, 1, 3, 0]];
