//! Grey-level co-occurrence matrices for n-dimensional grey-scale grids.
//!
//! The crate is organised bottom-up:
//!
//! - [`ndgrid`]: the [`NdImage`] model (axis 0 fastest) and grey-level quantization.
//! - [`io`]: PGM, PNG and a raw n-D voxel format.
//! - [`cooccur`]: canonical direction enumeration, GLCM construction,
//!   transposition, symmetrization and normalization.
//! - [`features`]: trace, quartered trace and the contrast / correlation /
//!   energy / homogeneity descriptors, averaged over directions.
//! - [`retrieval`]: a min-max normalised Euclidean index with precision@m evaluation.
//! - [`corpus`]: class-per-directory datasets, plate splitting and a seeded
//!   synthetic texture corpus.
//! - [`cli`]: the `ndglcm` command-line driver.
//!
//! ```
//! use ndglcm::{cooccur, NdImage};
//!
//! let img = NdImage::from_rows(&[vec![0, 1], vec![1, 0]], 2).unwrap();
//! let g = cooccur::compute_glcm(&img, &cooccur::DirectionPattern::new(vec![1, 0]).unwrap(), 1).unwrap();
//! assert_eq!(g.count(0, 1), 1);
//! assert_eq!(g.count(1, 0), 1);
//! assert_eq!(g.pair_total(), 2);
//! ```

pub mod cli;
pub mod cooccur;
pub mod corpus;
mod error;
pub mod features;
pub mod io;
pub mod ndgrid;
pub mod retrieval;

pub use cooccur::{CoMatrix, DirectionPattern, NormCoMatrix};
pub use error::{Error, Result};
pub use features::{FeatureSet, FeatureVector};
pub use ndgrid::NdImage;
pub use retrieval::{CorpusEntry, PrecisionReport, RetrievalIndex};
