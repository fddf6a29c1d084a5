//! Splits master textures into tiles, indexes the tiles and queries them.
//!
//! With a directory argument, every `.pgm`/`.png` file in it is treated as one
//! master texture and cut into a 3x3 grid. Without one, two synthetic masters
//! are used. Set `NDGLCM_DATASET` to a prepared class-per-directory corpus to
//! evaluate that instead.
//!
//! Run with: `cargo run --release -p ndglcm --example mosaic_retrieval [masters_dir]`

use std::path::Path;

use ndglcm::corpus::{load_dataset, split_master};
use ndglcm::features::{FeatureConfig, FeatureRecord};
use ndglcm::{io, FeatureSet, NdImage, RetrievalIndex};

fn masters(dir: Option<&Path>) -> ndglcm::Result<Vec<(String, NdImage)>> {
    let Some(dir) = dir else {
        return Ok(vec![
            ("waves".into(), NdImage::from_fn(vec![96, 96], 16, |p| ((p[0] + p[1] / 3) % 8) as u32 * 2)?),
            ("grid".into(), NdImage::from_fn(vec![96, 96], 16, |p| if p[0] % 6 < 2 || p[1] % 6 < 2 { 15 } else { 4 })?),
        ]);
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| ndglcm::Error::Io { path: dir.to_path_buf(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| io::ImageFormat::from_path(p).is_some())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| Ok((p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), io::read_image(p)?)))
        .collect()
}

fn main() -> ndglcm::Result<()> {
    let config = FeatureConfig::default();

    let records: Vec<FeatureRecord> = if let Some(root) = std::env::var_os(ndglcm::cli::DATASET_ENV) {
        let manifest = load_dataset(Path::new(&root))?;
        println!("{} images in {} classes from {}", manifest.image_count(), manifest.classes.len(), manifest.root.display());
        manifest.extract_features(&config)?
    } else {
        let dir = std::env::args_os().nth(1);
        let mut records = Vec::new();
        for (class, master) in masters(dir.as_deref().map(Path::new))? {
            let dims = master.dims();
            let (rows, cols) = (3, 3);
            let cropped = master.crop(&[0, 0], &[dims[0] - dims[0] % cols, dims[1] - dims[1] % rows])?;
            for (i, tile) in split_master(&cropped, rows, cols)?.iter().enumerate() {
                records.push(FeatureRecord {
                    id: format!("{class}/tile_{i}"),
                    class: class.clone(),
                    features: config.extract(tile)?,
                });
            }
        }
        println!("{} tiles", records.len());
        records
    };

    for set in [FeatureSet::Trace4, FeatureSet::Haralick4] {
        let index = RetrievalIndex::from_records(&records, set)?;
        let queries = index.protocol_queries(&[0, 3]);
        let report = index.evaluate(&queries, 8, true)?;
        println!("{set:<10} average precision {:.4} over {} queries", report.average_precision, queries.len());
    }

    let index = RetrievalIndex::from_records(&records, FeatureSet::Combined8)?;
    let probe = &index.entries()[0];
    println!("nearest to {}:", probe.id);
    for hit in index.query(&probe.features, 5, Some(&probe.id))? {
        println!("  {:<20} {:.4}", hit.id, hit.distance);
    }
    Ok(())
}
