use std::fs;
use std::path::Path;

use ndglcm::corpus::{generate_synthetic, load_dataset, DatasetManifest, SynthSpec};
use ndglcm::features::FeatureConfig;
use ndglcm::io::{read_image, read_ndraw, write_image, write_ndraw, write_pgm};
use ndglcm::{Error, NdImage};

fn ramp(w: usize, h: usize, levels: u32) -> NdImage {
    NdImage::from_fn(vec![w, h], levels, |p| ((p[0] + 3 * p[1]) as u32) % levels).unwrap()
}

#[test]
fn ndraw_round_trip_3d_and_wide() {
    let dir = tempfile::tempdir().unwrap();
    let vol = NdImage::from_fn(vec![4, 3, 2], 7, |p| (p[0] + p[1] + p[2]) as u32 % 7).unwrap();
    let path = dir.path().join("vol.ndh");
    write_ndraw(&path, &vol).unwrap();
    assert_eq!(fs::metadata(dir.path().join("vol.raw")).unwrap().len(), 24);
    assert_eq!(read_ndraw(&path).unwrap(), vol);

    let wide = NdImage::from_fn(vec![5, 2], 1000, |p| (p[0] * 199 + p[1]) as u32).unwrap();
    let wpath = dir.path().join("wide.ndh");
    write_image(&wpath, &wide).unwrap();
    assert_eq!(read_image(&wpath).unwrap(), wide);
}

#[test]
fn ndraw_rejects_truncated_data() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("v.ndh"), "ndraw 1\ndims 2 2\nlevels 4\ndata v.raw\n").unwrap();
    fs::write(dir.path().join("v.raw"), [0u8, 1, 2]).unwrap();
    let err = read_image(&dir.path().join("v.ndh")).unwrap_err();
    assert!(err.to_string().contains("v.raw"), "{err}");
}

#[test]
fn png_greyscale_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.png");
    let buf = image::GrayImage::from_fn(3, 2, |x, y| image::Luma([(x * 10 + y) as u8]));
    buf.save(&path).unwrap();
    let img = read_image(&path).unwrap();
    assert_eq!(img.dims(), &[3, 2]);
    assert_eq!(img.levels(), 256);
    assert_eq!(img.get(&[2, 1]).unwrap(), Some(21));

    let rgb = dir.path().join("c.png");
    image::RgbImage::new(2, 2).save(&rgb).unwrap();
    assert!(read_image(&rgb).is_err());
}

fn write_tree(root: &Path, layout: &[(&str, usize)]) {
    for (class, n) in layout {
        let d = root.join(class);
        fs::create_dir_all(&d).unwrap();
        for i in 0..*n {
            write_pgm(&d.join(format!("{i}.pgm")), &ramp(6 + i, 5, 16)).unwrap();
        }
    }
}

#[test]
fn load_dataset_counts_and_orders() {
    let dir = tempfile::tempdir().unwrap();
    write_tree(dir.path(), &[("B", 3), ("A", 2)]);
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    fs::write(dir.path().join("A").join("README"), "ignored").unwrap();
    let m = load_dataset(dir.path()).unwrap();
    assert_eq!(m.classes.len(), 2);
    assert_eq!(m.image_count(), 5);
    assert_eq!(m.classes[0].label, "A");
    let ids: Vec<&str> = m.records().map(|(_, r)| r.id.as_str()).collect();
    assert_eq!(ids, ["A/0.pgm", "A/1.pgm", "B/0.pgm", "B/1.pgm", "B/2.pgm"]);
    assert_eq!(m.classes[1].images[2].dims, vec![8, 5]);
    assert_eq!(m.classes[1].images[2].levels, 16);

    let cache = dir.path().join("manifest.json");
    m.save(&cache).unwrap();
    assert_eq!(DatasetManifest::load(&cache).unwrap(), m);

    // Mixed image sizes are fine for feature extraction.
    let feats = m.extract_features(&FeatureConfig::default()).unwrap();
    assert_eq!(feats.len(), 5);
    assert_eq!(feats[4].id, "B/2.pgm");
}

#[test]
fn load_dataset_errors() {
    let empty = tempfile::tempdir().unwrap();
    assert!(load_dataset(empty.path()).is_err());

    let bad = tempfile::tempdir().unwrap();
    write_tree(bad.path(), &[("A", 1)]);
    let broken = bad.path().join("A").join("zz.pgm");
    fs::write(&broken, b"not an image").unwrap();
    match load_dataset(bad.path()) {
        Err(Error::Format { path, .. }) => assert_eq!(path, broken),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn synthetic_tree_round_trips_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { classes: 3, per_class: 4, size: 16, levels: 16, seed: 11 };
    let corpus = generate_synthetic(spec).unwrap();
    let written = corpus.write_tree(dir.path()).unwrap();
    assert!(dir.path().join("provenance.json").is_file());
    let prov: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 11);
    assert!(prov["generator"].as_str().unwrap().contains("ChaCha8"));

    let loaded = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded.classes, written.classes);
    for (i, (_, rec)) in loaded.records().enumerate() {
        assert_eq!(loaded.read_image(rec).unwrap(), corpus.images[i].image);
    }
    let config = FeatureConfig::default();
    assert_eq!(loaded.extract_features(&config).unwrap(), corpus.extract_features(&config).unwrap());
}
