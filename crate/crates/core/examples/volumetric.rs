//! Features of a 3-D volume, written to and read back from the raw volume format.
//!
//! The volume holds horizontal layers whose grey level changes with depth, so
//! directions along axis 2 see far more level transitions than in-plane ones.
//!
//! Run with: `cargo run -p ndglcm --example volumetric`

use ndglcm::cooccur::{compute_glcms, enumerate_directions};
use ndglcm::features::{averaged_features, extract};
use ndglcm::{io, NdImage};

fn main() -> ndglcm::Result<()> {
    let volume = NdImage::from_fn(vec![24, 24, 24], 16, |p| ((p[2] / 3) % 16) as u32)?;

    let dir = std::env::temp_dir().join("ndglcm-volumetric");
    std::fs::create_dir_all(&dir).map_err(|e| ndglcm::Error::Io { path: dir.clone(), source: e })?;
    let header = dir.join("layers.ndh");
    io::write_ndraw(&header, &volume)?;
    let loaded = io::read_image(&header)?;
    assert_eq!(loaded, volume);
    println!("round-tripped {:?} volume through {}", loaded.dims(), header.display());

    let dirs = enumerate_directions(3)?;
    let matrices = compute_glcms(&loaded, &dirs, 1)?;
    for (d, g) in dirs.iter().zip(&matrices) {
        let f = extract(&g.normalize()?);
        println!("{:<12} pairs {:>6}  trace {:.3}  contrast {:.3}", d.to_string(), g.pair_total(), f.trace, f.contrast);
    }
    let avg = averaged_features(&loaded, 1, &dirs)?;
    println!("averaged over {} directions: trace {:.4}, contrast {:.4}", dirs.len(), avg.trace, avg.contrast);
    Ok(())
}
