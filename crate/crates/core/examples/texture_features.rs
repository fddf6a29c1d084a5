//! Feature vectors of a few simple 2-D textures.
//!
//! Run with: `cargo run -p ndglcm --example texture_features`

use ndglcm::features::{Averaging, FeatureConfig};
use ndglcm::NdImage;

fn main() -> ndglcm::Result<()> {
    let n = 32;
    let textures = [
        ("constant", NdImage::filled(vec![n, n], 8, 3)?),
        ("stripes", NdImage::from_fn(vec![n, n], 8, |p| if (p[0] / 2) % 2 == 0 { 1 } else { 6 })?),
        ("checkerboard", NdImage::from_fn(vec![n, n], 8, |p| 7 * ((p[0] + p[1]) % 2) as u32)?),
        ("ramp", NdImage::from_fn(vec![n, n], 8, |p| (p[0] / 4) as u32)?),
    ];

    for averaging in [Averaging::PerDirection, Averaging::MeanMatrix] {
        let config = FeatureConfig { averaging, ..FeatureConfig::default() };
        println!("averaging: {averaging}");
        println!("{:<13} {:>7} {:>27} {:>9} {:>8} {:>7} {:>8}", "texture", "trace", "quarters", "contrast", "corr", "energy", "homog");
        for (name, image) in &textures {
            let f = config.extract(image)?;
            let q = f.quarters.unwrap_or_default();
            println!(
                "{name:<13} {:>7.4} [{:.3} {:.3} {:.3} {:.3}] {:>9.4} {:>8.4} {:>7.4} {:>8.4}",
                f.trace, q[0], q[1], q[2], q[3], f.contrast, f.correlation, f.energy, f.homogeneity
            );
        }
        println!();
    }
    Ok(())
}
