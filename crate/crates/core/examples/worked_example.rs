//! Co-occurrence counts of a small 3x3x3 volume along the axis-0 direction.
//!
//! Run with: `cargo run -p ndglcm --example worked_example`

use ndglcm::cooccur::compute_glcm;
use ndglcm::{DirectionPattern, NdImage};

fn main() -> ndglcm::Result<()> {
    let volume = NdImage::from_slices(
        &[
            vec![vec![0, 0, 1], vec![0, 1, 2], vec![0, 2, 3]],
            vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 2]],
            vec![vec![1, 3, 0], vec![0, 3, 1], vec![3, 2, 1]],
        ],
        4,
    )?;
    let d: DirectionPattern = "1,0,0".parse()?;

    let forward = compute_glcm(&volume, &d, 1)?;
    let reverse = compute_glcm(&volume, &d.negated(), 1)?;
    println!("G{d}, {} pairs:", forward.pair_total());
    print!("{}", forward.to_csv());
    println!("G{}:", d.negated());
    print!("{}", reverse.to_csv());
    assert_eq!(reverse, forward.transpose());

    let symmetric = forward.symmetrize(&reverse)?;
    println!("symmetric sum is symmetric: {}", symmetric.is_symmetric());
    let p = forward.normalize()?;
    println!("normalized trace {:.4}", ndglcm::features::trace(&p));
    Ok(())
}
