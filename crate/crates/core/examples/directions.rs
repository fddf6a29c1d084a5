//! Lists the canonical direction patterns for 1 to 6 dimensions.
//!
//! Run with: `cargo run -p ndglcm --example directions`

use ndglcm::cooccur::enumerate_directions;

fn main() -> ndglcm::Result<()> {
    for n in 1..=6 {
        let dirs = enumerate_directions(n)?;
        println!("n={n}: {} directions", dirs.len());
        if n <= 3 {
            let shown: Vec<String> = dirs.iter().map(|d| d.to_string()).collect();
            println!("  {}", shown.join(" "));
        }
    }
    Ok(())
}
