// Every corruption variant applied to the same pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statlens::corruption::{corrupt_indexed, NoiseSpec};
use statlens::shapes::{generate, Shape};

pub fn run() -> statlens::Result<()> {
    let cloud = generate(Shape::Box, 1000, &mut ChaCha8Rng::seed_from_u64(1))?.cloud;
    for spec in [
        "gaussian:sigma=0.01,clip=0.05",
        "bernoulli:keep_prob=0.7",
        "sampling:ratio=0.5",
        "zero_intersection",
        "subsample:count=500,to=target",
    ] {
        let spec: NoiseSpec = spec.parse()?;
        let pair = corrupt_indexed(&cloud, &cloud, &spec, &mut ChaCha8Rng::seed_from_u64(9))?;
        let shared = pair.source_indices.iter().filter(|i| pair.target_indices.binary_search(i).is_ok()).count();
        println!(
            "{spec:<34} source {:>4}  target {:>4}  shared indices {shared}",
            pair.source.len(),
            pair.target.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
