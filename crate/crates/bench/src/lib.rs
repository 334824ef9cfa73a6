//! Shared inputs for the benchmarks.

use mutalg::structure::{generate_random, GeneratorConfig, RelationSpec};
use mutalg::Structure;

/// A seeded structure with a dense binary `S`, a bounded binary `R` and a
/// bounded ternary `T`.
pub fn workload(n: usize, seed: u64) -> Structure {
    let cfg = GeneratorConfig {
        seed,
        universe_size: n,
        base_size: 0,
        relations: vec![
            RelationSpec::dense("S", 2, 0.2),
            RelationSpec::bounded("R", 2, 0.5, 2),
            RelationSpec::bounded("T", 3, 0.05, 2),
        ],
    };
    generate_random(&cfg).expect("valid generator config")
}
