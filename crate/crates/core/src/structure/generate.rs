use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ElemId, Relation, Structure, StructureError, Tuple};

/// One relation to generate.
///
/// With `target_k = None` every tuple of `U^arity` is included independently
/// with probability `density`. With `target_k = Some(k)`, `density * |U|^arity`
/// random tuples are proposed and a proposal is kept only if no single
/// coordinate value would then extend to more than `k` tuples, so the
/// relation's uniform bound stays at most `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub name: String,
    pub arity: usize,
    pub density: f64,
    #[serde(default)]
    pub target_k: Option<usize>,
}

impl RelationSpec {
    pub fn dense(name: impl Into<String>, arity: usize, density: f64) -> Self {
        RelationSpec {
            name: name.into(),
            arity,
            density,
            target_k: None,
        }
    }

    pub fn bounded(name: impl Into<String>, arity: usize, density: f64, k: usize) -> Self {
        RelationSpec {
            name: name.into(),
            arity,
            density,
            target_k: Some(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub universe_size: usize,
    /// The first `base_size` elements form the base.
    #[serde(default)]
    pub base_size: usize,
    pub relations: Vec<RelationSpec>,
}

/// Builds a random structure; the same config always yields the same structure.
pub fn generate_random(cfg: &GeneratorConfig) -> Result<Structure, StructureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_with(&mut rng, cfg.universe_size, cfg.base_size, &cfg.relations)
}

pub(crate) fn generate_with<R: Rng>(
    rng: &mut R,
    universe_size: usize,
    base_size: usize,
    specs: &[RelationSpec],
) -> Result<Structure, StructureError> {
    if universe_size == 0 {
        return Err(StructureError::EmptyUniverse);
    }
    if base_size > universe_size {
        return Err(StructureError::InvalidConfig(format!(
            "base size {base_size} exceeds universe size {universe_size}"
        )));
    }
    let mut s = Structure::new((0..universe_size).map(|i| format!("e{i}")))?
        .with_base_ids((0..base_size as ElemId).collect())?;
    for spec in specs {
        if spec.arity == 0 {
            return Err(StructureError::InvalidConfig(format!(
                "relation `{}` must have positive arity",
                spec.name
            )));
        }
        if !(0.0..=1.0).contains(&spec.density) {
            return Err(StructureError::InvalidConfig(format!(
                "relation `{}` density {} is outside [0, 1]",
                spec.name, spec.density
            )));
        }
        let rel = match spec.target_k {
            None => dense_relation(rng, universe_size, spec.arity, spec.density),
            Some(0) if spec.density > 0.0 => {
                return Err(StructureError::InfeasibleTargetK {
                    relation: spec.name.clone(),
                    density: spec.density,
                })
            }
            Some(k) => bounded_relation(rng, universe_size, spec.arity, spec.density, k),
        };
        s = s.with_relation(spec.name.clone(), rel)?;
    }
    Ok(s)
}

fn all_tuples(size: usize, arity: usize) -> impl Iterator<Item = Tuple> {
    let total = (size as u64).pow(arity as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = (code % size as u64) as ElemId;
            code /= size as u64;
        }
        t
    })
}

fn dense_relation<R: Rng>(rng: &mut R, size: usize, arity: usize, density: f64) -> Relation {
    let mut rel = Relation::new(arity);
    for t in all_tuples(size, arity) {
        if density > 0.0 && rng.random_bool(density) {
            rel.insert(t)
                .expect("generated tuple has the declared arity");
        }
    }
    rel
}

fn bounded_relation<R: Rng>(
    rng: &mut R,
    size: usize,
    arity: usize,
    density: f64,
    k: usize,
) -> Relation {
    let mut rel = Relation::new(arity);
    let proposals = (density * (size as f64).powi(arity as i32)).round() as usize;
    // (column, value) -> number of tuples through it
    let mut load: HashMap<(usize, ElemId), usize> = HashMap::new();
    for _ in 0..proposals {
        let t: Tuple = (0..arity)
            .map(|_| rng.random_range(0..size) as ElemId)
            .collect();
        if rel.contains(&t) {
            continue;
        }
        let fits = arity == 1
            || t.iter()
                .enumerate()
                .all(|(c, &v)| load.get(&(c, v)).copied().unwrap_or(0) < k);
        if fits {
            for (c, &v) in t.iter().enumerate() {
                *load.entry((c, v)).or_default() += 1;
            }
            rel.insert(t)
                .expect("generated tuple has the declared arity");
        }
    }
    rel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ma::ma_profile;

    fn cfg(seed: u64, specs: Vec<RelationSpec>) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            universe_size: 5,
            base_size: 0,
            relations: specs,
        }
    }

    #[test]
    fn zero_density_is_empty() {
        let s = generate_random(&cfg(1, vec![RelationSpec::dense("R", 2, 0.0)])).unwrap();
        assert_eq!(s.size(), 5);
        assert!(s.relation("R").unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let c = cfg(
            42,
            vec![
                RelationSpec::dense("R", 2, 0.4),
                RelationSpec::bounded("S", 3, 0.5, 2),
            ],
        );
        assert_eq!(generate_random(&c).unwrap(), generate_random(&c).unwrap());
        let other = GeneratorConfig {
            seed: 43,
            ..c.clone()
        };
        assert_ne!(
            generate_random(&c).unwrap(),
            generate_random(&other).unwrap()
        );
    }

    #[test]
    fn target_k_is_respected() {
        for seed in 0..50 {
            for arity in 2..=4 {
                for k in 1..=3 {
                    let c = GeneratorConfig {
                        seed,
                        universe_size: 6,
                        base_size: 0,
                        relations: vec![RelationSpec::bounded("R", arity, 0.8, k)],
                    };
                    let s = generate_random(&c).unwrap();
                    let profile = ma_profile(s.relation("R").unwrap());
                    assert!(profile.uniform_k <= k, "seed {seed} arity {arity} k {k}");
                }
            }
        }
    }

    #[test]
    fn infeasible_target() {
        let c = cfg(1, vec![RelationSpec::bounded("R", 2, 0.3, 0)]);
        assert!(matches!(
            generate_random(&c),
            Err(StructureError::InfeasibleTargetK { .. })
        ));
        let empty = cfg(1, vec![RelationSpec::bounded("R", 2, 0.0, 0)]);
        assert!(generate_random(&empty)
            .unwrap()
            .relation("R")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn base_is_prefix() {
        let c = GeneratorConfig {
            seed: 3,
            universe_size: 4,
            base_size: 2,
            relations: vec![],
        };
        let s = generate_random(&c).unwrap();
        assert_eq!(s.base(), &[0, 1].into());
    }
}
