//! Small rating datasets: the 3x3 toy matrix and four seeded synthetic
//! generators with structurally different rating patterns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{DatasetBuilder, RatingDataset, RatingScale};

/// The 3-user, 3-item example matrix with 7 ratings on a 1-5 scale.
pub fn toy_dataset() -> RatingDataset {
    let mut b = DatasetBuilder::new("toy", RatingScale::default());
    let triples = [
        ("u1", "i1", 5.0),
        ("u1", "i2", 3.0),
        ("u1", "i3", 4.0),
        ("u2", "i1", 4.0),
        ("u2", "i3", 2.0),
        ("u3", "i2", 3.0),
        ("u3", "i3", 5.0),
    ];
    for (line, (u, i, r)) in triples.into_iter().enumerate() {
        b.push(u, i, r, line + 1).expect("toy matrix is valid");
    }
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Many ratings, uniformly random values.
    DenseUniform,
    /// Zipf-like item popularity; popular items are rated higher.
    PopularitySkewed,
    /// Few ratings per user, values driven by user and item biases.
    SparseRandom,
    /// Users and items in clusters; in-cluster ratings are high.
    BlockStructured,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::DenseUniform,
        Generator::PopularitySkewed,
        Generator::SparseRandom,
        Generator::BlockStructured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::DenseUniform => "dense",
            Generator::PopularitySkewed => "popular",
            Generator::SparseRandom => "sparse",
            Generator::BlockStructured => "block",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == name)
    }

    /// Generates one dataset; sizes and densities vary with `seed`.
    pub fn generate(self, name: &str, seed: u64) -> RatingDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = DatasetBuilder::new(name, RatingScale::default());
        let add = |b: &mut DatasetBuilder, u: usize, i: usize, r: f64| {
            let r = r.round().clamp(1.0, 5.0);
            // Each generator visits a pair at most once.
            b.push(&format!("u{u}"), &format!("i{i}"), r, 0)
                .expect("generated rating is valid");
        };
        match self {
            Generator::DenseUniform => {
                let users = rng.random_range(50..80);
                let items = rng.random_range(25..40);
                let density = rng.random_range(0.4..0.6);
                for u in 0..users {
                    for i in 0..items {
                        if rng.random::<f64>() < density {
                            let r = rng.random_range(1..=5) as f64;
                            add(&mut b, u, i, r);
                        }
                    }
                }
            }
            Generator::PopularitySkewed => {
                let users = rng.random_range(100..150);
                let items = rng.random_range(60..90);
                let exponent = rng.random_range(0.9..1.3);
                let weights: Vec<f64> = (0..items).map(|k| 1.0 / ((k + 1) as f64).powf(exponent)).collect();
                let total: f64 = weights.iter().sum();
                let noise = Normal::new(0.0, 0.6).expect("valid normal");
                for u in 0..users {
                    let per_user = rng.random_range(8..20);
                    let mut rated = vec![false; items];
                    let mut n = 0;
                    while n < per_user.min(items) {
                        let mut x = rng.random::<f64>() * total;
                        let mut pick = items - 1;
                        for (k, w) in weights.iter().enumerate() {
                            if x < *w {
                                pick = k;
                                break;
                            }
                            x -= w;
                        }
                        if !rated[pick] {
                            rated[pick] = true;
                            n += 1;
                            let quality = 4.6 - 2.5 * pick as f64 / items as f64;
                            add(&mut b, u, pick, quality + noise.sample(&mut rng));
                        }
                    }
                }
            }
            Generator::SparseRandom => {
                let users = rng.random_range(200..300);
                let items = rng.random_range(150..220);
                let per_user_max = rng.random_range(5..9);
                let bias = Normal::new(0.0, 0.8).expect("valid normal");
                let noise = Normal::new(0.0, 0.5).expect("valid normal");
                let item_bias: Vec<f64> = (0..items).map(|_| bias.sample(&mut rng)).collect();
                for u in 0..users {
                    let user_bias = bias.sample(&mut rng);
                    let k = rng.random_range(3..=per_user_max);
                    let mut seen = Vec::with_capacity(k);
                    while seen.len() < k {
                        let i = rng.random_range(0..items);
                        if !seen.contains(&i) {
                            seen.push(i);
                            add(&mut b, u, i, 3.2 + user_bias + item_bias[i] + noise.sample(&mut rng));
                        }
                    }
                }
            }
            Generator::BlockStructured => {
                let blocks = rng.random_range(3..6);
                let users = rng.random_range(70..110);
                let items = rng.random_range(40..70);
                let density = rng.random_range(0.2..0.35);
                let noise = Normal::new(0.0, 0.5).expect("valid normal");
                for u in 0..users {
                    for i in 0..items {
                        if rng.random::<f64>() < density {
                            let same = u % blocks == i % blocks;
                            let base = if same { 4.6 } else { 1.8 };
                            add(&mut b, u, i, base + noise.sample(&mut rng));
                        }
                    }
                }
            }
        }
        b.finish()
    }
}

/// `per_generator` datasets from each generator, named `<generator>_<k>`,
/// ordered generator by generator.
pub fn corpus(per_generator: usize, seed: u64) -> Vec<RatingDataset> {
    let mut out = Vec::with_capacity(4 * per_generator);
    for (g_ix, g) in Generator::ALL.into_iter().enumerate() {
        for k in 0..per_generator {
            let name = format!("{}_{k:02}", g.name());
            let s = crate::seeds::derive(seed, "synth", (g_ix * 1_000 + k) as u64);
            out.push(g.generate(&name, s));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        for g in Generator::ALL {
            let a = g.generate("x", 7);
            assert_eq!(a, g.generate("x", 7));
            assert!(a.len() >= 100, "{:?} produced {} ratings", g, a.len());
            assert!(a.ratings.iter().all(|r| a.scale.contains(r.value)));
        }
    }

    #[test]
    fn corpus_layout() {
        let c = corpus(2, 1);
        let names: Vec<&str> = c.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(
            names,
            ["dense_00", "dense_01", "popular_00", "popular_01", "sparse_00", "sparse_01", "block_00", "block_01"]
        );
    }
}
