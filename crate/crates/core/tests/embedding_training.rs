mod common;

use cfmeta::embedding::{train, EmbeddingModel, TrainConfig};
use cfmeta::ingest::to_bipartite_graph;
use cfmeta::wl::{build_documents, build_vocabulary, SubgraphDocument};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy_corpus() -> Vec<SubgraphDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let graphs: Vec<_> = (0..5)
        .map(|ix| (format!("g{ix}"), to_bipartite_graph(&common::random_dataset(&mut rng, 6, 6))))
        .collect();
    build_documents(&graphs, 2, 5).unwrap()
}

fn doc(id: &str, tokens: &[&str]) -> SubgraphDocument {
    SubgraphDocument {
        graph_id: id.to_string(),
        iterations: vec![tokens.iter().map(|t| t.to_string()).collect()],
    }
}

fn distance(m: &EmbeddingModel, a: usize, b: usize) -> f64 {
    m.graphs.row(a).iter().zip(m.graphs.row(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn loss_settles_over_first_epochs() {
    let docs = toy_corpus();
    let vocab = build_vocabulary(&docs, 0.75).unwrap();
    let cfg = TrainConfig {
        sigma: 8,
        epochs: 20,
        seed: 3,
        ..Default::default()
    };
    let loss = train(&docs, &vocab, &cfg).unwrap().epoch_loss;
    assert_eq!(loss.len(), 20);
    for e in 3..10 {
        assert!(loss[e] <= loss[e - 1] + 1e-6, "epoch {e}: {} after {}", loss[e], loss[e - 1]);
    }
    assert!(loss[19] < loss[0]);
}

#[test]
fn identical_documents_embed_close() {
    let docs = vec![
        doc("a", &["x", "y", "z", "x", "y"]),
        doc("b", &["x", "y", "z", "x", "y"]),
        doc("c", &["p", "q", "r", "p", "q"]),
    ];
    let vocab = build_vocabulary(&docs, 0.75).unwrap();
    let cfg = TrainConfig {
        sigma: 8,
        epochs: 100,
        seed: 11,
        ..Default::default()
    };
    let m = train(&docs, &vocab, &cfg).unwrap().model;
    let same = distance(&m, 0, 1);
    assert!(same < distance(&m, 0, 2), "{same} vs {}", distance(&m, 0, 2));
    assert!(same < distance(&m, 1, 2));
}

#[test]
fn training_is_bit_reproducible() {
    let docs = toy_corpus();
    let vocab = build_vocabulary(&docs, 0.75).unwrap();
    let cfg = TrainConfig {
        sigma: 6,
        epochs: 5,
        seed: 8,
        ..Default::default()
    };
    let a = train(&docs, &vocab, &cfg).unwrap();
    let b = train(&docs, &vocab, &cfg).unwrap();
    assert_eq!(a.model.graphs, b.model.graphs);
    assert_eq!(a.model.contexts, b.model.contexts);
    let c = train(&docs, &vocab, &TrainConfig { seed: 9, ..cfg }).unwrap();
    assert_ne!(a.model.graphs, c.model.graphs);
}

#[test]
fn early_stop_ends_on_a_plateau() {
    let docs = vec![doc("a", &["x", "y"]), doc("b", &["x", "y"])];
    let vocab = build_vocabulary(&docs, 0.75).unwrap();
    let cfg = TrainConfig {
        sigma: 4,
        epochs: 5_000,
        learning_rate: 0.1,
        seed: 2,
        early_stop: true,
        ..Default::default()
    };
    let loss = train(&docs, &vocab, &cfg).unwrap().epoch_loss;
    assert!(loss.len() < 5_000);
    let n = loss.len();
    assert!(((loss[n - 2] - loss[n - 1]) / loss[n - 2]).abs() < 1e-4);
}
