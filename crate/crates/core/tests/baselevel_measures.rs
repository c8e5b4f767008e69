mod common;

use cfmeta::baselevel::{auc, evaluate, ndcg, Hyper, Learner};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_hyper() -> Hyper {
    Hyper {
        factors: 3,
        epochs: 5,
        ..Hyper::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measures_are_bounded_and_repeatable(seed in any::<u64>(), fold_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = common::random_dataset(&mut rng, 10, 8);
        prop_assume!(d.len() >= 6);
        for kind in Learner::ALL {
            let a = evaluate(kind, &d, &small_hyper(), 3, fold_seed).unwrap();
            prop_assert_eq!(&a, &evaluate(kind, &d, &small_hyper(), 3, fold_seed).unwrap());
            let mae = a["NMAE"] * d.scale.width();
            prop_assert!(a["RMSE"] + 1e-12 >= mae, "{:?}: RMSE {} < MAE {}", kind, a["RMSE"], mae);
            prop_assert!(a["RMSE"] <= d.scale.width() + 1e-12);
            prop_assert!((0.0..=1.0).contains(&a["AUC"]));
            prop_assert!((0.0..=1.0).contains(&a["NDCG"]));
        }
    }

    #[test]
    fn ranking_measures_match_pair_and_gain_counts(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.shuffle(&mut rng);
        let relevant: Vec<bool> = (0..n).map(|i| (i * 7 + seed as usize).is_multiple_of(3)).collect();
        let pos = |item: usize| ranked.iter().position(|&x| x == item).unwrap();
        let (mut pairs, mut good) = (0, 0);
        for a in (0..n).filter(|&i| relevant[i]) {
            for b in (0..n).filter(|&i| !relevant[i]) {
                pairs += 1;
                good += usize::from(pos(a) < pos(b));
            }
        }
        let want_auc = (pairs > 0).then(|| good as f64 / pairs as f64);
        match (auc(&ranked, &relevant), want_auc) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }

        let hits = relevant.iter().filter(|&&r| r).count();
        let dcg: f64 = (0..n).filter(|&i| relevant[i]).map(|i| 1.0 / (pos(i) as f64 + 2.0).log2()).sum();
        let ideal: f64 = (1..=hits).map(|r| 1.0 / (r as f64 + 1.0).log2()).sum();
        let want_ndcg = (hits > 0).then(|| dcg / ideal);
        match (ndcg(&ranked, &relevant), want_ndcg) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }
}

#[test]
fn fold_seed_changes_the_split() {
    let d = &cfmeta::synth::corpus(1, 3)[0];
    let a = evaluate(Learner::UserItemBaseline, d, &Hyper::default(), 4, 1).unwrap();
    let b = evaluate(Learner::UserItemBaseline, d, &Hyper::default(), 4, 2).unwrap();
    assert_ne!(a["RMSE"], b["RMSE"]);
}
