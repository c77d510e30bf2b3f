use osteomorph_core::classifier::{fit_knn, FeatureVector, FEATURE_DIM};
use osteomorph_core::PainCategory;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut impl Rng, n: usize) -> (Vec<FeatureVector>, Vec<PainCategory>) {
    let scales = [1.0, 0.5, 3e4, 700.0, 1.0, 0.5, 2e4, 600.0];
    let feats = (0..n)
        .map(|i| {
            let mut v = [0.0; FEATURE_DIM];
            for (d, s) in scales.iter().enumerate() {
                v[d] = rng.gen_range(0.0..1.0) * s;
            }
            FeatureVector::new(format!("p{i}"), v).unwrap()
        })
        .collect();
    let labels = (0..n).map(|_| PainCategory::ALL[rng.gen_range(0..3)]).collect();
    (feats, labels)
}

/// Exhaustive scan: z-score with population statistics, then pick the k
/// nearest by repeated minimum search (lower index wins distance ties),
/// majority vote, tied votes to the class of the nearest neighbour.
fn oracle_predict(
    train: &[FeatureVector],
    labels: &[PainCategory],
    k: usize,
    query: &FeatureVector,
) -> PainCategory {
    let n = train.len() as f64;
    let mut mean = [0.0; FEATURE_DIM];
    let mut std = [0.0; FEATURE_DIM];
    for d in 0..FEATURE_DIM {
        mean[d] = train.iter().map(|t| t.values[d]).sum::<f64>() / n;
        std[d] = (train.iter().map(|t| (t.values[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt();
    }
    let z = |v: &FeatureVector, d: usize| (v.values[d] - mean[d]) / std[d];
    let dist: Vec<f64> = train
        .iter()
        .map(|t| (0..FEATURE_DIM).map(|d| (z(t, d) - z(query, d)).powi(2)).sum())
        .collect();

    let mut taken = vec![false; train.len()];
    let mut order = Vec::new();
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..train.len() {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|b| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        order.push(b);
    }
    let mut votes = std::collections::HashMap::new();
    for &i in &order {
        *votes.entry(labels[i]).or_insert(0) += 1;
    }
    let top = *votes.values().max().unwrap();
    order
        .iter()
        .map(|&i| labels[i])
        .find(|c| votes[c] == top)
        .unwrap()
}

#[test]
fn matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (train, labels) = random_points(&mut rng, 200);
    let (queries, _) = random_points(&mut rng, 200);
    for k in [1, 3, 5] {
        let model = fit_knn(&train, &labels, k).unwrap();
        for q in queries.iter().chain(&train) {
            assert_eq!(model.predict(q), oracle_predict(&train, &labels, k, q), "k={k}");
        }
    }
}

#[test]
fn positive_rescaling_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (train, labels) = random_points(&mut rng, 200);
    let (queries, _) = random_points(&mut rng, 100);
    let rescale = |vs: &[FeatureVector], c: f64| -> Vec<FeatureVector> {
        vs.iter()
            .map(|v| FeatureVector::new(v.image_id.clone(), v.values.map(|x| x * c)).unwrap())
            .collect()
    };
    for k in [1, 3, 5] {
        let base = fit_knn(&train, &labels, k).unwrap();
        for c in [0.001, 3.7, 1000.0] {
            let scaled = fit_knn(&rescale(&train, c), &labels, k).unwrap();
            for (q, qs) in queries.iter().zip(rescale(&queries, c)) {
                assert_eq!(base.predict(q), scaled.predict(&qs), "k={k} c={c}");
            }
        }
    }
}

#[test]
fn permutation_invariance_on_generic_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (train, labels) = random_points(&mut rng, 150);
    let (queries, _) = random_points(&mut rng, 100);
    let mut idx: Vec<usize> = (0..train.len()).collect();
    idx.shuffle(&mut rng);
    let shuffled: Vec<FeatureVector> = idx.iter().map(|&i| train[i].clone()).collect();
    let shuffled_labels: Vec<PainCategory> = idx.iter().map(|&i| labels[i]).collect();
    for k in [1, 3, 5, 7] {
        let a = fit_knn(&train, &labels, k).unwrap();
        let b = fit_knn(&shuffled, &shuffled_labels, k).unwrap();
        for q in &queries {
            assert_eq!(a.predict(q), b.predict(q));
        }
    }
}

#[test]
fn all_points_vote_majority() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let (train, mut labels) = random_points(&mut rng, 31);
    for l in labels.iter_mut().take(20) {
        *l = PainCategory::Improved;
    }
    let model = fit_knn(&train, &labels, train.len()).unwrap();
    let (queries, _) = random_points(&mut rng, 50);
    for q in &queries {
        assert_eq!(model.predict(q), PainCategory::Improved);
    }
}
