use std::collections::HashMap;

use prefsys_core::guided::{
    enumerate_partial_orders, proportion_candidates, relation_distance, sample_corpus, sample_corpus_approximate,
    subgroup_candidates, total_order, MallowsModel, OrderCorpus, OrderSupport,
};
use prefsys_core::relation::{Pair, Relation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chain(n: usize) -> Relation {
    total_order(&(0..n).collect::<Vec<_>>())
}

fn v_shape() -> Relation {
    // 0 above 1 and 2, which are incomparable; 3 below everything.
    Relation::from_pairs(4, [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]).unwrap().with_diagonal()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..left.len() {
            let x = left.remove(k);
            cur.push(x);
            rec(cur, left, out);
            cur.pop();
            left.insert(k, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Pearson statistic of `corpus` against probabilities proportional to
/// `exp(-d/λ)` (or the two-mode mixture) over `support`, with its
/// 0.999 chi-square critical value.
fn pearson(corpus: &OrderCorpus, support: &[Relation], mode: &Relation, lambda: f64, bimodal: bool) -> (f64, f64) {
    let weight = |r: &Relation| {
        let d = relation_distance(r, mode).unwrap() as f64;
        let w = (-d / lambda).exp();
        if bimodal {
            let d2 = relation_distance(r, &mode.inverse()).unwrap() as f64;
            0.5 * (w + (-d2 / lambda).exp())
        } else {
            w
        }
    };
    let z: f64 = support.iter().map(weight).sum();
    let mut counts: HashMap<&Relation, usize> = HashMap::new();
    for r in &corpus.orders {
        let key = support.iter().find(|s| *s == r).expect("sample outside support");
        *counts.entry(key).or_default() += 1;
    }
    let n = corpus.len() as f64;
    let stat: f64 = support
        .iter()
        .map(|s| {
            let e = n * weight(s) / z;
            let o = *counts.get(s).unwrap_or(&0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let crit = ChiSquared::new((support.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, crit)
}

#[test]
fn partial_order_counts() {
    let counts: Vec<usize> = (1..=5).map(|n| enumerate_partial_orders(n).unwrap().len()).collect();
    assert_eq!(counts, vec![1, 3, 19, 219, 4231]);
}

#[test]
fn exact_partial_sampler_fits_the_model() {
    let support = enumerate_partial_orders(3).unwrap();
    let mode = Relation::from_pairs(3, [(0, 1)]).unwrap().with_diagonal();
    let model = MallowsModel::new(mode.clone(), 1.5, false, OrderSupport::PartialOrders).unwrap();
    let corpus = sample_corpus(&model, 20_000, 3).unwrap();
    let (stat, crit) = pearson(&corpus, &support, &mode, 1.5, false);
    assert!(stat < crit, "χ² = {stat:.1} ≥ {crit:.1}");
}

#[test]
fn total_order_sampler_fits_the_model() {
    let support: Vec<Relation> = permutations(4).iter().map(|p| total_order(p)).collect();
    for (bimodal, lambda) in [(false, 1.0), (true, 0.7)] {
        let model = MallowsModel::new(chain(4), lambda, bimodal, OrderSupport::TotalOrders).unwrap();
        let corpus = sample_corpus(&model, 20_000, 11).unwrap();
        let (stat, crit) = pearson(&corpus, &support, &chain(4), lambda, bimodal);
        assert!(stat < crit, "bimodal {bimodal}: χ² = {stat:.1} ≥ {crit:.1}");
    }
}

/// The importance-resampling sampler against exact enumeration, compared
/// through the distribution of distance to the mode.
#[test]
fn approximate_sampler_tracks_exact_distribution() {
    for (mode, lambda) in [(v_shape(), 1.0), (chain(4), 2.0)] {
        let model = MallowsModel::new(mode.clone(), lambda, false, OrderSupport::PartialOrders).unwrap();
        let support = enumerate_partial_orders(4).unwrap();
        let w: Vec<f64> = support.iter().map(|r| model.log_weight(r).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut exact: HashMap<usize, f64> = HashMap::new();
        for (r, wi) in support.iter().zip(&w) {
            *exact.entry(relation_distance(r, &mode).unwrap()).or_default() += wi / z;
        }
        let corpus = sample_corpus_approximate(&model, 20_000, 7).unwrap();
        let mut approx: HashMap<usize, f64> = HashMap::new();
        for r in &corpus.orders {
            assert!(r.is_partial_order());
            *approx.entry(relation_distance(r, &mode).unwrap()).or_default() += 1.0 / corpus.len() as f64;
        }
        let keys: std::collections::BTreeSet<usize> = exact.keys().chain(approx.keys()).copied().collect();
        let tv: f64 = 0.5
            * keys
                .iter()
                .map(|k| (exact.get(k).unwrap_or(&0.0) - approx.get(k).unwrap_or(&0.0)).abs())
                .sum::<f64>();
        assert!(tv < 0.03, "total variation {tv:.4}");
    }
}

#[test]
fn bimodal_partial_sampler_is_symmetric() {
    let mode = v_shape();
    let model = MallowsModel::new(mode.clone(), 0.8, true, OrderSupport::PartialOrders).unwrap();
    let corpus = sample_corpus_approximate(&model, 8_000, 21).unwrap();
    let near = corpus.orders.iter().filter(|r| relation_distance(r, &mode).unwrap() <= 2).count() as f64;
    let far = corpus.orders.iter().filter(|r| relation_distance(r, &mode.inverse()).unwrap() <= 2).count() as f64;
    assert!(near > 500.0 && far > 500.0);
    assert!((near - far).abs() / (near + far) < 0.08, "near {near} far {far}");
}

#[test]
fn sampling_is_reproducible() {
    let model = MallowsModel::new(chain(6), 1.0, false, OrderSupport::PartialOrders).unwrap();
    let a = sample_corpus(&model, 50, 99).unwrap();
    let b = sample_corpus(&model, 50, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::from_str::<OrderCorpus>(&serde_json::to_string(&a).unwrap()).unwrap(), a);
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize, m: usize) -> OrderCorpus {
    let orders = (0..m)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            let full = total_order(&p);
            let kept: Vec<Pair> = full.iter().filter(|_| rng.gen_bool(0.6)).collect();
            Relation::from_pairs(n, kept).unwrap().with_diagonal().transitive_hull()
        })
        .collect();
    OrderCorpus::new(n, orders, None).unwrap()
}

fn share(orders: &[&Relation], t: Pair) -> f64 {
    orders.iter().filter(|r| r.contains(t.0, t.1)).count() as f64 / orders.len() as f64
}

#[test]
fn proportion_candidates_match_direct_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let corpus = random_corpus(&mut rng, 5, 40);
        let undecided: Vec<Pair> = vec![(0, 1), (1, 3), (2, 4)];
        let all: Vec<&Relation> = corpus.orders.iter().collect();
        let best = undecided
            .iter()
            .flat_map(|&(i, j)| [(i, j), (j, i)])
            .map(|t| share(&all, t))
            .fold(0.0, f64::max);
        let (tied, q) = proportion_candidates(&corpus, &undecided).unwrap();
        assert!((q - best).abs() < 1e-12);
        for t in tied {
            assert!((share(&all, t) - best).abs() < 1e-12);
        }
    }
}

/// Subgroup quality recomputed by listing every conjunction of up to three
/// elicited pairs explicitly.
#[test]
fn subgroup_candidates_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let corpus = random_corpus(&mut rng, 5, 60);
        let elicited: Vec<Pair> = vec![(0, 1), (2, 3), (1, 4), (0, 3)];
        let undecided: Vec<Pair> = vec![(0, 2), (3, 4), (1, 2)];
        let all: Vec<&Relation> = corpus.orders.iter().collect();
        let mut subsets: Vec<Vec<Pair>> = Vec::new();
        for mask in 1u32..(1 << elicited.len()) {
            if mask.count_ones() <= 3 {
                subsets.push((0..elicited.len()).filter(|k| mask >> k & 1 == 1).map(|k| elicited[k]).collect());
            }
        }
        let mut best = 0.0f64;
        for &(i, j) in &undecided {
            for t in [(i, j), (j, i)] {
                let p0 = share(&all, t);
                for s in &subsets {
                    let group: Vec<&Relation> =
                        all.iter().copied().filter(|r| s.iter().all(|&(a, b)| r.contains(a, b))).collect();
                    if !group.is_empty() {
                        best = best.max(group.len() as f64 * (share(&group, t) - p0));
                    }
                }
            }
        }
        let (_, q) = subgroup_candidates(&corpus, &elicited, &undecided).unwrap();
        assert!((q - best).abs() < 1e-9, "{q} vs {best}");
    }
}
