use prefsys_core::decision::{
    am_dominance_choice, generalized_expectation_interval, interval_dominance_choice, Act, CredalSet,
    DecisionProblem, DecisionRule,
};
use prefsys_core::oracle::{random_ground_truth, TruthShape};
use prefsys_core::relation::Relation;
use prefsys_core::system::PreferenceSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain_with_full_r2(n: usize) -> PreferenceSystem {
    let u: Vec<f64> = (0..n).map(|i| ((n - 1 - i) as f64 / (n - 1) as f64).powi(2)).collect();
    let r1 = Relation::from_pairs(n, (0..n).flat_map(|i| (i..n).map(move |j| (i, j)))).unwrap();
    prefsys_core::oracle::GroundTruth::from_utility(u, r1).unwrap().system
}

#[test]
fn intervals_nest_as_granularity_grows() {
    let a = chain_with_full_r2(5);
    let act = Act::new("x", vec![1, 3]);
    let mut previous: Option<(f64, f64)> = None;
    for delta in [0.0, 0.01, 0.02] {
        let mut problem = DecisionProblem::new(vec![act.clone()], CredalSet::precise(vec![0.5, 0.5]).unwrap(), DecisionRule::Interval);
        problem.delta = delta;
        let (lo, hi) = generalized_expectation_interval(&a, &problem, &act).unwrap();
        assert!(lo <= hi + 1e-12);
        if let Some((plo, phi)) = previous {
            assert!(lo >= plo - 1e-9 && hi <= phi + 1e-9, "δ = {delta}");
        }
        previous = Some((lo, hi));
    }
    let (lo, hi) = previous.unwrap();
    let (lo0, hi0) = {
        let problem = DecisionProblem::new(vec![act.clone()], CredalSet::precise(vec![0.5, 0.5]).unwrap(), DecisionRule::Interval);
        generalized_expectation_interval(&a, &problem, &act).unwrap()
    };
    assert!(hi - lo < hi0 - lo0, "interval must shrink strictly");
}

#[test]
fn vacuous_preferences_match_grid_bounds() {
    // Diagonal R1 on three consequences; artificial extremes are adjoined.
    let a = PreferenceSystem::from_parts(3, Relation::diagonal(3), Default::default()).unwrap();
    let act = Act::new("x", vec![0, 1, 2]);
    let problem = DecisionProblem::new(vec![act.clone()], CredalSet::uniform(3), DecisionRule::Interval);
    let (lo, hi) = generalized_expectation_interval(&a, &problem, &act).unwrap();
    let steps = 10;
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in 0..=steps {
        for y in 0..=steps {
            for z in 0..=steps {
                let e = (x + y + z) as f64 / (3 * steps) as f64;
                gmin = gmin.min(e);
                gmax = gmax.max(e);
            }
        }
    }
    assert!((lo - gmin).abs() < 1e-9 && (hi - gmax).abs() < 1e-9);
}

#[test]
fn subsystem_intervals_contain_full_intervals() {
    for seed in 0..20 {
        let truth = random_ground_truth(5, seed, TruthShape::Partial(0.2)).unwrap();
        let full = truth.system.clone();
        let r1: Vec<_> = full.r1().pairs().into_iter().filter(|&(i, j)| i == j || (i + j + seed as usize) % 3 != 0).collect();
        let r1 = Relation::from_pairs(5, r1).unwrap();
        let r2 = full.r2().iter().filter(|(x, y)| r1.contains_pair(*x) && r1.contains_pair(*y)).copied().collect();
        let sub = PreferenceSystem::from_parts(5, r1, r2).unwrap();
        assert!(sub.is_subsystem_of(&full).unwrap());
        let act = Act::new("x", vec![0, 2, 4]);
        let problem = DecisionProblem::new(vec![act.clone()], CredalSet::vacuous(3), DecisionRule::Interval);
        let (flo, fhi) = generalized_expectation_interval(&full, &problem, &act).unwrap();
        let (slo, shi) = generalized_expectation_interval(&sub, &problem, &act).unwrap();
        assert!(slo <= flo + 1e-9 && fhi <= shi + 1e-9, "seed {seed}");
    }
}

#[test]
fn choice_functions_are_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..25 {
        let truth = random_ground_truth(5, seed, TruthShape::Chain).unwrap();
        let acts: Vec<Act> = (0..4)
            .map(|k| Act::new(format!("X{k}"), (0..3).map(|_| rng.gen_range(0..5)).collect()))
            .collect();
        for rule in [DecisionRule::Am, DecisionRule::Interval] {
            let problem = DecisionProblem::new(acts.clone(), CredalSet::uniform(3), rule);
            let w = problem.all_acts();
            let choose = |w: &[usize]| match rule {
                DecisionRule::Am => am_dominance_choice(&truth.system, &problem, w).unwrap(),
                DecisionRule::Interval => interval_dominance_choice(&truth.system, &problem, w).unwrap(),
            };
            let c = choose(&w);
            if !c.is_empty() {
                assert_eq!(choose(&c), c, "seed {seed} {rule:?}");
            }
        }
    }
}

#[test]
fn interval_choice_examples() {
    let chain = Relation::from_pairs(3, [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)]).unwrap();
    let a = PreferenceSystem::from_parts(3, chain, Default::default()).unwrap();
    let problem = DecisionProblem::new(
        vec![Act::new("mixed", vec![0, 2]), Act::new("middle", vec![1, 1])],
        CredalSet::uniform(2),
        DecisionRule::Interval,
    );
    // [0.5, 0.5] against (0, 1): overlapping, so nothing dominates.
    assert!(interval_dominance_choice(&a, &problem, &[0, 1]).unwrap().is_empty());
}

/// Order-polytope vertices against a brute-force grid whose step divides
/// every vertex coordinate `1/m`, `m ≤ 6`.
#[test]
fn order_polytope_vertices_attain_every_linear_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..15 {
        let k = rng.gen_range(2..=4);
        let mut ge = Vec::new();
        for a in 0..k {
            for b in 0..k {
                if a != b && rng.gen_bool(0.25) && !ge.contains(&(b, a)) {
                    ge.push((a, b));
                }
            }
        }
        let m = CredalSet::from_comparisons(k, &ge).unwrap();
        let inside = |p: &[f64]| ge.iter().all(|&(a, b)| p[a] >= p[b] - 1e-12);
        for v in &m.extreme_points {
            assert!(inside(v));
        }
        let grid = simplex_grid(k, 60);
        let feasible: Vec<&Vec<f64>> = grid.iter().filter(|p| inside(p)).collect();
        for _ in 0..10 {
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dot = |p: &[f64]| p.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>();
            let vmax = m.extreme_points.iter().map(|v| dot(v)).fold(f64::NEG_INFINITY, f64::max);
            let gmax = feasible.iter().map(|p| dot(p)).fold(f64::NEG_INFINITY, f64::max);
            assert!((vmax - gmax).abs() < 1e-9, "{ge:?}");
        }
    }
}

fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(k, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::new(), &mut out);
    out
}

#[test]
fn malformed_credal_sets_are_rejected() {
    assert!(CredalSet::precise(vec![0.7, 0.2]).is_err());
    assert!(CredalSet::precise(vec![1.2, -0.2]).is_err());
    assert!(CredalSet::new(vec![], vec![]).is_err());
    assert!(CredalSet::from_comparisons(7, &[]).is_err());
}
