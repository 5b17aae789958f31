mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vck::learner::{
    dn_set, learn_h, pac_experiment, recover_slices, resolve_config, restrict, ConceptMode,
    LearnerConfig, SampleSlices, SliceValue,
};
use vck::packing::{greedy_packing, ExprBudget};
use vck::rational::{self, ratio};
use vck::relation::{FamilyResolver, ProductMeasure, Relation, SetFamily};

fn rectangles(n: usize) -> SetFamily {
    let d = domain(&[n, n]);
    let iv: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let members = iv
        .iter()
        .flat_map(|&(a, b)| iv.iter().map(move |&(c, e)| (a, b, c, e)))
        .map(|(a, b, c, e)| {
            Relation::from_fn(&d, |p| (a..=b).contains(&p[0]) && (c..=e).contains(&p[1]))
        })
        .collect();
    SetFamily::new(d, members).unwrap()
}

fn config() -> LearnerConfig {
    LearnerConfig {
        epsilon: ratio(1, 5),
        delta: ratio(1, 5),
        n1: 2,
        ell: 2,
        n2: 6,
        budget: ExprBudget::for_arity(2),
        seed: 0,
        rho_hat: Some(ratio(1, 2)),
    }
}

fn point_in(sizes: Vec<usize>) -> impl Strategy<Value = Vec<usize>> {
    sizes.into_iter().map(|n| 0..n).collect::<Vec<_>>()
}

fn concept_and_anchor() -> impl Strategy<Value = (Relation, Vec<usize>)> {
    prop::collection::vec(2usize..=4, 1..=3).prop_flat_map(|s| {
        let d = domain(&s);
        (arb_relation(d), point_in(s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dn_set_size((concept, anchor) in concept_and_anchor()) {
        let d = concept.domain();
        let off: usize = d.sizes().iter().map(|n| n - 1).product();
        prop_assert_eq!(dn_set(d, &anchor).unwrap().count(), d.total() - off);
    }

    #[test]
    fn recovered_slices_equal_direct_slices((concept, anchor) in concept_and_anchor()) {
        let s = restrict(&concept, &anchor).unwrap();
        for rec in recover_slices(&s).unwrap() {
            let values: Vec<usize> = rec.axes.iter().map(|&a| anchor[a]).collect();
            prop_assert_eq!(&rec.values, &values);
            match rec.slice {
                SliceValue::Point(b) => prop_assert_eq!(b, concept.contains(&anchor).unwrap()),
                SliceValue::Fiber(f) => prop_assert_eq!(f, concept.fiber(&rec.axes, &values).unwrap()),
            }
        }
    }

    #[test]
    fn hidden_points_do_not_matter(
        family in arb_family(domain(&[3, 3]), 6),
        concept in arb_relation(domain(&[3, 3])),
        flips in prop::collection::vec(any::<bool>(), 9),
        seed in any::<u64>(),
    ) {
        let cfg = config();
        let mu = ProductMeasure::uniform(family.domain());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors: Vec<Vec<usize>> = (0..cfg.batch_count()).map(|_| mu.sample_point(&mut rng)).collect();
        let d = family.domain();
        let mut seen = Relation::empty(d);
        for a in &anchors {
            seen = seen.union(&dn_set(d, a).unwrap()).unwrap();
        }
        let hidden = Relation::from_indices(d, (0..d.total()).filter(|&i| flips[i])).unwrap()
            .difference(&seen).unwrap();
        let mutant = concept.symmetric_difference(&hidden).unwrap();
        let centers = greedy_packing(&family, &mu, &ratio(1, 30)).unwrap().centers;
        let run = |c: &Relation| {
            let batches: Vec<SampleSlices> = anchors.iter().map(|a| restrict(c, a).unwrap()).collect();
            learn_h(&batches, &family, &centers, &mu, &cfg).unwrap()
        };
        let h = run(&concept);
        prop_assert!(h.member < family.len());
        prop_assert_eq!(h, run(&mutant));
    }
}

#[test]
fn experiment_reports_are_reproducible() {
    let family = rectangles(3);
    let mu = ProductMeasure::uniform(family.domain());
    let cfg = LearnerConfig {
        rho_hat: None,
        seed: 7,
        ..config()
    };
    let run = || {
        let r = pac_experiment(&family, &mu, &cfg, 5, ConceptMode::Sampled(4)).unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

/// The sample estimate of the chosen expression's distance is within ε/6 of
/// the exact distance in at least a `1 − δ′` fraction of trials.
#[test]
fn sample_fraction_tracks_exact_distance() {
    let family = rectangles(3);
    let mu = ProductMeasure::uniform(family.domain());
    let base = LearnerConfig {
        budget: ExprBudget {
            max_centers_used: 1,
            max_fibers: 1,
            max_dnf_terms: 1,
            fiber_arity_cap: 1,
            center_fibers: false,
            max_candidates: ExprBudget::DEFAULT_CANDIDATES,
        },
        ..config()
    };
    let resolved = resolve_config(
        &family,
        &mu,
        &LearnerConfig {
            rho_hat: None,
            ..base.clone()
        },
        50,
    )
    .unwrap();
    let cfg = LearnerConfig {
        ell: resolved.ell,
        n2: resolved.n2,
        rho_hat: Some(resolved.rho_hat.clone()),
        ..base
    };
    let tolerance = &cfg.epsilon / rational::ratio(6, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut good, mut total) = (0u32, 0u32);
    for concept in family.members().iter().step_by(4) {
        for _ in 0..10 {
            let batches: Vec<SampleSlices> = (0..cfg.batch_count())
                .map(|_| restrict(concept, &mu.sample_point(&mut rng)).unwrap())
                .collect();
            let h = learn_h(&batches, &family, &resolved.centers, &mu, &cfg).unwrap();
            let (Some(expr), Some(miss)) = (h.witness, h.sample_mismatches) else {
                continue;
            };
            let eval = expr
                .eval(&FamilyResolver::with_target(&family, concept))
                .unwrap();
            let exact = vck::relation::symdiff_measure(&eval, concept, &mu).unwrap();
            let fraction = ratio(miss as i64, cfg.n2 as i64);
            let gap = if exact > fraction {
                exact - fraction
            } else {
                fraction - exact
            };
            total += 1;
            if gap <= tolerance {
                good += 1;
            }
        }
    }
    assert!(total > 0);
    let rate = ratio(good as i64, total as i64);
    assert!(rate >= ratio(1, 1) - cfg.delta_prime(), "{good}/{total}");
}
