mod common;

use common::*;
use proptest::prelude::*;
use vck::rational::ratio;
use vck::relation::{
    cylinder_expand, eval_expr, measure_of, symdiff_measure, Atom, BoolExpr, FamilyResolver,
    FiberSource, FiberSpec, ProductDomain, Relation, SetFamily,
};

fn arb_expr(members: usize) -> impl Strategy<Value = BoolExpr> {
    let fibers = prop_oneof![
        Just(Atom::fiber(FiberSource::Member(0), vec![0], vec![0])),
        Just(Atom::fiber(
            FiberSource::Member(members - 1),
            vec![1],
            vec![1]
        )),
    ];
    let leaf = prop_oneof![
        any::<bool>().prop_map(BoolExpr::Const),
        (0..members).prop_map(BoolExpr::member),
        fibers.prop_map(BoolExpr::Atom),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::negation),
            prop::collection::vec(inner.clone(), 0..3).prop_map(BoolExpr::And),
            prop::collection::vec(inner, 0..3).prop_map(BoolExpr::Or),
        ]
    })
}

fn pair_with_measure() -> impl Strategy<Value = (Relation, Relation, vck::relation::ProductMeasure)>
{
    arb_domain(3, 3).prop_flat_map(|d| {
        (
            arb_relation(d.clone()),
            arb_relation(d.clone()),
            arb_measure(d, false),
        )
    })
}

proptest! {
    #[test]
    fn measure_is_modular((a, b, mu) in pair_with_measure()) {
        let lhs = measure_of(&a.union(&b).unwrap(), &mu).unwrap()
            + measure_of(&a.intersection(&b).unwrap(), &mu).unwrap();
        let rhs = measure_of(&a, &mu).unwrap() + measure_of(&b, &mu).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn measure_matches_pointwise_products(
        (r, weights) in arb_domain(3, 3).prop_flat_map(|d| (arb_relation(d.clone()), arb_measure(d, false)))
    ) {
        let axes: Vec<Vec<_>> = (0..r.domain().arity())
            .map(|a| {
                let m = weights.marginal(&[a]).unwrap();
                (0..r.domain().size(a)).map(|v| m.to_rational(m.point_weight(v))).collect()
            })
            .collect();
        prop_assert_eq!(measure_of(&r, &weights).unwrap(), naive_measure(&r, &axes));
    }

    #[test]
    fn symdiff_is_a_pseudometric(
        (a, b, c, mu) in arb_domain(2, 4).prop_flat_map(|d| {
            (arb_relation(d.clone()), arb_relation(d.clone()), arb_relation(d.clone()), arb_measure(d, false))
        })
    ) {
        let ab = symdiff_measure(&a, &b, &mu).unwrap();
        let bc = symdiff_measure(&b, &c, &mu).unwrap();
        let ac = symdiff_measure(&a, &c, &mu).unwrap();
        prop_assert_eq!(&ab, &symdiff_measure(&b, &a, &mu).unwrap());
        prop_assert!(ac <= &ab + &bc);
        prop_assert_eq!(symdiff_measure(&a, &a, &mu).unwrap(), ratio(0, 1));
    }

    #[test]
    fn positive_weights_separate_points(
        (a, b, mu) in arb_domain(3, 3).prop_flat_map(|d| {
            (arb_relation(d.clone()), arb_relation(d.clone()), arb_measure(d, true))
        })
    ) {
        let zero = symdiff_measure(&a, &b, &mu).unwrap() == ratio(0, 1);
        prop_assert_eq!(zero, a == b);
    }

    #[test]
    fn cylinder_then_reslice_recovers_the_fiber(
        (r, fixing) in arb_domain(3, 3)
            .prop_filter("needs a free axis", |d| d.arity() >= 2)
            .prop_flat_map(|d| {
                let point = d.sizes().iter().map(|&n| 0..n).collect::<Vec<_>>();
                let mask = 1u32..(1 << d.arity()) - 1;
                (arb_relation(d), (point, mask))
            })
    ) {
        let (point, mask) = fixing;
        let axes: Vec<usize> = (0..point.len()).filter(|a| mask >> a & 1 == 1).collect();
        let values: Vec<usize> = axes.iter().map(|&a| point[a]).collect();
        let spec = FiberSpec::new(&r, &axes, &values).unwrap();
        let fiber = spec.fiber().unwrap();
        let cyl = cylinder_expand(&spec, r.domain()).unwrap();
        prop_assert_eq!(cyl.fiber(&axes, &values).unwrap(), fiber.clone());
        // Every point of the cylinder projects into the fiber.
        let free = r.domain().free_axes(&axes);
        for p in cyl.points() {
            let q: Vec<usize> = free.iter().map(|&a| p[a]).collect();
            prop_assert!(fiber.contains(&q).unwrap());
        }
    }

    #[test]
    fn canonical_form_is_a_projection(
        (family, expr) in arb_family(common::domain(&[2, 2]), 3)
            .prop_flat_map(|f| { let n = f.len(); (Just(f), arb_expr(n)) })
    ) {
        let dnf = expr.canonical();
        prop_assert_eq!(dnf.to_expr().canonical(), dnf.clone());
        let direct = eval_expr(&expr, &family).unwrap();
        prop_assert_eq!(dnf.eval(&FamilyResolver::new(&family)).unwrap(), direct.clone());
        let text = dnf.to_string();
        let parsed: vck::relation::Dnf = text.parse().unwrap();
        prop_assert_eq!(parsed, dnf);
    }
}

#[test]
fn measure_of_full_is_one() {
    let d = ProductDomain::new(vec![3, 2]).unwrap();
    let mu = vck::relation::ProductMeasure::uniform(&d);
    assert_eq!(measure_of(&Relation::full(&d), &mu).unwrap(), ratio(1, 1));
    let f = SetFamily::new(d.clone(), vec![Relation::full(&d)]).unwrap();
    assert_eq!(
        eval_expr(&BoolExpr::negation(BoolExpr::member(0)), &f).unwrap(),
        Relation::empty(&d)
    );
}
