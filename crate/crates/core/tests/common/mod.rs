//! Shared generators and independent brute-force oracles.
#![allow(dead_code)]

use std::collections::HashSet;

use proptest::prelude::*;
use vck::rational::ratio;
use vck::relation::{ProductDomain, ProductMeasure, Relation, SetFamily};
use vck::Rational;

pub fn domain(sizes: &[usize]) -> ProductDomain {
    ProductDomain::new(sizes.to_vec()).unwrap()
}

pub fn relation_from_bits(d: &ProductDomain, bits: &[bool]) -> Relation {
    Relation::from_indices(d, (0..d.total()).filter(|&i| bits[i])).unwrap()
}

pub fn arb_domain(max_arity: usize, max_size: usize) -> impl Strategy<Value = ProductDomain> {
    prop::collection::vec(1..=max_size, 1..=max_arity).prop_map(|s| domain(&s))
}

pub fn arb_relation(d: ProductDomain) -> impl Strategy<Value = Relation> {
    prop::collection::vec(any::<bool>(), d.total()).prop_map(move |b| relation_from_bits(&d, &b))
}

pub fn arb_family(d: ProductDomain, max_members: usize) -> impl Strategy<Value = SetFamily> {
    prop::collection::vec(
        prop::collection::vec(any::<bool>(), d.total()),
        1..=max_members,
    )
    .prop_map(move |ms| {
        let members = ms.iter().map(|b| relation_from_bits(&d, b)).collect();
        SetFamily::new(d.clone(), members).unwrap()
    })
}

/// Axis weights from small integers; `positive` forces every weight ≥ 1.
pub fn arb_measure(d: ProductDomain, positive: bool) -> impl Strategy<Value = ProductMeasure> {
    let lo = if positive { 1u64 } else { 0 };
    let axes: Vec<_> = d
        .sizes()
        .iter()
        .map(|&n| prop::collection::vec(lo..5u64, n))
        .collect();
    axes.prop_map(move |raw| {
        let axes = raw
            .into_iter()
            .map(|mut w| {
                if w.iter().all(|&x| x == 0) {
                    w[0] = 1;
                }
                let total: u64 = w.iter().sum();
                w.iter().map(|&x| ratio(x as i64, total as i64)).collect()
            })
            .collect();
        ProductMeasure::new(d.clone(), axes).unwrap()
    })
}

/// Exact measure by summing point products, without the scaled-integer path.
pub fn naive_measure(r: &Relation, weights: &[Vec<Rational>]) -> Rational {
    let d = r.domain();
    let mut total = ratio(0, 1);
    for p in d.points() {
        if r.contains(&p).unwrap() {
            let mut w = ratio(1, 1);
            for (axis, &c) in p.iter().enumerate() {
                w *= &weights[axis][c];
            }
            total += w;
        }
    }
    total
}

fn subsets(n: usize, d: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == d)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

fn all_boxes(sizes: &[usize], d: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for &n in sizes {
        let choices = subsets(n, d);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(c.clone());
                    p
                })
            })
            .collect();
    }
    out
}

fn box_cells(b: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut cells: Vec<Vec<usize>> = vec![vec![]];
    for side in b {
        cells = cells
            .into_iter()
            .flat_map(|p| {
                side.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    cells
}

/// VC_k by enumerating every box and every trace, no pruning.
pub fn naive_vck(family: &SetFamily) -> usize {
    let sizes = family.domain().sizes().to_vec();
    let mut best = 0;
    let max_d = *sizes.iter().min().unwrap();
    for d in 1..=max_d {
        let mut any = false;
        for b in all_boxes(&sizes, d) {
            let cells = box_cells(&b);
            let traces: HashSet<Vec<bool>> = family
                .members()
                .iter()
                .map(|m| cells.iter().map(|c| m.contains(c).unwrap()).collect())
                .collect();
            if traces.len() as u128 == 1u128 << cells.len() {
                any = true;
                break;
            }
        }
        if any {
            best = d;
        }
    }
    best
}

/// Smallest edge count forcing a full s-box in every subset of `[m]^k`,
/// by checking every subset.
pub fn naive_zarankiewicz(k: usize, m: usize, s: usize) -> u64 {
    let sizes = vec![m; k];
    let d = domain(&sizes);
    let n = d.total();
    assert!(n <= 16);
    let boxes: Vec<Vec<usize>> = if s > m {
        vec![]
    } else {
        all_boxes(&sizes, s)
            .iter()
            .map(|b| {
                box_cells(b)
                    .iter()
                    .map(|c| d.index_of(c).unwrap())
                    .collect()
            })
            .collect()
    };
    let mut max_free = 0;
    for mask in 0u32..(1 << n) {
        let free = boxes.iter().all(|b| b.iter().any(|&i| mask >> i & 1 == 0));
        if free {
            max_free = max_free.max(mask.count_ones());
        }
    }
    max_free as u64 + 1
}
