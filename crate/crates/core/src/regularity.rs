//! Slice-wise VC_k dimension of higher-arity relations, ε-nets of slices,
//! verification of slice-wise decompositions, and a best-effort slice-wise
//! packing search.
//!
//! Axes `0..=k` are the head; the remaining axes form the tail whose values
//! `z̄` index the slices `E_z̄ ⊆ V_head`.

use std::collections::HashSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::search::{first_accepted, LiteralPool, SearchOutcome};
use crate::packing::ExprBudget;
use crate::rational::{self, serde_rational, Rational};
use crate::relation::{
    mixed_radix, Atom, AtomResolver, Dnf, FiberSource, ProductDomain, ProductMeasure, Relation,
};
use crate::vcdim::vck_of_relation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixingDimension {
    /// The fixed axes `I`, ascending.
    pub axes: Vec<usize>,
    /// The fixed values `b`.
    pub values: Vec<usize>,
    pub vck: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlicewiseReport {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub per_fixing: Vec<FixingDimension>,
    pub max: usize,
}

fn subsets_of_size(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u64..(1 << n))
        .filter(|m| m.count_ones() as usize == r)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// VC_k of every fiber obtained by fixing `k′ − (k+1)` coordinates. Each
/// fiber is read as a (k+1)-ary relation sliced along its last free axis.
pub fn slicewise_vck(e: &Relation, k: usize) -> Result<SlicewiseReport> {
    let domain = e.domain();
    let arity = domain.arity();
    if k == 0 || arity <= k {
        return Err(Error::ArityMismatch {
            expected: k + 1,
            found: arity,
        });
    }
    let mut per_fixing = Vec::new();
    for axes in subsets_of_size(arity, arity - k - 1) {
        let radices: Vec<usize> = axes.iter().map(|&a| domain.size(a)).collect();
        for values in mixed_radix(&radices) {
            let fiber = if axes.is_empty() {
                e.clone()
            } else {
                e.fiber(&axes, &values)?
            };
            let vck = vck_of_relation(&fiber, k)?.dimension;
            per_fixing.push(FixingDimension {
                axes: axes.clone(),
                values,
                vck,
            });
        }
    }
    let max = per_fixing.iter().map(|f| f.vck).max().unwrap_or(0);
    Ok(SlicewiseReport {
        k,
        sizes: domain.sizes().to_vec(),
        per_fixing,
        max,
    })
}

/// Head and tail split of a relation for parameter `k`.
struct Split {
    head: ProductDomain,
    tail_axes: Vec<usize>,
    tail_values: Vec<Vec<usize>>,
}

impl Split {
    fn new(domain: &ProductDomain, k: usize) -> Result<Self> {
        let arity = domain.arity();
        if arity <= k {
            return Err(Error::ArityMismatch {
                expected: k + 1,
                found: arity,
            });
        }
        let head = domain.sub_domain(&(0..=k).collect::<Vec<_>>())?;
        let tail_axes: Vec<usize> = (k + 1..arity).collect();
        let radices: Vec<usize> = tail_axes.iter().map(|&a| domain.size(a)).collect();
        Ok(Split {
            head,
            tail_values: mixed_radix(&radices).collect(),
            tail_axes,
        })
    }

    fn slice(&self, r: &Relation, tail: &[usize]) -> Result<Relation> {
        if self.tail_axes.is_empty() {
            Ok(r.clone())
        } else {
            r.fiber(&self.tail_axes, tail)
        }
    }
}

/// A greedy net over the slices `E_z̄`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceNet {
    /// Tail values of the chosen representatives, in selection order.
    pub centers: Vec<Vec<usize>>,
    /// For every tail value (ascending), the index into `centers` of its
    /// nearest representative (first on ties).
    pub nearest: Vec<usize>,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub distances: Vec<Rational>,
}

/// First-uncovered greedy net over the slices of `e` with head measure `mu`.
pub fn slice_net(
    e: &Relation,
    k: usize,
    mu: &ProductMeasure,
    epsilon: &Rational,
) -> Result<SliceNet> {
    rational::check_half_open_unit("epsilon", epsilon)?;
    let split = Split::new(e.domain(), k)?;
    if mu.domain() != &split.head {
        return Err(Error::DomainMismatch(format!(
            "measure sizes {:?}, slice sizes {:?}",
            mu.domain().sizes(),
            split.head.sizes()
        )));
    }
    let slices = split
        .tail_values
        .iter()
        .map(|z| split.slice(e, z))
        .collect::<Result<Vec<_>>>()?;
    let threshold = mu.threshold(epsilon);
    let mut chosen: Vec<usize> = Vec::new();
    for (i, s) in slices.iter().enumerate() {
        if chosen
            .iter()
            .all(|&c| mu.symdiff_mass_words(s.words(), slices[c].words()) > threshold)
        {
            chosen.push(i);
        }
    }
    let mut nearest = Vec::with_capacity(slices.len());
    let mut distances = Vec::with_capacity(slices.len());
    for s in &slices {
        let (ci, mass) = chosen
            .iter()
            .enumerate()
            .map(|(ci, &c)| (ci, mu.symdiff_mass_words(s.words(), slices[c].words())))
            .min_by_key(|&(_, m)| m)
            .expect("the first slice is always chosen");
        assert!(mass <= threshold, "greedy net leaves a slice uncovered");
        nearest.push(ci);
        distances.push(mu.to_rational(mass));
    }
    Ok(SliceNet {
        centers: chosen
            .iter()
            .map(|&c| split.tail_values[c].clone())
            .collect(),
        nearest,
        distances,
    })
}

/// For a ternary relation: values `z_1, …, z_N` of the last axis such that
/// every slice `E_z` lies within ε of some `E_{z_i}` under `mu12`, a measure
/// on the first two axes.
pub fn fiber_eps_net(
    e: &Relation,
    mu12: &ProductMeasure,
    epsilon: &Rational,
) -> Result<Vec<usize>> {
    if e.domain().arity() != 3 {
        return Err(Error::ArityMismatch {
            expected: 3,
            found: e.domain().arity(),
        });
    }
    Ok(slice_net(e, 1, mu12, epsilon)?
        .centers
        .into_iter()
        .map(|z| z[0])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentSet {
    /// Points over the axes `I ∪ tail`, ascending.
    Points {
        points: Vec<Vec<usize>>,
    },
    Constant {
        value: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub t: usize,
    #[serde(rename = "I")]
    pub axes: Vec<usize>,
    #[serde(flatten)]
    pub set: ComponentSet,
}

/// Sets `S^t_I` for `t < terms` and `I ⊆ head`, `|I| ≤ k`. A pair `(t, I)`
/// without a component stands for the full set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub terms: usize,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// The slices farther than ε have total tail measure at most ε.
    AlmostAll,
    /// Every slice is within ε.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceCheck {
    pub tail: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub dist: Rational,
    #[serde(with = "serde_rational")]
    pub tail_mass: Rational,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionReport {
    pub mode: VerifyMode,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub rows: Vec<SliceCheck>,
    #[serde(with = "serde_rational")]
    pub exception_mass: Rational,
    #[serde(with = "serde_rational")]
    pub max_dist: Rational,
    pub pass: bool,
}

impl Decomposition {
    /// The union over `t` of the intersections of cylinders, over the whole
    /// domain.
    pub fn evaluate(&self) -> Result<Relation> {
        let domain = ProductDomain::new(self.sizes.clone())?;
        let k = self.k;
        let arity = domain.arity();
        if k == 0 || arity <= k {
            return Err(Error::ShapeMismatch(format!(
                "k = {k} needs arity above k, got {arity}"
            )));
        }
        let tail: Vec<usize> = (k + 1..arity).collect();
        let mut seen = HashSet::new();
        let mut terms: Vec<Relation> = vec![Relation::full(&domain); self.terms];
        for c in &self.components {
            if c.t >= self.terms {
                return Err(Error::ShapeMismatch(format!(
                    "component t = {} with only {} terms",
                    c.t, self.terms
                )));
            }
            if c.axes.len() > k
                || c.axes.windows(2).any(|w| w[0] >= w[1])
                || c.axes.iter().any(|&a| a > k)
            {
                return Err(Error::ShapeMismatch(format!(
                    "I = {:?} must be an ascending subset of 0..={k} of size at most {k}",
                    c.axes
                )));
            }
            if !seen.insert((c.t, c.axes.clone())) {
                return Err(Error::ShapeMismatch(format!(
                    "component (t = {}, I = {:?}) given twice",
                    c.t, c.axes
                )));
            }
            let kept: Vec<usize> = c.axes.iter().chain(&tail).copied().collect();
            let cylinder = match &c.set {
                ComponentSet::Constant { value: true } => Relation::full(&domain),
                ComponentSet::Constant { value: false } => Relation::empty(&domain),
                ComponentSet::Points { points } => {
                    if kept.is_empty() {
                        return Err(Error::ShapeMismatch(
                            "a component over no axes must be a constant".into(),
                        ));
                    }
                    let sub = domain.sub_domain(&kept)?;
                    let mut unique = HashSet::new();
                    if let Some(p) = points.iter().find(|p| !unique.insert(p.as_slice())) {
                        return Err(Error::ShapeMismatch(format!("point {p:?} listed twice")));
                    }
                    let set = Relation::from_points(&sub, points.iter().map(Vec::as_slice))?;
                    let fixed = domain.free_axes(&kept);
                    if fixed.is_empty() {
                        set
                    } else {
                        Relation::cylinder_of(&domain, &fixed, &set)?
                    }
                }
            };
            terms[c.t] = terms[c.t].intersection(&cylinder)?;
        }
        let mut acc = Relation::empty(&domain);
        for t in &terms {
            acc = acc.union(t)?;
        }
        Ok(acc)
    }
}

/// Compares every slice `E_z̄` with the decomposition's slice and reports
/// exact distances under the head marginal of `mu`.
pub fn verify_decomposition(
    e: &Relation,
    dec: &Decomposition,
    mu: &ProductMeasure,
    epsilon: &Rational,
    mode: VerifyMode,
) -> Result<DecompositionReport> {
    if dec.sizes != e.domain().sizes() {
        return Err(Error::ShapeMismatch(format!(
            "decomposition sizes {:?}, relation sizes {:?}",
            dec.sizes,
            e.domain().sizes()
        )));
    }
    if mu.domain() != e.domain() {
        return Err(Error::DomainMismatch(
            "measure and relation domains differ".into(),
        ));
    }
    let approx = dec.evaluate()?;
    let split = Split::new(e.domain(), dec.k)?;
    let head_mu = mu.marginal(&(0..=dec.k).collect::<Vec<_>>())?;
    let tail_mu = if split.tail_axes.is_empty() {
        None
    } else {
        Some(mu.marginal(&split.tail_axes)?)
    };
    let threshold = head_mu.threshold(epsilon);
    let mut rows = Vec::with_capacity(split.tail_values.len());
    let mut exception = Rational::zero();
    let mut max_mass = 0u128;
    for z in &split.tail_values {
        let a = split.slice(e, z)?;
        let b = split.slice(&approx, z)?;
        let mass = head_mu.symdiff_mass_words(a.words(), b.words());
        max_mass = max_mass.max(mass);
        let tail_mass = match &tail_mu {
            Some(t) => t.to_rational(t.point_weight(t.domain().index_of(z)?)),
            None => Rational::from_integer(1.into()),
        };
        let within = mass <= threshold;
        if !within {
            exception += &tail_mass;
        }
        rows.push(SliceCheck {
            tail: z.clone(),
            dist: head_mu.to_rational(mass),
            tail_mass,
            within,
        });
    }
    let pass = match mode {
        VerifyMode::All => max_mass <= threshold,
        VerifyMode::AlmostAll => &exception <= epsilon,
    };
    Ok(DecompositionReport {
        mode,
        epsilon: epsilon.clone(),
        rows,
        exception_mass: exception,
        max_dist: head_mu.to_rational(max_mass),
        pass,
    })
}

/// The decomposition induced by a net of a ternary relation: one term per
/// (center, first coordinate) pair, selecting the tail values assigned to
/// that center, the first coordinate, and the matching row of the center's
/// slice. Each slice is thereby replaced by its net representative.
pub fn decomposition_from_net(e: &Relation, net: &SliceNet) -> Result<Decomposition> {
    let domain = e.domain();
    if domain.arity() != 3 {
        return Err(Error::ArityMismatch {
            expected: 3,
            found: domain.arity(),
        });
    }
    let (n0, n1, n2) = (domain.size(0), domain.size(1), domain.size(2));
    if net.nearest.len() != n2 || net.centers.iter().any(|z| z.len() != 1 || z[0] >= n2) {
        return Err(Error::ShapeMismatch(
            "net does not match the relation".into(),
        ));
    }
    let mut components = Vec::new();
    let mut t = 0;
    for (ci, zc) in net.centers.iter().enumerate() {
        let assigned: Vec<Vec<usize>> = (0..n2)
            .filter(|&z| net.nearest[z] == ci)
            .map(|z| vec![z])
            .collect();
        for x in 0..n0 {
            let row: Vec<usize> = (0..n1)
                .filter(|&y| e.contains_index(domain.index_unchecked(&[x, y, zc[0]])))
                .collect();
            if row.is_empty() {
                continue;
            }
            components.push(Component {
                t,
                axes: vec![],
                set: ComponentSet::Points {
                    points: assigned.clone(),
                },
            });
            components.push(Component {
                t,
                axes: vec![0],
                set: ComponentSet::Points {
                    points: (0..n2).map(|z| vec![x, z]).collect(),
                },
            });
            components.push(Component {
                t,
                axes: vec![1],
                set: ComponentSet::Points {
                    points: row
                        .iter()
                        .flat_map(|&y| (0..n2).map(move |z| vec![y, z]))
                        .collect(),
                },
            });
            t += 1;
        }
    }
    Ok(Decomposition {
        k: 1,
        sizes: domain.sizes().to_vec(),
        terms: t,
        components,
    })
}

/// Resolves fiber atoms of `E` (fixing every tail axis and possibly some
/// head axes) to cylinders over the head.
pub struct SliceResolver<'a> {
    relation: &'a Relation,
    head: ProductDomain,
}

impl<'a> SliceResolver<'a> {
    pub fn new(relation: &'a Relation, k: usize) -> Result<Self> {
        Ok(SliceResolver {
            head: Split::new(relation.domain(), k)?.head,
            relation,
        })
    }
}

impl AtomResolver for SliceResolver<'_> {
    fn domain(&self) -> &ProductDomain {
        &self.head
    }

    fn resolve(&self, atom: &Atom) -> Result<Relation> {
        let fa = match atom {
            Atom::Fiber(fa) if fa.source == FiberSource::Target => fa,
            _ => {
                return Err(Error::DanglingReference(format!(
                    "{atom} is not a fiber of the relation"
                )))
            }
        };
        let head_arity = self.head.arity();
        let arity = self.relation.domain().arity();
        if !(head_arity..arity).all(|a| fa.axes.contains(&a)) {
            return Err(Error::ShapeMismatch(format!(
                "{atom} leaves a tail axis free"
            )));
        }
        let fixed_head: Vec<usize> = fa
            .axes
            .iter()
            .copied()
            .filter(|&a| a < head_arity)
            .collect();
        if fixed_head.len() == head_arity {
            return Err(Error::ShapeMismatch(format!(
                "{atom} fixes every head axis"
            )));
        }
        let fiber = if fa.axes.is_empty() {
            self.relation.clone()
        } else {
            self.relation.fiber(&fa.axes, &fa.values)?
        };
        if fixed_head.is_empty() {
            Ok(fiber)
        } else {
            Relation::cylinder_of(&self.head, &fixed_head, &fiber)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum SliceWitness {
    Found {
        tail: Vec<usize>,
        expr: Dnf,
        #[serde(with = "serde_rational")]
        dist: Rational,
    },
    Failed {
        tail: Vec<usize>,
        fail: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlicewiseCertificate {
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub k: usize,
    pub anchors: Vec<Vec<usize>>,
    pub witnesses: Vec<SliceWitness>,
    pub budget: ExprBudget,
}

impl SlicewiseCertificate {
    pub fn failures(&self) -> usize {
        self.witnesses
            .iter()
            .filter(|w| matches!(w, SliceWitness::Failed { .. }))
            .count()
    }
}

/// Per slice, the first DNF within the budget that is ε-close, built from
/// fibers of `E` at the anchors (every fixing that includes the tail and
/// leaves at least one head axis free) and fibers of arity at most the
/// budget cap with the tail fixed at the slice's own value.
///
/// Anchors are the net representatives extended by head points in
/// ascending order, cycling through the representatives.
pub fn slicewise_packing_search(
    e: &Relation,
    mu: &ProductMeasure,
    k: usize,
    epsilon: &Rational,
    budget: &ExprBudget,
    anchor_count: usize,
) -> Result<SlicewiseCertificate> {
    if mu.domain() != e.domain() {
        return Err(Error::DomainMismatch(
            "measure and relation domains differ".into(),
        ));
    }
    let split = Split::new(e.domain(), k)?;
    budget.validate(k.max(1))?;
    let head_arity = k + 1;
    let head_mu = mu.marginal(&(0..head_arity).collect::<Vec<_>>())?;
    let net = slice_net(e, k, &head_mu, epsilon)?;
    let head_points: Vec<Vec<usize>> = split.head.points().collect();
    let anchors: Vec<Vec<usize>> = head_points
        .iter()
        .flat_map(|x| {
            net.centers
                .iter()
                .map(move |z| x.iter().chain(z).copied().collect::<Vec<_>>())
        })
        .take(anchor_count)
        .collect();

    let resolver = SliceResolver::new(e, k)?;
    let tail = &split.tail_axes;
    let fixed_with_tail =
        |head_fixed: &[usize]| -> Vec<usize> { head_fixed.iter().chain(tail).copied().collect() };
    let mut anchored: Vec<(Atom, Vec<u64>)> = Vec::new();
    if budget.max_fibers > 0 {
        for r in 0..head_arity {
            for head_fixed in subsets_of_size(head_arity, r) {
                let axes = fixed_with_tail(&head_fixed);
                let mut seen = HashSet::new();
                for a in &anchors {
                    let values: Vec<usize> = axes.iter().map(|&i| a[i]).collect();
                    if seen.insert(values.clone()) {
                        let atom = Atom::fiber(FiberSource::Target, axes.clone(), values);
                        let bits = resolver.resolve(&atom)?.words().to_vec();
                        anchored.push((atom, bits));
                    }
                }
            }
        }
    }
    let varying: Vec<Vec<usize>> = if budget.max_fibers > 0 {
        (head_arity - budget.fiber_arity_cap.min(head_arity - 1)..head_arity)
            .filter(|&r| head_arity - r <= budget.fiber_arity_cap && r >= 2)
            .flat_map(|r| subsets_of_size(head_arity, r))
            .collect()
    } else {
        Vec::new()
    };

    let threshold = head_mu.threshold(epsilon);
    let mut witnesses = Vec::with_capacity(split.tail_values.len());
    for z in &split.tail_values {
        let target = split.slice(e, z)?;
        let mut atoms = anchored.clone();
        for head_fixed in &varying {
            let axes = fixed_with_tail(head_fixed);
            let radices: Vec<usize> = head_fixed.iter().map(|&a| split.head.size(a)).collect();
            for hv in mixed_radix(&radices) {
                let values: Vec<usize> = hv.iter().chain(z).copied().collect();
                let atom = Atom::fiber(FiberSource::Target, axes.clone(), values);
                let bits = resolver.resolve(&atom)?.words().to_vec();
                atoms.push((atom, bits));
            }
        }
        let pool = LiteralPool::new(&split.head, atoms);
        let limits = crate::packing::search::SearchLimits {
            max_centers: 0,
            ..budget.limits()
        };
        let mut last = 0;
        let outcome = first_accepted(&pool, &limits, |bits| {
            last = head_mu.symdiff_mass_words(bits, target.words());
            last <= threshold
        });
        witnesses.push(match outcome {
            SearchOutcome::Found { expr, .. } => SliceWitness::Found {
                tail: z.clone(),
                expr,
                dist: head_mu.to_rational(last),
            },
            SearchOutcome::Exhausted | SearchOutcome::CandidateCap => SliceWitness::Failed {
                tail: z.clone(),
                fail: true,
            },
        });
    }
    Ok(SlicewiseCertificate {
        epsilon: epsilon.clone(),
        k,
        anchors,
        witnesses,
        budget: *budget,
    })
}

/// Re-evaluates every slice witness of a certificate exactly.
pub fn verify_slicewise_certificate(
    e: &Relation,
    mu: &ProductMeasure,
    cert: &SlicewiseCertificate,
) -> Result<bool> {
    let split = Split::new(e.domain(), cert.k)?;
    let head_mu = mu.marginal(&(0..=cert.k).collect::<Vec<_>>())?;
    let resolver = SliceResolver::new(e, cert.k)?;
    let mut ok = cert.witnesses.len() == split.tail_values.len();
    for (w, z) in cert.witnesses.iter().zip(&split.tail_values) {
        match w {
            SliceWitness::Found { tail, expr, dist } => {
                let target = split.slice(e, z)?;
                let d = expr.eval(&resolver)?;
                let actual =
                    head_mu.to_rational(head_mu.symdiff_mass_words(d.words(), target.words()));
                ok &= tail == z && &actual == dist && actual <= cert.epsilon;
            }
            SliceWitness::Failed { tail, fail } => ok &= tail == z && *fail,
        }
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn cube(k: usize, n: usize) -> ProductDomain {
        ProductDomain::cube(k, n).unwrap()
    }

    #[test]
    fn slicewise_examples() {
        let full = Relation::full(&cube(3, 3));
        let r = slicewise_vck(&full, 1).unwrap();
        assert_eq!(r.max, 0);
        assert_eq!(r.per_fixing.len(), 9);

        let eq = Relation::from_fn(&cube(3, 3), |c| c[0] == c[1]);
        let r = slicewise_vck(&eq, 1).unwrap();
        assert!(r.per_fixing.iter().all(|f| f.vck <= 1));
        assert_eq!(r.max, 1);

        // Last coordinate enumerates all 16 subsets of the 2×2 box.
        let d = ProductDomain::new(vec![2, 2, 16]).unwrap();
        let ps = Relation::from_fn(&d, |c| c[2] >> (2 * c[0] + c[1]) & 1 == 1);
        let r = slicewise_vck(&ps, 2).unwrap();
        assert_eq!(r.max, 2);
        assert_eq!(r.per_fixing.len(), 1);

        assert!(slicewise_vck(&eq, 3).is_err());
    }

    #[test]
    fn swapping_head_and_tail_changes_the_dimension() {
        // Point-vs-subset membership: subsets as slices shatter 2 points,
        // points as slices give only two sets.
        let d = ProductDomain::new(vec![2, 4]).unwrap();
        let mem = Relation::from_fn(&d, |c| c[1] >> c[0] & 1 == 1);
        assert_eq!(slicewise_vck(&mem, 1).unwrap().max, 2);
        let swapped = mem.permute_axes(&[1, 0]).unwrap();
        assert_eq!(slicewise_vck(&swapped, 1).unwrap().max, 1);
    }

    #[test]
    fn net_examples() {
        let d = cube(3, 4);
        let mu12 = ProductMeasure::uniform(&cube(2, 4));
        let same = Relation::from_fn(&d, |c| c[0] == c[1]);
        assert_eq!(fiber_eps_net(&same, &mu12, &ratio(1, 4)).unwrap(), vec![0]);

        let two = Relation::from_fn(&d, |c| c[2] % 2 == 1);
        assert_eq!(
            fiber_eps_net(&two, &mu12, &ratio(1, 2)).unwrap(),
            vec![0, 1]
        );

        // E_z = {x < z} × V_2 has mass z/4, so slices z and z' are |z − z'|/4 apart.
        let lt = Relation::from_fn(&d, |c| c[0] < c[2]);
        assert_eq!(fiber_eps_net(&lt, &mu12, &ratio(1, 4)).unwrap(), vec![0, 2]);
        assert!(fiber_eps_net(&lt, &ProductMeasure::uniform(&cube(2, 3)), &ratio(1, 4)).is_err());
    }

    #[test]
    fn decomposition_round_trip() {
        let d = cube(3, 4);
        let mu = ProductMeasure::uniform(&d);
        let lt = Relation::from_fn(&d, |c| c[0] < c[2]);
        let net = slice_net(&lt, 1, &ProductMeasure::uniform(&cube(2, 4)), &ratio(1, 4)).unwrap();
        let dec = decomposition_from_net(&lt, &net).unwrap();
        let rep = verify_decomposition(&lt, &dec, &mu, &ratio(1, 4), VerifyMode::All).unwrap();
        assert!(rep.pass);
        for (row, d) in rep.rows.iter().zip(&net.distances) {
            assert_eq!(&row.dist, d);
        }
        let text = serde_json::to_string(&dec).unwrap();
        let back: Decomposition = serde_json::from_str(&text).unwrap();
        assert_eq!(back, dec);
    }

    #[test]
    fn exact_and_empty_decompositions() {
        let d = cube(3, 2);
        let mu = ProductMeasure::uniform(&d);
        let e = Relation::from_fn(&d, |c| c[0] == c[2] && c[1] == 1);
        let exact = Decomposition {
            k: 1,
            sizes: vec![2, 2, 2],
            terms: 1,
            components: vec![
                Component {
                    t: 0,
                    axes: vec![0],
                    set: ComponentSet::Points {
                        points: vec![vec![0, 0], vec![1, 1]],
                    },
                },
                Component {
                    t: 0,
                    axes: vec![1],
                    set: ComponentSet::Points {
                        points: vec![vec![1, 0], vec![1, 1]],
                    },
                },
            ],
        };
        assert_eq!(exact.evaluate().unwrap(), e);
        let eps = ratio(1, 100);
        assert!(
            verify_decomposition(&e, &exact, &mu, &eps, VerifyMode::All)
                .unwrap()
                .pass
        );
        let empty = Decomposition {
            k: 1,
            sizes: vec![2, 2, 2],
            terms: 0,
            components: vec![],
        };
        let rep = verify_decomposition(&e, &empty, &mu, &eps, VerifyMode::All).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.max_dist, ratio(1, 4));
        let bad = Decomposition {
            components: vec![Component {
                t: 3,
                axes: vec![],
                set: ComponentSet::Constant { value: true },
            }],
            ..empty.clone()
        };
        assert!(verify_decomposition(&e, &bad, &mu, &eps, VerifyMode::All).is_err());
    }

    #[test]
    fn one_bad_slice_of_small_tail_mass() {
        // Tail axis of size 8; the approximation misses the slice z = 7 only.
        let d = ProductDomain::new(vec![2, 2, 8]).unwrap();
        let mu = ProductMeasure::uniform(&d);
        let e = Relation::from_fn(&d, |c| c[0] == 0 || c[2] == 7);
        let dec = Decomposition {
            k: 1,
            sizes: vec![2, 2, 8],
            terms: 1,
            components: vec![Component {
                t: 0,
                axes: vec![0],
                set: ComponentSet::Points {
                    points: (0..8).map(|z| vec![0, z]).collect(),
                },
            }],
        };
        let eps = ratio(1, 4);
        let almost = verify_decomposition(&e, &dec, &mu, &eps, VerifyMode::AlmostAll).unwrap();
        assert!(almost.pass);
        assert_eq!(almost.exception_mass, ratio(1, 8));
        assert!(
            !verify_decomposition(&e, &dec, &mu, &eps, VerifyMode::All)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn packing_search_examples() {
        let d = cube(3, 4);
        let mu = ProductMeasure::uniform(&d);
        let budget = ExprBudget {
            max_centers_used: 0,
            max_fibers: 1,
            max_dnf_terms: 1,
            fiber_arity_cap: 0,
            center_fibers: false,
            max_candidates: 100_000,
        };
        // Three distinct slices.
        let e = Relation::from_fn(&d, |c| match c[2] % 3 {
            0 => c[0] == c[1],
            1 => c[0] < c[1],
            _ => c[0] > 2,
        });
        let cert = slicewise_packing_search(&e, &mu, 1, &ratio(1, 100), &budget, 3).unwrap();
        assert_eq!(cert.anchors.len(), 3);
        assert_eq!(cert.failures(), 0);
        for w in &cert.witnesses {
            assert!(matches!(w, SliceWitness::Found { dist, .. } if dist.is_zero()));
        }
        assert!(verify_slicewise_certificate(&e, &mu, &cert).unwrap());

        let lt = Relation::from_fn(&d, |c| c[0] < c[2]);
        let cert = slicewise_packing_search(&lt, &mu, 1, &ratio(1, 4), &budget, 2).unwrap();
        assert_eq!(cert.failures(), 0);
        assert!(verify_slicewise_certificate(&lt, &mu, &cert).unwrap());

        let zero = ExprBudget {
            max_dnf_terms: 0,
            ..budget
        };
        let cert = slicewise_packing_search(&e, &mu, 1, &ratio(1, 100), &zero, 3).unwrap();
        assert_eq!(cert.failures(), 4);
    }
}
