//! Packing covers in the symmetric-difference pseudometric: greedy ε-nets
//! over family order and bounded searches for Boolean combinations of
//! centers and lower-arity fibers, with checkable certificates.

pub mod search;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, serde_rational, Rational};
use crate::relation::{
    mixed_radix, Atom, Dnf, FamilyResolver, FiberSource, Literal, ProductMeasure, Relation,
    SetFamily,
};
use crate::sampling::{substream, WITNESS_RATE};
use search::{first_accepted, LiteralPool, SearchLimits, SearchOutcome};

/// Shape limits for witness expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExprBudget {
    /// Distinct center atoms per expression.
    pub max_centers_used: usize,
    /// Distinct fiber atoms per expression.
    pub max_fibers: usize,
    pub max_dnf_terms: usize,
    /// Largest arity of a fiber atom; below the family arity.
    pub fiber_arity_cap: usize,
    /// Whether fibers of the centers join the fibers of the target.
    #[serde(default = "default_true")]
    pub center_fibers: bool,
    /// Candidates tried per member before recording a failure.
    #[serde(default = "default_candidates")]
    pub max_candidates: u64,
}

fn default_true() -> bool {
    true
}

fn default_candidates() -> u64 {
    ExprBudget::DEFAULT_CANDIDATES
}

impl ExprBudget {
    pub const DEFAULT_CANDIDATES: u64 = 2_000_000;

    /// Caps of two of each, fibers up to arity `k − 1`.
    pub fn for_arity(k: usize) -> Self {
        ExprBudget {
            max_centers_used: 2,
            max_fibers: 2,
            max_dnf_terms: 2,
            fiber_arity_cap: k.saturating_sub(1),
            center_fibers: true,
            max_candidates: Self::DEFAULT_CANDIDATES,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.fiber_arity_cap >= k {
            return Err(Error::InvalidParameter(format!(
                "fiber arity cap {} must be below the arity {k}",
                self.fiber_arity_cap
            )));
        }
        Ok(())
    }

    pub(crate) fn limits(&self) -> SearchLimits {
        SearchLimits {
            max_terms: self.max_dnf_terms,
            max_centers: self.max_centers_used,
            max_fibers: self.max_fibers,
            max_candidates: self.max_candidates,
        }
    }

    /// Fixed-axis sets `u` whose fibers are admissible atoms, in ascending
    /// size then lexicographic order.
    pub(crate) fn fixings(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (1u32..(1 << k))
            .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|u: &Vec<usize>| {
                let arity = k - u.len();
                arity >= 1 && arity <= self.fiber_arity_cap
            })
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Found {
        member: usize,
        expr: Dnf,
        #[serde(with = "serde_rational")]
        dist: Rational,
    },
    Failed {
        member: usize,
        fail: bool,
    },
}

impl Witness {
    pub fn member(&self) -> usize {
        match self {
            Witness::Found { member, .. } | Witness::Failed { member, .. } => *member,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Witness::Found { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingCertificate {
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub centers: Vec<usize>,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<ExprBudget>,
}

impl PackingCertificate {
    pub fn failures(&self) -> usize {
        self.witnesses.iter().filter(|w| !w.is_found()).count()
    }
}

fn check_domain(family: &SetFamily, mu: &ProductMeasure) -> Result<()> {
    if family.domain() != mu.domain() {
        return Err(Error::DomainMismatch(format!(
            "family sizes {:?}, measure sizes {:?}",
            family.domain().sizes(),
            mu.domain().sizes()
        )));
    }
    Ok(())
}

fn check_centers(family: &SetFamily, centers: &[usize]) -> Result<()> {
    for &c in centers {
        family.member(c)?;
    }
    Ok(())
}

fn symdiff_mass(mu: &ProductMeasure, a: &Relation, b: &Relation) -> u128 {
    mu.symdiff_mass_words(a.words(), b.words())
}

/// Greedy ε-net over family order: a member becomes a center when it is more
/// than ε from every earlier center. Each member's witness is its nearest
/// center (first on ties).
pub fn greedy_packing(
    family: &SetFamily,
    mu: &ProductMeasure,
    epsilon: &Rational,
) -> Result<PackingCertificate> {
    check_domain(family, mu)?;
    rational::check_half_open_unit("epsilon", epsilon)?;
    if family.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot pack an empty family".into(),
        ));
    }
    let threshold = mu.threshold(epsilon);
    let members = family.members();
    let mut centers: Vec<usize> = Vec::new();
    for (i, s) in members.iter().enumerate() {
        if centers
            .iter()
            .all(|&c| symdiff_mass(mu, s, &members[c]) > threshold)
        {
            centers.push(i);
        }
    }
    let witnesses = members
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (c, mass) = centers
                .iter()
                .map(|&c| (c, symdiff_mass(mu, s, &members[c])))
                .min_by_key(|&(_, m)| m)
                .expect("at least one center");
            Witness::Found {
                member: i,
                expr: Dnf::literal(Literal::pos(Atom::Member(c))),
                dist: mu.to_rational(mass),
            }
        })
        .collect();
    Ok(PackingCertificate {
        epsilon: epsilon.clone(),
        centers,
        witnesses,
        budget: None,
    })
}

/// Center atoms, then fiber atoms anchored at `anchors` (every admissible
/// fixing of every anchor) of the target and, if enabled, of the centers.
pub(crate) fn atom_pool(
    family: &SetFamily,
    target: &Relation,
    centers: &[usize],
    budget: &ExprBudget,
    anchors: Option<&[Vec<usize>]>,
) -> LiteralPool {
    let domain = family.domain();
    let k = domain.arity();
    let mut atoms: Vec<(Atom, Vec<u64>)> = centers
        .iter()
        .map(|&c| (Atom::Member(c), family.members()[c].words().to_vec()))
        .collect();
    let mut sources: Vec<(FiberSource, &Relation)> = vec![(FiberSource::Target, target)];
    if budget.center_fibers {
        sources.extend(
            centers
                .iter()
                .map(|&c| (FiberSource::Member(c), &family.members()[c])),
        );
    }
    if budget.max_fibers > 0 {
        for u in budget.fixings(k) {
            let value_lists: Vec<Vec<usize>> = match anchors {
                Some(points) => {
                    let mut v: Vec<Vec<usize>> = points
                        .iter()
                        .map(|p| u.iter().map(|&a| p[a]).collect())
                        .collect();
                    v.sort();
                    v.dedup();
                    v
                }
                None => {
                    let radices: Vec<usize> = u.iter().map(|&a| domain.size(a)).collect();
                    mixed_radix(&radices).collect()
                }
            };
            for values in &value_lists {
                for (src, rel) in &sources {
                    let cyl = rel.cylinder(&u, values).expect("valid fixing");
                    atoms.push((
                        Atom::fiber(*src, u.clone(), values.clone()),
                        cyl.words().to_vec(),
                    ));
                }
            }
        }
    }
    LiteralPool::new(domain, atoms)
}

fn search_member(
    pool: &LiteralPool,
    budget: &ExprBudget,
    mu: &ProductMeasure,
    target: &Relation,
    threshold: u128,
) -> Option<(Dnf, u128)> {
    let mut found_mass = 0;
    match first_accepted(pool, &budget.limits(), |bits| {
        let m = mu.symdiff_mass_words(bits, target.words());
        found_mass = m;
        m <= threshold
    }) {
        SearchOutcome::Found { expr, .. } => Some((expr, found_mass)),
        SearchOutcome::Exhausted | SearchOutcome::CandidateCap => None,
    }
}

/// For each member, the first canonical DNF within the budget whose distance
/// to the member is at most ε. Fiber anchors range over the whole domain in
/// ascending order.
pub fn fiber_cover_search(
    family: &SetFamily,
    mu: &ProductMeasure,
    epsilon: &Rational,
    centers: &[usize],
    budget: &ExprBudget,
) -> Result<PackingCertificate> {
    check_domain(family, mu)?;
    rational::check_half_open_unit("epsilon", epsilon)?;
    let k = family.arity();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "fiber covers need arity at least 2; use greedy packing".into(),
        ));
    }
    budget.validate(k)?;
    check_centers(family, centers)?;
    let threshold = mu.threshold(epsilon);
    let witnesses = family
        .members()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pool = atom_pool(family, s, centers, budget, None);
            match search_member(&pool, budget, mu, s, threshold) {
                Some((expr, mass)) => Witness::Found {
                    member: i,
                    expr,
                    dist: mu.to_rational(mass),
                },
                None => Witness::Failed {
                    member: i,
                    fail: true,
                },
            }
        })
        .collect();
    Ok(PackingCertificate {
        epsilon: epsilon.clone(),
        centers: centers.to_vec(),
        witnesses,
        budget: Some(*budget),
    })
}

/// Re-evaluates every witness exactly. True iff each member has exactly one
/// entry and every recorded distance is correct and at most ε.
pub fn verify_certificate(
    cert: &PackingCertificate,
    family: &SetFamily,
    mu: &ProductMeasure,
) -> Result<bool> {
    check_domain(family, mu)?;
    check_centers(family, &cert.centers)?;
    let mut seen = vec![false; family.len()];
    let mut ok = true;
    for w in &cert.witnesses {
        let target = family.member(w.member())?;
        if std::mem::replace(&mut seen[w.member()], true) {
            ok = false;
        }
        match w {
            Witness::Found { expr, dist, .. } => {
                let d = expr.eval(&FamilyResolver::with_target(family, target))?;
                let actual = rational::from_u128(symdiff_mass(mu, target, &d), mu.scale());
                if &actual != dist || actual > cert.epsilon {
                    ok = false;
                }
            }
            Witness::Failed { fail, .. } => {
                if !fail {
                    ok = false;
                }
            }
        }
    }
    Ok(ok && seen.iter().all(|&s| s))
}

/// Monte-Carlo estimate, per member, of the probability that `anchors`
/// sampled points yield fiber atoms admitting a witness within ε. A member
/// with an anchor-free witness has rate 1.
#[allow(clippy::too_many_arguments)]
pub fn amplified_witness_rate(
    family: &SetFamily,
    mu: &ProductMeasure,
    epsilon: &Rational,
    centers: &[usize],
    budget: &ExprBudget,
    anchors: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<Rational>> {
    check_domain(family, mu)?;
    rational::check_half_open_unit("epsilon", epsilon)?;
    budget.validate(family.arity())?;
    check_centers(family, centers)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let threshold = mu.threshold(epsilon);
    let no_fibers = ExprBudget {
        max_fibers: 0,
        ..*budget
    };
    family
        .members()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let bare = atom_pool(family, s, centers, &no_fibers, Some(&[]));
            if search_member(&bare, &no_fibers, mu, s, threshold).is_some() {
                return Ok(Rational::one());
            }
            let mut hits = 0u64;
            for trial in 0..trials {
                let mut rng = substream(seed, WITNESS_RATE, i as u64, trial);
                let points: Vec<Vec<usize>> =
                    (0..anchors).map(|_| mu.sample_point(&mut rng)).collect();
                let pool = atom_pool(family, s, centers, budget, Some(&points));
                if search_member(&pool, budget, mu, s, threshold).is_some() {
                    hits += 1;
                }
            }
            Ok(rational::from_u128(hits as u128, trials as u128))
        })
        .collect()
}
