//! Box shattering, trace counting, exact VC_k dimension, Zarankiewicz numbers
//! and the higher-arity Sauer-Shelah trace bound.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{mixed_radix, ProductDomain, Relation, SetFamily};

/// A k-dimensional d-box `A_1 × … × A_k`, each `A_i` sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DBox {
    axes: Vec<Vec<usize>>,
}

impl DBox {
    pub fn new(domain: &ProductDomain, mut axes: Vec<Vec<usize>>) -> Result<Self> {
        if axes.len() != domain.arity() {
            return Err(Error::ArityMismatch {
                expected: domain.arity(),
                found: axes.len(),
            });
        }
        let d = axes.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidParameter(
                "box side must be at least 1".into(),
            ));
        }
        for (i, a) in axes.iter_mut().enumerate() {
            if a.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "axis {i} has {} elements, expected {d}",
                    a.len()
                )));
            }
            a.sort_unstable();
            if a.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::ShapeMismatch(format!("axis {i} repeats an element")));
            }
            if a[d - 1] >= domain.size(i) {
                return Err(Error::AxisOutOfRange(format!(
                    "element {} on axis {i} of size {}",
                    a[d - 1],
                    domain.size(i)
                )));
            }
        }
        Ok(DBox { axes })
    }

    pub fn axes(&self) -> &[Vec<usize>] {
        &self.axes
    }

    pub fn side(&self) -> usize {
        self.axes[0].len()
    }

    pub fn cell_count(&self) -> usize {
        self.side().pow(self.axes.len() as u32)
    }

    /// Point indices of the box cells, box coordinates in mixed-radix order.
    pub fn cells(&self, domain: &ProductDomain) -> Vec<usize> {
        let radices = vec![self.side(); self.axes.len()];
        mixed_radix(&radices)
            .map(|pos| {
                pos.iter()
                    .enumerate()
                    .map(|(axis, &p)| self.axes[axis][p] * domain.stride(axis))
                    .sum()
            })
            .collect()
    }

    /// Enumeration key: colex order per axis, axes compared left to right.
    fn order_key(&self) -> Vec<Vec<usize>> {
        self.axes
            .iter()
            .map(|a| a.iter().rev().copied().collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    #[serde(rename = "box")]
    pub dbox: DBox,
    #[serde(rename = "traces")]
    pub trace_count: u64,
    #[serde(rename = "z")]
    pub zarankiewicz_z: u64,
    pub bound: u128,
    pub pass: bool,
    pub sampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VcOptions {
    /// Use the sub-box pruning; off gives the plain level-by-level scan.
    pub pruning: bool,
    /// Refuse boxes whose trace space `2^(d^k)` exceeds `2^max_cells`.
    pub max_cells: usize,
    /// Maximum number of boxes whose traces are counted.
    pub max_boxes: u64,
}

impl Default for VcOptions {
    fn default() -> Self {
        VcOptions {
            pruning: true,
            max_cells: 24,
            max_boxes: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VcResult {
    pub dimension: usize,
    /// The first shattered box of maximal side, in enumeration order.
    pub witness: Option<DBox>,
}

fn check_box(family: &SetFamily, dbox: &DBox, max_cells: usize) -> Result<()> {
    if dbox.axes.len() != family.arity() {
        return Err(Error::ArityMismatch {
            expected: family.arity(),
            found: dbox.axes.len(),
        });
    }
    for (i, a) in dbox.axes.iter().enumerate() {
        if a.iter().any(|&x| x >= family.domain().size(i)) {
            return Err(Error::AxisOutOfRange(format!("box leaves axis {i}")));
        }
    }
    if dbox.cell_count() > max_cells.min(64) {
        return Err(Error::budget(
            format!(
                "box with {} cells exceeds the shattering budget of {} cells",
                dbox.cell_count(),
                max_cells
            ),
            None,
        ));
    }
    Ok(())
}

fn trace_mask(member: &Relation, cells: &[usize]) -> u64 {
    cells.iter().enumerate().fold(0u64, |m, (j, &c)| {
        m | (member.contains_index(c) as u64) << j
    })
}

fn count_traces(members: &[Relation], cells: &[usize]) -> u64 {
    let mut masks: Vec<u64> = members.iter().map(|m| trace_mask(m, cells)).collect();
    masks.sort_unstable();
    masks.dedup();
    masks.len() as u64
}

/// Number of distinct traces `A ∩ S`, `S` ranging over the family.
pub fn trace_count(family: &SetFamily, dbox: &DBox) -> Result<u64> {
    check_box(family, dbox, VcOptions::default().max_cells)?;
    Ok(count_traces(family.members(), &dbox.cells(family.domain())))
}

/// Whether every subset of the box is cut out by some member.
pub fn is_shattered(family: &SetFamily, dbox: &DBox) -> Result<bool> {
    check_box(family, dbox, VcOptions::default().max_cells)?;
    Ok(shatters(family.members(), &dbox.cells(family.domain())))
}

fn shatters(members: &[Relation], cells: &[usize]) -> bool {
    let need = 1u64 << cells.len();
    (members.len() as u64) >= need && count_traces(members, cells) == need
}

/// Size-`d` subsets of `0..n` in colexicographic order.
pub fn colex_subsets(n: usize, d: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = if d <= n { Some((0..d).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().unwrap();
        let mut i = 0;
        loop {
            if i == d {
                cur = None;
                break;
            }
            let limit = if i + 1 < d { c[i + 1] } else { n };
            if c[i] + 1 < limit {
                c[i] += 1;
                for (j, slot) in c.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                break;
            }
            i += 1;
        }
        Some(out)
    })
}

/// Every d-box of the domain in enumeration order.
pub fn boxes(domain: &ProductDomain, d: usize) -> impl Iterator<Item = DBox> {
    let per_axis: Vec<Vec<Vec<usize>>> = domain
        .sizes()
        .iter()
        .map(|&n| colex_subsets(n, d).collect())
        .collect();
    let radices: Vec<usize> = per_axis.iter().map(Vec::len).collect();
    let all: Vec<DBox> = mixed_radix(&radices)
        .map(|pick| DBox {
            axes: pick
                .iter()
                .enumerate()
                .map(|(axis, &i)| per_axis[axis][i].clone())
                .collect(),
        })
        .collect();
    all.into_iter()
}

fn box_count(domain: &ProductDomain, d: usize) -> u128 {
    domain
        .sizes()
        .iter()
        .map(|&n| binomial(n as u64, d as u64))
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// Exact VC_k dimension with default options.
pub fn vck_dimension(family: &SetFamily) -> Result<VcResult> {
    vck_dimension_with(family, &VcOptions::default())
}

pub fn vck_dimension_with(family: &SetFamily, opts: &VcOptions) -> Result<VcResult> {
    if family.is_empty() {
        return Err(Error::UndefinedDimension);
    }
    let distinct = family.distinct();
    let members = distinct.members();
    let domain = family.domain();
    let k = domain.arity() as u32;
    let max_side = *domain.sizes().iter().min().unwrap();
    let mut best = VcResult {
        dimension: 0,
        witness: None,
    };
    let mut evaluated = 0u64;
    let mut shattered_prev: Vec<DBox> = Vec::new();

    for d in 1..=max_side {
        let cells = d.pow(k);
        if cells >= 64 || (members.len() as u128) < (1u128 << cells) {
            break;
        }
        if cells > opts.max_cells {
            return Err(Error::budget(
                format!(
                    "{d}-boxes have 2^{cells} traces, above the 2^{} budget",
                    opts.max_cells
                ),
                Some(best.dimension),
            ));
        }
        let candidates: Vec<DBox> = if opts.pruning && d > 1 {
            extend_boxes(domain, &shattered_prev)
        } else {
            if box_count(domain, d) > opts.max_boxes as u128 {
                return Err(Error::budget(
                    format!("{} candidate {d}-boxes", box_count(domain, d)),
                    Some(best.dimension),
                ));
            }
            boxes(domain, d).collect()
        };
        let mut shattered = Vec::new();
        for b in candidates {
            evaluated += 1;
            if evaluated > opts.max_boxes {
                return Err(Error::budget(
                    format!("more than {} boxes evaluated", opts.max_boxes),
                    Some(best.dimension),
                ));
            }
            if shatters(members, &b.cells(domain)) {
                shattered.push(b);
                if !opts.pruning {
                    break;
                }
            }
        }
        if shattered.is_empty() {
            break;
        }
        best.dimension = d;
        best.witness = shattered.iter().min_by_key(|b| b.order_key()).cloned();
        shattered_prev = shattered;
    }
    Ok(best)
}

/// Candidate (d+1)-boxes all of whose d-sub-boxes are shattered. Each
/// candidate is generated once, from the sub-box that drops its largest
/// element on every axis.
fn extend_boxes(domain: &ProductDomain, shattered: &[DBox]) -> Vec<DBox> {
    let known: HashSet<&DBox> = shattered.iter().collect();
    let k = domain.arity();
    let mut out = Vec::new();
    for b in shattered {
        let radices: Vec<usize> = (0..k)
            .map(|i| domain.size(i) - 1 - *b.axes[i].last().unwrap())
            .collect();
        for ext in mixed_radix(&radices) {
            let axes: Vec<Vec<usize>> = (0..k)
                .map(|i| {
                    let mut a = b.axes[i].clone();
                    a.push(b.axes[i].last().unwrap() + 1 + ext[i]);
                    a
                })
                .collect();
            let cand = DBox { axes };
            if all_sub_boxes_known(&cand, &known) {
                out.push(cand);
            }
        }
    }
    out
}

fn all_sub_boxes_known(cand: &DBox, known: &HashSet<&DBox>) -> bool {
    let side = cand.side();
    let radices = vec![side; cand.axes.len()];
    let all_known = mixed_radix(&radices).all(|drop| {
        let sub = DBox {
            axes: cand
                .axes
                .iter()
                .zip(&drop)
                .map(|(a, &skip)| {
                    a.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect(),
        };
        known.contains(&sub)
    });
    all_known
}

/// VC_k of a (k+1)-ary relation through its last-coordinate slices.
pub fn vck_of_relation(relation: &Relation, k: usize) -> Result<VcResult> {
    let family = slice_family(relation, k)?;
    vck_dimension(&family)
}

/// `F_E = {E_b : b ∈ V_{k+1}}`, deduplicated in slice order.
pub fn slice_family(relation: &Relation, k: usize) -> Result<SetFamily> {
    let arity = relation.domain().arity();
    if k == 0 || arity != k + 1 {
        return Err(Error::ArityMismatch {
            expected: k + 1,
            found: arity,
        });
    }
    let last = arity - 1;
    let slices = (0..relation.domain().size(last))
        .map(|b| relation.fiber(&[last], &[b]))
        .collect::<Result<Vec<_>>>()?;
    let sub = relation
        .domain()
        .sub_domain(&(0..last).collect::<Vec<_>>())?;
    Ok(SetFamily::new(sub, slices)?.distinct())
}

pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1u128;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `∑_{i<z} C(cells, i)`.
pub fn trace_bound(cells: u64, z: u64) -> u128 {
    (0..z.min(cells + 1)).map(|i| binomial(cells, i)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZarankiewiczOptions {
    /// Branch-and-bound node budget.
    pub max_nodes: u64,
}

impl Default for ZarankiewiczOptions {
    fn default() -> Self {
        ZarankiewiczOptions {
            max_nodes: 200_000_000,
        }
    }
}

/// `z_k(m, s)`: one more than the largest edge count of a k-partite
/// k-hypergraph with parts of size m that avoids the complete k-partite
/// hypergraph with parts of size s.
pub fn zarankiewicz(k: usize, m: usize, s: usize) -> Result<u64> {
    zarankiewicz_with(k, m, s, &ZarankiewiczOptions::default())
}

pub fn zarankiewicz_with(k: usize, m: usize, s: usize, opts: &ZarankiewiczOptions) -> Result<u64> {
    if k == 0 || m == 0 || s == 0 {
        return Err(Error::InvalidParameter(
            "k, m and s must be positive".into(),
        ));
    }
    if k == 1 {
        // Edge sets are subsets of [m]; any s of them form the forbidden block.
        return Ok(if s <= m { s as u64 } else { m as u64 + 1 });
    }
    let cells = (m as u64)
        .checked_pow(k as u32)
        .filter(|&c| c <= 64)
        .ok_or_else(|| Error::budget(format!("{m}^{k} cells exceed 64"), None))?;
    if s > m {
        return Ok(cells + 1);
    }
    let domain = ProductDomain::cube(k, m)?;
    let side_sets: Vec<Vec<usize>> = colex_subsets(m, s).collect();
    let radices = vec![side_sets.len(); k];
    let forbidden: Vec<u64> = mixed_radix(&radices)
        .map(|pick| {
            let b = DBox {
                axes: pick.iter().map(|&i| side_sets[i].clone()).collect(),
            };
            b.cells(&domain).iter().fold(0u64, |acc, &c| acc | 1 << c)
        })
        .collect();
    let hit = min_hitting_set(&forbidden, opts.max_nodes)?;
    Ok(cells - hit as u64 + 1)
}

/// Smallest number of cells meeting every forbidden mask (branch and bound).
fn min_hitting_set(masks: &[u64], max_nodes: u64) -> Result<u32> {
    struct Bb<'a> {
        masks: &'a [u64],
        best: u32,
        nodes: u64,
        max_nodes: u64,
    }
    impl Bb<'_> {
        fn lower_bound(&self, removed: u64) -> u32 {
            // Disjoint unhit masks each need their own cell.
            let mut used = 0u64;
            let mut lb = 0;
            for &m in self.masks {
                if m & removed == 0 && m & used == 0 {
                    used |= m;
                    lb += 1;
                }
            }
            lb
        }

        fn go(&mut self, removed: u64, kept: u64, count: u32) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::budget(
                    format!("Zarankiewicz search exceeded {} nodes", self.max_nodes),
                    None,
                ));
            }
            let Some(&mask) = self.masks.iter().find(|&&m| m & removed == 0) else {
                self.best = self.best.min(count);
                return Ok(());
            };
            if count + self.lower_bound(removed) >= self.best {
                return Ok(());
            }
            let mut kept = kept;
            let mut options = mask & !kept;
            while options != 0 {
                let bit = options & options.wrapping_neg();
                options &= options - 1;
                self.go(removed | bit, kept, count + 1)?;
                kept |= bit;
            }
            Ok(())
        }
    }
    let mut bb = Bb {
        masks,
        best: greedy_hitting_set(masks) + 1,
        nodes: 0,
        max_nodes,
    };
    bb.go(0, 0, 0)?;
    Ok(bb.best)
}

fn greedy_hitting_set(masks: &[u64]) -> u32 {
    let mut removed = 0u64;
    let mut count = 0;
    while masks.iter().any(|&m| m & removed == 0) {
        let mut best_bit = 0;
        let mut best_hits = 0;
        for bit in 0..64 {
            let b = 1u64 << bit;
            let hits = masks
                .iter()
                .filter(|&&m| m & removed == 0 && m & b != 0)
                .count();
            if hits > best_hits {
                best_hits = hits;
                best_bit = b;
            }
        }
        removed |= best_bit;
        count += 1;
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SauerOptions {
    pub seed: u64,
    /// Above this many m-boxes, a seeded sample is checked instead.
    pub max_exhaustive: u128,
    pub samples: usize,
}

impl Default for SauerOptions {
    fn default() -> Self {
        SauerOptions {
            seed: 0,
            max_exhaustive: 1_000_000,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SauerReport {
    pub m: usize,
    pub d: usize,
    pub z: u64,
    pub bound: u128,
    /// `Some(VC_k < d)` when the dimension was computable.
    pub claim_holds: Option<bool>,
    pub sampled: bool,
    pub pass: bool,
    pub rows: Vec<TraceReport>,
}

/// Checks `trace_count ≤ ∑_{i<z} C(m^k, i)` with `z = z_k(m, d)` on every
/// m-box, or on a seeded sample when there are too many.
pub fn sauer_shelah_check(family: &SetFamily, m: usize, d: usize) -> Result<SauerReport> {
    sauer_shelah_check_with(family, m, d, &SauerOptions::default())
}

pub fn sauer_shelah_check_with(
    family: &SetFamily,
    m: usize,
    d: usize,
    opts: &SauerOptions,
) -> Result<SauerReport> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("m and d must be positive".into()));
    }
    let domain = family.domain();
    let k = domain.arity();
    let cells = (m as u64)
        .checked_pow(k as u32)
        .filter(|&c| c <= 64)
        .ok_or_else(|| Error::budget(format!("m-boxes with {m}^{k} cells"), None))?;
    let z = zarankiewicz(k, m, d)?;
    let bound = trace_bound(cells, z);
    let claim_holds = match vck_dimension(family) {
        Ok(r) => Some(r.dimension < d),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };

    let total = box_count(domain, m);
    let sampled = total > opts.max_exhaustive;
    let chosen: Vec<DBox> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.samples)
            .map(|_| DBox {
                axes: domain
                    .sizes()
                    .iter()
                    .map(|&n| {
                        let mut a = sample(&mut rng, n, m).into_vec();
                        a.sort_unstable();
                        a
                    })
                    .collect(),
            })
            .collect()
    } else {
        boxes(domain, m).collect()
    };

    let distinct = family.distinct();
    let rows: Vec<TraceReport> = chosen
        .into_iter()
        .map(|b| {
            let t = count_traces(distinct.members(), &b.cells(domain));
            TraceReport {
                dbox: b,
                trace_count: t,
                zarankiewicz_z: z,
                bound,
                pass: (t as u128) <= bound,
                sampled,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(SauerReport {
        m,
        d,
        z,
        bound,
        claim_holds,
        sampled,
        pass,
        rows,
    })
}
