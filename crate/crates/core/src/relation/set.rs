use std::fmt;

use crate::error::{Error, Result};
use crate::relation::domain::ProductDomain;

/// A subset of a finite product domain, stored as one bit per point.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    domain: ProductDomain,
    words: Vec<u64>,
}

/// Mask of the valid bits in the last word of a `total`-bit vector.
pub(crate) fn tail_mask(total: usize) -> u64 {
    match total % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl Relation {
    pub fn empty(domain: &ProductDomain) -> Self {
        Relation {
            domain: domain.clone(),
            words: vec![0; domain.words()],
        }
    }

    pub fn full(domain: &ProductDomain) -> Self {
        let mut words = vec![u64::MAX; domain.words()];
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(domain.total());
        }
        Relation {
            domain: domain.clone(),
            words,
        }
    }

    /// Builds a relation from raw words; bits beyond the point count are cleared.
    pub fn from_words(domain: &ProductDomain, mut words: Vec<u64>) -> Result<Self> {
        if words.len() != domain.words() {
            return Err(Error::DomainMismatch(format!(
                "expected {} words, found {}",
                domain.words(),
                words.len()
            )));
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(domain.total());
        }
        Ok(Relation {
            domain: domain.clone(),
            words,
        })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(
        domain: &ProductDomain,
        indices: I,
    ) -> Result<Self> {
        let mut r = Relation::empty(domain);
        for i in indices {
            if i >= domain.total() {
                return Err(Error::AxisOutOfRange(format!(
                    "point index {i} in a domain of {} points",
                    domain.total()
                )));
            }
            r.set(i, true);
        }
        Ok(r)
    }

    pub fn from_points<'a, I>(domain: &ProductDomain, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut r = Relation::empty(domain);
        for p in points {
            let i = domain.index_of(p)?;
            r.set(i, true);
        }
        Ok(r)
    }

    pub fn from_fn(domain: &ProductDomain, mut pred: impl FnMut(&[usize]) -> bool) -> Self {
        let mut r = Relation::empty(domain);
        let mut coords = vec![0; domain.arity()];
        for i in 0..domain.total() {
            domain.coords_into(i, &mut coords);
            if pred(&coords) {
                r.set(i, true);
            }
        }
        r
    }

    pub(crate) fn set(&mut self, index: usize, value: bool) {
        let (w, b) = (index / 64, index % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains_index(&self, index: usize) -> bool {
        index < self.domain.total() && self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn contains(&self, coords: &[usize]) -> Result<bool> {
        Ok(self.contains_index(self.domain.index_of(coords)?))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn points(&self) -> Vec<Vec<usize>> {
        self.indices().map(|i| self.domain.coords(i)).collect()
    }

    pub(crate) fn check_same_domain(&self, other: &Relation) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(format!(
                "{:?} vs {:?}",
                self.domain.sizes(),
                other.domain.sizes()
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Relation, f: impl Fn(u64, u64) -> u64) -> Result<Relation> {
        self.check_same_domain(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Relation::from_words(&self.domain, words)
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Relation) -> Result<Relation> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Relation) -> Result<Relation> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &Relation) -> Result<Relation> {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> Relation {
        let words = self.words.iter().map(|w| !w).collect();
        Relation::from_words(&self.domain, words).expect("same shape")
    }

    fn check_fixing(&self, axes: &[usize], values: &[usize]) -> Result<()> {
        if axes.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} fixed axes but {} values",
                axes.len(),
                values.len()
            )));
        }
        for (i, (&a, &v)) in axes.iter().zip(values).enumerate() {
            if a >= self.domain.arity() {
                return Err(Error::AxisOutOfRange(format!(
                    "axis {a} in a relation of arity {}",
                    self.domain.arity()
                )));
            }
            if axes[..i].contains(&a) {
                return Err(Error::ShapeMismatch(format!("axis {a} fixed twice")));
            }
            if v >= self.domain.size(a) {
                return Err(Error::AxisOutOfRange(format!(
                    "value {v} on axis {a} of size {}",
                    self.domain.size(a)
                )));
            }
        }
        Ok(())
    }

    /// The fiber `S_ā` on the free axes (ascending), for a nonempty proper fixing.
    pub fn fiber(&self, axes: &[usize], values: &[usize]) -> Result<Relation> {
        self.check_fixing(axes, values)?;
        let free = self.domain.free_axes(axes);
        if free.is_empty() {
            return Err(Error::ShapeMismatch(
                "fixing every axis leaves a 0-ary fiber; use fiber_value".into(),
            ));
        }
        let sub = self.domain.sub_domain(&free)?;
        let base: usize = axes
            .iter()
            .zip(values)
            .map(|(&a, &v)| v * self.domain.stride(a))
            .sum();
        let mut out = Relation::empty(&sub);
        let mut coords = vec![0; free.len()];
        for j in 0..sub.total() {
            sub.coords_into(j, &mut coords);
            let idx = base
                + free
                    .iter()
                    .zip(&coords)
                    .map(|(&a, &c)| c * self.domain.stride(a))
                    .sum::<usize>();
            if self.contains_index(idx) {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    /// Membership of the single point picked out by fixing all axes.
    pub fn fiber_value(&self, values: &[usize]) -> Result<bool> {
        self.contains(values)
    }

    /// The cylinder over the fiber at `ā`: every point whose free coordinates,
    /// combined with `ā` on the fixed axes, lie in this relation.
    pub fn cylinder(&self, axes: &[usize], values: &[usize]) -> Result<Relation> {
        self.check_fixing(axes, values)?;
        let mut out = Relation::empty(&self.domain);
        let mut coords = vec![0; self.domain.arity()];
        for i in 0..self.domain.total() {
            self.domain.coords_into(i, &mut coords);
            for (&a, &v) in axes.iter().zip(values) {
                coords[a] = v;
            }
            if self.contains_index(self.domain.index_unchecked(&coords)) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// The cylinder in `domain` over a relation living on the axes left free by
    /// `fixed_axes` (ascending): a point belongs iff its free coordinates do.
    pub fn cylinder_of(
        domain: &ProductDomain,
        fixed_axes: &[usize],
        fiber: &Relation,
    ) -> Result<Relation> {
        let free = domain.free_axes(fixed_axes);
        if free.is_empty() || fiber.domain() != &domain.sub_domain(&free)? {
            return Err(Error::DomainMismatch(format!(
                "fiber sizes {:?} do not fit the axes left free by {fixed_axes:?}",
                fiber.domain().sizes()
            )));
        }
        let mut coords = vec![0; domain.arity()];
        let mut sub = vec![0; free.len()];
        let mut out = Relation::empty(domain);
        for i in 0..domain.total() {
            domain.coords_into(i, &mut coords);
            for (s, &a) in sub.iter_mut().zip(&free) {
                *s = coords[a];
            }
            if fiber.contains_index(fiber.domain().index_unchecked(&sub)) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Relabels axes: axis `i` of the result is axis `perm[i]` of `self`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Relation> {
        let k = self.domain.arity();
        let mut seen = vec![false; k];
        if perm.len() != k
            || perm
                .iter()
                .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidParameter(format!(
                "{perm:?} is not a permutation of 0..{k}"
            )));
        }
        let target = self.domain.sub_domain(perm)?;
        let mut src = vec![0; k];
        Ok(Relation::from_fn(&target, |c| {
            for (i, &p) in perm.iter().enumerate() {
                src[p] = c[i];
            }
            self.contains_index(self.domain.index_unchecked(&src))
        }))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation{:?}{:?}", self.domain.sizes(), self.points())
    }
}

/// An ordered list of relations over one domain. Index 0 is the "first" set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    domain: ProductDomain,
    members: Vec<Relation>,
}

impl SetFamily {
    pub fn new(domain: ProductDomain, members: Vec<Relation>) -> Result<Self> {
        for (i, m) in members.iter().enumerate() {
            if *m.domain() != domain {
                return Err(Error::DomainMismatch(format!(
                    "member {i} has sizes {:?}, family has {:?}",
                    m.domain().sizes(),
                    domain.sizes()
                )));
            }
        }
        Ok(SetFamily { domain, members })
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn members(&self) -> &[Relation] {
        &self.members
    }

    pub fn member(&self, index: usize) -> Result<&Relation> {
        self.members.get(index).ok_or_else(|| {
            Error::DanglingReference(format!(
                "member {index} in a family of {}",
                self.members.len()
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.domain.arity()
    }

    /// Members with bitwise duplicates removed, first occurrence kept.
    pub fn distinct(&self) -> SetFamily {
        let mut seen = std::collections::HashSet::new();
        let members = self
            .members
            .iter()
            .filter(|m| seen.insert(m.words().to_vec()))
            .cloned()
            .collect();
        SetFamily {
            domain: self.domain.clone(),
            members,
        }
    }

    pub fn complemented(&self) -> SetFamily {
        SetFamily {
            domain: self.domain.clone(),
            members: self.members.iter().map(Relation::complement).collect(),
        }
    }

    pub fn permute_axes(&self, perm: &[usize]) -> Result<SetFamily> {
        let members = self
            .members
            .iter()
            .map(|m| m.permute_axes(perm))
            .collect::<Result<Vec<_>>>()?;
        SetFamily::new(self.domain.sub_domain(perm)?, members)
    }

    pub fn subfamily(&self, indices: &[usize]) -> Result<SetFamily> {
        let members = indices
            .iter()
            .map(|&i| self.member(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        SetFamily::new(self.domain.clone(), members)
    }
}
