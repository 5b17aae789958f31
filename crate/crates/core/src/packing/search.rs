//! First-success enumeration of canonical DNFs in serialization order.
//!
//! Candidates are visited as `0`, `1`, then every nonempty canonical DNF in
//! lexicographic order of its term sequence. Terms are strictly increasing
//! index sequences into a literal pool sorted by token, so the visit order is
//! the bytewise order of the serializations.

use std::collections::HashSet;

use crate::relation::set::tail_mask;
use crate::relation::{Atom, Dnf, Literal, ProductDomain};

/// Caps on the shape of enumerated expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_terms: usize,
    pub max_centers: usize,
    pub max_fibers: usize,
    /// Number of candidates (constants included) tried before giving up.
    pub max_candidates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found {
        expr: Dnf,
        bits: Vec<u64>,
    },
    /// Every candidate within the limits was rejected.
    Exhausted,
    /// The candidate cap was hit first.
    CandidateCap,
}

/// Atoms over one domain with their extensions, closed under negation.
#[derive(Debug, Clone)]
pub struct LiteralPool {
    words: usize,
    full: Vec<u64>,
    literals: Vec<Literal>,
    literal_atom: Vec<usize>,
    atom_is_fiber: Vec<bool>,
    bits: Vec<u64>,
}

impl LiteralPool {
    /// Atoms whose extension coincides with an earlier atom of the same kind
    /// (in token order) are dropped.
    pub fn new(domain: &ProductDomain, atoms: Vec<(Atom, Vec<u64>)>) -> Self {
        let words = domain.words();
        let mut full = vec![u64::MAX; words];
        if let Some(last) = full.last_mut() {
            *last = tail_mask(domain.total());
        }
        let mut keyed: Vec<(String, Atom, Vec<u64>)> =
            atoms.into_iter().map(|(a, b)| (a.token(), a, b)).collect();
        keyed.sort_by(|x, y| x.0.cmp(&y.0));
        keyed.dedup_by(|x, y| x.0 == y.0);
        let mut seen: HashSet<(bool, Vec<u64>)> = HashSet::new();
        keyed.retain(|(_, a, b)| seen.insert((a.is_fiber(), b.clone())));

        let mut lits: Vec<(String, Literal, usize, Vec<u64>)> = Vec::with_capacity(2 * keyed.len());
        let mut atom_is_fiber = Vec::with_capacity(keyed.len());
        for (id, (_, atom, b)) in keyed.into_iter().enumerate() {
            atom_is_fiber.push(atom.is_fiber());
            let neg: Vec<u64> = b.iter().zip(&full).map(|(x, m)| !x & m).collect();
            let p = Literal::pos(atom.clone());
            let n = Literal::neg(atom);
            lits.push((p.to_string(), p, id, b));
            lits.push((n.to_string(), n, id, neg));
        }
        lits.sort_by(|x, y| x.0.cmp(&y.0));
        let mut pool = LiteralPool {
            words,
            full,
            literals: Vec::with_capacity(lits.len()),
            literal_atom: Vec::with_capacity(lits.len()),
            atom_is_fiber,
            bits: Vec::with_capacity(lits.len() * words),
        };
        for (_, l, id, b) in lits {
            pool.literals.push(l);
            pool.literal_atom.push(id);
            pool.bits.extend_from_slice(&b);
        }
        pool
    }

    pub fn atom_count(&self) -> usize {
        self.atom_is_fiber.len()
    }

    pub fn literal_count(&self) -> usize {
        self.literals.len()
    }

    fn lit_bits(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }
}

/// Returns the first candidate whose extension `accept` approves.
pub fn first_accepted(
    pool: &LiteralPool,
    limits: &SearchLimits,
    accept: impl FnMut(&[u64]) -> bool,
) -> SearchOutcome {
    let w = pool.words;
    let max_len = pool
        .atom_count()
        .min(limits.max_centers + limits.max_fibers);
    let mut dfs = Dfs {
        pool,
        limits,
        accept,
        max_len,
        terms: Vec::new(),
        acc: vec![0; (limits.max_terms + 1) * w],
        term_bits: vec![0; limits.max_terms * (max_len + 1) * w],
        scratch: vec![0; w],
        atom_uses: vec![0; pool.atom_count()],
        centers_used: 0,
        fibers_used: 0,
        candidates: 0,
        stop: None,
    };
    let empty = vec![0u64; w];
    for constant in [&empty, &pool.full] {
        match dfs.offer(constant) {
            Some(true) => {
                let expr = if constant == &empty {
                    Dnf::falsum()
                } else {
                    Dnf::verum()
                };
                return SearchOutcome::Found {
                    expr,
                    bits: constant.clone(),
                };
            }
            Some(false) => {}
            None => return SearchOutcome::CandidateCap,
        }
    }
    if limits.max_terms > 0 && max_len > 0 {
        dfs.extend_terms(0);
    }
    match dfs.stop {
        Some(Stop::Found(bits)) => SearchOutcome::Found {
            expr: Dnf::from_terms(
                dfs.terms
                    .iter()
                    .map(|t| t.iter().map(|&i| pool.literals[i].clone()).collect())
                    .collect(),
            ),
            bits,
        },
        Some(Stop::Cap) => SearchOutcome::CandidateCap,
        None => SearchOutcome::Exhausted,
    }
}

enum Stop {
    Found(Vec<u64>),
    Cap,
}

struct Dfs<'a, F> {
    pool: &'a LiteralPool,
    limits: &'a SearchLimits,
    accept: F,
    max_len: usize,
    /// Terms of the current candidate; the last one is under construction.
    terms: Vec<Vec<usize>>,
    /// `acc[t]` is the union of the first `t` terms.
    acc: Vec<u64>,
    /// Extension of the prefix of term `t` of length `depth + 1`.
    term_bits: Vec<u64>,
    scratch: Vec<u64>,
    atom_uses: Vec<u32>,
    centers_used: usize,
    fibers_used: usize,
    candidates: u64,
    stop: Option<Stop>,
}

impl<F: FnMut(&[u64]) -> bool> Dfs<'_, F> {
    /// `None` once the candidate cap is exceeded.
    fn offer(&mut self, bits: &[u64]) -> Option<bool> {
        self.candidates += 1;
        if self.candidates > self.limits.max_candidates {
            return None;
        }
        Some((self.accept)(bits))
    }

    fn tb_offset(&self, t: usize, depth: usize) -> usize {
        (t * (self.max_len + 1) + depth) * self.pool.words
    }

    fn extend_terms(&mut self, t: usize) {
        self.terms.push(Vec::new());
        self.extend_literals(t, 0, 0, t > 0);
        if self.stop.is_none() {
            self.terms.pop();
        }
    }

    /// `tied`: the term so far equals a prefix of the previous term.
    fn extend_literals(&mut self, t: usize, start: usize, depth: usize, tied: bool) {
        if depth >= self.max_len {
            return;
        }
        let w = self.pool.words;
        for li in start..self.pool.literal_count() {
            let still_tied = if tied {
                let prev = &self.terms[t - 1];
                if depth < prev.len() {
                    if li < prev[depth] {
                        continue;
                    }
                    li == prev[depth]
                } else {
                    false
                }
            } else {
                false
            };
            let atom = self.pool.literal_atom[li];
            if self.terms[t]
                .iter()
                .any(|&l| self.pool.literal_atom[l] == atom)
            {
                continue;
            }
            let fresh = self.atom_uses[atom] == 0;
            if fresh {
                let over = if self.pool.atom_is_fiber[atom] {
                    self.fibers_used + 1 > self.limits.max_fibers
                } else {
                    self.centers_used + 1 > self.limits.max_centers
                };
                if over {
                    continue;
                }
            }

            let here = self.tb_offset(t, depth);
            if depth == 0 {
                self.term_bits[here..here + w].copy_from_slice(self.pool.lit_bits(li));
            } else {
                let prev = self.tb_offset(t, depth - 1);
                for j in 0..w {
                    self.term_bits[here + j] =
                        self.term_bits[prev + j] & self.pool.bits[li * w + j];
                }
            }
            self.terms[t].push(li);
            self.atom_uses[atom] += 1;
            if fresh {
                if self.pool.atom_is_fiber[atom] {
                    self.fibers_used += 1;
                } else {
                    self.centers_used += 1;
                }
            }

            if !still_tied {
                for j in 0..w {
                    self.scratch[j] = self.acc[t * w + j] | self.term_bits[here + j];
                }
                let cand = std::mem::take(&mut self.scratch);
                let verdict = self.offer(&cand);
                self.scratch = cand;
                match verdict {
                    None => {
                        self.stop = Some(Stop::Cap);
                        return;
                    }
                    Some(true) => {
                        self.stop = Some(Stop::Found(self.scratch.clone()));
                        return;
                    }
                    Some(false) => {}
                }
                if t + 1 < self.limits.max_terms {
                    let (lo, hi) = self.acc.split_at_mut((t + 1) * w);
                    hi[..w].copy_from_slice(&self.scratch);
                    let _ = lo;
                    self.extend_terms(t + 1);
                    if self.stop.is_some() {
                        return;
                    }
                }
            }
            self.extend_literals(t, li + 1, depth + 1, still_tied);
            if self.stop.is_some() {
                return;
            }

            self.terms[t].pop();
            self.atom_uses[atom] -= 1;
            if fresh {
                if self.pool.atom_is_fiber[atom] {
                    self.fibers_used -= 1;
                } else {
                    self.centers_used -= 1;
                }
            }
        }
    }
}
