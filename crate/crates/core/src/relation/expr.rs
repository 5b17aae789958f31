//! Boolean combinations of family members and cylinder-expanded fibers.
//!
//! Every expression has a canonical disjunctive normal form ([`Dnf`]) whose
//! text serialization defines the total order used for "first expression"
//! tie-breaks. The serialization is built so that bytewise order of the text
//! coincides with lexicographic order on the term sequence:
//!
//! * constants are `0` (empty) and `1` (full);
//! * a member atom is `S[i]`, a fiber atom `f[src;axis=value,…]` where `src`
//!   is `*` for the target set or `S<i>` for member `i`;
//! * a negated literal is the atom prefixed with `~`;
//! * literals inside a term are joined by `&`, terms by ` | `.
//!
//! Atom tokens are prefix-free (they end in `]`), and the term separator
//! sorts below the literal separator, so a term that is a prefix of another
//! always sorts first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::relation::domain::ProductDomain;
use crate::relation::set::{Relation, SetFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FiberSource {
    /// The set currently being approximated.
    Target,
    Member(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiberAtom {
    pub source: FiberSource,
    /// Fixed axes, ascending.
    pub axes: Vec<usize>,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Member(usize),
    Fiber(FiberAtom),
}

impl Atom {
    pub fn fiber(source: FiberSource, axes: Vec<usize>, values: Vec<usize>) -> Atom {
        Atom::Fiber(FiberAtom {
            source,
            axes,
            values,
        })
    }

    pub fn is_fiber(&self) -> bool {
        matches!(self, Atom::Fiber(_))
    }

    pub fn token(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Member(i) => write!(f, "S[{i}]"),
            Atom::Fiber(fa) => {
                f.write_str("f[")?;
                match fa.source {
                    FiberSource::Target => f.write_str("*")?,
                    FiberSource::Member(i) => write!(f, "S{i}")?,
                }
                f.write_str(";")?;
                for (n, (a, v)) in fa.axes.iter().zip(&fa.values).enumerate() {
                    if n > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}={v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            negated: true,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("~")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

/// An arbitrary Boolean expression tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Atom(Atom),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn member(i: usize) -> Self {
        BoolExpr::Atom(Atom::Member(i))
    }

    pub fn negation(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn canonical(&self) -> Dnf {
        Dnf::from_terms(to_dnf(self, false))
    }

    pub fn serialize(&self) -> String {
        self.canonical().to_string()
    }
}

// Negation-normal-form DNF expansion; terms are unsorted literal lists.
fn to_dnf(e: &BoolExpr, negate: bool) -> Vec<Vec<Literal>> {
    match e {
        BoolExpr::Const(b) => {
            if *b != negate {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        BoolExpr::Atom(a) => vec![vec![Literal {
            atom: a.clone(),
            negated: negate,
        }]],
        BoolExpr::Not(inner) => to_dnf(inner, !negate),
        BoolExpr::And(xs) | BoolExpr::Or(xs) => {
            let conj = matches!(e, BoolExpr::And(_)) != negate;
            if conj {
                let mut acc: Vec<Vec<Literal>> = vec![vec![]];
                for x in xs {
                    let rhs = to_dnf(x, negate);
                    let mut next = Vec::with_capacity(acc.len() * rhs.len());
                    for a in &acc {
                        for b in &rhs {
                            let mut t = a.clone();
                            t.extend(b.iter().cloned());
                            next.push(t);
                        }
                    }
                    acc = next;
                }
                acc
            } else {
                xs.iter().flat_map(|x| to_dnf(x, negate)).collect()
            }
        }
    }
}

/// Canonical disjunctive normal form. `terms == []` is the empty set,
/// `terms == [[]]` the full set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dnf {
    terms: Vec<Vec<Literal>>,
}

impl Dnf {
    pub fn falsum() -> Self {
        Dnf { terms: vec![] }
    }

    pub fn verum() -> Self {
        Dnf {
            terms: vec![vec![]],
        }
    }

    pub fn literal(lit: Literal) -> Self {
        Dnf {
            terms: vec![vec![lit]],
        }
    }

    /// Normalizes: sorts and dedupes literals, drops contradictory terms,
    /// collapses to `1` when any term is empty, sorts and dedupes terms.
    pub fn from_terms(terms: Vec<Vec<Literal>>) -> Self {
        let mut out: Vec<Vec<Literal>> = Vec::new();
        for mut t in terms {
            t.sort();
            t.dedup();
            let contradictory = t
                .iter()
                .enumerate()
                .any(|(i, l)| t[i + 1..].iter().any(|m| m.atom == l.atom));
            if contradictory {
                continue;
            }
            if t.is_empty() {
                return Dnf::verum();
            }
            out.push(t);
        }
        out.sort_by(|a, b| cmp_terms(a, b));
        out.dedup();
        Dnf { terms: out }
    }

    pub fn terms(&self) -> &[Vec<Literal>] {
        &self.terms
    }

    pub fn is_const(&self) -> Option<bool> {
        match self.terms.as_slice() {
            [] => Some(false),
            [t] if t.is_empty() => Some(true),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> BoolExpr {
        if let Some(b) = self.is_const() {
            return BoolExpr::Const(b);
        }
        BoolExpr::Or(
            self.terms
                .iter()
                .map(|t| {
                    BoolExpr::And(
                        t.iter()
                            .map(|l| {
                                let a = BoolExpr::Atom(l.atom.clone());
                                if l.negated {
                                    BoolExpr::negation(a)
                                } else {
                                    a
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut v: Vec<&Atom> = self.terms.iter().flatten().map(|l| &l.atom).collect();
        v.sort_by_key(|a| a.token());
        v.dedup();
        v
    }

    pub fn eval(&self, resolver: &dyn AtomResolver) -> Result<Relation> {
        let domain = resolver.domain().clone();
        let mut acc = Relation::empty(&domain);
        if self.is_const() == Some(true) {
            return Ok(Relation::full(&domain));
        }
        for t in &self.terms {
            let mut term = Relation::full(&domain);
            for l in t {
                let r = resolver.resolve(&l.atom)?;
                let r = if l.negated { r.complement() } else { r };
                term = term.intersection(&r)?;
            }
            acc = acc.union(&term)?;
        }
        Ok(acc)
    }
}

fn cmp_terms(a: &[Literal], b: &[Literal]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

impl PartialOrd for Dnf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dnf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string()
            .as_bytes()
            .cmp(other.to_string().as_bytes())
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = self.is_const() {
            return f.write_str(if b { "1" } else { "0" });
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            for (j, l) in t.iter().enumerate() {
                if j > 0 {
                    f.write_str("&")?;
                }
                write!(f, "{l}")?;
            }
        }
        Ok(())
    }
}

fn parse_usize(s: &str, whole: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad index {s:?} in {whole:?}")))
}

fn parse_atom(tok: &str) -> Result<Atom> {
    let bad = || Error::Parse(format!("bad atom {tok:?}"));
    if let Some(inner) = tok.strip_prefix("S[").and_then(|r| r.strip_suffix(']')) {
        return Ok(Atom::Member(parse_usize(inner, tok)?));
    }
    let inner = tok
        .strip_prefix("f[")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let (src, fix) = inner.split_once(';').ok_or_else(bad)?;
    let source = if src == "*" {
        FiberSource::Target
    } else {
        FiberSource::Member(parse_usize(src.strip_prefix('S').ok_or_else(bad)?, tok)?)
    };
    let mut axes = Vec::new();
    let mut values = Vec::new();
    for pair in fix.split(',') {
        let (a, v) = pair.split_once('=').ok_or_else(bad)?;
        axes.push(parse_usize(a, tok)?);
        values.push(parse_usize(v, tok)?);
    }
    if axes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse(format!("fiber axes must ascend in {tok:?}")));
    }
    Ok(Atom::fiber(source, axes, values))
}

impl FromStr for Dnf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Dnf> {
        match s {
            "0" => return Ok(Dnf::falsum()),
            "1" => return Ok(Dnf::verum()),
            "" => return Err(Error::Parse("empty expression".into())),
            _ => {}
        }
        let mut terms = Vec::new();
        for t in s.split(" | ") {
            let mut lits = Vec::new();
            for l in t.split('&') {
                let (negated, tok) = match l.strip_prefix('~') {
                    Some(rest) => (true, rest),
                    None => (false, l),
                };
                lits.push(Literal {
                    atom: parse_atom(tok)?,
                    negated,
                });
            }
            terms.push(lits);
        }
        Ok(Dnf::from_terms(terms))
    }
}

impl Serialize for Dnf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dnf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps atoms to concrete relations over one domain.
pub trait AtomResolver {
    fn domain(&self) -> &ProductDomain;
    fn resolve(&self, atom: &Atom) -> Result<Relation>;
}

/// Resolves member atoms against a family and target fibers against an
/// optional target set.
pub struct FamilyResolver<'a> {
    family: &'a SetFamily,
    target: Option<&'a Relation>,
}

impl<'a> FamilyResolver<'a> {
    pub fn new(family: &'a SetFamily) -> Self {
        FamilyResolver {
            family,
            target: None,
        }
    }

    pub fn with_target(family: &'a SetFamily, target: &'a Relation) -> Self {
        FamilyResolver {
            family,
            target: Some(target),
        }
    }
}

impl AtomResolver for FamilyResolver<'_> {
    fn domain(&self) -> &ProductDomain {
        self.family.domain()
    }

    fn resolve(&self, atom: &Atom) -> Result<Relation> {
        match atom {
            Atom::Member(i) => self.family.member(*i).cloned(),
            Atom::Fiber(fa) => {
                let src = match fa.source {
                    FiberSource::Member(i) => self.family.member(i)?,
                    FiberSource::Target => self.target.ok_or_else(|| {
                        Error::DanglingReference("target fiber without a target set".into())
                    })?,
                };
                if src.domain() != self.family.domain() {
                    return Err(Error::DomainMismatch(
                        "target outside the family domain".into(),
                    ));
                }
                src.cylinder(&fa.axes, &fa.values)
            }
        }
    }
}

/// Evaluates an expression against a family (no target fibers allowed).
pub fn eval_expr(expr: &BoolExpr, family: &SetFamily) -> Result<Relation> {
    expr.canonical().eval(&FamilyResolver::new(family))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(sizes: &[usize]) -> ProductDomain {
        ProductDomain::new(sizes.to_vec()).unwrap()
    }

    #[test]
    fn constants_and_excluded_middle() {
        let d = dom(&[3, 3]);
        let fam = SetFamily::new(
            d.clone(),
            vec![Relation::from_points(&d, [&[0usize, 1][..]]).unwrap()],
        )
        .unwrap();
        let not_empty = BoolExpr::negation(BoolExpr::Const(false));
        assert_eq!(eval_expr(&not_empty, &fam).unwrap(), Relation::full(&d));
        let lem = BoolExpr::Or(vec![
            BoolExpr::member(0),
            BoolExpr::negation(BoolExpr::member(0)),
        ]);
        assert_eq!(eval_expr(&lem, &fam).unwrap(), Relation::full(&d));
        assert_eq!(lem.serialize(), "S[0] | ~S[0]");
    }

    #[test]
    fn intersection_pointwise() {
        let d = dom(&[3, 3]);
        let a = Relation::from_fn(&d, |c| c[0] <= 1);
        let b = Relation::from_fn(&d, |c| c[1] >= 1);
        let fam = SetFamily::new(d.clone(), vec![a, b]).unwrap();
        let e = BoolExpr::And(vec![BoolExpr::member(0), BoolExpr::member(1)]);
        let got = eval_expr(&e, &fam).unwrap();
        // Hand listing: rows 0..=1, columns 1..=2.
        let expected =
            Relation::from_points(&d, [&[0usize, 1][..], &[0, 2], &[1, 1], &[1, 2]]).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn dangling_member() {
        let d = dom(&[2]);
        let fam = SetFamily::new(d.clone(), vec![Relation::empty(&d)]).unwrap();
        assert!(eval_expr(&BoolExpr::member(3), &fam).is_err());
    }

    #[test]
    fn canonical_is_idempotent() {
        let e = BoolExpr::And(vec![
            BoolExpr::Or(vec![BoolExpr::member(2), BoolExpr::member(1)]),
            BoolExpr::negation(BoolExpr::And(vec![
                BoolExpr::member(1),
                BoolExpr::member(0),
            ])),
        ]);
        let c = e.canonical();
        assert_eq!(c.to_expr().canonical(), c);
        assert_eq!(c.to_string().parse::<Dnf>().unwrap(), c);
    }

    #[test]
    fn contradiction_and_tautology() {
        let a = BoolExpr::member(0);
        assert_eq!(
            BoolExpr::And(vec![a.clone(), BoolExpr::negation(a.clone())]).canonical(),
            Dnf::falsum()
        );
        assert_eq!(
            BoolExpr::Or(vec![a, BoolExpr::Const(true)]).canonical(),
            Dnf::verum()
        );
    }

    #[test]
    fn token_order_matches_prefix_rules() {
        let s1 = Dnf::literal(Literal::pos(Atom::Member(1)));
        let s1s2: Dnf = "S[1]&S[2]".parse().unwrap();
        let s1_or_s2: Dnf = "S[1] | S[2]".parse().unwrap();
        let fib: Dnf = "f[*;0=1]".parse().unwrap();
        let neg: Dnf = "~S[0]".parse().unwrap();
        let mut v = vec![
            neg.clone(),
            fib.clone(),
            s1s2.clone(),
            s1_or_s2.clone(),
            s1.clone(),
            Dnf::verum(),
            Dnf::falsum(),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                Dnf::falsum(),
                Dnf::verum(),
                s1.clone(),
                s1_or_s2,
                s1s2,
                fib,
                neg
            ]
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("S[x]".parse::<Dnf>().is_err());
        assert!("f[*;1=0,0=1]".parse::<Dnf>().is_err());
        assert!("".parse::<Dnf>().is_err());
        assert!("f[S2;0=1]".parse::<Dnf>().is_ok());
    }
}
