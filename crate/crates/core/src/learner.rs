//! The PAC_k protocol: samples observed through the union of axis
//! hyperplanes, slice recovery from those samples, the two-phase proper
//! learner, and a seeded experiment harness.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::search::{first_accepted, LiteralPool, SearchOutcome};
use crate::packing::{amplified_witness_rate, greedy_packing, ExprBudget};
use crate::rational::{self, serde_rational, Rational};
use crate::relation::{Atom, Dnf, FiberSource, ProductDomain, ProductMeasure, Relation, SetFamily};
use crate::sampling::{substream, LEARNER_TRIALS, SELECTION};

/// `D_n(ā)`: every point agreeing with the anchor on at least one axis.
pub fn dn_set(domain: &ProductDomain, anchor: &[usize]) -> Result<Relation> {
    domain.check_point(anchor)?;
    Ok(Relation::from_fn(domain, |c| {
        c.iter().zip(anchor).any(|(x, a)| x == a)
    }))
}

/// A concept observed on `D_n(ā)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSlices {
    anchor: Vec<usize>,
    observed: Relation,
    positive: Relation,
}

impl SampleSlices {
    /// `positive` must lie inside `observed`, which must be `D_n(anchor)`.
    pub fn new(anchor: Vec<usize>, observed: Relation, positive: Relation) -> Result<Self> {
        if observed != dn_set(observed.domain(), &anchor)? {
            return Err(Error::MalformedBatch(format!(
                "observed points are not the hyperplanes through {anchor:?}"
            )));
        }
        if !positive.difference(&observed)?.is_empty() {
            return Err(Error::MalformedBatch(
                "labels outside the observed points".into(),
            ));
        }
        Ok(SampleSlices {
            anchor,
            observed,
            positive,
        })
    }

    pub fn anchor(&self) -> &[usize] {
        &self.anchor
    }

    pub fn domain(&self) -> &ProductDomain {
        self.observed.domain()
    }

    pub fn observed(&self) -> &Relation {
        &self.observed
    }

    /// `(point index, label)` for every observed point, ascending.
    pub fn labels(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.observed
            .indices()
            .map(|i| (i, self.positive.contains_index(i)))
    }
}

/// Labels the concept on `D_n(ā)` and nowhere else.
pub fn restrict(concept: &Relation, anchor: &[usize]) -> Result<SampleSlices> {
    let observed = dn_set(concept.domain(), anchor)?;
    let positive = concept.intersection(&observed)?;
    Ok(SampleSlices {
        anchor: anchor.to_vec(),
        observed,
        positive,
    })
}

fn restrict_with(concept: &Relation, anchor: &[usize], observed: &Relation) -> SampleSlices {
    SampleSlices {
        anchor: anchor.to_vec(),
        positive: concept.intersection(observed).expect("same domain"),
        observed: observed.clone(),
    }
}

fn require_recoverable(domain: &ProductDomain) -> Result<()> {
    match domain.sizes().iter().position(|&n| n < 2) {
        Some(axis) => Err(Error::AnchorUnrecoverable(format!(
            "axis {axis} has a single value"
        ))),
        None => Ok(()),
    }
}

/// Reads the anchor off the observed set: on each axis the anchor value is
/// the one whose hyperplane is observed most often.
pub fn recover_anchor(s: &SampleSlices) -> Result<Vec<usize>> {
    let domain = s.domain();
    require_recoverable(domain)?;
    let offsets: Vec<usize> = domain
        .sizes()
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let mut counts = vec![0usize; domain.sizes().iter().sum()];
    for i in s.observed.indices() {
        for (axis, &o) in offsets.iter().enumerate() {
            counts[o + domain.coord(i, axis)] += 1;
        }
    }
    Ok(offsets
        .iter()
        .zip(domain.sizes())
        .map(|(&o, &n)| {
            let row = &counts[o..o + n];
            let best = *row.iter().max().unwrap();
            row.iter().position(|&c| c == best).unwrap()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceValue {
    /// All axes fixed: the label at the anchor.
    Point(bool),
    /// The fiber on the free axes, ascending.
    Fiber(Relation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredSlice {
    pub axes: Vec<usize>,
    pub values: Vec<usize>,
    pub slice: SliceValue,
}

/// The anchor's slice with `axes` (nonempty, ascending) fixed, read only
/// from the observed labels.
pub fn recover_slice(s: &SampleSlices, axes: &[usize]) -> Result<RecoveredSlice> {
    let anchor = recover_anchor(s)?;
    slice_at(s, &anchor, axes)
}

fn slice_at(s: &SampleSlices, anchor: &[usize], axes: &[usize]) -> Result<RecoveredSlice> {
    let domain = s.domain();
    if axes.is_empty()
        || axes.windows(2).any(|w| w[0] >= w[1])
        || axes.iter().any(|&a| a >= domain.arity())
    {
        return Err(Error::InvalidParameter(format!(
            "{axes:?} is not a nonempty ascending axis list"
        )));
    }
    let values: Vec<usize> = axes.iter().map(|&a| anchor[a]).collect();
    let slice = if axes.len() == domain.arity() {
        SliceValue::Point(s.positive.contains_index(domain.index_unchecked(anchor)))
    } else {
        SliceValue::Fiber(s.positive.fiber(axes, &values)?)
    };
    Ok(RecoveredSlice {
        axes: axes.to_vec(),
        values,
        slice,
    })
}

/// Every slice through the anchor, smaller fixings first.
pub fn recover_slices(s: &SampleSlices) -> Result<Vec<RecoveredSlice>> {
    let anchor = recover_anchor(s)?;
    let k = s.domain().arity();
    let mut fixings: Vec<Vec<usize>> = (1u32..(1 << k))
        .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    fixings.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    fixings.iter().map(|u| slice_at(s, &anchor, u)).collect()
}

/// Smallest `N ≥ ln(2·events/δ) / (2ε²)`.
pub fn hoeffding_sample_size(
    epsilon: &Rational,
    delta: &Rational,
    event_count: u64,
) -> Result<u64> {
    if event_count == 0 {
        return Err(Error::InvalidParameter(
            "event count must be at least 1".into(),
        ));
    }
    sample_size(epsilon, delta, (event_count as f64).ln())
}

/// As [`hoeffding_sample_size`] with `2^log2_events` events.
pub fn hoeffding_sample_size_pow2(
    epsilon: &Rational,
    delta: &Rational,
    log2_events: u32,
) -> Result<u64> {
    sample_size(epsilon, delta, log2_events as f64 * std::f64::consts::LN_2)
}

fn sample_size(epsilon: &Rational, delta: &Rational, ln_events: f64) -> Result<u64> {
    rational::check_open_unit("epsilon", epsilon)?;
    rational::check_open_unit("delta", delta)?;
    let eps = rational::to_f64(epsilon);
    let n = (std::f64::consts::LN_2 + ln_events - rational::to_f64(delta).ln()) / (2.0 * eps * eps);
    n.ceil()
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("sample size overflows".into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerConfig {
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    /// Anchors per amplification block.
    pub n1: usize,
    /// Number of amplification blocks.
    pub ell: usize,
    /// Points used to estimate sample distances.
    pub n2: usize,
    pub budget: ExprBudget,
    pub seed: u64,
    #[serde(
        default,
        with = "optional_rational",
        skip_serializing_if = "Option::is_none"
    )]
    pub rho_hat: Option<Rational>,
}

mod optional_rational {
    use serde::{Deserializer, Serialize, Serializer};

    use crate::rational::{self, Rational, RationalValue};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(rational::format).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v: Option<RationalValue> = serde::Deserialize::deserialize(d)?;
        Ok(v.map(|r| r.0))
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        rational::check_open_unit("epsilon", &self.epsilon)?;
        rational::check_open_unit("delta", &self.delta)?;
        if self.n1 == 0 || self.ell == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter(
                "n1, ell and n2 must be at least 1".into(),
            ));
        }
        if let Some(r) = &self.rho_hat {
            rational::check_half_open_unit("rho_hat", r)?;
        }
        Ok(())
    }

    /// `δ′ = δ/2`.
    pub fn delta_prime(&self) -> Rational {
        &self.delta / Rational::from_integer(2.into())
    }

    pub fn batch_count(&self) -> usize {
        self.ell * self.n1 + self.n2
    }
}

/// The learner's output: always a family member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypothesis {
    pub member: usize,
    /// The first expression meeting the sample bound, if any.
    pub witness: Option<Dnf>,
    /// Weighted count of estimation points misclassified by the witness.
    pub sample_mismatches: Option<u64>,
    /// Member 0 was returned because a stage found nothing.
    pub fallback: bool,
}

/// Multiplicity of each domain point among the estimation samples, stored
/// as binary digit planes so that a weighted count is a few popcounts.
struct WeightedSample {
    planes: Vec<Vec<u64>>,
    positive: Vec<u64>,
    seen: Vec<u64>,
}

impl WeightedSample {
    fn new(domain: &ProductDomain, points: &[(usize, bool)]) -> Result<Self> {
        let mut counts = vec![0u64; domain.total()];
        let mut label: Vec<Option<bool>> = vec![None; domain.total()];
        for &(i, b) in points {
            counts[i] += 1;
            match label[i] {
                Some(prev) if prev != b => {
                    return Err(Error::MalformedBatch(format!(
                        "point {i} labeled both ways"
                    )))
                }
                _ => label[i] = Some(b),
            }
        }
        let w = domain.words();
        let depth = 64 - counts.iter().max().copied().unwrap_or(0).leading_zeros() as usize;
        let mut planes = vec![vec![0u64; w]; depth];
        let mut positive = vec![0u64; w];
        let mut seen = vec![0u64; w];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            seen[i / 64] |= 1 << (i % 64);
            if label[i] == Some(true) {
                positive[i / 64] |= 1 << (i % 64);
            }
            for (b, plane) in planes.iter_mut().enumerate() {
                if c >> b & 1 == 1 {
                    plane[i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(WeightedSample {
            planes,
            positive,
            seen,
        })
    }

    fn mismatches(&self, bits: &[u64]) -> u64 {
        let mut total = 0u64;
        for (j, (&b, (&p, &s))) in bits
            .iter()
            .zip(self.positive.iter().zip(&self.seen))
            .enumerate()
        {
            let diff = (b ^ p) & s;
            if diff == 0 {
                continue;
            }
            for (level, plane) in self.planes.iter().enumerate() {
                total += ((plane[j] & diff).count_ones() as u64) << level;
            }
        }
        total
    }
}

/// The two-phase learner. The first `ell·n1` batches supply fiber anchors,
/// the remaining `n2` batches supply labeled estimation points; only data
/// recovered from the batches is used.
pub fn learn_h(
    batches: &[SampleSlices],
    family: &SetFamily,
    centers: &[usize],
    mu: &ProductMeasure,
    config: &LearnerConfig,
) -> Result<Hypothesis> {
    config.validate()?;
    let domain = family.domain();
    if mu.domain() != domain {
        return Err(Error::DomainMismatch(
            "measure and family domains differ".into(),
        ));
    }
    if family.is_empty() {
        return Err(Error::InvalidParameter(
            "the learner needs a nonempty family".into(),
        ));
    }
    require_recoverable(domain)?;
    let k = domain.arity();
    config.budget.validate(k.max(1))?;
    if batches.len() != config.batch_count() {
        return Err(Error::MalformedBatch(format!(
            "{} batches, expected ell·n1 + n2 = {}",
            batches.len(),
            config.batch_count()
        )));
    }
    if let Some(b) = batches.iter().find(|b| b.domain() != domain) {
        return Err(Error::MalformedBatch(format!(
            "batch over sizes {:?} for a family over {:?}",
            b.domain().sizes(),
            domain.sizes()
        )));
    }
    for &c in centers {
        family.member(c)?;
    }
    let (anchor_batches, estimation) = batches.split_at(config.ell * config.n1);

    let mut atoms: Vec<(Atom, Vec<u64>)> = centers
        .iter()
        .map(|&c| (Atom::Member(c), family.members()[c].words().to_vec()))
        .collect();
    if config.budget.max_fibers > 0 {
        let fixings = config.budget.fixings(k);
        for batch in anchor_batches {
            let anchor = recover_anchor(batch)?;
            for u in &fixings {
                let rec = slice_at(batch, &anchor, u)?;
                let SliceValue::Fiber(fiber) = &rec.slice else {
                    continue;
                };
                let cyl = Relation::cylinder_of(domain, u, fiber)?;
                atoms.push((
                    Atom::fiber(FiberSource::Target, u.clone(), rec.values.clone()),
                    cyl.words().to_vec(),
                ));
                if config.budget.center_fibers {
                    for &c in centers {
                        let cyl = family.members()[c].cylinder(u, &rec.values)?;
                        atoms.push((
                            Atom::fiber(FiberSource::Member(c), u.clone(), rec.values.clone()),
                            cyl.words().to_vec(),
                        ));
                    }
                }
            }
        }
    }
    let pool = LiteralPool::new(domain, atoms);

    // Estimation points only need their 0-ary slice: the label at the anchor.
    let points = estimation
        .iter()
        .map(|b| {
            let i = domain.index_unchecked(&recover_anchor(b)?);
            Ok((i, b.positive.contains_index(i)))
        })
        .collect::<Result<Vec<_>>>()?;
    let sample = WeightedSample::new(domain, &points)?;
    let sample_bound = rational::floor_scaled(
        &(&config.epsilon / Rational::from_integer(3.into())),
        config.n2 as u128,
    ) as u64;

    let mut last = 0;
    let outcome = first_accepted(&pool, &config.budget.limits(), |bits| {
        last = sample.mismatches(bits);
        last <= sample_bound
    });
    let SearchOutcome::Found { expr, bits } = outcome else {
        return Ok(Hypothesis {
            member: 0,
            witness: None,
            sample_mismatches: None,
            fallback: true,
        });
    };
    let close = mu.threshold(&(&config.epsilon / Rational::from_integer(2.into())));
    let pick = family
        .members()
        .iter()
        .position(|s| mu.symdiff_mass_words(&bits, s.words()) <= close);
    Ok(Hypothesis {
        member: pick.unwrap_or(0),
        witness: Some(expr),
        sample_mismatches: Some(last),
        fallback: pick.is_none(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptMode {
    AllMembers,
    /// This many distinct members drawn with the seed.
    Sampled(usize),
}

/// Parameters resolved by the harness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolvedConfig {
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(with = "serde_rational")]
    pub delta_prime: Rational,
    pub n1: usize,
    pub ell: usize,
    pub n2: usize,
    #[serde(with = "serde_rational")]
    pub rho_hat: Rational,
    /// The witness-rate estimate was zero and was raised to `1/trials`.
    pub rho_floored: bool,
    pub centers: Vec<usize>,
    pub budget: ExprBudget,
    pub seed: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptOutcome {
    pub concept: usize,
    pub trials: u64,
    pub failures: u64,
    pub rate: String,
    #[serde(with = "serde_rational")]
    pub worst_dist: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExperimentReport {
    pub config: ResolvedConfig,
    pub concepts: Vec<ConceptOutcome>,
}

/// Resolves centers, `ρ̂`, `ℓ` and `n2` for a family, as the experiment does.
pub fn resolve_config(
    family: &SetFamily,
    mu: &ProductMeasure,
    config: &LearnerConfig,
    trials: u64,
) -> Result<ResolvedConfig> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let sixth = &config.epsilon / Rational::from_integer(6.into());
    let centers = greedy_packing(family, mu, &sixth)?.centers;
    let (rho_hat, rho_floored) = match &config.rho_hat {
        Some(r) => (r.clone(), false),
        None => {
            let rates = amplified_witness_rate(
                family,
                mu,
                &sixth,
                &centers,
                &config.budget,
                config.n1,
                trials,
                config.seed,
            )?;
            let min = rates.into_iter().min().expect("nonempty family");
            if min.is_zero() {
                (rational::from_u128(1, trials as u128), true)
            } else {
                (min, false)
            }
        }
    };
    let delta_prime = config.delta_prime();
    let ell = ((1.0 / rational::to_f64(&delta_prime)).ln() / rational::to_f64(&rho_hat))
        .ceil()
        .max(1.0) as usize;
    let log2_events = u32::try_from(ell * config.n1 + 1)
        .map_err(|_| Error::InvalidParameter("amplification too large".into()))?;
    let n2 = hoeffding_sample_size_pow2(&sixth, &delta_prime, log2_events)? as usize;
    Ok(ResolvedConfig {
        epsilon: config.epsilon.clone(),
        delta: config.delta.clone(),
        delta_prime,
        n1: config.n1,
        ell,
        n2,
        rho_hat,
        rho_floored,
        centers,
        budget: config.budget,
        seed: config.seed,
        trials,
    })
}

/// Runs the learner on seeded samples for each concept and reports the
/// empirical rate of `μ(H Δ f) > ε`.
pub fn pac_experiment(
    family: &SetFamily,
    mu: &ProductMeasure,
    config: &LearnerConfig,
    trials: u64,
    mode: ConceptMode,
) -> Result<ExperimentReport> {
    let resolved = resolve_config(family, mu, config, trials)?;
    let run_config = LearnerConfig {
        ell: resolved.ell,
        n2: resolved.n2,
        rho_hat: Some(resolved.rho_hat.clone()),
        ..config.clone()
    };
    let concepts: Vec<usize> = match mode {
        ConceptMode::AllMembers => (0..family.len()).collect(),
        ConceptMode::Sampled(n) => {
            let mut rng = substream(config.seed, SELECTION, 0, 0);
            let mut v =
                rand::seq::index::sample(&mut rng, family.len(), n.min(family.len())).into_vec();
            v.sort_unstable();
            v
        }
    };
    let domain = family.domain();
    let mut observed_cache: Vec<Option<Relation>> = vec![None; domain.total()];
    let failure_mass = mu.threshold(&config.epsilon);
    let outcomes = concepts
        .iter()
        .map(|&ci| {
            let concept = &family.members()[ci];
            let mut failures = 0u64;
            let mut worst = 0u128;
            for trial in 0..trials {
                let mut rng = substream(config.seed, LEARNER_TRIALS, ci as u64, trial);
                let batches: Vec<SampleSlices> = (0..run_config.batch_count())
                    .map(|_| {
                        let p = mu.sample_point(&mut rng);
                        let idx = domain.index_unchecked(&p);
                        let observed = observed_cache[idx]
                            .get_or_insert_with(|| dn_set(domain, &p).expect("sampled point"));
                        restrict_with(concept, &p, observed)
                    })
                    .collect();
                let h = learn_h(&batches, family, &resolved.centers, mu, &run_config)?;
                let dist =
                    mu.symdiff_mass_words(concept.words(), family.members()[h.member].words());
                worst = worst.max(dist);
                if dist > failure_mass {
                    failures += 1;
                }
            }
            Ok(ConceptOutcome {
                concept: ci,
                trials,
                failures,
                rate: format!("{failures}/{trials}"),
                worst_dist: mu.to_rational(worst),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: resolved,
        concepts: outcomes,
    })
}

impl ExperimentReport {
    pub fn worst_rate(&self) -> Rational {
        self.concepts
            .iter()
            .map(|c| rational::from_u128(c.failures as u128, c.trials as u128))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn passes(&self) -> bool {
        self.worst_rate() <= self.config.delta
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            epsilon: rational::ratio(1, 5),
            delta: rational::ratio(1, 5),
            n1: 2,
            ell: 1,
            n2: 1,
            budget: ExprBudget::for_arity(2),
            seed: 0,
            rho_hat: None,
        }
    }
}
