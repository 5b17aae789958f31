use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::relation::domain::ProductDomain;
use crate::relation::set::Relation;

/// A product of per-axis probability vectors with exact rational weights.
///
/// Internally each axis is scaled to integers over its common denominator,
/// so the mass of a relation is an integer count over `scale()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductMeasure {
    domain: ProductDomain,
    axes: Vec<Vec<Rational>>,
    axis_numers: Vec<Vec<u128>>,
    axis_denoms: Vec<u128>,
    point_weights: Vec<u128>,
    uniform_weight: Option<u128>,
    scale: u128,
}

impl ProductMeasure {
    pub fn new(domain: ProductDomain, axes: Vec<Vec<Rational>>) -> Result<Self> {
        if axes.len() != domain.arity() {
            return Err(Error::InvalidMeasure(format!(
                "{} axis vectors for a domain of arity {}",
                axes.len(),
                domain.arity()
            )));
        }
        let mut axis_numers = Vec::with_capacity(axes.len());
        let mut axis_denoms = Vec::with_capacity(axes.len());
        for (i, weights) in axes.iter().enumerate() {
            if weights.len() != domain.size(i) {
                return Err(Error::InvalidMeasure(format!(
                    "axis {i} has {} weights for {} values",
                    weights.len(),
                    domain.size(i)
                )));
            }
            if weights.iter().any(|w| w.is_negative()) {
                return Err(Error::InvalidMeasure(format!(
                    "axis {i} has a negative weight"
                )));
            }
            let sum: Rational = weights.iter().sum();
            if !sum.is_one() {
                return Err(Error::InvalidMeasure(format!(
                    "axis {i} sums to {}",
                    rational::format(&sum)
                )));
            }
            let denom = weights
                .iter()
                .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
            let numers = weights
                .iter()
                .map(|w| (w.numer() * (&denom / w.denom())).to_u128())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidMeasure(format!("axis {i} weights are too fine")))?;
            axis_numers.push(numers);
            axis_denoms.push(
                denom.to_u128().ok_or_else(|| {
                    Error::InvalidMeasure(format!("axis {i} weights are too fine"))
                })?,
            );
        }
        let scale = axis_denoms
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidMeasure("product of denominators overflows".into()))?;
        let mut point_weights = vec![0u128; domain.total()];
        let mut coords = vec![0; domain.arity()];
        for (i, w) in point_weights.iter_mut().enumerate() {
            domain.coords_into(i, &mut coords);
            *w = coords
                .iter()
                .enumerate()
                .map(|(axis, &c)| axis_numers[axis][c])
                .product();
        }
        let uniform_weight = match point_weights.first() {
            Some(&w0) if point_weights.iter().all(|&w| w == w0) => Some(w0),
            _ => None,
        };
        Ok(ProductMeasure {
            domain,
            axes,
            axis_numers,
            axis_denoms,
            point_weights,
            uniform_weight,
            scale,
        })
    }

    pub fn uniform(domain: &ProductDomain) -> Self {
        let axes = domain
            .sizes()
            .iter()
            .map(|&n| vec![rational::ratio(1, n as i64); n])
            .collect();
        ProductMeasure::new(domain.clone(), axes).expect("uniform weights are valid")
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn axes(&self) -> &[Vec<Rational>] {
        &self.axes
    }

    /// Common denominator of all point masses.
    pub fn scale(&self) -> u128 {
        self.scale
    }

    pub fn point_weight(&self, index: usize) -> u128 {
        self.point_weights[index]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.axis_numers.iter().flatten().all(|&w| w > 0)
    }

    /// Integer mass (over `scale()`) of the set bits of a raw word vector.
    pub fn mass_words(&self, words: &[u64]) -> u128 {
        if let Some(w) = self.uniform_weight {
            let n: u32 = words.iter().map(|x| x.count_ones()).sum();
            return w * n as u128;
        }
        let mut total = 0u128;
        for (wi, &word) in words.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                total += self.point_weights[wi * 64 + b];
            }
        }
        total
    }

    /// Integer mass of `a Δ b` without allocating.
    pub fn symdiff_mass_words(&self, a: &[u64], b: &[u64]) -> u128 {
        if let Some(w) = self.uniform_weight {
            let n: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
            return w * n as u128;
        }
        let mut total = 0u128;
        for (wi, (&x, &y)) in a.iter().zip(b).enumerate() {
            let mut d = x ^ y;
            while d != 0 {
                let bit = d.trailing_zeros() as usize;
                d &= d - 1;
                total += self.point_weights[wi * 64 + bit];
            }
        }
        total
    }

    fn check(&self, r: &Relation) -> Result<()> {
        if r.domain() != &self.domain {
            return Err(Error::DomainMismatch(format!(
                "relation sizes {:?}, measure sizes {:?}",
                r.domain().sizes(),
                self.domain.sizes()
            )));
        }
        Ok(())
    }

    pub fn mass(&self, r: &Relation) -> Result<u128> {
        self.check(r)?;
        Ok(self.mass_words(r.words()))
    }

    pub fn to_rational(&self, mass: u128) -> Rational {
        rational::from_u128(mass, self.scale)
    }

    /// Largest integer mass `m` with `m / scale ≤ eps`.
    pub fn threshold(&self, eps: &Rational) -> u128 {
        rational::floor_scaled(eps, self.scale)
    }

    /// Restriction to the listed axes (in the given order).
    pub fn marginal(&self, axes: &[usize]) -> Result<ProductMeasure> {
        let domain = self.domain.sub_domain(axes)?;
        ProductMeasure::new(domain, axes.iter().map(|&a| self.axes[a].clone()).collect())
    }

    /// Inverse-CDF draw of one coordinate on `axis`.
    pub fn sample_axis<R: Rng + ?Sized>(&self, axis: usize, rng: &mut R) -> usize {
        let denom = self.axis_denoms[axis];
        let r = match u64::try_from(denom) {
            Ok(d) => rng.gen_range(0..d) as u128,
            Err(_) => rng.gen_range(0..denom),
        };
        let mut acc = 0u128;
        for (v, &w) in self.axis_numers[axis].iter().enumerate() {
            acc += w;
            if r < acc {
                return v;
            }
        }
        unreachable!("axis weights sum to the denominator")
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.domain.arity())
            .map(|a| self.sample_axis(a, rng))
            .collect()
    }
}

/// `μ(R)`, exact.
pub fn measure_of(r: &Relation, mu: &ProductMeasure) -> Result<Rational> {
    Ok(mu.to_rational(mu.mass(r)?))
}

/// `μ(S Δ T)`, exact.
pub fn symdiff_measure(s: &Relation, t: &Relation, mu: &ProductMeasure) -> Result<Rational> {
    mu.check(s)?;
    mu.check(t)?;
    Ok(mu.to_rational(mu.symdiff_mass_words(s.words(), t.words())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn d(sizes: &[usize]) -> ProductDomain {
        ProductDomain::new(sizes.to_vec()).unwrap()
    }

    #[test]
    fn normalization_and_points() {
        let dom = d(&[2, 2]);
        let mu = ProductMeasure::uniform(&dom);
        assert_eq!(measure_of(&Relation::full(&dom), &mu).unwrap(), ratio(1, 1));
        assert_eq!(
            measure_of(&Relation::empty(&dom), &mu).unwrap(),
            ratio(0, 1)
        );
        let p = Relation::from_points(&dom, [&[0usize, 0][..]]).unwrap();
        assert_eq!(measure_of(&p, &mu).unwrap(), ratio(1, 4));
    }

    #[test]
    fn row_vs_column() {
        let dom = d(&[2, 2]);
        let mu = ProductMeasure::uniform(&dom);
        let row = Relation::from_fn(&dom, |c| c[0] == 0);
        let col = Relation::from_fn(&dom, |c| c[1] == 0);
        // Cells (0,1) and (1,0) differ: 2 of 4.
        assert_eq!(symdiff_measure(&row, &col, &mu).unwrap(), ratio(1, 2));
        assert_eq!(symdiff_measure(&row, &row, &mu).unwrap(), ratio(0, 1));
        assert_eq!(
            symdiff_measure(&Relation::full(&dom), &Relation::empty(&dom), &mu).unwrap(),
            ratio(1, 1)
        );
    }

    #[test]
    fn rejects_bad_axes() {
        let dom = d(&[2]);
        assert!(ProductMeasure::new(dom.clone(), vec![vec![ratio(1, 2), ratio(1, 3)]]).is_err());
        assert!(ProductMeasure::new(dom.clone(), vec![vec![ratio(3, 2), ratio(-1, 2)]]).is_err());
        assert!(ProductMeasure::new(dom.clone(), vec![vec![ratio(1, 1)]]).is_err());
        let other = Relation::full(&d(&[3]));
        let mu = ProductMeasure::uniform(&dom);
        assert!(measure_of(&other, &mu).is_err());
    }

    #[test]
    fn non_uniform_mass_and_threshold() {
        let dom = d(&[2, 3]);
        let mu = ProductMeasure::new(
            dom.clone(),
            vec![
                vec![ratio(1, 3), ratio(2, 3)],
                vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)],
            ],
        )
        .unwrap();
        let r = Relation::from_points(&dom, [&[1usize, 0][..], &[0, 2]]).unwrap();
        // 2/3·1/2 + 1/3·1/4 = 1/3 + 1/12 = 5/12
        assert_eq!(measure_of(&r, &mu).unwrap(), ratio(5, 12));
        let thr = mu.threshold(&ratio(5, 12));
        assert_eq!(mu.mass(&r).unwrap(), thr);
    }

    #[test]
    fn sampler_respects_zero_weights() {
        use rand::SeedableRng;
        let dom = d(&[3]);
        let mu =
            ProductMeasure::new(dom, vec![vec![ratio(0, 1), ratio(1, 4), ratio(3, 4)]]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        for _ in 0..4000 {
            counts[mu.sample_axis(0, &mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!((counts[2] as f64 / 4000.0 - 0.75).abs() < 0.03);
    }
}
