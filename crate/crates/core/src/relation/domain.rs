use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite product `V_1 × … × V_k'` with `V_i = {0, …, n_i − 1}`.
///
/// Points are addressed row-major: axis 0 varies slowest, the last axis fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProductDomain {
    sizes: Arc<[usize]>,
    strides: Arc<[usize]>,
    total: usize,
}

impl ProductDomain {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidDomain("arity must be at least 1".into()));
        }
        if let Some(axis) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDomain(format!("axis {axis} has size 0")));
        }
        let mut strides = vec![1usize; sizes.len()];
        let mut total = 1usize;
        for axis in (0..sizes.len()).rev() {
            strides[axis] = total;
            total = total.checked_mul(sizes[axis]).ok_or_else(|| {
                Error::InvalidDomain("point count exceeds the addressable range".into())
            })?;
        }
        Ok(ProductDomain {
            sizes: sizes.into(),
            strides: strides.into(),
            total,
        })
    }

    pub fn cube(arity: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; arity])
    }

    pub fn arity(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, axis: usize) -> usize {
        self.sizes[axis]
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Number of points.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of 64-bit words needed for a dense membership vector.
    pub fn words(&self) -> usize {
        self.total.div_ceil(64)
    }

    pub fn check_point(&self, coords: &[usize]) -> Result<()> {
        if coords.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                found: coords.len(),
            });
        }
        for (axis, (&c, &n)) in coords.iter().zip(self.sizes.iter()).enumerate() {
            if c >= n {
                return Err(Error::AxisOutOfRange(format!(
                    "coordinate {c} on axis {axis} of size {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, coords: &[usize]) -> Result<usize> {
        self.check_point(coords)?;
        Ok(self.index_unchecked(coords))
    }

    pub(crate) fn index_unchecked(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(self.strides.iter())
            .map(|(c, s)| c * s)
            .sum()
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.arity()];
        self.coords_into(index, &mut out);
        out
    }

    pub fn coords_into(&self, mut index: usize, out: &mut [usize]) {
        for (o, &stride) in out.iter_mut().zip(self.strides.iter()) {
            *o = index / stride;
            index %= stride;
        }
    }

    pub fn coord(&self, index: usize, axis: usize) -> usize {
        (index / self.strides[axis]) % self.sizes[axis]
    }

    /// All points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total).map(move |i| self.coords(i))
    }

    /// The product of the listed axes (kept in the given order).
    pub fn sub_domain(&self, axes: &[usize]) -> Result<ProductDomain> {
        for &a in axes {
            if a >= self.arity() {
                return Err(Error::AxisOutOfRange(format!(
                    "axis {a} in a domain of arity {}",
                    self.arity()
                )));
            }
        }
        ProductDomain::new(axes.iter().map(|&a| self.sizes[a]).collect())
    }

    /// Axes of `0..arity` not listed in `fixed`, ascending.
    pub fn free_axes(&self, fixed: &[usize]) -> Vec<usize> {
        (0..self.arity()).filter(|a| !fixed.contains(a)).collect()
    }
}

impl TryFrom<Vec<usize>> for ProductDomain {
    type Error = Error;
    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        ProductDomain::new(sizes)
    }
}

impl From<ProductDomain> for Vec<usize> {
    fn from(d: ProductDomain) -> Self {
        d.sizes.to_vec()
    }
}

/// Iterates every assignment of a mixed-radix counter in ascending order
/// (last position fastest). An empty radix list yields one empty assignment.
pub fn mixed_radix(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = radices.iter().product();
    let total = if radices.contains(&0) { 0 } else { total };
    (0..total).map(move |mut i| {
        let mut out = vec![0; radices.len()];
        for pos in (0..radices.len()).rev() {
            out[pos] = i % radices[pos];
            i /= radices[pos];
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_axis_one_slowest() {
        let d = ProductDomain::new(vec![2, 3]).unwrap();
        assert_eq!(d.total(), 6);
        assert_eq!(d.index_of(&[0, 2]).unwrap(), 2);
        assert_eq!(d.index_of(&[1, 0]).unwrap(), 3);
        assert_eq!(d.coords(5), vec![1, 2]);
        assert_eq!(d.coord(4, 1), 1);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ProductDomain::new(vec![]).is_err());
        assert!(ProductDomain::new(vec![3, 0]).is_err());
        assert!(ProductDomain::new(vec![usize::MAX, 3]).is_err());
        let d = ProductDomain::new(vec![2, 2]).unwrap();
        assert!(d.index_of(&[2, 0]).is_err());
        assert!(d.index_of(&[0]).is_err());
    }

    #[test]
    fn mixed_radix_order() {
        let all: Vec<_> = mixed_radix(&[2, 2]).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(mixed_radix(&[]).count(), 1);
    }
}
