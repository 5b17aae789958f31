use crate::error::{Error, Result};
use crate::relation::domain::ProductDomain;
use crate::relation::set::Relation;

/// A fixing `u`, `ā` of some coordinates of a source relation.
#[derive(Debug, Clone)]
pub struct FiberSpec<'a> {
    fixed_axes: Vec<usize>,
    fixed_values: Vec<usize>,
    source: &'a Relation,
}

impl<'a> FiberSpec<'a> {
    /// Axes are stored ascending; `values[i]` belongs to `axes[i]` as given.
    pub fn new(source: &'a Relation, axes: &[usize], values: &[usize]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter(
                "a fiber fixes at least one axis".into(),
            ));
        }
        if axes.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} axes but {} values",
                axes.len(),
                values.len()
            )));
        }
        let mut pairs: Vec<(usize, usize)> =
            axes.iter().copied().zip(values.iter().copied()).collect();
        pairs.sort_unstable();
        let dom = source.domain();
        for (i, &(a, v)) in pairs.iter().enumerate() {
            if a >= dom.arity() {
                return Err(Error::AxisOutOfRange(format!(
                    "axis {a} in a relation of arity {}",
                    dom.arity()
                )));
            }
            if i > 0 && pairs[i - 1].0 == a {
                return Err(Error::ShapeMismatch(format!("axis {a} fixed twice")));
            }
            if v >= dom.size(a) {
                return Err(Error::AxisOutOfRange(format!(
                    "value {v} on axis {a} of size {}",
                    dom.size(a)
                )));
            }
        }
        Ok(FiberSpec {
            fixed_axes: pairs.iter().map(|p| p.0).collect(),
            fixed_values: pairs.iter().map(|p| p.1).collect(),
            source,
        })
    }

    pub fn fixed_axes(&self) -> &[usize] {
        &self.fixed_axes
    }

    pub fn fixed_values(&self) -> &[usize] {
        &self.fixed_values
    }

    pub fn source(&self) -> &Relation {
        self.source
    }

    /// Arity of the fiber, `k' − |u|`.
    pub fn fiber_arity(&self) -> usize {
        self.source.domain().arity() - self.fixed_axes.len()
    }

    /// The fiber itself on the free axes; `None` when every axis is fixed.
    pub fn fiber(&self) -> Option<Relation> {
        if self.fiber_arity() == 0 {
            None
        } else {
            Some(
                self.source
                    .fiber(&self.fixed_axes, &self.fixed_values)
                    .expect("validated fixing"),
            )
        }
    }
}

/// Expands a fiber back to a cylinder over `target`, which must be the
/// source relation's domain.
pub fn cylinder_expand(fiber: &FiberSpec<'_>, target: &ProductDomain) -> Result<Relation> {
    if fiber.source.domain() != target {
        return Err(Error::DomainMismatch(format!(
            "fiber source has sizes {:?}, target {:?}",
            fiber.source.domain().sizes(),
            target.sizes()
        )));
    }
    fiber
        .source
        .cylinder(&fiber.fixed_axes, &fiber.fixed_values)
}
