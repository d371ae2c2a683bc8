//! Behavior spaces, their equal-volume partitions and the hypotheses built
//! on top of them.
//!
//! A [`BehaviorSpace`] is a closed axis-aligned box of physically meaningful
//! parameters (a desired gap, a desired speed, ...). A [`Partition`] splits
//! it into `K` equal cells; each cell paired with the shared
//! [`HypotheticalPolicy`] forms one [`Hypothesis`], whose action
//! distribution is the push-forward of the uniform distribution on the cell.
//!
//! Cells use a half-open convention `[lower, upper)` along every axis, except
//! that the last cell on an axis is closed on the right. Membership in a
//! partition is therefore a total function on the parent box.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{DomainError, Error, Result};
use crate::AgentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub unit: String,
}

impl Dimension {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            unit: unit.into(),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// A point of a behavior space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorState(pub SmallVec<[f64; 6]>);

impl BehaviorState {
    pub fn new(values: &[f64]) -> Self {
        Self(SmallVec::from_slice(values))
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(&[value])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for BehaviorState {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Closed axis-aligned box with at least one non-degenerate dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorSpace {
    dims: Vec<Dimension>,
}

impl BehaviorSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("behavior space needs at least one dimension"));
        }
        for d in &dims {
            if !(d.lower.is_finite() && d.upper.is_finite()) {
                return Err(Error::invalid(format!(
                    "dimension `{}` has non-finite bounds",
                    d.name
                )));
            }
            if d.lower >= d.upper {
                return Err(Error::invalid(format!(
                    "dimension `{}` requires lower < upper, got [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
        }
        Ok(Self { dims })
    }

    /// One-dimensional space, the common case.
    pub fn interval(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![Dimension::new(name, lower, upper, "")])
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn dim_count(&self) -> usize {
        self.dims.len()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.dims[axis].lower
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.dims[axis].upper
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().map(Dimension::width).product()
    }

    pub fn center(&self) -> BehaviorState {
        BehaviorState(self.dims.iter().map(Dimension::center).collect())
    }

    /// Closed-box membership.
    pub fn contains(&self, state: &BehaviorState) -> bool {
        state.len() == self.dims.len()
            && self
                .dims
                .iter()
                .zip(state.values())
                .all(|(d, &v)| d.lower <= v && v <= d.upper)
    }

    pub fn is_subset_of(&self, other: &BehaviorSpace) -> bool {
        self.dims.len() == other.dims.len()
            && self
                .dims
                .iter()
                .zip(&other.dims)
                .all(|(a, b)| b.lower <= a.lower && a.upper <= b.upper)
    }

    /// Component-wise uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BehaviorState {
        BehaviorState(
            self.dims
                .iter()
                .map(|d| {
                    let u: f64 = rng.random();
                    // Guard the rounding case lower + width * u == upper + ulp.
                    (d.lower + d.width() * u).min(d.upper)
                })
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for BehaviorSpace {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dims: Vec<Dimension>,
        }
        let raw = Raw::deserialize(de)?;
        BehaviorSpace::new(raw.dims).map_err(serde::de::Error::custom)
    }
}

/// Equal-volume grid partition of a behavior space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    parent: BehaviorSpace,
    cells: Vec<BehaviorSpace>,
    cells_per_dim: Vec<usize>,
}

impl Partition {
    /// Splits every axis into `cells_per_dim[axis]` slices of equal width.
    /// Cells are ordered row-major: the first axis varies slowest.
    pub fn equal(space: &BehaviorSpace, cells_per_dim: &[usize]) -> Result<Self> {
        if cells_per_dim.len() != space.dim_count() {
            return Err(Error::invalid(format!(
                "cells_per_dim has {} entries for a {}-dimensional space",
                cells_per_dim.len(),
                space.dim_count()
            )));
        }
        if let Some(axis) = cells_per_dim.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "cells_per_dim[{axis}] must be at least 1"
            )));
        }
        let k: usize = cells_per_dim.iter().product();
        let mut cells = Vec::with_capacity(k);
        let mut index = vec![0usize; cells_per_dim.len()];
        for _ in 0..k {
            let dims = space
                .dims()
                .iter()
                .zip(&index)
                .zip(cells_per_dim)
                .map(|((d, &i), &n)| {
                    let (lo, hi) = slice_bounds(d, i, n);
                    Dimension::new(d.name.clone(), lo, hi, d.unit.clone())
                })
                .collect();
            cells.push(BehaviorSpace::new(dims)?);
            // row-major increment
            for axis in (0..index.len()).rev() {
                index[axis] += 1;
                if index[axis] < cells_per_dim[axis] {
                    break;
                }
                index[axis] = 0;
            }
        }
        Ok(Self {
            parent: space.clone(),
            cells,
            cells_per_dim: cells_per_dim.to_vec(),
        })
    }

    pub fn parent(&self) -> &BehaviorSpace {
        &self.parent
    }

    pub fn cells(&self) -> &[BehaviorSpace] {
        &self.cells
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells_per_dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell holding `point` under the half-open convention, or
    /// `None` when the point is outside the parent box.
    pub fn locate(&self, point: &BehaviorState) -> Option<usize> {
        if !self.parent.contains(point) {
            return None;
        }
        let mut flat = 0;
        for (axis, (d, &n)) in self.parent.dims().iter().zip(&self.cells_per_dim).enumerate() {
            let v = point[axis];
            let w = d.width() / n as f64;
            let mut i = (((v - d.lower) / w).floor().max(0.0) as usize).min(n - 1);
            // Re-align with the exact slice bounds used for the cells.
            while i > 0 && v < slice_bounds(d, i, n).0 {
                i -= 1;
            }
            while i + 1 < n && v >= slice_bounds(d, i + 1, n).0 {
                i += 1;
            }
            flat = flat * n + i;
        }
        Some(flat)
    }

    /// Half-open membership of `point` in cell `k`.
    pub fn is_member(&self, k: usize, point: &BehaviorState) -> bool {
        let Some(cell) = self.cells.get(k) else {
            return false;
        };
        let mut rem = k;
        let mut last_on_axis = vec![false; self.cells_per_dim.len()];
        for axis in (0..self.cells_per_dim.len()).rev() {
            let n = self.cells_per_dim[axis];
            last_on_axis[axis] = rem % n == n - 1;
            rem /= n;
        }
        point.len() == cell.dim_count()
            && cell
                .dims()
                .iter()
                .zip(point.values())
                .zip(&last_on_axis)
                .all(|((d, &v), &last)| d.lower <= v && (v < d.upper || (last && v <= d.upper)))
    }

    /// One hypothesis per cell, all sharing `policy`.
    pub fn hypotheses<P>(&self, policy: Arc<P>) -> Vec<Hypothesis<P>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(k, cell)| Hypothesis::new(k, cell.clone(), Arc::clone(&policy)))
            .collect()
    }
}

fn slice_bounds(d: &Dimension, i: usize, n: usize) -> (f64, f64) {
    let w = d.width() / n as f64;
    let lo = if i == 0 { d.lower } else { d.lower + i as f64 * w };
    let hi = if i + 1 == n {
        d.upper
    } else {
        d.lower + (i + 1) as f64 * w
    };
    (lo, hi)
}

/// Deterministic map from (history, acting agent, behavior state) to an action.
///
/// `S` is whatever the domain uses as its observable history; both worlds in
/// this crate carry the last actions in their state, so the current world
/// state is a sufficient history.
pub trait HypotheticalPolicy<S: ?Sized>: Send + Sync {
    fn act(&self, history: &S, agent: AgentId, beta: &BehaviorState)
        -> Result<f64, DomainError>;
}

impl<S: ?Sized, F> HypotheticalPolicy<S> for F
where
    F: Fn(&S, AgentId, &BehaviorState) -> Result<f64, DomainError> + Send + Sync,
{
    fn act(&self, history: &S, agent: AgentId, beta: &BehaviorState) -> Result<f64, DomainError> {
        self(history, agent, beta)
    }
}

/// One partition cell plus the shared policy. `id` is the 0-based cell index.
#[derive(Debug)]
pub struct Hypothesis<P> {
    id: usize,
    cell: BehaviorSpace,
    policy: Arc<P>,
}

impl<P> Clone for Hypothesis<P> {
    fn clone(&self) -> Self {
        Self {
            id: self.id,
            cell: self.cell.clone(),
            policy: Arc::clone(&self.policy),
        }
    }
}

impl<P> Hypothesis<P> {
    pub fn new(id: usize, cell: BehaviorSpace, policy: Arc<P>) -> Self {
        Self { id, cell, policy }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn cell(&self) -> &BehaviorSpace {
        &self.cell
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    /// Draws `β ~ U(cell)` and evaluates the policy.
    pub fn sample_action<S, R>(&self, history: &S, agent: AgentId, rng: &mut R) -> Result<f64, DomainError>
    where
        S: ?Sized,
        P: HypotheticalPolicy<S>,
        R: Rng + ?Sized,
    {
        let beta = self.cell.sample(rng);
        self.policy.act(history, agent, &beta)
    }

    /// Monte-Carlo estimate of the probability mass the hypothesis puts in
    /// the `tolerance` ball around `observed`.
    ///
    /// The value is unnormalised across hypotheses; it is only meaningful
    /// relative to other hypotheses evaluated with the same tolerance.
    pub fn action_likelihood<S, R>(
        &self,
        history: &S,
        agent: AgentId,
        observed: f64,
        m_samples: usize,
        tolerance: f64,
        rng: &mut R,
    ) -> Result<f64>
    where
        S: ?Sized,
        P: HypotheticalPolicy<S>,
        R: Rng + ?Sized,
    {
        if m_samples == 0 {
            return Err(Error::invalid("m_samples must be at least 1"));
        }
        if !(tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let mut hits = 0usize;
        for _ in 0..m_samples {
            let a = self.sample_action(history, agent, rng)?;
            if (a - observed).abs() <= tolerance {
                hits += 1;
            }
        }
        Ok(hits as f64 / m_samples as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity() -> Arc<impl HypotheticalPolicy<()>> {
        Arc::new(|_: &(), _: AgentId, b: &BehaviorState| Ok(b[0]))
    }

    #[test]
    fn rejects_degenerate_and_empty_spaces() {
        assert!(BehaviorSpace::interval("x", 1.0, 1.0).is_err());
        assert!(BehaviorSpace::interval("x", 2.0, 1.0).is_err());
        assert!(BehaviorSpace::new(vec![]).is_err());
        assert!(BehaviorSpace::interval("x", f64::NEG_INFINITY, 1.0).is_err());
    }

    #[test]
    fn bisection_and_identity_partitions() {
        let space = BehaviorSpace::interval("gap", -10.0, 10.0).unwrap();
        let p = Partition::equal(&space, &[2]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!((p.cells()[0].lower(0), p.cells()[0].upper(0)), (-10.0, 0.0));
        assert_eq!((p.cells()[1].lower(0), p.cells()[1].upper(0)), (0.0, 10.0));
        assert_eq!(p.locate(&BehaviorState::scalar(0.0)), Some(1));
        assert_eq!(p.locate(&BehaviorState::scalar(10.0)), Some(1));
        assert_eq!(p.locate(&BehaviorState::scalar(-10.0)), Some(0));
        assert_eq!(p.locate(&BehaviorState::scalar(10.5)), None);

        let one = Partition::equal(&space, &[1]).unwrap();
        assert_eq!(one.cells(), &[space.clone()]);
    }

    #[test]
    fn sixteen_cells_have_width_one_and_a_quarter() {
        let space = BehaviorSpace::interval("gap", -10.0, 10.0).unwrap();
        let p = Partition::equal(&space, &[16]).unwrap();
        assert_eq!(p.len(), 16);
        for c in p.cells() {
            assert!((c.volume() - 20.0 / 16.0).abs() < 1e-12);
        }
        assert_eq!(p.cells()[15].upper(0), 10.0);
    }

    #[test]
    fn dimension_mismatch_and_zero_counts_are_rejected() {
        let space = BehaviorSpace::interval("gap", -10.0, 10.0).unwrap();
        assert!(matches!(
            Partition::equal(&space, &[2, 2]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Partition::equal(&space, &[0]).is_err());
    }

    #[test]
    fn two_dimensional_partition_is_row_major() {
        let space = BehaviorSpace::new(vec![
            Dimension::new("a", 0.0, 2.0, ""),
            Dimension::new("b", 0.0, 3.0, ""),
        ])
        .unwrap();
        let p = Partition::equal(&space, &[2, 3]).unwrap();
        assert_eq!(p.len(), 6);
        // cell 4 = (a-slice 1, b-slice 1)
        assert_eq!(p.cells()[4].lower(0), 1.0);
        assert_eq!(p.cells()[4].lower(1), 1.0);
        assert_eq!(p.locate(&BehaviorState::new(&[1.5, 1.5])), Some(4));
        assert!(p.is_member(5, &BehaviorState::new(&[2.0, 3.0])));
        assert!(!p.is_member(4, &BehaviorState::new(&[1.5, 2.0])));
    }

    #[test]
    fn sampling_is_contained_and_reproducible() {
        let tiny = BehaviorSpace::interval("x", 0.0, f64::EPSILON).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(tiny.contains(&tiny.sample(&mut rng)));
        }
        let space = BehaviorSpace::interval("x", -5.0, 5.0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| space.sample(&mut rng)[0]).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn uniform_mean_within_clt_bound() {
        let space = BehaviorSpace::interval("x", -5.0, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| space.sample(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn near_point_cell_acts_like_its_center() {
        let cell = BehaviorSpace::interval("x", 3.0, 3.0 + 1e-9).unwrap();
        let h = Hypothesis::new(0, cell, identity());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let a = h.sample_action(&(), AgentId(0), &mut rng).unwrap();
            assert!((a - 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn wide_cell_yields_distinct_actions_for_injective_policy() {
        let cell = BehaviorSpace::interval("x", 0.0, 5.0).unwrap();
        let h = Hypothesis::new(0, cell, identity());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = h.sample_action(&(), AgentId(0), &mut rng).unwrap();
        let b = h.sample_action(&(), AgentId(0), &mut rng).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn likelihood_of_constant_and_unreachable_actions() {
        let constant = Arc::new(|_: &(), _: AgentId, _: &BehaviorState| Ok(1.5));
        let cell = BehaviorSpace::interval("x", 0.0, 5.0).unwrap();
        let h = Hypothesis::new(0, cell.clone(), constant);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(h.action_likelihood(&(), AgentId(0), 1.5, 100, 0.1, &mut rng).unwrap(), 1.0);
        let h = Hypothesis::new(0, cell, identity());
        assert_eq!(h.action_likelihood(&(), AgentId(0), 40.0, 100, 0.5, &mut rng).unwrap(), 0.0);
        assert!(h.action_likelihood(&(), AgentId(0), 1.0, 0, 0.5, &mut rng).is_err());
        assert!(h.action_likelihood(&(), AgentId(0), 1.0, 10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn policy_errors_propagate() {
        let failing = Arc::new(|_: &(), _: AgentId, _: &BehaviorState| {
            Err(DomainError::Other("boom".into()))
        });
        let h = Hypothesis::new(0, BehaviorSpace::interval("x", 0.0, 1.0).unwrap(), failing);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(h.sample_action(&(), AgentId(0), &mut rng).is_err());
    }

    #[test]
    fn space_deserialization_validates() {
        let ok: BehaviorSpace =
            serde_json::from_str(r#"{"dims":[{"name":"gap","lower":-1,"upper":1}]}"#).unwrap();
        assert_eq!(ok.dim_count(), 1);
        assert!(serde_json::from_str::<BehaviorSpace>(
            r#"{"dims":[{"name":"gap","lower":1,"upper":1}]}"#
        )
        .is_err());
    }
}
