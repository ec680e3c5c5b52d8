//! Tabulated form of a finite-state family: state indices, a distance matrix
//! and one image table per time step.

use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::space::{Point, SpaceKind, StateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteView {
    pub states: Vec<Point>,
    pub dist: Vec<Vec<f64>>,
    /// `tables[t][s]` is the index of `f_t(states[s])`.
    pub tables: Vec<Vec<usize>>,
}

/// Position of `p` in the canonical enumeration of a finite space.
pub fn index_of(space: &StateSpace, p: &Point) -> Result<usize> {
    match (&space.kind, p) {
        (SpaceKind::Finite { distances }, Point::State { state }) if *state < distances.len() => Ok(*state),
        (SpaceKind::Product { left, right }, Point::Pair(a, b)) => {
            let width = right.finite_len().ok_or_else(|| not_finite(space))?;
            Ok(index_of(left, a)? * width + index_of(right, b)?)
        }
        _ => Err(ShadowError::PointOutsideSpace { point: p.to_string(), space: space.description.clone() }),
    }
}

fn not_finite(space: &StateSpace) -> ShadowError {
    ShadowError::OracleUnavailable(format!("{} is not finite", space.description))
}

impl FiniteView {
    /// Tables for `f_0, …, f_{steps-1}`; the family must act on one finite space.
    pub fn new(family: &MapFamily, steps: usize) -> Result<Self> {
        if !family.is_constant_space() {
            return Err(ShadowError::NonConstantSpaces);
        }
        let space = family.space_at(0)?;
        let states = space.enumerate().ok_or_else(|| not_finite(space))?;
        let dist = states
            .iter()
            .map(|a| states.iter().map(|b| space.distance(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let tables = (0..steps)
            .map(|t| states.iter().map(|s| index_of(space, &family.evaluate(t, s)?)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { states, dist, tables })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.tables.len()
    }

    /// `F_0(s), …, F_n(s)` as indices.
    pub fn orbit(&self, s: usize, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(s);
        for t in 0..n {
            out.push(self.tables[t][out[t]]);
        }
        out
    }

    pub fn points(&self, path: &[usize]) -> Vec<Point> {
        path.iter().map(|&i| self.states[i].clone()).collect()
    }
}
