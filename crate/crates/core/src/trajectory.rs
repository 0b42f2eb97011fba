use crate::error::{Error, Result};
use crate::scalar::Real;

/// Time series of states produced by a solver.
#[derive(Debug, Clone)]
pub struct Trajectory<T, S> {
    times: Vec<T>,
    states: Vec<S>,
    /// Solver name and step size, for reports.
    pub solver: String,
    pub step: T,
}

impl<T: Real, S> Trajectory<T, S> {
    /// Starts a trajectory at `t = 0`.
    pub fn new(initial: S, solver: impl Into<String>, step: T) -> Self {
        Self {
            times: vec![T::zero()],
            states: vec![initial],
            solver: solver.into(),
            step,
        }
    }

    /// Builds a trajectory from parallel arrays; times must start at zero and
    /// increase strictly.
    pub fn from_parts(times: Vec<T>, states: Vec<S>, solver: impl Into<String>, step: T) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        if times[0] != T::zero() {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "trajectory must start at t = 0".into(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "times must increase strictly".into(),
            });
        }
        Ok(Self {
            times,
            states,
            solver: solver.into(),
            step,
        })
    }

    pub fn push(&mut self, t: T, state: S) {
        debug_assert!(t > *self.times.last().unwrap());
        self.times.push(t);
        self.states.push(state);
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (&T, &S) {
        (self.times.last().unwrap(), self.states.last().unwrap())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &S)> {
        self.times.iter().zip(&self.states)
    }
}
