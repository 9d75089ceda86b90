//! Time grids shared by the samplers and the propagators.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("time grid needs at least two points, got {0}")]
    TooShort(usize),
    #[error("time grid must be strictly increasing at index {0}")]
    NotIncreasing(usize),
}

/// Strictly increasing grid of sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self, GridError> {
        if times.len() < 2 {
            return Err(GridError::TooShort(times.len()));
        }
        for k in 1..times.len() {
            if times[k] <= times[k - 1] {
                return Err(GridError::NotIncreasing(k));
            }
        }
        Ok(Self { times })
    }

    /// Uniform grid of `n_steps` intervals on `[0, t_max]` (so `n_steps + 1` points).
    pub fn uniform(t_max: f64, n_steps: usize) -> Result<Self, GridError> {
        if n_steps == 0 || !(t_max > 0.0) {
            return Err(GridError::TooShort(n_steps));
        }
        let dt = t_max / n_steps as f64;
        let times = (0..=n_steps).map(|k| k as f64 * dt).collect();
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }
}
