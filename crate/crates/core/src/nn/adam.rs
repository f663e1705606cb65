use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

/// Adam optimizer state for one network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Self::new(DEFAULT_LEARNING_RATE)
    }
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            steps: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update from the network's gradient slots, then zeroes them.
    pub fn step(&mut self, net: &mut Network) -> Result<()> {
        if !net.grads_ready() {
            return Err(Error::Usage(
                "optimizer step requested before backward".into(),
            ));
        }
        if self.first_moment.is_empty() {
            for (params, _) in net.slots() {
                self.first_moment.push(vec![0.0; params.len()]);
                self.second_moment.push(vec![0.0; params.len()]);
            }
        }
        self.steps += 1;
        let t = self.steps as i32;
        let step_size =
            self.learning_rate * (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for (((params, grads), m), v) in net
            .slots()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            if params.len() != m.len() {
                return Err(Error::Usage(
                    "optimizer state does not match the network".into(),
                ));
            }
            for (((p, &g), mi), vi) in params.iter_mut().zip(grads.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (1.0 - b1) * g;
                *vi = b2 * *vi + (1.0 - b2) * g * g;
                *p -= step_size * *mi / (vi.sqrt() + eps);
            }
        }
        net.mark_stepped();
        Ok(())
    }
}
