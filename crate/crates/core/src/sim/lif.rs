//! Discrete leaky integrate-and-fire neurons on an 8-bit state.
//!
//! The leak `beta` is applied as a fixed-point multiply with 8 fractional
//! bits (`beta_q = round(beta * 256)`), rounding half away from zero. All
//! state arithmetic saturates to `[-128, 127]`. A neuron fires when the
//! updated potential is `>= theta`.

use crate::error::{Error, Result};
use crate::network::{NeuronParams, ResetMode};

/// What a single neuron update did, for operation counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub spike: bool,
    /// A threshold subtraction was performed during this update.
    pub subtracted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifState {
    v: Vec<i8>,
    /// Spike emitted on the previous step; only read in deferred mode.
    fired: Vec<bool>,
    params: NeuronParams,
    beta_q: i32,
}

fn sat8(x: i64) -> i8 {
    x.clamp(i8::MIN.into(), i8::MAX.into()) as i8
}

/// `round(v * beta_q / 256)`, halves away from zero.
fn decay(v: i8, beta_q: i32) -> i32 {
    let p = i32::from(v) * beta_q;
    if p >= 0 {
        (p + 128) >> 8
    } else {
        -((-p + 128) >> 8)
    }
}

impl LifState {
    pub fn new(n: usize, params: NeuronParams) -> Result<Self> {
        params.validate()?;
        Ok(LifState { v: vec![0; n], fired: vec![false; n], params, beta_q: (params.beta * 256.0).round() as i32 })
    }

    pub fn with_potentials(v: Vec<i8>, params: NeuronParams) -> Result<Self> {
        let mut s = Self::new(v.len(), params)?;
        s.v = v;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn potentials(&self) -> &[i8] {
        &self.v
    }

    /// Spikes of the previous step, pending subtraction in deferred mode.
    pub fn fired(&self) -> &[bool] {
        &self.fired
    }

    pub fn params(&self) -> &NeuronParams {
        &self.params
    }

    /// Updates neuron `i` with synaptic current `current`.
    pub fn step_neuron(&mut self, i: usize, current: i64) -> StepOutcome {
        let theta = i64::from(self.params.theta);
        let leaked = i64::from(decay(self.v[i], self.beta_q));
        match self.params.reset_mode {
            ResetMode::ImmediateSubtract => {
                let m = sat8(leaked + current);
                let spike = i64::from(m) >= theta;
                // m >= theta > 0, so the subtraction stays in range
                self.v[i] = if spike { m - theta as i8 } else { m };
                StepOutcome { spike, subtracted: spike }
            }
            ResetMode::DeferredSubtract => {
                let pending = self.fired[i];
                let reset = if pending { theta } else { 0 };
                let m = sat8(leaked + current - reset);
                let spike = i64::from(m) >= theta;
                self.v[i] = m;
                self.fired[i] = spike;
                StepOutcome { spike, subtracted: pending }
            }
        }
    }

    /// Advances every neuron by one step; returns the 0/1 spike vector.
    pub fn step(&mut self, currents: &[i64]) -> Result<Vec<i8>> {
        if currents.len() != self.v.len() {
            return Err(Error::dim(format!("{} currents for {} neurons", currents.len(), self.v.len())));
        }
        Ok(currents.iter().enumerate().map(|(i, &u)| i8::from(self.step_neuron(i, u).spike)).collect())
    }
}

/// One update of a whole population.
pub fn lif_step(state: &mut LifState, input_current: &[i64]) -> Result<Vec<i8>> {
    state.step(input_current)
}
