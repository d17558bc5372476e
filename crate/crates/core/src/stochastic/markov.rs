//! Exact sampling of continuous-time Markov chain paths.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Independent stream `path_id` of the root seed.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

/// Piecewise-constant chain path on `[0, horizon]`; states are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChainPath {
    pub horizon: f64,
    /// Increasing jump times in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// `states[0]` is the initial state, `states[i]` holds after `jump_times[i - 1]`.
    pub states: Vec<usize>,
}

impl MarkovChainPath {
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Right-continuous state at `t`.
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s <= t)]
    }

    /// Left-limit state at `t`.
    pub fn state_before(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s < t)]
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().unwrap()
    }
}

/// Gillespie sampling: exponential holding times with rate `-q_ii`, next state
/// drawn with probabilities `q_ij / -q_ii`. States with `q_ii = 0` are absorbing.
pub fn sample_chain<R: Rng + ?Sized>(q: &Mat, initial: usize, horizon: f64, rng: &mut R) -> Result<MarkovChainPath> {
    let m = q.nrows();
    if initial >= m {
        return Err(Error::input("initial_state", format!("state {} outside 1..={m}", initial + 1)));
    }
    let mut t = 0.0;
    let mut state = initial;
    let mut path = MarkovChainPath {
        horizon,
        jump_times: Vec::new(),
        states: vec![initial],
    };
    loop {
        let rate = -q[(state, state)];
        if rate <= 0.0 {
            return Ok(path);
        }
        let hold: f64 = Exp::new(rate)
            .map_err(|e| Error::input("Q", e.to_string()))?
            .sample(rng);
        t += hold;
        if t > horizon {
            return Ok(path);
        }
        let weights: Vec<f64> = (0..m).map(|j| if j == state { 0.0 } else { q[(state, j)].max(0.0) }).collect();
        state = WeightedIndex::new(&weights)
            .map_err(|e| Error::input("Q", e.to_string()))?
            .sample(rng);
        path.jump_times.push(t);
        path.states.push(state);
    }
}
