use serde::{Deserialize, Serialize};

use crate::error::{GsgiError, Result};

/// Which learner to train.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Single Q head, max over the target network.
    Vanilla,
    /// Single Q head, double-DQN targets.
    VanillaDouble,
    /// Dueling head, double-DQN targets.
    DuelingDouble,
    /// Softmax policy with a separate value network.
    ActorCritic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay: f64,
    pub every: usize,
    pub floor: f64,
}

impl EpsilonSchedule {
    /// Exploration rate used during `episode` (0-based).
    pub fn at(&self, episode: usize) -> f64 {
        let steps = (episode / self.every.max(1)) as f64;
        (self.start - self.decay * steps).max(self.floor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub lr: f64,
    pub gamma: f64,
    pub batch: usize,
    pub target_update_steps: u64,
    pub episodes: usize,
    pub epsilon: EpsilonSchedule,
    pub buffer_capacity: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Learning-curve resolution in episodes.
    pub curve_every: usize,
    /// Value-network learning rate for the actor-critic variant.
    #[serde(default = "default_value_lr")]
    pub value_lr: f64,
}

fn default_value_lr() -> f64 {
    1e-3
}

impl TrainingConfig {
    /// Budgets that finish in minutes on one core: 2e4 episodes on 3x3 and
    /// 5e4 on larger grids, with the exploration decay compressed to match.
    pub fn desk(grid_size: usize, seed: u64) -> Self {
        let (episodes, every, lr) = match grid_size {
            0..=3 => (20_000, 600, 5e-4),
            4..=5 => (50_000, 1_500, 2e-4),
            _ => (50_000, 1_500, 1e-4),
        };
        TrainingConfig {
            lr,
            gamma: 1.0,
            batch: 32,
            target_update_steps: 1000,
            episodes,
            epsilon: EpsilonSchedule {
                start: 1.0,
                decay: 0.05,
                every,
                floor: 0.1,
            },
            buffer_capacity: 50_000,
            variant: Variant::DuelingDouble,
            seed,
            curve_every: (episodes / 50).max(1),
            value_lr: default_value_lr(),
        }
    }

    /// Full-length budgets: 1e5 episodes with decay every 5000 on 3x3,
    /// 3e5 episodes with decay every 15000 on larger grids.
    pub fn paper(grid_size: usize, seed: u64) -> Self {
        let (episodes, every) = match grid_size {
            0..=3 => (100_000, 5_000),
            _ => (300_000, 15_000),
        };
        TrainingConfig {
            lr: 1e-4,
            gamma: 1.0,
            batch: 32,
            target_update_steps: 1000,
            episodes,
            epsilon: EpsilonSchedule {
                start: 1.0,
                decay: 0.05,
                every,
                floor: 0.1,
            },
            buffer_capacity: 200_000,
            variant: Variant::DuelingDouble,
            seed,
            curve_every: (episodes / 100).max(1),
            value_lr: default_value_lr(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilon;
        let ok = self.lr > 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && self.batch > 0
            && self.target_update_steps > 0
            && self.buffer_capacity >= self.batch
            && self.curve_every > 0
            && self.value_lr > 0.0
            && e.floor >= 0.1
            && e.start <= 1.0
            && e.start >= e.floor
            && e.decay >= 0.0;
        if !ok {
            return Err(GsgiError::Config(format!("invalid training config {self:?}")));
        }
        if self.episodes == 0 {
            return Err(GsgiError::Config("training budget is zero".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_reaches_floor_exactly() {
        let s = TrainingConfig::desk(3, 0).epsilon;
        assert_eq!(s.at(0), 1.0);
        assert!((s.at(600) - 0.95).abs() < 1e-12);
        for ep in [18 * 600, 19 * 600, 100_000] {
            assert_eq!(s.at(ep), 0.1);
        }
    }

    #[test]
    fn profiles_validate() {
        for g in [3, 5, 7] {
            TrainingConfig::desk(g, 0).validate().unwrap();
            TrainingConfig::paper(g, 0).validate().unwrap();
        }
        let mut c = TrainingConfig::desk(3, 0);
        c.episodes = 0;
        assert!(c.validate().is_err());
    }
}
