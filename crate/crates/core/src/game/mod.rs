//! The grid-world simulator.

pub mod config;
pub mod footprint;
pub mod map;
pub mod observation;
pub mod rollout;
pub mod state;
pub mod types;

pub use config::{corner_cells, CellValues, GameConfig, RewardScheme, MAX_CELLS};
pub use footprint::FootprintGrid;
pub use map::{generate_map, MapKind, LOW_SUCCESS};
pub use observation::{
    encode_state, Observation, StateTensor, CH_OPPONENT, CH_OWN, CH_POSITION, CH_SUCCESS, CH_TIME, NUM_CHANNELS,
};
pub use rollout::{play_episode, rollout_episode, sample_entry, write_replay_jsonl, Episode};
pub use state::{destination, GameState, PendingStep, StepEvents, Tools};
pub use types::{AttackerAction, Cell, Move, Side};
