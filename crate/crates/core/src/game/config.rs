use serde::{Deserialize, Serialize};

use super::map::{generate_map, MapKind};
use super::types::Cell;
use crate::error::{GsgiError, Result};

/// Largest supported grid, in cells. Footprint grids are fixed-size arrays.
pub const MAX_CELLS: usize = 100;

/// A reward that is either the same on every cell or given per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValues {
    Constant(f64),
    Grid(Vec<Vec<f64>>),
}

impl CellValues {
    pub fn at(&self, cell: Cell) -> f64 {
        match self {
            CellValues::Constant(v) => *v,
            CellValues::Grid(g) => g[cell.row][cell.col],
        }
    }

    fn check(&self, rows: usize, cols: usize, name: &str, ok: impl Fn(f64) -> bool) -> Result<()> {
        match self {
            CellValues::Constant(v) => {
                if !ok(*v) {
                    return Err(GsgiError::Config(format!("{name} = {v} out of range")));
                }
            }
            CellValues::Grid(g) => {
                if g.len() != rows || g.iter().any(|r| r.len() != cols) {
                    return Err(GsgiError::Config(format!("{name} grid must be {rows}x{cols}")));
                }
                if let Some(v) = g.iter().flatten().find(|v| !ok(**v)) {
                    return Err(GsgiError::Config(format!("{name} entry {v} out of range")));
                }
            }
        }
        Ok(())
    }
}

/// Zero-sum reward scheme, from the defender's point of view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardScheme {
    pub r_tool: CellValues,
    pub r_catch: f64,
    pub p_attack: CellValues,
}

impl Default for RewardScheme {
    fn default() -> Self {
        RewardScheme {
            r_tool: CellValues::Constant(2.0),
            r_catch: 8.0,
            p_attack: CellValues::Constant(-4.0),
        }
    }
}

fn default_trigger_scale() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    rows: usize,
    cols: usize,
    success_map: Vec<Vec<f64>>,
    #[serde(default = "default_trigger_scale")]
    trigger_scale: f64,
    entry_points: Vec<Cell>,
    patrol_post: Cell,
    horizon: u32,
    num_tools: u32,
    #[serde(default)]
    rewards: RewardScheme,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_true")]
    attacker_returns_home: bool,
}

/// Immutable game definition. Construct with [`GameConfig::new`] or by
/// deserializing; both paths validate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct GameConfig {
    rows: usize,
    cols: usize,
    success: Vec<f64>,
    pub trigger_scale: f64,
    pub entry_points: Vec<Cell>,
    pub patrol_post: Cell,
    pub horizon: u32,
    pub num_tools: u32,
    pub rewards: RewardScheme,
    pub seed: u64,
    /// An attacker with no tools left who stands on his entry cell leaves the game.
    pub attacker_returns_home: bool,
}

impl TryFrom<RawConfig> for GameConfig {
    type Error = GsgiError;

    fn try_from(raw: RawConfig) -> Result<Self> {
        if raw.success_map.len() != raw.rows || raw.success_map.iter().any(|r| r.len() != raw.cols) {
            return Err(GsgiError::Config(format!(
                "success_map must be {}x{}",
                raw.rows, raw.cols
            )));
        }
        let cfg = GameConfig {
            rows: raw.rows,
            cols: raw.cols,
            success: raw.success_map.into_iter().flatten().collect(),
            trigger_scale: raw.trigger_scale,
            entry_points: raw.entry_points,
            patrol_post: raw.patrol_post,
            horizon: raw.horizon,
            num_tools: raw.num_tools,
            rewards: raw.rewards,
            seed: raw.seed,
            attacker_returns_home: raw.attacker_returns_home,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<GameConfig> for RawConfig {
    fn from(c: GameConfig) -> Self {
        RawConfig {
            success_map: c.success.chunks(c.cols).map(|r| r.to_vec()).collect(),
            rows: c.rows,
            cols: c.cols,
            trigger_scale: c.trigger_scale,
            entry_points: c.entry_points,
            patrol_post: c.patrol_post,
            horizon: c.horizon,
            num_tools: c.num_tools,
            rewards: c.rewards,
            seed: c.seed,
            attacker_returns_home: c.attacker_returns_home,
        }
    }
}

impl GameConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rows: usize,
        cols: usize,
        success_map: Vec<f64>,
        entry_points: Vec<Cell>,
        patrol_post: Cell,
        horizon: u32,
        num_tools: u32,
        seed: u64,
    ) -> Result<Self> {
        let cfg = GameConfig {
            rows,
            cols,
            success: success_map,
            trigger_scale: default_trigger_scale(),
            entry_points,
            patrol_post,
            horizon,
            num_tools,
            rewards: RewardScheme::default(),
            seed,
            attacker_returns_home: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Square grid with the attacker entering from the four corners and the
    /// patrol post in the middle. Horizon and tool count follow the grid size
    /// (3: 4 steps/3 tools, 5: 25/6, 7: 75/6; other sizes scale as 1.5 n^2).
    pub fn preset(size: usize, kind: MapKind, seed: u64) -> Result<Self> {
        let corners = corner_cells(size, size);
        let (horizon, tools) = match size {
            3 => (4, 3),
            5 => (25, 6),
            7 => (75, 6),
            n => ((3 * n * n / 2) as u32, 6),
        };
        let map = generate_map(kind, size, size, &corners, seed)?;
        GameConfig::new(
            size,
            size,
            map,
            corners,
            Cell::new(size / 2, size / 2),
            horizon,
            tools,
            seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(GsgiError::Config("grid must be nonempty".into()));
        }
        if self.rows * self.cols > MAX_CELLS {
            return Err(GsgiError::Config(format!(
                "grid {}x{} exceeds {MAX_CELLS} cells",
                self.rows, self.cols
            )));
        }
        if self.success.len() != self.rows * self.cols {
            return Err(GsgiError::Config("success_map has wrong size".into()));
        }
        if let Some(p) = self.success.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(GsgiError::Config(format!("success probability {p} not in [0,1]")));
        }
        if !(self.trigger_scale > 0.0 && self.trigger_scale <= 1.0) {
            return Err(GsgiError::Config("trigger_scale must be in (0,1]".into()));
        }
        if self.entry_points.is_empty() {
            return Err(GsgiError::Config("entry_points must be nonempty".into()));
        }
        for c in self.entry_points.iter().chain(std::iter::once(&self.patrol_post)) {
            if !self.contains(*c) {
                return Err(GsgiError::Config(format!("cell {c} is off the grid")));
            }
        }
        if self.horizon == 0 {
            return Err(GsgiError::Config("horizon must be at least 1".into()));
        }
        let r = &self.rewards;
        r.r_tool.check(self.rows, self.cols, "r_tool", |v| v > 0.0)?;
        r.p_attack.check(self.rows, self.cols, "p_attack", |v| v < 0.0)?;
        if !(r.r_catch > 0.0) {
            return Err(GsgiError::Config("r_catch must be positive".into()));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    pub fn success_map(&self) -> &[f64] {
        &self.success
    }

    pub fn success(&self, c: Cell) -> f64 {
        self.success[self.index(c)]
    }

    /// Per-step trigger probability of one tool at `c`.
    pub fn trigger_probability(&self, c: Cell) -> f64 {
        (self.trigger_scale * self.success(c)).clamp(0.0, 1.0)
    }

    /// Same game with the attacker's entry fixed (a local mode).
    pub fn with_entry(&self, entry: Cell) -> Result<Self> {
        let mut c = self.clone();
        c.entry_points = vec![entry];
        c.validate()?;
        Ok(c)
    }

    pub fn with_success_map(&self, map: Vec<f64>) -> Result<Self> {
        let mut c = self.clone();
        c.success = map;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| GsgiError::Config(e.to_string()))
    }
}

pub fn corner_cells(rows: usize, cols: usize) -> Vec<Cell> {
    let mut v = vec![
        Cell::new(0, 0),
        Cell::new(0, cols - 1),
        Cell::new(rows - 1, 0),
        Cell::new(rows - 1, cols - 1),
    ];
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_preserves_config() {
        let cfg = GameConfig::preset(5, MapKind::GaussianMixture, 3).unwrap();
        let back = GameConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_off_grid_entry() {
        let r = GameConfig::new(2, 2, vec![0.5; 4], vec![Cell::new(2, 0)], Cell::new(0, 0), 3, 1, 0);
        assert!(matches!(r, Err(GsgiError::Config(_))));
    }

    #[test]
    fn rejects_bad_probabilities_and_horizon() {
        assert!(GameConfig::new(2, 2, vec![1.5; 4], vec![Cell::new(0, 0)], Cell::new(0, 0), 3, 1, 0).is_err());
        assert!(GameConfig::new(2, 2, vec![0.5; 4], vec![Cell::new(0, 0)], Cell::new(0, 0), 0, 1, 0).is_err());
    }

    #[test]
    fn rejects_wrong_sign_rewards() {
        let json = r#"{"rows":2,"cols":2,"success_map":[[0.1,0.2],[0.3,0.4]],
            "entry_points":[{"row":0,"col":0}],"patrol_post":{"row":1,"col":1},
            "horizon":3,"num_tools":1,
            "rewards":{"r_tool":2.0,"r_catch":8.0,"p_attack":4.0}}"#;
        assert!(GameConfig::from_json(json).is_err());
        let ok = json.replace("\"p_attack\":4.0", "\"p_attack\":[[-1,-2],[-3,-4]]");
        let cfg = GameConfig::from_json(&ok).unwrap();
        assert_eq!(cfg.rewards.p_attack.at(Cell::new(1, 0)), -3.0);
        assert_eq!(cfg.trigger_scale, 0.1);
    }
}
