use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    TopDown,
    BottomUp,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::TopDown => "td",
            Direction::BottomUp => "bu",
        })
    }
}

/// Search mode: fixed direction, or per-level choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "td")]
    TopDown,
    #[serde(rename = "bu")]
    BottomUp,
    #[serde(rename = "dir")]
    DirectionOptimizing,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::TopDown, Mode::BottomUp, Mode::DirectionOptimizing];

    pub fn initial_direction(self) -> Direction {
        match self {
            Mode::BottomUp => Direction::BottomUp,
            _ => Direction::TopDown,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::TopDown => "td",
            Mode::BottomUp => "bu",
            Mode::DirectionOptimizing => "dir",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "td" => Ok(Mode::TopDown),
            "bu" => Ok(Mode::BottomUp),
            "dir" => Ok(Mode::DirectionOptimizing),
            other => Err(format!("unknown mode `{other}` (expected td|bu|dir)")),
        }
    }
}

/// Switching thresholds. Go bottom-up when `m_f > m_u / alpha`, back
/// top-down when `n_f < n / beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            alpha: 14.0,
            beta: 24.0,
        }
    }
}

/// Globally reduced frontier figures for one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrontierSummary {
    /// Vertices in the frontier.
    pub n_f: u64,
    /// Edges leaving the frontier.
    pub m_f: u64,
    /// Edges leaving still unvisited vertices.
    pub m_u: u64,
    /// Vertex count of the graph.
    pub n: u64,
}

pub fn choose_direction(current: Direction, f: &FrontierSummary, params: &HeuristicParams) -> Direction {
    match current {
        Direction::TopDown if f.m_f as f64 > f.m_u as f64 / params.alpha => Direction::BottomUp,
        Direction::BottomUp if (f.n_f as f64) < f.n as f64 / params.beta => Direction::TopDown,
        d => d,
    }
}
