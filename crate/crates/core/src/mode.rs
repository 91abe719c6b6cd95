use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Travel modes available to agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Car,
    Pt,
    Walk,
    Sav,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Car, Mode::Pt, Mode::Walk, Mode::Sav];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Car => "car",
            Mode::Pt => "pt",
            Mode::Walk => "walk",
            Mode::Sav => "sav",
        }
    }

    /// Modes simulated on the road network rather than teleported.
    pub fn is_network(self) -> bool {
        matches!(self, Mode::Car | Mode::Sav)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown mode '{0}'")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "car" => Ok(Mode::Car),
            "pt" => Ok(Mode::Pt),
            "walk" => Ok(Mode::Walk),
            "sav" => Ok(Mode::Sav),
            other => Err(UnknownMode(other.to_string())),
        }
    }
}
