use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Activity types, one per trip purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActType {
    Home,
    Work,
    Study,
    Shop,
    Leisure,
    Errand,
    Escort,
    Eat,
}

impl ActType {
    pub const ALL: [ActType; 8] = [
        ActType::Home,
        ActType::Work,
        ActType::Study,
        ActType::Shop,
        ActType::Leisure,
        ActType::Errand,
        ActType::Escort,
        ActType::Eat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActType::Home => "home",
            ActType::Work => "work",
            ActType::Study => "study",
            ActType::Shop => "shop",
            ActType::Leisure => "leisure",
            ActType::Errand => "errand",
            ActType::Escort => "escort",
            ActType::Eat => "eat",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown activity type '{0}'")]
pub struct UnknownActType(pub String);

impl FromStr for ActType {
    type Err = UnknownActType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActType::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| UnknownActType(s.to_string()))
    }
}
