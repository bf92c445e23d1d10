use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three Bay Area airports whose traffic is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Airport {
    #[serde(rename = "SFO")]
    Sfo,
    #[serde(rename = "OAK")]
    Oak,
    #[serde(rename = "SJC")]
    Sjc,
}

impl Airport {
    pub const ALL: [Airport; 3] = [Airport::Sfo, Airport::Oak, Airport::Sjc];

    pub fn code(self) -> &'static str {
        match self {
            Airport::Sfo => "SFO",
            Airport::Oak => "OAK",
            Airport::Sjc => "SJC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: &str) -> Option<Airport> {
        match code.trim() {
            "SFO" | "KSFO" => Some(Airport::Sfo),
            "OAK" | "KOAK" => Some(Airport::Oak),
            "SJC" | "KSJC" => Some(Airport::Sjc),
            _ => None,
        }
    }
}

impl fmt::Display for Airport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Airport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Airport::from_code(s).ok_or_else(|| format!("unknown airport `{s}`"))
    }
}

/// Wake-turbulence category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightClass {
    Small,
    Large,
    Heavy,
}

impl WeightClass {
    pub const ALL: [WeightClass; 3] = [WeightClass::Small, WeightClass::Large, WeightClass::Heavy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightClass::Small => "small",
            WeightClass::Large => "large",
            WeightClass::Heavy => "heavy",
        }
    }
}

impl FromStr for WeightClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" | "s" => Ok(WeightClass::Small),
            "large" | "l" => Ok(WeightClass::Large),
            "heavy" | "h" => Ok(WeightClass::Heavy),
            other => Err(format!("unknown weight class `{other}`")),
        }
    }
}
