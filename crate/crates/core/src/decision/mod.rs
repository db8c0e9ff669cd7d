//! Tier escalation and the category × size action table.
//!
//! Perception reaches this module at one of three tiers of intelligence:
//!
//! 1. presence only (stripe cut off) – always [`Action::Stop`];
//! 2. presence plus height – [`SizeClass::Small`] continues, anything else
//!    stops;
//! 3. a classified object – looked up in the [`ActionTable`].
//!
//! A tier-3 event below the confidence threshold is decided as if it were the
//! tier-2 event carrying the same height. A `Human` category always stops.

mod engine;
mod table;
mod zones;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{
    aggregate, decide, events_from_perception, resolve_stop_or_reroute, write_log, Command, Decision,
    DecisionEngine, ReroutePolicy,
};
pub use table::{ActionTable, TableRow, DEFAULT_CONFIDENCE_THRESHOLD};
pub use zones::{Side, Zone, ZoneLayout};

/// Height boundary between small and large objects.
pub const LARGE_OBJECT_MM: f64 = 50.0;

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid action table: {0}")]
    Table(String),
    #[error("invalid zone layout: {0}")]
    Zone(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectCategory {
    Human,
    Tools,
    Materials,
    Parts,
    Vehicles,
    Environment,
    SafetyPpe,
    Unknown,
}

impl ObjectCategory {
    pub const ALL: [ObjectCategory; 8] = [
        Self::Human,
        Self::Tools,
        Self::Materials,
        Self::Parts,
        Self::Vehicles,
        Self::Environment,
        Self::SafetyPpe,
        Self::Unknown,
    ];

    /// Classes a detector can emit, in class-id order. `Unknown` is not one.
    pub const DETECTABLE: [ObjectCategory; 7] = [
        Self::Human,
        Self::Tools,
        Self::Materials,
        Self::Parts,
        Self::Vehicles,
        Self::Environment,
        Self::SafetyPpe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Human => "human",
            Self::Tools => "tools",
            Self::Materials => "materials",
            Self::Parts => "parts",
            Self::Vehicles => "vehicles",
            Self::Environment => "environment",
            Self::SafetyPpe => "safety_ppe",
            Self::Unknown => "unknown",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn class_id(self) -> Option<usize> {
        Self::DETECTABLE.iter().position(|&c| c == self)
    }

    pub fn from_class_id(id: usize) -> Option<Self> {
        Self::DETECTABLE.get(id).copied()
    }
}

impl fmt::Display for ObjectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 2] = [Self::Small, Self::Large];
}

pub fn classify_size(height_mm: f64) -> Result<SizeClass, DecisionError> {
    if !height_mm.is_finite() || height_mm < 0.0 {
        return Err(DecisionError::InvalidEvent(format!("height {height_mm} mm")));
    }
    Ok(if height_mm >= LARGE_OBJECT_MM {
        SizeClass::Large
    } else {
        SizeClass::Small
    })
}

/// Robot response, ordered by severity: `Continue < StopOrReroute < Stop`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Continue,
    StopOrReroute,
    Stop,
}

impl Action {
    pub const ALL: [Action; 3] = [Self::Continue, Self::StopOrReroute, Self::Stop];
}

/// One perception result for one zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub tier: u8,
    pub zone: char,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<ObjectCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub ts_ms: u64,
}

impl DetectionEvent {
    pub fn presence(zone: char, ts_ms: u64) -> Self {
        Self {
            tier: 1,
            zone,
            height_mm: None,
            category: None,
            confidence: None,
            ts_ms,
        }
    }

    pub fn sized(zone: char, height_mm: f64, ts_ms: u64) -> Self {
        Self {
            tier: 2,
            height_mm: Some(height_mm),
            ..Self::presence(zone, ts_ms)
        }
    }

    pub fn classified(
        zone: char,
        category: ObjectCategory,
        confidence: f64,
        height_mm: Option<f64>,
        ts_ms: u64,
    ) -> Self {
        Self {
            tier: 3,
            height_mm,
            category: Some(category),
            confidence: Some(confidence),
            ..Self::presence(zone, ts_ms)
        }
    }

    /// Checks that the fields each tier needs are present and in range.
    pub fn validate(&self) -> Result<(), DecisionError> {
        let bad = |m: String| Err(DecisionError::InvalidEvent(m));
        if !(1..=3).contains(&self.tier) {
            return bad(format!("tier {} not in 1..=3", self.tier));
        }
        if let Some(h) = self.height_mm {
            classify_size(h)?;
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return bad(format!("confidence {c} not in [0, 1]"));
            }
        }
        match self.tier {
            2 if self.height_mm.is_none() => bad("tier-2 event without height".into()),
            3 if self.category.is_none() || self.confidence.is_none() => {
                bad("tier-3 event needs category and confidence".into())
            }
            _ => Ok(()),
        }
    }

    pub fn size(&self) -> Option<SizeClass> {
        self.height_mm.and_then(|h| classify_size(h).ok())
    }
}
