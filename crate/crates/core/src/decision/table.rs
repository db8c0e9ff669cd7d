use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Action, DecisionError, ObjectCategory, SizeClass};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

const DEFAULT_TABLE: &str = include_str!("../../data/action_table.json");

/// One category row. `None` is a cell the table leaves undefined; it takes the
/// row's other cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub large: Option<Action>,
    pub small: Option<Action>,
}

impl TableRow {
    fn cell(&self, size: SizeClass) -> Option<Action> {
        let (own, other) = match size {
            SizeClass::Large => (self.large, self.small),
            SizeClass::Small => (self.small, self.large),
        };
        own.or(other)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ActionTable {
    pub confidence_threshold: f64,
    rows: BTreeMap<ObjectCategory, TableRow>,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default = "default_threshold")]
    confidence_threshold: f64,
    rows: BTreeMap<ObjectCategory, TableRow>,
}

fn default_threshold() -> f64 {
    DEFAULT_CONFIDENCE_THRESHOLD
}

impl TryFrom<RawTable> for ActionTable {
    type Error = DecisionError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        Self::new(raw.rows, raw.confidence_threshold)
    }
}

impl Default for ActionTable {
    fn default() -> Self {
        Self::from_json(DEFAULT_TABLE).expect("bundled action table is valid")
    }
}

impl ActionTable {
    /// Every category must have a row, every row at least one defined cell.
    pub fn new(
        rows: BTreeMap<ObjectCategory, TableRow>,
        confidence_threshold: f64,
    ) -> Result<Self, DecisionError> {
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(DecisionError::Table(format!(
                "confidence threshold {confidence_threshold} not in [0, 1]"
            )));
        }
        for cat in ObjectCategory::ALL {
            match rows.get(&cat) {
                None => return Err(DecisionError::Table(format!("missing row for {cat}"))),
                Some(TableRow {
                    large: None,
                    small: None,
                }) => return Err(DecisionError::Table(format!("row {cat} defines no action"))),
                Some(_) => {}
            }
        }
        Ok(Self {
            confidence_threshold,
            rows,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, DecisionError> {
        // serde_json wraps errors from `try_from`; unwrap them back into
        // table errors so callers see the validation message.
        serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                DecisionError::Table(e.to_string())
            } else {
                DecisionError::Json(e)
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, DecisionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn row(&self, cat: ObjectCategory) -> TableRow {
        self.rows[&cat]
    }

    pub fn lookup(&self, cat: ObjectCategory, size: SizeClass) -> Action {
        self.rows[&cat]
            .cell(size)
            .expect("validated rows define at least one cell")
    }

    pub fn with_threshold(mut self, confidence_threshold: f64) -> Result<Self, DecisionError> {
        let rows = std::mem::take(&mut self.rows);
        Self::new(rows, confidence_threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let t = ActionTable::default();
        assert_eq!(t.confidence_threshold, 0.5);
        assert_eq!(t.row(ObjectCategory::Human).small, None);
        assert_eq!(t.lookup(ObjectCategory::Human, SizeClass::Small), Action::Stop);
        assert_eq!(
            t.lookup(ObjectCategory::Vehicles, SizeClass::Small),
            Action::StopOrReroute
        );
    }

    #[test]
    fn json_round_trip() {
        let t = ActionTable::default();
        assert_eq!(ActionTable::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn missing_row_rejected() {
        let text = DEFAULT_TABLE.replace(
            r#""parts":       { "large": "stop",            "small": "stop" },"#,
            "",
        );
        assert!(text.len() < DEFAULT_TABLE.len());
        let err = ActionTable::from_json(&text).unwrap_err();
        assert!(matches!(err, DecisionError::Table(ref m) if m.contains("parts")), "{err}");
    }

    #[test]
    fn empty_row_rejected() {
        let text = DEFAULT_TABLE.replace(
            r#""vehicles":    { "large": "stop_or_reroute", "small": null }"#,
            r#""vehicles":    { "large": null, "small": null }"#,
        );
        let err = ActionTable::from_json(&text).unwrap_err();
        assert!(matches!(err, DecisionError::Table(ref m) if m.contains("vehicles")), "{err}");
    }

    #[test]
    fn unknown_action_rejected() {
        let text = DEFAULT_TABLE.replace(r#""small": "continue" }"#, r#""small": "run_over" }"#);
        assert!(ActionTable::from_json(&text).is_err());
    }

    #[test]
    fn threshold_range_checked() {
        assert!(ActionTable::default().with_threshold(1.5).is_err());
        assert_eq!(
            ActionTable::default().with_threshold(0.8).unwrap().confidence_threshold,
            0.8
        );
    }
}
