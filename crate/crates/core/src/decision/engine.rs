use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{classify_size, Action, ActionTable, DecisionError, DetectionEvent, ObjectCategory, SizeClass};
use crate::stripe::PerceptionEvent;

/// How a `StopOrReroute` action is carried out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReroutePolicy {
    #[default]
    Conservative,
    RerouteFirst,
}

impl std::str::FromStr for ReroutePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conservative" => Ok(Self::Conservative),
            "reroute-first" => Ok(Self::RerouteFirst),
            _ => Err(format!("unknown policy {s:?} (expected conservative or reroute-first)")),
        }
    }
}

/// What the drive controller is told to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Continue,
    Reroute,
    Stop,
}

pub fn resolve_stop_or_reroute(action: Action, policy: ReroutePolicy) -> Command {
    match (action, policy) {
        (Action::Continue, _) => Command::Continue,
        (Action::Stop, _) => Command::Stop,
        (Action::StopOrReroute, ReroutePolicy::Conservative) => Command::Stop,
        (Action::StopOrReroute, ReroutePolicy::RerouteFirst) => Command::Reroute,
    }
}

fn size_rule(height_mm: Option<f64>) -> Result<Action, DecisionError> {
    // Without a height only presence is known.
    Ok(match height_mm.map(classify_size).transpose()? {
        Some(SizeClass::Small) => Action::Continue,
        Some(SizeClass::Large) | None => Action::Stop,
    })
}

/// Action for one event. Tier 1 stops, tier 2 applies the size rule, tier 3
/// looks up the table; a tier-3 event under the confidence threshold is
/// decided by the size rule instead, and a tier-3 event without a height is
/// treated as large.
pub fn decide(ev: &DetectionEvent, table: &ActionTable) -> Result<Action, DecisionError> {
    ev.validate()?;
    if ev.category == Some(ObjectCategory::Human) {
        return Ok(Action::Stop);
    }
    match ev.tier {
        1 => Ok(Action::Stop),
        2 => size_rule(ev.height_mm),
        _ => {
            let (cat, conf) = (ev.category.unwrap(), ev.confidence.unwrap());
            if conf < table.confidence_threshold {
                return size_rule(ev.height_mm);
            }
            let size = ev.size().unwrap_or(SizeClass::Large);
            Ok(table.lookup(cat, size))
        }
    }
}

/// One decision-log record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub ts_ms: u64,
    pub zone: char,
    pub tier: u8,
    pub category: Option<ObjectCategory>,
    pub size: Option<SizeClass>,
    pub action: Action,
    pub resolved: Command,
}

#[derive(Clone, Debug, Default)]
pub struct DecisionEngine {
    pub table: ActionTable,
    pub policy: ReroutePolicy,
}

impl DecisionEngine {
    pub fn new(table: ActionTable, policy: ReroutePolicy) -> Self {
        Self { table, policy }
    }

    pub fn decide(&self, ev: &DetectionEvent) -> Result<Decision, DecisionError> {
        let action = decide(ev, &self.table)?;
        Ok(Decision {
            ts_ms: ev.ts_ms,
            zone: ev.zone,
            tier: ev.tier,
            category: ev.category,
            size: ev.size(),
            action,
            resolved: resolve_stop_or_reroute(action, self.policy),
        })
    }

    pub fn decide_all(&self, events: &[DetectionEvent]) -> Result<Vec<Decision>, DecisionError> {
        events.iter().map(|e| self.decide(e)).collect()
    }
}

/// Most severe action and command over a set of decisions (all zones weigh
/// equally). Nothing to decide means continue.
pub fn aggregate(decisions: &[Decision]) -> (Action, Command) {
    decisions.iter().fold((Action::Continue, Command::Continue), |(a, c), d| {
        (a.max(d.action), c.max(d.resolved))
    })
}

pub fn write_log<W: Write>(mut w: W, decisions: &[Decision]) -> Result<(), DecisionError> {
    for d in decisions {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Lifts a pipeline event into decision inputs: one tier-2 event per valid
/// height, and a tier-1 event when the stripe is cut with nothing measured
/// (including failed or stripe-less frames).
pub fn events_from_perception(ev: &PerceptionEvent, zone: char) -> Vec<DetectionEvent> {
    let mut out: Vec<DetectionEvent> = ev
        .heights
        .iter()
        .filter(|h| h.valid)
        .map(|h| DetectionEvent::sized(zone, h.h_obj_mm.max(0.0), ev.ts_ms))
        .collect();
    if ev.triggered && out.is_empty() {
        out.push(DetectionEvent::presence(zone, ev.ts_ms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stripe::EventHeight;

    fn t3(cat: ObjectCategory, h: f64) -> DetectionEvent {
        DetectionEvent::classified('B', cat, 0.9, Some(h), 0)
    }

    #[test]
    fn listed_examples() {
        let t = ActionTable::default();
        assert_eq!(decide(&t3(ObjectCategory::Human, 80.0), &t).unwrap(), Action::Stop);
        assert_eq!(decide(&t3(ObjectCategory::Tools, 8.0), &t).unwrap(), Action::Continue);
        assert_eq!(decide(&DetectionEvent::sized('B', 120.0, 0), &t).unwrap(), Action::Stop);
        assert_eq!(decide(&DetectionEvent::sized('B', 30.0, 0), &t).unwrap(), Action::Continue);
        assert_eq!(decide(&DetectionEvent::presence('B', 0), &t).unwrap(), Action::Stop);
    }

    #[test]
    fn low_confidence_uses_size_rule() {
        let t = ActionTable::default();
        let mut ev = t3(ObjectCategory::Parts, 10.0);
        assert_eq!(decide(&ev, &t).unwrap(), Action::Stop);
        ev.confidence = Some(0.3);
        assert_eq!(decide(&ev, &t).unwrap(), Action::Continue);
        ev.height_mm = None;
        assert_eq!(decide(&ev, &t).unwrap(), Action::Stop);
    }

    #[test]
    fn tier3_without_height_is_large() {
        let t = ActionTable::default();
        let ev = DetectionEvent::classified('A', ObjectCategory::Tools, 0.9, None, 0);
        assert_eq!(decide(&ev, &t).unwrap(), Action::StopOrReroute);
    }

    #[test]
    fn malformed_events_rejected() {
        let t = ActionTable::default();
        let mut ev = DetectionEvent::sized('B', 10.0, 0);
        ev.height_mm = None;
        assert!(decide(&ev, &t).is_err());
        assert!(decide(&DetectionEvent::sized('B', -1.0, 0), &t).is_err());
        let mut ev = t3(ObjectCategory::Tools, 10.0);
        ev.confidence = None;
        assert!(decide(&ev, &t).is_err());
        ev.confidence = Some(1.2);
        assert!(decide(&ev, &t).is_err());
        ev.tier = 4;
        ev.confidence = Some(0.9);
        assert!(decide(&ev, &t).is_err());
    }

    #[test]
    fn policy_resolution() {
        let a = Action::StopOrReroute;
        assert_eq!(resolve_stop_or_reroute(a, ReroutePolicy::default()), Command::Stop);
        assert_eq!(resolve_stop_or_reroute(a, ReroutePolicy::RerouteFirst), Command::Reroute);
        for p in [ReroutePolicy::Conservative, ReroutePolicy::RerouteFirst] {
            assert_eq!(resolve_stop_or_reroute(Action::Stop, p), Command::Stop);
            assert_eq!(resolve_stop_or_reroute(Action::Continue, p), Command::Continue);
        }
        assert_eq!("reroute-first".parse::<ReroutePolicy>(), Ok(ReroutePolicy::RerouteFirst));
        assert!("yolo".parse::<ReroutePolicy>().is_err());
    }

    #[test]
    fn aggregation_takes_most_severe() {
        let e = DecisionEngine::new(ActionTable::default(), ReroutePolicy::RerouteFirst);
        let ds = e
            .decide_all(&[
                DetectionEvent::sized('B', 10.0, 0),
                t3(ObjectCategory::Vehicles, 300.0),
            ])
            .unwrap();
        assert_eq!(aggregate(&ds), (Action::StopOrReroute, Command::Reroute));
        assert_eq!(aggregate(&[]), (Action::Continue, Command::Continue));
    }

    #[test]
    fn log_lines_parse_back() {
        let e = DecisionEngine::default();
        let ds = e.decide_all(&[t3(ObjectCategory::Tools, 70.0)]).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim_end()).unwrap();
        assert_eq!(v["zone"], "B");
        assert_eq!(v["category"], "tools");
        assert_eq!(v["size"], "large");
        assert_eq!(v["action"], "stop_or_reroute");
        assert_eq!(v["resolved"], "stop");
        for k in ["ts_ms", "tier"] {
            assert!(v.get(k).is_some());
        }
    }

    #[test]
    fn perception_lifting() {
        let mut ev = PerceptionEvent {
            ts_ms: 40,
            triggered: true,
            max_gap_mm: 80.0,
            gaps: Vec::new(),
            heights: Vec::new(),
            no_stripe: false,
            error: None,
        };
        assert_eq!(events_from_perception(&ev, 'C'), vec![DetectionEvent::presence('C', 40)]);
        ev.heights = vec![
            EventHeight {
                pos_mm: 300.0,
                h_obj_mm: 61.0,
                valid: true,
            },
            EventHeight {
                pos_mm: 200.0,
                h_obj_mm: 500.0,
                valid: false,
            },
        ];
        assert_eq!(events_from_perception(&ev, 'C'), vec![DetectionEvent::sized('C', 61.0, 40)]);
        ev.triggered = false;
        ev.heights.clear();
        assert!(events_from_perception(&ev, 'C').is_empty());
    }
}
