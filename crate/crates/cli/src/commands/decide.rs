use std::io::Write;

use nearfield::datagen::DetectorOutput;
use nearfield::decision::{
    aggregate, events_from_perception, write_log, Action, ActionTable, DecisionEngine, DetectionEvent, ReroutePolicy,
};
use nearfield::stripe::PerceptionEvent;
use serde_json::Value;

use super::{open_output, read_text};
use crate::args::DecideArgs;
use crate::report::{ConfigDigest, RunReport};
use crate::CliError;

/// Events of one input line. Records are told apart by their fields: `tier`
/// marks a decision event, `triggered` a pipeline event and `class_id` a
/// detector record.
fn parse_line(v: Value, a: &DecideArgs, line: usize) -> Result<Vec<DetectionEvent>, String> {
    let has = |k: &str| v.get(k).is_some();
    if has("tier") {
        Ok(vec![serde_json::from_value(v).map_err(|e| e.to_string())?])
    } else if has("triggered") {
        let ev: PerceptionEvent = serde_json::from_value(v).map_err(|e| e.to_string())?;
        Ok(events_from_perception(&ev, a.zone))
    } else if has("class_id") {
        let d: DetectorOutput = serde_json::from_value(v).map_err(|e| e.to_string())?;
        Ok(vec![d.to_event(a.zone, a.mm_per_unit, line as u64)?])
    } else {
        Err("unrecognized record: expected a \"tier\", \"triggered\" or \"class_id\" field".into())
    }
}

pub(crate) fn run(a: &DecideArgs) -> Result<RunReport, CliError> {
    let policy: ReroutePolicy = a.policy.parse().map_err(CliError::config)?;
    let table = match &a.table {
        Some(p) => ActionTable::load(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => ActionTable::default(),
    };
    let text = read_text(&a.events)?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let at = |m: String| CliError::config(format!("{}:{n}: {m}", a.events.display()));
        let v: Value = serde_json::from_str(line)
            .map_err(|e| CliError::config(format!("{}:{n}:{}: {e}", a.events.display(), e.column())))?;
        events.extend(parse_line(v, a, n).map_err(at)?);
    }
    let engine = DecisionEngine::new(table, policy);
    let decisions = engine.decide_all(&events).map_err(CliError::config)?;

    let mut out = open_output(a.out.as_deref())?;
    write_log(&mut out, &decisions).map_err(CliError::runtime)?;
    out.flush().map_err(CliError::runtime)?;

    let digest = ConfigDigest::new("decide")
        .file("table", a.table.as_deref())
        .map_err(CliError::config)?
        .value("policy", &a.policy)
        .value("zone", a.zone)
        .value("mm_per_unit", a.mm_per_unit)
        .finish();
    let mut report = RunReport::new("decide", digest);
    report.count("events", events.len() as u64);
    for act in Action::ALL {
        let name = serde_json::to_value(act).expect("action serializes");
        let n = decisions.iter().filter(|d| d.action == act).count();
        report.count(name.as_str().unwrap_or_default(), n as u64);
    }
    let (action, command) = aggregate(&decisions);
    report.extra("aggregate_action", action);
    report.extra("command", command);
    Ok(report)
}
