//! Pairwise contact events and the external trace formats: ONE external
//! movement, ONE connection events, and a plain contact CSV. All formats
//! are UTF-8 text with LF line endings; readers transparently handle
//! `.gz` files.

use crate::groups::Schedule;
use crate::mobility::{Itinerary, MobilityPlan};
use crate::social::NodeId;
use flate2::read::GzDecoder;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mobility error: {0}")]
    Mobility(#[from] crate::mobility::MobilityError),
}

/// Open a text file for buffered reading, decompressing `.gz` by
/// extension.
pub fn open_text(path: &Path) -> std::io::Result<Box<dyn BufRead>> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let decoder = GzDecoder::new(file);
        Ok(Box::new(BufReader::new(
            Box::new(decoder) as Box<dyn Read>
        )))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// One pairwise contact; node_a < node_b and t_start < t_end after
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub a: NodeId,
    pub b: NodeId,
    pub t_start: f64,
    pub t_end: f64,
}

/// A normalized contact trace: per-pair events are non-overlapping and
/// merged; the global order is (t_start, a, b).
#[derive(Debug, Clone)]
pub struct ContactTrace {
    node_count: u32,
    horizon: f64,
    events: Vec<ContactEvent>,
}

impl ContactTrace {
    /// Normalize and take ownership of raw events: orient pairs, clamp to
    /// [0, horizon], drop empties, merge overlapping or touching events
    /// of the same pair, sort globally by start time.
    pub fn new(node_count: u32, horizon: f64, raw: Vec<ContactEvent>) -> Self {
        let mut max_id = 0;
        let mut events: Vec<ContactEvent> = raw
            .into_iter()
            .filter_map(|e| {
                if e.a == e.b {
                    return None;
                }
                let (a, b) = (e.a.min(e.b), e.a.max(e.b));
                let t_start = e.t_start.max(0.0);
                let t_end = e.t_end.min(horizon);
                max_id = max_id.max(b);
                (t_end > t_start).then_some(ContactEvent {
                    a,
                    b,
                    t_start,
                    t_end,
                })
            })
            .collect();
        events.sort_by(|x, y| {
            (x.a, x.b)
                .cmp(&(y.a, y.b))
                .then(x.t_start.partial_cmp(&y.t_start).unwrap())
        });
        let mut merged: Vec<ContactEvent> = Vec::with_capacity(events.len());
        for e in events {
            match merged.last_mut() {
                Some(last) if last.a == e.a && last.b == e.b && e.t_start <= last.t_end => {
                    last.t_end = last.t_end.max(e.t_end);
                }
                _ => merged.push(e),
            }
        }
        merged.sort_by(|x, y| {
            x.t_start
                .partial_cmp(&y.t_start)
                .unwrap()
                .then((x.a, x.b).cmp(&(y.a, y.b)))
        });
        Self {
            node_count: node_count.max(max_id + 1),
            horizon,
            events: merged,
        }
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The sub-trace of events starting before `cut`, with spans clipped
    /// to it. Used for protocol warm-up prefixes.
    pub fn clipped(&self, cut: f64) -> ContactTrace {
        let events = self
            .events
            .iter()
            .filter(|e| e.t_start < cut)
            .map(|e| ContactEvent {
                t_end: e.t_end.min(cut),
                ..*e
            })
            .collect();
        ContactTrace::new(self.node_count, cut, events)
    }

    /// Aggregated contact graph: for each pair that ever met, the total
    /// contact time.
    pub fn aggregated_graph(&self) -> BTreeMap<(NodeId, NodeId), f64> {
        let mut graph = BTreeMap::new();
        for e in &self.events {
            *graph.entry((e.a, e.b)).or_insert(0.0) += e.t_end - e.t_start;
        }
        graph
    }
}

/// Extract contacts from meeting co-presence: every pair of attendees of
/// a meeting is in contact for the overlap of their presence windows at
/// the meeting point.
pub fn extract_contacts_meeting(schedule: &Schedule, plan: &MobilityPlan) -> ContactTrace {
    let mut raw = Vec::new();
    for windows in &plan.presence {
        for (i, w1) in windows.iter().enumerate() {
            for w2 in &windows[i + 1..] {
                let t_start = w1.enter.max(w2.enter);
                let t_end = w1.leave.min(w2.leave);
                if t_end > t_start {
                    raw.push(ContactEvent {
                        a: w1.node,
                        b: w2.node,
                        t_start,
                        t_end,
                    });
                }
            }
        }
    }
    ContactTrace::new(schedule.node_count, schedule.horizon, raw)
}

/// Extract contacts by sampling all positions every `time_step` and
/// registering pairs within `radio_range`. Contact boundaries are
/// resolved at sample resolution: a run of in-range samples k0..=k1
/// becomes the event [k0 * step, (k1 + 1) * step], clamped to the
/// horizon.
pub fn extract_contacts_proximity(
    itineraries: &[Itinerary],
    radio_range: f64,
    time_step: f64,
    horizon: f64,
) -> Result<ContactTrace, TraceError> {
    if !(radio_range > 0.0) || !(time_step > 0.0) {
        return Err(TraceError::InvalidParameter(format!(
            "radio_range and time_step must be positive, got {radio_range} and {time_step}"
        )));
    }
    let n = itineraries.len();
    let mut open: Vec<Option<f64>> = vec![None; n * n];
    let mut raw = Vec::new();
    let steps = (horizon / time_step).floor() as u64;
    let mut positions = vec![crate::mobility::Point { x: 0.0, y: 0.0 }; n];
    for k in 0..=steps {
        let t = k as f64 * time_step;
        for (i, it) in itineraries.iter().enumerate() {
            positions[i] = it.position_at(t)?;
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let slot = a * n + b;
                let in_range = positions[a].dist(positions[b]) <= radio_range;
                match (in_range, open[slot]) {
                    (true, None) => open[slot] = Some(t),
                    (false, Some(start)) => {
                        raw.push(ContactEvent {
                            a: a as NodeId,
                            b: b as NodeId,
                            t_start: start,
                            t_end: t.min(horizon),
                        });
                        open[slot] = None;
                    }
                    _ => {}
                }
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if let Some(start) = open[a * n + b] {
                raw.push(ContactEvent {
                    a: a as NodeId,
                    b: b as NodeId,
                    t_start: start,
                    t_end: horizon,
                });
            }
        }
    }
    Ok(ContactTrace::new(n as u32, horizon, raw))
}

/// One line of a ONE external-movement file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementSample {
    pub time: f64,
    pub node: NodeId,
    pub x: f64,
    pub y: f64,
}

fn movement_samples(
    itineraries: &[Itinerary],
    time_step: f64,
    horizon: f64,
) -> Result<Vec<MovementSample>, TraceError> {
    if !(time_step > 0.0) {
        return Err(TraceError::InvalidParameter(format!(
            "time_step must be positive, got {time_step}"
        )));
    }
    let steps = (horizon / time_step).floor() as u64;
    let mut samples = Vec::with_capacity((steps as usize + 1) * itineraries.len());
    for k in 0..=steps {
        let t = k as f64 * time_step;
        for it in itineraries {
            let p = it.position_at(t)?;
            samples.push(MovementSample {
                time: t,
                node: it.node,
                x: p.x,
                y: p.y,
            });
        }
    }
    Ok(samples)
}

/// Write sampled positions in the ONE external-movement format:
/// a header `minTime maxTime minX maxX minY maxY 0 0`, then per-sample
/// lines `time node_id x y`, time-major, all floats with two decimals.
pub fn write_one_movement(
    itineraries: &[Itinerary],
    time_step: f64,
    horizon: f64,
    path: &Path,
) -> Result<(), TraceError> {
    let samples = movement_samples(itineraries, time_step, horizon)?;
    write_movement_samples(&samples, path)
}

pub fn write_movement_samples(samples: &[MovementSample], path: &Path) -> Result<(), TraceError> {
    let (mut min_t, mut max_t) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in samples {
        min_t = min_t.min(s.time);
        max_t = max_t.max(s.time);
        min_x = min_x.min(s.x);
        max_x = max_x.max(s.x);
        min_y = min_y.min(s.y);
        max_y = max_y.max(s.y);
    }
    if samples.is_empty() {
        min_t = 0.0;
        max_t = 0.0;
        min_x = 0.0;
        max_x = 0.0;
        min_y = 0.0;
        max_y = 0.0;
    }
    let mut out = String::with_capacity(samples.len() * 32 + 64);
    writeln!(
        out,
        "{min_t:.2} {max_t:.2} {min_x:.2} {max_x:.2} {min_y:.2} {max_y:.2} 0 0"
    )
    .ok();
    for s in samples {
        writeln!(out, "{:.2} {} {:.2} {:.2}", s.time, s.node, s.x, s.y).ok();
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Parse a ONE external-movement file back into samples.
pub fn read_one_movement(path: &Path) -> Result<Vec<MovementSample>, TraceError> {
    let reader = open_text(path)?;
    let mut samples = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if fields.len() != 8 {
                return Err(parse_err(path, line_no, "header must have 8 fields"));
            }
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_err(path, line_no, "data line must have 4 fields"));
        }
        let fl = |s: &str| -> Result<f64, TraceError> {
            s.parse()
                .map_err(|_| parse_err(path, line_no, &format!("bad float {s:?}")))
        };
        samples.push(MovementSample {
            time: fl(fields[0])?,
            node: fields[1]
                .parse()
                .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[1])))?,
            x: fl(fields[2])?,
            y: fl(fields[3])?,
        });
    }
    Ok(samples)
}

/// Grammar check for a ONE movement file: header shape, field counts,
/// monotone times, coordinates within the header bounds.
pub fn validate_one_movement(path: &Path) -> Result<(), TraceError> {
    let reader = open_text(path)?;
    let mut bounds: Option<[f64; 6]> = None;
    let mut prev_time = f64::NEG_INFINITY;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let fl = |s: &str| -> Result<f64, TraceError> {
            s.parse()
                .map_err(|_| parse_err(path, line_no, &format!("bad float {s:?}")))
        };
        if bounds.is_none() {
            if fields.len() != 8 {
                return Err(parse_err(path, line_no, "header must have 8 fields"));
            }
            bounds = Some([
                fl(fields[0])?,
                fl(fields[1])?,
                fl(fields[2])?,
                fl(fields[3])?,
                fl(fields[4])?,
                fl(fields[5])?,
            ]);
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_err(path, line_no, "data line must have 4 fields"));
        }
        let b = bounds.unwrap();
        let t = fl(fields[0])?;
        fields[1]
            .parse::<u32>()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[1])))?;
        let x = fl(fields[2])?;
        let y = fl(fields[3])?;
        if t < prev_time {
            return Err(parse_err(path, line_no, "times must be non-decreasing"));
        }
        prev_time = t;
        if t < b[0] || t > b[1] || x < b[2] || x > b[3] || y < b[4] || y > b[5] {
            return Err(parse_err(path, line_no, "sample outside header bounds"));
        }
    }
    if bounds.is_none() {
        return Err(parse_err(path, 1, "missing header"));
    }
    Ok(())
}

/// Write ONE StandardEvents connection lines: `<time> CONN <a> <b> up`
/// at contact start and `... down` at contact end, globally time-sorted.
pub fn write_one_connections(trace: &ContactTrace, path: &Path) -> Result<(), TraceError> {
    #[derive(PartialEq)]
    enum Kind {
        Up,
        Down,
    }
    let mut lines: Vec<(f64, NodeId, NodeId, Kind)> = Vec::with_capacity(trace.events.len() * 2);
    for e in &trace.events {
        lines.push((e.t_start, e.a, e.b, Kind::Up));
        lines.push((e.t_end, e.a, e.b, Kind::Down));
    }
    lines.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then((x.1, x.2).cmp(&(y.1, y.2)))
            .then((x.3 == Kind::Down).cmp(&(y.3 == Kind::Down)))
    });
    let mut out = String::with_capacity(lines.len() * 24);
    for (t, a, b, kind) in lines {
        let tag = match kind {
            Kind::Up => "up",
            Kind::Down => "down",
        };
        writeln!(out, "{t} CONN {a} {b} {tag}").ok();
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Grammar check for a ONE connections file: field count, CONN keyword,
/// up/down tags, monotone times, per-pair up/down alternation.
pub fn validate_one_connections(path: &Path) -> Result<(), TraceError> {
    let reader = open_text(path)?;
    let mut prev_time = f64::NEG_INFINITY;
    let mut open: std::collections::HashSet<(NodeId, NodeId)> = Default::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(path, line_no, "expected 5 fields"));
        }
        if fields[1] != "CONN" {
            return Err(parse_err(path, line_no, "second field must be CONN"));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad time {:?}", fields[0])))?;
        if t < prev_time {
            return Err(parse_err(path, line_no, "times must be non-decreasing"));
        }
        prev_time = t;
        let a: NodeId = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[2])))?;
        let b: NodeId = fields[3]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[3])))?;
        let key = (a.min(b), a.max(b));
        match fields[4] {
            "up" => {
                if !open.insert(key) {
                    return Err(parse_err(path, line_no, "up for an already-open pair"));
                }
            }
            "down" => {
                if !open.remove(&key) {
                    return Err(parse_err(path, line_no, "down without matching up"));
                }
            }
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    &format!("expected up or down, got {other:?}"),
                ));
            }
        }
    }
    Ok(())
}

/// Write the contact CSV: header `node_a,node_b,t_start,t_end`, times in
/// seconds.
pub fn write_contacts_csv(trace: &ContactTrace, path: &Path) -> Result<(), TraceError> {
    let mut out = String::with_capacity(trace.events.len() * 28 + 32);
    out.push_str("node_a,node_b,t_start,t_end\n");
    for e in &trace.events {
        writeln!(out, "{},{},{},{}", e.a, e.b, e.t_start, e.t_end).ok();
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Supported on-disk contact trace formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    OneConnections,
    Csv,
}

/// Read a contact trace in either format, normalizing the result.
/// Unmatched `up` events are closed at the end of the observed time span
/// with a warning; the horizon is the largest timestamp seen.
pub fn read_contact_trace(path: &Path, format: TraceFormat) -> Result<ContactTrace, TraceError> {
    match format {
        TraceFormat::Csv => read_contacts_csv(path),
        TraceFormat::OneConnections => read_one_connections(path),
    }
}

fn read_contacts_csv(path: &Path) -> Result<ContactTrace, TraceError> {
    let reader = open_text(path)?;
    let mut raw = Vec::new();
    let mut horizon = 0.0f64;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        if line_no == 1 && body.starts_with("node_a") {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(path, line_no, "expected 4 comma-separated fields"));
        }
        let a: NodeId = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[0])))?;
        let b: NodeId = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[1])))?;
        let fl = |s: &str| -> Result<f64, TraceError> {
            s.parse()
                .map_err(|_| parse_err(path, line_no, &format!("bad time {s:?}")))
        };
        let t_start = fl(fields[2])?;
        let t_end = fl(fields[3])?;
        horizon = horizon.max(t_end).max(t_start);
        raw.push(ContactEvent {
            a,
            b,
            t_start,
            t_end,
        });
    }
    Ok(ContactTrace::new(0, horizon, raw))
}

fn read_one_connections(path: &Path) -> Result<ContactTrace, TraceError> {
    let reader = open_text(path)?;
    let mut open: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut raw = Vec::new();
    let mut horizon = 0.0f64;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 || fields[1] != "CONN" {
            return Err(parse_err(path, line_no, "expected `<time> CONN <a> <b> up|down`"));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad time {:?}", fields[0])))?;
        let a: NodeId = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[2])))?;
        let b: NodeId = fields[3]
            .parse()
            .map_err(|_| parse_err(path, line_no, &format!("bad node id {:?}", fields[3])))?;
        horizon = horizon.max(t);
        let key = (a.min(b), a.max(b));
        match fields[4] {
            "up" => {
                if open.insert(key, t).is_some() {
                    log::warn!(
                        "{}:{line_no}: up for already-open pair {a}-{b}, restarting contact",
                        path.display()
                    );
                }
            }
            "down" => match open.remove(&key) {
                Some(start) => raw.push(ContactEvent {
                    a: key.0,
                    b: key.1,
                    t_start: start,
                    t_end: t,
                }),
                None => {
                    log::warn!(
                        "{}:{line_no}: down without matching up for {a}-{b}, ignored",
                        path.display()
                    );
                }
            },
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    &format!("expected up or down, got {other:?}"),
                ));
            }
        }
    }
    for ((a, b), start) in open {
        log::warn!("unmatched up for {a}-{b}, closing at horizon {horizon}");
        raw.push(ContactEvent {
            a,
            b,
            t_start: start,
            t_end: horizon,
        });
    }
    Ok(ContactTrace::new(0, horizon, raw))
}

fn parse_err(path: &Path, line: usize, reason: &str) -> TraceError {
    TraceError::Parse {
        path: path.display().to_string(),
        line,
        reason: reason.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Group, MeetingEvent};
    use crate::mobility::{assign_homes, build_itineraries, Grid, Point};
    use crate::stats::RandomSource;
    use proptest::prelude::*;

    const DAY: f64 = 86_400.0;

    fn presence_plan(windows: Vec<Vec<(NodeId, f64, f64)>>) -> MobilityPlan {
        MobilityPlan {
            itineraries: vec![],
            presence: windows
                .into_iter()
                .map(|v| {
                    v.into_iter()
                        .map(|(node, enter, leave)| crate::mobility::PresenceWindow {
                            node,
                            enter,
                            leave,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn empty_schedule(n: u32, events: usize) -> Schedule {
        Schedule {
            groups: vec![],
            events: (0..events)
                .map(|_| MeetingEvent {
                    group_id: 0,
                    start: 0.0,
                    duration: 1.0,
                    attendees: vec![],
                    cell: Some(0),
                })
                .collect(),
            horizon: DAY,
            node_count: n,
        }
    }

    #[test]
    fn meeting_contacts_full_duration() {
        let schedule = empty_schedule(2, 1);
        let plan = presence_plan(vec![vec![(0, 100.0, 400.0), (1, 100.0, 400.0)]]);
        let trace = extract_contacts_meeting(&schedule, &plan);
        assert_eq!(trace.events().len(), 1);
        let e = trace.events()[0];
        assert_eq!((e.a, e.b), (0, 1));
        assert_eq!(e.t_end - e.t_start, 300.0);
    }

    #[test]
    fn meeting_contacts_late_arrival_truncates() {
        let schedule = empty_schedule(2, 1);
        let plan = presence_plan(vec![vec![(0, 100.0, 400.0), (1, 150.0, 400.0)]]);
        let trace = extract_contacts_meeting(&schedule, &plan);
        assert_eq!(trace.events()[0].t_end - trace.events()[0].t_start, 250.0);
    }

    #[test]
    fn meeting_contacts_pairwise_count() {
        let schedule = empty_schedule(3, 1);
        let plan = presence_plan(vec![vec![
            (0, 0.0, 100.0),
            (1, 0.0, 100.0),
            (2, 0.0, 100.0),
        ]]);
        let trace = extract_contacts_meeting(&schedule, &plan);
        assert_eq!(trace.events().len(), 3);
    }

    #[test]
    fn proximity_static_nodes() {
        let grid = Grid::new(10, 10, 10.0).unwrap();
        let schedule = Schedule {
            groups: vec![],
            events: vec![],
            horizon: 600.0,
            node_count: 2,
        };
        // Two nodes 5 apart (within range 10), two nodes far apart.
        let near = [Point { x: 0.0, y: 0.0 }, Point { x: 5.0, y: 0.0 }];
        let plan = build_itineraries(&schedule, &near, &grid, 1.0).unwrap();
        let trace = extract_contacts_proximity(&plan.itineraries, 10.0, 60.0, 600.0).unwrap();
        assert_eq!(trace.events().len(), 1);
        assert_eq!(trace.events()[0].t_start, 0.0);
        assert_eq!(trace.events()[0].t_end, 600.0);

        let far = [Point { x: 0.0, y: 0.0 }, Point { x: 90.0, y: 90.0 }];
        let plan = build_itineraries(&schedule, &far, &grid, 1.0).unwrap();
        let trace = extract_contacts_proximity(&plan.itineraries, 10.0, 60.0, 600.0).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn proximity_agrees_with_meeting_mode() {
        // One meeting, two nodes: total contact time per pair must agree
        // within one time step per contact.
        let grid = Grid::new(5, 5, 10.0).unwrap();
        let group = Group {
            id: 0,
            members: vec![0, 1],
            k_factor: DAY,
            mu: 1.0,
            window: (0.0, DAY),
            attendance: vec![1.0; 2],
            truncated: false,
        };
        let schedule = Schedule {
            groups: vec![group],
            events: vec![MeetingEvent {
                group_id: 0,
                start: 2_000.0,
                duration: 3_000.0,
                attendees: vec![0, 1],
                cell: Some(12),
            }],
            horizon: 10_000.0,
            node_count: 2,
        };
        let mut rng = RandomSource::new(3);
        let homes = assign_homes(2, &grid, &mut rng);
        let plan = build_itineraries(&schedule, &homes, &grid, 1.4).unwrap();
        let meeting = extract_contacts_meeting(&schedule, &plan);
        let step = 10.0;
        let proximity =
            extract_contacts_proximity(&plan.itineraries, 1.0, step, 10_000.0).unwrap();
        let total = |t: &ContactTrace| -> f64 {
            t.events().iter().map(|e| e.t_end - e.t_start).sum()
        };
        assert_eq!(meeting.events().len(), 1);
        assert!(
            (total(&meeting) - total(&proximity)).abs() <= step + 1e-9,
            "meeting {} vs proximity {}",
            total(&meeting),
            total(&proximity)
        );
    }

    #[test]
    fn movement_writer_shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("movement.txt");
        let schedule = Schedule {
            groups: vec![],
            events: vec![],
            horizon: 60.0,
            node_count: 1,
        };
        let grid = Grid::new(2, 2, 10.0).unwrap();
        let homes = vec![Point { x: 3.0, y: 4.0 }];
        let plan = build_itineraries(&schedule, &homes, &grid, 1.0).unwrap();
        write_one_movement(&plan.itineraries, 60.0, 60.0, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 samples (t=0, t=60)
        assert_eq!(lines[0], "0.00 60.00 3.00 3.00 4.00 4.00 0 0");
        assert_eq!(lines[1], "0.00 0 3.00 4.00");
        validate_one_movement(&path).unwrap();

        // Bit-exact round trip through our own reader and writer.
        let samples = read_one_movement(&path).unwrap();
        let path2 = dir.path().join("movement2.txt");
        write_movement_samples(&samples, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn movement_positions_match_position_at() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("movement.txt");
        let grid = Grid::new(5, 5, 10.0).unwrap();
        let group = Group {
            id: 0,
            members: vec![0],
            k_factor: DAY,
            mu: 1.0,
            window: (0.0, DAY),
            attendance: vec![1.0],
            truncated: false,
        };
        let schedule = Schedule {
            groups: vec![group],
            events: vec![MeetingEvent {
                group_id: 0,
                start: 500.0,
                duration: 1000.0,
                attendees: vec![0],
                cell: Some(24),
            }],
            horizon: 3_000.0,
            node_count: 1,
        };
        let homes = vec![Point { x: 5.0, y: 5.0 }];
        let plan = build_itineraries(&schedule, &homes, &grid, 1.0).unwrap();
        write_one_movement(&plan.itineraries, 100.0, 3_000.0, &path).unwrap();
        for s in read_one_movement(&path).unwrap() {
            let p = plan.itineraries[0].position_at(s.time).unwrap();
            assert!((p.x - s.x).abs() <= 0.01 && (p.y - s.y).abs() <= 0.01);
        }
    }

    #[test]
    fn connections_writer_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conn.txt");
        let trace = ContactTrace::new(
            3,
            100.0,
            vec![ContactEvent {
                a: 1,
                b: 2,
                t_start: 0.0,
                t_end: 10.0,
            }],
        );
        write_one_connections(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "0 CONN 1 2 up\n10 CONN 1 2 down\n");
        validate_one_connections(&path).unwrap();

        let back = read_contact_trace(&path, TraceFormat::OneConnections).unwrap();
        assert_eq!(back.events(), trace.events());

        // Writing the re-read trace reproduces the bytes.
        let path2 = dir.path().join("conn2.txt");
        write_one_connections(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn csv_read_basics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contacts.csv");
        std::fs::write(&path, "node_a,node_b,t_start,t_end\n1,2,0,10\n").unwrap();
        let trace = read_contact_trace(&path, TraceFormat::Csv).unwrap();
        assert_eq!(trace.events().len(), 1);
        assert_eq!(trace.events()[0].t_end, 10.0);

        std::fs::write(&path, "2,1,5,8\n1,2,0,10\n").unwrap();
        let trace = read_contact_trace(&path, TraceFormat::Csv).unwrap();
        // Out-of-order and reversed input normalize to one merged event.
        assert_eq!(trace.events().len(), 1);
        assert_eq!((trace.events()[0].a, trace.events()[0].b), (1, 2));

        std::fs::write(&path, "1,2,zero,10\n").unwrap();
        match read_contact_trace(&path, TraceFormat::Csv) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contacts.csv");
        let trace = ContactTrace::new(
            4,
            1000.0,
            vec![
                ContactEvent {
                    a: 0,
                    b: 1,
                    t_start: 1.5,
                    t_end: 20.25,
                },
                ContactEvent {
                    a: 2,
                    b: 3,
                    t_start: 5.0,
                    t_end: 6.0,
                },
            ],
        );
        write_contacts_csv(&trace, &path).unwrap();
        let back = read_contact_trace(&path, TraceFormat::Csv).unwrap();
        assert_eq!(back.events(), trace.events());
    }

    #[test]
    fn gz_read_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("contacts.csv.gz");
        let mut enc =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"node_a,node_b,t_start,t_end\n0,1,0,5\n").unwrap();
        std::fs::write(&path, enc.finish().unwrap()).unwrap();
        let trace = read_contact_trace(&path, TraceFormat::Csv).unwrap();
        assert_eq!(trace.events().len(), 1);
    }

    #[test]
    fn unmatched_up_closes_at_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conn.txt");
        std::fs::write(&path, "0 CONN 0 1 up\n50 CONN 2 3 up\n60 CONN 2 3 down\n").unwrap();
        let trace = read_contact_trace(&path, TraceFormat::OneConnections).unwrap();
        assert_eq!(trace.events().len(), 2);
        let open = trace.events().iter().find(|e| e.a == 0).unwrap();
        assert_eq!(open.t_end, 60.0); // horizon = max timestamp seen
    }

    proptest! {
        #[test]
        fn normalization_invariants(
            raw in proptest::collection::vec(
                (0u32..6, 0u32..6, 0.0f64..100.0, 0.0f64..100.0),
                0..40,
            )
        ) {
            let events: Vec<ContactEvent> = raw
                .into_iter()
                .map(|(a, b, t0, t1)| ContactEvent {
                    a,
                    b,
                    t_start: t0.min(t1),
                    t_end: t0.max(t1),
                })
                .collect();
            let trace = ContactTrace::new(6, 100.0, events);
            // Pair orientation and per-pair non-overlap.
            let mut last_per_pair: BTreeMap<(u32, u32), f64> = BTreeMap::new();
            for e in trace.events() {
                prop_assert!(e.a < e.b);
                prop_assert!(e.t_start < e.t_end);
                prop_assert!(e.t_start >= 0.0 && e.t_end <= 100.0);
                if let Some(prev_end) = last_per_pair.get(&(e.a, e.b)) {
                    prop_assert!(e.t_start > *prev_end);
                }
                last_per_pair.insert((e.a, e.b), e.t_end);
            }
            // Global sort by start.
            for w in trace.events().windows(2) {
                prop_assert!(w[0].t_start <= w[1].t_start);
            }
        }
    }
}
