//! Group construction and the meeting schedule.
//!
//! A group is a socially connected node set (snowball-sampled from the
//! input graph) with a regularity factor K, an integer period multiplier
//! mu drawn from a truncated power law, an existence window inside the
//! simulation horizon, and per-member attendance probabilities. Meeting
//! times walk forward from a random start with Gaussian steps of mean
//! K*mu, so inter-meeting gaps of a K = 24 h group concentrate at 24, 48,
//! 72, ... hours.

use crate::social::{known_count, snowball_sample, NodeId, SocialGraph};
use crate::stats::{
    sample_gaussian, sample_tpl, sample_uniform, RandomSource, StatsError, TruncatedPowerLaw,
};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("social error: {0}")]
    Social(#[from] crate::social::SocialError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Discrete distribution over regularity factors K (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct KDistribution {
    entries: Vec<(f64, f64)>, // (K seconds, probability)
}

impl KDistribution {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self, GroupError> {
        if entries.is_empty() {
            return Err(GroupError::InvalidParameter(
                "K distribution must not be empty".into(),
            ));
        }
        let mut sum = 0.0;
        for &(k, p) in &entries {
            if k <= 0.0 {
                return Err(GroupError::InvalidParameter(format!(
                    "K value must be positive, got {k}"
                )));
            }
            if p < 0.0 {
                return Err(GroupError::InvalidParameter(format!(
                    "K probability must be >= 0, got {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GroupError::InvalidParameter(format!(
                "K probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for &(k, p) in &self.entries {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.entries.last().unwrap().0
    }
}

/// A group of nodes that meets regularly.
#[derive(Debug, Clone)]
pub struct Group {
    pub id: u32,
    /// Sorted member ids.
    pub members: Vec<NodeId>,
    /// Regularity factor K in seconds (e.g. 86400 for daily groups).
    pub k_factor: f64,
    /// Integer period multiplier; the mean inter-meeting time is K * mu.
    pub mu: f64,
    /// Existence window [start, end] within the simulation horizon.
    pub window: (f64, f64),
    /// Attendance probability per member, parallel to `members`.
    pub attendance: Vec<f64>,
    /// True when the snowball hit the component boundary before reaching
    /// the drawn size.
    pub truncated: bool,
}

impl Group {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// One realized meeting. The hosting cell is filled in by the mobility
/// layer.
#[derive(Debug, Clone)]
pub struct MeetingEvent {
    pub group_id: u32,
    pub start: f64,
    pub duration: f64,
    /// Sorted realized attendees (members that passed the attendance draw
    /// and were not double-booked).
    pub attendees: Vec<NodeId>,
    pub cell: Option<u32>,
}

/// Everything the groups layer hands to the mobility layer.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub groups: Vec<Group>,
    /// Sorted by (start, group id).
    pub events: Vec<MeetingEvent>,
    pub horizon: f64,
    pub node_count: u32,
}

/// Statistical parameters for group construction.
#[derive(Debug, Clone)]
pub struct GroupModelParams {
    pub num_groups: u32,
    /// Group size distribution; x_min = 2 (a group needs two members).
    pub size_dist: TruncatedPowerLaw,
    /// Inter-meeting multiplier exponent/cutoff. The cutoff is in seconds
    /// and is rescaled into units of each group's K at draw time.
    pub alpha_gmt: f64,
    pub beta_gmt: f64,
    /// Meeting duration distribution, seconds.
    pub duration_dist: TruncatedPowerLaw,
    pub k_distribution: KDistribution,
    /// Variance of the Gaussian step between meetings, seconds^2.
    pub sigma2: f64,
    /// Simulation horizon T, seconds.
    pub horizon: f64,
    /// Group existence period, seconds (clamped to the horizon).
    pub group_duration: f64,
}

/// Meeting times never step by less than this (seconds); Gaussian draws
/// below it are resampled, then clamped after 100 attempts.
pub const MIN_MEETING_GAP: f64 = 1.0;
const MAX_STEP_RESAMPLES: usize = 100;

/// Build one group: size from the size law (rounded to an integer >= 2),
/// members by snowball from a uniform seed node, K from the K
/// distribution, mu from the inter-meeting law rounded to an integer
/// >= 1, attendance as known-members/size, and a uniform existence
/// window.
pub fn build_group(
    graph: &SocialGraph,
    params: &GroupModelParams,
    id: u32,
    rng: &mut RandomSource,
) -> Result<Group, GroupError> {
    if graph.node_count() == 0 {
        return Err(GroupError::InvalidParameter("empty social graph".into()));
    }
    let drawn = sample_tpl(&params.size_dist, rng).round().max(2.0) as usize;
    let target = drawn.min(graph.node_count() as usize);
    let seed_node = rng.next_index(graph.node_count() as usize) as NodeId;
    let sample = snowball_sample(graph, seed_node, target, rng)?;
    let members = sample.members;
    let truncated = sample.truncated || drawn > graph.node_count() as usize;

    let k_factor = params.k_distribution.sample(rng);
    // The multiplier lives in units of K: a daily group with mu = 2 meets
    // every other day. Rounding to an integer is what produces the
    // "every 24/48/72 h" pattern; a fractional multiplier would place the
    // whole group off the daily grid.
    let mu_dist = TruncatedPowerLaw::new(params.alpha_gmt, params.beta_gmt / k_factor, 1.0)?;
    let mu = sample_tpl(&mu_dist, rng).round().max(1.0);

    let t_g = params.group_duration.min(params.horizon);
    let start = sample_uniform(0.0, (params.horizon - t_g).max(0.0), rng)?;
    let window = (start, start + t_g);

    let size = members.len();
    let attendance = members
        .iter()
        .map(|&m| Ok(known_count(graph, m, &members)? as f64 / size as f64))
        .collect::<Result<Vec<_>, GroupError>>()?;

    Ok(Group {
        id,
        members,
        k_factor,
        mu,
        window,
        attendance,
        truncated,
    })
}

/// Meeting times for a group: the first meeting is uniform within the
/// opening period of the existence window, later ones step by
/// N(K*mu, sigma2); generation stops at the window end.
pub fn generate_meeting_times(
    group: &Group,
    sigma2: f64,
    rng: &mut RandomSource,
) -> Result<Vec<f64>, GroupError> {
    let period = group.k_factor * group.mu;
    let window_len = group.window.1 - group.window.0;
    let first = group.window.0 + sample_uniform(0.0, period.min(window_len), rng)?;
    meeting_times_from(first, group.window.1, period, sigma2, rng)
}

/// The recursion itself, starting from a fixed first meeting.
pub fn meeting_times_from(
    first: f64,
    window_end: f64,
    period: f64,
    sigma2: f64,
    rng: &mut RandomSource,
) -> Result<Vec<f64>, GroupError> {
    if first > window_end {
        return Ok(Vec::new());
    }
    let mut times = vec![first];
    loop {
        let mut step = sample_gaussian(period, sigma2, rng)?;
        let mut tries = 0;
        while step < MIN_MEETING_GAP && tries < MAX_STEP_RESAMPLES {
            step = sample_gaussian(period, sigma2, rng)?;
            tries += 1;
        }
        if step < MIN_MEETING_GAP {
            step = MIN_MEETING_GAP;
        }
        let next = times.last().unwrap() + step;
        if next > window_end {
            break;
        }
        times.push(next);
    }
    Ok(times)
}

/// One meeting duration draw.
pub fn draw_meeting_duration(params: &GroupModelParams, rng: &mut RandomSource) -> f64 {
    sample_tpl(&params.duration_dist, rng)
}

/// Independent Bernoulli attendance per member.
pub fn realize_attendance(group: &Group, rng: &mut RandomSource) -> Vec<NodeId> {
    group
        .members
        .iter()
        .zip(&group.attendance)
        .filter(|&(_, &p)| rng.next_bool(p))
        .map(|(&m, _)| m)
        .collect()
}

/// Build all groups and their realized meetings, globally sorted by start
/// time, with per-node double-booking resolved.
///
/// Each group gets its own random stream derived from the master seed and
/// the group index, so group construction order is immaterial.
pub fn build_schedule(
    graph: &SocialGraph,
    params: &GroupModelParams,
    rng: &RandomSource,
) -> Result<Schedule, GroupError> {
    let mut groups = Vec::with_capacity(params.num_groups as usize);
    let mut events: Vec<MeetingEvent> = Vec::new();
    for gid in 0..params.num_groups {
        let mut grng = rng.derive(gid as u64);
        let group = build_group(graph, params, gid, &mut grng)?;
        let times = generate_meeting_times(&group, params.sigma2, &mut grng)?;
        for start in times {
            let duration = draw_meeting_duration(params, &mut grng);
            let attendees = realize_attendance(&group, &mut grng);
            events.push(MeetingEvent {
                group_id: gid,
                start,
                duration,
                attendees,
                cell: None,
            });
        }
        groups.push(group);
    }
    events.sort_by(|a, b| {
        a.start
            .partial_cmp(&b.start)
            .unwrap()
            .then(a.group_id.cmp(&b.group_id))
    });
    resolve_double_booking(&mut events);
    Ok(Schedule {
        groups,
        events,
        horizon: params.horizon,
        node_count: graph.node_count(),
    })
}

/// A node attends the meeting that starts first; it is dropped from the
/// attendee sets of meetings that overlap its current one. Events must be
/// sorted by start time.
pub(crate) fn resolve_double_booking(events: &mut [MeetingEvent]) {
    let mut busy_until: std::collections::BTreeMap<NodeId, f64> = std::collections::BTreeMap::new();
    for event in events.iter_mut() {
        let start = event.start;
        let end = start + event.duration;
        event.attendees.retain(|node| {
            if busy_until.get(node).copied().unwrap_or(f64::NEG_INFINITY) > start {
                return false;
            }
            let slot = busy_until.entry(*node).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(end);
            true
        });
    }
}

/// Debugging dump: one line per meeting, `group_id start duration
/// attendee,attendee,...`. Not a stable interchange format.
pub fn write_schedule(schedule: &Schedule, path: &Path) -> Result<(), GroupError> {
    let mut out = String::new();
    for e in &schedule.events {
        let ids: Vec<String> = e.attendees.iter().map(|a| a.to_string()).collect();
        writeln!(out, "{} {} {} {}", e.group_id, e.start, e.duration, ids.join(",")).ok();
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
