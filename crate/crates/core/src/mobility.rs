//! The spatial layer: a grid of square cells, uniform random homes,
//! distance-decayed meeting-place selection, and per-node itineraries
//! that move between home and meetings at constant speed.

use crate::groups::{Group, Schedule};
use crate::social::NodeId;
use crate::stats::{sample_uniform, RandomSource};
use std::collections::BTreeMap;
use thiserror::Error;

pub type CellId = u32;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {t} outside itinerary range [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    fn lerp(self, other: Point, f: f64) -> Point {
        Point {
            x: self.x + (other.x - self.x) * f,
            y: self.y + (other.y - self.y) * f,
        }
    }
}

/// The simulation space: cells_x by cells_y square cells of side
/// `cell_size`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub cells_x: u32,
    pub cells_y: u32,
    pub cell_size: f64,
}

impl Grid {
    pub fn new(cells_x: u32, cells_y: u32, cell_size: f64) -> Result<Self, MobilityError> {
        if cells_x == 0 || cells_y == 0 || !(cell_size > 0.0) {
            return Err(MobilityError::InvalidParameter(format!(
                "grid must be positive, got {cells_x} x {cells_y} cells of {cell_size}"
            )));
        }
        Ok(Self {
            cells_x,
            cells_y,
            cell_size,
        })
    }

    pub fn cell_count(&self) -> u32 {
        self.cells_x * self.cells_y
    }

    pub fn width(&self) -> f64 {
        self.cells_x as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.cells_y as f64 * self.cell_size
    }

    /// Center of a cell; cells are numbered row-major, x fastest.
    pub fn center(&self, cell: CellId) -> Point {
        let i = (cell % self.cells_x) as f64;
        let j = (cell / self.cells_x) as f64;
        Point {
            x: (i + 0.5) * self.cell_size,
            y: (j + 0.5) * self.cell_size,
        }
    }

    /// Cell containing a point (clamped to the boundary cells).
    pub fn cell_of(&self, p: Point) -> CellId {
        let i = ((p.x / self.cell_size) as i64).clamp(0, self.cells_x as i64 - 1) as u32;
        let j = ((p.y / self.cell_size) as i64).clamp(0, self.cells_y as i64 - 1) as u32;
        j * self.cells_x + i
    }
}

/// One home per node, i.i.d. uniform over the simulation rectangle.
pub fn assign_homes(node_count: u32, grid: &Grid, rng: &mut RandomSource) -> Vec<Point> {
    (0..node_count)
        .map(|_| {
            let x = sample_uniform(0.0, grid.width(), rng).expect("valid bounds");
            let y = sample_uniform(0.0, grid.height(), rng).expect("valid bounds");
            Point { x, y }
        })
        .collect()
}

/// Attraction of a cell as seen from a home: (1 + d/cell_size)^(-gamma)
/// where d is the Euclidean distance to the cell center. Equals 1 at
/// d = 0 and decays with a power-law tail; scaling d by the cell size
/// keeps gamma resolution-independent.
pub fn decayed_distance(home: Point, cell: CellId, grid: &Grid, gamma: f64) -> f64 {
    let d = home.dist(grid.center(cell));
    (1.0 + d / grid.cell_size).powf(-gamma)
}

/// Average member attraction of a cell for a group.
pub fn cell_weight(cell: CellId, group: &Group, homes: &[Point], grid: &Grid, gamma: f64) -> f64 {
    let sum: f64 = group
        .members
        .iter()
        .map(|&m| decayed_distance(homes[m as usize], cell, grid, gamma))
        .sum();
    sum / group.members.len() as f64
}

/// Normalized hosting probability over all cells for one group.
pub fn place_probability(group: &Group, grid: &Grid, homes: &[Point], gamma: f64) -> Vec<f64> {
    let mut weights: Vec<f64> = (0..grid.cell_count())
        .map(|c| cell_weight(c, group, homes, grid, gamma))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Sample one hosting cell from the group's place distribution.
pub fn choose_meeting_cell(
    group: &Group,
    grid: &Grid,
    homes: &[Point],
    gamma: f64,
    rng: &mut RandomSource,
) -> CellId {
    let probs = place_probability(group, grid, homes, gamma);
    sample_categorical(&cumulative(&probs), rng)
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample_categorical(cdf: &[f64], rng: &mut RandomSource) -> CellId {
    let u = rng.next_f64();
    match cdf.binary_search_by(|&c| c.partial_cmp(&u).unwrap()) {
        Ok(i) | Err(i) => (i.min(cdf.len() - 1)) as CellId,
    }
}

/// Fill in the hosting cell of every meeting. Each meeting of a group
/// re-samples independently from the group's (cached) place distribution.
pub fn assign_cells(
    schedule: &mut Schedule,
    grid: &Grid,
    homes: &[Point],
    gamma: f64,
    rng: &mut RandomSource,
) {
    let mut samplers: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let groups = &schedule.groups;
    for event in &mut schedule.events {
        let cdf = samplers.entry(event.group_id).or_insert_with(|| {
            cumulative(&place_probability(
                &groups[event.group_id as usize],
                grid,
                homes,
                gamma,
            ))
        });
        event.cell = Some(sample_categorical(cdf, rng));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activity {
    AtHome,
    Traveling,
    /// Present at the meeting identified by its index into
    /// `Schedule::events`.
    InMeeting(u32),
}

/// One piece of a node's timeline. Stationary segments have p0 == p1;
/// travel segments move in a straight line at the configured speed.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub p0: Point,
    pub p1: Point,
    pub activity: Activity,
}

/// A node's full timeline over [0, horizon]; segments are contiguous.
#[derive(Debug, Clone)]
pub struct Itinerary {
    pub node: NodeId,
    pub horizon: f64,
    pub segments: Vec<Segment>,
}

impl Itinerary {
    /// Position at time t by piecewise-linear interpolation.
    pub fn position_at(&self, t: f64) -> Result<Point, MobilityError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(MobilityError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        // Skip zero-length segments that share the query time.
        let mut idx = idx.min(self.segments.len() - 1);
        while idx + 1 < self.segments.len() && self.segments[idx].t1 < t {
            idx += 1;
        }
        let s = &self.segments[idx];
        if s.t1 <= s.t0 {
            return Ok(s.p1);
        }
        let f = ((t - s.t0) / (s.t1 - s.t0)).clamp(0.0, 1.0);
        Ok(s.p0.lerp(s.p1, f))
    }
}

/// A node's stay at one meeting, as seen by contact extraction.
#[derive(Debug, Clone, Copy)]
pub struct PresenceWindow {
    pub node: NodeId,
    pub enter: f64,
    pub leave: f64,
}

/// Itineraries for every node plus, per schedule event, the physical
/// presence window of each attendee at the meeting point.
#[derive(Debug, Clone)]
pub struct MobilityPlan {
    pub itineraries: Vec<Itinerary>,
    pub presence: Vec<Vec<PresenceWindow>>,
}

/// Build per-node itineraries from a schedule with assigned cells.
///
/// Nodes start at home, depart as late as possible to arrive on time,
/// stay for the meeting, and return home afterwards unless the next
/// meeting starts sooner than the detour home would take, in which case
/// they travel directly. Arrivals that cannot be on time are late and
/// shorten the node's presence window.
pub fn build_itineraries(
    schedule: &Schedule,
    homes: &[Point],
    grid: &Grid,
    speed: f64,
) -> Result<MobilityPlan, MobilityError> {
    if !(speed > 0.0) {
        return Err(MobilityError::InvalidParameter(format!(
            "speed must be positive, got {speed}"
        )));
    }
    let horizon = schedule.horizon;
    let mut presence: Vec<Vec<PresenceWindow>> = vec![Vec::new(); schedule.events.len()];
    // Per node: indices of attended events, already start-sorted and
    // non-overlapping (double-booking was resolved upstream).
    let mut attended: Vec<Vec<u32>> = vec![Vec::new(); schedule.node_count as usize];
    for (idx, event) in schedule.events.iter().enumerate() {
        for &node in &event.attendees {
            attended[node as usize].push(idx as u32);
        }
    }

    let mut itineraries = Vec::with_capacity(schedule.node_count as usize);
    for node in 0..schedule.node_count {
        let home = homes[node as usize];
        let mut segments: Vec<Segment> = Vec::new();
        let mut push = |t0: f64, t1: f64, p0: Point, p1: Point, activity: Activity| {
            if t1 > t0 {
                segments.push(Segment {
                    t0,
                    t1,
                    p0,
                    p1,
                    activity,
                });
            }
        };

        // (position, free-since) of the node, plus the meeting stay still
        // waiting for its departure time.
        let mut pos = home;
        let mut free_t = 0.0;
        let mut open_stay: Option<(u32, f64)> = None; // (event idx, arrival)

        for &ev in &attended[node as usize] {
            let event = &schedule.events[ev as usize];
            let target = grid.center(event.cell.expect("cells assigned before itineraries"));
            let (depart, depart_pos) = if let Some((prev_ev, arrival)) = open_stay.take() {
                let end_prev = free_t; // max(arrival, prev meeting end)
                let tt_home = pos.dist(home) / speed;
                let tt_home_to_next = home.dist(target) / speed;
                if event.start - end_prev >= tt_home + tt_home_to_next {
                    // Detour home fits: close the stay at the meeting end.
                    presence[prev_ev as usize].push(PresenceWindow {
                        node,
                        enter: arrival,
                        leave: end_prev,
                    });
                    push(arrival, end_prev, pos, pos, Activity::InMeeting(prev_ev));
                    push(end_prev, end_prev + tt_home, pos, home, Activity::Traveling);
                    let at_home = end_prev + tt_home;
                    let depart = (event.start - tt_home_to_next).max(at_home);
                    push(at_home, depart, home, home, Activity::AtHome);
                    (depart, home)
                } else {
                    // Direct transition: linger, then leave as late as
                    // feasible.
                    let tt = pos.dist(target) / speed;
                    let depart = (event.start - tt).max(end_prev);
                    presence[prev_ev as usize].push(PresenceWindow {
                        node,
                        enter: arrival,
                        leave: depart,
                    });
                    push(arrival, depart, pos, pos, Activity::InMeeting(prev_ev));
                    (depart, pos)
                }
            } else {
                let tt = home.dist(target) / speed;
                let depart = (event.start - tt).max(free_t);
                push(free_t, depart, home, home, Activity::AtHome);
                (depart, home)
            };
            let tt = depart_pos.dist(target) / speed;
            let arrival = depart + tt;
            push(depart, arrival, depart_pos, target, Activity::Traveling);
            pos = target;
            free_t = arrival.max(event.start + event.duration);
            open_stay = Some((ev, arrival));
        }

        if let Some((prev_ev, arrival)) = open_stay.take() {
            presence[prev_ev as usize].push(PresenceWindow {
                node,
                enter: arrival,
                leave: free_t,
            });
            push(arrival, free_t, pos, pos, Activity::InMeeting(prev_ev));
            let tt_home = pos.dist(home) / speed;
            push(free_t, free_t + tt_home, pos, home, Activity::Traveling);
            free_t += tt_home;
            pos = home;
        }
        push(free_t, free_t.max(horizon), pos, pos, Activity::AtHome);

        itineraries.push(Itinerary {
            node,
            horizon,
            segments: clip_segments(segments, horizon),
        });
    }
    Ok(MobilityPlan {
        itineraries,
        presence,
    })
}

/// Clip a timeline at the horizon, interpolating a travel segment that
/// straddles it.
fn clip_segments(segments: Vec<Segment>, horizon: f64) -> Vec<Segment> {
    let mut out = Vec::with_capacity(segments.len());
    for mut s in segments {
        if s.t0 >= horizon {
            break;
        }
        if s.t1 > horizon {
            let f = (horizon - s.t0) / (s.t1 - s.t0);
            s.p1 = s.p0.lerp(s.p1, f);
            s.t1 = horizon;
        }
        out.push(s);
    }
    out
}

/// Distances of all travel segments, for displacement statistics.
pub fn flight_lengths(plan: &MobilityPlan) -> Vec<f64> {
    plan.itineraries
        .iter()
        .flat_map(|it| it.segments.iter())
        .filter(|s| s.activity == Activity::Traveling)
        .map(|s| s.p0.dist(s.p1))
        .filter(|&d| d > 0.0)
        .collect()
}
