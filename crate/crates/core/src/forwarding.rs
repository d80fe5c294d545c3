//! Replay of a contact trace under pluggable forwarding protocols, with
//! delivery-ratio and transmission-count metrics over a TTL sweep.
//!
//! The replay is event driven and exact for ideal links: whenever a node
//! acquires a message (creation or transfer), the copy cascades through
//! the currently active contacts as far as the protocol allows, all at
//! the same instant. Contacts are infinite-bandwidth, zero-latency links,
//! so no per-contact processing granularity is needed.

use crate::analysis::{detect_groups, AnalysisError};
use crate::social::NodeId;
use crate::stats::RandomSource;
use crate::trace::ContactTrace;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A message to route through the trace.
#[derive(Debug, Clone, Copy)]
pub struct Message {
    pub id: u32,
    pub source: NodeId,
    pub destination: NodeId,
    pub created: f64,
    pub ttl: f64,
}

/// A (source, destination, creation time) triple; the TTL sweep turns
/// one workload into messages per TTL cell.
#[derive(Debug, Clone, Copy)]
pub struct MessageSpec {
    pub source: NodeId,
    pub destination: NodeId,
    pub created: f64,
}

/// Uniform workload: source/destination pairs uniform over distinct
/// ordered pairs, creation times uniform over [window.0, window.1].
pub fn generate_workload(
    node_count: u32,
    count: usize,
    window: (f64, f64),
    rng: &mut RandomSource,
) -> Result<Vec<MessageSpec>, ForwardError> {
    if node_count < 2 {
        return Err(ForwardError::InvalidParameter(
            "need at least two nodes for a workload".into(),
        ));
    }
    if window.1 < window.0 {
        return Err(ForwardError::InvalidParameter(format!(
            "creation window reversed: {:?}",
            window
        )));
    }
    Ok((0..count)
        .map(|_| {
            let source = rng.next_index(node_count as usize) as NodeId;
            let mut destination = rng.next_index(node_count as usize - 1) as NodeId;
            if destination >= source {
                destination += 1;
            }
            let created = window.0 + (window.1 - window.0) * rng.next_f64();
            MessageSpec {
                source,
                destination,
                created,
            }
        })
        .collect())
}

/// A forwarding policy: given that `carrier` holds `msg` and is in
/// contact with `peer` (who lacks it), should a copy be handed over?
pub trait Protocol {
    fn name(&self) -> &str;
    fn should_forward(&self, carrier: NodeId, peer: NodeId, msg: &Message) -> bool;
}

/// Epidemic propagation: copy at every opportunity. Upper bound for both
/// delivery ratio and transmissions.
#[derive(Debug, Default)]
pub struct Flooding;

impl Protocol for Flooding {
    fn name(&self) -> &str {
        "flooding"
    }

    fn should_forward(&self, _carrier: NodeId, _peer: NodeId, _msg: &Message) -> bool {
        true
    }
}

/// How Bubble Rap scores global popularity.
#[derive(Debug, Clone, Copy)]
pub enum CentralityMode {
    /// Degree in the aggregated warm-up graph.
    Aggregate,
    /// Degree counting only contacts in the last `window` seconds of the
    /// warm-up.
    Windowed { window: f64 },
}

/// Community-and-rank forwarding: climb the global rank until reaching
/// the destination's community, then climb the local rank inside it.
pub struct BubbleRap {
    communities: Vec<Vec<NodeId>>,
    node_comms: Vec<Vec<usize>>,
    global_rank: Vec<u32>,
    /// local_rank[comm_idx][node] = degree within that community.
    local_rank: Vec<BTreeMap<NodeId, u32>>,
}

impl BubbleRap {
    /// Build protocol state from the warm-up prefix of a trace:
    /// communities from 3-clique percolation on the aggregated graph
    /// (nodes left uncovered get singleton pseudo-communities), global
    /// rank from degree centrality.
    pub fn from_warmup(
        trace: &ContactTrace,
        warmup_end: f64,
        centrality: CentralityMode,
    ) -> Result<Self, ForwardError> {
        let prefix = trace.clipped(warmup_end);
        let mut edges: Vec<(NodeId, NodeId)> =
            prefix.aggregated_graph().keys().copied().collect();
        if let CentralityMode::Windowed { window } = centrality {
            let cutoff = warmup_end - window;
            let mut recent: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            for e in prefix.events() {
                if e.t_end > cutoff {
                    recent.insert((e.a, e.b));
                }
            }
            edges = recent.into_iter().collect();
        }
        let communities = crate::analysis::clique_percolation(&prefix, 3)?;
        Ok(Self::from_parts(
            trace.node_count(),
            communities,
            &edges,
        ))
    }

    /// Assemble from explicit communities and an aggregated edge set.
    /// Nodes not covered by any community get singleton pseudo-communities.
    pub fn from_parts(
        node_count: u32,
        mut communities: Vec<Vec<NodeId>>,
        edges: &[(NodeId, NodeId)],
    ) -> Self {
        let mut covered = vec![false; node_count as usize];
        for c in &communities {
            for &m in c {
                covered[m as usize] = true;
            }
        }
        for node in 0..node_count {
            if !covered[node as usize] {
                communities.push(vec![node]);
            }
        }
        let mut node_comms = vec![Vec::new(); node_count as usize];
        for (ci, c) in communities.iter().enumerate() {
            for &m in c {
                node_comms[m as usize].push(ci);
            }
        }
        let mut global_rank = vec![0u32; node_count as usize];
        for &(a, b) in edges {
            global_rank[a as usize] += 1;
            global_rank[b as usize] += 1;
        }
        let local_rank = communities
            .iter()
            .map(|c| {
                let set: BTreeSet<NodeId> = c.iter().copied().collect();
                c.iter()
                    .map(|&m| {
                        let deg = edges
                            .iter()
                            .filter(|&&(a, b)| {
                                (a == m && set.contains(&b)) || (b == m && set.contains(&a))
                            })
                            .count() as u32;
                        (m, deg)
                    })
                    .collect()
            })
            .collect();
        Self {
            communities,
            node_comms,
            global_rank,
            local_rank,
        }
    }

    fn shares_community(&self, x: NodeId, with: NodeId) -> bool {
        self.node_comms[x as usize]
            .iter()
            .any(|&ci| self.communities[ci].contains(&with))
    }

    /// Best local rank of `x` over communities containing both `x` and
    /// `with`; 0 when they share none.
    fn local_rank_with(&self, x: NodeId, with: NodeId) -> u32 {
        self.node_comms[x as usize]
            .iter()
            .filter(|&&ci| self.communities[ci].contains(&with))
            .map(|&ci| self.local_rank[ci].get(&x).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

impl Protocol for BubbleRap {
    fn name(&self) -> &str {
        "bubble-rap"
    }

    fn should_forward(&self, carrier: NodeId, peer: NodeId, msg: &Message) -> bool {
        let dest = msg.destination;
        if peer == dest {
            return true;
        }
        let peer_in_dest = self.shares_community(peer, dest);
        if self.shares_community(carrier, dest) {
            // Local phase: only climb within the destination's community.
            peer_in_dest && self.local_rank_with(peer, dest) > self.local_rank_with(carrier, dest)
        } else {
            peer_in_dest || self.global_rank[peer as usize] > self.global_rank[carrier as usize]
        }
    }
}

/// Group-path forwarding: messages follow the most probable group-to-
/// group path from a source-containing group to a destination-containing
/// group. A group's re-meeting probability is its recent occurrence
/// count normalized by the busiest group; the group-to-group transfer
/// probability is the member-set Jaccard overlap. The best path maximizes
/// the product of both factors (Dijkstra on negated logs).
pub struct GroupsNet {
    group_members: Vec<Vec<NodeId>>,
    remeet: Vec<f64>,
    member_groups: BTreeMap<NodeId, Vec<usize>>,
    paths: RefCell<BTreeMap<(NodeId, NodeId), Option<PathInfo>>>,
}

#[derive(Debug, Clone)]
struct PathInfo {
    /// For each node on the path, the largest 1-based index of a path
    /// group containing it.
    max_idx: BTreeMap<NodeId, usize>,
    len: usize,
}

/// Detection settings for the warm-up group scan.
#[derive(Debug, Clone)]
pub struct GroupsNetOptions {
    pub detect_window: f64,
    pub min_size: usize,
    pub similarity_threshold: f64,
    /// Only occurrences within this many seconds before the warm-up end
    /// count toward re-meeting probability.
    pub recency_window: f64,
}

impl Default for GroupsNetOptions {
    fn default() -> Self {
        Self {
            detect_window: 3600.0,
            min_size: 2,
            similarity_threshold: 0.5,
            recency_window: 14.0 * 86_400.0,
        }
    }
}

impl GroupsNet {
    pub fn from_warmup(
        trace: &ContactTrace,
        warmup_end: f64,
        opts: &GroupsNetOptions,
    ) -> Result<Self, ForwardError> {
        let prefix = trace.clipped(warmup_end);
        let detected = detect_groups(
            &prefix,
            opts.detect_window,
            opts.min_size,
            opts.similarity_threshold,
        )?;
        let cutoff = warmup_end - opts.recency_window;
        let counts: Vec<usize> = detected
            .iter()
            .map(|g| {
                g.occurrences
                    .iter()
                    .filter(|o| o.t_start >= cutoff)
                    .count()
            })
            .collect();
        let max_count = counts.iter().copied().max().unwrap_or(0);
        let mut group_members = Vec::new();
        let mut remeet = Vec::new();
        for (g, &c) in detected.iter().zip(&counts) {
            if c > 0 {
                group_members.push(g.members.clone());
                remeet.push(c as f64 / max_count as f64);
            }
        }
        let mut member_groups: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (gi, members) in group_members.iter().enumerate() {
            for &m in members {
                member_groups.entry(m).or_default().push(gi);
            }
        }
        Ok(Self {
            group_members,
            remeet,
            member_groups,
            paths: RefCell::new(BTreeMap::new()),
        })
    }

    /// Assemble from explicit groups with re-meeting probabilities in
    /// (0, 1].
    pub fn from_parts(group_members: Vec<Vec<NodeId>>, remeet: Vec<f64>) -> Self {
        let mut member_groups: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (gi, members) in group_members.iter().enumerate() {
            for &m in members {
                member_groups.entry(m).or_default().push(gi);
            }
        }
        Self {
            group_members,
            remeet,
            member_groups,
            paths: RefCell::new(BTreeMap::new()),
        }
    }

    fn jaccard(a: &[NodeId], b: &[NodeId]) -> f64 {
        let sa: BTreeSet<_> = a.iter().collect();
        let sb: BTreeSet<_> = b.iter().collect();
        let inter = sa.intersection(&sb).count();
        if inter == 0 {
            return 0.0;
        }
        inter as f64 / sa.union(&sb).count() as f64
    }

    /// Max-product group path from any source group to any destination
    /// group; None when either end is in no group or no path exists.
    fn best_path(&self, source: NodeId, destination: NodeId) -> Option<PathInfo> {
        let src_groups = self.member_groups.get(&source)?;
        let dst_groups: BTreeSet<usize> = self
            .member_groups
            .get(&destination)?
            .iter()
            .copied()
            .collect();

        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // Min-heap by cost, then by group index.
                other
                    .0
                    .total_cmp(&self.0)
                    .then(other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let n = self.group_members.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        for &g in src_groups {
            let cost = -self.remeet[g].ln();
            if cost < dist[g] {
                dist[g] = cost;
                heap.push(Entry(cost, g));
            }
        }
        let mut settled = vec![false; n];
        let mut best_target: Option<usize> = None;
        while let Some(Entry(cost, g)) = heap.pop() {
            if settled[g] {
                continue;
            }
            settled[g] = true;
            if dst_groups.contains(&g) {
                best_target = Some(g);
                break;
            }
            for h in 0..n {
                if settled[h] || h == g {
                    continue;
                }
                let transfer = Self::jaccard(&self.group_members[g], &self.group_members[h]);
                if transfer <= 0.0 {
                    continue;
                }
                let next = cost - transfer.ln() - self.remeet[h].ln();
                if next < dist[h] {
                    dist[h] = next;
                    prev[h] = Some(g);
                    heap.push(Entry(next, h));
                }
            }
        }
        let target = best_target?;
        let mut path = vec![target];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        let mut max_idx = BTreeMap::new();
        for (i, &g) in path.iter().enumerate() {
            for &m in &self.group_members[g] {
                max_idx.insert(m, i + 1);
            }
        }
        Some(PathInfo {
            max_idx,
            len: path.len(),
        })
    }

    fn path_for(&self, msg: &Message) -> Option<PathInfo> {
        let key = (msg.source, msg.destination);
        if let Some(cached) = self.paths.borrow().get(&key) {
            return cached.clone();
        }
        let computed = self.best_path(msg.source, msg.destination);
        if computed.is_none() {
            log::debug!(
                "no group path {} -> {}; direct delivery only",
                msg.source,
                msg.destination
            );
        }
        self.paths.borrow_mut().insert(key, computed.clone());
        computed
    }
}

impl Protocol for GroupsNet {
    fn name(&self) -> &str {
        "groups-net"
    }

    fn should_forward(&self, carrier: NodeId, peer: NodeId, msg: &Message) -> bool {
        if peer == msg.destination {
            return true;
        }
        let Some(path) = self.path_for(msg) else {
            return false;
        };
        let (Some(&ci), Some(&pi)) = (path.max_idx.get(&carrier), path.max_idx.get(&peer)) else {
            return false;
        };
        // Strictly forward along the path; inside the final group copies
        // spread to co-members, who may meet the destination later.
        pi > ci || (ci == path.len && pi == path.len)
    }
}

/// Outcome of one replay cell.
#[derive(Debug, Clone)]
pub struct ReplayMetrics {
    pub protocol: String,
    pub ttl: f64,
    pub created: usize,
    pub delivered: usize,
    pub transmissions: u64,
    /// Delivery latencies (seconds) of delivered messages.
    pub latencies: Vec<f64>,
}

impl ReplayMetrics {
    pub fn delivery_ratio(&self) -> f64 {
        if self.created == 0 {
            0.0
        } else {
            self.delivered as f64 / self.created as f64
        }
    }

    pub fn mean_latency(&self) -> Option<f64> {
        if self.latencies.is_empty() {
            None
        } else {
            Some(self.latencies.iter().sum::<f64>() / self.latencies.len() as f64)
        }
    }
}

/// Replay the trace under one protocol. Contacts are processed in time
/// order; a transfer happens when the peer lacks the message, the message
/// is alive, and the protocol approves. Deliveries count at first arrival;
/// copies of already-delivered messages still count as transmissions.
pub fn replay(trace: &ContactTrace, protocol: &dyn Protocol, messages: &[Message]) -> ReplayMetrics {
    #[derive(Clone, Copy)]
    enum Event {
        End(usize),
        Create(u32),
        Start(usize),
    }
    let mut timeline: Vec<(f64, u8, u32, Event)> = Vec::new();
    for (i, e) in trace.events().iter().enumerate() {
        timeline.push((e.t_start, 2, i as u32, Event::Start(i)));
        timeline.push((e.t_end, 0, i as u32, Event::End(i)));
    }
    for m in messages {
        timeline.push((m.created, 1, m.id, Event::Create(m.id)));
    }
    timeline.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let n = trace.node_count() as usize;
    let mut neighbors: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    let mut holds: Vec<Vec<bool>> = vec![vec![false; n]; messages.len()];
    let mut held: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut delivered: Vec<Option<f64>> = vec![None; messages.len()];
    let mut transmissions = 0u64;

    let alive = |m: &Message, t: f64| t >= m.created && t < m.created + m.ttl;

    // Give a copy to `to` and cascade it through active contacts.
    let mut infect = |to: NodeId,
                      msg_id: u32,
                      t: f64,
                      neighbors: &Vec<BTreeSet<NodeId>>,
                      holds: &mut Vec<Vec<bool>>,
                      held: &mut Vec<BTreeSet<u32>>,
                      delivered: &mut Vec<Option<f64>>| {
        let msg = &messages[msg_id as usize];
        let mut queue = vec![to];
        while let Some(node) = queue.pop() {
            for &peer in &neighbors[node as usize] {
                if holds[msg_id as usize][peer as usize] || !alive(msg, t) {
                    continue;
                }
                if protocol.should_forward(node, peer, msg) {
                    holds[msg_id as usize][peer as usize] = true;
                    held[peer as usize].insert(msg_id);
                    transmissions += 1;
                    if peer == msg.destination && delivered[msg_id as usize].is_none() {
                        delivered[msg_id as usize] = Some(t - msg.created);
                    }
                    queue.push(peer);
                }
            }
        }
    };

    for (t, _, _, event) in timeline {
        match event {
            Event::Create(id) => {
                let m = &messages[id as usize];
                if !holds[id as usize][m.source as usize] {
                    holds[id as usize][m.source as usize] = true;
                    held[m.source as usize].insert(id);
                    infect(
                        m.source,
                        id,
                        t,
                        &neighbors,
                        &mut holds,
                        &mut held,
                        &mut delivered,
                    );
                }
            }
            Event::Start(i) => {
                let e = &trace.events()[i];
                neighbors[e.a as usize].insert(e.b);
                neighbors[e.b as usize].insert(e.a);
                for node in [e.a, e.b] {
                    let msgs: Vec<u32> = held[node as usize].iter().copied().collect();
                    for id in msgs {
                        infect(
                            node,
                            id,
                            t,
                            &neighbors,
                            &mut holds,
                            &mut held,
                            &mut delivered,
                        );
                    }
                }
            }
            Event::End(i) => {
                let e = &trace.events()[i];
                neighbors[e.a as usize].remove(&e.b);
                neighbors[e.b as usize].remove(&e.a);
            }
        }
    }

    ReplayMetrics {
        protocol: protocol.name().to_string(),
        ttl: messages.first().map(|m| m.ttl).unwrap_or(0.0),
        created: messages.len(),
        delivered: delivered.iter().flatten().count(),
        transmissions,
        latencies: delivered.iter().flatten().copied().collect(),
    }
}

/// Run every (protocol, TTL) cell over the identical workload.
pub fn ttl_sweep(
    trace: &ContactTrace,
    protocols: &[&dyn Protocol],
    workload: &[MessageSpec],
    ttls: &[f64],
) -> Vec<ReplayMetrics> {
    let mut out = Vec::with_capacity(protocols.len() * ttls.len());
    for protocol in protocols {
        for &ttl in ttls {
            let messages: Vec<Message> = workload
                .iter()
                .enumerate()
                .map(|(id, spec)| Message {
                    id: id as u32,
                    source: spec.source,
                    destination: spec.destination,
                    created: spec.created,
                    ttl,
                })
                .collect();
            out.push(replay(trace, *protocol, &messages));
        }
    }
    out
}

/// Metrics CSV: `protocol,ttl_hours,delivery_ratio,transmissions,mean_latency_hours`.
pub fn write_metrics_csv(metrics: &[ReplayMetrics], path: &Path) -> Result<(), ForwardError> {
    let mut out = String::from("protocol,ttl_hours,delivery_ratio,transmissions,mean_latency_hours\n");
    for m in metrics {
        let latency = m
            .mean_latency()
            .map(|l| format!("{}", l / 3600.0))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{latency}",
            m.protocol,
            m.ttl / 3600.0,
            m.delivery_ratio(),
            m.transmissions
        )
        .ok();
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::ContactEvent;

    const HOUR: f64 = 3600.0;

    fn trace_of(events: Vec<(u32, u32, f64, f64)>, n: u32, horizon: f64) -> ContactTrace {
        ContactTrace::new(
            n,
            horizon,
            events
                .into_iter()
                .map(|(a, b, t0, t1)| ContactEvent {
                    a,
                    b,
                    t_start: t0,
                    t_end: t1,
                })
                .collect(),
        )
    }

    fn msg(id: u32, s: u32, d: u32, created: f64, ttl: f64) -> Message {
        Message {
            id,
            source: s,
            destination: d,
            created,
            ttl,
        }
    }

    #[test]
    fn direct_contact_delivers_with_one_transmission() {
        let trace = trace_of(vec![(0, 1, 5.0, 10.0)], 2, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 1, 0.0, 50.0)]);
        assert_eq!(m.delivered, 1);
        assert_eq!(m.transmissions, 1);
        assert_eq!(m.latencies, vec![5.0]);
    }

    #[test]
    fn no_contact_no_transmissions() {
        let trace = trace_of(vec![(2, 3, 5.0, 10.0)], 4, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 1, 0.0, 50.0)]);
        assert_eq!(m.delivered, 0);
        assert_eq!(m.transmissions, 0);
    }

    #[test]
    fn three_node_chain() {
        let trace = trace_of(vec![(0, 1, 1.0, 1.5), (1, 2, 2.0, 3.0)], 3, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 2, 0.0, 10.0)]);
        assert_eq!(m.delivered, 1);
        assert_eq!(m.transmissions, 2);
        assert_eq!(m.latencies, vec![2.0]);
    }

    #[test]
    fn ttl_expiry_blocks_relay() {
        let trace = trace_of(vec![(0, 1, 1.0, 1.5), (1, 2, 2.0, 3.0)], 3, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 2, 0.0, 1.8)]);
        assert_eq!(m.delivered, 0);
        assert_eq!(m.transmissions, 1); // only the first hop fit the TTL
    }

    #[test]
    fn flooding_complete_graph_infects_everyone_once() {
        // All pairs in contact simultaneously: the cascade copies the
        // message to all n-1 other nodes, one transmission each.
        let n = 6u32;
        let mut events = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                events.push((a, b, 1.0, 2.0));
            }
        }
        let trace = trace_of(events, n, 10.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 5, 0.0, 5.0)]);
        assert_eq!(m.transmissions, (n - 1) as u64);
        assert_eq!(m.delivered, 1);
    }

    #[test]
    fn repeated_contact_transmits_once_per_direction() {
        let trace = trace_of(vec![(0, 1, 1.0, 2.0), (0, 1, 5.0, 6.0)], 2, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 1, 0.0, 50.0)]);
        assert_eq!(m.transmissions, 1);
    }

    #[test]
    fn message_created_during_contact_still_spreads() {
        let trace = trace_of(vec![(0, 1, 0.0, 10.0)], 2, 100.0);
        let m = replay(&trace, &Flooding, &[msg(0, 0, 1, 5.0, 50.0)]);
        assert_eq!(m.delivered, 1);
        assert_eq!(m.latencies, vec![0.0]);
    }

    #[test]
    fn replay_is_deterministic() {
        let mut rng = RandomSource::new(3);
        let mut events = Vec::new();
        for _ in 0..200 {
            let a = rng.next_index(10) as u32;
            let mut b = rng.next_index(9) as u32;
            if b >= a {
                b += 1;
            }
            let t = rng.next_f64() * 1000.0;
            events.push((a.min(b), a.max(b), t, t + 10.0));
        }
        let trace = trace_of(events, 10, 1100.0);
        let msgs: Vec<Message> = (0..20).map(|i| msg(i, 0, 9, 10.0 * i as f64, 500.0)).collect();
        let m1 = replay(&trace, &Flooding, &msgs);
        let m2 = replay(&trace, &Flooding, &msgs);
        assert_eq!(m1.delivered, m2.delivered);
        assert_eq!(m1.transmissions, m2.transmissions);
        assert_eq!(m1.latencies, m2.latencies);
    }

    #[test]
    fn bubble_rap_rule_table() {
        // Communities {0,1} and {2,3}; ranks from the chain 0-1-2-3:
        // global degree 1,2,2,1; local degree 1 for everyone.
        let bubble = BubbleRap::from_parts(
            4,
            vec![vec![0, 1], vec![2, 3]],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let m = msg(0, 0, 3, 0.0, 100.0);
        // Carrier outside destination community:
        assert!(bubble.should_forward(0, 1, &m)); // higher global rank
        assert!(!bubble.should_forward(1, 0, &m)); // lower global rank
        assert!(bubble.should_forward(1, 2, &m)); // peer in dest community
        assert!(bubble.should_forward(1, 3, &m)); // peer is destination
        // Carrier inside destination community:
        assert!(!bubble.should_forward(2, 1, &m)); // local phase: peer outside
        assert!(!bubble.should_forward(2, 0, &m));
        assert!(bubble.should_forward(2, 3, &m)); // destination itself
    }

    #[test]
    fn bubble_rap_local_rank_climb() {
        // Community {1,2,3} with local degrees 1: 2, 2: 1, 3: 1 from edges
        // (1,2),(1,3). Destination 3.
        let bubble = BubbleRap::from_parts(
            4,
            vec![vec![1, 2, 3]],
            &[(1, 2), (1, 3)],
        );
        let m = msg(0, 0, 3, 0.0, 100.0);
        assert!(bubble.should_forward(2, 1, &m)); // climbs local rank 1 -> 2
        assert!(!bubble.should_forward(1, 2, &m)); // would descend
    }

    #[test]
    fn bubble_rap_scripted_replay() {
        let bubble = BubbleRap::from_parts(
            4,
            vec![vec![0, 1], vec![2, 3]],
            &[(0, 1), (1, 2), (2, 3)],
        );
        // Contacts: (0,1) then (2,0) then (1,2) then (2,3).
        let trace = trace_of(
            vec![
                (0, 1, 1.0, 1.5),
                (0, 2, 2.0, 2.5),
                (1, 2, 3.0, 3.5),
                (2, 3, 4.0, 4.5),
            ],
            4,
            10.0,
        );
        let m = replay(&trace, &bubble, &[msg(0, 0, 3, 0.0, 9.0)]);
        // Hand trace: 0->1 (rank climb), 0->2 (dest community),
        // 1->2 skipped (2 already holds), 2->3 delivery. 3 transmissions.
        assert_eq!(m.transmissions, 3);
        assert_eq!(m.delivered, 1);
        assert_eq!(m.latencies, vec![4.0]);
    }

    #[test]
    fn groups_net_degenerate_shared_group() {
        // Source and destination share the only group: path length 1;
        // copies go to co-members and the destination only.
        let gn = GroupsNet::from_parts(vec![vec![0, 1, 2]], vec![1.0]);
        let m = msg(0, 0, 2, 0.0, 100.0);
        assert!(gn.should_forward(0, 1, &m)); // co-member of final group
        assert!(gn.should_forward(0, 2, &m)); // destination
        assert!(!gn.should_forward(0, 3, &m)); // outsider
    }

    #[test]
    fn groups_net_bridge_path() {
        // Groups {0,1,2} and {2,3,4} share bridge node 2. Message 0 -> 4:
        // best path is the two-group chain; only the bridge and the
        // destination group receive copies.
        let gn = GroupsNet::from_parts(vec![vec![0, 1, 2], vec![2, 3, 4]], vec![1.0, 1.0]);
        let m = msg(0, 0, 4, 0.0, 100.0);
        assert!(!gn.should_forward(0, 1, &m)); // same index on path
        assert!(gn.should_forward(0, 2, &m)); // bridge advances the path
        assert!(gn.should_forward(2, 3, &m)); // destination-group member
        assert!(gn.should_forward(3, 4, &m)); // destination
        assert!(!gn.should_forward(3, 1, &m)); // backwards
    }

    #[test]
    fn groups_net_disconnected_direct_only() {
        let gn = GroupsNet::from_parts(vec![vec![0, 1], vec![3, 4]], vec![1.0, 1.0]);
        let m = msg(0, 0, 4, 0.0, 100.0);
        assert!(!gn.should_forward(0, 1, &m)); // no path to destination group
        assert!(gn.should_forward(0, 4, &m)); // direct contact still delivers
    }

    #[test]
    fn groups_net_no_group_fallback() {
        let gn = GroupsNet::from_parts(vec![vec![1, 2]], vec![1.0]);
        let m = msg(0, 0, 3, 0.0, 100.0); // neither endpoint in a group
        assert!(!gn.should_forward(0, 1, &m));
        assert!(gn.should_forward(0, 3, &m)); // destination contact
    }

    #[test]
    fn groups_net_prefers_probable_path() {
        // Two routes 0 -> 5: via group B (remeet 0.9, shares 2 members
        // with A) or via group C (remeet 0.1, shares 1 member). The
        // high-probability route through B must be selected.
        let gn = GroupsNet::from_parts(
            vec![
                vec![0, 1, 2],    // A (source)
                vec![1, 2, 5],    // B (dest, strong overlap)
                vec![0, 9],       // C' decoy
                vec![9, 5],       // C'' decoy (weak chain)
            ],
            vec![1.0, 0.9, 0.1, 0.1],
        );
        let m = msg(0, 0, 5, 0.0, 100.0);
        // Nodes on the A->B path advance it; decoy node 9 is off-path.
        assert!(gn.should_forward(0, 1, &m));
        assert!(!gn.should_forward(0, 9, &m));
    }

    #[test]
    fn ttl_sweep_shapes_and_monotonicity() {
        let mut rng = RandomSource::new(9);
        let n = 12u32;
        let mut events = Vec::new();
        for _ in 0..400 {
            let a = rng.next_index(n as usize) as u32;
            let mut b = rng.next_index(n as usize - 1) as u32;
            if b >= a {
                b += 1;
            }
            let t = rng.next_f64() * 100.0 * HOUR;
            events.push((a.min(b), a.max(b), t, t + 600.0));
        }
        let trace = trace_of(events, n, 100.0 * HOUR);
        let workload =
            generate_workload(n, 50, (30.0 * HOUR, 90.0 * HOUR), &mut rng).unwrap();

        let empty = ttl_sweep(&trace, &[&Flooding], &workload, &[]);
        assert!(empty.is_empty());

        let bubble =
            BubbleRap::from_warmup(&trace, 30.0 * HOUR, CentralityMode::Aggregate).unwrap();
        let gn = GroupsNet::from_warmup(
            &trace,
            30.0 * HOUR,
            &GroupsNetOptions {
                recency_window: 30.0 * HOUR,
                ..GroupsNetOptions::default()
            },
        )
        .unwrap();
        let protocols: Vec<&dyn Protocol> = vec![&Flooding, &bubble, &gn];
        let ttls = [2.0 * HOUR, 8.0 * HOUR, 24.0 * HOUR];
        let metrics = ttl_sweep(&trace, &protocols, &workload, &ttls);
        assert_eq!(metrics.len(), 9);

        for chunk in metrics.chunks(ttls.len()) {
            // Delivery monotone non-decreasing in TTL per protocol.
            for w in chunk.windows(2) {
                assert!(
                    w[1].delivery_ratio() >= w[0].delivery_ratio() - 1e-12,
                    "{}: delivery not monotone",
                    w[0].protocol
                );
            }
        }
        // Flooding dominance per TTL cell.
        let flooding = &metrics[0..ttls.len()];
        for other in metrics.chunks(ttls.len()).skip(1) {
            for (f, o) in flooding.iter().zip(other) {
                assert!(f.delivery_ratio() >= o.delivery_ratio());
                assert!(f.transmissions >= o.transmissions);
            }
        }
    }

    #[test]
    fn workload_is_valid_and_deterministic() {
        let mut rng = RandomSource::new(4);
        let w = generate_workload(10, 100, (0.0, 50.0), &mut rng).unwrap();
        assert_eq!(w.len(), 100);
        for spec in &w {
            assert_ne!(spec.source, spec.destination);
            assert!(spec.source < 10 && spec.destination < 10);
            assert!((0.0..=50.0).contains(&spec.created));
        }
        let mut rng = RandomSource::new(4);
        let w2 = generate_workload(10, 100, (0.0, 50.0), &mut rng).unwrap();
        assert_eq!(w[0].source, w2[0].source);
        assert_eq!(w[99].created, w2[99].created);
    }
}
