//! The static social network consumed by the generator, plus the snowball
//! sampling primitive that defines group membership.
//!
//! Four synthetic models are supported (Barabasi-Albert, Gaussian random
//! partition, caveman, fixed random partition) and graphs can be loaded
//! from a plain edge-list file. Graphs are simple and undirected; node ids
//! are dense 0..n-1.

use crate::stats::{sample_gaussian, RandomSource};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum SocialError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Simple undirected graph with optional ground-truth community labels.
#[derive(Debug, Clone)]
pub struct SocialGraph {
    node_count: u32,
    adjacency: Vec<Vec<NodeId>>, // sorted neighbor lists
    edge_count: usize,
    community_labels: Option<Vec<u32>>,
}

impl SocialGraph {
    /// Build from an edge set. Rejects self-loops, duplicates and
    /// out-of-range ids; a label vector must cover every node.
    pub fn from_edges(
        node_count: u32,
        edges: &[(NodeId, NodeId)],
        community_labels: Option<Vec<u32>>,
    ) -> Result<Self, SocialError> {
        if let Some(labels) = &community_labels {
            if labels.len() != node_count as usize {
                return Err(SocialError::InvalidParameter(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    node_count
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); node_count as usize];
        let mut seen = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(SocialError::InvalidParameter(format!("self-loop at {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(SocialError::InvalidParameter(format!(
                    "edge ({a},{b}) outside 0..{node_count}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(SocialError::InvalidParameter(format!(
                    "duplicate edge ({a},{b})"
                )));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            adjacency,
            edge_count: seen.len(),
            community_labels,
        })
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn community_labels(&self) -> Option<&[u32]> {
        self.community_labels.as_deref()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            let a = a as NodeId;
            list.iter().filter(move |&&b| a < b).map(move |&b| (a, b))
        })
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count as usize;
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start as NodeId];
            seen[start] = true;
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }
}

/// Preferential-attachment graph: a complete seed clique on m+1 nodes,
/// then each arriving node attaches m edges to distinct existing nodes
/// with probability proportional to degree.
pub fn generate_barabasi_albert(
    n: u32,
    m: u32,
    rng: &mut RandomSource,
) -> Result<SocialGraph, SocialError> {
    if m < 1 || m >= n {
        return Err(SocialError::InvalidParameter(format!(
            "need 1 <= m < n, got m={m} n={n}"
        )));
    }
    let mut edges = Vec::new();
    // Repeated-endpoint list: sampling uniformly from it is sampling
    // proportional to degree.
    let mut endpoints: Vec<NodeId> = Vec::new();
    for a in 0..=m {
        for b in (a + 1)..=m {
            edges.push((a, b));
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    for v in (m + 1)..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m as usize {
            let t = endpoints[rng.next_index(endpoints.len())];
            targets.insert(t);
        }
        for &t in &targets {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    SocialGraph::from_edges(n, &edges, None)
}

/// Clusters with Gaussian-distributed sizes (mean `mean_cluster_size`,
/// variance mean/shape), Bernoulli edges: p_in inside a cluster, p_out
/// across. Labels record the partition.
pub fn generate_gaussian_random_partition(
    n: u32,
    mean_cluster_size: f64,
    shape_parameter: f64,
    p_in: f64,
    p_out: f64,
    rng: &mut RandomSource,
) -> Result<SocialGraph, SocialError> {
    if mean_cluster_size < 1.0 {
        return Err(SocialError::InvalidParameter(format!(
            "mean cluster size must be >= 1, got {mean_cluster_size}"
        )));
    }
    if shape_parameter <= 0.0 {
        return Err(SocialError::InvalidParameter(format!(
            "shape parameter must be > 0, got {shape_parameter}"
        )));
    }
    check_partition_probs(p_in, p_out, true)?;
    let sigma2 = mean_cluster_size / shape_parameter;
    let mut sizes: Vec<u32> = Vec::new();
    let mut assigned: u64 = 0;
    while assigned < n as u64 {
        let draw = sample_gaussian(mean_cluster_size, sigma2, rng)
            .expect("sigma2 >= 0")
            .round()
            .max(1.0) as u64;
        let size = draw.min(n as u64 - assigned) as u32;
        sizes.push(size);
        assigned += size as u64;
    }
    partition_graph(&sizes, p_in, p_out, rng)
}

/// Disjoint cliques ("caves") of equal size; labels are the cave index.
pub fn generate_caveman(num_caves: u32, cave_size: u32) -> Result<SocialGraph, SocialError> {
    if num_caves < 1 || cave_size < 2 {
        return Err(SocialError::InvalidParameter(format!(
            "need num_caves >= 1 and cave_size >= 2, got {num_caves} and {cave_size}"
        )));
    }
    let n = num_caves * cave_size;
    let mut edges = Vec::new();
    let mut labels = vec![0u32; n as usize];
    for cave in 0..num_caves {
        let base = cave * cave_size;
        for i in 0..cave_size {
            labels[(base + i) as usize] = cave;
            for j in (i + 1)..cave_size {
                edges.push((base + i, base + j));
            }
        }
    }
    SocialGraph::from_edges(n, &edges, Some(labels))
}

/// Caveman with Watts-style rewiring: each clique edge is, with
/// probability `rewire`, re-pointed at a uniform random node elsewhere.
pub fn generate_caveman_rewired(
    num_caves: u32,
    cave_size: u32,
    rewire: f64,
    rng: &mut RandomSource,
) -> Result<SocialGraph, SocialError> {
    if !(0.0..=1.0).contains(&rewire) {
        return Err(SocialError::InvalidParameter(format!(
            "rewire probability must be in [0,1], got {rewire}"
        )));
    }
    let base = generate_caveman(num_caves, cave_size)?;
    if rewire == 0.0 {
        return Ok(base);
    }
    let n = base.node_count();
    let labels = base.community_labels().map(|l| l.to_vec());
    let mut edge_set: BTreeSet<(NodeId, NodeId)> = base.edges().collect();
    let original: Vec<(NodeId, NodeId)> = edge_set.iter().copied().collect();
    for (a, b) in original {
        if !rng.next_bool(rewire) {
            continue;
        }
        // Retarget b; keep the graph simple. Give up after a few tries on
        // pathological densities.
        for _ in 0..32 {
            let c = rng.next_index(n as usize) as NodeId;
            let key = (a.min(c), a.max(c));
            if c != a && !edge_set.contains(&key) {
                edge_set.remove(&(a.min(b), a.max(b)));
                edge_set.insert(key);
                break;
            }
        }
    }
    let edges: Vec<_> = edge_set.into_iter().collect();
    SocialGraph::from_edges(n, &edges, labels)
}

/// Fixed-size clusters with Bernoulli intra/inter edges.
pub fn generate_random_partition(
    cluster_sizes: &[u32],
    p_in: f64,
    p_out: f64,
    rng: &mut RandomSource,
) -> Result<SocialGraph, SocialError> {
    if cluster_sizes.is_empty() || cluster_sizes.iter().any(|&s| s == 0) {
        return Err(SocialError::InvalidParameter(
            "cluster sizes must be non-empty and positive".into(),
        ));
    }
    check_partition_probs(p_in, p_out, false)?;
    partition_graph(cluster_sizes, p_in, p_out, rng)
}

fn check_partition_probs(p_in: f64, p_out: f64, strict: bool) -> Result<(), SocialError> {
    let ok_range = (0.0..=1.0).contains(&p_in) && (0.0..=1.0).contains(&p_out);
    let ordered = if strict { p_out < p_in } else { p_out <= p_in };
    if !ok_range || !ordered {
        return Err(SocialError::InvalidParameter(format!(
            "need 0 <= p_out {} p_in <= 1, got p_in={p_in} p_out={p_out}",
            if strict { "<" } else { "<=" }
        )));
    }
    Ok(())
}

fn partition_graph(
    cluster_sizes: &[u32],
    p_in: f64,
    p_out: f64,
    rng: &mut RandomSource,
) -> Result<SocialGraph, SocialError> {
    let n: u64 = cluster_sizes.iter().map(|&s| s as u64).sum();
    let n = u32::try_from(n)
        .map_err(|_| SocialError::InvalidParameter("node count overflows u32".into()))?;
    let mut labels = vec![0u32; n as usize];
    let mut node = 0usize;
    for (cluster, &size) in cluster_sizes.iter().enumerate() {
        for _ in 0..size {
            labels[node] = cluster as u32;
            node += 1;
        }
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let p = if labels[a as usize] == labels[b as usize] {
                p_in
            } else {
                p_out
            };
            if rng.next_bool(p) {
                edges.push((a, b));
            }
        }
    }
    SocialGraph::from_edges(n, &edges, Some(labels))
}

/// Graph loaded from a file, with the dense renumbering map back to the
/// original ids.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: SocialGraph,
    /// original_ids[dense_id] = id as it appeared in the file.
    pub original_ids: Vec<u64>,
}

/// Read an edge-list file: one edge per line, two whitespace-separated
/// non-negative integer ids, `#` comments ignored. A third column
/// (weight) is accepted and ignored. Self-loops and duplicates are
/// dropped with a warning. Nodes are renumbered densely in order of
/// first appearance.
pub fn load_social_graph(path: &Path) -> Result<LoadedGraph, SocialError> {
    let reader = crate::trace::open_text(path)?;
    let mut original_ids: Vec<u64> = Vec::new();
    let mut index: std::collections::HashMap<u64, NodeId> = std::collections::HashMap::new();
    let mut dense = |raw: u64, ids: &mut Vec<u64>| -> NodeId {
        *index.entry(raw).or_insert_with(|| {
            ids.push(raw);
            (ids.len() - 1) as NodeId
        })
    };
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(SocialError::Parse {
                line: line_no,
                reason: format!("expected 2 or 3 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<u64, SocialError> {
            s.parse().map_err(|_| SocialError::Parse {
                line: line_no,
                reason: format!("not a non-negative integer: {s:?}"),
            })
        };
        let (ra, rb) = (parse(fields[0])?, parse(fields[1])?);
        if ra == rb {
            log::warn!("{}:{line_no}: dropping self-loop {ra}", path.display());
            continue;
        }
        let a = dense(ra, &mut original_ids);
        let b = dense(rb, &mut original_ids);
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            log::warn!(
                "{}:{line_no}: dropping duplicate edge {ra} {rb}",
                path.display()
            );
            continue;
        }
        edges.push(key);
    }
    let graph = SocialGraph::from_edges(original_ids.len() as u32, &edges, None)?;
    Ok(LoadedGraph {
        graph,
        original_ids,
    })
}

/// Write an edge-list file readable by [`load_social_graph`].
pub fn save_social_graph(graph: &SocialGraph, path: &Path) -> Result<(), SocialError> {
    let mut out = String::new();
    writeln!(out, "# social graph: {} nodes", graph.node_count()).ok();
    for (a, b) in graph.edges() {
        writeln!(out, "{a} {b}").ok();
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a `node_id community_id` label file and map it onto the loaded
/// graph's dense ids. Every node must be covered.
pub fn load_community_labels(path: &Path, loaded: &LoadedGraph) -> Result<Vec<u32>, SocialError> {
    let reader = crate::trace::open_text(path)?;
    let mut by_original: std::collections::HashMap<u64, u32> = std::collections::HashMap::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(SocialError::Parse {
                line: line_no,
                reason: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let node: u64 = fields[0].parse().map_err(|_| SocialError::Parse {
            line: line_no,
            reason: format!("bad node id {:?}", fields[0]),
        })?;
        let comm: u32 = fields[1].parse().map_err(|_| SocialError::Parse {
            line: line_no,
            reason: format!("bad community id {:?}", fields[1]),
        })?;
        by_original.insert(node, comm);
    }
    loaded
        .original_ids
        .iter()
        .map(|raw| {
            by_original.get(raw).copied().ok_or_else(|| {
                SocialError::InvalidParameter(format!("node {raw} has no community label"))
            })
        })
        .collect()
}

/// Result of a snowball expansion.
#[derive(Debug, Clone)]
pub struct SnowballSample {
    /// Sorted member ids; always contains the seed.
    pub members: Vec<NodeId>,
    /// True when the seed's component was smaller than the target size.
    pub truncated: bool,
}

/// Grow a connected node set from `seed_node` to `target_size` members.
///
/// Each step picks a uniform random current member that still has
/// unvisited neighbors, then a uniform random unvisited neighbor of it.
/// If the component is exhausted first, the whole component is returned
/// with `truncated` set.
pub fn snowball_sample(
    graph: &SocialGraph,
    seed_node: NodeId,
    target_size: usize,
    rng: &mut RandomSource,
) -> Result<SnowballSample, SocialError> {
    if seed_node >= graph.node_count() {
        return Err(SocialError::InvalidParameter(format!(
            "seed node {seed_node} outside graph"
        )));
    }
    if target_size < 1 || target_size > graph.node_count() as usize {
        return Err(SocialError::InvalidParameter(format!(
            "target size {target_size} outside 1..={}",
            graph.node_count()
        )));
    }
    let mut in_set = vec![false; graph.node_count() as usize];
    in_set[seed_node as usize] = true;
    let mut members = vec![seed_node];
    while members.len() < target_size {
        let expandable: Vec<NodeId> = members
            .iter()
            .copied()
            .filter(|&m| graph.neighbors(m).iter().any(|&w| !in_set[w as usize]))
            .collect();
        if expandable.is_empty() {
            members.sort_unstable();
            return Ok(SnowballSample {
                members,
                truncated: true,
            });
        }
        let from = expandable[rng.next_index(expandable.len())];
        let candidates: Vec<NodeId> = graph
            .neighbors(from)
            .iter()
            .copied()
            .filter(|&w| !in_set[w as usize])
            .collect();
        let next = candidates[rng.next_index(candidates.len())];
        in_set[next as usize] = true;
        members.push(next);
    }
    members.sort_unstable();
    Ok(SnowballSample {
        members,
        truncated: false,
    })
}

/// Number of `members` (other than `user`) that share a social edge with
/// `user`. `user` must itself be a member.
pub fn known_count(
    graph: &SocialGraph,
    user: NodeId,
    members: &[NodeId],
) -> Result<u32, SocialError> {
    if !members.contains(&user) {
        return Err(SocialError::Contract(format!(
            "user {user} is not in the member set"
        )));
    }
    Ok(members
        .iter()
        .filter(|&&m| m != user && graph.has_edge(user, m))
        .count() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ba_seed_clique_only() {
        let mut rng = RandomSource::new(1);
        let g = generate_barabasi_albert(4, 3, &mut rng).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 6); // K4
    }

    #[test]
    fn ba_edge_count_formula() {
        let mut rng = RandomSource::new(2);
        let (n, m) = (100u32, 2u32);
        let g = generate_barabasi_albert(n, m, &mut rng).unwrap();
        let clique = (m + 1) * m / 2;
        assert_eq!(g.edge_count() as u32, clique + m * (n - (m + 1)));
    }

    #[test]
    fn ba_degree_distribution_heavy_tailed() {
        let mut rng = RandomSource::new(3);
        let g = generate_barabasi_albert(1000, 3, &mut rng).unwrap();
        let mut degrees: Vec<usize> = (0..1000).map(|v| g.degree(v)).collect();
        degrees.sort_unstable();
        let median = degrees[500];
        let max = *degrees.last().unwrap();
        assert!(
            max > 5 * median,
            "max degree {max} vs median {median} not heavy-tailed"
        );
    }

    #[test]
    fn ba_rejects_m_out_of_range() {
        let mut rng = RandomSource::new(4);
        assert!(generate_barabasi_albert(5, 5, &mut rng).is_err());
        assert!(generate_barabasi_albert(5, 0, &mut rng).is_err());
    }

    #[test]
    fn grp_degenerate_single_clique() {
        let mut rng = RandomSource::new(5);
        let g = generate_gaussian_random_partition(10, 10.0, 100.0, 1.0, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 45);
        let labels = g.community_labels().unwrap();
        // With mean 10 and tiny variance, all ten nodes share one cluster.
        assert!(labels.iter().all(|&l| l == labels[0]));
    }

    #[test]
    fn grp_intra_cluster_degree_matches_expectation() {
        // Mean intra-cluster degree ~ p_in * (cluster size - 1) within 15%
        // pooled over 20 seeds.
        let mut total_ratio = 0.0;
        for seed in 0..20 {
            let mut rng = RandomSource::new(100 + seed);
            let g =
                generate_gaussian_random_partition(100, 20.0, 10.0, 0.5, 0.01, &mut rng).unwrap();
            let labels = g.community_labels().unwrap();
            let mut expected = 0.0;
            let mut actual = 0.0;
            for v in 0..g.node_count() {
                let size = labels.iter().filter(|&&l| l == labels[v as usize]).count();
                expected += 0.5 * (size as f64 - 1.0);
                actual += g
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| labels[w as usize] == labels[v as usize])
                    .count() as f64;
            }
            total_ratio += actual / expected;
        }
        let ratio = total_ratio / 20.0;
        assert!((ratio - 1.0).abs() < 0.15, "intra-degree ratio {ratio}");
    }

    #[test]
    fn grp_no_inter_edges_means_components_stay_in_clusters() {
        let mut rng = RandomSource::new(6);
        let g = generate_gaussian_random_partition(100, 20.0, 10.0, 0.5, 0.0, &mut rng).unwrap();
        let labels = g.community_labels().unwrap();
        let clusters: BTreeSet<u32> = labels.iter().copied().collect();
        // p_in = 0.5 can split a cluster into several components, so check
        // containment: no component spans two clusters, and there are at
        // least as many components as clusters.
        let comps = g.connected_components();
        for comp in &comps {
            let l = labels[comp[0] as usize];
            assert!(comp.iter().all(|&v| labels[v as usize] == l));
        }
        assert!(comps.len() >= clusters.len());
    }

    #[test]
    fn grp_full_density_components_equal_clusters() {
        let mut rng = RandomSource::new(61);
        let g = generate_gaussian_random_partition(100, 20.0, 10.0, 1.0, 0.0, &mut rng).unwrap();
        let labels = g.community_labels().unwrap();
        let clusters: BTreeSet<u32> = labels.iter().copied().collect();
        assert_eq!(g.connected_components().len(), clusters.len());
    }

    #[test]
    fn caveman_counts() {
        let g = generate_caveman(5, 4).unwrap();
        assert_eq!(g.node_count(), 20);
        assert_eq!(g.edge_count(), 30);
        assert_eq!(g.connected_components().len(), 5);
        let g = generate_caveman(1, 6).unwrap();
        assert_eq!(g.edge_count(), 15); // K6
        let g = generate_caveman(2, 2).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.connected_components().len(), 2);
    }

    #[test]
    fn caveman_rewired_keeps_edge_count() {
        let mut rng = RandomSource::new(9);
        let g = generate_caveman_rewired(5, 4, 0.3, &mut rng).unwrap();
        assert_eq!(g.node_count(), 20);
        assert_eq!(g.edge_count(), 30);
    }

    #[test]
    fn random_partition_degenerate_cases() {
        let mut rng = RandomSource::new(7);
        let g = generate_random_partition(&[3, 3], 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 15); // K6
        let g = generate_random_partition(&[5, 5], 1.0, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 20); // two K5
        assert_eq!(g.connected_components().len(), 2);
        assert!(generate_random_partition(&[], 0.5, 0.1, &mut rng).is_err());
    }

    #[test]
    fn random_partition_inter_edge_count() {
        // Two clusters of 10: 100 cross pairs, expected 5 inter edges per
        // seed at p_out = 0.05. Pool 50 seeds and allow 3 sigma.
        let mut total = 0usize;
        for seed in 0..50 {
            let mut rng = RandomSource::new(1000 + seed);
            let g = generate_random_partition(&[10, 10], 0.3, 0.05, &mut rng).unwrap();
            let labels = g.community_labels().unwrap();
            total += g
                .edges()
                .filter(|&(a, b)| labels[a as usize] != labels[b as usize])
                .count();
        }
        let expected = 50.0 * 100.0 * 0.05;
        let sigma = (50.0 * 100.0 * 0.05 * 0.95_f64).sqrt();
        assert!(
            (total as f64 - expected).abs() <= 3.0 * sigma,
            "inter-cluster edges {total} vs expected {expected}"
        );
    }

    #[test]
    fn load_save_round_trip() {
        let mut rng = RandomSource::new(8);
        let g = generate_barabasi_albert(100, 2, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.txt");
        save_social_graph(&g, &path).unwrap();
        let loaded = load_social_graph(&path).unwrap();
        let a: BTreeSet<_> = g.edges().collect();
        let b: BTreeSet<_> = loaded
            .graph
            .edges()
            .map(|(x, y)| {
                let (ox, oy) = (
                    loaded.original_ids[x as usize] as NodeId,
                    loaded.original_ids[y as usize] as NodeId,
                );
                (ox.min(oy), ox.max(oy))
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn load_parses_and_dedups() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "# comment\n0 1\n1 2\n").unwrap();
        let loaded = load_social_graph(&path).unwrap();
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.edge_count(), 2);

        std::fs::write(&path, "0 1\n0 1\n").unwrap();
        let loaded = load_social_graph(&path).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);

        std::fs::write(&path, "0 1\nnot numbers\n").unwrap();
        match load_social_graph(&path) {
            Err(SocialError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn snowball_trivial_cases() {
        let mut rng = RandomSource::new(10);
        let g = generate_caveman(1, 5).unwrap();
        let s = snowball_sample(&g, 2, 1, &mut rng).unwrap();
        assert_eq!(s.members, vec![2]);
        assert!(!s.truncated);
        let s = snowball_sample(&g, 0, 5, &mut rng).unwrap();
        assert_eq!(s.members, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn snowball_truncates_to_component() {
        let mut rng = RandomSource::new(11);
        let g = generate_caveman(2, 3).unwrap(); // components of 3
        let s = snowball_sample(&g, 0, 5, &mut rng).unwrap();
        assert_eq!(s.members, vec![0, 1, 2]);
        assert!(s.truncated);
    }

    #[test]
    fn snowball_path_graph_symmetry() {
        // Path 0-1-2-3-4, seed 2, target 3: nodes 1 and 3 are symmetric and
        // must appear in (close to) equal fractions of samples.
        let g = SocialGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], None).unwrap();
        let mut count1 = 0;
        let mut count3 = 0;
        let runs = 2000;
        for seed in 0..runs {
            let mut rng = RandomSource::new(seed);
            let s = snowball_sample(&g, 2, 3, &mut rng).unwrap();
            assert_eq!(s.members.len(), 3);
            assert!(s.members.contains(&2));
            if s.members.contains(&1) {
                count1 += 1;
            }
            if s.members.contains(&3) {
                count3 += 1;
            }
        }
        let (f1, f3) = (count1 as f64 / runs as f64, count3 as f64 / runs as f64);
        assert!((f1 - f3).abs() < 0.05, "asymmetry: {f1} vs {f3}");
    }

    #[test]
    fn known_count_cases() {
        let g = generate_caveman(1, 5).unwrap();
        assert_eq!(known_count(&g, 0, &[0, 1, 2, 3, 4]).unwrap(), 4);
        assert_eq!(known_count(&g, 0, &[0]).unwrap(), 0);
        assert!(known_count(&g, 0, &[1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn snowball_always_connected(seed in 0u64..500, target in 1usize..30) {
            let mut rng = RandomSource::new(seed);
            let g = generate_barabasi_albert(30, 2, &mut rng).unwrap();
            let seed_node = rng.next_index(30) as NodeId;
            let s = snowball_sample(&g, seed_node, target, &mut rng).unwrap();
            prop_assert!(s.members.contains(&seed_node));
            prop_assert_eq!(s.members.len(), target); // BA graph is connected
            // Induced subgraph must be connected.
            let member_set: BTreeSet<NodeId> = s.members.iter().copied().collect();
            let mut seen = BTreeSet::new();
            let mut stack = vec![seed_node];
            seen.insert(seed_node);
            while let Some(v) = stack.pop() {
                for &w in g.neighbors(v) {
                    if member_set.contains(&w) && seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            prop_assert_eq!(seen.len(), s.members.len());
        }

        #[test]
        fn snowball_members_know_someone(seed in 0u64..200) {
            let mut rng = RandomSource::new(seed);
            let g = generate_barabasi_albert(40, 2, &mut rng).unwrap();
            let s = snowball_sample(&g, 0, 6, &mut rng).unwrap();
            for &m in &s.members {
                if s.members.len() > 1 {
                    prop_assert!(known_count(&g, m, &s.members).unwrap() >= 1);
                }
            }
        }

        #[test]
        fn generators_satisfy_graph_invariants(seed in 0u64..100) {
            let mut rng = RandomSource::new(seed);
            let n = 20 + (seed % 30) as u32;
            let g = generate_gaussian_random_partition(n, 8.0, 4.0, 0.6, 0.05, &mut rng).unwrap();
            prop_assert_eq!(g.community_labels().unwrap().len(), n as usize);
            // No self-loops or duplicates by construction; adjacency symmetric.
            for v in 0..n {
                for &w in g.neighbors(v) {
                    prop_assert!(w != v);
                    prop_assert!(g.has_edge(w, v));
                }
            }
        }
    }
}
