//! Characterization of contact traces: inter-contact time and contact
//! duration samples with their CCDFs, group detection and tracking,
//! the group re-meeting histogram, clique-percolation communities, and
//! automatic extraction of the generator's statistical parameters from a
//! trace.

use crate::social::NodeId;
use crate::stats::{ks_statistic, mle_fit_tpl, StatsError, TruncatedPowerLaw};
use crate::trace::ContactTrace;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Inter-contact times: for every pair with at least two contacts, the
/// gaps between consecutive contacts.
pub fn intercontact_samples(trace: &ContactTrace) -> Vec<f64> {
    let mut last_end: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut gaps = Vec::new();
    for e in trace.events() {
        if let Some(prev) = last_end.get(&(e.a, e.b)) {
            gaps.push(e.t_start - prev);
        }
        last_end.insert((e.a, e.b), e.t_end);
    }
    gaps
}

/// Contact durations of every event.
pub fn contact_duration_samples(trace: &ContactTrace) -> Vec<f64> {
    trace.events().iter().map(|e| e.t_end - e.t_start).collect()
}

/// Complementary cumulative distribution: for each distinct sample value,
/// the fraction of samples strictly greater.
#[derive(Debug, Clone)]
pub struct Ccdf {
    points: Vec<(f64, f64)>,
}

impl Ccdf {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut xs = samples.to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut points = Vec::new();
        let mut i = 0;
        while i < xs.len() {
            let v = xs[i];
            let mut j = i;
            while j < xs.len() && xs[j] == v {
                j += 1;
            }
            points.push((v, (xs.len() - j) as f64 / n));
            i = j;
        }
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// A group observed in a contact trace: the union of all attendees seen,
/// plus the time-sorted meeting occurrences.
#[derive(Debug, Clone)]
pub struct DetectedGroup {
    pub id: u32,
    /// Union of attendees over all occurrences, sorted.
    pub members: Vec<NodeId>,
    pub occurrences: Vec<Occurrence>,
}

/// One tracked meeting of a detected group, snapped to the detection
/// windows it spans.
#[derive(Debug, Clone)]
pub struct Occurrence {
    pub t_start: f64,
    pub t_end: f64,
    /// Attendees of this occurrence, sorted.
    pub attendees: Vec<NodeId>,
}

fn jaccard(a: &[NodeId], b: &[NodeId]) -> (f64, usize) {
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    (inter as f64 / union as f64, inter)
}

fn union_sorted(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = a.iter().chain(b.iter()).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Detect and track groups in a contact trace.
///
/// Time is split into consecutive windows. Within each window, nodes
/// whose contacts overlap the window form a graph; connected components
/// of at least `min_size` nodes are group occurrences. An occurrence is
/// linked to an existing group when the Jaccard similarity between its
/// attendee set and the group's member union reaches `threshold`
/// (greedy best-match; ties broken by larger overlap, then lower group
/// id). Occurrences of one group in consecutive windows merge into one
/// continuous occurrence.
pub fn detect_groups(
    trace: &ContactTrace,
    window: f64,
    min_size: usize,
    similarity_threshold: f64,
) -> Result<Vec<DetectedGroup>, AnalysisError> {
    if !(window > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "window must be positive, got {window}"
        )));
    }
    if min_size < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "min_size must be >= 2, got {min_size}"
        )));
    }
    if !(similarity_threshold > 0.0 && similarity_threshold <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "similarity threshold must be in (0,1], got {similarity_threshold}"
        )));
    }

    // Bucket each contact into every window it overlaps with positive
    // measure.
    let num_windows = (trace.horizon() / window).ceil() as usize;
    let mut window_edges: BTreeMap<usize, Vec<(NodeId, NodeId)>> = BTreeMap::new();
    for e in trace.events() {
        let first = (e.t_start / window).floor() as usize;
        let last = ((e.t_end / window).ceil() as usize).max(first + 1) - 1;
        for k in first..=last.min(num_windows.saturating_sub(1)) {
            let w_start = k as f64 * window;
            let w_end = w_start + window;
            if e.t_start < w_end && e.t_end > w_start {
                window_edges.entry(k).or_default().push((e.a, e.b));
            }
        }
    }

    struct Tracked {
        members: Vec<NodeId>,
        occurrences: Vec<Occurrence>,
        last_window: usize,
    }
    let mut tracked: Vec<Tracked> = Vec::new();

    for (&k, edges) in &window_edges {
        // Connected components among the nodes contacting in this window.
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        fn find(parent: &mut BTreeMap<NodeId, NodeId>, x: NodeId) -> NodeId {
            let p = *parent.entry(x).or_insert(x);
            if p == x {
                return x;
            }
            let root = find(parent, p);
            parent.insert(x, root);
            root
        }
        for &(a, b) in edges {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let mut comps: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let nodes: Vec<NodeId> = parent.keys().copied().collect();
        for x in nodes {
            let root = find(&mut parent, x);
            comps.entry(root).or_default().push(x);
        }
        let mut occurrences: Vec<Vec<NodeId>> = comps
            .into_values()
            .filter(|c| c.len() >= min_size)
            .collect();
        occurrences.sort();

        // Greedy best-match linking against existing groups.
        let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new(); // (sim, inter, group, occ)
        for (oi, occ) in occurrences.iter().enumerate() {
            for (gi, g) in tracked.iter().enumerate() {
                if g.last_window == k {
                    continue; // already extended in this window
                }
                let (sim, inter) = jaccard(occ, &g.members);
                if sim >= similarity_threshold {
                    candidates.push((sim, inter, gi, oi));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(b.1.cmp(&a.1))
                .then(a.2.cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        let mut group_taken = vec![false; tracked.len()];
        let mut occ_taken = vec![false; occurrences.len()];
        let w_start = k as f64 * window;
        let w_end = w_start + window;
        for (_, _, gi, oi) in candidates {
            if group_taken[gi] || occ_taken[oi] {
                continue;
            }
            group_taken[gi] = true;
            occ_taken[oi] = true;
            let g = &mut tracked[gi];
            let attendees = occurrences[oi].clone();
            if g.last_window + 1 == k {
                // Continuous presence across the window boundary.
                let last = g.occurrences.last_mut().unwrap();
                last.t_end = w_end;
                last.attendees = union_sorted(&last.attendees, &attendees);
            } else {
                g.occurrences.push(Occurrence {
                    t_start: w_start,
                    t_end: w_end,
                    attendees: attendees.clone(),
                });
            }
            g.members = union_sorted(&g.members, &attendees);
            g.last_window = k;
        }
        for (oi, occ) in occurrences.iter().enumerate() {
            if occ_taken[oi] {
                continue;
            }
            tracked.push(Tracked {
                members: occ.clone(),
                occurrences: vec![Occurrence {
                    t_start: w_start,
                    t_end: w_end,
                    attendees: occ.clone(),
                }],
                last_window: k,
            });
        }
    }

    Ok(tracked
        .into_iter()
        .enumerate()
        .map(|(id, t)| DetectedGroup {
            id: id as u32,
            members: t.members,
            occurrences: t.occurrences,
        })
        .collect())
}

/// Normalized histogram of re-meeting gaps.
#[derive(Debug, Clone)]
pub struct RemeetingHistogram {
    pub bin: f64,
    /// mass[i] covers gaps in [i*bin, (i+1)*bin); sums to 1 when any gap
    /// was observed.
    pub mass: Vec<f64>,
}

impl RemeetingHistogram {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass within +-tol of any positive multiple of `period`.
    pub fn mass_near_multiples(&self, period: f64, tol: f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let center = (*i as f64 + 0.5) * self.bin;
                let k = (center / period).round();
                k >= 1.0 && (center - k * period).abs() <= tol
            })
            .map(|(_, m)| m)
            .sum()
    }

    /// Mass in [lo, hi), by bin centers.
    pub fn mass_in_range(&self, lo: f64, hi: f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let center = (*i as f64 + 0.5) * self.bin;
                center >= lo && center < hi
            })
            .map(|(_, m)| m)
            .sum()
    }
}

/// Histogram of gaps between consecutive occurrence starts of each group,
/// over [0, horizon], normalized to unit mass.
pub fn remeeting_pdf(
    groups: &[DetectedGroup],
    bin: f64,
    horizon: f64,
) -> Result<RemeetingHistogram, AnalysisError> {
    if !(bin > 0.0) || !(horizon > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "bin and horizon must be positive, got {bin} and {horizon}"
        )));
    }
    let nbins = (horizon / bin).ceil() as usize;
    let mut mass = vec![0.0; nbins];
    let mut total = 0usize;
    for g in groups {
        for w in g.occurrences.windows(2) {
            let gap = w[1].t_start - w[0].t_start;
            if gap >= horizon {
                continue;
            }
            let idx = ((gap / bin).floor() as usize).min(nbins - 1);
            mass[idx] += 1.0;
            total += 1;
        }
    }
    if total > 0 {
        for m in &mut mass {
            *m /= total as f64;
        }
    }
    Ok(RemeetingHistogram { bin, mass })
}

/// Re-meeting gaps themselves (seconds), for parameter extraction.
pub fn remeeting_gaps(groups: &[DetectedGroup]) -> Vec<f64> {
    let mut gaps = Vec::new();
    for g in groups {
        for w in g.occurrences.windows(2) {
            gaps.push(w[1].t_start - w[0].t_start);
        }
    }
    gaps
}

/// Overlapping communities by the k-clique percolation method on the
/// aggregated contact graph (an edge wherever a pair has any contact).
pub fn clique_percolation(
    trace: &ContactTrace,
    k: usize,
) -> Result<Vec<Vec<NodeId>>, AnalysisError> {
    clique_percolation_filtered(trace, k, 0.0)
}

/// Clique percolation with a minimum total-contact-time edge filter.
pub fn clique_percolation_filtered(
    trace: &ContactTrace,
    k: usize,
    min_total_contact: f64,
) -> Result<Vec<Vec<NodeId>>, AnalysisError> {
    if k < 3 {
        return Err(AnalysisError::InvalidParameter(format!(
            "clique size k must be >= 3, got {k}"
        )));
    }
    let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for ((a, b), total) in trace.aggregated_graph() {
        if total >= min_total_contact {
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
    }
    let cliques = maximal_cliques(&adjacency);
    let big: Vec<&Vec<NodeId>> = cliques.iter().filter(|c| c.len() >= k).collect();

    // Cliques of size >= k belong to one community when chained by
    // overlaps of at least k-1 nodes.
    let mut parent: Vec<usize> = (0..big.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..big.len() {
        for j in (i + 1)..big.len() {
            let (_, inter) = jaccard(big[i], big[j]);
            if inter >= k - 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut communities: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for i in 0..big.len() {
        let root = find(&mut parent, i);
        communities
            .entry(root)
            .or_default()
            .extend(big[i].iter().copied());
    }
    let mut out: Vec<Vec<NodeId>> = communities
        .into_values()
        .map(|s| s.into_iter().collect())
        .collect();
    out.sort();
    Ok(out)
}

/// Bron-Kerbosch with pivoting over a sorted adjacency map.
fn maximal_cliques(adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> Vec<Vec<NodeId>> {
    let mut cliques = Vec::new();
    let mut r: Vec<NodeId> = Vec::new();
    let p: BTreeSet<NodeId> = adjacency.keys().copied().collect();
    let x: BTreeSet<NodeId> = BTreeSet::new();
    fn expand(
        adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>,
        r: &mut Vec<NodeId>,
        mut p: BTreeSet<NodeId>,
        mut x: BTreeSet<NodeId>,
        cliques: &mut Vec<Vec<NodeId>>,
    ) {
        if p.is_empty() && x.is_empty() {
            let mut clique = r.clone();
            clique.sort_unstable();
            cliques.push(clique);
            return;
        }
        // Pivot on the candidate covering the most of P.
        let pivot = p
            .iter()
            .chain(x.iter())
            .copied()
            .max_by_key(|v| adjacency[v].intersection(&p).count())
            .unwrap();
        let rest: Vec<NodeId> = p.difference(&adjacency[&pivot]).copied().collect();
        for v in rest {
            let neighbors = &adjacency[&v];
            r.push(v);
            expand(
                adjacency,
                r,
                p.intersection(neighbors).copied().collect(),
                x.intersection(neighbors).copied().collect(),
                cliques,
            );
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    expand(adjacency, &mut r, p, x, &mut cliques);
    cliques
}

/// One fitted truncated power law with its fit quality.
#[derive(Debug, Clone)]
pub struct FittedTpl {
    pub alpha: f64,
    pub beta: f64,
    pub x_min: f64,
    pub ks: f64,
    pub n_samples: usize,
    pub degenerate: bool,
}

/// Statistical parameters recovered from a trace. Every field is
/// optional: a missing value means the trace did not carry enough data
/// for that family, with the reason recorded in `notes`.
#[derive(Debug, Clone, Default)]
pub struct ExtractedParams {
    /// Contact-duration law, seconds.
    pub duration: Option<FittedTpl>,
    /// Inter-meeting multiplier law, in units of the dominant K.
    pub gmt: Option<FittedTpl>,
    /// Group-size law.
    pub size: Option<FittedTpl>,
    /// (K seconds, share), descending by share.
    pub k_shares: Option<Vec<(f64, f64)>>,
    pub dominant_k: Option<f64>,
    pub detected_groups: usize,
    pub notes: Vec<String>,
}

/// Knobs for [`extract_parameters`]; `Default` matches the generator's
/// conventions.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub window: f64,
    pub min_size: usize,
    pub similarity_threshold: f64,
    /// Candidate regularity periods with their matching tolerances,
    /// seconds; tried largest first so weekly gaps are not swallowed by
    /// the daily bucket.
    pub candidate_periods: Vec<(f64, f64)>,
    /// Lower support for time-valued fits, seconds.
    pub x_min_time: f64,
    /// Minimum detected groups for a size fit.
    pub min_groups: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        const HOUR: f64 = 3600.0;
        Self {
            window: HOUR,
            min_size: 2,
            similarity_threshold: 0.5,
            // Tolerances are capped at a quarter period: a +-3 h window on
            // the 6 h period would tile the whole axis and turn that share
            // into a catch-all for arbitrary tracking noise.
            candidate_periods: vec![
                (7.0 * 24.0 * HOUR, 12.0 * HOUR),
                (24.0 * HOUR, 3.0 * HOUR),
                (6.0 * HOUR, 1.5 * HOUR),
            ],
            x_min_time: 60.0,
            min_groups: 50,
        }
    }
}

/// Recover the generator's statistical parameters from a trace:
/// duration law from contact durations, size law from detected group
/// sizes, K shares from re-meeting gap classification, and the
/// inter-meeting multiplier law from gaps rescaled by the dominant K.
pub fn extract_parameters(
    trace: &ContactTrace,
    window: f64,
    min_size: usize,
) -> Result<ExtractedParams, AnalysisError> {
    extract_parameters_with(
        trace,
        &ExtractOptions {
            window,
            min_size,
            ..ExtractOptions::default()
        },
    )
}

pub fn extract_parameters_with(
    trace: &ContactTrace,
    opts: &ExtractOptions,
) -> Result<ExtractedParams, AnalysisError> {
    let mut out = ExtractedParams::default();

    let durations: Vec<f64> = contact_duration_samples(trace)
        .into_iter()
        .filter(|&d| d >= opts.x_min_time)
        .collect();
    match mle_fit_tpl(&durations, opts.x_min_time) {
        Ok(fit) => {
            let ks = ks_statistic(&durations, &fit.dist)?;
            out.duration = Some(FittedTpl {
                alpha: fit.dist.alpha,
                beta: fit.dist.beta,
                x_min: opts.x_min_time,
                ks,
                n_samples: durations.len(),
                degenerate: fit.degenerate,
            });
        }
        Err(e) => out.notes.push(format!("duration fit unavailable: {e}")),
    }

    if trace.is_empty() {
        out.notes.push("empty trace: no groups detected".into());
        return Ok(out);
    }

    let groups = detect_groups(trace, opts.window, opts.min_size, opts.similarity_threshold)?;
    out.detected_groups = groups.len();

    // Size samples come from groups that actually re-met: one-off
    // detections are dominated by co-presence coincidences. The median
    // attendance of a group estimates its size minus one (per-member
    // attendance approaches (s-1)/s), hence the +1 correction; the
    // accumulated member union overstates the size whenever distinct
    // groups share members.
    let sizes: Vec<f64> = groups
        .iter()
        .filter(|g| g.occurrences.len() >= 2)
        .map(|g| {
            let mut counts: Vec<usize> =
                g.occurrences.iter().map(|o| o.attendees.len()).collect();
            counts.sort_unstable();
            (counts[counts.len() / 2] + 1) as f64
        })
        .collect();
    if sizes.len() >= opts.min_groups {
        // The exponent of a truncated power law does not depend on where
        // the support starts, so fit from the smallest estimate.
        let x_min_size = sizes.iter().copied().fold(f64::INFINITY, f64::min);
        match mle_fit_tpl(&sizes, x_min_size) {
            Ok(fit) => {
                let ks = ks_statistic(&sizes, &fit.dist)?;
                out.size = Some(FittedTpl {
                    alpha: fit.dist.alpha,
                    beta: fit.dist.beta,
                    x_min: x_min_size,
                    ks,
                    n_samples: sizes.len(),
                    degenerate: fit.degenerate,
                });
            }
            Err(e) => out.notes.push(format!("size fit unavailable: {e}")),
        }
    } else {
        out.notes.push(format!(
            "size fit unavailable: {} re-meeting groups, need {}",
            sizes.len(),
            opts.min_groups
        ));
    }

    // Classify gaps against candidate periods, largest period first.
    let gaps = remeeting_gaps(&groups);
    let mut period_mass: Vec<(f64, usize)> =
        opts.candidate_periods.iter().map(|&(p, _)| (p, 0)).collect();
    let mut assigned: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut classified = 0usize;
    for &gap in &gaps {
        for (pi, &(period, tol)) in opts.candidate_periods.iter().enumerate() {
            let k = (gap / period).round();
            if k >= 1.0 && (gap - k * period).abs() <= tol {
                period_mass[pi].1 += 1;
                classified += 1;
                assigned.entry(period.to_bits()).or_default().push(gap);
                break;
            }
        }
    }
    if classified > 0 {
        let mut shares: Vec<(f64, f64)> = period_mass
            .iter()
            .map(|&(p, c)| (p, c as f64 / classified as f64))
            .collect();
        shares.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        out.dominant_k = Some(shares[0].0);
        out.k_shares = Some(shares);
    } else {
        out.notes
            .push("K shares unavailable: no gaps near candidate periods".into());
    }

    if let Some(dominant) = out.dominant_k {
        // Rescale the dominant-period gaps into multiplier units; the
        // model multiplier is >= 1, so sub-period gaps are window noise.
        let rescaled: Vec<f64> = assigned
            .get(&dominant.to_bits())
            .map(|gaps| {
                gaps.iter()
                    .map(|g| g / dominant)
                    .filter(|&m| m >= 1.0)
                    .collect()
            })
            .unwrap_or_default();
        match mle_fit_tpl(&rescaled, 1.0) {
            Ok(fit) => {
                let ks = ks_statistic(&rescaled, &fit.dist)?;
                out.gmt = Some(FittedTpl {
                    alpha: fit.dist.alpha,
                    beta: fit.dist.beta,
                    x_min: 1.0,
                    ks,
                    n_samples: rescaled.len(),
                    degenerate: fit.degenerate,
                });
            }
            Err(e) => out.notes.push(format!("inter-meeting fit unavailable: {e}")),
        }
    }

    Ok(out)
}

/// Model-comparison record for one sample family: truncated power law
/// against exponential, by KS distance.
#[derive(Debug, Clone)]
pub struct ShapeComparison {
    pub tpl: TruncatedPowerLaw,
    pub ks_tpl: f64,
    pub ks_exponential: f64,
    pub n_samples: usize,
}

/// Fit both models to the samples above `x_min` and report the KS
/// statistics.
pub fn compare_tpl_vs_exponential(
    samples: &[f64],
    x_min: f64,
) -> Result<ShapeComparison, AnalysisError> {
    let filtered: Vec<f64> = samples.iter().copied().filter(|&x| x >= x_min).collect();
    let fit = mle_fit_tpl(&filtered, x_min)?;
    let exp = crate::stats::mle_fit_exponential(&filtered, x_min)?;
    Ok(ShapeComparison {
        tpl: fit.dist,
        ks_tpl: ks_statistic(&filtered, &fit.dist)?,
        ks_exponential: ks_statistic(&filtered, &exp)?,
        n_samples: filtered.len(),
    })
}

/// Tail comparison with automatic lower-bound selection: scan candidate
/// x_min values over the lower sample quantiles and keep the one whose
/// truncated-power-law fit has the smallest KS distance, the usual
/// procedure for heavy-tail fitting. Both models are then compared on
/// that same support.
pub fn compare_tpl_vs_exponential_auto(
    samples: &[f64],
    floor: f64,
) -> Result<ShapeComparison, AnalysisError> {
    if samples.len() < crate::stats::MLE_MIN_SAMPLES * 2 {
        return compare_tpl_vs_exponential(samples, floor);
    }
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|&x| x >= floor).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<ShapeComparison> = None;
    for q in [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let idx = ((sorted.len() as f64) * q) as usize;
        let x_min = sorted[idx.min(sorted.len() - 1)].max(floor);
        let tail = &sorted[idx..];
        if tail.len() < crate::stats::MLE_MIN_SAMPLES {
            continue;
        }
        let Ok(cmp) = compare_tpl_vs_exponential(tail, x_min) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| cmp.ks_tpl < b.ks_tpl) {
            best = Some(cmp);
        }
    }
    best.ok_or_else(|| AnalysisError::InvalidParameter("no usable tail for comparison".into()))
}

// ---------------------------------------------------------------------------
// CSV emitters for the analysis artifacts.

pub fn write_ccdf_csv(ccdf: &Ccdf, path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from("value,ccdf\n");
    for (v, f) in ccdf.points() {
        writeln!(out, "{v},{f}").ok();
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_remeeting_csv(hist: &RemeetingHistogram, path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from("bin_start_hours,probability\n");
    for (i, m) in hist.mass.iter().enumerate() {
        writeln!(out, "{},{m}", i as f64 * hist.bin / 3600.0).ok();
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_communities_csv(communities: &[Vec<NodeId>], path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from("community_id,node_id\n");
    for (id, members) in communities.iter().enumerate() {
        for m in members {
            writeln!(out, "{id},{m}").ok();
        }
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_parameter_report(params: &ExtractedParams, path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from("key,value\n");
    let mut kv = |k: &str, v: String| {
        writeln!(out, "{k},{v}").ok();
    };
    if let Some(d) = &params.duration {
        kv("alpha_dur", format!("{}", d.alpha));
        kv("beta_dur_seconds", format!("{}", d.beta));
        kv("dur_ks", format!("{}", d.ks));
        kv("dur_samples", format!("{}", d.n_samples));
    }
    if let Some(s) = &params.size {
        kv("alpha_size", format!("{}", s.alpha));
        kv("beta_size", format!("{}", s.beta));
        kv("size_ks", format!("{}", s.ks));
    }
    if let Some(g) = &params.gmt {
        kv("alpha_gmt", format!("{}", g.alpha));
        kv("beta_gmt_k_units", format!("{}", g.beta));
    }
    if let Some(k) = &params.dominant_k {
        kv("dominant_k_seconds", format!("{}", k));
    }
    if let Some(shares) = &params.k_shares {
        for (period, share) in shares {
            kv(&format!("k_share_{}h", period / 3600.0), format!("{share}"));
        }
    }
    kv("detected_groups", format!("{}", params.detected_groups));
    for (i, note) in params.notes.iter().enumerate() {
        kv(&format!("note_{i}"), note.replace(',', ";"));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
