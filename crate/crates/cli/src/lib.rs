//! Command implementations behind the `grm` binary: generate a scenario,
//! fit parameters from a trace, analyze a trace, and replay forwarding
//! protocols. Every command writes a manifest sufficient to reproduce its
//! outputs (resolved configuration, seed, tool version, file digests).

use grm_core::analysis::{
    clique_percolation, contact_duration_samples, detect_groups,
    extract_parameters_with, intercontact_samples, remeeting_pdf, write_ccdf_csv,
    write_communities_csv, write_parameter_report, write_remeeting_csv, Ccdf, ExtractOptions,
};
use grm_core::config::{ContactMode, ParameterSet, Seconds, SocialConfig};
use grm_core::forwarding::{
    generate_workload, ttl_sweep, write_metrics_csv, BubbleRap, CentralityMode, Flooding,
    GroupsNet, GroupsNetOptions, Protocol,
};
use grm_core::pipeline::{generate, generate_with_graph, GeneratedScenario, STREAM_WORKLOAD};
use grm_core::stats::RandomSource;
use grm_core::trace::{
    read_contact_trace, write_contacts_csv, write_one_connections, write_one_movement, TraceFormat,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Errors split by exit code: validation problems exit 1, runtime and
/// data problems exit 2.
#[derive(Debug)]
pub enum AppError {
    Validation(String),
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Validation(m) => write!(f, "{m}"),
            AppError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<grm_core::pipeline::PipelineError> for AppError {
    fn from(e: grm_core::pipeline::PipelineError) -> Self {
        match e {
            grm_core::pipeline::PipelineError::Config(c) => AppError::Validation(c.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::Runtime(e.to_string())
            }
        })*
    };
}
runtime_from!(
    std::io::Error,
    grm_core::trace::TraceError,
    grm_core::analysis::AnalysisError,
    grm_core::forwarding::ForwardError,
    grm_core::social::SocialError,
    grm_core::groups::GroupError
);

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a ParameterSet,
    digests: BTreeMap<String, String>,
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn sha256_file(path: &Path) -> Result<String, AppError> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(7 + digest.len() * 2);
    hex.push_str("sha256:");
    for b in digest {
        write!(hex, "{b:02x}").ok();
    }
    Ok(hex)
}

fn digests_of(dir: &Path, names: &[&str]) -> Result<BTreeMap<String, String>, AppError> {
    names
        .iter()
        .map(|name| Ok((name.to_string(), sha256_file(&dir.join(name))?)))
        .collect()
}

/// Load and validate a config file, with an optional seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ParameterSet, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut params: ParameterSet = toml::from_str(&text)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        params.seed = seed;
    }
    params
        .validate()
        .map_err(|e| AppError::Validation(e.to_string()))?;
    Ok(params)
}

/// Output files of a generation run.
pub const GENERATE_OUTPUTS: [&str; 4] = [
    "movement.txt",
    "connections.txt",
    "contacts.csv",
    "schedule.txt",
];

/// Run the generator and write the movement trace, connection trace,
/// contact CSV, schedule dump and manifest into `out_dir`.
pub fn cmd_generate(
    config_path: &Path,
    seed: Option<u64>,
    mode: Option<ContactMode>,
    out_dir: &Path,
) -> Result<GeneratedScenario, AppError> {
    let mut params = load_config(config_path, seed)?;
    if let Some(mode) = mode {
        params.contact_mode = mode;
    }
    std::fs::create_dir_all(out_dir)?;

    let scenario = if let SocialConfig::File { path, .. } = &params.social {
        // Keep the dense-id map next to the outputs for traceability.
        let loaded = grm_core::social::load_social_graph(Path::new(path))?;
        let mut map = String::from("# dense_id original_id\n");
        for (dense, original) in loaded.original_ids.iter().enumerate() {
            writeln!(map, "{dense} {original}").ok();
        }
        std::fs::write(out_dir.join("id_map.txt"), map)?;
        generate_with_graph(&params, loaded.graph)?
    } else {
        generate(&params)?
    };

    write_one_movement(
        &scenario.plan.itineraries,
        params.movement_step.0,
        params.sim_duration.0,
        &out_dir.join("movement.txt"),
    )?;
    write_one_connections(&scenario.trace, &out_dir.join("connections.txt"))?;
    write_contacts_csv(&scenario.trace, &out_dir.join("contacts.csv"))?;
    grm_core::groups::write_schedule(&scenario.schedule, &out_dir.join("schedule.txt"))?;

    let manifest = Manifest {
        tool: "grm",
        version: VERSION,
        command: "generate",
        seed: params.seed,
        config: &params,
        digests: digests_of(out_dir, &GENERATE_OUTPUTS)?,
    };
    std::fs::write(
        out_dir.join("manifest.toml"),
        toml::to_string(&manifest).map_err(|e| AppError::Runtime(e.to_string()))?,
    )?;
    Ok(scenario)
}

/// Infer the trace format from the file name unless forced.
pub fn trace_format(path: &Path, forced: Option<TraceFormat>) -> TraceFormat {
    forced.unwrap_or_else(|| {
        let name = path.to_string_lossy();
        if name.ends_with(".csv") || name.ends_with(".csv.gz") {
            TraceFormat::Csv
        } else {
            TraceFormat::OneConnections
        }
    })
}

/// Fit generator parameters from a trace and write a ready-to-run config.
/// Fields that could not be estimated keep their defaults and are marked
/// as placeholders in the emitted file.
pub fn cmd_fit(
    trace_path: &Path,
    format: Option<TraceFormat>,
    out_path: &Path,
    window: f64,
    min_size: usize,
) -> Result<(), AppError> {
    let trace = read_contact_trace(trace_path, trace_format(trace_path, format))?;
    let opts = ExtractOptions {
        window,
        min_size,
        ..ExtractOptions::default()
    };
    let extracted = extract_parameters_with(&trace, &opts)?;

    let mut params = ParameterSet::new(trace.node_count(), extracted.detected_groups.max(1) as u32);
    params.sim_duration = Seconds(trace.horizon());
    let mut provenance: Vec<String> = Vec::new();
    let mut placeholders: Vec<String> = Vec::new();
    if let Some(d) = &extracted.duration {
        params.alpha_dur = d.alpha;
        params.beta_dur = Seconds(d.beta);
        provenance.push(format!(
            "alpha_dur/beta_dur fitted from {} contact durations (ks {:.4})",
            d.n_samples, d.ks
        ));
    } else {
        placeholders.push("alpha_dur/beta_dur".into());
    }
    if let Some(s) = &extracted.size {
        params.alpha_size = s.alpha;
        params.beta_size = s.beta;
        provenance.push(format!(
            "alpha_size/beta_size fitted from {} detected groups (ks {:.4})",
            s.n_samples, s.ks
        ));
    } else {
        placeholders.push("alpha_size/beta_size".into());
    }
    if let (Some(g), Some(k)) = (&extracted.gmt, extracted.dominant_k) {
        params.alpha_gmt = g.alpha;
        // The fit lives in units of the dominant K; the config carries it
        // back in seconds.
        params.beta_gmt = Seconds(g.beta * k);
        provenance.push(format!(
            "alpha_gmt/beta_gmt fitted from {} re-meeting gaps in units of the dominant period",
            g.n_samples
        ));
    } else {
        placeholders.push("alpha_gmt/beta_gmt".into());
    }
    if let Some(shares) = &extracted.k_shares {
        let positive: Vec<_> = shares.iter().filter(|(_, s)| *s > 0.0).collect();
        if !positive.is_empty() {
            params.k_distribution = positive
                .iter()
                .map(|(p, s)| grm_core::config::KEntry {
                    period: Seconds(*p),
                    share: *s,
                })
                .collect();
            // Normalize away rounding drift.
            let total: f64 = params.k_distribution.iter().map(|e| e.share).sum();
            for e in &mut params.k_distribution {
                e.share /= total;
            }
            provenance.push("k_distribution estimated from re-meeting gap classification".into());
        } else {
            placeholders.push("k_distribution".into());
        }
    } else {
        placeholders.push("k_distribution".into());
    }

    params
        .validate()
        .map_err(|e| AppError::Runtime(format!("fitted config failed validation: {e}")))?;

    let mut text = String::new();
    writeln!(text, "# parameters fitted from {}", trace_path.display()).ok();
    writeln!(
        text,
        "# trace: {} nodes, horizon {:.1} days, {} detected groups",
        trace.node_count(),
        trace.horizon() / 86_400.0,
        extracted.detected_groups
    )
    .ok();
    for p in &provenance {
        writeln!(text, "# fitted: {p}").ok();
    }
    for p in &placeholders {
        writeln!(text, "# placeholder (insufficient data, default kept): {p}").ok();
    }
    for note in &extracted.notes {
        writeln!(text, "# note: {note}").ok();
    }
    text.push('\n');
    text.push_str(&toml::to_string(&params).map_err(|e| AppError::Runtime(e.to_string()))?);
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out_path, text)?;
    Ok(())
}

/// Which analyses `cmd_analyze` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Ict,
    Cd,
    Remeeting,
    Communities,
    Fit,
}

impl Analysis {
    pub fn all() -> Vec<Analysis> {
        vec![
            Analysis::Ict,
            Analysis::Cd,
            Analysis::Remeeting,
            Analysis::Communities,
            Analysis::Fit,
        ]
    }

    pub fn parse_list(text: &str) -> Result<Vec<Analysis>, AppError> {
        text.split(',')
            .map(|s| match s.trim() {
                "ict" => Ok(Analysis::Ict),
                "cd" => Ok(Analysis::Cd),
                "remeeting" => Ok(Analysis::Remeeting),
                "communities" => Ok(Analysis::Communities),
                "fit" => Ok(Analysis::Fit),
                other => Err(AppError::Validation(format!(
                    "unknown analysis {other:?}; expected ict, cd, remeeting, communities, fit"
                ))),
            })
            .collect()
    }
}

/// Run the selected analyses and write one CSV each.
pub fn cmd_analyze(
    trace_path: &Path,
    format: Option<TraceFormat>,
    out_dir: &Path,
    analyses: &[Analysis],
    window: f64,
    min_size: usize,
) -> Result<Vec<PathBuf>, AppError> {
    let trace = read_contact_trace(trace_path, trace_format(trace_path, format))?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut write = |name: &str, f: &mut dyn FnMut(&Path) -> Result<(), AppError>| {
        let path = out_dir.join(name);
        f(&path).map(|()| written.push(path))
    };

    if analyses.contains(&Analysis::Ict) {
        write("ict_ccdf.csv", &mut |p| {
            let samples = intercontact_samples(&trace);
            Ok(write_ccdf_csv(&Ccdf::from_samples(&samples), p)?)
        })?;
    }
    if analyses.contains(&Analysis::Cd) {
        write("cd_ccdf.csv", &mut |p| {
            let samples = contact_duration_samples(&trace);
            Ok(write_ccdf_csv(&Ccdf::from_samples(&samples), p)?)
        })?;
    }
    if analyses.contains(&Analysis::Remeeting) {
        write("remeeting.csv", &mut |p| {
            let groups = detect_groups(&trace, window, min_size, 0.5)?;
            let hist = remeeting_pdf(&groups, 3600.0, trace.horizon())?;
            Ok(write_remeeting_csv(&hist, p)?)
        })?;
    }
    if analyses.contains(&Analysis::Communities) {
        write("communities.csv", &mut |p| {
            let communities = clique_percolation(&trace, 3)?;
            Ok(write_communities_csv(&communities, p)?)
        })?;
    }
    if analyses.contains(&Analysis::Fit) {
        write("fit_report.csv", &mut |p| {
            let opts = ExtractOptions {
                window,
                min_size,
                ..ExtractOptions::default()
            };
            let params = extract_parameters_with(&trace, &opts)?;
            Ok(write_parameter_report(&params, p)?)
        })?;
    }
    Ok(written)
}

/// Forwarding evaluation settings.
pub struct ForwardOptions {
    pub protocols: Vec<String>,
    pub ttls: Vec<f64>,
    pub messages: usize,
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            protocols: vec![
                "flooding".into(),
                "bubble-rap".into(),
                "groups-net".into(),
            ],
            ttls: vec![
                6.0 * 3600.0,
                86_400.0,
                3.0 * 86_400.0,
                7.0 * 86_400.0,
            ],
            messages: 1000,
            warmup_fraction: 0.3,
            seed: 42,
        }
    }
}

#[derive(Serialize)]
struct ForwardManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    trace: String,
    trace_digest: String,
    protocols: &'a [String],
    ttl_hours: Vec<f64>,
    messages: usize,
    warmup_fraction: f64,
    workload_seed: u64,
    metrics_digest: String,
}

/// Replay the trace under the selected protocols and write the metrics
/// CSV plus a manifest alongside it.
pub fn cmd_forward(
    trace_path: &Path,
    format: Option<TraceFormat>,
    opts: &ForwardOptions,
    out_path: &Path,
) -> Result<Vec<grm_core::forwarding::ReplayMetrics>, AppError> {
    if !(0.0..1.0).contains(&opts.warmup_fraction) {
        return Err(AppError::Validation(format!(
            "warmup fraction must be in [0,1), got {}",
            opts.warmup_fraction
        )));
    }
    if opts.protocols.is_empty() {
        return Err(AppError::Validation("no protocols selected".into()));
    }
    let trace = read_contact_trace(trace_path, trace_format(trace_path, format))?;
    if trace.node_count() < 2 {
        return Err(AppError::Runtime("trace has fewer than two nodes".into()));
    }
    let warmup_end = trace.horizon() * opts.warmup_fraction;

    let mut protocols: Vec<Box<dyn Protocol>> = Vec::new();
    for name in &opts.protocols {
        match name.as_str() {
            "flooding" => protocols.push(Box::new(Flooding)),
            "bubble-rap" => protocols.push(Box::new(BubbleRap::from_warmup(
                &trace,
                warmup_end,
                CentralityMode::Aggregate,
            )?)),
            "groups-net" => protocols.push(Box::new(GroupsNet::from_warmup(
                &trace,
                warmup_end,
                &GroupsNetOptions::default(),
            )?)),
            other => {
                return Err(AppError::Validation(format!(
                    "unknown protocol {other:?}; expected flooding, bubble-rap, groups-net"
                )));
            }
        }
    }

    let master = RandomSource::new(opts.seed);
    let workload = generate_workload(
        trace.node_count(),
        opts.messages,
        (warmup_end, trace.horizon()),
        &mut master.derive(STREAM_WORKLOAD),
    )?;
    let refs: Vec<&dyn Protocol> = protocols.iter().map(|p| p.as_ref()).collect();
    let metrics = ttl_sweep(&trace, &refs, &workload, &opts.ttls);

    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_metrics_csv(&metrics, out_path)?;
    let manifest = ForwardManifest {
        tool: "grm",
        version: VERSION,
        command: "forward",
        trace: trace_path.display().to_string(),
        trace_digest: sha256_file(trace_path)?,
        protocols: &opts.protocols,
        ttl_hours: opts.ttls.iter().map(|t| t / 3600.0).collect(),
        messages: opts.messages,
        warmup_fraction: opts.warmup_fraction,
        workload_seed: opts.seed,
        metrics_digest: sha256_file(out_path)?,
    };
    let manifest_path = out_path.with_extension("manifest.toml");
    std::fs::write(
        manifest_path,
        toml::to_string(&manifest).map_err(|e| AppError::Runtime(e.to_string()))?,
    )?;
    Ok(metrics)
}

/// Re-exported for integration tests and the binary.
pub use grm_core::trace::TraceFormat as Format;

/// Parse a comma-separated TTL list with unit suffixes (`6h,1d,3d,1w`
/// where `w` means weeks).
pub fn parse_ttl_list(text: &str) -> Result<Vec<f64>, AppError> {
    text.split(',')
        .map(|s| {
            let t = s.trim();
            if let Some(weeks) = t.strip_suffix('w') {
                let w: f64 = weeks
                    .trim()
                    .parse()
                    .map_err(|_| AppError::Validation(format!("bad TTL {t:?}")))?;
                return Ok(w * 7.0 * 86_400.0);
            }
            Seconds::parse(t)
                .map(|s| s.0)
                .map_err(|e| AppError::Validation(e.to_string()))
        })
        .collect()
}
