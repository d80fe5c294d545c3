//! The scenario parameter set: every statistical and geometric knob of
//! the generator, with documented defaults, unit-suffixed durations and
//! whole-config validation that reports every violated constraint at
//! once.
//!
//! Internally everything runs in seconds; durations in config files are
//! written with a unit suffix (`s`, `m`, `h`, `d`) or as a bare number of
//! seconds.

use crate::groups::{GroupModelParams, KDistribution};
use crate::mobility::Grid;
use crate::stats::TruncatedPowerLaw;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("bad duration {0:?}: expected a number with optional s/m/h/d suffix")]
    BadDuration(String),
}

/// A duration in seconds, parsed from `"30d"`, `"6h"`, `"90m"`, `"45s"`
/// or a bare number of seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Seconds(pub f64);

impl Seconds {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = text.trim();
        let (num, unit) = match t.chars().last() {
            Some(c @ ('s' | 'm' | 'h' | 'd')) => (&t[..t.len() - 1], c),
            _ => (t, 's'),
        };
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| ConfigError::BadDuration(text.to_string()))?;
        let scale = match unit {
            's' => 1.0,
            'm' => 60.0,
            'h' => 3600.0,
            'd' => 86_400.0,
            _ => unreachable!(),
        };
        Ok(Seconds(value * scale))
    }
}

impl std::fmt::Display for Seconds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.0;
        for (scale, suffix) in [(86_400.0, "d"), (3600.0, "h"), (60.0, "m")] {
            if v != 0.0 && (v / scale).fract() == 0.0 {
                return write!(f, "{}{suffix}", v / scale);
            }
        }
        write!(f, "{v}s")
    }
}

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Seconds;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a duration string like \"30d\" or a number of seconds")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Seconds, E> {
                Seconds::parse(v).map_err(E::custom)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Seconds, E> {
                Ok(Seconds(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Seconds, E> {
                Ok(Seconds(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Seconds, E> {
                Ok(Seconds(v as f64))
            }
        }
        deserializer.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub cells_x: u32,
    pub cells_y: u32,
    pub cell_size: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cells_x: 30,
            cells_y: 30,
            cell_size: 50.0,
        }
    }
}

/// One regularity class: a share of groups meeting on multiples of
/// `period`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KEntry {
    pub period: Seconds,
    pub share: f64,
}

/// Which social network feeds group formation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SocialConfig {
    BarabasiAlbert {
        edges_per_node: u32,
    },
    GaussianPartition {
        mean_cluster_size: f64,
        shape: f64,
        p_in: f64,
        p_out: f64,
    },
    Caveman {
        caves: u32,
        cave_size: u32,
        #[serde(default)]
        rewire: f64,
    },
    RandomPartition {
        cluster_sizes: Vec<u32>,
        p_in: f64,
        p_out: f64,
    },
    File {
        path: String,
        #[serde(default)]
        communities: Option<String>,
    },
}

impl Default for SocialConfig {
    fn default() -> Self {
        // Few large dense clusters: groups drawn from a big member pool
        // stay distinguishable to trace-side group tracking, and the
        // clusters show up as clean contact-graph communities.
        SocialConfig::GaussianPartition {
            mean_cluster_size: 50.0,
            shape: 8.0,
            p_in: 1.0,
            p_out: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// Contacts only where attendees co-locate at meetings (exact).
    Meeting,
    /// Contacts wherever sampled positions come within radio range.
    Proximity,
}

impl Default for ContactMode {
    fn default() -> Self {
        ContactMode::Meeting
    }
}

/// The full scenario description. Defaults describe a campus-scale
/// scenario; only the population sizes are mandatory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub node_count: u32,
    pub num_groups: u32,
    #[serde(default = "d_sim_duration")]
    pub sim_duration: Seconds,
    /// Existence period of each group within the simulation.
    #[serde(default = "d_group_duration")]
    pub group_duration: Seconds,
    #[serde(default)]
    pub grid: GridConfig,
    /// Inter-meeting multiplier law (exponent / cutoff).
    #[serde(default = "d_alpha_gmt")]
    pub alpha_gmt: f64,
    #[serde(default = "d_beta_gmt")]
    pub beta_gmt: Seconds,
    /// Meeting duration law.
    #[serde(default = "d_alpha_dur")]
    pub alpha_dur: f64,
    #[serde(default = "d_beta_dur")]
    pub beta_dur: Seconds,
    /// Group size law (dimensionless, lower support 2).
    #[serde(default = "d_alpha_size")]
    pub alpha_size: f64,
    #[serde(default = "d_beta_size")]
    pub beta_size: f64,
    #[serde(default = "d_k_distribution")]
    pub k_distribution: Vec<KEntry>,
    /// Standard deviation of the Gaussian step between meetings.
    #[serde(default = "d_sigma")]
    pub sigma: Seconds,
    /// Meeting-place attraction decay exponent.
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    /// Node travel speed, length units per second.
    #[serde(default = "d_speed")]
    pub speed: f64,
    /// Radio range for proximity contact extraction, length units.
    #[serde(default = "d_radio_range")]
    pub radio_range: f64,
    /// Position sampling step for proximity extraction.
    #[serde(default = "d_time_step")]
    pub time_step: Seconds,
    /// Position sampling step for the movement trace file.
    #[serde(default = "d_movement_step")]
    pub movement_step: Seconds,
    /// Lower support of time-valued laws (durations), seconds.
    #[serde(default = "d_x_min_time")]
    pub x_min_time: Seconds,
    #[serde(default)]
    pub contact_mode: ContactMode,
    #[serde(default)]
    pub social: SocialConfig,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

fn d_sim_duration() -> Seconds {
    Seconds(60.0 * 86_400.0)
}
fn d_group_duration() -> Seconds {
    Seconds(30.0 * 86_400.0)
}
fn d_alpha_gmt() -> f64 {
    2.0
}
fn d_beta_gmt() -> Seconds {
    Seconds(30.0 * 86_400.0)
}
fn d_alpha_dur() -> f64 {
    2.0
}
fn d_beta_dur() -> Seconds {
    Seconds(30.0 * 86_400.0)
}
fn d_alpha_size() -> f64 {
    2.24
}
fn d_beta_size() -> f64 {
    30.0
}
fn d_k_distribution() -> Vec<KEntry> {
    vec![
        KEntry {
            period: Seconds(86_400.0),
            share: 0.70,
        },
        KEntry {
            period: Seconds(7.0 * 86_400.0),
            share: 0.15,
        },
        KEntry {
            period: Seconds(6.0 * 3600.0),
            share: 0.15,
        },
    ]
}
fn d_sigma() -> Seconds {
    Seconds(3600.0)
}
fn d_gamma() -> f64 {
    2.0
}
fn d_speed() -> f64 {
    1.4
}
fn d_radio_range() -> f64 {
    10.0
}
fn d_time_step() -> Seconds {
    Seconds(60.0)
}
fn d_movement_step() -> Seconds {
    Seconds(300.0)
}
fn d_x_min_time() -> Seconds {
    Seconds(60.0)
}
fn d_seed() -> u64 {
    42
}

impl ParameterSet {
    /// A parameter set with the given population and every other field at
    /// its default.
    pub fn new(node_count: u32, num_groups: u32) -> Self {
        Self {
            node_count,
            num_groups,
            sim_duration: d_sim_duration(),
            group_duration: d_group_duration(),
            grid: GridConfig::default(),
            alpha_gmt: d_alpha_gmt(),
            beta_gmt: d_beta_gmt(),
            alpha_dur: d_alpha_dur(),
            beta_dur: d_beta_dur(),
            alpha_size: d_alpha_size(),
            beta_size: d_beta_size(),
            k_distribution: d_k_distribution(),
            sigma: d_sigma(),
            gamma: d_gamma(),
            speed: d_speed(),
            radio_range: d_radio_range(),
            time_step: d_time_step(),
            movement_step: d_movement_step(),
            x_min_time: d_x_min_time(),
            contact_mode: ContactMode::default(),
            social: SocialConfig::default(),
            seed: d_seed(),
        }
    }

    /// Check every constraint, reporting all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        fn check(errors: &mut Vec<String>, ok: bool, msg: String) {
            if !ok {
                errors.push(msg);
            }
        }
        check(

            &mut errors,
            self.node_count >= 2,
            format!("node_count must be >= 2, got {}", self.node_count),
        );
        check(

            &mut errors,
            self.sim_duration.0 > 0.0,
            format!("sim_duration must be positive, got {}", self.sim_duration),
        );
        check(

            &mut errors,
            self.group_duration.0 > 0.0,
            format!("group_duration must be positive, got {}", self.group_duration),
        );
        check(

            &mut errors,
            self.grid.cells_x > 0 && self.grid.cells_y > 0 && self.grid.cell_size > 0.0,
            format!(
                "grid must be positive, got {}x{} cells of {}",
                self.grid.cells_x, self.grid.cells_y, self.grid.cell_size
            ),
        );
        for (name, alpha) in [
            ("alpha_gmt", self.alpha_gmt),
            ("alpha_dur", self.alpha_dur),
            ("alpha_size", self.alpha_size),
        ] {
            check(&mut errors, alpha > 1.0, format!("{name} must be > 1, got {alpha}"));
        }
        check(

            &mut errors,
            self.beta_gmt.0 > 0.0,
            format!("beta_gmt must be positive, got {}", self.beta_gmt),
        );
        check(

            &mut errors,
            self.beta_dur.0 > 0.0,
            format!("beta_dur must be positive, got {}", self.beta_dur),
        );
        check(

            &mut errors,
            self.beta_size > 0.0,
            format!("beta_size must be positive, got {}", self.beta_size),
        );
        if let Err(e) = self.k_distribution_checked() {
            errors.push(format!("k_distribution: {e}"));
        }
        check(

            &mut errors,
            self.sigma.0 >= 0.0,
            format!("sigma must be >= 0, got {}", self.sigma),
        );
        check(&mut errors, self.gamma > 0.0, format!("gamma must be > 0, got {}", self.gamma));
        check(&mut errors, self.speed > 0.0, format!("speed must be > 0, got {}", self.speed));
        check(

            &mut errors,
            self.radio_range > 0.0,
            format!("radio_range must be > 0, got {}", self.radio_range),
        );
        check(

            &mut errors,
            self.time_step.0 > 0.0,
            format!("time_step must be positive, got {}", self.time_step),
        );
        check(

            &mut errors,
            self.movement_step.0 > 0.0,
            format!("movement_step must be positive, got {}", self.movement_step),
        );
        check(

            &mut errors,
            self.x_min_time.0 > 0.0,
            format!("x_min_time must be positive, got {}", self.x_min_time),
        );
        match &self.social {
            SocialConfig::BarabasiAlbert { edges_per_node } => {
                check(

                    &mut errors,
                    *edges_per_node >= 1 && *edges_per_node < self.node_count,
                    format!(
                        "barabasi_albert: need 1 <= edges_per_node < node_count, got {edges_per_node}"
                    ),
                );
            }
            SocialConfig::GaussianPartition {
                mean_cluster_size,
                shape,
                p_in,
                p_out,
            } => {
                check(

                    &mut errors,
                    *mean_cluster_size >= 1.0,
                    format!("gaussian_partition: mean_cluster_size must be >= 1, got {mean_cluster_size}"),
                );
                check(

                    &mut errors,
                    *shape > 0.0,
                    format!("gaussian_partition: shape must be > 0, got {shape}"),
                );
                check(

                    &mut errors,
                    (0.0..=1.0).contains(p_in) && (0.0..=1.0).contains(p_out) && p_out < p_in,
                    format!("gaussian_partition: need 0 <= p_out < p_in <= 1, got p_in={p_in} p_out={p_out}"),
                );
            }
            SocialConfig::Caveman {
                caves,
                cave_size,
                rewire,
            } => {
                check(

                    &mut errors,
                    *caves >= 1 && *cave_size >= 2,
                    format!("caveman: need caves >= 1 and cave_size >= 2, got {caves} and {cave_size}"),
                );
                check(

                    &mut errors,
                    caves * cave_size == self.node_count,
                    format!(
                        "caveman: caves * cave_size = {} does not match node_count {}",
                        caves * cave_size,
                        self.node_count
                    ),
                );
                check(

                    &mut errors,
                    (0.0..=1.0).contains(rewire),
                    format!("caveman: rewire must be in [0,1], got {rewire}"),
                );
            }
            SocialConfig::RandomPartition {
                cluster_sizes,
                p_in,
                p_out,
            } => {
                let total: u64 = cluster_sizes.iter().map(|&s| s as u64).sum();
                check(

                    &mut errors,
                    !cluster_sizes.is_empty() && cluster_sizes.iter().all(|&s| s > 0),
                    "random_partition: cluster sizes must be non-empty and positive".into(),
                );
                check(

                    &mut errors,
                    total == self.node_count as u64,
                    format!(
                        "random_partition: cluster sizes sum to {total}, node_count is {}",
                        self.node_count
                    ),
                );
                check(

                    &mut errors,
                    (0.0..=1.0).contains(p_in) && (0.0..=1.0).contains(p_out) && p_out <= p_in,
                    format!("random_partition: need 0 <= p_out <= p_in <= 1, got p_in={p_in} p_out={p_out}"),
                );
            }
            SocialConfig::File { path, .. } => {
                check(&mut errors, !path.is_empty(), "file: path must not be empty".into());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn k_distribution_checked(&self) -> Result<KDistribution, crate::groups::GroupError> {
        KDistribution::new(
            self.k_distribution
                .iter()
                .map(|e| (e.period.0, e.share))
                .collect(),
        )
    }

    pub fn grid_checked(&self) -> Result<Grid, crate::mobility::MobilityError> {
        Grid::new(self.grid.cells_x, self.grid.cells_y, self.grid.cell_size)
    }

    /// The group-construction view of this parameter set.
    pub fn group_model(&self) -> Result<GroupModelParams, crate::groups::GroupError> {
        Ok(GroupModelParams {
            num_groups: self.num_groups,
            size_dist: TruncatedPowerLaw::new(self.alpha_size, self.beta_size, 2.0)?,
            alpha_gmt: self.alpha_gmt,
            beta_gmt: self.beta_gmt.0,
            duration_dist: TruncatedPowerLaw::new(self.alpha_dur, self.beta_dur.0, self.x_min_time.0)?,
            k_distribution: self.k_distribution_checked()?,
            sigma2: self.sigma.0 * self.sigma.0,
            horizon: self.sim_duration.0,
            group_duration: self.group_duration.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_parsing() {
        assert_eq!(Seconds::parse("30d").unwrap().0, 30.0 * 86_400.0);
        assert_eq!(Seconds::parse("6h").unwrap().0, 6.0 * 3600.0);
        assert_eq!(Seconds::parse("90m").unwrap().0, 5400.0);
        assert_eq!(Seconds::parse("45s").unwrap().0, 45.0);
        assert_eq!(Seconds::parse("45").unwrap().0, 45.0);
        assert_eq!(Seconds::parse("1.5h").unwrap().0, 5400.0);
        assert!(Seconds::parse("abc").is_err());
    }

    #[test]
    fn seconds_display_round_trip() {
        for v in [45.0, 5400.0, 6.0 * 3600.0, 30.0 * 86_400.0, 90.5] {
            let s = Seconds(v);
            assert_eq!(Seconds::parse(&s.to_string()).unwrap().0, v);
        }
    }

    #[test]
    fn defaults_validate() {
        ParameterSet::new(100, 500).validate().unwrap();
    }

    #[test]
    fn toml_round_trip_with_suffixes() {
        let text = r#"
            node_count = 100
            num_groups = 500
            sim_duration = "60d"
            beta_gmt = "30d"
            sigma = "1h"
            k_distribution = [
                { period = "24h", share = 0.70 },
                { period = "7d", share = 0.15 },
                { period = "6h", share = 0.15 },
            ]
            [social]
            model = "gaussian_partition"
            mean_cluster_size = 10
            shape = 4.0
            p_in = 0.5
            p_out = 0.01
        "#;
        let params: ParameterSet = toml::from_str(text).unwrap();
        params.validate().unwrap();
        assert_eq!(params.sim_duration.0, 60.0 * 86_400.0);
        assert_eq!(params.sigma.0, 3600.0);
        // And the defaulted fields are present.
        assert_eq!(params.speed, 1.4);
        assert_eq!(params.grid.cells_x, 30);
    }

    #[test]
    fn validation_collects_all_errors() {
        let mut params = ParameterSet::new(1, 10);
        params.alpha_dur = 0.5;
        params.speed = -1.0;
        params.k_distribution = vec![KEntry {
            period: Seconds(3600.0),
            share: 0.5,
        }];
        match params.validate() {
            Err(ConfigError::Invalid(errors)) => {
                assert!(errors.len() >= 4, "expected >= 4 errors, got {errors:?}");
                assert!(errors.iter().any(|e| e.contains("node_count")));
                assert!(errors.iter().any(|e| e.contains("alpha_dur")));
                assert!(errors.iter().any(|e| e.contains("speed")));
                assert!(errors.iter().any(|e| e.contains("k_distribution")));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn caveman_population_mismatch_rejected() {
        let mut params = ParameterSet::new(100, 10);
        params.social = SocialConfig::Caveman {
            caves: 7,
            cave_size: 7,
            rewire: 0.0,
        };
        assert!(params.validate().is_err());
        params.social = SocialConfig::Caveman {
            caves: 10,
            cave_size: 10,
            rewire: 0.0,
        };
        params.validate().unwrap();
    }
}
