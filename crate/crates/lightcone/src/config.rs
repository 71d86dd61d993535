//! Scenario configuration: a TOML schema with explicit units in every field
//! name, strict validation with field-path diagnostics, and deterministic
//! seed derivation.
//!
//! All randomness in a run flows from the mandatory top-level `seed`.
//! Per-stream and per-jitter seeds may be given explicitly; when omitted they
//! are derived as `sha256(seed, role-tag, index)`, so overriding the scenario
//! seed re-seeds everything while explicit seeds stay put.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::FeedModel;
use crate::network::{
    DistanceModel, ExchangeNode, JitterDistribution, JitterSpec, Link, Medium, Network,
    SipPlacement,
};
use crate::quotes::StreamSpec;
use crate::sip::Convention;
use crate::spacetime::{LorentzBoost, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Master seed; mandatory, there is no ambient randomness.
    pub seed: u64,
    /// Analysis horizon, µs. Quotes emitted after it are dropped.
    pub horizon_us: f64,
    #[serde(default = "default_n_securities")]
    pub n_securities: u64,
    /// Informational tick size in currency units; never used in arithmetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick_size: Option<f64>,
    pub network: NetworkConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub streams: Vec<StreamConfig>,
    /// Scripted event files, relative to the config file's directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub event_files: Vec<String>,
    pub conventions: Vec<ConventionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feeds: Option<FeedConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_n_securities() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// "chord" (default) or "great_circle".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_model: Option<String>,
    /// When an exchange has no explicit link to the SIP, synthesize a fiber
    /// link over the direct distance (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_sip_link: Option<bool>,
    /// Derive each node's clock rate from its altitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravitational_clocks: Option<bool>,
    pub nodes: Vec<NodeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkConfig>,
    pub sip: SipConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub alt_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub from: String,
    pub to: String,
    /// "vacuum", "fiber", or "microwave".
    pub medium: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<JitterConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    /// "uniform" (params `[lo_us, hi_us]`) or "exponential" (params `[mean_us]`).
    pub dist: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub exchange_id: String,
    pub rate_per_s: f64,
    pub duration_us: f64,
    pub spread_ticks: i64,
    pub mid_walk: MidWalkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MidWalkConfig {
    pub initial_ticks: i64,
    pub step_ticks: i64,
    /// Optional reflecting band; defaults to the widest valid range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_ticks: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ticks: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionConfig {
    /// "arrival_order", "lab_frame", "boosted_frame", "uncertainty_interval".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_km_per_us: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_clock_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedConfig {
    pub delta_direct_us: f64,
    pub delta_sip_us: f64,
    pub reaction_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction_jitter: Option<JitterConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_csv: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_json: Option<bool>,
}

/// A validated scenario, ready to run. `config` is the effective
/// configuration: seed overrides applied and every derived seed filled in, so
/// serializing it identifies the run completely.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub network: Network,
    pub streams: Vec<StreamSpec>,
    pub event_files: Vec<PathBuf>,
    pub conventions: Vec<Convention>,
    pub feeds: Option<FeedModel>,
    pub out_dir: PathBuf,
}

impl ResolvedScenario {
    /// Canonical serialized form of the effective config.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }

    /// Hash identifying the effective config (hex sha256 of the canonical form).
    pub fn config_hash(&self) -> String {
        hex_sha256(self.canonical_toml().as_bytes())
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Derive a role seed from the master seed: `sha256(seed ‖ tag ‖ index)`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest length"))
}

/// Read and parse a scenario config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Overrides supplied on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Keep only conventions whose kind matches.
    pub convention: Option<String>,
}

/// Validate a parsed config and build the runnable scenario.
///
/// `base_dir` anchors relative paths (event files, output dir).
pub fn resolve(
    mut config: ScenarioConfig,
    base_dir: &Path,
    overrides: &Overrides,
) -> Result<ResolvedScenario, ConfigError> {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(filter) = &overrides.convention {
        config.conventions.retain(|c| &c.kind == filter);
    }

    let mut errors: Vec<String> = Vec::new();
    let fail = |path: String, message: String| format!("{path}: {message}");

    // Fill in derived seeds so the effective config is self-contained.
    for (i, stream) in config.streams.iter_mut().enumerate() {
        if stream.seed.is_none() {
            stream.seed = Some(derive_seed(config.seed, "stream", i as u64));
        }
    }
    for (i, link) in config.network.links.iter_mut().enumerate() {
        if let Some(jitter) = &mut link.jitter {
            if jitter.seed.is_none() {
                jitter.seed = Some(derive_seed(config.seed, "link-jitter", i as u64));
            }
        }
    }
    if let Some(feeds) = &mut config.feeds {
        if let Some(jitter) = &mut feeds.reaction_jitter {
            if jitter.seed.is_none() {
                jitter.seed = Some(derive_seed(config.seed, "reaction-jitter", 0));
            }
        }
    }

    if config.horizon_us.is_nan() || config.horizon_us < 0.0 {
        errors.push(fail("horizon_us".into(), "must be >= 0".into()));
    }
    if config.n_securities == 0 {
        errors.push(fail("n_securities".into(), "must be >= 1".into()));
    }
    if config.network.nodes.is_empty() {
        errors.push(fail("network.nodes".into(), "at least one exchange required".into()));
    }
    if config.streams.is_empty() && config.event_files.is_empty() {
        errors.push(fail(
            "streams/event_files".into(),
            "at least one stream source required".into(),
        ));
    }
    if config.conventions.is_empty() {
        errors.push(fail(
            "conventions".into(),
            if overrides.convention.is_some() {
                "convention filter matched nothing".into()
            } else {
                "at least one convention required".into()
            },
        ));
    }

    let distance_model = match config.network.distance_model.as_deref() {
        None | Some("chord") => DistanceModel::Chord,
        Some("great_circle") => DistanceModel::GreatCircle,
        Some(other) => {
            errors.push(fail(
                "network.distance_model".into(),
                format!("unknown model `{other}` (expected chord or great_circle)"),
            ));
            DistanceModel::Chord
        }
    };

    let gravitational = config.network.gravitational_clocks.unwrap_or(false);
    let mut nodes = Vec::new();
    for (i, nc) in config.network.nodes.iter().enumerate() {
        match ExchangeNode::new(&nc.id, &nc.name, nc.lat, nc.lon, nc.alt_m) {
            Ok(mut node) => {
                if let Some(rate) = nc.clock_rate {
                    node.clock_rate = rate;
                } else if gravitational {
                    match node.with_gravitational_clock() {
                        Ok(n) => node = n,
                        Err(e) => {
                            errors.push(fail(format!("network.nodes[{i}]"), e.to_string()));
                            continue;
                        }
                    }
                }
                nodes.push(node);
            }
            Err(e) => errors.push(fail(format!("network.nodes[{i}]"), e.to_string())),
        }
    }

    let mut links = Vec::new();
    for (i, lc) in config.network.links.iter().enumerate() {
        let medium = match (lc.medium.as_str(), lc.n) {
            ("vacuum", None) => Some(Medium::Vacuum),
            ("vacuum", Some(_)) => {
                errors.push(fail(
                    format!("network.links[{i}].n"),
                    "vacuum has no refractive index parameter".into(),
                ));
                None
            }
            ("fiber", n) => Some(Medium::Fiber { n: n.unwrap_or(1.5) }),
            ("microwave", n) => Some(Medium::Microwave { n: n.unwrap_or(1.0003) }),
            (other, _) => {
                errors.push(fail(
                    format!("network.links[{i}].medium"),
                    format!("unknown medium `{other}` (expected vacuum, fiber, microwave)"),
                ));
                None
            }
        };
        let jitter = match &lc.jitter {
            None => None,
            Some(jc) => match jitter_spec(jc, &format!("network.links[{i}].jitter")) {
                Ok(spec) => Some(spec),
                Err(e) => {
                    errors.push(e);
                    None
                }
            },
        };
        if let Some(medium) = medium {
            let mut link = Link::new(&lc.from, &lc.to, medium);
            link.distance_override_km = lc.distance_km;
            link.jitter = jitter;
            links.push(link);
        }
    }

    let sip = match (&config.network.sip.node, &config.network.sip.position) {
        (Some(node), None) => SipPlacement::Node(node.clone()),
        (None, Some(p)) => SipPlacement::Position(Vec3::from(*p)),
        _ => {
            errors.push(fail(
                "network.sip".into(),
                "exactly one of `node` or `position` required".into(),
            ));
            SipPlacement::Position(Vec3::ZERO)
        }
    };

    let network = match Network::new(
        nodes,
        links,
        sip,
        distance_model,
        config.network.default_sip_link.unwrap_or(true),
    ) {
        Ok(n) => Some(n),
        Err(e) => {
            errors.push(fail("network".into(), e.to_string()));
            None
        }
    };

    let mut streams = Vec::new();
    for (i, sc) in config.streams.iter().enumerate() {
        if let Some(network) = &network {
            if network.node(&sc.exchange_id).is_err() {
                errors.push(fail(
                    format!("streams[{i}].exchange_id"),
                    format!("unknown exchange `{}`", sc.exchange_id),
                ));
                continue;
            }
        }
        let mut spec = StreamSpec::unbounded(
            sc.exchange_id.clone(),
            sc.seed.expect("derived above"),
            sc.rate_per_s,
            sc.duration_us,
            sc.spread_ticks,
            sc.mid_walk.initial_ticks,
            sc.mid_walk.step_ticks,
        );
        if let Some(min) = sc.mid_walk.min_ticks {
            spec.mid_min_ticks = min;
        }
        if let Some(max) = sc.mid_walk.max_ticks {
            spec.mid_max_ticks = max;
        }
        streams.push(spec);
    }

    let mut conventions = Vec::new();
    for (i, cc) in config.conventions.iter().enumerate() {
        let path = format!("conventions[{i}]");
        match cc.kind.as_str() {
            "arrival_order" => conventions.push(Convention::ArrivalOrder),
            "lab_frame" => conventions.push(Convention::LabFrameEmission),
            "boosted_frame" => match cc.v_km_per_us {
                Some(v) => match LorentzBoost::new(Vec3::from(v)) {
                    Ok(boost) => conventions.push(Convention::BoostedFrameEmission { boost }),
                    Err(e) => errors.push(fail(format!("{path}.v_km_per_us"), e.to_string())),
                },
                None => errors.push(fail(path, "boosted_frame requires v_km_per_us".into())),
            },
            "uncertainty_interval" => match cc.epsilon_clock_us {
                Some(eps) if eps >= 0.0 => {
                    conventions.push(Convention::UncertaintyInterval { epsilon_clock_us: eps })
                }
                Some(eps) => {
                    errors.push(fail(format!("{path}.epsilon_clock_us"), format!("{eps} < 0")))
                }
                None => {
                    errors.push(fail(path, "uncertainty_interval requires epsilon_clock_us".into()))
                }
            },
            other => errors.push(fail(format!("{path}.kind"), format!("unknown kind `{other}`"))),
        }
    }

    let feeds = match &config.feeds {
        None => None,
        Some(fc) => {
            match FeedModel::new(fc.delta_direct_us, fc.delta_sip_us, fc.reaction_us) {
                Ok(mut model) => {
                    if let Some(jc) = &fc.reaction_jitter {
                        match jitter_spec(jc, "feeds.reaction_jitter") {
                            Ok(spec) => model = model.with_reaction_jitter(spec),
                            Err(e) => errors.push(e),
                        }
                    }
                    Some(model)
                }
                Err(e) => {
                    errors.push(fail("feeds".into(), e.to_string()));
                    None
                }
            }
        }
    };

    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }

    let event_files = config
        .event_files
        .iter()
        .map(|p| base_dir.join(p))
        .collect();
    let out_dir = overrides.out_dir.clone().unwrap_or_else(|| {
        base_dir.join(config.outputs.dir.as_deref().unwrap_or("out"))
    });

    Ok(ResolvedScenario {
        network: network.expect("errors checked"),
        streams,
        event_files,
        conventions,
        feeds,
        out_dir,
        config,
    })
}

fn jitter_spec(jc: &JitterConfig, path: &str) -> Result<JitterSpec, String> {
    let seed = jc.seed.ok_or_else(|| format!("{path}.seed: not derived"))?;
    let distribution = match (jc.dist.as_str(), jc.params.as_slice()) {
        ("uniform", [lo, hi]) => JitterDistribution::Uniform { lo_us: *lo, hi_us: *hi },
        ("uniform", p) => {
            return Err(format!("{path}: uniform expects params [lo_us, hi_us], got {p:?}"))
        }
        ("exponential", [mean]) => JitterDistribution::Exponential { mean_us: *mean },
        ("exponential", p) => {
            return Err(format!("{path}: exponential expects params [mean_us], got {p:?}"))
        }
        (other, _) => return Err(format!("{path}.dist: unknown distribution `{other}`")),
    };
    let spec = JitterSpec { distribution, seed };
    spec.validate().map_err(|e| format!("{path}: {e}"))?;
    Ok(spec)
}
