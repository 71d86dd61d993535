//! Exchange network geometry: node placement on a spherical Earth, link media,
//! and deterministic propagation delays.
//!
//! Every link delay is floored at the vacuum light time of its effective
//! distance — no configuration can produce a superluminal channel. Jitter, when
//! enabled, is an additive non-negative draw from a seeded generator, so a
//! whole network is a pure function of its definition.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::spacetime::{
    gravitational_rate, light_time_us, medium_time_us, Vec3, EARTH_RADIUS_KM,
};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum NetworkError {
    #[error("latitude {latitude_deg} outside [-90, 90] or longitude {longitude_deg} outside [-180, 180]")]
    CoordinatesOutOfRange { latitude_deg: f64, longitude_deg: f64 },
    #[error("node id `{0}` is not defined in the network")]
    UnknownNode(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("link {from}->{to} connects coincident positions and has no distance override")]
    CoincidentNodes { from: String, to: String },
    #[error("link {from}->{to} has non-positive distance {distance_km} km")]
    NonPositiveDistance { from: String, to: String, distance_km: f64 },
    #[error("refractive index {0} below 1 would make the link superluminal")]
    RefractiveIndexBelowOne(f64),
    #[error("jitter specification invalid: {0}")]
    InvalidJitter(String),
    #[error("sip node `{0}` is not defined in the network")]
    UnknownSipNode(String),
    #[error("exchange `{0}` has no link to the SIP and default SIP links are disabled")]
    MissingSipLink(String),
    #[error(transparent)]
    Spacetime(#[from] crate::spacetime::SpacetimeError),
}

/// Convert geodetic coordinates to Earth-centered Cartesian km on a sphere of
/// radius `R_earth + altitude`. Latitude 90° maps to +z, (0°, 0°) to +x.
pub fn node_position(
    latitude_deg: f64,
    longitude_deg: f64,
    altitude_m: f64,
) -> Result<Vec3, NetworkError> {
    if !(latitude_deg.abs() <= 90.0 && longitude_deg.abs() <= 180.0)
        || !latitude_deg.is_finite()
        || !longitude_deg.is_finite()
        || !altitude_m.is_finite()
    {
        return Err(NetworkError::CoordinatesOutOfRange { latitude_deg, longitude_deg });
    }
    let lat = latitude_deg.to_radians();
    let lon = longitude_deg.to_radians();
    let r = EARTH_RADIUS_KM + altitude_m / 1000.0;
    Ok(Vec3::new(
        r * lat.cos() * lon.cos(),
        r * lat.cos() * lon.sin(),
        r * lat.sin(),
    ))
}

/// An exchange data center pinned to the spherical Earth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeNode {
    pub id: String,
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    /// Clock-rate factor relative to coordinate time; 1.0 unless the scenario
    /// opts into the gravitational model.
    pub clock_rate: f64,
    pub position: Vec3,
}

impl ExchangeNode {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
    ) -> Result<Self, NetworkError> {
        let position = node_position(latitude_deg, longitude_deg, altitude_m)?;
        Ok(ExchangeNode {
            id: id.into(),
            name: name.into(),
            latitude_deg,
            longitude_deg,
            altitude_m,
            clock_rate: 1.0,
            position,
        })
    }

    /// Replace the unit clock rate with the first-order gravitational factor
    /// for this node's altitude.
    pub fn with_gravitational_clock(mut self) -> Result<Self, NetworkError> {
        self.clock_rate = gravitational_rate(self.altitude_m)?;
        Ok(self)
    }
}

/// Physical medium of a link; all reduce to a refractive index ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "medium", rename_all = "snake_case")]
pub enum Medium {
    Vacuum,
    Fiber {
        #[serde(default = "default_fiber_index")]
        n: f64,
    },
    Microwave {
        #[serde(default = "default_microwave_index")]
        n: f64,
    },
}

fn default_fiber_index() -> f64 {
    1.5
}

fn default_microwave_index() -> f64 {
    1.0003
}

impl Medium {
    pub fn refractive_index(&self) -> f64 {
        match *self {
            Medium::Vacuum => 1.0,
            Medium::Fiber { n } => n,
            Medium::Microwave { n } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Medium::Vacuum => "vacuum",
            Medium::Fiber { .. } => "fiber",
            Medium::Microwave { .. } => "microwave",
        }
    }
}

/// Additive, non-negative delay noise drawn from a seeded generator.
///
/// Draw `k` for a given spec is a pure function of `(seed, k)`: each index
/// seeds its own ChaCha stream, so delays are reproducible regardless of the
/// order in which they are requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum JitterDistribution {
    /// Uniform on [lo_us, hi_us], lo_us ≥ 0.
    Uniform { lo_us: f64, hi_us: f64 },
    /// Exponential with the given mean, µs.
    Exponential { mean_us: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    #[serde(flatten)]
    pub distribution: JitterDistribution,
    pub seed: u64,
}

impl JitterSpec {
    pub fn validate(&self) -> Result<(), NetworkError> {
        match self.distribution {
            JitterDistribution::Uniform { lo_us, hi_us } => {
                if lo_us.is_nan() || hi_us.is_nan() || lo_us < 0.0 || hi_us < lo_us {
                    return Err(NetworkError::InvalidJitter(format!(
                        "uniform bounds [{lo_us}, {hi_us}] must satisfy 0 <= lo <= hi"
                    )));
                }
            }
            JitterDistribution::Exponential { mean_us } => {
                if mean_us.is_nan() || mean_us < 0.0 {
                    return Err(NetworkError::InvalidJitter(format!(
                        "exponential mean {mean_us} must be >= 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn draw_us(&self, draw_index: u64) -> f64 {
        let mut rng = ChaCha12Rng::seed_from_u64(
            self.seed ^ draw_index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let raw = match self.distribution {
            JitterDistribution::Uniform { lo_us, hi_us } => {
                if hi_us > lo_us {
                    rng.gen_range(lo_us..hi_us)
                } else {
                    lo_us
                }
            }
            JitterDistribution::Exponential { mean_us } => {
                let u: f64 = rng.gen::<f64>();
                -mean_us * (1.0 - u).ln()
            }
        };
        raw.max(0.0)
    }
}

/// A single fixed-delay channel between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
    #[serde(flatten)]
    pub medium: Medium,
    /// Pins the link length instead of the node-position chord. Used by the
    /// shipped paper network, whose published pairwise distances disagree
    /// with its published coordinates.
    pub distance_override_km: Option<f64>,
    pub jitter: Option<JitterSpec>,
}

impl Link {
    pub fn new(from: impl Into<String>, to: impl Into<String>, medium: Medium) -> Self {
        Link {
            from: from.into(),
            to: to.into(),
            medium,
            distance_override_km: None,
            jitter: None,
        }
    }

    pub fn with_distance_km(mut self, km: f64) -> Self {
        self.distance_override_km = Some(km);
        self
    }

    pub fn with_jitter(mut self, jitter: JitterSpec) -> Self {
        self.jitter = Some(jitter);
        self
    }

    /// True when this link joins `a` and `b` in either direction.
    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }
}

/// How inter-node distances are measured when no override is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceModel {
    /// Straight-line chord through the Earth (line-of-sight; the d/c floor).
    #[default]
    Chord,
    /// Great-circle arc along the surface.
    GreatCircle,
}

/// An immutable exchange network: nodes, links, and the SIP position.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: BTreeMap<String, ExchangeNode>,
    links: Vec<Link>,
    sip_position: Vec3,
    sip_node: Option<String>,
    distance_model: DistanceModel,
    default_sip_link: bool,
}

impl Network {
    pub fn new(
        nodes: Vec<ExchangeNode>,
        links: Vec<Link>,
        sip: SipPlacement,
        distance_model: DistanceModel,
        default_sip_link: bool,
    ) -> Result<Self, NetworkError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            if map.insert(node.id.clone(), node.clone()).is_some() {
                return Err(NetworkError::DuplicateNode(node.id));
            }
        }
        let (sip_position, sip_node) = match sip {
            SipPlacement::Node(id) => {
                let node = map
                    .get(&id)
                    .ok_or_else(|| NetworkError::UnknownSipNode(id.clone()))?;
                (node.position, Some(id))
            }
            SipPlacement::Position(p) => {
                if !p.is_finite() {
                    return Err(NetworkError::CoordinatesOutOfRange {
                        latitude_deg: f64::NAN,
                        longitude_deg: f64::NAN,
                    });
                }
                (p, None)
            }
        };
        let network = Network {
            nodes: map,
            links,
            sip_position,
            sip_node,
            distance_model,
            default_sip_link,
        };
        for link in &network.links {
            if link.medium.refractive_index() < 1.0 {
                return Err(NetworkError::RefractiveIndexBelowOne(
                    link.medium.refractive_index(),
                ));
            }
            if let Some(j) = &link.jitter {
                j.validate()?;
            }
            effective_distance(link, &network)?;
        }
        Ok(network)
    }

    pub fn node(&self, id: &str) -> Result<&ExchangeNode, NetworkError> {
        self.nodes
            .get(id)
            .ok_or_else(|| NetworkError::UnknownNode(id.to_string()))
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &ExchangeNode> {
        self.nodes.values()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn sip_position(&self) -> Vec3 {
        self.sip_position
    }

    pub fn sip_node(&self) -> Option<&str> {
        self.sip_node.as_deref()
    }

    pub fn distance_model(&self) -> DistanceModel {
        self.distance_model
    }

    /// Distance between two nodes under the configured model, km.
    pub fn node_distance_km(&self, a: &str, b: &str) -> Result<f64, NetworkError> {
        let na = self.node(a)?;
        let nb = self.node(b)?;
        Ok(match self.distance_model {
            DistanceModel::Chord => (na.position - nb.position).norm(),
            DistanceModel::GreatCircle => great_circle_km(na, nb),
        })
    }

    /// Propagation delay from an exchange to the SIP for that exchange's
    /// `draw_index`-th quote. Uses the explicit link to the SIP node when one
    /// exists; a co-located exchange delivers instantaneously; otherwise a
    /// default fiber link over the direct distance applies (if enabled).
    pub fn sip_delay_us(&self, exchange_id: &str, draw_index: u64) -> Result<f64, NetworkError> {
        let node = self.node(exchange_id)?;
        if let Some(sip_node) = &self.sip_node {
            if sip_node == exchange_id {
                return Ok(0.0);
            }
            if let Some(link) = self.links.iter().find(|l| l.connects(exchange_id, sip_node)) {
                return propagation_delay(link, self, draw_index);
            }
        }
        if !self.default_sip_link {
            return Err(NetworkError::MissingSipLink(exchange_id.to_string()));
        }
        let distance = (node.position - self.sip_position).norm();
        Ok(medium_time_us(distance, default_fiber_index()))
    }
}

/// Where the SIP sits: co-located with a node, or at explicit coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum SipPlacement {
    Node(String),
    Position(Vec3),
}

fn great_circle_km(a: &ExchangeNode, b: &ExchangeNode) -> f64 {
    let (la1, lo1) = (a.latitude_deg.to_radians(), a.longitude_deg.to_radians());
    let (la2, lo2) = (b.latitude_deg.to_radians(), b.longitude_deg.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2)
        + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    let radius = EARTH_RADIUS_KM + (a.altitude_m + b.altitude_m) / 2.0 / 1000.0;
    2.0 * radius * h.sqrt().asin()
}

/// Effective length of a link: the override when present, else the distance
/// between its endpoints under the network's distance model.
pub fn effective_distance(link: &Link, network: &Network) -> Result<f64, NetworkError> {
    let d = match link.distance_override_km {
        Some(km) => km,
        None => network.node_distance_km(&link.from, &link.to)?,
    };
    if d <= 0.0 || !d.is_finite() {
        if link.distance_override_km.is_none() && d == 0.0 {
            return Err(NetworkError::CoincidentNodes {
                from: link.from.clone(),
                to: link.to.clone(),
            });
        }
        return Err(NetworkError::NonPositiveDistance {
            from: link.from.clone(),
            to: link.to.clone(),
            distance_km: d,
        });
    }
    Ok(d)
}

/// Delay over a link for its `draw_index`-th transmission, µs.
///
/// `medium_time(d, n) + jitter(draw_index)`; deterministic given the link's
/// jitter seed, and never below the vacuum light time of the same distance.
pub fn propagation_delay(
    link: &Link,
    network: &Network,
    draw_index: u64,
) -> Result<f64, NetworkError> {
    let distance = effective_distance(link, network)?;
    let base = medium_time_us(distance, link.medium.refractive_index());
    let jitter = link.jitter.as_ref().map_or(0.0, |j| j.draw_us(draw_index));
    let delay = base + jitter;
    debug_assert!(delay >= light_time_us(distance));
    Ok(delay)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_nodes() -> Vec<ExchangeNode> {
        vec![
            ExchangeNode::new("mahwah", "Mahwah", 41.08, -74.16, 0.0).unwrap(),
            ExchangeNode::new("carteret", "Carteret", 40.58, -74.23, 0.0).unwrap(),
            ExchangeNode::new("secaucus", "Secaucus", 40.79, -74.06, 0.0).unwrap(),
            ExchangeNode::new("aurora", "Aurora", 41.76, -88.29, 0.0).unwrap(),
        ]
    }

    #[test]
    fn node_position_poles_and_equator() {
        let north = node_position(90.0, 0.0, 0.0).unwrap();
        assert!((north.x).abs() < 1e-9 && (north.y).abs() < 1e-9);
        assert!((north.z - 6371.0).abs() < 1e-9);

        let origin = node_position(0.0, 0.0, 0.0).unwrap();
        assert!((origin.x - 6371.0).abs() < 1e-9);
        assert!(origin.y.abs() < 1e-9 && origin.z.abs() < 1e-9);
    }

    #[test]
    fn node_position_radius_includes_altitude() {
        let p = node_position(40.0, -74.0, 250.0).unwrap();
        let r = p.norm();
        assert!((r - (6371.0 + 0.25)).abs() <= 1e-9 * r);
    }

    #[test]
    fn node_position_rejects_out_of_range() {
        assert!(node_position(91.0, 0.0, 0.0).is_err());
        assert!(node_position(0.0, 200.0, 0.0).is_err());
    }

    #[test]
    fn published_coordinates_disagree_with_published_distances() {
        // The data source's own tables disagree: coordinates put
        // Mahwah-Carteret at ~55.9 km, the distance table says 43 km. The
        // shipped network pins the table values with overrides.
        let a = node_position(41.08, -74.16, 0.0).unwrap();
        let b = node_position(40.58, -74.23, 0.0).unwrap();
        let chord = (a - b).norm();
        assert!((chord - 55.908349665322724).abs() < 1e-9, "chord = {chord}");

        let aurora = node_position(41.76, -88.29, 0.0).unwrap();
        let to_aurora = (a - aurora).norm();
        assert!((to_aurora - 1177.6097094919523).abs() < 1e-9, "chord = {to_aurora}");
    }

    #[test]
    fn effective_distance_prefers_override() {
        let network = Network::new(
            table1_nodes(),
            vec![Link::new("carteret", "mahwah", Medium::Fiber { n: 1.5 }).with_distance_km(43.0)],
            SipPlacement::Node("mahwah".into()),
            DistanceModel::Chord,
            true,
        )
        .unwrap();
        let d = effective_distance(&network.links()[0], &network).unwrap();
        assert_eq!(d, 43.0);
    }

    #[test]
    fn coincident_nodes_without_override_rejected() {
        let twin_a = ExchangeNode::new("a", "A", 10.0, 10.0, 0.0).unwrap();
        let twin_b = ExchangeNode::new("b", "B", 10.0, 10.0, 0.0).unwrap();
        let err = Network::new(
            vec![twin_a, twin_b],
            vec![Link::new("a", "b", Medium::Vacuum)],
            SipPlacement::Node("a".into()),
            DistanceModel::Chord,
            true,
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::CoincidentNodes { .. }));
    }

    #[test]
    fn propagation_delay_matches_table2() {
        let network = Network::new(
            table1_nodes(),
            vec![
                Link::new("carteret", "mahwah", Medium::Fiber { n: 1.5 }).with_distance_km(43.0),
                Link::new("secaucus", "mahwah", Medium::Vacuum).with_distance_km(43.0),
            ],
            SipPlacement::Node("mahwah".into()),
            DistanceModel::Chord,
            true,
        )
        .unwrap();
        let fiber = propagation_delay(&network.links()[0], &network, 0).unwrap();
        let vacuum = propagation_delay(&network.links()[1], &network, 0).unwrap();
        assert!((fiber - 215.0).abs() < 1.0, "fiber = {fiber}");
        assert!((vacuum - 143.0).abs() < 1.0, "vacuum = {vacuum}");
    }

    #[test]
    fn jitter_is_deterministic_and_non_negative() {
        let spec = JitterSpec {
            distribution: JitterDistribution::Uniform { lo_us: 0.0, hi_us: 5.0 },
            seed: 7,
        };
        for k in 0..200u64 {
            let a = spec.draw_us(k);
            let b = spec.draw_us(k);
            assert_eq!(a, b);
            assert!((0.0..5.0).contains(&a));
        }
        let exp = JitterSpec {
            distribution: JitterDistribution::Exponential { mean_us: 3.0 },
            seed: 11,
        };
        for k in 0..200u64 {
            assert!(exp.draw_us(k) >= 0.0);
            assert_eq!(exp.draw_us(k), exp.draw_us(k));
        }
    }

    #[test]
    fn sip_delay_colocated_is_zero() {
        let network = Network::new(
            table1_nodes(),
            vec![],
            SipPlacement::Node("mahwah".into()),
            DistanceModel::Chord,
            true,
        )
        .unwrap();
        assert_eq!(network.sip_delay_us("mahwah", 0).unwrap(), 0.0);
        // No explicit link: falls back to default fiber over the chord.
        let d = network.node_distance_km("carteret", "mahwah").unwrap();
        let expected = medium_time_us(d, 1.5);
        assert_eq!(network.sip_delay_us("carteret", 0).unwrap(), expected);
    }

    #[test]
    fn sip_delay_missing_link_errors_when_defaults_disabled() {
        let network = Network::new(
            table1_nodes(),
            vec![],
            SipPlacement::Node("mahwah".into()),
            DistanceModel::Chord,
            false,
        )
        .unwrap();
        assert!(matches!(
            network.sip_delay_us("carteret", 0),
            Err(NetworkError::MissingSipLink(_))
        ));
    }

    #[test]
    fn great_circle_close_to_chord_at_short_range() {
        let network = Network::new(
            table1_nodes(),
            vec![],
            SipPlacement::Node("mahwah".into()),
            DistanceModel::GreatCircle,
            true,
        )
        .unwrap();
        let gc = network.node_distance_km("mahwah", "carteret").unwrap();
        assert!((gc - 55.908529059080855).abs() < 1e-9, "gc = {gc}");
    }

    #[test]
    fn gravitational_clock_rate_applied() {
        let node = ExchangeNode::new("high", "High", 40.0, -74.0, 1000.0)
            .unwrap()
            .with_gravitational_clock()
            .unwrap();
        assert!(node.clock_rate > 1.0);
        assert!((node.clock_rate - 1.0 - 1.09e-13).abs() < 1e-15);
    }
}
