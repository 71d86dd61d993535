//! Minkowski geometry over exchange-scale coordinates.
//!
//! Everything in this module works in kilometres and microseconds, with the
//! speed of light fixed at `0.299792458 km/µs`. At those scales the squared
//! interval between two events,
//!
//! ```text
//! s² = c²·Δt² − |Δx|²
//! ```
//!
//! classifies every event pair:
//!
//! | s²      | class     | meaning                                   |
//! |---------|-----------|-------------------------------------------|
//! | s² > 0  | Timelike  | order is the same in every inertial frame |
//! | s² < 0  | Spacelike | order depends on the observer             |
//! | s² ≈ 0  | Lightlike | on the light cone                         |
//!
//! For spacelike pairs, [`flip_boost`] constructs an explicit sub-luminal
//! frame change that reverses the pair's coordinate-time order. That boost is
//! the computational witness used by the consolidation analysis: any quantity
//! that depends on the order of a spacelike pair is a convention, not a
//! measurement.

use serde::{Deserialize, Serialize};

/// Speed of light, km/µs. Exact by definition; never configurable.
pub const SPEED_OF_LIGHT_KM_PER_US: f64 = 0.299_792_458;

/// Standard surface gravity, m/s².
pub const STANDARD_GRAVITY_M_PER_S2: f64 = 9.806_65;

/// Mean Earth radius, km (spherical model).
pub const EARTH_RADIUS_KM: f64 = 6_371.0;

/// Default light-cone tolerance for [`classify`], km².
pub const DEFAULT_CLASSIFY_EPSILON_KM2: f64 = 1e-6;

/// Default tolerance below which two frame times compare as indistinguishable, µs.
pub const DEFAULT_ORDERING_TOLERANCE_US: f64 = 1e-6;

/// Boost speeds are capped at this fraction of c; beyond it gamma is
/// numerically useless at f64 precision anyway.
pub const MAX_BOOST_BETA: f64 = 1.0 - 1e-6;

const C: f64 = SPEED_OF_LIGHT_KM_PER_US;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SpacetimeError {
    #[error("event `{id}` has a non-finite coordinate")]
    NonFiniteCoordinate { id: String },
    #[error("boost speed {speed_km_per_us} km/µs is not strictly below c = {C} km/µs")]
    SuperluminalBoost { speed_km_per_us: f64 },
    #[error(
        "events are not spacelike-separated (s² = {interval_squared_km2} km²); \
         their order is absolute, so no frame change can reverse it"
    )]
    NotSpacelike { interval_squared_km2: f64 },
    #[error("flip margin {margin} outside (0, 1)")]
    InvalidMargin { margin: f64 },
    #[error("altitude {altitude_m} m outside the ±10 km near-surface band")]
    AltitudeOutOfRange { altitude_m: f64 },
}

/// A 3-vector in km (positions) or km/µs (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(k * self.x, k * self.y, k * self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// A point event in the lab frame: position in km, coordinate time in µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub id: String,
    pub position: Vec3,
    pub t_us: f64,
}

impl SpacetimeEvent {
    pub fn new(
        id: impl Into<String>,
        position: Vec3,
        t_us: f64,
    ) -> Result<Self, SpacetimeError> {
        let id = id.into();
        if !position.is_finite() || !t_us.is_finite() {
            return Err(SpacetimeError::NonFiniteCoordinate { id });
        }
        Ok(SpacetimeEvent { id, position, t_us })
    }
}

/// Causal classification of an event pair. Symmetric in its two events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalClass {
    Timelike,
    Spacelike,
    Lightlike,
}

impl std::fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntervalClass::Timelike => write!(f, "timelike"),
            IntervalClass::Spacelike => write!(f, "spacelike"),
            IntervalClass::Lightlike => write!(f, "lightlike"),
        }
    }
}

/// Coordinate-time order of a pair as seen from one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameOrdering {
    ABeforeB,
    BBeforeA,
    Indistinguishable,
}

impl std::fmt::Display for FrameOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameOrdering::ABeforeB => write!(f, "a-before-b"),
            FrameOrdering::BBeforeA => write!(f, "b-before-a"),
            FrameOrdering::Indistinguishable => write!(f, "indistinguishable"),
        }
    }
}

/// An inertial frame change at velocity `v` (km/µs), `|v| < c` strictly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec3", into = "Vec3")]
pub struct LorentzBoost {
    velocity: Vec3,
    speed: f64,
    gamma: f64,
}

impl LorentzBoost {
    pub fn new(velocity: Vec3) -> Result<Self, SpacetimeError> {
        let speed = velocity.norm();
        if !velocity.is_finite() || speed >= C {
            return Err(SpacetimeError::SuperluminalBoost { speed_km_per_us: speed });
        }
        let beta2 = (speed / C) * (speed / C);
        let gamma = 1.0 / (1.0 - beta2).sqrt();
        Ok(LorentzBoost { velocity, speed, gamma })
    }

    pub fn identity() -> Self {
        LorentzBoost { velocity: Vec3::ZERO, speed: 0.0, gamma: 1.0 }
    }

    /// The boost at `−v`; composing with it recovers the original frame.
    pub fn inverse(&self) -> Self {
        LorentzBoost {
            velocity: self.velocity.scale(-1.0),
            speed: self.speed,
            gamma: self.gamma,
        }
    }

    pub fn velocity(&self) -> Vec3 {
        self.velocity
    }

    pub fn speed_km_per_us(&self) -> f64 {
        self.speed
    }

    /// Speed as a fraction of c.
    pub fn beta(&self) -> f64 {
        self.speed / C
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_identity(&self) -> bool {
        self.speed == 0.0
    }
}

impl TryFrom<Vec3> for LorentzBoost {
    type Error = SpacetimeError;
    fn try_from(v: Vec3) -> Result<Self, Self::Error> {
        LorentzBoost::new(v)
    }
}

impl From<LorentzBoost> for Vec3 {
    fn from(b: LorentzBoost) -> Vec3 {
        b.velocity
    }
}

/// Squared Minkowski interval `s² = c²Δt² − |Δx|²` in km².
///
/// Symmetric in its arguments; positive for timelike pairs, negative for
/// spacelike pairs.
pub fn interval_squared(a: &SpacetimeEvent, b: &SpacetimeEvent) -> f64 {
    let dt = a.t_us - b.t_us;
    let dx = a.position - b.position;
    (C * dt) * (C * dt) - dx.norm_squared()
}

/// Classify a pair by the sign of `s²` with a light-cone band of `±epsilon` km².
pub fn classify(a: &SpacetimeEvent, b: &SpacetimeEvent, epsilon_km2: f64) -> IntervalClass {
    debug_assert!(epsilon_km2 >= 0.0);
    let s2 = interval_squared(a, b);
    if s2 > epsilon_km2 {
        IntervalClass::Timelike
    } else if s2 < -epsilon_km2 {
        IntervalClass::Spacelike
    } else {
        IntervalClass::Lightlike
    }
}

/// Transform an event into the frame moving at the boost velocity.
///
/// Uses the parallel/perpendicular decomposition of the full 3D boost:
/// `t' = γ(t − v·x/c²)`, `x∥' = γ(x∥ − v t)`, `x⊥' = x⊥`. The event id is
/// preserved; only coordinates change.
pub fn boost_event(boost: &LorentzBoost, e: &SpacetimeEvent) -> SpacetimeEvent {
    if boost.is_identity() {
        return e.clone();
    }
    let v = boost.velocity;
    let speed = boost.speed;
    let gamma = boost.gamma;
    let unit = v.scale(1.0 / speed);

    let x_par = e.position.dot(unit);
    let t_prime = gamma * (e.t_us - v.dot(e.position) / (C * C));
    let x_par_prime = gamma * (x_par - speed * e.t_us);
    let position = e.position - unit.scale(x_par) + unit.scale(x_par_prime);

    SpacetimeEvent { id: e.id.clone(), position, t_us: t_prime }
}

/// Which of `a`, `b` comes first in the boosted frame's coordinate time.
pub fn ordering_in_frame(
    a: &SpacetimeEvent,
    b: &SpacetimeEvent,
    boost: &LorentzBoost,
    tolerance_us: f64,
) -> FrameOrdering {
    debug_assert!(tolerance_us >= 0.0);
    let ta = boost_event(boost, a).t_us;
    let tb = boost_event(boost, b).t_us;
    if (ta - tb).abs() <= tolerance_us {
        FrameOrdering::Indistinguishable
    } else if ta < tb {
        FrameOrdering::ABeforeB
    } else {
        FrameOrdering::BBeforeA
    }
}

/// Construct the minimal-axis boost that reverses the coordinate order of a
/// spacelike pair.
///
/// The boost axis is the pair's spatial separation; the speed is the
/// order-reversal threshold `c²|Δt| / |Δx|` scaled by `(1 + margin)` and
/// capped at [`MAX_BOOST_BETA`]·c. For a simultaneous spacelike pair any
/// non-zero speed breaks the tie, so `margin·c` is used.
///
/// Fails with [`SpacetimeError::NotSpacelike`] when the pair has absolute
/// order — the exact situation in which no such frame exists.
pub fn flip_boost(
    a: &SpacetimeEvent,
    b: &SpacetimeEvent,
    margin: f64,
) -> Result<LorentzBoost, SpacetimeError> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(SpacetimeError::InvalidMargin { margin });
    }
    let s2 = interval_squared(a, b);
    if classify(a, b, DEFAULT_CLASSIFY_EPSILON_KM2) != IntervalClass::Spacelike {
        return Err(SpacetimeError::NotSpacelike { interval_squared_km2: s2 });
    }

    let dt = a.t_us - b.t_us;
    let dx = a.position - b.position;
    let distance = dx.norm();
    let axis = dx.scale(1.0 / distance);

    let speed = if dt.abs() <= DEFAULT_ORDERING_TOLERANCE_US {
        margin * C
    } else {
        let threshold = C * C * dt.abs() / distance;
        (threshold * (1.0 + margin)).min(MAX_BOOST_BETA * C)
    };
    let direction = if dt < 0.0 { -1.0 } else { 1.0 };

    LorentzBoost::new(axis.scale(direction * speed))
}

/// Vacuum light time over `d` km, in µs.
pub fn light_time_us(distance_km: f64) -> f64 {
    debug_assert!(distance_km >= 0.0);
    distance_km / C
}

/// Propagation time over `d` km in a medium with the given refractive index.
pub fn medium_time_us(distance_km: f64, refractive_index: f64) -> f64 {
    debug_assert!(distance_km >= 0.0);
    debug_assert!(refractive_index >= 1.0);
    distance_km * refractive_index / C
}

/// First-order gravitational clock-rate factor `1 + g·h/c²` for a clock at
/// `altitude_m` metres above sea level. Valid only in the near-surface band
/// (|h| ≤ 10 km); orbital regimes need the full potential difference.
pub fn gravitational_rate(altitude_m: f64) -> Result<f64, SpacetimeError> {
    if !altitude_m.is_finite() || altitude_m.abs() > 10_000.0 {
        return Err(SpacetimeError::AltitudeOutOfRange { altitude_m });
    }
    let c_m_per_s = SPEED_OF_LIGHT_KM_PER_US * 1.0e9;
    Ok(1.0 + STANDARD_GRAVITY_M_PER_S2 * altitude_m / (c_m_per_s * c_m_per_s))
}
