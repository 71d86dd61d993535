//! C ABI for the simulator core: flat functions over the Minkowski geometry
//! plus an opaque scenario handle for config-driven runs.
//!
//! Conventions (mirrored in `include/lightcone.h`):
//!
//! - Every fallible function returns an [`LcStatus`]; results come back
//!   through out-pointers that are written only on `LC_OK`.
//! - `lc_last_error_message` returns a thread-local, NUL-terminated
//!   description of the most recent failure on the calling thread, valid
//!   until that thread's next `lc_*` call.
//! - Events are passed as four doubles `(x_km, y_km, z_km, t_us)`; boost
//!   velocities as three doubles in km/µs.
//! - `lc_scenario_*` functions operate on an opaque handle obtained from
//!   `lc_scenario_load` and released with `lc_scenario_free`.
//!
//! The header is maintained by hand (and covered by a symbol test) because
//! the build environment has no binding generator; keep the two files in
//! sync when editing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lightcone::config::{load_config, resolve, Overrides, ResolvedScenario};
use lightcone::quotes::QuoteUpdate;
use lightcone::run;
use lightcone::spacetime::{
    boost_event, classify, flip_boost, gravitational_rate, interval_squared, light_time_us,
    medium_time_us, ordering_in_frame, FrameOrdering, IntervalClass, LorentzBoost,
    SpacetimeError, SpacetimeEvent, Vec3,
};

/// Status codes returned by every fallible `lc_*` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    LcOk = 0,
    LcNullArgument = 1,
    LcInvalidUtf8 = 2,
    LcInvalidArgument = 3,
    LcSuperluminalBoost = 4,
    LcNotSpacelike = 5,
    LcConfigError = 6,
    LcIoError = 7,
    LcUnknownEvent = 8,
    LcPanic = 9,
}

/// Interval classes as stable integers.
pub const LC_CLASS_TIMELIKE: i32 = 0;
pub const LC_CLASS_SPACELIKE: i32 = 1;
pub const LC_CLASS_LIGHTLIKE: i32 = 2;

/// Frame orderings as stable integers.
pub const LC_ORDER_A_BEFORE_B: i32 = 0;
pub const LC_ORDER_B_BEFORE_A: i32 = 1;
pub const LC_ORDER_INDISTINGUISHABLE: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() =
            CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::default());
}

/// Most recent error on this thread, empty string when none. The pointer is
/// valid until the next `lc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn guarded<F: FnOnce() -> LcStatus>(f: F) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LcStatus::LcPanic
        }
    }
}

fn event(label: &str, x: f64, y: f64, z: f64, t: f64) -> Result<SpacetimeEvent, LcStatus> {
    SpacetimeEvent::new(label, Vec3::new(x, y, z), t).map_err(|e| {
        set_error(e.to_string());
        LcStatus::LcInvalidArgument
    })
}

fn boost(vx: f64, vy: f64, vz: f64) -> Result<LorentzBoost, LcStatus> {
    LorentzBoost::new(Vec3::new(vx, vy, vz)).map_err(|e| {
        set_error(e.to_string());
        LcStatus::LcSuperluminalBoost
    })
}

/// Squared Minkowski interval `c²Δt² − |Δx|²` in km². Pure; NaN for
/// non-finite input.
#[no_mangle]
pub extern "C" fn lc_interval_squared(
    ax: f64, ay: f64, az: f64, at_us: f64,
    bx: f64, by: f64, bz: f64, bt_us: f64,
) -> f64 {
    let (Ok(a), Ok(b)) = (event("a", ax, ay, az, at_us), event("b", bx, by, bz, bt_us)) else {
        return f64::NAN;
    };
    interval_squared(&a, &b)
}

/// Vacuum light time over a distance, µs. NaN for negative distance.
#[no_mangle]
pub extern "C" fn lc_light_time_us(distance_km: f64) -> f64 {
    if distance_km.is_nan() || distance_km < 0.0 {
        return f64::NAN;
    }
    light_time_us(distance_km)
}

/// Propagation time through a medium with refractive index `n >= 1`, µs.
#[no_mangle]
pub extern "C" fn lc_medium_time_us(distance_km: f64, refractive_index: f64) -> f64 {
    if distance_km.is_nan() || distance_km < 0.0 || refractive_index.is_nan() || refractive_index < 1.0 {
        return f64::NAN;
    }
    medium_time_us(distance_km, refractive_index)
}

/// First-order gravitational clock-rate factor for a near-surface altitude.
///
/// # Safety
/// `out_rate` must be null or valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn lc_gravitational_rate(altitude_m: f64, out_rate: *mut f64) -> LcStatus {
    guarded(|| {
        if out_rate.is_null() {
            set_error("out_rate is null");
            return LcStatus::LcNullArgument;
        }
        match gravitational_rate(altitude_m) {
            Ok(rate) => {
                clear_error();
                unsafe { *out_rate = rate };
                LcStatus::LcOk
            }
            Err(e) => {
                set_error(e.to_string());
                LcStatus::LcInvalidArgument
            }
        }
    })
}

/// Classify an event pair against the light cone with tolerance band
/// `epsilon_km2`. Writes one of the `LC_CLASS_*` constants.
///
/// # Safety
/// `out_class` must be null or valid for writing one `int32_t`.
#[no_mangle]
pub unsafe extern "C" fn lc_classify(
    ax: f64, ay: f64, az: f64, at_us: f64,
    bx: f64, by: f64, bz: f64, bt_us: f64,
    epsilon_km2: f64,
    out_class: *mut i32,
) -> LcStatus {
    guarded(|| {
        if out_class.is_null() {
            set_error("out_class is null");
            return LcStatus::LcNullArgument;
        }
        if epsilon_km2.is_nan() || epsilon_km2 < 0.0 {
            set_error("epsilon_km2 must be >= 0");
            return LcStatus::LcInvalidArgument;
        }
        let a = match event("a", ax, ay, az, at_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let b = match event("b", bx, by, bz, bt_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let class = match classify(&a, &b, epsilon_km2) {
            IntervalClass::Timelike => LC_CLASS_TIMELIKE,
            IntervalClass::Spacelike => LC_CLASS_SPACELIKE,
            IntervalClass::Lightlike => LC_CLASS_LIGHTLIKE,
        };
        clear_error();
        unsafe { *out_class = class };
        LcStatus::LcOk
    })
}

/// Transform an event into the frame moving at `(vx, vy, vz)` km/µs. Writes
/// `(x', y', z', t')` into `out_coords[0..4]`.
///
/// # Safety
/// `out_coords` must be null or valid for writing four `double`s.
#[no_mangle]
pub unsafe extern "C" fn lc_boost_event(
    vx: f64, vy: f64, vz: f64,
    x: f64, y: f64, z: f64, t_us: f64,
    out_coords: *mut f64,
) -> LcStatus {
    guarded(|| {
        if out_coords.is_null() {
            set_error("out_coords is null");
            return LcStatus::LcNullArgument;
        }
        let frame = match boost(vx, vy, vz) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let e = match event("e", x, y, z, t_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let out = boost_event(&frame, &e);
        clear_error();
        unsafe {
            *out_coords.add(0) = out.position.x;
            *out_coords.add(1) = out.position.y;
            *out_coords.add(2) = out.position.z;
            *out_coords.add(3) = out.t_us;
        }
        LcStatus::LcOk
    })
}

/// Coordinate order of a pair in the boosted frame. Writes one of the
/// `LC_ORDER_*` constants.
///
/// # Safety
/// `out_order` must be null or valid for writing one `int32_t`.
#[no_mangle]
pub unsafe extern "C" fn lc_ordering_in_frame(
    ax: f64, ay: f64, az: f64, at_us: f64,
    bx: f64, by: f64, bz: f64, bt_us: f64,
    vx: f64, vy: f64, vz: f64,
    tolerance_us: f64,
    out_order: *mut i32,
) -> LcStatus {
    guarded(|| {
        if out_order.is_null() {
            set_error("out_order is null");
            return LcStatus::LcNullArgument;
        }
        if tolerance_us.is_nan() || tolerance_us < 0.0 {
            set_error("tolerance_us must be >= 0");
            return LcStatus::LcInvalidArgument;
        }
        let frame = match boost(vx, vy, vz) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let a = match event("a", ax, ay, az, at_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let b = match event("b", bx, by, bz, bt_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let order = match ordering_in_frame(&a, &b, &frame, tolerance_us) {
            FrameOrdering::ABeforeB => LC_ORDER_A_BEFORE_B,
            FrameOrdering::BBeforeA => LC_ORDER_B_BEFORE_A,
            FrameOrdering::Indistinguishable => LC_ORDER_INDISTINGUISHABLE,
        };
        clear_error();
        unsafe { *out_order = order };
        LcStatus::LcOk
    })
}

/// Construct the order-reversing boost for a spacelike pair. Writes the boost
/// velocity (km/µs) into `out_velocity[0..3]`. Fails with
/// `LC_NOT_SPACELIKE` when the pair has absolute order.
///
/// # Safety
/// `out_velocity` must be null or valid for writing three `double`s.
#[no_mangle]
pub unsafe extern "C" fn lc_flip_boost(
    ax: f64, ay: f64, az: f64, at_us: f64,
    bx: f64, by: f64, bz: f64, bt_us: f64,
    margin: f64,
    out_velocity: *mut f64,
) -> LcStatus {
    guarded(|| {
        if out_velocity.is_null() {
            set_error("out_velocity is null");
            return LcStatus::LcNullArgument;
        }
        let a = match event("a", ax, ay, az, at_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        let b = match event("b", bx, by, bz, bt_us) {
            Ok(e) => e,
            Err(s) => return s,
        };
        match flip_boost(&a, &b, margin) {
            Ok(boost) => {
                let v = boost.velocity();
                clear_error();
                unsafe {
                    *out_velocity.add(0) = v.x;
                    *out_velocity.add(1) = v.y;
                    *out_velocity.add(2) = v.z;
                }
                LcStatus::LcOk
            }
            Err(e @ SpacetimeError::NotSpacelike { .. }) => {
                set_error(e.to_string());
                LcStatus::LcNotSpacelike
            }
            Err(e) => {
                set_error(e.to_string());
                LcStatus::LcInvalidArgument
            }
        }
    })
}

/// Opaque scenario handle: a validated config plus its assembled quote list.
pub struct LcScenario {
    scenario: ResolvedScenario,
    quotes: Vec<QuoteUpdate>,
}

fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, LcStatus> {
    if ptr.is_null() {
        set_error(format!("{name} is null"));
        return Err(LcStatus::LcNullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        LcStatus::LcInvalidUtf8
    })
}

/// Load and validate a scenario config file. On success writes a handle that
/// must be released with `lc_scenario_free`.
///
/// # Safety
/// `config_path` must be null or a NUL-terminated string; `out_scenario`
/// must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_load(
    config_path: *const c_char,
    out_scenario: *mut *mut LcScenario,
) -> LcStatus {
    guarded(|| {
        if out_scenario.is_null() {
            set_error("out_scenario is null");
            return LcStatus::LcNullArgument;
        }
        let path = match utf8_arg(config_path, "config_path") {
            Ok(p) => Path::new(p).to_path_buf(),
            Err(s) => return s,
        };
        let config = match load_config(&path) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return LcStatus::LcConfigError;
            }
        };
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let scenario = match resolve(config, base, &Overrides::default()) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return LcStatus::LcConfigError;
            }
        };
        let quotes = match run::assemble_quotes(&scenario) {
            Ok(q) => q,
            Err(e) => {
                set_error(e.to_string());
                return LcStatus::LcConfigError;
            }
        };
        clear_error();
        let handle = Box::new(LcScenario { scenario, quotes });
        unsafe { *out_scenario = Box::into_raw(handle) };
        LcStatus::LcOk
    })
}

/// Release a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must be a pointer previously returned by `lc_scenario_load`
/// and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_free(scenario: *mut LcScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Number of quote events the scenario assembles.
///
/// # Safety
/// `scenario` must be null or a live handle from `lc_scenario_load`;
/// `out_count` must be null or valid for writing one `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_event_count(
    scenario: *const LcScenario,
    out_count: *mut u64,
) -> LcStatus {
    guarded(|| {
        if scenario.is_null() || out_count.is_null() {
            set_error("scenario or out_count is null");
            return LcStatus::LcNullArgument;
        }
        let handle = unsafe { &*scenario };
        clear_error();
        unsafe { *out_count = handle.quotes.len() as u64 };
        LcStatus::LcOk
    })
}

/// Run the scenario and write all output files (and the manifest) into
/// `out_dir`, byte-identically reproducible.
///
/// # Safety
/// `scenario` must be null or a live handle from `lc_scenario_load`;
/// `out_dir` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_simulate(
    scenario: *const LcScenario,
    out_dir: *const c_char,
) -> LcStatus {
    guarded(|| {
        if scenario.is_null() {
            set_error("scenario is null");
            return LcStatus::LcNullArgument;
        }
        let dir = match utf8_arg(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let handle = unsafe { &*scenario };
        let mut redirected = handle.scenario.clone();
        redirected.out_dir = Path::new(dir).to_path_buf();
        match run::simulate_to_dir(&redirected) {
            Ok(_) => {
                clear_error();
                LcStatus::LcOk
            }
            Err(e) => {
                set_error(e.to_string());
                LcStatus::LcIoError
            }
        }
    })
}

/// Classify a scenario event pair by id and construct the order-reversing
/// boost. Writes the velocity into `out_velocity[0..3]` and the pair's
/// interval class into `out_class`. `LC_NOT_SPACELIKE` when the order is
/// absolute (the class is still written); `LC_UNKNOWN_EVENT` for bad ids.
///
/// # Safety
/// `scenario` must be null or a live handle; `event_a`/`event_b` must be
/// null or NUL-terminated strings; `out_velocity` needs room for three
/// `double`s and `out_class` for one `int32_t` (or be null).
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_flip(
    scenario: *const LcScenario,
    event_a: *const c_char,
    event_b: *const c_char,
    out_velocity: *mut f64,
    out_class: *mut i32,
) -> LcStatus {
    guarded(|| {
        if scenario.is_null() || out_velocity.is_null() || out_class.is_null() {
            set_error("scenario, out_velocity, or out_class is null");
            return LcStatus::LcNullArgument;
        }
        let id_a = match utf8_arg(event_a, "event_a") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let id_b = match utf8_arg(event_b, "event_b") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let handle = unsafe { &*scenario };
        let find = |id: &str| handle.quotes.iter().find(|q| q.event.id == id);
        let (Some(a), Some(b)) = (find(id_a), find(id_b)) else {
            set_error(format!("unknown event id `{id_a}` or `{id_b}`"));
            return LcStatus::LcUnknownEvent;
        };
        let class = match classify(
            &a.event,
            &b.event,
            lightcone::spacetime::DEFAULT_CLASSIFY_EPSILON_KM2,
        ) {
            IntervalClass::Timelike => LC_CLASS_TIMELIKE,
            IntervalClass::Spacelike => LC_CLASS_SPACELIKE,
            IntervalClass::Lightlike => LC_CLASS_LIGHTLIKE,
        };
        unsafe { *out_class = class };
        match flip_boost(&a.event, &b.event, 0.01) {
            Ok(boost) => {
                let v = boost.velocity();
                clear_error();
                unsafe {
                    *out_velocity.add(0) = v.x;
                    *out_velocity.add(1) = v.y;
                    *out_velocity.add(2) = v.z;
                }
                LcStatus::LcOk
            }
            Err(e) => {
                set_error(e.to_string());
                LcStatus::LcNotSpacelike
            }
        }
    })
}
