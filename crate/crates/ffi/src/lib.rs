//! C ABI over the `uavpath` simulator and Q-network policies.
//!
//! Worlds and policies are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`UavpathStatus`]; on failure the
//! message is available from [`uavpath_last_error`] on the same thread until
//! the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use uavpath::d3qn::argmax;
use uavpath::eval::{evaluate, Policy, PolicySet};
use uavpath::mdp::{encode, EncoderKind, FeatureLayout, ObservationHistory};
use uavpath::trainer::{fill_t2_actions, t1_kind_for_width};
use uavpath::{Error, MissionStatus, NetworkParams, Role, ScenarioConfig, WorldState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavpathStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Contract = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavpathRole {
    T1 = 0,
    T2 = 1,
    Jammer = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavpathMission {
    Ongoing = 0,
    Success = 1,
    Collision = 2,
    Timeout = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavpathUavState {
    pub id: usize,
    pub role: UavpathRole,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub radius: f64,
    pub destination_x: f64,
    pub destination_y: f64,
    pub alive: bool,
    pub arrived: bool,
    pub timed_out: bool,
    pub path_length: f64,
    pub collected_bits: u64,
    pub assigned_bits: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavpathMetrics {
    pub episodes: usize,
    pub missions: usize,
    pub sr: f64,
    pub dr: f64,
    pub cr: f64,
    pub timeout_rate: f64,
    pub apl: f64,
    pub mean_sinr: f64,
    pub mean_jammer_distance: f64,
    pub empty_success: bool,
}

/// Simulator instance plus the observation histories used by the
/// history-based encoders.
pub struct UavpathWorld {
    world: WorldState,
    /// T1 view of the jammer.
    jammer_track: ObservationHistory,
    /// Jammer view of the first T1.
    t1_track: ObservationHistory,
}

impl UavpathWorld {
    fn new(world: WorldState) -> UavpathWorld {
        let tau = world.config.history_len;
        UavpathWorld {
            world,
            jammer_track: ObservationHistory::new(tau),
            t1_track: ObservationHistory::new(tau),
        }
    }
}

pub struct UavpathPolicy {
    net: NetworkParams,
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UavpathStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UavpathStatus::Ok,
        Ok(Err(Failure::Null(arg))) => {
            set_last_error(format!("null pointer passed for {arg}"));
            UavpathStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error(msg);
            UavpathStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = match e {
                Error::Config(_) | Error::Format(_) => UavpathStatus::Config,
                Error::Io(_) => UavpathStatus::Io,
                Error::Contract(_) => UavpathStatus::Contract,
            };
            set_last_error(e.to_string());
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            UavpathStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn mut_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn write_out<T>(p: *mut T, name: &'static str, v: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    p.write(v);
    Ok(())
}

fn check_id(w: &WorldState, id: usize) -> Result<(), Failure> {
    if id >= w.uavs.len() {
        return Err(Failure::Invalid(format!("UAV id {id} out of range ({} UAVs)", w.uavs.len())));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uavpath_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn uavpath_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Writes the default scenario config as JSON. Release with [`uavpath_string_free`].
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_default_config(out: *mut *mut c_char) -> UavpathStatus {
    guard(|| {
        let json = ScenarioConfig::small_map().to_json()?;
        let c = CString::new(json).map_err(|_| Failure::Invalid("config contains NUL".into()))?;
        write_out(out, "out", c.into_raw())
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn uavpath_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a world from a JSON scenario config.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_new(config_json: *const c_char, seed: u64, out: *mut *mut UavpathWorld) -> UavpathStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let config = ScenarioConfig::from_json(str_arg(config_json, "config_json")?)?;
        let world = WorldState::reset(Arc::new(config), seed)?;
        out.write(Box::into_raw(Box::new(UavpathWorld::new(world))));
        Ok(())
    })
}

/// # Safety
/// `world` must come from [`uavpath_world_new`] or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_free(world: *mut UavpathWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Restarts the episode with a new seed.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_reset(world: *mut UavpathWorld, seed: u64) -> UavpathStatus {
    guard(|| {
        let w = mut_arg(world, "world")?;
        *w = UavpathWorld::new(WorldState::reset(w.world.config.clone(), seed)?);
        Ok(())
    })
}

/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_uav_count(world: *const UavpathWorld, out: *mut usize) -> UavpathStatus {
    guard(|| write_out(out, "out", ref_arg(world, "world")?.world.uavs.len()))
}

/// Current step index.
///
/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_time(world: *const UavpathWorld, out: *mut u32) -> UavpathStatus {
    guard(|| write_out(out, "out", ref_arg(world, "world")?.world.t))
}

/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_uav_state(world: *const UavpathWorld, id: usize, out: *mut UavpathUavState) -> UavpathStatus {
    guard(|| {
        let w = &ref_arg(world, "world")?.world;
        check_id(w, id)?;
        let u = &w.uavs[id];
        let role = match u.role {
            Role::T1 => UavpathRole::T1,
            Role::T2 => UavpathRole::T2,
            Role::Jammer => UavpathRole::Jammer,
        };
        write_out(
            out,
            "out",
            UavpathUavState {
                id,
                role,
                x: u.pose.position.x,
                y: u.pose.position.y,
                heading: u.pose.heading,
                speed: u.pose.speed,
                radius: u.radius,
                destination_x: u.destination.x,
                destination_y: u.destination.y,
                alive: u.alive,
                arrived: u.arrived,
                timed_out: u.timed_out,
                path_length: u.path_length,
                collected_bits: u.collected_bits,
                assigned_bits: u.assigned_bits,
            },
        )
    })
}

/// Size of UAV `id`'s current velocity set (valid actions are `0..count`).
///
/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_action_count(world: *const UavpathWorld, id: usize, out: *mut usize) -> UavpathStatus {
    guard(|| {
        let w = &ref_arg(world, "world")?.world;
        check_id(w, id)?;
        write_out(out, "out", w.uavs[id].velocity_set().len())
    })
}

/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_mission_status(world: *const UavpathWorld, id: usize, out: *mut UavpathMission) -> UavpathStatus {
    guard(|| {
        let w = &ref_arg(world, "world")?.world;
        check_id(w, id)?;
        if w.uavs[id].role == Role::T2 {
            return Err(Failure::Invalid(format!("UAV {id} is a T2 and has no mission")));
        }
        let m = match w.mission_status(id) {
            MissionStatus::Ongoing => UavpathMission::Ongoing,
            MissionStatus::Success => UavpathMission::Success,
            MissionStatus::Collision => UavpathMission::Collision,
            MissionStatus::Timeout => UavpathMission::Timeout,
        };
        write_out(out, "out", m)
    })
}

/// # Safety
/// `world` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_all_t1_done(world: *const UavpathWorld, out: *mut bool) -> UavpathStatus {
    guard(|| write_out(out, "out", ref_arg(world, "world")?.world.all_t1_done()))
}

/// Writes the ORCA action of every active T2 into `actions` (length `n`,
/// one entry per UAV); other entries are left untouched.
///
/// # Safety
/// `world` must be a live handle; `actions` valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_fill_t2_actions(world: *const UavpathWorld, actions: *mut usize, n: usize) -> UavpathStatus {
    guard(|| {
        let w = &ref_arg(world, "world")?.world;
        if actions.is_null() {
            return Err(Failure::Null("actions"));
        }
        if n != w.uavs.len() {
            return Err(Failure::Invalid(format!("expected {} actions, got {n}", w.uavs.len())));
        }
        fill_t2_actions(w, std::slice::from_raw_parts_mut(actions, n));
        Ok(())
    })
}

/// Advances one step with one action per UAV (entries of inactive UAVs are ignored).
///
/// # Safety
/// `world` must be a live handle; `actions` valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn uavpath_world_step(world: *mut UavpathWorld, actions: *const usize, n: usize) -> UavpathStatus {
    guard(|| {
        let w = mut_arg(world, "world")?;
        if actions.is_null() {
            return Err(Failure::Null("actions"));
        }
        w.world.step(std::slice::from_raw_parts(actions, n))?;
        let (jammer, first_t1) = (w.world.jammer_id(), w.world.t1_ids().first().copied());
        w.jammer_track.observe(&w.world, jammer);
        w.t1_track.observe(&w.world, first_t1);
        Ok(())
    })
}

/// Loads a Q-network checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_policy_load(path: *const c_char, out: *mut *mut UavpathPolicy) -> UavpathStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let net = NetworkParams::load(Path::new(str_arg(path, "path")?))?;
        out.write(Box::into_raw(Box::new(UavpathPolicy { net })));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from [`uavpath_policy_load`] or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uavpath_policy_free(policy: *mut UavpathPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// # Safety
/// `policy` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn uavpath_policy_shape(policy: *const UavpathPolicy, input_width: *mut usize, action_count: *mut usize) -> UavpathStatus {
    guard(|| {
        let p = ref_arg(policy, "policy")?;
        write_out(input_width, "input_width", p.net.input_width())?;
        write_out(action_count, "action_count", p.net.action_count())
    })
}

/// Q-values for one observation.
///
/// # Safety
/// `policy` must be a live handle; `x` valid for `n_in` reads, `q` for `n_out` writes.
#[no_mangle]
pub unsafe extern "C" fn uavpath_policy_forward(policy: *const UavpathPolicy, x: *const f64, n_in: usize, q: *mut f64, n_out: usize) -> UavpathStatus {
    guard(|| {
        let p = ref_arg(policy, "policy")?;
        if x.is_null() || q.is_null() {
            return Err(Failure::Null(if x.is_null() { "x" } else { "q" }));
        }
        if n_out != p.net.action_count() {
            return Err(Failure::Invalid(format!("q holds {n_out} values, policy has {} actions", p.net.action_count())));
        }
        let out = p.net.forward(std::slice::from_raw_parts(x, n_in))?;
        std::slice::from_raw_parts_mut(q, n_out).copy_from_slice(&out);
        Ok(())
    })
}

/// Greedy action of `policy` for UAV `id`, encoding the world with the
/// encoder that matches the policy's input width.
///
/// # Safety
/// `policy` and `world` must be live handles; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_policy_greedy_action(
    policy: *const UavpathPolicy,
    world: *const UavpathWorld,
    id: usize,
    out: *mut usize,
) -> UavpathStatus {
    guard(|| {
        let p = ref_arg(policy, "policy")?;
        let w = ref_arg(world, "world")?;
        check_id(&w.world, id)?;
        let config = &w.world.config;
        let (kind, history) = match w.world.uavs[id].role {
            Role::Jammer => (EncoderKind::Jammer, &w.t1_track),
            Role::T1 => (t1_kind_for_width(config, p.net.input_width())?, &w.jammer_track),
            Role::T2 => return Err(Failure::Invalid(format!("UAV {id} is a T2 driven by ORCA"))),
        };
        let layout = FeatureLayout::new(kind, config);
        let x = encode(&w.world, id, history, &layout)?;
        write_out(out, "out", argmax(&p.net.forward(&x)?))
    })
}

/// Evaluates frozen policies over `episodes` seeded episodes. A NULL
/// `t1_policy` or `jammer_policy` flies straight to the goal.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; policy handles live or NULL; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn uavpath_evaluate(
    config_json: *const c_char,
    t1_policy: *const UavpathPolicy,
    jammer_policy: *const UavpathPolicy,
    episodes: usize,
    seed: u64,
    out: *mut UavpathMetrics,
) -> UavpathStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let config = ScenarioConfig::from_json(str_arg(config_json, "config_json")?)?;
        let pick = |p: *const UavpathPolicy| p.as_ref().map_or(Policy::StraightToGoal, |p| Policy::Network(p.net.clone()));
        let mut set = PolicySet::shared(pick(t1_policy));
        if config.jammer {
            set = set.with_jammer(pick(jammer_policy));
        }
        let r = evaluate(&config, &set, episodes, seed, false, 1)?.report;
        out.write(UavpathMetrics {
            episodes: r.episodes,
            missions: r.missions,
            sr: r.sr,
            dr: r.dr,
            cr: r.cr,
            timeout_rate: r.timeout_rate,
            apl: r.apl,
            mean_sinr: r.mean_sinr,
            mean_jammer_distance: r.mean_jammer_distance,
            empty_success: r.empty_success,
        });
        Ok(())
    })
}
