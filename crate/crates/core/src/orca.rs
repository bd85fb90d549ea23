//! Optimal reciprocal collision avoidance for the background (T2) UAVs.
//!
//! Each neighbor contributes one half-plane of permitted velocities; the new
//! velocity is the point of the speed disc closest to the preferred velocity
//! inside all half-planes (an incremental 2D linear program). When the
//! half-planes have no common point, the velocity that minimizes the largest
//! violation is used instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Vec2};
use crate::world::{Role, UavBody, UavId, WorldState};

const EPSILON: f64 = 1e-9;
/// Clockwise rotation applied to every preferred velocity to break exact symmetry.
pub const SYMMETRY_BREAK_RAD: f64 = 1e-3;

/// Boundary point and unit normal pointing into the permitted side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    pub normal: Vec2,
}

impl HalfPlane {
    /// Direction along the boundary with the permitted side on its left.
    fn direction(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }

    /// Signed distance of `v` into the permitted side (negative when violated).
    pub fn signed_distance(&self, v: Vec2) -> f64 {
        (v - self.point).dot(self.normal)
    }

    pub fn contains(&self, v: Vec2, tol: f64) -> bool {
        self.signed_distance(v) >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrcaParams {
    /// Seconds.
    pub time_horizon: f64,
    /// Meters.
    pub neighbor_range: f64,
    pub max_neighbors: usize,
    /// Share of the avoidance effort taken by this agent versus another UAV.
    pub responsibility: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 5.0,
            neighbor_range: 30.0,
            max_neighbors: 6,
            responsibility: 0.5,
        }
    }
}

impl OrcaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_horizon > 0.0) {
            return Err(Error::config("orca.time_horizon must be > 0"));
        }
        if !(self.responsibility > 0.0 && self.responsibility <= 1.0) {
            return Err(Error::config("orca.responsibility must be in (0, 1]"));
        }
        if !(self.neighbor_range >= 0.0) {
            return Err(Error::config("orca.neighbor_range must be >= 0"));
        }
        Ok(())
    }
}

/// A disc with a velocity, as seen by ORCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

impl From<&UavBody> for Agent {
    fn from(u: &UavBody) -> Self {
        Agent {
            position: u.pose.position,
            velocity: u.velocity(),
            radius: u.radius,
        }
    }
}

/// Goal-seeking velocity that does not overshoot the destination in one step.
pub fn preferred_velocity(body: &UavBody, dt: f64) -> Vec2 {
    let to_goal = body.destination - body.pose.position;
    let d = to_goal.norm();
    if d <= 0.0 {
        return Vec2::ZERO;
    }
    to_goal / d * body.limits.max_speed.min(d / dt)
}

/// Half-plane of velocities for `me` that avoid `other` for `time_horizon`
/// seconds, taking `responsibility` of the required change. Overlapping discs
/// use the `dt` horizon to push apart within one step.
pub fn orca_halfplane(me: &Agent, other: &Agent, params: &OrcaParams, dt: f64) -> HalfPlane {
    let rel_pos = other.position - me.position;
    let rel_vel = me.velocity - other.velocity;
    let dist_sq = rel_pos.norm_sq();
    let r = me.radius + other.radius;
    let r_sq = r * r;

    // (unit outward normal of the velocity obstacle boundary, u)
    let (normal, u) = if dist_sq > r_sq {
        let inv_tau = 1.0 / params.time_horizon;
        // from the cut-off circle center to the relative velocity
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.norm_sq();
        let dot = w.dot(rel_pos);
        if dot < 0.0 && dot * dot > r_sq * w_len_sq {
            // closest boundary point lies on the cut-off circle
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            (unit_w, unit_w * (r * inv_tau - w_len))
        } else {
            // closest boundary point lies on one of the legs
            let leg = (dist_sq - r_sq).sqrt();
            let dir = if rel_pos.det(w) > 0.0 {
                Vec2::new(rel_pos.x * leg - rel_pos.y * r, rel_pos.x * r + rel_pos.y * leg) / dist_sq
            } else {
                -Vec2::new(rel_pos.x * leg + rel_pos.y * r, -rel_pos.x * r + rel_pos.y * leg) / dist_sq
            };
            let proj = dir * rel_vel.dot(dir);
            (dir.perp(), proj - rel_vel)
        }
    } else {
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = if w_len > 0.0 { w / w_len } else { (-rel_pos).normalize_or_zero() };
        (unit_w, unit_w * (r * inv_dt - w_len))
    };

    HalfPlane {
        point: me.velocity + u * params.responsibility,
        normal,
    }
}

/// Closest point on line `idx` (within the disc) that satisfies lines `..idx`.
fn lp1(lines: &[HalfPlane], idx: usize, radius: f64, opt: Vec2, direction_opt: bool) -> Option<Vec2> {
    let line = &lines[idx];
    let dir = line.direction();
    let dot = line.point.dot(dir);
    let disc = dot * dot + radius * radius - line.point.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut t_left = -dot - sq;
    let mut t_right = -dot + sq;
    for other in &lines[..idx] {
        let odir = other.direction();
        let denom = dir.det(odir);
        let numer = odir.det(line.point - other.point);
        if denom.abs() <= EPSILON {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }
    let t = if direction_opt {
        if opt.dot(dir) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        dir.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + dir * t)
}

/// Returns the result and the number of lines satisfied before failure.
fn lp2(lines: &[HalfPlane], radius: f64, opt: Vec2, direction_opt: bool) -> (Vec2, usize) {
    let mut result = if direction_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        opt.normalize_or_zero() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].signed_distance(result) < 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(r) => result = r,
                None => return (result, i),
            }
        }
    }
    (result, lines.len())
}

/// Minimizes the largest violation over lines `n_hard..`, keeping lines
/// `..n_hard` satisfied.
fn lp3(lines: &[HalfPlane], n_hard: usize, begin: usize, radius: f64, mut result: Vec2) -> Vec2 {
    let mut dist = 0.0;
    for i in begin..lines.len() {
        if -lines[i].signed_distance(result) <= dist {
            continue;
        }
        let di = lines[i].direction();
        let mut proj: Vec<HalfPlane> = lines[..n_hard].to_vec();
        for j in n_hard..i {
            let dj = lines[j].direction();
            let det = di.det(dj);
            let point = if det.abs() <= EPSILON {
                if di.dot(dj) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point + di * (dj.det(lines[i].point - lines[j].point) / det)
            };
            let dir = (dj - di).normalize_or_zero();
            proj.push(HalfPlane {
                point,
                normal: dir.perp(),
            });
        }
        let prev = result;
        let (r, done) = lp2(&proj, radius, lines[i].normal, true);
        result = if done < proj.len() { prev } else { r };
        dist = -lines[i].signed_distance(result);
    }
    result
}

/// Velocity in the disc `|v| <= max_speed` closest to `v_pref` inside every
/// half-plane, or the least-violating velocity when they are infeasible.
pub fn solve_velocity(halfplanes: &[HalfPlane], v_pref: Vec2, max_speed: f64) -> Vec2 {
    solve_velocity_with_hard(halfplanes, 0, v_pref, max_speed)
}

/// As [`solve_velocity`], but the first `n_hard` half-planes are never relaxed.
pub fn solve_velocity_with_hard(halfplanes: &[HalfPlane], n_hard: usize, v_pref: Vec2, max_speed: f64) -> Vec2 {
    let (result, done) = lp2(halfplanes, max_speed, v_pref, false);
    if done < halfplanes.len() {
        lp3(halfplanes, n_hard.min(done), done, max_speed, result)
    } else {
        result
    }
}

/// Outcome of one ORCA decision for a T2.
#[derive(Debug, Clone, PartialEq)]
pub struct OrcaDecision {
    /// Unsnapped solution of the linear program.
    pub velocity: Vec2,
    /// Index into the UAV's velocity set.
    pub action: usize,
    pub halfplanes: Vec<HalfPlane>,
}

/// Half-planes a T2 obeys: obstacle discs first (full responsibility), then the
/// nearest T2s and the jammer. T1s are deliberately not considered.
pub fn t2_halfplanes(world: &WorldState, id: UavId, params: &OrcaParams) -> (Vec<HalfPlane>, usize) {
    let me = &world.uavs[id];
    let agent = Agent::from(me);
    let dt = world.config.dt;
    let mut planes = Vec::new();

    let static_params = OrcaParams {
        responsibility: 1.0,
        ..*params
    };
    for disc in world.config.obstacles.iter().chain(&world.config.no_fly_zones) {
        if distance(disc.center, me.pose.position) - disc.radius > params.neighbor_range {
            continue;
        }
        let obstacle = Agent {
            position: disc.center,
            velocity: Vec2::ZERO,
            radius: disc.radius,
        };
        planes.push(orca_halfplane(&agent, &obstacle, &static_params, dt));
    }
    let n_hard = planes.len();

    let mut neighbors: Vec<(f64, UavId)> = world
        .uavs
        .iter()
        .filter(|u| u.id != id && u.is_active() && matches!(u.role, Role::T2 | Role::Jammer))
        .map(|u| (distance(u.pose.position, me.pose.position), u.id))
        .filter(|(d, _)| *d <= params.neighbor_range)
        .collect();
    neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    neighbors.truncate(params.max_neighbors);
    for (_, n) in neighbors {
        planes.push(orca_halfplane(&agent, &Agent::from(&world.uavs[n]), params, dt));
    }
    (planes, n_hard)
}

/// ORCA decision for one T2 from the current world snapshot, snapped to its
/// velocity set: the nearest member that satisfies every half-plane, or the
/// nearest member overall when none does.
pub fn orca_policy_step(world: &WorldState, id: UavId, params: &OrcaParams) -> OrcaDecision {
    let me = &world.uavs[id];
    let (planes, n_hard) = t2_halfplanes(world, id, params);
    let v_pref = preferred_velocity(me, world.config.dt).rotate(-SYMMETRY_BREAK_RAD);
    let velocity = solve_velocity_with_hard(&planes, n_hard, v_pref, me.limits.max_speed);
    let set = me.velocity_set();
    let action = set
        .nearest_where(velocity, |v| planes.iter().all(|h| h.contains(v, 1e-9)))
        .unwrap_or_else(|| set.nearest(velocity));
    OrcaDecision {
        velocity,
        action,
        halfplanes: planes,
    }
}
