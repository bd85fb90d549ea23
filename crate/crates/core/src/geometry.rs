//! Planar geometry and the velocity-set action space shared by every UAV.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2D point or vector in meters (or meters/second in velocity space).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` from the x-axis.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// 2D cross product (z component of `self × o`).
    pub fn det(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalize_or_zero(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            Vec2::ZERO
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can round up to exactly 2π
    if a >= PI {
        a -= two_pi;
    }
    a
}

pub fn distance(a: Vec2, b: Vec2) -> f64 {
    (a - b).norm()
}

/// Shortest distance from `c` to the segment `p0 → p1`.
pub fn segment_point_distance(p0: Vec2, p1: Vec2, c: Vec2) -> f64 {
    let d = p1 - p0;
    let len_sq = d.norm_sq();
    let s = if len_sq > 0.0 {
        ((c - p0).dot(d) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    distance(p0 + d * s, c)
}

/// Whether the segment `p0 → p1` touches the closed disc of `radius` around `center`.
pub fn segment_disc_intersects(p0: Vec2, p1: Vec2, center: Vec2, radius: f64) -> bool {
    segment_point_distance(p0, p1, center) <= radius
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub const fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.contains(r.min) && self.contains(r.max)
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.max.x > self.min.x && self.max.y > self.min.y
    }
}

/// A closed disc (obstacle or no-fly zone).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

/// Position, heading and speed of a body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    /// Radians in `[-π, π)`.
    pub heading: f64,
    /// Meters/second, non-negative.
    pub speed: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64, speed: f64) -> Self {
        Pose {
            position,
            heading: wrap_angle(heading),
            speed,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

/// Speed and turn-rate limits plus the discretization of the velocity set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// Meters/second.
    pub max_speed: f64,
    /// Radians per step.
    pub max_turn_per_step: f64,
    pub n_speeds: usize,
    /// Must be odd so that "keep heading" is always available.
    pub n_headings: usize,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        KinematicLimits {
            max_speed: 5.0,
            max_turn_per_step: PI / 4.0,
            n_speeds: 2,
            n_headings: 9,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed > 0.0 && self.max_speed.is_finite()) {
            return Err(Error::config(format!("max_speed must be > 0, got {}", self.max_speed)));
        }
        if !(self.max_turn_per_step > 0.0 && self.max_turn_per_step <= PI) {
            return Err(Error::config(format!(
                "max_turn_per_step must be in (0, π], got {}",
                self.max_turn_per_step
            )));
        }
        if self.n_speeds < 1 {
            return Err(Error::config("n_speeds must be >= 1"));
        }
        if self.n_headings < 1 || self.n_headings % 2 == 0 {
            return Err(Error::config(format!(
                "n_headings must be odd and >= 1, got {}",
                self.n_headings
            )));
        }
        Ok(())
    }

    /// Number of actions: hover plus the speed × heading grid.
    pub fn action_count(&self) -> usize {
        1 + self.n_speeds * self.n_headings
    }
}

/// The discrete permissible velocities for one step. Index 0 is hover.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySet {
    velocities: Vec<Vec2>,
}

impl VelocitySet {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<Vec2> {
        self.velocities.get(index).copied()
    }

    pub fn as_slice(&self) -> &[Vec2] {
        &self.velocities
    }

    /// Index of the member closest to `v`; ties go to the lower index.
    pub fn nearest(&self, v: Vec2) -> usize {
        self.nearest_where(v, |_| true).unwrap_or(0)
    }

    /// Index of the closest member satisfying `accept`, ties to the lower index.
    pub fn nearest_where(&self, v: Vec2, mut accept: impl FnMut(Vec2) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &u) in self.velocities.iter().enumerate() {
            if !accept(u) {
                continue;
            }
            let d = (u - v).norm_sq();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Builds the velocity set around `current_heading`: hover first, then
/// speed-major, heading-ascending over the symmetric heading grid.
pub fn build_velocity_set(limits: &KinematicLimits, current_heading: f64) -> Result<VelocitySet> {
    limits.validate()?;
    let half = (limits.n_headings - 1) / 2;
    let mut velocities = Vec::with_capacity(limits.action_count());
    velocities.push(Vec2::ZERO);
    for k in 1..=limits.n_speeds {
        let speed = limits.max_speed * k as f64 / limits.n_speeds as f64;
        for j in -(half as i64)..=(half as i64) {
            let offset = if half == 0 {
                0.0
            } else {
                limits.max_turn_per_step * j as f64 / half as f64
            };
            velocities.push(Vec2::from_angle(current_heading + offset) * speed);
        }
    }
    Ok(VelocitySet { velocities })
}

/// Forward-Euler motion under velocity `v` held for `dt` seconds.
pub fn apply_velocity(pose: &Pose, v: Vec2, dt: f64) -> Pose {
    let speed = v.norm();
    let heading = if speed > 0.0 { wrap_angle(v.angle()) } else { pose.heading };
    Pose {
        position: pose.position + v * dt,
        heading,
        speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn degenerate_grid_is_hover_plus_one() {
        let limits = KinematicLimits {
            max_speed: 2.0,
            max_turn_per_step: 0.5,
            n_speeds: 1,
            n_headings: 1,
        };
        let set = build_velocity_set(&limits, 0.0).unwrap();
        assert_eq!(set.as_slice(), &[Vec2::ZERO, Vec2::new(2.0, 0.0)]);
    }

    #[test]
    fn two_speeds_three_headings() {
        let limits = KinematicLimits {
            max_speed: 2.0,
            max_turn_per_step: FRAC_PI_2,
            n_speeds: 2,
            n_headings: 3,
        };
        let set = build_velocity_set(&limits, 0.0).unwrap();
        assert_eq!(set.len(), 7);
        let expected = [
            Vec2::ZERO,
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, -2.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.0, 2.0),
        ];
        for (got, want) in set.as_slice().iter().zip(expected) {
            assert!(close(*got, want, 1e-12), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn rotated_heading_matches_rotated_set() {
        let limits = KinematicLimits {
            max_speed: 1.0,
            max_turn_per_step: PI / 4.0,
            n_speeds: 1,
            n_headings: 3,
        };
        let base = build_velocity_set(&limits, 0.0).unwrap();
        let turned = build_velocity_set(&limits, FRAC_PI_2).unwrap();
        let headings: Vec<f64> = turned.as_slice()[1..].iter().map(|v| v.angle()).collect();
        for (h, want) in headings.iter().zip([PI / 4.0, FRAC_PI_2, 3.0 * PI / 4.0]) {
            assert!((h - want).abs() < 1e-12);
        }
        for (a, b) in base.as_slice().iter().zip(turned.as_slice()) {
            assert!(close(a.rotate(FRAC_PI_2), *b, 1e-12));
        }
    }

    #[test]
    fn invalid_limits_rejected() {
        let mut limits = KinematicLimits::default();
        limits.n_headings = 4;
        assert!(matches!(build_velocity_set(&limits, 0.0), Err(Error::Config(_))));
        limits.n_headings = 3;
        limits.max_speed = 0.0;
        assert!(build_velocity_set(&limits, 0.0).is_err());
        limits.max_speed = 1.0;
        limits.max_turn_per_step = 4.0;
        assert!(build_velocity_set(&limits, 0.0).is_err());
    }

    #[test]
    fn apply_velocity_cases() {
        let p = apply_velocity(&Pose::new(Vec2::ZERO, 0.0, 0.0), Vec2::new(1.0, 0.0), 2.0);
        assert_eq!(p, Pose::new(Vec2::new(2.0, 0.0), 0.0, 1.0));

        let start = Pose::new(Vec2::new(3.0, 4.0), 1.0, 2.0);
        let p = apply_velocity(&start, Vec2::ZERO, 1.0);
        assert_eq!(p.position, start.position);
        assert_eq!(p.heading, 1.0);
        assert_eq!(p.speed, 0.0);

        let p = apply_velocity(&Pose::new(Vec2::new(1.0, 1.0), 0.0, 1.0), Vec2::new(0.0, -2.0), 0.5);
        assert_eq!(p.position, Vec2::new(1.0, 0.0));
        assert!((p.heading + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.speed, 2.0);
    }

    #[test]
    fn distance_and_segment_tests() {
        assert_eq!(distance(Vec2::ZERO, Vec2::new(3.0, 4.0)), 5.0);
        let a = Vec2::ZERO;
        let b = Vec2::new(10.0, 0.0);
        assert!(segment_disc_intersects(a, b, Vec2::new(5.0, 0.5), 1.0));
        assert!(!segment_disc_intersects(a, b, Vec2::new(5.0, 2.0), 1.0));
        // endpoint region and degenerate segment
        assert!(segment_disc_intersects(a, b, Vec2::new(-0.5, 0.0), 1.0));
        assert!(segment_disc_intersects(a, a, Vec2::new(0.0, 1.0), 1.0));
        assert!(!segment_disc_intersects(a, a, Vec2::new(0.0, 1.5), 1.0));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.7);
            assert!((-PI..PI).contains(&a));
        }
    }

    proptest! {
        #[test]
        fn velocity_set_respects_limits(
            max_speed in 0.1f64..20.0,
            max_turn in 0.01f64..PI,
            n_speeds in 1usize..5,
            half in 0usize..6,
            heading in -PI..PI,
        ) {
            let limits = KinematicLimits { max_speed, max_turn_per_step: max_turn, n_speeds, n_headings: 2 * half + 1 };
            let set = build_velocity_set(&limits, heading).unwrap();
            prop_assert_eq!(set.len(), limits.action_count());
            prop_assert_eq!(set.get(0), Some(Vec2::ZERO));
            for v in &set.as_slice()[1..] {
                prop_assert!(v.norm() <= max_speed * (1.0 + 1e-12));
                prop_assert!(wrap_angle(v.angle() - heading).abs() <= max_turn + 1e-9);
            }
        }

        #[test]
        fn velocity_set_rotation_equivariant(heading in -PI..PI, theta in -PI..PI) {
            let limits = KinematicLimits::default();
            let a = build_velocity_set(&limits, heading).unwrap();
            let b = build_velocity_set(&limits, heading + theta).unwrap();
            for (u, w) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!(close(u.rotate(theta), *w, 1e-9));
            }
        }

        #[test]
        fn repeated_steps_equal_one_long_step(
            vx in -5.0f64..5.0, vy in -5.0f64..5.0, dt in 0.01f64..2.0, k in 1usize..20,
        ) {
            let v = Vec2::new(vx, vy);
            let start = Pose::new(Vec2::new(1.0, -2.0), 0.3, 0.0);
            let mut p = start;
            for _ in 0..k {
                p = apply_velocity(&p, v, dt);
            }
            let once = apply_velocity(&start, v, dt * k as f64);
            prop_assert!(close(p.position, once.position, 1e-9 * (1.0 + once.position.norm())));
        }
    }
}
