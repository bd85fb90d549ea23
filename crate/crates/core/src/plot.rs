//! SVG trajectory figures.
//!
//! World coordinates map to pixels through the affine map declared on the
//! root element as `data-affine="sx sy tx ty"`: `px = sx·x + tx`,
//! `py = sy·y + ty` (`sy < 0`, y grows upward in the world). Pixel
//! coordinates are written with three decimals.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{Trajectory, UavSnapshot};
use crate::geometry::{Rect, Vec2};
use crate::world::Role;

pub const DEPARTURE_FILL: &str = "blue";
pub const LANDING_FILL: &str = "green";
pub const T2_STROKE: &str = "black";
pub const JAMMER_STROKE: &str = "red";
const UNGROUPED: &str = "#7f7f7f";
const GROUP_PALETTE: [&str; 6] = ["#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];
const DEVICE_SIZE_PX: f64 = 7.0;
const LEGEND_WIDTH_PX: f64 = 170.0;

pub fn group_color(group: Option<usize>) -> &'static str {
    group.map_or(UNGROUPED, |g| GROUP_PALETTE[g % GROUP_PALETTE.len()])
}

/// World-to-pixel map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub sx: f64,
    pub sy: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineMap {
    /// Fits `bounds` into a square plot area of `size` pixels with `margin` on each side.
    pub fn fit(bounds: &Rect, size: f64, margin: f64) -> AffineMap {
        let s = (size - 2.0 * margin) / bounds.width().max(bounds.height());
        AffineMap {
            sx: s,
            sy: -s,
            tx: margin - s * bounds.min.x,
            ty: margin + s * bounds.max.y,
        }
    }

    pub fn apply(&self, p: Vec2) -> (f64, f64) {
        (self.sx * p.x + self.tx, self.sy * p.y + self.ty)
    }

    pub fn invert(&self, px: f64, py: f64) -> Vec2 {
        Vec2::new((px - self.tx) / self.sx, (py - self.ty) / self.sy)
    }

    pub fn attribute(&self) -> String {
        format!("{} {} {} {}", self.sx, self.sy, self.tx, self.ty)
    }

    pub fn parse(attr: &str) -> Result<AffineMap> {
        let v: Vec<f64> = attr
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::format(format!("bad affine term {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [sx, sy, tx, ty] => Ok(AffineMap { sx, sy, tx, ty }),
            _ => Err(Error::format("affine map needs four terms")),
        }
    }
}

fn points(map: &AffineMap, path: &[Vec2]) -> String {
    let mut s = String::new();
    for (i, p) in path.iter().enumerate() {
        let (x, y) = map.apply(*p);
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    s
}

fn rect(out: &mut String, map: &AffineMap, r: &Rect, class: &str, fill: &str) {
    let (x0, y0) = map.apply(Vec2::new(r.min.x, r.max.y));
    let (x1, y1) = map.apply(Vec2::new(r.max.x, r.min.y));
    let _ = writeln!(
        out,
        r#"<rect class="{class}" x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{fill}" fill-opacity="0.25" stroke="{fill}"/>"#,
        x1 - x0,
        y1 - y0
    );
}

fn triangle(cx: f64, cy: f64, h: f64) -> String {
    format!(
        "{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}",
        cx,
        cy - h,
        cx - h * 0.866,
        cy + h * 0.5,
        cx + h * 0.866,
        cy + h * 0.5
    )
}

fn path_element(out: &mut String, map: &AffineMap, u: &UavSnapshot, path: &[Vec2]) {
    let (class, stroke, dash) = match u.role {
        Role::T1 => ("t1-path", group_color(u.group), ""),
        Role::T2 => ("t2-path", T2_STROKE, r#" stroke-dasharray="5 3""#),
        Role::Jammer => ("jammer-path", JAMMER_STROKE, ""),
    };
    let _ = writeln!(out, r#"<g class="{class}-group" data-uav="{}">"#, u.id);
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" data-uav="{}" points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}/>"#,
        u.id,
        points(map, path)
    );
    for p in path {
        let (x, y) = map.apply(*p);
        let _ = writeln!(out, r#"<circle class="path-dot" cx="{x:.3}" cy="{y:.3}" r="1.6" fill="{stroke}"/>"#);
    }
    let _ = writeln!(out, "</g>");
}

/// Renders one episode of `traj` as an SVG document.
pub fn render_episode(traj: &Trajectory, episode: usize) -> Result<String> {
    let eh = traj
        .header
        .episodes
        .iter()
        .find(|e| e.episode == episode)
        .ok_or_else(|| Error::contract(format!("episode {episode} not in trajectory ({} episodes)", traj.header.episodes.len())))?;
    let cfg = &traj.header.config;
    let size = 600.0;
    let map = AffineMap::fit(&cfg.bounds, size, 30.0);
    let width = size + LEGEND_WIDTH_PX;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{size}" viewBox="0 0 {width} {size}" data-affine="{}" data-episode="{episode}" data-seed="{}">"#,
        map.attribute(),
        eh.seed
    );
    let _ = writeln!(out, r#"<rect class="background" x="0" y="0" width="{width}" height="{size}" fill="white"/>"#);
    rect(&mut out, &map, &cfg.bounds, "bounds", "none");
    rect(&mut out, &map, &cfg.departure_area, "departure-area", DEPARTURE_FILL);
    rect(&mut out, &map, &cfg.landing_area, "landing-area", LANDING_FILL);
    for d in cfg.obstacles.iter().chain(&cfg.no_fly_zones) {
        let (x, y) = map.apply(d.center);
        let _ = writeln!(
            out,
            r##"<circle class="obstacle" cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="#999999" fill-opacity="0.5"/>"##,
            d.radius * map.sx
        );
    }
    for d in &eh.devices {
        let (x, y) = map.apply(d.position);
        let group = d.group.map_or(String::new(), |g| g.to_string());
        let _ = writeln!(
            out,
            r#"<polygon class="device" data-device="{}" data-group="{group}" data-center="{x:.3},{y:.3}" points="{}" fill="{}"/>"#,
            d.id,
            triangle(x, y, DEVICE_SIZE_PX),
            group_color(d.group)
        );
    }

    let mut paths: Vec<Vec<Vec2>> = eh.uavs.iter().map(|u| vec![u.position]).collect();
    for s in traj.episode_steps(episode) {
        for (p, u) in paths.iter_mut().zip(&s.uavs) {
            p.push(u.position);
        }
    }
    let moved = paths.first().is_some_and(|p| p.len() > 1);
    // T2s first so mission paths are drawn on top.
    let order = if moved { &[Role::T2, Role::Jammer, Role::T1][..] } else { &[] };
    for &role in order {
        for (u, p) in eh.uavs.iter().zip(&paths).filter(|(u, _)| u.role == role) {
            path_element(&mut out, &map, u, p);
        }
    }

    legend(&mut out, size, eh.uavs.iter().any(|u| u.role == Role::Jammer));
    scale_bar(&mut out, &map, cfg.bounds.width(), size);
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

fn legend(out: &mut String, x0: f64, jammer: bool) {
    let x = x0 + 10.0;
    let row_y = |row: usize| 40.0 + 22.0 * row as f64;
    let dashed = r#" stroke-dasharray="5 3""#;
    let mut rows: Vec<(String, &str)> = Vec::new();
    for (class, fill, label) in [("departure-area", DEPARTURE_FILL, "departure area"), ("landing-area", LANDING_FILL, "landing area")] {
        let y = row_y(rows.len());
        rows.push((
            format!(
                r#"<rect class="legend-{class}" x="{x:.3}" y="{:.3}" width="20" height="10" fill="{fill}" fill-opacity="0.25" stroke="{fill}"/>"#,
                y - 5.0
            ),
            label,
        ));
    }
    let mut lines = vec![("t1-path", GROUP_PALETTE[0], "", "T1 path"), ("t2-path", T2_STROKE, dashed, "T2 path")];
    if jammer {
        lines.push(("jammer-path", JAMMER_STROKE, "", "jammer path"));
    }
    for (class, stroke, dash, label) in lines {
        let y = row_y(rows.len());
        rows.push((
            format!(
                r#"<line class="legend-{class}" x1="{x:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="{stroke}" stroke-width="1.5"{dash}/>"#,
                x + 20.0
            ),
            label,
        ));
    }
    let y = row_y(rows.len());
    rows.push((
        format!(
            r#"<polygon class="legend-device" points="{}" fill="{}"/>"#,
            triangle(x + 10.0, y, DEVICE_SIZE_PX),
            GROUP_PALETTE[0]
        ),
        "IoT device (color = group)",
    ));
    let _ = writeln!(out, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, (swatch, label)) in rows.iter().enumerate() {
        let _ = writeln!(out, "{swatch}");
        let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">{label}</text>"#, x + 30.0, row_y(i) + 4.0);
    }
    let _ = writeln!(out, "</g>");
}

/// Round length (1, 2 or 5 × 10^k) close to a fifth of the map width.
pub fn scale_length(map_width: f64) -> f64 {
    let target = map_width / 5.0;
    let base = 10f64.powf(target.log10().floor());
    [5.0, 2.0, 1.0].into_iter().map(|m| m * base).find(|&l| l <= target).unwrap_or(base)
}

fn scale_bar(out: &mut String, map: &AffineMap, map_width: f64, size: f64) {
    let meters = scale_length(map_width);
    let len = meters * map.sx;
    let (x, y) = (30.0, size - 12.0);
    let _ = writeln!(
        out,
        r#"<g class="scale-bar" data-meters="{meters}"><line x1="{x:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="black" stroke-width="2"/><text x="{x:.3}" y="{:.3}" font-family="sans-serif" font-size="11">{meters} m</text></g>"#,
        x + len,
        y - 4.0
    );
}

pub fn write_episode_svg(traj: &Trajectory, episode: usize, path: &Path) -> Result<()> {
    std::fs::write(path, render_episode(traj, episode)?)?;
    Ok(())
}
