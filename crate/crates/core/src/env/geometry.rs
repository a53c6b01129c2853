use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed simple polygon given by its vertices in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

/// Where a ray first meets the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub segment: usize,
    /// Arc length from the segment's first vertex.
    pub along: f64,
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::input("polygon needs at least three vertices"));
        }
        let p = Polygon { vertices };
        if p.area() <= 0.0 {
            return Err(Error::input("polygon must have positive area (counter-clockwise order)"));
        }
        Ok(p)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn n_segments(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        let (a, b) = self.segment(i);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Signed shoelace area; positive for counter-clockwise vertex order.
    pub fn area(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Even-odd rule; points on the boundary may go either way.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            if (a[1] > y) != (b[1] > y) {
                let xc = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        (0..self.n_segments())
            .map(|i| {
                let (a, b) = self.segment(i);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len2 = dx * dx + dy * dy;
                let t = (((x - a[0]) * dx + (y - a[1]) * dy) / len2).clamp(0.0, 1.0);
                (x - a[0] - t * dx).hypot(y - a[1] - t * dy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest boundary crossing of the ray from `(x, y)` in direction `angle`.
    pub fn ray_cast(&self, x: f64, y: f64, angle: f64) -> Option<RayHit> {
        let (ux, uy) = (angle.cos(), angle.sin());
        let mut best: Option<RayHit> = None;
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let denom = ux * ey - uy * ex;
            if denom.abs() < 1e-14 {
                continue;
            }
            let (wx, wy) = (a[0] - x, a[1] - y);
            let t = (wx * ey - wy * ex) / denom;
            let s = (wx * uy - wy * ux) / denom;
            if t >= 0.0 && (0.0..=1.0).contains(&s) && best.map_or(true, |h| t < h.distance) {
                best = Some(RayHit { distance: t, segment: i, along: s * ex.hypot(ey) });
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    Rectangle,
    TwoRoom,
}

/// Which part of a two-room layout a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Left,
    Corridor,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomGeometry {
    pub kind: RoomKind,
    pub polygon: Polygon,
    /// Two-room only: centres of the left and right corridor mouths.
    pub corridor_endpoints: Option<([f64; 2], [f64; 2])>,
}

impl RoomGeometry {
    pub fn rectangle(width: f64, depth: f64) -> Result<Self> {
        if !(width > 0.0 && depth > 0.0) {
            return Err(Error::input("rectangle sides must be positive"));
        }
        let polygon = Polygon::new(vec![[0.0, 0.0], [width, 0.0], [width, depth], [0.0, depth]])?;
        Ok(RoomGeometry { kind: RoomKind::Rectangle, polygon, corridor_endpoints: None })
    }

    /// Two square rooms side by side, joined at mid-height by a corridor.
    pub fn two_room(room: f64, corridor_width: f64, corridor_length: f64) -> Result<Self> {
        if !(room > 0.0 && corridor_length > 0.0 && corridor_width > 0.0 && corridor_width < room) {
            return Err(Error::input("two-room layout needs 0 < corridor width < room side"));
        }
        let (y0, y1) = (0.5 * (room - corridor_width), 0.5 * (room + corridor_width));
        let (c0, c1) = (room, room + corridor_length);
        let right = c1 + room;
        let polygon = Polygon::new(vec![
            [0.0, 0.0],
            [c0, 0.0],
            [c0, y0],
            [c1, y0],
            [c1, 0.0],
            [right, 0.0],
            [right, room],
            [c1, room],
            [c1, y1],
            [c0, y1],
            [c0, room],
            [0.0, room],
        ])?;
        let mid = 0.5 * room;
        Ok(RoomGeometry { kind: RoomKind::TwoRoom, polygon, corridor_endpoints: Some(([c0, mid], [c1, mid])) })
    }

    pub fn default_rectangle() -> Self {
        Self::rectangle(3.0, 1.8).expect("valid default")
    }

    pub fn default_two_room() -> Self {
        Self::two_room(3.0, 1.0, 1.5).expect("valid default")
    }

    pub fn region(&self, x: f64) -> Region {
        match self.corridor_endpoints {
            None => Region::Left,
            Some((l, r)) => {
                if x < l[0] {
                    Region::Left
                } else if x > r[0] {
                    Region::Right
                } else {
                    Region::Corridor
                }
            }
        }
    }
}
