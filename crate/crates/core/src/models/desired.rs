//! The time-independent desired velocity `w = geodesic + discomfort`.
//!
//! The geodesic part is the unit vector along `−∇d`, where `d` is the
//! graph distance to the target exit faces on the 8-neighbour cell graph.
//! The discomfort part points away from the nearest wall with an intensity
//! that decays linearly to zero over a fixed range.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::field::{ScalarField, VectorField};
use crate::geometry::{CellMask, FaceClass, Grid, Segment};
use crate::{Error, Result, Vec2};

pub const DEFAULT_DISCOMFORT_AMPLITUDE: f64 = 0.3;
/// Default discomfort range, in cells.
pub const DEFAULT_DISCOMFORT_RANGE_CELLS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DesiredField {
    /// Unit geodesic direction towards the targets.
    pub direction: VectorField,
    pub discomfort: VectorField,
    /// `direction + discomfort`: the field `w` used by the velocity laws.
    pub combined: VectorField,
    /// Graph distance to the target exit faces.
    pub distance: ScalarField,
}

impl DesiredField {
    /// Wraps a prescribed `w`, with no geodesic information.
    pub fn prescribed(w: VectorField) -> Self {
        let grid = *w.grid();
        DesiredField {
            direction: w.clone(),
            discomfort: VectorField::zeros(grid),
            combined: w,
            distance: ScalarField::zeros(grid),
        }
    }

    pub fn w(&self) -> &VectorField {
        &self.combined
    }

    pub fn max_norm(&self) -> f64 {
        self.combined.max_norm()
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    dist: f64,
    cell: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed so that the max-heap pops the nearest cell first; ties broken
    // by index for a deterministic visiting order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

const DIRECTIONS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

fn neighbour(grid: &Grid, mask: &CellMask, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
    let (ni, nj) = (i as i64 + di, j as i64 + dj);
    if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
        return None;
    }
    let k = grid.index(ni as usize, nj as usize);
    mask.is_interior(k).then_some(k)
}

/// Passable neighbours with their edge lengths. A diagonal move needs both
/// orthogonal cells to be passable, so paths never cut obstacle corners.
fn graph_neighbours<'a>(grid: &'a Grid, mask: &'a CellMask, k: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
    let (i, j) = grid.coords(k);
    let diag = grid.dx.hypot(grid.dy);
    DIRECTIONS.iter().filter_map(move |&(di, dj)| {
        let n = neighbour(grid, mask, i, j, di, dj)?;
        if di != 0 && dj != 0 {
            neighbour(grid, mask, i, j, di, 0)?;
            neighbour(grid, mask, i, j, 0, dj)?;
            Some((n, diag))
        } else if di != 0 {
            Some((n, grid.dx))
        } else {
            Some((n, grid.dy))
        }
    })
}

/// Multi-source Dijkstra over interior cells; unreached cells stay infinite.
fn dijkstra(grid: &Grid, mask: &CellMask, seeds: &[(usize, f64)]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    for &(cell, d) in seeds {
        if d < dist[cell] {
            dist[cell] = d;
            heap.push(Entry { dist: d, cell });
        }
    }
    while let Some(Entry { dist: d, cell }) = heap.pop() {
        if d > dist[cell] {
            continue;
        }
        for (n, len) in graph_neighbours(grid, mask, cell) {
            let candidate = d + len;
            if candidate < dist[n] {
                dist[n] = candidate;
                heap.push(Entry {
                    dist: candidate,
                    cell: n,
                });
            }
        }
    }
    dist
}

/// Which exit faces lead towards the targets: exit faces whose midpoint lies
/// within half a cell of one of the target segments.
struct Targets {
    x_faces: Vec<bool>,
    y_faces: Vec<bool>,
}

impl Targets {
    fn new(grid: &Grid, mask: &CellMask, targets: &[Segment]) -> Self {
        let tol = 0.5 * grid.h();
        let near = |p: Vec2| targets.iter().any(|s| s.distance_to(p) < tol);
        let mut x_faces = vec![false; mask.x_faces.len()];
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                let f = grid.x_face_index(i, j);
                x_faces[f] = mask.x_faces[f] == FaceClass::Exit && near(grid.x_face_midpoint(i, j));
            }
        }
        let mut y_faces = vec![false; mask.y_faces.len()];
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                let f = grid.y_face_index(i, j);
                y_faces[f] = mask.y_faces[f] == FaceClass::Exit && near(grid.y_face_midpoint(i, j));
            }
        }
        Targets { x_faces, y_faces }
    }

    /// Target flags of the four faces of cell `(i, j)`: east, west, north, south.
    fn around(&self, grid: &Grid, i: usize, j: usize) -> [bool; 4] {
        [
            self.x_faces[grid.x_face_index(i + 1, j)],
            self.x_faces[grid.x_face_index(i, j)],
            self.y_faces[grid.y_face_index(i, j + 1)],
            self.y_faces[grid.y_face_index(i, j)],
        ]
    }
}

/// Cells that touch a face of the given class, in one pass over the faces.
fn cells_touching(grid: &Grid, mask: &CellMask, class: FaceClass) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if !mask.is_interior(k) {
                continue;
            }
            out[k] = mask.x_faces[grid.x_face_index(i, j)] == class
                || mask.x_faces[grid.x_face_index(i + 1, j)] == class
                || mask.y_faces[grid.y_face_index(i, j)] == class
                || mask.y_faces[grid.y_face_index(i, j + 1)] == class;
        }
    }
    out
}

/// Centered differences, one-sided where a neighbour is missing. `ghost`
/// supplies values across faces that have no interior neighbour.
fn gradient(
    grid: &Grid,
    mask: &CellMask,
    d: &[f64],
    k: usize,
    ghost: impl Fn(usize) -> Option<f64>,
) -> Vec2 {
    let (i, j) = grid.coords(k);
    let value = |di: i64, dj: i64, side: usize| match neighbour(grid, mask, i, j, di, dj) {
        Some(n) if d[n].is_finite() => Some(d[n]),
        Some(_) => None,
        None => ghost(side),
    };
    let diff = |plus: Option<f64>, minus: Option<f64>, step: f64| match (plus, minus) {
        (Some(p), Some(m)) => (p - m) / (2.0 * step),
        (Some(p), None) => (p - d[k]) / step,
        (None, Some(m)) => (d[k] - m) / step,
        (None, None) => 0.0,
    };
    Vec2::new(
        diff(value(1, 0, 0), value(-1, 0, 1), grid.dx),
        diff(value(0, 1, 2), value(0, -1, 3), grid.dy),
    )
}

/// Builds `w` for pedestrians heading to `targets` (segments on the exit
/// part of the boundary).
pub fn build_desired_field(
    grid: &Grid,
    mask: &CellMask,
    targets: &[Segment],
    discomfort_amp: f64,
    discomfort_range: f64,
) -> Result<DesiredField> {
    if !(discomfort_amp >= 0.0) || !(discomfort_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "discomfort needs amplitude ≥ 0 and range > 0, got {discomfort_amp} and {discomfort_range}"
        )));
    }
    let faces = Targets::new(grid, mask, targets);
    let mut seeds = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if !mask.is_interior(k) {
                continue;
            }
            let around = faces.around(grid, i, j);
            let gap = [grid.dx, grid.dx, grid.dy, grid.dy]
                .iter()
                .zip(around)
                .filter(|(_, t)| *t)
                .map(|(s, _)| 0.5 * s)
                .fold(f64::INFINITY, f64::min);
            if gap.is_finite() {
                seeds.push((k, gap));
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "no exit face lies on the target segments".into(),
        ));
    }
    let dist = dijkstra(grid, mask, &seeds);

    let mut direction = vec![Vec2::ZERO; grid.len()];
    for k in 0..grid.len() {
        if !mask.is_interior(k) {
            continue;
        }
        let (i, j) = grid.coords(k);
        if !dist[k].is_finite() {
            return Err(Error::UnreachableExit { i, j });
        }
        let around = faces.around(grid, i, j);
        let steps = [grid.dx, grid.dx, grid.dy, grid.dy];
        let g = gradient(grid, mask, &dist, k, |side| {
            around[side].then(|| dist[k] - steps[side])
        });
        direction[k] = if g.norm() > 1e-12 {
            -g.normalized()
        } else {
            steepest_descent(grid, mask, &dist, k, &around)
        };
    }

    let wall_cells = cells_touching(grid, mask, FaceClass::Wall);
    let wall_seeds: Vec<(usize, f64)> = (0..grid.len())
        .filter(|&k| wall_cells[k])
        .map(|k| (k, 0.0))
        .collect();
    let d_wall = dijkstra(grid, mask, &wall_seeds);
    let mut discomfort = vec![Vec2::ZERO; grid.len()];
    for k in 0..grid.len() {
        if !mask.is_interior(k) || !d_wall[k].is_finite() {
            continue;
        }
        let intensity = discomfort_amp * (1.0 - d_wall[k] / discomfort_range).max(0.0);
        if intensity == 0.0 {
            continue;
        }
        let g = gradient(grid, mask, &d_wall, k, |_| None);
        if g.norm() > 1e-12 {
            discomfort[k] = g.normalized() * intensity;
        }
    }

    let combined = direction
        .iter()
        .zip(&discomfort)
        .map(|(&a, &b)| a + b)
        .collect();
    let distance = dist
        .iter()
        .enumerate()
        .map(|(k, &d)| if mask.is_interior(k) { d } else { 0.0 })
        .collect();
    Ok(DesiredField {
        direction: VectorField::new(*grid, direction)?,
        discomfort: VectorField::new(*grid, discomfort)?,
        combined: VectorField::new(*grid, combined)?,
        distance: ScalarField::new(*grid, distance)?,
    })
}

/// Direction of the neighbour (or target face) with the steepest descent,
/// used where the centered gradient cancels, e.g. right behind a symmetric
/// obstacle.
fn steepest_descent(grid: &Grid, mask: &CellMask, dist: &[f64], k: usize, around: &[bool; 4]) -> Vec2 {
    let offsets = [
        Vec2::new(grid.dx, 0.0),
        Vec2::new(-grid.dx, 0.0),
        Vec2::new(0.0, grid.dy),
        Vec2::new(0.0, -grid.dy),
    ];
    let mut best = (0.0, Vec2::ZERO);
    for (side, &t) in around.iter().enumerate() {
        if t {
            let slope = -1.0;
            if slope < best.0 {
                best = (slope, offsets[side]);
            }
        }
    }
    let (i, j) = grid.coords(k);
    for (n, len) in graph_neighbours(grid, mask, k) {
        let slope = (dist[n] - dist[k]) / len;
        if slope < best.0 {
            let (ni, nj) = grid.coords(n);
            let off = Vec2::new(
                (ni as f64 - i as f64) * grid.dx,
                (nj as f64 - j as f64) * grid.dy,
            );
            best = (slope, off);
        }
    }
    if best.1 == Vec2::ZERO {
        Vec2::ZERO
    } else {
        best.1.normalized()
    }
}
