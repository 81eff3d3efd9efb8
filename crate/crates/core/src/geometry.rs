//! Bounded domains, uniform grids and cell/face classification.
//!
//! Cells are classified by sampling their centers. A face between an
//! interior cell and anything else (an obstacle cell, an exterior cell or
//! the edge of the grid) is a boundary face; boundary faces are exits when
//! their midpoint lies within half a cell of a declared exit segment, and
//! walls otherwise.

use crate::{Error, Result, Vec2};

/// Relative slack used when checking that a spacing divides an extent.
const DIVISION_TOLERANCE: f64 = 1e-9;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains_closed(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_open(&self, p: Vec2) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }
}

/// Straight boundary segment, used for exits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        self.a + (self.b - self.a) * s
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return (p - self.a).norm();
        }
        let s = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        (p - self.point_at(s)).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// A rectangle, optionally with closed rectangular obstacles removed.
    Rectangle { outer: Rect, obstacles: Vec<Rect> },
    Disc { center: Vec2, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Interior,
    Obstacle,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceClass {
    /// Neither adjacent cell is interior.
    Inactive,
    /// Both adjacent cells are interior.
    Internal,
    Wall,
    Exit,
}

impl FaceClass {
    pub fn is_boundary(self) -> bool {
        matches!(self, FaceClass::Wall | FaceClass::Exit)
    }
}

/// A bounded planar domain with its exits and interior-sphere radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    exits: Vec<Segment>,
    interior_sphere_radius: f64,
}

impl Domain {
    pub fn rectangle(
        outer: Rect,
        obstacles: Vec<Rect>,
        exits: Vec<Segment>,
        interior_sphere_radius: f64,
    ) -> Result<Self> {
        for (k, obstacle) in obstacles.iter().enumerate() {
            if !outer.contains_rect(obstacle) {
                return Err(Error::InvalidParameter(format!(
                    "obstacle {k} is not contained in the outer rectangle"
                )));
            }
        }
        let max_radius = 0.5 * outer.width().min(outer.height());
        Self::validated(
            Shape::Rectangle { outer, obstacles },
            exits,
            interior_sphere_radius,
            max_radius,
        )
    }

    pub fn disc(
        center: Vec2,
        radius: f64,
        exits: Vec<Segment>,
        interior_sphere_radius: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "disc radius must be positive, got {radius}"
            )));
        }
        Self::validated(
            Shape::Disc { center, radius },
            exits,
            interior_sphere_radius,
            radius,
        )
    }

    fn validated(
        shape: Shape,
        exits: Vec<Segment>,
        interior_sphere_radius: f64,
        max_radius: f64,
    ) -> Result<Self> {
        // The declared radius must at least fit an inscribed disc.
        if !(interior_sphere_radius > 0.0) || interior_sphere_radius > max_radius {
            return Err(Error::InvalidParameter(format!(
                "interior sphere radius {interior_sphere_radius} must lie in (0, {max_radius}]"
            )));
        }
        let domain = Domain {
            shape,
            exits,
            interior_sphere_radius,
        };
        for index in 0..domain.exits.len() {
            if !domain.segment_on_boundary(&domain.exits[index]) {
                return Err(Error::ExitOffBoundary { index });
            }
        }
        Ok(domain)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn exits(&self) -> &[Segment] {
        &self.exits
    }

    pub fn interior_sphere_radius(&self) -> f64 {
        self.interior_sphere_radius
    }

    pub fn bounding_box(&self) -> Rect {
        match &self.shape {
            Shape::Rectangle { outer, .. } => *outer,
            Shape::Disc { center, radius } => Rect {
                x_min: center.x - radius,
                x_max: center.x + radius,
                y_min: center.y - radius,
                y_max: center.y + radius,
            },
        }
    }

    pub fn classify(&self, p: Vec2) -> CellClass {
        match &self.shape {
            Shape::Rectangle { outer, obstacles } => {
                if !outer.contains_open(p) {
                    CellClass::Exterior
                } else if obstacles.iter().any(|o| o.contains_closed(p)) {
                    CellClass::Obstacle
                } else {
                    CellClass::Interior
                }
            }
            Shape::Disc { center, radius } => {
                if (p - *center).norm() < *radius {
                    CellClass::Interior
                } else {
                    CellClass::Exterior
                }
            }
        }
    }

    /// Membership in the open domain Ω.
    pub fn inside(&self, p: Vec2) -> bool {
        self.classify(p) == CellClass::Interior
    }

    fn diameter(&self) -> f64 {
        let bb = self.bounding_box();
        bb.width().hypot(bb.height())
    }

    /// Samples the segment and requires every sample to have both inside and
    /// outside points arbitrarily close to it.
    fn segment_on_boundary(&self, segment: &Segment) -> bool {
        const SAMPLES: usize = 17;
        let eps = 1e-7 * self.diameter();
        let probes = [
            Vec2::new(eps, 0.0),
            Vec2::new(-eps, 0.0),
            Vec2::new(0.0, eps),
            Vec2::new(0.0, -eps),
            Vec2::new(eps, eps),
            Vec2::new(eps, -eps),
            Vec2::new(-eps, eps),
            Vec2::new(-eps, -eps),
        ];
        (0..SAMPLES).all(|k| {
            let p = segment.point_at(k as f64 / (SAMPLES - 1) as f64);
            let mut any_in = self.inside(p);
            let mut any_out = !any_in;
            for d in probes {
                if self.inside(p + d) {
                    any_in = true;
                } else {
                    any_out = true;
                }
            }
            any_in && any_out
        })
    }
}

/// Whether the interior-sphere radius satisfies `r_Ω ≤ ℓ_η / 4`, the
/// condition under which the normalizer `z` is bounded away from zero.
pub fn check_interior_sphere(domain: &Domain, kernel_support: f64) -> bool {
    domain.interior_sphere_radius() <= kernel_support / 4.0
}

/// Uniform cell-centered grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Lower-left corner of cell (0, 0).
    pub origin: Vec2,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: Vec2) -> Result<Self> {
        if nx == 0 || ny == 0 || !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs positive sizes, got {nx}x{ny} cells of {dx}x{dy}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            dx,
            dy,
            origin,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.dx,
            self.origin.y + (j as f64 + 0.5) * self.dy,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Representative spacing; the two spacings coincide on every grid built
    /// from a single `h`.
    pub fn h(&self) -> f64 {
        self.dx.min(self.dy)
    }

    /// Cell containing `p`, if any.
    pub fn locate(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.dx;
        let fy = (p.y - self.origin.y) / self.dy;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    pub fn x_face_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn y_face_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Midpoint of the vertical face on the left of cell `(i, j)`
    /// (`i == nx` is the right edge of the grid).
    pub fn x_face_midpoint(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + (j as f64 + 0.5) * self.dy,
        )
    }

    /// Midpoint of the horizontal face below cell `(i, j)`
    /// (`j == ny` is the top edge of the grid).
    pub fn y_face_midpoint(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.dx,
            self.origin.y + j as f64 * self.dy,
        )
    }
}

/// Per-cell and per-face classification of a grid.
///
/// Vertical faces are stored `(nx + 1) × ny` row-major, face `i` of row `j`
/// sitting on the left of cell `(i, j)`; horizontal faces are stored
/// `nx × (ny + 1)`, face `j` of column `i` sitting below cell `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    pub cells: Vec<CellClass>,
    pub x_faces: Vec<FaceClass>,
    pub y_faces: Vec<FaceClass>,
}

impl CellMask {
    #[inline]
    pub fn is_interior(&self, index: usize) -> bool {
        self.cells[index] == CellClass::Interior
    }

    pub fn interior_count(&self) -> usize {
        self.count(CellClass::Interior)
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    pub fn face_count(&self, class: FaceClass) -> usize {
        self.x_faces
            .iter()
            .chain(self.y_faces.iter())
            .filter(|&&f| f == class)
            .count()
    }

    /// Indicator of the interior cells as 0/1 values.
    pub fn indicator(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|&c| if c == CellClass::Interior { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Builds the grid covering the domain's bounding box with spacing `h` and
/// classifies its cells and faces.
pub fn build_grid(domain: &Domain, h: f64) -> Result<(Grid, CellMask)> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let bb = domain.bounding_box();
    let nx = cells_along(bb.width(), h)?;
    let ny = cells_along(bb.height(), h)?;
    let grid = Grid::new(
        nx,
        ny,
        bb.width() / nx as f64,
        bb.height() / ny as f64,
        Vec2::new(bb.x_min, bb.y_min),
    )?;
    let cells: Vec<CellClass> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            domain.classify(grid.center(i, j))
        })
        .collect();
    if !cells.contains(&CellClass::Interior) {
        return Err(Error::EmptyDomain { h });
    }
    let (x_faces, y_faces) = classify_faces(&grid, domain, &cells)?;
    Ok((
        grid,
        CellMask {
            cells,
            x_faces,
            y_faces,
        },
    ))
}

fn cells_along(extent: f64, h: f64) -> Result<usize> {
    let n = (extent / h).round();
    if n < 1.0 || (n * h - extent).abs() > DIVISION_TOLERANCE * extent.max(1.0) {
        return Err(Error::NonDividingSpacing { h, extent });
    }
    Ok(n as usize)
}

/// Classifies every face of the grid given its cell classes.
pub fn classify_faces(
    grid: &Grid,
    domain: &Domain,
    cells: &[CellClass],
) -> Result<(Vec<FaceClass>, Vec<FaceClass>)> {
    if cells.len() != grid.len() {
        return Err(Error::ShapeMismatch);
    }
    for (index, exit) in domain.exits().iter().enumerate() {
        if !domain.segment_on_boundary(exit) {
            return Err(Error::ExitOffBoundary { index });
        }
    }
    let interior = |i: Option<usize>, j: usize| -> bool {
        i.is_some_and(|i| i < grid.nx && cells[grid.index(i, j)] == CellClass::Interior)
    };
    // Strictly closer than half a cell, so that faces meeting a segment only
    // at its endpoint are not exits.
    let reach = 0.5 * grid.h() * (1.0 - 1e-9);
    let boundary_class = |mid: Vec2| {
        if domain.exits().iter().any(|e| e.distance_to(mid) < reach) {
            FaceClass::Exit
        } else {
            FaceClass::Wall
        }
    };
    let classify = |a: bool, b: bool, mid: Vec2| match (a, b) {
        (true, true) => FaceClass::Internal,
        (false, false) => FaceClass::Inactive,
        _ => boundary_class(mid),
    };

    let mut x_faces = Vec::with_capacity((grid.nx + 1) * grid.ny);
    for j in 0..grid.ny {
        for i in 0..=grid.nx {
            let left = interior(i.checked_sub(1), j);
            let right = interior(Some(i), j);
            x_faces.push(classify(left, right, grid.x_face_midpoint(i, j)));
        }
    }
    let mut y_faces = Vec::with_capacity(grid.nx * (grid.ny + 1));
    for j in 0..=grid.ny {
        for i in 0..grid.nx {
            let below = j > 0 && interior(Some(i), j - 1);
            let above = j < grid.ny && interior(Some(i), j);
            y_faces.push(classify(below, above, grid.y_face_midpoint(i, j)));
        }
    }
    Ok((x_faces, y_faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square_room() -> Domain {
        let outer = Rect::new(0.0, 8.0, -4.0, 4.0).unwrap();
        let door = Segment::new(Vec2::new(8.0, -1.0), Vec2::new(8.0, 1.0));
        Domain::rectangle(outer, vec![], vec![door], 0.15).unwrap()
    }

    #[test]
    fn empty_rectangle_is_all_interior() {
        let (grid, mask) = build_grid(&square_room(), 0.5).unwrap();
        assert_eq!((grid.nx, grid.ny), (16, 16));
        assert_eq!(mask.interior_count(), 256);
    }

    #[test]
    fn obstacle_cells_match_center_count() {
        let outer = Rect::new(0.0, 8.0, -4.0, 4.0).unwrap();
        let obstacles = vec![
            Rect::new(6.0, 6.5, 0.75, 1.375).unwrap(),
            Rect::new(6.0, 6.5, -1.375, -0.75).unwrap(),
        ];
        let domain = Domain::rectangle(outer, obstacles.clone(), vec![], 0.15).unwrap();
        let h = 0.03125;
        let (grid, mask) = build_grid(&domain, h).unwrap();
        assert_eq!((grid.nx, grid.ny), (256, 256));
        // Brute-force oracle: count centers inside either closed rectangle.
        let mut expected = 0;
        for j in 0..256 {
            for i in 0..256 {
                let c = Vec2::new((i as f64 + 0.5) * h, -4.0 + (j as f64 + 0.5) * h);
                if obstacles.iter().any(|o| o.contains_closed(c)) {
                    expected += 1;
                }
            }
        }
        assert_eq!(expected, 640);
        assert_eq!(mask.count(CellClass::Obstacle), 640);
    }

    #[test]
    fn disc_cell_count_near_area() {
        let domain = Domain::disc(Vec2::ZERO, 1.0, vec![], 1.0).unwrap();
        let h = 1.0 / 64.0;
        let (_, mask) = build_grid(&domain, h).unwrap();
        // Brute-force center-in-disc count at this mesh.
        let n = 128;
        let brute = (0..n * n)
            .filter(|k| {
                let (i, j) = (k % n, k / n);
                let c = Vec2::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                c.norm() < 1.0
            })
            .count();
        assert_eq!(mask.interior_count(), brute);
        let area_estimate = std::f64::consts::PI / (h * h);
        assert!((brute as f64 - area_estimate).abs() / area_estimate < 0.01);
    }

    #[test]
    fn room_door_has_two_over_h_exit_faces() {
        let h = 0.03125;
        let (_, mask) = build_grid(&square_room(), h).unwrap();
        assert_eq!(mask.face_count(FaceClass::Exit), 64);
    }

    #[test]
    fn corridor_open_ends() {
        let outer = Rect::new(0.0, 16.0, -2.0, 2.0).unwrap();
        let exits = vec![
            Segment::new(Vec2::new(0.0, -2.0), Vec2::new(0.0, 2.0)),
            Segment::new(Vec2::new(16.0, -2.0), Vec2::new(16.0, 2.0)),
        ];
        let domain = Domain::rectangle(outer, vec![], exits, 0.04).unwrap();
        let h = 0.0625;
        let (_, mask) = build_grid(&domain, h).unwrap();
        assert_eq!(mask.face_count(FaceClass::Exit), 2 * 64);
    }

    #[test]
    fn no_exits_means_all_walls() {
        let outer = Rect::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let domain = Domain::rectangle(outer, vec![], vec![], 0.1).unwrap();
        let (grid, mask) = build_grid(&domain, 0.25).unwrap();
        assert_eq!(mask.face_count(FaceClass::Exit), 0);
        assert_eq!(mask.face_count(FaceClass::Wall), 2 * (grid.nx + grid.ny));
    }

    #[test]
    fn exit_off_boundary_is_rejected() {
        let outer = Rect::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let inner = Segment::new(Vec2::new(1.0, 0.2), Vec2::new(1.0, 0.8));
        let err = Domain::rectangle(outer, vec![], vec![inner], 0.1).unwrap_err();
        assert!(matches!(err, Error::ExitOffBoundary { index: 0 }));
    }

    #[test]
    fn bad_spacings() {
        let room = square_room();
        assert!(matches!(build_grid(&room, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_grid(&room, -1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            build_grid(&room, 0.3),
            Err(Error::NonDividingSpacing { .. })
        ));
    }

    #[test]
    fn fully_blocked_domain_is_empty() {
        let outer = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let domain = Domain::rectangle(outer, vec![outer], vec![], 0.1).unwrap();
        assert!(matches!(
            build_grid(&domain, 0.25),
            Err(Error::EmptyDomain { .. })
        ));
    }

    #[test]
    fn interior_sphere_predicate() {
        let room = square_room();
        assert!(check_interior_sphere(&room, 0.625));
        let outer = Rect::new(0.0, 8.0, -4.0, 4.0).unwrap();
        let wide = Domain::rectangle(outer, vec![], vec![], 0.2).unwrap();
        assert!(!check_interior_sphere(&wide, 0.625));
        let disc = Domain::disc(Vec2::ZERO, 1.0, vec![], 1.0).unwrap();
        assert!(check_interior_sphere(&disc, 4.0));
    }

    proptest! {
        #[test]
        fn faces_partition_consistently(
            ox in 0.0f64..3.0, oy in 0.0f64..3.0,
            w in 0.25f64..1.0, hgt in 0.25f64..1.0,
            door_lo in 0.0f64..2.0,
        ) {
            let outer = Rect::new(0.0, 4.0, 0.0, 4.0).unwrap();
            let obstacle = Rect::new(ox, (ox + w).min(4.0), oy, (oy + hgt).min(4.0)).unwrap();
            let door = Segment::new(Vec2::new(4.0, door_lo), Vec2::new(4.0, door_lo + 1.0));
            let domain = Domain::rectangle(outer, vec![obstacle], vec![door], 0.1).unwrap();
            let (grid, mask) = build_grid(&domain, 0.125).unwrap();
            // Each cell's class is exactly its center's class.
            for k in 0..grid.len() {
                let (i, j) = grid.coords(k);
                prop_assert_eq!(mask.cells[k], domain.classify(grid.center(i, j)));
            }
            // Boundary faces are exactly the faces with one interior side.
            for j in 0..grid.ny {
                for i in 0..=grid.nx {
                    let l = i > 0 && mask.is_interior(grid.index(i - 1, j));
                    let r = i < grid.nx && mask.is_interior(grid.index(i, j));
                    let f = mask.x_faces[grid.x_face_index(i, j)];
                    prop_assert_eq!(f.is_boundary(), l != r);
                }
            }
            // Refining keeps each point's classification (center sampling is
            // a function of the point only).
            let (fine, fine_mask) = build_grid(&domain, 0.0625).unwrap();
            for k in 0..fine.len() {
                let (i, j) = fine.coords(k);
                prop_assert_eq!(fine_mask.cells[k], domain.classify(fine.center(i, j)));
            }
        }
    }
}
