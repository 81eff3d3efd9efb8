use crate::field::{ScalarField, VectorField};
use crate::geometry::{CellMask, FaceClass};

/// Mass, sup-norm and total variation of a discrete density.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub mass: f64,
    pub sup_norm: f64,
    /// Sum of face jumps times face length; boundary faces count the jump
    /// to the zero state outside.
    pub total_variation: f64,
}

pub fn discrete_diagnostics(rho: &ScalarField, mask: &CellMask) -> Diagnostics {
    let g = rho.grid();
    let r = rho.values();
    let mass = g.cell_area() * r.iter().sum::<f64>();
    let sup_norm = rho.sup_norm();

    let mut tv = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let jump = match mask.x_faces[g.x_face_index(i, j)] {
                FaceClass::Internal => (r[g.index(i, j)] - r[g.index(i - 1, j)]).abs(),
                FaceClass::Wall | FaceClass::Exit => {
                    let inside = if i > 0 && mask.is_interior(g.index(i - 1, j)) {
                        g.index(i - 1, j)
                    } else {
                        g.index(i, j)
                    };
                    r[inside].abs()
                }
                FaceClass::Inactive => 0.0,
            };
            tv += jump * g.dy;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let jump = match mask.y_faces[g.y_face_index(i, j)] {
                FaceClass::Internal => (r[g.index(i, j)] - r[g.index(i, j - 1)]).abs(),
                FaceClass::Wall | FaceClass::Exit => {
                    let inside = if j > 0 && mask.is_interior(g.index(i, j - 1)) {
                        g.index(i, j - 1)
                    } else {
                        g.index(i, j)
                    };
                    r[inside].abs()
                }
                FaceClass::Inactive => 0.0,
            };
            tv += jump * g.dx;
        }
    }
    Diagnostics {
        mass,
        sup_norm,
        total_variation: tv,
    }
}

/// Face-based divergence matching the finite-volume fluxes: internal faces
/// use the mean normal velocity, walls carry none and exits only outflow.
pub fn discrete_divergence(u: &VectorField, mask: &CellMask) -> ScalarField {
    let g = *u.grid();
    let v = u.values();
    let normal = |class: FaceClass, a: Option<usize>, b: Option<usize>, comp: fn(&crate::Vec2) -> f64| {
        match class {
            FaceClass::Internal => 0.5 * (comp(&v[a.unwrap()]) + comp(&v[b.unwrap()])),
            FaceClass::Exit => {
                if a.is_some_and(|a| mask.is_interior(a)) {
                    comp(&v[a.unwrap()]).max(0.0)
                } else {
                    comp(&v[b.unwrap()]).min(0.0)
                }
            }
            _ => 0.0,
        }
    };
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            if !mask.is_interior(k) {
                continue;
            }
            let west = normal(
                mask.x_faces[g.x_face_index(i, j)],
                (i > 0).then(|| g.index(i - 1, j)),
                Some(k),
                |w| w.x,
            );
            let east = normal(
                mask.x_faces[g.x_face_index(i + 1, j)],
                Some(k),
                (i + 1 < g.nx).then(|| g.index(i + 1, j)),
                |w| w.x,
            );
            let south = normal(
                mask.y_faces[g.y_face_index(i, j)],
                (j > 0).then(|| g.index(i, j - 1)),
                Some(k),
                |w| w.y,
            );
            let north = normal(
                mask.y_faces[g.y_face_index(i, j + 1)],
                Some(k),
                (j + 1 < g.ny).then(|| g.index(i, j + 1)),
                |w| w.y,
            );
            out[k] = (east - west) / g.dx + (north - south) / g.dy;
        }
    }
    ScalarField::new(g, out).expect("one value per cell")
}
