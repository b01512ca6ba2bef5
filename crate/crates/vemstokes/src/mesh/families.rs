//! Grid-based mesh families: uniform squares, staircase hexagons and the
//! smoothly distorted grid.

use super::{Domain, PolyMesh};
use crate::error::Result;
use crate::geometry::Vec2;

/// Grid extent in cells per axis plus the coordinate map.
struct GridSpec {
    nx: usize,
    ny: usize,
    origin: Vec2,
    dx: f64,
    dy: f64,
    lshape: bool,
}

fn grid_spec(domain: Domain, n: usize) -> GridSpec {
    match domain {
        Domain::Square => GridSpec {
            nx: n,
            ny: n,
            origin: Vec2::new(-1.0, -1.0),
            dx: 2.0 / n as f64,
            dy: 2.0 / n as f64,
            lshape: false,
        },
        Domain::UnitSquare => GridSpec {
            nx: n,
            ny: n,
            origin: Vec2::new(0.0, 0.0),
            dx: 1.0 / n as f64,
            dy: 1.0 / n as f64,
            lshape: false,
        },
        // n cells per unit side, third quadrant removed
        Domain::LShape => GridSpec {
            nx: 2 * n,
            ny: 2 * n,
            origin: Vec2::new(-1.0, -1.0),
            dx: 1.0 / n as f64,
            dy: 1.0 / n as f64,
            lshape: true,
        },
        Domain::Disk => unreachable!("grid families are not defined on the disk"),
    }
}

impl GridSpec {
    fn keep(&self, i: usize, j: usize) -> bool {
        if !self.lshape {
            return true;
        }
        // drop cells whose center is in the third quadrant
        let cx = self.origin.x + (i as f64 + 0.5) * self.dx;
        let cy = self.origin.y + (j as f64 + 0.5) * self.dy;
        !(cx < 0.0 && cy < 0.0)
    }

    fn corner(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dy,
        )
    }
}

/// Uniform square cells (family 1).
pub fn grid(domain: Domain, n: usize) -> Result<PolyMesh> {
    let spec = grid_spec(domain, n);
    build_from_quads(&spec, |p| p)
}

/// Family 5: the uniform grid pushed through the smooth distortion
/// `(x, y) -> (x, y) + 0.1 sin(pi x) sin(pi y) (1, 1)`, which fixes the
/// domain boundary and all integer grid lines.
pub fn distorted_grid(domain: Domain, n: usize) -> Result<PolyMesh> {
    let spec = grid_spec(domain, n);
    build_from_quads(&spec, |p| {
        let s = 0.1 * (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin();
        Vec2::new(p.x + s, p.y + s)
    })
}

fn build_from_quads(spec: &GridSpec, map: impl Fn(Vec2) -> Vec2) -> Result<PolyMesh> {
    let (nx, ny) = (spec.nx, spec.ny);
    let vid = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            points.push(map(spec.corner(i, j)));
        }
    }
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if spec.keep(i, j) {
                cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
    }
    let (points, cells) = drop_unused_points(points, cells);
    PolyMesh::from_cells(points, cells)
}

/// Family 4: each grid square is cut into two interlocking nonconvex hexagons
/// by a staircase at heights 1/3 and 2/3 of the cell. The cut is mirrored on
/// odd columns so the extra edge vertices match between neighbours.
pub fn staircase_hexagons(domain: Domain, n: usize) -> Result<PolyMesh> {
    let spec = grid_spec(domain, n);
    let (nx, ny) = (spec.nx, spec.ny);
    // vertex grid with thirds on the vertical lines and midpoints per cell
    let mut points: Vec<Vec2> = Vec::new();
    let mut index: std::collections::HashMap<(u64, u64), u32> = std::collections::HashMap::new();
    let mut intern = |p: Vec2| -> u32 {
        let key = (p.x.to_bits(), p.y.to_bits());
        *index.entry(key).or_insert_with(|| {
            points.push(p);
            (points.len() - 1) as u32
        })
    };

    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !spec.keep(i, j) {
                continue;
            }
            let c00 = spec.corner(i, j);
            let c10 = spec.corner(i + 1, j);
            let c11 = spec.corner(i + 1, j + 1);
            let c01 = spec.corner(i, j + 1);
            let y13 = c00.y + (c01.y - c00.y) / 3.0;
            let y23 = c00.y + 2.0 * (c01.y - c00.y) / 3.0;
            let xm = 0.5 * (c00.x + c10.x);
            let (x_lo, x_hi) = (c00.x, c10.x);
            let mirrored = i % 2 == 1;
            // staircase vertices on the two vertical cell sides and the middle
            let (lo_side_y, hi_side_y) = if mirrored { (y13, y23) } else { (y23, y13) };
            // lower hexagon: bottom corners, then staircase right-to-left
            let lower = vec![
                intern(c00),
                intern(c10),
                intern(Vec2::new(x_hi, lo_side_y)),
                intern(Vec2::new(xm, lo_side_y)),
                intern(Vec2::new(xm, hi_side_y)),
                intern(Vec2::new(x_lo, hi_side_y)),
            ];
            let upper = vec![
                intern(Vec2::new(x_lo, hi_side_y)),
                intern(Vec2::new(xm, hi_side_y)),
                intern(Vec2::new(xm, lo_side_y)),
                intern(Vec2::new(x_hi, lo_side_y)),
                intern(c11),
                intern(c01),
            ];
            cells.push(lower);
            cells.push(upper);
        }
    }
    PolyMesh::from_cells(points, cells)
}

fn drop_unused_points(points: Vec<Vec2>, cells: Vec<Vec<u32>>) -> (Vec<Vec2>, Vec<Vec<u32>>) {
    let mut used = vec![u32::MAX; points.len()];
    let mut kept = Vec::new();
    let cells = cells
        .into_iter()
        .map(|cell| {
            cell.into_iter()
                .map(|v| {
                    if used[v as usize] == u32::MAX {
                        used[v as usize] = kept.len() as u32;
                        kept.push(points[v as usize]);
                    }
                    used[v as usize]
                })
                .collect()
        })
        .collect();
    (kept, cells)
}
