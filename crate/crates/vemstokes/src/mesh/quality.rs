//! Mesh regularity report: a star-shapedness proxy (largest ball inscribed in
//! the polygon kernel, relative to the diameter) and the minimum vertex
//! spacing. Quality is reported, never enforced.

use super::PolyMesh;
use crate::geometry::{Polygon, Vec2};

#[derive(Debug, Clone, Copy)]
pub struct CellQuality {
    /// inscribed-kernel-ball radius over cell diameter; 0 when the kernel is empty
    pub kernel_ratio: f64,
    /// minimum pairwise vertex distance over cell diameter
    pub spacing_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct MeshQualityReport {
    pub cells: Vec<CellQuality>,
    pub min_kernel_ratio: f64,
    pub min_spacing_ratio: f64,
}

pub(super) fn report(mesh: &PolyMesh) -> MeshQualityReport {
    let cells: Vec<CellQuality> = (0..mesh.num_cells())
        .map(|c| {
            let poly = mesh.cell_polygon(c).expect("valid mesh cell");
            cell_quality(&poly)
        })
        .collect();
    let min_kernel_ratio = cells.iter().map(|q| q.kernel_ratio).fold(f64::INFINITY, f64::min);
    let min_spacing_ratio = cells.iter().map(|q| q.spacing_ratio).fold(f64::INFINITY, f64::min);
    MeshQualityReport {
        cells,
        min_kernel_ratio,
        min_spacing_ratio,
    }
}

pub fn cell_quality(poly: &Polygon) -> CellQuality {
    let h = poly.diameter();
    let verts = poly.vertices();
    let mut spacing = f64::INFINITY;
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            spacing = spacing.min(verts[i].dist(verts[j]));
        }
    }
    CellQuality {
        kernel_ratio: kernel_inradius(poly) / h,
        spacing_ratio: spacing / h,
    }
}

/// Radius of the largest ball contained in the kernel of the polygon (the
/// intersection of the inner half-planes of all edge lines), found by binary
/// search on the offset half-plane intersection.
pub fn kernel_inradius(poly: &Polygon) -> f64 {
    let h = poly.diameter();
    if feasible(poly, 0.0).is_none() {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 0.5 * h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(poly, mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Intersects the polygon bounding box with every edge half-plane pushed
/// inward by `offset`; returns a point of the region if nonempty.
fn feasible(poly: &Polygon, offset: f64) -> Option<Vec2> {
    let verts = poly.vertices();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in verts {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    let mut region = vec![
        lo,
        Vec2::new(hi.x, lo.y),
        hi,
        Vec2::new(lo.x, hi.y),
    ];
    for i in 0..verts.len() {
        let (a, _) = poly.edge(i);
        let n = poly.outward_normal(i);
        let c = n.dot(a) - offset;
        region = clip_half_plane(&region, n, c);
        if region.is_empty() {
            return None;
        }
    }
    region.first().copied()
}

/// Sutherland-Hodgman clip of a convex polygon against `n . x <= c`.
pub(super) fn clip_half_plane(region: &[Vec2], n: Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(region.len() + 1);
    let m = region.len();
    for i in 0..m {
        let a = region[i];
        let b = region[(i + 1) % m];
        let da = n.dot(a) - c;
        let db = n.dot(b) - c;
        if da <= 0.0 {
            out.push(a);
            if db > 0.0 {
                out.push(a + (b - a) * (da / (da - db)));
            }
        } else if db <= 0.0 {
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_kernel_ratio() {
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let q = cell_quality(&p);
        assert_relative_eq!(q.kernel_ratio, 0.5 / 2.0_f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(q.spacing_ratio, 1.0 / 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn triangle_kernel_is_inradius() {
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(0.0, 4.0),
        ])
        .unwrap();
        // inradius = area / s with s the semiperimeter: 6 / 6 = 1
        let q = cell_quality(&p);
        assert_relative_eq!(q.kernel_ratio, 1.0 / 5.0, max_relative = 1e-9);
    }

    #[test]
    fn nonconvex_hexagon_kernel_positive() {
        // staircase hexagon of the fourth family, star-shaped but nonconvex
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 2.0 / 3.0),
            Vec2::new(0.5, 2.0 / 3.0),
            Vec2::new(0.5, 1.0 / 3.0),
            Vec2::new(0.0, 1.0 / 3.0),
        ])
        .unwrap();
        let q = cell_quality(&p);
        assert!(q.kernel_ratio > 0.0);
        // the kernel is a strict subset of the cell
        assert!(q.kernel_ratio < 0.5);
    }
}
