//! Voronoi mesh families: clipped Voronoi diagrams of random seed points with
//! Lloyd relaxation. On the disk the circular boundary is replaced by the
//! chords of the clipped cells.

use super::quality::clip_half_plane;
use super::{Domain, PolyMesh};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Lloyd passes for the relaxed family.
pub(super) const LLOYD_RELAXED: usize = 50;

pub(super) fn voronoi_mesh(
    domain: Domain,
    n: usize,
    seed: u64,
    lloyd_passes: usize,
) -> Result<PolyMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = n * n;
    let mut seeds: Vec<Vec2> = (0..count).map(|_| sample(domain, &mut rng)).collect();
    for _ in 0..lloyd_passes {
        let cells = voronoi_cells(domain, &seeds);
        for (s, cell) in seeds.iter_mut().zip(&cells) {
            *s = polygon_centroid(cell);
        }
    }
    let cells = voronoi_cells(domain, &seeds);
    let spacing = (domain_area(domain) / count as f64).sqrt();
    let (points, loops) = weld(&cells, 1e-6 * spacing)?;
    let mesh = PolyMesh::from_cells(points, loops)?;
    mesh.validate()?;
    Ok(mesh)
}

fn domain_area(domain: Domain) -> f64 {
    match domain {
        Domain::Square => 4.0,
        Domain::UnitSquare => 1.0,
        Domain::Disk => std::f64::consts::PI,
        Domain::LShape => 3.0,
    }
}

fn sample(domain: Domain, rng: &mut ChaCha8Rng) -> Vec2 {
    match domain {
        Domain::Square => Vec2::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0),
        Domain::UnitSquare => Vec2::new(rng.gen::<f64>(), rng.gen::<f64>()),
        Domain::Disk => {
            let r = rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            Vec2::new(r * th.cos(), r * th.sin())
        }
        Domain::LShape => unreachable!("voronoi families are rejected on the L-shape"),
    }
}

fn bounding_polygon(domain: Domain) -> Vec<Vec2> {
    match domain {
        Domain::UnitSquare => vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ],
        _ => vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ],
    }
}

/// All Voronoi cells, clipped to the domain. Cell `i` belongs to seed `i`.
fn voronoi_cells(domain: Domain, seeds: &[Vec2]) -> Vec<Vec<Vec2>> {
    let grid = BucketGrid::build(seeds);
    let base = bounding_polygon(domain);
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = base.clone();
            let mut radius = max_dist(s, &cell);
            let mut ring = 0usize;
            loop {
                // points in rings >= k are at least (k - 1) * min_side away
                let done = ring >= 2 && (ring as f64 - 1.0) * grid.min_side > 2.0 * radius;
                if done || ring > grid.dim * 2 {
                    break;
                }
                let mut cands = grid.ring(s, ring);
                cands.retain(|&j| j != i);
                cands.sort_by(|&a, &b| {
                    seeds[a]
                        .dist(s)
                        .partial_cmp(&seeds[b].dist(s))
                        .unwrap()
                        .then(a.cmp(&b))
                });
                for j in cands {
                    let o = seeds[j];
                    if s.dist(o) > 2.0 * radius {
                        continue;
                    }
                    // keep the side of the bisector containing the seed
                    let d = o - s;
                    let c = d.dot((s + o) * 0.5);
                    cell = clip_half_plane(&cell, d, c);
                    if cell.is_empty() {
                        break;
                    }
                    radius = max_dist(s, &cell);
                }
                ring += 1;
            }
            if domain == Domain::Disk {
                cell = clip_to_disk(&cell, 1.0);
            }
            cell
        })
        .collect()
}

fn max_dist(p: Vec2, poly: &[Vec2]) -> f64 {
    poly.iter().map(|&v| v.dist(p)).fold(0.0, f64::max)
}

fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let mut twice_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let w = a.cross(b);
        twice_area += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Vec2::new(cx / (3.0 * twice_area), cy / (3.0 * twice_area))
}

/// Convex polygon intersected with the disk of radius `r`; circular arcs are
/// replaced by the chords between consecutive crossing points.
fn clip_to_disk(poly: &[Vec2], r: f64) -> Vec<Vec2> {
    let m = poly.len();
    let mut out = Vec::with_capacity(m + 4);
    let inside = |p: Vec2| p.dot(p) <= r * r;
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let (ina, inb) = (inside(a), inside(b));
        if ina {
            out.push(a);
            if !inb {
                if let Some((t, _)) = segment_circle(a, b, r) {
                    out.push(a + (b - a) * t);
                }
            }
        } else if inb {
            if let Some((t, _)) = segment_circle(a, b, r) {
                out.push(a + (b - a) * t);
            }
        } else if let Some((t1, t2)) = segment_circle_both(a, b, r) {
            out.push(a + (b - a) * t1);
            out.push(a + (b - a) * t2);
        }
    }
    out
}

/// First crossing of segment `a -> b` with the circle, as parameter in (0, 1).
fn segment_circle(a: Vec2, b: Vec2, r: f64) -> Option<(f64, f64)> {
    segment_circle_both(a, b, r).map(|(t1, t2)| {
        // pick the crossing that flips the inside state of `a`
        if a.dot(a) <= r * r {
            (t2.max(t1), 0.0)
        } else {
            (t1.min(t2), 0.0)
        }
    })
}

fn segment_circle_both(a: Vec2, b: Vec2, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let qa = d.dot(d);
    let qb = 2.0 * a.dot(d);
    let qc = a.dot(a) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = (-qb - sq) / (2.0 * qa);
    let t2 = (-qb + sq) / (2.0 * qa);
    let in_range = |t: f64| (0.0..=1.0).contains(&t);
    match (in_range(t1), in_range(t2)) {
        (true, true) => Some((t1, t2)),
        (true, false) => Some((t1, t1)),
        (false, true) => Some((t2, t2)),
        _ => None,
    }
}

struct BucketGrid {
    dim: usize,
    lo: Vec2,
    side: Vec2,
    min_side: f64,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn build(points: &[Vec2]) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let dim = (points.len() as f64).sqrt().ceil() as usize;
        let pad = 1e-12 + 1e-12 * (hi - lo).norm();
        let side = Vec2::new(
            ((hi.x - lo.x) + pad) / dim as f64,
            ((hi.y - lo.y) + pad) / dim as f64,
        );
        let mut buckets = vec![Vec::new(); dim * dim];
        for (i, p) in points.iter().enumerate() {
            let (bx, by) = Self::key(lo, side, dim, *p);
            buckets[by * dim + bx].push(i);
        }
        BucketGrid {
            dim,
            lo,
            side,
            min_side: side.x.min(side.y),
            buckets,
        }
    }

    fn key(lo: Vec2, side: Vec2, dim: usize, p: Vec2) -> (usize, usize) {
        let bx = (((p.x - lo.x) / side.x) as usize).min(dim - 1);
        let by = (((p.y - lo.y) / side.y) as usize).min(dim - 1);
        (bx, by)
    }

    /// Point indices in the square ring at Chebyshev distance `k`.
    fn ring(&self, p: Vec2, k: usize) -> Vec<usize> {
        let (bx, by) = Self::key(self.lo, self.side, self.dim, p);
        let mut out = Vec::new();
        let k = k as isize;
        let (bx, by) = (bx as isize, by as isize);
        for dy in -k..=k {
            for dx in -k..=k {
                if dx.abs().max(dy.abs()) != k {
                    continue;
                }
                let (x, y) = (bx + dx, by + dy);
                if x < 0 || y < 0 || x >= self.dim as isize || y >= self.dim as isize {
                    continue;
                }
                out.extend_from_slice(&self.buckets[y as usize * self.dim + x as usize]);
            }
        }
        out
    }
}

/// Merges vertices closer than `tol` across all cell polygons and produces
/// index loops; degenerate repeats are collapsed.
fn weld(cells: &[Vec<Vec2>], tol: f64) -> Result<(Vec<Vec2>, Vec<Vec<u32>>)> {
    use std::collections::HashMap;
    let mut points: Vec<Vec2> = Vec::new();
    let mut hash: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    let key = |p: Vec2| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);

    let mut intern = |p: Vec2, points: &mut Vec<Vec2>| -> u32 {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = hash.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if points[id as usize].dist(p) <= tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = points.len() as u32;
        points.push(p);
        hash.entry((kx, ky)).or_default().push(id);
        id
    };

    let mut loops = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        if cell.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "voronoi cell {ci} degenerated to {} vertices",
                cell.len()
            )));
        }
        let mut ids: Vec<u32> = cell.iter().map(|&p| intern(p, &mut points)).collect();
        ids.dedup();
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        // drop spikes ( ... a b a ... ) left by collapsed slivers
        let mut changed = true;
        while changed && ids.len() >= 3 {
            changed = false;
            let n = ids.len();
            for i in 0..n {
                if ids[(i + n - 1) % n] == ids[(i + 1) % n] {
                    let j = (i + 1) % n;
                    let mut keep: Vec<u32> = Vec::with_capacity(n - 2);
                    for (idx, &v) in ids.iter().enumerate() {
                        if idx != i && idx != j {
                            keep.push(v);
                        }
                    }
                    ids = keep;
                    changed = true;
                    break;
                }
            }
        }
        if ids.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "voronoi cell {ci} collapsed during welding"
            )));
        }
        loops.push(ids);
    }
    Ok((points, loops))
}
