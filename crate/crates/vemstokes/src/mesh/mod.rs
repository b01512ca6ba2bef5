//! Conforming polygonal meshes: representation, the five mesh families,
//! barycenter-midpoint refinement and quality reporting.
//!
//! Hanging nodes never exist as such: a vertex lying on a neighbour's edge is
//! a genuine vertex of that neighbour's polygon, so the edge table is always
//! conforming.

mod families;
mod quality;
mod voronoi;

pub use quality::{CellQuality, MeshQualityReport};

use crate::error::{Error, Result};
use crate::geometry::{Polygon, Vec2};
use std::collections::HashMap;

pub const NO_CELL: u32 = u32::MAX;

/// Classification of an edge with respect to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
    Neumann,
}

/// Mesh edge. `cells[0]` is the lower-index incident cell and the stored unit
/// normal points out of it; `cells[1] == NO_CELL` on the boundary.
#[derive(Debug, Clone)]
pub struct Edge {
    pub verts: [u32; 2],
    pub cells: [u32; 2],
    pub normal: Vec2,
    pub length: f64,
    pub midpoint: Vec2,
}

/// Requested computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `(-1, 1)^2`
    Square,
    /// `(0, 1)^2`
    UnitSquare,
    /// unit disk, boundary approximated by chords
    Disk,
    /// `(-1, 1)^2` minus the third quadrant
    LShape,
}

/// The five mesh families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// uniform squares
    T1,
    /// Lloyd-relaxed Voronoi cells
    T2,
    /// lightly relaxed Voronoi cells (single Lloyd pass, distinct seed stream)
    T3,
    /// interlocking nonconvex hexagons from a staircase cut of each square
    T4,
    /// smoothly distorted squares
    T5,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Family::T1),
            "t2" => Ok(Family::T2),
            "t3" => Ok(Family::T3),
            "t4" => Ok(Family::T4),
            "t5" => Ok(Family::T5),
            other => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(Domain::Square),
            "unit_square" | "unit-square" | "unitsquare" => Ok(Domain::UnitSquare),
            "disk" | "circle" => Ok(Domain::Disk),
            "lshape" | "l-shape" | "l" => Ok(Domain::LShape),
            other => Err(Error::InvalidInput(format!("unknown domain `{other}`"))),
        }
    }
}

/// Conforming polygonal mesh. Immutable after construction; refinement
/// returns a new mesh.
#[derive(Debug, Clone)]
pub struct PolyMesh {
    points: Vec<Vec2>,
    cell_ptr: Vec<usize>,
    cell_vtx: Vec<u32>,
    cell_edge: Vec<u32>,
    edges: Vec<Edge>,
    tags: Vec<BoundaryTag>,
}

impl PolyMesh {
    /// Builds a mesh from vertex coordinates and counterclockwise cell loops,
    /// deriving the edge table. Boundary edges are tagged Dirichlet.
    pub fn from_cells(points: Vec<Vec2>, cells: Vec<Vec<u32>>) -> Result<Self> {
        let ncells = cells.len();
        if ncells == 0 {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        let mut cell_ptr = Vec::with_capacity(ncells + 1);
        let mut cell_vtx = Vec::new();
        cell_ptr.push(0);
        for cell in &cells {
            for &v in cell {
                if v as usize >= points.len() {
                    return Err(Error::InvalidMesh(format!("vertex id {v} out of range")));
                }
            }
            cell_vtx.extend_from_slice(cell);
            cell_ptr.push(cell_vtx.len());
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(u32, u32), u32> = HashMap::new();
        let mut cell_edge = vec![0u32; cell_vtx.len()];
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            for i in 0..n {
                let a = cell[i];
                let b = cell[(i + 1) % n];
                if a == b {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} repeats vertex {a} consecutively"
                    )));
                }
                let key = (a.min(b), a.max(b));
                let slot = cell_ptr[c] + i;
                match lookup.get(&key) {
                    None => {
                        let pa = points[a as usize];
                        let pb = points[b as usize];
                        let t = pb - pa;
                        let len = t.norm();
                        if len == 0.0 {
                            return Err(Error::InvalidMesh("zero-length edge".into()));
                        }
                        // outward for the creating (lower-index) cell
                        let normal = Vec2::new(t.y / len, -t.x / len);
                        let id = edges.len() as u32;
                        edges.push(Edge {
                            verts: [a, b],
                            cells: [c as u32, NO_CELL],
                            normal,
                            length: len,
                            midpoint: (pa + pb) * 0.5,
                        });
                        lookup.insert(key, id);
                        cell_edge[slot] = id;
                    }
                    Some(&id) => {
                        let e = &mut edges[id as usize];
                        if e.cells[1] != NO_CELL {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a},{b}) bounded by more than two cells"
                            )));
                        }
                        if e.verts != [b, a] {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a},{b}) traversed twice in the same direction"
                            )));
                        }
                        e.cells[1] = c as u32;
                        cell_edge[slot] = id;
                    }
                }
            }
        }
        let tags = edges
            .iter()
            .map(|e| {
                if e.cells[1] == NO_CELL {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Interior
                }
            })
            .collect();
        let mesh = Self {
            points,
            cell_ptr,
            cell_vtx,
            cell_edge,
            edges,
            tags,
        };
        // reject degenerate cells up front
        for c in 0..mesh.num_cells() {
            mesh.cell_polygon(c)?;
        }
        Ok(mesh)
    }

    pub fn num_cells(&self) -> usize {
        self.cell_ptr.len() - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn point(&self, v: u32) -> Vec2 {
        self.points[v as usize]
    }

    pub fn cell_vertices(&self, c: usize) -> &[u32] {
        &self.cell_vtx[self.cell_ptr[c]..self.cell_ptr[c + 1]]
    }

    /// Edge ids of cell `c`; entry `i` joins local vertices `i` and `i+1`.
    pub fn cell_edges(&self, c: usize) -> &[u32] {
        &self.cell_edge[self.cell_ptr[c]..self.cell_ptr[c + 1]]
    }

    pub fn edge(&self, e: u32) -> &Edge {
        &self.edges[e as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tag(&self, e: u32) -> BoundaryTag {
        self.tags[e as usize]
    }

    pub fn is_boundary_edge(&self, e: u32) -> bool {
        self.edges[e as usize].cells[1] == NO_CELL
    }

    /// Sign mapping the stored edge normal to the outward normal of cell `c`.
    pub fn sigma(&self, c: usize, e: u32) -> f64 {
        if self.edges[e as usize].cells[0] == c as u32 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn cell_polygon(&self, c: usize) -> Result<Polygon> {
        Polygon::new(
            self.cell_vertices(c)
                .iter()
                .map(|&v| self.points[v as usize])
                .collect(),
        )
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_polygon(c).map(|p| p.diameter()).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_polygon(c).map(|p| p.area()).unwrap_or(0.0))
            .sum()
    }

    /// Returns a copy with boundary edges retagged by `rule` (applied to the
    /// edge midpoint). Interior edges are untouched.
    pub fn retag_boundary(&self, rule: impl Fn(Vec2) -> BoundaryTag) -> PolyMesh {
        let mut out = self.clone();
        for (i, e) in self.edges.iter().enumerate() {
            if e.cells[1] == NO_CELL {
                let t = rule(e.midpoint);
                out.tags[i] = if t == BoundaryTag::Interior {
                    BoundaryTag::Dirichlet
                } else {
                    t
                };
            }
        }
        out
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Full conformity and geometry audit. Cheap enough to run in tests and
    /// after generation of randomized meshes.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![0u32; self.edges.len()];
        for c in 0..self.num_cells() {
            let poly = self.cell_polygon(c)?;
            if poly.area() <= 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} has nonpositive area")));
            }
            for &e in self.cell_edges(c) {
                seen[e as usize] += 1;
                let edge = &self.edges[e as usize];
                if edge.cells[0] != c as u32 && edge.cells[1] != c as u32 {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} lists edge {e} it is not incident to"
                    )));
                }
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            let expect = if e.cells[1] == NO_CELL { 1 } else { 2 };
            if seen[i] != expect {
                return Err(Error::InvalidMesh(format!(
                    "edge {i} referenced {} times, expected {expect}",
                    seen[i]
                )));
            }
            if (e.normal.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMesh(format!("edge {i} normal not unit")));
            }
            if e.cells[1] != NO_CELL && e.cells[0] >= e.cells[1] {
                return Err(Error::InvalidMesh(format!(
                    "edge {i} incident cells not ordered"
                )));
            }
        }
        Ok(())
    }

    pub fn quality(&self) -> MeshQualityReport {
        quality::report(self)
    }

    /// Splits every quadrilateral cell into two triangles along the diagonal
    /// from its first vertex; other cells are fanned from their centroid.
    pub fn split_into_triangles(&self) -> Result<PolyMesh> {
        let mut points = self.points.clone();
        let mut cells: Vec<Vec<u32>> = Vec::new();
        for c in 0..self.num_cells() {
            let vs = self.cell_vertices(c);
            match vs.len() {
                3 => cells.push(vs.to_vec()),
                4 => {
                    cells.push(vec![vs[0], vs[1], vs[2]]);
                    cells.push(vec![vs[0], vs[2], vs[3]]);
                }
                _ => {
                    let poly = self.cell_polygon(c)?;
                    let cid = points.len() as u32;
                    points.push(poly.centroid());
                    for i in 0..vs.len() {
                        cells.push(vec![cid, vs[i], vs[(i + 1) % vs.len()]]);
                    }
                }
            }
        }
        let mesh = PolyMesh::from_cells(points, cells)?;
        Ok(copy_boundary_tags(self, mesh))
    }
}

/// Carries boundary tags from `parent` to a mesh whose boundary edges lie on
/// parent boundary edges (midpoint containment test).
fn copy_boundary_tags(parent: &PolyMesh, mut child: PolyMesh) -> PolyMesh {
    let parent_boundary: Vec<&Edge> = parent
        .edges
        .iter()
        .filter(|e| e.cells[1] == NO_CELL)
        .collect();
    for (i, e) in child.edges.clone().iter().enumerate() {
        if e.cells[1] != NO_CELL {
            continue;
        }
        for (pi, pe) in parent.edges.iter().enumerate() {
            if pe.cells[1] != NO_CELL {
                continue;
            }
            if point_on_segment(
                e.midpoint,
                parent.points[pe.verts[0] as usize],
                parent.points[pe.verts[1] as usize],
            ) {
                child.tags[i] = parent.tags[pi];
                break;
            }
        }
    }
    let _ = parent_boundary;
    child
}

fn point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    let ab = b - a;
    let len = ab.norm();
    let d = (p - a).cross(ab).abs() / len;
    if d > 1e-10 * len {
        return false;
    }
    let t = (p - a).dot(ab) / (len * len);
    (-1e-10..=1.0 + 1e-10).contains(&t)
}

/// Generates a mesh of the requested family on the requested domain.
///
/// `n` counts elements per unit side (grid families) or sets the seed count
/// `n^2` (Voronoi families). `seed` feeds the Voronoi families only; grid
/// families are fully deterministic.
pub fn generate(domain: Domain, family: Family, n: usize, seed: u64) -> Result<PolyMesh> {
    if n < 2 {
        return Err(Error::InvalidInput("mesh resolution must be >= 2".into()));
    }
    match (domain, family) {
        (Domain::Square | Domain::UnitSquare | Domain::LShape, Family::T1) => {
            families::grid(domain, n)
        }
        (Domain::Square | Domain::UnitSquare | Domain::LShape, Family::T4) => {
            families::staircase_hexagons(domain, n)
        }
        (Domain::Square | Domain::UnitSquare | Domain::LShape, Family::T5) => {
            families::distorted_grid(domain, n)
        }
        (Domain::Square | Domain::UnitSquare | Domain::Disk, Family::T2) => {
            voronoi::voronoi_mesh(domain, n, seed, voronoi::LLOYD_RELAXED)
        }
        (Domain::Square | Domain::UnitSquare | Domain::Disk, Family::T3) => {
            // distinct stream so T2 and T3 never share point sets
            voronoi::voronoi_mesh(domain, n, seed ^ 0x9e37_79b9_7f4a_7c15, 1)
        }
        (d, f) => Err(Error::Unsupported(format!(
            "family {f:?} is not available on domain {d:?}"
        ))),
    }
}

/// Barycenter-midpoint refinement: every marked cell with `n` edges becomes
/// `n` quadrilaterals joining its barycenter to the edge midpoints; unmarked
/// neighbours sharing a split edge gain the midpoint as a polygon vertex.
pub fn refine(mesh: &PolyMesh, marked: &[usize]) -> Result<PolyMesh> {
    let ncells = mesh.num_cells();
    let mut is_marked = vec![false; ncells];
    for &c in marked {
        if c >= ncells {
            return Err(Error::InvalidInput(format!("marked cell {c} out of range")));
        }
        is_marked[c] = true;
    }

    let mut points = mesh.points.clone();
    let mut edge_mid: Vec<Option<u32>> = vec![None; mesh.num_edges()];
    for c in 0..ncells {
        if !is_marked[c] {
            continue;
        }
        for &e in mesh.cell_edges(c) {
            if edge_mid[e as usize].is_none() {
                let id = points.len() as u32;
                points.push(mesh.edge(e).midpoint);
                edge_mid[e as usize] = Some(id);
            }
        }
    }

    let mut cells: Vec<Vec<u32>> = Vec::new();
    for c in 0..ncells {
        let vs = mesh.cell_vertices(c);
        let es = mesh.cell_edges(c);
        let n = vs.len();
        if is_marked[c] {
            let poly = mesh.cell_polygon(c)?;
            let bary = points.len() as u32;
            points.push(poly.centroid());
            for i in 0..n {
                let prev = edge_mid[es[(i + n - 1) % n] as usize].unwrap();
                let next = edge_mid[es[i] as usize].unwrap();
                let quad = vec![bary, prev, vs[i], next];
                let area = signed_area(&points, &quad);
                if area <= 0.0 {
                    return Err(Error::RefineGeometry(format!(
                        "cell {c} produced a sub-quadrilateral with area {area:.3e}"
                    )));
                }
                cells.push(quad);
            }
        } else {
            let mut loop_vs = Vec::with_capacity(n + 2);
            for i in 0..n {
                loop_vs.push(vs[i]);
                if let Some(m) = edge_mid[es[i] as usize] {
                    loop_vs.push(m);
                }
            }
            cells.push(loop_vs);
        }
    }

    // boundary tag inheritance through the split pieces
    let mut tag_of_pair: HashMap<(u32, u32), BoundaryTag> = HashMap::new();
    for (i, e) in mesh.edges.iter().enumerate() {
        if e.cells[1] != NO_CELL {
            continue;
        }
        let [a, b] = e.verts;
        let t = mesh.tags[i];
        match edge_mid[i] {
            Some(m) => {
                tag_of_pair.insert(sorted_pair(a, m), t);
                tag_of_pair.insert(sorted_pair(m, b), t);
            }
            None => {
                tag_of_pair.insert(sorted_pair(a, b), t);
            }
        }
    }

    let mut out = PolyMesh::from_cells(points, cells)?;
    for i in 0..out.edges.len() {
        if out.edges[i].cells[1] == NO_CELL {
            let [a, b] = out.edges[i].verts;
            match tag_of_pair.get(&sorted_pair(a, b)) {
                Some(&t) => out.tags[i] = t,
                None => {
                    return Err(Error::RefineGeometry(
                        "new boundary edge does not descend from a parent boundary edge".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

fn sorted_pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn signed_area(points: &[Vec2], loop_vs: &[u32]) -> f64 {
    let n = loop_vs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[loop_vs[i] as usize];
        let b = points[loop_vs[(i + 1) % n] as usize];
        acc += a.cross(b);
    }
    0.5 * acc
}

#[cfg(test)]
mod tests;
