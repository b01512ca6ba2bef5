//! Exact polygon geometry and integration kernels.
//!
//! Everything downstream (projectors, local matrices, the error indicator)
//! integrates polynomials only, so the fixed-order rules here are exact for
//! their use sites: the cell rule integrates total degree <= 4, the edge rule
//! degree <= 5.

use crate::error::{Error, Result};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Plane point / vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Rotation by +90 degrees: (x, y) -> (-y, x).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
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
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}
impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}
impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Simple polygon with counterclockwise vertices and cached measures.
#[derive(Debug, Clone)]
pub struct Polygon {
    verts: Vec<Vec2>,
    area: f64,
    centroid: Vec2,
    diameter: f64,
}

impl Polygon {
    /// Builds a polygon and rejects degenerate input (fewer than 3 vertices,
    /// non-positive orientation, or area below `1e-14 * h^2`).
    pub fn new(verts: Vec<Vec2>) -> Result<Self> {
        if verts.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices",
                verts.len()
            )));
        }
        let (area, centroid) = shoelace(&verts);
        let mut diameter: f64 = 0.0;
        for i in 0..verts.len() {
            for j in (i + 1)..verts.len() {
                diameter = diameter.max(verts[i].dist(verts[j]));
            }
        }
        if !(area > 1e-14 * diameter * diameter) {
            return Err(Error::DegeneratePolygon(format!(
                "signed area {area:.3e} with diameter {diameter:.3e}"
            )));
        }
        for i in 0..verts.len() {
            let j = (i + 1) % verts.len();
            if verts[i].dist(verts[j]) == 0.0 {
                return Err(Error::DegeneratePolygon("repeated vertex".into()));
            }
        }
        Ok(Self {
            verts,
            area,
            centroid,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn num_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Vec2 {
        self.centroid
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1 (mod n)`.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.verts.len();
        (self.verts[i], self.verts[(i + 1) % n])
    }

    /// Outward unit normal of edge `i` (vertices are counterclockwise).
    pub fn outward_normal(&self, i: usize) -> Vec2 {
        let (a, b) = self.edge(i);
        let t = (b - a) / (b - a).norm();
        Vec2::new(t.y, -t.x)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.verts.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                a.dist(b)
            })
            .sum()
    }
}

/// Shoelace area and exact centroid. Area is signed (positive = ccw).
fn shoelace(verts: &[Vec2]) -> (f64, Vec2) {
    let n = verts.len();
    let mut twice_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let w = a.cross(b);
        twice_area += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    let area = 0.5 * twice_area;
    (area, Vec2::new(cx / (6.0 * area), cy / (6.0 * area)))
}

/// `(area, centroid, diameter)` of a valid polygon.
pub fn polygon_measures(poly: &Polygon) -> (f64, Vec2, f64) {
    (poly.area(), poly.centroid(), poly.diameter())
}

/// Scaled monomials `m_ab(x) = ((x - xc)/h)^a ((y - yc)/h)^b` on a cell.
///
/// The scalar P2 basis is ordered `[(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)]`
/// and the vector P1 basis used by the projectors is
/// `phi0 = (1,0), phi1 = (0,1), phi2 = (m10,0), phi3 = (m01,0),
///  phi4 = (0,m10), phi5 = (0,m01)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMonomialBasis {
    pub center: Vec2,
    pub h: f64,
}

/// Exponent pairs of the scalar P2 basis, in basis order.
pub const P2_EXPONENTS: [(u32, u32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

impl ScaledMonomialBasis {
    pub fn for_polygon(poly: &Polygon) -> Self {
        Self {
            center: poly.centroid(),
            h: poly.diameter(),
        }
    }

    /// Scaled local coordinates of `p`.
    pub fn local(&self, p: Vec2) -> Vec2 {
        (p - self.center) / self.h
    }

    /// `m_ab(p)`.
    pub fn eval(&self, a: u32, b: u32, p: Vec2) -> f64 {
        let q = self.local(p);
        q.x.powi(a as i32) * q.y.powi(b as i32)
    }

    /// Gradient of `m_ab` at `p`.
    pub fn grad(&self, a: u32, b: u32, p: Vec2) -> Vec2 {
        let q = self.local(p);
        let dx = if a == 0 {
            0.0
        } else {
            a as f64 * q.x.powi(a as i32 - 1) * q.y.powi(b as i32) / self.h
        };
        let dy = if b == 0 {
            0.0
        } else {
            b as f64 * q.x.powi(a as i32) * q.y.powi(b as i32 - 1) / self.h
        };
        Vec2::new(dx, dy)
    }

    /// Value of the vector basis member `phi_j` at `p`, `j < 6`.
    pub fn eval_vector(&self, j: usize, p: Vec2) -> Vec2 {
        let q = self.local(p);
        match j {
            0 => Vec2::new(1.0, 0.0),
            1 => Vec2::new(0.0, 1.0),
            2 => Vec2::new(q.x, 0.0),
            3 => Vec2::new(q.y, 0.0),
            4 => Vec2::new(0.0, q.x),
            5 => Vec2::new(0.0, q.y),
            _ => panic!("vector basis index out of range"),
        }
    }

    /// Jacobian of `phi_j`, constant in space; entry `[i][k] = d phi_i / d x_k`.
    pub fn vector_grad(&self, j: usize) -> [[f64; 2]; 2] {
        let s = 1.0 / self.h;
        match j {
            0 | 1 => [[0.0; 2]; 2],
            2 => [[s, 0.0], [0.0, 0.0]],
            3 => [[0.0, s], [0.0, 0.0]],
            4 => [[0.0, 0.0], [s, 0.0]],
            5 => [[0.0, 0.0], [0.0, s]],
            _ => panic!("vector basis index out of range"),
        }
    }
}

/// Nodes and weights of a quadrature rule; weights carry the measure of the
/// integration domain (cell area or edge length).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, mut f: impl FnMut(Vec2) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

// Degree-4 rule on the reference triangle (6 points, weights sum to 1).
const TRI_DEG4: [(f64, f64, f64); 6] = [
    (0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.108103018168070, 0.223381589678011),
    (0.445948490915965, 0.445948490915965, 0.223381589678011),
    (0.816847572980459, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.816847572980459, 0.109951743655322),
    (0.091576213509771, 0.091576213509771, 0.109951743655322),
];

/// Cell rule exact for total degree <= 4, built by fanning the polygon from
/// its centroid. The fan triangles carry signed weights, so the rule is exact
/// for polynomials on nonconvex cells as well.
pub fn cell_rule(poly: &Polygon) -> QuadratureRule {
    let c = poly.centroid();
    let n = poly.num_vertices();
    let mut nodes = Vec::with_capacity(6 * n);
    let mut weights = Vec::with_capacity(6 * n);
    for i in 0..n {
        let (a, b) = poly.edge(i);
        let signed_area = 0.5 * (a - c).cross(b - c);
        for &(l1, l2, w) in &TRI_DEG4 {
            let l0 = 1.0 - l1 - l2;
            nodes.push(c * l0 + a * l1 + b * l2);
            weights.push(w * signed_area);
        }
    }
    QuadratureRule { nodes, weights }
}

// Gauss-Legendre 3 points on [-1, 1].
const GAUSS3: [(f64, f64); 3] = [
    (-0.774596669241483_374, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774596669241483_374, 5.0 / 9.0),
];

/// 3-point Gauss rule on the segment `a -> b`, exact for degree <= 5.
pub fn edge_rule(a: Vec2, b: Vec2) -> Result<QuadratureRule> {
    let len = a.dist(b);
    if len == 0.0 {
        return Err(Error::ZeroLengthEdge);
    }
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let nodes = GAUSS3.iter().map(|&(t, _)| mid + half * t).collect();
    let weights = GAUSS3.iter().map(|&(_, w)| w * 0.5 * len).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Moments of the scaled monomials over a polygon, `int_K m_ab` for
/// `a + b <= max_degree` (at most 4 so the cell rule stays exact).
#[derive(Debug, Clone)]
pub struct MomentTable {
    max_degree: u32,
    vals: Vec<f64>,
}

impl MomentTable {
    pub fn get(&self, a: u32, b: u32) -> f64 {
        debug_assert!(a + b <= self.max_degree);
        self.vals[pair_index(a, b)]
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }
}

/// Index of `(a, b)` in graded ordering: (0,0), (1,0), (0,1), (2,0), ...
fn pair_index(a: u32, b: u32) -> usize {
    let d = a + b;
    (d * (d + 1) / 2 + b) as usize
}

pub fn monomial_moments(
    poly: &Polygon,
    basis: &ScaledMonomialBasis,
    max_degree: u32,
) -> Result<MomentTable> {
    if max_degree > 4 {
        return Err(Error::InvalidInput(format!(
            "moment degree {max_degree} exceeds cell rule exactness (4)"
        )));
    }
    let rule = cell_rule(poly);
    let count = pair_index(0, max_degree) + 1;
    let mut vals = vec![0.0; count];
    for d in 0..=max_degree {
        for b in 0..=d {
            let a = d - b;
            vals[pair_index(a, b)] = rule.integrate(|p| basis.eval(a, b, p));
        }
    }
    Ok(MomentTable {
        max_degree,
        vals,
    })
}
