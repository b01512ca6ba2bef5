//! Per-element virtual element machinery at lowest order: DOF layout,
//! boundary trace reconstruction, the H1 and L2 projectors onto vector P1,
//! and the local stiffness / mass / divergence blocks with stabilization.
//!
//! A cell with `n` vertices carries `3n` velocity DOFs: vector vertex values
//! first (`v0x, v0y, v1x, v1y, ...`), then one normal-mean DOF per edge,
//! `(1/|l|) int_l v . n` taken with respect to the global edge normal. The
//! per-edge sign `sigma` maps the global normal to the outward one.

use crate::error::{Error, Result};
use crate::geometry::{
    edge_rule, monomial_moments, MomentTable, Polygon, ScaledMonomialBasis, Vec2,
};
use crate::mesh::PolyMesh;
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, RowDVector, Vector6};

/// DOF bookkeeping of one cell.
#[derive(Debug, Clone)]
pub struct LocalDofLayout {
    /// number of vertices (= number of edges)
    pub n: usize,
    /// sign mapping the global edge normal to the outward normal of the cell
    pub sigma: Vec<f64>,
}

impl LocalDofLayout {
    pub fn num_dofs(&self) -> usize {
        3 * self.n
    }

    pub fn vertex_dof(&self, k: usize, comp: usize) -> usize {
        2 * k + comp
    }

    pub fn edge_dof(&self, i: usize) -> usize {
        2 * self.n + i
    }
}

/// Geometry bundle consumed by every local builder.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub poly: Polygon,
    pub basis: ScaledMonomialBasis,
    pub moments: MomentTable,
    pub layout: LocalDofLayout,
}

impl ElementGeometry {
    /// Standalone cell: every edge normal is already outward.
    pub fn standalone(poly: Polygon) -> Result<Self> {
        let n = poly.num_vertices();
        Self::with_sigma(poly, vec![1.0; n])
    }

    pub fn with_sigma(poly: Polygon, sigma: Vec<f64>) -> Result<Self> {
        assert_eq!(sigma.len(), poly.num_vertices());
        let basis = ScaledMonomialBasis::for_polygon(&poly);
        let moments = monomial_moments(&poly, &basis, 4)?;
        let n = poly.num_vertices();
        Ok(Self {
            poly,
            basis,
            moments,
            layout: LocalDofLayout { n, sigma },
        })
    }

    pub fn from_mesh(mesh: &PolyMesh, cell: usize) -> Result<Self> {
        let poly = mesh.cell_polygon(cell)?;
        let sigma = mesh
            .cell_edges(cell)
            .iter()
            .map(|&e| mesh.sigma(cell, e))
            .collect();
        Self::with_sigma(poly, sigma)
    }
}

/// Reconstructed trace of a discrete field on one edge: the normal component
/// is the quadratic with the stated endpoint values and mean, the tangential
/// component the linear interpolant of the endpoint values.
#[derive(Debug, Clone, Copy)]
pub struct EdgeTrace {
    /// normal values at parameters 0, 1/2, 1 (outward normal)
    pub normal: [f64; 3],
    /// tangential values at parameters 0, 1
    pub tangential: [f64; 2],
    pub outward: Vec2,
    pub tangent: Vec2,
}

impl EdgeTrace {
    pub fn normal_at(&self, s: f64) -> f64 {
        let [fa, fm, fb] = self.normal;
        fa * (2.0 * s - 1.0) * (s - 1.0) + fm * 4.0 * s * (1.0 - s) + fb * s * (2.0 * s - 1.0)
    }

    pub fn tangential_at(&self, s: f64) -> f64 {
        self.tangential[0] * (1.0 - s) + self.tangential[1] * s
    }

    pub fn eval(&self, s: f64) -> Vec2 {
        self.outward * self.normal_at(s) + self.tangent * self.tangential_at(s)
    }
}

/// Trace of the field `dofs` on edge `i` of the cell.
///
/// The midpoint value of the normal component follows from Simpson exactness
/// on quadratics: `f_m = (6 mu - f_a - f_b) / 4` with `mu` the outward mean.
pub fn edge_trace(geo: &ElementGeometry, dofs: &[f64], i: usize) -> EdgeTrace {
    let n = geo.layout.n;
    let (a, b) = geo.poly.edge(i);
    let t = (b - a) / a.dist(b);
    let outward = Vec2::new(t.y, -t.x);
    let va = Vec2::new(dofs[2 * i], dofs[2 * i + 1]);
    let k = (i + 1) % n;
    let vb = Vec2::new(dofs[2 * k], dofs[2 * k + 1]);
    let fa = va.dot(outward);
    let fb = vb.dot(outward);
    let mu_out = geo.layout.sigma[i] * dofs[geo.layout.edge_dof(i)];
    let fm = (6.0 * mu_out - fa - fb) / 4.0;
    EdgeTrace {
        normal: [fa, fm, fb],
        tangential: [va.dot(t), vb.dot(t)],
        outward,
        tangent: t,
    }
}

/// Traces on edge `i` of the five DOF basis vectors supported there
/// (vector values at both endpoints plus the edge mean).
fn unit_traces(geo: &ElementGeometry, i: usize) -> [(usize, EdgeTrace); 5] {
    let n = geo.layout.n;
    let (a, b) = geo.poly.edge(i);
    let t = (b - a) / a.dist(b);
    let outward = Vec2::new(t.y, -t.x);
    let k2 = (i + 1) % n;
    let make = |va: Vec2, vb: Vec2, mu: f64| {
        let fa = va.dot(outward);
        let fb = vb.dot(outward);
        let mu_out = geo.layout.sigma[i] * mu;
        EdgeTrace {
            normal: [fa, (6.0 * mu_out - fa - fb) / 4.0, fb],
            tangential: [va.dot(t), vb.dot(t)],
            outward,
            tangent: t,
        }
    };
    let ex = Vec2::new(1.0, 0.0);
    let ey = Vec2::new(0.0, 1.0);
    let zero = Vec2::default();
    [
        (2 * i, make(ex, zero, 0.0)),
        (2 * i + 1, make(ey, zero, 0.0)),
        (2 * k2, make(zero, ex, 0.0)),
        (2 * k2 + 1, make(zero, ey, 0.0)),
        (geo.layout.edge_dof(i), make(zero, zero, 1.0)),
    ]
}

/// Matrices of one element, all expressed in scaled-monomial coordinates.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    /// DOFs of the vector P1 basis, `3n x 6`
    pub d: DMatrix<f64>,
    /// H1 projector coefficients, `6 x 3n`
    pub pi: DMatrix<f64>,
    /// L2 projector coefficients, `6 x 3n`
    pub pi0: DMatrix<f64>,
    /// stiffness `a_h^K`, `3n x 3n`
    pub stiffness: DMatrix<f64>,
    /// mass `c_h^K`, `3n x 3n`
    pub mass: DMatrix<f64>,
    /// divergence row: `b^K(v, 1) = -sum sigma |l| mu`
    pub div_row: RowDVector<f64>,
    /// vector P1 mass matrix over the cell
    pub mass_p1: Matrix6<f64>,
    /// stabilization scale `alpha * nu` of the dofi-dofi term
    pub stab_coeff: f64,
    pub area: f64,
    pub diameter: f64,
}

impl LocalOperators {
    /// Gradient of the H1 projection of `dofs`: entry `[i][j] = d u_i / d x_j`.
    pub fn projected_gradient(&self, dofs: &[f64]) -> [[f64; 2]; 2] {
        let s = self.pi_apply(dofs);
        let h = self.diameter;
        [[s[2] / h, s[3] / h], [s[4] / h, s[5] / h]]
    }

    pub fn pi_apply(&self, dofs: &[f64]) -> Vector6<f64> {
        let v = DVector::from_column_slice(dofs);
        Vector6::from_iterator((&self.pi * v).iter().copied())
    }

    pub fn pi0_apply(&self, dofs: &[f64]) -> Vector6<f64> {
        let v = DVector::from_column_slice(dofs);
        Vector6::from_iterator((&self.pi0 * v).iter().copied())
    }

    /// Stabilization energy of the projection remainder,
    /// `alpha nu |(I - D Pi) u|^2` in DOF coordinates.
    pub fn stab_energy(&self, dofs: &[f64]) -> f64 {
        let u = DVector::from_column_slice(dofs);
        let r = &u - &self.d * (&self.pi * &u);
        self.stab_coeff * r.dot(&r)
    }
}

/// Integrals of each vector basis member over the cell boundary, and the
/// boundary integral `int_dK phi_j . n` pattern needed by the projector
/// right-hand sides. All edge integrands are polynomials of degree <= 4.
struct BoundaryTable {
    /// `int_dK (phi_j)_x`, `int_dK (phi_j)_y`
    mean: [[f64; 6]; 2],
    perimeter: f64,
}

fn boundary_table(geo: &ElementGeometry) -> Result<BoundaryTable> {
    let mut mean = [[0.0; 6]; 2];
    let mut perimeter = 0.0;
    for i in 0..geo.layout.n {
        let (a, b) = geo.poly.edge(i);
        let rule = edge_rule(a, b)?;
        perimeter += a.dist(b);
        for j in 0..6 {
            mean[0][j] += rule.integrate(|p| geo.basis.eval_vector(j, p).x);
            mean[1][j] += rule.integrate(|p| geo.basis.eval_vector(j, p).y);
        }
    }
    Ok(BoundaryTable { mean, perimeter })
}

/// DOFs of the vector P1 basis: the `3n x 6` matrix `D`.
pub fn dof_matrix(geo: &ElementGeometry) -> Result<DMatrix<f64>> {
    let n = geo.layout.n;
    let mut d = DMatrix::zeros(3 * n, 6);
    for k in 0..n {
        let p = geo.poly.vertices()[k];
        for j in 0..6 {
            let v = geo.basis.eval_vector(j, p);
            d[(2 * k, j)] = v.x;
            d[(2 * k + 1, j)] = v.y;
        }
    }
    for i in 0..n {
        let (a, b) = geo.poly.edge(i);
        let rule = edge_rule(a, b)?;
        let len = a.dist(b);
        let n_global = geo.poly.outward_normal(i) * geo.layout.sigma[i];
        for j in 0..6 {
            d[(geo.layout.edge_dof(i), j)] =
                rule.integrate(|p| geo.basis.eval_vector(j, p).dot(n_global)) / len;
        }
    }
    Ok(d)
}

/// DOF vector of a vector P1 polynomial given by its basis coefficients.
pub fn dofs_of_polynomial(geo: &ElementGeometry, coeffs: &Vector6<f64>) -> Result<DVector<f64>> {
    let d = dof_matrix(geo)?;
    Ok(&d * coeffs)
}

/// Constant-fixing condition of the H1 projector: the translation part is
/// pinned either by the boundary mean of the trace or by the plain average
/// of the vertex values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectorFix {
    BoundaryMean,
    #[default]
    VertexAverage,
}

/// Builds the H1 projector `Pi`: for every DOF basis vector the vector P1
/// coefficients solving the 6x6 system of four gradient-matching equations
/// (reduced to the boundary by integration by parts) plus two equations
/// pinning the constant part.
pub fn build_h1_projector(geo: &ElementGeometry, nu: f64) -> Result<DMatrix<f64>> {
    build_h1_projector_fixed(geo, nu, ProjectorFix::default())
}

pub fn build_h1_projector_fixed(
    geo: &ElementGeometry,
    nu: f64,
    fix: ProjectorFix,
) -> Result<DMatrix<f64>> {
    let n = geo.layout.n;
    let bt = boundary_table(geo)?;
    let area = geo.poly.area();
    let h = geo.basis.h;

    let mut lhs = Matrix6::zeros();
    match fix {
        ProjectorFix::BoundaryMean => {
            for j in 0..6 {
                lhs[(0, j)] = bt.mean[0][j] / bt.perimeter;
                lhs[(1, j)] = bt.mean[1][j] / bt.perimeter;
            }
        }
        ProjectorFix::VertexAverage => {
            for j in 0..6 {
                for k in 0..n {
                    let v = geo.basis.eval_vector(j, geo.poly.vertices()[k]);
                    lhs[(0, j)] += v.x / n as f64;
                    lhs[(1, j)] += v.y / n as f64;
                }
            }
        }
    }
    for i in 2..6 {
        for j in 2..6 {
            let gi = geo.basis.vector_grad(i);
            let gj = geo.basis.vector_grad(j);
            let mut frob = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    frob += gi[r][c] * gj[r][c];
                }
            }
            lhs[(i, j)] = nu * area * frob;
        }
    }

    // right-hand sides: constant-part condition plus boundary flux moments;
    // only the five DOFs touching an edge produce a trace there
    let mut rhs = DMatrix::zeros(6, 3 * n);
    for i in 0..n {
        let (a, b) = geo.poly.edge(i);
        let rule = edge_rule(a, b)?;
        let inv2 = 1.0 / a.dist(b).powi(2);
        for (dof, tr) in unit_traces(geo, i) {
            // int_dK v_c n_d in row order (x,x), (x,y), (y,x), (y,y)
            let mut mean = Vec2::default();
            let mut flux = [0.0; 4];
            for (&node, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (node - a).dot(b - a) * inv2;
                let v = tr.eval(s);
                mean = mean + v * w;
                flux[0] += v.x * tr.outward.x * w;
                flux[1] += v.x * tr.outward.y * w;
                flux[2] += v.y * tr.outward.x * w;
                flux[3] += v.y * tr.outward.y * w;
            }
            if fix == ProjectorFix::BoundaryMean {
                rhs[(0, dof)] += mean.x / bt.perimeter;
                rhs[(1, dof)] += mean.y / bt.perimeter;
            }
            for (row, f) in flux.iter().enumerate() {
                rhs[(2 + row, dof)] += nu * f / h;
            }
        }
    }
    if fix == ProjectorFix::VertexAverage {
        for k in 0..n {
            rhs[(0, 2 * k)] = 1.0 / n as f64;
            rhs[(1, 2 * k + 1)] = 1.0 / n as f64;
        }
    }

    let lu = lhs.lu();
    let mut pi = DMatrix::zeros(6, 3 * n);
    for dof in 0..3 * n {
        let col = lu
            .solve(&Vector6::from_iterator(rhs.column(dof).iter().copied()))
            .ok_or_else(|| Error::DegenerateElement("singular H1 projector system".into()))?;
        pi.set_column(dof, &DVector::from_iterator(6, col.iter().copied()));
    }
    Ok(pi)
}

/// Change of basis from the mixed spanning set (five scaled-monomial
/// gradients plus one rotated gradient) to the vector basis `phi`.
pub(crate) fn mixed_to_phi(h: f64) -> Matrix6<f64> {
    let s = 1.0 / h;
    let mut c = Matrix6::zeros();
    c[(0, 0)] = s; // grad m10
    c[(1, 1)] = s; // grad m01
    c[(2, 2)] = 2.0 * s; // grad m20
    c[(3, 3)] = s; // grad m11 = (m01, m10) / h
    c[(3, 4)] = s;
    c[(4, 5)] = 2.0 * s; // grad m02
    c[(5, 3)] = -s; // perp grad of (m20 + m02)/2 = (-m01, m10) / h
    c[(5, 4)] = s;
    c
}

/// Vector P1 mass matrix `int_K phi_i . phi_j` from the moment table.
pub fn p1_mass_matrix(geo: &ElementGeometry) -> Matrix6<f64> {
    let m = &geo.moments;
    let scalar = Matrix3::new(
        m.get(0, 0),
        m.get(1, 0),
        m.get(0, 1),
        m.get(1, 0),
        m.get(2, 0),
        m.get(1, 1),
        m.get(0, 1),
        m.get(1, 1),
        m.get(0, 2),
    );
    // component blocks: x from (phi0, phi2, phi3), y from (phi1, phi4, phi5)
    let xs = [0usize, 2, 3];
    let ys = [1usize, 4, 5];
    let mut out = Matrix6::zeros();
    for a in 0..3 {
        for b in 0..3 {
            out[(xs[a], xs[b])] = scalar[(a, b)];
            out[(ys[a], ys[b])] = scalar[(a, b)];
        }
    }
    out
}

/// Builds the L2 projector `Pi0` from the divergence/boundary identity for
/// the gradient part of the test polynomial and the enhancement identity
/// (through `Pi`) for the rotational remainder.
pub fn build_l2_projector(
    geo: &ElementGeometry,
    pi: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = geo.layout.n;
    let area = geo.poly.area();
    let h = geo.basis.h;
    let m = &geo.moments;

    // int_K p2 for the five non-constant scalar monomials
    let p2_exp: [(u32, u32); 5] = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    let p2_cell: Vec<f64> = p2_exp.iter().map(|&(a, b)| m.get(a, b)).collect();

    // int_K phi_j . g_rot with g_rot = (-m01, m10)/h
    let w_rot = [
        -m.get(0, 1) / h,
        m.get(1, 0) / h,
        -m.get(1, 1) / h,
        -m.get(0, 2) / h,
        m.get(2, 0) / h,
        m.get(1, 1) / h,
    ];

    let mut t = DMatrix::zeros(6, 3 * n);
    // boundary moments of the normal trace, edge by edge
    for i in 0..n {
        let (a, b) = geo.poly.edge(i);
        let rule = edge_rule(a, b)?;
        let inv2 = 1.0 / a.dist(b).powi(2);
        for (dof, tr) in unit_traces(geo, i) {
            for (k, &(ea, eb)) in p2_exp.iter().enumerate() {
                t[(k, dof)] += rule.integrate(|p| {
                    let s = (p - a).dot(b - a) * inv2;
                    tr.normal_at(s) * geo.basis.eval(ea, eb, p)
                });
            }
        }
    }
    // constant-divergence correction (edge-mean DOFs only) and the
    // enhancement identity for the rotational direction
    for dof in 0..3 * n {
        if dof >= 2 * n {
            let i = dof - 2 * n;
            let (a, b) = geo.poly.edge(i);
            let div = geo.layout.sigma[i] * a.dist(b) / area;
            for (k, cell_moment) in p2_cell.iter().enumerate() {
                t[(k, dof)] -= div * cell_moment;
            }
        }
        let mut rot = 0.0;
        for j in 0..6 {
            rot += pi[(j, dof)] * w_rot[j];
        }
        t[(5, dof)] = rot;
    }

    let c = mixed_to_phi(h);
    let c_lu = c.lu();
    let mass = p1_mass_matrix(geo);
    let mass_chol = mass
        .cholesky()
        .ok_or_else(|| Error::DegenerateElement("vector P1 mass matrix not SPD".into()))?;

    let mut pi0 = DMatrix::zeros(6, 3 * n);
    for dof in 0..3 * n {
        let tv = Vector6::from_iterator(t.column(dof).iter().copied());
        let b = c_lu
            .solve(&tv)
            .ok_or_else(|| Error::DegenerateElement("singular mixed basis".into()))?;
        let s = mass_chol.solve(&b);
        pi0.set_column(dof, &DVector::from_iterator(6, s.iter().copied()));
    }
    Ok(pi0)
}

/// Stabilizer recipe: a dofi-dofi form with separate vertex / edge-mean
/// weights, optionally blended with the boundary L2 trace Gram, plus the
/// analogous `|K|`-scaled dofi-dofi term on the mass side. The defaults are
/// calibrated against the published clamped-square eigenvalue table.
#[derive(Debug, Clone, Copy)]
pub struct StabilizerParams {
    /// dofi-dofi weights for the (vertex, edge-mean) blocks of the
    /// stiffness stabilizer
    pub dof_weights: (f64, f64),
    /// weights of the boundary-trace L2 Grams (normal, tangential  parts)
    pub trace_weights: (f64, f64),
    /// weight of the boundary-trace tangential-derivative Gram
    pub edge_h1_weight: f64,
    /// dofi-dofi weights of an additional stiffness term built on the
    /// L2-projector remainder
    pub l2_remainder_weights: (f64, f64),
    /// stabilize the mass form as well
    pub mass_stabilized: bool,
    /// dofi-dofi weights of the mass stabilizer
    pub mass_weights: (f64, f64),
    /// constant-fixing condition of the H1 projector
    pub projector_fix: ProjectorFix,
}

impl Default for StabilizerParams {
    fn default() -> Self {
        Self {
            dof_weights: (1.553, 7.111),
            trace_weights: (0.0, 0.0),
            edge_h1_weight: 0.0,
            l2_remainder_weights: (0.0, 0.0),
            mass_stabilized: true,
            mass_weights: (0.379, 0.379),
            projector_fix: ProjectorFix::VertexAverage,
        }
    }
}

impl StabilizerParams {
    /// Plain identity dofi-dofi without mass stabilization.
    pub fn plain() -> Self {
        Self {
            dof_weights: (1.0, 1.0),
            trace_weights: (0.0, 0.0),
            edge_h1_weight: 0.0,
            l2_remainder_weights: (0.0, 0.0),
            mass_stabilized: false,
            mass_weights: (0.0, 0.0),
            projector_fix: ProjectorFix::VertexAverage,
        }
    }
}

/// Assembles the local operator set with the default stabilizer recipe;
/// `mass_stabilized` toggles the mass-side term.
pub fn local_matrices(
    geo: &ElementGeometry,
    nu: f64,
    alpha: f64,
    mass_stabilized: bool,
) -> Result<LocalOperators> {
    let params = StabilizerParams {
        mass_stabilized,
        ..StabilizerParams::default()
    };
    local_matrices_with(geo, nu, alpha, &params)
}

/// Assembles the full local operator set.
///
/// The stiffness is the projected P1 energy plus `alpha * nu` times the
/// stabilizer; the mass is the projected P1 mass plus, when enabled, the
/// `|K|`-scaled dofi-dofi term (not scaled by `alpha`).
pub fn local_matrices_with(
    geo: &ElementGeometry,
    nu: f64,
    alpha: f64,
    params: &StabilizerParams,
) -> Result<LocalOperators> {
    let n = geo.layout.n;
    let area = geo.poly.area();
    let d = dof_matrix(geo)?;
    let pi = build_h1_projector_fixed(geo, nu, params.projector_fix)?;
    let pi0 = build_l2_projector(geo, &pi)?;

    let mut g = Matrix6::zeros();
    for i in 0..6 {
        for j in 0..6 {
            let gi = geo.basis.vector_grad(i);
            let gj = geo.basis.vector_grad(j);
            let mut frob = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    frob += gi[r][c] * gj[r][c];
                }
            }
            g[(i, j)] = nu * area * frob;
        }
    }

    let stab_coeff = alpha * nu;
    let identity = DMatrix::identity(3 * n, 3 * n);
    let remainder = &identity - &d * &pi;
    let mut weighted = remainder.clone();
    for i in 0..3 * n {
        let w = if i < 2 * n {
            params.dof_weights.0
        } else {
            params.dof_weights.1
        };
        for j in 0..3 * n {
            weighted[(i, j)] *= w;
        }
    }
    let mut stab_part = remainder.transpose() * &weighted * stab_coeff;
    if params.trace_weights != (0.0, 0.0) || params.edge_h1_weight != 0.0 {
        let (e_n, e_t, g_h1) = boundary_trace_grams(geo);
        let mix = e_n * params.trace_weights.0
            + e_t * params.trace_weights.1
            + g_h1 * params.edge_h1_weight;
        stab_part += remainder.transpose() * mix * &remainder * stab_coeff;
    }
    let rem0 = &identity - &d * &pi0;
    if params.l2_remainder_weights != (0.0, 0.0) {
        let mut weighted = rem0.clone();
        for i in 0..3 * n {
            let w = if i < 2 * n {
                params.l2_remainder_weights.0
            } else {
                params.l2_remainder_weights.1
            };
            for j in 0..3 * n {
                weighted[(i, j)] *= w;
            }
        }
        stab_part += rem0.transpose() * &weighted * stab_coeff;
    }
    let mut stiffness = pi.transpose() * g * &pi + stab_part;
    symmetrize(&mut stiffness);

    let mass_p1 = p1_mass_matrix(geo);
    let mut mass = pi0.transpose() * mass_p1 * &pi0;
    if params.mass_stabilized {
        let mut weighted0 = rem0.clone();
        for i in 0..3 * n {
            let w = if i < 2 * n {
                params.mass_weights.0
            } else {
                params.mass_weights.1
            };
            for j in 0..3 * n {
                weighted0[(i, j)] *= w;
            }
        }
        mass += rem0.transpose() * &weighted0 * area;
    }
    symmetrize(&mut mass);

    let mut div_row = RowDVector::zeros(3 * n);
    for i in 0..n {
        let (a, b) = geo.poly.edge(i);
        div_row[geo.layout.edge_dof(i)] = -geo.layout.sigma[i] * a.dist(b);
    }

    Ok(LocalOperators {
        d,
        pi,
        pi0,
        stiffness,
        mass,
        div_row,
        mass_p1,
        stab_coeff,
        area,
        diameter: geo.poly.diameter(),
    })
}

/// Scale-free boundary trace Grams in the edge parameter: the L2 Grams of
/// the normal and tangential trace components and the tangential-derivative
/// (edge H1) Gram. All are exact through Gauss-3.
fn boundary_trace_grams(geo: &ElementGeometry) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = geo.layout.n;
    let mut e_n = DMatrix::zeros(3 * n, 3 * n);
    let mut e_t = DMatrix::zeros(3 * n, 3 * n);
    let mut g_h1 = DMatrix::zeros(3 * n, 3 * n);
    // Gauss-3 on [0, 1]
    let gl = [
        (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
    ];
    for i in 0..n {
        let traces = unit_traces(geo, i);
        for (da, ta) in &traces {
            for (db, tb) in &traces {
                let mut acc_n = 0.0;
                let mut acc_t = 0.0;
                let mut acc_g = 0.0;
                for &(s, w) in &gl {
                    acc_n += w * ta.normal_at(s) * tb.normal_at(s);
                    acc_t += w * ta.tangential_at(s) * tb.tangential_at(s);
                    acc_g += w * (normal_slope(ta, s) * normal_slope(tb, s)
                        + tangential_slope(ta) * tangential_slope(tb));
                }
                e_n[(*da, *db)] += acc_n;
                e_t[(*da, *db)] += acc_t;
                g_h1[(*da, *db)] += acc_g;
            }
        }
    }
    (e_n, e_t, g_h1)
}

/// d/ds of the quadratic normal trace in edge parameter.
fn normal_slope(tr: &EdgeTrace, s: f64) -> f64 {
    let [fa, fm, fb] = tr.normal;
    fa * (4.0 * s - 3.0) + fm * (4.0 - 8.0 * s) + fb * (4.0 * s - 1.0)
}

fn tangential_slope(tr: &EdgeTrace) -> f64 {
    tr.tangential[1] - tr.tangential[0]
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let (r, c) = m.shape();
    debug_assert_eq!(r, c);
    for i in 0..r {
        for j in (i + 1)..c {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Interpolates a smooth field into the local DOFs (vertex values and exact
/// edge normal means by quadrature).
pub fn interpolate_field(
    geo: &ElementGeometry,
    f: impl Fn(Vec2) -> Vec2,
) -> Result<DVector<f64>> {
    let n = geo.layout.n;
    let mut dofs = DVector::zeros(3 * n);
    for k in 0..n {
        let p = geo.poly.vertices()[k];
        let v = f(p);
        dofs[2 * k] = v.x;
        dofs[2 * k + 1] = v.y;
    }
    for i in 0..n {
        let (a, b) = geo.poly.edge(i);
        let rule = edge_rule(a, b)?;
        let len = a.dist(b);
        let n_global = geo.poly.outward_normal(i) * geo.layout.sigma[i];
        dofs[geo.layout.edge_dof(i)] = rule.integrate(|p| f(p).dot(n_global)) / len;
    }
    Ok(dofs)
}

/// `int_K |Pi0 u|^2` from the projector coefficients and the P1 mass matrix.
pub fn pi0_norm_sq(ops: &LocalOperators, dofs: &[f64]) -> f64 {
    let s = ops.pi0_apply(dofs);
    (ops.mass_p1 * s).dot(&s)
}

// small helpers shared by tests
#[cfg(test)]
pub(crate) fn unit_square_geo() -> ElementGeometry {
    let poly = Polygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .unwrap();
    ElementGeometry::standalone(poly).unwrap()
}
