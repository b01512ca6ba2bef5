//! Global DOF numbering, boundary conditions, saddle-point assembly and the
//! generalized eigensolve.
//!
//! The assembled pencil is `A U = lambda B U` with the symmetric block layout
//! `A = [[A_h, B^T, 0], [B, 0, m], [0, m^T, 0]]` (velocity stiffness,
//! divergence rows and, on fully clamped boundaries, the zero-mean pressure
//! multiplier with `m_K = |K|`) and `B = [[C_h, 0, 0], 0, 0]` the velocity
//! mass block. Dirichlet velocity DOFs are eliminated by row/column deletion.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::{
    lanczos_largest, nested_dissection, CsrMatrix, LanczosOptions, LdltFactor, LdltOptions,
};
use crate::local::{local_matrices_with, ElementGeometry, LocalOperators, StabilizerParams};
use crate::mesh::{PolyMesh, NO_CELL};
use rayon::prelude::*;

/// Boundary condition of the eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// `u = 0` on the whole boundary; pressure fixed by a zero-mean multiplier
    Clamped,
    /// `u = 0` on the bottom side of the unit square, natural condition on
    /// the rest
    MixedBottomClamped,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub nu: f64,
    /// user factor multiplying the stiffness stabilizer
    pub alpha: f64,
    pub bc: Bc,
    pub stab: StabilizerParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            alpha: 1.0,
            bc: Bc::Clamped,
            stab: StabilizerParams::default(),
        }
    }
}

impl SolverConfig {
    pub fn mass_stabilized(&self) -> bool {
        self.stab.mass_stabilized
    }
}

/// Global numbering: velocity DOFs in "full" numbering (two per vertex, one
/// per edge), then the free subset actually assembled, then cell pressures
/// and the optional multiplier.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_cells: usize,
    free_of_full: Vec<i64>,
    pub num_free_velocity: usize,
    pub multiplier: Option<usize>,
    pub total: usize,
    pub dirichlet_edges: Vec<bool>,
}

impl DofMap {
    pub fn full_vertex_dof(&self, v: usize, comp: usize) -> usize {
        2 * v + comp
    }

    pub fn full_edge_dof(&self, e: usize) -> usize {
        2 * self.num_vertices + e
    }

    pub fn num_full_velocity(&self) -> usize {
        2 * self.num_vertices + self.num_edges
    }

    /// Free index of a full velocity DOF, `None` when constrained.
    pub fn free(&self, full: usize) -> Option<usize> {
        let f = self.free_of_full[full];
        (f >= 0).then_some(f as usize)
    }

    pub fn pressure(&self, cell: usize) -> usize {
        self.num_free_velocity + cell
    }
}

/// Assembled generalized eigenproblem plus the per-cell operators that the
/// error estimator consumes afterwards.
pub struct SaddleSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub dofs: DofMap,
    pub locals: Vec<LocalOperators>,
    pub config: SolverConfig,
    dof_coords: Vec<Vec2>,
}

/// One computed eigenpair. The velocity vector is in full DOF numbering with
/// constrained entries at zero; the pressure is per cell.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// `|A u - lambda B u| / |A u|` on the free unknowns
    pub residual: f64,
    /// `max_K |b^K(u, 1)|` relative to the velocity DOF norm
    pub divergence_residual: f64,
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub pairs: Vec<EigenPair>,
}

impl EigenSolution {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

/// Effective Dirichlet flags per edge under the configured bc.
fn dirichlet_edges(mesh: &PolyMesh, bc: Bc) -> Result<Vec<bool>> {
    let mut flags = vec![false; mesh.num_edges()];
    match bc {
        Bc::Clamped => {
            for (i, e) in mesh.edges().iter().enumerate() {
                flags[i] = e.cells[1] == NO_CELL;
            }
        }
        Bc::MixedBottomClamped => {
            let (lo, hi) = mesh.bounding_box();
            let unit = lo.norm() < 1e-9 && (hi - Vec2::new(1.0, 1.0)).norm() < 1e-9;
            if !unit {
                return Err(Error::BcMismatch(
                    "mixed boundary conditions require the unit square".into(),
                ));
            }
            for (i, e) in mesh.edges().iter().enumerate() {
                if e.cells[1] == NO_CELL && e.midpoint.y.abs() < 1e-9 {
                    flags[i] = true;
                }
            }
            if !flags.iter().any(|&f| f) {
                return Err(Error::BcMismatch("no bottom edges found".into()));
            }
        }
    }
    Ok(flags)
}

pub fn assemble(mesh: &PolyMesh, config: &SolverConfig) -> Result<SaddleSystem> {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let nc = mesh.num_cells();

    let dir_edges = dirichlet_edges(mesh, config.bc)?;
    let mut dir_vertex = vec![false; nv];
    for (i, e) in mesh.edges().iter().enumerate() {
        if dir_edges[i] {
            dir_vertex[e.verts[0] as usize] = true;
            dir_vertex[e.verts[1] as usize] = true;
        }
    }
    let has_neumann = mesh
        .edges()
        .iter()
        .enumerate()
        .any(|(i, e)| e.cells[1] == NO_CELL && !dir_edges[i]);

    // free velocity numbering
    let nfull = 2 * nv + ne;
    let mut free_of_full = vec![-1i64; nfull];
    let mut next = 0usize;
    for v in 0..nv {
        if !dir_vertex[v] {
            free_of_full[2 * v] = next as i64;
            free_of_full[2 * v + 1] = next as i64 + 1;
            next += 2;
        }
    }
    for e in 0..ne {
        if !dir_edges[e] {
            free_of_full[2 * nv + e] = next as i64;
            next += 1;
        }
    }
    let num_free_velocity = next;
    let multiplier = (!has_neumann).then_some(num_free_velocity + nc);
    let total = num_free_velocity + nc + usize::from(!has_neumann);

    let dofs = DofMap {
        num_vertices: nv,
        num_edges: ne,
        num_cells: nc,
        free_of_full,
        num_free_velocity,
        multiplier,
        total,
        dirichlet_edges: dir_edges,
    };

    // per-cell operators in parallel, deterministic order retained
    let locals: Vec<LocalOperators> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let geo = ElementGeometry::from_mesh(mesh, c)?;
            local_matrices_with(&geo, config.nu, config.alpha, &config.stab)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut a_trip: Vec<(u32, u32, f64)> = Vec::new();
    let mut b_trip: Vec<(u32, u32, f64)> = Vec::new();
    for c in 0..nc {
        let ops = &locals[c];
        let vs = mesh.cell_vertices(c);
        let es = mesh.cell_edges(c);
        let n = vs.len();
        // local -> free global map
        let mut gmap = vec![-1i64; 3 * n];
        for k in 0..n {
            let v = vs[k] as usize;
            gmap[2 * k] = dofs.free_of_full[2 * v];
            gmap[2 * k + 1] = dofs.free_of_full[2 * v + 1];
        }
        for i in 0..n {
            gmap[2 * n + i] = dofs.free_of_full[2 * nv + es[i] as usize];
        }
        // upper-triangle scatter: each unordered local pair emitted once so
        // the mirrored build is exactly symmetric
        for i in 0..3 * n {
            let gi = gmap[i];
            if gi < 0 {
                continue;
            }
            for j in i..3 * n {
                let gj = gmap[j];
                if gj < 0 {
                    continue;
                }
                let (lo, hi) = (gi.min(gj) as u32, gi.max(gj) as u32);
                let av = ops.stiffness[(i, j)];
                if av != 0.0 {
                    a_trip.push((lo, hi, av));
                }
                let bv = ops.mass[(i, j)];
                if bv != 0.0 {
                    b_trip.push((lo, hi, bv));
                }
            }
            let dv = ops.div_row[i];
            if dv != 0.0 {
                // pressure ids follow all velocity ids
                a_trip.push((gi as u32, dofs.pressure(c) as u32, dv));
            }
        }
        if let Some(m) = dofs.multiplier {
            a_trip.push((dofs.pressure(c) as u32, m as u32, ops.area));
        }
    }
    // diagonal pattern entries keep zero-pivot rows addressable
    for c in 0..nc {
        a_trip.push((dofs.pressure(c) as u32, dofs.pressure(c) as u32, 0.0));
    }
    if let Some(m) = dofs.multiplier {
        a_trip.push((m as u32, m as u32, 0.0));
    }

    let a = CsrMatrix::from_symmetric_triplets(total, a_trip);
    let b = CsrMatrix::from_symmetric_triplets(total, b_trip);

    // coordinates per free unknown, for the fill-reducing ordering
    let mut dof_coords = vec![Vec2::default(); total];
    for v in 0..nv {
        for comp in 0..2 {
            if let Some(f) = dofs.free(2 * v + comp) {
                dof_coords[f] = mesh.point(v as u32);
            }
        }
    }
    for e in 0..ne {
        if let Some(f) = dofs.free(2 * nv + e) {
            dof_coords[f] = mesh.edge(e as u32).midpoint;
        }
    }
    for c in 0..nc {
        dof_coords[dofs.pressure(c)] = mesh.cell_polygon(c)?.centroid();
    }
    if let Some(m) = dofs.multiplier {
        let (lo, hi) = mesh.bounding_box();
        dof_coords[m] = (lo + hi) * 0.5;
    }

    Ok(SaddleSystem {
        a,
        b,
        dofs,
        locals,
        config: config.clone(),
        dof_coords,
    })
}

impl SaddleSystem {
    /// Expected pivot signs: velocity and multiplier positive, pressure
    /// negative (the pressure Schur complement is negative definite).
    fn pivot_signs(&self) -> Vec<i8> {
        let mut signs = vec![1i8; self.dofs.total];
        for c in 0..self.dofs.num_cells {
            signs[self.dofs.pressure(c)] = -1;
        }
        signs
    }

    pub fn factor(&self, sigma: f64) -> Result<LdltFactor> {
        let k = if sigma == 0.0 {
            self.a.clone()
        } else {
            self.a.add_scaled(&self.b, -sigma)
        };
        let perm = nested_dissection(&k, &self.dof_coords);
        LdltFactor::new(k, perm, &self.pivot_signs(), LdltOptions::default())
    }

    /// `max_K |b^K(u, 1)|` read off the assembled divergence rows.
    fn divergence_residual(&self, free: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.dofs.num_cells {
            let (cols, vals) = self.a.row(self.dofs.pressure(c));
            let mut acc = 0.0;
            for (&col, &v) in cols.iter().zip(vals) {
                let col = col as usize;
                if col < self.dofs.num_free_velocity {
                    acc += v * free[col];
                }
            }
            worst = worst.max(acc.abs());
        }
        worst
    }
}

/// Computes the `k` smallest eigenvalues of the pencil nearest above the
/// shift `sigma` (default 0) by factoring `A - sigma B` once and running the
/// shift-invert Lanczos iteration; eigenvectors are normalized against the
/// discrete mass form and orthonormalized within numerically multiple groups.
pub fn solve_eigs(sys: &SaddleSystem, k: usize, sigma: f64) -> Result<EigenSolution> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let factor = sys.factor(sigma)?;
    let mut solve = |x: &[f64], y: &mut [f64]| {
        factor.solve_refined(x, y);
    };
    let opts = LanczosOptions::default();
    let pairs = lanczos_largest(&mut solve, &sys.b, k, &opts)?;

    let n = sys.dofs.total;
    let mut out = Vec::with_capacity(k);
    for rp in &pairs {
        let lambda = sigma + 1.0 / rp.theta;
        // purification step scrubs mass-kernel components
        let bu = sys.b.matvec_alloc(&rp.vector);
        let mut u = vec![0.0; n];
        factor.solve_refined(&bu, &mut u);
        for v in u.iter_mut() {
            *v /= rp.theta;
        }
        out.push((lambda, u));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // orthonormalize inside numerically multiple clusters in the mass inner
    // product (modified Gram-Schmidt)
    let mut start = 0;
    while start < out.len() {
        let mut end = start + 1;
        while end < out.len()
            && (out[end].0 - out[start].0).abs() <= 1e-8 * out[start].0.abs().max(1e-300)
        {
            end += 1;
        }
        for i in start..end {
            for j in start..i {
                let buj = sys.b.matvec_alloc(&out[j].1);
                let c = crate::linalg::dot(&out[i].1, &buj);
                let (head, tail) = out.split_at_mut(i);
                crate::linalg::axpy(-c, &head[j].1, &mut tail[0].1);
            }
            let bui = sys.b.matvec_alloc(&out[i].1);
            let nrm = crate::linalg::dot(&out[i].1, &bui).max(0.0).sqrt();
            if nrm > 0.0 {
                for v in out[i].1.iter_mut() {
                    *v /= nrm;
                }
            }
        }
        start = end;
    }

    let mut solution = Vec::with_capacity(out.len());
    for (lambda, mut free) in out {
        // mass normalization c_h(u, u) = 1
        let bu = sys.b.matvec_alloc(&free);
        let nrm = crate::linalg::dot(&free, &bu).max(0.0).sqrt();
        if nrm > 0.0 {
            for v in free.iter_mut() {
                *v /= nrm;
            }
        }
        // sign: largest-magnitude velocity DOF positive
        let vel_slice = &free[..sys.dofs.num_free_velocity];
        let mut big = 0.0f64;
        for &v in vel_slice {
            if v.abs() > big.abs() {
                big = v;
            }
        }
        if big < 0.0 {
            for v in free.iter_mut() {
                *v = -*v;
            }
        }

        // pencil residual
        let au = sys.a.matvec_alloc(&free);
        let bu = sys.b.matvec_alloc(&free);
        let mut diff = 0.0;
        let mut aunorm = 0.0;
        for i in 0..n {
            diff += (au[i] - lambda * bu[i]).powi(2);
            aunorm += au[i] * au[i];
        }
        let residual = (diff / aunorm.max(f64::MIN_POSITIVE)).sqrt();
        if residual > 1e-8 {
            return Err(Error::IterationFailure(format!(
                "eigenpair at lambda = {lambda:.6} has relative residual {residual:.3e}"
            )));
        }

        // expand to full velocity numbering and split off the pressure
        let mut velocity = vec![0.0; sys.dofs.num_full_velocity()];
        for (full, &f) in sys.dofs.free_of_full.iter().enumerate() {
            if f >= 0 {
                velocity[full] = free[f as usize];
            }
        }
        let pressure: Vec<f64> = (0..sys.dofs.num_cells)
            .map(|c| free[sys.dofs.pressure(c)])
            .collect();

        let vel_norm = crate::linalg::norm2(&free[..sys.dofs.num_free_velocity]);
        let div_res = sys.divergence_residual(&free) / vel_norm.max(f64::MIN_POSITIVE);

        solution.push(EigenPair {
            lambda,
            velocity,
            pressure,
            residual,
            divergence_residual: div_res,
        });
    }

    Ok(EigenSolution { pairs: solution })
}

/// Relative gaps `|lambda_{i+1} - lambda_i| / lambda_i`; gaps below 1e-6 are
/// flagged as numerically multiple.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub gaps: Vec<f64>,
    pub multiple: Vec<bool>,
}

pub fn spectral_gap_report(solution: &EigenSolution) -> Result<GapReport> {
    if solution.pairs.len() < 2 {
        return Err(Error::InvalidInput(
            "gap report needs at least two eigenvalues".into(),
        ));
    }
    let l = solution.lambdas();
    let gaps: Vec<f64> = l.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).collect();
    let multiple = gaps.iter().map(|&g| g < 1e-6).collect();
    Ok(GapReport { gaps, multiple })
}
