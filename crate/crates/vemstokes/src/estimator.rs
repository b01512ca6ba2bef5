//! Residual a posteriori error indicator for a computed eigenpair: per cell
//! the stabilization term, the interior residual and the inter-element
//! stress jumps, combined into the local and global estimators.

use crate::geometry::Vec2;
use crate::local::LocalOperators;
use crate::mesh::{PolyMesh, NO_CELL};
use crate::system::{EigenPair, SaddleSystem};
use nalgebra::Vector6;
use rayon::prelude::*;

/// Per-cell indicator components and the global estimator.
#[derive(Debug, Clone)]
pub struct IndicatorField {
    /// stabilization energy of the projection remainder
    pub theta2: Vec<f64>,
    /// scaled interior residual `h_K^2 |Upsilon_K|^2`
    pub r2: Vec<f64>,
    /// `sum_{l in E_K} h_K |J_l|^2` per cell
    pub jump2: Vec<f64>,
    /// `theta2 + r2 + jump2`
    pub eta2: Vec<f64>,
    /// global `eta = sqrt(sum eta2)`
    pub eta: f64,
}

impl IndicatorField {
    pub fn eta2_total(&self) -> f64 {
        self.eta2.iter().sum()
    }

    pub fn theta2_total(&self) -> f64 {
        self.theta2.iter().sum()
    }

    pub fn r2_total(&self) -> f64 {
        self.r2.iter().sum()
    }

    pub fn jump2_total(&self) -> f64 {
        self.jump2.iter().sum()
    }
}

/// Local velocity DOFs of `cell` gathered from a full-numbering vector.
pub fn cell_dofs(mesh: &PolyMesh, cell: usize, velocity: &[f64]) -> Vec<f64> {
    let vs = mesh.cell_vertices(cell);
    let es = mesh.cell_edges(cell);
    let n = vs.len();
    let nv = mesh.num_vertices();
    let mut dofs = vec![0.0; 3 * n];
    for (k, &v) in vs.iter().enumerate() {
        dofs[2 * k] = velocity[2 * v as usize];
        dofs[2 * k + 1] = velocity[2 * v as usize + 1];
    }
    for (i, &e) in es.iter().enumerate() {
        dofs[2 * n + i] = velocity[2 * nv + e as usize];
    }
    dofs
}

/// Stabilization term: the stabilizer part of the discrete energy evaluated
/// on the projection remainder. The consistency part vanishes because the
/// projector annihilates its own remainder, so this is exactly
/// `a_h^K(u - Pi u, u - Pi u)` for any stabilizer choice.
pub fn theta(ops: &LocalOperators, dofs: &[f64]) -> f64 {
    let u = nalgebra::DVector::from_column_slice(dofs);
    let r = &u - &ops.d * (&ops.pi * &u);
    (&ops.stiffness * &r).dot(&r)
}

/// Interior residual `R_K^2 = h_K^2 |lambda Pi0 u + nu laplace(Pi u) - grad p|^2`.
///
/// The full residual is assembled so the expression survives an order bump;
/// at lowest order the Laplacian of the P1 projection and the gradient of
/// the P0 pressure are identically zero.
pub fn interior_residual(ops: &LocalOperators, lambda: f64, dofs: &[f64], _pressure: f64) -> f64 {
    let pi0 = ops.pi0_apply(dofs);
    // laplacian of the P1 projection and the gradient of the cellwise
    // constant pressure, both exactly zero at this order
    let laplace_piu = Vector6::zeros();
    let grad_p = Vector6::zeros();
    debug_assert_eq!(laplace_piu.amax(), 0.0);
    debug_assert_eq!(grad_p.amax(), 0.0);
    let upsilon = pi0 * lambda + laplace_piu - grad_p;
    let norm_sq = (ops.mass_p1 * upsilon).dot(&upsilon);
    ops.diameter * ops.diameter * norm_sq
}

/// Stress tensor of the projected field on one cell: `p I - nu grad(Pi u)`
/// (row-major 2x2). With `jump_nu` off the viscosity is dropped from the
/// gradient, matching the plain-text form of the edge residual.
fn cell_stress(
    ops: &LocalOperators,
    dofs: &[f64],
    pressure: f64,
    nu: f64,
    jump_nu: bool,
) -> [[f64; 2]; 2] {
    let g = ops.projected_gradient(dofs);
    let visc = if jump_nu { nu } else { 1.0 };
    [
        [pressure - visc * g[0][0], -visc * g[0][1]],
        [-visc * g[1][0], pressure - visc * g[1][1]],
    ]
}

/// Per-edge squared jump norms `|J_l|^2_{0,l}`; boundary edges carry zero.
pub fn edge_jumps(
    mesh: &PolyMesh,
    sys: &SaddleSystem,
    pair: &EigenPair,
    jump_nu: bool,
) -> Vec<f64> {
    let stresses: Vec<[[f64; 2]; 2]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let dofs = cell_dofs(mesh, c, &pair.velocity);
            cell_stress(
                &sys.locals[c],
                &dofs,
                pair.pressure[c],
                sys.config.nu,
                jump_nu,
            )
        })
        .collect();
    mesh.edges()
        .iter()
        .map(|e| {
            if e.cells[1] == NO_CELL {
                return 0.0;
            }
            let (ka, kb) = (e.cells[0] as usize, e.cells[1] as usize);
            let (sa, sb) = (&stresses[ka], &stresses[kb]);
            // outward normals are opposite, so the jump is the difference
            // against the stored (lower-cell outward) normal
            let n = e.normal;
            let j = Vec2::new(
                0.5 * ((sa[0][0] - sb[0][0]) * n.x + (sa[0][1] - sb[0][1]) * n.y),
                0.5 * ((sa[1][0] - sb[1][0]) * n.x + (sa[1][1] - sb[1][1]) * n.y),
            );
            e.length * j.dot(j)
        })
        .collect()
}

/// Assembles the indicator field for one eigenpair. Every interior edge
/// contributes its jump to both incident cells, each weighted by that cell's
/// own diameter.
pub fn global_estimate(
    mesh: &PolyMesh,
    sys: &SaddleSystem,
    pair: &EigenPair,
    jump_nu: bool,
) -> IndicatorField {
    let nc = mesh.num_cells();
    let jumps = edge_jumps(mesh, sys, pair, jump_nu);
    let per_cell: Vec<(f64, f64, f64)> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let ops = &sys.locals[c];
            let dofs = cell_dofs(mesh, c, &pair.velocity);
            let t2 = theta(ops, &dofs);
            let r2 = interior_residual(ops, pair.lambda, &dofs, pair.pressure[c]);
            let h = ops.diameter;
            let j2: f64 = mesh
                .cell_edges(c)
                .iter()
                .map(|&e| h * jumps[e as usize])
                .sum();
            (t2, r2, j2)
        })
        .collect();
    let theta2: Vec<f64> = per_cell.iter().map(|x| x.0).collect();
    let r2: Vec<f64> = per_cell.iter().map(|x| x.1).collect();
    let jump2: Vec<f64> = per_cell.iter().map(|x| x.2).collect();
    let eta2: Vec<f64> = (0..nc).map(|c| theta2[c] + r2[c] + jump2[c]).collect();
    let eta = eta2.iter().sum::<f64>().sqrt();
    IndicatorField {
        theta2,
        r2,
        jump2,
        eta2,
        eta,
    }
}

/// Effectivity index `err(lambda_1) / eta^2` with
/// `err = |lambda_ref - lambda_h| / lambda_ref`. A vanishing estimator with
/// nonzero error reports infinity.
pub fn effectivity(lambda_ref: f64, lambda_h: f64, eta2: f64) -> f64 {
    let err = (lambda_ref - lambda_h).abs() / lambda_ref;
    if eta2 == 0.0 {
        if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        err / eta2
    }
}
