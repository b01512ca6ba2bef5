//! Shared helpers for the integration suites.

use nalgebra::DMatrix;
use vemstokes::linalg::CsrMatrix;
use vemstokes::mesh::{generate, Domain, Family, PolyMesh};
use vemstokes::system::{assemble, solve_eigs, Bc, EigenSolution, SaddleSystem, SolverConfig};

pub fn dense_of(csr: &CsrMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(csr.n, csr.n);
    for r in 0..csr.n {
        let (cols, vals) = csr.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            m[(r, c as usize)] += v;
        }
    }
    m
}

/// Finite eigenvalues of the dense pencil through `B^{1/2} A^{-1} B^{1/2}`.
pub fn dense_pencil_eigenvalues(a: &CsrMatrix, b: &CsrMatrix) -> Vec<f64> {
    let ad = dense_of(a);
    let bd = dense_of(b);
    let be = nalgebra::SymmetricEigen::new(bd);
    let sqrt = be.eigenvalues.map(|v| v.max(0.0).sqrt());
    let bhalf = &be.eigenvectors * DMatrix::from_diagonal(&sqrt) * be.eigenvectors.transpose();
    let kinv = ad.lu().solve(&bhalf).expect("dense A solve");
    let mut w = &bhalf * kinv;
    w = 0.5 * (&w + &w.transpose());
    let theta_max = nalgebra::SymmetricEigen::new(w.clone()).eigenvalues.amax();
    let mut lambdas: Vec<f64> = nalgebra::SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .filter(|&&t| t > 1e-8 * theta_max)
        .map(|&t| 1.0 / t)
        .collect();
    lambdas.sort_by(|x, y| x.partial_cmp(y).unwrap());
    lambdas
}

pub fn clamped_solve(domain: Domain, family: Family, n: usize, seed: u64, k: usize) -> Vec<f64> {
    let mesh = generate(domain, family, n, seed).expect("mesh");
    let sys = assemble(&mesh, &SolverConfig::default()).expect("assemble");
    solve_eigs(&sys, k, 0.0).expect("solve").lambdas()
}

pub fn mixed_solve(n: usize, alpha: f64, k: usize) -> Vec<f64> {
    let mesh = generate(Domain::UnitSquare, Family::T1, n, 0).expect("mesh");
    let cfg = SolverConfig {
        alpha,
        bc: Bc::MixedBottomClamped,
        ..SolverConfig::default()
    };
    let sys = assemble(&mesh, &cfg).expect("assemble");
    solve_eigs(&sys, k, 0.0).expect("solve").lambdas()
}

pub fn assemble_and_solve(
    mesh: &PolyMesh,
    cfg: &SolverConfig,
    k: usize,
) -> (SaddleSystem, EigenSolution) {
    let sys = assemble(mesh, cfg).expect("assemble");
    let sol = solve_eigs(&sys, k, 0.0).expect("solve");
    (sys, sol)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
