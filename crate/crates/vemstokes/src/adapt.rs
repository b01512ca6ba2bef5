//! Marking, the adaptive solve-estimate-mark-refine loop, convergence-order
//! fitting and Richardson extrapolation.

use crate::error::{Error, Result};
use crate::estimator::{global_estimate, IndicatorField};
use crate::mesh::{refine, PolyMesh};
use crate::system::{assemble, solve_eigs, EigenSolution, SolverConfig};

/// Maximum-criterion marking: all cells with
/// `eta_K >= theta * max_K' eta_K'`. Ties are included and the argmax is
/// always marked; an all-zero field marks nothing (converged).
pub fn mark(indicators: &IndicatorField, theta: f64) -> Vec<usize> {
    let max = indicators
        .eta2
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e))
        .sqrt();
    if max == 0.0 {
        return Vec::new();
    }
    let cut = theta * max;
    indicators
        .eta2
        .iter()
        .enumerate()
        .filter(|(_, &e)| e.sqrt() >= cut)
        .map(|(c, _)| c)
        .collect()
}

/// One row of the adaptive history.
#[derive(Debug, Clone)]
pub struct AdaptStep {
    pub step: usize,
    pub cells: usize,
    pub dofs: usize,
    pub lambda1: f64,
    pub eta2: f64,
    pub theta2: f64,
    pub r2: f64,
    pub j2: f64,
    /// `|lambda_ref - lambda_1| / lambda_ref` when a reference is given
    pub err: Option<f64>,
    pub eff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AdaptHistory {
    pub steps: Vec<AdaptStep>,
    /// set when refinement aborted early (geometry failure or empty marking)
    pub stopped: Option<String>,
}

impl AdaptHistory {
    /// CSV with the exact column set
    /// `step,cells,dofs,lambda1,eta2,theta2,R2,J2,err,eff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,cells,dofs,lambda1,eta2,theta2,R2,J2,err,eff\n");
        for s in &self.steps {
            let err = s.err.map(|v| format!("{v:.9e}")).unwrap_or_default();
            let eff = s.eff.map(|v| format!("{v:.9e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}\n",
                s.step, s.cells, s.dofs, s.lambda1, s.eta2, s.theta2, s.r2, s.j2, err, eff
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub solver: SolverConfig,
    /// marking fraction of the maximum indicator
    pub theta: f64,
    pub max_steps: usize,
    pub dof_budget: usize,
    pub lambda_ref: Option<f64>,
    /// viscosity inside the jump stress
    pub jump_nu: bool,
    /// eigenvalues computed per solve (the estimator uses the lowest)
    pub k: usize,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            theta: 0.5,
            max_steps: 12,
            dof_budget: 300_000,
            lambda_ref: None,
            jump_nu: true,
            k: 1,
        }
    }
}

/// View of one completed adaptive step, for observers that export fields.
pub struct StepView<'a> {
    pub step: usize,
    pub mesh: &'a PolyMesh,
    pub solution: &'a EigenSolution,
    pub indicators: &'a IndicatorField,
}

pub fn adaptive_loop(mesh: PolyMesh, cfg: &AdaptConfig) -> Result<AdaptHistory> {
    adaptive_loop_with(mesh, cfg, |_| {})
}

/// Runs solve -> estimate -> mark -> refine until the step or DOF budget is
/// reached. A refinement geometry failure stops the loop and returns the
/// partial history.
pub fn adaptive_loop_with(
    mesh: PolyMesh,
    cfg: &AdaptConfig,
    mut observer: impl FnMut(StepView<'_>),
) -> Result<AdaptHistory> {
    let mut mesh = mesh;
    let mut steps = Vec::new();
    let mut stopped = None;
    for step in 0..cfg.max_steps {
        let sys = assemble(&mesh, &cfg.solver)?;
        let solution = solve_eigs(&sys, cfg.k, 0.0)?;
        let pair = &solution.pairs[0];
        let indicators = global_estimate(&mesh, &sys, pair, cfg.jump_nu);
        let err = cfg
            .lambda_ref
            .map(|lr| (lr - pair.lambda).abs() / lr);
        let eff = err.map(|e| {
            let eta2 = indicators.eta2_total();
            if eta2 > 0.0 {
                e / eta2
            } else {
                f64::INFINITY
            }
        });
        steps.push(AdaptStep {
            step,
            cells: mesh.num_cells(),
            dofs: sys.dofs.total,
            lambda1: pair.lambda,
            eta2: indicators.eta2_total(),
            theta2: indicators.theta2_total(),
            r2: indicators.r2_total(),
            j2: indicators.jump2_total(),
            err,
            eff,
        });
        observer(StepView {
            step,
            mesh: &mesh,
            solution: &solution,
            indicators: &indicators,
        });
        if step + 1 == cfg.max_steps || sys.dofs.total >= cfg.dof_budget {
            break;
        }
        let marked = mark(&indicators, cfg.theta);
        if marked.is_empty() {
            stopped = Some("estimator vanished: converged".into());
            break;
        }
        match refine(&mesh, &marked) {
            Ok(next) => mesh = next,
            Err(Error::RefineGeometry(msg)) => {
                stopped = Some(format!("refinement aborted: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(AdaptHistory { steps, stopped })
}

/// Richardson fit of the three-parameter model
/// `lambda_i = lambda_inf + C * x_i^t` on a decreasing abscissa (mesh size).
#[derive(Debug, Clone)]
pub struct ConvergenceFit {
    pub rate: f64,
    pub extrapolated: f64,
    /// rms of the model residual over the data
    pub residual: f64,
    /// set when the errors change sign or the iteration stalled
    pub low_confidence: bool,
}

/// Solves for `(lambda_inf, C, t)` by successive substitution: given
/// `lambda_inf`, `(t, C)` come from a log-log regression of the errors;
/// given `(t, C)`, `lambda_inf` is recovered by averaging.
pub fn fit_order(h: &[f64], lambda: &[f64]) -> Result<ConvergenceFit> {
    if h.len() < 3 || h.len() != lambda.len() {
        return Err(Error::InvalidInput(
            "order fit needs at least three (h, lambda) samples".into(),
        ));
    }
    // sort by decreasing mesh size so the result is order-invariant
    let mut pairs: Vec<(f64, f64)> = h.iter().copied().zip(lambda.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let h: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let lambda: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (h, lambda) = (h.as_slice(), lambda.as_slice());
    let m = h.len();
    // Aitken start from the three finest meshes
    let (l0, l1, l2) = (lambda[m - 3], lambda[m - 2], lambda[m - 1]);
    let denom = (l2 - l1) - (l1 - l0);
    let mut extr = if denom.abs() > 1e-300 {
        l2 - (l2 - l1).powi(2) / denom
    } else {
        l2
    };
    let mut low_confidence = false;
    let mut rate = 0.0;
    let mut coeff = 0.0;
    let mut converged = false;
    for _ in 0..500 {
        let d: Vec<f64> = lambda.iter().map(|&l| l - extr).collect();
        let pos = d.iter().filter(|&&x| x > 0.0).count();
        let sign = if pos * 2 >= m { 1.0 } else { -1.0 };
        if pos != 0 && pos != m {
            low_confidence = true;
        }
        // regression of log|d| on log h
        let xs: Vec<f64> = h.iter().map(|&x| x.ln()).collect();
        let ys: Vec<f64> = d
            .iter()
            .map(|&x| x.abs().max(1e-300).ln())
            .collect();
        let xm = xs.iter().sum::<f64>() / m as f64;
        let ym = ys.iter().sum::<f64>() / m as f64;
        let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        rate = sxy / sxx;
        coeff = sign * (ym - rate * xm).exp();
        let new_extr =
            lambda.iter().zip(h).map(|(&l, &x)| l - coeff * x.powf(rate)).sum::<f64>() / m as f64;
        let delta = (new_extr - extr).abs();
        extr = new_extr;
        if delta <= 1e-10 * extr.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        low_confidence = true;
    }
    let residual = (lambda
        .iter()
        .zip(h)
        .map(|(&l, &x)| (l - extr - coeff * x.powf(rate)).powi(2))
        .sum::<f64>()
        / m as f64)
        .sqrt();
    Ok(ConvergenceFit {
        rate,
        extrapolated: extr,
        residual,
        low_confidence,
    })
}

/// Log-log slope of `err` against the cell count, as reported for the
/// adaptive runs (`err ~ N^slope`).
pub fn fit_slope(cells: &[usize], err: &[f64]) -> Result<f64> {
    if cells.len() < 2 || cells.len() != err.len() {
        return Err(Error::InvalidInput("slope fit needs two or more points".into()));
    }
    let xs: Vec<f64> = cells.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = err.iter().map(|&e| e.max(1e-300).ln()).collect();
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    Ok(sxy / sxx)
}
