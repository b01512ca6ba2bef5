//! Simplicial LDL^T for sparse symmetric matrices via the elimination tree,
//! in the style of the QDLDL kernel. Saddle-point systems are handled by
//! pivot regularization: each unknown carries an expected pivot sign and a
//! pivot that collapses numerically is replaced by `sign * eps`. Solves are
//! then polished by iterative refinement against the unperturbed matrix.

use super::order::invert_permutation;
use super::{axpy, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LdltOptions {
    /// replacement magnitude for collapsed pivots, relative to the mean
    /// absolute diagonal of the positive block
    pub reg_eps_rel: f64,
    /// absolute pivot-collapse threshold, relative to the same scale
    pub pivot_tol_rel: f64,
    pub max_refine: usize,
    pub refine_tol: f64,
}

impl Default for LdltOptions {
    fn default() -> Self {
        Self {
            reg_eps_rel: 1e-12,
            pivot_tol_rel: 1e-14,
            max_refine: 10,
            refine_tol: 1e-13,
        }
    }
}

pub struct LdltFactor {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    dinv: Vec<f64>,
    /// number of pivots that needed regularization
    pub bumped: usize,
    matrix: CsrMatrix,
    opts: LdltOptions,
}

impl LdltFactor {
    /// Factors the symmetric `matrix` under the ordering `perm`
    /// (`perm[new] = old`). `signs[old]` is the expected pivot sign.
    pub fn new(
        matrix: CsrMatrix,
        perm: Vec<usize>,
        signs: &[i8],
        opts: LdltOptions,
    ) -> Result<Self> {
        let n = matrix.n;
        assert_eq!(perm.len(), n);
        let iperm = invert_permutation(&perm);
        let (ap, ai, ax) = matrix.permuted_upper_csc(&iperm);

        // pivot scale from the positive-sign diagonal entries
        let mut scale = 0.0;
        let mut cnt = 0usize;
        for r in 0..n {
            if signs[r] > 0 {
                let d = matrix.get(r, r).abs();
                if d > 0.0 {
                    scale += d;
                    cnt += 1;
                }
            }
        }
        let scale = if cnt > 0 { scale / cnt as f64 } else { 1.0 };
        let reg = opts.reg_eps_rel * scale;
        let pivot_tol = opts.pivot_tol_rel * scale;

        // elimination tree and column counts
        let mut etree = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![usize::MAX; n];
        for j in 0..n {
            work[j] = j;
            for p in ap[j]..ap[j + 1] {
                let mut i = ai[p] as usize;
                if i > j {
                    return Err(Error::SingularSystem("matrix not upper triangular".into()));
                }
                while work[i] != j {
                    if etree[i] == usize::MAX {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }

        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];
        let mut li = vec![0u32; nnz_l];
        let mut lx = vec![0.0f64; nnz_l];
        let mut d = vec![0.0f64; n];
        let mut dinv = vec![0.0f64; n];

        let mut y_val = vec![0.0f64; n];
        let mut y_marker = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_in_col = lp[..n].to_vec();
        let mut bumped = 0usize;

        for k in 0..n {
            let mut nnz_y = 0usize;
            d[k] = 0.0;
            for p in ap[k]..ap[k + 1] {
                let r = ai[p] as usize;
                if r == k {
                    d[k] = ax[p];
                    continue;
                }
                y_val[r] = ax[p];
                let mut next = r;
                if !y_marker[next] {
                    y_marker[next] = true;
                    elim[0] = next;
                    let mut nnz_e = 1usize;
                    next = etree[next];
                    while next != usize::MAX && next < k && !y_marker[next] {
                        y_marker[next] = true;
                        elim[nnz_e] = next;
                        nnz_e += 1;
                        next = etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        y_idx[nnz_y] = elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let yv = y_val[c];
                for p in lp[c]..next_in_col[c] {
                    y_val[li[p] as usize] -= lx[p] * yv;
                }
                let pos = next_in_col[c];
                next_in_col[c] += 1;
                li[pos] = k as u32;
                let l = yv * dinv[c];
                lx[pos] = l;
                d[k] -= yv * l;
                y_val[c] = 0.0;
                y_marker[c] = false;
            }
            if d[k].abs() <= pivot_tol {
                let sign = signs[perm[k]];
                if sign == 0 {
                    return Err(Error::SingularSystem(format!(
                        "zero pivot at permuted index {k}"
                    )));
                }
                d[k] = sign as f64 * reg.max(pivot_tol);
                bumped += 1;
            }
            dinv[k] = 1.0 / d[k];
        }

        Ok(Self {
            n,
            perm,
            iperm,
            lp,
            li,
            lx,
            dinv,
            bumped,
            matrix,
            opts,
        })
    }

    pub fn nnz_factor(&self) -> usize {
        self.lx.len()
    }

    /// Raw factor backsolve, permutation included.
    fn backsolve(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            work[k] = b[self.perm[k]];
        }
        for c in 0..n {
            let xc = work[c];
            if xc != 0.0 {
                for p in self.lp[c]..self.lp[c + 1] {
                    work[self.li[p] as usize] -= self.lx[p] * xc;
                }
            }
        }
        for k in 0..n {
            work[k] *= self.dinv[k];
        }
        for c in (0..n).rev() {
            let mut acc = work[c];
            for p in self.lp[c]..self.lp[c + 1] {
                acc -= self.lx[p] * work[self.li[p] as usize];
            }
            work[c] = acc;
        }
        for k in 0..n {
            x[self.perm[k]] = work[k];
        }
    }

    /// Solves against the original (unregularized) matrix with iterative
    /// refinement; returns the final relative residual.
    pub fn solve_refined(&self, b: &[f64], x: &mut [f64]) -> f64 {
        let n = self.n;
        let mut work = vec![0.0; n];
        self.backsolve(b, x, &mut work);
        let bnorm = norm2(b).max(f64::MIN_POSITIVE);
        let mut residual = vec![0.0; n];
        let mut correction = vec![0.0; n];
        let mut rel = f64::INFINITY;
        for _ in 0..self.opts.max_refine {
            self.matrix.matvec(x, &mut residual);
            for i in 0..n {
                residual[i] = b[i] - residual[i];
            }
            rel = norm2(&residual) / bnorm;
            if rel <= self.opts.refine_tol {
                break;
            }
            self.backsolve(&residual, &mut correction, &mut work);
            axpy(1.0, &correction, x);
        }
        rel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn iperm(&self) -> &[usize] {
        &self.iperm
    }
}
