//! Sparse kernels for the saddle-point eigensolver: CSR storage, a
//! fill-reducing ordering, an LDL^T factorization for symmetric indefinite
//! systems, and a shift-invert Lanczos iteration.

mod lanczos;
mod ldlt;
mod order;

pub use lanczos::{lanczos_largest, LanczosOptions, RitzPair};
pub use ldlt::{LdltFactor, LdltOptions};
pub use order::nested_dissection;

/// Compressed sparse row matrix (square, fully stored, sorted columns).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unordered triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for &(r, c, v) in &triplets {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col,
            val,
        }
    }

    /// Builds a symmetric matrix from upper-triangle triplets (`r <= c`),
    /// mirroring each summed off-diagonal entry so that `A = A^T` holds
    /// bit-exactly regardless of accumulation order.
    pub fn from_symmetric_triplets(n: usize, mut upper: Vec<(u32, u32, f64)>) -> Self {
        upper.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut summed: Vec<(u32, u32, f64)> = Vec::with_capacity(upper.len());
        for &(r, c, v) in &upper {
            debug_assert!(r <= c);
            match summed.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => summed.push((r, c, v)),
            }
        }
        let mut full = Vec::with_capacity(2 * summed.len());
        for &(r, c, v) in &summed {
            full.push((r, c, v));
            if r != c {
                full.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(n, full)
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col[span.clone()], &self.val[span])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Largest `|A - A^T|` entry; exact zero for symmetric assembly.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c as usize, r)).abs());
            }
        }
        worst
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `self + scale * other` (patterns may differ).
    pub fn add_scaled(&self, other: &CsrMatrix, scale: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r as u32, c, v));
            }
            let (cols, vals) = other.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r as u32, c, scale * v));
            }
        }
        CsrMatrix::from_triplets(self.n, triplets)
    }

    /// Upper-triangle CSC of the symmetric matrix under the permutation
    /// `iperm` (old index -> new index), rows sorted per column. Each
    /// unordered pair of the symmetric pattern is emitted exactly once.
    pub fn permuted_upper_csc(&self, iperm: &[usize]) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
        let n = self.n;
        let mut cnt = vec![0usize; n];
        for r in 0..n {
            let (cols, _) = self.row(r);
            for &c in cols {
                if (c as usize) < r {
                    continue;
                }
                cnt[iperm[r].max(iperm[c as usize])] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for c in 0..n {
            col_ptr[c + 1] = col_ptr[c] + cnt[c];
        }
        let nnz = col_ptr[n];
        let mut next = col_ptr.clone();
        let mut rows = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        for r in 0..n {
            let (cols, vv) = self.row(r);
            for (&c, &v) in cols.iter().zip(vv) {
                if (c as usize) < r {
                    continue;
                }
                let (pi, pj) = (iperm[r], iperm[c as usize]);
                let (row, colx) = (pi.min(pj), pi.max(pj));
                let slot = next[colx];
                next[colx] += 1;
                rows[slot] = row as u32;
                vals[slot] = v;
            }
        }
        for c in 0..n {
            let span = col_ptr[c]..col_ptr[c + 1];
            let mut pairs: Vec<(u32, f64)> = rows[span.clone()]
                .iter()
                .copied()
                .zip(vals[span.clone()].iter().copied())
                .collect();
            pairs.sort_unstable_by_key(|&(r, _)| r);
            for (k, (r, v)) in pairs.into_iter().enumerate() {
                rows[col_ptr[c] + k] = r;
                vals[col_ptr[c] + k] = v;
            }
        }
        (col_ptr, rows, vals)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
