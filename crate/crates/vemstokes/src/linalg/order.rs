//! Geometric nested dissection. The unknowns of a 2-D mesh problem carry
//! coordinates, so recursive median bisection with a one-sided vertex
//! separator gives near-optimal fill for the LDL^T factor.

use super::CsrMatrix;
use crate::geometry::Vec2;

/// Returns `perm` with `perm[new] = old`, ordering separators last.
///
/// Rows with near-global coupling (the zero-mean multiplier row) would end
/// up in every separator and ruin the recursion; they are peeled off first
/// and ordered at the very end.
pub fn nested_dissection(pattern: &CsrMatrix, coords: &[Vec2]) -> Vec<usize> {
    assert_eq!(pattern.n, coords.len());
    let n = pattern.n;
    let dense_cut = 64.max(n / 8);
    let mut dense = Vec::new();
    let mut nodes = Vec::with_capacity(n);
    for v in 0..n {
        if pattern.row_ptr[v + 1] - pattern.row_ptr[v] > dense_cut {
            dense.push(v as u32);
        } else {
            nodes.push(v as u32);
        }
    }
    let mut dense_flag = vec![false; n];
    for &v in &dense {
        dense_flag[v as usize] = true;
    }
    let mut perm = Vec::with_capacity(n);
    let mut side = vec![false; n];
    recurse(pattern, coords, nodes, &dense_flag, &mut side, &mut perm);
    perm.extend(dense.iter().map(|&v| v as usize));
    debug_assert_eq!(perm.len(), n);
    perm
}

const LEAF: usize = 48;

fn recurse(
    pattern: &CsrMatrix,
    coords: &[Vec2],
    mut nodes: Vec<u32>,
    dense_flag: &[bool],
    side: &mut [bool],
    out: &mut Vec<usize>,
) {
    if nodes.len() <= LEAF {
        out.extend(nodes.iter().map(|&v| v as usize));
        return;
    }
    // split along the wider bounding-box axis at the coordinate median
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for &v in &nodes {
        let p = coords[v as usize];
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let use_x = (hi.x - lo.x) >= (hi.y - lo.y);
    nodes.sort_unstable_by(|&a, &b| {
        let (pa, pb) = (coords[a as usize], coords[b as usize]);
        let (ka, kb) = if use_x { (pa.x, pb.x) } else { (pa.y, pb.y) };
        ka.partial_cmp(&kb).unwrap().then(a.cmp(&b))
    });
    let mid = nodes.len() / 2;
    let (first, second) = nodes.split_at(mid);

    // membership flags for the second half, valid only within this call
    for &v in second {
        side[v as usize] = true;
    }
    // separator: first-half nodes adjacent to the second half
    let mut a_part = Vec::with_capacity(first.len());
    let mut sep = Vec::new();
    for &v in first {
        let (cols, _) = pattern.row(v as usize);
        let touches_b = cols
            .iter()
            .any(|&c| side[c as usize] && !dense_flag[c as usize]);
        if touches_b {
            sep.push(v);
        } else {
            a_part.push(v);
        }
    }
    let b_part: Vec<u32> = second.to_vec();
    for &v in &b_part {
        side[v as usize] = false;
    }

    if a_part.is_empty() || sep.len() * 4 > nodes.len() {
        // separator degenerated (dense coupling); fall back to plain order
        out.extend(nodes.iter().map(|&v| v as usize));
        return;
    }
    recurse(pattern, coords, a_part, dense_flag, side, out);
    recurse(pattern, coords, b_part, dense_flag, side, out);
    out.extend(sep.iter().map(|&v| v as usize));
}

/// Inverts a permutation: `iperm[perm[k]] = k`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut iperm = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    iperm
}
