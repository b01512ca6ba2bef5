//! File formats: legacy ASCII VTK export of meshes and fields, a plain-text
//! mesh format for fixtures, and coordinate-format matrix dumps.

mod meshfmt;
mod vtk;

pub use meshfmt::{read_mesh_text, write_mesh_text};
pub use vtk::VtkWriter;

use crate::linalg::CsrMatrix;
use std::io::Write;

/// Writes a sparse matrix as `row col value` triplets (1-based indices).
pub fn write_coo(matrix: &CsrMatrix, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "% {} {} {}", matrix.n, matrix.n, matrix.nnz())?;
    for r in 0..matrix.n {
        let (cols, vals) = matrix.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}
