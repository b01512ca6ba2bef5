//! Plain-text mesh format for fixtures: a vertex count and coordinate list
//! followed by cell vertex-index lists.
//!
//! ```text
//! vertices <nv>
//! <x> <y>          (nv lines)
//! cells <nc>
//! <k> <v0> ... <v{k-1}>   (nc lines)
//! ```

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::PolyMesh;
use std::io::{BufRead, Write};

pub fn write_mesh_text(mesh: &PolyMesh, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "vertices {}", mesh.num_vertices())?;
    for p in mesh.points() {
        writeln!(w, "{:.16e} {:.16e}", p.x, p.y)?;
    }
    writeln!(w, "cells {}", mesh.num_cells())?;
    for c in 0..mesh.num_cells() {
        let vs = mesh.cell_vertices(c);
        write!(w, "{}", vs.len())?;
        for &v in vs {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_mesh_text(r: impl BufRead) -> Result<PolyMesh> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        loop {
            match lines.next() {
                Some(Ok(l)) => {
                    let t = l.trim().to_string();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(t);
                    }
                }
                Some(Err(e)) => return Err(e.into()),
                None => return Err(Error::InvalidInput("unexpected end of mesh file".into())),
            }
        }
    };

    let header = next()?;
    let nv: usize = parse_counted(&header, "vertices")?;
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = next()?;
        let mut it = line.split_whitespace();
        let x: f64 = parse_num(it.next())?;
        let y: f64 = parse_num(it.next())?;
        points.push(Vec2::new(x, y));
    }
    let header = next()?;
    let nc: usize = parse_counted(&header, "cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let line = next()?;
        let mut it = line.split_whitespace();
        let k: usize = parse_num(it.next())?;
        let mut cell = Vec::with_capacity(k);
        for _ in 0..k {
            cell.push(parse_num::<u32>(it.next())?);
        }
        cells.push(cell);
    }
    PolyMesh::from_cells(points, cells)
}

fn parse_counted(line: &str, keyword: &str) -> Result<usize> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next()) {
        (Some(k), Some(n)) if k == keyword => n
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad {keyword} count"))),
        _ => Err(Error::InvalidInput(format!(
            "expected `{keyword} <count>`, got `{line}`"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>) -> Result<T> {
    tok.ok_or_else(|| Error::InvalidInput("missing number".into()))?
        .parse()
        .map_err(|_| Error::InvalidInput("malformed number".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain, Family};

    #[test]
    fn roundtrip() {
        let mesh = generate(Domain::Square, Family::T2, 4, 17).unwrap();
        let mut buf = Vec::new();
        write_mesh_text(&mesh, &mut buf).unwrap();
        let back = read_mesh_text(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.num_vertices(), mesh.num_vertices());
        assert_eq!(back.num_cells(), mesh.num_cells());
        back.validate().unwrap();
        for (a, b) in mesh.points().iter().zip(back.points()) {
            assert!(a.dist(*b) < 1e-14);
        }
    }

    #[test]
    fn rejects_malformed() {
        let text = "vertices 2\n0 0\n1 0\ncells 1\n3 0 1 5\n";
        assert!(read_mesh_text(std::io::BufReader::new(text.as_bytes())).is_err());
    }
}
