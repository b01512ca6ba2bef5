//! Legacy ASCII VTK (version 4.2) writer for polygonal meshes with point
//! vectors and cell scalars.

use crate::mesh::PolyMesh;
use std::io::Write;

/// Collects point/cell data attached to one mesh and serializes the dataset.
pub struct VtkWriter<'m> {
    mesh: &'m PolyMesh,
    title: String,
    point_vectors: Vec<(String, Vec<[f64; 2]>)>,
    cell_scalars: Vec<(String, Vec<f64>)>,
    cell_vectors: Vec<(String, Vec<[f64; 2]>)>,
}

impl<'m> VtkWriter<'m> {
    pub fn new(mesh: &'m PolyMesh, title: &str) -> Self {
        Self {
            mesh,
            title: title.to_string(),
            point_vectors: Vec::new(),
            cell_scalars: Vec::new(),
            cell_vectors: Vec::new(),
        }
    }

    pub fn point_vectors(mut self, name: &str, data: Vec<[f64; 2]>) -> Self {
        assert_eq!(data.len(), self.mesh.num_vertices());
        self.point_vectors.push((name.to_string(), data));
        self
    }

    pub fn cell_scalars(mut self, name: &str, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.mesh.num_cells());
        self.cell_scalars.push((name.to_string(), data));
        self
    }

    pub fn cell_vectors(mut self, name: &str, data: Vec<[f64; 2]>) -> Self {
        assert_eq!(data.len(), self.mesh.num_cells());
        self.cell_vectors.push((name.to_string(), data));
        self
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        let mesh = self.mesh;
        writeln!(w, "# vtk DataFile Version 4.2")?;
        writeln!(w, "{}", self.title)?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET POLYDATA")?;
        writeln!(w, "POINTS {} double", mesh.num_vertices())?;
        for p in mesh.points() {
            writeln!(w, "{:.12e} {:.12e} 0.0", p.x, p.y)?;
        }
        let size: usize = (0..mesh.num_cells())
            .map(|c| mesh.cell_vertices(c).len() + 1)
            .sum();
        writeln!(w, "POLYGONS {} {}", mesh.num_cells(), size)?;
        for c in 0..mesh.num_cells() {
            let vs = mesh.cell_vertices(c);
            write!(w, "{}", vs.len())?;
            for &v in vs {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        if !self.point_vectors.is_empty() {
            writeln!(w, "POINT_DATA {}", mesh.num_vertices())?;
            for (name, data) in &self.point_vectors {
                writeln!(w, "VECTORS {name} double")?;
                for v in data {
                    writeln!(w, "{:.12e} {:.12e} 0.0", v[0], v[1])?;
                }
            }
        }
        if !self.cell_scalars.is_empty() || !self.cell_vectors.is_empty() {
            writeln!(w, "CELL_DATA {}", mesh.num_cells())?;
            for (name, data) in &self.cell_scalars {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in data {
                    writeln!(w, "{v:.12e}")?;
                }
            }
            for (name, data) in &self.cell_vectors {
                writeln!(w, "VECTORS {name} double")?;
                for v in data {
                    writeln!(w, "{:.12e} {:.12e} 0.0", v[0], v[1])?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain, Family};

    #[test]
    fn vtk_structure() {
        let mesh = generate(Domain::Square, Family::T1, 2, 0).unwrap();
        let mut buf = Vec::new();
        VtkWriter::new(&mesh, "fixture")
            .point_vectors("velocity", vec![[1.0, 2.0]; mesh.num_vertices()])
            .cell_scalars("pressure", vec![0.5; mesh.num_cells()])
            .write(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 4.2"));
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("POLYGONS 4 20"));
        assert!(text.contains("VECTORS velocity double"));
        assert!(text.contains("SCALARS pressure double 1"));
    }
}
