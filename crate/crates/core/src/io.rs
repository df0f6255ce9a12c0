//! File output: legacy-VTK ASCII dumps of meshes, fields and curves, a CSV
//! field dump, and MatrixMarket export of assembled matrices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::interface::InterfaceCurve;
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::space::{DgFunction, DgSpace};

/// Mesh as legacy-VTK unstructured grid.
pub fn write_mesh_vtk(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "triangulation")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{:.12e} {:.12e} 0", v[0], v[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_elems(), 4 * mesh.n_elems())?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_elems())?;
    for _ in 0..mesh.n_elems() {
        writeln!(w, "5")?;
    }
    Ok(())
}

/// DG field as legacy VTK with per-element (duplicated) corner points, so
/// inter-element discontinuities survive in the output.
pub fn write_field_vtk(space: &DgSpace, f: &DgFunction, name: &str, path: &Path) -> Result<()> {
    let mesh = space.mesh();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * mesh.n_elems())?;
    for e in 0..mesh.n_elems() {
        for &vid in &mesh.triangles[e] {
            let v = mesh.vertices[vid];
            writeln!(w, "{:.12e} {:.12e} 0", v[0], v[1])?;
        }
    }
    writeln!(w, "CELLS {} {}", mesh.n_elems(), 4 * mesh.n_elems())?;
    for e in 0..mesh.n_elems() {
        writeln!(w, "3 {} {} {}", 3 * e, 3 * e + 1, 3 * e + 2)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_elems())?;
    for _ in 0..mesh.n_elems() {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * mesh.n_elems())?;
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for e in 0..mesh.n_elems() {
        let c = f.local(e);
        for i in 0..3 {
            writeln!(w, "{:.12e}", c[i])?;
        }
    }
    Ok(())
}

/// CSV dump of the element-local Lagrange values: elem, local node, x, y, value.
pub fn write_field_csv(space: &DgSpace, f: &DgFunction, path: &Path) -> Result<()> {
    let mesh = space.mesh();
    let nodes = space.reference_nodes();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "elem,node,x,y,value")?;
    for e in 0..mesh.n_elems() {
        let c = f.local(e);
        for (i, &xi) in nodes.iter().enumerate() {
            let x = mesh.to_physical(e, xi);
            writeln!(w, "{e},{i},{:.12e},{:.12e},{:.12e}", x[0], x[1], c[i])?;
        }
    }
    Ok(())
}

/// Interface polyline as CSV: t, x0, y0, x1, y1 per segment.
pub fn write_curve_csv(curve: &InterfaceCurve, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,x0,y0,x1,y1")?;
    for s in &curve.segments {
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            curve.time, s[0][0], s[0][1], s[1][0], s[1][1]
        )?;
    }
    Ok(())
}

/// Interface polyline as legacy-VTK POLYDATA lines.
pub fn write_curve_vtk(curve: &InterfaceCurve, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "zero level set t={}", curve.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", 2 * curve.segments.len())?;
    for s in &curve.segments {
        writeln!(w, "{:.12e} {:.12e} 0", s[0][0], s[0][1])?;
        writeln!(w, "{:.12e} {:.12e} 0", s[1][0], s[1][1])?;
    }
    writeln!(w, "LINES {} {}", curve.segments.len(), 3 * curve.segments.len())?;
    for i in 0..curve.segments.len() {
        writeln!(w, "2 {} {}", 2 * i, 2 * i + 1)?;
    }
    Ok(())
}

/// MatrixMarket coordinate export (1-based indices).
pub fn write_matrix_market(m: &CsrMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.n_rows, m.n_cols, m.nnz())?;
    for i in 0..m.n_rows {
        let (cols, vals) = m.row(i);
        for (c, v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", i + 1, *c as usize + 1, v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use crate::mesh::{build_uniform_mesh, Rect};
    use std::sync::Arc;

    #[test]
    fn writers_produce_parseable_headers() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Arc::new(build_uniform_mesh(2, 2, Rect::unit_centered()).unwrap());
        let space = Arc::new(DgSpace::new(Arc::clone(&mesh), 1).unwrap());
        let f = DgFunction::constant(Arc::clone(&space), 1.0);

        let p = dir.path().join("mesh.vtk");
        write_mesh_vtk(&mesh, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("CELL_TYPES 8"));

        let p = dir.path().join("field.vtk");
        write_field_vtk(&space, &f, "u", &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("POINT_DATA 24"));

        let p = dir.path().join("field.csv");
        write_field_csv(&space, &f, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("elem,node,x,y,value"));
        assert_eq!(text.lines().count(), 1 + 8 * 3);

        let mut t = TripletBuilder::new(2, 2);
        t.add(0, 0, 1.5);
        t.add(1, 0, -2.0);
        let m = t.build();
        let p = dir.path().join("m.mtx");
        write_matrix_market(&m, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        assert!(text.contains("2 2 2"));

        let curve = InterfaceCurve {
            segments: vec![[[0.0, 0.0], [1.0, 1.0]]],
            time: 0.25,
            degenerate: Vec::new(),
        };
        let p = dir.path().join("curve.csv");
        write_curve_csv(&curve, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,x0,y0,x1,y1"));
        let p = dir.path().join("curve.vtk");
        write_curve_vtk(&curve, &p).unwrap();
    }
}
