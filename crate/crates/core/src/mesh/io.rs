//! Mesh export: VTK legacy ASCII and CSV.

use std::io::Write;

use super::SurfaceMesh;
use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtkFormat {
    PolyData,
    UnstructuredGrid,
}

/// Writes a legacy ASCII VTK file with triangle cells and optional named
/// point-data scalars.
pub fn write_vtk<T: Real, W: Write>(
    out: &mut W,
    mesh: &SurfaceMesh<T>,
    format: VtkFormat,
    point_data: &[(&str, &[T])],
) -> Result<()> {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "surface mesh")?;
    writeln!(out, "ASCII")?;
    match format {
        VtkFormat::PolyData => writeln!(out, "DATASET POLYDATA")?,
        VtkFormat::UnstructuredGrid => writeln!(out, "DATASET UNSTRUCTURED_GRID")?,
    }
    writeln!(out, "POINTS {nv} double")?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
    }
    let keyword = match format {
        VtkFormat::PolyData => "POLYGONS",
        VtkFormat::UnstructuredGrid => "CELLS",
    };
    writeln!(out, "{keyword} {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    if format == VtkFormat::UnstructuredGrid {
        writeln!(out, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(out, "5")?;
        }
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {nv}")?;
        for (name, values) in point_data {
            assert_eq!(values.len(), nv, "point data '{name}' has wrong length");
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(out, "{v}")?;
            }
        }
    }
    Ok(())
}

/// `index,x1,x2,x3` per vertex.
pub fn write_csv_vertices<T: Real, W: Write>(out: &mut W, mesh: &SurfaceMesh<T>) -> Result<()> {
    writeln!(out, "index,x1,x2,x3")?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{i},{},{},{}", v[0], v[1], v[2])?;
    }
    Ok(())
}

/// `index,v0,v1,v2` per triangle.
pub fn write_csv_triangles<T: Real, W: Write>(out: &mut W, mesh: &SurfaceMesh<T>) -> Result<()> {
    writeln!(out, "index,v0,v1,v2")?;
    for (i, t) in mesh.triangles().iter().enumerate() {
        writeln!(out, "{i},{},{},{}", t[0], t[1], t[2])?;
    }
    Ok(())
}
