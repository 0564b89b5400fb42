//! Run artifacts: energy history, interface polylines, VTK snapshots.
//!
//! Floats are written with Rust's shortest round-trip formatting so equal
//! runs give byte-identical files.

use droplet_core::diagnostics::EnergyReport;
use droplet_core::mesh::BoundaryLabel;
use droplet_core::{Mesh2D, State, Vec2};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const ENERGIES_HEADER: &str = "# droplet energies v1";
pub const INTERFACE_HEADER: &str = "# droplet interface v1";
pub const PROFILE_HEADER: &str = "# droplet yl_profile v1";

pub const ENERGY_COLUMNS: [&str; 19] = [
    "t",
    "E_k",
    "E_fs",
    "E_w",
    "E_p",
    "P_v",
    "P_fr",
    "balance",
    "euler_diss",
    "vol_rel_err",
    "theta_left",
    "theta_right",
    "vcm_x",
    "vcm_y",
    "scl_vol",
    "scl_surf",
    "scl_cl",
    "scl_grav",
    "remeshed",
];

pub struct EnergyWriter {
    out: BufWriter<File>,
}

impl EnergyWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{ENERGIES_HEADER}")?;
        writeln!(out, "{}", ENERGY_COLUMNS.join(","))?;
        Ok(EnergyWriter { out })
    }

    /// The initial row has no step behind it; its step quantities are 0.
    pub fn row(&mut self, r: &EnergyReport) -> io::Result<()> {
        let e = &r.energies;
        let vals = [
            r.t,
            e.e_k,
            e.e_fs,
            e.e_w,
            e.e_p,
            r.p_v,
            r.p_fr,
            r.balance,
            r.euler_diss,
            r.vol_rel_err,
            r.contact_angles.0,
            r.contact_angles.1,
            r.v_cm.x,
            r.v_cm.y,
            r.scl_vol,
            r.scl_surf,
            r.scl_cl,
            r.scl_grav,
        ];
        let mut line = vals.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
        line.push_str(if r.remeshed { ",1" } else { ",0" });
        writeln!(self.out, "{line}")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Boundary loop starting at the left contact point; each vertex is labelled
/// by the edge leaving it, contact vertices by `contact`.
pub fn write_interface(path: &Path, mesh: &Mesh2D) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{INTERFACE_HEADER}")?;
    writeln!(out, "x,y,label")?;
    for e in &mesh.boundary_edges {
        let p = mesh.vertices[e.a];
        let label = if mesh.contact_vertices.contains(&e.a) {
            "contact"
        } else {
            match e.label {
                BoundaryLabel::Sigma => "sigma",
                BoundaryLabel::Gamma => "gamma",
            }
        };
        writeln!(out, "{:e},{:e},{label}", p.x, p.y)?;
    }
    out.flush()
}

pub fn write_polyline(path: &Path, points: &[Vec2]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{PROFILE_HEADER}")?;
    writeln!(out, "x,y")?;
    for p in points {
        writeln!(out, "{:e},{:e}", p.x, p.y)?;
    }
    out.flush()
}

/// Legacy ASCII VTK unstructured grid with vertex velocity, pressure and
/// mesh velocity.
pub fn write_vtk(path: &Path, state: &State) -> io::Result<()> {
    let mesh = &state.mesh;
    let n = mesh.vertices.len();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "droplet t={:e}", state.t)?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in &mesh.vertices {
        writeln!(out, "{:e} {:e} 0", p.x, p.y)?;
    }
    let nt = mesh.triangles.len();
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "VECTORS velocity double")?;
    for i in 0..n {
        let v = state.vertex_velocity(i);
        writeln!(out, "{:e} {:e} 0", v.x, v.y)?;
    }
    writeln!(out, "SCALARS pressure double 1\nLOOKUP_TABLE default")?;
    for q in &state.p {
        writeln!(out, "{q:e}")?;
    }
    writeln!(out, "VECTORS mesh_velocity double")?;
    for w in &state.w {
        writeln!(out, "{:e} {:e} 0", w.x, w.y)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use droplet_core::mesh::build_initial_cap;

    #[test]
    fn interface_lists_every_boundary_vertex_once() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = build_initial_cap(2.0, 0.4).unwrap();
        let path = dir.path().join("interface_0.csv");
        write_interface(&path, &mesh).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows.len(), mesh.boundary_edges.len());
        assert_eq!(rows.iter().filter(|r| r.ends_with(",contact")).count(), 2);
        assert!(rows[0].ends_with(",contact"));
    }

    #[test]
    fn vtk_counts_match_mesh() {
        let dir = tempfile::tempdir().unwrap();
        let s = State::at_rest(build_initial_cap(2.0, 0.4).unwrap(), 0.0);
        let path = dir.path().join("s.vtk");
        write_vtk(&path, &s).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let nv = s.mesh.vertices.len();
        assert!(text.contains(&format!("POINTS {nv} double")));
        assert!(text.contains(&format!("CELLS {} {}", s.mesh.triangles.len(), 4 * s.mesh.triangles.len())));
        assert!(text.contains(&format!("POINT_DATA {nv}")));
    }
}
