//! Legacy ASCII VTK output of a transient state.
//!
//! Points are the mesh vertices, cells are the sub-simplices of every
//! element. The DG fields are sampled at the vertices of each element and
//! averaged over the elements sharing a vertex.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::Discretization;
use crate::error::Result;
use crate::timestepper::TransientState;

/// Per-vertex averages of displacement and pressures.
pub struct VertexFields {
    pub displacement: Vec<[f64; 3]>,
    pub pressures: Vec<Vec<f64>>,
}

pub fn sample_at_vertices(disc: &Discretization, state: &TransientState) -> VertexFields {
    let mesh = &disc.mesh;
    let nv = mesh.vertices().len();
    let nj = disc.n_networks();
    let np = disc.n_p();
    let mut disp = vec![[0.0; 3]; nv];
    let mut pres = vec![vec![0.0; nv]; nj];
    let mut count = vec![0usize; nv];
    for (e, elem) in mesh.elements().iter().enumerate() {
        for &v in &elem.vertices {
            let x = &mesh.vertices()[v];
            let (u, _) = disc.space_u.eval_field(&state.u, e, x);
            for c in 0..3 {
                disp[v][c] += u[c];
            }
            for (j, pj) in pres.iter_mut().enumerate() {
                pj[v] += disc.space_p.eval_field(&state.p[j * np..(j + 1) * np], e, x).0[0];
            }
            count[v] += 1;
        }
    }
    for v in 0..nv {
        let n = count[v].max(1) as f64;
        disp[v].iter_mut().for_each(|x| *x /= n);
        for pj in pres.iter_mut() {
            pj[v] /= n;
        }
    }
    VertexFields {
        displacement: disp,
        pressures: pres,
    }
}

pub fn fields_to_string(disc: &Discretization, state: &TransientState) -> String {
    let mesh = &disc.mesh;
    let dim = mesh.dim();
    let f = sample_at_vertices(disc, state);
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "mpet-polydg t = {}", state.t).unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.vertices().len()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} {}", v[0], v[1], v[2]).unwrap();
    }
    let n_cells = mesh.n_sub_simplices();
    writeln!(s, "CELLS {} {}", n_cells, n_cells * (dim + 2)).unwrap();
    for e in mesh.elements() {
        for simplex in &e.sub_simplices {
            let ids: Vec<String> = simplex.iter().map(|i| i.to_string()).collect();
            writeln!(s, "{} {}", simplex.len(), ids.join(" ")).unwrap();
        }
    }
    writeln!(s, "CELL_TYPES {n_cells}").unwrap();
    let cell_type = if dim == 2 { 5 } else { 10 };
    for _ in 0..n_cells {
        writeln!(s, "{cell_type}").unwrap();
    }
    writeln!(s, "CELL_DATA {n_cells}").unwrap();
    writeln!(s, "SCALARS element int 1").unwrap();
    writeln!(s, "LOOKUP_TABLE default").unwrap();
    for (k, e) in mesh.elements().iter().enumerate() {
        for _ in &e.sub_simplices {
            writeln!(s, "{k}").unwrap();
        }
    }
    writeln!(s, "POINT_DATA {}", mesh.vertices().len()).unwrap();
    writeln!(s, "VECTORS displacement double").unwrap();
    for u in &f.displacement {
        writeln!(s, "{} {} {}", u[0], u[1], u[2]).unwrap();
    }
    writeln!(s, "SCALARS displacement_magnitude double 1").unwrap();
    writeln!(s, "LOOKUP_TABLE default").unwrap();
    for u in &f.displacement {
        writeln!(s, "{}", (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()).unwrap();
    }
    for (j, pj) in f.pressures.iter().enumerate() {
        writeln!(s, "SCALARS pressure_{} double 1", j + 1).unwrap();
        writeln!(s, "LOOKUP_TABLE default").unwrap();
        for v in pj {
            writeln!(s, "{v}").unwrap();
        }
    }
    s
}

pub fn write_fields(disc: &Discretization, state: &TransientState, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, fields_to_string(disc, state))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assembly::PenaltyConfig;
    use crate::mesh::{agglomerate_mesh, build_structured_mesh, BoundaryConditions, BoxDomain};
    use crate::model::MpetParameters;

    fn setup() -> Discretization {
        let base = build_structured_mesh(&BoxDomain::unit(2), &[4, 4], 2).unwrap();
        let mesh = Arc::new(agglomerate_mesh(&base, 5, 4).unwrap());
        let mut raw = MpetParameters::brain_tissue();
        raw.networks[1].alpha = 0.3;
        let params = raw.validate(2).unwrap();
        Discretization::new(mesh, 1, 2, params, BoundaryConditions::all_dirichlet(2), PenaltyConfig::default()).unwrap()
    }

    /// Minimal reader for the sections written above.
    fn section<'a>(text: &'a str, header: &str, n: usize) -> Vec<&'a str> {
        let mut lines = text.lines().skip_while(|l| !l.starts_with(header));
        lines.next().expect("section present");
        let mut out: Vec<&str> = lines.collect();
        if out.first() == Some(&"LOOKUP_TABLE default") {
            out.remove(0);
        }
        out.truncate(n);
        out
    }

    #[test]
    fn zero_state_and_layout() {
        let disc = setup();
        let state = TransientState::zeros(disc.n_u(), 2 * disc.n_p());
        let text = fields_to_string(&disc, &state);
        let nv = disc.mesh.vertices().len();
        let nc = disc.mesh.n_sub_simplices();
        assert!(text.contains(&format!("CELLS {nc} {}", 4 * nc)));
        assert_eq!(section(&text, "CELL_TYPES", nc).iter().filter(|l| **l == "5").count(), nc);
        for name in ["SCALARS displacement_magnitude", "SCALARS pressure_1", "SCALARS pressure_2"] {
            let vals = section(&text, name, nv);
            assert_eq!(vals.len(), nv);
            assert!(vals.iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
        }
        let points = section(&text, "POINTS", nv);
        for (line, v) in points.iter().zip(disc.mesh.vertices()) {
            let xs: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            for k in 0..3 {
                assert!((xs[k] - v[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_fields_are_sampled_exactly_and_output_is_deterministic() {
        let disc = setup();
        let u = disc.space_u.project(2, |x| [x[0] + 2.0 * x[1], -x[0], 0.0]).unwrap();
        let p1 = disc.space_p.project(2, |x| [x[0] * x[1], 0.0, 0.0]).unwrap();
        let p2 = disc.space_p.project(2, |x| [1.0 - x[1], 0.0, 0.0]).unwrap();
        let state = TransientState {
            t: 0.5,
            u: u.clone(),
            p: [p1, p2].concat(),
            z: vec![0.0; u.len()],
            a: vec![0.0; u.len()],
        };
        let f = sample_at_vertices(&disc, &state);
        for (v, x) in disc.mesh.vertices().iter().enumerate() {
            assert!((f.displacement[v][0] - (x[0] + 2.0 * x[1])).abs() < 1e-10);
            assert!((f.displacement[v][1] + x[0]).abs() < 1e-10);
            assert!((f.pressures[0][v] - x[0] * x[1]).abs() < 1e-10);
            assert!((f.pressures[1][v] - (1.0 - x[1])).abs() < 1e-10);
        }
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a/state.vtk");
        let b = dir.path().join("b.vtk");
        write_fields(&disc, &state, &a).unwrap();
        write_fields(&disc, &state, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
