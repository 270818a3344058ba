use super::{BoundaryTag, PolyMesh};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Axis-aligned box domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub min: Point,
    pub max: Point,
}

impl BoxDomain {
    /// Unit square (`dim = 2`) or unit cube (`dim = 3`).
    pub fn unit(dim: usize) -> Self {
        let mut max = [0.0; 3];
        max[..dim].iter_mut().for_each(|m| *m = 1.0);
        BoxDomain { min: [0.0; 3], max }
    }

    /// Side tag of a boundary point: `2k + 1` on `x_k = min`, `2k + 2` on `x_k = max`.
    pub fn side_tag(&self, dim: usize, p: &Point) -> BoundaryTag {
        for k in 0..dim {
            let tol = 1e-10 * (self.max[k] - self.min[k]);
            if (p[k] - self.min[k]).abs() <= tol {
                return 2 * k as BoundaryTag + 1;
            }
            if (p[k] - self.max[k]).abs() <= tol {
                return 2 * k as BoundaryTag + 2;
            }
        }
        0
    }
}

/// Structured simplicial mesh of a box: every grid cell is split into two
/// triangles (2D) or six tetrahedra sharing the main cell diagonal (3D).
pub fn build_structured_mesh(domain: &BoxDomain, divisions: &[usize], dim: usize) -> Result<PolyMesh> {
    if dim != 2 && dim != 3 {
        return Err(Error::Mesh(format!("unsupported dimension {dim}")));
    }
    if divisions.len() != dim {
        return Err(Error::Mesh(format!(
            "expected {dim} division counts, got {}",
            divisions.len()
        )));
    }
    if divisions.contains(&0) {
        return Err(Error::Mesh("divisions must be >= 1".into()));
    }
    if (0..dim).any(|k| !(domain.max[k] > domain.min[k])) {
        return Err(Error::Mesh(format!("degenerate box {domain:?}")));
    }
    let n: Vec<usize> = divisions.to_vec();
    let step: Vec<f64> = (0..dim)
        .map(|k| (domain.max[k] - domain.min[k]) / n[k] as f64)
        .collect();

    let mut vertices = Vec::new();
    let mut simplices = Vec::new();
    if dim == 2 {
        let id = |i: usize, j: usize| i + (n[0] + 1) * j;
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                vertices.push([
                    domain.min[0] + i as f64 * step[0],
                    domain.min[1] + j as f64 * step[1],
                    0.0,
                ]);
            }
        }
        for j in 0..n[1] {
            for i in 0..n[0] {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                simplices.push(vec![vec![v00, v10, v11]]);
                simplices.push(vec![vec![v00, v11, v01]]);
            }
        }
    } else {
        let id = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);
        for k in 0..=n[2] {
            for j in 0..=n[1] {
                for i in 0..=n[0] {
                    vertices.push([
                        domain.min[0] + i as f64 * step[0],
                        domain.min[1] + j as f64 * step[1],
                        domain.min[2] + k as f64 * step[2],
                    ]);
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = vec![id(c[0], c[1], c[2])];
                        for axis in perm {
                            c[axis] += 1;
                            tet.push(id(c[0], c[1], c[2]));
                        }
                        simplices.push(vec![tet]);
                    }
                }
            }
        }
    }
    let domain = *domain;
    PolyMesh::from_simplices(dim, vertices, simplices, move |_, c| domain.side_tag(dim, c))
}
