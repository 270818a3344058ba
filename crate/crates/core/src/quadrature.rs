//! Simplex quadrature by collapsed-coordinate (Duffy) products of
//! Gauss-Jacobi rules, and their mapping onto the sub-tessellation of a
//! polytopic element or onto a face simplex.
//!
//! A rule of order `k` integrates every polynomial of total degree `<= k`
//! exactly; all weights are positive.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::PolyMesh;

/// Highest supported polynomial exactness.
pub const MAX_ORDER: usize = 40;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight `(1 - t)^alpha`
/// (Golub-Welsch).
pub fn gauss_jacobi(n: usize, alpha: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let a = alpha as f64;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a;
        jac[(k, k)] = if k == 0 {
            // beta = 0: (beta - alpha) / (alpha + beta + 2)
            -a / (a + 2.0)
        } else {
            -(a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a;
            let b = (4.0 * m * (m + a) * m * (m + a) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    // mu0 = int_{-1}^{1} (1 - t)^alpha dt
    let mu0 = 2f64.powi(alpha as i32 + 1) / (a + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

fn build_reference(dim: usize, order: usize) -> QuadRule {
    let n = order / 2 + 1;
    let (gl_x, gl_w) = gauss_jacobi(n, 0);
    let mut rule = QuadRule::default();
    match dim {
        1 => {
            for (x, w) in gl_x.iter().zip(&gl_w) {
                rule.points.push([(1.0 + x) / 2.0, 0.0, 0.0]);
                rule.weights.push(w / 2.0);
            }
        }
        2 => {
            let (j1_x, j1_w) = gauss_jacobi(n, 1);
            for (a, wa) in j1_x.iter().zip(&j1_w) {
                let xi1 = (1.0 + a) / 2.0;
                for (b, wb) in gl_x.iter().zip(&gl_w) {
                    let xi2 = (1.0 + b) / 2.0;
                    rule.points.push([xi1, xi2 * (1.0 - xi1), 0.0]);
                    rule.weights.push(wa * wb / 8.0);
                }
            }
        }
        3 => {
            let (j2_x, j2_w) = gauss_jacobi(n, 2);
            let (j1_x, j1_w) = gauss_jacobi(n, 1);
            for (a, wa) in j2_x.iter().zip(&j2_w) {
                let xi1 = (1.0 + a) / 2.0;
                for (b, wb) in j1_x.iter().zip(&j1_w) {
                    let xi2 = (1.0 + b) / 2.0;
                    for (c, wc) in gl_x.iter().zip(&gl_w) {
                        let xi3 = (1.0 + c) / 2.0;
                        rule.points.push([
                            xi1,
                            xi2 * (1.0 - xi1),
                            xi3 * (1.0 - xi1) * (1.0 - xi2),
                        ]);
                        rule.weights.push(wa * wb * wc / 64.0);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    rule
}

/// Rule on the reference `dim`-simplex with vertices `0, e_1, .., e_dim`.
pub fn reference_rule(dim: usize, order: usize) -> Result<Arc<QuadRule>> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::QuadratureOrder(order));
    }
    assert!((1..=3).contains(&dim), "reference simplex dimension {dim}");
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<QuadRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    Ok(guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(build_reference(dim, order)))
        .clone())
}

fn reference_measure(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => unreachable!(),
    }
}

/// Appends the mapped reference rule for the simplex spanned by `verts`
/// (`verts.len() - 1` is the simplex dimension) to `out`.
pub fn push_simplex_rule(
    ambient_dim: usize,
    verts: &[Point],
    reference: &QuadRule,
    out: &mut QuadRule,
) {
    let sdim = verts.len() - 1;
    let measure = if sdim == ambient_dim {
        geometry::simplex_signed_measure(ambient_dim, verts).abs()
    } else {
        geometry::facet_measure(ambient_dim, verts)
    };
    let jac = measure / reference_measure(sdim);
    let edges: Vec<Point> = verts[1..]
        .iter()
        .map(|v| geometry::sub(v, &verts[0]))
        .collect();
    for (xi, w) in reference.points.iter().zip(&reference.weights) {
        let mut x = verts[0];
        for (k, e) in edges.iter().enumerate() {
            x = geometry::add(&x, &geometry::scale(e, xi[k]));
        }
        out.points.push(x);
        out.weights.push(w * jac);
    }
}

/// Volume rule on element `elem`, built over its sub-simplices.
pub fn element_rule(mesh: &PolyMesh, elem: usize, order: usize) -> Result<QuadRule> {
    let dim = mesh.dim();
    let reference = reference_rule(dim, order)?;
    let element = &mesh.elements()[elem];
    let mut rule = QuadRule::default();
    let mut verts = Vec::with_capacity(dim + 1);
    for simplex in &element.sub_simplices {
        verts.clear();
        verts.extend(simplex.iter().map(|&v| mesh.vertices()[v]));
        push_simplex_rule(dim, &verts, &reference, &mut rule);
    }
    Ok(rule)
}

/// Rule on face `face` (a segment in 2D, a triangle in 3D).
pub fn face_rule(mesh: &PolyMesh, face: usize, order: usize) -> Result<QuadRule> {
    let dim = mesh.dim();
    let reference = reference_rule(dim - 1, order)?;
    let verts: Vec<Point> = mesh.faces()[face]
        .vertices
        .iter()
        .map(|&v| mesh.vertices()[v])
        .collect();
    let mut rule = QuadRule::default();
    push_simplex_rule(dim, &verts, &reference, &mut rule);
    Ok(rule)
}
