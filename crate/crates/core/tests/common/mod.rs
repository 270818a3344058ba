//! Brute-force reference integrator shared by the integration tests.
//!
//! Every form is rebuilt entry by entry from the basis functions with its own
//! Gauss-Legendre/collapsed-simplex quadrature and with jumps and averages
//! written as full tensors. Nothing here reuses the assembly code paths.

#![allow(dead_code)]

use std::sync::Arc;

use mpet_polydg::assembly::{Discretization, PenaltyConfig};
use mpet_polydg::geometry::Point;
use mpet_polydg::mesh::{agglomerate_mesh, build_structured_mesh, BoundaryConditions, BoxDomain, FaceNeighbors, PolyMesh};
use nalgebra::DMatrix;

/// Gauss-Legendre nodes and weights on `[0, 1]` by Newton iteration.
pub fn gauss01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let (qn, qn1) = if n == 1 { (z, 1.0) } else { (q1, q0) };
                let d = n as f64 * (z * qn - qn1) / (z * z - 1.0);
                w[i] = 1.0 / ((1.0 - z * z) * d * d);
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
    }
    (x, w)
}

fn lerp(a: &Point, b: &Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])]
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn len(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Collapsed tensor rule on a segment, triangle or tetrahedron given by its
/// vertices (embedded in 2D or 3D).
pub fn simplex_rule(v: &[Point], n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss01(n);
    let mut out = Vec::new();
    match v.len() {
        2 => {
            let l = len(&sub(&v[1], &v[0]));
            for (a, wa) in x.iter().zip(&w) {
                out.push((lerp(&v[0], &v[1], *a), wa * l));
            }
        }
        3 => {
            let area = 0.5 * len(&cross(&sub(&v[1], &v[0]), &sub(&v[2], &v[0])));
            for (a, wa) in x.iter().zip(&w) {
                for (b, wb) in x.iter().zip(&w) {
                    let edge = lerp(&v[1], &v[2], *b);
                    out.push((lerp(&v[0], &edge, *a), wa * wb * a * 2.0 * area));
                }
            }
        }
        4 => {
            let vol = dot(&sub(&v[1], &v[0]), &cross(&sub(&v[2], &v[0]), &sub(&v[3], &v[0]))).abs() / 6.0;
            for (a, wa) in x.iter().zip(&w) {
                for (b, wb) in x.iter().zip(&w) {
                    for (c, wc) in x.iter().zip(&w) {
                        let tri_edge = lerp(&v[2], &v[3], *c);
                        let face = lerp(&v[1], &tri_edge, *b);
                        out.push((lerp(&v[0], &face, *a), wa * wb * wc * a * a * b * 6.0 * vol));
                    }
                }
            }
        }
        k => panic!("unsupported simplex with {k} vertices"),
    }
    out
}

/// Quadrature points of element `e` as the union of its sub-simplices.
pub fn element_points(mesh: &PolyMesh, e: usize, n: usize) -> Vec<(Point, f64)> {
    let verts = mesh.vertices();
    mesh.elements()[e]
        .sub_simplices
        .iter()
        .flat_map(|s| simplex_rule(&s.iter().map(|&i| verts[i]).collect::<Vec<_>>(), n))
        .collect()
}

pub fn face_points(mesh: &PolyMesh, f: usize, n: usize) -> Vec<(Point, f64)> {
    let verts = mesh.vertices();
    simplex_rule(&mesh.faces()[f].vertices.iter().map(|&i| verts[i]).collect::<Vec<_>>(), n)
}

/// Scalar basis values and gradients of element `e`.
pub fn basis(space: &mpet_polydg::basis::DgSpace, e: usize, x: &Point) -> (Vec<f64>, Vec<Point>) {
    let n = space.local_dim();
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 3]; n];
    space.eval_into(e, x, &mut v, &mut g);
    (v, g)
}

type Tensor = [[f64; 3]; 3];

/// One vector-valued displacement basis function restricted to an element:
/// value and gradient `G[c][k] = d v_c / d x_k`.
struct VecShape {
    val: Point,
    grad: Tensor,
}

fn vec_shapes(disc: &Discretization, e: usize, x: &Point) -> Vec<(usize, VecShape)> {
    let (v, g) = basis(&disc.space_u, e, x);
    let mut out = Vec::new();
    for c in 0..disc.dim() {
        for a in 0..v.len() {
            let mut val = [0.0; 3];
            val[c] = v[a];
            let mut grad = [[0.0; 3]; 3];
            grad[c] = g[a];
            out.push((disc.space_u.dof(e, c, a), VecShape { val, grad }));
        }
    }
    out
}

fn stress(disc: &Discretization, g: &Tensor) -> Tensor {
    let (lambda, mu) = (disc.params.lambda, disc.params.mu);
    let tr = g[0][0] + g[1][1] + g[2][2];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            s[i][k] = mu * (g[i][k] + g[k][i]) + if i == k { lambda * tr } else { 0.0 };
        }
    }
    s
}

fn ddot(a: &Tensor, b: &Tensor) -> f64 {
    (0..3).map(|i| (0..3).map(|k| a[i][k] * b[i][k]).sum::<f64>()).sum()
}

fn sym_outer(v: &Point, n: &Point) -> Tensor {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            t[i][k] = 0.5 * (v[i] * n[k] + n[i] * v[k]);
        }
    }
    t
}

fn scale(t: &Tensor, s: f64) -> Tensor {
    let mut o = *t;
    o.iter_mut().flatten().for_each(|v| *v *= s);
    o
}

/// `(element, outward normal, average weight)` for each side of face `f`.
fn sides(mesh: &PolyMesh, f: usize) -> Vec<(usize, Point, f64)> {
    let face = &mesh.faces()[f];
    let n = face.normal;
    match face.neighbors {
        FaceNeighbors::Interior { owner, neighbor } => {
            vec![(owner, n, 0.5), (neighbor, [-n[0], -n[1], -n[2]], 0.5)]
        }
        FaceNeighbors::Boundary { owner, .. } => vec![(owner, n, 1.0)],
    }
}

/// Harmonic mean of the adjacent element diameters (the diameter itself on
/// boundary faces), from the vertex coordinates.
pub fn face_h(mesh: &PolyMesh, f: usize) -> f64 {
    let diam = |e: usize| {
        let vs = &mesh.elements()[e].vertices;
        let mut d: f64 = 0.0;
        for a in vs {
            for b in vs {
                d = d.max(len(&sub(&mesh.vertices()[*a], &mesh.vertices()[*b])));
            }
        }
        d
    };
    match mesh.faces()[f].neighbors {
        FaceNeighbors::Interior { owner, neighbor } => {
            let (a, b) = (diam(owner), diam(neighbor));
            2.0 * a * b / (a + b)
        }
        FaceNeighbors::Boundary { owner, .. } => diam(owner),
    }
}

pub struct Reference {
    pub m_u: DMatrix<f64>,
    pub k_u: DMatrix<f64>,
    pub a_p: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub m_p: DMatrix<f64>,
    pub transfer: DMatrix<f64>,
}

const NQ: usize = 8;

/// Builds every matrix of the semi-discrete system by brute force.
pub fn reference_matrices(disc: &Discretization, penalty: &PenaltyConfig) -> Reference {
    let mesh = disc.mesh.clone();
    let dim = disc.dim() as f64;
    let nu = disc.space_u.n_dofs();
    let nq = disc.space_p.n_dofs();
    let nj = disc.n_networks();
    let params = &disc.params;
    let (p, q) = (disc.p() as f64, disc.q() as f64);

    let mut m_u = DMatrix::zeros(nu, nu);
    let mut k_u = DMatrix::zeros(nu, nu);
    let mut mass_q = DMatrix::zeros(nq, nq);
    let mut a_p = vec![DMatrix::zeros(nq, nq); nj];
    let mut b = vec![DMatrix::zeros(nq, nu); nj];

    for e in 0..mesh.n_elements() {
        for (x, w) in element_points(&mesh, e, NQ) {
            let us = vec_shapes(disc, e, &x);
            for (i, vi) in &us {
                let si = stress(disc, &vi.grad);
                for (k, vk) in &us {
                    m_u[(*i, *k)] += w * params.rho * dot(&vi.val, &vk.val);
                    k_u[(*i, *k)] += w * ddot(&si, &vk.grad);
                }
            }
            let (pv, pg) = basis(&disc.space_p, e, &x);
            for a in 0..pv.len() {
                let ia = disc.space_p.dof(e, 0, a);
                for c in 0..pv.len() {
                    let ic = disc.space_p.dof(e, 0, c);
                    mass_q[(ia, ic)] += w * pv[a] * pv[c];
                    for j in 0..nj {
                        let d = params.diffusion(j);
                        let dg: Point = [dot(&d[0], &pg[c]), dot(&d[1], &pg[c]), dot(&d[2], &pg[c])];
                        a_p[j][(ia, ic)] += w * dot(&dg, &pg[a]);
                    }
                }
                for (k, vk) in &us {
                    let div = vk.grad[0][0] + vk.grad[1][1] + vk.grad[2][2];
                    for j in 0..nj {
                        b[j][(ia, *k)] += w * params.networks[j].alpha * pv[a] * div;
                    }
                }
            }
        }
    }

    let c_tilde = 2.0 * params.mu + dim * params.lambda;
    for f in 0..mesh.faces().len() {
        let sd = sides(&mesh, f);
        let h = face_h(&mesh, f);
        let eta = penalty.eta0 * c_tilde * p * p / h;
        for (x, w) in face_points(&mesh, f, NQ) {
            // Displacement: full-tensor jumps [[v]] = sum_s sym(v_s (x) n_s).
            if disc.displacement_face(f) {
                let mut shapes = Vec::new();
                for (e, n, avg) in &sd {
                    for (i, s) in vec_shapes(disc, *e, &x) {
                        shapes.push((i, sym_outer(&s.val, n), scale(&stress(disc, &s.grad), *avg)));
                    }
                }
                for (i, ji, ai) in &shapes {
                    for (k, jk, ak) in &shapes {
                        k_u[(*i, *k)] += w * (eta * ddot(jk, ji) - ddot(ak, ji) - ddot(jk, ai));
                    }
                }
            }
            for j in 0..nj {
                if !disc.pressure_face(j, f) {
                    continue;
                }
                let perm = params.networks[j].permeability.tensor(disc.dim());
                let kj = nalgebra::Matrix3::from_fn(|r, c| perm[r][c]).symmetric_eigen().eigenvalues.max();
                let z = penalty.effective_z(j, params);
                let zeta = z * kj / params.networks[j].viscosity.sqrt() * q * q / h;
                let d = params.diffusion(j);
                // Scalar jumps [p] = sum_s p_s n_s, averages {D grad p}.
                let mut shapes: Vec<(usize, Point, Point, f64)> = Vec::new();
                for (e, n, avg) in &sd {
                    let (pv, pg) = basis(&disc.space_p, *e, &x);
                    for a in 0..pv.len() {
                        let jump = [pv[a] * n[0], pv[a] * n[1], pv[a] * n[2]];
                        let flux = [
                            avg * dot(&d[0], &pg[a]),
                            avg * dot(&d[1], &pg[a]),
                            avg * dot(&d[2], &pg[a]),
                        ];
                        shapes.push((disc.space_p.dof(*e, 0, a), jump, flux, avg * pv[a]));
                    }
                }
                for (ia, ja, fa, _) in &shapes {
                    for (ic, jc, fc, _) in &shapes {
                        a_p[j][(*ia, *ic)] += w * (zeta * dot(jc, ja) - dot(fc, ja) - dot(jc, fa));
                    }
                }
                // -alpha {q} [[v]] : I with [[v]] : I = sum_s v_s . n_s.
                let alpha = params.networks[j].alpha;
                for (ia, _, _, qa) in &shapes {
                    for (e, n, _) in &sd {
                        for (k, s) in vec_shapes(disc, *e, &x) {
                            b[j][(*ia, k)] -= w * alpha * qa * dot(&s.val, n);
                        }
                    }
                }
            }
        }
    }

    let mut m_p = DMatrix::zeros(nj * nq, nj * nq);
    let mut transfer = DMatrix::zeros(nj * nq, nj * nq);
    for j in 0..nj {
        for k in 0..nj {
            let coef = if j == k {
                params.beta[j].iter().sum::<f64>() + params.networks[j].beta_e
            } else {
                -params.beta[j][k]
            };
            transfer.view_mut((j * nq, k * nq), (nq, nq)).copy_from(&(&mass_q * coef));
        }
        m_p.view_mut((j * nq, j * nq), (nq, nq)).copy_from(&(&mass_q * params.networks[j].c));
    }
    Reference {
        m_u,
        k_u,
        a_p,
        b,
        m_p,
        transfer,
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Small meshes of at most four elements: two triangles, four agglomerated
/// polygons and four agglomerated polyhedra.
pub fn tiny_meshes() -> Vec<(&'static str, Arc<PolyMesh>)> {
    let square = build_structured_mesh(&BoxDomain::unit(2), &[1, 1], 2).unwrap();
    let fine = build_structured_mesh(&BoxDomain::unit(2), &[4, 4], 2).unwrap();
    let cube = build_structured_mesh(&BoxDomain::unit(3), &[1, 1, 1], 3).unwrap();
    vec![
        ("two triangles", Arc::new(square)),
        ("four polygons", Arc::new(agglomerate_mesh(&fine, 4, 7).unwrap())),
        ("four polyhedra", Arc::new(agglomerate_mesh(&cube, 4, 1).unwrap())),
    ]
}

/// Boundary conditions with both Dirichlet and Neumann sides for every field.
pub fn mixed_conditions(n_networks: usize) -> BoundaryConditions {
    let mut bc = BoundaryConditions::all_dirichlet(n_networks);
    bc.displacement.insert(2, mpet_polydg::mesh::BcType::Neumann);
    for (j, m) in bc.pressure.iter_mut().enumerate() {
        m.insert(3 + j as u32 % 2, mpet_polydg::mesh::BcType::Neumann);
    }
    bc
}
