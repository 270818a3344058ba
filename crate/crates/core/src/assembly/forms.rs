//! Bilinear forms: mass, SIPG elasticity, SIPG Darcy, pressure/displacement
//! coupling and inter-network transfer.
//!
//! Volume terms are integrated element by element; face terms loop over the
//! sides of each face and fill the `(test side, trial side)` blocks. Local
//! triplet lists are produced in parallel and concatenated in element/face
//! order before the deterministic merge.

use rayon::prelude::*;

use super::{sides, Discretization, Side};
use crate::basis::DgSpace;
use crate::error::Result;
use crate::geometry::Point;
use crate::model::CheckedParameters;
use crate::quadrature::{element_rule, face_rule};
use crate::sparse::{CsrMatrix, Triplet};

/// Basis values and gradients of one element at one point.
struct Eval {
    vals: Vec<f64>,
    grads: Vec<Point>,
}

fn eval(space: &DgSpace, elem: usize, x: &Point) -> Eval {
    let n = space.local_dim();
    let mut e = Eval {
        vals: vec![0.0; n],
        grads: vec![[0.0; 3]; n],
    };
    space.eval_into(elem, x, &mut e.vals, &mut e.grads);
    e
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Scatters a dense local block (row-major, `rows x cols`) into triplets.
fn push_block(out: &mut Vec<Triplet>, row0: usize, col0: usize, cols: usize, block: &[f64]) {
    for (k, v) in block.iter().enumerate() {
        out.push((row0 + k / cols, col0 + k % cols, *v));
    }
}

fn merge(nrows: usize, ncols: usize, parts: Vec<Vec<Triplet>>) -> CsrMatrix {
    CsrMatrix::from_triplets(nrows, ncols, parts.into_iter().flatten().collect())
}

/// Weighted mass matrix `(w phi_j, phi_i)`, block diagonal per element and
/// per component.
pub fn assemble_mass(space: &DgSpace, weight: f64, order: usize) -> Result<CsrMatrix> {
    let n = space.local_dim();
    let nc = space.n_components();
    let parts = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|e| -> Result<Vec<Triplet>> {
            let rule = element_rule(space.mesh(), e, order)?;
            let mut local = vec![0.0; n * n];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let ev = eval(space, e, x);
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] += weight * w * ev.vals[i] * ev.vals[j];
                    }
                }
            }
            let mut out = Vec::with_capacity(nc * n * n);
            for c in 0..nc {
                let d = space.dof(e, c, 0);
                push_block(&mut out, d, d, n, &local);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(space.n_dofs(), space.n_dofs(), parts))
}

/// Traction `sigma(phi_a e_c) n` of every vector basis function, indexed
/// `[a * dim + c]`.
fn basis_tractions(params: &CheckedParameters, ev: &Eval, n: &Point, dim: usize) -> Vec<Point> {
    let (lambda, mu) = (params.lambda, params.mu);
    let mut out = Vec::with_capacity(ev.grads.len() * dim);
    for g in &ev.grads {
        let gn = dot(g, n);
        for c in 0..dim {
            let mut t = [0.0; 3];
            for k in 0..dim {
                t[k] = mu * (if k == c { gn } else { 0.0 } + g[k] * n[c]) + lambda * g[c] * n[k];
            }
            out.push(t);
        }
    }
    out
}

/// SIPG elasticity matrix `K_u`.
pub fn assemble_elastic_stiffness(disc: &Discretization) -> Result<CsrMatrix> {
    let space = &disc.space_u;
    let mesh = space.mesh();
    let dim = disc.dim();
    let n = space.local_dim();
    let nd = n * dim;
    let (lambda, mu) = (disc.params.lambda, disc.params.mu);
    let order = disc.quad_order();

    let volume = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| -> Result<Vec<Triplet>> {
            let rule = element_rule(mesh, e, order)?;
            let mut local = vec![0.0; nd * nd];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let ev = eval(space, e, x);
                for te in 0..dim {
                    for b in 0..n {
                        let gb = &ev.grads[b];
                        let row = (te * n + b) * nd;
                        for c in 0..dim {
                            for a in 0..n {
                                let ga = &ev.grads[a];
                                let mut v = mu * ga[te] * gb[c] + lambda * ga[c] * gb[te];
                                if te == c {
                                    v += mu * dot(ga, gb);
                                }
                                local[row + c * n + a] += w * v;
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(nd * nd);
            let d = space.dof(e, 0, 0);
            push_block(&mut out, d, d, nd, &local);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let faces = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| -> Result<Vec<Triplet>> {
            if !disc.displacement_face(f) {
                return Ok(Vec::new());
            }
            let face = &mesh.faces()[f];
            let nrm = face.normal;
            let eta = disc.eta(f);
            let sd: Vec<Side> = sides(face);
            let ns = sd.len();
            let rule = face_rule(mesh, f, order)?;
            let mut blocks = vec![vec![0.0; nd * nd]; ns * ns];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let evs: Vec<Eval> = sd.iter().map(|s| eval(space, s.elem, x)).collect();
                let trs: Vec<Vec<Point>> = evs.iter().map(|ev| basis_tractions(&disc.params, ev, &nrm, dim)).collect();
                for (si, s) in sd.iter().enumerate() {
                    for (ti, t) in sd.iter().enumerate() {
                        let block = &mut blocks[si * ns + ti];
                        let (es, et) = (&evs[si], &evs[ti]);
                        for te in 0..dim {
                            for b in 0..n {
                                let row = (te * n + b) * nd;
                                let phib = es.vals[b];
                                for c in 0..dim {
                                    let jump_dot = 0.5 * (if c == te { 1.0 } else { 0.0 } + nrm[c] * nrm[te]);
                                    for a in 0..n {
                                        let phia = et.vals[a];
                                        let pen = eta * t.sign * s.sign * jump_dot * phia * phib;
                                        let cons = t.weight * s.sign * phib * trs[ti][a * dim + c][te];
                                        let symm = t.sign * phia * s.weight * trs[si][b * dim + te][c];
                                        block[row + c * n + a] += w * (pen - cons - symm);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(ns * ns * nd * nd);
            for (si, s) in sd.iter().enumerate() {
                for (ti, t) in sd.iter().enumerate() {
                    push_block(&mut out, space.dof(s.elem, 0, 0), space.dof(t.elem, 0, 0), nd, &blocks[si * ns + ti]);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut parts = volume;
    parts.extend(faces);
    Ok(merge(space.n_dofs(), space.n_dofs(), parts))
}

fn apply(d: &[[f64; 3]; 3], g: &Point) -> Point {
    [dot(&d[0], g), dot(&d[1], g), dot(&d[2], g)]
}

/// SIPG Darcy matrix `A_Pj` of network `j`.
pub fn assemble_pressure_stiffness(disc: &Discretization, j: usize) -> Result<CsrMatrix> {
    let space = &disc.space_p;
    let mesh = space.mesh();
    let n = space.local_dim();
    let d = *disc.params.diffusion(j);
    let order = disc.quad_order();

    let volume = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| -> Result<Vec<Triplet>> {
            let rule = element_rule(mesh, e, order)?;
            let mut local = vec![0.0; n * n];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let ev = eval(space, e, x);
                let dg: Vec<Point> = ev.grads.iter().map(|g| apply(&d, g)).collect();
                for b in 0..n {
                    for a in 0..n {
                        local[b * n + a] += w * dot(&dg[a], &ev.grads[b]);
                    }
                }
            }
            let mut out = Vec::with_capacity(n * n);
            let o = space.dof(e, 0, 0);
            push_block(&mut out, o, o, n, &local);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let faces = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| -> Result<Vec<Triplet>> {
            if !disc.pressure_face(j, f) {
                return Ok(Vec::new());
            }
            let face = &mesh.faces()[f];
            let nrm = face.normal;
            let zeta = disc.zeta(j, f);
            let sd = sides(face);
            let ns = sd.len();
            let rule = face_rule(mesh, f, order)?;
            let mut blocks = vec![vec![0.0; n * n]; ns * ns];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let evs: Vec<Eval> = sd.iter().map(|s| eval(space, s.elem, x)).collect();
                let fluxes: Vec<Vec<f64>> = evs
                    .iter()
                    .map(|ev| ev.grads.iter().map(|g| dot(&apply(&d, g), &nrm)).collect())
                    .collect();
                for (si, s) in sd.iter().enumerate() {
                    for (ti, t) in sd.iter().enumerate() {
                        let block = &mut blocks[si * ns + ti];
                        for b in 0..n {
                            let psib = evs[si].vals[b];
                            for a in 0..n {
                                let psia = evs[ti].vals[a];
                                let pen = zeta * s.sign * t.sign * psia * psib;
                                let cons = t.weight * fluxes[ti][a] * s.sign * psib;
                                let symm = t.sign * psia * s.weight * fluxes[si][b];
                                block[b * n + a] += w * (pen - cons - symm);
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(ns * ns * n * n);
            for (si, s) in sd.iter().enumerate() {
                for (ti, t) in sd.iter().enumerate() {
                    push_block(&mut out, space.dof(s.elem, 0, 0), space.dof(t.elem, 0, 0), n, &blocks[si * ns + ti]);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut parts = volume;
    parts.extend(faces);
    Ok(merge(space.n_dofs(), space.n_dofs(), parts))
}

/// Coupling matrix `B_j` with entries `B_j(psi_i, phi_k)`: rows are pressure
/// basis functions, columns displacement basis functions. Face terms act on
/// interior faces and on the Dirichlet faces of network `j`.
pub fn assemble_coupling_b(disc: &Discretization, j: usize) -> Result<CsrMatrix> {
    let (sq, su) = (&disc.space_p, &disc.space_u);
    let mesh = sq.mesh();
    let dim = disc.dim();
    let nq = sq.local_dim();
    let nu = su.local_dim();
    let nd = nu * dim;
    let alpha = disc.params.networks[j].alpha;
    let order = disc.quad_order();
    if alpha == 0.0 {
        return Ok(CsrMatrix::zeros(sq.n_dofs(), su.n_dofs()));
    }

    let volume = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| -> Result<Vec<Triplet>> {
            let rule = element_rule(mesh, e, order)?;
            let mut local = vec![0.0; nq * nd];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let eq = eval(sq, e, x);
                let eu = eval(su, e, x);
                for b in 0..nq {
                    for c in 0..dim {
                        for a in 0..nu {
                            local[b * nd + c * nu + a] += w * alpha * eq.vals[b] * eu.grads[a][c];
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(nq * nd);
            push_block(&mut out, sq.dof(e, 0, 0), su.dof(e, 0, 0), nd, &local);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let faces = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| -> Result<Vec<Triplet>> {
            if !disc.pressure_face(j, f) {
                return Ok(Vec::new());
            }
            let face = &mesh.faces()[f];
            let nrm = face.normal;
            let sd = sides(face);
            let ns = sd.len();
            let rule = face_rule(mesh, f, order)?;
            let mut blocks = vec![vec![0.0; nq * nd]; ns * ns];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let eqs: Vec<Eval> = sd.iter().map(|s| eval(sq, s.elem, x)).collect();
                let eus: Vec<Eval> = sd.iter().map(|s| eval(su, s.elem, x)).collect();
                for (si, s) in sd.iter().enumerate() {
                    for (ti, t) in sd.iter().enumerate() {
                        let block = &mut blocks[si * ns + ti];
                        for b in 0..nq {
                            // -alpha {psi} [[phi e_c]] : I = -alpha w_S psi s_T phi n_c
                            let avg = s.weight * eqs[si].vals[b];
                            for c in 0..dim {
                                for a in 0..nu {
                                    block[b * nd + c * nu + a] -= w * alpha * avg * t.sign * eus[ti].vals[a] * nrm[c];
                                }
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(ns * ns * nq * nd);
            for (si, s) in sd.iter().enumerate() {
                for (ti, t) in sd.iter().enumerate() {
                    push_block(&mut out, sq.dof(s.elem, 0, 0), su.dof(t.elem, 0, 0), nd, &blocks[si * ns + ti]);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut parts = volume;
    parts.extend(faces);
    Ok(merge(sq.n_dofs(), su.n_dofs(), parts))
}

/// Transfer part of `K_p`: diagonal blocks `(sum_k beta_jk + beta_e_j) M`,
/// off-diagonal blocks `-beta_jk M`, with `M` the unweighted pressure mass.
pub fn assemble_transfer_coupling(space: &DgSpace, params: &CheckedParameters, order: usize) -> Result<CsrMatrix> {
    let nj = params.n_networks();
    let np = space.n_dofs();
    let mass = assemble_mass(space, 1.0, order)?;
    let mut t = Vec::new();
    for a in 0..nj {
        let diag: f64 = params.beta[a].iter().sum::<f64>() + params.networks[a].beta_e;
        for b in 0..nj {
            let coef = if a == b { diag } else { -params.beta[a][b] };
            if coef != 0.0 {
                t.extend(mass.triplets().map(|(i, k, v)| (a * np + i, b * np + k, coef * v)));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(nj * np, nj * np, t))
}
