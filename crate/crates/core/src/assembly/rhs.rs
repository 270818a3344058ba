//! Time-dependent right-hand sides `F(t)` and `G(t)`.
//!
//! Quadrature points and basis values are cached at construction, so each
//! evaluation only samples the data. When the data declare a finite set of
//! time modes, the spatial vectors of each mode are recovered once and an
//! evaluation is a short linear combination.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::Discretization;
use crate::data::ProblemData;
use crate::manufactured::TimeMode;
use crate::error::Result;
use crate::geometry::Point;
use crate::mesh::{BoundaryTag, FaceKind};
use crate::quadrature::{element_rule, face_rule};

struct ElementCache {
    points: Vec<Point>,
    weights: Vec<f64>,
    /// `[point][basis]`
    vals_u: Vec<Vec<f64>>,
    vals_p: Vec<Vec<f64>>,
}

struct BoundaryFaceCache {
    owner: usize,
    tag: BoundaryTag,
    normal: Point,
    points: Vec<Point>,
    weights: Vec<f64>,
    vals_u: Vec<Vec<f64>>,
    grads_u: Vec<Vec<Point>>,
    vals_p: Vec<Vec<f64>>,
    grads_p: Vec<Vec<Point>>,
    displacement: FaceKind,
    pressure: Vec<FaceKind>,
    eta: f64,
    zeta: Vec<f64>,
}

pub struct RhsAssembler {
    disc: Discretization,
    data: ProblemData,
    elements: Vec<ElementCache>,
    faces: Vec<BoundaryFaceCache>,
    separated: Option<Separated>,
}

/// `F(t) = sum_k T_k(t) F_k`, likewise for `G`.
struct Separated {
    modes: Vec<TimeMode>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

impl Separated {
    fn eval(&self, t: f64, nf: usize, ng: usize) -> (Vec<f64>, Vec<f64>) {
        let mut f = vec![0.0; nf];
        let mut g = vec![0.0; ng];
        for (k, m) in self.modes.iter().enumerate() {
            let c = m.eval(t);
            f.iter_mut().zip(&self.f[k]).for_each(|(a, b)| *a += c * b);
            g.iter_mut().zip(&self.g[k]).for_each(|(a, b)| *a += c * b);
        }
        (f, g)
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn eval_all(space: &crate::basis::DgSpace, elem: usize, points: &[Point]) -> (Vec<Vec<f64>>, Vec<Vec<Point>>) {
    space.eval_basis(elem, points)
}

impl RhsAssembler {
    pub fn new(disc: &Discretization, data: ProblemData) -> Result<Self> {
        let mesh = disc.mesh.clone();
        let order = disc.quad_order();
        let elements = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| -> Result<ElementCache> {
                let rule = element_rule(&mesh, e, order)?;
                let (vals_u, _) = eval_all(&disc.space_u, e, &rule.points);
                let (vals_p, _) = eval_all(&disc.space_p, e, &rule.points);
                Ok(ElementCache {
                    points: rule.points,
                    weights: rule.weights,
                    vals_u,
                    vals_p,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let boundary: Vec<usize> = mesh.boundary_faces().map(|(i, _)| i).collect();
        let faces = boundary
            .into_par_iter()
            .map(|f| -> Result<BoundaryFaceCache> {
                let face = &mesh.faces()[f];
                let owner = face.neighbors.owner();
                let rule = face_rule(&mesh, f, order)?;
                let (vals_u, grads_u) = eval_all(&disc.space_u, owner, &rule.points);
                let (vals_p, grads_p) = eval_all(&disc.space_p, owner, &rule.points);
                Ok(BoundaryFaceCache {
                    owner,
                    tag: face.tag().expect("boundary face"),
                    normal: face.normal,
                    points: rule.points,
                    weights: rule.weights,
                    vals_u,
                    grads_u,
                    vals_p,
                    grads_p,
                    displacement: disc.classification.displacement[f],
                    pressure: (0..disc.n_networks()).map(|j| disc.classification.pressure[j][f]).collect(),
                    eta: disc.eta(f),
                    zeta: (0..disc.n_networks()).map(|j| disc.zeta(j, f)).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rhs = RhsAssembler {
            disc: disc.clone(),
            data,
            elements,
            faces,
            separated: None,
        };
        rhs.separated = rhs.separate();
        Ok(rhs)
    }

    /// Recovers the mode vectors from samples at as many times as there are
    /// modes, then checks the split against a direct evaluation at another
    /// time. Returns `None` (direct evaluation) if the check fails.
    fn separate(&self) -> Option<Separated> {
        let modes = self.data.time_modes.clone()?;
        let k = modes.len();
        if k == 0 {
            return Some(Separated {
                modes,
                f: Vec::new(),
                g: Vec::new(),
            });
        }
        let w_max = modes
            .iter()
            .map(|m| match m {
                TimeMode::Sin(w) | TimeMode::Cos(w) => w.abs(),
                TimeMode::Monomial(_) => 0.0,
            })
            .fold(1.0, f64::max);
        let scale = std::f64::consts::PI / w_max;
        let times: Vec<f64> = (0..k).map(|i| scale * (0.13 + 0.71 * i as f64 / k as f64)).collect();
        let v = DMatrix::from_fn(k, k, |i, m| modes[m].eval(times[i]));
        let inv = v.try_inverse()?;
        let samples: Vec<(Vec<f64>, Vec<f64>)> = times.iter().map(|&t| self.assemble_direct(t)).collect();
        let combine = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>, m: usize| -> Vec<f64> {
            let n = pick(&samples[0]).len();
            let mut out = vec![0.0; n];
            for (i, s) in samples.iter().enumerate() {
                let c = inv[(m, i)];
                out.iter_mut().zip(pick(s)).for_each(|(a, b)| *a += c * b);
            }
            out
        };
        let sep = Separated {
            f: (0..k).map(|m| combine(&|s| &s.0, m)).collect(),
            g: (0..k).map(|m| combine(&|s| &s.1, m)).collect(),
            modes,
        };
        let t_check = scale * 0.977;
        let (f0, g0) = self.assemble_direct(t_check);
        let (f1, g1) = sep.eval(t_check, f0.len(), g0.len());
        let err = rel_diff(&f0, &f1).max(rel_diff(&g0, &g1));
        if err > 1e-11 {
            log::debug!("time-mode split rejected (relative mismatch {err:.2e}); assembling directly");
            return None;
        }
        Some(sep)
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    /// `F(t)` (length `|V|`) and stacked `G(t)` (length `|J| |Q|`).
    pub fn assemble(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.separated {
            Some(sep) => sep.eval(t, self.disc.space_u.n_dofs(), self.disc.n_networks() * self.disc.space_p.n_dofs()),
            None => self.assemble_direct(t),
        }
    }

    /// Quadrature of the data at time `t`, bypassing the mode split.
    pub fn assemble_direct(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let disc = &self.disc;
        let dim = disc.dim();
        let nj = disc.n_networks();
        let (su, sp) = (&disc.space_u, &disc.space_p);
        let (nu_loc, np_loc) = (su.local_dim(), sp.local_dim());
        let np = sp.n_dofs();
        let forcing = &self.data.forcing;

        // Volume terms: element blocks are disjoint, filled in parallel.
        let mut f = vec![0.0; su.n_dofs()];
        let mut g = vec![0.0; nj * np];
        f.par_chunks_mut(su.element_dofs())
            .zip(&self.elements)
            .for_each(|(fe, cache)| {
                for (k, (x, w)) in cache.points.iter().zip(&cache.weights).enumerate() {
                    let body = forcing.body_force(x, t);
                    for c in 0..dim {
                        let wb = w * body[c];
                        if wb != 0.0 {
                            for (a, v) in cache.vals_u[k].iter().enumerate() {
                                fe[c * nu_loc + a] += wb * v;
                            }
                        }
                    }
                }
            });
        g.par_chunks_mut(np).enumerate().for_each(|(j, gj)| {
            gj.par_chunks_mut(np_loc).zip(&self.elements).for_each(|(ge, cache)| {
                for (k, (x, w)) in cache.points.iter().zip(&cache.weights).enumerate() {
                    let ws = w * forcing.source(j, x, t);
                    if ws != 0.0 {
                        for (b, v) in cache.vals_p[k].iter().enumerate() {
                            ge[b] += ws * v;
                        }
                    }
                }
            });
        });

        // Boundary terms: computed per face in parallel, scattered in face order.
        let (lambda, mu) = (disc.params.lambda, disc.params.mu);
        let bd = &self.data.boundary;
        let locals: Vec<(Vec<f64>, Vec<f64>)> = self
            .faces
            .par_iter()
            .map(|fc| {
                let n = &fc.normal;
                let mut fl = vec![0.0; su.element_dofs()];
                let mut gl = vec![0.0; nj * np_loc];
                for (k, (x, w)) in fc.points.iter().zip(&fc.weights).enumerate() {
                    match fc.displacement {
                        FaceKind::Dirichlet => {
                            let gd = bd.displacement(fc.tag, x, t);
                            let gn = dot(&gd, n);
                            for a in 0..nu_loc {
                                let phi = fc.vals_u[k][a];
                                let gr = &fc.grads_u[k][a];
                                let grn = dot(gr, n);
                                let grg = dot(gr, &gd);
                                for e in 0..dim {
                                    let pen = fc.eta * phi * 0.5 * (gd[e] + gn * n[e]);
                                    let cons = mu * (gd[e] * grn + grg * n[e]) + lambda * gr[e] * gn;
                                    fl[e * nu_loc + a] += w * (pen - cons);
                                }
                            }
                        }
                        FaceKind::Neumann => {
                            let h = bd.traction(fc.tag, x, n, t);
                            for a in 0..nu_loc {
                                for e in 0..dim {
                                    fl[e * nu_loc + a] += w * h[e] * fc.vals_u[k][a];
                                }
                            }
                        }
                        FaceKind::Interior => unreachable!(),
                    }
                    for j in 0..nj {
                        let gj = &mut gl[j * np_loc..(j + 1) * np_loc];
                        match fc.pressure[j] {
                            FaceKind::Dirichlet => {
                                let pd = bd.pressure(j, fc.tag, x, t);
                                let d = disc.params.diffusion(j);
                                let alpha = disc.params.networks[j].alpha;
                                let vn = if fc.displacement == FaceKind::Dirichlet && alpha != 0.0 {
                                    dot(&bd.velocity(fc.tag, x, t), n)
                                } else {
                                    0.0
                                };
                                for b in 0..np_loc {
                                    let psi = fc.vals_p[k][b];
                                    let gr = &fc.grads_p[k][b];
                                    let flux: f64 = (0..3).map(|r| dot(&d[r], gr) * n[r]).sum();
                                    gj[b] += w * (fc.zeta[j] * pd * psi - pd * flux - alpha * psi * vn);
                                }
                            }
                            FaceKind::Neumann => {
                                let h = bd.flux(j, fc.tag, x, n, t);
                                for b in 0..np_loc {
                                    gj[b] += w * h * fc.vals_p[k][b];
                                }
                            }
                            FaceKind::Interior => unreachable!(),
                        }
                    }
                }
                (fl, gl)
            })
            .collect();
        for (fc, (fl, gl)) in self.faces.iter().zip(locals) {
            let r = su.dof_range(fc.owner);
            for (dst, v) in f[r].iter_mut().zip(&fl) {
                *dst += v;
            }
            for j in 0..nj {
                let o = j * np + sp.dof(fc.owner, 0, 0);
                for (b, v) in gl[j * np_loc..(j + 1) * np_loc].iter().enumerate() {
                    g[o + b] += v;
                }
            }
        }
        (f, g)
    }
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
