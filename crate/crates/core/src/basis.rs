//! Modal discontinuous polynomial spaces on polytopic elements.
//!
//! The raw basis on an element is the set of tensor Legendre products
//! `L_a(xi) L_b(eta) L_c(zeta)` with `a + b + c <= degree`, where `xi, eta, zeta`
//! are coordinates scaled to the element bounding box `[-1, 1]^d`. The
//! orthonormal basis is obtained by repeated Cholesky
//! orthonormalization of the raw Gram matrix computed with sub-tessellation
//! quadrature, so no reference-element map is needed.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::PolyMesh;
use crate::quadrature::element_rule;

pub const MAX_DEGREE: usize = 6;

/// Number of polynomials of total degree `<= degree` in `dim` variables.
pub fn scalar_dim(degree: usize, dim: usize) -> usize {
    // C(degree + dim, dim)
    (1..=dim).fold(1, |acc, k| acc * (degree + k) / k)
}

fn exponents(degree: usize, dim: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(scalar_dim(degree, dim));
    for total in 0..=degree {
        match dim {
            2 => {
                for a in (0..=total).rev() {
                    out.push([a, total - a, 0]);
                }
            }
            3 => {
                for a in (0..=total).rev() {
                    for b in (0..=total - a).rev() {
                        out.push([a, b, total - a - b]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    out
}

/// Legendre polynomials and derivatives up to `n` at `x`.
#[inline]
fn legendre(n: usize, x: f64, p: &mut [f64], dp: &mut [f64]) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if n == 0 {
        return;
    }
    p[1] = x;
    dp[1] = 1.0;
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
}

#[derive(Debug, Clone)]
struct ElementBasis {
    center: Point,
    inv_half: Point,
    /// Row-major `local_dim x local_dim` lower-triangular change of basis.
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Arc<PolyMesh>,
    degree: usize,
    n_components: usize,
    local_dim: usize,
    exponents: Vec<[usize; 3]>,
    orthonormal: bool,
    elements: Vec<ElementBasis>,
}

impl DgSpace {
    /// Orthonormal space of the given degree with `n_components` copies of the
    /// scalar basis (1 for pressures, `dim` for displacements).
    pub fn new(mesh: Arc<PolyMesh>, degree: usize, n_components: usize) -> Result<Self> {
        Self::build(mesh, degree, n_components, true)
    }

    /// Space spanned by the raw (non-orthonormalized) scaled Legendre products.
    pub fn new_raw(mesh: Arc<PolyMesh>, degree: usize, n_components: usize) -> Result<Self> {
        Self::build(mesh, degree, n_components, false)
    }

    fn build(mesh: Arc<PolyMesh>, degree: usize, n_components: usize, orthonormal: bool) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Degree {
                degree,
                reason: "polynomial degree must be at least 1",
            });
        }
        if degree > MAX_DEGREE {
            return Err(Error::Degree {
                degree,
                reason: "polynomial degree above the supported maximum of 6",
            });
        }
        let dim = mesh.dim();
        if n_components != 1 && n_components != dim {
            return Err(Error::Mesh(format!(
                "a space needs 1 or {dim} components, got {n_components}"
            )));
        }
        let exps = exponents(degree, dim);
        let local_dim = exps.len();
        let identity: Vec<f64> = (0..local_dim * local_dim)
            .map(|k| if k / local_dim == k % local_dim { 1.0 } else { 0.0 })
            .collect();
        let mut space = DgSpace {
            mesh: mesh.clone(),
            degree,
            n_components,
            local_dim,
            exponents: exps,
            orthonormal,
            elements: mesh
                .elements()
                .iter()
                .map(|e| {
                    let half = e.bounding_box.half_extent();
                    let mut inv_half = [0.0; 3];
                    for k in 0..dim {
                        inv_half[k] = 1.0 / half[k];
                    }
                    ElementBasis {
                        center: e.bounding_box.center(),
                        inv_half,
                        coeffs: identity.clone(),
                    }
                })
                .collect(),
        };
        if orthonormal {
            let coeffs: Vec<Vec<f64>> = (0..mesh.n_elements())
                .into_par_iter()
                .map(|e| space.orthonormalize(e))
                .collect::<Result<_>>()?;
            for (eb, c) in space.elements.iter_mut().zip(coeffs) {
                eb.coeffs = c;
            }
        }
        Ok(space)
    }

    fn orthonormalize(&self, elem: usize) -> Result<Vec<f64>> {
        // Repeated Cholesky passes, each against a freshly integrated Gram
        // matrix of the current basis; two passes usually suffice.
        let n = self.local_dim;
        let mut coeffs = DMatrix::<f64>::identity(n, n);
        for _ in 0..4 {
            let flat: Vec<f64> = (0..n * n).map(|k| coeffs[(k / n, k % n)]).collect();
            let gram = self.gram_with(elem, &flat)?;
            if (&gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-13 {
                break;
            }
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::Mesh(format!("element {elem}: singular basis Gram matrix")))?;
            coeffs = chol
                .l()
                .solve_lower_triangular(&coeffs)
                .expect("non-singular Cholesky factor");
        }
        Ok((0..n * n).map(|k| coeffs[(k / n, k % n)]).collect())
    }

    /// Gram matrix of the current element basis (identity for an orthonormal space).
    pub fn gram(&self, elem: usize) -> Result<DMatrix<f64>> {
        self.gram_with(elem, &self.elements[elem].coeffs)
    }

    fn gram_with(&self, elem: usize, coeffs: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.local_dim;
        let rule = element_rule(&self.mesh, elem, 2 * self.degree)?;
        let mut g = DMatrix::zeros(n, n);
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 3]; n];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            self.eval_with(elem, coeffs, x, &mut vals, &mut grads);
            for i in 0..n {
                for j in 0..=i {
                    g[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        Ok(g)
    }

    pub fn mesh(&self) -> &Arc<PolyMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Scalar basis size per element, `C(degree + d, d)`.
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Degrees of freedom per element (all components).
    pub fn element_dofs(&self) -> usize {
        self.local_dim * self.n_components
    }

    pub fn n_dofs(&self) -> usize {
        self.element_dofs() * self.mesh.n_elements()
    }

    pub fn dof_range(&self, elem: usize) -> Range<usize> {
        let n = self.element_dofs();
        elem * n..(elem + 1) * n
    }

    /// Global index of scalar basis function `i` of component `comp` on `elem`.
    #[inline]
    pub fn dof(&self, elem: usize, comp: usize, i: usize) -> usize {
        elem * self.element_dofs() + comp * self.local_dim + i
    }

    /// Evaluates all scalar basis functions of `elem` and their gradients at `x`.
    pub fn eval_into(&self, elem: usize, x: &Point, vals: &mut [f64], grads: &mut [Point]) {
        self.eval_with(elem, &self.elements[elem].coeffs, x, vals, grads)
    }

    fn eval_with(&self, elem: usize, coeffs: &[f64], x: &Point, vals: &mut [f64], grads: &mut [Point]) {
        let dim = self.dim();
        let eb = &self.elements[elem];
        let d = self.degree;
        let mut p = [[0.0; MAX_DEGREE + 1]; 3];
        let mut dp = [[0.0; MAX_DEGREE + 1]; 3];
        for k in 0..dim {
            let xi = (x[k] - eb.center[k]) * eb.inv_half[k];
            legendre(d, xi, &mut p[k], &mut dp[k]);
        }
        let n = self.local_dim;
        let mut raw = [0.0; 84];
        let mut raw_grad = [[0.0; 3]; 84];
        for (r, e) in self.exponents.iter().enumerate() {
            if dim == 2 {
                let (a, b) = (p[0][e[0]], p[1][e[1]]);
                raw[r] = a * b;
                raw_grad[r] = [
                    dp[0][e[0]] * b * eb.inv_half[0],
                    a * dp[1][e[1]] * eb.inv_half[1],
                    0.0,
                ];
            } else {
                let (a, b, c) = (p[0][e[0]], p[1][e[1]], p[2][e[2]]);
                raw[r] = a * b * c;
                raw_grad[r] = [
                    dp[0][e[0]] * b * c * eb.inv_half[0],
                    a * dp[1][e[1]] * c * eb.inv_half[1],
                    a * b * dp[2][e[2]] * eb.inv_half[2],
                ];
            }
        }
        for i in 0..n {
            let row = &coeffs[i * n..(i + 1) * n];
            let mut v = 0.0;
            let mut g = [0.0; 3];
            for j in 0..=i {
                let c = row[j];
                v += c * raw[j];
                g[0] += c * raw_grad[j][0];
                g[1] += c * raw_grad[j][1];
                g[2] += c * raw_grad[j][2];
            }
            vals[i] = v;
            grads[i] = g;
        }
    }

    /// Basis values and gradients at each of `points`.
    pub fn eval_basis(&self, elem: usize, points: &[Point]) -> (Vec<Vec<f64>>, Vec<Vec<Point>>) {
        let n = self.local_dim;
        points
            .iter()
            .map(|x| {
                let mut v = vec![0.0; n];
                let mut g = vec![[0.0; 3]; n];
                self.eval_into(elem, x, &mut v, &mut g);
                (v, g)
            })
            .unzip()
    }

    /// Component values and gradient rows of the field with coefficients `coeffs`.
    pub fn eval_field(&self, coeffs: &[f64], elem: usize, x: &Point) -> ([f64; 3], [[f64; 3]; 3]) {
        let n = self.local_dim;
        let mut vals = [0.0; 84];
        let mut grads = [[0.0; 3]; 84];
        self.eval_into(elem, x, &mut vals[..n], &mut grads[..n]);
        let mut v = [0.0; 3];
        let mut g = [[0.0; 3]; 3];
        for c in 0..self.n_components {
            for i in 0..n {
                let a = coeffs[self.dof(elem, c, i)];
                v[c] += a * vals[i];
                for k in 0..3 {
                    g[c][k] += a * grads[i][k];
                }
            }
        }
        (v, g)
    }

    /// L2 projection of a (vector-valued) function onto the space, using a
    /// quadrature rule of order `2 * degree + extra_order`.
    pub fn project(&self, extra_order: usize, f: impl Fn(&Point) -> [f64; 3] + Sync) -> Result<Vec<f64>> {
        let n = self.local_dim;
        let nc = self.n_components;
        let blocks: Vec<Vec<f64>> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| -> Result<Vec<f64>> {
                let rule = element_rule(&self.mesh, e, 2 * self.degree + extra_order)?;
                let mut rhs = vec![0.0; n * nc];
                let mut vals = vec![0.0; n];
                let mut grads = vec![[0.0; 3]; n];
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    self.eval_into(e, x, &mut vals, &mut grads);
                    let fx = f(x);
                    for c in 0..nc {
                        for i in 0..n {
                            rhs[c * n + i] += w * fx[c] * vals[i];
                        }
                    }
                }
                if !self.orthonormal {
                    let chol = self
                        .gram(e)?
                        .cholesky()
                        .ok_or_else(|| Error::Mesh(format!("element {e}: singular Gram matrix")))?;
                    for c in 0..nc {
                        let b = DVector::from_column_slice(&rhs[c * n..(c + 1) * n]);
                        rhs[c * n..(c + 1) * n].copy_from_slice(chol.solve(&b).as_slice());
                    }
                }
                Ok(rhs)
            })
            .collect::<Result<_>>()?;
        Ok(blocks.concat())
    }
}
