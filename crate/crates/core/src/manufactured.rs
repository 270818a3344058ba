//! Closed-form solutions used for verification, with analytically derived
//! forcing.
//!
//! Every field is `s(t) * sum_k c_k f_k(x) g_k(y) h_k(z)` with one-dimensional
//! factors from [`Factor`], so values, gradients and Hessians are exact and the
//! forcing terms follow from them without symbolic algebra.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Point, Tensor};
use crate::model::CheckedParameters;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    One,
    Sin(f64),
    Cos(f64),
    Pow(u32),
}

impl Factor {
    /// Value, first and second derivative.
    fn eval(self, x: f64) -> [f64; 3] {
        match self {
            Factor::One => [1.0, 0.0, 0.0],
            Factor::Sin(k) => {
                let (s, c) = (k * x).sin_cos();
                [s, k * c, -k * k * s]
            }
            Factor::Cos(k) => {
                let (s, c) = (k * x).sin_cos();
                [c, -k * s, -k * k * c]
            }
            Factor::Pow(n) => {
                let nf = n as f64;
                let d1 = if n >= 1 { nf * x.powi(n as i32 - 1) } else { 0.0 };
                let d2 = if n >= 2 { nf * (nf - 1.0) * x.powi(n as i32 - 2) } else { 0.0 };
                [x.powi(n as i32), d1, d2]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    /// `sin(omega t)`
    Sin(f64),
    /// `a0 + a1 t + a2 t^2`
    Quadratic([f64; 3]),
}

impl TimeProfile {
    /// Value, first and second derivative at `t`.
    pub fn eval(self, t: f64) -> [f64; 3] {
        match self {
            TimeProfile::Sin(w) => {
                let (s, c) = (w * t).sin_cos();
                [s, w * c, -w * w * s]
            }
            TimeProfile::Quadratic([a0, a1, a2]) => [a0 + a1 * t + a2 * t * t, a1 + 2.0 * a2 * t, 2.0 * a2],
        }
    }
}

/// Scalar function of time. The data of a case are combinations
/// `sum_k T_k(t) v_k(x)` over the modes of its time profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    Sin(f64),
    Cos(f64),
    Monomial(u32),
}

impl TimeMode {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TimeMode::Sin(w) => (w * t).sin(),
            TimeMode::Cos(w) => (w * t).cos(),
            TimeMode::Monomial(n) => t.powi(n as i32),
        }
    }
}

impl TimeProfile {
    /// Modes spanning the profile and all its derivatives.
    pub fn modes(self) -> Vec<TimeMode> {
        match self {
            TimeProfile::Sin(w) => vec![TimeMode::Sin(w), TimeMode::Cos(w)],
            TimeProfile::Quadratic(_) => (0..3).map(TimeMode::Monomial).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: [Factor; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub time: TimeProfile,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Spatial {
    value: f64,
    grad: Point,
    hess: Tensor,
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField {
            time: TimeProfile::Quadratic([0.0; 3]),
            terms: Vec::new(),
        }
    }

    fn spatial(&self, x: &Point) -> Spatial {
        let mut out = Spatial::default();
        for term in &self.terms {
            let f = [
                term.factors[0].eval(x[0]),
                term.factors[1].eval(x[1]),
                term.factors[2].eval(x[2]),
            ];
            let c = term.coeff;
            out.value += c * f[0][0] * f[1][0] * f[2][0];
            for a in 0..3 {
                // derivative orders along each axis
                let mut ord = [0usize; 3];
                ord[a] = 1;
                out.grad[a] += c * f[0][ord[0]] * f[1][ord[1]] * f[2][ord[2]];
                for b in 0..3 {
                    let mut ord = [0usize; 3];
                    ord[a] += 1;
                    ord[b] += 1;
                    out.hess[a][b] += c * f[0][ord[0]] * f[1][ord[1]] * f[2][ord[2]];
                }
            }
        }
        out
    }

    pub fn value(&self, x: &Point, t: f64) -> f64 {
        self.time.eval(t)[0] * self.spatial(x).value
    }

    /// `d^k/dt^k` of the field, `k <= 2`.
    pub fn time_derivative(&self, k: usize, x: &Point, t: f64) -> f64 {
        self.time.eval(t)[k] * self.spatial(x).value
    }

    pub fn gradient(&self, x: &Point, t: f64) -> Point {
        let s = self.time.eval(t)[0];
        self.spatial(x).grad.map(|g| s * g)
    }
}

/// A manufactured MPET solution on a box domain together with the parameters
/// it was built for.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    name: String,
    params: CheckedParameters,
    displacement: Vec<ScalarField>,
    pressures: Vec<ScalarField>,
}

fn term(coeff: f64, fx: Factor, fy: Factor, fz: Factor) -> Term {
    Term {
        coeff,
        factors: [fx, fy, fz],
    }
}

impl ManufacturedCase {
    pub fn new(
        name: impl Into<String>,
        params: CheckedParameters,
        displacement: Vec<ScalarField>,
        pressures: Vec<ScalarField>,
    ) -> Result<Self> {
        let name = name.into();
        if displacement.len() != params.dim() {
            return Err(Error::CaseMismatch {
                case: "custom",
                expected: format!("{} displacement components", params.dim()),
                actual: displacement.len().to_string(),
            });
        }
        if pressures.len() != params.n_networks() {
            return Err(Error::CaseMismatch {
                case: "custom",
                expected: format!("{} pressure fields", params.n_networks()),
                actual: pressures.len().to_string(),
            });
        }
        Ok(ManufacturedCase {
            name,
            params,
            displacement,
            pressures,
        })
    }

    fn require(case: &'static str, params: &CheckedParameters, dim: usize, nj: usize) -> Result<()> {
        if params.dim() != dim {
            return Err(Error::CaseMismatch {
                case,
                expected: format!("dimension {dim}"),
                actual: format!("dimension {}", params.dim()),
            });
        }
        if params.n_networks() != nj {
            return Err(Error::CaseMismatch {
                case,
                expected: format!("{nj} networks"),
                actual: format!("{} networks", params.n_networks()),
            });
        }
        Ok(())
    }

    /// 3D case with four networks:
    /// `u = sin(pi t) (-cos(pi x) cos(pi y), sin(pi x) sin(pi y), z)`,
    /// `p1 = p3 = pi sin(pi t) sin(pi (x + y)) z`,
    /// `p2 = p4 = pi sin(pi t) sin(pi (x - y)) z`.
    pub fn tc1(params: CheckedParameters) -> Result<Self> {
        Self::require("TC1", &params, 3, 4)?;
        let time = TimeProfile::Sin(PI);
        use Factor::*;
        let u = vec![
            ScalarField {
                time,
                terms: vec![term(-1.0, Cos(PI), Cos(PI), One)],
            },
            ScalarField {
                time,
                terms: vec![term(1.0, Sin(PI), Sin(PI), One)],
            },
            ScalarField {
                time,
                terms: vec![term(1.0, One, One, Pow(1))],
            },
        ];
        let plus = ScalarField {
            time,
            terms: vec![term(PI, Sin(PI), Cos(PI), Pow(1)), term(PI, Cos(PI), Sin(PI), Pow(1))],
        };
        let minus = ScalarField {
            time,
            terms: vec![term(PI, Sin(PI), Cos(PI), Pow(1)), term(-PI, Cos(PI), Sin(PI), Pow(1))],
        };
        let p = vec![plus.clone(), minus.clone(), plus, minus];
        Self::new("TC1", params, u, p)
    }

    /// 2D case with two networks:
    /// `u = sin(pi t) (-cos(pi x) cos(pi y), sin(pi x) sin(pi y))`,
    /// `p1 = 1e4 pi sin(pi t) sin(pi (x + y))`, `p2 = 1e4 pi sin(pi t) sin(pi (x - y))`.
    pub fn tc2(params: CheckedParameters) -> Result<Self> {
        Self::require("TC2", &params, 2, 2)?;
        let time = TimeProfile::Sin(PI);
        use Factor::*;
        let u = vec![
            ScalarField {
                time,
                terms: vec![term(-1.0, Cos(PI), Cos(PI), One)],
            },
            ScalarField {
                time,
                terms: vec![term(1.0, Sin(PI), Sin(PI), One)],
            },
        ];
        let a = 1e4 * PI;
        let p = vec![
            ScalarField {
                time,
                terms: vec![term(a, Sin(PI), Cos(PI), One), term(a, Cos(PI), Sin(PI), One)],
            },
            ScalarField {
                time,
                terms: vec![term(a, Sin(PI), Cos(PI), One), term(-a, Cos(PI), Sin(PI), One)],
            },
        ];
        Self::new("TC2", params, u, p)
    }

    /// Quadratic-in-space, quadratic-in-time solution, exactly representable by
    /// spaces of degree >= 2.
    pub fn polynomial(params: CheckedParameters) -> Result<Self> {
        use Factor::*;
        let dim = params.dim();
        let time = TimeProfile::Quadratic([1.0, 0.5, 2.0]);
        let mut u = vec![
            ScalarField {
                time,
                terms: vec![term(1.0, Pow(2), One, One), term(0.5, One, Pow(1), One), term(0.1, One, One, One)],
            },
            ScalarField {
                time,
                terms: vec![term(1.0, Pow(1), Pow(1), One), term(-0.3, One, Pow(2), One)],
            },
        ];
        if dim == 3 {
            u[0].terms.push(term(0.2, One, One, Pow(2)));
            u.push(ScalarField {
                time,
                terms: vec![term(0.4, Pow(1), One, Pow(1)), term(-0.2, One, Pow(1), One)],
            });
        }
        let p = (0..params.n_networks())
            .map(|j| ScalarField {
                time,
                terms: vec![
                    term(1.0 + j as f64, Pow(1), One, One),
                    term(0.5, One, Pow(2), One),
                    term(-0.25 * j as f64, Pow(1), Pow(1), One),
                ],
            })
            .collect();
        Self::new("polynomial", params, u, p)
    }

    /// Identically zero solution.
    pub fn zero(params: CheckedParameters) -> Result<Self> {
        let u = vec![ScalarField::zero(); params.dim()];
        let p = vec![ScalarField::zero(); params.n_networks()];
        Self::new("zero", params, u, p)
    }

    /// Distinct time modes of all fields; forcing and boundary data lie in
    /// their span.
    pub fn time_modes(&self) -> Vec<TimeMode> {
        let mut modes: Vec<TimeMode> = Vec::new();
        for f in self.displacement.iter().chain(&self.pressures) {
            if f.terms.is_empty() {
                continue;
            }
            for m in f.time.modes() {
                if !modes.contains(&m) {
                    modes.push(m);
                }
            }
        }
        modes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &CheckedParameters {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn n_networks(&self) -> usize {
        self.pressures.len()
    }

    fn vector(&self, order: usize, x: &Point, t: f64) -> Point {
        let mut v = [0.0; 3];
        for (c, f) in self.displacement.iter().enumerate() {
            v[c] = f.time_derivative(order, x, t);
        }
        v
    }

    pub fn displacement(&self, x: &Point, t: f64) -> Point {
        self.vector(0, x, t)
    }

    pub fn velocity(&self, x: &Point, t: f64) -> Point {
        self.vector(1, x, t)
    }

    pub fn acceleration(&self, x: &Point, t: f64) -> Point {
        self.vector(2, x, t)
    }

    /// Row `i` is the gradient of the displacement component `i`.
    pub fn displacement_gradient(&self, x: &Point, t: f64) -> Tensor {
        let mut g = [[0.0; 3]; 3];
        for (c, f) in self.displacement.iter().enumerate() {
            g[c] = f.gradient(x, t);
        }
        g
    }

    /// Elastic stress `2 mu eps(u) + lambda div(u) I`.
    pub fn stress(&self, x: &Point, t: f64) -> Tensor {
        stress_from_gradient(&self.params, &self.displacement_gradient(x, t))
    }

    pub fn pressure(&self, j: usize, x: &Point, t: f64) -> f64 {
        self.pressures[j].value(x, t)
    }

    pub fn pressure_rate(&self, j: usize, x: &Point, t: f64) -> f64 {
        self.pressures[j].time_derivative(1, x, t)
    }

    pub fn pressure_gradient(&self, j: usize, x: &Point, t: f64) -> Point {
        self.pressures[j].gradient(x, t)
    }

    /// `f = rho u_tt - div(sigma(u)) + sum_k alpha_k grad(p_k)`.
    pub fn body_force(&self, x: &Point, t: f64) -> Point {
        let dim = self.dim();
        let (lambda, mu) = (self.params.lambda, self.params.mu);
        let sp: Vec<Spatial> = self.displacement.iter().map(|f| f.spatial(x)).collect();
        let s: Vec<f64> = self.displacement.iter().map(|f| f.time.eval(t)[0]).collect();
        let acc = self.acceleration(x, t);
        let mut f = [0.0; 3];
        for i in 0..dim {
            // div(sigma)_i = mu lap(u_i) + (mu + lambda) d_i div(u)
            let lap: f64 = (0..dim).map(|k| s[i] * sp[i].hess[k][k]).sum();
            let grad_div: f64 = (0..dim).map(|k| s[k] * sp[k].hess[i][k]).sum();
            let div_sigma = mu * lap + (mu + lambda) * grad_div;
            f[i] = self.params.rho * acc[i] - div_sigma;
        }
        for (k, net) in self.params.networks.iter().enumerate() {
            let g = self.pressure_gradient(k, x, t);
            for i in 0..dim {
                f[i] += net.alpha * g[i];
            }
        }
        f
    }

    /// `g_j = c_j p_j_t + alpha_j div(u_t) - div(K_j / mu_j grad p_j)
    ///        + sum_k beta_jk (p_j - p_k) + beta_e_j p_j`.
    pub fn source(&self, j: usize, x: &Point, t: f64) -> f64 {
        let dim = self.dim();
        let net = &self.params.networks[j];
        let field = &self.pressures[j];
        let sp = field.spatial(x);
        let [s, ds, _] = field.time.eval(t);
        let d = self.params.diffusion(j);
        let mut div_flux = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                div_flux += d[a][b] * sp.hess[a][b];
            }
        }
        let div_ut: f64 = self
            .displacement
            .iter()
            .enumerate()
            .map(|(c, f)| f.time.eval(t)[1] * f.spatial(x).grad[c])
            .sum();
        let pj = s * sp.value;
        let mut g = net.c * ds * sp.value + net.alpha * div_ut - s * div_flux + net.beta_e * pj;
        for k in 0..self.n_networks() {
            g += self.params.beta[j][k] * (pj - self.pressure(k, x, t));
        }
        g
    }

    /// Neumann traction `sigma(u) n - sum_k alpha_k p_k n`.
    pub fn traction(&self, x: &Point, n: &Point, t: f64) -> Point {
        let sigma = self.stress(x, t);
        let ptot: f64 = (0..self.n_networks())
            .map(|k| self.params.networks[k].alpha * self.pressure(k, x, t))
            .sum();
        let mut h = [0.0; 3];
        for i in 0..self.dim() {
            h[i] = (0..3).map(|k| sigma[i][k] * n[k]).sum::<f64>() - ptot * n[i];
        }
        h
    }

    /// Neumann flux `(K_j / mu_j) grad p_j . n`.
    pub fn flux(&self, j: usize, x: &Point, n: &Point, t: f64) -> f64 {
        let d = self.params.diffusion(j);
        let g = self.pressure_gradient(j, x, t);
        (0..3).map(|a| (0..3).map(|b| d[a][b] * g[b]).sum::<f64>() * n[a]).sum()
    }
}

pub fn stress_from_gradient(params: &CheckedParameters, g: &Tensor) -> Tensor {
    let dim = params.dim();
    let div: f64 = (0..dim).map(|k| g[k][k]).sum();
    let mut s = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            s[i][j] = params.mu * (g[i][j] + g[j][i]);
        }
        s[i][i] += params.lambda * div;
    }
    s
}
