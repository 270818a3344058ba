//! Physical coefficients of the MPET system.
//!
//! Coefficients are constant in space. [`MpetParameters`] is the raw,
//! serializable record; [`CheckedParameters`] is obtained through
//! [`MpetParameters::validate`] and caches the constants the penalty terms need.

use std::ops::Deref;

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Tensor;

/// Permeability of one network: isotropic `k I` or a full tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Permeability {
    Isotropic(f64),
    Tensor(Vec<Vec<f64>>),
}

impl Permeability {
    /// Permeability as a 3x3 tensor, zero outside the leading `dim x dim` block.
    pub fn tensor(&self, dim: usize) -> Tensor {
        let mut t = [[0.0; 3]; 3];
        match self {
            Permeability::Isotropic(k) => {
                for (i, row) in t.iter_mut().enumerate().take(dim) {
                    row[i] = *k;
                }
            }
            Permeability::Tensor(rows) => {
                for i in 0..dim.min(rows.len()) {
                    for j in 0..dim.min(rows[i].len()) {
                        t[i][j] = rows[i][j];
                    }
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParameters {
    /// Biot-Willis coefficient.
    pub alpha: f64,
    /// Storage coefficient.
    pub c: f64,
    pub permeability: Permeability,
    /// Fluid viscosity.
    pub viscosity: f64,
    /// Transfer coefficient to the external environment.
    #[serde(default)]
    pub beta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpetParameters {
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    pub networks: Vec<NetworkParameters>,
    /// Inter-network transfer coefficients; symmetric with zero diagonal.
    pub beta: Vec<Vec<f64>>,
}

impl MpetParameters {
    /// Parameters of the 3D verification case: four identical networks with
    /// transfer between networks 1-2 and 3-4.
    pub fn cube_verification() -> Self {
        let net = NetworkParameters {
            alpha: 0.25,
            c: 0.1,
            permeability: Permeability::Isotropic(1.0),
            viscosity: 1.0,
            beta_e: 0.0,
        };
        let mut beta = vec![vec![0.0; 4]; 4];
        for (a, b) in [(0, 1), (2, 3)] {
            beta[a][b] = 1.0;
            beta[b][a] = 1.0;
        }
        MpetParameters {
            rho: 1.0,
            lambda: 1.0,
            mu: 1.0,
            networks: vec![net; 4],
            beta,
        }
    }

    /// Brain-tissue scale parameters of the 2D case (two networks).
    pub fn brain_tissue() -> Self {
        let net = |alpha| NetworkParameters {
            alpha,
            c: 1e-6,
            permeability: Permeability::Isotropic(3.5e-11),
            viscosity: 3.5e-3,
            beta_e: 0.0,
        };
        MpetParameters {
            rho: 1000.0,
            lambda: 505.0,
            mu: 216.0,
            networks: vec![net(0.49), net(0.51)],
            beta: vec![vec![0.0, 1e-7], vec![1e-7, 0.0]],
        }
    }

    pub fn n_networks(&self) -> usize {
        self.networks.len()
    }

    pub fn validate(&self, dim: usize) -> Result<CheckedParameters> {
        if dim != 2 && dim != 3 {
            return Err(Error::param("dim", format!("must be 2 or 3, got {dim}")));
        }
        positive("rho", self.rho)?;
        positive("mu", self.mu)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        let nj = self.networks.len();
        if nj == 0 {
            return Err(Error::param("networks", "at least one network is required"));
        }
        let mut k_max = Vec::with_capacity(nj);
        let mut diffusion = Vec::with_capacity(nj);
        for (j, net) in self.networks.iter().enumerate() {
            let name = |f: &str| format!("networks[{j}].{f}");
            finite(&name("alpha"), net.alpha)?;
            positive(&name("c"), net.c)?;
            positive(&name("viscosity"), net.viscosity)?;
            if !(net.beta_e >= 0.0 && net.beta_e.is_finite()) {
                return Err(Error::param(name("beta_e"), format!("must be >= 0, got {}", net.beta_e)));
            }
            if let Permeability::Tensor(rows) = &net.permeability {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::param(name("permeability"), format!("tensor must be {dim}x{dim}")));
                }
            }
            let k = net.permeability.tensor(dim);
            let (lmin, lmax) = sym_eigen_range(&k, dim).ok_or_else(|| {
                Error::param(name("permeability"), "tensor must be symmetric")
            })?;
            if !(lmin > 0.0) {
                return Err(Error::param(
                    name("permeability"),
                    format!("eigenvalues must be > 0, smallest is {lmin}"),
                ));
            }
            k_max.push(lmax);
            let mut d = k;
            for row in d.iter_mut() {
                for v in row.iter_mut() {
                    *v /= net.viscosity;
                }
            }
            diffusion.push(d);
        }
        if self.beta.len() != nj || self.beta.iter().any(|r| r.len() != nj) {
            return Err(Error::param("beta", format!("must be a {nj}x{nj} matrix")));
        }
        for a in 0..nj {
            if self.beta[a][a] != 0.0 {
                return Err(Error::param(format!("beta[{a}][{a}]"), "diagonal entries must be 0"));
            }
            for b in 0..nj {
                let v = self.beta[a][b];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::param(format!("beta[{a}][{b}]"), format!("must be >= 0, got {v}")));
                }
                if v != self.beta[b][a] {
                    return Err(Error::param(format!("beta[{a}][{b}]"), "matrix must be symmetric"));
                }
            }
        }
        let c_tilde_e = (2.0 * self.mu).max(dim as f64 * self.lambda + 2.0 * self.mu);
        Ok(CheckedParameters {
            params: self.clone(),
            dim,
            c_tilde_e,
            k_max,
            diffusion,
        })
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

fn sym_eigen_range(t: &Tensor, dim: usize) -> Option<(f64, f64)> {
    let scale = t.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..dim {
        for j in 0..i {
            if (t[i][j] - t[j][i]).abs() > 1e-12 * scale {
                return None;
            }
        }
    }
    let eig: Vec<f64> = if dim == 2 {
        Matrix2::new(t[0][0], t[0][1], t[1][0], t[1][1])
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        Matrix3::from_fn(|i, j| t[i][j])
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lmin, lmax))
}

/// Validated parameters together with the derived constants.
#[derive(Debug, Clone)]
pub struct CheckedParameters {
    params: MpetParameters,
    dim: usize,
    c_tilde_e: f64,
    k_max: Vec<f64>,
    diffusion: Vec<Tensor>,
}

impl CheckedParameters {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &MpetParameters {
        &self.params
    }

    /// Largest eigenvalue of the isotropic elasticity tensor,
    /// `max(2 mu, d lambda + 2 mu)`.
    pub fn c_tilde_e(&self) -> f64 {
        self.c_tilde_e
    }

    /// Largest eigenvalue of the permeability of network `j`.
    pub fn k_max(&self, j: usize) -> f64 {
        self.k_max[j]
    }

    /// `K_j / mu_j`.
    pub fn diffusion(&self, j: usize) -> &Tensor {
        &self.diffusion[j]
    }

    /// Copy with every Biot-Willis coefficient set to zero (pure elastodynamics).
    pub fn without_coupling(&self) -> Self {
        let mut out = self.clone();
        for n in &mut out.params.networks {
            n.alpha = 0.0;
        }
        out
    }
}

impl Deref for CheckedParameters {
    type Target = MpetParameters;

    fn deref(&self) -> &MpetParameters {
        &self.params
    }
}
