//! Assembly of the semi-discrete PolyDG system.
//!
//! [`Discretization`] bundles the mesh, the two DG spaces, the validated
//! parameters, the face classification and the penalties. [`BlockSystem`]
//! holds the constant matrices and [`RhsAssembler`] evaluates the
//! time-dependent right-hand sides.

mod forms;
mod rhs;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use forms::{
    assemble_coupling_b, assemble_elastic_stiffness, assemble_mass, assemble_pressure_stiffness,
    assemble_transfer_coupling,
};
pub use rhs::RhsAssembler;

use crate::basis::DgSpace;
use crate::error::{Error, Result};
use crate::mesh::{harmonic_mean, BoundaryConditions, Face, FaceClassification, FaceKind, FaceNeighbors, PolyMesh};
use crate::model::CheckedParameters;
use crate::solver::cholesky_succeeds;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    #[serde(default = "default_penalty")]
    pub eta0: f64,
    /// One value per network, or a single value shared by all networks.
    #[serde(default = "default_z")]
    pub z: Vec<f64>,
}

fn default_penalty() -> f64 {
    10.0
}

fn default_z() -> Vec<f64> {
    vec![10.0]
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            eta0: default_penalty(),
            z: default_z(),
        }
    }
}

impl PenaltyConfig {
    pub fn uniform(eta0: f64, z: f64) -> Self {
        PenaltyConfig { eta0, z: vec![z] }
    }

    pub fn validate(&self, n_networks: usize) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::param("penalty.eta0", format!("must be > 0, got {}", self.eta0)));
        }
        if self.z.len() != 1 && self.z.len() != n_networks {
            return Err(Error::param(
                "penalty.z",
                format!("expected 1 or {n_networks} values, got {}", self.z.len()),
            ));
        }
        for (j, z) in self.z.iter().enumerate() {
            if !(*z > 0.0 && z.is_finite()) {
                return Err(Error::param(format!("penalty.z[{j}]"), format!("must be > 0, got {z}")));
            }
        }
        Ok(())
    }

    /// Configured scale of network `j`.
    pub fn z(&self, j: usize) -> f64 {
        if self.z.len() == 1 {
            self.z[0]
        } else {
            self.z[j]
        }
    }

    /// Scale actually used for network `j`: raised to `10 / sqrt(mu_j)` when
    /// smaller, so that `zeta_j >= 10 q^2 (k_j / mu_j) / h` also for tiny
    /// permeabilities.
    pub fn effective_z(&self, j: usize, params: &CheckedParameters) -> f64 {
        self.z(j).max(10.0 / params.networks[j].viscosity.sqrt())
    }
}

/// Displacement penalty `eta0 C_E p^2 / h_F`. Coefficients are constant per
/// element, so the harmonic mean of the two element values is the value itself.
pub fn penalty_eta(mesh: &PolyMesh, face: usize, params: &CheckedParameters, cfg: &PenaltyConfig, p: usize) -> f64 {
    let f = &mesh.faces()[face];
    let c = match f.neighbors {
        FaceNeighbors::Interior { .. } => harmonic_mean(params.c_tilde_e(), params.c_tilde_e()),
        FaceNeighbors::Boundary { .. } => params.c_tilde_e(),
    };
    cfg.eta0 * c * (p * p) as f64 / mesh.face_harmonic_h(face)
}

/// Pressure penalty `z_j (k_j / sqrt(mu_j)) q^2 / h_F` with the effective scale
/// of [`PenaltyConfig::effective_z`].
pub fn penalty_zeta(
    mesh: &PolyMesh,
    face: usize,
    j: usize,
    params: &CheckedParameters,
    cfg: &PenaltyConfig,
    q: usize,
) -> f64 {
    let f = &mesh.faces()[face];
    let k = match f.neighbors {
        FaceNeighbors::Interior { .. } => harmonic_mean(params.k_max(j), params.k_max(j)),
        FaceNeighbors::Boundary { .. } => params.k_max(j),
    };
    cfg.effective_z(j, params) * k / params.networks[j].viscosity.sqrt() * (q * q) as f64 / mesh.face_harmonic_h(face)
}

/// One side of a face as seen by the jump and average operators.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Side {
    pub elem: usize,
    /// `+1` on the owner (the face normal points out of it), `-1` on the neighbor.
    pub sign: f64,
    /// Averaging weight: 1/2 on interior faces, 1 on boundary faces.
    pub weight: f64,
}

pub(crate) fn sides(face: &Face) -> Vec<Side> {
    match face.neighbors {
        FaceNeighbors::Interior { owner, neighbor } => vec![
            Side { elem: owner, sign: 1.0, weight: 0.5 },
            Side { elem: neighbor, sign: -1.0, weight: 0.5 },
        ],
        FaceNeighbors::Boundary { owner, .. } => vec![Side { elem: owner, sign: 1.0, weight: 1.0 }],
    }
}

/// Everything the forms need: mesh, spaces, parameters, boundary
/// classification and penalties.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Arc<PolyMesh>,
    pub space_u: DgSpace,
    pub space_p: DgSpace,
    pub params: CheckedParameters,
    pub bc: BoundaryConditions,
    pub classification: FaceClassification,
    pub penalty: PenaltyConfig,
}

impl Discretization {
    pub fn new(
        mesh: Arc<PolyMesh>,
        p: usize,
        q: usize,
        params: CheckedParameters,
        bc: BoundaryConditions,
        penalty: PenaltyConfig,
    ) -> Result<Self> {
        if mesh.dim() != params.dim() {
            return Err(Error::param(
                "dim",
                format!("mesh is {}D but parameters were validated for {}D", mesh.dim(), params.dim()),
            ));
        }
        penalty.validate(params.n_networks())?;
        if bc.pressure.len() != params.n_networks() {
            return Err(Error::param(
                "boundary.pressure",
                format!("expected {} networks, got {}", params.n_networks(), bc.pressure.len()),
            ));
        }
        if penalty.eta0 < 3.0 {
            log::warn!("eta0 = {} is small; the elastic form may lose coercivity", penalty.eta0);
        }
        for j in 0..params.n_networks() {
            let z_eff = penalty.effective_z(j, &params);
            if z_eff > penalty.z(j) {
                log::info!("network {j}: pressure penalty scale raised from {} to {z_eff:.4e}", penalty.z(j));
            }
        }
        let space_u = DgSpace::new(mesh.clone(), p, mesh.dim())?;
        let space_p = DgSpace::new(mesh.clone(), q, 1)?;
        let classification = FaceClassification::new(&mesh, &bc);
        let disc = Discretization {
            mesh,
            space_u,
            space_p,
            params,
            bc,
            classification,
            penalty,
        };
        crate::quadrature::reference_rule(disc.dim(), disc.error_quad_order())?;
        Ok(disc)
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn n_networks(&self) -> usize {
        self.params.n_networks()
    }

    pub fn p(&self) -> usize {
        self.space_u.degree()
    }

    pub fn q(&self) -> usize {
        self.space_p.degree()
    }

    pub fn n_u(&self) -> usize {
        self.space_u.n_dofs()
    }

    pub fn n_p(&self) -> usize {
        self.space_p.n_dofs()
    }

    /// Quadrature order of all assembled integrals, `2 max(p, q) + 2`.
    pub fn quad_order(&self) -> usize {
        2 * self.p().max(self.q()) + 2
    }

    /// Quadrature order of error integrals, `2 max(p, q) + 4`.
    pub fn error_quad_order(&self) -> usize {
        2 * self.p().max(self.q()) + 4
    }

    pub fn eta(&self, face: usize) -> f64 {
        penalty_eta(&self.mesh, face, &self.params, &self.penalty, self.p())
    }

    pub fn zeta(&self, j: usize, face: usize) -> f64 {
        penalty_zeta(&self.mesh, face, j, &self.params, &self.penalty, self.q())
    }

    /// Faces carrying displacement jump terms: interior and Dirichlet.
    pub fn displacement_face(&self, face: usize) -> bool {
        self.classification.displacement[face] != FaceKind::Neumann
    }

    /// Faces carrying jump terms of network `j`: interior and Dirichlet.
    pub fn pressure_face(&self, j: usize, face: usize) -> bool {
        self.classification.pressure[j][face] != FaceKind::Neumann
    }
}

/// Constant matrices of the semi-discrete system
/// `M_u U'' + K_u U - B^T P = F`, `M_p P' + K_p P + B U' = G`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub m_u: CsrMatrix,
    pub k_u: CsrMatrix,
    /// Per-network coupling blocks `B_j` (`|Q| x |V|`).
    pub b_blocks: Vec<CsrMatrix>,
    /// Stacked `[B_1; ...; B_J]`.
    pub b: CsrMatrix,
    /// Block-diagonal `diag(c_j M)`.
    pub m_p: CsrMatrix,
    /// Per-network SIPG Darcy matrices `A_Pj`.
    pub a_blocks: Vec<CsrMatrix>,
    /// Transfer part of `K_p`.
    pub coupling: CsrMatrix,
    /// `blockdiag(A_Pj) + coupling`.
    pub k_p: CsrMatrix,
}

impl BlockSystem {
    pub fn assemble(disc: &Discretization) -> Result<Self> {
        let nj = disc.n_networks();
        let m_u = assemble_mass(&disc.space_u, disc.params.rho, disc.quad_order())?;
        let k_u = assemble_elastic_stiffness(disc)?;
        let b_blocks = (0..nj).map(|j| assemble_coupling_b(disc, j)).collect::<Result<Vec<_>>>()?;
        let b = CsrMatrix::block(&b_blocks.iter().map(|m| vec![Some(m)]).collect::<Vec<_>>());
        let mass_q = assemble_mass(&disc.space_p, 1.0, disc.quad_order())?;
        let weighted: Vec<CsrMatrix> = disc.params.networks.iter().map(|n| mass_q.scaled(n.c)).collect();
        let m_p = CsrMatrix::block_diagonal(&weighted.iter().collect::<Vec<_>>());
        let a_blocks = (0..nj)
            .map(|j| assemble_pressure_stiffness(disc, j))
            .collect::<Result<Vec<_>>>()?;
        let coupling = assemble_transfer_coupling(&disc.space_p, &disc.params, disc.quad_order())?;
        let k_p = CsrMatrix::lin_comb(
            1.0,
            &CsrMatrix::block_diagonal(&a_blocks.iter().collect::<Vec<_>>()),
            1.0,
            &coupling,
        );
        Ok(BlockSystem {
            m_u,
            k_u,
            b_blocks,
            b,
            m_p,
            a_blocks,
            coupling,
            k_p,
        })
    }

    /// Rejects penalties too small for `K_u` to be positive definite. Only
    /// meaningful when some displacement Dirichlet boundary exists.
    pub fn check_coercivity(&self, disc: &Discretization) -> Result<()> {
        if !disc.classification.has_displacement_dirichlet() {
            return Ok(());
        }
        if cholesky_succeeds(&self.k_u) {
            Ok(())
        } else {
            Err(Error::Coercivity(format!(
                "K_u is not positive definite with eta0 = {}; increase the displacement penalty",
                disc.penalty.eta0
            )))
        }
    }

    /// Writes every matrix in coordinate format into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.m_u.write_coordinate(&dir.join("M_u.txt"))?;
        self.k_u.write_coordinate(&dir.join("K_u.txt"))?;
        self.b.write_coordinate(&dir.join("B.txt"))?;
        self.m_p.write_coordinate(&dir.join("M_p.txt"))?;
        self.k_p.write_coordinate(&dir.join("K_p.txt"))?;
        Ok(())
    }
}
