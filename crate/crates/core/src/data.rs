//! Problem data consumed by the right-hand-side assembler and the initial
//! projection: volume sources, boundary data per face tag and initial fields.

use std::sync::Arc;

use crate::geometry::Point;
use crate::manufactured::{ManufacturedCase, TimeMode};
use crate::mesh::BoundaryTag;

pub trait Forcing: Send + Sync {
    fn body_force(&self, x: &Point, t: f64) -> Point;
    fn source(&self, network: usize, x: &Point, t: f64) -> f64;
}

/// Boundary data for every field. Only the values matching the face's
/// classification are queried: Dirichlet values on Dirichlet faces, traction
/// and flux on Neumann faces.
pub trait BoundaryData: Send + Sync {
    fn displacement(&self, tag: BoundaryTag, x: &Point, t: f64) -> Point;
    /// Time derivative of the Dirichlet displacement.
    fn velocity(&self, tag: BoundaryTag, x: &Point, t: f64) -> Point;
    fn traction(&self, tag: BoundaryTag, x: &Point, n: &Point, t: f64) -> Point;
    fn pressure(&self, network: usize, tag: BoundaryTag, x: &Point, t: f64) -> f64;
    fn flux(&self, network: usize, tag: BoundaryTag, x: &Point, n: &Point, t: f64) -> f64;
}

pub trait InitialData: Send + Sync {
    fn displacement(&self, x: &Point) -> Point;
    fn velocity(&self, x: &Point) -> Point;
    fn pressure(&self, network: usize, x: &Point) -> f64;
}

impl Forcing for ManufacturedCase {
    fn body_force(&self, x: &Point, t: f64) -> Point {
        ManufacturedCase::body_force(self, x, t)
    }

    fn source(&self, network: usize, x: &Point, t: f64) -> f64 {
        ManufacturedCase::source(self, network, x, t)
    }
}

impl InitialData for ManufacturedCase {
    fn displacement(&self, x: &Point) -> Point {
        ManufacturedCase::displacement(self, x, 0.0)
    }

    fn velocity(&self, x: &Point) -> Point {
        ManufacturedCase::velocity(self, x, 0.0)
    }

    fn pressure(&self, network: usize, x: &Point) -> f64 {
        ManufacturedCase::pressure(self, network, x, 0.0)
    }
}

/// Boundary data sampled from a manufactured solution: its trace for
/// Dirichlet faces, its traction and fluxes for Neumann faces.
#[derive(Debug, Clone)]
pub struct ExactBoundaryData {
    case: Arc<ManufacturedCase>,
}

pub fn boundary_data_from_exact(case: Arc<ManufacturedCase>) -> ExactBoundaryData {
    ExactBoundaryData { case }
}

impl BoundaryData for ExactBoundaryData {
    fn displacement(&self, _: BoundaryTag, x: &Point, t: f64) -> Point {
        self.case.displacement(x, t)
    }

    fn velocity(&self, _: BoundaryTag, x: &Point, t: f64) -> Point {
        self.case.velocity(x, t)
    }

    fn traction(&self, _: BoundaryTag, x: &Point, n: &Point, t: f64) -> Point {
        self.case.traction(x, n, t)
    }

    fn pressure(&self, network: usize, _: BoundaryTag, x: &Point, t: f64) -> f64 {
        self.case.pressure(network, x, t)
    }

    fn flux(&self, network: usize, _: BoundaryTag, x: &Point, n: &Point, t: f64) -> f64 {
        self.case.flux(network, x, n, t)
    }
}

/// Homogeneous data: no sources, zero boundary values, zero initial fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl Forcing for ZeroData {
    fn body_force(&self, _: &Point, _: f64) -> Point {
        [0.0; 3]
    }

    fn source(&self, _: usize, _: &Point, _: f64) -> f64 {
        0.0
    }
}

impl BoundaryData for ZeroData {
    fn displacement(&self, _: BoundaryTag, _: &Point, _: f64) -> Point {
        [0.0; 3]
    }

    fn velocity(&self, _: BoundaryTag, _: &Point, _: f64) -> Point {
        [0.0; 3]
    }

    fn traction(&self, _: BoundaryTag, _: &Point, _: &Point, _: f64) -> Point {
        [0.0; 3]
    }

    fn pressure(&self, _: usize, _: BoundaryTag, _: &Point, _: f64) -> f64 {
        0.0
    }

    fn flux(&self, _: usize, _: BoundaryTag, _: &Point, _: &Point, _: f64) -> f64 {
        0.0
    }
}

impl InitialData for ZeroData {
    fn displacement(&self, _: &Point) -> Point {
        [0.0; 3]
    }

    fn velocity(&self, _: &Point) -> Point {
        [0.0; 3]
    }

    fn pressure(&self, _: usize, _: &Point) -> f64 {
        0.0
    }
}

/// The data of one transient problem.
#[derive(Clone)]
pub struct ProblemData {
    pub forcing: Arc<dyn Forcing>,
    pub boundary: Arc<dyn BoundaryData>,
    pub initial: Arc<dyn InitialData>,
    /// When set, forcing and boundary data are combinations
    /// `sum_k T_k(t) v_k(x)` of these modes; an empty list means zero data.
    pub time_modes: Option<Vec<TimeMode>>,
}

impl ProblemData {
    /// Forcing, boundary and initial data all taken from a manufactured solution.
    pub fn from_case(case: Arc<ManufacturedCase>) -> Self {
        ProblemData {
            forcing: case.clone(),
            boundary: Arc::new(boundary_data_from_exact(case.clone())),
            time_modes: Some(case.time_modes()),
            initial: case,
        }
    }

    pub fn zero() -> Self {
        ProblemData {
            forcing: Arc::new(ZeroData),
            boundary: Arc::new(ZeroData),
            initial: Arc::new(ZeroData),
            time_modes: Some(Vec::new()),
        }
    }
}
