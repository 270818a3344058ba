//! Polytopic meshes.
//!
//! Every element stores its sub-simplex tessellation; for a plain simplicial
//! mesh this is the element itself. Faces are always simplices (segments in
//! 2D, triangles in 3D): a polygonal interface between two agglomerates is
//! stored as the set of its constituent facets.

mod agglomerate;
mod io;
mod structured;

use std::collections::{BTreeMap, HashMap};

pub use agglomerate::agglomerate_mesh;
pub use io::{read_mesh, write_mesh};
pub use structured::{build_structured_mesh, BoxDomain};

use crate::error::{Error, Result};
use crate::geometry::{self, BoundingBox, Point};

/// Boundary tag attached to exterior faces. Structured box meshes number the
/// sides `1: x=min, 2: x=max, 3: y=min, 4: y=max, 5: z=min, 6: z=max`.
pub type BoundaryTag = u32;

#[derive(Debug, Clone)]
pub struct Element {
    /// Distinct vertices of the element (sorted).
    pub vertices: Vec<usize>,
    /// Simplices whose union is the element.
    pub sub_simplices: Vec<Vec<usize>>,
    /// Diameter: largest vertex-to-vertex distance.
    pub diameter: f64,
    pub bounding_box: BoundingBox,
    pub measure: f64,
    /// Ids of the faces on the element boundary.
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceNeighbors {
    Interior { owner: usize, neighbor: usize },
    Boundary { owner: usize, tag: BoundaryTag },
}

impl FaceNeighbors {
    pub fn owner(&self) -> usize {
        match *self {
            FaceNeighbors::Interior { owner, .. } | FaceNeighbors::Boundary { owner, .. } => owner,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: Vec<usize>,
    /// Unit normal pointing out of the owner element.
    pub normal: Point,
    pub measure: f64,
    pub neighbors: FaceNeighbors,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        matches!(self.neighbors, FaceNeighbors::Interior { .. })
    }

    pub fn tag(&self) -> Option<BoundaryTag> {
        match self.neighbors {
            FaceNeighbors::Boundary { tag, .. } => Some(tag),
            FaceNeighbors::Interior { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolyMesh {
    dim: usize,
    vertices: Vec<Point>,
    elements: Vec<Element>,
    faces: Vec<Face>,
}

/// Facet key: sorted vertex ids.
pub(crate) fn facet_key(verts: &[usize]) -> Vec<usize> {
    let mut k = verts.to_vec();
    k.sort_unstable();
    k
}

impl PolyMesh {
    /// Builds a mesh from vertices and, per element, its list of simplices.
    /// Boundary facets are tagged by `tag_of(facet_vertices, facet_centroid)`.
    pub fn from_simplices(
        dim: usize,
        vertices: Vec<Point>,
        element_simplices: Vec<Vec<Vec<usize>>>,
        tag_of: impl Fn(&[usize], &Point) -> BoundaryTag,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Mesh(format!("unsupported dimension {dim}")));
        }
        if element_simplices.is_empty() {
            return Err(Error::Mesh("mesh has no elements".into()));
        }
        // facet -> list of (element, simplex, opposite vertex)
        let mut facets: HashMap<Vec<usize>, Vec<(usize, Vec<usize>, usize)>> = HashMap::new();
        let mut elements = Vec::with_capacity(element_simplices.len());
        for (e, simplices) in element_simplices.into_iter().enumerate() {
            if simplices.is_empty() {
                return Err(Error::Mesh(format!("element {e} has no simplices")));
            }
            let mut measure = 0.0;
            for s in &simplices {
                if s.len() != dim + 1 {
                    return Err(Error::Mesh(format!(
                        "element {e}: simplex with {} vertices in {dim}D",
                        s.len()
                    )));
                }
                if let Some(&v) = s.iter().find(|&&v| v >= vertices.len()) {
                    return Err(Error::Mesh(format!("element {e}: vertex {v} out of range")));
                }
                let pts: Vec<Point> = s.iter().map(|&v| vertices[v]).collect();
                let m = geometry::simplex_signed_measure(dim, &pts).abs();
                if m <= 0.0 {
                    return Err(Error::Mesh(format!("element {e}: degenerate simplex {s:?}")));
                }
                measure += m;
                for skip in 0..=dim {
                    let facet: Vec<usize> = (0..=dim).filter(|&i| i != skip).map(|i| s[i]).collect();
                    facets
                        .entry(facet_key(&facet))
                        .or_default()
                        .push((e, facet, s[skip]));
                }
            }
            let mut verts: Vec<usize> = simplices.iter().flatten().copied().collect();
            verts.sort_unstable();
            verts.dedup();
            let mut diameter: f64 = 0.0;
            for (i, &a) in verts.iter().enumerate() {
                for &b in &verts[i + 1..] {
                    diameter = diameter.max(geometry::distance(&vertices[a], &vertices[b]));
                }
            }
            let bounding_box = BoundingBox::from_points(verts.iter().map(|&v| &vertices[v]));
            elements.push(Element {
                vertices: verts,
                sub_simplices: simplices,
                diameter,
                bounding_box,
                measure,
                faces: Vec::new(),
            });
        }

        // Deterministic face order: by owner element, then by facet key.
        let mut keyed: Vec<(Vec<usize>, Vec<(usize, Vec<usize>, usize)>)> =
            facets.into_iter().collect();
        keyed.sort_by(|a, b| {
            let oa = a.1.iter().map(|x| x.0).min();
            let ob = b.1.iter().map(|x| x.0).min();
            oa.cmp(&ob).then_with(|| a.0.cmp(&b.0))
        });

        let mut faces = Vec::new();
        for (key, mut sides) in keyed {
            sides.sort_by_key(|s| s.0);
            let neighbors = match sides.len() {
                1 => None,
                2 if sides[0].0 == sides[1].0 => continue, // internal to an agglomerate
                2 => Some(sides[1].0),
                n => {
                    return Err(Error::Mesh(format!(
                        "facet {key:?} shared by {n} simplices (non-manifold)"
                    )))
                }
            };
            let (owner, facet, opposite) = &sides[0];
            let pts: Vec<Point> = facet.iter().map(|&v| vertices[v]).collect();
            let mut normal = geometry::facet_normal(dim, &pts);
            let c = geometry::centroid(&pts);
            if geometry::dot(&normal, &geometry::sub(&c, &vertices[*opposite])) < 0.0 {
                normal = geometry::scale(&normal, -1.0);
            }
            let measure = geometry::facet_measure(dim, &pts);
            let neighbors = match neighbors {
                Some(nb) => FaceNeighbors::Interior {
                    owner: *owner,
                    neighbor: nb,
                },
                None => FaceNeighbors::Boundary {
                    owner: *owner,
                    tag: tag_of(facet, &c),
                },
            };
            let id = faces.len();
            elements[*owner].faces.push(id);
            if let FaceNeighbors::Interior { neighbor, .. } = neighbors {
                elements[neighbor].faces.push(id);
            }
            faces.push(Face {
                vertices: facet.clone(),
                normal,
                measure,
                neighbors,
            });
        }

        Ok(PolyMesh {
            dim,
            vertices,
            elements,
            faces,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Mesh size `h = max_K h_K`.
    pub fn mesh_size(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.elements.iter().map(|e| e.measure).sum()
    }

    pub fn is_simplicial(&self) -> bool {
        self.elements.iter().all(|e| e.sub_simplices.len() == 1)
    }

    pub fn n_sub_simplices(&self) -> usize {
        self.elements.iter().map(|e| e.sub_simplices.len()).sum()
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.is_interior())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| !f.is_interior())
    }

    pub fn boundary_tags(&self) -> BTreeMap<usize, BoundaryTag> {
        self.boundary_faces()
            .map(|(i, f)| (i, f.tag().expect("boundary face")))
            .collect()
    }

    /// Harmonic average of the adjacent element diameters on interior faces;
    /// the owner's diameter on boundary faces.
    pub fn face_harmonic_h(&self, face: usize) -> f64 {
        match self.faces[face].neighbors {
            FaceNeighbors::Interior { owner, neighbor } => {
                harmonic_mean(self.elements[owner].diameter, self.elements[neighbor].diameter)
            }
            FaceNeighbors::Boundary { owner, .. } => self.elements[owner].diameter,
        }
    }

    /// Largest ratio `h_K1 / h_K2` over interior faces (local bounded variation proxy).
    pub fn max_neighbor_size_ratio(&self) -> f64 {
        self.interior_faces()
            .map(|(_, f)| match f.neighbors {
                FaceNeighbors::Interior { owner, neighbor } => {
                    let (a, b) = (self.elements[owner].diameter, self.elements[neighbor].diameter);
                    a.max(b) / a.min(b)
                }
                _ => unreachable!(),
            })
            .fold(1.0, f64::max)
    }

    /// `sum_F |F| n_F` over the boundary of `elem`, normals oriented outward.
    pub fn element_normal_sum(&self, elem: usize) -> Point {
        let mut s = geometry::ZERO;
        for &f in &self.elements[elem].faces {
            let face = &self.faces[f];
            let sign = if face.neighbors.owner() == elem { 1.0 } else { -1.0 };
            s = geometry::add(&s, &geometry::scale(&face.normal, sign * face.measure));
        }
        s
    }

    pub fn element_centroid(&self, elem: usize) -> Point {
        let mut c = geometry::ZERO;
        let mut m = 0.0;
        for s in &self.elements[elem].sub_simplices {
            let pts: Vec<Point> = s.iter().map(|&v| self.vertices[v]).collect();
            let ms = geometry::simplex_signed_measure(self.dim, &pts).abs();
            c = geometry::add(&c, &geometry::scale(&geometry::centroid(&pts), ms));
            m += ms;
        }
        geometry::scale(&c, 1.0 / m)
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Boundary-condition type of a face for one field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcType {
    Dirichlet,
    Neumann,
}

/// Assignment of boundary-condition types to boundary tags, per field.
/// Tags not listed fall back to `default`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub default: BcType,
    pub displacement: BTreeMap<BoundaryTag, BcType>,
    pub pressure: Vec<BTreeMap<BoundaryTag, BcType>>,
}

impl BoundaryConditions {
    /// Dirichlet everywhere for every field.
    pub fn all_dirichlet(n_networks: usize) -> Self {
        BoundaryConditions {
            default: BcType::Dirichlet,
            displacement: BTreeMap::new(),
            pressure: vec![BTreeMap::new(); n_networks],
        }
    }

    pub fn all_neumann(n_networks: usize) -> Self {
        BoundaryConditions {
            default: BcType::Neumann,
            ..Self::all_dirichlet(n_networks)
        }
    }

    fn kind(&self, map: &BTreeMap<BoundaryTag, BcType>, face: &Face) -> FaceKind {
        match face.tag() {
            None => FaceKind::Interior,
            Some(tag) => match map.get(&tag).copied().unwrap_or(self.default) {
                BcType::Dirichlet => FaceKind::Dirichlet,
                BcType::Neumann => FaceKind::Neumann,
            },
        }
    }

    pub fn displacement_kind(&self, face: &Face) -> FaceKind {
        self.kind(&self.displacement, face)
    }

    pub fn pressure_kind(&self, face: &Face, network: usize) -> FaceKind {
        self.kind(&self.pressure[network], face)
    }
}

/// Per-face classification for the displacement and each pressure network.
#[derive(Debug, Clone)]
pub struct FaceClassification {
    pub displacement: Vec<FaceKind>,
    pub pressure: Vec<Vec<FaceKind>>,
}

impl FaceClassification {
    pub fn new(mesh: &PolyMesh, bc: &BoundaryConditions) -> Self {
        let displacement = mesh.faces().iter().map(|f| bc.displacement_kind(f)).collect();
        let pressure = (0..bc.pressure.len())
            .map(|j| mesh.faces().iter().map(|f| bc.pressure_kind(f, j)).collect())
            .collect();
        FaceClassification {
            displacement,
            pressure,
        }
    }

    pub fn has_displacement_dirichlet(&self) -> bool {
        self.displacement.contains(&FaceKind::Dirichlet)
    }
}
