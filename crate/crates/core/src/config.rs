//! TOML run configuration.
//!
//! ```toml
//! test_case = "tc1"            # tc1 | tc2 | custom
//! degrees = [{ p = 2, q = 1 }]
//!
//! [mesh]
//! kind = "structured"
//! divisions = [2, 4, 8]
//!
//! [time]
//! dt = 1e-5
//! t_final = 5e-3
//! ```
//!
//! Unknown keys are rejected. `parameters` defaults to the preset of the test
//! case; `custom` runs a polynomial manufactured solution and needs `dim` and
//! explicit parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::PenaltyConfig;
use crate::basis::MAX_DEGREE;
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{
    agglomerate_mesh, build_structured_mesh, read_mesh, BcType, BoundaryConditions, BoundaryTag, BoxDomain, PolyMesh,
};
use crate::model::{CheckedParameters, MpetParameters};
use crate::solver::SolverKind;
use crate::timestepper::TimeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestCase {
    /// 3D, four networks, unit cube.
    Tc1,
    /// 2D, two networks.
    Tc2,
    /// Polynomial manufactured solution with user parameters.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSpec {
    /// Box split into simplices; each entry of `divisions` is one mesh with
    /// that many cells per direction.
    Structured {
        divisions: Vec<usize>,
        #[serde(default)]
        min: Option<[f64; 3]>,
        #[serde(default)]
        max: Option<[f64; 3]>,
    },
    /// Structured unit box with `base_divisions` cells per direction,
    /// agglomerated into `elements` polytopes.
    Agglomerated {
        base_divisions: usize,
        elements: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Mesh file, optionally agglomerated.
    File {
        path: PathBuf,
        #[serde(default)]
        agglomerate: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreePair {
    /// Displacement degree.
    pub p: usize,
    /// Pressure degree.
    pub q: usize,
}

impl DegreePair {
    /// Pressure degree first, as in `P1-P2` for `q = 1, p = 2`.
    pub fn label(&self) -> String {
        format!("P{}-P{}", self.q, self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default = "default_bc")]
    pub default: BcType,
    /// Per-tag override for the displacement.
    #[serde(default)]
    pub displacement: BTreeMap<String, BcType>,
    /// Per-network, per-tag overrides for the pressures.
    #[serde(default)]
    pub pressure: Vec<BTreeMap<String, BcType>>,
}

fn default_bc() -> BcType {
    BcType::Dirichlet
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            default: default_bc(),
            displacement: BTreeMap::new(),
            pressure: Vec::new(),
        }
    }
}

fn parse_tags(map: &BTreeMap<String, BcType>, what: &str) -> Result<BTreeMap<BoundaryTag, BcType>> {
    map.iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<BoundaryTag>()
                .map(|t| (t, *v))
                .map_err(|_| Error::Config(format!("{what}: boundary tag `{k}` is not an integer")))
        })
        .collect()
}

impl BoundarySpec {
    pub fn to_conditions(&self, n_networks: usize) -> Result<BoundaryConditions> {
        if self.pressure.len() > n_networks {
            return Err(Error::Config(format!(
                "boundary.pressure lists {} networks, the model has {n_networks}",
                self.pressure.len()
            )));
        }
        let mut bc = BoundaryConditions::all_dirichlet(n_networks);
        bc.default = self.default;
        bc.displacement = parse_tags(&self.displacement, "boundary.displacement")?;
        for (j, m) in self.pressure.iter().enumerate() {
            bc.pressure[j] = parse_tags(m, &format!("boundary.pressure[{j}]"))?;
        }
        Ok(bc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write the final state as a VTK file.
    #[serde(default = "yes")]
    pub fields: bool,
    /// Record the energy functional every this many steps (0: off).
    #[serde(default)]
    pub energy_stride: usize,
    /// Write a field file every this many steps in addition to the final one (0: off).
    #[serde(default)]
    pub field_stride: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            fields: true,
            energy_stride: 0,
            field_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    /// Loop the mesh divisions at fixed degrees.
    #[default]
    H,
    /// Loop the degree pairs on one mesh.
    P,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    #[serde(default)]
    pub mode: StudyMode,
    /// Run independent sweep points concurrently.
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub test_case: TestCase,
    /// Required for `custom`; must match the case otherwise.
    #[serde(default)]
    pub dim: Option<usize>,
    pub mesh: MeshSpec,
    pub degrees: Vec<DegreePair>,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub parameters: Option<MpetParameters>,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub study: StudySpec,
    /// Agglomeration seed used when the mesh section gives none.
    #[serde(default)]
    pub seed: u64,
}

/// A configuration that parsed and passed every check.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub raw: RunConfig,
    pub dim: usize,
    pub params: CheckedParameters,
    pub bc: BoundaryConditions,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ValidatedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ValidatedConfig> {
    let raw: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    raw.validate(base_dir).map_err(|e| locate(text, e))
}

impl RunConfig {
    pub fn validate(self, base_dir: &Path) -> Result<ValidatedConfig> {
        let dim = match (self.test_case, self.dim) {
            (TestCase::Tc1, None | Some(3)) => 3,
            (TestCase::Tc2, None | Some(2)) => 2,
            (TestCase::Custom, Some(d @ (2 | 3))) => d,
            (TestCase::Custom, None) => return Err(Error::Config("`dim` is required for test_case = \"custom\"".into())),
            (case, Some(d)) => {
                return Err(Error::Config(format!("dim = {d} is not valid for test case {case:?}")));
            }
        };
        let raw_params = match (&self.parameters, self.test_case) {
            (Some(p), _) => p.clone(),
            (None, TestCase::Tc1) => MpetParameters::cube_verification(),
            (None, TestCase::Tc2) => MpetParameters::brain_tissue(),
            (None, TestCase::Custom) => {
                return Err(Error::Config("`parameters` are required for test_case = \"custom\"".into()));
            }
        };
        let params = raw_params.validate(dim).map_err(|e| match e {
            Error::Parameter { name, reason } => Error::param(format!("parameters.{name}"), reason),
            other => other,
        })?;
        let nj = params.n_networks();
        match self.test_case {
            TestCase::Tc1 if nj != 4 => return Err(Error::Config(format!("tc1 needs 4 networks, got {nj}"))),
            TestCase::Tc2 if nj != 2 => return Err(Error::Config(format!("tc2 needs 2 networks, got {nj}"))),
            _ => {}
        }
        if self.degrees.is_empty() {
            return Err(Error::Config("`degrees` must list at least one { p, q } pair".into()));
        }
        for (i, d) in self.degrees.iter().enumerate() {
            for (name, v) in [("p", d.p), ("q", d.q)] {
                if v == 0 || v > MAX_DEGREE {
                    return Err(Error::Config(format!(
                        "degrees[{i}].{name} = {v} outside 1..={MAX_DEGREE}"
                    )));
                }
            }
        }
        match &self.mesh {
            MeshSpec::Structured { divisions, min, max } => {
                if divisions.is_empty() {
                    return Err(Error::Config("mesh.divisions is empty".into()));
                }
                if divisions.contains(&0) {
                    return Err(Error::Config("mesh.divisions entries must be >= 1".into()));
                }
                let (lo, hi) = (min.unwrap_or([0.0; 3]), max.unwrap_or([1.0; 3]));
                if (0..dim).any(|k| !(hi[k] > lo[k])) {
                    return Err(Error::Config("mesh.max must exceed mesh.min in every direction".into()));
                }
            }
            MeshSpec::Agglomerated {
                base_divisions,
                elements,
                ..
            } => {
                if *base_divisions == 0 || *elements == 0 {
                    return Err(Error::Config("mesh.base_divisions and mesh.elements must be >= 1".into()));
                }
            }
            MeshSpec::File { path, .. } => {
                let full = base_dir.join(path);
                if !full.exists() {
                    return Err(Error::Config(format!("mesh.path {} does not exist", full.display())));
                }
            }
        }
        self.penalty.validate(nj)?;
        self.time.validate()?;
        let bc = self.boundary.to_conditions(nj)?;
        if self.study.mode == StudyMode::H && self.mesh_count() < 2 && self.degrees.len() > 1 {
            log::info!("h-study with a single mesh: no rates will be computed");
        }
        Ok(ValidatedConfig {
            raw: self,
            dim,
            params,
            bc,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// Number of meshes the mesh section describes.
    pub fn mesh_count(&self) -> usize {
        match &self.mesh {
            MeshSpec::Structured { divisions, .. } => divisions.len(),
            _ => 1,
        }
    }
}

impl ValidatedConfig {
    pub fn seed(&self) -> u64 {
        match &self.raw.mesh {
            MeshSpec::Agglomerated { seed: Some(s), .. } | MeshSpec::File { seed: Some(s), .. } => *s,
            _ => self.raw.seed,
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.raw.seed = seed;
        match &mut self.raw.mesh {
            MeshSpec::Agglomerated { seed: s, .. } | MeshSpec::File { seed: s, .. } => *s = Some(seed),
            MeshSpec::Structured { .. } => {}
        }
    }

    /// The `index`-th mesh of the mesh section.
    pub fn build_mesh(&self, index: usize) -> Result<Arc<PolyMesh>> {
        let dim = self.dim;
        let mesh = match &self.raw.mesh {
            MeshSpec::Structured { divisions, min, max } => {
                let n = *divisions
                    .get(index)
                    .ok_or_else(|| Error::Config(format!("mesh index {index} out of range")))?;
                let mut domain = BoxDomain::unit(dim);
                if let Some(m) = min {
                    domain.min[..dim].copy_from_slice(&m[..dim]);
                }
                if let Some(m) = max {
                    domain.max[..dim].copy_from_slice(&m[..dim]);
                }
                build_structured_mesh(&domain, &vec![n; dim], dim)?
            }
            MeshSpec::Agglomerated {
                base_divisions,
                elements,
                ..
            } => {
                let base = build_structured_mesh(&BoxDomain::unit(dim), &vec![*base_divisions; dim], dim)?;
                agglomerate_mesh(&base, *elements, self.seed())?
            }
            MeshSpec::File { path, agglomerate, .. } => {
                let mesh = read_mesh(&self.base_dir.join(path))?;
                if mesh.dim() != dim {
                    return Err(Error::Config(format!("mesh file is {}D, the case is {dim}D", mesh.dim())));
                }
                match agglomerate {
                    Some(n) => agglomerate_mesh(&mesh, *n, self.seed())?,
                    None => mesh,
                }
            }
        };
        Ok(Arc::new(mesh))
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase> {
        match self.raw.test_case {
            TestCase::Tc1 => ManufacturedCase::tc1(self.params.clone()),
            TestCase::Tc2 => ManufacturedCase::tc2(self.params.clone()),
            TestCase::Custom => ManufacturedCase::polynomial(self.params.clone()),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        let d = &self.raw.output.dir;
        if d.is_absolute() {
            d.clone()
        } else {
            self.base_dir.join(d)
        }
    }
}

/// Adds the line of the offending key to a validation error when it can be
/// found in the source.
fn locate(text: &str, err: Error) -> Error {
    let (path, msg) = match &err {
        Error::Parameter { name, .. } => (name.clone(), err.to_string()),
        Error::Config(m) => match m.split_whitespace().next() {
            Some(first) if first.contains('.') || first.starts_with('`') => {
                (first.trim_matches(|c| c == '`' || c == ':').to_string(), m.clone())
            }
            _ => return err,
        },
        _ => return err,
    };
    match find_key_line(text, &path) {
        Some(line) => Error::Config(format!("line {line}: {msg}")),
        None => Error::Config(msg),
    }
}

/// 1-based line defining the dotted key `path` (e.g. `parameters.networks[2].c`),
/// following `[table]` and `[[array]]` headers.
fn find_key_line(text: &str, path: &str) -> Option<usize> {
    let segments: Vec<(String, Option<usize>)> = path
        .split('.')
        .map(|s| match s.find('[') {
            Some(i) => (s[..i].to_string(), s[i + 1..s.len() - 1].parse().ok()),
            None => (s.to_string(), None),
        })
        .collect();
    let (key, tables) = segments.split_last()?;
    let target: Vec<&str> = tables.iter().map(|(n, _)| n.as_str()).collect();
    let target_index = tables.last().and_then(|(_, i)| *i);
    let mut current: Vec<String> = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut current_index = None;
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix("[[").and_then(|r| r.split("]]").next()) {
            current = h.trim().split('.').map(|s| s.trim().to_string()).collect();
            let c = counts.entry(h.trim().to_string()).or_insert(0);
            current_index = Some(*c);
            *c += 1;
            continue;
        }
        if let Some(h) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current = h.trim().split('.').map(|s| s.trim().to_string()).collect();
            current_index = None;
            continue;
        }
        let Some((k, _)) = t.split_once('=') else { continue };
        if k.trim() != key.0 || current != target {
            continue;
        }
        if target_index.is_some() && target_index != current_index {
            continue;
        }
        return Some(ln + 1);
    }
    None
}
