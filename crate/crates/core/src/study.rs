//! Single runs and convergence sweeps driven by a [`ValidatedConfig`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{convergence_rates, error_report, EnergySample, EnergyTrace, ErrorReport, RateTable, RATE_CSV_HEADER};
use crate::assembly::{BlockSystem, Discretization, RhsAssembler};
use crate::config::{DegreePair, MeshSpec, StudyMode, ValidatedConfig};
use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedCase;
use crate::mesh::PolyMesh;
use crate::timestepper::{initialize_state, run_transient, Observer, TimeConfig, TransientState};

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    /// Energy sampling stride (0: no energy trace).
    pub energy_stride: usize,
    /// Write the assembled matrices here before time stepping.
    pub dump_matrices: Option<PathBuf>,
    /// Write `fields_<step>.vtk` into the directory every so many steps.
    pub snapshots: Option<(PathBuf, usize)>,
}

/// Writes the transient fields every `stride` steps.
struct FieldSnapshots<'a> {
    disc: &'a Discretization,
    dir: &'a Path,
    stride: usize,
    files: Vec<PathBuf>,
}

impl Observer for FieldSnapshots<'_> {
    fn stride(&self) -> usize {
        self.stride
    }

    fn observe(&mut self, step: usize, state: &TransientState) -> Result<()> {
        let path = self.dir.join(format!("fields_{step}.vtk"));
        crate::vtk::write_fields(self.disc, state, &path)?;
        self.files.push(path);
        Ok(())
    }
}

pub struct Simulation {
    pub disc: Discretization,
    pub state: TransientState,
    pub report: ErrorReport,
    pub energy: Vec<EnergySample>,
    pub steps: usize,
    pub seconds: f64,
    /// Field files written during the run.
    pub snapshots: Vec<PathBuf>,
}

impl Simulation {
    pub fn n_dofs(&self) -> usize {
        self.state.u.len() + self.state.p.len()
    }
}

/// Assembles, integrates to `time.t_final` and measures the error against
/// the manufactured solution of the configuration.
pub fn simulate(
    cfg: &ValidatedConfig,
    case: &Arc<ManufacturedCase>,
    mesh: Arc<PolyMesh>,
    degrees: DegreePair,
    time: &TimeConfig,
    options: &SimulationOptions,
) -> Result<Simulation> {
    let start = Instant::now();
    let disc = Discretization::new(
        mesh,
        degrees.p,
        degrees.q,
        cfg.params.clone(),
        cfg.bc.clone(),
        cfg.raw.penalty.clone(),
    )?;
    log::info!(
        "{} h = {:.4}: {} elements, {} unknowns",
        degrees.label(),
        disc.mesh.mesh_size(),
        disc.mesh.n_elements(),
        disc.n_u() + disc.n_networks() * disc.n_p()
    );
    let system = BlockSystem::assemble(&disc)?;
    system.check_coercivity(&disc)?;
    if let Some(dir) = &options.dump_matrices {
        system.dump(dir)?;
    }
    let rhs = RhsAssembler::new(&disc, ProblemData::from_case(case.clone()))?;
    let initial = initialize_state(&disc, &system, &rhs)?;
    let mut trace = EnergyTrace::new(&disc, &system, options.energy_stride.max(1));
    let mut fields = options.snapshots.as_ref().map(|(dir, stride)| FieldSnapshots {
        disc: &disc,
        dir,
        stride: (*stride).max(1),
        files: Vec::new(),
    });
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if options.energy_stride > 0 {
        observers.push(&mut trace);
    }
    if let Some(f) = fields.as_mut() {
        observers.push(f);
    }
    let summary = run_transient(&system, &rhs, initial, time, cfg.raw.solver, &mut observers)?;
    drop(observers);
    let snapshots = fields.map(|f| f.files).unwrap_or_default();
    let energy = trace.samples;
    let state = summary.final_state;
    let report = error_report(&disc, &state, case, state.t)?;
    let seconds = start.elapsed().as_secs_f64();
    log::info!(
        "{} h = {:.4}: err_u_dg = {:.4e}, err_p_l2 = {:.4e} ({} steps, {seconds:.1} s)",
        degrees.label(),
        report.h,
        report.err_u_dg,
        report.err_p_l2,
        summary.steps
    );
    Ok(Simulation {
        disc,
        state,
        report,
        energy,
        steps: summary.steps,
        seconds,
        snapshots,
    })
}

/// One sweep point: its report or the error that stopped it.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub degrees: DegreePair,
    /// Mesh index within the mesh section.
    pub mesh: usize,
    pub outcome: std::result::Result<ErrorReport, String>,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub mode: StudyMode,
    pub points: Vec<SweepPoint>,
    /// h-mode only: one table per degree pair with at least two successful runs.
    pub tables: Vec<RateTable>,
    pub csv: String,
}

impl StudyOutput {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

fn sweep(cfg: &ValidatedConfig, jobs: Vec<(DegreePair, usize)>) -> Result<Vec<SweepPoint>> {
    let case = Arc::new(cfg.manufactured_case()?);
    let run = |(degrees, mesh): (DegreePair, usize)| SweepPoint {
        degrees,
        mesh,
        outcome: cfg
            .build_mesh(mesh)
            .and_then(|m| simulate(cfg, &case, m, degrees, &cfg.raw.time, &SimulationOptions::default()))
            .map(|s| s.report)
            .map_err(|e| {
                log::error!("{} on mesh {mesh} failed: {e}", degrees.label());
                e.to_string()
            }),
    };
    Ok(if cfg.raw.study.parallel {
        jobs.into_par_iter().map(run).collect()
    } else {
        jobs.into_iter().map(run).collect()
    })
}

/// h-mode loops the mesh divisions for every degree pair and reports rates;
/// p-mode loops the degree pairs on the first mesh. A failing point is
/// recorded and the sweep continues.
pub fn run_convergence_study(cfg: &ValidatedConfig) -> Result<StudyOutput> {
    let mode = cfg.raw.study.mode;
    if let MeshSpec::Structured { divisions, .. } = &cfg.raw.mesh {
        if divisions.is_empty() {
            return Err(Error::Config("mesh.divisions is empty".into()));
        }
    }
    if cfg.raw.degrees.is_empty() {
        return Err(Error::Config("`degrees` is empty".into()));
    }
    let jobs: Vec<(DegreePair, usize)> = match mode {
        StudyMode::H => cfg
            .raw
            .degrees
            .iter()
            .flat_map(|d| (0..cfg.raw.mesh_count()).map(move |m| (*d, m)))
            .collect(),
        StudyMode::P => cfg.raw.degrees.iter().map(|d| (*d, 0)).collect(),
    };
    let points = sweep(cfg, jobs)?;
    let (tables, csv) = match mode {
        StudyMode::H => h_tables(cfg, &points)?,
        StudyMode::P => (Vec::new(), degree_csv(&points)),
    };
    Ok(StudyOutput {
        mode,
        points,
        tables,
        csv,
    })
}

fn h_tables(cfg: &ValidatedConfig, points: &[SweepPoint]) -> Result<(Vec<RateTable>, String)> {
    let mut csv = format!("{RATE_CSV_HEADER}\n");
    let mut tables = Vec::new();
    for d in &cfg.raw.degrees {
        let label = d.label();
        let mine: Vec<&SweepPoint> = points.iter().filter(|p| p.degrees == *d).collect();
        let ok: Vec<ErrorReport> = mine.iter().filter_map(|p| p.outcome.as_ref().ok().cloned()).collect();
        if ok.len() >= 2 {
            let table = convergence_rates(label.clone(), &ok)?;
            csv.push_str(&table.to_csv_block());
            tables.push(table);
        } else {
            writeln!(csv, "# {label}").unwrap();
            for r in &ok {
                writeln!(csv, "{:.6e},{:.6e},,{:.6e},", r.h, r.err_u_dg, r.err_p_l2).unwrap();
            }
        }
        for p in mine.iter().filter(|p| p.outcome.is_err()) {
            let msg = p.outcome.as_ref().unwrap_err().replace('\n', " ");
            writeln!(csv, "# failed {label} mesh {}: {msg}", p.mesh).unwrap();
        }
    }
    Ok((tables, csv))
}

pub const DEGREE_CSV_HEADER: &str = "p,q,h,err_u_dg,err_p_l2";

fn degree_csv(points: &[SweepPoint]) -> String {
    let mut csv = format!("{DEGREE_CSV_HEADER}\n");
    for p in points {
        match &p.outcome {
            Ok(r) => writeln!(csv, "{},{},{:.6e},{:.6e},{:.6e}", r.p, r.q, r.h, r.err_u_dg, r.err_p_l2).unwrap(),
            Err(msg) => writeln!(csv, "# failed {}: {}", p.degrees.label(), msg.replace('\n', " ")).unwrap(),
        }
    }
    csv
}

pub const ENERGY_CSV_HEADER: &str = "step,t,kinetic,elastic,storage,dg_dissipation,leakage";

pub fn energy_csv(samples: &[EnergySample]) -> String {
    let mut s = format!("{ENERGY_CSV_HEADER}\n");
    for e in samples {
        writeln!(
            s,
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            e.step, e.t, e.kinetic, e.elastic, e.storage, e.dg_dissipation, e.leakage
        )
        .unwrap();
    }
    s
}

pub const ERROR_CSV_HEADER: &str = "p,q,h,t,err_u_dg,err_p_l2";

pub fn error_csv(r: &ErrorReport) -> String {
    let mut s = String::from(ERROR_CSV_HEADER);
    for j in 0..r.err_p_dg.len() {
        write!(s, ",err_p{}_dg", j + 1).unwrap();
    }
    write!(s, "\n{},{},{:.6e},{:.6e},{:.6e},{:.6e}", r.p, r.q, r.h, r.t_eval, r.err_u_dg, r.err_p_l2).unwrap();
    for e in &r.err_p_dg {
        write!(s, ",{e:.6e}").unwrap();
    }
    s.push('\n');
    s
}

/// Files written by [`run_single`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: ErrorReport,
    pub files: Vec<PathBuf>,
}

/// Runs the first mesh and degree pair of the configuration and writes
/// `errors.csv`, optionally `energy.csv`, `fields.vtk` and the periodic
/// `fields_<step>.vtk`, into `out_dir`.
pub fn run_single(cfg: &ValidatedConfig, out_dir: &Path, dump_matrices: bool) -> Result<RunArtifacts> {
    if cfg.raw.mesh_count() > 1 || cfg.raw.degrees.len() > 1 {
        log::info!("run uses the first mesh and degree pair; use `study` for sweeps");
    }
    let case = Arc::new(cfg.manufactured_case()?);
    let mesh = cfg.build_mesh(0)?;
    let options = SimulationOptions {
        energy_stride: cfg.raw.output.energy_stride,
        dump_matrices: dump_matrices.then(|| out_dir.join("matrices")),
        snapshots: (cfg.raw.output.field_stride > 0).then(|| (out_dir.to_path_buf(), cfg.raw.output.field_stride)),
    };
    let sim = simulate(cfg, &case, mesh, cfg.raw.degrees[0], &cfg.raw.time, &options)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = sim.snapshots.clone();
    let errors = out_dir.join("errors.csv");
    std::fs::write(&errors, error_csv(&sim.report))?;
    files.push(errors);
    if !sim.energy.is_empty() {
        let path = out_dir.join("energy.csv");
        std::fs::write(&path, energy_csv(&sim.energy))?;
        files.push(path);
    }
    if cfg.raw.output.fields {
        let path = out_dir.join("fields.vtk");
        crate::vtk::write_fields(&sim.disc, &sim.state, &path)?;
        files.push(path);
    }
    Ok(RunArtifacts {
        report: sim.report,
        files,
    })
}

/// Runs the sweep of the configuration and writes `study.csv` into `out_dir`.
pub fn run_study(cfg: &ValidatedConfig, out_dir: &Path) -> Result<(StudyOutput, PathBuf)> {
    let out = run_convergence_study(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("study.csv");
    std::fs::write(&path, &out.csv)?;
    Ok((out, path))
}

#[cfg(test)]
mod tests;
