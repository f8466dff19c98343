//! Config-driven scenarios: a model, a task and task parameters in, a set of
//! named CSV/JSON artifacts out.
//!
//! Artifacts are produced in memory and are a pure function of the config
//! (including its seed), so identical configs give byte-identical files.
//! Writing them, checksums and the run manifest are left to the caller.

use std::f64::consts::{PI, TAU};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bloch::{hofstadter_bloch, rational_approx};
use crate::dynamics::{
    ab_caging_dynamics, basis_state, chevron_scan, chiral_current_ground_state, chiral_displacement_series,
    displacement_window, driven_steady_flow, evolve_graph, rwa_validation, ChevronSetup, DriveProtocol, Envelope,
    TwoModeParametric,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::invariants::{chern_number, diophantine_windings, nodal_winding_map, ssh_winding, winding_number, DLoop};
use crate::lattice::{apply_disorder, DisorderSpec, LatticeGraph};
use crate::models::*;
use crate::ode::StepControl;
use crate::special::bessel_j;
use crate::spectra::{
    detect_edge_modes, diagonalize_graph, laughlin_pump_sweep, EdgeGeometry, EdgeModeOptions, EdgeTag, PumpOptions,
};

pub const MODELS: &[&str] = &[
    "annulus",
    "cage",
    "chevron",
    "ladder",
    "necklace",
    "nodal-loop",
    "parametric",
    "qsh",
    "soc-chain",
    "ssh",
];

pub const TASKS: &[&str] = &["spectrum", "pump-sweep", "evolve", "invariant", "sweep"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub task: String,
    #[serde(default)]
    pub params: TaskParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => ".csv",
            Format::Json => ".json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, formats: all_formats() }
    }
}

/// Task parameters. Which fields apply depends on the model and task; the
/// rest must be absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    /// Energy window for edge-mode detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_depth: Option<usize>,
    /// Points of the threaded-flux grid over `[0, 2 pi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_alpha: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Output intervals on `[0, t_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_times: Option<usize>,
    /// Initial basis state (Hilbert-space index).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cage_start: Option<(usize, Sublattice, usize)>,
    /// Report the chiral displacement of an SSH chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    /// Modulation-frequency range of a chevron scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nu: Option<usize>,
    /// Brillouin-zone grid per direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nk: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSel {
    Outer,
    Inner,
}

/// Coherent pump on an annulus site given by lattice coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub pump: [i64; 2],
    pub frequency: f64,
    pub amplitude: f64,
    pub edge: EdgeSel,
    /// Uniform decay rate per site.
    #[serde(default = "default_loss")]
    pub loss: f64,
}

fn default_loss() -> f64 {
    0.02
}

/// Disorder drawn from the scenario seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    #[serde(default)]
    pub sigma_onsite: f64,
    #[serde(default)]
    pub sigma_hopping: f64,
    #[serde(default)]
    pub defect_sites: Vec<usize>,
    /// Annulus sites by lattice coordinates.
    #[serde(default)]
    pub defect_coords: Vec<[i64; 2]>,
    #[serde(default)]
    pub defect_strength: f64,
}

/// Runs `task` once per point. `parameter` + `values` is shorthand for
/// points that set one model parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<SweepPoint>,
}

/// Patches merged into the model parameters and task parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub model: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CageKind {
    NonAbelian,
    AbelianPi,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CageParams {
    pub n_cells: usize,
    pub coupling: f64,
    pub kind: CageKind,
}

impl CageParams {
    fn config(&self) -> CageConfig {
        match self.kind {
            CageKind::NonAbelian => non_abelian_cage(self.n_cells, self.coupling),
            CageKind::AbelianPi => abelian_pi_cage(self.n_cells, self.coupling),
            CageKind::Free => {
                let one = crate::linalg::CMatrix::identity(1, 1);
                CageConfig {
                    n_cells: self.n_cells,
                    coupling: self.coupling,
                    links: [one.clone(), one.clone(), one.clone(), one],
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Annulus(AnnulusParams),
    Cage(CageParams),
    Chevron(ChevronSetup),
    Ladder(LadderParams),
    Necklace(NecklaceParams),
    NodalLoop(NodalParams),
    Parametric(TwoModeParametric),
    Qsh(QshParams),
    SocChain(SocChainParams),
    Ssh(SshParams),
}

fn from_map<T: DeserializeOwned>(field: &str, m: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(m.clone())).map_err(|e| Error::param(field, e.to_string()))
}

impl Model {
    pub fn parse(cfg: &ModelConfig) -> Result<Model> {
        let p = &cfg.params;
        let f = "model.params";
        Ok(match cfg.name.as_str() {
            "annulus" => Model::Annulus(from_map(f, p)?),
            "cage" => Model::Cage(from_map(f, p)?),
            "chevron" => Model::Chevron(from_map(f, p)?),
            "ladder" => Model::Ladder(from_map(f, p)?),
            "necklace" => Model::Necklace(from_map(f, p)?),
            "nodal-loop" => Model::NodalLoop(from_map(f, p)?),
            "parametric" => Model::Parametric(from_map(f, p)?),
            "qsh" => Model::Qsh(from_map(f, p)?),
            "soc-chain" => Model::SocChain(from_map(f, p)?),
            "ssh" => Model::Ssh(from_map(f, p)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown model `{other}`; registered models: {}",
                    MODELS.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Annulus(_) => "annulus",
            Model::Cage(_) => "cage",
            Model::Chevron(_) => "chevron",
            Model::Ladder(_) => "ladder",
            Model::Necklace(_) => "necklace",
            Model::NodalLoop(_) => "nodal-loop",
            Model::Parametric(_) => "parametric",
            Model::Qsh(_) => "qsh",
            Model::SocChain(_) => "soc-chain",
            Model::Ssh(_) => "ssh",
        }
    }

    fn has_graph(&self) -> bool {
        !matches!(self, Model::Chevron(_) | Model::Parametric(_))
    }

    fn supports(&self, task: Task) -> bool {
        match task {
            Task::Spectrum => self.has_graph(),
            Task::PumpSweep => matches!(self, Model::Annulus(_)),
            Task::Evolve | Task::Sweep => true,
            Task::Invariant => matches!(self, Model::Ssh(_) | Model::SocChain(_) | Model::NodalLoop(_) | Model::Annulus(_)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    PumpSweep,
    Evolve,
    Invariant,
    Sweep,
}

impl Task {
    pub fn parse(name: &str) -> Result<Task> {
        Ok(match name {
            "spectrum" => Task::Spectrum,
            "pump-sweep" => Task::PumpSweep,
            "evolve" => Task::Evolve,
            "invariant" => Task::Invariant,
            "sweep" => Task::Sweep,
            other => {
                return Err(Error::Config(format!(
                    "unknown task `{other}`; registered tasks: {}",
                    TASKS.join(", ")
                )))
            }
        })
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    /// In generation order; the last one is `summary.json` unless JSON
    /// output is disabled.
    pub artifacts: Vec<Artifact>,
    pub summary: Map<String, Value>,
}

/// Lattice built from a model, with the boundaries used for edge metrics.
struct Built {
    graph: LatticeGraph,
    geometry: Option<EdgeGeometry>,
    annulus: Option<AnnulusLattice>,
    cage: Option<RhombicCage>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks names, parameter types and ranges, and every sweep point,
    /// without running the task.
    pub fn validate(&self) -> Result<()> {
        let (model, task) = self.resolve()?;
        if self.output.formats.is_empty() {
            return Err(Error::param("output.formats", "at least one format is required"));
        }
        check_params(&self.params)?;
        if task == Task::Sweep {
            for cfg in self.sweep_points()? {
                cfg.validate()?;
            }
            return Ok(());
        }
        if self.params.sweep.is_some() {
            return Err(Error::param("params.sweep", "only valid for the sweep task"));
        }
        match &model {
            Model::Chevron(s) => s.model(s.delta).map(|_| ()),
            Model::Parametric(m) => m.validate(),
            _ => self.build(&model).map(|_| ()),
        }
    }

    fn resolve(&self) -> Result<(Model, Task)> {
        let model = Model::parse(&self.model)?;
        let task = Task::parse(&self.task)?;
        if !model.supports(task) {
            return Err(Error::Config(format!(
                "task `{}` is not available for model `{}`",
                self.task,
                model.name()
            )));
        }
        Ok((model, task))
    }

    fn sweep_points(&self) -> Result<Vec<ScenarioConfig>> {
        let sweep = self
            .params
            .sweep
            .as_ref()
            .ok_or_else(|| Error::param("params.sweep", "required for the sweep task"))?;
        if Task::parse(&sweep.task)? == Task::Sweep {
            return Err(Error::param("params.sweep.task", "sweeps cannot be nested"));
        }
        let mut points = sweep.points.clone();
        match (&sweep.parameter, sweep.values.is_empty()) {
            (Some(name), false) => {
                for &v in &sweep.values {
                    let mut model = Map::new();
                    model.insert(name.clone(), json!(v));
                    points.push(SweepPoint { model, params: Map::new() });
                }
            }
            (None, true) => {}
            _ => return Err(Error::param("params.sweep", "`parameter` and `values` go together")),
        }
        if points.is_empty() {
            return Err(Error::param("params.sweep", "no sweep points"));
        }
        let mut base_params = self.params.clone();
        base_params.sweep = None;
        let base_params = serde_json::to_value(&base_params)?;
        points
            .iter()
            .map(|pt| {
                let mut cfg = self.clone();
                cfg.task = sweep.task.clone();
                for (k, v) in &pt.model {
                    cfg.model.params.insert(k.clone(), v.clone());
                }
                let mut params = base_params.as_object().cloned().unwrap_or_default();
                for (k, v) in &pt.params {
                    params.insert(k.clone(), v.clone());
                }
                cfg.params = from_map("params.sweep.points", &params)?;
                Ok(cfg)
            })
            .collect()
    }

    fn build(&self, model: &Model) -> Result<Built> {
        let mut built = match model {
            Model::Annulus(p) => {
                let a = hofstadter_annulus(p)?;
                Built {
                    graph: a.graph.clone(),
                    geometry: Some(EdgeGeometry::annulus(&a)?),
                    annulus: Some(a),
                    cage: None,
                }
            }
            Model::Cage(p) => {
                let cage = rhombic_abcage(&p.config())?;
                Built { graph: cage.graph.clone(), geometry: None, annulus: None, cage: Some(cage) }
            }
            Model::Ladder(p) => plain(two_leg_ladder(p)?, false)?,
            Model::Necklace(p) => plain(necklace3(p)?, false)?,
            Model::NodalLoop(p) => plain(nodal_loop_chain(p)?, true)?,
            Model::Qsh(p) => {
                let g = qsh_lattice(p)?;
                let geom = EdgeGeometry::perimeter(&g)?;
                Built { graph: g, geometry: Some(geom), annulus: None, cage: None }
            }
            Model::SocChain(p) => plain(soc_chain(p)?, true)?,
            Model::Ssh(p) => plain(ssh_chain(p)?, true)?,
            Model::Chevron(_) | Model::Parametric(_) => {
                return Err(Error::Config(format!("model `{}` has no lattice", model.name())))
            }
        };
        if let Some(d) = &self.disorder {
            let mut sites = d.defect_sites.clone();
            if !d.defect_coords.is_empty() {
                let a = built
                    .annulus
                    .as_ref()
                    .ok_or_else(|| Error::param("disorder.defect_coords", "only available for the annulus"))?;
                for c in &d.defect_coords {
                    let i = a.index_of.get(&(c[0], c[1])).ok_or_else(|| {
                        Error::param("disorder.defect_coords", format!("no site at ({}, {})", c[0], c[1]))
                    })?;
                    sites.push(*i);
                }
            }
            let spec = DisorderSpec {
                sigma_onsite: d.sigma_onsite,
                sigma_hopping: d.sigma_hopping,
                defect_sites: sites,
                defect_strength: d.defect_strength,
                seed: self.seed,
            };
            built.graph = apply_disorder(&built.graph, &spec)?;
        }
        Ok(built)
    }
}

fn plain(graph: LatticeGraph, chain: bool) -> Result<Built> {
    let geometry = if chain { Some(EdgeGeometry::chain(&graph)?) } else { None };
    Ok(Built { graph, geometry, annulus: None, cage: None })
}

fn check_params(p: &TaskParams) -> Result<()> {
    let pos = |name: &str, x: Option<f64>| match x {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(Error::param(name, "must be positive and finite")),
        _ => Ok(()),
    };
    pos("params.t_end", p.t_end)?;
    for (name, w) in [("params.edge_window", p.edge_window), ("params.nu_range", p.nu_range)] {
        if let Some([lo, hi]) = w {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(name, "must be a finite increasing pair"));
            }
        }
    }
    for (name, n, min) in [
        ("params.n_alpha", p.n_alpha, 3),
        ("params.n_times", p.n_times, 2),
        ("params.n_nu", p.n_nu, 3),
        ("params.nk", p.nk, 4),
        ("params.edge_depth", p.edge_depth, 1),
    ] {
        if n.is_some_and(|n| n < min) {
            return Err(Error::param(name, format!("must be >= {min}")));
        }
    }
    if let Some(d) = &p.drive {
        if !(d.frequency.is_finite() && d.amplitude.is_finite() && d.loss.is_finite() && d.loss >= 0.0) {
            return Err(Error::param("params.drive", "frequency, amplitude and loss must be finite, loss >= 0"));
        }
    }
    Ok(())
}

/// Validates `cfg` and produces its artifacts.
pub fn run_scenario(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let mut out = run_task(cfg, exec)?;
    let mut summary = Map::new();
    summary.insert("model".into(), json!(cfg.model.name));
    summary.insert("task".into(), json!(cfg.task));
    summary.insert("seed".into(), json!(cfg.seed));
    summary.append(&mut out.summary);
    out.artifacts.push(Artifact { name: "summary.json".into(), bytes: json_bytes(&Value::Object(summary.clone())) });
    out.artifacts.retain(|a| cfg.output.formats.iter().any(|f| a.name.ends_with(f.extension())));
    Ok(ScenarioOutput { artifacts: out.artifacts, summary })
}

fn run_task(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    let (model, task) = cfg.resolve()?;
    match task {
        Task::Spectrum => spectrum_task(cfg, &model),
        Task::PumpSweep => pump_task(cfg, &model, exec),
        Task::Evolve => evolve_task(cfg, &model, exec),
        Task::Invariant => invariant_task(cfg, &model, exec),
        Task::Sweep => sweep_task(cfg, exec),
    }
}

// ---------------------------------------------------------------- output

enum Cell {
    F(f64),
    I(i64),
    S(String),
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        let rec: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(x),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => s,
            })
            .collect();
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("json serializes");
    b.push(b'\n');
    b
}

fn artifact(name: &str, bytes: Vec<u8>) -> Artifact {
    Artifact { name: name.into(), bytes }
}

fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn need<T: Copy>(x: Option<T>, name: &str) -> Result<T> {
    x.ok_or_else(|| Error::param(name, "required for this model and task"))
}

// ---------------------------------------------------------------- tasks

fn spectrum_task(cfg: &ScenarioConfig, model: &Model) -> Result<ScenarioOutput> {
    let b = cfg.build(model)?;
    let depth = cfg.params.edge_depth.unwrap_or(1);
    let mut s = diagonalize_graph(&b.graph)?;
    if let Some(geom) = &b.geometry {
        s.annotate(geom, depth);
    }
    let mut head = headers(&["index", "energy", "ipr"]);
    if b.geometry.is_some() {
        head.push("edge_weight".into());
    }
    let rows = (0..s.len()).map(|i| {
        let mut r = vec![Cell::I(i as i64), Cell::F(s.eigenvalues[i]), Cell::F(s.ipr[i])];
        if !s.edge_weight.is_empty() {
            r.push(Cell::F(s.edge_weight[i]));
        }
        r
    });
    let artifacts = vec![artifact("spectrum.csv", csv_bytes(&head, rows)?)];

    let mut summary = Map::new();
    let e = &s.eigenvalues;
    summary.insert("n_states".into(), json!(s.len()));
    summary.insert("energy_min".into(), json!(e[0]));
    summary.insert("energy_max".into(), json!(e[e.len() - 1]));
    summary.insert("min_abs_energy".into(), json!(e.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)));
    if let Some([lo, hi]) = cfg.params.edge_window {
        let geom = b
            .geometry
            .as_ref()
            .ok_or_else(|| Error::param("params.edge_window", "model has no boundary geometry"))?;
        let opts = EdgeModeOptions { edge_depth: depth, ..Default::default() };
        let modes = detect_edge_modes(&s, geom, (lo, hi), &opts)?;
        summary.insert("edge_modes".into(), json!(modes.len()));
        summary.insert("edge_mode_energies".into(), json!(modes.iter().map(|m| m.energy).collect::<Vec<_>>()));
        summary.insert("edge_mode_weights".into(), json!(modes.iter().map(|m| m.edge_weight).collect::<Vec<_>>()));
        summary.insert("edge_mode_tags".into(), json!(modes.iter().map(|m| m.tag.as_str()).collect::<Vec<_>>()));
    }
    if let Model::Ladder(p) = model {
        let j = chiral_current_ground_state(p)?;
        summary.insert("chiral_current".into(), json!(j.value));
        summary.insert("ground_state_degenerate".into(), json!(j.degenerate));
    }
    Ok(ScenarioOutput { artifacts, summary })
}

fn pump_task(cfg: &ScenarioConfig, model: &Model, exec: Execution) -> Result<ScenarioOutput> {
    let Model::Annulus(p) = model else { unreachable!("checked by supports") };
    let n = cfg.params.n_alpha.unwrap_or(101);
    let alphas = linspace(0.0, TAU, n);
    let opts = PumpOptions { edge_depth: cfg.params.edge_depth.unwrap_or(1), ..Default::default() };
    let sweep = laughlin_pump_sweep(p, &alphas, &opts, exec)?;
    let rows = (0..alphas.len()).flat_map(|i| {
        let s = &sweep.spectra[i];
        (0..s.len())
            .map(|k| {
                vec![
                    Cell::I(i as i64),
                    Cell::F(alphas[i]),
                    Cell::I(k as i64),
                    Cell::F(s.eigenvalues[k]),
                    Cell::S(sweep.tags[i][k].as_str().into()),
                ]
            })
            .collect::<Vec<_>>()
    });
    let csv = csv_bytes(&headers(&["alpha_index", "alpha", "level", "energy", "tag"]), rows)?;

    let (mut outer, mut inner, mut expected) = (Map::new(), Map::new(), Map::new());
    let rational = rational_approx(p.phi / TAU, 64, 1e-9).filter(|&(pp, q)| pp > 0 && pp < q);
    let windings = rational.map(|(pp, q)| diophantine_windings(pp, q)).transpose()?;
    for g in &sweep.gaps {
        let flow = sweep.spectral_flow(g.h)?;
        let key = format!("h{}", g.h);
        outer.insert(key.clone(), json!(flow.count(EdgeTag::Outer)));
        inner.insert(key.clone(), json!(flow.count(EdgeTag::Inner)));
        if let Some(w) = windings.as_ref().and_then(|d| d.gap(g.h).ok()) {
            expected.insert(key, json!(w));
        }
    }
    let mut summary = Map::new();
    summary.insert("n_alpha".into(), json!(n));
    summary.insert("periodicity_error".into(), json!(sweep.periodicity_error()));
    summary.insert("open_gaps".into(), json!(sweep.gaps.iter().map(|g| g.h).collect::<Vec<_>>()));
    summary.insert("flow_outer".into(), Value::Object(outer.clone()));
    summary.insert("flow_inner".into(), Value::Object(inner.clone()));
    summary.insert("diophantine_windings".into(), Value::Object(expected));
    let flow = json!({ "outer": outer, "inner": inner });
    Ok(ScenarioOutput {
        artifacts: vec![artifact("pump_sweep.csv", csv), artifact("flow.json", json_bytes(&flow))],
        summary,
    })
}

fn evolve_task(cfg: &ScenarioConfig, model: &Model, exec: Execution) -> Result<ScenarioOutput> {
    let p = &cfg.params;
    let n_times = p.n_times.unwrap_or(400);
    let ctrl = StepControl::default();
    let mut summary = Map::new();
    match model {
        Model::Parametric(m) => {
            let times = time_grid(p.t_end.unwrap_or(PI / m.j_eff.abs().max(f64::MIN_POSITIVE)), n_times);
            let r = rwa_validation(m, &times, &ctrl)?;
            let rows = (0..times.len()).map(|k| {
                vec![Cell::F(times[k]), Cell::F(r.infidelity[k]), Cell::F(r.transfer_full[k]), Cell::F(r.transfer_rwa[k])]
            });
            let csv = csv_bytes(&headers(&["t", "infidelity", "transfer_full", "transfer_rwa"]), rows)?;
            summary.insert("j_eff".into(), json!(m.j_eff));
            summary.insert("max_infidelity".into(), json!(r.max_infidelity));
            summary.insert("max_transfer_full".into(), json!(r.max_transfer_full));
            Ok(ScenarioOutput { artifacts: vec![artifact("rwa.csv", csv)], summary })
        }
        Model::Chevron(s) => {
            let [lo, hi] = need(p.nu_range, "params.nu_range")?;
            let nus = linspace(lo, hi, p.n_nu.unwrap_or(21));
            let times = time_grid(need(p.t_end, "params.t_end")?, n_times);
            let ch = chevron_scan(s, &nus, &times, &ctrl, exec)?;
            let rows = (0..nus.len())
                .flat_map(|i| (0..times.len()).map(move |k| (i, k)))
                .map(|(i, k)| vec![Cell::F(ch.nus[i]), Cell::F(times[k]), Cell::F(ch.population[i][k])]);
            let csv = csv_bytes(&headers(&["nu", "t", "population"]), rows)?;
            let eta = s.epsilon / ch.resonance;
            let bessel = s.g * bessel_j(1, eta).abs();
            summary.insert("epsilon".into(), json!(s.epsilon));
            summary.insert("resonance".into(), json!(ch.resonance));
            summary.insert("eta".into(), json!(eta));
            summary.insert("g_prime".into(), json!(ch.g_prime));
            summary.insert("g_bessel".into(), json!(bessel));
            summary.insert("relative_error".into(), json!((ch.g_prime - bessel).abs() / bessel));
            Ok(ScenarioOutput { artifacts: vec![artifact("chevron.csv", csv)], summary })
        }
        Model::Cage(cp) => {
            let b = cfg.build(model)?;
            let cage = b.cage.expect("cage model builds a cage");
            let start = p.cage_start.unwrap_or((cp.n_cells / 2, Sublattice::A, 0));
            let times = time_grid(need(p.t_end, "params.t_end")?, n_times);
            let r = ab_caging_dynamics(&cage, start, &times)?;
            summary.insert("start".into(), json!(start));
            summary.insert("max_radius".into(), json!(r.max_radius));
            let far = r.max_population(&cage, |n, s, _| s == Sublattice::A && n.abs_diff(start.0) > 1);
            summary.insert("max_population_beyond_neighbours".into(), json!(far));
            let csv = populations_csv(&r.trajectory.times, &r.trajectory.populations(), r.trajectory.norm())?;
            Ok(ScenarioOutput { artifacts: vec![artifact("populations.csv", csv)], summary })
        }
        Model::Annulus(_) if p.drive.is_some() => {
            let d = p.drive.as_ref().unwrap();
            let b = cfg.build(model)?;
            let a = b.annulus.as_ref().expect("annulus model builds an annulus");
            let pump_site = *a
                .index_of
                .get(&(d.pump[0], d.pump[1]))
                .ok_or_else(|| Error::param("params.drive.pump", "no site at these coordinates"))?;
            let mut g = b.graph.clone();
            for i in 0..g.n_sites() {
                g.set_loss(i, d.loss)?;
            }
            let drive = DriveProtocol { pump_site, amplitude: d.amplitude, frequency: d.frequency, envelope: Envelope::Constant };
            let tag = match d.edge {
                EdgeSel::Outer => EdgeTag::Outer,
                EdgeSel::Inner => EdgeTag::Inner,
            };
            let times = time_grid(need(p.t_end, "params.t_end")?, n_times);
            let ctrl = StepControl { rtol: 1e-7, atol: 1e-9, ..Default::default() };
            let geom = b.geometry.as_ref().expect("annulus has a geometry");
            let flow = driven_steady_flow(&g, geom, tag, &drive, &times, &ctrl)?;
            let rows = (0..times.len()).map(|k| vec![Cell::F(times[k]), Cell::F(flow.centroid_angle[k])]);
            let angle = csv_bytes(&headers(&["t", "centroid_angle"]), rows)?;
            let last = flow.intensities.last().expect("non-empty grid");
            let rows = (0..g.n_sites()).map(|i| {
                let pos = g.site(i).position;
                vec![Cell::I(i as i64), Cell::F(pos[0]), Cell::F(pos[1]), Cell::F(last[i])]
            });
            let field = csv_bytes(&headers(&["site", "x", "y", "intensity"]), rows)?;
            summary.insert("frequency".into(), json!(d.frequency));
            summary.insert("circulation".into(), json!(flow.circulation));
            summary.insert("angular_velocity".into(), json!(flow.angular_velocity));
            Ok(ScenarioOutput { artifacts: vec![artifact("edge_flow.csv", angle), artifact("intensity.csv", field)], summary })
        }
        Model::Ssh(sp) if p.displacement == Some(true) => {
            let b = cfg.build(model)?;
            let window = displacement_window(sp.g_a.abs().min(sp.g_b.abs()))?;
            let times = time_grid(p.t_end.unwrap_or(window.1), n_times);
            let psi0 = basis_state(b.graph.hilbert_dim(), p.start.unwrap_or(0))?;
            let cd = chiral_displacement_series(&b.graph, &psi0, &times, window)?;
            let rows = (0..times.len()).map(|k| vec![Cell::F(times[k]), Cell::F(cd.series[k])]);
            let csv = csv_bytes(&headers(&["t", "chiral_displacement"]), rows)?;
            summary.insert("window".into(), json!([window.0, window.1]));
            summary.insert("time_average".into(), json!(cd.time_average));
            summary.insert("winding_estimate".into(), json!(cd.winding_estimate));
            summary.insert("band".into(), json!([cd.band.0, cd.band.1]));
            Ok(ScenarioOutput { artifacts: vec![artifact("displacement.csv", csv)], summary })
        }
        _ => {
            let b = cfg.build(model)?;
            let times = time_grid(need(p.t_end, "params.t_end")?, n_times);
            let psi0 = basis_state(b.graph.hilbert_dim(), p.start.unwrap_or(0))?;
            let tr = evolve_graph(&b.graph, &psi0, &times)?;
            let pops = tr.populations();
            summary.insert("final_norm".into(), json!(tr.norm()[tr.norm().len() - 1]));
            if let Model::Necklace(_) = model {
                necklace_summary(&times, &pops, &mut summary);
            }
            let csv = populations_csv(&times, &pops, tr.norm())?;
            Ok(ScenarioOutput { artifacts: vec![artifact("populations.csv", csv)], summary })
        }
    }
}

fn populations_csv(times: &[f64], pops: &[Vec<f64>], norm: &[f64]) -> Result<Vec<u8>> {
    let n = pops.first().map_or(0, |p| p.len());
    let mut head = headers(&["t", "norm"]);
    head.extend((0..n).map(|i| format!("p{i}")));
    let rows = (0..times.len()).map(|k| {
        let mut r = vec![Cell::F(times[k]), Cell::F(norm[k])];
        r.extend(pops[k].iter().map(|&x| Cell::F(x)));
        r
    });
    csv_bytes(&head, rows)
}

/// First local maximum above one half, as a chirality marker.
fn first_peak(times: &[f64], p: &[f64]) -> Option<f64> {
    (1..p.len().saturating_sub(1))
        .find(|&k| p[k] > 0.5 && p[k] >= p[k - 1] && p[k] >= p[k + 1])
        .map(|k| times[k])
}

fn necklace_summary(times: &[f64], pops: &[Vec<f64>], summary: &mut Map<String, Value>) {
    let series = |i: usize| pops.iter().map(|p| p[i]).collect::<Vec<f64>>();
    let (p2, p3) = (series(1), series(2));
    let dev = p2.iter().zip(&p3).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (t2, t3) = (first_peak(times, &p2), first_peak(times, &p3));
    let circulation = if dev < 1e-8 {
        0
    } else {
        match (t2, t3) {
            (Some(a), Some(b)) if a < b => 1,
            (Some(_), Some(_)) => -1,
            (Some(_), None) => 1,
            (None, Some(_)) => -1,
            (None, None) => 0,
        }
    };
    let order = match circulation {
        1 => "1-2-3",
        -1 => "1-3-2",
        _ => "symmetric",
    };
    summary.insert("first_peak_site2".into(), json!(t2));
    summary.insert("first_peak_site3".into(), json!(t3));
    summary.insert("max_p2_p3_deviation".into(), json!(dev));
    summary.insert("order".into(), json!(order));
    summary.insert("circulation".into(), json!(circulation));
}

fn loop_csv(l: &DLoop) -> Result<Vec<u8>> {
    let n = l.samples.len();
    let rows = (0..n).map(|i| {
        let d = l.samples[i];
        vec![Cell::F(TAU * i as f64 / n as f64), Cell::F(d[0]), Cell::F(d[1]), Cell::F(d[2])]
    });
    csv_bytes(&headers(&["k", "dx", "dy", "dz"]), rows)
}

fn invariant_task(cfg: &ScenarioConfig, model: &Model, exec: Execution) -> Result<ScenarioOutput> {
    let mut summary = Map::new();
    match model {
        Model::Ssh(p) => {
            let nk = cfg.params.nk.unwrap_or(256);
            let w = ssh_winding(p.g_a, p.g_b)?;
            let l = DLoop::sample(nk, |k| ssh_bloch(k, p.g_a, p.g_b));
            summary.insert("winding".into(), json!(w));
            Ok(ScenarioOutput { artifacts: vec![artifact("bloch_loop.csv", loop_csv(&l)?)], summary })
        }
        Model::SocChain(p) => {
            let nk = cfg.params.nk.unwrap_or(256);
            let l = DLoop::sample(nk, |k| p.bloch_vector(k));
            let w = winding_number(&l)?;
            summary.insert("winding".into(), json!(w.value));
            summary.insert("residual".into(), json!(w.residual));
            Ok(ScenarioOutput { artifacts: vec![artifact("bloch_loop.csv", loop_csv(&l)?)], summary })
        }
        Model::NodalLoop(p) => {
            let nk = cfg.params.nk.unwrap_or(64);
            let map = nodal_winding_map(p.t0p, p.m, p.d, nk, exec)?;
            let step = TAU / nk as f64;
            let rows = (0..nk * nk).map(|i| {
                let (iy, iz) = (i / nk, i % nk);
                let (ky, kz) = (iy as f64 * step, iz as f64 * step);
                vec![
                    Cell::I(iy as i64),
                    Cell::I(iz as i64),
                    Cell::F(ky),
                    Cell::F(kz),
                    Cell::F(nodal_mass(p.m, p.d, ky, kz)),
                    map.winding[i].map_or(Cell::S(String::new()), Cell::I),
                ]
            });
            let csv = csv_bytes(&headers(&["iy", "iz", "ky", "kz", "m_eff", "winding"]), rows)?;
            summary.insert("nk".into(), json!(nk));
            summary.insert("loops".into(), json!(map.loops));
            summary.insert("nodal_points".into(), json!(map.winding.iter().filter(|w| w.is_none()).count()));
            summary.insert("winding_one_points".into(), json!(map.winding.iter().filter(|w| **w == Some(1)).count()));
            Ok(ScenarioOutput { artifacts: vec![artifact("nodal_map.csv", csv)], summary })
        }
        Model::Annulus(p) => {
            let (pp, q) = rational_approx(p.phi / TAU, 64, 1e-9)
                .filter(|&(pp, q)| pp > 0 && pp < q)
                .ok_or_else(|| Error::param("model.params.phi", "must be 2 pi p / q with 0 < p < q <= 64"))?;
            let nk = cfg.params.nk.unwrap_or(24);
            let bloch = hofstadter_bloch(pp, q, p.hopping)?;
            let d = diophantine_windings(pp, q)?;
            let expect = d.band_cherns();
            let bands: Vec<usize> = (0..q as usize).collect();
            let cherns = exec::map(exec, &bands, |&b| match chern_number(&bloch, b, nk, Execution::Sequential) {
                Ok(c) => Ok(Some(c.chern)),
                Err(Error::BandTouching { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .into_iter()
            .collect::<Result<Vec<Option<i64>>>>()?;
            let cell = |x: Option<i64>| x.map_or(Cell::S(String::new()), Cell::I);
            let rows = bands.iter().map(|&b| vec![Cell::I(b as i64 + 1), cell(cherns[b]), cell(expect[b])]);
            let csv = csv_bytes(&headers(&["band", "chern", "diophantine_chern"]), rows)?;
            let mut w = Map::new();
            for g in &d.gaps {
                w.insert(format!("h{}", g.h), json!(g.winding()));
            }
            summary.insert("p".into(), json!(pp));
            summary.insert("q".into(), json!(q));
            summary.insert("band_cherns".into(), json!(cherns));
            summary.insert("gap_windings".into(), Value::Object(w));
            Ok(ScenarioOutput { artifacts: vec![artifact("cherns.csv", csv)], summary })
        }
        _ => unreachable!("checked by supports"),
    }
}

fn sweep_task(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    let points = cfg.sweep_points()?;
    let results = exec::try_map(exec, &points, |c| run_task(c, exec))?;
    let patches: Vec<SweepPoint> = {
        let sweep = cfg.params.sweep.as_ref().expect("validated");
        let mut v = sweep.points.clone();
        if let Some(name) = &sweep.parameter {
            v.extend(sweep.values.iter().map(|&x| {
                let mut model = Map::new();
                model.insert(name.clone(), json!(x));
                SweepPoint { model, params: Map::new() }
            }));
        }
        v
    };

    let mut artifacts = Vec::new();
    for (i, r) in results.iter().enumerate() {
        for a in &r.artifacts {
            artifacts.push(Artifact { name: format!("p{i:03}_{}", a.name), bytes: a.bytes.clone() });
        }
        artifacts.push(Artifact {
            name: format!("p{i:03}_summary.json"),
            bytes: json_bytes(&Value::Object(r.summary.clone())),
        });
    }

    let mut param_cols: Vec<String> = patches.iter().flat_map(|p| p.model.keys().cloned()).collect();
    param_cols.sort();
    param_cols.dedup();
    let mut value_cols: Vec<String> = results
        .iter()
        .flat_map(|r| r.summary.iter().filter(|(_, v)| v.is_number()).map(|(k, _)| k.clone()))
        .collect();
    value_cols.sort();
    value_cols.dedup();
    let num = |v: Option<&Value>| match v {
        Some(Value::Number(n)) if n.is_i64() => Cell::I(n.as_i64().unwrap()),
        Some(Value::Number(n)) if n.is_u64() => Cell::S(n.to_string()),
        Some(Value::Number(n)) => Cell::F(n.as_f64().unwrap()),
        _ => Cell::S(String::new()),
    };
    let mut head = vec!["index".to_string()];
    head.extend(param_cols.iter().cloned());
    head.extend(value_cols.iter().cloned());
    let rows = (0..results.len()).map(|i| {
        let mut r = vec![Cell::I(i as i64)];
        r.extend(param_cols.iter().map(|k| num(patches[i].model.get(k))));
        r.extend(value_cols.iter().map(|k| num(results[i].summary.get(k))));
        r
    });
    artifacts.push(artifact("sweep.csv", csv_bytes(&head, rows)?));

    let mut summary = Map::new();
    summary.insert("inner_task".into(), json!(points[0].task));
    summary.insert(
        "points".into(),
        Value::Array(
            results
                .iter()
                .zip(&patches)
                .map(|(r, p)| json!({ "patch": p, "summary": r.summary }))
                .collect(),
        ),
    );
    Ok(ScenarioOutput { artifacts, summary })
}

// ---------------------------------------------------------------- presets

/// A named, ready-to-run configuration reproducing one figure.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Desk-scale wall-time budget in seconds (optimized build).
    pub budget_s: f64,
    pub config: ScenarioConfig,
}

fn cfg(v: Value) -> ScenarioConfig {
    serde_json::from_value(v).expect("preset config is well formed")
}

pub fn presets() -> Vec<Preset> {
    let quarter = TAU / 4.0;
    let necklace_point = |ts: f64| json!({ "model": { "theta12": ts / 3.0, "theta23": ts / 3.0, "theta31": ts / 3.0 } });
    let drive = |x: i64, y: i64, f: f64, edge: &str| json!({ "params": { "drive": { "pump": [x, y], "frequency": f, "amplitude": 0.1, "edge": edge } } });
    vec![
        Preset {
            name: "fig4-chiral-necklace",
            description: "three-site loop with decay at total flux pi/2, pi and 3pi/2",
            budget_s: 5.0,
            config: cfg(json!({
                "model": { "name": "necklace", "params": { "coupling": 1.0, "theta12": 0.0, "theta23": 0.0, "theta31": 0.0, "kappa": 0.0125 } },
                "task": "sweep",
                "params": { "t_end": 6.0, "n_times": 1200, "start": 0, "sweep": { "task": "evolve", "points": [
                    necklace_point(PI / 2.0), necklace_point(PI), necklace_point(1.5 * PI)
                ] } }
            })),
        },
        Preset {
            name: "fig5-chevron",
            description: "parametrically coupled qubits: chevron scans and the extracted coupling versus modulation amplitude",
            budget_s: 60.0,
            config: cfg(json!({
                "model": { "name": "chevron", "params": { "g": 1.0, "delta": 40.0, "epsilon": 40.0 } },
                "task": "sweep",
                "params": { "nu_range": [39.0, 41.0], "n_nu": 21, "t_end": 80.0, "n_times": 800,
                    "sweep": { "task": "evolve", "parameter": "epsilon", "values": [20.0, 40.0, 60.0] } }
            })),
        },
        Preset {
            name: "cage",
            description: "Aharonov-Bohm caging in the U(2) and pi-flux rhombic chains",
            budget_s: 5.0,
            config: cfg(json!({
                "model": { "name": "cage", "params": { "n_cells": 9, "coupling": 1.0, "kind": "non-abelian" } },
                "task": "sweep",
                "params": { "t_end": 50.0, "n_times": 500, "sweep": { "task": "evolve", "points": [
                    { "params": { "cage_start": [4, "A", 0] } },
                    { "params": { "cage_start": [4, "A", 1] } },
                    { "model": { "kind": "abelian-pi" }, "params": { "cage_start": [4, "A", 0] } }
                ] } }
            })),
        },
        Preset {
            name: "fig8-laughlin-pump",
            description: "annulus spectrum versus threaded flux at phi = 2pi/4 and the edge spectral flow",
            budget_s: 60.0,
            config: cfg(json!({
                "model": { "name": "annulus", "params": { "nx": 12, "ny": 12, "hole_nx": 4, "hole_ny": 4, "phi": quarter } },
                "task": "pump-sweep",
                "params": { "n_alpha": 101 }
            })),
        },
        Preset {
            name: "fig9-chiral-flow",
            description: "driven-dissipative edge flow for outer and inner pumps in gaps 1 and 3",
            budget_s: 60.0,
            config: cfg(json!({
                "model": { "name": "annulus", "params": { "nx": 24, "ny": 24, "hole_nx": 6, "hole_ny": 6, "phi": quarter } },
                "task": "sweep",
                "params": { "t_end": 60.0, "n_times": 120, "sweep": { "task": "evolve", "points": [
                    drive(0, 12, -1.76, "outer"), drive(0, 12, 1.47, "outer"),
                    drive(8, 12, -1.97, "inner"), drive(8, 12, 1.97, "inner")
                ] } }
            })),
        },
        Preset {
            name: "fig9-disorder",
            description: "outer-edge flow in gap 1 with weak disorder and a strong 2x2 defect on the upper edge",
            budget_s: 30.0,
            config: cfg(json!({
                "model": { "name": "annulus", "params": { "nx": 24, "ny": 24, "hole_nx": 6, "hole_ny": 6, "phi": quarter } },
                "task": "evolve",
                "params": { "t_end": 60.0, "n_times": 120,
                    "drive": { "pump": [0, 12], "frequency": -1.75, "amplitude": 0.1, "edge": "outer" } },
                "disorder": { "sigma_onsite": 0.05, "sigma_hopping": 0.05, "defect_strength": 30.0,
                    "defect_coords": [[11, 22], [12, 22], [11, 23], [12, 23]] },
                "seed": 7
            })),
        },
        Preset {
            name: "fig10-ladder-current",
            description: "ground-state chiral current of the 50-rung flux ladder versus flux",
            budget_s: 30.0,
            config: cfg(json!({
                "model": { "name": "ladder", "params": { "n_rungs": 50, "t0": 1.0, "phi": 0.0 } },
                "task": "sweep",
                "params": { "sweep": { "task": "spectrum", "parameter": "phi",
                    "values": linspace(-PI, PI, 41) } }
            })),
        },
        Preset {
            name: "fig11-soc-chain",
            description: "spin-orbit chain end modes and bulk gap versus Zeeman field",
            budget_s: 10.0,
            config: cfg(json!({
                "model": { "name": "soc-chain", "params": { "n_cells": 16, "t_z": 1.0, "h_z": 0.3, "delta0": 0.99 } },
                "task": "sweep",
                "params": { "edge_window": [-0.1, 0.1], "edge_depth": 2, "sweep": { "task": "spectrum", "parameter": "h_z",
                    "values": linspace(0.0, 4.0, 41) } }
            })),
        },
        Preset {
            name: "fig12-nodal-map",
            description: "winding of the (ky, kz) slices of the nodal-loop model",
            budget_s: 10.0,
            config: cfg(json!({
                "model": { "name": "nodal-loop", "params": { "n_cells": 16, "t0p": 1.0, "m": 0.0, "d": 0.5 } },
                "task": "invariant",
                "params": { "nk": 64 }
            })),
        },
        Preset {
            name: "fig14-chiral-displacement",
            description: "chiral displacement of a four-site chain in the trivial and topological cases",
            budget_s: 5.0,
            config: cfg(json!({
                "model": { "name": "ssh", "params": { "n_cells": 2, "g_a": 5.0, "g_b": 1.0 } },
                "task": "sweep",
                "params": { "displacement": true, "start": 1, "n_times": 2000, "sweep": { "task": "evolve", "points": [
                    { "model": { "g_a": 5.0, "g_b": 1.0 } }, { "model": { "g_a": 1.0, "g_b": 5.0 } }
                ] } }
            })),
        },
        Preset {
            name: "fig15-qsh",
            description: "6x6 spin Hall lattice spectrum without and with spin mixing",
            budget_s: 5.0,
            config: cfg(json!({
                "model": { "name": "qsh", "params": { "nx": 6, "ny": 6, "t0": 1.0, "j_flux": 0.25, "k_mix": 0.0, "chi": 0.0 } },
                "task": "sweep",
                "params": { "edge_window": [1.0, 2.0], "sweep": { "task": "spectrum", "parameter": "k_mix", "values": [0.0, 0.1] } }
            })),
        },
        Preset {
            name: "rwa-validation",
            description: "full parametric coupler versus its rotating-wave model at three coupling strengths",
            budget_s: 30.0,
            config: cfg(json!({
                "model": { "name": "parametric", "params": { "omega1": 100.0, "omega2": 60.0, "j_eff": 1.0, "n_max": 2 } },
                "task": "sweep",
                "params": { "n_times": 200, "sweep": { "task": "evolve", "parameter": "j_eff", "values": [1.0, 0.5, 0.25] } }
            })),
        },
    ]
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let all = presets();
    all.iter().find(|p| p.name == name).map(|p| p.config.clone()).ok_or_else(|| {
        let names: Vec<&str> = all.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset `{name}`; available presets: {}", names.join(", ")))
    })
}
