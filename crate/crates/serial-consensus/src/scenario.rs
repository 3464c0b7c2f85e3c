//! Scenario-driven experiment runner: a flat TOML config format with one
//! table per scenario, bundled presets, and CSV/text artifact emission.
//!
//! Scenarios come in two kinds: `simulation` (build a formation, integrate,
//! report stability and transient performance per size) and `closure`
//! (certify implementability of controller sums and products over a base
//! graph). All file writes are atomic (temp file + rename) and all outputs
//! are deterministic for a given config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;

use crate::closed_loop::{assemble, Coordinates, StateVector};
use crate::controller::ControllerSpec;
use crate::error::{Error, Result};
use crate::graph::{named_topology, LaplacianMatrix, Topology, WeightedDigraph};
use crate::membership::check_membership;
use crate::numfmt::fmt_g;
use crate::performance::evaluate_performance;
use crate::simulate::{integrate, ErrorMetric};

const DEFAULT_HORIZON: f64 = 30.0;
const DEFAULT_DT: f64 = 0.02;

/// Where a graph comes from: a named topology instantiated per size, or an
/// edge-list file with a fixed size.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Named(Topology),
    File(PathBuf),
}

impl GraphSource {
    fn parse(spec: &str, base_dir: &Path) -> GraphSource {
        match spec.parse::<Topology>() {
            Ok(t) => GraphSource::Named(t),
            Err(_) => GraphSource::File(base_dir.join(spec)),
        }
    }

    pub fn build(&self, n: usize) -> Result<WeightedDigraph> {
        match self {
            GraphSource::Named(kind) => named_topology(*kind, n),
            GraphSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let g = WeightedDigraph::from_edge_list(&text)?;
                if g.n() != n {
                    return Err(Error::Config(format!(
                        "graph file {} has {} vertices but the scenario asks for {n}",
                        path.display(),
                        g.n()
                    )));
                }
                Ok(g)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            GraphSource::Named(t) => t.id().to_string(),
            GraphSource::File(p) => p.display().to_string(),
        }
    }
}

/// One scaled Laplacian term of a controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub graph: GraphSource,
    pub scale: f64,
}

impl Term {
    fn laplacian(&self, n: usize) -> Result<LaplacianMatrix> {
        self.graph.build(n)?.laplacian().scale(self.scale)
    }
}

/// How the controller is specified in the config.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerConfig {
    /// `gains = { r1, r0 }`, both Laplacians proportional to the base graph.
    ConventionalGains { r1: f64, r0: f64, base: GraphSource },
    /// `gains = { p1, p2 }`, both cascade Laplacians proportional to the
    /// base graph.
    SerialGains { p1: f64, p2: f64, base: GraphSource },
    /// Explicit `vel` / `pos` terms.
    ConventionalTerms { vel: Term, pos: Term },
    /// Explicit `first` (inner) / `second` (outer) cascade terms.
    SerialTerms { first: Term, second: Term },
}

impl ControllerConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerConfig::ConventionalGains { .. }
            | ControllerConfig::ConventionalTerms { .. } => "conventional",
            ControllerConfig::SerialGains { .. } | ControllerConfig::SerialTerms { .. } => {
                "serial"
            }
        }
    }

    fn build(&self, n: usize) -> Result<ControllerSpec> {
        match self {
            ControllerConfig::ConventionalGains { r1, r0, base } => {
                let l = base.build(n)?.laplacian();
                ControllerSpec::conventional_gains(*r1, *r0, &l)
            }
            ControllerConfig::SerialGains { p1, p2, base } => {
                let l = base.build(n)?.laplacian();
                ControllerSpec::serial_gains(*p1, *p2, &l)
            }
            ControllerConfig::ConventionalTerms { vel, pos } => {
                ControllerSpec::conventional(vel.laplacian(n)?, pos.laplacian(n)?)
            }
            ControllerConfig::SerialTerms { first, second } => {
                ControllerSpec::serial(first.laplacian(n)?, second.laplacian(n)?)
            }
        }
    }
}

/// Initial-condition rule.
#[derive(Debug, Clone, PartialEq)]
pub enum InitRule {
    /// x = 0, all velocities zero except the first agent's, set to one.
    ImpulseLeader,
    Explicit { x0: Vec<f64>, v0: Vec<f64> },
}

impl InitRule {
    fn build(&self, n: usize) -> Result<StateVector> {
        match self {
            InitRule::ImpulseLeader => Ok(StateVector::leader_impulse(n)),
            InitRule::Explicit { x0, v0 } => {
                if x0.len() != n || v0.len() != n {
                    return Err(Error::Config(format!(
                        "explicit init vectors have lengths {} and {}, expected {n}",
                        x0.len(),
                        v0.len()
                    )));
                }
                StateVector::new(
                    DVector::from_vec(x0.clone()),
                    DVector::from_vec(v0.clone()),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Trajectory,
    Performance,
    Spectrum,
    Gnuplot,
    Certificates,
}

impl OutputKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "trajectory" => Ok(OutputKind::Trajectory),
            "performance" => Ok(OutputKind::Performance),
            "spectrum" => Ok(OutputKind::Spectrum),
            "gnuplot" => Ok(OutputKind::Gnuplot),
            "certificates" => Ok(OutputKind::Certificates),
            other => Err(Error::Config(format!(
                "unknown output kind `{other}` (expected trajectory, performance, \
                 spectrum, gnuplot, or certificates)"
            ))),
        }
    }
}

/// A simulation scenario over a list of formation sizes.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub name: String,
    pub topology: GraphSource,
    pub sizes: Vec<usize>,
    pub controller: ControllerConfig,
    pub init: InitRule,
    pub horizon: f64,
    pub dt: f64,
    pub metric: GraphSource,
    pub spacing: Option<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
    pub v_ref: f64,
    pub outputs: Vec<OutputKind>,
}

/// A closure-certification scenario.
#[derive(Debug, Clone)]
pub struct ClosureScenario {
    pub name: String,
    pub topology: GraphSource,
    pub sizes: Vec<usize>,
    pub first: Term,
    pub second: Term,
    pub gain: f64,
    pub outputs: Vec<OutputKind>,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Sim(SimScenario),
    Closure(ClosureScenario),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::Sim(s) => &s.name,
            Scenario::Closure(c) => &c.name,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        match self {
            Scenario::Sim(s) => &s.sizes,
            Scenario::Closure(c) => &c.sizes,
        }
    }
}

// ---------------------------------------------------------------------------
// config parsing

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    I(i64),
    F(f64),
}

impl Num {
    fn get(&self) -> f64 {
        match self {
            Num::I(i) => *i as f64,
            Num::F(f) => *f,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(u64),
    Many(Vec<u64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    graph: String,
    scale: Option<Num>,
}

impl RawTerm {
    fn term(&self, base_dir: &Path) -> Term {
        Term {
            graph: GraphSource::parse(&self.graph, base_dir),
            scale: self.scale.as_ref().map_or(1.0, Num::get),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Option<String>,
    topology: Option<String>,
    n: Option<OneOrMany>,
    controller: Option<String>,
    gains: Option<BTreeMap<String, Num>>,
    base_graph: Option<String>,
    vel: Option<RawTerm>,
    pos: Option<RawTerm>,
    first: Option<RawTerm>,
    second: Option<RawTerm>,
    l0_file: Option<String>,
    l1_file: Option<String>,
    l2_file: Option<String>,
    c: Option<Num>,
    init: Option<String>,
    x0: Option<Vec<Num>>,
    v0: Option<Vec<Num>>,
    horizon: Option<Num>,
    dt: Option<Num>,
    metric: Option<String>,
    spacing: Option<Vec<Num>>,
    offsets: Option<Vec<Num>>,
    v_ref: Option<Num>,
    outputs: Option<Vec<String>>,
}

fn field_err(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("scenario `{name}`: {msg}"))
}

/// A controller term may come as an inline table or as an edge-list file
/// path under its `L*_file` alias, but not both.
fn merge_term(
    name: &str,
    term_key: &str,
    file_key: &str,
    term: &Option<RawTerm>,
    file: &Option<String>,
    base_dir: &Path,
) -> Result<Option<Term>> {
    match (term, file) {
        (Some(_), Some(_)) => Err(field_err(
            name,
            format!("give `{term_key}` or `{file_key}`, not both"),
        )),
        (Some(t), None) => Ok(Some(t.term(base_dir))),
        (None, Some(path)) => Ok(Some(Term {
            graph: GraphSource::File(base_dir.join(path)),
            scale: 1.0,
        })),
        (None, None) => Ok(None),
    }
}

impl RawScenario {
    fn into_scenario(self, name: String, base_dir: &Path) -> Result<Scenario> {
        if !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(format!(
                "scenario name `{name}` must use only letters, digits, `_`, `-` \
                 (it becomes part of output file names)"
            )));
        }

        let topology = self
            .topology
            .as_deref()
            .ok_or_else(|| field_err(&name, "missing field `topology`"))
            .map(|t| GraphSource::parse(t, base_dir))?;

        let sizes: Vec<usize> = match self
            .n
            .as_ref()
            .ok_or_else(|| field_err(&name, "missing field `n`"))?
        {
            OneOrMany::One(v) => vec![*v as usize],
            OneOrMany::Many(vs) => vs.iter().map(|&v| v as usize).collect(),
        };
        if sizes.is_empty() {
            return Err(field_err(&name, "field `n` must list at least one size"));
        }
        if sizes.contains(&0) {
            return Err(field_err(&name, "field `n` must contain positive sizes"));
        }

        match self.kind.as_deref().unwrap_or("simulation") {
            "simulation" => self.into_sim(name, base_dir, topology, sizes),
            "closure" => self.into_closure(name, base_dir, topology, sizes),
            other => Err(field_err(
                &name,
                format!("unknown kind `{other}` (expected `simulation` or `closure`)"),
            )),
        }
    }

    fn into_sim(
        self,
        name: String,
        base_dir: &Path,
        topology: GraphSource,
        sizes: Vec<usize>,
    ) -> Result<Scenario> {
        if self.c.is_some() {
            return Err(field_err(&name, "field `c` belongs to closure scenarios"));
        }
        let controller_kind = self
            .controller
            .as_deref()
            .ok_or_else(|| field_err(&name, "missing field `controller`"))?;

        let controller = match controller_kind {
            "conventional" => {
                if self.first.is_some() || self.second.is_some() || self.l2_file.is_some() {
                    return Err(field_err(
                        &name,
                        "`first`/`second`/`l2_file` are serial terms; a conventional \
                         controller takes `vel`/`pos` (or `l1_file`/`l0_file`) or \
                         `gains = { r1, r0 }`",
                    ));
                }
                let vel = merge_term(&name, "vel", "l1_file", &self.vel, &self.l1_file, base_dir)?;
                let pos = merge_term(&name, "pos", "l0_file", &self.pos, &self.l0_file, base_dir)?;
                match (vel, pos, &self.gains) {
                    (Some(vel), Some(pos), None) => {
                        ControllerConfig::ConventionalTerms { vel, pos }
                    }
                    (None, None, Some(gains)) => {
                        let (r1, r0) = take_gains(&name, gains, "r1", "r0")?;
                        let base = self
                            .base_graph
                            .as_deref()
                            .map(|b| GraphSource::parse(b, base_dir))
                            .unwrap_or_else(|| topology.clone());
                        ControllerConfig::ConventionalGains { r1, r0, base }
                    }
                    (None, None, None) => {
                        return Err(field_err(
                            &name,
                            "a conventional controller needs `gains = { r1, r0 }` or \
                             explicit velocity and position terms",
                        ))
                    }
                    _ => {
                        return Err(field_err(
                            &name,
                            "give either `gains` or both a velocity and a position term, \
                             not a mixture",
                        ))
                    }
                }
            }
            "serial" => {
                if self.vel.is_some() || self.pos.is_some() || self.l0_file.is_some() {
                    return Err(field_err(
                        &name,
                        "`vel`/`pos`/`l0_file` are conventional terms; a serial controller \
                         takes `first`/`second` (or `l1_file`/`l2_file`) or \
                         `gains = { p1, p2 }`",
                    ));
                }
                let first =
                    merge_term(&name, "first", "l1_file", &self.first, &self.l1_file, base_dir)?;
                let second =
                    merge_term(&name, "second", "l2_file", &self.second, &self.l2_file, base_dir)?;
                match (first, second, &self.gains) {
                    (Some(first), Some(second), None) => {
                        ControllerConfig::SerialTerms { first, second }
                    }
                    (None, None, Some(gains)) => {
                        let (p1, p2) = take_gains(&name, gains, "p1", "p2")?;
                        let base = self
                            .base_graph
                            .as_deref()
                            .map(|b| GraphSource::parse(b, base_dir))
                            .unwrap_or_else(|| topology.clone());
                        ControllerConfig::SerialGains { p1, p2, base }
                    }
                    (None, None, None) => {
                        return Err(field_err(
                            &name,
                            "a serial controller needs `gains = { p1, p2 }` or explicit \
                             `first`/`second` terms",
                        ))
                    }
                    _ => {
                        return Err(field_err(
                            &name,
                            "give either `gains` or both cascade terms, not a mixture",
                        ))
                    }
                }
            }
            other => {
                return Err(field_err(
                    &name,
                    format!("unknown controller `{other}` (expected `conventional` or `serial`)"),
                ))
            }
        };

        let init = match (&self.x0, &self.v0) {
            (Some(x0), Some(v0)) => {
                if let Some(rule) = self.init.as_deref() {
                    if rule != "explicit" {
                        return Err(field_err(
                            &name,
                            format!("init = \"{rule}\" conflicts with explicit `x0`/`v0` vectors"),
                        ));
                    }
                }
                if sizes.len() != 1 {
                    return Err(field_err(
                        &name,
                        "explicit init vectors require a single formation size",
                    ));
                }
                InitRule::Explicit {
                    x0: x0.iter().map(Num::get).collect(),
                    v0: v0.iter().map(Num::get).collect(),
                }
            }
            (None, None) => match self.init.as_deref() {
                None | Some("impulse_leader") => InitRule::ImpulseLeader,
                Some("explicit") => {
                    return Err(field_err(
                        &name,
                        "init = \"explicit\" requires `x0` and `v0` vectors",
                    ))
                }
                Some(other) => {
                    return Err(field_err(
                        &name,
                        format!("unknown init rule `{other}` (expected `impulse_leader` or `explicit`)"),
                    ))
                }
            },
            _ => {
                return Err(field_err(
                    &name,
                    "explicit init needs both `x0` and `v0`",
                ))
            }
        };

        let horizon = self.horizon.as_ref().map_or(DEFAULT_HORIZON, Num::get);
        let dt = self.dt.as_ref().map_or(DEFAULT_DT, Num::get);
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(field_err(&name, format!("horizon must be positive, got {horizon}")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(field_err(&name, format!("dt must be positive, got {dt}")));
        }

        let metric = self
            .metric
            .as_deref()
            .map(|m| GraphSource::parse(m, base_dir))
            .unwrap_or(GraphSource::Named(Topology::AheadPath));

        let spacing = self
            .spacing
            .map(|v| v.iter().map(Num::get).collect::<Vec<f64>>());
        let offsets = self
            .offsets
            .map(|v| v.iter().map(Num::get).collect::<Vec<f64>>());
        for (field, vec) in [("spacing", &spacing), ("offsets", &offsets)] {
            if vec.is_some() && sizes.len() != 1 {
                return Err(field_err(
                    &name,
                    format!("`{field}` requires a single formation size"),
                ));
            }
        }
        let v_ref = self.v_ref.as_ref().map_or(0.0, Num::get);

        let outputs = parse_outputs(
            &name,
            self.outputs,
            &[OutputKind::Trajectory, OutputKind::Performance],
        )?;
        if outputs.contains(&OutputKind::Certificates) {
            return Err(field_err(
                &name,
                "output `certificates` belongs to closure scenarios",
            ));
        }

        Ok(Scenario::Sim(SimScenario {
            name,
            topology,
            sizes,
            controller,
            init,
            horizon,
            dt,
            metric,
            spacing,
            offsets,
            v_ref,
            outputs,
        }))
    }

    fn into_closure(
        self,
        name: String,
        base_dir: &Path,
        topology: GraphSource,
        sizes: Vec<usize>,
    ) -> Result<Scenario> {
        let forbidden = [
            ("controller", self.controller.is_some()),
            ("gains", self.gains.is_some()),
            ("base_graph", self.base_graph.is_some()),
            ("vel", self.vel.is_some()),
            ("pos", self.pos.is_some()),
            ("l0_file", self.l0_file.is_some()),
            ("l1_file", self.l1_file.is_some()),
            ("l2_file", self.l2_file.is_some()),
            ("init", self.init.is_some()),
            ("x0", self.x0.is_some()),
            ("v0", self.v0.is_some()),
            ("horizon", self.horizon.is_some()),
            ("dt", self.dt.is_some()),
            ("metric", self.metric.is_some()),
            ("spacing", self.spacing.is_some()),
            ("offsets", self.offsets.is_some()),
            ("v_ref", self.v_ref.is_some()),
        ];
        for (field, present) in forbidden {
            if present {
                return Err(field_err(
                    &name,
                    format!("field `{field}` does not apply to closure scenarios"),
                ));
            }
        }

        let first = self
            .first
            .as_ref()
            .ok_or_else(|| field_err(&name, "missing field `first`"))?
            .term(base_dir);
        let second = self
            .second
            .as_ref()
            .ok_or_else(|| field_err(&name, "missing field `second`"))?
            .term(base_dir);
        let gain = self
            .c
            .as_ref()
            .ok_or_else(|| field_err(&name, "missing field `c` (the gain bound)"))?
            .get();
        if !gain.is_finite() || gain <= 0.0 {
            return Err(field_err(&name, format!("gain bound c must be positive, got {gain}")));
        }

        let outputs = parse_outputs(&name, self.outputs, &[OutputKind::Certificates])?;
        Ok(Scenario::Closure(ClosureScenario {
            name,
            topology,
            sizes,
            first,
            second,
            gain,
            outputs,
        }))
    }
}

fn take_gains(
    name: &str,
    gains: &BTreeMap<String, Num>,
    first_key: &str,
    second_key: &str,
) -> Result<(f64, f64)> {
    for key in gains.keys() {
        if key != first_key && key != second_key {
            return Err(field_err(
                name,
                format!("unknown gain `{key}` (expected `{first_key}` and `{second_key}`)"),
            ));
        }
    }
    let get = |key: &str| -> Result<f64> {
        gains
            .get(key)
            .map(Num::get)
            .ok_or_else(|| field_err(name, format!("missing gain `{key}`")))
    };
    Ok((get(first_key)?, get(second_key)?))
}

fn parse_outputs(
    name: &str,
    raw: Option<Vec<String>>,
    default: &[OutputKind],
) -> Result<Vec<OutputKind>> {
    match raw {
        None => Ok(default.to_vec()),
        Some(list) => list
            .iter()
            .map(|s| OutputKind::parse(s).map_err(|e| field_err(name, e)))
            .collect(),
    }
}

/// Parse a config file's text. Scenarios keep their order of appearance.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Vec<Scenario>> {
    let table: toml::Table = toml::from_str(text)
        .map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
    if table.is_empty() {
        return Err(Error::Config("config declares no scenarios".into()));
    }

    let mut order: Vec<String> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let candidate = inner.trim().to_string();
            if table.contains_key(&candidate) && !order.contains(&candidate) {
                order.push(candidate);
            }
        }
    }
    for key in table.keys() {
        if !order.contains(key) {
            order.push(key.clone());
        }
    }

    order
        .into_iter()
        .map(|name| {
            let value = table.get(&name).expect("key listed from this table");
            let raw: RawScenario = value.clone().try_into().map_err(|e| {
                Error::Config(format!("scenario `{name}`: {e}"))
            })?;
            raw.into_scenario(name, base_dir)
        })
        .collect()
}

/// Load scenarios from a config file path.
pub fn load_config(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base_dir)
}

/// Semantic validation: build every size without simulating.
pub fn validate(scenario: &Scenario) -> Result<()> {
    match scenario {
        Scenario::Sim(sim) => {
            for &n in &sim.sizes {
                sim.build_for(n)?;
            }
        }
        Scenario::Closure(c) => {
            for &n in &c.sizes {
                c.topology.build(n)?;
                c.first.laplacian(n)?;
                c.second.laplacian(n)?;
            }
        }
    }
    Ok(())
}

impl SimScenario {
    /// Construct the controller, initial state, and error metric for one
    /// formation size.
    pub fn build_for(&self, n: usize) -> Result<(ControllerSpec, StateVector, ErrorMetric)> {
        let mut spec = self.controller.build(n)?;
        if self.offsets.is_some() || self.v_ref != 0.0 {
            let offsets = match &self.offsets {
                Some(o) => {
                    if o.len() != n {
                        return Err(Error::Config(format!(
                            "scenario `{}`: offsets have length {}, expected {n}",
                            self.name,
                            o.len()
                        )));
                    }
                    DVector::from_vec(o.clone())
                }
                None => DVector::zeros(n),
            };
            spec = spec.with_offsets(offsets, self.v_ref)?;
        }

        let init = self.init.build(n)?;

        let metric_laplacian = self.metric.build(n)?.laplacian();
        let metric = match &self.spacing {
            Some(d) => {
                if d.len() != n {
                    return Err(Error::Config(format!(
                        "scenario `{}`: spacing has length {}, expected {n}",
                        self.name,
                        d.len()
                    )));
                }
                ErrorMetric::new(metric_laplacian, DVector::from_vec(d.clone()))?
            }
            None => ErrorMetric::plain(metric_laplacian),
        };
        Ok((spec, init, metric))
    }
}

// ---------------------------------------------------------------------------
// running

/// CLI-level overrides and output location.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            dt: None,
            horizon: None,
        }
    }
}

/// One line of the run summary: a (scenario, size) pair.
#[derive(Debug, Clone)]
pub struct RowSummary {
    pub scenario: String,
    pub n: usize,
    pub controller: String,
    pub consensus_stable: Option<bool>,
    pub alpha: Option<f64>,
    pub observed_ratio: Option<f64>,
    pub bound_satisfied: Option<bool>,
    pub time_of_peak: Option<f64>,
    pub initial_norm: Option<f64>,
    pub peak_norm: Option<f64>,
    pub truncated: bool,
    pub note: Option<String>,
    pub error: Option<String>,
}

impl RowSummary {
    fn empty(scenario: &str, n: usize, controller: &str) -> Self {
        RowSummary {
            scenario: scenario.to_string(),
            n,
            controller: controller.to_string(),
            consensus_stable: None,
            alpha: None,
            observed_ratio: None,
            bound_satisfied: None,
            time_of_peak: None,
            initial_norm: None,
            peak_norm: None,
            truncated: false,
            note: None,
            error: None,
        }
    }

    /// Human-readable one-liner for the console.
    pub fn summary_line(&self) -> String {
        if let Some(err) = &self.error {
            return format!("{} N={}: ERROR {err}", self.scenario, self.n);
        }
        if let Some(note) = &self.note {
            return format!("{} N={}: {note}", self.scenario, self.n);
        }
        let stable = match self.consensus_stable {
            Some(true) => "stable",
            Some(false) => "unstable",
            None => "-",
        };
        format!(
            "{} N={}: {} ratio={} alpha={} bound={}{}",
            self.scenario,
            self.n,
            stable,
            opt_g(self.observed_ratio, 6),
            opt_g(self.alpha, 6),
            match self.bound_satisfied {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            },
            if self.truncated { " (truncated)" } else { "" },
        )
    }

    /// Regression-stable line: six significant digits, fixed column order.
    pub fn golden_line(&self) -> String {
        format!(
            "{},{},{},stable={},ratio={},alpha={},bound={},truncated={},note={}",
            self.scenario,
            self.n,
            self.controller,
            opt_bool(self.consensus_stable),
            opt_g(self.observed_ratio, 6),
            opt_g(self.alpha, 6),
            opt_bool(self.bound_satisfied),
            if self.truncated { "1" } else { "0" },
            self.note.as_deref().unwrap_or("-"),
        )
    }
}

fn opt_g(v: Option<f64>, sig: usize) -> String {
    v.map(|x| fmt_g(x, sig)).unwrap_or_else(|| "-".into())
}

fn opt_bool(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "-",
    }
}

/// Files written plus the per-size summary rows.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub rows: Vec<RowSummary>,
    pub files: Vec<PathBuf>,
}

/// Run one scenario, writing its requested artifacts under
/// `opts.out_dir`. Per-size failures are recorded in their row and the
/// remaining sizes still run.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioOutcome> {
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    match scenario {
        Scenario::Sim(sim) => run_sim(sim, opts),
        Scenario::Closure(c) => run_closure(c, opts),
    }
}

fn run_sim(sim: &SimScenario, opts: &RunOptions) -> Result<ScenarioOutcome> {
    let horizon = opts.horizon.unwrap_or(sim.horizon);
    let dt = opts.dt.unwrap_or(sim.dt);
    let mut rows = Vec::new();
    let mut files = Vec::new();

    for &n in &sim.sizes {
        let mut row = RowSummary::empty(&sim.name, n, sim.controller.kind());
        match run_sim_size(sim, n, horizon, dt, opts, &mut files, &mut row) {
            Ok(()) => {}
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }

    if sim.outputs.contains(&OutputKind::Performance) {
        let path = opts.out_dir.join(format!("{}_performance.csv", sim.name));
        write_atomic(&path, &performance_csv(&rows))?;
        files.push(path);
    }

    Ok(ScenarioOutcome { rows, files })
}

fn run_sim_size(
    sim: &SimScenario,
    n: usize,
    horizon: f64,
    dt: f64,
    opts: &RunOptions,
    files: &mut Vec<PathBuf>,
    row: &mut RowSummary,
) -> Result<()> {
    let (spec, init, metric) = sim.build_for(n)?;
    let sys = assemble(&spec, Coordinates::Physical)?;

    let stability = sys.classify_stability()?;
    row.consensus_stable = Some(stability.consensus_stable);

    let traj = integrate(&sys, &init, horizon, dt, &metric)?;
    let report = evaluate_performance(&traj, &spec, metric.laplacian());
    row.alpha = report.alpha_bound;
    row.observed_ratio = Some(report.observed_ratio);
    row.bound_satisfied = report.bound_satisfied;
    row.time_of_peak = Some(report.time_of_peak);
    row.initial_norm = Some(report.initial_norm);
    row.peak_norm = Some(report.peak_norm);
    row.truncated = traj.truncated();

    for output in &sim.outputs {
        match output {
            OutputKind::Trajectory => {
                let path = opts
                    .out_dir
                    .join(format!("{}_N{n}_trajectory.csv", sim.name));
                write_atomic(&path, &traj.to_csv())?;
                files.push(path);
            }
            OutputKind::Spectrum => {
                let path = opts.out_dir.join(format!("{}_N{n}_spectrum.txt", sim.name));
                let mut text = String::new();
                for e in sys.spectrum()? {
                    text.push_str(&format!("{} {}\n", fmt_g(e.re, 17), fmt_g(e.im, 17)));
                }
                write_atomic(&path, &text)?;
                files.push(path);
            }
            OutputKind::Gnuplot => {
                let csv_name = format!("{}_N{n}_trajectory.csv", sim.name);
                let path = opts.out_dir.join(format!("{}_N{n}.gp", sim.name));
                write_atomic(&path, &gnuplot_script(&sim.name, n, &csv_name))?;
                files.push(path);
            }
            OutputKind::Performance | OutputKind::Certificates => {}
        }
    }
    Ok(())
}

fn run_closure(c: &ClosureScenario, opts: &RunOptions) -> Result<ScenarioOutcome> {
    let mut rows = Vec::new();
    let mut files = Vec::new();

    for &n in &c.sizes {
        let mut row = RowSummary::empty(&c.name, n, "closure");
        match run_closure_size(c, n, opts, &mut files, &mut row) {
            Ok(()) => {}
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    Ok(ScenarioOutcome { rows, files })
}

fn run_closure_size(
    c: &ClosureScenario,
    n: usize,
    opts: &RunOptions,
    files: &mut Vec<PathBuf>,
    row: &mut RowSummary,
) -> Result<()> {
    let w = c.topology.build(n)?;
    let l1 = c.first.laplacian(n)?;
    let l2 = c.second.laplacian(n)?;
    let gain = c.gain;

    let first_cert = check_membership(l1.entries(), &w, 1, gain)?;
    let second_cert = check_membership(l2.entries(), &w, 1, gain)?;
    let closure = crate::membership::sparsity_closure(&l1, &l2, &w, gain)?;
    // some products stay within one hop; report that stronger fact too
    let product_one_hop =
        check_membership(&(l2.entries() * l1.entries()), &w, 1, 2.0 * gain)?;

    let mut text = String::new();
    text.push_str(&format!(
        "base graph {} with n = {n}, gain bound c = {}\n",
        c.topology.describe(),
        fmt_g(gain, 6)
    ));
    text.push_str(&format!(
        "first  ({} x {}): {}\n",
        fmt_g(c.first.scale, 6),
        c.first.graph.describe(),
        first_cert.describe()
    ));
    text.push_str(&format!(
        "second ({} x {}): {}\n",
        fmt_g(c.second.scale, 6),
        c.second.graph.describe(),
        second_cert.describe()
    ));
    text.push_str(&format!("second + first: {}\n", closure.sum.describe()));
    text.push_str(&format!("second * first: {}\n", closure.product.describe()));
    text.push_str(&format!("second * first: {}\n", product_one_hop.describe()));
    for cert in [&first_cert, &second_cert] {
        for v in &cert.violations {
            text.push_str(&format!("  violation: {v}\n"));
        }
    }

    if c.outputs.contains(&OutputKind::Certificates) {
        let path = opts
            .out_dir
            .join(format!("{}_N{n}_certificates.txt", c.name));
        write_atomic(&path, &text)?;
        files.push(path);
    }

    row.note = Some(format!(
        "sum(1-hop,{})={} product(2-hop,{})={} product(1-hop,{})={}",
        fmt_g(closure.sum.gain_bound, 6),
        yes_no(closure.sum.holds),
        fmt_g(closure.product.gain_bound, 6),
        yes_no(closure.product.holds),
        fmt_g(product_one_hop.gain_bound, 6),
        yes_no(product_one_hop.holds),
    ));
    Ok(())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn performance_csv(rows: &[RowSummary]) -> String {
    let mut out = String::from(
        "scenario,n,controller,consensus_stable,alpha,observed_ratio,bound_satisfied,\
         time_of_peak,initial_norm,peak_norm,truncated,error\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.scenario,
            row.n,
            row.controller,
            opt_bool(row.consensus_stable),
            opt_g(row.alpha, 10),
            opt_g(row.observed_ratio, 10),
            opt_bool(row.bound_satisfied),
            opt_g(row.time_of_peak, 10),
            opt_g(row.initial_norm, 10),
            opt_g(row.peak_norm, 10),
            if row.truncated { "1" } else { "0" },
            // keep the row parseable: error text must not add columns
            row.error
                .as_deref()
                .unwrap_or("")
                .replace([',', '\n'], ";"),
        ));
    }
    out
}

fn gnuplot_script(name: &str, n: usize, csv_name: &str) -> String {
    let first = 2 * n + 2;
    let last = 3 * n + 1;
    format!(
        "# inter-vehicle position errors for {name}, N = {n}\n\
         set datafile separator ','\n\
         set key off\n\
         set xlabel 't'\n\
         set ylabel 'e_p'\n\
         plot for [i={first}:{last}] '{csv_name}' using 1:i with lines\n"
    )
}

/// Write `contents` to `path` atomically: temp file in the same directory,
/// then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// The regression summary for a full run: one golden line per row.
pub fn golden_summary(rows: &[RowSummary]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.golden_line());
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// presets

/// A bundled, self-contained scenario config.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "cycle_serial",
        description: "serial design (p1=2, p2=0.5) on the directed cycle, N in {10, 100}: \
                      bounded transients at every size",
        text: include_str!("../presets/cycle_serial.toml"),
    },
    Preset {
        name: "cycle_conventional",
        description: "conventional design (r1=2.5, r0=1) on the directed cycle, N in {10, 100}: \
                      loses stability at N=100",
        text: include_str!("../presets/cycle_conventional.toml"),
    },
    Preset {
        name: "path_serial",
        description: "serial design (p1=2, p2=0.5) on the directed path, N in {10, 100}: \
                      string-stable behavior",
        text: include_str!("../presets/path_serial.toml"),
    },
    Preset {
        name: "path_conventional",
        description: "conventional design (r1=2.5, r0=1) on the directed path, N in {10, 100}: \
                      stable but the transient grows with N",
        text: include_str!("../presets/path_conventional.toml"),
    },
    Preset {
        name: "bidir_conventional",
        description: "conventional design with look-ahead velocity and symmetric position \
                      feedback (r1=2.5, r0=1), N in {10, 100}",
        text: include_str!("../presets/bidir_conventional.toml"),
    },
    Preset {
        name: "bidir_serial",
        description: "serial design mixing look-ahead and look-behind path graphs \
                      (p1=2, p2=0.5), N in {10, 100}",
        text: include_str!("../presets/bidir_serial.toml"),
    },
    Preset {
        name: "two_hop_closure",
        description: "implementability certificates for the path-graph pair: sums stay \
                      one-hop, products stay within two hops",
        text: include_str!("../presets/two_hop_closure.toml"),
    },
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
