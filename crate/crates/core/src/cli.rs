//! Batch pipeline behind the `flexcube` command: runs one analysis over a
//! scenario and writes CSV tables, OFF meshes and JSON records.
//!
//! Work is spread over units, pools and time steps with rayon; results are
//! gathered in a fixed order and written by a single writer so that repeated
//! runs produce byte-identical files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::ensemble::{adequacy, aggregate_cubes, aggregate_polytopes, needed_envelope, remaining_flex, EnsembleError, Pool};
use crate::flexmetrics::{flex_timeline, FlexCube, FlexError, FlexTimeline};
use crate::format::{fmt_num, round_sig, CsvTable};
use crate::polytope::{mesh, Polytope, PolytopeError};
use crate::powernode::{SimulationError, Trajectory};
use crate::reach::{gap_report, reach_until, FlexDynamics, GapRow, ReachError, ReachSet};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Flex,
    Reach,
    Aggregate,
    Adequacy,
}

impl Command {
    pub const ALL: [Command; 5] = [Command::Simulate, Command::Flex, Command::Reach, Command::Aggregate, Command::Adequacy];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Flex => "flex",
            Command::Reach => "reach",
            Command::Aggregate => "aggregate",
            Command::Adequacy => "adequacy",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s}"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Artifact kind; restricting a run to one kind skips the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactFormat {
    Csv,
    Off,
    Json,
}

impl FromStr for ArtifactFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ArtifactFormat::Csv),
            "off" => Ok(ArtifactFormat::Off),
            "json" => Ok(ArtifactFormat::Json),
            _ => Err(format!("unknown format {s} (expected csv, off or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides the scenario's reach step count.
    pub k_max: Option<usize>,
    /// Overrides the scenario's energy horizon, hours.
    pub horizon: Option<f64>,
    /// Restricts pool commands to one pool.
    pub pool: Option<String>,
    pub format: Option<ArtifactFormat>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { out: out.into(), k_max: None, horizon: None, pool: None, format: None }
    }
}

/// Files written by a run and whether an adequacy deficit was found.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub deficit: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("powernode: unit {unit}: {source}")]
    Simulation { unit: String, source: SimulationError },
    #[error("flexmetrics: unit {unit}: {source}")]
    Flex { unit: String, source: FlexError },
    #[error("reach: unit {unit}: {source}")]
    Reach { unit: String, source: ReachError },
    #[error("ensemble: pool {pool}: {source}")]
    Ensemble { pool: String, source: EnsembleError },
    #[error("polytope: {0}")]
    Polytope(#[from] PolytopeError),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, RunError>;

/// Runs `cmd` over `scenario`, writing artifacts below `opts.out`.
pub fn run(cmd: Command, scenario: &Scenario, opts: &RunOptions) -> Result<Outcome> {
    if let Some(k) = opts.k_max {
        if k == 0 {
            return Err(RunError::Usage("--k-max must be at least 1".into()));
        }
    }
    let mut sink = Sink { root: opts.out.clone(), format: opts.format, files: Vec::new() };
    let mut deficit = false;
    match cmd {
        Command::Simulate => {
            for (id, traj) in trajectories(scenario)? {
                sink.text(&format!("simulate/{id}.csv"), ArtifactFormat::Csv, &traj.to_csv(&scenario.unit(&id)?.params))?;
            }
        }
        Command::Flex => {
            for (id, tl) in timelines(scenario, opts)? {
                sink.text(&format!("flex/{id}.csv"), ArtifactFormat::Csv, &tl.to_csv())?;
                for c in &tl.entries {
                    sink.mesh(&format!("flex/{id}/k{:03}", c.time_index), &c.to_polytope().map_err(flex(&id))?)?;
                }
            }
        }
        Command::Reach => {
            let tls = timelines(scenario, opts)?;
            for (id, tl) in &tls {
                let (dynamics, sets) = unit_reach(scenario, opts, id, tl)?;
                write_reach(&mut sink, id, &dynamics, &tl.entries[0], &sets)?;
            }
        }
        Command::Aggregate => {
            let tls = timelines(scenario, opts)?;
            for pool in pools(scenario, opts)? {
                write_aggregate(&mut sink, scenario, opts, pool, &tls)?;
            }
        }
        Command::Adequacy => {
            let tls = timelines(scenario, opts)?;
            for pool in pools(scenario, opts)? {
                deficit |= write_adequacy(&mut sink, scenario, opts, pool, &tls)?;
            }
        }
    }
    sink.files.sort();
    Ok(Outcome { files: sink.files, deficit })
}

fn flex(unit: &str) -> impl Fn(FlexError) -> RunError + '_ {
    move |source| RunError::Flex { unit: unit.to_string(), source }
}

fn ensemble(pool: &str) -> impl Fn(EnsembleError) -> RunError + '_ {
    move |source| RunError::Ensemble { pool: pool.to_string(), source }
}

struct Sink {
    root: PathBuf,
    format: Option<ArtifactFormat>,
    files: Vec<PathBuf>,
}

impl Sink {
    fn text(&mut self, rel: &str, kind: ArtifactFormat, body: &str) -> Result<()> {
        if self.format.is_some_and(|f| f != kind) {
            return Ok(());
        }
        let path = self.root.join(rel);
        let io = |source| RunError::Io { path: path.display().to_string(), source };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        std::fs::write(&path, body).map_err(io)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value).expect("artifact records serialize");
        body.push('\n');
        self.text(rel, ArtifactFormat::Json, &body)
    }

    /// `<stem>.off` plus a `<stem>.json` record with axis labels and units.
    fn mesh(&mut self, stem: &str, p: &Polytope) -> Result<()> {
        let m = mesh::triangulate(p)?;
        self.text(&format!("{stem}.off"), ArtifactFormat::Off, &m.to_off())?;
        self.json(&format!("{stem}.json"), &m.flex_record())
    }
}

fn trajectories(scenario: &Scenario) -> Result<Vec<(String, Trajectory)>> {
    let ids: Vec<&String> = scenario.units.keys().collect();
    ids.par_iter()
        .map(|id| {
            scenario
                .simulate_unit(id)
                .map(|t| ((*id).clone(), t))
                .map_err(|source| RunError::Simulation { unit: (*id).clone(), source })
        })
        .collect()
}

fn timelines(scenario: &Scenario, opts: &RunOptions) -> Result<Vec<(String, FlexTimeline)>> {
    let settings = scenario.flex_settings(opts.horizon).map_err(flex("*"))?;
    trajectories(scenario)?
        .into_par_iter()
        .map(|(id, traj)| {
            let params = &scenario.unit(&id)?.params;
            let tl = flex_timeline(&id, params, &traj, &settings).map_err(flex(&id))?;
            Ok((id, tl))
        })
        .collect()
}

fn pools<'a>(scenario: &'a Scenario, opts: &RunOptions) -> Result<Vec<&'a Pool>> {
    match &opts.pool {
        Some(id) => Ok(vec![scenario.pool(id)?]),
        None if scenario.pools.is_empty() => Err(RunError::Usage("scenario defines no pools".into())),
        None => Ok(scenario.pools.iter().collect()),
    }
}

/// Reach sets of a unit from its first nominal operating point.
fn unit_reach(
    scenario: &Scenario,
    opts: &RunOptions,
    id: &str,
    tl: &FlexTimeline,
) -> Result<(FlexDynamics, Vec<ReachSet>)> {
    let reach_err = |source| RunError::Reach { unit: id.to_string(), source };
    let gamma = scenario.unit(id)?.dissipation_gamma;
    let dynamics = FlexDynamics::from_cube(&tl.entries[0], scenario.grid.dt, gamma).map_err(reach_err)?;
    let sets = reach_until(&dynamics, opts.k_max.unwrap_or(scenario.grid.k_max)).map_err(reach_err)?;
    Ok((dynamics, sets))
}

#[derive(Serialize)]
struct ReachIndexRow {
    k: usize,
    mesh: String,
    volume: f64,
    hausdorff_to_cube: f64,
}

fn write_reach(sink: &mut Sink, id: &str, dynamics: &FlexDynamics, cube: &FlexCube, sets: &[ReachSet]) -> Result<()> {
    let max_cube = dynamics.max_cube().map_err(|source| RunError::Reach { unit: id.to_string(), source })?;
    sink.mesh(&format!("reach/{id}/max_cube"), &max_cube)?;
    let mut rows = Vec::new();
    let mut csv = CsvTable::new(&["k", "volume", "hausdorff_to_cube"]);
    for s in sets {
        let stem = format!("k{:02}", s.step);
        sink.mesh(&format!("reach/{id}/{stem}"), &s.poly)?;
        let volume = s.poly.volume();
        let hausdorff = s.poly.hausdorff(&max_cube);
        csv.row([s.step.to_string(), fmt_num(volume), fmt_num(hausdorff)]);
        rows.push(ReachIndexRow {
            k: s.step,
            mesh: format!("{stem}.off"),
            volume: round_sig(volume),
            hausdorff_to_cube: round_sig(hausdorff),
        });
    }
    let gaps = gap_report(sets.last().expect("reach_until returns at least one set"), &dynamics.as_cube());
    sink.text(&format!("reach/{id}.csv"), ArtifactFormat::Csv, &csv.finish())?;
    sink.text(&format!("reach/{id}_gaps.csv"), ArtifactFormat::Csv, &gaps_csv(&gaps))?;
    let gaps_json: Vec<GapRow> = gaps
        .into_iter()
        .map(|g| GapRow {
            point: g.point.map(round_sig),
            distance: round_sig(g.distance),
            state_gap: round_sig(g.state_gap),
            ..g
        })
        .collect();
    sink.json(
        &format!("reach/{id}/index.json"),
        &json!({
            "unit": id,
            "time_index": cube.time_index,
            "dynamics": {
                "dt": dynamics.dt,
                "ramp_dt": dynamics.ramp_dt,
                "gamma": dynamics.gamma,
                "ramp": [round_sig(dynamics.ramp.0), round_sig(dynamics.ramp.1)],
                "power": [round_sig(dynamics.power.0), round_sig(dynamics.power.1)],
                "energy": [round_sig(dynamics.energy.0), round_sig(dynamics.energy.1)],
            },
            "steps": rows,
            "gaps": gaps_json,
        }),
    )
}

fn gaps_csv(gaps: &[GapRow]) -> String {
    let mut table = CsvTable::new(&["corner", "rho", "pi", "eps", "distance", "state_gap", "reached"]);
    for g in gaps {
        let [rho, pi, eps] = g.point.map(fmt_num);
        table.row([g.corner.clone(), rho, pi, eps, fmt_num(g.distance), fmt_num(g.state_gap), g.reached.to_string()]);
    }
    table.finish()
}

fn member_timelines<'a>(pool: &Pool, tls: &'a [(String, FlexTimeline)]) -> Vec<&'a FlexTimeline> {
    pool.members
        .iter()
        .map(|m| &tls.iter().find(|(id, _)| id == m).expect("pool members are validated").1)
        .collect()
}

fn pool_timeline(pool: &Pool, tls: &[(String, FlexTimeline)]) -> Result<FlexTimeline> {
    let members = member_timelines(pool, tls);
    let steps = members[0].entries.len();
    let entries = (0..steps)
        .into_par_iter()
        .map(|k| {
            let cubes: Vec<FlexCube> = members.iter().map(|t| t.entries[k]).collect();
            aggregate_cubes(&cubes).map_err(ensemble(&pool.id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlexTimeline { id: pool.id.clone(), entries })
}

fn write_aggregate(
    sink: &mut Sink,
    scenario: &Scenario,
    opts: &RunOptions,
    pool: &Pool,
    tls: &[(String, FlexTimeline)],
) -> Result<()> {
    let pid = &pool.id;
    let agg_tl = pool_timeline(pool, tls)?;
    sink.text(&format!("aggregate/{pid}.csv"), ArtifactFormat::Csv, &agg_tl.to_csv())?;

    let members = member_timelines(pool, tls);
    let mut cube_vols = Vec::new();
    let mut reach_vols = Vec::new();
    for (m, tl) in pool.members.iter().zip(&members) {
        let cube = tl.entries[0].to_polytope().map_err(flex(m))?;
        sink.mesh(&format!("aggregate/{pid}/cube_{m}"), &cube)?;
        cube_vols.push(cube);
        let (_, sets) = unit_reach(scenario, opts, m, tl)?;
        let last = sets.last().expect("reach_until returns at least one set").poly.clone();
        sink.mesh(&format!("aggregate/{pid}/reach_{m}"), &last)?;
        reach_vols.push(last);
    }
    let cube_agg = aggregate_polytopes(&cube_vols).map_err(ensemble(pid))?;
    let reach_agg = aggregate_polytopes(&reach_vols).map_err(ensemble(pid))?;
    sink.mesh(&format!("aggregate/{pid}/cube_aggregate"), &cube_agg)?;
    sink.mesh(&format!("aggregate/{pid}/reach_aggregate"), &reach_agg)?;
    let volumes = |vols: &[Polytope]| -> Vec<f64> { vols.iter().map(|p| round_sig(p.volume())).collect() };
    sink.json(
        &format!("aggregate/{pid}/summary.json"),
        &json!({
            "pool": pid,
            "zone_label": pool.zone_label,
            "members": pool.members,
            "time_index": 0,
            "cube_member_volumes": volumes(&cube_vols),
            "cube_aggregate_volume": round_sig(cube_agg.volume()),
            "reach_member_volumes": volumes(&reach_vols),
            "reach_aggregate_volume": round_sig(reach_agg.volume()),
            "assumptions": [GRID_ASSUMPTION],
        }),
    )
}

const GRID_ASSUMPTION: &str = "grid constraints inside the pool are ignored";

#[derive(Serialize)]
struct AdequacyRow {
    time_index: usize,
    covered: bool,
    deficit_axes: Vec<&'static str>,
    remaining_volume: Option<f64>,
    meshes: Vec<String>,
}

/// Returns whether any step shows a deficit.
fn write_adequacy(
    sink: &mut Sink,
    scenario: &Scenario,
    opts: &RunOptions,
    pool: &Pool,
    tls: &[(String, FlexTimeline)],
) -> Result<bool> {
    let pid = &pool.id;
    let steps = scenario.grid.steps;
    let zeros = vec![0.0; steps];
    let series = match &pool.disturbance {
        Some(d) => &scenario.disturbances[d],
        None => &zeros,
    };
    let source = pool.disturbance.clone().unwrap_or_else(|| "none".into());
    let horizon = opts.horizon.unwrap_or(scenario.grid.horizon);
    let window = scenario.steps_in(horizon);
    let agg = pool_timeline(pool, tls)?;

    struct Step {
        k: usize,
        needed: Polytope,
        available: Polytope,
        remaining: Option<Polytope>,
        covered: bool,
        deficit_axes: Vec<&'static str>,
    }
    let results = agg
        .entries
        .par_iter()
        .map(|cube| {
            let k = cube.time_index;
            let slice = &series[k..(k + window).min(steps)];
            let env = needed_envelope(slice, scenario.grid.dt, &source).map_err(ensemble(pid))?;
            let needed = env.needed.to_polytope().map_err(flex(pid))?;
            let available = cube.to_polytope().map_err(flex(pid))?;
            let a = adequacy(&available, &needed).map_err(ensemble(pid))?;
            let remaining = remaining_flex(&available, &needed).map_err(ensemble(pid))?;
            Ok(Step {
                k,
                needed,
                available,
                remaining,
                covered: a.covered,
                deficit_axes: a.deficit_axes.iter().map(|x| x.label()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut csv = CsvTable::new(&["k", "covered", "deficit_axes", "remaining_volume"]);
    for s in &results {
        let stem = format!("adequacy/{pid}/k{:03}", s.k);
        sink.mesh(&format!("{stem}_needed"), &s.needed)?;
        sink.mesh(&format!("{stem}_available"), &s.available)?;
        let mut meshes = vec![format!("k{:03}_needed.off", s.k), format!("k{:03}_available.off", s.k)];
        if let Some(r) = &s.remaining {
            sink.mesh(&format!("{stem}_remaining"), r)?;
            meshes.push(format!("k{:03}_remaining.off", s.k));
        }
        let vol = s.remaining.as_ref().map(|r| r.volume());
        csv.row([s.k.to_string(), s.covered.to_string(), s.deficit_axes.join(";"), vol.map(fmt_num).unwrap_or_default()]);
        rows.push(AdequacyRow {
            time_index: s.k,
            covered: s.covered,
            deficit_axes: s.deficit_axes.clone(),
            remaining_volume: vol.map(round_sig),
            meshes,
        });
    }
    sink.text(&format!("adequacy/{pid}.csv"), ArtifactFormat::Csv, &csv.finish())?;
    sink.json(
        &format!("adequacy/{pid}.json"),
        &json!({
            "pool": pid,
            "zone_label": pool.zone_label,
            "disturbance": source,
            "window_steps": window,
            "assumptions": [GRID_ASSUMPTION],
            "steps": rows,
        }),
    )?;
    Ok(results.iter().any(|s| !s.covered))
}

/// Path of an artifact relative to the output root, with `/` separators.
pub fn relative(root: &Path, file: &Path) -> String {
    file.strip_prefix(root)
        .unwrap_or(file)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
