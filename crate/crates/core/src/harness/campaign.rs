use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::dem::{bf_dem, default_budget, tarjan_dem, Decision, TARJAN_DEM_REDUCTIONS};
use crate::error::{Error, Result};
use crate::graph::{
    build_lattice, embed_filling_fraction, parse_graph, parse_register, unit_disk_graph, Graph,
    LatticeFamily, LatticeSpec, EMBED_BLOCK,
};
use crate::mis::tarjan_mis;
use crate::noise::{apply_channel, calibrate_pooled, effective_rate, read_shots, NoiseModel, PooledCalibration};

use super::tables::{emit_tables, TableKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub schema_version: u32,
    pub id: String,
    pub instances: Vec<InstanceRef>,
    /// Required unless every instance brings its own shots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseGrid>,
    #[serde(default = "one")]
    pub shots_per_instance: usize,
    /// Independent shot sets per (instance, noise point).
    #[serde(default = "one")]
    pub instances_per_point: usize,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default)]
    pub k_rule: KRule,
    /// Per-shot BF-DEM budget; defaults to `min(2^n, 10^9)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

fn one() -> usize {
    1
}

/// One instance source. Exactly one of `lattice`, `embedded`, `graph_file`
/// and `register_file` must be set. Paths are relative to the campaign file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedded: Option<EmbeddedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register_file: Option<PathBuf>,
    /// Measured shots (shots document) used instead of emulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_file: Option<PathBuf>,
}

/// The full 4x4 block of `family` placed contiguously in a `rows x cols`
/// grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddedSpec {
    pub family: LatticeFamily,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub placement_seed: u64,
}

/// Noise points, in order: each symmetric rate, then the `p01 x p10`
/// product, then the explicit pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p01: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p10: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 2]>>,
}

impl NoiseGrid {
    pub fn points(&self) -> Result<Vec<NoiseModel>> {
        let mut out = Vec::new();
        for &p in self.symmetric.iter().flatten() {
            out.push(NoiseModel::symmetric(p)?);
        }
        match (&self.p01, &self.p10) {
            (Some(a), Some(b)) => {
                for &p01 in a {
                    for &p10 in b {
                        out.push(NoiseModel::new(p01, p10)?);
                    }
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::Campaign(
                    "noise.p01 and noise.p10 must be given together".into(),
                ))
            }
        }
        for &[p01, p10] in self.pairs.iter().flatten() {
            out.push(NoiseModel::new(p01, p10)?);
        }
        if out.is_empty() {
            return Err(Error::Campaign("noise grid has no points".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    BfDem,
    TarjanDem,
    Both,
}

impl Mode {
    pub fn methods(self) -> &'static [Method] {
        match self {
            Mode::BfDem => &[Method::BfDem],
            Mode::TarjanDem => &[Method::TarjanDem],
            Mode::Both => &[Method::BfDem, Method::TarjanDem],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BfDem,
    TarjanDem,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    #[default]
    MisSize,
    Explicit(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub campaign_id: String,
    pub graph_id: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<LatticeFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filling_fraction: Option<f64>,
    pub p01: f64,
    pub p10: f64,
    pub p_eff: f64,
    pub k: usize,
    pub replica: usize,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot: Option<u64>,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ops: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_explored: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "K")]
    pub k_budget: Option<usize>,
    pub output: Bitstring,
    pub wall_time_ns: u64,
}

impl ResultRow {
    /// Search cost: ops for BF-DEM, node count for Tarjan-DEM.
    pub fn cost(&self) -> u64 {
        self.ops.or(self.node_count).unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct ResolvedInstance {
    pub id: String,
    pub graph: Graph,
    pub family: Option<LatticeFamily>,
    pub filling_fraction: Option<f64>,
    pub shots: Option<Vec<Bitstring>>,
}

/// Mixes `(seed, keys...)` into one 64-bit seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    keys.iter().fold(mix(seed), |acc, &k| mix(acc ^ mix(k)))
}

/// Reads a campaign file; relative paths inside it resolve against the
/// returned directory.
pub fn load_campaign(path: &Path) -> Result<(Campaign, PathBuf)> {
    let text = fs::read_to_string(path)?;
    let c: Campaign = serde_json::from_str(&text)?;
    c.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((c, base))
}

impl Campaign {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Campaign(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.instances.is_empty() {
            return Err(Error::Campaign("no instances".into()));
        }
        if self.shots_per_instance == 0 || self.instances_per_point == 0 {
            return Err(Error::Campaign(
                "shots_per_instance and instances_per_point must be positive".into(),
            ));
        }
        if self.budget == Some(0) {
            return Err(Error::Campaign("budget must be positive".into()));
        }
        let emulated = self.instances.iter().any(|i| i.shots_file.is_none());
        match &self.noise {
            Some(grid) => {
                grid.points()?;
            }
            None if emulated => {
                return Err(Error::Campaign(
                    "noise grid required for instances without shots_file".into(),
                ))
            }
            None => {}
        }
        Ok(())
    }

    /// Loads every instance. Fails before any work if one does not resolve.
    pub fn resolve(&self, base_dir: &Path) -> Result<Vec<ResolvedInstance>> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.instances.len());
        for (i, r) in self.instances.iter().enumerate() {
            let inst = resolve_instance(r, base_dir)
                .map_err(|e| Error::Campaign(format!("instance {i}: {e}")))?;
            if !seen.insert(inst.id.clone()) {
                return Err(Error::Campaign(format!("duplicate instance id {:?}", inst.id)));
            }
            out.push(inst);
        }
        Ok(out)
    }
}

fn resolve_instance(r: &InstanceRef, base: &Path) -> Result<ResolvedInstance> {
    let sources = [
        r.lattice.is_some(),
        r.embedded.is_some(),
        r.graph_file.is_some(),
        r.register_file.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::Campaign(
            "set exactly one of lattice, embedded, graph_file, register_file".into(),
        ));
    }
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "graph".into())
    };
    let (default_id, graph, family, ff) = if let Some(spec) = &r.lattice {
        let id = match spec.active_sites {
            None => format!("{}-{}x{}", spec.family.name(), spec.rows, spec.cols),
            Some(ref a) => format!("{}-{}x{}-{}sites", spec.family.name(), spec.rows, spec.cols, a.len()),
        };
        (id, build_lattice(spec)?, Some(spec.family), Some(spec.filling_fraction()))
    } else if let Some(e) = &r.embedded {
        let block = build_lattice(&LatticeSpec::full(e.family, EMBED_BLOCK, EMBED_BLOCK))?;
        let target = LatticeSpec::full(e.family, e.rows, e.cols);
        let spec = embed_filling_fraction(&block, &target, e.placement_seed)?;
        let id = format!(
            "{}-{}x{}-embedded-s{}",
            e.family.name(),
            e.rows,
            e.cols,
            e.placement_seed
        );
        (id, build_lattice(&spec)?, Some(e.family), Some(spec.filling_fraction()))
    } else if let Some(p) = &r.graph_file {
        let path = base.join(p);
        (stem(p), parse_graph(&fs::read_to_string(&path)?)?, None, None)
    } else {
        let p = r.register_file.as_ref().expect("one source is set");
        let path = base.join(p);
        let reg = parse_register(&fs::read_to_string(&path)?)?;
        (stem(p), unit_disk_graph(&reg)?, None, None)
    };

    let shots = match &r.shots_file {
        Some(p) => {
            let file = fs::File::open(base.join(p))?;
            let records = read_shots(BufReader::new(file))?;
            if records.is_empty() {
                return Err(Error::Campaign(format!("{} holds no shots", p.display())));
            }
            let mut bits = Vec::with_capacity(records.len());
            for rec in records {
                if rec.bits.len() != graph.n() {
                    return Err(Error::LengthMismatch {
                        expected: graph.n(),
                        found: rec.bits.len(),
                    });
                }
                bits.push(rec.bits);
            }
            Some(bits)
        }
        None => None,
    };
    Ok(ResolvedInstance {
        id: r.id.clone().unwrap_or(default_id),
        graph,
        family,
        filling_fraction: ff,
        shots,
    })
}

struct Unit<'a> {
    inst: &'a ResolvedInstance,
    ideal: &'a Bitstring,
    k: usize,
    p01: f64,
    p10: f64,
    p_eff: f64,
    replica: usize,
    shots: ShotSource<'a>,
}

enum ShotSource<'a> {
    Emulated { model: NoiseModel, seed: u64 },
    Measured(&'a [Bitstring]),
}

/// Executes a campaign. Rows come out ordered by instance, noise point,
/// replica, method and shot, whatever the thread count.
pub fn run_campaign(c: &Campaign, base_dir: &Path) -> Result<Vec<ResultRow>> {
    Ok(execute(c, base_dir)?.0)
}

/// Rows plus the calibration pooled over every instance with measured shots.
fn execute(c: &Campaign, base_dir: &Path) -> Result<(Vec<ResultRow>, Option<PooledCalibration>)> {
    c.validate()?;
    let instances = c.resolve(base_dir)?;
    let ideals: Vec<(Bitstring, usize)> = instances
        .par_iter()
        .map(|inst| {
            let m = tarjan_mis(&inst.graph);
            (m.witness, m.size)
        })
        .collect();
    let points = match &c.noise {
        Some(grid) => grid.points()?,
        None => Vec::new(),
    };
    let groups: Vec<(String, Bitstring, Vec<Bitstring>)> = instances
        .iter()
        .zip(&ideals)
        .filter_map(|(inst, (ideal, _))| {
            inst.shots
                .as_ref()
                .map(|s| (inst.id.clone(), ideal.clone(), s.clone()))
        })
        .collect();
    let pooled = if groups.is_empty() {
        None
    } else {
        Some(calibrate_pooled(&groups)?)
    };

    let mut units = Vec::new();
    for (i, (inst, (ideal, mis_size))) in instances.iter().zip(&ideals).enumerate() {
        let k = match c.k_rule {
            KRule::MisSize => *mis_size,
            KRule::Explicit(k) => k,
        };
        let n = inst.graph.n();
        let f1 = if n == 0 { 0.0 } else { ideal.weight() as f64 / n as f64 };
        if let (Some(shots), Some(pool)) = (&inst.shots, &pooled) {
            let p01 = pool.pooled.p01_hat.map_or(0.0, |e| e.value);
            let p10 = pool.pooled.p10_hat.map_or(0.0, |e| e.value);
            units.push(Unit {
                inst,
                ideal,
                k,
                p01,
                p10,
                p_eff: effective_rate(p01, p10, 1.0 - f1, f1)?,
                replica: 0,
                shots: ShotSource::Measured(shots),
            });
            continue;
        }
        for (j, model) in points.iter().enumerate() {
            let p_eff = effective_rate(model.p01, model.p10, 1.0 - f1, f1)?;
            for replica in 0..c.instances_per_point {
                units.push(Unit {
                    inst,
                    ideal,
                    k,
                    p01: model.p01,
                    p10: model.p10,
                    p_eff,
                    replica,
                    shots: ShotSource::Emulated {
                        model: *model,
                        seed: derive_seed(c.seed, &[i as u64, j as u64, replica as u64]),
                    },
                });
            }
        }
    }
    info!("campaign {}: {} work units", c.id, units.len());

    let nested: Vec<Vec<ResultRow>> = units
        .par_iter()
        .map(|u| run_unit(c, u))
        .collect::<Result<_>>()?;
    Ok((nested.into_iter().flatten().collect(), pooled))
}

fn run_unit(c: &Campaign, u: &Unit<'_>) -> Result<Vec<ResultRow>> {
    let g = &u.inst.graph;
    let base = |method: Method, output: Bitstring, decision: Decision| ResultRow {
        campaign_id: c.id.clone(),
        graph_id: u.inst.id.clone(),
        n: g.n(),
        family: u.inst.family,
        filling_fraction: u.inst.filling_fraction,
        p01: u.p01,
        p10: u.p10,
        p_eff: u.p_eff,
        k: u.k,
        replica: u.replica,
        method,
        shot: None,
        decision,
        ops: None,
        distance_explored: None,
        node_count: None,
        size: None,
        k_budget: None,
        output,
        wall_time_ns: 0,
    };

    let mut rows = Vec::new();
    for method in c.mode.methods() {
        match method {
            Method::BfDem => {
                let shots = match &u.shots {
                    ShotSource::Emulated { model, seed } => {
                        apply_channel(u.ideal, model, *seed, c.shots_per_instance)?
                    }
                    ShotSource::Measured(s) => s.to_vec(),
                };
                let budget = c.budget.unwrap_or_else(|| default_budget(g.n()));
                let per_shot: Vec<ResultRow> = shots
                    .par_iter()
                    .enumerate()
                    .map(|(s, z)| {
                        let t = Instant::now();
                        let r = bf_dem(g, u.k, z, budget)?;
                        let mut row = base(Method::BfDem, r.output, r.decision);
                        row.wall_time_ns = t.elapsed().as_nanos() as u64;
                        row.shot = Some(s as u64);
                        row.ops = Some(r.ops);
                        row.distance_explored = Some(r.max_distance_reached);
                        Ok(row)
                    })
                    .collect::<Result<_>>()?;
                rows.extend(per_shot);
            }
            Method::TarjanDem => {
                let t = Instant::now();
                let r = tarjan_dem(g, u.p_eff).map_err(|e| {
                    Error::Campaign(format!("{}: tarjan_dem needs p_eff in (0, 0.5]: {e}", u.inst.id))
                })?;
                let decision = if r.size >= u.k {
                    Decision::Yes
                } else {
                    Decision::No
                };
                let mut row = base(Method::TarjanDem, r.witness, decision);
                row.wall_time_ns = t.elapsed().as_nanos() as u64;
                row.node_count = Some(r.node_count);
                row.size = Some(r.size);
                row.k_budget = Some(r.k_budget);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn write_rows<W: Write>(mut writer: W, rows: &[ResultRow]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_rows<R: BufRead>(reader: R) -> Result<Vec<ResultRow>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Settings recorded next to campaign output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub campaign: Campaign,
    pub rows: usize,
    pub placement: String,
    pub within_shell_order: String,
    pub tarjan_depth_rule: String,
    pub tarjan_reductions: crate::mis::Reductions,
    /// Rates pooled over measured instances, with the per-instance breakdown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PooledCalibration>,
    pub tables: Vec<String>,
}

/// Runs `c` and writes `rows.jsonl`, `metadata.json` and one CSV per table
/// kind the rows support into `out_dir`.
pub fn run_to_dir(c: &Campaign, base_dir: &Path, out_dir: &Path) -> Result<Vec<ResultRow>> {
    let (rows, calibration) = execute(c, base_dir)?;
    fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(fs::File::create(out_dir.join("rows.jsonl"))?);
    write_rows(&mut w, &rows)?;
    w.flush()?;

    let mut tables = Vec::new();
    for kind in [TableKind::Scaling, TableKind::RateSweep, TableKind::Exponent] {
        match emit_tables(&rows, kind) {
            Ok(t) => {
                let name = format!("{}.csv", kind.name());
                t.write_csv(fs::File::create(out_dir.join(&name))?)?;
                tables.push(name);
            }
            Err(e) => info!("skipping {} table: {e}", kind.name()),
        }
    }
    let meta = RunMetadata {
        campaign: c.clone(),
        rows: rows.len(),
        placement: "contiguous_block".into(),
        within_shell_order: "colex".into(),
        tarjan_depth_rule: "include_branch".into(),
        tarjan_reductions: TARJAN_DEM_REDUCTIONS,
        calibration,
        tables,
    };
    fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(rows)
}
