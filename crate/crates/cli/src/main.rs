use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use demkit::analytics::{breakeven_size, effective_search_space, fit_exponent_base, search_volume};
use demkit::dem::{decide_k_is, default_budget, tarjan_dem, Decision, ShotPolicy, Termination};
use demkit::graph::{
    build_lattice, embed_filling_fraction, parse_graph, parse_register, serialize_graph,
    unit_disk_graph, Graph, LatticeFamily, LatticeSpec, EMBED_BLOCK,
};
use demkit::harness::{
    emit_tables, ingest_measurements, load_campaign, read_rows, read_shot_source, run_to_dir,
    TableKind,
};
use demkit::mis::{brute_force_mis, tarjan_mis};
use demkit::noise::{apply_channel, calibrate, read_shots, write_shots, NoiseModel, ShotRecord};
use demkit::Bitstring;

const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "demkit", version, about = "Shot-level error mitigation for k-independent-set instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build instance graphs.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Exact maximum independent set.
    #[command(subcommand)]
    Mis(MisCmd),
    /// Bit-flip channel emulation and calibration.
    #[command(subcommand)]
    Noise(NoiseCmd),
    /// Shot-level search.
    #[command(subcommand)]
    Dem(DemCmd),
    /// Cost model, fits and breakeven sizes.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Seeded experiment campaigns.
    #[command(subcommand)]
    Campaign(CampaignCmd),
    /// Calibrate measured shots against the solver MIS.
    Ingest(IngestArgs),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Write a graph document for a lattice, an embedded 4x4 block, or a
    /// register.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, conflicts_with = "register")]
    family: Option<Family>,
    #[arg(long, default_value_t = 4)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Place the 4x4 block of the family in a rows x cols grid.
    #[arg(long)]
    embed: bool,
    #[arg(long, default_value_t = 0)]
    placement_seed: u64,
    /// Unit-disk graph of a register document.
    #[arg(long)]
    register: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Square,
    Kings,
}

impl From<Family> for LatticeFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Square => LatticeFamily::Square,
            Family::Kings => LatticeFamily::Kings,
        }
    }
}

#[derive(Subcommand)]
enum MisCmd {
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = MisMethod::Tarjan)]
        method: MisMethod,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MisMethod {
    Brute,
    Tarjan,
}

#[derive(Subcommand)]
enum NoiseCmd {
    /// Emit a shots document (one JSON record per line).
    Emulate {
        #[arg(long)]
        graph: PathBuf,
        /// Ideal word; defaults to the solver MIS of the graph.
        #[arg(long)]
        ideal: Option<Bitstring>,
        #[arg(long, default_value_t = 0.0)]
        p01: f64,
        #[arg(long, default_value_t = 0.0)]
        p10: f64,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        graph_id: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    Calibrate {
        #[arg(long)]
        ideal: Bitstring,
        #[arg(long)]
        shots: PathBuf,
    },
}

#[derive(Subcommand)]
enum DemCmd {
    /// BF-DEM over a shots document.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        shots: PathBuf,
        /// Per-shot candidate budget; defaults to min(2^n, 1e9).
        #[arg(long)]
        budget: Option<u64>,
        /// Process every shot instead of stopping at the first YES.
        #[arg(long)]
        all_shots: bool,
    },
    /// Entropy-budgeted branch-and-reduce.
    Tarjan {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Hamming-ball search volume T(n, p) and the effective search space.
    Volume {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Exponent base from `n:cost` pairs.
    Fit {
        /// Comma-separated `n:cost` pairs, e.g. `16:9,25:11,36:17`.
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    Breakeven {
        #[arg(long)]
        p_eff: f64,
        #[arg(long, default_value_t = 1e10)]
        budget: f64,
    },
}

#[derive(Subcommand)]
enum CampaignCmd {
    /// Run a campaign file; writes rows.jsonl, metadata.json and CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild one table from a rows file.
    Tables {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Scaling,
    RateSweep,
    Exponent,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, conflicts_with = "graph")]
    register: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Shots document or device export (`register` + `measurements`).
    #[arg(long)]
    shots: PathBuf,
    #[arg(long)]
    graph_id: Option<String>,
    /// Also write the normalized shots document here.
    #[arg(long)]
    normalized: Option<PathBuf>,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    Ok(parse_graph(&read(path)?).with_context(|| format!("parsing {}", path.display()))?)
}

fn load_shots(path: &Path) -> anyhow::Result<Vec<ShotRecord>> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_shots(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print(value: &serde_json::Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Graph(GraphCmd::Gen(a)) => {
            let g = if let Some(reg) = &a.register {
                unit_disk_graph(&parse_register(&read(reg)?)?)?
            } else {
                let family: LatticeFamily = a.family.unwrap_or(Family::Square).into();
                let target = LatticeSpec::full(family, a.rows, a.cols);
                let spec = if a.embed {
                    let block = build_lattice(&LatticeSpec::full(family, EMBED_BLOCK, EMBED_BLOCK))?;
                    embed_filling_fraction(&block, &target, a.placement_seed)?
                } else {
                    target
                };
                build_lattice(&spec)?
            };
            let mut w = sink(a.out.as_deref())?;
            writeln!(w, "{}", serialize_graph(&g))?;
            w.flush()?;
        }
        Command::Mis(MisCmd::Solve { graph, method }) => {
            let g = load_graph(&graph)?;
            let r = match method {
                MisMethod::Brute => brute_force_mis(&g)?,
                MisMethod::Tarjan => tarjan_mis(&g),
            };
            print(&serde_json::to_value(&r)?)?;
        }
        Command::Noise(NoiseCmd::Emulate {
            graph,
            ideal,
            p01,
            p10,
            shots,
            seed,
            graph_id,
            out,
        }) => {
            let g = load_graph(&graph)?;
            let ideal = match ideal {
                Some(b) => b,
                None => tarjan_mis(&g).witness,
            };
            if ideal.len() != g.n() {
                return Err(demkit::Error::LengthMismatch {
                    expected: g.n(),
                    found: ideal.len(),
                }
                .into());
            }
            let model = NoiseModel::new(p01, p10)?;
            let id = graph_id.unwrap_or_else(|| stem(&graph));
            let records: Vec<ShotRecord> = apply_channel(&ideal, &model, seed, shots)?
                .into_iter()
                .enumerate()
                .map(|(i, bits)| ShotRecord {
                    graph_id: id.clone(),
                    shot: i as u64,
                    bits,
                })
                .collect();
            let mut w = sink(out.as_deref())?;
            write_shots(&mut w, &records)?;
            w.flush()?;
        }
        Command::Noise(NoiseCmd::Calibrate { ideal, shots }) => {
            let bits: Vec<Bitstring> = load_shots(&shots)?.into_iter().map(|r| r.bits).collect();
            print(&serde_json::to_value(calibrate(&ideal, &bits)?)?)?;
        }
        Command::Dem(DemCmd::Run {
            graph,
            k,
            shots,
            budget,
            all_shots,
        }) => {
            let g = load_graph(&graph)?;
            let bits: Vec<Bitstring> = load_shots(&shots)?.into_iter().map(|r| r.bits).collect();
            let budget = budget.unwrap_or_else(|| default_budget(g.n()));
            let policy = if all_shots {
                ShotPolicy::All
            } else {
                ShotPolicy::StopAtFirstYes
            };
            let rep = decide_k_is(&g, k, &bits, budget, policy)?;
            let mut out = BufWriter::new(io::stdout().lock());
            for s in &rep.per_shot {
                let rec = json!({
                    "shot": s.shot,
                    "decision": s.decision,
                    "ops": s.ops,
                    "hd_explored": s.hd_explored,
                    "output": s.output,
                });
                writeln!(out, "{rec}")?;
            }
            let summary = json!({
                "summary": {
                    "decision": rep.decision,
                    "k": rep.k,
                    "shots_processed": rep.per_shot.len(),
                    "median_ops": rep.median_ops,
                    "mean_ops": rep.mean_ops,
                    "first_yes_shot": rep.first_yes_shot,
                    "ops_until_first_yes": rep.ops_until_first_yes,
                    "budget": budget,
                }
            });
            writeln!(out, "{summary}")?;
            out.flush()?;
            let exhausted = rep
                .per_shot
                .iter()
                .any(|s| s.termination == Termination::BudgetExhausted);
            if rep.decision == Decision::No && exhausted {
                return Ok(EXIT_BUDGET);
            }
        }
        Command::Dem(DemCmd::Tarjan { graph, p }) => {
            let g = load_graph(&graph)?;
            let r = tarjan_dem(&g, p)?;
            print(&json!({
                "size": r.size,
                "K": r.k_budget,
                "node_count": r.node_count,
                "witness": r.witness,
                "depth_rule": "include_branch",
            }))?;
        }
        Command::Analyze(AnalyzeCmd::Volume { n, p }) => {
            let t = search_volume(n, p)?;
            let mut v = serde_json::to_value(&t)?;
            if p > 0.0 {
                v["effective_search_space"] = serde_json::to_value(effective_search_space(n, p)?)?;
            }
            print(&v)?;
        }
        Command::Analyze(AnalyzeCmd::Fit { points, p }) => {
            let mut pts = Vec::new();
            for item in points.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let Some((n, c)) = item.split_once(':') else {
                    return Err(demkit::Error::Parse(format!("expected n:cost, got {item:?}")).into());
                };
                let n: usize = n.trim().parse().map_err(|_| demkit::Error::Parse(format!("bad n in {item:?}")))?;
                let c: f64 = c.trim().parse().map_err(|_| demkit::Error::Parse(format!("bad cost in {item:?}")))?;
                pts.push((n, c));
            }
            print(&serde_json::to_value(fit_exponent_base(&pts, p)?)?)?;
        }
        Command::Analyze(AnalyzeCmd::Breakeven { p_eff, budget }) => {
            let mut v = serde_json::to_value(breakeven_size(p_eff, budget)?)?;
            v["reading"] = json!("ratio");
            print(&v)?;
        }
        Command::Campaign(CampaignCmd::Run { config, out }) => {
            let (c, base) = load_campaign(&config).with_context(|| format!("loading {}", config.display()))?;
            let rows = run_to_dir(&c, &base, &out)?;
            eprintln!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Campaign(CampaignCmd::Tables { rows, kind, out }) => {
            let f = fs::File::open(&rows).with_context(|| format!("opening {}", rows.display()))?;
            let rows = read_rows(BufReader::new(f))?;
            let kind = match kind {
                Kind::Scaling => TableKind::Scaling,
                Kind::RateSweep => TableKind::RateSweep,
                Kind::Exponent => TableKind::Exponent,
            };
            let t = emit_tables(&rows, kind)?;
            let mut w = sink(out.as_deref())?;
            t.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Ingest(a) => {
            let id = a.graph_id.clone().unwrap_or_else(|| stem(&a.shots));
            let (export_reg, records) = read_shot_source(&read(&a.shots)?, &id)?;
            let g = match (&a.register, &a.graph, export_reg) {
                (Some(r), _, _) => unit_disk_graph(&parse_register(&read(r)?)?)?,
                (None, Some(g), _) => load_graph(g)?,
                (None, None, Some(reg)) => unit_disk_graph(&reg)?,
                (None, None, None) => bail!(demkit::Error::InvalidArgument(
                    "pass --register or --graph unless the shots file is a device export".into()
                )),
            };
            let rep = ingest_measurements(&g, &id, &records)?;
            if let Some(p) = &a.normalized {
                let mut w = sink(Some(p))?;
                write_shots(&mut w, &rep.shots)?;
                w.flush()?;
            }
            print(&json!({
                "graph_id": rep.graph_id,
                "n": rep.n,
                "mis_size": rep.mis_size,
                "reference": rep.reference,
                "calibration": rep.calibration,
                "heavy_shots": rep.heavy_shots,
                "shots": rep.shots.len(),
            }))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .find_map(|c| c.downcast_ref::<demkit::Error>())
                .is_some_and(demkit::Error::is_validation);
            ExitCode::from(if validation { EXIT_VALIDATION } else { 1 })
        }
    }
}
