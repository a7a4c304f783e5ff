//! The `skijudge` command line. `main.rs` only forwards to [`execute`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use skijudge_core::jumpcode::Position;
use skijudge_core::metrics::{rl2, srcc, ScoreSeries};
use skijudge_core::scoring::{aggregate_panel_with, score_trace, JudgeScore, PanelResult, TraceFile, TraceInput, TrimPolicy};
use skijudge_core::simulator::{default_roster, simulate_competition, write_dataset, DatasetManifest, SimConfig};
use skijudge_core::{describe, parse, Dd, DifficultyCatalog, Gender, RuleConfig};

#[derive(Parser)]
#[command(name = "skijudge", version, about = "Aerial skiing judging engine")]
struct Cli {
    /// Rule configuration (TOML); the built-in defaults otherwise.
    #[arg(long, global = true, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Difficulty catalog (CSV); the built-in table otherwise.
    #[arg(long, global = true, value_name = "FILE")]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a jump code and print its description.
    Parse { code: String },
    /// Look up the degree of difficulty of a catalog code.
    Dd {
        code: String,
        #[arg(long, default_value = "men")]
        gender: Gender,
    },
    /// Score a trace file: one judge's trace or a five-judge panel.
    Score {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Trim::PerTotal)]
        trim: Trim,
        /// Print JSON instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic annotated dataset and its manifest.
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 550)]
        jumps: usize,
        #[arg(long, default_value_t = 24)]
        athletes: usize,
        /// Judge perception noise, degrees.
        #[arg(long)]
        sigma: Option<f64>,
        /// Chance a judge misreads a landing flag.
        #[arg(long)]
        flip_prob: Option<f64>,
        #[arg(long, value_enum, default_value_t = Trim::PerTotal)]
        trim: Trim,
        #[arg(long)]
        out: PathBuf,
    },
    /// SRCC and relative L2 distance between two score files.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Score scale as MIN,MAX; defaults to 0 and 10 x the largest catalog DD.
        #[arg(long, value_parser = parse_range)]
        range: Option<(f64, f64)>,
    },
    /// Run the judging service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Trim {
    PerTotal,
    PerStage,
}

impl From<Trim> for TrimPolicy {
    fn from(t: Trim) -> Self {
        match t {
            Trim::PerTotal => TrimPolicy::PerTotal,
            Trim::PerStage => TrimPolicy::PerStage,
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected MIN,MAX")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Runs one invocation (`args[0]` is the program name), writing normal output
/// to `out` and diagnostics to stderr. Returns the process exit code: 0 on
/// success, 2 for usage errors, 1 for everything else.
pub fn execute<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {message}");
            1
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let rules = match &cli.rules {
        Some(path) => RuleConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RuleConfig::default(),
    };
    let catalog = match &cli.catalog {
        Some(path) => DifficultyCatalog::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => DifficultyCatalog::official(),
    };
    match cli.command {
        Command::Parse { code } => parse_cmd(&code, out),
        Command::Dd { code, gender } => {
            writeln!(out, "{}", catalog.lookup_dd(&code, gender)?)?;
            Ok(())
        }
        Command::Score { trace, trim, json } => score_cmd(&trace, trim.into(), json, &rules, &catalog, out),
        Command::Simulate {
            seed,
            jumps,
            athletes,
            sigma,
            flip_prob,
            trim,
            out: path,
        } => {
            let mut cfg = SimConfig {
                seed,
                jump_count: jumps,
                athlete_count: athletes,
                trim_policy: trim.into(),
                ..SimConfig::default()
            };
            if let Some(s) = sigma {
                cfg.judge_noise_sigma_deg = s;
            }
            if let Some(p) = flip_prob {
                cfg.flag_flip_prob = p;
            }
            simulate_cmd(&cfg, &path, &rules, &catalog, out)
        }
        Command::Metrics { pred, gt, range } => {
            let range = range.unwrap_or((0.0, 10.0 * catalog.max_dd().as_f64()));
            metrics_cmd(&pred, &gt, range, out)
        }
        Command::Serve { port, host, data_dir } => {
            fs::create_dir_all(&data_dir).with_context(|| format!("creating {}", data_dir.display()))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(skijudge_service::serve(SocketAddr::new(host, port), &data_dir, rules, catalog))?;
            Ok(())
        }
    }
}

fn parse_cmd(text: &str, out: &mut dyn Write) -> Result<()> {
    let code = parse(text)?;
    writeln!(out, "code        {code}")?;
    writeln!(out, "direction   {}", format!("{:?}", code.direction()).to_lowercase())?;
    for (i, flip) in code.flips().iter().enumerate() {
        let position = match flip.position() {
            Position::Tuck => "tuck",
            Position::Pike => "pike",
            Position::Lay => "lay",
        };
        writeln!(out, "flip {}      {:<3} {position}, {} twist(s)", i + 1, flip.token(), flip.twists())?;
    }
    writeln!(out, "description {}", describe(&code))?;
    Ok(())
}

fn judge_report(score: &JudgeScore, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "air      {}", score.air)?;
    writeln!(out, "form     {}", score.form)?;
    writeln!(out, "landing  {}", score.landing)?;
    writeln!(out, "total    {}", score.total)?;
    if score.deductions.is_empty() {
        return writeln!(out, "deductions: none");
    }
    writeln!(out, "deductions:")?;
    for d in &score.deductions {
        writeln!(
            out,
            "  {:<8} {:<28} {:<8} {}  t={:.3}",
            d.stage.to_string(),
            d.item,
            d.severity.to_string(),
            d.points,
            d.timestamp_s
        )?;
    }
    Ok(())
}

fn panel_report(panel: &PanelResult, out: &mut dyn Write) -> std::io::Result<()> {
    for (i, judge) in panel.judges.iter().enumerate() {
        let mark = if panel.kept_indices.contains(&i) { "kept" } else { "dropped" };
        writeln!(
            out,
            "judge {}  air {}  form {}  landing {}  total {}  {mark}",
            i + 1,
            judge.air,
            judge.form,
            judge.landing,
            judge.total
        )?;
    }
    writeln!(out, "mean     {}", panel.pre_dd_mean_hundredths())?;
    writeln!(out, "dd       {}", panel.dd)?;
    writeln!(out, "final    {}", panel.final_score)
}

fn score_cmd(
    path: &Path,
    policy: TrimPolicy,
    json: bool,
    rules: &RuleConfig,
    catalog: &DifficultyCatalog,
    out: &mut dyn Write,
) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match TraceFile::parse(&text)? {
        TraceInput::Single(trace) => {
            let score = score_trace(&trace, rules)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&score)?)?;
            } else {
                judge_report(&score, out)?;
            }
        }
        TraceInput::Panel(traces) => {
            let scores = traces.iter().map(|t| score_trace(t, rules)).collect::<Result<Vec<_>, _>>()?;
            let dd: Dd = catalog.lookup_dd(traces[0].code.canonical_text(), traces[0].gender)?;
            let panel = aggregate_panel_with(&scores, dd, policy)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&panel)?)?;
            } else {
                panel_report(&panel, out)?;
            }
        }
    }
    Ok(())
}

fn simulate_cmd(cfg: &SimConfig, path: &Path, rules: &RuleConfig, catalog: &DifficultyCatalog, out: &mut dyn Write) -> Result<()> {
    let roster = default_roster(cfg.seed, cfg.athlete_count, catalog);
    let jumps = simulate_competition(cfg, &roster, catalog, rules)?;
    let manifest = write_dataset(path, &jumps, cfg, &roster, catalog, rules)
        .with_context(|| format!("writing {}", path.display()))?;
    writeln!(
        out,
        "wrote {} records to {} (manifest {})",
        manifest.record_count,
        path.display(),
        DatasetManifest::path_for(path).display()
    )?;
    Ok(())
}

/// Reads `id -> score` from JSONL. A line's score is `final_score`, or
/// `score` when there is none; either may be a number or a decimal string.
fn read_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut scores = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let at = || format!("{}:{}", path.display(), i + 1);
        let value: Value = serde_json::from_str(line).with_context(at)?;
        let id = value["id"].as_str().ok_or_else(|| anyhow!("{}: missing string `id`", at()))?;
        let raw = value.get("final_score").or_else(|| value.get("score"));
        let score = match raw {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => s.parse().ok(),
            _ => None,
        }
        .ok_or_else(|| anyhow!("{}: missing numeric `final_score` or `score`", at()))?;
        if scores.insert(id.to_string(), score).is_some() {
            bail!("{}: duplicate id {id:?}", at());
        }
    }
    Ok(scores)
}

fn metrics_cmd(pred: &Path, gt: &Path, range: (f64, f64), out: &mut dyn Write) -> Result<()> {
    let pred = read_scores(pred)?;
    let gt = read_scores(gt)?;
    if let Some(id) = gt.keys().find(|id| !pred.contains_key(*id)) {
        bail!("no prediction for ground-truth id {id:?}");
    }
    if let Some(id) = pred.keys().find(|id| !gt.contains_key(*id)) {
        bail!("prediction {id:?} has no ground truth");
    }
    let series = ScoreSeries::new(pred.into_values().collect(), gt.into_values().collect(), range)?;
    writeln!(out, "srcc {:.3}", srcc(&series)?)?;
    writeln!(out, "rl2 {:.3}", rl2(&series))?;
    Ok(())
}
