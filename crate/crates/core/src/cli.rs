//! Scenario runner behind the `winsets` binary.
//!
//! A scenario file is a list of `key = value` lines grouped under `[name]`
//! headers. Keys above the first header are defaults for every scenario.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::cantor::{
    avoiding_construction, full_construction, golden_mean, middle_thirds, BudgetTable, CantorConstruction,
};
use crate::engine::{
    exhaustive_bob, play, BobEnumerator, FnStrategy, GameConfig, GameEnd, Move, RandomBob, SchmidtVariant, Strategy,
    Transcript,
};
use crate::error::{Error, Result};
use crate::fractal::{box_dimension, separated_packing, AvoidingBob, ScaleProfile};
use crate::scalar::{format_exact, int, parse_exact, to_f64, ExactScalar, DEFAULT_PRECISION};
use crate::space::{Ball, SpaceTag, SplittingStructure};
use crate::strategies::{
    cantor_game_alice_from_construction, compute_cantor_game_params, dolgopyat_alice, lift_schmidt_strategy,
    schmidt_lift_parameters, CantorGameAlice, RemovalPolicy,
};

#[derive(Parser, Debug)]
#[command(
    name = "winsets",
    version,
    about = "Play, sweep and measure winning-set constructions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Play scenarios against random or avoiding Bobs.
    Play(Options),
    /// Play scenarios against every tight Bob on the shift.
    Sweep(Options),
    /// Build constructions, write dumps and check budgets.
    BuildCantor(Options),
    /// Exact identity checks.
    Verify(Options),
    /// Box-dimension estimates.
    Dim(Options),
    /// SVG of construction levels.
    Render(Options),
}

impl Command {
    fn options(&self) -> &Options {
        match self {
            Command::Play(o)
            | Command::Sweep(o)
            | Command::BuildCantor(o)
            | Command::Verify(o)
            | Command::Dim(o)
            | Command::Render(o) => o,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct Options {
    /// Scenario file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Directory for transcripts, dumps, profiles and images.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides every scenario's `depth`.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Enclosure precision in bits.
    #[arg(long)]
    pub precision: Option<u32>,
    /// Overrides every scenario's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

const KEYS: &[&str] = &[
    "game",
    "space",
    "variant",
    "alpha",
    "beta",
    "c",
    "eps",
    "modulus",
    "b0",
    "alice",
    "bob",
    "horizon",
    "plays",
    "seed",
    "grid",
    "construction",
    "depth",
    "depths",
    "eps0",
    "delta",
    "eta",
    "ell",
    "policy",
    "cover",
    "check",
    "values",
    "counts",
    "expect",
    "tol",
    "profile",
    "budget_eps",
];

/// One named block of a scenario file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    values: BTreeMap<String, String>,
    base: PathBuf,
}

impl Scenario {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("[{}] missing key {key:?}", self.name)))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parse(format!("[{}] {key} = {v:?}", self.name)))
            })
            .transpose()
    }

    fn exact(&self, key: &str) -> Result<Option<ExactScalar>> {
        self.get(key).map(parse_exact).transpose()
    }

    fn exact_or(&self, key: &str, default: ExactScalar) -> Result<ExactScalar> {
        Ok(self.exact(key)?.unwrap_or(default))
    }

    fn exact_list(&self, key: &str) -> Result<Option<Vec<ExactScalar>>> {
        self.get(key)
            .map(|v| v.split(',').map(parse_exact).collect())
            .transpose()
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }
}

/// Parses a scenario file. `base` resolves relative paths inside it.
pub fn parse_scenarios(text: &str, base: &Path) -> Result<Vec<Scenario>> {
    let mut defaults = BTreeMap::new();
    let mut blocks: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty() && !n.contains(['/', '\\']))
                .ok_or_else(|| Error::Parse(format!("line {}: bad header {line:?}", i + 1)))?;
            if blocks.iter().any(|(n, _)| n == name) {
                return Err(Error::Parse(format!("line {}: duplicate scenario {name:?}", i + 1)));
            }
            blocks.push((name.to_string(), BTreeMap::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse(format!("line {}: unknown key {key:?}", i + 1)));
        }
        let target = match blocks.last_mut() {
            Some((_, m)) => m,
            None => &mut defaults,
        };
        target.insert(key.to_string(), value.to_string());
    }
    if blocks.is_empty() {
        blocks.push(("scenario".to_string(), BTreeMap::new()));
    }
    Ok(blocks
        .into_iter()
        .map(|(name, own)| {
            let mut values = defaults.clone();
            values.extend(own);
            Scenario {
                name,
                values,
                base: base.to_path_buf(),
            }
        })
        .collect())
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    pub out: PathBuf,
    pub depth: Option<usize>,
    pub precision: Option<u32>,
    pub seed: Option<u64>,
}

impl RunSettings {
    fn precision(&self) -> u32 {
        self.precision.unwrap_or(DEFAULT_PRECISION)
    }
}

/// What a scenario reports: summary lines, files, and whether its invariants held.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

impl Report {
    fn check(&mut self, ok: bool, line: String) {
        self.lines.push(line);
        self.passed &= ok;
    }
}

fn depth(s: &Scenario, cfg: &RunSettings) -> Result<usize> {
    match cfg.depth {
        Some(d) => Ok(d),
        None => s
            .parsed("depth")?
            .ok_or_else(|| Error::Parse(format!("[{}] missing key \"depth\"", s.name))),
    }
}

fn seed(s: &Scenario, cfg: &RunSettings) -> Result<u64> {
    Ok(cfg.seed.or(s.parsed("seed")?).unwrap_or(0))
}

fn space(s: &Scenario) -> Result<SpaceTag> {
    match s.get("space").unwrap_or("line") {
        "line" => Ok(SpaceTag::RealLine),
        "shift" => Ok(SpaceTag::Shift),
        other => Err(Error::Parse(format!("[{}] space = {other:?}", s.name))),
    }
}

fn bits(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parse(format!("bad bit string {text:?}"))),
        })
        .collect()
}

/// The construction named by `construction`, built to `depth` when it is a
/// built-in family.
pub fn construction(s: &Scenario, depth: Option<usize>) -> Result<CantorConstruction> {
    let spec = s.require("construction")?;
    let d = depth.unwrap_or(0);
    match spec {
        "golden" => golden_mean(d),
        "middle-thirds" => middle_thirds(d),
        "full-shift" => full_construction(Ball::root_cylinder(), 2, d),
        "empty" => CantorConstruction::new(Ball::root_cylinder(), 2, BudgetTable::new()),
        _ => {
            if let Some(pattern) = spec.strip_prefix("avoid:") {
                avoiding_construction(&bits(pattern)?, d)
            } else if let Some(file) = spec.strip_prefix("file:") {
                let path = s.path(file);
                let text = fs::read_to_string(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                CantorConstruction::load(&text)
            } else {
                Err(Error::Parse(format!("[{}] construction = {spec:?}", s.name)))
            }
        }
    }
}

fn game_config(s: &Scenario, cfg: &RunSettings) -> Result<GameConfig> {
    let sp = space(s)?;
    let game = match s.require("game")? {
        "schmidt" => {
            let variant = match s.get("variant").unwrap_or("classic") {
                "classic" => SchmidtVariant::Classic,
                "strong" => SchmidtVariant::Strong,
                "weak" => SchmidtVariant::Weak,
                "very-strong" => SchmidtVariant::VeryStrong,
                other => return Err(Error::Parse(format!("[{}] variant = {other:?}", s.name))),
            };
            GameConfig::schmidt(
                sp,
                variant,
                parse_exact(s.require("alpha")?)?,
                parse_exact(s.require("beta")?)?,
            )
        }
        "absolute" => GameConfig::absolute(sp, parse_exact(s.require("beta")?)?),
        "potential" => GameConfig::potential(sp, parse_exact(s.require("c")?)?, parse_exact(s.require("beta")?)?),
        "cantor" => {
            let modulus = s
                .parsed("modulus")?
                .ok_or_else(|| Error::Parse(format!("[{}] missing key \"modulus\"", s.name)))?;
            GameConfig::cantor(sp, parse_exact(s.require("eps")?)?, modulus)
        }
        other => return Err(Error::Parse(format!("[{}] game = {other:?}", s.name))),
    }?;
    Ok(game.with_precision(cfg.precision()))
}

fn default_b0(s: &Scenario, c: Option<&CantorConstruction>) -> Result<Ball> {
    if let Some(text) = s.get("b0") {
        return text.parse();
    }
    if let Some(c) = c {
        return Ok(c.b0().clone());
    }
    Ok(match space(s)? {
        SpaceTag::RealLine => Ball::unit_interval(),
        SpaceTag::Shift => Ball::root_cylinder(),
    })
}

fn cantor_alice(s: &Scenario, game: &GameConfig, c: CantorConstruction) -> Result<CantorGameAlice> {
    let crate::engine::GameKind::Cantor { eps, modulus, .. } = &game.kind else {
        return Err(Error::InvalidParameter("cantor-game needs game = cantor".into()));
    };
    let eps0 = s.exact_or("eps0", eps.clone())?;
    let delta = s.exact_or("delta", int(1))?;
    let params = match (s.exact("eta")?, s.parsed::<usize>("ell")?) {
        (Some(eta), Some(ell)) => {
            crate::strategies::CantorGameParams::for_block_length(&eps0, *modulus, &delta, &eta, ell)?
        }
        _ => compute_cantor_game_params(&eps0, *modulus, &delta)?,
    };
    let policy = match s.get("policy").unwrap_or("positive") {
        "positive" => RemovalPolicy::PositiveOnly,
        "full" => RemovalPolicy::Full,
        other => return Err(Error::Parse(format!("[{}] policy = {other:?}", s.name))),
    };
    cantor_game_alice_from_construction(c, params, policy)
}

fn center_alice(alpha: ExactScalar) -> impl Strategy {
    FnStrategy::new("center", move |t: &Transcript| {
        let b = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        let c = b.center().ok_or_else(|| Error::WrongSpace(b.to_string()))?;
        Ok(Move::AliceBall(Ball::interval(c.clone(), &alpha * b.radius())?))
    })
}

fn silent_alice() -> impl Strategy {
    FnStrategy::new("silent", |t: &Transcript| {
        Ok(match &t.config().kind {
            crate::engine::GameKind::Cantor { .. } => Move::AliceRemovalSet(Vec::new()),
            crate::engine::GameKind::Potential { .. } => Move::AliceCollection(Vec::new()),
            _ => {
                return Err(Error::InvalidParameter(
                    "silent Alice only plays potential and Cantor games".into(),
                ))
            }
        })
    })
}

/// The Alice named by `alice`, with the construction she certifies, if any.
type AliceAndConstruction = (Arc<dyn Strategy>, Option<Arc<CantorConstruction>>);

fn alice(s: &Scenario, game: &GameConfig, depth: usize) -> Result<AliceAndConstruction> {
    let name = s.require("alice")?;
    Ok(match name {
        "cantor-game" => {
            let c = construction(s, Some(depth))?;
            let a = cantor_alice(s, game, c)?;
            let c = Arc::new(a.construction().clone());
            (Arc::new(a), Some(c))
        }
        "center" => (Arc::new(center_alice(parse_exact(s.require("alpha")?)?)), None),
        "lifted-center" => {
            let (a0, b0) = (parse_exact(s.require("alpha")?)?, parse_exact(s.require("beta")?)?);
            let (a, b) = schmidt_lift_parameters(&a0, &b0)?;
            (
                Arc::new(lift_schmidt_strategy(Arc::new(center_alice(a.clone())), a, b, a0, b0)?),
                None,
            )
        }
        "silent" => (Arc::new(silent_alice()), None),
        "dolgopyat" => {
            let cover = s
                .require("cover")?
                .split(',')
                .map(|w| Ok(Ball::cylinder(bits(w.trim())?)))
                .collect::<Result<Vec<_>>>()?;
            (
                Arc::new(dolgopyat_alice(
                    cover,
                    parse_exact(s.require("c")?)?,
                    parse_exact(s.require("beta")?)?,
                )?),
                None,
            )
        }
        other => return Err(Error::UnknownStrategy(other.to_string())),
    })
}

fn bob(s: &Scenario, seed: u64, b0: Ball) -> Result<Arc<dyn Strategy>> {
    let grid = s.parsed("grid")?.unwrap_or(16);
    Ok(match s.get("bob").unwrap_or("random") {
        "random" => Arc::new(RandomBob::new(seed, b0).with_grid(grid)),
        "random-all" => Arc::new(RandomBob::new(seed, b0).all_radii().with_grid(grid)),
        "avoiding" => Arc::new(AvoidingBob::new(b0).with_grid(grid)),
        other => return Err(Error::UnknownStrategy(other.to_string())),
    })
}

fn outcome_lines(report: &mut Report, ts: &[Transcript], c: Option<&CantorConstruction>, depth: usize) {
    let legal = ts
        .iter()
        .filter(|t| !matches!(t.end(), GameEnd::Illegal { .. }))
        .count();
    report.check(legal == ts.len(), format!("{legal}/{} transcripts legal", ts.len()));
    if let Some(c) = c {
        let inside = ts
            .iter()
            .filter(|t| t.last_bob_ball().is_some_and(|b| c.is_survivor(depth, b)))
            .count();
        report.check(
            inside == ts.len(),
            format!("{inside}/{} outcomes in survivors", ts.len()),
        );
    }
}

fn transcripts_file(ts: &[Transcript]) -> String {
    ts.iter().map(Transcript::export).collect::<Vec<_>>().join("\n")
}

fn run_play(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let game = game_config(s, cfg)?;
    let horizon = depth(s, cfg).or_else(|_| {
        s.parsed("horizon")?
            .ok_or_else(|| Error::Parse(format!("[{}] missing key \"horizon\"", s.name)))
    })?;
    let (a, c) = alice(s, &game, horizon)?;
    let b0 = default_b0(s, c.as_deref())?;
    let plays: u64 = s.parsed("plays")?.unwrap_or(1);
    let base = seed(s, cfg)?;
    let mut ts = Vec::new();
    for i in 0..plays {
        let b = bob(s, base.wrapping_add(i), b0.clone())?;
        ts.push(play(game.clone(), a.as_ref(), b.as_ref(), horizon)?);
    }
    let mut report = Report {
        passed: true,
        ..Report::default()
    };
    let defaults = ts
        .iter()
        .filter(|t| matches!(t.end(), GameEnd::DefaultWinAlice { .. }))
        .count();
    outcome_lines(&mut report, &ts, c.as_deref().filter(|_| defaults == 0), horizon);
    if defaults > 0 {
        report
            .lines
            .push(format!("{defaults}/{} plays won by default", ts.len()));
    }
    report
        .files
        .push((format!("{}.transcripts", s.name), transcripts_file(&ts)));
    Ok(report)
}

fn run_sweep(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let game = game_config(s, cfg)?;
    if game.space != SpaceTag::Shift {
        return Err(Error::InvalidParameter("exhaustive sweeps run on the shift".into()));
    }
    let d = depth(s, cfg)?;
    let (a, c) = alice(s, &game, d)?;
    let b0 = default_b0(s, c.as_deref())?;
    let ts = exhaustive_bob(game, a.as_ref(), b0, d, &BobEnumerator::ShiftTight)?;
    let mut report = Report {
        passed: true,
        ..Report::default()
    };
    outcome_lines(&mut report, &ts, c.as_deref(), d);
    report
        .files
        .push((format!("{}.transcripts", s.name), transcripts_file(&ts)));
    Ok(report)
}

fn run_build(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let d = depth(s, cfg)?;
    let c = construction(s, Some(d))?;
    let mut report = Report {
        passed: true,
        ..Report::default()
    };
    let counts = (0..=c.depth())
        .map(|n| c.survivors(n).map(|v| v.len().to_string()))
        .collect::<Result<Vec<_>>>()?;
    report.lines.push(format!("survivors per level: {}", counts.join(",")));
    if let Some(eps) = s.exact("budget_eps")? {
        let rep = c.validate_budgets(&eps, cfg.precision())?;
        report.check(
            rep.passed(),
            format!(
                "budgets at eps={}: {} violations",
                format_exact(&eps),
                rep.violations.len()
            ),
        );
    }
    report.files.push((format!("{}.cantor", s.name), c.dump()));
    Ok(report)
}

fn run_verify(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let mut report = Report {
        passed: true,
        ..Report::default()
    };
    match s.require("check")? {
        "lift-grid" => {
            let grid = s.exact_list("values")?.unwrap_or_else(|| {
                vec![
                    crate::scalar::rat(1, 4),
                    crate::scalar::rat(1, 3),
                    crate::scalar::rat(1, 2),
                ]
            });
            let rounds = s.parsed("horizon")?.unwrap_or(20);
            let plays: u64 = s.parsed("plays")?.unwrap_or(1);
            let base = seed(s, cfg)?;
            let mut ok = 0;
            let mut total = 0;
            for a0 in &grid {
                for b0 in &grid {
                    total += 1;
                    let (a, b) = schmidt_lift_parameters(a0, b0)?;
                    let outer = a0 * b0;
                    let mut pass = &a * &b == &outer * &outer;
                    let lifted =
                        lift_schmidt_strategy(Arc::new(center_alice(a.clone())), a, b, a0.clone(), b0.clone())?;
                    let game =
                        GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, a0.clone(), b0.clone())?
                            .with_precision(cfg.precision());
                    for i in 0..plays {
                        let bob = RandomBob::new(base.wrapping_add(i), Ball::unit_interval()).with_grid(8);
                        let t = play(game.clone(), &lifted, &bob, rounds)?;
                        let inner = lifted.inner_transcript(&t)?;
                        pass &= t.end() == GameEnd::Undecided && inner.records().iter().all(|r| r.verdict.is_legal());
                    }
                    ok += pass as usize;
                    if !pass {
                        report
                            .lines
                            .push(format!("({}, {}) failed", format_exact(a0), format_exact(b0)));
                    }
                }
            }
            report.check(ok == total, format!("{ok}/{total} pairs pass"));
        }
        "packing" => {
            let alphas = s
                .exact_list("values")?
                .ok_or_else(|| Error::Parse(format!("[{}] missing key \"values\"", s.name)))?;
            let counts: Option<Vec<usize>> = s
                .get("counts")
                .map(|v| {
                    v.split(',')
                        .map(|n| n.trim().parse().map_err(|_| Error::Parse(format!("counts = {v:?}"))))
                        .collect()
                })
                .transpose()?;
            let b = default_b0(s, None)?;
            for (i, alpha) in alphas.iter().enumerate() {
                let p = separated_packing(&b, alpha, &int(1));
                let gap = int(3) * alpha * b.radius();
                let separated = p
                    .windows(2)
                    .all(|w| w[0].center_distance(&w[1]).is_ok_and(|d| d == gap))
                    && p.iter().all(|q| b.contains_ball(q));
                let count_ok = counts.as_ref().and_then(|c| c.get(i)).is_none_or(|&n| n == p.len());
                report.check(
                    separated && count_ok,
                    format!(
                        "alpha={}: {} balls, separated={separated}",
                        format_exact(alpha),
                        p.len()
                    ),
                );
            }
        }
        other => return Err(Error::Parse(format!("[{}] check = {other:?}", s.name))),
    }
    Ok(report)
}

fn depth_range(text: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::Parse(format!("depths = {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    Ok(a.trim().parse().map_err(|_| bad())?..=b.trim().parse().map_err(|_| bad())?)
}

fn run_dim(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let profile = if let Some(file) = s.get("profile") {
        let path = s.path(file);
        ScaleProfile::from_csv(
            &fs::read_to_string(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        )?
    } else {
        let d = depth(s, cfg)?;
        let range = match s.get("depths") {
            Some(text) => depth_range(text)?,
            None => 1..=d,
        };
        let top = *range.end();
        ScaleProfile::from_construction(&construction(s, Some(top.max(d)))?, range)?
    };
    let est = box_dimension(&profile)?;
    let mut report = Report {
        passed: true,
        ..Report::default()
    };
    let line = format!("box dimension {:.6} (max residual {:.2e})", est.estimate, est.residual);
    match s.parsed::<f64>("expect")? {
        Some(expect) => {
            let tol = s.parsed::<f64>("tol")?.unwrap_or(0.05);
            report.check(
                (est.estimate - expect).abs() <= tol,
                format!("{line}, expected {expect:.6} ± {tol}"),
            );
        }
        None => report.lines.push(line),
    }
    report.files.push((format!("{}.csv", s.name), profile.to_csv()));
    Ok(report)
}

/// Horizontal extent of `b` inside `root`, as fractions of the root's width.
fn extent(b: &Ball, root: &Ball) -> (f64, f64) {
    match (b, root) {
        (Ball::Cylinder { word }, Ball::Cylinder { word: top }) => {
            let tail = &word[top.len().min(word.len())..];
            let mut lo = 0.0;
            let mut w = 1.0;
            for &bit in tail {
                w /= 2.0;
                lo += w * bit as f64;
            }
            (lo, lo + w)
        }
        _ => {
            let (a, z) = b.endpoints().unwrap_or((int(0), int(1)));
            let (a0, z0) = root.endpoints().unwrap_or((int(0), int(1)));
            let span = &z0 - &a0;
            (to_f64(&((a - &a0) / &span)), to_f64(&((z - &a0) / &span)))
        }
    }
}

const SVG_WIDTH: f64 = 1000.0;
const SVG_MARGIN: f64 = 10.0;
const ROW_HEIGHT: f64 = 20.0;

/// Deterministic SVG: row `n` holds the level-`n` survivors in black and the
/// children removed at that level in red.
pub fn render_levels(c: &CantorConstruction, depth: usize) -> Result<String> {
    if depth > c.depth() {
        return Err(Error::DepthNotBuilt {
            requested: depth,
            built: c.depth(),
        });
    }
    let root = c.b0();
    let split = c.structure();
    let height = 2.0 * SVG_MARGIN + ROW_HEIGHT * depth as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        SVG_WIDTH + 2.0 * SVG_MARGIN,
        height,
        SVG_WIDTH + 2.0 * SVG_MARGIN,
        height
    );
    let segment = |svg: &mut String, class: &str, n: usize, b: &Ball| {
        let (a, z) = extent(b, root);
        let y = SVG_MARGIN + ROW_HEIGHT * n as f64;
        let colour = if class == "survivor" { "black" } else { "red" };
        let _ = writeln!(
            svg,
            "<line class=\"{class}\" data-level=\"{n}\" x1=\"{:.4}\" y1=\"{y:.1}\" x2=\"{:.4}\" y2=\"{y:.1}\" stroke=\"{colour}\" stroke-width=\"6\"/>",
            SVG_MARGIN + SVG_WIDTH * a,
            SVG_MARGIN + SVG_WIDTH * z
        );
    };
    for n in 0..=depth {
        let level = c.survivors(n)?;
        if n > 0 {
            for parent in c.survivors(n - 1)? {
                for kid in split.split(parent, c.modulus())? {
                    if level.binary_search(&kid).is_err() {
                        segment(&mut svg, "removed", n, &kid);
                    }
                }
            }
        }
        for b in level {
            segment(&mut svg, "survivor", n, b);
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn run_render(s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    let builtin = !s.require("construction")?.starts_with("file:") && s.get("construction") != Some("empty");
    let requested = match (cfg.depth, s.parsed::<usize>("depth")?) {
        (Some(d), _) | (None, Some(d)) => Some(d),
        _ => None,
    };
    let c = construction(s, if builtin { requested } else { None })?;
    let d = requested.unwrap_or(c.depth());
    let svg = render_levels(&c, d)?;
    let bottom = c.survivors(d)?.len();
    Ok(Report {
        lines: vec![format!("levels 0..={d}, {bottom} segments in the bottom row")],
        files: vec![(format!("{}.svg", s.name), svg)],
        passed: true,
    })
}

/// Runs one scenario under `command`.
pub fn run_scenario(command: &Command, s: &Scenario, cfg: &RunSettings) -> Result<Report> {
    match command {
        Command::Play(_) => {
            if s.get("bob") == Some("exhaustive") {
                run_sweep(s, cfg)
            } else {
                run_play(s, cfg)
            }
        }
        Command::Sweep(_) => run_sweep(s, cfg),
        Command::BuildCantor(_) => run_build(s, cfg),
        Command::Verify(_) => run_verify(s, cfg),
        Command::Dim(_) => run_dim(s, cfg),
        Command::Render(_) => run_render(s, cfg),
    }
}

/// `0` when every invariant passed, `1` on an invariant failure or a
/// runtime error, `2` on a malformed spec or an unknown strategy.
pub fn exit_code(outcome: &Result<bool>) -> i32 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Error::Parse(_) | Error::UnknownStrategy(_)) => 2,
        Err(_) => 1,
    }
}

/// Runs every scenario of `spec`, writing artifacts under `cfg.out` and one
/// summary line per result to `log`.
pub fn run_file(command: &Command, spec: &Path, cfg: &RunSettings, log: &mut dyn Write) -> Result<bool> {
    let text = fs::read_to_string(spec).map_err(|e| Error::Parse(format!("{}: {e}", spec.display())))?;
    let base = spec.parent().map(Path::to_path_buf).unwrap_or_default();
    let scenarios = parse_scenarios(&text, &base)?;
    // parse errors surface before any scenario runs
    for s in &scenarios {
        for key in ["depth", "seed", "horizon", "plays", "grid", "modulus", "ell"] {
            s.parsed::<u64>(key)?;
        }
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::InvalidParameter(format!("{}: {e}", cfg.out.display())))?;
    let mut all = true;
    for s in &scenarios {
        let report = run_scenario(command, s, cfg)?;
        let status = if report.passed { "PASS" } else { "FAIL" };
        let mut summary = String::new();
        for line in &report.lines {
            let _ = writeln!(summary, "[{}] {status}: {line}", s.name);
        }
        for (file, body) in &report.files {
            let path = cfg.out.join(file);
            fs::write(&path, body).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        }
        fs::write(cfg.out.join(format!("{}.summary", s.name)), &summary)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", cfg.out.display())))?;
        let _ = log.write_all(summary.as_bytes());
        all &= report.passed;
    }
    Ok(all)
}

/// Entry point for the binary: parses `args`, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let o = cli.command.options();
    let cfg = RunSettings {
        out: o.out.clone(),
        depth: o.depth,
        precision: o.precision,
        seed: o.seed,
    };
    let mut stdout = std::io::stdout();
    let outcome = run_file(&cli.command, &o.spec, &cfg, &mut stdout);
    if let Err(e) = &outcome {
        eprintln!("error: {e}");
    }
    exit_code(&outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Scenario {
        parse_scenarios(text, Path::new(".")).unwrap().remove(0)
    }

    fn settings() -> RunSettings {
        RunSettings::default()
    }

    fn opts() -> Options {
        Options {
            spec: PathBuf::new(),
            out: PathBuf::new(),
            depth: None,
            precision: None,
            seed: None,
        }
    }

    #[test]
    fn sections_inherit_defaults() {
        let v = parse_scenarios(
            "depth = 3\n# note\n[a]\nseed = 1 # trailing\n[b]\ndepth = 4\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(
            (v[0].name.as_str(), v[0].get("depth"), v[0].get("seed")),
            ("a", Some("3"), Some("1"))
        );
        assert_eq!((v[1].get("depth"), v[1].get("seed")), (Some("4"), None));
        assert_eq!(one("depth = 2").name, "scenario");
    }

    #[test]
    fn malformed_specs_are_parse_errors() {
        for text in ["depth 3", "[a\ndepth = 1", "[]", "colour = red", "[a]\n[a]", "[../x]"] {
            let e = parse_scenarios(text, Path::new(".")).unwrap_err();
            assert!(matches!(e, Error::Parse(_)), "{text:?}: {e}");
            assert_eq!(exit_code(&Err(e)), 2);
        }
        let s = one("[x]\ndepth = three\nconstruction = golden");
        assert!(matches!(
            run_scenario(&Command::Render(opts()), &s, &settings()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(true)), 0);
        assert_eq!(exit_code(&Ok(false)), 1);
        assert_eq!(exit_code(&Err(Error::UnknownStrategy("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::EmptyTranscript)), 1);
    }

    #[test]
    fn unknown_strategies() {
        let s = one("game = potential\nc = 1/2\nbeta = 1/2\nalice = sorcerer\nhorizon = 2");
        assert!(
            matches!(run_scenario(&Command::Play(opts()), &s, &settings()), Err(Error::UnknownStrategy(n)) if n == "sorcerer")
        );
        let s = one("game = potential\nc = 1/2\nbeta = 1/2\nalice = silent\nbob = ghost\nhorizon = 2");
        assert!(
            matches!(run_scenario(&Command::Play(opts()), &s, &settings()), Err(Error::UnknownStrategy(n)) if n == "ghost")
        );
    }

    #[test]
    fn golden_sweep_summary() {
        let s = one("game = cantor\nspace = shift\neps = 1\nmodulus = 2\nconstruction = golden\nalice = cantor-game\neta = 1/2\nell = 1\ndepth = 10");
        let r = run_scenario(&Command::Sweep(opts()), &s, &settings()).unwrap();
        assert!(r.passed);
        assert!(
            r.lines.contains(&"144/144 outcomes in survivors".to_string()),
            "{:?}",
            r.lines
        );
        let again = run_scenario(
            &Command::Play(opts()),
            &Scenario {
                values: {
                    let mut v = s.values.clone();
                    v.insert("bob".into(), "exhaustive".into());
                    v
                },
                ..s.clone()
            },
            &settings(),
        )
        .unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn sweep_without_construction_reports_legality() {
        let s = one("game = cantor\nspace = shift\neps = 1\nmodulus = 2\nalice = silent\ndepth = 3");
        let r = run_scenario(&Command::Sweep(opts()), &s, &settings()).unwrap();
        assert!(r.passed);
        assert_eq!(r.lines, vec!["8/8 transcripts legal".to_string()]);
        let mut cfg = settings();
        cfg.depth = Some(2);
        let r = run_scenario(&Command::Sweep(opts()), &s, &cfg).unwrap();
        assert_eq!(r.lines, vec!["4/4 transcripts legal".to_string()]);
    }

    #[test]
    fn lift_grid_passes() {
        let r = run_scenario(
            &Command::Verify(opts()),
            &one("check = lift-grid\nhorizon = 20"),
            &settings(),
        )
        .unwrap();
        assert!(r.passed);
        assert_eq!(r.lines, vec!["9/9 pairs pass".to_string()]);
    }

    #[test]
    fn packing_counts_are_checked() {
        let ok = one("check = packing\nvalues = 1/10,1/20,1/40\ncounts = 7,13,27");
        assert!(run_scenario(&Command::Verify(opts()), &ok, &settings()).unwrap().passed);
        let wrong = one("check = packing\nvalues = 1/10\ncounts = 8");
        assert!(
            !run_scenario(&Command::Verify(opts()), &wrong, &settings())
                .unwrap()
                .passed
        );
    }

    fn survivor_lines(svg: &str, level: usize) -> usize {
        svg.lines()
            .filter(|l| l.contains("class=\"survivor\"") && l.contains(&format!("data-level=\"{level}\"")))
            .count()
    }

    #[test]
    fn render_counts() {
        let thirds = render_levels(&middle_thirds(5).unwrap(), 5).unwrap();
        assert_eq!(survivor_lines(&thirds, 5), 32);
        assert_eq!(thirds.lines().filter(|l| l.contains("class=\"removed\"")).count(), 31);
        let golden = render_levels(&golden_mean(8).unwrap(), 8).unwrap();
        assert_eq!(survivor_lines(&golden, 8), 55);
        assert_eq!(golden, render_levels(&golden_mean(8).unwrap(), 8).unwrap());
        let empty = CantorConstruction::new(Ball::root_cylinder(), 2, BudgetTable::new()).unwrap();
        let svg = render_levels(&empty, 0).unwrap();
        assert_eq!(svg.lines().filter(|l| l.starts_with("<line")).count(), 1);
        assert!(matches!(
            render_levels(&empty, 1),
            Err(Error::DepthNotBuilt { requested: 1, built: 0 })
        ));
    }

    #[test]
    fn dim_checks_expectation() {
        let s = one("construction = middle-thirds\ndepth = 8\ndepths = 3..8\nexpect = 0.63\ntol = 0.01");
        let r = run_scenario(&Command::Dim(opts()), &s, &settings()).unwrap();
        assert!(r.passed, "{:?}", r.lines);
        assert!(r.files[0].1.starts_with("r_num,r_den,count\n1,54,8\n"));
        let s = one("construction = full-shift\ndepth = 6\nexpect = 0.5");
        assert!(!run_scenario(&Command::Dim(opts()), &s, &settings()).unwrap().passed);
    }

    #[test]
    fn build_dump_round_trips() {
        let s = one("[g]\nconstruction = golden\ndepth = 5\nbudget_eps = 1");
        let r = run_scenario(&Command::BuildCantor(opts()), &s, &settings()).unwrap();
        assert!(r.passed);
        assert_eq!(r.lines[0], "survivors per level: 1,2,3,5,8,13");
        let c = CantorConstruction::load(&r.files[0].1).unwrap();
        assert_eq!(c.survivors(5).unwrap(), golden_mean(5).unwrap().survivors(5).unwrap());
    }

    #[test]
    fn center_alice_plays_concentric() {
        let s = one("game = schmidt\nalpha = 1/3\nbeta = 1/2\nalice = center\nhorizon = 5\nplays = 3");
        let r = run_scenario(&Command::Play(opts()), &s, &settings()).unwrap();
        assert!(r.passed);
        assert_eq!(r.lines[0], "3/3 transcripts legal");
    }
}
