//! Referees for the Schmidt, absolute, potential and Cantor games.
//!
//! A [`Transcript`] only ever grows through [`Transcript::push`], which runs
//! the referee first. Legal moves are appended; the first illegal or
//! default-win move is appended as the terminal record and freezes the game.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Player, Result};
use crate::scalar::{format_exact, pow2, pow_exact, ExactScalar, GradedScalar, DEFAULT_PRECISION};
use crate::space::{dyadic_exponent, Ball, SpaceTag, SplittingStructure, StandardSplitting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchmidtVariant {
    Classic,
    Strong,
    Weak,
    VeryStrong,
}

impl SchmidtVariant {
    /// (Alice may exceed her radius, Bob may exceed his radius).
    fn relaxed(self) -> (bool, bool) {
        match self {
            SchmidtVariant::Classic => (false, false),
            SchmidtVariant::Strong => (true, true),
            SchmidtVariant::Weak => (true, false),
            SchmidtVariant::VeryStrong => (false, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchmidtVariant::Classic => "classic",
            SchmidtVariant::Strong => "strong",
            SchmidtVariant::Weak => "weak",
            SchmidtVariant::VeryStrong => "very_strong",
        }
    }
}

impl std::str::FromStr for SchmidtVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(SchmidtVariant::Classic),
            "strong" => Ok(SchmidtVariant::Strong),
            "weak" => Ok(SchmidtVariant::Weak),
            "very_strong" | "very-strong" => Ok(SchmidtVariant::VeryStrong),
            other => Err(Error::Parse(format!("unknown Schmidt variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GameKind {
    Schmidt {
        variant: SchmidtVariant,
        alpha: ExactScalar,
        beta: ExactScalar,
    },
    Absolute {
        beta: ExactScalar,
    },
    Potential {
        c: ExactScalar,
        beta: ExactScalar,
    },
    Cantor {
        eps: ExactScalar,
        modulus: u64,
        structure: StandardSplitting,
    },
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::Schmidt { variant, alpha, beta } => write!(
                f,
                "kind=schmidt variant={} alpha={} beta={}",
                variant.name(),
                format_exact(alpha),
                format_exact(beta)
            ),
            GameKind::Absolute { beta } => write!(f, "kind=absolute beta={}", format_exact(beta)),
            GameKind::Potential { c, beta } => {
                write!(f, "kind=potential c={} beta={}", format_exact(c), format_exact(beta))
            }
            GameKind::Cantor {
                eps,
                modulus,
                structure,
            } => {
                write!(
                    f,
                    "kind=cantor eps={} R={} space={}",
                    format_exact(eps),
                    modulus,
                    structure.0
                )
            }
        }
    }
}

/// Membership oracle for a closed subspace: a ball is playable iff it answers `true`.
#[derive(Clone)]
pub struct Ambient {
    pub name: String,
    pub admits: Arc<dyn Fn(&Ball) -> bool + Send + Sync>,
}

impl fmt::Debug for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ambient({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub struct GameConfig {
    pub kind: GameKind,
    pub space: SpaceTag,
    pub ambient: Option<Ambient>,
    pub precision: u32,
}

fn open_unit(x: &ExactScalar, what: &str) -> Result<()> {
    if x.is_positive() && x < &BigRational::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must lie in (0,1), got {}",
            format_exact(x)
        )))
    }
}

impl GameConfig {
    pub fn schmidt(space: SpaceTag, variant: SchmidtVariant, alpha: ExactScalar, beta: ExactScalar) -> Result<Self> {
        open_unit(&alpha, "alpha")?;
        open_unit(&beta, "beta")?;
        Ok(Self::raw(space, GameKind::Schmidt { variant, alpha, beta }))
    }

    pub fn absolute(space: SpaceTag, beta: ExactScalar) -> Result<Self> {
        open_unit(&beta, "beta")?;
        Ok(Self::raw(space, GameKind::Absolute { beta }))
    }

    pub fn potential(space: SpaceTag, c: ExactScalar, beta: ExactScalar) -> Result<Self> {
        if !c.is_positive() || !beta.is_positive() {
            return Err(Error::InvalidParameter(
                "potential game needs c > 0 and beta > 0".into(),
            ));
        }
        Ok(Self::raw(space, GameKind::Potential { c, beta }))
    }

    pub fn cantor(space: SpaceTag, eps: ExactScalar, modulus: u64) -> Result<Self> {
        if !eps.is_positive() || eps > BigRational::one() {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1], got {}",
                format_exact(&eps)
            )));
        }
        if modulus < 2 {
            return Err(Error::InvalidParameter(format!("R must be at least 2, got {modulus}")));
        }
        let structure = StandardSplitting(space);
        if !structure.in_u(modulus) {
            return Err(Error::NotInU(modulus));
        }
        Ok(Self::raw(
            space,
            GameKind::Cantor {
                eps,
                modulus,
                structure,
            },
        ))
    }

    fn raw(space: SpaceTag, kind: GameKind) -> Self {
        GameConfig {
            kind,
            space,
            ambient: None,
            precision: DEFAULT_PRECISION,
        }
    }

    pub fn with_ambient(mut self, name: &str, admits: impl Fn(&Ball) -> bool + Send + Sync + 'static) -> Self {
        self.ambient = Some(Ambient {
            name: name.to_string(),
            admits: Arc::new(admits),
        });
        self
    }

    pub fn with_precision(mut self, precision: u32) -> Self {
        self.precision = precision;
        self
    }

    pub fn beta(&self) -> Option<&ExactScalar> {
        match &self.kind {
            GameKind::Schmidt { beta, .. } | GameKind::Absolute { beta } | GameKind::Potential { beta, .. } => {
                Some(beta)
            }
            GameKind::Cantor { .. } => None,
        }
    }
}

impl fmt::Display for GameConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} playground={} precision={}",
            self.kind, self.space, self.precision
        )?;
        if let Some(a) = &self.ambient {
            write!(f, " ambient={}", a.name)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    BobBall(Ball),
    AliceBall(Ball),
    AliceCollection(Vec<Ball>),
    AliceRemovalSet(Vec<Ball>),
}

impl Move {
    pub fn player(&self) -> Player {
        match self {
            Move::BobBall(_) => Player::Bob,
            _ => Player::Alice,
        }
    }

    pub fn shape(&self) -> &'static str {
        match self {
            Move::BobBall(_) => "bob_ball",
            Move::AliceBall(_) => "alice_ball",
            Move::AliceCollection(_) => "alice_collection",
            Move::AliceRemovalSet(_) => "alice_removal_set",
        }
    }

    pub fn balls(&self) -> &[Ball] {
        match self {
            Move::BobBall(b) | Move::AliceBall(b) => std::slice::from_ref(b),
            Move::AliceCollection(v) | Move::AliceRemovalSet(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Legal,
    Illegal(String),
    DefaultWinAlice(String),
}

impl Verdict {
    pub fn is_legal(&self) -> bool {
        matches!(self, Verdict::Legal)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Legal => f.write_str("legal"),
            Verdict::Illegal(r) => write!(f, "illegal({r})"),
            Verdict::DefaultWinAlice(r) => write!(f, "default_win_alice({r})"),
        }
    }
}

/// One checked rule instance, kept as text for export.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evidence {
    pub rule: String,
    pub lhs: String,
    pub op: String,
    pub rhs: String,
    pub holds: bool,
}

impl Evidence {
    fn new(rule: &str, lhs: impl fmt::Display, op: &str, rhs: impl fmt::Display, holds: bool) -> Self {
        Evidence {
            rule: rule.into(),
            lhs: lhs.to_string(),
            op: op.into(),
            rhs: rhs.to_string(),
            holds,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MoveRecord {
    pub turn: usize,
    pub mv: Move,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameEnd {
    Undecided,
    Illegal {
        player: Player,
        turn: usize,
        reason: String,
    },
    DefaultWinAlice {
        turn: usize,
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct Transcript {
    config: Arc<GameConfig>,
    records: Vec<MoveRecord>,
    metadata: Vec<(String, String)>,
}

/// Verdict plus the rule instances that produced it.
#[derive(Clone, Debug)]
pub struct Judgement {
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

impl Transcript {
    pub fn new(config: GameConfig) -> Self {
        Self::with_shared(Arc::new(config))
    }

    pub fn with_shared(config: Arc<GameConfig>) -> Self {
        Transcript {
            config,
            records: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// A transcript whose records are `moves`, all marked legal without
    /// refereeing. Used to replay a derived game for a sub-strategy.
    pub fn rebased(config: Arc<GameConfig>, moves: impl IntoIterator<Item = Move>) -> Self {
        let records = moves
            .into_iter()
            .enumerate()
            .map(|(j, mv)| MoveRecord {
                turn: j.div_ceil(2),
                mv,
                verdict: Verdict::Legal,
                evidence: Vec::new(),
            })
            .collect();
        Transcript {
            config,
            records,
            metadata: Vec::new(),
        }
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn shared_config(&self) -> Arc<GameConfig> {
        self.config.clone()
    }

    pub fn records(&self) -> &[MoveRecord] {
        &self.records
    }

    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.records.iter().map(|r| &r.mv)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    /// Player to move next.
    pub fn to_move(&self) -> Player {
        if self.records.len().is_multiple_of(2) {
            Player::Bob
        } else {
            Player::Alice
        }
    }

    /// Index i of the move about to be played (B_i for Bob, A_i for Alice).
    pub fn next_turn(&self) -> usize {
        self.records.len().div_ceil(2)
    }

    /// Bob balls B_0, B_1, ... among the legal records.
    pub fn bob_balls(&self) -> Vec<&Ball> {
        self.legal()
            .filter_map(|r| match &r.mv {
                Move::BobBall(b) => Some(b),
                _ => None,
            })
            .collect()
    }

    /// Alice's legal moves in order, A_1, A_2, ...
    pub fn alice_moves(&self) -> Vec<&Move> {
        self.legal()
            .map(|r| &r.mv)
            .filter(|m| m.player() == Player::Alice)
            .collect()
    }

    fn legal(&self) -> impl Iterator<Item = &MoveRecord> {
        self.records.iter().filter(|r| r.verdict.is_legal())
    }

    pub fn last_bob_ball(&self) -> Option<&Ball> {
        self.bob_balls().last().copied()
    }

    /// Number of completed Bob moves after B_0.
    pub fn rounds(&self) -> usize {
        self.bob_balls().len().saturating_sub(1)
    }

    pub fn is_terminal(&self) -> bool {
        self.records.last().is_some_and(|r| !r.verdict.is_legal())
    }

    pub fn end(&self) -> GameEnd {
        match self.records.last() {
            Some(MoveRecord {
                turn,
                mv,
                verdict: Verdict::Illegal(reason),
                ..
            }) => GameEnd::Illegal {
                player: mv.player(),
                turn: *turn,
                reason: reason.clone(),
            },
            Some(MoveRecord {
                turn,
                verdict: Verdict::DefaultWinAlice(reason),
                ..
            }) => GameEnd::DefaultWinAlice {
                turn: *turn,
                reason: reason.clone(),
            },
            _ => GameEnd::Undecided,
        }
    }

    /// Referee `mv` and append it. Non-legal verdicts become the terminal record.
    pub fn push(&mut self, mv: Move) -> Result<Verdict> {
        let j = judge(self, &mv)?;
        self.records.push(MoveRecord {
            turn: self.next_turn(),
            mv,
            verdict: j.verdict.clone(),
            evidence: j.evidence,
        });
        Ok(j.verdict)
    }

    /// Line-delimited records: `#` header lines, then one line per move.
    pub fn export(&self) -> String {
        let mut out = format!("#config\t{}\n", self.config);
        for (k, v) in &self.metadata {
            out.push_str(&format!("#meta\t{k}={v}\n"));
        }
        for r in &self.records {
            let balls: Vec<String> = r.mv.balls().iter().map(|b| b.to_string()).collect();
            let ev: Vec<String> = r
                .evidence
                .iter()
                .map(|e| format!("{}|{}|{}|{}|{}", e.rule, e.lhs, e.op, e.rhs, e.holds))
                .collect();
            out.push_str(&format!(
                "turn={}\tplayer={}\tmove={}\tballs={}\tverdict={}\tevidence={}\n",
                r.turn,
                r.mv.player(),
                r.mv.shape(),
                balls.join(","),
                r.verdict,
                ev.join(";")
            ));
        }
        out
    }
}

/// Referee verdict for `mv` as the next move of `t`.
pub fn check_move(t: &Transcript, mv: &Move) -> Result<Verdict> {
    judge(t, mv).map(|j| j.verdict)
}

/// [`check_move`] together with its evidence.
pub fn judge(t: &Transcript, mv: &Move) -> Result<Judgement> {
    if t.is_terminal() {
        return Err(Error::InvalidParameter("game is already decided".into()));
    }
    let mut ev = Vec::new();
    let expected = t.to_move();
    if mv.player() != expected {
        return Ok(illegal(ev, format!("{} moved out of turn", mv.player())));
    }
    let cfg = t.config();
    for b in mv.balls() {
        if b.space() != cfg.space {
            return Ok(illegal(ev, format!("{b} is not a {} ball", cfg.space)));
        }
    }
    let single = match mv {
        Move::BobBall(b) | Move::AliceBall(b) => Some(b),
        _ => None,
    };
    if let (Some(amb), Some(b)) = (&cfg.ambient, single) {
        let ok = (amb.admits)(b);
        ev.push(Evidence::new("ambient", b, "in", &amb.name, ok));
        if !ok {
            return Ok(illegal(ev, format!("{b} is not a ball of {}", amb.name)));
        }
    }
    let bobs = t.bob_balls();
    let Some(current) = bobs.last().copied() else {
        // B_0 is free
        return Ok(Judgement {
            verdict: Verdict::Legal,
            evidence: ev,
        });
    };
    let prec = cfg.precision;
    let verdict = match (&cfg.kind, mv) {
        (GameKind::Schmidt { variant, alpha, .. }, Move::AliceBall(a)) => {
            let (loose, _) = variant.relaxed();
            contained("A ⊆ B", current, a, &mut ev)
                && radius_rule(
                    "rad(A) vs alpha·rad(B)",
                    &a.radius(),
                    &(alpha * current.radius()),
                    loose,
                    &mut ev,
                )
        }
        (GameKind::Schmidt { variant, beta, .. }, Move::BobBall(b)) => {
            let a = last_alice_ball(t)?;
            let (_, loose) = variant.relaxed();
            contained("B ⊆ A", a, b, &mut ev)
                && radius_rule(
                    "rad(B) vs beta·rad(A)",
                    &b.radius(),
                    &(beta * a.radius()),
                    loose,
                    &mut ev,
                )
        }
        (GameKind::Absolute { beta }, Move::AliceBall(a)) => {
            let bound = beta * current.radius();
            let ok = a.radius() <= bound;
            ev.push(Evidence::new(
                "rad(A) <= beta·rad(B)",
                format_exact(&a.radius()),
                "<=",
                format_exact(&bound),
                ok,
            ));
            if ok && absolute_bob_stuck(current, a, &bound) {
                ev.push(Evidence::new("bob has room", current, "minus", a, false));
                return Ok(Judgement {
                    verdict: Verdict::DefaultWinAlice(format!(
                        "no ball of radius >= {} fits in {current} minus {a}",
                        format_exact(&bound)
                    )),
                    evidence: ev,
                });
            }
            ok
        }
        (GameKind::Absolute { beta }, Move::BobBall(b)) => {
            let a = last_alice_ball(t)?;
            let away = b.disjoint(a);
            ev.push(Evidence::new("B ∩ A = ∅", b, "avoids", a, away));
            away && contained("B ⊆ B_prev", current, b, &mut ev)
                && radius_rule(
                    "rad(B) >= beta·rad(B_prev)",
                    &b.radius(),
                    &(beta * current.radius()),
                    true,
                    &mut ev,
                )
        }
        (GameKind::Potential { c, beta }, Move::AliceCollection(coll)) => {
            let base = beta * current.radius();
            let total = potential_sum(coll, &base, c, prec);
            let ok = total.le(&BigRational::one())?;
            ev.push(Evidence::new("sum (rad/(beta·rad B))^c <= 1", &total, "<=", "1", ok));
            if ok {
                let mut all: Vec<&Ball> = alice_pool(t);
                all.extend(coll.iter());
                if covers(&all, current) {
                    ev.push(Evidence::new(
                        "B covered",
                        current,
                        "by",
                        format!("{} balls", all.len()),
                        true,
                    ));
                    return Ok(Judgement {
                        verdict: Verdict::DefaultWinAlice(format!("{current} is covered by deleted balls")),
                        evidence: ev,
                    });
                }
            }
            ok
        }
        (GameKind::Potential { beta, .. }, Move::BobBall(b)) => {
            let ok = contained("B ⊆ B_prev", current, b, &mut ev)
                && radius_rule(
                    "rad(B) >= beta·rad(B_prev)",
                    &b.radius(),
                    &(beta * current.radius()),
                    true,
                    &mut ev,
                );
            if ok && covers(&alice_pool(t), b) {
                ev.push(Evidence::new("B covered", b, "by", "deleted balls", true));
                return Ok(Judgement {
                    verdict: Verdict::DefaultWinAlice(format!("{b} is covered by deleted balls")),
                    evidence: ev,
                });
            }
            ok
        }
        (
            GameKind::Cantor {
                eps,
                modulus,
                structure,
            },
            Move::AliceRemovalSet(rem),
        ) => {
            let mut ok = true;
            for (i, a) in rem.iter().enumerate() {
                if !structure.is_child(current, a, *modulus) {
                    ev.push(Evidence::new("A ∈ S(B,R)", a, "child of", current, false));
                    ok = false;
                    break;
                }
                if rem[..i].contains(a) {
                    ev.push(Evidence::new("distinct", a, "repeated", "", false));
                    ok = false;
                    break;
                }
            }
            if ok {
                let f_r = BigRational::from_integer(BigInt::from(structure.count(*modulus)));
                let bound = pow_exact(&f_r, &(BigRational::one() - eps), prec);
                let count = GradedScalar::exact(BigRational::from_integer(BigInt::from(rem.len())));
                ok = count.le_enc(&bound)?;
                ev.push(Evidence::new("#A <= f(R)^(1-eps)", rem.len(), "<=", &bound, ok));
            }
            ok
        }
        (GameKind::Cantor { modulus, structure, .. }, Move::BobBall(b)) => {
            let is_child = structure.is_child(current, b, *modulus);
            ev.push(Evidence::new("B ∈ S(B_prev,R)", b, "child of", current, is_child));
            let removed = match t.alice_moves().last() {
                Some(Move::AliceRemovalSet(r)) => r.contains(b),
                _ => false,
            };
            if is_child {
                ev.push(Evidence::new("B not removed", b, "not in", "removal set", !removed));
            }
            is_child && !removed
        }
        (kind, mv) => {
            return Ok(illegal(ev, format!("{} is not a move of {kind}", mv.shape())));
        }
    };
    Ok(if verdict {
        Judgement {
            verdict: Verdict::Legal,
            evidence: ev,
        }
    } else {
        let reason = ev
            .iter()
            .rev()
            .find(|e| !e.holds)
            .map(|e| format!("{} fails: {} {} {}", e.rule, e.lhs, e.op, e.rhs))
            .unwrap_or_else(|| "rule violated".into());
        Judgement {
            verdict: Verdict::Illegal(reason),
            evidence: ev,
        }
    })
}

fn illegal(evidence: Vec<Evidence>, reason: String) -> Judgement {
    Judgement {
        verdict: Verdict::Illegal(reason),
        evidence,
    }
}

fn last_alice_ball(t: &Transcript) -> Result<&Ball> {
    match t.alice_moves().last() {
        Some(Move::AliceBall(a)) => Ok(a),
        _ => Err(Error::InvalidParameter("no Alice ball precedes this Bob move".into())),
    }
}

fn contained(rule: &str, outer: &Ball, inner: &Ball, ev: &mut Vec<Evidence>) -> bool {
    let ok = outer.contains_ball(inner);
    ev.push(Evidence::new(rule, inner, "⊆", outer, ok));
    ok
}

/// `value = target`, or `value >= target` when `loose`.
fn radius_rule(rule: &str, value: &ExactScalar, target: &ExactScalar, loose: bool, ev: &mut Vec<Evidence>) -> bool {
    let (ok, op) = if loose {
        (value >= target, ">=")
    } else {
        (value == target, "=")
    };
    ev.push(Evidence::new(rule, format_exact(value), op, format_exact(target), ok));
    ok
}

/// Σ (rad(A)/base)^c as an enclosure; the normalisation keeps boundary cases exact.
pub fn potential_sum(coll: &[Ball], base: &ExactScalar, c: &ExactScalar, prec: u32) -> GradedScalar {
    coll.iter()
        .map(|a| pow_exact(&(a.radius() / base), c, prec))
        .fold(GradedScalar::zero(), |acc, x| acc.add(&x).rounded(prec))
}

fn alice_pool(t: &Transcript) -> Vec<&Ball> {
    t.alice_moves()
        .into_iter()
        .flat_map(|m| match m {
            Move::AliceCollection(v) => v.as_slice(),
            _ => &[],
        })
        .collect()
}

/// Whether `target` lies inside the union of `pool`.
pub fn covers(pool: &[&Ball], target: &Ball) -> bool {
    match target {
        Ball::Cylinder { word } => {
            let words: Vec<&[u8]> = pool.iter().filter_map(|b| b.word()).collect();
            word_covered(word, &words)
        }
        Ball::Interval { .. } => {
            let (lo, hi) = target.endpoints().expect("interval");
            let mut spans: Vec<(ExactScalar, ExactScalar)> = pool
                .iter()
                .filter_map(|b| b.endpoints())
                .filter(|(a, b)| b >= &lo && a <= &hi)
                .collect();
            spans.sort();
            let mut reach = lo.clone();
            let mut started = false;
            for (a, b) in spans {
                if a > reach {
                    break;
                }
                if !started || b > reach {
                    reach = if started { b.max(reach) } else { b };
                    started = true;
                }
                if reach >= hi {
                    return true;
                }
            }
            false
        }
    }
}

fn word_covered(word: &[u8], pool: &[&[u8]]) -> bool {
    if pool.iter().any(|p| word.starts_with(p)) {
        return true;
    }
    let deeper: Vec<&[u8]> = pool
        .iter()
        .copied()
        .filter(|p| p.len() > word.len() && p.starts_with(word))
        .collect();
    if deeper.is_empty() {
        return false;
    }
    let mut child = word.to_vec();
    child.push(0);
    if !word_covered(&child, &deeper) {
        return false;
    }
    *child.last_mut().unwrap() = 1;
    word_covered(&child, &deeper)
}

/// Largest k with 2^-k >= bound, for 0 < bound <= 1.
pub fn max_depth_at_least(bound: &ExactScalar) -> Option<usize> {
    if bound > &BigRational::one() || !bound.is_positive() {
        return None;
    }
    let mut k = 0usize;
    while pow2(-(k as i64 + 1)) >= *bound {
        k += 1;
    }
    Some(k)
}

fn absolute_bob_stuck(current: &Ball, a: &Ball, bound: &ExactScalar) -> bool {
    match (current, a) {
        (Ball::Interval { .. }, Ball::Interval { .. }) => {
            let (lo, hi) = current.endpoints().unwrap();
            let (alo, ahi) = a.endpoints().unwrap();
            let need = bound * BigRational::from_integer(BigInt::from(2));
            // Bob's closed ball must avoid the closed ball A
            let left = if alo > lo {
                alo.min(hi.clone()) - &lo
            } else {
                BigRational::zero()
            };
            let right = if ahi < hi {
                &hi - ahi.max(lo.clone())
            } else {
                BigRational::zero()
            };
            left <= need && right <= need
        }
        (Ball::Cylinder { word: w }, Ball::Cylinder { word: aw }) => {
            if w.starts_with(aw) {
                return true;
            }
            if !aw.starts_with(w) {
                return false;
            }
            match max_depth_at_least(bound) {
                Some(kmax) => kmax <= w.len(),
                None => true,
            }
        }
        _ => false,
    }
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;

    /// Name/value pairs describing the strategy's parameters.
    fn metadata(&self) -> Vec<(String, String)> {
        Vec::new()
    }

    /// The next move for the transcript prefix `t`; a Bob strategy sees an
    /// empty transcript when it has to open with B_0.
    fn respond(&self, t: &Transcript) -> Result<Move>;
}

impl<S: Strategy + ?Sized> Strategy for Arc<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn metadata(&self) -> Vec<(String, String)> {
        (**self).metadata()
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        (**self).respond(t)
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn metadata(&self) -> Vec<(String, String)> {
        (**self).metadata()
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        (**self).respond(t)
    }
}

/// A strategy from a closure.
pub struct FnStrategy<F> {
    name: String,
    f: F,
}

impl<F> FnStrategy<F>
where
    F: Fn(&Transcript) -> Result<Move> + Send + Sync,
{
    pub fn new(name: &str, f: F) -> Self {
        FnStrategy {
            name: name.to_string(),
            f,
        }
    }
}

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&Transcript) -> Result<Move> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        (self.f)(t)
    }
}

fn fault(player: Player, turn: usize, e: Error) -> Error {
    match e {
        Error::StrategyFault { .. } => e,
        other => Error::StrategyFault {
            player,
            turn,
            reason: other.to_string(),
        },
    }
}

fn record_strategies(t: &mut Transcript, alice: &dyn Strategy, bob: Option<&dyn Strategy>) {
    t.set_meta("alice", alice.name());
    for (k, v) in alice.metadata() {
        t.set_meta(&format!("alice.{k}"), v);
    }
    if let Some(bob) = bob {
        t.set_meta("bob", bob.name());
        for (k, v) in bob.metadata() {
            t.set_meta(&format!("bob.{k}"), v);
        }
    }
}

/// Play B_0 and then `horizon` rounds, stopping early on a non-legal verdict.
pub fn play(cfg: GameConfig, alice: &dyn Strategy, bob: &dyn Strategy, horizon: usize) -> Result<Transcript> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut t = Transcript::new(cfg);
    record_strategies(&mut t, alice, Some(bob));
    let b0 = bob.respond(&t).map_err(|e| fault(Player::Bob, 0, e))?;
    if !t.push(b0)?.is_legal() {
        return Ok(t);
    }
    for round in 1..=horizon {
        for (player, s) in [(Player::Alice, alice), (Player::Bob, bob)] {
            let mv = s.respond(&t).map_err(|e| fault(player, round, e))?;
            if !t.push(mv)?.is_legal() {
                return Ok(t);
            }
        }
    }
    Ok(t)
}

/// The last Bob ball: the finite-depth stand-in for the outcome point.
pub fn outcome(t: &Transcript) -> Result<Ball> {
    t.last_bob_ball().cloned().ok_or(Error::EmptyTranscript)
}

/// Candidate Bob balls for the position a transcript ends in.
pub type BobMoves = Arc<dyn Fn(&Transcript) -> Result<Vec<Ball>> + Send + Sync>;

/// How Bob's candidate moves are generated for [`exhaustive_bob`].
#[derive(Clone)]
pub enum BobEnumerator {
    /// Shift playground, only the smallest admissible radius.
    ShiftTight,
    /// Shift playground, every admissible radius.
    ShiftAllRadii,
    /// Caller-supplied finite candidate set; illegal candidates are pruned.
    Custom(BobMoves),
}

impl BobEnumerator {
    pub fn custom(f: impl Fn(&Transcript) -> Result<Vec<Ball>> + Send + Sync + 'static) -> Self {
        BobEnumerator::Custom(Arc::new(f))
    }

    fn candidates(&self, t: &Transcript) -> Result<Vec<Ball>> {
        match self {
            BobEnumerator::Custom(f) => f(t),
            BobEnumerator::ShiftTight => shift_candidates(t, true),
            BobEnumerator::ShiftAllRadii => shift_candidates(t, false),
        }
    }
}

fn extensions(word: &[u8], depths: std::ops::RangeInclusive<usize>) -> Vec<Ball> {
    let mut out = Vec::new();
    for d in depths {
        if d < word.len() {
            continue;
        }
        let extra = d - word.len();
        for suffix in 0..(1u64 << extra) {
            let mut w = word.to_vec();
            for bit in (0..extra).rev() {
                w.push(((suffix >> bit) & 1) as u8);
            }
            out.push(Ball::cylinder(w));
        }
    }
    out
}

/// Depth range of cylinders whose radius meets `target` (equal, or at least when `loose`).
fn depth_range(
    target: &ExactScalar,
    loose: bool,
    floor: usize,
    tight: bool,
) -> Option<std::ops::RangeInclusive<usize>> {
    if loose {
        let kmax = max_depth_at_least(target)?;
        if kmax < floor {
            return None;
        }
        Some(if tight { kmax..=kmax } else { floor..=kmax })
    } else {
        let k = dyadic_exponent(target).filter(|k| *k <= 0)?;
        let d = (-k) as usize;
        (d >= floor).then_some(d..=d)
    }
}

fn shift_candidates(t: &Transcript, tight: bool) -> Result<Vec<Ball>> {
    let cfg = t.config();
    if cfg.space != SpaceTag::Shift {
        return Err(Error::InfiniteBranching);
    }
    let current = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
    let w = current.word().expect("cylinder");
    Ok(match &cfg.kind {
        GameKind::Schmidt { variant, beta, .. } => {
            let a = last_alice_ball(t)?;
            let aw = a.word().expect("cylinder");
            let (_, loose) = variant.relaxed();
            match depth_range(&(beta * a.radius()), loose, aw.len(), tight) {
                Some(r) => extensions(aw, r),
                None => Vec::new(),
            }
        }
        GameKind::Absolute { beta } | GameKind::Potential { beta, .. } => {
            match depth_range(&(beta * current.radius()), true, w.len(), tight) {
                Some(r) => extensions(w, r),
                None => Vec::new(),
            }
        }
        GameKind::Cantor { modulus, structure, .. } => structure.split(current, *modulus)?,
    })
}

/// Every maximal transcript of depth `depth` against `alice`, Bob ranging over `enumerator`.
pub fn exhaustive_bob(
    cfg: GameConfig,
    alice: &dyn Strategy,
    b0: Ball,
    depth: usize,
    enumerator: &BobEnumerator,
) -> Result<Vec<Transcript>> {
    if cfg.space == SpaceTag::RealLine && !matches!(enumerator, BobEnumerator::Custom(_)) {
        return Err(Error::InfiniteBranching);
    }
    let mut t = Transcript::new(cfg);
    record_strategies(&mut t, alice, None);
    t.set_meta("bob", "exhaustive");
    if !t.push(Move::BobBall(b0))?.is_legal() {
        return Ok(vec![t]);
    }
    explore(t, alice, depth, enumerator)
}

fn explore(mut t: Transcript, alice: &dyn Strategy, depth: usize, en: &BobEnumerator) -> Result<Vec<Transcript>> {
    if t.rounds() >= depth {
        return Ok(vec![t]);
    }
    let turn = t.next_turn();
    let mv = alice.respond(&t).map_err(|e| fault(Player::Alice, turn, e))?;
    if !t.push(mv)?.is_legal() {
        return Ok(vec![t]);
    }
    let candidates = en.candidates(&t)?;
    let branches: Vec<Vec<Transcript>> = candidates
        .into_par_iter()
        .map(|b| {
            let mut next = t.clone();
            match next.push(Move::BobBall(b))? {
                Verdict::Illegal(_) => Ok(Vec::new()),
                Verdict::DefaultWinAlice(_) => Ok(vec![next]),
                Verdict::Legal => explore(next, alice, depth, en),
            }
        })
        .collect::<Result<_>>()?;
    let out: Vec<Transcript> = branches.into_iter().flatten().collect();
    if out.is_empty() {
        Ok(vec![t])
    } else {
        Ok(out)
    }
}

/// Bob choosing at random among legal moves, seeded by `seed` and the
/// transcript so that identical prefixes get identical answers.
///
/// On the shift he ranges over the admissible cylinders (only the smallest
/// radius when `tight`); on the line over a `grid × grid` lattice of radii
/// and centres. Legal moves are preferred to moves that lose by default.
#[derive(Clone, Debug)]
pub struct RandomBob {
    seed: u64,
    b0: Ball,
    tight: bool,
    grid: u32,
}

impl RandomBob {
    pub fn new(seed: u64, b0: Ball) -> Self {
        RandomBob {
            seed,
            b0,
            tight: true,
            grid: 16,
        }
    }

    pub fn all_radii(mut self) -> Self {
        self.tight = false;
        self
    }

    pub fn with_grid(mut self, grid: u32) -> Self {
        self.grid = grid.max(1);
        self
    }

    fn rng(&self, t: &Transcript) -> ChaCha8Rng {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        t.len().hash(&mut h);
        for r in &t.records {
            r.mv.hash(&mut h);
        }
        ChaCha8Rng::seed_from_u64(h.finish())
    }

    fn line_candidates(&self, t: &Transcript, rng: &mut ChaCha8Rng) -> Result<Vec<Ball>> {
        let cfg = t.config();
        let current = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        let (outer, min_r, max_r) = match &cfg.kind {
            GameKind::Schmidt { variant, beta, .. } => {
                let a = last_alice_ball(t)?;
                let r = beta * a.radius();
                let top = if variant.relaxed().1 { a.radius() } else { r.clone() };
                (a.clone(), r, top)
            }
            GameKind::Absolute { beta } | GameKind::Potential { beta, .. } => {
                (current.clone(), beta * current.radius(), current.radius())
            }
            GameKind::Cantor { modulus, structure, .. } => {
                let mut kids = structure.split(current, *modulus)?;
                kids.shuffle(rng);
                return Ok(kids);
            }
        };
        let (lo, hi) = outer.endpoints().expect("interval");
        let g = self.grid as i64;
        let mut out = Vec::new();
        for k in 0..=g {
            let r = &min_r + (&max_r - &min_r) * BigRational::new(k.into(), g.into());
            let span = &hi - &lo - &r * BigRational::from_integer(2.into());
            if span.is_negative() {
                continue;
            }
            for j in 0..=g {
                let c = &lo + &r + &span * BigRational::new(j.into(), g.into());
                out.push(Ball::Interval {
                    center: c,
                    radius: r.clone(),
                });
            }
            if min_r == max_r {
                break;
            }
        }
        out.shuffle(rng);
        Ok(out)
    }
}

impl Strategy for RandomBob {
    fn name(&self) -> &str {
        "random-bob"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![("seed".into(), self.seed.to_string())]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        if t.bob_balls().is_empty() {
            return Ok(Move::BobBall(self.b0.clone()));
        }
        let mut rng = self.rng(t);
        let candidates = if t.config().space == SpaceTag::Shift {
            let mut c = shift_candidates(t, self.tight)?;
            c.shuffle(&mut rng);
            c
        } else {
            self.line_candidates(t, &mut rng)?
        };
        let mut fallback = None;
        for b in candidates {
            let mv = Move::BobBall(b);
            match check_move(t, &mv)? {
                Verdict::Legal => return Ok(mv),
                Verdict::DefaultWinAlice(_) if fallback.is_none() => fallback = Some(mv),
                _ => {}
            }
        }
        fallback.ok_or_else(|| Error::InvalidParameter("Bob has no legal move".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn iv(c: ExactScalar, r: ExactScalar) -> Ball {
        Ball::interval(c, r).unwrap()
    }

    fn cyl(bits: &str) -> Ball {
        Ball::cylinder_from_bits(bits).unwrap()
    }

    fn schmidt_half() -> Transcript {
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, rat(1, 2), rat(1, 2)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::from_endpoints(int(0), int(1)).unwrap()))
            .unwrap();
        t
    }

    #[test]
    fn schmidt_classic_radius_is_forced() {
        let t = schmidt_half();
        assert_eq!(
            check_move(&t, &Move::AliceBall(iv(rat(1, 4), rat(1, 4)))).unwrap(),
            Verdict::Legal
        );
        assert!(matches!(
            check_move(&t, &Move::AliceBall(iv(rat(1, 3), rat(1, 3)))).unwrap(),
            Verdict::Illegal(_)
        ));
        assert!(matches!(
            check_move(&t, &Move::AliceBall(iv(rat(1, 4), rat(1, 3)))).unwrap(),
            Verdict::Illegal(_)
        ));
    }

    #[test]
    fn schmidt_variants_relax_the_right_side() {
        let b0 = Ball::from_endpoints(int(0), int(1)).unwrap();
        let big_a = iv(rat(1, 2), rat(3, 8));
        for (variant, alice_ok) in [
            (SchmidtVariant::Classic, false),
            (SchmidtVariant::Strong, true),
            (SchmidtVariant::Weak, true),
            (SchmidtVariant::VeryStrong, false),
        ] {
            let cfg = GameConfig::schmidt(SpaceTag::RealLine, variant, rat(1, 4), rat(1, 2)).unwrap();
            let mut t = Transcript::new(cfg);
            t.push(Move::BobBall(b0.clone())).unwrap();
            assert_eq!(
                check_move(&t, &Move::AliceBall(big_a.clone())).unwrap().is_legal(),
                alice_ok,
                "{variant:?}"
            );
            t.push(Move::AliceBall(iv(rat(1, 2), rat(1, 8)))).unwrap();
            let big_b = iv(rat(1, 2), rat(1, 8));
            let bob_ok = matches!(variant, SchmidtVariant::Strong | SchmidtVariant::VeryStrong);
            assert_eq!(
                check_move(&t, &Move::BobBall(big_b)).unwrap().is_legal(),
                bob_ok,
                "{variant:?}"
            );
        }
    }

    #[test]
    fn potential_boundary_is_legal() {
        let cfg = GameConfig::potential(SpaceTag::RealLine, int(1), rat(1, 2)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(iv(int(0), int(1)))).unwrap();
        let coll = vec![iv(int(5), rat(1, 4)), iv(int(6), rat(1, 8)), iv(int(7), rat(1, 8))];
        assert_eq!(
            check_move(&t, &Move::AliceCollection(coll.clone())).unwrap(),
            Verdict::Legal
        );
        let mut over = coll;
        over.push(iv(int(8), rat(1, 1024)));
        assert!(matches!(
            check_move(&t, &Move::AliceCollection(over)).unwrap(),
            Verdict::Illegal(_)
        ));
    }

    #[test]
    fn potential_irrational_exponent_is_decided_by_enclosure() {
        let cfg = GameConfig::potential(SpaceTag::Shift, rat(1, 2), rat(1, 2)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::root_cylinder())).unwrap();
        // (1/4 / 1/2)^(1/2) = 0.707.. and two of them exceed 1
        assert!(check_move(&t, &Move::AliceCollection(vec![cyl("00")]))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::AliceCollection(vec![cyl("00"), cyl("11")]))
            .unwrap()
            .is_legal());
        // the exact boundary (1/2 / 1/2)^(1/2) = 1
        assert!(check_move(&t, &Move::AliceCollection(vec![cyl("1")]))
            .unwrap()
            .is_legal());
    }

    #[test]
    fn cantor_count_bound_at_eps_one() {
        let cfg = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::root_cylinder())).unwrap();
        assert!(check_move(&t, &Move::AliceRemovalSet(vec![cyl("1")]))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::AliceRemovalSet(vec![cyl("0"), cyl("1")]))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::AliceRemovalSet(vec![cyl("10")]))
            .unwrap()
            .is_legal());
        t.push(Move::AliceRemovalSet(vec![cyl("1")])).unwrap();
        assert!(!check_move(&t, &Move::BobBall(cyl("1"))).unwrap().is_legal());
        assert!(check_move(&t, &Move::BobBall(cyl("0"))).unwrap().is_legal());
    }

    #[test]
    fn cantor_count_bound_with_irrational_power() {
        // 4^(1/2) = 2 exactly, 8^(1/3) = 2 exactly, 4^(1/4) = 1.41..
        let cfg = GameConfig::cantor(SpaceTag::RealLine, rat(3, 4), 4).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::from_endpoints(int(0), int(1)).unwrap()))
            .unwrap();
        let kids = StandardSplitting::real_line()
            .split(&Ball::from_endpoints(int(0), int(1)).unwrap(), 4)
            .unwrap();
        assert!(check_move(&t, &Move::AliceRemovalSet(kids[..1].to_vec()))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::AliceRemovalSet(kids[..2].to_vec()))
            .unwrap()
            .is_legal());
    }

    #[test]
    fn out_of_turn_and_wrong_shape_are_illegal() {
        let t = schmidt_half();
        assert!(!check_move(&t, &Move::BobBall(iv(rat(1, 2), rat(1, 8))))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::AliceCollection(vec![])).unwrap().is_legal());
    }

    #[test]
    fn absolute_game_rules_and_stuck_bob() {
        let cfg = GameConfig::absolute(SpaceTag::RealLine, rat(1, 3)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::from_endpoints(int(0), int(1)).unwrap()))
            .unwrap();
        // radius 1/6 centered: gaps of length 1/3 = 2·beta·rad, Bob cannot fit
        let v = check_move(&t, &Move::AliceBall(iv(rat(1, 2), rat(1, 6)))).unwrap();
        assert!(matches!(v, Verdict::DefaultWinAlice(_)));
        assert!(!check_move(&t, &Move::AliceBall(iv(rat(1, 2), rat(1, 5))))
            .unwrap()
            .is_legal());
        assert!(t.push(Move::AliceBall(iv(rat(1, 4), rat(1, 8)))).unwrap().is_legal());
        // Bob must avoid A = [1/8, 3/8]
        assert!(!check_move(&t, &Move::BobBall(iv(rat(1, 2), rat(1, 6))))
            .unwrap()
            .is_legal());
        assert!(check_move(&t, &Move::BobBall(iv(rat(5, 6), rat(1, 6))))
            .unwrap()
            .is_legal());
        assert!(!check_move(&t, &Move::BobBall(iv(rat(7, 8), rat(1, 8))))
            .unwrap()
            .is_legal());
    }

    #[test]
    fn absolute_stuck_on_shift() {
        let cfg = GameConfig::absolute(SpaceTag::Shift, rat(1, 2)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(cyl("01"))).unwrap();
        assert!(matches!(
            check_move(&t, &Move::AliceBall(cyl("010"))).unwrap(),
            Verdict::Legal
        ));
        assert!(matches!(
            check_move(&t, &Move::AliceBall(cyl("0"))).unwrap(),
            Verdict::Illegal(_)
        ));
        let cfg = GameConfig::absolute(SpaceTag::Shift, rat(3, 4)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(cyl("01"))).unwrap();
        // radius bound 3/16: Bob needs depth <= 2, which only B itself has
        assert!(matches!(
            check_move(&t, &Move::AliceBall(cyl("010"))).unwrap(),
            Verdict::DefaultWinAlice(_)
        ));
    }

    fn first_child() -> FnStrategy<impl Fn(&Transcript) -> Result<Move> + Send + Sync> {
        FnStrategy::new("first-child", |t: &Transcript| {
            let b = t.last_bob_ball().cloned().unwrap_or_else(Ball::root_cylinder);
            if t.is_empty() {
                return Ok(Move::BobBall(b));
            }
            match t.to_move() {
                Player::Alice => Ok(Move::AliceRemovalSet(vec![])),
                Player::Bob => {
                    let mut w = b.word().unwrap().to_vec();
                    w.push(0);
                    Ok(Move::BobBall(Ball::cylinder(w)))
                }
            }
        })
    }

    #[test]
    fn play_cantor_five_rounds() {
        let cfg = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let s = first_child();
        let t = play(cfg, &s, &s, 5).unwrap();
        assert_eq!(t.rounds(), 5);
        assert_eq!(t.end(), GameEnd::Undecided);
        assert_eq!(outcome(&t).unwrap(), cyl("00000"));
        assert_eq!(t.len(), 11);
    }

    #[test]
    fn play_flags_uncontained_bob() {
        let cfg = GameConfig::potential(SpaceTag::RealLine, int(1), rat(1, 2)).unwrap();
        let alice = FnStrategy::new("idle", |_: &Transcript| Ok(Move::AliceCollection(vec![])));
        let bob = FnStrategy::new("stray", |t: &Transcript| {
            Ok(Move::BobBall(if t.is_empty() {
                iv(int(0), int(1))
            } else {
                iv(int(5), rat(1, 2))
            }))
        });
        let t = play(cfg, &alice, &bob, 3).unwrap();
        assert!(matches!(
            t.end(),
            GameEnd::Illegal {
                player: Player::Bob,
                turn: 1,
                ..
            }
        ));
        assert_eq!(outcome(&t).unwrap(), iv(int(0), int(1)));
    }

    #[test]
    fn play_reports_strategy_fault() {
        let cfg = GameConfig::potential(SpaceTag::RealLine, int(1), rat(1, 2)).unwrap();
        let alice = FnStrategy::new("broken", |_: &Transcript| Err(Error::NoEta));
        let bob = FnStrategy::new("b", |_: &Transcript| Ok(Move::BobBall(iv(int(0), int(1)))));
        let e = play(cfg, &alice, &bob, 3).unwrap_err();
        assert!(matches!(
            e,
            Error::StrategyFault {
                player: Player::Alice,
                turn: 1,
                ..
            }
        ));
    }

    #[test]
    fn potential_default_win_by_covering_schedule() {
        // Alice deletes the left quarter, then the right quarter; Bob keeps the middle half.
        let cfg = GameConfig::potential(SpaceTag::RealLine, int(1), rat(1, 2)).unwrap();
        let alice = FnStrategy::new("cover", |t: &Transcript| {
            let b = t.last_bob_ball().unwrap();
            let (lo, hi) = b.endpoints().unwrap();
            let q = (&hi - &lo) / int(4);
            let piece = if t.rounds().is_multiple_of(2) {
                Ball::from_endpoints(lo.clone(), &lo + &q * int(2)).unwrap()
            } else {
                Ball::from_endpoints(&hi - &q * int(2), hi.clone()).unwrap()
            };
            Ok(Move::AliceCollection(vec![piece]))
        });
        let bob = FnStrategy::new("stay", |t: &Transcript| {
            Ok(Move::BobBall(
                t.last_bob_ball().cloned().unwrap_or_else(|| iv(int(0), int(1))),
            ))
        });
        let t = play(cfg, &alice, &bob, 5).unwrap();
        assert!(
            matches!(t.end(), GameEnd::DefaultWinAlice { turn: 2, .. }),
            "{:?}",
            t.end()
        );
    }

    #[test]
    fn outcome_of_single_move_and_empty() {
        let t = schmidt_half();
        assert_eq!(outcome(&t).unwrap(), Ball::from_endpoints(int(0), int(1)).unwrap());
        let cfg = GameConfig::absolute(SpaceTag::Shift, rat(1, 2)).unwrap();
        assert_eq!(outcome(&Transcript::new(cfg)).unwrap_err(), Error::EmptyTranscript);
    }

    #[test]
    fn schmidt_center_play_shrinks_by_quarter() {
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, rat(1, 2), rat(1, 2)).unwrap();
        let center = FnStrategy::new("center", |t: &Transcript| {
            let Some(b) = t.last_bob_ball() else {
                return Ok(Move::BobBall(iv(int(0), int(1))));
            };
            let half = |x: &Ball| iv(x.center().unwrap().clone(), x.radius() / int(2));
            Ok(match t.to_move() {
                Player::Alice => Move::AliceBall(half(b)),
                Player::Bob => match t.alice_moves().last() {
                    Some(Move::AliceBall(a)) => Move::BobBall(half(a)),
                    _ => unreachable!(),
                },
            })
        });
        for n in 1..6 {
            let t = play(cfg.clone(), &center, &center, n).unwrap();
            assert_eq!(outcome(&t).unwrap().radius(), crate::scalar::powi(&rat(1, 4), n as i64));
        }
    }

    #[test]
    fn random_bob_is_seeded_and_legal() {
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, rat(1, 2), rat(1, 2)).unwrap();
        let alice = FnStrategy::new("center", |t: &Transcript| {
            let b = t.last_bob_ball().unwrap();
            Ok(Move::AliceBall(iv(b.center().unwrap().clone(), b.radius() / int(2))))
        });
        let run = |seed| play(cfg.clone(), &alice, &RandomBob::new(seed, iv(int(0), int(1))), 6).unwrap();
        let a = run(7);
        assert_eq!(a.end(), GameEnd::Undecided);
        assert_eq!(a.export(), run(7).export());
        let differs = (0..8).any(|s| run(s).export() != a.export());
        assert!(differs);

        let shift = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let t = play(shift, &first_child(), &RandomBob::new(3, Ball::root_cylinder()), 5).unwrap();
        assert_eq!(t.end(), GameEnd::Undecided);
        assert_eq!(outcome(&t).unwrap().depth(), Some(5));
    }

    #[test]
    fn shift_game_depth_eight() {
        let cfg = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let s = first_child();
        let t = play(cfg, &s, &s, 8).unwrap();
        assert_eq!(outcome(&t).unwrap().radius(), pow2(-8));
    }

    #[test]
    fn exhaustive_counts() {
        let cfg = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let idle = FnStrategy::new("idle", |_: &Transcript| Ok(Move::AliceRemovalSet(vec![])));
        let all = exhaustive_bob(cfg.clone(), &idle, Ball::root_cylinder(), 3, &BobEnumerator::ShiftTight).unwrap();
        assert_eq!(all.len(), 8);
        let mut outs: Vec<Ball> = all.iter().map(|t| outcome(t).unwrap()).collect();
        outs.sort();
        outs.dedup();
        assert_eq!(outs.len(), 8);
        let cut = FnStrategy::new("cut-ones", |t: &Transcript| {
            let mut w = t.last_bob_ball().unwrap().word().unwrap().to_vec();
            w.push(1);
            Ok(Move::AliceRemovalSet(vec![Ball::cylinder(w)]))
        });
        let forced = exhaustive_bob(cfg, &cut, Ball::root_cylinder(), 3, &BobEnumerator::ShiftTight).unwrap();
        assert_eq!(forced.len(), 1);
        assert_eq!(outcome(&forced[0]).unwrap(), cyl("000"));
    }

    #[test]
    fn exhaustive_needs_enumerator_on_line() {
        let cfg = GameConfig::potential(SpaceTag::RealLine, int(1), rat(1, 2)).unwrap();
        let idle = FnStrategy::new("idle", |_: &Transcript| Ok(Move::AliceCollection(vec![])));
        let e = exhaustive_bob(cfg.clone(), &idle, iv(int(0), int(1)), 2, &BobEnumerator::ShiftTight).unwrap_err();
        assert_eq!(e, Error::InfiniteBranching);
        let halves = BobEnumerator::custom(|t: &Transcript| {
            let b = t.last_bob_ball().unwrap();
            StandardSplitting::real_line().split(b, 2)
        });
        let all = exhaustive_bob(cfg, &idle, iv(int(0), int(1)), 2, &halves).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn all_radii_enumeration_includes_staying_put() {
        let cfg = GameConfig::potential(SpaceTag::Shift, int(1), rat(1, 4)).unwrap();
        let idle = FnStrategy::new("idle", |_: &Transcript| Ok(Move::AliceCollection(vec![])));
        let tight = exhaustive_bob(cfg.clone(), &idle, Ball::root_cylinder(), 1, &BobEnumerator::ShiftTight).unwrap();
        assert_eq!(tight.len(), 4);
        let all = exhaustive_bob(cfg, &idle, Ball::root_cylinder(), 1, &BobEnumerator::ShiftAllRadii).unwrap();
        assert_eq!(all.len(), 1 + 2 + 4);
    }

    #[test]
    fn covering_on_both_playgrounds() {
        let a = cyl("0");
        let b = cyl("10");
        let c = cyl("11");
        assert!(covers(&[&a, &b, &c], &Ball::root_cylinder()));
        assert!(!covers(&[&a, &b], &Ball::root_cylinder()));
        assert!(covers(&[&b, &c], &cyl("1")));
        let l = Ball::from_endpoints(int(0), rat(1, 2)).unwrap();
        let r = Ball::from_endpoints(rat(1, 2), int(1)).unwrap();
        let r2 = Ball::from_endpoints(rat(2, 3), int(1)).unwrap();
        let unit = Ball::from_endpoints(int(0), int(1)).unwrap();
        assert!(covers(&[&r, &l], &unit));
        assert!(!covers(&[&l, &r2], &unit));
    }

    #[test]
    fn export_is_stable_and_line_per_move() {
        let cfg = GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap();
        let s = first_child();
        let t = play(cfg, &s, &s, 2).unwrap();
        let text = t.export();
        assert_eq!(text, t.clone().export());
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("turn=0\tplayer=bob\tmove=bob_ball\tballs=S:"));
        assert!(
            text.starts_with("#config\tkind=cantor eps=1/1 R=2 space=shift"),
            "{text}"
        );
    }

    #[test]
    fn ambient_restriction_blocks_bob() {
        let cfg = GameConfig::potential(SpaceTag::Shift, int(1), rat(1, 2))
            .unwrap()
            .with_ambient("no-leading-1", |b: &Ball| b.word().unwrap().first() != Some(&1));
        let mut t = Transcript::new(cfg);
        assert!(t.push(Move::BobBall(Ball::root_cylinder())).unwrap().is_legal());
        t.push(Move::AliceCollection(vec![])).unwrap();
        assert!(!check_move(&t, &Move::BobBall(cyl("1"))).unwrap().is_legal());
        assert!(check_move(&t, &Move::BobBall(cyl("0"))).unwrap().is_legal());
    }

    #[test]
    fn config_invariants() {
        assert!(GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, int(1), rat(1, 2)).is_err());
        assert!(GameConfig::absolute(SpaceTag::RealLine, int(0)).is_err());
        assert!(GameConfig::potential(SpaceTag::RealLine, int(0), rat(1, 2)).is_err());
        assert!(GameConfig::cantor(SpaceTag::RealLine, int(0), 3).is_err());
        assert!(GameConfig::cantor(SpaceTag::RealLine, int(1), 1).is_err());
        assert_eq!(
            GameConfig::cantor(SpaceTag::Shift, int(1), 3).unwrap_err(),
            Error::NotInU(3)
        );
    }

    // Independent re-derivation of legal Bob moves on the shift from bit strings.
    fn oracle_bob_legal(kind: &str, cur: &str, alice: &[String], cand: &str, beta_pow: usize) -> bool {
        match kind {
            "cantor" => cand.len() == cur.len() + 1 && cand.starts_with(cur) && !alice.iter().any(|a| a == cand),
            "potential" => cand.starts_with(cur) && cand.len() <= cur.len() + beta_pow,
            "schmidt" => {
                let a = &alice[0];
                cand.starts_with(a.as_str()) && cand.len() == a.len() + beta_pow
            }
            _ => unreachable!(),
        }
    }

    fn bits_of(v: &[u8]) -> String {
        v.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn referee_matches_oracle_on_shift(
            which in 0usize..3,
            cur in proptest::collection::vec(0u8..2, 0..6),
            ext in proptest::collection::vec(0u8..2, 0..4),
            cand in proptest::collection::vec(0u8..2, 0..9),
            beta_pow in 1usize..3,
        ) {
            let cur_s = bits_of(&cur);
            let cand_s = bits_of(&cand);
            let beta = pow2(-(beta_pow as i64));
            let (kind, cfg, alice_move, alice_bits) = match which {
                0 => {
                    let mut w = cur.clone();
                    w.push(ext.first().copied().unwrap_or(1));
                    let bits = bits_of(&w);
                    (
                        "cantor",
                        GameConfig::cantor(SpaceTag::Shift, int(1), 2).unwrap(),
                        Move::AliceRemovalSet(vec![Ball::cylinder(w)]),
                        vec![bits],
                    )
                }
                1 => (
                    "potential",
                    GameConfig::potential(SpaceTag::Shift, int(1), beta.clone()).unwrap(),
                    Move::AliceCollection(vec![]),
                    vec![],
                ),
                _ => {
                    let mut w = cur.clone();
                    w.push(ext.first().copied().unwrap_or(0));
                    let bits = bits_of(&w);
                    (
                        "schmidt",
                        GameConfig::schmidt(SpaceTag::Shift, SchmidtVariant::Classic, rat(1, 2), beta.clone()).unwrap(),
                        Move::AliceBall(Ball::cylinder(w)),
                        vec![bits],
                    )
                }
            };
            let mut t = Transcript::new(cfg);
            t.push(Move::BobBall(Ball::cylinder(cur.clone()))).unwrap();
            prop_assert!(t.push(alice_move).unwrap().is_legal());
            let got = check_move(&t, &Move::BobBall(Ball::cylinder(cand.clone()))).unwrap().is_legal();
            prop_assert_eq!(got, oracle_bob_legal(kind, &cur_s, &alice_bits, &cand_s, beta_pow));
        }
    }

    proptest! {
        #[test]
        fn classic_radius_law_and_nesting(
            alpha_den in 2i64..6, beta_den in 2i64..6,
            offsets in proptest::collection::vec((0u32..1000, 0u32..1000), 1..8),
        ) {
            let alpha = rat(1, alpha_den);
            let beta = rat(1, beta_den);
            let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, alpha.clone(), beta.clone()).unwrap();
            let mut t = Transcript::new(cfg);
            t.push(Move::BobBall(iv(int(0), int(1)))).unwrap();
            for (oa, ob) in &offsets {
                let b = t.last_bob_ball().unwrap().clone();
                let ra = &alpha * b.radius();
                let slack = b.radius() - &ra;
                let ca = b.center().unwrap() - &slack + &slack * int(2) * rat(*oa as i64, 999);
                let a = iv(ca, ra);
                prop_assert!(t.push(Move::AliceBall(a.clone())).unwrap().is_legal());
                let rb = &beta * a.radius();
                let slack = a.radius() - &rb;
                let cb = a.center().unwrap() - &slack + &slack * int(2) * rat(*ob as i64, 999);
                prop_assert!(t.push(Move::BobBall(iv(cb, rb))).unwrap().is_legal());
            }
            let bobs = t.bob_balls();
            for (n, b) in bobs.iter().enumerate() {
                prop_assert_eq!(b.radius(), crate::scalar::powi(&(&alpha * &beta), n as i64));
            }
            for w in bobs.windows(2) {
                prop_assert!(w[0].contains_ball(w[1]));
            }
        }
    }
}
