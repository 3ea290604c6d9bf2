//! Strategies for the potential game, and the passage between potential-game
//! strategies, Cantor constructions and very strong Schmidt play.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive};

use crate::cantor::{rich_budget_check, BudgetTable, CantorConstruction, Removal};
use crate::engine::{potential_sum, GameConfig, GameKind, Move, SchmidtVariant, Strategy, Transcript, Verdict};
use crate::error::{Error, Player, Result};
use crate::fractal::separated_packing;
use crate::scalar::{format_exact, int, pow2, pow_exact, powi, rat, ExactScalar, GradedScalar, DEFAULT_PRECISION};
use crate::space::{Ball, SpaceTag};

/// How a construction's budgets are certified before it drives the potential strategy.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialMode {
    /// Budgets `r_{m,n} ≤ R^{(n-m+1)(1-ε)}`.
    Def23 { eps: ExactScalar },
    /// Real-line rich budgets `Σ (4/R)^{n-m+1} r_{m,n} ≤ y`.
    Rich { eps: ExactScalar, y: ExactScalar },
}

/// Alice deletes, at Bob's ball `D`, every removed ball of the construction
/// at the scales `m` with `β·rad(D) < R^{-m}ρ ≤ rad(D)` that meets `D`.
pub struct PotentialFromCantor {
    construction: Arc<CantorConstruction>,
    cexp: ExactScalar,
    beta: ExactScalar,
    mode: PotentialMode,
    c0: ExactScalar,
    /// scale m -> parent -> removed balls over all n ≥ m
    index: HashMap<usize, BTreeMap<Ball, Vec<Ball>>>,
}

pub fn potential_alice_from_cantor(
    construction: CantorConstruction,
    cexp: ExactScalar,
    beta: ExactScalar,
    mode: PotentialMode,
) -> Result<PotentialFromCantor> {
    if !beta.is_positive() || beta >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "beta={} must lie in (0,1)",
            format_exact(&beta)
        )));
    }
    let eps = match &mode {
        PotentialMode::Def23 { eps } | PotentialMode::Rich { eps, .. } => eps.clone(),
    };
    if !eps.is_positive() || eps > int(1) {
        return Err(Error::InvalidParameter(format!(
            "eps={} must lie in (0,1]",
            format_exact(&eps)
        )));
    }
    // f(R) = R for the standard splittings, so δ = 1
    let c0 = int(1) - &eps;
    if cexp <= c0 {
        return Err(Error::ParameterGateFailed(format!(
            "c={} must exceed c0={}",
            format_exact(&cexp),
            format_exact(&c0)
        )));
    }
    match &mode {
        PotentialMode::Def23 { eps } => {
            let report = construction.validate_budgets(eps, DEFAULT_PRECISION)?;
            if let Some(v) = report.violations.first() {
                return Err(Error::BudgetViolated(format!(
                    "r_({},{}) = {} exceeds {}",
                    v.m,
                    v.n,
                    format_exact(&v.r),
                    v.bound
                )));
            }
        }
        PotentialMode::Rich { y, .. } => {
            if construction.space() != SpaceTag::RealLine {
                return Err(Error::InvalidParameter("rich mode needs the real line".into()));
            }
            let r = int(construction.modulus() as i64);
            let n_max = construction.budgets().max_column().unwrap_or(0);
            let report = rich_budget_check(construction.budgets(), &r, y, n_max)?;
            if let Some(n) = report.first_violation {
                return Err(Error::BudgetViolated(format!("rich sum exceeds y at column {n}")));
            }
            // y < β^c (1 - R^{c0-c}) / (C1 R^{c0-c}),  C1 = ⌊1/β⌋ + 2
            let c1 = int(1) / &beta;
            let c1 = int(c1.floor().to_integer().to_i64().unwrap_or(i64::MAX)) + int(2);
            let ratio = pow_exact(&r, &(&c0 - &cexp), DEFAULT_PRECISION);
            let bound = pow_exact(&beta, &cexp, DEFAULT_PRECISION)
                .mul(&GradedScalar::exact(int(1)).sub(&ratio))
                .div(&ratio.scale(&c1))?;
            if !GradedScalar::exact(y.clone()).lt_enc(&bound)? {
                return Err(Error::ParameterGateFailed(format!(
                    "y={} is not below {bound}",
                    format_exact(y)
                )));
            }
        }
    }
    let mut index: HashMap<usize, BTreeMap<Ball, Vec<Ball>>> = HashMap::new();
    for (m, _, parent, removed) in construction.removal_blocks() {
        index
            .entry(m)
            .or_default()
            .entry(parent.clone())
            .or_default()
            .extend(removed.iter().cloned());
    }
    Ok(PotentialFromCantor {
        construction: Arc::new(construction),
        cexp,
        beta,
        mode,
        c0,
        index,
    })
}

impl PotentialFromCantor {
    /// Scale indices `m` with `β·rad(D) < R^{-m}ρ ≤ rad(D)`.
    pub fn scale_indices(&self, d: &Ball) -> Result<Vec<usize>> {
        let rho = self.construction.b0().radius();
        let r = int(self.construction.modulus() as i64);
        let rad = d.radius();
        let floor = &self.beta * &rad;
        let mut out = Vec::new();
        let mut m = 0usize;
        loop {
            let s = &rho / powi(&r, m as i64);
            if s <= floor {
                break;
            }
            if s <= rad {
                out.push(m);
            }
            m += 1;
        }
        if out.is_empty() {
            Err(Error::NoScaleIndex(format_exact(&rad)))
        } else {
            Ok(out)
        }
    }

    /// Every removed ball in blocks `(m, n ≥ m)` meeting `d`, for the given scales.
    pub fn deletions(&self, d: &Ball, scales: &[usize]) -> Result<Vec<Ball>> {
        let built = self.construction.depth();
        for &m in scales {
            let unbuilt = self
                .construction
                .budgets()
                .iter()
                .any(|(bm, n, _)| bm == m && n >= built);
            if m + 1 > built || unbuilt {
                return Err(Error::DepthExhausted(m));
            }
        }
        let bits = self.construction.modulus().trailing_zeros() as usize;
        let mut out = BTreeSet::new();
        for m in scales {
            let Some(blocks) = self.index.get(m) else { continue };
            let mut keep = |removed: &[Ball]| out.extend(removed.iter().filter(|a| !a.disjoint(d)).cloned());
            match d.word() {
                Some(w) => {
                    // parents meeting a cylinder are its prefixes and its extensions
                    if w.len() >= m * bits {
                        if let Some(r) = blocks.get(&Ball::cylinder(w[..m * bits].to_vec())) {
                            keep(r);
                        }
                    }
                    for (p, r) in blocks.range(d.clone()..) {
                        if !p.word().is_some_and(|pw| pw.starts_with(w)) {
                            break;
                        }
                        keep(r);
                    }
                }
                None => {
                    for (p, r) in blocks {
                        if !p.disjoint(d) {
                            keep(r);
                        }
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }
}

impl Strategy for PotentialFromCantor {
    fn name(&self) -> &str {
        "potential-from-cantor"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("c".into(), format_exact(&self.cexp)),
            ("beta".into(), format_exact(&self.beta)),
            ("c0".into(), format_exact(&self.c0)),
            ("R".into(), self.construction.modulus().to_string()),
        ];
        match &self.mode {
            PotentialMode::Def23 { eps } => v.push(("eps".into(), format_exact(eps))),
            PotentialMode::Rich { eps, y } => {
                v.push(("eps".into(), format_exact(eps)));
                v.push(("y".into(), format_exact(y)));
            }
        }
        v
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let d = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        match self.scale_indices(d) {
            Ok(scales) => Ok(Move::AliceCollection(self.deletions(d, &scales)?)),
            Err(Error::NoScaleIndex(_)) => Ok(Move::AliceCollection(Vec::new())),
            Err(e) => Err(e),
        }
    }
}

/// Alternates two `(c, β²)` strategies by the parity of Bob's move index.
pub struct Intersected {
    first: Arc<dyn Strategy>,
    second: Arc<dyn Strategy>,
    beta: ExactScalar,
}

pub fn intersect_potential_strategies(
    first: Arc<dyn Strategy>,
    second: Arc<dyn Strategy>,
    beta: ExactScalar,
) -> Result<Intersected> {
    if !beta.is_positive() || beta >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "beta={} must lie in (0,1)",
            format_exact(&beta)
        )));
    }
    Ok(Intersected { first, second, beta })
}

impl Intersected {
    /// The sub-game transcript seen by the strategy in charge of Bob's `index`-th ball.
    ///
    /// The records are not refereed: a collection may exceed the `β²`
    /// budget while staying within the `β` budget of the outer game.
    pub fn sub_transcript(&self, t: &Transcript) -> Result<Transcript> {
        let (c, beta) = match &t.config().kind {
            GameKind::Potential { c, beta } => (c.clone(), beta.clone()),
            k => return Err(Error::InvalidParameter(format!("{k} is not a potential game"))),
        };
        if beta != self.beta {
            return Err(Error::ParameterMismatch(format!(
                "game beta {} differs from {}",
                format_exact(&beta),
                format_exact(&self.beta)
            )));
        }
        let cfg = GameConfig::potential(t.config().space, c, &self.beta * &self.beta)?;
        let bobs = t.bob_balls();
        let alices = t.alice_moves();
        let index = bobs.len().checked_sub(1).ok_or(Error::EmptyTranscript)?;
        let mut moves = Vec::new();
        for i in (index % 2..=index).step_by(2) {
            moves.push(Move::BobBall(bobs[i].clone()));
            if i < index {
                moves.push(alices[i].clone());
            }
        }
        Ok(Transcript::rebased(Arc::new(cfg), moves))
    }
}

impl Strategy for Intersected {
    fn name(&self) -> &str {
        "intersection"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("beta".into(), format_exact(&self.beta)),
            ("even".into(), self.first.name().to_string()),
            ("odd".into(), self.second.name().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let index = t.bob_balls().len().checked_sub(1).ok_or(Error::EmptyTranscript)?;
        let sub = self.sub_transcript(t)?;
        let s = if index % 2 == 0 { &self.first } else { &self.second };
        s.respond(&sub)
    }
}

/// Replays `s` against every Bob path descending `R^q` per move on the shift
/// and turns its deletions into a Cantor construction at modulus `R`.
///
/// A deleted ball `C` with `R^{-(n+1)}ρ ≤ rad(C) < R^{-n}ρ`, answering Bob's
/// ball `B` at level `m`, removes the level-`n+1` descendants of `B` meeting
/// `C`. Budgets are `C3·⌊R^{c(n-m+1-q)}⌋` with `c = 1-ε` and `C3 = max(1, R/2)`,
/// the most level-`n+1` cylinders one such `C` can meet.
pub fn cantor_from_potential_alice(
    s: &dyn Strategy,
    eps: &ExactScalar,
    modulus: u64,
    q: usize,
    depth: usize,
) -> Result<CantorConstruction> {
    if !modulus.is_power_of_two() || modulus < 2 {
        return Err(Error::NotInU(modulus));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    let c = int(1) - eps;
    let r = int(modulus as i64);
    let beta = powi(&r, -(q as i64));
    let cfg = Arc::new(GameConfig::potential(SpaceTag::Shift, c.clone(), beta)?);
    let bits = modulus.trailing_zeros() as usize;
    let overlap = (modulus / 2).max(1) as i64;
    let mut table = BudgetTable::new();
    for m in (0..depth).step_by(q) {
        for n in m..depth {
            let base = pow_exact(&r, &(&c * int(n as i64 - m as i64 + 1 - q as i64)), DEFAULT_PRECISION).floor()?;
            let budget = int(overlap) * ExactScalar::from_integer(base);
            table.set(m, n, budget)?;
        }
    }
    let start = CantorConstruction::new(Ball::root_cylinder(), modulus, table)?;
    // level-m Bob ball -> (transcript after Alice's answer, her deletions)
    let mut memo: HashMap<Ball, (Transcript, Vec<Ball>)> = HashMap::new();
    start.build(depth, |con, n| {
        let mut out = Vec::new();
        for m in (0..=n).step_by(q) {
            for b in con.survivors(m)? {
                let deleted = answer(s, &cfg, con, q, m, b, &mut memo)?;
                let mut removed = BTreeSet::new();
                for del in &deleted {
                    let rad = del.radius();
                    let upper = powi(&r, -(n as i64));
                    if rad >= upper || rad < &upper / &r || !b.contains_ball(del) {
                        continue;
                    }
                    let word = del.word().expect("cylinder");
                    let target = bits * (n + 1);
                    if word.len() >= target {
                        removed.insert(Ball::cylinder(word[..target].to_vec()));
                    } else {
                        for suffix in 0..(1u64 << (target - word.len())) {
                            let mut w = word.to_vec();
                            for bit in (0..target - word.len()).rev() {
                                w.push(((suffix >> bit) & 1) as u8);
                            }
                            removed.insert(Ball::cylinder(w));
                        }
                    }
                }
                if !removed.is_empty() {
                    out.push(Removal {
                        m,
                        parent: b.clone(),
                        removed: removed.into_iter().collect(),
                    });
                }
            }
        }
        Ok(out)
    })
}

fn answer(
    s: &dyn Strategy,
    cfg: &Arc<GameConfig>,
    con: &CantorConstruction,
    q: usize,
    m: usize,
    b: &Ball,
    memo: &mut HashMap<Ball, (Transcript, Vec<Ball>)>,
) -> Result<Vec<Ball>> {
    if let Some((_, d)) = memo.get(b) {
        return Ok(d.clone());
    }
    let mut t = if m == 0 {
        Transcript::with_shared(cfg.clone())
    } else {
        let parent = con
            .ancestor_at(m - q, b)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("{b} has no level-{} ancestor", m - q)))?;
        answer(s, cfg, con, q, m - q, &parent, memo)?;
        memo[&parent].0.clone()
    };
    let mut deleted = Vec::new();
    if !t.is_terminal() {
        match t.push(Move::BobBall(b.clone()))? {
            Verdict::Legal => {
                let turn = t.next_turn();
                let mv = s.respond(&t).map_err(|e| Error::StrategyFault {
                    player: Player::Alice,
                    turn,
                    reason: e.to_string(),
                })?;
                let coll = match &mv {
                    Move::AliceCollection(v) => v.clone(),
                    other => {
                        return Err(Error::StrategyFault {
                            player: Player::Alice,
                            turn,
                            reason: format!("expected a collection, got {}", other.shape()),
                        })
                    }
                };
                if let Verdict::Illegal(reason) = t.push(mv)? {
                    return Err(Error::StrategyFault {
                        player: Player::Alice,
                        turn,
                        reason,
                    });
                }
                deleted = coll;
            }
            Verdict::DefaultWinAlice(_) => {}
            Verdict::Illegal(reason) => {
                return Err(Error::InvalidParameter(format!(
                    "replayed Bob move {b} rejected: {reason}"
                )))
            }
        }
    }
    memo.insert(b.clone(), (t, deleted.clone()));
    Ok(deleted)
}

/// Very strong Alice that keeps a potential of inner deletions small.
///
/// The inner `(c, (αβ)^q)` game sees Bob's balls `B_0, B_q, B_{2q}, ...`;
/// at each turn Alice picks, among `3r`-separated balls of radius
/// `r = α·rad(B_m)`, the one meeting the least `Σ diam^c` of inner deletions.
pub struct SchmidtFromPotential {
    inner: Arc<dyn Strategy>,
    cexp: ExactScalar,
    alpha: ExactScalar,
    beta: ExactScalar,
    q: usize,
}

/// Gate constant: `α < GAMMA·(αβ)^c` guarantees more than `2(αβ)^{-c}` candidates.
pub const SCHMIDT_GATE: (i64, i64) = (1, 4);

pub fn schmidt_alice_from_potential(
    inner: Arc<dyn Strategy>,
    cexp: ExactScalar,
    alpha: ExactScalar,
    beta: ExactScalar,
    q: usize,
) -> Result<SchmidtFromPotential> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    for (v, what) in [(&alpha, "alpha"), (&beta, "beta")] {
        if !v.is_positive() || *v >= int(1) {
            return Err(Error::InvalidParameter(format!(
                "{what}={} must lie in (0,1)",
                format_exact(v)
            )));
        }
    }
    if !cexp.is_positive() {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    let gamma = rat(SCHMIDT_GATE.0, SCHMIDT_GATE.1);
    let bound = pow_exact(&(&alpha * &beta), &cexp, DEFAULT_PRECISION).scale(&gamma);
    if !GradedScalar::exact(alpha.clone()).lt_enc(&bound)? {
        return Err(Error::ParameterGateFailed(format!(
            "alpha={} is not below gamma·(alpha·beta)^c = {bound}",
            format_exact(&alpha)
        )));
    }
    Ok(SchmidtFromPotential {
        inner,
        cexp,
        alpha,
        beta,
        q,
    })
}

impl SchmidtFromPotential {
    /// `α²β`, the scale the potential at Alice's ball stays under.
    pub fn epsilon(&self) -> ExactScalar {
        &self.alpha * &self.alpha * &self.beta
    }

    fn inner_config(&self) -> Result<Arc<GameConfig>> {
        let tilde = powi(&(&self.alpha * &self.beta), self.q as i64);
        Ok(Arc::new(GameConfig::potential(
            SpaceTag::RealLine,
            self.cexp.clone(),
            tilde,
        )?))
    }

    /// Inner deletions answering `B_0, B_q, ..., B_{qk}` with `qk ≤ m`.
    pub fn inner_pool(&self, t: &Transcript) -> Result<Vec<Ball>> {
        let bobs = t.bob_balls();
        let m = bobs.len().checked_sub(1).ok_or(Error::EmptyTranscript)?;
        let mut inner = Transcript::with_shared(self.inner_config()?);
        let mut pool = Vec::new();
        for k in (0..=m).step_by(self.q) {
            if inner.is_terminal() {
                break;
            }
            if !inner.push(Move::BobBall(bobs[k].clone()))?.is_legal() {
                break;
            }
            let turn = inner.next_turn();
            let mv = self.inner.respond(&inner).map_err(|e| Error::StrategyFault {
                player: Player::Alice,
                turn,
                reason: format!("inner strategy: {e}"),
            })?;
            if let Move::AliceCollection(v) = &mv {
                pool.extend(v.iter().cloned());
            }
            if let Verdict::Illegal(reason) = inner.push(mv)? {
                return Err(Error::StrategyFault {
                    player: Player::Alice,
                    turn,
                    reason: format!("inner strategy: {reason}"),
                });
            }
        }
        Ok(pool)
    }

    fn phi_of(&self, pool: &[Ball], ball: &Ball) -> (Vec<usize>, GradedScalar) {
        let hits: Vec<usize> = (0..pool.len()).filter(|&i| !pool[i].disjoint(ball)).collect();
        let value = hits
            .iter()
            .map(|&i| pow_exact(&pool[i].diameter(), &self.cexp, DEFAULT_PRECISION))
            .fold(GradedScalar::zero(), |acc, x| acc.add(&x).rounded(DEFAULT_PRECISION));
        (hits, value)
    }

    /// `Σ diam^c(C)` over inner deletions `C` meeting `ball`, as of `t`.
    pub fn potential_at(&self, t: &Transcript, ball: &Ball) -> Result<GradedScalar> {
        let pool = self.inner_pool(t)?;
        Ok(self.phi_of(&pool, ball).1)
    }

    /// The separated candidates inside Bob's current ball.
    pub fn candidates(&self, current: &Ball) -> Vec<Ball> {
        separated_packing(current, &self.alpha, &int(1))
    }
}

impl Strategy for SchmidtFromPotential {
    fn name(&self) -> &str {
        "schmidt-from-potential"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("c".into(), format_exact(&self.cexp)),
            ("alpha".into(), format_exact(&self.alpha)),
            ("beta".into(), format_exact(&self.beta)),
            ("q".into(), self.q.to_string()),
            ("gamma".into(), format!("{}/{}", SCHMIDT_GATE.0, SCHMIDT_GATE.1)),
            ("eps".into(), format_exact(&self.epsilon())),
            ("inner".into(), self.inner.name().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        match &t.config().kind {
            GameKind::Schmidt {
                variant: SchmidtVariant::VeryStrong,
                alpha,
                beta,
            } if *alpha == self.alpha && *beta == self.beta => {}
            k => {
                return Err(Error::ParameterMismatch(format!(
                    "expected a very strong ({}, {}) game, got {k}",
                    format_exact(&self.alpha),
                    format_exact(&self.beta)
                )))
            }
        }
        let current = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        let pool = self.inner_pool(t)?;
        let mut best: Option<(Ball, Vec<usize>, GradedScalar)> = None;
        for d in self.candidates(current) {
            let (hits, value) = self.phi_of(&pool, &d);
            let better = match &best {
                None => true,
                Some((_, bh, bv)) => hits != *bh && value.compare(bv)? == Ordering::Less,
            };
            if better {
                best = Some((d, hits, value));
            }
        }
        let (ball, _, _) = best.ok_or_else(|| Error::InvalidParameter("no candidate ball".into()))?;
        Ok(Move::AliceBall(ball))
    }
}

/// Alice deletes shift preimages of a cover of `K`, `ℓ` time offsets per band
/// of Bob radii, where `2^{-ℓ} ≤ β < 2^{-ℓ+1}`.
pub struct DolgopyatAlice {
    cover: Vec<Ball>,
    cexp: ExactScalar,
    beta: ExactScalar,
    ell: usize,
}

pub fn dolgopyat_alice(cover: Vec<Ball>, cexp: ExactScalar, beta: ExactScalar) -> Result<DolgopyatAlice> {
    if !beta.is_positive() || beta >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "beta={} must lie in (0,1)",
            format_exact(&beta)
        )));
    }
    if !cexp.is_positive() {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    if let Some(b) = cover.iter().find(|b| b.space() != SpaceTag::Shift) {
        return Err(Error::WrongSpace(b.to_string()));
    }
    let mut ell = 1usize;
    while pow2(-(ell as i64)) > beta {
        ell += 1;
    }
    // Σ rad(C)^c < ℓ^{-1} (2^{-2ℓ} β)^c, normalised by the scale
    let base = pow2(-2 * ell as i64) * &beta;
    let total = potential_sum(&cover, &base, &cexp, DEFAULT_PRECISION);
    let bound = rat(1, ell as i64);
    if !total.lt(&bound)? {
        return Err(Error::CoverBudgetViolated(format!(
            "sum (rad/(2^-{}·beta))^c = {total} is not below 1/{ell}",
            2 * ell
        )));
    }
    Ok(DolgopyatAlice { cover, cexp, beta, ell })
}

impl DolgopyatAlice {
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Band `i` with `(i+1)ℓ < depth ≤ (i+2)ℓ`, if nonnegative.
    fn band(&self, depth: usize) -> Option<usize> {
        let i = depth.div_ceil(self.ell) as i64 - 2;
        (i >= 0).then_some(i as usize)
    }

    /// Preimages `T^{-t}C` for the band's offsets that meet `d`.
    pub fn preimages(&self, d: &Ball, band: usize) -> Vec<Ball> {
        let w = d.word().expect("cylinder");
        let mut out = BTreeSet::new();
        for t in band * self.ell..(band + 1) * self.ell {
            for c in &self.cover {
                let mut word = w[..t].to_vec();
                word.extend_from_slice(c.word().expect("cylinder"));
                let n = word.len().min(w.len());
                if word[..n] == w[..n] {
                    out.insert(Ball::cylinder(word));
                }
            }
        }
        out.into_iter().collect()
    }
}

impl Strategy for DolgopyatAlice {
    fn name(&self) -> &str {
        "dolgopyat-alice"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("c".into(), format_exact(&self.cexp)),
            ("beta".into(), format_exact(&self.beta)),
            ("ell".into(), self.ell.to_string()),
            ("cover".into(), self.cover.len().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let bobs = t.bob_balls();
        let (d, earlier) = bobs.split_last().ok_or(Error::EmptyTranscript)?;
        if d.space() != SpaceTag::Shift {
            return Err(Error::WrongSpace(d.to_string()));
        }
        let Some(band) = self.band(d.depth().unwrap_or(0)) else {
            return Ok(Move::AliceCollection(Vec::new()));
        };
        if earlier.iter().any(|b| self.band(b.depth().unwrap_or(0)) == Some(band)) {
            return Ok(Move::AliceCollection(Vec::new()));
        }
        Ok(Move::AliceCollection(self.preimages(d, band)))
    }
}

/// Alice deletes a fixed cover on her first turn and nothing afterwards.
pub struct FirstTurnCover {
    cover: Vec<Ball>,
    cexp: ExactScalar,
    beta: ExactScalar,
    r0: ExactScalar,
}

fn diameter_budget(cover: &[Ball], cexp: &ExactScalar, beta: &ExactScalar, r: &ExactScalar) -> Result<()> {
    let base = beta * r;
    let total = cover
        .iter()
        .map(|b| pow_exact(&(b.diameter() / &base), cexp, DEFAULT_PRECISION))
        .fold(GradedScalar::zero(), |acc, x| acc.add(&x).rounded(DEFAULT_PRECISION));
    if total.le(&ExactScalar::one())? {
        Ok(())
    } else {
        Err(Error::BudgetViolated(format!(
            "sum (diam/(beta·{}))^c = {total} exceeds 1",
            format_exact(r)
        )))
    }
}

pub fn first_turn_cover_alice(
    cover: Vec<Ball>,
    cexp: ExactScalar,
    beta: ExactScalar,
    r0: ExactScalar,
) -> Result<FirstTurnCover> {
    if !cexp.is_positive() || !beta.is_positive() || !r0.is_positive() {
        return Err(Error::InvalidParameter("c, beta and r0 must be positive".into()));
    }
    diameter_budget(&cover, &cexp, &beta, &r0)?;
    Ok(FirstTurnCover { cover, cexp, beta, r0 })
}

impl Strategy for FirstTurnCover {
    fn name(&self) -> &str {
        "first-turn-cover"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("c".into(), format_exact(&self.cexp)),
            ("beta".into(), format_exact(&self.beta)),
            ("r0".into(), format_exact(&self.r0)),
            ("cover".into(), self.cover.len().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let bobs = t.bob_balls();
        let b0 = bobs.first().ok_or(Error::EmptyTranscript)?;
        if bobs.len() > 1 {
            return Ok(Move::AliceCollection(Vec::new()));
        }
        let r = b0.radius();
        if r != self.r0 {
            diameter_budget(&self.cover, &self.cexp, &self.beta, &r)?;
        }
        Ok(Move::AliceCollection(self.cover.clone()))
    }
}
