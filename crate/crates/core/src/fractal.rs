//! Dimension estimates, regularity and diffuseness checks, packings, and
//! regular subsets extracted from constructions and Bob strategies.

use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::cantor::{BudgetTable, CantorConstruction, Removal};
use crate::engine::{GameConfig, Move, Strategy, Transcript, Verdict};
use crate::error::{Error, Player, Result};
use crate::scalar::{format_exact, int, pow2, pow_exact, rat, to_f64, ExactScalar, GradedScalar, DEFAULT_PRECISION};
use crate::space::{Ball, SpaceTag, SplittingStructure, StandardSplitting};

/// Greedy packing of radius-`α·rad(B)` intervals with centres in the
/// `(1-α)`-shrunken ball, consecutive centres `3α·rad(B)` apart.
///
/// For `α > 1/2` the packing is the single ball of radius `α·rad(B)` at the
/// centre of `B`. Cylinders are not packed: the result is empty.
pub fn separated_packing(b: &Ball, alpha: &ExactScalar, _delta: &ExactScalar) -> Vec<Ball> {
    let Ball::Interval { center, radius } = b else {
        return Vec::new();
    };
    if !alpha.is_positive() {
        return Vec::new();
    }
    let r = alpha * radius;
    if *alpha > rat(1, 2) {
        return vec![Ball::Interval {
            center: center.clone(),
            radius: r,
        }];
    }
    let lo = center - radius + &r;
    let hi = center + radius - &r;
    let step = &r * int(3);
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        out.push(Ball::Interval {
            center: x.clone(),
            radius: r.clone(),
        });
        x += &step;
    }
    out
}

/// `count·α`, the packing constant achieved by [`separated_packing`] on the line.
pub fn packing_constant(b: &Ball, alpha: &ExactScalar) -> ExactScalar {
    int(separated_packing(b, alpha, &int(1)).len() as i64) * alpha
}

/// Exact `(scale, count)` pairs, scales strictly decreasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleProfile {
    pairs: Vec<(ExactScalar, u64)>,
}

impl ScaleProfile {
    pub fn new(pairs: Vec<(ExactScalar, u64)>) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[1].0 >= w[0].0 {
                return Err(Error::InvalidParameter(format!(
                    "scales must decrease: {} then {}",
                    format_exact(&w[0].0),
                    format_exact(&w[1].0)
                )));
            }
        }
        if let Some((r, n)) = pairs.iter().find(|(r, n)| !r.is_positive() || *n == 0) {
            return Err(Error::InvalidParameter(format!("bad pair ({}, {n})", format_exact(r))));
        }
        Ok(ScaleProfile { pairs })
    }

    /// Survivor counts of `c` at `depths`, at the common survivor radius.
    pub fn from_construction(c: &CantorConstruction, depths: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut pairs = Vec::new();
        for d in depths {
            let level = c.survivors(d)?;
            let r = level
                .first()
                .map(|b| b.radius())
                .unwrap_or_else(|| c.b0().radius() / int(c.modulus() as i64).pow(d as i32));
            pairs.push((r, level.len() as u64));
        }
        ScaleProfile::new(pairs)
    }

    /// Counts of each level at the level's largest radius.
    pub fn from_levels(levels: &[Vec<Ball>]) -> Result<Self> {
        let mut pairs = Vec::new();
        for level in levels {
            let r = level
                .iter()
                .map(|b| b.radius())
                .max()
                .ok_or_else(|| Error::InvalidParameter("empty level".into()))?;
            pairs.push((r, level.len() as u64));
        }
        ScaleProfile::new(pairs)
    }

    pub fn pairs(&self) -> &[(ExactScalar, u64)] {
        &self.pairs
    }

    /// `r_num,r_den,count` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r_num,r_den,count\n");
        for (r, n) in &self.pairs {
            out.push_str(&format!("{},{},{n}\n", r.numer(), r.denom()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("r_num")) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let [num, den, count] = cols[..] else {
                return Err(Error::Parse(format!("line {}: expected 3 columns", i + 1)));
            };
            let bad = |_| Error::Parse(format!("line {}: {line:?}", i + 1));
            let num: num_bigint::BigInt = num.parse().map_err(bad)?;
            let den: num_bigint::BigInt = den.parse().map_err(bad)?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: {line:?}", i + 1)))?;
            if den.is_zero() {
                return Err(Error::Parse(format!("line {}: zero denominator", i + 1)));
            }
            pairs.push((ExactScalar::new(num, den), count));
        }
        ScaleProfile::new(pairs)
    }
}

/// Least-squares slope of `log N` against `-log r`, with the largest
/// deviation of any point from the fitted line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionEstimate {
    pub estimate: f64,
    pub residual: f64,
}

pub fn box_dimension(p: &ScaleProfile) -> Result<DimensionEstimate> {
    if p.pairs.len() < 3 {
        return Err(Error::TooFewScales(p.pairs.len()));
    }
    let pts: Vec<(f64, f64)> = p
        .pairs
        .iter()
        .map(|(r, n)| (-to_f64(r).ln(), (*n as f64).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).abs())
        .fold(0.0, f64::max);
    Ok(DimensionEstimate {
        estimate: slope,
        residual,
    })
}

/// A measure that can bound the mass of a ball exactly.
pub trait Measure {
    /// `(lower, upper)` bounds on `μ(b)`.
    fn mass_bounds(&self, b: &Ball) -> Result<(ExactScalar, ExactScalar)>;
}

/// The uniform measure on the shift: a cylinder of length `k` has mass `2^{-k}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformShiftMeasure;

impl Measure for UniformShiftMeasure {
    fn mass_bounds(&self, b: &Ball) -> Result<(ExactScalar, ExactScalar)> {
        match b {
            Ball::Cylinder { .. } => Ok((b.radius(), b.radius())),
            _ => Err(Error::WrongSpace(b.to_string())),
        }
    }
}

/// Mass split evenly among surviving children at every level of a construction.
#[derive(Clone, Debug)]
pub struct SurvivorMeasure {
    leaves: Vec<(Ball, ExactScalar)>,
}

impl SurvivorMeasure {
    pub fn new(c: &CantorConstruction, depth: usize) -> Result<Self> {
        let mut masses: BTreeMap<Ball, ExactScalar> = BTreeMap::new();
        masses.insert(c.b0().clone(), int(1));
        for n in 0..depth {
            let mut kids: BTreeMap<Ball, Vec<Ball>> = BTreeMap::new();
            for b in c.survivors(n + 1)? {
                let parent = c
                    .ancestor_at(n, b)
                    .ok_or_else(|| Error::InvalidParameter(format!("{b} has no parent")))?;
                kids.entry(parent.clone()).or_default().push(b.clone());
            }
            let mut next = BTreeMap::new();
            for (parent, children) in kids {
                let share = &masses[&parent] / int(children.len() as i64);
                for child in children {
                    next.insert(child, share.clone());
                }
            }
            masses = next;
        }
        Ok(SurvivorMeasure {
            leaves: masses.into_iter().collect(),
        })
    }

    pub fn leaves(&self) -> &[(Ball, ExactScalar)] {
        &self.leaves
    }
}

impl Measure for SurvivorMeasure {
    /// Leaves inside `b` count toward both bounds, leaves touching it only
    /// toward the upper one.
    fn mass_bounds(&self, b: &Ball) -> Result<(ExactScalar, ExactScalar)> {
        let (mut lo, mut hi) = (int(0), int(0));
        for (leaf, m) in &self.leaves {
            if leaf.space() != b.space() {
                return Err(Error::WrongSpace(b.to_string()));
            }
            if b.contains_ball(leaf) {
                lo += m;
                hi += m;
            } else if !b.disjoint(leaf) {
                hi += m;
            }
        }
        Ok((lo, hi))
    }
}

/// The closed ball of radius `r` around the point represented by `point`:
/// its centre on the line, its word on the shift.
pub fn ball_at(point: &Ball, r: &ExactScalar) -> Result<Ball> {
    match point {
        Ball::Interval { center, .. } => Ball::interval(center.clone(), r.clone()),
        Ball::Cylinder { word } => {
            if !r.is_positive() {
                return Err(Error::InvalidParameter("radius must be positive".into()));
            }
            // largest cylinder radius 2^{-j} ≤ r
            let mut j = 0usize;
            while pow2(-(j as i64)) > *r {
                j += 1;
            }
            if j > word.len() {
                return Err(Error::InvalidParameter(format!(
                    "{point} is too short for radius {}",
                    format_exact(r)
                )));
            }
            Ok(Ball::cylinder(word[..j].to_vec()))
        }
    }
}

/// Observed bounds `(1/C) r^δ ≤ μ(B(x,r)) ≤ C r^δ` over the sampled balls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityCertificate {
    pub delta: ExactScalar,
    pub c: ExactScalar,
    pub scale_min: ExactScalar,
    pub scale_max: ExactScalar,
    pub min_ratio: ExactScalar,
    pub max_ratio: ExactScalar,
    pub samples: usize,
}

/// Smallest `C` (up to enclosure rounding) fitting every sample, or the
/// sample that needs a `C` above `cap`.
pub fn ahlfors_check(
    mu: &dyn Measure,
    delta: &ExactScalar,
    points: &[Ball],
    scales: &[ExactScalar],
    cap: &ExactScalar,
) -> Result<RegularityCertificate> {
    if points.is_empty() || scales.is_empty() {
        return Err(Error::InvalidParameter("need sample points and scales".into()));
    }
    let mut min_ratio: Option<ExactScalar> = None;
    let mut max_ratio = int(0);
    for r in scales {
        let power = pow_exact(r, delta, DEFAULT_PRECISION);
        for x in points {
            let (lo, hi) = mu.mass_bounds(&ball_at(x, r)?)?;
            let low = lo / power.upper();
            let high = hi / power.lower();
            let fail = || Error::NotRegularAtSample {
                x: x.to_string(),
                r: format_exact(r),
            };
            if low.is_zero() || low.recip() > *cap || high > *cap {
                return Err(fail());
            }
            if min_ratio.as_ref().is_none_or(|m| low < *m) {
                min_ratio = Some(low);
            }
            if high > max_ratio {
                max_ratio = high;
            }
        }
    }
    let min_ratio = min_ratio.expect("nonempty samples");
    let c = max_ratio.clone().max(min_ratio.recip());
    Ok(RegularityCertificate {
        delta: delta.clone(),
        c,
        scale_min: scales.iter().min().cloned().expect("nonempty"),
        scale_max: scales.iter().max().cloned().expect("nonempty"),
        min_ratio,
        max_ratio,
        samples: points.len() * scales.len(),
    })
}

/// A closed subset of the line given as a finite union of closed intervals
/// (points allowed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    pieces: Vec<(ExactScalar, ExactScalar)>,
}

impl PointSet {
    pub fn new(mut pieces: Vec<(ExactScalar, ExactScalar)>) -> Result<Self> {
        if let Some((a, b)) = pieces.iter().find(|(a, b)| a > b) {
            return Err(Error::InvalidParameter(format!(
                "[{}, {}] is empty",
                format_exact(a),
                format_exact(b)
            )));
        }
        pieces.sort();
        let mut merged: Vec<(ExactScalar, ExactScalar)> = Vec::new();
        for (a, b) in pieces {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        Ok(PointSet { pieces: merged })
    }

    pub fn point(x: ExactScalar) -> Self {
        PointSet {
            pieces: vec![(x.clone(), x)],
        }
    }

    /// The union of a line construction's survivors at `depth`.
    pub fn from_survivors(c: &CantorConstruction, depth: usize) -> Result<Self> {
        let pieces = c
            .survivors(depth)?
            .iter()
            .map(|b| b.endpoints().ok_or_else(|| Error::WrongSpace(b.to_string())))
            .collect::<Result<Vec<_>>>()?;
        PointSet::new(pieces)
    }

    pub fn pieces(&self) -> &[(ExactScalar, ExactScalar)] {
        &self.pieces
    }

    pub fn contains(&self, x: &ExactScalar) -> bool {
        self.pieces.iter().any(|(a, b)| a <= x && x <= b)
    }

    /// Convex hull `[min, max]`, if nonempty.
    pub fn hull(&self) -> Option<(ExactScalar, ExactScalar)> {
        Some((self.pieces.first()?.0.clone(), self.pieces.last()?.1.clone()))
    }

    /// Whether the open interval `(lo, hi)` meets the set.
    pub fn meets_open(&self, lo: &ExactScalar, hi: &ExactScalar) -> bool {
        self.pieces.iter().any(|(a, b)| a < hi && b > lo && lo < hi)
    }

    /// A point of the set in `[lo, hi]` outside the closed `[hole_lo, hole_hi]`.
    pub fn witness(
        &self,
        lo: &ExactScalar,
        hi: &ExactScalar,
        hole_lo: &ExactScalar,
        hole_hi: &ExactScalar,
    ) -> Option<ExactScalar> {
        for (a, b) in &self.pieces {
            let p = a.max(lo);
            let q = b.min(hi);
            if p > q {
                continue;
            }
            if p < hole_lo {
                return Some(p.clone());
            }
            if q > hole_hi {
                return Some(q.clone());
            }
        }
        None
    }
}

/// Checked samples with their witnesses, plus samples outside the
/// preconditions (`x ∉ K` or `r ∉ (0, r0]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleVerdict<S> {
    pub results: Vec<(S, Option<ExactScalar>)>,
    pub skipped: usize,
}

impl<S> SampleVerdict<S> {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|(_, w)| w.is_some())
    }

    pub fn first_failure(&self) -> Option<&S> {
        self.results.iter().find(|(_, w)| w.is_none()).map(|(s, _)| s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffuseSample {
    pub x: ExactScalar,
    pub y: ExactScalar,
    pub r: ExactScalar,
}

fn in_range(r: &ExactScalar, r0: &ExactScalar) -> bool {
    r.is_positive() && r <= r0
}

fn annulus_check<S: Clone>(
    k: &PointSet,
    samples: &[S],
    keep: impl Fn(&S) -> bool,
    shape: impl Fn(&S) -> (ExactScalar, ExactScalar, ExactScalar, ExactScalar),
) -> SampleVerdict<S> {
    let mut results = Vec::new();
    let mut skipped = 0;
    for s in samples {
        if !keep(s) {
            skipped += 1;
            continue;
        }
        let (x, outer, y, inner) = shape(s);
        let w = k.witness(&(&x - &outer), &(&x + &outer), &(&y - &inner), &(&y + &inner));
        results.push((s.clone(), w));
    }
    SampleVerdict { results, skipped }
}

/// `(B(x,(1-β)r) \ B(y,2βr)) ∩ K ≠ ∅` for each sample.
pub fn diffuse_check(
    k: &PointSet,
    beta: &ExactScalar,
    r0: &ExactScalar,
    samples: &[DiffuseSample],
) -> SampleVerdict<DiffuseSample> {
    let one = int(1);
    annulus_check(
        k,
        samples,
        |s| k.contains(&s.x) && in_range(&s.r, r0),
        |s| (s.x.clone(), (&one - beta) * &s.r, s.y.clone(), int(2) * beta * &s.r),
    )
}

/// The alternative form `(B(x,r) \ B(y,βr)) ∩ K ≠ ∅`.
pub fn diffuse_check_alt(
    k: &PointSet,
    beta: &ExactScalar,
    r0: &ExactScalar,
    samples: &[DiffuseSample],
) -> SampleVerdict<DiffuseSample> {
    annulus_check(
        k,
        samples,
        |s| k.contains(&s.x) && in_range(&s.r, r0),
        |s| (s.x.clone(), s.r.clone(), s.y.clone(), beta * &s.r),
    )
}

/// `(B(x,r) \ B(x,cr)) ∩ K ≠ ∅` for each `(x, r)`.
pub fn uniformly_perfect_check(
    k: &PointSet,
    c: &ExactScalar,
    r0: &ExactScalar,
    samples: &[(ExactScalar, ExactScalar)],
) -> SampleVerdict<(ExactScalar, ExactScalar)> {
    annulus_check(
        k,
        samples,
        |(x, r)| k.contains(x) && in_range(r, r0),
        |(x, r)| (x.clone(), r.clone(), x.clone(), c * r),
    )
}

/// Two children per ball on the `1/β`-adic grid over the hull of `K`, each
/// with interior meeting `K`, the second closed-disjoint from the first when
/// possible.
pub fn diffuse_to_regular(k: &PointSet, beta: &ExactScalar, depth: usize) -> Result<CantorConstruction> {
    let inv = beta.recip();
    if !beta.is_positive() || !inv.is_integer() || inv < int(2) {
        return Err(Error::InvalidParameter(format!(
            "beta={} is not 1/R for an integer R >= 2",
            format_exact(beta)
        )));
    }
    let modulus = inv
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("R overflows".into()))?;
    let (lo, hi) = k.hull().ok_or_else(|| Error::WitnessNotFound("empty set".into()))?;
    if lo == hi {
        return Err(Error::WitnessNotFound(format!(
            "{{{}}} is a single point",
            format_exact(&lo)
        )));
    }
    let b0 = Ball::from_endpoints(lo, hi)?;
    let split = StandardSplitting::real_line();
    let c = CantorConstruction::new(b0, modulus, BudgetTable::diagonal(int(modulus as i64 - 2), depth))?;
    c.build(depth, |c, n| {
        let mut out = Vec::new();
        for b in c.survivors(n)? {
            let kids = split.split(b, modulus)?;
            let live: Vec<&Ball> = kids
                .iter()
                .filter(|kid| {
                    let (a, z) = kid.endpoints().expect("interval");
                    k.meets_open(&a, &z)
                })
                .collect();
            let Some(first) = live.first() else {
                return Err(Error::WitnessNotFound(b.to_string()));
            };
            let second = live[1..]
                .iter()
                .find(|kid| kid.disjoint(first))
                .or_else(|| live.get(1))
                .ok_or_else(|| Error::WitnessNotFound(b.to_string()))?;
            let removed: Vec<Ball> = kids
                .iter()
                .filter(|kid| *kid != *first && *kid != *second)
                .cloned()
                .collect();
            if !removed.is_empty() {
                out.push(Removal {
                    m: n,
                    parent: b.clone(),
                    removed,
                });
            }
        }
        Ok(out)
    })
}

/// `N = ⌊(β²/(3γ))^c⌋`, the branching of [`regular_from_bob`].
pub fn regular_branching(beta: &ExactScalar, gamma: &ExactScalar, cexp: &ExactScalar) -> Result<u64> {
    let base = beta * beta / (int(3) * gamma);
    let n = pow_exact(&base, cexp, DEFAULT_PRECISION).floor()?;
    n.to_u64().ok_or_else(|| Error::InvalidParameter("N overflows".into()))
}

/// `{x : d(A, x) ≤ d}` as a ball.
pub fn neighborhood(a: &Ball, d: &ExactScalar) -> Result<Ball> {
    match a {
        Ball::Interval { center, radius } => Ball::interval(center.clone(), radius + d),
        Ball::Cylinder { word } => {
            // ultrametric: the ball of radius d around any point of A, or A itself
            let mut j = 0usize;
            while pow2(-(j as i64)) > *d {
                j += 1;
            }
            Ok(Ball::cylinder(word[..j.min(word.len())].to_vec()))
        }
    }
}

/// Bob's good-turn balls, level by level, and the branching `N`.
#[derive(Clone, Debug)]
pub struct RegularTree {
    pub levels: Vec<Vec<Ball>>,
    pub branching: u64,
    pub gamma: ExactScalar,
}

impl RegularTree {
    pub fn profile(&self) -> Result<ScaleProfile> {
        ScaleProfile::from_levels(&self.levels)
    }

    /// `log N / -log γ`.
    pub fn target_dimension(&self) -> f64 {
        (self.branching as f64).ln() / -to_f64(&self.gamma).ln()
    }
}

/// Cap on Bob moves between two good turns.
const GOOD_TURN_LIMIT: usize = 4096;

fn bob_move(bob: &dyn Strategy, h: &mut Transcript) -> Result<Ball> {
    let turn = h.next_turn();
    let mv = bob.respond(h).map_err(|e| Error::StrategyFault {
        player: Player::Bob,
        turn,
        reason: e.to_string(),
    })?;
    let Move::BobBall(ball) = mv.clone() else {
        return Err(Error::StrategyFault {
            player: Player::Bob,
            turn,
            reason: format!("{} is not a ball", mv.shape()),
        });
    };
    match h.push(mv)? {
        Verdict::Legal => Ok(ball),
        Verdict::Illegal(r) => Err(Error::StrategyFault {
            player: Player::Bob,
            turn,
            reason: r,
        }),
        Verdict::DefaultWinAlice(r) => Err(Error::ChildrenCollide(format!("turn {turn}: {r}"))),
    }
}

fn alice_probe(h: &mut Transcript, collection: Vec<Ball>) -> Result<()> {
    match h.push(Move::AliceCollection(collection))? {
        Verdict::Legal => Ok(()),
        v => Err(Error::IllegalProbe(format!("turn {}: {v}", h.next_turn()))),
    }
}

/// Replays `bob` in the `(c, β)` potential game against neighbourhood
/// deletions, collecting `N` disjoint children per good turn.
pub fn regular_from_bob(
    bob: &dyn Strategy,
    space: SpaceTag,
    beta: &ExactScalar,
    gamma: &ExactScalar,
    cexp: &ExactScalar,
    depth: usize,
) -> Result<RegularTree> {
    if !gamma.is_positive() || *gamma >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "gamma={} must lie in (0,1)",
            format_exact(gamma)
        )));
    }
    let branching = regular_branching(beta, gamma, cexp)?;
    if branching == 0 {
        return Err(Error::InvalidParameter("N = 0: the parameters give no children".into()));
    }
    let mut root = Transcript::new(GameConfig::potential(space, cexp.clone(), beta.clone())?);
    let b0 = bob_move(bob, &mut root)?;
    let rho0 = b0.radius();
    let mut levels = vec![vec![b0.clone()]];
    let mut frontier = vec![root];
    for n in 0..depth {
        let scale = num_traits::pow(gamma.clone(), n + 1);
        let reach = &scale * b0.diameter();
        let threshold = &scale * &rho0;
        let mut next = Vec::new();
        for t in &frontier {
            let mut children: Vec<Ball> = Vec::new();
            for _ in 0..branching {
                let mut h = t.clone();
                let probe = children
                    .iter()
                    .map(|g| neighborhood(g, &reach))
                    .collect::<Result<Vec<_>>>()?;
                alice_probe(&mut h, probe)?;
                let mut g = bob_move(bob, &mut h)?;
                let mut moves = 1;
                while g.radius() > threshold {
                    if moves >= GOOD_TURN_LIMIT {
                        return Err(Error::InvalidParameter(format!(
                            "Bob did not reach radius {} in {GOOD_TURN_LIMIT} moves",
                            format_exact(&threshold)
                        )));
                    }
                    alice_probe(&mut h, Vec::new())?;
                    g = bob_move(bob, &mut h)?;
                    moves += 1;
                }
                if let Some(old) = children.iter().find(|c| !c.disjoint(&g)) {
                    return Err(Error::ChildrenCollide(format!("{g} meets {old}")));
                }
                children.push(g);
                next.push(h);
            }
        }
        let mut level: Vec<Ball> = next
            .iter()
            .map(|h| h.last_bob_ball().expect("bob moved").clone())
            .collect();
        level.sort();
        levels.push(level);
        frontier = next;
    }
    Ok(RegularTree {
        levels,
        branching,
        gamma: gamma.clone(),
    })
}

/// A potential-game Bob on the line playing radius `β·rad` balls on a grid,
/// preferring balls that miss every deletion and otherwise the least covered.
#[derive(Clone, Debug)]
pub struct AvoidingBob {
    b0: Ball,
    grid: u32,
}

impl AvoidingBob {
    pub fn new(b0: Ball) -> Self {
        AvoidingBob { b0, grid: 16 }
    }

    pub fn with_grid(mut self, grid: u32) -> Self {
        self.grid = grid.max(1);
        self
    }
}

fn overlap(a: &Ball, b: &Ball) -> ExactScalar {
    let ((a0, a1), (b0, b1)) = (a.endpoints().expect("interval"), b.endpoints().expect("interval"));
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if hi > lo {
        hi - lo
    } else {
        int(0)
    }
}

impl Strategy for AvoidingBob {
    fn name(&self) -> &str {
        "avoiding-bob"
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let Some(current) = t.last_bob_ball() else {
            return Ok(Move::BobBall(self.b0.clone()));
        };
        let (lo, hi) = current
            .endpoints()
            .ok_or_else(|| Error::WrongSpace(current.to_string()))?;
        let beta = t
            .config()
            .beta()
            .cloned()
            .ok_or_else(|| Error::InvalidParameter("game has no beta".into()))?;
        let r = &beta * current.radius();
        let deleted: Vec<&Ball> = t.alice_moves().into_iter().flat_map(|m| m.balls()).collect();
        let span = &hi - &lo - int(2) * &r;
        let mut best: Option<(ExactScalar, Ball)> = None;
        for k in 0..=self.grid {
            let c = &lo + &r + &span * rat(k as i64, self.grid as i64);
            let ball = Ball::interval(c, r.clone())?;
            let covered: ExactScalar = deleted.iter().map(|d| overlap(&ball, d)).sum();
            let free = deleted.iter().all(|d| ball.disjoint(d));
            if free {
                return Ok(Move::BobBall(ball));
            }
            if best.as_ref().is_none_or(|(c0, _)| covered < *c0) {
                best = Some((covered, ball));
            }
        }
        Ok(Move::BobBall(best.expect("grid is nonempty").1))
    }
}

/// Bracket of the root of `λ^s + 2γ^s = 1` in `[0, 1]`, width at most `10^{-9}`.
pub fn ifs_similarity_dim(lambda: &ExactScalar, gamma: &ExactScalar) -> Result<(ExactScalar, ExactScalar)> {
    let unit = |x: &ExactScalar| x.is_positive() && *x < int(1);
    if !unit(lambda) || !unit(gamma) {
        return Err(Error::InvalidParameter("lambda and gamma must lie in (0,1)".into()));
    }
    let value = |s: &ExactScalar| -> GradedScalar {
        pow_exact(lambda, s, DEFAULT_PRECISION)
            .add(&pow_exact(gamma, s, DEFAULT_PRECISION).scale(&int(2)))
            .rounded(DEFAULT_PRECISION)
    };
    let one = int(1);
    let (mut lo, mut hi) = (int(0), int(1));
    let at_one = value(&hi);
    if at_one.lower() > &one {
        return Err(Error::NoRootInUnitInterval);
    }
    if at_one.is_exact() && at_one.lower() == &one {
        return Ok((hi.clone(), hi));
    }
    let width = rat(1, 1_000_000_000);
    while &hi - &lo > width {
        let mid = (&lo + &hi) / int(2);
        let v = value(&mid);
        if v.lower() > &one {
            lo = mid;
        } else if v.upper() < &one {
            hi = mid;
        } else if v.is_exact() {
            return Ok((mid.clone(), mid));
        } else {
            return Err(Error::NumericallyAmbiguous(format!(
                "value at s={} straddles 1",
                format_exact(&mid)
            )));
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{full_construction, golden_mean, middle_thirds};
    use proptest::prelude::*;

    fn iv(lo: ExactScalar, hi: ExactScalar) -> Ball {
        Ball::from_endpoints(lo, hi).unwrap()
    }

    #[test]
    fn packing_counts() {
        let b = Ball::unit_interval();
        let p = separated_packing(&b, &rat(1, 10), &int(1));
        let centres: Vec<ExactScalar> = p.iter().map(|q| q.center().unwrap().clone()).collect();
        assert_eq!(centres, (0..7).map(|k| rat(1, 20) + rat(3 * k, 20)).collect::<Vec<_>>());
        assert_eq!(separated_packing(&b, &rat(1, 20), &int(1)).len(), 13);
        assert_eq!(separated_packing(&b, &rat(1, 40), &int(1)).len(), 27);
        assert_eq!(separated_packing(&b, &rat(1, 2), &int(1)).len(), 1);
        assert_eq!(packing_constant(&b, &rat(1, 10)), rat(7, 10));
    }

    #[test]
    fn packing_count_scaling() {
        let b = Ball::unit_interval();
        for k in 2..9 {
            let alpha = pow2(-k);
            let n = separated_packing(&b, &alpha, &int(1)).len() as i64;
            let half = separated_packing(&b, &(&alpha / int(2)), &int(1)).len() as i64;
            assert!(half >= 2 * n - 2, "alpha=2^-{k}: {n} then {half}");
            // within a factor 2 of α^{-1}
            let scaled = int(n) * &alpha;
            assert!(scaled >= rat(1, 6) && scaled <= int(2), "{scaled}");
        }
    }

    #[test]
    fn profile_validation_and_csv() {
        assert!(ScaleProfile::new(vec![(rat(1, 2), 2), (rat(1, 2), 4)]).is_err());
        assert!(ScaleProfile::new(vec![(rat(1, 2), 0)]).is_err());
        let p = ScaleProfile::from_construction(&middle_thirds(3).unwrap(), 0..=3).unwrap();
        assert_eq!(p.pairs()[3], (rat(1, 54), 8));
        let csv = p.to_csv();
        assert!(csv.starts_with("r_num,r_den,count\n1,2,1\n"));
        assert_eq!(ScaleProfile::from_csv(&csv).unwrap(), p);
        assert!(matches!(ScaleProfile::from_csv("1,2"), Err(Error::Parse(_))));
        assert!(matches!(
            box_dimension(&ScaleProfile::new(vec![(int(1), 1), (rat(1, 2), 2)]).unwrap()),
            Err(Error::TooFewScales(2))
        ));
    }

    #[test]
    fn box_dimension_of_standard_sets() {
        let thirds =
            box_dimension(&ScaleProfile::from_construction(&middle_thirds(10).unwrap(), 4..=10).unwrap()).unwrap();
        assert!((thirds.estimate - 2f64.ln() / 3f64.ln()).abs() < 0.02, "{thirds:?}");
        let full = full_construction(Ball::root_cylinder(), 2, 10).unwrap();
        let one = box_dimension(&ScaleProfile::from_construction(&full, 4..=10).unwrap()).unwrap();
        assert!((one.estimate - 1.0).abs() < 1e-12);
        let golden =
            box_dimension(&ScaleProfile::from_construction(&golden_mean(12).unwrap(), 4..=12).unwrap()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((golden.estimate - phi.ln() / 2f64.ln()).abs() < 0.03, "{golden:?}");
    }

    #[test]
    fn uniform_shift_is_one_regular() {
        let points: Vec<Ball> = ["0110100110010110", "1111111111111111", "0000000000000001"]
            .iter()
            .map(|w| Ball::cylinder_from_bits(w).unwrap())
            .collect();
        let scales: Vec<ExactScalar> = (0..=12).map(|k| pow2(-k)).collect();
        let cert = ahlfors_check(&UniformShiftMeasure, &int(1), &points, &scales, &int(16)).unwrap();
        assert_eq!(cert.c, int(1));
        let wrong = ahlfors_check(&UniformShiftMeasure, &rat(1, 2), &points, &scales, &int(16));
        assert!(matches!(wrong, Err(Error::NotRegularAtSample { .. })), "{wrong:?}");
    }

    #[test]
    fn middle_thirds_measure_is_regular() {
        let c = middle_thirds(8).unwrap();
        let mu = SurvivorMeasure::new(&c, 8).unwrap();
        assert_eq!(mu.leaves().len(), 256);
        assert!(mu.leaves().iter().all(|(_, m)| *m == rat(1, 256)));
        let points: Vec<Ball> = c.survivors(8).unwrap().iter().step_by(17).cloned().collect();
        let scales: Vec<ExactScalar> = (1..=5).map(|n| rat(1, 3i64.pow(n))).collect();
        let delta = (2f64.ln() / 3f64.ln() * 1e12).round() as i64;
        let cert = ahlfors_check(&mu, &rat(delta, 1_000_000_000_000), &points, &scales, &int(16)).unwrap();
        assert!(cert.c <= int(4), "{}", cert.c);
    }

    fn samples(n: usize, seed: u64) -> Vec<DiffuseSample> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| DiffuseSample {
                x: rat(rng.gen_range(0..=1000), 1000),
                y: rat(rng.gen_range(-500..=1500), 1000),
                r: rat(rng.gen_range(1..=1000), 4000),
            })
            .collect()
    }

    #[test]
    fn unit_interval_is_diffuse() {
        let k = PointSet::new(vec![(int(0), int(1))]).unwrap();
        let s = samples(1000, 3);
        let v = diffuse_check(&k, &rat(1, 8), &rat(1, 4), &s);
        assert_eq!(v.results.len(), 1000);
        assert!(v.passed(), "{:?}", v.first_failure());
        for (smp, w) in &v.results {
            let z = w.as_ref().unwrap();
            assert!(k.contains(z));
            assert!((z - &smp.x).abs() <= rat(7, 8) * &smp.r);
            assert!((z - &smp.y).abs() > rat(1, 4) * &smp.r);
        }
    }

    #[test]
    fn single_point_is_not_diffuse() {
        let k = PointSet::point(rat(1, 3));
        let s = vec![DiffuseSample {
            x: rat(1, 3),
            y: rat(1, 3),
            r: rat(1, 100),
        }];
        let v = diffuse_check(&k, &rat(1, 8), &int(1), &s);
        assert_eq!(v.first_failure(), Some(&s[0]));
        assert!(matches!(
            diffuse_to_regular(&k, &rat(1, 4), 3),
            Err(Error::WitnessNotFound(_))
        ));
    }

    #[test]
    fn alternative_diffuse_form_agrees() {
        let c = middle_thirds(7).unwrap();
        let mut pieces = PointSet::from_survivors(&c, 7).unwrap().pieces().to_vec();
        pieces.push((int(-1), int(-1)));
        let k = PointSet::new(pieces).unwrap();
        let beta = rat(1, 3);
        let beta2 = &beta / (int(2) + &beta);
        let stretch = int(1) + &beta / int(2);
        let mut s = samples(2000, 9);
        for (i, smp) in s.iter_mut().enumerate() {
            let (a, _) = &k.pieces()[i % k.pieces().len()];
            smp.x = a.clone();
            if i % 4 == 0 {
                smp.y = a.clone();
            }
        }
        let alt = diffuse_check_alt(&k, &beta, &int(1), &s);
        let scaled: Vec<DiffuseSample> = s
            .iter()
            .map(|d| DiffuseSample {
                r: &d.r * &stretch,
                ..d.clone()
            })
            .collect();
        let std = diffuse_check(&k, &beta2, &int(2), &scaled);
        assert_eq!(alt.results.len(), std.results.len());
        let mut fails = 0;
        for ((_, a), (_, b)) in alt.results.iter().zip(&std.results) {
            assert_eq!(a.is_some(), b.is_some());
            fails += a.is_none() as usize;
        }
        assert!(fails > 0 && fails < alt.results.len());
    }

    #[test]
    fn uniformly_perfect_examples() {
        let unit = PointSet::new(vec![(int(0), int(1))]).unwrap();
        let pts: Vec<(ExactScalar, ExactScalar)> = (0..=20)
            .flat_map(|i| (1..=8).map(move |j| (rat(i, 20), rat(j, 16))))
            .collect();
        assert!(uniformly_perfect_check(&unit, &rat(1, 2), &int(1), &pts).passed());
        let two = PointSet::new(vec![(int(0), int(0)), (int(1), int(1))]).unwrap();
        let v = uniformly_perfect_check(&two, &rat(1, 2), &int(1), &[(int(0), rat(1, 2)), (int(0), int(1))]);
        assert_eq!(v.first_failure(), Some(&(int(0), rat(1, 2))));
        assert!(v.results[1].1.is_some());
        let thirds = PointSet::from_survivors(&middle_thirds(6).unwrap(), 6).unwrap();
        let gap = uniformly_perfect_check(&thirds, &rat(9, 10), &int(1), &[(int(0), rat(1, 2))]);
        assert!(!gap.passed());
        assert!(uniformly_perfect_check(&thirds, &rat(1, 4), &int(1), &[(int(0), rat(1, 2))]).passed());
    }

    #[test]
    fn diffuse_to_regular_dimensions() {
        let k = PointSet::new(vec![(int(0), int(1))]).unwrap();
        let quarter = diffuse_to_regular(&k, &rat(1, 4), 8).unwrap();
        assert_eq!(quarter.survivors(8).unwrap().len(), 256);
        let est = box_dimension(&ScaleProfile::from_construction(&quarter, 2..=8).unwrap()).unwrap();
        assert!((est.estimate - 0.5).abs() < 0.05, "{est:?}");
        let kids = quarter.survivors(1).unwrap();
        assert!(kids[0].disjoint(&kids[1]));
        let half = diffuse_to_regular(&k, &rat(1, 2), 8).unwrap();
        let est = box_dimension(&ScaleProfile::from_construction(&half, 2..=8).unwrap()).unwrap();
        assert!((est.estimate - 1.0).abs() < 0.05, "{est:?}");
        assert!(diffuse_to_regular(&k, &rat(2, 5), 2).is_err());
    }

    #[test]
    fn branching_numbers() {
        assert_eq!(regular_branching(&rat(1, 2), &rat(1, 48), &int(1)).unwrap(), 4);
        assert_eq!(regular_branching(&rat(1, 2), &rat(1, 100), &rat(1, 2)).unwrap(), 2);
        assert_eq!(regular_branching(&rat(1, 2), &rat(1, 4), &int(1)).unwrap(), 0);
        let bob = AvoidingBob::new(Ball::unit_interval());
        let none = regular_from_bob(&bob, SpaceTag::RealLine, &rat(1, 2), &rat(1, 4), &int(1), 2);
        assert!(matches!(none, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn neighborhoods() {
        assert_eq!(
            neighborhood(&iv(int(0), int(1)), &rat(1, 4)).unwrap(),
            iv(rat(-1, 4), rat(5, 4))
        );
        let a = Ball::cylinder_from_bits("0110").unwrap();
        assert_eq!(
            neighborhood(&a, &rat(1, 4)).unwrap(),
            Ball::cylinder_from_bits("01").unwrap()
        );
        assert_eq!(
            neighborhood(&a, &rat(1, 3)).unwrap(),
            Ball::cylinder_from_bits("01").unwrap()
        );
        assert_eq!(neighborhood(&a, &rat(1, 64)).unwrap(), a);
    }

    #[test]
    fn regular_tree_from_avoiding_bob() {
        let bob = AvoidingBob::new(Ball::unit_interval());
        let tree = regular_from_bob(&bob, SpaceTag::RealLine, &rat(1, 2), &rat(1, 48), &int(1), 3).unwrap();
        assert_eq!(tree.branching, 4);
        let counts: Vec<usize> = tree.levels.iter().map(Vec::len).collect();
        assert_eq!(counts, vec![1, 4, 16, 64]);
        for (n, level) in tree.levels.iter().enumerate() {
            let cap = num_traits::pow(rat(1, 48), n) * rat(1, 2);
            for (i, b) in level.iter().enumerate() {
                assert!(b.radius() <= cap && b.radius() > rat(1, 2) * &cap);
                for other in &level[i + 1..] {
                    assert!(b.disjoint(other));
                }
            }
        }
        let est = box_dimension(&tree.profile().unwrap()).unwrap();
        assert!(
            (est.estimate - tree.target_dimension()).abs() < 0.05,
            "{est:?} vs {}",
            tree.target_dimension()
        );
    }

    #[test]
    fn similarity_dimension_brackets() {
        let (lo, hi) = ifs_similarity_dim(&rat(2, 3), &rat(1, 128)).unwrap();
        assert!(&hi - &lo <= rat(1, 1_000_000_000));
        assert!(hi < rat(1, 2));
        // independent f64 bisection
        let f = |s: f64| (2.0f64 / 3.0).powf(s) + 2.0 * (1.0f64 / 128.0).powf(s) - 1.0;
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..60 {
            let m = (a + b) / 2.0;
            if f(m) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        assert!(to_f64(&lo) - 1e-12 <= a && b <= to_f64(&hi) + 1e-12);
        let (lo, hi) = ifs_similarity_dim(&rat(1, 4), &rat(1, 16)).unwrap();
        assert!(lo <= rat(1, 2) && rat(1, 2) <= hi);
        assert_eq!(ifs_similarity_dim(&rat(1, 3), &rat(1, 3)).unwrap(), (int(1), int(1)));
        assert!(matches!(
            ifs_similarity_dim(&rat(1, 2), &rat(1, 3)),
            Err(Error::NoRootInUnitInterval)
        ));
    }

    proptest! {
        #[test]
        fn witnesses_lie_in_the_annulus(x in 0i64..100, y in -50i64..150, r in 1i64..100, b in 1i64..8) {
            let k = PointSet::new(vec![(int(0), rat(1, 3)), (rat(2, 3), int(1))]).unwrap();
            let beta = rat(b, 20);
            let s = DiffuseSample { x: rat(x, 100), y: rat(y, 100), r: rat(r, 200) };
            let v = diffuse_check(&k, &beta, &int(1), std::slice::from_ref(&s));
            if let Some((_, Some(z))) = v.results.first() {
                prop_assert!(k.contains(z));
                prop_assert!((z - &s.x).abs() <= (int(1) - &beta) * &s.r);
                prop_assert!((z - &s.y).abs() > int(2) * &beta * &s.r);
            }
        }
    }
}
