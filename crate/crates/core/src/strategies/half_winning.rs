//! Cantor sets inside `1/2`-winning sets, built by playing many games as Bob
//! against one positional strategy.

use std::collections::BTreeMap;

use num_traits::Signed;

use crate::cantor::{BudgetTable, CantorConstruction, Removal};
use crate::error::{Error, Result};
use crate::scalar::{format_exact, int, pow_exact, rat, ExactScalar, GradedScalar, DEFAULT_PRECISION};
use crate::space::{scale_ball, Ball, SpaceTag, SplittingStructure, StandardSplitting};
use crate::strategies::{FChain, PositionalStrategy};

/// Result of [`subcover_two`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subcover {
    /// One or two members of the cover.
    pub chosen: Vec<Ball>,
    /// The grid cell `(x_{j-1}, x_j)` the subcover leaves open, if `j > 0`.
    pub gap: Option<(ExactScalar, ExactScalar)>,
    /// The part of the ball actually left uncovered, as an open interval.
    pub uncovered: Option<(ExactScalar, ExactScalar)>,
    /// Number of grid steps `n`.
    pub steps: usize,
}

fn endpoints(b: &Ball) -> Result<(ExactScalar, ExactScalar)> {
    b.endpoints().ok_or_else(|| Error::WrongSpace(b.to_string()))
}

/// A point of `[lo, hi]` outside every member of `cover`, if any.
fn uncovered_point(lo: &ExactScalar, hi: &ExactScalar, cover: &[Ball]) -> Result<Option<ExactScalar>> {
    let mut spans = cover.iter().map(endpoints).collect::<Result<Vec<_>>>()?;
    spans.sort();
    let mut idx = 0;
    let mut reach: Option<ExactScalar> = None;
    loop {
        let cur = reach.clone().unwrap_or_else(|| lo.clone());
        let mut best = reach.clone();
        while idx < spans.len() && spans[idx].0 <= cur {
            if best.as_ref().is_none_or(|b| spans[idx].1 > *b) {
                best = Some(spans[idx].1.clone());
            }
            idx += 1;
        }
        match (&reach, best) {
            (None, None) => return Ok(Some(lo.clone())),
            (None, Some(b)) if b < *lo => return Ok(Some(lo.clone())),
            (_, Some(b)) if b >= *hi => return Ok(None),
            (Some(r), Some(b)) if b == *r => {
                let next = spans.get(idx).map(|s| s.0.clone()).unwrap_or_else(|| hi.clone());
                let right = if next < *hi { next } else { hi.clone() };
                return Ok(Some((r + right) / int(2)));
            }
            (_, b) => reach = b,
        }
    }
}

/// At most two members of `cover` covering `b` except an open interval of
/// length at most `ε`.
///
/// `b` is sampled at `n + 1` evenly spaced points with `2·rad(b)/n ≤ ε`;
/// each sample takes the member through it reaching furthest right, so a
/// cover containing `b` returns `{b}`.
pub fn subcover_two(b: &Ball, cover: &[Ball], eps: &ExactScalar) -> Result<Subcover> {
    let (lo, hi) = endpoints(b)?;
    let rho = b.radius();
    if !eps.is_positive() || *eps >= rho {
        return Err(Error::InvalidParameter(format!(
            "eps={} must lie in (0, rad(b))",
            format_exact(eps)
        )));
    }
    if let Some(w) = cover
        .iter()
        .find(|w| w.space() != SpaceTag::RealLine || w.radius() != rho)
    {
        return Err(Error::InvalidParameter(format!(
            "{w} does not have radius {}",
            format_exact(&rho)
        )));
    }
    if let Some(x) = uncovered_point(&lo, &hi, cover)? {
        return Err(Error::NotACover(format_exact(&x)));
    }
    let span = &hi - &lo;
    let steps = (&span / eps).ceil().to_integer();
    let steps: usize = steps
        .try_into()
        .map_err(|_| Error::InvalidParameter("eps is too small".into()))?;
    let step = &span / int(steps as i64);
    let point = |i: usize| &lo + &step * int(i as i64);
    let mut sorted: Vec<&Ball> = cover.iter().collect();
    sorted.sort();
    sorted.dedup();
    // the member through x reaching furthest right, lowest first on ties
    let member = |x: &ExactScalar| -> Result<Ball> {
        let mut best: Option<&Ball> = None;
        for w in sorted.iter().filter(|w| w.contains_point(x)) {
            if best.is_none_or(|b| w.center() > b.center()) {
                best = Some(w);
            }
        }
        best.cloned().ok_or_else(|| Error::NotACover(format_exact(x)))
    };
    let mut prev: Option<Ball> = None;
    for i in 0..=steps {
        let w = member(&point(i))?;
        if w.contains_point(&hi) {
            let Some(left) = prev else {
                return Ok(Subcover {
                    chosen: vec![w],
                    gap: None,
                    uncovered: None,
                    steps,
                });
            };
            let (_, left_hi) = endpoints(&left)?;
            let (right_lo, _) = endpoints(&w)?;
            let uncovered = (left_hi < right_lo).then_some((left_hi, right_lo));
            return Ok(Subcover {
                chosen: vec![left, w],
                gap: Some((point(i - 1), point(i))),
                uncovered,
                steps,
            });
        }
        prev = Some(w);
    }
    unreachable!("the last sample is the right endpoint itself")
}

/// A local `(b₀, R, 10)` construction with an `F`-chain for every survivor.
#[derive(Clone, Debug)]
pub struct HalfWinningConstruction {
    pub construction: CantorConstruction,
    pub chains: BTreeMap<Ball, FChain>,
    /// Removal count per expanded node, by level.
    pub bad_counts: Vec<Vec<usize>>,
    pub modulus: u64,
}

impl HalfWinningConstruction {
    /// Checks every stored chain: classic `(1/2, 2/R)` laws along the chain,
    /// `rad(B_last) = 2R·rad(b)` and `b ⊆ (1-2/R)F(B_last)`.
    pub fn verify_chains(&self, f: &dyn PositionalStrategy) -> Result<bool> {
        let r = int(self.modulus as i64);
        let shrink = int(1) - int(2) / &r;
        for (b, chain) in &self.chains {
            if !chain.verify(f, &rat(1, 2), &(int(2) / &r))? {
                return Ok(false);
            }
            let Some(last) = chain.balls.last() else {
                if *b != *self.construction.b0() {
                    return Ok(false);
                }
                continue;
            };
            if last.radius() != int(2) * &r * b.radius() {
                return Ok(false);
            }
            if !scale_ball(&f.respond0(last)?, &shrink)?.contains_ball(b) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct NodeStep {
    removed: Vec<Ball>,
    /// Bob's ball `B_i` assigned to each surviving child.
    assigned: Vec<(Ball, Ball)>,
}

fn expand(f: &dyn PositionalStrategy, b: &Ball, modulus: u64) -> Result<NodeStep> {
    let (lo, _) = endpoints(b)?;
    let rho = b.radius();
    let r = int(modulus as i64);
    let pitch = &rho / (int(4) * &r);
    // Bob's openings of radius 2·rad(b) centred on an exact grid in b
    let mut answers: BTreeMap<Ball, Ball> = BTreeMap::new();
    for k in 0..=(8 * modulus as i64) {
        let bob = Ball::interval(&lo + &pitch * int(k), int(2) * &rho)?;
        let a = f.respond0(&bob)?;
        if a.radius() != rho || !bob.contains_ball(&a) {
            return Err(Error::InvalidParameter(format!(
                "{} answered {bob} with {a}, not a 1/2 move",
                f.name()
            )));
        }
        answers.entry(a).or_insert(bob);
    }
    let family: Vec<Ball> = answers.keys().cloned().collect();
    let sub = match subcover_two(b, &family, &(&rho / &r)) {
        Ok(s) => s,
        Err(Error::NotACover(x)) => return Err(Error::CoverSampleInsufficient(format!("{b} (uncovered {x})"))),
        Err(e) => return Err(e),
    };
    let left = sub.chosen[0].clone();
    let right = sub.chosen.last().cloned().expect("nonempty");
    let (bob_left, bob_right) = (answers[&left].clone(), answers[&right].clone());
    let shrink = int(1) - int(2) / &r;
    let (in_left, in_right) = (scale_ball(&left, &shrink)?, scale_ball(&right, &shrink)?);
    let mut removed = Vec::new();
    let mut assigned = Vec::new();
    for child in StandardSplitting::real_line().split(b, modulus)? {
        let (clo, chi) = endpoints(&child)?;
        let meets_gap = sub
            .uncovered
            .as_ref()
            .is_some_and(|(glo, ghi)| clo < *ghi && chi > *glo);
        let (l, rt) = (in_left.contains_ball(&child), in_right.contains_ball(&child));
        if meets_gap || !(l || rt) {
            removed.push(child);
            continue;
        }
        let bob = match (l, rt) {
            (true, true) => {
                if bob_left.center() <= bob_right.center() {
                    bob_left.clone()
                } else {
                    bob_right.clone()
                }
            }
            (true, false) => bob_left.clone(),
            _ => bob_right.clone(),
        };
        assigned.push((child, bob));
    }
    if removed.len() > 10 {
        return Err(Error::BadCountExceeded {
            ball: b.to_string(),
            count: removed.len(),
        });
    }
    Ok(NodeStep { removed, assigned })
}

/// Builds `depth` levels of a local `(b₀, R, 10)` Cantor set inside the set
/// a `1/2`-strategy `F` wins for in the `(1/2, 2/R)` game.
pub fn cantor_from_half_winning(
    f: &dyn PositionalStrategy,
    b0: Ball,
    modulus: u64,
    eps: &ExactScalar,
    depth: usize,
) -> Result<HalfWinningConstruction> {
    if b0.space() != SpaceTag::RealLine {
        return Err(Error::WrongSpace(b0.to_string()));
    }
    if !eps.is_positive() || *eps >= int(1) {
        return Err(Error::InvalidParameter(format!(
            "eps={} must lie in (0,1)",
            format_exact(eps)
        )));
    }
    let power = pow_exact(&int(modulus as i64), &(int(1) - eps), DEFAULT_PRECISION);
    if modulus < 3 || !GradedScalar::exact(int(10)).le_enc(&power)? {
        return Err(Error::GateFailed(format!(
            "R^(1-eps) = {power} is below 10 for R={modulus}"
        )));
    }
    let mut con = CantorConstruction::new(b0.clone(), modulus, BudgetTable::diagonal(int(10), depth))?;
    let name = f.name().to_string();
    let mut chains = BTreeMap::new();
    chains.insert(
        b0,
        FChain {
            strategy: name,
            balls: Vec::new(),
        },
    );
    let mut bad_counts = Vec::new();
    for level in 0..depth {
        let mut removals = Vec::new();
        let mut next = BTreeMap::new();
        let mut counts = Vec::new();
        for b in con.survivors(level)? {
            let step = expand(f, b, modulus)?;
            counts.push(step.removed.len());
            let chain: &FChain = &chains[b];
            for (child, bob) in step.assigned {
                let mut c = chain.clone();
                c.balls.push(bob);
                next.insert(child, c);
            }
            if !step.removed.is_empty() {
                removals.push(Removal {
                    m: level,
                    parent: b.clone(),
                    removed: step.removed,
                });
            }
        }
        con = con.extend_level(&removals)?;
        chains = next;
        bad_counts.push(counts);
    }
    Ok(HalfWinningConstruction {
        construction: con,
        chains,
        bad_counts,
        modulus,
    })
}
