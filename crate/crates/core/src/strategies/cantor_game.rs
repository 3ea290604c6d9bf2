//! Alice's Cantor-game strategy driven by a Cantor construction at modulus
//! `R^ℓ`, ranking Bob's children by a weighted count of removed balls.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::cantor::CantorConstruction;
use crate::engine::{Move, Strategy, Transcript};
use crate::error::{Error, Result};
use crate::scalar::{format_exact, int, pow2, pow_exact, rat, ExactScalar, GradedScalar, DEFAULT_PRECISION};
use crate::space::{Ball, SplittingStructure};

/// Parameters of the block strategy.
///
/// `eps1 = eps0 - eta/2` is the budget exponent the construction must meet,
/// `eps2 = eps0 - eta` the exponent in the potential weights, and `ell` the
/// block length: one construction level spans `ell` game turns.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorGameParams {
    pub eps0: ExactScalar,
    pub eta: ExactScalar,
    pub eps1: ExactScalar,
    pub eps2: ExactScalar,
    pub ell: usize,
    pub delta: ExactScalar,
    pub modulus: u64,
    /// `⌊R^{δ(1-ε0)}⌋`, the number of children Alice may remove per turn.
    pub removal_count: u64,
    /// `R^{δ(1-ε0+η)} / (⌊R^{δ(1-ε0)}⌋ + 1) < 1`
    pub eta_condition: bool,
    /// `(R^{δ(1-ε2)} / (⌊R^{δ(1-ε0)}⌋ + 1))^ℓ < 1/2`
    pub ell1_holds: bool,
    /// `R^{-ℓδη/2} < 1/3`
    pub ell2_holds: bool,
}

fn check_inputs(eps0: &ExactScalar, modulus: u64, delta: &ExactScalar) -> Result<()> {
    if !eps0.is_positive() || *eps0 > int(1) {
        return Err(Error::InvalidParameter(format!(
            "eps0={} must lie in (0, 1]",
            format_exact(eps0)
        )));
    }
    if modulus < 2 {
        return Err(Error::InvalidParameter(format!("R={modulus} must be at least 2")));
    }
    if !delta.is_positive() {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    Ok(())
}

fn r_pow(modulus: u64, expo: &ExactScalar) -> GradedScalar {
    pow_exact(&int(modulus as i64), expo, DEFAULT_PRECISION)
}

fn removal_count(eps0: &ExactScalar, modulus: u64, delta: &ExactScalar) -> Result<u64> {
    let k = r_pow(modulus, &(delta * (int(1) - eps0))).floor()?;
    k.to_u64()
        .ok_or_else(|| Error::InvalidParameter("removal count overflows".into()))
}

fn eta_condition(eps0: &ExactScalar, modulus: u64, delta: &ExactScalar, eta: &ExactScalar, k: u64) -> Result<bool> {
    r_pow(modulus, &(delta * (int(1) - eps0 + eta))).lt(&int(k as i64 + 1))
}

fn ell1(modulus: u64, delta: &ExactScalar, eps2: &ExactScalar, k: u64, ell: usize) -> Result<bool> {
    let lhs = r_pow(modulus, &(int(ell as i64) * delta * (int(1) - eps2)));
    let rhs = num_traits::pow(int(k as i64 + 1), ell) * rat(1, 2);
    lhs.lt(&rhs)
}

fn ell2(modulus: u64, delta: &ExactScalar, eta: &ExactScalar, ell: usize) -> Result<bool> {
    r_pow(modulus, &(-int(ell as i64) * delta * eta / int(2))).lt(&rat(1, 3))
}

impl CantorGameParams {
    /// Parameters for a caller-chosen `eta` and `ell`, with the three
    /// conditions evaluated and recorded rather than enforced.
    pub fn for_block_length(
        eps0: &ExactScalar,
        modulus: u64,
        delta: &ExactScalar,
        eta: &ExactScalar,
        ell: usize,
    ) -> Result<Self> {
        check_inputs(eps0, modulus, delta)?;
        if !eta.is_positive() || eta >= eps0 {
            return Err(Error::InvalidParameter(format!(
                "eta={} must lie in (0, eps0)",
                format_exact(eta)
            )));
        }
        if ell == 0 {
            return Err(Error::InvalidParameter("ell must be positive".into()));
        }
        let k = removal_count(eps0, modulus, delta)?;
        let eps2 = eps0 - eta;
        Ok(CantorGameParams {
            eps0: eps0.clone(),
            eta: eta.clone(),
            eps1: eps0 - eta / int(2),
            eps2: eps2.clone(),
            ell,
            delta: delta.clone(),
            modulus,
            removal_count: k,
            eta_condition: eta_condition(eps0, modulus, delta, eta, k)?,
            ell1_holds: ell1(modulus, delta, &eps2, k, ell)?,
            ell2_holds: ell2(modulus, delta, eta, ell)?,
        })
    }

    pub fn all_conditions_hold(&self) -> bool {
        self.eta_condition && self.ell1_holds && self.ell2_holds
    }

    /// `R^ℓ`, the modulus the driving construction must use.
    pub fn block_modulus(&self) -> Result<u64> {
        self.modulus
            .checked_pow(self.ell as u32)
            .ok_or_else(|| Error::InvalidParameter(format!("{}^{} overflows", self.modulus, self.ell)))
    }
}

const ETA_SCAN: i64 = 64;
const ELL_SCAN: usize = 100_000;

/// Largest dyadic `η = 2^-k < ε0` meeting the η condition, then the smallest
/// `ℓ` meeting both block-length conditions.
pub fn compute_cantor_game_params(eps0: &ExactScalar, modulus: u64, delta: &ExactScalar) -> Result<CantorGameParams> {
    check_inputs(eps0, modulus, delta)?;
    let k = removal_count(eps0, modulus, delta)?;
    let mut eta = None;
    for j in 1..=ETA_SCAN {
        let candidate = pow2(-j);
        if candidate < *eps0 && eta_condition(eps0, modulus, delta, &candidate, k)? {
            eta = Some(candidate);
            break;
        }
    }
    let eta = eta.ok_or(Error::NoEta)?;
    let eps2 = eps0 - &eta;
    for ell in 1..=ELL_SCAN {
        if ell1(modulus, delta, &eps2, k, ell)? && ell2(modulus, delta, &eta, ell)? {
            return CantorGameParams::for_block_length(eps0, modulus, delta, &eta, ell);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no block length up to {ELL_SCAN} satisfies both conditions"
    )))
}

/// Which children Alice removes once they are ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalPolicy {
    /// Only children meeting some removed ball, at most `removal_count` of them.
    PositiveOnly,
    /// Always `removal_count` children (fewer only if Bob's ball has fewer).
    Full,
}

/// Weighted removal counts of one ball: `n -> #{A ∈ 𝒜_{m,n} : A meets B}`
/// summed over the admissible `m`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhiCounts(pub BTreeMap<usize, u64>);

impl PhiCounts {
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

pub struct CantorGameAlice {
    construction: Arc<CantorConstruction>,
    params: CantorGameParams,
    policy: RemovalPolicy,
    /// `weights[n] = R^{-(n+1)ℓδ(1-ε2)}`
    weights: Vec<GradedScalar>,
    /// Budget entries beyond the built depth, `(m, n, r_{m,n})`.
    tail: Vec<(usize, usize, ExactScalar)>,
}

/// Builds the strategy, checking the modulus and the ε1 budgets.
pub fn cantor_game_alice_from_construction(
    construction: CantorConstruction,
    params: CantorGameParams,
    policy: RemovalPolicy,
) -> Result<CantorGameAlice> {
    let block = params.block_modulus()?;
    if construction.modulus() != block {
        return Err(Error::ParameterMismatch(format!(
            "construction modulus {} is not R^ell = {}^{} = {block}",
            construction.modulus(),
            params.modulus,
            params.ell
        )));
    }
    let report = construction.validate_budgets(&params.eps1, DEFAULT_PRECISION)?;
    if let Some(v) = report.violations.first() {
        return Err(Error::BudgetViolated(format!(
            "r_({},{}) = {} exceeds {} at eps1={}",
            v.m,
            v.n,
            format_exact(&v.r),
            v.bound,
            format_exact(&params.eps1)
        )));
    }
    let built = construction.depth();
    let tail: Vec<(usize, usize, ExactScalar)> = construction
        .budgets()
        .iter()
        .filter(|(_, n, _)| *n >= built)
        .map(|(m, n, r)| (m, n, r.clone()))
        .collect();
    let top = tail.iter().map(|(_, n, _)| *n).max().unwrap_or(0).max(built);
    let unit = int(params.ell as i64) * &params.delta * (int(1) - &params.eps2);
    let weights = (0..=top)
        .map(|n| r_pow(params.modulus, &(-int(n as i64 + 1) * &unit)))
        .collect();
    Ok(CantorGameAlice {
        construction: Arc::new(construction),
        params,
        policy,
        weights,
        tail,
    })
}

impl CantorGameAlice {
    pub fn params(&self) -> &CantorGameParams {
        &self.params
    }

    pub fn construction(&self) -> &CantorConstruction {
        &self.construction
    }

    fn check_depth(&self, index: usize) -> Result<usize> {
        let k = index / self.params.ell;
        if k + 1 > self.construction.depth() {
            return Err(Error::DepthExhausted(index));
        }
        Ok(k)
    }

    /// Counts of removed balls in blocks `m ≤ ⌊index/ℓ⌋` whose interior meets `ball`.
    pub fn phi_counts(&self, index: usize, ball: &Ball) -> Result<PhiCounts> {
        let k = self.check_depth(index)?;
        let mut counts = BTreeMap::new();
        for (m, n, parent, removed) in self.construction.removal_blocks() {
            if m > k || !parent.interiors_meet(ball) {
                continue;
            }
            let hits = removed.iter().filter(|a| a.interiors_meet(ball)).count() as u64;
            if hits > 0 {
                *counts.entry(n).or_insert(0) += hits;
            }
        }
        Ok(PhiCounts(counts))
    }

    /// Enclosure of the weighted sum for `counts`, widened by the unbuilt tail.
    fn value(&self, index: usize, counts: &PhiCounts) -> GradedScalar {
        let k = index / self.params.ell;
        let mut total = GradedScalar::zero();
        for (n, c) in &counts.0 {
            total = total
                .add(&self.weights[*n].scale(&int(*c as i64)))
                .rounded(DEFAULT_PRECISION);
        }
        let mut slack = GradedScalar::zero();
        for (m, n, r) in &self.tail {
            if *m <= k {
                slack = slack.add(&self.weights[*n].scale(r)).rounded(DEFAULT_PRECISION);
            }
        }
        if slack.upper().is_zero() {
            total
        } else {
            GradedScalar::new(total.lower().clone(), total.upper() + slack.upper())
        }
    }

    /// The potential of `ball` seen from Bob's index `index`.
    pub fn phi(&self, index: usize, ball: &Ball) -> Result<GradedScalar> {
        let counts = self.phi_counts(index, ball)?;
        Ok(self.value(index, &counts))
    }

    /// `R^{-index·δ(1-ε2)}`, the bound the potential stays under at block starts.
    pub fn checkpoint_bound(&self, index: usize) -> GradedScalar {
        r_pow(
            self.params.modulus,
            &(-int(index as i64) * &self.params.delta * (int(1) - &self.params.eps2)),
        )
    }

    /// Children of `current` in removal order.
    pub fn ranked_children(&self, index: usize, current: &Ball) -> Result<Vec<(Ball, PhiCounts)>> {
        let kids = self.construction.structure().split(current, self.params.modulus)?;
        let mut scored = Vec::with_capacity(kids.len());
        for b in kids {
            let counts = self.phi_counts(index, &b)?;
            let value = self.value(index, &counts);
            scored.push((b, counts, value));
        }
        let mut failure = None;
        scored.sort_by(|x, y| {
            let by_value = if x.1 == y.1 {
                Ordering::Equal
            } else {
                match y.2.compare(&x.2) {
                    Ok(o) => o,
                    Err(e) => {
                        failure.get_or_insert(e);
                        Ordering::Equal
                    }
                }
            };
            by_value.then_with(|| x.0.cmp(&y.0))
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(scored.into_iter().map(|(b, c, _)| (b, c)).collect())
    }
}

impl Strategy for CantorGameAlice {
    fn name(&self) -> &str {
        "cantor-game-alice"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let p = &self.params;
        vec![
            ("eps0".into(), format_exact(&p.eps0)),
            ("eta".into(), format_exact(&p.eta)),
            ("eps1".into(), format_exact(&p.eps1)),
            ("eps2".into(), format_exact(&p.eps2)),
            ("ell".into(), p.ell.to_string()),
            ("delta".into(), format_exact(&p.delta)),
            ("R".into(), p.modulus.to_string()),
            ("removal_count".into(), p.removal_count.to_string()),
            ("policy".into(), format!("{:?}", self.policy)),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let bobs = t.bob_balls();
        let current = bobs.last().copied().ok_or(Error::EmptyTranscript)?;
        let index = bobs.len() - 1;
        let ranked = self.ranked_children(index, current)?;
        let take = self.params.removal_count as usize;
        let mut chosen: Vec<Ball> = match self.policy {
            RemovalPolicy::PositiveOnly => ranked
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .take(take)
                .map(|(b, _)| b)
                .collect(),
            RemovalPolicy::Full => ranked.into_iter().take(take).map(|(b, _)| b).collect(),
        };
        chosen.sort();
        Ok(Move::AliceRemovalSet(chosen))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{full_construction, golden_mean};
    use crate::engine::{exhaustive_bob, BobEnumerator, GameConfig, GameEnd};
    use crate::space::SpaceTag;

    #[test]
    fn params_for_binary_modulus() {
        let p = compute_cantor_game_params(&int(1), 2, &int(1)).unwrap();
        assert_eq!(p.eta, rat(1, 2));
        assert_eq!(p.eps2, rat(1, 2));
        assert_eq!(p.eps1, rat(3, 4));
        assert_eq!(p.removal_count, 1);
        assert_eq!(p.ell, 7);
        assert!(p.all_conditions_hold());
    }

    #[test]
    fn params_for_modulus_four() {
        let p = compute_cantor_game_params(&rat(1, 2), 4, &int(1)).unwrap();
        assert_eq!(p.eta, rat(1, 4));
        assert_eq!(p.removal_count, 2);
        assert_eq!(p.ell, 12);
    }

    #[test]
    fn ell_is_minimal() {
        let p = compute_cantor_game_params(&rat(1, 2), 4, &int(1)).unwrap();
        let below = CantorGameParams::for_block_length(&rat(1, 2), 4, &int(1), &p.eta, p.ell - 1).unwrap();
        assert!(!(below.ell1_holds && below.ell2_holds));
    }

    #[test]
    fn zero_eps_rejected() {
        assert!(matches!(
            compute_cantor_game_params(&int(0), 2, &int(1)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn no_eta_when_no_room() {
        // every dyadic in the scan is at least eps0
        let eps0 = pow2(-70);
        assert!(matches!(
            compute_cantor_game_params(&eps0, 3, &int(1)),
            Err(Error::NoEta)
        ));
    }

    fn golden_alice(depth: usize) -> CantorGameAlice {
        let p = CantorGameParams::for_block_length(&int(1), 2, &int(1), &rat(1, 2), 1).unwrap();
        cantor_game_alice_from_construction(golden_mean(depth).unwrap(), p, RemovalPolicy::PositiveOnly).unwrap()
    }

    fn cantor_cfg(eps: ExactScalar, r: u64) -> GameConfig {
        GameConfig::cantor(SpaceTag::Shift, eps, r).unwrap()
    }

    #[test]
    fn golden_mean_removes_the_one_after_a_one() {
        let alice = golden_alice(4);
        let mut t = Transcript::new(cantor_cfg(int(1), 2));
        t.push(Move::BobBall(Ball::cylinder_from_bits("").unwrap())).unwrap();
        assert_eq!(alice.respond(&t).unwrap(), Move::AliceRemovalSet(vec![]));
        t.push(Move::AliceRemovalSet(vec![])).unwrap();
        t.push(Move::BobBall(Ball::cylinder_from_bits("1").unwrap())).unwrap();
        assert_eq!(
            alice.respond(&t).unwrap(),
            Move::AliceRemovalSet(vec![Ball::cylinder_from_bits("11").unwrap()])
        );
    }

    fn all_avoid_11(len: usize) -> usize {
        (0..1u32 << len).filter(|w| w & (w >> 1) == 0).count()
    }

    #[test]
    fn golden_mean_exhaustive_depth_ten() {
        let alice = golden_alice(10);
        let c = golden_mean(10).unwrap();
        let ts = exhaustive_bob(
            cantor_cfg(int(1), 2),
            &alice,
            Ball::root_cylinder(),
            10,
            &BobEnumerator::ShiftTight,
        )
        .unwrap();
        assert_eq!(ts.len(), all_avoid_11(10));
        assert_eq!(ts.len(), 144);
        for t in &ts {
            assert_eq!(t.end(), GameEnd::Undecided);
            let out = t.last_bob_ball().unwrap();
            assert_eq!(out.depth(), Some(10));
            assert!(c.is_survivor(10, out), "{out} escaped the construction");
            for (i, b) in t.bob_balls().iter().enumerate().take(10) {
                let v = alice.phi(i, b).unwrap();
                assert!(v.lt_enc(&alice.checkpoint_bound(i)).unwrap(), "phi_{i}({b}) = {v}");
            }
        }
    }

    #[test]
    fn play_past_built_depth_is_reported() {
        let alice = golden_alice(2);
        let err = exhaustive_bob(
            cantor_cfg(int(1), 2),
            &alice,
            Ball::root_cylinder(),
            3,
            &BobEnumerator::ShiftTight,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::StrategyFault { ref reason, .. } if reason.contains("depth 2")),
            "{err}"
        );
    }

    #[test]
    fn zero_removal_construction_removes_lowest_children() {
        let p = CantorGameParams::for_block_length(&rat(1, 2), 4, &int(1), &rat(1, 4), 1).unwrap();
        assert_eq!(p.removal_count, 2);
        let c = full_construction(Ball::root_cylinder(), 4, 3).unwrap();
        let alice = cantor_game_alice_from_construction(c, p, RemovalPolicy::Full).unwrap();
        let mut t = Transcript::new(cantor_cfg(rat(1, 2), 4));
        t.push(Move::BobBall(Ball::root_cylinder())).unwrap();
        assert_eq!(
            alice.phi(0, &Ball::cylinder_from_bits("10").unwrap()).unwrap(),
            GradedScalar::zero()
        );
        let mv = alice.respond(&t).unwrap();
        let want: Vec<Ball> = ["00", "01"]
            .iter()
            .map(|w| Ball::cylinder_from_bits(w).unwrap())
            .collect();
        assert_eq!(mv, Move::AliceRemovalSet(want));
        let ts = exhaustive_bob(
            cantor_cfg(rat(1, 2), 4),
            &alice,
            Ball::root_cylinder(),
            3,
            &BobEnumerator::ShiftTight,
        )
        .unwrap();
        assert_eq!(ts.len(), 8);
        assert!(ts.iter().all(|t| t.end() == GameEnd::Undecided && t.rounds() == 3));
    }

    #[test]
    fn modulus_must_match_block() {
        let p = CantorGameParams::for_block_length(&int(1), 2, &int(1), &rat(1, 2), 2).unwrap();
        let err = cantor_game_alice_from_construction(golden_mean(3).unwrap(), p, RemovalPolicy::Full);
        assert!(matches!(err, Err(Error::ParameterMismatch(_))));
    }

    #[test]
    fn budgets_checked_at_eps1() {
        // 2 > 2^{1-3/4}
        let p = CantorGameParams::for_block_length(&int(1), 2, &int(1), &rat(1, 2), 1).unwrap();
        let mut c = golden_mean(1).unwrap();
        let mut table = c.budgets().clone();
        table.set(0, 0, int(2)).unwrap();
        c = CantorConstruction::new(Ball::root_cylinder(), 2, table).unwrap();
        let err = cantor_game_alice_from_construction(c, p, RemovalPolicy::Full);
        assert!(matches!(err, Err(Error::BudgetViolated(_))));
    }

    #[test]
    fn block_strategy_with_long_blocks_stays_in_survivors() {
        // ℓ = 2 over a golden-mean construction at modulus 4: avoid "11" at even offsets
        let p = CantorGameParams::for_block_length(&int(1), 2, &int(1), &rat(1, 2), 2).unwrap();
        let c = CantorConstruction::new(
            Ball::root_cylinder(),
            4,
            crate::cantor::BudgetTable::diagonal(int(1), 3),
        )
        .unwrap()
        .build(3, |c, n| {
            Ok(c.survivors(n)?
                .iter()
                .map(|b| {
                    let mut w = b.word().unwrap().to_vec();
                    w.extend([1, 1]);
                    crate::cantor::Removal {
                        m: n,
                        parent: b.clone(),
                        removed: vec![Ball::cylinder(w)],
                    }
                })
                .collect())
        })
        .unwrap();
        let alice = cantor_game_alice_from_construction(c.clone(), p, RemovalPolicy::PositiveOnly).unwrap();
        let ts = exhaustive_bob(
            cantor_cfg(int(1), 2),
            &alice,
            Ball::root_cylinder(),
            6,
            &BobEnumerator::ShiftTight,
        )
        .unwrap();
        assert!(!ts.is_empty());
        for t in &ts {
            let out = t.last_bob_ball().unwrap();
            assert_eq!(out.depth(), Some(6));
            assert!(c.is_survivor(3, out), "{out}");
        }
        assert_eq!(ts.len(), 8);
    }
}
