//! Passing Schmidt strategies between games with different parameters or roles.

use std::sync::Arc;

use num_traits::Signed;

use crate::engine::{GameConfig, GameKind, Move, SchmidtVariant, Strategy, Transcript, Verdict};
use crate::error::{Error, Player, Result};
use crate::scalar::{format_exact, int, ExactScalar};
use crate::space::{Ball, SpaceTag};

fn open_unit(x: &ExactScalar, what: &str) -> Result<()> {
    if x.is_positive() && *x < int(1) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what}={} must lie in (0,1)",
            format_exact(x)
        )))
    }
}

/// The `(α, β)` game whose strategies lift to the `(α₀, β₀)` game.
///
/// `α = α₀(1 - (α₀β₀)² - β₀(1-α₀)) / (1 - (α₀β₀)² - α₀β₀(1-α₀))` and
/// `β = (α₀β₀)²/α`, so two outer rounds shrink like one inner round.
pub fn schmidt_lift_parameters(alpha0: &ExactScalar, beta0: &ExactScalar) -> Result<(ExactScalar, ExactScalar)> {
    open_unit(alpha0, "alpha0")?;
    open_unit(beta0, "beta0")?;
    let one = int(1);
    let sq = (alpha0 * beta0) * (alpha0 * beta0);
    let num = alpha0 * (&one - &sq - beta0 * (&one - alpha0));
    let den = &one - &sq - alpha0 * beta0 * (&one - alpha0);
    let alpha = num / den;
    open_unit(&alpha, "derived alpha")?;
    let beta = &sq / &alpha;
    open_unit(&beta, "derived beta")?;
    Ok((alpha, beta))
}

/// An `(α, β)` Alice replayed in the `(α₀, β₀)` game.
///
/// Bob's even balls `B_{2n}` become inner Bob balls of radius
/// `(1-α₀)/(1-α)·ρ_{2n}`; Alice answers them at the inner centre with radius
/// `α₀ρ_{2n}` and answers odd balls concentrically.
pub struct LiftedSchmidt {
    inner: Arc<dyn Strategy>,
    alpha: ExactScalar,
    beta: ExactScalar,
    alpha0: ExactScalar,
    beta0: ExactScalar,
}

pub fn lift_schmidt_strategy(
    inner: Arc<dyn Strategy>,
    alpha: ExactScalar,
    beta: ExactScalar,
    alpha0: ExactScalar,
    beta0: ExactScalar,
) -> Result<LiftedSchmidt> {
    let (a, b) = schmidt_lift_parameters(&alpha0, &beta0)?;
    if a != alpha || b != beta {
        return Err(Error::ParameterMismatch(format!(
            "({}, {}) is not the lift of ({}, {}); expected ({}, {})",
            format_exact(&alpha),
            format_exact(&beta),
            format_exact(&alpha0),
            format_exact(&beta0),
            format_exact(&a),
            format_exact(&b)
        )));
    }
    Ok(LiftedSchmidt {
        inner,
        alpha,
        beta,
        alpha0,
        beta0,
    })
}

impl LiftedSchmidt {
    fn inner_ball(&self, b: &Ball) -> Result<Ball> {
        let c = b.center().ok_or_else(|| Error::WrongSpace(b.to_string()))?;
        let r = (int(1) - &self.alpha0) / (int(1) - &self.alpha) * b.radius();
        Ball::interval(c.clone(), r)
    }

    /// The inner game up to Alice's answer to `B'_n`, `n = ⌊k/2⌋` for Bob's
    /// latest ball `B_k`. Every inner move is refereed.
    pub fn inner_transcript(&self, t: &Transcript) -> Result<Transcript> {
        let bobs = t.bob_balls();
        let k = bobs.len().checked_sub(1).ok_or(Error::EmptyTranscript)?;
        let cfg = GameConfig::schmidt(
            SpaceTag::RealLine,
            SchmidtVariant::Classic,
            self.alpha.clone(),
            self.beta.clone(),
        )?;
        let mut inner = Transcript::new(cfg);
        for n in 0..=k / 2 {
            let turn = inner.next_turn();
            let b = self.inner_ball(bobs[2 * n])?;
            if let Verdict::Illegal(reason) | Verdict::DefaultWinAlice(reason) = inner.push(Move::BobBall(b))? {
                return Err(Error::StrategyFault {
                    player: Player::Bob,
                    turn,
                    reason: format!("inner Bob: {reason}"),
                });
            }
            let mv = self.inner.respond(&inner)?;
            if let Verdict::Illegal(reason) = inner.push(mv)? {
                return Err(Error::StrategyFault {
                    player: Player::Alice,
                    turn,
                    reason: format!("inner Alice: {reason}"),
                });
            }
        }
        Ok(inner)
    }
}

impl Strategy for LiftedSchmidt {
    fn name(&self) -> &str {
        "lifted-schmidt"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("alpha0".into(), format_exact(&self.alpha0)),
            ("beta0".into(), format_exact(&self.beta0)),
            ("alpha".into(), format_exact(&self.alpha)),
            ("beta".into(), format_exact(&self.beta)),
            ("inner".into(), self.inner.name().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        match &t.config().kind {
            GameKind::Schmidt {
                variant: SchmidtVariant::Classic,
                alpha,
                beta,
            } if *alpha == self.alpha0 && *beta == self.beta0 && t.config().space == SpaceTag::RealLine => {}
            k => {
                return Err(Error::ParameterMismatch(format!(
                    "expected a classic ({}, {}) game on the line, got {k}",
                    format_exact(&self.alpha0),
                    format_exact(&self.beta0)
                )))
            }
        }
        let bobs = t.bob_balls();
        let k = bobs.len().checked_sub(1).ok_or(Error::EmptyTranscript)?;
        let radius = &self.alpha0 * bobs[k].radius();
        let center = if k % 2 == 1 {
            bobs[k].center().cloned()
        } else {
            let inner = self.inner_transcript(t)?;
            match inner.alice_moves().last() {
                Some(Move::AliceBall(a)) => a.center().cloned(),
                Some(other) => {
                    return Err(Error::StrategyFault {
                        player: Player::Alice,
                        turn: t.next_turn(),
                        reason: format!("inner strategy played a {}", other.shape()),
                    })
                }
                None => None,
            }
        };
        let center = center.ok_or(Error::EmptyTranscript)?;
        Ok(Move::AliceBall(Ball::interval(center, radius)?))
    }
}

/// Bob in the weak `(β, α)` game, replaying a very strong `(α, β)` Alice
/// with the roles swapped: Alice's balls are fed to `s` as Bob balls and its
/// answers are played back as Bob's.
pub struct SwappedBob {
    alice: Arc<dyn Strategy>,
    alpha: ExactScalar,
    beta: ExactScalar,
    b0: Ball,
}

pub fn bob_from_very_strong_alice(
    alice: Arc<dyn Strategy>,
    alpha: ExactScalar,
    beta: ExactScalar,
    b0: Ball,
) -> Result<SwappedBob> {
    open_unit(&alpha, "alpha")?;
    open_unit(&beta, "beta")?;
    Ok(SwappedBob { alice, alpha, beta, b0 })
}

impl Strategy for SwappedBob {
    fn name(&self) -> &str {
        "swapped-bob"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("alpha".into(), format_exact(&self.alpha)),
            ("beta".into(), format_exact(&self.beta)),
            ("alice".into(), self.alice.name().to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let space = t.config().space;
        match &t.config().kind {
            GameKind::Schmidt {
                variant: SchmidtVariant::Weak,
                alpha,
                beta,
            } if *alpha == self.beta && *beta == self.alpha => {}
            k => {
                return Err(Error::ParameterMismatch(format!(
                    "expected a weak ({}, {}) game, got {k}",
                    format_exact(&self.beta),
                    format_exact(&self.alpha)
                )))
            }
        }
        let bobs = t.bob_balls();
        if bobs.is_empty() {
            return Ok(Move::BobBall(self.b0.clone()));
        }
        let alices = t.alice_moves();
        let cfg = GameConfig::schmidt(space, SchmidtVariant::VeryStrong, self.alpha.clone(), self.beta.clone())?;
        let mut inner = Transcript::new(cfg);
        for (i, a) in alices.iter().enumerate() {
            let Move::AliceBall(a) = a else {
                return Err(Error::InvalidParameter(format!("Alice played a {}", a.shape())));
            };
            let turn = inner.next_turn();
            if !inner.push(Move::BobBall(a.clone()))?.is_legal() {
                return Err(Error::StrategyFault {
                    player: Player::Alice,
                    turn,
                    reason: format!("{a} is not a very strong Bob move"),
                });
            }
            if let Some(b) = bobs.get(i + 1) {
                if !inner.push(Move::AliceBall((*b).clone()))?.is_legal() {
                    return Err(Error::StrategyFault {
                        player: Player::Bob,
                        turn,
                        reason: format!("{b} is not a very strong Alice move"),
                    });
                }
            }
        }
        match self.alice.respond(&inner)? {
            Move::AliceBall(b) => Ok(Move::BobBall(b)),
            other => Err(Error::StrategyFault {
                player: Player::Bob,
                turn: t.next_turn(),
                reason: format!("swapped strategy played a {}", other.shape()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{play, FnStrategy, GameEnd, RandomBob};
    use crate::scalar::rat;
    use crate::strategies::{schmidt_alice_from_potential, FnPositional, Positional};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn center_alice(alpha: ExactScalar) -> Positional<impl crate::strategies::PositionalStrategy> {
        Positional(FnPositional::new("center", move |b: &Ball| {
            Ball::interval(b.center().unwrap().clone(), &alpha * b.radius())
        }))
    }

    fn grid() -> Vec<ExactScalar> {
        vec![rat(1, 4), rat(1, 3), rat(1, 2)]
    }

    #[test]
    fn lift_of_halves() {
        let (a, b) = schmidt_lift_parameters(&rat(1, 2), &rat(1, 2)).unwrap();
        assert_eq!((a.clone(), b.clone()), (rat(11, 26), rat(13, 88)));
        assert_eq!(a * b, rat(1, 16));
    }

    #[test]
    fn lift_product_on_grid() {
        for a0 in grid() {
            for b0 in grid() {
                // oracle: the inner game shrinks like two outer rounds
                let (a, b) = schmidt_lift_parameters(&a0, &b0).unwrap();
                let outer = &a0 * &b0;
                assert_eq!(&a * &b, &outer * &outer);
            }
        }
    }

    #[test]
    fn mismatched_parameters_are_rejected() {
        let s = lift_schmidt_strategy(
            Arc::new(center_alice(rat(1, 2))),
            rat(1, 2),
            rat(1, 8),
            rat(1, 2),
            rat(1, 2),
        );
        assert!(matches!(s, Err(Error::ParameterMismatch(_))));
    }

    #[test]
    fn lifted_play_is_legal_on_grid() {
        for a0 in grid() {
            for b0 in grid() {
                let (a, b) = schmidt_lift_parameters(&a0, &b0).unwrap();
                let s = lift_schmidt_strategy(Arc::new(center_alice(a.clone())), a, b, a0.clone(), b0.clone()).unwrap();
                let cfg =
                    GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, a0.clone(), b0.clone()).unwrap();
                for seed in 0..5 {
                    let bob = RandomBob::new(seed, Ball::unit_interval()).with_grid(8);
                    let t = play(cfg.clone(), &s, &bob, 20).unwrap();
                    assert_eq!(t.end(), GameEnd::Undecided, "({a0}, {b0}) seed {seed}");
                    let inner = s.inner_transcript(&t).unwrap();
                    assert!(inner.records().iter().all(|r| r.verdict.is_legal()));
                    assert_eq!(inner.bob_balls().len(), 11);
                }
            }
        }
    }

    fn random_weak_alice(seed: u64, beta: ExactScalar) -> impl Strategy {
        FnStrategy::new("random-alice", move |t: &Transcript| {
            let b = t.last_bob_ball().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t.len() as u64).wrapping_mul(0x9e37_79b9));
            let (lo, hi) = b.endpoints().unwrap();
            let r = &beta * b.radius() * rat(rng.gen_range(8..=16), 8);
            let span = &hi - &lo - &r * int(2);
            let c = &lo + &r + span * rat(rng.gen_range(0..=16), 16);
            Ok(Move::AliceBall(Ball::interval(c, r).unwrap()))
        })
    }

    #[test]
    fn swapped_potential_alice_is_legal() {
        let (alpha, beta) = (rat(1, 64), rat(1, 2));
        let silent = FnStrategy::new("silent", |_: &Transcript| Ok(Move::AliceCollection(Vec::new())));
        let s = schmidt_alice_from_potential(Arc::new(silent), rat(1, 4), alpha.clone(), beta.clone(), 1).unwrap();
        let bob = bob_from_very_strong_alice(Arc::new(s), alpha.clone(), beta.clone(), Ball::unit_interval()).unwrap();
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Weak, beta.clone(), alpha).unwrap();
        for seed in 0..20 {
            let t = play(cfg.clone(), &random_weak_alice(seed, beta.clone()), &bob, 20).unwrap();
            assert_eq!(t.end(), GameEnd::Undecided);
        }
    }

    #[test]
    fn swapped_center_alice_plays_centres() {
        let (alpha, beta) = (rat(1, 3), rat(1, 4));
        let bob = bob_from_very_strong_alice(
            Arc::new(center_alice(alpha.clone())),
            alpha.clone(),
            beta.clone(),
            Ball::unit_interval(),
        )
        .unwrap();
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Weak, beta.clone(), alpha).unwrap();
        let t = play(cfg, &random_weak_alice(9, beta), &bob, 10).unwrap();
        assert_eq!(t.end(), GameEnd::Undecided);
        let bobs = t.bob_balls();
        for (a, b) in t.alice_moves().iter().zip(&bobs[1..]) {
            assert_eq!(a.balls()[0].center(), b.center());
        }
    }

    #[test]
    fn oversized_swapped_alice_is_flagged() {
        let (alpha, beta) = (rat(1, 3), rat(1, 4));
        let greedy = Positional(FnPositional::new("greedy", |b: &Ball| Ok(b.clone())));
        let bob =
            bob_from_very_strong_alice(Arc::new(greedy), alpha.clone(), beta.clone(), Ball::unit_interval()).unwrap();
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Weak, beta.clone(), alpha).unwrap();
        let t = play(cfg, &random_weak_alice(1, beta), &bob, 10).unwrap();
        assert!(
            matches!(
                t.end(),
                GameEnd::Illegal {
                    player: Player::Bob,
                    turn: 1,
                    ..
                }
            ),
            "{:?}",
            t.end()
        );
    }
}
