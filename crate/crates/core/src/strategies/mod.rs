//! Strategy constructions for the referee in [`crate::engine`].

use crate::engine::{Move, Strategy, Transcript};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;
use crate::space::Ball;

pub mod cantor_game;
pub mod digits;
pub mod half_winning;
pub mod potential;
pub mod schmidt;

pub use cantor_game::{
    cantor_game_alice_from_construction, compute_cantor_game_params, CantorGameAlice, CantorGameParams, RemovalPolicy,
};
pub use digits::{bohr_set_prefix, digit_control_alice, ifs_bob, DigitControlAlice, DigitTarget, IfsBob};
pub use half_winning::{cantor_from_half_winning, subcover_two, HalfWinningConstruction, Subcover};
pub use potential::{
    cantor_from_potential_alice, dolgopyat_alice, first_turn_cover_alice, intersect_potential_strategies,
    potential_alice_from_cantor, schmidt_alice_from_potential, PotentialMode,
};
pub use schmidt::{bob_from_very_strong_alice, lift_schmidt_strategy, schmidt_lift_parameters};

/// Alice's move as a function of Bob's last ball only.
pub trait PositionalStrategy: Send + Sync {
    fn name(&self) -> &str;
    fn respond0(&self, bob: &Ball) -> Result<Ball>;
}

/// A positional strategy from a closure.
pub struct FnPositional<F> {
    name: String,
    f: F,
}

impl<F> FnPositional<F>
where
    F: Fn(&Ball) -> Result<Ball> + Send + Sync,
{
    pub fn new(name: &str, f: F) -> Self {
        FnPositional {
            name: name.to_string(),
            f,
        }
    }
}

impl<F> PositionalStrategy for FnPositional<F>
where
    F: Fn(&Ball) -> Result<Ball> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn respond0(&self, bob: &Ball) -> Result<Ball> {
        (self.f)(bob)
    }
}

/// The ball-game strategy induced by a positional rule.
pub struct Positional<P>(pub P);

impl<P: PositionalStrategy> Strategy for Positional<P> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        let b = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        self.0.respond0(b).map(Move::AliceBall)
    }
}

/// Bob balls `B_0, ..., B_{n-1}` consistent with a positional strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FChain {
    pub strategy: String,
    pub balls: Vec<Ball>,
}

impl FChain {
    /// Checks the classic (α, β) laws along the chain: every `F(B_k)` sits in
    /// `B_k` with radius `α·rad(B_k)`, and `B_{k+1}` sits in `F(B_k)` with
    /// radius `β·rad(F(B_k))`.
    pub fn verify(&self, f: &dyn PositionalStrategy, alpha: &ExactScalar, beta: &ExactScalar) -> Result<bool> {
        for pair in self.balls.windows(2) {
            let a = f.respond0(&pair[0])?;
            if !pair[0].contains_ball(&a) || a.radius() != alpha * pair[0].radius() {
                return Ok(false);
            }
            if !a.contains_ball(&pair[1]) || pair[1].radius() != beta * a.radius() {
                return Ok(false);
            }
        }
        if let Some(last) = self.balls.last() {
            let a = f.respond0(last)?;
            if !last.contains_ball(&a) || a.radius() != alpha * last.radius() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::space::scale_ball;

    fn halve() -> FnPositional<impl Fn(&Ball) -> Result<Ball> + Send + Sync> {
        FnPositional::new("halve", |b: &Ball| scale_ball(b, &rat(1, 2)))
    }

    #[test]
    fn chain_of_centred_halvings_verifies() {
        let f = halve();
        let b0 = Ball::interval(rat(0, 1), rat(1, 1)).unwrap();
        let b1 = Ball::interval(rat(1, 4), rat(1, 8)).unwrap();
        let chain = FChain {
            strategy: "halve".into(),
            balls: vec![b0.clone(), b1],
        };
        assert!(chain.verify(&f, &rat(1, 2), &rat(1, 4)).unwrap());
        let off = Ball::interval(rat(3, 4), rat(1, 8)).unwrap();
        let bad = FChain {
            strategy: "halve".into(),
            balls: vec![b0, off],
        };
        assert!(!bad.verify(&f, &rat(1, 2), &rat(1, 4)).unwrap());
    }

    #[test]
    fn positional_adapter_uses_last_bob_ball() {
        use crate::engine::{GameConfig, SchmidtVariant};
        use crate::space::SpaceTag;
        let cfg = GameConfig::schmidt(SpaceTag::RealLine, SchmidtVariant::Classic, rat(1, 2), rat(1, 2)).unwrap();
        let mut t = Transcript::new(cfg);
        t.push(Move::BobBall(Ball::unit_interval())).unwrap();
        let mv = Positional(halve()).respond(&t).unwrap();
        assert_eq!(mv, Move::AliceBall(Ball::interval(rat(1, 2), rat(1, 4)).unwrap()));
    }
}
