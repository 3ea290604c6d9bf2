//! Weak-game strategies on the line built from digit structure: a Bob that
//! stays on an IFS attractor, an Alice that fixes chosen binary digits, and
//! Bohr sets of rational rotations.

use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::Signed;

use crate::engine::{GameKind, Move, SchmidtVariant, Strategy, Transcript};
use crate::error::{Error, Result};
use crate::scalar::{format_exact, int, pow2, pow_exact, rat, ExactScalar, DEFAULT_PRECISION};
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

fn weak_game(t: &Transcript, alpha: &ExactScalar, beta: &ExactScalar) -> Result<()> {
    match &t.config().kind {
        GameKind::Schmidt {
            variant: SchmidtVariant::Weak,
            alpha: a,
            beta: b,
        } if a == alpha && b == beta && t.config().space == SpaceTag::RealLine => Ok(()),
        k => Err(Error::ParameterMismatch(format!(
            "expected a weak ({}, {}) game on the line, got {k}",
            format_exact(alpha),
            format_exact(beta)
        ))),
    }
}

/// Bob in the weak `(α, λ^N γ)` game who keeps every ball inside a cylinder
/// of the IFS `{λx, γ(x-1)+1, γ(x+1)-1}` on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct IfsBob {
    alpha: ExactScalar,
    lambda: ExactScalar,
    gamma: ExactScalar,
    depth: u32,
    beta: ExactScalar,
    // Bob's last ball and the cylinder it was centred in
    last: Arc<Mutex<Option<(Ball, Cylinder)>>>,
}

type Cylinder = (ExactScalar, ExactScalar);

/// Builds the IFS Bob after checking `λ + λα ≥ 1`, `γ ≤ α/4` and
/// `√λ + 2√γ ≤ 1`.
pub fn ifs_bob(alpha: ExactScalar, lambda: ExactScalar, gamma: ExactScalar) -> Result<IfsBob> {
    open_unit(&alpha, "alpha")?;
    open_unit(&lambda, "lambda")?;
    open_unit(&gamma, "gamma")?;
    let one = int(1);
    if &lambda + &lambda * &alpha < one {
        return Err(Error::GateFailed(format!(
            "lambda + lambda*alpha = {} < 1",
            format_exact(&(&lambda + &lambda * &alpha))
        )));
    }
    if gamma > &alpha / int(4) {
        return Err(Error::GateFailed(format!("gamma={} > alpha/4", format_exact(&gamma))));
    }
    let half = rat(1, 2);
    let roots = pow_exact(&lambda, &half, DEFAULT_PRECISION)
        .add(&pow_exact(&gamma, &half, DEFAULT_PRECISION).scale(&int(2)))
        .rounded(DEFAULT_PRECISION);
    if !roots.le(&one)? {
        return Err(Error::GateFailed(format!("sqrt(lambda) + 2 sqrt(gamma) = {roots} > 1")));
    }
    // least N with λ^N ≤ 1-λ
    let mut depth = 1u32;
    let mut power = lambda.clone();
    while power > &one - &lambda {
        depth += 1;
        power *= &lambda;
    }
    let beta = power * &gamma;
    Ok(IfsBob {
        alpha,
        lambda,
        gamma,
        depth,
        beta,
        last: Arc::default(),
    })
}

impl IfsBob {
    /// `β = λ^N γ`, Bob's radius ratio.
    pub fn beta(&self) -> &ExactScalar {
        &self.beta
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// The root interval `[-1, 1]`, Bob's opening ball.
    pub fn root(&self) -> Ball {
        Ball::interval(int(0), int(1)).expect("unit radius")
    }

    /// The largest IFS cylinder inside `a` of radius at least `floor`, lowest
    /// centre first among equals.
    pub fn maximal_cylinder(&self, a: &Ball, floor: &ExactScalar) -> Result<Option<Ball>> {
        let found = self.search_from((int(0), int(1)), a, floor)?;
        found.map(|(c, r)| Ball::interval(c, r)).transpose()
    }

    // Cylinders are pairwise nested or disjoint, so a cylinder containing `a`
    // is an ancestor of every cylinder inside it and the search may start there.
    fn search_from(&self, start: Cylinder, a: &Ball, floor: &ExactScalar) -> Result<Option<Cylinder>> {
        let (lo, hi) = a.endpoints().ok_or_else(|| Error::WrongSpace(a.to_string()))?;
        if !floor.is_positive() {
            return Err(Error::InvalidParameter("cylinder radius floor must be positive".into()));
        }
        let mut best: Option<Cylinder> = None;
        // cylinders as (centre, radius), the image of [-1, 1] under x -> centre + radius·x
        let mut stack = vec![start];
        while let Some((c, r)) = stack.pop() {
            if r < *floor || best.as_ref().is_some_and(|(_, br)| r < *br) {
                continue;
            }
            let (cl, ch) = (&c - &r, &c + &r);
            if ch < lo || cl > hi {
                continue;
            }
            if lo <= cl && ch <= hi {
                let better = match &best {
                    None => true,
                    Some((bc, br)) => r > *br || (r == *br && c < *bc),
                };
                if better {
                    best = Some((c, r));
                }
                continue;
            }
            let side = &r * (int(1) - &self.gamma);
            stack.push((&c + &side, &r * &self.gamma));
            stack.push((&c - &side, &r * &self.gamma));
            stack.push((c, &r * &self.lambda));
        }
        Ok(best)
    }
}

impl Strategy for IfsBob {
    fn name(&self) -> &str {
        "ifs-bob"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("alpha".into(), format_exact(&self.alpha)),
            ("lambda".into(), format_exact(&self.lambda)),
            ("gamma".into(), format_exact(&self.gamma)),
            ("N".into(), self.depth.to_string()),
            ("beta".into(), format_exact(&self.beta)),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        weak_game(t, &self.alpha, &self.beta)?;
        let Some(Move::AliceBall(a)) = t.moves().last() else {
            return Ok(Move::BobBall(self.root()));
        };
        let radius = &self.beta * a.radius();
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        let start = match (last.as_ref(), t.last_bob_ball()) {
            (Some((ball, cyl)), Some(prev)) if ball == prev && prev.contains_ball(a) => cyl.clone(),
            _ => (int(0), int(1)),
        };
        let (c, r) = self.search_from(start, a, &radius)?.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no IFS cylinder of radius {} inside {a}",
                format_exact(&radius)
            ))
        })?;
        let ball = Ball::interval(c.clone(), radius)?;
        *last = Some((ball.clone(), (c, r)));
        Ok(Move::BobBall(ball))
    }
}

/// A target: binary digit `index` of the outcome should equal `bit`.
pub type DigitTarget = (u32, u8);

/// Alice in the finite weak `(α, β)` game forcing prescribed binary digits.
///
/// For each target `a` she steers Bob's radius to exactly `3·2^{-(a+1)}` with
/// concentric moves, then plays a ball of radius `α·rad` centred in a dyadic
/// cell of length `2^{-a}` with the wanted parity. After the last target she
/// plays concentric balls of radius `α·rad`.
#[derive(Clone, Debug)]
pub struct DigitControlAlice {
    alpha: ExactScalar,
    beta: ExactScalar,
    rho0: ExactScalar,
    targets: Vec<DigitTarget>,
    gap: u32,
    first: u32,
}

/// Least `n ≥ 1` such that every radius in `(0, β^n r]` is reachable from `r`.
fn chained_rounds(alpha: &ExactScalar, beta: &ExactScalar) -> u32 {
    let mut n = 1u32;
    let mut power = alpha.clone();
    while power > *beta {
        n += 1;
        power *= alpha;
    }
    n
}

fn target_radius(index: u32) -> ExactScalar {
    rat(3, 2) * pow2(-(index as i64))
}

/// Least `a` with `3·2^{-(a+1)} ≤ bound`.
fn least_index_below(bound: &ExactScalar) -> u32 {
    let mut a = 0u32;
    while target_radius(a) > *bound {
        a += 1;
    }
    a
}

pub fn digit_control_alice(
    alpha: ExactScalar,
    beta: ExactScalar,
    rho0: ExactScalar,
    targets: Vec<DigitTarget>,
) -> Result<DigitControlAlice> {
    open_unit(&alpha, "alpha")?;
    open_unit(&beta, "beta")?;
    if !rho0.is_positive() {
        return Err(Error::InvalidParameter("rho0 must be positive".into()));
    }
    // the cell move needs α·3·2^{-(a+1)} < 2^{-(a+1)}
    if alpha >= rat(1, 3) {
        return Err(Error::GateFailed(format!(
            "alpha={} is not below 1/3",
            format_exact(&alpha)
        )));
    }
    if let Some((_, bit)) = targets.iter().find(|(_, bit)| *bit > 1) {
        return Err(Error::InvalidParameter(format!("digit {bit} is not binary")));
    }
    let n0 = chained_rounds(&alpha, &beta);
    let reach = num_traits::pow(beta.clone(), n0 as usize);
    let first = least_index_below(&(&reach * &rho0));
    let gap = least_index_below(&(rat(3, 2) * &alpha * &beta * &reach));
    if let Some((a, _)) = targets.first() {
        if *a < first {
            return Err(Error::FirstIndexTooSmall(*a, first));
        }
    }
    for w in targets.windows(2) {
        if w[1].0 < w[0].0 + gap {
            return Err(Error::GapTooSmall(w[0].0, w[1].0, gap));
        }
    }
    Ok(DigitControlAlice {
        alpha,
        beta,
        rho0,
        targets,
        gap,
        first,
    })
}

impl DigitControlAlice {
    /// Required spacing `N` between consecutive target indices.
    pub fn gap(&self) -> u32 {
        self.gap
    }

    /// Smallest admissible first index `a₁(ρ₀)`.
    pub fn first_index(&self) -> u32 {
        self.first
    }

    fn steer(&self, b: &Ball, goal: &ExactScalar) -> Result<Move> {
        let r = b.radius();
        let ab = &self.alpha * &self.beta;
        // fewest rounds n with (αβ)^n r ≤ goal
        let mut n = 0usize;
        let mut low = r.clone();
        while low > *goal {
            n += 1;
            low *= &ab;
        }
        if *goal > num_traits::pow(self.beta.clone(), n) * &r {
            return Err(Error::InvalidParameter(format!(
                "radius {} is not reachable from {}",
                format_exact(goal),
                format_exact(&r)
            )));
        }
        let next = (&ab * &r).max(goal / num_traits::pow(self.beta.clone(), n - 1));
        Ok(Move::AliceBall(Ball::interval(
            b.center().expect("interval").clone(),
            next / &self.beta,
        )?))
    }

    fn fix_digit(&self, b: &Ball, index: u32, bit: u8) -> Result<Move> {
        let (lo, hi) = b.endpoints().expect("interval");
        let scale = pow2(index as i64);
        let cell = pow2(-(index as i64));
        let first = (&lo * &scale).ceil().to_integer();
        let last = (&hi * &scale).floor().to_integer();
        let mut j = first;
        while j.is_odd() != (bit == 1) {
            j += 1;
        }
        if &j + 1 > last {
            return Err(Error::InvalidParameter(format!(
                "{b} holds no full cell with digit {index} = {bit}"
            )));
        }
        let centre = (ExactScalar::from_integer(j) + rat(1, 2)) * &cell;
        Ok(Move::AliceBall(Ball::interval(centre, &self.alpha * b.radius())?))
    }
}

impl Strategy for DigitControlAlice {
    fn name(&self) -> &str {
        "digit-control"
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let targets: Vec<String> = self.targets.iter().map(|(a, bit)| format!("{a}:{bit}")).collect();
        vec![
            ("alpha".into(), format_exact(&self.alpha)),
            ("beta".into(), format_exact(&self.beta)),
            ("rho0".into(), format_exact(&self.rho0)),
            ("targets".into(), targets.join(",")),
            ("N".into(), self.gap.to_string()),
            ("a1".into(), self.first.to_string()),
        ]
    }

    fn respond(&self, t: &Transcript) -> Result<Move> {
        weak_game(t, &self.alpha, &self.beta)?;
        let b = t.last_bob_ball().ok_or(Error::EmptyTranscript)?;
        if t.bob_balls().len() == 1 && b.radius() != self.rho0 {
            return Err(Error::ParameterMismatch(format!(
                "opening radius {} is not rho0={}",
                format_exact(&b.radius()),
                format_exact(&self.rho0)
            )));
        }
        let r = b.radius();
        match self.targets.iter().find(|(a, _)| target_radius(*a) <= r) {
            Some((a, bit)) if target_radius(*a) == r => self.fix_digit(b, *a, *bit),
            Some((a, _)) => self.steer(b, &target_radius(*a)),
            None => Ok(Move::AliceBall(Ball::interval(
                b.center().expect("interval").clone(),
                &self.alpha * &r,
            )?)),
        }
    }
}

/// `{n ≤ n_max : dist(nγ, ℤ) < δ}` for rational `γ`.
pub fn bohr_set_prefix(gamma: &ExactScalar, delta: &ExactScalar, n_max: u64) -> Vec<u64> {
    (1..=n_max)
        .filter(|&n| {
            let x = gamma * int(n as i64);
            let frac = &x - x.floor();
            frac.clone().min(int(1) - frac) < *delta
        })
        .collect()
}

/// Binary digit `index` of `x ≥ 0`, the coefficient of `2^{-index}`.
pub fn binary_digit(x: &ExactScalar, index: u32) -> u8 {
    let scaled = (x * pow2(index as i64)).floor().to_integer();
    scaled.is_odd() as u8
}
