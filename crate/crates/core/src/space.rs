//! The two playgrounds: closed intervals on the real line and cylinders in
//! the one-sided binary shift, plus their standard splitting structures.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_exact, int, parse_exact, pow2, ExactScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceTag {
    RealLine,
    Shift,
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceTag::RealLine => "real",
            SpaceTag::Shift => "shift",
        })
    }
}

/// A closed ball. Identity is (center, radius), not the underlying point set.
///
/// On the shift a ball is the cylinder of a finite word `w`; its center is
/// the point `w000…` and its radius is `2^-|w|` for the metric
/// `d(x, y) = 2^-(length of the common prefix)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ball {
    Interval { center: ExactScalar, radius: ExactScalar },
    Cylinder { word: Vec<u8> },
}

impl Ball {
    pub fn interval(center: ExactScalar, radius: ExactScalar) -> Result<Ball> {
        if !radius.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "radius {} must be positive",
                format_exact(&radius)
            )));
        }
        Ok(Ball::Interval { center, radius })
    }

    /// `[lo, hi]` as a ball.
    pub fn from_endpoints(lo: ExactScalar, hi: ExactScalar) -> Result<Ball> {
        let two = int(2);
        Ball::interval((&lo + &hi) / &two, (hi - lo) / two)
    }

    pub fn unit_interval() -> Ball {
        Ball::Interval {
            center: crate::scalar::rat(1, 2),
            radius: crate::scalar::rat(1, 2),
        }
    }

    pub fn cylinder(word: impl Into<Vec<u8>>) -> Ball {
        let word = word.into();
        debug_assert!(word.iter().all(|&b| b <= 1));
        Ball::Cylinder { word }
    }

    /// Parses a bit string such as `"0110"` into a cylinder.
    pub fn cylinder_from_bits(bits: &str) -> Result<Ball> {
        let mut word = Vec::with_capacity(bits.len());
        for ch in bits.chars() {
            match ch {
                '0' => word.push(0),
                '1' => word.push(1),
                _ => return Err(Error::Parse(format!("bad bit {ch:?} in {bits:?}"))),
            }
        }
        Ok(Ball::Cylinder { word })
    }

    pub fn root_cylinder() -> Ball {
        Ball::Cylinder { word: Vec::new() }
    }

    pub fn space(&self) -> SpaceTag {
        match self {
            Ball::Interval { .. } => SpaceTag::RealLine,
            Ball::Cylinder { .. } => SpaceTag::Shift,
        }
    }

    pub fn radius(&self) -> ExactScalar {
        match self {
            Ball::Interval { radius, .. } => radius.clone(),
            Ball::Cylinder { word } => pow2(-(word.len() as i64)),
        }
    }

    pub fn diameter(&self) -> ExactScalar {
        self.radius() * int(2)
    }

    pub fn center(&self) -> Option<&ExactScalar> {
        match self {
            Ball::Interval { center, .. } => Some(center),
            Ball::Cylinder { .. } => None,
        }
    }

    pub fn word(&self) -> Option<&[u8]> {
        match self {
            Ball::Interval { .. } => None,
            Ball::Cylinder { word } => Some(word),
        }
    }

    /// Left and right endpoints of an interval.
    pub fn endpoints(&self) -> Option<(ExactScalar, ExactScalar)> {
        match self {
            Ball::Interval { center, radius } => Some((center - radius, center + radius)),
            Ball::Cylinder { .. } => None,
        }
    }

    pub fn depth(&self) -> Option<usize> {
        self.word().map(|w| w.len())
    }

    /// Point-set containment `other ⊆ self`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        match (self, other) {
            (Ball::Interval { center: c1, radius: r1 }, Ball::Interval { center: c2, radius: r2 }) => {
                (c1 - c2).abs() + r2 <= *r1
            }
            (Ball::Cylinder { word: w1 }, Ball::Cylinder { word: w2 }) => w2.starts_with(w1),
            _ => false,
        }
    }

    /// True when the closed balls share no point.
    pub fn disjoint(&self, other: &Ball) -> bool {
        match (self, other) {
            (Ball::Interval { center: c1, radius: r1 }, Ball::Interval { center: c2, radius: r2 }) => {
                (c1 - c2).abs() > r1 + r2
            }
            (Ball::Cylinder { word: w1 }, Ball::Cylinder { word: w2 }) => !w1.starts_with(w2) && !w2.starts_with(w1),
            _ => true,
        }
    }

    /// True when `self ∩ other` has nonempty interior.
    pub fn interiors_meet(&self, other: &Ball) -> bool {
        match (self, other) {
            (Ball::Interval { center: c1, radius: r1 }, Ball::Interval { center: c2, radius: r2 }) => {
                (c1 - c2).abs() < r1 + r2
            }
            _ => !self.disjoint(other),
        }
    }

    pub fn contains_point(&self, x: &ExactScalar) -> bool {
        match self {
            Ball::Interval { center, radius } => (x - center).abs() <= *radius,
            Ball::Cylinder { .. } => false,
        }
    }

    /// Distance between the two centers.
    pub fn center_distance(&self, other: &Ball) -> Result<ExactScalar> {
        match (self, other) {
            (Ball::Interval { center: c1, .. }, Ball::Interval { center: c2, .. }) => Ok((c1 - c2).abs()),
            (Ball::Cylinder { word: w1 }, Ball::Cylinder { word: w2 }) => Ok(padded_distance(w1, w2)),
            _ => Err(Error::WrongSpace(other.to_string())),
        }
    }

    /// Canonical order: ascending center (intervals), lexicographic word (cylinders).
    pub fn canonical_cmp(&self, other: &Ball) -> Ordering {
        self.cmp(other)
    }
}

impl PartialOrd for Ball {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ball {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ball::Interval { center: c1, radius: r1 }, Ball::Interval { center: c2, radius: r2 }) => {
                c1.cmp(c2).then_with(|| r1.cmp(r2))
            }
            (Ball::Cylinder { word: w1 }, Ball::Cylinder { word: w2 }) => w1.cmp(w2),
            (Ball::Interval { .. }, Ball::Cylinder { .. }) => Ordering::Less,
            (Ball::Cylinder { .. }, Ball::Interval { .. }) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ball::Interval { center, radius } => write!(f, "R:{}:{}", format_exact(center), format_exact(radius)),
            Ball::Cylinder { word } => {
                f.write_str("S:")?;
                for b in word {
                    f.write_str(if *b == 0 { "0" } else { "1" })?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Ball {
    type Err = Error;

    fn from_str(s: &str) -> Result<Ball> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("R:") {
            let (c, r) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad ball {s:?}")))?;
            return Ball::interval(parse_exact(c)?, parse_exact(r)?);
        }
        if let Some(rest) = s.strip_prefix("S:") {
            return Ball::cylinder_from_bits(rest);
        }
        Err(Error::Parse(format!("bad ball {s:?}")))
    }
}

/// Distance between the points `w1 000…` and `w2 000…`.
fn padded_distance(w1: &[u8], w2: &[u8]) -> ExactScalar {
    let n = w1.len().max(w2.len());
    for i in 0..n {
        let a = w1.get(i).copied().unwrap_or(0);
        let b = w2.get(i).copied().unwrap_or(0);
        if a != b {
            return pow2(-(i as i64));
        }
    }
    BigRational::zero()
}

/// Shift metric on finite words read as points: `2^-lcp`, 0 when equal.
pub fn shift_distance(x: &[u8], y: &[u8]) -> ExactScalar {
    padded_distance(x, y)
}

/// Radius multiplied by `kappa`, center fixed.
///
/// Cylinders only admit factors `2^-k`, which keep the ball a cylinder of
/// the same center.
pub fn scale_ball(b: &Ball, kappa: &ExactScalar) -> Result<Ball> {
    if !kappa.is_positive() {
        return Err(Error::NonPositiveScale);
    }
    match b {
        Ball::Interval { center, radius } => Ok(Ball::Interval {
            center: center.clone(),
            radius: radius * kappa,
        }),
        Ball::Cylinder { word } => {
            let k = dyadic_exponent(kappa)
                .filter(|k| *k <= 0)
                .ok_or_else(|| Error::InvalidParameter("cylinder scale factors must be 2^-k".into()))?;
            let mut w = word.clone();
            w.resize(word.len() + (-k) as usize, 0);
            Ok(Ball::Cylinder { word: w })
        }
    }
}

/// `Some(k)` when `q = 2^k`.
pub fn dyadic_exponent(q: &ExactScalar) -> Option<i64> {
    let n = q.numer();
    let d = q.denom();
    let is_pow2 = |x: &BigInt| x.is_positive() && (x & (x - BigInt::one())).is_zero();
    if n.is_one() && is_pow2(d) {
        Some(-(d.bits() as i64 - 1))
    } else if d.is_one() && is_pow2(n) {
        Some(n.bits() as i64 - 1)
    } else {
        None
    }
}

/// The quadruple (X, 𝒮, U, f) as a splitting rule.
pub trait SplittingStructure {
    fn space(&self) -> SpaceTag;
    fn in_u(&self, u: u64) -> bool;
    /// The totally multiplicative count function f.
    fn count(&self, u: u64) -> u64;
    /// The children 𝒮(b, u) in canonical order.
    fn split(&self, b: &Ball, u: u64) -> Result<Vec<Ball>>;
}

/// The standard structures: `u` equal subintervals on the line (U = ℕ) and
/// all `i`-bit extensions on the shift (U = {2^i}); f(u) = u in both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StandardSplitting(pub SpaceTag);

impl StandardSplitting {
    pub fn real_line() -> Self {
        StandardSplitting(SpaceTag::RealLine)
    }

    pub fn shift() -> Self {
        StandardSplitting(SpaceTag::Shift)
    }

    /// Whether `child ∈ 𝒮(parent, u)`, without enumerating the children.
    pub fn is_child(&self, parent: &Ball, child: &Ball, u: u64) -> bool {
        if !self.in_u(u) {
            return false;
        }
        match (parent, child) {
            (Ball::Interval { center: c, radius: r }, Ball::Interval { center: cc, radius: rc }) => {
                let ub = BigRational::from_integer(BigInt::from(u));
                if *rc != r / &ub {
                    return false;
                }
                // (cc - (c - r)) / rc must be an odd integer in [1, 2u - 1]
                let k = (cc - (c - r)) / rc;
                if !k.is_integer() {
                    return false;
                }
                let k = k.to_integer();
                let two = BigInt::from(2);
                k >= BigInt::one() && k < &two * BigInt::from(u) && (&k % &two) == BigInt::one()
            }
            (Ball::Cylinder { word: w }, Ball::Cylinder { word: wc }) => {
                let i = u.trailing_zeros() as usize;
                wc.len() == w.len() + i && wc.starts_with(w)
            }
            _ => false,
        }
    }
}

impl SplittingStructure for StandardSplitting {
    fn space(&self) -> SpaceTag {
        self.0
    }

    fn in_u(&self, u: u64) -> bool {
        match self.0 {
            SpaceTag::RealLine => u >= 1,
            SpaceTag::Shift => u.is_power_of_two(),
        }
    }

    fn count(&self, u: u64) -> u64 {
        u
    }

    fn split(&self, b: &Ball, u: u64) -> Result<Vec<Ball>> {
        if !self.in_u(u) {
            return Err(Error::NotInU(u));
        }
        if b.space() != self.0 {
            return Err(Error::WrongSpace(b.to_string()));
        }
        match b {
            Ball::Interval { center, radius } => {
                let ub = BigRational::from_integer(BigInt::from(u));
                let child_r = radius / &ub;
                let left = center - radius;
                Ok((0..u)
                    .map(|k| {
                        let offset = BigRational::from_integer(BigInt::from(2 * k + 1));
                        Ball::Interval {
                            center: &left + &child_r * offset,
                            radius: child_r.clone(),
                        }
                    })
                    .collect())
            }
            Ball::Cylinder { word } => {
                let i = u.trailing_zeros() as usize;
                Ok((0..u)
                    .map(|suffix| {
                        let mut w = word.clone();
                        for bit in (0..i).rev() {
                            w.push(((suffix >> bit) & 1) as u8);
                        }
                        Ball::Cylinder { word: w }
                    })
                    .collect())
            }
        }
    }
}

/// Per-axiom verdict with an optional witness of failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomOutcome {
    pub passed: bool,
    pub witness: Option<String>,
}

impl AxiomOutcome {
    fn pass() -> Self {
        AxiomOutcome {
            passed: true,
            witness: None,
        }
    }

    fn fail(w: String) -> Self {
        AxiomOutcome {
            passed: false,
            witness: Some(w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub s1: AxiomOutcome,
    pub s2: AxiomOutcome,
    pub s3: AxiomOutcome,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.s1.passed && self.s2.passed && self.s3.passed
    }
}

/// Checks (S1) counts, (S2) separation and (S3) compatibility at `b` for `u`, `v`.
pub fn verify_splitting_axioms(s: &dyn SplittingStructure, b: &Ball, u: u64, v: u64) -> Result<AxiomReport> {
    let uv = u
        .checked_mul(v)
        .ok_or_else(|| Error::InvalidParameter("u*v overflows".into()))?;
    let mut s1 = AxiomOutcome::pass();
    let mut s2 = AxiomOutcome::pass();
    for factor in [u, v, uv] {
        let kids = s.split(b, factor)?;
        if kids.len() as u64 != s.count(factor) {
            s1 = AxiomOutcome::fail(format!(
                "#S({b},{factor}) = {} but f({factor}) = {}",
                kids.len(),
                s.count(factor)
            ));
        }
        if s2.passed {
            let min_sep = b.radius() * int(2) / BigRational::from_integer(BigInt::from(factor));
            'pairs: for (i, x) in kids.iter().enumerate() {
                for y in &kids[i + 1..] {
                    if x.center_distance(y)? < min_sep {
                        s2 = AxiomOutcome::fail(format!("{x} and {y} closer than {}", format_exact(&min_sep)));
                        break 'pairs;
                    }
                }
            }
        }
    }
    let mut direct = s.split(b, uv)?;
    let mut nested = Vec::new();
    for child in s.split(b, u)? {
        nested.extend(s.split(&child, v)?);
    }
    direct.sort();
    nested.sort();
    let s3 = if direct == nested {
        AxiomOutcome::pass()
    } else {
        let odd = direct
            .iter()
            .find(|x| !nested.contains(x))
            .or_else(|| nested.iter().find(|x| !direct.contains(x)))
            .map(|x| x.to_string())
            .unwrap_or_else(|| "multiplicities differ".into());
        AxiomOutcome::fail(format!("S({b},{uv}) and the nested split differ at {odd}"))
    };
    Ok(AxiomReport { s1, s2, s3 })
}
