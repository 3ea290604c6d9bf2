//! Exact rationals and outward-rounded enclosures.
//!
//! Game geometry never leaves `ExactScalar`. Quantities with irrational
//! exponents (`rad^c`, `R^{δ(1-ε)}`) are carried as [`GradedScalar`]
//! intervals whose endpoints are dyadic rationals rounded away from the
//! true value.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type ExactScalar = BigRational;

/// Significand bits used when no precision is requested explicitly.
pub const DEFAULT_PRECISION: u32 = 128;

pub fn rat(num: i64, den: i64) -> ExactScalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pow2(exp: i64) -> ExactScalar {
    let two = BigInt::from(2);
    if exp >= 0 {
        BigRational::from_integer(num_traits::pow(two, exp as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(two, (-exp) as usize))
    }
}

/// Integer power with a possibly negative exponent.
pub fn powi(base: &ExactScalar, exp: i64) -> ExactScalar {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn to_f64(q: &ExactScalar) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // ratios of huge integers: fall back to a log-domain estimate
        let n = q.numer().abs();
        let d = q.denom();
        let shift = n.bits() as i64 - d.bits() as i64;
        let scaled = q.abs() / pow2(shift);
        let mag = scaled.to_f64().unwrap_or(1.0) * 2f64.powi(shift as i32);
        if q.is_negative() {
            -mag
        } else {
            mag
        }
    })
}

/// Parses `p/q`, `p` or a finite decimal like `0.25`.
pub fn parse_exact(text: &str) -> Result<ExactScalar> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let digits = format!("{whole_digits}{frac}");
        let n: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

pub fn format_exact(q: &ExactScalar) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Largest dyadic with `prec` significant bits that is ≤ `q`.
pub fn round_down(q: &ExactScalar, prec: u32) -> ExactScalar {
    round_dir(q, prec, false)
}

/// Smallest dyadic with `prec` significant bits that is ≥ `q`.
pub fn round_up(q: &ExactScalar, prec: u32) -> ExactScalar {
    round_dir(q, prec, true)
}

fn round_dir(q: &ExactScalar, prec: u32, up: bool) -> ExactScalar {
    if q.is_zero() {
        return q.clone();
    }
    let mag = q.numer().bits() as i64 - q.denom().bits() as i64;
    let k = prec as i64 - mag;
    let scaled = q * pow2(k);
    if scaled.is_integer() {
        return q.clone();
    }
    let t = if up { scaled.ceil() } else { scaled.floor() };
    t * pow2(-k)
}

/// Exact `q`-th root of a nonnegative integer, if one exists.
fn exact_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(q);
    if num_traits::pow(r.clone(), q as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// Closed interval `[lo, hi]` known to contain a real quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedScalar {
    lo: ExactScalar,
    hi: ExactScalar,
}

impl GradedScalar {
    pub fn new(lo: ExactScalar, hi: ExactScalar) -> Self {
        assert!(lo <= hi, "inverted enclosure");
        GradedScalar { lo, hi }
    }

    pub fn exact(q: ExactScalar) -> Self {
        GradedScalar { lo: q.clone(), hi: q }
    }

    pub fn zero() -> Self {
        Self::exact(BigRational::zero())
    }

    pub fn lower(&self) -> &ExactScalar {
        &self.lo
    }

    pub fn upper(&self) -> &ExactScalar {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> ExactScalar {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        to_f64(&((&self.lo + &self.hi) / int(2)))
    }

    pub fn contains(&self, q: &ExactScalar) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    /// Widens the endpoints to `prec`-bit dyadics.
    pub fn rounded(&self, prec: u32) -> Self {
        GradedScalar {
            lo: round_down(&self.lo, prec),
            hi: round_up(&self.hi, prec),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        GradedScalar {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        GradedScalar {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn neg(&self) -> Self {
        GradedScalar {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        GradedScalar { lo, hi }
    }

    pub fn scale(&self, q: &ExactScalar) -> Self {
        self.mul(&Self::exact(q.clone()))
    }

    pub fn recip(&self) -> Result<Self> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Ok(GradedScalar {
                lo: self.hi.recip(),
                hi: self.lo.recip(),
            })
        } else {
            Err(Error::NumericallyAmbiguous(
                "reciprocal of an enclosure containing zero".into(),
            ))
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.recip()?))
    }

    /// `true` if certainly ≤ `q`, `false` if certainly > `q`.
    pub fn le(&self, q: &ExactScalar) -> Result<bool> {
        if &self.hi <= q {
            Ok(true)
        } else if &self.lo > q {
            Ok(false)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "enclosure {self} straddles {}",
                format_exact(q)
            )))
        }
    }

    /// `true` if certainly < `q`, `false` if certainly ≥ `q`.
    pub fn lt(&self, q: &ExactScalar) -> Result<bool> {
        if &self.hi < q {
            Ok(true)
        } else if &self.lo >= q {
            Ok(false)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "enclosure {self} straddles {}",
                format_exact(q)
            )))
        }
    }

    /// Certain ordering of two enclosures; equal exact values compare `Equal`.
    pub fn compare(&self, o: &Self) -> Result<Ordering> {
        if self.is_exact() && o.is_exact() {
            return Ok(self.lo.cmp(&o.lo));
        }
        if self.hi < o.lo {
            Ok(Ordering::Less)
        } else if self.lo > o.hi {
            Ok(Ordering::Greater)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "enclosures {self} and {o} overlap"
            )))
        }
    }

    /// `self ≤ o` decided by enclosure.
    pub fn le_enc(&self, o: &Self) -> Result<bool> {
        if self.hi <= o.lo {
            Ok(true)
        } else if self.lo > o.hi {
            Ok(false)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "enclosures {self} and {o} overlap"
            )))
        }
    }

    /// `self < o` decided by enclosure.
    pub fn lt_enc(&self, o: &Self) -> Result<bool> {
        if self.hi < o.lo {
            Ok(true)
        } else if self.lo >= o.hi {
            Ok(false)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "enclosures {self} and {o} overlap"
            )))
        }
    }

    pub fn floor(&self) -> Result<BigInt> {
        let a = self.lo.floor().to_integer();
        let b = self.hi.floor().to_integer();
        if a == b {
            Ok(a)
        } else {
            Err(Error::NumericallyAmbiguous(format!(
                "floor of {self} is not determined"
            )))
        }
    }

    /// Natural logarithm of a positive enclosure.
    pub fn ln(&self, prec: u32) -> Result<Self> {
        if !self.lo.is_positive() {
            return Err(Error::NumericallyAmbiguous(
                "logarithm of a non-positive enclosure".into(),
            ));
        }
        let a = ln_rational(&self.lo, prec);
        let b = if self.is_exact() {
            a.clone()
        } else {
            ln_rational(&self.hi, prec)
        };
        Ok(GradedScalar { lo: a.lo, hi: b.hi })
    }

    pub fn exp(&self, prec: u32) -> Self {
        let a = exp_rational(&self.lo, prec);
        let b = if self.is_exact() {
            a.clone()
        } else {
            exp_rational(&self.hi, prec)
        };
        GradedScalar { lo: a.lo, hi: b.hi }
    }

    /// `self^c` for a positive enclosure and rational exponent.
    pub fn powc(&self, c: &ExactScalar, prec: u32) -> Result<Self> {
        if !self.lo.is_positive() {
            if self.lo.is_zero() && self.hi.is_zero() && c.is_positive() {
                return Ok(Self::zero());
            }
            return Err(Error::NumericallyAmbiguous("power of a non-positive enclosure".into()));
        }
        let a = pow_exact(&self.lo, c, prec);
        let b = if self.is_exact() {
            a.clone()
        } else {
            pow_exact(&self.hi, c, prec)
        };
        Ok(if c.is_negative() {
            GradedScalar { lo: b.lo, hi: a.hi }
        } else {
            GradedScalar { lo: a.lo, hi: b.hi }
        })
    }
}

impl fmt::Display for GradedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format_exact(&self.lo))
        } else {
            write!(f, "[{:.12e},{:.12e}]", to_f64(&self.lo), to_f64(&self.hi))
        }
    }
}

/// Enclosure of `base^c` for rational `base > 0`; exact when the value is rational.
pub fn pow_exact(base: &ExactScalar, c: &ExactScalar, prec: u32) -> GradedScalar {
    assert!(base.is_positive(), "pow_exact needs a positive base");
    if base.is_one() || c.is_zero() {
        return GradedScalar::exact(BigRational::one());
    }
    let p = c.numer();
    let q = c.denom();
    // exact path: integral exponent, or a perfect q-th power
    if let (Some(pi), Some(qi)) = (p.to_i64(), q.to_u32()) {
        let cost = (base.numer().bits() + base.denom().bits()) as i64 * pi.abs();
        if cost < 1 << 16 {
            let raised = powi(base, pi);
            if qi == 1 {
                return GradedScalar::exact(raised);
            }
            if let (Some(n), Some(d)) = (exact_root(raised.numer(), qi), exact_root(raised.denom(), qi)) {
                return GradedScalar::exact(BigRational::new(n, d));
            }
        }
    }
    type Key = (ExactScalar, ExactScalar, u32);
    static CACHE: OnceLock<Mutex<HashMap<Key, GradedScalar>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (base.clone(), c.clone(), prec);
    if let Some(v) = cache.lock().expect("power cache").get(&key) {
        return v.clone();
    }
    let guard = prec + 24;
    let l = ln_rational(base, guard);
    let y = l.scale(c).rounded(guard);
    let v = y.exp(guard).rounded(prec);
    let mut map = cache.lock().expect("power cache");
    if map.len() >= 1 << 14 {
        map.clear();
    }
    map.insert(key, v.clone());
    v
}

/// Fixed-point enclosure `[lo, hi]·2^{-bits}` with outward rounding.
#[derive(Clone, Debug)]
struct Fixed {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

fn shr_ceil(x: &BigInt, k: u32) -> BigInt {
    -((-x) >> k)
}

impl Fixed {
    fn from_rational(q: &ExactScalar, bits: u32) -> Fixed {
        let scaled = q * pow2(bits as i64);
        Fixed {
            lo: scaled.floor().to_integer(),
            hi: scaled.ceil().to_integer(),
            bits,
        }
    }

    fn one(bits: u32) -> Fixed {
        let u = BigInt::one() << bits;
        Fixed {
            lo: u.clone(),
            hi: u,
            bits,
        }
    }

    fn add(&self, o: &Fixed) -> Fixed {
        Fixed {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
            bits: self.bits,
        }
    }

    fn mul(&self, o: &Fixed) -> Fixed {
        let p = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let min = p.iter().min().expect("four products");
        let max = p.iter().max().expect("four products");
        Fixed {
            lo: min >> self.bits,
            hi: shr_ceil(max, self.bits),
            bits: self.bits,
        }
    }

    fn scale_int(&self, k: i64) -> Fixed {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if k >= 0 {
            Fixed {
                lo: a,
                hi: b,
                bits: self.bits,
            }
        } else {
            Fixed {
                lo: b,
                hi: a,
                bits: self.bits,
            }
        }
    }

    fn div_int(&self, d: i64) -> Fixed {
        let d = BigInt::from(d);
        Fixed {
            lo: self.lo.div_floor(&d),
            hi: -((-&self.hi).div_floor(&d)),
            bits: self.bits,
        }
    }

    fn widen(&self, e: &BigInt) -> Fixed {
        Fixed {
            lo: &self.lo - e,
            hi: &self.hi + e,
            bits: self.bits,
        }
    }

    fn max_abs(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    fn to_graded(&self) -> GradedScalar {
        let den = BigInt::one() << self.bits;
        GradedScalar::new(
            BigRational::new(self.lo.clone(), den.clone()),
            BigRational::new(self.hi.clone(), den),
        )
    }
}

/// `atanh(t)` for an enclosure with `|t| ≤ 1/3`.
fn atanh_fixed(t: &Fixed) -> Fixed {
    let t2 = t.mul(t);
    let mut power = t.clone();
    let mut sum = t.clone();
    let two = BigInt::from(2);
    for j in 1i64.. {
        power = power.mul(&t2);
        sum = sum.add(&power.div_int(2 * j + 1));
        let m = power.max_abs();
        // the remaining terms sum to at most |t|^{2j+1}·t²/(1-t²) ≤ |t|^{2j+1}/8
        if m < two || j > 4 * t.bits as i64 {
            return sum.widen(&((m >> 3u32) + 1));
        }
    }
    unreachable!()
}

fn ln2_fixed(bits: u32) -> Fixed {
    static CACHE: OnceLock<Mutex<HashMap<u32, Fixed>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().expect("ln2 cache").get(&bits) {
        return v.clone();
    }
    let v = atanh_fixed(&Fixed::from_rational(&rat(1, 3), bits)).scale_int(2);
    cache.lock().expect("ln2 cache").insert(bits, v.clone());
    v
}

/// Enclosure of ln(2).
#[cfg(test)]
fn ln2(prec: u32) -> GradedScalar {
    ln2_fixed(prec + 16).to_graded().rounded(prec)
}

/// Enclosure of ln(x) for rational x > 0.
pub fn ln_rational(x: &ExactScalar, prec: u32) -> GradedScalar {
    assert!(x.is_positive());
    if x.is_one() {
        return GradedScalar::zero();
    }
    let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let mut m = x / pow2(k);
    // bring m into [2/3, 4/3) so that |t| ≤ 1/5 and k = 0 near 1
    while m >= rat(4, 3) {
        m /= int(2);
        k += 1;
    }
    while m < rat(2, 3) {
        m *= int(2);
        k -= 1;
    }
    let t = (&m - int(1)) / (&m + int(1));
    let lost = if t.is_zero() {
        0
    } else {
        (t.denom().bits() as i64 - t.numer().bits() as i64).max(0) as u32
    };
    let bits = prec + 32 + lost + 64 - (k.unsigned_abs().leading_zeros());
    let mut out = atanh_fixed(&Fixed::from_rational(&t, bits)).scale_int(2);
    if k != 0 {
        out = out.add(&ln2_fixed(bits).scale_int(k));
    }
    out.to_graded().rounded(prec)
}

/// Enclosure of exp(y) for rational y.
pub fn exp_rational(y: &ExactScalar, prec: u32) -> GradedScalar {
    if y.is_zero() {
        return GradedScalar::exact(BigRational::one());
    }
    // y = k·ln2 + r with |r| ≤ 1/2
    let mut k = (to_f64(y) / std::f64::consts::LN_2).round() as i64;
    let bits = prec + 40 + 64 - k.unsigned_abs().leading_zeros();
    let yf = Fixed::from_rational(y, bits);
    let half = BigInt::one() << (bits - 1);
    let r = loop {
        let r = yf.add(&ln2_fixed(bits).scale_int(-k));
        if r.hi > half {
            k += 1;
        } else if r.lo < -&half {
            k -= 1;
        } else {
            break r;
        }
    };
    let mut term = Fixed::one(bits);
    let mut sum = term.clone();
    let two = BigInt::from(2);
    for j in 1i64.. {
        term = term.mul(&r).div_int(j);
        sum = sum.add(&term);
        let m = term.max_abs();
        // with |r| ≤ 1/2 the remaining terms sum to at most |term|
        if m < two || j > bits as i64 {
            sum = sum.widen(&(m + 1));
            break;
        }
    }
    if sum.lo.is_negative() {
        sum.lo = BigInt::zero();
    }
    let g = sum.to_graded();
    let p = pow2(k);
    GradedScalar::new(g.lo * &p, g.hi * &p).rounded(prec)
}

pub fn floor_int(q: &ExactScalar) -> BigInt {
    q.floor().to_integer()
}

/// Rational bisection bracket for the real `q`-th root of `a^p`, used as an
/// independent check on [`pow_exact`].
pub fn root_bracket(a: &ExactScalar, p: i64, q: u32, bits: u32) -> (ExactScalar, ExactScalar) {
    let target = powi(a, p);
    let mut lo = BigRational::zero();
    let mut hi = if target > int(1) { target.clone() } else { int(1) };
    for _ in 0..bits {
        let mid = (&lo + &hi) / int(2);
        if num_traits::pow(mid.clone(), q as usize) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
