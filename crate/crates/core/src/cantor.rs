//! Generalised Cantor constructions: level collections, per-ancestor removal
//! sets and budget tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_exact, int, parse_exact, pow_exact, powi, ExactScalar, GradedScalar};
use crate::space::{Ball, SpaceTag, SplittingStructure, StandardSplitting};

/// Sparse table of removal budgets `r_{m,n}`, zero where unset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BudgetTable {
    entries: BTreeMap<(usize, usize), ExactScalar>,
}

impl BudgetTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Local table with `r_{n,n} = r` for `n < columns`.
    pub fn diagonal(r: ExactScalar, columns: usize) -> Self {
        let mut t = Self::new();
        for n in 0..columns {
            t.set(n, n, r.clone()).expect("diagonal entries are valid");
        }
        t
    }

    pub fn set(&mut self, m: usize, n: usize, r: ExactScalar) -> Result<()> {
        if m > n {
            return Err(Error::InvalidParameter(format!("budget index m={m} exceeds n={n}")));
        }
        if r.is_negative() {
            return Err(Error::InvalidParameter("budgets are nonnegative".into()));
        }
        if r.is_zero() {
            self.entries.remove(&(m, n));
        } else {
            self.entries.insert((m, n), r);
        }
        Ok(())
    }

    pub fn get(&self, m: usize, n: usize) -> ExactScalar {
        self.entries.get(&(m, n)).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Nonzero entries in (m, n) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &ExactScalar)> {
        self.entries.iter().map(|(&(m, n), r)| (m, n, r))
    }

    pub fn is_local(&self) -> bool {
        self.entries.keys().all(|(m, n)| m == n)
    }

    pub fn max_column(&self) -> Option<usize> {
        self.entries.keys().map(|&(_, n)| n).max()
    }
}

/// One block of removals `𝒜_{m,n}(parent)` supplied to [`CantorConstruction::extend_level`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    pub m: usize,
    pub parent: Ball,
    pub removed: Vec<Ball>,
}

/// A finite-depth 𝒦(B₀, R, r) construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorConstruction {
    b0: Ball,
    modulus: u64,
    structure: StandardSplitting,
    levels: Vec<Vec<Ball>>,
    removals: BTreeMap<(usize, usize, Ball), Vec<Ball>>,
    budgets: BudgetTable,
}

impl CantorConstruction {
    pub fn new(b0: Ball, modulus: u64, budgets: BudgetTable) -> Result<Self> {
        let structure = StandardSplitting(b0.space());
        if modulus < 2 || !structure.in_u(modulus) {
            return Err(Error::NotInU(modulus));
        }
        Ok(CantorConstruction {
            b0: b0.clone(),
            modulus,
            structure,
            levels: vec![vec![b0]],
            removals: BTreeMap::new(),
            budgets,
        })
    }

    pub fn b0(&self) -> &Ball {
        &self.b0
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn space(&self) -> SpaceTag {
        self.structure.0
    }

    pub fn structure(&self) -> StandardSplitting {
        self.structure
    }

    pub fn budgets(&self) -> &BudgetTable {
        &self.budgets
    }

    /// Index of the deepest built level.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn survivors(&self, depth: usize) -> Result<&[Ball]> {
        self.levels
            .get(depth)
            .map(|v| v.as_slice())
            .ok_or(Error::DepthNotBuilt {
                requested: depth,
                built: self.depth(),
            })
    }

    /// `𝒜_{m,n}(parent)`, empty when nothing was removed.
    pub fn removals_at(&self, m: usize, n: usize, parent: &Ball) -> &[Ball] {
        self.removals
            .get(&(m, n, parent.clone()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// All removal blocks as `(m, n, parent, removed)`.
    pub fn removal_blocks(&self) -> impl Iterator<Item = (usize, usize, &Ball, &[Ball])> {
        self.removals.iter().map(|((m, n, p), r)| (*m, *n, p, r.as_slice()))
    }

    /// The ancestor of `b` in level `m`, if `b` lies under a level-`m` survivor.
    pub fn ancestor_at(&self, m: usize, b: &Ball) -> Option<&Ball> {
        let level = self.levels.get(m)?;
        level.iter().find(|p| p.contains_ball(b))
    }

    pub fn is_survivor(&self, depth: usize, b: &Ball) -> bool {
        self.levels.get(depth).is_some_and(|l| l.binary_search(b).is_ok())
    }

    fn modulus_power(&self, k: usize) -> Result<u64> {
        self.modulus
            .checked_pow(k as u32)
            .ok_or_else(|| Error::InvalidParameter(format!("R^{k} overflows")))
    }

    /// Appends `ℬ_{n+1} = (1/R)ℬ_n \ ⋃_m 𝒜_{m,n}`; fails without side effects.
    pub fn extend_level(&self, removals: &[Removal]) -> Result<CantorConstruction> {
        let n = self.depth();
        let mut grouped: BTreeMap<(usize, Ball), Vec<Ball>> = BTreeMap::new();
        for block in removals {
            if block.m > n {
                return Err(Error::InvalidParameter(format!(
                    "removal level m={} exceeds n={n}",
                    block.m
                )));
            }
            if !self.is_survivor(block.m, &block.parent) {
                return Err(Error::NotADescendant {
                    parent: block.parent.to_string(),
                    removed: format!("(parent not in level {})", block.m),
                    depth: n + 1,
                });
            }
            let u = self.modulus_power(n - block.m + 1)?;
            for a in &block.removed {
                if !self.structure.is_child(&block.parent, a, u) {
                    return Err(Error::NotADescendant {
                        parent: block.parent.to_string(),
                        removed: a.to_string(),
                        depth: n + 1,
                    });
                }
            }
            let entry = grouped.entry((block.m, block.parent.clone())).or_default();
            entry.extend(block.removed.iter().cloned());
        }
        for ((m, parent), balls) in grouped.iter_mut() {
            balls.sort();
            balls.dedup();
            let budget = self.budgets.get(*m, n);
            if int(balls.len() as i64) > budget {
                return Err(Error::BudgetExceeded {
                    m: *m,
                    n,
                    parent: parent.to_string(),
                    count: balls.len(),
                    budget: format_exact(&budget),
                });
            }
        }
        let gone: HashSet<&Ball> = grouped.values().flatten().collect();
        let mut next = Vec::new();
        for b in &self.levels[n] {
            for child in self.structure.split(b, self.modulus)? {
                if !gone.contains(&child) {
                    next.push(child);
                }
            }
        }
        next.sort();
        let mut out = self.clone();
        out.levels.push(next);
        for ((m, parent), balls) in grouped {
            if !balls.is_empty() {
                out.removals.insert((m, n, parent), balls);
            }
        }
        Ok(out)
    }

    /// Extends `steps` times, asking `rule` for each level's removals.
    pub fn build<F>(mut self, steps: usize, mut rule: F) -> Result<CantorConstruction>
    where
        F: FnMut(&CantorConstruction, usize) -> Result<Vec<Removal>>,
    {
        for _ in 0..steps {
            let n = self.depth();
            let rem = rule(&self, n)?;
            self = self.extend_level(&rem)?;
        }
        Ok(self)
    }

    /// Checks `r_{m,n} ≤ f(R)^{(n-m+1)(1-ε)}` for every nonzero entry.
    ///
    /// Only the construction's own modulus is certified.
    pub fn validate_budgets(&self, eps: &ExactScalar, prec: u32) -> Result<BudgetReport> {
        if !eps.is_positive() || *eps > int(1) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1]".into()));
        }
        let f_r = int(self.structure.count(self.modulus) as i64);
        let mut violations = Vec::new();
        let mut checked = 0;
        for (m, n, r) in self.budgets.iter() {
            let expo = int((n - m + 1) as i64) * (int(1) - eps);
            let bound = pow_exact(&f_r, &expo, prec);
            checked += 1;
            if !GradedScalar::exact(r.clone()).le_enc(&bound)? {
                violations.push(BudgetViolation {
                    m,
                    n,
                    r: r.clone(),
                    bound,
                });
            }
        }
        Ok(BudgetReport {
            modulus: self.modulus,
            eps: eps.clone(),
            checked,
            violations,
        })
    }

    /// Re-expresses a local construction of step `R^ell` at step `R`.
    ///
    /// Returns the construction (removals keyed where the level rule needs
    /// them) and the rich-form table with entries at `(ell(k-1), ell k)`.
    pub fn reindex_to_rich(&self, ell: usize, r: u64) -> Result<(CantorConstruction, BudgetTable)> {
        if ell == 0 {
            return Err(Error::InvalidParameter("ell must be positive".into()));
        }
        let expected = r
            .checked_pow(ell as u32)
            .ok_or_else(|| Error::InvalidParameter("R^ell overflows".into()))?;
        if expected != self.modulus {
            return Err(Error::ParameterMismatch(format!(
                "modulus {} is not {r}^{ell}",
                self.modulus
            )));
        }
        if let Some((m, n, _, _)) = self.removal_blocks().find(|(m, n, _, _)| m != n) {
            return Err(Error::NotLocal { m, n });
        }
        if let Some((m, n, _)) = self.budgets.iter().find(|(m, n, _)| m != n) {
            return Err(Error::NotLocal { m, n });
        }
        let mut inner = BudgetTable::new();
        let mut rich = BudgetTable::new();
        for (k, _, v) in self.budgets.iter() {
            inner.set(ell * k, ell * k + ell - 1, v.clone())?;
            rich.set(ell * k, ell * (k + 1), v.clone())?;
        }
        let start = CantorConstruction::new(self.b0.clone(), r, inner)?;
        let out = start.build(ell * self.depth(), |c, n| {
            if (n + 1) % ell != 0 {
                return Ok(Vec::new());
            }
            let k = (n + 1) / ell - 1;
            Ok(self
                .removal_blocks()
                .filter(|(m, _, _, _)| *m == k)
                .map(|(_, _, parent, removed)| Removal {
                    m: ell * k,
                    parent: parent.clone(),
                    removed: removed.to_vec(),
                })
                .filter(|blk| c.is_survivor(blk.m, &blk.parent))
                .collect())
        })?;
        Ok((out, rich))
    }

    /// Line-oriented dump: header, budgets, levels, removals.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "CANTOR R={} B0={}", self.modulus, self.b0);
        for (m, n, r) in self.budgets.iter() {
            let _ = writeln!(s, "BUDGET {m} {n} {}", format_exact(r));
        }
        for (n, level) in self.levels.iter().enumerate() {
            let _ = writeln!(s, "LEVEL {n}");
            for b in level {
                let _ = writeln!(s, "{b}");
            }
        }
        for ((m, n, parent), removed) in &self.removals {
            for a in removed {
                let _ = writeln!(s, "REMOVE {m} {n} {parent} {a}");
            }
        }
        s
    }

    /// Parses a dump and replays it, so the result satisfies every invariant.
    pub fn load(text: &str) -> Result<CantorConstruction> {
        let perr = |l: &str| Error::Parse(format!("bad construction line {l:?}"));
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty construction dump".into()))?;
        let rest = header.strip_prefix("CANTOR ").ok_or_else(|| perr(header))?;
        let (rpart, bpart) = rest.split_once(' ').ok_or_else(|| perr(header))?;
        let modulus: u64 = rpart
            .strip_prefix("R=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| perr(header))?;
        let b0: Ball = bpart.strip_prefix("B0=").ok_or_else(|| perr(header))?.parse()?;
        let mut budgets = BudgetTable::new();
        let mut levels: Vec<Vec<Ball>> = Vec::new();
        let mut removes: BTreeMap<usize, Vec<Removal>> = BTreeMap::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["BUDGET", m, n, r] => {
                    let m = m.parse().map_err(|_| perr(line))?;
                    let n = n.parse().map_err(|_| perr(line))?;
                    budgets.set(m, n, parse_exact(r)?)?;
                }
                ["LEVEL", n] => {
                    let n: usize = n.parse().map_err(|_| perr(line))?;
                    if n != levels.len() {
                        return Err(perr(line));
                    }
                    levels.push(Vec::new());
                }
                ["REMOVE", m, n, parent, removed] => {
                    let m = m.parse().map_err(|_| perr(line))?;
                    let n = n.parse().map_err(|_| perr(line))?;
                    removes.entry(n).or_default().push(Removal {
                        m,
                        parent: parent.parse()?,
                        removed: vec![removed.parse()?],
                    });
                }
                [ball] => levels.last_mut().ok_or_else(|| perr(line))?.push(ball.parse()?),
                _ => return Err(perr(line)),
            }
        }
        let depth = levels.len().saturating_sub(1);
        let c = CantorConstruction::new(b0, modulus, budgets)?;
        let c = c.build(depth, |_, n| Ok(removes.remove(&n).unwrap_or_default()))?;
        if let Some(n) = removes.keys().next() {
            return Err(Error::DepthNotBuilt {
                requested: *n + 1,
                built: depth,
            });
        }
        for (n, level) in levels.iter().enumerate() {
            let mut sorted = level.clone();
            sorted.sort();
            if sorted != c.levels[n] {
                return Err(Error::Parse(format!("level {n} does not match the replayed removals")));
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetViolation {
    pub m: usize,
    pub n: usize,
    pub r: ExactScalar,
    pub bound: GradedScalar,
}

/// Outcome of [`CantorConstruction::validate_budgets`] for one modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetReport {
    pub modulus: u64,
    pub eps: ExactScalar,
    pub checked: usize,
    pub violations: Vec<BudgetViolation>,
}

impl BudgetReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RichReport {
    /// `(n, Σ_m (4/R)^{n-m+1} r_{m,n})` for every checked column.
    pub sums: Vec<(usize, ExactScalar)>,
    pub first_violation: Option<usize>,
}

impl RichReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Exact check of `Σ_{m≤n} (4/R)^{n-m+1} r_{m,n} ≤ y` for `n ≤ n_max`.
pub fn rich_budget_check(table: &BudgetTable, r: &ExactScalar, y: &ExactScalar, n_max: usize) -> Result<RichReport> {
    let four = int(4);
    if *r <= four {
        return Err(Error::RNotAboveM {
            r: format_exact(r),
            m: "4/1".into(),
        });
    }
    if !y.is_positive() || *y >= int(1) {
        return Err(Error::InvalidParameter("y must lie in (0, 1)".into()));
    }
    let ratio = four / r;
    let mut sums = Vec::with_capacity(n_max + 1);
    let mut first_violation = None;
    for n in 0..=n_max {
        let mut sum = BigRational::zero();
        for m in 0..=n {
            let e = table.get(m, n);
            if !e.is_zero() {
                sum += powi(&ratio, (n - m + 1) as i64) * e;
            }
        }
        if first_violation.is_none() && sum > *y {
            first_violation = Some(n);
        }
        sums.push((n, sum));
    }
    Ok(RichReport { sums, first_violation })
}

/// Zero-removal construction to `depth`.
pub fn full_construction(b0: Ball, modulus: u64, depth: usize) -> Result<CantorConstruction> {
    CantorConstruction::new(b0, modulus, BudgetTable::new())?.build(depth, |_, _| Ok(Vec::new()))
}

/// The middle-thirds set on [0, 1]: R = 3, one removal per survivor.
pub fn middle_thirds(depth: usize) -> Result<CantorConstruction> {
    let c = CantorConstruction::new(Ball::unit_interval(), 3, BudgetTable::diagonal(int(1), depth))?;
    c.build(depth, |c, n| {
        let s = c.structure();
        c.survivors(n)?
            .iter()
            .map(|b| {
                Ok(Removal {
                    m: n,
                    parent: b.clone(),
                    removed: vec![s.split(b, 3)?[1].clone()],
                })
            })
            .collect()
    })
}

/// Shift construction of the words that avoid `pattern` as a factor.
///
/// Each level removes the child that would complete the pattern, so the
/// construction is local with `r_{n,n} = 1`.
pub fn avoiding_construction(pattern: &[u8], depth: usize) -> Result<CantorConstruction> {
    if pattern.is_empty() {
        return Err(Error::InvalidParameter("empty pattern".into()));
    }
    let c = CantorConstruction::new(Ball::root_cylinder(), 2, BudgetTable::diagonal(int(1), depth))?;
    let head = &pattern[..pattern.len() - 1];
    let last = pattern[pattern.len() - 1];
    c.build(depth, |c, n| {
        Ok(c.survivors(n)?
            .iter()
            .filter(|b| b.word().unwrap().ends_with(head))
            .map(|b| {
                let mut w = b.word().unwrap().to_vec();
                w.push(last);
                Removal {
                    m: n,
                    parent: b.clone(),
                    removed: vec![Ball::cylinder(w)],
                }
            })
            .collect())
    })
}

/// Words with no two consecutive ones.
pub fn golden_mean(depth: usize) -> Result<CantorConstruction> {
    avoiding_construction(&[1, 1], depth)
}

/// Value of `f(R)^{(n-m+1)(1-ε)}` used by [`CantorConstruction::validate_budgets`].
pub fn def_bound(f_r: u64, span: usize, eps: &ExactScalar, prec: u32) -> GradedScalar {
    pow_exact(&int(f_r as i64), &(int(span as i64) * (int(1) - eps)), prec)
}
