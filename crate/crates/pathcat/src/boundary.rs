//! Boundary points of X = v₁∂Λ, cylinder sets and the partitions P_{m,n}, Q_n.
//!
//! A boundary point is an infinite path. Either it has infinitely many Λ₂
//! edges ([`Tail::GammaInf`], known up to its stored prefix), or it ends in an
//! infinite Λ₁ tail α^a β^b with a or b equal to ω ([`Tail::AB`], known
//! exactly).
//!
//! [`Oracle`] enumerates finitely many representative points such that every
//! boundary point shares its membership pattern with one of them. Two modes:
//! a plain horizon (all paths up to a length) and a focused mode that only
//! refines along a given family of paths.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cat_paths::{is_prefix, Block, KSequence, Path, PathError};

pub const EXACT: u32 = u32::MAX;
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundaryError {
    #[error("insufficient resolution: need {needed}, have {have}")]
    InsufficientResolution { needed: u32, have: u32 },
    #[error("point enumeration exceeded the budget of {0} points")]
    ResourceLimit(usize),
    #[error("an AB tail must follow an empty prefix or an L2 block")]
    MalformedTail,
    #[error("expression path {0} is not resolved by this oracle")]
    Unresolved(String),
    #[error("subtracted path {0} does not strictly extend the base")]
    BadSubtraction(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A natural number or ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    Fin(u32),
    Omega,
}

impl Ext {
    fn add(self, v: u32) -> Ext {
        match self {
            Ext::Fin(a) => Ext::Fin(a + v),
            Ext::Omega => Ext::Omega,
        }
    }

    fn sub(self, v: u32) -> Ext {
        match self {
            Ext::Fin(a) => Ext::Fin(a - v),
            Ext::Omega => Ext::Omega,
        }
    }

    fn ge(self, v: u32) -> bool {
        match self {
            Ext::Fin(a) => a >= v,
            Ext::Omega => true,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(a) => write!(f, "{a}"),
            Ext::Omega => write!(f, "ω"),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ext::Fin(a) => s.serialize_u32(*a),
            Ext::Omega => s.serialize_str("ω"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "type")]
pub enum Tail {
    GammaInf,
    AB { a: Ext, b: Ext },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SymbolicPoint {
    prefix: Path,
    tail: Tail,
    resolution: u32,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum XBlock {
    L1(Ext, Ext),
    L2(Block),
}

impl SymbolicPoint {
    /// For `AB` the point is prefix·α^a β^b, exact at every resolution. For
    /// `GammaInf` the prefix is followed immediately by a Λ₂ edge and then
    /// infinitely many more; only paths no longer than the prefix are decided.
    pub fn new(prefix: Path, tail: Tail) -> Result<SymbolicPoint, BoundaryError> {
        let resolution = match tail {
            Tail::AB { a, b } => {
                if a != Ext::Omega && b != Ext::Omega {
                    return Err(BoundaryError::MalformedTail);
                }
                if matches!(prefix.last_block(), Some(Block::L1 { .. })) {
                    return Err(BoundaryError::MalformedTail);
                }
                EXACT
            }
            Tail::GammaInf => prefix.len() + 1,
        };
        Ok(SymbolicPoint {
            prefix,
            tail,
            resolution,
        })
    }

    /// prefix·α^∞β^∞.
    pub fn omega_omega(prefix: Path) -> SymbolicPoint {
        SymbolicPoint::new(
            prefix,
            Tail::AB {
                a: Ext::Omega,
                b: Ext::Omega,
            },
        )
        .expect("prefix must end in an L2 block")
    }

    pub fn ab(prefix: Path, a: Ext, b: Ext) -> Result<SymbolicPoint, BoundaryError> {
        SymbolicPoint::new(prefix, Tail::AB { a, b })
    }

    pub fn with_resolution(mut self, resolution: u32) -> SymbolicPoint {
        self.resolution = resolution.min(self.resolution);
        self
    }

    pub fn prefix(&self) -> &Path {
        &self.prefix
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn range(&self) -> u32 {
        self.prefix.range()
    }

    /// Whether the point is a maximal element, i.e. lies in Λ**.
    pub fn is_maximal(&self) -> bool {
        matches!(
            self.tail,
            Tail::GammaInf
                | Tail::AB {
                    a: Ext::Omega,
                    b: Ext::Omega
                }
        )
    }

    fn xblocks(&self) -> Vec<XBlock> {
        let mut out: Vec<XBlock> = self
            .prefix
            .blocks()
            .iter()
            .map(|&b| match b {
                Block::L1 { m, n } => XBlock::L1(Ext::Fin(m), Ext::Fin(n)),
                other => XBlock::L2(other),
            })
            .collect();
        if let Tail::AB { a, b } = self.tail {
            out.push(XBlock::L1(a, b));
        }
        out
    }

    /// Whether ν is a prefix of the point.
    pub fn has_prefix(&self, nu: &Path) -> Result<bool, BoundaryError> {
        if nu.range() != self.range() {
            return Ok(false);
        }
        if self.tail == Tail::GammaInf && nu.len() > self.prefix.len() {
            let pb = self.prefix.blocks();
            if nu.blocks().len() > pb.len() && &nu.blocks()[..pb.len()] == pb {
                return Err(BoundaryError::InsufficientResolution {
                    needed: nu.len() + 1,
                    have: self.resolution,
                });
            }
            return Ok(false);
        }
        let xb = self.xblocks();
        let nb = nu.blocks();
        let Some(j) = nb.len().checked_sub(1) else {
            return Ok(true);
        };
        if xb.len() <= j {
            return Ok(false);
        }
        for idx in 0..j {
            let same = match (nb[idx], xb[idx]) {
                (Block::L1 { m, n }, XBlock::L1(a, b)) => Ext::Fin(m) == a && Ext::Fin(n) == b,
                (l2, XBlock::L2(x)) => l2 == x,
                _ => false,
            };
            if !same {
                return Ok(false);
            }
        }
        Ok(match (nb[j], xb[j]) {
            (Block::L1 { m, n }, XBlock::L1(a, b)) => a.ge(m) && b.ge(n),
            (l2 @ Block::L2 { .. }, XBlock::L2(x)) => l2 == x,
            _ => false,
        })
    }

    /// The point λx, where x is this point and s(λ) is its range.
    pub fn prepend(&self, lam: &Path) -> Result<SymbolicPoint, BoundaryError> {
        let resolution = if self.resolution == EXACT {
            EXACT
        } else {
            self.resolution + lam.len()
        };
        if let (Tail::AB { a, b }, true) = (self.tail, self.prefix.is_unit()) {
            if lam.source() != self.range() {
                return Err(PathError::SourceRangeMismatch {
                    left_source: lam.source(),
                    right_range: self.range(),
                }
                .into());
            }
            let (core, (m, n)) = lam.split_trailing_l1();
            let p = SymbolicPoint::ab(core, a.add(m), b.add(n))?;
            return Ok(p.with_resolution(resolution));
        }
        let prefix = lam.compose(&self.prefix)?;
        Ok(SymbolicPoint {
            prefix,
            tail: self.tail,
            resolution,
        })
    }

    /// The point y with x = νy.
    pub fn strip_prefix(&self, nu: &Path) -> Result<SymbolicPoint, BoundaryError> {
        if !self.has_prefix(nu)? {
            return Err(PathError::NotAPrefix.into());
        }
        let resolution = if self.resolution == EXACT {
            EXACT
        } else if nu.len() <= self.resolution {
            self.resolution - nu.len()
        } else {
            return Err(BoundaryError::InsufficientResolution {
                needed: nu.len(),
                have: self.resolution,
            });
        };
        if self.tail == Tail::GammaInf || nu.blocks().len() < self.prefix.blocks().len() {
            let nb = nu.blocks().len();
            let pb = self.prefix.blocks();
            let exhausts_l1 = nb > 0
                && matches!(
                    (nu.blocks()[nb - 1], pb.get(nb - 1)),
                    (Block::L1 { .. }, Some(Block::L1 { .. }))
                );
            if self.tail == Tail::GammaInf || !exhausts_l1 || nb < pb.len() {
                let rest = crate::cat_paths::factor_out(&self.prefix, nu)?;
                return Ok(SymbolicPoint {
                    prefix: rest,
                    tail: self.tail,
                    resolution,
                });
            }
        }
        // ν reaches into the AB tail.
        let Tail::AB { a, b } = self.tail else {
            unreachable!()
        };
        let (m, n) = match nu.last_block() {
            Some(Block::L1 { m, n }) if nu.blocks().len() == self.prefix.blocks().len() + 1 => {
                (m, n)
            }
            _ => (0, 0),
        };
        let p = SymbolicPoint::ab(Path::unit(nu.source()), a.sub(m), b.sub(n))?;
        Ok(p.with_resolution(resolution))
    }

    /// Whether the j-th edge (1-based) lies in Λ₂; `None` when undetermined.
    pub fn edge_is_l2(&self, j: u32) -> Option<bool> {
        if j <= self.prefix.len() {
            return Some(self.prefix.edge_is_l2(j));
        }
        match self.tail {
            Tail::AB { .. } => Some(false),
            Tail::GammaInf if j == self.prefix.len() + 1 => Some(true),
            Tail::GammaInf => None,
        }
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.prefix)?;
        match self.tail {
            Tail::GammaInf => write!(f, "·γ…"),
            Tail::AB { a, b } => write!(f, "·α^{a}β^{b}"),
        }
    }
}

/// Z(base) \ ∪ Z(subtracted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderExpr {
    pub base: Path,
    pub subtracted: Vec<Path>,
}

impl CylinderExpr {
    pub fn new(base: Path, subtracted: Vec<Path>) -> Result<CylinderExpr, BoundaryError> {
        for s in &subtracted {
            if s == &base || !is_prefix(&base, s) {
                return Err(BoundaryError::BadSubtraction(s.to_string()));
            }
        }
        Ok(CylinderExpr { base, subtracted })
    }

    /// Z(ν).
    pub fn z(base: Path) -> CylinderExpr {
        CylinderExpr {
            base,
            subtracted: Vec::new(),
        }
    }

    /// Z(ν) \ Z(νλ).
    pub fn z_minus(base: Path, lam: &Path) -> Result<CylinderExpr, BoundaryError> {
        let ext = base.compose(lam)?;
        CylinderExpr::new(base, vec![ext])
    }

    /// Z(ν) or Z(ν) \ Z(νλ) with |λ| = 1.
    pub fn is_basic(&self) -> bool {
        match self.subtracted.as_slice() {
            [] => true,
            [s] => s.len() == self.base.len() + 1,
            _ => false,
        }
    }

    pub fn max_len(&self) -> u32 {
        self.paths().map(Path::len).max().unwrap_or(0)
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(&self.base).chain(self.subtracted.iter())
    }

    /// μE = Z(μν) \ ∪ Z(μν_i).
    pub fn prefixed(&self, mu: &Path) -> Result<CylinderExpr, BoundaryError> {
        Ok(CylinderExpr {
            base: mu.compose(&self.base)?,
            subtracted: self
                .subtracted
                .iter()
                .map(|s| mu.compose(s))
                .collect::<Result<_, _>>()?,
        })
    }
}

impl fmt::Display for CylinderExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z({})", self.base)?;
        for s in &self.subtracted {
            write!(f, " \\ Z({s})")?;
        }
        Ok(())
    }
}

pub fn contains(e: &CylinderExpr, x: &SymbolicPoint) -> Result<bool, BoundaryError> {
    let needed = 1 + e.max_len();
    if x.resolution() < needed {
        return Err(BoundaryError::InsufficientResolution {
            needed,
            have: x.resolution(),
        });
    }
    if !x.has_prefix(&e.base)? {
        return Ok(false);
    }
    for s in &e.subtracted {
        if x.has_prefix(s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub label: String,
    pub cells: Vec<CylinderExpr>,
}

impl Partition {
    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.cells.iter().flat_map(CylinderExpr::paths)
    }

    pub fn max_len(&self) -> u32 {
        self.cells
            .iter()
            .map(CylinderExpr::max_len)
            .max()
            .unwrap_or(0)
    }

    pub fn prefixed(&self, mu: &Path) -> Result<Partition, BoundaryError> {
        Ok(Partition {
            label: format!("{mu}·{}", self.label),
            cells: self
                .cells
                .iter()
                .map(|c| c.prefixed(mu))
                .collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verified {
    pub resolution: u32,
    pub point_count: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub label: String,
    pub cells: Vec<CylinderExpr>,
    pub verified: Verified,
    #[serde(skip)]
    pub uncovered: Vec<SymbolicPoint>,
    #[serde(skip)]
    pub overlapping: Vec<(SymbolicPoint, Vec<usize>)>,
}

impl PartitionReport {
    pub fn ok(&self) -> bool {
        self.verified.ok
    }
}

enum Scope {
    Horizon,
    Focus(HashSet<Path>),
}

/// A finite family of representative boundary points.
pub struct Oracle {
    range: u32,
    resolution: u32,
    scope: Scope,
    points: Vec<SymbolicPoint>,
}

impl Oracle {
    /// Representatives for every pattern of membership in Z(ν), |ν| ≤ d.
    pub fn horizon(
        range: u32,
        d: u32,
        k: &KSequence,
        budget: usize,
    ) -> Result<Oracle, BoundaryError> {
        let mut w = Walker::new(k, budget, d);
        w.walk(Path::unit(range), false, Rel::Horizon(range + d))?;
        Ok(Oracle {
            range,
            resolution: d,
            scope: Scope::Horizon,
            points: w.out,
        })
    }

    /// Representatives for every pattern of membership in Z(ν), ν ∈ `focus`.
    pub fn focused<'a>(
        range: u32,
        focus: impl IntoIterator<Item = &'a Path>,
        d: u32,
        k: &KSequence,
        budget: usize,
    ) -> Result<Oracle, BoundaryError> {
        let set: HashSet<Path> = focus.into_iter().cloned().collect();
        for p in &set {
            if p.range() != range {
                return Err(BoundaryError::Unresolved(p.to_string()));
            }
            if p.len() + 1 > d {
                return Err(BoundaryError::InsufficientResolution {
                    needed: p.len() + 1,
                    have: d,
                });
            }
            p.validate_branches(k)?;
        }
        let rel: Vec<&Path> = set.iter().filter(|p| !p.is_unit()).collect();
        let mut w = Walker::new(k, budget, d);
        w.walk(Path::unit(range), false, Rel::Focus(rel))?;
        Ok(Oracle {
            range,
            resolution: d,
            scope: Scope::Focus(set),
            points: w.out,
        })
    }

    pub fn points(&self) -> &[SymbolicPoint] {
        &self.points
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn resolves(&self, p: &Path) -> bool {
        p.range() == self.range
            && p.len() < self.resolution
            && match &self.scope {
                Scope::Horizon => true,
                Scope::Focus(set) => p.is_unit() || set.contains(p),
            }
    }

    fn check(&self, e: &CylinderExpr) -> Result<(), BoundaryError> {
        for p in e.paths() {
            if !self.resolves(p) {
                return Err(BoundaryError::Unresolved(p.to_string()));
            }
        }
        Ok(())
    }

    fn memberships(&self, cells: &[CylinderExpr]) -> Result<Vec<Vec<bool>>, BoundaryError> {
        for c in cells {
            self.check(c)?;
        }
        self.points
            .iter()
            .map(|x| cells.iter().map(|c| contains(c, x)).collect())
            .collect()
    }

    /// Every oracle point lies in exactly one cell.
    pub fn verify_partition(&self, p: &Partition) -> Result<PartitionReport, BoundaryError> {
        let table = self.memberships(&p.cells)?;
        let mut uncovered = Vec::new();
        let mut overlapping = Vec::new();
        for (x, row) in self.points.iter().zip(&table) {
            let hits: Vec<usize> = (0..row.len()).filter(|&i| row[i]).collect();
            match hits.len() {
                0 => uncovered.push(x.clone()),
                1 => {}
                _ => overlapping.push((x.clone(), hits)),
            }
        }
        Ok(PartitionReport {
            label: p.label.clone(),
            cells: p.cells.clone(),
            verified: Verified {
                resolution: self.resolution,
                point_count: self.points.len(),
                ok: uncovered.is_empty() && overlapping.is_empty(),
            },
            uncovered,
            overlapping,
        })
    }

    /// Every cell is contained in E or disjoint from it.
    pub fn refines(&self, p: &Partition, e: &CylinderExpr) -> Result<bool, BoundaryError> {
        self.check(e)?;
        let table = self.memberships(&p.cells)?;
        let mut inside = vec![false; p.cells.len()];
        let mut outside = vec![false; p.cells.len()];
        for (x, row) in self.points.iter().zip(&table) {
            let in_e = contains(e, x)?;
            for (i, &hit) in row.iter().enumerate() {
                if hit {
                    if in_e {
                        inside[i] = true;
                    } else {
                        outside[i] = true;
                    }
                }
            }
        }
        Ok(inside.iter().zip(&outside).all(|(a, b)| !(*a && *b)))
    }

    /// E equals the disjoint union of `cells`.
    pub fn is_disjoint_union(
        &self,
        e: &CylinderExpr,
        cells: &[CylinderExpr],
    ) -> Result<bool, BoundaryError> {
        self.check(e)?;
        let table = self.memberships(cells)?;
        for (x, row) in self.points.iter().zip(&table) {
            let hits = row.iter().filter(|&&h| h).count();
            if hits > 1 || (hits == 1) != contains(e, x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The cells of `p` contained in E, assuming `p` refines E.
    pub fn cells_inside(
        &self,
        p: &Partition,
        e: &CylinderExpr,
    ) -> Result<Vec<usize>, BoundaryError> {
        self.check(e)?;
        let table = self.memberships(&p.cells)?;
        let mut inside = BTreeSet::new();
        for (x, row) in self.points.iter().zip(&table) {
            if contains(e, x)? {
                inside.extend((0..row.len()).filter(|&i| row[i]));
            }
        }
        Ok(inside.into_iter().collect())
    }
}

enum Rel<'a> {
    /// Absolute vertex index up to which paths are observed.
    Horizon(u32),
    Focus(Vec<&'a Path>),
}

struct Walker<'k> {
    k: &'k KSequence,
    budget: usize,
    resolution: u32,
    out: Vec<SymbolicPoint>,
}

impl<'k> Walker<'k> {
    fn new(k: &'k KSequence, budget: usize, resolution: u32) -> Self {
        Walker {
            k,
            budget,
            resolution,
            out: Vec::new(),
        }
    }

    fn emit(&mut self, p: SymbolicPoint) -> Result<(), BoundaryError> {
        if self.out.len() >= self.budget {
            return Err(BoundaryError::ResourceLimit(self.budget));
        }
        self.out.push(p.with_resolution(self.resolution));
        Ok(())
    }

    fn representative(p: &Path, after_l1: bool) -> SymbolicPoint {
        if after_l1 {
            SymbolicPoint::omega_omega(p.then_gamma(1))
        } else {
            SymbolicPoint::omega_omega(p.clone())
        }
    }

    /// Enumerates the classes of points whose normal form starts with the
    /// blocks of `p`. When `after_l1` is set, `p` ends with a complete Λ₁
    /// block and the next edge is in Λ₂.
    fn walk(&mut self, p: Path, after_l1: bool, rel: Rel<'_>) -> Result<(), BoundaryError> {
        let done = match &rel {
            Rel::Horizon(end) => p.source() >= *end,
            Rel::Focus(v) => v.is_empty(),
        };
        if done {
            return self.emit(Self::representative(&p, after_l1));
        }
        let level = p.source();
        let kl = self.k.k(level);
        let bi = p.blocks().len();

        match &rel {
            Rel::Horizon(end) => {
                for r in 1..=kl {
                    self.walk(p.then_gamma(r), false, Rel::Horizon(*end))?;
                }
            }
            Rel::Focus(v) => {
                let needed: BTreeSet<u32> = v
                    .iter()
                    .filter_map(|nu| match nu.blocks()[bi] {
                        Block::L2 { branch, .. } => Some(branch),
                        _ => None,
                    })
                    .collect();
                for &r in &needed {
                    let next = p.then_gamma(r);
                    let sub: Vec<&Path> = v
                        .iter()
                        .copied()
                        .filter(|nu| nu.blocks()[bi] == next.blocks()[bi] && nu.len() > next.len())
                        .collect();
                    self.walk(next, false, Rel::Focus(sub))?;
                }
                if let Some(r) = (1..=kl).find(|r| !needed.contains(r)) {
                    self.emit(SymbolicPoint::omega_omega(p.then_gamma(r)))?;
                }
            }
        }
        if after_l1 {
            return Ok(());
        }

        let (ca, cb) = match &rel {
            Rel::Horizon(end) => {
                let r = end - level;
                (r - 1, r - 1)
            }
            Rel::Focus(v) => v.iter().fold((0, 0), |(ca, cb), nu| match nu.blocks()[bi] {
                Block::L1 { m, n } => (ca.max(m), cb.max(n)),
                _ => (ca, cb),
            }),
        };
        for a in 0..=ca + 1 {
            for b in 0..=cb + 1 {
                if a + b == 0 {
                    continue;
                }
                let (abig, bbig) = (a == ca + 1, b == cb + 1);
                if abig || bbig {
                    let ea = if abig { Ext::Omega } else { Ext::Fin(a) };
                    let eb = if bbig { Ext::Omega } else { Ext::Fin(b) };
                    self.emit(SymbolicPoint::ab(p.clone(), ea, eb)?)?;
                    continue;
                }
                if self.k.k(level + a + b) == 0 {
                    continue;
                }
                let next = p.then_l1(a, b);
                let sub = match &rel {
                    Rel::Horizon(end) => Rel::Horizon(*end),
                    Rel::Focus(v) => Rel::Focus(
                        v.iter()
                            .copied()
                            .filter(|nu| {
                                nu.blocks()[bi] == next.blocks()[bi] && nu.len() > next.len()
                            })
                            .collect(),
                    ),
                };
                self.walk(next, true, sub)?;
            }
        }
        Ok(())
    }
}

/// Representatives of X at resolution d (all paths of length ≤ d observed).
pub fn enumerate_points(
    d: u32,
    k: &KSequence,
    budget: usize,
) -> Result<Vec<SymbolicPoint>, BoundaryError> {
    Ok(Oracle::horizon(1, d, k, budget)?.points)
}

/// Whether P refines E, checked on a focused oracle at resolution d.
pub fn refines(
    p: &Partition,
    e: &CylinderExpr,
    d: u32,
    k: &KSequence,
) -> Result<bool, BoundaryError> {
    let range = e.base.range();
    let oracle = Oracle::focused(range, p.paths().chain(e.paths()), d, k, DEFAULT_BUDGET)?;
    oracle.refines(p, e)
}

fn ab(range: u32, a: u32, b: u32) -> Path {
    Path::lambda1(range, a, b)
}

/// P_{m,n}, the partition of W_{m,n} rooted at v_m.
pub fn partition_p(m: u32, n: u32, k: &KSequence) -> Partition {
    let mut cells = Vec::new();
    for j in 0..=n {
        cells.push(CylinderExpr {
            base: ab(m, n + 1, j),
            subtracted: vec![ab(m, n + 1, j + 1)],
        });
    }
    for i in 0..=n {
        cells.push(CylinderExpr {
            base: ab(m, i, n + 1),
            subtracted: vec![ab(m, i + 1, n + 1)],
        });
    }
    for i in 0..=n {
        for j in 0..=n {
            if i + j < n {
                continue;
            }
            for r in 1..=k.k(m + i + j) {
                cells.push(CylinderExpr::z(ab(m, i, j).then_gamma(r)));
            }
        }
    }
    cells.push(CylinderExpr::z(ab(m, n + 1, n + 1)));
    Partition {
        label: format!("P_{{{m},{n}}}"),
        cells,
    }
}

/// Φ_n: the unit v_range and the paths of length ≤ n ending in Λ₂.
pub fn phi(range: u32, n: u32, k: &KSequence) -> Vec<Path> {
    Path::all_up_to(range, n, k)
        .into_iter()
        .filter(|p| p.is_unit() || matches!(p.last_block(), Some(Block::L2 { .. })))
        .collect()
}

/// Q_n = ∪_{μ ∈ Φ_n} μ P_{|μ|+1, n−|μ|}.
pub fn partition_q(n: u32, k: &KSequence) -> Partition {
    partition_q_at(1, n, k)
}

/// The same construction rooted at v_range: a partition of v_range∂Λ.
pub fn partition_q_at(range: u32, n: u32, k: &KSequence) -> Partition {
    let mut cells = Vec::new();
    for mu in phi(range, n, k) {
        let part = partition_p(mu.source(), n - mu.len(), k);
        for c in part.cells {
            cells.push(c.prefixed(&mu).expect("μ ends at the root of P"));
        }
    }
    Partition {
        label: if range == 1 {
            format!("Q_{n}")
        } else {
            format!("Q_{n}@v{range}")
        },
        cells,
    }
}

/// One explicit refinement identity: `lhs` is the disjoint union of `rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementIdentity {
    pub equation: u8,
    pub branch: Option<u32>,
    pub lhs: CylinderExpr,
    pub rhs: Partition,
}

/// The four refinement identities for Z(v_m α^p β^q), with n = p + q.
/// Identity (4) is emitted once per branch r ≤ k_{m+n}.
pub fn refinement_equations(m: u32, p: u32, q: u32, k: &KSequence) -> Vec<RefinementIdentity> {
    let n = p + q;
    let z = |a, b| ab(m, a, b);
    let strip = |a: u32, b: u32, a2: u32, b2: u32| CylinderExpr {
        base: z(a, b),
        subtracted: vec![z(a2, b2)],
    };
    let gam = |i: u32, j: u32, r: u32| CylinderExpr::z(z(i, j).then_gamma(r));
    let mut out = Vec::new();

    let full_rhs = |skip: Option<(u32, u32, u32)>| {
        let mut cells = Vec::new();
        for j in q..=n {
            cells.push(strip(n + 1, j, n + 1, j + 1));
        }
        for i in p..=n {
            cells.push(strip(i, n + 1, i + 1, n + 1));
        }
        for i in p..=n {
            for j in q..=n {
                for r in 1..=k.k(m + i + j) {
                    if skip != Some((i, j, r)) {
                        cells.push(gam(i, j, r));
                    }
                }
            }
        }
        cells.push(CylinderExpr::z(z(n + 1, n + 1)));
        cells
    };

    out.push(RefinementIdentity {
        equation: 1,
        branch: None,
        lhs: CylinderExpr::z(z(p, q)),
        rhs: Partition {
            label: "(1)".into(),
            cells: full_rhs(None),
        },
    });

    let mut cells = vec![strip(p, n + 1, p + 1, n + 1)];
    for j in q..=n {
        for r in 1..=k.k(m + p + j) {
            cells.push(gam(p, j, r));
        }
    }
    out.push(RefinementIdentity {
        equation: 2,
        branch: None,
        lhs: strip(p, q, p + 1, q),
        rhs: Partition {
            label: "(2)".into(),
            cells,
        },
    });

    let mut cells = vec![strip(n + 1, q, n + 1, q + 1)];
    for i in p..=n {
        for r in 1..=k.k(m + i + q) {
            cells.push(gam(i, q, r));
        }
    }
    out.push(RefinementIdentity {
        equation: 3,
        branch: None,
        lhs: strip(p, q, p, q + 1),
        rhs: Partition {
            label: "(3)".into(),
            cells,
        },
    });

    for r in 1..=k.k(m + n) {
        out.push(RefinementIdentity {
            equation: 4,
            branch: Some(r),
            lhs: CylinderExpr {
                base: z(p, q),
                subtracted: vec![z(p, q).then_gamma(r)],
            },
            rhs: Partition {
                label: format!("(4) r={r}"),
                cells: full_rhs(Some((p, q, r))),
            },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones() -> KSequence {
        KSequence::constant(1).unwrap()
    }

    #[test]
    fn membership_examples() {
        let x = SymbolicPoint::omega_omega(Path::unit(1));
        assert!(contains(&CylinderExpr::z(Path::beta(1)), &x).unwrap());

        let alpha_inf = SymbolicPoint::ab(Path::unit(1), Ext::Omega, Ext::Fin(0)).unwrap();
        let e = CylinderExpr::z_minus(Path::alpha(1), &Path::beta(2)).unwrap();
        assert!(contains(&e, &alpha_inf).unwrap());

        let g = SymbolicPoint::omega_omega(Path::gamma(1, 1));
        assert!(contains(&CylinderExpr::z(Path::gamma(1, 1)), &g).unwrap());
        assert!(!contains(&CylinderExpr::z(Path::alpha(1)), &g).unwrap());
    }

    #[test]
    fn tail_invariants() {
        assert!(SymbolicPoint::ab(Path::alpha(1), Ext::Omega, Ext::Omega).is_err());
        assert!(SymbolicPoint::ab(Path::unit(1), Ext::Fin(2), Ext::Fin(0)).is_err());
        assert!(SymbolicPoint::omega_omega(Path::unit(1)).is_maximal());
        assert!(!SymbolicPoint::ab(Path::unit(1), Ext::Omega, Ext::Fin(3))
            .unwrap()
            .is_maximal());
    }

    #[test]
    fn gamma_inf_resolution() {
        let x = SymbolicPoint::new(Path::lambda1(1, 1, 0), Tail::GammaInf).unwrap();
        assert_eq!(x.resolution(), 2);
        assert!(x.has_prefix(&Path::alpha(1)).unwrap());
        assert!(!x.has_prefix(&Path::lambda1(1, 2, 0)).unwrap());
        assert!(x.has_prefix(&Path::alpha(1).then_gamma(1)).is_err());
        let e = CylinderExpr::z(Path::alpha(1).then_gamma(1));
        assert!(matches!(
            contains(&e, &x),
            Err(BoundaryError::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn prepend_and_strip_round_trip() {
        let x = SymbolicPoint::ab(Path::unit(3), Ext::Omega, Ext::Fin(1)).unwrap();
        let lam = Path::gamma(1, 1).then_l1(1, 0);
        let y = x.prepend(&lam).unwrap();
        assert_eq!(y.prefix(), &Path::gamma(1, 1));
        assert_eq!(
            y.tail(),
            Tail::AB {
                a: Ext::Omega,
                b: Ext::Fin(1)
            }
        );
        assert_eq!(y.strip_prefix(&lam).unwrap(), x);
        let z = y.strip_prefix(&Path::gamma(1, 1).then_l1(0, 1)).unwrap();
        assert_eq!(
            z.tail(),
            Tail::AB {
                a: Ext::Omega,
                b: Ext::Fin(0)
            }
        );
        assert_eq!(z.range(), 3);
    }

    #[test]
    fn strip_inside_prefix() {
        let pre = Path::lambda1(1, 2, 1).then_gamma(1);
        let x = SymbolicPoint::omega_omega(pre.clone());
        let y = x.strip_prefix(&Path::alpha(1)).unwrap();
        assert_eq!(y.prefix(), &Path::lambda1(2, 1, 1).then_gamma(1));
        assert_eq!(y.prepend(&Path::alpha(1)).unwrap(), x);
        let w = x.strip_prefix(&pre).unwrap();
        assert_eq!(w, SymbolicPoint::omega_omega(Path::unit(5)));
    }

    #[test]
    fn omega_omega_produced_once() {
        for d in 1..5 {
            let pts = enumerate_points(d, &ones(), DEFAULT_BUDGET).unwrap();
            let root = SymbolicPoint::omega_omega(Path::unit(1)).with_resolution(d);
            assert_eq!(pts.iter().filter(|p| **p == root).count(), 1);
        }
    }

    #[test]
    fn strip_beyond_resolution_is_an_error() {
        let x = SymbolicPoint::omega_omega(Path::unit(1)).with_resolution(2);
        assert_eq!(
            x.strip_prefix(&Path::lambda1(1, 1, 1))
                .unwrap()
                .resolution(),
            0
        );
        assert!(matches!(
            x.strip_prefix(&Path::lambda1(1, 2, 1)),
            Err(BoundaryError::InsufficientResolution { needed: 3, have: 2 })
        ));
    }

    #[test]
    fn resolution_one_points() {
        let pts = enumerate_points(1, &ones(), DEFAULT_BUDGET).unwrap();
        let tails: Vec<String> = pts.iter().map(|p| p.to_string()).collect();
        for want in ["v1·α^ωβ^0", "v1·α^0β^ω", "v1·α^ωβ^ω", "v1:γ1.1·α^ωβ^ω"] {
            assert!(
                tails.iter().any(|t| t == want),
                "{want} missing from {tails:?}"
            );
        }
        let z = |p: Path| CylinderExpr::z(p);
        let tests = [z(Path::alpha(1)), z(Path::beta(1)), z(Path::gamma(1, 1))];
        let signatures: HashSet<Vec<bool>> = pts
            .iter()
            .map(|x| {
                tests
                    .iter()
                    .map(|e| x.clone().has_prefix(&e.base).unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(signatures.len(), 4);
    }

    #[test]
    fn no_level_one_gamma_when_k1_is_zero() {
        let k = KSequence::periodic(vec![0], vec![1]).unwrap();
        let pts = enumerate_points(2, &k, DEFAULT_BUDGET).unwrap();
        assert!(pts
            .iter()
            .all(|p| !p.prefix().blocks().contains(&Block::L2 {
                level: 1,
                branch: 1
            })));
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            enumerate_points(6, &ones(), 10).unwrap_err(),
            BoundaryError::ResourceLimit(10)
        );
    }

    #[test]
    fn partition_p_shapes() {
        let p = partition_p(1, 0, &ones());
        let shown: Vec<String> = p.cells.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "Z(v1:(1,0)) \\ Z(v1:(1,1))",
                "Z(v1:(0,1)) \\ Z(v1:(1,1))",
                "Z(v1:γ1.1)",
                "Z(v1:(1,1))",
            ]
        );
        let p = partition_p(1, 1, &ones());
        assert_eq!(p.cells.len(), 2 + 2 + 3 + 1);
        let zeros = KSequence::periodic(vec![0, 0, 0, 0], vec![1]).unwrap();
        assert_eq!(partition_p(1, 1, &zeros).cells.len(), 5);
    }

    #[test]
    fn phi_examples() {
        let k = ones();
        let shown: BTreeSet<String> = phi(1, 2, &k).iter().map(|p| p.to_string()).collect();
        let want = [
            "v1",
            "v1:γ1.1",
            "v1:γ1.1γ2.1",
            "v1:(1,0)γ2.1",
            "v1:(0,1)γ2.1",
        ];
        assert_eq!(shown, want.iter().map(|s| s.to_string()).collect());
        let k0 = KSequence::periodic(vec![0], vec![1]).unwrap();
        assert_eq!(phi(1, 1, &k0), vec![Path::unit(1)]);
    }

    #[test]
    fn q1_is_p11_and_gamma_p20() {
        let k = ones();
        let q = partition_q(1, &k);
        let mut expect = partition_p(1, 1, &k).cells;
        expect.extend(
            partition_p(2, 0, &k)
                .prefixed(&Path::gamma(1, 1))
                .unwrap()
                .cells,
        );
        assert_eq!(q.cells, expect);
    }

    #[test]
    fn partitions_verify_on_horizon_oracle() {
        let k = ones();
        let oracle = Oracle::horizon(1, 6, &k, DEFAULT_BUDGET).unwrap();
        assert!(oracle
            .verify_partition(&partition_p(1, 0, &k))
            .unwrap()
            .ok());
        assert!(!oracle
            .verify_partition(&partition_p(1, 1, &k))
            .unwrap()
            .ok());
        assert!(oracle.verify_partition(&partition_q(1, &k)).unwrap().ok());
    }

    #[test]
    fn focused_and_horizon_oracles_agree() {
        let k = KSequence::periodic(vec![0], vec![1, 2]).unwrap();
        let q = partition_q(1, &k);
        let h = Oracle::horizon(1, 7, &k, DEFAULT_BUDGET).unwrap();
        let f = Oracle::focused(1, q.paths(), 7, &k, DEFAULT_BUDGET).unwrap();
        assert!(f.points().len() < h.points().len());
        assert!(h.verify_partition(&q).unwrap().ok());
        assert!(f.verify_partition(&q).unwrap().ok());
        let broken = Partition {
            label: "broken".into(),
            cells: q.cells[1..].to_vec(),
        };
        assert!(!h.verify_partition(&broken).unwrap().ok());
        assert!(!f.verify_partition(&broken).unwrap().ok());
    }

    #[test]
    fn refines_examples() {
        let k = ones();
        let q2 = partition_q(2, &k);
        assert!(refines(&q2, &CylinderExpr::z(Path::alpha(1)), 10, &k).unwrap());
        assert!(refines(&q2, &CylinderExpr::z(Path::unit(1)), 10, &k).unwrap());
        let coarse = partition_p(1, 0, &k);
        assert!(!refines(&coarse, &CylinderExpr::z(Path::lambda1(1, 2, 0)), 10, &k).unwrap());
    }

    #[test]
    fn oracle_rejects_unfocused_queries() {
        let k = ones();
        let q = partition_q(1, &k);
        let f = Oracle::focused(1, q.paths(), 7, &k, DEFAULT_BUDGET).unwrap();
        let e = CylinderExpr::z(Path::lambda1(1, 3, 0));
        assert!(matches!(
            f.refines(&q, &e),
            Err(BoundaryError::Unresolved(_))
        ));
    }

    #[test]
    fn refinement_equation_counts() {
        let k = ones();
        let eqs = refinement_equations(1, 0, 0, &k);
        assert_eq!(eqs[0].rhs.cells.len(), 3 + 1);
        assert_eq!(eqs[1].rhs.cells.len(), 2);
        assert_eq!(eqs.iter().filter(|e| e.equation == 4).count(), 1);
        let eq4 = eqs.iter().find(|e| e.equation == 4).unwrap();
        assert_eq!(eq4.rhs.cells.len(), eqs[0].rhs.cells.len() - 1);
    }

    #[test]
    fn refinement_equations_hold_small() {
        let k = KSequence::periodic(vec![], vec![2, 1]).unwrap();
        for m in 1..3 {
            for n in 0..3 {
                for p in 0..=n {
                    for eq in refinement_equations(m, p, n - p, &k) {
                        let focus: Vec<&Path> = eq.lhs.paths().chain(eq.rhs.paths()).collect();
                        let d = 2 * n + 4;
                        let o = Oracle::focused(m, focus, d, &k, DEFAULT_BUDGET).unwrap();
                        assert!(
                            o.is_disjoint_union(&eq.lhs, &eq.rhs.cells).unwrap(),
                            "m={m} p={p} q={} eq {}",
                            n - p,
                            eq.equation
                        );
                    }
                }
            }
        }
    }
}
