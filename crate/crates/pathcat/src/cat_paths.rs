//! Paths of Λ(k) in block normal form.
//!
//! A path is stored as its range vertex and an alternating list of blocks:
//! `L1(m, n)` is a Λ₁ segment α^m β^n (the commuting squares make the order
//! of α and β irrelevant) and `L2(level, branch)` is the edge γ_level^(branch).
//! L2 levels are absolute, so they do not change when a path is prefixed or
//! factored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("source v{left_source} of the left factor does not match range v{right_range} of the right factor")]
    SourceRangeMismatch { left_source: u32, right_range: u32 },
    #[error("path is not a prefix of the given path")]
    NotAPrefix,
    #[error("not a cycle candidate: {0}")]
    NotACycleCandidate(&'static str),
    #[error("malformed path: {0}")]
    Malformed(String),
    #[error("invalid k-sequence: {0}")]
    InvalidKSequence(String),
}

/// The sequence (k_i)_{i≥1} of Λ₂ branch counts, as an eventually periodic rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawKSequence")]
pub struct KSequence {
    prefix: Vec<u32>,
    period: Vec<u32>,
}

#[derive(Deserialize)]
struct RawKSequence {
    prefix: Vec<u32>,
    period: Vec<u32>,
}

impl TryFrom<RawKSequence> for KSequence {
    type Error = PathError;
    fn try_from(raw: RawKSequence) -> Result<Self, PathError> {
        KSequence::periodic(raw.prefix, raw.period)
    }
}

impl KSequence {
    /// `prefix` gives k_1, k_2, …; afterwards `period` repeats forever.
    pub fn periodic(prefix: Vec<u32>, period: Vec<u32>) -> Result<Self, PathError> {
        if period.is_empty() {
            return Err(PathError::InvalidKSequence(
                "a finite list has no rule for the tail; give an eventual period".into(),
            ));
        }
        if period.iter().all(|&k| k == 0) {
            return Err(PathError::InvalidKSequence(
                "the period must contain a positive entry (k_i > 0 infinitely often)".into(),
            ));
        }
        Ok(KSequence { prefix, period })
    }

    pub fn constant(k: u32) -> Result<Self, PathError> {
        Self::periodic(Vec::new(), vec![k])
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    /// k_i for i ≥ 1. By convention k_0 = 0.
    pub fn k(&self, i: u32) -> u32 {
        if i == 0 {
            return 0;
        }
        let idx = (i - 1) as usize;
        if idx < self.prefix.len() {
            self.prefix[idx]
        } else {
            self.period[(idx - self.prefix.len()) % self.period.len()]
        }
    }

    /// k_1, …, k_n.
    pub fn values(&self, n: u32) -> Vec<u32> {
        (1..=n).map(|i| self.k(i)).collect()
    }

    /// The first i ≥ `from` with k_i > 0.
    pub fn next_positive(&self, from: u32) -> u32 {
        let mut i = from.max(1);
        while self.k(i) == 0 {
            i += 1;
        }
        i
    }
}

impl fmt::Display for KSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| {
            v.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        if self.prefix.is_empty() {
            write!(f, "({})", join(&self.period))
        } else {
            write!(f, "{},({})", join(&self.prefix), join(&self.period))
        }
    }
}

impl std::str::FromStr for KSequence {
    type Err = PathError;

    /// Grammar "k1,k2,(p1,…,pm)", the inverse of `Display`.
    fn from_str(s: &str) -> Result<Self, PathError> {
        let bad = || PathError::InvalidKSequence(format!("cannot parse {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let open = t.find('(').ok_or_else(bad)?;
        if !t.ends_with(')') {
            return Err(bad());
        }
        let nums = |x: &str| -> Result<Vec<u32>, PathError> {
            if x.is_empty() {
                return Ok(Vec::new());
            }
            x.split(',').map(|v| v.parse().map_err(|_| bad())).collect()
        };
        let before = &t[..open];
        let before = match before.strip_suffix(',') {
            Some(b) => b,
            None if before.is_empty() => before,
            None => return Err(bad()),
        };
        KSequence::periodic(nums(before)?, nums(&t[open + 1..t.len() - 1])?)
    }
}

/// A single edge, used when spelling a path edge by edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Alpha,
    Beta,
    Gamma(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Block {
    L1 { m: u32, n: u32 },
    L2 { level: u32, branch: u32 },
}

impl Block {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        match *self {
            Block::L1 { m, n } => m + n,
            Block::L2 { .. } => 1,
        }
    }

    pub fn is_l1(&self) -> bool {
        matches!(self, Block::L1 { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct Path {
    range: u32,
    blocks: Vec<Block>,
}

#[derive(Deserialize)]
struct RawPath {
    range: u32,
    blocks: Vec<Block>,
}

impl TryFrom<RawPath> for Path {
    type Error = PathError;
    fn try_from(raw: RawPath) -> Result<Self, PathError> {
        Path::from_blocks(raw.range, raw.blocks)
    }
}

impl Path {
    pub fn unit(range: u32) -> Path {
        assert!(range >= 1, "vertices are indexed from 1");
        Path {
            range,
            blocks: Vec::new(),
        }
    }

    /// α^m β^n at `range`.
    pub fn lambda1(range: u32, m: u32, n: u32) -> Path {
        let mut p = Path::unit(range);
        if m + n > 0 {
            p.blocks.push(Block::L1 { m, n });
        }
        p
    }

    pub fn alpha(range: u32) -> Path {
        Path::lambda1(range, 1, 0)
    }

    pub fn beta(range: u32) -> Path {
        Path::lambda1(range, 0, 1)
    }

    /// γ_level^(branch), with range v_level.
    pub fn gamma(level: u32, branch: u32) -> Path {
        assert!(branch >= 1, "branches are indexed from 1");
        Path {
            range: level,
            blocks: vec![Block::L2 { level, branch }],
        }
    }

    pub fn from_blocks(range: u32, blocks: Vec<Block>) -> Result<Path, PathError> {
        if range == 0 {
            return Err(PathError::Malformed("vertex index 0".into()));
        }
        let mut at = range;
        let mut prev_l1 = false;
        for b in &blocks {
            match *b {
                Block::L1 { m, n } => {
                    if m + n == 0 {
                        return Err(PathError::Malformed("empty L1 block".into()));
                    }
                    if prev_l1 {
                        return Err(PathError::Malformed("adjacent L1 blocks".into()));
                    }
                    prev_l1 = true;
                }
                Block::L2 { level, branch } => {
                    if level != at {
                        return Err(PathError::Malformed(format!(
                            "L2 block at level {level}, expected {at}"
                        )));
                    }
                    if branch == 0 {
                        return Err(PathError::Malformed("branch index 0".into()));
                    }
                    prev_l1 = false;
                }
            }
            at += b.len();
        }
        Ok(Path { range, blocks })
    }

    /// Builds a path from an edge word by repeated composition.
    pub fn from_edges(range: u32, edges: &[Edge]) -> Path {
        let mut p = Path::unit(range);
        for e in edges {
            let v = p.source();
            let step = match *e {
                Edge::Alpha => Path::alpha(v),
                Edge::Beta => Path::beta(v),
                Edge::Gamma(r) => Path::gamma(v, r),
            };
            p = p.compose(&step).expect("edge starts at the current source");
        }
        p
    }

    /// The edge word with α's before β's inside each Λ₁ block.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.len() as usize);
        for b in &self.blocks {
            match *b {
                Block::L1 { m, n } => {
                    out.extend(std::iter::repeat_n(Edge::Alpha, m as usize));
                    out.extend(std::iter::repeat_n(Edge::Beta, n as usize));
                }
                Block::L2 { branch, .. } => out.push(Edge::Gamma(branch)),
            }
        }
        out
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn source(&self) -> u32 {
        self.range + self.len()
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn last_block(&self) -> Option<Block> {
        self.blocks.last().copied()
    }

    /// True when the path lies in Λ₁.
    pub fn is_lambda1(&self) -> bool {
        self.blocks.iter().all(Block::is_l1)
    }

    /// Number of Λ₂ edges.
    pub fn l2_count(&self) -> usize {
        self.blocks.iter().filter(|b| !b.is_l1()).count()
    }

    /// Length of the path with its trailing Λ₁ block removed.
    pub fn core_len(&self) -> u32 {
        match self.blocks.last() {
            Some(Block::L1 { m, n }) => self.len() - m - n,
            _ => self.len(),
        }
    }

    /// The path with its trailing Λ₁ block removed, and that block's degree.
    pub fn split_trailing_l1(&self) -> (Path, (u32, u32)) {
        match self.blocks.last() {
            Some(&Block::L1 { m, n }) => {
                let mut core = self.clone();
                core.blocks.pop();
                (core, (m, n))
            }
            _ => (self.clone(), (0, 0)),
        }
    }

    /// Whether the edge at 1-based position `j` lies in Λ₂.
    pub fn edge_is_l2(&self, j: u32) -> bool {
        let mut at = 0;
        for b in &self.blocks {
            at += b.len();
            if j <= at {
                return !b.is_l1();
            }
        }
        false
    }

    /// Checks every L2 branch against k.
    pub fn validate_branches(&self, k: &KSequence) -> Result<(), PathError> {
        for b in &self.blocks {
            if let Block::L2 { level, branch } = *b {
                if branch > k.k(level) {
                    return Err(PathError::Malformed(format!(
                        "branch {branch} exceeds k_{level} = {}",
                        k.k(level)
                    )));
                }
            }
        }
        Ok(())
    }

    /// The normal form of μν; requires s(μ) = r(ν).
    pub fn compose(&self, nu: &Path) -> Result<Path, PathError> {
        if self.source() != nu.range {
            return Err(PathError::SourceRangeMismatch {
                left_source: self.source(),
                right_range: nu.range,
            });
        }
        let mut blocks = self.blocks.clone();
        let mut rest = nu.blocks.iter();
        if let (Some(Block::L1 { m, n }), Some(Block::L1 { m: m2, n: n2 })) =
            (blocks.last_mut(), nu.blocks.first())
        {
            *m += m2;
            *n += n2;
            rest.next();
        }
        blocks.extend(rest);
        Ok(Path {
            range: self.range,
            blocks,
        })
    }

    /// Appends α^m β^n at the source.
    pub fn then_l1(&self, m: u32, n: u32) -> Path {
        self.compose(&Path::lambda1(self.source(), m, n))
            .expect("composable by construction")
    }

    /// Appends γ^(branch) at the source.
    pub fn then_gamma(&self, branch: u32) -> Path {
        self.compose(&Path::gamma(self.source(), branch))
            .expect("composable by construction")
    }

    /// All paths of length exactly `len` with range v_`range`.
    pub fn all_of_length(range: u32, len: u32, k: &KSequence) -> Vec<Path> {
        let mut out = Vec::new();
        extend_all(Path::unit(range), len, k, &mut out);
        out
    }

    /// All paths of length at most `len` with range v_`range`, shortest first.
    pub fn all_up_to(range: u32, len: u32, k: &KSequence) -> Vec<Path> {
        (0..=len)
            .flat_map(|l| Path::all_of_length(range, l, k))
            .collect()
    }
}

fn extend_all(cur: Path, remaining: u32, k: &KSequence, out: &mut Vec<Path>) {
    if remaining == 0 {
        out.push(cur);
        return;
    }
    let level = cur.source();
    for branch in 1..=k.k(level) {
        extend_all(cur.then_gamma(branch), remaining - 1, k, out);
    }
    if !matches!(cur.last_block(), Some(Block::L1 { .. })) {
        for t in 1..=remaining {
            for m in 0..=t {
                extend_all(cur.then_l1(m, t - m), remaining - t, k, out);
            }
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.range)?;
        if self.blocks.is_empty() {
            return Ok(());
        }
        write!(f, ":")?;
        for b in &self.blocks {
            match *b {
                Block::L1 { m, n } => write!(f, "({m},{n})")?,
                Block::L2 { level, branch } => write!(f, "γ{level}.{branch}")?,
            }
        }
        Ok(())
    }
}

/// Whether λ ∈ μΛ.
pub fn is_prefix(mu: &Path, lam: &Path) -> bool {
    if mu.range != lam.range {
        return false;
    }
    let (a, b) = (&mu.blocks, &lam.blocks);
    let Some(j) = a.len().checked_sub(1) else {
        return true;
    };
    if b.len() <= j || a[..j] != b[..j] {
        return false;
    }
    block_le(a[j], b[j])
}

fn block_le(x: Block, y: Block) -> bool {
    match (x, y) {
        (Block::L1 { m, n }, Block::L1 { m: m2, n: n2 }) => m <= m2 && n <= n2,
        (Block::L2 { .. }, Block::L2 { .. }) => x == y,
        _ => false,
    }
}

/// The unique ν with λ = μν.
pub fn factor_out(lam: &Path, mu: &Path) -> Result<Path, PathError> {
    if !is_prefix(mu, lam) {
        return Err(PathError::NotAPrefix);
    }
    let j = mu.blocks.len();
    let mut blocks = Vec::new();
    let mut rest = &lam.blocks[j.saturating_sub(1)..];
    if let (Some(&Block::L1 { m, n }), Some(&Block::L1 { m: m2, n: n2 })) =
        (mu.blocks.last(), rest.first())
    {
        if (m2 - m) + (n2 - n) > 0 {
            blocks.push(Block::L1 {
                m: m2 - m,
                n: n2 - n,
            });
        }
        rest = &rest[1..];
    } else if j > 0 {
        rest = &rest[1..];
    }
    blocks.extend_from_slice(rest);
    Ok(Path {
        range: mu.source(),
        blocks,
    })
}

/// The minimal common extension of μ and ν, if they meet.
pub fn mce(mu: &Path, nu: &Path) -> Option<Path> {
    if mu.range != nu.range {
        return None;
    }
    let (p, q) = (mu.blocks.len(), nu.blocks.len());
    if p == 0 {
        return Some(nu.clone());
    }
    if q == 0 {
        return Some(mu.clone());
    }
    let j = p.min(q) - 1;
    if mu.blocks[..j] != nu.blocks[..j] {
        return None;
    }
    let (x, y) = (mu.blocks[j], nu.blocks[j]);
    if p < q {
        return block_le(x, y).then(|| nu.clone());
    }
    if q < p {
        return block_le(y, x).then(|| mu.clone());
    }
    match (x, y) {
        (Block::L1 { m, n }, Block::L1 { m: m2, n: n2 }) => {
            let mut blocks = mu.blocks.clone();
            blocks[j] = Block::L1 {
                m: m.max(m2),
                n: n.max(n2),
            };
            Some(Path {
                range: mu.range,
                blocks,
            })
        }
        (Block::L2 { .. }, Block::L2 { .. }) if x == y => Some(mu.clone()),
        _ => None,
    }
}

pub fn meets(mu: &Path, nu: &Path) -> bool {
    mce(mu, nu).is_some()
}

/// An extension η ∈ s(μ)Λ with μη ⊥ ν, showing that (μ, ν) is not a
/// generalized cycle.
///
/// With i the first index ≥ s(μ) carrying a Λ₂ edge, η = β^(i−s(μ)) γ_i^(1).
/// When μ carries more α's than ν in its final Λ₁ block the β-extension can
/// still meet ν; the α-extension α^(i−s(μ)) γ_i^(1) is returned instead.
pub fn entrance_witness(mu: &Path, nu: &Path, k: &KSequence) -> Result<Path, PathError> {
    if mu.range != nu.range {
        return Err(PathError::NotACycleCandidate("ranges differ"));
    }
    if mu.source() != nu.source() {
        return Err(PathError::NotACycleCandidate("sources differ"));
    }
    if mu == nu {
        return Err(PathError::NotACycleCandidate("the paths are equal"));
    }
    let s = mu.source();
    let i = k.next_positive(s);
    for (a, b) in [(0, i - s), (i - s, 0)] {
        let eta = Path::lambda1(s, a, b).then_gamma(1);
        let ext = mu.compose(&eta)?;
        if mce(&ext, nu).is_none() {
            return Ok(eta);
        }
    }
    unreachable!("one of the two extensions is disjoint from ν")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kseq_text_round_trip() {
        for text in ["(1)", "3,0,(1)", "0,1,(0,2)"] {
            let k: KSequence = text.parse().unwrap();
            assert_eq!(k.to_string(), text);
        }
        assert_eq!(
            "2,(1)".parse::<KSequence>().unwrap().values(3),
            vec![2, 1, 1]
        );
        for bad in ["", "1,2", "(0)", "1(2)", "(x)", "1,()"] {
            assert!(bad.parse::<KSequence>().is_err(), "{bad}");
        }
    }
    use proptest::prelude::*;

    fn ones() -> KSequence {
        KSequence::constant(1).unwrap()
    }

    fn p(range: u32, blocks: &[Block]) -> Path {
        Path::from_blocks(range, blocks.to_vec()).unwrap()
    }

    const fn l1(m: u32, n: u32) -> Block {
        Block::L1 { m, n }
    }

    const fn l2(level: u32, branch: u32) -> Block {
        Block::L2 { level, branch }
    }

    #[test]
    fn commuting_square_composes_to_one_block() {
        let ab = Path::beta(1).compose(&Path::alpha(2)).unwrap();
        assert_eq!(ab, p(1, &[l1(1, 1)]));
        let ba = Path::alpha(1).compose(&Path::beta(2)).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn compose_with_unit_and_across_kinds() {
        let g = Path::gamma(3, 1);
        assert_eq!(Path::unit(3).compose(&g).unwrap(), g);
        let q = Path::gamma(1, 1).compose(&Path::lambda1(2, 2, 1)).unwrap();
        assert_eq!(q.blocks(), &[l2(1, 1), l1(2, 1)]);
        assert_eq!(q.source(), 5);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let err = Path::alpha(1).compose(&Path::alpha(1)).unwrap_err();
        assert_eq!(
            err,
            PathError::SourceRangeMismatch {
                left_source: 2,
                right_range: 1
            }
        );
    }

    #[test]
    fn from_blocks_validates() {
        assert!(Path::from_blocks(1, vec![l1(1, 0), l1(0, 1)]).is_err());
        assert!(Path::from_blocks(1, vec![l1(0, 0)]).is_err());
        assert!(Path::from_blocks(1, vec![l1(1, 0), l2(3, 1)]).is_err());
        assert!(Path::from_blocks(1, vec![l2(1, 1), l2(2, 1)]).is_ok());
        assert!(Path::from_blocks(0, vec![]).is_err());
    }

    #[test]
    fn prefix_and_factor() {
        let mu = Path::alpha(1);
        let lam = Path::lambda1(1, 2, 3);
        assert!(is_prefix(&mu, &lam));
        assert_eq!(factor_out(&lam, &mu).unwrap(), Path::lambda1(2, 1, 3));
        assert!(!is_prefix(&Path::beta(1), &Path::gamma(1, 1)));
        assert!(is_prefix(&Path::unit(1), &lam));
        assert_eq!(factor_out(&lam, &Path::unit(1)).unwrap(), lam);
        assert_eq!(
            factor_out(&Path::beta(1), &Path::alpha(1)),
            Err(PathError::NotAPrefix)
        );
    }

    #[test]
    fn factor_out_drops_exhausted_block() {
        let lam = p(1, &[l1(1, 1), l2(3, 1), l1(0, 2)]);
        let mu = Path::lambda1(1, 1, 1);
        assert_eq!(factor_out(&lam, &mu).unwrap(), p(3, &[l2(3, 1), l1(0, 2)]));
        let mu2 = p(1, &[l1(1, 1), l2(3, 1)]);
        assert_eq!(factor_out(&lam, &mu2).unwrap(), Path::lambda1(4, 0, 2));
    }

    #[test]
    fn mce_examples() {
        assert_eq!(
            mce(&Path::alpha(1), &Path::beta(1)),
            Some(Path::lambda1(1, 1, 1))
        );
        assert_eq!(mce(&Path::alpha(1), &Path::gamma(1, 1)), None);
        let lam = p(1, &[l2(1, 1), l1(2, 0)]);
        assert_eq!(mce(&lam, &lam), Some(lam.clone()));
        assert!(meets(&Path::alpha(1), &Path::beta(1)));
    }

    #[test]
    fn mce_uneven_counts() {
        let mu = Path::lambda1(1, 1, 0);
        let nu = p(1, &[l1(1, 2), l2(4, 1)]);
        assert_eq!(mce(&mu, &nu), Some(nu.clone()));
        let nu2 = p(1, &[l1(0, 2), l2(3, 1)]);
        assert_eq!(mce(&mu, &nu2), None);
    }

    #[test]
    fn entrance_witness_examples() {
        let k = ones();
        let eta = entrance_witness(&Path::alpha(1), &Path::beta(1), &k).unwrap();
        assert_eq!(eta, Path::gamma(2, 1));
        assert_eq!(
            mce(&Path::alpha(1).compose(&eta).unwrap(), &Path::beta(1)),
            None
        );

        let k = KSequence::periodic(vec![], vec![0, 1]).unwrap();
        let mu = Path::lambda1(1, 2, 0);
        let nu = Path::lambda1(1, 0, 2);
        let eta = entrance_witness(&mu, &nu, &k).unwrap();
        assert_eq!(eta, Path::beta(3).then_gamma(1));
        assert_eq!(eta.blocks(), &[l1(0, 1), l2(4, 1)]);
        assert_eq!(mce(&mu.compose(&eta).unwrap(), &nu), None);
    }

    #[test]
    fn entrance_witness_needs_alpha_when_mu_has_more_alphas() {
        let k = ones();
        let mu = Path::lambda1(1, 2, 0);
        let nu = Path::lambda1(1, 1, 1);
        let eta = entrance_witness(&mu, &nu, &k).unwrap();
        assert_eq!(mce(&mu.compose(&eta).unwrap(), &nu), None);
    }

    #[test]
    fn entrance_witness_rejects_non_candidates() {
        let k = ones();
        let a = Path::alpha(1);
        assert!(entrance_witness(&a, &a, &k).is_err());
        assert!(entrance_witness(&a, &Path::lambda1(1, 1, 1), &k).is_err());
        assert!(entrance_witness(&a, &Path::alpha(2), &k).is_err());
    }

    #[test]
    fn k_sequence_rules() {
        assert!(KSequence::periodic(vec![1, 2], vec![]).is_err());
        assert!(KSequence::periodic(vec![1], vec![0, 0]).is_err());
        let k = KSequence::periodic(vec![5, 0], vec![0, 2]).unwrap();
        assert_eq!(k.values(6), vec![5, 0, 0, 2, 0, 2]);
        assert_eq!(k.k(0), 0);
        assert_eq!(k.next_positive(2), 4);
        assert_eq!(k.to_string(), "5,0,(0,2)");
    }

    #[test]
    fn path_enumeration_counts() {
        let k = ones();
        let counts: Vec<usize> = (0..5)
            .map(|l| Path::all_of_length(1, l, &k).len())
            .collect();
        assert_eq!(counts, vec![1, 3, 8, 21, 55]);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let q = p(1, &[l1(2, 1), l2(4, 1)]);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(
            s,
            r#"{"range":1,"blocks":[{"type":"L1","m":2,"n":1},{"type":"L2","level":4,"branch":1}]}"#
        );
        assert_eq!(serde_json::from_str::<Path>(&s).unwrap(), q);
        let bad = r#"{"range":1,"blocks":[{"type":"L2","level":2,"branch":1}]}"#;
        assert!(serde_json::from_str::<Path>(bad).is_err());
    }

    fn kseq() -> KSequence {
        KSequence::periodic(vec![1], vec![2, 0, 1]).unwrap()
    }

    fn edge_word(max: usize) -> impl Strategy<Value = Vec<(u8, u32)>> {
        prop::collection::vec((0u8..3, 1u32..3), 0..max)
    }

    fn word_to_edges(range: u32, raw: &[(u8, u32)], k: &KSequence) -> Vec<Edge> {
        let mut out = Vec::new();
        for (at, &(kind, r)) in (range..).zip(raw) {
            let e = match kind {
                0 => Edge::Alpha,
                1 => Edge::Beta,
                _ if k.k(at) > 0 => Edge::Gamma(1 + (r - 1) % k.k(at)),
                _ => Edge::Beta,
            };
            out.push(e);
        }
        out
    }

    fn arb_path(max: usize) -> impl Strategy<Value = Path> {
        edge_word(max).prop_map(|w| {
            let k = kseq();
            Path::from_edges(1, &word_to_edges(1, &w, &k))
        })
    }

    proptest! {
        #[test]
        fn spelling_is_irrelevant(w in edge_word(10), swaps in prop::collection::vec(0usize..10, 0..20)) {
            let k = kseq();
            let mut edges = word_to_edges(1, &w, &k);
            let base = Path::from_edges(1, &edges);
            for s in swaps {
                if s + 1 < edges.len() {
                    match (edges[s], edges[s + 1]) {
                        (Edge::Alpha, Edge::Beta) | (Edge::Beta, Edge::Alpha) => edges.swap(s, s + 1),
                        _ => {}
                    }
                }
            }
            prop_assert_eq!(Path::from_edges(1, &edges), base.clone());
            prop_assert_eq!(Path::from_edges(1, &base.edges()), base);
        }

        #[test]
        fn compose_is_associative(a in arb_path(5), b in edge_word(5), c in edge_word(5)) {
            let k = kseq();
            let b = Path::from_edges(a.source(), &word_to_edges(a.source(), &b, &k));
            let c = Path::from_edges(b.source(), &word_to_edges(b.source(), &c, &k));
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn cancellation(a in arb_path(4), b in edge_word(4), c in edge_word(4)) {
            let k = kseq();
            let b = Path::from_edges(a.source(), &word_to_edges(a.source(), &b, &k));
            let c = Path::from_edges(a.source(), &word_to_edges(a.source(), &c, &k));
            let ab = a.compose(&b).unwrap();
            let ac = a.compose(&c).unwrap();
            prop_assert_eq!(ab == ac, b == c);
            prop_assert_eq!(factor_out(&ab, &a).unwrap(), b.clone());
            if b.len() == c.len() {
                let e = Path::lambda1(b.source(), 1, 0);
                let be = b.compose(&e).unwrap();
                let ce = c.compose(&e).unwrap();
                prop_assert_eq!(be == ce, b == c);
            }
        }

        #[test]
        fn mce_is_least(a in arb_path(5), b in arb_path(5)) {
            let k = kseq();
            match mce(&a, &b) {
                Some(m) => {
                    prop_assert!(is_prefix(&a, &m) && is_prefix(&b, &m));
                    prop_assert_eq!(mce(&b, &a), Some(m.clone()));
                    for lam in Path::all_up_to(1, m.len().min(6), &k) {
                        if is_prefix(&a, &lam) && is_prefix(&b, &lam) {
                            prop_assert!(is_prefix(&m, &lam));
                        }
                    }
                }
                None => {
                    for lam in Path::all_up_to(1, (a.len().max(b.len()) + 1).min(6), &k) {
                        prop_assert!(!(is_prefix(&a, &lam) && is_prefix(&b, &lam)));
                    }
                }
            }
        }
    }
}
