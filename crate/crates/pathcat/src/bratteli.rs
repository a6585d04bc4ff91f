//! Two-row AF chains: the E_i/F_i chain of Λ(k) and Effros–Shen diagrams.
//!
//! Dimension vectors are columns: `dims[i + 1] = edges[i] · dims[i]`, and
//! `edges[i][r][c]` counts the edges from vertex c at level i to vertex r at
//! level i + 1.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::boundary::{phi, BoundaryError, CylinderExpr, Oracle, Partition, DEFAULT_BUDGET};
use crate::cat_paths::{KSequence, Path, PathError};
use crate::cf_order::{collapse, CfError, CfStream, IntMatrix2};

/// Largest |E_i| + |F_i| that `ef_sets` enumerates.
pub const EF_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BratteliError {
    #[error("bad cuts: {0}")]
    BadCuts(String),
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("enumeration exceeds {0} paths")]
    ResourceLimit(usize),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Path(#[from] PathError),
}

pub type Matrix = Vec<Vec<BigUint>>;

mod json_nums {
    use super::*;
    use serde::de::Error as _;

    fn to_num(x: &BigUint) -> serde_json::Number {
        x.to_string()
            .parse()
            .expect("decimal digits form a JSON number")
    }

    fn from_num<E: serde::de::Error>(n: &serde_json::Number) -> Result<BigUint, E> {
        n.to_string()
            .parse()
            .map_err(|_| E::custom(format!("not a nonnegative integer: {n}")))
    }

    pub fn ser_levels<S: Serializer>(v: &[Vec<BigUint>], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Vec<serde_json::Number>> =
            v.iter().map(|r| r.iter().map(to_num).collect()).collect();
        out.serialize(s)
    }

    pub fn de_levels<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigUint>>, D::Error> {
        let raw = Vec::<Vec<serde_json::Number>>::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(from_num).collect())
            .collect()
    }

    pub fn ser_edges<S: Serializer>(v: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Vec<Vec<serde_json::Number>>> = v
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(to_num).collect()).collect())
            .collect();
        out.serialize(s)
    }

    pub fn de_edges<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
        let raw = Vec::<Vec<Vec<serde_json::Number>>>::deserialize(d)?;
        let m: Result<Vec<Matrix>, D::Error> = raw
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(from_num).collect()).collect())
            .collect();
        m.map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BratteliDiagram {
    #[serde(
        serialize_with = "json_nums::ser_levels",
        deserialize_with = "json_nums::de_levels"
    )]
    pub levels: Vec<Vec<BigUint>>,
    #[serde(
        serialize_with = "json_nums::ser_edges",
        deserialize_with = "json_nums::de_edges"
    )]
    pub edges: Vec<Matrix>,
}

fn big(x: u32) -> BigUint {
    BigUint::from(x)
}

fn matrix(rows: &[&[u32]]) -> Matrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| big(x)).collect())
        .collect()
}

/// a·b.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(b).map(|(x, brow)| x * &brow[c]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[BigUint]) -> Vec<BigUint> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    if r == c {
                        BigUint::one()
                    } else {
                        BigUint::zero()
                    }
                })
                .collect()
        })
        .collect()
}

fn is_identity(m: &Matrix) -> bool {
    m.len() == m.first().map_or(0, Vec::len) && *m == identity(m.len())
}

/// B_i = [[k_{i+1}+1, 1], [k_{i+1}, 1]].
pub fn b_matrix(i: u32, k: &KSequence) -> Matrix {
    let c = k.k(i + 1);
    matrix(&[&[c + 1, 1], &[c, 1]])
}

/// [[g,1],[1,0]].
pub fn es_matrix(g: u32) -> Matrix {
    matrix(&[&[g, 1], &[1, 0]])
}

pub fn from_int_matrix(m: &IntMatrix2) -> Option<Matrix> {
    let conv = |x: &num_bigint::BigInt| x.to_biguint();
    Some(vec![
        vec![conv(&m.a)?, conv(&m.b)?],
        vec![conv(&m.c)?, conv(&m.d)?],
    ])
}

impl BratteliDiagram {
    /// Builds from initial dims and matrices, propagating dims.
    pub fn from_edges(start: Vec<BigUint>, edges: Vec<Matrix>) -> Result<Self, BratteliError> {
        let mut levels = vec![start];
        for m in &edges {
            let cur = levels.last().expect("nonempty");
            if m.iter().any(|r| r.len() != cur.len()) {
                return Err(BratteliError::Invalid("matrix width ≠ level size".into()));
            }
            levels.push(mat_vec(m, cur));
        }
        let d = BratteliDiagram { levels, edges };
        d.validate()?;
        Ok(d)
    }

    /// Propagated dims, positive dims, no zero rows or columns.
    pub fn validate(&self) -> Result<(), BratteliError> {
        let bad = |s: String| Err(BratteliError::Invalid(s));
        if self.levels.len() != self.edges.len() + 1 {
            return bad("need one more level than matrices".into());
        }
        for (i, dims) in self.levels.iter().enumerate() {
            if dims.is_empty() || dims.iter().any(Zero::is_zero) {
                return bad(format!("level {i} has an empty or zero dimension"));
            }
        }
        for (i, m) in self.edges.iter().enumerate() {
            let (rows, cols) = (self.levels[i + 1].len(), self.levels[i].len());
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return bad(format!("matrix {i} has the wrong shape"));
            }
            if m.iter().any(|r| r.iter().all(Zero::is_zero)) {
                return bad(format!("matrix {i} has a zero row"));
            }
            if (0..cols).any(|c| m.iter().all(|r| r[c].is_zero())) {
                return bad(format!("matrix {i} has a zero column"));
            }
            if mat_vec(m, &self.levels[i]) != self.levels[i + 1] {
                return bad(format!("dims at level {} are not M·dims", i + 1));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// M_{j−1}···M_i.
    pub fn product(&self, i: usize, j: usize) -> Matrix {
        let mut acc = identity(self.levels[i].len());
        for m in &self.edges[i..j] {
            acc = mat_mul(m, &acc);
        }
        acc
    }

    /// Drops identity matrices, merging the levels they connect.
    pub fn normalized(&self) -> BratteliDiagram {
        let mut levels = vec![self.levels[0].clone()];
        let mut edges = Vec::new();
        for (i, m) in self.edges.iter().enumerate() {
            if !is_identity(m) {
                edges.push(m.clone());
                levels.push(self.levels[i + 1].clone());
            }
        }
        BratteliDiagram { levels, edges }
    }
}

/// Keeps the levels at `cuts`, multiplying the matrices in between.
pub fn telescope(d: &BratteliDiagram, cuts: &[usize]) -> Result<BratteliDiagram, BratteliError> {
    if cuts.is_empty() {
        return Err(BratteliError::BadCuts("no cuts".into()));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BratteliError::BadCuts("cuts must increase strictly".into()));
    }
    if *cuts.last().expect("nonempty") >= d.depth() {
        return Err(BratteliError::BadCuts(format!(
            "cut beyond the last level {}",
            d.depth() - 1
        )));
    }
    Ok(BratteliDiagram {
        levels: cuts.iter().map(|&c| d.levels[c].clone()).collect(),
        edges: cuts.windows(2).map(|w| d.product(w[0], w[1])).collect(),
    })
}

/// The chain C_0 ⊆ C_1 ⊆ … with dims (|E_i|, |F_i|) and matrices B_i.
pub fn chain_from_k(k: &KSequence, levels: usize) -> BratteliDiagram {
    let edges = (0..levels.saturating_sub(1) as u32)
        .map(|i| b_matrix(i, k))
        .collect();
    BratteliDiagram::from_edges(vec![big(1), big(1)], edges).expect("B-chains are connected")
}

/// Simple continued fraction coefficients, merging [.., a, 0, b, ..] into a + b.
pub fn simple_coeffs(theta: &CfStream, n: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(n + 1);
    let mut i = 0;
    while out.len() <= n {
        let c = theta.coeff(i);
        i += 1;
        if c == 0 && i > 1 {
            let next = theta.coeff(i);
            i += 1;
            *out.last_mut().expect("past the head") += next;
        } else {
            out.push(c);
        }
    }
    out.truncate(n);
    out
}

/// A_n = M_{q_n} ⊕ M_{q_{n−1}} for n ≥ 1, included with multiplicities
/// [[g_{n+1}, 1], [1, 0]].
pub fn chain_effros_shen(theta: &CfStream, levels: usize) -> BratteliDiagram {
    let g = simple_coeffs(theta, levels + 1);
    let start = vec![big(g[1]), big(1)];
    let edges = (1..levels).map(|n| es_matrix(g[n + 1])).collect();
    BratteliDiagram::from_edges(start, edges).expect("simple coefficients are positive")
}

/// Levels where both diagrams carry the same dims, paired in order.
fn matching_levels(d1: &BratteliDiagram, d2: &BratteliDiagram) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut from = 0;
    for (a, dims) in d1.levels.iter().enumerate() {
        if let Some(off) = d2.levels[from..].iter().position(|x| x == dims) {
            out.push((a, from + off));
            from += off + 1;
        }
    }
    out
}

/// Telescoped equality at explicit cut points.
pub fn equivalent_at(
    d1: &BratteliDiagram,
    cuts1: &[usize],
    d2: &BratteliDiagram,
    cuts2: &[usize],
) -> Result<bool, BratteliError> {
    if cuts1.len() != cuts2.len() {
        return Err(BratteliError::BadCuts("cut lists differ in length".into()));
    }
    Ok(telescope(d1, cuts1)? == telescope(d2, cuts2)?)
}

/// Equivalence after dropping identity levels and telescoping both diagrams
/// to their common levels. The common levels must keep recurring up to the
/// end of at least one diagram.
pub fn equivalent(d1: &BratteliDiagram, d2: &BratteliDiagram) -> bool {
    let (n1, n2) = (d1.normalized(), d2.normalized());
    let pairs = matching_levels(&n1, &n2);
    if pairs.len() < 2 {
        return n1 == n2;
    }
    let gap = |sel: fn(&(usize, usize)) -> usize, depth: usize| {
        let idx: Vec<usize> = pairs.iter().map(sel).collect();
        let widest = idx.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(1);
        depth - 1 - idx.last().expect("two pairs") <= widest
    };
    if !gap(|p| p.0, n1.depth()) && !gap(|p| p.1, n2.depth()) {
        return false;
    }
    pairs
        .windows(2)
        .all(|w| n1.product(w[0].0, w[1].0) == n2.product(w[0].1, w[1].1))
}

/// Cut points from the collapse of the B-chain: level 1 and the end of each
/// collapse group, paired with the Effros–Shen levels of [0, 1, k₁, 1, σ].
pub fn dictionary_cuts(
    k: &KSequence,
    chain_levels: usize,
    es_levels: usize,
) -> Result<(Vec<usize>, Vec<usize>), BratteliError> {
    let mut pairs: Vec<(usize, usize)> = vec![(1, if k.k(1) == 0 { 0 } else { 2 })];
    for step in collapse(k, chain_levels)? {
        let to = step.to_level as usize;
        if to >= chain_levels {
            break;
        }
        let last = *pairs.last().expect("nonempty");
        if step.c_even == 0 {
            pairs.pop();
            pairs.push((to, last.1));
        } else {
            pairs.push((to, last.1 + 2));
        }
    }
    pairs.retain(|&(a, b)| a < chain_levels && b < es_levels);
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EFSets {
    pub level: u32,
    pub e: Vec<Path>,
    pub f: Vec<Path>,
}

/// (|E_i|, |F_i|) from the B-recursion.
pub fn ef_counts(i: u32, k: &KSequence) -> (BigUint, BigUint) {
    let mut v = vec![big(1), big(1)];
    for j in 0..i {
        v = mat_vec(&b_matrix(j, k), &v);
    }
    let f = v.pop().expect("two entries");
    (v.pop().expect("two entries"), f)
}

/// E_i = {μ ∈ v₁Λ : |μ| = i}, F_i = {ηβ^q : η ∈ Φ_i, |η| + q = i + 1}.
pub fn ef_sets(i: u32, k: &KSequence) -> Result<EFSets, BratteliError> {
    let (e, f) = ef_counts(i, k);
    if e + f > BigUint::from(EF_LIMIT) {
        return Err(BratteliError::ResourceLimit(EF_LIMIT));
    }
    let e = Path::all_of_length(1, i, k);
    let f = phi(1, i, k)
        .iter()
        .map(|eta| eta.then_l1(0, i + 1 - eta.len()))
        .collect();
    Ok(EFSets { level: i, e, f })
}

/// A_i ∪ B_i = {Z(μ) \ Z(μβ) : μ ∈ E_i} ∪ {Z(μ) : μ ∈ F_i}.
pub fn ab_partition(i: u32, k: &KSequence) -> Result<Partition, BratteliError> {
    let sets = ef_sets(i, k)?;
    let mut cells = Vec::with_capacity(sets.e.len() + sets.f.len());
    for mu in sets.e {
        let b = Path::beta(mu.source());
        cells.push(CylinderExpr::z_minus(mu, &b)?);
    }
    cells.extend(sets.f.into_iter().map(CylinderExpr::z));
    Ok(Partition {
        label: format!("A_{i}∪B_{i}"),
        cells,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AbReport {
    pub level: u32,
    pub cells: usize,
    pub points: usize,
    pub partition: bool,
    pub refines_previous: Option<bool>,
}

impl AbReport {
    pub fn ok(&self) -> bool {
        self.partition && self.refines_previous != Some(false)
    }
}

/// Oracle check that A_i ∪ B_i partitions X and refines A_{i−1} ∪ B_{i−1}.
pub fn verify_ab(i: u32, k: &KSequence, budget: usize) -> Result<AbReport, BratteliError> {
    let p = ab_partition(i, k)?;
    let prev = if i > 0 {
        Some(ab_partition(i - 1, k)?)
    } else {
        None
    };
    let focus: Vec<&Path> = p
        .paths()
        .chain(prev.iter().flat_map(|q| q.paths()))
        .collect();
    let oracle = Oracle::focused(1, focus, p.max_len() + 1, k, budget)?;
    let partition = oracle.verify_partition(&p)?.ok();
    let refines_previous = match &prev {
        None => None,
        Some(q) => {
            let mut all = true;
            for e in &q.cells {
                all &= oracle.refines(&p, e)?;
            }
            Some(all)
        }
    };
    Ok(AbReport {
        level: i,
        cells: p.cells.len(),
        points: oracle.points().len(),
        partition,
        refines_previous,
    })
}

/// Z(β^{i+1}) meets both Z(α) and its complement.
pub fn properness_witness(i: u32, k: &KSequence) -> Result<bool, BratteliError> {
    let b = Path::lambda1(1, 0, i + 1);
    let a = Path::alpha(1);
    let oracle = Oracle::focused(1, [&b, &a], i + 3, k, DEFAULT_BUDGET)?;
    let zb = CylinderExpr::z(b);
    let za = CylinderExpr::z(a);
    let (mut inside, mut outside) = (false, false);
    for x in oracle.points() {
        if crate::boundary::contains(&zb, x)? {
            if crate::boundary::contains(&za, x)? {
                inside = true;
            } else {
                outside = true;
            }
        }
    }
    Ok(inside && outside)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dot,
    Json,
}

/// DOT or JSON text.
pub fn emit(d: &BratteliDiagram, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string(d).expect("diagram serializes") + "\n",
        Format::Dot => emit_dot(d),
    }
}

fn emit_dot(d: &BratteliDiagram) -> String {
    let mut s = String::from("digraph bratteli {\n  rankdir=TB;\n  node [shape=circle];\n");
    for (i, dims) in d.levels.iter().enumerate() {
        let _ = write!(s, "  {{ rank=same;");
        for (j, dim) in dims.iter().enumerate() {
            let _ = write!(s, " n{i}_{j} [label=\"{dim}\"];");
        }
        s.push_str(" }\n");
    }
    for (i, m) in d.edges.iter().enumerate() {
        for (r, row) in m.iter().enumerate() {
            for (c, mult) in row.iter().enumerate() {
                if *mult > big(3) {
                    let _ = writeln!(s, "  n{i}_{c} -> n{}_{r} [label=\"{mult}\"];", i + 1);
                } else {
                    let times = u32::try_from(mult).expect("at most 3");
                    for _ in 0..times {
                        let _ = writeln!(s, "  n{i}_{c} -> n{}_{r};", i + 1);
                    }
                }
            }
        }
    }
    s.push_str("}\n");
    s
}

pub fn parse_json(text: &str) -> Result<BratteliDiagram, BratteliError> {
    let d: BratteliDiagram =
        serde_json::from_str(text).map_err(|e| BratteliError::Invalid(e.to_string()))?;
    d.validate()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf_order::{k0_push, k_sequence_from_sigma, theta_stream, OrderedZ2Element};
    use proptest::prelude::*;

    fn ones() -> KSequence {
        KSequence::constant(1).unwrap()
    }

    fn v(xs: &[u32]) -> Vec<BigUint> {
        xs.iter().map(|&x| big(x)).collect()
    }

    #[test]
    fn ef_small_levels() {
        let k = ones();
        let s0 = ef_sets(0, &k).unwrap();
        assert_eq!(s0.e, vec![Path::unit(1)]);
        assert_eq!(s0.f, vec![Path::beta(1)]);
        assert_eq!(ef_counts(1, &k), (big(3), big(2)));
        assert_eq!(ef_counts(2, &k), (big(8), big(5)));
        for k1 in 0..=5 {
            let k = KSequence::periodic(vec![k1], vec![1]).unwrap();
            let s = ef_sets(1, &k).unwrap();
            assert_eq!((s.e.len() as u32, s.f.len() as u32), (k1 + 2, k1 + 1));
        }
    }

    #[test]
    fn ef_enumeration_matches_recursion() {
        for k in [ones(), KSequence::periodic(vec![0, 2], vec![0, 1]).unwrap()] {
            for i in 0..=6 {
                let s = ef_sets(i, &k).unwrap();
                let (e, f) = ef_counts(i, &k);
                assert_eq!((big(s.e.len() as u32), big(s.f.len() as u32)), (e, f));
            }
        }
    }

    #[test]
    fn ab_partition_level_zero() {
        let p = ab_partition(0, &ones()).unwrap();
        assert_eq!(p.cells.len(), 2);
        assert_eq!(p.cells[0].to_string(), "Z(v1) \\ Z(v1:(0,1))");
        assert_eq!(p.cells[1].to_string(), "Z(v1:(0,1))");
    }

    #[test]
    fn ab_partitions_verify() {
        let k = ones();
        for i in 0..=3 {
            let r = verify_ab(i, &k, DEFAULT_BUDGET).unwrap();
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn properness() {
        for i in 0..=4 {
            assert!(properness_witness(i, &ones()).unwrap());
        }
    }

    #[test]
    fn telescope_example() {
        let k = KSequence::periodic(vec![3, 0], vec![1]).unwrap();
        let d = chain_from_k(&k, 3);
        assert_eq!(d.edges[0], matrix(&[&[4, 1], &[3, 1]]));
        assert_eq!(d.edges[1], matrix(&[&[1, 1], &[0, 1]]));
        let t = telescope(&d, &[0, 2]).unwrap();
        assert_eq!(t.edges, vec![matrix(&[&[7, 2], &[3, 1]])]);
        assert!(telescope(&d, &[1, 1]).is_err());
        assert!(telescope(&d, &[0, 3]).is_err());
    }

    #[test]
    fn effros_shen_dims() {
        let theta = CfStream::new(vec![0, 2, 3], vec![1]).unwrap();
        let d = chain_effros_shen(&theta, 4);
        assert_eq!(d.levels[0], v(&[2, 1]));
        assert_eq!(d.levels[1], v(&[7, 2]));
        assert_eq!(d.levels[2], v(&[9, 7]));
        let g = simple_coeffs(&CfStream::new(vec![0, 1, 0, 1], vec![2]).unwrap(), 4);
        assert_eq!(g, vec![0, 2, 2, 2]);
    }

    #[test]
    fn dims_are_unit_pushforwards() {
        let k = KSequence::periodic(vec![0, 2, 0], vec![1, 0, 3]).unwrap();
        let d = chain_from_k(&k, 10);
        for (l, dims) in d.levels.iter().enumerate() {
            let p = k0_push(&OrderedZ2Element::unit(), l as i64, &k).unwrap();
            let want = (
                num_bigint::BigInt::from(dims[0].clone()),
                num_bigint::BigInt::from(dims[1].clone()),
            );
            assert_eq!((p.m, p.n), want);
        }
    }

    #[test]
    fn chains_equivalent_for_test_irrationals() {
        for (sigma, k1) in [
            (CfStream::golden(), 1),
            (CfStream::sqrt2(), 0),
            (CfStream::sqrt2(), 2),
        ] {
            let k = k_sequence_from_sigma(&sigma, k1).unwrap();
            let d1 = chain_from_k(&k, 20);
            let d2 = chain_effros_shen(&theta_stream(&k), 20);
            assert!(equivalent(&d1, &d2));
            let (c1, c2) = dictionary_cuts(&k, 20, 20).unwrap();
            assert!(c1.len() >= 5);
            assert!(equivalent_at(&d1, &c1, &d2, &c2).unwrap());
        }
    }

    #[test]
    fn inequivalent_chains() {
        let d1 = chain_effros_shen(&CfStream::golden(), 12);
        let d2 = chain_effros_shen(&CfStream::sqrt2(), 12);
        assert!(!equivalent(&d1, &d2));
        let d3 = chain_effros_shen(&CfStream::new(vec![1, 1, 1, 1, 1], vec![2]).unwrap(), 12);
        assert!(!equivalent(&d1, &d3));
    }

    #[test]
    fn dot_and_json() {
        let d = BratteliDiagram::from_edges(v(&[1, 1]), vec![]).unwrap();
        let dot = emit(&d, Format::Dot);
        assert_eq!(dot.matches("label=").count(), 2);
        assert!(!dot.contains("->"));

        let d = chain_from_k(&ones(), 2);
        assert_eq!(d.edges[0], matrix(&[&[2, 1], &[1, 1]]));
        let dot = emit(&d, Format::Dot);
        assert_eq!(dot.matches("n0_0 -> n1_0;").count(), 2);
        assert_eq!(dot.matches("->").count(), 5);

        let big_d = BratteliDiagram::from_edges(v(&[1]), vec![matrix(&[&[5]])]).unwrap();
        assert!(emit(&big_d, Format::Dot).contains("[label=\"5\"]"));

        let d = chain_from_k(&ones(), 60);
        let json = emit(&d, Format::Json);
        assert!(json.starts_with("{\"levels\":[[1,1],"));
        let back = parse_json(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(emit(&back, Format::Json), json);
    }

    #[test]
    fn invalid_diagrams() {
        let bad = BratteliDiagram {
            levels: vec![v(&[1, 1]), v(&[3, 2])],
            edges: vec![matrix(&[&[2, 1], &[1, 0]])],
        };
        assert!(bad.validate().is_err());
        assert!(
            BratteliDiagram::from_edges(v(&[1, 1]), vec![matrix(&[&[1, 0], &[1, 0]])]).is_err()
        );
    }

    fn arb_k() -> impl Strategy<Value = KSequence> {
        (
            prop::collection::vec(0u32..3, 1..4),
            prop::collection::vec(0u32..3, 1..4),
        )
            .prop_filter_map("positive period", |(pre, per)| {
                KSequence::periodic(pre, per).ok()
            })
    }

    proptest! {
        #[test]
        fn equivalence_laws(k1 in arb_k(), k2 in arb_k(), pos in 1usize..10) {
            let a = chain_from_k(&k1, 14);
            let b = chain_effros_shen(&theta_stream(&k1), 14);
            prop_assert!(equivalent(&a, &a));
            prop_assert_eq!(equivalent(&a, &b), equivalent(&b, &a));
            prop_assert!(equivalent(&a, &b));
            let mut c = a.clone();
            c.edges.insert(pos, identity(2));
            c.levels.insert(pos, a.levels[pos].clone());
            prop_assert!(c.validate().is_ok());
            prop_assert_eq!(equivalent(&c, &b), equivalent(&a, &b));
            let other = chain_from_k(&k2, 14);
            prop_assert_eq!(equivalent(&a, &other), equivalent(&other, &a));
            if k1.values(14) == k2.values(14) {
                prop_assert!(equivalent(&a, &other));
            }
        }
    }
}
