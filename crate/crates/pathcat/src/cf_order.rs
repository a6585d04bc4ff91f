//! Continued fractions, the connecting matrices B_i and the ordered groups
//! (ℤ², P_σ) and K₀(C*(G_i)).
//!
//! Irrationals are carried as eventually periodic coefficient rules. Every
//! sign decision is exact: it refines the convergent matrices until the sign
//! is forced.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::CylinderExpr;
use crate::cat_paths::{KSequence, PathError};

pub const SIGN_BUDGET: usize = 1000;
pub const MAX_LEVEL: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfError {
    #[error("cannot parse continued fraction {0:?}")]
    Parse(String),
    #[error("invalid continued fraction: {0}")]
    InvalidCf(String),
    #[error("sign undecided after {0} convergents")]
    Undecided(usize),
    #[error("level {0} is out of range")]
    LevelOverflow(i64),
    #[error("not a basic cylinder expression: {0}")]
    NotBasic(String),
    #[error("malformed K0 element: {0}")]
    BadElement(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A rational number or the projective point ∞.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtReal {
    Fin(BigRational),
    Infinity,
}

impl ExtReal {
    pub fn int(v: i64) -> ExtReal {
        ExtReal::Fin(BigRational::from_integer(v.into()))
    }

    pub fn ratio(p: i64, q: i64) -> ExtReal {
        ExtReal::Fin(BigRational::new(p.into(), q.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Fin(r) => r.to_f64().unwrap_or(f64::NAN),
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Fin(r) => Some(r),
            ExtReal::Infinity => None,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Fin(r) => write!(f, "{r}"),
            ExtReal::Infinity => write!(f, "∞"),
        }
    }
}

/// [[a, b], [c, d]] acting on column vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntMatrix2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> IntMatrix2 {
        IntMatrix2 {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    pub fn identity() -> IntMatrix2 {
        IntMatrix2::new(1, 0, 0, 1)
    }

    pub fn swap() -> IntMatrix2 {
        IntMatrix2::new(0, 1, 1, 0)
    }

    /// T = [[1,1],[0,1]].
    pub fn t() -> IntMatrix2 {
        IntMatrix2::new(1, 1, 0, 1)
    }

    /// [[c,1],[1,0]].
    pub fn cf(c: u32) -> IntMatrix2 {
        IntMatrix2::new(c as i64, 1, 1, 0)
    }

    pub fn mul(&self, o: &IntMatrix2) -> IntMatrix2 {
        IntMatrix2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn pow(&self, e: u32) -> IntMatrix2 {
        (0..e).fold(IntMatrix2::identity(), |acc, _| acc.mul(self))
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Inverse of a determinant ±1 matrix.
    pub fn inverse(&self) -> Option<IntMatrix2> {
        let det = self.det();
        if det.abs() != BigInt::one() {
            return None;
        }
        Some(IntMatrix2 {
            a: &self.d * &det,
            b: -&self.b * &det,
            c: -&self.c * &det,
            d: &self.a * &det,
        })
    }

    pub fn apply(&self, v: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        (
            &self.a * &v.0 + &self.b * &v.1,
            &self.c * &v.0 + &self.d * &v.1,
        )
    }
}

impl fmt::Display for IntMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for IntMatrix2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [[&self.a, &self.b], [&self.c, &self.d]].serialize(s)
    }
}

/// z ↦ (az + b)/(cz + d) on ℚ ∪ {∞}.
pub fn flt_apply(m: &IntMatrix2, z: &ExtReal) -> ExtReal {
    let to_q = |v: &BigInt| BigRational::from_integer(v.clone());
    let (num, den) = match z {
        ExtReal::Infinity => (to_q(&m.a), to_q(&m.c)),
        ExtReal::Fin(z) => (to_q(&m.a) * z + to_q(&m.b), to_q(&m.c) * z + to_q(&m.d)),
    };
    if den.is_zero() {
        ExtReal::Infinity
    } else {
        ExtReal::Fin(num / den)
    }
}

/// Π [[c_i,1],[1,0]].
pub fn cf_matrix(coeffs: &[u32]) -> IntMatrix2 {
    coeffs.iter().fold(IntMatrix2::identity(), |acc, &c| {
        acc.mul(&IntMatrix2::cf(c))
    })
}

/// [a₀, …, a_n] or [a₀, …, a_n, tail]; zero coefficients are allowed.
pub fn cf_eval(coeffs: &[u32], tail: Option<&ExtReal>) -> ExtReal {
    flt_apply(&cf_matrix(coeffs), tail.unwrap_or(&ExtReal::Infinity))
}

/// An infinite, eventually periodic continued fraction [c₀; c₁, c₂, …].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CfStream {
    prefix: Vec<u32>,
    period: Vec<u32>,
}

impl CfStream {
    pub fn new(prefix: Vec<u32>, period: Vec<u32>) -> Result<CfStream, CfError> {
        if period.is_empty() {
            return Err(CfError::InvalidCf("empty period".into()));
        }
        let s = CfStream { prefix, period };
        if s.coeff(1) == 0 {
            return Err(CfError::InvalidCf("c1 must be positive".into()));
        }
        let p = s.prefix.len();
        let q = s.period.len();
        let parities: BTreeSet<usize> = (0..q)
            .filter(|&t| s.period[t] > 0)
            .flat_map(|t| {
                if q % 2 == 1 {
                    vec![0, 1]
                } else {
                    vec![(p + t) % 2]
                }
            })
            .collect();
        if parities.len() < 2 {
            return Err(CfError::InvalidCf(
                "needs positive coefficients at infinitely many even and odd places".into(),
            ));
        }
        Ok(s)
    }

    pub fn periodic(period: Vec<u32>) -> Result<CfStream, CfError> {
        CfStream::new(Vec::new(), period)
    }

    /// √2 = [1; 2, 2, …].
    pub fn sqrt2() -> CfStream {
        CfStream::new(vec![1], vec![2]).expect("valid")
    }

    /// The golden ratio [1; 1, 1, …].
    pub fn golden() -> CfStream {
        CfStream::new(vec![1], vec![1]).expect("valid")
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    pub fn coeff(&self, i: usize) -> u32 {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    pub fn coeffs(&self, n: usize) -> Vec<u32> {
        (0..n).map(|i| self.coeff(i)).collect()
    }

    /// Whether c_i ≥ 1 for all i ≥ 1.
    pub fn is_simple(&self) -> bool {
        self.prefix.iter().skip(1).all(|&c| c > 0) && self.period.iter().all(|&c| c > 0)
    }

    /// [c_n; c_{n+1}, …].
    pub fn shift(&self, n: usize) -> CfStream {
        if n <= self.prefix.len() {
            CfStream {
                prefix: self.prefix[n..].to_vec(),
                period: self.period.clone(),
            }
        } else {
            let r = (n - self.prefix.len()) % self.period.len();
            let mut period = self.period[r..].to_vec();
            period.extend_from_slice(&self.period[..r]);
            CfStream {
                prefix: Vec::new(),
                period,
            }
        }
    }

    /// The value lies between the two returned endpoints (in some order).
    pub fn interval(&self, n: usize) -> (ExtReal, ExtReal) {
        let m = cf_matrix(&self.coeffs(n + 1));
        let zero = ExtReal::int(0);
        (flt_apply(&m, &zero), flt_apply(&m, &ExtReal::Infinity))
    }

    /// The n-th convergent [c₀; …, c_n].
    pub fn convergent(&self, n: usize) -> ExtReal {
        cf_eval(&self.coeffs(n + 1), None)
    }

    pub fn approx(&self, n: usize) -> f64 {
        self.convergent(n).to_f64()
    }

    /// The sign of mσ + n.
    pub fn sign_of(&self, m: &BigInt, n: &BigInt) -> Result<Ordering, CfError> {
        if m.is_zero() && n.is_zero() {
            return Ok(Ordering::Equal);
        }
        let mut mat = IntMatrix2::identity();
        for i in 0..=SIGN_BUDGET {
            // mσ + n has the sign of A t + B for the tail t ∈ (0, ∞).
            let a = m * &mat.a + n * &mat.c;
            let b = m * &mat.b + n * &mat.d;
            if !a.is_negative() && !b.is_negative() {
                return Ok(Ordering::Greater);
            }
            if !a.is_positive() && !b.is_positive() {
                return Ok(Ordering::Less);
            }
            mat = mat.mul(&IntMatrix2::cf(self.coeff(i)));
        }
        Err(CfError::Undecided(SIGN_BUDGET))
    }

    /// Compares the value with a rational.
    pub fn cmp_rational(&self, r: &BigRational) -> Result<Ordering, CfError> {
        self.sign_of(r.denom(), &-r.numer())
    }
}

impl fmt::Display for CfStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (head, rest): (u32, Vec<String>) = match self.prefix.split_first() {
            Some((h, r)) => (*h, r.iter().map(u32::to_string).collect()),
            None => {
                let rot = self.shift(1);
                let per: Vec<String> = rot.period.iter().map(u32::to_string).collect();
                return write!(f, "{};({})", self.period[0], per.join(","));
            }
        };
        let per: Vec<String> = self.period.iter().map(u32::to_string).collect();
        let mut items = rest;
        items.push(format!("({})", per.join(",")));
        write!(f, "{head};{}", items.join(","))
    }
}

impl FromStr for CfStream {
    type Err = CfError;

    /// Grammar "c0;c1,c2,(p1,…,pm)".
    fn from_str(s: &str) -> Result<CfStream, CfError> {
        let bad = || CfError::Parse(s.to_string());
        let s2: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, tail) = s2.split_once(';').ok_or_else(bad)?;
        let c0: u32 = head.parse().map_err(|_| bad())?;
        let open = tail.find('(').ok_or_else(bad)?;
        if !tail.ends_with(')') {
            return Err(bad());
        }
        let before = tail[..open].trim_end_matches(',');
        let inside = &tail[open + 1..tail.len() - 1];
        let nums = |t: &str| -> Result<Vec<u32>, CfError> {
            if t.is_empty() {
                return Ok(Vec::new());
            }
            t.split(',').map(|x| x.parse().map_err(|_| bad())).collect()
        };
        let mut prefix = vec![c0];
        prefix.extend(nums(before)?);
        let period = nums(inside)?;
        if period.is_empty() {
            return Err(bad());
        }
        CfStream::new(prefix, period)
    }
}

impl TryFrom<String> for CfStream {
    type Error = CfError;
    fn try_from(s: String) -> Result<CfStream, CfError> {
        s.parse()
    }
}

impl From<CfStream> for String {
    fn from(s: CfStream) -> String {
        s.to_string()
    }
}

fn shifted_k(k: &KSequence, d: usize) -> (Vec<u32>, Vec<u32>) {
    let (pre, per) = (k.prefix(), k.period());
    if d <= pre.len() {
        (pre[d..].to_vec(), per.to_vec())
    } else {
        let r = (d - pre.len()) % per.len();
        let mut p = per[r..].to_vec();
        p.extend_from_slice(&per[..r]);
        (Vec::new(), p)
    }
}

/// (k_i) = (k₁, c₀, 0^{c₁−1}, c₂, 0^{c₃−1}, c₄, …).
pub fn k_sequence_from_sigma(sigma: &CfStream, k1: u32) -> Result<KSequence, CfError> {
    if !sigma.is_simple() {
        return Err(CfError::InvalidCf(
            "σ must be a simple continued fraction".into(),
        ));
    }
    let pair = |j: usize, out: &mut Vec<u32>| {
        out.extend(std::iter::repeat_n(0, sigma.coeff(2 * j + 1) as usize - 1));
        out.push(sigma.coeff(2 * j + 2));
    };
    let j0 = sigma.prefix.len() / 2;
    let q = sigma.period.len();
    let pair_period = if q % 2 == 1 { q } else { q / 2 };
    let mut prefix = vec![k1, sigma.coeff(0)];
    for j in 0..j0 {
        pair(j, &mut prefix);
    }
    let mut period = Vec::new();
    for j in j0..j0 + pair_period {
        pair(j, &mut period);
    }
    Ok(KSequence::periodic(prefix, period)?)
}

/// θ = [0, 1, k₁, 1, k₂, 1, k₃, …].
pub fn theta_stream(k: &KSequence) -> CfStream {
    let flat = |v: &[u32]| v.iter().flat_map(|&x| [1, x]).collect::<Vec<u32>>();
    let mut prefix = vec![0];
    prefix.extend(flat(k.prefix()));
    CfStream::new(prefix, flat(k.period())).expect("k has a positive period entry")
}

/// σ = [k₂, 1, k₃, 1, …], generally with zero coefficients; equal in value to
/// the σ that generated k.
pub fn sigma_stream(k: &KSequence) -> CfStream {
    let (pre, per) = shifted_k(k, 1);
    let flat = |v: &[u32]| v.iter().flat_map(|&x| [x, 1]).collect::<Vec<u32>>();
    CfStream::new(flat(&pre), flat(&per)).expect("k has a positive period entry")
}

/// Checks θ = [0, 1, k₁, 1, σ] level by level: the θ interval at each level
/// meets the image of the σ interval under the head matrix.
pub fn verify_theta_identity(k: &KSequence, sigma: &CfStream, levels: usize) -> bool {
    let theta = theta_stream(k);
    let head = cf_matrix(&[0, 1, k.k(1), 1]);
    (0..levels).all(|n| {
        let (s0, s1) = sigma.interval(n);
        let (t0, t1) = theta.interval(n + 4);
        let img = [flt_apply(&head, &s0), flt_apply(&head, &s1)];
        match (
            img[0].finite().zip(img[1].finite()),
            t0.finite().zip(t1.finite()),
        ) {
            (Some((a, b)), Some((c, d))) => {
                let (lo1, hi1) = if a <= b { (a, b) } else { (b, a) };
                let (lo2, hi2) = if c <= d { (c, d) } else { (d, c) };
                lo1 <= hi2 && lo2 <= hi1
            }
            _ => true,
        }
    })
}

/// B_i = [[k_{i+1}+1, 1], [k_{i+1}, 1]], mapping level i to level i+1. B_{−1} = T.
pub fn connecting_matrix(i: i64, k: &KSequence) -> Result<IntMatrix2, CfError> {
    if !(-1..MAX_LEVEL).contains(&i) {
        return Err(CfError::LevelOverflow(i));
    }
    let kk = k.k((i + 1) as u32) as i64;
    Ok(IntMatrix2::new(kk + 1, 1, kk, 1))
}

/// One telescoped group B_{to−1}⋯B_{from} = T^{c_odd−1}·B_{from}.
#[derive(Debug, Clone, Serialize)]
pub struct CollapseStep {
    pub from_level: u32,
    pub to_level: u32,
    pub c_even: u32,
    pub c_odd: u32,
    pub product: IntMatrix2,
    pub factored: IntMatrix2,
}

impl CollapseStep {
    pub fn holds(&self) -> bool {
        self.product == self.factored
    }
}

/// Groups the chain from level 1 into `groups` blocks, each one positive
/// entry of k followed by its run of zeros.
pub fn collapse(k: &KSequence, groups: usize) -> Result<Vec<CollapseStep>, CfError> {
    let mut out = Vec::with_capacity(groups);
    let mut level = 1u32;
    for _ in 0..groups {
        let c_even = k.k(level + 1);
        let mut z = 0;
        while k.k(level + 2 + z) == 0 {
            z += 1;
        }
        let to = level + 1 + z;
        let mut product = IntMatrix2::identity();
        for i in level..to {
            product = connecting_matrix(i as i64, k)?.mul(&product);
        }
        out.push(CollapseStep {
            from_level: level,
            to_level: to,
            c_even,
            c_odd: z + 1,
            product,
            factored: IntMatrix2::cf(z + 1).mul(&IntMatrix2::cf(c_even)),
        });
        level = to;
    }
    Ok(out)
}

/// B₀·T = [[1,1],[1,0]]·[[k₁,1],[1,0]]·[[1,1],[1,0]]·[[0,1],[1,0]].
pub fn head_identity(k: &KSequence) -> bool {
    let lhs = connecting_matrix(0, k)
        .and_then(|b0| Ok(b0.mul(&connecting_matrix(-1, k)?)))
        .expect("levels −1, 0 exist");
    let rhs = cf_matrix(&[1, k.k(1), 1, 0]);
    lhs == rhs
}

/// mσ + n ≥ 0.
pub fn is_positive_cone(m: &BigInt, n: &BigInt, sigma: &CfStream) -> Result<bool, CfError> {
    Ok(sigma.sign_of(m, n)? != Ordering::Less)
}

/// M(P_s) = P_{s′} for M = [[d₀,1],[1,0]], s = [d₀, d₁, t], s′ = [d₁, t],
/// checked on the given lattice vectors.
pub fn cone_transform_check(s: &CfStream, vectors: &[(i64, i64)]) -> Result<bool, CfError> {
    let m = IntMatrix2::cf(s.coeff(0));
    let s1 = s.shift(1);
    for &(a, b) in vectors {
        let v = (BigInt::from(a), BigInt::from(b));
        let w = m.apply(&v);
        if is_positive_cone(&v.0, &v.1, s)? != is_positive_cone(&w.0, &w.1, &s1)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// (m, n) in coordinates (p_level, q_level), where
/// p_i = [Z(α^i) \ Z(α^iβ)] and q_i = [Z(β^{i+1})].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OrderedZ2Element {
    pub m: BigInt,
    pub n: BigInt,
    pub level: i64,
}

impl OrderedZ2Element {
    pub fn new(m: impl Into<BigInt>, n: impl Into<BigInt>, level: i64) -> Self {
        OrderedZ2Element {
            m: m.into(),
            n: n.into(),
            level,
        }
    }

    /// The unit class (0, 1) at level −1.
    pub fn unit() -> Self {
        OrderedZ2Element::new(0, 1, -1)
    }

    pub fn add(&self, o: &OrderedZ2Element) -> OrderedZ2Element {
        assert_eq!(self.level, o.level, "classes must sit at a common level");
        OrderedZ2Element::new(&self.m + &o.m, &self.n + &o.n, self.level)
    }

    pub fn scale(&self, c: i64) -> OrderedZ2Element {
        OrderedZ2Element::new(&self.m * c, &self.n * c, self.level)
    }
}

impl fmt::Display for OrderedZ2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})@{}", self.m, self.n, self.level)
    }
}

/// Moves a class to another level along the B-chain (backwards through the
/// inverse matrices).
pub fn k0_push(
    v: &OrderedZ2Element,
    to_level: i64,
    k: &KSequence,
) -> Result<OrderedZ2Element, CfError> {
    if !(-1..MAX_LEVEL).contains(&to_level) {
        return Err(CfError::LevelOverflow(to_level));
    }
    let mut w = (v.m.clone(), v.n.clone());
    let mut level = v.level;
    while level < to_level {
        w = connecting_matrix(level, k)?.apply(&w);
        level += 1;
    }
    while level > to_level {
        let inv = connecting_matrix(level - 1, k)?
            .inverse()
            .expect("B_i has determinant 1");
        w = inv.apply(&w);
        level -= 1;
    }
    Ok(OrderedZ2Element {
        m: w.0,
        n: w.1,
        level,
    })
}

/// Z(ν) ↦ (0,1) at level |ν|−1 and Z(ν)\Z(νλ) ↦ (1,0) at level |ν|, with |ν|
/// measured from v₁ (a path at v_m counts m−1 extra edges).
pub fn class_of_basic(e: &CylinderExpr) -> Result<OrderedZ2Element, CfError> {
    if !e.is_basic() {
        return Err(CfError::NotBasic(e.to_string()));
    }
    let len = (e.base.range() as i64 - 1) + e.base.len() as i64;
    if e.subtracted.is_empty() {
        Ok(OrderedZ2Element::new(0, 1, len - 1))
    } else {
        Ok(OrderedZ2Element::new(1, 0, len))
    }
}

/// The coefficients c_{ℓ,r,j} at one level ℓ, for a partition of X_{ℓ+1}
/// into `cells` pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelBlock {
    pub level: u32,
    pub cells: usize,
    /// coeffs[r−1][j−1].
    pub coeffs: Vec<Vec<i64>>,
}

/// Σ c_{ℓ,r,j}[χ_{α^{ℓ−1}γ_ℓ^{(r)}F_{ℓ,j}}] + m[Z(α^i)\Z(α^iβ)] + n[Z(β^{i+1})].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0GiElement {
    pub i: u32,
    pub blocks: Vec<LevelBlock>,
    pub m: i64,
    pub n: i64,
}

impl K0GiElement {
    pub fn simple(i: u32, m: i64, n: i64) -> Self {
        K0GiElement {
            i,
            blocks: Vec::new(),
            m,
            n,
        }
    }

    pub fn validate(&self, k: &KSequence) -> Result<(), CfError> {
        let mut seen = BTreeSet::new();
        for b in &self.blocks {
            let bad = |msg: &str| Err(CfError::BadElement(format!("level {}: {msg}", b.level)));
            if b.level <= self.i {
                return bad("levels must exceed i");
            }
            if !seen.insert(b.level) {
                return bad("repeated level");
            }
            if b.cells == 0 {
                return bad("a partition has at least one cell");
            }
            if b.coeffs.len() != k.k(b.level) as usize {
                return bad("one coefficient row per branch r ≤ k_ℓ");
            }
            if b.coeffs.iter().any(|row| row.len() != b.cells) {
                return bad("one coefficient per cell");
            }
        }
        Ok(())
    }

    /// The largest level carrying coefficients.
    pub fn support(&self) -> u32 {
        self.blocks.iter().map(|b| b.level).max().unwrap_or(self.i)
    }
}

/// a ≥ 0 iff c_{ℓ,r,j} + m + n(ℓ−i−1) ≥ 0 for every ℓ > i, r ≤ k_ℓ, j.
/// Levels without listed coefficients contribute c = 0.
pub fn k0_is_positive(a: &K0GiElement, k: &KSequence) -> Result<bool, CfError> {
    a.validate(k)?;
    let (i, m, n) = (a.i as i64, a.m, a.n);
    for b in &a.blocks {
        let shift = m + n * (b.level as i64 - i - 1);
        if b.coeffs.iter().flatten().any(|&c| c + shift < 0) {
            return Ok(false);
        }
    }
    let listed: BTreeSet<u32> = a.blocks.iter().map(|b| b.level).collect();
    for l in a.i + 1..=a.support() {
        if !listed.contains(&l) && k.k(l) > 0 && m + n * (l as i64 - i - 1) < 0 {
            return Ok(false);
        }
    }
    // Beyond the support every c is 0 and m + n(ℓ−i−1) is affine in ℓ.
    if n < 0 {
        return Ok(false);
    }
    let l0 = k.next_positive(a.support() + 1) as i64;
    Ok(m + n * (l0 - i - 1) >= 0)
}
