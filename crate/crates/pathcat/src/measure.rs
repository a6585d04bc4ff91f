//! The invariant measure on X, valued exactly in ℤθ + ℤ.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::boundary::{
    partition_q_at, BoundaryError, CylinderExpr, Oracle, Partition, DEFAULT_BUDGET,
};
use crate::cat_paths::{factor_out, mce, KSequence, Path, PathError};
use crate::cf_order::{cf_eval, k0_push, theta_stream, CfError, CfStream, OrderedZ2Element};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("certified negative measure at level {level}: {which} = {value}")]
    NegativeMeasure {
        level: i64,
        which: &'static str,
        value: String,
    },
    #[error("insufficient resolution: need {needed}, have {have}")]
    InsufficientResolution { needed: u32, have: u32 },
    #[error("the decomposing partition does not refine {0}")]
    NotRefined(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// xθ + y.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ThetaLinear {
    pub x: BigInt,
    pub y: BigInt,
}

impl ThetaLinear {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        ThetaLinear {
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn zero() -> Self {
        ThetaLinear::new(0, 0)
    }

    pub fn one() -> Self {
        ThetaLinear::new(0, 1)
    }

    pub fn theta() -> Self {
        ThetaLinear::new(1, 0)
    }

    /// The sign of xθ + y, decided exactly from the continued fraction of θ.
    pub fn sign(&self, theta: &CfStream) -> Result<Ordering, CfError> {
        theta.sign_of(&self.x, &self.y)
    }

    pub fn to_f64(&self, theta: f64) -> f64 {
        self.x.to_f64().unwrap_or(f64::NAN) * theta + self.y.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for ThetaLinear {
    type Output = ThetaLinear;
    fn add(self, o: ThetaLinear) -> ThetaLinear {
        ThetaLinear::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for ThetaLinear {
    type Output = ThetaLinear;
    fn sub(self, o: ThetaLinear) -> ThetaLinear {
        ThetaLinear::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for ThetaLinear {
    type Output = ThetaLinear;
    fn neg(self) -> ThetaLinear {
        ThetaLinear::new(-self.x, -self.y)
    }
}

impl Mul<&BigInt> for &ThetaLinear {
    type Output = ThetaLinear;
    fn mul(self, c: &BigInt) -> ThetaLinear {
        ThetaLinear::new(&self.x * c, &self.y * c)
    }
}

impl std::iter::Sum for ThetaLinear {
    fn sum<I: Iterator<Item = ThetaLinear>>(it: I) -> ThetaLinear {
        it.fold(ThetaLinear::zero(), |a, b| a + b)
    }
}

impl fmt::Display for ThetaLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}θ{:+}", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ABPair {
    pub i: i64,
    pub a: ThetaLinear,
    pub b: ThetaLinear,
}

/// (a_i, b_i) for i = −1, 0, …, n, starting from a₀ = θ, b₀ = 1 − θ.
/// Index 0 of the result is level −1, where (a, b) = (θ, 1).
pub fn ab_sequence(n: u32, k: &KSequence) -> Vec<ABPair> {
    let mut out = vec![
        ABPair {
            i: -1,
            a: ThetaLinear::theta(),
            b: ThetaLinear::one(),
        },
        ABPair {
            i: 0,
            a: ThetaLinear::theta(),
            b: ThetaLinear::new(-1, 1),
        },
    ];
    for i in 0..n {
        let (a, b) = {
            let last = out.last().expect("nonempty");
            let kk = BigInt::from(k.k(i + 1));
            let a = last.a.clone() - &last.b * &kk;
            let b = -last.a.clone() + &last.b * &(kk + 1u32);
            (a, b)
        };
        out.push(ABPair {
            i: i as i64 + 1,
            a,
            b,
        });
    }
    out
}

/// (a_i, b_i), certified nonnegative.
pub fn ab(i: i64, k: &KSequence) -> Result<ABPair, MeasureError> {
    let seq = ab_sequence(i.max(0) as u32, k);
    let pair = seq[(i + 1) as usize].clone();
    let theta = theta_stream(k);
    for (which, v) in [("a", &pair.a), ("b", &pair.b)] {
        if v.sign(&theta)? == Ordering::Less {
            return Err(MeasureError::NegativeMeasure {
                level: i,
                which,
                value: v.to_string(),
            });
        }
    }
    Ok(pair)
}

fn effective_len(p: &Path) -> i64 {
    (p.range() as i64 - 1) + p.len() as i64
}

/// μ(Z(ν)) = b_{|ν|−1}, μ(Z(ν) \ Z(νλ)) = a_{|ν|} for a single edge λ.
pub fn mu_basic(e: &CylinderExpr, k: &KSequence) -> Result<ThetaLinear, MeasureError> {
    let class = crate::cf_order::class_of_basic(e)?;
    let seq = ab_sequence(class.level.max(0) as u32, k);
    let pair = &seq[(class.level + 1) as usize];
    Ok(if e.subtracted.is_empty() {
        pair.b.clone()
    } else {
        pair.a.clone()
    })
}

/// μ(Z(ν)) for any path.
pub fn mu_cylinder(nu: &Path, k: &KSequence) -> ThetaLinear {
    let l = effective_len(nu);
    ab_sequence(l.max(0) as u32, k)[l as usize].b.clone()
}

/// ⟨(a_L, b_L), v⟩ with v pushed to level L.
pub fn pair_with_class(
    v: &OrderedZ2Element,
    level: i64,
    k: &KSequence,
) -> Result<ThetaLinear, MeasureError> {
    let w = k0_push(v, level, k)?;
    let seq = ab_sequence(level.max(0) as u32, k);
    let pair = &seq[(level + 1) as usize];
    Ok(&pair.a * &w.m + &pair.b * &w.n)
}

/// μ(E) by decomposing Z(base) through the cells of a rooted Q_h.
///
/// With E = ν·(Z(v_s) \ ∪ Z(ρ_i)), the partition Q_h at v_s refines the
/// inner expression for h = max |ρ_i|; μ(E) is the sum of μ(ν·S) over the
/// cells S it contains. The oracle runs at resolution 3h+4.
pub fn mu_expr(
    e: &CylinderExpr,
    k: &KSequence,
    resolution: u32,
) -> Result<ThetaLinear, MeasureError> {
    if e.is_basic() {
        return mu_basic(e, k);
    }
    let nu = &e.base;
    let s = nu.source();
    let inner: Vec<Path> = e
        .subtracted
        .iter()
        .map(|p| factor_out(p, nu))
        .collect::<Result<_, _>>()?;
    let inner_expr = CylinderExpr::new(Path::unit(s), inner)?;
    let h = inner_expr.max_len().max(1);
    let needed = 3 * h + 4;
    if resolution < needed {
        return Err(MeasureError::InsufficientResolution {
            needed,
            have: resolution,
        });
    }
    let q = partition_q_at(s, h, k);
    let oracle = Oracle::focused(
        s,
        q.paths().chain(inner_expr.paths()),
        needed,
        k,
        DEFAULT_BUDGET,
    )?;
    if !oracle.refines(&q, &inner_expr)? {
        return Err(MeasureError::NotRefined(e.to_string()));
    }
    let mut total = ThetaLinear::zero();
    for idx in oracle.cells_inside(&q, &inner_expr)? {
        total = total + mu_basic(&q.cells[idx].prefixed(nu)?, k)?;
    }
    Ok(total)
}

/// μ(Z(ν) \ ∪ Z(ν_i)) by inclusion–exclusion over minimal common extensions.
pub fn mu_inclusion_exclusion(e: &CylinderExpr, k: &KSequence) -> ThetaLinear {
    fn go(
        k: &KSequence,
        subs: &[Path],
        start: usize,
        cur: &Path,
        sign: i32,
        acc: &mut ThetaLinear,
    ) {
        for i in start..subs.len() {
            if let Some(m) = mce(cur, &subs[i]) {
                let v = mu_cylinder(&m, k);
                *acc = acc.clone() + if sign > 0 { v } else { -v };
                go(k, subs, i + 1, &m, -sign, acc);
            }
        }
    }
    let mut acc = mu_cylinder(&e.base, k);
    go(k, &e.subtracted, 0, &e.base, -1, &mut acc);
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditivityReport {
    pub label: String,
    pub whole: ThetaLinear,
    pub sum: ThetaLinear,
    pub ok: bool,
}

/// Σ_{S ∈ P} μ(S) = μ(whole), exactly.
pub fn verify_additivity(
    p: &Partition,
    whole: &CylinderExpr,
    k: &KSequence,
) -> Result<AdditivityReport, MeasureError> {
    let sum: ThetaLinear = p
        .cells
        .iter()
        .map(|c| mu_basic(c, k))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let whole_mu = mu_inclusion_exclusion(whole, k);
    Ok(AdditivityReport {
        label: p.label.clone(),
        ok: sum == whole_mu,
        whole: whole_mu,
        sum,
    })
}

/// μ(ν₁E) = μ(ν₂E) for a bisection ν₁E ↔ ν₂E.
pub fn verify_invariance(
    nu1: &Path,
    nu2: &Path,
    e: &CylinderExpr,
    k: &KSequence,
) -> Result<bool, MeasureError> {
    if nu1.len() != nu2.len() || nu1.source() != nu2.source() {
        return Err(
            PathError::Malformed("bisection needs equal lengths and sources".into()).into(),
        );
    }
    let l = mu_inclusion_exclusion(&e.prefixed(nu1)?, k);
    let r = mu_inclusion_exclusion(&e.prefixed(nu2)?, k);
    Ok(l == r)
}

/// [0,1,k₁,…,1,k_n] ≤ a₀ ≤ [0,1,k₁,…,1,k_n,1].
pub fn a0_bounds(k: &KSequence, n: u32) -> (BigRational, BigRational) {
    let mut coeffs = vec![0];
    for i in 1..=n {
        coeffs.push(1);
        coeffs.push(k.k(i));
    }
    let lo = cf_eval(&coeffs, None);
    coeffs.push(1);
    let hi = cf_eval(&coeffs, None);
    let fin = |x: crate::cf_order::ExtReal| x.finite().cloned().unwrap_or_else(BigRational::zero);
    (fin(lo), fin(hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureRow {
    pub i: i64,
    pub a: ThetaLinear,
    pub b: ThetaLinear,
    pub a_float: f64,
    pub b_float: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
}

/// Rows for levels 0..=n; the bounds are those of a₀ at depth max(i, 1).
pub fn measure_table(k: &KSequence, n: u32) -> Vec<MeasureRow> {
    let theta = theta_stream(k).approx(80);
    ab_sequence(n, k)
        .into_iter()
        .skip(1)
        .map(|p| {
            let (lo, hi) = a0_bounds(k, p.i.max(1) as u32);
            MeasureRow {
                a_float: p.a.to_f64(theta),
                b_float: p.b.to_f64(theta),
                bound_lo: lo.to_f64().unwrap_or(f64::NAN),
                bound_hi: hi.to_f64().unwrap_or(f64::NAN),
                i: p.i,
                a: p.a,
                b: p.b,
            }
        })
        .collect()
}
