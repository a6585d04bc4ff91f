//! The groupoid G = G(Λ)|_X and its subgroupoids G_i.
//!
//! Elements are triples [μ, ν, x] with r(μ) = r(ν) = v₁, |μ| = |ν| and x a
//! boundary point at s(μ) = s(ν). They are kept in canonical form: the
//! longest common suffix of μ and ν is moved into x.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{BoundaryError, Ext, SymbolicPoint, Tail};
use crate::cat_paths::{factor_out, mce, Block, KSequence, Path, PathError};

pub const DEFAULT_ORBIT_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupoidError {
    #[error("malformed groupoid element: {0}")]
    MalformedElement(String),
    #[error("source of the left factor differs from the range of the right factor")]
    NonComposable,
    #[error("insufficient resolution: need {needed}, have {have}")]
    InsufficientResolution { needed: u32, have: u32 },
    #[error("orbit enumeration exceeded {0} points")]
    ResourceLimit(usize),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Boundary(BoundaryError),
}

impl From<BoundaryError> for GroupoidError {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::InsufficientResolution { needed, have } => {
                GroupoidError::InsufficientResolution { needed, have }
            }
            BoundaryError::ResourceLimit(n) => GroupoidError::ResourceLimit(n),
            other => GroupoidError::Boundary(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GElement {
    mu: Path,
    nu: Path,
    point: SymbolicPoint,
}

fn without_last_l1(p: &Path, a: u32, b: u32) -> Result<Path, PathError> {
    let mut blocks = p.blocks().to_vec();
    if let Some(Block::L1 { m, n }) = blocks.pop() {
        if m - a + n - b > 0 {
            blocks.push(Block::L1 { m: m - a, n: n - b });
        }
    }
    Path::from_blocks(p.range(), blocks)
}

fn without_last_block(p: &Path) -> Result<Path, PathError> {
    let mut blocks = p.blocks().to_vec();
    blocks.pop();
    Path::from_blocks(p.range(), blocks)
}

impl GElement {
    /// [μ, ν, x], canonicalised.
    pub fn make(mu: Path, nu: Path, x: SymbolicPoint) -> Result<GElement, GroupoidError> {
        let bad = |m: &str| Err(GroupoidError::MalformedElement(m.to_string()));
        if mu.range() != 1 || nu.range() != 1 {
            return bad("μ and ν must have range v1");
        }
        if mu.len() != nu.len() {
            return bad("|μ| ≠ |ν|");
        }
        if mu.source() != nu.source() || x.range() != mu.source() {
            return bad("μ, ν and x must meet at one vertex");
        }
        let (mut mu, mut nu, mut x) = (mu, nu, x);
        loop {
            match (mu.last_block(), nu.last_block()) {
                (Some(Block::L1 { m, n }), Some(Block::L1 { m: m2, n: n2 })) => {
                    let (a, b) = (m.min(m2), n.min(n2));
                    if a + b == 0 {
                        break;
                    }
                    mu = without_last_l1(&mu, a, b)?;
                    nu = without_last_l1(&nu, a, b)?;
                    x = x.prepend(&Path::lambda1(mu.source(), a, b))?;
                }
                (Some(l @ Block::L2 { level, branch }), Some(r)) if l == r => {
                    mu = without_last_block(&mu)?;
                    nu = without_last_block(&nu)?;
                    x = x.prepend(&Path::gamma(level, branch))?;
                }
                _ => break,
            }
        }
        Ok(GElement { mu, nu, point: x })
    }

    /// The unit [v₁, v₁, x].
    pub fn unit(x: SymbolicPoint) -> Result<GElement, GroupoidError> {
        GElement::make(Path::unit(1), Path::unit(1), x)
    }

    pub fn mu(&self) -> &Path {
        &self.mu
    }

    pub fn nu(&self) -> &Path {
        &self.nu
    }

    pub fn point(&self) -> &SymbolicPoint {
        &self.point
    }

    pub fn is_unit(&self) -> bool {
        self.mu.is_unit() && self.nu.is_unit()
    }

    /// r(g) = μx.
    pub fn range_point(&self) -> Result<SymbolicPoint, GroupoidError> {
        Ok(self.point.prepend(&self.mu)?)
    }

    /// s(g) = νx.
    pub fn source_point(&self) -> Result<SymbolicPoint, GroupoidError> {
        Ok(self.point.prepend(&self.nu)?)
    }

    pub fn inv(&self) -> GElement {
        GElement {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
            point: self.point.clone(),
        }
    }

    /// [μ,ν,x]·[ξ,η,y] = [μδ, ηε, z] with νδ = ξε = mce(ν, ξ) and x = δz.
    pub fn mul(&self, h: &GElement) -> Result<GElement, GroupoidError> {
        if !same_point(&self.source_point()?, &h.range_point()?)? {
            return Err(GroupoidError::NonComposable);
        }
        let m = mce(&self.nu, &h.mu).ok_or(GroupoidError::NonComposable)?;
        let delta = factor_out(&m, &self.nu)?;
        let eps = factor_out(&m, &h.mu)?;
        let z = self.point.strip_prefix(&delta)?;
        GElement::make(self.mu.compose(&delta)?, h.nu.compose(&eps)?, z)
    }

    /// Membership in G_i: the canonical pair is (μθ, μ′θ′) with
    /// |μ| = |μ′| ≤ i and θ, θ′ ∈ Λ₁.
    pub fn in_gi(&self, i: u32) -> bool {
        self.mu.core_len().max(self.nu.core_len()) <= i
    }

    /// The smallest i with g ∈ G_i.
    pub fn gi_level(&self) -> u32 {
        self.mu.core_len().max(self.nu.core_len())
    }
}

impl fmt::Display for GElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.mu, self.nu, self.point)
    }
}

/// Equality of boundary points up to the coarser of the two resolutions.
pub fn same_point(a: &SymbolicPoint, b: &SymbolicPoint) -> Result<bool, GroupoidError> {
    match (a.tail(), b.tail()) {
        (Tail::AB { .. }, Tail::AB { .. }) => Ok(a.prefix() == b.prefix() && a.tail() == b.tail()),
        (Tail::GammaInf, Tail::GammaInf) => {
            let (s, l) = if a.prefix().len() <= b.prefix().len() {
                (a, b)
            } else {
                (b, a)
            };
            if !l.has_prefix(s.prefix())? {
                return Ok(false);
            }
            Ok(s.prefix().len() == l.prefix().len()
                || l.edge_is_l2(s.prefix().len() + 1) == Some(true))
        }
        _ => Ok(false),
    }
}

/// The prefixes of x of length n.
pub fn prefixes_of_length(x: &SymbolicPoint, n: u32) -> Result<Vec<Path>, GroupoidError> {
    enum XB {
        L1(Ext, Ext),
        L2(u32),
    }
    let mut xb: Vec<XB> = x
        .prefix()
        .blocks()
        .iter()
        .map(|b| match *b {
            Block::L1 { m, n } => XB::L1(Ext::Fin(m), Ext::Fin(n)),
            Block::L2 { branch, .. } => XB::L2(branch),
        })
        .collect();
    if let Tail::AB { a, b } = x.tail() {
        xb.push(XB::L1(a, b));
    }
    let fits = |e: Ext, v: u32| match e {
        Ext::Fin(c) => v <= c,
        Ext::Omega => true,
    };
    let mut cur = Path::unit(x.range());
    let mut rem = n;
    for blk in &xb {
        if rem == 0 {
            break;
        }
        match *blk {
            XB::L2(branch) => {
                cur = cur.then_gamma(branch);
                rem -= 1;
            }
            XB::L1(a, b) => {
                let whole = match (a, b) {
                    (Ext::Fin(a), Ext::Fin(b)) if a + b <= rem => Some((a, b)),
                    _ => None,
                };
                if let Some((a, b)) = whole {
                    cur = cur.then_l1(a, b);
                    rem -= a + b;
                    continue;
                }
                return Ok((0..=rem)
                    .filter(|&p| fits(a, p) && fits(b, rem - p))
                    .map(|p| cur.then_l1(p, rem - p))
                    .collect());
            }
        }
    }
    if rem > 0 {
        return Err(GroupoidError::InsufficientResolution {
            needed: n + 1,
            have: x.resolution(),
        });
    }
    Ok(vec![cur])
}

/// r(g) for all g ∈ G_i with s(g) = x and |μ| ≤ budget. Pass `u32::MAX` as
/// i for the whole groupoid G.
pub fn orbit(
    x: &SymbolicPoint,
    i: u32,
    budget: u32,
    k: &KSequence,
) -> Result<Vec<SymbolicPoint>, GroupoidError> {
    let mut seen = BTreeSet::new();
    let mut by_len: HashMap<u32, Vec<Path>> = HashMap::new();
    for n in 0..=budget {
        let rhos = by_len
            .entry(n)
            .or_insert_with(|| Path::all_of_length(1, n, k));
        for nu in prefixes_of_length(x, n)? {
            if nu.core_len() > i {
                continue;
            }
            let y = x.strip_prefix(&nu)?;
            for rho in rhos.iter() {
                if rho.source() == nu.source() && rho.core_len() <= i {
                    seen.insert(y.prepend(rho)?);
                    if seen.len() > DEFAULT_ORBIT_LIMIT {
                        return Err(GroupoidError::ResourceLimit(DEFAULT_ORBIT_LIMIT));
                    }
                }
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// |Ω_ℓ| for G_i: paths v₁ → v_ℓ whose edges after position i lie in Λ₁.
pub fn omega_size(l: u32, i: u32, k: &KSequence) -> usize {
    Path::all_of_length(1, l - 1, k)
        .into_iter()
        .filter(|p| p.core_len() <= i)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Isotropy {
    Trivial,
    InfiniteCyclic,
}

/// Isotropy of G_i at x: infinite cyclic at λα^∞β^∞ with λ ∈ Φ_i (generated
/// by [λα, λβ, α^∞β^∞]), trivial elsewhere. Pass `u32::MAX` for G.
pub fn isotropy_rank(x: &SymbolicPoint, i: u32) -> Isotropy {
    let full = Tail::AB {
        a: Ext::Omega,
        b: Ext::Omega,
    };
    if x.tail() == full && x.prefix().len() <= i {
        Isotropy::InfiniteCyclic
    } else {
        Isotropy::Trivial
    }
}

/// A non-unit g ∈ G_i with s(g) = r(g) = x and |μ| ≤ budget, by exhaustive
/// search.
pub fn isotropy_witness(
    x: &SymbolicPoint,
    i: u32,
    budget: u32,
    k: &KSequence,
) -> Result<Option<GElement>, GroupoidError> {
    for n in 1..=budget {
        let rhos = Path::all_of_length(1, n, k);
        for nu in prefixes_of_length(x, n)? {
            if nu.core_len() > i {
                continue;
            }
            let y = x.strip_prefix(&nu)?;
            for rho in &rhos {
                if rho.source() != nu.source() || rho.core_len() > i || *rho == nu {
                    continue;
                }
                if same_point(&y.prepend(rho)?, x)? {
                    let g = GElement::make(rho.clone(), nu.clone(), y.clone())?;
                    if !g.is_unit() {
                        return Ok(Some(g));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// [β^p, α^p, x] = Π_{j<p} [β, α, α^j β^{p−j−1} x] for x ∈ X_{p+1}.
pub fn power_product_holds(p: u32, x: &SymbolicPoint) -> Result<bool, GroupoidError> {
    let lhs = GElement::make(Path::lambda1(1, 0, p), Path::lambda1(1, p, 0), x.clone())?;
    let mut acc: Option<GElement> = None;
    for j in 0..p {
        let w = x.prepend(&Path::lambda1(2, j, p - j - 1))?;
        let g = GElement::make(Path::beta(1), Path::alpha(1), w)?;
        acc = Some(match acc {
            None => g,
            Some(a) => a.mul(&g)?,
        });
    }
    Ok(acc.is_some_and(|a| a == lhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{enumerate_points, DEFAULT_BUDGET};
    use proptest::prelude::*;

    fn ones() -> KSequence {
        KSequence::constant(1).unwrap()
    }

    fn ww(range: u32) -> SymbolicPoint {
        SymbolicPoint::omega_omega(Path::unit(range))
    }

    fn gpt(prefix: Path) -> SymbolicPoint {
        SymbolicPoint::omega_omega(prefix)
    }

    #[test]
    fn make_examples() {
        let ab = Path::lambda1(1, 1, 1);
        let x = gpt(Path::gamma(3, 1));
        let g = GElement::make(ab.clone(), ab.clone(), x.clone()).unwrap();
        assert!(g.is_unit());
        assert_eq!(g.point(), &x.prepend(&ab).unwrap());

        let g = GElement::make(Path::lambda1(1, 2, 0), Path::lambda1(1, 0, 2), x.clone()).unwrap();
        assert_eq!(g.mu(), &Path::lambda1(1, 2, 0));

        let x4 = gpt(Path::gamma(4, 1));
        let g = GElement::make(Path::lambda1(1, 2, 1), Path::lambda1(1, 1, 2), x4.clone()).unwrap();
        assert_eq!(g.mu(), &Path::alpha(1));
        assert_eq!(g.nu(), &Path::beta(1));
        assert_eq!(g.point(), &x4.prepend(&Path::lambda1(2, 1, 1)).unwrap());
        let raw_r = x4.prepend(&Path::lambda1(1, 2, 1)).unwrap();
        assert_eq!(g.range_point().unwrap(), raw_r);
    }

    #[test]
    fn malformed_elements() {
        let x = ww(2);
        assert!(GElement::make(Path::alpha(1), Path::lambda1(1, 1, 1), x.clone()).is_err());
        assert!(GElement::make(Path::alpha(1), Path::beta(1), ww(3)).is_err());
        assert!(GElement::make(Path::alpha(2), Path::beta(2), ww(3)).is_err());
    }

    #[test]
    fn inverse_and_units() {
        let g = GElement::make(Path::gamma(1, 1), Path::beta(1), ww(2)).unwrap();
        let u = g.mul(&g.inv()).unwrap();
        assert!(u.is_unit());
        assert_eq!(u.point(), &g.range_point().unwrap());
        let v = g.inv().mul(&g).unwrap();
        assert_eq!(v.point(), &g.source_point().unwrap());
    }

    #[test]
    fn non_composable() {
        let g = GElement::make(Path::alpha(1), Path::beta(1), ww(2)).unwrap();
        let h = GElement::make(Path::gamma(1, 1), Path::gamma(1, 1), ww(2)).unwrap();
        assert_eq!(g.mul(&h), Err(GroupoidError::NonComposable));
    }

    #[test]
    fn power_product_small() {
        for p in 1..=3 {
            let x = gpt(Path::gamma(p + 1, 1));
            assert!(power_product_holds(p, &x).unwrap());
            assert!(power_product_holds(p, &ww(p + 1)).unwrap());
        }
    }

    #[test]
    fn power_product_p2_explicit() {
        let x = gpt(Path::gamma(3, 1));
        let f0 = GElement::make(
            Path::beta(1),
            Path::alpha(1),
            x.prepend(&Path::beta(2)).unwrap(),
        )
        .unwrap();
        let f1 = GElement::make(
            Path::beta(1),
            Path::alpha(1),
            x.prepend(&Path::alpha(2)).unwrap(),
        )
        .unwrap();
        let want = GElement::make(Path::lambda1(1, 0, 2), Path::lambda1(1, 2, 0), x).unwrap();
        assert_eq!(f0.mul(&f1).unwrap(), want);
    }

    #[test]
    fn gi_membership() {
        let x = ww(2);
        let g = GElement::make(Path::alpha(1), Path::beta(1), x.clone()).unwrap();
        assert!(g.in_gi(0) && g.in_gi(5));
        let h = GElement::make(Path::gamma(1, 1), Path::beta(1), x.clone()).unwrap();
        assert!(!h.in_gi(0));
        assert!(h.in_gi(1));
        assert!(GElement::unit(ww(1)).unwrap().in_gi(0));
    }

    #[test]
    fn prefixes_of_points() {
        let x = gpt(Path::lambda1(1, 1, 0).then_gamma(1));
        assert_eq!(prefixes_of_length(&x, 1).unwrap(), vec![Path::alpha(1)]);
        assert_eq!(prefixes_of_length(&x, 3).unwrap().len(), 2);
        assert_eq!(prefixes_of_length(&x, 4).unwrap().len(), 3);
        let a = SymbolicPoint::ab(Path::unit(1), Ext::Omega, Ext::Fin(1)).unwrap();
        assert_eq!(prefixes_of_length(&a, 4).unwrap().len(), 2);
        let g = SymbolicPoint::new(Path::alpha(1), Tail::GammaInf).unwrap();
        assert!(prefixes_of_length(&g, 2).is_err());
    }

    #[test]
    fn orbit_in_e_ell() {
        let k = ones();
        for i in 0..=2u32 {
            for l in i + 1..=5 {
                // x = α^{ℓ−1} γ_ℓ x′ lies in E_ℓ.
                let x = gpt(Path::lambda1(1, l - 1, 0).then_gamma(1));
                let orb = orbit(&x, i, l - 1, &k).unwrap();
                assert_eq!(orb.len(), omega_size(l, i, &k), "i={i} ℓ={l}");
            }
        }
    }

    #[test]
    fn isotropy_classification() {
        let k = ones();
        assert_eq!(isotropy_rank(&ww(1), 0), Isotropy::InfiniteCyclic);
        let a_inf = SymbolicPoint::ab(Path::unit(1), Ext::Omega, Ext::Fin(0)).unwrap();
        assert_eq!(isotropy_rank(&a_inf, 3), Isotropy::Trivial);
        assert!(isotropy_witness(&ww(1), 0, 2, &k).unwrap().is_some());
        assert!(isotropy_witness(&a_inf, 3, 4, &k).unwrap().is_none());
        let deep = gpt(Path::lambda1(1, 1, 0).then_gamma(1));
        assert_eq!(isotropy_rank(&deep, 1), Isotropy::Trivial);
        assert!(isotropy_witness(&deep, 1, 5, &k).unwrap().is_none());
        assert_eq!(isotropy_rank(&deep, 2), Isotropy::InfiniteCyclic);
        assert!(isotropy_witness(&deep, 2, 4, &k).unwrap().is_some());
    }

    #[test]
    fn f_i_zero_orbits() {
        let k = ones();
        let a_inf = SymbolicPoint::ab(Path::unit(1), Ext::Omega, Ext::Fin(0)).unwrap();
        let b_inf = SymbolicPoint::ab(Path::unit(1), Ext::Fin(0), Ext::Omega).unwrap();
        for i in 1..=2 {
            let oa: BTreeSet<_> = orbit(&a_inf, i, 4, &k).unwrap().into_iter().collect();
            let ob: BTreeSet<_> = orbit(&b_inf, i, 4, &k).unwrap().into_iter().collect();
            assert!(oa.is_disjoint(&ob));
            let target = SymbolicPoint::ab(Path::gamma(1, 1), Ext::Omega, Ext::Fin(2)).unwrap();
            assert!(oa.contains(&target));
        }
    }

    #[test]
    fn isotropy_rank_matches_search_on_oracle_points() {
        let k = ones();
        let pts = enumerate_points(4, &k, DEFAULT_BUDGET).unwrap();
        for i in 0..=2 {
            for x in &pts {
                let found = isotropy_witness(x, i, i + 2, &k).unwrap().is_some();
                assert_eq!(
                    found,
                    isotropy_rank(x, i) == Isotropy::InfiniteCyclic,
                    "{x} i={i}"
                );
            }
        }
    }

    fn arb_point() -> impl Strategy<Value = SymbolicPoint> {
        (0u32..3, 0u32..3, prop::bool::ANY, 0u32..3).prop_map(|(a, b, g, t)| {
            let mut p = Path::lambda1(1, a, b);
            if g {
                p = p.then_gamma(1);
            }
            let tail = match (t, p.last_block()) {
                (_, Some(Block::L1 { .. })) => (Ext::Omega, Ext::Omega),
                (0, _) => (Ext::Omega, Ext::Omega),
                (1, _) => (Ext::Omega, Ext::Fin(1)),
                _ => (Ext::Fin(2), Ext::Omega),
            };
            if let Some(Block::L1 { .. }) = p.last_block() {
                p = p.then_gamma(1);
            }
            SymbolicPoint::ab(p, tail.0, tail.1).unwrap()
        })
    }

    fn arb_element_at(x: SymbolicPoint, pick: usize, n: u32) -> Option<GElement> {
        let k = ones();
        let prefixes = prefixes_of_length(&x, n).ok()?;
        let nu = prefixes.get(pick % prefixes.len().max(1))?.clone();
        let y = x.strip_prefix(&nu).ok()?;
        let rhos: Vec<Path> = Path::all_of_length(1, n, &k)
            .into_iter()
            .filter(|r| r.source() == nu.source())
            .collect();
        let rho = rhos.get(pick % rhos.len().max(1))?.clone();
        GElement::make(rho, nu, y).ok()
    }

    proptest! {
        #[test]
        fn groupoid_axioms(x in arb_point(), p1 in 0usize..50, p2 in 0usize..50, p3 in 0usize..50,
                           n1 in 0u32..4, n2 in 0u32..4, n3 in 0u32..4) {
            let Some(h) = arb_element_at(x.clone(), p1, n1) else { return Ok(()) };
            let Some(g) = arb_element_at(h.range_point().unwrap(), p2, n2) else { return Ok(()) };
            let Some(f) = arb_element_at(g.range_point().unwrap(), p3, n3) else { return Ok(()) };
            let left = f.mul(&g).unwrap().mul(&h).unwrap();
            let right = f.mul(&g.mul(&h).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(left.source_point().unwrap(), x);
            prop_assert!(g.mul(&g.inv()).unwrap().is_unit());
            prop_assert_eq!(g.inv().inv(), g.clone());
            let gi = g.gi_level().max(h.gi_level());
            prop_assert!(g.mul(&h).unwrap().in_gi(gi));
        }
    }
}
