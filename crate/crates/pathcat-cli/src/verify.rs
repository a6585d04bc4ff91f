use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pathcat::boundary::{
    enumerate_points, partition_q, refinement_equations, CylinderExpr, Oracle,
};
use pathcat::bratteli::{
    chain_effros_shen, chain_from_k, ef_counts, ef_sets, equivalent, properness_witness, verify_ab,
};
use pathcat::cat_paths::{entrance_witness, mce};
use pathcat::cf_order::{
    collapse, head_identity, is_positive_cone, k0_is_positive, k0_push, sigma_stream, theta_stream,
    K0GiElement, LevelBlock, OrderedZ2Element,
};
use pathcat::finite_cat::example2;
use pathcat::groupoid::{isotropy_rank, isotropy_witness, power_product_holds, Isotropy};
use pathcat::measure::{
    a0_bounds, mu_basic, mu_expr, mu_inclusion_exclusion, verify_invariance, ThetaLinear,
};
use pathcat::{KSequence, Path};

use crate::failure::Failure;
use crate::{pretty, Format, RunConfig};

type Check = fn(&RunConfig) -> Result<String, Failure>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Verify(msg()))
    }
}

const CHECKS: [(&str, Check); 9] = [
    ("af_chain", af_chain),
    ("collapse", collapse_check),
    ("cycles", cycles),
    ("groupoid", groupoid),
    ("invariance", invariance),
    ("measure", measure),
    ("partition", partition),
    ("positivity", positivity),
    ("refinement", refinement),
];

pub fn run(cfg: &RunConfig) -> Result<String, Failure> {
    if cfg.format == Format::Dot {
        return Err(Failure::Usage("verify has no DOT output".into()));
    }
    let results: BTreeMap<&str, Result<String, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = CHECKS
            .iter()
            .map(|&(name, f)| (name, s.spawn(move || f(cfg))))
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| {
                let r = h
                    .join()
                    .unwrap_or_else(|_| Err(Failure::Verify("check panicked".into())));
                (name, r)
            })
            .collect()
    });
    let mut out = String::new();
    let mut rows = Vec::new();
    let (mut failed, mut limited) = (0, 0);
    for (name, r) in &results {
        let (status, detail) = match r {
            Ok(d) => ("pass", d.clone()),
            Err(f @ Failure::Resource(_)) => {
                limited += 1;
                ("resource-limit", f.to_string())
            }
            Err(f) => {
                failed += 1;
                ("fail", f.to_string())
            }
        };
        let _ = writeln!(out, "{:<5} {name}: {detail}", status.to_uppercase());
        rows.push(json!({ "check": name, "status": status, "detail": detail }));
    }
    if cfg.format == Format::Json {
        out = pretty(&json!({ "k": cfg.k.to_string(), "checks": rows }));
    }
    if failed > 0 {
        print!("{out}");
        return Err(Failure::Verify(format!(
            "{failed} of {} checks failed",
            results.len()
        )));
    }
    if limited > 0 {
        print!("{out}");
        return Err(Failure::Resource(format!(
            "{limited} checks hit the budget"
        )));
    }
    Ok(out)
}

fn depth(cfg: &RunConfig, cap: u32) -> u32 {
    cfg.levels.clamp(1, cap)
}

fn partition(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    let top = depth(cfg, 3);
    let mut points = 0;
    for n in 1..=top {
        let q = partition_q(n, k);
        let mut targets = Vec::new();
        for nu in Path::all_up_to(1, n, k) {
            for lam in Path::all_of_length(nu.source(), 1, k) {
                targets.push(CylinderExpr::z_minus(nu.clone(), &lam)?);
            }
            targets.push(CylinderExpr::z(nu));
        }
        let focus = q.paths().chain(targets.iter().flat_map(|t| t.paths()));
        let d = cfg.resolution.unwrap_or(3 * n + 4).max(n + 2);
        let oracle = Oracle::focused(1, focus, d, k, cfg.budget)?;
        ensure(oracle.verify_partition(&q)?.ok(), || {
            format!("Q_{n} is not a partition")
        })?;
        for t in &targets {
            ensure(oracle.refines(&q, t)?, || {
                format!("Q_{n} does not refine {t}")
            })?;
        }
        points += oracle.points().len();
    }
    Ok(format!("Q_n for n ≤ {top}, {points} oracle points"))
}

fn refinement(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    let top = depth(cfg, 4);
    let mut count = 0;
    for m in 1..=top {
        for n in 0..=top - m {
            for p in 0..=n {
                for id in refinement_equations(m, p, n - p, k) {
                    let focus = id.lhs.paths().chain(id.rhs.paths());
                    let d = id.rhs.max_len().max(id.lhs.max_len()) + 1;
                    let oracle = Oracle::focused(m, focus, d, k, cfg.budget)?;
                    ensure(oracle.is_disjoint_union(&id.lhs, &id.rhs.cells)?, || {
                        format!("{} fails as sets at m={m}", id.equation)
                    })?;
                    let sum: ThetaLinear = id
                        .rhs
                        .cells
                        .iter()
                        .map(|c| mu_basic(c, k))
                        .collect::<Result<Vec<_>, _>>()?
                        .into_iter()
                        .sum();
                    ensure(sum == mu_inclusion_exclusion(&id.lhs, k), || {
                        format!("{} fails for μ at m={m}", id.equation)
                    })?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} identities for m+n ≤ {top}"))
}

fn collapse_check(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    ensure(head_identity(k), || "head identity fails".into())?;
    let steps = collapse(k, depth(cfg, 50) as usize)?;
    ensure(steps.iter().all(|s| s.holds()), || {
        "a collapse group fails".into()
    })?;
    let unit = k0_push(&OrderedZ2Element::unit(), 1, k)?;
    let k1 = k.k(1);
    ensure(unit == OrderedZ2Element::new(k1 + 2, k1 + 1, 1), || {
        format!("[1]₀ at level 1 is {unit}")
    })?;
    Ok(format!(
        "{} groups, [1]₀ = ({}, {})",
        steps.len(),
        unit.m,
        unit.n
    ))
}

fn brute_positive(a: &K0GiElement, k: &KSequence) -> bool {
    (a.i + 1..=a.support() + 100).all(|l| {
        let shift = a.m + a.n * (l as i64 - a.i as i64 - 1);
        match a.blocks.iter().find(|b| b.level == l) {
            Some(b) => b.coeffs.iter().flatten().all(|&c| c + shift >= 0),
            None => k.k(l) == 0 || shift >= 0,
        }
    })
}

fn positivity(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..200 {
        let i = rng.random_range(0..4u32);
        let mut blocks = Vec::new();
        for level in i + 1..=i + 4 {
            if rng.random_bool(0.5) {
                let cells = rng.random_range(1..3usize);
                let coeffs = (0..k.k(level))
                    .map(|_| (0..cells).map(|_| rng.random_range(-5..=6)).collect())
                    .collect();
                blocks.push(LevelBlock {
                    level,
                    cells,
                    coeffs,
                });
            }
        }
        let a = K0GiElement {
            i,
            blocks,
            m: rng.random_range(-5..=6),
            n: rng.random_range(-2..=2),
        };
        ensure(k0_is_positive(&a, k)? == brute_positive(&a, k), || {
            format!("{a:?}")
        })?;
    }
    let sigma = sigma_stream(k);
    let zero = num_bigint::BigInt::from(0);
    let mut decided = 0;
    for _ in 0..200 {
        let v = OrderedZ2Element::new(rng.random_range(-40..=40), rng.random_range(-40..=40), 1);
        let cone = is_positive_cone(&v.m, &v.n, &sigma)?;
        let mut w = v.clone();
        for _ in 0..500 {
            if (w.m >= zero && w.n >= zero) || (w.m <= zero && w.n <= zero) {
                let brute = w.m >= zero && w.n >= zero;
                ensure(cone == brute, || format!("cone disagrees at {v}"))?;
                decided += 1;
                break;
            }
            w = k0_push(&w, w.level + 1, k)?;
        }
    }
    Ok(format!("200 G_i elements, {decided} ℤ² vectors"))
}

fn measure(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    for n in 1..=depth(cfg, 3) {
        let total: ThetaLinear = partition_q(n, k)
            .cells
            .iter()
            .map(|c| mu_basic(c, k))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .sum();
        ensure(total == ThetaLinear::one(), || {
            format!("μ(Q_{n}) = {total}")
        })?;
    }
    let theta = theta_stream(k);
    let top = depth(cfg, 40);
    let mut prev = None;
    for n in 1..=top {
        let (lo, hi) = a0_bounds(k, n);
        ensure(
            theta.cmp_rational(&lo)?.is_ge() && theta.cmp_rational(&hi)?.is_le(),
            || format!("a₀ bounds at depth {n} miss θ"),
        )?;
        if let Some((plo, phi)) = &prev {
            ensure(plo <= &lo && &hi <= phi, || {
                format!("bounds not nested at {n}")
            })?;
        }
        prev = Some((lo, hi));
    }
    Ok(format!("μ(Q_n) = 1, a₀ bounds to depth {top}"))
}

fn invariance(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    let top = depth(cfg, 4);
    let pools: Vec<Vec<Path>> = (0..=top).map(|l| Path::all_of_length(1, l, k)).collect();
    for _ in 0..200 {
        let pool = &pools[rng.random_range(0..=top as usize)];
        let (nu1, nu2) = (
            pool.choose(&mut rng).unwrap(),
            pool.choose(&mut rng).unwrap(),
        );
        let base = Path::all_of_length(nu1.source(), rng.random_range(0..=1), k)
            .choose(&mut rng)
            .unwrap()
            .clone();
        let mut subs = Vec::new();
        for _ in 0..rng.random_range(0..=2) {
            let ext = Path::all_of_length(base.source(), rng.random_range(1..=2), k)
                .choose(&mut rng)
                .unwrap()
                .clone();
            let p = base.compose(&ext)?;
            if !subs.contains(&p) {
                subs.push(p);
            }
        }
        let e = CylinderExpr::new(base, subs)?;
        ensure(verify_invariance(nu1, nu2, &e, k)?, || {
            format!("{nu1}E vs {nu2}E, E = {e}")
        })?;
        let (e1, e2) = (e.prefixed(nu1)?, e.prefixed(nu2)?);
        ensure(mu_expr(&e1, k, 13)? == mu_expr(&e2, k, 13)?, || {
            format!("partition measure differs on {e1} and {e2}")
        })?;
    }
    Ok(format!("200 bisections with |ν| ≤ {top}"))
}

fn af_chain(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    for i in 0..=depth(cfg, 6) {
        let s = ef_sets(i, k)?;
        let (e, f) = ef_counts(i, k);
        ensure(e == s.e.len().into() && f == s.f.len().into(), || {
            format!("|E_{i}|, |F_{i}| disagree with the recursion")
        })?;
    }
    for i in 0..=depth(cfg, 3) {
        let r = verify_ab(i, k, cfg.budget)?;
        ensure(r.ok(), || format!("A_{i} ∪ B_{i}: {r:?}"))?;
    }
    for i in 0..=depth(cfg, 4) {
        ensure(properness_witness(i, k)?, || {
            format!("properness fails at {i}")
        })?;
    }
    let levels = depth(cfg, 40) as usize;
    let d1 = chain_from_k(k, levels);
    let d2 = chain_effros_shen(&theta_stream(k), levels);
    ensure(equivalent(&d1, &d2), || {
        format!("chains differ at {levels} levels")
    })?;
    Ok(format!(
        "E/F counts, A_i ∪ B_i, properness, chains at {levels} levels"
    ))
}

fn cycles(cfg: &RunConfig) -> Result<String, Failure> {
    let c = example2();
    ensure(c.validate().valid(), || "example2 does not validate".into())?;
    let got: Vec<_> = c
        .generalized_cycles()
        .into_iter()
        .map(|r| (r.mu, r.nu, r.has_entrance))
        .collect();
    ensure(
        got == [
            ("α₁".into(), "β₁".into(), false),
            ("β₁".into(), "α₁".into(), false),
        ],
        || format!("example2 cycles: {got:?}"),
    )?;
    let k = &cfg.k;
    let mut pairs = 0;
    for len in 1..=depth(cfg, 3) {
        let paths = Path::all_of_length(1, len, k);
        for mu in &paths {
            for nu in paths.iter().filter(|nu| *nu != mu) {
                let eta = entrance_witness(mu, nu, k)?;
                ensure(mce(&mu.compose(&eta)?, nu).is_none(), || {
                    format!("witness {eta} for ({mu},{nu}) meets ν")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("example2 exact, {pairs} entrance witnesses"))
}

fn groupoid(cfg: &RunConfig) -> Result<String, Failure> {
    let k = &cfg.k;
    for p in 1..=depth(cfg, 4) {
        let oracle = Oracle::horizon(p + 1, 2, k, cfg.budget)?;
        for x in oracle.points() {
            ensure(power_product_holds(p, x)?, || {
                format!("[β^p, α^p, x] product, p={p}, x={x}")
            })?;
        }
    }
    let pts = enumerate_points(cfg.resolution.unwrap_or(6), k, cfg.budget)?;
    for i in 0..=2 {
        for x in &pts {
            let cyclic = isotropy_rank(x, i) == Isotropy::InfiniteCyclic;
            let found = isotropy_witness(x, i, i + 2, k)?.is_some();
            ensure(cyclic == found, || format!("isotropy at {x} in G_{i}"))?;
        }
    }
    Ok(format!(
        "[β^p, α^p, x] products, isotropy on {} points",
        pts.len()
    ))
}
