//! Explicit finite categories given by composition tables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cat_paths::{KSequence, Path};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiniteCatError {
    #[error("unknown element {0}")]
    UnknownId(String),
    #[error("duplicate element {0}")]
    DuplicateId(String),
    #[error("malformed category file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub id: String,
    pub range: String,
    pub source: String,
}

/// File format: `{units, elements: [{id, range, source}], compose: [[f, g, fg]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryFile {
    pub units: Vec<String>,
    pub elements: Vec<ElementSpec>,
    pub compose: Vec<(String, String, String)>,
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCategory {
    names: Vec<String>,
    range: Vec<usize>,
    source: Vec<usize>,
    unit: Vec<bool>,
    table: HashMap<(usize, usize), usize>,
    conflicts: Vec<(usize, usize)>,
    truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    UnitEndpoints { unit: String },
    ConflictingComposition { f: String, g: String },
    NotComposable { f: String, g: String },
    WrongEndpoints { f: String, g: String, fg: String },
    MissingComposition { f: String, g: String },
    IdentityLaw { f: String },
    Associativity { f: String, g: String, h: String },
    LeftCancellation { f: String, g: String, h: String },
    RightCancellation { f: String, g: String, h: String },
    NonunitInverse { f: String, g: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub elements: usize,
    pub compositions: usize,
    pub truncated: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub mu: String,
    pub nu: String,
    pub has_entrance: bool,
    /// An η ∈ νΛ with no common extension with μ.
    pub entrance: Option<String>,
    pub truncated: bool,
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}): generalized cycle, ", self.mu, self.nu)?;
        match &self.entrance {
            Some(e) => write!(f, "entrance {e}")?,
            None if self.has_entrance => write!(f, "has entrance")?,
            None => write!(f, "no entrance")?,
        }
        if self.truncated {
            write!(f, " (truncated verdict)")?;
        }
        Ok(())
    }
}

impl FiniteCategory {
    pub fn from_file(file: &CategoryFile) -> Result<FiniteCategory, FiniteCatError> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        for id in file.units.iter().chain(file.elements.iter().map(|e| &e.id)) {
            if !index.contains_key(id) {
                index.insert(id.clone(), names.len());
                names.push(id.clone());
            } else if !file.units.contains(id) {
                return Err(FiniteCatError::DuplicateId(id.clone()));
            }
        }
        let look = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| FiniteCatError::UnknownId(id.to_string()))
        };
        let n = names.len();
        let mut range: Vec<usize> = (0..n).collect();
        let mut source: Vec<usize> = (0..n).collect();
        let mut unit = vec![false; n];
        for u in &file.units {
            unit[look(u)?] = true;
        }
        for e in &file.elements {
            let i = look(&e.id)?;
            range[i] = look(&e.range)?;
            source[i] = look(&e.source)?;
        }
        let mut table = HashMap::new();
        let mut conflicts = Vec::new();
        for (f, g, fg) in &file.compose {
            let key = (look(f)?, look(g)?);
            let val = look(fg)?;
            if let Some(old) = table.insert(key, val) {
                if old != val {
                    conflicts.push(key);
                }
            }
        }
        for i in 0..n {
            if range[i] < n && unit[range[i]] {
                table.entry((range[i], i)).or_insert(i);
            }
            if source[i] < n && unit[source[i]] {
                table.entry((i, source[i])).or_insert(i);
            }
        }
        Ok(FiniteCategory {
            names,
            range,
            source,
            unit,
            table,
            conflicts,
            truncated: file.truncated,
        })
    }

    pub fn from_json(text: &str) -> Result<FiniteCategory, FiniteCatError> {
        let file: CategoryFile =
            serde_json::from_str(text).map_err(|e| FiniteCatError::Parse(e.to_string()))?;
        FiniteCategory::from_file(&file)
    }

    pub fn to_file(&self) -> CategoryFile {
        let n = |i: usize| self.names[i].clone();
        let mut compose: Vec<(String, String, String)> = self
            .table
            .iter()
            .filter(|((f, g), _)| !self.unit[*f] && !self.unit[*g])
            .map(|(&(f, g), &h)| (n(f), n(g), n(h)))
            .collect();
        compose.sort();
        CategoryFile {
            units: (0..self.len()).filter(|&i| self.unit[i]).map(n).collect(),
            elements: (0..self.len())
                .filter(|&i| !self.unit[i])
                .map(|i| ElementSpec {
                    id: n(i),
                    range: n(self.range[i]),
                    source: n(self.source[i]),
                })
                .collect(),
            compose,
            truncated: self.truncated,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn compose(&self, f: usize, g: usize) -> Option<usize> {
        self.table.get(&(f, g)).copied()
    }

    /// μΛ.
    pub fn extensions(&self, mu: usize) -> BTreeSet<usize> {
        (0..self.len())
            .filter_map(|a| self.compose(mu, a))
            .collect()
    }

    /// μΛ ∩ νΛ.
    pub fn common_extensions(&self, mu: usize, nu: usize) -> BTreeSet<usize> {
        let a = self.extensions(mu);
        self.extensions(nu).intersection(&a).copied().collect()
    }

    fn meets(&self, mu: usize, nu: usize) -> bool {
        !self.common_extensions(mu, nu).is_empty()
    }

    /// Conditions (i)–(iii) for (μ, ν).
    pub fn is_generalized_cycle(&self, mu: usize, nu: usize) -> bool {
        mu != nu
            && self.source[mu] == self.source[nu]
            && self.range[mu] == self.range[nu]
            && self.extensions(mu).iter().all(|&eta| self.meets(nu, eta))
    }

    /// Every generalized cycle, with entrance decided by the symmetric check
    /// and a witness searched for directly.
    pub fn generalized_cycles(&self) -> Vec<CycleReport> {
        let mut out = Vec::new();
        for mu in 0..self.len() {
            for nu in 0..self.len() {
                if !self.is_generalized_cycle(mu, nu) {
                    continue;
                }
                let has_entrance = !self.is_generalized_cycle(nu, mu);
                let entrance = self
                    .extensions(nu)
                    .into_iter()
                    .find(|&eta| !self.meets(mu, eta))
                    .map(|e| self.names[e].clone());
                assert_eq!(has_entrance, entrance.is_some(), "entrance checks disagree");
                out.push(CycleReport {
                    mu: self.names[mu].clone(),
                    nu: self.names[nu].clone(),
                    has_entrance,
                    entrance,
                    truncated: self.truncated,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        let n = |i: usize| self.names[i].clone();
        let mut v = Vec::new();
        for u in (0..self.len()).filter(|&i| self.unit[i]) {
            if self.range[u] != u || self.source[u] != u {
                v.push(Violation::UnitEndpoints { unit: n(u) });
            }
        }
        for &(f, g) in &self.conflicts {
            v.push(Violation::ConflictingComposition { f: n(f), g: n(g) });
        }
        let mut pairs: Vec<_> = self.table.iter().map(|(&k, &h)| (k, h)).collect();
        pairs.sort();
        for &((f, g), fg) in &pairs {
            if self.source[f] != self.range[g] {
                v.push(Violation::NotComposable { f: n(f), g: n(g) });
            } else if self.range[fg] != self.range[f] || self.source[fg] != self.source[g] {
                v.push(Violation::WrongEndpoints {
                    f: n(f),
                    g: n(g),
                    fg: n(fg),
                });
            }
        }
        let all = 0..self.len();
        if !self.truncated {
            for f in all.clone() {
                for g in all.clone() {
                    if self.source[f] == self.range[g] && self.compose(f, g).is_none() {
                        v.push(Violation::MissingComposition { f: n(f), g: n(g) });
                    }
                }
            }
        }
        for f in all.clone() {
            let (r, s) = (self.range[f], self.source[f]);
            if self.compose(r, f) != Some(f) || self.compose(f, s) != Some(f) {
                v.push(Violation::IdentityLaw { f: n(f) });
            }
        }
        for &((f, g), fg) in &pairs {
            for h in all.clone() {
                let Some(gh) = self.compose(g, h) else {
                    continue;
                };
                let (Some(l), Some(r)) = (self.compose(fg, h), self.compose(f, gh)) else {
                    continue;
                };
                if l != r {
                    v.push(Violation::Associativity {
                        f: n(f),
                        g: n(g),
                        h: n(h),
                    });
                }
            }
        }
        for &((f, g), fg) in &pairs {
            for &((f2, h), fh) in &pairs {
                if f2 == f && fh == fg && h > g {
                    v.push(Violation::LeftCancellation {
                        f: n(f),
                        g: n(g),
                        h: n(h),
                    });
                }
            }
            for &((h, g2), hg) in &pairs {
                if g2 == g && hg == fg && h > f {
                    v.push(Violation::RightCancellation {
                        f: n(f),
                        g: n(g),
                        h: n(h),
                    });
                }
            }
        }
        for &((f, g), fg) in &pairs {
            if !self.unit[f] && self.unit[fg] {
                v.push(Violation::NonunitInverse { f: n(f), g: n(g) });
            }
        }
        ValidationReport {
            elements: self.len(),
            compositions: self.table.len(),
            truncated: self.truncated,
            violations: v,
        }
    }
}

fn spec(id: &str, r: &str, s: &str) -> ElementSpec {
    ElementSpec {
        id: id.into(),
        range: r.into(),
        source: s.into(),
    }
}

/// v₁ ⇇ v₂ ⇇ v₃ with α₁β₂ = β₁α₂ and α₁α₂ = β₁β₂.
pub fn example2() -> FiniteCategory {
    let c = |f: &str, g: &str, h: &str| (f.to_string(), g.to_string(), h.to_string());
    let file = CategoryFile {
        units: vec!["v1".into(), "v2".into(), "v3".into()],
        elements: vec![
            spec("α₁", "v1", "v2"),
            spec("β₁", "v1", "v2"),
            spec("α₂", "v2", "v3"),
            spec("β₂", "v2", "v3"),
            spec("α₁α₂", "v1", "v3"),
            spec("α₁β₂", "v1", "v3"),
        ],
        compose: vec![
            c("α₁", "α₂", "α₁α₂"),
            c("β₁", "β₂", "α₁α₂"),
            c("α₁", "β₂", "α₁β₂"),
            c("β₁", "α₂", "α₁β₂"),
        ],
        truncated: false,
    };
    FiniteCategory::from_file(&file).expect("well-formed")
}

pub fn builtin(name: &str) -> Option<FiniteCategory> {
    match name {
        "example2" => Some(example2()),
        _ => None,
    }
}

/// Paths of Λ(k) of length ≤ `max_len` among v₁..v_`vertices`, with
/// compositions longer than `max_len` left out.
pub fn truncation(k: &KSequence, max_len: u32, vertices: u32) -> FiniteCategory {
    let mut paths: Vec<Path> = Vec::new();
    for r in 1..=vertices {
        let reach = max_len.min(vertices - r);
        paths.extend(Path::all_up_to(r, reach, k));
    }
    let name = |p: &Path| p.to_string();
    let units = (1..=vertices).map(|v| name(&Path::unit(v))).collect();
    let elements = paths
        .iter()
        .filter(|p| !p.is_unit())
        .map(|p| {
            spec(
                &name(p),
                &name(&Path::unit(p.range())),
                &name(&Path::unit(p.source())),
            )
        })
        .collect();
    let mut compose = Vec::new();
    for f in paths.iter().filter(|p| !p.is_unit()) {
        for g in paths.iter().filter(|p| !p.is_unit()) {
            if f.source() == g.range() && f.len() + g.len() <= max_len {
                let fg = f.compose(g).expect("composable");
                compose.push((name(f), name(g), name(&fg)));
            }
        }
    }
    FiniteCategory::from_file(&CategoryFile {
        units,
        elements,
        compose,
        truncated: true,
    })
    .expect("paths have distinct normal forms")
}
