//! Finite posets with brute-force meanings for directedness, directed
//! completeness, Scott continuity, way-below, compactness and atoms.
//!
//! A finite directed subset always contains its own maximum (induct on the
//! size, bounding pairs inside the subset), so every finite poset is a dcpo,
//! every monotone map between finite posets is Scott-continuous, and
//! way-below coincides with the order. The exhaustive checks below are the
//! oracles confirming those collapses.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Largest carrier enumerated over all subsets (`2^16` subsets).
pub const MAX_EXHAUSTIVE: usize = 16;

/// Largest carrier whose triples the sampled dcpo check enumerates.
pub const MAX_TRIPLE_SCAN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("`{0}` and `{1}` are mutually below each other")]
    NotAntisymmetric(String, String),
    #[error("relation is not {0}")]
    NotPartialOrder(&'static str),
    #[error("subset must be non-empty")]
    EmptySubset,
    #[error("{size} elements exceed the exhaustive limit of {MAX_EXHAUSTIVE}")]
    TooLarge { size: usize },
    #[error("map is not monotone: {x} ≤ {y} but f({x}) ≰ f({y})")]
    NotMonotone { x: String, y: String },
    #[error("map table: {0}")]
    BadTable(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, OrderError>;

/// Fixed-width bitset over element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    pub fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut b = Self::empty(n);
        b.0[0] = mask;
        b
    }

    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn and(&self, other: &Self) -> Self {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    pub fn or(&self, other: &Self) -> Self {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| k * 64 + b)
        })
    }
}

/// A finite partial order on named elements, kept sorted by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePoset {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    leq: Vec<Vec<bool>>,
    up: Vec<Bits>,
    down: Vec<Bits>,
}

impl FinitePoset {
    /// Builds the reflexive-transitive closure of `pairs`.
    pub fn new<S: AsRef<str>>(elements: &[S], pairs: &[(S, S)]) -> Result<Self> {
        let mut names: Vec<String> = elements.iter().map(|s| s.as_ref().to_string()).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(OrderError::DuplicateElement(w[0].clone()));
        }
        let index: BTreeMap<String, usize> = names.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in pairs {
            let lookup = |s: &S| {
                index
                    .get(s.as_ref())
                    .copied()
                    .ok_or_else(|| OrderError::UnknownElement(s.as_ref().to_string()))
            };
            leq[lookup(a)?][lookup(b)?] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(OrderError::NotAntisymmetric(names[i].clone(), names[j].clone()));
                }
            }
        }
        Ok(Self::assemble(names, index, leq))
    }

    /// Takes a relation matrix as given, checking the partial-order axioms.
    pub fn from_matrix(names: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = names.len();
        if leq.len() != n || leq.iter().any(|r| r.len() != n) {
            return Err(OrderError::NotPartialOrder("square"));
        }
        if (0..n).any(|i| !leq[i][i]) {
            return Err(OrderError::NotPartialOrder("reflexive"));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(OrderError::NotAntisymmetric(names[i].clone(), names[j].clone()));
                }
                for k in 0..n {
                    if leq[i][j] && leq[j][k] && !leq[i][k] {
                        return Err(OrderError::NotPartialOrder("transitive"));
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        let sorted: Vec<String> = order.iter().map(|&i| names[i].clone()).collect();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(OrderError::DuplicateElement(w[0].clone()));
        }
        let rel = order
            .iter()
            .map(|&i| order.iter().map(|&j| leq[i][j]).collect())
            .collect();
        let index = sorted.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self::assemble(sorted, index, rel))
    }

    fn assemble(names: Vec<String>, index: BTreeMap<String, usize>, leq: Vec<Vec<bool>>) -> Self {
        let n = names.len();
        let mut up = vec![Bits::empty(n); n];
        let mut down = vec![Bits::empty(n); n];
        for i in 0..n {
            for j in 0..n {
                if leq[i][j] {
                    up[i].insert(j);
                    down[j].insert(i);
                }
            }
        }
        Self {
            names,
            index,
            leq,
            up,
            down,
        }
    }

    /// `0 < 1 < … < n−1`, named by zero-padded numbers so the names sort.
    pub fn chain(n: usize) -> Self {
        let names: Vec<String> = (0..n).map(|i| format!("{i:03}")).collect();
        let leq = (0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect();
        Self::from_matrix(names, leq).expect("chain")
    }

    pub fn antichain<S: AsRef<str>>(elements: &[S]) -> Result<Self> {
        Self::new(elements, &[])
    }

    /// `bot < a, b < top`.
    pub fn diamond() -> Self {
        Self::new(
            &["a", "b", "bot", "top"],
            &[("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")],
        )
        .expect("diamond")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| OrderError::UnknownElement(name.to_string()))
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    pub fn leq_named(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.leq(self.index_of(a)?, self.index_of(b)?))
    }

    /// `↑x`.
    pub fn up(&self, i: usize) -> &Bits {
        &self.up[i]
    }

    /// `↓x`.
    pub fn down(&self, i: usize) -> &Bits {
        &self.down[i]
    }

    /// All related pairs, sorted; the canonical form used for equality.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.leq[i][j] {
                    out.push((self.names[i].clone(), self.names[j].clone()));
                }
            }
        }
        out
    }

    pub fn bottom(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.up[i].len() == self.len())
    }

    pub fn top(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.down[i].len() == self.len())
    }

    pub fn subset_of(&self, names: &[&str]) -> Result<Bits> {
        let mut b = Bits::empty(self.len());
        for s in names {
            b.insert(self.index_of(s)?);
        }
        Ok(b)
    }

    pub fn upper_bounds(&self, subset: &Bits) -> Bits {
        subset.iter().fold(Bits::full(self.len()), |acc, x| acc.and(&self.up[x]))
    }

    /// Least element of a set, if any.
    pub fn least(&self, set: &Bits) -> Option<usize> {
        set.iter().find(|&u| set.is_subset(&self.up[u]))
    }

    pub fn greatest(&self, set: &Bits) -> Option<usize> {
        set.iter().find(|&u| set.is_subset(&self.down[u]))
    }

    /// `⋁ subset`, if it exists.
    pub fn lub(&self, subset: &Bits) -> Option<usize> {
        self.least(&self.upper_bounds(subset))
    }

    /// Every pair in `subset` has an upper bound inside `subset`.
    pub fn is_directed_bits(&self, subset: &Bits) -> bool {
        let members: Vec<usize> = subset.iter().collect();
        !members.is_empty()
            && members.iter().enumerate().all(|(k, &x)| {
                members[k + 1..]
                    .iter()
                    .all(|&y| !self.up[x].and(&self.up[y]).and(subset).is_empty())
            })
    }

    pub fn is_directed(&self, subset: &[&str]) -> Result<bool> {
        if subset.is_empty() {
            return Err(OrderError::EmptySubset);
        }
        Ok(self.is_directed_bits(&self.subset_of(subset)?))
    }

    pub fn is_chain_bits(&self, subset: &Bits) -> bool {
        let members: Vec<usize> = subset.iter().collect();
        members
            .iter()
            .enumerate()
            .all(|(k, &x)| members[k + 1..].iter().all(|&y| self.leq(x, y) || self.leq(y, x)))
    }

    /// All non-empty subsets, as bitsets, for carriers of at most 16 elements.
    pub fn nonempty_subsets(&self) -> Result<impl Iterator<Item = Bits> + '_> {
        let n = self.len();
        if n > MAX_EXHAUSTIVE {
            return Err(OrderError::TooLarge { size: n });
        }
        Ok((1u64..(1u64 << n)).map(move |m| Bits::from_mask(n, m)))
    }

    pub fn directed_subsets(&self) -> Result<impl Iterator<Item = Bits> + '_> {
        Ok(self.nonempty_subsets()?.filter(|s| self.is_directed_bits(s)))
    }

    /// Exhaustive for up to 16 elements, sampled beyond that.
    pub fn is_dcpo(&self) -> bool {
        self.dcpo_report(DcpoStrategy::Auto).dcpo
    }

    pub fn dcpo_report(&self, strategy: DcpoStrategy) -> DcpoReport {
        let strategy = match strategy {
            DcpoStrategy::Auto if self.len() <= MAX_EXHAUSTIVE => DcpoStrategy::Exhaustive,
            DcpoStrategy::Auto => DcpoStrategy::Sampled { seed: 0, samples: 4096 },
            s => s,
        };
        let mut checked = 0;
        let mut check = |s: &Bits| -> Option<Bits> {
            if self.is_directed_bits(s) {
                checked += 1;
                if self.lub(s).is_none() {
                    return Some(s.clone());
                }
            }
            None
        };
        let witness = match strategy {
            DcpoStrategy::Exhaustive => match self.nonempty_subsets() {
                Ok(mut subsets) => subsets.find_map(|s| check(&s)),
                Err(_) => return self.dcpo_report(DcpoStrategy::Sampled { seed: 0, samples: 4096 }),
            },
            DcpoStrategy::Sampled { seed, samples } => {
                let mut rng = crate::random::seeded(seed);
                let n = self.len();
                let mut witness = None;
                // Every pair and (up to 64 elements) every triple, then random
                // subsets of principal downsets and small random subsets.
                let triples = n <= MAX_TRIPLE_SCAN;
                'outer: for x in 0..n {
                    for y in x..n {
                        for z in (y..n).take(if triples { n } else { 1 }) {
                            let mut s = Bits::empty(n);
                            s.insert(x);
                            s.insert(y);
                            s.insert(z);
                            if let Some(w) = check(&s) {
                                witness = Some(w);
                                break 'outer;
                            }
                        }
                    }
                }
                if witness.is_none() && n > 0 {
                    for k in 0..samples {
                        let mut s = Bits::empty(n);
                        if k % 2 == 0 {
                            let top = rng.gen_range(0..n);
                            s.insert(top);
                            for d in self.down[top].iter() {
                                if rng.gen_bool(0.5) {
                                    s.insert(d);
                                }
                            }
                        } else {
                            for _ in 0..rng.gen_range(2..=6) {
                                s.insert(rng.gen_range(0..n));
                            }
                        }
                        if let Some(w) = check(&s) {
                            witness = Some(w);
                            break;
                        }
                    }
                }
                witness
            }
            DcpoStrategy::Auto => unreachable!("resolved above"),
        };
        DcpoReport {
            dcpo: witness.is_none(),
            strategy,
            directed_checked: checked,
            witness,
        }
    }

    /// Every directed subset has a maximum: the finite reduction of `is_dcpo`.
    pub fn directed_subsets_have_maxima(&self) -> Result<bool> {
        Ok(self.directed_subsets()?.all(|s| self.greatest(&s).is_some()))
    }

    /// Every chain has a least upper bound.
    pub fn is_chain_complete(&self) -> Result<bool> {
        Ok(self
            .nonempty_subsets()?
            .filter(|s| self.is_chain_bits(s))
            .all(|s| self.lub(&s).is_some()))
    }

    /// Every subset with an upper bound has a least upper bound.
    pub fn is_bounded_complete(&self) -> Result<bool> {
        Ok(self
            .nonempty_subsets()?
            .filter(|s| !self.upper_bounds(s).is_empty())
            .all(|s| self.lub(&s).is_some()))
    }

    /// Way-below pairs, compact elements and atoms by the brute-force definition.
    pub fn way_below(&self) -> Result<WayBelow> {
        let n = self.len();
        // wb[y] = {x | x ≪ y}; start full and cut by every directed Δ.
        let mut wb = vec![Bits::full(n); n];
        for d in self.directed_subsets()? {
            let Some(l) = self.lub(&d) else { continue };
            let below_some = d.iter().fold(Bits::empty(n), |acc, e| acc.or(&self.down[e]));
            for y in self.down[l].iter() {
                wb[y] = wb[y].and(&below_some);
            }
        }
        let mut pairs = Vec::new();
        for (y, xs) in wb.iter().enumerate() {
            for x in xs.iter() {
                pairs.push((self.names[x].clone(), self.names[y].clone()));
            }
        }
        pairs.sort();
        let compact = (0..n).filter(|&x| wb[x].contains(x)).map(|x| self.names[x].clone()).collect();
        Ok(WayBelow {
            pairs,
            compact,
            atoms: self.atoms(),
        })
    }

    /// Elements covering the bottom; empty without a bottom.
    pub fn atoms(&self) -> Vec<String> {
        let Some(bot) = self.bottom() else {
            return Vec::new();
        };
        (0..self.len())
            .filter(|&a| a != bot && self.down[a].len() == 2)
            .map(|a| self.names[a].clone())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.names {
            s.push_str(&format!("elem {e}\n"));
        }
        for (a, b) in self.covers() {
            s.push_str(&format!("leq {} {}\n", self.names[a], self.names[b]));
        }
        s
    }

    /// Covering pairs `a ⋖ b` (the Hasse diagram).
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.leq(a, b) && !(0..n).any(|c| c != a && c != b && self.leq(a, c) && self.leq(c, b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut elems = Vec::new();
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let words: Vec<&str> = l.split_whitespace().collect();
            match words.as_slice() {
                ["elem", a] => elems.push(a.to_string()),
                ["leq", a, b] => pairs.push((a.to_string(), b.to_string(), line)),
                _ => {
                    return Err(OrderError::Parse {
                        line,
                        msg: format!("expected `elem a` or `leq a b`, found `{l}`"),
                    })
                }
            }
        }
        for (a, b, line) in &pairs {
            for x in [a, b] {
                if !elems.contains(x) {
                    return Err(OrderError::Parse {
                        line: *line,
                        msg: format!("unknown element `{x}`"),
                    });
                }
            }
        }
        let plain: Vec<(String, String)> = pairs.into_iter().map(|(a, b, _)| (a, b)).collect();
        Self::new(&elems, &plain)
    }
}

impl fmt::Display for FinitePoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcpoStrategy {
    Auto,
    Exhaustive,
    /// All subsets of size ≤ 3 plus `samples` random subsets.
    Sampled { seed: u64, samples: usize },
}

#[derive(Clone, Debug)]
pub struct DcpoReport {
    pub dcpo: bool,
    pub strategy: DcpoStrategy,
    pub directed_checked: usize,
    /// A directed subset without a least upper bound.
    pub witness: Option<Bits>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WayBelow {
    /// Sorted `(x, y)` with `x ≪ y`.
    pub pairs: Vec<(String, String)>,
    pub compact: Vec<String>,
    pub atoms: Vec<String>,
}

/// A monotone map between finite posets, given by its table of indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneMap {
    source: FinitePoset,
    target: FinitePoset,
    table: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScottReport {
    pub continuous: bool,
    pub directed_checked: usize,
    /// A directed subset where `f(⋁Δ) ≠ ⋁f(Δ)`.
    pub witness: Option<Bits>,
}

impl MonotoneMap {
    pub fn new(source: FinitePoset, target: FinitePoset, table: Vec<usize>) -> Result<Self> {
        if table.len() != source.len() || table.iter().any(|&t| t >= target.len()) {
            return Err(OrderError::BadTable("table must send every source element into the target".into()));
        }
        let map = Self { source, target, table };
        if let Some((x, y)) = map.monotonicity_violation() {
            return Err(OrderError::NotMonotone {
                x: map.source.name(x).to_string(),
                y: map.source.name(y).to_string(),
            });
        }
        Ok(map)
    }

    pub fn from_names(source: FinitePoset, target: FinitePoset, table: &[(&str, &str)]) -> Result<Self> {
        let mut t = vec![usize::MAX; source.len()];
        for (a, b) in table {
            t[source.index_of(a)?] = target.index_of(b)?;
        }
        Self::new(source, target, t)
    }

    pub fn identity(p: &FinitePoset) -> Self {
        Self {
            source: p.clone(),
            target: p.clone(),
            table: (0..p.len()).collect(),
        }
    }

    pub fn constant(source: &FinitePoset, target: &FinitePoset, value: usize) -> Self {
        Self {
            source: source.clone(),
            target: target.clone(),
            table: vec![value; source.len()],
        }
    }

    pub fn source(&self) -> &FinitePoset {
        &self.source
    }

    pub fn target(&self) -> &FinitePoset {
        &self.target
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    fn monotonicity_violation(&self) -> Option<(usize, usize)> {
        let n = self.source.len();
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .find(|&(x, y)| self.source.leq(x, y) && !self.target.leq(self.table[x], self.table[y]))
    }

    fn image(&self, s: &Bits) -> Bits {
        let mut out = Bits::empty(self.target.len());
        for x in s.iter() {
            out.insert(self.table[x]);
        }
        out
    }

    /// Exhaustive check of `f(⋁Δ) = ⋁f(Δ)` over every directed `Δ`.
    pub fn scott_report(&self) -> Result<ScottReport> {
        let mut checked = 0;
        let mut witness = None;
        for d in self.source.directed_subsets()? {
            checked += 1;
            let preserved = match self.source.lub(&d) {
                Some(l) => {
                    let img = self.image(&d);
                    self.target.is_directed_bits(&img) && self.target.lub(&img) == Some(self.table[l])
                }
                None => true,
            };
            if !preserved {
                witness = Some(d);
                break;
            }
        }
        Ok(ScottReport {
            continuous: witness.is_none(),
            directed_checked: checked,
            witness,
        })
    }

    pub fn is_scott_continuous(&self) -> Result<bool> {
        Ok(self.scott_report()?.continuous)
    }
}

/// Checks monotonicity of a raw table, reporting the first violating pair.
pub fn check_monotone(source: &FinitePoset, target: &FinitePoset, table: &[usize]) -> Result<()> {
    MonotoneMap::new(source.clone(), target.clone(), table.to_vec()).map(|_| ())
}

/// Every monotone table `P → Q`. Backtracks in a linear extension of `P`.
pub fn monotone_tables(p: &FinitePoset, q: &FinitePoset) -> Vec<Vec<usize>> {
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| p.down(i).len());
    let mut out = Vec::new();
    let mut table = vec![usize::MAX; n];
    fn go(k: usize, order: &[usize], p: &FinitePoset, q: &FinitePoset, table: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == order.len() {
            out.push(table.clone());
            return;
        }
        let x = order[k];
        for v in 0..q.len() {
            let ok = order[..k].iter().all(|&y| !p.leq(y, x) || q.leq(table[y], v));
            if ok {
                table[x] = v;
                go(k + 1, order, p, q, table, out);
            }
        }
        table[x] = usize::MAX;
    }
    go(0, &order, p, q, &mut table, &mut out);
    out.sort();
    out
}

/// `[P → Q]` ordered pointwise. Elements are named by their tables, e.g.
/// `a,b,b` lists the images of the source elements in order.
pub fn function_poset(p: &FinitePoset, q: &FinitePoset) -> (FinitePoset, Vec<Vec<usize>>) {
    let tables = monotone_tables(p, q);
    let names: Vec<String> = tables
        .iter()
        .map(|t| t.iter().map(|&v| q.name(v)).collect::<Vec<_>>().join(","))
        .collect();
    let leq = tables
        .iter()
        .map(|f| {
            tables
                .iter()
                .map(|g| f.iter().zip(g).all(|(&a, &b)| q.leq(a, b)))
                .collect()
        })
        .collect();
    let poset = FinitePoset::from_matrix(names.clone(), leq).expect("pointwise order");
    // Reorder tables to match the sorted element names.
    let mut paired: Vec<(String, Vec<usize>)> = names.into_iter().zip(tables).collect();
    paired.sort();
    (poset, paired.into_iter().map(|(_, t)| t).collect())
}

/// All posets on `n` elements up to isomorphism (named `0..n`).
pub fn posets_up_to_iso(n: usize) -> Vec<FinitePoset> {
    assert!(n <= 6, "enumeration is exponential");
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let perms = permutations(n);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        // Strict relations compatible with the labelling 0 < 1 < … as a linear extension.
        let mut rel = vec![vec![false; n]; n];
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = true;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                rel[i][j] = true;
            }
        }
        let transitive = (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| !(rel[i][j] && rel[j][k]) || rel[i][k])));
        if !transitive {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut code = 0u64;
                for i in 0..n {
                    for j in 0..n {
                        if rel[p[i]][p[j]] {
                            code |= 1 << (i * n + j);
                        }
                    }
                }
                code
            })
            .min()
            .unwrap_or(0);
        if seen.insert(canon) {
            let names = (0..n).map(|i| i.to_string()).collect();
            out.push(FinitePoset::from_matrix(names, rel).expect("labelled order"));
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}
