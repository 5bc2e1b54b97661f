//! Grammatical classification: syntax axioms, the induced context-free
//! grammar, an Earley parser and bounded ambiguity evidence.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::kernel::{match_syms, Expr, FormalSystem, Sym};
use crate::treesys::SyntaxTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("not weakly grammatical: no syntax axiom covers {}", .0.join(", "))]
    NotWeaklyGrammatical(Vec<String>),
    #[error("syn: {0}")]
    BadSyn(String),
}

/// `syn : TC → VT`, identity on `VT`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynMap {
    map: BTreeMap<Sym, Sym>,
}

impl SynMap {
    /// Checks that `pairs` together with the identity on `VT` is a total map
    /// `TC → VT`.
    pub fn new(fs: &FormalSystem, pairs: &[(Sym, Sym)]) -> Result<Self, GrammarError> {
        let vt = fs.var_typecodes();
        let name = |s: Sym| fs.symbols.name(s).to_string();
        let mut map: BTreeMap<Sym, Sym> = vt.iter().map(|&c| (c, c)).collect();
        for &(c, d) in pairs {
            if !vt.contains(&d) {
                return Err(GrammarError::BadSyn(format!("`{}` is not a variable typecode", name(d))));
            }
            if vt.contains(&c) && c != d {
                return Err(GrammarError::BadSyn(format!("syn({}) must be {}", name(c), name(c))));
            }
            if !fs.symbols.is_constant(c) {
                return Err(GrammarError::BadSyn(format!("`{}` is not a constant", name(c))));
            }
            map.insert(c, d);
        }
        for c in fs.typecodes() {
            if !map.contains_key(&c) {
                return Err(GrammarError::BadSyn(format!("no value for `{}`", name(c))));
            }
        }
        Ok(SynMap { map })
    }

    /// `pairs` by name, e.g. `[("|-", "wff")]`.
    pub fn from_names(fs: &FormalSystem, pairs: &[(&str, &str)]) -> Result<Self, GrammarError> {
        let look = |n: &str| fs.symbols.lookup(n).ok_or_else(|| GrammarError::BadSyn(format!("unknown symbol `{n}`")));
        let pairs = pairs.iter().map(|(a, b)| Ok((look(a)?, look(b)?))).collect::<Result<Vec<_>, _>>()?;
        Self::new(fs, &pairs)
    }

    /// With a single variable typecode every typecode maps to it.
    pub fn infer(fs: &FormalSystem) -> Result<Self, GrammarError> {
        let vt = fs.var_typecodes();
        if vt.len() != 1 {
            return Self::new(fs, &[]);
        }
        let only = *vt.iter().next().expect("one");
        let pairs: Vec<(Sym, Sym)> = fs.typecodes().into_iter().map(|c| (c, only)).collect();
        Self::new(fs, &pairs)
    }

    /// `syn(c)`; typecodes outside `TC` map to themselves.
    pub fn get(&self, c: Sym) -> Sym {
        self.map.get(&c).copied().unwrap_or(c)
    }

    /// `syn(e)`: replace the head.
    pub fn apply(&self, e: &Expr) -> Expr {
        e.with_typecode(self.get(e.typecode()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, Sym)> + '_ {
        self.map.iter().map(|(a, b)| (*a, *b))
    }
}

/// `SA`: axioms `⟨∅,∅,A⟩` with `type(A) ∈ VT` and no repeated variable,
/// as assertion indices in declaration order.
pub fn syntax_axioms(fs: &FormalSystem) -> Vec<usize> {
    let vt = fs.var_typecodes();
    fs.axioms().filter(|(i, _)| syntax_axiom_in(fs, &vt, *i)).map(|(i, _)| i).collect()
}

/// Hypothesis-free, dv-free axiom of `VT` type whose variables are distinct.
pub fn is_syntax_axiom(fs: &FormalSystem, idx: usize) -> bool {
    syntax_axiom_in(fs, &fs.var_typecodes(), idx)
}

fn syntax_axiom_in(fs: &FormalSystem, vt: &BTreeSet<Sym>, idx: usize) -> bool {
    let a = fs.assertion(idx);
    let s = &a.stmt;
    if !a.is_axiom() || !s.dv.is_empty() || !s.hyps.is_empty() || !vt.contains(&s.concl.typecode()) {
        return false;
    }
    let mut seen = HashSet::new();
    s.concl.tail().iter().filter(|&&x| fs.symbols.is_variable(x)).all(|&x| seen.insert(x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakReport {
    pub ok: bool,
    /// `VT`-typed axioms with no covering syntax axiom.
    pub unmatched: Vec<usize>,
}

pub fn is_weakly_grammatical(fs: &FormalSystem) -> WeakReport {
    let vt = fs.var_typecodes();
    let sa = syntax_axioms(fs);
    let unmatched: Vec<usize> = fs
        .axioms()
        .filter(|(_, a)| vt.contains(&a.stmt.concl.typecode()))
        .filter(|(_, a)| {
            !sa.iter().any(|&s| {
                let pat = &fs.assertion(s).stmt.concl;
                !match_syms(&fs.symbols, pat.symbols(), a.stmt.concl.symbols()).is_empty()
            })
        })
        .map(|(i, _)| i)
        .collect();
    WeakReport { ok: unmatched.is_empty(), unmatched }
}

/// Grammar symbol. Keeping terminals and nonterminals in separate variants
/// disjointifies a `VT` constant that also occurs as a terminal.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GSym {
    T(Sym),
    N(Sym),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: Sym,
    pub rhs: Vec<GSym>,
    /// Source syntax axiom.
    pub axiom: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedCfg {
    pub terminals: BTreeSet<Sym>,
    pub nonterminals: BTreeSet<Sym>,
    pub productions: Vec<Production>,
    /// Variables act as preterminals of their typecode.
    pub leaves: BTreeMap<Sym, Sym>,
}

pub fn induce_cfg(fs: &FormalSystem) -> Result<InducedCfg, GrammarError> {
    let weak = is_weakly_grammatical(fs);
    if !weak.ok {
        let labels = weak.unmatched.iter().map(|&i| fs.assertion(i).label.clone()).collect();
        return Err(GrammarError::NotWeaklyGrammatical(labels));
    }
    let vt = fs.var_typecodes();
    let syms = &fs.symbols;
    let productions = syntax_axioms(fs)
        .into_iter()
        .map(|i| {
            let concl = &fs.assertion(i).stmt.concl;
            let rhs = concl
                .tail()
                .iter()
                .map(|&s| match syms.type_of(s) {
                    Some(tc) => GSym::N(tc),
                    None => GSym::T(s),
                })
                .collect();
            Production { lhs: concl.typecode(), rhs, axiom: i }
        })
        .collect();
    Ok(InducedCfg {
        terminals: syms.constants().filter(|c| !vt.contains(c)).collect(),
        nonterminals: vt,
        productions,
        leaves: syms.variables().map(|v| (v, syms.type_of(v).expect("variable"))).collect(),
    })
}

impl InducedCfg {
    fn nullable(&self) -> HashSet<Sym> {
        let mut out = HashSet::new();
        loop {
            let before = out.len();
            for p in &self.productions {
                if p.rhs.iter().all(|g| matches!(g, GSym::N(n) if out.contains(n))) {
                    out.insert(p.lhs);
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Earley recognition plus bounded tree extraction

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
struct Item {
    prod: usize,
    dot: usize,
    start: usize,
}

struct Chart<'a> {
    cfg: &'a InducedCfg,
    tokens: &'a [Sym],
    /// `(nonterminal, start, end)` spans that some production completes,
    /// variable leaves included.
    complete: HashSet<(Sym, usize, usize)>,
    by_lhs: HashMap<Sym, Vec<usize>>,
}

impl<'a> Chart<'a> {
    fn build(cfg: &'a InducedCfg, tokens: &'a [Sym]) -> Self {
        let nullable = cfg.nullable();
        let mut by_lhs: HashMap<Sym, Vec<usize>> = HashMap::new();
        for (i, p) in cfg.productions.iter().enumerate() {
            by_lhs.entry(p.lhs).or_default().push(i);
        }
        let n = tokens.len();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let mut complete = HashSet::new();
        let add = |sets: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, k: usize, it: Item| {
            if seen[k].insert(it) {
                sets[k].push(it);
            }
        };
        // seed every nonterminal: callers ask for an arbitrary start symbol
        for (i, _) in cfg.productions.iter().enumerate() {
            add(&mut sets, &mut seen, 0, Item { prod: i, dot: 0, start: 0 });
        }
        for k in 0..=n {
            // variable leaf at k completes its typecode over [k, k+1]
            let mut j = 0;
            while j < sets[k].len() {
                let it = sets[k][j];
                j += 1;
                let p = &cfg.productions[it.prod];
                match p.rhs.get(it.dot) {
                    None => {
                        complete.insert((p.lhs, it.start, k));
                        let waiting: Vec<Item> = sets[it.start]
                            .iter()
                            .filter(|w| cfg.productions[w.prod].rhs.get(w.dot) == Some(&GSym::N(p.lhs)))
                            .copied()
                            .collect();
                        for w in waiting {
                            add(&mut sets, &mut seen, k, Item { dot: w.dot + 1, ..w });
                        }
                    }
                    Some(GSym::N(b)) => {
                        for &q in by_lhs.get(b).map(|v| v.as_slice()).unwrap_or(&[]) {
                            add(&mut sets, &mut seen, k, Item { prod: q, dot: 0, start: k });
                        }
                        if nullable.contains(b) {
                            add(&mut sets, &mut seen, k, Item { dot: it.dot + 1, ..it });
                        }
                        if k < n && cfg.leaves.get(&tokens[k]) == Some(b) {
                            complete.insert((*b, k, k + 1));
                            add(&mut sets, &mut seen, k + 1, Item { dot: it.dot + 1, ..it });
                        }
                    }
                    Some(GSym::T(t)) => {
                        if k < n && tokens[k] == *t {
                            add(&mut sets, &mut seen, k + 1, Item { dot: it.dot + 1, ..it });
                        }
                    }
                }
            }
        }
        // a lone variable token is a complete parse of its typecode
        if n == 1 {
            if let Some(&tc) = cfg.leaves.get(&tokens[0]) {
                complete.insert((tc, 0, 1));
            }
        }
        Chart { cfg, tokens, complete, by_lhs }
    }

    /// Up to `limit` distinct trees for nonterminal `a` over `[i, j)`.
    fn trees(
        &self,
        a: Sym,
        i: usize,
        j: usize,
        limit: usize,
        active: &mut Vec<(Sym, usize, usize)>,
    ) -> Vec<SyntaxTree> {
        let mut out = Vec::new();
        if limit == 0 || !self.complete.contains(&(a, i, j)) || active.contains(&(a, i, j)) {
            return out;
        }
        if j == i + 1 && self.cfg.leaves.get(&self.tokens[i]) == Some(&a) {
            out.push(SyntaxTree::Var(self.tokens[i]));
        }
        active.push((a, i, j));
        for &p in self.by_lhs.get(&a).map(|v| v.as_slice()).unwrap_or(&[]) {
            if out.len() >= limit {
                break;
            }
            let prod = &self.cfg.productions[p];
            let mut partial = Vec::new();
            self.seq(&prod.rhs, i, j, limit - out.len(), active, &mut partial, &mut |children| {
                out.push(SyntaxTree::Node { axiom: prod.axiom, children });
            });
        }
        active.pop();
        out.truncate(limit);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn seq(
        &self,
        rhs: &[GSym],
        pos: usize,
        end: usize,
        limit: usize,
        active: &mut Vec<(Sym, usize, usize)>,
        partial: &mut Vec<SyntaxTree>,
        emit: &mut dyn FnMut(Vec<SyntaxTree>),
    ) -> usize {
        let Some((first, rest)) = rhs.split_first() else {
            if pos == end {
                emit(partial.clone());
                return 1;
            }
            return 0;
        };
        let mut made = 0;
        match *first {
            GSym::T(t) => {
                if pos < end && self.tokens[pos] == t {
                    made += self.seq(rest, pos + 1, end, limit, active, partial, emit);
                }
            }
            GSym::N(b) => {
                // terminals still required bound how far `b` may reach
                let min_rest = rest.iter().filter(|g| matches!(g, GSym::T(_))).count();
                for mid in pos..=end.saturating_sub(min_rest) {
                    if made >= limit {
                        break;
                    }
                    for t in self.trees(b, pos, mid, limit - made, active) {
                        partial.push(t);
                        made += self.seq(rest, mid, end, limit - made, active, partial, emit);
                        partial.pop();
                        if made >= limit {
                            break;
                        }
                    }
                }
            }
        }
        made
    }
}

/// Up to `max_parses` syntax trees of `syn(e)` as nonterminal
/// `syn(type(e))`; empty when unparseable.
pub fn parse_expression(cfg: &InducedCfg, syn: &SynMap, e: &Expr, max_parses: usize) -> Vec<SyntaxTree> {
    let goal = syn.get(e.typecode());
    parse_tail(cfg, goal, e.tail(), max_parses)
}

pub fn parse_tail(cfg: &InducedCfg, goal: Sym, tokens: &[Sym], max_parses: usize) -> Vec<SyntaxTree> {
    let chart = Chart::build(cfg, tokens);
    chart.trees(goal, 0, tokens.len(), max_parses, &mut Vec::new())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unparseable {
    pub label: String,
    /// Index into the hypotheses, `None` for the conclusion.
    pub hyp: Option<usize>,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarReport {
    pub weakly_grammatical: bool,
    pub grammatical: bool,
    pub unparseable: Vec<Unparseable>,
    /// `VT`-typed axioms outside `SA`. Their presence means CFG parsing may
    /// under-approximate provability of `⟨∅,∅,syn(e)⟩`.
    pub non_syntax_vt_axioms: Vec<usize>,
}

pub fn is_grammatical(fs: &FormalSystem, syn: &SynMap) -> Result<GrammarReport, GrammarError> {
    let cfg = induce_cfg(fs)?;
    let sa = syntax_axioms(fs);
    let vt = fs.var_typecodes();
    let mut unparseable = Vec::new();
    for (_, a) in fs.axioms() {
        let exprs = a.stmt.hyps.iter().enumerate().map(|(i, h)| (Some(i), h));
        for (hyp, e) in exprs.chain(std::iter::once((None, &a.stmt.concl))) {
            if parse_expression(&cfg, syn, e, 1).is_empty() {
                unparseable.push(Unparseable { label: a.label.clone(), hyp, expr: e.clone() });
            }
        }
    }
    let non_syntax_vt_axioms =
        fs.axioms().filter(|(i, a)| !sa.contains(i) && vt.contains(&a.stmt.concl.typecode())).map(|(i, _)| i).collect();
    Ok(GrammarReport {
        weakly_grammatical: true,
        grammatical: unparseable.is_empty(),
        unparseable,
        non_syntax_vt_axioms,
    })
}

// ---------------------------------------------------------------------------
// bounded ambiguity evidence

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguityWitness {
    pub nonterminal: Sym,
    pub tokens: Vec<Sym>,
    pub trees: [SyntaxTree; 2],
    /// `true` when found in the corpus, `false` when generated.
    pub from_corpus: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguityReport {
    pub max_len: usize,
    pub witnesses: Vec<AmbiguityWitness>,
    /// Derivation trees enumerated.
    pub explored: usize,
}

impl AmbiguityReport {
    pub fn ambiguous(&self) -> bool {
        !self.witnesses.is_empty()
    }

    pub fn verdict(&self) -> String {
        if self.ambiguous() {
            "ambiguous".to_string()
        } else {
            format!("no ambiguity found up to length {}", self.max_len)
        }
    }
}

/// Corpus expressions with two parses, plus every pair of distinct
/// derivation trees (variable leaves drawn from one representative variable
/// per typecode) sharing a yield of at most `max_len` tokens. Trees are
/// limited to `2·max_len + 1` nodes so ε-cycles stay finite.
pub fn ambiguity_scan(cfg: &InducedCfg, syn: &SynMap, corpus: &[Expr], max_len: usize) -> AmbiguityReport {
    let mut witnesses = Vec::new();
    for e in corpus {
        let t = parse_expression(cfg, syn, e, 2);
        if let [a, b] = t.as_slice() {
            witnesses.push(AmbiguityWitness {
                nonterminal: syn.get(e.typecode()),
                tokens: e.tail().to_vec(),
                trees: [a.clone(), b.clone()],
                from_corpus: true,
            });
        }
    }

    let mut reps: BTreeMap<Sym, Sym> = BTreeMap::new();
    for (&v, &tc) in &cfg.leaves {
        reps.entry(tc).or_insert(v);
    }
    let max_nodes = 2 * max_len + 1;
    // Trees live in an arena as (production, child ids); each tree is
    // generated exactly once, so two ids with one yield are two parses.
    let mut arena: Vec<GenTree> = Vec::new();
    let mut fresh: Vec<(Sym, usize)> = Vec::new();
    // by_size[n][nt] = ids of trees with exactly n nodes
    let mut by_size: Vec<BTreeMap<Sym, Vec<usize>>> = vec![BTreeMap::new(); max_nodes + 1];
    for (&tc, &v) in &reps {
        if max_nodes >= 1 && max_len >= 1 {
            arena.push(GenTree { node: Err(v), kids: vec![], yield_: vec![v] });
            fresh.push((tc, arena.len() - 1));
        }
    }
    let mut explored = 0;
    let mut first: HashMap<(Sym, Vec<Sym>), usize> = HashMap::new();
    let mut generated = Vec::new();
    for size in 1..=max_nodes {
        for (pi, p) in cfg.productions.iter().enumerate() {
            let terms = p.rhs.iter().filter(|g| matches!(g, GSym::T(_))).count();
            if terms > max_len {
                continue;
            }
            // split size-1 nodes among the nonterminal children
            let mut acc = Vec::new();
            let mut gen = Combine { by_size: &by_size, arena: &arena, rhs: &p.rhs, max_len, out: &mut acc };
            gen.run(0, size - 1, &mut Vec::new(), terms);
            for kids in acc {
                let mut y = Vec::new();
                let mut it = kids.iter();
                for g in &p.rhs {
                    match g {
                        GSym::T(t) => y.push(*t),
                        GSym::N(_) => y.extend_from_slice(&arena[*it.next().expect("child")].yield_),
                    }
                }
                arena.push(GenTree { node: Ok(pi), kids, yield_: y });
                fresh.push((p.lhs, arena.len() - 1));
            }
        }
        // A tree with a non-first subtree implies a witness already, so
        // only the first tree per (nonterminal, yield) is built upon.
        for (nt, id) in std::mem::take(&mut fresh) {
            explored += 1;
            match first.entry((nt, arena[id].yield_.clone())) {
                Entry::Occupied(prev) => {
                    if generated.len() < 5 {
                        generated.push(AmbiguityWitness {
                            nonterminal: nt,
                            tokens: arena[id].yield_.clone(),
                            trees: [build(cfg, &arena, *prev.get()), build(cfg, &arena, id)],
                            from_corpus: false,
                        });
                    }
                }
                Entry::Vacant(slot) => {
                    slot.insert(id);
                    by_size[size].entry(nt).or_default().push(id);
                }
            }
        }
    }
    witnesses.extend(generated);
    AmbiguityReport { max_len, witnesses, explored }
}

struct GenTree {
    /// Production index, or the leaf variable.
    node: Result<usize, Sym>,
    kids: Vec<usize>,
    yield_: Vec<Sym>,
}

fn build(cfg: &InducedCfg, arena: &[GenTree], id: usize) -> SyntaxTree {
    let it = &arena[id];
    match it.node {
        Err(v) => SyntaxTree::Var(v),
        Ok(p) => SyntaxTree::Node {
            axiom: cfg.productions[p].axiom,
            children: it.kids.iter().map(|&k| build(cfg, arena, k)).collect(),
        },
    }
}

struct Combine<'a> {
    by_size: &'a [BTreeMap<Sym, Vec<usize>>],
    arena: &'a [GenTree],
    rhs: &'a [GSym],
    max_len: usize,
    out: &'a mut Vec<Vec<usize>>,
}

impl Combine<'_> {
    fn run(&mut self, k: usize, budget: usize, cur: &mut Vec<usize>, len: usize) {
        if k == self.rhs.len() {
            if budget == 0 {
                self.out.push(cur.clone());
            }
            return;
        }
        let GSym::N(nt) = self.rhs[k] else {
            return self.run(k + 1, budget, cur, len);
        };
        for s in 1..=budget {
            let Some(list) = self.by_size[s].get(&nt) else { continue };
            for &id in list {
                let l = len + self.arena[id].yield_.len();
                if l > self.max_len {
                    continue;
                }
                cur.push(id);
                self.run(k + 1, budget - s, cur, l);
                cur.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests;
