//! A formal system as a model of itself: object variables, substitution as
//! evaluation, and bounded provability at the object level.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{induce_cfg, parse_expression, GrammarError, InducedCfg, SynMap};
use crate::ingest::Database;
use crate::kernel::{
    all_pairs, closure_enum, match_syms, vars_of, verify_proof, DvPair, DvSet, Expr, FormalSystem, KernelError,
    ProofStep, ProofTree, Statement, Substitution, Sym,
};
use crate::treesys::{enumerate_trees, expr_of};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelfModelError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("unknown assertion `{0}`")]
    UnknownLabel(String),
    #[error("`{0}` has hypotheses; only hypothesis-free statements are in scope")]
    HasHypotheses(String),
    #[error("no value for `{0}`")]
    MissingValue(String),
    #[error("`{var}` needs a `{expected}` value, got `{found}`")]
    TypeMismatch { var: String, expected: String, found: String },
    #[error("`{0}` is not a variable of the object system")]
    NotVariable(String),
    #[error("dv pair {{{0}, {1}}} collapsed onto `{2}`")]
    DvCollapsed(String, String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Theorem,
    /// A complete bounded search came up empty.
    RefutedByBound,
    Unknown,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Theorem => "theorem",
            Status::RefutedByBound => "refuted-by-bound",
            Status::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelfModelVerdict {
    pub status: Status,
    /// Axiom-only proof of the goal in the object system, re-verified.
    pub witness: Option<ProofTree>,
    /// Search steps spent.
    pub steps: usize,
}

impl SelfModelVerdict {
    /// Uses of non-syntax axioms in the witness.
    pub fn logical_steps(&self, os: &ObjectSystem) -> Option<usize> {
        let syntax = crate::grammar::syntax_axioms(&os.obj);
        self.witness.as_ref().map(|w| w.count_assertions(&|i| os.obj.assertion(i).is_axiom() && !syntax.contains(&i)))
    }
}

/// `⟨TC, VR′, Type′, Γ′⟩`: the base constants and assertions over an
/// extensible family of object variables named `<typecode><index>`.
#[derive(Clone, Debug)]
pub struct ObjectSystem {
    pub base: FormalSystem,
    pub obj: FormalSystem,
    pub syn: SynMap,
    object_vars: BTreeSet<Sym>,
    /// Non-syntax axioms and verified theorems, usable as search rules.
    lemmas: Vec<usize>,
    proofs: Vec<Option<ProofTree>>,
    cfg: Option<InducedCfg>,
}

impl ObjectSystem {
    pub fn new(db: &Database) -> Result<Self, SelfModelError> {
        let base = db.system.clone();
        let syn = SynMap::infer(&base)?;
        let syntax = crate::grammar::syntax_axioms(&base);
        let proofs = db.proof_trees();
        let lemmas = (0..base.assertions().len())
            .filter(|&i| {
                let a = base.assertion(i);
                if a.is_axiom() {
                    !syntax.contains(&i)
                } else {
                    proofs[i].is_some()
                }
            })
            .collect();
        Ok(ObjectSystem { obj: base.clone(), base, syn, object_vars: BTreeSet::new(), lemmas, proofs, cfg: None })
    }

    pub fn is_object_var(&self, v: Sym) -> bool {
        self.object_vars.contains(&v)
    }

    pub fn object_vars(&self) -> impl Iterator<Item = Sym> + '_ {
        self.object_vars.iter().copied()
    }

    /// The object variable `<tc><index>`, created on first use. Indices
    /// whose name is already taken by a base symbol are skipped.
    pub fn object_var(&mut self, tc: Sym, index: usize) -> Sym {
        let name = format!("{}{}", self.obj.symbols.name(tc), index);
        if let Some(v) = self.obj.symbols.lookup(&name) {
            if self.object_vars.contains(&v) {
                return v;
            }
            return self.object_var(tc, index + 1_000_000);
        }
        let tcname = self.obj.symbols.name(tc).to_string();
        let v = self.obj.add_variable(&name, &tcname).expect("fresh name");
        self.object_vars.insert(v);
        self.cfg = None;
        v
    }

    /// An object variable of type `tc` outside `avoid`.
    pub fn fresh_var(&mut self, tc: Sym, avoid: &BTreeSet<Sym>) -> Sym {
        (0..).map(|i| self.object_var(tc, i)).find(|v| !avoid.contains(v)).expect("unbounded")
    }

    /// Parses object-level text, creating `<typecode><index>` variables.
    pub fn parse(&mut self, text: &str) -> Result<Expr, SelfModelError> {
        let vts: Vec<Sym> = self.base.var_typecodes().into_iter().collect();
        for tok in text.split_whitespace() {
            if self.obj.symbols.lookup(tok).is_some() {
                continue;
            }
            for &tc in &vts {
                let prefix = self.obj.symbols.name(tc).to_string();
                if let Some(Ok(i)) = tok.strip_prefix(prefix.as_str()).map(str::parse::<usize>) {
                    self.object_var(tc, i);
                }
            }
        }
        Ok(self.obj.parse_expr(text)?)
    }

    fn cfg(&mut self) -> Result<InducedCfg, SelfModelError> {
        if self.cfg.is_none() {
            self.cfg = Some(induce_cfg(&self.obj)?);
        }
        Ok(self.cfg.clone().expect("just built"))
    }

    pub fn show(&self, e: &Expr) -> String {
        self.obj.display(e).to_string()
    }
}

/// `σ(A)` for a variable-to-variable `σ` keeping every dv pair apart; the
/// result carries all pairs of its variables.
pub fn object_instance(
    os: &ObjectSystem,
    label: &str,
    var_map: &BTreeMap<Sym, Sym>,
) -> Result<Statement, SelfModelError> {
    let a = os.base.by_label(label).map_err(|_| SelfModelError::UnknownLabel(label.into()))?;
    let syms = &os.obj.symbols;
    let mut sigma = Substitution::identity();
    for v in a.stmt.vars(&os.base.symbols) {
        let w = *var_map.get(&v).ok_or_else(|| SelfModelError::MissingValue(syms.name(v).into()))?;
        if !syms.is_variable(w) {
            return Err(SelfModelError::NotVariable(syms.name(w).into()));
        }
        let (want, got) = (syms.type_of(v), syms.type_of(w));
        if want != got {
            return Err(SelfModelError::TypeMismatch {
                var: syms.name(v).into(),
                expected: syms.name(want.expect("variable")).into(),
                found: syms.name(got.expect("variable")).into(),
            });
        }
        sigma.insert(v, vec![w]);
    }
    for p in &a.stmt.dv {
        let (x, y) = (sigma.image(&p.first())[0], sigma.image(&p.second())[0]);
        if x == y {
            return Err(SelfModelError::DvCollapsed(
                syms.name(p.first()).into(),
                syms.name(p.second()).into(),
                syms.name(x).into(),
            ));
        }
    }
    let hyps: Vec<Expr> = a.stmt.hyps.iter().map(|h| sigma.apply(h)).collect();
    let concl = sigma.apply(&a.stmt.concl);
    let mut vars = vars_of(syms, &concl);
    for h in &hyps {
        vars.extend(vars_of(syms, h));
    }
    Ok(Statement { dv: all_pairs(&vars), hyps, concl })
}

/// `η_μ(e)`: the substitution with `η_μ(vh_v) = μ(v)`.
pub fn self_eta(os: &ObjectSystem, mu: &BTreeMap<Sym, Expr>, e: &Expr) -> Result<Expr, SelfModelError> {
    let syms = &os.obj.symbols;
    let mut sigma = Substitution::identity();
    for v in vars_of(syms, e) {
        let x = mu.get(&v).ok_or_else(|| SelfModelError::MissingValue(syms.name(v).into()))?;
        let want = syms.type_of(v).expect("variable");
        if x.typecode() != want {
            return Err(SelfModelError::TypeMismatch {
                var: syms.name(v).into(),
                expected: syms.name(want).into(),
                found: syms.name(x.typecode()).into(),
            });
        }
        sigma.insert(v, x.tail().to_vec());
    }
    Ok(sigma.apply(e))
}

/// Every hypothesis is no longer than the conclusion under any
/// substitution, and uses no variable the conclusion lacks. Derivations
/// then never pass through longer expressions or new variables, so the
/// length-bounded closure is complete.
pub fn length_monotone(fs: &FormalSystem) -> bool {
    let syms = &fs.symbols;
    let profile = |e: &Expr| {
        let mut vars: BTreeMap<Sym, usize> = BTreeMap::new();
        let mut consts = 0;
        for &s in e.symbols() {
            if syms.is_variable(s) {
                *vars.entry(s).or_default() += 1;
            } else {
                consts += 1;
            }
        }
        (consts, vars)
    };
    fs.axioms().all(|(_, a)| {
        let (cc, cv) = profile(&a.stmt.concl);
        a.stmt.hyps.iter().all(|h| {
            let (hc, hv) = profile(h);
            hc <= cc && hv.iter().all(|(v, n)| cv.get(v).is_some_and(|m| m >= n))
        })
    })
}

struct Search<'a> {
    os: &'a ObjectSystem,
    cfg: &'a InducedCfg,
    pool: BTreeMap<Sym, Vec<Vec<Sym>>>,
    budget: usize,
    steps: usize,
    /// Goals known to fail at this depth or below.
    failed: HashMap<Expr, usize>,
    cut: bool,
}

struct OutOfBudget;

impl Search<'_> {
    fn tick(&mut self) -> Result<(), OutOfBudget> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    fn syntax_proof(&self, e: &Expr) -> Option<Vec<ProofStep>> {
        let trees = parse_expression(self.cfg, &self.os.syn, e, 1);
        trees.first().map(|t| t.to_steps(&self.os.obj))
    }

    fn prove(&mut self, g: &Expr, depth: usize) -> Result<Option<Vec<ProofStep>>, OutOfBudget> {
        self.tick()?;
        let syms = &self.os.obj.symbols;
        if self.os.obj.var_typecodes().contains(&g.typecode()) {
            return Ok(self.syntax_proof(g));
        }
        if depth == 0 {
            self.cut = true;
            return Ok(None);
        }
        if self.failed.get(g).is_some_and(|&d| d >= depth) {
            return Ok(None);
        }
        for &l in &self.os.lemmas.clone() {
            let a = self.os.obj.assertion(l);
            if a.stmt.concl.typecode() != g.typecode() {
                continue;
            }
            for sigma in match_syms(syms, a.stmt.concl.symbols(), g.symbols()) {
                self.tick()?;
                let unbound: Vec<Sym> = a.mand_vars.iter().copied().filter(|v| sigma.get(*v).is_none()).collect();
                let choices: Vec<Vec<Vec<Sym>>> = unbound
                    .iter()
                    .map(|v| self.pool.get(&syms.type_of(*v).expect("variable")).cloned().unwrap_or_default())
                    .collect();
                let mut idx = vec![0usize; unbound.len()];
                if choices.iter().any(Vec::is_empty) {
                    continue;
                }
                loop {
                    let mut s = sigma.clone();
                    for (k, v) in unbound.iter().enumerate() {
                        s.insert(*v, choices[k][idx[k]].clone());
                    }
                    if let Some(p) = self.apply(l, &s, depth)? {
                        return Ok(Some(p));
                    }
                    // odometer
                    let mut k = 0;
                    while k < idx.len() {
                        idx[k] += 1;
                        if idx[k] < choices[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == idx.len() {
                        break;
                    }
                }
            }
        }
        self.failed.insert(g.clone(), depth);
        Ok(None)
    }

    fn apply(&mut self, l: usize, s: &Substitution, depth: usize) -> Result<Option<Vec<ProofStep>>, OutOfBudget> {
        self.tick()?;
        let obj = &self.os.obj;
        let a = obj.assertion(l);
        // dv: images of each pair must share no variable
        for p in &a.stmt.dv {
            let x = vars_of_tail(obj, s.image(&p.first()));
            let y = vars_of_tail(obj, s.image(&p.second()));
            if !x.is_disjoint(&y) {
                return Ok(None);
            }
        }
        let mut steps = Vec::new();
        for &v in &a.mand_vars {
            match self.syntax_proof(&s.apply_var_hyp(&obj.symbols, v)) {
                Some(p) => steps.extend(p),
                None => return Ok(None),
            }
        }
        for h in &a.stmt.hyps {
            match self.prove(&s.apply(h), depth - 1)? {
                Some(p) => steps.extend(p),
                None => return Ok(None),
            }
        }
        steps.push(ProofStep::Assert(l));
        Ok(Some(steps))
    }
}

fn vars_of_tail(fs: &FormalSystem, tail: &[Sym]) -> BTreeSet<Sym> {
    tail.iter().copied().filter(|&s| fs.symbols.is_variable(s)).collect()
}

/// Subterm tails of `e`'s parse, by typecode, smallest first.
fn subterm_pool(os: &ObjectSystem, cfg: &InducedCfg, e: &Expr) -> BTreeMap<Sym, Vec<Vec<Sym>>> {
    let mut pool: BTreeMap<Sym, BTreeSet<(usize, Vec<Sym>)>> = BTreeMap::new();
    for t in parse_expression(cfg, &os.syn, e, 1) {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            if let Ok(x) = expr_of(&t, &os.obj) {
                pool.entry(x.typecode()).or_default().insert((x.tail().len(), x.tail().to_vec()));
            }
            if let crate::treesys::SyntaxTree::Node { children, .. } = t {
                stack.extend(children);
            }
        }
    }
    pool.into_iter().map(|(tc, s)| (tc, s.into_iter().map(|(_, t)| t).collect())).collect()
}

/// Is `e` a theorem `⟨DV′, ∅, e⟩` of the object system? Backward search
/// over axioms and verified theorems, iteratively deepened until `budget`
/// steps are spent; for length-monotone systems a complete length-bounded
/// closure can settle the question either way.
pub fn membership_bounded(os: &mut ObjectSystem, e: &Expr, budget: usize) -> Result<SelfModelVerdict, SelfModelError> {
    let unknown = |steps| SelfModelVerdict { status: Status::Unknown, witness: None, steps };
    if budget == 0 {
        return Ok(unknown(0));
    }
    let cfg = os.cfg()?;
    let os = &*os;
    let target = Statement { dv: all_pairs(&vars_of(&os.obj.symbols, e)), hyps: vec![], concl: e.clone() };
    let mut search =
        Search { os, cfg: &cfg, pool: subterm_pool(os, &cfg, e), budget, steps: 0, failed: HashMap::new(), cut: true };
    let mut found = None;
    let mut depth = 1;
    while search.cut {
        search.cut = false;
        match search.prove(e, depth) {
            Ok(Some(p)) => {
                found = Some(p);
                break;
            }
            Ok(None) => depth += 1,
            Err(OutOfBudget) => break,
        }
    }
    let steps = search.steps.min(budget);
    if let Some(p) = found {
        let tree = verify_proof(&os.obj, &target, &p).expect("search builds valid proofs");
        return Ok(confirm(os, &target, tree, steps));
    }
    if length_monotone(&os.obj) && steps < budget {
        let dv = all_pairs(&os.obj.symbols.variables().collect());
        let r = closure_enum(&os.obj, &dv, &[], budget - steps, e.len());
        let steps = steps + r.rounds;
        if let Some(tree) = r.proof_tree(&os.obj, e) {
            return Ok(confirm(os, &target, tree, steps));
        }
        if r.saturated {
            return Ok(SelfModelVerdict { status: Status::RefutedByBound, witness: None, steps });
        }
        return Ok(unknown(steps));
    }
    Ok(unknown(steps))
}

/// Expands theorem citations into axioms and re-verifies the result.
fn confirm(os: &ObjectSystem, target: &Statement, tree: ProofTree, steps: usize) -> SelfModelVerdict {
    let expanded = tree.expand_theorems(&os.obj, &os.proofs);
    let witness = verify_proof(&os.obj, target, &expanded.to_steps()).expect("expanded proofs verify");
    SelfModelVerdict { status: Status::Theorem, witness: Some(witness), steps }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub id: usize,
    pub valuation: BTreeMap<Sym, Expr>,
    pub instance: Expr,
    pub status: Status,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct SpotReport {
    pub label: String,
    /// The statement is an axiom or a theorem with a verified proof.
    pub provable: bool,
    pub samples: Vec<Sample>,
}

impl SpotReport {
    /// Every sampled instance was found to be a theorem.
    pub fn confirmed(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.status == Status::Theorem)
    }

    /// Instances of a provable statement that were refuted: these would
    /// contradict soundness of the self-model and indicate a bug.
    pub fn flagged(&self) -> Vec<&Sample> {
        if !self.provable {
            return vec![];
        }
        self.samples.iter().filter(|s| s.status == Status::RefutedByBound).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SpotConfig {
    pub samples: usize,
    /// Tree depth of sampled values; a lone leaf has depth 1.
    pub depth: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SpotConfig {
    fn default() -> Self {
        SpotConfig { samples: 8, depth: 2, budget: 10_000, seed: 0 }
    }
}

/// Samples `μ` with values of bounded depth, each statement variable over
/// its own pair of object variables so dv-paired values stay disjoint, and
/// asks whether `η_μ(A)` is an object theorem. Exhaustive when the value
/// space is small enough, otherwise a seeded random subset.
pub fn completeness_spotcheck(
    os: &mut ObjectSystem,
    label: &str,
    cfg: SpotConfig,
) -> Result<SpotReport, SelfModelError> {
    let idx = os.base.lookup_label(label).ok_or_else(|| SelfModelError::UnknownLabel(label.into()))?;
    let a = os.base.assertion(idx).clone();
    if !a.stmt.hyps.is_empty() {
        return Err(SelfModelError::HasHypotheses(label.into()));
    }
    let provable = a.is_axiom() || os.proofs[idx].is_some();
    spotcheck_expr(os, label, &a.stmt.concl, provable, cfg)
}

/// The spot-check for an arbitrary base expression, e.g. one that is not
/// a theorem. `provable` only controls flagging.
pub fn spotcheck_expr(
    os: &mut ObjectSystem,
    label: &str,
    concl: &Expr,
    provable: bool,
    cfg: SpotConfig,
) -> Result<SpotReport, SelfModelError> {
    let syms = os.base.symbols.clone();
    let mut vars: Vec<Sym> = vars_of(&syms, concl).into_iter().collect();
    vars.sort_by(|x, y| syms.name(*x).cmp(syms.name(*y)));

    let mut used = BTreeSet::new();
    let mut options: Vec<Vec<Expr>> = Vec::new();
    for &v in &vars {
        let tc = syms.type_of(v).expect("variable");
        let leaves: Vec<Sym> = (0..2)
            .map(|_| {
                let w = os.fresh_var(tc, &used);
                used.insert(w);
                w
            })
            .collect();
        let trees = enumerate_trees(&os.obj, tc, cfg.depth.max(1), &leaves);
        let exprs = trees.iter().map(|t| expr_of(t, &os.obj)).collect::<Result<Vec<_>, _>>().expect("enumerated");
        options.push(exprs);
    }
    let total: usize = options.iter().map(Vec::len).product();
    let picks: Vec<usize> = if total <= cfg.samples {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut p = sample(&mut rng, total, cfg.samples).into_vec();
        p.sort_unstable();
        p
    };
    let mut samples = Vec::new();
    for (id, mut k) in picks.into_iter().enumerate() {
        let mut mu = BTreeMap::new();
        for (i, &v) in vars.iter().enumerate().rev() {
            let n = options[i].len();
            mu.insert(v, options[i][k % n].clone());
            k /= n;
        }
        let instance = self_eta(os, &mu, concl)?;
        let verdict = membership_bounded(os, &instance, cfg.budget)?;
        samples.push(Sample { id, valuation: mu, instance, status: verdict.status, steps: verdict.steps });
    }
    Ok(SpotReport { label: label.into(), provable, samples })
}

/// Dv pairs whose images under `mu` share a variable.
pub fn dv_clashes(os: &ObjectSystem, dv: &DvSet, mu: &BTreeMap<Sym, Expr>) -> Vec<DvPair> {
    let syms = &os.obj.symbols;
    dv.iter()
        .copied()
        .filter(|p| match (mu.get(&p.first()), mu.get(&p.second())) {
            (Some(x), Some(y)) => !vars_of(syms, x).is_disjoint(&vars_of(syms, y)),
            _ => false,
        })
        .collect()
}

#[cfg(test)]
mod tests;
