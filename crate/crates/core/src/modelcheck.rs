//! Finite models: tree models given by interpretation tables on syntax
//! axioms, and string models given by a monoid fold over symbol images.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{induce_cfg, syntax_axioms, GrammarError, InducedCfg, SynMap};
use crate::ingest::Database;
use crate::kernel::{Expr, FormalSystem, Statement, Substitution, Sym};
use crate::treesys::{slots, tree_of, SyntaxTree, TreeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Tree,
    StringMonoid,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::StringMonoid => "string-monoid",
        }
    }
}

/// Index into the disjoint union of the variable-typecode universes.
pub type Elem = usize;

/// `μ : VR → U`, restricted to the variables at hand.
pub type Valuation = BTreeMap<Sym, Elem>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelErrorKind {
    #[error("malformed line: {0}")]
    Syntax(String),
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("`{0}` given twice")]
    Duplicate(String),
    #[error("`{0}` lines are not allowed in a {1} model")]
    WrongKind(String, &'static str),
    #[error("`{0}` is not a typecode of the system")]
    NotTypecode(String),
    #[error("no universe for typecode `{0}`")]
    MissingUniverse(String),
    #[error("universe `{0}` is empty")]
    EmptyUniverse(String),
    #[error("universe element `{elem}` repeated in `{tc}`")]
    RepeatedElement { tc: String, elem: String },
    #[error("universe `{tc}` is not a subset of `{of}`: `{elem}`")]
    NotSubset { tc: String, of: String, elem: String },
    #[error(transparent)]
    Syn(#[from] GrammarError),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("fresh table is not symmetric: `{0}` ≀ `{1}` but not the converse")]
    NonSymmetricFresh(String, String),
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("`{0}` is not a syntax axiom")]
    NotSyntaxAxiom(String),
    #[error("`{label}` takes {expected} arguments, got {found}")]
    InterpArity { label: String, expected: usize, found: usize },
    #[error("`{label}`: value `{value}` is outside the universe of `{tc}`")]
    Codomain { label: String, value: String, tc: String },
    #[error("`{label}`: conflicting rows for ({row})")]
    ConflictingRow { label: String, row: String },
    #[error("incomplete interpretation table for `{label}`: no row for ({row})")]
    IncompleteInterp { label: String, row: String },
    #[error("incomplete operation table: no entry for `{0} {1}`")]
    IncompleteOp(String, String),
    #[error("operation is not associative: ({0} {1}) {2} ≠ {0} ({1} {2})")]
    NonAssociative(String, String, String),
    #[error("`{0}` is not an identity of the operation")]
    BadIdentity(String),
    #[error("`{0}` is not a monoid element")]
    NotInCarrier(String),
    #[error("no image for constant `{0}`")]
    UnknownConstant(String),
    #[error("valuation has no value of the right type for `{0}`")]
    BadValuation(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `line` is 0 for errors not tied to a model-file line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}{kind}", if *line > 0 { format!("line {line}: ") } else { String::new() })]
pub struct ModelError {
    pub line: usize,
    pub kind: ModelErrorKind,
}

impl From<ModelErrorKind> for ModelError {
    fn from(kind: ModelErrorKind) -> Self {
        ModelError { line: 0, kind }
    }
}

impl From<TreeError> for ModelError {
    fn from(e: TreeError) -> Self {
        ModelErrorKind::Tree(e).into()
    }
}

impl From<GrammarError> for ModelError {
    fn from(e: GrammarError) -> Self {
        ModelErrorKind::Syn(e).into()
    }
}

#[derive(Clone, Debug)]
pub struct Monoid {
    pub elements: Vec<String>,
    pub identity: usize,
    op: Vec<Vec<usize>>,
    consts: BTreeMap<Sym, usize>,
}

impl Monoid {
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.op[a][b]
    }

    pub fn image(&self, c: Sym) -> Option<usize> {
        self.consts.get(&c).copied()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == name)
    }
}

#[derive(Clone, Debug)]
pub struct FiniteModel {
    pub kind: ModelKind,
    pub syn: SynMap,
    /// `(sort, name)`, sorts being variable typecodes.
    elems: Vec<(Sym, String)>,
    universes: BTreeMap<Sym, Vec<Elem>>,
    fresh: Vec<Vec<bool>>,
    interp: BTreeMap<usize, BTreeMap<Vec<Elem>, Elem>>,
    monoid: Option<Monoid>,
    cfg: Option<InducedCfg>,
}

/// A prepared expression: its unique tree, or the raw string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Tree { typecode: Sym, tree: SyntaxTree },
    Str(Expr),
}

/// `raw` is the computed element before the `U_c` membership test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Eval {
    pub raw: String,
    pub value: Option<Elem>,
}

impl FiniteModel {
    pub fn universe(&self, tc: Sym) -> &[Elem] {
        self.universes.get(&tc).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn typecodes(&self) -> impl Iterator<Item = Sym> + '_ {
        self.universes.keys().copied()
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.elems[e].1
    }

    pub fn sort(&self, e: Elem) -> Sym {
        self.elems[e].0
    }

    /// Size of the disjoint union.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn fresh(&self, a: Elem, b: Elem) -> bool {
        self.fresh[a][b]
    }

    pub fn lookup(&self, sort: Sym, name: &str) -> Option<Elem> {
        self.elems.iter().position(|(s, n)| *s == sort && n == name)
    }

    pub fn interp(&self, axiom: usize, args: &[Elem]) -> Option<Elem> {
        self.interp.get(&axiom)?.get(args).copied()
    }

    pub fn monoid(&self) -> Option<&Monoid> {
        self.monoid.as_ref()
    }

    /// `U_c = U_syn(c)` for every typecode: every expression is true.
    pub fn is_trivial(&self) -> bool {
        self.universes.iter().all(|(&c, u)| u.len() == self.universe(self.syn.get(c)).len())
    }

    pub fn prepare(&self, fs: &FormalSystem, e: &Expr) -> Result<Term, ModelError> {
        match self.kind {
            ModelKind::Tree => {
                let cfg = self.cfg.as_ref().expect("tree models carry their grammar");
                let t = tree_of(fs, cfg, &self.syn, "", e)?;
                Ok(Term::Tree { typecode: t.typecode, tree: t.tree })
            }
            ModelKind::StringMonoid => Ok(Term::Str(e.clone())),
        }
    }

    pub fn eval(&self, fs: &FormalSystem, mu: &Valuation, term: &Term) -> Result<Eval, ModelError> {
        match term {
            Term::Tree { typecode, tree } => {
                let raw = self.eval_tree(fs, mu, tree)?;
                let value = self.universe(*typecode).contains(&raw).then_some(raw);
                Ok(Eval { raw: self.name(raw).to_string(), value })
            }
            Term::Str(e) => {
                let m = self.monoid.as_ref().expect("string models carry a monoid");
                let mut acc = m.identity;
                for &s in e.tail() {
                    let x = if fs.symbols.is_variable(s) {
                        let v = self.leaf(fs, mu, s)?;
                        m.index(self.name(v)).expect("universe elements are monoid elements")
                    } else {
                        m.image(s).ok_or_else(|| ModelErrorKind::UnknownConstant(fs.symbols.name(s).into()))?
                    };
                    acc = m.op(acc, x);
                }
                let raw = m.elements[acc].clone();
                let tc = e.typecode();
                let value = self.lookup(self.syn.get(tc), &raw).filter(|v| self.universe(tc).contains(v));
                Ok(Eval { raw, value })
            }
        }
    }

    fn leaf(&self, fs: &FormalSystem, mu: &Valuation, v: Sym) -> Result<Elem, ModelError> {
        let tc = fs.symbols.type_of(v).expect("variable");
        match mu.get(&v) {
            Some(&x) if self.universe(tc).contains(&x) => Ok(x),
            _ => Err(ModelErrorKind::BadValuation(fs.symbols.name(v).into()).into()),
        }
    }

    fn eval_tree(&self, fs: &FormalSystem, mu: &Valuation, t: &SyntaxTree) -> Result<Elem, ModelError> {
        match t {
            SyntaxTree::Var(v) => self.leaf(fs, mu, *v),
            SyntaxTree::Node { axiom, children } => {
                let args = children.iter().map(|c| self.eval_tree(fs, mu, c)).collect::<Result<Vec<_>, _>>()?;
                Ok(self.interp(*axiom, &args).expect("interpretation tables are total"))
            }
        }
    }

    /// All valuations of `vars`: the first variable by name varies slowest,
    /// elements in declaration order.
    pub fn valuations(&self, fs: &FormalSystem, vars: &BTreeSet<Sym>) -> Vec<Valuation> {
        let mut vs: Vec<Sym> = vars.iter().copied().collect();
        vs.sort_by(|a, b| fs.symbols.name(*a).cmp(fs.symbols.name(*b)));
        let mut out = vec![Valuation::new()];
        for v in vs {
            let u = self.universe(fs.symbols.type_of(v).expect("variable"));
            out = out
                .into_iter()
                .flat_map(|mu| {
                    u.iter().map(move |&x| {
                        let mut mu = mu.clone();
                        mu.insert(v, x);
                        mu
                    })
                })
                .collect();
        }
        out
    }

    /// `ph=F ps=T`, by variable name.
    pub fn show_valuation(&self, fs: &FormalSystem, mu: &Valuation) -> String {
        let mut parts: Vec<(String, &str)> =
            mu.iter().map(|(&v, &x)| (fs.symbols.name(v).to_string(), self.name(x))).collect();
        parts.sort();
        parts.iter().map(|(v, x)| format!("{v}={x}")).collect::<Vec<_>>().join(" ")
    }

    fn show_elem(&self, fs: &FormalSystem, e: Elem) -> String {
        format!("{}@{}", self.name(e), fs.symbols.name(self.sort(e)))
    }

    /// Model-file text that loads back to an equal model.
    pub fn to_text(&self, fs: &FormalSystem) -> String {
        let name = |s: Sym| fs.symbols.name(s);
        let mut out = format!("kind {}\n", self.kind.name());
        for (&c, u) in &self.universes {
            let els: Vec<&str> = u.iter().map(|&e| self.name(e)).collect();
            out += &format!("universe {} = {}\n", name(c), els.join(" "));
        }
        for (c, d) in self.syn.iter() {
            if c != d {
                out += &format!("syn {} = {}\n", name(c), name(d));
            }
        }
        if self.fresh.iter().all(|r| r.iter().all(|&b| b)) {
            out += "fresh all\n";
        } else {
            out += "fresh pairs\n";
            for a in 0..self.len() {
                for b in a..self.len() {
                    if self.fresh[a][b] {
                        out += &format!("pair {} {}\n", self.show_elem(fs, a), self.show_elem(fs, b));
                    }
                }
            }
        }
        for (&a, table) in &self.interp {
            let label = &fs.assertion(a).label;
            for (args, &v) in table {
                let args: Vec<&str> = args.iter().map(|&x| self.name(x)).collect();
                out += &format!("interp {label} : {} -> {}\n", args.join(","), self.name(v));
            }
        }
        if let Some(m) = &self.monoid {
            out += &format!("elements {}\nidentity {}\n", m.elements.join(" "), m.elements[m.identity]);
            for (a, row) in m.op.iter().enumerate() {
                for (b, &c) in row.iter().enumerate() {
                    out += &format!("op {} {} -> {}\n", m.elements[a], m.elements[b], m.elements[c]);
                }
            }
            for (&c, &x) in &m.consts {
                out += &format!("const {} -> {}\n", name(c), m.elements[x]);
            }
        }
        out
    }
}

// ---- loading ----

struct Line<'a> {
    no: usize,
    words: Vec<&'a str>,
    text: &'a str,
}

fn err(line: usize, kind: ModelErrorKind) -> ModelError {
    ModelError { line, kind }
}

/// Parses a model file against `fs` and checks every model-file invariant.
pub fn load_model(fs: &FormalSystem, text: &str) -> Result<FiniteModel, ModelError> {
    let syms = &fs.symbols;
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then(|| Line { no: i + 1, words: l.split_whitespace().collect(), text: l })
        })
        .collect();
    let bad = |l: &Line| err(l.no, ModelErrorKind::Syntax(l.text.to_string()));
    const WORDS: [&str; 12] =
        ["kind", "universe", "syn", "fresh", "≀", "pair", "interp", "elements", "identity", "op", "const", "#"];
    if let Some(l) = lines.iter().find(|l| !WORDS.contains(&l.words[0])) {
        return Err(bad(l));
    }

    let mut kind = None;
    for l in lines.iter().filter(|l| l.words[0] == "kind") {
        let k = match l.words.as_slice() {
            ["kind", "tree"] => ModelKind::Tree,
            ["kind", "string-monoid"] => ModelKind::StringMonoid,
            _ => return Err(bad(l)),
        };
        if kind.replace(k).is_some() {
            return Err(err(l.no, ModelErrorKind::Duplicate("kind".into())));
        }
    }
    let kind = kind.ok_or_else(|| ModelError::from(ModelErrorKind::Missing("kind")))?;

    // syn
    let mut pairs = Vec::new();
    let typecode = |l: &Line, n: &str| {
        syms.lookup(n)
            .filter(|&s| fs.typecodes().contains(&s))
            .ok_or_else(|| err(l.no, ModelErrorKind::NotTypecode(n.into())))
    };
    for l in lines.iter().filter(|l| l.words[0] == "syn") {
        match l.words.as_slice() {
            ["syn", c, "=", d] => pairs.push((typecode(l, c)?, typecode(l, d)?)),
            _ => return Err(bad(l)),
        }
    }
    let syn = if pairs.is_empty() { SynMap::infer(fs)? } else { SynMap::new(fs, &pairs)? };

    // monoid carrier first: string-model universes draw from it
    let mut carrier: Option<(usize, Vec<String>)> = None;
    for l in lines.iter().filter(|l| l.words[0] == "elements") {
        if kind != ModelKind::StringMonoid {
            return Err(err(l.no, ModelErrorKind::WrongKind("elements".into(), kind.name())));
        }
        let els: Vec<String> = l.words[1..].iter().map(|s| s.to_string()).collect();
        if els.is_empty() {
            return Err(bad(l));
        }
        if let Some(d) = els.iter().enumerate().find(|(i, e)| els[..*i].contains(e)) {
            return Err(err(l.no, ModelErrorKind::RepeatedElement { tc: "elements".into(), elem: d.1.clone() }));
        }
        if carrier.replace((l.no, els)).is_some() {
            return Err(err(l.no, ModelErrorKind::Duplicate("elements".into())));
        }
    }
    if kind == ModelKind::StringMonoid && carrier.is_none() {
        return Err(ModelErrorKind::Missing("elements").into());
    }

    // universes
    let mut decl: BTreeMap<Sym, (usize, Vec<String>)> = BTreeMap::new();
    for l in lines.iter().filter(|l| l.words[0] == "universe") {
        let (c, els) = match l.words.as_slice() {
            ["universe", c, "=", rest @ ..] => (typecode(l, c)?, rest),
            _ => return Err(bad(l)),
        };
        if els.is_empty() {
            return Err(err(l.no, ModelErrorKind::EmptyUniverse(syms.name(c).into())));
        }
        let els: Vec<String> = els.iter().map(|s| s.to_string()).collect();
        if let Some(d) = els.iter().enumerate().find(|(i, e)| els[..*i].contains(e)) {
            return Err(err(l.no, ModelErrorKind::RepeatedElement { tc: syms.name(c).into(), elem: d.1.clone() }));
        }
        if let Some((_, car)) = &carrier {
            if let Some(e) = els.iter().find(|e| !car.contains(e)) {
                return Err(err(l.no, ModelErrorKind::NotInCarrier(e.clone())));
            }
        }
        if decl.insert(c, (l.no, els)).is_some() {
            return Err(err(l.no, ModelErrorKind::Duplicate(format!("universe {}", syms.name(c)))));
        }
    }
    for c in fs.typecodes() {
        if !decl.contains_key(&c) {
            return Err(ModelErrorKind::MissingUniverse(syms.name(c).into()).into());
        }
    }
    let vt = fs.var_typecodes();
    let mut elems: Vec<(Sym, String)> = Vec::new();
    for &c in &vt {
        elems.extend(decl[&c].1.iter().map(|n| (c, n.clone())));
    }
    let find = |sort: Sym, n: &str| elems.iter().position(|(s, m)| *s == sort && m == n);
    let mut universes = BTreeMap::new();
    for (&c, (no, els)) in &decl {
        let s = syn.get(c);
        let u = els
            .iter()
            .map(|n| {
                find(s, n).ok_or_else(|| {
                    err(
                        *no,
                        ModelErrorKind::NotSubset { tc: syms.name(c).into(), of: syms.name(s).into(), elem: n.clone() },
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        universes.insert(c, u);
    }

    // `name@tc`, or a bare name when there is one sort
    let resolve = |l: &Line, tok: &str| -> Result<Elem, ModelError> {
        let unknown = || err(l.no, ModelErrorKind::UnknownElement(tok.into()));
        let (n, c) = match tok.split_once('@') {
            Some((n, c)) => (n, typecode(l, c)?),
            None if vt.len() == 1 => (tok, *vt.iter().next().expect("one")),
            None => return Err(unknown()),
        };
        let e = find(syn.get(c), n).ok_or_else(unknown)?;
        if universes[&c].contains(&e) {
            Ok(e)
        } else {
            Err(unknown())
        }
    };

    // freshness
    let n = elems.len();
    let mut fresh = vec![vec![false; n]; n];
    let mut mode = None;
    for l in lines.iter().filter(|l| l.words[0] == "fresh") {
        let m = match l.words.as_slice() {
            ["fresh", m @ ("all" | "pairs" | "directed")] => *m,
            _ => return Err(bad(l)),
        };
        if mode.replace(m).is_some() {
            return Err(err(l.no, ModelErrorKind::Duplicate("fresh".into())));
        }
    }
    let mode = mode.ok_or_else(|| ModelError::from(ModelErrorKind::Missing("fresh")))?;
    if mode == "all" {
        fresh.iter_mut().for_each(|r| r.iter_mut().for_each(|b| *b = true));
    }
    for l in lines.iter().filter(|l| matches!(l.words[0], "≀" | "pair")) {
        if mode == "all" {
            return Err(err(l.no, ModelErrorKind::Syntax(format!("{} (freshness is `all`)", l.text))));
        }
        let (a, b) = match l.words.as_slice() {
            [_, a, b] => (resolve(l, a)?, resolve(l, b)?),
            _ => return Err(bad(l)),
        };
        fresh[a][b] = true;
        if mode == "pairs" {
            fresh[b][a] = true;
        }
    }
    if let Some((a, b)) = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).find(|&(a, b)| fresh[a][b] && !fresh[b][a]) {
        let show = |e: Elem| format!("{}@{}", elems[e].1, syms.name(elems[e].0));
        return Err(ModelErrorKind::NonSymmetricFresh(show(a), show(b)).into());
    }

    let mut model =
        FiniteModel { kind, syn, elems, universes, fresh, interp: BTreeMap::new(), monoid: None, cfg: None };
    match kind {
        ModelKind::Tree => load_interp(fs, &mut model, &lines)?,
        ModelKind::StringMonoid => load_monoid(fs, &mut model, &lines, carrier.expect("checked above").1)?,
    }
    Ok(model)
}

fn load_interp(fs: &FormalSystem, m: &mut FiniteModel, lines: &[Line]) -> Result<(), ModelError> {
    let syms = &fs.symbols;
    for l in lines {
        if matches!(l.words[0], "identity" | "op" | "const") {
            return Err(err(l.no, ModelErrorKind::WrongKind(l.words[0].into(), "tree")));
        }
    }
    m.cfg = Some(induce_cfg(fs)?);
    let sa = syntax_axioms(fs);
    for l in lines.iter().filter(|l| l.words[0] == "interp") {
        let bad = || err(l.no, ModelErrorKind::Syntax(l.text.to_string()));
        let (label, rest) = match l.words.as_slice() {
            ["interp", label, ":", ..] => (*label, l.text.split_once(':').map(|(_, r)| r).ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        let a = fs.lookup_label(label).ok_or_else(|| err(l.no, ModelErrorKind::UnknownAxiom(label.into())))?;
        if !sa.contains(&a) {
            return Err(err(l.no, ModelErrorKind::NotSyntaxAxiom(label.into())));
        }
        let (args, value) = rest.split_once("->").ok_or_else(bad)?;
        let args: Vec<&str> = if args.trim().is_empty() { vec![] } else { args.split(',').map(str::trim).collect() };
        let value = value.trim();
        let sl = slots(fs, a);
        if args.len() != sl.len() {
            return Err(err(
                l.no,
                ModelErrorKind::InterpArity { label: label.into(), expected: sl.len(), found: args.len() },
            ));
        }
        let row = args
            .iter()
            .zip(&sl)
            .map(|(n, &v)| {
                let tc = syms.type_of(v).expect("slot");
                m.lookup(tc, n).ok_or_else(|| err(l.no, ModelErrorKind::UnknownElement(n.to_string())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tc = fs.assertion(a).stmt.concl.typecode();
        let v = m.lookup(tc, value).ok_or_else(|| {
            err(l.no, ModelErrorKind::Codomain { label: label.into(), value: value.into(), tc: syms.name(tc).into() })
        })?;
        let table = m.interp.entry(a).or_default();
        if table.insert(row, v).is_some_and(|old| old != v) {
            return Err(err(l.no, ModelErrorKind::ConflictingRow { label: label.into(), row: args.join(",") }));
        }
    }
    for &a in &sa {
        let sl = slots(fs, a);
        let mut rows: Vec<Vec<Elem>> = vec![vec![]];
        for v in &sl {
            let u = m.universe(syms.type_of(*v).expect("slot")).to_vec();
            rows = rows
                .into_iter()
                .flat_map(|r| {
                    u.iter().map(move |&x| {
                        let mut r = r.clone();
                        r.push(x);
                        r
                    })
                })
                .collect();
        }
        let table = m.interp.entry(a).or_default();
        if let Some(r) = rows.iter().find(|r| !table.contains_key(*r)) {
            let row: Vec<&str> = r.iter().map(|&x| m.elems[x].1.as_str()).collect();
            return Err(
                ModelErrorKind::IncompleteInterp { label: fs.assertion(a).label.clone(), row: row.join(",") }.into()
            );
        }
    }
    Ok(())
}

fn load_monoid(
    fs: &FormalSystem,
    m: &mut FiniteModel,
    lines: &[Line],
    elements: Vec<String>,
) -> Result<(), ModelError> {
    let k = elements.len();
    let index = |l: &Line, n: &str| {
        elements.iter().position(|e| e == n).ok_or_else(|| err(l.no, ModelErrorKind::NotInCarrier(n.into())))
    };
    let mut identity = None;
    let mut op: Vec<Vec<Option<usize>>> = vec![vec![None; k]; k];
    let mut consts = BTreeMap::new();
    for l in lines {
        let bad = || err(l.no, ModelErrorKind::Syntax(l.text.to_string()));
        match l.words.as_slice() {
            ["interp", ..] => return Err(err(l.no, ModelErrorKind::WrongKind("interp".into(), "string-monoid"))),
            ["identity", e] => {
                if identity.replace(index(l, e)?).is_some() {
                    return Err(err(l.no, ModelErrorKind::Duplicate("identity".into())));
                }
            }
            ["identity", ..] => return Err(bad()),
            ["op", a, b, "->", c] => {
                let (a, b, c) = (index(l, a)?, index(l, b)?, index(l, c)?);
                if op[a][b].replace(c).is_some_and(|old| old != c) {
                    return Err(err(
                        l.no,
                        ModelErrorKind::ConflictingRow {
                            label: "op".into(),
                            row: format!("{},{}", elements[a], elements[b]),
                        },
                    ));
                }
            }
            ["op", ..] => return Err(bad()),
            ["const", s, "->", e] => {
                let c = fs
                    .symbols
                    .lookup(s)
                    .filter(|&c| fs.symbols.is_constant(c))
                    .ok_or_else(|| err(l.no, ModelErrorKind::UnknownConstant(s.to_string())))?;
                if consts.insert(c, index(l, e)?).is_some() {
                    return Err(err(l.no, ModelErrorKind::Duplicate(format!("const {s}"))));
                }
            }
            ["const", ..] => return Err(bad()),
            _ => {}
        }
    }
    let identity = identity.ok_or_else(|| ModelError::from(ModelErrorKind::Missing("identity")))?;
    let mut table = vec![vec![0; k]; k];
    for a in 0..k {
        for b in 0..k {
            table[a][b] =
                op[a][b].ok_or_else(|| ModelErrorKind::IncompleteOp(elements[a].clone(), elements[b].clone()))?;
        }
    }
    for a in 0..k {
        if table[identity][a] != a || table[a][identity] != a {
            return Err(ModelErrorKind::BadIdentity(elements[identity].clone()).into());
        }
        for b in 0..k {
            for c in 0..k {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(ModelErrorKind::NonAssociative(
                        elements[a].clone(),
                        elements[b].clone(),
                        elements[c].clone(),
                    )
                    .into());
                }
            }
        }
    }
    m.monoid = Some(Monoid { elements, identity, op: table, consts });
    Ok(())
}

// ---- checks ----

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreshnessVerdict {
    pub symmetric: bool,
    /// Variable typecodes with no element fresh to the whole disjoint union.
    pub no_fresh_element: Vec<Sym>,
}

impl FreshnessVerdict {
    pub fn valid(&self) -> bool {
        self.symmetric && self.no_fresh_element.is_empty()
    }
}

/// A finite universe meets the fresh-element requirement for every finite
/// obstacle set iff it meets it for the largest one, the whole union.
pub fn validate_freshness(fs: &FormalSystem, m: &FiniteModel) -> FreshnessVerdict {
    let n = m.len();
    let symmetric = (0..n).all(|a| (0..n).all(|b| m.fresh(a, b) == m.fresh(b, a)));
    let no_fresh_element = fs
        .var_typecodes()
        .into_iter()
        .filter(|&c| !m.universe(c).iter().any(|&v| (0..n).all(|w| m.fresh(v, w))))
        .collect();
    FreshnessVerdict { symmetric, no_fresh_element }
}

/// `v` is fresh to every argument but not to the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreshViolation {
    pub v: Elem,
    /// The syntax axiom (tree models); `None` for the monoid operation.
    pub axiom: Option<usize>,
    pub args: Vec<Elem>,
    pub value: Elem,
}

impl FreshViolation {
    pub fn describe(&self, fs: &FormalSystem, m: &FiniteModel) -> String {
        let args: Vec<&str> = self.args.iter().map(|&x| m.name(x)).collect();
        if self.axiom.is_none() && args.is_empty() {
            return format!(
                "{v} is not fresh to {val}, the image of the empty string or a constant",
                v = m.name(self.v),
                val = m.name(self.value)
            );
        }
        let f = match self.axiom {
            Some(a) => fs.assertion(a).label.clone(),
            None => "op".into(),
        };
        format!(
            "{v} is fresh to {args} but not to {f}({args}) = {val}",
            v = m.name(self.v),
            args = args.join(","),
            val = m.name(self.value)
        )
    }
}

/// Tree models: `v ≀ fᵢ` for all `i` implies `v ≀ π_a(f)`. Monoid models:
/// the set of elements fresh to `v` contains the identity and constant
/// images and is closed under the operation, within each sort.
pub fn check_fresh_preservation(fs: &FormalSystem, m: &FiniteModel) -> Option<FreshViolation> {
    let n = m.len();
    match m.kind {
        ModelKind::Tree => {
            for (&a, table) in &m.interp {
                for (args, &value) in table {
                    for v in 0..n {
                        if args.iter().all(|&f| m.fresh(v, f)) && !m.fresh(v, value) {
                            return Some(FreshViolation { v, axiom: Some(a), args: args.clone(), value });
                        }
                    }
                }
            }
            None
        }
        ModelKind::StringMonoid => {
            let mo = m.monoid.as_ref().expect("monoid");
            for sort in fs.var_typecodes() {
                let u = m.universe(sort);
                let as_elem = |x: usize| m.lookup(sort, &mo.elements[x]).filter(|e| u.contains(e));
                let generators: Vec<usize> = std::iter::once(mo.identity).chain(mo.consts.values().copied()).collect();
                for v in 0..n {
                    for &g in &generators {
                        if let Some(e) = as_elem(g) {
                            if !m.fresh(v, e) {
                                return Some(FreshViolation { v, axiom: None, args: vec![], value: e });
                            }
                        }
                    }
                    for &a in u {
                        for &b in u {
                            let ia = mo.index(m.name(a)).expect("carrier");
                            let ib = mo.index(m.name(b)).expect("carrier");
                            let Some(p) = as_elem(mo.op(ia, ib)) else { continue };
                            if m.fresh(v, a) && m.fresh(v, b) && !m.fresh(v, p) {
                                return Some(FreshViolation { v, axiom: None, args: vec![a, b], value: p });
                            }
                        }
                    }
                }
            }
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub valuation: Valuation,
    /// The conclusion's computed element.
    pub value: Eval,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub valuations: usize,
    pub counterexample: Option<Counterexample>,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Over every valuation of `vars(H ∪ {A})`: dv pairs fresh and hypotheses
/// defined imply the conclusion defined. Reports the first failure in
/// enumeration order; all valuations are visited.
pub fn check_axiom(fs: &FormalSystem, m: &FiniteModel, stmt: &Statement) -> Result<AxiomCheck, ModelError> {
    let hyps = stmt.hyps.iter().map(|h| m.prepare(fs, h)).collect::<Result<Vec<_>, _>>()?;
    let concl = m.prepare(fs, &stmt.concl)?;
    let vars = stmt.vars(&fs.symbols);
    let mut counterexample = None;
    let all = m.valuations(fs, &vars);
    for mu in &all {
        if counterexample.is_some() {
            break;
        }
        if !stmt.dv.iter().all(|p| m.fresh(mu[&p.first()], mu[&p.second()])) {
            continue;
        }
        let mut applies = true;
        for h in &hyps {
            if m.eval(fs, mu, h)?.value.is_none() {
                applies = false;
                break;
            }
        }
        if !applies {
            continue;
        }
        let value = m.eval(fs, mu, &concl)?;
        if value.value.is_none() {
            counterexample = Some(Counterexample { valuation: mu.clone(), value });
        }
    }
    Ok(AxiomCheck { valuations: all.len(), counterexample })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truth {
    pub holds: bool,
    pub valuations: usize,
    pub counterexample: Option<Counterexample>,
}

/// True iff defined under every valuation of its variables.
pub fn is_true(fs: &FormalSystem, m: &FiniteModel, e: &Expr) -> Result<Truth, ModelError> {
    let stmt = Statement { dv: Default::default(), hyps: vec![], concl: e.clone() };
    let c = check_axiom(fs, m, &stmt)?;
    Ok(Truth { holds: c.passed(), valuations: c.valuations, counterexample: c.counterexample })
}

/// Sampled evidence against `η_μ(σ(e)) = η_{σ(μ)}(e)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstViolation {
    pub expr: String,
    pub substitution: String,
}

/// The axioms a model must satisfy: every axiom for monoid models; for tree
/// models the syntax axioms hold by totality of the tables.
pub fn checked_axioms(fs: &FormalSystem, m: &FiniteModel) -> Vec<usize> {
    let sa = if m.kind == ModelKind::Tree { syntax_axioms(fs) } else { vec![] };
    fs.axioms().map(|(i, _)| i).filter(|i| !sa.contains(i)).collect()
}

#[derive(Clone, Debug)]
pub struct ModelReport {
    pub freshness: FreshnessVerdict,
    pub preservation: Option<FreshViolation>,
    pub axioms: Vec<(usize, AxiomCheck)>,
    pub substitution: Option<SubstViolation>,
}

impl ModelReport {
    pub fn passed(&self) -> bool {
        self.freshness.valid()
            && self.preservation.is_none()
            && self.substitution.is_none()
            && self.axioms.iter().all(|(_, c)| c.passed())
    }

    pub fn failed_axioms(&self) -> Vec<usize> {
        self.axioms.iter().filter(|(_, c)| !c.passed()).map(|(i, _)| *i).collect()
    }
}

pub const SUBSTITUTION_SAMPLES: usize = 200;

pub fn check_model(fs: &FormalSystem, m: &FiniteModel) -> Result<ModelReport, ModelError> {
    let axioms = checked_axioms(fs, m)
        .into_iter()
        .map(|i| Ok((i, check_axiom(fs, m, &fs.assertion(i).stmt)?)))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let substitution = match m.kind {
        ModelKind::Tree => None,
        ModelKind::StringMonoid => sample_substitution_property(fs, m, SUBSTITUTION_SAMPLES, 0)?,
    };
    Ok(ModelReport {
        freshness: validate_freshness(fs, m),
        preservation: check_fresh_preservation(fs, m),
        axioms,
        substitution,
    })
}

/// Random `σ`, `e` (tails ≤ 6) and `μ` over constants with images and all
/// variables; samples where some `σ(μ)(v)` is undefined are skipped.
pub fn sample_substitution_property(
    fs: &FormalSystem,
    m: &FiniteModel,
    samples: usize,
    seed: u64,
) -> Result<Option<SubstViolation>, ModelError> {
    let syms = &fs.symbols;
    let mo = m.monoid.as_ref().expect("monoid");
    let vars: Vec<Sym> = syms.variables().collect();
    let mut alphabet: Vec<Sym> = mo.consts.keys().copied().collect();
    alphabet.extend(&vars);
    let tcs: Vec<Sym> = m.typecodes().collect();
    if alphabet.is_empty() || tcs.is_empty() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng, max: usize| -> Vec<Sym> {
        let n = rng.gen_range(0..=max);
        (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
    };
    for _ in 0..samples {
        let tc = tcs[rng.gen_range(0..tcs.len())];
        let mut syms_e = vec![tc];
        syms_e.extend(word(&mut rng, 6));
        let e = Expr::new(syms, syms_e).expect("headed by a constant");
        let mut sigma = Substitution::identity();
        for &v in &vars {
            sigma.insert(v, word(&mut rng, 3));
        }
        let mu: Valuation = vars
            .iter()
            .map(|&v| {
                let u = m.universe(syms.type_of(v).expect("variable"));
                (v, u[rng.gen_range(0..u.len())])
            })
            .collect();
        let mut sigma_mu = Valuation::new();
        let mut defined = true;
        for &v in &vars {
            let vh = sigma.apply_var_hyp(syms, v);
            match m.eval(fs, &mu, &Term::Str(vh))?.value {
                Some(x) => {
                    sigma_mu.insert(v, x);
                }
                None => {
                    defined = false;
                    break;
                }
            }
        }
        if !defined {
            continue;
        }
        let lhs = m.eval(fs, &mu, &Term::Str(sigma.apply(&e)))?;
        let rhs = m.eval(fs, &sigma_mu, &Term::Str(e.clone()))?;
        if lhs != rhs {
            return Ok(Some(SubstViolation { expr: e.display(syms).to_string(), substitution: sigma.describe(syms) }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct AuditEntry {
    pub label: String,
    pub verified: bool,
    /// `None` when the proof did not verify.
    pub check: Option<AxiomCheck>,
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn audited(&self) -> usize {
        self.entries.iter().filter(|e| e.check.is_some()).count()
    }

    /// Theorems with a verified proof that the model refutes. For a model
    /// that passed `check_model` this is always empty.
    pub fn unsound(&self) -> Vec<&AuditEntry> {
        self.entries.iter().filter(|e| e.check.as_ref().is_some_and(|c| !c.passed())).collect()
    }
}

/// Every verified theorem must hold in a model of the axioms.
pub fn soundness_audit(db: &Database, m: &FiniteModel) -> Result<AuditReport, ModelError> {
    let fs = &db.system;
    let mut entries = Vec::new();
    for (i, a, _) in db.theorems() {
        let verified = matches!(db.verify(i), Some(Ok(_)));
        let check = if verified { Some(check_axiom(fs, m, &a.stmt)?) } else { None };
        entries.push(AuditEntry { label: a.label.clone(), verified, check });
    }
    Ok(AuditReport { entries })
}

#[derive(Clone, Debug)]
pub struct IndependenceReport {
    pub target: usize,
    pub freshness: FreshnessVerdict,
    pub preservation: Option<FreshViolation>,
    pub others: Vec<(usize, AxiomCheck)>,
    pub target_check: AxiomCheck,
    /// `is_true` of the target's conclusion, for hypothesis-free targets.
    pub target_truth: Option<Truth>,
}

impl IndependenceReport {
    pub fn others_pass(&self) -> bool {
        self.freshness.valid() && self.preservation.is_none() && self.others.iter().all(|(_, c)| c.passed())
    }

    pub fn target_fails(&self) -> bool {
        !self.target_check.passed() || self.target_truth.as_ref().is_some_and(|t| !t.holds)
    }

    pub fn witnessed(&self) -> bool {
        self.others_pass() && self.target_fails()
    }

    /// The first failing valuation of the target.
    pub fn counterexample(&self) -> Option<&Counterexample> {
        self.target_check
            .counterexample
            .as_ref()
            .or_else(|| self.target_truth.as_ref().and_then(|t| t.counterexample.as_ref()))
    }
}

/// A model of every axiom except `target` in which `target` fails shows
/// that `target` is not provable from the others.
pub fn independence_report(fs: &FormalSystem, m: &FiniteModel, target: &str) -> Result<IndependenceReport, ModelError> {
    let t = fs
        .lookup_label(target)
        .filter(|&i| fs.assertion(i).is_axiom())
        .ok_or_else(|| ModelError::from(ModelErrorKind::UnknownAxiom(target.into())))?;
    let others = checked_axioms(fs, m)
        .into_iter()
        .filter(|&i| i != t)
        .map(|i| Ok((i, check_axiom(fs, m, &fs.assertion(i).stmt)?)))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let stmt = &fs.assertion(t).stmt;
    let target_check = check_axiom(fs, m, stmt)?;
    let target_truth = if stmt.hyps.is_empty() { Some(is_true(fs, m, &stmt.concl)?) } else { None };
    Ok(IndependenceReport {
        target: t,
        freshness: validate_freshness(fs, m),
        preservation: check_fresh_preservation(fs, m),
        others,
        target_check,
        target_truth,
    })
}

pub const TRIVIAL_ELEMENT: &str = "*";

/// One point per typecode, everything fresh, every table constant. A tree
/// model when every axiom expression has a unique parse, else a monoid model.
pub fn trivial_model(fs: &FormalSystem, syn: &SynMap) -> FiniteModel {
    let vt = fs.var_typecodes();
    let elems: Vec<(Sym, String)> = vt.iter().map(|&c| (c, TRIVIAL_ELEMENT.to_string())).collect();
    let n = elems.len();
    let universes: BTreeMap<Sym, Vec<Elem>> = fs
        .typecodes()
        .into_iter()
        .map(|c| {
            let s = syn.get(c);
            (c, vec![elems.iter().position(|(t, _)| *t == s).expect("syn maps into VT")])
        })
        .collect();
    let mut m = FiniteModel {
        kind: ModelKind::Tree,
        syn: syn.clone(),
        elems,
        universes,
        fresh: vec![vec![true; n]; n],
        interp: BTreeMap::new(),
        monoid: None,
        cfg: None,
    };
    let tree_ok = induce_cfg(fs).ok().filter(|cfg| {
        fs.axioms()
            .all(|(_, a)| a.stmt.hyps.iter().chain([&a.stmt.concl]).all(|e| tree_of(fs, cfg, syn, &a.label, e).is_ok()))
    });
    match tree_ok {
        Some(cfg) => {
            for a in syntax_axioms(fs) {
                let point = |c: Sym| m.universes[&c][0];
                let args: Vec<Elem> =
                    slots(fs, a).iter().map(|v| point(fs.symbols.type_of(*v).expect("slot"))).collect();
                let value = point(fs.assertion(a).stmt.concl.typecode());
                m.interp.insert(a, [(args, value)].into());
            }
            m.cfg = Some(cfg);
        }
        None => {
            m.kind = ModelKind::StringMonoid;
            m.monoid = Some(Monoid {
                elements: vec![TRIVIAL_ELEMENT.into()],
                identity: 0,
                op: vec![vec![0]],
                consts: fs.symbols.constants().map(|c| (c, 0)).collect(),
            });
        }
    }
    m
}
