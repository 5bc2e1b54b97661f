use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::symbol::{Sym, SymbolTable};
use super::KernelError;

/// A nonempty symbol sequence whose first symbol (the typecode) is a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Vec<Sym>);

impl Expr {
    /// Builds an expression, checking that it is nonempty and headed by a constant.
    pub fn new(symbols: &SymbolTable, syms: Vec<Sym>) -> Result<Self, KernelError> {
        match syms.first() {
            None => Err(KernelError::EmptyExpression),
            Some(&head) if !symbols.is_constant(head) => Err(KernelError::NotAConstant(symbols.name(head).to_string())),
            Some(_) => Ok(Expr(syms)),
        }
    }

    /// Builds `typecode ++ tail` without re-checking the head.
    pub(crate) fn from_parts(typecode: Sym, tail: &[Sym]) -> Self {
        let mut v = Vec::with_capacity(tail.len() + 1);
        v.push(typecode);
        v.extend_from_slice(tail);
        Expr(v)
    }

    pub(crate) fn from_vec_unchecked(syms: Vec<Sym>) -> Self {
        debug_assert!(!syms.is_empty());
        Expr(syms)
    }

    /// Tokenizes a whitespace-separated string against the symbol table.
    pub fn parse(symbols: &SymbolTable, text: &str) -> Result<Self, KernelError> {
        let syms = text
            .split_whitespace()
            .map(|tok| symbols.lookup(tok).ok_or_else(|| KernelError::UnknownSymbol(tok.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Expr::new(symbols, syms)
    }

    pub fn typecode(&self) -> Sym {
        self.0[0]
    }

    pub fn tail(&self) -> &[Sym] {
        &self.0[1..]
    }

    pub fn symbols(&self) -> &[Sym] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The variable hypothesis `type(v) v`.
    pub fn var_hyp(symbols: &SymbolTable, var: Sym) -> Self {
        let tc = symbols.type_of(var).expect("var_hyp of a constant");
        Expr(vec![tc, var])
    }

    pub fn with_typecode(&self, typecode: Sym) -> Self {
        Expr::from_parts(typecode, self.tail())
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> DisplayExpr<'a> {
        DisplayExpr { expr: self.symbols(), symbols }
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a [Sym],
    symbols: &'a SymbolTable,
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.expr.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(self.symbols.name(*s))?;
        }
        Ok(())
    }
}

/// Formats a bare symbol sequence (e.g. a substitution value).
pub fn display_syms<'a>(syms: &'a [Sym], symbols: &'a SymbolTable) -> DisplayExpr<'a> {
    DisplayExpr { expr: syms, symbols }
}

/// The set of variables occurring in a symbol sequence.
pub fn vars_of_syms(symbols: &SymbolTable, syms: &[Sym]) -> BTreeSet<Sym> {
    syms.iter().copied().filter(|&s| symbols.is_variable(s)).collect()
}

pub fn vars_of(symbols: &SymbolTable, e: &Expr) -> BTreeSet<Sym> {
    vars_of_syms(symbols, e.symbols())
}

/// An unordered pair of two distinct variables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DvPair(Sym, Sym);

impl DvPair {
    /// Returns `None` when both variables coincide.
    pub fn new(a: Sym, b: Sym) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(DvPair(a, b)),
            std::cmp::Ordering::Greater => Some(DvPair(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(self) -> Sym {
        self.0
    }

    pub fn second(self) -> Sym {
        self.1
    }

    pub fn contains(self, v: Sym) -> bool {
        self.0 == v || self.1 == v
    }
}

pub type DvSet = BTreeSet<DvPair>;

/// Every unordered pair drawn from `vars`.
pub fn all_pairs(vars: &BTreeSet<Sym>) -> DvSet {
    let v: Vec<Sym> = vars.iter().copied().collect();
    let mut out = DvSet::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            out.insert(DvPair(v[i], v[j]));
        }
    }
    out
}

/// `⟨D, H, A⟩`. Built through [`reduct`] the dv set only mentions variables
/// of the hypotheses and conclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub dv: DvSet,
    pub hyps: Vec<Expr>,
    pub concl: Expr,
}

impl Statement {
    pub fn vars(&self, symbols: &SymbolTable) -> BTreeSet<Sym> {
        let mut vs = vars_of(symbols, &self.concl);
        for h in &self.hyps {
            vs.extend(vars_of(symbols, h));
        }
        vs
    }

    pub fn is_reduct(&self, symbols: &SymbolTable) -> bool {
        let vs = self.vars(symbols);
        self.dv.iter().all(|p| vs.contains(&p.0) && vs.contains(&p.1))
    }
}

/// Reduct of a pre-statement: keep only the dv pairs whose variables both
/// occur in the hypotheses or the conclusion.
pub fn reduct(symbols: &SymbolTable, dv: &DvSet, hyps: Vec<Expr>, concl: Expr) -> Statement {
    let mut vs = vars_of(symbols, &concl);
    for h in &hyps {
        vs.extend(vars_of(symbols, h));
    }
    let dv = dv.iter().copied().filter(|p| vs.contains(&p.0) && vs.contains(&p.1)).collect();
    Statement { dv, hyps, concl }
}

/// A substitution, given by its values on finitely many variables; every other
/// variable is mapped to itself. Values are expression tails (possibly empty).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    map: BTreeMap<Sym, Vec<Sym>>,
}

impl Substitution {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: Sym, tail: Vec<Sym>) {
        self.map.insert(var, tail);
    }

    pub fn get(&self, var: Sym) -> Option<&[Sym]> {
        self.map.get(&var).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, &[Sym])> {
        self.map.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// `ph := ( ps -> ch ), ...` in symbol order.
    pub fn describe(&self, symbols: &SymbolTable) -> String {
        self.iter()
            .map(|(v, t)| format!("{} := {}", symbols.name(v), display_syms(t, symbols)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Image of a single symbol as a sequence.
    pub fn image<'a>(&'a self, sym: &'a Sym) -> &'a [Sym] {
        match self.map.get(sym) {
            Some(v) => v,
            None => std::slice::from_ref(sym),
        }
    }

    pub fn apply_syms(&self, syms: &[Sym]) -> Vec<Sym> {
        let mut out = Vec::with_capacity(syms.len());
        for s in syms {
            out.extend_from_slice(self.image(s));
        }
        out
    }

    /// Homomorphic extension to expressions. Constants are fixed, so the head
    /// typecode is preserved.
    pub fn apply(&self, e: &Expr) -> Expr {
        Expr::from_vec_unchecked(self.apply_syms(e.symbols()))
    }

    /// `σ(vh_v)`.
    pub fn apply_var_hyp(&self, symbols: &SymbolTable, var: Sym) -> Expr {
        let tc = symbols.type_of(var).expect("variable");
        Expr::from_parts(tc, self.image(&var))
    }

    /// Same domain as `self`, with `outer` applied to every value.
    pub fn then(&self, outer: &Substitution) -> Substitution {
        Substitution { map: self.map.iter().map(|(v, tail)| (*v, outer.apply_syms(tail))).collect() }
    }

    /// `self ∘ inner`: applying the result equals applying `inner` then `self`.
    pub fn compose(&self, inner: &Substitution) -> Substitution {
        let mut map: BTreeMap<Sym, Vec<Sym>> = inner.map.iter().map(|(v, tail)| (*v, self.apply_syms(tail))).collect();
        for (v, tail) in &self.map {
            map.entry(*v).or_insert_with(|| tail.clone());
        }
        Substitution { map }
    }
}

impl FromIterator<(Sym, Vec<Sym>)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Sym, Vec<Sym>)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

/// One failed instance of the distinct-variable transfer condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DvViolation {
    pub alpha: Sym,
    pub beta: Sym,
    pub gamma: Sym,
    pub delta: Sym,
}

impl DvViolation {
    pub fn describe(&self, symbols: &SymbolTable) -> String {
        format!(
            "dv {{{}, {}}} requires {{{}, {}}} distinct",
            symbols.name(self.alpha),
            symbols.name(self.beta),
            symbols.name(self.gamma),
            symbols.name(self.delta)
        )
    }
}

/// For every `{α, β}` in `inner` and every `γ ∈ V(σ(vh_α))`, `δ ∈ V(σ(vh_β))`,
/// require `{γ, δ} ∈ outer` (which forces `γ ≠ δ`).
pub fn check_dv_transfer(
    symbols: &SymbolTable,
    outer: &DvSet,
    inner: &DvSet,
    sigma: &Substitution,
) -> Vec<DvViolation> {
    let mut out = Vec::new();
    for pair in inner {
        let (alpha, beta) = (pair.first(), pair.second());
        let ga = vars_of_syms(symbols, sigma.image(&alpha));
        let gb = vars_of_syms(symbols, sigma.image(&beta));
        for &gamma in &ga {
            for &delta in &gb {
                let ok = DvPair::new(gamma, delta).is_some_and(|p| outer.contains(&p));
                if !ok {
                    out.push(DvViolation { alpha, beta, gamma, delta });
                }
            }
        }
    }
    out
}

/// Every substitution `σ` on the variables of `pattern` with
/// `σ(pattern) = target`, variables binding to possibly empty runs.
pub fn match_syms(symbols: &SymbolTable, pattern: &[Sym], target: &[Sym]) -> Vec<Substitution> {
    let mut out = Vec::new();
    let mut bound = BTreeMap::new();
    match_rec(symbols, pattern, target, &mut bound, &mut out);
    out
}

fn match_rec(
    symbols: &SymbolTable,
    pattern: &[Sym],
    target: &[Sym],
    bound: &mut BTreeMap<Sym, Vec<Sym>>,
    out: &mut Vec<Substitution>,
) {
    let Some((&p, rest)) = pattern.split_first() else {
        if target.is_empty() {
            out.push(Substitution { map: bound.clone() });
        }
        return;
    };
    if !symbols.is_variable(p) {
        if target.first() == Some(&p) {
            match_rec(symbols, rest, &target[1..], bound, out);
        }
        return;
    }
    if let Some(val) = bound.get(&p) {
        if target.starts_with(val) {
            let n = val.len();
            match_rec(symbols, rest, &target[n..], bound, out);
        }
        return;
    }
    // constants still to come bound how much this variable may swallow
    let min_rest = rest.iter().filter(|s| !symbols.is_variable(**s)).count();
    for n in 0..=target.len().saturating_sub(min_rest) {
        bound.insert(p, target[..n].to_vec());
        match_rec(symbols, rest, &target[n..], bound, out);
        bound.remove(&p);
    }
}
