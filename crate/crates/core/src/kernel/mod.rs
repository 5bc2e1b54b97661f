//! Symbolic core: expressions, substitutions, statements, proof replay and a
//! bounded closure oracle.

mod closure;
mod expr;
mod symbol;
mod verify;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub use closure::{closure_enum, ClosureResult, Derivation};
pub use expr::{
    all_pairs, check_dv_transfer, display_syms, match_syms, reduct, vars_of, vars_of_syms, DisplayExpr, DvPair, DvSet,
    DvViolation, Expr, Statement, Substitution,
};
pub use symbol::{Sym, SymbolKind, SymbolTable};
pub use verify::{replay, verify_proof, ProofError, ProofErrorKind, ProofNode, ProofStep, ProofTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("`{0}` is not a valid token")]
    BadToken(String),
    #[error("`{0}` is not a constant")]
    NotAConstant(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("empty expression")]
    EmptyExpression,
    #[error("label `{0}` used twice")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("statement `{0}` is not a reduct")]
    NotReduct(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AssertionKind {
    Axiom,
    Theorem,
}

/// A labeled statement together with the order in which proofs supply its
/// mandatory variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assertion {
    pub label: String,
    pub kind: AssertionKind,
    pub stmt: Statement,
    /// Variables of `H ∪ {A}` in floating-hypothesis declaration order.
    pub mand_vars: Vec<Sym>,
    /// Labels of the essential hypotheses, parallel to `stmt.hyps`.
    pub hyp_labels: Vec<String>,
}

impl Assertion {
    pub fn is_axiom(&self) -> bool {
        self.kind == AssertionKind::Axiom
    }
}

/// `⟨CN, VR, Type, Γ⟩` plus the table of proved assertions that proofs may
/// cite. `Γ` is the subsequence of axioms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalSystem {
    pub symbols: SymbolTable,
    assertions: Vec<Assertion>,
    labels: HashMap<String, usize>,
}

impl FormalSystem {
    pub fn new(symbols: SymbolTable) -> Self {
        FormalSystem { symbols, ..Default::default() }
    }

    pub fn add_constant(&mut self, name: &str) -> Result<Sym, KernelError> {
        self.symbols.add_constant(name)
    }

    pub fn add_variable(&mut self, name: &str, typecode: &str) -> Result<Sym, KernelError> {
        let tc = self.symbols.lookup(typecode).ok_or_else(|| KernelError::UnknownSymbol(typecode.to_string()))?;
        self.symbols.add_variable(name, tc)
    }

    pub fn parse_expr(&self, text: &str) -> Result<Expr, KernelError> {
        Expr::parse(&self.symbols, text)
    }

    /// Adds an assertion; `mand_vars` defaults to symbol declaration order.
    pub fn push_assertion(&mut self, assertion: Assertion) -> Result<usize, KernelError> {
        if self.labels.contains_key(&assertion.label) {
            return Err(KernelError::DuplicateLabel(assertion.label));
        }
        if !assertion.stmt.is_reduct(&self.symbols) {
            return Err(KernelError::NotReduct(assertion.label));
        }
        let idx = self.assertions.len();
        self.labels.insert(assertion.label.clone(), idx);
        self.assertions.push(assertion);
        Ok(idx)
    }

    /// Convenience builder used by tests and examples: hypotheses and
    /// conclusion as text, `dv` as pairs of variable names.
    pub fn add_axiom(
        &mut self,
        label: &str,
        dv: &[(&str, &str)],
        hyps: &[&str],
        concl: &str,
    ) -> Result<usize, KernelError> {
        let stmt = self.build_statement(dv, hyps, concl)?;
        let mand_vars = stmt.vars(&self.symbols).into_iter().collect();
        let hyp_labels = (0..stmt.hyps.len()).map(|i| format!("{label}.{}", i + 1)).collect();
        self.push_assertion(Assertion {
            label: label.to_string(),
            kind: AssertionKind::Axiom,
            stmt,
            mand_vars,
            hyp_labels,
        })
    }

    pub fn build_statement(&self, dv: &[(&str, &str)], hyps: &[&str], concl: &str) -> Result<Statement, KernelError> {
        let mut d = DvSet::new();
        for (a, b) in dv {
            let look = |n: &str| {
                self.symbols
                    .lookup(n)
                    .filter(|&s| self.symbols.is_variable(s))
                    .ok_or_else(|| KernelError::UnknownSymbol(n.to_string()))
            };
            if let Some(p) = DvPair::new(look(a)?, look(b)?) {
                d.insert(p);
            }
        }
        let hyps = hyps.iter().map(|h| self.parse_expr(h)).collect::<Result<Vec<_>, _>>()?;
        let concl = self.parse_expr(concl)?;
        Ok(reduct(&self.symbols, &d, hyps, concl))
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    pub fn assertion(&self, idx: usize) -> &Assertion {
        &self.assertions[idx]
    }

    pub fn lookup_label(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    pub fn by_label(&self, label: &str) -> Result<&Assertion, KernelError> {
        self.lookup_label(label)
            .map(|i| &self.assertions[i])
            .ok_or_else(|| KernelError::UnknownLabel(label.to_string()))
    }

    /// `Γ`: axioms in declaration order, with their assertion indices.
    pub fn axioms(&self) -> impl Iterator<Item = (usize, &Assertion)> {
        self.assertions.iter().enumerate().filter(|(_, a)| a.is_axiom())
    }

    /// `VT`: typecodes of variables.
    pub fn var_typecodes(&self) -> BTreeSet<Sym> {
        self.symbols.variables().filter_map(|v| self.symbols.type_of(v)).collect()
    }

    /// `TC = VT ∪ { type(A) | ⟨D,H,A⟩ ∈ Γ }`.
    pub fn typecodes(&self) -> BTreeSet<Sym> {
        let mut tc = self.var_typecodes();
        tc.extend(self.axioms().map(|(_, a)| a.stmt.concl.typecode()));
        tc
    }

    pub fn var_hyp(&self, var: Sym) -> Expr {
        Expr::var_hyp(&self.symbols, var)
    }

    pub fn display<'a>(&'a self, e: &'a Expr) -> DisplayExpr<'a> {
        e.display(&self.symbols)
    }
}
