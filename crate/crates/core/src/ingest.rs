//! Reader for the Metamath subset `$c $v $f $e $d $a $p $= $. ${ $} $( $)`
//! with normal proofs, plus a canonical writer.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::{
    reduct, verify_proof, Assertion, AssertionKind, DvPair, DvSet, Expr, FormalSystem, KernelError, ProofError,
    ProofStep, ProofTree, Statement, Sym,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestErrorKind {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("unclosed comment")]
    UnclosedComment,
    #[error("unclosed `${{` block")]
    UnclosedBlock,
    #[error("`$}}` without matching `${{`")]
    UnmatchedBlockClose,
    #[error("`{0}` statement not terminated by `$.`")]
    UnterminatedStatement(String),
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("`{0}` needs a label")]
    MissingLabel(String),
    #[error("label `{0}` is not followed by $f, $e, $a or $p")]
    DanglingLabel(String),
    #[error("`{0}` is not a valid label")]
    BadLabel(String),
    #[error("label `{0}` used twice")]
    DuplicateLabel(String),
    #[error("`{0}` is not an active constant or variable")]
    NotDeclared(String),
    #[error("variable `{0}` has no active $f")]
    NoFloat(String),
    #[error("variable `{0}` already has an active $f")]
    FloatRedeclared(String),
    #[error("$f needs exactly a typecode and a variable")]
    BadFloat,
    #[error(
        "variable `{name}` is typed both `{first}` and `{second}`; types must be global \
         (the multi-typed repair renames them to `{first}.{name}` and `{second}.{name}`)"
    )]
    VariableRetyped { name: String, first: String, second: String },
    #[error("$d repeats variable `{0}`")]
    RepeatedDvVariable(String),
    #[error("$p `{0}` has no `$=` proof")]
    MissingProof(String),
    #[error("proof of `{0}` is compressed; only normal proofs are supported")]
    CompressedProof(String),
    #[error("proof of `{proof_of}` cites unknown or inactive label `{label}`")]
    UnknownProofLabel { label: String, proof_of: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct IngestError {
    pub line: usize,
    pub kind: IngestErrorKind,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Rename variables declared with several typecodes to `<tc>.<name>`
    /// instead of failing.
    pub repair_multityped: bool,
}

/// A normal proof resolved against its frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub steps: Vec<ProofStep>,
    /// All `$d` pairs of the frame, dummy variables included. The stored
    /// statement is the reduct of `⟨frame_dv, H, A⟩`.
    pub frame_dv: DvSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    pub system: FormalSystem,
    /// Parallel to `system.assertions()`; `Some` exactly for `$p`.
    proofs: Vec<Option<Proof>>,
    /// Label of the first `$f` of each variable.
    float_labels: BTreeMap<Sym, String>,
}

pub fn parse_database(text: &str) -> Result<Database, IngestError> {
    Database::parse(text, ParseOptions::default())
}

pub fn extract_statement(db: &Database, label: &str) -> Result<Statement, KernelError> {
    db.system.by_label(label).map(|a| a.stmt.clone())
}

impl Database {
    pub fn parse(text: &str, opts: ParseOptions) -> Result<Self, IngestError> {
        let raw = read_statements(text)?;
        let repaired = multityped(&raw, opts)?;
        Builder::new(repaired).run(raw)
    }

    pub fn proof(&self, index: usize) -> Option<&Proof> {
        self.proofs.get(index).and_then(|p| p.as_ref())
    }

    /// `$p` assertions in file order.
    pub fn theorems(&self) -> impl Iterator<Item = (usize, &Assertion, &Proof)> {
        self.proofs.iter().enumerate().filter_map(|(i, p)| p.as_ref().map(|p| (i, self.system.assertion(i), p)))
    }

    pub fn float_label(&self, var: Sym) -> Option<&str> {
        self.float_labels.get(&var).map(|s| s.as_str())
    }

    /// The pre-statement a proof is checked against.
    pub fn proof_target(&self, index: usize) -> Option<Statement> {
        let p = self.proof(index)?;
        let stmt = &self.system.assertion(index).stmt;
        Some(Statement { dv: p.frame_dv.clone(), hyps: stmt.hyps.clone(), concl: stmt.concl.clone() })
    }

    pub fn verify(&self, index: usize) -> Option<Result<ProofTree, ProofError>> {
        let target = self.proof_target(index)?;
        Some(verify_proof(&self.system, &target, &self.proof(index)?.steps))
    }

    /// Verifies every `$p` in order.
    pub fn verify_all(&self) -> Vec<(usize, Result<ProofTree, ProofError>)> {
        self.theorems().map(|(i, _, _)| (i, self.verify(i).expect("theorem"))).collect()
    }

    /// Verified proof trees indexed by assertion, for lemma expansion.
    pub fn proof_trees(&self) -> Vec<Option<ProofTree>> {
        let mut out = vec![None; self.system.assertions().len()];
        for (i, r) in self.verify_all() {
            out[i] = r.ok();
        }
        out
    }

    pub fn step_label(&self, assertion: usize, step: ProofStep) -> String {
        match step {
            ProofStep::Hyp(i) => self.system.assertion(assertion).hyp_labels[i].clone(),
            ProofStep::Float(v) => {
                self.float_label(v).map(str::to_string).unwrap_or_else(|| self.system.symbols.name(v).to_string())
            }
            ProofStep::Assert(i) => self.system.assertion(i).label.clone(),
        }
    }

    /// Canonical text: symbols in interning order (each variable directly
    /// followed by its `$f`), then one block per assertion.
    pub fn to_canonical(&self) -> String {
        let syms = &self.system.symbols;
        let mut out = String::new();
        let mut pending: Vec<&str> = Vec::new();
        let flush = |pending: &mut Vec<&str>, out: &mut String| {
            if !pending.is_empty() {
                let _ = writeln!(out, "$c {} $.", pending.join(" "));
                pending.clear();
            }
        };
        for s in syms.iter() {
            match syms.type_of(s) {
                None => pending.push(syms.name(s)),
                Some(tc) => {
                    flush(&mut pending, &mut out);
                    let name = syms.name(s);
                    let _ = writeln!(out, "$v {name} $.");
                    let label = self.float_label(s).expect("variable without $f");
                    let _ = writeln!(out, "{label} $f {} {name} $.", syms.name(tc));
                }
            }
        }
        flush(&mut pending, &mut out);

        for (i, a) in self.system.assertions().iter().enumerate() {
            let proof = self.proof(i);
            let dv = proof.map(|p| &p.frame_dv).unwrap_or(&a.stmt.dv);
            let block = !dv.is_empty() || !a.stmt.hyps.is_empty();
            let indent = if block { "  " } else { "" };
            if block {
                out.push_str("${\n");
            }
            for p in dv {
                let _ = writeln!(out, "  $d {} {} $.", syms.name(p.first()), syms.name(p.second()));
            }
            for (l, h) in a.hyp_labels.iter().zip(&a.stmt.hyps) {
                let _ = writeln!(out, "  {l} $e {} $.", h.display(syms));
            }
            let concl = a.stmt.concl.display(syms);
            match proof {
                None => {
                    let _ = writeln!(out, "{indent}{} $a {concl} $.", a.label);
                }
                Some(p) => {
                    let labels: Vec<String> = p.steps.iter().map(|s| self.step_label(i, *s)).collect();
                    let _ = writeln!(out, "{indent}{} $p {concl} $= {} $.", a.label, labels.join(" "));
                }
            }
            if block {
                out.push_str("$}\n");
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Debug)]
enum RawKind {
    Open,
    Close,
    C(Vec<String>),
    V(Vec<String>),
    D(Vec<String>),
    F { label: String, body: Vec<String> },
    E { label: String, body: Vec<String> },
    A { label: String, body: Vec<String> },
    P { label: String, body: Vec<String>, proof: Vec<String> },
}

#[derive(Debug)]
struct Raw {
    line: usize,
    kind: RawKind,
}

fn tokens(text: &str) -> Result<Vec<(usize, &str)>, IngestError> {
    let mut out = Vec::new();
    let mut comment_start = None;
    for (n, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            if comment_start.is_some() {
                if tok == "$)" {
                    comment_start = None;
                }
                continue;
            }
            if tok == "$(" {
                comment_start = Some(n + 1);
            } else {
                out.push((n + 1, tok));
            }
        }
    }
    if let Some(line) = comment_start {
        return Err(IngestError { line, kind: IngestErrorKind::UnclosedComment });
    }
    Ok(out)
}

fn valid_label(l: &str) -> bool {
    !l.is_empty() && l.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn read_statements(text: &str) -> Result<Vec<Raw>, IngestError> {
    let toks = tokens(text)?;
    let mut out = Vec::new();
    let mut i = 0;
    let err = |line, kind| Err(IngestError { line, kind });

    // collects tokens up to (not including) one of `ends`
    let body = |i: &mut usize, kw: &str, ends: &[&str]| -> Result<(Vec<String>, &'static str), IngestError> {
        let start_line = toks[*i - 1].0;
        let mut v = Vec::new();
        while *i < toks.len() {
            let (line, t) = toks[*i];
            *i += 1;
            if let Some(end) = ends.iter().find(|e| **e == t) {
                let end: &'static str = if *end == "$." { "$." } else { "$=" };
                return Ok((v, end));
            }
            if t.contains('$') {
                return Err(IngestError { line, kind: IngestErrorKind::UnexpectedToken(t.to_string()) });
            }
            v.push(t.to_string());
        }
        Err(IngestError { line: start_line, kind: IngestErrorKind::UnterminatedStatement(kw.to_string()) })
    };

    while i < toks.len() {
        let (line, t) = toks[i];
        i += 1;
        let kind = match t {
            "${" => RawKind::Open,
            "$}" => RawKind::Close,
            "$c" | "$v" | "$d" => {
                let (v, _) = body(&mut i, t, &["$."])?;
                match t {
                    "$c" => RawKind::C(v),
                    "$v" => RawKind::V(v),
                    _ => RawKind::D(v),
                }
            }
            "$f" | "$e" | "$a" | "$p" => return err(line, IngestErrorKind::MissingLabel(t.to_string())),
            _ if t.contains('$') => return err(line, IngestErrorKind::UnexpectedToken(t.to_string())),
            label => {
                if !valid_label(label) {
                    return err(line, IngestErrorKind::BadLabel(label.to_string()));
                }
                let Some(&(_, kw)) = toks.get(i) else {
                    return err(line, IngestErrorKind::DanglingLabel(label.to_string()));
                };
                i += 1;
                let label = label.to_string();
                match kw {
                    "$f" => RawKind::F { label, body: body(&mut i, kw, &["$."])?.0 },
                    "$e" => RawKind::E { label, body: body(&mut i, kw, &["$."])?.0 },
                    "$a" => RawKind::A { label, body: body(&mut i, kw, &["$."])?.0 },
                    "$p" => {
                        let (b, end) = body(&mut i, kw, &["$.", "$="])?;
                        if end == "$." {
                            return err(line, IngestErrorKind::MissingProof(label));
                        }
                        // proofs may contain `(` `)` for the compressed format
                        let mut proof = Vec::new();
                        loop {
                            let Some(&(l, t)) = toks.get(i) else {
                                return err(line, IngestErrorKind::UnterminatedStatement("$p".into()));
                            };
                            i += 1;
                            if t == "$." {
                                break;
                            }
                            if t.contains('$') {
                                return err(l, IngestErrorKind::UnexpectedToken(t.to_string()));
                            }
                            proof.push(t.to_string());
                        }
                        RawKind::P { label, body: b, proof }
                    }
                    _ => return err(line, IngestErrorKind::DanglingLabel(label)),
                }
            }
        };
        out.push(Raw { line, kind });
    }
    Ok(out)
}

/// Names of variables that occur with more than one typecode; an error
/// unless repair is requested.
fn multityped(raw: &[Raw], opts: ParseOptions) -> Result<HashSet<String>, IngestError> {
    let mut first: HashMap<&str, &str> = HashMap::new();
    let mut out = HashSet::new();
    for r in raw {
        if let RawKind::F { body, .. } = &r.kind {
            if let [tc, v] = body.as_slice() {
                let prev = *first.entry(v.as_str()).or_insert(tc.as_str());
                if prev != tc {
                    if !opts.repair_multityped {
                        return Err(IngestError {
                            line: r.line,
                            kind: IngestErrorKind::VariableRetyped {
                                name: v.clone(),
                                first: prev.to_string(),
                                second: tc.clone(),
                            },
                        });
                    }
                    out.insert(v.clone());
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// frame building

struct ActiveFloat {
    label: String,
    sym: Sym,
    seq: usize,
}

#[derive(Default)]
struct Scope {
    vars: Vec<String>,
    floats: Vec<String>,
    essentials: usize,
    dv: usize,
}

struct Builder {
    repaired: HashSet<String>,
    db: Database,
    labels: HashSet<String>,
    ever_vars: HashSet<String>,
    active_vars: HashSet<String>,
    floats: HashMap<String, ActiveFloat>,
    float_by_label: HashMap<String, String>,
    essentials: Vec<(String, Expr)>,
    dv: Vec<(String, String)>,
    scopes: Vec<Scope>,
    kernel_var: HashMap<(String, Sym), Sym>,
    seq: usize,
}

impl Builder {
    fn new(repaired: HashSet<String>) -> Self {
        Builder {
            repaired,
            db: Database::default(),
            labels: HashSet::new(),
            ever_vars: HashSet::new(),
            active_vars: HashSet::new(),
            floats: HashMap::new(),
            float_by_label: HashMap::new(),
            essentials: Vec::new(),
            dv: Vec::new(),
            scopes: vec![Scope::default()],
            kernel_var: HashMap::new(),
            seq: 0,
        }
    }

    fn run(mut self, raw: Vec<Raw>) -> Result<Database, IngestError> {
        let mut last_open = 0;
        for r in raw {
            let line = r.line;
            if matches!(r.kind, RawKind::Open) {
                last_open = line;
            }
            self.statement(r.kind).map_err(|kind| IngestError { line, kind })?;
        }
        if self.scopes.len() > 1 {
            return Err(IngestError { line: last_open, kind: IngestErrorKind::UnclosedBlock });
        }
        Ok(self.db)
    }

    fn claim_label(&mut self, label: &str) -> Result<(), IngestErrorKind> {
        if !self.labels.insert(label.to_string()) {
            return Err(IngestErrorKind::DuplicateLabel(label.to_string()));
        }
        Ok(())
    }

    fn scope(&mut self) -> &mut Scope {
        self.scopes.last_mut().expect("outer scope")
    }

    fn statement(&mut self, kind: RawKind) -> Result<(), IngestErrorKind> {
        match kind {
            RawKind::Open => self.scopes.push(Scope::default()),
            RawKind::Close => {
                if self.scopes.len() == 1 {
                    return Err(IngestErrorKind::UnmatchedBlockClose);
                }
                let s = self.scopes.pop().expect("scope");
                for v in s.vars {
                    self.active_vars.remove(&v);
                }
                for v in s.floats {
                    if let Some(f) = self.floats.remove(&v) {
                        self.float_by_label.remove(&f.label);
                    }
                }
                self.essentials.truncate(self.essentials.len() - s.essentials);
                self.dv.truncate(self.dv.len() - s.dv);
            }
            RawKind::C(names) => {
                for n in names {
                    if self.ever_vars.contains(&n) {
                        return Err(KernelError::DuplicateSymbol(n).into());
                    }
                    self.db.system.add_constant(&n)?;
                }
            }
            RawKind::V(names) => {
                for n in names {
                    if self.active_vars.contains(&n)
                        || self.db.system.symbols.lookup(&n).is_some_and(|s| self.db.system.symbols.is_constant(s))
                    {
                        return Err(KernelError::DuplicateSymbol(n).into());
                    }
                    self.ever_vars.insert(n.clone());
                    self.active_vars.insert(n.clone());
                    self.scope().vars.push(n);
                }
            }
            RawKind::D(names) => {
                for (i, a) in names.iter().enumerate() {
                    if !self.active_vars.contains(a) {
                        return Err(IngestErrorKind::NotDeclared(a.clone()));
                    }
                    if names[..i].contains(a) {
                        return Err(IngestErrorKind::RepeatedDvVariable(a.clone()));
                    }
                }
                for i in 0..names.len() {
                    for j in i + 1..names.len() {
                        self.dv.push((names[i].clone(), names[j].clone()));
                        self.scope().dv += 1;
                    }
                }
            }
            RawKind::F { label, body } => {
                let [tc, var] = body.as_slice() else {
                    return Err(IngestErrorKind::BadFloat);
                };
                self.claim_label(&label)?;
                let syms = &self.db.system.symbols;
                let tc_sym = syms.lookup(tc).ok_or_else(|| KernelError::UnknownSymbol(tc.clone()))?;
                if !syms.is_constant(tc_sym) {
                    return Err(KernelError::NotAConstant(tc.clone()).into());
                }
                if !self.active_vars.contains(var) {
                    return Err(IngestErrorKind::NotDeclared(var.clone()));
                }
                if self.floats.contains_key(var) {
                    return Err(IngestErrorKind::FloatRedeclared(var.clone()));
                }
                let sym = match self.kernel_var.get(&(var.clone(), tc_sym)) {
                    Some(&s) => s,
                    None => {
                        let kname = if self.repaired.contains(var) { format!("{tc}.{var}") } else { var.clone() };
                        let s = self.db.system.symbols.add_variable(&kname, tc_sym)?;
                        self.kernel_var.insert((var.clone(), tc_sym), s);
                        self.db.float_labels.insert(s, label.clone());
                        s
                    }
                };
                self.seq += 1;
                let seq = self.seq;
                self.floats.insert(var.clone(), ActiveFloat { label: label.clone(), sym, seq });
                self.float_by_label.insert(label, var.clone());
                self.scope().floats.push(var.clone());
            }
            RawKind::E { label, body } => {
                self.claim_label(&label)?;
                let e = self.expr(&body)?;
                self.essentials.push((label, e));
                self.scope().essentials += 1;
            }
            RawKind::A { label, body } => self.assertion(label, body, None)?,
            RawKind::P { label, body, proof } => self.assertion(label, body, Some(proof))?,
        }
        Ok(())
    }

    fn expr(&self, body: &[String]) -> Result<Expr, IngestErrorKind> {
        let syms = &self.db.system.symbols;
        let mut out = Vec::with_capacity(body.len());
        for t in body {
            if self.active_vars.contains(t) {
                let f = self.floats.get(t).ok_or_else(|| IngestErrorKind::NoFloat(t.clone()))?;
                out.push(f.sym);
            } else {
                match syms.lookup(t) {
                    Some(s) if syms.is_constant(s) => out.push(s),
                    _ => return Err(IngestErrorKind::NotDeclared(t.clone())),
                }
            }
        }
        Ok(Expr::new(syms, out)?)
    }

    fn assertion(
        &mut self,
        label: String,
        body: Vec<String>,
        proof: Option<Vec<String>>,
    ) -> Result<(), IngestErrorKind> {
        self.claim_label(&label)?;
        let concl = self.expr(&body)?;
        let hyps: Vec<Expr> = self.essentials.iter().map(|(_, e)| e.clone()).collect();
        let hyp_labels = self.essentials.iter().map(|(l, _)| l.clone()).collect();

        let mut frame_dv = DvSet::new();
        for (a, b) in &self.dv {
            if let (Some(fa), Some(fb)) = (self.floats.get(a), self.floats.get(b)) {
                if let Some(p) = DvPair::new(fa.sym, fb.sym) {
                    frame_dv.insert(p);
                }
            }
        }
        let stmt = reduct(&self.db.system.symbols, &frame_dv, hyps, concl);
        let vars = stmt.vars(&self.db.system.symbols);
        let mut by_seq: Vec<(usize, Sym)> =
            self.floats.values().filter(|f| vars.contains(&f.sym)).map(|f| (f.seq, f.sym)).collect();
        by_seq.sort();
        let mand_vars = by_seq.into_iter().map(|(_, s)| s).collect();

        let kind = if proof.is_some() { AssertionKind::Theorem } else { AssertionKind::Axiom };
        let resolved = match proof {
            None => None,
            Some(labels) => Some(Proof { steps: self.resolve_proof(&label, &labels)?, frame_dv }),
        };
        self.db.system.push_assertion(Assertion { label, kind, stmt, mand_vars, hyp_labels })?;
        self.db.proofs.push(resolved);
        Ok(())
    }

    fn resolve_proof(&self, of: &str, labels: &[String]) -> Result<Vec<ProofStep>, IngestErrorKind> {
        if labels.first().map(|s| s.as_str()) == Some("(") {
            return Err(IngestErrorKind::CompressedProof(of.to_string()));
        }
        labels
            .iter()
            .map(|l| {
                if let Some(var) = self.float_by_label.get(l) {
                    return Ok(ProofStep::Float(self.floats[var].sym));
                }
                if let Some(i) = self.essentials.iter().position(|(el, _)| el == l) {
                    return Ok(ProofStep::Hyp(i));
                }
                match self.db.system.lookup_label(l) {
                    Some(i) => Ok(ProofStep::Assert(i)),
                    None => Err(IngestErrorKind::UnknownProofLabel { label: l.clone(), proof_of: of.to_string() }),
                }
            })
            .collect()
    }
}
