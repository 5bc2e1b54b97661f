use std::fmt;

use thiserror::Error;

use super::expr::{check_dv_transfer, DvSet, Expr, Statement, Substitution};
use super::symbol::Sym;
use super::FormalSystem;

/// One resolved label of a normal (uncompressed) proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProofStep {
    /// Essential hypothesis of the target, by position.
    Hyp(usize),
    /// Variable hypothesis `type(v) v`.
    Float(Sym),
    /// Axiom or earlier theorem, by assertion index.
    Assert(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofNode {
    Hyp(usize),
    VarHyp(Sym),
    Assert { index: usize, subst: Substitution },
}

/// Proof tree whose yield is `conclusion`. Children of an assertion node are
/// the mandatory variable slots (in mandatory order) followed by the
/// essential hypotheses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub node: ProofNode,
    pub children: Vec<ProofTree>,
    pub conclusion: Expr,
}

impl ProofTree {
    pub fn leaf(node: ProofNode, conclusion: Expr) -> Self {
        ProofTree { node, children: Vec::new(), conclusion }
    }

    /// Flattens the tree back into a normal proof.
    pub fn to_steps(&self) -> Vec<ProofStep> {
        let mut out = Vec::new();
        self.push_steps(&mut out);
        out
    }

    fn push_steps(&self, out: &mut Vec<ProofStep>) {
        for c in &self.children {
            c.push_steps(out);
        }
        out.push(match &self.node {
            ProofNode::Hyp(i) => ProofStep::Hyp(*i),
            ProofNode::VarHyp(v) => ProofStep::Float(*v),
            ProofNode::Assert { index, .. } => ProofStep::Assert(*index),
        });
    }

    /// Number of assertion nodes satisfying `pred`.
    pub fn count_assertions(&self, pred: &dyn Fn(usize) -> bool) -> usize {
        let own = match &self.node {
            ProofNode::Assert { index, .. } if pred(*index) => 1,
            _ => 0,
        };
        own + self.children.iter().map(|c| c.count_assertions(pred)).sum::<usize>()
    }

    /// Replaces every use of a theorem by the instantiated proof of that
    /// theorem, leaving a tree whose internal nodes are axioms only.
    /// `proofs[i]` must hold the verified tree of assertion `i` when it is a
    /// theorem.
    pub fn expand_theorems(&self, fs: &FormalSystem, proofs: &[Option<ProofTree>]) -> ProofTree {
        let children: Vec<ProofTree> = self.children.iter().map(|c| c.expand_theorems(fs, proofs)).collect();
        match &self.node {
            ProofNode::Assert { index, subst } if !fs.assertion(*index).is_axiom() => {
                let assertion = fs.assertion(*index);
                let inner = proofs.get(*index).and_then(|p| p.as_ref()).expect("theorem used without a verified proof");
                let nvars = assertion.mand_vars.len();
                let floats: Vec<(Sym, &ProofTree)> =
                    assertion.mand_vars.iter().copied().zip(children[..nvars].iter()).collect();
                let hyps = &children[nvars..];
                let expanded = inner.instantiate(subst, hyps, &floats);
                // the instantiated lemma proof may itself cite theorems
                expanded.expand_theorems(fs, proofs)
            }
            node => ProofTree { node: node.clone(), children, conclusion: self.conclusion.clone() },
        }
    }

    /// Applies `sigma` throughout, grafting `hyps[i]` at `Hyp(i)` leaves and
    /// `floats[v]` at `VarHyp(v)` leaves.
    fn instantiate(&self, sigma: &Substitution, hyps: &[ProofTree], floats: &[(Sym, &ProofTree)]) -> ProofTree {
        match &self.node {
            ProofNode::Hyp(i) => hyps[*i].clone(),
            ProofNode::VarHyp(v) => match floats.iter().find(|(w, _)| w == v) {
                Some((_, t)) => (*t).clone(),
                None => self.clone(),
            },
            ProofNode::Assert { index, subst } => ProofTree {
                node: ProofNode::Assert { index: *index, subst: subst.then(sigma) },
                children: self.children.iter().map(|c| c.instantiate(sigma, hyps, floats)).collect(),
                conclusion: sigma.apply(&self.conclusion),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofErrorKind {
    StackUnderflow { label: String },
    UnknownHypothesis(usize),
    NotAVariable,
    UnknownAssertion(usize),
    TypeMismatch { var: String, expected: String, found: String },
    HypothesisMismatch { label: String, expected: String, found: String },
    DvViolation { label: String, detail: String },
    FinalStack(usize),
    WrongConclusion { expected: String, found: String },
}

impl fmt::Display for ProofErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProofErrorKind::StackUnderflow { label } => write!(f, "stack underflow at `{label}`"),
            ProofErrorKind::UnknownHypothesis(i) => write!(f, "no essential hypothesis #{i}"),
            ProofErrorKind::NotAVariable => write!(f, "variable hypothesis of a constant"),
            ProofErrorKind::UnknownAssertion(i) => write!(f, "no assertion #{i}"),
            ProofErrorKind::TypeMismatch { var, expected, found } => {
                write!(f, "type mismatch for `{var}`: expected {expected}, found `{found}`")
            }
            ProofErrorKind::HypothesisMismatch { label, expected, found } => {
                write!(f, "hypothesis mismatch in `{label}`: expected `{expected}`, found `{found}`")
            }
            ProofErrorKind::DvViolation { label, detail } => {
                write!(f, "dv violation in `{label}`: {detail}")
            }
            ProofErrorKind::FinalStack(n) => write!(f, "final stack holds {n} entries, expected 1"),
            ProofErrorKind::WrongConclusion { expected, found } => {
                write!(f, "wrong conclusion: expected `{expected}`, proved `{found}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("step {step}: {kind}")]
pub struct ProofError {
    /// Zero-based index into the proof; equal to the proof length for errors
    /// detected after the last step.
    pub step: usize,
    pub kind: ProofErrorKind,
}

/// Replays a normal proof on a stack and returns the proof tree of
/// `target.concl`. Distinct-variable side conditions of every cited assertion
/// are checked against `target.dv`.
pub fn verify_proof(fs: &FormalSystem, target: &Statement, proof: &[ProofStep]) -> Result<ProofTree, ProofError> {
    let tree = replay(fs, &target.dv, &target.hyps, proof)?;
    if tree.conclusion != target.concl {
        let show = |e: &Expr| e.display(&fs.symbols).to_string();
        return Err(ProofError {
            step: proof.len(),
            kind: ProofErrorKind::WrongConclusion { expected: show(&target.concl), found: show(&tree.conclusion) },
        });
    }
    Ok(tree)
}

/// Like [`verify_proof`] without a fixed conclusion: returns whatever the
/// proof proves from `hyps` relative to `dv`.
pub fn replay(fs: &FormalSystem, dv: &DvSet, hyps: &[Expr], proof: &[ProofStep]) -> Result<ProofTree, ProofError> {
    let syms = &fs.symbols;
    let show = |e: &Expr| e.display(syms).to_string();
    let mut stack: Vec<ProofTree> = Vec::new();
    for (step, item) in proof.iter().enumerate() {
        let err = |kind| ProofError { step, kind };
        match *item {
            ProofStep::Hyp(i) => {
                let h = hyps.get(i).ok_or_else(|| err(ProofErrorKind::UnknownHypothesis(i)))?;
                stack.push(ProofTree::leaf(ProofNode::Hyp(i), h.clone()));
            }
            ProofStep::Float(v) => {
                if !syms.is_variable(v) {
                    return Err(err(ProofErrorKind::NotAVariable));
                }
                stack.push(ProofTree::leaf(ProofNode::VarHyp(v), fs.var_hyp(v)));
            }
            ProofStep::Assert(index) => {
                if index >= fs.assertions().len() {
                    return Err(err(ProofErrorKind::UnknownAssertion(index)));
                }
                let a = fs.assertion(index);
                let nvars = a.mand_vars.len();
                let needed = nvars + a.stmt.hyps.len();
                if stack.len() < needed {
                    return Err(err(ProofErrorKind::StackUnderflow { label: a.label.clone() }));
                }
                let args = stack.split_off(stack.len() - needed);
                let mut sigma = Substitution::identity();
                for (&v, arg) in a.mand_vars.iter().zip(&args) {
                    let tc = syms.type_of(v).expect("mandatory variable");
                    if arg.conclusion.typecode() != tc {
                        return Err(err(ProofErrorKind::TypeMismatch {
                            var: syms.name(v).to_string(),
                            expected: syms.name(tc).to_string(),
                            found: show(&arg.conclusion),
                        }));
                    }
                    sigma.insert(v, arg.conclusion.tail().to_vec());
                }
                for (h, arg) in a.stmt.hyps.iter().zip(&args[nvars..]) {
                    let expected = sigma.apply(h);
                    if expected != arg.conclusion {
                        return Err(err(ProofErrorKind::HypothesisMismatch {
                            label: a.label.clone(),
                            expected: show(&expected),
                            found: show(&arg.conclusion),
                        }));
                    }
                }
                let violations = check_dv_transfer(syms, dv, &a.stmt.dv, &sigma);
                if let Some(v) = violations.first() {
                    return Err(err(ProofErrorKind::DvViolation { label: a.label.clone(), detail: v.describe(syms) }));
                }
                let conclusion = sigma.apply(&a.stmt.concl);
                stack.push(ProofTree { node: ProofNode::Assert { index, subst: sigma }, children: args, conclusion });
            }
        }
    }
    let end = proof.len();
    if stack.len() != 1 {
        return Err(ProofError { step: end, kind: ProofErrorKind::FinalStack(stack.len()) });
    }
    Ok(stack.pop().expect("singleton"))
}
