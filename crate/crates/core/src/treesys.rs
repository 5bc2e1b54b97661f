//! Syntax trees over syntax axioms and the tree formal system of an
//! unambiguous system.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::grammar::{induce_cfg, is_syntax_axiom, parse_expression, syntax_axioms, GrammarError, InducedCfg, SynMap};
use crate::kernel::{DvSet, Expr, FormalSystem, ProofStep, Substitution, Sym};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntaxTree {
    Var(Sym),
    /// A syntax axiom (by assertion index); children follow the left-to-right
    /// order of the variables in its conclusion.
    Node {
        axiom: usize,
        children: Vec<SyntaxTree>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("`{label}` takes {expected} arguments, got {found}")]
    Arity { label: String, expected: usize, found: usize },
    #[error("`{label}` slot `{slot}` wants typecode `{expected}`, got `{found}`")]
    SlotType { label: String, slot: String, expected: String, found: String },
    #[error("`{0}` is not a syntax axiom")]
    NotSyntax(String),
    #[error("substitution for `{var}` has typecode `{found}`, expected `{expected}`")]
    LeafType { var: String, expected: String, found: String },
    #[error("`{label}`: `{expr}` does not parse")]
    Unparseable { label: String, expr: String },
    #[error("`{label}`: `{expr}` has several parses")]
    Ambiguous { label: String, expr: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Variables of a syntax axiom's conclusion, left to right: the edge order.
pub fn slots(fs: &FormalSystem, axiom: usize) -> Vec<Sym> {
    let syms = &fs.symbols;
    fs.assertion(axiom).stmt.concl.tail().iter().copied().filter(|&s| syms.is_variable(s)).collect()
}

impl SyntaxTree {
    pub fn leaf(v: Sym) -> Self {
        SyntaxTree::Var(v)
    }

    pub fn node(axiom: usize, children: Vec<SyntaxTree>) -> Self {
        SyntaxTree::Node { axiom, children }
    }

    /// Type of the root.
    pub fn typecode(&self, fs: &FormalSystem) -> Sym {
        match self {
            SyntaxTree::Var(v) => fs.symbols.type_of(*v).expect("variable leaf"),
            SyntaxTree::Node { axiom, .. } => fs.assertion(*axiom).stmt.concl.typecode(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Sym>) {
        match self {
            SyntaxTree::Var(v) => {
                out.insert(*v);
            }
            SyntaxTree::Node { children, .. } => children.iter().for_each(|c| c.collect_vars(out)),
        }
    }

    /// Nodes on the longest root-to-leaf path; a lone leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            SyntaxTree::Var(_) => 1,
            SyntaxTree::Node { children, .. } => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            SyntaxTree::Var(_) => 1,
            SyntaxTree::Node { children, .. } => 1 + children.iter().map(|c| c.size()).sum::<usize>(),
        }
    }

    /// Prefix form `label(child,...)`; leaves print as variable names and
    /// nullary nodes as the bare label.
    pub fn to_prefix(&self, fs: &FormalSystem) -> String {
        let mut s = String::new();
        self.write_prefix(fs, &mut s);
        s
    }

    fn write_prefix(&self, fs: &FormalSystem, out: &mut String) {
        match self {
            SyntaxTree::Var(v) => out.push_str(fs.symbols.name(*v)),
            SyntaxTree::Node { axiom, children } => {
                out.push_str(&fs.assertion(*axiom).label);
                if !children.is_empty() {
                    out.push('(');
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        c.write_prefix(fs, out);
                    }
                    out.push(')');
                }
            }
        }
    }

    /// The syntax proof of `expr_of(self)`: children are emitted in the
    /// axiom's mandatory-variable order, not slot order.
    pub fn to_steps(&self, fs: &FormalSystem) -> Vec<ProofStep> {
        let mut out = Vec::new();
        self.push_steps(fs, &mut out);
        out
    }

    fn push_steps(&self, fs: &FormalSystem, out: &mut Vec<ProofStep>) {
        match self {
            SyntaxTree::Var(v) => out.push(ProofStep::Float(*v)),
            SyntaxTree::Node { axiom, children } => {
                let sl = slots(fs, *axiom);
                for v in &fs.assertion(*axiom).mand_vars {
                    let i = sl.iter().position(|s| s == v).expect("mandatory variable is a slot");
                    children[i].push_steps(fs, out);
                }
                out.push(ProofStep::Assert(*axiom));
            }
        }
    }
}

/// Bottom-up substitution of child yields into each node's conclusion.
pub fn expr_of(t: &SyntaxTree, fs: &FormalSystem) -> Result<Expr, TreeError> {
    let syms = &fs.symbols;
    match t {
        SyntaxTree::Var(v) => Ok(fs.var_hyp(*v)),
        SyntaxTree::Node { axiom, children } => {
            let a = fs.assertion(*axiom);
            if !is_syntax_axiom(fs, *axiom) {
                return Err(TreeError::NotSyntax(a.label.clone()));
            }
            let sl = slots(fs, *axiom);
            if sl.len() != children.len() {
                return Err(TreeError::Arity { label: a.label.clone(), expected: sl.len(), found: children.len() });
            }
            let mut sigma = Substitution::identity();
            for (&v, c) in sl.iter().zip(children) {
                let e = expr_of(c, fs)?;
                let want = syms.type_of(v).expect("slot variable");
                if e.typecode() != want {
                    return Err(TreeError::SlotType {
                        label: a.label.clone(),
                        slot: syms.name(v).to_string(),
                        expected: syms.name(want).to_string(),
                        found: syms.name(e.typecode()).to_string(),
                    });
                }
                sigma.insert(v, e.tail().to_vec());
            }
            Ok(sigma.apply(&a.stmt.concl))
        }
    }
}

/// `σ(a[T₁,…,Tₙ]) = a[σ(T₁),…,σ(Tₙ)]`, variables outside `sigma` fixed.
pub fn tree_subst(
    fs: &FormalSystem,
    sigma: &BTreeMap<Sym, SyntaxTree>,
    t: &SyntaxTree,
) -> Result<SyntaxTree, TreeError> {
    match t {
        SyntaxTree::Var(v) => match sigma.get(v) {
            None => Ok(t.clone()),
            Some(r) => {
                let (want, found) = (t.typecode(fs), r.typecode(fs));
                if want != found {
                    return Err(TreeError::LeafType {
                        var: fs.symbols.name(*v).to_string(),
                        expected: fs.symbols.name(want).to_string(),
                        found: fs.symbols.name(found).to_string(),
                    });
                }
                Ok(r.clone())
            }
        },
        SyntaxTree::Node { axiom, children } => Ok(SyntaxTree::Node {
            axiom: *axiom,
            children: children.iter().map(|c| tree_subst(fs, sigma, c)).collect::<Result<_, _>>()?,
        }),
    }
}

/// `⟨c, T⟩` with `syn(c) = type(T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeExpr {
    pub typecode: Sym,
    pub tree: SyntaxTree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeStatement {
    pub label: String,
    pub dv: DvSet,
    pub hyps: Vec<TreeExpr>,
    pub concl: TreeExpr,
}

/// `⟨TC′, VR′, SA′, Type′, syn′, Γ′⟩`. Tree variables are the variable
/// leaves, so `VR′` is identified with `VR`.
#[derive(Clone, Debug)]
pub struct TreeFormalSystem {
    pub typecodes: BTreeSet<Sym>,
    pub variables: Vec<Sym>,
    pub syntax_axioms: Vec<usize>,
    pub syn: SynMap,
    pub statements: Vec<TreeStatement>,
    /// String label ↔ tree label.
    pub witness: Vec<(String, String)>,
}

/// The unique tree of `syn(e)`.
pub fn tree_of(
    fs: &FormalSystem,
    cfg: &InducedCfg,
    syn: &SynMap,
    label: &str,
    e: &Expr,
) -> Result<TreeExpr, TreeError> {
    let mut parses = parse_expression(cfg, syn, e, 2);
    let show = || e.display(&fs.symbols).to_string();
    match parses.len() {
        0 => Err(TreeError::Unparseable { label: label.to_string(), expr: show() }),
        1 => Ok(TreeExpr { typecode: e.typecode(), tree: parses.pop().expect("one parse") }),
        _ => Err(TreeError::Ambiguous { label: label.to_string(), expr: show() }),
    }
}

pub fn to_tree_system(fs: &FormalSystem, syn: &SynMap) -> Result<TreeFormalSystem, TreeError> {
    let cfg = induce_cfg(fs)?;
    let sa = syntax_axioms(fs);
    let mut statements = Vec::new();
    let mut witness = Vec::new();
    for (i, a) in fs.axioms() {
        witness.push((a.label.clone(), a.label.clone()));
        if sa.contains(&i) {
            continue;
        }
        let hyps = a.stmt.hyps.iter().map(|h| tree_of(fs, &cfg, syn, &a.label, h)).collect::<Result<Vec<_>, _>>()?;
        let concl = tree_of(fs, &cfg, syn, &a.label, &a.stmt.concl)?;
        statements.push(TreeStatement { label: a.label.clone(), dv: a.stmt.dv.clone(), hyps, concl });
    }
    Ok(TreeFormalSystem {
        typecodes: fs.typecodes(),
        variables: fs.symbols.variables().collect(),
        syntax_axioms: sa,
        syn: syn.clone(),
        statements,
        witness,
    })
}

/// All trees of typecode `tc` and depth ≤ `depth` over the given leaves.
pub fn enumerate_trees(fs: &FormalSystem, tc: Sym, depth: usize, leaves: &[Sym]) -> Vec<SyntaxTree> {
    let sa = syntax_axioms(fs);
    let mut memo: BTreeMap<(Sym, usize), Vec<SyntaxTree>> = BTreeMap::new();
    enum_rec(fs, &sa, tc, depth, leaves, &mut memo)
}

fn enum_rec(
    fs: &FormalSystem,
    sa: &[usize],
    tc: Sym,
    depth: usize,
    leaves: &[Sym],
    memo: &mut BTreeMap<(Sym, usize), Vec<SyntaxTree>>,
) -> Vec<SyntaxTree> {
    if let Some(v) = memo.get(&(tc, depth)) {
        return v.clone();
    }
    if depth == 0 {
        return Vec::new();
    }
    let mut out: Vec<SyntaxTree> =
        leaves.iter().filter(|&&v| fs.symbols.type_of(v) == Some(tc)).map(|&v| SyntaxTree::Var(v)).collect();
    for &a in sa {
        if fs.assertion(a).stmt.concl.typecode() != tc {
            continue;
        }
        let sl = slots(fs, a);
        let options: Vec<Vec<SyntaxTree>> = sl
            .iter()
            .map(|v| enum_rec(fs, sa, fs.symbols.type_of(*v).expect("slot"), depth - 1, leaves, memo))
            .collect();
        let mut combos: Vec<Vec<SyntaxTree>> = vec![Vec::new()];
        for opts in &options {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    opts.iter().map(move |o| {
                        let mut c = c.clone();
                        c.push(o.clone());
                        c
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().map(|children| SyntaxTree::Node { axiom: a, children }));
    }
    memo.insert((tc, depth), out.clone());
    out
}
