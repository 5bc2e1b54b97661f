use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::expr::{check_dv_transfer, DvSet, Expr, Substitution};
use super::symbol::Sym;
use super::verify::{ProofNode, ProofTree};
use super::FormalSystem;

/// How an expression first entered the closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    Hyp(usize),
    VarHyp(Sym),
    Axiom { index: usize, subst: Substitution },
}

#[derive(Clone, Debug)]
pub struct ClosureResult {
    pub exprs: BTreeSet<Expr>,
    pub derivations: HashMap<Expr, Derivation>,
    /// Rounds actually run.
    pub rounds: usize,
    /// `false` when the fuel ran out while the last round still added
    /// expressions. The set is sound either way.
    pub saturated: bool,
}

impl ClosureResult {
    pub fn contains(&self, e: &Expr) -> bool {
        self.exprs.contains(e)
    }

    /// Rebuilds the proof tree recorded for `e`.
    pub fn proof_tree(&self, fs: &FormalSystem, e: &Expr) -> Option<ProofTree> {
        let leaf = |node| Some(ProofTree::leaf(node, e.clone()));
        match self.derivations.get(e)? {
            Derivation::Hyp(i) => leaf(ProofNode::Hyp(*i)),
            Derivation::VarHyp(v) => leaf(ProofNode::VarHyp(*v)),
            Derivation::Axiom { index, subst } => {
                let a = fs.assertion(*index);
                let mut children = Vec::new();
                for &v in &a.mand_vars {
                    children.push(self.proof_tree(fs, &subst.apply_var_hyp(&fs.symbols, v))?);
                }
                for h in &a.stmt.hyps {
                    children.push(self.proof_tree(fs, &subst.apply(h))?);
                }
                Some(ProofTree {
                    node: ProofNode::Assert { index: *index, subst: subst.clone() },
                    children,
                    conclusion: e.clone(),
                })
            }
        }
    }
}

/// Bounded forward saturation of `hyps` and all variable hypotheses under the
/// axioms of `fs`, relative to the dv set `dv`.
///
/// Each round instantiates every axiom with every substitution whose
/// variable images `σ(vh_v)` are already in the set, keeping conclusions of
/// at most `max_len` symbols. Every returned expression is in the true
/// closure; all closure members reachable within `fuel` rounds through
/// expressions of length `≤ max_len` are returned.
pub fn closure_enum(fs: &FormalSystem, dv: &DvSet, hyps: &[Expr], fuel: usize, max_len: usize) -> ClosureResult {
    let syms = &fs.symbols;
    let mut exprs = BTreeSet::new();
    let mut derivations = HashMap::new();
    let mut by_type: BTreeMap<Sym, Vec<Expr>> = BTreeMap::new();

    let mut add = |e: Expr, d: Derivation, exprs: &mut BTreeSet<Expr>, by_type: &mut BTreeMap<Sym, Vec<Expr>>| {
        if e.len() <= max_len && exprs.insert(e.clone()) {
            by_type.entry(e.typecode()).or_default().push(e.clone());
            derivations.insert(e, d);
            true
        } else {
            false
        }
    };

    for (i, h) in hyps.iter().enumerate() {
        add(h.clone(), Derivation::Hyp(i), &mut exprs, &mut by_type);
    }
    for v in syms.variables() {
        add(fs.var_hyp(v), Derivation::VarHyp(v), &mut exprs, &mut by_type);
    }

    let mut rounds = 0;
    let mut saturated = false;
    while rounds < fuel {
        rounds += 1;
        let mut fresh: Vec<(Expr, Derivation)> = Vec::new();
        for (index, ax) in fs.axioms() {
            let vars = &ax.mand_vars;
            let occurrences: Vec<usize> =
                vars.iter().map(|v| ax.stmt.concl.symbols().iter().filter(|s| *s == v).count()).collect();
            let base_len = ax.stmt.concl.len() - occurrences.iter().sum::<usize>();
            let candidates: Vec<&[Expr]> = vars
                .iter()
                .map(|v| {
                    let tc = syms.type_of(*v).expect("variable");
                    by_type.get(&tc).map(|x| x.as_slice()).unwrap_or(&[])
                })
                .collect();
            let mut chosen: Vec<&[Sym]> = Vec::with_capacity(vars.len());
            enumerate(&candidates, &occurrences, base_len, max_len, &mut chosen, &mut |tails| {
                let sigma: Substitution = vars.iter().zip(tails).map(|(v, t)| (*v, t.to_vec())).collect();
                if !ax.stmt.hyps.iter().all(|h| exprs.contains(&sigma.apply(h))) {
                    return;
                }
                if !check_dv_transfer(syms, dv, &ax.stmt.dv, &sigma).is_empty() {
                    return;
                }
                let concl = sigma.apply(&ax.stmt.concl);
                if !exprs.contains(&concl) {
                    fresh.push((concl, Derivation::Axiom { index, subst: sigma }));
                }
            });
        }
        let mut grew = false;
        for (e, d) in fresh {
            grew |= add(e, d, &mut exprs, &mut by_type);
        }
        if !grew {
            saturated = true;
            break;
        }
    }
    if fuel == 0 {
        saturated = false;
    }
    ClosureResult { exprs, derivations, rounds, saturated }
}

fn enumerate<'a>(
    candidates: &[&'a [Expr]],
    occurrences: &[usize],
    len_so_far: usize,
    max_len: usize,
    chosen: &mut Vec<&'a [Sym]>,
    visit: &mut dyn FnMut(&[&'a [Sym]]),
) {
    let k = chosen.len();
    if k == candidates.len() {
        visit(chosen);
        return;
    }
    for e in candidates[k] {
        let tail = e.tail();
        let len = len_so_far + occurrences[k] * tail.len();
        if len > max_len {
            continue;
        }
        chosen.push(tail);
        enumerate(candidates, occurrences, len, max_len, chosen, visit);
        chosen.pop();
    }
}
