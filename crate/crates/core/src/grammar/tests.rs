use super::*;
use crate::corpus::{MIU_MM, PROP_MM};
use crate::ingest::parse_database;
use crate::treesys::{enumerate_trees, expr_of};
use proptest::prelude::*;

fn system(text: &str) -> FormalSystem {
    parse_database(text).unwrap().system
}

fn labels(fs: &FormalSystem, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| fs.assertion(i).label.clone()).collect()
}

fn prefix(fs: &FormalSystem, t: &[SyntaxTree]) -> Vec<String> {
    t.iter().map(|t| t.to_prefix(fs)).collect()
}

fn syn_wff(fs: &FormalSystem) -> SynMap {
    SynMap::from_names(fs, &[("|-", "wff")]).unwrap()
}

/// MIU plus the juxtaposition production `wff x y`.
fn miu_xy() -> FormalSystem {
    let mut fs = system(MIU_MM);
    fs.add_axiom("wxy", &[], &[], "wff x y").unwrap();
    fs
}

#[test]
fn syntax_axiom_examples() {
    let prop = system(PROP_MM);
    assert_eq!(labels(&prop, &syntax_axioms(&prop)), ["wn", "wi"]);
    let miu = system(MIU_MM);
    assert_eq!(labels(&miu, &syntax_axioms(&miu)), ["we", "wM", "wI", "wU"]);
    let none = system("$c |- a $. ax $a |- a $.");
    assert!(syntax_axioms(&none).is_empty());
    // repeated variable and nonempty hypotheses disqualify
    let odd = system(
        "$c wff $. $v p $. wp $f wff p $. rep $a wff p p $.
         ${ h $e wff $. hy $a wff p $. $}",
    );
    assert!(syntax_axioms(&odd).is_empty());
}

#[test]
fn weak_grammaticality_examples() {
    assert!(is_weakly_grammatical(&system(PROP_MM)).ok);
    assert!(is_weakly_grammatical(&system(MIU_MM)).ok);
    let fs = system("$c wff $. $v p $. wp $f wff p $. rep $a wff p p $.");
    let r = is_weakly_grammatical(&fs);
    assert!(!r.ok);
    assert_eq!(labels(&fs, &r.unmatched), ["rep"]);
    assert!(matches!(induce_cfg(&fs), Err(GrammarError::NotWeaklyGrammatical(l)) if l == ["rep"]));

    // a non-syntax VT axiom covered by a syntax axiom instance
    let fs = system("$c wff -. $. $v p $. wp $f wff p $. wn $a wff -. p $. wnn $a wff -. -. p $.");
    assert!(is_weakly_grammatical(&fs).ok);
}

#[test]
fn induced_productions() {
    let prop = system(PROP_MM);
    let cfg = induce_cfg(&prop).unwrap();
    let s = |n: &str| prop.symbols.lookup(n).unwrap();
    let wff = s("wff");
    assert_eq!(cfg.nonterminals.iter().copied().collect::<Vec<_>>(), [wff]);
    assert_eq!(cfg.productions.len(), 2);
    assert_eq!(cfg.productions[0].rhs, [GSym::T(s("-.")), GSym::N(wff)]);
    assert_eq!(
        cfg.productions[1].rhs,
        [GSym::T(s("(")), GSym::N(wff), GSym::T(s("->")), GSym::N(wff), GSym::T(s(")"))]
    );
    assert!(cfg.terminals.contains(&s("|-")) && !cfg.terminals.contains(&wff));

    let miu = system(MIU_MM);
    let cfg = induce_cfg(&miu).unwrap();
    let s = |n: &str| miu.symbols.lookup(n).unwrap();
    let wff = s("wff");
    let rhs: Vec<Vec<GSym>> = cfg.productions.iter().map(|p| p.rhs.clone()).collect();
    assert_eq!(
        rhs,
        [
            vec![],
            vec![GSym::N(wff), GSym::T(s("M"))],
            vec![GSym::N(wff), GSym::T(s("I"))],
            vec![GSym::N(wff), GSym::T(s("U"))],
        ]
    );
    assert!(cfg.productions.iter().all(|p| p.lhs == wff));

    let empty = system("$c |- a $. ax $a |- a $.");
    assert!(induce_cfg(&empty).unwrap().productions.is_empty());
}

#[test]
fn vt_constant_inside_syntax_axiom_stays_terminal() {
    // `wff` appears as a terminal in `wq`; the grammar symbol keeps it apart
    // from the nonterminal of the same name.
    let fs = system("$c wff ! $. $v p $. wp $f wff p $. wq $a wff ! wff p $.");
    let cfg = induce_cfg(&fs).unwrap();
    let wff = fs.symbols.lookup("wff").unwrap();
    assert_eq!(cfg.productions[0].rhs[1], GSym::T(wff));
    let syn = SynMap::infer(&fs).unwrap();
    let e = fs.parse_expr("wff ! wff ! wff p").unwrap();
    assert_eq!(prefix(&fs, &parse_expression(&cfg, &syn, &e, 2)), ["wq(wq(p))"]);
}

#[test]
fn parse_examples() {
    let prop = system(PROP_MM);
    let cfg = induce_cfg(&prop).unwrap();
    let syn = syn_wff(&prop);
    let e = prop.parse_expr("|- ( ph -> ( ps -> ph ) )").unwrap();
    assert_eq!(prefix(&prop, &parse_expression(&cfg, &syn, &e, 2)), ["wi(ph,wi(ps,ph))"]);
    let e = prop.parse_expr("wff ph").unwrap();
    assert_eq!(parse_expression(&cfg, &syn, &e, 2), [SyntaxTree::Var(prop.symbols.lookup("ph").unwrap())]);
    let e = prop.parse_expr("wff ( ph -> )").unwrap();
    assert!(parse_expression(&cfg, &syn, &e, 2).is_empty());

    let miu = system(MIU_MM);
    let cfg = induce_cfg(&miu).unwrap();
    let syn = syn_wff(&miu);
    let e = miu.parse_expr("|- M x").unwrap();
    assert!(parse_expression(&cfg, &syn, &e, 2).is_empty());
    let e = miu.parse_expr("|- x I U").unwrap();
    assert_eq!(prefix(&miu, &parse_expression(&cfg, &syn, &e, 2)), ["wU(wI(x))"]);
    let e = miu.parse_expr("wff M I").unwrap();
    assert_eq!(prefix(&miu, &parse_expression(&cfg, &syn, &e, 2)), ["wI(wM(we))"]);
    let e = miu.parse_expr("wff").unwrap();
    assert_eq!(prefix(&miu, &parse_expression(&cfg, &syn, &e, 2)), ["we"]);
}

#[test]
fn max_parses_caps_the_result() {
    let fs = miu_xy();
    let cfg = induce_cfg(&fs).unwrap();
    let syn = syn_wff(&fs);
    let e = fs.parse_expr("wff M I U").unwrap();
    assert_eq!(parse_expression(&cfg, &syn, &e, 1).len(), 1);
    assert_eq!(parse_expression(&cfg, &syn, &e, 2).len(), 2);
    assert_eq!(parse_expression(&cfg, &syn, &e, 3).len(), 3);
    // every returned tree is a genuine, distinct parse
    let trees = parse_expression(&cfg, &syn, &e, 20);
    let distinct: BTreeSet<&SyntaxTree> = trees.iter().collect();
    assert_eq!(distinct.len(), trees.len());
    for t in &trees {
        assert_eq!(expr_of(t, &fs).unwrap(), e);
    }
}

#[test]
fn grammaticality_examples() {
    let prop = system(PROP_MM);
    let r = is_grammatical(&prop, &syn_wff(&prop)).unwrap();
    assert!(r.grammatical && r.unparseable.is_empty() && r.non_syntax_vt_axioms.is_empty());

    let miu = system(MIU_MM);
    let r = is_grammatical(&miu, &syn_wff(&miu)).unwrap();
    assert!(r.weakly_grammatical && !r.grammatical);
    let ii = r.unparseable.iter().find(|u| u.label == "II" && u.hyp == Some(0)).unwrap();
    assert_eq!(ii.expr.display(&miu.symbols).to_string(), "|- M x");
    // `I_` is fine: `x I` and `x I U` are wffs built from the right
    assert!(r.unparseable.iter().all(|u| u.label != "I_"));

    let empty = FormalSystem::default();
    let r = is_grammatical(&empty, &SynMap::infer(&empty).unwrap()).unwrap();
    assert!(r.grammatical);
}

#[test]
fn syn_map_is_checked() {
    let prop = system(PROP_MM);
    assert!(SynMap::from_names(&prop, &[("|-", "|-")]).is_err());
    assert!(SynMap::from_names(&prop, &[("wff", "|-")]).is_err());
    assert!(SynMap::from_names(&prop, &[]).is_err(), "|- needs a value");
    let syn = SynMap::infer(&prop).unwrap();
    assert_eq!(syn, syn_wff(&prop));
    let wff = prop.symbols.lookup("wff").unwrap();
    assert_eq!(syn.get(wff), wff);
}

#[test]
fn ambiguity_examples() {
    let prop = system(PROP_MM);
    let cfg = induce_cfg(&prop).unwrap();
    let syn = syn_wff(&prop);
    let corpus: Vec<Expr> = prop.axioms().map(|(_, a)| a.stmt.concl.clone()).collect();
    let r = ambiguity_scan(&cfg, &syn, &corpus, 8);
    assert!(!r.ambiguous(), "{:?}", r.witnesses);
    assert_eq!(r.verdict(), "no ambiguity found up to length 8");
    assert!(r.explored > 0);

    let fs = miu_xy();
    let cfg = induce_cfg(&fs).unwrap();
    let r = ambiguity_scan(&cfg, &syn_wff(&fs), &[], 3);
    assert!(r.ambiguous());
    let w = &r.witnesses[0];
    assert_ne!(w.trees[0], w.trees[1]);
    for t in &w.trees {
        assert_eq!(expr_of(t, &fs).unwrap().tail(), w.tokens.as_slice());
    }

    let single = system("$c wff a $. $v p $. wp $f wff p $. wa $a wff a $.");
    let cfg = induce_cfg(&single).unwrap();
    let r = ambiguity_scan(&cfg, &SynMap::infer(&single).unwrap(), &[], 6);
    assert!(!r.ambiguous());
}

#[test]
fn corpus_ambiguity_is_reported() {
    let fs = miu_xy();
    let cfg = induce_cfg(&fs).unwrap();
    let e = fs.parse_expr("wff M I").unwrap();
    let r = ambiguity_scan(&cfg, &syn_wff(&fs), &[e], 0);
    assert!(r.witnesses.iter().any(|w| w.from_corpus));
}

/// Independent count: number of distinct trees for an expression by
/// brute force over enumerated trees of bounded depth.
#[test]
fn prop_strings_have_unique_trees_by_enumeration() {
    let prop = system(PROP_MM);
    let wff = prop.symbols.lookup("wff").unwrap();
    let ph = prop.symbols.lookup("ph").unwrap();
    let trees = enumerate_trees(&prop, wff, 4, &[ph]);
    let mut seen = std::collections::HashMap::new();
    for t in &trees {
        let e = expr_of(t, &prop).unwrap();
        assert!(seen.insert(e, t.clone()).is_none(), "two trees share a yield");
    }
}

#[test]
fn ambiguity_scan_is_monotone() {
    let fs = miu_xy();
    let cfg = induce_cfg(&fs).unwrap();
    let syn = syn_wff(&fs);
    let mut found_at = None;
    for l in 0..5 {
        let r = ambiguity_scan(&cfg, &syn, &[], l);
        if let Some(l0) = found_at {
            assert!(r.ambiguous(), "lost evidence at {l} after {l0}");
        } else if r.ambiguous() {
            found_at = Some(l);
        }
    }
    assert!(found_at.is_some());

    let prop = system(PROP_MM);
    let cfg = induce_cfg(&prop).unwrap();
    for l in 0..7 {
        assert!(!ambiguity_scan(&cfg, &syn_wff(&prop), &[], l).ambiguous());
    }
}

fn shuffled_prop(order: &[usize]) -> String {
    let axioms = [
        "wn $a wff -. ph $.",
        "wi $a wff ( ph -> ps ) $.",
        "ax-1 $a |- ( ph -> ( ps -> ph ) ) $.",
        "ax-3 $a |- ( ( -. ph -> -. ps ) -> ( ps -> ph ) ) $.",
        "${ mp.1 $e |- ph $. mp.2 $e |- ( ph -> ps ) $. ax-mp $a |- ps $. $}",
        "rep $a wff ( ph -> ph ) $.",
    ];
    let mut s = String::from("$c ( ) -> -. wff |- $. $v ph ps $. wph $f wff ph $. wps $f wff ps $.\n");
    for &i in order {
        s += axioms[i];
        s += "\n";
    }
    s
}

proptest! {
    #[test]
    fn syntax_axioms_stable_under_reordering(order in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let fs = system(&shuffled_prop(&order));
        let mut got = labels(&fs, &syntax_axioms(&fs));
        got.sort();
        prop_assert_eq!(got, ["wi", "wn"]);
        prop_assert!(is_weakly_grammatical(&fs).ok);
    }

    /// Every parse flattens back to `syn(e)`, and generated yields parse.
    #[test]
    fn parses_flatten_to_input(depth in 1usize..4, pick in 0usize..10_000) {
        let prop = system(PROP_MM);
        let cfg = induce_cfg(&prop).unwrap();
        let syn = syn_wff(&prop);
        let wff = prop.symbols.lookup("wff").unwrap();
        let leaves: Vec<Sym> = ["ph", "ps"].iter().map(|n| prop.symbols.lookup(n).unwrap()).collect();
        let trees = enumerate_trees(&prop, wff, depth, &leaves);
        let t = &trees[pick % trees.len()];
        let e = expr_of(t, &prop).unwrap();
        let as_thm = e.with_typecode(prop.symbols.lookup("|-").unwrap());
        for input in [&e, &as_thm] {
            let parses = parse_expression(&cfg, &syn, input, 3);
            prop_assert!(!parses.is_empty());
            for p in &parses {
                prop_assert_eq!(&expr_of(p, &prop).unwrap(), &syn.apply(input));
            }
        }
    }

    /// Syntax axiom conclusions always parse (including unit and cyclic
    /// productions); other `VT` axioms need only be weakly grammatical.
    #[test]
    fn syntax_axiom_conclusions_parse(extra in prop::collection::vec(prop::collection::vec(0usize..4, 0..5), 0..4)) {
        let toks = ["-.", "ph", "ps", "&"];
        let mut text = String::from("$c -. & wff |- $. $v ph ps $. wph $f wff ph $. wps $f wff ps $.
            wn $a wff -. ph $. wa $a wff & ph ps $.\n");
        for (i, body) in extra.iter().enumerate() {
            let b: Vec<&str> = body.iter().map(|&k| toks[k]).collect();
            text += &format!("x{i} $a wff {} $.\n", b.join(" "));
        }
        let fs = system(&text);
        let syn = SynMap::infer(&fs).unwrap();
        if is_weakly_grammatical(&fs).ok {
            let cfg = induce_cfg(&fs).unwrap();
            for i in syntax_axioms(&fs) {
                let e = &fs.assertion(i).stmt.concl;
                prop_assert!(!parse_expression(&cfg, &syn, e, 1).is_empty());
            }
        }
    }
}
