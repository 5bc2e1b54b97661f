use super::*;
use crate::corpus::{MICRO_MM, MIU_MM, PROP_MM, PROP_MODEL};
use crate::ingest::parse_database;
use crate::kernel::replay;
use crate::modelcheck::{is_true, load_model};
use proptest::prelude::*;

fn object(text: &str) -> ObjectSystem {
    ObjectSystem::new(&parse_database(text).unwrap()).unwrap()
}

fn sym(os: &ObjectSystem, n: &str) -> Sym {
    os.obj.symbols.lookup(n).unwrap()
}

#[test]
fn object_variables_are_named_by_typecode() {
    let mut os = object(PROP_MM);
    let wff = sym(&os, "wff");
    let v0 = os.object_var(wff, 0);
    assert_eq!(os.obj.symbols.name(v0), "wff0");
    assert_eq!(os.object_var(wff, 0), v0);
    assert!(os.is_object_var(v0));
    assert!(!os.is_object_var(sym(&os, "ph")));
    assert_eq!(os.obj.symbols.type_of(v0), Some(wff));
    // base assertions keep their indices
    assert_eq!(os.obj.lookup_label("ax-mp"), os.base.lookup_label("ax-mp"));
    let e = os.parse("|- ( wff3 -> -. wff0 )").unwrap();
    assert_eq!(os.show(&e), "|- ( wff3 -> -. wff0 )");
}

#[test]
fn identity_is_an_object_theorem() {
    let mut os = object(PROP_MM);
    let e = os.parse("|- ( wff0 -> wff0 )").unwrap();
    let v = membership_bounded(&mut os, &e, 10_000).unwrap();
    assert_eq!(v.status, Status::Theorem);
    assert!(v.steps > 0 && v.steps <= 10_000);
    let w = v.witness.as_ref().unwrap();
    assert_eq!(w.conclusion, e);
    // ax-1, ax-1, ax-2 and two uses of ax-mp
    assert_eq!(v.logical_steps(&os), Some(5));
    // only axioms remain, and the kernel accepts the witness independently
    assert!(w.count_assertions(&|i| !os.obj.assertion(i).is_axiom()) == 0);
    let again = replay(&os.obj, &DvSet::new(), &[], &w.to_steps()).unwrap();
    assert_eq!(again.conclusion, e);
}

#[test]
fn zero_budget_is_unknown() {
    let mut os = object(PROP_MM);
    let e = os.parse("|- ( wff0 -> wff0 )").unwrap();
    let v = membership_bounded(&mut os, &e, 0).unwrap();
    assert_eq!((v.status, v.steps), (Status::Unknown, 0));
    assert!(v.witness.is_none());
}

#[test]
fn non_theorems_are_not_confirmed() {
    let mut os = object(PROP_MM);
    let e = os.parse("|- wff0").unwrap();
    let v = membership_bounded(&mut os, &e, 2_000).unwrap();
    // prop is not length-monotone (ax-mp drops its minor), so no refutation
    assert!(!length_monotone(&os.obj));
    assert_eq!(v.status, Status::Unknown);
    assert!(v.steps <= 2_000);

    let mut miu = object(MIU_MM);
    assert!(!length_monotone(&miu.obj));
    let e = miu.parse("|- M U").unwrap();
    let v = membership_bounded(&mut miu, &e, 10_000).unwrap();
    assert_eq!(v.status, Status::Unknown);
}

#[test]
fn miu_theorems_are_found() {
    let mut os = object(MIU_MM);
    for text in ["|- M I", "|- M I U", "|- M I I"] {
        let e = os.parse(text).unwrap();
        let v = membership_bounded(&mut os, &e, 10_000).unwrap();
        assert_eq!(v.status, Status::Theorem, "{text}");
        assert_eq!(v.witness.unwrap().conclusion, e);
    }
}

#[test]
fn monotone_systems_refute_by_bound() {
    let mut os = object(MICRO_MM);
    assert!(length_monotone(&os.obj));
    let e = os.parse("|- a").unwrap();
    let v = membership_bounded(&mut os, &e, 10_000).unwrap();
    assert_eq!(v.status, Status::RefutedByBound);

    let e = os.parse("|- a a").unwrap();
    let v = membership_bounded(&mut os, &e, 10_000).unwrap();
    assert_eq!(v.status, Status::Theorem);
    assert_eq!(v.witness.unwrap().conclusion, e);
}

#[test]
fn object_instances() {
    let mut os = object(MICRO_MM);
    let wff = sym(&os, "wff");
    let (x, y) = (sym(&os, "x"), sym(&os, "y"));
    let (w0, w1) = (os.object_var(wff, 0), os.object_var(wff, 1));

    let s = object_instance(&os, "ax", &[(x, w0), (y, w1)].into()).unwrap();
    assert_eq!(os.show(&s.concl), "|- wff0 wff1");
    assert_eq!(s.dv, all_pairs(&[w0, w1].into()));

    // identity map relocates the axiom itself
    let s = object_instance(&os, "ax", &[(x, x), (y, y)].into()).unwrap();
    assert_eq!(s.concl, os.obj.by_label("ax").unwrap().stmt.concl);

    let err = object_instance(&os, "ax", &[(x, w0), (y, w0)].into()).unwrap_err();
    assert_eq!(err, SelfModelError::DvCollapsed("x".into(), "y".into(), "wff0".into()));
    // without dv, collapsing is fine
    let s = object_instance(&os, "aa", &BTreeMap::new()).unwrap();
    assert_eq!(os.show(&s.concl), "|- a a");
    assert!(matches!(object_instance(&os, "ax", &[(x, w0)].into()), Err(SelfModelError::MissingValue(v)) if v == "y"));
    assert!(matches!(object_instance(&os, "nope", &BTreeMap::new()), Err(SelfModelError::UnknownLabel(_))));
}

#[test]
fn eta_is_substitution() {
    let mut os = object(PROP_MM);
    let (ph, ps) = (sym(&os, "ph"), sym(&os, "ps"));
    let a = os.parse("wff ( wff0 -> wff1 )").unwrap();
    let b = os.parse("wff -. wff2").unwrap();
    let mu: BTreeMap<Sym, Expr> = [(ph, a), (ps, b)].into();
    let e = os.base.parse_expr("|- ( ph -> ( ps -> ph ) )").unwrap();
    let out = self_eta(&os, &mu, &e).unwrap();
    assert_eq!(os.show(&out), "|- ( ( wff0 -> wff1 ) -> ( -. wff2 -> ( wff0 -> wff1 ) ) )");

    let e = os.base.parse_expr("|- ( ph -> ch )").unwrap();
    assert!(matches!(self_eta(&os, &mu, &e), Err(SelfModelError::MissingValue(v)) if v == "ch"));
    let bad: BTreeMap<Sym, Expr> = [(ph, os.parse("|- wff0").unwrap())].into();
    let e = os.base.parse_expr("wff ph").unwrap();
    assert!(matches!(self_eta(&os, &bad, &e), Err(SelfModelError::TypeMismatch { .. })));
}

#[test]
fn dv_clash_detection() {
    let mut os = object(MICRO_MM);
    let (x, y) = (sym(&os, "x"), sym(&os, "y"));
    let dv = os.base.by_label("ax").unwrap().stmt.dv.clone();
    let a = os.parse("wff wff0 a").unwrap();
    let b = os.parse("wff a wff0").unwrap();
    let c = os.parse("wff wff1").unwrap();
    assert_eq!(dv_clashes(&os, &dv, &[(x, a.clone()), (y, b)].into()).len(), 1);
    assert!(dv_clashes(&os, &dv, &[(x, a), (y, c)].into()).is_empty());
}

const CLOSED_PROP: [&str; 10] = ["id", "idd", "imim2", "a1a1", "imim2a1", "pm2.21", "pm2.43", "imcon4", "idd2", "a1i1"];

#[test]
fn spotcheck_closed_prop_theorems() {
    let db = parse_database(PROP_MM).unwrap();
    let mut os = ObjectSystem::new(&db).unwrap();
    for label in CLOSED_PROP {
        let r = completeness_spotcheck(&mut os, label, SpotConfig::default()).unwrap();
        assert!(r.provable);
        assert!(r.samples.len() >= 5, "{label}");
        assert!(r.confirmed(), "{label}: {:?}", r.samples.iter().map(|s| s.status).collect::<Vec<_>>());
        assert!(r.flagged().is_empty());
    }
}

#[test]
fn spotcheck_rejects_and_refuses() {
    let mut os = object(PROP_MM);
    assert!(matches!(
        completeness_spotcheck(&mut os, "ax-mp", SpotConfig::default()),
        Err(SelfModelError::HasHypotheses(l)) if l == "ax-mp"
    ));

    // `⊢ ph` is not valid; whatever instances are found provable must be
    // tautologies
    let mut bogus = object(PROP_MM);
    let phi = bogus.base.parse_expr("|- ph").unwrap();
    let (ph, wff) = (sym(&bogus, "ph"), sym(&bogus, "wff"));
    let leaves = [bogus.object_var(wff, 0), bogus.object_var(wff, 1)];
    let model = load_model(&bogus.obj, PROP_MODEL).unwrap();
    let cfg = SpotConfig { budget: 2_000, ..SpotConfig::default() };
    let mut unconfirmed = 0;
    for t in enumerate_trees(&bogus.obj, wff, 2, &leaves) {
        let value = expr_of(&t, &bogus.obj).unwrap();
        let inst = self_eta(&bogus, &[(ph, value)].into(), &phi).unwrap();
        let v = membership_bounded(&mut bogus, &inst, cfg.budget).unwrap();
        match v.status {
            Status::Theorem => assert!(is_true(&bogus.obj, &model, &inst).unwrap().holds),
            _ => unconfirmed += 1,
        }
    }
    assert!(unconfirmed > 0);
}

#[test]
fn spotcheck_sampling_is_seeded() {
    let mut os = object(PROP_MM);
    let cfg = SpotConfig { samples: 5, depth: 2, budget: 10_000, seed: 7 };
    let a = completeness_spotcheck(&mut os, "imim2", cfg).unwrap();
    let b = completeness_spotcheck(&mut os, "imim2", cfg).unwrap();
    assert_eq!(a.samples.len(), 5);
    let inst = |r: &SpotReport| r.samples.iter().map(|s| s.instance.clone()).collect::<Vec<_>>();
    assert_eq!(inst(&a), inst(&b));
    // values for distinct statement variables use disjoint object variables
    for s in &a.samples {
        let vars: Vec<BTreeSet<Sym>> = s.valuation.values().map(|e| vars_of(&os.obj.symbols, e)).collect();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                assert!(vars[i].is_disjoint(&vars[j]));
            }
        }
    }
}

fn arb_wff_text() -> impl Strategy<Value = String> {
    let leaf = (0usize..6).prop_map(|i| format!("wff{i}"));
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| format!("-. {a}")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("( {a} -> {b} )")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A fresh variable avoids every variable of the accumulated expressions.
    #[test]
    fn fresh_variables_escape(texts in prop::collection::vec(arb_wff_text(), 100)) {
        let mut os = object(PROP_MM);
        let wff = sym(&os, "wff");
        let mut avoid = BTreeSet::new();
        for t in &texts {
            let e = os.parse(&format!("wff {t}")).unwrap();
            avoid.extend(vars_of(&os.obj.symbols, &e));
        }
        let v = os.fresh_var(wff, &avoid);
        prop_assert!(!avoid.contains(&v));
        prop_assert!(os.is_object_var(v));
        prop_assert_eq!(os.obj.symbols.type_of(v), Some(wff));
    }

    /// vars(η_μ(e)) ⊆ ⋃ vars(μ(w)) over the variables w of e.
    #[test]
    fn eta_variables_come_from_values(a in arb_wff_text(), b in arb_wff_text(), c in arb_wff_text()) {
        let mut os = object(PROP_MM);
        let names = ["ph", "ps", "ch"];
        let mut mu = BTreeMap::new();
        for (n, t) in names.iter().zip([a, b, c]) {
            mu.insert(sym(&os, n), os.parse(&format!("wff {t}")).unwrap());
        }
        for stmt in ["|- ( ph -> ( ps -> ph ) )", "|- ( ( ph -> ( ps -> ch ) ) -> ( ( ph -> ps ) -> ( ph -> ch ) ) )"] {
            let e = os.base.parse_expr(stmt).unwrap();
            let out = self_eta(&os, &mu, &e).unwrap();
            let mut allowed = BTreeSet::new();
            for w in vars_of(&os.base.symbols, &e) {
                allowed.extend(vars_of(&os.obj.symbols, &mu[&w]));
            }
            prop_assert!(vars_of(&os.obj.symbols, &out).is_subset(&allowed));
        }
    }

    /// Instances of ax-1 are found, and their witnesses replay.
    #[test]
    fn witnesses_verify(a in arb_wff_text(), b in arb_wff_text()) {
        let mut os = object(PROP_MM);
        let e = os.parse(&format!("|- ( {a} -> ( {b} -> {a} ) )")).unwrap();
        let v = membership_bounded(&mut os, &e, 10_000).unwrap();
        prop_assert_eq!(v.status, Status::Theorem);
        let w = v.witness.unwrap();
        let again = replay(&os.obj, &DvSet::new(), &[], &w.to_steps()).unwrap();
        prop_assert_eq!(again.conclusion, e);
    }
}
