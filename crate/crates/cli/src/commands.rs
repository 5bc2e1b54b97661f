use std::io::Write;

use mmodel_core::grammar::{
    ambiguity_scan, induce_cfg, is_grammatical, is_weakly_grammatical, parse_expression, SynMap,
};
use mmodel_core::ingest::{Database, ParseOptions};
use mmodel_core::kernel::{all_pairs, closure_enum, display_syms, Derivation, DvSet, Expr, FormalSystem};
use mmodel_core::modelcheck::{
    check_model, independence_report, is_true, load_model, AxiomCheck, Counterexample, FiniteModel, Valuation,
    SUBSTITUTION_SAMPLES,
};
use mmodel_core::selfmodel::{completeness_spotcheck, membership_bounded, ObjectSystem, SpotConfig, Status};
use mmodel_core::treesys::{enumerate_trees, expr_of};

use crate::{read_input, Opts, Outcome};

type Res = Result<Outcome, String>;

/// Human lines or porcelain records, never both.
struct Report<'a> {
    porcelain: bool,
    out: &'a mut dyn Write,
}

impl Report<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        if !self.porcelain {
            let _ = writeln!(self.out, "{}", s.as_ref());
        }
    }

    fn rec(&mut self, fields: &[&str]) {
        if self.porcelain {
            let clean: Vec<String> = fields.iter().map(|f| f.replace(['\t', '\n'], " ")).collect();
            let _ = writeln!(self.out, "{}", clean.join("\t"));
        }
    }
}

fn report<'a>(o: &Opts, out: &'a mut dyn Write) -> Report<'a> {
    Report { porcelain: o.porcelain, out }
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn load_db(o: &Opts, path: &str) -> Result<Database, String> {
    let text = read_input(path)?;
    Database::parse(&text, ParseOptions { repair_multityped: o.repair_multityped }).map_err(|e| format!("{path}: {e}"))
}

fn load(o: &Opts, db: &str, model: &str) -> Result<(Database, FiniteModel), String> {
    let db = load_db(o, db)?;
    let text = read_input(model)?;
    let m = load_model(&db.system, &text).map_err(|e| format!("{model}: {e}"))?;
    Ok((db, m))
}

/// Whitespace tokens, with `⊢` accepted for `|-`.
fn parse_expr(fs: &FormalSystem, text: &str) -> Result<Expr, String> {
    let has_turnstile = fs.symbols.lookup("⊢").is_some();
    let toks: Vec<&str> = text.split_whitespace().map(|t| if t == "⊢" && !has_turnstile { "|-" } else { t }).collect();
    fs.parse_expr(&toks.join(" ")).map_err(|e| format!("expression `{text}`: {e}"))
}

fn show_valuation(fs: &FormalSystem, m: &FiniteModel, mu: &Valuation) -> String {
    if mu.is_empty() {
        "the empty valuation".into()
    } else {
        m.show_valuation(fs, mu)
    }
}

fn value_note(m: &FiniteModel, cx: &Counterexample) -> String {
    match cx.value.value {
        Some(v) => m.name(v).to_string(),
        None => cx.value.raw.clone(),
    }
}

fn axiom_lines(r: &mut Report, fs: &FormalSystem, m: &FiniteModel, checks: &[(usize, AxiomCheck)]) {
    for (i, c) in checks {
        let label = &fs.assertion(*i).label;
        let n = c.valuations.to_string();
        match &c.counterexample {
            None => {
                r.line(format!("pass {label} ({n} valuations)"));
                r.rec(&["axiom", label, "pass", &n]);
            }
            Some(cx) => {
                let at = show_valuation(fs, m, &cx.valuation);
                let val = value_note(m, cx);
                r.line(format!("FAIL {label} ({n} valuations): undefined at {at}, computed {val}"));
                r.rec(&["axiom", label, "fail", &n, &m.show_valuation(fs, &cx.valuation), &val]);
            }
        }
    }
}

pub fn verify(o: &Opts, db: &str, out: &mut dyn Write) -> Res {
    let db = load_db(o, db)?;
    let mut r = report(o, out);
    let (mut ok, mut bad) = (0, 0);
    for (i, res) in db.verify_all() {
        let label = &db.system.assertion(i).label;
        match res {
            Ok(_) => {
                ok += 1;
                r.rec(&["proof", label, "ok"]);
            }
            Err(e) => {
                bad += 1;
                r.line(format!("FAIL {label}: {e}"));
                r.rec(&["proof", label, "fail", &e.to_string()]);
            }
        }
    }
    r.line(format!("{ok} proofs verified"));
    if bad > 0 {
        r.line(format!("{bad} proofs failed"));
    }
    Ok(outcome(bad == 0))
}

pub fn grammar(o: &Opts, db: &str, out: &mut dyn Write) -> Res {
    let db = load_db(o, db)?;
    let fs = &db.system;
    let syms = &fs.symbols;
    let mut r = report(o, out);
    let syn = SynMap::infer(fs).map_err(|e| e.to_string())?;
    for (c, v) in syn.iter().filter(|(c, v)| c != v) {
        r.line(format!("syn {} = {}", syms.name(c), syms.name(v)));
        r.rec(&["syn", syms.name(c), syms.name(v)]);
    }

    let weak = is_weakly_grammatical(fs);
    r.line(format!("weakly grammatical: {}", yes(weak.ok)));
    r.rec(&["weak", "-", yes(weak.ok)]);
    for &i in &weak.unmatched {
        let a = fs.assertion(i);
        r.line(format!("  no syntax axiom covers {}: {}", a.label, fs.display(&a.stmt.concl)));
        r.rec(&["uncovered", &a.label, &fs.display(&a.stmt.concl).to_string()]);
    }

    let g = is_grammatical(fs, &syn).map_err(|e| e.to_string())?;
    let grammatical = weak.ok && g.grammatical;
    r.line(format!("grammatical: {}", yes(grammatical)));
    r.rec(&["grammatical", "-", yes(grammatical)]);
    for u in &g.unparseable {
        let at = match u.hyp {
            Some(h) => format!("hypothesis {}", h + 1),
            None => "conclusion".into(),
        };
        let e = fs.display(&u.expr).to_string();
        r.line(format!("  {} {at} does not parse: {e}", u.label));
        r.rec(&["unparseable", &u.label, &e]);
    }
    if !g.non_syntax_vt_axioms.is_empty() {
        let labels: Vec<&str> = g.non_syntax_vt_axioms.iter().map(|&i| fs.assertion(i).label.as_str()).collect();
        r.line(format!("  note: parsing may under-approximate syntax proofs because of {}", labels.join(", ")));
        r.rec(&["note", &labels.join(","), "non-syntax axioms with variable typecodes"]);
    }

    let cfg = induce_cfg(fs).map_err(|e| e.to_string())?;
    let corpus: Vec<Expr> =
        fs.assertions().iter().flat_map(|a| a.stmt.hyps.iter().chain([&a.stmt.concl]).cloned()).collect();
    let amb = ambiguity_scan(&cfg, &syn, &corpus, o.max_len as usize);
    r.line(format!("ambiguity: {}", amb.verdict()));
    r.rec(&["ambiguity", "-", &amb.verdict()]);
    for w in &amb.witnesses {
        let toks = display_syms(&w.tokens, syms).to_string();
        let [a, b] = &w.trees;
        let (a, b) = (a.to_prefix(fs), b.to_prefix(fs));
        r.line(format!("  witness {}: `{toks}` as {a} and {b}", syms.name(w.nonterminal)));
        r.rec(&["witness", syms.name(w.nonterminal), &toks, &a, &b]);
    }

    // bounded round trip over one representative variable per typecode
    let mut round_trip_ok = true;
    for tc in fs.var_typecodes() {
        let Some(v) = syms.variables().find(|&v| syms.type_of(v) == Some(tc)) else { continue };
        let trees = enumerate_trees(fs, tc, o.depth as usize, &[v]);
        let mut failures = 0;
        for t in &trees {
            let e = expr_of(t, fs).map_err(|e| e.to_string())?;
            if parse_expression(&cfg, &syn, &e, 2) != [t.clone()] {
                failures += 1;
            }
        }
        round_trip_ok &= failures == 0;
        let (n, d) = (trees.len(), o.depth);
        r.line(format!(
            "round trip: {} of {n} {} trees of depth <= {d} parse back uniquely",
            n - failures,
            syms.name(tc)
        ));
        r.rec(&["roundtrip", syms.name(tc), &n.to_string(), &failures.to_string()]);
    }
    Ok(outcome(grammatical && !amb.ambiguous() && round_trip_ok))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn model_check(o: &Opts, db: &str, model: &str, out: &mut dyn Write) -> Res {
    let (db, m) = load(o, db, model)?;
    let fs = &db.system;
    let rep = check_model(fs, &m).map_err(|e| e.to_string())?;
    let mut r = report(o, out);
    let fr = &rep.freshness;
    if fr.valid() {
        r.line("freshness: valid");
        r.rec(&["freshness", "-", "valid"]);
    } else {
        if !fr.symmetric {
            r.line("freshness: not symmetric");
            r.rec(&["freshness", "-", "asymmetric"]);
        }
        for &c in &fr.no_fresh_element {
            let c = fs.symbols.name(c);
            r.line(format!("freshness: no element of {c} is fresh to every element"));
            r.rec(&["freshness", c, "no-fresh-element"]);
        }
    }
    match &rep.preservation {
        None => {
            r.line("fresh preservation: ok");
            r.rec(&["preservation", "-", "ok"]);
        }
        Some(v) => {
            let d = v.describe(fs, &m);
            r.line(format!("fresh preservation: violated, {d}"));
            r.rec(&["preservation", "-", "fail", &d]);
        }
    }
    axiom_lines(&mut r, fs, &m, &rep.axioms);
    match &rep.substitution {
        None => {
            r.line(format!("substitution property: ok ({SUBSTITUTION_SAMPLES} samples)"));
            r.rec(&["substitution", "-", "ok", &SUBSTITUTION_SAMPLES.to_string()]);
        }
        Some(v) => {
            r.line(format!("substitution property: violated by {} under {}", v.expr, v.substitution));
            r.rec(&["substitution", "-", "fail", &v.expr, &v.substitution]);
        }
    }
    if m.is_trivial() {
        r.line("model is trivial");
        r.rec(&["trivial", "-", "yes"]);
    }
    let ok = rep.passed();
    r.line(if ok { "model check passed" } else { "model check failed" });
    r.rec(&["verdict", "-", if ok { "pass" } else { "fail" }]);
    Ok(outcome(ok))
}

pub fn model_eval(o: &Opts, db: &str, model: &str, expr: &str, at: &[String], out: &mut dyn Write) -> Res {
    let (db, m) = load(o, db, model)?;
    let fs = &db.system;
    let e = parse_expr(fs, expr)?;
    let mut mu = Valuation::new();
    for a in at {
        let (v, x) = a.split_once('=').ok_or_else(|| format!("`{a}`: expected VAR=ELEM"))?;
        let var = fs
            .symbols
            .lookup(v)
            .filter(|&s| fs.symbols.is_variable(s))
            .ok_or_else(|| format!("unknown variable `{v}`"))?;
        let sort = fs.symbols.type_of(var).expect("variable");
        let elem = m.lookup(sort, x).ok_or_else(|| format!("`{x}` is not an element of {}", fs.symbols.name(sort)))?;
        mu.insert(var, elem);
    }
    for v in mmodel_core::kernel::vars_of(&fs.symbols, &e) {
        if !mu.contains_key(&v) {
            return Err(format!("no value for `{}`", fs.symbols.name(v)));
        }
    }
    let term = m.prepare(fs, &e).map_err(|e| e.to_string())?;
    let ev = m.eval(fs, &mu, &term).map_err(|e| e.to_string())?;
    let mut r = report(o, out);
    let at = show_valuation(fs, &m, &mu);
    match ev.value {
        Some(v) => {
            r.line(format!("η = {} at {at}", m.name(v)));
            r.rec(&["value", &m.show_valuation(fs, &mu), m.name(v)]);
        }
        None => {
            let tc = fs.symbols.name(e.typecode());
            r.line(format!("η undefined at {at}: computed {}, not in the {tc} universe", ev.raw));
            r.rec(&["undefined", &m.show_valuation(fs, &mu), &ev.raw]);
        }
    }
    Ok(outcome(ev.value.is_some()))
}

pub fn truth(o: &Opts, db: &str, model: &str, expr: &str, out: &mut dyn Write) -> Res {
    let (db, m) = load(o, db, model)?;
    let fs = &db.system;
    let e = parse_expr(fs, expr)?;
    let t = is_true(fs, &m, &e).map_err(|e| e.to_string())?;
    let mut r = report(o, out);
    let n = t.valuations.to_string();
    match &t.counterexample {
        None => {
            r.line(format!("true ({n} valuations)"));
            r.rec(&["truth", &fs.display(&e).to_string(), "true", &n]);
        }
        Some(cx) => {
            let at = show_valuation(fs, &m, &cx.valuation);
            r.line(format!("not true: η undefined at {at}"));
            r.line(format!("  computed {}", value_note(&m, cx)));
            r.rec(&[
                "truth",
                &fs.display(&e).to_string(),
                "false",
                &n,
                &m.show_valuation(fs, &cx.valuation),
                &value_note(&m, cx),
            ]);
        }
    }
    Ok(outcome(t.holds))
}

pub fn independence(o: &Opts, db: &str, model: &str, axiom: &str, out: &mut dyn Write) -> Res {
    let (db, m) = load(o, db, model)?;
    let fs = &db.system;
    let rep = independence_report(fs, &m, axiom).map_err(|e| e.to_string())?;
    let mut r = report(o, out);
    if !rep.freshness.valid() {
        r.line("freshness: invalid");
        r.rec(&["freshness", "-", "invalid"]);
    }
    if let Some(v) = &rep.preservation {
        let d = v.describe(fs, &m);
        r.line(format!("fresh preservation: violated, {d}"));
        r.rec(&["preservation", "-", "fail", &d]);
    }
    axiom_lines(&mut r, fs, &m, &rep.others);
    match rep.counterexample() {
        Some(cx) => {
            let at = m.show_valuation(fs, &cx.valuation);
            let val = value_note(&m, cx);
            r.line(format!("{axiom} fails at {} (value {val})", show_valuation(fs, &m, &cx.valuation)));
            r.rec(&["target", axiom, "fail", &at, &val]);
        }
        None => {
            r.line(format!("{axiom} holds in this model"));
            r.rec(&["target", axiom, "pass"]);
        }
    }
    let ok = rep.witnessed();
    if ok {
        r.line(format!("{axiom} is independent of the other axioms"));
    } else if !rep.others_pass() {
        r.line("no verdict: the model does not satisfy the other axioms");
    } else {
        r.line(format!("no verdict: {axiom} holds in this model"));
    }
    r.rec(&["verdict", axiom, if ok { "independent" } else { "none" }]);
    Ok(outcome(ok))
}

pub fn closure(o: &Opts, db: &str, hyps: &[String], all_dv: bool, goal: Option<&str>, out: &mut dyn Write) -> Res {
    let db = load_db(o, db)?;
    let fs = &db.system;
    let hyps = hyps.iter().map(|h| parse_expr(fs, h)).collect::<Result<Vec<_>, _>>()?;
    let goal = goal.map(|g| parse_expr(fs, g)).transpose()?;
    let dv = if all_dv { all_pairs(&fs.symbols.variables().collect()) } else { DvSet::new() };
    let res = closure_enum(fs, &dv, &hyps, o.fuel as usize, o.max_len as usize);
    let mut r = report(o, out);
    let how = |e: &Expr| match &res.derivations[e] {
        Derivation::Hyp(i) => format!("hyp{}", i + 1),
        Derivation::VarHyp(_) => "var".into(),
        Derivation::Axiom { index, .. } => fs.assertion(*index).label.clone(),
    };
    let mut exprs: Vec<(String, &Expr)> = res.exprs.iter().map(|e| (fs.display(e).to_string(), e)).collect();
    exprs.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));
    let state = if res.saturated { "saturated" } else { "fuel exhausted" };
    let rounds = res.rounds.to_string();
    if let Some(g) = goal {
        let found = res.contains(&g);
        let s = fs.display(&g).to_string();
        r.line(if found { format!("reached: {s} (via {})", how(&g)) } else { format!("not reached: {s} ({state})") });
        r.rec(&["goal", &s, if found { "reached" } else { "not-reached" }, state]);
        return Ok(outcome(found));
    }
    for (s, e) in &exprs {
        r.line(s);
        r.rec(&["expr", &how(e), s]);
    }
    r.line(format!("{} expressions, {state} after {rounds} rounds", exprs.len()));
    r.rec(&["summary", &exprs.len().to_string(), state, &rounds]);
    Ok(Outcome::Pass)
}

pub fn selfmodel(
    o: &Opts,
    db: &str,
    expr: Option<&str>,
    spotcheck: &[String],
    samples: usize,
    sample_depth: usize,
    out: &mut dyn Write,
) -> Res {
    if expr.is_none() && spotcheck.is_empty() {
        return Err("give an expression or at least one --spotcheck label".into());
    }
    let db = load_db(o, db)?;
    let mut os = ObjectSystem::new(&db).map_err(|e| e.to_string())?;
    let budget = o.budget as usize;
    let mut r = report(o, out);
    let mut ok = true;
    if let Some(text) = expr {
        let toks: Vec<&str> = text.split_whitespace().map(|t| if t == "⊢" { "|-" } else { t }).collect();
        let e = os.parse(&toks.join(" ")).map_err(|e| format!("expression `{text}`: {e}"))?;
        let v = membership_bounded(&mut os, &e, budget).map_err(|e| e.to_string())?;
        let s = os.show(&e);
        let steps = v.steps.to_string();
        match v.status {
            Status::Theorem => {
                let logical = v.logical_steps(&os).unwrap_or(0);
                r.line(format!(
                    "theorem: {s} ({steps} search steps, {logical} logical axiom steps in the verified witness)"
                ));
            }
            st => r.line(format!("{}: {s} ({steps} search steps)", st.name())),
        }
        r.rec(&["verdict", &s, v.status.name(), &steps]);
        ok &= v.status == Status::Theorem;
    }
    let cfg = SpotConfig { samples, depth: sample_depth, budget, seed: o.seed };
    let mut bug = false;
    for label in spotcheck {
        let rep = completeness_spotcheck(&mut os, label, cfg).map_err(|e| e.to_string())?;
        for s in &rep.samples {
            let inst = os.show(&s.instance);
            r.line(format!("{label} sample {}: {} {inst} ({} steps)", s.id, s.status.name(), s.steps));
            r.rec(&["sample", &s.id.to_string(), &inst, s.status.name(), &s.steps.to_string()]);
        }
        let n = rep.samples.iter().filter(|s| s.status == Status::Theorem).count();
        let verdict = if rep.confirmed() { "confirmed" } else { "not confirmed" };
        r.line(format!("{label}: {n}/{} samples theorem, {verdict}", rep.samples.len()));
        r.rec(&["spotcheck", label, verdict, &n.to_string(), &rep.samples.len().to_string()]);
        for s in rep.flagged() {
            r.line(format!("BUG: provable {label} has a refuted instance {}", os.show(&s.instance)));
            bug = true;
        }
        ok &= rep.confirmed();
    }
    if bug {
        return Err("self-model refuted an instance of a provable statement".into());
    }
    Ok(outcome(ok))
}
