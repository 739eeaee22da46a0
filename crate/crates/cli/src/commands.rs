use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use triguard_core::baselines::{random_ruleset, ClassName, GenParams};
use triguard_core::chase::{bcq_holds, bounded_nulls_probe, chase_to_level, probe_bounds, BcqVerdict};
use triguard_core::extension::{sigma0, Limits};
use triguard_core::nullsets::NullAnalysis;
use triguard_core::rtc::{classify_tg, validate_witness, RtcWitness, TgOptions, TgOutcome, TgVerdict};
use triguard_core::{parse_atoms, parse_facts, parse_program, parse_query, Database, Program, Query};

use crate::report::{to_json_string, Input, Report};
use crate::{ChaseLimits, Class, Cli, Command, Format};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NON_MEMBER: u8 = 1;
pub const EXIT_ERROR: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

/// What a subcommand produced: the report, its text rendering and an exit code.
struct Outcome {
    report: Report,
    text: String,
    code: u8,
}

pub fn run(cli: &Cli) -> Result<u8> {
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Classify { rules, class, limit } => classify(rules, *class, limit.max_pairs)?,
        Command::Extend {
            rules,
            levels,
            limit,
        } => extend(rules, *levels, limit.max_pairs)?,
        Command::Rtc {
            rules,
            explain,
            limit,
        } => rtc(rules, *explain, limit.max_pairs)?,
        Command::Chase {
            rules,
            facts,
            limits,
            out,
        } => chase(rules, facts, *limits, out.as_deref())?,
        Command::Ask {
            rules,
            facts,
            query,
            limits,
        } => ask(rules, facts, query, *limits)?,
        Command::Graph { rules } => {
            let (p, _) = load_program(rules)?;
            let a = NullAnalysis::new(&p);
            print!("{}", a.graph.to_dot(&a.cyclic));
            return Ok(EXIT_OK);
        }
        Command::Nullsets { rules } => nullsets(rules)?,
        Command::Probe {
            rules,
            facts,
            shape,
            bounds,
            theory,
            max_atoms,
            limit,
        } => probe(rules, facts, shape, *bounds, *theory, *max_atoms, limit.max_pairs)?,
        Command::Gen {
            seed,
            max_rules,
            max_body_atoms,
            max_arity,
            predicates,
            variables,
            existential_probability,
        } => gen(GenParams {
            seed: *seed,
            max_rules: *max_rules,
            max_body_atoms: *max_body_atoms,
            max_arity: *max_arity,
            n_predicates: *predicates,
            n_variables: *variables,
            existential_probability: *existential_probability,
        }),
    };
    let mut report = outcome.report;
    report.timings.push(("total", start.elapsed()));
    match cli.format {
        Format::Json => print!("{}", to_json_string(&report.to_value(cli.timings))),
        Format::Text => {
            print!("{}", outcome.text);
            if cli.timings {
                for (k, d) in &report.timings {
                    println!("time {k}: {:.3} ms", d.as_secs_f64() * 1000.0);
                }
            }
        }
    }
    Ok(outcome.code)
}

fn read(role: &'static str, path: &Path) -> Result<(String, Input)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let input = Input::new(role, &path.display().to_string(), &bytes);
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    Ok((text, input))
}

fn load_program(path: &Path) -> Result<(Program, Input)> {
    let (text, input) = read("rules", path)?;
    let p = parse_program(&text).with_context(|| format!("{}", path.display()))?;
    Ok((p, input))
}

fn load_facts(path: &Path, p: &Program) -> Result<(Database, Input)> {
    let (text, input) = read("facts", path)?;
    let d = parse_facts(&text).with_context(|| format!("{}", path.display()))?;
    p.check_atoms(&d.facts)
        .with_context(|| format!("{}", path.display()))?;
    Ok((d, input))
}

fn load_query(path: &Path, p: &Program) -> Result<(Query, Input)> {
    let (text, input) = read("query", path)?;
    let q = parse_query(&text).with_context(|| format!("{}", path.display()))?;
    p.check_atoms(&q.body)
        .with_context(|| format!("{}", path.display()))?;
    Ok((q, input))
}

fn tg_verdict_json(v: &TgVerdict) -> Value {
    let (verdict, member, reason) = match &v.outcome {
        TgOutcome::Tg => ("tg", json!(true), Value::Null),
        TgOutcome::NotTg { .. } => ("not_tg", json!(false), Value::Null),
        TgOutcome::Inconclusive { reason } => ("inconclusive", Value::Null, json!(reason)),
    };
    let mut out = json!({
        "class_name": "TG",
        "member": member,
        "verdict": verdict,
        "method": v.method,
        "pairs_explored": v.pairs_explored,
        "levels": v.levels,
        "closure_states": v.closure_states,
    });
    if !reason.is_null() {
        out["reason"] = reason;
    }
    out
}

fn tg_code(v: &TgVerdict) -> u8 {
    match v.outcome {
        TgOutcome::Tg => EXIT_OK,
        TgOutcome::NotTg { .. } => EXIT_NON_MEMBER,
        TgOutcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn tg_text(v: &TgVerdict) -> String {
    let mut s = match &v.outcome {
        TgOutcome::Tg => "TG: yes".to_string(),
        TgOutcome::NotTg { .. } => "TG: no".to_string(),
        TgOutcome::Inconclusive { reason } => format!("TG: inconclusive ({reason})"),
    };
    let _ = write!(
        s,
        " [method {}, {} pairs, {} levels]",
        serde_json::to_value(v.method).expect("serialises").as_str().unwrap_or("?"),
        v.pairs_explored,
        v.levels
    );
    s.push('\n');
    if let Some(w) = v.witness() {
        s.push_str(&witness_summary(w));
    }
    s
}

fn witness_summary(w: &RtcWitness) -> String {
    format!(
        "  pair {}\n  triangle ({}, {}, {}) with pivots ({}, {})\n",
        w.pair, w.a, w.b, w.c, w.x, w.z
    )
}

fn compact_witness(w: &RtcWitness) -> Value {
    json!({
        "pair": w.pair.to_string(),
        "triangle": [w.a, w.b, w.c],
        "pivots": [w.x.to_string(), w.z.to_string()],
    })
}

fn classify(rules: &Path, class: Class, max_pairs: usize) -> Result<Outcome> {
    let (p, input) = load_program(rules)?;
    let mut report = Report::new("classify");
    report.inputs.push(input);
    let baselines: Vec<ClassName> = match class {
        Class::Wa => vec![ClassName::Wa],
        Class::Guarded => vec![ClassName::Guarded],
        Class::Sticky => vec![ClassName::Sticky],
        Class::Shy => vec![ClassName::Shy],
        Class::Tg => vec![],
        Class::All => ClassName::ALL.to_vec(),
    };
    let mut verdicts = serde_json::Map::new();
    let mut text = String::new();
    let mut code = EXIT_OK;
    for c in baselines {
        let started = Instant::now();
        let v = c.check(&p);
        report.timings.push((class_key(c), started.elapsed()));
        if v.member {
            let _ = writeln!(text, "{c}: yes");
        } else {
            let _ = writeln!(text, "{c}: no ({})", v.evidence);
            code = EXIT_NON_MEMBER;
        }
        verdicts.insert(c.to_string(), serde_json::to_value(&v)?);
    }
    if matches!(class, Class::Tg | Class::All) {
        let started = Instant::now();
        let v = classify_tg(
            &p,
            TgOptions {
                max_pairs,
                ..TgOptions::default()
            },
        );
        report.timings.push(("tg", started.elapsed()));
        verdicts.insert("TG".into(), tg_verdict_json(&v));
        if let Some(w) = v.witness() {
            report.witnesses.push(compact_witness(w));
        }
        text.push_str(&tg_text(&v));
        code = tg_code(&v);
    }
    report.verdicts = Value::Object(verdicts);
    Ok(Outcome { report, text, code })
}

fn class_key(c: ClassName) -> &'static str {
    match c {
        ClassName::Wa => "wa",
        ClassName::Guarded => "guarded",
        ClassName::Sticky => "sticky",
        ClassName::Shy => "shy",
    }
}

fn extend(rules: &Path, levels: Option<usize>, max_pairs: usize) -> Result<Outcome> {
    let (p, input) = load_program(rules)?;
    let limits = Limits::for_program(&p, max_pairs);
    let mut set = sigma0(&p);
    while !set.saturated && !set.full && levels.is_none_or(|l| set.iteration < l) {
        if set.step(limits).is_empty() {
            break;
        }
    }
    let mut report = Report::new("extend");
    report.inputs.push(input);
    report.verdicts = json!({
        "pairs": set.len(),
        "iterations": set.iteration,
        "saturated": set.saturated,
        "capped": set.capped,
    });
    let mut text = format!(
        "{} pairs after {} rounds ({})\n",
        set.len(),
        set.iteration,
        if set.saturated { "saturated" } else { "not saturated" }
    );
    let mut pairs = Vec::new();
    for pair in &set.pairs {
        let chain: Vec<usize> = set.provenance(pair.id).iter().map(|q| q.id).collect();
        let _ = writeln!(text, "p{} L{} {}  <- {:?}", pair.id, pair.level, pair, chain);
        pairs.push(json!({
            "id": pair.id,
            "level": pair.level,
            "pair": pair.to_string(),
            "body": pair.body,
            "head": pair.head,
            "origin": pair.origin,
            "provenance": chain,
        }));
    }
    report.set("pairs", Value::Array(pairs));
    let code = if set.saturated { EXIT_OK } else { EXIT_INCONCLUSIVE };
    Ok(Outcome { report, text, code })
}

fn rtc(rules: &Path, explain: bool, max_pairs: usize) -> Result<Outcome> {
    let (p, input) = load_program(rules)?;
    let v = classify_tg(
        &p,
        TgOptions {
            max_pairs,
            ..TgOptions::default()
        },
    );
    let mut report = Report::new("rtc");
    report.inputs.push(input);
    report.verdicts = json!({ "TG": tg_verdict_json(&v) });
    let mut text = tg_text(&v);
    if let Some(w) = v.witness() {
        if explain {
            let valid = validate_witness(&p, w);
            let mut full = serde_json::to_value(w)?;
            full["validated"] = json!(valid.is_ok());
            if let Err(e) = &valid {
                full["validation_error"] = json!(e);
            }
            report.witnesses.push(full);
            text.push_str(&explain_text(w, valid.is_ok()));
        } else {
            report.witnesses.push(compact_witness(w));
        }
    }
    Ok(Outcome {
        report,
        text,
        code: tg_code(&v),
    })
}

fn explain_text(w: &RtcWitness, valid: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "  a = {}, b = {}, c = {}", w.a, w.b, w.c);
    let _ = writeln!(s, "  a' = {} via theta {}", w.a_prime, w.theta);
    let path: Vec<String> = w
        .link_path
        .iter()
        .map(|l| match &l.link {
            Some(v) => format!("{} -{v}-", l.atom),
            None => l.atom.to_string(),
        })
        .collect();
    let _ = writeln!(s, "  link path {}", path.join(" "));
    let _ = writeln!(
        s,
        "  edge {} fails on {}; marked in a {:?}, in c {:?} after {} rounds",
        w.failing_edge,
        w.failing_link_var,
        w.markup_evidence.marked_in_a,
        w.markup_evidence.marked_in_c,
        w.markup_evidence.round
    );
    let m: Vec<String> = w.m_var.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "  marked variables {{{}}}", m.join(", "));
    match &w.guard {
        Some(g) => {
            let _ = writeln!(s, "  guard {g}");
        }
        None => s.push_str("  no guard\n"),
    }
    let _ = writeln!(s, "  validated: {valid}");
    s
}

fn chase(rules: &Path, facts: &Path, limits: ChaseLimits, out: Option<&Path>) -> Result<Outcome> {
    let (p, rin) = load_program(rules)?;
    let (d, fin) = load_facts(facts, &p)?;
    let inst = chase_to_level(&d, &p, limits.depth, limits.max_atoms);
    let inst_report = inst.report();
    let mut report = Report::new("chase");
    report.inputs.extend([rin, fin]);
    report.verdicts = json!({
        "atoms": inst.len(),
        "depth": inst.depth(),
        "nulls": inst_report.nulls,
        "truncated": inst_report.truncated,
    });
    let instance = crate::report::canonical(serde_json::to_value(&inst_report)?);
    let mut text = String::new();
    for entry in &inst_report.atoms {
        let _ = write!(text, "L{} {}", entry.level, entry.atom);
        if let (Some(r), Some(t)) = (&entry.rule, &entry.trigger) {
            let _ = write!(text, "  <- {r} {t}");
        }
        text.push('\n');
    }
    if let Some(t) = &inst_report.truncated {
        let _ = writeln!(
            text,
            "truncated: complete up to level {}, {} atoms (cap {})",
            t.complete_level, t.atoms, t.max_atoms
        );
    }
    match out {
        Some(path) => {
            fs::write(path, to_json_string(&instance))
                .with_context(|| format!("cannot write {}", path.display()))?;
            report.set("out", json!(path.display().to_string()));
        }
        None => report.set("instance", instance),
    }
    Ok(Outcome {
        report,
        text,
        code: EXIT_OK,
    })
}

fn ask(rules: &Path, facts: &Path, query: &Path, limits: ChaseLimits) -> Result<Outcome> {
    let (p, rin) = load_program(rules)?;
    let (d, fin) = load_facts(facts, &p)?;
    let (q, qin) = load_query(query, &p)?;
    let v = bcq_holds(&d, &p, &q, limits.depth, limits.max_atoms);
    let mut report = Report::new("ask");
    report.inputs.extend([rin, fin, qin]);
    report.verdicts = serde_json::to_value(&v)?;
    let (text, code) = match &v {
        BcqVerdict::Entailed { witness, level } => {
            report.witnesses.push(serde_json::to_value(witness)?);
            (format!("entailed at level {level} by {witness}\n"), EXIT_OK)
        }
        BcqVerdict::UnknownUpTo { depth } => (
            format!("unknown up to level {depth}\n"),
            EXIT_INCONCLUSIVE,
        ),
    };
    Ok(Outcome { report, text, code })
}

fn nullsets(rules: &Path) -> Result<Outcome> {
    let (p, input) = load_program(rules)?;
    let a = NullAnalysis::new(&p);
    let rows = a.table.rows(&p);
    let mut report = Report::new("nullsets");
    report.inputs.push(input);
    report.verdicts = json!({
        "cyclic": a.cyclic.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "rounds": a.table.rounds,
    });
    report.set("rows", serde_json::to_value(&rows)?);
    report.set("graph", serde_json::to_value(&a.graph)?);
    let mut text = String::new();
    for r in &rows {
        let nulls: Vec<String> = r.nulls.iter().map(|t| t.to_string()).collect();
        let side = serde_json::to_value(r.side)?;
        let _ = writeln!(
            text,
            "{} {} {}[{}] {{{}}}",
            r.rule,
            side.as_str().unwrap_or("?"),
            r.atom,
            r.arg,
            nulls.join(", ")
        );
    }
    let cyc: Vec<String> = a.cyclic.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(text, "cyclic {{{}}}", cyc.join(", "));
    Ok(Outcome {
        report,
        text,
        code: EXIT_OK,
    })
}

fn probe(
    rules: &Path,
    facts: &Path,
    shape: &str,
    bounds: (usize, usize, usize),
    theory: bool,
    max_atoms: usize,
    max_pairs: usize,
) -> Result<Outcome> {
    let (p, rin) = load_program(rules)?;
    let (d, fin) = load_facts(facts, &p)?;
    let shape = parse_atoms(shape).context("shape")?;
    if shape.is_empty() {
        bail!("shape is empty");
    }
    p.check_atoms(&shape).context("shape")?;
    let r = bounded_nulls_probe(&d, &p, &shape, bounds, max_atoms)?;
    let mut report = Report::new("probe");
    report.inputs.extend([rin, fin]);
    report.verdicts = json!({
        "violations": r.violations.len(),
        "late_nulls": r.new_nulls,
        "early_nulls": r.old_nulls,
    });
    report.witnesses = r
        .violations
        .iter()
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()?;
    report.set("probe", serde_json::to_value(&r)?);
    let mut text = format!(
        "{} late nulls checked against {} early nulls over {} atoms: {} violations\n",
        r.new_nulls,
        r.old_nulls,
        r.atoms,
        r.violations.len()
    );
    for v in &r.violations {
        let _ = writeln!(text, "  {} (level {}) has no partner", v.null, v.level);
    }
    if theory {
        let b = probe_bounds(&d, &p, &shape, max_pairs);
        let _ = writeln!(text, "m = {}, N = {}, N' = {}", b.m, b.n_cap, b.n_prime);
        report.set("bounds", serde_json::to_value(&b)?);
    }
    let code = if r.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_NON_MEMBER
    };
    Ok(Outcome { report, text, code })
}

fn gen(params: GenParams) -> Outcome {
    let p = random_ruleset(&params);
    let mut report = Report::new("gen");
    report.verdicts = json!({
        "rules": p.rules.len(),
        "existential": p.has_existentials(),
    });
    report.set("params", serde_json::to_value(&params).expect("serialises"));
    report.set("program", json!(p.to_string()));
    Outcome {
        report,
        text: p.to_string(),
        code: EXIT_OK,
    }
}
