//! One function per subcommand. Each returns the JSON report and a human
//! rendering of the same facts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use mutalg::components::{
    decompose, default_designation, fixes_base, is_component_map, is_isomorphism,
    mated_pairs_fixture, parse_decomposition, parse_map, serialize_decomposition, serialize_map,
    ComponentDecomposition,
};
use mutalg::fcp::{
    consistency_threshold, fcp_demo, greedy_subfamily, parse_params, Greedy, ParameterFamily,
    Threshold, EXHAUSTIVE_LIMIT,
};
use mutalg::formula::formula_ma_profile;
use mutalg::harness::{expand, run_suite_named, CorpusSpec};
use mutalg::rewrite::{
    eliminate_exists, rewrite_formula, to_dnf, verify_rewrite, Asserted, Certifier, Derivable,
    MAStarForm, Measured, Rule, SkipReason, VerifyReport,
};
use mutalg::{
    ma_profile, parse_formula, parse_structure, serialize_structure, Formula, MaProfile, Structure,
};

use crate::{AnalyzeArgs, ComponentsArgs, FcpArgs, GenerateArgs, RewriteArgs, VerifyArgs};

pub struct Report {
    pub json: Value,
    pub human: String,
    /// A checked property failed (exit status 1).
    pub failed: bool,
}

fn report<T: Serialize>(out: &T, human: String, failed: bool) -> Result<Report> {
    Ok(Report {
        json: serde_json::to_value(out)?,
        human,
        failed,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_structure(path: &Path) -> Result<Structure> {
    parse_structure(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn split_list(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn formula_with_ctx(text: &str, free: Option<&str>) -> Result<(Formula, Vec<String>)> {
    let (f, found) = parse_formula(text).with_context(|| format!("parsing formula `{text}`"))?;
    let ctx = match free {
        Some(list) => split_list(list),
        None => found,
    };
    Ok((f, ctx))
}

fn names(s: &Structure, ids: impl IntoIterator<Item = u32>) -> Vec<String> {
    ids.into_iter()
        .map(|e| s.element_name(e).to_string())
        .collect()
}

#[derive(Serialize)]
struct AnalyzeOut {
    subject: String,
    ctx: Vec<String>,
    #[serde(flatten)]
    profile: MaProfile,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Report> {
    let s = load_structure(&a.structure)?;
    let (subject, ctx, profile) = match (&a.relation, &a.formula) {
        (Some(name), _) => {
            let r = s
                .relation(name)
                .with_context(|| format!("unknown relation `{name}`"))?;
            (name.clone(), Vec::new(), ma_profile(r))
        }
        (None, Some(text)) => {
            let (f, ctx) = formula_with_ctx(text, a.free.as_deref())?;
            let p = formula_ma_profile(&s, &f, &ctx)?;
            (f.to_string(), ctx, p)
        }
        (None, None) => bail!("give --relation or --formula"),
    };
    let mut h = String::new();
    if ctx.is_empty() {
        writeln!(h, "{subject} (arity {})", profile.arity)?;
    } else {
        writeln!(h, "{subject} over ({})", ctx.join(", "))?;
    }
    for b in &profile.per_partition {
        writeln!(h, "  {}  max fiber {}", b.partition, b.max_fiber)?;
    }
    if profile.vacuous {
        writeln!(
            h,
            "uniform K = {} (vacuous: no proper partitions)",
            profile.uniform_k
        )?;
    } else {
        writeln!(h, "uniform K = {}", profile.uniform_k)?;
    }
    report(
        &AnalyzeOut {
            subject,
            ctx,
            profile,
        },
        h,
        false,
    )
}

#[derive(Serialize)]
struct Step {
    id: usize,
    rule: String,
    formula: String,
    ctx: Vec<String>,
    bound: String,
    premises: Vec<usize>,
}

/// Every certificate node of `form`, shared subtrees listed once, premises first.
fn derivation(form: &MAStarForm) -> Vec<Step> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut steps = Vec::new();
    let key = |c: &mutalg::CertifiedFormula| {
        format!(
            "{}|{}|{}|{}",
            c.rule().name(),
            c.formula(),
            c.ctx().join(","),
            c.bound()
        )
    };
    for lit in form.literals() {
        for node in lit.cert.nodes() {
            let k = key(&node);
            if ids.contains_key(&k) {
                continue;
            }
            let rule = match node.rule() {
                Rule::Axiom { source } => format!(
                    "axiom ({})",
                    serde_json::to_value(source)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default()
                ),
                r => r.name().to_string(),
            };
            let id = steps.len();
            steps.push(Step {
                id,
                rule,
                formula: node.formula().to_string(),
                ctx: node.ctx().to_vec(),
                bound: node.bound().to_string(),
                premises: node.premises().iter().map(|p| ids[&key(p)]).collect(),
            });
            ids.insert(k, id);
        }
    }
    steps
}

#[derive(Serialize)]
struct RewriteOut {
    input: String,
    ctx: Vec<String>,
    rewritten: String,
    formula: String,
    threshold: usize,
    /// Set when the result is `true` on every structure above the threshold.
    true_above: Option<usize>,
    assumptions: Vec<mutalg::rewrite::Assumption>,
    branches: Vec<mutalg::rewrite::BranchRecord>,
    derivation: Vec<Step>,
    verification: Option<VerifyReport>,
}

pub fn rewrite(a: &RewriteArgs) -> Result<Report> {
    let (f, ctx) = formula_with_ctx(&a.formula, a.free.as_deref())?;
    let mut asserted = Asserted::default();
    for b in &a.bounds {
        let (name, k) = b
            .split_once('=')
            .with_context(|| format!("bound `{b}` is not NAME=K"))?;
        let k: usize = k
            .trim()
            .parse()
            .with_context(|| format!("bound `{b}` is not NAME=K"))?;
        asserted.relations.insert(name.trim().to_string(), k);
    }
    let reference = a.reference.as_deref().map(load_structure).transpose()?;
    let measured = reference.as_ref().map(Measured);
    let mut chain: Vec<&dyn Certifier> = vec![&asserted, &Derivable];
    if let Some(m) = &measured {
        chain.push(m);
    }
    let certifier: &dyn Certifier = &chain;
    let (before, out) = match &a.eliminate {
        Some(x) => {
            if !ctx.contains(x) {
                bail!(
                    "`{x}` is not a free variable of the formula (context: {})",
                    ctx.join(", ")
                );
            }
            let form = to_dnf(&f, &ctx, certifier)?;
            let out = eliminate_exists(&form, x, reference.as_ref())?;
            (Formula::exists(vec![x.clone()], f.clone()), out)
        }
        None => (
            f.clone(),
            rewrite_formula(&f, &ctx, certifier, reference.as_ref())?,
        ),
    };
    let verification = reference
        .as_ref()
        .map(|s| verify_rewrite(&before, &out, std::slice::from_ref(s)));
    let failed = verification.as_ref().is_some_and(|v| !v.passed);
    let verum = out.disjuncts.iter().any(Vec::is_empty);
    let result = RewriteOut {
        input: before.to_string(),
        ctx: out.ctx.clone(),
        rewritten: out.to_string(),
        formula: out.to_formula().to_string(),
        threshold: out.size_threshold,
        true_above: verum.then_some(out.size_threshold),
        assumptions: out.assumptions.clone(),
        branches: out.branches.clone(),
        derivation: derivation(&out),
        verification,
    };
    let mut h = String::new();
    writeln!(h, "input: {}", result.input)?;
    writeln!(h, "rewritten over ({}):", result.ctx.join(", "))?;
    writeln!(h, "  {}", result.rewritten)?;
    writeln!(h, "threshold: {}", result.threshold)?;
    if let Some(n) = result.true_above {
        writeln!(h, "true above {n}")?;
    }
    for asm in &result.assumptions {
        writeln!(h, "assumption: {}", serde_json::to_string(asm)?)?;
    }
    for b in &result.branches {
        let reference = b
            .reference_solutions
            .map_or(String::new(), |n| format!(" ({n} reference solutions)"));
        let kind = serde_json::to_value(b.branch)?;
        writeln!(
            h,
            "branch: `{}` disjunct {}: {}{reference}",
            b.var,
            b.disjunct,
            kind.as_str().unwrap_or_default()
        )?;
    }
    writeln!(h, "derivation:")?;
    for st in &result.derivation {
        let from = if st.premises.is_empty() {
            String::new()
        } else {
            format!("  <- {:?}", st.premises)
        };
        writeln!(
            h,
            "  [{}] {}: {} over ({}) {}{from}",
            st.id,
            st.rule,
            st.formula,
            st.ctx.join(", "),
            st.bound
        )?;
    }
    if let Some(v) = &result.verification {
        let verdict = if v.passed { "passed" } else { "FAILED" };
        writeln!(
            h,
            "verification on reference: {verdict} ({} checked, {} skipped, {} counterexamples, {} certificate violations)",
            v.checked,
            v.skipped.len(),
            v.counterexamples.len(),
            v.certificate_violations.len()
        )?;
        for skip in &v.skipped {
            let why = match &skip.reason {
                SkipReason::BelowThreshold { size } => {
                    format!("size {size} is not above the threshold")
                }
                SkipReason::AxiomViolated => "an asserted bound fails on it".into(),
                SkipReason::AssumptionFailed => "a recorded assumption fails on it".into(),
                SkipReason::EvalError { message } => message.clone(),
            };
            writeln!(h, "  skipped: {why}")?;
        }
    }
    report(&result, h, failed)
}

pub fn verify(a: &VerifyArgs, seed: Option<u64>) -> Result<Report> {
    let mut spec: CorpusSpec = serde_json::from_str(&read(&a.spec)?)
        .with_context(|| format!("parsing {}", a.spec.display()))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let r = run_suite_named(&spec, &a.suite)?;
    let human = r.to_string();
    report(&r, human, !r.passed)
}

#[derive(Serialize)]
struct Member {
    index: usize,
    params: Vec<String>,
    instance: String,
}

#[derive(Serialize)]
struct ThresholdOut {
    k_star: Threshold,
    whole_consistent: bool,
}

#[derive(Serialize)]
struct FcpOut {
    formula: String,
    x: Vec<String>,
    y: Vec<String>,
    family_size: usize,
    max_fiber: usize,
    k: usize,
    greedy: Greedy,
    subfamily: Vec<Member>,
    threshold: Option<ThresholdOut>,
}

fn threshold_text(t: &ThresholdOut) -> String {
    match t.k_star {
        Threshold::All => "every subfamily is consistent".into(),
        Threshold::Upto(k) => format!(
            "every {k}-element subfamily is consistent, some {}-element one is not; whole family {}",
            k + 1,
            if t.whole_consistent { "consistent" } else { "inconsistent" }
        ),
    }
}

pub fn fcp(a: &FcpArgs) -> Result<Report> {
    if let Some(m) = a.demo {
        let (_, rows) = fcp_demo(m)?;
        let mut h = String::from("i  family  k*  whole\n");
        for r in &rows {
            let k = match r.k_star {
                Threshold::All => "all".to_string(),
                Threshold::Upto(k) => k.to_string(),
            };
            writeln!(
                h,
                "{:<2} {:<7} {:<3} {}",
                r.i, r.family_size, k, r.whole_consistent
            )?;
        }
        return report(&rows, h, false);
    }
    let (Some(path), Some(text), Some(x), Some(params)) =
        (&a.structure, &a.formula, &a.x, &a.params)
    else {
        bail!("give a structure, --formula, --x and --params");
    };
    let s = load_structure(path)?;
    let (f, free) = formula_with_ctx(text, None)?;
    let x = split_list(x);
    let y = match &a.y {
        Some(y) => split_list(y),
        None => free.into_iter().filter(|v| !x.contains(v)).collect(),
    };
    let tuples = parse_params(&read(params)?, &s, y.len())
        .with_context(|| format!("parsing {}", params.display()))?;
    let fam = ParameterFamily::new(&s, f.clone(), x.clone(), y.clone(), tuples)?;
    let k = a.k.unwrap_or(fam.max_fiber() + 1);
    let greedy = greedy_subfamily(&fam, k)?;
    let subfamily = match &greedy {
        Greedy::Consistent => Vec::new(),
        Greedy::Inconsistent(ix) => ix
            .iter()
            .map(|&i| Member {
                index: i,
                params: names(&s, fam.params()[i].iter().copied()),
                instance: fam.instance(i).to_string(),
            })
            .collect(),
    };
    let threshold = if fam.len() <= EXHAUSTIVE_LIMIT {
        let (k_star, whole_consistent) = consistency_threshold(&fam)?;
        Some(ThresholdOut {
            k_star,
            whole_consistent,
        })
    } else {
        None
    };
    let out = FcpOut {
        formula: f.to_string(),
        x,
        y,
        family_size: fam.len(),
        max_fiber: fam.max_fiber(),
        k,
        greedy,
        subfamily,
        threshold,
    };
    let mut h = String::new();
    writeln!(
        h,
        "family of {} instances of {} with x = ({}), y = ({})",
        out.family_size,
        out.formula,
        out.x.join(", "),
        out.y.join(", ")
    )?;
    writeln!(h, "largest fiber {}, K = {}", out.max_fiber, out.k)?;
    match &out.greedy {
        Greedy::Consistent => writeln!(h, "greedy: the whole family is consistent")?,
        Greedy::Inconsistent(ix) => {
            writeln!(
                h,
                "greedy: inconsistent subfamily of size {}: {ix:?}",
                ix.len()
            )?;
            for m in &out.subfamily {
                writeln!(h, "  {}: {}", m.index, m.instance)?;
            }
        }
    }
    match &out.threshold {
        Some(t) => writeln!(h, "threshold: {}", threshold_text(t))?,
        None => writeln!(
            h,
            "threshold: not computed (family larger than {EXHAUSTIVE_LIMIT})"
        )?,
    }
    report(&out, h, false)
}

#[derive(Serialize)]
struct MapOut {
    component_map: bool,
    isomorphism: bool,
    fixes_base: bool,
}

#[derive(Serialize)]
struct ComponentsOut {
    designated: Option<Vec<String>>,
    provenance: mutalg::components::Provenance,
    base: Vec<String>,
    components: Vec<Vec<String>>,
    map: Option<MapOut>,
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn components(a: &ComponentsArgs) -> Result<Report> {
    let s = load_structure(&a.structure)?;
    let designated = match &a.designate {
        Some(list) => split_list(list),
        None => default_designation(&s, a.max_k),
    };
    let build = |t: &Structure| -> Result<ComponentDecomposition> {
        Ok(match &a.decomposition {
            Some(p) => parse_decomposition(&read(p)?, t)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => decompose(t, &designated)?,
        })
    };
    let d = build(&s)?;
    let map = match &a.map {
        Some(p) => {
            let target = a.target.as_deref().map(load_structure).transpose()?;
            let t = target.as_ref().unwrap_or(&s);
            let d2 = if target.is_some() {
                build(t)?
            } else {
                d.clone()
            };
            let f =
                parse_map(&read(p)?, &s, t).with_context(|| format!("parsing {}", p.display()))?;
            Some(MapOut {
                component_map: is_component_map(&f, &s, &d, t, &d2)?,
                isomorphism: is_isomorphism(&f, &s, t)?,
                fixes_base: fixes_base(&f, &s, t),
            })
        }
        None => None,
    };
    let out = ComponentsOut {
        designated: a.decomposition.is_none().then(|| designated.clone()),
        provenance: d.provenance(),
        base: names(&s, d.base().iter().copied()),
        components: d
            .components()
            .iter()
            .map(|c| names(&s, c.iter().copied()))
            .collect(),
        map,
    };
    let mut h = String::new();
    match &out.designated {
        Some(rels) => writeln!(
            h,
            "designated: {}",
            if rels.is_empty() {
                "(none)".into()
            } else {
                rels.join(", ")
            }
        )?,
        None => writeln!(h, "designated: from decomposition file")?,
    }
    writeln!(
        h,
        "base: {}",
        if out.base.is_empty() {
            "(empty)".into()
        } else {
            out.base.join(" ")
        }
    )?;
    writeln!(
        h,
        "{} components ({:?}):",
        out.components.len(),
        out.provenance
    )?;
    for c in &out.components {
        writeln!(h, "  {}", c.join(" "))?;
    }
    if let Some(m) = &out.map {
        writeln!(
            h,
            "component map: {}; isomorphism: {}; fixes base: {}",
            yes(m.component_map),
            yes(m.isomorphism),
            yes(m.fixes_base)
        )?;
    }
    report(&out, h, false)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(a: &GenerateArgs, seed: Option<u64>) -> Result<Report> {
    if let Some(m) = a.mated_pairs {
        let (s, d, f) = mated_pairs_fixture(m)?;
        let text = serialize_structure(&s);
        let mut h = String::new();
        match &a.out {
            Some(p) => {
                write(p, &text)?;
                writeln!(h, "structure: {}", p.display())?;
            }
            None => h.push_str(&text),
        }
        if let Some(p) = &a.map_out {
            write(p, &serialize_map(&f, &s, &s))?;
            writeln!(h, "map: {}", p.display())?;
        }
        if let Some(p) = &a.decomposition_out {
            write(p, &serialize_decomposition(&d, &s))?;
            writeln!(h, "decomposition: {}", p.display())?;
        }
        let out = json!({
            "structure": a.out.as_ref().map_or(Value::String(text.clone()), |p| json!(p)),
            "map": a.map_out,
            "decomposition": a.decomposition_out,
        });
        return Ok(Report {
            json: out,
            human: h,
            failed: false,
        });
    }
    let mut spec = match &a.spec {
        Some(p) => {
            serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => CorpusSpec::new(0, a.count),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let Some(dir) = &a.out else {
        bail!("--out DIR is required to write a corpus");
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut index = Vec::new();
    for case in expand(&spec)? {
        let file = format!("case-{:04}.structure", case.index);
        write(&dir.join(&file), &serialize_structure(&case.structure))?;
        index.push(json!({
            "index": case.index,
            "structure": file,
            "formula": case.formula.to_string(),
            "ctx": case.ctx,
        }));
    }
    write(
        &dir.join("cases.json"),
        &serde_json::to_string_pretty(&index)?,
    )?;
    let out = json!({ "seed": spec.seed, "cases": index.len(), "dir": dir });
    let human = format!(
        "wrote {} cases (seed {}) to {}\n",
        index.len(),
        spec.seed,
        dir.display()
    );
    Ok(Report {
        json: out,
        human,
        failed: false,
    })
}
