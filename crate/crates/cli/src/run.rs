//! Executes the requests of a config in declared order.

use serde_json::{json, Value};
use std::time::Instant;
use symdyn::groups::{folner_search, FolnerBudget};
use symdyn::schottky::{
    roof_convergence, roof_cylinder, PoincareData, QuotientSpec, DEFAULT_WORD_CAP,
};
use symdyn::sft::{orbital_pressure, spectral_pressure_detailed};
use symdyn::skew::{
    amenability_verdict, gurevich_estimate, p_n_count, transitivity_probe, GurevichEstimate,
    GurevichParams, VerdictRules,
};
use symdyn::walks::{cogrowth_estimate, kesten_estimate, WalkSpec};
use symdyn::zeta::{delta_root, delta_sub_root, perry_check, ZetaData};

use crate::config::{ExperimentConfig, Request, RulesDef, SchottkyAction, Workspace};
use crate::exit::Failure;
use crate::report::{num, opt, Check, ErrorEntry, Report, RequestResult, Status, Table, Timing};
use crate::suite::{run_schottky, run_symbolic, Preset};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const DEFAULT_ZETA_WORD_CAP: u64 = 1 << 26;
const DEFAULT_COUNT_CAP: u64 = 1 << 28;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub budget_mb: Option<u64>,
    pub n_max: Option<usize>,
    pub tolerance: Option<f64>,
    /// Run only requests with this `op`.
    pub only_op: Option<String>,
    /// With `only_op = "schottky"`, run only this action.
    pub schottky_action: Option<SchottkyAction>,
}

pub struct Outcome {
    pub report: Report,
    pub timings: Vec<Timing>,
    /// First failure, which decides the exit code.
    pub failure: Option<Failure>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, Failure::exit_code)
    }
}

/// Memory budget translated into per-operation caps.
#[derive(Clone, Copy, Debug)]
struct Caps {
    holonomy_keys: usize,
    walk_keys: usize,
    poincare_words: usize,
}

impl Caps {
    fn new(budget_mb: Option<u64>) -> Self {
        match budget_mb {
            None => Caps {
                holonomy_keys: symdyn::skew::DEFAULT_KEY_CAP,
                walk_keys: symdyn::walks::DEFAULT_KEY_CAP,
                poincare_words: DEFAULT_WORD_CAP,
            },
            Some(mb) => {
                let bytes = (mb as usize).saturating_mul(1 << 20);
                Caps {
                    // two layers of (state, element, mass) entries
                    holonomy_keys: (bytes / 160).max(1),
                    walk_keys: (bytes / 64).max(1),
                    poincare_words: DEFAULT_WORD_CAP,
                }
            }
        }
    }
}

struct Ctx {
    ws: Workspace,
    caps: Caps,
    tolerance: f64,
    n_max: Option<usize>,
}

type OpOutput = (Value, Vec<Table>, Vec<Check>);

pub fn execute(config: &ExperimentConfig, opts: &RunOptions) -> Outcome {
    let threads = opts.threads.or(config.threads).unwrap_or(1).max(1);
    let tolerance = opts.tolerance.or(config.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    let mut report = Report {
        format_version: crate::report::FORMAT_VERSION,
        seed: config.seed,
        threads,
        tolerance,
        results: Vec::new(),
    };
    let fail = |report, f| Outcome {
        report,
        timings: Vec::new(),
        failure: Some(f),
    };
    if let Some(b) = opts.budget_mb.or(config.budget_mb) {
        if b == 0 {
            return fail(report, Failure::Validation("budget_mb: must be positive".into()));
        }
    }
    if !(tolerance > 0.0) {
        return fail(report, Failure::Validation("tolerance: must be positive".into()));
    }
    let ws = match Workspace::build(config) {
        Ok(ws) => ws,
        Err(f) => return fail(report, f),
    };
    let selected: Vec<(usize, Request)> = config
        .requests
        .iter()
        .enumerate()
        .filter(|(_, r)| opts.only_op.as_deref().is_none_or(|op| r.op() == op))
        .filter(|(_, r)| match (opts.schottky_action, r) {
            (Some(a), Request::Schottky { action, .. }) => *action == a,
            _ => true,
        })
        .map(|(i, r)| {
            let mut r = r.clone();
            if let Some(n) = opts.n_max {
                r.set_n_max(n);
            }
            (i, r)
        })
        .collect();
    if selected.is_empty() {
        let what = match (&opts.only_op, opts.schottky_action) {
            (Some(op), Some(a)) => format!("`{op} {}` requests", a.as_str()),
            (Some(op), None) => format!("`{op}` requests"),
            _ => "requests".to_string(),
        };
        return fail(report, Failure::Validation(format!("config has no {what}")));
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return fail(report, Failure::Validation(format!("threads: {e}"))),
    };
    let ctx = Ctx {
        ws,
        caps: Caps::new(opts.budget_mb.or(config.budget_mb)),
        tolerance,
        n_max: opts.n_max,
    };
    let mut timings = Vec::new();
    let mut failure = None;
    pool.install(|| {
        for (index, req) in &selected {
            let start = Instant::now();
            let out = ctx.run(req);
            timings.push(Timing {
                index: *index,
                op: req.op().to_string(),
                seconds: start.elapsed().as_secs_f64(),
            });
            let mut entry = RequestResult {
                index: *index,
                op: req.op().to_string(),
                status: Status::Ok,
                result: None,
                error: None,
                checks: Vec::new(),
                tables: Vec::new(),
                table_data: Vec::new(),
            };
            let f = match out {
                Ok((value, tables, checks)) => {
                    entry.result = Some(value);
                    entry.tables = tables.iter().map(|t| t.file_name(*index, req.op())).collect();
                    entry.table_data = tables;
                    let bad: Vec<String> = checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| format!("{} = {} (expected {} ± {})", c.name, c.value, c.expected, c.tolerance))
                        .collect();
                    entry.checks = checks;
                    (!bad.is_empty()).then(|| Failure::Check(bad.join("; ")))
                }
                Err(f) => Some(f),
            };
            if let Some(f) = f {
                let f = f.with_prefix(&format!("requests[{index}] ({})", req.op()));
                entry.status = Status::Failed;
                entry.error = Some(ErrorEntry {
                    kind: f.kind().to_string(),
                    message: f.message().to_string(),
                });
                failure.get_or_insert(f);
            }
            report.results.push(entry);
        }
    });
    Outcome {
        report,
        timings,
        failure,
    }
}

fn check(name: &str, value: f64, expected: Option<f64>, tolerance: f64) -> Vec<Check> {
    expected
        .map(|e| Check {
            name: name.to_string(),
            value,
            expected: e,
            tolerance,
            passed: (value - e).abs() <= tolerance,
        })
        .into_iter()
        .collect()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn gurevich_table(est: &GurevichEstimate) -> Table {
    let mut t = Table::new("terms", &["n", "count", "log_sum", "a_n", "base_a_n", "deficit"]);
    for term in &est.terms {
        t.push(vec![
            term.n.to_string(),
            term.count.to_string(),
            num(term.log_sum),
            num(term.a_n),
            num(term.base_a_n),
            num(term.deficit),
        ]);
    }
    t
}

impl Ctx {
    fn params(&self, n_max: usize) -> GurevichParams {
        let mut p = GurevichParams::new(n_max);
        p.key_cap = self.caps.holonomy_keys;
        p
    }

    fn run(&self, req: &Request) -> Result<OpOutput, Failure> {
        let ws = &self.ws;
        let tol = self.tolerance;
        match req {
            Request::Entropy { shift, expect } => {
                let sft = ws.sft(shift, "shift")?;
                let sp = spectral_pressure_detailed(sft, &symdyn::sft::EdgePotential::zero(sft))?;
                let value = json!({
                    "shift": shift,
                    "entropy": sp.pressure,
                    "iterations": sp.iterations,
                    "residual": sp.residual,
                    "period": sft.period(),
                });
                Ok((value, vec![], check("entropy", sp.pressure, *expect, tol)))
            }
            Request::Pressure { shift, potential, orbital_n_max, expect } => {
                let sft = ws.sft(shift, "shift")?;
                let f = ws.potential(potential.as_deref(), shift, "potential")?;
                let sp = spectral_pressure_detailed(sft, &f)?;
                let mut tables = Vec::new();
                let mut value = json!({
                    "shift": shift,
                    "potential": potential,
                    "pressure": sp.pressure,
                    "iterations": sp.iterations,
                    "residual": sp.residual,
                });
                if let Some(n) = orbital_n_max {
                    let orb = orbital_pressure(sft, &f, *n)?;
                    let mut t = Table::new("orbital", &["n", "a_n"]);
                    for (n, a) in &orb.terms {
                        t.push(vec![n.to_string(), num(*a)]);
                    }
                    tables.push(t);
                    value["orbital"] = json!({ "limit": orb.limit, "c": orb.c });
                }
                Ok((value, tables, check("pressure", sp.pressure, *expect, tol)))
            }
            Request::Gurevich { skew, potential, n_max, n_min, truncation, expect } => {
                let (shift, sk) = ws.skew(skew, "skew")?;
                let f = ws.potential(potential.as_deref(), shift, "potential")?;
                let mut params = self.params(*n_max);
                if let Some(m) = n_min {
                    params.n_min = *m;
                }
                if let Some(t) = truncation {
                    params.truncation = *t;
                }
                let est = gurevich_estimate(sk, &f, &params)?;
                let checks = check("limit", est.limit, *expect, tol);
                let table = gurevich_table(&est);
                Ok((json!({ "skew": skew, "estimate": to_value(&est) }), vec![table], checks))
            }
            Request::Delta { shift, roof, expect } => {
                let sft = ws.sft(shift, "shift")?;
                let r = ws.roof(roof, shift, "roof")?;
                let d = delta_root(sft, r)?;
                let value = json!({ "shift": shift, "roof": roof, "delta": d, "r_min": r.r_min(), "r_max": r.r_max() });
                Ok((value, vec![], check("delta", d, *expect, tol)))
            }
            Request::DeltaSub { skew, roof, n_max, expect } => {
                let (shift, sk) = ws.skew(skew, "skew")?;
                let r = ws.roof(roof, shift, "roof")?;
                let est = delta_sub_root(sk, r, &self.params(*n_max))?;
                let d = delta_root(sk.base(), r)?;
                let table = gurevich_table(&est.at_root);
                let checks = check("xi", est.xi, *expect, tol);
                let value = json!({
                    "skew": skew,
                    "roof": roof,
                    "xi": est.xi,
                    "uncertainty": est.uncertainty,
                    "evaluations": est.evaluations,
                    "delta_root": d,
                    "at_root": to_value(&est.at_root),
                });
                Ok((value, vec![table], checks))
            }
            Request::Kesten { group, n_max, steps, expect } => {
                let g = ws.group(group, "group")?.clone();
                let walk = match steps {
                    None => WalkSpec::simple(g),
                    Some(steps) => {
                        let support = steps
                            .iter()
                            .map(|(w, p)| Ok((g.evaluate_str(w)?, *p)))
                            .collect::<symdyn::Result<Vec<_>>>()?;
                        WalkSpec::new(g, support)?
                    }
                };
                let est = kesten_estimate(&walk, *n_max, self.caps.walk_keys)?;
                let mut t = Table::new("series", &["length", "value", "closed_walks", "root"]);
                let s = &est.series;
                for i in 0..s.lengths.len() {
                    let cw = s.closed_walks.as_ref().map(|c| c[i].to_string()).unwrap_or_default();
                    t.push(vec![s.lengths[i].to_string(), num(s.values[i]), cw, num(s.roots[i])]);
                }
                let checks = check("lambda", est.lambda, *expect, tol);
                Ok((json!({ "group": group, "estimate": to_value(&est) }), vec![t], checks))
            }
            Request::Cogrowth { group, n_max, expect } => {
                let g = ws.group(group, "group")?;
                let est = cogrowth_estimate(g, *n_max, self.caps.walk_keys)?;
                let mut t = Table::new("counts", &["n", "count", "root"]);
                for (i, c) in est.counts.iter().enumerate() {
                    t.push(vec![(i + 1).to_string(), c.to_string(), opt(est.roots[i])]);
                }
                let checks = check("limsup", est.limsup, *expect, tol);
                Ok((json!({ "group": group, "estimate": to_value(&est) }), vec![t], checks))
            }
            Request::Folner { group, epsilon, max_set_size, max_radius, shave_steps } => {
                let g = ws.group(group, "group")?;
                let mut budget = FolnerBudget::default();
                if let Some(v) = max_set_size {
                    budget.max_set_size = *v;
                }
                if let Some(v) = max_radius {
                    budget.max_radius = *v;
                }
                if let Some(v) = shave_steps {
                    budget.shave_steps = *v;
                }
                let found = folner_search(g, *epsilon, &g.symmetric_generators(), &budget)?;
                let mut value = json!({
                    "group": group,
                    "epsilon": epsilon,
                    "size": found.set.len(),
                    "defect": found.defect,
                    "origin": found.origin,
                });
                if found.set.len() <= 1000 {
                    value["elements"] = json!(found.set.iter().map(|x| g.format(x)).collect::<Vec<_>>());
                }
                Ok((value, vec![], vec![]))
            }
            Request::Zeta { skew, roof, n_max, s, word_cap } => {
                let (shift, sk) = ws.skew(skew, "skew")?;
                let r = ws.roof(roof, shift, "roof")?;
                let data = ZetaData::collect(sk, r, *n_max, word_cap.unwrap_or(DEFAULT_ZETA_WORD_CAP))?;
                let d = delta_root(sk.base(), r)?;
                let mut counts = Table::new("counts", &["n", "p_count"]);
                for n in 1..=data.n_max() {
                    counts.push(vec![n.to_string(), data.p_count(n).to_string()]);
                }
                let mut partials = Table::new("partials", &["s", "log_z", "growth", "diverging"]);
                let mut values = Vec::new();
                for &sv in s {
                    let p = data.partial(sv);
                    partials.push(vec![
                        num(sv),
                        num(p.log_z),
                        opt(p.growth),
                        p.diverging.map(|b| b.to_string()).unwrap_or_default(),
                    ]);
                    values.push(to_value(&p));
                }
                let abscissa = data.abscissa(0.0, 2.0 * d + 1.0).ok();
                let value = json!({
                    "skew": skew,
                    "roof": roof,
                    "delta_root": d,
                    "abscissa": abscissa,
                    "partials": values,
                });
                Ok((value, vec![counts, partials], vec![]))
            }
            Request::Count { skew: Some(skew), n_max, word_cap, .. } => {
                let (_, sk) = ws.skew(skew, "skew")?;
                let n_max = n_max.expect("validated");
                let cap = word_cap.unwrap_or(DEFAULT_COUNT_CAP);
                let mut t = Table::new("holonomy", &["n", "q", "p", "sandwich"]);
                let mut rows = Vec::new();
                for n in 1..=n_max {
                    let c = p_n_count(sk, n, cap)?;
                    t.push(vec![n.to_string(), c.q.to_string(), c.p.to_string(), c.sandwich_holds().to_string()]);
                    rows.push(to_value(&c));
                }
                Ok((json!({ "skew": skew, "counts": rows }), vec![t], vec![]))
            }
            Request::Count { shift: Some(shift), roof: Some(roof), t_max, word_cap, .. } => {
                let sft = ws.sft(shift, "shift")?;
                let r = ws.roof(roof, shift, "roof")?;
                let p = perry_check(sft, r, t_max.expect("validated"), word_cap.unwrap_or(DEFAULT_COUNT_CAP))?;
                let mut rows = Table::new("periods", &["n", "points", "orbits", "prime_orbits"]);
                for row in &p.table.rows {
                    rows.push(vec![
                        row.n.to_string(),
                        row.points.to_string(),
                        row.orbits.to_string(),
                        row.prime_orbits.to_string(),
                    ]);
                }
                let mut perry = Table::new("perry", &["t", "count", "ratio"]);
                for pt in &p.points {
                    perry.push(vec![num(pt.t), pt.count.to_string(), num(pt.ratio)]);
                }
                let value = json!({
                    "shift": shift,
                    "roof": roof,
                    "t_max": p.table.t_max,
                    "h": p.h,
                    "lattice": p.lattice,
                    "span": p.span,
                    "final_ratio": p.final_ratio(),
                    "growth_rate": p.table.growth_rate,
                    "truncated": p.table.truncated,
                    "prime_orbits": p.table.prime_lengths.len(),
                    "all_orbits": p.table.all_lengths.len(),
                });
                Ok((value, vec![rows, perry], vec![]))
            }
            Request::Count { .. } => unreachable!("validated"),
            Request::Schottky { schottky, action, r_max, depth, quotient, n_max, expect } => {
                let s = ws.schottky_group(schottky, "schottky")?;
                let q = quotient
                    .as_ref()
                    .map(|rel| QuotientSpec::from_relations(s.rank(), rel))
                    .transpose()
                    .map_err(|e| Failure::from_core(e).with_prefix("quotient"))?;
                match action {
                    SchottkyAction::Validate => {
                        let value = json!({
                            "schottky": schottky,
                            "rank": s.rank(),
                            "min_gap": s.min_gap(),
                            "disks": to_value(&s.disks()),
                            "generators": to_value(&s.generators()),
                            "alphabet": s.coding().alphabet(),
                        });
                        Ok((value, vec![], vec![]))
                    }
                    SchottkyAction::Delta => {
                        let r_max = r_max.unwrap_or(12);
                        let data = PoincareData::collect(s, r_max, q.as_ref(), self.caps.poincare_words)?;
                        let full = data.delta(false)?;
                        let kernel = if q.is_some() { Some(data.delta(true)?) } else { None };
                        let mut t = Table::new("shells", &["r", "size", "kernel_size", "log_shell_at_delta"]);
                        let sizes = data.shell_sizes(false);
                        let ksizes = data.shell_sizes(true);
                        let at = data.partial(full.delta, false);
                        for r in 0..=r_max {
                            let ks = if q.is_some() { ksizes[r].to_string() } else { String::new() };
                            t.push(vec![r.to_string(), sizes[r].to_string(), ks, num(at.log_shells[r])]);
                        }
                        let target = kernel.as_ref().map_or(full.delta, |k| k.delta);
                        let checks = check("delta", target, *expect, tol);
                        let value = json!({
                            "schottky": schottky,
                            "quotient": quotient,
                            "delta": to_value(&full),
                            "kernel": kernel.as_ref().map(to_value),
                        });
                        Ok((value, vec![t], checks))
                    }
                    SchottkyAction::Roof => {
                        let depth = depth.unwrap_or(4);
                        let rc = roof_cylinder(s, depth)?;
                        let d = delta_root(&rc.sft, &rc.roof)?;
                        let mut t = Table::new("roof", &["from", "to", "value"]);
                        for (i, j) in rc.sft.edges() {
                            t.push(vec![
                                rc.sft.symbol(i).to_string(),
                                rc.sft.symbol(j).to_string(),
                                num(rc.roof.get(i, j)),
                            ]);
                        }
                        // a word using the first two generators, cyclically reduced
                        let word: Vec<usize> = vec![0, 0, 2, 0, 2];
                        let conv = roof_convergence(s, &word, depth.max(8))?;
                        let mut c = Table::new("convergence", &["depth", "error"]);
                        for (m, e) in conv.depths.iter().zip(&conv.errors) {
                            c.push(vec![m.to_string(), num(*e)]);
                        }
                        let value = json!({
                            "schottky": schottky,
                            "depth": depth,
                            "blocks": rc.blocks.len(),
                            "delta": d,
                            "r_min": rc.roof.r_min(),
                            "r_max": rc.roof.r_max(),
                            "convergence": to_value(&conv),
                        });
                        Ok((value, vec![t, c], check("delta", d, *expect, tol)))
                    }
                    SchottkyAction::DeltaSub => {
                        let q = q.expect("validated");
                        let depth = depth.unwrap_or(3);
                        let rc = roof_cylinder(s, depth)?;
                        let skew = rc.kernel_skew(s, &q)?;
                        let est = delta_sub_root(&skew, &rc.roof, &self.params(n_max.unwrap_or(12)))?;
                        let d = delta_root(&rc.sft, &rc.roof)?;
                        let value = json!({
                            "schottky": schottky,
                            "quotient": quotient,
                            "depth": depth,
                            "xi": est.xi,
                            "uncertainty": est.uncertainty,
                            "delta_root": d,
                            "at_root": to_value(&est.at_root),
                        });
                        let table = gurevich_table(&est.at_root);
                        Ok((value, vec![table], check("xi", est.xi, *expect, tol)))
                    }
                }
            }
            Request::VerifyAmenability { skew, potential, n_max, rules, transitivity_depth } => {
                let (shift, sk) = ws.skew(skew, "skew")?;
                let f = ws.potential(potential.as_deref(), shift, "potential")?;
                let rules = merge_rules(rules.as_ref());
                let v = amenability_verdict(sk, &f, &self.params(*n_max), &rules)?;
                let probe = transitivity_probe(sk, transitivity_depth.unwrap_or(3), 1 << 20)?;
                let table = gurevich_table(&v.estimate);
                let value = json!({
                    "skew": skew,
                    "verdict": v.verdict.as_str(),
                    "indicates_amenable": v.verdict.indicates_amenable(),
                    "result": to_value(&v),
                    "transitivity": to_value(&probe),
                    "cocycle_symmetry": sk.symmetry_report().map(to_value),
                });
                Ok((value, vec![table], vec![]))
            }
            Request::Suite { preset } => self.suite(Preset::parse(preset)?),
        }
    }

    fn suite(&self, preset: Preset) -> Result<OpOutput, Failure> {
        match preset {
            Preset::Symbolic => {
                let rows = run_symbolic(self.caps.holonomy_keys, self.n_max)?;
                let mut t = Table::new(
                    "symbolic",
                    &["group", "n_max", "pressure", "gurevich", "deficit", "uncertainty", "decay_exponent", "verdict", "expected", "match"],
                );
                for r in &rows {
                    t.push(vec![
                        r.group.clone(),
                        r.n_max.to_string(),
                        num(r.pressure),
                        num(r.gurevich),
                        num(r.deficit),
                        num(r.uncertainty),
                        opt(r.decay_exponent),
                        r.verdict.as_str().to_string(),
                        to_value(&r.expected).as_str().unwrap_or_default().to_string(),
                        r.matches.map(|b| b.to_string()).unwrap_or_else(|| "informational".into()),
                    ]);
                }
                let mismatches: Vec<&str> = rows
                    .iter()
                    .filter(|r| r.matches == Some(false))
                    .map(|r| r.group.as_str())
                    .collect();
                let value = json!({ "preset": "symbolic", "rows": to_value(&rows), "mismatches": mismatches });
                let checks = vec![Check {
                    name: "mismatches".into(),
                    value: mismatches.len() as f64,
                    expected: 0.0,
                    tolerance: 0.0,
                    passed: mismatches.is_empty(),
                }];
                Ok((value, vec![t], checks))
            }
            Preset::Schottky => {
                let rows = run_schottky(self.caps.poincare_words, None)?;
                let mut t = Table::new(
                    "schottky",
                    &["group", "quotient", "amenable_quotient", "r_max", "delta", "delta_uncertainty", "roof_delta", "kernel_delta", "kernel_uncertainty", "passed"],
                );
                for r in &rows {
                    t.push(vec![
                        r.group.clone(),
                        r.quotient.clone(),
                        r.amenable_quotient.to_string(),
                        r.r_max.to_string(),
                        num(r.delta),
                        num(r.delta_uncertainty),
                        num(r.roof_delta),
                        num(r.kernel_delta),
                        num(r.kernel_uncertainty),
                        r.passed.to_string(),
                    ]);
                }
                let failed = rows.iter().filter(|r| !r.passed).count();
                let value = json!({ "preset": "schottky", "rows": to_value(&rows) });
                let checks = vec![Check {
                    name: "mismatches".into(),
                    value: failed as f64,
                    expected: 0.0,
                    tolerance: 0.0,
                    passed: failed == 0,
                }];
                Ok((value, vec![t], checks))
            }
        }
    }
}

fn merge_rules(def: Option<&RulesDef>) -> VerdictRules {
    let mut r = VerdictRules::default();
    if let Some(d) = def {
        if let Some(v) = d.gap_sigmas {
            r.gap_sigmas = v;
        }
        if let Some(v) = d.min_gap {
            r.min_gap = v;
        }
        if let Some(v) = d.equality_sigmas {
            r.equality_sigmas = v;
        }
        if let Some(v) = d.slow_decay_exponent {
            r.slow_decay_exponent = v;
        }
    }
    r
}

/// Parses and runs a config file.
pub fn execute_path(path: &std::path::Path, opts: &RunOptions) -> Outcome {
    let config = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
        .and_then(|text| ExperimentConfig::from_toml(&text));
    match config {
        Ok(c) => execute(&c, opts),
        Err(f) => Outcome {
            report: Report {
                format_version: crate::report::FORMAT_VERSION,
                seed: 0,
                threads: opts.threads.unwrap_or(1),
                tolerance: opts.tolerance.unwrap_or(DEFAULT_TOLERANCE),
                results: Vec::new(),
            },
            timings: Vec::new(),
            failure: Some(f),
        },
    }
}

/// A config holding a single suite request.
pub fn suite_config(preset: &str) -> ExperimentConfig {
    ExperimentConfig {
        requests: vec![Request::Suite {
            preset: preset.to_string(),
        }],
        ..Default::default()
    }
}
