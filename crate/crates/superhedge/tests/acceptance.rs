//! Acceptance run: one PASS/FAIL line per criterion, then the full-run time.
//! Every check is exact; the standard plan supplies the required sample sizes.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use superhedge::ext::{frac, Ext};
use superhedge::fixtures;
use superhedge::pricing::{backward_price, global_oracle, one_step};
use superhedge::verify::{run_suite, Plan, Suite, Tally};

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(problems: Vec<String>, summary: String) -> Self {
        if problems.is_empty() {
            Verdict { ok: true, detail: summary }
        } else {
            Verdict { ok: false, detail: format!("{summary}; {}", problems.join("; ")) }
        }
    }
}

/// Problems with the checks whose names start with one of `prefixes`: any
/// failure, and any prefix that ran no instance at all.
fn audit(tally: &Tally, prefixes: &[&str], problems: &mut Vec<String>) -> usize {
    let mut instances = 0;
    for prefix in prefixes {
        let matching: Vec<_> = tally.matching(prefix).collect();
        let ran: usize = matching.iter().map(|c| c.instances).sum();
        if ran == 0 {
            problems.push(format!("no instance of {prefix}*"));
        }
        instances += ran;
        for c in matching {
            if let Some(f) = c.failures.first() {
                problems.push(format!("{} failed {}/{} (first: {f})", c.name, c.failures.len(), c.instances));
            }
        }
    }
    instances
}

fn at_least(tally: &Tally, counter: &str, min: usize, problems: &mut Vec<String>) -> usize {
    let n = tally.counter(counter);
    if n < min {
        problems.push(format!("{counter}={n} < {min}"));
    }
    n
}

fn within(elapsed: Duration, limit: Duration, problems: &mut Vec<String>) {
    if elapsed >= limit {
        problems.push(format!("took {:.2}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()));
    }
}

fn timed(suite: Suite, plan: &Plan) -> (Tally, Duration) {
    let start = Instant::now();
    let report = run_suite(suite, plan, 0);
    (report.tally, start.elapsed())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let model = fixtures::m1();
    let hm = model.market().expect("fixture m1 builds");
    let kit = model.kit(&hm).expect("m1 carries a claim").expect("m1 claim is valid");
    let base = hm.base();
    let claim = kit.g.at(1).to_ext();
    let step = one_step(&base, 0, &claim).expect("one period");
    let backward = backward_price(&base, &claim).expect("prices");
    let (oracle, atoms) = global_oracle(&base, &claim).expect("prices");
    let elapsed = start.elapsed();
    let third = Ext::Fin(frac(1, 3));
    let hedge = Some(vec![frac(2, 3)]);
    let mut problems = Vec::new();
    let pipelines = [
        ("one_step", step.price.get(0).cloned(), step.atoms[0].theta.clone()),
        ("backward_price", backward.prices[0].get(0).cloned(), backward.steps[0][0].theta.clone()),
        ("global_oracle", oracle.get(0).cloned(), atoms[0].outcome.as_ref().and_then(|o| o.argmin.clone())),
    ];
    for (name, value, theta) in pipelines {
        if value.as_ref() != Some(&third) || theta != hedge {
            problems.push(format!("{name} gave {value:?} with {theta:?}"));
        }
    }
    within(elapsed, Duration::from_secs(1), &mut problems);
    Verdict::new(problems, format!("price=1/3 theta=2/3 in {:.3}s", elapsed.as_secs_f64()))
}

fn criterion_2(tally: &Tally, elapsed: Duration) -> Verdict {
    let mut problems = Vec::new();
    let families = [
        "tower.",
        "positive_part.",
        "duality.",
        "indicator.",
        "change_of_density.a.",
        "change_of_density.b.",
        "change_of_density.c",
        "change_of_density.d",
        "change_of_density.e",
        "change_of_density.f.",
        "change_of_density.g.",
        "essinf_corollary.",
        "counterexample",
        "horizon_indicators.",
        "qtilde_corollary.",
        "g_vs_f.",
        "projection_sup.",
    ];
    let checked = audit(tally, &families, &mut problems);
    let n = at_least(tally, "instances", 500, &mut problems);
    let null = at_least(tally, "instances_with_null_density", 50, &mut problems);
    within(elapsed, Duration::from_secs(30), &mut problems);
    Verdict::new(problems, format!("{n} instances, {null} with P(Z=0)>0, {checked} checks, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_3(tally: &Tally, elapsed: Duration) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(tally, &["one_step."], &mut problems);
    for class in ["survival_strict", "survival_incl", "at_default", "mixed"] {
        audit(tally, &[&format!("one_step.alive.{class}"), &format!("one_step.after_horizon.{class}")], &mut problems);
    }
    let n = at_least(tally, "models", 300, &mut problems);
    within(elapsed, Duration::from_secs(60), &mut problems);
    Verdict::new(problems, format!("{n} models, {checked} checks, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_4(tally: &Tally) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(
        tally,
        &["aip_theorem.stopped_iff_tilde", "aip_theorem.tilde_implies_bar", "m3.", "no_jump_corollary", "predictable.", "certificate."],
        &mut problems,
    );
    let sweep = at_least(tally, "sweep_models", 300, &mut problems);
    let predictable = at_least(tally, "predictable_instances", 100, &mut problems);
    let no_jump = tally.counter("no_jump_hypothesis");
    Verdict::new(
        problems,
        format!("{sweep} sweep models ({no_jump} under the no-jump hypothesis), {predictable} predictable processes, {checked} checks"),
    )
}

fn criterion_5(tally: &Tally) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(tally, &["universal.", "deadzone.", "certificate.universal_stopped", "certificate.deadzone_"], &mut problems);
    let models = at_least(tally, "universal_models", 100, &mut problems);
    let paths = tally.instances("universal.stopping_preserves_aip");
    if paths < 100 * 100 {
        problems.push(format!("only {paths} stopped processes checked"));
    }
    let dead = at_least(tally, "deadzone_models", 20, &mut problems);
    Verdict::new(problems, format!("{models} z_identity models x {paths} paths, {dead} with_deadzone models, {checked} checks"))
}

fn criterion_6(tally: &Tally) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(tally, &["multistep.tilde_aip", "oracle.", "g_form.", "m1.", "m2."], &mut problems);
    let n = at_least(tally, "models", 50, &mut problems);
    Verdict::new(problems, format!("{n} models, {checked} checks"))
}

fn criterion_7(tally: &Tally, elapsed: Duration) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(tally, &["telescoping.", "quadruplet.", "martingale.", "identities.", "m2.vtilde"], &mut problems);
    let n = at_least(tally, "models", 100, &mut problems);
    let ids = at_least(tally, "identity_instances", 200, &mut problems);
    within(elapsed, Duration::from_secs(60), &mut problems);
    Verdict::new(problems, format!("{n} models, {ids} (M,V) pairs, {checked} checks, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_8(tally: &Tally) -> Verdict {
    let mut problems = Vec::new();
    let checked = audit(tally, &["options."], &mut problems);
    let n = at_least(tally, "options_models", 100, &mut problems);
    Verdict::new(problems, format!("{n} models, {checked} checks"))
}

fn main() -> ExitCode {
    let plan = Plan::standard();
    let mut out = std::io::stdout().lock();
    let mut all_ok = true;
    let mut emit = |index: usize, v: Verdict| {
        all_ok &= v.ok;
        let status = if v.ok { "PASS" } else { "FAIL" };
        writeln!(out, "{status} criterion {index}: {}", v.detail).expect("stdout");
        out.flush().expect("stdout");
    };

    let overall = Instant::now();
    emit(1, criterion_1());
    let (esssup, t_esssup) = timed(Suite::Esssup, &plan);
    emit(2, criterion_2(&esssup, t_esssup));
    let (onestep, t_onestep) = timed(Suite::Onestep, &plan);
    emit(3, criterion_3(&onestep, t_onestep));
    let (aip, _) = timed(Suite::Aip, &plan);
    emit(4, criterion_4(&aip));
    emit(5, criterion_5(&aip));
    let (multistep, _) = timed(Suite::Multistep, &plan);
    emit(6, criterion_6(&multistep));
    let (decomp, t_decomp) = timed(Suite::Decomp, &plan);
    emit(7, criterion_7(&decomp, t_decomp));
    emit(8, criterion_8(&multistep));
    let total = overall.elapsed();
    let mut problems = Vec::new();
    within(total, Duration::from_secs(180), &mut problems);
    let ok = problems.is_empty();
    all_ok &= ok;
    println!(
        "{} full run: {:.2}s for every suite under the standard plan{}",
        if ok { "PASS" } else { "FAIL" },
        total.as_secs_f64(),
        problems.first().map_or_else(String::new, |p| format!("; {p}"))
    );
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
