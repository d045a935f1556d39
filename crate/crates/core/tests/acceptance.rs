//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any failed.

mod common;

use std::collections::HashMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant as WallInstant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shedline::cli::{cmd_run, Overrides};
use shedline::evaluators::{hash_score, oracle_scores, Evaluator};
use shedline::load_monitor::classify_load;
use shedline::model::WorkItem;
use shedline::workload::{compute_metrics, universe_url, Metrics};
use shedline::{
    BatchReport, Duration, Instant, LoadClass, LoadParameters, Provenance, RandomShed, Shedder,
    TrustCache, TrustScore, Url, VirtualClock,
};

use common::{simulate, url, urls, SimParams};

const COST_US: u64 = 10_000;
const UNITS_PER_S: f64 = 1_000_000.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(default_trust: f64) -> LoadParameters {
    LoadParameters {
        u_capacity: 100,
        u_threshold: 50,
        deadline_normal: Duration::from_micros(1_000_000),
        deadline_overload: Duration::from_micros(1_100_000),
        extension_weight: 0.5,
        max_extension_factor: 1.2,
        default_trust: TrustScore::new(default_trust).unwrap(),
    }
}

fn evaluator() -> Evaluator {
    Evaluator::hash(Duration::from_micros(COST_US))
}

fn batch(n: usize) -> Vec<Url> {
    (0..n).map(universe_url).collect()
}

struct Run {
    report: BatchReport,
    cache: TrustCache,
}

fn run(
    engine: shedline::EngineKind,
    params: &LoadParameters,
    urls: &[Url],
    cache: TrustCache,
) -> Run {
    let ev = evaluator();
    let clock = VirtualClock::new();
    let report = Shedder::new(params, &cache, &ev, &clock)
        .run(
            engine,
            urls,
            RandomShed {
                seed: 7,
                shed_fraction: 1.0,
            },
        )
        .expect("engine run");
    Run { report, cache }
}

fn metrics(report: &BatchReport, urls: &[Url]) -> Metrics {
    let oracle = oracle_scores(&evaluator(), &WorkItem::batch(urls)).unwrap();
    compute_metrics(
        report,
        &oracle,
        report.effective_deadline,
        Duration::from_micros(COST_US),
    )
    .unwrap()
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

/// Very heavy load: 400 items against capacity 100 + threshold 50.
fn criterion_1() -> Outcome {
    let t = WallInstant::now();
    let p = params(2.5);
    let urls = batch(400);
    let full = run(shedline::EngineKind::Full, &p, &urls, TrustCache::new()).report;
    let proposed = run(shedline::EngineKind::Proposed, &p, &urls, TrustCache::new()).report;
    let runtime = t.elapsed();

    // Extension 1.1 s * (1 + 0.5 * 250/150) exceeds the cap 1.1 s * 1.2.
    let extended = 1_320_000;
    check(
        proposed.load_class == LoadClass::VeryHeavy,
        "not classified very heavy",
    )?;
    check(
        full.elapsed.as_micros() == 4_000_000,
        format!("full elapsed {:?}", full.elapsed),
    )?;
    check(
        proposed.effective_deadline.as_micros() == extended,
        format!("deadline {:?}", proposed.effective_deadline),
    )?;
    check(
        proposed.elapsed.as_micros() <= extended + COST_US,
        format!("proposed elapsed {:?}", proposed.elapsed),
    )?;
    let speedup = full.elapsed.as_micros() as f64 / proposed.elapsed.as_micros() as f64;
    check(speedup >= 3.0, format!("speedup {speedup:.3}"))?;
    check(runtime.as_secs_f64() < 1.0, format!("runtime {runtime:?}"))?;
    Ok(format!(
        "full {:.3}s, proposed {:.3}s, speedup {speedup:.3}x",
        full.elapsed.as_micros() as f64 / UNITS_PER_S,
        proposed.elapsed.as_micros() as f64 / UNITS_PER_S
    ))
}

/// Heavy load: 150 items, ordering and deadline compliance.
fn criterion_2() -> Outcome {
    let t = WallInstant::now();
    let p = params(2.5);
    let urls = batch(150);
    let full = run(shedline::EngineKind::Full, &p, &urls, TrustCache::new()).report;
    let proposed = run(shedline::EngineKind::Proposed, &p, &urls, TrustCache::new()).report;
    let runtime = t.elapsed();

    check(
        proposed.load_class == LoadClass::Heavy,
        "not classified heavy",
    )?;
    check(
        full.elapsed.as_micros() == 1_500_000,
        format!("full elapsed {:?}", full.elapsed),
    )?;
    check(
        proposed.elapsed.as_micros() <= 1_110_000 && proposed.elapsed < full.elapsed,
        format!("proposed elapsed {:?}", proposed.elapsed),
    )?;
    let met_proposed = metrics(&proposed, &urls).deadline_met;
    let met_full = metrics(&full, &urls).deadline_met;
    check(met_proposed, "proposed missed deadline")?;
    check(!met_full, "full met the overload deadline")?;
    check(runtime.as_secs_f64() < 1.0, format!("runtime {runtime:?}"))?;
    Ok(format!(
        "proposed {:.3}s (met), full {:.3}s (missed), ratio {:.3}",
        proposed.elapsed.as_micros() as f64 / UNITS_PER_S,
        full.elapsed.as_micros() as f64 / UNITS_PER_S,
        full.elapsed.as_micros() as f64 / proposed.elapsed.as_micros() as f64
    ))
}

/// 500 random (batch, params, cache state) triples: nothing dropped or lost.
fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut classes = HashMap::new();
    for case in 0..500 {
        let capacity = rng.gen_range(1..=60);
        let threshold = rng.gen_range(0..=60);
        let cost = rng.gen_range(1..=20_000u64);
        let deadline_normal = rng.gen_range(1..=2_000_000u64);
        let p = LoadParameters {
            u_capacity: capacity,
            u_threshold: threshold,
            deadline_normal: Duration::from_micros(deadline_normal),
            deadline_overload: Duration::from_micros(
                deadline_normal + rng.gen_range(0..=1_000_000),
            ),
            extension_weight: rng.gen_range(0.0..3.0),
            max_extension_factor: rng.gen_range(1.0..4.0),
            default_trust: TrustScore::new(rng.gen_range(0.0..=5.0)).unwrap(),
        };
        let n = rng.gen_range(0..=3 * (capacity + threshold) + 10);
        let universe = rng.gen_range(n.max(1)..=2 * n.max(1));
        let mut pool: Vec<usize> = (0..universe).collect();
        let mut picked = Vec::with_capacity(n);
        for _ in 0..n {
            let j = rng.gen_range(0..pool.len());
            picked.push(pool.swap_remove(j));
        }
        let urls: Vec<Url> = picked.into_iter().map(url).collect();
        let cache = TrustCache::new();
        let warm_share: f64 = rng.gen_range(0.0..1.0);
        for u in &urls {
            if rng.gen_bool(warm_share) {
                cache.insert(
                    u.clone(),
                    TrustScore::new(rng.gen_range(0.0..=5.0)).unwrap(),
                    Instant::ORIGIN,
                );
            }
        }
        let ev = Evaluator::hash(Duration::from_micros(cost));
        let clock = VirtualClock::new();
        let report = Shedder::new(&p, &cache, &ev, &clock)
            .process_batch(&urls)
            .map_err(|e| format!("case {case}: {e}"))?;
        *classes.entry(report.load_class).or_insert(0) += 1;
        check(
            report.items.len() == n && report.uload == n,
            format!("case {case}: item count"),
        )?;
        check(
            report.count(Provenance::Dropped) == 0,
            format!("case {case}: dropped items"),
        )?;
        check(report.counts.total() == n, format!("case {case}: counts"))?;
        let in_order = report
            .items
            .iter()
            .enumerate()
            .all(|(i, s)| s.arrival_index == i && s.url == urls[i]);
        check(in_order, format!("case {case}: order"))?;
    }
    check(
        classes.len() == 3,
        format!("not every regime exercised: {classes:?}"),
    )?;
    Ok(format!(
        "500/500 complete (normal {}, heavy {}, very heavy {})",
        classes[&LoadClass::Normal],
        classes[&LoadClass::Heavy],
        classes[&LoadClass::VeryHeavy]
    ))
}

/// Trust error confined to averaged items, with bounded averaged coverage.
fn criterion_4() -> Outcome {
    let p = params(2.5);
    let urls = batch(400);
    let report = run(shedline::EngineKind::Proposed, &p, &urls, TrustCache::new()).report;
    let m = metrics(&report, &urls);

    let budget = report.effective_deadline.as_micros() - p.u_capacity as u64 * COST_US;
    let bound = (400 - 100 - (budget / COST_US) as usize) as f64 / 400.0;
    check(
        m.coverage_averaged <= bound,
        format!("coverage_averaged {} > {bound}", m.coverage_averaged),
    )?;

    let mut averaged_err = 0.0;
    for item in &report.items {
        let err = (item.score.value() - hash_score(&item.url).value()).abs();
        match item.provenance {
            Provenance::Evaluated | Provenance::CacheHit => check(
                err == 0.0,
                format!("{} scored {} off the oracle", item.url, err),
            )?,
            Provenance::Averaged => averaged_err += err,
            Provenance::Dropped => return Err("proposed engine dropped an item".into()),
        }
    }
    let recomputed = averaged_err / 400.0;
    check(m.trust_mae > 0.0, "no trust degradation at all")?;
    check(
        (m.trust_mae - recomputed).abs() <= 1e-12,
        format!("mae {} vs recomputed {recomputed}", m.trust_mae),
    )?;
    Ok(format!(
        "coverage_averaged {:.4} <= {bound:.4}, trust_mae {:.4} (all from averaged items), mean trust {:.4}",
        m.coverage_averaged, m.trust_mae, m.trust_mean
    ))
}

/// Rerun with the Trust DB persisted from criterion 1's runs.
fn criterion_5() -> Outcome {
    let p = params(2.5);
    let urls = batch(400);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let db = dir.path().join("trust.jsonl");

    let proposed = run(shedline::EngineKind::Proposed, &p, &urls, TrustCache::new());
    let full = run(shedline::EngineKind::Full, &p, &urls, TrustCache::new());
    // Both runs write back into one persisted store.
    let merged: TrustCache = proposed
        .cache
        .entries()
        .into_iter()
        .chain(full.cache.entries())
        .collect();
    merged.save(&db).map_err(|e| e.to_string())?;
    let loaded = TrustCache::load(&db, false).map_err(|e| e.to_string())?;
    check(loaded == merged, "persisted cache differs after reload")?;

    let rerun = run(shedline::EngineKind::Proposed, &p, &urls, loaded).report;
    let m = metrics(&rerun, &urls);
    check(
        rerun.elapsed == Duration::ZERO,
        format!("elapsed {:?}", rerun.elapsed),
    )?;
    check(
        m.coverage_cached == 1.0,
        format!("coverage_cached {}", m.coverage_cached),
    )?;
    check(m.trust_mae == 0.0, format!("trust_mae {}", m.trust_mae))?;

    // With only the proposed engine's own write-back the store fills up
    // 132 URLs per rerun; it must reach the same state.
    let mut cache = proposed.cache.snapshot();
    let mut reruns = 0;
    loop {
        reruns += 1;
        let r = run(shedline::EngineKind::Proposed, &p, &urls, cache);
        if r.report.elapsed == Duration::ZERO {
            check(
                r.report.count(Provenance::CacheHit) == 400,
                "self-warmed rerun not all cached",
            )?;
            break;
        }
        check(reruns < 10, "self-warmed cache never collapsed")?;
        cache = r.cache;
    }
    Ok(format!(
        "elapsed 0, coverage_cached 1, trust_mae 0 (proposed-only store collapses after {reruns} reruns)"
    ))
}

/// Exhaustive small-instance equivalence with the reference simulator.
fn criterion_6() -> Outcome {
    let t = WallInstant::now();
    let mut compared = 0usize;
    for capacity in 1..=4usize {
        for threshold in 0..=4usize {
            for cost in [1u64, 2] {
                let normal = capacity as u64 * cost;
                let overloads = [
                    normal,
                    normal + 1,
                    normal + cost * 2,
                    normal + cost * threshold as u64 + 3,
                ];
                for overload in overloads {
                    let sp = SimParams {
                        capacity,
                        threshold,
                        cost,
                        deadline_normal: normal,
                        deadline_overload: overload,
                        weight_num: 1,
                        weight_den: 2,
                        cap_factor: 2,
                        default_trust: 2.5,
                    };
                    let p = sp.to_params();
                    for n in 0..=12usize {
                        let urls = urls(n);
                        for warm in 0..4 {
                            let view: HashMap<Url, f64> = urls
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| match warm {
                                    0 => false,
                                    1 => true,
                                    2 => i % 2 == 1,
                                    _ => *i >= n * 2 / 3,
                                })
                                .map(|(i, u)| (u.clone(), (i % 5) as f64 + 0.5))
                                .collect();
                            let cache = TrustCache::new();
                            for (u, s) in &view {
                                cache.insert(
                                    u.clone(),
                                    TrustScore::new(*s).unwrap(),
                                    Instant::ORIGIN,
                                );
                            }
                            let ev = Evaluator::hash(Duration::from_micros(cost));
                            let clock = VirtualClock::new();
                            let got = Shedder::new(&p, &cache, &ev, &clock)
                                .process_batch(&urls)
                                .map_err(|e| e.to_string())?;
                            let want = simulate(&urls, &sp, &view, 0);
                            check(
                                got == want,
                                format!("cap={capacity} thr={threshold} cost={cost} overload={overload} n={n} warm={warm}"),
                            )?;
                            compared += 1;
                        }
                    }
                }
            }
        }
    }
    let runtime = t.elapsed();
    check(runtime.as_secs_f64() < 30.0, format!("runtime {runtime:?}"))?;
    Ok(format!(
        "{compared} reports identical to the simulator in {runtime:.2?}"
    ))
}

/// Regime boundaries against the three inequalities.
fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut checked = 0;
    for set in 0..20 {
        let mut p = params(2.5);
        p.u_capacity = rng.gen_range(1..=500);
        p.u_threshold = if set == 0 { 0 } else { rng.gen_range(0..=500) };
        let (cap, thr) = (p.u_capacity, p.u_threshold);
        for uload in 0..=cap + thr + 10 {
            let expected = if uload <= cap {
                LoadClass::Normal
            } else if uload <= cap + thr {
                LoadClass::Heavy
            } else {
                LoadClass::VeryHeavy
            };
            check(
                classify_load(uload, &p) == expected,
                format!("uload={uload} cap={cap} thr={thr}"),
            )?;
            checked += 1;
        }
    }
    Ok(format!("{checked} classifications over 20 parameter sets"))
}

/// Random-drop baseline: counts, determinism, and trust error against the
/// proposed engine for every default_trust that differs from the dropped
/// items' oracle mean.
fn criterion_8() -> Outcome {
    let urls = batch(400);
    let dropped_mean = urls[150..]
        .iter()
        .map(|u| hash_score(u).value())
        .sum::<f64>()
        / 250.0;

    let first = run(
        shedline::EngineKind::RandomShed,
        &params(2.5),
        &urls,
        TrustCache::new(),
    )
    .report;
    let second = run(
        shedline::EngineKind::RandomShed,
        &params(2.5),
        &urls,
        TrustCache::new(),
    )
    .report;
    check(
        first.count(Provenance::Dropped) == 250,
        format!("dropped {}", first.count(Provenance::Dropped)),
    )?;
    check(first == second, "same seed produced different reports")?;

    let mut violations = Vec::new();
    let mut checked = 0;
    for step in 0..=20 {
        let default_trust = step as f64 * 0.25;
        if default_trust == dropped_mean {
            continue;
        }
        let p = params(default_trust);
        let proposed = metrics(
            &run(shedline::EngineKind::Proposed, &p, &urls, TrustCache::new()).report,
            &urls,
        );
        let shed = metrics(
            &run(
                shedline::EngineKind::RandomShed,
                &p,
                &urls,
                TrustCache::new(),
            )
            .report,
            &urls,
        );
        checked += 1;
        if shed.trust_mae <= proposed.trust_mae {
            violations.push(format!(
                "default {default_trust}: random_shed {:.4} <= proposed {:.4}",
                shed.trust_mae, proposed.trust_mae
            ));
        }
    }
    if violations.is_empty() {
        Ok(format!(
            "250 dropped, deterministic, higher MAE at all {checked} defaults"
        ))
    } else {
        Err(format!(
            "250 dropped and deterministic, but MAE not higher at {}/{checked} defaults \
             (dropped oracle mean {dropped_mean:.4}): {}",
            violations.len(),
            violations.join("; ")
        ))
    }
}

/// The shipped example config produces byte-identical CSV twice.
fn criterion_9() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example.json");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}.csv"));
            let overrides = Overrides {
                output: Some(out.clone()),
                ..Default::default()
            };
            cmd_run(&config, &overrides).map_err(|e| e.to_string())?;
            std::fs::read(&out).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    check(!outputs[0].is_empty(), "empty output")?;
    check(outputs[0] == outputs[1], "outputs differ")?;
    let lines = outputs[0].iter().filter(|&&b| b == b'\n').count();
    Ok(format!(
        "{} bytes, {lines} lines, identical",
        outputs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("speedup under very heavy load", criterion_1),
        ("ordering and deadline under heavy load", criterion_2),
        ("completeness over random batches", criterion_3),
        ("bounded, localized trust degradation", criterion_4),
        ("warm-cache collapse", criterion_5),
        ("small-instance simulator equivalence", criterion_6),
        ("classification boundaries", criterion_7),
        ("random-drop baseline contrast", criterion_8),
        ("end-to-end determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
