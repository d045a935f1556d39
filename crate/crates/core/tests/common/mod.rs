//! Helpers shared by the integration suites, including a step-by-step
//! reference simulator of the shedder written without the engine's code.

#![allow(dead_code)]

use std::collections::HashMap;

use shedline::model::{ProvenanceCounts, ScoredItem};
use shedline::{
    BatchReport, Duration, Instant, LoadClass, LoadParameters, Provenance, TrustScore, Url,
};

pub fn url(i: usize) -> Url {
    Url::parse(&format!("http://r{i}.sim/q")).unwrap()
}

pub fn urls(n: usize) -> Vec<Url> {
    (0..n).map(url).collect()
}

pub fn score(v: f64) -> TrustScore {
    TrustScore::new(v).unwrap()
}

/// Independent FNV-1a based score, matching the deterministic hash evaluator.
pub fn reference_score(u: &Url) -> f64 {
    let h = u.as_str().bytes().fold(14695981039346656037u64, |h, b| {
        (h ^ b as u64).wrapping_mul(1099511628211)
    });
    5.0 * (h as f64 / 18446744073709551616.0)
}

/// Parameter set for the simulator. The extension weight is the rational
/// `weight_num / weight_den` and the cap factor an integer, so the simulator
/// can compute extended deadlines in exact integer arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    pub capacity: usize,
    pub threshold: usize,
    pub cost: u64,
    pub deadline_normal: u64,
    pub deadline_overload: u64,
    pub weight_num: u64,
    pub weight_den: u64,
    pub cap_factor: u64,
    pub default_trust: f64,
}

impl SimParams {
    pub fn to_params(self) -> LoadParameters {
        LoadParameters {
            u_capacity: self.capacity,
            u_threshold: self.threshold,
            deadline_normal: Duration::from_micros(self.deadline_normal),
            deadline_overload: Duration::from_micros(self.deadline_overload),
            extension_weight: self.weight_num as f64 / self.weight_den as f64,
            max_extension_factor: self.cap_factor as f64,
            default_trust: score(self.default_trust),
        }
    }
}

/// Brute-force model of one batch on a clock starting at `t0`. `warm` maps
/// URL -> cached score before the batch starts.
pub fn simulate(batch: &[Url], p: &SimParams, warm: &HashMap<Url, f64>, t0: u64) -> BatchReport {
    let n = batch.len();
    let mut cache = warm.clone();
    let mut now = t0;
    // Per arrival index: (score, provenance, scored_at).
    let mut out: Vec<Option<(f64, Provenance, u64)>> = vec![None; n];

    let class = if n <= p.capacity {
        LoadClass::Normal
    } else if n <= p.capacity + p.threshold {
        LoadClass::Heavy
    } else {
        LoadClass::VeryHeavy
    };
    let deadline = match class {
        LoadClass::Normal => p.deadline_normal,
        LoadClass::Heavy => p.deadline_overload,
        LoadClass::VeryHeavy => {
            let limit = (p.capacity + p.threshold) as u64;
            let excess = n as u64 - limit;
            let extra = p.deadline_overload * p.weight_num * excess / (p.weight_den * limit);
            (p.deadline_overload + extra).min(p.deadline_overload * p.cap_factor)
        }
    };

    let normal_len = n.min(p.capacity);
    for i in 0..normal_len {
        out[i] = Some(score_or_evaluate(&batch[i], p.cost, &mut cache, &mut now));
    }

    if class != LoadClass::Normal {
        let mut pending = Vec::new();
        for i in normal_len..n {
            match cache.get(&batch[i]) {
                Some(&s) => out[i] = Some((s, Provenance::CacheHit, now)),
                None => pending.push(i),
            }
        }
        let mut leftovers = Vec::new();
        for i in pending {
            if leftovers.is_empty() && now - t0 < deadline {
                out[i] = Some(score_or_evaluate(&batch[i], p.cost, &mut cache, &mut now));
            } else {
                leftovers.push(i);
            }
        }
        if !leftovers.is_empty() {
            let assigned: Vec<f64> = out.iter().flatten().map(|o| o.0).collect();
            let avg = if assigned.is_empty() {
                p.default_trust
            } else {
                assigned.iter().sum::<f64>() / assigned.len() as f64
            };
            for i in leftovers {
                out[i] = Some((avg, Provenance::Averaged, now));
            }
        }
    }

    let items: Vec<ScoredItem> = out
        .into_iter()
        .enumerate()
        .map(|(i, o)| {
            let (s, provenance, at) = o.expect("every item scored");
            ScoredItem {
                url: batch[i].clone(),
                arrival_index: i,
                score: score(s),
                provenance,
                scored_at: Instant::from_micros(at),
            }
        })
        .collect();
    BatchReport {
        uload: n,
        counts: ProvenanceCounts::tally(&items),
        items,
        load_class: class,
        effective_deadline: Duration::from_micros(deadline),
        elapsed: Duration::from_micros(now - t0),
    }
}

fn score_or_evaluate(
    u: &Url,
    cost: u64,
    cache: &mut HashMap<Url, f64>,
    now: &mut u64,
) -> (f64, Provenance, u64) {
    if let Some(&s) = cache.get(u) {
        return (s, Provenance::CacheHit, *now);
    }
    *now += cost;
    let s = reference_score(u);
    cache.insert(u.clone(), s);
    (s, Provenance::Evaluated, *now)
}
