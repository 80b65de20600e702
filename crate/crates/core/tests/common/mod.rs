#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use mht_core::cluster_ops::join_pair;
use mht_core::hypgen::generate_for_cluster;
use mht_core::{
    cross_product, Change, Cluster, Distribution, Event, Fact, GenerateReport, GeneratedHypothesis,
    GenerationSerial, IdAllocator, Journal, Oracle, PruneStrategy, Snapshot, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Hyp = GeneratedHypothesis<String, String>;
pub type W = World<String, String>;

/// Generator whose answer is a pure function of (seed, serial, provided
/// payloads), so the engine and the oracle see identical answers for
/// identical inputs however often and in whatever order they ask.
pub fn keyed_generator(
    seed: u64,
    serial: u64,
    max_hyps: usize,
) -> impl FnMut(&[Event<String>], &[Fact<String>]) -> Vec<Hyp> {
    move |events, facts| {
        let mut inputs: Vec<&str> = events.iter().map(|e| e.payload.as_str()).collect();
        inputs.sort();
        let mut fact_inputs: Vec<&str> = facts.iter().map(|f| f.payload.as_str()).collect();
        fact_inputs.sort();
        let mut h = DefaultHasher::new();
        (seed, serial, &inputs, &fact_inputs).hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let n = rng.random_range(1..=max_hyps);
        let mut hyps: Vec<Hyp> = (0..n)
            .map(|i| {
                let ev = (0..rng.random_range(0..=2))
                    .map(|k| format!("s{serial}h{i}e{k}"))
                    .collect();
                let fa = (0..rng.random_range(0..=2))
                    .map(|k| format!("s{serial}h{i}f{k}<{}>", fact_inputs.len()))
                    .collect();
                let p = if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                };
                Hyp::new(ev, fa, p)
            })
            .collect();
        if hyps.iter().all(|h| h.probability == 0.0) {
            hyps[0].probability = 1.0;
        }
        hyps
    }
}

/// Picks payloads to request: each distinct live payload independently.
pub fn pick_payloads(
    world: &W,
    rng: &mut ChaCha8Rng,
    rate: f64,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let snap = world.requestable_info();
    let events: BTreeSet<String> = snap.events.values().map(|e| (*e.payload).clone()).collect();
    let facts: BTreeSet<String> = snap.facts.values().map(|f| (*f.payload).clone()).collect();
    (
        events
            .into_iter()
            .filter(|_| rng.random_bool(rate))
            .collect(),
        facts
            .into_iter()
            .filter(|_| rng.random_bool(rate))
            .collect(),
    )
}

/// Engine request covering every live id carrying one of the payloads.
pub fn ids_for(
    world: &W,
    events: &BTreeSet<String>,
    facts: &BTreeSet<String>,
) -> (BTreeSet<mht_core::EventId>, BTreeSet<mht_core::FactId>) {
    let snap = world.requestable_info();
    (
        snap.events
            .values()
            .filter(|e| events.contains(e.payload.as_str()))
            .map(|e| e.id)
            .collect(),
        snap.facts
            .values()
            .filter(|f| facts.contains(f.payload.as_str()))
            .map(|f| f.id)
            .collect(),
    )
}

/// Checks the clustering rules on the world after a generation.
pub fn rule_violations(world: &W, reports: &[GenerateReport<String>]) -> Vec<String> {
    let mut out = Vec::new();
    let mut by_serial: BTreeMap<u64, BTreeSet<mht_core::ClusterId>> = BTreeMap::new();
    let mut by_origin: BTreeMap<mht_core::EventGroupId, BTreeSet<mht_core::ClusterId>> =
        BTreeMap::new();
    let mut components = 0;
    for c in world.clusters() {
        for g in c.groups() {
            if let Some(s) = g.generation() {
                by_serial.entry(s.get()).or_default().insert(c.id());
            }
            by_origin.entry(g.origin()).or_default().insert(c.id());
        }
        let n = mht_core::cluster_ops::constraint_components(c).len();
        if n > 1 {
            out.push(format!("{} holds {n} constraint components", c.id()));
        }
        components += n.max(1);
    }
    if components != world.cluster_count() {
        out.push(format!(
            "{} clusters for {components} components",
            world.cluster_count()
        ));
    }
    for (s, clusters) in &by_serial {
        if clusters.len() > 1 {
            out.push(format!("generation {s} spread over {clusters:?}"));
        }
    }
    for report in reports {
        for rec in &report.records {
            let homes: BTreeSet<_> = rec
                .premise_origins
                .iter()
                .filter_map(|o| by_origin.get(o))
                .flatten()
                .collect();
            if homes.len() > 1 {
                out.push(format!(
                    "premise of {} in {} spread over {homes:?}",
                    rec.leaf, rec.serial
                ));
            }
        }
    }
    out
}

pub fn normalization_violations(world: &W) -> Vec<String> {
    world
        .clusters()
        .filter(|c| (c.probability_sum() - 1.0).abs() > 1e-9)
        .map(|c| format!("{} sums to {}", c.id(), c.probability_sum()))
        .collect()
}

/// Runs the same random script through the engine (no pruning) and the
/// oracle; returns the largest probability gap between the distributions.
pub fn oracle_gap(seed: u64, steps: usize, max_hyps: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = W::new(Vec::<PruneStrategy>::new());
    let mut oracle: Oracle<String, String> = Oracle::new(100_000);
    let mut certain = Vec::new();
    for serial in 1..=steps as u64 {
        let (pe, pf) = pick_payloads(&world, &mut rng, 0.3);
        let (ie, ifa) = ids_for(&world, &pe, &pf);
        let report = world
            .generate(&ie, &ifa, &mut keyed_generator(seed, serial, max_hyps))
            .map_err(|e| format!("engine: {e}"))?;
        certain.extend(report.certain);
        oracle
            .generate(
                &|e| pe.contains(e.payload.as_str()),
                &|f| pf.contains(f.payload.as_str()),
                &mut keyed_generator(seed, serial, max_hyps),
            )
            .map_err(|e| format!("oracle: {e}"))?;
    }
    let engine =
        Distribution::from_hypotheses(cross_product(&world, 100_000).map_err(|e| e.to_string())?)
            .with_certain(&certain);
    let reference = oracle.distribution();
    if engine.len() != reference.len() {
        return Err(format!(
            "support sizes differ: {} vs {}",
            engine.len(),
            reference.len()
        ));
    }
    Ok(engine.max_abs_diff(&reference))
}

pub fn strategies(rng: &mut ChaCha8Rng) -> Vec<PruneStrategy> {
    let mut out = Vec::new();
    if rng.random_bool(0.5) {
        out.push(PruneStrategy::BestK(rng.random_range(1..8)));
    }
    if rng.random_bool(0.3) {
        out.push(PruneStrategy::RatioThreshold(rng.random_range(0.01..0.5)));
    }
    if rng.random_bool(0.3) {
        out.push(PruneStrategy::DepthLimit(rng.random_range(1..4)));
    }
    out
}

/// One fuzzed operation sequence; returns every violation seen.
pub fn fuzz_sequence(seed: u64, steps: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = W::new(strategies(&mut rng));
    if rng.random_bool(0.3) {
        world.set_relevance(|c: &Cluster<String, String>| c.facts().next().is_some());
    }
    let log = Arc::new(Mutex::new(Vec::new()));
    let sink = log.clone();
    world.subscribe_changes(move |c: &Change<String, String>| sink.lock().unwrap().push(c.clone()));
    let mut replay = Snapshot::default();
    let mut reports = Vec::new();
    let mut problems = Vec::new();
    for serial in 1..=steps {
        let (pe, pf) = pick_payloads(&world, &mut rng, 0.25);
        let (ie, ifa) = ids_for(&world, &pe, &pf);
        match world.generate(&ie, &ifa, &mut keyed_generator(seed, serial, 3)) {
            Ok(report) => reports.push(report),
            Err(e) => problems.push(format!("step {serial}: {e}")),
        }
        problems.extend(
            world
                .validate()
                .into_iter()
                .map(|p| format!("step {serial}: {p}")),
        );
        problems.extend(
            rule_violations(&world, &reports)
                .into_iter()
                .map(|p| format!("step {serial}: {p}")),
        );
        problems.extend(normalization_violations(&world));
        for c in log.lock().unwrap().drain(..) {
            replay.apply(&c);
        }
        if !replay.same_content(&world.requestable_info()) {
            problems.push(format!("step {serial}: notification replay diverged"));
        }
    }
    problems
}

pub fn random_tree(seed: u64, depth: u64, ids: &mut IdAllocator) -> Cluster<String, String> {
    let mut c = Cluster::new(ids);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for serial in 1..=depth {
        let facts: BTreeSet<_> = c
            .facts()
            .filter(|_| rng.random_bool(0.3))
            .map(|f| f.id)
            .collect();
        generate_for_cluster(
            &mut c,
            &BTreeSet::new(),
            &facts,
            &mut keyed_generator(seed, serial, 3),
            GenerationSerial(serial),
            ids,
            &mut Journal::new(),
        )
        .unwrap();
    }
    c
}

/// Joins two random trees and checks the product rule: every joined leaf
/// carries the product of its two source probabilities, and each unified
/// constraint holds |e| x |target leaves| groups.
pub fn join_algebra_violations(seed: u64) -> Vec<String> {
    let mut ids = IdAllocator::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target = random_tree(seed, rng.random_range(1..4), &mut ids);
    let source = random_tree(seed ^ 0xa5a5, rng.random_range(1..4), &mut ids);
    let n = target.leaves().count();
    let mut expected: Vec<f64> = target
        .leaves()
        .flat_map(|a| {
            source
                .leaves()
                .map(move |b| a.probability() * b.probability())
        })
        .collect();
    let mut sizes: Vec<usize> = source.constraints().map(|c| c.groups().len() * n).collect();
    let before: BTreeSet<_> = target.constraints().map(|c| c.id()).collect();
    let mut out = Vec::new();
    if let Err(e) = join_pair(&mut target, source, &mut ids, &mut Journal::new()) {
        return vec![e.to_string()];
    }
    let mut got: Vec<f64> = target.leaves().map(|l| l.probability()).collect();
    let mut new_sizes: Vec<usize> = target
        .constraints()
        .filter(|c| !before.contains(&c.id()))
        .map(|c| c.groups().len())
        .collect();
    for v in [&mut expected, &mut got] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    sizes.sort();
    new_sizes.sort();
    if got.len() != expected.len()
        || got
            .iter()
            .zip(&expected)
            .any(|(g, e)| (g - e).abs() > 1e-12)
    {
        out.push(format!("leaf probabilities {got:?}, expected {expected:?}"));
    }
    if sizes != new_sizes {
        out.push(format!(
            "unified constraint sizes {new_sizes:?}, expected {sizes:?}"
        ));
    }
    out.extend(mht_core::validate_cluster(&target));
    out
}
