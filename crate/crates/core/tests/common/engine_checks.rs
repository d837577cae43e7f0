use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruleagents::engine::{ReferenceEngine, RuleEngine, RunLimit, SnapshotFormat};

use super::{random_program, render_deffacts, render_facts, render_rules, Act, NaiveEngine, Program};

pub const CYCLES: usize = 20;

pub fn oracle_for(program: &Program) -> NaiveEngine {
    let mut oracle = NaiveEngine::new(program.rules.clone());
    for f in &program.facts {
        oracle.assert(f.clone());
    }
    oracle
}

pub fn engine_for(program: &Program, rules_first: bool) -> ReferenceEngine {
    let mut engine = ReferenceEngine::new();
    let rules = render_rules(&program.rules);
    let facts = render_facts(&program.facts);
    if rules_first {
        engine.load_program(&rules).unwrap();
    }
    if !facts.is_empty() {
        engine.assert_facts(&facts).unwrap();
    }
    if !rules_first {
        engine.load_program(&rules).unwrap();
    }
    engine
}

/// Runs `programs` random programs (≤5 rules, ≤10 facts, ≤20 cycles) on both
/// the engine and the naive oracle and compares facts, output and firings.
pub fn equivalence(programs: u64) -> Result<String, String> {
    let mut total_fired = 0;
    let mut hit_cap = 0;
    for seed in 0..programs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let program = random_program(&mut rng, 5, 10);
        let rules_first = rng.random_bool(0.5);

        let mut oracle = oracle_for(&program);
        let oracle_fired = oracle.run(CYCLES);
        let mut engine = engine_for(&program, rules_first);
        let fired = engine.run(RunLimit::Cycles(CYCLES)).map_err(|e| e.to_string())?;

        let context = format!("seed {seed}\n{}\n{}", render_rules(&program.rules), render_facts(&program.facts));
        ensure_eq!(fired, oracle_fired, "{context}");
        ensure_eq!(engine.facts_listing(), oracle.listing(), "{context}");
        ensure_eq!(engine.take_output(), oracle.output, "{context}");
        total_fired += fired;
        hit_cap += usize::from(fired == CYCLES);
    }
    // guard against a generator whose programs never do anything
    ensure!(total_fired > programs as usize, "only {total_fired} firings in {programs} programs");
    ensure!(hit_cap < programs as usize / 2, "{hit_cap} programs hit the cycle limit");
    Ok(format!("{programs} programs, {total_fired} firings"))
}

/// Print-only rules never change working memory, so each match fires once
/// and a second run fires nothing.
pub fn refraction(programs: u64) -> Result<(), String> {
    for seed in 0..programs {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let mut program = random_program(&mut rng, 5, 10);
        for rule in &mut program.rules {
            rule.rhs.retain(|a| matches!(a, Act::Print(_)));
        }
        let expected = oracle_for(&program).run(usize::MAX);
        let mut engine = engine_for(&program, true);
        ensure_eq!(engine.run(RunLimit::Unbounded).map_err(|e| e.to_string())?, expected, "seed {seed}");
        ensure_eq!(engine.run(RunLimit::Unbounded).map_err(|e| e.to_string())?, 0, "seed {seed}: refired");
        ensure_eq!(engine.agenda_len(), 0, "seed {seed}");
    }
    Ok(())
}

pub fn reset_idempotence(programs: u64) -> Result<(), String> {
    for seed in 0..programs {
        let mut rng = ChaCha8Rng::seed_from_u64(2_000 + seed);
        let program = random_program(&mut rng, 5, 10);
        let mut engine = ReferenceEngine::new();
        engine.load_program(&render_rules(&program.rules)).unwrap();
        let deffacts = render_deffacts(&program.facts);
        if !deffacts.is_empty() {
            engine.load_program(&deffacts).unwrap();
        }
        engine.reset();
        let facts = engine.facts_listing();
        let agenda = engine.agenda_listing();
        ensure_eq!(facts, oracle_for(&program).listing(), "seed {seed}");
        let _ = engine.run(RunLimit::Cycles(5));
        engine.reset();
        engine.reset();
        ensure_eq!(engine.facts_listing(), facts, "seed {seed}");
        ensure_eq!(engine.agenda_listing(), agenda, "seed {seed}");
    }
    Ok(())
}

/// A restored snapshot has the same facts, rules and agenda, re-encodes to
/// the same bytes, and behaves identically from then on.
pub fn snapshot_round_trip(programs: u64) -> Result<(), String> {
    for seed in 0..programs {
        let mut rng = ChaCha8Rng::seed_from_u64(3_000 + seed);
        let program = random_program(&mut rng, 5, 10);
        let mut engine = engine_for(&program, true);
        let _ = engine.run(RunLimit::Cycles(rng.random_range(0..5)));
        engine.take_output();
        for format in [SnapshotFormat::Text, SnapshotFormat::Binary] {
            let snap = engine.snapshot(format);
            let mut copy = ReferenceEngine::new();
            copy.restore(&snap).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure_eq!(copy.facts_listing(), engine.facts_listing(), "seed {seed}");
            ensure_eq!(copy.rules_listing(), engine.rules_listing(), "seed {seed}");
            ensure_eq!(copy.agenda_listing(), engine.agenda_listing(), "seed {seed}");
            ensure!(copy.snapshot(format) == snap, "seed {seed}: re-encoding differs");

            let mut original = engine_for(&program, true);
            original.restore(&snap).map_err(|e| e.to_string())?;
            let a = original.run(RunLimit::Cycles(CYCLES)).map_err(|e| e.to_string())?;
            let b = copy.run(RunLimit::Cycles(CYCLES)).map_err(|e| e.to_string())?;
            ensure_eq!(a, b, "seed {seed}");
            ensure_eq!(original.facts_listing(), copy.facts_listing(), "seed {seed}");
            ensure_eq!(original.take_output(), copy.take_output(), "seed {seed}");
        }
    }
    Ok(())
}
