//! One scenario per action code. Each transcript is frozen as a golden file;
//! `UPDATE_GOLDEN=1` rewrites them after an intended change.

use std::path::{Path, PathBuf};

use ruleagents::engine::{ReferenceEngine, RuleEngine};
use ruleagents::messaging::{make_engine_action, ActionCode, Origin, ResultPayload};
use ruleagents::rule_agent::{dispatch_action, DispatchEnv};

pub struct Case {
    pub code: &'static str,
    pub params: &'static [&'static str],
    pub setup: &'static [(&'static str, &'static [&'static str])],
    pub probe: Option<(&'static str, &'static [&'static str])>,
}

pub const CASES: &[Case] = &[
    Case { code: "LOAD_FILE", params: &["rules/extra.clp-mini"], setup: &[], probe: Some(("RUN_INFINITELY", &[])) },
    Case { code: "LOAD_FACTS", params: &["facts/more.facts"], setup: &[], probe: None },
    Case { code: "LOAD_FROM_RESOURCE", params: &["traffic-light.clp-mini"], setup: &[("MAKE_CLEAR", &[])], probe: Some(("EVAL_COMMAND", &["(rules)"])) },
    Case {
        code: "LOAD_FROM_STRING",
        params: &["(defrule hello (light red) => (printout t \"hi\" crlf)) (deffacts more (car blue))"],
        setup: &[],
        probe: Some(("RUN_NUMBER_OF_CYCLES", &["1"])),
    },
    Case { code: "LOAD_ASSERT_STRING", params: &["(car blue) (car red)"], setup: &[], probe: None },
    Case {
        code: "LOAD_BLOAD",
        params: &["dumps/state.dump.bin"],
        setup: &[("MAKE_ASSERT_STRING", &["(saved yes)"]), ("MAKE_MEMORY_DUMP", &["dumps/state.dump.bin"]), ("MAKE_CLEAR", &[])],
        probe: None,
    },
    Case {
        code: "LOAD_SLOAD",
        params: &["dumps/state.dump.txt"],
        setup: &[("MAKE_ASSERT_STRING", &["(saved yes)"]), ("MAKE_MEMORY_DUMP", &["dumps/state.dump.txt"]), ("MAKE_CLEAR", &[])],
        probe: None,
    },
    Case { code: "RUN_INFINITELY", params: &[], setup: &[], probe: None },
    Case { code: "RUN_NUMBER_OF_CYCLES", params: &["2"], setup: &[], probe: None },
    Case { code: "RUN_ONCE_THEN_BATCH", params: &[], setup: &[], probe: None },
    Case { code: "RUN_INNER_SHELL", params: &[], setup: &[], probe: None },
    Case { code: "MAKE_RESET", params: &[], setup: &[("MAKE_ASSERT_STRING", &["(temp 1)"]), ("RUN_INFINITELY", &[])], probe: None },
    Case { code: "MAKE_CLEAR", params: &[], setup: &[], probe: Some(("EVAL_COMMAND", &["(rules)"])) },
    Case { code: "MAKE_MEMORY_DUMP", params: &["dumps/out.dump.txt"], setup: &[], probe: None },
    Case { code: "MAKE_ASSERT_STRING", params: &["(car green)"], setup: &[], probe: Some(("MAKE_ASSERT_STRING", &["(car green)"])) },
    Case {
        code: "MAKE_BUILD",
        params: &["(defrule show-limit (limit ?n) => (printout t \"limit \" ?n crlf))"],
        setup: &[],
        probe: Some(("EVAL_COMMAND", &["(agenda)"])),
    },
    Case { code: "EVAL_COMMAND", params: &["(facts)"], setup: &[], probe: None },
    Case { code: "SET_INPUT_BUFFER_COUNT", params: &[], setup: &[("APPEND_INPUT_BUFFER", &["abc"])], probe: None },
    Case { code: "APPEND_INPUT_BUFFER", params: &["hello "], setup: &[("APPEND_INPUT_BUFFER", &["abc"])], probe: Some(("SET_INPUT_BUFFER_COUNT", &[])) },
    Case {
        code: "SET_UNWATCH",
        params: &["facts"],
        setup: &[("SET_WATCH", &["facts"])],
        probe: Some(("MAKE_ASSERT_STRING", &["(quiet)"])),
    },
    Case { code: "SET_WATCH", params: &["facts"], setup: &[], probe: Some(("RUN_NUMBER_OF_CYCLES", &["1"])) },
    Case { code: "GET_FACT_SLOT", params: &["1", "1"], setup: &[], probe: None },
    Case { code: "FACT_INDEX", params: &["1"], setup: &[], probe: Some(("FACT_INDEX", &["-5"])) },
];

const EXTRA_RULES: &str = "(defrule note-red (light red) => (assert (seen red)))\n";
const MORE_FACTS: &str = "(car blue)\n(car red)\n";

pub fn files_root() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("rules")).unwrap();
    std::fs::create_dir_all(dir.path().join("facts")).unwrap();
    std::fs::write(dir.path().join("rules/extra.clp-mini"), EXTRA_RULES).unwrap();
    std::fs::write(dir.path().join("facts/more.facts"), MORE_FACTS).unwrap();
    dir
}

pub fn run(engine: &mut ReferenceEngine, env: &DispatchEnv, code: &str, params: &[&str]) -> ResultPayload {
    let action = make_engine_action(code, params.iter().map(|p| p.to_string()).collect(), Origin::Human).unwrap();
    dispatch_action(&action, engine, env)
}

fn describe(r: &ResultPayload) -> String {
    let newline = if r.output.is_empty() || r.output.ends_with('\n') { "" } else { "\n" };
    format!("status: {}\noutput:\n{}{newline}", r.status.as_str(), r.output)
}

pub fn transcript(case: &Case, root: &Path) -> String {
    let env = DispatchEnv::new(Some(root.to_path_buf()));
    let mut engine = ReferenceEngine::new();
    // baseline: the traffic-light program after a reset
    for (code, params) in [("LOAD_FROM_RESOURCE", &["traffic-light.clp-mini"][..]), ("MAKE_RESET", &[][..])] {
        assert!(run(&mut engine, &env, code, params).is_ok());
    }
    for (code, params) in case.setup {
        let r = run(&mut engine, &env, code, params);
        assert!(r.is_ok(), "setup {code}: {}", r.output);
    }
    let result = run(&mut engine, &env, case.code, case.params);
    let mut out = format!("== {} {:?}\n{}", case.code, case.params, describe(&result));
    if let Some((code, params)) = case.probe {
        let probe = run(&mut engine, &env, code, params);
        out.push_str(&format!("== probe {code} {params:?}\n{}", describe(&probe)));
    }
    out.push_str(&format!("== facts\n{}", engine.facts_listing()));
    out.push_str(&format!("== input buffer {:?}\n", engine.input_buffer()));
    if case.code == "MAKE_MEMORY_DUMP" {
        let dump = std::fs::read_to_string(root.join(case.params[0])).unwrap();
        out.push_str(&format!("== file {}\n{dump}", case.params[0]));
    }
    out
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/table1")
}

/// Compares every transcript with its golden file and checks that all 23
/// codes have exactly one scenario. Returns the number of codes checked.
pub fn check_goldens() -> Result<usize, String> {
    ensure_eq!(ActionCode::ALL.len(), 23, "action table size");
    for code in ActionCode::ALL {
        let hits = CASES.iter().filter(|c| c.code == code.as_str()).count();
        ensure_eq!(hits, 1, "scenarios for {code}");
    }
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatches = Vec::new();
    for case in CASES {
        let got = transcript(case, files_root().path());
        ensure_eq!(got, transcript(case, files_root().path()), "{} is not reproducible", case.code);
        let path = golden_dir().join(format!("{}.txt", case.code));
        if update {
            std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
            std::fs::write(&path, &got).map_err(|e| e.to_string())?;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_default();
        if got != want {
            mismatches.push(format!("{}:\n--- golden\n{want}--- got\n{got}", case.code));
        }
    }
    ensure!(mismatches.is_empty(), "{}", mismatches.join("\n"));
    Ok(CASES.len())
}
