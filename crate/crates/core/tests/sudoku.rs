mod common;

use std::time::{Duration, Instant};

use common::{brute_force_sudoku, is_valid_solution};
use ruleagents::engine::sudoku::{solve, PUZZLES};
use ruleagents::engine::{ReferenceEngine, RuleEngine};

use common::SUDOKU_SOLUTIONS as SOLUTIONS;

#[test]
fn shipped_puzzles_match_frozen_solutions() {
    let start = Instant::now();
    for ((name, grid), expected) in PUZZLES.iter().zip(SOLUTIONS) {
        let got = solve(grid).unwrap();
        assert_eq!(got, expected, "{name}");
        assert!(is_valid_solution(grid, &got), "{name}");
    }
    assert!(start.elapsed() < Duration::from_secs(2), "{:?}", start.elapsed());
}

#[test]
fn frozen_solutions_are_the_unique_oracle_solutions() {
    for ((name, grid), expected) in PUZZLES.iter().zip(SOLUTIONS) {
        let found = brute_force_sudoku(grid, 2);
        assert_eq!(found, vec![expected.to_string()], "{name}");
    }
}

#[test]
fn complete_grid_is_a_fixed_point() {
    for s in SOLUTIONS {
        assert_eq!(solve(s).unwrap(), s);
    }
}

#[test]
fn contradictions_yield_no_solution() {
    // two 5s in the first row
    let clash = format!("55{}", ".".repeat(79));
    assert_eq!(solve(&clash).unwrap_err().kind(), "NO_SOLUTION");
    assert!(brute_force_sudoku(&clash, 1).is_empty());

    // consistent givens, but the top-left cell has no candidate left
    let mut cells = vec!['.'; 81];
    for (i, d) in "12345678".chars().enumerate() {
        cells[i + 1] = d;
    }
    cells[9 * 4] = '9';
    let stuck: String = cells.into_iter().collect();
    assert_eq!(solve(&stuck).unwrap_err().kind(), "NO_SOLUTION");
    assert!(brute_force_sudoku(&stuck, 1).is_empty());
}

#[test]
fn solve_command_runs_inside_the_engine() {
    let mut engine = ReferenceEngine::new();
    let out = engine.eval(&format!("(solve-sudoku \"{}\")", PUZZLES[0].1)).unwrap();
    assert!(out.contains(SOLUTIONS[0]), "{out}");
}
