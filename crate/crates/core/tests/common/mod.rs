//! Oracles and scenarios shared by the integration tests and the acceptance
//! runner. Checks return `Err(description)` instead of panicking so the
//! acceptance runner can report every criterion.
#![allow(dead_code)]

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

macro_rules! ensure_eq {
    ($left:expr, $right:expr, $($arg:tt)+) => {
        match (&$left, &$right) {
            (l, r) => {
                if l != r {
                    return Err(format!("{}\n  left: {:?}\n right: {:?}", format!($($arg)+), l, r));
                }
            }
        }
    };
}

pub mod conformance;
pub mod engine_checks;
pub mod ladder;
mod oracle;
pub mod table1;
pub mod wire_gen;

pub use oracle::*;

// Computed by the brute-force oracle, checked for uniqueness, then frozen.
pub const SUDOKU_SOLUTIONS: [&str; 4] = [
    "483921657967345821251876493548132976729564138136798245372689514814253769695417382",
    "417369825632158947958724316825437169791586432346912758289643571573291684164875293",
    "527316489896542731314987562172453896689271354453698217941825673765134928238769145",
    "812753649943682175675491283154237896369845721287169534521974368438526917796318452",
];
