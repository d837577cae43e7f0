//! 9x9 sudoku solver used as an engine workload: depth-first search that
//! always branches on the empty cell with the fewest candidates.

use super::EngineError;

const ALL: u16 = 0x1ff;

/// Puzzles shipped for the sudoku workload, easiest first.
pub const PUZZLES: [(&str, &str); 4] = [
    (
        "grid-01",
        "..3.2.6..9..3.5..1..18.64....81.29..7.......8..67.82....26.95..8..2.3..9..5.1.3..",
    ),
    (
        "hard-1",
        "4.....8.5.3..........7......2.....6.....8.4......1.......6.3.7.5..2.....1.4......",
    ),
    (
        "hard-2",
        "52...6.........7.13...........4..8..6......5...........418.........3..2...87.....",
    ),
    (
        "inkala",
        "8..........36......7..9.2...5...7.......457.....1...3...1....68..85...1..9....4..",
    ),
];

struct Board {
    cells: [u8; 81],
    rows: [u16; 9],
    cols: [u16; 9],
    boxes: [u16; 9],
}

fn box_of(cell: usize) -> usize {
    (cell / 27) * 3 + (cell % 9) / 3
}

impl Board {
    fn place(&mut self, cell: usize, digit: u8) {
        let bit = 1 << (digit - 1);
        self.cells[cell] = digit;
        self.rows[cell / 9] |= bit;
        self.cols[cell % 9] |= bit;
        self.boxes[box_of(cell)] |= bit;
    }

    fn unplace(&mut self, cell: usize) {
        let bit = !(1u16 << (self.cells[cell] - 1));
        self.cells[cell] = 0;
        self.rows[cell / 9] &= bit;
        self.cols[cell % 9] &= bit;
        self.boxes[box_of(cell)] &= bit;
    }

    fn candidates(&self, cell: usize) -> u16 {
        ALL & !(self.rows[cell / 9] | self.cols[cell % 9] | self.boxes[box_of(cell)])
    }

    fn solve(&mut self) -> bool {
        let mut best: Option<(usize, u16)> = None;
        for cell in 0..81 {
            if self.cells[cell] != 0 {
                continue;
            }
            let cands = self.candidates(cell);
            if cands == 0 {
                return false;
            }
            if best.is_none_or(|(_, b)| cands.count_ones() < b.count_ones()) {
                best = Some((cell, cands));
                if cands.count_ones() == 1 {
                    break;
                }
            }
        }
        let Some((cell, mut cands)) = best else {
            return true;
        };
        while cands != 0 {
            let digit = cands.trailing_zeros() as u8 + 1;
            cands &= cands - 1;
            self.place(cell, digit);
            if self.solve() {
                return true;
            }
            self.unplace(cell);
        }
        false
    }
}

/// Parses an 81-character grid of `1`-`9` and `.` (blank).
pub fn parse_grid(grid: &str) -> Result<[u8; 81], EngineError> {
    let bad = |message: String| EngineError::Parse {
        line: 1,
        column: 1,
        message,
    };
    let chars: Vec<char> = grid.chars().collect();
    if chars.len() != 81 {
        return Err(bad(format!("sudoku grid must have 81 cells, got {}", chars.len())));
    }
    let mut cells = [0u8; 81];
    for (i, c) in chars.into_iter().enumerate() {
        cells[i] = match c {
            '.' => 0,
            '1'..='9' => c as u8 - b'0',
            other => return Err(bad(format!("invalid sudoku cell {other:?} at {i}"))),
        };
    }
    Ok(cells)
}

pub fn solve(grid: &str) -> Result<String, EngineError> {
    let cells = parse_grid(grid)?;
    let mut board = Board {
        cells: [0; 81],
        rows: [0; 9],
        cols: [0; 9],
        boxes: [0; 9],
    };
    for (cell, &digit) in cells.iter().enumerate() {
        if digit == 0 {
            continue;
        }
        if board.candidates(cell) & (1 << (digit - 1)) == 0 {
            return Err(EngineError::NoSolution(format!(
                "given {digit} at row {} column {} conflicts",
                cell / 9 + 1,
                cell % 9 + 1
            )));
        }
        board.place(cell, digit);
    }
    if !board.solve() {
        return Err(EngineError::NoSolution("search exhausted".into()));
    }
    Ok(board.cells.iter().map(|d| (b'0' + d) as char).collect())
}
