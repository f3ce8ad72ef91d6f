//! Synthetic two-family corpus written to disk as `.c` files plus an
//! outcomes CSV.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOOLS: [&str; 4] = ["tool_a", "tool_b", "tool_c", "tool_d"];

/// `while` bounded by an input value, with a random body and prologue.
pub fn loop_program(rng: &mut impl Rng) -> String {
    let mut s = String::from("int n = input();\nint i = 0;\nint s = 0;\n");
    for k in 0..rng.random_range(0..3) {
        let _ = writeln!(s, "int t{k} = {};", rng.random_range(0..50));
    }
    let cmp = ["<", "<=", "!="][rng.random_range(0..3)];
    let _ = writeln!(s, "while (i {cmp} n) {{");
    for _ in 0..rng.random_range(1..4) {
        match rng.random_range(0..3) {
            0 => {
                let _ = writeln!(s, "  s = s + {};", rng.random_range(1..9));
            }
            1 => {
                let _ = writeln!(s, "  if (s > {}) {{ s = s - 1; }}", rng.random_range(5..90));
            }
            _ => s.push_str("  s += i;\n"),
        }
    }
    s.push_str("  i = i + 1;\n}\n");
    let _ = writeln!(s, "assert(s >= {});", rng.random_range(-1..2));
    s
}

/// Straight-line code over constants, optionally with one branch.
pub fn straight_program(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "int a = {};", rng.random_range(0..20));
    let _ = writeln!(s, "int b = a * {};", rng.random_range(1..6));
    for k in 0..rng.random_range(0..4) {
        let op = ["+", "-", "*"][rng.random_range(0..3)];
        let _ = writeln!(s, "int c{k} = b {op} {};", rng.random_range(1..30));
    }
    if rng.random_bool(0.5) {
        let _ = writeln!(s, "if (a > {}) {{ b = b + 1; }} else {{ b = b - 1; }}", rng.random_range(0..20));
    }
    s.push_str("assert(b >= 0 || b < 0);\n");
    s
}

/// Writes `n` programs, alternating families, into `dir/graphs` and an
/// outcomes CSV under which loop programs rank the tools (1,2,3,4) and
/// straight-line programs rank them (4,3,2,1). Returns (graph dir, csv).
pub fn write_corpus(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graphs = dir.join("graphs");
    fs::create_dir_all(&graphs).unwrap();
    let mut csv = String::from("task,tool,time_s,answer,expected\n");
    for t in 0..n {
        let name = format!("task{t:03}");
        let looped = t % 2 == 0;
        let src = if looped { loop_program(&mut rng) } else { straight_program(&mut rng) };
        fs::write(graphs.join(format!("{name}.c")), src).unwrap();
        for (k, tool) in TOOLS.iter().enumerate() {
            let rank = if looped { k } else { 3 - k };
            let (time, answer) = if rank == 3 { (90.0, "UNKNOWN") } else { ((rank + 1) as f64, "TRUE") };
            let _ = writeln!(csv, "{name},{tool},{time},{answer},TRUE");
        }
    }
    let path = dir.join("outcomes.csv");
    fs::write(&path, csv).unwrap();
    (graphs, path)
}
