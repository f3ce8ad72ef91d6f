//! Random graphs and programs shared by the property tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toolrank_core::graph::{Edge, Node};
use toolrank_core::{EdgeKind, KernelConfig, NeighborSelector, NodeLabel, VerificationGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random well-formed graph with `1..=max_nodes` nodes, a forest of SD edges
/// and random CF/CD/DD edges. Labels come from a small alphabet so that
/// kernel values are rarely zero.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> VerificationGraph {
    let n = rng.random_range(1..=max_nodes);
    let roots = rng.random_range(1..=n.min(8));
    let alphabet = &NodeLabel::ALL[..6];
    let mut nodes = Vec::with_capacity(n);
    let mut edges = Vec::new();
    for id in 0..n {
        let label = alphabet[rng.random_range(0..alphabet.len())];
        if id < roots {
            nodes.push(Node { label, depth: 0 });
        } else {
            let parent: usize = rng.random_range(0..id);
            let depth = nodes[parent].depth + 1;
            nodes.push(Node { label, depth });
            edges.push(Edge { src: parent as u32, dst: id as u32, kind: EdgeKind::SD, cond: true });
        }
    }
    let extra = rng.random_range(0..=2 * n);
    for _ in 0..extra {
        let kind = [EdgeKind::CF, EdgeKind::CD, EdgeKind::DD][rng.random_range(0..3)];
        let src = rng.random_range(0..n) as u32;
        let dst = rng.random_range(0..n) as u32;
        let cond = kind != EdgeKind::CD || rng.random_bool(0.5);
        edges.push(Edge { src, dst, kind, cond });
    }
    edges.shuffle(rng);
    VerificationGraph::new(nodes, edges).expect("generator builds valid graphs")
}

/// The same graph with node ids renamed by a random permutation that keeps it
/// well-formed, and edges listed in a random order.
pub fn shuffled_copy(g: &VerificationGraph, rng: &mut impl Rng) -> VerificationGraph {
    let n = g.node_count();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut nodes = vec![g.nodes()[0]; n];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes()[old];
    }
    let mut edges: Vec<Edge> = g
        .edges()
        .iter()
        .map(|e| Edge { src: perm[e.src as usize] as u32, dst: perm[e.dst as usize] as u32, ..*e })
        .collect();
    edges.shuffle(rng);
    VerificationGraph::new(nodes, edges).expect("renaming preserves validity")
}

/// Random program in the supported C subset.
pub fn random_program(rng: &mut impl Rng) -> String {
    let vars = ["a", "b", "c", "d"];
    let mut src = String::new();
    for v in vars {
        src.push_str(&format!("int {v} = {};\n", rng.random_range(-3..40)));
    }
    let mut budget = rng.random_range(1..12);
    block(rng, &vars, &mut src, &mut budget, 0);
    src.push_str(&format!("assert({});\n", cond(rng, &vars)));
    src
}

fn block(rng: &mut impl Rng, vars: &[&str], src: &mut String, budget: &mut i32, nesting: u32) {
    while *budget > 0 {
        *budget -= 1;
        let v = vars[rng.random_range(0..vars.len())];
        match rng.random_range(0..7) {
            0 if nesting < 3 => {
                src.push_str(&format!("while ({}) {{\n", cond(rng, vars)));
                let mut inner = rng.random_range(0..4);
                block(rng, vars, src, &mut inner, nesting + 1);
                src.push_str("}\n");
            }
            1 if nesting < 3 => {
                src.push_str(&format!("if ({}) {{\n", cond(rng, vars)));
                let mut inner = rng.random_range(0..3);
                block(rng, vars, src, &mut inner, nesting + 1);
                src.push_str("} else {\n");
                let mut inner = rng.random_range(0..3);
                block(rng, vars, src, &mut inner, nesting + 1);
                src.push_str("}\n");
            }
            2 => src.push_str(&format!("{v} = input();\n")),
            3 => src.push_str(&format!("{v}++;\n")),
            4 => src.push_str(&format!("{v} += {};\n", expr(rng, vars, 1))),
            _ => src.push_str(&format!("{v} = {};\n", expr(rng, vars, 2))),
        }
    }
}

fn expr(rng: &mut impl Rng, vars: &[&str], depth: u32) -> String {
    if depth == 0 || rng.random_bool(0.4) {
        return if rng.random_bool(0.5) {
            vars[rng.random_range(0..vars.len())].to_string()
        } else {
            rng.random_range(0..300).to_string()
        };
    }
    let op = ["+", "-", "*", "/", "%"][rng.random_range(0..5)];
    format!("({} {op} {})", expr(rng, vars, depth - 1), expr(rng, vars, depth - 1))
}

fn cond(rng: &mut impl Rng, vars: &[&str]) -> String {
    let op = ["<", "<=", ">", ">=", "==", "!="][rng.random_range(0..6)];
    let c = format!("{} {op} {}", expr(rng, vars, 1), expr(rng, vars, 1));
    if rng.random_bool(0.2) {
        format!("{c} && !({})", expr(rng, vars, 0))
    } else {
        c
    }
}

/// Labels spelled out as nested strings, with no compression at all.
fn naive_labels(g: &VerificationGraph, sel: NeighborSelector, rounds: u32) -> Vec<Vec<String>> {
    let mut all = vec![g.nodes().iter().map(|n| n.label.name().to_string()).collect::<Vec<_>>()];
    for _ in 0..rounds {
        let prev = all.last().unwrap();
        let next = (0..g.node_count())
            .map(|n| {
                let mut aug: Vec<String> = g
                    .edges()
                    .iter()
                    .filter(|e| e.src as usize == n && sel.contains(e.kind))
                    .map(|e| format!("<{}|{}|{}>", prev[e.dst as usize], e.kind, e.cond))
                    .collect();
                aug.sort();
                format!("[{}/{}]", prev[n], aug.concat())
            })
            .collect();
        all.push(next);
    }
    all
}

pub fn naive_kernel(g1: &VerificationGraph, g2: &VerificationGraph, cfg: &KernelConfig) -> u64 {
    let l1 = naive_labels(g1, cfg.selector, cfg.iterations);
    let l2 = naive_labels(g2, cfg.selector, cfg.iterations);
    let mut k = 0;
    for (r1, r2) in l1.iter().zip(&l2) {
        for (a, na) in r1.iter().zip(g1.nodes()) {
            for (b, nb) in r2.iter().zip(g2.nodes()) {
                if a == b && na.depth <= cfg.depth && nb.depth <= cfg.depth {
                    k += 1;
                }
            }
        }
    }
    k
}

/// Maximizes the box-constrained dual by enumerating which multipliers sit at
/// 0, at C or strictly inside, and solving the equality-constrained KKT system
/// for the free ones.
pub fn brute_force_dual(k: &[f64], y: &[i8], c: f64) -> f64 {
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[i * n + j];
    let objective = |a: &[f64]| {
        let mut s: f64 = a.iter().sum();
        for i in 0..n {
            for j in 0..n {
                s -= 0.5 * a[i] * a[j] * q(i, j);
            }
        }
        s
    };
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let f = free.len();
            let mut m = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    m[(r, s)] = q(i, j);
                }
                m[(r, f)] = yf[i];
                m[(f, r)] = yf[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q(i, j) * c).sum::<f64>();
            }
            rhs[f] = -(0..n).filter(|j| state[*j] == 1).map(|j| yf[j] * c).sum::<f64>();
            let Some(sol) = m.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let feasible = a.iter().all(|&v| v >= -1e-9 && v <= c + 1e-9)
            && a.iter().zip(&yf).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.max(objective(&a));
        }
    }
    best
}
