//! Reaching definitions and control dependences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::ast::{Program, Stmt, StmtKind, VarId};
use super::cfg::Cfg;

/// Dense bit set over statement ids.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(alloc::vec![0; n.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b)
        })
    }
}

/// Result of the forward may-analysis: for every statement, the set of
/// definitions reaching its entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachingDefinitions {
    defines: Vec<Option<VarId>>,
    uses: Vec<Vec<VarId>>,
    reach_in: Vec<Bits>,
    gen_kill: GenKill,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct GenKill {
    /// Statements defining each variable.
    defs_of: BTreeMap<VarId, Bits>,
}

impl ReachingDefinitions {
    /// Definitions of `var` reaching the entry of `stmt`, ascending.
    pub fn reaching(&self, stmt: usize, var: VarId) -> Vec<usize> {
        self.reach_in[stmt].iter().filter(|&d| self.defines[d] == Some(var)).collect()
    }

    /// `(statement, used variable) -> reaching definitions` for every use.
    pub fn use_def_chains(&self) -> BTreeMap<(usize, VarId), BTreeSet<usize>> {
        let mut out = BTreeMap::new();
        for (s, vars) in self.uses.iter().enumerate() {
            for &v in vars {
                out.insert((s, v), self.reaching(s, v).into_iter().collect());
            }
        }
        out
    }

    /// True when one more round of the transfer equations changes nothing.
    pub fn is_fixpoint(&self, cfg: &Cfg) -> bool {
        let n = self.defines.len();
        (0..n).all(|s| {
            let mut expect = Bits::new(n);
            for &p in cfg.predecessors(s) {
                expect.union_with(&self.out_of(p));
            }
            expect == self.reach_in[s]
        })
    }

    fn out_of(&self, s: usize) -> Bits {
        transfer(s, &self.reach_in[s], &self.defines, &self.gen_kill)
    }
}

fn transfer(s: usize, input: &Bits, defines: &[Option<VarId>], gk: &GenKill) -> Bits {
    let mut out = input.clone();
    if let Some(v) = defines[s] {
        let kill = &gk.defs_of[&v];
        out.0.iter_mut().zip(&kill.0).for_each(|(a, k)| *a &= !k);
        out.insert(s);
    }
    out
}

pub fn reaching_definitions(program: &Program, cfg: &Cfg) -> ReachingDefinitions {
    let stmts = program.statements();
    let n = stmts.len();
    let defines: Vec<Option<VarId>> = stmts.iter().map(|s| s.defined_var()).collect();
    let uses: Vec<Vec<VarId>> = stmts.iter().map(|s| s.used_vars()).collect();
    let mut defs_of: BTreeMap<VarId, Bits> = BTreeMap::new();
    for (s, d) in defines.iter().enumerate() {
        if let Some(v) = d {
            defs_of.entry(*v).or_insert_with(|| Bits::new(n)).insert(s);
        }
    }
    let gen_kill = GenKill { defs_of };

    let mut reach_in = alloc::vec![Bits::new(n); n];
    let mut reach_out: Vec<Bits> = (0..n).map(|s| transfer(s, &reach_in[s], &defines, &gen_kill)).collect();
    let mut worklist: BTreeSet<usize> = (0..n).collect();
    while let Some(s) = worklist.pop_first() {
        let mut input = Bits::new(n);
        for &p in cfg.predecessors(s) {
            input.union_with(&reach_out[p]);
        }
        reach_in[s] = input;
        let out = transfer(s, &reach_in[s], &defines, &gen_kill);
        if out != reach_out[s] {
            reach_out[s] = out;
            worklist.extend(cfg.successors(s).iter().copied().filter(|&t| t < n));
        }
    }
    ReachingDefinitions { defines, uses, reach_in, gen_kill }
}

/// `(controller, dependent, valuation)` triples, computed syntax-directed: the
/// statements directly inside a loop body depend on the loop head with `true`,
/// the ones directly in a then/else branch on the `if` with `true`/`false`.
pub fn control_dependencies(program: &Program) -> BTreeSet<(usize, usize, bool)> {
    fn walk(stmts: &[Stmt], next_id: &mut usize, controller: Option<(usize, bool)>, out: &mut BTreeSet<(usize, usize, bool)>) {
        for s in stmts {
            let id = *next_id;
            *next_id += 1;
            if let Some((c, v)) = controller {
                out.insert((c, id, v));
            }
            match &s.kind {
                StmtKind::If { then_branch, else_branch, .. } => {
                    walk(then_branch, next_id, Some((id, true)), out);
                    walk(else_branch, next_id, Some((id, false)), out);
                }
                StmtKind::While { body, .. } => walk(body, next_id, Some((id, true)), out),
                _ => {}
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(&program.body, &mut 0, None, &mut out);
    out
}
