//! Acceptance gate: one PASS/FAIL line per criterion on stdout, then a single
//! assertion over all of them.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use toolrank::dataset;
use toolrank::experiment::{cross_validate_dataset, train_ensemble, CvReport, ExperimentConfig};
use toolrank::kernel::FittedKernel;
use toolrank_core::competition::ScoringSchema;
use toolrank_core::ranking::{default_predictor, spearman, vote, PreferenceMatrix};
use toolrank_core::svm::{self, solve_dual, BinaryDataset};
use toolrank_core::wl::{self, combine, wl_kernel, KernelSpec};
use toolrank_core::{
    frontend, CompressionTable, EdgeKind, GramMatrix, KernelConfig, NeighborSelector, Ranking, SvmConfig,
    VerificationGraph,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{took:.2?}"))
}

fn kernel_matches_oracle() -> Check {
    let start = Instant::now();
    let mut r = common::rng(0xacce_0001);
    let mut kinds_seen = [false; 4];
    for pair in 0..120 {
        let g1 = common::random_graph(&mut r, 50);
        let g2 = common::random_graph(&mut r, 50);
        for e in g1.edges().iter().chain(g2.edges()) {
            kinds_seen[e.kind as usize] = true;
        }
        let selector = if pair % 2 == 0 {
            NeighborSelector::all()
        } else {
            let kinds: Vec<EdgeKind> = EdgeKind::ALL.into_iter().filter(|_| r.random_bool(0.5)).collect();
            NeighborSelector::new(&kinds).unwrap_or(NeighborSelector::single(EdgeKind::CF))
        };
        let cfg = KernelConfig::new(selector, r.random_range(0..=4), r.random_range(0..=3));
        let fast = wl_kernel(&g1, &g2, &cfg, &mut CompressionTable::new());
        let slow = common::naive_kernel(&g1, &g2, &cfg);
        ensure(fast == slow, format!("pair {pair} ({}): histogram {fast}, naive {slow}", cfg.fingerprint()))?;
    }
    ensure(kinds_seen.iter().all(|&s| s), "generator missed an edge type")?;
    Ok(format!("120 pairs exact, {}", within(start, Duration::from_secs(10))?))
}

fn eigen_ratio(g: &GramMatrix) -> (f64, f64) {
    let n = g.size();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, g.data())).eigenvalues;
    (eig.min(), eig.max())
}

fn gram_is_psd() -> Check {
    let start = Instant::now();
    let mut r = common::rng(0xacce_0002);
    let graphs: Vec<VerificationGraph> = (0..30).map(|_| common::random_graph(&mut r, 40)).collect();
    let gram_for = |sel: &str| wl::gram(&graphs, &KernelConfig::new(sel.parse().unwrap(), 5, 2)).0;
    let mut worst = f64::INFINITY;
    let mut check = |name: &str, g: &GramMatrix| -> Result<(), String> {
        let (lo, hi) = eigen_ratio(g);
        worst = worst.min(lo / hi);
        ensure(lo >= -1e-6 * hi, format!("{name}: min eigenvalue {lo:e}, max {hi:e}"))
    };
    for sel in ["CF", "CD", "DD", "CD,DD", "CF,CD,DD"] {
        check(sel, &gram_for(sel))?;
    }
    let parts = [gram_for("CF"), gram_for("CD"), gram_for("DD")];
    let third = 1.0 / 3.0;
    let mix = combine(&[(third, &parts[0]), (third, &parts[1]), (third, &parts[2])]).map_err(|e| e.to_string())?;
    check("1/3 mix", &mix)?;
    Ok(format!("6 kernels, worst min/max {worst:.2e}, {}", within(start, Duration::from_secs(30))?))
}

fn linear_problem(r: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<i8>) {
    let pts: Vec<[f64; 3]> = (0..n).map(|_| [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
    let k = pts.iter().flat_map(|a| pts.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x * y).sum())).collect();
    let mut y: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
    y[0] = 1;
    y[1] = -1;
    (k, y)
}

fn training_errors(gram: &GramMatrix, y: &[i8], cfg: &SvmConfig) -> Result<usize, String> {
    let data = BinaryDataset::new((0..y.len()).collect(), y.to_vec()).map_err(|e| e.to_string())?;
    let m = svm::train(gram, &data, cfg).map_err(|e| e.to_string())?;
    let mut wrong = 0;
    for (t, &label) in y.iter().enumerate() {
        let f = m.decision(gram.row(t)).map_err(|e| e.to_string())?;
        if f * label as f64 <= 0.0 {
            wrong += 1;
        }
    }
    Ok(wrong)
}

fn svm_is_correct() -> Check {
    let mut r = common::rng(0xacce_0003);
    let mut worst: f64 = 0.0;
    for p in 0..50 {
        let n = 2 + p % 5;
        let c = [0.1, 1.0, 10.0][p % 3];
        let (k, y) = linear_problem(&mut r, n);
        let sol = solve_dual(&k, &y, &SvmConfig { c, ..Default::default() }).map_err(|e| e.to_string())?;
        let oracle = common::brute_force_dual(&k, &y, c);
        worst = worst.max((sol.objective - oracle).abs());
        ensure(
            (sol.objective - oracle).abs() <= 1e-4,
            format!("problem {p}: smo {}, oracle {oracle}", sol.objective),
        )?;
    }

    // Two clouds separated along the first axis.
    let pts: Vec<[f64; 2]> = (0..40)
        .map(|i| {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            [side * r.random_range(1.5..4.0), r.random_range(-3.0..3.0)]
        })
        .collect();
    let y: Vec<i8> = (0..40).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let k = pts.iter().flat_map(|a| pts.iter().map(move |b| a[0] * b[0] + a[1] * b[1])).collect();
    let linear = GramMatrix::from_rows(40, k, "linear".into()).map_err(|e| e.to_string())?;
    let e1 = training_errors(&linear, &y, &SvmConfig::default())?;
    ensure(e1 == 0, format!("{e1} training errors on separable points"))?;

    // Loop programs against straight-line programs under the CF kernel.
    let graphs: Vec<VerificationGraph> = (0..40)
        .map(|i| {
            let src = if i % 2 == 0 { support::loop_program(&mut r) } else { support::straight_program(&mut r) };
            frontend::extract(&src).unwrap()
        })
        .collect();
    let (wl_gram, _) = wl::gram(&graphs, &KernelConfig::new("CF".parse().unwrap(), 5, 2));
    let e2 = training_errors(&wl_gram, &y, &SvmConfig::default())?;
    ensure(e2 == 0, format!("{e2} training errors on separable programs"))?;
    Ok(format!("50 dual problems, max |smo - oracle| {worst:.1e}; 2 separable fixtures, 0 errors"))
}

fn spearman_cases() -> Check {
    for k in 2..=8 {
        let id = Ranking::identity(k);
        let s_id = spearman(&id, &id).map_err(|e| e.to_string())?;
        let s_rev = spearman(&id, &id.reversed()).map_err(|e| e.to_string())?;
        ensure(s_id == 1.0 && s_rev == -1.0, format!("K={k}: identity {s_id}, reversal {s_rev}"))?;
    }
    let p = Ranking::from_positions(vec![1, 2, 3]).unwrap();
    let q = Ranking::from_positions(vec![2, 1, 3]).unwrap();
    let s = spearman(&p, &q).map_err(|e| e.to_string())?;
    ensure(s == 0.5, format!("(1,2,3) vs (2,1,3) gave {s}"))?;
    Ok("K=2..8 identity/reversal, (1,2,3) vs (2,1,3) = 0.5".into())
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, k);
            out.push(q);
        }
    }
    out
}

fn default_predictor_is_optimal() -> Check {
    let mut r = common::rng(0xacce_0005);
    for case in 0..100 {
        let k = 2 + case % 4;
        let all: Vec<Ranking> = permutations(k).into_iter().map(|p| Ranking::from_positions(p).unwrap()).collect();
        let sample: Vec<Ranking> = (0..r.random_range(1..15)).map(|_| all[r.random_range(0..all.len())].clone()).collect();
        let total = |p: &Ranking| sample.iter().map(|q| spearman(p, q).unwrap()).sum::<f64>();
        let best = all.iter().map(total).fold(f64::NEG_INFINITY, f64::max);
        let got = total(&default_predictor(&sample).map_err(|e| e.to_string())?);
        ensure(got >= best - 1e-9, format!("case {case} (K={k}): consensus {got}, optimum {best}"))?;
    }
    Ok("100 multisets, K=2..5".into())
}

fn voting_conserves_mass() -> Check {
    let mut r = common::rng(0xacce_0006);
    let mut checked = 0;
    let mut check = |scores: &[f64]| -> Result<(), String> {
        let k = scores.len() as f64;
        let total: f64 = scores.iter().sum();
        checked += 1;
        ensure((total - k * (k - 1.0) / 2.0).abs() <= 1e-9, format!("K={k}: scores sum to {total}"))
    };
    for _ in 0..200 {
        let k = r.random_range(2..=10);
        let p = vote(PreferenceMatrix::from_upper(k, |_, _| r.random_range(0.0..=1.0)));
        check(&p.scores)?;
    }
    // Real ensemble predictions.
    let graphs: Vec<VerificationGraph> = (0..30)
        .map(|i| {
            let src = if i % 3 == 0 { support::loop_program(&mut r) } else { common::random_program(&mut r) };
            frontend::extract(&src).unwrap()
        })
        .collect();
    let tools = toolrank_core::ToolSet::new(support::TOOLS.iter().map(|s| s.to_string()).collect()).unwrap();
    let rankings: Vec<Ranking> = (0..30)
        .map(|_| {
            let all = permutations(4);
            Ranking::from_positions(all[r.random_range(0..all.len())].clone()).unwrap()
        })
        .collect();
    let kernel = FittedKernel::fit(&graphs, &KernelSpec::single(KernelConfig::new(NeighborSelector::all(), 5, 2)));
    let train: Vec<usize> = (0..graphs.len()).collect();
    let ens = train_ensemble(&kernel.gram(), &train, &rankings, &tools, &SvmConfig::default()).map_err(|e| e.to_string())?;
    let unseen: Vec<VerificationGraph> = (0..10).map(|_| frontend::extract(&common::random_program(&mut r)).unwrap()).collect();
    for g in graphs.iter().chain(&unseen) {
        check(&ens.predict(&kernel.row(g)).map_err(|e| e.to_string())?.scores)?;
    }
    Ok(format!("{checked} predictions"))
}

fn synthetic_experiment() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (graphs, outcomes) = support::write_corpus(dir.path(), 200, 0xacce_0007);
    let records = dataset::read_outcomes(&outcomes).map_err(|e| e.to_string())?;
    let manifest = dataset::assemble(&graphs, &records, &ScoringSchema::EXAMPLE, true).map_err(|e| e.to_string())?;
    let data = dataset::manifest_to_dataset(&manifest, &graphs).map_err(|e| e.to_string())?;
    ensure(data.len() == 200 && data.tools.len() == 4, "corpus did not assemble to 200 tasks over 4 tools")?;
    let forward = Ranking::identity(4);
    let loops = data.rankings.iter().filter(|r| **r == forward).count();
    ensure(loops == 100 && data.rankings.iter().all(|r| *r == forward || *r == forward.reversed()), "family rankings are off")?;
    let cfg = ExperimentConfig {
        kernel: KernelSpec::single(KernelConfig::new("CF".parse().unwrap(), 5, 2)),
        svm: SvmConfig { c: 1.0, ..Default::default() },
        folds: 10,
        seed: 0,
        repeats: 1,
    };
    let report = cross_validate_dataset(&data, &cfg).map_err(|e| e.to_string())?;
    let (rpc, def) = (report.rpc.mean, report.default.mean);
    ensure(rpc >= 0.9, format!("RPC mean Spearman {rpc:.4} < 0.9"))?;
    ensure(def <= 0.3, format!("default mean Spearman {def:.4} > 0.3"))?;
    Ok(format!("RPC {rpc:.4}, default {def:.4}, {}", within(start, Duration::from_secs(300))?))
}

fn edge_set(g: &VerificationGraph) -> Vec<(u32, u32, EdgeKind, bool)> {
    let mut v: Vec<_> = g.edges().iter().map(|e| (e.src, e.dst, e.kind, e.cond)).collect();
    v.sort();
    v
}

fn frontend_fidelity() -> Check {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let src = std::fs::read_to_string(fixtures.join("p_sum.c")).map_err(|e| e.to_string())?;
    let got = frontend::extract(&src).map_err(|e| e.to_string())?;
    let want = toolrank::graph_json::load_graph(&fixtures.join("p_sum.expected.json")).map_err(|e| e.to_string())?;
    ensure(got.nodes() == want.nodes(), "node labels or depths differ from the expected graph")?;
    let (ge, we) = (edge_set(&got), edge_set(&want));
    ensure(ge == we, format!("edges differ: extra {:?}, missing {:?}", ge.iter().filter(|e| !we.contains(e)).collect::<Vec<_>>(), we.iter().filter(|e| !ge.contains(e)).collect::<Vec<_>>()))?;

    let roots: Vec<usize> = (0..got.node_count()).filter(|&n| got.nodes()[n].depth == 0).collect();
    ensure(roots == (0..10).collect::<Vec<_>>(), format!("statement roots {roots:?}"))?;
    let has = |s: u32, d: u32, k: EdgeKind, c: bool| ge.contains(&(s, d, k, c));
    // Roots 0..9 are lines 1..10; the loop sits on line 7.
    ensure(has(8, 6, EdgeKind::CF, true), "no CF back edge from line 9 to the loop")?;
    ensure(has(6, 7, EdgeKind::CD, true) && has(6, 8, EdgeKind::CD, true), "missing CD(T) from the loop to lines 8-9")?;
    ensure(has(3, 6, EdgeKind::DD, true), "missing DD from line 4 into the loop condition")?;
    Ok(format!("{} nodes, {} edges match the hand-built graph", got.node_count(), ge.len()))
}

fn run_cv(graphs: &Path, outcomes: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_toolrank"))
        .args(["cv", "--folds", "10", "--seed", "7", "--edges", "CF", "--depth", "5", "--iters", "2", "--C", "1"])
        .arg("--graphs")
        .arg(graphs)
        .arg("--outcomes")
        .arg(outcomes)
        .arg("-o")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), format!("cv failed: {}", String::from_utf8_lossy(&status.stderr)))?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn cv_is_deterministic() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (graphs, outcomes) = support::write_corpus(dir.path(), 60, 0xacce_0009);
    let a = run_cv(&graphs, &outcomes, &dir.path().join("a.json"))?;
    let b = run_cv(&graphs, &outcomes, &dir.path().join("b.json"))?;
    ensure(a == b, "reports differ")?;
    let report: CvReport = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    ensure(report.runs.len() == 1 && report.runs[0].folds.len() == 10, "report does not have 10 folds")?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("kernel equals naive double sum", kernel_matches_oracle),
        ("Gram matrices are PSD", gram_is_psd),
        ("SMO matches box-QP oracle; separable fixtures", svm_is_correct),
        ("Spearman formula", spearman_cases),
        ("default predictor is optimal", default_predictor_is_optimal),
        ("voting conserves mass", voting_conserves_mass),
        ("synthetic end-to-end experiment", synthetic_experiment),
        ("p_sum frontend graph", frontend_fidelity),
        ("cv reports are byte-identical", cv_is_deterministic),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let line = match &outcome {
            Ok(detail) => format!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL  {name}: {why}", i + 1)
            }
        };
        // Written to the process stdout so the lines survive output capture.
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
