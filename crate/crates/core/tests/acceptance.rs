//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and fails when
//! its criterion is not met.
//!
//! Run with `cargo test --test acceptance -- --test-threads=1` for ordered
//! output.

use std::io::Write;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use rlsgp::drift::{
    gp_drift_lower_bound, md_time_bound, simulate_hitting_time, smd_time_bound, ProcessKind, SmdParams,
    SyntheticProcessSpec, Z_ONE_SIDED_95,
};
use rlsgp::engine::{
    construct_theorem1_tree, is_absorbing, known_local_optima, FitnessMode, RunConfig, SizeLimit, Termination,
};
use rlsgp::fitness::{
    conjunction_ctt_error, ctt_error, eval_on_row, exact_generalisation_error, sample_rows, sampled_error,
    InputRow,
};
use rlsgp::harness::{execute, summarize, CellResults, ExperimentSpec, Preset, Stat};
use rlsgp::variation::DeletionVariant;
use rlsgp::{FunctionKind, SyntaxTree, VarId};

const MASTER_SEED: u64 = 1;
const RUNS: usize = 500;
const TOLERANCE: f64 = 0.15;

/// Reference mean runtimes under subtree deletion, rows n = 4, 8, 12, 16 and
/// columns ℓ = n, n+1, 2n, ∞.
const SUBTREE_RUNTIME: [[f64; 4]; 4] = [
    [51.2, 42.5, 38.8, 39.1],
    [147.5, 129.9, 93.5, 92.3],
    [325.9, 233.4, 153.6, 151.2],
    [544.6, 377.0, 228.3, 221.0],
];

/// Reference (stuck proportion, mean successful runtime) under leaf-only
/// deletion, same layout.
const LEAF_ONLY: [[(f64, f64); 4]; 4] = [
    [(0.008, 46.3), (0.002, 40.9), (0.0, 42.5), (0.0, 38.9)],
    [(0.002, 151.8), (0.004, 113.8), (0.0, 98.8), (0.0, 95.3)],
    [(0.016, 284.1), (0.002, 214.3), (0.0, 170.7), (0.0, 160.1)],
    [(0.008, 469.9), (0.010, 345.8), (0.0, 232.5), (0.0, 235.3)],
];

const NS: [u32; 4] = [4, 8, 12, 16];
const COLUMNS: [&str; 4] = ["n", "n+1", "2n", "inf"];

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{verdict} criterion {id}: {title} ({detail})").unwrap();
}

fn note(text: &str) {
    writeln!(std::io::stdout().lock(), "    {text}").unwrap();
}

struct Grid {
    spec: ExperimentSpec,
    results: Vec<CellResults>,
}

impl Grid {
    fn run(preset: Preset) -> Grid {
        let mut spec = ExperimentSpec::preset(preset);
        spec.runs = RUNS;
        spec.seed = MASTER_SEED;
        let results = execute(&spec).expect("grid runs");
        Grid { spec, results }
    }

    /// Cell for row `n` and column index `col`.
    fn cell(&self, n: u32, col: usize) -> (&RunConfig, &CellResults) {
        let series = format!("limit_{}", COLUMNS[col]);
        let i = self
            .spec
            .cells
            .iter()
            .position(|c| c.series == series && c.config.n == n)
            .expect("cell present");
        (&self.spec.cells[i].config, &self.results[i])
    }

    fn summary(&self, n: u32, col: usize) -> rlsgp::harness::SummaryRow {
        let (config, res) = self.cell(n, col);
        let cell = self.spec.cells.iter().find(|c| &c.config == config).unwrap();
        summarize(&res.records(0, cell))
    }
}

fn subtree_grid() -> &'static Grid {
    static GRID: OnceLock<Grid> = OnceLock::new();
    GRID.get_or_init(|| Grid::run(Preset::Table2))
}

fn leaf_grid() -> &'static Grid {
    static GRID: OnceLock<Grid> = OnceLock::new();
    GRID.get_or_init(|| Grid::run(Preset::Table1))
}

fn rel_dev(value: f64, reference: f64) -> f64 {
    (value - reference) / reference
}

#[test]
fn criterion_1_subtree_runtime_grid() {
    let grid = subtree_grid();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (row, &n) in NS.iter().enumerate() {
        for col in 0..4 {
            let s = grid.summary(n, col);
            let mean = s.runtime.mean.unwrap_or(f64::NAN);
            let dev = rel_dev(mean, SUBTREE_RUNTIME[row][col]);
            worst = worst.max(dev.abs());
            let mut ok = s.stuck == 0 && s.budget_exhausted == 0 && dev.abs() <= TOLERANCE;
            if col == 0 {
                ok &= s.size.mean == Some(n as f64) && s.size.std == Some(0.0);
            }
            note(&format!(
                "n={n:2} l={:3}: T={mean:7.1} ref={:6.1} dev={:+.3} S={:.2} sd(S)={:.2} stuck={} budget={}",
                COLUMNS[col],
                SUBTREE_RUNTIME[row][col],
                dev,
                s.size.mean.unwrap_or(f64::NAN),
                s.size.std.unwrap_or(f64::NAN),
                s.stuck,
                s.budget_exhausted
            ));
            pass &= ok;
        }
    }
    report(
        1,
        "subtree deletion, 16 cells x 500 runs: never stuck, runtime within 15%, exact size at l=n",
        pass,
        &format!("worst relative deviation {worst:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_leaf_only_stuck_proportions() {
    let grid = leaf_grid();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (row, &n) in NS.iter().enumerate() {
        for col in 0..4 {
            let s = grid.summary(n, col);
            let (ref_b, ref_t) = LEAF_ONLY[row][col];
            let mean = s.runtime.mean.unwrap_or(f64::NAN);
            let dev = rel_dev(mean, ref_t);
            worst = worst.max(dev.abs());
            let b_ok = if col < 2 {
                (0.0..=0.05).contains(&s.stuck_proportion)
            } else {
                s.stuck_proportion == 0.0
            };
            note(&format!(
                "n={n:2} l={:3}: B={:.3} ref={ref_b:.3} (stuck {} budget {}) T={mean:7.1} ref={ref_t:6.1} dev={dev:+.3}",
                COLUMNS[col], s.stuck_proportion, s.stuck, s.budget_exhausted
            ));
            pass &= b_ok && dev.abs() <= TOLERANCE;
        }
    }
    report(
        2,
        "leaf-only deletion: B <= 0.05 at l in {n, n+1}, B = 0 at l in {2n, inf}, runtime within 15%",
        pass,
        &format!("worst relative deviation {worst:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_deadlock_states() {
    let constructed = construct_theorem1_tree(4, 4).unwrap();
    let mut pass = is_absorbing(&constructed, DeletionVariant::LeafOnly, 4, 4).unwrap();
    for k in known_local_optima() {
        let trapped = is_absorbing(&k.tree, DeletionVariant::LeafOnly, k.n, k.limit).unwrap();
        note(&format!("{} (n={}, l={}): absorbing={trapped}", k.tree, k.n, k.limit));
        pass &= trapped;
    }
    let first = &known_local_optima()[0];
    let escapes = !is_absorbing(&first.tree, DeletionVariant::Subtree, first.n, first.limit).unwrap();
    pass &= escapes;
    report(
        3,
        "constructed and observed local optima trap leaf-only deletion; subtree deletion escapes",
        pass,
        &format!("subtree escape from first optimum: {escapes}"),
    );
    assert!(pass);
}

fn random_tree<R: Rng>(rng: &mut R, vars: &[VarId], leaves: usize) -> SyntaxTree {
    if leaves == 1 {
        return SyntaxTree::leaf(*vars.choose(rng).unwrap());
    }
    let left = rng.gen_range(1..leaves);
    let kind = if rng.gen_bool(0.5) {
        FunctionKind::And
    } else {
        FunctionKind::Or
    };
    let l = random_tree(rng, vars, left);
    let r = random_tree(rng, vars, leaves - left);
    SyntaxTree::join(kind, &l, &r)
}

fn naive_error(tree: &SyntaxTree, n: u32) -> u64 {
    (0..1u64 << n)
        .filter(|&i| {
            let row = InputRow::from_index(n, i);
            eval_on_row(tree, &row).unwrap() != row.is_all_ones()
        })
        .count() as u64
}

/// Random conjunction over exactly the given distinct variables.
fn random_conjunction<R: Rng>(rng: &mut R, vars: &mut Vec<VarId>) -> SyntaxTree {
    vars.shuffle(rng);
    let mut trees: Vec<SyntaxTree> = vars.iter().map(|&v| SyntaxTree::leaf(v)).collect();
    while trees.len() > 1 {
        let i = rng.gen_range(0..trees.len());
        let a = trees.swap_remove(i);
        let j = rng.gen_range(0..trees.len());
        let b = trees.swap_remove(j);
        trees.push(SyntaxTree::and(&a, &b));
    }
    trees.pop().unwrap()
}

#[test]
fn criterion_4_fitness_oracles_agree() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(MASTER_SEED);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=12u32);
        let vars: Vec<VarId> = (1..=n).map(|i| VarId::new(i).unwrap()).collect();
        let leaves = rng.gen_range(1..=24);
        let tree = random_tree(&mut rng, &vars, leaves);
        let fast = ctt_error(&tree, n).unwrap().count;
        let slow = naive_error(&tree, n);
        let exact = exact_generalisation_error(&tree, n).unwrap();
        if fast != slow || !exact.equals_count(fast, n) {
            mismatches += 1;
        }
    }
    let mut conj_mismatches = 0;
    let mut conj_checked = 0;
    for n in 1..=12u32 {
        for a in 1..=n {
            for _ in 0..20 {
                let mut pool: Vec<VarId> = (1..=n).map(|i| VarId::new(i).unwrap()).collect();
                pool.shuffle(&mut rng);
                pool.truncate(a as usize);
                let tree = random_conjunction(&mut rng, &mut pool);
                conj_checked += 1;
                if ctt_error(&tree, n).unwrap().count as u128 != conjunction_ctt_error(a, n).unwrap() {
                    conj_mismatches += 1;
                }
            }
        }
    }
    let pass = mismatches == 0 && conj_mismatches == 0;
    report(
        4,
        "bit-parallel = row-by-row = 2^n x exact generalisation error on 10^4 random trees; conjunction formula",
        pass,
        &format!("{mismatches} tree mismatches, {conj_mismatches}/{conj_checked} conjunction mismatches"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_sampled_error_concentration() {
    let n = 50u32;
    let lg = (n as f64).log2();
    let s = ((n * n) as f64 * lg * lg).round() as usize;
    let samples = 10_000;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(MASTER_SEED);
    let mut pass = true;
    let mut details = Vec::new();
    for a in [5u32, 10, 20] {
        let vars: Vec<VarId> = (1..=a).map(|i| VarId::new(i * 2).unwrap()).collect();
        let tree = SyntaxTree::conjunction(vars);
        let f = exact_generalisation_error(&tree, n).unwrap().value();
        let expected = f * s as f64;
        let allowed = (4.0 * lg).max(expected);
        let mut sample = sample_rows(n, s, &mut rng).unwrap();
        let mut violations = 0;
        for _ in 0..samples {
            sample.resample(&mut rng);
            let x = sampled_error(&tree, &sample).unwrap().count as f64;
            if (expected - x).abs() > allowed {
                violations += 1;
            }
        }
        let frac = violations as f64 / samples as f64;
        details.push(format!("a={a}: Fs={expected:.2}, violations {frac:.4}"));
        pass &= frac < 0.01;
    }
    report(
        5,
        &format!("|Fs - X| <= max(4 lg n, Fs) for n=50, s={s}, 10^4 samples"),
        pass,
        &details.join("; "),
    );
    assert!(pass);
}

#[test]
fn criterion_6_super_multiplicative_drift() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(MASTER_SEED);
    let mut pass = true;
    let mut tightest = f64::INFINITY;
    for kind in ProcessKind::ALL {
        for gamma in [2.0f64, 10.0] {
            for delta in [0.1, 0.01] {
                let spec = SyntheticProcessSpec::new(kind, gamma, delta).unwrap();
                for power in [1, 4, 64] {
                    let x0 = gamma.powi(power);
                    let bound = smd_time_bound(&SmdParams::new(gamma, delta, x0).unwrap());
                    let h = simulate_hitting_time(&spec, x0, 1000, &mut rng).unwrap();
                    tightest = tightest.min(bound / h.mean);
                    let ok = h.mean <= bound;
                    if !ok {
                        note(&format!(
                            "{} gamma={gamma} delta={delta} X0=gamma^{power}: mean {:.2} > bound {bound:.2}",
                            kind.name(),
                            h.mean
                        ));
                    }
                    pass &= ok;
                }
            }
        }
    }
    let mut comparisons = 0;
    for gamma in [2.0f64, 10.0] {
        for delta in [0.1, 0.01] {
            for k in 4..=10 {
                // log2 log_gamma X0 = k
                let log_x0 = 2f64.powi(k) * gamma.ln();
                if log_x0 > f64::MAX.ln() {
                    continue;
                }
                let x0 = log_x0.exp();
                let smd = smd_time_bound(&SmdParams::new(gamma, delta, x0).unwrap());
                let md = md_time_bound(delta, x0).unwrap();
                comparisons += 1;
                pass &= smd < md;
            }
        }
    }
    report(
        6,
        "synthetic processes hit 0 within the super-multiplicative bound; bound beats multiplicative drift once log2 log_gamma X0 >= 4",
        pass,
        &format!("smallest bound/mean ratio {tightest:.2}, {comparisons} bound comparisons"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_gp_drift_condition() {
    let mut spec = ExperimentSpec::preset(Preset::DriftReport);
    spec.runs = RUNS;
    spec.seed = MASTER_SEED;
    let results = execute(&spec).unwrap();
    let config = &spec.cells[0].config;
    let binned = results[0].binned_drift(config).unwrap();
    let limit = config.limit.as_option().unwrap();
    let mut pass = true;
    let mut checked = 0;
    for bin in &binned.bins {
        let Some(lcb) = bin.lower_confidence_bound(Z_ONE_SIDED_95) else {
            continue;
        };
        let bound = gp_drift_lower_bound(bin.mid(), config.n, limit).unwrap();
        note(&format!(
            "bin mid {:9.2}: count {:6} mean {:10.4} lcb {:10.4} bound {:8.4}",
            bin.mid(),
            bin.count(),
            bin.mean().unwrap(),
            lcb,
            bound
        ));
        checked += 1;
        pass &= lcb >= bound;
    }
    pass &= checked > 0;
    report(
        7,
        "n=12, l=24, subtree: one-sided 95% lower bound on mean drift >= analytic bound in every bin with >= 100 transitions",
        pass,
        &format!("{checked} bins checked"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_sampled_mode_trends() {
    let thresholds = [8u64, 16, 32];
    let mut spec = ExperimentSpec::preset(Preset::Fig2);
    spec.cells.retain(|c| {
        matches!(c.config.mode, FitnessMode::SampledFresh { sample_size: 8192, threshold } if thresholds.contains(&threshold))
    });
    assert_eq!(spec.cells.len(), 3);
    spec.runs = RUNS;
    spec.seed = MASTER_SEED;
    let results = execute(&spec).unwrap();

    let mut pass = true;
    let mut medians = Vec::new();
    let mut sizes = Vec::new();
    let mut ors = Vec::new();
    let mut details = Vec::new();
    for (cell, res) in spec.cells.iter().zip(&results) {
        let FitnessMode::SampledFresh { threshold, .. } = cell.config.mode else {
            unreachable!()
        };
        let quick = res
            .results
            .iter()
            .filter(|r| r.termination == Termination::ThresholdMet && r.iterations <= 10_000)
            .count() as f64
            / res.results.len() as f64;
        let or_ok = res
            .results
            .iter()
            .all(|r| r.final_or_count as u64 <= r.or_insertions_accepted);
        let or_accepting = res.results.iter().filter(|r| r.or_insertions_accepted > 0).count();
        let all = |f: fn(&rlsgp::engine::RunResult) -> f64| Stat::of(&res.results.iter().map(f).collect::<Vec<_>>());
        let runtime = all(|r| r.iterations as f64);
        let size = all(|r| r.final_leaf_count as f64);
        let or_final = all(|r| r.final_or_count as f64);
        let se = |st: &Stat| st.std.unwrap() / (st.count as f64).sqrt();
        note(&format!(
            "A={threshold:2}: threshold met within 10^4 in {quick:.3}, median T {:.1}, mean size {:.3} (se {:.3}), \
             mean ORs {:.3} (se {:.3}), runs accepting an OR {or_accepting}",
            runtime.median.unwrap(),
            size.mean.unwrap(),
            se(&size),
            or_final.mean.unwrap(),
            se(&or_final)
        ));
        details.push(format!("A={threshold}: {quick:.3}"));
        pass &= quick >= 0.95 && or_ok;
        medians.push(runtime.median.unwrap());
        sizes.push(size.mean.unwrap());
        ors.push(or_final.mean.unwrap());
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let sizes_ok = sizes.windows(2).all(|w| w[1] <= w[0]);
    let ors_ok = ors.windows(2).all(|w| w[1] <= w[0]);
    pass &= decreasing && sizes_ok && ors_ok;
    report(
        8,
        "n=50, s=2^13: runs meet A within 10^4 iterations; runtime, size and OR count fall as A grows",
        pass,
        &format!(
            "{}; median trend {decreasing}, size trend {sizes_ok}, OR trend {ors_ok}",
            details.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_runtime_scaling() {
    let grid = subtree_grid();
    let t8 = grid.summary(8, 2).runtime.mean.unwrap();
    let t16 = grid.summary(16, 2).runtime.mean.unwrap();
    let ratio = t16 / t8;
    let pass = (1.8..=4.0).contains(&ratio);
    report(
        9,
        "T(16)/T(8) at l=2n within [1.8, 4.0]",
        pass,
        &format!("T(8)={t8:.1}, T(16)={t16:.1}, ratio {ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn subtree_runs_respect_configuration() {
    // sanity on the shared grid: every cell used the preset configuration
    let grid = subtree_grid();
    for (cell, res) in grid.spec.cells.iter().zip(&grid.results) {
        assert_eq!(res.results.len(), RUNS);
        assert_eq!(cell.config.deletion, DeletionVariant::Subtree);
        assert!(res.results.iter().all(|r| cell.config.limit.admits(r.final_leaf_count)));
        if cell.config.limit == SizeLimit::Unbounded {
            assert!(res.results.iter().all(|r| r.full_iterations == 0));
        }
    }
}
