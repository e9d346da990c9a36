//! Randomised property suites: the axioms and identities of the spectral
//! flow, the gap-metric inequalities, the Maslov-index bridge and the
//! Hamiltonian applications, each run over seeded generated instances with
//! independent oracles. A failing instance is serialised into the report so
//! the exact case can be replayed from its seed.

use crate::config::Tolerances;
use crate::error::Result;
use crate::gapmetric::{gap_delta, gap_distance, perturbation_inequality_check};
use crate::generate::{
    generate_constant_kernel_path, generate_homotopy, generate_isolated_crossing,
    generate_operator_loop, generate_operator_path, generate_rotation_boundary,
    random_psd_matrix, random_sym_matrix, HomotopyMode,
};
use crate::hamiltonian::{
    comparison_check_hamiltonian, comparison_check_matrix, fundamental_solution, hamiltonian_sfl,
    isolated_bound_check_path, sweep_nontrivial, HamiltonianFamily, SweepOptions,
    TimeVaryingPerturbation,
};
use crate::maslov::{sfl_via_maslov, LagrangianFrame, LagrangianPath, MaslovOptions};
use crate::numerics::SymMatrix;
use crate::specflow::{
    half_normalization_path, normalization_path, reverse, riesz_path, sfl_crossings,
    sfl_partition, OperatorPath, SflOptions,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

/// Instance counts per suite; the defaults match the unattended acceptance
/// run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleCounts {
    pub method_agreement: usize,
    pub homotopy: usize,
    pub gap_tuples: usize,
    pub gap_scalars: usize,
    pub maslov_bridge: usize,
    pub comparison_matrix: usize,
    pub comparison_hamiltonian: usize,
    pub count_bound: usize,
    pub riesz: usize,
    pub isolated: usize,
    pub axioms: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            method_agreement: 200,
            homotopy: 100,
            gap_tuples: 1000,
            gap_scalars: 100,
            maslov_bridge: 100,
            comparison_matrix: 180,
            comparison_hamiltonian: 20,
            count_bound: 24,
            riesz: 100,
            isolated: 100,
            axioms: 50,
        }
    }
}

impl SampleCounts {
    /// Rescale every count by `factor` (at least one instance each).
    pub fn scaled(&self, factor: f64) -> SampleCounts {
        let s = |n: usize| ((n as f64 * factor).ceil() as usize).max(1);
        SampleCounts {
            method_agreement: s(self.method_agreement),
            homotopy: s(self.homotopy),
            gap_tuples: s(self.gap_tuples),
            gap_scalars: s(self.gap_scalars),
            maslov_bridge: s(self.maslov_bridge),
            comparison_matrix: s(self.comparison_matrix),
            comparison_hamiltonian: s(self.comparison_hamiltonian),
            count_bound: s(self.count_bound),
            riesz: s(self.riesz),
            isolated: s(self.isolated),
            axioms: s(self.axioms),
        }
    }
}

/// Reproducible run configuration; identical configurations produce
/// byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub samples: SampleCounts,
    pub tol: Tolerances,
    pub grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            dims: (2..=10).collect(),
            samples: SampleCounts::default(),
            tol: Tolerances::default(),
            grid: 1000,
        }
    }
}

impl RunConfig {
    fn sfl_opts(&self) -> SflOptions {
        SflOptions {
            tol: self.tol,
            ..Default::default()
        }
    }

    fn dims_capped(&self, cap: usize) -> Vec<usize> {
        let v: Vec<usize> = self
            .dims
            .iter()
            .copied()
            .filter(|&d| d >= 2 && d <= cap)
            .collect();
        if v.is_empty() {
            (2..=cap).collect()
        } else {
            v
        }
    }
}

/// A failed instance with enough data to regenerate it.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub instance: serde_json::Value,
    pub detail: String,
}

/// Outcome of one suite; `verdict` is "pass" exactly when no instance
/// failed.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    pub failures: Vec<FailureRecord>,
    pub stats: BTreeMap<String, f64>,
    pub verdict: String,
}

impl SuiteReport {
    fn assemble(
        suite: &str,
        instances: usize,
        failures: Vec<FailureRecord>,
        stats: BTreeMap<String, f64>,
    ) -> Self {
        let verdict = if failures.is_empty() { "pass" } else { "fail" };
        SuiteReport {
            suite: suite.to_string(),
            instances,
            failures,
            stats,
            verdict: verdict.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

/// The spectral-flow computation the axiom suites exercise; swapping in a
/// broken implementation must flip their verdicts (mutation smoke test).
pub type SflBackend<'a> = &'a (dyn Fn(&OperatorPath) -> Result<i64> + Sync);

/// splitmix64-style mixing for per-instance seeds.
fn mix(seed: u64, salt: u64, idx: u64) -> u64 {
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(idx.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn run_instances<F>(count: usize, f: F) -> Vec<FailureRecord>
where
    F: Fn(usize) -> Option<FailureRecord> + Sync + Send,
{
    (0..count).into_par_iter().filter_map(f).collect()
}

/// Criterion 1: the partition and crossing methods agree with each other and
/// with the branch oracle on generated paths.
pub fn suite_method_agreement(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(10);
    let opts = cfg.sfl_opts();
    let n = cfg.samples.method_agreement;
    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 1, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(0..=4);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "method_agreement", "seed": seed, "dim": dim, "budget": budget});
        let p = match sfl_partition(&g.path, &opts) {
            Ok(r) => r.value,
            Err(e) => return Some(FailureRecord { instance, detail: format!("partition: {e}") }),
        };
        let c = match sfl_crossings(&g.path, &opts) {
            Ok(r) => r.value,
            Err(e) => return Some(FailureRecord { instance, detail: format!("crossings: {e}") }),
        };
        if p != c || p != g.oracle_sfl {
            return Some(FailureRecord {
                instance,
                detail: format!("partition {p}, crossings {c}, oracle {}", g.oracle_sfl),
            });
        }
        None
    });
    SuiteReport::assemble("method_agreement", n, failures, BTreeMap::new())
}

/// Criterion 2: the homotopy formula
/// `sfl(h(0,·)) = sfl(h(·,0)) + sfl(h(1,·)) − sfl(h(·,1))`, plus the
/// boundary-mode corollaries.
pub fn suite_homotopy(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(8);
    let opts = cfg.sfl_opts();
    let modes = [
        HomotopyMode::General,
        HomotopyMode::FixedEdges,
        HomotopyMode::InvertibleEdges,
        HomotopyMode::FreeLoop,
    ];
    let n = cfg.samples.homotopy;
    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 2, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let mode = modes[idx % modes.len()];
        let h = generate_homotopy(seed, dim, mode);
        let instance =
            json!({"suite": "homotopy", "seed": seed, "dim": dim, "mode": format!("{mode:?}")});
        let sfl = |p: &OperatorPath| sfl_partition(p, &opts).map(|r| r.value);
        let (s0, s1, e0, e1) = match (
            sfl(&h.side_s0()),
            sfl(&h.side_s1()),
            sfl(&h.edge_l0()),
            sfl(&h.edge_l1()),
        ) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => {
                return Some(FailureRecord {
                    instance,
                    detail: "boundary flow failed to evaluate".into(),
                })
            }
        };
        if s0 != e0 + s1 - e1 {
            return Some(FailureRecord {
                instance,
                detail: format!("formula violated: {s0} != {e0} + {s1} - {e1}"),
            });
        }
        let edges_equal = match mode {
            HomotopyMode::General => true,
            _ => s0 == s1,
        };
        if !edges_equal {
            return Some(FailureRecord {
                instance,
                detail: format!("boundary-mode equality violated: {s0} != {s1}"),
            });
        }
        None
    });
    SuiteReport::assemble("homotopy_formula", n, failures, BTreeMap::new())
}

/// Criterion 3 (and the loop corollary): the concatenation, vanishing,
/// constant-kernel, normalisation and reversal axioms, run against the given
/// spectral-flow backend.
pub fn suites_axioms(cfg: &RunConfig, backend: SflBackend) -> Vec<SuiteReport> {
    let n = cfg.samples.axioms;
    let tol = cfg.tol;
    let dims = cfg.dims_capped(8);

    let concatenation = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 3, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(0..=3);
        let split = rng.gen_range(0.25..0.75);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "axiom_concatenation", "seed": seed, "dim": dim, "budget": budget, "split": split});
        let whole = backend(&g.path);
        let left = backend(&g.path.restrict(0.0, split));
        let right = backend(&g.path.restrict(split, 1.0));
        match (whole, left, right) {
            (Ok(w), Ok(l), Ok(r)) if w == l + r && w == g.oracle_sfl => None,
            (Ok(w), Ok(l), Ok(r)) => Some(FailureRecord {
                instance,
                detail: format!("{w} != {l} + {r} (oracle {})", g.oracle_sfl),
            }),
            _ => Some(FailureRecord { instance, detail: "evaluation failed".into() }),
        }
    });

    let zero = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 4, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let g = generate_operator_path(seed, dim, 0);
        let instance = json!({"suite": "axiom_zero_invertible", "seed": seed, "dim": dim});
        match backend(&g.path) {
            Ok(0) => None,
            Ok(v) => Some(FailureRecord { instance, detail: format!("invertible path has sfl {v}") }),
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });

    let constant_kernel = run_instances(n.div_ceil(2), |idx| {
        let seed = mix(cfg.seed, 5, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let kdim = rng.gen_range(1..dim);
        let path = generate_constant_kernel_path(seed, dim, kdim);
        let instance = json!({"suite": "constant_kernel_zero", "seed": seed, "dim": dim, "kernel_dim": kdim});
        match backend(&path) {
            Ok(0) => None,
            Ok(v) => Some(FailureRecord { instance, detail: format!("constant-kernel path has sfl {v}") }),
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });

    let normalization = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 6, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let kdim = rng.gen_range(0..dim.min(4));
        // A symmetric matrix with kernel dimension exactly kdim.
        let t = generate_constant_kernel_path(seed, dim, kdim).at(0.37);
        let instance = json!({"suite": "axiom_normalization", "seed": seed, "dim": dim, "kernel_dim": kdim});
        let full = match normalization_path(&t, &tol) {
            Ok(p) => p,
            Err(e) => return Some(FailureRecord { instance, detail: e.to_string() }),
        };
        let half = half_normalization_path(&t, &tol).unwrap();
        let opts = SflOptions { tol, ..Default::default() };
        let via_backend = backend(&full);
        let via_crossings = sfl_crossings(&full, &opts).map(|r| r.value);
        let half_flow = backend(&half);
        match (via_backend, via_crossings, half_flow) {
            (Ok(a), Ok(b), Ok(c)) if a == kdim as i64 && b == kdim as i64 && c == 0 => None,
            (Ok(a), Ok(b), Ok(c)) => Some(FailureRecord {
                instance,
                detail: format!("full {a}/{b} (expected {kdim}), half {c} (expected 0)"),
            }),
            _ => Some(FailureRecord { instance, detail: "evaluation failed".into() }),
        }
    });

    // The rank-one normalisation instance: diag(λ−1/2, 1, −1) has flow 1.
    let np_path = OperatorPath::new(3, |l| SymMatrix::diagonal(&[l - 0.5, 1.0, -1.0]))
        .with_deriv(|_| SymMatrix::diagonal(&[1.0, 0.0, 0.0]));
    let np_failures = {
        let instance = json!({"suite": "axiom_normalization_np"});
        let opts = SflOptions { tol, ..Default::default() };
        let a = backend(&np_path);
        let b = sfl_crossings(&np_path, &opts).map(|r| r.value);
        match (a, b) {
            (Ok(1), Ok(1)) => Vec::new(),
            (a, b) => vec![FailureRecord {
                instance,
                detail: format!("expected 1/1, got {a:?}/{b:?}"),
            }],
        }
    };

    let reversal = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 7, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(0..=3);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "reversal_antisymmetry", "seed": seed, "dim": dim, "budget": budget});
        match (backend(&g.path), backend(&reverse(&g.path))) {
            (Ok(a), Ok(b)) if b == -a => None,
            (Ok(a), Ok(b)) => Some(FailureRecord {
                instance,
                detail: format!("sfl {a}, reversed {b}"),
            }),
            _ => Some(FailureRecord { instance, detail: "evaluation failed".into() }),
        }
    });

    let loops = run_instances(n.div_ceil(2), |idx| {
        let seed = mix(cfg.seed, 8, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let a = generate_operator_loop(seed, dim);
        let k = generate_operator_loop(mix(seed, 9, 0), dim);
        let instance = json!({"suite": "compact_perturbation_loops", "seed": seed, "dim": dim});
        let perturbed = a.add(&k).unwrap();
        match (backend(&a), backend(&perturbed)) {
            (Ok(x), Ok(y)) if x == y => None,
            (Ok(x), Ok(y)) => Some(FailureRecord {
                instance,
                detail: format!("sfl(A) = {x}, sfl(A+K) = {y}"),
            }),
            _ => Some(FailureRecord { instance, detail: "evaluation failed".into() }),
        }
    });

    vec![
        SuiteReport::assemble("axiom_concatenation", n, concatenation, BTreeMap::new()),
        SuiteReport::assemble("axiom_zero_invertible", n, zero, BTreeMap::new()),
        SuiteReport::assemble(
            "constant_kernel_zero",
            n.div_ceil(2),
            constant_kernel,
            BTreeMap::new(),
        ),
        SuiteReport::assemble("axiom_normalization", n, normalization, BTreeMap::new()),
        SuiteReport::assemble("axiom_normalization_np", 1, np_failures, BTreeMap::new()),
        SuiteReport::assemble("reversal_antisymmetry", n, reversal, BTreeMap::new()),
        SuiteReport::assemble(
            "compact_perturbation_loops",
            n.div_ceil(2),
            loops,
            BTreeMap::new(),
        ),
    ]
}

/// Criterion 4: the gap-metric identity, the perturbation inequality and the
/// scalar closed form, plus the metric axioms.
pub fn suite_gap(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(8);
    let n = cfg.samples.gap_tuples;

    #[derive(Default)]
    struct Extremes {
        identity_residual: f64,
        min_slack: f64,
        max_ratio: f64,
    }

    let results: Vec<(Option<FailureRecord>, Extremes)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let seed = mix(cfg.seed, 10, idx as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = dims[rng.gen_range(0..dims.len())];
            let t = random_sym_matrix(&mut rng, dim, 2.0);
            let s = random_sym_matrix(&mut rng, dim, 2.0);
            let r = random_sym_matrix(&mut rng, dim, 2.0);
            let a = random_sym_matrix(&mut rng, dim, 1.0);
            let b = random_sym_matrix(&mut rng, dim, 1.0);
            let instance = json!({"suite": "gap_metric", "seed": seed, "dim": dim});
            let mut ext = Extremes {
                min_slack: f64::INFINITY,
                ..Default::default()
            };

            let d = gap_distance(&t, &s).unwrap();
            let d_rev = gap_distance(&s, &t).unwrap();
            if d != d_rev {
                return (
                    Some(FailureRecord {
                        instance,
                        detail: format!("symmetry broken: {d} vs {d_rev}"),
                    }),
                    ext,
                );
            }
            if d > 1.0 + 1e-10 {
                return (
                    Some(FailureRecord {
                        instance,
                        detail: format!("distance above 1: {d}"),
                    }),
                    ext,
                );
            }
            let dtr = gap_distance(&t, &r).unwrap();
            let dsr = gap_distance(&s, &r).unwrap();
            if dtr > d + dsr + 1e-10 {
                return (
                    Some(FailureRecord {
                        instance,
                        detail: format!("triangle violated: {dtr} > {d} + {dsr}"),
                    }),
                    ext,
                );
            }
            let one_sided = gap_delta(&t, &s).unwrap().max(gap_delta(&s, &t).unwrap());
            ext.identity_residual = (one_sided - d).abs();
            if ext.identity_residual > 1e-10 {
                return (
                    Some(FailureRecord {
                        instance,
                        detail: format!("max-delta identity residual {:.3e}", ext.identity_residual),
                    }),
                    ext,
                );
            }
            let chk = perturbation_inequality_check(&t, &s, &a, &b).unwrap();
            ext.min_slack = chk.slack;
            if chk.rhs > 1e-12 {
                ext.max_ratio = chk.lhs / chk.rhs;
            }
            if !chk.holds {
                return (
                    Some(FailureRecord {
                        instance,
                        detail: format!("estimate violated: lhs {} > rhs {}", chk.lhs, chk.rhs),
                    }),
                    ext,
                );
            }
            (None, ext)
        })
        .collect();

    let mut failures: Vec<FailureRecord> = Vec::new();
    let mut stats = BTreeMap::new();
    let mut max_residual = 0.0_f64;
    let mut min_slack = f64::INFINITY;
    let mut max_ratio = 0.0_f64;
    for (f, e) in results {
        if let Some(f) = f {
            failures.push(f);
        }
        max_residual = max_residual.max(e.identity_residual);
        min_slack = min_slack.min(e.min_slack);
        max_ratio = max_ratio.max(e.max_ratio);
    }

    // Scalar closed form |sin(arctan t − arctan s)|.
    let mut max_scalar_err = 0.0_f64;
    let n2 = cfg.samples.gap_scalars;
    for idx in 0..n2 {
        let seed = mix(cfg.seed, 11, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.gen_range(-5.0..5.0);
        let s = rng.gen_range(-5.0..5.0);
        let d = gap_distance(&SymMatrix::diagonal(&[t]), &SymMatrix::diagonal(&[s])).unwrap();
        let oracle = (t.atan() - s.atan()).sin().abs();
        let err = (d - oracle).abs();
        max_scalar_err = max_scalar_err.max(err);
        if err > 1e-12 {
            failures.push(FailureRecord {
                instance: json!({"suite": "gap_metric_scalar", "seed": seed, "t": t, "s": s}),
                detail: format!("scalar oracle error {err:.3e}"),
            });
        }
    }

    stats.insert("max_identity_residual".into(), max_residual);
    stats.insert("min_estimate_slack".into(), min_slack);
    stats.insert("max_lhs_rhs_ratio".into(), max_ratio);
    stats.insert("max_scalar_error".into(), max_scalar_err);
    SuiteReport::assemble("gap_metric", n + n2, failures, stats)
}

/// Criterion 5: the spectral flow equals the Maslov index of the graph path.
pub fn suite_maslov_bridge(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(6);
    let opts = cfg.sfl_opts();
    let mopts = MaslovOptions {
        tol: cfg.tol,
        scan_samples: 512,
    };
    let n = cfg.samples.maslov_bridge;
    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 12, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(1..=3);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "sfl_maslov_bridge", "seed": seed, "dim": dim, "budget": budget});
        let via_maslov = match sfl_via_maslov(&g.path, &mopts) {
            Ok(v) => v,
            Err(e) => return Some(FailureRecord { instance, detail: format!("maslov: {e}") }),
        };
        let via_crossings = match sfl_crossings(&g.path, &opts) {
            Ok(r) => r.value,
            Err(e) => return Some(FailureRecord { instance, detail: format!("crossings: {e}") }),
        };
        let via_partition = match sfl_partition(&g.path, &opts) {
            Ok(r) => r.value,
            Err(e) => return Some(FailureRecord { instance, detail: format!("partition: {e}") }),
        };
        if via_maslov != via_crossings || via_maslov != via_partition || via_maslov != g.oracle_sfl
        {
            return Some(FailureRecord {
                instance,
                detail: format!(
                    "maslov {via_maslov}, crossings {via_crossings}, partition {via_partition}, oracle {}",
                    g.oracle_sfl
                ),
            });
        }
        None
    });
    SuiteReport::assemble("sfl_maslov_bridge", n, failures, BTreeMap::new())
}

fn span_e1_path() -> LagrangianPath {
    LagrangianPath::constant(LagrangianFrame::horizontal(1))
}

/// Criterion 6: the rotation family `S_λ = 3πλ·I` on n = 1 with equal
/// boundary lines: flow 3, crossings {0, 1/3, 2/3, 1}, drift within budget.
pub fn suite_hamiltonian_rotation(cfg: &RunConfig) -> SuiteReport {
    let mut failures = Vec::new();
    let mut stats = BTreeMap::new();
    let instance = json!({"suite": "hamiltonian_rotation", "grid": cfg.grid});

    let fam = HamiltonianFamily::new(
        1,
        |l, _t| SymMatrix::identity(2).scaled(3.0 * PI * l),
        span_e1_path(),
        span_e1_path(),
    )
    .unwrap()
    .with_grid(cfg.grid)
    .with_deriv(|_, _| SymMatrix::identity(2).scaled(3.0 * PI));

    let opts = SweepOptions {
        tol: cfg.tol,
        lambda_samples: 2048,
        refine_res: 1e-8,
    };
    match hamiltonian_sfl(&fam, &opts) {
        Ok(r) => {
            if r.value != 3 {
                failures.push(FailureRecord {
                    instance: instance.clone(),
                    detail: format!("sfl {} != 3", r.value),
                });
            }
            let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
            let mut max_dev = f64::INFINITY;
            if r.crossings.len() == expect.len() {
                max_dev = r
                    .crossings
                    .iter()
                    .zip(expect)
                    .map(|(c, e)| (c.lambda_star - e).abs())
                    .fold(0.0_f64, f64::max);
                if max_dev > 1e-6 {
                    failures.push(FailureRecord {
                        instance: instance.clone(),
                        detail: format!("crossing deviation {max_dev:.3e}"),
                    });
                }
            } else {
                failures.push(FailureRecord {
                    instance: instance.clone(),
                    detail: format!("expected 4 crossings, found {}", r.crossings.len()),
                });
            }
            stats.insert("max_crossing_deviation".into(), max_dev);
        }
        Err(e) => failures.push(FailureRecord {
            instance: instance.clone(),
            detail: e.to_string(),
        }),
    }

    match fundamental_solution(&fam, 1.0) {
        Ok(psi) => {
            stats.insert("symplectic_drift".into(), psi.symplectic_drift);
            if psi.symplectic_drift > 1e-8 {
                failures.push(FailureRecord {
                    instance,
                    detail: format!("drift {:.3e} above 1e-8", psi.symplectic_drift),
                });
            }
        }
        Err(e) => failures.push(FailureRecord {
            instance,
            detail: e.to_string(),
        }),
    }

    SuiteReport::assemble("hamiltonian_rotation", 1, failures, stats)
}

/// Criterion 7: the comparison principle in the matrix model and the
/// Hamiltonian model, on hypothesis-satisfying randomised instances.
pub fn suite_comparison(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(6);
    let opts = cfg.sfl_opts();
    let n1 = cfg.samples.comparison_matrix;

    let matrix_failures = run_instances(n1, |idx| {
        let seed = mix(cfg.seed, 13, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(0..=3);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "comparison_matrix", "seed": seed, "dim": dim, "budget": budget});

        let c0 = random_sym_matrix(&mut rng, dim, 0.4);
        let c1 = random_sym_matrix(&mut rng, dim, 0.8);
        let c2 = random_sym_matrix(&mut rng, dim, 0.8);
        let (k0, k1, k2) = (c0.clone(), c1.clone(), c2.clone());
        let k = OperatorPath::new(dim, move |l| {
            k0.add(&k1.scaled(l * (1.0 - l))).add(&k2.scaled(l * l * (1.0 - l)))
        });
        let scale0 = rng.gen_range(0.2..1.0);
        let scale1 = rng.gen_range(0.2..1.0);
        let p0 = random_psd_matrix(&mut rng, dim, scale0);
        let p1 = random_psd_matrix(&mut rng, dim, scale1);
        let (q0, q1, q2, r0, r1) = (c0, c1, c2, p0, p1);
        let kprime = OperatorPath::new(dim, move |l| {
            q0.add(&q1.scaled(l * (1.0 - l)))
                .add(&q2.scaled(l * l * (1.0 - l)))
                .add(&r0.scaled(1.0 - l))
                .add(&r1.scaled(-l))
        });
        match comparison_check_matrix(&g.path, &k, &kprime, &opts) {
            Ok(r) if r.holds => None,
            Ok(r) => Some(FailureRecord {
                instance,
                detail: format!("sfl(A+K) = {} < sfl(A+K') = {}", r.sfl_k, r.sfl_kprime),
            }),
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });

    let n2 = cfg.samples.comparison_hamiltonian;
    let sweep_opts = SweepOptions {
        tol: cfg.tol,
        lambda_samples: 512,
        refine_res: 1e-8,
    };
    let ham_failures = run_instances(n2, |idx| {
        let seed = mix(cfg.seed, 14, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = rng.gen_range(1.2..2.8) * PI * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let instance = json!({"suite": "comparison_hamiltonian", "seed": seed, "omega": omega});
        let base = HamiltonianFamily::new(
            1,
            move |l, _t| SymMatrix::identity(2).scaled(omega * l),
            span_e1_path(),
            span_e1_path(),
        )
        .unwrap()
        .with_grid(cfg.grid.min(320))
        .with_deriv(move |_, _| SymMatrix::identity(2).scaled(omega));

        let e = random_sym_matrix(&mut rng, 2, 0.05);
        let (amp, freq, phase) = (rng.gen_range(0.3..1.0), rng.gen_range(0.5..1.5), rng.gen_range(0.0..2.0));
        let (e1m, e2m) = (e.clone(), e.clone());
        let k = TimeVaryingPerturbation::new(move |l, t| {
            e1m.scaled(amp * (PI * (freq * l + phase)).sin() * (1.0 + 0.3 * (PI * t).sin()))
        })
        .with_deriv(move |l, t| {
            e2m.scaled(amp * PI * freq * (PI * (freq * l + phase)).cos() * (1.0 + 0.3 * (PI * t).sin()))
        });

        let scale0 = rng.gen_range(0.05..0.15);
        let scale1 = rng.gen_range(0.05..0.15);
        let m0 = random_psd_matrix(&mut rng, 2, scale0);
        let m1 = random_psd_matrix(&mut rng, 2, scale1);
        let (c0, d0) = (rng.gen_range(0.5..1.0), rng.gen_range(-0.4..0.4));
        let (c1, d1) = (rng.gen_range(0.5..1.0), rng.gen_range(-0.4..0.4));
        let (e3, e4, m0b, m1b) = (e.clone(), e.clone(), m0.clone(), m1.clone());
        let kprime = TimeVaryingPerturbation::new(move |l, t| {
            e3.scaled(amp * (PI * (freq * l + phase)).sin() * (1.0 + 0.3 * (PI * t).sin()))
                .add(&m0b.scaled((1.0 - l) * (c0 + d0 * (PI * t).sin())))
                .add(&m1b.scaled(-l * (c1 + d1 * (PI * t).sin())))
        })
        .with_deriv(move |l, t| {
            e4.scaled(amp * PI * freq * (PI * (freq * l + phase)).cos() * (1.0 + 0.3 * (PI * t).sin()))
                .add(&m0.scaled(-(c0 + d0 * (PI * t).sin())))
                .add(&m1.scaled(-(c1 + d1 * (PI * t).sin())))
        });

        match comparison_check_hamiltonian(&base, &k, &kprime, &sweep_opts) {
            Ok(r) if r.holds => None,
            Ok(r) => Some(FailureRecord {
                instance,
                detail: format!("sfl(A+K) = {} < sfl(A+K') = {}", r.sfl_k, r.sfl_kprime),
            }),
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });

    let mut failures = matrix_failures;
    failures.extend(ham_failures);
    SuiteReport::assemble("comparison", n1 + n2, failures, BTreeMap::new())
}

/// Criterion 8: the solution-count lower bound `N ≥ ⌈|μ_Mas(Λ1,Λ2)|/n⌉` for
/// rotating boundary pairs under the sign hypotheses.
pub fn suite_count_bound(cfg: &RunConfig) -> SuiteReport {
    let n = cfg.samples.count_bound.max(1);
    let sweep_opts = SweepOptions {
        tol: cfg.tol,
        lambda_samples: 768,
        refine_res: 1e-8,
    };
    let grid = cfg.grid.min(320);

    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 15, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Instance 0 is the pinned headline: winding 3 against a fixed line.
        let inst = if idx == 0 {
            headline_rotation_boundary()
        } else {
            generate_rotation_boundary(seed, 1 + (idx % 2), 3)
        };
        let instance = json!({
            "suite": "count_bound", "seed": seed, "n": inst.n,
            "mu_expected": inst.mu_expected, "headline": idx == 0
        });
        // Sign hypotheses: μ > 0 needs S_0 ≤ 0 ≤ S_1 and μ < 0 the reverse.
        let sign = if inst.mu_expected >= 0 { 1.0 } else { -1.0 };
        let eps = if idx == 0 { 0.05 } else { rng.gen_range(0.02..0.08) };
        let two_n = 2 * inst.n;
        let fam = HamiltonianFamily::new(
            inst.n,
            move |l, t| {
                SymMatrix::identity(two_n).scaled(sign * (l - 0.5) * eps * (1.0 + 0.5 * (PI * t).sin()))
            },
            inst.bc1.clone(),
            inst.bc2.clone(),
        )
        .unwrap()
        .with_grid(grid);

        match sweep_nontrivial(&fam, &sweep_opts) {
            Ok(r) => {
                if r.maslov_pair != Some(inst.mu_expected) {
                    return Some(FailureRecord {
                        instance,
                        detail: format!(
                            "pair index {:?} != expected {}",
                            r.maslov_pair, inst.mu_expected
                        ),
                    });
                }
                match r.bound_satisfied {
                    Some(true) => {
                        if idx == 0 && r.count < 3 {
                            Some(FailureRecord {
                                instance,
                                detail: format!("headline count {} < 3", r.count),
                            })
                        } else {
                            None
                        }
                    }
                    _ => Some(FailureRecord {
                        instance,
                        detail: format!("count {} below bound {:?}", r.count, r.bound),
                    }),
                }
            }
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });
    SuiteReport::assemble("count_bound", n, failures, BTreeMap::new())
}

fn headline_rotation_boundary() -> crate::generate::RotationBoundaryInstance {
    use nalgebra::DMatrix;
    let bc1 = LagrangianPath::new(1, |l| {
        let theta = 3.0 * PI * l + 0.4 * PI;
        LagrangianFrame::new(
            DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
            &Tolerances::default(),
        )
        .unwrap()
    });
    crate::generate::RotationBoundaryInstance {
        bc1,
        bc2: span_e1_path(),
        n: 1,
        mu_expected: 3,
        seed: 0,
    }
}

/// Criterion 9: the bounded transform preserves the spectral flow pointwise.
pub fn suite_riesz(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(8);
    let opts = cfg.sfl_opts();
    let n = cfg.samples.riesz;
    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 16, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let budget = rng.gen_range(0..=3);
        let g = generate_operator_path(seed, dim, budget);
        let instance = json!({"suite": "riesz_invariance", "seed": seed, "dim": dim, "budget": budget});
        let transformed = riesz_path(&g.path);
        match (
            sfl_partition(&g.path, &opts),
            sfl_partition(&transformed, &opts),
        ) {
            (Ok(a), Ok(b)) if a.value == b.value && a.value == g.oracle_sfl => None,
            (Ok(a), Ok(b)) => Some(FailureRecord {
                instance,
                detail: format!(
                    "original {}, transformed {}, oracle {}",
                    a.value, b.value, g.oracle_sfl
                ),
            }),
            _ => Some(FailureRecord { instance, detail: "evaluation failed".into() }),
        }
    });
    SuiteReport::assemble("riesz_invariance", n, failures, BTreeMap::new())
}

/// Criterion 10: `|sfl| ≤ dim ker` at a single isolated crossing.
pub fn suite_isolated(cfg: &RunConfig) -> SuiteReport {
    let dims = cfg.dims_capped(6);
    let opts = cfg.sfl_opts();
    let n = cfg.samples.isolated;
    let failures = run_instances(n, |idx| {
        let seed = mix(cfg.seed, 17, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = dims[rng.gen_range(0..dims.len())];
        let kdim = rng.gen_range(1..=dim.min(3));
        let inst = generate_isolated_crossing(seed, dim, kdim);
        let instance = json!({"suite": "isolated_bound", "seed": seed, "dim": dim, "kernel_dim": kdim});
        match isolated_bound_check_path(&inst.path, inst.lambda_star, &opts) {
            Ok(r) if r.holds && r.kernel_dim == kdim && r.sfl_abs == inst.oracle_sfl.abs() => None,
            Ok(r) => Some(FailureRecord {
                instance,
                detail: format!(
                    "|sfl| {} (oracle {}), kernel {} (expected {kdim}), holds {}",
                    r.sfl_abs,
                    inst.oracle_sfl.abs(),
                    r.kernel_dim,
                    r.holds
                ),
            }),
            Err(e) => Some(FailureRecord { instance, detail: e.to_string() }),
        }
    });
    SuiteReport::assemble("isolated_bound", n, failures, BTreeMap::new())
}

/// Everything the `axioms` run produces: the suite reports (deterministic,
/// serialisable) and wall-clock timings (not part of the reports).
#[derive(Debug, Clone)]
pub struct AxiomOutcome {
    pub reports: Vec<SuiteReport>,
    pub timings: Vec<(String, f64)>,
}

impl AxiomOutcome {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed())
    }

    pub fn timing(&self, suite: &str) -> Option<f64> {
        self.timings
            .iter()
            .find(|(s, _)| s == suite)
            .map(|(_, t)| *t)
    }
}

/// Run every suite with the default spectral-flow backend.
pub fn run_axiom_suite(cfg: &RunConfig) -> AxiomOutcome {
    let opts = cfg.sfl_opts();
    let backend = move |p: &OperatorPath| sfl_partition(p, &opts).map(|r| r.value);
    run_axiom_suite_with(cfg, &backend)
}

/// Run every suite, with the axiom group driven by the given backend. Used
/// by the mutation smoke test to confirm that a broken spectral flow flips
/// the verdicts.
pub fn run_axiom_suite_with(cfg: &RunConfig, backend: SflBackend) -> AxiomOutcome {
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut timed = |name: &str, f: &mut dyn FnMut() -> Vec<SuiteReport>| {
        let start = Instant::now();
        let out = f();
        timings.push((name.to_string(), start.elapsed().as_secs_f64()));
        reports.extend(out);
    };

    timed("method_agreement", &mut || {
        vec![suite_method_agreement(cfg)]
    });
    timed("homotopy_formula", &mut || vec![suite_homotopy(cfg)]);
    timed("axioms", &mut || suites_axioms(cfg, backend));
    timed("gap_metric", &mut || vec![suite_gap(cfg)]);
    timed("sfl_maslov_bridge", &mut || vec![suite_maslov_bridge(cfg)]);
    timed("hamiltonian_rotation", &mut || {
        vec![suite_hamiltonian_rotation(cfg)]
    });
    timed("comparison", &mut || vec![suite_comparison(cfg)]);
    timed("count_bound", &mut || vec![suite_count_bound(cfg)]);
    timed("riesz_invariance", &mut || vec![suite_riesz(cfg)]);
    timed("isolated_bound", &mut || vec![suite_isolated(cfg)]);

    AxiomOutcome { reports, timings }
}

/// One acceptance-criterion line: number, label and verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionLine {
    pub number: usize,
    pub label: String,
    pub pass: bool,
}

/// Map suite verdicts onto the ten acceptance criteria.
pub fn criterion_summary(outcome: &AxiomOutcome) -> Vec<CriterionLine> {
    let passed = |name: &str| {
        outcome
            .reports
            .iter()
            .find(|r| r.suite == name)
            .map(|r| r.passed())
            .unwrap_or(false)
    };
    let axioms_pass = [
        "axiom_concatenation",
        "axiom_zero_invertible",
        "constant_kernel_zero",
        "axiom_normalization",
        "axiom_normalization_np",
        "reversal_antisymmetry",
    ]
    .iter()
    .all(|s| passed(s));
    let agreement_in_time = passed("method_agreement")
        && outcome
            .timing("method_agreement")
            .map(|t| t <= 120.0)
            .unwrap_or(false);

    vec![
        CriterionLine {
            number: 1,
            label: "method agreement (partition = crossings, within 120 s)".into(),
            pass: agreement_in_time,
        },
        CriterionLine {
            number: 2,
            label: "homotopy formula with boundary-mode corollaries".into(),
            pass: passed("homotopy_formula"),
        },
        CriterionLine {
            number: 3,
            label: "axioms: concatenation, vanishing, constant kernel, normalisation, reversal"
                .into(),
            pass: axioms_pass,
        },
        CriterionLine {
            number: 4,
            label: "gap metric identity, estimate and scalar closed form".into(),
            pass: passed("gap_metric"),
        },
        CriterionLine {
            number: 5,
            label: "spectral flow = Maslov index of graphs".into(),
            pass: passed("sfl_maslov_bridge"),
        },
        CriterionLine {
            number: 6,
            label: "Hamiltonian rotation instance (flow 3, crossings, drift)".into(),
            pass: passed("hamiltonian_rotation"),
        },
        CriterionLine {
            number: 7,
            label: "comparison principle (matrix and Hamiltonian models)".into(),
            pass: passed("comparison"),
        },
        CriterionLine {
            number: 8,
            label: "solution-count bound from the boundary Maslov index".into(),
            pass: passed("count_bound"),
        },
        CriterionLine {
            number: 9,
            label: "bounded-transform invariance of the flow".into(),
            pass: passed("riesz_invariance"),
        },
        CriterionLine {
            number: 10,
            label: "isolated-crossing bound |sfl| <= dim ker".into(),
            pass: passed("isolated_bound"),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> RunConfig {
        RunConfig {
            seed: 7,
            dims: vec![2, 3, 4],
            samples: SampleCounts::default().scaled(0.05),
            tol: Tolerances::default(),
            grid: 200,
        }
    }

    #[test]
    fn axiom_suites_pass_with_default_backend() {
        let cfg = tiny_cfg();
        let opts = cfg.sfl_opts();
        let backend = move |p: &OperatorPath| sfl_partition(p, &opts).map(|r| r.value);
        let reports = suites_axioms(&cfg, &backend);
        for r in &reports {
            assert!(r.passed(), "{} failed: {:?}", r.suite, r.failures.first());
        }
    }

    #[test]
    fn sign_flipped_backend_is_caught() {
        let cfg = tiny_cfg();
        let opts = cfg.sfl_opts();
        let broken = move |p: &OperatorPath| sfl_partition(p, &opts).map(|r| -r.value);
        let reports = suites_axioms(&cfg, &broken);
        // The rank-one normalisation instance alone pins the sign.
        let np = reports
            .iter()
            .find(|r| r.suite == "axiom_normalization_np")
            .unwrap();
        assert!(!np.passed());
        assert!(!np.failures.is_empty());
    }

    #[test]
    fn small_run_of_selected_suites() {
        let cfg = tiny_cfg();
        for report in [
            suite_method_agreement(&cfg),
            suite_gap(&cfg),
            suite_riesz(&cfg),
            suite_isolated(&cfg),
        ] {
            assert!(
                report.passed(),
                "{} failed: {:?}",
                report.suite,
                report.failures.first()
            );
        }
    }
}
