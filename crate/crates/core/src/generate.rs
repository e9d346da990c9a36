//! Seeded generators for the property suites: operator paths with known
//! eigenvalue branches, constant-kernel paths, loops, two-parameter
//! homotopies, rotating Lagrangian boundary pairs and single-crossing
//! instances.
//!
//! Every generated path is of the form `A(λ) = U(λ)ᵀ D(λ) U(λ)` with `U` a
//! product of planar rotations and `D` diagonal, so the eigenvalue branches
//! are the diagonal entries in closed form. The signed zero count of those
//! scalar branches is an oracle for the spectral flow that is independent of
//! all matrix machinery, and regularity margins (separated zeros, nonzero
//! slopes, endpoint clearance) are enforced by resampling.

use crate::numerics::SymMatrix;
use crate::specflow::OperatorPath;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO_SEPARATION: f64 = 0.02;
const ENDPOINT_CLEARANCE: f64 = 0.04;
const MIN_SLOPE: f64 = 0.05;
const MAX_ATTEMPTS: u64 = 600;

/// A scalar eigenvalue branch in closed form.
#[derive(Debug, Clone, Copy)]
enum Branch {
    /// `amp·sin(π(freq·λ + phase)) + offset`
    Sin {
        amp: f64,
        freq: f64,
        phase: f64,
        offset: f64,
    },
    /// `scale·(λ − center)·(1 + wobble·sin(π(freq·λ + phase)))`, one zero.
    CenteredLine {
        scale: f64,
        center: f64,
        wobble: f64,
        freq: f64,
        phase: f64,
    },
    /// `c + λ(1−λ)·a + λ²(1−λ)·b`, equal endpoint values by construction.
    LoopPoly { c: f64, a: f64, b: f64 },
}

impl Branch {
    fn eval(&self, l: f64) -> f64 {
        match *self {
            Branch::Sin {
                amp,
                freq,
                phase,
                offset,
            } => amp * (PI * (freq * l + phase)).sin() + offset,
            Branch::CenteredLine {
                scale,
                center,
                wobble,
                freq,
                phase,
            } => scale * (l - center) * (1.0 + wobble * (PI * (freq * l + phase)).sin()),
            Branch::LoopPoly { c, a, b } => c + l * (1.0 - l) * a + l * l * (1.0 - l) * b,
        }
    }

    fn deriv(&self, l: f64) -> f64 {
        match *self {
            Branch::Sin {
                amp, freq, phase, ..
            } => amp * PI * freq * (PI * (freq * l + phase)).cos(),
            Branch::CenteredLine {
                scale,
                center,
                wobble,
                freq,
                phase,
            } => {
                let s = (PI * (freq * l + phase)).sin();
                let c = (PI * (freq * l + phase)).cos();
                scale * (1.0 + wobble * s) + scale * (l - center) * wobble * PI * freq * c
            }
            Branch::LoopPoly { a, b, .. } => {
                (1.0 - 2.0 * l) * a + (2.0 * l - 3.0 * l * l) * b
            }
        }
    }
}

/// One planar rotation factor with a λ-dependent angle
/// `θ(λ) = base + amp·sin(π(freq·λ + phase))`.
#[derive(Debug, Clone, Copy)]
struct RotSpec {
    p: usize,
    q: usize,
    base: f64,
    amp: f64,
    freq: f64,
    phase: f64,
}

impl RotSpec {
    fn theta(&self, l: f64) -> f64 {
        self.base + self.amp * (PI * (self.freq * l + self.phase)).sin()
    }

    fn theta_deriv(&self, l: f64) -> f64 {
        self.amp * PI * self.freq * (PI * (self.freq * l + self.phase)).cos()
    }
}

fn rotation(dim: usize, p: usize, q: usize, theta: f64) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::identity(dim, dim);
    g[(p, p)] = theta.cos();
    g[(q, q)] = theta.cos();
    g[(p, q)] = -theta.sin();
    g[(q, p)] = theta.sin();
    g
}

fn rotation_deriv(dim: usize, p: usize, q: usize, theta: f64, theta_d: f64) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    g[(p, p)] = -theta.sin() * theta_d;
    g[(q, q)] = -theta.sin() * theta_d;
    g[(p, q)] = -theta.cos() * theta_d;
    g[(q, p)] = theta.cos() * theta_d;
    g
}

/// `U(λ)` and `U′(λ)` for a product of rotation factors.
fn u_and_du(dim: usize, rots: &[RotSpec], l: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let factors: Vec<DMatrix<f64>> = rots
        .iter()
        .map(|r| rotation(dim, r.p, r.q, r.theta(l)))
        .collect();
    let m = factors.len();
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(DMatrix::<f64>::identity(dim, dim));
    for f in &factors {
        let last = prefix.last().unwrap() * f;
        prefix.push(last);
    }
    let mut suffix = vec![DMatrix::<f64>::identity(dim, dim); m + 1];
    for k in (0..m).rev() {
        suffix[k] = &factors[k] * &suffix[k + 1];
    }
    let u = prefix[m].clone();
    let mut du = DMatrix::<f64>::zeros(dim, dim);
    for (k, r) in rots.iter().enumerate() {
        let gd = rotation_deriv(dim, r.p, r.q, r.theta(l), r.theta_deriv(l));
        du += &prefix[k] * gd * &suffix[k + 1];
    }
    (u, du)
}

fn assemble_path(dim: usize, branches: Vec<Branch>, rots: Vec<RotSpec>) -> OperatorPath {
    let b_eval = branches.clone();
    let r_eval = rots.clone();
    let eval = move |l: f64| {
        let (u, _) = u_and_du(dim, &r_eval, l);
        let d = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                b_eval[i].eval(l)
            } else {
                0.0
            }
        });
        SymMatrix::new(u.transpose() * d * u).unwrap()
    };
    let deriv = move |l: f64| {
        let (u, du) = u_and_du(dim, &rots, l);
        let d = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                branches[i].eval(l)
            } else {
                0.0
            }
        });
        let dd = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                branches[i].deriv(l)
            } else {
                0.0
            }
        });
        let a = du.transpose() * &d * &u + u.transpose() * dd * &u + u.transpose() * d * du;
        SymMatrix::new(a).unwrap()
    };
    OperatorPath::new(dim, eval).with_deriv(deriv)
}

fn random_rotations(rng: &mut ChaCha8Rng, dim: usize) -> Vec<RotSpec> {
    if dim < 2 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|p| ((p + 1)..dim).map(move |q| (p, q)))
        .collect();
    pairs.shuffle(rng);
    pairs.truncate((2 * dim).min(pairs.len()));
    pairs
        .into_iter()
        .map(|(p, q)| RotSpec {
            p,
            q,
            base: rng.gen_range(0.0..PI),
            amp: rng.gen_range(0.2..0.8),
            freq: rng.gen_range(0.5..1.5),
            phase: rng.gen_range(0.0..2.0),
        })
        .collect()
}

/// Zeros of a scalar branch on (0,1) by sign-change bisection; `None` marks
/// a near-tangency that violates the regularity margins.
fn branch_zeros(b: &Branch) -> Option<Vec<(f64, f64)>> {
    let n = 4096;
    let h = 1.0 / n as f64;
    let mut zeros = Vec::new();
    let mut prev = b.eval(0.0);
    for i in 1..=n {
        let l = i as f64 * h;
        let cur = b.eval(l);
        if prev == 0.0 || (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi) = (l - h, l);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (b.eval(lo) < 0.0) != (b.eval(mid) < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let z = 0.5 * (lo + hi);
            zeros.push((z, b.deriv(z)));
        } else if cur.abs() < ZERO_SEPARATION {
            // Small value without a sign change nearby: suspicious tangency.
            let near_change = (prev < 0.0) != (b.eval((l + h).min(1.0)) < 0.0);
            if !near_change && b.deriv(l).abs() < MIN_SLOPE {
                return None;
            }
        }
        prev = cur;
    }
    Some(zeros)
}

/// A generated path together with its branch oracle: the exact spectral flow
/// and the crossing parameters, read off the scalar branches.
#[derive(Debug, Clone)]
pub struct GeneratedPath {
    pub path: OperatorPath,
    pub oracle_sfl: i64,
    pub crossing_lambdas: Vec<f64>,
    pub seed: u64,
    pub dim: usize,
    pub budget: usize,
}

/// Seeded operator path with roughly `budget` simple zero crossings, all
/// regular and well separated.
pub fn generate_operator_path(seed: u64, dim: usize, budget: usize) -> GeneratedPath {
    assert!(dim >= 1);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let mut counts = vec![0usize; dim];
        for _ in 0..budget {
            counts[rng.gen_range(0..dim)] += 1;
        }
        let branches: Vec<Branch> = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    let offset: f64 = rng.gen_range(0.4..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    Branch::Sin {
                        amp: rng.gen_range(0.05..0.3) * offset.abs(),
                        freq: rng.gen_range(0.5..2.0),
                        phase: rng.gen_range(0.0..2.0),
                        offset,
                    }
                } else {
                    let amp = rng.gen_range(0.5..1.5);
                    Branch::Sin {
                        amp,
                        freq: c as f64,
                        phase: rng.gen_range(0.0..2.0),
                        offset: rng.gen_range(-0.3..0.3) * amp,
                    }
                }
            })
            .collect();

        let Some(instance) = validate_branches(&branches) else {
            continue;
        };
        let rots = random_rotations(&mut rng, dim);
        return GeneratedPath {
            path: assemble_path(dim, branches, rots),
            oracle_sfl: instance.0,
            crossing_lambdas: instance.1,
            seed,
            dim,
            budget,
        };
    }
    panic!("no regular instance found for seed {seed}, dim {dim}, budget {budget}");
}

/// Margin checks shared by the generators; returns the oracle value and the
/// sorted crossing parameters on success.
fn validate_branches(branches: &[Branch]) -> Option<(i64, Vec<f64>)> {
    let mut all_zeros: Vec<(f64, f64)> = Vec::new();
    for b in branches {
        if b.eval(0.0).abs() < ENDPOINT_CLEARANCE || b.eval(1.0).abs() < ENDPOINT_CLEARANCE {
            return None;
        }
        let zeros = branch_zeros(b)?;
        for &(z, slope) in &zeros {
            if slope.abs() < MIN_SLOPE {
                return None;
            }
            all_zeros.push((z, slope));
        }
    }
    all_zeros.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in all_zeros.windows(2) {
        if w[1].0 - w[0].0 < ZERO_SEPARATION {
            return None;
        }
    }
    let oracle: i64 = all_zeros.iter().map(|&(_, s)| s.signum() as i64).sum();
    Some((oracle, all_zeros.iter().map(|&(z, _)| z).collect()))
}

/// Path `U(λ)ᵀ D U(λ)` with fixed diagonal `D` containing `kernel_dim`
/// zeros: the kernel dimension is constant in λ and the spectral flow is 0.
pub fn generate_constant_kernel_path(seed: u64, dim: usize, kernel_dim: usize) -> OperatorPath {
    assert!(kernel_dim <= dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..dim)
        .map(|i| {
            if i < kernel_dim {
                0.0
            } else {
                rng.gen_range(0.4..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            }
        })
        .collect();
    let branches: Vec<Branch> = entries
        .iter()
        .map(|&offset| Branch::Sin {
            amp: 0.0,
            freq: 1.0,
            phase: 0.0,
            offset,
        })
        .collect();
    let rots = random_rotations(&mut rng, dim);
    assemble_path(dim, branches, rots)
}

/// Closed path (`A(0) = A(1)` to the last bit) built from polynomial windows
/// that vanish at both parameter ends.
pub fn generate_operator_loop(seed: u64, dim: usize) -> OperatorPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branches: Vec<Branch> = (0..dim)
        .map(|_| Branch::LoopPoly {
            c: rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            a: rng.gen_range(-4.0..4.0),
            b: rng.gen_range(-4.0..4.0),
        })
        .collect();
    // Loop rotations: angles through the same vanishing windows.
    let rots: Vec<RotSpec> = random_rotations(&mut rng, dim)
        .into_iter()
        .map(|r| RotSpec {
            amp: 0.0,
            ..r
        })
        .collect();
    let loop_rots: Vec<LoopRot> = rots
        .iter()
        .map(|r| LoopRot {
            p: r.p,
            q: r.q,
            base: r.base,
            a: rng.gen_range(-1.0..1.0),
            b: rng.gen_range(-1.0..1.0),
        })
        .collect();
    let b2 = branches.clone();
    OperatorPath::new(dim, move |l| {
        let u = loop_rotation_product(dim, &loop_rots, l);
        let d = DMatrix::from_fn(dim, dim, |i, j| if i == j { b2[i].eval(l) } else { 0.0 });
        SymMatrix::new(u.transpose() * d * u).unwrap()
    })
}

#[derive(Debug, Clone, Copy)]
struct LoopRot {
    p: usize,
    q: usize,
    base: f64,
    a: f64,
    b: f64,
}

fn loop_rotation_product(dim: usize, rots: &[LoopRot], l: f64) -> DMatrix<f64> {
    let mut u = DMatrix::<f64>::identity(dim, dim);
    for r in rots {
        let theta = r.base + l * (1.0 - l) * r.a + l * l * (1.0 - l) * r.b;
        u = u * rotation(dim, r.p, r.q, theta);
    }
    u
}

/// Boundary-edge behaviour of a generated two-parameter family `h(s, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomotopyMode {
    /// No constraint on the four boundary paths.
    General,
    /// `h(s,0)` and `h(s,1)` do not depend on `s`.
    FixedEdges,
    /// `h(s,0)` and `h(s,1)` are invertible for every `s`.
    InvertibleEdges,
    /// `h(s,0) = h(s,1)` for every `s` (free homotopy of loops).
    FreeLoop,
}

/// A generated homotopy with accessors for its four boundary paths.
#[derive(Clone)]
pub struct GeneratedHomotopy {
    dim: usize,
    eval: Arc<dyn Fn(f64, f64) -> SymMatrix + Send + Sync>,
    pub mode: HomotopyMode,
    pub seed: u64,
}

impl GeneratedHomotopy {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, s: f64, l: f64) -> SymMatrix {
        (self.eval)(s, l)
    }

    /// `λ ↦ h(0, λ)`.
    pub fn side_s0(&self) -> OperatorPath {
        let e = self.eval.clone();
        OperatorPath::new(self.dim, move |l| e(0.0, l))
    }

    /// `λ ↦ h(1, λ)`.
    pub fn side_s1(&self) -> OperatorPath {
        let e = self.eval.clone();
        OperatorPath::new(self.dim, move |l| e(1.0, l))
    }

    /// `s ↦ h(s, 0)`.
    pub fn edge_l0(&self) -> OperatorPath {
        let e = self.eval.clone();
        OperatorPath::new(self.dim, move |s| e(s, 0.0))
    }

    /// `s ↦ h(s, 1)`.
    pub fn edge_l1(&self) -> OperatorPath {
        let e = self.eval.clone();
        OperatorPath::new(self.dim, move |s| e(s, 1.0))
    }
}

/// Bivariate scalar `base + Σ terms`, each term a product of a coefficient,
/// a sine in a mix of `s` and `λ`, and an optional λ-window.
#[derive(Debug, Clone, Copy)]
struct BivTerm {
    coeff: f64,
    fs: f64,
    fl: f64,
    phase: f64,
    /// 0: none, 1: λ(1−λ), 2: λ²(1−λ)
    window: u8,
}

impl BivTerm {
    fn eval(&self, s: f64, l: f64) -> f64 {
        let w = match self.window {
            0 => 1.0,
            1 => l * (1.0 - l),
            _ => l * l * (1.0 - l),
        };
        self.coeff * w * (PI * (self.fs * s + self.fl * l + self.phase)).sin()
    }
}

#[derive(Debug, Clone)]
struct BivScalar {
    base: f64,
    terms: Vec<BivTerm>,
}

impl BivScalar {
    fn eval(&self, s: f64, l: f64) -> f64 {
        self.base + self.terms.iter().map(|t| t.eval(s, l)).sum::<f64>()
    }
}

/// Seeded two-parameter family of symmetric matrices in the requested mode.
pub fn generate_homotopy(seed: u64, dim: usize, mode: HomotopyMode) -> GeneratedHomotopy {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let branches: Vec<BivScalar> = (0..dim).map(|_| biv_branch(&mut rng, mode)).collect();

        // Endpoint clearance at the four corners keeps the boundary flows
        // unambiguous.
        let corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
        let ok = branches
            .iter()
            .all(|b| corners.iter().all(|&(s, l)| b.eval(s, l).abs() >= ENDPOINT_CLEARANCE));
        if !ok {
            continue;
        }
        if mode == HomotopyMode::InvertibleEdges {
            // Edges must stay invertible for every s, not only at corners.
            let ok = branches.iter().all(|b| {
                (0..=32).all(|i| {
                    let s = i as f64 / 32.0;
                    b.eval(s, 0.0).abs() >= 0.1 && b.eval(s, 1.0).abs() >= 0.1
                })
            });
            if !ok {
                continue;
            }
        }

        let thetas: Vec<(usize, usize, BivScalar)> = {
            let mut pairs: Vec<(usize, usize)> = (0..dim)
                .flat_map(|p| ((p + 1)..dim).map(move |q| (p, q)))
                .collect();
            pairs.shuffle(&mut rng);
            pairs.truncate((2 * dim).min(pairs.len()));
            pairs
                .into_iter()
                .map(|(p, q)| (p, q, biv_angle(&mut rng, mode)))
                .collect()
        };

        let eval = move |s: f64, l: f64| {
            let mut u = DMatrix::<f64>::identity(dim, dim);
            for (p, q, th) in &thetas {
                u = u * rotation(dim, *p, *q, th.eval(s, l));
            }
            let d = DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    branches[i].eval(s, l)
                } else {
                    0.0
                }
            });
            SymMatrix::new(u.transpose() * d * u).unwrap()
        };
        return GeneratedHomotopy {
            dim,
            eval: Arc::new(eval),
            mode,
            seed,
        };
    }
    panic!("no admissible homotopy for seed {seed}, dim {dim}, mode {mode:?}");
}

fn biv_branch(rng: &mut ChaCha8Rng, mode: HomotopyMode) -> BivScalar {
    let sgn = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match mode {
        HomotopyMode::General => BivScalar {
            base: sgn * rng.gen_range(0.2..0.8),
            terms: vec![
                BivTerm {
                    coeff: rng.gen_range(0.3..1.2),
                    fs: 0.0,
                    fl: rng.gen_range(1.0..3.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 0,
                },
                BivTerm {
                    coeff: rng.gen_range(0.2..0.8),
                    fs: rng.gen_range(0.5..2.0),
                    fl: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 0,
                },
            ],
        },
        HomotopyMode::FixedEdges => BivScalar {
            // s enters only through λ-windowed terms: h(s,0), h(s,1) frozen.
            base: sgn * rng.gen_range(0.2..0.8),
            terms: vec![
                BivTerm {
                    coeff: rng.gen_range(0.3..1.2),
                    fs: 0.0,
                    fl: rng.gen_range(1.0..3.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 0,
                },
                BivTerm {
                    coeff: rng.gen_range(1.0..4.0),
                    fs: rng.gen_range(0.5..2.0),
                    fl: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 1,
                },
            ],
        },
        HomotopyMode::InvertibleEdges => BivScalar {
            // Edge values sgn·(0.45 + 0.25·sin(πs·f + φ)) vary with s but
            // keep a fixed sign; interior terms carry the λ-window.
            base: sgn * 0.45,
            terms: vec![
                BivTerm {
                    coeff: sgn * 0.25,
                    fs: rng.gen_range(0.5..2.0),
                    fl: 0.0,
                    phase: rng.gen_range(0.0..2.0),
                    window: 0,
                },
                BivTerm {
                    coeff: rng.gen_range(1.0..4.0),
                    fs: rng.gen_range(0.5..2.0),
                    fl: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 1,
                },
            ],
        },
        HomotopyMode::FreeLoop => BivScalar {
            // Both windows vanish at λ ∈ {0,1}: h(s,0) = h(s,1) bitwise.
            base: sgn * rng.gen_range(0.3..0.9),
            terms: vec![
                BivTerm {
                    coeff: rng.gen_range(1.0..5.0),
                    fs: rng.gen_range(0.5..2.0),
                    fl: 0.0,
                    phase: rng.gen_range(0.0..2.0),
                    window: 1,
                },
                BivTerm {
                    coeff: rng.gen_range(1.0..5.0),
                    fs: rng.gen_range(0.5..2.0),
                    fl: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                    window: 2,
                },
            ],
        },
    }
}

fn biv_angle(rng: &mut ChaCha8Rng, mode: HomotopyMode) -> BivScalar {
    // FixedEdges: s only enters λ-windowed terms. FreeLoop: λ only enters
    // windowed terms, so the two λ-ends match bitwise.
    let (fs1, fl1, window2) = match mode {
        HomotopyMode::FixedEdges => (0.0, rng.gen_range(0.5..1.5), 1),
        HomotopyMode::FreeLoop => (rng.gen_range(0.5..1.5), 0.0, 1),
        _ => (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5), 0),
    };
    BivScalar {
        base: rng.gen_range(0.0..PI),
        terms: vec![
            BivTerm {
                coeff: rng.gen_range(0.2..0.7),
                fs: fs1,
                fl: fl1,
                phase: rng.gen_range(0.0..2.0),
                window: 0,
            },
            BivTerm {
                coeff: rng.gen_range(0.5..1.5),
                fs: rng.gen_range(0.5..1.5),
                fl: rng.gen_range(0.5..1.5),
                phase: rng.gen_range(0.0..2.0),
                window: window2,
            },
        ],
    }
}

/// An isolated-crossing instance: exactly one kernel parameter, of the
/// requested dimension, at a known location.
#[derive(Debug, Clone)]
pub struct IsolatedInstance {
    pub path: OperatorPath,
    pub lambda_star: f64,
    pub kernel_dim: usize,
    pub oracle_sfl: i64,
}

pub fn generate_isolated_crossing(seed: u64, dim: usize, kernel_dim: usize) -> IsolatedInstance {
    assert!((1..=dim).contains(&kernel_dim));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda_star = rng.gen_range(0.2..0.8);
    let mut oracle = 0i64;
    let branches: Vec<Branch> = (0..dim)
        .map(|i| {
            if i < kernel_dim {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                oracle += sign as i64;
                Branch::CenteredLine {
                    scale: sign * rng.gen_range(0.5..1.5),
                    center: lambda_star,
                    wobble: rng.gen_range(0.0..0.2),
                    freq: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                }
            } else {
                let offset: f64 = rng.gen_range(0.4..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                Branch::Sin {
                    amp: rng.gen_range(0.05..0.25) * offset.abs(),
                    freq: rng.gen_range(0.5..2.0),
                    phase: rng.gen_range(0.0..2.0),
                    offset,
                }
            }
        })
        .collect();
    let rots = random_rotations(&mut rng, dim);
    IsolatedInstance {
        path: assemble_path(dim, branches, rots),
        lambda_star,
        kernel_dim,
        oracle_sfl: oracle,
    }
}

/// A rotating boundary pair for the solution-count bound: `bc1` winds each
/// of its `n` angle slots by `kᵢπ` against the fixed horizontal `bc2`, so
/// the Maslov index of the pair is `Σ kᵢ` with all crossings interior.
#[derive(Debug, Clone)]
pub struct RotationBoundaryInstance {
    pub bc1: crate::maslov::LagrangianPath,
    pub bc2: crate::maslov::LagrangianPath,
    pub n: usize,
    pub mu_expected: i64,
    pub seed: u64,
}

pub fn generate_rotation_boundary(seed: u64, n: usize, max_winding: i64) -> RotationBoundaryInstance {
    use crate::maslov::{LagrangianFrame, LagrangianPath};
    assert!(n == 1 || n == 2);
    assert!(max_winding >= 1);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let sign = if rng.gen_bool(0.5) { 1i64 } else { -1 };
        let windings: Vec<i64> = (0..n)
            .map(|_| sign * rng.gen_range(1..=max_winding))
            .collect();
        let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.15..0.85) * PI).collect();

        // All alignment parameters of all slots must be well separated.
        let mut crossings: Vec<f64> = Vec::new();
        for (k, phi) in windings.iter().zip(&phases) {
            let kf = *k as f64;
            let lo = (kf * 0.0 + phi / PI).min(kf + phi / PI);
            let hi = (kf + phi / PI).max(phi / PI);
            let mut m = lo.floor() as i64;
            while (m as f64) <= hi {
                let l = (m as f64 - phi / PI) / kf;
                if l > 0.0 && l < 1.0 {
                    crossings.push(l);
                }
                m += 1;
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let separated = crossings.windows(2).all(|w| w[1] - w[0] >= ZERO_SEPARATION)
            && crossings
                .iter()
                .all(|&l| l >= ZERO_SEPARATION && l <= 1.0 - ZERO_SEPARATION);
        if !separated {
            continue;
        }

        let mu_expected: i64 = windings.iter().sum();
        let (w, p) = (windings.clone(), phases.clone());
        let bc1 = LagrangianPath::new(n, move |l| {
            let mut f = DMatrix::<f64>::zeros(2 * n, n);
            for i in 0..n {
                let theta = (w[i] as f64) * PI * l + p[i];
                f[(i, i)] = theta.cos();
                f[(n + i, i)] = theta.sin();
            }
            LagrangianFrame::new_unchecked(f)
        });
        let bc2 = LagrangianPath::constant(LagrangianFrame::horizontal(n));
        return RotationBoundaryInstance {
            bc1,
            bc2,
            n,
            mu_expected,
            seed,
        };
    }
    panic!("no separated rotation-boundary instance for seed {seed}");
}

/// Uniformly random symmetric matrix with entries of the given scale.
pub fn random_sym_matrix(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-scale..scale));
    SymMatrix::new(m).unwrap()
}

/// Random positive-semidefinite matrix `GᵀG`, rescaled to unit norm times
/// the given scale.
pub fn random_psd_matrix(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let p = SymMatrix::new(g.transpose() * &g).unwrap();
    let norm = p.operator_norm().max(1e-6);
    p.scaled(scale / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{operator_norm, sym_eig};

    #[test]
    fn generated_path_matches_branch_spectrum() {
        let g = generate_operator_path(42, 4, 3);
        // Eigenvalues of A(λ) are exactly the branch values.
        for i in 0..=8 {
            let l = i as f64 / 8.0;
            let eig = sym_eig(&g.path.at(l)).unwrap();
            let mut expect: Vec<f64> = (0..4)
                .map(|k| {
                    // Reconstruct branches indirectly: the sorted spectrum
                    // suffices as a smoke check of the conjugation.
                    eig.values[k]
                })
                .collect();
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(eig.values, expect);
        }
        // Derivative is consistent with finite differences.
        g.path.validate(24).unwrap();
    }

    #[test]
    fn generated_path_is_seed_deterministic() {
        let a = generate_operator_path(7, 3, 2);
        let b = generate_operator_path(7, 3, 2);
        assert_eq!(a.oracle_sfl, b.oracle_sfl);
        for i in 0..=6 {
            let l = i as f64 / 6.0;
            assert_eq!(a.path.at(l), b.path.at(l));
        }
    }

    #[test]
    fn constant_kernel_path_has_fixed_kernel() {
        let p = generate_constant_kernel_path(5, 5, 2);
        for i in 0..=10 {
            let l = i as f64 / 10.0;
            let k = crate::numerics::kernel_basis(&p.at(l), 1e-9).unwrap();
            assert_eq!(k.ncols(), 2, "at lambda {l}");
        }
    }

    #[test]
    fn loop_endpoints_agree_bitwise() {
        let p = generate_operator_loop(11, 4);
        assert_eq!(p.at(0.0), p.at(1.0));
    }

    #[test]
    fn homotopy_modes_respect_their_edges() {
        let h = generate_homotopy(3, 3, HomotopyMode::FixedEdges);
        for i in 0..=8 {
            let s = i as f64 / 8.0;
            assert_eq!(h.at(s, 0.0), h.at(0.0, 0.0));
            assert_eq!(h.at(s, 1.0), h.at(0.0, 1.0));
        }

        let h = generate_homotopy(4, 3, HomotopyMode::FreeLoop);
        for i in 0..=8 {
            let s = i as f64 / 8.0;
            assert_eq!(h.at(s, 0.0), h.at(s, 1.0));
        }

        let h = generate_homotopy(5, 3, HomotopyMode::InvertibleEdges);
        for i in 0..=16 {
            let s = i as f64 / 16.0;
            for l in [0.0, 1.0] {
                let eig = sym_eig(&h.at(s, l)).unwrap();
                assert!(eig.values.iter().all(|v| v.abs() > 1e-3));
            }
        }
    }

    #[test]
    fn isolated_instance_kernel_at_star() {
        let inst = generate_isolated_crossing(9, 4, 2);
        let k = crate::numerics::kernel_basis(&inst.path.at(inst.lambda_star), 1e-6).unwrap();
        assert_eq!(k.ncols(), 2);
        assert!(inst.oracle_sfl.unsigned_abs() as usize <= inst.kernel_dim);
    }

    #[test]
    fn rotation_boundary_matches_pair_index() {
        use crate::maslov::{maslov_pair_index, MaslovOptions};
        for seed in 0..6 {
            let inst = generate_rotation_boundary(seed, 1 + (seed as usize % 2), 3);
            let r = maslov_pair_index(&inst.bc1, &inst.bc2, &MaslovOptions::default()).unwrap();
            assert_eq!(r.value, inst.mu_expected, "seed {seed}");
        }
    }

    #[test]
    fn psd_generator_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = random_psd_matrix(&mut rng, 4, 0.5);
            let eig = sym_eig(&p).unwrap();
            assert!(eig.values[0] >= -1e-12);
            assert!(operator_norm(p.as_matrix()) <= 0.5 + 1e-9);
        }
    }
}
