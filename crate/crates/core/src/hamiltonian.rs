//! Parametrised linear Hamiltonian boundary value problems
//! `J u′(t) + S_λ(t) u(t) = 0`, `u(0) ∈ Λ1(λ)`, `u(1) ∈ Λ2(λ)`:
//! fundamental solutions by a classical fourth-order one-step method,
//! kernel-dimension sweeps over λ, crossing-form spectral flow for constant
//! boundary conditions, the comparison principle, and the solution-count
//! lower bound driven by the Maslov index of the boundary pair.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::maslov::{maslov_pair_index, LagrangianPath, MaslovOptions};
use crate::numerics::{
    kernel_basis, operator_norm, orthonormalize, quadform_index, singular_values, sym_eig,
    SymMatrix,
};
use crate::scan::{locate_zero_dips, Dip, ScanConfig};
use crate::specflow::{
    sfl_partition, CrossingRecord, OperatorPath, SflDiagnostics, SflMethod, SflOptions, SflReport,
};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Hard ceiling on the symplectic drift of a fundamental solution; beyond
/// 100× the expected bound at the default grid the integration is rejected.
const DRIFT_LIMIT: f64 = 1e-6;

/// The standard symplectic matrix `((0, −I), (I, 0))` of R^{2n}.
/// `J² = −I` and `Jᵀ = −J` hold exactly by construction.
#[derive(Debug, Clone)]
pub struct SymplecticJ {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticJ {
    pub fn standard(n: usize) -> Self {
        let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = -1.0;
            m[(n + i, i)] = 1.0;
        }
        SymplecticJ { n, matrix: m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `J · M` by row rearrangement: rows `0..n` become `−M[n..2n]`, rows
    /// `n..2n` become `M[0..n]`.
    pub fn mul_left(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(2 * n, m.ncols(), |i, j| {
            if i < n {
                -m[(n + i, j)]
            } else {
                m[(i - n, j)]
            }
        })
    }
}

type SymFamilyFn = Arc<dyn Fn(f64, f64) -> SymMatrix + Send + Sync>;

/// The problem data: a symmetric `2n×2n` family `S(λ, t)`, its optional
/// λ-derivative, and the two boundary Lagrangian paths.
#[derive(Clone)]
pub struct HamiltonianFamily {
    n: usize,
    s: SymFamilyFn,
    s_deriv: Option<SymFamilyFn>,
    bc1: LagrangianPath,
    bc2: LagrangianPath,
    grid: usize,
}

impl std::fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("n", &self.n)
            .field("grid", &self.grid)
            .field("has_deriv", &self.s_deriv.is_some())
            .finish()
    }
}

impl HamiltonianFamily {
    pub fn new<F>(n: usize, s: F, bc1: LagrangianPath, bc2: LagrangianPath) -> Result<Self>
    where
        F: Fn(f64, f64) -> SymMatrix + Send + Sync + 'static,
    {
        if bc1.n() != n || bc2.n() != n {
            return Err(Error::invalid(
                "boundary paths must live in the same half-dimension n",
            ));
        }
        let fam = HamiltonianFamily {
            n,
            s: Arc::new(s),
            s_deriv: None,
            bc1,
            bc2,
            grid: 1000,
        };
        if fam.s_at(0.0, 0.0).dim() != 2 * n {
            return Err(Error::invalid("S(λ,t) must be a 2n x 2n family"));
        }
        Ok(fam)
    }

    pub fn with_deriv<F>(mut self, d: F) -> Self
    where
        F: Fn(f64, f64) -> SymMatrix + Send + Sync + 'static,
    {
        self.s_deriv = Some(Arc::new(d));
        self
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid.max(16);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn bc1(&self) -> &LagrangianPath {
        &self.bc1
    }

    pub fn bc2(&self) -> &LagrangianPath {
        &self.bc2
    }

    pub fn s_at(&self, lambda: f64, t: f64) -> SymMatrix {
        (self.s)(lambda, t)
    }

    pub fn s_deriv_at(&self, lambda: f64, t: f64) -> Option<SymMatrix> {
        self.s_deriv.as_ref().map(|d| d(lambda, t))
    }

    pub fn has_deriv(&self) -> bool {
        self.s_deriv.is_some()
    }

    /// The family with `S` replaced by `S + P`; the λ-derivative survives
    /// only when both sides carry one.
    pub fn perturbed(&self, p: &TimeVaryingPerturbation) -> HamiltonianFamily {
        let s = self.s.clone();
        let pe = p.eval.clone();
        let s_deriv = match (self.s_deriv.clone(), p.deriv.clone()) {
            (Some(sd), Some(pd)) => {
                let f: SymFamilyFn = Arc::new(move |l, t| sd(l, t).add(&pd(l, t)));
                Some(f)
            }
            _ => None,
        };
        HamiltonianFamily {
            n: self.n,
            s: Arc::new(move |l, t| s(l, t).add(&pe(l, t))),
            s_deriv,
            bc1: self.bc1.clone(),
            bc2: self.bc2.clone(),
            grid: self.grid,
        }
    }
}

/// A symmetric perturbation family `K(λ, t)` with optional λ-derivative.
#[derive(Clone)]
pub struct TimeVaryingPerturbation {
    eval: SymFamilyFn,
    deriv: Option<SymFamilyFn>,
}

impl TimeVaryingPerturbation {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(f64, f64) -> SymMatrix + Send + Sync + 'static,
    {
        TimeVaryingPerturbation {
            eval: Arc::new(eval),
            deriv: None,
        }
    }

    pub fn with_deriv<F>(mut self, d: F) -> Self
    where
        F: Fn(f64, f64) -> SymMatrix + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn at(&self, lambda: f64, t: f64) -> SymMatrix {
        (self.eval)(lambda, t)
    }
}

/// Matrix solution of `Ψ′ = J S_λ(t) Ψ`, `Ψ(0) = I`, stored on the time
/// grid. The flow is Hamiltonian, so Ψ is symplectic up to integration
/// error; the recorded drift is `max_t ‖Ψ(t)ᵀ J Ψ(t) − J‖`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub lambda: f64,
    psis: Vec<DMatrix<f64>>,
    pub symplectic_drift: f64,
    grid: usize,
}

impl FundamentalSolution {
    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn at_grid(&self, i: usize) -> &DMatrix<f64> {
        &self.psis[i]
    }

    pub fn end(&self) -> &DMatrix<f64> {
        self.psis.last().unwrap()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.grid as f64
    }
}

fn rk4_sweep<FSink>(fam: &HamiltonianFamily, lambda: f64, mut sink: FSink) -> DMatrix<f64>
where
    FSink: FnMut(usize, &DMatrix<f64>),
{
    let n2 = 2 * fam.n;
    let j = SymplecticJ::standard(fam.n);
    let g = fam.grid;
    let h = 1.0 / g as f64;
    let mut psi = DMatrix::<f64>::identity(n2, n2);
    sink(0, &psi);
    for i in 0..g {
        let t = i as f64 * h;
        let s0 = fam.s_at(lambda, t);
        let s_mid = fam.s_at(lambda, t + 0.5 * h);
        let s1 = fam.s_at(lambda, t + h);
        let k1 = j.mul_left(&(s0.as_matrix() * &psi));
        let k2 = j.mul_left(&(s_mid.as_matrix() * (&psi + &k1 * (0.5 * h))));
        let k3 = j.mul_left(&(s_mid.as_matrix() * (&psi + &k2 * (0.5 * h))));
        let k4 = j.mul_left(&(s1.as_matrix() * (&psi + &k3 * h)));
        psi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        sink(i + 1, &psi);
    }
    psi
}

/// Integrate the fundamental solution at one parameter value, with the
/// symplectic-drift certificate.
pub fn fundamental_solution(fam: &HamiltonianFamily, lambda: f64) -> Result<FundamentalSolution> {
    let mut psis = Vec::with_capacity(fam.grid + 1);
    rk4_sweep(fam, lambda, |_, psi| psis.push(psi.clone()));

    let j = SymplecticJ::standard(fam.n);
    let mut drift = 0.0_f64;
    for psi in &psis {
        let a = psi.transpose() * j.matrix() * psi - j.matrix();
        drift = drift.max(antisym_opnorm(&a));
    }
    if drift > DRIFT_LIMIT {
        return Err(Error::numerical(format!(
            "symplectic drift {drift:.3e} exceeds the integration budget; raise the grid"
        )));
    }
    Ok(FundamentalSolution {
        lambda,
        psis,
        symplectic_drift: drift,
        grid: fam.grid,
    })
}

/// Endpoint transport `Ψ(1)` without storage or drift certification; used by
/// the λ-sweeps where only the endpoint matters.
pub(crate) fn transport_end(fam: &HamiltonianFamily, lambda: f64) -> DMatrix<f64> {
    rk4_sweep(fam, lambda, |_, _| {})
}

/// Operator norm of an antisymmetric matrix via the PSD square.
fn antisym_opnorm(a: &DMatrix<f64>) -> f64 {
    if a.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let sq = SymMatrix::new(a.transpose() * a).expect("square product");
    match sym_eig(&sq) {
        Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => a.norm(),
    }
}

/// dim(Ψ(1)·Λ1(λ) ∩ Λ2(λ)): the number of principal angles at zero between
/// the transported (re-orthonormalised) frame and the right boundary.
pub fn kernel_dimension(fam: &HamiltonianFamily, lambda: f64, tol_rank: f64) -> Result<usize> {
    let psi1 = transport_end(fam, lambda);
    let t1 = &psi1 * fam.bc1.at(lambda).frame();
    let q = orthonormalize(&t1, 1e-12)?;
    let prod = q.transpose() * fam.bc2.at(lambda).frame();
    Ok(singular_values(&prod)
        .iter()
        .filter(|&&s| s >= 1.0 - tol_rank)
        .count())
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub tol: Tolerances,
    /// Uniform λ-samples before refinement.
    pub lambda_samples: usize,
    /// Bisection resolution for the located parameters.
    pub refine_res: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            tol: Tolerances::default(),
            lambda_samples: 2048,
            refine_res: 1e-8,
        }
    }
}

/// One parameter with nontrivial solutions: the kernel dimension and an
/// orthonormal frame of initial conditions `u(0)`.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub kernel_dim: usize,
    pub kernel_frame: DMatrix<f64>,
}

/// Sweep outcome: the isolated solution parameters, the Maslov index of the
/// boundary pair when it is defined, and the count bound `⌈|μ|/n⌉`.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub solutions: Vec<SolutionRecord>,
    pub count: usize,
    pub maslov_pair: Option<i64>,
    pub bound: Option<usize>,
    pub bound_satisfied: Option<bool>,
}

fn sweep_dips(fam: &HamiltonianFamily, opts: &SweepOptions) -> Result<Vec<Dip>> {
    let j = SymplecticJ::standard(fam.n);
    let g = |l: f64| {
        let psi1 = transport_end(fam, l);
        let t1 = &psi1 * fam.bc1.at(l).frame();
        let q = match orthonormalize(&t1, 1e-12) {
            Ok(q) => q,
            Err(_) => return f64::INFINITY,
        };
        let w = fam.bc2.at(l).frame().transpose() * j.matrix() * q;
        singular_values(&w).last().copied().unwrap_or(f64::INFINITY)
    };
    let cfg = ScanConfig {
        samples: opts.lambda_samples,
        resolution: opts.refine_res,
        zero_tol: opts.tol.angle_sin_tol(),
        continuum_run: 5,
        continuum_tol: opts.tol.angle_sin_tol(),
    };
    locate_zero_dips(g, &cfg)
}

fn solution_at(
    fam: &HamiltonianFamily,
    lambda: f64,
    psi_end: &DMatrix<f64>,
    tol_rank: f64,
) -> Result<Option<SolutionRecord>> {
    let f1 = fam.bc1.at(lambda);
    let f2 = fam.bc2.at(lambda);
    let t1 = psi_end * f1.frame();
    // Initial-condition coordinates c with (I − P2)·Ψ(1)·F1·c = 0.
    let p2 = f2.projection();
    let id = DMatrix::<f64>::identity(2 * fam.n, 2 * fam.n);
    let k = (id - p2) * &t1;
    let ktk = SymMatrix::new(k.transpose() * &k)?;
    let coords = kernel_basis(&ktk, tol_rank)?;
    if coords.ncols() == 0 {
        return Ok(None);
    }
    Ok(Some(SolutionRecord {
        lambda,
        kernel_dim: coords.ncols(),
        kernel_frame: f1.frame() * coords,
    }))
}

/// Scan [0, 1] for the parameters where the boundary value problem has
/// nontrivial solutions. A continuum of solutions violates the isolation
/// hypothesis and is rejected.
pub fn sweep_nontrivial(fam: &HamiltonianFamily, opts: &SweepOptions) -> Result<SweepReport> {
    let dips = sweep_dips(fam, opts)?;
    let mut solutions = Vec::new();
    for dip in &dips {
        let lambda = snap_lambda(dip.lambda, opts.refine_res);
        let psi_end = transport_end(fam, lambda);
        if let Some(rec) = solution_at(fam, lambda, &psi_end, opts.tol.tol_rank)? {
            solutions.push(rec);
        }
    }
    let count = solutions.len();

    let mopts = MaslovOptions {
        tol: opts.tol,
        scan_samples: opts.lambda_samples.min(2048),
    };
    let maslov_pair = maslov_pair_index(&fam.bc1, &fam.bc2, &mopts)
        .ok()
        .map(|r| r.value);
    let bound = maslov_pair.map(|m| (m.unsigned_abs() as usize).div_ceil(fam.n));
    let bound_satisfied = bound.map(|b| count >= b);
    Ok(SweepReport {
        solutions,
        count,
        maslov_pair,
        bound,
        bound_satisfied,
    })
}

fn snap_lambda(lambda: f64, res: f64) -> f64 {
    if lambda <= res {
        0.0
    } else if lambda >= 1.0 - res {
        1.0
    } else {
        lambda
    }
}

/// Crossing-form spectral flow of the perturbed path behind the boundary
/// value problem, for λ-constant boundary conditions: at each solution
/// parameter the form is `Γ[u] = ∫₀¹ ⟨∂S/∂λ(λ*, t) u(t), u(t)⟩ dt` on the
/// kernel solutions, integrated by the trapezoid rule on the grid and
/// assembled with the usual endpoint convention.
///
/// λ-varying boundary conditions acquire boundary terms in the crossing form
/// and are refused.
pub fn hamiltonian_sfl(fam: &HamiltonianFamily, opts: &SweepOptions) -> Result<SflReport> {
    if !fam.has_deriv() {
        return Err(Error::invalid("hamiltonian_sfl requires the S_deriv family"));
    }
    for path in [&fam.bc1, &fam.bc2] {
        let p0 = path.at(0.0).projection();
        for i in 1..=16 {
            let l = i as f64 / 16.0;
            if operator_norm(&(path.at(l).projection() - &p0)) > 1e-8 {
                return Err(Error::invalid(
                    "hamiltonian_sfl requires λ-constant boundary conditions; \
                     use the Maslov index of the boundary pair instead",
                ));
            }
        }
    }

    let dips = sweep_dips(fam, opts)?;
    let mut value: i64 = 0;
    let mut crossings = Vec::new();
    for dip in &dips {
        let lambda = snap_lambda(dip.lambda, opts.refine_res);
        let psi = fundamental_solution(fam, lambda)?;
        let Some(rec) = solution_at(fam, lambda, psi.end(), opts.tol.tol_rank)? else {
            continue;
        };
        let k = rec.kernel_dim;

        // Trapezoid rule for the k×k form on the grid solutions Ψ(t)·u0.
        let g = fam.grid();
        let h = 1.0 / g as f64;
        let mut gamma = DMatrix::<f64>::zeros(k, k);
        for i in 0..=g {
            let weight = if i == 0 || i == g { 0.5 * h } else { h };
            let ut = psi.at_grid(i) * &rec.kernel_frame;
            let sd = fam.s_deriv_at(lambda, psi.time(i)).unwrap();
            gamma += (ut.transpose() * sd.as_matrix() * &ut) * weight;
        }
        let form = SymMatrix::new(gamma)?;
        let index = quadform_index(&form, opts.tol.tol_rank)?;
        let record = CrossingRecord {
            lambda_star: lambda,
            kernel: rec.kernel_frame.clone(),
            form,
            index,
            regular: !index.degenerate,
        };
        if index.degenerate {
            return Err(Error::DegenerateCrossing(Box::new(record)));
        }
        value += if lambda == 0.0 {
            -(index.morse_index as i64)
        } else if lambda == 1.0 {
            index.positive_count() as i64
        } else {
            index.signature
        };
        crossings.push(record);
    }

    Ok(SflReport {
        value,
        method: SflMethod::Crossings,
        segments: Vec::new(),
        crossings,
        diagnostics: SflDiagnostics {
            scan_samples: opts.lambda_samples,
            ..Default::default()
        },
    })
}

/// Outcome of the comparison principle `sfl(A+K) ≥ sfl(A+K′)` under the
/// endpoint order hypotheses `K′_0 ≥ K_0`, `K_1 ≥ K′_1`.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    pub sfl_k: i64,
    pub sfl_kprime: i64,
    pub holds: bool,
}

fn require_psd(m: &SymMatrix, tol_rank: f64, what: &str) -> Result<()> {
    let eig = sym_eig(m)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    if eig.values[0] < -tol_rank * scale {
        return Err(Error::invalid(format!(
            "{what} is not positive semidefinite (min eigenvalue {:.3e})",
            eig.values[0]
        )));
    }
    Ok(())
}

/// Matrix-model comparison: `A`, `K`, `K′` are paths of symmetric matrices;
/// both perturbed flows are computed with the partition method.
pub fn comparison_check_matrix(
    a: &OperatorPath,
    k: &OperatorPath,
    kprime: &OperatorPath,
    opts: &SflOptions,
) -> Result<ComparisonReport> {
    if a.dim() != k.dim() || a.dim() != kprime.dim() {
        return Err(Error::invalid("paths must share a dimension"));
    }
    let h0 = kprime.at(0.0).sub(&k.at(0.0));
    require_psd(&h0, opts.tol.tol_rank, "K'(0) - K(0)")?;
    let h1 = k.at(1.0).sub(&kprime.at(1.0));
    require_psd(&h1, opts.tol.tol_rank, "K(1) - K'(1)")?;

    let sfl_k = sfl_partition(&a.add(k)?, opts)?.value;
    let sfl_kprime = sfl_partition(&a.add(kprime)?, opts)?.value;
    Ok(ComparisonReport {
        sfl_k,
        sfl_kprime,
        holds: sfl_k >= sfl_kprime,
    })
}

/// Hamiltonian-model comparison: the base family is perturbed by `K` and
/// `K′` pointwise in `(λ, t)`; the endpoint order hypotheses are checked on
/// a time sample of the hypothesis matrices.
pub fn comparison_check_hamiltonian(
    base: &HamiltonianFamily,
    k: &TimeVaryingPerturbation,
    kprime: &TimeVaryingPerturbation,
    opts: &SweepOptions,
) -> Result<ComparisonReport> {
    for i in 0..=32 {
        let t = i as f64 / 32.0;
        require_psd(
            &kprime.at(0.0, t).sub(&k.at(0.0, t)),
            opts.tol.tol_rank,
            "K'(0,·) - K(0,·)",
        )?;
        require_psd(
            &k.at(1.0, t).sub(&kprime.at(1.0, t)),
            opts.tol.tol_rank,
            "K(1,·) - K'(1,·)",
        )?;
    }
    let fam_k = base.perturbed(k);
    let fam_kprime = base.perturbed(kprime);
    let sfl_k = hamiltonian_sfl(&fam_k, opts)?.value;
    let sfl_kprime = hamiltonian_sfl(&fam_kprime, opts)?.value;
    Ok(ComparisonReport {
        sfl_k,
        sfl_kprime,
        holds: sfl_k >= sfl_kprime,
    })
}

/// Outcome of the isolated-crossing estimate `|sfl| ≤ dim ker` at the single
/// nontrivial parameter.
#[derive(Debug, Clone, Copy)]
pub struct IsolatedBoundReport {
    pub sfl_abs: i64,
    pub kernel_dim: usize,
    pub holds: bool,
}

/// Matrix-model bound check: the path must have exactly one crossing, at the
/// stated parameter.
pub fn isolated_bound_check_path(
    path: &OperatorPath,
    lambda_star: f64,
    opts: &SflOptions,
) -> Result<IsolatedBoundReport> {
    let report = crate::specflow::sfl_crossings(path, opts)?;
    isolated_from_report(&report, lambda_star)
}

/// Hamiltonian-model bound check via the crossing-form spectral flow.
pub fn isolated_bound_check_hamiltonian(
    fam: &HamiltonianFamily,
    lambda_star: f64,
    opts: &SweepOptions,
) -> Result<IsolatedBoundReport> {
    let report = hamiltonian_sfl(fam, opts)?;
    isolated_from_report(&report, lambda_star)
}

fn isolated_from_report(report: &SflReport, lambda_star: f64) -> Result<IsolatedBoundReport> {
    if report.crossings.len() != 1 {
        return Err(Error::invalid(format!(
            "expected a single crossing, found {}",
            report.crossings.len()
        )));
    }
    let c = &report.crossings[0];
    if (c.lambda_star - lambda_star).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "crossing found at {:.9}, not at the stated {:.9}",
            c.lambda_star, lambda_star
        )));
    }
    let kernel_dim = c.kernel.ncols();
    Ok(IsolatedBoundReport {
        sfl_abs: report.value.abs(),
        kernel_dim,
        holds: report.value.abs() <= kernel_dim as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maslov::LagrangianFrame;
    use std::f64::consts::PI;

    fn span_e1() -> LagrangianPath {
        LagrangianPath::constant(LagrangianFrame::horizontal(1))
    }

    /// S_λ(t) = c(λ)·I on R²; the flow is rotation by angle c(λ)·t.
    fn rotation_family(rate: f64) -> HamiltonianFamily {
        HamiltonianFamily::new(
            1,
            move |l, _t| SymMatrix::identity(2).scaled(rate * l),
            span_e1(),
            span_e1(),
        )
        .unwrap()
        .with_deriv(move |_, _| SymMatrix::identity(2).scaled(rate))
    }

    #[test]
    fn symplectic_j_invariants() {
        for n in 1..4 {
            let j = SymplecticJ::standard(n);
            let jj = j.matrix() * j.matrix();
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            assert_eq!(jj, -id);
            assert_eq!(j.matrix().transpose(), -j.matrix());
        }
    }

    #[test]
    fn fundamental_solution_of_zero_family() {
        let fam = HamiltonianFamily::new(1, |_, _| SymMatrix::zeros(2), span_e1(), span_e1())
            .unwrap()
            .with_grid(100);
        let psi = fundamental_solution(&fam, 0.7).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        for i in [0, 50, 100] {
            assert_eq!(psi.at_grid(i), &id);
        }
        assert_eq!(psi.symplectic_drift, 0.0);
    }

    #[test]
    fn fundamental_solution_is_rotation() {
        // u′ = c·J·u integrates to the rotation by angle c·t.
        let fam = rotation_family(1.3);
        let psi = fundamental_solution(&fam, 1.0).unwrap();
        let end = psi.end();
        let expect =
            DMatrix::from_row_slice(2, 2, &[1.3_f64.cos(), -(1.3_f64.sin()), 1.3_f64.sin(), 1.3_f64.cos()]);
        assert!(operator_norm(&(end - expect)) < 1e-10);
        assert!(psi.symplectic_drift <= 1e-8);
    }

    #[test]
    fn drift_shrinks_with_order_four() {
        let fam = rotation_family(3.0 * PI);
        let coarse = fundamental_solution(&fam.clone().with_grid(100), 1.0)
            .unwrap()
            .symplectic_drift;
        let fine = fundamental_solution(&fam.with_grid(200), 1.0)
            .unwrap()
            .symplectic_drift;
        assert!(
            coarse >= 8.0 * fine,
            "halving the step should cut drift by ≥ 8x: {coarse:.3e} vs {fine:.3e}"
        );
    }

    #[test]
    fn kernel_dimension_alignment() {
        // Identity transport with equal boundaries: full kernel.
        let fam = HamiltonianFamily::new(1, |_, _| SymMatrix::zeros(2), span_e1(), span_e1())
            .unwrap()
            .with_grid(64);
        assert_eq!(kernel_dimension(&fam, 0.3, 1e-9).unwrap(), 1);

        // Rotation by c aligns span{e1} with itself iff c ≡ 0 mod π.
        let fam = rotation_family(PI).with_grid(400);
        assert_eq!(kernel_dimension(&fam, 1.0, 1e-9).unwrap(), 1);
        assert_eq!(kernel_dimension(&fam, 0.5, 1e-9).unwrap(), 0);
    }

    #[test]
    fn sweep_rotation_instance() {
        let fam = rotation_family(3.0 * PI).with_grid(400);
        let opts = SweepOptions {
            lambda_samples: 1024,
            ..Default::default()
        };
        let report = sweep_nontrivial(&fam, &opts).unwrap();
        assert_eq!(report.count, 4);
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (sol, e) in report.solutions.iter().zip(expect) {
            assert!((sol.lambda - e).abs() < 1e-6, "{} vs {}", sol.lambda, e);
            assert_eq!(sol.kernel_dim, 1);
        }
        // Constant equal boundary paths intersect everywhere; the pair index
        // is undefined and reported as absent.
        assert!(report.maslov_pair.is_none());
    }

    #[test]
    fn sweep_transversal_pair_is_empty() {
        let vert = {
            let mut f = DMatrix::<f64>::zeros(2, 1);
            f[(1, 0)] = 1.0;
            LagrangianPath::constant(
                LagrangianFrame::new(f, &Tolerances::default()).unwrap(),
            )
        };
        let fam = HamiltonianFamily::new(1, |_, _| SymMatrix::zeros(2), span_e1(), vert)
            .unwrap()
            .with_grid(64);
        let report = sweep_nontrivial(&fam, &SweepOptions::default()).unwrap();
        assert_eq!(report.count, 0);
        assert_eq!(report.maslov_pair, Some(0));
        assert_eq!(report.bound, Some(0));
        assert_eq!(report.bound_satisfied, Some(true));
    }

    #[test]
    fn hamiltonian_sfl_rotation_is_three() {
        // Spectrum oracle kπ + 3πλ: crossings at λ ∈ {0, 1/3, 2/3, 1}
        // contributing 0 + 1 + 1 + 1.
        let fam = rotation_family(3.0 * PI).with_grid(500);
        let opts = SweepOptions {
            lambda_samples: 1024,
            ..Default::default()
        };
        let r = hamiltonian_sfl(&fam, &opts).unwrap();
        assert_eq!(r.value, 3);
        assert_eq!(r.crossings.len(), 4);
    }

    #[test]
    fn hamiltonian_sfl_constant_family_is_zero() {
        let fam = HamiltonianFamily::new(1, |_, _| SymMatrix::zeros(2), span_e1(), span_e1())
            .unwrap()
            .with_grid(64)
            .with_deriv(|_, _| SymMatrix::zeros(2));
        // Kernel at every λ: the zero set is a continuum and must be refused.
        assert!(hamiltonian_sfl(&fam, &SweepOptions::default()).is_err());
    }

    #[test]
    fn hamiltonian_sfl_reversal_negates() {
        let fam = rotation_family(3.0 * PI).with_grid(400);
        let reversed = HamiltonianFamily::new(
            1,
            move |l, _t| SymMatrix::identity(2).scaled(3.0 * PI * (1.0 - l)),
            span_e1(),
            span_e1(),
        )
        .unwrap()
        .with_grid(400)
        .with_deriv(move |_, _| SymMatrix::identity(2).scaled(-3.0 * PI));
        let opts = SweepOptions {
            lambda_samples: 1024,
            ..Default::default()
        };
        let a = hamiltonian_sfl(&fam, &opts).unwrap().value;
        let b = hamiltonian_sfl(&reversed, &opts).unwrap().value;
        assert_eq!(a, -b);
    }

    #[test]
    fn hamiltonian_sfl_refuses_varying_boundaries() {
        let rot = LagrangianPath::new(1, |l| {
            let th = PI * l;
            LagrangianFrame::new(
                DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()]),
                &Tolerances::default(),
            )
            .unwrap()
        });
        let fam = HamiltonianFamily::new(1, |_, _| SymMatrix::zeros(2), rot, span_e1())
            .unwrap()
            .with_grid(64)
            .with_deriv(|_, _| SymMatrix::zeros(2));
        let err = hamiltonian_sfl(&fam, &SweepOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn comparison_matrix_model() {
        let opts = SflOptions::default();
        let a = OperatorPath::new(2, |l| SymMatrix::diagonal(&[l - 0.5, 1.0]));
        let zero = OperatorPath::constant(SymMatrix::zeros(2));

        // K = K′ gives equality.
        let r = comparison_check_matrix(&a, &zero, &zero, &opts).unwrap();
        assert_eq!(r.sfl_k, r.sfl_kprime);
        assert!(r.holds);

        // K ≡ +εI, K′ ≡ −εI violates the endpoint hypotheses.
        let kp = OperatorPath::constant(SymMatrix::identity(2).scaled(1e-3));
        let km = OperatorPath::constant(SymMatrix::identity(2).scaled(-1e-3));
        assert!(matches!(
            comparison_check_matrix(&a, &kp, &km, &opts),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn comparison_hamiltonian_model() {
        let base = rotation_family(2.0 * PI).with_grid(300);
        let eps = 0.05;
        let k = TimeVaryingPerturbation::new(|_, _| SymMatrix::zeros(2))
            .with_deriv(|_, _| SymMatrix::zeros(2));
        // K′ = (1−λ)·εI − λ·εI: K′(0) − K(0) = εI ⪰ 0 and K(1) − K′(1) = εI ⪰ 0.
        let kprime = TimeVaryingPerturbation::new(move |l, _| {
            SymMatrix::identity(2).scaled(eps * (1.0 - 2.0 * l))
        })
        .with_deriv(move |_, _| SymMatrix::identity(2).scaled(-2.0 * eps));
        let opts = SweepOptions {
            lambda_samples: 512,
            ..Default::default()
        };
        let r = comparison_check_hamiltonian(&base, &k, &kprime, &opts).unwrap();
        assert!(r.holds, "sfl_k = {}, sfl_kprime = {}", r.sfl_k, r.sfl_kprime);
    }

    #[test]
    fn isolated_bound_examples() {
        let opts = SflOptions::default();
        let p = OperatorPath::new(1, |l| SymMatrix::diagonal(&[l - 0.5]))
            .with_deriv(|_| SymMatrix::identity(1));
        let r = isolated_bound_check_path(&p, 0.5, &opts).unwrap();
        assert_eq!(r.sfl_abs, 1);
        assert_eq!(r.kernel_dim, 1);
        assert!(r.holds);

        // Opposite branches: kernel dimension 2, flow 0.
        let p = OperatorPath::new(2, |l| SymMatrix::diagonal(&[l - 0.5, 0.5 - l]))
            .with_deriv(|_| SymMatrix::diagonal(&[1.0, -1.0]));
        let r = isolated_bound_check_path(&p, 0.5, &opts).unwrap();
        assert_eq!(r.sfl_abs, 0);
        assert_eq!(r.kernel_dim, 2);
        assert!(r.holds);

        // Normalisation path of diag(0,0,3): |sfl| = kernel dim = 2.
        let t = SymMatrix::diagonal(&[0.0, 0.0, 3.0]);
        let np = crate::specflow::normalization_path(&t, &Tolerances::default()).unwrap();
        let r = isolated_bound_check_path(&np, 0.5, &opts).unwrap();
        assert_eq!(r.sfl_abs, 2);
        assert_eq!(r.kernel_dim, 2);
        assert!(r.holds);
    }
}
