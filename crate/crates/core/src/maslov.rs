//! Lagrangian subspaces of R^{2n} and the crossing-form Maslov index, for a
//! single path against a fixed reference Lagrangian and for pairs of paths,
//! plus the graph-Lagrangian construction that identifies the spectral flow
//! of an operator path with the Maslov index of its graphs.
//!
//! At a crossing λ* the nearby subspaces are written as graphs over Λ(λ*)
//! with values in the canonical transversal complement J·Λ(λ*); the crossing
//! form is the λ-derivative of `ω(u, φ_λ(u))`, and the index combines forms
//! exactly like the spectral-flow crossing formula: `−m⁻` at λ=0, the
//! signature in the interior, `m⁻(−Q)` at λ=1.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hamiltonian::SymplecticJ;
use crate::numerics::{
    kernel_basis, operator_norm, orthonormalize, quadform_index, singular_values, SymMatrix,
};
use crate::scan::{locate_zero_dips, ScanConfig};
use crate::specflow::{CrossingRecord, OperatorPath, SflOptions};
use nalgebra::DMatrix;
use std::sync::Arc;

/// An orthonormal frame (2n×n) spanning a Lagrangian subspace of R^{2n}.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    n: usize,
    frame: DMatrix<f64>,
}

impl LagrangianFrame {
    /// Wrap a frame after checking orthonormality and the Lagrangian
    /// condition `frameᵀ J frame = 0`.
    pub fn new(frame: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let n = frame.ncols();
        if frame.nrows() != 2 * n || n == 0 {
            return Err(Error::invalid(format!(
                "Lagrangian frame must be 2n x n, got {}x{}",
                frame.nrows(),
                n
            )));
        }
        if !is_lagrangian(&frame, tol.tol_orth) {
            return Err(Error::invalid(
                "frame is not an orthonormal Lagrangian basis",
            ));
        }
        Ok(LagrangianFrame { n, frame })
    }

    /// Orthonormalise spanning columns, then validate.
    pub fn from_spanning(cols: &DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let q = orthonormalize(cols, tol.tol_rank)?;
        LagrangianFrame::new(q, tol)
    }

    pub(crate) fn new_unchecked(frame: DMatrix<f64>) -> Self {
        let n = frame.ncols();
        LagrangianFrame { n, frame }
    }

    /// The horizontal Lagrangian `R^n × {0}`, i.e. the frame `(I; 0)`.
    pub fn horizontal(n: usize) -> Self {
        let mut f = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            f[(i, i)] = 1.0;
        }
        LagrangianFrame { n, frame: f }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthogonal projection onto the subspace, `F Fᵀ`.
    pub fn projection(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }
}

/// True iff the columns are orthonormal and span a Lagrangian subspace with
/// respect to the standard symplectic matrix, both within `tol`.
pub fn is_lagrangian(frame: &DMatrix<f64>, tol: f64) -> bool {
    let n = frame.ncols();
    if frame.nrows() != 2 * n || n == 0 {
        return false;
    }
    let gram = frame.transpose() * frame - DMatrix::<f64>::identity(n, n);
    if operator_norm(&gram) > tol {
        return false;
    }
    let j = SymplecticJ::standard(n);
    let sym = frame.transpose() * j.matrix() * frame;
    operator_norm(&sym) <= tol
}

/// Dimension of `L1 ∩ L2`: the number of singular values of `L1ᵀ L2` with
/// `cos θ ≥ 1 − tol_rank` (principal angles at zero).
pub fn intersection_dim(l1: &LagrangianFrame, l2: &LagrangianFrame, tol_rank: f64) -> Result<usize> {
    if l1.n() != l2.n() {
        return Err(Error::invalid("frames live in different dimensions"));
    }
    let prod = l1.frame().transpose() * l2.frame();
    let svs = singular_values(&prod);
    Ok(svs.iter().filter(|&&s| s >= 1.0 - tol_rank).count())
}

type FrameFn = Arc<dyn Fn(f64) -> LagrangianFrame + Send + Sync>;

/// A continuous family `λ ↦ Λ(λ)` of Lagrangian subspaces, given by frames.
/// Continuity is a property of the subspaces (projections), not the frames.
#[derive(Clone)]
pub struct LagrangianPath {
    n: usize,
    eval: FrameFn,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath").field("n", &self.n).finish()
    }
}

impl LagrangianPath {
    pub fn new<F>(n: usize, eval: F) -> Self
    where
        F: Fn(f64) -> LagrangianFrame + Send + Sync + 'static,
    {
        LagrangianPath {
            n,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(frame: LagrangianFrame) -> Self {
        let n = frame.n();
        LagrangianPath {
            n,
            eval: Arc::new(move |_| frame.clone()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, lambda: f64) -> LagrangianFrame {
        let f = (self.eval)(lambda);
        assert_eq!(f.n(), self.n, "path evaluation changed dimension");
        f
    }

    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let eval = self.eval.clone();
        let width = hi - lo;
        LagrangianPath {
            n: self.n,
            eval: Arc::new(move |u| eval(lo + width * u)),
        }
    }

    /// Sampled continuity check on the projection distance between
    /// neighbouring subspaces.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let n = samples.max(8);
        let h = 1.0 / n as f64;
        let mut prev = self.at(0.0).projection();
        for i in 1..=n {
            let cur = self.at(i as f64 * h).projection();
            let d = operator_norm(&(&cur - &prev));
            if !d.is_finite() || d > 0.8 {
                return Err(Error::invalid(format!(
                    "Lagrangian path jumps near lambda = {:.4} (projection distance {d:.3})",
                    i as f64 * h
                )));
            }
            prev = cur;
        }
        Ok(())
    }
}

/// Two-speed concatenation of Lagrangian paths with matching junction.
pub fn concatenate_lagrangian(
    p1: &LagrangianPath,
    p2: &LagrangianPath,
    tol: &Tolerances,
) -> Result<LagrangianPath> {
    if p1.n() != p2.n() {
        return Err(Error::invalid("concatenation requires equal dimensions"));
    }
    let d = operator_norm(&(p1.at(1.0).projection() - p2.at(0.0).projection()));
    if d > tol.tol_orth.max(1e-12) * 10.0 {
        return Err(Error::invalid(format!(
            "junction subspaces differ (projection distance {d:.3e})"
        )));
    }
    let (a, b) = (p1.clone(), p2.clone());
    Ok(LagrangianPath::new(p1.n(), move |l| {
        if l <= 0.5 {
            a.at(2.0 * l)
        } else {
            b.at(2.0 * l - 1.0)
        }
    }))
}

#[derive(Debug, Clone)]
pub struct MaslovOptions {
    pub tol: Tolerances,
    pub scan_samples: usize,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        MaslovOptions {
            tol: Tolerances::default(),
            scan_samples: 512,
        }
    }
}

/// Integer Maslov index with the crossing certificates behind it.
#[derive(Debug, Clone)]
pub struct MaslovReport {
    pub value: i64,
    pub crossings: Vec<CrossingRecord>,
}

/// Maslov index of a path of Lagrangian subspaces against a fixed reference.
pub fn maslov_index(
    path: &LagrangianPath,
    l0: &LagrangianFrame,
    opts: &MaslovOptions,
) -> Result<MaslovReport> {
    if path.n() != l0.n() {
        return Err(Error::invalid("path and reference dimensions differ"));
    }
    let j = SymplecticJ::standard(path.n()).matrix().clone();
    let p = path.clone();
    maslov_core(move |l| p.at(l).frame().clone(), l0.frame(), &j, opts)
}

/// Maslov index of a pair of Lagrangian paths, counting the parameters where
/// `Λ1(λ) ∩ Λ2(λ) ≠ {0}`.
///
/// Reduction: the pair maps to the single path `Λ1(λ) × Λ2(λ)` in the
/// product space R^{4n} carrying the split form `ω ⊕ (−ω)`, measured against
/// the fixed diagonal Lagrangian. The orientation is calibrated so that a
/// pair with constant second leg reproduces `maslov_index` exactly.
pub fn maslov_pair_index(
    p1: &LagrangianPath,
    p2: &LagrangianPath,
    opts: &MaslovOptions,
) -> Result<MaslovReport> {
    if p1.n() != p2.n() {
        return Err(Error::invalid("paths live in different dimensions"));
    }
    let n = p1.n();
    let two_n = 2 * n;
    let j = SymplecticJ::standard(n);
    let mut j_prod = DMatrix::<f64>::zeros(4 * n, 4 * n);
    for i in 0..two_n {
        for k in 0..two_n {
            j_prod[(i, k)] = j.matrix()[(i, k)];
            j_prod[(two_n + i, two_n + k)] = -j.matrix()[(i, k)];
        }
    }
    // Diagonal Lagrangian {(x, x)} of the split form.
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    let mut diag = DMatrix::<f64>::zeros(4 * n, two_n);
    for i in 0..two_n {
        diag[(i, i)] = inv_sqrt2;
        diag[(two_n + i, i)] = inv_sqrt2;
    }

    let (a, b) = (p1.clone(), p2.clone());
    let product_frame = move |l: f64| {
        let f1 = a.at(l);
        let f2 = b.at(l);
        let mut p = DMatrix::<f64>::zeros(4 * n, two_n);
        for c in 0..n {
            for r in 0..two_n {
                p[(r, c)] = f1.frame()[(r, c)];
                p[(two_n + r, n + c)] = f2.frame()[(r, c)];
            }
        }
        p
    };

    let mut report = maslov_core(product_frame, &diag, &j_prod, opts)?;
    // Map crossing kernels back to the common intersection in R^{2n}: the
    // product intersection vectors have equal halves (x, x)/√2.
    for rec in &mut report.crossings {
        let k = rec.kernel.ncols();
        let mut ambient = DMatrix::<f64>::zeros(two_n, k);
        for c in 0..k {
            for r in 0..two_n {
                ambient[(r, c)] = rec.kernel[(r, c)] * 2.0_f64.sqrt();
            }
        }
        rec.kernel = ambient;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Start,
    Interior,
    End,
}

/// Crossing machinery shared by the single-path and pair indices; `j` may be
/// any orthogonal almost-complex structure, not only the standard block one.
fn maslov_core<F>(
    frame_at: F,
    l0: &DMatrix<f64>,
    j: &DMatrix<f64>,
    opts: &MaslovOptions,
) -> Result<MaslovReport>
where
    F: Fn(f64) -> DMatrix<f64> + Sync,
{
    let tol = &opts.tol;
    // ker(L0ᵀ J Λ(λ)) is isomorphic to Λ(λ) ∩ L0, so the smallest singular
    // value of the pencil vanishes exactly at the crossings.
    let pencil = |l: f64| l0.transpose() * j * frame_at(l);
    let g = |l: f64| {
        let svs = singular_values(&pencil(l));
        svs.last().copied().unwrap_or(f64::INFINITY)
    };
    let cfg = ScanConfig {
        samples: opts.scan_samples,
        resolution: tol.lambda_res,
        zero_tol: tol.angle_sin_tol(),
        continuum_run: 5,
        continuum_tol: tol.angle_sin_tol(),
    };
    let dips = locate_zero_dips(g, &cfg)?;

    let mut value: i64 = 0;
    let mut crossings = Vec::new();
    for dip in &dips {
        let (lambda_star, role) = if dip.lambda <= tol.lambda_res {
            (0.0, Role::Start)
        } else if dip.lambda >= 1.0 - tol.lambda_res {
            (1.0, Role::End)
        } else {
            (dip.lambda, Role::Interior)
        };
        let fstar = frame_at(lambda_star);
        let w = l0.transpose() * j * &fstar;
        let wtw = SymMatrix::new(w.transpose() * &w)?;
        let coords = kernel_basis(&wtw, tol.tol_rank)?;
        if coords.ncols() == 0 {
            continue;
        }

        // Write Λ(λ) near λ* as the graph of φ_λ : Λ(λ*) → J·Λ(λ*); the
        // decomposition is frame-gauge invariant.
        let complement = j * &fstar;
        let phi = |l: f64| -> Result<DMatrix<f64>> {
            let gfr = frame_at(l);
            let x = fstar.transpose() * &gfr;
            let y = complement.transpose() * &gfr;
            let xinv = x
                .try_inverse()
                .ok_or_else(|| Error::numerical("graph coordinates degenerate near crossing"))?;
            Ok(y * xinv)
        };
        let h = 10.0 * tol.lambda_res;
        let dphi = match role {
            Role::Start => (phi(h)? - phi(0.0)?) / h,
            Role::End => (phi(1.0)? - phi(1.0 - h)?) / h,
            Role::Interior => (phi(lambda_star + h)? - phi(lambda_star - h)?) / (2.0 * h),
        };
        let q = SymMatrix::new(dphi)?;
        let q_int = q.restrict(&coords);
        let index = quadform_index(&q_int, tol.tol_rank)?;
        let record = CrossingRecord {
            lambda_star,
            kernel: &fstar * &coords,
            form: q_int,
            index,
            regular: !index.degenerate,
        };
        if index.degenerate {
            return Err(Error::DegenerateCrossing(Box::new(record)));
        }
        value += match role {
            Role::Start => -(index.morse_index as i64),
            Role::Interior => index.signature,
            Role::End => index.positive_count() as i64,
        };
        crossings.push(record);
    }
    Ok(MaslovReport { value, crossings })
}

/// Orthonormalised frame of the graph `{(u, Tu)}` of a symmetric matrix; the
/// graph of a symmetric operator is always Lagrangian, and the stacked
/// generator `(I; T)` is full rank by construction.
pub fn graph_lagrangian(t: &SymMatrix) -> Result<LagrangianFrame> {
    let n = t.dim();
    let mut g = DMatrix::<f64>::zeros(2 * n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for r in 0..n {
            g[(n + r, i)] = t.as_matrix()[(r, i)];
        }
    }
    Ok(LagrangianFrame::new_unchecked(crate::numerics::mgs(&g)))
}

/// Spectral flow through the Maslov index of the graph path against the
/// horizontal Lagrangian.
pub fn sfl_via_maslov(path: &OperatorPath, opts: &MaslovOptions) -> Result<i64> {
    let n = path.dim();
    let p = path.clone();
    let graph_path = LagrangianPath::new(n, move |l| {
        graph_lagrangian(&p.at(l)).expect("graph frame of a finite matrix")
    });
    let report = maslov_index(&graph_path, &LagrangianFrame::horizontal(n), opts)?;
    Ok(report.value)
}

/// Options bridge for callers that hold spectral-flow options.
impl From<&SflOptions> for MaslovOptions {
    fn from(o: &SflOptions) -> Self {
        MaslovOptions {
            tol: o.tol,
            scan_samples: o.scan_samples.unwrap_or(512),
        }
    }
}
