//! Spectral flow of paths of symmetric matrices, by two independent methods:
//! counting eigenvalues through certified spectral windows over an adaptive
//! partition, and summing crossing-form signatures at isolated kernel
//! parameters. Also path algebra (concatenation, reversal, restriction),
//! the bounded transform `T ↦ T(I+T²)^{−1/2}` and normalisation paths.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::numerics::{
    kernel_basis, operator_norm, quadform_index, sym_eig, QuadFormIndex, SymMatrix,
};
use crate::scan::{locate_zero_dips, ScanConfig};
use nalgebra::DMatrix;
use std::sync::Arc;

type MatrixFn = Arc<dyn Fn(f64) -> SymMatrix + Send + Sync>;

/// A continuously evaluable family `λ ↦ M(λ)` of symmetric matrices on
/// [0, 1], with an optional pathwise derivative.
///
/// Evaluation must be a pure function of `λ`; paths are freely shared across
/// threads.
#[derive(Clone)]
pub struct OperatorPath {
    dim: usize,
    eval: MatrixFn,
    deriv: Option<MatrixFn>,
    smoothness_hint: usize,
}

impl std::fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPath")
            .field("dim", &self.dim)
            .field("has_deriv", &self.deriv.is_some())
            .field("smoothness_hint", &self.smoothness_hint)
            .finish()
    }
}

impl OperatorPath {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(f64) -> SymMatrix + Send + Sync + 'static,
    {
        OperatorPath {
            dim,
            eval: Arc::new(eval),
            deriv: None,
            smoothness_hint: 64,
        }
    }

    pub fn with_deriv<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> SymMatrix + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_smoothness_hint(mut self, hint: usize) -> Self {
        self.smoothness_hint = hint.max(2);
        self
    }

    pub fn constant(m: SymMatrix) -> Self {
        let dim = m.dim();
        OperatorPath {
            dim,
            eval: Arc::new(move |_| m.clone()),
            deriv: Some(Arc::new(move |_| SymMatrix::zeros(dim))),
            smoothness_hint: 4,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness_hint(&self) -> usize {
        self.smoothness_hint
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn at(&self, lambda: f64) -> SymMatrix {
        let m = (self.eval)(lambda);
        assert_eq!(m.dim(), self.dim, "path evaluation changed dimension");
        m
    }

    pub fn deriv_at(&self, lambda: f64) -> Option<SymMatrix> {
        self.deriv.as_ref().map(|d| d(lambda))
    }

    /// The subpath on `[lo, hi]`, reparametrised to [0, 1].
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let eval = self.eval.clone();
        let width = hi - lo;
        let deriv = self.deriv.clone().map(|d| {
            let f: MatrixFn = Arc::new(move |u: f64| d(lo + width * u).scaled(width));
            f
        });
        OperatorPath {
            dim: self.dim,
            eval: Arc::new(move |u| eval(lo + width * u)),
            deriv,
            smoothness_hint: self.smoothness_hint,
        }
    }

    /// Pointwise sum of two paths; the derivative is kept when both carry one.
    pub fn add(&self, other: &OperatorPath) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::invalid("path dimensions differ"));
        }
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let deriv = match (self.deriv.clone(), other.deriv.clone()) {
            (Some(d1), Some(d2)) => {
                let f: MatrixFn = Arc::new(move |l: f64| d1(l).add(&d2(l)));
                Some(f)
            }
            _ => None,
        };
        Ok(OperatorPath {
            dim: self.dim,
            eval: Arc::new(move |l| e1(l).add(&e2(l))),
            deriv,
            smoothness_hint: self.smoothness_hint.max(other.smoothness_hint),
        })
    }

    /// Statistical consistency check of the path data: an estimated Lipschitz
    /// bound for continuity, and a central-difference comparison against the
    /// supplied derivative.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let n = samples.max(8);
        let h = 1.0 / n as f64;
        let mut prev = self.at(0.0);
        let mut max_step = 0.0_f64;
        for i in 1..=n {
            let cur = self.at(i as f64 * h);
            let step = operator_norm(&(cur.as_matrix() - prev.as_matrix()));
            max_step = max_step.max(step);
            prev = cur;
        }
        if !max_step.is_finite() {
            return Err(Error::invalid("path evaluation produced non-finite values"));
        }
        if let Some(_d) = &self.deriv {
            let fd_h = 1e-5;
            for i in 1..n {
                let l = i as f64 * h;
                if l - fd_h < 0.0 || l + fd_h > 1.0 {
                    continue;
                }
                let plus = self.at(l + fd_h);
                let minus = self.at(l - fd_h);
                let center = self.at(l);
                let fd = (plus.as_matrix() - minus.as_matrix()) / (2.0 * fd_h);
                let curvature = operator_norm(
                    &((plus.as_matrix() + minus.as_matrix()) - center.as_matrix() * 2.0),
                ) / (fd_h * fd_h);
                let d = self.deriv_at(l).unwrap();
                let err = operator_norm(&(fd - d.as_matrix()));
                if err > 10.0 * fd_h * curvature.max(1.0) {
                    return Err(Error::invalid(format!(
                        "derivative inconsistent with finite differences at lambda = {l:.4} (err {err:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Options for the spectral-flow computations.
#[derive(Debug, Clone)]
pub struct SflOptions {
    pub tol: Tolerances,
    /// Samples per segment for the partition method (doubled per refinement).
    /// Defaults to the path's smoothness hint.
    pub base_samples: Option<usize>,
    /// Samples for the crossing scan. Defaults to `max(256, 4·hint)`.
    pub scan_samples: Option<usize>,
    /// Relative width of the forbidden band around ±a in window certificates.
    pub margin: f64,
    pub max_refine_depth: usize,
    /// On a degenerate crossing, retry once on the path perturbed by
    /// `ε·(λ−1/2)·I` instead of failing; the report is flagged.
    pub perturb_degenerate: bool,
}

impl Default for SflOptions {
    fn default() -> Self {
        SflOptions {
            tol: Tolerances::default(),
            base_samples: None,
            scan_samples: None,
            margin: 0.1,
            max_refine_depth: 24,
            perturb_degenerate: false,
        }
    }
}

/// One certified piece of the partition: on `[lambda_lo, lambda_hi]` no
/// eigenvalue comes near ±a, and `count_*` are the eigenvalue counts in
/// `[0, a]` at the two ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSegment {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub a: f64,
    pub count_lo: usize,
    pub count_hi: usize,
}

/// An isolated parameter with nontrivial kernel, together with the kernel
/// frame, the crossing form restricted to it and the form's index data.
#[derive(Debug, Clone)]
pub struct CrossingRecord {
    pub lambda_star: f64,
    pub kernel: DMatrix<f64>,
    pub form: SymMatrix,
    pub index: QuadFormIndex,
    pub regular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SflMethod {
    Partition,
    Crossings,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SflDiagnostics {
    pub eig_evaluations: usize,
    pub max_refine_depth: usize,
    pub scan_samples: usize,
    pub perturbed: bool,
}

/// Integer spectral flow together with the certificates that justify it.
#[derive(Debug, Clone)]
pub struct SflReport {
    pub value: i64,
    pub method: SflMethod,
    pub segments: Vec<WindowSegment>,
    pub crossings: Vec<CrossingRecord>,
    pub diagnostics: SflDiagnostics,
}

fn eigenvalues_at(path: &OperatorPath, lambda: f64) -> Result<Vec<f64>> {
    Ok(sym_eig(&path.at(lambda))?.values)
}

/// Count of eigenvalues in the closed window `[0, a]`, where eigenvalues
/// within `tol_rank · scale` of zero count as zero (the window includes 0).
fn window_count(values: &[f64], a: f64, tol_rank: f64) -> usize {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let z = tol_rank * scale;
    values.iter().filter(|&&v| v >= -z && v <= a).count()
}

struct SegmentJob {
    lo: f64,
    hi: f64,
    depth: usize,
}

/// Spectral flow by the partition/window definition.
///
/// Each segment carries a window radius `a` chosen from the spectral gaps of
/// the pooled sampled eigenvalues (the half-nearest-nonzero candidate is
/// tried first, the above-spectrum window last); a segment is accepted only
/// if the sampled margin certificate also survives a doubling of the sample
/// count and the estimated Lipschitz constant rules out excursions through
/// ±a between samples. Segments that cannot be certified are bisected.
pub fn sfl_partition(path: &OperatorPath, opts: &SflOptions) -> Result<SflReport> {
    let tol = &opts.tol;
    let base = opts.base_samples.unwrap_or(path.smoothness_hint()).max(8);
    let margin = opts.margin;

    let mut jobs = vec![SegmentJob {
        lo: 0.0,
        hi: 1.0,
        depth: 0,
    }];
    let mut segments: Vec<WindowSegment> = Vec::new();
    let mut diag = SflDiagnostics::default();

    while let Some(job) = jobs.pop() {
        diag.max_refine_depth = diag.max_refine_depth.max(job.depth);
        if job.depth > opts.max_refine_depth {
            return Err(Error::numerical(format!(
                "window certification failed near lambda = {:.9} after {} refinements",
                0.5 * (job.lo + job.hi),
                job.depth
            )));
        }
        let samples = (base << job.depth.min(6)).min(4096);
        match certify_segment(path, job.lo, job.hi, samples, margin, tol, &mut diag)? {
            Some(seg) => segments.push(seg),
            None => {
                let mid = 0.5 * (job.lo + job.hi);
                jobs.push(SegmentJob {
                    lo: mid,
                    hi: job.hi,
                    depth: job.depth + 1,
                });
                jobs.push(SegmentJob {
                    lo: job.lo,
                    hi: mid,
                    depth: job.depth + 1,
                });
            }
        }
    }

    segments.sort_by(|a, b| a.lambda_lo.partial_cmp(&b.lambda_lo).unwrap());
    let value: i64 = segments
        .iter()
        .map(|s| s.count_hi as i64 - s.count_lo as i64)
        .sum();
    Ok(SflReport {
        value,
        method: SflMethod::Partition,
        segments,
        crossings: Vec::new(),
        diagnostics: diag,
    })
}

/// Try to certify one segment. Returns the finished segment, or None when it
/// must be bisected.
fn certify_segment(
    path: &OperatorPath,
    lo: f64,
    hi: f64,
    samples: usize,
    margin: f64,
    tol: &Tolerances,
    diag: &mut SflDiagnostics,
) -> Result<Option<WindowSegment>> {
    let sampled = sample_eigs(path, lo, hi, samples, diag)?;
    let Some(a) = choose_window(&sampled, lo, hi, margin, tol) else {
        return Ok(None);
    };
    // Doubling check: the certificate must also hold at twice the density.
    let doubled = sample_eigs(path, lo, hi, samples * 2, diag)?;
    if !certificate_holds(&doubled, a, lo, hi, margin) {
        return Ok(None);
    }
    let count_lo = window_count(&sampled[0], a, tol.tol_rank);
    let count_hi = window_count(sampled.last().unwrap(), a, tol.tol_rank);
    Ok(Some(WindowSegment {
        lambda_lo: lo,
        lambda_hi: hi,
        a,
        count_lo,
        count_hi,
    }))
}

fn sample_eigs(
    path: &OperatorPath,
    lo: f64,
    hi: f64,
    samples: usize,
    diag: &mut SflDiagnostics,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(samples + 1);
    for i in 0..=samples {
        let l = lo + (hi - lo) * i as f64 / samples as f64;
        out.push(eigenvalues_at(path, l)?);
        diag.eig_evaluations += 1;
    }
    Ok(out)
}

/// Pick the smallest admissible window radius for the sampled spectra, or
/// None if no candidate certifies.
fn choose_window(
    sampled: &[Vec<f64>],
    lo: f64,
    hi: f64,
    margin: f64,
    tol: &Tolerances,
) -> Option<f64> {
    let mut pooled: Vec<f64> = sampled
        .iter()
        .flat_map(|vs| vs.iter().map(|v| v.abs()))
        .collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pool_max = *pooled.last().unwrap();
    let floor = 10.0 * tol.tol_rank * pool_max.max(1.0);

    let mut candidates: Vec<f64> = Vec::new();
    // Half the median of the per-sample nearest nonzero eigenvalue
    // magnitudes: the window that hugs the spectral gap around zero.
    let mut nearest: Vec<f64> = sampled
        .iter()
        .filter_map(|vs| {
            let scale = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
            let z = tol.tol_rank * scale;
            vs.iter()
                .map(|v| v.abs())
                .filter(|&v| v > z)
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                })
        })
        .collect();
    if !nearest.is_empty() {
        nearest.sort_by(|a, b| a.partial_cmp(b).unwrap());
        candidates.push(0.5 * nearest[nearest.len() / 2]);
    }
    // Midpoints of spectral gaps of the pooled magnitudes, smallest first.
    for w in pooled.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if b - a >= 2.0 * margin * mid && mid > floor {
            candidates.push(mid);
        }
        if candidates.len() > 40 {
            break;
        }
    }
    // Above-spectrum window; always certifiable for a margin below 1.
    candidates.push((pool_max + 1.0) / (1.0 - 2.0 * margin));

    candidates
        .into_iter()
        .filter(|&a| a > floor)
        .find(|&a| certificate_holds(sampled, a, lo, hi, margin))
}

fn certificate_holds(sampled: &[Vec<f64>], a: f64, lo: f64, hi: f64, margin: f64) -> bool {
    let band = margin * a;
    for vs in sampled {
        for v in vs {
            if (v.abs() - a).abs() < band {
                return false;
            }
        }
    }
    // Between samples an eigenvalue moves at most L·h (Weyl); crossing the
    // certified band would take a move of at least 2·margin·a.
    let h = (hi - lo) / (sampled.len() - 1) as f64;
    let mut lipschitz = 0.0_f64;
    for w in sampled.windows(2) {
        for (x, y) in w[0].iter().zip(w[1].iter()) {
            lipschitz = lipschitz.max((y - x).abs() / h);
        }
    }
    lipschitz * h <= 2.0 * band
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CrossingRole {
    Start,
    Interior,
    End,
}

/// Spectral flow by locating crossings and summing their crossing-form
/// contributions: `−m⁻(Γ₀) + Σ sgn(Γ) + m⁻(−Γ₁)`.
///
/// Requires the path derivative and regular crossings. The result is
/// cross-checked against the net change of the nonnegative eigenvalue count
/// between the endpoints, which in finite dimensions must match exactly; a
/// mismatch means the scan missed a crossing and is reported as a failure.
pub fn sfl_crossings(path: &OperatorPath, opts: &SflOptions) -> Result<SflReport> {
    if !path.has_deriv() {
        return Err(Error::invalid(
            "crossing-form method requires a path derivative",
        ));
    }
    sfl_crossings_inner(path, opts, opts.perturb_degenerate)
}

fn sfl_crossings_inner(
    path: &OperatorPath,
    opts: &SflOptions,
    allow_perturb: bool,
) -> Result<SflReport> {
    let tol = &opts.tol;
    let scan_samples = opts
        .scan_samples
        .unwrap_or_else(|| (4 * path.smoothness_hint()).max(256));

    // Reference scale for the zero threshold of the dip scan.
    let mut scale_ref = 1.0_f64;
    for i in 0..=16 {
        scale_ref = scale_ref.max(path.at(i as f64 / 16.0).scale());
    }
    let zero_tol = tol.tol_rank * scale_ref;

    let g = |l: f64| {
        sym_eig(&path.at(l))
            .map(|e| e.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())))
            .unwrap_or(f64::INFINITY)
    };
    let cfg = ScanConfig {
        samples: scan_samples,
        resolution: tol.lambda_res,
        zero_tol,
        continuum_run: 5,
        continuum_tol: zero_tol,
    };
    let dips = locate_zero_dips(g, &cfg)?;

    let mut crossings = Vec::new();
    let mut value: i64 = 0;
    for dip in &dips {
        let (lambda_star, role) = if dip.lambda <= tol.lambda_res {
            (0.0, CrossingRole::Start)
        } else if dip.lambda >= 1.0 - tol.lambda_res {
            (1.0, CrossingRole::End)
        } else {
            (dip.lambda, CrossingRole::Interior)
        };
        let m = path.at(lambda_star);
        let kernel = kernel_basis(&m, tol.tol_rank)?;
        if kernel.ncols() == 0 {
            continue;
        }
        let form = path.deriv_at(lambda_star).unwrap().restrict(&kernel);
        let index = quadform_index(&form, tol.tol_rank)?;
        let record = CrossingRecord {
            lambda_star,
            kernel,
            form,
            index,
            regular: !index.degenerate,
        };
        if index.degenerate {
            if allow_perturb {
                return perturbed_retry(path, opts, scale_ref);
            }
            return Err(Error::DegenerateCrossing(Box::new(record)));
        }
        value += match role {
            CrossingRole::Start => -(index.morse_index as i64),
            CrossingRole::Interior => index.signature,
            CrossingRole::End => index.positive_count() as i64,
        };
        crossings.push(record);
    }

    // Completeness certificate: in finite dimensions the spectral flow equals
    // the net change of the count of eigenvalues in [0, ∞).
    let nonneg = |l: f64| -> Result<i64> {
        let vals = eigenvalues_at(path, l)?;
        let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let z = tol.tol_rank * scale;
        Ok(vals.iter().filter(|&&v| v >= -z).count() as i64)
    };
    let check = nonneg(1.0)? - nonneg(0.0)?;
    if check != value {
        return Err(Error::numerical(format!(
            "crossing scan inconsistent with endpoint spectra ({value} vs {check}); \
             increase scan_samples"
        )));
    }

    Ok(SflReport {
        value,
        method: SflMethod::Crossings,
        segments: Vec::new(),
        crossings,
        diagnostics: SflDiagnostics {
            scan_samples,
            ..Default::default()
        },
    })
}

fn perturbed_retry(path: &OperatorPath, opts: &SflOptions, scale_ref: f64) -> Result<SflReport> {
    let eps = 1e-6 * scale_ref;
    let dim = path.dim();
    let tilt = OperatorPath::new(dim, move |l| {
        SymMatrix::identity(dim).scaled(eps * (l - 0.5))
    })
    .with_deriv(move |_| SymMatrix::identity(dim).scaled(eps));
    let perturbed = path.add(&tilt)?;
    let mut report = sfl_crossings_inner(&perturbed, opts, false)?;
    report.diagnostics.perturbed = true;
    Ok(report)
}

/// Concatenation `p1 ∗ p2`, reparametrised so each factor runs at double
/// speed. The endpoint of `p1` must match the start of `p2`.
pub fn concatenate(p1: &OperatorPath, p2: &OperatorPath, tol: &Tolerances) -> Result<OperatorPath> {
    if p1.dim() != p2.dim() {
        return Err(Error::invalid("concatenation requires equal dimensions"));
    }
    let end = p1.at(1.0);
    let start = p2.at(0.0);
    let gap = operator_norm(&(end.as_matrix() - start.as_matrix()));
    if gap > tol.tol_orth * end.scale() {
        return Err(Error::invalid(format!(
            "endpoint mismatch in concatenation (norm {gap:.3e})"
        )));
    }
    let (a, b) = (p1.clone(), p2.clone());
    let eval = move |l: f64| {
        if l <= 0.5 {
            a.at(2.0 * l)
        } else {
            b.at(2.0 * l - 1.0)
        }
    };
    let deriv = if p1.has_deriv() && p2.has_deriv() {
        let (a, b) = (p1.clone(), p2.clone());
        let f: MatrixFn = Arc::new(move |l: f64| {
            if l <= 0.5 {
                a.deriv_at(2.0 * l).unwrap().scaled(2.0)
            } else {
                b.deriv_at(2.0 * l - 1.0).unwrap().scaled(2.0)
            }
        });
        Some(f)
    } else {
        None
    };
    Ok(OperatorPath {
        dim: p1.dim(),
        eval: Arc::new(eval),
        deriv,
        smoothness_hint: p1.smoothness_hint() + p2.smoothness_hint(),
    })
}

/// The reverse path `λ ↦ p(1−λ)`; its spectral flow is the negative.
pub fn reverse(p: &OperatorPath) -> OperatorPath {
    let eval = p.eval.clone();
    let deriv = p.deriv.clone().map(|d| {
        let f: MatrixFn = Arc::new(move |l: f64| d(1.0 - l).scaled(-1.0));
        f
    });
    OperatorPath {
        dim: p.dim,
        eval: Arc::new(move |l| eval(1.0 - l)),
        deriv,
        smoothness_hint: p.smoothness_hint,
    }
}

/// The bounded transform `M ↦ M(I + M²)^{−1/2}`: same eigenvectors, each
/// eigenvalue mapped through `μ ↦ μ/√(1+μ²)`, output norm below 1.
pub fn riesz_transform(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(m)?;
    let n = m.dim();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let v = eig.values[i];
            v / (1.0 + v * v).sqrt()
        } else {
            0.0
        }
    });
    SymMatrix::new(&eig.vectors * d * eig.vectors.transpose())
}

/// Pointwise bounded transform of a whole path. The transform preserves
/// eigenvalue signs, so the spectral flow is unchanged. No derivative is
/// carried; use the partition method on the result.
pub fn riesz_path(p: &OperatorPath) -> OperatorPath {
    let eval = p.eval.clone();
    OperatorPath {
        dim: p.dim,
        eval: Arc::new(move |l| riesz_transform(&eval(l)).expect("transform of finite matrix")),
        deriv: None,
        smoothness_hint: p.smoothness_hint,
    }
}

/// Half the smallest nonzero eigenvalue magnitude of `t`, the radius used by
/// the normalisation paths. Fails when `t` has no nonzero eigenvalue.
pub fn normalization_radius(t: &SymMatrix, tol: &Tolerances) -> Result<f64> {
    let eig = sym_eig(t)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let z = tol.tol_rank * scale;
    eig.values
        .iter()
        .map(|v| v.abs())
        .filter(|&v| v > z)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .map(|min| 0.5 * min)
        .ok_or_else(|| Error::invalid("operator has no nonzero eigenvalue"))
}

/// The path `t ↦ T + t·I` for `t ∈ [−δ(T), δ(T)]` rescaled to [0, 1]. It has
/// exactly one crossing (at the midpoint) iff `ker T ≠ {0}`, and spectral
/// flow `dim ker T`.
pub fn normalization_path(t: &SymMatrix, tol: &Tolerances) -> Result<OperatorPath> {
    let delta = normalization_radius(t, tol)?;
    let dim = t.dim();
    let t0 = t.clone();
    let t1 = t.clone();
    Ok(OperatorPath::new(dim, move |l| {
        t0.add(&SymMatrix::identity(dim).scaled((2.0 * l - 1.0) * delta))
    })
    .with_deriv(move |_| SymMatrix::identity(t1.dim()).scaled(2.0 * delta)))
}

/// The second half of the normalisation path, `t ∈ [0, δ(T)]`; its spectral
/// flow vanishes.
pub fn half_normalization_path(t: &SymMatrix, tol: &Tolerances) -> Result<OperatorPath> {
    let delta = normalization_radius(t, tol)?;
    let dim = t.dim();
    let t0 = t.clone();
    let t1 = t.clone();
    Ok(OperatorPath::new(dim, move |l| {
        t0.add(&SymMatrix::identity(dim).scaled(l * delta))
    })
    .with_deriv(move |_| SymMatrix::identity(t1.dim()).scaled(delta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SflOptions {
        SflOptions::default()
    }

    fn diag_path(entries: &'static [fn(f64) -> f64]) -> OperatorPath {
        let dim = entries.len();
        OperatorPath::new(dim, move |l| {
            SymMatrix::diagonal(&entries.iter().map(|f| f(l)).collect::<Vec<_>>())
        })
        .with_deriv(move |l| {
            let h = 1e-7;
            let d: Vec<f64> = entries
                .iter()
                .map(|f| (f((l + h).min(1.0)) - f((l - h).max(0.0))) / (((l + h).min(1.0)) - ((l - h).max(0.0))))
                .collect();
            SymMatrix::diagonal(&d)
        })
    }

    #[test]
    fn partition_constant_invertible_path() {
        let p = OperatorPath::constant(SymMatrix::diagonal(&[1.0, -1.0]));
        let r = sfl_partition(&p, &opts()).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn partition_np_realization() {
        // diag(λ−1/2, 1, −1): one upward crossing.
        let p = diag_path(&[|l| l - 0.5, |_| 1.0, |_| -1.0]);
        let r = sfl_partition(&p, &opts()).unwrap();
        assert_eq!(r.value, 1);
        // Certificates telescope: the sum over segments is the value.
        let s: i64 = r
            .segments
            .iter()
            .map(|s| s.count_hi as i64 - s.count_lo as i64)
            .sum();
        assert_eq!(s, r.value);
    }

    #[test]
    fn partition_two_branches_cancel() {
        // Oracle: branch λ−1/2 crosses upward (+1), branch 0.9−λ crosses
        // downward (−1); net 0.
        let p = diag_path(&[|l| l - 0.5, |l| 0.9 - l]);
        let r = sfl_partition(&p, &opts()).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn crossings_single_upward_branch() {
        let p = diag_path(&[|l| l - 0.5, |_| 1.0]);
        let r = sfl_crossings(&p, &opts()).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.crossings.len(), 1);
        let c = &r.crossings[0];
        assert!((c.lambda_star - 0.5).abs() < 1e-8);
        assert_eq!(c.kernel.ncols(), 1);
        assert_eq!(c.index.signature, 1);
    }

    #[test]
    fn crossings_normalization_full_and_half() {
        let t = SymMatrix::diagonal(&[0.0, 0.0, 3.0]);
        let tol = Tolerances::default();
        let full = normalization_path(&t, &tol).unwrap();
        let r = sfl_crossings(&full, &opts()).unwrap();
        assert_eq!(r.value, 2);
        assert_eq!(r.crossings.len(), 1);
        assert_eq!(r.crossings[0].kernel.ncols(), 2);
        // The crossing form is 2δ·I on the kernel.
        assert_eq!(r.crossings[0].index.signature, 2);

        let half = half_normalization_path(&t, &tol).unwrap();
        let r = sfl_crossings(&half, &opts()).unwrap();
        assert_eq!(r.value, 0);

        let rp = sfl_partition(&full, &opts()).unwrap();
        assert_eq!(rp.value, 2);
        let rp = sfl_partition(&half, &opts()).unwrap();
        assert_eq!(rp.value, 0);
    }

    #[test]
    fn normalization_invertible_has_zero_flow() {
        let t = SymMatrix::diagonal(&[1.0, -1.0]);
        let tol = Tolerances::default();
        let p = normalization_path(&t, &tol).unwrap();
        assert_eq!(sfl_crossings(&p, &opts()).unwrap().value, 0);
    }

    #[test]
    fn normalization_rejects_zero_operator() {
        let t = SymMatrix::zeros(2);
        assert!(matches!(
            normalization_path(&t, &Tolerances::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn concatenation_examples() {
        let tol = Tolerances::default();
        // p ∗ constant(p(1)) leaves the flow unchanged.
        let p = diag_path(&[|l| l - 0.5, |_| 1.0]);
        let c = OperatorPath::constant(p.at(1.0));
        let cat = concatenate(&p, &c, &tol).unwrap();
        assert_eq!(sfl_partition(&cat, &opts()).unwrap().value, 1);

        // diag(λ−1/2,1) ∗ diag(1/2+λ,1): flows 1 and 0.
        let p2 = diag_path(&[|l| 0.5 + l, |_| 1.0]);
        let cat = concatenate(&p, &p2, &tol).unwrap();
        assert_eq!(sfl_partition(&cat, &opts()).unwrap().value, 1);

        // Splitting the upward path and re-concatenating is additive.
        let left = p.restrict(0.0, 0.3);
        let right = p.restrict(0.3, 1.0);
        let cat = concatenate(&left, &right, &tol).unwrap();
        assert_eq!(sfl_partition(&cat, &opts()).unwrap().value, 1);
        assert_eq!(
            sfl_partition(&left, &opts()).unwrap().value
                + sfl_partition(&right, &opts()).unwrap().value,
            1
        );
    }

    #[test]
    fn concatenation_rejects_mismatched_endpoints() {
        let tol = Tolerances::default();
        let p1 = OperatorPath::constant(SymMatrix::diagonal(&[1.0]));
        let p2 = OperatorPath::constant(SymMatrix::diagonal(&[2.0]));
        assert!(concatenate(&p1, &p2, &tol).is_err());
    }

    #[test]
    fn reversal_negates_flow() {
        let p = diag_path(&[|l| l - 0.5, |_| 1.0]);
        let r = reverse(&p);
        assert_eq!(sfl_crossings(&r, &opts()).unwrap().value, -1);
        // reverse ∘ reverse agrees with the original on samples.
        let rr = reverse(&r);
        for i in 0..=8 {
            let l = i as f64 / 8.0;
            assert_eq!(rr.at(l), p.at(l));
        }
        // Reversing a constant path changes nothing.
        let c = OperatorPath::constant(SymMatrix::diagonal(&[2.0, -1.0]));
        let rc = reverse(&c);
        for i in 0..=4 {
            let l = i as f64 / 4.0;
            assert_eq!(rc.at(l), c.at(l));
        }
    }

    #[test]
    fn riesz_transform_values() {
        let z = riesz_transform(&SymMatrix::zeros(2)).unwrap();
        assert_eq!(z, SymMatrix::zeros(2));

        let m = riesz_transform(&SymMatrix::diagonal(&[1.0])).unwrap();
        assert!((m.as_matrix()[(0, 0)] - 1.0 / 2.0_f64.sqrt()).abs() < 1e-14);

        let m = riesz_transform(&SymMatrix::diagonal(&[-3.0, 0.0, 4.0])).unwrap();
        let eig = sym_eig(&m).unwrap();
        assert!((eig.values[0] + 3.0 / 10.0_f64.sqrt()).abs() < 1e-14);
        assert!(eig.values[1].abs() < 1e-14);
        assert!((eig.values[2] - 4.0 / 17.0_f64.sqrt()).abs() < 1e-14);
        assert!(m.operator_norm() < 1.0);
    }

    #[test]
    fn degenerate_crossing_is_reported() {
        // Branch λ ↦ (λ−1/2)² touches zero with vanishing derivative … use a
        // branch whose derivative vanishes at the crossing instead: (λ−1/2)³.
        let p = OperatorPath::new(1, |l: f64| SymMatrix::diagonal(&[(l - 0.5_f64).powi(3)]))
            .with_deriv(|l: f64| SymMatrix::diagonal(&[3.0 * (l - 0.5_f64).powi(2)]));
        let err = sfl_crossings(&p, &opts()).unwrap_err();
        assert!(matches!(err, Error::DegenerateCrossing(_)));

        let mut o = opts();
        o.perturb_degenerate = true;
        let r = sfl_crossings(&p, &o).unwrap();
        assert!(r.diagnostics.perturbed);
        assert_eq!(r.value, 1);
    }

    #[test]
    fn endpoint_crossing_convention() {
        // Eigenvalue leaving zero upward at λ=0 contributes nothing.
        let p = diag_path(&[|l| l, |_| 1.0]);
        assert_eq!(sfl_crossings(&p, &opts()).unwrap().value, 0);
        // Eigenvalue arriving at zero from below at λ=1 contributes +1.
        let p = diag_path(&[|l| l - 1.0, |_| 1.0]);
        assert_eq!(sfl_crossings(&p, &opts()).unwrap().value, 1);
    }

    #[test]
    fn validate_accepts_consistent_derivative() {
        let p = diag_path(&[|l| (std::f64::consts::PI * l).sin(), |_| 1.0]);
        p.validate(32).unwrap();
    }
}
