//! Shared crossing localisation: scan a nonnegative detection function over
//! [0,1], isolate its dips and refine each by golden-section search.
//!
//! The detection functions used by the callers (smallest eigenvalue
//! magnitude, smallest singular value of an intersection pencil) vanish
//! exactly at the parameters of interest and grow linearly away from them,
//! so a sampled local minimum plus a bracketed golden-section search
//! localises each zero to the requested parameter resolution.

use crate::error::{Error, Result};
use rayon::prelude::*;

pub(crate) struct ScanConfig {
    /// Number of uniform samples over [0,1].
    pub samples: usize,
    /// Target width of the refinement bracket.
    pub resolution: f64,
    /// A refined minimum below this value is accepted as a zero.
    pub zero_tol: f64,
    /// This many consecutive samples below `continuum_tol` are treated as a
    /// continuum of zeros rather than isolated ones.
    pub continuum_run: usize,
    pub continuum_tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dip {
    pub lambda: f64,
    pub value: f64,
}

/// Locate the zeros of `g` in [0,1].
///
/// Returns the refined dip locations sorted by parameter. Dips whose refined
/// value stays above `zero_tol` are discarded. Distinct dips that collapse
/// within `2 · resolution` of each other are reported as a numerical
/// failure; duplicates arising from one zero seen through adjacent brackets
/// are merged silently.
pub(crate) fn locate_zero_dips<F>(g: F, cfg: &ScanConfig) -> Result<Vec<Dip>>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = cfg.samples.max(8);
    let h = 1.0 / n as f64;
    let values: Vec<f64> = (0..=n).into_par_iter().map(|i| g(i as f64 * h)).collect();

    // Continuum guard: a long run of near-zero samples means the zero set
    // has interior, which violates the isolated-crossings hypothesis.
    let mut run = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v <= cfg.continuum_tol {
            run += 1;
            if run >= cfg.continuum_run {
                return Err(Error::invalid(format!(
                    "zero set is not isolated: {} consecutive samples below {:.1e} near lambda = {:.6}",
                    run,
                    cfg.continuum_tol,
                    i as f64 * h
                )));
            }
        } else {
            run = 0;
        }
    }

    // Candidate brackets around sampled local minima, plus the endpoints.
    let mut brackets: Vec<(usize, f64, f64)> = Vec::new();
    if values[0] <= values[1] {
        brackets.push((0, 0.0, h));
    }
    for i in 1..n {
        if values[i] < values[i - 1] && values[i] <= values[i + 1] {
            brackets.push((i, (i - 1) as f64 * h, (i + 1) as f64 * h));
        }
    }
    if values[n] < values[n - 1] {
        brackets.push((n, 1.0 - h, 1.0));
    }

    let mut dips: Vec<(usize, Dip)> = Vec::new();
    for (idx, lo, hi) in brackets {
        let (lambda, value) = golden_section_min(&g, lo, hi, cfg.resolution);
        if value <= cfg.zero_tol {
            dips.push((idx, Dip { lambda, value }));
        }
    }
    dips.sort_by(|a, b| a.1.lambda.partial_cmp(&b.1.lambda).unwrap());

    // Merge duplicates from adjacent brackets; flag genuinely distinct dips
    // that cannot be separated at the working resolution.
    let mut out: Vec<(usize, Dip)> = Vec::new();
    for (idx, dip) in dips {
        if let Some(&(prev_idx, prev)) = out.last().as_deref() {
            if (dip.lambda - prev.lambda).abs() <= 2.0 * cfg.resolution {
                if idx > prev_idx + 2 {
                    return Err(Error::numerical(format!(
                        "two crossings within 2x resolution near lambda = {:.12}",
                        dip.lambda
                    )));
                }
                if dip.value < prev.value {
                    *out.last_mut().unwrap() = (idx, dip);
                }
                continue;
            }
        }
        out.push((idx, dip));
    }
    Ok(out.into_iter().map(|(_, d)| d).collect())
}

/// Golden-section search for the minimum of a unimodal-on-the-bracket
/// function. Deterministic; returns the midpoint of the final bracket and
/// the function value there.
pub(crate) fn golden_section_min<F>(g: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, g(mid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(samples: usize) -> ScanConfig {
        ScanConfig {
            samples,
            resolution: 1e-10,
            zero_tol: 1e-8,
            continuum_run: 5,
            continuum_tol: 1e-6,
        }
    }

    #[test]
    fn finds_interior_zero() {
        let g = |x: f64| (x - 0.37).abs();
        let dips = locate_zero_dips(g, &cfg(128)).unwrap();
        assert_eq!(dips.len(), 1);
        assert!((dips[0].lambda - 0.37).abs() < 1e-9);
    }

    #[test]
    fn finds_endpoint_zeros() {
        let g = |x: f64| x.min(1.0 - x);
        let dips = locate_zero_dips(g, &cfg(128)).unwrap();
        assert_eq!(dips.len(), 2);
        assert!(dips[0].lambda < 1e-9);
        assert!(dips[1].lambda > 1.0 - 1e-9);
    }

    #[test]
    fn ignores_shallow_minima() {
        let g = |x: f64| 0.5 + (x - 0.5) * (x - 0.5);
        let dips = locate_zero_dips(g, &cfg(64)).unwrap();
        assert!(dips.is_empty());
    }

    #[test]
    fn detects_continuum() {
        let g = |x: f64| if x > 0.3 && x < 0.7 { 0.0 } else { 1.0 };
        assert!(locate_zero_dips(g, &cfg(128)).is_err());
    }

    #[test]
    fn zero_at_sample_point_reported_once() {
        let g = |x: f64| (x - 0.5).abs();
        let dips = locate_zero_dips(g, &cfg(128)).unwrap();
        assert_eq!(dips.len(), 1);
    }
}
