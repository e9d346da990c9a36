//! The gap metric between symmetric matrices: operator-norm distance of the
//! orthogonal projections onto their graphs, its one-sided variant, and a
//! checker for the perturbation inequality with constant 2√2.

use crate::error::{Error, Result};
use crate::numerics::{operator_norm, sym_eig, SymMatrix};
use nalgebra::DMatrix;

/// Orthogonal projection of `R^{2n}` onto the graph `{(u, Mu)}` of a
/// symmetric matrix.
#[derive(Debug, Clone)]
pub struct GraphProjection {
    pub dim: usize,
    pub proj: SymMatrix,
}

/// Graph projection from the normal-equation formula: with `G = (I; M)`
/// stacked, `P = G (I + M²)^{−1} Gᵀ`. The middle factor is computed through
/// the eigendecomposition of `M`, so `P` is symmetric by construction.
pub fn graph_projection(m: &SymMatrix) -> Result<GraphProjection> {
    let n = m.dim();
    let eig = sym_eig(m)?;
    // C = (I + M²)^{−1} shares eigenvectors with M.
    let inv = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / (1.0 + eig.values[i] * eig.values[i])
        } else {
            0.0
        }
    });
    let c = &eig.vectors * inv * eig.vectors.transpose();
    let mc = m.as_matrix() * &c;
    let mcm = &mc * m.as_matrix();

    let mut p = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = c[(i, j)];
            p[(i, n + j)] = mc[(j, i)]; // (C M)ᵀ = M C, both symmetric factors commute
            p[(n + i, j)] = mc[(i, j)];
            p[(n + i, n + j)] = mcm[(i, j)];
        }
    }
    Ok(GraphProjection {
        dim: n,
        proj: SymMatrix::new(p)?,
    })
}

/// Gap distance `d_G(T, S) = ‖P_T − P_S‖ ∈ [0, 1]`.
///
/// The projection difference is sign-canonicalised before the norm, so the
/// metric is symmetric to the last bit.
pub fn gap_distance(t: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    if t.dim() != s.dim() {
        return Err(Error::invalid("gap distance requires equal dimensions"));
    }
    let pt = graph_projection(t)?;
    let ps = graph_projection(s)?;
    let mut diff = pt.proj.as_matrix() - ps.proj.as_matrix();
    if let Some(first) = diff.iter().find(|&&x| x != 0.0) {
        if *first < 0.0 {
            diff = -diff;
        }
    }
    Ok(operator_norm(&diff))
}

/// One-sided gap `δ(T, S)`: the supremum over unit graph vectors of `T` of
/// the distance to the graph of `S`, computed as `‖(I − P_S) P_T‖`. The gap
/// distance is the maximum of the two one-sided values.
pub fn gap_delta(t: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    if t.dim() != s.dim() {
        return Err(Error::invalid("gap delta requires equal dimensions"));
    }
    let pt = graph_projection(t)?;
    let ps = graph_projection(s)?;
    let id = DMatrix::<f64>::identity(2 * t.dim(), 2 * t.dim());
    let m = (id - ps.proj.as_matrix()) * pt.proj.as_matrix();
    Ok(operator_norm(&m))
}

/// Outcome of the perturbation inequality
/// `d_G(T+A, S+B) ≤ 2√2 √(1+‖A‖²) √(1+‖B‖²) (d_G(T,S) + ‖A−B‖)`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Absolute slack allowed on the inequality; the constant is generous, so no
/// relative scaling is needed.
pub const PERTURBATION_SLACK: f64 = 1e-9;

pub fn perturbation_inequality_check(
    t: &SymMatrix,
    s: &SymMatrix,
    a: &SymMatrix,
    b: &SymMatrix,
) -> Result<PerturbationCheck> {
    let n = t.dim();
    if s.dim() != n || a.dim() != n || b.dim() != n {
        return Err(Error::invalid("all four matrices must share a dimension"));
    }
    let lhs = gap_distance(&t.add(a), &s.add(b))?;
    let na = a.operator_norm();
    let nb = b.operator_norm();
    let diff = operator_norm(&(a.as_matrix() - b.as_matrix()));
    let rhs = 2.0
        * 2.0_f64.sqrt()
        * (1.0 + na * na).sqrt()
        * (1.0 + nb * nb).sqrt()
        * (gap_distance(t, s)? + diff);
    Ok(PerturbationCheck {
        lhs,
        rhs,
        slack: rhs - lhs,
        holds: lhs <= rhs + PERTURBATION_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Closed form for 1×1 operators: graphs are lines at angles arctan t and
    /// arctan s, and the projection distance of two lines is |sin Δθ|.
    fn scalar_gap_oracle(t: f64, s: f64) -> f64 {
        (t.atan() - s.atan()).sin().abs()
    }

    fn random_sym(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-2.0..2.0));
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn projection_of_zero_operator() {
        let p = graph_projection(&SymMatrix::zeros(1)).unwrap();
        let expect = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert!(operator_norm(&(p.proj.as_matrix() - expect)) < 1e-14);
    }

    #[test]
    fn projection_of_identity_scalar() {
        // Graph of 1 is the 45° line.
        let p = graph_projection(&SymMatrix::diagonal(&[1.0])).unwrap();
        let expect = dmatrix![0.5, 0.5; 0.5, 0.5];
        assert!(operator_norm(&(p.proj.as_matrix() - expect)) < 1e-14);
    }

    #[test]
    fn projection_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let dim = rng.gen_range(1..6);
            let m = random_sym(&mut rng, dim);
            let p = graph_projection(&m).unwrap();
            let pm = p.proj.as_matrix();
            // Idempotent and of rank n.
            assert!(operator_norm(&(pm * pm - pm)) < 1e-10);
            let eig = sym_eig(&p.proj).unwrap();
            let rank = eig.values.iter().filter(|&&v| v > 0.5).count();
            assert_eq!(rank, dim);
            // Fixes graph vectors (u, Mu).
            let u = DMatrix::from_fn(dim, 1, |_, _| rng.gen_range(-1.0..1.0));
            let mu = m.as_matrix() * &u;
            let mut g = DMatrix::zeros(2 * dim, 1);
            for i in 0..dim {
                g[(i, 0)] = u[(i, 0)];
                g[(dim + i, 0)] = mu[(i, 0)];
            }
            assert!(operator_norm(&(pm * &g - &g)) < 1e-10 * m.scale());
        }
    }

    #[test]
    fn gap_distance_examples() {
        let t = SymMatrix::diagonal(&[0.7, -0.2]);
        assert!(gap_distance(&t, &t).unwrap() < 1e-14);

        let d = gap_distance(&SymMatrix::diagonal(&[0.0]), &SymMatrix::diagonal(&[1.0])).unwrap();
        assert!((d - 2.0_f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_distance_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let t = rng.gen_range(-5.0..5.0);
            let s = rng.gen_range(-5.0..5.0);
            let d = gap_distance(&SymMatrix::diagonal(&[t]), &SymMatrix::diagonal(&[s])).unwrap();
            assert!((d - scalar_gap_oracle(t, s)).abs() < 1e-12, "t={t} s={s}");
        }
    }

    #[test]
    fn gap_delta_examples() {
        let t = SymMatrix::diagonal(&[0.3]);
        assert!(gap_delta(&t, &t).unwrap() < 1e-12);

        let zero = SymMatrix::diagonal(&[0.0]);
        let one = SymMatrix::diagonal(&[1.0]);
        let d01 = gap_delta(&zero, &one).unwrap();
        let d10 = gap_delta(&one, &zero).unwrap();
        assert!((d01 - 2.0_f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((d10 - 2.0_f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_delta_max_equals_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let dim = rng.gen_range(1..6);
            let t = random_sym(&mut rng, dim);
            let s = random_sym(&mut rng, dim);
            let d = gap_distance(&t, &s).unwrap();
            let m = gap_delta(&t, &s).unwrap().max(gap_delta(&s, &t).unwrap());
            assert!((d - m).abs() <= 1e-10, "d={d} max-delta={m}");
        }
    }

    #[test]
    fn gap_dimension_mismatch_rejected() {
        let t = SymMatrix::zeros(2);
        let s = SymMatrix::zeros(3);
        assert!(matches!(
            gap_distance(&t, &s),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn perturbation_inequality_trivial_and_scalar() {
        let t = SymMatrix::diagonal(&[0.4, -0.1]);
        let a = SymMatrix::diagonal(&[0.2, 0.3]);
        let c = perturbation_inequality_check(&t, &t, &a, &a).unwrap();
        assert!(c.lhs < 1e-12);
        assert!(c.holds);

        // T = S = 0, A = 0, B = 1: lhs is the 0°/45° line distance √2/2,
        // rhs = 2√2·√2·1 = 4.
        let zero = SymMatrix::diagonal(&[0.0]);
        let b = SymMatrix::diagonal(&[1.0]);
        let c = perturbation_inequality_check(&zero, &zero, &zero, &b).unwrap();
        assert!((c.lhs - 2.0_f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((c.rhs - 4.0).abs() < 1e-12);
        assert!(c.holds && c.slack > 3.0);
    }

    #[test]
    fn metric_axioms_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..60 {
            let dim = rng.gen_range(1..5);
            let t = random_sym(&mut rng, dim);
            let s = random_sym(&mut rng, dim);
            let r = random_sym(&mut rng, dim);
            let dts = gap_distance(&t, &s).unwrap();
            let dst = gap_distance(&s, &t).unwrap();
            assert_eq!(dts, dst);
            assert!(dts <= 1.0 + 1e-12);
            let dtr = gap_distance(&t, &r).unwrap();
            let dsr = gap_distance(&s, &r).unwrap();
            assert!(dtr <= dts + dsr + 1e-10);
        }
    }

    #[test]
    fn norm_convergence_implies_gap_convergence() {
        // d_G(M_k, M) → 0 along ‖M_k − M‖ → 0 (the topologies agree on
        // bounded operators); no pointwise inequality is asserted.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_sym(&mut rng, 4);
        let e = random_sym(&mut rng, 4);
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let t = m.add(&e.scaled(10f64.powi(-k)));
            let d = gap_distance(&t, &m).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert!(last < 1e-5);
    }
}
