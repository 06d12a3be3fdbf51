//! Floating-point support: an adaptive Dormand-Prince 5(4) integrator over
//! C^4 with invariant-drift monitoring, one-step Newton projection onto the
//! surface, and a Durand-Kerner root finder for complex polynomials.

use crate::poly::Sym;
use crate::surface::{coord_index, Surface};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NumericError {
    #[error("surface residual {residual:.3e} exceeded tolerance {tol:.3e} at step {step}")]
    ResidualBlowup { residual: f64, tol: f64, step: usize },
    #[error("step size underflow after {0} steps")]
    StepUnderflow(usize),
    #[error("root finding did not converge")]
    RootsDiverged,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded 4th-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

type State = [Complex64; 4];

fn axpy(y: &State, h: f64, coeffs: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in coeffs {
        for i in 0..4 {
            out[i] += k[i] * h * *c;
        }
    }
    out
}

pub struct FlowOutcome {
    pub endpoint: State,
    pub max_residual: f64,
    pub steps: usize,
}

/// Integrate dZ/ds = t * f(Z) for s in [0, 1] (the straight segment from 0 to
/// t in the time plane), monitoring the surface residual, optionally snapping
/// back with one Newton step per accepted step.
pub fn integrate_flow(
    s: &Surface,
    f: &dyn Fn(&State) -> State,
    t: Complex64,
    start: State,
    tol: f64,
    project: bool,
) -> Result<FlowOutcome, NumericError> {
    let rhs = |z: &State| -> State {
        let v = f(z);
        [v[0] * t, v[1] * t, v[2] * t, v[3] * t]
    };
    let mut z = start;
    let mut sigma = 0.0f64;
    let mut h = 0.05f64;
    let rel_tol = 1e-10f64;
    let abs_tol = 1e-12f64;
    let mut steps = 0usize;
    let mut max_residual = residual(s, &z);

    while sigma < 1.0 {
        if h < 1e-14 {
            return Err(NumericError::StepUnderflow(steps));
        }
        if sigma + h > 1.0 {
            h = 1.0 - sigma;
        }
        let k1 = rhs(&z);
        let k2 = rhs(&axpy(&z, h, &[(A21, &k1)]));
        let k3 = rhs(&axpy(&z, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&axpy(&z, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&axpy(&z, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&axpy(&z, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let z5 = axpy(&z, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(&z5);
        let z4 = axpy(&z, h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);

        let mut err = 0.0f64;
        for i in 0..4 {
            let scale = abs_tol + rel_tol * z5[i].norm().max(z[i].norm());
            err = err.max((z5[i] - z4[i]).norm() / scale);
        }
        if err <= 1.0 {
            sigma += h;
            z = z5;
            steps += 1;
            if project {
                z = newton_project(s, &z);
            }
            let r = residual(s, &z);
            max_residual = max_residual.max(r);
            if r > tol {
                return Err(NumericError::ResidualBlowup { residual: r, tol, step: steps });
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(FlowOutcome { endpoint: z, max_residual, steps })
}

pub fn residual(s: &Surface, z: &State) -> f64 {
    let at = |sym: Sym| Some(z[coord_index(sym)]);
    s.gens
        .iter()
        .map(|g| g.eval_complex(&at).unwrap().norm())
        .fold(0.0, f64::max)
}

/// Project back toward the surface with cyclic single-constraint Newton
/// steps. The three defining equations have a rank-2 Jacobian everywhere on
/// the smooth locus, so a joint normal-equation solve is always singular;
/// per-constraint minimal-norm corrections avoid the degeneracy.
pub fn newton_project(s: &Surface, z: &State) -> State {
    let mut out = *z;
    for _sweep in 0..2 {
        for gi in &s.gens {
            let at = |sym: Sym| Some(out[coord_index(sym)]);
            let val = gi.eval_complex(&at).unwrap();
            if val.norm() == 0.0 {
                continue;
            }
            let mut grad = [Complex64::new(0.0, 0.0); 4];
            let mut n2 = 0.0f64;
            for (k, sym) in crate::surface::COORD_ORDER.iter().enumerate() {
                grad[k] = gi.derive(*sym).eval_complex(&at).unwrap();
                n2 += grad[k].norm_sqr();
            }
            if n2 < 1e-30 {
                continue;
            }
            let f = val / n2;
            for k in 0..4 {
                out[k] -= grad[k].conj() * f;
            }
        }
    }
    out
}

/// All complex roots of a polynomial given by ascending coefficients, via
/// Durand-Kerner iteration. Deterministic starting configuration; the
/// convergence test is relative to the root magnitudes.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, NumericError> {
    let mut c = coeffs.to_vec();
    let maxc = c.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if maxc == 0.0 {
        return Ok(vec![]);
    }
    while c.last().map_or(false, |z| z.norm() < 1e-14 * maxc) {
        c.pop();
    }
    if c.len() <= 1 {
        return Ok(vec![]);
    }
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|z| z / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            acc = acc * z + monic[k];
        }
        acc
    };
    // Cauchy-style radius keeps the start near the root annulus
    let radius = 1.0 + monic.iter().take(n).map(|z| z.norm()).fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9) / Complex64::new(0.4, 0.9).norm();
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) * radius.powf((k as f64 + 1.0) / n as f64))
        .collect();
    // accept on backward error: |p(z)| small against the evaluation scale.
    // Movement criteria stall at multiple-root clusters, where iterates
    // hover at eps^(1/m) from the cluster center while residuals vanish.
    let backward_ok = |z: Complex64| -> bool {
        let mut scale = 1e-300f64;
        let mut pw = 1.0f64;
        for c in &monic {
            scale += c.norm() * pw;
            pw *= z.norm().max(1e-12);
        }
        eval(z).norm() <= 1e-12 * scale
    };
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
            scale = scale.max(roots[i].norm());
        }
        if moved < 1e-13 * scale || roots.iter().all(|z| backward_ok(*z)) {
            roots.sort_by(|a, b| {
                a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
            });
            return Ok(roots);
        }
    }
    Err(NumericError::RootsDiverged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_quadratic() {
        // z^2 + 1 = 0
        let roots = poly_roots(&[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!((r * r + Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn roots_of_degree4() {
        // (z-1)(z-2)(z+3)(z-i) expanded numerically
        let factors = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(-3.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for f in factors {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += *ck;
                next[k] -= *ck * f;
            }
            c = next;
        }
        let roots = poly_roots(&c).unwrap();
        for f in factors {
            assert!(roots.iter().any(|r| (r - f).norm() < 1e-8), "missing root {f}");
        }
    }
}
