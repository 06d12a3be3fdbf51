use giz_core::autoflow::*;
use giz_core::numeric::poly_roots;
use giz_core::poly::UniPoly;
use giz_core::surface::eval_uni_complex;
use giz_core::{GaussRat, Point, Surface, Sym};
use num_complex::Complex64;

fn main() {
    let s = Surface::new(
        UniPoly::from_ints(Sym::X, &[-1, 1]),
        UniPoly::from_ints(Sym::U, &[-1, 1]),
    )
    .unwrap();
    // q from pair 9
    let q = Point::Exact([
        GaussRat::from_int(1),
        GaussRat::zero(),
        GaussRat::from_int(4),
        GaussRat::from_int(12),
    ]);
    println!("residual {:?}", s.max_residual(&q));
    // route: psi.v2_du with t = 1, 2, ... until y != 0
    for t in 1..4i64 {
        let r = closed_flow(&s, "psi.v2_du", &TimeValue::Exact(GaussRat::from_int(t)), &q, 1e-9).unwrap();
        println!("t={t}: {:?}", r.to_complex());
        let z = r.to_complex();
        if z[1].norm() > 0.0 {
            // dance step 2 polynomial with u0 = z[2], v0 = z[3]
            let (u0, v0) = (z[2], z[3]);
            // y(s) coefficients
            let us = vec![u0, v0 * v0];
            let q_of = |arg: &Vec<Complex64>| {
                let mut acc = vec![Complex64::new(0.0, 0.0)];
                for c in s.q.coeffs().iter().rev() {
                    let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + arg.len() - 1];
                    for (i, a) in acc.iter().enumerate() {
                        for (j, b) in arg.iter().enumerate() {
                            next[i + j] += a * b;
                        }
                    }
                    if next.is_empty() { next = vec![Complex64::new(0.0,0.0)]; }
                    next[0] += c.to_complex();
                    acc = next;
                }
                acc
            };
            let qus = q_of(&us);
            println!("q(us): {qus:?}");
            let mut xs = vec![Complex64::new(0.0, 0.0); us.len() + qus.len() - 1];
            for (i, a) in us.iter().enumerate() {
                for (j, b) in qus.iter().enumerate() {
                    xs[i + j] += a * b / v0;
                }
            }
            let p_of = |arg: &Vec<Complex64>| {
                let mut acc = vec![Complex64::new(0.0, 0.0)];
                for c in s.p.coeffs().iter().rev() {
                    let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + arg.len() - 1];
                    for (i, a) in acc.iter().enumerate() {
                        for (j, b) in arg.iter().enumerate() {
                            next[i + j] += a * b;
                        }
                    }
                    if next.is_empty() { next = vec![Complex64::new(0.0,0.0)]; }
                    next[0] += c.to_complex();
                    acc = next;
                }
                acc
            };
            let pxs = p_of(&xs);
            let mut y = vec![Complex64::new(0.0, 0.0); qus.len() + pxs.len() - 1];
            for (i, a) in qus.iter().enumerate() {
                for (j, b) in pxs.iter().enumerate() {
                    y[i + j] += a * b / v0;
                }
            }
            y[0] -= Complex64::new(1.0, 0.0);
            println!("poly: {y:?}");
            match poly_roots(&y) {
                Ok(r) => println!("roots: {r:?}"),
                Err(e) => println!("ROOTS ERR: {e}"),
            }
            let _ = eval_uni_complex;
            break;
        }
    }
}
