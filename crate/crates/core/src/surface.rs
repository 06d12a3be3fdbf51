//! The surfaces S_{P,Q} in C^4 cut out by
//!
//! ```text
//!   yu = x P(x),   xv = u Q(u),   yv = P(x) Q(u)
//! ```
//!
//! with their three dense coordinate charts, exact and numeric points,
//! push-forwards of chart vector fields, tangent spaces, and the formal
//! symmetry (x, y, P) <-> (u, v, Q).

use crate::gauss::GaussRat;
use crate::ideal::{divide_by_monomial, Groebner};
use crate::poly::{Mono, MultiPoly, RatioPoly, Sym, UniPoly};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("P and Q must be non-constant (constant input defines a Danielewski surface)")]
    ConstantPolynomial,
    #[error("P must be a polynomial in x and Q a polynomial in u")]
    WrongVariable,
    #[error("chart parameter outside the domain: {0}")]
    OutsideDomain(String),
    #[error("point does not satisfy the surface equations (max residual {0:.3e})")]
    NotOnSurface(f64),
    #[error("Jacobian rank is not 2: the point is singular or not on the surface")]
    Singular,
    #[error("component has a non-monomial denominator after the chain rule")]
    BadDenominator,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChartId {
    Phi,
    Psi,
    Chi,
}

impl ChartId {
    /// The two chart parameters as ambient coordinates.
    pub fn params(self) -> (Sym, Sym) {
        match self {
            ChartId::Phi => (Sym::X, Sym::Y),
            ChartId::Psi => (Sym::U, Sym::V),
            ChartId::Chi => (Sym::X, Sym::U),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChartId::Phi => "phi",
            ChartId::Psi => "psi",
            ChartId::Chi => "chi",
        }
    }
}

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;

/// A point of the surface, exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    /// Coordinates (x, y, u, v); the defining equations hold exactly.
    Exact([GaussRat; 4]),
    /// Floating coordinates with the residual bound they were checked at.
    Numeric { z: [Complex64; 4], tol: f64 },
}

impl Point {
    pub fn coord(&self, s: Sym) -> Complex64 {
        let k = coord_index(s);
        match self {
            Point::Exact(c) => c[k].to_complex(),
            Point::Numeric { z, .. } => z[k],
        }
    }

    pub fn exact_coord(&self, s: Sym) -> Option<&GaussRat> {
        match self {
            Point::Exact(c) => Some(&c[coord_index(s)]),
            Point::Numeric { .. } => None,
        }
    }

    pub fn to_complex(&self) -> [Complex64; 4] {
        match self {
            Point::Exact(c) => [
                c[0].to_complex(),
                c[1].to_complex(),
                c[2].to_complex(),
                c[3].to_complex(),
            ],
            Point::Numeric { z, .. } => *z,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Point::Exact(_))
    }
}

pub fn coord_index(s: Sym) -> usize {
    match s {
        Sym::X => 0,
        Sym::Y => 1,
        Sym::U => 2,
        Sym::V => 3,
        Sym::L => panic!("lambda is not a coordinate"),
    }
}

pub const COORD_ORDER: [Sym; 4] = [Sym::X, Sym::Y, Sym::U, Sym::V];

/// A vector field on ambient space tangent to the surface, with components
/// that may carry monomial denominators (the shape every chart push-forward
/// takes before polynomialization).
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientField {
    /// d/dx, d/dy, d/du, d/dv components.
    pub comps: [RatioPoly; 4],
}

impl AmbientField {
    pub fn zero() -> Self {
        AmbientField { comps: [RatioPoly::zero(), RatioPoly::zero(), RatioPoly::zero(), RatioPoly::zero()] }
    }

    pub fn from_polys(c: [MultiPoly; 4]) -> Self {
        AmbientField { comps: c.map(RatioPoly::poly) }
    }

    pub fn is_polynomial(&self) -> bool {
        self.comps.iter().all(|c| c.is_poly())
    }

    pub fn add(&self, rhs: &AmbientField) -> AmbientField {
        AmbientField {
            comps: [
                self.comps[0].add(&rhs.comps[0]),
                self.comps[1].add(&rhs.comps[1]),
                self.comps[2].add(&rhs.comps[2]),
                self.comps[3].add(&rhs.comps[3]),
            ],
        }
    }

    pub fn scale_poly(&self, p: &MultiPoly) -> AmbientField {
        AmbientField { comps: self.comps.clone().map(|c| c.mul_poly(p)) }
    }

    pub fn scale(&self, c: &GaussRat) -> AmbientField {
        AmbientField { comps: self.comps.clone().map(|r| r.scale(c)) }
    }
}

#[derive(Clone, Debug)]
pub struct Surface {
    pub p: UniPoly,
    pub q: UniPoly,
    /// g1 = yu - xP(x), g2 = xv - uQ(u), g3 = yv - P(x)Q(u)
    pub gens: [MultiPoly; 3],
    pub gb: Groebner,
    pub smooth: bool,
    pub p0_zero: bool,
    pub q0_zero: bool,
    aug_cache: Arc<Mutex<BTreeMap<Mono, Arc<Groebner>>>>,
}

impl Surface {
    pub fn new(p: UniPoly, q: UniPoly) -> Result<Surface, SurfaceError> {
        if p.var != Sym::X || q.var != Sym::U {
            return Err(SurfaceError::WrongVariable);
        }
        if p.is_zero() || q.is_zero() || p.degree() < 1 || q.degree() < 1 {
            return Err(SurfaceError::ConstantPolynomial);
        }
        let pm = p.to_multipoly();
        let qm = q.to_multipoly();
        let x = MultiPoly::var(Sym::X);
        let y = MultiPoly::var(Sym::Y);
        let u = MultiPoly::var(Sym::U);
        let v = MultiPoly::var(Sym::V);
        let g1 = y.mul(&u).sub(&x.mul(&pm));
        let g2 = x.mul(&v).sub(&u.mul(&qm));
        let g3 = y.mul(&v).sub(&pm.mul(&qm));
        let gb = Groebner::new(vec![g1.clone(), g2.clone(), g3.clone()]);
        let p0_zero = p.coeff(0).is_zero();
        let q0_zero = q.coeff(0).is_zero();
        let smooth = p.simple_roots().unwrap() && q.simple_roots().unwrap() && !(p0_zero && q0_zero);
        let s = Surface {
            p,
            q,
            gens: [g1, g2, g3],
            gb,
            smooth,
            p0_zero,
            q0_zero,
            aug_cache: Arc::new(Mutex::new(BTreeMap::new())),
        };
        debug_assert!(s.charts_land_on_surface());
        Ok(s)
    }

    pub fn p_mp(&self) -> MultiPoly {
        self.p.to_multipoly()
    }

    pub fn q_mp(&self) -> MultiPoly {
        self.q.to_multipoly()
    }

    pub fn nf(&self, p: &MultiPoly) -> MultiPoly {
        self.gb.nf(p)
    }

    fn aug(&self, m: &Mono) -> Arc<Groebner> {
        let mut cache = self.aug_cache.lock().unwrap();
        cache
            .entry(*m)
            .or_insert_with(|| {
                let mut gens = self.gens.to_vec();
                gens.push(MultiPoly::term(GaussRat::one(), *m));
                Arc::new(Groebner::new(gens))
            })
            .clone()
    }

    /// Division by a monomial modulo the ideal: a polynomial `g` with
    /// `f - m*g` in the ideal, or `None`.
    pub fn divide_by_monomial(&self, f: &MultiPoly, m: &Mono) -> Option<MultiPoly> {
        if m.is_one() {
            return Some(self.nf(f));
        }
        let aug = self.aug(m);
        divide_by_monomial(&self.gb, &aug, f, m)
    }

    /// Symbolic forward map of a chart: the four ambient coordinates as
    /// rational expressions in the chart's two parameters.
    pub fn chart_map(&self, chart: ChartId) -> [RatioPoly; 4] {
        let x = MultiPoly::var(Sym::X);
        let y = MultiPoly::var(Sym::Y);
        let u = MultiPoly::var(Sym::U);
        let v = MultiPoly::var(Sym::V);
        let pm = self.p_mp();
        let qm = self.q_mp();
        match chart {
            ChartId::Phi => {
                // (x, y) -> (x, y, xP/y, (P/y) Q(xP/y))
                let u_expr = RatioPoly::new(x.mul(&pm), Mono::var(Sym::Y));
                let v_expr = RatioPoly::new(pm.clone(), Mono::var(Sym::Y))
                    .mul(&eval_unipoly_at(&self.q, &u_expr));
                [RatioPoly::poly(x), RatioPoly::poly(y), u_expr, v_expr]
            }
            ChartId::Psi => {
                // (u, v) -> (uQ/v, (Q/v) P(uQ/v), u, v)
                let x_expr = RatioPoly::new(u.mul(&qm), Mono::var(Sym::V));
                let y_expr = RatioPoly::new(qm.clone(), Mono::var(Sym::V))
                    .mul(&eval_unipoly_at(&self.p, &x_expr));
                [x_expr, y_expr, RatioPoly::poly(u), RatioPoly::poly(v)]
            }
            ChartId::Chi => {
                // (x, u) -> (x, xP/u, u, uQ/x)
                let y_expr = RatioPoly::new(x.mul(&pm), Mono::var(Sym::U));
                let v_expr = RatioPoly::new(u.mul(&qm), Mono::var(Sym::X));
                [RatioPoly::poly(x), y_expr, RatioPoly::poly(u), v_expr]
            }
        }
    }

    /// Each chart lands on the surface identically as rational functions.
    pub fn charts_land_on_surface(&self) -> bool {
        for chart in [ChartId::Phi, ChartId::Psi, ChartId::Chi] {
            for g in &self.gens {
                if !self.chart_form(chart, g).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Express an ambient polynomial in a chart: substitute the forward map.
    /// The result is a rational function of the chart's two parameters.
    pub fn chart_form(&self, chart: ChartId, p: &MultiPoly) -> RatioPoly {
        let f = self.chart_map(chart);
        let mut acc = RatioPoly::zero();
        for (m, c) in p.terms() {
            let mut t = RatioPoly::poly(MultiPoly::constant(c.clone()));
            for (idx, s) in COORD_ORDER.iter().enumerate() {
                let e = m.exp(*s);
                if e > 0 {
                    t = t.mul(&f[idx].pow(e));
                }
            }
            let el = m.exp(Sym::L);
            if el > 0 {
                t = t.mul_poly(&MultiPoly::var_pow(Sym::L, el));
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Embed chart parameters into the surface. Exact parameters with the
    /// denominators nonzero give an exact point.
    pub fn chart_embed(&self, chart: ChartId, a: &GaussRat, b: &GaussRat) -> Result<Point, SurfaceError> {
        match chart {
            ChartId::Phi => {
                if b.is_zero() {
                    return Err(SurfaceError::OutsideDomain("phi requires y != 0".into()));
                }
                let (x0, y0) = (a.clone(), b.clone());
                let px = self.p.eval(&x0);
                let u0 = &(&x0 * &px) / &y0;
                let v0 = &(&px / &y0) * &self.q.eval(&u0);
                Ok(self.check_exact([x0, y0, u0, v0]))
            }
            ChartId::Psi => {
                if b.is_zero() {
                    return Err(SurfaceError::OutsideDomain("psi requires v != 0".into()));
                }
                let (u0, v0) = (a.clone(), b.clone());
                let qu = self.q.eval(&u0);
                let x0 = &(&u0 * &qu) / &v0;
                let y0 = &(&qu / &v0) * &self.p.eval(&x0);
                Ok(self.check_exact([x0, y0, u0, v0]))
            }
            ChartId::Chi => {
                if a.is_zero() || b.is_zero() {
                    return Err(SurfaceError::OutsideDomain("chi requires x != 0 and u != 0".into()));
                }
                let (x0, u0) = (a.clone(), b.clone());
                let y0 = &(&x0 * &self.p.eval(&x0)) / &u0;
                let v0 = &(&u0 * &self.q.eval(&u0)) / &x0;
                Ok(self.check_exact([x0, y0, u0, v0]))
            }
        }
    }

    pub fn chart_embed_numeric(
        &self,
        chart: ChartId,
        a: Complex64,
        b: Complex64,
        tol: f64,
    ) -> Result<Point, SurfaceError> {
        let p_at = |z: Complex64| eval_uni_complex(&self.p, z);
        let q_at = |z: Complex64| eval_uni_complex(&self.q, z);
        let z = match chart {
            ChartId::Phi => {
                if b.norm() == 0.0 {
                    return Err(SurfaceError::OutsideDomain("phi requires y != 0".into()));
                }
                let u0 = a * p_at(a) / b;
                [a, b, u0, p_at(a) / b * q_at(u0)]
            }
            ChartId::Psi => {
                if b.norm() == 0.0 {
                    return Err(SurfaceError::OutsideDomain("psi requires v != 0".into()));
                }
                let x0 = a * q_at(a) / b;
                [x0, q_at(a) / b * p_at(x0), a, b]
            }
            ChartId::Chi => {
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    return Err(SurfaceError::OutsideDomain("chi requires x != 0 and u != 0".into()));
                }
                [a, a * p_at(a) / b, b, b * q_at(b) / a]
            }
        };
        self.check_numeric(z, tol)
    }

    fn check_exact(&self, c: [GaussRat; 4]) -> Point {
        let pt = Point::Exact(c);
        debug_assert!(self.max_residual(&pt) == 0.0);
        pt
    }

    pub fn check_numeric(&self, z: [Complex64; 4], tol: f64) -> Result<Point, SurfaceError> {
        let pt = Point::Numeric { z, tol };
        let r = self.max_residual(&pt);
        if r > tol {
            return Err(SurfaceError::NotOnSurface(r));
        }
        Ok(pt)
    }

    /// Maximal |g_i| at the point; exactly zero for exact points by invariant.
    pub fn max_residual(&self, pt: &Point) -> f64 {
        match pt {
            Point::Exact(c) => {
                let at = |s: Sym| Some(c[coord_index(s)].clone());
                self.gens
                    .iter()
                    .map(|g| if g.eval_gauss(&at).unwrap().is_zero() { 0.0 } else { f64::INFINITY })
                    .fold(0.0, f64::max)
            }
            Point::Numeric { z, .. } => {
                let at = |s: Sym| Some(z[coord_index(s)]);
                self.gens
                    .iter()
                    .map(|g| g.eval_complex(&at).unwrap().norm())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Push a chart field `a(s,t) d/ds + b(s,t) d/dt` forward to an ambient
    /// field via the chain rule through the chart map. Components come out
    /// with monomial denominators; `polynomialize` clears them when possible.
    pub fn pushforward(&self, chart: ChartId, a: &MultiPoly, b: &MultiPoly) -> AmbientField {
        let (s, t) = chart.params();
        let f = self.chart_map(chart);
        let mut comps = [RatioPoly::zero(), RatioPoly::zero(), RatioPoly::zero(), RatioPoly::zero()];
        for w in 0..4 {
            let ds = f[w].derive(s);
            let dt = f[w].derive(t);
            comps[w] = ds.mul_poly(a).add(&dt.mul_poly(b));
        }
        AmbientField { comps }
    }

    /// Replace each rational component by an ambient polynomial equal to it
    /// modulo the ideal, when such a polynomial exists.
    pub fn polynomialize(&self, field: &AmbientField) -> Option<[MultiPoly; 4]> {
        let mut out: [MultiPoly; 4] = Default::default();
        for (k, c) in field.comps.iter().enumerate() {
            if c.is_poly() {
                out[k] = self.nf(&c.num);
            } else {
                out[k] = self.divide_by_monomial(&c.num, &c.den)?;
            }
        }
        Some(out)
    }

    /// Exact Jacobian of (g1, g2, g3) at an exact point.
    pub fn jacobian_exact(&self, c: &[GaussRat; 4]) -> [[GaussRat; 4]; 3] {
        let at = |s: Sym| Some(c[coord_index(s)].clone());
        let mut j: [[GaussRat; 4]; 3] = Default::default();
        for (i, g) in self.gens.iter().enumerate() {
            for (k, s) in COORD_ORDER.iter().enumerate() {
                j[i][k] = g.derive(*s).eval_gauss(&at).unwrap();
            }
        }
        j
    }

    /// Basis of the tangent plane at a smooth exact point: the rank-2 kernel
    /// of the Jacobian. Errors when the rank is not 2.
    pub fn tangent_basis(&self, pt: &Point) -> Result<[[GaussRat; 4]; 2], SurfaceError> {
        let c = match pt {
            Point::Exact(c) => c,
            Point::Numeric { .. } => return Err(SurfaceError::Singular),
        };
        let j = self.jacobian_exact(c);
        let (rank, kernel) = kernel_basis(&j);
        if rank != 2 || kernel.len() != 2 {
            return Err(SurfaceError::Singular);
        }
        // kernel vectors annihilate all three gradients exactly by construction
        Ok([kernel[0].clone(), kernel[1].clone()])
    }

    /// The swapped surface S_{Q,P} under (x, y, P) <-> (u, v, Q).
    pub fn swapped(&self) -> Surface {
        let p2 = UniPoly::new(Sym::X, self.q.coeffs().to_vec());
        let q2 = UniPoly::new(Sym::U, self.p.coeffs().to_vec());
        Surface::new(p2, q2).expect("swap of a valid surface is valid")
    }
}

/// Point transport under the swap: (x, y, u, v) -> (u, v, x, y).
pub fn swap_point(pt: &Point) -> Point {
    match pt {
        Point::Exact(c) => Point::Exact([c[2].clone(), c[3].clone(), c[0].clone(), c[1].clone()]),
        Point::Numeric { z, tol } => Point::Numeric { z: [z[2], z[3], z[0], z[1]], tol: *tol },
    }
}

/// Polynomial transport under the swap: exchange x <-> u and y <-> v.
pub fn swap_poly(p: &MultiPoly) -> MultiPoly {
    p.substitute(&[
        (Sym::X, MultiPoly::var(Sym::U)),
        (Sym::U, MultiPoly::var(Sym::X)),
        (Sym::Y, MultiPoly::var(Sym::V)),
        (Sym::V, MultiPoly::var(Sym::Y)),
    ])
}

/// Field transport under the swap: permute components and substitute.
pub fn swap_field(f: &AmbientField) -> AmbientField {
    let sub = |r: &RatioPoly| -> RatioPoly {
        let num = swap_poly(&r.num);
        let mut den = Mono::one();
        den.0[Sym::Y as usize] = r.den.exp(Sym::V);
        den.0[Sym::V as usize] = r.den.exp(Sym::Y);
        den.0[Sym::X as usize] = r.den.exp(Sym::U);
        den.0[Sym::U as usize] = r.den.exp(Sym::X);
        den.0[Sym::L as usize] = r.den.exp(Sym::L);
        RatioPoly::new(num, den)
    };
    // (Vx, Vy, Vu, Vv) -> (Vu, Vv, Vx, Vy) after substitution
    AmbientField {
        comps: [
            sub(&f.comps[2]),
            sub(&f.comps[3]),
            sub(&f.comps[0]),
            sub(&f.comps[1]),
        ],
    }
}

fn eval_unipoly_at(p: &UniPoly, r: &RatioPoly) -> RatioPoly {
    let mut acc = RatioPoly::zero();
    for (k, c) in p.coeffs().iter().enumerate() {
        acc = acc.add(&r.pow(k as u16).scale(c));
    }
    acc
}

pub fn eval_uni_complex(p: &UniPoly, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in p.coeffs().iter().rev() {
        acc = acc * z + c.to_complex();
    }
    acc
}

/// Rank and kernel basis of an exact 3x4 matrix.
fn kernel_basis(j: &[[GaussRat; 4]; 3]) -> (usize, Vec<[GaussRat; 4]>) {
    let mut m: Vec<Vec<GaussRat>> = j.iter().map(|r| r.to_vec()).collect();
    let rows = 3;
    let cols = 4;
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].inv();
        for k in 0..cols {
            m[r][k] = &m[r][k] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..cols {
                    let t = &m[i][k] - &(&f * &m[r][k]);
                    m[i][k] = t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let rank = pivots.len();
    let mut kernel = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v: [GaussRat; 4] = Default::default();
        v[free] = GaussRat::one();
        for (pi, &pc) in pivots.iter().enumerate() {
            v[pc] = -&m[pi][free];
        }
        kernel.push(v);
    }
    (rank, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s_x1_u1() -> Surface {
        Surface::new(
            UniPoly::from_ints(Sym::X, &[-1, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn smoothness_classification() {
        assert!(s_x1_u1().smooth);
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[0, 1]),
        )
        .unwrap();
        assert!(!s.smooth); // both vanish at 0
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1, -2, 1]), // x(x-1)^2
            UniPoly::from_ints(Sym::U, &[0, 1, -2, 1]),
        )
        .unwrap();
        assert!(!s.smooth); // multiple roots
        assert!(matches!(
            Surface::new(UniPoly::from_ints(Sym::X, &[5]), UniPoly::from_ints(Sym::U, &[-1, 1])),
            Err(SurfaceError::ConstantPolynomial)
        ));
    }

    #[test]
    fn chart_embed_examples() {
        let s = s_x1_u1();
        let p = s
            .chart_embed(ChartId::Phi, &GaussRat::from_int(0), &GaussRat::from_int(1))
            .unwrap();
        let expect = [
            GaussRat::from_int(0),
            GaussRat::from_int(1),
            GaussRat::from_int(0),
            GaussRat::from_int(1),
        ];
        assert_eq!(p, Point::Exact(expect));

        let p = s
            .chart_embed(ChartId::Chi, &GaussRat::from_int(1), &GaussRat::from_int(1))
            .unwrap();
        let expect = [
            GaussRat::from_int(1),
            GaussRat::from_int(0),
            GaussRat::from_int(1),
            GaussRat::from_int(0),
        ];
        assert_eq!(p, Point::Exact(expect));

        // phi(0, y): third coordinate identically 0
        for y in [1, 2, -3] {
            let p = s
                .chart_embed(ChartId::Phi, &GaussRat::from_int(0), &GaussRat::from_int(y))
                .unwrap();
            assert_eq!(p.exact_coord(Sym::U).unwrap(), &GaussRat::zero());
        }

        assert!(s
            .chart_embed(ChartId::Phi, &GaussRat::from_int(1), &GaussRat::zero())
            .is_err());
        assert!(s
            .chart_embed(ChartId::Chi, &GaussRat::zero(), &GaussRat::from_int(1))
            .is_err());
    }

    #[test]
    fn pushforward_y2_dx_is_polynomial() {
        let s = s_x1_u1();
        let y2 = MultiPoly::var_pow(Sym::Y, 2);
        let f = s.pushforward(ChartId::Phi, &y2, &MultiPoly::zero());
        let polys = s.polynomialize(&f).expect("polynomializes");
        // display form: y^2 dx + y(xP'+P) du + (yP'Q + y u P'Q' + P^2 Q') dv
        let x = MultiPoly::var(Sym::X);
        let y = MultiPoly::var(Sym::Y);
        let u = MultiPoly::var(Sym::U);
        let pm = s.p_mp();
        let qm = s.q_mp();
        let dp = pm.derive(Sym::X);
        let dq = qm.derive(Sym::U);
        let expect_u = y.mul(&x.mul(&dp).add(&pm));
        let expect_v = y
            .mul(&dp)
            .mul(&qm)
            .add(&y.mul(&u).mul(&dp).mul(&dq))
            .add(&pm.mul(&pm).mul(&dq));
        assert_eq!(polys[0], s.nf(&y2));
        assert_eq!(polys[1], MultiPoly::zero());
        assert_eq!(polys[2], s.nf(&expect_u));
        assert_eq!(polys[3], s.nf(&expect_v));
    }

    #[test]
    fn pushforward_dy_is_rational() {
        let s = s_x1_u1();
        let f = s.pushforward(ChartId::Phi, &MultiPoly::zero(), &MultiPoly::one());
        assert!(s.polynomialize(&f).is_none());
        // matches the display d/dy - (u/y) d/du - (v/y + u P Q'/y^2) d/dv as
        // rational functions in the chart
        let u_disp = RatioPoly::new(MultiPoly::var(Sym::U).neg(), Mono::var(Sym::Y));
        assert!(s
            .chart_form(ChartId::Phi, &f.comps[2].num)
            .mul(&RatioPoly::new(MultiPoly::one(), f.comps[2].den))
            .eq_rat(&{
                let n = s.chart_form(ChartId::Phi, &u_disp.num);
                n.mul(&RatioPoly::new(MultiPoly::one(), u_disp.den))
            }));
    }

    #[test]
    fn tangent_basis_rank() {
        let s = s_x1_u1();
        let p = s
            .chart_embed(ChartId::Phi, &GaussRat::from_int(0), &GaussRat::from_int(1))
            .unwrap();
        let basis = s.tangent_basis(&p).unwrap();
        let c = match &p {
            Point::Exact(c) => c.clone(),
            _ => unreachable!(),
        };
        let j = s.jacobian_exact(&c);
        for v in &basis {
            for row in &j {
                let mut acc = GaussRat::zero();
                for k in 0..4 {
                    acc += &(&row[k] * &v[k]);
                }
                assert!(acc.is_zero());
            }
        }

        // singular origin on S_{x,u}
        let sing = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[0, 1]),
        )
        .unwrap();
        let origin = Point::Exact(Default::default());
        assert_eq!(sing.max_residual(&origin), 0.0);
        assert!(sing.tangent_basis(&origin).is_err());
    }

    #[test]
    fn swap_involution_and_transport() {
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[-1, 1]),
            UniPoly::from_ints(Sym::U, &[2, 0, 1]),
        )
        .unwrap();
        let t = s.swapped();
        let back = t.swapped();
        assert_eq!(back.p, s.p);
        assert_eq!(back.q, s.q);
        // transport of g1 equals g2 of the swapped surface
        assert_eq!(swap_poly(&s.gens[0]), t.gens[1]);
        assert_eq!(swap_poly(&s.gens[1]), t.gens[0]);
        assert_eq!(swap_poly(&s.gens[2]), t.gens[2]);
        // transport of a phi-chart field equals the psi-chart field on the swap
        let a = MultiPoly::var_pow(Sym::Y, 2);
        let f = s.pushforward(ChartId::Phi, &a, &MultiPoly::zero());
        let mirrored = swap_field(&f);
        let g = t.pushforward(ChartId::Psi, &MultiPoly::var_pow(Sym::V, 2), &MultiPoly::zero());
        for k in 0..4 {
            assert!(mirrored.comps[k].eq_rat(&g.comps[k]));
        }
    }
}
