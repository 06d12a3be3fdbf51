//! Derivations on the coordinate ring: tangency certificates, Lie brackets,
//! the catalog of complete fields, the shear completeness criterion, and
//! local-nilpotency testing.

use crate::gauss::GaussRat;
use crate::poly::{MultiPoly, RatioPoly, Sym};
use crate::surface::{AmbientField, ChartId, Surface, COORD_ORDER};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FieldError {
    #[error("field is not tangent to the surface: V(g{0}) is not in the ideal")]
    NotTangent(usize),
    #[error("component {0} does not polynomialize; the rational form must be kept")]
    NotPolynomial(usize),
    #[error("tangency witnesses failed re-verification")]
    WitnessBug,
    #[error("catalog field failed to polynomialize, contradicting completeness of the chart fields")]
    CatalogExtension,
}

/// An ambient polynomial vector field tangent to the surface, components in
/// normal form, with cofactor witnesses for V(g_i) in the ideal.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    /// d/dx, d/dy, d/du, d/dv components, each a normal form.
    pub comps: [MultiPoly; 4],
    /// witnesses[i] are the cofactors of V(g_i) against the Groebner basis.
    pub witnesses: [Vec<MultiPoly>; 3],
}

impl Derivation {
    pub fn zero() -> Derivation {
        Derivation { comps: Default::default(), witnesses: Default::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// Apply the derivation to a polynomial: sum of comps[w] * df/dw, reduced.
    pub fn apply(&self, s: &Surface, f: &MultiPoly) -> MultiPoly {
        s.nf(&self.apply_raw(f))
    }

    /// Apply without reducing, for callers that need the raw polynomial.
    pub fn apply_raw(&self, f: &MultiPoly) -> MultiPoly {
        let mut acc = MultiPoly::zero();
        for (k, sym) in COORD_ORDER.iter().enumerate() {
            if !self.comps[k].is_zero() {
                acc = acc.add(&self.comps[k].mul(&f.derive(*sym)));
            }
        }
        acc
    }

    pub fn add(&self, s: &Surface, rhs: &Derivation) -> Derivation {
        let comps = [
            self.comps[0].add(&rhs.comps[0]),
            self.comps[1].add(&rhs.comps[1]),
            self.comps[2].add(&rhs.comps[2]),
            self.comps[3].add(&rhs.comps[3]),
        ];
        tangency_check_polys(s, comps).expect("sum of tangent fields is tangent")
    }

    pub fn sub(&self, s: &Surface, rhs: &Derivation) -> Derivation {
        self.add(s, &rhs.scale(s, &GaussRat::from_int(-1)))
    }

    pub fn scale(&self, s: &Surface, c: &GaussRat) -> Derivation {
        let comps = self.comps.clone().map(|p| p.scale(c));
        tangency_check_polys(s, comps).expect("scalar multiple of a tangent field is tangent")
    }

    /// Multiply by a regular function (the module action).
    pub fn mul_poly(&self, s: &Surface, f: &MultiPoly) -> Derivation {
        let comps = self.comps.clone().map(|p| p.mul(f));
        tangency_check_polys(s, comps).expect("function multiple of a tangent field is tangent")
    }

    /// Exact evaluation of the four components at an exact point.
    pub fn eval_exact(&self, c: &[GaussRat; 4]) -> [GaussRat; 4] {
        let at = |s: Sym| Some(c[crate::surface::coord_index(s)].clone());
        [
            self.comps[0].eval_gauss(&at).unwrap(),
            self.comps[1].eval_gauss(&at).unwrap(),
            self.comps[2].eval_gauss(&at).unwrap(),
            self.comps[3].eval_gauss(&at).unwrap(),
        ]
    }

    pub fn eval_complex(&self, z: &[num_complex::Complex64; 4]) -> [num_complex::Complex64; 4] {
        let at = |s: Sym| Some(z[crate::surface::coord_index(s)]);
        [
            self.comps[0].eval_complex(&at).unwrap(),
            self.comps[1].eval_complex(&at).unwrap(),
            self.comps[2].eval_complex(&at).unwrap(),
            self.comps[3].eval_complex(&at).unwrap(),
        ]
    }
}

/// Certify tangency of a polynomial ambient field: V(g_i) must reduce to zero
/// for each generator; the cofactors are kept as witnesses and re-verified.
pub fn tangency_check_polys(s: &Surface, comps: [MultiPoly; 4]) -> Result<Derivation, FieldError> {
    let comps = comps.map(|c| s.nf(&c));
    let mut witnesses: [Vec<MultiPoly>; 3] = Default::default();
    for i in 0..3 {
        let mut vg = MultiPoly::zero();
        for (k, sym) in COORD_ORDER.iter().enumerate() {
            vg = vg.add(&comps[k].mul(&s.gens[i].derive(*sym)));
        }
        let red = s.gb.reduce(&vg);
        if !red.remainder.is_zero() {
            return Err(FieldError::NotTangent(i + 1));
        }
        // re-verify the witness identity exactly
        let mut acc = MultiPoly::zero();
        for (c, b) in red.cofactors.iter().zip(s.gb.basis()) {
            acc = acc.add(&c.mul(b));
        }
        if acc != vg {
            return Err(FieldError::WitnessBug);
        }
        witnesses[i] = red.cofactors;
    }
    Ok(Derivation { comps, witnesses })
}

/// Polynomialize a rational ambient field and certify tangency.
pub fn tangency_check(s: &Surface, field: &AmbientField) -> Result<Derivation, FieldError> {
    let polys = match s.polynomialize(field) {
        Some(p) => p,
        None => {
            let bad = field
                .comps
                .iter()
                .position(|c| !c.is_poly() && s.divide_by_monomial(&c.num, &c.den).is_none())
                .unwrap_or(0);
            return Err(FieldError::NotPolynomial(bad));
        }
    };
    tangency_check_polys(s, polys)
}

/// Lie bracket of tangent fields: [V,W]_i = V(W_i) - W(V_i), reduced, with
/// witnesses recomputed. A witness failure here is an internal bug.
pub fn bracket(s: &Surface, v: &Derivation, w: &Derivation) -> Derivation {
    let mut comps: [MultiPoly; 4] = Default::default();
    for (i, c) in comps.iter_mut().enumerate() {
        *c = v.apply_raw(&w.comps[i]).sub(&w.apply_raw(&v.comps[i]));
    }
    tangency_check_polys(s, comps).expect("bracket of tangent fields is tangent")
}

/// Stable catalog identifiers.
pub mod catalog_ids {
    pub const PHI_Y2_DX: &str = "phi.y2_dx";
    pub const PHI_XY_DX: &str = "phi.xy_dx";
    pub const PHI_XY_DY: &str = "phi.xy_dy";
    pub const PSI_V2_DU: &str = "psi.v2_du";
    pub const PSI_UV_DU: &str = "psi.uv_du";
    pub const PSI_UV_DV: &str = "psi.uv_dv";
    pub const CHI_XU_DX: &str = "chi.xu_dx";
    pub const CHI_XU_DU: &str = "chi.xu_du";
    pub const PHI_Y_DX_LND: &str = "phi.y_dx_lnd";
    pub const PSI_V_DU_LND: &str = "psi.v_du_lnd";

    pub const ALL: [&str; 10] = [
        PHI_Y2_DX, PHI_XY_DX, PHI_XY_DY, PSI_V2_DU, PSI_UV_DU, PSI_UV_DV, CHI_XU_DX, CHI_XU_DU,
        PHI_Y_DX_LND, PSI_V_DU_LND,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompletenessReason {
    /// One of the eight fields whose chart flows are global shears or
    /// exponential scalings.
    EasyComplete,
    /// Locally nilpotent derivation; machine-checked.
    LndRemark,
    /// f * Theta with Theta(Theta(f)) = 0; machine-checked.
    ShearProduct,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub chart: ChartId,
    /// Chart coefficients (a, b) of a d/ds + b d/dt.
    pub chart_coeffs: (MultiPoly, MultiPoly),
    pub derivation: Derivation,
    pub reason: CompletenessReason,
}

/// The chart data behind a catalog id.
pub fn catalog_chart_field(id: &str) -> Option<(ChartId, MultiPoly, MultiPoly)> {
    use catalog_ids::*;
    let x = MultiPoly::var(Sym::X);
    let y = MultiPoly::var(Sym::Y);
    let u = MultiPoly::var(Sym::U);
    let v = MultiPoly::var(Sym::V);
    Some(match id {
        PHI_Y2_DX => (ChartId::Phi, y.mul(&y), MultiPoly::zero()),
        PHI_XY_DX => (ChartId::Phi, x.mul(&y), MultiPoly::zero()),
        PHI_XY_DY => (ChartId::Phi, MultiPoly::zero(), x.mul(&y)),
        PSI_V2_DU => (ChartId::Psi, v.mul(&v), MultiPoly::zero()),
        PSI_UV_DU => (ChartId::Psi, u.mul(&v), MultiPoly::zero()),
        PSI_UV_DV => (ChartId::Psi, MultiPoly::zero(), u.mul(&v)),
        CHI_XU_DX => (ChartId::Chi, x.mul(&u), MultiPoly::zero()),
        CHI_XU_DU => (ChartId::Chi, MultiPoly::zero(), x.mul(&u)),
        PHI_Y_DX_LND => (ChartId::Phi, y, MultiPoly::zero()),
        PSI_V_DU_LND => (ChartId::Psi, v, MultiPoly::zero()),
        _ => return None,
    })
}

/// Push a catalog id forward to a certified derivation.
pub fn catalog_derivation(s: &Surface, id: &str) -> Result<Derivation, FieldError> {
    let (chart, a, b) = catalog_chart_field(id).ok_or(FieldError::CatalogExtension)?;
    let f = s.pushforward(chart, &a, &b);
    tangency_check(s, &f).map_err(|e| match e {
        FieldError::NotPolynomial(_) => FieldError::CatalogExtension,
        other => other,
    })
}

/// The complete-field catalog of a surface: the eight push-forwards, plus the
/// additive fields when P(0) = 0 or Q(0) = 0.
pub fn catalog(s: &Surface) -> Result<Vec<CatalogEntry>, FieldError> {
    use catalog_ids::*;
    let mut out = Vec::new();
    let base = [
        PHI_Y2_DX, PHI_XY_DX, PHI_XY_DY, PSI_V2_DU, PSI_UV_DU, PSI_UV_DV, CHI_XU_DX, CHI_XU_DU,
    ];
    for id in base {
        let (chart, a, b) = catalog_chart_field(id).unwrap();
        let derivation = catalog_derivation(s, id)?;
        out.push(CatalogEntry {
            id,
            chart,
            chart_coeffs: (a, b),
            derivation,
            reason: CompletenessReason::EasyComplete,
        });
    }
    if s.p0_zero {
        let (chart, a, b) = catalog_chart_field(PHI_Y_DX_LND).unwrap();
        let derivation = catalog_derivation(s, PHI_Y_DX_LND)?;
        out.push(CatalogEntry {
            id: PHI_Y_DX_LND,
            chart,
            chart_coeffs: (a, b),
            derivation,
            reason: CompletenessReason::LndRemark,
        });
    }
    if s.q0_zero {
        let (chart, a, b) = catalog_chart_field(PSI_V_DU_LND).unwrap();
        let derivation = catalog_derivation(s, PSI_V_DU_LND)?;
        out.push(CatalogEntry {
            id: PSI_V_DU_LND,
            chart,
            chart_coeffs: (a, b),
            derivation,
            reason: CompletenessReason::LndRemark,
        });
    }
    Ok(out)
}

/// The shear criterion: f * Theta is complete iff Theta(Theta(f)) = 0, checked
/// as exact ideal arithmetic on ambient representatives.
pub fn shear_complete(s: &Surface, theta: &Derivation, f: &MultiPoly) -> bool {
    let once = theta.apply(s, f);
    theta.apply(s, &once).is_zero()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nilpotency {
    Yes { steps: usize },
    No,
    Unknown,
}

/// Iterate V on the coordinate functions modulo the ideal. A derivation that
/// kills every coordinate in finitely many steps is locally nilpotent by the
/// Leibniz rule. The `No` verdict covers only the detectable eigen-pattern
/// V(h) = c*h with V(c) = 0 and c*h nonzero in the ring.
pub fn locally_nilpotent(s: &Surface, v: &Derivation, cap: usize) -> Nilpotency {
    let mut worst = 0usize;
    for sym in COORD_ORDER {
        let h0 = s.nf(&MultiPoly::var(sym));
        let mut h = h0;
        let mut steps = 0usize;
        loop {
            if h.is_zero() {
                break;
            }
            if steps >= cap {
                return Nilpotency::Unknown;
            }
            let next = v.apply(s, &h);
            if !next.is_zero() {
                if let Some(c) = next.exact_divide(&h) {
                    if !c.is_zero()
                        && v.apply(s, &c).is_zero()
                        && !s.nf(&c.mul(&h)).is_zero()
                        && !s.nf(&c.mul(&c).mul(&h)).is_zero()
                    {
                        return Nilpotency::No;
                    }
                }
            }
            h = next;
            steps += 1;
        }
        worst = worst.max(steps);
    }
    Nilpotency::Yes { steps: worst }
}

/// Express a tangent field in a chart: the pair of rational functions of the
/// chart parameters acting as d/ds and d/dt coefficients. Well-defined on
/// classes modulo the ideal because the chart lands on the surface.
pub fn chart_coefficients(s: &Surface, chart: ChartId, v: &Derivation) -> (RatioPoly, RatioPoly) {
    let (sp, tp) = chart.params();
    let a = s.chart_form(chart, &v.comps[crate::surface::coord_index(sp)]);
    let b = s.chart_form(chart, &v.comps[crate::surface::coord_index(tp)]);
    (a, b)
}

/// Independent two-variable bracket oracle: bracket the chart forms of V and
/// W inside the chart and compare against the chart form of an ambient
/// candidate. Exact rational-function arithmetic; no ideal reduction.
pub fn chart_bracket_matches(
    s: &Surface,
    chart: ChartId,
    v: &Derivation,
    w: &Derivation,
    candidate: &Derivation,
) -> bool {
    let (sp, tp) = chart.params();
    let (av, bv) = chart_coefficients(s, chart, v);
    let (aw, bw) = chart_coefficients(s, chart, w);
    // [V, W]^s = V(aw) - W(av), [V, W]^t = V(bw) - W(bv) with
    // V(f) = av df/ds + bv df/dt on the chart.
    let apply = |a: &RatioPoly, b: &RatioPoly, f: &RatioPoly| -> RatioPoly {
        a.mul(&f.derive(sp)).add(&b.mul(&f.derive(tp)))
    };
    let bs = apply(&av, &bv, &aw).sub(&apply(&aw, &bw, &av));
    let bt = apply(&av, &bv, &bw).sub(&apply(&aw, &bw, &bv));
    let (cs, ct) = chart_coefficients(s, chart, candidate);
    bs.eq_rat(&cs) && bt.eq_rat(&ct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::UniPoly;

    fn s_x1_u1() -> Surface {
        Surface::new(
            UniPoly::from_ints(Sym::X, &[-1, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn catalog_counts() {
        let s = s_x1_u1();
        let cat = catalog(&s).unwrap();
        assert_eq!(cat.len(), 8);
        let s2 = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap();
        let cat2 = catalog(&s2).unwrap();
        assert_eq!(cat2.len(), 9);
        assert!(cat2.iter().any(|e| e.id == catalog_ids::PHI_Y_DX_LND));
    }

    #[test]
    fn tangency_failure_for_plain_dx() {
        let s = s_x1_u1();
        let f = AmbientField::from_polys([
            MultiPoly::one(),
            MultiPoly::zero(),
            MultiPoly::zero(),
            MultiPoly::zero(),
        ]);
        assert!(matches!(tangency_check(&s, &f), Err(FieldError::NotTangent(_))));
        // zero field is tangent with zero witnesses
        let z = tangency_check(&s, &AmbientField::zero()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn bracket_antisymmetry_and_d1() {
        let s = s_x1_u1();
        let y2dx = catalog_derivation(&s, catalog_ids::PHI_Y2_DX).unwrap();
        let xydy = catalog_derivation(&s, catalog_ids::PHI_XY_DY).unwrap();
        let b = bracket(&s, &y2dx, &y2dx);
        assert!(b.is_zero());
        // [y^2 dx, xy dy] + 2 xy^2 dx = y^3 dy  (chart identity)
        let xy2dx = tangency_check(
            &s,
            &s.pushforward(
                ChartId::Phi,
                &MultiPoly::var(Sym::X).mul(&MultiPoly::var_pow(Sym::Y, 2)),
                &MultiPoly::zero(),
            ),
        )
        .unwrap();
        let y3dy = tangency_check(
            &s,
            &s.pushforward(ChartId::Phi, &MultiPoly::zero(), &MultiPoly::var_pow(Sym::Y, 3)),
        )
        .unwrap();
        let lhs = bracket(&s, &y2dx, &xydy).add(&s, &xy2dx.scale(&s, &GaussRat::from_int(2)));
        assert_eq!(lhs, y3dy);
        // the raw bracket matches the chart-level oracle
        let raw = bracket(&s, &y2dx, &xydy);
        assert!(chart_bracket_matches(&s, ChartId::Phi, &y2dx, &xydy, &raw));
    }

    #[test]
    fn shear_examples() {
        let s = s_x1_u1();
        let y2dx = catalog_derivation(&s, catalog_ids::PHI_Y2_DX).unwrap();
        assert!(shear_complete(&s, &y2dx, &MultiPoly::var(Sym::Y)));
        let xydy = catalog_derivation(&s, catalog_ids::PHI_XY_DY).unwrap();
        for j in 0..4 {
            assert!(shear_complete(&s, &xydy, &MultiPoly::var_pow(Sym::X, j)));
        }
        let xydx = catalog_derivation(&s, catalog_ids::PHI_XY_DX).unwrap();
        assert!(!shear_complete(&s, &xydx, &MultiPoly::var(Sym::X)));
    }

    #[test]
    fn nilpotency_verdicts() {
        let s = s_x1_u1();
        let cap = 4 * (s.p.degree() + s.q.degree() + 2);
        let y2dx = catalog_derivation(&s, catalog_ids::PHI_Y2_DX).unwrap();
        assert!(matches!(locally_nilpotent(&s, &y2dx, cap), Nilpotency::Yes { .. }));
        let xydy = catalog_derivation(&s, catalog_ids::PHI_XY_DY).unwrap();
        assert_eq!(locally_nilpotent(&s, &xydy, cap), Nilpotency::No);
        assert!(matches!(
            locally_nilpotent(&s, &Derivation::zero(), 1),
            Nilpotency::Yes { steps: 1 }
        ));
    }

    #[test]
    fn jacobi_identity_on_catalog() {
        let s = s_x1_u1();
        let a = catalog_derivation(&s, catalog_ids::PHI_Y2_DX).unwrap();
        let b = catalog_derivation(&s, catalog_ids::PHI_XY_DY).unwrap();
        let c = catalog_derivation(&s, catalog_ids::CHI_XU_DX).unwrap();
        let j = bracket(&s, &a, &bracket(&s, &b, &c))
            .add(&s, &bracket(&s, &b, &bracket(&s, &c, &a)))
            .add(&s, &bracket(&s, &c, &bracket(&s, &a, &b)));
        assert!(j.is_zero());
    }

    #[test]
    fn lnd_display_matches_when_p0_zero() {
        // P(0) = 0: the additive field y dx extends with the (P/x) u Q' term
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap();
        let d = catalog_derivation(&s, catalog_ids::PHI_Y_DX_LND).unwrap();
        let x = MultiPoly::var(Sym::X);
        let y = MultiPoly::var(Sym::Y);
        let u = MultiPoly::var(Sym::U);
        let pm = s.p_mp();
        let qm = s.q_mp();
        let dp = pm.derive(Sym::X);
        let dq = qm.derive(Sym::U);
        let p_over_x = pm.exact_divide(&x).unwrap();
        let display = [
            y.clone(),
            MultiPoly::zero(),
            pm.add(&x.mul(&dp)),
            dp.mul(&qm).add(&dp.mul(&u).mul(&dq)).add(&p_over_x.mul(&u).mul(&dq)),
        ];
        for k in 0..4 {
            assert_eq!(d.comps[k], s.nf(&display[k]), "component {k}");
        }
        let cap = 4 * (s.p.degree() + s.q.degree() + 2);
        assert!(matches!(locally_nilpotent(&s, &d, cap), Nilpotency::Yes { .. }));
    }
}
