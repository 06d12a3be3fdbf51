//! Flows and automorphisms: closed-form chart flows of the catalog fields,
//! numeric integration with invariant-drift control, the explicit shift
//! isomorphism between S_{P,Q} and S_{P,Q~}, and the transitivity planners.

use crate::fields::{catalog_derivation, Derivation};
use crate::gauss::GaussRat;
use crate::numeric::{integrate_flow, poly_roots, NumericError};
use crate::parse::{format_complex, parse_complex, parse_scalar};
use crate::poly::{MultiPoly, Sym, UniPoly};
use crate::surface::{coord_index, swap_point, ChartId, Point, Surface, SurfaceError};
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum FlowError {
    #[error("unknown catalog field `{0}` on this surface")]
    UnknownField(String),
    #[error("point lies outside the chart-dense locus of `{0}`")]
    OutsideChartLocus(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] NumericError),
    #[error("surface error: {0}")]
    Surface(#[from] SurfaceError),
    #[error("isomorphism construction failed: {0}")]
    Theta(String),
    #[error("word step {step}: {message}")]
    BadStep { step: usize, message: String },
}

#[derive(Error, Debug, Clone)]
pub enum PlanError {
    #[error("transitivity requires simple roots; {0} has a multiple root, and its zigzag points are fixed by all algebraic automorphisms")]
    NonSimpleRoots(&'static str),
    #[error("the surface is singular: P and Q both vanish at 0")]
    BothVanishAtZero,
    #[error("point is not on the surface (residual {0:.3e})")]
    NotOnSurface(f64),
    #[error("planner could not find a parameter: {0}")]
    NoParameter(String),
    #[error("flow error during planning: {0}")]
    Flow(#[from] FlowError),
}

/// A flow time: exact when the planner could keep it rational.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeValue {
    Exact(GaussRat),
    Numeric(Complex64),
}

impl TimeValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            TimeValue::Exact(c) => c.to_complex(),
            TimeValue::Numeric(z) => *z,
        }
    }

    pub fn neg(&self) -> TimeValue {
        match self {
            TimeValue::Exact(c) => TimeValue::Exact(-c),
            TimeValue::Numeric(z) => TimeValue::Numeric(-z),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeValue::Exact(c) => c.is_zero(),
            TimeValue::Numeric(z) => z.norm() == 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoDir {
    Fwd,
    Bwd,
}

/// One step of an automorphism word.
#[derive(Clone, Debug)]
pub enum Step {
    Flow { id: String, t: TimeValue },
    Iso { lambda: GaussRat, dir: IsoDir },
    Swap,
}

#[derive(Clone, Debug, Default)]
pub struct AutoWord {
    pub steps: Vec<Step>,
}

impl AutoWord {
    pub fn inverse(&self) -> AutoWord {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Flow { id, t } => Step::Flow { id: id.clone(), t: t.neg() },
                Step::Iso { lambda, dir } => Step::Iso {
                    lambda: lambda.clone(),
                    dir: match dir {
                        IsoDir::Fwd => IsoDir::Bwd,
                        IsoDir::Bwd => IsoDir::Fwd,
                    },
                },
                Step::Swap => Step::Swap,
            })
            .collect();
        AutoWord { steps }
    }

    pub fn concat(mut self, other: AutoWord) -> AutoWord {
        self.steps.extend(other.steps);
        self
    }

    /// word-v1 serialization.
    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| match s {
                Step::Flow { id, t } => {
                    let tstr = match t {
                        TimeValue::Exact(c) => c.to_string(),
                        TimeValue::Numeric(z) => format_complex(*z),
                    };
                    json!({"flow": {"id": id, "t": tstr}})
                }
                Step::Iso { lambda, dir } => json!({"iso": {
                    "lambda": lambda.to_string(),
                    "dir": match dir { IsoDir::Fwd => "fwd", IsoDir::Bwd => "bwd" },
                }}),
                Step::Swap => json!({"swap": true}),
            })
            .collect();
        json!({"schema": "word-v1", "steps": steps})
    }

    pub fn from_json(v: &Value) -> Option<AutoWord> {
        let steps = v.get("steps")?.as_array()?;
        let mut out = Vec::new();
        for s in steps {
            if let Some(f) = s.get("flow") {
                let id = f.get("id")?.as_str()?.to_string();
                let tstr = f.get("t")?.as_str()?;
                let t = match parse_scalar(tstr) {
                    Ok(c) => TimeValue::Exact(c),
                    Err(_) => TimeValue::Numeric(parse_complex(tstr).ok()?),
                };
                out.push(Step::Flow { id, t });
            } else if let Some(i) = s.get("iso") {
                let lambda = parse_scalar(i.get("lambda")?.as_str()?).ok()?;
                let dir = match i.get("dir")?.as_str()? {
                    "fwd" => IsoDir::Fwd,
                    "bwd" => IsoDir::Bwd,
                    _ => return None,
                };
                out.push(Step::Iso { lambda, dir });
            } else if s.get("swap").is_some() {
                out.push(Step::Swap);
            } else {
                return None;
            }
        }
        Some(AutoWord { steps: out })
    }
}

// ---------------------------------------------------------------------------
// closed-form flows
// ---------------------------------------------------------------------------

struct FlowSpec {
    chart: ChartId,
    /// (x, y) -> (x + t * factor, y) when shear; else (x * exp(t*y-ish), y)
    kind: FlowKind,
}

enum FlowKind {
    /// first parameter shifts by t * (second)^2
    ShearSq,
    /// first parameter shifts by t * (second)
    ShearLin,
    /// first parameter scales by exp(t * second)
    ExpFirst,
    /// second parameter scales by exp(t * first)
    ExpSecond,
}

fn flow_spec(id: &str) -> Option<FlowSpec> {
    use crate::fields::catalog_ids::*;
    Some(match id {
        PHI_Y2_DX => FlowSpec { chart: ChartId::Phi, kind: FlowKind::ShearSq },
        PHI_XY_DX => FlowSpec { chart: ChartId::Phi, kind: FlowKind::ExpFirst },
        PHI_XY_DY => FlowSpec { chart: ChartId::Phi, kind: FlowKind::ExpSecond },
        PSI_V2_DU => FlowSpec { chart: ChartId::Psi, kind: FlowKind::ShearSq },
        PSI_UV_DU => FlowSpec { chart: ChartId::Psi, kind: FlowKind::ExpFirst },
        PSI_UV_DV => FlowSpec { chart: ChartId::Psi, kind: FlowKind::ExpSecond },
        CHI_XU_DX => FlowSpec { chart: ChartId::Chi, kind: FlowKind::ExpFirst },
        CHI_XU_DU => FlowSpec { chart: ChartId::Chi, kind: FlowKind::ExpSecond },
        PHI_Y_DX_LND => FlowSpec { chart: ChartId::Phi, kind: FlowKind::ShearLin },
        PSI_V_DU_LND => FlowSpec { chart: ChartId::Psi, kind: FlowKind::ShearLin },
        _ => return None,
    })
}

fn catalog_valid_on(s: &Surface, id: &str) -> bool {
    use crate::fields::catalog_ids::*;
    match id {
        PHI_Y_DX_LND => s.p0_zero,
        PSI_V_DU_LND => s.q0_zero,
        _ => crate::fields::catalog_chart_field(id).is_some(),
    }
}

/// Numeric points too close to a chart's denominator locus are routed to
/// ambient integration: re-embedding divides the accumulated residual by the
/// denominator coordinate, so a wide margin is required.
const NUMERIC_LOCUS_MARGIN: f64 = 1e-3;

fn in_chart_locus(p: &Point, chart: ChartId) -> bool {
    let nz = |s: Sym| match p {
        Point::Exact(c) => !c[coord_index(s)].is_zero(),
        Point::Numeric { z, .. } => z[coord_index(s)].norm() > NUMERIC_LOCUS_MARGIN,
    };
    match chart {
        ChartId::Phi => nz(Sym::Y),
        ChartId::Psi => nz(Sym::V),
        ChartId::Chi => nz(Sym::X) && nz(Sym::U),
    }
}

/// Apply the closed-form chart flow of a catalog field and re-embed. The
/// result stays exact for shear flows with exact time and point.
pub fn closed_flow(
    s: &Surface,
    id: &str,
    t: &TimeValue,
    p: &Point,
    tol: f64,
) -> Result<Point, FlowError> {
    if !catalog_valid_on(s, id) {
        return Err(FlowError::UnknownField(id.to_string()));
    }
    let spec = flow_spec(id).ok_or_else(|| FlowError::UnknownField(id.to_string()))?;
    if !in_chart_locus(p, spec.chart) {
        return Err(FlowError::OutsideChartLocus(id.to_string()));
    }
    let (sp, tp) = spec.chart.params();
    // exact path: shear flows with exact data
    if let (Point::Exact(c), TimeValue::Exact(te)) = (p, t) {
        let a = c[coord_index(sp)].clone();
        let b = c[coord_index(tp)].clone();
        match spec.kind {
            FlowKind::ShearSq => {
                let a2 = &a + &(&(te * &b) * &b);
                return Ok(s.chart_embed(spec.chart, &a2, &b)?);
            }
            FlowKind::ShearLin => {
                let a2 = &a + &(te * &b);
                return Ok(s.chart_embed(spec.chart, &a2, &b)?);
            }
            _ => {}
        }
    }
    // numeric path
    let tz = t.to_complex();
    let a = p.coord(sp);
    let b = p.coord(tp);
    let (a2, b2) = match spec.kind {
        FlowKind::ShearSq => (a + tz * b * b, b),
        FlowKind::ShearLin => (a + tz * b, b),
        FlowKind::ExpFirst => (a * (tz * b).exp(), b),
        FlowKind::ExpSecond => (a, b * (tz * a).exp()),
    };
    Ok(s.chart_embed_numeric(spec.chart, a2, b2, tol)?)
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub endpoint: Point,
    pub max_residual: f64,
    pub steps: usize,
}

/// Numerically integrate the flow of a tangent field over complex time t,
/// monitoring the surface residual and optionally projecting back each step.
pub fn numeric_flow(
    s: &Surface,
    v: &Derivation,
    t: Complex64,
    p: &Point,
    tol: f64,
    project: bool,
) -> Result<FlowResult, FlowError> {
    let start = p.to_complex();
    let f = |z: &[Complex64; 4]| v.eval_complex(z);
    let out = integrate_flow(s, &f, t, start, tol, project)?;
    Ok(FlowResult {
        endpoint: Point::Numeric { z: out.endpoint, tol },
        max_residual: out.max_residual,
        steps: out.steps,
    })
}

// ---------------------------------------------------------------------------
// the explicit isomorphism
// ---------------------------------------------------------------------------

/// The shift isomorphism with symbolic shift: four ambient polynomial
/// components in x, y, u, v, lambda, built with exact divisions by y and x.
pub fn theta_components_symbolic(s: &Surface) -> Result<[MultiPoly; 4], FlowError> {
    theta_components_generic(&s.p, &s.q_mp(), &MultiPoly::var(Sym::L))
}

/// Components for base polynomial P, a Q that may already involve lambda,
/// and an arbitrary polynomial shift expression.
fn theta_components_generic(
    p: &UniPoly,
    q_mp: &MultiPoly,
    lambda: &MultiPoly,
) -> Result<[MultiPoly; 4], FlowError> {
    let x = MultiPoly::var(Sym::X);
    let y = MultiPoly::var(Sym::Y);
    let u = MultiPoly::var(Sym::U);
    let v = MultiPoly::var(Sym::V);
    let pm = p.to_multipoly();
    let p0 = MultiPoly::constant(p.coeff(0));
    let p_at = |arg: &MultiPoly| pm.substitute(&[(Sym::X, arg.clone())]);
    // Q~(w) = Q(w - lambda P(0))
    let q_tilde_at = |arg: &MultiPoly| {
        q_mp.substitute(&[(Sym::U, arg.sub(&lambda.mul(&p0)))])
    };
    let q_at = |arg: &MultiPoly| q_mp.substitute(&[(Sym::U, arg.clone())]);

    let cap_x = x.add(&lambda.mul(&y));
    // (X P(X) - x P(x)) / y is polynomial: the numerator vanishes at y = 0
    let w_num = cap_x.mul(&p_at(&cap_x)).sub(&x.mul(&pm));
    let w = w_num
        .exact_divide(&y)
        .ok_or_else(|| FlowError::Theta("X P(X) - x P(x) is not divisible by y".into()))?;
    let cap_u = u.add(&w);
    let pxp = pm.add(&x.mul(&pm.derive(Sym::X)));
    let u_bar = u.add(&lambda.mul(&pxp));
    let term1_num = p_at(&cap_x).mul(&q_tilde_at(&cap_u)).sub(&pm.mul(&q_tilde_at(&u_bar)));
    let term1 = term1_num
        .exact_divide(&y)
        .ok_or_else(|| FlowError::Theta("P(X)Q~(U) - P(x)Q~(Ubar) is not divisible by y".into()))?;
    let term2_num = u.mul(&q_tilde_at(&u_bar).sub(&q_at(&u)));
    let term2 = term2_num
        .exact_divide(&x)
        .ok_or_else(|| FlowError::Theta("u(Q~(Ubar) - Q(u)) is not divisible by x".into()))?;
    let cap_v = v.add(&term1).add(&term2);
    Ok([cap_x, y, cap_u, cap_v])
}

/// The isomorphism with an exact shift value.
#[derive(Clone, Debug)]
pub struct Theta {
    pub lambda: GaussRat,
    pub comps: [MultiPoly; 4],
    pub target: Surface,
}

pub fn theta(s: &Surface, lambda: &GaussRat) -> Result<Theta, FlowError> {
    let sym = theta_components_symbolic(s)?;
    let lc = MultiPoly::constant(lambda.clone());
    let comps = sym.map(|c| c.substitute(&[(Sym::L, lc.clone())]));
    let shift = -&(lambda * &s.p.coeff(0));
    let q_tilde = s.q.compose_shift(&shift);
    let target = Surface::new(s.p.clone(), q_tilde)
        .map_err(|e| FlowError::Theta(format!("target surface: {e}")))?;
    Ok(Theta { lambda: lambda.clone(), comps, target })
}

impl Theta {
    pub fn apply(&self, p: &Point, tol: f64) -> Result<Point, FlowError> {
        match p {
            Point::Exact(c) => {
                let at = |s: Sym| Some(c[coord_index(s)].clone());
                let img = [
                    self.comps[0].eval_gauss(&at).unwrap(),
                    self.comps[1].eval_gauss(&at).unwrap(),
                    self.comps[2].eval_gauss(&at).unwrap(),
                    self.comps[3].eval_gauss(&at).unwrap(),
                ];
                let pt = Point::Exact(img);
                if self.target.max_residual(&pt) != 0.0 {
                    return Err(FlowError::Theta("exact image left the target surface".into()));
                }
                Ok(pt)
            }
            Point::Numeric { z, .. } => {
                let at = |s: Sym| Some(z[coord_index(s)]);
                let img = [
                    self.comps[0].eval_complex(&at).unwrap(),
                    self.comps[1].eval_complex(&at).unwrap(),
                    self.comps[2].eval_complex(&at).unwrap(),
                    self.comps[3].eval_complex(&at).unwrap(),
                ];
                Ok(self.target.check_numeric(img, tol)?)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThetaReport {
    /// Pullbacks of the three target generators reduce to zero exactly, with
    /// the shift symbolic.
    pub pullback_zero: bool,
    /// The candidate inverse (shift -lambda on the target) composes to the
    /// identity modulo the ideal, shift symbolic.
    pub inverse_identity: bool,
    /// The displayed image formula for points (0, 0, u0, 0) holds modulo
    /// u0 Q(u0) = 0 exactly as printed (requires P(0) = 0).
    pub v1_paper_exact: bool,
    /// Same with the quadratic shift correction term included.
    pub v1_corrected_exact: bool,
    /// The correction term: lambda^2 P(0) P'(0) Q'(u).
    pub v1_correction: MultiPoly,
    /// Largest residual over sampled numeric images.
    pub numeric_max_residual: f64,
}

/// Full verification of the isomorphism: symbolic pullback and inverse
/// composition, the boundary image formula, and seeded numeric spot checks.
pub fn verify_theta(s: &Surface, samples: usize, seed: u64) -> Result<ThetaReport, FlowError> {
    use rand::{Rng, SeedableRng};
    let comps = theta_components_symbolic(s)?;
    let lam = MultiPoly::var(Sym::L);
    let pm = s.p_mp();
    let qm = s.q_mp();
    let p0 = MultiPoly::constant(s.p.coeff(0));
    // target generators with Q~(u) = Q(u - lambda P(0)), lambda symbolic
    let q_tilde = qm.substitute(&[(Sym::U, MultiPoly::var(Sym::U).sub(&lam.mul(&p0)))]);
    let x = MultiPoly::var(Sym::X);
    let y = MultiPoly::var(Sym::Y);
    let u = MultiPoly::var(Sym::U);
    let v = MultiPoly::var(Sym::V);
    let g1t = y.mul(&u).sub(&x.mul(&pm));
    let g2t = x.mul(&v).sub(&u.mul(&q_tilde));
    let g3t = y.mul(&v).sub(&pm.mul(&q_tilde));
    let assign: Vec<(Sym, MultiPoly)> = vec![
        (Sym::X, comps[0].clone()),
        (Sym::Y, comps[1].clone()),
        (Sym::U, comps[2].clone()),
        (Sym::V, comps[3].clone()),
    ];
    let pullback_zero = [&g1t, &g2t, &g3t]
        .iter()
        .all(|g| s.nf(&g.substitute(&assign)).is_zero());

    // inverse composition: components of the shift -lambda on the target
    let minus_lam = lam.neg();
    let bwd = theta_components_generic(&s.p, &q_tilde, &minus_lam)?;
    let inverse_identity = {
        let composed = bwd.clone().map(|c| c.substitute(&assign));
        let coords = [x.clone(), y.clone(), u.clone(), v.clone()];
        composed
            .iter()
            .zip(&coords)
            .all(|(c, w)| s.nf(&c.sub(w)).is_zero())
    };

    // boundary image formula at (0, 0, u, 0), modulo u Q(u)
    let at_boundary: Vec<(Sym, MultiPoly)> = vec![
        (Sym::X, MultiPoly::zero()),
        (Sym::Y, MultiPoly::zero()),
        (Sym::V, MultiPoly::zero()),
    ];
    let v1 = comps[3].substitute(&at_boundary);
    let dp0 = MultiPoly::constant(s.p.derivative().coeff(0));
    let dq = qm.derive(Sym::U);
    let claimed = lam
        .mul(&dp0)
        .mul(&qm.add(&u.mul(&dq).scale(&GaussRat::from_int(2))));
    let correction = lam.pow(2).unwrap().mul(&p0).mul(&dp0).mul(&dq);
    let modulus = u.mul(&qm);
    let rem_of = |p: &MultiPoly| -> MultiPoly { reduce_by_univariate(p, &modulus) };
    let v1_paper_exact = rem_of(&v1.sub(&claimed)).is_zero();
    let v1_corrected_exact = rem_of(&v1.sub(&claimed.add(&correction))).is_zero();

    // numeric spot checks on seeded phi-chart points with integer shifts
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut numeric_max_residual: f64 = 0.0;
    for i in 0..samples {
        let lam_val = GaussRat::from_int((i % 5) as i64 - 2);
        let th = theta(s, &lam_val)?;
        let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if b.norm() < 0.1 {
            b += Complex64::new(0.5, 0.5);
        }
        let p = s.chart_embed_numeric(ChartId::Phi, a, b, 1e-6)?;
        let img = th.apply(&p, 1e-6)?;
        numeric_max_residual = numeric_max_residual.max(th.target.max_residual(&img));
    }

    Ok(ThetaReport {
        pullback_zero,
        inverse_identity,
        v1_paper_exact,
        v1_corrected_exact,
        v1_correction: correction,
        numeric_max_residual,
    })
}

/// Remainder of p under division by a polynomial that is univariate in u
/// (with other symbols as coefficients), eliminating high u-powers.
fn reduce_by_univariate(p: &MultiPoly, modulus: &MultiPoly) -> MultiPoly {
    let d = modulus.degree_in(Sym::U);
    let lead: MultiPoly = modulus
        .terms()
        .filter(|(m, _)| m.exp(Sym::U) == d)
        .fold(MultiPoly::zero(), |acc, (m, c)| {
            let mut m2 = *m;
            m2.0[Sym::U as usize] = 0;
            acc.add(&MultiPoly::term(c.clone(), m2))
        });
    // the modulus u Q(u) has an invertible leading coefficient in u
    let lead_const = {
        debug_assert_eq!(lead.num_terms(), 1);
        let (m, c) = lead.terms().next().unwrap();
        debug_assert!(m.is_one());
        c.clone()
    };
    let mut rem = p.clone();
    loop {
        let top = rem
            .terms()
            .filter(|(m, _)| m.exp(Sym::U) >= d)
            .max_by_key(|(m, _)| m.exp(Sym::U))
            .map(|(m, c)| (*m, c.clone()));
        let Some((m, c)) = top else { return rem };
        let mut qm = m;
        qm.0[Sym::U as usize] -= d;
        let qc = &c / &lead_const;
        rem = rem.sub(&modulus.mul_term(&qc, &qm));
    }
}

// ---------------------------------------------------------------------------
// word execution
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ExecOutcome {
    pub endpoint: Point,
    pub surface: Surface,
    pub max_residual: f64,
    pub steps_taken: usize,
}

/// Execute a word step by step, tracking the current surface through
/// isomorphism and swap steps. Flow steps use the closed form on the
/// chart-dense locus and fall back to numeric integration off it.
pub fn execute_word(s: &Surface, word: &AutoWord, p: &Point, tol: f64) -> Result<ExecOutcome, FlowError> {
    let mut surface = s.clone();
    let mut point = p.clone();
    let mut max_residual: f64 = surface.max_residual(&point);
    let mut steps_taken = 0usize;
    for (i, step) in word.steps.iter().enumerate() {
        match step {
            Step::Flow { id, t } => {
                if t.is_zero() {
                    continue;
                }
                let spec = flow_spec(id)
                    .ok_or_else(|| FlowError::BadStep { step: i, message: format!("unknown id {id}") })?;
                if in_chart_locus(&point, spec.chart) {
                    point = closed_flow(&surface, id, t, &point, tol)?;
                } else {
                    let v = catalog_derivation(&surface, id)
                        .map_err(|e| FlowError::BadStep { step: i, message: e.to_string() })?;
                    let out = numeric_flow(&surface, &v, t.to_complex(), &point, tol, true)?;
                    max_residual = max_residual.max(out.max_residual);
                    point = out.endpoint;
                }
                steps_taken += 1;
            }
            Step::Iso { lambda, dir } => {
                let lam = match dir {
                    IsoDir::Fwd => lambda.clone(),
                    IsoDir::Bwd => -lambda,
                };
                let th = theta(&surface, &lam)?;
                point = th.apply(&point, tol)?;
                surface = th.target;
                steps_taken += 1;
            }
            Step::Swap => {
                point = swap_point(&point);
                surface = surface.swapped();
                steps_taken += 1;
            }
        }
        max_residual = max_residual.max(surface.max_residual(&point));
        if max_residual > tol && !point.is_exact() {
            return Err(FlowError::BadStep { step: i, message: format!("residual {max_residual:.3e} exceeds {tol:.1e}") });
        }
    }
    Ok(ExecOutcome { endpoint: point, surface, max_residual, steps_taken })
}

// ---------------------------------------------------------------------------
// transitivity planning
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Flows,
    Algebraic,
}

fn coord_complex(p: &Point, s: Sym) -> Complex64 {
    p.coord(s)
}

fn is_zero_coord(p: &Point, s: Sym) -> bool {
    match p {
        Point::Exact(c) => c[coord_index(s)].is_zero(),
        Point::Numeric { z, .. } => z[coord_index(s)].norm() == 0.0,
    }
}

/// Smoothness guard shared by the planners; the non-simple-roots diagnostic
/// names the offending polynomial, since those surfaces carry smooth points
/// fixed by every algebraic automorphism.
pub fn plan_preconditions(s: &Surface) -> Result<(), PlanError> {
    if !s.p.simple_roots().unwrap_or(false) {
        return Err(PlanError::NonSimpleRoots("P"));
    }
    if !s.q.simple_roots().unwrap_or(false) {
        return Err(PlanError::NonSimpleRoots("Q"));
    }
    if s.p0_zero && s.q0_zero {
        return Err(PlanError::BothVanishAtZero);
    }
    Ok(())
}

fn check_planner_preconditions(s: &Surface, pts: &[&Point]) -> Result<(), PlanError> {
    plan_preconditions(s)?;
    for p in pts {
        let r = s.max_residual(p);
        if r > 1e-8 {
            return Err(PlanError::NotOnSurface(r));
        }
    }
    Ok(())
}

/// Scan small exact times t = 1, 2, ... until the predicate accepts the
/// flowed point.
fn scan_flow_time(
    s: &Surface,
    id: &str,
    p: &Point,
    accept: &dyn Fn(&Point) -> bool,
) -> Result<(TimeValue, Point), PlanError> {
    for n in 1..=64i64 {
        let t = TimeValue::Exact(GaussRat::from_int(n));
        if let Ok(q) = closed_flow(s, id, &t, p, 1e-8) {
            if accept(&q) {
                return Ok((t, q));
            }
        }
    }
    Err(PlanError::NoParameter(format!("no flow time for {id} moved the point as required")))
}

/// Move a point into the chart-dense locus x != 0, u != 0 with the six
/// holomorphic-transitivity fields.
fn route_to_chi(s: &Surface, p: &Point) -> Result<(AutoWord, Point), PlanError> {
    use crate::fields::catalog_ids::*;
    let mut word = AutoWord::default();
    let mut cur = p.clone();
    for _guard in 0..8 {
        let x0 = is_zero_coord(&cur, Sym::X);
        let u0 = is_zero_coord(&cur, Sym::U);
        if !x0 && !u0 {
            return Ok((word, cur));
        }
        let y0 = is_zero_coord(&cur, Sym::Y);
        let v0 = is_zero_coord(&cur, Sym::V);
        if !y0 {
            // phi-chart shear: choose t with x(t) != 0 and u(t) != 0
            let accept = |q: &Point| !is_zero_coord(q, Sym::X) && !is_zero_coord(q, Sym::U);
            match scan_flow_time(s, PHI_Y2_DX, &cur, &accept) {
                Ok((t, q)) => {
                    word.steps.push(Step::Flow { id: PHI_Y2_DX.into(), t });
                    cur = q;
                    continue;
                }
                Err(_) => {
                    // settle for x != 0 and revisit u on the next pass
                    let accept = |q: &Point| !is_zero_coord(q, Sym::X);
                    let (t, q) = scan_flow_time(s, PHI_Y2_DX, &cur, &accept)?;
                    word.steps.push(Step::Flow { id: PHI_Y2_DX.into(), t });
                    cur = q;
                    continue;
                }
            }
        }
        if !v0 {
            let accept = |q: &Point| !is_zero_coord(q, Sym::U) && !is_zero_coord(q, Sym::X);
            match scan_flow_time(s, PSI_V2_DU, &cur, &accept) {
                Ok((t, q)) => {
                    word.steps.push(Step::Flow { id: PSI_V2_DU.into(), t });
                    cur = q;
                    continue;
                }
                Err(_) => {
                    let accept = |q: &Point| !is_zero_coord(q, Sym::U);
                    let (t, q) = scan_flow_time(s, PSI_V2_DU, &cur, &accept)?;
                    word.steps.push(Step::Flow { id: PSI_V2_DU.into(), t });
                    cur = q;
                    continue;
                }
            }
        }
        // y = v = 0 here
        if !x0 {
            // (x0, 0, 0, 0) with P(x0) = 0: the exp-flow x y d/dx moves u
            // linearly off zero while fixing x, y
            let v = catalog_derivation(s, PHI_XY_DX)
                .map_err(|e| PlanError::NoParameter(e.to_string()))?;
            let out = numeric_flow(s, &v, Complex64::new(1.0, 0.0), &cur, 1e-8, true)?;
            word.steps.push(Step::Flow { id: PHI_XY_DX.into(), t: TimeValue::Numeric(Complex64::new(1.0, 0.0)) });
            cur = out.endpoint;
            continue;
        }
        if !u0 {
            let v = catalog_derivation(s, PSI_UV_DU)
                .map_err(|e| PlanError::NoParameter(e.to_string()))?;
            let out = numeric_flow(s, &v, Complex64::new(1.0, 0.0), &cur, 1e-8, true)?;
            word.steps.push(Step::Flow { id: PSI_UV_DU.into(), t: TimeValue::Numeric(Complex64::new(1.0, 0.0)) });
            cur = out.endpoint;
            continue;
        }
        // the origin: exactly one of P(0), Q(0) vanishes on a smooth surface
        if !s.p0_zero {
            // the shear field is P(0)^2 Q'(0) dv at the origin
            let v = catalog_derivation(s, PHI_Y2_DX)
                .map_err(|e| PlanError::NoParameter(e.to_string()))?;
            let out = numeric_flow(s, &v, Complex64::new(1.0, 0.0), &cur, 1e-8, true)?;
            word.steps.push(Step::Flow { id: PHI_Y2_DX.into(), t: TimeValue::Numeric(Complex64::new(1.0, 0.0)) });
            cur = out.endpoint;
        } else {
            let v = catalog_derivation(s, PSI_V2_DU)
                .map_err(|e| PlanError::NoParameter(e.to_string()))?;
            let out = numeric_flow(s, &v, Complex64::new(1.0, 0.0), &cur, 1e-8, true)?;
            word.steps.push(Step::Flow { id: PSI_V2_DU.into(), t: TimeValue::Numeric(Complex64::new(1.0, 0.0)) });
            cur = out.endpoint;
        }
    }
    Err(PlanError::NoParameter("chi-locus routing did not converge".into()))
}

/// Inside the chi locus the two exp-flows act transitively on C* x C*.
fn chi_steps_to(s: &Surface, from: &Point, x_r: Complex64, u_r: Complex64) -> Result<(AutoWord, Point), PlanError> {
    use crate::fields::catalog_ids::*;
    let mut word = AutoWord::default();
    let mut cur = from.clone();
    let x1 = coord_complex(&cur, Sym::X);
    let u1 = coord_complex(&cur, Sym::U);
    // x * exp(u t) = x_r
    let t1 = (x_r / x1).ln() / u1;
    if t1.norm() > 0.0 {
        let t = TimeValue::Numeric(t1);
        cur = closed_flow(s, CHI_XU_DX, &t, &cur, 1e-8)?;
        word.steps.push(Step::Flow { id: CHI_XU_DX.into(), t });
    }
    let x2 = coord_complex(&cur, Sym::X);
    let u2 = coord_complex(&cur, Sym::U);
    let t2 = (u_r / u2).ln() / x2;
    if t2.norm() > 0.0 {
        let t = TimeValue::Numeric(t2);
        cur = closed_flow(s, CHI_XU_DU, &t, &cur, 1e-8)?;
        word.steps.push(Step::Flow { id: CHI_XU_DU.into(), t });
    }
    Ok((word, cur))
}

/// Additive-group route: raise y (or v) off zero using only shear flows and
/// shift isomorphisms.
fn route_to_y_nonzero(s: &Surface, p: &Point, depth: usize) -> Result<(AutoWord, Point), PlanError> {
    use crate::fields::catalog_ids::*;
    if depth > 3 {
        return Err(PlanError::NoParameter("additive routing recursion exceeded".into()));
    }
    let mut word = AutoWord::default();
    let cur = p.clone();
    if !is_zero_coord(&cur, Sym::Y) {
        return Ok((word, cur));
    }
    if !is_zero_coord(&cur, Sym::V) {
        // psi shear moves u; y(s) = Q(u_s) P(x_s) / v vanishes for finitely many s
        let accept = |q: &Point| !is_zero_coord(q, Sym::Y);
        let (t, q) = scan_flow_time(s, PSI_V2_DU, &cur, &accept)?;
        word.steps.push(Step::Flow { id: PSI_V2_DU.into(), t });
        return Ok((word, q));
    }
    // zigzag point (x0, 0, u0, 0): escape with a shift isomorphism whose
    // image has v != 0, ride the psi shear to y != 0 there (the isomorphism
    // preserves y), and come back with the inverse shift
    for n in 0..=64i64 {
        let lam = GaussRat::from_int(n);
        let th = theta(s, &lam).map_err(PlanError::Flow)?;
        let img = th.apply(&cur, 1e-8).map_err(PlanError::Flow)?;
        if is_zero_coord(&img, Sym::V) && is_zero_coord(&img, Sym::Y) {
            continue;
        }
        word.steps.push(Step::Iso { lambda: lam.clone(), dir: IsoDir::Fwd });
        let (inner, q_img) = route_to_y_nonzero(&th.target, &img, depth + 1)?;
        let mut w2 = word.concat(inner);
        w2.steps.push(Step::Iso { lambda: lam, dir: IsoDir::Bwd });
        // the inverse shift returns to the original surface and keeps y
        let th_back = theta(&th.target, &-&th.lambda).map_err(PlanError::Flow)?;
        let q_back = th_back.apply(&q_img, 1e-8).map_err(PlanError::Flow)?;
        return Ok((w2, q_back));
    }
    // the u-side shift cannot move this point; mirror through the swap
    let mut w = AutoWord { steps: vec![Step::Swap] };
    let (inner, q_sw) = route_to_y_nonzero(&s.swapped(), &swap_point(&cur), depth + 1)?;
    w = w.concat(inner);
    w.steps.push(Step::Swap);
    // after swapping back, v != 0; one more pass raises y
    let q0 = swap_point(&q_sw);
    let accept = |q: &Point| !is_zero_coord(q, Sym::Y);
    let (t, q) = scan_flow_time(s, PSI_V2_DU, &q0, &accept)?;
    w.steps.push(Step::Flow { id: PSI_V2_DU.into(), t });
    Ok((w, q))
}

/// Shear dance from a y != 0 point to the fixed reference phi(0, 1): set x to
/// a good intermediate, solve the psi-shear time landing y on 1, then set x
/// to the reference value.
fn dance_to_ref(s: &Surface, p: &Point) -> Result<(AutoWord, Point), PlanError> {
    use crate::fields::catalog_ids::*;
    let mut word = AutoWord::default();
    let mut cur = p.clone();
    let y_r = Complex64::new(1.0, 0.0);
    let x_r = Complex64::new(0.0, 0.0);

    // step 1: move x so that u and Q(u) and thus v are nonzero
    let accept = |q: &Point| {
        !is_zero_coord(q, Sym::U) && !is_zero_coord(q, Sym::V)
    };
    if !accept(&cur) {
        let (t, q) = scan_flow_time(s, PHI_Y2_DX, &cur, &accept)?;
        word.steps.push(Step::Flow { id: PHI_Y2_DX.into(), t });
        cur = q;
    }

    // step 2: psi-shear time solving y(s) = 1: y(s) = Q(u + v^2 s) P(x(s)) / v
    let u0 = coord_complex(&cur, Sym::U);
    let v0 = coord_complex(&cur, Sym::V);
    let s_time = {
        // y(s) - y_r as a complex polynomial in s, expanded by composition
        let mut shifted = compose_dance_poly(s, u0, v0);
        shifted[0] -= y_r;
        let roots = poly_roots(&shifted).map_err(FlowError::Numeric)?;
        roots
            .into_iter()
            .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .ok_or_else(|| PlanError::NoParameter("no shear time lands on the reference height".into()))?
    };
    let t = TimeValue::Numeric(s_time);
    cur = closed_flow(s, PSI_V2_DU, &t, &cur, 1e-7).map_err(PlanError::Flow)?;
    word.steps.push(Step::Flow { id: PSI_V2_DU.into(), t });

    // step 3: phi-shear to the reference x
    let x1 = coord_complex(&cur, Sym::X);
    let y1 = coord_complex(&cur, Sym::Y);
    let t3 = (x_r - x1) / (y1 * y1);
    if t3.norm() > 0.0 {
        let t = TimeValue::Numeric(t3);
        cur = closed_flow(s, PHI_Y2_DX, &t, &cur, 1e-7).map_err(PlanError::Flow)?;
        word.steps.push(Step::Flow { id: PHI_Y2_DX.into(), t });
    }
    Ok((word, cur))
}

/// Coefficients (ascending in s) of y(s) = Q(u0 + v0^2 s) * P(x(s)) / v0 with
/// x(s) = (u0 + v0^2 s) Q(u0 + v0^2 s) / v0, as complex numbers.
fn compose_dance_poly(s: &Surface, u0: Complex64, v0: Complex64) -> Vec<Complex64> {
    // u_s = u0 + v0^2 s (degree 1)
    let us = vec![u0, v0 * v0];
    let q_of_us = compose_uni(&s.q, &us);
    let mut xs = mul_poly(&us, &q_of_us);
    for c in xs.iter_mut() {
        *c /= v0;
    }
    let p_of_xs = compose_uni(&s.p, &xs);
    let mut y = mul_poly(&q_of_us, &p_of_xs);
    for c in y.iter_mut() {
        *c /= v0;
    }
    y
}

fn mul_poly(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn compose_uni(p: &UniPoly, arg: &[Complex64]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0)];
    for c in p.coeffs().iter().rev() {
        acc = mul_poly(&acc, arg);
        if acc.is_empty() {
            acc = vec![Complex64::new(0.0, 0.0)];
        }
        acc[0] += c.to_complex();
    }
    acc
}

/// Plan an automorphism word mapping p to q.
///
/// mode Flows uses the six fields of the holomorphic-transitivity argument
/// (chi-chart exponentials plus the chart shears); mode Algebraic uses only
/// additive flows and shift isomorphisms. Both compose p -> reference and the
/// inverse of q -> reference.
pub fn plan_transitivity(s: &Surface, p: &Point, q: &Point, mode: Mode) -> Result<AutoWord, PlanError> {
    check_planner_preconditions(s, &[p, q])?;
    if p == q {
        return Ok(AutoWord::default());
    }
    match mode {
        Mode::Flows => {
            let (wp, p1) = route_to_chi(s, p)?;
            let (wq, q1) = route_to_chi(s, q)?;
            // common chi-reference (1, 1)
            let xr = Complex64::new(1.0, 0.0);
            let ur = Complex64::new(1.0, 0.0);
            let (wp2, _) = chi_steps_to(s, &p1, xr, ur)?;
            let (wq2, _) = chi_steps_to(s, &q1, xr, ur)?;
            Ok(wp.concat(wp2).concat(wq2.inverse()).concat(wq.inverse()))
        }
        Mode::Algebraic => {
            let (wp, p1) = route_to_y_nonzero(s, p, 0)?;
            let (wq, q1) = route_to_y_nonzero(s, q, 0)?;
            let (wp2, _) = dance_to_ref(s, &p1)?;
            let (wq2, _) = dance_to_ref(s, &q1)?;
            Ok(wp.concat(wp2).concat(wq2.inverse()).concat(wq.inverse()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog_ids::*;

    fn s_x1_u1() -> Surface {
        Surface::new(
            UniPoly::from_ints(Sym::X, &[-1, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap()
    }

    fn pt_exact(s: &Surface, chart: ChartId, a: i64, b: i64) -> Point {
        s.chart_embed(chart, &GaussRat::from_int(a), &GaussRat::from_int(b)).unwrap()
    }

    #[test]
    fn closed_flow_example() {
        let s = s_x1_u1();
        let p = pt_exact(&s, ChartId::Phi, 0, 1);
        let q = closed_flow(&s, PHI_Y2_DX, &TimeValue::Exact(GaussRat::from_int(1)), &p, 1e-9).unwrap();
        let expect = [
            GaussRat::from_int(1),
            GaussRat::from_int(1),
            GaussRat::from_int(0),
            GaussRat::from_int(0),
        ];
        assert_eq!(q, Point::Exact(expect));
        // t = 0 is the identity
        let r = closed_flow(&s, PHI_Y2_DX, &TimeValue::Exact(GaussRat::zero()), &p, 1e-9).unwrap();
        assert_eq!(r, p);
    }

    #[test]
    fn group_law_numeric() {
        let s = s_x1_u1();
        let p = s
            .chart_embed_numeric(ChartId::Phi, Complex64::new(0.3, 0.1), Complex64::new(1.2, -0.4), 1e-9)
            .unwrap();
        for id in [PHI_Y2_DX, PHI_XY_DX, PHI_XY_DY] {
            let t1 = TimeValue::Numeric(Complex64::new(0.3, 0.2));
            let t2 = TimeValue::Numeric(Complex64::new(-0.1, 0.45));
            let t12 = TimeValue::Numeric(Complex64::new(0.2, 0.65));
            let a = closed_flow(&s, id, &t1, &p, 1e-8).unwrap();
            let ab = closed_flow(&s, id, &t2, &a, 1e-8).unwrap();
            let c = closed_flow(&s, id, &t12, &p, 1e-8).unwrap();
            let d: f64 = ab
                .to_complex()
                .iter()
                .zip(c.to_complex().iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-8, "{id}: {d}");
        }
    }

    #[test]
    fn closed_vs_numeric() {
        let s = s_x1_u1();
        let p = pt_exact(&s, ChartId::Phi, 0, 1);
        let v = catalog_derivation(&s, PHI_Y2_DX).unwrap();
        let t = Complex64::new(1.0, 0.0);
        let num = numeric_flow(&s, &v, t, &p, 1e-8, true).unwrap();
        let cf = closed_flow(&s, PHI_Y2_DX, &TimeValue::Numeric(t), &p, 1e-8).unwrap();
        let d: f64 = num
            .endpoint
            .to_complex()
            .iter()
            .zip(cf.to_complex().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-9, "difference {d}");
        // V = 0 leaves the point fixed
        let z = numeric_flow(&s, &Derivation::zero(), t, &p, 1e-8, false).unwrap();
        assert_eq!(z.endpoint.to_complex(), p.to_complex());
    }

    #[test]
    fn theta_identity_at_lambda_zero() {
        let s = s_x1_u1();
        let th = theta(&s, &GaussRat::zero()).unwrap();
        assert_eq!(th.target.q, s.q);
        let p = pt_exact(&s, ChartId::Phi, 2, 1);
        let img = th.apply(&p, 1e-9).unwrap();
        assert_eq!(img, p);
    }

    #[test]
    fn theta_report_on_both_test_surfaces() {
        let s = s_x1_u1();
        let rep = verify_theta(&s, 20, 7).unwrap();
        assert!(rep.pullback_zero);
        assert!(rep.inverse_identity);
        // P(0) != 0: the printed boundary formula needs the quadratic term
        assert!(!rep.v1_paper_exact);
        assert!(rep.v1_corrected_exact);
        assert!(rep.numeric_max_residual < 1e-10);

        let s2 = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap();
        let rep2 = verify_theta(&s2, 20, 7).unwrap();
        assert!(rep2.pullback_zero);
        assert!(rep2.inverse_identity);
        assert!(rep2.v1_paper_exact);
        assert!(rep2.v1_corrected_exact);
    }

    #[test]
    fn theta_boundary_value_example() {
        // S_{x, u-1}, shift 1, point (0,0,1,0): image v = 2
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1]),
            UniPoly::from_ints(Sym::U, &[-1, 1]),
        )
        .unwrap();
        let th = theta(&s, &GaussRat::from_int(1)).unwrap();
        let p = Point::Exact([
            GaussRat::zero(),
            GaussRat::zero(),
            GaussRat::from_int(1),
            GaussRat::zero(),
        ]);
        assert_eq!(s.max_residual(&p), 0.0);
        let img = th.apply(&p, 1e-9).unwrap();
        assert_eq!(img.exact_coord(Sym::V).unwrap(), &GaussRat::from_int(2));
    }

    #[test]
    fn word_inverse_round_trip() {
        let s = s_x1_u1();
        let p = pt_exact(&s, ChartId::Phi, 2, 1);
        let word = AutoWord {
            steps: vec![
                Step::Flow { id: PHI_Y2_DX.into(), t: TimeValue::Exact(GaussRat::from_int(2)) },
                Step::Flow { id: CHI_XU_DX.into(), t: TimeValue::Numeric(Complex64::new(0.3, 0.7)) },
                Step::Iso { lambda: GaussRat::from_int(1), dir: IsoDir::Fwd },
                Step::Swap,
            ],
        };
        let fwd = execute_word(&s, &word, &p, 1e-7).unwrap();
        let back = execute_word(&fwd.surface, &word.inverse(), &fwd.endpoint, 1e-7).unwrap();
        let d: f64 = back
            .endpoint
            .to_complex()
            .iter()
            .zip(p.to_complex().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-8, "round trip error {d}");
    }

    #[test]
    fn empty_word_on_equal_points() {
        let s = s_x1_u1();
        let p = pt_exact(&s, ChartId::Phi, 0, 1);
        let w = plan_transitivity(&s, &p, &p, Mode::Flows).unwrap();
        assert!(w.steps.is_empty());
    }

    #[test]
    fn non_simple_roots_rejected() {
        let s = Surface::new(
            UniPoly::from_ints(Sym::X, &[0, 1, -2, 1]),
            UniPoly::from_ints(Sym::U, &[0, 1, -2, 1]),
        )
        .unwrap();
        let p = Point::Exact([
            GaussRat::from_int(1),
            GaussRat::zero(),
            GaussRat::from_int(1),
            GaussRat::zero(),
        ]);
        assert_eq!(s.max_residual(&p), 0.0);
        let q = Point::Exact([
            GaussRat::zero(),
            GaussRat::from_int(1),
            GaussRat::zero(),
            GaussRat::from_int(1),
        ]);
        match plan_transitivity(&s, &p, &q, Mode::Algebraic) {
            Err(PlanError::NonSimpleRoots(_)) => {}
            other => panic!("expected the non-simple-roots rejection, got {other:?}"),
        }
    }

    #[test]
    fn boundary_to_interior_both_modes() {
        let s = s_x1_u1();
        // (1,0,1,0) is a zigzag point; (0,1,0,1) is the phi(0,1) reference
        let p = pt_exact(&s, ChartId::Chi, 1, 1);
        let q = pt_exact(&s, ChartId::Phi, 0, 1);
        for mode in [Mode::Flows, Mode::Algebraic] {
            let w = plan_transitivity(&s, &p, &q, mode).unwrap();
            let out = execute_word(&s, &w, &p, 1e-6).unwrap();
            let qc = q.to_complex();
            let scale = qc.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            let d: f64 = out
                .endpoint
                .to_complex()
                .iter()
                .zip(qc.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d / scale < 1e-6, "{mode:?}: endpoint error {d}");
            assert!(out.max_residual < 1e-7, "{mode:?}: residual {}", out.max_residual);
        }
    }
}
