//! Gaussian field realizations with exact analytic derivatives, and coupled
//! pairs of realizations sharing coefficient noise.
//!
//! A realization is the finite trigonometric sum
//!
//! ```text
//! f(x) = sum_k sqrt(w_k) (a_k cos<atom_k, x> + b_k sin<atom_k, x>)
//! ```
//!
//! with `a_k, b_k` i.i.d. standard normal, so `E[f(x) f(y)]` equals the
//! spectral measure's kernel at `x - y` by construction and every derivative
//! is another exact trigonometric sum. Coefficients come from the
//! counter-based generator keyed by `(seed, atom index, slot)`.

use crate::error::{Error, Result};
use crate::grid::{Domain, UniformGrid2};
use crate::rng::CounterRng;
use crate::spectral::{multi_indices_up_to, SpectralMeasure};
use crate::transport::CouplingPlan;

/// 2-jet of a scalar field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

impl Jet2 {
    pub fn grad_norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

/// General-dimension jet (value, gradient, row-major Hessian).
#[derive(Debug, Clone, PartialEq)]
pub struct JetD {
    pub f: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// A twice-differentiable scalar field on the plane.
///
/// Grid evaluations have default pointwise implementations; [`SampledField`]
/// overrides them with a separable cos/sin table scheme that avoids
/// per-point trigonometry.
pub trait C2Field: Sync {
    fn jet(&self, x: f64, y: f64) -> Jet2;

    fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).f
    }

    fn values_on_grid(&self, g: &UniformGrid2) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.index(i, j)] = self.value(g.x(i), g.y(j));
            }
        }
        out
    }

    fn jets_on_grid(&self, g: &UniformGrid2) -> Vec<Jet2> {
        let mut out = vec![Jet2::default(); g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.index(i, j)] = self.jet(g.x(i), g.y(j));
            }
        }
        out
    }

    /// Seed used to derive deterministic quadrature-node jitter.
    fn seed_hint(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone)]
struct FieldTerm {
    atom: Vec<f64>,
    sqrt_weight: f64,
    a: f64,
    b: f64,
}

/// One Gaussian field realization.
#[derive(Debug, Clone)]
pub struct SampledField {
    dim: usize,
    terms: Vec<FieldTerm>,
    seed: u64,
}

impl SampledField {
    /// Draw a realization of the field with spectral measure `m`.
    ///
    /// Same seed, same measure: bit-identical field, independent of where or
    /// in which order it is later evaluated.
    pub fn draw(m: &SpectralMeasure, seed: u64) -> Self {
        let rng = CounterRng::new(seed);
        let terms = m
            .atoms()
            .iter()
            .zip(m.weights())
            .enumerate()
            .map(|(k, (atom, w))| FieldTerm {
                atom: atom.clone(),
                sqrt_weight: w.sqrt(),
                a: rng.normal(k as u64, 0),
                b: rng.normal(k as u64, 1),
            })
            .collect();
        Self { dim: m.dim(), terms, seed }
    }

    /// Build a realization with explicitly provided coefficient pairs.
    pub fn with_coefficients(m: &SpectralMeasure, coeffs: &[(f64, f64)]) -> Result<Self> {
        if coeffs.len() != m.len() {
            return Err(Error::InvalidParameter(format!(
                "need {} coefficient pairs, got {}",
                m.len(),
                coeffs.len()
            )));
        }
        let terms = m
            .atoms()
            .iter()
            .zip(m.weights())
            .zip(coeffs)
            .map(|((atom, w), &(a, b))| FieldTerm {
                atom: atom.clone(),
                sqrt_weight: w.sqrt(),
                a,
                b,
            })
            .collect();
        Ok(Self { dim: m.dim(), terms, seed: 0 })
    }

    fn from_rows(dim: usize, rows: Vec<(Vec<f64>, f64, f64, f64)>, seed: u64) -> Self {
        let terms = rows
            .into_iter()
            .map(|(atom, w, a, b)| FieldTerm { atom, sqrt_weight: w.sqrt(), a, b })
            .collect();
        Self { dim, terms, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        self.terms.iter().map(|t| (t.a, t.b)).collect()
    }

    /// The field with every coefficient negated (the realization of -f).
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.a = -t.a;
            t.b = -t.b;
        }
        out
    }

    /// Field value at a point of any dimension.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for t in &self.terms {
            let u: f64 = t.atom.iter().zip(x).map(|(a, v)| a * v).sum();
            let (su, cu) = u.sin_cos();
            acc += t.sqrt_weight * (t.a * cu + t.b * su);
        }
        acc
    }

    /// Exact 2-jet at a point of any dimension.
    pub fn jet_at(&self, x: &[f64]) -> JetD {
        assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let mut f = 0.0;
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for t in &self.terms {
            let u: f64 = t.atom.iter().zip(x).map(|(a, v)| a * v).sum();
            let (su, cu) = u.sin_cos();
            let e = t.sqrt_weight * (t.a * cu + t.b * su);
            let o = t.sqrt_weight * (t.b * cu - t.a * su);
            f += e;
            for i in 0..d {
                grad[i] += o * t.atom[i];
                for j in 0..d {
                    hess[i * d + j] -= e * t.atom[i] * t.atom[j];
                }
            }
        }
        JetD { f, grad, hess }
    }
}

impl C2Field for SampledField {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        debug_assert_eq!(self.dim, 2);
        let mut jet = Jet2::default();
        for t in &self.terms {
            let l1 = t.atom[0];
            let l2 = t.atom[1];
            let u = l1 * x + l2 * y;
            let (su, cu) = u.sin_cos();
            let e = t.sqrt_weight * (t.a * cu + t.b * su);
            let o = t.sqrt_weight * (t.b * cu - t.a * su);
            jet.f += e;
            jet.fx += o * l1;
            jet.fy += o * l2;
            jet.fxx -= e * l1 * l1;
            jet.fxy -= e * l1 * l2;
            jet.fyy -= e * l2 * l2;
        }
        jet
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        self.value_at(&[x, y])
    }

    // Separable evaluation: cos/sin tables along each axis turn the grid
    // pass into multiply-adds via the angle addition identities.
    fn values_on_grid(&self, g: &UniformGrid2) -> Vec<f64> {
        debug_assert_eq!(self.dim, 2);
        let mut out = vec![0.0; g.len()];
        let (mut cx, mut sx) = (vec![0.0; g.nx], vec![0.0; g.nx]);
        let (mut cy, mut sy) = (vec![0.0; g.ny], vec![0.0; g.ny]);
        for t in &self.terms {
            fill_axis_tables(t.atom[0], g.x0, g.dx, &mut cx, &mut sx);
            fill_axis_tables(t.atom[1], g.y0, g.dy, &mut cy, &mut sy);
            let wa = t.sqrt_weight * t.a;
            let wb = t.sqrt_weight * t.b;
            for j in 0..g.ny {
                let (cyj, syj) = (cy[j], sy[j]);
                let row = &mut out[j * g.nx..(j + 1) * g.nx];
                for (i, slot) in row.iter_mut().enumerate() {
                    let cu = cx[i] * cyj - sx[i] * syj;
                    let su = sx[i] * cyj + cx[i] * syj;
                    *slot += wa * cu + wb * su;
                }
            }
        }
        out
    }

    fn jets_on_grid(&self, g: &UniformGrid2) -> Vec<Jet2> {
        debug_assert_eq!(self.dim, 2);
        let mut out = vec![Jet2::default(); g.len()];
        let (mut cx, mut sx) = (vec![0.0; g.nx], vec![0.0; g.nx]);
        let (mut cy, mut sy) = (vec![0.0; g.ny], vec![0.0; g.ny]);
        for t in &self.terms {
            let l1 = t.atom[0];
            let l2 = t.atom[1];
            let (l11, l12, l22) = (l1 * l1, l1 * l2, l2 * l2);
            fill_axis_tables(l1, g.x0, g.dx, &mut cx, &mut sx);
            fill_axis_tables(l2, g.y0, g.dy, &mut cy, &mut sy);
            let wa = t.sqrt_weight * t.a;
            let wb = t.sqrt_weight * t.b;
            for j in 0..g.ny {
                let (cyj, syj) = (cy[j], sy[j]);
                let row = &mut out[j * g.nx..(j + 1) * g.nx];
                for (i, jet) in row.iter_mut().enumerate() {
                    let cu = cx[i] * cyj - sx[i] * syj;
                    let su = sx[i] * cyj + cx[i] * syj;
                    let e = wa * cu + wb * su;
                    let o = wb * cu - wa * su;
                    jet.f += e;
                    jet.fx += o * l1;
                    jet.fy += o * l2;
                    jet.fxx -= e * l11;
                    jet.fxy -= e * l12;
                    jet.fyy -= e * l22;
                }
            }
        }
        out
    }

    fn seed_hint(&self) -> u64 {
        self.seed
    }
}

fn fill_axis_tables(lambda: f64, origin: f64, step: f64, c: &mut [f64], s: &mut [f64]) {
    for i in 0..c.len() {
        let u = lambda * (origin + i as f64 * step);
        let (su, cu) = u.sin_cos();
        c[i] = cu;
        s[i] = su;
    }
}

/// The paraboloid f(x, y) = (x^2 + y^2) / 2, whose level sets are circles.
#[derive(Debug, Clone, Copy)]
pub struct RadialParaboloid;

impl C2Field for RadialParaboloid {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        Jet2 {
            f: 0.5 * (x * x + y * y),
            fx: x,
            fy: y,
            fxx: 1.0,
            fxy: 0.0,
            fyy: 1.0,
        }
    }
}

/// The linear field f(x, y) = ux x + uy y.
#[derive(Debug, Clone, Copy)]
pub struct LinearField {
    pub ux: f64,
    pub uy: f64,
}

impl C2Field for LinearField {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        Jet2 {
            f: self.ux * x + self.uy * y,
            fx: self.ux,
            fy: self.uy,
            ..Jet2::default()
        }
    }
}

/// One matched atom pair of a coupled field pair.
#[derive(Debug, Clone)]
pub struct AtomPairing {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub weight: f64,
}

/// Two field realizations sharing coefficient noise over paired atoms.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    field1: SampledField,
    field2: SampledField,
    pairing: Vec<AtomPairing>,
    seed: u64,
}

/// Coupling quality diagnostics over a domain grid.
///
/// `sigma_d` is deterministic given the coupling (a closed-form variance
/// maximum, no Monte Carlo noise); `beta` is the realization-wise C^2
/// sup-norm of the difference field.
#[derive(Debug, Clone, Copy)]
pub struct CouplingDiagnostics {
    pub sigma_d: f64,
    pub beta: f64,
    pub grid_spacing: f64,
}

const MARGINAL_TOL: f64 = 1e-10;
const ATOM_MATCH_TOL: f64 = 1e-12;

impl CoupledPair {
    /// Couple two measures through a transport plan, drawing shared
    /// coefficients keyed by `seed`.
    ///
    /// The plan's source marginal must reproduce `m1` and its target marginal
    /// `m2` (modulo the `±` symmetrization), each within 1e-10.
    pub fn couple(
        m1: &SpectralMeasure,
        m2: &SpectralMeasure,
        plan: &CouplingPlan,
        seed: u64,
    ) -> Result<Self> {
        if m1.dim() != m2.dim() {
            return Err(Error::DimensionMismatch { expected: m1.dim(), got: m2.dim() });
        }
        validate_marginal(m1, plan.pairs.iter().map(|p| (&p.source, p.weight)), "source")?;
        validate_marginal(m2, plan.pairs.iter().map(|p| (&p.target, p.weight)), "target")?;

        let rng = CounterRng::new(seed);
        let mut rows1 = Vec::with_capacity(plan.pairs.len());
        let mut rows2 = Vec::with_capacity(plan.pairs.len());
        let mut pairing = Vec::with_capacity(plan.pairs.len());
        for (k, pair) in plan.pairs.iter().enumerate() {
            let a = rng.normal(k as u64, 0);
            let b = rng.normal(k as u64, 1);
            rows1.push((pair.source.clone(), pair.weight, a, b));
            rows2.push((pair.target.clone(), pair.weight, a, b));
            pairing.push(AtomPairing {
                s: pair.source.clone(),
                t: pair.target.clone(),
                weight: pair.weight,
            });
        }
        Ok(Self {
            field1: SampledField::from_rows(m1.dim(), rows1, seed),
            field2: SampledField::from_rows(m2.dim(), rows2, seed),
            pairing,
            seed,
        })
    }

    /// Identity coupling of a measure with itself.
    pub fn identity(m: &SpectralMeasure, seed: u64) -> Self {
        Self::couple(m, m, &CouplingPlan::identity(m), seed)
            .expect("identity plan always satisfies its own marginals")
    }

    pub fn field1(&self) -> &SampledField {
        &self.field1
    }

    pub fn field2(&self) -> &SampledField {
        &self.field2
    }

    pub fn pairing(&self) -> &[AtomPairing] {
        &self.pairing
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Pointwise correlation of the two fields,
    /// `rho(x) = sum_k w_k cos<s_k - t_k, x>`.
    pub fn correlation_at(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for p in &self.pairing {
            let u: f64 = p.s.iter().zip(&p.t).zip(x).map(|((s, t), v)| (s - t) * v).sum();
            acc += p.weight * u.cos();
        }
        acc.clamp(-1.0, 1.0)
    }

    /// Closed-form sigma_D and realization beta over the grid of spacing
    /// `grid_spacing` on `[-R, R]^d`.
    ///
    /// For every grid point and multi-index |alpha| <= 2 (lexicographic,
    /// mixed derivatives included),
    /// `Var d^alpha F(x) = sum_k w_k [(d^alpha cos_s - d^alpha cos_t)^2 +
    /// (sin analog)^2]` in closed form; sigma_D^2 is the maximum.
    pub fn diagnostics(&self, domain: &Domain, grid_spacing: f64) -> Result<CouplingDiagnostics> {
        if !(grid_spacing.is_finite() && grid_spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {grid_spacing}"
            )));
        }
        let d = self.field1.dim();
        if domain.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: domain.dim() });
        }
        let r = domain.r();
        let n_axis = ((2.0 * r / grid_spacing).ceil() as usize + 1).max(2);
        let step = 2.0 * r / (n_axis - 1) as f64;

        let alphas = multi_indices_up_to(d, 2);
        // atom^alpha per pair side, per alpha.
        let pow = |atom: &[f64], alpha: &[usize]| -> f64 {
            atom.iter().zip(alpha).map(|(a, &p)| a.powi(p as i32)).product()
        };
        let pair_pows: Vec<(Vec<f64>, Vec<f64>, usize)> = alphas
            .iter()
            .map(|alpha| {
                let order: usize = alpha.iter().sum();
                (
                    self.pairing.iter().map(|p| pow(&p.s, alpha)).collect(),
                    self.pairing.iter().map(|p| pow(&p.t, alpha)).collect(),
                    order,
                )
            })
            .collect();

        let mut max_var = 0.0f64;
        let mut beta = 0.0f64;
        let mut point = vec![0.0f64; d];
        let mut counter = vec![0usize; d];
        loop {
            for (i, &c) in counter.iter().enumerate() {
                point[i] = -r + c as f64 * step;
            }
            // Phases per pair side.
            for (alpha_idx, (s_pow, t_pow, order)) in pair_pows.iter().enumerate() {
                let _ = alpha_idx;
                let mut var = 0.0;
                let mut deriv = 0.0;
                for (k, p) in self.pairing.iter().enumerate() {
                    let us: f64 = p.s.iter().zip(&point).map(|(a, v)| a * v).sum();
                    let ut: f64 = p.t.iter().zip(&point).map(|(a, v)| a * v).sum();
                    let (dcos_s, dsin_s) = shifted_trig(us, *order);
                    let (dcos_t, dsin_t) = shifted_trig(ut, *order);
                    let dc = s_pow[k] * dcos_s - t_pow[k] * dcos_t;
                    let ds = s_pow[k] * dsin_s - t_pow[k] * dsin_t;
                    var += p.weight * (dc * dc + ds * ds);
                    let term = &self.field1.terms[k];
                    deriv += term.sqrt_weight * (term.a * dc + term.b * ds);
                }
                max_var = max_var.max(var);
                beta = beta.max(deriv.abs());
            }
            // Odometer increment over the d-dimensional grid.
            let mut pos = 0;
            loop {
                if pos == d {
                    return Ok(CouplingDiagnostics {
                        sigma_d: max_var.sqrt(),
                        beta,
                        grid_spacing: step,
                    });
                }
                counter[pos] += 1;
                if counter[pos] < n_axis {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// (d^|order| cos(u), d^|order| sin(u)) phase rotation without the atom
/// factor: differentiating shifts the phase by pi/2 per order.
#[inline]
fn shifted_trig(u: f64, order: usize) -> (f64, f64) {
    let (s, c) = u.sin_cos();
    match order {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => unreachable!("only orders 0..=2 are used"),
    }
}

fn validate_marginal<'a>(
    m: &SpectralMeasure,
    rows: impl Iterator<Item = (&'a Vec<f64>, f64)>,
    side: &str,
) -> Result<()> {
    let mut sums = vec![0.0f64; m.len()];
    for (atom, w) in rows {
        if atom.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: atom.len() });
        }
        let canon = canonical_for_match(atom);
        let hit = m.atoms().iter().position(|a| {
            a.iter().zip(&canon).all(|(x, y)| (x - y).abs() <= ATOM_MATCH_TOL)
        });
        match hit {
            Some(idx) => sums[idx] += w,
            None => {
                return Err(Error::InvalidPlan(format!(
                    "{side} atom {atom:?} does not belong to the {side} measure"
                )))
            }
        }
    }
    for (idx, (sum, want)) in sums.iter().zip(m.weights()).enumerate() {
        if (sum - want).abs() > MARGINAL_TOL {
            return Err(Error::InvalidPlan(format!(
                "{side} marginal mismatch at atom {idx}: plan carries {sum}, measure has {want}"
            )));
        }
    }
    Ok(())
}

/// Same canonical representative rule as the measure constructor.
fn canonical_for_match(atom: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = atom.iter().map(|&x| if x == 0.0 { 0.0 } else { x }).collect();
    let flip = out
        .iter()
        .rev()
        .find(|&&x| x != 0.0)
        .is_some_and(|&x| x < 0.0);
    if flip {
        for y in out.iter_mut() {
            *y = if *y == 0.0 { 0.0 } else { -*y };
        }
    }
    out
}

/// Index-matched dilation coupling: atom k of `m` pairs with the same atom
/// radially scaled by `1 + epsilon`. Returns the plan and the dilated
/// measure.
pub fn radial_dilation_coupling(
    m: &SpectralMeasure,
    epsilon: f64,
) -> Result<(CouplingPlan, SpectralMeasure)> {
    if !(epsilon.is_finite() && epsilon > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation must keep atoms finite and nonzero, got epsilon = {epsilon}"
        )));
    }
    let scale = 1.0 + epsilon;
    let atoms2: Vec<Vec<f64>> = m
        .atoms()
        .iter()
        .map(|a| a.iter().map(|x| x * scale).collect())
        .collect();
    let m2 = SpectralMeasure::new(m.dim(), atoms2.clone(), m.weights().to_vec())?;
    let pairs = m
        .atoms()
        .iter()
        .zip(&atoms2)
        .zip(m.weights())
        .map(|((s, t), &w)| (s.clone(), t.clone(), w))
        .collect();
    Ok((CouplingPlan::from_pairs(pairs), m2))
}

/// Index-matched rotation coupling (d = 2): atom k pairs with itself rotated
/// by `epsilon` radians. Returns the plan and the rotated measure.
pub fn angular_rotation_coupling(
    m: &SpectralMeasure,
    epsilon: f64,
) -> Result<(CouplingPlan, SpectralMeasure)> {
    if m.dim() != 2 {
        return Err(Error::InvalidParameter(
            "angular rotation coupling is defined for d = 2".into(),
        ));
    }
    if !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rotation angle must be finite, got {epsilon}"
        )));
    }
    let (sin_e, cos_e) = epsilon.sin_cos();
    let atoms2: Vec<Vec<f64>> = m
        .atoms()
        .iter()
        .map(|a| vec![a[0] * cos_e - a[1] * sin_e, a[0] * sin_e + a[1] * cos_e])
        .collect();
    let m2 = SpectralMeasure::new(m.dim(), atoms2.clone(), m.weights().to_vec())?;
    let pairs = m
        .atoms()
        .iter()
        .zip(&atoms2)
        .zip(m.weights())
        .map(|((s, t), &w)| (s.clone(), t.clone(), w))
        .collect();
    Ok((CouplingPlan::from_pairs(pairs), m2))
}
