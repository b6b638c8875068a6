//! Symmetric atomic spectral measures and the covariance kernels they induce.
//!
//! A measure is stored through one representative per `±` atom pair, chosen in
//! the upper half-space (highest-index nonzero coordinate positive), so the
//! symmetry required of a real stationary covariance holds by construction.
//! With weights normalized to total mass one, the kernel is the plain cosine
//! sum `K(t) = sum_k w_k cos<atom_k, t>` and `K(0) = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const PD_PIVOT_TOL: f64 = 1e-12;

/// Finite symmetric atomic spectral measure, probability-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    dim: usize,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SpectralMeasure {
    /// Build a measure from `(atom, weight)` pairs.
    ///
    /// Atoms are canonicalized into the upper half-space; weights must be
    /// strictly positive and sum to 1 within 1e-12; duplicate atoms (directly
    /// or through negation) are rejected, as is an all-zero atom set.
    pub fn new(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidMeasure(format!(
                "spatial dimension must be >= 2, got {dim}"
            )));
        }
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "need matching nonempty atoms/weights, got {}/{}",
                atoms.len(),
                weights.len()
            )));
        }
        let mut canon = Vec::with_capacity(atoms.len());
        for atom in &atoms {
            if atom.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: atom.len() });
            }
            if atom.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure("non-finite atom coordinate".into()));
            }
            canon.push(canonicalize(atom));
        }
        for w in &weights {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "weights must be strictly positive, got {w}"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights must sum to 1 within {WEIGHT_SUM_TOL:e}, got {total}"
            )));
        }
        for i in 0..canon.len() {
            for j in (i + 1)..canon.len() {
                if canon[i] == canon[j] {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {i} and {j} coincide (directly or as a +/- pair)"
                    )));
                }
            }
        }
        if canon.iter().all(|a| a.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidMeasure(
                "at least one atom must have nonzero norm".into(),
            ));
        }
        Ok(Self { dim, atoms: canon, weights })
    }

    /// `m` atoms equally spaced on the upper half unit circle, equal weights.
    /// Discretizes the measure whose kernel is the radial Bessel J0.
    pub fn rpw_circle(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "rpw_circle needs at least 2 atoms, got {m}"
            )));
        }
        let atoms = (0..m)
            .map(|j| {
                let theta = j as f64 * PI / m as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        Self::new(2, atoms, vec![1.0 / m as f64; m])
    }

    /// Deterministic polar quadrature discretization of the planar Gaussian
    /// spectral density exp(-|lambda|^2 / 2), truncated at radius `r_max`.
    ///
    /// `m` Gauss-Legendre radial nodes against the Rayleigh radial density
    /// r exp(-r^2/2), each carrying `m` angles on the upper half circle.
    pub fn bargmann_fock(m: usize, r_max: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "bargmann_fock needs at least 2 nodes per dimension, got {m}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bargmann_fock truncation radius must be positive, got {r_max}"
            )));
        }
        let radial: Vec<(f64, f64)> = crate::quad::gauss_legendre(m)
            .into_iter()
            .map(|(x, w)| {
                let r = 0.5 * r_max * (x + 1.0);
                (r, w * r * (-0.5 * r * r).exp())
            })
            .collect();
        let mut atoms = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for &(r, wr) in &radial {
            for j in 0..m {
                let theta = j as f64 * PI / m as f64;
                atoms.push(vec![r * theta.cos(), r * theta.sin()]);
                weights.push(wr);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Self::new(2, atoms, weights)
    }

    /// Builtin dispatch by name, mirroring the measure-file format.
    pub fn builtin(name: &str, params: &serde_json::Value) -> Result<Self> {
        match name {
            "rpw_circle" => {
                let p: RpwParams = parse_params(params)?;
                Self::rpw_circle(p.m)
            }
            "bargmann_fock" => {
                let p: BargmannFockParams = parse_params(params)?;
                Self::bargmann_fock(p.m, p.r_max)
            }
            "atoms" => {
                let p: AtomsParams = parse_params(params)?;
                let dim = p.dim.unwrap_or(2);
                Self::new(dim, p.atoms, p.weights)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown builtin measure `{other}`"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored representatives (each stands for a `±` pair).
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Covariance kernel `K(t) = sum_k w_k cos<atom_k, t>`.
    pub fn kernel(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.len() });
        }
        let mut acc = 0.0;
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            let u: f64 = atom.iter().zip(t).map(|(a, x)| a * x).sum();
            acc += w * u.cos();
        }
        Ok(acc)
    }

    /// Exact spectral moments up to order 4 of the full symmetric measure.
    pub fn second_moments(&self) -> SpectralMoments {
        let d = self.dim;
        let mut second = vec![0.0; d * d];
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            for i in 0..d {
                for j in 0..d {
                    second[i * d + j] += w * atom[i] * atom[j];
                }
            }
        }
        let mut fourth = Vec::new();
        for alpha in multi_indices_up_to(d, 4) {
            let order: usize = alpha.iter().sum();
            let value = if order % 2 == 1 {
                // Odd moments of a symmetric measure vanish identically.
                0.0
            } else {
                self.atoms
                    .iter()
                    .zip(&self.weights)
                    .map(|(atom, w)| {
                        w * atom
                            .iter()
                            .zip(&alpha)
                            .map(|(a, &p)| a.powi(p as i32))
                            .product::<f64>()
                    })
                    .sum()
            };
            fourth.push(MomentEntry { alpha, value });
        }
        SpectralMoments { dim: d, second, fourth }
    }

    /// Non-degeneracy report: the gradient second-moment matrix must be
    /// positive definite and the symmetrized atom count at least d + 1.
    pub fn validate_nondegenerate(&self) -> ValidityReport {
        let mut failures = Vec::new();
        let moments = self.second_moments();
        let pd = linalg::cholesky(self.dim, &moments.second, PD_PIVOT_TOL).is_some();
        if !pd {
            failures.push(
                "gradient second-moment matrix is not positive definite".to_string(),
            );
            failures.push(
                "atoms are contained in a proper linear subspace".to_string(),
            );
        }
        let symmetrized_count: usize = self
            .atoms
            .iter()
            .map(|a| if a.iter().all(|&x| x == 0.0) { 1 } else { 2 })
            .sum();
        if symmetrized_count < self.dim + 1 {
            failures.push(format!(
                "need at least dim + 1 = {} atoms counting +/- pairs, have {}",
                self.dim + 1,
                symmetrized_count
            ));
        }
        ValidityReport { pass: failures.is_empty(), failures }
    }

    /// Whether two measures coincide as symmetric atom/weight sets, within
    /// `tol` on both coordinates and weights.
    pub fn same_atoms(&self, other: &SpectralMeasure, tol: f64) -> bool {
        if self.dim != other.dim || self.atoms.len() != other.atoms.len() {
            return false;
        }
        let mut used = vec![false; other.atoms.len()];
        'outer: for (a, &wa) in self.atoms.iter().zip(&self.weights) {
            for (j, (b, &wb)) in other.atoms.iter().zip(&other.weights).enumerate() {
                if used[j] || (wa - wb).abs() > tol {
                    continue;
                }
                if a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

/// Flip an atom into the upper half-space: the highest-index nonzero
/// coordinate is made positive. The zero atom is its own representative.
fn canonicalize(atom: &[f64]) -> Vec<f64> {
    // Map -0.0 to +0.0 so representatives compare bitwise.
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

/// All multi-indices with |alpha| <= max_order, lexicographic order.
pub fn multi_indices_up_to(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    fn rec(
        dim: usize,
        pos: usize,
        remaining: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pos == dim {
            out.push(current.clone());
            return;
        }
        for v in 0..=remaining {
            current[pos] = v;
            rec(dim, pos + 1, remaining - v, current, out);
        }
        current[pos] = 0;
    }
    rec(dim, 0, max_order, &mut current, &mut out);
    out.sort();
    out
}

/// Entry of the flattened moment table.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEntry {
    pub alpha: Vec<usize>,
    pub value: f64,
}

/// Second- and fourth-order spectral moments of the symmetric measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMoments {
    dim: usize,
    /// Row-major d x d matrix `sum_k w_k atom_k atom_k^T`.
    second: Vec<f64>,
    /// `sum_k w_k atom_k^alpha` for all |alpha| <= 4 (zero for odd |alpha|).
    fourth: Vec<MomentEntry>,
}

impl SpectralMoments {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub fn second_at(&self, i: usize, j: usize) -> f64 {
        self.second[i * self.dim + j]
    }

    pub fn entries(&self) -> &[MomentEntry] {
        &self.fourth
    }

    pub fn moment(&self, alpha: &[usize]) -> Option<f64> {
        self.fourth.iter().find(|e| e.alpha == alpha).map(|e| e.value)
    }

    /// True when the second-moment matrix is a positive multiple of the
    /// identity, within `tol` entrywise.
    pub fn isotropic_scale(&self, tol: f64) -> Option<f64> {
        let d = self.dim;
        let c = self.second_at(0, 0);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { c } else { 0.0 };
                if (self.second_at(i, j) - want).abs() > tol {
                    return None;
                }
            }
        }
        (c > 0.0).then_some(c)
    }
}

/// Result of the non-degeneracy validation. Report-style: never an `Err`.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub pass: bool,
    pub failures: Vec<String>,
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pass {
            write!(f, "non-degenerate")
        } else {
            write!(f, "degenerate: {}", self.failures.join("; "))
        }
    }
}

/// Measure definition file: either explicit atoms or a named builtin.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MeasureSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: serde_json::Value,
    },
    Explicit {
        dim: usize,
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<SpectralMeasure> {
        match self {
            MeasureSpec::Builtin { builtin, params } => SpectralMeasure::builtin(builtin, params),
            MeasureSpec::Explicit { dim, atoms, weights } => {
                SpectralMeasure::new(*dim, atoms.clone(), weights.clone())
            }
        }
    }

    pub fn rpw_circle(m: usize) -> Self {
        MeasureSpec::Builtin {
            builtin: "rpw_circle".into(),
            params: serde_json::json!({ "m": m }),
        }
    }

    /// Snapshot of a built measure, for sidecar headers.
    pub fn from_measure(m: &SpectralMeasure) -> Self {
        MeasureSpec::Explicit {
            dim: m.dim(),
            atoms: m.atoms().to_vec(),
            weights: m.weights().to_vec(),
        }
    }
}

#[derive(Deserialize)]
struct RpwParams {
    m: usize,
}

#[derive(Deserialize)]
struct BargmannFockParams {
    m: usize,
    #[serde(default = "default_bf_rmax")]
    r_max: f64,
}

fn default_bf_rmax() -> f64 {
    6.0
}

#[derive(Deserialize)]
struct AtomsParams {
    #[serde(default)]
    dim: Option<usize>,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn parse_params<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| Error::InvalidParameter(format!("bad builtin params: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::assert_relative_eq;

    fn single_atom() -> SpectralMeasure {
        SpectralMeasure::new(2, vec![vec![1.0, 0.0]], vec![1.0]).unwrap()
    }

    /// J0 by trapezoid of (1/2pi) int cos(r cos t) dt over a full period:
    /// spectrally accurate for smooth periodic integrands, independent of the
    /// kernel implementation under test.
    fn j0_oracle(r: f64) -> f64 {
        let n = 4096;
        let mut acc = 0.0;
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            acc += (r * theta.cos()).cos();
        }
        acc / n as f64
    }

    #[test]
    fn kernel_at_origin_is_total_mass() {
        assert_eq!(single_atom().kernel(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn kernel_single_atom_at_pi() {
        let k = single_atom().kernel(&[PI, 0.0]).unwrap();
        assert_relative_eq!(k, -1.0, max_relative = 1e-15);
    }

    #[test]
    fn kernel_dimension_mismatch_rejected() {
        assert!(single_atom().kernel(&[0.0]).is_err());
        assert!(single_atom().kernel(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn circle_discretization_kernel_matches_j0() {
        let m = SpectralMeasure::rpw_circle(256).unwrap();
        let mut r = 0.25;
        while r <= 10.0 {
            let k = m.kernel(&[r, 0.0]).unwrap();
            let j0 = j0_oracle(r);
            assert!((k - j0).abs() < 1e-6, "r={r}: kernel {k} vs J0 {j0}");
            r += 0.25;
        }
    }

    #[test]
    fn kernel_is_even_and_bounded() {
        let m = SpectralMeasure::rpw_circle(17).unwrap();
        for i in 0..50 {
            let t = [0.37 * i as f64 - 9.0, 0.11 * i as f64 - 2.0];
            let a = m.kernel(&t).unwrap();
            let b = m.kernel(&[-t[0], -t[1]]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a.abs() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn second_moments_single_atom() {
        let mo = single_atom().second_moments();
        assert_eq!(mo.second(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn second_moments_two_axis_atoms() {
        let m = SpectralMeasure::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let mo = m.second_moments();
        assert_eq!(mo.second(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn circle_second_moments_are_half_identity() {
        for m in [4usize, 5, 64] {
            let mo = SpectralMeasure::rpw_circle(m).unwrap().second_moments();
            assert!((mo.second_at(0, 0) - 0.5).abs() < 1e-12, "m={m}");
            assert!((mo.second_at(1, 1) - 0.5).abs() < 1e-12, "m={m}");
            assert!(mo.second_at(0, 1).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn second_moments_match_negative_kernel_hessian() {
        let m = SpectralMeasure::bargmann_fock(6, 5.0).unwrap();
        let mo = m.second_moments();
        let h = 1e-4;
        let k = |t: &[f64]| m.kernel(t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut tpp = [0.0, 0.0];
                let mut tpm = [0.0, 0.0];
                let mut tmp = [0.0, 0.0];
                let mut tmm = [0.0, 0.0];
                tpp[i] += h;
                tpp[j] += h;
                tpm[i] += h;
                tpm[j] -= h;
                tmp[i] -= h;
                tmp[j] += h;
                tmm[i] -= h;
                tmm[j] -= h;
                let hess = (k(&tpp) - k(&tpm) - k(&tmp) + k(&tmm)) / (4.0 * h * h);
                assert!(
                    (mo.second_at(i, j) + hess).abs() < 1e-6,
                    "entry ({i},{j}): {} vs {}",
                    mo.second_at(i, j),
                    -hess
                );
            }
        }
    }

    #[test]
    fn odd_moments_vanish() {
        let m = SpectralMeasure::rpw_circle(7).unwrap();
        let mo = m.second_moments();
        for entry in mo.entries() {
            let order: usize = entry.alpha.iter().sum();
            if order % 2 == 1 {
                assert_eq!(entry.value, 0.0, "alpha {:?}", entry.alpha);
            }
        }
        assert_eq!(mo.entries().len(), 15); // multi-indices |alpha| <= 4 in d = 2
    }

    #[test]
    fn validity_single_atom_fails() {
        let rep = single_atom().validate_nondegenerate();
        assert!(!rep.pass);
        assert!(rep.failures.iter().any(|f| f.contains("positive definite")));
    }

    #[test]
    fn validity_axis_pair_and_circle_pass() {
        let axes = SpectralMeasure::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(axes.validate_nondegenerate().pass);
        assert!(SpectralMeasure::rpw_circle(64).unwrap().validate_nondegenerate().pass);
    }

    #[test]
    fn rpw_circle_atom_angles() {
        let m = SpectralMeasure::rpw_circle(4).unwrap();
        let expected = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (atom, theta) in m.atoms().iter().zip(expected) {
            assert_relative_eq!(atom[0], theta.cos(), epsilon = 1e-15);
            assert_relative_eq!(atom[1], theta.sin(), epsilon = 1e-15);
        }
        assert!(m.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn atoms_builtin_round_trips() {
        let spec = MeasureSpec::Builtin {
            builtin: "atoms".into(),
            params: serde_json::json!({ "atoms": [[1.0, 0.0]], "weights": [1.0] }),
        };
        let m = spec.build().unwrap();
        assert_eq!(m.atoms(), &[vec![1.0, 0.0]]);
    }

    #[test]
    fn builtin_rejects_small_m() {
        assert!(SpectralMeasure::rpw_circle(1).is_err());
        assert!(SpectralMeasure::bargmann_fock(1, 4.0).is_err());
    }

    #[test]
    fn bargmann_fock_isotropic_second_moment_matches_continuum() {
        let r_max = 6.0;
        let m = SpectralMeasure::bargmann_fock(24, r_max).unwrap();
        let mo = m.second_moments();
        let c = mo.isotropic_scale(1e-10).expect("discretization is isotropic");

        // Continuum: Lambda = (E r^2 / 2) I for the truncated Rayleigh radial
        // law, by quadrature of r^2 dF(r) / mass.
        let mass = 1.0 - (-0.5 * r_max * r_max).exp();
        let num = adaptive_simpson(
            &|r: f64| r * r * r * (-0.5 * r * r).exp(),
            0.0,
            r_max,
            1e-12,
        );
        let c_cont = num.value / mass / 2.0;
        assert!(
            (c - c_cont).abs() < 1e-9,
            "discrete {c} vs continuum {c_cont}"
        );
    }

    #[test]
    fn canonicalization_flips_into_upper_half_space() {
        let m = SpectralMeasure::new(
            2,
            vec![vec![0.3, -1.0], vec![-2.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(m.atoms()[0], vec![-0.3, 1.0]);
        assert_eq!(m.atoms()[1], vec![2.0, 0.0]);
    }

    #[test]
    fn negated_duplicate_rejected() {
        let err = SpectralMeasure::new(
            2,
            vec![vec![1.0, 0.5], vec![-1.0, -0.5]],
            vec![0.5, 0.5],
        );
        assert!(err.is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(SpectralMeasure::new(2, vec![vec![1.0, 0.0]], vec![0.999]).is_err());
        assert!(
            SpectralMeasure::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.5, -0.5])
                .is_err()
        );
    }

    #[test]
    fn measure_spec_json_round_trip_is_bit_exact() {
        let m = SpectralMeasure::bargmann_fock(5, 4.0).unwrap();
        let spec = MeasureSpec::from_measure(&m);
        let text = serde_json::to_string(&spec).unwrap();
        let back: MeasureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let text2 = serde_json::to_string(&back).unwrap();
        assert_eq!(text, text2);
        let rebuilt = back.build().unwrap();
        assert!(rebuilt.same_atoms(&m, 0.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_measure() -> impl Strategy<Value = SpectralMeasure> {
            proptest::collection::vec(((-3.0..3.0f64, -3.0..3.0f64), 0.05..1.0f64), 1..6)
                .prop_filter_map("distinct atoms after canonicalization", |entries| {
                    let total: f64 = entries.iter().map(|e| e.1).sum();
                    let atoms: Vec<Vec<f64>> =
                        entries.iter().map(|((x, y), _)| vec![*x, *y]).collect();
                    let weights: Vec<f64> = entries.iter().map(|e| e.1 / total).collect();
                    SpectralMeasure::new(2, atoms, weights).ok()
                })
        }

        proptest! {
            #[test]
            fn kernel_even_bounded_and_unit_at_origin(
                m in arbitrary_measure(),
                tx in -20.0..20.0f64,
                ty in -20.0..20.0f64,
            ) {
                let k = m.kernel(&[tx, ty]).unwrap();
                let k_neg = m.kernel(&[-tx, -ty]).unwrap();
                prop_assert_eq!(k.to_bits(), k_neg.to_bits());
                prop_assert!(k.abs() <= 1.0 + 1e-12);
                prop_assert!((m.kernel(&[0.0, 0.0]).unwrap() - 1.0).abs() <= 1e-12);
            }

            #[test]
            fn atoms_live_in_the_upper_half_space(m in arbitrary_measure()) {
                for atom in m.atoms() {
                    let lead = atom.iter().rev().find(|&&x| x != 0.0);
                    if let Some(&lead) = lead {
                        prop_assert!(lead > 0.0, "atom {:?}", atom);
                    }
                }
            }

            #[test]
            fn second_moment_diagonal_matches_weighted_squares(m in arbitrary_measure()) {
                let mo = m.second_moments();
                for i in 0..2 {
                    let want: f64 = m
                        .atoms()
                        .iter()
                        .zip(m.weights())
                        .map(|(a, w)| w * a[i] * a[i])
                        .sum();
                    prop_assert!((mo.second_at(i, i) - want).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn same_atoms_ignores_ordering() {
        let a = SpectralMeasure::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.25, 0.75],
        )
        .unwrap();
        let b = SpectralMeasure::new(
            2,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.75, 0.25],
        )
        .unwrap();
        assert!(a.same_atoms(&b, 1e-12));
        assert!(!a.same_atoms(&SpectralMeasure::rpw_circle(2).unwrap(), 1e-12));
    }
}
