//! Marching-squares level-set extraction and length measurement.
//!
//! Corners are classified by strict sign of `f - a`; edge crossings are
//! linearly interpolated. The two ambiguous saddle configurations are
//! disambiguated by evaluating the field at the cell center, which is exact
//! for the analytic fields used here, so no heuristic is involved.

use crate::field::C2Field;
use crate::grid::Domain;
use crate::stats::pairwise_sum;

/// Level-set length measurement on a grid.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetMeasure {
    pub level: f64,
    pub length: f64,
    pub segment_count: usize,
    pub grid_n: usize,
}

/// Length of `f^{-1}(a)` inside the domain square (d = 2 Hausdorff measure).
pub fn level_length<F: C2Field>(field: &F, dom: &Domain, level: f64) -> LevelSetMeasure {
    let values = field.values_on_grid(&dom.vertex_grid());
    level_length_from_values(field, dom, &values, level)
}

/// Same, reusing a precomputed vertex-grid value array (one array serves any
/// number of levels).
pub(crate) fn level_length_from_values<F: C2Field>(
    field: &F,
    dom: &Domain,
    values: &[f64],
    level: f64,
) -> LevelSetMeasure {
    let mut lengths = Vec::new();
    march_from_values(field, dom, values, level, |p, q| {
        lengths.push((p[0] - q[0]).hypot(p[1] - q[1]));
    });
    LevelSetMeasure {
        level,
        length: pairwise_sum(&lengths),
        segment_count: lengths.len(),
        grid_n: dom.grid_n(),
    }
}

/// Extract the level-set polyline segments (endpoint pairs) for export.
pub fn extract_level_segments<F: C2Field>(
    field: &F,
    dom: &Domain,
    level: f64,
) -> Vec<[f64; 4]> {
    let values = field.values_on_grid(&dom.vertex_grid());
    let mut out = Vec::new();
    march_from_values(field, dom, values.as_slice(), level, |p, q| {
        out.push([p[0], p[1], q[0], q[1]]);
    });
    out
}

fn march_from_values<F: C2Field>(
    field: &F,
    dom: &Domain,
    values: &[f64],
    level: f64,
    mut emit: impl FnMut([f64; 2], [f64; 2]),
) {
    let g = dom.vertex_grid();
    debug_assert_eq!(values.len(), g.len());
    for j in 0..g.ny - 1 {
        let y0 = g.y(j);
        let y1 = g.y(j + 1);
        for i in 0..g.nx - 1 {
            let v00 = values[g.index(i, j)] - level;
            let v10 = values[g.index(i + 1, j)] - level;
            let v11 = values[g.index(i + 1, j + 1)] - level;
            let v01 = values[g.index(i, j + 1)] - level;
            let code = u8::from(v00 > 0.0)
                | u8::from(v10 > 0.0) << 1
                | u8::from(v11 > 0.0) << 2
                | u8::from(v01 > 0.0) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let x0 = g.x(i);
            let x1 = g.x(i + 1);
            // Interpolated crossing points on each cut edge.
            let bottom = || -> [f64; 2] { [x0 + v00 / (v00 - v10) * (x1 - x0), y0] };
            let right = || -> [f64; 2] { [x1, y0 + v10 / (v10 - v11) * (y1 - y0)] };
            let top = || -> [f64; 2] { [x0 + v01 / (v01 - v11) * (x1 - x0), y1] };
            let left = || -> [f64; 2] { [x0, y0 + v00 / (v00 - v01) * (y1 - y0)] };
            match code {
                1 | 14 => emit(left(), bottom()),
                2 | 13 => emit(bottom(), right()),
                4 | 11 => emit(right(), top()),
                8 | 7 => emit(top(), left()),
                3 | 12 => emit(left(), right()),
                6 | 9 => emit(bottom(), top()),
                5 | 10 => {
                    let center =
                        field.value(0.5 * (x0 + x1), 0.5 * (y0 + y1)) - level;
                    // `center > 0` joins the two above-level corners through
                    // the cell interior; the segments then hug the opposite
                    // pair of corners.
                    let diag_above = code == 5;
                    if (center > 0.0) == diag_above {
                        emit(bottom(), right());
                        emit(top(), left());
                    } else {
                        emit(left(), bottom());
                        emit(right(), top());
                    }
                }
                _ => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{LinearField, RadialParaboloid, SampledField};
    use crate::grid::Domain;
    use crate::spectral::SpectralMeasure;
    use std::f64::consts::PI;

    #[test]
    fn axis_line_has_exact_length() {
        let f = LinearField { ux: 1.0, uy: 0.0 };
        let dom = Domain::square(1.0, 64).unwrap();
        let m = level_length(&f, &dom, 0.0);
        assert!((m.length - 2.0).abs() < 1e-12, "length {}", m.length);
        // Same with the zero line exactly on a grid column.
        let dom_odd = Domain::square(1.0, 65).unwrap();
        let m = level_length(&f, &dom_odd, 0.0);
        assert!((m.length - 2.0).abs() < 1e-12, "length {}", m.length);
    }

    #[test]
    fn circle_length_converges() {
        // f = (x^2 + y^2)/2 = 0.5 is the unit circle.
        let dom = Domain::square(2.0, 512).unwrap();
        let m = level_length(&RadialParaboloid, &dom, 0.5);
        let err = (m.length - 2.0 * PI).abs() / (2.0 * PI);
        assert!(err < 5e-3, "relative error {err}");
    }

    #[test]
    fn level_above_supremum_is_empty() {
        let dom = Domain::square(2.0, 128).unwrap();
        // sup f = 4 on [-2,2]^2.
        let m = level_length(&RadialParaboloid, &dom, 5.0);
        assert_eq!(m.length, 0.0);
        assert_eq!(m.segment_count, 0);
    }

    /// f = xy: its small levels are hyperbolas and cells near the origin hit
    /// the ambiguous marching-squares configurations.
    struct SaddleField;

    impl C2Field for SaddleField {
        fn jet(&self, x: f64, y: f64) -> crate::field::Jet2 {
            crate::field::Jet2 { f: x * y, fx: y, fy: x, fxx: 0.0, fxy: 1.0, fyy: 0.0 }
        }
    }

    #[test]
    fn saddle_cells_are_resolved_consistently() {
        let level = 0.02;
        let dom_a = Domain::square(1.0, 129).unwrap();
        let dom_b = Domain::square(1.0, 257).unwrap();
        let la = level_length(&SaddleField, &dom_a, level).length;
        let lb = level_length(&SaddleField, &dom_b, level).length;
        assert!((la - lb).abs() / lb < 0.01, "{la} vs {lb}");
        // Mirror symmetry swaps the two ambiguous cases.
        let lneg = level_length(&SaddleField, &dom_a, -level).length;
        assert!((la - lneg).abs() < 1e-10, "{la} vs {lneg}");
    }

    #[test]
    fn refinement_consistency_on_sampled_fields() {
        let m = SpectralMeasure::rpw_circle(64).unwrap();
        for seed in [0u64, 1, 2] {
            let f = SampledField::draw(&m, seed);
            let coarse = level_length(&f, &Domain::square(4.0, 256).unwrap(), 0.0).length;
            let fine = level_length(&f, &Domain::square(4.0, 512).unwrap(), 0.0).length;
            assert!(
                (coarse - fine).abs() / fine <= 0.01,
                "seed {seed}: {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn segments_lie_inside_domain_and_on_level() {
        let m = SpectralMeasure::rpw_circle(16).unwrap();
        let f = SampledField::draw(&m, 4);
        let dom = Domain::square(2.0, 128).unwrap();
        let segs = extract_level_segments(&f, &dom, 0.3);
        assert!(!segs.is_empty());
        for s in &segs {
            for &c in s {
                assert!(c.abs() <= 2.0 + 1e-12);
            }
            // Linear interpolation puts endpoints near the true level.
            let v = f.value(s[0], s[1]);
            assert!((v - 0.3).abs() < 0.05, "endpoint off level: {v}");
        }
    }
}
