//! Seeded, reproducible experiment runners with CSV/JSON output.
//!
//! Every runner takes one [`ExperimentConfig`], writes its tables into an
//! output directory and returns a summary struct. Seeds are distributed over
//! a worker pool; results are collected in seed order before writing, so
//! identical configs produce byte-identical files regardless of thread
//! scheduling. Each CSV row starts with `config_hash, seed, grid_n`
//! provenance columns.

mod config;
mod io;

pub use config::{
    DomainConfig, DumpFormat, ExperimentConfig, McConfig, Perturbation, ScalingConfig, SeedRange,
};
pub use io::{csv_document, field_dump_csv, field_dump_raw, segments_csv, FieldDumpHeader};

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{
    angular_rotation_coupling, radial_dilation_coupling, CoupledPair, SampledField,
};
use crate::gaussian;
use crate::geometry::{self, Domain};
use crate::rng::CounterRng;
use crate::spectral::{MeasureSpec, SpectralMeasure};
use crate::stats;
use crate::transport;

fn built_nondegenerate(spec: &MeasureSpec) -> Result<SpectralMeasure> {
    let m = spec.build()?;
    let report = m.validate_nondegenerate();
    if !report.pass {
        return Err(Error::DegenerateMeasure(report.to_string()));
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Kac-Rice

#[derive(Debug, Clone, Serialize)]
pub struct KacRiceSummary {
    pub config_hash: String,
    pub level: f64,
    pub n_seeds: u64,
    pub mean_length: f64,
    pub standard_error: f64,
    pub oracle: f64,
    pub z_score: f64,
}

/// Monte Carlo mean of the level-set length against the closed-form
/// Kac-Rice expectation.
pub fn run_kac_rice(cfg: &ExperimentConfig, out_dir: &Path) -> Result<KacRiceSummary> {
    cfg.validate_common("kacrice")?;
    if cfg.seed_range.count() < 2 {
        return Err(Error::Config("kacrice needs at least 2 seeds".into()));
    }
    let m = built_nondegenerate(&cfg.measure)?;
    let dom = cfg.domain.build()?;
    let level = cfg.levels.first().copied().unwrap_or(0.0);
    let hash = cfg.hash();

    let seeds: Vec<u64> = cfg.seed_range.iter().collect();
    let lengths: Vec<(u64, f64, usize)> = seeds
        .par_iter()
        .map(|&seed| {
            let f = SampledField::draw(&m, seed);
            let l = geometry::level_length(&f, &dom, level);
            (seed, l.length, l.segment_count)
        })
        .collect();

    let rows: Vec<String> = lengths
        .iter()
        .map(|(seed, len, segs)| {
            format!("{hash},{seed},{},{level},{len},{segs}", dom.grid_n())
        })
        .collect();
    io::write_text(
        &out_dir.join("kacrice_seeds.csv"),
        &csv_document("config_hash,seed,grid_n,level,length,segment_count", &rows),
    )?;

    let values: Vec<f64> = lengths.iter().map(|r| r.1).collect();
    let mean = stats::mean(&values);
    let se = stats::standard_error(&values);
    let oracle = gaussian::KacRiceOracle::new(&m, cfg.mc.grad_norm_draws as usize)?
        .expected_measure(&dom, level)?;
    let summary = KacRiceSummary {
        config_hash: hash,
        level,
        n_seeds: cfg.seed_range.count(),
        mean_length: mean,
        standard_error: se,
        oracle,
        z_score: (mean - oracle) / se,
    };
    io::write_json(&out_dir.join("kacrice_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Divergence-identity suite

#[derive(Debug, Clone, Serialize)]
pub struct ResidualQuantiles {
    pub grid_n: usize,
    pub n_rows: usize,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySummary {
    pub config_hash: String,
    pub fine: ResidualQuantiles,
    pub coarse: ResidualQuantiles,
    pub flagged_seeds: Vec<u64>,
}

/// Per-seed divergence-identity reports at two grid resolutions.
///
/// Boundary flags do not abort the suite: the affected row is emitted with
/// NaNs and a `flagged` marker, the seed is listed in the summary, and the
/// CLI maps a nonempty flag list to exit code 3.
pub fn run_identity_suite(cfg: &ExperimentConfig, out_dir: &Path) -> Result<IdentitySummary> {
    cfg.validate_common("identity")?;
    if cfg.bands.is_empty() {
        return Err(Error::Config("identity suite needs at least one band".into()));
    }
    let m = built_nondegenerate(&cfg.measure)?;
    let fine = cfg.domain.build()?;
    let coarse = Domain::square(cfg.domain.r, cfg.coarse_grid_n.unwrap_or(128))
        .map_err(|e| Error::Config(e.to_string()))?;
    let hash = cfg.hash();

    struct Row {
        seed: u64,
        grid_n: usize,
        band: [f64; 2],
        report: Option<geometry::IdentityReport>,
    }

    let seeds: Vec<u64> = cfg.seed_range.iter().collect();
    let rows: Vec<Row> = seeds
        .par_iter()
        .flat_map_iter(|&seed| {
            let field = SampledField::draw(&m, seed);
            let mut out = Vec::new();
            for dom in [&fine, &coarse] {
                for band in &cfg.bands {
                    let report = geometry::identity_report(&field, dom, band[0], band[1]).ok();
                    out.push(Row { seed, grid_n: dom.grid_n(), band: *band, report });
                }
            }
            out
        })
        .collect();

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| match &r.report {
            Some(rep) => format!(
                "{hash},{},{},{},{},{},{},{},{},{},{},{},0",
                r.seed,
                r.grid_n,
                rep.level_a,
                rep.level_b,
                rep.measure_a,
                rep.measure_b,
                rep.bulk_integral,
                rep.boundary_flux,
                rep.residual,
                rep.normalized_residual(),
                rep.near_critical_volume,
            ),
            None => format!(
                "{hash},{},{},{},{},NaN,NaN,NaN,NaN,NaN,NaN,NaN,1",
                r.seed, r.grid_n, r.band[0], r.band[1],
            ),
        })
        .collect();
    io::write_text(
        &out_dir.join("identity_rows.csv"),
        &csv_document(
            "config_hash,seed,grid_n,level_a,level_b,measure_a,measure_b,bulk_integral,\
             boundary_flux,residual,normalized_residual,near_critical_volume,flagged",
            &csv_rows,
        ),
    )?;

    let quantiles = |grid_n: usize| -> Result<ResidualQuantiles> {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.grid_n == grid_n)
            .filter_map(|r| r.report.as_ref().map(|rep| rep.normalized_residual()))
            .collect();
        if vals.is_empty() {
            return Err(Error::Config(format!(
                "no unflagged rows at grid_n = {grid_n}"
            )));
        }
        Ok(ResidualQuantiles {
            grid_n,
            n_rows: vals.len(),
            q25: stats::quantile(&vals, 0.25),
            q50: stats::quantile(&vals, 0.50),
            q75: stats::quantile(&vals, 0.75),
            q90: stats::quantile(&vals, 0.90),
        })
    };
    let mut flagged: Vec<u64> = rows
        .iter()
        .filter(|r| r.report.is_none())
        .map(|r| r.seed)
        .collect();
    flagged.dedup();
    let summary = IdentitySummary {
        config_hash: hash,
        fine: quantiles(fine.grid_n())?,
        coarse: quantiles(coarse.grid_n())?,
        flagged_seeds: flagged,
    };
    io::write_json(&out_dir.join("identity_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Conditional curvature

#[derive(Debug, Clone, Serialize)]
pub struct CondCurvRow {
    pub level: f64,
    pub bandwidth: f64,
    pub estimate: f64,
    pub standard_error: f64,
    pub oracle: f64,
    pub z_score: Option<f64>,
    pub accepted_points: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CondCurvSummary {
    pub config_hash: String,
    pub exp_grad_norm: f64,
    pub rows: Vec<CondCurvRow>,
}

/// Band-kernel conditional curvature estimates per level, against the
/// analytic -a E|grad f|, with a half-bandwidth sensitivity repeat.
pub fn run_conditional_curvature(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CondCurvSummary> {
    cfg.validate_common("condcurv")?;
    if cfg.levels.is_empty() {
        return Err(Error::Config("condcurv needs at least one level".into()));
    }
    let m = built_nondegenerate(&cfg.measure)?;
    let dom = cfg.domain.build()?;
    let hash = cfg.hash();
    let egn = gaussian::expected_gradient_norm(&m, cfg.mc.grad_norm_draws as usize)?;

    let mut rows = Vec::new();
    for bandwidth in [cfg.mc.bandwidth, 0.5 * cfg.mc.bandwidth] {
        let table = gaussian::conditional_curvature_table(
            &m,
            &dom,
            &cfg.levels,
            bandwidth,
            cfg.seed_range.count(),
            cfg.mc.points_per_seed,
            cfg.seed_range.start,
        )?;
        for est in table {
            let oracle = -est.level * egn.value;
            let z = (est.estimate - oracle) / est.standard_error;
            rows.push(CondCurvRow {
                level: est.level,
                bandwidth,
                estimate: est.estimate,
                standard_error: est.standard_error,
                oracle,
                z_score: z.is_finite().then_some(z),
                accepted_points: est.accepted_points,
            });
        }
    }

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{hash},{},{},{},{},{},{},{},{}",
                cfg.seed_range.start,
                dom.grid_n(),
                r.level,
                r.bandwidth,
                r.estimate,
                r.standard_error,
                r.oracle,
                r.accepted_points,
            )
        })
        .collect();
    io::write_text(
        &out_dir.join("condcurv_table.csv"),
        &csv_document(
            "config_hash,seed,grid_n,level,bandwidth,estimate,standard_error,oracle,accepted_points",
            &csv_rows,
        ),
    )?;
    let summary = CondCurvSummary { config_hash: hash, exp_grad_norm: egn.value, rows };
    io::write_json(&out_dir.join("condcurv_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Coupled-field scaling study

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRung {
    pub epsilon: f64,
    pub sigma_d: f64,
    pub transport_proxy: f64,
    pub mean_abs_dh: f64,
    pub standard_error: f64,
    pub n_seeds: u64,
    /// Rungs with mean below 3 SE (or zero sigma) are reported but excluded
    /// from the slope fit.
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub standard_error: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingStudyResult {
    pub config_hash: String,
    /// Ladder sorted by sigma_D.
    pub rungs: Vec<ScalingRung>,
    pub spearman: f64,
    pub slope: Option<SlopeFit>,
    pub dropped_epsilons: Vec<f64>,
}

/// Coupled-pair study of E|delta H| (level-set length difference at the
/// configured level) against sigma_D over a perturbation ladder.
pub fn run_scaling_study(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ScalingStudyResult> {
    cfg.validate_common("scaling")?;
    if cfg.scaling.epsilons.is_empty() {
        return Err(Error::Config("scaling study needs a nonempty epsilon ladder".into()));
    }
    let m1 = built_nondegenerate(&cfg.measure)?;
    let dom = cfg.domain.build()?;
    let hash = cfg.hash();
    let level = cfg.scaling.level;
    let seeds: Vec<u64> = cfg.seed_range.iter().collect();

    let mut rungs = Vec::new();
    let mut seed_rows: Vec<String> = Vec::new();
    for &eps in &cfg.scaling.epsilons {
        let (_, m2) = match cfg.scaling.perturbation {
            Perturbation::Radial => radial_dilation_coupling(&m1, eps)?,
            Perturbation::Angular => angular_rotation_coupling(&m1, eps)?,
        };
        let plan = transport::optimal_coupling(&m1, &m2)?;
        let proxy = transport::sigma_bound_proxy(&plan, dom.r(), dom.dim());
        // sigma_D depends only on the pairing, not the coefficients.
        let sigma_d = CoupledPair::couple(&m1, &m2, &plan, seeds[0])?
            .diagnostics(&dom, cfg.scaling.sigma_grid_spacing)?
            .sigma_d;

        let dhs: Vec<(u64, f64, f64, f64)> = seeds
            .par_iter()
            .map(|&seed| {
                let pair = CoupledPair::couple(&m1, &m2, &plan, seed)
                    .expect("validated plan stays valid");
                let h1 = geometry::level_length(pair.field1(), &dom, level).length;
                let h2 = geometry::level_length(pair.field2(), &dom, level).length;
                (seed, h1, h2, (h1 - h2).abs())
            })
            .collect();
        for (seed, h1, h2, dh) in &dhs {
            seed_rows.push(format!(
                "{hash},{seed},{},{eps},{sigma_d},{h1},{h2},{dh}",
                dom.grid_n()
            ));
        }
        let values: Vec<f64> = dhs.iter().map(|r| r.3).collect();
        let mean = stats::mean(&values);
        let se = stats::standard_error(&values);
        let kept = sigma_d > 0.0 && mean > 3.0 * se;
        rungs.push(ScalingRung {
            epsilon: eps,
            sigma_d,
            transport_proxy: proxy,
            mean_abs_dh: mean,
            standard_error: se,
            n_seeds: seeds.len() as u64,
            kept,
        });
    }
    rungs.sort_by(|a, b| a.sigma_d.partial_cmp(&b.sigma_d).unwrap());

    let kept: Vec<&ScalingRung> = rungs.iter().filter(|r| r.kept).collect();
    let dropped_epsilons: Vec<f64> =
        rungs.iter().filter(|r| !r.kept).map(|r| r.epsilon).collect();
    let sigmas: Vec<f64> = kept.iter().map(|r| r.sigma_d).collect();
    let means: Vec<f64> = kept.iter().map(|r| r.mean_abs_dh).collect();
    let spearman = if kept.len() >= 2 { stats::spearman(&sigmas, &means) } else { f64::NAN };
    let slope = (kept.len() >= 3).then(|| {
        let lx: Vec<f64> = sigmas.iter().map(|s| s.ln()).collect();
        let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        let fit = stats::ols_line(&lx, &ly);
        let (lo, hi) = fit.slope_ci95();
        SlopeFit {
            slope: fit.slope,
            standard_error: fit.slope_se,
            ci95_lo: lo,
            ci95_hi: hi,
            n_points: fit.n,
        }
    });

    io::write_text(
        &out_dir.join("scaling_seeds.csv"),
        &csv_document("config_hash,seed,grid_n,epsilon,sigma_d,h1,h2,abs_dh", &seed_rows),
    )?;
    let rung_rows: Vec<String> = rungs
        .iter()
        .map(|r| {
            format!(
                "{hash},{},{},{},{},{},{},{},{}",
                cfg.seed_range.start,
                dom.grid_n(),
                r.epsilon,
                r.sigma_d,
                r.transport_proxy,
                r.mean_abs_dh,
                r.standard_error,
                u8::from(r.kept),
            )
        })
        .collect();
    io::write_text(
        &out_dir.join("scaling_rungs.csv"),
        &csv_document(
            "config_hash,seed,grid_n,epsilon,sigma_d,transport_proxy,mean_abs_dh,standard_error,kept",
            &rung_rows,
        ),
    )?;
    let result = ScalingStudyResult {
        config_hash: hash,
        rungs,
        spearman,
        slope,
        dropped_epsilons,
    };
    // NaN spearman (degenerate ladder) cannot travel through JSON.
    if result.spearman.is_finite() {
        io::write_json(&out_dir.join("scaling_summary.json"), &result)?;
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Product-Gaussian sign probability

#[derive(Debug, Clone, Serialize)]
pub struct ProductGaussRow {
    pub rho: f64,
    pub mc_estimate: f64,
    pub standard_error: f64,
    pub formula: f64,
    pub z_score: f64,
    /// Quadrature of the density over the positive axis (|rho| < 1 only).
    pub quad_positive_mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductGaussSummary {
    pub config_hash: String,
    pub draws: u64,
    pub rows: Vec<ProductGaussRow>,
}

/// Monte Carlo P(XY > 0) against the arccos formula, plus the density
/// quadrature consistency check.
pub fn run_product_gaussian(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ProductGaussSummary> {
    cfg.validate_common("productgauss")?;
    if cfg.rhos.is_empty() {
        return Err(Error::Config("productgauss needs at least one rho".into()));
    }
    let hash = cfg.hash();
    let n = cfg.mc.draws;
    let rng = CounterRng::new(cfg.seed_range.start ^ 0x5052_4f44);

    let mut rows = Vec::new();
    for &rho in &cfg.rhos {
        let formula = gaussian::product_positive_prob(rho)?;
        let hits: u64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let (x, y) = rng.correlated_normal_pair(i ^ (rho.to_bits() >> 1), rho);
                u64::from(x * y > 0.0)
            })
            .sum();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let quad = (rho.abs() < 1.0).then(|| {
            crate::quad::adaptive_simpson(
                &|z: f64| gaussian::product_density(rho, z).unwrap(),
                1e-12,
                80.0,
                1e-9,
            )
            .value
        });
        rows.push(ProductGaussRow {
            rho,
            mc_estimate: p,
            standard_error: se,
            formula,
            z_score: (p - formula) / se,
            quad_positive_mass: quad,
        });
    }

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{hash},{},{},{},{},{},{},{},{}",
                cfg.seed_range.start,
                cfg.domain.grid_n,
                r.rho,
                r.mc_estimate,
                r.standard_error,
                r.formula,
                r.z_score,
                r.quad_positive_mass.unwrap_or(f64::NAN),
            )
        })
        .collect();
    io::write_text(
        &out_dir.join("productgauss_table.csv"),
        &csv_document(
            "config_hash,seed,grid_n,rho,mc_estimate,standard_error,formula,z_score,quad_positive_mass",
            &csv_rows,
        ),
    )?;
    let summary = ProductGaussSummary { config_hash: hash, draws: n, rows };
    io::write_json(&out_dir.join("productgauss_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Field dump, measure report, coupling export

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub config_hash: String,
    pub seed: u64,
    pub grid_n: usize,
    pub dump_path: String,
    pub segment_files: Vec<String>,
}

/// Draw one realization, dump its jet grid (CSV or raw + JSON sidecar) and
/// optionally export level-set polylines for the configured levels.
pub fn run_sample(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SampleSummary> {
    cfg.validate_common("sample")?;
    let m = cfg.measure.build()?;
    let dom = cfg.domain.build()?;
    let seed = cfg.seed_range.start;
    let field = SampledField::draw(&m, seed);
    let grid = dom.vertex_grid();
    let hash = cfg.hash();

    let format = cfg.dump_format.unwrap_or(DumpFormat::Csv);
    let dump_path = match format {
        DumpFormat::Csv => {
            let path = out_dir.join("field_dump.csv");
            io::write_text(&path, &field_dump_csv(&field, &grid))?;
            path
        }
        DumpFormat::Raw => {
            let path = out_dir.join("field_dump.raw");
            io::write_bytes(&path, &field_dump_raw(&field, &grid))?;
            path
        }
    };
    io::write_json(
        &out_dir.join("field_dump.json"),
        &FieldDumpHeader {
            r: dom.r(),
            n: dom.grid_n(),
            seed,
            measure: MeasureSpec::from_measure(&m),
        },
    )?;

    let mut segment_files = Vec::new();
    for (k, &level) in cfg.levels.iter().enumerate() {
        let segs = geometry::extract_level_segments(&field, &dom, level);
        let path = out_dir.join(format!("level_segments_{k}.csv"));
        io::write_text(&path, &segments_csv(&segs))?;
        segment_files.push(path.display().to_string());
    }
    Ok(SampleSummary {
        config_hash: hash,
        seed,
        grid_n: dom.grid_n(),
        dump_path: dump_path.display().to_string(),
        segment_files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    pub config_hash: String,
    pub dim: usize,
    pub atom_count: usize,
    pub valid: bool,
    pub failures: Vec<String>,
    pub second_moments: Vec<Vec<f64>>,
    pub exp_grad_norm: Option<f64>,
    pub kernel_at_unit_lags: Vec<f64>,
}

/// Validity / moments report for a measure definition.
pub fn run_measure(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MeasureReport> {
    cfg.validate_common("measure")?;
    let m = cfg.measure.build()?;
    let rep = m.validate_nondegenerate();
    let mo = m.second_moments();
    let d = m.dim();
    let second: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| mo.second_at(i, j)).collect())
        .collect();
    let egn = gaussian::expected_gradient_norm(&m, cfg.mc.grad_norm_draws as usize)
        .ok()
        .map(|e| e.value);
    let kernel_at_unit_lags = (0..d)
        .map(|i| {
            let mut t = vec![0.0; d];
            t[i] = 1.0;
            m.kernel(&t).expect("dimension matches")
        })
        .collect();
    let report = MeasureReport {
        config_hash: cfg.hash(),
        dim: d,
        atom_count: m.len(),
        valid: rep.pass,
        failures: rep.failures,
        second_moments: second,
        exp_grad_norm: egn,
        kernel_at_unit_lags,
    };
    io::write_json(&out_dir.join("measure_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupleSummary {
    pub config_hash: String,
    pub cost: f64,
    pub sigma_bound_proxy: f64,
    pub sigma_d: f64,
    pub beta_first_seed: f64,
    pub grid_spacing: f64,
    pub n_pairs: usize,
}

/// Optimal transport plan between the two configured measures, plus coupling
/// diagnostics for the first seed.
pub fn run_couple(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CoupleSummary> {
    cfg.validate_common("couple")?;
    let m1 = cfg.measure.build()?;
    let m2 = cfg
        .measure2
        .as_ref()
        .ok_or_else(|| Error::Config("couple needs measure2".into()))?
        .build()?;
    let dom = cfg.domain.build()?;
    let plan = transport::optimal_coupling(&m1, &m2)?;
    io::write_text(&out_dir.join("coupling_plan.csv"), &plan.to_csv())?;
    let pair = CoupledPair::couple(&m1, &m2, &plan, cfg.seed_range.start)?;
    let diag = pair.diagnostics(&dom, cfg.scaling.sigma_grid_spacing)?;
    let summary = CoupleSummary {
        config_hash: cfg.hash(),
        cost: plan.cost,
        sigma_bound_proxy: transport::sigma_bound_proxy(&plan, dom.r(), dom.dim()),
        sigma_d: diag.sigma_d,
        beta_first_seed: diag.beta,
        grid_spacing: diag.grid_spacing,
        n_pairs: plan.pairs.len(),
    };
    io::write_json(&out_dir.join("coupling_summary.json"), &summary)?;
    Ok(summary)
}
