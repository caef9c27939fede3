//! Reproducible experiment drivers: the kernel identity suite, the L^1
//! flatness study, the four-region bound fits, the logarithmic blow-up sweep,
//! and the boundedness contrast between raw and time-mollified data.
//!
//! Every experiment is a pure function of its configuration and seed; reports
//! embed the full configuration echo, and all sweeps aggregate in a fixed
//! order so reruns are byte-identical regardless of worker count.

mod output;

pub use output::emit_outputs;

use crate::config::{HeatNorm, KernelConfig};
use crate::error::{Error, Result};
use crate::kernels::bounds::{a_factor, region_bound, Region};
use crate::kernels::heat::{gamma1_dz, gamma_plane_radial2, heat_kernel_derivative, HeatVar};
use crate::kernels::hilbert::hilbert_of_indicator;
use crate::kernels::laplace::LaplaceKernel;
use crate::kernels::riesz::{riesz_gauss_convolution, riesz_region_values, RieszMethod};
use crate::kernels::stokes::{kernel_b, kernel_l_with_tol, poisson_riesz_convolution};
use crate::kernels::HalfSpacePoint;
use crate::moduli::{logdini_norm_time, mollify_time, NormGrid};
use crate::quadrature::adaptive_1d;
use crate::representation::{
    combined_tangential_operator, velocity, BoundaryField, ComponentFn, SpaceTimeDensity,
};
use crate::special::CompensatedSum;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Ordinary least squares fit `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> FitSummary {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    FitSummary {
        slope,
        intercept,
        r_squared,
    }
}

/// One series of a sweep plot.
#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub log_x: bool,
    pub x_label: String,
    pub y_label: String,
}

/// Experiment result: a rectangular table, the pass verdict, the exact
/// configuration echo, optional fit and plot series, and summary lines.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub pass: bool,
    pub config_echo: String,
    pub fit: Option<FitSummary>,
    pub summary: Vec<String>,
    pub kv: Vec<(String, String)>,
    pub series: Vec<PlotSeries>,
}

impl ExperimentReport {
    fn new(name: &str, columns: &[&str], cfg: &KernelConfig, seed: u64) -> Self {
        let mut echo = cfg.echo();
        echo.push_str(&format!("seed = {seed}\n"));
        ExperimentReport {
            name: name.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            pass: true,
            config_echo: echo,
            fit: None,
            summary: Vec::new(),
            kv: Vec::new(),
            series: Vec::new(),
        }
    }

    fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    fn kv_push(&mut self, key: &str, value: String) {
        self.kv.push((key.to_string(), value));
    }
}

pub(crate) fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.12e}")
}

fn fmt_b(v: bool) -> String {
    if v {
        "true".into()
    } else {
        "false".into()
    }
}

fn rel_against(measured: f64, reference: f64) -> f64 {
    (measured - reference).abs() / reference.abs().max(1.0)
}

// ==========================================================================
// identity suite
// ==========================================================================

/// Kernel identity suite: the trace identity, the commutator relation, the
/// heat time-integral identity, and the Poisson–Riesz convolution identity,
/// at pseudo-randomly seeded points.
pub fn run_identity_suite(cfg: &KernelConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new(
        "identities",
        &[
            "identity",
            "point",
            "i",
            "j",
            "measured",
            "reference",
            "rel_error",
            "tol",
            "informational",
            "pass",
        ],
        cfg,
        seed,
    );
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    while points.len() < 10 {
        let xp: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.2..1.2)).collect();
        if xp.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.2 {
            continue;
        }
        let xn = rng.gen_range(0.2..0.9);
        let t = rng.gen_range(0.25..1.4);
        points.push((xp, xn, t));
    }

    struct IdentityRow {
        identity: &'static str,
        point: usize,
        i: i64,
        j: i64,
        measured: f64,
        reference: f64,
        tol: f64,
        informational: bool,
    }

    let l_tol = 2e-7;
    let mut rows: Vec<IdentityRow> = Vec::new();
    // trace and commutator relations, in parallel over points
    let per_point: Vec<Vec<IdentityRow>> = points
        .par_iter()
        .enumerate()
        .map(|(pidx, (xp, xn, t))| {
            let mut out = Vec::new();
            let x = HalfSpacePoint::unchecked(xp.clone(), *xn);
            let mut full = xp.clone();
            full.push(*xn);
            let dng = heat_kernel_derivative(&full, *t, &[HeatVar::X(n - 1)], cfg).unwrap();
            let mut trace = 0.0;
            for i in 0..n {
                trace += kernel_l_with_tol(i, i, &x, *t, cfg, l_tol).unwrap();
            }
            out.push(IdentityRow {
                identity: "trace",
                point: pidx,
                i: -1,
                j: -1,
                measured: trace,
                reference: -2.0 * dng,
                tol: 1e-3,
                informational: false,
            });
            for i in 0..n - 1 {
                let l_in = kernel_l_with_tol(i, n - 1, &x, *t, cfg, l_tol).unwrap();
                let l_ni = kernel_l_with_tol(n - 1, i, &x, *t, cfg, l_tol).unwrap();
                let b = kernel_b(i, &x, *t, cfg).unwrap();
                out.push(IdentityRow {
                    identity: "commutator",
                    point: pidx,
                    i: i as i64,
                    j: (n - 1) as i64,
                    measured: l_in - l_ni,
                    reference: b,
                    tol: 1e-3,
                    informational: false,
                });
            }
            out
        })
        .collect();
    for mut chunk in per_point {
        rows.append(&mut chunk);
    }

    // heat time integral against the Laplace solution (n >= 3; the planar
    // log solution has no convergent time integral)
    if n >= 3 {
        let lap = LaplaceKernel::new(cfg);
        for pidx in 0..5 {
            let (xp, xn, _) = &points[pidx];
            let me = heat_time_integral(xp, *xn, cfg, cfg.heat_norm);
            let e = lap.eval(xp, *xn);
            rows.push(IdentityRow {
                identity: "time_integral",
                point: pidx,
                i: -1,
                j: -1,
                measured: me,
                reference: -e,
                tol: 1e-4,
                informational: false,
            });
            let other = match cfg.heat_norm {
                HeatNorm::Standard => HeatNorm::Paper,
                HeatNorm::Paper => HeatNorm::Standard,
            };
            let mo = heat_time_integral(xp, *xn, cfg, other);
            rows.push(IdentityRow {
                identity: "time_integral_other_norm",
                point: pidx,
                i: -1,
                j: -1,
                measured: mo,
                reference: -e,
                tol: 1e-4,
                informational: true,
            });
        }
    }

    // Poisson–Riesz convolution: D_n E(., x_n) conv' D_i E(., 0) equals the
    // tangential gradient at height x_n times the calibrated factor 1/2
    let lap = LaplaceKernel::new(cfg);
    for pidx in 0..5 {
        let (xp, xn, _) = &points[pidx];
        let conv = poisson_riesz_convolution(0, xp, *xn, cfg, 1e-9)?;
        let target = 0.5 * lap.grad(0, xp, *xn);
        rows.push(IdentityRow {
            identity: "poisson_riesz",
            point: pidx,
            i: 0,
            j: -1,
            measured: conv,
            reference: target,
            tol: 1e-3,
            informational: false,
        });
        rows.push(IdentityRow {
            identity: "poisson_riesz_vs_unit_factor",
            point: pidx,
            i: 0,
            j: -1,
            measured: conv,
            reference: lap.grad(0, xp, *xn),
            tol: 1e-3,
            informational: true,
        });
    }

    let mut pass = true;
    for r in rows {
        let rel = rel_against(r.measured, r.reference);
        let ok = r.informational || rel <= r.tol;
        pass &= ok;
        rep.push_row(vec![
            r.identity.to_string(),
            r.point.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            fmt_f(r.measured),
            fmt_f(r.reference),
            fmt_f(rel),
            fmt_f(r.tol),
            fmt_b(r.informational),
            fmt_b(ok || r.informational),
        ]);
    }
    rep.pass = pass;
    rep.note(format!("identity suite over {} seeded points: pass = {pass}", points.len()));
    rep.note(
        "time_integral_other_norm and poisson_riesz_vs_unit_factor rows are informational: \
         the first shows the other normalization's systematic factor, the second the \
         deviation from the uncalibrated unit factor",
    );
    rep.kv_push("pass", fmt_b(pass));
    Ok(rep)
}

/// `int_0^inf Gamma(x, s) ds` by quadrature with the tail compressed through
/// `s -> 1/s` (the substituted integrand has an integrable endpoint).
fn heat_time_integral(x_prime: &[f64], xn: f64, cfg: &KernelConfig, norm: HeatNorm) -> f64 {
    let r2: f64 = x_prime.iter().map(|v| v * v).sum::<f64>() + xn * xn;
    let split = (40.0 * r2).max(50.0);
    let mut head = |s: f64| gamma_plane_radial2(r2, s, cfg.n, norm);
    let q1 = adaptive_1d(&mut head, 1e-14, split, 1e-12).value;
    let mut tail = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let s = 1.0 / u;
        gamma_plane_radial2(r2, s, cfg.n, norm) * s * s
    };
    let q2 = adaptive_1d(&mut tail, 0.0, 1.0 / split, 1e-12).value;
    q1 + q2
}

// ==========================================================================
// L^1 study
// ==========================================================================

/// Truncated `int int |L_ij|` over `|x'| <= radius`, `t <= t_cap`, for the
/// tangential-derivative blocks, across the vertical sweep; reports the
/// max/min ratio across decades and the drift under radius doubling.
pub fn run_l1_study(cfg: &KernelConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n > 3 {
        return Err(Error::Config("L^1 study implemented for n = 2, 3".into()));
    }
    let mut rep = ExperimentReport::new(
        "l1",
        &[
            "kind", "i", "j", "x_n", "radius", "integral", "integral_doubled", "drift", "ratio", "pass",
        ],
        cfg,
        0,
    );
    let n = cfg.n;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n - 1).map(move |j| (i, j))).collect();
    let xns = cfg.xn_grid.clone();
    let radius = cfg.trunc_radius;

    let cells: Vec<((usize, usize), f64, f64, f64)> = pairs
        .iter()
        .flat_map(|&(i, j)| xns.iter().map(move |&xn| (i, j, xn)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j, xn)| {
            let inner = l1_cell(i, j, xn, 0.0, radius, cfg);
            let annulus = l1_cell(i, j, xn, radius, 2.0 * radius, cfg);
            ((i, j), xn, inner, inner + annulus)
        })
        .collect();

    let mut pass = true;
    for &(i, j) in &pairs {
        let mine: Vec<&((usize, usize), f64, f64, f64)> =
            cells.iter().filter(|c| c.0 == (i, j)).collect();
        let mut vals = Vec::new();
        for &&(_, xn, v, vd) in &mine {
            let drift = (vd - v).abs() / v.max(1e-300);
            let ok = drift < 0.10;
            pass &= ok;
            vals.push(v);
            rep.push_row(vec![
                "cell".into(),
                i.to_string(),
                j.to_string(),
                fmt_f(xn),
                fmt_f(radius),
                fmt_f(v),
                fmt_f(vd),
                fmt_f(drift),
                String::new(),
                fmt_b(ok),
            ]);
        }
        let vmax = vals.iter().cloned().fold(f64::MIN, f64::max);
        let vmin = vals.iter().cloned().fold(f64::MAX, f64::min);
        let ratio = vmax / vmin.max(1e-300);
        let ok = ratio <= 2.0;
        pass &= ok;
        rep.push_row(vec![
            "pair".into(),
            i.to_string(),
            j.to_string(),
            String::new(),
            fmt_f(radius),
            fmt_f(vmin),
            fmt_f(vmax),
            String::new(),
            fmt_f(ratio),
            fmt_b(ok),
        ]);
    }

    // permutation symmetry of the plane coordinates (n = 3): the absolute
    // integrals of the swapped pair coincide on the shared grid
    if n == 3 {
        let a = cells.iter().find(|c| c.0 == (0, 1)).unwrap();
        let b = cells.iter().find(|c| c.0 == (1, 0)).unwrap();
        let rel = (a.2 - b.2).abs() / a.2.max(1e-300);
        let ok = rel <= 5e-2;
        pass &= ok;
        rep.push_row(vec![
            "symmetry".into(),
            "0".into(),
            "1".into(),
            fmt_f(a.1),
            fmt_f(radius),
            fmt_f(a.2),
            fmt_f(b.2),
            fmt_f(rel),
            String::new(),
            fmt_b(ok),
        ]);
    }

    rep.pass = pass;
    rep.note(format!(
        "truncated L^1 mass of the kernel blocks across x_n = {:?}: pass = {pass}",
        xns
    ));
    rep.kv_push("pass", fmt_b(pass));
    Ok(rep)
}

/// Quadrant-symmetric fixed-grid integral of `|L_ij|` over the annulus
/// `r_lo <= |x'| <= r_hi`, `t <= t_cap`. Fixed grids keep the cross-decade
/// ratios free of adaptive noise.
fn l1_cell(i: usize, j: usize, xn: f64, r_lo: f64, r_hi: f64, cfg: &KernelConfig) -> f64 {
    let l_tol = 1e-7;
    let t_min = xn * xn / 60.0;
    let t_panels = 18usize;
    let gauss3 = [
        (-0.774596669241483, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774596669241483, 5.0 / 9.0),
    ];
    let lr = (cfg.t_cap / t_min).ln() / t_panels as f64;
    // time nodes on a log-uniform panel mesh
    let mut tnodes = Vec::new();
    for p in 0..t_panels {
        let ta = t_min * (lr * p as f64).exp();
        let tb = t_min * (lr * (p + 1) as f64).exp();
        for (g, w) in gauss3 {
            let t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * g;
            tnodes.push((t, 0.5 * (tb - ta) * w));
        }
    }
    let r_panels = 12usize;
    let r_floor = (r_hi * 1e-3).max(r_lo);
    let mut rnodes = Vec::new();
    if r_lo == 0.0 {
        rnodes.push((0.5 * r_floor, r_floor));
    }
    let lrr = (r_hi / r_floor).ln() / r_panels as f64;
    for p in 0..r_panels {
        let ra = r_floor * (lrr * p as f64).exp();
        let rb = r_floor * (lrr * (p + 1) as f64).exp();
        for (g, w) in gauss3 {
            let r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * g;
            rnodes.push((r, 0.5 * (rb - ra) * w));
        }
    }
    let mut total = CompensatedSum::new();
    match cfg.plane_dim() {
        1 => {
            for &(t, wt) in &tnodes {
                for &(r, wr) in &rnodes {
                    let p = HalfSpacePoint::unchecked(vec![r], xn);
                    let v = kernel_l_with_tol(i, j, &p, t, cfg, l_tol).unwrap_or(0.0);
                    total.add(2.0 * v.abs() * wr * wt); // both signs of x_1
                }
            }
        }
        2 => {
            let m_ang = 8usize;
            for &(t, wt) in &tnodes {
                for &(r, wr) in &rnodes {
                    let mut ang = CompensatedSum::new();
                    for k in 0..m_ang {
                        // open trapezoid on the quadrant, reflected fourfold
                        let th = std::f64::consts::FRAC_PI_2 * (k as f64 + 0.5) / m_ang as f64;
                        let p = HalfSpacePoint::unchecked(vec![r * th.cos(), r * th.sin()], xn);
                        let v = kernel_l_with_tol(i, j, &p, t, cfg, l_tol).unwrap_or(0.0);
                        ang.add(v.abs());
                    }
                    let quad = ang.value() * std::f64::consts::FRAC_PI_2 / m_ang as f64;
                    total.add(4.0 * quad * r * wr * wt);
                }
            }
        }
        _ => unreachable!(),
    }
    total.value()
}

// ==========================================================================
// region bounds
// ==========================================================================

/// Fits the single constant per region estimate over an `(|x'|, t)` grid,
/// verifies per-point domination and refinement stability, and checks the
/// aggregate support-ball estimate with its logarithmic factor.
pub fn run_region_bounds(cfg: &KernelConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new(
        "bounds",
        &[
            "check", "region", "a", "t_or_s", "measured", "bound", "ratio", "fit_c", "pass",
        ],
        cfg,
        0,
    );
    let regions = [
        (Region::NearOrigin, "near_origin", 0usize),
        (Region::Annulus, "annulus", 1),
        (Region::NearSingularity, "near_singularity", 2),
        (Region::Far, "far", 3),
    ];
    let grid = |steps: usize| -> Vec<(f64, f64)> {
        let mut g = Vec::new();
        for ia in 0..steps {
            let a = 0.4 + (2.4 - 0.4) * ia as f64 / (steps - 1) as f64;
            for it in 0..steps {
                let t = 0.25 + (2.4 - 0.25) * it as f64 / (steps - 1) as f64;
                g.push((a, t));
            }
        }
        g
    };
    let measure = |pts: &[(f64, f64)]| -> Vec<[f64; 5]> {
        pts.par_iter()
            .map(|&(a, t)| {
                let mut xp = vec![0.0; cfg.plane_dim()];
                xp[0] = a;
                let vals = riesz_region_values(0, &xp, t, cfg, 1e-10).unwrap();
                [vals[0].abs(), vals[1].abs(), vals[2].abs(), vals[3].abs(), 0.0]
            })
            .collect()
    };
    let coarse_pts = grid(5);
    let fine_pts = grid(9);
    let coarse = measure(&coarse_pts);
    let fine = measure(&fine_pts);

    let mut pass = true;
    for (region, label, ridx) in regions {
        let fit_on = |pts: &[(f64, f64)], vals: &[[f64; 5]]| -> f64 {
            let mut c = 0.0_f64;
            for (k, &(a, t)) in pts.iter().enumerate() {
                let mut xp = vec![0.0; cfg.plane_dim()];
                xp[0] = a;
                let b = region_bound(region, &xp, t, cfg).unwrap();
                if b > 1e-300 {
                    c = c.max(vals[k][ridx] / b);
                }
            }
            c
        };
        let c1 = fit_on(&coarse_pts, &coarse);
        let c2 = fit_on(&fine_pts, &fine);
        let drift = (c2 - c1).abs() / c1.max(1e-300);
        let stable = drift < 0.20;
        pass &= stable;
        // per-point domination under the fitted constant (fine grid)
        let mut dominated = true;
        for (k, &(a, t)) in fine_pts.iter().enumerate() {
            let mut xp = vec![0.0; cfg.plane_dim()];
            xp[0] = a;
            let b = region_bound(region, &xp, t, cfg).unwrap();
            if fine[k][ridx] > c2 * b * (1.0 + 1e-12) {
                dominated = false;
            }
        }
        pass &= dominated;
        rep.push_row(vec![
            "region_fit".into(),
            label.into(),
            String::new(),
            String::new(),
            fmt_f(c1),
            fmt_f(c2),
            fmt_f(drift),
            fmt_f(c2),
            fmt_b(stable && dominated),
        ]);
    }

    // far region at tiny time: both the measured integral and the bound empty out
    {
        let mut xp = vec![0.0; cfg.plane_dim()];
        xp[0] = 1.0;
        let t = 1e-3;
        let vals = riesz_region_values(0, &xp, t, cfg, 1e-12).unwrap();
        let b = region_bound(Region::Far, &xp, t, cfg).unwrap();
        let ok = vals[3].abs() < 1e-10 && b < 1e-10;
        pass &= ok;
        rep.push_row(vec![
            "far_tiny_t".into(),
            "far".into(),
            fmt_f(1.0),
            fmt_f(t),
            fmt_f(vals[3].abs()),
            fmt_f(b),
            String::new(),
            String::new(),
            fmt_b(ok),
        ]);
    }

    // aggregate over the support ball: int_{|y'| <= M} |R_i| dy' against
    // C (1 + a(M, s)) over an s-sweep, with refinement stability
    let m_sup = cfg.support_radius;
    let sweep = |count: usize| -> Vec<(f64, f64, f64)> {
        (0..count)
            .into_par_iter()
            .map(|k| {
                let lo = (1e-3 * m_sup * m_sup).ln();
                let hi = (16.0 * m_sup * m_sup).ln();
                let s = (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp();
                let measured = riesz_ball_l1(s, m_sup, cfg);
                let bound = 1.0 + a_factor(m_sup, s).unwrap();
                (s, measured, bound)
            })
            .collect()
    };
    let agg1 = sweep(12);
    let agg2 = sweep(24);
    let cfit = |rows: &[(f64, f64, f64)]| rows.iter().map(|r| r.1 / r.2).fold(0.0_f64, f64::max);
    let ca1 = cfit(&agg1);
    let ca2 = cfit(&agg2);
    let adrift = (ca2 - ca1).abs() / ca1.max(1e-300);
    let astable = adrift < 0.20;
    pass &= astable;
    for &(s, measured, bound) in &agg1 {
        rep.push_row(vec![
            "aggregate".into(),
            "support_ball".into(),
            fmt_f(m_sup),
            fmt_f(s),
            fmt_f(measured),
            fmt_f(bound),
            fmt_f(measured / bound),
            fmt_f(ca2),
            fmt_b(measured <= ca2 * bound * (1.0 + 1e-12)),
        ]);
    }
    // the log factor vanishes past s = M^2; the bound reduces to the constant
    let flat: Vec<&(f64, f64, f64)> = agg1.iter().filter(|r| r.0 >= m_sup * m_sup).collect();
    let flat_ok = !flat.is_empty() && flat.iter().all(|r| r.2 == 1.0 && r.1 <= ca2);
    pass &= flat_ok;
    rep.push_row(vec![
        "aggregate_flat_branch".into(),
        "support_ball".into(),
        fmt_f(m_sup),
        String::new(),
        fmt_f(flat.iter().map(|r| r.1).fold(0.0_f64, f64::max)),
        fmt_f(1.0),
        String::new(),
        fmt_f(ca2),
        fmt_b(flat_ok),
    ]);

    rep.pass = pass;
    rep.note(format!("four-region envelope fits and aggregate support-ball estimate: pass = {pass}"));
    rep.note(format!("aggregate fitted constant {ca2:.4} (refinement drift {adrift:.3})"));
    rep.kv_push("pass", fmt_b(pass));
    rep.kv_push("aggregate_c", fmt_f(ca2));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut bs = Vec::new();
    for &(s, measured, bound) in &agg1 {
        xs.push(s);
        ys.push(measured);
        bs.push(ca2 * bound);
    }
    rep.series.push(PlotSeries {
        name: "measured".into(),
        xs: xs.clone(),
        ys,
        log_x: true,
        x_label: "s".into(),
        y_label: "support-ball integral".into(),
    });
    rep.series.push(PlotSeries {
        name: "fitted bound".into(),
        xs,
        ys: bs,
        log_x: true,
        x_label: "s".into(),
        y_label: "support-ball integral".into(),
    });
    Ok(rep)
}

/// `int_{|y'| <= M} |R_i(y', s)| dy'` via the rotational covariance
/// `R_i = (y_i / |y'|) r(|y'|, s)` and the closed-form radial profiles
/// (validated against the direct and spectral routes in the kernel tests).
fn riesz_ball_l1(s: f64, m_sup: f64, cfg: &KernelConfig) -> f64 {
    match cfg.plane_dim() {
        1 => {
            let mut f = |y: f64| crate::kernels::riesz::riesz_closed_form_2d(y, s, cfg.heat_norm).abs();
            2.0 * adaptive_1d(&mut f, 1e-12, m_sup, 1e-10).value
        }
        2 => {
            // angular integral of |cos| is 4
            let mut f = |rho: f64| {
                4.0 * rho
                    * crate::kernels::riesz::riesz_closed_form_3d(0, &[rho, 0.0], s, cfg.heat_norm).abs()
            };
            adaptive_1d(&mut f, 1e-12, m_sup, 1e-10).value
        }
        _ => unreachable!(),
    }
}

// ==========================================================================
// blow-up
// ==========================================================================

/// The discontinuous counterexample data: vertical component
/// `chi_(-1,1)(y) chi_(1/2,1)(s)`, tangential components zero.
pub fn counterexample_field(n: usize) -> BoundaryField {
    let mut comps: Vec<ComponentFn> = Vec::new();
    for _ in 0..n - 1 {
        comps.push(Arc::new(|_y: &[f64], _s: f64| 0.0));
    }
    comps.push(Arc::new(|y: &[f64], s: f64| {
        let inside = y.iter().map(|v| v * v).sum::<f64>() < 1.0;
        if inside && s > 0.5 && s < 1.0 {
            1.0
        } else {
            0.0
        }
    }));
    BoundaryField::new(comps, 1.0, 1.5, 1.0).with_breaks(vec![-1.0, 1.0], vec![0.5, 1.0])
}

/// Logarithmic blow-up sweep: the tangential velocity at `(1, x_2)` and
/// `t = 1 + x_2^2` for `x_2 = 2^-k`, with the decomposition pieces, the
/// dense double-integral oracle, and the affine fit against `ln(1/x_2)`.
pub fn run_blowup(cfg: &KernelConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n != 2 {
        return Err(Error::Config(format!(
            "the blow-up construction is two-dimensional; config has n = {}",
            cfg.n
        )));
    }
    let mut rep = ExperimentReport::new(
        "blowup",
        &[
            "k", "x2", "u11", "u12", "u13", "total", "oracle", "rel_error_vs_oracle", "pass",
        ],
        cfg,
        0,
    );
    let g = counterexample_field(2);

    struct Point {
        k: u32,
        x2: f64,
        u11: f64,
        u12: f64,
        u13: f64,
        total: f64,
        oracle: f64,
    }
    let pts: Vec<Point> = (3..=10u32)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let x2 = 0.5_f64.powi(k as i32);
            let t = 1.0 + x2 * x2;
            let x = HalfSpacePoint::unchecked(vec![1.0], x2);
            let total = velocity(&g, &x, t, cfg).unwrap()[0];
            let (u11, u12, u13) = blowup_decomposition(&g, x2, cfg);
            let oracle = blowup_dense_oracle(cfg, x2, 160, 160);
            Point {
                k,
                x2,
                u11,
                u12,
                u13,
                total,
                oracle,
            }
        })
        .collect();

    let mut pass = true;
    let mut prev_mag = 0.0_f64;
    let mut prev_u12 = 0.0_f64;
    let mut monotone_total = true;
    let mut monotone_u12 = true;
    for p in &pts {
        if p.total.abs() <= prev_mag {
            monotone_total = false;
        }
        if p.u12.abs() <= prev_u12 {
            monotone_u12 = false;
        }
        prev_mag = p.total.abs();
        prev_u12 = p.u12.abs();
    }
    for p in &pts {
        let rel = (p.total - p.oracle).abs() / p.oracle.abs();
        let ok = rel <= 1e-3 && p.u13.abs() < 1e-12;
        pass &= ok;
        rep.push_row(vec![
            p.k.to_string(),
            fmt_f(p.x2),
            fmt_f(p.u11),
            fmt_f(p.u12),
            fmt_f(p.u13),
            fmt_f(p.total),
            fmt_f(p.oracle),
            fmt_f(rel),
            fmt_b(ok),
        ]);
    }
    pass &= monotone_total && monotone_u12;

    let xs: Vec<f64> = pts.iter().map(|p| (1.0 / p.x2).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.total).collect();
    let fit = linear_fit(&xs, &ys);
    pass &= fit.r_squared >= 0.99;
    rep.fit = Some(fit);
    rep.pass = pass;
    rep.note(format!(
        "tangential velocity grows affinely in ln(1/x_2): slope {:.5}, intercept {:.5}, r^2 {:.6}",
        fit.slope, fit.intercept, fit.r_squared
    ));
    rep.note(format!(
        "monotone |total| = {monotone_total}, monotone |u12| = {monotone_u12}, pass = {pass}"
    ));
    rep.kv_push("pass", fmt_b(pass));
    rep.kv_push("slope", fmt_f(fit.slope));
    rep.kv_push("intercept", fmt_f(fit.intercept));
    rep.kv_push("r_squared", fmt_f(fit.r_squared));
    rep.series.push(PlotSeries {
        name: "u11".into(),
        xs: xs.clone(),
        ys: pts.iter().map(|p| p.u11).collect(),
        log_x: false,
        x_label: "ln(1/x2)".into(),
        y_label: "velocity piece".into(),
    });
    rep.series.push(PlotSeries {
        name: "u12".into(),
        xs: xs.clone(),
        ys: pts.iter().map(|p| p.u12).collect(),
        log_x: false,
        x_label: "ln(1/x2)".into(),
        y_label: "velocity piece".into(),
    });
    rep.series.push(PlotSeries {
        name: "|total|".into(),
        xs,
        ys: pts.iter().map(|p| p.total.abs()).collect(),
        log_x: false,
        x_label: "ln(1/x2)".into(),
        y_label: "velocity piece".into(),
    });
    Ok(rep)
}

/// The three decomposition pieces of the tangential counterexample velocity:
/// the bounded kernel-block convolution, the divergent commutator
/// convolution, and the instantaneous trace term (zero past the data's
/// temporal support).
fn blowup_decomposition(g: &BoundaryField, x2: f64, cfg: &KernelConfig) -> (f64, f64, f64) {
    let t = 1.0 + x2 * x2;
    let x = HalfSpacePoint::unchecked(vec![1.0], x2);
    let data = |y: &[f64], s: f64| g.eval(1, y, s);
    let f = SpaceTimeDensity {
        eval: &data,
        support_radius: g.support_radius,
        sup_norm: g.sup_norm,
        space_breaks: &g.space_breaks,
        time_breaks: &g.time_breaks,
    };
    // u11: minus the convolution with the transposed kernel block
    let u11 = -spacetime_density_conv(
        &|w, tau| {
            let p = HalfSpacePoint::unchecked(w.to_vec(), x2);
            kernel_l_with_tol(1, 0, &p, tau, cfg, 1e-8)
        },
        &f,
        &x,
        t,
        cfg,
    );
    // u12: minus the commutator convolution
    let u12 = -spacetime_density_conv(
        &|w, tau| {
            let p = HalfSpacePoint::unchecked(w.to_vec(), x2);
            kernel_b(0, &p, tau, cfg)
        },
        &f,
        &x,
        t,
        cfg,
    );
    // u13: instantaneous trace term; the data vanishes at t > 1
    let lap = LaplaceKernel::new(cfg);
    let inst_kern = |y: &[f64]| lap.grad(0, &[x.x_prime[0] - y[0]], x2);
    let trace = |y: &[f64]| f.value(y, t);
    let plane = crate::quadrature::PlaneData {
        eval: &trace,
        dim: 1,
        support_radius: f.support_radius,
        sup_norm: f.sup_norm,
        breaks: f.space_breaks,
    };
    let u13 =
        crate::quadrature::truncated_plane_convolution(&inst_kern, &plane, cfg.trunc_radius, cfg.tol_space, None)
            .value;
    (u11, u12, u13)
}

/// Space-time convolution of a kernel against a scalar density (no Dirac
/// part), shared by the decomposition pieces.
fn spacetime_density_conv(
    kern: &dyn Fn(&[f64], f64) -> Result<f64>,
    f: &SpaceTimeDensity,
    x: &HalfSpacePoint,
    t: f64,
    cfg: &KernelConfig,
) -> f64 {
    let data = |y: &[f64], s: f64| f.value(y, s);
    crate::representation::spacetime_conv(
        kern,
        &data,
        f.support_radius,
        f.space_breaks,
        f.time_breaks,
        x,
        t,
        cfg,
    )
    .unwrap_or(0.0)
}

/// Dense tensor double-integral oracle for the counterexample point at
/// height `xn`: the commutator piece through the closed-form transform of
/// the indicator, the kernel-block piece on graded Gauss panels. Independent
/// of the adaptive convolution engine.
pub fn blowup_dense_oracle(cfg: &KernelConfig, xn: f64, ns: usize, nv: usize) -> f64 {
    assert_eq!(cfg.n, 2);
    let t = 1.0 + xn * xn;
    let gauss4 = [
        (-0.861136311594053, 0.347854845137454),
        (-0.339981043584856, 0.652145154862546),
        (0.339981043584856, 0.652145154862546),
        (0.861136311594053, 0.347854845137454),
    ];
    // commutator piece: the plane convolution of the commutator kernel with
    // the spatial indicator is the Gaussian-smoothed closed-form transform;
    // integrating the factored kernel against it needs v-panels graded into
    // the logarithmic endpoints and s-panels graded toward s = t
    let mut v_edges: Vec<f64> = vec![-9.0];
    let m = nv / 4;
    for k in 0..=m {
        v_edges.push(-1.0 - 8.0 * (1.0 - k as f64 / m as f64).powi(3));
    }
    for k in 1..m {
        v_edges.push(-1.0 + 2.0 * (k as f64 / m as f64).powi(3));
    }
    for k in 0..m {
        v_edges.push(1.0 - 2.0 * (1.0 - k as f64 / m as f64).powi(3));
    }
    for k in 1..=m {
        v_edges.push(1.0 + 8.0 * (k as f64 / m as f64).powi(3));
    }
    v_edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    v_edges.dedup();
    let mut s_edges: Vec<f64> = Vec::new();
    let ms = ns;
    for k in 0..=ms {
        // graded toward s = 1 (where tau = t - s is smallest)
        let u = k as f64 / ms as f64;
        s_edges.push(0.5 + 0.5 * (1.0 - (1.0 - u).powi(3)));
    }
    let mut u12 = CompensatedSum::new();
    for iv in v_edges.windows(2) {
        let (va, vb) = (iv[0], iv[1]);
        if vb <= va {
            continue;
        }
        for is in s_edges.windows(2) {
            let (sa, sb) = (is[0], is[1]);
            for (gv, wv) in gauss4 {
                let v = 0.5 * (va + vb) + 0.5 * (vb - va) * gv;
                let hval = match hilbert_of_indicator(-1.0, 1.0, v) {
                    Ok(h) => h,
                    Err(_) => continue,
                };
                for (gs, ws) in gauss4 {
                    let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * gs;
                    let tau = t - s;
                    let d2g = gamma_plane_radial2((1.0 - v) * (1.0 - v), tau, 1, cfg.heat_norm)
                        * gamma1_dz(xn, tau, cfg.heat_norm);
                    u12.add(0.25 * (vb - va) * (sb - sa) * wv * ws * d2g * 2.0 * hval);
                }
            }
        }
    }
    // kernel-block piece over the data support
    let mut l_part = CompensatedSum::new();
    let mut vl_edges: Vec<f64> = Vec::new();
    for k in 0..=24 {
        vl_edges.push(-1.0 + 2.0 * k as f64 / 24.0);
    }
    for iv in vl_edges.windows(2) {
        let (va, vb) = (iv[0], iv[1]);
        for is in s_edges.windows(2) {
            let (sa, sb) = (is[0], is[1]);
            for (gv, wv) in gauss4 {
                let v = 0.5 * (va + vb) + 0.5 * (vb - va) * gv;
                for (gs, ws) in gauss4 {
                    let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * gs;
                    let p = HalfSpacePoint::unchecked(vec![1.0 - v], xn);
                    let lv = kernel_l_with_tol(1, 0, &p, t - s, cfg, 1e-7).unwrap();
                    l_part.add(-0.25 * (vb - va) * (sb - sa) * wv * ws * lv);
                }
            }
        }
    }
    u12.value() + l_part.value()
}

// ==========================================================================
// boundedness contrast
// ==========================================================================

/// Sup of the combined tangential operator over the evaluation grid for the
/// raw counterexample data and its time mollifications: the mollified ratios
/// stabilize across vertical decades while the raw sup keeps growing
/// logarithmically.
pub fn run_maxmod(cfg: &KernelConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.n != 2 {
        return Err(Error::Config(format!(
            "the boundedness contrast uses the two-dimensional counterexample data; config has n = {}",
            cfg.n
        )));
    }
    let mut rep = ExperimentReport::new(
        "maxmod",
        &[
            "dataset", "tau", "x_n", "sup_combined", "sup_norm", "logdini", "ratio", "pass",
        ],
        cfg,
        0,
    );
    let raw = counterexample_field(2);
    let mut datasets: Vec<(String, f64, BoundaryField)> = vec![("raw".into(), 0.0, raw.clone())];
    for &tau in &cfg.mollify_tau {
        datasets.push((format!("mollified_{tau}"), tau, mollify_time(&raw, tau)));
    }

    let mut norm_grid = NormGrid {
        r_min: cfg.r_min,
        r_steps: 193,
        sup_points: 97,
        features: Vec::new(),
    };
    let mut xns = cfg.xn_grid.clone();
    xns.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut pass = true;
    let mut raw_sups: Vec<f64> = Vec::new();
    for (label, tau, field) in &datasets {
        // logDini norm of the maximal time profile
        norm_grid.features = field.time_breaks.clone();
        let profile = |s: f64| field.eval(1, &[0.0], s);
        let nr = logdini_norm_time(&profile, cfg.r0, field.horizon, &norm_grid);
        let logdini = if nr.possibly_infinite { f64::INFINITY } else { nr.value };
        let mut ratios: Vec<f64> = Vec::new();
        for &xn in &xns {
            let sup = sup_combined_on_grid(field, xn, cfg);
            let denom = field.sup_norm + logdini;
            let ratio = if denom.is_finite() { sup / denom } else { 0.0 };
            ratios.push(ratio);
            if *tau == 0.0 {
                raw_sups.push(sup);
            }
            rep.push_row(vec![
                label.clone(),
                fmt_f(*tau),
                fmt_f(xn),
                fmt_f(sup),
                fmt_f(field.sup_norm),
                fmt_f(logdini),
                fmt_f(ratio),
                String::new(),
            ]);
        }
        if *tau > 0.0 {
            let rmax = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let rmin = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let ok = rmax / rmin.max(1e-300) < 2.0;
            pass &= ok;
            rep.push_row(vec![
                format!("{label}_ratio_spread"),
                fmt_f(*tau),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                fmt_f(rmax / rmin.max(1e-300)),
                fmt_b(ok),
            ]);
        }
    }
    // raw data: monotone growth of the sup as the boundary is approached
    let grows = raw_sups.windows(2).all(|w| w[1] > w[0]);
    pass &= grows;
    rep.push_row(vec![
        "raw_growth".into(),
        fmt_f(0.0),
        String::new(),
        fmt_f(raw_sups.last().copied().unwrap_or(0.0)),
        String::new(),
        String::new(),
        String::new(),
        fmt_b(grows),
    ]);
    let lnx: Vec<f64> = xns.iter().map(|&v| (1.0 / v).ln()).collect();
    let growth_fit = linear_fit(&lnx, &raw_sups);
    rep.fit = Some(growth_fit);

    rep.pass = pass;
    rep.note(format!(
        "raw sup grows with |ln x_n| (slope {:.4}, r^2 {:.4}); mollified ratios stay within a factor 2 across decades: pass = {pass}",
        growth_fit.slope, growth_fit.r_squared
    ));
    rep.kv_push("pass", fmt_b(pass));
    rep.kv_push("raw_growth_slope", fmt_f(growth_fit.slope));
    for (label, tau, _) in &datasets {
        let _ = (label, tau);
    }
    let xs: Vec<f64> = xns.clone();
    rep.series.push(PlotSeries {
        name: "raw sup".into(),
        xs,
        ys: raw_sups,
        log_x: true,
        x_label: "x_n".into(),
        y_label: "sup |combined tangential|".into(),
    });
    Ok(rep)
}

/// Sup of the first combined tangential component over the declared
/// evaluation grid at a fixed height.
fn sup_combined_on_grid(field: &BoundaryField, xn: f64, cfg: &KernelConfig) -> f64 {
    let m_sup = cfg.support_radius;
    let nx = 9usize;
    let nt = 9usize;
    let pts: Vec<(f64, f64)> = (0..nx)
        .flat_map(|ix| {
            let x1 = -2.0 * m_sup + 4.0 * m_sup * ix as f64 / (nx - 1) as f64;
            (0..nt).map(move |it| {
                let t = field.horizon * (it as f64 + 1.0) / nt as f64;
                (x1, t)
            })
        })
        .collect();
    let sups: Vec<f64> = pts
        .par_iter()
        .map(|&(x1, t)| {
            let data = |y: &[f64], s: f64| field.eval(1, y, s);
            let f = SpaceTimeDensity {
                eval: &data,
                support_radius: field.support_radius,
                sup_norm: field.sup_norm,
                space_breaks: &field.space_breaks,
                time_breaks: &field.time_breaks,
            };
            let x = HalfSpacePoint::unchecked(vec![x1], xn);
            combined_tangential_operator(&f, &x, t, cfg)
                .map(|v| v[0].abs())
                .unwrap_or(0.0)
        })
        .collect();
    sups.into_iter().fold(0.0, f64::max)
}
