//! Energy records and the audits run on them: the energy differential
//! inequality, the Gronwall sup bound, the dissipation integral bound, the
//! speed and trilinear bounds, plus the uniqueness, resolution and
//! low-speed studies that compare whole trajectories.
//!
//! Every audit constant is a function of `(alpha, c)` and the records
//! alone, so audits recomputed from a saved CSV agree with the in-memory ones.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::ops::{ConvectionMode, ModelParams};
use crate::timestepper::{
    random_solenoidal, RunOptions, SimConfig, SimState, Solver, STREAM_PERTURBATION,
};

/// Relative slack on the Gronwall and dissipation bounds.
pub const BOUND_SLACK: f64 = 1e-6;

/// Diagnostics of one recorded state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// Step that led to this state, 0 for the initial record.
    pub dt: f64,
    pub l2_sq: f64,
    pub h1_semi_sq: f64,
    pub h2_sq: f64,
    /// `∫[(w·∇)u]·u` with the advecting velocity of the run's mode.
    pub b_uuu: f64,
    pub f_l2_sq: f64,
    pub f_vdual_sq: f64,
    /// `(f, u)`
    pub work: f64,
    /// `max_x |w(x)|`
    pub max_speed: f64,
}

impl EnergyRecord {
    pub const FIELDS: [&'static str; 10] = [
        "t",
        "dt",
        "l2_sq",
        "h1_semi_sq",
        "h2_sq",
        "b_uuu",
        "f_l2_sq",
        "f_vdual_sq",
        "work",
        "max_speed",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.dt,
            self.l2_sq,
            self.h1_semi_sq,
            self.h2_sq,
            self.b_uuu,
            self.f_l2_sq,
            self.f_vdual_sq,
            self.work,
            self.max_speed,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        EnergyRecord {
            t: v[0],
            dt: v[1],
            l2_sq: v[2],
            h1_semi_sq: v[3],
            h2_sq: v[4],
            b_uuu: v[5],
            f_l2_sq: v[6],
            f_vdual_sq: v[7],
            work: v[8],
            max_speed: v[9],
        }
    }

    /// Checks finiteness and signs; in relativistic mode also `max_speed < c`.
    pub fn validate(&self, mode: ConvectionMode, c: f64) -> Result<()> {
        if self.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::AuditInput(format!(
                "non-finite record at t={}",
                self.t
            )));
        }
        if self.l2_sq < 0.0
            || self.h1_semi_sq < 0.0
            || self.h2_sq < 0.0
            || self.f_l2_sq < 0.0
            || self.f_vdual_sq < 0.0
        {
            return Err(Error::AuditInput(format!(
                "negative squared norm at t={}",
                self.t
            )));
        }
        if mode == ConvectionMode::QuasiRelativistic && self.max_speed >= c {
            return Err(Error::AuditInput(format!(
                "max speed {} reaches c={c} at t={}",
                self.max_speed, self.t
            )));
        }
        Ok(())
    }

    /// `|b_uuu| / (max|u|·‖∇u‖·‖u‖)`; Hölder bounds it by 1 and skew-symmetry
    /// makes it vanish for a divergence-free advecting field.
    pub fn skew_defect(&self) -> f64 {
        let scale = self.max_speed * (self.h1_semi_sq * self.l2_sq).sqrt();
        if scale == 0.0 {
            0.0
        } else {
            self.b_uuu.abs() / scale
        }
    }
}

/// Trapezoid rule on a nonuniform grid.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

fn integrate(records: &[EnergyRecord], f: impl Fn(&EnergyRecord) -> f64) -> f64 {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let y: Vec<f64> = records.iter().map(f).collect();
    trapezoid(&t, &y)
}

/// Constants of the energy estimates for given `(alpha, c)` and records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditConstants {
    pub alpha: f64,
    pub c: f64,
    /// Trilinear bound constant `√3·c`.
    pub c_b: f64,
    /// `α/(2(1 + c_b))`
    pub eps: f64,
    /// `2·max(1/(4ε), ε + c_b/(4ε))`
    pub k_energy: f64,
    /// Length of the recorded interval.
    pub t_total: f64,
    /// `∫‖f‖²_{V'} dt`
    pub f_vdual_integral: f64,
    /// `e^{KT}(K+1)(‖u(0)‖² + ∫‖f‖²_{V'})`
    pub c1_t: f64,
    /// `(2C₁ + KT·C₁ + K∫‖f‖²_{V'})/α`
    pub c2_t: f64,
}

impl AuditConstants {
    pub fn new(alpha: f64, c: f64, records: &[EnergyRecord]) -> Result<Self> {
        ModelParams::new(alpha, c)?;
        let first = records
            .first()
            .ok_or_else(|| Error::AuditInput("no records".into()))?;
        let c_b = 3f64.sqrt() * c;
        let eps = alpha / (2.0 * (1.0 + c_b));
        let k = 2.0 * (1.0 / (4.0 * eps)).max(eps + c_b / (4.0 * eps));
        let t_total = records.last().unwrap().t - first.t;
        let fv = integrate(records, |r| r.f_vdual_sq);
        // log form keeps C₁ = 0 for zero data even when e^{KT} overflows
        let c1 = (k * t_total + (k + 1.0).ln() + (first.l2_sq + fv).ln()).exp();
        let c2 = (2.0 * c1 + k * t_total * c1 + k * fv) / alpha;
        Ok(AuditConstants {
            alpha,
            c,
            c_b,
            eps,
            k_energy: k,
            t_total,
            f_vdual_integral: fv,
            c1_t: c1,
            c2_t: c2,
        })
    }
}

/// One row of an audit report.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditResult {
    pub audit: String,
    pub pass: bool,
    /// Distance to failure, non-negative when the audit passes. The energy
    /// audit reports its raw minimum interval margin, which may dip to `bound`
    /// (minus the discretization tolerance) and still pass.
    pub margin: f64,
    pub bound: f64,
    pub observed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalMargin {
    pub t0: f64,
    pub t1: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyAudit {
    pub margins: Vec<IntervalMargin>,
    pub min_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl EnergyAudit {
    pub fn result(&self) -> AuditResult {
        AuditResult {
            audit: "energy_inequality".into(),
            pass: self.pass,
            margin: self.min_margin,
            bound: -self.tolerance,
            observed: self.min_margin,
        }
    }

    /// Sum of the negative parts of all interval margins.
    pub fn negative_excursion(&self) -> f64 {
        self.margins.iter().map(|m| (-m.margin).max(0.0)).sum()
    }

    /// Largest negative excursion of one interval.
    pub fn worst_excursion(&self) -> f64 {
        (-self.min_margin).max(0.0)
    }
}

/// Interval margins `K(‖f‖²_{V'} + ‖u‖²) − [Δ‖u‖²/Δt + α‖∇u‖²]`, endpoint averages.
pub fn audit_energy_inequality(
    records: &[EnergyRecord],
    k: &AuditConstants,
) -> Result<EnergyAudit> {
    if records.len() < 2 {
        return Err(Error::AuditInput(format!(
            "energy audit needs at least 2 records, got {}",
            records.len()
        )));
    }
    let mut margins = Vec::with_capacity(records.len() - 1);
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::AuditInput(format!(
                "records not increasing in time at t={}",
                b.t
            )));
        }
        let avg = |f: fn(&EnergyRecord) -> f64| 0.5 * (f(a) + f(b));
        let rhs = k.k_energy * (avg(|r| r.f_vdual_sq) + avg(|r| r.l2_sq));
        let lhs = (b.l2_sq - a.l2_sq) / dt + k.alpha * avg(|r| r.h1_semi_sq);
        margins.push(IntervalMargin {
            t0: a.t,
            t1: b.t,
            margin: rhs - lhs,
        });
    }
    let min_margin = margins
        .iter()
        .map(|m| m.margin)
        .fold(f64::INFINITY, f64::min);
    let max_l2 = records.iter().map(|r| r.l2_sq).fold(0.0, f64::max);
    let tolerance = 1e-6 * (1.0 + max_l2);
    Ok(EnergyAudit {
        margins,
        min_margin,
        tolerance,
        pass: min_margin >= -tolerance,
    })
}

/// `sup ‖u‖² ≤ C₁(T)`.
pub fn audit_gronwall_sup(records: &[EnergyRecord], k: &AuditConstants) -> AuditResult {
    let observed = records.iter().map(|r| r.l2_sq).fold(0.0, f64::max);
    let bound = k.c1_t;
    AuditResult {
        audit: "gronwall_sup".into(),
        pass: observed <= bound * (1.0 + BOUND_SLACK),
        margin: bound * (1.0 + BOUND_SLACK) - observed,
        bound,
        observed,
    }
}

/// `∫(‖u‖² + ‖∇u‖²) dt ≤ T·C₁(T) + C₂(T)`.
pub fn audit_dissipation_integral(records: &[EnergyRecord], k: &AuditConstants) -> AuditResult {
    let observed = integrate(records, |r| r.l2_sq + r.h1_semi_sq);
    let bound = k.t_total * k.c1_t + k.c2_t;
    AuditResult {
        audit: "dissipation_integral".into(),
        pass: observed <= bound * (1.0 + BOUND_SLACK),
        margin: bound * (1.0 + BOUND_SLACK) - observed,
        bound,
        observed,
    }
}

/// `max_speed < c` at every record (relativistic runs).
pub fn audit_speed_bound(records: &[EnergyRecord], c: f64) -> AuditResult {
    let observed = records.iter().map(|r| r.max_speed).fold(0.0, f64::max);
    AuditResult {
        audit: "speed_bound".into(),
        pass: observed < c,
        margin: c - observed,
        bound: c,
        observed,
    }
}

/// `|b_uuu| ≤ √3·c·‖∇u‖·‖u‖` at every record (relativistic runs).
pub fn audit_trilinear_bound(records: &[EnergyRecord], c: f64) -> AuditResult {
    let c_b = 3f64.sqrt() * c;
    // worst record by ratio; margin in absolute units of that record
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for r in records {
        let bound = c_b * (r.h1_semi_sq * r.l2_sq).sqrt();
        let gap = r.b_uuu.abs() - bound * (1.0 + 1e-12);
        if gap > worst.0 {
            worst = (gap, bound, r.b_uuu.abs());
        }
    }
    AuditResult {
        audit: "trilinear_bound".into(),
        pass: worst.0 <= 0.0,
        margin: -worst.0,
        bound: worst.1,
        observed: worst.2,
    }
}

/// Quantities tied to the H² estimate; only finiteness is asserted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityMonitor {
    /// `∫‖u‖²_{H²} dt`
    pub h2_integral: f64,
    /// `sup ‖u‖²_V = sup (‖u‖² + ‖∇u‖²)`
    pub sup_v_sq: f64,
    /// `‖u₀‖²_V`
    pub initial_v_sq: f64,
    /// `∫‖f‖² dt`
    pub f_l2_integral: f64,
}

impl RegularityMonitor {
    pub fn new(records: &[EnergyRecord]) -> Self {
        RegularityMonitor {
            h2_integral: integrate(records, |r| r.h2_sq),
            sup_v_sq: records
                .iter()
                .map(|r| r.l2_sq + r.h1_semi_sq)
                .fold(0.0, f64::max),
            initial_v_sq: records.first().map_or(0.0, |r| r.l2_sq + r.h1_semi_sq),
            f_l2_integral: integrate(records, |r| r.f_l2_sq),
        }
    }

    pub fn result(&self) -> AuditResult {
        let finite = [
            self.h2_integral,
            self.sup_v_sq,
            self.initial_v_sq,
            self.f_l2_integral,
        ]
        .iter()
        .all(|v| v.is_finite());
        AuditResult {
            audit: "h2_integral_finite".into(),
            pass: finite,
            margin: if finite { 0.0 } else { f64::NEG_INFINITY },
            bound: f64::INFINITY,
            observed: self.h2_integral,
        }
    }
}

/// All record-level audits for one run.
pub fn run_audits(
    records: &[EnergyRecord],
    alpha: f64,
    c: f64,
    mode: ConvectionMode,
) -> Result<Vec<AuditResult>> {
    // the speed bound is reported by its own audit rather than rejected here
    for r in records {
        r.validate(ConvectionMode::Classical, c)?;
    }
    let k = AuditConstants::new(alpha, c, records)?;
    let mut out = vec![
        audit_energy_inequality(records, &k)?.result(),
        audit_gronwall_sup(records, &k),
        audit_dissipation_integral(records, &k),
    ];
    if mode == ConvectionMode::QuasiRelativistic {
        out.push(audit_speed_bound(records, c));
        out.push(audit_trilinear_bound(records, c));
    }
    out.push(RegularityMonitor::new(records).result());
    Ok(out)
}

/// Per-interval residual of `½Δ‖u‖² + ∫(α‖∇u‖² + b_uuu − (f,u)) dt`, which
/// vanishes for the exact dynamics. The integral uses the cubic through the
/// four records nearest the interval, so the residual measures the time
/// stepper's own error (`O(dt⁴)` per step for smooth data).
pub fn energy_identity_residuals(records: &[EnergyRecord], alpha: f64) -> Result<Vec<f64>> {
    if records.len() < 4 {
        return Err(Error::AuditInput(
            "energy identity residual needs at least 4 records".into(),
        ));
    }
    let g: Vec<f64> = records
        .iter()
        .map(|r| alpha * r.h1_semi_sq + r.b_uuu - r.work)
        .collect();
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let last = records.len() - 4;
    Ok((0..records.len() - 1)
        .map(|i| {
            let s = i.saturating_sub(1).min(last);
            let integral = lagrange_integral(&t[s..s + 4], &g[s..s + 4], t[i], t[i + 1]);
            0.5 * (records[i + 1].l2_sq - records[i].l2_sq) + integral
        })
        .collect())
}

/// `∫_a^b p(t) dt` for the interpolating polynomial through `(t, y)`, by
/// three-point Gauss–Legendre (exact up to degree 5).
fn lagrange_integral(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let eval = |x: f64| {
        (0..t.len())
            .map(|j| {
                let l: f64 = (0..t.len())
                    .filter(|&m| m != j)
                    .map(|m| (x - t[m]) / (t[j] - t[m]))
                    .product();
                l * y[j]
            })
            .sum::<f64>()
    };
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let node = (0.6f64).sqrt();
    half * (5.0 * eval(mid - half * node) + 8.0 * eval(mid) + 5.0 * eval(mid + half * node)) / 9.0
}

/// Young constant for the uniqueness estimate: with `ε(12/c)`-weighted
/// split `p = 4/3`, `q = 4` and `ε = α/2`,
/// `(12/c)·x·y^{1/2}·z^{3/2} ≤ (α/2)z² + C_ε·x⁴·y²`, `C_ε = 27(12/c)⁴/(32α³)`,
/// with `x = ‖∇u₁‖`, `y = ‖U‖`, `z = ‖∇U‖`.
pub fn uniqueness_young_constant(alpha: f64, c: f64) -> f64 {
    27.0 * (12.0 / c).powi(4) / (32.0 * alpha.powi(3))
}

/// `2(c_b²/(2α) + C_ε·sup‖∇u₁‖⁴)`.
pub fn uniqueness_rate(alpha: f64, c: f64, sup_h1_semi_sq: f64) -> f64 {
    let c_b = 3f64.sqrt() * c;
    2.0 * (c_b * c_b / (2.0 * alpha)
        + uniqueness_young_constant(alpha, c) * sup_h1_semi_sq * sup_h1_semi_sq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    pub delta: f64,
    pub c_eps: f64,
    pub k_unique: f64,
    pub times: Vec<f64>,
    /// `‖U(t)‖²` at each record
    pub diff_sq: Vec<f64>,
    /// `ln(e^{Kt}‖U(0)‖²(1+10⁻⁶)) − ln‖U(t)‖²` per record
    pub log_margins: Vec<f64>,
    pub sup_diff: f64,
    /// largest observed `‖U(t)‖²/‖U(0)‖²`
    pub max_growth: f64,
    pub pass: bool,
}

/// Runs the base configuration and a copy perturbed by `δ` times a unit
/// random solenoidal field in lockstep (same step sizes) and checks the
/// Gronwall envelope `‖U(t)‖² ≤ e^{K t}‖U(0)‖²`.
pub fn uniqueness_probe(config: &SimConfig, delta: f64) -> Result<UniquenessReport> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::param(
            "delta",
            format!("must be non-negative, got {delta}"),
        ));
    }
    if config.mode != ConvectionMode::QuasiRelativistic {
        return Err(Error::param(
            "mode",
            "uniqueness probe needs quasi_relativistic mode",
        ));
    }
    let mut base = Solver::<f64>::new(config)?;
    let mut pert = Solver::<f64>::new(config)?;
    let s1 = base.initial_state()?;
    let dir = random_solenoidal(base.lattice(), 1.0, 2.0, config.seed, STREAM_PERTURBATION)?;
    let mut u2 = s1.u.axpy(delta, &dir);
    u2.mark_projected();
    let mut s2 = SimState::new(u2, s1.t);
    let mut s1 = s1;

    let mut times = Vec::new();
    let mut diff_sq = Vec::new();
    let mut sup_h1 = 0f64;
    let mut observe = |a: &SimState<f64>, b: &SimState<f64>| {
        times.push(a.t);
        diff_sq.push(a.u.sub(&b.u).l2_sq());
        sup_h1 = sup_h1.max(a.u.h1_semi_sq());
    };
    observe(&s1, &s2);
    while s1.t < config.t_end {
        let dt = base.cfl_dt(&s1.u);
        s1 = base.step_fixed(&s1, dt)?;
        s2 = pert.step_fixed(&s2, dt)?;
        if s1.step_index % config.record_every == 0 || s1.t >= config.t_end {
            observe(&s1, &s2);
        }
    }

    let (alpha, c) = (config.params.alpha, config.params.c);
    let k = uniqueness_rate(alpha, c, sup_h1);
    let u0 = diff_sq[0];
    let t0 = times[0];
    let log_margins: Vec<f64> = times
        .iter()
        .zip(&diff_sq)
        .map(|(&t, &d)| {
            if d == 0.0 {
                f64::INFINITY
            } else {
                k * (t - t0) + u0.ln() + (1.0 + BOUND_SLACK).ln() - d.ln()
            }
        })
        .collect();
    let pass = log_margins.iter().all(|&m| m >= 0.0);
    let sup_diff = diff_sq.iter().fold(0f64, |m, &d| m.max(d)).sqrt();
    let max_growth = if u0 > 0.0 {
        diff_sq.iter().fold(0f64, |m, &d| m.max(d / u0))
    } else {
        0.0
    };
    Ok(UniquenessReport {
        delta,
        c_eps: uniqueness_young_constant(alpha, c),
        k_unique: k,
        times,
        diff_sq,
        log_margins,
        sup_diff,
        max_growth,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// `error(previous n)/error(n)`, absent for the first row
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub reference_n: usize,
    pub reference_l2: f64,
    pub rows: Vec<ConvergenceRow>,
    /// errors at or below this count as converged to rounding
    pub floor: f64,
    pub pass: bool,
}

/// Runs the reference at `2·max(n_list)` with CFL steps and replays its
/// step sequence at each `n`; the error is `‖u_n − u_ref‖` after restricting
/// the reference to the coarse lattice. Each refinement must either land on
/// the rounding floor or cut the error by at least 10×.
/// Independent runs are spread over up to `jobs` threads.
pub fn convergence_study(
    base: &SimConfig,
    n_list: &[usize],
    jobs: usize,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::param("n_list", "needs at least one resolution"));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let n_ref = 2 * ns[ns.len() - 1];
    let mut cfg = base.clone();
    cfg.n = n_ref;
    cfg.record_every = u64::MAX;
    let reference = crate::timestepper::simulate(&cfg, &RunOptions::default())?;
    reference.ensure_complete()?;
    let ref_l2 = reference.state.u.l2_sq().sqrt();
    let opts = RunOptions {
        budget: None,
        dt_schedule: Some(reference.dts.clone()),
    };
    let finals: Vec<Result<SpectralField<f64>>> = map_jobs(&ns, jobs, |&n| {
        let mut cfg = base.clone();
        cfg.n = n;
        cfg.record_every = u64::MAX;
        let out = crate::timestepper::simulate(&cfg, &opts)?;
        out.ensure_complete()?;
        Ok(out.state.u)
    });
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (&n, u) in ns.iter().zip(finals) {
        let u = u?;
        let error = u
            .sub(&reference.state.u.resample(u.lattice()))
            .l2_sq()
            .sqrt();
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(ConvergenceRow { n, error, ratio });
    }
    let floor = 1e-12 * ref_l2.max(f64::MIN_POSITIVE);
    let pass = rows.windows(2).all(|w| {
        w[1].error <= floor || (w[1].error < w[0].error && w[0].error / w[1].error >= 10.0)
    });
    Ok(ConvergenceTable {
        reference_n: n_ref,
        reference_l2: ref_l2,
        rows,
        floor,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// `(c, D(c))` sorted by `c`
    pub points: Vec<(f64, f64)>,
    pub classical_l2: f64,
    pub slope: f64,
    pub pass: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Classical trajectory differenced against relativistic runs at each `c`
/// (all on the classical run's step sequence); the gap should fall like `c⁻²`.
pub fn low_speed_consistency(
    base: &SimConfig,
    c_list: &[f64],
    jobs: usize,
) -> Result<ConsistencyReport> {
    let mut cs = c_list.to_vec();
    if cs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::param("c_list", "values must be positive and finite"));
    }
    cs.sort_by(f64::total_cmp);
    if cs.len() < 3 {
        return Err(Error::param(
            "c_list",
            format!("needs at least 3 values, got {}", cs.len()),
        ));
    }
    if cs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("c_list", "duplicate values"));
    }
    if cs[cs.len() - 1] / cs[0] < 100.0 {
        return Err(Error::param(
            "c_list",
            "values must span at least two decades",
        ));
    }
    let mut cfg = base.clone();
    cfg.mode = ConvectionMode::Classical;
    cfg.record_every = u64::MAX;
    let solver = Solver::<f64>::new(&cfg)?;
    let u0_max = solver.max_speed(&solver.initial_state()?.u);
    if cs[0] < 5.0 * u0_max {
        return Err(Error::param(
            "c_list",
            format!(
                "smallest c = {} is not well above max|u0| = {u0_max}",
                cs[0]
            ),
        ));
    }
    let classical = crate::timestepper::simulate(&cfg, &RunOptions::default())?;
    classical.ensure_complete()?;
    let opts = RunOptions {
        budget: None,
        dt_schedule: Some(classical.dts.clone()),
    };
    let finals: Vec<Result<SpectralField<f64>>> = map_jobs(&cs, jobs, |&c| {
        let mut q = cfg.clone();
        q.mode = ConvectionMode::QuasiRelativistic;
        q.params.c = c;
        let out = crate::timestepper::simulate(&q, &opts)?;
        out.ensure_complete()?;
        Ok(out.state.u)
    });
    let mut points = Vec::with_capacity(cs.len());
    for (&c, u) in cs.iter().zip(finals) {
        points.push((c, u?.sub(&classical.state.u).l2_sq().sqrt()));
    }
    let slope = log_log_slope(&points);
    Ok(ConsistencyReport {
        points,
        classical_l2: classical.state.u.l2_sq().sqrt(),
        slope,
        pass: (-2.3..=-1.7).contains(&slope),
    })
}

/// Applies `f` to every item, at most `jobs` at a time; results keep input order.
fn map_jobs<I: Sync, R: Send>(items: &[I], jobs: usize, f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(jobs) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|it| s.spawn(|| f(it))).collect();
            out.extend(
                handles
                    .into_iter()
                    .map(|h| h.join().expect("study worker panicked")),
            );
        });
    }
    out
}

/// `‖u − w‖` in `L²`.
pub fn l2_distance(u: &SpectralField<f64>, w: &SpectralField<f64>) -> f64 {
    u.sub(w).l2_sq().sqrt()
}
