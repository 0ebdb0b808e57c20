//! Time integration: integrating-factor SSP-RK3 with exact per-mode
//! diffusion, CFL-controlled steps, initial conditions and forcing.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diagnostics::EnergyRecord;
use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::io::read_snapshot;
use crate::lattice::Lattice;
use crate::ops::{advecting, ConvectionMode, ModelParams, Pseudospectral};
use crate::scalar::{norm3, Real};

/// RNG stream tags, so one seed can drive independent draws.
const STREAM_INITIAL: u64 = 1;
const STREAM_FORCING: u64 = 2;
pub(crate) const STREAM_PERTURBATION: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    TaylorGreen {
        amplitude: f64,
    },
    RandomSolenoidal {
        energy: f64,
        peak_wavenumber: f64,
        seed: u64,
    },
    FromSnapshot {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    Zero,
    /// Time-independent field.
    Steady(SpectralField<f64>),
    /// Time-independent field read from a snapshot file when the solver is built.
    SteadyFile {
        path: PathBuf,
    },
    /// Fresh random solenoidal field on every interval `[j·refresh, (j+1)·refresh)`,
    /// each with `‖f‖² = energy_rate`.
    RandomSolenoidalInTime {
        energy_rate: f64,
        peak_wavenumber: f64,
        seed: u64,
        refresh_interval: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub params: ModelParams<f64>,
    pub mode: ConvectionMode,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub initial: InitialSpec,
    pub forcing: ForcingSpec,
    pub record_every: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Defaults for quick runs: Taylor–Green of unit amplitude, no forcing.
    pub fn new(n: usize, alpha: f64, c: f64, mode: ConvectionMode, t_end: f64) -> Self {
        SimConfig {
            n,
            params: ModelParams { alpha, c },
            mode,
            t_end,
            cfl_safety: 0.5,
            dt_max: 0.01,
            initial: InitialSpec::TaylorGreen { amplitude: 1.0 },
            forcing: ForcingSpec::Zero,
            record_every: 1,
            seed: 0,
        }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice()?;
        ModelParams::new(self.params.alpha, self.params.c)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::param(
                "t_end",
                format!("must be finite and non-negative, got {}", self.t_end),
            ));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::param(
                "cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return Err(Error::param(
                "dt_max",
                format!("must be positive, got {}", self.dt_max),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        match &self.initial {
            InitialSpec::TaylorGreen { amplitude } if !amplitude.is_finite() => {
                return Err(Error::param("initial.amplitude", "must be finite"));
            }
            InitialSpec::RandomSolenoidal {
                energy,
                peak_wavenumber,
                ..
            } => {
                check_spectrum(
                    "initial.energy",
                    *energy,
                    "initial.peak_wavenumber",
                    *peak_wavenumber,
                )?;
            }
            _ => {}
        }
        if let ForcingSpec::RandomSolenoidalInTime {
            energy_rate,
            peak_wavenumber,
            refresh_interval,
            ..
        } = &self.forcing
        {
            check_spectrum(
                "forcing.energy_rate",
                *energy_rate,
                "forcing.peak_wavenumber",
                *peak_wavenumber,
            )?;
            if !(refresh_interval.is_finite() && *refresh_interval > 0.0) {
                return Err(Error::param("forcing.refresh_interval", "must be positive"));
            }
        }
        Ok(())
    }
}

fn check_spectrum(ename: &'static str, energy: f64, kname: &'static str, kp: f64) -> Result<()> {
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::param(
            ename,
            format!("must be non-negative, got {energy}"),
        ));
    }
    if !(kp.is_finite() && kp >= 1.0) {
        return Err(Error::param(kname, format!("must be at least 1, got {kp}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub t: f64,
    pub u: SpectralField<T>,
    pub step_index: u64,
    pub dt_last: f64,
}

impl<T: Real> SimState<T> {
    pub fn new(u: SpectralField<T>, t: f64) -> Self {
        SimState {
            t,
            u,
            step_index: 0,
            dt_last: 0.0,
        }
    }
}

/// Taylor–Green vortex `a·(sin x₁ cos x₂ cos x₃, −cos x₁ sin x₂ cos x₃, 0)`.
pub fn taylor_green(lattice: Lattice, amplitude: f64) -> Result<SpectralField<f64>> {
    let u = PhysicalField::<f64>::from_fn_vector(lattice, |x, y, z| {
        [
            amplitude * x.sin() * y.cos() * z.cos(),
            -amplitude * x.cos() * y.sin() * z.cos(),
            0.0,
        ]
    })?
    .to_spectral()?;
    Ok(u.leray_project().dealias())
}

/// Gaussian Hermitian modes with `kp-1 ≤ |k| ≤ kp+1` inside the dealiasing
/// cutoff, projected and scaled to `‖u‖² = energy`.
pub fn random_solenoidal(
    lattice: Lattice,
    energy: f64,
    peak_wavenumber: f64,
    seed: u64,
    stream: u64,
) -> Result<SpectralField<f64>> {
    check_spectrum("energy", energy, "peak_wavenumber", peak_wavenumber)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let (lo, hi) = (
        (peak_wavenumber - 1.0).powi(2),
        (peak_wavenumber + 1.0).powi(2),
    );
    let mut u = SpectralField::<f64>::zeros(lattice);
    let comps = u.components_mut();
    let mut any = false;
    for idx in 1..lattice.len() {
        let neg = lattice.neg_index(idx);
        let k2 = lattice.k_squared(idx) as f64;
        if neg < idx || !lattice.is_retained(idx) || k2 < lo || k2 > hi {
            continue;
        }
        any = true;
        for c in comps.iter_mut() {
            let z = Complex::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            c[idx] = z;
            c[neg] = z.conj();
        }
    }
    if !any {
        return Err(Error::param(
            "peak_wavenumber",
            format!(
                "no retained modes with |k| in [{}, {}] at n={}",
                peak_wavenumber - 1.0,
                peak_wavenumber + 1.0,
                lattice.n()
            ),
        ));
    }
    u.project_in_place();
    let e = u.l2_sq();
    if e == 0.0 || energy == 0.0 {
        return Ok(SpectralField::zeros(lattice));
    }
    Ok(u.scale((energy / e).sqrt()))
}

/// Builds the initial field; snapshots already satisfying the invariants are
/// taken as they are so restarts reproduce the original run bit for bit.
/// Returns the field and the start time.
pub fn realize_initial(spec: &InitialSpec, lattice: Lattice) -> Result<(SpectralField<f64>, f64)> {
    match spec {
        InitialSpec::TaylorGreen { amplitude } => Ok((taylor_green(lattice, *amplitude)?, 0.0)),
        InitialSpec::RandomSolenoidal {
            energy,
            peak_wavenumber,
            seed,
        } => Ok((
            random_solenoidal(lattice, *energy, *peak_wavenumber, *seed, STREAM_INITIAL)?,
            0.0,
        )),
        InitialSpec::FromSnapshot { path } => {
            let snap = read_snapshot(path)?;
            if snap.field.lattice() != lattice {
                return Err(Error::LatticeMismatch {
                    expected: lattice.n(),
                    found: snap.field.lattice().n(),
                });
            }
            let mut u = snap.field;
            if !(u.is_dealiased() && u.mark_projected()) {
                u = u.leray_project().dealias();
            }
            Ok((u, snap.meta.time))
        }
    }
}

enum Forcing<T> {
    Zero(SpectralField<T>),
    Steady(SpectralField<T>),
    Random {
        energy_rate: f64,
        peak_wavenumber: f64,
        seed: u64,
        refresh_interval: f64,
        epoch: Option<u64>,
        field: SpectralField<T>,
    },
}

fn prepare_forcing<T: Real>(f: &SpectralField<f64>, lattice: Lattice) -> Result<SpectralField<T>> {
    if f.lattice() != lattice {
        return Err(Error::LatticeMismatch {
            expected: lattice.n(),
            found: f.lattice().n(),
        });
    }
    let mut f = f.dealias();
    for c in f.components_mut() {
        c[0] = Complex::new(0.0, 0.0);
    }
    f.project_in_place();
    Ok(f.cast())
}

/// Exponential factors for one `dt`, indexed by the integer `|k|²`.
struct Factors<T> {
    dt: f64,
    full: Vec<T>,
    half: Vec<T>,
    half_inv: Vec<T>,
}

/// Controls for [`Solver::run`].
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Wall-clock limit; the run stops early with [`RunStatus::BudgetExceeded`].
    pub budget: Option<Duration>,
    /// Replays these step sizes instead of the CFL rule, ignoring `t_end`.
    pub dt_schedule: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Complete,
    BudgetExceeded,
    BlowUp { t: f64, step: u64, max_speed: f64 },
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub state: SimState<T>,
    pub records: Vec<EnergyRecord>,
    /// Step sizes actually taken, in order.
    pub dts: Vec<f64>,
    pub status: RunStatus,
}

impl<T> RunOutput<T> {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    /// Turns a blow-up or budget stop into an error.
    pub fn ensure_complete(&self) -> Result<()> {
        match self.status {
            RunStatus::Complete => Ok(()),
            RunStatus::BudgetExceeded => Err(Error::AuditInput(format!(
                "wall-clock budget exceeded at t={} (step {})",
                self.state.t, self.state.step_index
            ))),
            RunStatus::BlowUp { t, step, max_speed } => Err(Error::BlowUp { t, step, max_speed }),
        }
    }
}

pub struct Solver<T: Real> {
    config: SimConfig,
    lattice: Lattice,
    params: ModelParams<T>,
    engine: Pseudospectral<T>,
    forcing: Forcing<T>,
    factors: Option<Factors<T>>,
    max_k2: usize,
    /// `(index, |k|²)` of every retained mode
    modes: Vec<(usize, usize)>,
}

impl<T: Real> Solver<T> {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let lattice = config.lattice()?;
        let forcing = match &config.forcing {
            ForcingSpec::Zero => Forcing::Zero(SpectralField::zeros(lattice)),
            ForcingSpec::Steady(f) => Forcing::Steady(prepare_forcing(f, lattice)?),
            ForcingSpec::SteadyFile { path } => {
                Forcing::Steady(prepare_forcing(&read_snapshot(path)?.field, lattice)?)
            }
            ForcingSpec::RandomSolenoidalInTime {
                energy_rate,
                peak_wavenumber,
                seed,
                refresh_interval,
            } => Forcing::Random {
                energy_rate: *energy_rate,
                peak_wavenumber: *peak_wavenumber,
                seed: *seed,
                refresh_interval: *refresh_interval,
                epoch: None,
                field: SpectralField::zeros(lattice),
            },
        };
        let cutoff = lattice.dealias_cutoff();
        Ok(Solver {
            config: config.clone(),
            lattice,
            params: config.params.cast(),
            engine: Pseudospectral::new(lattice),
            forcing,
            factors: None,
            max_k2: 3 * cutoff * cutoff,
            modes: (0..lattice.len())
                .filter(|&i| lattice.is_retained(i))
                .map(|i| (i, lattice.k_squared(i) as usize))
                .collect(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn params(&self) -> ModelParams<T> {
        self.params
    }

    pub fn engine(&mut self) -> &mut Pseudospectral<T> {
        &mut self.engine
    }

    /// Initial state realized from the configuration.
    pub fn initial_state(&self) -> Result<SimState<T>> {
        let (u, t) = realize_initial(&self.config.initial, self.lattice)?;
        let mut u: SpectralField<T> = u.cast();
        u.mark_projected();
        Ok(SimState::new(u, t))
    }

    /// Forcing `f(t)`, projected and dealiased.
    pub fn forcing_at(&mut self, t: f64) -> Result<&SpectralField<T>> {
        let lattice = self.lattice;
        match &mut self.forcing {
            Forcing::Zero(f) | Forcing::Steady(f) => Ok(f),
            Forcing::Random {
                energy_rate,
                peak_wavenumber,
                seed,
                refresh_interval,
                epoch,
                field,
            } => {
                let e = (t / *refresh_interval).floor().max(0.0) as u64;
                if *epoch != Some(e) {
                    let stream = (STREAM_FORCING << 56) | (e & ((1 << 56) - 1));
                    let f =
                        random_solenoidal(lattice, *energy_rate, *peak_wavenumber, *seed, stream)?;
                    *field = f.cast();
                    field.mark_projected();
                    *epoch = Some(e);
                }
                Ok(field)
            }
        }
    }

    /// `max_x |w(x)|` over the lattice grid for the configured mode.
    pub fn max_speed(&self, u: &SpectralField<T>) -> T {
        let phys = u.to_physical();
        let c = self.params.c;
        let mut max = T::zero();
        for p in 0..self.lattice.len() {
            let w = advecting(
                [
                    phys.component(0)[p],
                    phys.component(1)[p],
                    phys.component(2)[p],
                ],
                c,
                self.config.mode,
            );
            max = max.max(norm3(w[0], w[1], w[2]));
        }
        max
    }

    /// `min(dt_max, safety·Δx/max|w|)`.
    pub fn cfl_dt(&self, u: &SpectralField<T>) -> f64 {
        let w = self.max_speed(u).as_f64();
        let cfg = &self.config;
        if w == 0.0 {
            cfg.dt_max
        } else {
            cfg.dt_max.min(cfg.cfl_safety * self.lattice.spacing() / w)
        }
    }

    fn factors(&mut self, dt: f64) -> &Factors<T> {
        if self.factors.as_ref().map(|f| f.dt) != Some(dt) {
            let a = self.config.params.alpha;
            let gen = |s: f64| {
                (0..=self.max_k2)
                    .map(|k2| T::lit((s * a * k2 as f64 * dt).exp()))
                    .collect()
            };
            self.factors = Some(Factors {
                dt,
                full: gen(-1.0),
                half: gen(-0.5),
                half_inv: gen(0.5),
            });
        }
        self.factors.as_ref().unwrap()
    }

    /// `-P[(w·∇)u] + f(t)`.
    fn rhs(&mut self, u: &SpectralField<T>, t: f64) -> Result<SpectralField<T>> {
        let n = self.engine.convection(u, &self.params, self.config.mode)?;
        let f = self.forcing_at(t)?;
        Ok(f.sub(&n))
    }

    /// One step of the configured CFL size.
    pub fn step(&mut self, state: &SimState<T>) -> Result<SimState<T>> {
        let dt = self.cfl_dt(&state.u);
        self.step_fixed(state, dt)
    }

    /// One integrating-factor SSP-RK3 step of size `dt`.
    pub fn step_fixed(&mut self, state: &SimState<T>, dt: f64) -> Result<SimState<T>> {
        let modes = std::mem::take(&mut self.modes);
        let out = self.ssp_rk3(state, dt, &modes);
        self.modes = modes;
        let u3 = out?;
        if !u3.is_finite() {
            return Err(Error::BlowUp {
                t: state.t,
                step: state.step_index,
                max_speed: f64::INFINITY,
            });
        }
        Ok(SimState {
            t: state.t + dt,
            u: u3,
            step_index: state.step_index + 1,
            dt_last: dt,
        })
    }

    fn ssp_rk3(
        &mut self,
        state: &SimState<T>,
        dt: f64,
        modes: &[(usize, usize)],
    ) -> Result<SpectralField<T>> {
        let blow_up = |this: &Self, u: &SpectralField<T>| {
            let speed = if u.is_finite() {
                this.max_speed(u).as_f64()
            } else {
                f64::INFINITY
            };
            Error::BlowUp {
                t: state.t,
                step: state.step_index,
                max_speed: speed,
            }
        };
        let t = state.t;
        let u0 = &state.u;
        let h = T::lit(dt);
        let quarter = T::lit(0.25);
        let third = T::one() / T::lit(3.0);
        let two_thirds = T::lit(2.0) * third;
        let lat = self.lattice;

        let stage = |e: Result<SpectralField<T>>, this: &Self| -> Result<SpectralField<T>> {
            match e {
                Err(Error::Overflow { .. }) => Err(blow_up(this, u0)),
                other => other,
            }
        };

        let n0 = stage(self.rhs(u0, t), self)?;
        let fac = self.factors(dt);
        let mut u1 = SpectralField::zeros(lat);
        combine(&mut u1, modes, |i, k| {
            (u0.components()[i.0][i.1] + n0.components()[i.0][i.1] * h) * fac.full[k]
        });

        let n1 = stage(self.rhs(&u1, t + dt), self)?;
        let fac = self.factors(dt);
        let mut u2 = SpectralField::zeros(lat);
        combine(&mut u2, modes, |i, k| {
            (u0.components()[i.0][i.1] + n0.components()[i.0][i.1] * (h * quarter)) * fac.half[k]
                + n1.components()[i.0][i.1] * (fac.half_inv[k] * h * quarter)
        });

        let n2 = stage(self.rhs(&u2, t + 0.5 * dt), self)?;
        let fac = self.factors(dt);
        let mut u3 = SpectralField::zeros(lat);
        combine(&mut u3, modes, |i, k| {
            u0.components()[i.0][i.1] * (fac.full[k] * third)
                + (u2.components()[i.0][i.1] + n2.components()[i.0][i.1] * h)
                    * (fac.half[k] * two_thirds)
        });
        u3.project_in_place();
        Ok(u3)
    }

    /// Energy record of a state under the configured mode and forcing.
    pub fn record(&mut self, state: &SimState<T>) -> Result<EnergyRecord> {
        let u = &state.u;
        let b = self
            .engine
            .trilinear(u, u, u, self.params.c, self.config.mode)?;
        let max_speed = self.max_speed(u).as_f64();
        let f = self.forcing_at(state.t)?;
        Ok(EnergyRecord {
            t: state.t,
            dt: state.dt_last,
            l2_sq: u.l2_sq().as_f64(),
            h1_semi_sq: u.h1_semi_sq().as_f64(),
            h2_sq: u.h2_sq().as_f64(),
            b_uuu: b.as_f64(),
            f_l2_sq: f.l2_sq().as_f64(),
            f_vdual_sq: f.v_dual_sq().as_f64(),
            work: f.inner(u).as_f64(),
            max_speed,
        })
    }

    /// Steps until `t ≥ t_end` (or through `dt_schedule`), recording at step
    /// 0, every `record_every` steps and at the last step.
    pub fn run(&mut self, initial: SimState<T>, opts: &RunOptions) -> Result<RunOutput<T>> {
        let start = Instant::now();
        let every = self.config.record_every;
        let mut state = initial;
        let mut records = vec![self.record(&state)?];
        let mut dts = Vec::new();
        let mut status = RunStatus::Complete;
        loop {
            let dt = match &opts.dt_schedule {
                Some(s) => match s.get(dts.len()) {
                    Some(&dt) => dt,
                    None => break,
                },
                None if state.t < self.config.t_end => self.cfl_dt(&state.u),
                None => break,
            };
            if opts.budget.is_some_and(|b| start.elapsed() > b) {
                status = RunStatus::BudgetExceeded;
                break;
            }
            state = match self.step_fixed(&state, dt) {
                Ok(s) => s,
                Err(Error::BlowUp { t, step, max_speed }) => {
                    status = RunStatus::BlowUp { t, step, max_speed };
                    break;
                }
                Err(e) => return Err(e),
            };
            dts.push(dt);
            let last = match &opts.dt_schedule {
                Some(s) => dts.len() == s.len(),
                None => state.t >= self.config.t_end,
            };
            if last || state.step_index.is_multiple_of(every) {
                records.push(self.record(&state)?);
            }
        }
        if status != RunStatus::Complete && records.last().map(|r| r.t) != Some(state.t) {
            records.push(self.record(&state)?);
        }
        Ok(RunOutput {
            state,
            records,
            dts,
            status,
        })
    }
}

/// Fills the listed modes of `out` from `f((component, index), |k|²)`.
fn combine<T: Real, F>(out: &mut SpectralField<T>, modes: &[(usize, usize)], f: F)
where
    F: Fn((usize, usize), usize) -> Complex<T>,
{
    let comps = out.components_mut();
    for (c, comp) in comps.iter_mut().enumerate() {
        for &(idx, k2) in modes {
            comp[idx] = f((c, idx), k2);
        }
    }
}

/// Runs a configuration in f64 from its initial condition.
pub fn simulate(config: &SimConfig, opts: &RunOptions) -> Result<RunOutput<f64>> {
    let mut solver = Solver::<f64>::new(config)?;
    let init = solver.initial_state()?;
    solver.run(init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn shear(n: usize) -> SimConfig {
        SimConfig::new(n, 0.3, 2.0, ConvectionMode::Classical, 0.1)
    }

    #[test]
    fn cfl_examples() {
        let mut cfg = SimConfig::new(32, 0.1, 1.0, ConvectionMode::Classical, 1.0);
        cfg.dt_max = 1.0;
        let s = Solver::<f64>::new(&cfg).unwrap();
        assert_eq!(s.cfl_dt(&SpectralField::zeros(s.lattice())), 1.0);
        // max|u| = 2 at a grid point
        let u = taylor_green(s.lattice(), 2.0).unwrap();
        let want = 0.5 * (TAU / 32.0) / 2.0;
        assert!((s.cfl_dt(&u) - want).abs() < 1e-12);
        assert!((want - 0.04909).abs() < 1e-5);
    }

    #[test]
    fn cfl_floor_in_relativistic_mode() {
        let mut cfg = SimConfig::new(16, 0.1, 0.5, ConvectionMode::QuasiRelativistic, 1.0);
        cfg.dt_max = 10.0;
        let s = Solver::<f64>::new(&cfg).unwrap();
        for a in [0.1, 10.0, 1e6] {
            let u = taylor_green(s.lattice(), a).unwrap();
            assert!(s.cfl_dt(&u) >= 0.5 * (TAU / 16.0) / 0.5);
        }
    }

    #[test]
    fn shear_mode_decays_exactly() {
        let cfg = shear(16);
        let mut s = Solver::<f64>::new(&cfg).unwrap();
        let u0 =
            PhysicalField::<f64>::from_fn_vector(s.lattice(), |_, y, _| [0.8 * y.sin(), 0.0, 0.0])
                .unwrap()
                .to_spectral()
                .unwrap();
        let st = SimState::new(u0.leray_project(), 0.0);
        let dt = 0.05;
        let next = s.step_fixed(&st, dt).unwrap();
        let ratio = next.u.l2_sq().sqrt() / st.u.l2_sq().sqrt();
        assert!((ratio - (-0.3 * dt).exp()).abs() < 1e-10);
    }

    #[test]
    fn zero_state_is_fixed() {
        let mut cfg = SimConfig::new(8, 0.1, 1.0, ConvectionMode::QuasiRelativistic, 0.05);
        cfg.initial = InitialSpec::TaylorGreen { amplitude: 0.0 };
        let out = simulate(&cfg, &RunOptions::default()).unwrap();
        assert!(out.is_complete());
        assert_eq!(out.state.u.max_abs(), 0.0);
        assert!(out.state.t >= 0.05);
    }

    #[test]
    fn zero_end_time_returns_initial() {
        let cfg = SimConfig::new(8, 0.1, 1.0, ConvectionMode::Classical, 0.0);
        let out = simulate(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.state.step_index, 0);
        assert_eq!(
            out.state.u,
            taylor_green(Lattice::new(8).unwrap(), 1.0).unwrap()
        );
    }

    #[test]
    fn taylor_green_realization() {
        let u = taylor_green(Lattice::new(16).unwrap(), 1.0).unwrap();
        assert!(u.divergence_defect() < 1e-14);
        assert!(u.leray_project().sub(&u).max_abs() < 1e-12);
        // ‖u‖² = (2π)³/4
        assert!((u.l2_sq() - TAU.powi(3) / 4.0).abs() < 1e-10);
    }

    #[test]
    fn random_field_contract() {
        let l = Lattice::new(16).unwrap();
        let a = random_solenoidal(l, 1.0, 3.0, 42, STREAM_INITIAL).unwrap();
        let b = random_solenoidal(l, 1.0, 3.0, 42, STREAM_INITIAL).unwrap();
        assert_eq!(a, b);
        assert!((a.l2_sq() - 1.0).abs() < 1e-10);
        assert!(a.divergence_defect() < 1e-12);
        assert!(a.hermitian_defect() < 1e-15);
        assert!(a.is_dealiased());
        assert_ne!(
            a,
            random_solenoidal(l, 1.0, 3.0, 43, STREAM_INITIAL).unwrap()
        );
        assert!(random_solenoidal(l, 1.0, 20.0, 1, STREAM_INITIAL).is_err());
    }

    #[test]
    fn random_forcing_is_piecewise_constant() {
        let mut cfg = SimConfig::new(8, 0.1, 1.0, ConvectionMode::Classical, 1.0);
        cfg.forcing = ForcingSpec::RandomSolenoidalInTime {
            energy_rate: 2.0,
            peak_wavenumber: 1.5,
            seed: 9,
            refresh_interval: 0.25,
        };
        let mut s = Solver::<f64>::new(&cfg).unwrap();
        let a = s.forcing_at(0.1).unwrap().clone();
        let b = s.forcing_at(0.2).unwrap().clone();
        let c = s.forcing_at(0.3).unwrap().clone();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((c.l2_sq() - 2.0).abs() < 1e-10);
        assert_eq!(s.forcing_at(0.05).unwrap(), &a);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SimConfig::new(8, 0.1, 1.0, ConvectionMode::Classical, 1.0);
        cfg.cfl_safety = 1.5;
        assert!(Solver::<f64>::new(&cfg).is_err());
        cfg.cfl_safety = 0.5;
        cfg.params.alpha = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let mut cfg = SimConfig::new(8, 0.1, 1.0, ConvectionMode::Classical, 1.0);
        cfg.initial = InitialSpec::TaylorGreen { amplitude: 1e300 };
        let mut s = Solver::<f64>::new(&cfg).unwrap();
        let st = s.initial_state().unwrap();
        let err = s.step_fixed(&st, 1.0).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 0, .. }), "{err}");
    }
}
