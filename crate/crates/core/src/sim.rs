//! Fixed-step RK4 simulation of sampled-data (π_ε) closed loops, open-loop
//! runs of the vehicle, the one-period order study and decay reporting.

use alloc::vec::Vec;

use crate::approximation::{field_g1, field_g2, x_to_z, ApproxParams, StateZ};
use crate::controller::{check_c1, coeffs, ControlGains, FrozenControl};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::linalg::{norm, Vec5};
use crate::vehicle::{det_f, det_f0_closed_form, velocity, ControlInput, LengthParams, StateX};

/// Fraction of `det F(0)` below which an original-system run is flagged.
pub const CONDITIONING_THRESHOLD: f64 = 1e-6;

/// Minimum number of sample instants for a decay fit.
pub const MIN_DECAY_SAMPLES: usize = 10;

/// Substeps per period in the order study, per unit of the highest harmonic.
pub const ORDER_STUDY_STEPS_PER_HARMONIC: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorConfig {
    /// Classic RK4 steps per sampling interval. Open-loop runs treat the
    /// whole duration as one interval.
    pub substeps_per_period: usize,
    /// Record every n-th substep. Sample instants are always recorded.
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn new(substeps_per_period: usize) -> Self {
        IntegratorConfig {
            substeps_per_period,
            record_stride: 1,
        }
    }

    pub fn for_gains(g: &ControlGains) -> Self {
        Self::new(g.default_substeps())
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps_per_period == 0 {
            return Err(Error::InvalidArgument(
                "substeps_per_period must be at least 1",
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Frame {
    X,
    Z,
}

impl Frame {
    pub fn tag(&self) -> &'static str {
        match self {
            Frame::X => "x",
            Frame::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RunNote {
    /// Closed loop on the original vehicle: no convergence guarantee.
    Exploratory,
    /// `det F(x) / det F(0)` dropped below [`CONDITIONING_THRESHOLD`].
    IllConditioned { time: f64, det_ratio: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frame: Frame,
    pub times: Vec<f64>,
    pub states: Vec<Vec5>,
    /// Control applied from each node onwards.
    pub controls: Vec<ControlInput>,
    /// Node indices of the sample instants `jε`.
    pub sample_indices: Vec<usize>,
    /// Privileged-coordinate trace of an x-frame run, node for node.
    pub z_trace: Option<Vec<Vec5>>,
    pub notes: Vec<RunNote>,
}

impl Trajectory {
    fn with_frame(frame: Frame) -> Self {
        Trajectory {
            frame,
            times: Vec::new(),
            states: Vec::new(),
            controls: Vec::new(),
            sample_indices: Vec::new(),
            z_trace: None,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, s: Vec5, u: ControlInput, sample: bool) {
        if sample {
            self.sample_indices.push(self.times.len());
        }
        self.times.push(t);
        self.states.push(s);
        self.controls.push(u);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_sample(&self, node: usize) -> bool {
        self.sample_indices.binary_search(&node).is_ok()
    }

    /// States in privileged coordinates (the z-trace for x-frame runs).
    pub fn z_states(&self) -> &[Vec5] {
        match &self.z_trace {
            Some(z) => z,
            None => &self.states,
        }
    }

    pub fn sampled_z(&self) -> Vec<Vec5> {
        let z = self.z_states();
        self.sample_indices.iter().map(|&i| z[i]).collect()
    }

    pub fn last_state(&self) -> Option<&Vec5> {
        self.states.last()
    }
}

fn axpy(y: &Vec5, h: f64, k: &Vec5) -> Vec5 {
    core::array::from_fn(|i| y[i] + h * k[i])
}

/// One classic RK4 step of `ẏ = f(t, y)`.
pub fn rk4_step<F: Fn(f64, &Vec5) -> Vec5>(f: &F, t: f64, y: &Vec5, h: f64) -> Vec5 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    core::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn nilpotent_rhs(a: &ApproxParams, u: ControlInput, z: &Vec5) -> Vec5 {
    let g1 = field_g1(a, z);
    let g2 = field_g2(a, z);
    core::array::from_fn(|i| u.u1 * g1[i] + u.u2 * g2[i])
}

fn is_finite(v: &Vec5) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// State after one sampling interval of the nilpotent closed loop from `z0`.
pub fn nilpotent_period_map(
    a: &ApproxParams,
    g: &ControlGains,
    z0: &StateZ,
    substeps: usize,
) -> Result<StateZ> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1"));
    }
    let law = FrozenControl::new(&coeffs(a, g.gamma, z0), g);
    let rhs = |t: f64, z: &Vec5| nilpotent_rhs(a, law.at(t), z);
    let h = g.epsilon / substeps as f64;
    let mut z = z0.0;
    for i in 0..substeps {
        let next = rk4_step(&rhs, i as f64 * h, &z, h);
        if !is_finite(&next) {
            return Err(Error::BlowUp {
                node: i + 1,
                last_good_time: i as f64 * h,
            });
        }
        z = next;
    }
    Ok(StateZ(z))
}

/// π_ε-solution of the nilpotent model: coefficients are frozen at `z(jε)`
/// for the whole interval `[jε, (j+1)ε)`.
pub fn simulate_nilpotent_closed_loop(
    a: &ApproxParams,
    g: &ControlGains,
    z0: &StateZ,
    periods: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    g.validate()?;
    check_c1(g).map_err(Error::Resonance)?;
    cfg.validate()?;
    if periods == 0 {
        return Err(Error::InvalidArgument("periods must be at least 1"));
    }
    let n = cfg.substeps_per_period;
    let h = g.epsilon / n as f64;
    let mut traj = Trajectory::with_frame(Frame::Z);
    let mut z = z0.0;
    let mut node = 0usize;
    for j in 0..periods {
        let t0 = j as f64 * g.epsilon;
        let law = FrozenControl::new(&coeffs(a, g.gamma, &StateZ(z)), g);
        let rhs = |t: f64, z: &Vec5| nilpotent_rhs(a, law.at(t), z);
        traj.push(t0, z, law.at(0.0), true);
        for i in 0..n {
            let next = rk4_step(&rhs, i as f64 * h, &z, h);
            node += 1;
            if !is_finite(&next) {
                return Err(Error::BlowUp {
                    node,
                    last_good_time: t0 + i as f64 * h,
                });
            }
            z = next;
            if i + 1 < n && (i + 1) % cfg.record_stride == 0 {
                traj.push(
                    t0 + (i + 1) as f64 * h,
                    z,
                    law.at((i + 1) as f64 * h),
                    false,
                );
            }
        }
    }
    let t_end = periods as f64 * g.epsilon;
    let last = FrozenControl::new(&coeffs(a, g.gamma, &StateZ(z)), g);
    traj.push(t_end, z, last.at(0.0), true);
    Ok(traj)
}

/// Open-loop run of the vehicle under a time-dependent input over
/// `[0, duration]` with `cfg.substeps_per_period` steps in total.
pub fn simulate_original_open_loop(
    p: &LengthParams,
    u: &dyn Fn(f64) -> ControlInput,
    x0: &StateX,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidArgument("duration must be positive"));
    }
    let n = cfg.substeps_per_period;
    let h = duration / n as f64;
    let rhs = |t: f64, x: &Vec5| velocity(p, &StateX(*x), u(t));
    let mut traj = Trajectory::with_frame(Frame::X);
    let mut x = x0.0;
    traj.push(0.0, x, u(0.0), true);
    for i in 0..n {
        let next = rk4_step(&rhs, i as f64 * h, &x, h);
        if !is_finite(&next) {
            return Err(Error::BlowUp {
                node: i + 1,
                last_good_time: i as f64 * h,
            });
        }
        x = next;
        let t = if i + 1 == n {
            duration
        } else {
            (i + 1) as f64 * h
        };
        if i + 1 == n || (i + 1) % cfg.record_stride == 0 {
            traj.push(t, x, u(t), i + 1 == n);
        }
    }
    Ok(traj)
}

/// Sampled-data feedback applied to the original vehicle: at each `jε` the
/// state is mapped to privileged coordinates and the coefficients are frozen
/// from that image. Exploratory, with no convergence guarantee.
pub fn simulate_original_closed_loop(
    p: &LengthParams,
    g: &ControlGains,
    x0: &StateX,
    periods: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    g.validate()?;
    check_c1(g).map_err(Error::Resonance)?;
    cfg.validate()?;
    if periods == 0 {
        return Err(Error::InvalidArgument("periods must be at least 1"));
    }
    let a = ApproxParams::from_lengths(p);
    let det0 = det_f0_closed_form(p);
    let n = cfg.substeps_per_period;
    let h = g.epsilon / n as f64;
    let mut traj = Trajectory::with_frame(Frame::X);
    traj.notes.push(RunNote::Exploratory);
    let mut zs = Vec::new();
    let mut x = x0.0;
    let mut node = 0usize;
    let mut flagged = false;

    let mut check_conditioning = |t: f64, x: &Vec5, notes: &mut Vec<RunNote>| {
        let ratio = det_f(p, &StateX(*x)) / det0;
        if !flagged && (ratio.abs() < CONDITIONING_THRESHOLD || ratio.is_nan()) {
            flagged = true;
            notes.push(RunNote::IllConditioned {
                time: t,
                det_ratio: ratio,
            });
        }
    };

    for j in 0..periods {
        let t0 = j as f64 * g.epsilon;
        let zj = x_to_z(p, &StateX(x));
        check_conditioning(t0, &x, &mut traj.notes);
        let law = FrozenControl::new(&coeffs(&a, g.gamma, &zj), g);
        let rhs = |t: f64, x: &Vec5| velocity(p, &StateX(*x), law.at(t));
        traj.push(t0, x, law.at(0.0), true);
        zs.push(zj.0);
        for i in 0..n {
            let next = rk4_step(&rhs, i as f64 * h, &x, h);
            node += 1;
            if !is_finite(&next) {
                return Err(Error::BlowUp {
                    node,
                    last_good_time: t0 + i as f64 * h,
                });
            }
            x = next;
            if i + 1 < n && (i + 1) % cfg.record_stride == 0 {
                traj.push(
                    t0 + (i + 1) as f64 * h,
                    x,
                    law.at((i + 1) as f64 * h),
                    false,
                );
                zs.push(x_to_z(p, &StateX(x)).0);
            }
        }
    }
    let t_end = periods as f64 * g.epsilon;
    let z_end = x_to_z(p, &StateX(x));
    check_conditioning(t_end, &x, &mut traj.notes);
    let last = FrozenControl::new(&coeffs(&a, g.gamma, &z_end), g);
    traj.push(t_end, x, last.at(0.0), true);
    zs.push(z_end.0);
    traj.z_trace = Some(zs);
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderStudy {
    /// `(ε, ‖z(ε) − (1−γε)z⁰‖)` pairs.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log e` against `log ε`; `None` when some error
    /// is exactly zero (trivially exact).
    pub slope: Option<f64>,
}

/// Minimum number of ε values in an order study.
pub const MIN_ORDER_POINTS: usize = 3;

/// Compares the one-period map with `(1−γε)z⁰` over decreasing `ε`.
pub fn chen_fliess_order_study(
    a: &ApproxParams,
    gamma: f64,
    k: [u32; 3],
    z0: &StateZ,
    eps_list: &[f64],
) -> Result<OrderStudy> {
    if eps_list.len() < MIN_ORDER_POINTS {
        return Err(Error::InsufficientSamples {
            have: eps_list.len(),
            need: MIN_ORDER_POINTS,
        });
    }
    if eps_list
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(core::cmp::Ordering::Less))
    {
        return Err(Error::InvalidArgument(
            "epsilon list must be strictly decreasing",
        ));
    }
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let g = ControlGains::new(gamma, eps, k[0], k[1], k[2])?;
        check_c1(&g).map_err(Error::Resonance)?;
        let substeps = ORDER_STUDY_STEPS_PER_HARMONIC * g.max_harmonic() as usize;
        let z1 = nilpotent_period_map(a, &g, z0, substeps)?;
        let target = z0.0.map(|v| (1.0 - gamma * eps) * v);
        let err = norm(&core::array::from_fn(|i| z1.0[i] - target[i]));
        points.push((eps, err));
    }
    let slope = if points.iter().all(|&(_, e)| e > 0.0) {
        let (lx, ly): (Vec<f64>, Vec<f64>) = points
            .iter()
            .map(|&(eps, e)| (libm::log(eps), libm::log(e)))
            .unzip();
        line_fit(&lx, &ly).map(|f| f.slope)
    } else {
        None
    };
    Ok(OrderStudy { points, slope })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayReport {
    pub sample_times: Vec<f64>,
    pub sampled_norms: Vec<f64>,
    /// Exponential rate `γ̄` of `‖z(jε)‖ ≈ C·e^{−γ̄ jε}` after the peak.
    /// `+∞` for an identically zero trajectory.
    pub fitted_rate: f64,
    pub fit_quality: f64,
    /// `max ‖z(t)‖ / ‖z(0)‖` over all recorded nodes.
    pub overshoot: f64,
    pub peak_sample: usize,
    /// Set when the rate could not be fitted (all-zero or too few nonzero
    /// post-peak samples).
    pub degenerate: bool,
}

/// Post-peak exponential fit of the sampled norms.
pub fn decay_report(traj: &Trajectory) -> Result<DecayReport> {
    let have = traj.sample_indices.len();
    if have < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientSamples {
            have,
            need: MIN_DECAY_SAMPLES,
        });
    }
    let z = traj.z_states();
    let sample_times: Vec<f64> = traj.sample_indices.iter().map(|&i| traj.times[i]).collect();
    let sampled_norms: Vec<f64> = traj.sample_indices.iter().map(|&i| norm(&z[i])).collect();
    Ok(fit_decay(
        sample_times,
        sampled_norms,
        z.iter().map(norm).fold(0.0, f64::max),
    ))
}

/// [`decay_report`] on a bare norm sequence sampled every `epsilon`.
pub fn decay_report_from_norms(norms: &[f64], epsilon: f64) -> Result<DecayReport> {
    if norms.len() < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: norms.len(),
            need: MIN_DECAY_SAMPLES,
        });
    }
    let times = (0..norms.len()).map(|j| j as f64 * epsilon).collect();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    Ok(fit_decay(times, norms.to_vec(), peak))
}

fn fit_decay(sample_times: Vec<f64>, sampled_norms: Vec<f64>, max_norm: f64) -> DecayReport {
    let peak_sample =
        sampled_norms.iter().enumerate().fold(
            0,
            |best, (i, v)| if *v > sampled_norms[best] { i } else { best },
        );
    let n0 = sampled_norms[0];
    let overshoot = if n0 > 0.0 { max_norm / n0 } else { 1.0 };
    let (xs, ys): (Vec<f64>, Vec<f64>) = sample_times[peak_sample..]
        .iter()
        .zip(&sampled_norms[peak_sample..])
        .filter(|(_, n)| **n > 0.0)
        .map(|(t, n)| (*t, libm::log(*n)))
        .unzip();
    let (fitted_rate, fit_quality, degenerate) = if sampled_norms.iter().all(|n| *n == 0.0) {
        (f64::INFINITY, 0.0, true)
    } else {
        match line_fit(&xs, &ys) {
            Some(f) => (-f.slope, f.r_squared, false),
            None => (0.0, 0.0, true),
        }
    };
    DecayReport {
        sample_times,
        sampled_norms,
        fitted_rate,
        fit_quality,
        overshoot,
        peak_sample,
        degenerate,
    }
}

/// Whether every sampled norm after the first stays at or below `‖z(0)‖`.
pub fn within_initial_envelope(sampled_norms: &[f64]) -> bool {
    match sampled_norms.split_first() {
        Some((first, rest)) => rest.iter().all(|n| n <= first),
        None => true,
    }
}

/// Largest `ε` among `eps_list` for which the nilpotent closed loop stays
/// inside its initial-norm envelope over `horizon` seconds. This is an
/// empirical stand-in for the existence threshold of the convergence
/// theorem, not a computed bound.
pub fn largest_envelope_epsilon(
    a: &ApproxParams,
    g: &ControlGains,
    z0: &StateZ,
    eps_list: &[f64],
    horizon: f64,
) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &eps in eps_list {
        let ge = g.with_epsilon(eps);
        let periods = libm::ceil(horizon / eps).max(1.0) as usize;
        let cfg = IntegratorConfig {
            record_stride: ge.default_substeps(),
            ..IntegratorConfig::for_gains(&ge)
        };
        let norms: Vec<f64> = match simulate_nilpotent_closed_loop(a, &ge, z0, periods, &cfg) {
            Ok(t) => t.sampled_z().iter().map(norm).collect(),
            Err(Error::BlowUp { .. }) => continue,
            Err(e) => return Err(e),
        };
        if within_initial_envelope(&norms) && best.is_none_or(|b| eps > b) {
            best = Some(eps);
        }
    }
    Ok(best)
}
