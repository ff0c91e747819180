//! Simulated two-node RC thermal plant (air/sensor node `T_m`, envelope node
//! `T_e`, room at `T_r`), input profiles and measurement noise.
//!
//! ```text
//! C_m T_m' = Q_h + (T_e − T_m)/R_ms
//! C_s T_e' = (T_m − T_e)/R_ms + (T_r − T_e)/R_sr
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{io_form_with_disturbance, ContinuousLtiSystem, IoCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcParams {
    pub cm: f64,
    pub cs: f64,
    pub rms: f64,
    pub rsr: f64,
    /// room temperature, °C
    pub tr: f64,
}

impl RcParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("cm", self.cm), ("cs", self.cs), ("rms", self.rms), ("rsr", self.rsr)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        if !self.tr.is_finite() {
            return Err(Error::InvalidArgument(format!("room temperature must be finite, got {}", self.tr)));
        }
        Ok(())
    }

    /// Input-output coefficients with the disturbance at the room temperature.
    pub fn coefficients(&self) -> Result<IoCoefficients> {
        io_form_with_disturbance(&rc_system(self)?, self.tr)
    }
}

/// State `[T_m, T_e]`, input `Q_h`, output `T_m`, disturbance column for `T_r`.
pub fn rc_system(p: &RcParams) -> Result<ContinuousLtiSystem> {
    p.validate()?;
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[
            -1.0 / (p.cm * p.rms),
            1.0 / (p.cm * p.rms),
            1.0 / (p.cs * p.rms),
            -1.0 / (p.cs * p.rms) - 1.0 / (p.cs * p.rsr),
        ],
    );
    ContinuousLtiSystem::new(a, DVector::from_vec(vec![1.0 / p.cm, 0.0]), DVector::from_vec(vec![1.0, 0.0]))?
        .with_disturbance(DVector::from_vec(vec![0.0, 1.0 / (p.cs * p.rsr)]))
}

/// Inverse of the coefficient map for `n = 2`.
pub fn io_to_physical(c: &IoCoefficients) -> Result<RcParams> {
    if c.order() != 2 {
        return Err(Error::Unphysical(format!("RC plant has order 2, coefficients have order {}", c.order())));
    }
    let (a0, a1, b0, b1, d) = (c.a[0], c.a[1], c.b[0], c.b[1], c.d);
    if !(b1 > 0.0) {
        return Err(Error::Unphysical(format!("b1 > 0 violated (b1 = {b1})")));
    }
    let p = a1 - b0 / b1;
    if !(p > 0.0) {
        return Err(Error::Unphysical(format!("a1 − b0/b1 > 0 violated (a1 − b0/b1 = {p})")));
    }
    if !(a0 > 0.0) {
        return Err(Error::Unphysical(format!("a0 > 0 violated (a0 = {a0})")));
    }
    let r = a0 / p;
    let q = b0 / b1 - r;
    if !(q > 0.0) {
        return Err(Error::Unphysical(format!("b0/b1 − a0/(a1 − b0/b1) > 0 violated (value {q})")));
    }
    let cm = 1.0 / b1;
    let rms = 1.0 / (cm * p);
    let cs = 1.0 / (q * rms);
    let rsr = 1.0 / (cs * r);
    Ok(RcParams { cm, cs, rms, rsr, tr: d / a0 })
}

/// Input signal, sampled on the simulation grid and held between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InputProfile {
    /// `amplitude` for the first `duty · period` of every period, else `offset`
    Pulse {
        amplitude: f64,
        period: f64,
        #[serde(default = "half")]
        duty: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Maximal-length shift-register sequence switching between `0` and
    /// `amplitude` every `chip` seconds.
    Prbs {
        amplitude: f64,
        #[serde(default = "default_chip")]
        chip: f64,
        #[serde(default = "one")]
        seed: u64,
    },
    Sine {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        offset: f64,
    },
    Constant {
        value: f64,
    },
    /// Explicit samples, one per tick (external logs).
    Samples {
        values: Vec<f64>,
    },
}

fn half() -> f64 {
    0.5
}

fn default_chip() -> f64 {
    60.0
}

fn one() -> u64 {
    1
}

impl InputProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            InputProfile::Pulse { period, duty, .. } => {
                if !(*period > 0.0) {
                    return bad(format!("pulse period must be positive, got {period}"));
                }
                if !(0.0..=1.0).contains(duty) {
                    return bad(format!("pulse duty must be in [0, 1], got {duty}"));
                }
            }
            InputProfile::Prbs { chip, .. } if !(*chip > 0.0) => {
                return bad(format!("prbs chip must be positive, got {chip}"))
            }
            InputProfile::Sine { period, .. } if !(*period > 0.0) => {
                return bad(format!("sine period must be positive, got {period}"))
            }
            _ => {}
        }
        Ok(())
    }

    /// `count` samples at spacing `ts`, first at `t = 0`.
    pub fn samples(&self, ts: f64, count: usize) -> Vec<f64> {
        let t = |k: usize| k as f64 * ts;
        match self {
            InputProfile::Pulse { amplitude, period, duty, offset } => (0..count)
                .map(|k| {
                    // phase on a tolerance so grid times landing on an edge are stable
                    let phase = (t(k) / period).rem_euclid(1.0);
                    if phase < duty - 1e-9 {
                        *amplitude
                    } else {
                        *offset
                    }
                })
                .collect(),
            InputProfile::Prbs { amplitude, chip, seed } => {
                let mut lfsr = Lfsr::new(*seed);
                let mut bit = lfsr.next_bit();
                let mut chip_idx = 0u64;
                (0..count)
                    .map(|k| {
                        let idx = (t(k) / chip + 1e-9).floor() as u64;
                        while chip_idx < idx {
                            bit = lfsr.next_bit();
                            chip_idx += 1;
                        }
                        if bit {
                            *amplitude
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            InputProfile::Sine { amplitude, period, offset } => {
                (0..count).map(|k| offset + amplitude * (2.0 * std::f64::consts::PI * t(k) / period).sin()).collect()
            }
            InputProfile::Constant { value } => vec![*value; count],
            InputProfile::Samples { values } => (0..count).map(|k| values.get(k).copied().unwrap_or(0.0)).collect(),
        }
    }
}

/// 10-bit Fibonacci LFSR, taps 10 and 7 (period 1023).
#[derive(Debug, Clone)]
struct Lfsr {
    state: u16,
}

impl Lfsr {
    fn new(seed: u64) -> Self {
        let s = (seed % 1023) as u16 + 1;
        Self { state: s }
    }

    fn next_bit(&mut self) -> bool {
        let bit = ((self.state >> 9) ^ (self.state >> 6)) & 1;
        self.state = ((self.state << 1) | bit) & 0x3ff;
        bit == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub amplitude: f64,
    pub seed: u64,
}

/// Uniformly sampled record. `x[i][k]` is state `i` at sample `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// output before measurement noise
    pub y_clean: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub noise: Option<NoiseInfo>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// State vector at sample `k`, if states are recorded.
    pub fn state(&self, k: usize) -> Option<Vec<f64>> {
        if self.x.is_empty() {
            None
        } else {
            Some(self.x.iter().map(|s| s[k]).collect())
        }
    }
}

fn rk4_step(sys: &ContinuousLtiSystem, x: &DVector<f64>, forcing: &DVector<f64>, h: f64) -> DVector<f64> {
    let f = |x: &DVector<f64>| &sys.a * x + forcing;
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step RK4 over held input samples `u` (one per tick). `level` drives
/// the disturbance channel. Returns the states at every sample.
pub fn integrate(
    sys: &ContinuousLtiSystem,
    level: f64,
    u: &[f64],
    x0: &DVector<f64>,
    ts: f64,
    substeps: usize,
) -> Result<Vec<DVector<f64>>> {
    if !(ts > 0.0) || substeps == 0 {
        return Err(Error::InvalidArgument(format!("need ts > 0 and substeps ≥ 1 (ts={ts}, substeps={substeps})")));
    }
    if x0.len() != sys.order() {
        return Err(Error::DimensionMismatch(format!("x0 has {} entries, system order {}", x0.len(), sys.order())));
    }
    let e = sys.disturbance_gain.clone().unwrap_or_else(|| DVector::zeros(sys.order())) * level;
    let h = ts / substeps as f64;
    let mut out = Vec::with_capacity(u.len());
    let mut x = x0.clone();
    for k in 0..u.len() {
        if k > 0 {
            let forcing = &sys.b * u[k - 1] + &e;
            for _ in 0..substeps {
                x = rk4_step(sys, &x, &forcing, h);
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Simulates `duration` seconds (inclusive grid `0, Ts, …`).
pub fn simulate(
    sys: &ContinuousLtiSystem,
    level: f64,
    profile: &InputProfile,
    x0: &DVector<f64>,
    ts: f64,
    duration: f64,
    substeps: usize,
) -> Result<Trajectory> {
    profile.validate()?;
    if !(duration >= ts) {
        return Err(Error::InvalidArgument(format!("duration {duration} shorter than ts {ts}")));
    }
    let count = (duration / ts + 1e-9).floor() as usize + 1;
    let u = profile.samples(ts, count);
    let xs = integrate(sys, level, &u, x0, ts, substeps)?;
    let y: Vec<f64> = xs.iter().map(|x| sys.c.dot(x)).collect();
    let n = sys.order();
    Ok(Trajectory {
        ts,
        t: (0..count).map(|k| k as f64 * ts).collect(),
        u,
        y_clean: y.clone(),
        y,
        x: (0..n).map(|i| xs.iter().map(|x| x[i]).collect()).collect(),
        noise: None,
    })
}

/// Adds `uniform(−amplitude, amplitude)` to every output sample.
pub fn add_noise(traj: &Trajectory, amplitude: f64, seed: u64) -> Result<Trajectory> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise amplitude must be non-negative, got {amplitude}")));
    }
    let mut out = traj.clone();
    out.noise = Some(NoiseInfo { amplitude, seed });
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for y in out.y.iter_mut() {
        *y += rng.random_range(-amplitude..=amplitude);
    }
    Ok(out)
}
