use crate::error::{Error, Result};

/// The most recent `N + 1` samples of `(u, y)` at a fixed spacing.
#[derive(Debug, Clone)]
pub struct SignalWindow {
    ts: f64,
    cap: usize,
    u: Vec<f64>,
    y: Vec<f64>,
    head: usize,
    fill: usize,
    ticks: u64,
}

impl SignalWindow {
    /// Window spanning `n_intervals · ts` seconds (`n_intervals + 1` samples).
    pub fn new(ts: f64, n_intervals: usize) -> Result<Self> {
        if !(ts > 0.0) || n_intervals == 0 {
            return Err(Error::InvalidArgument(format!(
                "window needs ts > 0 and at least one interval (ts={ts}, N={n_intervals})"
            )));
        }
        let cap = n_intervals + 1;
        Ok(Self { ts, cap, u: vec![0.0; cap], y: vec![0.0; cap], head: 0, fill: 0, ticks: 0 })
    }

    /// Window of horizon `horizon` seconds; `horizon` must be a multiple of `ts`.
    pub fn with_horizon(ts: f64, horizon: f64) -> Result<Self> {
        Self::new(ts, intervals(horizon, ts)?)
    }

    pub fn push(&mut self, u: f64, y: f64) {
        self.u[self.head] = u;
        self.y[self.head] = y;
        self.head = (self.head + 1) % self.cap;
        self.fill = (self.fill + 1).min(self.cap);
        self.ticks += 1;
    }

    pub fn is_ready(&self) -> bool {
        self.fill == self.cap
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn horizon(&self) -> f64 {
        (self.cap - 1) as f64 * self.ts
    }

    /// Time of the newest sample, taking the first pushed sample as `t = 0`.
    pub fn time(&self) -> f64 {
        self.ticks.saturating_sub(1) as f64 * self.ts
    }

    fn ordered(&self, buf: &[f64]) -> Result<Vec<f64>> {
        if !self.is_ready() {
            return Err(Error::WindowNotReady { have: self.fill, need: self.cap });
        }
        let mut out = Vec::with_capacity(self.cap);
        out.extend_from_slice(&buf[self.head..]);
        out.extend_from_slice(&buf[..self.head]);
        Ok(out)
    }

    /// Input samples, oldest first.
    pub fn u(&self) -> Result<Vec<f64>> {
        self.ordered(&self.u)
    }

    /// Output samples, oldest first.
    pub fn y(&self) -> Result<Vec<f64>> {
        self.ordered(&self.y)
    }
}

/// `horizon / ts` as an integer, rejecting non-multiples.
pub fn intervals(horizon: f64, ts: f64) -> Result<usize> {
    if !(ts > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} and ts {ts} must be positive")));
    }
    let r = horizon / ts;
    let n = r.round();
    if (r - n).abs() > 1e-9 * r.max(1.0) || n < 1.0 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is not a multiple of ts {ts}")));
    }
    Ok(n as usize)
}
