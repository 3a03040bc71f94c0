//! Mackey-Glass delay differential equation integrated with fourth-order
//! Runge-Kutta.
//!
//! dx/dt = a·x(t−τ) / (1 + x(t−τ)¹⁰) − b·x(t)
//!
//! The delayed value is read from the accumulated solution history by linear
//! interpolation; history before t = 0 is the constant initial value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MackeyGlassConfig {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub dt: f64,
    pub n: usize,
    pub x0: f64,
    pub washout: usize,
}

impl Default for MackeyGlassConfig {
    fn default() -> Self {
        MackeyGlassConfig {
            a: 0.2,
            b: 0.1,
            tau: 17.0,
            dt: 1.0,
            n: 1000,
            x0: 1.2,
            washout: 100,
        }
    }
}

impl MackeyGlassConfig {
    fn validate(&self) -> Result<()> {
        for (v, label) in [(self.a, "a"), (self.b, "b"), (self.tau, "tau"), (self.x0, "x0")] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "mackey-glass: {} must be finite",
                    label
                )));
            }
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidInput("mackey-glass: tau must be >= 0".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput("mackey-glass: dt must be > 0".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("mackey-glass: n must be > 0".into()));
        }
        Ok(())
    }
}

struct History {
    values: Vec<f64>,
    dt: f64,
    x0: f64,
}

impl History {
    /// x at time t, linear interpolation on the step grid. Times at or
    /// before zero return the constant initial function.
    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.x0;
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let last = self.values.len() - 1;
        if i >= last {
            return self.values[last];
        }
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

fn rhs(a: f64, b: f64, x: f64, x_delayed: f64) -> f64 {
    a * x_delayed / (1.0 + x_delayed.powi(10)) - b * x
}

/// Generate `n` samples of the Mackey-Glass series at spacing `dt`, after
/// discarding `washout` leading samples. The first retained sample is
/// x(washout·dt).
pub fn gen_mackey_glass(cfg: &MackeyGlassConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let total = cfg.washout + cfg.n;

    // RK4 stages reach t + dt, so the internal step must not exceed the
    // delay or the delayed lookup would run ahead of known history.
    let substeps = if cfg.tau > 0.0 && cfg.dt > cfg.tau {
        (cfg.dt / cfg.tau).ceil() as usize
    } else {
        1
    };
    let h = cfg.dt / substeps as f64;

    let mut hist = History {
        values: Vec::with_capacity((total - 1) * substeps + 1),
        dt: h,
        x0: cfg.x0,
    };
    hist.values.push(cfg.x0);

    let mut x = cfg.x0;
    let mut t = 0.0;
    for _ in 0..(total - 1) * substeps {
        let x_new = if cfg.tau == 0.0 {
            // Plain ODE: the "delayed" argument is the stage value itself.
            let k1 = rhs(cfg.a, cfg.b, x, x);
            let x2 = x + 0.5 * h * k1;
            let k2 = rhs(cfg.a, cfg.b, x2, x2);
            let x3 = x + 0.5 * h * k2;
            let k3 = rhs(cfg.a, cfg.b, x3, x3);
            let x4 = x + h * k3;
            let k4 = rhs(cfg.a, cfg.b, x4, x4);
            x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        } else {
            let d1 = hist.at(t - cfg.tau);
            let d2 = hist.at(t + 0.5 * h - cfg.tau);
            let d4 = hist.at(t + h - cfg.tau);
            let k1 = rhs(cfg.a, cfg.b, x, d1);
            let k2 = rhs(cfg.a, cfg.b, x + 0.5 * h * k1, d2);
            let k3 = rhs(cfg.a, cfg.b, x + 0.5 * h * k2, d2);
            let k4 = rhs(cfg.a, cfg.b, x + h * k3, d4);
            x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        if !x_new.is_finite() || x_new.abs() > 1e6 {
            return Err(Error::NumericBlowup(format!(
                "mackey-glass diverged near t = {:.3}",
                t + h
            )));
        }
        x = x_new;
        t += h;
        hist.values.push(x);
    }

    Ok((0..cfg.n)
        .map(|i| hist.values[(cfg.washout + i) * substeps])
        .collect())
}
