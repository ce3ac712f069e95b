//! Second-order implicit-explicit time stepping for diagonal stiff parts.
//!
//! The state is a list of spectral coefficient arrays ("slots"). Each slot
//! has a diagonal linear rate per mode, treated by Crank–Nicolson; the
//! remaining right-hand side is treated by second-order Adams–Bashforth. The
//! first step, and any step after [`Cnab2::reset`], uses a Heun
//! predictor-corrector on the explicit part so that the scheme is
//! second-order from the start.

use num_complex::Complex64;

use crate::error::Result;

pub type Slots = Vec<Vec<Complex64>>;

#[derive(Clone, Debug, Default)]
pub struct Cnab2 {
    previous: Option<(f64, Slots)>,
}

fn cn_update(y: &[Vec<Complex64>], rates: &[Vec<f64>], dt: f64, explicit: impl Fn(usize, usize) -> Complex64) -> Slots {
    y.iter()
        .zip(rates)
        .enumerate()
        .map(|(s, (ys, rs))| {
            ys.iter()
                .zip(rs)
                .enumerate()
                .map(|(i, (&v, &l))| ((1.0 + 0.5 * dt * l) * v + dt * explicit(s, i)) / (1.0 - 0.5 * dt * l))
                .collect()
        })
        .collect()
}

impl Cnab2 {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the stored explicit term; the next step restarts with Heun.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn has_history(&self) -> bool {
        self.previous.is_some()
    }

    /// Advances `y` by `dt`. `rates[s][i]` is the implicit rate of mode `i`
    /// in slot `s`; `explicit` evaluates the rest of the right-hand side. A
    /// change of `dt` drops the history.
    pub fn step(
        &mut self,
        y: &mut Slots,
        rates: &[Vec<f64>],
        dt: f64,
        mut explicit: impl FnMut(&Slots) -> Result<Slots>,
    ) -> Result<()> {
        let n_now = explicit(y)?;
        let next = match self.previous.take() {
            Some((dt_prev, n_prev)) if dt_prev == dt => {
                cn_update(y, rates, dt, |s, i| 1.5 * n_now[s][i] - 0.5 * n_prev[s][i])
            }
            _ => {
                let predictor = cn_update(y, rates, dt, |s, i| n_now[s][i]);
                let n_pred = explicit(&predictor)?;
                cn_update(y, rates, dt, |s, i| 0.5 * (n_now[s][i] + n_pred[s][i]))
            }
        };
        *y = next;
        self.previous = Some((dt, n_now));
        Ok(())
    }
}
