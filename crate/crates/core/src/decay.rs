//! Least-squares decay fits of energy traces and the rates the theory
//! predicts for each damping class.

use serde::{Deserialize, Serialize};

use crate::damping::{DampingKind, DampingSpec, OriginClass};
use crate::energy::EnergyTrace;
use crate::error::{invalid, Result, WaveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `E ~ C exp(-rate t)`.
    Exponential,
    /// `E ~ C t^{-exponent}`.
    Algebraic,
    /// `E ~ C (ln t)^{-exponent}`.
    LogPower,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [DecayModel::Exponential, DecayModel::Algebraic, DecayModel::LogPower];

    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Algebraic => "algebraic",
            DecayModel::LogPower => "logpower",
        }
    }

    fn abscissa(self, t: f64) -> f64 {
        match self {
            DecayModel::Exponential => t,
            DecayModel::Algebraic => t.ln(),
            DecayModel::LogPower => t.ln().ln(),
        }
    }

    fn min_t(self) -> f64 {
        match self {
            DecayModel::Exponential => f64::NEG_INFINITY,
            DecayModel::Algebraic => 0.0,
            DecayModel::LogPower => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl FitWindow {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
            return invalid(format!("fit window [{t_lo}, {t_hi}] is empty"));
        }
        Ok(Self { t_lo, t_hi })
    }

    /// Split point used by the stability check: geometric mean when `t_lo > 0`.
    fn midpoint(&self) -> f64 {
        if self.t_lo > 0.0 {
            (self.t_lo * self.t_hi).sqrt()
        } else {
            0.5 * (self.t_lo + self.t_hi)
        }
    }
}

/// Energies below this multiple of `eps * E(0)` are treated as round-off.
pub const FLOOR_FACTOR: f64 = 1e3;

/// Last temporal decade of the trace, cut where the energy hits the
/// round-off floor.
pub fn default_window(times: &[f64], energies: &[f64]) -> Result<FitWindow> {
    check_samples(times, energies)?;
    let floor = FLOOR_FACTOR * f64::EPSILON * energies[0];
    let t_end = *times.last().unwrap();
    let t_cut = times
        .iter()
        .zip(energies)
        .filter(|(_, &e)| e >= floor && e > 0.0)
        .map(|(&t, _)| t)
        .next_back()
        .ok_or_else(|| WaveError::Samples("energy is below the round-off floor everywhere".into()))?;
    let lo = if t_cut > t_end / 10.0 { t_end / 10.0 } else { t_cut / 10.0 };
    FitWindow::new(lo, t_cut)
}

/// What the theory predicts for a damping class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DecayTarget {
    Exponential,
    /// Exponent guaranteed at least `lo`, and `hi` up to an arbitrarily
    /// small loss.
    AlgebraicBand { lo: f64, hi: f64 },
    LogPower { exponent: f64 },
}

impl DecayTarget {
    pub fn model(&self) -> DecayModel {
        match self {
            DecayTarget::Exponential => DecayModel::Exponential,
            DecayTarget::AlgebraicBand { .. } => DecayModel::Algebraic,
            DecayTarget::LogPower { .. } => DecayModel::LogPower,
        }
    }

    /// `(lo, hi)`; infinite for exponential decay.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DecayTarget::Exponential => (f64::INFINITY, f64::INFINITY),
            DecayTarget::AlgebraicBand { lo, hi } => (lo, hi),
            DecayTarget::LogPower { exponent } => (exponent, exponent),
        }
    }
}

/// Range of `p` a decay statement is made for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `2 <= p < inf`.
    SuperQuadratic,
    /// `1 < p < 2`.
    SubQuadratic,
}

impl Regime {
    pub fn for_p(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(WaveError::OutOfScope(format!("no decay statement for p = {p}")));
        }
        Ok(if p >= 2.0 { Regime::SuperQuadratic } else { Regime::SubQuadratic })
    }
}

pub fn theoretical_target(p: f64, damping: &DampingSpec, regime: Regime) -> Result<DecayTarget> {
    if Regime::for_p(p)? != regime {
        return invalid(format!("p = {p} is not in the {regime:?} regime"));
    }
    damping.validate()?;
    if damping.classify_origin() == OriginClass::PositiveDerivative {
        return Ok(DecayTarget::Exponential);
    }
    match damping.kind {
        DampingKind::Linear { .. } => Ok(DecayTarget::Exponential),
        DampingKind::PolynomialNearZero { q, .. } => Ok(DecayTarget::AlgebraicBand { lo: p / q, hi: p / (q - 1.0) }),
        DampingKind::ExpFlatNearZero { q, .. } => Ok(DecayTarget::LogPower { exponent: p / q }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Fitted decay is at least as fast as the target, within tolerance.
    Consistent,
    /// Fitted decay is slower than the target.
    Slower,
    /// The fit quality is too poor to judge.
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Slower => "slower",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub model: DecayModel,
    /// Rate for the exponential model, exponent otherwise; positive for
    /// decaying data.
    pub parameter: f64,
    pub log_prefactor: f64,
    pub window: FitWindow,
    pub n_points: usize,
    pub r_squared: f64,
    /// Parameters fitted separately on the two halves of the window.
    pub half_parameters: Option<[f64; 2]>,
    /// Halves disagree by more than [`MISMATCH_TOLERANCE`].
    pub mismatch: bool,
    pub target: Option<DecayTarget>,
    pub verdict: Option<Verdict>,
}

pub const MISMATCH_TOLERANCE: f64 = 0.10;
/// Slack on the lower end of a target when issuing a verdict.
pub const VERDICT_SLACK: f64 = 0.3;
pub const MIN_R_SQUARED: f64 = 0.9;

impl DecayFitReport {
    /// Attaches a target and the resulting verdict; a target of another
    /// model family gives an inconclusive verdict.
    pub fn with_target(mut self, target: DecayTarget) -> Self {
        let verdict = if target.model() != self.model || self.r_squared < MIN_R_SQUARED {
            Verdict::Inconclusive
        } else {
            match target {
                DecayTarget::Exponential if self.parameter > 0.0 => Verdict::Consistent,
                DecayTarget::Exponential => Verdict::Slower,
                _ if self.parameter >= target.bounds().0 - VERDICT_SLACK => Verdict::Consistent,
                _ => Verdict::Slower,
            }
        };
        self.target = Some(target);
        self.verdict = Some(verdict);
        self
    }
}

fn check_samples(times: &[f64], energies: &[f64]) -> Result<()> {
    if times.len() != energies.len() || times.is_empty() {
        return Err(WaveError::Samples("times and energies must be nonempty and of equal length".into()));
    }
    Ok(())
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    // A signal flat to round-off is a perfect fit with zero slope.
    let scale = my.abs().max(1.0) * f64::EPSILON * n;
    if syy <= scale * scale || sxx == 0.0 {
        return LineFit { slope: 0.0, intercept: my, r_squared: 1.0 };
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

fn collect(model: DecayModel, times: &[f64], energies: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if t < lo || t > hi {
            continue;
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(WaveError::Domain(format!("energy {e} at t = {t} is not positive")));
        }
        xs.push(model.abscissa(t));
        ys.push(e.ln());
    }
    Ok((xs, ys))
}

/// Fits `model` on the samples inside `window`.
pub fn fit(model: DecayModel, times: &[f64], energies: &[f64], window: FitWindow) -> Result<DecayFitReport> {
    check_samples(times, energies)?;
    if window.t_lo < model.min_t() || (model == DecayModel::Algebraic && window.t_lo <= 0.0) {
        return invalid(format!("{} fit needs t_lo > {}, got {}", model.name(), model.min_t(), window.t_lo));
    }
    let (xs, ys) = collect(model, times, energies, window.t_lo, window.t_hi)?;
    if xs.len() < 3 {
        return Err(WaveError::Samples(format!("only {} samples in the fit window", xs.len())));
    }
    let line = least_squares(&xs, &ys);
    let mid = window.midpoint();
    let first = collect(model, times, energies, window.t_lo, mid)?;
    let second = collect(model, times, energies, mid, window.t_hi)?;
    let half_parameters = (first.0.len() >= 3 && second.0.len() >= 3)
        .then(|| [-least_squares(&first.0, &first.1).slope, -least_squares(&second.0, &second.1).slope]);
    let mismatch = half_parameters.is_some_and(|[a, b]| {
        let scale = a.abs().max(b.abs());
        scale > 1e-12 && (a - b).abs() > MISMATCH_TOLERANCE * scale
    });
    Ok(DecayFitReport {
        model,
        parameter: -line.slope,
        log_prefactor: line.intercept,
        window,
        n_points: xs.len(),
        r_squared: line.r_squared,
        half_parameters,
        mismatch,
        target: None,
        verdict: None,
    })
}

pub fn fit_exponential(times: &[f64], energies: &[f64], window: FitWindow) -> Result<DecayFitReport> {
    fit(DecayModel::Exponential, times, energies, window)
}

pub fn fit_algebraic(times: &[f64], energies: &[f64], window: FitWindow) -> Result<DecayFitReport> {
    fit(DecayModel::Algebraic, times, energies, window)
}

pub fn fit_logpower(times: &[f64], energies: &[f64], window: FitWindow) -> Result<DecayFitReport> {
    fit(DecayModel::LogPower, times, energies, window)
}

/// Fits `model` to the `E_p` column of a trace on the default window.
pub fn fit_trace(trace: &EnergyTrace, model: DecayModel) -> Result<DecayFitReport> {
    let (t, e) = (trace.times(), trace.energies());
    fit(model, &t, &e, default_window(&t, &e)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let e = t.iter().map(|&s| g(s)).collect();
        (t, e)
    }

    fn w(lo: f64, hi: f64) -> FitWindow {
        FitWindow::new(lo, hi).unwrap()
    }

    #[test]
    fn exponential_recovery() {
        let (t, e) = sample(|s| 5.0 * (-0.7 * s).exp(), 0.0, 30.0, 301);
        let r = fit_exponential(&t, &e, w(0.0, 30.0)).unwrap();
        assert!((r.parameter - 0.7).abs() < 1e-6);
        assert!(r.r_squared > 1.0 - 1e-10);
        assert!((r.log_prefactor - 5f64.ln()).abs() < 1e-9);
        assert!(!r.mismatch);
    }

    #[test]
    fn constant_energy_gives_zero() {
        let (t, e) = sample(|_| 2.0, 2.0, 100.0, 50);
        for m in DecayModel::ALL {
            let r = fit(m, &t, &e, w(3.0, 100.0)).unwrap();
            assert_eq!(r.parameter, 0.0);
            assert_eq!(r.r_squared, 1.0);
        }
    }

    #[test]
    fn algebraic_recovery_and_controls() {
        let (t, e) = sample(|s| (1.0 + s).powf(-2.5), 10.0, 1e4, 2000);
        let r = fit_algebraic(&t, &e, w(10.0, 1e4)).unwrap();
        assert!((r.parameter - 2.5).abs() < 0.02, "{}", r.parameter);
        let (t, e) = sample(|s| (1.0 + s).powf(-3.0), 10.0, 1e4, 2000);
        let x = fit_exponential(&t, &e, w(10.0, 1e4)).unwrap();
        assert!(x.r_squared < 0.9 && x.mismatch);
        let (t, e) = sample(|s| (-0.5 * s).exp(), 1.0, 60.0, 600);
        let a = fit_algebraic(&t, &e, w(6.0, 60.0)).unwrap();
        assert!(a.mismatch);
        let [early, late] = a.half_parameters.unwrap();
        assert!(late > early);
    }

    #[test]
    fn logpower_recovery_and_control() {
        let (t, e) = sample(|s| 3.0 * s.ln().powf(-1.5), 10.0, 1e6, 5000);
        let r = fit_logpower(&t, &e, w(10.0, 1e6)).unwrap();
        assert!((r.parameter - 1.5).abs() < 0.05);
        let (t, e) = sample(|s| s.powf(-2.5), 10.0, 1e6, 5000);
        assert!(fit_logpower(&t, &e, w(10.0, 1e6)).unwrap().mismatch);
        assert!(fit_logpower(&t, &e, w(1.5, 1e6)).is_err());
    }

    #[test]
    fn generating_family_wins() {
        let fams: [(DecayModel, Box<dyn Fn(f64) -> f64>); 3] = [
            (DecayModel::Exponential, Box::new(|s: f64| (-0.3 * s).exp())),
            (DecayModel::Algebraic, Box::new(|s: f64| s.powf(-2.0))),
            (DecayModel::LogPower, Box::new(|s: f64| s.ln().powf(-1.0))),
        ];
        for (model, g) in fams {
            let (t, e) = sample(g, 3.0, 300.0, 1000);
            let best = DecayModel::ALL
                .into_iter()
                .map(|m| (m, fit(m, &t, &e, w(3.0, 300.0)).unwrap().r_squared))
                .fold((model, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            assert_eq!(best.0, model);
        }
    }

    #[test]
    fn rejects_nonpositive_energy() {
        let t = vec![1.0, 2.0, 3.0, 4.0];
        let e = vec![1.0, 0.5, 0.0, 0.1];
        assert!(matches!(fit_exponential(&t, &e, w(1.0, 4.0)), Err(WaveError::Domain(_))));
    }

    #[test]
    fn default_window_cuts_floor() {
        let (t, e) = sample(|s| (-s).exp(), 0.0, 100.0, 1001);
        let win = default_window(&t, &e).unwrap();
        assert!(win.t_hi < 30.0 && win.t_hi > 20.0);
        let (t, e) = sample(|s| 1.0 / (1.0 + s), 0.0, 100.0, 1001);
        assert_eq!(default_window(&t, &e).unwrap(), w(10.0, 100.0));
    }

    #[test]
    fn targets() {
        let poly = DampingSpec::polynomial(3.0, 1.0).unwrap();
        assert_eq!(
            theoretical_target(4.0, &poly, Regime::SuperQuadratic).unwrap(),
            DecayTarget::AlgebraicBand { lo: 4.0 / 3.0, hi: 2.0 }
        );
        let lin = DampingSpec::linear(1.0).unwrap();
        assert_eq!(theoretical_target(3.0, &lin, Regime::SuperQuadratic).unwrap(), DecayTarget::Exponential);
        let ef = DampingSpec::exp_flat(2.0, 1.0).unwrap();
        assert_eq!(
            theoretical_target(1.5, &ef, Regime::SubQuadratic).unwrap(),
            DecayTarget::LogPower { exponent: 0.75 }
        );
        assert!(matches!(Regime::for_p(1.0), Err(WaveError::OutOfScope(_))));
        assert!(matches!(Regime::for_p(f64::INFINITY), Err(WaveError::OutOfScope(_))));
        assert!(theoretical_target(3.0, &lin, Regime::SubQuadratic).is_err());
    }

    #[test]
    fn verdicts() {
        let (t, e) = sample(|s| s.powf(-1.5), 10.0, 100.0, 200);
        let r = fit_algebraic(&t, &e, w(10.0, 100.0)).unwrap();
        let band = DecayTarget::AlgebraicBand { lo: 4.0 / 3.0, hi: 2.0 };
        assert_eq!(r.clone().with_target(band).verdict, Some(Verdict::Consistent));
        let strict = DecayTarget::AlgebraicBand { lo: 3.0, hi: 4.0 };
        assert_eq!(r.clone().with_target(strict).verdict, Some(Verdict::Slower));
        assert_eq!(r.with_target(DecayTarget::Exponential).verdict, Some(Verdict::Inconclusive));
    }
}
