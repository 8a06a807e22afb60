//! Background-subtracted depletion spectra and Lorentzian line fits.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::{Quantity, EXP, KHZ};
use crate::textio::parse_f64;

/// One measured decay of the intact-ion number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub detuning_khz: f64,
    pub run_id: String,
    pub laser_on: bool,
    /// Fractional decrease of the intact-ion number.
    pub depletion: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub detuning_khz: f64,
    /// Mean depletion with spectroscopy light minus mean background depletion.
    pub signal: f64,
    /// Standard deviation of the mean of the difference; `None` when a class
    /// has a single record.
    pub sem: Option<f64>,
    pub n_on: usize,
    pub n_off: usize,
}

fn mean_sem(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

pub fn build_spectrum(records: &[DecayRecord]) -> Result<Vec<SpectrumPoint>> {
    let mut by_detuning: BTreeMap<u64, (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        if !(0.0..=1.0).contains(&r.depletion) {
            return Err(Error::input(format!(
                "run {} at {} kHz: depletion {} outside [0, 1]",
                r.run_id, r.detuning_khz, r.depletion
            )));
        }
        if !r.detuning_khz.is_finite() {
            return Err(Error::input(format!(
                "run {}: detuning is not finite",
                r.run_id
            )));
        }
        // +0.0 and -0.0 are the same detuning.
        let key = (r.detuning_khz + 0.0).to_bits();
        let entry = by_detuning
            .entry(key)
            .or_insert_with(|| (r.detuning_khz, Vec::new(), Vec::new()));
        if r.laser_on {
            entry.1.push(r.depletion);
        } else {
            entry.2.push(r.depletion);
        }
    }
    let mut out = Vec::with_capacity(by_detuning.len());
    for (detuning, on, off) in by_detuning.into_values() {
        if on.is_empty() || off.is_empty() {
            let missing = if on.is_empty() {
                "laser-on"
            } else {
                "background"
            };
            return Err(Error::input(format!(
                "detuning {detuning} kHz has no {missing} records"
            )));
        }
        let (m_on, s_on) = mean_sem(&on);
        let (m_off, s_off) = mean_sem(&off);
        out.push(SpectrumPoint {
            detuning_khz: detuning,
            signal: m_on - m_off,
            sem: s_on.zip(s_off).map(|(a, b)| a.hypot(b)),
            n_on: on.len(),
            n_off: off.len(),
        });
    }
    out.sort_by(|a, b| a.detuning_khz.total_cmp(&b.detuning_khz));
    Ok(out)
}

/// Reads `detuning_khz, run_id, laser_on(0|1), depletion`.
pub fn parse_records_csv(text: &str, origin: &str) -> Result<Vec<DecayRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(origin, 1, format!("missing column '{name}'")))
    };
    let (id, ir, il, ix) = (
        col("detuning_khz")?,
        col("run_id")?,
        col("laser_on")?,
        col("depletion")?,
    );
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let laser_on = match cell(il) {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("laser_on must be 0 or 1, got '{other}'"),
                ))
            }
        };
        let depletion = parse_f64(cell(ix), origin, line)?;
        if !(0.0..=1.0).contains(&depletion) {
            return Err(Error::parse(
                origin,
                line,
                format!("depletion {depletion} outside [0, 1]"),
            ));
        }
        out.push(DecayRecord {
            detuning_khz: parse_f64(cell(id), origin, line)?,
            run_id: cell(ir).to_string(),
            laser_on,
            depletion,
        });
    }
    Ok(out)
}

/// Writes `detuning_khz, signal, sem`; a missing sem is an empty cell.
pub fn spectrum_to_csv(points: &[SpectrumPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["detuning_khz", "signal", "sem"])?;
    for p in points {
        w.write_record([
            p.detuning_khz.to_string(),
            p.signal.to_string(),
            p.sem.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    crate::zeeman::csv_string(w)
}

/// Reads `detuning_khz, signal[, sem]`.
pub fn parse_spectrum_csv(text: &str, origin: &str) -> Result<Vec<SpectrumPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let id = pos("detuning_khz")
        .ok_or_else(|| Error::parse(origin, 1, "missing column 'detuning_khz'"))?;
    let is = pos("signal").ok_or_else(|| Error::parse(origin, 1, "missing column 'signal'"))?;
    let ie = pos("sem");
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let sem = match ie.map(cell).filter(|c| !c.is_empty()) {
            Some(c) => {
                let s = parse_f64(c, origin, line)?;
                if s < 0.0 {
                    return Err(Error::parse(origin, line, "sem must be non-negative"));
                }
                Some(s)
            }
            None => None,
        };
        out.push(SpectrumPoint {
            detuning_khz: parse_f64(cell(id), origin, line)?,
            signal: parse_f64(cell(is), origin, line)?,
            sem,
            n_on: 0,
            n_off: 0,
        });
    }
    Ok(out)
}

/// Whether the line appears as a peak or as a dip of the signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    Peak,
    Dip,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Polarity::Peak => 1.0,
            Polarity::Dip => -1.0,
        }
    }
}

/// Starting values for [`fit_lorentzian`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    pub center: f64,
    pub fwhm: f64,
    /// Height above the offset in the direction of `polarity`, ≥ 0.
    pub amplitude: f64,
    pub offset: f64,
}

impl LorentzParams {
    /// offset ± amplitude·(Γ²/4)/((δ − δ₀)² + Γ²/4)
    pub fn eval(&self, polarity: Polarity, detuning: f64) -> f64 {
        let g2 = 0.25 * self.fwhm * self.fwhm;
        let d = detuning - self.center;
        self.offset + polarity.sign() * self.amplitude * g2 / (d * d + g2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// kHz
    pub center: f64,
    /// kHz
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub polarity: Polarity,
    /// Order (center, fwhm, amplitude, offset), scaled by the reduced χ².
    pub covariance: [[f64; 4]; 4],
    pub chi2: f64,
    pub dof: usize,
    /// √χ²
    pub residual_norm: f64,
    pub weighted: bool,
    pub converged: bool,
    pub iterations: usize,
    /// χ² after every accepted step, starting with the initial value.
    pub cost_history: Vec<f64>,
}

impl LineFit {
    pub fn params(&self) -> LorentzParams {
        LorentzParams {
            center: self.center,
            fwhm: self.fwhm,
            amplitude: self.amplitude,
            offset: self.offset,
        }
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }
}

pub const MAX_ITERATIONS: usize = 200;
const LAMBDA_START: f64 = 1e-3;
const REL_COST_TOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-10;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Peak or dip, decided by which extreme lies further from the median.
pub fn detect_polarity(points: &[SpectrumPoint]) -> Polarity {
    let s: Vec<f64> = points.iter().map(|p| p.signal).collect();
    let med = median(s.clone());
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if med - min > max - med {
        Polarity::Dip
    } else {
        Polarity::Peak
    }
}

/// Data-driven starting point for the given polarity.
pub fn initial_guess(points: &[SpectrumPoint], polarity: Polarity) -> LorentzParams {
    let sign = polarity.sign();
    let ext = points
        .iter()
        .max_by(|a, b| (sign * a.signal).total_cmp(&(sign * b.signal)))
        .expect("non-empty spectrum");
    let max = points
        .iter()
        .map(|p| p.signal)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = points
        .iter()
        .map(|p| p.signal)
        .fold(f64::INFINITY, f64::min);
    let mut sorted: Vec<&SpectrumPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.detuning_khz.total_cmp(&b.detuning_khz));
    let q = (sorted.len() / 4).max(1);
    let outer: Vec<f64> = sorted[..q]
        .iter()
        .chain(&sorted[sorted.len() - q..])
        .map(|p| p.signal)
        .collect();
    let span = sorted[sorted.len() - 1].detuning_khz - sorted[0].detuning_khz;
    LorentzParams {
        center: ext.detuning_khz,
        fwhm: 0.5 * span,
        amplitude: max - min,
        offset: median(outer),
    }
}

struct Problem {
    x: Vec<f64>,
    /// Signal with the polarity sign removed, so the line is a peak.
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    fn cost(&self, p: &Vector4<f64>) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| w * (y - model(p, x)).powi(2))
            .sum()
    }

    /// (JᵀWJ, JᵀWr) at p.
    fn normal(&self, p: &Vector4<f64>) -> (Matrix4<f64>, Vector4<f64>) {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for ((&x, &y), &w) in self.x.iter().zip(&self.y).zip(&self.w) {
            let j = gradient(p, x);
            jtj += j * j.transpose() * w;
            jtr += j * (w * (y - model(p, x)));
        }
        (jtj, jtr)
    }
}

fn model(p: &Vector4<f64>, x: f64) -> f64 {
    let g2 = 0.25 * p[1] * p[1];
    let d = x - p[0];
    p[3] + p[2] * g2 / (d * d + g2)
}

fn gradient(p: &Vector4<f64>, x: f64) -> Vector4<f64> {
    let g = 0.5 * p[1];
    let g2 = g * g;
    let d = x - p[0];
    let den = d * d + g2;
    let den2 = den * den;
    Vector4::new(
        p[2] * g2 * 2.0 * d / den2,
        p[2] * g * d * d / den2,
        g2 / den,
        1.0,
    )
}

/// Damped Gauss–Newton fit of a Lorentzian with free offset.
///
/// Points are weighted by 1/sem² when every point has a positive sem and
/// unweighted otherwise. The damping starts at 1e-3, grows ×10 after a
/// rejected step and shrinks ×0.1 after an accepted one. Iteration stops
/// when the relative cost change falls below 1e-12 or the step below 1e-10.
pub fn fit_lorentzian(points: &[SpectrumPoint], init: Option<LorentzParams>) -> Result<LineFit> {
    if points.len() < 5 {
        return Err(Error::input(format!(
            "a Lorentzian fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.detuning_khz.is_finite() && p.signal.is_finite()))
    {
        return Err(Error::input("spectrum contains non-finite values"));
    }
    let polarity = detect_polarity(points);
    let sign = polarity.sign();
    let guess = init.unwrap_or_else(|| initial_guess(points, polarity));
    let lo = points
        .iter()
        .map(|p| p.detuning_khz)
        .fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .map(|p| p.detuning_khz)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(guess.fwhm > 0.0) || hi - lo <= guess.fwhm {
        return Err(Error::input(format!(
            "scan span {} kHz does not cover the initial FWHM {} kHz",
            hi - lo,
            guess.fwhm
        )));
    }
    if guess.amplitude == 0.0 {
        return Err(Error::LowSignal {
            amplitude: 0.0,
            sigma: 0.0,
        });
    }
    let weighted = points.iter().all(|p| p.sem.is_some_and(|s| s > 0.0));
    let problem = Problem {
        x: points.iter().map(|p| p.detuning_khz).collect(),
        y: points.iter().map(|p| sign * p.signal).collect(),
        w: points
            .iter()
            .map(|p| {
                if weighted {
                    p.sem.map_or(1.0, |s| 1.0 / (s * s))
                } else {
                    1.0
                }
            })
            .collect(),
    };

    let mut p = Vector4::new(
        guess.center,
        guess.fwhm,
        guess.amplitude,
        sign * guess.offset,
    );
    let mut cost = problem.cost(&p);
    let mut history = vec![cost];
    let mut lambda = LAMBDA_START;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = problem.normal(&p);
        let mut damped = jtj;
        for i in 0..4 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + step;
        let trial_cost = problem.cost(&trial);
        if trial_cost.is_finite() && trial_cost <= cost {
            let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
            p = trial;
            cost = trial_cost;
            history.push(cost);
            lambda *= 0.1;
            converged = rel < REL_COST_TOL || step.norm() < STEP_TOL || cost == 0.0;
        } else {
            lambda *= 10.0;
            converged = step.norm() < STEP_TOL;
        }
    }
    if !converged {
        let tail: Vec<String> = history
            .iter()
            .rev()
            .take(5)
            .map(|c| format!("{c:e}"))
            .collect();
        return Err(Error::Fit(format!(
            "no convergence after {MAX_ITERATIONS} iterations (last costs {}, damping {lambda:e})",
            tail.join(", ")
        )));
    }

    let n = points.len();
    let dof = n - 4;
    let (jtj, _) = problem.normal(&p);
    let scale = match (dof, weighted) {
        (0, true) => 1.0,
        (0, false) => 0.0,
        _ => cost / dof as f64,
    };
    let amplitude = p[2];
    let cov = jtj.try_inverse().map(|c| c * scale);
    let sigma_a = cov
        .map(|c| c[(2, 2)].max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);
    if !(amplitude.abs() > 2.0 * sigma_a) || amplitude <= 0.0 {
        return Err(Error::LowSignal {
            amplitude: sign * amplitude,
            sigma: sigma_a,
        });
    }
    let cov = cov.expect("finite sigma implies invertible normal matrix");
    // Undo the polarity flip on the offset row and column.
    let flip = Vector4::new(1.0, 1.0, 1.0, sign);
    let covariance: [[f64; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)] * flip[i] * flip[j]));
    Ok(LineFit {
        center: p[0],
        fwhm: p[1].abs(),
        amplitude,
        offset: sign * p[3],
        polarity,
        covariance,
        chi2: cost,
        dof,
        residual_norm: cost.sqrt(),
        weighted,
        converged,
        iterations,
        cost_history: history,
    })
}

/// Absolute line frequency with the half-FWHM statistical uncertainty in
/// `exp`.
pub fn line_frequency(fit: &LineFit, absolute_offset_khz: f64) -> Result<Quantity> {
    if !fit.converged {
        return Err(Error::Fit("line fit did not converge".into()));
    }
    let mut q = Quantity::new(absolute_offset_khz + fit.center, KHZ);
    q.set(EXP, 0.5 * fit.fwhm)?;
    Ok(q)
}

/// Line resolution f / FWHM.
pub fn resolution(frequency_khz: f64, fwhm_khz: f64) -> Result<f64> {
    if !(fwhm_khz > 0.0) {
        return Err(Error::input(format!(
            "FWHM must be positive, got {fwhm_khz}"
        )));
    }
    Ok(frequency_khz / fwhm_khz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(
        truth: LorentzParams,
        polarity: Polarity,
        n: usize,
        lo: f64,
        hi: f64,
    ) -> Vec<SpectrumPoint> {
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                SpectrumPoint {
                    detuning_khz: x,
                    signal: truth.eval(polarity, x),
                    sem: Some(0.01),
                    n_on: 5,
                    n_off: 5,
                }
            })
            .collect()
    }

    const TRUTH: LorentzParams = LorentzParams {
        center: 0.37,
        fwhm: 0.8,
        amplitude: 0.25,
        offset: 0.02,
    };

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn noiseless_roundtrip() {
        let fit = fit_lorentzian(&synth(TRUTH, Polarity::Peak, 21, -2.0, 2.0), None).unwrap();
        assert!(rel(fit.center, TRUTH.center) < 1e-9);
        assert!(rel(fit.fwhm, TRUTH.fwhm) < 1e-9);
        assert!(rel(fit.amplitude, TRUTH.amplitude) < 1e-9);
        assert!(rel(fit.offset, TRUTH.offset) < 1e-9);
        assert_eq!(fit.polarity, Polarity::Peak);
    }

    #[test]
    fn dip_roundtrip() {
        let fit = fit_lorentzian(&synth(TRUTH, Polarity::Dip, 21, -2.0, 2.0), None).unwrap();
        assert_eq!(fit.polarity, Polarity::Dip);
        assert!(rel(fit.center, TRUTH.center) < 1e-9);
        assert!(rel(fit.amplitude, TRUTH.amplitude) < 1e-9);
        assert!(rel(fit.offset, TRUTH.offset) < 1e-9);
    }

    #[test]
    fn all_zero_signal_is_low_signal() {
        let mut pts = synth(TRUTH, Polarity::Peak, 21, -2.0, 2.0);
        for p in &mut pts {
            p.signal = 0.0;
        }
        assert!(matches!(
            fit_lorentzian(&pts, None),
            Err(Error::LowSignal { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let pts = synth(TRUTH, Polarity::Peak, 4, -2.0, 2.0);
        assert!(matches!(fit_lorentzian(&pts, None), Err(Error::Input(_))));
    }

    #[test]
    fn symmetric_data_centers_exactly() {
        let truth = LorentzParams {
            center: 0.5,
            ..TRUTH
        };
        // Grid symmetric about 0.5 with a deterministic symmetric perturbation.
        let pts: Vec<SpectrumPoint> = (-10..=10)
            .map(|i| {
                let d = 0.15 * i as f64;
                SpectrumPoint {
                    detuning_khz: 0.5 + d,
                    signal: truth.eval(Polarity::Peak, 0.5 + d) + 0.01 * (d * 7.0).cos(),
                    sem: Some(0.01),
                    n_on: 3,
                    n_off: 3,
                }
            })
            .collect();
        let fit = fit_lorentzian(&pts, None).unwrap();
        assert!((fit.center - 0.5).abs() < 1e-9);
    }

    #[test]
    fn cost_decreases_monotonically() {
        let mut pts = synth(TRUTH, Polarity::Peak, 31, -3.0, 3.0);
        for (i, p) in pts.iter_mut().enumerate() {
            p.signal += 0.004 * ((i * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let fit = fit_lorentzian(&pts, None).unwrap();
        assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.iterations <= MAX_ITERATIONS);
    }

    #[test]
    fn spectrum_from_records() {
        let recs = vec![
            DecayRecord {
                detuning_khz: 1.0,
                run_id: "a".into(),
                laser_on: true,
                depletion: 0.4,
            },
            DecayRecord {
                detuning_khz: 1.0,
                run_id: "b".into(),
                laser_on: false,
                depletion: 0.1,
            },
        ];
        let s = build_spectrum(&recs).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].signal - 0.3).abs() < 1e-15);
        assert_eq!(s[0].sem, None);

        let only_on = vec![recs[0].clone()];
        let err = build_spectrum(&only_on).unwrap_err();
        assert!(err.to_string().contains("1 kHz"));
    }

    #[test]
    fn identical_classes_give_zero_signal() {
        let mut recs = Vec::new();
        for (i, d) in [0.1, 0.2, 0.3].iter().enumerate() {
            for on in [true, false] {
                for r in 0..3 {
                    recs.push(DecayRecord {
                        detuning_khz: *d,
                        run_id: format!("{i}-{r}"),
                        laser_on: on,
                        depletion: 0.1 * (r + 1) as f64,
                    });
                }
            }
        }
        for p in build_spectrum(&recs).unwrap() {
            assert_eq!(p.signal, 0.0);
            assert!(p.sem.unwrap() > 0.0);
        }
    }

    #[test]
    fn records_csv_roundtrip() {
        let text = "detuning_khz,run_id,laser_on,depletion\n0.5,r1,1,0.3\n0.5,r2,0,0.1\n";
        let recs = parse_records_csv(text, "mem").unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].laser_on);
        assert!(parse_records_csv(
            "detuning_khz,run_id,laser_on,depletion\n0.5,r1,2,0.3\n",
            "mem"
        )
        .is_err());
        assert!(parse_records_csv(
            "detuning_khz,run_id,laser_on,depletion\n0.5,r1,1,1.3\n",
            "mem"
        )
        .is_err());
        let spec = build_spectrum(&recs).unwrap();
        let back = parse_spectrum_csv(&spectrum_to_csv(&spec).unwrap(), "mem").unwrap();
        assert_eq!(back[0].signal, spec[0].signal);
        assert_eq!(back[0].sem, None);
    }

    #[test]
    fn line_frequency_uses_half_width() {
        let fit = fit_lorentzian(
            &synth(
                LorentzParams {
                    fwhm: 1.0,
                    center: 0.0,
                    ..TRUTH
                },
                Polarity::Peak,
                21,
                -3.0,
                3.0,
            ),
            None,
        )
        .unwrap();
        let q = line_frequency(&fit, 58_605_013_478.0).unwrap();
        assert!((q.component(EXP) - 0.5).abs() < 1e-9);
        assert!((q.value - 58_605_013_478.0).abs() < 1e-6);
        let r = resolution(58_605_013_478.0, 0.195).unwrap();
        assert!(r >= 3.0e11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn detuning_shift_equivariance(shift in -50.0f64..50.0) {
            let mut pts = synth(TRUTH, Polarity::Peak, 25, -2.5, 2.5);
            for (i, p) in pts.iter_mut().enumerate() {
                p.signal += 0.003 * ((i * 13 % 7) as f64 - 3.0) / 3.0;
            }
            let base = fit_lorentzian(&pts, None).unwrap();
            let moved: Vec<SpectrumPoint> = pts
                .iter()
                .map(|p| SpectrumPoint { detuning_khz: p.detuning_khz + shift, ..*p })
                .collect();
            let fit = fit_lorentzian(&moved, None).unwrap();
            prop_assert!((fit.center - base.center - shift).abs() < 1e-9);
            prop_assert!((fit.fwhm - base.fwhm).abs() < 1e-9);
            prop_assert!((fit.amplitude - base.amplitude).abs() < 1e-9);
            prop_assert!((fit.offset - base.offset).abs() < 1e-9);
        }
    }
}
