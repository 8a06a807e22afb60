//! Frequency-chain arithmetic of the comb-referenced difference-frequency
//! source, maser correction and Allan-deviation stability analysis.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::textio::parse_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A continuous-wave laser phase-locked to comb mode `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombLaser {
    pub n: u64,
    pub f_beat: f64,
    pub beat_sign: Sign,
    pub ceo_sign: Sign,
}

/// Frequencies in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombParams {
    pub f_rep: f64,
    pub f_ceo: f64,
    pub lasers: Vec<CombLaser>,
}

impl CombParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_rep > 0.0 && self.f_rep.is_finite()) {
            return Err(Error::Config(format!(
                "f_rep must be positive, got {}",
                self.f_rep
            )));
        }
        if !self.f_ceo.is_finite() {
            return Err(Error::Config("f_ceo is not finite".into()));
        }
        for (i, l) in self.lasers.iter().enumerate() {
            if l.n == 0 {
                return Err(Error::Config(format!(
                    "laser {i}: mode number must be positive"
                )));
            }
            if !l.f_beat.is_finite() {
                return Err(Error::Config(format!(
                    "laser {i}: beat frequency is not finite"
                )));
            }
        }
        Ok(())
    }

    fn laser(&self, index: usize) -> Result<&CombLaser> {
        self.lasers.get(index).ok_or_else(|| {
            Error::input(format!(
                "no laser {index}; {} configured",
                self.lasers.len()
            ))
        })
    }
}

/// f = n·f_rep + s_ceo·f_ceo + s_beat·f_beat in Hz.
pub fn laser_frequency(comb: &CombParams, index: usize) -> Result<f64> {
    comb.validate()?;
    let l = comb.laser(index)?;
    Ok(l.n as f64 * comb.f_rep + l.ceo_sign.value() * comb.f_ceo + l.beat_sign.value() * l.f_beat)
}

/// Difference frequency f₁ − f₂ of lasers 0 and 1. The offset frequency
/// cancels algebraically and is never used, so the result does not depend
/// on it at the bit level.
pub fn dfg_frequency(comb: &CombParams) -> Result<f64> {
    comb.validate()?;
    let (l1, l2) = (comb.laser(0)?, comb.laser(1)?);
    if l1.ceo_sign != l2.ceo_sign {
        return Err(Error::Config(
            "the two lasers reference f_ceo with opposite signs, so it does not cancel".into(),
        ));
    }
    let dn = l1.n as i128 - l2.n as i128;
    Ok(
        dn as f64 * comb.f_rep + l1.beat_sign.value() * l1.f_beat
            - l2.beat_sign.value() * l2.f_beat,
    )
}

/// Largest plausible fractional deviation of the reference maser.
pub const MAX_MASER_OFFSET: f64 = 1e-9;

/// Removes the reference error from a counter reading. `fractional_offset`
/// is the fractional amount by which readings exceed the true frequency,
/// which is positive when the maser runs slow; the corrected value is
/// f·(1 − fractional_offset).
pub fn maser_correct(f: f64, fractional_offset: f64) -> Result<f64> {
    if !(fractional_offset.abs() < MAX_MASER_OFFSET) {
        return Err(Error::input(format!(
            "maser offset {fractional_offset:e} is outside ±{MAX_MASER_OFFSET:e}"
        )));
    }
    Ok(f * (1.0 - fractional_offset))
}

/// Uniformly sampled fractional frequency values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTimeSeries {
    pub tau0: f64,
    pub samples: Vec<f64>,
}

impl FrequencyTimeSeries {
    pub fn new(tau0: f64, samples: Vec<f64>) -> Result<Self> {
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(Error::input(format!(
                "sample interval must be positive, got {tau0}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::input("a time series needs at least 2 samples"));
        }
        if samples.iter().any(|y| !y.is_finite()) {
            return Err(Error::input("time series contains a non-finite sample"));
        }
        Ok(Self { tau0, samples })
    }

    /// Converts absolute frequencies in Hz to fractional deviations from
    /// `carrier_hz`.
    pub fn from_absolute(tau0: f64, f_hz: &[f64], carrier_hz: f64) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(Error::input(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        Self::new(
            tau0,
            f_hz.iter().map(|f| (f - carrier_hz) / carrier_hz).collect(),
        )
    }

    pub fn span(&self) -> f64 {
        self.samples.len() as f64 * self.tau0
    }
}

/// Reads a counter log with columns `t_s, f_hz`; timestamps must be
/// uniformly spaced.
pub fn parse_counter_log(text: &str, origin: &str, carrier_hz: f64) -> Result<FrequencyTimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_s", "f_hz"] {
        return Err(Error::parse(origin, 1, "expected header 't_s,f_hz'"));
    }
    let mut t = Vec::new();
    let mut f = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        t.push(parse_f64(&rec[0], origin, line)?);
        f.push(parse_f64(&rec[1], origin, line)?);
    }
    if t.len() < 2 {
        return Err(Error::parse(
            origin,
            1,
            "counter log needs at least 2 samples",
        ));
    }
    let tau0 = t[1] - t[0];
    for (i, w) in t.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if !(tau0 > 0.0) || (dt - tau0).abs() > 1e-6 * tau0 {
            return Err(Error::parse(
                origin,
                i + 3,
                format!("non-uniform sampling: step {dt} s vs {tau0} s"),
            ));
        }
    }
    FrequencyTimeSeries::from_absolute(tau0, &f, carrier_hz)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdevPoint {
    pub tau: f64,
    pub adev: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Averaging factor τ/τ₀.
    pub m: usize,
    pub edf: f64,
}

/// Lower and upper tail probabilities of a central 68.27 % interval.
pub const CI_TAILS: (f64, f64) = (0.158_655_253_931_457, 0.841_344_746_068_543);

/// Equivalent degrees of freedom of the overlapping estimator for white
/// frequency noise, floored at 1. Other noise types use the same formula.
pub fn white_fm_edf(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    let edf =
        (3.0 * (n - 1.0) / (2.0 * m) - 2.0 * (n - 2.0) / n) * 4.0 * m * m / (4.0 * m * m + 5.0);
    edf.max(1.0)
}

/// Overlapping Allan deviation at each requested τ with a 68 % confidence
/// interval from the χ² distribution.
pub fn allan_deviation(series: &FrequencyTimeSeries, taus: &[f64]) -> Result<Vec<AdevPoint>> {
    let y = &series.samples;
    let n = y.len();
    // Window sums come from a running sum of deviations from the first
    // sample, which keeps a constant series exactly zero.
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in y {
        cum.push(cum.last().copied().unwrap_or(0.0) + (v - y[0]));
    }
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let ratio = tau / series.tau0;
        let m = ratio.round();
        if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio {
            return Err(Error::input(format!(
                "tau = {tau} s is not a positive integer multiple of {} s",
                series.tau0
            )));
        }
        let m = m as usize;
        if 2 * m > n || tau > series.span() / 2.0 {
            return Err(Error::input(format!(
                "tau = {tau} s leaves fewer than 2 averaging bins in {n} samples"
            )));
        }
        let avg = |j: usize| (cum[j + m] - cum[j]) / m as f64;
        let terms = n - 2 * m + 1;
        let s: f64 = (0..terms).map(|j| (avg(j + m) - avg(j)).powi(2)).sum();
        let adev = (s / (2.0 * terms as f64)).sqrt();
        let edf = white_fm_edf(n, m);
        let chi2 = ChiSquared::new(edf).map_err(|e| Error::input(e.to_string()))?;
        let ci_low = adev * (edf / chi2.inverse_cdf(CI_TAILS.1)).sqrt();
        let ci_high = adev * (edf / chi2.inverse_cdf(CI_TAILS.0)).sqrt();
        out.push(AdevPoint {
            tau,
            adev,
            ci_low,
            ci_high,
            m,
            edf,
        });
    }
    Ok(out)
}

/// All τ = 2^k·τ₀ up to half the span.
pub fn octave_taus(series: &FrequencyTimeSeries) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while 2 * m <= series.samples.len() {
        out.push(m as f64 * series.tau0);
        m *= 2;
    }
    out
}

pub fn adev_to_csv(points: &[AdevPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tau_s", "adev", "ci_low", "ci_high"])?;
    for p in points {
        w.write_record([p.tau, p.adev, p.ci_low, p.ci_high].map(|x| x.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const C: f64 = 299_792_458.0;

    fn laser(n: u64, f_beat: f64) -> CombLaser {
        CombLaser {
            n,
            f_beat,
            beat_sign: Sign::Plus,
            ceo_sign: Sign::Plus,
        }
    }

    #[test]
    fn single_laser() {
        let comb = CombParams {
            f_rep: 100e6,
            f_ceo: 0.0,
            lasers: vec![laser(2_540_000, 0.0)],
        };
        let f = laser_frequency(&comb, 0).unwrap();
        assert_eq!(f, 254e12);
        assert!((C / f - 1.18e-6).abs() < 0.005e-6);

        let mut flipped = comb.clone();
        flipped.lasers[0].f_beat = 30e6;
        let plus = laser_frequency(&flipped, 0).unwrap();
        flipped.lasers[0].beat_sign = Sign::Minus;
        assert_eq!(plus - laser_frequency(&flipped, 0).unwrap(), 60e6);

        let mut ceo = comb.clone();
        ceo.f_ceo = 20e6;
        assert_eq!(laser_frequency(&ceo, 0).unwrap() - f, 20e6);
        assert!(laser_frequency(&comb, 3).is_err());
    }

    #[test]
    fn dfg_of_equal_lasers_is_zero() {
        let comb = CombParams {
            f_rep: 250e6,
            f_ceo: 20e6,
            lasers: vec![laser(1_000_000, 12e6), laser(1_000_000, 12e6)],
        };
        assert_eq!(dfg_frequency(&comb).unwrap(), 0.0);
    }

    #[test]
    fn dfg_mid_infrared() {
        let f_rep = 250e6;
        let n1 = (C / 1.18e-6 / f_rep).round() as u64;
        let n2 = (C / 1.54e-6 / f_rep).round() as u64;
        let comb = CombParams {
            f_rep,
            f_ceo: -35e6,
            lasers: vec![laser(n1, 21e6), laser(n2, 17e6)],
        };
        let f0 = dfg_frequency(&comb).unwrap();
        let direct = laser_frequency(&comb, 0).unwrap() - laser_frequency(&comb, 1).unwrap();
        assert!((f0 - direct).abs() < 0.1);
        assert!((C / f0 - 5.1e-6).abs() < 0.1e-6);
    }

    #[test]
    fn dfg_rejects_mixed_ceo_signs() {
        let mut l2 = laser(5, 1.0);
        l2.ceo_sign = Sign::Minus;
        let comb = CombParams {
            f_rep: 1e8,
            f_ceo: 1e6,
            lasers: vec![laser(10, 1.0), l2],
        };
        assert!(dfg_frequency(&comb).unwrap_err().is_config());
    }

    #[test]
    fn maser_correction() {
        let f = 58.6e12;
        assert_eq!(maser_correct(f, 0.0).unwrap(), f);
        assert!((maser_correct(f, 1e-13).unwrap() - f + 5.86).abs() < 0.01);
        let back = maser_correct(maser_correct(f, 3e-13).unwrap(), -3e-13).unwrap();
        assert!(((back - f) / f).abs() < 1e-22 + f64::EPSILON);
        assert!(maser_correct(f, 2e-9).is_err());
    }

    #[test]
    fn constant_series_has_zero_adev() {
        let s = FrequencyTimeSeries::new(1.0, vec![3e-13; 64]).unwrap();
        for p in allan_deviation(&s, &octave_taus(&s)).unwrap() {
            assert_eq!(p.adev, 0.0);
        }
    }

    #[test]
    fn linear_drift_closed_form() {
        let d = 2e-16;
        let tau0 = 2.0;
        let s = FrequencyTimeSeries::new(tau0, (0..500).map(|i| d * i as f64 * tau0).collect())
            .unwrap();
        for p in allan_deviation(&s, &[2.0, 20.0, 200.0]).unwrap() {
            let expected = d * p.tau / 2f64.sqrt();
            assert!(
                ((p.adev - expected) / expected).abs() < 1e-9,
                "{} vs {}",
                p.adev,
                expected
            );
        }
    }

    #[test]
    fn observed_drift_scale() {
        let d = 0.1 / 60.0 / 58.6e12;
        let s = FrequencyTimeSeries::new(1.0, (0..1000).map(|i| d * i as f64).collect()).unwrap();
        let p = allan_deviation(&s, &[100.0]).unwrap()[0];
        assert!((p.adev - 2.0e-15).abs() < 0.05e-15);
    }

    #[test]
    fn white_fm_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 1e-13).unwrap();
        let s =
            FrequencyTimeSeries::new(1.0, (0..10_000).map(|_| noise.sample(&mut rng)).collect())
                .unwrap();
        let p = allan_deviation(&s, &[1.0, 10.0]).unwrap();
        let slope = (p[1].adev / p[0].adev).log10();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
        assert!(p[1].ci_low < p[1].adev && p[1].adev < p[1].ci_high);
    }

    #[test]
    fn invalid_taus() {
        let s = FrequencyTimeSeries::new(1.0, vec![0.0; 10]).unwrap();
        assert!(allan_deviation(&s, &[1.5]).is_err());
        assert!(allan_deviation(&s, &[6.0]).is_err());
        assert!(allan_deviation(&s, &[0.0]).is_err());
        assert!(FrequencyTimeSeries::new(1.0, vec![1.0]).is_err());
    }

    #[test]
    fn counter_log() {
        let s = parse_counter_log("t_s,f_hz\n0,100.0\n1,101.0\n2,99.0\n", "m", 100.0).unwrap();
        assert_eq!(s.tau0, 1.0);
        assert_eq!(s.samples, vec![0.0, 0.01, -0.01]);
        assert!(parse_counter_log("t_s,f_hz\n0,1\n1,1\n3,1\n", "m", 1.0).is_err());
        let csv = adev_to_csv(&allan_deviation(&s, &[1.0]).unwrap()).unwrap();
        assert!(csv.starts_with("tau_s,adev,ci_low,ci_high\n"));
    }

    proptest! {
        #[test]
        fn ceo_cancels_exactly(f_ceo in -1e9..1e9f64, delta in -1e8..1e8f64, b1 in -1e8..1e8f64, b2 in -1e8..1e8f64) {
            let mut comb = CombParams {
                f_rep: 250e6,
                f_ceo,
                lasers: vec![laser(1_016_000, b1), laser(778_000, b2)],
            };
            let a = dfg_frequency(&comb).unwrap();
            comb.f_ceo += delta;
            prop_assert_eq!(a.to_bits(), dfg_frequency(&comb).unwrap().to_bits());
        }

        #[test]
        fn adev_scales_with_series(c in -1e3..1e3f64, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 1.0).unwrap();
            let y: Vec<f64> = (0..64).map(|_| noise.sample(&mut rng)).collect();
            let a = FrequencyTimeSeries::new(1.0, y.clone()).unwrap();
            let b = FrequencyTimeSeries::new(1.0, y.iter().map(|v| c * v).collect()).unwrap();
            let pa = allan_deviation(&a, &[1.0, 4.0, 16.0]).unwrap();
            let pb = allan_deviation(&b, &[1.0, 4.0, 16.0]).unwrap();
            for (x, z) in pa.iter().zip(&pb) {
                prop_assert!((z.adev - c.abs() * x.adev).abs() <= 1e-12 * z.adev.max(1e-300));
            }
        }
    }
}
