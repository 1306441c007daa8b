//! FFT-based band power, zero-phase Butterworth band-pass filtering and the
//! analytic signal.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::BandDef;
use crate::error::{Error, Result};

pub const MAX_BUTTERWORTH_ORDER: u32 = 20;
pub const DEFAULT_BUTTERWORTH_ORDER: u32 = 4;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform(buf: &mut [Complex<f64>], inverse: bool) {
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    fft.process(buf);
}

/// Unnormalized DFT `X[k] = Σ x[n] e^{-2πikn/N}`.
pub fn dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    transform(&mut buf, false);
    buf
}

/// Inverse of [`dft`], including the `1/N` factor.
pub fn inverse_dft(spectrum: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut buf = spectrum.to_vec();
    transform(&mut buf, true);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Frequency in Hz of DFT bin `k` (folded to `[0, fs/2]`).
fn bin_frequency(k: usize, len: usize, fs: f64) -> f64 {
    k.min(len - k) as f64 * fs / len as f64
}

/// One-sided power spectrum `P[k]`, `k = 0..=W/2`, scaled so that
/// `Σ P[k] = Σ x[n]²`.
pub fn one_sided_power(segment: &[f64]) -> Vec<f64> {
    let w = segment.len();
    let spectrum = dft(segment);
    let half = w / 2;
    (0..=half)
        .map(|k| {
            let p = spectrum[k].norm_sqr() / w as f64;
            let mirrored = k != 0 && !(w.is_multiple_of(2) && k == half);
            if mirrored {
                2.0 * p
            } else {
                p
            }
        })
        .collect()
}

fn check_bands(bands: &[BandDef], fs: f64) -> Result<()> {
    for band in bands {
        band.validate(fs)?;
    }
    Ok(())
}

/// Power per band: one-sided bins whose frequency `k·fs/W` lies in
/// `[low, high)`, the last band in `bands` also including its upper edge.
pub fn band_power_psd(segment: &[f64], fs: f64, bands: &[BandDef]) -> Result<Vec<f64>> {
    if segment.len() < 2 {
        return Err(Error::InvalidSignal("segment needs at least 2 samples".into()));
    }
    check_bands(bands, fs)?;
    let power = one_sided_power(segment);
    let w = segment.len() as f64;
    let last = bands.len().saturating_sub(1);
    Ok(bands
        .iter()
        .enumerate()
        .map(|(b, band)| {
            power
                .iter()
                .enumerate()
                .filter(|&(k, _)| {
                    let f = k as f64 * fs / w;
                    f >= band.low_hz && (f < band.high_hz || (b == last && f == band.high_hz))
                })
                .map(|(_, p)| p)
                .sum()
        })
        .collect())
}

fn check_order(order: u32) -> Result<()> {
    if order == 0 || order > MAX_BUTTERWORTH_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Butterworth order must lie in 1..={MAX_BUTTERWORTH_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Low-pass prototype `|H(ω)|² = 1 / (1 + (ω/ω_c)^{2n})`.
pub fn lowpass_gain_sq(freq: f64, cutoff: f64, order: u32) -> f64 {
    1.0 / (1.0 + (freq / cutoff).powi(2 * order as i32))
}

/// Band-pass squared magnitude: the low-pass prototype evaluated at the
/// band-pass frequency map `Ω = (f² - f_l f_h) / (f (f_h - f_l))`, which sends
/// both band edges to `|Ω| = 1` and DC to infinity.
pub fn bandpass_gain_sq(freq: f64, band: &BandDef, order: u32) -> f64 {
    let f = freq.abs();
    if f == 0.0 {
        return 0.0;
    }
    let omega = (f * f - band.low_hz * band.high_hz) / (f * (band.high_hz - band.low_hz));
    lowpass_gain_sq(omega, 1.0, order)
}

/// Zero-phase Butterworth band-pass: scales each DFT bin by the real gain
/// `sqrt(bandpass_gain_sq)` and transforms back.
pub fn butterworth_bandpass(channel: &[f64], fs: f64, band: &BandDef, order: u32) -> Result<Vec<f64>> {
    check_order(order)?;
    band.validate(fs)?;
    if channel.is_empty() {
        return Err(Error::InvalidSignal("empty channel".into()));
    }
    let n = channel.len();
    let mut spectrum = dft(channel);
    for (k, bin) in spectrum.iter_mut().enumerate() {
        *bin *= bandpass_gain_sq(bin_frequency(k, n, fs), band, order).sqrt();
    }
    Ok(inverse_dft(&spectrum).into_iter().map(|c| c.re).collect())
}

/// Analytic signal: DFT, zero negative frequencies, double positive ones
/// (DC and Nyquist kept), inverse DFT.
pub fn analytic_signal(signal: &[f64]) -> Vec<Complex<f64>> {
    let n = signal.len();
    let mut spectrum = dft(signal);
    let half = n / 2;
    for (k, bin) in spectrum.iter_mut().enumerate() {
        let factor = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *bin *= factor;
    }
    inverse_dft(&spectrum)
}

/// Instantaneous phase of the analytic signal.
pub fn instantaneous_phase(signal: &[f64]) -> Vec<f64> {
    analytic_signal(signal).iter().map(|c| c.arg()).collect()
}
