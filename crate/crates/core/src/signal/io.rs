//! Trial signal files and a synthetic trial generator.
//!
//! CSV: a header `fs=<Hz>,pretrial=<s>,channels=<C>` followed by one
//! comma-separated row per channel. Binary: little-endian `u32 C`, `u32 T`,
//! `f64 fs`, `f64 pretrial`, then `C·T` `f64` samples, channel by channel.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Band, BandDef, TrialSignal};
use crate::error::{Error, Result};

const BINARY_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Binary,
}

impl SignalFormat {
    /// `.bin` and `.dat` are binary, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("bin") | Some("dat") => SignalFormat::Binary,
            _ => SignalFormat::Csv,
        }
    }
}

fn parse_error(line: usize, offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { location: format!("line {line} (byte offset {offset})"), message: message.into() }
}

fn io_error(e: std::io::Error) -> Error {
    Error::Parse { location: "input".into(), message: e.to_string() }
}

fn parse_header(text: &str, offset: usize) -> Result<(f64, f64, usize)> {
    let mut fs = None;
    let mut pretrial = None;
    let mut channels = None;
    for field in text.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_error(1, offset, format!("header field '{field}' is not key=value")))?;
        let bad = |what: &str| parse_error(1, offset, format!("invalid {what} '{value}'"));
        match key.trim() {
            "fs" => fs = Some(value.trim().parse::<f64>().map_err(|_| bad("fs"))?),
            "pretrial" => pretrial = Some(value.trim().parse::<f64>().map_err(|_| bad("pretrial"))?),
            "channels" => channels = Some(value.trim().parse::<usize>().map_err(|_| bad("channel count"))?),
            other => return Err(parse_error(1, offset, format!("unknown header key '{other}'"))),
        }
    }
    match (fs, pretrial, channels) {
        (Some(f), Some(p), Some(c)) => Ok((f, p, c)),
        _ => Err(parse_error(1, offset, "header must give fs, pretrial and channels")),
    }
}

pub fn read_signal_csv<R: BufRead>(mut input: R) -> Result<TrialSignal> {
    let mut line = String::new();
    let mut offset = 0;
    let n = input.read_line(&mut line).map_err(io_error)?;
    if n == 0 {
        return Err(parse_error(1, 0, "empty signal file"));
    }
    let (fs, pretrial, n_channels) = parse_header(line.trim_end(), 0)?;
    offset += n;

    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(n_channels);
    let mut line_no = 1;
    loop {
        line.clear();
        let n = input.read_line(&mut line).map_err(io_error)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let text = line.trim_end();
        if text.is_empty() {
            offset += n;
            continue;
        }
        let mut row = Vec::new();
        let mut col_offset = offset;
        for cell in text.split(',') {
            let value: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_error(line_no, col_offset, format!("invalid sample '{cell}'")))?;
            row.push(value);
            col_offset += cell.len() + 1;
        }
        if let Some(first) = channels.first() {
            if row.len() != first.len() {
                return Err(parse_error(
                    line_no,
                    offset,
                    format!("channel has {} samples, expected {}", row.len(), first.len()),
                ));
            }
        }
        channels.push(row);
        offset += n;
    }
    if channels.len() != n_channels {
        return Err(parse_error(
            line_no,
            offset,
            format!("header declares {n_channels} channels, found {}", channels.len()),
        ));
    }
    TrialSignal::from_channels(&channels, fs, pretrial)
}

pub fn write_signal_csv<W: Write>(trial: &TrialSignal, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "fs={:?},pretrial={:?},channels={}",
        trial.sampling_rate(),
        trial.pretrial_seconds(),
        trial.n_channels()
    )?;
    for row in trial.samples().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn binary_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { location: format!("byte offset {offset}"), message: message.into() }
}

pub fn read_signal_binary(bytes: &[u8]) -> Result<TrialSignal> {
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(binary_error(bytes.len(), format!("header needs {BINARY_HEADER_LEN} bytes")));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let (c, t) = (u32_at(0), u32_at(4));
    let (fs, pretrial) = (f64_at(8), f64_at(16));
    if c == 0 {
        return Err(binary_error(0, "channel count is zero"));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(binary_error(8, format!("invalid sampling rate {fs}")));
    }
    if !(pretrial.is_finite() && pretrial >= 0.0) {
        return Err(binary_error(16, format!("invalid pretrial seconds {pretrial}")));
    }
    let expected = c
        .checked_mul(t)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(BINARY_HEADER_LEN))
        .ok_or_else(|| binary_error(0, "declared size overflows"))?;
    if bytes.len() != expected {
        return Err(binary_error(
            bytes.len().min(expected),
            format!("expected {expected} bytes for {c}x{t} samples, found {}", bytes.len()),
        ));
    }
    let samples = DMatrix::from_fn(c, t, |i, j| f64_at(BINARY_HEADER_LEN + 8 * (i * t + j)));
    if let Some(k) = samples.transpose().iter().position(|v| !v.is_finite()) {
        return Err(binary_error(BINARY_HEADER_LEN + 8 * k, "non-finite sample"));
    }
    TrialSignal::new(samples, fs, pretrial)
}

pub fn write_signal_binary<W: Write>(trial: &TrialSignal, mut out: W) -> std::io::Result<()> {
    let too_big = |_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32");
    out.write_all(&u32::try_from(trial.n_channels()).map_err(too_big)?.to_le_bytes())?;
    out.write_all(&u32::try_from(trial.n_samples()).map_err(too_big)?.to_le_bytes())?;
    out.write_all(&trial.sampling_rate().to_le_bytes())?;
    out.write_all(&trial.pretrial_seconds().to_le_bytes())?;
    for row in trial.samples().row_iter() {
        for v in row.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a trial, choosing the format from the file extension.
pub fn read_signal_file(path: &Path) -> Result<TrialSignal> {
    let located = |e: Error| match e {
        Error::Parse { location, message } => {
            Error::Parse { location: format!("{}: {location}", path.display()), message }
        }
        other => other,
    };
    let bytes = std::fs::read(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    match SignalFormat::from_path(path) {
        SignalFormat::Binary => read_signal_binary(&bytes),
        SignalFormat::Csv => read_signal_csv(bytes.as_slice()),
    }
    .map_err(located)
}

/// Noise plus one random-phase tone per default band on every channel;
/// `seconds` counts the samples after the pre-trial period.
pub fn synthetic_trial(n_channels: usize, fs: f64, pretrial: f64, seconds: f64, seed: u64) -> Result<TrialSignal> {
    synthetic_trial_with_gain(n_channels, fs, pretrial, seconds, 1.0, seed)
}

/// As [`synthetic_trial`], with the alpha tone amplitude multiplied by
/// `alpha_gain`.
pub fn synthetic_trial_with_gain(
    n_channels: usize,
    fs: f64,
    pretrial: f64,
    seconds: f64,
    alpha_gain: f64,
    seed: u64,
) -> Result<TrialSignal> {
    if n_channels == 0 || !(seconds > 0.0) || !(fs > 0.0) || !(pretrial >= 0.0) || !alpha_gain.is_finite() {
        return Err(Error::InvalidParameter("invalid synthetic trial shape".into()));
    }
    let t = ((pretrial + seconds) * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let tones: Vec<(f64, f64, f64)> = BandDef::defaults()
            .iter()
            .filter(|b| b.high_hz < fs / 2.0)
            .map(|b| {
                let freq = rng.random_range(b.low_hz..b.high_hz);
                let phase = rng.random_range(0.0..2.0 * PI);
                let amp = rng.random_range(0.5..2.0) * if b.name == Band::Alpha { alpha_gain } else { 1.0 };
                (freq, phase, amp)
            })
            .collect();
        let row: Vec<f64> = (0..t)
            .map(|i| {
                let time = i as f64 / fs;
                let noise: f64 = rng.sample(StandardNormal);
                tones.iter().map(|(f, p, a)| a * (2.0 * PI * f * time + p).sin()).sum::<f64>() + 0.5 * noise
            })
            .collect();
        channels.push(row);
    }
    TrialSignal::from_channels(&channels, fs, pretrial)
}
