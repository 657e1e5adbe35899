//! Trial files on disk and the standing-phase calibration.
//!
//! A trial is a CSV file with header
//! `t,placement,ax,ay,az,gx,gy,gz,mx,my,mz` (seconds, placement name, m/s²,
//! °/s, gauss) plus a JSON sidecar carrying the subject metadata, the sample
//! rate and the calibration window in seconds.
//!
//! Sensors are expected to be mounted with their y axis along the body's
//! medio-lateral axis (pointing left), z along the segment towards the
//! proximal end and x anterior. Small tilts of the mount are absorbed by
//! [`calibrate`].

mod calibration;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use calibration::{
    calibrate, CalibrationOffsets, PlacementCalibration, MIN_CALIBRATION_SECONDS,
    STATIONARY_GYRO_DPS,
};
pub(crate) use calibration::sagittal_inclination_deg;
pub use manifest::{CohortManifest, ManifestEntry, Split, TrialRef};

use crate::error::{Error, Result};
use crate::model::{Gender, Group, ImuSample, SensorPlacement, SubjectMeta, TrialRecording, Vector3};
use crate::scalar::Real;

pub const CSV_HEADER: [&str; 11] = [
    "t", "placement", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz",
];

/// Longest run of missing samples that is filled by linear interpolation.
pub const MAX_INTERPOLATED_GAP: usize = 3;

/// JSON sidecar next to every trial CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub group: Group,
    pub age: f64,
    pub weight_kg: f64,
    pub gender: Gender,
    pub days_post_op: Option<u32>,
    pub sample_rate_hz: f64,
    pub calibration_window: [f64; 2],
}

impl Sidecar {
    pub fn subject(&self) -> SubjectMeta {
        SubjectMeta {
            id: self.subject_id.clone(),
            group: self.group,
            age: self.age,
            weight: self.weight_kg,
            gender: self.gender,
            days_post_op: self.days_post_op,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Loads and validates a trial. `meta` overrides the subject fields of the
/// sidecar when given.
pub fn load_trial<T: Real>(
    csv_path: &Path,
    sidecar_path: &Path,
    meta: Option<SubjectMeta>,
) -> Result<TrialRecording<T>> {
    let sidecar = Sidecar::read(sidecar_path)?;
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let subject = meta.unwrap_or_else(|| sidecar.subject());
    parse_trial(&text, &csv_path.display().to_string(), &sidecar, subject)
}

/// Parses trial CSV text. `origin` labels parse errors.
pub fn parse_trial<T: Real>(
    text: &str,
    origin: &str,
    sidecar: &Sidecar,
    subject: SubjectMeta,
) -> Result<TrialRecording<T>> {
    let rate = sidecar.sample_rate_hz;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Schema(format!("sample_rate_hz {rate} must be positive")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "{origin}: header must be {}",
            CSV_HEADER.join(",")
        )));
    }

    let mut raw: BTreeMap<SensorPlacement, Vec<ImuSample<f64>>> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Parse {
            location: format!("{origin}:{line}"),
            message: e.to_string(),
        })?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                location: format!("{origin}:{line}"),
                message: format!("{} fields, expected {}", record.len(), CSV_HEADER.len()),
            });
        }
        let placement: SensorPlacement = record[1].trim().parse().map_err(|_| Error::Parse {
            location: format!("{origin}:{line}"),
            message: format!("unknown placement {:?}", &record[1]),
        })?;
        let mut vals = [0.0f64; 10];
        for (k, slot) in vals.iter_mut().enumerate() {
            let field = if k == 0 { &record[0] } else { &record[k + 1] };
            *slot = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                location: format!("{origin}:{line}"),
                message: format!("column {}: {e}", CSV_HEADER[if k == 0 { 0 } else { k + 1 }]),
            })?;
        }
        raw.entry(placement).or_default().push(ImuSample {
            t: vals[0],
            accel: Vector3::new(vals[1], vals[2], vals[3]),
            gyro: Vector3::new(vals[4], vals[5], vals[6]),
            mag: Vector3::new(vals[7], vals[8], vals[9]),
        });
    }

    let mut filled: Vec<Vec<ImuSample<f64>>> = Vec::with_capacity(7);
    for p in SensorPlacement::ALL {
        let stream = raw
            .remove(&p)
            .ok_or_else(|| Error::Schema(format!("{origin}: missing placement {p}")))?;
        filled.push(fill_gaps(p, stream, rate)?);
    }
    let aligned = align_streams(filled, rate)?;

    let times: Vec<f64> = aligned[SensorPlacement::Pelvis.index()]
        .iter()
        .map(|s| s.t)
        .collect();
    let window = window_indices(&times, sidecar.calibration_window, rate)?;
    let streams = aligned.map(|s| s.into_iter().map(convert_sample::<T>).collect());
    TrialRecording::new(subject, streams, T::lit(rate), window)
}

fn convert_sample<T: Real>(s: ImuSample<f64>) -> ImuSample<T> {
    let v = |v: Vector3<f64>| v.to_array().map(T::lit).into();
    ImuSample {
        t: T::lit(s.t),
        accel: v(s.accel),
        gyro: v(s.gyro),
        mag: v(s.mag),
    }
}

/// Linearly interpolates runs of up to [`MAX_INTERPOLATED_GAP`] missing samples.
fn fill_gaps(
    placement: SensorPlacement,
    stream: Vec<ImuSample<f64>>,
    rate: f64,
) -> Result<Vec<ImuSample<f64>>> {
    let period = rate.recip();
    let mut out = Vec::with_capacity(stream.len());
    for (i, s) in stream.iter().enumerate() {
        if i > 0 {
            let prev = stream[i - 1];
            let dt = s.t - prev.t;
            if dt <= 0.0 {
                return Err(Error::Sync {
                    placement,
                    message: format!("timestamps not strictly increasing at row {i}"),
                });
            }
            let steps = (dt * rate).round();
            if steps < 1.0 {
                return Err(Error::Sync {
                    placement,
                    message: format!("sample spacing {dt} s below the sample period"),
                });
            }
            let missing = steps as usize - 1;
            if missing > MAX_INTERPOLATED_GAP {
                return Err(Error::Sync {
                    placement,
                    message: format!("gap of {missing} samples at t = {}", prev.t),
                });
            }
            for k in 1..=missing {
                let a = k as f64 / steps;
                let lerp = |p: Vector3<f64>, q: Vector3<f64>| p + (q - p) * a;
                out.push(ImuSample {
                    t: prev.t + k as f64 * period,
                    accel: lerp(prev.accel, s.accel),
                    gyro: lerp(prev.gyro, s.gyro),
                    mag: lerp(prev.mag, s.mag),
                });
            }
        }
        out.push(*s);
    }
    Ok(out)
}

/// Puts all streams on the pelvis time grid by nearest timestamp. Samples
/// keep their own timestamps; any sample more than half a period away from
/// its grid point is a synchronization error.
fn align_streams(streams: Vec<Vec<ImuSample<f64>>>, rate: f64) -> Result<[Vec<ImuSample<f64>>; 7]> {
    let period = rate.recip();
    let half = 0.5 * period + 1e-9;
    let reference = &streams[SensorPlacement::Pelvis.index()];
    let t0 = reference[0].t;

    let mut offsets = [0usize; 7];
    for p in SensorPlacement::ALL {
        let s = &streams[p.index()];
        let (j, d) = s
            .iter()
            .enumerate()
            .map(|(j, x)| (j, (x.t - t0).abs()))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        if d > half {
            return Err(Error::Sync {
                placement: p,
                message: format!("no sample within half a period of t = {t0}"),
            });
        }
        offsets[p.index()] = j;
    }
    let len = SensorPlacement::ALL
        .iter()
        .map(|p| streams[p.index()].len() - offsets[p.index()])
        .min()
        .unwrap_or(0);

    let mut out: [Vec<ImuSample<f64>>; 7] = Default::default();
    for p in SensorPlacement::ALL {
        let s = &streams[p.index()][offsets[p.index()]..offsets[p.index()] + len];
        for (k, x) in s.iter().enumerate() {
            let grid = t0 + k as f64 * period;
            if (x.t - grid).abs() > half {
                return Err(Error::Sync {
                    placement: p,
                    message: format!("sample at t = {} drifted from grid time {grid}", x.t),
                });
            }
        }
        out[p.index()] = s.to_vec();
    }
    Ok(out)
}

fn window_indices(times: &[f64], window: [f64; 2], rate: f64) -> Result<(usize, usize)> {
    let half = 0.5 / rate;
    let [start_s, end_s] = window;
    if !(start_s.is_finite() && end_s.is_finite() && start_s <= end_s) {
        return Err(Error::Schema(format!(
            "calibration_window {window:?} is not an increasing pair"
        )));
    }
    let start = times.iter().position(|&t| t >= start_s - half);
    let end = times.iter().rposition(|&t| t <= end_s + half).map(|i| i + 1);
    match (start, end) {
        (Some(s), Some(e)) if s < e => Ok((s, e)),
        _ => Err(Error::Schema(format!(
            "calibration_window {window:?} selects no samples"
        ))),
    }
}

/// Sidecar describing `trial`.
pub fn sidecar_for<T: Real>(trial: &TrialRecording<T>) -> Sidecar {
    let m = trial.subject();
    let times = trial.times();
    let (s, e) = trial.calibration_window();
    Sidecar {
        subject_id: m.id.clone(),
        group: m.group,
        age: m.age,
        weight_kg: m.weight,
        gender: m.gender,
        days_post_op: m.days_post_op,
        sample_rate_hz: trial.sample_rate().as_f64(),
        calibration_window: [times[s].as_f64(), times[e - 1].as_f64()],
    }
}

/// Trial CSV text, rows ordered by sample index then placement.
pub fn trial_csv<T: Real>(trial: &TrialRecording<T>) -> String {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(trial.len() * 7 * 80);
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for i in 0..trial.len() {
        for p in SensorPlacement::ALL {
            let s = &trial.stream(p)[i];
            let _ = write!(out, "{},{}", s.t.as_f64(), p.name());
            for v in [s.accel, s.gyro, s.mag] {
                for c in v.to_array() {
                    let _ = write!(out, ",{}", c.as_f64());
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Writes the trial CSV and its sidecar.
pub fn save_trial<T: Real>(
    trial: &TrialRecording<T>,
    csv_path: &Path,
    sidecar_path: &Path,
) -> Result<()> {
    write_atomic(csv_path, trial_csv(trial).as_bytes())?;
    let json = serde_json::to_string_pretty(&sidecar_for(trial))?;
    write_atomic(sidecar_path, json.as_bytes())
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".tmp".into());
    tmp.set_file_name(name);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sidecar() -> Sidecar {
        Sidecar {
            subject_id: "c01".into(),
            group: Group::Control,
            age: 33.0,
            weight_kg: 71.5,
            gender: Gender::Male,
            days_post_op: None,
            sample_rate_hz: 100.0,
            calibration_window: [0.0, 1.49],
        }
    }

    fn csv_text(n: usize, skip: &[(SensorPlacement, usize)], shift: f64) -> String {
        let mut s = CSV_HEADER.join(",") + "\n";
        for i in 0..n {
            for p in SensorPlacement::ALL {
                if skip.contains(&(p, i)) {
                    continue;
                }
                let t = i as f64 / 100.0 + if p == SensorPlacement::LeftFoot { shift } else { 0.0 };
                s += &format!("{t},{},0,0,9.81,{},0,0,0.2,0,-0.4\n", p.name(), i as f64 * 0.01);
            }
        }
        s
    }

    #[test]
    fn parses_well_formed_trial() {
        let t: TrialRecording<f64> =
            parse_trial(&csv_text(300, &[], 0.0), "mem", &sidecar(), sidecar().subject()).unwrap();
        assert_eq!(t.len(), 300);
        assert_eq!(t.calibration_window(), (0, 150));
        assert_eq!(t.walking_range(), 150..300);
    }

    #[test]
    fn missing_pelvis_is_schema_error() {
        let text: String = csv_text(300, &[], 0.0)
            .lines()
            .filter(|l| !l.contains("Pelvis"))
            .map(|l| format!("{l}\n"))
            .collect();
        let r: Result<TrialRecording<f64>> = parse_trial(&text, "mem", &sidecar(), sidecar().subject());
        assert!(matches!(r, Err(Error::Schema(m)) if m.contains("Pelvis")));
    }

    #[test]
    fn malformed_row_is_parse_error() {
        let text = csv_text(300, &[], 0.0).replacen("0,0,9.81", "0,zero,9.81", 1);
        let r: Result<TrialRecording<f64>> = parse_trial(&text, "mem", &sidecar(), sidecar().subject());
        assert!(matches!(r, Err(Error::Parse { location, .. }) if location == "mem:2"));
    }

    #[test]
    fn short_gaps_are_interpolated() {
        let skip = [
            (SensorPlacement::RightShank, 200),
            (SensorPlacement::RightShank, 201),
            (SensorPlacement::RightShank, 202),
        ];
        let t: TrialRecording<f64> =
            parse_trial(&csv_text(300, &skip, 0.0), "mem", &sidecar(), sidecar().subject()).unwrap();
        let s = t.stream(SensorPlacement::RightShank);
        assert_eq!(s.len(), 300);
        assert!((s[201].gyro.x - 2.01).abs() < 1e-9);
        assert!((s[201].t - 2.01).abs() < 1e-9);
    }

    #[test]
    fn long_gap_is_sync_error() {
        let skip: Vec<_> = (200..204).map(|i| (SensorPlacement::RightShank, i)).collect();
        let r: Result<TrialRecording<f64>> =
            parse_trial(&csv_text(300, &skip, 0.0), "mem", &sidecar(), sidecar().subject());
        assert!(matches!(r, Err(Error::Sync { placement: SensorPlacement::RightShank, .. })));
    }

    #[test]
    fn small_offsets_align_large_offsets_fail() {
        let ok: Result<TrialRecording<f64>> =
            parse_trial(&csv_text(300, &[], 0.004), "mem", &sidecar(), sidecar().subject());
        assert!(ok.is_ok());
        let bad: Result<TrialRecording<f64>> =
            parse_trial(&csv_text(300, &[], 0.007), "mem", &sidecar(), sidecar().subject());
        assert!(matches!(bad, Err(Error::Sync { .. })));
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let text = csv_text(10, &[], 0.0).replacen("mz", "mq", 1);
        let r: Result<TrialRecording<f64>> = parse_trial(&text, "mem", &sidecar(), sidecar().subject());
        assert!(matches!(r, Err(Error::Schema(_))));
    }
}
