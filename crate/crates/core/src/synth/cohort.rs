//! Cohorts of synthetic subjects with planted patient/control differences.

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{default_amplitude, generate_trial, GaitProfile, NoiseLevels};
use crate::error::{Error, Result};
use crate::ingest::{save_trial, CohortManifest, ManifestEntry, Split};
use crate::features::{FeatureTable, RowMeta};
use crate::model::{Gender, Group, JointId, SubjectMeta, TrialRecording};
use crate::pipeline::{trial_features, Mode, PipelineConfig};

/// Days after which a patient's gait is simulated as fully recovered.
pub const RECOVERY_HORIZON_DAYS: f64 = 180.0;

/// Mean and standard deviation of a gait parameter among controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub cadence: Spread,
    pub asymmetry: Spread,
    pub hip: Spread,
    pub knee: Spread,
    pub ankle: Spread,
}

impl Default for Population {
    fn default() -> Self {
        let amp = default_amplitude();
        Self {
            cadence: Spread { mean: 1.85, sd: 0.05 },
            asymmetry: Spread { mean: 0.02, sd: 0.01 },
            hip: Spread { mean: amp[0], sd: 1.5 },
            knee: Spread { mean: amp[2] - 6.0, sd: 2.0 },
            ankle: Spread { mean: amp[4], sd: 1.5 },
        }
    }
}

/// Patient deficit on each parameter in control standard deviations, at
/// day zero. Patients walk slower, more asymmetrically and with smaller
/// ranges of motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub cadence: f64,
    pub asymmetry: f64,
    pub hip: f64,
    pub knee: f64,
    pub ankle: f64,
}

impl Separation {
    pub const ZERO: Separation = Separation {
        cadence: 0.0,
        asymmetry: 0.0,
        hip: 0.0,
        knee: 0.0,
        ankle: 0.0,
    };

    pub fn uniform(sd: f64) -> Self {
        Self {
            cadence: sd,
            asymmetry: sd,
            hip: sd,
            knee: sd,
            ankle: sd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    /// `(patients, controls)` in the training split.
    pub train: (usize, usize),
    /// `(patients, controls)` in the test split.
    pub test: (usize, usize),
    pub trials_per_session: usize,
    /// Recording sessions per patient, spread evenly over `patient_days`.
    pub sessions_per_patient: usize,
    /// Inclusive range of days after the operation.
    pub patient_days: (u32, u32),
    pub population: Population,
    pub separation: Separation,
    /// Between-subject spread as a multiple of the population spread.
    pub subject_spread: f64,
    /// Trial-to-trial spread as a multiple of the population spread.
    pub trial_spread: f64,
    /// Standard deviation of the noise added to a session's recovery
    /// fraction.
    pub recovery_noise: f64,
    pub noise: NoiseLevels,
    pub walking_s: f64,
    pub seed: u64,
}

/// The standard cohort: 8 + 8 training and 7 + 7 test subjects, seven
/// trials each, patients 2 to 6 weeks after surgery.
pub fn standard_cohort(separation: Separation, seed: u64) -> CohortSpec {
    CohortSpec {
        train: (8, 8),
        test: (7, 7),
        trials_per_session: 7,
        sessions_per_patient: 1,
        patient_days: (14, 42),
        population: Population::default(),
        separation,
        subject_spread: 1.0,
        trial_spread: 0.3,
        recovery_noise: 0.0,
        noise: NoiseLevels::default(),
        walking_s: 8.0,
        seed,
    }
}

/// Test-split patients recorded repeatedly over six months of recovery.
pub fn recovery_cohort(seed: u64) -> CohortSpec {
    CohortSpec {
        train: (0, 0),
        test: (6, 0),
        trials_per_session: 7,
        sessions_per_patient: 6,
        patient_days: (14, 168),
        population: Population::default(),
        separation: Separation::uniform(4.0),
        subject_spread: 0.0,
        trial_spread: 0.0,
        recovery_noise: 0.1,
        noise: NoiseLevels::default(),
        walking_s: 8.0,
        seed,
    }
}

/// Separation of the standard "easy" cohort, in population standard
/// deviations.
pub const EASY_SEPARATION_SD: f64 = 4.0;

/// The named acceptance cohorts for one base seed: `standard` (easy
/// separation), `null` (no separation) and `recovery`, seeded `seed`,
/// `seed + 1` and `seed + 2`.
pub fn fixture_cohorts(seed: u64) -> [(&'static str, CohortSpec); 3] {
    [
        ("standard", standard_cohort(Separation::uniform(EASY_SEPARATION_SD), seed)),
        ("null", standard_cohort(Separation::ZERO, seed.wrapping_add(1))),
        ("recovery", recovery_cohort(seed.wrapping_add(2))),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    /// File stem, unique within the cohort.
    pub name: String,
    pub subject: SubjectMeta,
    pub split: Split,
    pub profile: GaitProfile,
    pub walking_s: f64,
}

impl PlannedTrial {
    pub fn generate(&self) -> Result<TrialRecording<f64>> {
        generate_trial(&self.profile, self.subject.clone(), self.walking_s).map(|(t, _)| t)
    }

    pub fn row_meta(&self, window: Option<usize>) -> RowMeta {
        RowMeta {
            subject_id: self.subject.id.clone(),
            group: self.subject.group,
            days_post_op: self.subject.days_post_op,
            split: Some(self.split),
            trial: self.name.clone(),
            window,
        }
    }

    /// Generates the trial and writes `<name>.csv` and `<name>.json` into
    /// `dir`.
    pub fn write(&self, dir: &Path) -> Result<ManifestEntry> {
        let (trial, _) = generate_trial(&self.profile, self.subject.clone(), self.walking_s)?;
        let csv = format!("{}.csv", self.name);
        let json = format!("{}.json", self.name);
        save_trial(&trial, &dir.join(&csv), &dir.join(&json))?;
        Ok(ManifestEntry {
            trial: csv,
            sidecar: json,
            split: self.split,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortPlan {
    pub spec: CohortSpec,
    pub trials: Vec<PlannedTrial>,
}

struct Subject {
    meta: SubjectMeta,
    split: Split,
    /// Standard-normal offsets per parameter.
    offsets: [f64; 5],
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let (tp, tc) = self.train;
        if (tp > 0 || tc > 0) && (tp < 2 || tc < 2) {
            return bad("the training split needs at least two subjects per group");
        }
        if tp + tc + self.test.0 + self.test.1 == 0 {
            return bad("cohort has no subjects");
        }
        if self.trials_per_session == 0 || self.sessions_per_patient == 0 {
            return bad("trials and sessions per subject must be positive");
        }
        if self.patient_days.0 > self.patient_days.1 {
            return bad("patient day range is reversed");
        }
        for v in [self.subject_spread, self.trial_spread, self.recovery_noise] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("spreads and noise must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// Draws every subject and trial profile. Deterministic in the seed.
    pub fn plan(&self) -> Result<CohortPlan> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let std = Normal::new(0.0_f64, 1.0).expect("unit normal");

        let mut subjects = Vec::new();
        let groups = [
            (Split::Train, Group::Patient, self.train.0),
            (Split::Train, Group::Control, self.train.1),
            (Split::Test, Group::Patient, self.test.0),
            (Split::Test, Group::Control, self.test.1),
        ];
        let (mut np, mut nc) = (0, 0);
        for (split, group, count) in groups {
            for _ in 0..count {
                let id = match group {
                    Group::Patient => {
                        np += 1;
                        format!("P{np:02}")
                    }
                    Group::Control => {
                        nc += 1;
                        format!("C{nc:02}")
                    }
                };
                let age = match group {
                    Group::Patient => 64.0 + 8.0 * std.sample(&mut rng),
                    Group::Control => 58.0 + 10.0 * std.sample(&mut rng),
                };
                let meta = SubjectMeta {
                    id,
                    group,
                    age: age.round().clamp(18.0, 95.0),
                    weight: (76.0 + 12.0 * std.sample(&mut rng)).round().clamp(40.0, 150.0),
                    gender: if rng.random_bool(0.5) {
                        Gender::Female
                    } else {
                        Gender::Male
                    },
                    days_post_op: None,
                };
                let offsets = std::array::from_fn(|_| std.sample(&mut rng));
                subjects.push(Subject {
                    meta,
                    split,
                    offsets,
                });
            }
        }

        let mut trials = Vec::new();
        for s in &subjects {
            let sessions = match s.meta.group {
                Group::Patient => self.session_days(&mut rng),
                Group::Control => vec![None],
            };
            let multi = sessions.len() > 1;
            for day in sessions {
                let fraction = day.map(|d| {
                    let base = 1.0 - f64::from(d) / RECOVERY_HORIZON_DAYS;
                    (base + self.recovery_noise * std.sample(&mut rng)).clamp(0.0, 1.0)
                });
                for k in 1..=self.trials_per_session {
                    let jitter: [f64; 5] = std::array::from_fn(|_| std.sample(&mut rng));
                    let profile = self.profile(s, fraction, day, &jitter, &mut rng);
                    let mut meta = s.meta.clone();
                    meta.days_post_op = day;
                    let name = match (multi, day) {
                        (true, Some(d)) => format!("{}_d{d:03}_t{k}", meta.id),
                        _ => format!("{}_t{k}", meta.id),
                    };
                    trials.push(PlannedTrial {
                        name,
                        subject: meta,
                        split: s.split,
                        profile,
                        walking_s: self.walking_s,
                    });
                }
            }
        }
        Ok(CohortPlan {
            spec: self.clone(),
            trials,
        })
    }

    fn session_days(&self, rng: &mut ChaCha8Rng) -> Vec<Option<u32>> {
        let (lo, hi) = self.patient_days;
        let n = self.sessions_per_patient;
        if n == 1 {
            return vec![Some(rng.random_range(lo..=hi))];
        }
        (0..n)
            .map(|i| {
                let d = f64::from(lo) + f64::from(hi - lo) * i as f64 / (n - 1) as f64;
                Some(d.round() as u32)
            })
            .collect()
    }

    fn profile(
        &self,
        s: &Subject,
        fraction: Option<f64>,
        day: Option<u32>,
        jitter: &[f64; 5],
        rng: &mut ChaCha8Rng,
    ) -> GaitProfile {
        let pop = &self.population;
        let sep = &self.separation;
        let f = fraction.unwrap_or(0.0);
        // Direction of the patient deficit: +1 raises the parameter.
        let param = |i: usize, sp: &Spread, deficit: f64, dir: f64| {
            sp.mean
                + dir * deficit * sp.sd * f
                + sp.sd * (self.subject_spread * s.offsets[i] + self.trial_spread * jitter[i])
        };
        let cadence = param(0, &pop.cadence, sep.cadence, -1.0).clamp(0.6, 2.4);
        let asymmetry = param(1, &pop.asymmetry, sep.asymmetry, 1.0).clamp(0.0, 0.5);
        let hip = param(2, &pop.hip, sep.hip, -1.0).clamp(5.0, 60.0);
        let knee = param(3, &pop.knee, sep.knee, -1.0).clamp(5.0, 75.0);
        let ankle = param(4, &pop.ankle, sep.ankle, -1.0).clamp(3.0, 45.0);
        let mut amplitude = [0.0; 6];
        for j in JointId::ALL {
            amplitude[j.index()] = match j {
                JointId::LeftHip | JointId::RightHip => hip,
                JointId::LeftKnee | JointId::RightKnee => knee,
                JointId::LeftAnkle | JointId::RightAnkle => ankle,
            };
        }
        GaitProfile {
            cadence,
            stride_asymmetry: asymmetry,
            amplitude,
            noise: self.noise,
            gyro_bias: std::array::from_fn(|_| rng.random_range(-0.5..0.5)),
            mount_tilt: std::array::from_fn(|_| rng.random_range(-8.0..8.0)),
            group: s.meta.group,
            recovery_day: day,
            start_phase: rng.random_range(0.0..1.0),
            seed: rng.random(),
        }
    }
}

impl CohortPlan {
    /// Generates every trial in memory and extracts its features.
    pub fn feature_table(&self, cfg: &PipelineConfig) -> Result<FeatureTable> {
        let mut table = FeatureTable::new(cfg.mode == Mode::Windowed);
        for t in &self.trials {
            let rows = trial_features(&t.generate()?, cfg)?;
            let windowed = rows.len() > 1 || cfg.mode == Mode::Windowed;
            for (w, values) in rows.iter().enumerate() {
                table.push(t.row_meta(windowed.then_some(w)), values)?;
            }
        }
        Ok(table)
    }

    /// Writes every trial and `manifest.json` into `dir`, sequentially.
    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let entries = self
            .trials
            .iter()
            .map(|t| t.write(dir))
            .collect::<Result<Vec<_>>>()?;
        let path = dir.join("manifest.json");
        CohortManifest::save(&entries, &path)?;
        Ok(path)
    }
}
