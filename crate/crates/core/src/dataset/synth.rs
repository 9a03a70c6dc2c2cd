//! Synthetic five-finger IMU gesture generator.
//!
//! Every gesture is a sum of Gaussian-windowed sinusoid bursts placed on the
//! accelerometer and gyroscope axes of each finger. Samples are grouped into
//! recording sessions (the trial id) that share a small channel bias, and
//! sessions are assigned round-robin to subjects that share a gain.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GestureDataset, SensorSpec, IMU_AXES};
use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

pub const FINGERS: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

const AX: usize = 0;
const AY: usize = 1;
const AZ: usize = 2;
const GX: usize = 3;
const GY: usize = 4;
const GZ: usize = 5;
const N_AXES: usize = IMU_AXES.len();

/// Fraction of a finger's motion that shows up on its anatomical neighbours.
const COUPLING: f64 = 0.4;

// rng stream ids, so that per-sample, per-session and per-subject draws never overlap
const STREAM_SAMPLE: u64 = 0;
const STREAM_SESSION: u64 = 1;
const STREAM_SUBJECT: u64 = 2;
const STREAM_ORDER: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vocabulary {
    /// Whole-hand gestures: every finger carries the same motion.
    Single,
    /// Finger-specific gestures.
    Multi,
}

impl Vocabulary {
    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Vocabulary::Single => vec![
                "null",
                "swipe_left",
                "swipe_right",
                "swipe_up",
                "swipe_down",
                "push",
                "pull",
                "circle_cw",
                "circle_ccw",
            ],
            Vocabulary::Multi => MULTI_CODES.iter().map(|(name, _)| *name).collect(),
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Vocabulary::Single => "single",
            Vocabulary::Multi => "multi",
        }
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Vocabulary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Vocabulary::Single),
            "multi" => Ok(Vocabulary::Multi),
            other => Err(Error::Usage(format!(
                "unknown vocabulary {other:?}, expected single or multi"
            ))),
        }
    }
}

/// Per-finger movement of a multi-vocabulary gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Movement {
    Rest,
    Flex,
    Extend,
    Wiggle,
}

use Movement::{Extend as E, Flex as F, Rest as R, Wiggle as W};

/// Thumb, index, middle, ring, pinky. Peace/metal and flick/flutter each
/// differ only in the ring finger. Neither peace nor metal moves the index or
/// its neighbours, so an index-only model sees them as rest. Grab and
/// pinch_away share the index motion, as do ungrab and pinch_closer.
pub const MULTI_CODES: [(&str, [Movement; 5]); 11] = [
    ("null", [R, R, R, R, R]),
    ("grab", [F, F, F, F, F]),
    ("ungrab", [E, E, E, E, E]),
    ("pinch_closer", [E, E, R, R, R]),
    ("pinch_away", [F, F, R, R, R]),
    ("peace", [F, R, R, W, E]),
    ("metal", [F, R, R, R, E]),
    ("beckon", [F, W, F, W, F]),
    ("wave", [W, W, W, W, W]),
    ("flick", [R, R, W, R, R]),
    ("flutter", [R, R, W, W, R]),
];

#[derive(Debug, Clone, Copy)]
struct Burst {
    axis: usize,
    amp: f64,
    /// Cycles per window.
    freq: f64,
    /// Centre offset from the sample's event time, in window units.
    offset: f64,
    /// Gaussian envelope width in window units.
    width: f64,
    phase: f64,
}

const fn burst(axis: usize, amp: f64, freq: f64, offset: f64, width: f64, phase: f64) -> Burst {
    Burst {
        axis,
        amp,
        freq,
        offset,
        width,
        phase,
    }
}

const EVEN: f64 = 0.0;
const ODD: f64 = PI / 2.0;

fn movement_bursts(m: Movement) -> Vec<Burst> {
    match m {
        Movement::Rest => vec![],
        Movement::Flex => vec![
            burst(AY, 1.0, 1.0, 0.0, 0.14, EVEN),
            burst(GX, 0.8, 1.0, 0.0, 0.14, ODD),
        ],
        Movement::Extend => vec![
            burst(AY, -1.0, 1.0, 0.0, 0.14, EVEN),
            burst(GX, -0.8, 1.0, 0.0, 0.14, ODD),
        ],
        Movement::Wiggle => vec![burst(AZ, 1.2, 3.0, 0.0, 0.2, EVEN), burst(GY, 1.0, 3.0, 0.0, 0.2, ODD)],
    }
}

fn single_template(class: usize) -> Vec<Burst> {
    let sign = if class % 2 == 1 { 1.0 } else { -1.0 };
    match class {
        0 => vec![],
        1 | 2 => vec![
            burst(AX, sign, 1.0, 0.0, 0.14, EVEN),
            burst(GZ, 0.8 * sign, 1.0, 0.0, 0.14, ODD),
        ],
        3 | 4 => vec![
            burst(AY, sign, 1.0, 0.0, 0.14, EVEN),
            burst(GX, 0.8 * sign, 1.0, 0.0, 0.14, ODD),
        ],
        5 | 6 => vec![
            burst(AZ, sign, 1.0, 0.0, 0.14, EVEN),
            burst(GY, 0.8 * sign, 1.0, 0.0, 0.14, ODD),
        ],
        7 | 8 => vec![
            burst(AX, 0.9, 1.0, -0.12, 0.1, EVEN),
            burst(AX, 0.9, 1.0, 0.12, 0.1, EVEN),
            burst(AY, sign, 1.0, 0.0, 0.18, ODD),
            burst(GZ, 0.8 * sign, 1.0, 0.0, 0.18, EVEN),
        ],
        _ => unreachable!("single vocabulary has 9 classes"),
    }
}

/// Weighted bursts per finger for `class`, before per-sample variation.
fn class_template(vocab: Vocabulary, class: usize) -> [Vec<(f64, Burst)>; 5] {
    let mut out: [Vec<(f64, Burst)>; 5] = Default::default();
    match vocab {
        Vocabulary::Single => {
            for finger in out.iter_mut() {
                finger.extend(single_template(class).into_iter().map(|b| (1.0, b)));
            }
        }
        Vocabulary::Multi => {
            let code = MULTI_CODES[class].1;
            for (f, slot) in out.iter_mut().enumerate() {
                slot.extend(movement_bursts(code[f]).into_iter().map(|b| (1.0, b)));
                // the thumb moves independently of the other fingers
                if f == 0 {
                    continue;
                }
                for n in [f - 1, f + 1] {
                    if (1..5).contains(&n) {
                        slot.extend(movement_bursts(code[n]).into_iter().map(|b| (COUPLING, b)));
                    }
                }
            }
        }
    }
    out
}

/// Knobs for [`generate_synthetic_with`]; [`GeneratorOptions::new`] fills the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    pub vocabulary: Vocabulary,
    pub n_samples: usize,
    pub window_length: usize,
    pub seed: u64,
    /// Samples per recording session; each session is one trial id.
    pub session_size: usize,
    pub n_subjects: usize,
    pub sample_rate_hz: f64,
    pub noise_std: f64,
    /// Peak amplitude of the slow per-channel drift.
    pub drift_amplitude: f64,
    /// Standard deviation of the per-session, per-channel offset.
    pub session_bias_std: f64,
}

impl GeneratorOptions {
    pub fn new(vocabulary: Vocabulary, n_samples: usize, window_length: usize, seed: u64) -> Self {
        GeneratorOptions {
            vocabulary,
            n_samples,
            window_length,
            seed,
            session_size: 20,
            n_subjects: 4,
            sample_rate_hz: 50.0,
            noise_std: 0.06,
            drift_amplitude: 0.12,
            session_bias_std: 0.03,
        }
    }

    fn gain(&self) -> f64 {
        match self.vocabulary {
            Vocabulary::Single => 2.0,
            Vocabulary::Multi => 2.5,
        }
    }
}

/// Balanced synthetic dataset with the default options.
pub fn generate_synthetic(
    vocabulary: Vocabulary,
    n_samples: usize,
    window_length: usize,
    seed: u64,
) -> Result<GestureDataset> {
    generate_synthetic_with(&GeneratorOptions::new(vocabulary, n_samples, window_length, seed))
}

fn rng_for(seed: u64, key: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key);
    rng.set_stream(stream);
    rng
}

struct Session {
    bias: Vec<f64>,
}

pub fn generate_synthetic_with(opts: &GeneratorOptions) -> Result<GestureDataset> {
    let vocab = opts.vocabulary;
    let c = vocab.n_classes();
    let (n, t) = (opts.n_samples, opts.window_length);
    if n < c {
        return Err(Error::Usage(format!(
            "need at least {c} samples for the {vocab} vocabulary, got {n}"
        )));
    }
    if t < 8 {
        return Err(Error::Usage(format!("window length must be at least 8, got {t}")));
    }
    if opts.session_size == 0 || opts.n_subjects == 0 {
        return Err(Error::Usage("session size and subject count must be positive".into()));
    }
    if !(opts.sample_rate_hz > 0.0) || !(opts.noise_std >= 0.0) {
        return Err(Error::Usage(
            "sample rate must be positive and noise non-negative".into(),
        ));
    }
    let s = FINGERS.len() * N_AXES;

    // class i mod C, shuffled within each session so sessions mix classes
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    for (k, block) in labels.chunks_mut(opts.session_size).enumerate() {
        block.shuffle(&mut rng_for(opts.seed, k as u64, STREAM_ORDER));
    }
    let trial_ids: Vec<u32> = (0..n).map(|i| (i / opts.session_size) as u32).collect();
    let subject_ids: Vec<u32> = trial_ids.iter().map(|&tr| tr % opts.n_subjects as u32).collect();

    let n_sessions = n.div_ceil(opts.session_size);
    let bias_dist = Normal::new(0.0, opts.session_bias_std.max(0.0)).expect("finite std");
    let sessions: Vec<Session> = (0..n_sessions)
        .map(|k| {
            let mut rng = rng_for(opts.seed, k as u64, STREAM_SESSION);
            Session {
                bias: (0..s).map(|_| bias_dist.sample(&mut rng)).collect(),
            }
        })
        .collect();
    let subject_gain: Vec<f64> = (0..opts.n_subjects)
        .map(|k| rng_for(opts.seed, k as u64, STREAM_SUBJECT).random_range(0.9..1.1))
        .collect();
    let templates: Vec<_> = (0..c).map(|k| class_template(vocab, k)).collect();

    let rows: Vec<Vec<f32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let session = &sessions[trial_ids[i] as usize];
            let gain = opts.gain() * subject_gain[subject_ids[i] as usize];
            render_sample(opts, &templates[labels[i]], gain, &session.bias, i as u64)
        })
        .collect();

    let ds = GestureDataset {
        name: format!("synthetic-{vocab}"),
        samples: Tensor::new(vec![n, t, s], rows.concat())?,
        labels,
        trial_ids,
        subject_ids,
        class_names: vocab.class_names().iter().map(|s| s.to_string()).collect(),
        sensor_layout: FINGERS.iter().map(|f| SensorSpec::new(*f, N_AXES)).collect(),
        sample_rate_hz: opts.sample_rate_hz,
    };
    ds.validate()?;
    Ok(ds)
}

fn render_sample(
    opts: &GeneratorOptions,
    template: &[Vec<(f64, Burst)>; 5],
    gain: f64,
    bias: &[f64],
    index: u64,
) -> Vec<f32> {
    let t = opts.window_length;
    let s = bias.len();
    let mut rng = rng_for(opts.seed, index, STREAM_SAMPLE);
    let mut x = vec![0.0f64; t * s];

    // Event timing and speed are shared by all fingers of one sample.
    let centre = 0.5 + rng.random_range(-0.1..0.1);
    let speed = rng.random_range(0.85..1.15);
    let sample_gain = gain * rng.random_range(0.8..1.2);
    let phase_jitter = rng.random_range(-0.2..0.2);
    let u = |k: usize| k as f64 / (t - 1) as f64;

    for (f, bursts) in template.iter().enumerate() {
        let finger_gain = sample_gain * rng.random_range(0.9..1.1);
        for &(weight, b) in bursts {
            let c = centre + b.offset * speed;
            let w = b.width * speed;
            for k in 0..t {
                let d = u(k) - c;
                let env = (-d * d / (2.0 * w * w)).exp();
                let wave = (2.0 * PI * b.freq * d / speed + b.phase + phase_jitter).cos();
                x[k * s + f * N_AXES + b.axis] += finger_gain * weight * b.amp * env * wave;
            }
        }
    }

    let noise = Normal::new(0.0, opts.noise_std).expect("finite noise std");
    for ch in 0..s {
        let amp = rng.random_range(0.0..=opts.drift_amplitude.max(0.0));
        let cycles = rng.random_range(0.1..0.5);
        let phase = rng.random_range(0.0..2.0 * PI);
        for k in 0..t {
            let drift = amp * (2.0 * PI * cycles * u(k) + phase).sin();
            x[k * s + ch] += bias[ch] + drift + noise.sample(&mut rng);
        }
    }
    x.into_iter().map(|v| v as f32).collect()
}
