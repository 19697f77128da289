//! Seeded shot-by-shot simulation of the Bell test.
//!
//! Each shot is one emitted photon pair: a setting pair is drawn uniformly,
//! the pair survives routing with the layout's coincidence probability, the
//! joint outcome is drawn from the Born distribution of the post-selected
//! state, and each detector then clicks with probability `efficiency`.
//!
//! Shots are generated in fixed-size batches. Batch `k` draws from a
//! ChaCha8 stream seeded with `seed` on stream number `k`, so the record
//! sequence does not depend on how batches are scheduled across threads.

use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bell::{
    postselected_state, simulate_postselection, BlochVector, MeasurementSetting, SettingPair,
    TwoQubitState,
};
use crate::error::{Error, Result};
use crate::optics::Preset;
use crate::scalar::Real;

/// Shots per RNG stream.
pub const BATCH_SIZE: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Click probability per detector, in `[0, 1]`.
    pub efficiency: f64,
    pub seed: u64,
    pub shots: u64,
    // Dark counts would go here as a per-detector rate.
}

impl DetectorModel {
    pub fn new(efficiency: f64, seed: u64, shots: u64) -> Result<Self> {
        let m = Self {
            efficiency,
            seed,
            shots,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidConfig(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Detector result for one party. Serialized as `1`, `-1`, or `null`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
    NoClick,
}

impl Outcome {
    pub fn value(self) -> Option<i8> {
        match self {
            Outcome::Plus => Some(1),
            Outcome::Minus => Some(-1),
            Outcome::NoClick => None,
        }
    }

    fn from_sign(s: i8) -> Self {
        if s > 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Option::<i8>::deserialize(d)? {
            None => Ok(Outcome::NoClick),
            Some(1) => Ok(Outcome::Plus),
            Some(-1) => Ok(Outcome::Minus),
            Some(other) => Err(serde::de::Error::custom(format!("invalid outcome {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub setting_pair: SettingPair,
    pub alice_outcome: Outcome,
    pub bob_outcome: Outcome,
    pub coincidence: bool,
}

/// Joint outcome probabilities in the order `(+,+), (+,-), (-,+), (-,-)`.
pub fn born_probabilities<T: Real>(
    state: &TwoQubitState<T>,
    u: &BlochVector<T>,
    v: &BlochVector<T>,
) -> [T; 4] {
    let projector = |n: &BlochVector<T>, sign: T| {
        let p = n.pauli();
        let half = T::lit(0.5);
        let mut out = [[Complex::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { T::one() } else { T::zero() };
                out[i][j] = (Complex::new(id, T::zero()) + p[i][j].scale(sign)).scale(half);
            }
        }
        out
    };
    let psi = state.amplitudes();
    let mut probs = [T::zero(); 4];
    for (k, (s, t)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
        let pa = projector(u, T::lit(f64::from(s)));
        let pb = projector(v, T::lit(f64::from(t)));
        let mut acc: Complex<T> = Complex::zero();
        for a in 0..2 {
            for b in 0..2 {
                let bra = psi[2 * a + b].conj();
                for c in 0..2 {
                    for d in 0..2 {
                        acc = acc + bra * pa[a][c] * pb[b][d] * psi[2 * c + d];
                    }
                }
            }
        }
        probs[k] = acc.re.max(T::zero());
    }
    probs
}

fn pick(probs: &[f64; 4], r: f64) -> (i8, i8) {
    const OUTCOMES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
    let mut cum = 0.0;
    for (p, o) in probs.iter().zip(OUTCOMES) {
        cum += p;
        if r < cum {
            return o;
        }
    }
    // r lands in the rounding gap above the last cumulative sum.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    OUTCOMES[last]
}

/// Inverse-CDF draw of `(alice, bob)` outcomes for uniform `r` in `[0, 1)`.
pub fn born_sample(
    state: &TwoQubitState<f64>,
    u: &BlochVector<f64>,
    v: &BlochVector<f64>,
    r: f64,
) -> Result<(i8, i8)> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidConfig(format!(
            "uniform draw must lie in [0, 1), got {r}"
        )));
    }
    Ok(pick(&born_probabilities(state, u, v), r))
}

/// Finite-statistics CHSH estimate. `s_hat`/`stderr` are `None` when some
/// correlator has no coincidences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub s_hat: Option<f64>,
    pub stderr: Option<f64>,
    pub coincidence_rate: f64,
    pub coincidences: u64,
    pub shots: u64,
    pub seed: u64,
    /// `(coincidences, E_hat)` per setting pair in [`SettingPair::ALL`] order.
    pub correlators: [(u64, Option<f64>); 4],
}

impl Estimate {
    pub fn is_defined(&self) -> bool {
        self.s_hat.is_some()
    }

    pub fn to_json(&self) -> EstimateJson {
        EstimateJson {
            s_hat: self.s_hat,
            stderr: self.stderr,
            coincidence_rate: self.coincidence_rate,
            shots: self.shots,
            seed: self.seed,
        }
    }
}

/// `{"S_hat", "stderr", "coincidence_rate", "shots", "seed"}`; undefined values are `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    #[serde(rename = "S_hat")]
    pub s_hat: Option<f64>,
    pub stderr: Option<f64>,
    pub coincidence_rate: f64,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct PairTally {
    n: u64,
    agree: u64,
}

/// Builds the estimate from a record stream. Counts are integers, so the
/// result does not depend on record order.
pub fn estimate(records: &[ShotRecord], seed: u64) -> Estimate {
    let mut tally = [PairTally::default(); 4];
    for r in records.iter().filter(|r| r.coincidence) {
        let t = &mut tally[r.setting_pair as usize];
        t.n += 1;
        if r.alice_outcome == r.bob_outcome {
            t.agree += 1;
        }
    }
    let shots = records.len() as u64;
    let coincidences: u64 = tally.iter().map(|t| t.n).sum();
    let correlators = tally.map(|t| {
        let e = (t.n > 0).then(|| (2.0 * t.agree as f64 - t.n as f64) / t.n as f64);
        (t.n, e)
    });
    let (s_hat, stderr) = if correlators.iter().all(|(_, e)| e.is_some()) {
        let mut s = 0.0;
        let mut var = 0.0;
        for (pair, (n, e)) in SettingPair::ALL.iter().zip(correlators) {
            let e = e.expect("checked");
            s += f64::from(pair.sign()) * e;
            var += (1.0 - e * e) / n as f64;
        }
        (Some(s), Some(var.sqrt()))
    } else {
        (None, None)
    };
    Estimate {
        s_hat,
        stderr,
        coincidence_rate: if shots > 0 {
            coincidences as f64 / shots as f64
        } else {
            0.0
        },
        coincidences,
        shots,
        seed,
        correlators,
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub records: Vec<ShotRecord>,
    pub estimate: Estimate,
}

/// Simulates `det.shots` runs at Sagnac phase `phi` behind the given layout.
pub fn run_experiment(
    phi: f64,
    settings: &MeasurementSetting<f64>,
    det: &DetectorModel,
    layout: Preset,
) -> Result<Experiment> {
    det.validate()?;
    let survival = simulate_postselection::<f64>(layout, phi)?.coincidence_probability;
    let state = postselected_state(phi);
    let dists: [[f64; 4]; 4] = SettingPair::ALL.map(|p| {
        let (u, v) = settings.pair(p);
        born_probabilities(&state, &u, &v)
    });
    let n_batches = det.shots.div_ceil(BATCH_SIZE);
    let batches: Vec<Vec<ShotRecord>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(det.seed);
            rng.set_stream(b);
            let start = b * BATCH_SIZE;
            let end = (start + BATCH_SIZE).min(det.shots);
            (start..end)
                .map(|shot_index| draw_shot(&mut rng, shot_index, &dists, survival, det.efficiency))
                .collect()
        })
        .collect();
    let records: Vec<ShotRecord> = batches.into_iter().flatten().collect();
    let estimate = estimate(&records, det.seed);
    Ok(Experiment { records, estimate })
}

fn draw_shot(
    rng: &mut ChaCha8Rng,
    shot_index: u64,
    dists: &[[f64; 4]; 4],
    survival: f64,
    efficiency: f64,
) -> ShotRecord {
    // Fixed draw order per shot keeps streams aligned regardless of branch.
    let pair_idx = rng.random_range(0..4usize);
    let r_route: f64 = rng.random();
    let r_born: f64 = rng.random();
    let r_alice: f64 = rng.random();
    let r_bob: f64 = rng.random();

    let setting_pair = SettingPair::ALL[pair_idx];
    let (alice_outcome, bob_outcome) = if r_route < survival {
        let (a, b) = pick(&dists[pair_idx], r_born);
        let click = |r: f64, s: i8| {
            if r < efficiency {
                Outcome::from_sign(s)
            } else {
                Outcome::NoClick
            }
        };
        (click(r_alice, a), click(r_bob, b))
    } else {
        (Outcome::NoClick, Outcome::NoClick)
    };
    ShotRecord {
        shot_index,
        setting_pair,
        alice_outcome,
        bob_outcome,
        coincidence: alice_outcome != Outcome::NoClick && bob_outcome != Outcome::NoClick,
    }
}

/// One JSON object per line.
pub fn write_records_ndjson<W: Write>(records: &[ShotRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
