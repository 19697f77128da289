//! Post-selected polarization state, CHSH correlators, closed-form curves,
//! Bell frequencies and the rotation sweep.
//!
//! Basis convention: `H` is qubit state 0 for both parties, and `|x y>` is
//! Alice's polarization `x`, Bob's `y`. With the standard settings this makes
//! the signed CHSH value `-4 sqrt2 sin^2 phi / (3 + cos 2 phi)`; the
//! inequality is stated on `|S|`, so that is what [`closed_form_s`] returns.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CountConstraint, FockState, ModeRegistry, Polarization, Role};
use crate::optics::{sagnac_phase, PhaseArg, Preset, SagnacConfig, SPEED_OF_LIGHT};
use crate::scalar::Real;

/// Two-qubit pure state in the basis `HH, HV, VH, VV`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState<T> {
    pub amp_hh: Complex<T>,
    pub amp_hv: Complex<T>,
    pub amp_vh: Complex<T>,
    pub amp_vv: Complex<T>,
}

impl<T: Real> TwoQubitState<T> {
    /// Normalized state; fails if the amplitudes are not unit norm.
    pub fn new(
        amp_hh: Complex<T>,
        amp_hv: Complex<T>,
        amp_vh: Complex<T>,
        amp_vv: Complex<T>,
    ) -> Result<Self> {
        let s = Self {
            amp_hh,
            amp_hv,
            amp_vh,
            amp_vv,
        };
        let n = s.norm_sqr();
        if (n - T::one()).abs() > T::NORM_TOL {
            return Err(Error::NotNormalized(n.as_f64()));
        }
        Ok(s)
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(amps: [Complex<T>; 4]) -> Result<Self> {
        let n: T = amps.iter().map(|a| a.norm_sqr()).sum();
        if n <= T::zero() {
            return Err(Error::NullProjection);
        }
        let k = n.sqrt().recip();
        let [hh, hv, vh, vv] = amps.map(|a| a.scale(k));
        Ok(Self {
            amp_hh: hh,
            amp_hv: hv,
            amp_vh: vh,
            amp_vv: vv,
        })
    }

    /// Amplitudes indexed by `2 * alice + bob`, with H = 0.
    pub fn amplitudes(&self) -> [Complex<T>; 4] {
        [self.amp_hh, self.amp_hv, self.amp_vh, self.amp_vv]
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner_product(&self, other: &Self) -> Complex<T> {
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn fidelity(&self, other: &Self) -> T {
        self.inner_product(other).norm_sqr()
    }

    /// `2 |a_HH a_VV - a_HV a_VH|`.
    pub fn concurrence(&self) -> T {
        (self.amp_hh * self.amp_vv - self.amp_hv * self.amp_vh).norm() * T::lit(2.0)
    }

    /// Reads the polarization state off a coincidence-projected Fock state.
    ///
    /// Every term must put exactly one photon in Alice's detection modes and
    /// one in Bob's, each in a mode with a polarization suffix.
    pub fn from_fock(state: &FockState<T>) -> Result<Self> {
        let reg: &ModeRegistry = state.registry();
        let alice: Vec<usize> = reg
            .detection_modes(Role::Alice)
            .iter()
            .map(|m| m.index())
            .collect();
        let bob: Vec<usize> = reg
            .detection_modes(Role::Bob)
            .iter()
            .map(|m| m.index())
            .collect();
        if alice.is_empty() {
            return Err(Error::MissingRole(Role::Alice));
        }
        if bob.is_empty() {
            return Err(Error::MissingRole(Role::Bob));
        }
        let pol_of = |idx: usize| -> Result<usize> {
            let m = reg.by_index(idx)?;
            match m.polarization() {
                Some(Polarization::H) => Ok(0),
                Some(Polarization::V) => Ok(1),
                None => Err(Error::NoPolarization(m.label().to_owned())),
            }
        };
        let mut amps: [Complex<T>; 4] = [Complex::zero(); 4];
        for (occ, &amp) in state.terms() {
            let single = |modes: &[usize]| -> Option<usize> {
                let hits: Vec<usize> = modes.iter().copied().filter(|&i| occ.get(i) > 0).collect();
                match hits.as_slice() {
                    [i] if occ.get(*i) == 1 => Some(*i),
                    _ => None,
                }
            };
            let (Some(a), Some(b)) = (single(&alice), single(&bob)) else {
                return Err(Error::NotCoincidence);
            };
            if occ.total() != 2 {
                return Err(Error::NotCoincidence);
            }
            amps[2 * pol_of(a)? + pol_of(b)?] += amp;
        }
        Self::normalized(amps)
    }
}

/// Unit 3-vector selecting the observable `n . sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector<T>([T; 3]);

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if (n - T::one()).abs() > T::NORM_TOL || !n.is_finite() {
            return Err(Error::NotUnitVector(x.as_f64(), y.as_f64(), z.as_f64()));
        }
        Ok(Self([x, y, z]))
    }

    /// Rescales a non-zero vector to unit length.
    pub fn normalize(x: T, y: T, z: T) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::NotUnitVector(x.as_f64(), y.as_f64(), z.as_f64()));
        }
        Ok(Self([x / n, y / n, z / n]))
    }

    pub fn components(&self) -> [T; 3] {
        self.0
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(other.0).map(|(a, b)| *a * b).sum()
    }

    /// `n . sigma` as a 2x2 matrix in the `H = 0` basis.
    pub fn pauli(&self) -> [[Complex<T>; 2]; 2] {
        let [x, y, z] = self.0;
        [
            [Complex::new(z, T::zero()), Complex::new(x, -y)],
            [Complex::new(x, y), Complex::new(-z, T::zero())],
        ]
    }
}

impl<T: Real> Serialize for BlochVector<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.map(Real::as_f64).serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for BlochVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Self::new(T::lit(x), T::lit(y), T::lit(z)).map_err(serde::de::Error::custom)
    }
}

/// The four CHSH directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasurementSetting<T> {
    pub a: BlochVector<T>,
    pub a_prime: BlochVector<T>,
    pub b: BlochVector<T>,
    pub b_prime: BlochVector<T>,
}

impl<T: Real> MeasurementSetting<T> {
    /// `a = x`, `a' = y`, `b = (x + y)/sqrt2`, `b' = (-x + y)/sqrt2`.
    pub fn standard() -> Self {
        let (z, o, r) = (T::zero(), T::one(), T::FRAC_1_SQRT_2());
        Self {
            a: BlochVector([o, z, z]),
            a_prime: BlochVector([z, o, z]),
            b: BlochVector([r, r, z]),
            b_prime: BlochVector([-r, r, z]),
        }
    }

    /// The directions for a setting pair.
    pub fn pair(&self, pair: SettingPair) -> (BlochVector<T>, BlochVector<T>) {
        match pair {
            SettingPair::AB => (self.a, self.b),
            SettingPair::ABPrime => (self.a, self.b_prime),
            SettingPair::APrimeB => (self.a_prime, self.b),
            SettingPair::APrimeBPrime => (self.a_prime, self.b_prime),
        }
    }
}

impl<T: Real> Default for MeasurementSetting<T> {
    fn default() -> Self {
        Self::standard()
    }
}

/// Which of the four correlators a run contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SettingPair {
    #[serde(rename = "ab")]
    AB,
    #[serde(rename = "ab'")]
    ABPrime,
    #[serde(rename = "a'b")]
    APrimeB,
    #[serde(rename = "a'b'")]
    APrimeBPrime,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::ABPrime,
        SettingPair::APrimeB,
        SettingPair::APrimeBPrime,
    ];

    /// Sign of this correlator in `S`.
    pub fn sign(self) -> i32 {
        if self == SettingPair::ABPrime {
            -1
        } else {
            1
        }
    }
}

/// Closed-form post-selected state for Sagnac phase `phi`:
/// `((cos phi + 1)|HV> + (cos phi - 1)|VH>) / sqrt(2 (cos^2 phi + 1))`.
pub fn postselected_state<T: Real>(phi: T) -> TwoQubitState<T> {
    let c = phi.cos();
    let one = T::one();
    let norm = (T::lit(2.0) * (c * c + one)).sqrt();
    TwoQubitState {
        amp_hh: Complex::zero(),
        amp_hv: Complex::new((c + one) / norm, T::zero()),
        amp_vh: Complex::new((c - one) / norm, T::zero()),
        amp_vv: Complex::zero(),
    }
}

/// `<psi| (u.sigma) x (v.sigma) |psi>` by explicit 4x4 contraction.
pub fn correlator<T: Real>(state: &TwoQubitState<T>, u: &BlochVector<T>, v: &BlochVector<T>) -> T {
    let (pu, pv) = (u.pauli(), v.pauli());
    let psi = state.amplitudes();
    let mut acc: Complex<T> = Complex::zero();
    for a in 0..2 {
        for b in 0..2 {
            let bra = psi[2 * a + b].conj();
            for c in 0..2 {
                for d in 0..2 {
                    acc = acc + bra * pu[a][c] * pv[b][d] * psi[2 * c + d];
                }
            }
        }
    }
    debug_assert!(
        acc.im.abs() <= T::lit(1e3) * T::epsilon(),
        "observable expectation has imaginary part {:?}",
        acc.im
    );
    acc.re
}

/// `E(a,b) - E(a,b') + E(a',b) + E(a',b')`, signed.
pub fn chsh_s<T: Real>(state: &TwoQubitState<T>, settings: &MeasurementSetting<T>) -> T {
    correlator(state, &settings.a, &settings.b) - correlator(state, &settings.a, &settings.b_prime)
        + correlator(state, &settings.a_prime, &settings.b)
        + correlator(state, &settings.a_prime, &settings.b_prime)
}

/// `|S| = 4 sqrt2 sin^2 phi / (3 + cos 2 phi)` for the standard settings.
pub fn closed_form_s<T: Real>(phi: T) -> T {
    let s = phi.sin();
    T::lit(4.0) * T::SQRT_2() * s * s / (T::lit(3.0) + (T::lit(2.0) * phi).cos())
}

/// Coincidence probability of the full layout, `(1 + cos^2 phi) / 32`.
pub fn closed_form_p<T: Real>(phi: T) -> T {
    let c = phi.cos();
    (T::one() + c * c) / T::lit(32.0)
}

/// Rotation rate producing the singlet, in both rad/s and Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFrequency {
    pub k: i64,
    pub omega_rad_s: f64,
    pub freq_hz: f64,
}

/// `Omega = (2k + 1) pi c^2 / (8 A omega)`; the sign of `k` picks the sense of rotation.
pub fn omega_bell(cfg: &SagnacConfig, k: i64) -> BellFrequency {
    let odd = (2 * k + 1) as f64;
    let omega_rad_s = odd * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (8.0 * cfg.area_m2() * cfg.optical_angular_frequency());
    BellFrequency {
        k,
        omega_rad_s,
        freq_hz: omega_rad_s / (2.0 * PI),
    }
}

/// Simulated post-selection through a preset layout.
#[derive(Clone, Debug)]
pub struct Postselection<T: Real> {
    /// State before the coincidence projection.
    pub output: FockState<T>,
    pub coincidence_probability: T,
    /// `None` when no coincidence survives.
    pub state: Option<TwoQubitState<T>>,
}

/// Runs a preset at Sagnac phase `phi` and projects on one photon per party.
pub fn simulate_postselection<T: Real>(preset: Preset, phi: T) -> Result<Postselection<T>> {
    let circuit = preset.circuit(PhaseArg::Value(phi));
    postselect(circuit.run(None)?)
}

/// Projects an output state on Alice/Bob coincidences.
pub fn postselect<T: Real>(output: FockState<T>) -> Result<Postselection<T>> {
    let proj = output.project_onto_counts(&CountConstraint::coincidence())?;
    let state = proj
        .state
        .as_ref()
        .map(TwoQubitState::from_fock)
        .transpose()?;
    Ok(Postselection {
        output,
        coincidence_probability: proj.probability,
        state,
    })
}

/// One row of the rotation sweep. Field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub f_hz: f64,
    pub omega_rad_s: f64,
    pub phi_rad: f64,
    #[serde(rename = "S_abs")]
    pub s_abs: f64,
    #[serde(rename = "S_signed")]
    pub s_signed: f64,
    #[serde(rename = "P_coincidence")]
    pub p_coincidence: f64,
    pub violation: bool,
}

pub const SWEEP_CSV_HEADER: &str =
    "f_hz,omega_rad_s,phi_rad,S_abs,S_signed,P_coincidence,violation";

/// Per-row tolerance between simulation and the closed forms.
pub const SWEEP_AGREEMENT_TOL: f64 = 1e-10;

/// Evaluates `n_points` rotation frequencies in `[f_min, f_max]` (inclusive)
/// through the full-layout simulation. Each row is checked against the
/// closed forms; a disagreement is an error.
pub fn sweep(
    template: &SagnacConfig,
    f_min: f64,
    f_max: f64,
    n_points: usize,
    settings: &MeasurementSetting<f64>,
) -> Result<Vec<SweepRow>> {
    if !(f_min.is_finite() && f_max.is_finite() && f_min < f_max) {
        return Err(Error::InvalidRange(format!(
            "need f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidRange(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    let step = (f_max - f_min) / (n_points - 1) as f64;
    let standard = *settings == MeasurementSetting::standard();
    (0..n_points)
        .into_par_iter()
        .map(|i| {
            let f = if i + 1 == n_points {
                f_max
            } else {
                f_min + step * i as f64
            };
            let cfg = template.with_rotation_hz(f)?;
            let phi = sagnac_phase(&cfg);
            let sim = simulate_postselection::<f64>(Preset::Full12, phi)?;
            let state = sim.state.ok_or(Error::NullProjection)?;
            let s_signed = chsh_s(&state, settings);
            let p = sim.coincidence_probability;
            let dp = (p - closed_form_p(phi)).abs();
            if dp > SWEEP_AGREEMENT_TOL {
                return Err(Error::ClosedFormMismatch {
                    phi,
                    what: "coincidence probability",
                    delta: dp,
                });
            }
            if standard {
                let ds = (s_signed.abs() - closed_form_s(phi)).abs();
                if ds > SWEEP_AGREEMENT_TOL {
                    return Err(Error::ClosedFormMismatch {
                        phi,
                        what: "|S|",
                        delta: ds,
                    });
                }
            }
            Ok(SweepRow {
                f_hz: f,
                omega_rad_s: cfg.omega_rot(),
                phi_rad: phi,
                s_abs: s_signed.abs(),
                s_signed,
                p_coincidence: p,
                violation: s_signed.abs() > 2.0,
            })
        })
        .collect()
}

/// Writes rows as CSV with the [`SWEEP_CSV_HEADER`] columns.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    type C = Complex<f64>;

    fn singlet() -> TwoQubitState<f64> {
        postselected_state(FRAC_PI_2)
    }

    fn hv() -> TwoQubitState<f64> {
        postselected_state(0.0)
    }

    fn v(x: f64, y: f64, z: f64) -> BlochVector<f64> {
        BlochVector::normalize(x, y, z).unwrap()
    }

    #[test]
    fn closed_form_state_examples() {
        let s = hv();
        assert!((s.amp_hv - C::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.amp_vh, C::zero());
        let b = singlet();
        assert!((b.amp_hv.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.amp_vh.re + FRAC_1_SQRT_2).abs() < 1e-15);
        let f = postselected_state(PI);
        assert!(f.amp_hv.norm() < 1e-15);
        assert!((f.amp_vh.re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn correlator_examples() {
        let z = v(0.0, 0.0, 1.0);
        let x = v(1.0, 0.0, 0.0);
        assert!((correlator(&singlet(), &z, &z) + 1.0).abs() < 1e-12);
        let diag = v(1.0, 1.0, 0.0);
        assert!((correlator(&singlet(), &x, &diag) + FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((correlator(&hv(), &z, &z) + 1.0).abs() < 1e-12);
        assert!(correlator(&hv(), &x, &x).abs() < 1e-12);
    }

    #[test]
    fn chsh_examples() {
        let st = MeasurementSetting::standard();
        assert!((chsh_s(&singlet(), &st).abs() - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(
            chsh_s(&singlet(), &st) < 0.0,
            "H = 0 convention gives negative S"
        );
        assert!(chsh_s(&hv(), &st).abs() < 1e-12);
        let quarter = chsh_s(&postselected_state(FRAC_PI_4), &st).abs();
        assert!((quarter - 2.0 * SQRT_2 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_s(0.0), 0.0);
        assert_eq!(closed_form_p(0.0), 1.0 / 16.0);
        assert!((closed_form_s(FRAC_PI_2) - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((closed_form_p(FRAC_PI_2) - 1.0 / 32.0).abs() < 1e-15);
        assert!((closed_form_s(FRAC_PI_3) - 6.0 * SQRT_2 / 5.0).abs() < 1e-14);
        assert!((closed_form_p(FRAC_PI_3) - 5.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn bell_frequency_values() {
        let cfg = SagnacConfig::new(7.853981, 1e-6, 0.0).unwrap();
        let b0 = omega_bell(&cfg, 0);
        assert!((b0.omega_rad_s - 2.384).abs() < 2e-3, "{b0:?}");
        assert!((b0.freq_hz - 0.379).abs() < 1e-3, "{b0:?}");
        let bm = omega_bell(&cfg, -1);
        assert_eq!(bm.omega_rad_s, -b0.omega_rad_s);
        let b1 = omega_bell(&cfg, 1);
        let phi = sagnac_phase(&cfg.with_omega(b1.omega_rad_s).unwrap());
        assert!((phi / (3.0 * FRAC_PI_2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concurrence_formula() {
        for &phi in &[0.0, 0.4, 1.0, FRAC_PI_2, 2.5, PI] {
            let c = postselected_state(phi).concurrence();
            let expected = phi.sin().powi(2) / (1.0 + phi.cos().powi(2));
            assert!((c - expected).abs() < 1e-12);
        }
        assert!((singlet().concurrence() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_validation() {
        let z = C::zero();
        assert!(TwoQubitState::new(z, C::new(1.0, 0.0), z, z).is_ok());
        assert!(matches!(
            TwoQubitState::new(z, C::new(0.5, 0.0), z, z),
            Err(Error::NotNormalized(_))
        ));
        assert!(BlochVector::new(1.0, 1.0, 0.0).is_err());
        assert!(BlochVector::normalize(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn from_fock_on_loop_readout() {
        let sim = simulate_postselection::<f64>(Preset::Core4, FRAC_PI_2).unwrap();
        assert!((sim.coincidence_probability - 0.5).abs() < 1e-12);
        assert!((sim.state.unwrap().fidelity(&singlet()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_preconditions() {
        let cfg = SagnacConfig::new(7.853981, 1e-6, 0.0).unwrap();
        let st = MeasurementSetting::standard();
        assert!(sweep(&cfg, 0.0, 0.0, 2, &st).is_err());
        assert!(sweep(&cfg, 0.0, 1.0, 1, &st).is_err());
        let rows = sweep(&cfg, 0.0, 1.0, 11, &st).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].f_hz, 0.0);
        assert_eq!(rows[10].f_hz, 1.0);
        assert!(rows.windows(2).all(|w| w[0].f_hz < w[1].f_hz));
    }

    #[test]
    fn sweep_csv_header() {
        let cfg = SagnacConfig::new(7.853981, 1e-6, 0.0).unwrap();
        let rows = sweep(&cfg, 0.0, 0.5, 3, &MeasurementSetting::standard()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_CSV_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn generic_over_f32() {
        let s = postselected_state(std::f32::consts::FRAC_PI_2);
        let v = chsh_s(&s, &MeasurementSetting::<f32>::standard()).abs();
        assert!((v - 2.0 * std::f32::consts::SQRT_2).abs() < 1e-5);
    }
}
