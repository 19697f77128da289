//! Optical elements, circuits, and the two interferometer presets.
//!
//! Beam splitters use the symmetric convention
//! `m1^dag -> (m1^dag + i m2^dag)/sqrt2`, `m2^dag -> (i m1^dag + m2^dag)/sqrt2`;
//! the inverse is the conjugate transpose, so entry followed by exit with no
//! rotation is the identity. Loop modes labelled `a.*` co-rotate and pick up
//! `+phi/2` per photon, `b.*` counter-rotate and pick up `-phi/2`.
//!
//! The exit splitter maps the rotated loop state to
//! `((1+cos phi)/2) aH bV + ((cos phi - 1)/2) bH aV + (sin phi/2)(bH bV - aH aV)`.
//! Relabelling the exit ports (a <-> b) gives the textbook arrangement
//! `((cos phi - 1)/2) aH bV + ((cos phi + 1)/2) bH aV + (sin phi/2)(aH aV - bH bV)`;
//! either way each bunched term holds one H and one V photon, never two
//! photons of the same polarization.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{make_state, FockState, Mat2, ModeId, ModeRegistry, Role};
use crate::scalar::Real;

/// Speed of light in vacuum, m/s. The Sagnac phase depends on this value,
/// not on the group velocity in the fiber.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical parameters of the rotating interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SagnacConfigJson", into = "SagnacConfigJson")]
pub struct SagnacConfig {
    area_m2: f64,
    wavelength_m: f64,
    omega_rot: f64,
}

impl SagnacConfig {
    /// `omega_rot` is the platform angular frequency in rad/s; its sign is
    /// the sense of rotation.
    pub fn new(area_m2: f64, wavelength_m: f64, omega_rot: f64) -> Result<Self> {
        if !(area_m2.is_finite() && area_m2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "area must be positive, got {area_m2}"
            )));
        }
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be positive, got {wavelength_m}"
            )));
        }
        if !omega_rot.is_finite() {
            return Err(Error::InvalidConfig("rotation rate must be finite".into()));
        }
        Ok(Self {
            area_m2,
            wavelength_m,
            omega_rot,
        })
    }

    pub fn from_rotation_hz(area_m2: f64, wavelength_m: f64, rotation_hz: f64) -> Result<Self> {
        Self::new(area_m2, wavelength_m, 2.0 * PI * rotation_hz)
    }

    pub fn area_m2(&self) -> f64 {
        self.area_m2
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn omega_rot(&self) -> f64 {
        self.omega_rot
    }

    pub fn rotation_hz(&self) -> f64 {
        self.omega_rot / (2.0 * PI)
    }

    /// Optical angular frequency `2 pi c / lambda`.
    pub fn optical_angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength_m
    }

    pub fn with_omega(self, omega_rot: f64) -> Result<Self> {
        Self::new(self.area_m2, self.wavelength_m, omega_rot)
    }

    pub fn with_rotation_hz(self, rotation_hz: f64) -> Result<Self> {
        self.with_omega(2.0 * PI * rotation_hz)
    }
}

/// Enclosed area of a fiber coil with `loops` turns of radius `radius_m`.
pub fn coil_area(loops: u32, radius_m: f64) -> f64 {
    f64::from(loops) * PI * radius_m * radius_m
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SagnacConfigJson {
    area_m2: f64,
    wavelength_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_rot_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation_hz: Option<f64>,
}

impl TryFrom<SagnacConfigJson> for SagnacConfig {
    type Error = Error;

    fn try_from(raw: SagnacConfigJson) -> Result<Self> {
        match (raw.omega_rot_rad_s, raw.rotation_hz) {
            (Some(w), None) => Self::new(raw.area_m2, raw.wavelength_m, w),
            (None, Some(f)) => Self::from_rotation_hz(raw.area_m2, raw.wavelength_m, f),
            _ => Err(Error::InvalidConfig(
                "exactly one of omega_rot_rad_s and rotation_hz is required".into(),
            )),
        }
    }
}

impl From<SagnacConfig> for SagnacConfigJson {
    fn from(c: SagnacConfig) -> Self {
        Self {
            area_m2: c.area_m2,
            wavelength_m: c.wavelength_m,
            omega_rot_rad_s: Some(c.omega_rot),
            rotation_hz: None,
        }
    }
}

/// Sagnac phase `4 A omega Omega / c^2`, unwrapped.
pub fn sagnac_phase(cfg: &SagnacConfig) -> f64 {
    4.0 * cfg.area_m2 * cfg.optical_angular_frequency() * cfg.omega_rot
        / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// Beam-splitter matrix convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BsConvention {
    /// `(1/sqrt2) [[1, i], [i, 1]]`
    Symmetric,
    /// `(1/sqrt2) [[1, 1], [1, -1]]`
    Hadamard,
}

impl BsConvention {
    pub fn matrix<T: Real>(self) -> Mat2<T> {
        let s = T::lit(FRAC_1_SQRT_2);
        let (z, r, i) = (
            T::zero(),
            Complex::new(s, T::zero()),
            Complex::new(T::zero(), s),
        );
        match self {
            BsConvention::Symmetric => [[r, i], [i, r]],
            BsConvention::Hadamard => [[r, r], [r, Complex::new(-s, z)]],
        }
    }
}

/// Phase argument that may be left open and bound at simulation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseArg<T> {
    Value(T),
    Phi,
}

impl<T> From<T> for PhaseArg<T> {
    fn from(v: T) -> Self {
        PhaseArg::Value(v)
    }
}

impl<T: Real> PhaseArg<T> {
    pub fn resolve(self, phi: Option<T>) -> Result<T> {
        match self {
            PhaseArg::Value(v) => Ok(v),
            PhaseArg::Phi => phi.ok_or(Error::UnboundPhi),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpticalElement<T> {
    BeamSplitter {
        m1: ModeId,
        m2: ModeId,
        convention: BsConvention,
        inverse: bool,
    },
    /// `+phi/2` per photon on every co-rotating mode, `-phi/2` on every counter-rotating one.
    SagnacPhase {
        co: Vec<ModeId>,
        counter: Vec<ModeId>,
        phi: PhaseArg<T>,
    },
    PhaseShift {
        mode: ModeId,
        theta: T,
    },
    /// 50:50 split of `input` into `through` and `discard`.
    Route {
        input: ModeId,
        through: ModeId,
        discard: ModeId,
    },
}

impl<T: Real> OpticalElement<T> {
    pub fn beam_splitter(m1: &ModeId, m2: &ModeId, inverse: bool) -> Self {
        OpticalElement::BeamSplitter {
            m1: m1.clone(),
            m2: m2.clone(),
            convention: BsConvention::Symmetric,
            inverse,
        }
    }

    /// The 2x2 matrix for beam splitters, `None` for other elements.
    pub fn matrix(&self) -> Option<Mat2<T>> {
        match self {
            OpticalElement::BeamSplitter {
                convention,
                inverse,
                ..
            } => {
                let u = convention.matrix();
                Some(if *inverse { crate::fock::dagger(&u) } else { u })
            }
            _ => None,
        }
    }

    pub fn modes(&self) -> Vec<&ModeId> {
        match self {
            OpticalElement::BeamSplitter { m1, m2, .. } => vec![m1, m2],
            OpticalElement::SagnacPhase { co, counter, .. } => co.iter().chain(counter).collect(),
            OpticalElement::PhaseShift { mode, .. } => vec![mode],
            OpticalElement::Route {
                input,
                through,
                discard,
            } => vec![input, through, discard],
        }
    }

    pub fn validate(&self, registry: &ModeRegistry) -> Result<()> {
        for m in self.modes() {
            registry.check(m)?;
        }
        match self {
            OpticalElement::BeamSplitter { m1, m2, .. } if m1 == m2 => {
                Err(Error::SameMode(m1.label().to_owned()))
            }
            OpticalElement::Route {
                input,
                through,
                discard,
            } => {
                if input == through || input == discard || through == discard {
                    return Err(Error::Layout(format!(
                        "route {input} -> {through} / {discard} repeats a mode"
                    )));
                }
                if registry.role(discard)? != Role::Discard {
                    return Err(Error::Layout(format!(
                        "route discard mode `{discard}` does not have role discard"
                    )));
                }
                Ok(())
            }
            OpticalElement::SagnacPhase { co, counter, .. } => {
                if co.is_empty() && counter.is_empty() {
                    return Err(Error::MissingRole(Role::LoopCo));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(
            self,
            OpticalElement::SagnacPhase {
                phi: PhaseArg::Phi,
                ..
            }
        )
    }

    pub fn apply(&self, state: &FockState<T>, phi: Option<T>) -> Result<FockState<T>> {
        match self {
            OpticalElement::BeamSplitter { m1, m2, .. } => {
                let u = self.matrix().expect("beam splitter has a matrix");
                state.apply_mode_transform(&u, m1, m2)
            }
            OpticalElement::SagnacPhase {
                co,
                counter,
                phi: arg,
            } => {
                let half = arg.resolve(phi)? / T::lit(2.0);
                let mut s = state.clone();
                for m in co {
                    s = s.apply_phase(m, half)?;
                }
                for m in counter {
                    s = s.apply_phase(m, -half)?;
                }
                Ok(s)
            }
            OpticalElement::PhaseShift { mode, theta } => state.apply_phase(mode, *theta),
            OpticalElement::Route {
                input,
                through,
                discard,
            } => {
                let (z, o) = (Complex::zero(), Complex::one());
                let swap = [[z, o], [o, z]];
                let moved = state.apply_mode_transform(&swap, input, through)?;
                moved.apply_mode_transform(&BsConvention::Symmetric.matrix(), through, discard)
            }
        }
    }
}

/// Source creation list plus an ordered element pipeline over one registry.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T> {
    registry: Arc<ModeRegistry>,
    input: Vec<ModeId>,
    elements: Vec<OpticalElement<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(
        registry: Arc<ModeRegistry>,
        input: Vec<ModeId>,
        elements: Vec<OpticalElement<T>>,
    ) -> Result<Self> {
        if input.is_empty() {
            return Err(Error::EmptyCreationList);
        }
        for m in &input {
            registry.check(m)?;
        }
        for e in &elements {
            e.validate(&registry)?;
        }
        Ok(Self {
            registry,
            input,
            elements,
        })
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn input(&self) -> &[ModeId] {
        &self.input
    }

    pub fn elements(&self) -> &[OpticalElement<T>] {
        &self.elements
    }

    pub fn is_symbolic(&self) -> bool {
        self.elements.iter().any(OpticalElement::is_symbolic)
    }

    pub fn input_state(&self) -> Result<FockState<T>> {
        make_state(&self.registry, &self.input)
    }

    /// Pushes `state` through every element. `phi` binds symbolic Sagnac phases.
    pub fn apply(&self, state: &FockState<T>, phi: Option<T>) -> Result<FockState<T>> {
        let mut s = state.clone();
        for e in &self.elements {
            s = e.apply(&s, phi)?;
        }
        Ok(s)
    }

    /// Simulates from the declared input.
    pub fn run(&self, phi: Option<T>) -> Result<FockState<T>> {
        self.apply(&self.input_state()?, phi)
    }
}

/// Named interferometer layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Loop only: four modes, read out at the loop splitter.
    Core4,
    /// Loop plus the routing splitters towards Alice, Bob and the discard ports.
    Full12,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Core4 => "core4",
            Preset::Full12 => "full12",
        }
    }

    pub fn registry(self) -> Arc<ModeRegistry> {
        match self {
            Preset::Core4 => core4_registry(),
            Preset::Full12 => full12_registry(),
        }
    }

    pub fn circuit<T: Real>(self, phi: PhaseArg<T>) -> Circuit<T> {
        let reg = self.registry();
        match self {
            Preset::Core4 => build_core_circuit(reg, phi),
            Preset::Full12 => build_full_circuit(reg, phi),
        }
        .expect("preset layouts are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "core4" => Ok(Preset::Core4),
            "full12" => Ok(Preset::Full12),
            _ => Err(format!("unknown preset `{s}` (expected core4 or full12)")),
        }
    }
}

const LOOP_MODES: [(&str, Role); 4] = [
    ("a.H", Role::LoopCo),
    ("a.V", Role::LoopCo),
    ("b.H", Role::LoopCounter),
    ("b.V", Role::LoopCounter),
];

pub fn core4_registry() -> Arc<ModeRegistry> {
    Arc::new(ModeRegistry::with_modes(LOOP_MODES).expect("static layout"))
}

/// Sources, loop, both detection stages, and one discard port per routing pass.
///
/// Each of the six routing passes gets its own vacuum discard port; a shared
/// port would let a discarded photon leak back into a detector arm.
pub fn full12_registry() -> Arc<ModeRegistry> {
    let modes = [("src1.H", Role::Source), ("src2.V", Role::Source)]
        .into_iter()
        .chain(LOOP_MODES)
        .chain([
            ("alice.H", Role::Alice),
            ("alice.V", Role::Alice),
            ("bob.H", Role::Bob),
            ("bob.V", Role::Bob),
            ("discard.1", Role::Discard),
            ("discard.2", Role::Discard),
            ("discard.3", Role::Discard),
            ("discard.4", Role::Discard),
            ("discard.5", Role::Discard),
            ("discard.6", Role::Discard),
        ]);
    Arc::new(ModeRegistry::with_modes(modes).expect("static layout"))
}

fn loop_pairs(registry: &ModeRegistry) -> Result<Vec<(ModeId, ModeId)>> {
    let co = registry.modes_with_role(Role::LoopCo);
    let counter = registry.modes_with_role(Role::LoopCounter);
    if co.is_empty() {
        return Err(Error::MissingRole(Role::LoopCo));
    }
    if counter.is_empty() {
        return Err(Error::MissingRole(Role::LoopCounter));
    }
    if co.len() != counter.len() {
        return Err(Error::Layout(
            "unequal numbers of co- and counter-rotating modes".into(),
        ));
    }
    co.into_iter()
        .map(|a| {
            let pol = a.polarization();
            counter
                .iter()
                .find(|b| b.polarization() == pol && pol.is_some())
                .map(|b| (a.clone(), (*b).clone()))
                .ok_or_else(|| Error::Layout(format!("no counter-rotating partner for `{a}`")))
        })
        .collect()
}

/// Loop beam splitter on entry: one symmetric splitter per polarization,
/// co-rotating port first.
pub fn entry_beamsplitter<T: Real>(registry: &ModeRegistry) -> Result<Vec<OpticalElement<T>>> {
    Ok(loop_pairs(registry)?
        .iter()
        .map(|(a, b)| OpticalElement::beam_splitter(a, b, false))
        .collect())
}

/// Inverse of [`entry_beamsplitter`].
pub fn exit_beamsplitter<T: Real>(registry: &ModeRegistry) -> Result<Vec<OpticalElement<T>>> {
    Ok(loop_pairs(registry)?
        .iter()
        .map(|(a, b)| OpticalElement::beam_splitter(a, b, true))
        .collect())
}

pub fn sagnac_loop_element<T: Real>(
    phi: PhaseArg<T>,
    registry: &ModeRegistry,
) -> Result<OpticalElement<T>> {
    let co: Vec<ModeId> = registry
        .modes_with_role(Role::LoopCo)
        .into_iter()
        .cloned()
        .collect();
    let counter: Vec<ModeId> = registry
        .modes_with_role(Role::LoopCounter)
        .into_iter()
        .cloned()
        .collect();
    if co.is_empty() {
        return Err(Error::MissingRole(Role::LoopCo));
    }
    if counter.is_empty() {
        return Err(Error::MissingRole(Role::LoopCounter));
    }
    Ok(OpticalElement::SagnacPhase { co, counter, phi })
}

fn loop_section<T: Real>(
    registry: &ModeRegistry,
    phi: PhaseArg<T>,
) -> Result<Vec<OpticalElement<T>>> {
    let mut els = entry_beamsplitter(registry)?;
    els.push(sagnac_loop_element(phi, registry)?);
    els.extend(exit_beamsplitter(registry)?);
    Ok(els)
}

/// Bare loop: `|H V> = aH bV` in, entry splitter, rotation, exit splitter.
pub fn build_core_circuit<T: Real>(
    registry: Arc<ModeRegistry>,
    phi: PhaseArg<T>,
) -> Result<Circuit<T>> {
    let input = vec![registry.mode("a.H")?.clone(), registry.mode("b.V")?.clone()];
    let elements = loop_section(&registry, phi)?;
    Circuit::new(registry, input, elements)
}

fn mode_with_role(registry: &ModeRegistry, label: &str, role: Role) -> Result<ModeId> {
    let m = registry
        .mode(label)
        .map_err(|_| Error::Layout(format!("missing mode `{label}`")))?;
    if registry.role(m)? != role {
        return Err(Error::Layout(format!(
            "mode `{label}` must have role {role}"
        )));
    }
    Ok(m.clone())
}

/// Full layout: inbound routing at BS1/BS2, the loop, outbound routing
/// towards Alice and Bob. Every routing pass keeps half the amplitude, so
/// coincidences carry an extra factor `(1/2)^4` relative to the bare loop.
pub fn build_full_circuit<T: Real>(
    registry: Arc<ModeRegistry>,
    phi: PhaseArg<T>,
) -> Result<Circuit<T>> {
    let m = |label, role| mode_with_role(&registry, label, role);
    let (src1, src2) = (m("src1.H", Role::Source)?, m("src2.V", Role::Source)?);
    let (ah, av) = (m("a.H", Role::LoopCo)?, m("a.V", Role::LoopCo)?);
    let (bh, bv) = (m("b.H", Role::LoopCounter)?, m("b.V", Role::LoopCounter)?);
    let (alice_h, alice_v) = (m("alice.H", Role::Alice)?, m("alice.V", Role::Alice)?);
    let (bob_h, bob_v) = (m("bob.H", Role::Bob)?, m("bob.V", Role::Bob)?);
    let discards: Vec<ModeId> = registry
        .modes_with_role(Role::Discard)
        .into_iter()
        .cloned()
        .collect();
    if discards.len() < 6 {
        return Err(Error::Layout(format!(
            "full layout needs 6 discard modes, found {}",
            discards.len()
        )));
    }
    let route = |input: &ModeId, through: &ModeId, d: usize| OpticalElement::Route {
        input: input.clone(),
        through: through.clone(),
        discard: discards[d].clone(),
    };
    let mut elements = vec![route(&src1, &ah, 0), route(&src2, &bv, 1)];
    elements.extend(loop_section(&registry, phi)?);
    elements.extend([
        route(&ah, &alice_h, 2),
        route(&av, &alice_v, 3),
        route(&bh, &bob_h, 4),
        route(&bv, &bob_v, 5),
    ]);
    Circuit::new(Arc::clone(&registry), vec![src1, src2], elements)
}
