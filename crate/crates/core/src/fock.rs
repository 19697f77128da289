//! Sparse multimode Fock states.
//!
//! A [`FockState`] maps full-length occupation vectors to complex amplitudes.
//! Mode order is fixed by the [`ModeRegistry`] the state was built against;
//! every operation returns a new state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, sqrt_ratio, Real};

/// What a mode is used for in the interferometer layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Source,
    LoopCo,
    LoopCounter,
    Alice,
    Bob,
    Discard,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Source,
        Role::LoopCo,
        Role::LoopCounter,
        Role::Alice,
        Role::Bob,
        Role::Discard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::LoopCo => "loop-co",
            Role::LoopCounter => "loop-counter",
            Role::Alice => "alice",
            Role::Bob => "bob",
            Role::Discard => "discard",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

/// A named optical mode. Labels follow `path.POL`, e.g. `a.H`, `bob.V`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId {
    index: usize,
    label: String,
}

impl ModeId {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Polarization encoded in the label suffix, if any.
    pub fn polarization(&self) -> Option<Polarization> {
        match self.label.rsplit_once('.') {
            Some((_, "H")) => Some(Polarization::H),
            Some((_, "V")) => Some(Polarization::V),
            _ => None,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Ordered set of modes with one role each. Indices are contiguous from zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<ModeId>,
    roles: Vec<Role>,
}

impl ModeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_modes<'a>(modes: impl IntoIterator<Item = (&'a str, Role)>) -> Result<Self> {
        let mut reg = Self::new();
        for (label, role) in modes {
            reg.add(label, role)?;
        }
        Ok(reg)
    }

    pub fn add(&mut self, label: &str, role: Role) -> Result<ModeId> {
        if self.modes.iter().any(|m| m.label == label) {
            return Err(Error::DuplicateLabel(label.to_owned()));
        }
        let id = ModeId {
            index: self.modes.len(),
            label: label.to_owned(),
        };
        self.modes.push(id.clone());
        self.roles.push(role);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.modes.iter().map(|m| m.label.as_str())
    }

    pub fn mode(&self, label: &str) -> Result<&ModeId> {
        self.modes
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_owned()))
    }

    pub fn by_index(&self, index: usize) -> Result<&ModeId> {
        self.modes.get(index).ok_or(Error::UnknownModeIndex(index))
    }

    pub fn contains(&self, mode: &ModeId) -> bool {
        self.modes.get(mode.index).is_some_and(|m| m == mode)
    }

    pub(crate) fn check(&self, mode: &ModeId) -> Result<()> {
        if self.contains(mode) {
            Ok(())
        } else {
            Err(Error::UnknownMode(mode.label.clone()))
        }
    }

    pub fn role(&self, mode: &ModeId) -> Result<Role> {
        self.check(mode)?;
        Ok(self.roles[mode.index])
    }

    pub fn roles(&self) -> impl Iterator<Item = (&ModeId, Role)> {
        self.modes.iter().zip(self.roles.iter().copied())
    }

    pub fn modes_with_role(&self, role: Role) -> Vec<&ModeId> {
        self.roles()
            .filter(|&(_, r)| r == role)
            .map(|(m, _)| m)
            .collect()
    }

    /// Modes read out for a role in a count constraint.
    ///
    /// A layout without dedicated detector modes (the bare loop) is read out
    /// directly at the loop beam splitter: port `a` feeds Alice and port `b`
    /// feeds Bob.
    pub fn detection_modes(&self, role: Role) -> Vec<&ModeId> {
        let direct = self.modes_with_role(role);
        if !direct.is_empty() {
            return direct;
        }
        match role {
            Role::Alice => self.modes_with_role(Role::LoopCo),
            Role::Bob => self.modes_with_role(Role::LoopCounter),
            _ => direct,
        }
    }
}

/// Photon count per mode, full length (one entry per registry mode).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Vec<u8>);

impl OccupationVector {
    pub fn new(counts: Vec<u8>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u8 {
        self.0[index]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| u32::from(n)).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

/// 2x2 complex matrix acting on a pair of creation operators:
/// `m1^dag -> u[0][0] m1^dag + u[0][1] m2^dag`, `m2^dag -> u[1][0] m1^dag + u[1][1] m2^dag`.
pub type Mat2<T> = [[Complex<T>; 2]; 2];

pub fn dagger<T: Real>(u: &Mat2<T>) -> Mat2<T> {
    [
        [u[0][0].conj(), u[1][0].conj()],
        [u[0][1].conj(), u[1][1].conj()],
    ]
}

/// Largest entry-wise deviation of `u u^dagger` from the identity.
pub fn unitarity_deviation<T: Real>(u: &Mat2<T>) -> T {
    let ud = dagger(u);
    let mut worst = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex::zero();
            for k in 0..2 {
                acc = acc + u[i][k] * ud[k][j];
            }
            if i == j {
                acc = acc - Complex::one();
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn factorial(n: u8) -> u64 {
    (1..=u64::from(n)).product()
}

fn binomial(n: u8, k: u8) -> u64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Required photon count per role, e.g. one at Alice and one at Bob.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountConstraint(BTreeMap<Role, u32>);

impl CountConstraint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn require(mut self, role: Role, count: u32) -> Self {
        self.0.insert(role, count);
        self
    }

    /// One photon at each party.
    pub fn coincidence() -> Self {
        Self::new().require(Role::Alice, 1).require(Role::Bob, 1)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Role, u32)> + '_ {
        self.0.iter().map(|(&r, &n)| (r, n))
    }
}

/// Result of a count projection. `state` is `None` when nothing survives.
#[derive(Clone, Debug)]
pub struct Projection<T: Real> {
    pub state: Option<FockState<T>>,
    pub probability: T,
}

/// Sparse superposition of occupation vectors.
#[derive(Clone, Debug)]
pub struct FockState<T: Real> {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<OccupationVector, Complex<T>>,
    prune: T,
}

/// Applies the creation operators in `creations` to vacuum and normalizes.
/// Repeated modes pick up the usual `sqrt(n!)`, which normalization absorbs.
pub fn make_state<T: Real>(
    registry: &Arc<ModeRegistry>,
    creations: &[ModeId],
) -> Result<FockState<T>> {
    if creations.is_empty() {
        return Err(Error::EmptyCreationList);
    }
    let mut counts = vec![0u8; registry.len()];
    for m in creations {
        registry.check(m)?;
        counts[m.index()] += 1;
    }
    let mut terms = BTreeMap::new();
    terms.insert(OccupationVector(counts), Complex::one());
    Ok(FockState {
        registry: Arc::clone(registry),
        terms,
        prune: T::PRUNE_THRESHOLD,
    })
}

impl<T: Real> FockState<T> {
    /// Builds a state from explicit terms. Amplitudes are taken as given
    /// (no normalization); duplicate occupation vectors are summed.
    pub fn from_terms(
        registry: &Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Vec<u8>, Complex<T>)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<OccupationVector, Complex<T>> = BTreeMap::new();
        let mut total = None;
        for (counts, amp) in terms {
            if counts.len() != registry.len() {
                return Err(Error::RegistryMismatch);
            }
            let occ = OccupationVector(counts);
            let n = occ.total();
            if *total.get_or_insert(n) != n {
                return Err(Error::InvalidConfig(
                    "terms with different total photon number".into(),
                ));
            }
            *map.entry(occ).or_insert_with(Complex::zero) += amp;
        }
        let mut state = Self {
            registry: Arc::clone(registry),
            terms: map,
            prune: T::PRUNE_THRESHOLD,
        };
        state.prune_dust();
        Ok(state)
    }

    pub fn with_prune_threshold(mut self, threshold: T) -> Self {
        self.prune = threshold;
        self.prune_dust();
        self
    }

    pub fn prune_threshold(&self) -> T {
        self.prune
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, counts: &[u8]) -> Complex<T> {
        self.terms
            .get(&OccupationVector(counts.to_vec()))
            .copied()
            .unwrap_or_else(Complex::zero)
    }

    /// Amplitude of the term with one photon in each listed mode
    /// (repeats allowed) and vacuum elsewhere.
    pub fn amplitude_of(&self, modes: &[&ModeId]) -> Complex<T> {
        let mut counts = vec![0u8; self.registry.len()];
        for m in modes {
            counts[m.index()] += 1;
        }
        self.amplitude(&counts)
    }

    pub fn norm_sqr(&self) -> T {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Total photon number, `None` for the empty state.
    pub fn photon_number(&self) -> Option<u32> {
        self.terms.keys().next().map(OccupationVector::total)
    }

    fn same_registry(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry == other.registry {
            Ok(())
        } else {
            Err(Error::RegistryMismatch)
        }
    }

    fn prune_dust(&mut self) {
        let cut = self.prune;
        self.terms.retain(|_, a| a.norm() >= cut);
    }

    fn rebuilt(&self, terms: BTreeMap<OccupationVector, Complex<T>>) -> Self {
        let mut out = Self {
            registry: Arc::clone(&self.registry),
            terms,
            prune: self.prune,
        };
        out.prune_dust();
        out
    }

    /// Substitutes the creation operators of `m1`, `m2` according to `u`
    /// and re-expands every term.
    pub fn apply_mode_transform(&self, u: &Mat2<T>, m1: &ModeId, m2: &ModeId) -> Result<Self> {
        self.registry.check(m1)?;
        self.registry.check(m2)?;
        if m1 == m2 {
            return Err(Error::SameMode(m1.label().to_owned()));
        }
        let dev = unitarity_deviation(u);
        if !(dev <= T::UNITARY_TOL) {
            return Err(Error::NotUnitary {
                deviation: dev.as_f64(),
            });
        }
        let (i1, i2) = (m1.index(), m2.index());
        let mut out: BTreeMap<OccupationVector, Complex<T>> = BTreeMap::new();
        for (occ, &amp) in &self.terms {
            let (n1, n2) = (occ.0[i1], occ.0[i2]);
            if n1 == 0 && n2 == 0 {
                *out.entry(occ.clone()).or_insert_with(Complex::zero) += amp;
                continue;
            }
            let norm_in = factorial(n1) * factorial(n2);
            // (u00 m1 + u01 m2)^n1 (u10 m1 + u11 m2)^n2, binomially expanded.
            for j in 0..=n1 {
                let left = u[0][0].powu(u32::from(j)) * u[0][1].powu(u32::from(n1 - j));
                for k in 0..=n2 {
                    let right = u[1][0].powu(u32::from(k)) * u[1][1].powu(u32::from(n2 - k));
                    let p = j + k;
                    let q = n1 + n2 - p;
                    let comb = binomial(n1, j) * binomial(n2, k);
                    let weight = T::from_u64(comb).expect("u64")
                        * sqrt_ratio::<T>(factorial(p) * factorial(q), norm_in);
                    let mut counts = occ.0.clone();
                    counts[i1] = p;
                    counts[i2] = q;
                    *out.entry(OccupationVector(counts))
                        .or_insert_with(Complex::zero) += amp * left * right * weight;
                }
            }
        }
        Ok(self.rebuilt(out))
    }

    /// Multiplies every term by `exp(i theta n_m)`.
    pub fn apply_phase(&self, m: &ModeId, theta: T) -> Result<Self> {
        self.registry.check(m)?;
        let idx = m.index();
        let terms = self
            .terms
            .iter()
            .map(|(occ, &amp)| {
                let n = T::from_u8(occ.0[idx]).expect("u8");
                (occ.clone(), amp * cis(theta * n))
            })
            .collect();
        Ok(self.rebuilt(terms))
    }

    /// Keeps the terms whose photon count in each constrained role matches.
    /// `probability` is the kept mass of this state as given; the returned
    /// state is renormalized.
    pub fn project_onto_counts(&self, constraint: &CountConstraint) -> Result<Projection<T>> {
        let mut groups = Vec::new();
        for (role, count) in constraint.entries() {
            let modes: Vec<usize> = self
                .registry
                .detection_modes(role)
                .into_iter()
                .map(ModeId::index)
                .collect();
            if modes.is_empty() {
                return Err(Error::MissingRole(role));
            }
            groups.push((modes, count));
        }
        let kept: BTreeMap<_, _> = self
            .terms
            .iter()
            .filter(|(occ, _)| {
                groups.iter().all(|(modes, count)| {
                    modes.iter().map(|&i| u32::from(occ.0[i])).sum::<u32>() == *count
                })
            })
            .map(|(o, &a)| (o.clone(), a))
            .collect();
        let probability: T = kept.values().map(|a| a.norm_sqr()).sum();
        if kept.is_empty() || probability <= T::zero() {
            return Ok(Projection {
                state: None,
                probability: T::zero(),
            });
        }
        let scale = probability.sqrt().recip();
        let terms = kept.into_iter().map(|(o, a)| (o, a.scale(scale))).collect();
        Ok(Projection {
            state: Some(self.rebuilt(terms)),
            probability,
        })
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex<T>> {
        self.same_registry(other)?;
        let (small, large, flip) = if self.terms.len() <= other.terms.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex::zero();
        for (occ, a) in &small.terms {
            if let Some(b) = large.terms.get(occ) {
                acc = acc + if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// `|<a|b>|^2 / (<a|a><b|b>)`.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        let overlap = self.inner_product(other)?.norm_sqr();
        Ok(overlap / (self.norm_sqr() * other.norm_sqr()))
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(o, &a)| (o.clone(), a * c))
            .collect();
        self.rebuilt(terms)
    }

    /// Term-wise sum with another state on the same registry.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.same_registry(other)?;
        if let (Some(a), Some(b)) = (self.photon_number(), other.photon_number()) {
            if a != b {
                return Err(Error::InvalidConfig(
                    "cannot superpose states with different photon numbers".into(),
                ));
            }
        }
        let mut terms = self.terms.clone();
        for (o, &a) in &other.terms {
            *terms.entry(o.clone()).or_insert_with(Complex::zero) += a;
        }
        Ok(self.rebuilt(terms))
    }

    pub fn to_dump(&self) -> StateDump {
        StateDump {
            modes: self.registry.labels().map(str::to_owned).collect(),
            terms: self
                .terms
                .iter()
                .map(|(occ, a)| TermDump {
                    occ: occ.0.clone(),
                    re: a.re.as_f64(),
                    im: a.im.as_f64(),
                })
                .collect(),
        }
    }

    /// Rebuilds a state from its dump; the mode labels must match `registry` in order.
    pub fn from_dump(registry: &Arc<ModeRegistry>, dump: &StateDump) -> Result<Self> {
        if !dump.modes.iter().map(String::as_str).eq(registry.labels()) {
            return Err(Error::RegistryMismatch);
        }
        Self::from_terms(
            registry,
            dump.terms
                .iter()
                .map(|t| (t.occ.clone(), Complex::new(T::lit(t.re), T::lit(t.im)))),
        )
    }
}

/// JSON form of a state: `{"modes": [...], "terms": [{"occ": [...], "re": .., "im": ..}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub modes: Vec<String>,
    pub terms: Vec<TermDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDump {
    pub occ: Vec<u8>,
    pub re: f64,
    pub im: f64,
}
