//! Independent check of the sparse Fock kernel.
//!
//! The oracle never touches `FockState` arithmetic. It composes every element
//! into one single-particle matrix `G` (with `a_k^dag -> sum_l G[k][l] a_l^dag`),
//! multiplies out the creation-operator polynomial for the input photons,
//! and converts each monomial to a normalized Fock amplitude with
//! `prod sqrt(n_k!)`.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64 as C;
use rand::Rng;
use sagnac_core::fock::Mat2;
use sagnac_core::{make_state, FockState, ModeId, ModeRegistry, Role};

pub const TOL: f64 = 1e-12;

type Matrix = Vec<Vec<C>>;

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        C::new(1.0, 0.0)
                    } else {
                        C::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Single-particle map of one step, embedded in `n` modes.
#[derive(Clone, Debug)]
pub enum Op {
    Pair(usize, usize, Mat2<f64>),
    Phase(usize, f64),
}

impl Op {
    fn global(&self, n: usize) -> Matrix {
        let mut g = identity(n);
        match *self {
            Op::Pair(i, j, u) => {
                g[i][i] = u[0][0];
                g[i][j] = u[0][1];
                g[j][i] = u[1][0];
                g[j][j] = u[1][1];
            }
            Op::Phase(i, t) => g[i][i] = C::from_polar(1.0, t),
        }
        g
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Expands `prod_p (sum_l G[in_p][l] a_l^dag) |0>` into Fock amplitudes.
pub fn oracle(n: usize, input: &[usize], ops: &[Op]) -> BTreeMap<Vec<u8>, C> {
    let g = ops
        .iter()
        .fold(identity(n), |acc, op| matmul(&acc, &op.global(n)));

    // Polynomial in creation operators: sorted mode multiset -> coefficient.
    let mut poly: BTreeMap<Vec<usize>, C> = BTreeMap::from([(Vec::new(), C::new(1.0, 0.0))]);
    for &k in input {
        let mut next = BTreeMap::new();
        for (mono, c) in &poly {
            for (l, &gkl) in g[k].iter().enumerate() {
                if gkl == C::new(0.0, 0.0) {
                    continue;
                }
                let mut m = mono.clone();
                m.push(l);
                m.sort_unstable();
                *next.entry(m).or_insert(C::new(0.0, 0.0)) += c * gkl;
            }
        }
        poly = next;
    }

    // Normalization of the input state itself.
    let mut in_occ = vec![0u32; n];
    input.iter().for_each(|&k| in_occ[k] += 1);
    let in_norm: f64 = in_occ.iter().map(|&c| factorial(c).sqrt()).product();

    poly.into_iter()
        .map(|(mono, c)| {
            let mut occ = vec![0u8; n];
            mono.iter().for_each(|&l| occ[l] += 1);
            let w: f64 = occ
                .iter()
                .map(|&c| factorial(u32::from(c)).sqrt())
                .product();
            (occ, c * w / in_norm)
        })
        .filter(|(_, c)| c.norm() > 0.0)
        .collect()
}

pub fn simulate(reg: &Arc<ModeRegistry>, input: &[usize], ops: &[Op]) -> FockState {
    let modes = reg.modes();
    let ids: Vec<ModeId> = input.iter().map(|&k| modes[k].clone()).collect();
    let mut s: FockState = make_state(reg, &ids).unwrap();
    for op in ops {
        s = match *op {
            Op::Pair(i, j, u) => s.apply_mode_transform(&u, &modes[i], &modes[j]).unwrap(),
            Op::Phase(i, t) => s.apply_phase(&modes[i], t).unwrap(),
        };
    }
    s
}

/// Largest per-amplitude deviation over the union of both supports.
pub fn max_deviation(sim: &FockState, want: &BTreeMap<Vec<u8>, C>) -> f64 {
    let from_oracle = want.iter().map(|(occ, &a)| (sim.amplitude(occ) - a).norm());
    let from_sim = sim
        .terms()
        .map(|(occ, &a)| (a - want.get(occ.counts()).copied().unwrap_or_default()).norm());
    from_oracle.chain(from_sim).fold(0.0, f64::max)
}

/// `e^{i alpha} [[cos t e^{i beta}, sin t e^{i gamma}], [-sin t e^{-i gamma}, cos t e^{-i beta}]]`
pub fn random_unitary(rng: &mut impl Rng) -> Mat2<f64> {
    let (alpha, beta, gamma) = (
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    );
    let t = rng.random_range(0.0..FRAC_PI_2);
    let g = C::from_polar(1.0, alpha);
    [
        [
            g * C::from_polar(t.cos(), beta),
            g * C::from_polar(t.sin(), gamma),
        ],
        [
            -g * C::from_polar(t.sin(), -gamma),
            g * C::from_polar(t.cos(), -beta),
        ],
    ]
}

pub fn registry(n: usize) -> Arc<ModeRegistry> {
    let labels: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    Arc::new(ModeRegistry::with_modes(labels.iter().map(|l| (l.as_str(), Role::Source))).unwrap())
}

pub fn sym_bs() -> Mat2<f64> {
    let r = C::new(FRAC_1_SQRT_2, 0.0);
    let i = C::new(0.0, FRAC_1_SQRT_2);
    [[r, i], [i, r]]
}

pub fn conj_transpose(u: Mat2<f64>) -> Mat2<f64> {
    [
        [u[0][0].conj(), u[1][0].conj()],
        [u[0][1].conj(), u[1][1].conj()],
    ]
}

pub const SWAP: Mat2<f64> = [
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
];

// Core layout indices: a.H a.V b.H b.V.
pub const AH: usize = 0;
pub const AV: usize = 1;
pub const BH: usize = 2;
pub const BV: usize = 3;

pub fn loop_ops(phi: f64, exit: Mat2<f64>) -> Vec<Op> {
    vec![
        Op::Pair(AH, BH, sym_bs()),
        Op::Pair(AV, BV, sym_bs()),
        Op::Phase(AH, phi / 2.0),
        Op::Phase(AV, phi / 2.0),
        Op::Phase(BH, -phi / 2.0),
        Op::Phase(BV, -phi / 2.0),
        Op::Pair(AH, BH, exit),
        Op::Pair(AV, BV, exit),
    ]
}

pub fn occ(modes: &[usize]) -> Vec<u8> {
    let mut o = vec![0u8; 4];
    modes.iter().for_each(|&m| o[m] += 1);
    o
}

pub fn amp(state: &BTreeMap<Vec<u8>, C>, modes: &[usize]) -> C {
    state.get(&occ(modes)).copied().unwrap_or_default()
}

/// Random circuit over `2..=12` modes with a two-photon input.
pub fn random_case(rng: &mut impl Rng) -> (usize, [usize; 2], Vec<Op>) {
    let n = rng.random_range(2..=12);
    let input = [rng.random_range(0..n), rng.random_range(0..n)];
    let ops = (0..rng.random_range(3..=14))
        .map(|_| {
            if rng.random_bool(0.7) {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                Op::Pair(i, j, random_unitary(rng))
            } else {
                Op::Phase(rng.random_range(0..n), rng.random_range(-PI..PI))
            }
        })
        .collect();
    (n, input, ops)
}
