//! Acceptance criteria for the simulator and the `sagnac-bell` binary.
//!
//! Custom harness: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. `cargo test -p sagnac-cli --test acceptance`.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagnac_core::bell::{chsh_s, postselect};
use sagnac_core::lang::load;
use sagnac_core::{
    coil_area, entry_beamsplitter, exit_beamsplitter, sagnac_loop_element, sagnac_phase,
    BlochVector, Circuit, MeasurementSetting, OpticalElement, PhaseArg, Preset, SagnacConfig,
    TwoQubitState, SPEED_OF_LIGHT,
};
use serde_json::Value;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const TSIRELSON: f64 = 2.0 * SQRT_2;

fn workspace(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join(rel)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sagnac-bell"))
}

fn within(t: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let e = t.elapsed();
    ensure!(e < limit, "{what} took {e:?}, limit {limit:?}");
    Ok(e)
}

/// `a = x`, `a' = y`, `b = (x + y)/sqrt2`, `b' = (y - x)/sqrt2`, built from components.
fn chsh_settings() -> MeasurementSetting {
    let v = |x, y, z| BlochVector::new(x, y, z).unwrap();
    MeasurementSetting {
        a: v(1.0, 0.0, 0.0),
        a_prime: v(0.0, 1.0, 0.0),
        b: v(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0),
        b_prime: v(-FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0),
    }
}

fn expected_s(phi: f64) -> f64 {
    4.0 * SQRT_2 * phi.sin().powi(2) / (3.0 + (2.0 * phi).cos())
}

fn expected_p(phi: f64) -> f64 {
    (1.0 + phi.cos().powi(2)) / 32.0
}

fn singlet() -> TwoQubitState {
    let z = C::new(0.0, 0.0);
    TwoQubitState::new(
        z,
        C::new(FRAC_1_SQRT_2, 0.0),
        C::new(-FRAC_1_SQRT_2, 0.0),
        z,
    )
    .unwrap()
}

fn random_phis(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..n)
        .map(|_| rng.random_range(-2.0 * PI..=2.0 * PI))
        .collect()
}

/// 4001 points on `[-2 pi, 2 pi]`, hitting `pi/2 + k pi` exactly.
fn phi_grid() -> Vec<f64> {
    (0..=4000)
        .map(|m| -2.0 * PI + PI * f64::from(m) / 1000.0)
        .collect()
}

fn postselected(c: &Circuit, phi: f64) -> TwoQubitState {
    postselect(c.run(Some(phi)).unwrap())
        .unwrap()
        .state
        .unwrap()
}

fn c1_bell_state() -> Check {
    let t = Instant::now();
    let core = Preset::Core4.circuit(PhaseArg::Phi);
    let f = postselected(&core, FRAC_PI_2).fidelity(&singlet());
    let e = within(t, Duration::from_secs(1), "simulation")?;
    ensure!(f >= 1.0 - 1e-12, "fidelity {f}");
    Ok(format!("fidelity 1 - {:.1e}, {e:?}", 1.0 - f))
}

fn c2_closed_form_curve() -> Check {
    let t = Instant::now();
    let set = chsh_settings();
    let core = Preset::Core4.circuit(PhaseArg::Phi);
    let mut worst = 0.0_f64;
    for phi in random_phis(1000) {
        let s = chsh_s(&postselected(&core, phi), &set).abs();
        worst = worst.max((s - expected_s(phi)).abs());
    }
    let e = within(t, Duration::from_secs(10), "1000 simulations")?;
    ensure!(worst <= 1e-10, "max deviation {worst:e}");
    Ok(format!(
        "max ||S| - closed form| = {worst:.1e} over 1000 phi, {e:?}"
    ))
}

fn c3_tsirelson() -> Check {
    let set = chsh_settings();
    let core = Preset::Core4.circuit(PhaseArg::Phi);
    let grid = phi_grid();
    let s: Vec<f64> = grid
        .iter()
        .map(|&p| chsh_s(&postselected(&core, p), &set).abs())
        .collect();
    let max = s.iter().copied().fold(0.0, f64::max);
    ensure!((max - TSIRELSON).abs() <= 1e-9, "max |S| = {max}");
    ensure!(
        s.iter().all(|&x| x <= TSIRELSON + 1e-9),
        "grid exceeds the bound"
    );
    let argmax: Vec<f64> = grid
        .iter()
        .zip(&s)
        .filter(|(_, &x)| x >= max - 1e-9)
        .map(|(&p, _)| p)
        .collect();
    for p in &argmax {
        let k = ((p - FRAC_PI_2) / PI).round();
        ensure!(
            (p - FRAC_PI_2 - k * PI).abs() < 1e-9,
            "maximum at phi = {p}, not pi/2 + k pi"
        );
    }
    ensure!(argmax.len() == 4, "maxima at {argmax:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut unit = || {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let az: f64 = rng.random_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).sqrt();
        BlochVector::normalize(r * az.cos(), r * az.sin(), z).unwrap()
    };
    let mut worst = 0.0_f64;
    for phi in random_phis(100) {
        let st = postselected(&core, phi);
        for _ in 0..1000 {
            let q = MeasurementSetting {
                a: unit(),
                a_prime: unit(),
                b: unit(),
                b_prime: unit(),
            };
            worst = worst.max(chsh_s(&st, &q).abs());
        }
    }
    ensure!(
        worst <= TSIRELSON + 1e-9,
        "random settings reach |S| = {worst}"
    );
    Ok(format!(
        "max |S| = 2sqrt2 {:+.1e} at pi/2 + k pi (k = -2..1); random settings max {worst:.6}",
        max - TSIRELSON
    ))
}

fn c4_detection_probability() -> Check {
    let full = Preset::Full12.circuit(PhaseArg::Phi);
    let mut worst = 0.0_f64;
    for phi in phi_grid().into_iter().chain(random_phis(1000)) {
        let p = postselect(full.run(Some(phi)).unwrap())
            .unwrap()
            .coincidence_probability;
        worst = worst.max((p - expected_p(phi)).abs());
    }
    ensure!(worst <= 1e-10, "max deviation {worst:e}");
    Ok(format!(
        "max |P - (1 + cos^2 phi)/32| = {worst:.1e} over 5001 phi"
    ))
}

fn c5_bell_frequency() -> Check {
    let (lambda, area) = (1e-6, coil_area(10, 0.5));
    ensure!((area - 7.853981).abs() < 1e-6, "area {area}");
    let cfg = SagnacConfig::new(area, lambda, 0.0).unwrap();
    let bf = sagnac_core::bell::omega_bell(&cfg, 0);
    let omega = SPEED_OF_LIGHT * lambda / (16.0 * area);
    ensure!(
        (bf.omega_rad_s / omega - 1.0).abs() < 1e-12,
        "omega {} vs {omega}",
        bf.omega_rad_s
    );
    ensure!(
        (bf.freq_hz / 0.379 - 1.0).abs() <= 0.02,
        "f = {} Hz",
        bf.freq_hz
    );
    let phi = sagnac_phase(&cfg.with_omega(bf.omega_rad_s).unwrap());
    ensure!((phi / FRAC_PI_2 - 1.0).abs() <= 1e-9, "phase {phi}");
    Ok(format!(
        "Omega = {:.5} rad/s, f = {:.5} Hz, phase/(pi/2) - 1 = {:.1e}",
        bf.omega_rad_s,
        bf.freq_hz,
        phi / FRAC_PI_2 - 1.0
    ))
}

fn c6_sweep_figure() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let (csv_path, svg_path) = (dir.path().join("sweep.csv"), dir.path().join("sweep.svg"));
    let t = Instant::now();
    let out = bin()
        .args([
            "-q",
            "sweep",
            "--loops",
            "10",
            "--radius-m",
            "0.5",
            "--wavelength-m",
            "1e-6",
        ])
        .args(["--f-min", "0", "--f-max", "2", "--n", "401"])
        .arg("--output")
        .arg(&csv_path)
        .arg("--svg")
        .arg(&svg_path)
        .output()
        .unwrap();
    let e = within(t, Duration::from_secs(5), "sweep")?;
    ensure!(
        out.status.success(),
        "sweep failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    #[derive(serde::Deserialize)]
    struct Row {
        f_hz: f64,
        #[serde(rename = "S_abs")]
        s_abs: f64,
        #[serde(rename = "P_coincidence")]
        p: f64,
        violation: bool,
    }
    let rows: Vec<Row> = csv::Reader::from_path(&csv_path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure!(rows.len() == 401, "{} rows", rows.len());
    let peaks: Vec<f64> = rows
        .windows(3)
        .filter(|w| w[1].s_abs > w[0].s_abs && w[1].s_abs >= w[2].s_abs)
        .map(|w| w[1].f_hz)
        .collect();
    ensure!(peaks.len() == 3, "peaks at {peaks:?}");
    for (got, want) in peaks.iter().zip([0.379, 1.138, 1.896]) {
        ensure!(
            (got / want - 1.0).abs() <= 0.02,
            "peak at {got} Hz, expected {want}"
        );
    }
    ensure!(
        rows.iter().all(|r| r.violation == (r.s_abs > 2.0)),
        "violation flag mismatch"
    );
    let pmin = rows.iter().map(|r| r.p).fold(f64::INFINITY, f64::min);
    let pmax = rows.iter().map(|r| r.p).fold(0.0, f64::max);
    ensure!(
        pmin >= 1.0 / 32.0 - 1e-12 && pmax <= 1.0 / 16.0 + 1e-12,
        "P outside [1/32, 1/16]"
    );
    ensure!(
        (pmin - 1.0 / 32.0).abs() < 1e-5 && (pmax - 1.0 / 16.0).abs() < 1e-5,
        "P range [{pmin}, {pmax}]"
    );
    let svg = fs::read_to_string(&svg_path).unwrap();
    ensure!(
        svg.starts_with("<svg") && svg.matches("<polyline").count() == 2,
        "malformed svg"
    );
    Ok(format!(
        "peaks at {:.3}, {:.3}, {:.3} Hz; P in [{pmin:.5}, {pmax:.5}]; CSV + SVG in {e:?}",
        peaks[0], peaks[1], peaks[2]
    ))
}

fn c7_oracle() -> Check {
    use oracle::*;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c7);
    let mut worst = 0.0_f64;
    let cases = 40;
    for _ in 0..cases {
        let (n, input, ops) = random_case(&mut rng);
        ensure!(n <= 12, "too many modes");
        let dev = max_deviation(
            &simulate(&registry(n), &input, &ops),
            &oracle(n, &input, &ops),
        );
        worst = worst.max(dev);
    }
    ensure!(worst <= TOL, "random corpus deviation {worst:e}");

    let core = Preset::Core4.circuit(PhaseArg::Phi);
    let mut bunch = 0.0_f64;
    for phi in random_phis(50) {
        let half_s = phi.sin() / 2.0;
        // Expansion of the inverse splitter with output ports read as in the rearranged state.
        let mut ops = loop_ops(phi, conj_transpose(sym_bs()));
        ops.extend([Op::Pair(AH, BH, SWAP), Op::Pair(AV, BV, SWAP)]);
        let expanded = oracle(4, &[AH, BV], &ops);
        bunch = bunch
            .max((amp(&expanded, &[AH, AV]) - half_s).norm())
            .max((amp(&expanded, &[BH, BV]) + half_s).norm())
            .max(amp(&expanded, &[AH, AH]).norm())
            .max(amp(&expanded, &[BV, BV]).norm());

        // The simulator, in its own port labelling, against the oracle.
        let sim = core.run(Some(phi)).unwrap();
        let own = oracle(4, &[AH, BV], &loop_ops(phi, conj_transpose(sym_bs())));
        worst = worst.max(max_deviation(&sim, &own));
        let relabelled = (sim.amplitude(&occ(&[BH, BV])) - half_s).norm();
        bunch = bunch.max(relabelled);
    }
    ensure!(worst <= TOL, "loop deviation {worst:e}");
    ensure!(bunch <= TOL, "bunching terms deviate by {bunch:e}");
    Ok(format!(
        "{cases} random circuits + 50 loops, max deviation {worst:.1e}; bunching = (sin phi/2)(aH aV - bH bV)"
    ))
}

fn c8_common_mode() -> Check {
    let reg = Preset::Core4.registry();
    let m = |l: &str| reg.mode(l).unwrap().clone();
    let shift = |l: &str, theta: f64| OpticalElement::PhaseShift { mode: m(l), theta };
    let with_extra = |phi: f64, extra: Vec<OpticalElement>| {
        let mut els = entry_beamsplitter(&reg).unwrap();
        els.push(sagnac_loop_element(PhaseArg::Value(phi), &reg).unwrap());
        els.extend(extra);
        els.extend(exit_beamsplitter(&reg).unwrap());
        let c = Circuit::new(reg.clone(), vec![m("a.H"), m("b.V")], els).unwrap();
        postselect(c.run(None).unwrap()).unwrap().state.unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let phi = rng.random_range(-2.0 * PI..2.0 * PI);
        let base = with_extra(phi, vec![]);
        let (th, tv, common) = (
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
        );
        let pol = with_extra(
            phi,
            vec![
                shift("a.H", th),
                shift("b.H", th),
                shift("a.V", tv),
                shift("b.V", tv),
            ],
        );
        let all = with_extra(
            phi,
            ["a.H", "a.V", "b.H", "b.V"]
                .map(|l| shift(l, common))
                .to_vec(),
        );
        worst = worst
            .max(1.0 - pol.fidelity(&base))
            .max(1.0 - all.fidelity(&base));
    }
    ensure!(worst < 1e-12, "fidelity loss {worst:e}");
    Ok(format!(
        "max fidelity change {worst:.1e} over 200 random phases"
    ))
}

fn sample_json(args: &[&str]) -> Result<Value, String> {
    let out = bin().args(["-q", "sample"]).args(args).output().unwrap();
    ensure!(
        out.status.success(),
        "sample failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn c9_statistics() -> Check {
    let phi = FRAC_PI_2.to_string();
    let mut stderr = Vec::new();
    let mut last = (0.0, 0.0, Duration::ZERO);
    for shots in ["10000", "100000", "1000000"] {
        let t = Instant::now();
        let v = sample_json(&[
            "--phi",
            &phi,
            "--seed",
            "42",
            "--efficiency",
            "1",
            "--shots",
            shots,
        ])?;
        let e = t.elapsed();
        let (s, err) = (v["S_hat"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
        stderr.push(err);
        last = (s, err, e);
    }
    let (s, err, e) = last;
    ensure!(e < Duration::from_secs(30), "10^6 shots took {e:?}");
    ensure!(
        (s.abs() - 2.828).abs() <= 3.0 * err,
        "|S_hat| = {} +- {err}",
        s.abs()
    );
    for w in stderr.windows(2) {
        let r = w[0] / w[1] / 10f64.sqrt();
        ensure!((0.8..=1.25).contains(&r), "stderr ratio {r} of nominal");
    }
    let total = stderr[0] / stderr[2];
    ensure!(
        (8.0..=12.5).contains(&total),
        "10^4 / 10^6 stderr ratio {total}"
    );

    let v = sample_json(&[
        "--phi", "0", "--seed", "42", "--shots", "1000000", "--preset", "full12",
    ])?;
    let rate = v["coincidence_rate"].as_f64().unwrap();
    let sigma = (1.0 / 16.0 * (15.0 / 16.0) / 1e6_f64).sqrt();
    ensure!(
        (rate - 1.0 / 16.0).abs() <= 3.0 * sigma,
        "coincidence rate {rate}"
    );
    Ok(format!(
        "|S_hat| = {:.4} +- {err:.4} ({e:?}); stderr 10^4/10^6 = {total:.2}; rate(phi=0) = {rate:.5}",
        s.abs()
    ))
}

fn c10_parser() -> Check {
    let core_src = fs::read_to_string(workspace("core/circuits/core4.icl")).unwrap();
    let full_src = fs::read_to_string(workspace("core/circuits/full12.icl")).unwrap();
    let (_, core) = load::<f64>(&core_src).map_err(|e| e.to_string())?;
    let (_, full) = load::<f64>(&full_src).map_err(|e| e.to_string())?;
    let f = postselected(&core, FRAC_PI_2).fidelity(&singlet());
    ensure!(f >= 1.0 - 1e-12, "core4.icl fidelity {f}");
    let mut worst = 0.0_f64;
    for phi in phi_grid() {
        let p = postselect(full.run(Some(phi)).unwrap())
            .unwrap()
            .coincidence_probability;
        worst = worst.max((p - expected_p(phi)).abs());
    }
    ensure!(worst <= 1e-10, "full12.icl deviation {worst:e}");

    let mut files: Vec<PathBuf> = fs::read_dir(workspace("core/tests/malformed"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    ensure!(files.len() >= 20, "only {} malformed files", files.len());
    for path in &files {
        let src = fs::read_to_string(path).unwrap();
        let err = match load::<f64>(&src) {
            Ok(_) => return Err(format!("{} was accepted", path.display())),
            Err(e) => e,
        };
        ensure!(
            err.span.within(&src),
            "{}: span {:?} out of bounds",
            path.display(),
            err.span
        );
        let out = bin().arg("parse-check").arg(path).output().unwrap();
        ensure!(
            out.status.code() == Some(2),
            "{}: exit {:?}",
            path.display(),
            out.status.code()
        );
        let diag = String::from_utf8_lossy(&out.stderr);
        let loc = format!(":{}:{}", err.span.line, err.span.column);
        ensure!(
            diag.contains(&loc) && diag.contains('^'),
            "{}: diagnostic {diag}",
            path.display()
        );
    }
    Ok(format!(
        "core4.icl fidelity 1 - {:.1e}; full12.icl max dP {worst:.1e}; {} malformed files exit 2 with spans",
        1.0 - f,
        files.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("Bell state at phi = pi/2", c1_bell_state),
        ("closed-form CHSH curve", c2_closed_form_curve),
        ("Tsirelson saturation", c3_tsirelson),
        ("detection probability", c4_detection_probability),
        ("Bell rotation frequency", c5_bell_frequency),
        ("rotation sweep figure", c6_sweep_figure),
        ("oracle equivalence", c7_oracle),
        ("common-mode robustness", c8_common_mode),
        ("statistical estimation", c9_statistics),
        ("parser contract", c10_parser),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
