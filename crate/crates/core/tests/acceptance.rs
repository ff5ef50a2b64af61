//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hadamard_nmr::hadamard::{decode_all, hadamard_matrix, schedule_for_row};
use hadamard_nmr::liouville::{
    apply_unitary, crush_coherences, evolve, free_propagator, observer_equilibrium,
};
use hadamard_nmr::memsearch::{
    record_hadamard_dataset, EncodedDataset, SliceAcquisition, SliceRegister,
};
use hadamard_nmr::pulsekit::{
    hard_pulse, j_evolution_encoding, mf_pi_pulse, transition_pulse_labels, Phase,
};
use hadamard_nmr::qip2d::{
    assemble_2d, conventional_correlation, hadamard_correlation, run_hadamard_2d, Acquisition,
    CorrelationMap, EncodingMode, GateSpec, DEFAULT_THRESHOLD,
};
use hadamard_nmr::specproc::{
    parseval_ratio, spectrum_1d, spectrum_1d_zero_filled, synthesize_fid,
};
use hadamard_nmr::spinsys::{presets, SpinSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Map = Vec<(String, String)>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pairs(map: &CorrelationMap) -> Map {
    map.pairs
        .iter()
        .map(|p| (p.input.to_string(), p.output.to_string()))
        .collect()
}

fn expected(list: &[(&str, &str)]) -> Map {
    list.iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn hadamard_map(sys: &SpinSystem, gate: &str) -> Result<CorrelationMap, String> {
    let acq = Acquisition::default_for(&sys.transition_table().map_err(|e| e.to_string())?);
    let gate = GateSpec::library(gate, sys).map_err(|e| e.to_string())?;
    hadamard_correlation(sys, &gate, &acq, EncodingMode::MfPulse, DEFAULT_THRESHOLD)
        .map(|(_, _, m)| m)
        .map_err(|e| e.to_string())
}

fn not12_correlation() -> Check {
    let sys = presets::c2f3i();
    let table = sys.transition_table().map_err(|e| e.to_string())?;
    let acq = Acquisition::default_for(&table);
    let gate = GateSpec::library("not12", &sys).map_err(|e| e.to_string())?;
    let want = expected(&[("00", "11"), ("01", "10"), ("10", "01"), ("11", "00")]);
    let (_, had_spec, had) =
        hadamard_correlation(&sys, &gate, &acq, EncodingMode::MfPulse, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?;
    let (raw, full, conv) = conventional_correlation(&sys, &gate, 128, &acq, DEFAULT_THRESHOLD)
        .map_err(|e| e.to_string())?;
    ensure(pairs(&had) == want, || {
        format!("hadamard map {:?}", pairs(&had))
    })?;
    ensure(pairs(&conv) == want, || {
        format!("conventional map {:?}", pairs(&conv))
    })?;
    ensure(raw.signal.len() == 128, || {
        format!("{} t1 increments", raw.signal.len())
    })?;
    let bin = had_spec.bin_width();
    ensure(
        (full.f2_axis[1] - full.f2_axis[0] - bin).abs() < 1e-12,
        || "F2 axes differ".into(),
    )?;
    let worst = had
        .pairs
        .iter()
        .zip(&conv.pairs)
        .map(|(a, b)| (a.f2_hz - b.f2_hz).abs())
        .fold(0.0, f64::max);
    ensure(worst <= bin, || {
        format!("F2 peak offset {worst:.4} Hz > bin {bin:.4} Hz")
    })?;
    Ok(format!(
        "both maps {{00→11, 01→10, 10→01, 11→00}}; max F2 offset {worst:.4} Hz (bin {bin:.4} Hz)"
    ))
}

fn gate_truth_tables() -> Check {
    let c2 = presets::c2f3i();
    let tf = presets::tfba();
    let cases: Vec<(&SpinSystem, &str, Map)> = vec![
        (
            &c2,
            "nop",
            expected(&[("00", "00"), ("01", "01"), ("10", "10"), ("11", "11")]),
        ),
        (
            &c2,
            "swap",
            expected(&[("00", "00"), ("01", "10"), ("10", "01"), ("11", "11")]),
        ),
        (
            &c2,
            "cnot1",
            expected(&[("00", "00"), ("01", "11"), ("10", "10"), ("11", "01")]),
        ),
        (
            &c2,
            "not1",
            expected(&[("00", "10"), ("01", "11"), ("10", "00"), ("11", "01")]),
        ),
        (
            &c2,
            "not2",
            expected(&[("00", "01"), ("01", "00"), ("10", "11"), ("11", "10")]),
        ),
        (
            &tf,
            "nop",
            expected(&[
                ("000", "000"),
                ("001", "001"),
                ("010", "010"),
                ("011", "011"),
                ("100", "100"),
                ("101", "101"),
                ("110", "110"),
                ("111", "111"),
            ]),
        ),
        (
            &tf,
            "toffoli",
            expected(&[
                ("000", "000"),
                ("001", "001"),
                ("010", "010"),
                ("011", "011"),
                ("100", "100"),
                ("101", "101"),
                ("110", "111"),
                ("111", "110"),
            ]),
        ),
    ];
    let mut names = Vec::new();
    for (sys, gate, want) in cases {
        let got = pairs(&hadamard_map(sys, gate)?);
        ensure(got == want, || {
            format!("{gate} on {}-spin system: {got:?}", sys.n_spins())
        })?;
        names.push(format!(
            "{gate}/{}",
            if sys.n_spins() == 3 { "c2f3i" } else { "tfba" }
        ));
    }
    Ok(format!("exact permutations for {}", names.join(", ")))
}

fn encoding_equivalence() -> Check {
    let sys = presets::tfba();
    let table = sys.transition_table().map_err(|e| e.to_string())?;
    let acq = Acquisition::default_for(&table);
    let mut worst: f64 = 0.0;
    let gates = ["nop", "not1", "not2", "not3", "not12", "toffoli"];
    for name in gates {
        let gate = GateSpec::library(name, &sys).map_err(|e| e.to_string())?;
        let spec = |mode| -> Result<_, String> {
            let set = run_hadamard_2d(&sys, &gate, &acq, mode).map_err(|e| e.to_string())?;
            assemble_2d(
                &set.decode().map_err(|e| e.to_string())?,
                &table,
                acq.zero_fill,
            )
            .map_err(|e| e.to_string())
        };
        let (mf, j) = (
            spec(EncodingMode::MfPulse)?,
            spec(EncodingMode::JEvolution)?,
        );
        let peak = mf.max_magnitude();
        let dev = mf
            .rows
            .iter()
            .flatten()
            .zip(j.rows.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(dev / peak);
        ensure(dev <= 1e-8 * peak, || {
            format!("{name}: deviation {:.3e} of peak max", dev / peak)
        })?;
    }
    Ok(format!(
        "{} gates on the 4-spin preset; max deviation {worst:.2e} of peak max",
        gates.len()
    ))
}

fn hadamard_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in [4usize, 8, 256] {
        let h = hadamard_matrix(k).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let inputs: Vec<Vec<Complex64>> = (0..k)
                .map(|_| {
                    (0..16)
                        .map(|_| {
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        })
                        .collect()
                })
                .collect();
            let back = decode_all(&h.encode(&inputs).map_err(|e| e.to_string())?, &h)
                .map_err(|e| e.to_string())?;
            let err = inputs
                .iter()
                .flatten()
                .zip(back.iter().flatten())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    ensure(worst <= 1e-12, || format!("max error {worst:.3e}"))?;
    Ok(format!("300 sets, max error {worst:.2e}"))
}

fn acquisition_count() -> Check {
    let mut out = Vec::new();
    for (sys, gate) in [(presets::c2f3i(), "not12"), (presets::tfba(), "toffoli")] {
        let table = sys.transition_table().map_err(|e| e.to_string())?;
        let acq = Acquisition {
            n_points: 64,
            ..Acquisition::default_for(&table)
        };
        let g = GateSpec::library(gate, &sys).map_err(|e| e.to_string())?;
        let set =
            run_hadamard_2d(&sys, &g, &acq, EncodingMode::MfPulse).map_err(|e| e.to_string())?;
        let raw = hadamard_nmr::qip2d::run_conventional(&sys, &g, 128, acq.dwell, &acq)
            .map_err(|e| e.to_string())?;
        let n = sys.n_work();
        ensure(set.acquisitions() == 1 << n, || {
            format!("{} Hadamard acquisitions for N = {n}", set.acquisitions())
        })?;
        ensure(raw.acquisitions == 128, || {
            format!("{} conventional acquisitions", raw.acquisitions)
        })?;
        out.push(format!(
            "N={n}: {} vs {}",
            set.acquisitions(),
            raw.acquisitions
        ));
    }
    Ok(out.join("; "))
}

fn dataset() -> &'static EncodedDataset {
    static DS: OnceLock<EncodedDataset> = OnceLock::new();
    DS.get_or_init(|| {
        record_hadamard_dataset(&SliceRegister::default(), &SliceAcquisition::default())
            .expect("dataset")
    })
}

/// Alphabet position, independent of the library's codec.
fn oracle_code(c: char) -> u32 {
    " abcdefghijklmnopqrstuvwxyz"
        .find(c)
        .expect("supported character") as u32
}

fn positions(text: &str, c: char) -> Vec<usize> {
    text.chars()
        .enumerate()
        .filter(|&(_, x)| x == c)
        .map(|(i, _)| i)
        .collect()
}

fn fox_search() -> Check {
    let text = "the quick brown fox jumps over the lazy dog";
    let ds = dataset();
    let msg = hadamard_nmr::memsearch::encode_message(text, 256).map_err(|e| e.to_string())?;
    ensure(msg.bits.len() == 215 && msg.n_ciphers() == 43, || {
        format!("{} bits", msg.bits.len())
    })?;
    let rep = ds.search(text, 'u').map_err(|e| e.to_string())?;
    let u = positions(text, 'u');
    let j = positions(text, 'j');
    ensure(rep.matches == u, || {
        format!("matches {:?}, 'u' at {u:?}", rep.matches)
    })?;
    ensure(u.iter().all(|&i| rep.intensities[i] <= 0.25), || {
        "u intensity above 0.25".into()
    })?;
    for &i in &j {
        ensure((rep.intensities[i] - 5.0).abs() <= 0.1, || {
            format!("'j' cipher {i} at {:.3}", rep.intensities[i])
        })?;
    }
    ensure(rep.complements == j, || {
        format!("complements {:?}, 'j' at {j:?}", rep.complements)
    })?;
    let ju: Vec<String> = j
        .iter()
        .map(|&i| format!("{:.3}", rep.intensities[i]))
        .collect();
    let uu: Vec<String> = u
        .iter()
        .map(|&i| format!("{:.3}", rep.intensities[i]))
        .collect();
    Ok(format!(
        "'u' ciphers {u:?} at [{}]; 'j' ciphers {j:?} at [{}]",
        uu.join(", "),
        ju.join(", ")
    ))
}

fn principles_search() -> Check {
    let text = "principles of nuclear magnetic resonance";
    let ds = dataset();
    let msg = hadamard_nmr::memsearch::encode_message(text, 256).map_err(|e| e.to_string())?;
    ensure(msg.bits.len() == 200, || format!("{} bits", msg.bits.len()))?;
    let rep = ds.search(text, 'e').map_err(|e| e.to_string())?;
    let e = positions(text, 'e');
    let r = positions(text, 'r');
    ensure(rep.matches == e, || {
        format!("matches {:?}, 'e' at {e:?}", rep.matches)
    })?;
    ensure(rep.intensities.iter().all(|&v| v < 4.75), || {
        "cipher at or above 4.75".into()
    })?;
    let fours: Vec<usize> = rep
        .intensities
        .iter()
        .enumerate()
        .filter(|(_, &v)| (v - 4.0).abs() <= 0.1)
        .map(|(i, _)| i)
        .collect();
    ensure(fours.len() == 3 && fours == r, || {
        format!("intensity-4 ciphers {fours:?}, 'r' at {r:?}")
    })?;
    Ok(format!(
        "{} 'e' matches; intensity 4 exactly at 'r' ciphers {r:?}; none ≥ 4.75",
        e.len()
    ))
}

fn hamming_law() -> Check {
    let ds = dataset();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let alphabet: Vec<char> = " abcdefghijklmnopqrstuvwxyz".chars().collect();
    let mut worst: f64 = 0.0;
    let mut ciphers = 0;
    for _ in 0..50 {
        let len = rng.random_range(1..=51);
        let text: String = (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect();
        let letter = alphabet[rng.random_range(1..alphabet.len())];
        let rep = ds.search(&text, letter).map_err(|e| e.to_string())?;
        ensure(rep.intensities.len() == len, || "cipher count".into())?;
        for (c, v) in text.chars().zip(&rep.intensities) {
            let d = f64::from((oracle_code(c) ^ oracle_code(letter)).count_ones());
            worst = worst.max((v - d).abs());
            ciphers += 1;
        }
    }
    ensure(worst <= 0.1, || format!("max deviation {worst:.4}"))?;
    Ok(format!(
        "50 sentences, {ciphers} ciphers, max deviation {worst:.4}"
    ))
}

fn physics_invariants() -> Check {
    let mut unitary: f64 = 0.0;
    let mut hermitian: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    let mut table_err: f64 = 0.0;
    let published = [
        (
            presets::c2f3i(),
            vec![("00", -30.35), ("01", 98.45), ("10", -98.45), ("11", 30.35)],
        ),
        (
            presets::tfba(),
            vec![
                ("000", 18.5),
                ("001", 12.5),
                ("010", -2.0),
                ("011", -8.0),
                ("100", 8.0),
                ("101", 2.0),
                ("110", -12.5),
                ("111", -18.5),
            ],
        ),
    ];
    for (sys, lines) in &published {
        let table = sys.transition_table().map_err(|e| e.to_string())?;
        let energies = sys.hamiltonian().diagonal_real();
        ensure(sys.hamiltonian().is_diagonal(0.0), || {
            "weak-coupling Hamiltonian not diagonal".into()
        })?;
        for (&(s, f), (label, lit)) in table.entries().iter().zip(lines) {
            ensure(s.to_string() == *label, || {
                format!("label order {s} vs {label}")
            })?;
            let from_h = energies[sys.basis_index(0, s)] - energies[sys.basis_index(1, s)];
            table_err = table_err.max((from_h - f).abs()).max((f - lit).abs());
        }

        let mut ops = vec![free_propagator(sys, 0.0123)];
        for spin in 0..sys.n_spins() {
            for phase in [Phase::X, Phase::Y, Phase::MinusY, Phase::Radians(0.7)] {
                for angle in [0.5, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
                    ops.push(hard_pulse(sys, spin, angle, phase).map_err(|e| e.to_string())?);
                }
            }
        }
        let (a, b) = if sys.n_spins() == 3 {
            ("001", "011")
        } else {
            ("0110", "0111")
        };
        ops.push(transition_pulse_labels(sys, a, b, 1.1, Phase::Y).map_err(|e| e.to_string())?);
        let h = hadamard_matrix(table.len()).map_err(|e| e.to_string())?;
        for r in 0..table.len() {
            let sched = schedule_for_row(&h, r, &table.labels()).map_err(|e| e.to_string())?;
            ops.push(mf_pi_pulse(sys, &table, &sched.pulse_targets).map_err(|e| e.to_string())?);
            ops.push(
                j_evolution_encoding(sys, &sched.product_operator_tag)
                    .map_err(|e| e.to_string())?,
            );
        }
        for gate in [
            "nop", "not1", "not2", "not12", "swap", "cnot1", "toffoli", "not3",
        ] {
            if let Ok(g) = GateSpec::library(gate, sys) {
                ops.push(g.unitary(sys).map_err(|e| e.to_string())?);
            }
        }
        for u in &ops {
            unitary = unitary.max(u.unitarity_error());
        }

        let acq = Acquisition::default_for(&table);
        let mut rho = observer_equilibrium(sys);
        for (i, u) in ops.iter().enumerate() {
            rho = apply_unitary(&rho, u).map_err(|e| e.to_string())?;
            if i % 5 == 0 {
                rho = evolve(&rho, sys, 0.0031 * i as f64).map_err(|e| e.to_string())?;
            }
            hermitian = hermitian.max(rho.hermiticity_error());
        }
        hermitian = hermitian.max(crush_coherences(&rho).hermiticity_error());
        let fid = synthesize_fid(&rho, sys, acq.n_points, acq.dwell, acq.linewidth_hz)
            .map_err(|e| e.to_string())?;
        parseval = parseval.max((parseval_ratio(&fid, &spectrum_1d(&fid)) - 1.0).abs());
        let mut padded = fid.points().to_vec();
        padded.resize(fid.len() * 2, Complex64::default());
        let padded = hadamard_nmr::specproc::TimeSeries::new(fid.dwell(), padded)
            .map_err(|e| e.to_string())?;
        parseval =
            parseval.max((parseval_ratio(&padded, &spectrum_1d_zero_filled(&fid, 2)) - 1.0).abs());
    }
    ensure(unitary <= 1e-10, || {
        format!("unitarity error {unitary:.3e}")
    })?;
    ensure(hermitian <= 1e-12, || {
        format!("hermiticity error {hermitian:.3e}")
    })?;
    ensure(parseval <= 1e-9, || {
        format!("Parseval deviation {parseval:.3e}")
    })?;
    ensure(table_err <= 1e-12, || {
        format!("transition table deviation {table_err:.3e} Hz")
    })?;
    Ok(format!(
        "‖U†U−1‖ ≤ {unitary:.1e}, hermiticity {hermitian:.1e}, Parseval {parseval:.1e}, table {table_err:.1e} Hz"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "1",
            "NOT(1,2) correlation, Hadamard vs conventional",
            not12_correlation,
        ),
        ("2", "gate library truth tables", gate_truth_tables),
        (
            "3",
            "MF-pi and J-evolution encodings agree",
            encoding_equivalence,
        ),
        (
            "4",
            "Hadamard encode/decode round trip",
            hadamard_round_trip,
        ),
        ("5", "acquisition count 2^N vs 128", acquisition_count),
        ("6", "fox sentence search for 'u'", fox_search),
        ("7", "second sentence search for 'e'", principles_search),
        ("8", "Hamming law on random sentences", hamming_law),
        ("9", "physics invariants", physics_invariants),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] criterion {id}: {name} — {detail} ({:.2} s)",
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        9 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
