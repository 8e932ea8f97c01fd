// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use stacksim::bench::{run_scenario, sequence_hold, sequence_read, write_then_read, CellSelect, Timing};
use stacksim::builders::{
    build_column, build_conventional_column, build_proposed_column, build_single_cell, build_stacked_pair,
    Architecture, CellConfig,
};
use stacksim::device::{mos_conductances, mos_current, stack_leakage, MosParams};
use stacksim::netlist::{parse_netlist, serialize_netlist};
use stacksim::power::compare_leakage;
use stacksim::sim::{dc_operating_point, transient, Integrator, Pwl, SolverConfig, Stimulus};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn solver_oracles() -> Outcome {
    let cfg = SolverConfig::default();
    let t = Instant::now();
    let net = parse_netlist("divider\nV1 in 0 1\nR1 in out 1k\nR2 out 0 1k\n.end\n").map_err(|e| format!("{e:?}"))?;
    let v = dc_operating_point(&net, &cfg).map_err(|e| e.to_string())?.voltage("out").unwrap();
    let divider_s = t.elapsed().as_secs_f64();
    ensure((v - 0.5).abs() < 1e-9, format!("divider {v}"))?;
    ensure(divider_s < 1.0, format!("divider took {divider_s} s"))?;

    let t = Instant::now();
    let net = parse_netlist("diode\nV1 vdd 0 1.2\nR1 vdd d 1meg\nM1 d d 0 0 nch W=1 L=1\n.model nch nmos\n.end\n")
        .map_err(|e| format!("{e:?}"))?;
    let vd = dc_operating_point(&net, &cfg).map_err(|e| e.to_string())?.voltage("d").unwrap();
    let diode_s = t.elapsed().as_secs_f64();
    let p = MosParams::default_nmos();
    let oracle = bisect(0.0, 1.2, |x| (1.2 - x) / 1e6 - mos_current(&p, x, x, 0.0, 0.0) - cfg.gmin * x);
    ensure((vd - oracle).abs() < 1e-6, format!("diode {vd} vs {oracle}"))?;
    ensure(diode_s < 1.0, format!("diode took {diode_s} s"))?;
    Ok(format!("divider error {:.1e} V, diode error {:.1e} V", (v - 0.5).abs(), (vd - oracle).abs()))
}

fn rc_error(dt: f64) -> Result<f64, String> {
    let tau = 1e-6;
    let net = parse_netlist("rc\nV1 in 0 0\nR1 in out 1k\nC1 out 0 1n\n.end\n").map_err(|e| format!("{e:?}"))?;
    let mut cfg = SolverConfig::default().with_timing(dt, 3.0 * tau);
    cfg.integrator = Integrator::Trapezoidal;
    let stim = Stimulus::new().with("v1", Pwl::new(vec![(0.0, 0.0), (0.0, 1.0)]));
    let w = transient(&net, &cfg, &stim, None).map_err(|e| e.to_string())?;
    let out = w.signal("out").unwrap();
    Ok(w.time
        .iter()
        .zip(out)
        .map(|(t, v)| (v - (1.0 - (-t / tau).exp())).abs())
        .fold(0.0, f64::max))
}

fn transient_accuracy() -> Outcome {
    let e1 = rc_error(1e-8)?;
    let e2 = rc_error(0.5e-8)?;
    ensure(e1 < 5e-3, format!("max error {e1:e} at RC/100"))?;
    ensure(e1 / e2 >= 3.5, format!("halving dt improved error only {:.2}x", e1 / e2))?;
    Ok(format!("max error {:.3}% of step, halving dt gives {:.2}x", 100.0 * e1, e1 / e2))
}

fn device_derivatives() -> Outcome {
    let cards = [
        MosParams::default_nmos(),
        MosParams::default_nmos().with_w_over_l(2.0),
        MosParams::default_pmos(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-6;
    let (mut points, mut worst) = (0, 0.0f64);
    for card in &cards {
        for _ in 0..50 {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..3.0));
            let g = mos_conductances(card, v[0], v[1], v[2], v[3]);
            for (k, analytic) in [(0, g.gm), (1, g.gds), (2, g.gms), (3, g.gmb())] {
                let (mut up, mut dn) = (v, v);
                up[k] += h;
                dn[k] -= h;
                let numeric = (mos_current(card, up[0], up[1], up[2], up[3])
                    - mos_current(card, dn[0], dn[1], dn[2], dn[3]))
                    / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs());
                if scale < 1e-13 {
                    continue;
                }
                worst = worst.max((analytic - numeric).abs() / scale);
            }
            points += 1;
        }
    }
    ensure(worst < 1e-4, format!("worst relative derivative error {worst:e}"))?;

    let p = MosParams::default_nmos();
    let ideal = 1.0 / (p.n_slope * p.temp_vt);
    let (g0, g1) = (-0.35, -0.25);
    let slope = (mos_current(&p, g1, 1.2, 0.0, 0.0).ln() - mos_current(&p, g0, 1.2, 0.0, 0.0).ln()) / (g1 - g0);
    let dev = (slope / ideal - 1.0).abs();
    ensure(dev < 0.02, format!("log slope {slope} vs {ideal}"))?;
    Ok(format!("{points} bias points, worst rel error {worst:.1e}; log slope off by {:.2}%", 100.0 * dev))
}

fn stacking_effect() -> Outcome {
    const FROZEN_RATIO: f64 = 0.17472671674851754;
    let p = MosParams::default_nmos();
    let one = stack_leakage(&p, 1, 1.2).map_err(|e| e.to_string())?.leakage;
    let two = stack_leakage(&p, 2, 1.2).map_err(|e| e.to_string())?.leakage;
    let ratio = two / one;
    ensure(ratio < 1.0, format!("ratio {ratio}"))?;
    ensure((ratio / FROZEN_RATIO - 1.0).abs() < 1e-6, format!("ratio {ratio} drifted from {FROZEN_RATIO}"))?;
    Ok(format!("two-stack / single = {ratio:.6}"))
}

fn protocol_suite() -> Outcome {
    let cfg = CellConfig::default();
    let timing = Timing::default();
    let solver = SolverConfig::default().with_timing(10e-12, 1e-9);
    let mut combos = 0;
    let mut worst_disturb = 0.0f64;
    for arch in [Architecture::Conventional, Architecture::Proposed] {
        let (net, sig) = build_column(arch, &cfg, 1).map_err(|e| e.to_string())?;
        for addr in 0..sig.capacity() {
            for bit in [false, true] {
                let s = write_then_read(&sig, CellSelect::Row(addr), bit, &timing).map_err(|e| e.to_string())?;
                let r = run_scenario(&net, &sig, &s, &solver).map_err(|e| e.to_string())?;
                if let Some(f) = r.failures().next() {
                    return Err(format!("{} addr {addr} bit {}: {}", arch.name(), u8::from(bit), f.name));
                }
                combos += 1;
            }
            let read = sequence_read(&sig, CellSelect::Row(addr), Some(sig.default_pattern()[addr]), &timing)
                .map_err(|e| e.to_string())?
                .with_initial_bits(sig.default_pattern());
            let r = run_scenario(&net, &sig, &read, &solver).map_err(|e| e.to_string())?;
            for c in r.checks.iter().filter(|c| c.name.starts_with("read disturb")) {
                worst_disturb = worst_disturb.max((c.measured_v - c.expected_v).abs());
            }
            ensure(r.passed(), format!("{} read of address {addr} failed", arch.name()))?;
        }
    }
    ensure(worst_disturb < 0.05, format!("read disturb {worst_disturb} V"))?;

    let mut worst_drift = 0.0f64;
    for arch in [Architecture::Conventional, Architecture::Proposed] {
        let (net, sig) = build_column(arch, &cfg, 1).map_err(|e| e.to_string())?;
        let s = sequence_hold(&sig, 1e-6, &timing)
            .map_err(|e| e.to_string())?
            .with_initial_bits(sig.default_pattern());
        let r = run_scenario(&net, &sig, &s, &SolverConfig::default().with_timing(1e-9, 1e-6))
            .map_err(|e| e.to_string())?;
        for c in &r.checks {
            worst_drift = worst_drift.max((c.measured_v - c.expected_v).abs());
        }
        ensure(r.passed(), format!("{} hold failed", arch.name()))?;
    }
    Ok(format!(
        "{combos} write/read-back combinations, read disturb {:.1} mV, hold drift {:.3} mV over 1 us",
        1e3 * worst_disturb,
        1e3 * worst_drift
    ))
}

fn architecture_claim() -> Outcome {
    let solver = SolverConfig::default().with_timing(1e-9, 1e-6);
    let r = compare_leakage(&CellConfig::default(), 1, &solver, 1e-6).map_err(|e| e.to_string())?;
    ensure(r.ratio > 1.0, format!("ratio {}", r.ratio))?;
    Ok(format!(
        "per-bit leakage ratio {:.4} (conventional {:.4e} W, proposed {:.4e} W per bit)",
        r.ratio, r.conventional.leakage_per_bit_w, r.proposed.leakage_per_bit_w
    ))
}

fn parser_robustness() -> Outcome {
    let cfg = CellConfig::default();
    let mut corpus = Vec::new();
    for n in 1..=4 {
        corpus.push(build_conventional_column(&cfg, n).map_err(|e| e.to_string())?.0);
    }
    for n in 1..=2 {
        corpus.push(build_proposed_column(&cfg, n).map_err(|e| e.to_string())?.0);
    }
    corpus.push(build_stacked_pair(&cfg, "").map_err(|e| e.to_string())?);
    corpus.push(build_single_cell(&cfg).map_err(|e| e.to_string())?);
    for net in &corpus {
        let text = serialize_netlist(net);
        let back = parse_netlist(&text).map_err(|e| format!("{e:?}"))?;
        ensure(&back == net && serialize_netlist(&back) == text, format!("'{}' is not a fixpoint", net.title))?;
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let expected: [(&str, &[usize]); 3] = [
        ("malformed_unknown_model.cir", &[3]),
        ("malformed_values.cir", &[3, 4, 5]),
        ("malformed_duplicate.cir", &[4, 5]),
    ];
    for (file, lines) in expected {
        let text = std::fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
        let diags = match parse_netlist(&text) {
            Ok(_) => return Err(format!("{file} parsed")),
            Err(d) => d,
        };
        let got: Vec<usize> = diags.iter().map(|d| d.line).collect();
        ensure(got == lines, format!("{file}: lines {got:?}, expected {lines:?}"))?;
    }
    Ok(format!("{} builder netlists round-trip, 3 malformed inputs diagnosed", corpus.len()))
}

fn run_all_commands(dir: &Path) -> Result<(), String> {
    std::fs::write(
        dir.join("rc.cir"),
        "rc\nV1 in 0 PULSE(0 1 1n 1n 1n 5n 0)\nR1 in out 1k\nC1 out 0 1p\n.tran 100p 10n\n.end\n",
    )
    .map_err(|e| e.to_string())?;
    let runs: [&[&str]; 5] = [
        &["op", "rc.cir"],
        &["tran", "rc.cir", "--out", "rc.csv"],
        &["scenario", "--arch", "proposed", "--op", "read", "--cell", "upper", "--out", "read"],
        &["compare-leakage", "--out", "leak.json"],
        &["plot", "rc.csv", "--signals", "in,out", "--out", "rc.svg"],
    ];
    for args in runs {
        let o = Command::new(env!("CARGO_BIN_EXE_stacksim"))
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), format!("{args:?} exited {:?}", o.status.code()))?;
        std::fs::write(dir.join(format!("{}.stdout", args[0])), &o.stdout).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn collect(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            collect(&path, base, out)?;
            continue;
        }
        let name = path.strip_prefix(base).unwrap().display().to_string();
        let mut bytes = std::fs::read(&path)?;
        if name.ends_with(".manifest.json") {
            let mut v: Value = serde_json::from_slice(&bytes)?;
            v.as_object_mut().map(|m| m.remove("wall_clock_s"));
            bytes = serde_json::to_vec(&v)?;
        }
        out.push((name, bytes));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all_commands(a.path())?;
    run_all_commands(b.path())?;
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    collect(a.path(), a.path(), &mut fa).map_err(|e| e.to_string())?;
    collect(b.path(), b.path(), &mut fb).map_err(|e| e.to_string())?;
    ensure(fa.len() == fb.len(), "different output file sets")?;
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        ensure(na == nb, format!("{na} vs {nb}"))?;
        ensure(ba == bb, format!("{na} differs between runs"))?;
    }
    Ok(format!("5 commands, {} output files byte-identical (manifest wall clock excluded)", fa.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("solver oracle equivalence", solver_oracles),
        ("transient accuracy", transient_accuracy),
        ("device-model derivatives", device_derivatives),
        ("device-level stacking effect", stacking_effect),
        ("functional protocol suite", protocol_suite),
        ("architecture leakage claim", architecture_claim),
        ("parser robustness", parser_robustness),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
