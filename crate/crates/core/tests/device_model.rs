// SPDX-License-Identifier: Apache-2.0
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stacksim::device::{
    mos_conductances, mos_current, stack_leakage, MosParams, Polarity, STACK_KCL_TOL,
};

/// Evaluated at 40 digits by a standalone script straight from the closed form.
const OFF_CURRENT_1V2: f64 = 6.5292400915319002e-11;

/// Stack leakage from shooting on the first intermediate node with nested
/// bisection on each device's drain voltage. Independent of the Newton path.
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

fn stack_oracle(card: &MosParams, n: usize, v: f64) -> f64 {
    // Channel frame: a p-channel stack is the mirror image of this one.
    let frame = MosParams {
        polarity: Polarity::N,
        ..*card
    };
    let p = &frame;
    if n == 1 {
        return mos_current(p, 0.0, v, 0.0, 0.0);
    }
    let top_residual = |v1: f64| {
        let current = mos_current(p, 0.0, v1, 0.0, 0.0);
        let mut src = v1;
        for _ in 1..n - 1 {
            let s = src;
            src = bisect(s, v + 1.0, |vd| mos_current(p, 0.0, vd, s, 0.0) - current);
        }
        mos_current(p, 0.0, v, src, 0.0) - current
    };
    let v1 = bisect(0.0, v, top_residual);
    mos_current(p, 0.0, v1, 0.0, 0.0)
}

fn cards() -> Vec<MosParams> {
    vec![
        MosParams::default_nmos(),
        MosParams::default_nmos().with_w_over_l(2.0),
        MosParams::default_nmos().with_w_over_l(1.5),
        MosParams::default_pmos(),
    ]
}

#[test]
fn off_current_matches_closed_form() {
    let i = mos_current(&MosParams::default_nmos(), 0.0, 1.2, 0.0, 0.0);
    assert!(i > 0.0);
    assert!((i / OFF_CURRENT_1V2 - 1.0).abs() < 1e-12, "{i:e}");
}

#[test]
fn conductances_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut checked = 0;
    for card in cards() {
        for _ in 0..60 {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..3.0));
            let [vg, vd, vs, vb] = v;
            let g = mos_conductances(&card, vg, vd, vs, vb);
            let fd = |k: usize| {
                let mut up = v;
                let mut dn = v;
                up[k] += h;
                dn[k] -= h;
                (mos_current(&card, up[0], up[1], up[2], up[3])
                    - mos_current(&card, dn[0], dn[1], dn[2], dn[3]))
                    / (2.0 * h)
            };
            for (k, analytic) in [(0, g.gm), (1, g.gds), (2, g.gms), (3, g.gmb())] {
                let numeric = fd(k);
                let scale = analytic.abs().max(numeric.abs());
                // Below ~1e-13 S the difference quotient is dominated by rounding.
                if scale < 1e-13 {
                    continue;
                }
                let rel = (analytic - numeric).abs() / scale;
                assert!(rel < 1e-4, "term {k} at {v:?}: analytic {analytic:e} fd {numeric:e}");
            }
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn subthreshold_log_slope() {
    let p = MosParams::default_nmos();
    let ideal = 1.0 / (p.n_slope * p.temp_vt);
    let (g0, g1) = (-0.35, -0.25);
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let vg = g0 + (g1 - g0) * k as f64 / 20.0;
            (vg, mos_current(&p, vg, 1.2, 0.0, 0.0).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope / ideal - 1.0).abs() < 0.02, "slope {slope} vs {ideal}");
}

#[test]
fn two_stack_ratio_matches_bisection() {
    let p = MosParams::default_nmos();
    let one = stack_leakage(&p, 1, 1.2).unwrap().leakage;
    let two = stack_leakage(&p, 2, 1.2).unwrap();
    // Frozen from a 40-digit bisection on the intermediate node.
    const RATIO: f64 = 0.17472671674851754;
    assert!((two.leakage / one / RATIO - 1.0).abs() < 1e-6);
    assert!((two.leakage / stack_oracle(&p, 2, 1.2) - 1.0).abs() < 1e-9);
    assert!((two.mid_nodes[0] - 0.043770329566273388).abs() < 1e-6);
}

#[test]
fn stack_leakage_monotone_in_depth() {
    for card in cards() {
        for v in [0.6, 1.2, 2.4] {
            let mut prev = f64::INFINITY;
            for n in 1..=4 {
                let s = stack_leakage(&card, n, v).unwrap();
                let oracle = stack_oracle(&card, n, v);
                assert!(
                    (s.leakage.abs() / oracle - 1.0).abs() < 1e-9,
                    "n={n} v={v}: {:e} vs {oracle:e}",
                    s.leakage
                );
                assert!(s.leakage.abs() <= prev);
                prev = s.leakage.abs();
                // KCL across each device within the stack tolerance.
                let mut nodes = vec![0.0];
                nodes.extend(s.mid_nodes.iter().map(|x| x.abs()));
                nodes.push(v);
                let frame = MosParams {
                    polarity: Polarity::N,
                    ..card
                };
                for w in nodes.windows(2) {
                    let i = mos_current(&frame, 0.0, w[1], w[0], 0.0);
                    assert!((i - s.leakage.abs()).abs() < STACK_KCL_TOL);
                }
            }
        }
    }
}

#[test]
fn two_stack_beats_one_for_every_default_card() {
    for card in cards() {
        for v in [0.6, 1.2, 2.4] {
            let one = stack_leakage(&card, 1, v).unwrap().leakage.abs();
            let two = stack_leakage(&card, 2, v).unwrap().leakage.abs();
            assert!(two < one);
        }
    }
}

#[test]
fn current_increases_with_gate_drive() {
    for card in cards() {
        let (vd, vs) = match card.polarity {
            Polarity::N => (1.2, 0.0),
            Polarity::P => (-1.2, 0.0),
        };
        let mut prev = None;
        for k in 0..=60 {
            let vg = -1.5 + 4.5 * k as f64 / 60.0;
            let vg = if vd < 0.0 { -vg } else { vg };
            let i = mos_current(&card, vg, vd, vs, 0.0).abs();
            if let Some(p) = prev {
                assert!(i > p, "not increasing at vg={vg}");
            }
            prev = Some(i);
        }
    }
}

proptest! {
    #[test]
    fn antisymmetric_under_drain_source_swap(
        vg in -1.5f64..3.0, vd in -1.5f64..3.0, vs in -1.5f64..3.0, vb in -1.5f64..3.0, pick in 0usize..4
    ) {
        let card = cards()[pick];
        let fwd = mos_current(&card, vg, vd, vs, vb);
        let rev = mos_current(&card, vg, vs, vd, vb);
        prop_assert!((fwd + rev).abs() <= 1e-12 * fwd.abs().max(1e-300));
    }

    #[test]
    fn zero_at_equal_drain_source(vg in -1.5f64..3.0, vx in -1.5f64..3.0, vb in -1.5f64..3.0, pick in 0usize..4) {
        prop_assert_eq!(mos_current(&cards()[pick], vg, vx, vx, vb), 0.0);
    }
}
