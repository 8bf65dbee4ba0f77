mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use fsl_qnlp::ansatz::{AnsatzKind, AnsatzSpec};
use fsl_qnlp::diagnostics::{
    expressibility, haar_bin_mass, kl_vs_haar, meyer_wallach, sample_fidelities, FidelityHistogram,
    Template, DEFAULT_BINS, DEFAULT_SAMPLES,
};
use fsl_qnlp::simulator::StateVector;

fn euler() -> Template {
    Template::from_ansatz(&AnsatzSpec::new(AnsatzKind::Euler, 1).unwrap(), 1).unwrap()
}

#[test]
fn haar_bins_match_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for d in [2usize, 4, 8] {
        let fids: Vec<f64> = (0..100_000)
            .map(|_| overlap(&haar_state(d, &mut rng), &haar_state(d, &mut rng)).norm_sqr())
            .collect();
        let hist = FidelityHistogram::from_samples(&fids, DEFAULT_BINS).unwrap();
        let mass = haar_bin_mass(DEFAULT_BINS, d);
        for (c, m) in hist.counts.iter().zip(&mass) {
            assert!((*c as f64 / 1e5 - m).abs() < 0.02, "d={d}");
        }
    }
}

#[test]
fn euler_mean_fidelity_is_half() {
    let f = sample_fidelities(&euler(), DEFAULT_SAMPLES, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    assert!((mean - 0.5).abs() < 0.03, "{mean}");
}

#[test]
fn expressibility_ordering() {
    let e = expressibility(&euler(), DEFAULT_SAMPLES, DEFAULT_BINS, 0).unwrap();
    let rz = expressibility(&Template::single_rz(), DEFAULT_SAMPLES, DEFAULT_BINS, 0).unwrap();
    let fixed = expressibility(&Template::fixed(1), DEFAULT_SAMPLES, DEFAULT_BINS, 0).unwrap();
    assert!(e.kl_divergence < 0.1);
    assert!(e.kl_divergence < rz.kl_divergence);
    assert!(fixed.kl_divergence > 1.0);
    assert_eq!(e.histogram.counts.iter().sum::<usize>(), DEFAULT_SAMPLES);
}

#[test]
fn kl_shrinks_with_more_samples() {
    let mean = |s| {
        (0..5u64)
            .map(|seed| expressibility(&euler(), s, DEFAULT_BINS, seed).unwrap().kl_divergence)
            .sum::<f64>()
            / 5.0
    };
    assert!(mean(5000) < mean(500));
}

fn fnv(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in values {
        let q = (v * 1e12).round() as i64;
        for b in q.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Seed-0 baseline over 200 samples.
const IQP_HASH: u64 = 10424689255702293701;

#[test]
fn iqp_fidelities_are_stable() {
    let t = Template::from_ansatz(&AnsatzSpec::new(AnsatzKind::Iqp, 1).unwrap(), 2).unwrap();
    let f = sample_fidelities(&t, 200, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let g = sample_fidelities(&t, 200, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(f, g);
    assert_eq!(fnv(&f), IQP_HASH);
}

/// Q = 2(1 − mean_j tr ρ_j²) from single-qubit reduced density matrices.
fn mw_purity(amps: &[C], n: usize) -> f64 {
    let mut purity = 0.0;
    for j in 0..n {
        let mut rho = [[c(0.0, 0.0); 2]; 2];
        for (i, a) in amps.iter().enumerate() {
            for (k, b) in amps.iter().enumerate() {
                let mask = 1 << (n - 1 - j);
                if i & !mask == k & !mask {
                    rho[(i & mask != 0) as usize][(k & mask != 0) as usize] += a * b.conj();
                }
            }
        }
        purity += (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).map(|(x, y)| rho[x][y].norm_sqr()).sum::<f64>();
    }
    2.0 * (1.0 - purity / n as f64)
}

#[test]
fn meyer_wallach_examples() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let cases = [
        (StateVector::zero(2), 0.0),
        (StateVector::from_real(&[s, 0.0, 0.0, s]).unwrap(), 1.0),
        (StateVector::from_real(&[s, 0.0, s, 0.0]).unwrap(), 0.0),
    ];
    for (state, q) in cases {
        assert!((meyer_wallach(&state).unwrap().q - q).abs() < 1e-9);
    }
}

fn random_local(n: usize, rng: &mut ChaCha8Rng) -> Vec<fsl_qnlp::circuit::Gate> {
    use fsl_qnlp::circuit::Gate;
    let mut g = Vec::new();
    for q in 0..n {
        g.push(Gate::Rx { qubit: q, angle: rng.random_range(0.0..6.3).into() });
        g.push(Gate::Ry { qubit: q, angle: rng.random_range(0.0..6.3).into() });
        g.push(Gate::Rz { qubit: q, angle: rng.random_range(0.0..6.3).into() });
    }
    g
}

#[test]
fn meyer_wallach_local_unitary_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let psi = haar_state(1 << n, &mut rng);
        let mut s = StateVector::from_amplitudes(psi.clone()).unwrap();
        let q0 = meyer_wallach(&s).unwrap().q;
        for g in random_local(n, &mut rng) {
            let theta = match g.angle() {
                Some(fsl_qnlp::circuit::Angle::Const(v)) => *v,
                _ => unreachable!(),
            };
            s.apply_gate(&g, theta).unwrap();
        }
        assert!((meyer_wallach(&s).unwrap().q - q0).abs() < 1e-9);
        assert!((q0 - mw_purity(&psi, n)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kl_is_non_negative(counts in prop::collection::vec(0usize..50, 1..80), q in 1usize..5) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let hist = FidelityHistogram { samples: counts.iter().sum(), counts };
        prop_assert!(kl_vs_haar(&hist, 1 << q).unwrap() >= -1e-12);
    }

    #[test]
    fn meyer_wallach_in_unit_interval(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = haar_state(1 << n, &mut rng);
        let q = meyer_wallach(&StateVector::from_amplitudes(psi.clone()).unwrap()).unwrap().q;
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&q));
        prop_assert!((q - mw_purity(&psi, n)).abs() < 1e-9);
    }
}
