//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Criteria listed in `KNOWN_FAILURES` are expected to fail (see README);
//! the process exits non-zero when any outcome differs from expectation.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bosamp_cli::config::{AltModel, ExperimentConfig};
use bosamp_cli::pipeline::Experiment;
use bosamp_core::circuits::{haar_random_unitary, seeded_rng, transfer_matrix, CENTRAL_INPUTS};
use bosamp_core::distributions::{
    build_distribution, enhancement_factor, enumerate_patterns, prob_gbs, prob_tms, Domain, Model,
    ScattershotSampler,
};
use bosamp_core::gaussian::{apply_uniform_loss, build_sigma_q, LossChannel, SqueezerBank};
use bosamp_core::matkernels::{hafnian, permanent};
use bosamp_core::scaling::{
    event_rate, largest_practical_n, loss_fidelity_study, snr_gbs, snr_gbs_composed,
    LossStudySettings, RatePreset, RateProtocol, ONE_PER_WEEK,
};
use bosamp_core::validation::{
    bayesian_compare, likelihood_ratio_test, rownorm_test, Likelihood, SampleRecord,
};
use bosamp_core::vibronic::{
    enhancement_sweep, fc9_forward, fc_factor, fc_factors, postprocess_rescale, Binning,
    DoktorovDecomposition, SweepSettings,
};
use bosamp_core::{ComplexMatrix, FockPattern, C64};
use nalgebra::DMatrix;
use rand::Rng;

const KNOWN_FAILURES: [u32; 2] = [3, 8];

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let a = random_matrix(1 + i % 7, &mut rng);
        let p = permanent(&a).unwrap();
        worst = worst.max((p - oracles::perm_factorial(&a)).norm() / p.norm().max(1e-300));
    }
    for i in 0..100 {
        let n = 2 * (1 + i % 4);
        let a = random_matrix(n, &mut rng);
        let s = ComplexMatrix::from_fn(n, n, |r, c| (a[(r, c)] + a[(c, r)]) * 0.5);
        let h = hafnian(&s).unwrap();
        worst = worst.max((h - oracles::haf_matchings(&s)).norm() / h.norm().max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst < 1e-10 && secs < 60.0,
        format!("max rel. err {worst:.1e}, {secs:.1} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let interf = haar_random_unitary(12, 2).unwrap();
    let bank = SqueezerBank::on_modes(12, &CENTRAL_INPUTS, &[0.11, 0.09, 0.07, 0.07]).unwrap();
    let state = build_sigma_q(&interf, &bank).unwrap();
    let d = build_distribution(&Model::Gbs(state), Domain::Truncated { max_n: 8 }, false).unwrap();
    let total = d.total();
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        total >= 1.0 - 1e-4 && secs < 300.0,
        format!("sum over n <= 8 is {total:.10}, {secs:.1} s"),
    )
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new(true, "");
    let mut worst: f64 = 0.0;
    for eps in [0.01f64, 0.03, 0.06] {
        let xi = vec![eps.sqrt().atanh(); 4];
        for n in 1..=4usize {
            let want = [1.0, 4.0, 6.0, 4.0, 1.0][n];
            let got = enhancement_factor(&xi, n).unwrap();
            let err = rel(got, want);
            let ok = if n == 4 { err < 1e-12 } else { err < 0.02 };
            worst = worst.max(err);
            if !ok {
                out.pass = false;
                out.notes.push(format!(
                    "eps={eps} n={n}: ratio {got:.4} vs C(4,{n}) = {want}, {:.1}% off",
                    100.0 * err
                ));
            }
        }
    }
    out.detail = format!("worst deviation {:.1}%", 100.0 * worst);
    out
}

fn gbs_config(seed: u64) -> ExperimentConfig {
    let text = format!(
        r#"{{"schema_version":1,"protocol":"gbs",
        "circuit":{{"haar":{{"modes":12,"seed":{seed}}}}},
        "input_modes":[4,5,6,7],"squeezing":[0.11,0.09,0.07,0.07],
        "domain":"exact-4","samples":{{"count":500,"seed":{}}},
        "validation":["thermal","coherent","distinguishable-sms","tms"]}}"#,
        seed + 1000
    );
    ExperimentConfig::from_json(&text, Path::new(".")).unwrap()
}

fn scattershot(t: &ComplexMatrix, n: usize, distinguishable: bool, seed: u64, count: usize) -> Vec<SampleRecord> {
    let xi = vec![0.3; t.rows()];
    ScattershotSampler::new(t.clone(), &xi, n, Domain::CollisionFree { n }, distinguishable)
        .unwrap()
        .sample(seed, count)
        .unwrap()
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new(true, "");
    let mut lowest: f64 = 1.0;
    for seed in 0..3u64 {
        let exp = Experiment::new(gbs_config(seed)).unwrap();
        let samples = exp.simulate(seed + 1000, 500).unwrap();
        let ideal = exp.ideal_likelihood().unwrap();
        for alt in [AltModel::Thermal, AltModel::Coherent, AltModel::DistinguishableSms, AltModel::Tms] {
            let c = bayesian_compare(&samples, &ideal, &exp.alternative(alt).unwrap())
                .unwrap()
                .final_confidence()
                .unwrap();
            lowest = lowest.min(c);
            if c <= 0.999 {
                out.pass = false;
                out.notes.push(format!("GBS seed {seed} vs {}: {c:.6}", alt.tag()));
            }
        }

        let u = haar_random_unitary(12, 100 + seed).unwrap();
        let t = transfer_matrix(&u.with_inputs((0..8).collect()).unwrap());
        let domain = Some(Domain::CollisionFree { n: 6 });
        let data = scattershot(&t, 6, false, seed, 500);
        let c = bayesian_compare(
            &data,
            &Likelihood::heralded(t.clone(), false, domain),
            &Likelihood::heralded(t.clone(), true, domain),
        )
        .unwrap()
        .final_confidence()
        .unwrap();
        lowest = lowest.min(c);
        if c <= 0.999 {
            out.pass = false;
            out.notes.push(format!("SBS seed {seed} vs distinguishable: {c:.6}"));
        }

        let t = transfer_matrix(&u.with_inputs((0..6).collect()).unwrap());
        let bs = scattershot(&t, 3, false, seed, 500);
        let dis = scattershot(&t, 3, true, seed, 500);
        let uniform_law = build_distribution(
            &Model::Uniform { modes: 12, domain: Domain::CollisionFree { n: 3 } },
            Domain::CollisionFree { n: 3 },
            true,
        )
        .unwrap();
        let uni: Vec<SampleRecord> = bs
            .iter()
            .zip(uniform_law.sample(seed + 50, bs.len()).unwrap())
            .map(|(r, output)| SampleRecord { output, ..r.clone() })
            .collect();
        let counter = |v: bosamp_core::validation::ValidationVerdict| v.final_counter().unwrap();
        let signs = [
            ("row-norm on boson sampling", counter(rownorm_test(&bs, &t).unwrap()) > 0),
            ("row-norm on uniform", counter(rownorm_test(&uni, &t).unwrap()) < 0),
            (
                "likelihood ratio on indistinguishable",
                counter(likelihood_ratio_test(&bs, &t, 0.75, 2.0).unwrap()) > 0,
            ),
            (
                "likelihood ratio on distinguishable",
                counter(likelihood_ratio_test(&dis, &t, 0.75, 2.0).unwrap()) < 0,
            ),
        ];
        for (name, ok) in signs {
            if !ok {
                out.pass = false;
                out.notes.push(format!("seed {seed}: wrong counter sign for {name}"));
            }
        }
    }
    out.detail = format!("lowest confidence {lowest:.6}, counter signs checked on 3 seeds");
    out
}

fn criterion_5() -> Outcome {
    let mut rng = seeded_rng(5);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 0..5u64 {
        let u = haar_random_unitary(2, seed).unwrap();
        for k in [1usize, 2] {
            let t = transfer_matrix(&u.with_inputs((0..k).collect()).unwrap());
            let xi: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..0.8)).collect();
            let bank = SqueezerBank::new(xi.clone()).unwrap();
            for p in enumerate_patterns(2, Domain::Truncated { max_n: 4 }).unwrap() {
                let got = prob_tms(&bank, &t, &p).unwrap();
                let want = oracles::tms_direct(&t, &xi, &p);
                if want == 0.0 {
                    worst = worst.max(got.abs());
                } else {
                    worst = worst.max(rel(got, want));
                }
                count += 1;
            }
        }
    }
    Outcome::new(worst < 1e-10, format!("{count} instances, max rel. err {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new(true, "");
    let interf = haar_random_unitary(6, 6).unwrap();
    let bank = SqueezerBank::on_modes(6, &[1, 2, 3], &[0.3, 0.5, 0.2]).unwrap();
    let ideal = build_sigma_q(&interf, &bank).unwrap();
    let same = apply_uniform_loss(&bank, &interf, LossChannel::new(1.0).unwrap()).unwrap();
    let dark = apply_uniform_loss(&bank, &interf, LossChannel::new(0.0).unwrap()).unwrap();
    if same.sigma_q() != ideal.sigma_q() {
        out.pass = false;
        out.notes.push("eta = 1 differs from the lossless state".into());
    }
    if dark.sigma_q() != &ComplexMatrix::identity(12) {
        out.pass = false;
        out.notes.push("eta = 0 is not the vacuum".into());
    }

    let one = bosamp_core::circuits::Interferometer::full(ComplexMatrix::identity(1)).unwrap();
    let mut worst_tv: f64 = 0.0;
    for (xi, eta) in [(0.3, 0.7), (0.2, 0.4), (0.5, 0.9)] {
        let p: Vec<f64> = oracles::squeezed_vacuum(xi, 90).iter().map(|a| a.norm_sqr()).collect();
        let want = oracles::thinned_law(&p, eta, 8);
        let b = SqueezerBank::uniform(1, xi).unwrap();
        let s = apply_uniform_loss(&b, &one, LossChannel::new(eta).unwrap()).unwrap();
        let tv = (0..=8)
            .map(|n| (prob_gbs(&s, &FockPattern::new(vec![n])).unwrap() - want[n]).abs())
            .sum::<f64>()
            / 2.0;
        worst_tv = worst_tv.max(tv);
    }
    if worst_tv >= 1e-6 {
        out.pass = false;
        out.notes.push(format!("single-mode TV {worst_tv:.1e}"));
    }

    let xis = vec![0.1, 0.5, 1.0];
    let etas = vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5];
    let rows = loss_fidelity_study(&LossStudySettings {
        n: 4,
        m: 12,
        k: 4,
        xi: xis.clone(),
        eta: etas.clone(),
        seeds: vec![1, 2, 3],
    })
    .unwrap();
    let f = |i: usize, j: usize| rows[i * etas.len() + j].mean_fidelity;
    for i in 0..xis.len() {
        for j in 1..etas.len() {
            if f(i, j) >= f(i, j - 1) {
                out.pass = false;
                out.notes.push(format!("xi={}: fidelity not decreasing at eta={}", xis[i], etas[j]));
            }
        }
    }
    for j in 1..etas.len() {
        for i in 1..xis.len() {
            if f(i, j) >= f(i - 1, j) {
                out.pass = false;
                out.notes.push(format!("eta={}: fidelity not decreasing at xi={}", etas[j], xis[i]));
            }
        }
    }
    out.detail = format!(
        "single-mode TV {worst_tv:.1e}, fidelity {:.4} at xi=1 eta=0.5",
        f(2, etas.len() - 1)
    );
    out
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 1..=5 {
        for k in [2usize, 4, 8] {
            for xi in [0.1, 0.3, 0.7, 1.2] {
                let a = snr_gbs(n, k, xi).unwrap();
                let b = snr_gbs_composed(n, k, xi).unwrap();
                worst = worst.max(rel(a, b));
                count += 1;
            }
        }
    }
    Outcome::new(worst < 1e-12, format!("{count} points, max rel. err {worst:.1e}"))
}

/// Reference event rates (Hz) at k = m = 100: (n, preset, SBS, GBS).
const REFERENCE_RATES: [(usize, RatePreset, Option<f64>, Option<f64>); 20] = [
    (10, RatePreset::Spiral, Some(0.3), Some(6e3)),
    (10, RatePreset::SpiralIntegrated, Some(2e3), Some(5e5)),
    (10, RatePreset::Ring, Some(65.0), Some(6e4)),
    (10, RatePreset::RingIntegrated, Some(4e5), Some(5e6)),
    (16, RatePreset::Spiral, None, Some(1.0)),
    (16, RatePreset::SpiralIntegrated, Some(8e-3), Some(1e3)),
    (16, RatePreset::Ring, Some(2e-3), Some(4e2)),
    (16, RatePreset::RingIntegrated, Some(3e3), Some(4e5)),
    (20, RatePreset::Spiral, None, Some(2e-3)),
    (20, RatePreset::SpiralIntegrated, None, Some(15.0)),
    (20, RatePreset::Ring, None, Some(7.0)),
    (20, RatePreset::RingIntegrated, Some(30.0), Some(5e4)),
    (32, RatePreset::Spiral, None, None),
    (32, RatePreset::SpiralIntegrated, None, Some(4e-6)),
    (32, RatePreset::Ring, None, Some(1e-5)),
    (32, RatePreset::RingIntegrated, None, Some(15.0)),
    (40, RatePreset::Spiral, None, None),
    (40, RatePreset::SpiralIntegrated, None, None),
    (40, RatePreset::Ring, None, None),
    (40, RatePreset::RingIntegrated, None, Some(2e-2)),
];

fn criterion_8() -> Outcome {
    let mut out = Outcome::new(true, "");
    let mut checked = 0;
    let mut missed = 0;
    for (n, preset, sbs, gbs) in REFERENCE_RATES {
        let p = preset.params();
        for (proto, reference) in [(RateProtocol::Sbs, sbs), (RateProtocol::Gbs, gbs)] {
            let Some(want) = reference else { continue };
            checked += 1;
            let got = event_rate(proto, n, &p).unwrap();
            let factor = (got / want).max(want / got);
            if factor > 3.0 {
                missed += 1;
                out.pass = false;
                out.notes.push(format!(
                    "{proto:?} {} n={n}: {got:.3e} Hz vs reference {want:.0e} (factor {factor:.1})",
                    preset.name()
                ));
            }
        }
    }
    let params = RatePreset::RingIntegrated.params();
    let mut thresholds = Vec::new();
    for (proto, target) in [(RateProtocol::Gbs, 70.0), (RateProtocol::Sbs, 48.0)] {
        let best = largest_practical_n(proto, &params, ONE_PER_WEEK, 1..=1000, 120)
            .unwrap()
            .expect("some n is practical");
        let ok = (best.n as f64 - target).abs() <= 0.1 * target;
        thresholds.push(format!("{proto:?} {} (size {})", best.n, best.size));
        if !ok {
            out.pass = false;
            out.notes.push(format!(
                "{proto:?} threshold: largest practical n = {} vs reference ~{target}",
                best.n
            ));
        }
    }
    out.detail = format!(
        "{}/{checked} table entries within x3; thresholds {}",
        checked - missed,
        thresholds.join(", ")
    );
    out
}

fn criterion_9() -> Outcome {
    let mut out = Outcome::new(true, "");
    let u = haar_random_unitary(3, 9).unwrap();
    let dok = DoktorovDecomposition::synthetic(u.unitary().clone(), vec![0.4, -0.3, 0.2]).unwrap();
    let ideal = fc_factors(&dok, 4).unwrap();
    let total: f64 = ideal.iter().map(|(_, q)| q).sum();
    let mut worst_trip: f64 = 0.0;
    for (eta, gamma) in [(0.5, 0.7), (0.9, 1.3), (1.0, 1.0)] {
        let fwd = fc9_forward(&ideal, eta, gamma).unwrap();
        let back = postprocess_rescale(&fwd, eta, gamma).unwrap();
        for ((_, a), (_, b)) in ideal.iter().zip(&back) {
            worst_trip = worst_trip.max((a / total - b).abs());
        }
    }
    if worst_trip >= 1e-12 {
        out.pass = false;
        out.notes.push(format!("round trip error {worst_trip:.1e}"));
    }

    let mut rng = seeded_rng(9);
    let mut worst_fc: f64 = 0.0;
    for m in [2usize, 3] {
        let mut g = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..i {
                let x = rng.random_range(-1.5..1.5);
                g[(i, j)] = x;
                g[(j, i)] = -x;
            }
        }
        let e = g.clone().map(|x| C64::new(x, 0.0)).exp();
        let u_left = ComplexMatrix::from_fn(m, m, |i, j| e[(i, j)]);
        let xi: Vec<f64> = (0..m).map(|i| if i == 1 { -0.35 } else { 0.3 }).collect();
        let dok = DoktorovDecomposition::synthetic(u_left, xi.clone()).unwrap();
        let oracle = oracles::FockOracle::new(&g, &xi, 4);
        for p in enumerate_patterns(m, Domain::Truncated { max_n: 4 }).unwrap() {
            worst_fc = worst_fc.max((fc_factor(&dok, &p).unwrap() - oracle.probability(&p)).abs());
        }
    }
    if worst_fc >= 1e-8 {
        out.pass = false;
        out.notes.push(format!("FC factor error {worst_fc:.1e}"));
    }

    // From the device's own squeezing (γ = 1) towards molecules that need
    // several times more.
    let gammas: Vec<f64> = (0..21).map(|i| 1.0 - 0.035 * i as f64).collect();
    let settings = SweepSettings {
        eta: 1.0,
        device_truncation: 4,
        ideal_truncation: 10,
        binning: Binning::Gcd,
        shots: None,
        seed: 0,
    };
    let omega = [1000.0, 1300.0, 1700.0];
    let curve: Vec<f64> = enhancement_sweep(u.unitary(), &[0.3, 0.25, 0.2], &omega, &gammas, &settings)
        .unwrap()
        .iter()
        .map(|p| p.enhancement)
        .collect();
    let peak = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let unimodal = curve[..=peak].windows(2).all(|w| w[1] >= w[0])
        && curve[peak..].windows(2).all(|w| w[1] <= w[0])
        && peak > 0
        && peak + 1 < curve.len();
    if !unimodal {
        out.pass = false;
        out.notes.push(format!("enhancement curve not unimodal: {curve:.4?}"));
    }
    out.detail = format!(
        "round trip {worst_trip:.1e}, FC vs oracle {worst_fc:.1e}, peak C = {:.4} at gamma = {:.2}",
        curve[peak], gammas[peak]
    );
    out
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gbs.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version":1,"protocol":"gbs","circuit":{"haar":{"modes":6,"seed":3}},
        "input_modes":[1,2,3,4],"squeezing":[0.3,0.3,0.25,0.2],"domain":"full-truncated-4",
        "samples":{"count":200,"seed":7},
        "validation":["thermal","coherent","distinguishable-sms","tms","uniform"]}"#,
    )
    .unwrap();
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_bosamp"))
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    let mut files: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    let mut diffs = Vec::new();
    for f in &files {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        let same = if f == "manifest.json" {
            let strip = |bytes: &[u8]| {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v.as_object_mut().unwrap().remove("wall_time_seconds");
                v
            };
            strip(&x) == strip(&y)
        } else {
            x == y
        };
        if !same {
            diffs.push(f.to_string_lossy().into_owned());
        }
    }
    let mut out = Outcome::new(
        diffs.is_empty() && files.len() > 2,
        format!("{} artifacts compared", files.len()),
    );
    out.notes.extend(diffs.into_iter().map(|f| format!("{f} differs")));
    out
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "kernel oracle equivalence", criterion_1),
        (2, "GBS law normalisation", criterion_2),
        (3, "SBS enhancement factor", criterion_3),
        (4, "validation battery", criterion_4),
        (5, "TMS equivalence", criterion_5),
        (6, "loss model", criterion_6),
        (7, "SNR closed form", criterion_7),
        (8, "event rates", criterion_8),
        (9, "vibronic", criterion_9),
        (10, "end-to-end reproducibility", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name}: {}", o.detail);
        for n in &o.notes {
            println!("    {n}");
        }
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("outcome differs from the expected record for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
