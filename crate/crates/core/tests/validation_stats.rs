use bosamp_core::circuits::{haar_random_unitary, transfer_matrix};
use bosamp_core::distributions::{build_distribution, Domain, Model, ScattershotSampler};
use bosamp_core::validation::{
    bayesian_compare, likelihood_ratio_test, rownorm_test, Likelihood, SampleRecord,
};
use bosamp_core::ComplexMatrix;

const MODES: usize = 12;

fn transfer(seed: u64, sources: usize) -> ComplexMatrix {
    let u = haar_random_unitary(MODES, seed).unwrap();
    transfer_matrix(&u.with_inputs((0..sources).collect()).unwrap())
}

fn scattershot(t: &ComplexMatrix, n: usize, distinguishable: bool, seed: u64, count: usize) -> Vec<SampleRecord> {
    let xi = vec![0.3; t.rows()];
    let mut s =
        ScattershotSampler::new(t.clone(), &xi, n, Domain::CollisionFree { n }, distinguishable)
            .unwrap();
    s.sample(seed, count).unwrap()
}

/// Keeps the heralds and replaces every output by a uniform draw.
fn uniform_outputs(records: &[SampleRecord], n: usize, seed: u64) -> Vec<SampleRecord> {
    let domain = Domain::CollisionFree { n };
    let d = build_distribution(&Model::Uniform { modes: MODES, domain }, domain, true).unwrap();
    let outs = d.sample(seed, records.len()).unwrap();
    records
        .iter()
        .zip(outs)
        .map(|(r, output)| SampleRecord { output, ..r.clone() })
        .collect()
}

#[test]
fn bayesian_confidence_favours_the_true_scattershot_law() {
    let n = 6;
    for seed in 0..3 {
        let t = transfer(100 + seed, 8);
        let domain = Some(Domain::CollisionFree { n });
        let ideal = Likelihood::heralded(t.clone(), false, domain);
        let dist = Likelihood::heralded(t.clone(), true, domain);

        let data = scattershot(&t, n, false, seed, 500);
        let v = bayesian_compare(&data, &ideal, &dist).unwrap();
        assert!(v.final_confidence().unwrap() > 0.999, "seed {seed}");

        let data = scattershot(&t, n, true, seed, 500);
        let v = bayesian_compare(&data, &ideal, &dist).unwrap();
        assert!(v.final_confidence().unwrap() < 1e-3, "seed {seed}");
    }
}

#[test]
fn confidence_ignores_sample_order_and_matches_direct_products() {
    let t = transfer(7, 6);
    let domain = Some(Domain::CollisionFree { n: 3 });
    let ideal = Likelihood::heralded(t.clone(), false, domain);
    let dist = Likelihood::heralded(t.clone(), true, domain);
    let data = scattershot(&t, 3, false, 1, 20);
    let fwd = bayesian_compare(&data, &ideal, &dist).unwrap();
    let rev: Vec<_> = data.iter().rev().cloned().collect();
    let bwd = bayesian_compare(&rev, &ideal, &dist).unwrap();
    let (a, b) = (fwd.final_confidence().unwrap(), bwd.final_confidence().unwrap());
    assert!((a - b).abs() < 1e-12);

    let (mut pi, mut pa) = (1.0, 1.0);
    for (rec, c) in data.iter().zip(&fwd.confidence_trace) {
        pi *= ideal.evaluate(rec).unwrap();
        pa *= dist.evaluate(rec).unwrap();
        assert!((c - pi / (pi + pa)).abs() < 1e-10);
    }
}

#[test]
fn row_norm_counter_separates_uniform_from_boson_sampling() {
    let n = 3;
    for seed in 0..3 {
        let t = transfer(200 + seed, 6);
        let bs = scattershot(&t, n, false, seed, 1000);
        let uni = uniform_outputs(&bs, n, seed + 50);
        assert!(rownorm_test(&bs, &t).unwrap().final_counter().unwrap() > 0, "seed {seed}");
        assert!(rownorm_test(&uni, &t).unwrap().final_counter().unwrap() < 0, "seed {seed}");
    }
}

#[test]
fn likelihood_ratio_counter_separates_distinguishable_photons() {
    let n = 3;
    for seed in 0..3 {
        let t = transfer(300 + seed, 6);
        let ind = scattershot(&t, n, false, seed, 1000);
        let dis = scattershot(&t, n, true, seed, 1000);
        let c_ind = likelihood_ratio_test(&ind, &t, 0.75, 2.0).unwrap().final_counter().unwrap();
        let c_dis = likelihood_ratio_test(&dis, &t, 0.75, 2.0).unwrap().final_counter().unwrap();
        assert!(c_ind > 0 && c_dis < 0, "seed {seed}: {c_ind} {c_dis}");
    }
}
