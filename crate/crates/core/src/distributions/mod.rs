//! Output-probability laws, pattern domains and seeded samplers.

mod laws;
mod model;
mod patterns;
mod scattershot;

pub use laws::{
    mixed_kernel, prob_boson_sampling, prob_coherent, prob_distinguishable_bs,
    prob_distinguishable_sms, prob_distinguishable_sms_convolution, prob_gbs, prob_thermal,
    prob_tms, prob_uniform, tms_doubled_state, ClassicalModelSpec,
};
pub use model::{build_distribution, pseudo_pnr_channel, Distribution, Model};
pub use patterns::{domain_size, enumerate_patterns, Domain, MAX_DOMAIN_SIZE};
pub use scattershot::{
    binomial_heralding_law, enhancement_factor, herald_set_probability, heralding_probability,
    pair_emission_probability, standard_heralding_probability, ScattershotSampler,
};

/// `count` draws of `dist`, reproducible per seed.
pub fn sample(dist: &Distribution, seed: u64, count: usize) -> crate::Result<Vec<crate::FockPattern>> {
    dist.sample(seed, count)
}
