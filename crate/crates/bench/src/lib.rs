//! Shared fixtures for the benchmarks.

use dyadfe::model::ModelSpec;
use dyadfe::simulate::replication_network;
use dyadfe::{Covariates, DesignId, McDesign, ModelVariant, Network};

pub struct Fixture {
    pub net: Network,
    pub cov: Covariates,
    pub spec: ModelSpec,
}

/// First replication of a Monte Carlo design at `n` nodes.
pub fn fixture(id: DesignId, variant: ModelVariant, n: usize) -> Fixture {
    let design = McDesign::new(id, variant, n, 7);
    let (dgp, net) = replication_network(&design, 0);
    let cov = dgp.covariates(variant);
    let spec = ModelSpec::for_covariates(variant, &cov);
    Fixture { net, cov, spec }
}
