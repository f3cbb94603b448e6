//! Parallel Monte Carlo over the fixed trial chunks of `noma_core::link`.
//!
//! Chunks are evaluated on the rayon pool and merged in chunk order, so the
//! output is bit-identical to the sequential engine for any thread count.

use noma_core::channel::{CsiSpec, SystemGeometry};
use noma_core::link::{chunk_ranges, merge_chunks, noma_chunk, tdma_chunk, PowerPlan, RateAccumulator, RateReport};
use noma_core::{Error, Result};
use rayon::prelude::*;

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required"));
    }
    Ok(())
}

/// Monte Carlo rates for several power plans evaluated on shared draws.
pub fn monte_carlo_sweep(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    plans: &[PowerPlan],
    trials: u64,
    seed: u64,
) -> Result<Vec<RateReport>> {
    check_trials(trials)?;
    let rho = csi.accuracies(geometry)?;
    let ranges: Vec<_> = chunk_ranges(trials).collect();
    let chunks = ranges
        .into_par_iter()
        .map(|r| noma_chunk(geometry, &rho, plans, seed, r))
        .collect::<Result<Vec<Vec<RateAccumulator>>>>()?;
    let (nc, kc) = (geometry.clusters(), geometry.users_per_cluster());
    Ok((0..plans.len())
        .map(|p| merge_chunks(chunks.iter().map(|c| c[p].clone()), nc, kc).report())
        .collect())
}

pub fn monte_carlo_rates(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    plan: &PowerPlan,
    trials: u64,
    seed: u64,
) -> Result<RateReport> {
    let mut v = monte_carlo_sweep(geometry, csi, std::slice::from_ref(plan), trials, seed)?;
    Ok(v.pop().expect("one plan"))
}

/// TDMA with maximum-ratio beams, see `noma_core::link::tdma_mrt_baseline`.
pub fn tdma_mrt_baseline(
    geometry: &SystemGeometry,
    csi: &CsiSpec,
    total_power: f64,
    trials: u64,
    seed: u64,
) -> Result<RateReport> {
    check_trials(trials)?;
    let rho = csi.accuracies(geometry)?;
    let ranges: Vec<_> = chunk_ranges(trials).collect();
    let chunks = ranges
        .into_par_iter()
        .map(|r| tdma_chunk(geometry, &rho, total_power, seed, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_chunks(chunks, geometry.clusters(), geometry.users_per_cluster()).report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use noma_core::allocation::{equal_power, fixed_ratio_baseline};
    use noma_core::channel::table1_rho;
    use noma_core::link;

    #[test]
    fn matches_sequential_engine_exactly() {
        let g = SystemGeometry::table1();
        let csi = CsiSpec::Direct { rho: table1_rho() };
        let plans = vec![equal_power(&g, 100.0).unwrap(), fixed_ratio_baseline(&g, 100.0).unwrap()];
        let trials = 2 * link::CHUNK_TRIALS + 17;
        assert_eq!(
            monte_carlo_sweep(&g, &csi, &plans, trials, 5).unwrap(),
            link::monte_carlo_sweep(&g, &csi, &plans, trials, 5).unwrap()
        );
        assert_eq!(
            tdma_mrt_baseline(&g, &csi, 100.0, trials, 5).unwrap(),
            link::tdma_mrt_baseline(&g, &csi, 100.0, trials, 5).unwrap()
        );
    }
}
