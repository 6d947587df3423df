//! Shared setup for the benchmarks: the golden synthetic population and run
//! configuration, built in memory.

use taxben_core::config::load_run_config;
use taxben_core::synth::{generate, SynthParams};
use taxben_core::{Population, RunConfig, SectorGroups, SectorImpactTable};

const SYNTH: &str = include_str!("../../../fixtures/golden/synth.toml");
const RUN: &str = include_str!("../../../fixtures/golden/run.toml");
const SECTORS: &str = include_str!("../../../fixtures/golden/sectors.csv");
const GROUPS: &str = include_str!("../../../fixtures/golden/sector_groups.csv");

pub struct Golden {
    pub pop: Population,
    pub table: SectorImpactTable,
    pub groups: SectorGroups,
    pub config: RunConfig,
}

/// Golden fixture with `n_households` in place of the pinned size.
pub fn golden(n_households: usize) -> Golden {
    let mut params = SynthParams::from_toml_str(SYNTH).expect("golden synth params");
    params.n_households = n_households;
    Golden {
        pop: generate(&params).expect("golden population"),
        table: SectorImpactTable::read(SECTORS.as_bytes()).expect("golden sectors"),
        groups: SectorGroups::read(GROUPS.as_bytes()).expect("golden groups"),
        config: load_run_config(RUN, &[]).expect("golden run config").run,
    }
}
