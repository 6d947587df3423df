//! No-intervention income shock: sector severity classes, monthly schedules
//! per worker type, and the seeded job-loss draw.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::{Mkd, WeightedMkd};
use crate::policy::{Months, PolicyParameters};
use crate::population::io::read_rows;
use crate::population::{Individual, LaborStatus, Population, SectorCode};

pub const SECTORS_FILE: &str = "sectors.csv";
const SECTORS_HEADER: [&str; 4] = ["sector_code", "severity", "actual_turnover_delta", "actual_hours_delta"];

/// NACE division of public administration, unaffected by construction.
pub const PUBLIC_ADMINISTRATION: u32 = 84;

/// Tolerance of the job-loss draw around the targeted wage-mass share.
pub const JOB_LOSS_TOLERANCE: f64 = 0.01;

/// Sector severity class, 1 (unaffected) to 4 (hit hardest).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Severity(u8);

impl Severity {
    pub const UNAFFECTED: Severity = Severity(1);
    pub const MODERATE: Severity = Severity(2);
    pub const HIGH: Severity = Severity(3);
    pub const SEVERE: Severity = Severity(4);

    pub fn new(class: u8) -> std::result::Result<Self, String> {
        if (1..=4).contains(&class) {
            Ok(Severity(class))
        } else {
            Err(format!("unknown severity {class}, expected 1..4"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorImpact {
    pub severity: Severity,
    pub actual_turnover_delta: Option<f64>,
    pub actual_hours_delta: Option<f64>,
}

impl SectorImpact {
    /// Observed decline combined from turnover and hours, as a positive fraction.
    pub fn actual_decline(&self) -> Option<f64> {
        match (self.actual_turnover_delta, self.actual_hours_delta) {
            (Some(t), Some(h)) => Some(-(t + h) / 2.0),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SectorImpactTable {
    rows: BTreeMap<SectorCode, SectorImpact>,
}

impl SectorImpactTable {
    pub fn from_rows<I: IntoIterator<Item = (SectorCode, SectorImpact)>>(rows: I) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (code, mut impact) in rows {
            if code.division() == PUBLIC_ADMINISTRATION {
                impact.severity = Severity::UNAFFECTED;
            }
            if out.insert(code.clone(), impact).is_some() {
                return Err(Error::DuplicateId { entity: "sector", id: code.to_string() });
            }
        }
        Ok(SectorImpactTable { rows: out })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(f)
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let rows = read_rows(source, SECTORS_FILE, &SECTORS_HEADER, |r| {
            let code = SectorCode::new(r[0].trim())?;
            let class: u8 = r[1].trim().parse().map_err(|_| format!("severity: not an integer {:?}", &r[1]))?;
            let severity = Severity::new(class)?;
            let delta = |s: &str, name: &str| -> std::result::Result<Option<f64>, String> {
                let s = s.trim();
                if s.is_empty() {
                    return Ok(None);
                }
                let v: f64 = s.parse().map_err(|_| format!("{name}: invalid number {s:?}"))?;
                if !(-1.0..=1.0).contains(&v) {
                    return Err(format!("{name} must be a fraction in [-1, 1], got {v}"));
                }
                Ok(Some(v))
            };
            Ok((
                code,
                SectorImpact {
                    severity,
                    actual_turnover_delta: delta(&r[2], "actual_turnover_delta")?,
                    actual_hours_delta: delta(&r[3], "actual_hours_delta")?,
                },
            ))
        })?;
        Self::from_rows(rows)
    }

    pub fn get(&self, code: &SectorCode) -> Option<&SectorImpact> {
        self.rows.get(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SectorCode, &SectorImpact)> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Severity of a worker's sector. Errors when the sector is not mapped.
    pub fn severity_of(&self, ind: &Individual) -> Result<Option<Severity>> {
        match &ind.sector_code {
            None => Ok(None),
            Some(code) => match self.rows.get(code) {
                Some(r) => Ok(Some(r.severity)),
                None => Err(Error::MissingSector {
                    person_id: ind.person_id.clone(),
                    sector_code: code.to_string(),
                }),
            },
        }
    }

    /// Every sector code carried by a worker in `pop` must be mapped.
    pub fn check_covers(&self, pop: &Population) -> Result<()> {
        for ind in pop.individuals().iter().filter(|i| i.labor_status.is_worker()) {
            self.severity_of(ind)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockScenario {
    #[serde(default = "default_crisis_months")]
    pub crisis_months: u32,
    #[serde(default = "default_mass_share")]
    pub job_loss_wage_mass_share: f64,
    #[serde(default = "default_count_target")]
    pub job_loss_count_target: f64,
    #[serde(default = "default_informal_decline")]
    pub informal_decline: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_crisis_months() -> u32 {
    5
}
fn default_mass_share() -> f64 {
    0.40
}
fn default_count_target() -> f64 {
    60_000.0
}
fn default_informal_decline() -> f64 {
    0.70
}

impl Default for ShockScenario {
    fn default() -> Self {
        ShockScenario {
            crisis_months: default_crisis_months(),
            job_loss_wage_mass_share: default_mass_share(),
            job_loss_count_target: default_count_target(),
            informal_decline: default_informal_decline(),
            seed: 0,
        }
    }
}

impl ShockScenario {
    pub fn validate(&self) -> Result<()> {
        if self.crisis_months > 12 {
            return Err(Error::Config(format!("scenario.crisis_months must be in 0..=12, got {}", self.crisis_months)));
        }
        for (name, v) in [
            ("scenario.job_loss_wage_mass_share", self.job_loss_wage_mass_share),
            ("scenario.informal_decline", self.informal_decline),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.job_loss_count_target >= 0.0) {
            return Err(Error::Config("scenario.job_loss_count_target must be >= 0".into()));
        }
        Ok(())
    }
}

/// Monthly earnings from the person's main activity under a two-phase schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShockedIncome {
    pub person_id: String,
    /// Length of the first phase, counted from January.
    pub crisis_months: u32,
    pub crisis_phase_monthly: Mkd,
    pub after_phase_monthly: Mkd,
    pub job_lost: bool,
}

impl ShockedIncome {
    pub fn flat(person_id: &str, monthly: Mkd) -> Self {
        ShockedIncome {
            person_id: person_id.to_string(),
            crisis_months: 0,
            crisis_phase_monthly: monthly,
            after_phase_monthly: monthly,
            job_lost: false,
        }
    }

    fn phases(person_id: &str, d: u32, crisis: Mkd, after: Mkd) -> Self {
        ShockedIncome {
            person_id: person_id.to_string(),
            crisis_months: d,
            crisis_phase_monthly: crisis,
            after_phase_monthly: after,
            job_lost: false,
        }
    }

    pub fn annual(&self) -> Mkd {
        let d = self.crisis_months as i64;
        self.crisis_phase_monthly.times(d) + self.after_phase_monthly.times(12 - d)
    }

    pub fn month(&self, m: usize) -> Mkd {
        if (m as u32) < self.crisis_months {
            self.crisis_phase_monthly
        } else {
            self.after_phase_monthly
        }
    }

    pub fn months(&self) -> Months {
        std::array::from_fn(|m| self.month(m))
    }
}

pub fn shock_employee(
    wage: Mkd,
    severity: Severity,
    scenario: &ShockScenario,
    params: &PolicyParameters,
    job_lost: bool,
) -> ShockedIncome {
    let d = scenario.crisis_months;
    if d == 0 {
        return ShockedIncome::flat("", wage);
    }
    let mw = params.tax.minimum_wage;
    let mut s = match severity.get() {
        4 if job_lost => ShockedIncome::phases("", d, Mkd::ZERO, Mkd::ZERO),
        4 | 1 => ShockedIncome::phases("", d, wage, wage),
        3 => ShockedIncome::phases("", d, wage.min(mw), wage.scale(0.70)),
        2 => ShockedIncome::phases("", d, wage.scale(0.70), wage),
        _ => unreachable!("severity is validated on construction"),
    };
    s.job_lost = job_lost && severity == Severity::SEVERE;
    s
}

pub fn shock_self_employed(income: Mkd, severity: Severity, scenario: &ShockScenario) -> ShockedIncome {
    if scenario.crisis_months == 0 {
        return ShockedIncome::flat("", income);
    }
    let (crisis, after) = match severity.get() {
        4 => (0.0, 0.75),
        3 => (0.50, 0.70),
        2 => (0.70, 1.0),
        1 => (1.0, 1.0),
        _ => unreachable!("severity is validated on construction"),
    };
    ShockedIncome::phases("", scenario.crisis_months, income.scale(crisis), income.scale(after))
}

pub fn shock_informal(income: Mkd, scenario: &ShockScenario) -> ShockedIncome {
    ShockedIncome::phases("", scenario.crisis_months, income.scale(1.0 - scenario.informal_decline), income)
}

/// Outcome of the job-loss draw. `lost[i]` refers to `pop.individuals()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JobLossDraw {
    pub lost: Vec<bool>,
    /// Selected weighted wage mass over all severity-4 formal wage mass.
    pub mass_share: f64,
    /// Weighted number of selected workers, for comparison with the count target.
    pub weighted_persons: f64,
    pub count_target: f64,
}

impl JobLossDraw {
    pub fn none(n: usize) -> Self {
        JobLossDraw { lost: vec![false; n], mass_share: 0.0, weighted_persons: 0.0, count_target: 0.0 }
    }

    pub fn person_ids<'a>(&'a self, pop: &'a Population) -> impl Iterator<Item = &'a str> + 'a {
        pop.individuals().iter().zip(&self.lost).filter(|(_, &l)| l).map(|(i, _)| i.person_id.as_str())
    }
}

/// Seeded draw of formal severity-4 employees whose wage mass makes up the
/// targeted share of all severity-4 formal wage mass, within one point.
pub fn select_job_losses(pop: &Population, table: &SectorImpactTable, scenario: &ShockScenario) -> Result<JobLossDraw> {
    let n = pop.individuals().len();
    let mut candidates: Vec<(usize, WeightedMkd)> = Vec::new();
    for (pi, ind) in pop.individuals().iter().enumerate() {
        if ind.labor_status == LaborStatus::FormalEmployee && table.severity_of(ind)? == Some(Severity::SEVERE) {
            let w = pop.households()[pop.household_of(pi)].weight;
            candidates.push((pi, ind.gross_wage.weighted(w)));
        }
    }
    let total: WeightedMkd = candidates.iter().map(|c| c.1).sum();
    let share = scenario.job_loss_wage_mass_share;
    let mut draw = JobLossDraw { count_target: scenario.job_loss_count_target, ..JobLossDraw::none(n) };
    if share == 0.0 {
        return Ok(draw);
    }
    if total.raw() == 0 {
        return Err(Error::numerical(
            "shock_engine",
            "select_job_losses",
            "severity-4 formal wage mass is zero but job_loss_wage_mass_share > 0",
        ));
    }
    let chosen: Vec<usize> = if share >= 1.0 {
        candidates.iter().map(|c| c.0).collect()
    } else {
        let mut order = candidates.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(scenario.seed));
        first_fit(&order, total, share)
    };
    let mut mass = WeightedMkd::ZERO;
    let mut persons = 0i128;
    for &pi in &chosen {
        draw.lost[pi] = true;
        let w = pop.households()[pop.household_of(pi)].weight;
        mass += pop.individuals()[pi].gross_wage.weighted(w);
        persons += w.raw() as i128;
    }
    draw.mass_share = mass.raw() as f64 / total.raw() as f64;
    draw.weighted_persons = persons as f64 / crate::money::WEIGHT_SCALE as f64;
    Ok(draw)
}

/// Walk the shuffled candidates, taking each one that keeps the running mass
/// under the upper bound, until the lower bound is reached.
fn first_fit(order: &[(usize, WeightedMkd)], total: WeightedMkd, share: f64) -> Vec<usize> {
    let t = total.raw() as f64;
    let upper = ((share + JOB_LOSS_TOLERANCE) * t) as i128;
    let lower = ((share - JOB_LOSS_TOLERANCE) * t).ceil() as i128;
    let target = share * t;
    let mut taken = Vec::new();
    let mut mass = 0i128;
    for &(pi, m) in order {
        if mass >= lower {
            break;
        }
        if mass + m.raw() <= upper {
            taken.push(pi);
            mass += m.raw();
        }
    }
    if mass >= lower {
        return taken;
    }
    // The band was not reachable: fall back to the prefix closest to the target.
    let (mut best, mut best_gap, mut run) = (0usize, target.abs(), 0i128);
    for (k, &(_, m)) in order.iter().enumerate() {
        run += m.raw();
        let gap = (run as f64 - target).abs();
        if gap < best_gap {
            best = k + 1;
            best_gap = gap;
        }
    }
    order[..best].iter().map(|c| c.0).collect()
}

/// Main-activity earnings of one person under no intervention.
pub fn shock_person(
    ind: &Individual,
    severity: Option<Severity>,
    scenario: &ShockScenario,
    params: &PolicyParameters,
    job_lost: bool,
) -> Result<ShockedIncome> {
    let need = |s: Option<Severity>| {
        s.ok_or_else(|| Error::MissingSector { person_id: ind.person_id.clone(), sector_code: String::new() })
    };
    let mut out = match ind.labor_status {
        LaborStatus::FormalEmployee => shock_employee(ind.gross_wage, need(severity)?, scenario, params, job_lost),
        LaborStatus::SelfEmployed => shock_self_employed(ind.self_employment_income, need(severity)?, scenario),
        LaborStatus::InformalEmployee => shock_informal(ind.gross_wage, scenario),
        _ => ShockedIncome::flat("", Mkd::ZERO),
    };
    out.person_id = ind.person_id.clone();
    Ok(out)
}

/// Main-activity earnings for every person, in population order. Pensions,
/// other income and any secondary earnings are outside the shock.
pub fn apply_shock(
    pop: &Population,
    table: &SectorImpactTable,
    scenario: &ShockScenario,
    params: &PolicyParameters,
    draw: &JobLossDraw,
) -> Result<Vec<ShockedIncome>> {
    pop.individuals()
        .iter()
        .enumerate()
        .map(|(pi, ind)| {
            let severity = if ind.labor_status.is_worker() { table.severity_of(ind)? } else { None };
            shock_person(ind, severity, scenario, params, draw.lost[pi])
        })
        .collect()
}

/// Pre-shock monthly earnings from the main activity.
pub fn main_earnings(ind: &Individual) -> Mkd {
    match ind.labor_status {
        LaborStatus::FormalEmployee | LaborStatus::InformalEmployee => ind.gross_wage,
        LaborStatus::SelfEmployed => ind.self_employment_income,
        _ => Mkd::ZERO,
    }
}
