//! Seeded synthetic survey population with controllable marginals.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::{Mkd, Weight};
use crate::population::{Gender, Household, Individual, LaborStatus, Population, SectorCode, WORKING_AGE};

/// Upper end of the working-age band used by the employment rate.
pub const WORKING_AGE_MAX: u32 = 64;
pub const PENSION_AGE: u32 = 65;
pub const STUDENT_AGE_MAX: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalParams {
    pub log_mean: f64,
    pub log_sd: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyFlagRates {
    pub owns_extra_property: f64,
    pub parcel_over_500m2: f64,
    pub car_newer_than_5y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub n_households: usize,
    pub seed: u64,
    #[serde(default = "default_year")]
    pub reference_year: String,
    /// Weighted number of households the sample represents.
    pub target_households: f64,
    /// Relative spread of household weights around the mean, in [0, 1).
    #[serde(default)]
    pub weight_jitter: f64,
    /// Probability of household size 1, 2, ... in order.
    pub household_size_distribution: Vec<f64>,
    /// Probability that a member beyond the first two is under 18.
    pub child_share: f64,
    pub female_share: f64,
    /// Share employed among persons aged 15-64.
    pub employment_rate: f64,
    /// Shares of the employed who are informal and self-employed.
    pub informality_share: f64,
    pub self_employment_share: f64,
    /// Share unemployed among the working-age non-employed who are not students.
    pub unemployment_rate: f64,
    /// Share in education among non-employed persons aged 15-24.
    pub student_share: f64,
    pub sector_distribution: BTreeMap<String, f64>,
    pub wage_lognormal: LogNormalParams,
    /// Lowest formal gross wage, MKD/month.
    pub formal_wage_floor: Mkd,
    pub informal_income_factor: f64,
    pub self_employment_income_factor: f64,
    pub pension_lognormal: LogNormalParams,
    /// Share of persons aged 65+ drawing a pension.
    pub pension_take_up: f64,
    pub other_income_rate: f64,
    pub other_income_mean: Mkd,
    pub property_flag_rates: PropertyFlagRates,
}

fn default_year() -> String {
    "2019".into()
}

fn check_probabilities(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Config(format!("{name} must be non-empty probabilities in [0, 1]")));
    }
    if v.iter().all(|&p| p == 0.0) {
        return Err(Error::Config(format!("{name} is degenerate: every entry is zero")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name} sums to {s}, expected 1")));
    }
    Ok(())
}

impl SynthParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: SynthParams = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_households == 0 {
            return Err(Error::Config("n_households must be >= 1".into()));
        }
        if !(self.target_households > 0.0) {
            return Err(Error::Config("target_households must be > 0".into()));
        }
        check_probabilities("household_size_distribution", &self.household_size_distribution)?;
        let sectors: Vec<f64> = self.sector_distribution.values().copied().collect();
        check_probabilities("sector_distribution", &sectors)?;
        for code in self.sector_distribution.keys() {
            SectorCode::new(code).map_err(Error::Config)?;
        }
        let f = &self.property_flag_rates;
        for (name, v) in [
            ("weight_jitter", self.weight_jitter),
            ("child_share", self.child_share),
            ("female_share", self.female_share),
            ("employment_rate", self.employment_rate),
            ("informality_share", self.informality_share),
            ("self_employment_share", self.self_employment_share),
            ("unemployment_rate", self.unemployment_rate),
            ("student_share", self.student_share),
            ("pension_take_up", self.pension_take_up),
            ("other_income_rate", self.other_income_rate),
            ("property_flag_rates.owns_extra_property", f.owns_extra_property),
            ("property_flag_rates.parcel_over_500m2", f.parcel_over_500m2),
            ("property_flag_rates.car_newer_than_5y", f.car_newer_than_5y),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.weight_jitter >= 1.0 {
            return Err(Error::Config("weight_jitter must be < 1".into()));
        }
        if self.informality_share + self.self_employment_share > 1.0 {
            return Err(Error::Config("informality_share + self_employment_share must not exceed 1".into()));
        }
        for (name, l) in [("wage_lognormal", self.wage_lognormal), ("pension_lognormal", self.pension_lognormal)] {
            if !(l.log_sd >= 0.0 && l.log_sd.is_finite() && l.log_mean.is_finite()) {
                return Err(Error::Config(format!("{name} needs finite log_mean and log_sd >= 0")));
            }
        }
        for (name, v) in [
            ("informal_income_factor", self.informal_income_factor),
            ("self_employment_income_factor", self.self_employment_income_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        if self.formal_wage_floor.is_negative() || self.other_income_mean.is_negative() {
            return Err(Error::Config("formal_wage_floor and other_income_mean must be >= 0".into()));
        }
        Ok(())
    }
}

struct Draws {
    rng: ChaCha8Rng,
    size: WeightedIndex<f64>,
    sector: WeightedIndex<f64>,
    sector_codes: Vec<SectorCode>,
    wage: LogNormal<f64>,
    pension: LogNormal<f64>,
}

fn whole(v: f64) -> Mkd {
    Mkd::from_whole(v.round().max(1.0) as i64)
}

impl Draws {
    fn flip(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn sector(&mut self) -> SectorCode {
        self.sector_codes[self.sector.sample(&mut self.rng)].clone()
    }
}

/// Draw a population. Identical parameters give an identical population.
pub fn generate(params: &SynthParams) -> Result<Population> {
    params.validate()?;
    let dist_err = |e: rand::distr::weighted::Error| Error::Config(e.to_string());
    let lognormal = |l: LogNormalParams| LogNormal::new(l.log_mean, l.log_sd).map_err(|e| Error::Config(e.to_string()));
    let mut d = Draws {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        size: WeightedIndex::new(&params.household_size_distribution).map_err(dist_err)?,
        sector: WeightedIndex::new(params.sector_distribution.values()).map_err(dist_err)?,
        sector_codes: params.sector_distribution.keys().map(|c| SectorCode::new(c).expect("validated")).collect(),
        wage: lognormal(params.wage_lognormal)?,
        pension: lognormal(params.pension_lognormal)?,
    };
    let mean_weight = params.target_households / params.n_households as f64;
    let width = (params.n_households.to_string().len()).max(6);
    let mut households = Vec::with_capacity(params.n_households);
    let mut individuals = Vec::new();
    for h in 0..params.n_households {
        let hid = format!("H{:0width$}", h + 1);
        let jitter = if params.weight_jitter > 0.0 {
            1.0 + params.weight_jitter * d.rng.random_range(-1.0..1.0)
        } else {
            1.0
        };
        let f = &params.property_flag_rates;
        households.push(Household {
            household_id: hid.clone(),
            weight: Weight::from_f64(mean_weight * jitter),
            owns_extra_property: d.flip(f.owns_extra_property),
            parcel_over_500m2: d.flip(f.parcel_over_500m2),
            car_newer_than_5y: d.flip(f.car_newer_than_5y),
        });
        let size = d.size.sample(&mut d.rng) + 1;
        let head_age: u32 = d.rng.random_range(20..=85);
        for k in 0..size {
            let age = match k {
                0 => head_age,
                1 => head_age.saturating_add_signed(d.rng.random_range(-6..=6)).clamp(18, 95),
                _ if d.flip(params.child_share) => d.rng.random_range(0..18),
                _ => d.rng.random_range(18..=90),
            };
            let pid = format!("{hid}P{:02}", k + 1);
            individuals.push(person(&mut d, params, pid, hid.clone(), age));
        }
    }
    Population::new(households, individuals, params.reference_year.clone())
}

fn person(d: &mut Draws, p: &SynthParams, person_id: String, household_id: String, age: u32) -> Individual {
    let gender = if d.flip(p.female_share) { Gender::Female } else { Gender::Male };
    let mut ind = Individual {
        person_id,
        household_id,
        age,
        gender,
        labor_status: LaborStatus::Child,
        sector_code: None,
        gross_wage: Mkd::ZERO,
        self_employment_income: Mkd::ZERO,
        pension_income: Mkd::ZERO,
        other_income: Mkd::ZERO,
    };
    if age < WORKING_AGE {
        return ind;
    }
    if age >= PENSION_AGE {
        ind.labor_status = if d.flip(p.pension_take_up) { LaborStatus::Pensioner } else { LaborStatus::Inactive };
        if ind.labor_status == LaborStatus::Pensioner {
            ind.pension_income = whole(d.pension.sample(&mut d.rng));
        }
    } else if d.flip(p.employment_rate) {
        let wage = d.wage.sample(&mut d.rng);
        let u: f64 = d.rng.random();
        ind.sector_code = Some(d.sector());
        if u < p.informality_share {
            ind.labor_status = LaborStatus::InformalEmployee;
            ind.gross_wage = whole(wage * p.informal_income_factor);
        } else if u < p.informality_share + p.self_employment_share {
            ind.labor_status = LaborStatus::SelfEmployed;
            ind.self_employment_income = whole(wage * p.self_employment_income_factor);
        } else {
            ind.labor_status = LaborStatus::FormalEmployee;
            ind.gross_wage = whole(wage).max(p.formal_wage_floor);
        }
    } else if age <= STUDENT_AGE_MAX && d.flip(p.student_share) {
        ind.labor_status = LaborStatus::Student;
    } else if d.flip(p.unemployment_rate) {
        ind.labor_status = LaborStatus::Unemployed;
    } else {
        ind.labor_status = LaborStatus::Inactive;
    }
    if d.flip(p.other_income_rate) {
        let x: f64 = d.rng.sample(Exp1);
        ind.other_income = Mkd::from_whole((x * p.other_income_mean.to_f64()).round() as i64);
    }
    ind
}
