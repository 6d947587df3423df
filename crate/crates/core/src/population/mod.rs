//! Weighted household survey records.
//!
//! A [`Population`] is validated once on construction and never mutated
//! afterwards; reweighting returns a fresh value.

mod equivalence;
pub(crate) mod io;
mod reweight;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::money::{Mkd, Weight};

pub use equivalence::{equivalized_income, household_equivalized_income, EquivalenceScale};
pub use io::{load_population, read_population, write_population, HOUSEHOLDS_FILE, INDIVIDUALS_FILE};
pub use reweight::{reweight, Dimension, Margin, ReweightTargets};

/// Age from which a person may hold a labor-market status other than child.
pub const WORKING_AGE: u32 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LaborStatus {
    FormalEmployee,
    InformalEmployee,
    SelfEmployed,
    Unemployed,
    Student,
    Pensioner,
    Inactive,
    Child,
}

impl LaborStatus {
    pub const ALL: [LaborStatus; 8] = [
        LaborStatus::FormalEmployee,
        LaborStatus::InformalEmployee,
        LaborStatus::SelfEmployed,
        LaborStatus::Unemployed,
        LaborStatus::Student,
        LaborStatus::Pensioner,
        LaborStatus::Inactive,
        LaborStatus::Child,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LaborStatus::FormalEmployee => "formal_employee",
            LaborStatus::InformalEmployee => "informal_employee",
            LaborStatus::SelfEmployed => "self_employed",
            LaborStatus::Unemployed => "unemployed",
            LaborStatus::Student => "student",
            LaborStatus::Pensioner => "pensioner",
            LaborStatus::Inactive => "inactive",
            LaborStatus::Child => "child",
        }
    }

    pub fn is_employee(self) -> bool {
        matches!(self, LaborStatus::FormalEmployee | LaborStatus::InformalEmployee)
    }

    pub fn is_worker(self) -> bool {
        self.is_employee() || self == LaborStatus::SelfEmployed
    }

    fn earns_nothing(self) -> bool {
        matches!(
            self,
            LaborStatus::Unemployed | LaborStatus::Student | LaborStatus::Inactive | LaborStatus::Child
        )
    }
}

impl FromStr for LaborStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        LaborStatus::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown labor_status {s:?}"))
    }
}

impl fmt::Display for LaborStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two-digit NACE Rev.2 division, e.g. `"55"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectorCode(String);

impl SectorCode {
    pub fn new(code: &str) -> std::result::Result<Self, String> {
        let c = code.trim();
        if c.len() == 2 && c.bytes().all(|b| b.is_ascii_digit()) {
            Ok(SectorCode(c.to_string()))
        } else {
            Err(format!("sector code {code:?} is not a two-digit NACE division"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn division(&self) -> u32 {
        self.0.parse().expect("validated on construction")
    }
}

impl fmt::Display for SectorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Individual {
    pub person_id: String,
    pub household_id: String,
    pub age: u32,
    pub gender: Gender,
    pub labor_status: LaborStatus,
    pub sector_code: Option<SectorCode>,
    /// Monthly gross wage; informal earnings for informal employees.
    pub gross_wage: Mkd,
    pub self_employment_income: Mkd,
    pub pension_income: Mkd,
    pub other_income: Mkd,
}

impl Individual {
    fn check(&self) -> std::result::Result<(), String> {
        for (name, v) in [
            ("gross_wage", self.gross_wage),
            ("self_employment_income", self.self_employment_income),
            ("pension_income", self.pension_income),
            ("other_income", self.other_income),
        ] {
            if v.is_negative() {
                return Err(format!("negative {name} {v}"));
            }
        }
        match self.labor_status {
            LaborStatus::FormalEmployee => {
                if !self.gross_wage.is_positive() || self.sector_code.is_none() {
                    return Err("formal employee needs a positive gross_wage and a sector_code".into());
                }
            }
            LaborStatus::InformalEmployee => {
                if !self.gross_wage.is_positive() {
                    return Err("informal employee needs positive earnings in gross_wage".into());
                }
            }
            LaborStatus::SelfEmployed => {
                if !self.self_employment_income.is_positive() || self.sector_code.is_none() {
                    return Err("self-employed person needs positive self_employment_income and a sector_code".into());
                }
            }
            s if s.earns_nothing()
                && (!self.gross_wage.is_zero() || !self.self_employment_income.is_zero()) => {
                    return Err(format!("{s} cannot have wage or self-employment income"));
                }
            _ => {}
        }
        if self.age < WORKING_AGE && self.labor_status != LaborStatus::Child {
            return Err(format!("age {} requires labor_status child", self.age));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Household {
    pub household_id: String,
    pub weight: Weight,
    pub owns_extra_property: bool,
    pub parcel_over_500m2: bool,
    pub car_newer_than_5y: bool,
}

impl Household {
    /// Any asset that excludes the household under the ordinary GMI property test.
    pub fn fails_property_test(&self) -> bool {
        self.owns_extra_property || self.parcel_over_500m2 || self.car_newer_than_5y
    }
}

/// Validated survey population. Households and individuals are kept in
/// ascending id order, which fixes the reduction order of every aggregate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Population {
    households: Vec<Household>,
    individuals: Vec<Individual>,
    members: Vec<Vec<usize>>,
    reference_year: String,
}

impl Population {
    pub fn new(
        mut households: Vec<Household>,
        mut individuals: Vec<Individual>,
        reference_year: impl Into<String>,
    ) -> Result<Self> {
        if households.is_empty() || individuals.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        households.sort_by(|a, b| a.household_id.cmp(&b.household_id));
        individuals.sort_by(|a, b| a.person_id.cmp(&b.person_id));

        for pair in households.windows(2) {
            if pair[0].household_id == pair[1].household_id {
                return Err(Error::DuplicateId { entity: "household", id: pair[0].household_id.clone() });
            }
        }
        for pair in individuals.windows(2) {
            if pair[0].person_id == pair[1].person_id {
                return Err(Error::DuplicateId { entity: "person", id: pair[0].person_id.clone() });
            }
        }
        for h in &households {
            if !h.weight.is_positive() {
                return Err(invalid("household", &h.household_id, format!("weight {} must be > 0", h.weight)));
            }
        }

        let index: BTreeMap<&str, usize> =
            households.iter().enumerate().map(|(i, h)| (h.household_id.as_str(), i)).collect();
        let mut members = vec![Vec::new(); households.len()];
        for (pi, ind) in individuals.iter().enumerate() {
            let Some(&hi) = index.get(ind.household_id.as_str()) else {
                return Err(Error::DanglingHousehold {
                    person_id: ind.person_id.clone(),
                    household_id: ind.household_id.clone(),
                });
            };
            ind.check().map_err(|m| invalid("individual", &ind.person_id, m))?;
            members[hi].push(pi);
        }
        if let Some(hi) = members.iter().position(Vec::is_empty) {
            return Err(invalid("household", &households[hi].household_id, "household has no members".into()));
        }

        Ok(Population { households, individuals, members, reference_year: reference_year.into() })
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn reference_year(&self) -> &str {
        &self.reference_year
    }

    /// Indices into [`Population::individuals`] of the members of household `hi`.
    pub fn member_indices(&self, hi: usize) -> &[usize] {
        &self.members[hi]
    }

    pub fn members(&self, hi: usize) -> impl Iterator<Item = &Individual> + '_ {
        self.members[hi].iter().map(move |&pi| &self.individuals[pi])
    }

    pub fn household_of(&self, pi: usize) -> usize {
        self.households
            .binary_search_by(|h| h.household_id.as_str().cmp(&self.individuals[pi].household_id))
            .expect("validated on construction")
    }

    /// Household index of every individual, in individual order.
    pub fn person_household_index(&self) -> Vec<usize> {
        let mut out = vec![0; self.individuals.len()];
        for (hi, m) in self.members.iter().enumerate() {
            for &pi in m {
                out[pi] = hi;
            }
        }
        out
    }

    /// Sum over households of member count × household weight.
    pub fn weighted_persons(&self) -> Weight {
        self.households
            .iter()
            .zip(&self.members)
            .map(|(h, m)| h.weight.times(m.len() as i64))
            .sum()
    }

    pub fn sector_codes(&self) -> BTreeSet<&SectorCode> {
        self.individuals.iter().filter_map(|i| i.sector_code.as_ref()).collect()
    }

    pub(crate) fn with_weights(&self, weights: Vec<Weight>) -> Result<Population> {
        assert_eq!(weights.len(), self.households.len());
        let mut out = self.clone();
        for (h, w) in out.households.iter_mut().zip(weights) {
            if !w.is_positive() {
                return Err(Error::numerical(
                    "population",
                    "reweight",
                    format!("household {} weight collapsed to {w}", h.household_id),
                ));
            }
            h.weight = w;
        }
        Ok(out)
    }
}

fn invalid(entity: &'static str, id: &str, message: String) -> Error {
    Error::Invalid { module: "population", op: "load_population", entity, id: id.to_string(), message }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn household(id: &str, weight: f64) -> Household {
        Household {
            household_id: id.into(),
            weight: Weight::from_f64(weight),
            owns_extra_property: false,
            parcel_over_500m2: false,
            car_newer_than_5y: false,
        }
    }

    pub fn person(id: &str, hh: &str, age: u32, status: LaborStatus) -> Individual {
        Individual {
            person_id: id.into(),
            household_id: hh.into(),
            age,
            gender: Gender::Female,
            labor_status: status,
            sector_code: None,
            gross_wage: Mkd::ZERO,
            self_employment_income: Mkd::ZERO,
            pension_income: Mkd::ZERO,
            other_income: Mkd::ZERO,
        }
    }

    pub fn formal(id: &str, hh: &str, sector: &str, wage: i64) -> Individual {
        Individual {
            sector_code: Some(SectorCode::new(sector).unwrap()),
            gross_wage: Mkd::from_whole(wage),
            ..person(id, hh, 40, LaborStatus::FormalEmployee)
        }
    }
}
