//! Raking of household weights onto categorical margins.
//!
//! Household-level margins get the classic proportional-fitting update. A
//! person-level margin constrains sum_h w_h * n_hc, where n_hc counts the
//! members of household h in category c; its per-category factor f solves
//! sum_h w_h n_hc f^n_hc = t_c, which reduces to the classic ratio when every
//! n_hc is 0 or 1. Households with the same member-count signature always
//! receive the same factor, so relative weights inside a cell are preserved.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Household, Individual, Population};
use crate::error::{Error, Result};
use crate::money::Weight;

#[derive(Clone, Debug, PartialEq)]
pub enum Dimension {
    Gender,
    LaborStatus,
    /// Ascending lower bounds of each band after the first, e.g. `[15, 30, 65]`.
    AgeBand { breaks: Vec<u32> },
    /// Household size, sizes at or above `max` pooled into `"{max}+"`.
    HouseholdSize { max: usize },
    /// Whether the household fails the ordinary GMI property test.
    PropertyOwner,
}

impl Dimension {
    pub fn name(&self) -> String {
        match self {
            Dimension::Gender => "gender".into(),
            Dimension::LaborStatus => "labor_status".into(),
            Dimension::AgeBand { breaks } => format!("age_band{breaks:?}"),
            Dimension::HouseholdSize { max } => format!("household_size(max {max})"),
            Dimension::PropertyOwner => "property_owner".into(),
        }
    }

    fn is_person_level(&self) -> bool {
        matches!(self, Dimension::Gender | Dimension::LaborStatus | Dimension::AgeBand { .. })
    }

    fn person_category(&self, p: &Individual) -> String {
        match self {
            Dimension::Gender => p.gender.as_str().to_string(),
            Dimension::LaborStatus => p.labor_status.as_str().to_string(),
            Dimension::AgeBand { breaks } => age_band_label(breaks, p.age),
            _ => unreachable!("household dimension"),
        }
    }

    fn household_category(&self, h: &Household, size: usize) -> String {
        match self {
            Dimension::HouseholdSize { max } => {
                if size >= *max {
                    format!("{max}+")
                } else {
                    size.to_string()
                }
            }
            Dimension::PropertyOwner => if h.fails_property_test() { "owner" } else { "non_owner" }.to_string(),
            _ => unreachable!("person dimension"),
        }
    }
}

fn age_band_label(breaks: &[u32], age: u32) -> String {
    let mut lo = 0;
    for &b in breaks {
        if age < b {
            return format!("{lo}-{}", b - 1);
        }
        lo = b;
    }
    format!("{lo}+")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Margin {
    pub dimension: Dimension,
    /// Weighted count per category label.
    pub targets: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReweightTargets {
    pub margins: Vec<Margin>,
    /// Bound on |achieved - target| / target for every category.
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsFile {
    tolerance: f64,
    max_iterations: usize,
    margins: Vec<MarginFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginFile {
    dimension: String,
    breaks: Option<Vec<u32>>,
    max: Option<usize>,
    targets: BTreeMap<String, f64>,
}

impl ReweightTargets {
    /// Parse a targets file:
    ///
    /// ```toml
    /// tolerance = 1e-6
    /// max_iterations = 200
    /// [[margins]]
    /// dimension = "age_band"
    /// breaks = [15, 30, 65]
    /// targets = { "0-14" = 300000.0, "15-29" = 400000.0, "30-64" = 950000.0, "65+" = 350000.0 }
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: TargetsFile = toml::from_str(s).map_err(|e| Error::Config(format!("reweight targets: {e}")))?;
        let margins = f
            .margins
            .into_iter()
            .map(|m| {
                let dimension = match m.dimension.as_str() {
                    "gender" => Dimension::Gender,
                    "labor_status" => Dimension::LaborStatus,
                    "age_band" => Dimension::AgeBand {
                        breaks: m.breaks.ok_or_else(|| Error::Config("age_band margin needs `breaks`".into()))?,
                    },
                    "household_size" => Dimension::HouseholdSize {
                        max: m.max.ok_or_else(|| Error::Config("household_size margin needs `max`".into()))?,
                    },
                    "property_owner" => Dimension::PropertyOwner,
                    other => return Err(Error::Config(format!("unknown margin dimension {other:?}"))),
                };
                Ok(Margin { dimension, targets: m.targets })
            })
            .collect::<Result<Vec<_>>>()?;
        let t = ReweightTargets { margins, tolerance: f.tolerance, max_iterations: f.max_iterations };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.margins.is_empty() {
            return Err(Error::Config("reweight targets need at least one margin".into()));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config("reweight tolerance must be > 0 and max_iterations >= 1".into()));
        }
        for m in &self.margins {
            if let Dimension::AgeBand { breaks } = &m.dimension {
                if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.first() == Some(&0) {
                    return Err(Error::Config("age_band breaks must be strictly ascending and > 0".into()));
                }
            }
            if let Dimension::HouseholdSize { max } = m.dimension {
                if max < 1 {
                    return Err(Error::Config("household_size max must be >= 1".into()));
                }
            }
            if let Some((c, v)) = m.targets.iter().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::Config(format!("margin {}: target for {c} must be > 0, got {v}", m.dimension.name())));
            }
        }
        Ok(())
    }
}

/// Per-margin incidence: for each category, the (household, member count) pairs.
struct Incidence {
    name: String,
    categories: Vec<(String, f64, Vec<(usize, u32)>)>,
}

fn incidence(pop: &Population, margin: &Margin) -> Result<Incidence> {
    let name = margin.dimension.name();
    let mut cells: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
    for hi in 0..pop.households().len() {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        if margin.dimension.is_person_level() {
            for p in pop.members(hi) {
                *counts.entry(margin.dimension.person_category(p)).or_default() += 1;
            }
        } else {
            let size = pop.member_indices(hi).len();
            counts.insert(margin.dimension.household_category(&pop.households()[hi], size), 1);
        }
        for (c, n) in counts {
            cells.entry(c).or_default().push((hi, n));
        }
    }
    if let Some(c) = cells.keys().find(|c| !margin.targets.contains_key(*c)) {
        return Err(Error::Config(format!(
            "margin {name}: category {c} occurs in the population but has no target"
        )));
    }
    let mut categories = Vec::new();
    for (c, &t) in &margin.targets {
        match cells.remove(c) {
            Some(members) => categories.push((c.clone(), t, members)),
            None => return Err(Error::AbsentCategory { margin: name, category: c.clone() }),
        }
    }
    Ok(Incidence { name, categories })
}

fn category_total(w: &[f64], members: &[(usize, u32)]) -> f64 {
    members.iter().map(|&(h, n)| w[h] * n as f64).sum()
}

/// Factor f with sum a_h f^k_h = target, for a_h > 0 and k_h >= 1.
fn solve_factor(w: &[f64], members: &[(usize, u32)], target: f64) -> f64 {
    let current = category_total(w, members);
    let kmax = members.iter().map(|m| m.1).max().unwrap_or(1);
    let kmin = members.iter().map(|m| m.1).min().unwrap_or(1);
    let ratio = target / current;
    if kmax == 1 {
        return ratio;
    }
    // log-factor root lies between ln(ratio)/kmax and ln(ratio)/kmin
    let (a, b) = (ratio.ln() / kmax as f64, ratio.ln() / kmin as f64);
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let g = |x: f64| -> (f64, f64) {
        let mut v = -target;
        let mut d = 0.0;
        for &(h, n) in members {
            let term = w[h] * n as f64 * (n as f64 * x).exp();
            v += term;
            d += term * n as f64;
        }
        (v, d)
    };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = g(x);
        if v.abs() <= 1e-15 * target {
            break;
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - v / d;
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x.exp()
}

fn worst_error(w: &[f64], margins: &[Incidence]) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for m in margins {
        for (c, t, members) in &m.categories {
            let e = (category_total(w, members) - t).abs() / t;
            if e > worst.0 || worst.1.is_empty() {
                worst = (e, format!("{}={c}", m.name));
            }
        }
    }
    worst
}

/// Rake household weights until every margin is met within `targets.tolerance`.
pub fn reweight(pop: &Population, targets: &ReweightTargets) -> Result<Population> {
    targets.validate()?;
    let margins = targets.margins.iter().map(|m| incidence(pop, m)).collect::<Result<Vec<_>>>()?;
    let mut w: Vec<f64> = pop.households().iter().map(|h| h.weight.to_f64()).collect();

    let (err, _) = worst_error(&w, &margins);
    if err <= targets.tolerance {
        return Ok(pop.clone());
    }
    let mut last = (err, String::new());
    for _ in 0..targets.max_iterations {
        for m in &margins {
            for (_, t, members) in &m.categories {
                let f = solve_factor(&w, members, *t);
                for &(h, n) in members {
                    w[h] *= f.powi(n as i32);
                }
            }
        }
        last = worst_error(&w, &margins);
        if last.0 <= targets.tolerance {
            return pop.with_weights(w.into_iter().map(Weight::from_f64).collect());
        }
    }
    Err(Error::NoConvergence { iterations: targets.max_iterations, margin: last.1, worst_error: last.0 })
}
