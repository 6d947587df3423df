//! Weighted poverty, inequality and income-stabilization statistics.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::money::{Weight, WeightedMkd};
use crate::policy::IncomeDecomposition;
use crate::population::{Gender, Individual, Population};

pub const RELATIVE_LINE_SHARE: f64 = 0.6;
pub const YOUTH_AGES: (u32, u32) = (15, 29);

/// One person-level observation: a value and its expansion weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obs {
    pub value: f64,
    pub weight: Weight,
}

fn sorted(obs: &[Obs]) -> Vec<Obs> {
    let mut v = obs.to_vec();
    v.sort_by(|a, b| a.value.total_cmp(&b.value));
    v
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half of the total.
pub fn weighted_median(obs: &[Obs]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::numerical("metrics", "weighted_median", "empty input"));
    }
    let v = sorted(obs);
    let total: i128 = v.iter().map(|o| o.weight.raw() as i128).sum();
    let mut cum = 0i128;
    for o in &v {
        cum += o.weight.raw() as i128;
        if 2 * cum >= total {
            return Ok(o.value);
        }
    }
    Ok(v[v.len() - 1].value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineKind {
    Relative60Median,
    AbsoluteUsdPpp { usd_per_day: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PovertyLine {
    pub kind: LineKind,
    pub resolved_mkd_per_year: f64,
}

impl PovertyLine {
    pub fn relative(median: f64) -> Self {
        PovertyLine { kind: LineKind::Relative60Median, resolved_mkd_per_year: RELATIVE_LINE_SHARE * median }
    }

    pub fn absolute(usd_per_day: f64, ppp_mkd_per_usd: f64) -> Self {
        PovertyLine {
            kind: LineKind::AbsoluteUsdPpp { usd_per_day },
            resolved_mkd_per_year: usd_per_day * 365.0 * ppp_mkd_per_usd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Headcount {
    pub rate: f64,
    pub persons: f64,
}

/// Weighted share of persons strictly below the line.
pub fn headcount(obs: &[Obs], line: &PovertyLine) -> Headcount {
    let mut total = 0i128;
    let mut poor = 0i128;
    for o in obs {
        total += o.weight.raw() as i128;
        if o.value < line.resolved_mkd_per_year {
            poor += o.weight.raw() as i128;
        }
    }
    if total == 0 {
        return Headcount { rate: 0.0, persons: 0.0 };
    }
    let rate = poor as f64 / total as f64;
    Headcount { rate, persons: persons_at(rate, total) }
}

fn persons_at(rate: f64, total_raw: i128) -> f64 {
    rate * (total_raw as f64 / crate::money::WEIGHT_SCALE as f64)
}

/// Weighted Gini via the sorted cumulative-weight formula.
pub fn gini(obs: &[Obs]) -> Result<f64> {
    let v = sorted(obs);
    let w_total: f64 = v.iter().map(|o| o.weight.to_f64()).sum();
    let s: f64 = v.iter().map(|o| o.weight.to_f64() * o.value).sum();
    if v.is_empty() || !(s > 0.0) {
        return Err(Error::numerical("metrics", "gini", "mean income is not positive"));
    }
    let mut acc = 0.0;
    let mut c_prev = 0.0;
    for o in &v {
        let w = o.weight.to_f64();
        let c = c_prev + w;
        acc += w * o.value * (c_prev + c - w_total);
        c_prev = c;
    }
    Ok(acc / (w_total * s))
}

/// Decile (1..=10) of every household on its frozen baseline income. Ties
/// are ordered by household id; `weights` are person weights.
pub fn decile_assignment(values: &[f64], weights: &[Weight], ids: &[&str]) -> Vec<u8> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then_with(|| ids[a].cmp(ids[b])));
    let total: i128 = weights.iter().map(|w| w.raw() as i128).sum();
    let mut out = vec![0u8; values.len()];
    let mut before = 0i128;
    for i in order {
        let d = if total == 0 { 0 } else { (10 * before / total).min(9) };
        out[i] = d as u8 + 1;
        before += weights[i].raw() as i128;
    }
    out
}

/// Post-shock disposable income as a share of pre-shock disposable income.
pub fn nrr(pre: &IncomeDecomposition, post: &IncomeDecomposition) -> Option<f64> {
    if !pre.disposable.is_positive() {
        return None;
    }
    Some(post.disposable.to_f64() / pre.disposable.to_f64())
}

/// Share of the no-intervention disposable-income loss recovered by the net
/// benefit change from `no` to `with`.
pub fn compensation_rate(
    pre: &IncomeDecomposition,
    no: &IncomeDecomposition,
    with: &IncomeDecomposition,
) -> Option<f64> {
    let loss = pre.disposable - no.disposable;
    if !loss.is_positive() {
        return None;
    }
    Some(net_benefit_change(no, with).to_f64() / loss.to_f64())
}

fn net_benefit_change(from: &IncomeDecomposition, to: &IncomeDecomposition) -> crate::money::Mkd {
    (to.benefits - from.benefits) - (to.taxes_on_benefits - from.taxes_on_benefits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrComponent {
    Stabilizers,
    Retention,
    GmiRelax,
    OneOff,
}

impl CrComponent {
    pub const ALL: [CrComponent; 4] =
        [CrComponent::Stabilizers, CrComponent::Retention, CrComponent::GmiRelax, CrComponent::OneOff];

    pub fn as_str(self) -> &'static str {
        match self {
            CrComponent::Stabilizers => "stabilizers",
            CrComponent::Retention => "retention",
            CrComponent::GmiRelax => "gmi_relax",
            CrComponent::OneOff => "one_off",
        }
    }
}

/// One household's ledger along the layering sequence: no intervention,
/// then stabilizers, then retention, GMI relaxation and one-off support
/// added one at a time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HouseholdPath {
    pub weight: Weight,
    pub pre: IncomeDecomposition,
    pub steps: [IncomeDecomposition; 5],
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationRecord {
    pub nrr: Option<f64>,
    pub cr_total: Option<f64>,
    pub cr_components: BTreeMap<CrComponent, f64>,
    /// Households without a positive pre-shock disposable income.
    pub nrr_excluded: usize,
    /// Households that lost nothing in the no-intervention column.
    pub cr_excluded: usize,
}

/// Ratio-of-weighted-sums NRR (final step against baseline) and CR
/// decomposition over a set of households.
pub fn stabilization(paths: &[&HouseholdPath]) -> StabilizationRecord {
    let (mut nrr_num, mut nrr_den) = (WeightedMkd::ZERO, WeightedMkd::ZERO);
    let mut loss = WeightedMkd::ZERO;
    let mut parts = [WeightedMkd::ZERO; 4];
    let (mut nrr_excluded, mut cr_excluded) = (0, 0);
    for p in paths {
        if p.pre.disposable.is_positive() {
            nrr_num += p.steps[4].disposable.weighted(p.weight);
            nrr_den += p.pre.disposable.weighted(p.weight);
        } else {
            nrr_excluded += 1;
        }
        let l = p.pre.disposable - p.steps[0].disposable;
        if !l.is_positive() {
            cr_excluded += 1;
            continue;
        }
        loss += l.weighted(p.weight);
        for (k, part) in parts.iter_mut().enumerate() {
            *part += net_benefit_change(&p.steps[k], &p.steps[k + 1]).weighted(p.weight);
        }
    }
    let ratio = |a: WeightedMkd, b: WeightedMkd| (b.raw() != 0).then(|| a.raw() as f64 / b.raw() as f64);
    let cr_total = ratio(parts.iter().copied().sum(), loss);
    let cr_components = match cr_total {
        Some(_) => CrComponent::ALL
            .iter()
            .zip(parts)
            .map(|(&c, v)| (c, ratio(v, loss).unwrap_or(0.0)))
            .collect(),
        None => BTreeMap::new(),
    };
    StabilizationRecord { nrr: ratio(nrr_num, nrr_den), cr_total, cr_components, nrr_excluded, cr_excluded }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecileRow {
    /// 1..=10, or `None` for the whole population.
    pub decile: Option<u8>,
    pub mean_pre_disposable: f64,
    /// NRR of the no-intervention column, no stabilizers.
    pub nrr_shock_raw: Option<f64>,
    pub record: StabilizationRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecileTable {
    pub rows: Vec<DecileRow>,
    pub all: DecileRow,
}

/// Per-decile stabilization profile. `equivalized_pre` fixes the deciles and
/// `person_weights` is household weight × household size.
pub fn decile_table(
    paths: &[HouseholdPath],
    equivalized_pre: &[f64],
    person_weights: &[Weight],
    ids: &[&str],
) -> DecileTable {
    let deciles = decile_assignment(equivalized_pre, person_weights, ids);
    let row = |decile: Option<u8>| {
        let idx: Vec<usize> = (0..paths.len()).filter(|&i| decile.is_none_or(|d| deciles[i] == d)).collect();
        let sel: Vec<&HouseholdPath> = idx.iter().map(|&i| &paths[i]).collect();
        let (mut s, mut w) = (0.0, 0.0);
        for &i in &idx {
            s += equivalized_pre[i] * person_weights[i].to_f64();
            w += person_weights[i].to_f64();
        }
        let raw_paths: Vec<HouseholdPath> =
            sel.iter().map(|p| HouseholdPath { steps: [p.steps[0]; 5], ..**p }).collect();
        let raw_refs: Vec<&HouseholdPath> = raw_paths.iter().collect();
        DecileRow {
            decile,
            mean_pre_disposable: if w > 0.0 { s / w } else { 0.0 },
            nrr_shock_raw: stabilization(&raw_refs).nrr,
            record: stabilization(&sel),
        }
    };
    DecileTable { rows: (1..=10).map(|d| row(Some(d))).collect(), all: row(None) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PovertyLines {
    pub relative: PovertyLine,
    pub absolute_5_5: PovertyLine,
    pub absolute_1_9: PovertyLine,
}

impl PovertyLines {
    /// Relative line from the median of `obs`, absolute lines from PPP.
    pub fn resolve(obs: &[Obs], ppp_mkd_per_usd: f64) -> Result<Self> {
        Ok(PovertyLines {
            relative: PovertyLine::relative(weighted_median(obs)?),
            absolute_5_5: PovertyLine::absolute(5.5, ppp_mkd_per_usd),
            absolute_1_9: PovertyLine::absolute(1.9, ppp_mkd_per_usd),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub group: String,
    pub relative: Headcount,
    pub absolute_5_5: Headcount,
    pub absolute_1_9: Headcount,
    pub gini: f64,
    pub lines: PovertyLines,
    pub weighted_persons: f64,
}

pub fn metrics_report(group: &str, obs: &[Obs], lines: PovertyLines) -> Result<MetricsReport> {
    if obs.is_empty() {
        return Err(Error::EmptyGroup { what: format!("group {group}") });
    }
    Ok(MetricsReport {
        group: group.to_string(),
        relative: headcount(obs, &lines.relative),
        absolute_5_5: headcount(obs, &lines.absolute_5_5),
        absolute_1_9: headcount(obs, &lines.absolute_1_9),
        gini: gini(obs)?,
        lines,
        weighted_persons: obs.iter().map(|o| o.weight).sum::<Weight>().to_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupFilter {
    Everyone,
    Women,
    Youth,
}

impl GroupFilter {
    pub fn label(self) -> &'static str {
        match self {
            GroupFilter::Everyone => "all",
            GroupFilter::Women => "women",
            GroupFilter::Youth => "youth",
        }
    }

    pub fn admits(self, p: &Individual) -> bool {
        match self {
            GroupFilter::Everyone => true,
            GroupFilter::Women => p.gender == Gender::Female,
            GroupFilter::Youth => (YOUTH_AGES.0..=YOUTH_AGES.1).contains(&p.age),
        }
    }
}

/// Person-level observations: every member passing `filter` carries the
/// household's equivalized income and the household weight.
pub fn person_obs(pop: &Population, household_values: &[f64], filter: GroupFilter) -> Vec<Obs> {
    let mut out = Vec::with_capacity(pop.individuals().len());
    for (pi, p) in pop.individuals().iter().enumerate() {
        if filter.admits(p) {
            let hi = pop.household_of(pi);
            out.push(Obs { value: household_values[hi], weight: pop.households()[hi].weight });
        }
    }
    out
}

/// Metrics over persons passing `filter`, measured against the
/// population-wide lines.
pub fn group_metrics(
    pop: &Population,
    household_values: &[f64],
    filter: GroupFilter,
    lines: PovertyLines,
) -> Result<MetricsReport> {
    let obs = person_obs(pop, household_values, filter);
    if obs.is_empty() {
        return Err(Error::EmptyGroup { what: format!("group {}", filter.label()) });
    }
    metrics_report(filter.label(), &obs, lines)
}
