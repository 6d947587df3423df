//! The pre-crisis fiscal system: direct taxes, social contributions,
//! means-tested benefits and the assembly of household disposable income.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Mkd;
use crate::population::{Household, Individual, LaborStatus};
use crate::scenario::ColumnLabel;

/// Twelve monthly amounts of one calendar year, January first.
pub type Months = [Mkd; 12];

/// Age below which a household member counts as a child for benefit rules.
pub const CHILD_AGE: u32 = 18;
/// Youngest age of compulsory schooling; education allowance is paid from here.
pub const SCHOOL_AGE: u32 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxParams {
    /// Flat personal income tax rate on the wage net of contributions.
    pub pit_rate: f64,
    /// Aggregate employee social contribution rate on the gross wage.
    pub ssc_rate: f64,
    /// Monthly allowance deducted from the PIT base.
    #[serde(default)]
    pub personal_allowance: Mkd,
    pub minimum_wage: Mkd,
    /// Tax GMI and family allowances at `pit_rate`.
    #[serde(default)]
    pub benefits_taxable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmiParams {
    /// Monthly threshold for a single adult.
    pub base: Mkd,
    #[serde(default = "one")]
    pub scale_first_adult: f64,
    pub scale_additional_adult: f64,
    pub scale_child: f64,
    #[serde(default = "yes")]
    pub property_test_enabled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllowanceParams {
    /// Monthly amount per child under 18.
    pub child_allowance_amount: Mkd,
    /// Monthly equivalized means ceiling; strictly below qualifies.
    pub child_allowance_income_ceiling: Mkd,
    /// Monthly amount per school-age child.
    pub education_allowance_amount: Mkd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionParams {
    /// MKD per international dollar. No default: has to come from the run config.
    pub ppp_mkd_per_usd: f64,
    #[serde(default = "default_eur_mkd")]
    pub eur_mkd: f64,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_eur_mkd() -> f64 {
    61.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyParameters {
    pub tax: TaxParams,
    pub gmi: GmiParams,
    pub allowances: AllowanceParams,
    pub conversion: ConversionParams,
}

impl PolicyParameters {
    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        rate("tax.pit_rate", self.tax.pit_rate)?;
        rate("tax.ssc_rate", self.tax.ssc_rate)?;
        let amounts = [
            ("tax.personal_allowance", self.tax.personal_allowance),
            ("gmi.base", self.gmi.base),
            ("allowances.child_allowance_amount", self.allowances.child_allowance_amount),
            ("allowances.child_allowance_income_ceiling", self.allowances.child_allowance_income_ceiling),
            ("allowances.education_allowance_amount", self.allowances.education_allowance_amount),
        ];
        if let Some((name, v)) = amounts.iter().find(|(_, v)| v.is_negative()) {
            return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
        }
        if !self.tax.minimum_wage.is_positive() {
            return Err(Error::Config("tax.minimum_wage must be > 0".into()));
        }
        for (name, v) in [
            ("gmi.scale_first_adult", self.gmi.scale_first_adult),
            ("gmi.scale_additional_adult", self.gmi.scale_additional_adult),
            ("gmi.scale_child", self.gmi.scale_child),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.conversion.ppp_mkd_per_usd > 0.0 && self.conversion.ppp_mkd_per_usd.is_finite()) {
            return Err(Error::Config("conversion.ppp_mkd_per_usd must be set to a positive value".into()));
        }
        if !(self.conversion.eur_mkd > 0.0 && self.conversion.eur_mkd.is_finite()) {
            return Err(Error::Config("conversion.eur_mkd must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Program {
    Gmi,
    ChildAllowance,
    EducationAllowance,
    OneOff,
    RetentionSubsidy,
}

impl Program {
    pub fn as_str(self) -> &'static str {
        match self {
            Program::Gmi => "gmi",
            Program::ChildAllowance => "child_allowance",
            Program::EducationAllowance => "education_allowance",
            Program::OneOff => "one_off",
            Program::RetentionSubsidy => "retention_subsidy",
        }
    }
}

/// One benefit granted in one pipeline column. Amounts are annual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenefitAward {
    pub program: Program,
    /// Household id for GMI, person id otherwise.
    pub recipient: String,
    pub amount: Mkd,
    pub scenario_tag: ColumnLabel,
}

/// Household income accounting for one column. Annual MKD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IncomeDecomposition {
    pub original: Mkd,
    pub benefits: Mkd,
    pub taxes: Mkd,
    pub disposable: Mkd,
    pub taxes_on_benefits: Mkd,
}

impl IncomeDecomposition {
    pub fn identity_holds(&self) -> bool {
        self.disposable == self.original + self.benefits - self.taxes
    }
}

pub fn social_contributions(gross_wage: Mkd, params: &PolicyParameters) -> Mkd {
    gross_wage.scale(params.tax.ssc_rate)
}

pub fn personal_income_tax(gross_wage: Mkd, params: &PolicyParameters) -> Mkd {
    let base = gross_wage - social_contributions(gross_wage, params) - params.tax.personal_allowance;
    base.max(Mkd::ZERO).scale(params.tax.pit_rate)
}

/// Flat PIT on self-employment income; no contributions are simulated for the self-employed.
pub fn self_employment_tax(income: Mkd, params: &PolicyParameters) -> Mkd {
    income.max(Mkd::ZERO).scale(params.tax.pit_rate)
}

/// Monthly wage after contributions and income tax.
pub fn net_wage(gross_wage: Mkd, params: &PolicyParameters) -> Mkd {
    gross_wage - social_contributions(gross_wage, params) - personal_income_tax(gross_wage, params)
}

/// Monthly GMI threshold for a household with the given member ages.
pub fn gmi_threshold<I: IntoIterator<Item = u32>>(ages: I, params: &PolicyParameters) -> Mkd {
    let (mut adults, mut children) = (0u32, 0u32);
    for a in ages {
        if a >= CHILD_AGE {
            adults += 1;
        } else {
            children += 1;
        }
    }
    let g = &params.gmi;
    let factors = if adults == 0 {
        // a household of minors is headed by its first member
        g.scale_first_adult + g.scale_child * children.saturating_sub(1) as f64
    } else {
        g.scale_first_adult + g.scale_additional_adult * (adults - 1) as f64 + g.scale_child * children as f64
    };
    g.base.scale(factors)
}

/// Monthly GMI top-up: the gap between threshold and means, or `None` when
/// the property test excludes the household or means reach the threshold.
pub fn gmi_top_up(
    h: &Household,
    threshold: Mkd,
    household_means: Mkd,
    property_test: bool,
) -> Option<Mkd> {
    if property_test && h.fails_property_test() {
        return None;
    }
    let gap = threshold - household_means;
    gap.is_positive().then_some(gap)
}

/// Annual GMI over a monthly means profile. Each month is assessed on its
/// own income.
pub fn assess_gmi(
    h: &Household,
    members: &[&Individual],
    household_means: &Months,
    params: &PolicyParameters,
    property_test: bool,
    tag: ColumnLabel,
) -> Option<BenefitAward> {
    let threshold = gmi_threshold(members.iter().map(|m| m.age), params);
    let amount: Mkd = household_means
        .iter()
        .filter_map(|&m| gmi_top_up(h, threshold, m, property_test))
        .sum();
    amount.is_positive().then(|| BenefitAward {
        program: Program::Gmi,
        recipient: h.household_id.clone(),
        amount,
        scenario_tag: tag,
    })
}

fn is_school_child(p: &Individual) -> bool {
    p.age >= SCHOOL_AGE
        && p.age < CHILD_AGE
        && matches!(p.labor_status, LaborStatus::Child | LaborStatus::Student)
}

/// Child allowance for every member under 18 and education allowance for
/// every school-age child (6-17, in school), for each month in which the
/// household's equivalized means are strictly below the ceiling.
pub fn assess_family_allowances(
    members: &[&Individual],
    equivalized_means: &[f64; 12],
    params: &PolicyParameters,
    tag: ColumnLabel,
) -> Vec<BenefitAward> {
    let ceiling = params.allowances.child_allowance_income_ceiling.to_f64();
    let months = equivalized_means.iter().filter(|&&m| m < ceiling).count() as i64;
    if months == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for p in members.iter().filter(|p| p.age < CHILD_AGE) {
        let child = params.allowances.child_allowance_amount.times(months);
        if child.is_positive() {
            out.push(BenefitAward {
                program: Program::ChildAllowance,
                recipient: p.person_id.clone(),
                amount: child,
                scenario_tag: tag,
            });
        }
        let edu = params.allowances.education_allowance_amount.times(months);
        if is_school_child(p) && edu.is_positive() {
            out.push(BenefitAward {
                program: Program::EducationAllowance,
                recipient: p.person_id.clone(),
                amount: edu,
                scenario_tag: tag,
            });
        }
    }
    out
}

/// Split `total` across `parts` in proportion to their size, to the cent,
/// with any remainder cents going to the largest remainders first (ties to
/// the earlier part). The allocations always sum to `total`.
pub fn allocate_proportionally(total: Mkd, parts: &[Mkd]) -> Vec<Mkd> {
    let denom: i128 = parts.iter().map(|p| p.cents().max(0) as i128).sum();
    if denom == 0 || total.is_zero() {
        return vec![Mkd::ZERO; parts.len()];
    }
    let t = total.cents() as i128;
    let mut out: Vec<i128> = Vec::with_capacity(parts.len());
    let mut rema: Vec<(i128, usize)> = Vec::with_capacity(parts.len());
    for (i, p) in parts.iter().enumerate() {
        let num = t * p.cents().max(0) as i128;
        out.push(num.div_euclid(denom));
        rema.push((num.rem_euclid(denom), i));
    }
    let mut left = t - out.iter().sum::<i128>();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in rema {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out.into_iter().map(|c| Mkd::from_cents(c as i64)).collect()
}

/// Annual household income streams for one column, before benefit awards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IncomeStreams {
    /// Wages, informal earnings, self-employment and other market income.
    pub market: Mkd,
    /// Earnings that exist only because of the retention measure.
    pub rescued_earnings: Mkd,
    /// Pensions, passed through unchanged in every column.
    pub pensions: Mkd,
    /// PIT and contributions on all earnings.
    pub earnings_taxes: Mkd,
    /// Part of `earnings_taxes` allocated to `rescued_earnings`.
    pub taxes_on_rescued: Mkd,
}

/// Put a household's income ledger together. Retention subsidy awards are
/// budget entries only; the income they carry is in `rescued_earnings`.
pub fn assemble_disposable(
    streams: &IncomeStreams,
    awards: &[BenefitAward],
    params: &PolicyParameters,
) -> IncomeDecomposition {
    let mut cash = Mkd::ZERO;
    let mut benefit_tax = Mkd::ZERO;
    for a in awards.iter().filter(|a| a.program != Program::RetentionSubsidy) {
        cash += a.amount;
        let taxable = params.tax.benefits_taxable && a.program != Program::OneOff;
        if taxable {
            benefit_tax += a.amount.scale(params.tax.pit_rate);
        }
    }
    let original = streams.market;
    let benefits = streams.rescued_earnings + streams.pensions + cash;
    let taxes = streams.earnings_taxes + benefit_tax;
    IncomeDecomposition {
        original,
        benefits,
        taxes,
        disposable: original + benefits - taxes,
        taxes_on_benefits: streams.taxes_on_rescued + benefit_tax,
    }
}

/// Means-tested re-assessment for one household under the ordinary rules
/// (`property_test` on) or with the property condition removed.
pub fn apply_stabilizers(
    h: &Household,
    members: &[&Individual],
    household_means: &Months,
    equivalence_factor_sum: f64,
    params: &PolicyParameters,
    property_test: bool,
    tag: ColumnLabel,
) -> Vec<BenefitAward> {
    let mut awards = Vec::new();
    if let Some(g) = assess_gmi(h, members, household_means, params, property_test, tag) {
        awards.push(g);
    }
    let mut eq = [0.0; 12];
    for (e, m) in eq.iter_mut().zip(household_means) {
        *e = m.to_f64() / equivalence_factor_sum;
    }
    awards.extend(assess_family_allowances(members, &eq, params, tag));
    awards
}


#[cfg(test)]
mod tests {
    use super::fixtures::params;
    use super::*;
    use crate::population::test_support::{household, person};
    use proptest::prelude::*;

    const TAG: ColumnLabel = ColumnLabel::Pre;

    #[test]
    fn income_tax_examples() {
        let p = params();
        assert_eq!(personal_income_tax(Mkd::ZERO, &p), Mkd::ZERO);
        assert_eq!(personal_income_tax(Mkd::from_whole(10_000), &p), Mkd::from_whole(720));
        let mut zero = params();
        zero.tax.pit_rate = 0.0;
        assert_eq!(personal_income_tax(Mkd::from_whole(55_555), &zero), Mkd::ZERO);
        let mut allowance = params();
        allowance.tax.personal_allowance = Mkd::from_whole(8_000);
        // base 7,200 - 8,000 < 0
        assert_eq!(personal_income_tax(Mkd::from_whole(10_000), &allowance), Mkd::ZERO);
    }

    #[test]
    fn social_contribution_examples() {
        let p = params();
        assert_eq!(social_contributions(Mkd::ZERO, &p), Mkd::ZERO);
        assert_eq!(social_contributions(Mkd::from_whole(14_500), &p), Mkd::from_whole(4_060));
        let mut zero = params();
        zero.tax.ssc_rate = 0.0;
        assert_eq!(social_contributions(Mkd::from_whole(14_500), &zero), Mkd::ZERO);
    }

    fn flat_means(m: i64) -> Months {
        [Mkd::from_whole(m); 12]
    }

    #[test]
    fn gmi_examples() {
        let p = params();
        let h = household("H1", 1.0);
        let a = person("P1", "H1", 40, LaborStatus::Unemployed);
        assert!(assess_gmi(&h, &[&a], &flat_means(5_000), &p, true, TAG).is_none());
        let award = assess_gmi(&h, &[&a], &flat_means(0), &p, true, TAG).unwrap();
        assert_eq!(award.amount, Mkd::from_whole(4_000 * 12));
        assert_eq!(award.recipient, "H1");

        let mut owner = household("H2", 1.0);
        owner.owns_extra_property = true;
        assert!(assess_gmi(&owner, &[&a], &flat_means(0), &p, true, TAG).is_none());
        assert!(assess_gmi(&owner, &[&a], &flat_means(0), &p, false, TAG).is_some());
    }

    #[test]
    fn gmi_threshold_scale() {
        let p = params();
        // 2 adults + 2 children: 4,000 * (1 + 0.5 + 0.6) = 8,400
        assert_eq!(gmi_threshold([40, 38, 10, 4], &p), Mkd::from_whole(8_400));
    }

    #[test]
    fn family_allowance_examples() {
        let p = params();
        let adult = person("P1", "H1", 40, LaborStatus::Inactive);
        assert!(assess_family_allowances(&[&adult], &[0.0; 12], &p, TAG).is_empty());

        let c1 = person("P2", "H1", 3, LaborStatus::Child);
        let c2 = person("P3", "H1", 4, LaborStatus::Child);
        let awards = assess_family_allowances(&[&adult, &c1, &c2], &[5_000.0; 12], &p, TAG);
        assert_eq!(awards.len(), 2);
        assert!(awards.iter().all(|a| a.amount == Mkd::from_whole(12_000) && a.program == Program::ChildAllowance));

        // exactly at the ceiling does not qualify
        assert!(assess_family_allowances(&[&adult, &c1], &[6_000.0; 12], &p, TAG).is_empty());

        let pupil = person("P4", "H1", 16, LaborStatus::Student);
        let awards = assess_family_allowances(&[&adult, &pupil], &[1.0; 12], &p, TAG);
        let programs: Vec<_> = awards.iter().map(|a| a.program).collect();
        assert_eq!(programs, vec![Program::ChildAllowance, Program::EducationAllowance]);
        assert_eq!(awards[1].amount, Mkd::from_whole(6_000));
    }

    #[test]
    fn disposable_identity_examples() {
        let p = params();
        let s = IncomeStreams {
            market: Mkd::from_whole(100),
            earnings_taxes: Mkd::from_whole(20),
            ..Default::default()
        };
        let d = assemble_disposable(&s, &[], &p);
        assert_eq!(d.disposable, Mkd::from_whole(80));
        assert!(d.identity_holds());
        let z = assemble_disposable(&IncomeStreams::default(), &[], &p);
        assert_eq!(z, IncomeDecomposition::default());
    }

    #[test]
    fn hand_ledger_wage_plus_gmi() {
        // one earner at 3,000/month gross in a couple with one child, no property
        let p = params();
        let h = household("H1", 1.0);
        let mut earner = person("P1", "H1", 35, LaborStatus::FormalEmployee);
        earner.gross_wage = Mkd::from_whole(3_000);
        let spouse = person("P2", "H1", 33, LaborStatus::Inactive);
        let kid = person("P3", "H1", 2, LaborStatus::Child);
        let members = [&earner, &spouse, &kid];
        // threshold 4,000 * 1.8 = 7,200; top-up 4,200/month
        let awards = apply_stabilizers(&h, &members, &flat_means(3_000), 1.8, &p, true, TAG);
        let gmi = awards.iter().find(|a| a.program == Program::Gmi).unwrap();
        assert_eq!(gmi.amount, Mkd::from_whole(50_400));
        // equivalized means 3,000 / 1.8 < 6,000 ceiling: child allowance 12,000
        let child = awards.iter().find(|a| a.program == Program::ChildAllowance).unwrap();
        assert_eq!(child.amount, Mkd::from_whole(12_000));
        // ssc 840, pit 0.1 * 2,160 = 216 -> 1,056/month
        let monthly_tax = social_contributions(earner.gross_wage, &p) + personal_income_tax(earner.gross_wage, &p);
        assert_eq!(monthly_tax, Mkd::from_whole(1_056));
        let streams = IncomeStreams {
            market: Mkd::from_whole(36_000),
            earnings_taxes: monthly_tax.times(12),
            ..Default::default()
        };
        let d = assemble_disposable(&streams, &awards, &p);
        assert_eq!(d.original, Mkd::from_whole(36_000));
        assert_eq!(d.benefits, Mkd::from_whole(62_400));
        assert_eq!(d.taxes, Mkd::from_whole(12_672));
        assert_eq!(d.disposable, Mkd::from_whole(85_728));
        assert_eq!(d.taxes_on_benefits, Mkd::ZERO);
    }

    #[test]
    fn taxable_benefits_are_allocated_to_benefit_taxes() {
        let mut p = params();
        p.tax.benefits_taxable = true;
        let award = BenefitAward {
            program: Program::Gmi,
            recipient: "H1".into(),
            amount: Mkd::from_whole(1_000),
            scenario_tag: TAG,
        };
        let d = assemble_disposable(&IncomeStreams::default(), &[award], &p);
        assert_eq!(d.taxes_on_benefits, Mkd::from_whole(100));
        assert!(d.taxes_on_benefits <= d.taxes);
        assert!(d.identity_holds());
    }

    #[test]
    fn proportional_allocation_sums_exactly() {
        let parts = [Mkd::from_cents(1), Mkd::from_cents(1), Mkd::from_cents(1)];
        let out = allocate_proportionally(Mkd::from_cents(100), &parts);
        assert_eq!(out.iter().sum::<Mkd>(), Mkd::from_cents(100));
        assert_eq!(out[0], Mkd::from_cents(34));
        assert_eq!(allocate_proportionally(Mkd::from_whole(5), &[Mkd::ZERO]), vec![Mkd::ZERO]);
    }

    #[test]
    fn stabilizer_limit_all_incomes_zero() {
        let p = params();
        let h = household("H1", 1.0);
        let a = person("P1", "H1", 50, LaborStatus::Unemployed);
        let awards = apply_stabilizers(&h, &[&a], &flat_means(0), 1.0, &p, true, TAG);
        assert_eq!(awards[0].amount, gmi_threshold([50], &p).times(12));
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params();
        p.tax.pit_rate = 1.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.conversion.ppp_mkd_per_usd = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.tax.minimum_wage = Mkd::ZERO;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }

    proptest! {
        #[test]
        fn taxes_monotone_in_wage(a in 0i64..50_000_000, b in 0i64..50_000_000) {
            let p = params();
            let (lo, hi) = (Mkd::from_cents(a.min(b)), Mkd::from_cents(a.max(b)));
            prop_assert!(personal_income_tax(lo, &p) <= personal_income_tax(hi, &p));
            prop_assert!(social_contributions(lo, &p) <= social_contributions(hi, &p));
        }

        #[test]
        fn gmi_monotone_and_relaxation_only_widens(
            lo in 0i64..2_000_000, extra in 0i64..2_000_000,
            owner in any::<bool>(), parcel in any::<bool>(), car in any::<bool>(),
        ) {
            let p = params();
            let mut h = household("H1", 1.0);
            h.owns_extra_property = owner;
            h.parcel_over_500m2 = parcel;
            h.car_newer_than_5y = car;
            let a = person("P1", "H1", 40, LaborStatus::Unemployed);
            let amount = |m: i64, test: bool| {
                assess_gmi(&h, &[&a], &[Mkd::from_cents(m); 12], &p, test, TAG).map(|x| x.amount).unwrap_or(Mkd::ZERO)
            };
            prop_assert!(amount(lo, true) >= amount(lo + extra, true));
            prop_assert!(amount(lo, false) >= amount(lo, true));
        }

        #[test]
        fn allocation_is_exact(total in 0i64..10_000_000, parts in proptest::collection::vec(0i64..1_000_000, 1..6)) {
            let parts: Vec<Mkd> = parts.into_iter().map(Mkd::from_cents).collect();
            let out = allocate_proportionally(Mkd::from_cents(total), &parts);
            if parts.iter().any(|p| p.is_positive()) {
                prop_assert_eq!(out.iter().sum::<Mkd>(), Mkd::from_cents(total));
            }
        }
    }
}
