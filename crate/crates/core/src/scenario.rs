//! Composition of the column matrix, duration bounds, group tables and the
//! sector validation fit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measures::{
    rescued_income_estimate, retention_budget, retention_income, MeasureConfig, RetentionLedger, SectorGroup,
    SectorGroups,
};
use crate::metrics::{
    decile_table, metrics_report, person_obs, DecileTable, GroupFilter, HouseholdPath, MetricsReport, PovertyLines,
};
use crate::money::{Mkd, Weight, WeightedMkd};
use crate::policy::{
    allocate_proportionally, apply_stabilizers, assemble_disposable, assess_gmi, personal_income_tax,
    self_employment_tax, social_contributions, BenefitAward, IncomeDecomposition, IncomeStreams, Months,
    PolicyParameters, Program,
};
use crate::population::{EquivalenceScale, Individual, LaborStatus, Population, SectorCode};
use crate::shock::{
    main_earnings, select_job_losses, shock_person, JobLossDraw, SectorImpactTable, Severity, ShockScenario,
};
use crate::measures::one_off_award;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnLabel {
    Pre,
    ShockRaw,
    ShockStab,
    StabRetention,
    StabGmiRelax,
    StabOneOff,
    Total,
    /// Stabilizers with retention and GMI relaxation; an intermediate step
    /// of the compensation-rate decomposition, not a reported column.
    StabRetentionGmiRelax,
}

impl ColumnLabel {
    pub const TABLE2: [ColumnLabel; 7] = [
        ColumnLabel::Pre,
        ColumnLabel::ShockRaw,
        ColumnLabel::ShockStab,
        ColumnLabel::StabRetention,
        ColumnLabel::StabGmiRelax,
        ColumnLabel::StabOneOff,
        ColumnLabel::Total,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ColumnLabel::Pre => "pre",
            ColumnLabel::ShockRaw => "shock_raw",
            ColumnLabel::ShockStab => "shock_stab",
            ColumnLabel::StabRetention => "stab_retention",
            ColumnLabel::StabGmiRelax => "stab_gmi_relax",
            ColumnLabel::StabOneOff => "stab_one_off",
            ColumnLabel::Total => "total",
            ColumnLabel::StabRetentionGmiRelax => "stab_retention_gmi_relax",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MeasureSet {
    pub retention: bool,
    pub gmi_relax: bool,
    pub one_off: bool,
}

impl MeasureSet {
    pub const NONE: MeasureSet = MeasureSet { retention: false, gmi_relax: false, one_off: false };
    pub const ALL: MeasureSet = MeasureSet { retention: true, gmi_relax: true, one_off: true };

    fn enabled_by(self, c: &MeasureConfig) -> MeasureSet {
        MeasureSet {
            retention: self.retention && c.retention_enabled,
            gmi_relax: self.gmi_relax && c.gmi_relax_enabled,
            one_off: self.one_off && c.one_off_enabled,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnSpec {
    pub label: ColumnLabel,
    pub shock_on: bool,
    pub stabilizers_on: bool,
    pub measures: MeasureSet,
}

impl ColumnSpec {
    pub fn of(label: ColumnLabel) -> Self {
        let m = |retention, gmi_relax, one_off| MeasureSet { retention, gmi_relax, one_off };
        let (shock_on, stabilizers_on, measures) = match label {
            ColumnLabel::Pre => (false, false, MeasureSet::NONE),
            ColumnLabel::ShockRaw => (true, false, MeasureSet::NONE),
            ColumnLabel::ShockStab => (true, true, MeasureSet::NONE),
            ColumnLabel::StabRetention => (true, true, m(true, false, false)),
            ColumnLabel::StabGmiRelax => (true, true, m(false, true, false)),
            ColumnLabel::StabOneOff => (true, true, m(false, false, true)),
            ColumnLabel::Total => (true, true, MeasureSet::ALL),
            ColumnLabel::StabRetentionGmiRelax => (true, true, m(true, true, false)),
        };
        ColumnSpec { label, shock_on, stabilizers_on, measures }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ShockScenario,
    pub policy: PolicyParameters,
    pub measures: MeasureConfig,
    pub bounds_durations: Vec<u32>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.policy.validate()?;
        self.measures.validate(&self.policy)?;
        if self.bounds_durations.is_empty() {
            return Err(Error::Config("bounds.durations must not be empty".into()));
        }
        if self.bounds_durations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("bounds.durations must be strictly ascending".into()));
        }
        if let Some(d) = self.bounds_durations.iter().find(|&&d| d > 12) {
            return Err(Error::Config(format!("bounds.durations entry {d} is outside 0..=12")));
        }
        Ok(())
    }

    pub fn with_crisis_months(&self, d: u32) -> RunConfig {
        let mut c = self.clone();
        c.scenario.crisis_months = d;
        c
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Inputs<'a> {
    pub pop: &'a Population,
    pub table: &'a SectorImpactTable,
    pub groups: &'a SectorGroups,
}

/// Everything shared by the columns of one run: sector lookups, the
/// job-loss draw and the baseline awards that the no-stabilizer column keeps.
pub struct RunContext<'a> {
    pub inputs: Inputs<'a>,
    pub config: &'a RunConfig,
    pub severities: Vec<Option<Severity>>,
    pub draw: JobLossDraw,
    equivalence: Vec<f64>,
    baseline_awards: Vec<Vec<BenefitAward>>,
}

impl<'a> RunContext<'a> {
    pub fn new(inputs: Inputs<'a>, config: &'a RunConfig) -> Result<Self> {
        config.validate()?;
        inputs.table.check_covers(inputs.pop)?;
        let draw = select_job_losses(inputs.pop, inputs.table, &config.scenario)?;
        Self::with_draw(inputs, config, draw)
    }

    /// Context reusing a job-loss draw made earlier, so several runs share it.
    pub fn with_draw(inputs: Inputs<'a>, config: &'a RunConfig, draw: JobLossDraw) -> Result<Self> {
        let pop = inputs.pop;
        let severities = pop
            .individuals()
            .iter()
            .map(|i| if i.labor_status.is_worker() { inputs.table.severity_of(i) } else { Ok(None) })
            .collect::<Result<Vec<_>>>()?;
        let equivalence = (0..pop.households().len())
            .map(|hi| EquivalenceScale::ModifiedOecd.factor_sum(pop.members(hi).map(|m| m.age)))
            .collect();
        let mut ctx =
            RunContext { inputs, config, severities, draw, equivalence, baseline_awards: Vec::new() };
        let pre = ctx.run_column(ColumnSpec::of(ColumnLabel::Pre))?;
        ctx.baseline_awards = pre.awards;
        Ok(ctx)
    }

    pub fn equivalence_factor(&self, hi: usize) -> f64 {
        self.equivalence[hi]
    }

    /// Monthly main-activity earnings of one person as (ordinary, rescued by
    /// retention) plus whether the person is out of work.
    fn person_months(&self, pi: usize, ind: &Individual, spec: &ColumnSpec, m: MeasureSet) -> Result<(Months, Months, bool)> {
        let c = self.config;
        let m0 = main_earnings(ind);
        if !spec.shock_on {
            return Ok(([m0; 12], [Mkd::ZERO; 12], false));
        }
        let sev = self.severities[pi];
        let lost = self.draw.lost[pi];
        let no = shock_person(ind, sev, &c.scenario, &c.policy, lost)?;
        if m.retention {
            if let Some(ret) = retention_income(ind, sev, &c.measures, &c.policy) {
                let mut own = [Mkd::ZERO; 12];
                let mut rescued = [Mkd::ZERO; 12];
                for k in 0..12 {
                    let r = ret.month(k);
                    own[k] = r.min(no.month(k));
                    rescued[k] = r - own[k];
                }
                return Ok((own, rescued, false));
            }
        }
        Ok((no.months(), [Mkd::ZERO; 12], no.job_lost))
    }

    pub fn run_column(&self, spec: ColumnSpec) -> Result<ColumnResult> {
        let pop = self.inputs.pop;
        let params = &self.config.policy;
        let active = spec.measures.enabled_by(&self.config.measures);
        let n_h = pop.households().len();
        let mut out = ColumnResult {
            label: spec.label,
            incomes: Vec::with_capacity(n_h),
            awards: Vec::with_capacity(n_h),
            equivalized_disposable: Vec::with_capacity(n_h),
            main_annual: vec![Mkd::ZERO; pop.individuals().len()],
            rescued: vec![Mkd::ZERO; pop.individuals().len()],
            job_lost: vec![false; pop.individuals().len()],
            gmi_relax_increment: vec![Mkd::ZERO; n_h],
            report: None,
        };
        for (hi, h) in pop.households().iter().enumerate() {
            let members: Vec<&Individual> = pop.members(hi).collect();
            let mut means = [Mkd::ZERO; 12];
            let mut streams = IncomeStreams::default();
            let mut lost_flags = Vec::with_capacity(members.len());
            for (&pi, ind) in pop.member_indices(hi).iter().zip(&members) {
                let (own, rescued, lost) = self.person_months(pi, ind, &spec, active)?;
                lost_flags.push(lost);
                out.job_lost[pi] = lost;
                let status = ind.labor_status;
                for k in 0..12 {
                    let (mut fw, mut fw_r, mut se, mut se_r, mut untaxed) =
                        (Mkd::ZERO, Mkd::ZERO, ind.self_employment_income, Mkd::ZERO, ind.other_income);
                    match status {
                        LaborStatus::FormalEmployee => {
                            fw = own[k];
                            fw_r = rescued[k];
                        }
                        LaborStatus::SelfEmployed => {
                            se = own[k];
                            se_r = rescued[k];
                            untaxed += ind.gross_wage;
                        }
                        LaborStatus::InformalEmployee => untaxed += own[k],
                        _ => untaxed += ind.gross_wage,
                    }
                    let wage = fw + fw_r;
                    let wage_tax = social_contributions(wage, params) + personal_income_tax(wage, params);
                    let se_tax = self_employment_tax(se + se_r, params);
                    let mut rescued_tax = Mkd::ZERO;
                    if fw_r.is_positive() {
                        rescued_tax += allocate_proportionally(wage_tax, &[fw, fw_r])[1];
                    }
                    if se_r.is_positive() {
                        rescued_tax += allocate_proportionally(se_tax, &[se, se_r])[1];
                    }
                    streams.market += fw + se + untaxed;
                    streams.rescued_earnings += fw_r + se_r;
                    streams.pensions += ind.pension_income;
                    streams.earnings_taxes += wage_tax + se_tax;
                    streams.taxes_on_rescued += rescued_tax;
                    means[k] += wage + se + se_r + untaxed + ind.pension_income;
                    out.main_annual[pi] += own[k] + rescued[k];
                    out.rescued[pi] += rescued[k];
                }
            }

            let eq = self.equivalence[hi];
            let property_test = params.gmi.property_test_enabled && !active.gmi_relax;
            let mut awards = if !spec.shock_on || spec.stabilizers_on {
                apply_stabilizers(h, &members, &means, eq, params, property_test, spec.label)
            } else {
                self.baseline_awards[hi].clone()
            };
            if active.gmi_relax {
                let relaxed = awards.iter().find(|a| a.program == Program::Gmi).map_or(Mkd::ZERO, |a| a.amount);
                let strict = assess_gmi(h, &members, &means, params, params.gmi.property_test_enabled, spec.label)
                    .map_or(Mkd::ZERO, |a| a.amount);
                out.gmi_relax_increment[hi] = relaxed - strict;
            }
            if active.one_off {
                for (&pi, (ind, &lost)) in pop.member_indices(hi).iter().zip(members.iter().zip(&lost_flags)) {
                    let monthly_wage = if ind.labor_status.is_employee() {
                        Mkd::from_cents(out.main_annual[pi].cents() / 12)
                    } else {
                        Mkd::ZERO
                    };
                    awards.extend(one_off_award(ind, monthly_wage, lost, &self.config.measures, params, spec.label));
                }
            }
            let d = assemble_disposable(&streams, &awards, params);
            out.equivalized_disposable.push(d.disposable.to_f64() / eq);
            out.incomes.push(d);
            out.awards.push(awards);
        }
        audit_identity(&out)?;
        let obs = person_obs(pop, &out.equivalized_disposable, GroupFilter::Everyone);
        let lines = PovertyLines::resolve(&obs, params.conversion.ppp_mkd_per_usd)?;
        out.report = Some(metrics_report("all", &obs, lines)?);
        Ok(out)
    }
}

/// Household ledgers and metrics of one column. Vectors indexed by
/// household are in household order; those indexed by person in person order.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnResult {
    pub label: ColumnLabel,
    pub incomes: Vec<IncomeDecomposition>,
    pub awards: Vec<Vec<BenefitAward>>,
    pub equivalized_disposable: Vec<f64>,
    /// Annual main-activity earnings, including income rescued by retention.
    pub main_annual: Vec<Mkd>,
    pub rescued: Vec<Mkd>,
    pub job_lost: Vec<bool>,
    /// Extra GMI over the ordinary property test, per household.
    pub gmi_relax_increment: Vec<Mkd>,
    report: Option<MetricsReport>,
}

impl ColumnResult {
    pub fn report(&self) -> &MetricsReport {
        self.report.as_ref().expect("report is filled by run_column")
    }

    pub fn lines(&self) -> PovertyLines {
        self.report().lines
    }
}

/// Disposable-income identity over every household of a column.
pub fn audit_identity(col: &ColumnResult) -> Result<()> {
    for (i, d) in col.incomes.iter().enumerate() {
        if !d.identity_holds() || d.taxes_on_benefits > d.taxes {
            return Err(Error::numerical(
                "scenario_runner",
                "audit_identity",
                format!("column {} household #{i}: ledger {d:?} breaks the disposable-income identity", col.label.as_str()),
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetLine {
    pub program: &'static str,
    pub group: String,
    pub amount: WeightedMkd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    /// Retention by group, GMI relaxation and one-off support.
    pub lines: Vec<BudgetLine>,
    pub total: WeightedMkd,
    pub retention: RetentionLedger,
    /// Three-fifths of rescued income per group.
    pub retention_estimate: BTreeMap<SectorGroup, f64>,
    /// (household weight, extra GMI) for every household with an increment.
    pub gmi_relax: Vec<(Weight, Mkd)>,
    pub one_off: Vec<(Weight, BenefitAward)>,
}

pub const PROGRAM_RETENTION: &str = "employment_retention";
pub const PROGRAM_GMI_RELAX: &str = "gmi_relaxation";
pub const PROGRAM_ONE_OFF: &str = "one_off_support";

fn budget(ctx: &RunContext, total: &ColumnResult) -> Result<Budget> {
    let pop = ctx.inputs.pop;
    let c = ctx.config;
    let retention = retention_budget(pop, ctx.inputs.table, ctx.inputs.groups, &c.measures, &c.policy, ColumnLabel::Total)?;
    let mut lines: Vec<BudgetLine> = retention
        .by_group()
        .into_iter()
        .map(|(g, amount)| BudgetLine { program: PROGRAM_RETENTION, group: g.as_str().to_string(), amount })
        .collect();
    let mut gmi_relax = Vec::new();
    let mut one_off = Vec::new();
    for (hi, h) in pop.households().iter().enumerate() {
        if total.gmi_relax_increment[hi].is_positive() {
            gmi_relax.push((h.weight, total.gmi_relax_increment[hi]));
        }
        for a in total.awards[hi].iter().filter(|a| a.program == Program::OneOff) {
            one_off.push((h.weight, a.clone()));
        }
    }
    lines.push(BudgetLine {
        program: PROGRAM_GMI_RELAX,
        group: "all".into(),
        amount: gmi_relax.iter().map(|(w, a)| a.weighted(*w)).sum(),
    });
    lines.push(BudgetLine {
        program: PROGRAM_ONE_OFF,
        group: "all".into(),
        amount: one_off.iter().map(|(w, a)| a.amount.weighted(*w)).sum(),
    });
    let total_amount = lines.iter().map(|l| l.amount).sum();
    let retention_estimate = rescued_income_estimate(pop, ctx.inputs.groups, &total.rescued);
    Ok(Budget { lines, total: total_amount, retention, retention_estimate, gmi_relax, one_off })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table2Run {
    /// The seven reported columns in table order.
    pub columns: Vec<ColumnResult>,
    pub deciles: DecileTable,
    pub budget: Budget,
    pub draw: JobLossDraw,
}

impl Table2Run {
    pub fn column(&self, label: ColumnLabel) -> &ColumnResult {
        self.columns.iter().find(|c| c.label == label).expect("table columns are complete")
    }

    pub fn reports(&self) -> Vec<&MetricsReport> {
        self.columns.iter().map(|c| c.report()).collect()
    }
}

pub fn run_table2(inputs: Inputs, config: &RunConfig) -> Result<Table2Run> {
    let ctx = RunContext::new(inputs, config)?;
    run_table2_with(&ctx)
}

pub fn run_table2_with(ctx: &RunContext) -> Result<Table2Run> {
    let pop = ctx.inputs.pop;
    let columns = ColumnLabel::TABLE2
        .iter()
        .map(|&l| ctx.run_column(ColumnSpec::of(l)))
        .collect::<Result<Vec<_>>>()?;
    let step = ctx.run_column(ColumnSpec::of(ColumnLabel::StabRetentionGmiRelax))?;
    let col = |l: ColumnLabel| columns.iter().find(|c| c.label == l).expect("column present");
    let chain = [
        col(ColumnLabel::ShockRaw),
        col(ColumnLabel::ShockStab),
        col(ColumnLabel::StabRetention),
        &step,
        col(ColumnLabel::Total),
    ];
    let pre = col(ColumnLabel::Pre);
    let paths: Vec<HouseholdPath> = (0..pop.households().len())
        .map(|hi| HouseholdPath {
            weight: pop.households()[hi].weight,
            pre: pre.incomes[hi],
            steps: chain.map(|c| c.incomes[hi]),
        })
        .collect();
    let person_weights: Vec<Weight> = (0..pop.households().len())
        .map(|hi| pop.households()[hi].weight.times(pop.member_indices(hi).len() as i64))
        .collect();
    let ids: Vec<&str> = pop.households().iter().map(|h| h.household_id.as_str()).collect();
    let deciles = decile_table(&paths, &pre.equivalized_disposable, &person_weights, &ids);
    let budget = budget(ctx, col(ColumnLabel::Total))?;
    Ok(Table2Run { columns, deciles, budget, draw: ctx.draw.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    RelativePoverty,
    AbsolutePoverty55,
    AbsolutePoverty19,
    Gini,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::RelativePoverty, Metric::AbsolutePoverty55, Metric::AbsolutePoverty19, Metric::Gini];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RelativePoverty => "relative_poverty",
            Metric::AbsolutePoverty55 => "absolute_poverty_5_5",
            Metric::AbsolutePoverty19 => "absolute_poverty_1_9",
            Metric::Gini => "gini",
        }
    }

    pub fn of(self, r: &MetricsReport) -> f64 {
        match self {
            Metric::RelativePoverty => r.relative.rate,
            Metric::AbsolutePoverty55 => r.absolute_5_5.rate,
            Metric::AbsolutePoverty19 => r.absolute_1_9.rate,
            Metric::Gini => r.gini,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsRun {
    pub durations: Vec<u32>,
    pub point_duration: u32,
    /// `tables[i][j]` is column `j` of the run at `durations[i]`.
    pub tables: Vec<Vec<MetricsReport>>,
    pub point: Vec<MetricsReport>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub min: f64,
    pub point: f64,
    pub max: f64,
}

impl BoundsRun {
    pub fn values(&self, metric: Metric, column: usize) -> Vec<f64> {
        self.tables.iter().map(|t| metric.of(&t[column])).collect()
    }

    pub fn band(&self, metric: Metric, column: usize) -> Band {
        let v = self.values(metric, column);
        let point = metric.of(&self.point[column]);
        Band {
            min: v.iter().copied().fold(point, f64::min),
            point,
            max: v.iter().copied().fold(point, f64::max),
        }
    }
}

fn column_reports(ctx: &RunContext) -> Result<Vec<MetricsReport>> {
    ColumnLabel::TABLE2
        .iter()
        .map(|&l| ctx.run_column(ColumnSpec::of(l)).map(|c| c.report().clone()))
        .collect()
}

/// One full column matrix per crisis duration, all sharing the job-loss draw
/// of the configured seed. The subsidy window keeps its configured length.
pub fn run_bounds(inputs: Inputs, config: &RunConfig) -> Result<BoundsRun> {
    config.validate()?;
    inputs.table.check_covers(inputs.pop)?;
    let draw = select_job_losses(inputs.pop, inputs.table, &config.scenario)?;
    let mut tables = Vec::new();
    let mut point = None;
    for &d in &config.bounds_durations {
        let c = config.with_crisis_months(d);
        let ctx = RunContext::with_draw(inputs, &c, draw.clone())?;
        let t = column_reports(&ctx)?;
        if d == config.scenario.crisis_months {
            point = Some(t.clone());
        }
        tables.push(t);
    }
    let point = match point {
        Some(p) => p,
        None => column_reports(&RunContext::with_draw(inputs, config, draw)?)?,
    };
    Ok(BoundsRun {
        durations: config.bounds_durations.clone(),
        point_duration: config.scenario.crisis_months,
        tables,
        point,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table3 {
    pub women: Option<Vec<MetricsReport>>,
    pub youth: Option<Vec<MetricsReport>>,
}

fn group_table(pop: &Population, run: &Table2Run, filter: GroupFilter) -> Result<Option<Vec<MetricsReport>>> {
    if !pop.individuals().iter().any(|p| filter.admits(p)) {
        return Ok(None);
    }
    run.columns
        .iter()
        .map(|c| crate::metrics::group_metrics(pop, &c.equivalized_disposable, filter, c.lines()))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Women and youth tables; a group with no members is reported as absent.
pub fn run_table3(pop: &Population, run: &Table2Run) -> Result<Table3> {
    Ok(Table3 {
        women: group_table(pop, run, GroupFilter::Women)?,
        youth: group_table(pop, run, GroupFilter::Youth)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_sectors: usize,
}

impl FitResult {
    pub fn slope_distance_from_one(&self) -> f64 {
        (self.slope - 1.0).abs()
    }
}

/// Least squares of `y` on `x`. R² is 0 when `y` has no variance.
pub fn ols(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::numerical("scenario_runner", "validation_fit", format!("need at least 3 sectors, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(Error::numerical("scenario_runner", "validation_fit", "actual declines have zero variance"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(FitResult { slope, intercept, r_squared, n_sectors: n })
}

/// Weighted wage decline per sector in a column: one minus shocked over
/// pre-shock earnings of formal and informal employees with a sector.
pub fn simulated_sector_declines(pop: &Population, column: &ColumnResult) -> BTreeMap<SectorCode, f64> {
    let mut acc: BTreeMap<&SectorCode, (WeightedMkd, WeightedMkd)> = BTreeMap::new();
    for (pi, ind) in pop.individuals().iter().enumerate() {
        let Some(code) = ind.sector_code.as_ref() else { continue };
        if !ind.labor_status.is_employee() {
            continue;
        }
        let w = pop.households()[pop.household_of(pi)].weight;
        let e = acc.entry(code).or_insert((WeightedMkd::ZERO, WeightedMkd::ZERO));
        e.0 += main_earnings(ind).times(12).weighted(w);
        e.1 += column.main_annual[pi].weighted(w);
    }
    acc.into_iter()
        .filter(|(_, (pre, _))| pre.raw() > 0)
        .map(|(c, (pre, post))| (c.clone(), 1.0 - post.raw() as f64 / pre.raw() as f64))
        .collect()
}

/// Regress simulated sector declines on observed ones, over sectors that
/// have both.
pub fn validation_fit(table: &SectorImpactTable, simulated: &BTreeMap<SectorCode, f64>) -> Result<FitResult> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (code, impact) in table.iter() {
        if let (Some(a), Some(&s)) = (impact.actual_decline(), simulated.get(code)) {
            x.push(a);
            y.push(s);
        }
    }
    ols(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::fixtures::params;
    use crate::population::test_support::{formal, household, person};
    use crate::shock::SectorImpact;

    fn table(rows: &[(&str, u8, Option<f64>)]) -> SectorImpactTable {
        SectorImpactTable::from_rows(rows.iter().map(|&(c, s, d)| {
            (
                SectorCode::new(c).unwrap(),
                SectorImpact {
                    severity: Severity::new(s).unwrap(),
                    actual_turnover_delta: d,
                    actual_hours_delta: d,
                },
            )
        }))
        .unwrap()
    }

    fn config() -> RunConfig {
        RunConfig {
            scenario: ShockScenario { job_loss_wage_mass_share: 0.5, seed: 3, ..Default::default() },
            policy: params(),
            measures: MeasureConfig::default(),
            bounds_durations: vec![3, 5, 9],
        }
    }

    fn fixture() -> (Population, SectorImpactTable) {
        let mut owner = household("H4", 2.0);
        owner.owns_extra_property = true;
        let hh = vec![household("H1", 10.0), household("H2", 5.0), household("H3", 8.0), owner, household("H5", 4.0)];
        let mut se = person("P06", "H3", 50, LaborStatus::SelfEmployed);
        se.sector_code = Some(SectorCode::new("56").unwrap());
        se.self_employment_income = Mkd::from_whole(20_000);
        let mut pens = person("P08", "H5", 70, LaborStatus::Pensioner);
        pens.pension_income = Mkd::from_whole(12_000);
        let ind = vec![
            formal("P01", "H1", "55", 4_000),
            person("P02", "H1", 8, LaborStatus::Child),
            formal("P03", "H2", "55", 5_000),
            formal("P04", "H2", "47", 30_000),
            person("P05", "H2", 19, LaborStatus::Student),
            se,
            person("P07", "H4", 30, LaborStatus::Unemployed),
            pens,
        ];
        let t = table(&[("55", 4, Some(-0.5)), ("56", 4, Some(-0.6)), ("47", 3, Some(-0.2))]);
        (Population::new(hh, ind, "2019").unwrap(), t)
    }

    fn run(pop: &Population, t: &SectorImpactTable, c: &RunConfig) -> Table2Run {
        let g = SectorGroups::default();
        run_table2(Inputs { pop, table: t, groups: &g }, c).unwrap()
    }

    #[test]
    fn pre_column_awards_carry_the_pre_tag() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &config());
        let pre = r.column(ColumnLabel::Pre);
        assert!(pre.awards.iter().flatten().all(|a| a.scenario_tag == ColumnLabel::Pre));
        assert!(pre.awards.iter().flatten().count() > 0);
    }

    #[test]
    fn null_shock_reproduces_pre() {
        let (pop, t) = fixture();
        let c = RunConfig { measures: MeasureConfig::all_disabled(), ..config() }.with_crisis_months(0);
        let r = run(&pop, &t, &RunConfig { scenario: ShockScenario { job_loss_wage_mass_share: 0.0, ..c.scenario.clone() }, ..c });
        let pre = r.column(ColumnLabel::Pre);
        for l in ColumnLabel::TABLE2 {
            assert_eq!(r.column(l).incomes, pre.incomes, "{}", l.as_str());
        }
    }

    #[test]
    fn disabled_measures_collapse_to_stabilizers() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &RunConfig { measures: MeasureConfig::all_disabled(), ..config() });
        let stab = r.column(ColumnLabel::ShockStab);
        for l in &ColumnLabel::TABLE2[3..] {
            assert_eq!(r.column(*l).incomes, stab.incomes);
            assert_eq!(r.column(*l).report(), stab.report());
        }
        assert_eq!(r.budget.total, WeightedMkd::ZERO);
    }

    #[test]
    fn stabilizers_add_one_gmi_award() {
        // a lone low-paid hotel worker loses the job and falls below the threshold
        let hh = vec![household("H1", 1.0), household("H2", 1.0)];
        let ind = vec![formal("P1", "H1", "55", 5_000), formal("P2", "H2", "10", 50_000)];
        let pop = Population::new(hh, ind, "2019").unwrap();
        let t = table(&[("55", 4, None), ("10", 1, None)]);
        let c = RunConfig { scenario: ShockScenario { job_loss_wage_mass_share: 1.0, ..Default::default() }, ..config() };
        let r = run(&pop, &t, &c);
        let gmi = |l: ColumnLabel| {
            r.column(l).awards.iter().flatten().filter(|a| a.program == Program::Gmi).count()
        };
        assert_eq!(gmi(ColumnLabel::ShockRaw), 0);
        assert_eq!(gmi(ColumnLabel::ShockStab), 1);
        assert!(r.draw.lost[0]);
    }

    #[test]
    fn shock_raw_keeps_baseline_awards() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &config());
        let pre = r.column(ColumnLabel::Pre);
        let raw = r.column(ColumnLabel::ShockRaw);
        assert_eq!(pre.awards, raw.awards);
        for (a, b) in pre.incomes.iter().zip(&raw.incomes) {
            assert_eq!(a.benefits, b.benefits);
        }
    }

    #[test]
    fn job_loss_draw_is_shared() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &config());
        let raw = r.column(ColumnLabel::ShockRaw);
        for l in [ColumnLabel::ShockStab, ColumnLabel::StabGmiRelax, ColumnLabel::StabOneOff] {
            assert_eq!(r.column(l).job_lost, raw.job_lost);
        }
        assert_eq!(raw.job_lost, r.draw.lost);
        // retention keeps every covered worker in work
        assert!(r.column(ColumnLabel::StabRetention).job_lost.iter().all(|l| !l));
    }

    #[test]
    fn budget_matches_award_sums() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &config());
        let b = &r.budget;
        let sum: WeightedMkd = b.lines.iter().map(|l| l.amount).sum();
        assert_eq!(sum, b.total);
        // three eligible formal employees of weights 10, 5, 5 at 43,500 each
        assert_eq!(b.retention.total().round_to_mkd(), Mkd::from_whole(43_500 * 20));
        // H4 owns property: the relaxation pays its GMI in full
        assert_eq!(b.gmi_relax.len(), 1);
        assert_eq!(b.gmi_relax[0].0, Weight::from_f64(2.0));
    }

    #[test]
    fn cr_components_sum_to_total() {
        let (pop, t) = fixture();
        let r = run(&pop, &t, &config());
        for row in r.deciles.rows.iter().chain([&r.deciles.all]) {
            if let Some(total) = row.record.cr_total {
                let s: f64 = row.record.cr_components.values().sum();
                assert!((s - total).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bounds_collapse_for_a_single_duration() {
        let (pop, t) = fixture();
        let g = SectorGroups::default();
        let c = RunConfig { bounds_durations: vec![5], ..config() };
        let b = run_bounds(Inputs { pop: &pop, table: &t, groups: &g }, &c).unwrap();
        for m in Metric::ALL {
            for j in 0..7 {
                let band = b.band(m, j);
                assert_eq!(band.min, band.point);
                assert_eq!(band.max, band.point);
            }
        }
    }

    #[test]
    fn bounds_point_matches_a_direct_run() {
        let (pop, t) = fixture();
        let g = SectorGroups::default();
        let c = config();
        let b = run_bounds(Inputs { pop: &pop, table: &t, groups: &g }, &c).unwrap();
        let d3 = run(&pop, &t, &c.with_crisis_months(3));
        let direct: Vec<MetricsReport> = d3.reports().into_iter().cloned().collect();
        assert_eq!(b.tables[0], direct);
    }

    #[test]
    fn table3_youth_absent_and_women_match() {
        let hh = vec![household("H1", 1.0)];
        let mut a = formal("P1", "H1", "10", 30_000);
        a.age = 45;
        let pop = Population::new(hh, vec![a], "2019").unwrap();
        let t = table(&[("10", 1, None)]);
        let c = RunConfig { scenario: ShockScenario { job_loss_wage_mass_share: 0.0, ..Default::default() }, ..config() };
        let r = run(&pop, &t, &c);
        let t3 = run_table3(&pop, &r).unwrap();
        assert!(t3.youth.is_none());
        let women = t3.women.unwrap();
        for (w, all) in women.iter().zip(r.reports()) {
            assert_eq!(w.relative, all.relative);
            assert_eq!(w.gini, all.gini);
        }
    }

    #[test]
    fn ols_examples() {
        let x = [0.1, 0.2, 0.3, 0.4];
        let f = ols(&x, &x).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        let flat = ols(&x, &[0.3; 4]).unwrap();
        assert_eq!(flat.r_squared, 0.0);
        assert!(ols(&[0.1, 0.2], &[0.1, 0.2]).is_err());
        assert!(ols(&[0.2; 3], &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn ols_five_point_hand_dataset() {
        // x = 1..5, y = 2, 4, 5, 4, 5: sxx 10, sxy 6, syy 6; slope 0.6, intercept 2.2, R² 0.6
        let f = ols(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-9);
        assert!((f.intercept - 2.2).abs() < 1e-9);
        assert!((f.r_squared - 0.6).abs() < 1e-9);
        assert_eq!(f.n_sectors, 5);
    }

    #[test]
    fn rejects_unsorted_bounds() {
        let c = RunConfig { bounds_durations: vec![5, 3], ..config() };
        assert!(c.validate().is_err());
    }
}
