use super::Individual;

/// Age at which a member counts as an adult on the equivalence scale.
const SCALE_ADULT_AGE: u32 = 14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EquivalenceScale {
    /// First adult 1.0, other members aged 14+ 0.5, younger members 0.3.
    #[default]
    ModifiedOecd,
}

impl EquivalenceScale {
    pub fn factor_sum<I: IntoIterator<Item = u32>>(self, ages: I) -> f64 {
        match self {
            EquivalenceScale::ModifiedOecd => {
                let (mut adults, mut children) = (0u32, 0u32);
                for age in ages {
                    if age >= SCALE_ADULT_AGE {
                        adults += 1;
                    } else {
                        children += 1;
                    }
                }
                match (adults, children) {
                    (0, 0) => 0.0,
                    // a household of minors: the first member takes the head weight
                    (0, c) => 1.0 + 0.3 * (c - 1) as f64,
                    (a, c) => 1.0 + 0.5 * (a - 1) as f64 + 0.3 * c as f64,
                }
            }
        }
    }
}

/// Household income per equivalent adult; every member is assigned this value.
pub fn equivalized_income(members: &[&Individual], member_incomes: &[f64], scale: EquivalenceScale) -> f64 {
    debug_assert_eq!(members.len(), member_incomes.len());
    household_equivalized_income(members.iter().map(|m| m.age), member_incomes.iter().sum(), scale)
}

pub fn household_equivalized_income<I: IntoIterator<Item = u32>>(
    ages: I,
    household_income: f64,
    scale: EquivalenceScale,
) -> f64 {
    let s = scale.factor_sum(ages);
    assert!(s > 0.0, "household has at least one member");
    household_income / s
}
