use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::StringRecord;

use super::{Gender, Household, Individual, LaborStatus, Population, SectorCode};
use crate::error::{Error, Result};
use crate::money::{Mkd, Weight};

pub const HOUSEHOLDS_FILE: &str = "households.csv";
pub const INDIVIDUALS_FILE: &str = "individuals.csv";

const HOUSEHOLD_HEADER: [&str; 5] =
    ["household_id", "weight", "owns_extra_property", "parcel_over_500m2", "car_newer_than_5y"];

const INDIVIDUAL_HEADER: [&str; 10] = [
    "person_id",
    "household_id",
    "age",
    "gender",
    "labor_status",
    "sector_code",
    "gross_wage",
    "self_employment_income",
    "pension_income",
    "other_income",
];

/// Load `households.csv` and `individuals.csv` from `dir`.
pub fn load_population(dir: &Path, reference_year: &str) -> Result<Population> {
    let open = |name: &str| {
        let path = dir.join(name);
        File::open(&path).map_err(|e| Error::io(path, e))
    };
    read_population(open(HOUSEHOLDS_FILE)?, open(INDIVIDUALS_FILE)?, reference_year)
}

pub fn read_population<H: Read, I: Read>(households: H, individuals: I, reference_year: &str) -> Result<Population> {
    let hh = read_rows(households, HOUSEHOLDS_FILE, &HOUSEHOLD_HEADER, parse_household)?;
    let ind = read_rows(individuals, INDIVIDUALS_FILE, &INDIVIDUAL_HEADER, parse_individual)?;
    Population::new(hh, ind, reference_year)
}

/// Write both input tables into `dir`, in the exact schema `load_population` reads.
pub fn write_population(pop: &Population, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hpath = dir.join(HOUSEHOLDS_FILE);
    let mut out = String::new();
    out.push_str(&HOUSEHOLD_HEADER.join(","));
    out.push('\n');
    for h in pop.households() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            h.household_id,
            h.weight,
            flag(h.owns_extra_property),
            flag(h.parcel_over_500m2),
            flag(h.car_newer_than_5y)
        ));
    }
    write_file(&hpath, &out)?;

    let ipath = dir.join(INDIVIDUALS_FILE);
    let mut out = String::new();
    out.push_str(&INDIVIDUAL_HEADER.join(","));
    out.push('\n');
    for i in pop.individuals() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            i.person_id,
            i.household_id,
            i.age,
            i.gender.as_str(),
            i.labor_status.as_str(),
            i.sector_code.as_ref().map(SectorCode::as_str).unwrap_or(""),
            i.gross_wage,
            i.self_employment_income,
            i.pension_income,
            i.other_income
        ));
    }
    write_file(&ipath, &out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Reads a headed CSV table, checking the header exactly and parsing every
/// row with `parse`. Errors carry the 1-based line number of the row.
pub(crate) fn read_rows<R: Read, T>(
    source: R,
    file: &str,
    header: &[&str],
    parse: impl Fn(&StringRecord) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(source);
    let found = rdr.headers().map_err(|e| csv_error(file, &e))?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::Header { file: file.to_string(), expected: header.join(",") });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(file, &e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = parse(&rec).map_err(|message| Error::MalformedRow { file: file.to_string(), line, message })?;
        out.push(row);
    }
    Ok(out)
}

fn csv_error(file: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::MalformedRow { file: file.to_string(), line, message: e.to_string() }
}

pub(crate) fn parse_flag(s: &str, name: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("{name}: expected 0 or 1, got {other:?}")),
    }
}

fn parse_money(s: &str, name: &str) -> std::result::Result<Mkd, String> {
    let v: Mkd = s.trim().parse().map_err(|_| format!("{name}: invalid amount {s:?}"))?;
    if v.is_negative() {
        return Err(format!("{name}: negative income field {s}"));
    }
    Ok(v)
}

fn non_empty<'a>(s: &'a str, name: &str) -> std::result::Result<&'a str, String> {
    let t = s.trim();
    if t.is_empty() {
        Err(format!("{name} is empty"))
    } else {
        Ok(t)
    }
}

fn parse_household(r: &StringRecord) -> std::result::Result<Household, String> {
    let weight: Weight = r[1].trim().parse().map_err(|_| format!("weight: invalid number {:?}", &r[1]))?;
    if !weight.is_positive() {
        return Err(format!("weight must be > 0, got {}", &r[1]));
    }
    Ok(Household {
        household_id: non_empty(&r[0], "household_id")?.to_string(),
        weight,
        owns_extra_property: parse_flag(&r[2], "owns_extra_property")?,
        parcel_over_500m2: parse_flag(&r[3], "parcel_over_500m2")?,
        car_newer_than_5y: parse_flag(&r[4], "car_newer_than_5y")?,
    })
}

fn parse_individual(r: &StringRecord) -> std::result::Result<Individual, String> {
    let sector = r[5].trim();
    Ok(Individual {
        person_id: non_empty(&r[0], "person_id")?.to_string(),
        household_id: non_empty(&r[1], "household_id")?.to_string(),
        age: r[2].trim().parse().map_err(|_| format!("age: invalid whole number {:?}", &r[2]))?,
        gender: r[3].trim().parse::<Gender>()?,
        labor_status: r[4].trim().parse::<LaborStatus>()?,
        sector_code: if sector.is_empty() { None } else { Some(SectorCode::new(sector)?) },
        gross_wage: parse_money(&r[6], "gross_wage")?,
        self_employment_income: parse_money(&r[7], "self_employment_income")?,
        pension_income: parse_money(&r[8], "pension_income")?,
        other_income: parse_money(&r[9], "other_income")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HH: &str = "household_id,weight,owns_extra_property,parcel_over_500m2,car_newer_than_5y\n";
    const IND: &str = "person_id,household_id,age,gender,labor_status,sector_code,gross_wage,self_employment_income,pension_income,other_income\n";

    fn read(h: &str, i: &str) -> Result<Population> {
        read_population(format!("{HH}{h}").as_bytes(), format!("{IND}{i}").as_bytes(), "2019")
    }

    #[test]
    fn minimal_well_formed_input() {
        let pop = read("H1,100,0,0,0\n", "P1,H1,40,female,formal_employee,47,30000,0,0,0\n").unwrap();
        assert_eq!(pop.households().len(), 1);
        assert_eq!(pop.individuals()[0].gross_wage, Mkd::from_whole(30_000));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = read("H1,100,0,0,0\nH2,abc,0,0,0\n", "P1,H1,40,female,inactive,,0,0,0,0\n").unwrap_err();
        match err {
            Error::MalformedRow { line, ref file, .. } => {
                assert_eq!(line, 3);
                assert_eq!(file, HOUSEHOLDS_FILE);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_income_rejected() {
        let err = read("H1,1,0,0,0\n", "P1,H1,70,male,pensioner,,0,0,-5,0\n").unwrap_err();
        assert!(err.to_string().contains("negative income field"), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        let err = read_population(
            "id,weight\nH1,1\n".as_bytes(),
            format!("{IND}P1,H1,40,female,inactive,,0,0,0,0\n").as_bytes(),
            "2019",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Header { .. }));
    }

    #[test]
    fn duplicate_and_dangling_ids() {
        let e = read("H1,1,0,0,0\nH1,2,0,0,0\n", "P1,H1,40,female,inactive,,0,0,0,0\n").unwrap_err();
        assert!(matches!(e, Error::DuplicateId { entity: "household", .. }));
        let e = read("H1,1,0,0,0\n", "P1,H99,40,female,inactive,,0,0,0,0\n").unwrap_err();
        assert!(e.to_string().contains("H99"));
    }

    #[test]
    fn empty_tables_rejected() {
        assert!(matches!(read("", ""), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn ten_row_fixture_weighted_persons() {
        // households: H1 w=10 (3 members), H2 w=20.5 (2), H3 w=5 (1), H4 w=7.25 (4)
        // hand sum: 3*10 + 2*20.5 + 1*5 + 4*7.25 = 30 + 41 + 5 + 29 = 105
        let hh = "H1,10,0,0,0\nH2,20.5,1,0,0\nH3,5,0,0,1\nH4,7.25,0,0,0\n";
        let ind = "\
P01,H1,45,male,formal_employee,47,25000,0,0,0
P02,H1,43,female,inactive,,0,0,0,0
P03,H1,10,male,child,,0,0,0,0
P04,H2,70,female,pensioner,,0,0,12000,0
P05,H2,72,male,pensioner,,0,0,15000,500
P06,H3,30,female,self_employed,55,0,18000,0,0
P07,H4,50,male,informal_employee,,9000,0,0,0
P08,H4,48,female,unemployed,,0,0,0,0
P09,H4,19,male,student,,0,0,0,0
P10,H4,3,female,child,,0,0,0,0
";
        let pop = read(hh, ind).unwrap();
        assert_eq!(pop.individuals().len(), 10);
        assert_eq!(pop.weighted_persons(), Weight::from_f64(105.0));
    }

    #[test]
    fn load_write_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let pop = read(
            "H1,10.123456789,0,1,0\nH2,3,1,0,1\n",
            "P1,H1,40,female,formal_employee,47,30000.5,0,0,12.34\nP2,H2,80,male,pensioner,,0,0,9000,0\n",
        )
        .unwrap();
        write_population(&pop, dir.path()).unwrap();
        let again = load_population(dir.path(), "2019").unwrap();
        assert_eq!(pop, again);
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_population(dir.path(), "2019").unwrap_err();
        assert!(err.to_string().contains(HOUSEHOLDS_FILE));
    }
}
