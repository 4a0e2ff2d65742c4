//! Panel CSV input/output.
//!
//! The on-disk schema is versioned: the first line of a panel file must be
//! the comment `# schema: panel-v1`; further `#` lines are free-form
//! comments (the writers record the master seed and toolkit version there),
//! then the fixed 23-column header, then one row per trial. Optional fields
//! are empty, never omitted. Encodings: states `X`/`Y`, balls `W`/`B`,
//! conditions `IND`/`SOC`, condition orders `IND_FIRST`/`SOC_FIRST`,
//! treatments `BASE`/`DEMO`/`BOT`/`BALL` (empty for pool rows), gender
//! `F`/`M`, remaining booleans `1`/`0`.

use super::CliError;
use crate::env::{InformationStructure, Signal, State};
use crate::sim::{Condition, ConditionOrder, Covariates, Panel, Treatment, TrialRecord};
use std::io::Write as _;
use std::path::Path;

/// The schema tag every panel file must open with.
pub const SCHEMA_LINE: &str = "# schema: panel-v1";

/// The exact column header, in order.
pub const HEADER: &str = "session_id,subject_id,treatment,condition,condition_order,round,\
white_in_x,black_in_y,true_state,ball,ball_shown,neighbor_id,neighbor_guess,choice,\
reported_posterior_pct,gender,education_years,age,prob_stat,neighbor_gender,\
neighbor_education_years,neighbor_age,neighbor_prob_stat";

fn state_code(state: State) -> &'static str {
    match state {
        State::X => "X",
        State::Y => "Y",
    }
}

fn signal_code(signal: Signal) -> &'static str {
    match signal {
        Signal::White => "W",
        Signal::Black => "B",
    }
}

fn treatment_code(treatment: Treatment) -> &'static str {
    treatment.session_id()
}

fn condition_code(condition: Condition) -> &'static str {
    match condition {
        Condition::Individual => "IND",
        Condition::Social => "SOC",
    }
}

fn order_code(order: ConditionOrder) -> &'static str {
    match order {
        ConditionOrder::IndividualFirst => "IND_FIRST",
        ConditionOrder::SocialFirst => "SOC_FIRST",
    }
}

fn bool_code(value: bool) -> &'static str {
    if value {
        "1"
    } else {
        "0"
    }
}

fn gender_code(female: bool) -> &'static str {
    if female {
        "F"
    } else {
        "M"
    }
}

fn covariate_fields(c: &Covariates) -> [String; 4] {
    [
        gender_code(c.female).to_string(),
        c.education_years.to_string(),
        c.age.to_string(),
        bool_code(c.prob_stat).to_string(),
    ]
}

fn check_free_text(record_index: usize, field: &str, value: &str) -> Result<(), CliError> {
    if value.contains(',') || value.contains('\n') || value.contains('\r') {
        return Err(CliError::Data(format!(
            "record {record_index}: `{field}` value `{value}` contains a delimiter"
        )));
    }
    Ok(())
}

fn record_row(index: usize, record: &TrialRecord) -> Result<String, CliError> {
    check_free_text(index, "session_id", &record.session_id)?;
    if let Some(id) = &record.neighbor_id {
        check_free_text(index, "neighbor_id", id)?;
    }
    let neighbor_cov = match &record.neighbor_covariates {
        Some(c) => covariate_fields(c),
        None => [String::new(), String::new(), String::new(), String::new()],
    };
    let own = covariate_fields(&record.covariates);
    let fields: [String; 23] = [
        record.session_id.clone(),
        record.subject_id.to_string(),
        record
            .treatment
            .map(treatment_code)
            .unwrap_or_default()
            .to_string(),
        condition_code(record.condition).to_string(),
        order_code(record.condition_order).to_string(),
        record.round.to_string(),
        record.structure.white_in_x().to_string(),
        record.structure.black_in_y().to_string(),
        state_code(record.true_state).to_string(),
        record.ball.map(signal_code).unwrap_or_default().to_string(),
        bool_code(record.ball_shown).to_string(),
        record.neighbor_id.clone().unwrap_or_default(),
        record
            .neighbor_guess
            .map(state_code)
            .unwrap_or_default()
            .to_string(),
        state_code(record.choice).to_string(),
        record.reported_posterior_pct.to_string(),
        own[0].clone(),
        own[1].clone(),
        own[2].clone(),
        own[3].clone(),
        neighbor_cov[0].clone(),
        neighbor_cov[1].clone(),
        neighbor_cov[2].clone(),
        neighbor_cov[3].clone(),
    ];
    Ok(fields.join(","))
}

/// Writes a panel with extra comment lines (each is prefixed with `# `)
/// between the schema tag and the header.
pub fn write_panel_with_comments(
    panel: &Panel,
    path: &Path,
    comments: &[String],
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(SCHEMA_LINE);
    out.push('\n');
    for comment in comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    out.push_str(HEADER);
    out.push('\n');
    for (index, record) in panel.records().iter().enumerate() {
        out.push_str(&record_row(index, record)?);
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(out.as_bytes())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Writes a panel CSV (schema tag, version comment, header, rows).
pub fn write_panel(panel: &Panel, path: &Path) -> Result<(), CliError> {
    write_panel_with_comments(
        panel,
        path,
        &[format!("version: {}", env!("CARGO_PKG_VERSION"))],
    )
}

struct FieldCursor<'a> {
    line_no: usize,
    names: &'static [&'static str],
    values: Vec<&'a str>,
    at: usize,
}

impl<'a> FieldCursor<'a> {
    fn next(&mut self) -> (&'static str, &'a str) {
        let pair = (self.names[self.at], self.values[self.at]);
        self.at += 1;
        pair
    }

    fn err(&self, name: &str, value: &str, want: &str) -> CliError {
        CliError::Data(format!(
            "line {}: column `{name}` got `{value}`, expected {want}",
            self.line_no
        ))
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T, CliError> {
        let (name, value) = self.next();
        value.parse().map_err(|_| self.err(name, value, "a number"))
    }

    fn state(&mut self) -> Result<State, CliError> {
        let (name, value) = self.next();
        match value {
            "X" => Ok(State::X),
            "Y" => Ok(State::Y),
            _ => Err(self.err(name, value, "X or Y")),
        }
    }

    fn optional_state(&mut self) -> Result<Option<State>, CliError> {
        let (name, value) = self.next();
        match value {
            "" => Ok(None),
            "X" => Ok(Some(State::X)),
            "Y" => Ok(Some(State::Y)),
            _ => Err(self.err(name, value, "X, Y, or empty")),
        }
    }

    fn optional_signal(&mut self) -> Result<Option<Signal>, CliError> {
        let (name, value) = self.next();
        match value {
            "" => Ok(None),
            "W" => Ok(Some(Signal::White)),
            "B" => Ok(Some(Signal::Black)),
            _ => Err(self.err(name, value, "W, B, or empty")),
        }
    }

    fn flag(&mut self) -> Result<bool, CliError> {
        let (name, value) = self.next();
        match value {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(self.err(name, value, "1 or 0")),
        }
    }

    fn gender(&mut self) -> Result<bool, CliError> {
        let (name, value) = self.next();
        match value {
            "F" => Ok(true),
            "M" => Ok(false),
            _ => Err(self.err(name, value, "F or M")),
        }
    }
}

const COLUMN_NAMES: [&str; 23] = [
    "session_id",
    "subject_id",
    "treatment",
    "condition",
    "condition_order",
    "round",
    "white_in_x",
    "black_in_y",
    "true_state",
    "ball",
    "ball_shown",
    "neighbor_id",
    "neighbor_guess",
    "choice",
    "reported_posterior_pct",
    "gender",
    "education_years",
    "age",
    "prob_stat",
    "neighbor_gender",
    "neighbor_education_years",
    "neighbor_age",
    "neighbor_prob_stat",
];

fn check_header(line_no: usize, header: &str) -> Result<(), CliError> {
    if header == HEADER {
        return Ok(());
    }
    let got: Vec<&str> = header.split(',').collect();
    for name in COLUMN_NAMES {
        if !got.contains(&name) {
            return Err(CliError::Data(format!(
                "line {line_no}: header is missing column `{name}`"
            )));
        }
    }
    for name in &got {
        if !COLUMN_NAMES.contains(name) {
            return Err(CliError::Data(format!(
                "line {line_no}: header has unknown column `{name}`"
            )));
        }
    }
    Err(CliError::Data(format!(
        "line {line_no}: header columns are out of order or repeated"
    )))
}

fn parse_row(line_no: usize, line: &str) -> Result<TrialRecord, CliError> {
    let values: Vec<&str> = line.split(',').collect();
    if values.len() != COLUMN_NAMES.len() {
        return Err(CliError::Data(format!(
            "line {line_no}: expected {} fields, got {}",
            COLUMN_NAMES.len(),
            values.len()
        )));
    }
    let mut cursor = FieldCursor {
        line_no,
        names: &COLUMN_NAMES,
        values,
        at: 0,
    };

    let session_id = cursor.next().1.to_string();
    let subject_id = cursor.number()?;
    let treatment = {
        let (name, value) = cursor.next();
        match value {
            "" => None,
            "BASE" => Some(Treatment::Base),
            "DEMO" => Some(Treatment::Demographics),
            "BOT" => Some(Treatment::Bot),
            "BALL" => Some(Treatment::Ball),
            _ => return Err(cursor.err(name, value, "BASE, DEMO, BOT, BALL, or empty")),
        }
    };
    let condition = {
        let (name, value) = cursor.next();
        match value {
            "IND" => Condition::Individual,
            "SOC" => Condition::Social,
            _ => return Err(cursor.err(name, value, "IND or SOC")),
        }
    };
    let condition_order = {
        let (name, value) = cursor.next();
        match value {
            "IND_FIRST" => ConditionOrder::IndividualFirst,
            "SOC_FIRST" => ConditionOrder::SocialFirst,
            _ => return Err(cursor.err(name, value, "IND_FIRST or SOC_FIRST")),
        }
    };
    let round = cursor.number()?;
    let white_in_x: u8 = cursor.number()?;
    let black_in_y: u8 = cursor.number()?;
    let structure = InformationStructure::new(white_in_x, black_in_y)
        .map_err(|e| CliError::Data(format!("line {line_no}: {e}")))?;
    let true_state = cursor.state()?;
    let ball = cursor.optional_signal()?;
    let ball_shown = cursor.flag()?;
    let neighbor_id = {
        let value = cursor.next().1;
        (!value.is_empty()).then(|| value.to_string())
    };
    let neighbor_guess = cursor.optional_state()?;
    let choice = cursor.state()?;
    let reported_posterior_pct = cursor.number()?;
    let covariates = Covariates {
        female: cursor.gender()?,
        education_years: cursor.number()?,
        age: cursor.number()?,
        prob_stat: cursor.flag()?,
    };
    let neighbor_covariates = {
        let remaining = &cursor.values[cursor.at..];
        if remaining.iter().all(|v| v.is_empty()) {
            None
        } else {
            Some(Covariates {
                female: cursor.gender()?,
                education_years: cursor.number()?,
                age: cursor.number()?,
                prob_stat: cursor.flag()?,
            })
        }
    };

    Ok(TrialRecord {
        session_id,
        subject_id,
        treatment,
        condition,
        condition_order,
        round,
        structure,
        true_state,
        ball,
        ball_shown,
        neighbor_id,
        neighbor_guess,
        choice,
        reported_posterior_pct,
        covariates,
        neighbor_covariates,
    })
}

/// Reads a panel CSV, enforcing the schema version and validating every
/// record (the returned panel satisfies all panel invariants).
pub fn read_panel(path: &Path) -> Result<Panel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        return Err(CliError::Data(format!("{}: empty file", path.display())));
    };
    if first.trim() != SCHEMA_LINE {
        return Err(CliError::Data(format!(
            "{}: schema version mismatch: expected `{SCHEMA_LINE}`, found `{}`",
            path.display(),
            first.trim()
        )));
    }
    let mut header_checked = false;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_checked {
            check_header(line_no, line.trim_end())?;
            header_checked = true;
            continue;
        }
        records.push(parse_row(line_no, line.trim_end())?);
    }
    if !header_checked {
        return Err(CliError::Data(format!(
            "{}: missing column header",
            path.display()
        )));
    }
    Panel::from_records(records).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_experiment, SimConfig};

    fn small_panel() -> Panel {
        let mut config = SimConfig {
            master_seed: 5,
            pool_size: 25,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 3)).collect();
        simulate_experiment(&config).unwrap()
    }

    #[test]
    fn panels_round_trip_losslessly() {
        let panel = small_panel();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        write_panel(&panel, &path).unwrap();
        let back = read_panel(&path).unwrap();
        assert_eq!(panel.records(), back.records());
    }

    #[test]
    fn the_header_line_is_exactly_the_documented_schema() {
        let panel = small_panel();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        write_panel(&panel, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCHEMA_LINE));
        let header = lines.find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, HEADER);
        assert_eq!(header.split(',').count(), 23);
    }

    #[test]
    fn schema_and_header_violations_are_named() {
        let dir = tempfile::tempdir().unwrap();

        let path = dir.path().join("wrong_schema.csv");
        std::fs::write(&path, format!("# schema: panel-v2\n{HEADER}\n")).unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("schema version mismatch"));

        let path = dir.path().join("missing_column.csv");
        let without_choice = HEADER.replace(",choice", "");
        std::fs::write(&path, format!("{SCHEMA_LINE}\n{without_choice}\n")).unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("missing column `choice`"), "{err}");

        let path = dir.path().join("extra_column.csv");
        std::fs::write(&path, format!("{SCHEMA_LINE}\n{HEADER},mood\n")).unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(err.to_string().contains("unknown column `mood`"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bad_rows_are_reported_with_line_numbers() {
        let panel = small_panel();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        write_panel(&panel, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();

        // Corrupt the first data row's choice column (the 14th field).
        let data_start = text
            .lines()
            .position(|l| !l.starts_with('#') && l != HEADER)
            .unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut fields: Vec<String> = lines[data_start].split(',').map(str::to_string).collect();
        fields[13] = "Q".to_string();
        lines[data_start] = fields.join(",");
        text = lines.join("\n");
        let path = dir.path().join("corrupt.csv");
        std::fs::write(&path, text).unwrap();
        let err = read_panel(&path).unwrap_err();
        assert!(
            err.to_string()
                .contains(&format!("line {}", data_start + 1))
                && err.to_string().contains("`choice`"),
            "{err}"
        );
    }
}
