use std::io::Cursor;

use proptest::prelude::*;
use recourse_core::dataset::Label;
use recourse_core::schema::FeatureSchema;
use recourse_core::synth::{credit_schema, synthesize_credit, CREDIT_LABEL};
use recourse_tools::io::{self, SchemaFile};
use recourse_tools::ToolError;

const TABLE2: &str = "\
RevolvingUtilizationOfUnsecuredLines,NumberOfTime30-59DaysPastDueNotWorse,DebtRatio,MonthlyIncome,\
NumberOfOpenCreditLinesAndLoans,NumberOfTimes90DaysLate,NumberRealEstateLoansOrLines,\
NumberOfTime60-89DaysPastDueNotWorse,age,NumberOfDependents,Creditworthy
1.00,3,0.19,2700,3,4,0,0,36,3,0
";

#[test]
fn table2_row_loads_exactly() {
    let schema = credit_schema();
    let data = io::read_csv(Cursor::new(TABLE2), &schema, CREDIT_LABEL).unwrap();
    assert_eq!(data.len(), 1);
    // schema order: rev.util, age, 30-59, debt, income, #credit, >90, r.est, 60-89, dependents
    assert_eq!(data.row(0), &[1.0, 36.0, 3.0, 0.19, 2700.0, 3.0, 4.0, 0.0, 0.0, 3.0]);
    assert_eq!(data.label(0), Label::Negative);
}

#[test]
fn empty_body_gives_empty_dataset() {
    let header = TABLE2.lines().next().unwrap();
    let data = io::read_csv(Cursor::new(format!("{header}\n")), &credit_schema(), CREDIT_LABEL).unwrap();
    assert_eq!(data.len(), 0);
}

#[test]
fn negative_income_is_rejected_with_row_and_feature() {
    let text = TABLE2.replace(",2700,", ",-5,");
    let err = io::read_csv(Cursor::new(text), &credit_schema(), CREDIT_LABEL).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, ToolError::Domain(_)), "{msg}");
    assert!(msg.contains("row 0") && msg.contains("MonthlyIncome"), "{msg}");
}

#[test]
fn malformed_inputs() {
    let schema = credit_schema();
    let missing = TABLE2.replace("DebtRatio,", "Debt,");
    assert!(io::read_csv(Cursor::new(missing), &schema, CREDIT_LABEL).unwrap_err().to_string().contains("DebtRatio"));
    let bad_cell = TABLE2.replace(",0.19,", ",abc,");
    assert!(io::read_csv(Cursor::new(bad_cell), &schema, CREDIT_LABEL).is_err());
    let bad_label = TABLE2.replace(",3,0\n", ",3,2\n");
    assert!(io::read_csv(Cursor::new(bad_label), &schema, CREDIT_LABEL).is_err());
    let fractional_count = TABLE2.replace("1.00,3,", "1.00,2.5,");
    assert!(io::read_csv(Cursor::new(fractional_count), &schema, CREDIT_LABEL).is_err());
    assert!(io::load_csv(std::path::Path::new("/nonexistent/file.csv"), &schema, CREDIT_LABEL).is_err());
}

#[test]
fn zero_one_and_signed_labels() {
    let schema = FeatureSchema::real(1);
    let text = "x0,y\n0.5,1\n-0.5,0\n1.5,-1\n";
    let data = io::read_csv(Cursor::new(text), &schema, "y").unwrap();
    assert_eq!(data.labels(), &[Label::Positive, Label::Negative, Label::Negative]);
}

#[test]
fn synthetic_round_trip_is_exact() {
    let data = synthesize_credit(300, 11).unwrap();
    let mut buf = Vec::new();
    io::write_csv_to(&mut buf, &data, CREDIT_LABEL).unwrap();
    let back = io::read_csv(Cursor::new(&buf), data.schema(), CREDIT_LABEL).unwrap();
    assert_eq!(back, data);
    let mut again = Vec::new();
    io::write_csv_to(&mut again, &back, CREDIT_LABEL).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn schema_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schema.json");
    let file = SchemaFile::new(&credit_schema(), CREDIT_LABEL);
    io::write_schema(&path, &file).unwrap();
    let back = io::read_schema(&path).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.schema().unwrap(), credit_schema());
    let flags: Vec<bool> = back.features.iter().map(|f| f.mutable).collect();
    assert_eq!(flags, credit_schema().features().iter().map(|f| f.mutable).collect::<Vec<_>>());
}

#[test]
fn invalid_schema_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schema.json");
    std::fs::write(&path, r#"{"features": [], "label": "y"}"#).unwrap();
    assert!(io::read_schema(&path).is_err());
    std::fs::write(&path, r#"{"features": [{"name": "a", "mutable": true, "likelihood": "bogus"}], "label": "y"}"#)
        .unwrap();
    assert!(io::read_schema(&path).is_err());
    std::fs::write(&path, r#"{"features": [{"name": "y", "mutable": true, "likelihood": "real"}], "label": "y"}"#)
        .unwrap();
    assert!(io::read_schema(&path).is_err());
}

proptest! {
    #[test]
    fn real_rows_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e12f64..1e12, 3), 0..40)) {
        let schema = FeatureSchema::real(3);
        let labels = rows.iter().enumerate().map(|(i, _)| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let data = recourse_core::dataset::Dataset::new(schema.clone(), rows, labels).unwrap();
        let mut buf = Vec::new();
        io::write_csv_to(&mut buf, &data, "y").unwrap();
        let back = io::read_csv(Cursor::new(&buf), &schema, "y").unwrap();
        prop_assert_eq!(back, data);
    }
}
