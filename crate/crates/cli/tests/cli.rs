//! End-to-end tests driving the compiled `treesql` binary against the
//! fixtures, pinning output bytes and the exit-status contract: 0 success,
//! 1 constraint/validation failure, 2 usage or parse error.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    path.to_str().expect("utf8 path").to_owned()
}

fn treesql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treesql"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).expect("stdout is utf8")
}

fn stderr(output: &Output) -> &str {
    std::str::from_utf8(&output.stderr).expect("stderr is utf8")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

const PROJECTION_QUERY: &str =
    "SELECT Voucher, Destination, Operator.Name FROM Booking WHERE Operator.Country = 'GE'";
const TRANSFER_QUERY: &str = "SELECT Voucher, Transfer.Vehicle, Service.Type, \
     Transfer.Route.From_Location_id.City FROM Booking WHERE Service.Type = 'transfer'";

#[test]
fn validate_accepts_consistent_booking_data() {
    let out = treesql(&[
        "validate",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("all constraints satisfied"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn validate_reports_duplicate_identifiers() {
    let out = treesql(&[
        "validate",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.duplicate-id.json"),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("identity Passenger.Id"));
    assert!(stderr(&out).contains("record 0"));
}

#[test]
fn validate_warns_about_reference_cycles_without_failing() {
    let out = treesql(&["validate", "--schema", &fixture("cyclic.schema.json")]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stderr(&out).matches("warning: reference cycle").count(), 1);
    assert!(stderr(&out).contains("Dept.Proj.EmplId -> Dept.Empl.EId"));
}

#[test]
fn missing_schema_file_is_a_usage_error() {
    let out = treesql(&["validate", "--schema", &fixture("no-such-file.json")]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn flatten_full_emits_one_row_per_instantiation() {
    let out = treesql(&[
        "flatten",
        "--schema",
        &fixture("nested.schema.json"),
        "--data",
        &fixture("nested.data.json"),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "N1,N3.N2,N3.N4\nV1,V2,V4\nV1,V3,V4\nV1,V5,\n"
    );
}

#[test]
fn flatten_relative_uses_the_query_leaf_set() {
    let out = treesql(&[
        "flatten",
        "--schema",
        &fixture("nested.schema.json"),
        "--data",
        &fixture("nested.data.json"),
        "--kind",
        "relative",
        "--query",
        "SELECT N1, N4 FROM T",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "N1,N3.N4\nV1,V4\nV1,\n");
}

#[test]
fn flatten_relative_without_a_query_is_a_usage_error() {
    let out = treesql(&[
        "flatten",
        "--schema",
        &fixture("nested.schema.json"),
        "--data",
        &fixture("nested.data.json"),
        "--kind",
        "relative",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--query"));
}

#[test]
fn flatten_relative_rejects_reference_paths() {
    let out = treesql(&[
        "flatten",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--kind",
        "relative",
        "--query",
        "SELECT Passenger.Location_id.City FROM Booking",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--kind constraints"));
}

#[test]
fn flatten_constraints_joins_reference_paths() {
    let out = treesql(&[
        "flatten",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--kind",
        "constraints",
        "--query",
        TRANSFER_QUERY,
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "Voucher,Service.Transfer.Vehicle,Service.Type,\
         Service.Transfer.Route.From_Location_id.City\n\
         s0NI1fF0,Train,transfer,Athens\n\
         s0NI1fF0,Bus,transfer,Chalcis\n"
    );
}

#[test]
fn query_projects_and_filters() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        PROJECTION_QUERY,
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "Voucher,Destination,Operator.Name\ns0NI1fF0,Greece,\n"
    );
}

#[test]
fn query_aggregates_prices() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        "SELECT SUM(Service.Price) FROM Booking WHERE Service.Type = 'accommodation'",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "SUM(Service.Price)\n1800\n");
}

#[test]
fn query_follows_reference_hops() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        TRANSFER_QUERY,
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "Voucher,Service.Transfer.Vehicle,Service.Type,\
         Service.Transfer.Route.From_Location_id.City\n\
         s0NI1fF0,Train,transfer,Athens\n\
         s0NI1fF0,Bus,transfer,Chalcis\n"
    );
}

#[test]
fn query_emits_json_rows_keyed_by_column() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--format",
        "json",
        "--query",
        PROJECTION_QUERY,
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_str(stdout(&out)).expect("valid json");
    assert_eq!(
        rows,
        serde_json::json!([
            {"Voucher": "s0NI1fF0", "Destination": "Greece", "Operator.Name": null}
        ])
    );
}

#[test]
fn query_read_from_a_file_matches_inline_text() {
    let dir = std::env::temp_dir().join(format!("treesql-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create temp dir");
    let path = dir.join("projection.sql");
    std::fs::write(&path, PROJECTION_QUERY).expect("write query file");

    let from_file = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query-file",
        path.to_str().expect("utf8 path"),
    ]);
    std::fs::remove_dir_all(&dir).ok();

    assert_eq!(exit_code(&from_file), 0, "stderr: {}", stderr(&from_file));
    assert_eq!(
        stdout(&from_file),
        "Voucher,Destination,Operator.Name\ns0NI1fF0,Greece,\n"
    );
}

#[test]
fn conflicting_query_sources_are_rejected() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        "SELECT Voucher FROM Booking",
        "--query-file",
        "whatever.sql",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn query_rejects_unknown_columns() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        "SELECT Nonexistent FROM Booking",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("\"Nonexistent\" does not resolve"));
}

#[test]
fn query_syntax_errors_carry_the_offset() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        "SELECT Voucher FRM Booking",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("offset 15"));
    assert!(stderr(&out).contains("expected FROM"));
}

#[test]
fn query_rejects_the_wrong_table_name() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        "SELECT Voucher FROM Bookings",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("Booking"));
}

#[test]
fn constraint_violations_block_queries_unless_skipped() {
    let blocked = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.duplicate-id.json"),
        "--query",
        PROJECTION_QUERY,
    ]);
    assert_eq!(exit_code(&blocked), 1);
    assert!(stderr(&blocked).contains("identity Passenger.Id"));
    assert!(stdout(&blocked).is_empty());

    let skipped = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.duplicate-id.json"),
        "--query",
        PROJECTION_QUERY,
        "--skip-constraint-check",
    ]);
    assert_eq!(exit_code(&skipped), 0, "stderr: {}", stderr(&skipped));
    assert_eq!(
        stdout(&skipped),
        "Voucher,Destination,Operator.Name\ns0NI1fF0,Greece,\n"
    );
}

#[test]
fn explain_describes_reference_joins() {
    let out = treesql(&[
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--explain",
        "--query",
        TRANSFER_QUERY,
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let plan = stdout(&out);
    assert!(plan.contains("scan Booking"));
    assert!(plan.contains("join Service.Transfer.Route.From_Location_id -> Location.Id (range Location)"));
    assert!(plan.contains("within range"));
    assert!(plan.contains("filter: Service.Type = 'transfer'"));
}

#[test]
fn output_is_byte_stable_across_runs() {
    let args = [
        "query",
        "--schema",
        &fixture("booking.schema.json"),
        "--data",
        &fixture("booking.data.json"),
        "--query",
        TRANSFER_QUERY,
    ];
    let first = treesql(&args);
    let second = treesql(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}
