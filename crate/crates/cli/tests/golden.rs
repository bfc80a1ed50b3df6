mod common;

use common::{check_case, golden_cases};

#[test]
fn bundled_specs_match_golden_output() {
    let failures: Vec<String> = golden_cases()
        .iter()
        .filter_map(|c| check_case(c).err())
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
