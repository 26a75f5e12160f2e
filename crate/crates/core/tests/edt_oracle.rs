mod common;

#[test]
fn squared_edt_equals_brute_force() {
    common::checks::edt_matches_oracle(9, 50).unwrap();
}
