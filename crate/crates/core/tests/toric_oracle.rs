mod common;

#[test]
fn toric_frame_matches_state_vector() {
    common::checks::toric_replay(200, 40, 3).unwrap();
}
