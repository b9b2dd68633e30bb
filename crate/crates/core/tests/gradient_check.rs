mod common;

use common::{check_case, random_case, MAX_RELATIVE_ERROR};

#[test]
fn bptt_matches_central_differences_on_random_tiny_nets() {
    for seed in 0..40 {
        let case = random_case(seed);
        let report = check_case(&case);
        assert!(
            report.worst < MAX_RELATIVE_ERROR,
            "seed {seed}: worst relative error {:.3e} at {}",
            report.worst,
            report.worst_at
        );
    }
}
