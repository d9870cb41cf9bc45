mod common;

use common::properties;

macro_rules! property_tests {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                properties::$name().unwrap();
            }
        )*
    };
}

property_tests!(
    information_toy,
    similarity_psd,
    streaming_matches_naive,
    exact_edge_counts_with_ties,
    auc_matches_brute_force,
    sgns_gradient_check,
    split_invariants,
    blend_boundaries,
    graph_round_trip,
);
