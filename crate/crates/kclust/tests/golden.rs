use kclust::graph::{build_weighted, SourceOrder};
use kclust::Instance;

/// Facilities at 0, 1 and 3 with openings ½, ½, 1: the two half-open
/// facilities feed each other, the open one feeds itself.
#[test]
fn weighted_edge_list_matches_fixture() {
    let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
    let inst = Instance::euclidean(&pts, &pts, 2, 1.0).unwrap();
    let g = build_weighted(&[0.5, 0.5, 1.0], &SourceOrder::new(&inst)).unwrap();
    let got = serde_json::to_value(g.edge_list()).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(include_str!("golden/weighted_0_1_3.json")).unwrap();
    assert_eq!(got, want);
}
