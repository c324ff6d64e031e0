use lazylin_web::{chain_order_json, explain_json, flop_curve_json};

#[test]
fn explain_weighted_sum() {
    let v = explain_json(1, 8, 3).unwrap();
    assert_eq!(v["rules"], "R1");
    assert_eq!(v["optimised"]["allocations"], 1);
    assert_eq!(v["naive"]["allocations"], 3);
    assert_eq!(v["max_relative_error"], 0.0);
    assert!(v["trace"].as_str().unwrap().contains("kernel: fused_axpby_n [8x8, terms=2]"));
    assert!(v["tree"].as_str().unwrap().starts_with("Add(ScalarMul(0.4,Leaf#"));
}

#[test]
fn explain_every_form() {
    for id in 1..=10 {
        let v = explain_json(id, 12, 1).unwrap();
        assert!(v["max_relative_error"].as_f64().unwrap() <= 1e-8, "({id})");
        assert_ne!(v["rules"], "NONE", "({id})");
    }
}

#[test]
fn explain_rejects_bad_input() {
    assert!(explain_json(0, 8, 1).is_err());
    assert!(explain_json(1, 2, 1).is_err());
    assert!(explain_json(1, 10_000, 1).is_err());
}

#[test]
fn chain_orders_for_decreasing_family() {
    // 12x12, 12x6, 6x4, 4x3
    let v = chain_order_json("12,12,6,4,3").unwrap();
    assert_eq!(v["greedy"]["order"], "(A(B(CD)))");
    assert_eq!(v["greedy"]["cost"], 720);
    assert_eq!(v["right_to_left"]["order"], "(A(B(CD)))");
    assert_eq!(v["left_to_right"]["order"], "(((AB)C)D)");
    assert_eq!(v["left_to_right"]["cost"], 1296);
    assert_eq!(v["optimum"], 720);
}

#[test]
fn greedy_is_a_heuristic() {
    // 10x1, 1x10, 10x100: both first products have 100 elements, the tie goes
    // left and (AB)C costs 100 + 10000 against 1000 + 1000 for A(BC)
    let v = chain_order_json("10,1,10,100").unwrap();
    assert_eq!(v["greedy"]["order"], "((AB)C)");
    assert_eq!(v["greedy"]["cost"], 10100);
    assert_eq!(v["optimum"], 2000);
    assert!(chain_order_json("3,4").is_err());
    assert!(chain_order_json("3,x,4").is_err());
}

#[test]
fn flop_curve_grows() {
    let v = flop_curve_json(5, "10,20,40", 1).unwrap();
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 3);
    // trace(A·B): naive 2m³ + m, optimised 2m²
    assert_eq!(pts[0]["naive"], 2 * 1000 + 10);
    assert_eq!(pts[0]["optimised"], 2 * 100);
    assert_eq!(pts[2]["optimised"], 2 * 1600);
}
