const BUDGETS: &str = "period,budget_id,price_1,price_2,expenditure\n1,1,2,1,1\n1,2,1,2,1\n2,1,2,1,1\n2,2,1,2,1\n";

fn rho(probs: [f64; 4]) -> String {
    let mut s = String::from("menu_path,choice_path,prob,count\n");
    for m in ["1|1", "1|2", "2|1", "2|2"] {
        for (c, p) in ["1|1", "1|2", "2|1", "2|2"].iter().zip(probs) {
            s.push_str(&format!("{},{},{},\n", m, c, p));
        }
    }
    s
}

#[test]
fn patches_lists_both_periods() {
    let v: serde_json::Value = serde_json::from_str(&drum_wasm::patches(BUDGETS).unwrap()).unwrap();
    assert!(v.to_string().contains("patches"));
}

#[test]
fn check_accepts_menu_independent_data() {
    let out = drum_wasm::check(BUDGETS, &rho([0.5, 0.1, 0.1, 0.3]), 1e-9).unwrap();
    let v: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(v.len(), 3);
    assert!(v.iter().all(|r| r["passed"].as_bool().unwrap()), "{}", out);
}

#[test]
fn bounds_of_constant_functional() {
    let out = drum_wasm::bounds(BUDGETS, &rho([0.5, 0.1, 0.1, 0.3]), &[3.0, 1.0, 1.0, 3.0], 0, &[0.4, 0.4], &[0.4, 0.4])
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["lower"].as_f64().unwrap() - 0.4).abs() < 1e-9);
    assert!((v["upper"].as_f64().unwrap() - 0.4).abs() < 1e-9);
}

#[test]
fn bad_prices_are_an_error() {
    assert!(drum_wasm::bounds(BUDGETS, &rho([0.5, 0.1, 0.1, 0.3]), &[3.0], 0, &[1.0], &[1.0]).is_err());
}
