//! Browser bindings: budget patch geometry, deterministic checks, and
//! counterfactual bounds. Inputs are the CSV formats the CLI reads; outputs
//! are JSON strings.

use drum::checks::{check_d_monotonicity, check_stability, cone_membership};
use drum::counterfactual::{bound_functional, CounterfactualProblem};
use drum::geometry::{Budget, DemandGeometry};
use drum::io;
use drum::repr::DrumModel;
use wasm_bindgen::prelude::*;

fn geometry(budgets_csv: &str) -> drum::Result<DemandGeometry> {
    DemandGeometry::from_budgets(&io::read_budgets(budgets_csv.as_bytes())?)
}

/// Patches of every period's budgets, as JSON.
pub fn patches(budgets_csv: &str) -> drum::Result<String> {
    io::patches_json(&geometry(budgets_csv)?)
}

/// Stability, D-monotonicity and cone membership of a population choice function.
pub fn check(budgets_csv: &str, rho_csv: &str, tolerance: f64) -> drum::Result<String> {
    let g = geometry(budgets_csv)?;
    let universe = g.universe()?;
    let rho = io::read_rho(rho_csv.as_bytes(), universe.menu_sizes())?;
    let a = DrumModel::demand(g)?.dynamic(rho.space())?;
    let reports = vec![
        check_stability(&rho, tolerance),
        check_d_monotonicity(&rho, &universe, tolerance),
        cone_membership(&rho, &a)?.report,
    ];
    Ok(serde_json::to_string(&reports).expect("reports serialize"))
}

/// Bounds on the mean of a per-patch functional at a next-period budget.
///
/// `new_prices` holds the price vectors of the next-period budgets back to
/// back, `goods` entries each. `target` is 0-based.
pub fn bounds(
    budgets_csv: &str,
    rho_csv: &str,
    new_prices: &[f64],
    target: usize,
    g_lower: &[f64],
    g_upper: &[f64],
) -> drum::Result<String> {
    let geometry = geometry(budgets_csv)?;
    let rho = io::read_rho(rho_csv.as_bytes(), geometry.universe()?.menu_sizes())?;
    let goods = geometry.periods[0].budgets[0].goods();
    if new_prices.is_empty() || new_prices.len() % goods != 0 {
        return Err(drum::DrumError::Parameter(format!("prices must come in groups of {}", goods)));
    }
    let new_budgets = new_prices
        .chunks(goods)
        .enumerate()
        .map(|(k, p)| Budget::new(geometry.horizon(), k, p.to_vec(), 1.0))
        .collect::<drum::Result<Vec<_>>>()?;
    let problem = CounterfactualProblem {
        rho,
        geometry,
        new_budgets,
        target,
        g_lower: g_lower.to_vec(),
        g_upper: g_upper.to_vec(),
        condition: None,
        project: false,
    };
    Ok(serde_json::to_string(&bound_functional(&problem)?).expect("report serializes"))
}

fn js(r: drum::Result<String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = patches)]
pub fn patches_js(budgets_csv: &str) -> Result<String, JsValue> {
    js(patches(budgets_csv))
}

#[wasm_bindgen(js_name = check)]
pub fn check_js(budgets_csv: &str, rho_csv: &str, tolerance: f64) -> Result<String, JsValue> {
    js(check(budgets_csv, rho_csv, tolerance))
}

#[wasm_bindgen(js_name = bounds)]
pub fn bounds_js(
    budgets_csv: &str,
    rho_csv: &str,
    new_prices: &[f64],
    target: usize,
    g_lower: &[f64],
    g_upper: &[f64],
) -> Result<String, JsValue> {
    js(bounds(budgets_csv, rho_csv, new_prices, target, g_lower, g_upper))
}
