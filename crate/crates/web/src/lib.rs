//! Browser bindings for the `www/` demo page.
//!
//! Each export takes plain numbers or comma-separated text and returns a JSON
//! string, so the page needs no generated TypeScript types.

use lazylin::bench::{build_expression, max_relative_error, EXPRESSION_FORMS};
use lazylin::{greedy_chain_order, naive_evaluate, render_trace, rewrite, with_trace, ChainOrder};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest size the page may request; naive evaluation is cubic.
pub const MAX_SIZE: usize = 300;

fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{}` is not a positive integer", p.trim()))
        })
        .collect()
}

fn check_size(m: usize) -> Result<(), String> {
    if (4..=MAX_SIZE).contains(&m) {
        Ok(())
    } else {
        Err(format!("size must be between 4 and {MAX_SIZE}"))
    }
}

/// Tree, rule log, plan, trace and counters for one expression.
pub fn explain_json(expr_id: usize, m: usize, seed: u64) -> Result<Value, String> {
    check_size(m)?;
    let case = build_expression(expr_id, m, seed).map_err(|e| e.to_string())?;
    let e = case.expr();
    let plan = rewrite(&e).map_err(|e| e.to_string())?;
    let fast = with_trace(|c| plan.execute(c));
    let slow = with_trace(|c| naive_evaluate(&e, c));
    let (x, y) = (
        fast.result.map_err(|e| e.to_string())?,
        slow.result.map_err(|e| e.to_string())?,
    );
    Ok(json!({
        "form": EXPRESSION_FORMS[expr_id - 1],
        "tree": e.to_string(),
        "rules": plan.rule_log_string(),
        "plan": plan.to_string(),
        "trace": render_trace(&fast.events),
        "optimised": { "flops": fast.counters.flops, "allocations": fast.counters.allocations,
                       "kernel_calls": fast.counters.kernel_calls },
        "naive": { "flops": slow.counters.flops, "allocations": slow.counters.allocations,
                   "kernel_calls": slow.counters.kernel_calls },
        "max_relative_error": max_relative_error(&x, &y),
    }))
}

/// Cheapest parenthesisation by dynamic programming, in multiply-adds.
fn optimal_cost(dims: &[(usize, usize)]) -> u64 {
    let n = dims.len();
    let mut cost = vec![vec![0u64; n]; n];
    for len in 1..n {
        for i in 0..n - len {
            let j = i + len;
            cost[i][j] = (i..j)
                .map(|k| cost[i][k] + cost[k + 1][j] + (dims[i].0 * dims[k].1 * dims[j].1) as u64)
                .min()
                .unwrap_or(0);
        }
    }
    cost[0][n - 1]
}

/// Compare orders for a chain given as `d0,d1,...,dn` (factor `i` is `d_i × d_(i+1)`).
pub fn chain_order_json(dims_text: &str) -> Result<Value, String> {
    let d = parse_list(dims_text)?;
    if d.len() < 3 || d.len() > 27 || d.contains(&0) {
        return Err("give between 3 and 27 positive dimensions".into());
    }
    let dims: Vec<(usize, usize)> = d.windows(2).map(|w| (w[0], w[1])).collect();
    let n = dims.len();
    let describe = |order: &ChainOrder| {
        json!({ "order": order.parenthesize(n), "cost": order.cost(&dims) })
    };
    let right_to_left = ChainOrder {
        merges: (0..n.saturating_sub(1)).rev().collect(),
    };
    Ok(json!({
        "greedy": describe(&greedy_chain_order(&dims)),
        "left_to_right": describe(&ChainOrder::left_to_right(n)),
        "right_to_left": describe(&right_to_left),
        "optimum": optimal_cost(&dims),
    }))
}

/// Counted flops of both arms across sizes.
pub fn flop_curve_json(expr_id: usize, sizes_text: &str, seed: u64) -> Result<Value, String> {
    let sizes = parse_list(sizes_text)?;
    if sizes.is_empty() {
        return Err("give at least one size".into());
    }
    let mut points = Vec::new();
    for m in sizes {
        check_size(m)?;
        let case = build_expression(expr_id, m, seed).map_err(|e| e.to_string())?;
        let e = case.expr();
        let fast = with_trace(|c| lazylin::evaluate(&e, c));
        let slow = with_trace(|c| naive_evaluate(&e, c));
        fast.result.map_err(|e| e.to_string())?;
        slow.result.map_err(|e| e.to_string())?;
        points.push(json!({
            "size": m,
            "naive": slow.counters.flops,
            "optimised": fast.counters.flops,
        }));
    }
    Ok(json!({ "form": EXPRESSION_FORMS[expr_id - 1], "points": points }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn explain(expr_id: usize, m: usize, seed: u64) -> Result<String, JsError> {
    to_js(explain_json(expr_id, m, seed))
}

#[wasm_bindgen]
pub fn chain_order(dims: &str) -> Result<String, JsError> {
    to_js(chain_order_json(dims))
}

#[wasm_bindgen]
pub fn flop_curve(expr_id: usize, sizes: &str, seed: u64) -> Result<String, JsError> {
    to_js(flop_curve_json(expr_id, sizes, seed))
}
