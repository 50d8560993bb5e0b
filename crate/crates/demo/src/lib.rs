//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript glue beyond `wasm-bindgen`'s loader.

use num_traits::ToPrimitive;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use quadcorr::corrsum::{build_rep_table, deviation_curve, BoxBound, TableOptions};
use quadcorr::{c_constant, index_gamma, FieldData};

/// Tables larger than this are refused so the tab stays responsive.
const DEMO_BUDGET: u64 = 64 << 20;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("serialisable")
}

fn field(d: u32) -> Result<FieldData, String> {
    FieldData::new(d.into()).map_err(|e| e.to_string())
}

fn options() -> TableOptions {
    TableOptions {
        threads: 1,
        memory_budget: DEMO_BUDGET,
        fold: None,
    }
}

#[derive(Serialize)]
struct FieldInfo {
    d: u64,
    delta: u64,
    c_num: String,
    c_den: String,
    c_value: f64,
    index: i64,
}

/// `C_D`, the discriminant and the index of Γ for one field.
#[wasm_bindgen]
pub fn field_info(d: u32) -> String {
    respond(field(d).map(|f| {
        let c = c_constant(&f);
        FieldInfo {
            d: f.d(),
            delta: f.delta(),
            c_value: c.to_f64().unwrap_or(f64::NAN),
            c_num: c.numer().to_string(),
            c_den: c.denom().to_string(),
            index: index_gamma(&f),
        }
    }))
}

#[derive(Serialize)]
struct Grid {
    d: u64,
    scale: i64,
    sqrt_d: f64,
    /// `[x, y, r]` with `λ = (x + y√D)/scale`.
    cells: Vec<[i64; 3]>,
}

/// `r(λ)` for all λ with `0 ≤ λ, λ^σ < bound + 1`.
#[wasm_bindgen]
pub fn rep_grid(d: u32, bound: u32) -> String {
    respond((|| {
        let f = field(d)?;
        let b = BoxBound::integer(bound as u64).map_err(|e| e.to_string())?;
        let t = build_rep_table(&f, &b, &b, &options()).map_err(|e| e.to_string())?;
        Ok(Grid {
            d: f.d(),
            scale: t.scale(),
            sqrt_d: f.sqrt_d(),
            cells: t.cells().map(|(u, v, r)| [u, v, r as i64]).collect(),
        })
    })())
}

#[derive(Serialize)]
struct Curve {
    d: u64,
    c_value: f64,
    n: Vec<String>,
    /// `(N(V,V) − C_D V²) / V^{3/2}` for `V = 1..=xmax`.
    normalised: Vec<f64>,
}

/// `N(V, V)` and its normalised deviation for `V = 1..=xmax`.
#[wasm_bindgen]
pub fn deviation(d: u32, xmax: u32) -> String {
    respond((|| {
        let f = field(d)?;
        let curve = deviation_curve(&f, xmax as u64, &options()).map_err(|e| e.to_string())?;
        let c_value = curve.c_constant.to_f64().unwrap_or(f64::NAN);
        let normalised = (1..=xmax as usize)
            .map(|v| {
                let v_f = v as f64;
                (curve.n[v] as f64 - c_value * v_f * v_f) / v_f.powf(1.5)
            })
            .collect();
        Ok(Curve {
            d: f.d(),
            c_value,
            n: curve.n[1..].iter().map(|n| n.to_string()).collect(),
            normalised,
        })
    })())
}
