//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Results cross the boundary as JSON strings.

pub mod ops;

use wasm_bindgen::prelude::*;

fn to_js<T: serde::Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// `[{id, center}, ...]` in pick order.
#[wasm_bindgen(js_name = kmeansppSelect)]
pub fn kmeanspp_select(
    xy: &[f64],
    k: usize,
    gamma: usize,
    seed: u64,
    uniform_first: bool,
) -> Result<String, JsError> {
    to_js(ops::kmeanspp(xy, k, gamma, seed, uniform_first))
}

/// `{entropies, mu, sigma, target, selected}`.
#[wasm_bindgen(js_name = peZone)]
pub fn pe_zone(probs: &[f64], classes: usize, lambda: f64, k: usize) -> Result<String, JsError> {
    to_js(ops::pe_zone(probs, classes, lambda, k))
}

#[wasm_bindgen(js_name = sentenceEntropy)]
pub fn sentence_entropy(corpus: &str, sentence: &str, order: usize) -> Result<f64, JsError> {
    ops::sentence_entropy(corpus, sentence, order).map_err(|e| JsError::new(&e))
}
