//! Browser demo for the car-following style toolkit: an interactive IDM
//! simulator, offline style learning on a synthetic corpus, and live
//! recognition-plus-prediction on a noisy window.
//!
//! The wasm exports speak JSON strings both ways; `api` holds the actual
//! logic and compiles (and is tested) on every target.

pub mod api;

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    use crate::api;

    fn respond<T: serde::Serialize>(
        result: drivestyle::error::Result<T>,
    ) -> Result<String, JsValue> {
        match result {
            Ok(value) => serde_json::to_string(&value)
                .map_err(|e| JsValue::from_str(&format!("serialization failure: {e}"))),
            Err(e) => Err(JsValue::from_str(&e.to_string())),
        }
    }

    fn parse<T: serde::de::DeserializeOwned>(request: &str) -> Result<T, JsValue> {
        serde_json::from_str(request).map_err(|e| JsValue::from_str(&format!("bad request: {e}")))
    }

    /// Car-following simulation with adjustable IDM parameters.
    #[wasm_bindgen]
    pub fn simulate_following(request: &str) -> Result<String, JsValue> {
        respond(api::simulate_following(&parse(request)?))
    }

    /// Offline stage on a synthetic corpus: PCA scatter, elbow curve, and
    /// calibrated per-cluster parameters.
    #[wasm_bindgen]
    pub fn learn_styles_demo(request: &str) -> Result<String, JsValue> {
        respond(api::learn_styles_demo(&parse(request)?))
    }

    /// Online recognition on a noisy window plus the 5 s prediction each
    /// prototype would make.
    #[wasm_bindgen]
    pub fn recognize_demo(request: &str) -> Result<String, JsValue> {
        respond(api::recognize_demo(&parse(request)?))
    }
}
