//! Browser bindings: sample a Gibbs measure, bracket ball measures, and watch a
//! recurrence count converge.

use serde_json::Value;
use wasm_bindgen::prelude::*;

use selfconf::dynamics::sample_word;
use selfconf::experiments::{recurrence_modified_run, RunOptions};
use selfconf::gibbs::{GibbsBackend, PotentialSpec};
use selfconf::ifs::{IfsSystem, PointRd, SystemSpec};
use selfconf::measure::{ball_measure, RadiusFunction};
use selfconf::symbolic::CodedOrbit;

const DEPTH: usize = 40;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A system with its measure, built from `{"system": ..., "potential": ...}`
/// in the CLI config format.
#[wasm_bindgen]
pub struct Model {
    system: IfsSystem,
    backend: GibbsBackend,
}

#[wasm_bindgen]
impl Model {
    #[wasm_bindgen(constructor)]
    pub fn new(json: &str) -> Result<Model, JsError> {
        let v: Value = serde_json::from_str(json).map_err(err)?;
        let spec: SystemSpec = serde_json::from_value(v["system"].clone()).map_err(err)?;
        let potential: PotentialSpec = serde_json::from_value(v["potential"].clone()).map_err(err)?;
        let system = IfsSystem::from_spec(spec).map_err(err)?;
        let (backend, _) = GibbsBackend::build(&system, &potential, None).map_err(err)?;
        Ok(Model { system, backend })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// `count` μ-random points, flattened as `[x0, (y0,) x1, ...]`.
    pub fn sample_points(&self, count: u32, seed: u64) -> Vec<f64> {
        let len = self.system.tail_depth(1e-9) + 1;
        (0..u64::from(count))
            .flat_map(|id| {
                let orbit = CodedOrbit::new(&self.system, sample_word(&self.backend, seed, id, len));
                orbit.point(0).coords().to_vec()
            })
            .collect()
    }

    /// Certified `[lower, upper]` of `μ(B(x, r))` for each radius, flattened.
    pub fn ball_curve(&self, x: f64, y: f64, radii: &[f64]) -> Result<Vec<f64>, JsError> {
        let centre = if self.system.dim() == 1 { PointRd::new1(x) } else { PointRd::new2(x, y) };
        let mut out = Vec::with_capacity(2 * radii.len());
        for &r in radii {
            let b = ball_measure(&self.system, &self.backend, &centre, r, DEPTH).map_err(err)?;
            out.extend([b.lower, b.upper]);
        }
        Ok(out)
    }

    /// Modified recurrence with `ψ(n) = n^{-beta}` for one sample orbit:
    /// `[N, count / Σψ]` pairs at `steps` evenly spaced checkpoints.
    pub fn recurrence_ratio(&self, n: u32, steps: u32, beta: f64, seed: u64) -> Result<Vec<f64>, JsError> {
        let n = u64::from(n.max(1));
        let steps = u64::from(steps.clamp(1, 1000)).min(n);
        let mut opts = RunOptions::new(n, 1, seed);
        opts.checkpoints = Some((1..=steps).map(|k| k * n / steps).collect());
        let psi = RadiusFunction::Power { c: 1.0, beta };
        let recs = recurrence_modified_run(&self.system, &self.backend, &psi, &opts).map_err(err)?;
        Ok(recs[0].checkpoints.iter().flat_map(|c| [c.n as f64, c.count as f64 / c.psi_sum]).collect())
    }
}
