//! Direct access to the closed-form results: `catmem oracle <query> key=value...`.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Result};
use catmem::mode::transfer_amplitude;
use catmem::oracle::{
    cat_variance, decohered_density, evolved_wigner_field, ideal_p_p, ideal_p_x, q_function,
    t_p_bound, t_positive, DecoherenceParams,
};
use catmem::signatures::{wigner_negativity, WignerGrid};
use catmem::SystemParams;
use serde_json::{json, Value};

/// Query names with their parameters and defaults.
pub const QUERIES: [(&str, &str); 9] = [
    ("t_positive", "n_bar=0 gamma=1"),
    ("t_p_bound", "n_bar=1 gamma=1"),
    ("cat_variance", "alpha0=2"),
    ("transfer_amplitude", "gamma_int=0 g_eff=0.6 gamma_m=17.5/170e3"),
    ("decohered_density", "alpha0=2 gamma_t=0"),
    ("negativity", "alpha0=2 gamma_t=0 n_bar=0"),
    ("q_function", "gamma_t=0 n_bar=0"),
    ("ideal_p_x", "x=0 alpha0=2"),
    ("ideal_p_p", "p=0 alpha0=2"),
];

pub fn parse_params(args: &[String]) -> Result<BTreeMap<String, f64>> {
    args.iter()
        .map(|a| {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got `{a}`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| anyhow!("`{k}` needs a number, got `{v}`"))?;
            Ok((k.trim().to_owned(), v))
        })
        .collect()
}

struct Params {
    map: BTreeMap<String, f64>,
    used: Vec<&'static str>,
}

impl Params {
    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        self.map.get(key).copied().unwrap_or(default)
    }

    fn finish(&self) -> Result<Value> {
        if let Some(k) = self.map.keys().find(|k| !self.used.contains(&k.as_str())) {
            bail!("unknown parameter `{k}`; expected one of {}", self.used.join(", "));
        }
        let mut out = serde_json::Map::new();
        for k in &self.used {
            if let Some(v) = self.map.get(*k) {
                out.insert((*k).to_owned(), json!(v));
            }
        }
        Ok(Value::Object(out))
    }
}

/// Evaluate `query`; the result carries the query name, the parameters given
/// and the value(s).
pub fn evaluate(query: &str, params: BTreeMap<String, f64>) -> Result<Value> {
    let mut p = Params { map: params, used: Vec::new() };
    let value = match query {
        "t_positive" => json!(t_positive(p.get("n_bar", 0.0), p.get("gamma", 1.0))?),
        "t_p_bound" => {
            let t = t_p_bound(p.get("n_bar", 1.0), p.get("gamma", 1.0))?;
            if t.is_infinite() {
                json!("inf")
            } else {
                json!(t)
            }
        }
        "cat_variance" => json!(cat_variance(p.get("alpha0", 2.0))),
        "transfer_amplitude" => {
            let gi = p.get("gamma_int", 0.0);
            let sp = SystemParams {
                gamma_ext: 1.0 - gi,
                gamma_int: gi,
                g_eff: p.get("g_eff", catmem::model::REFERENCE_G_EFF),
                gamma_m: p.get("gamma_m", catmem::model::REFERENCE_GAMMA_M),
                ..SystemParams::reference()
            };
            sp.validate()?;
            let t = transfer_amplitude(&sp)?;
            json!({ "single_pass": t, "round_trip": t * t })
        }
        "decohered_density" => {
            let d = DecoherenceParams::scaled(p.get("gamma_t", 0.0), 0.0)?;
            let r = decohered_density(p.get("alpha0", 2.0), &d);
            json!({ "amplitude": r.amplitude, "coherence": r.coherence })
        }
        "negativity" => {
            let a0 = p.get("alpha0", 2.0);
            let d = DecoherenceParams::scaled(p.get("gamma_t", 0.0), p.get("n_bar", 0.0))?;
            let g = WignerGrid::default_for(a0)?;
            json!(wigner_negativity(&evolved_wigner_field(g.x, g.y, a0, &d)?))
        }
        "q_function" => {
            json!(q_function(&DecoherenceParams::scaled(p.get("gamma_t", 0.0), p.get("n_bar", 0.0))?))
        }
        "ideal_p_x" => json!(ideal_p_x(p.get("x", 0.0), p.get("alpha0", 2.0))),
        "ideal_p_p" => json!(ideal_p_p(p.get("p", 0.0), p.get("alpha0", 2.0))),
        other => bail!(
            "unknown oracle query `{other}`; available: {}",
            QUERIES.iter().map(|(q, _)| *q).collect::<Vec<_>>().join(", ")
        ),
    };
    Ok(json!({ "query": query, "params": p.finish()?, "value": value }))
}
