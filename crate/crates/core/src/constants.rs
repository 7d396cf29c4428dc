//! Built-in data, parsed once from `data/constants.toml`.

use serde::Deserialize;
use std::sync::OnceLock;

const SOURCE: &str = include_str!("../data/constants.toml");

#[derive(Clone, Debug, Deserialize)]
pub struct Constants {
    pub counterexample: CounterexampleData,
    pub gns_example: GnsExample,
    pub oracle: OracleDefaults,
    pub grid: GridDefaults,
}

/// Diagonal entries for every state; `omega[l]` is indexed by `β·c + γ`.
#[derive(Clone, Debug, Deserialize)]
pub struct CounterexampleData {
    pub alpha: f64,
    pub a: Vec<usize>,
    pub b: Vec<Vec<usize>>,
    pub c: Vec<usize>,
    pub delta: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct GnsExample {
    pub s: f64,
    pub dim: usize,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct OracleDefaults {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct GridDefaults {
    pub resolution: usize,
}

pub fn constants() -> &'static Constants {
    static CELL: OnceLock<Constants> = OnceLock::new();
    CELL.get_or_init(|| toml::from_str(SOURCE).expect("data/constants.toml is well formed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_file_parses() {
        let k = constants();
        assert_eq!(k.counterexample.omega.len(), 2);
        assert!(k.counterexample.omega.iter().all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-15));
        assert_eq!(k.gns_example.powers, vec![2, 4, 6]);
    }
}
