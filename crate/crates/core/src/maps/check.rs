use super::{Bridge, DegenerateMap, MAX_SLOPE};
use crate::report::CheckRow;
use serde::{Deserialize, Serialize};

/// Shape of a bridge sampled on a uniform grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BridgeProfile {
    pub min_d1: f64,
    pub max_d1: f64,
    pub min_abs_d1: f64,
    pub max_abs_d1: f64,
    pub max_abs_d2: f64,
    pub d1_monotone: bool,
    pub d2_monotone: bool,
}

fn monotone(v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let (mut up, mut down) = (false, false);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        up |= d > tol;
        down |= d < -tol;
    }
    !(up && down)
}

pub fn bridge_profile(b: &Bridge, samples: usize) -> BridgeProfile {
    let n = samples.max(2);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        let x = b.lo + (b.hi - b.lo) * i as f64 / (n - 1) as f64;
        let j = b.jet(x);
        d1.push(j.d1);
        d2.push(j.d2);
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().fold(init, |a, &x| f(a, x));
    let abs1: Vec<f64> = d1.iter().map(|x| x.abs()).collect();
    BridgeProfile {
        min_d1: fold(&d1, f64::min, f64::INFINITY),
        max_d1: fold(&d1, f64::max, f64::NEG_INFINITY),
        min_abs_d1: fold(&abs1, f64::min, f64::INFINITY),
        max_abs_d1: fold(&abs1, f64::max, 0.0),
        max_abs_d2: d2.iter().fold(0.0, |a, x| a.max(x.abs())),
        d1_monotone: monotone(&d1),
        d2_monotone: monotone(&d2),
    }
}

/// Grid statistics of a map, `grid` points per piece.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapDiagnostics {
    pub grid: usize,
    /// `|h'|` at the two inner endpoints.
    pub endpoint_slopes: [f64; 2],
    pub max_abs_d1: f64,
    pub max_abs_d2: f64,
    pub min_abs_d1_outside_inner: f64,
    /// `|h''|` at the inner endpoints.
    pub inner_edge_d2: f64,
    pub bridges: Vec<BridgeProfile>,
}

impl MapDiagnostics {
    pub fn compute(map: &DegenerateMap, grid: usize) -> Self {
        let n = grid.max(2);
        let pieces = map.pieces();
        let (mut max1, mut max2, mut min_out) = (0.0f64, 0.0f64, f64::INFINITY);
        for (idx, &(lo, hi)) in pieces.iter().enumerate() {
            let inner = idx == 2;
            for i in 0..n {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let j = match idx {
                    1 => map.bridge_left.jet(x),
                    3 => map.bridge_right.jet(x),
                    _ => map.lift_jet(x),
                };
                max1 = max1.max(j.d1.abs());
                max2 = max2.max(j.d2.abs());
                if !inner {
                    min_out = min_out.min(j.d1.abs());
                }
            }
        }
        let w = map.spec.inner_half_width;
        let c = map.critical_point();
        let edge = |x: f64| map.lift_jet(x);
        MapDiagnostics {
            grid: n,
            endpoint_slopes: [edge(c - w).d1.abs(), edge(c + w).d1.abs()],
            max_abs_d1: max1,
            max_abs_d2: max2,
            min_abs_d1_outside_inner: min_out,
            inner_edge_d2: edge(c + w).d2.abs(),
            bridges: vec![
                bridge_profile(&map.bridge_left, n),
                bridge_profile(&map.bridge_right, n),
            ],
        }
    }
}

/// Shape checks of a constructed map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapCheck {
    pub order: u32,
    pub endpoint_slope_error: f64,
    pub max_abs_d1: f64,
    pub max_abs_d2: f64,
    /// `7 (D - 1) / (4 |I''|) * (1 + 1e-6)`.
    pub d2_bound: f64,
    pub bridge_d1_monotone: bool,
    pub bridge_d2_monotone: bool,
}

impl MapCheck {
    pub fn rows(&self) -> Vec<CheckRow> {
        let d = self.order;
        vec![
            CheckRow::new(format!("D={d} endpoint slope error"), self.endpoint_slope_error, 1e-9),
            CheckRow::new(format!("D={d} sup|h'|"), self.max_abs_d1, MAX_SLOPE),
            CheckRow::new(format!("D={d} sup|h''|"), self.max_abs_d2, self.d2_bound),
            CheckRow::flag(format!("D={d} bridge h' monotone"), self.bridge_d1_monotone),
            CheckRow::flag(format!("D={d} bridge h'' monotone"), self.bridge_d2_monotone),
        ]
    }

    pub fn holds(&self) -> bool {
        self.rows().iter().all(|r| r.holds)
    }
}

pub fn check_map(map: &DegenerateMap, grid: usize) -> MapCheck {
    let diag = if map.diagnostics.grid == grid {
        map.diagnostics.clone()
    } else {
        MapDiagnostics::compute(map, grid)
    };
    let d = map.order() as f64;
    let width = 2.0 * map.spec.inner_half_width;
    let target = map.spec.slope_target;
    MapCheck {
        order: map.order(),
        endpoint_slope_error: diag
            .endpoint_slopes
            .iter()
            .fold(0.0, |a: f64, s| a.max((s - target).abs())),
        max_abs_d1: diag.max_abs_d1,
        max_abs_d2: diag.max_abs_d2,
        d2_bound: 7.0 * (d - 1.0) / (4.0 * width) * (1.0 + 1e-6),
        bridge_d1_monotone: diag.bridges.iter().all(|b| b.d1_monotone),
        bridge_d2_monotone: diag.bridges.iter().all(|b| b.d2_monotone),
    }
}
