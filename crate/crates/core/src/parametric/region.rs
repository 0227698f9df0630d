//! Grid-based classification of the parameter space.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{instantiate_weights, ParamValuation, ParametricError};
use crate::checker::{solve_chain_with, CheckError, Quantity, SolveOptions, SolverConfig};
use crate::explorer::{ExplorationConfig, Explorer};
use crate::frontend::{check_property, Program, Property};
use crate::model::{ChainView, PartialModel, INITIAL_STATE};
use crate::scalar::{parse_rational, rational_to_f64};
use crate::semantics::{CompiledProgram, RewardFn};
use crate::Rational;

/// One grid dimension: `steps` equal cells over `[lo, hi]`, sampled at
/// their centers. A degenerate axis with `lo = hi` is a single point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    #[serde(with = "crate::scalar::serde_rational")]
    pub lo: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub hi: Rational,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: &str, lo: Rational, hi: Rational, steps: usize) -> Result<Self, String> {
        if steps == 0 {
            return Err(format!("{name}: at least one step is needed"));
        }
        match lo.cmp(&hi) {
            Ordering::Greater => return Err(format!("{name}: empty interval")),
            Ordering::Equal if steps != 1 => return Err(format!("{name}: a point axis has one step")),
            _ => {}
        }
        Ok(Axis {
            name: name.to_string(),
            lo,
            hi,
            steps,
        })
    }

    pub fn point(name: &str, v: Rational) -> Self {
        Axis {
            name: name.to_string(),
            lo: v.clone(),
            hi: v,
            steps: 1,
        }
    }

    pub fn center(&self, i: usize) -> Rational {
        let width = (&self.hi - &self.lo) / Rational::from_integer((self.steps as i64).into());
        &self.lo + width * Rational::new((2 * i as i64 + 1).into(), 2.into())
    }
}

/// Parses `name:lo:hi:steps`, or `name=value` for a single point.
impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("`{s}`: expected name:lo:hi:steps or name=value");
        let num = |t: &str| parse_rational(t.trim()).ok_or_else(|| format!("`{t}` is not a number"));
        if let Some((name, v)) = s.split_once('=') {
            return Ok(Axis::point(name.trim(), num(v)?));
        }
        match s.split(':').collect::<Vec<_>>().as_slice() {
            [name, lo, hi, steps] => {
                let steps = steps
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{steps}` is not a step count"))?;
                Axis::new(name.trim(), num(lo)?, num(hi)?, steps)
            }
            _ => Err(bad()),
        }
    }
}

/// Parses a comma-separated list of axes, e.g. `f:0:1:50,b:0:1:50`.
pub fn parse_grid(spec: &str) -> Result<Vec<Axis>, String> {
    let axes: Vec<Axis> = spec.split(',').map(str::parse).collect::<Result<_, _>>()?;
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(format!("parameter {} appears twice", a.name));
        }
    }
    Ok(axes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CellClass {
    /// The lower bound already exceeds the threshold.
    Unsafe,
    Unknown,
    /// Some weight is not a probability at this point.
    IllDefined,
}

impl std::fmt::Display for CellClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellClass::Unsafe => "unsafe",
            CellClass::Unknown => "unknown",
            CellClass::IllDefined => "illdefined",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSample {
    pub iteration: usize,
    /// `None` when undefined or ill-defined.
    pub value: Option<f64>,
    /// Classification by this iteration's value alone.
    pub class: CellClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    #[serde(serialize_with = "crate::scalar::serde_rational::map")]
    pub point: ParamValuation,
    pub history: Vec<CellSample>,
    /// Unsafe once any iteration was unsafe.
    pub class: CellClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionGrid {
    pub axes: Vec<Axis>,
    /// Row-major, first axis slowest.
    pub cells: Vec<Cell>,
}

impl RegionGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        let mut points: Vec<ParamValuation> = vec![ParamValuation::new()];
        for a in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    (0..a.steps).map(move |i| {
                        let mut q = p.clone();
                        q.insert(a.name.clone(), a.center(i));
                        q
                    })
                })
                .collect();
        }
        let cells = points
            .into_iter()
            .map(|point| Cell {
                point,
                history: Vec::new(),
                class: CellClass::Unknown,
            })
            .collect();
        RegionGrid { axes, cells }
    }

    pub fn iterations(&self) -> usize {
        self.cells.first().map_or(0, |c| c.history.len())
    }

    /// Indices of cells classified unsafe by iteration `i`'s value alone.
    pub fn unsafe_at(&self, i: usize) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.history.get(i).is_some_and(|h| h.class == CellClass::Unsafe))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }

    /// One line per cell and iteration: parameters, iteration, value, class.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.axes {
            let _ = write!(out, "{},", a.name);
        }
        out.push_str("iteration,value,class\n");
        for c in &self.cells {
            for h in &c.history {
                for a in &self.axes {
                    let _ = write!(out, "{},", rational_to_f64(&c.point[&a.name]));
                }
                let v = h.value.map_or("undefined".to_string(), |v| v.to_string());
                let _ = writeln!(out, "{},{},{}", h.iteration, v, h.class);
            }
        }
        out
    }

    /// Classification of cell `k` after iteration index `i`, with unsafe
    /// verdicts carried forward.
    pub fn class_at(&self, k: usize, i: usize) -> CellClass {
        let h = &self.cells[k].history;
        if h.iter().take(i + 1).any(|s| s.class == CellClass::Unsafe) {
            CellClass::Unsafe
        } else {
            h.get(i).map_or(CellClass::Unknown, |s| s.class)
        }
    }

    /// SVG heatmap of the final classification.
    pub fn to_svg(&self) -> Option<String> {
        self.to_svg_at(self.iterations().checked_sub(1)?)
    }

    /// Self-contained SVG heatmap after iteration index `i`; two-axis grids
    /// only. The first axis runs left to right, the second bottom to top.
    pub fn to_svg_at(&self, i: usize) -> Option<String> {
        let [ax, ay] = self.axes.as_slice() else {
            return None;
        };
        let cell = 10usize;
        let (w, h) = (ax.steps * cell, ay.steps * cell);
        let margin = 40;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
            w + 2 * margin,
            h + 2 * margin
        );
        for k in 0..self.cells.len() {
            let (col, row) = (k / ay.steps, k % ay.steps);
            let color = match self.class_at(k, i) {
                CellClass::Unsafe => "#1f5fbf",
                CellClass::Unknown => "#f2f2f2",
                CellClass::IllDefined => "#999999",
            };
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{color}"/>"#,
                margin + col * cell,
                margin + h - (row + 1) * cell
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{margin}" y="{margin}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
        );
        let f = |r: &Rational| rational_to_f64(r);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{} ∈ [{}, {}]</text>"#,
            margin + w / 2,
            h + margin + 25,
            ax.name,
            f(&ax.lo),
            f(&ax.hi)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{} ∈ [{}, {}]</text>"#,
            margin + h / 2,
            margin + h / 2,
            ay.name,
            f(&ay.lo),
            f(&ay.hi)
        );
        s.push_str("</svg>\n");
        Some(s)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RegionScanConfig {
    pub exploration: ExplorationConfig,
    pub solver: SolverConfig,
    /// Number of unrolling rounds.
    pub iterations: usize,
}

fn cell_value(m: &PartialModel, view: &ChainView, u: &ParamValuation, opts: &SolveOptions) -> Result<Option<f64>, ParametricError> {
    let w: Vec<f64> = instantiate_weights(m, u)?.iter().map(rational_to_f64).collect();
    let num = solve_chain_with::<f64>(view, &Quantity::Reward, opts, &w).at(INITIAL_STATE);
    let bad = match m.bad_state() {
        Some(b) => solve_chain_with::<f64>(view, &Quantity::Reach(&[b]), opts, &w).at(INITIAL_STATE),
        None => 0.0,
    };
    let den = 1.0 - bad;
    Ok((den > 8.0 * f64::EPSILON).then(|| num / den))
}

/// Unrolls a parametric program and classifies every grid cell after each
/// round. Only upper-bound properties can be violated by a lower bound.
pub fn region_scan(
    program: &Program,
    prop: &Property,
    grid: RegionGrid,
    cfg: &RegionScanConfig,
) -> Result<RegionGrid, CheckError> {
    region_scan_with(program, prop, grid, cfg, |_, _| {})
}

/// Like [`region_scan`], calling `on_iteration(iteration, grid)` after each round.
pub fn region_scan_with<F>(
    program: &Program,
    prop: &Property,
    mut grid: RegionGrid,
    cfg: &RegionScanConfig,
    mut on_iteration: F,
) -> Result<RegionGrid, CheckError>
where
    F: FnMut(usize, &RegionGrid),
{
    check_property(program, prop).map_err(|e| CheckError::Property(e.to_string()))?;
    if prop.comparison.is_lower_bound() {
        return Err(CheckError::Property(
            "region scanning needs an upper-bound property such as P<=1/2 [..]".into(),
        ));
    }
    let compiled = Arc::new(CompiledProgram::new(program)?);
    let reward = RewardFn::for_property(prop, compiled.vars())?;
    let mut explorer = Explorer::new(compiled, cfg.exploration.clone());
    explorer.set_reward_fn(reward)?;
    let opts = SolveOptions {
        dense_limit: cfg.solver.dense_limit,
        epsilon: cfg.solver.epsilon,
        max_iterations: cfg.solver.max_iterations,
    };
    let threshold = rational_to_f64(&prop.threshold);
    let strict = matches!(prop.comparison, crate::frontend::Comparison::Le);
    for _ in 0..cfg.iterations {
        let report = explorer.expand()?;
        let m = explorer.model();
        let view = ChainView::deterministic(m)?;
        let samples: Vec<CellSample> = grid
            .cells
            .par_iter()
            .map(|c| {
                let (value, class) = match cell_value(m, &view, &c.point, &opts) {
                    Err(_) => (None, CellClass::IllDefined),
                    Ok(None) => (None, CellClass::Unknown),
                    Ok(Some(v)) => {
                        let violated = if strict { v > threshold } else { v >= threshold };
                        (Some(v), if violated { CellClass::Unsafe } else { CellClass::Unknown })
                    }
                };
                CellSample {
                    iteration: report.round,
                    value,
                    class,
                }
            })
            .collect();
        for (c, s) in grid.cells.iter_mut().zip(samples) {
            c.class = match (c.class, s.class) {
                (CellClass::Unsafe, _) | (_, CellClass::Unsafe) => CellClass::Unsafe,
                (_, k) => k,
            };
            c.history.push(s);
        }
        on_iteration(report.round, &grid);
        if report.fully_expanded {
            break;
        }
    }
    Ok(grid)
}
