//! Plain-text result tables: one `# {json}` header line, a CSV column row,
//! then numeric rows.

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::gmc::GmcMeasure;
use crate::multifractal::{ScalingFit, ThickHistogram};
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Value, columns: &[&str]) -> Self {
        Table { header, columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Floats are written with Rust's shortest round-trip formatting, so the
    /// text is a deterministic function of the values.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {}\n{}\n", self.header, self.columns.join(","));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Precondition(format!("table: {m}"));
        let mut lines = text.lines();
        let head = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("missing header line"))?;
        let header: Value = serde_json::from_str(head).map_err(|e| bad(&e.to_string()))?;
        let columns: Vec<String> = lines.next().ok_or_else(|| bad("missing column row"))?.split(',').map(String::from).collect();
        let mut rows = Vec::new();
        for l in lines.filter(|l| !l.is_empty()) {
            let r: std::result::Result<Vec<f64>, _> = l.split(',').map(|v| v.parse::<f64>()).collect();
            let r = r.map_err(|e| bad(&e.to_string()))?;
            if r.len() != columns.len() {
                return Err(bad("row width differs from the column row"));
            }
            rows.push(r);
        }
        Ok(Table { header, columns, rows })
    }
}

pub fn field_table(f: &FieldSample) -> Table {
    let mut t = Table::new(
        json!({"kind": "field", "layout": f.layout, "eps": f.eps, "seed": f.seed, "points": f.len()}),
        &["x", "y", "cell", "value", "variance"],
    );
    for i in 0..f.len() {
        t.push(vec![f.points[i][0], f.points[i][1], f.cell[i], f.values[i], f.variance[i]]);
    }
    t
}

pub fn measure_table(m: &GmcMeasure) -> Table {
    let mut t = Table::new(
        json!({"kind": "gmc", "layout": m.layout, "gamma": m.gamma, "eps": m.eps, "base": m.base, "total_mass": m.total_mass}),
        &["x", "y", "weight"],
    );
    for (p, w) in m.points.iter().zip(&m.weights) {
        t.push(vec![p[0], p[1], *w]);
    }
    t
}

pub fn scaling_table(gamma: f64, fits: &[ScalingFit]) -> Table {
    let mut t = Table::new(
        json!({
            "kind": "zeta-fit",
            "gamma": gamma,
            "fits": fits.iter().map(|f| json!({"q": f.q, "slope": f.slope, "slope_ci": f.slope_ci})).collect::<Vec<_>>(),
        }),
        &["q", "radius", "effective_radius", "log_moment", "stderr"],
    );
    for f in fits {
        for i in 0..f.radii.len() {
            t.push(vec![f.q, f.radii[i], f.effective_radii[i], f.log_moments[i].value, f.log_moments[i].stderr]);
        }
    }
    t
}

pub fn histogram_table(h: &ThickHistogram) -> Table {
    let mut t = Table::new(
        json!({
            "kind": "thick-points",
            "gamma": h.gamma,
            "eta": h.eta,
            "levels": h.levels,
            "mean": h.mean,
            "tail_mass": h.tail_mass,
            "tail_slope": h.tail_slope,
            "tail_rate_bound": h.tail_rate_bound,
        }),
        &["bin_lo", "bin_hi", "probability"],
    );
    for (i, d) in h.density.iter().enumerate() {
        t.push(vec![h.edges[i], h.edges[i + 1], *d]);
    }
    t
}
