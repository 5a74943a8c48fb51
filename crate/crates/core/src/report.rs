//! Broken-norm errors of the projected discrete solution, observed
//! convergence orders, and CSV / markdown tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{Discretization, StateVector};
use crate::element::{ElementError, LOAD_DEGREE};
use crate::problems::{Derivatives, ManufacturedProblem};
use crate::quadrature::polygon_rule;

/// ‖·‖_{0,h}, |·|_{1,h}, |·|_{2,h} of one field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldErrors {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionErrors {
    pub u: FieldErrors,
    pub v: FieldErrors,
}

/// Errors of u - Π^h u_h and v - Π^h v_h integrated with the degree-10 rule.
pub fn compute_errors(
    disc: &Discretization,
    x: &StateVector,
    problem: &ManufacturedProblem,
) -> Result<SolutionErrors, ElementError> {
    compute_errors_with_degree(disc, x, problem, LOAD_DEGREE)
}

pub fn compute_errors_with_degree(
    disc: &Discretization,
    x: &StateVector,
    problem: &ManufacturedProblem,
    degree: usize,
) -> Result<SolutionErrors, ElementError> {
    let pu = disc.project(x.u());
    let pv = disc.project(x.v());
    let per_cell = disc.map_cells(|c| -> Result<[f64; 6], ElementError> {
        let el = &disc.elements[c];
        let rule = polygon_rule(&el.geometry.vertices, degree)
            .map_err(|source| ElementError::Quadrature { cell: c, source })?;
        let mut acc = [0.0; 6];
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let exact = [problem.u(p), problem.v(p)];
            for (f, coeffs) in [&pu[c], &pv[c]].into_iter().enumerate() {
                let (val, grad, hess) = el.basis.evaluate(coeffs, p);
                let (e0, e1, e2) = difference(&exact[f], val, grad, hess);
                acc[3 * f] += w * e0;
                acc[3 * f + 1] += w * e1;
                acc[3 * f + 2] += w * e2;
            }
        }
        Ok(acc)
    });
    let mut total = [0.0; 6];
    for cell in per_cell {
        for (t, v) in total.iter_mut().zip(cell?) {
            *t += v;
        }
    }
    let field = |k: usize| FieldErrors {
        l2: total[k].sqrt(),
        h1: total[k + 1].sqrt(),
        h2: total[k + 2].sqrt(),
    };
    Ok(SolutionErrors { u: field(0), v: field(3) })
}

/// Squared pointwise value, gradient and Hessian differences.
fn difference(exact: &Derivatives, val: f64, grad: [f64; 2], hess: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let d0 = exact.value - val;
    let d1 = (exact.grad[0] - grad[0]).powi(2) + (exact.grad[1] - grad[1]).powi(2);
    let mut d2 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            d2 += (exact.hess[a][b] - hess[a][b]).powi(2);
        }
    }
    (d0 * d0, d1, d2)
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub h: f64,
    pub n_dof: usize,
    pub errors: SolutionErrors,
    pub newton_iters: usize,
    /// Observed orders in the order u_l2, u_h1, u_h2, v_l2, v_h1, v_h2;
    /// `None` on the first level.
    pub orders: Option<[f64; 6]>,
}

impl ConvergenceRecord {
    pub fn error_array(&self) -> [f64; 6] {
        let (u, v) = (self.errors.u, self.errors.v);
        [u.l2, u.h1, u.h2, v.l2, v.h1, v.h2]
    }
}

/// log(e_prev/e)/log(h_prev/h); NaN when either error is not positive.
pub fn observed_order(e_prev: f64, e: f64, h_prev: f64, h: f64) -> f64 {
    if e_prev > 0.0 && e > 0.0 {
        (e_prev / e).ln() / (h_prev / h).ln()
    } else {
        f64::NAN
    }
}

/// Fills `orders` of every record after the first.
pub fn convergence_orders(records: &mut [ConvergenceRecord]) {
    if let Some(first) = records.first_mut() {
        first.orders = None;
    }
    for k in 1..records.len() {
        let (prev, cur) = (records[k - 1].error_array(), records[k].error_array());
        let (hp, h) = (records[k - 1].h, records[k].h);
        let mut o = [0.0; 6];
        for i in 0..6 {
            o[i] = observed_order(prev[i], cur[i], hp, h);
        }
        records[k].orders = Some(o);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
    /// Whitespace-separated columns with a `#` header, readable by gnuplot.
    Dat,
}

pub const CSV_HEADER: &str = "level,h,ndof,err_u_l2,ord_u_l2,err_u_h1,ord_u_h1,err_u_h2,ord_u_h2,err_v_l2,ord_v_l2,err_v_h1,ord_v_h1,err_v_h2,ord_v_h2,newton_iters";

fn fmt_h(h: f64) -> String {
    format!("{h:.6}")
}

fn fmt_err(e: f64) -> String {
    format!("{e:.6e}")
}

fn fmt_order(o: Option<f64>, blank: &str) -> String {
    match o {
        None => blank.to_string(),
        Some(o) if o.is_nan() => "NaN".to_string(),
        Some(o) => format!("{o:.4}"),
    }
}

pub fn to_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let e = r.error_array();
        let _ = write!(out, "{},{},{}", r.level, fmt_h(r.h), r.n_dof);
        for i in 0..6 {
            let _ = write!(out, ",{},{}", fmt_err(e[i]), fmt_order(r.orders.map(|o| o[i]), ""));
        }
        let _ = writeln!(out, ",{}", r.newton_iters);
    }
    out
}

/// Two tables (u then v) with columns h, err, Order for the three norms,
/// followed by the dof count and Newton iterations.
pub fn to_markdown(records: &[ConvergenceRecord]) -> String {
    let mut out = String::new();
    for (f, name) in [(0, "u"), (1, "v")] {
        let _ = writeln!(
            out,
            "| h | err({name}) | Order | err(∇{name}) | Order | err(H{name}) | Order | ndof | Newton |"
        );
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in records {
            let e = r.error_array();
            let _ = write!(out, "| {} ", fmt_h(r.h));
            for i in 3 * f..3 * f + 3 {
                let _ = write!(out, "| {} | {} ", fmt_err(e[i]), fmt_order(r.orders.map(|o| o[i]), "-"));
            }
            let _ = writeln!(out, "| {} | {} |", r.n_dof, r.newton_iters);
        }
        if f == 0 {
            out.push('\n');
        }
    }
    out
}

pub fn to_dat(records: &[ConvergenceRecord]) -> String {
    let mut out = format!("# {}\n", CSV_HEADER.replace(',', " "));
    for line in to_csv(records).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').map(|f| if f.is_empty() { "NaN" } else { f }).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn render(records: &[ConvergenceRecord], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => to_csv(records),
        TableFormat::Markdown => to_markdown(records),
        TableFormat::Dat => to_dat(records),
    }
}

pub fn emit(records: &[ConvergenceRecord], format: TableFormat, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, render(records, format))
}
