//! JSON and CSV renderings. Exact values appear as `"p/q"` strings with a
//! floating duplicate under the same key suffixed `_f`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::functional::{ProperFit, PrekopaOutcome};
use crate::invariants::{AffineLinear, StabilityReport, WedgeProbe};
use crate::polytope::{LatticePoint, ReflexivePolytope};
use crate::scalar::{rational_string, rational_to_f64, Rational, Scalar};
use crate::solver::{MetricRow, SolverReport};

/// On-disk polytope document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolytopeDoc {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub vertices: Vec<Vec<i64>>,
}

impl PolytopeDoc {
    pub fn of(polytope: &ReflexivePolytope) -> Self {
        Self {
            name: polytope.name().to_string(),
            dim: polytope.dim(),
            vertices: polytope.vertices().iter().map(|v| v.0.clone()).collect(),
        }
    }

    pub fn validate(&self) -> Result<ReflexivePolytope> {
        if let Some(v) = self.vertices.iter().find(|v| v.len() != self.dim) {
            return Err(Error::InvalidInput(format!(
                "vertex {v:?} does not have the declared dimension {}",
                self.dim
            )));
        }
        let vertices = self.vertices.iter().map(|v| LatticePoint(v.clone())).collect();
        ReflexivePolytope::from_vertices(self.name.clone(), vertices)
    }
}

pub fn polytope_from_json(text: &str) -> Result<ReflexivePolytope> {
    let doc: PolytopeDoc = serde_json::from_str(text)?;
    doc.validate()
}

pub fn polytope_to_json(polytope: &ReflexivePolytope) -> String {
    serde_json::to_string_pretty(&PolytopeDoc::of(polytope)).expect("plain data serializes")
}

fn put_rational(map: &mut Map<String, Value>, key: &str, q: &Rational) {
    map.insert(key.to_string(), Value::String(rational_string(q)));
    map.insert(format!("{key}_f"), json!(rational_to_f64(q)));
}

fn rational_list(qs: &[Rational]) -> Value {
    Value::Array(qs.iter().map(|q| Value::String(rational_string(q))).collect())
}

fn float_list(qs: &[Rational]) -> Value {
    Value::Array(qs.iter().map(|q| json!(rational_to_f64(q))).collect())
}

fn affine_json(l: &AffineLinear) -> Value {
    let mut m = Map::new();
    put_rational(&mut m, "constant", &l.a);
    m.insert("linear".into(), rational_list(&l.b));
    m.insert("linear_f".into(), float_list(&l.b));
    Value::Object(m)
}

/// Validation summary, facets and exact moments.
pub fn info_json(polytope: &ReflexivePolytope) -> Value {
    let mom = polytope.moments();
    let mut m = Map::new();
    m.insert("name".into(), json!(polytope.name()));
    m.insert("dim".into(), json!(polytope.dim()));
    m.insert(
        "vertices".into(),
        json!(polytope.vertices().iter().map(|v| v.0.clone()).collect::<Vec<_>>()),
    );
    m.insert("reflexive".into(), json!(true));
    m.insert("smooth".into(), json!(true));
    m.insert(
        "facets".into(),
        Value::Array(
            polytope
                .facets()
                .iter()
                .map(|f| json!({ "normal": f.normal, "vertices": f.vertices }))
                .collect(),
        ),
    );
    put_rational(&mut m, "volume", &mom.volume);
    m.insert("first_moments".into(), rational_list(&mom.first));
    m.insert("first_moments_f".into(), float_list(&mom.first));
    m.insert(
        "second_moments".into(),
        Value::Array(mom.second.iter().map(|row| rational_list(row)).collect()),
    );
    Value::Object(m)
}

/// `l`, `α`, the verdict and `λ`.
pub fn alpha_json(polytope: &ReflexivePolytope, report: &StabilityReport) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), json!(polytope.name()));
    put_rational(&mut m, "alpha", &report.alpha);
    m.insert("stable".into(), json!(report.stable));
    put_rational(&mut m, "lambda", &report.lambda);
    put_rational(&mut m, "volume", &report.volume);
    m.insert("l".into(), affine_json(&report.l));
    m.insert(
        "vertex_values".into(),
        Value::Array(
            report
                .vertex_values
                .iter()
                .map(|(v, q)| {
                    let mut e = Map::new();
                    e.insert("vertex".into(), json!(v.0));
                    put_rational(&mut e, "l", q);
                    Value::Object(e)
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

fn probe_json(p: &WedgeProbe) -> Value {
    let mut m = Map::new();
    m.insert("vertex".into(), json!(p.vertex.0));
    put_rational(&mut m, "limit", &p.limit);
    m.insert("last_ratio".into(), json!(p.last_ratio()));
    m.insert("extrapolated".into(), json!(p.extrapolated));
    m.insert("skipped".into(), json!(p.skipped));
    m.insert(
        "steps".into(),
        Value::Array(
            p.steps
                .iter()
                .map(|s| {
                    let mut e = Map::new();
                    e.insert("step".into(), json!(s.step));
                    e.insert("level".into(), json!(s.radius));
                    e.insert("peak".into(), json!(s.peak));
                    e.insert("mass".into(), json!(s.mass));
                    put_rational(&mut e, "ratio", &s.ratio);
                    Value::Object(e)
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

/// [`alpha_json`] plus the wedge probes.
pub fn stability_json(polytope: &ReflexivePolytope, report: &StabilityReport) -> Value {
    let mut v = alpha_json(polytope, report);
    if let Value::Object(m) = &mut v {
        m.insert("probes".into(), Value::Array(report.probes.iter().map(probe_json).collect()));
    }
    v
}

pub const ALPHA_CSV_HEADER: &str = "name,dim,volume,volume_f,alpha,alpha_f,stable,lambda,lambda_f,min_vertex_l,min_vertex_l_f";

pub fn alpha_csv_row(polytope: &ReflexivePolytope, report: &StabilityReport) -> String {
    let q = |x: &Rational| format!("{},{}", rational_string(x), rational_to_f64(x));
    format!(
        "{},{},{},{},{},{},{}",
        csv_field(polytope.name()),
        polytope.dim(),
        q(&report.volume),
        q(&report.alpha),
        report.stable,
        q(&report.lambda),
        q(report.min_vertex_value()),
    )
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub const PROBE_CSV_HEADER: &str = "vertex,step,level,mass,ratio,ratio_f,limit,limit_f";

pub fn probe_csv(report: &StabilityReport) -> String {
    let mut out = String::from(PROBE_CSV_HEADER);
    out.push('\n');
    for p in &report.probes {
        let vertex = p.vertex.0.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
        for s in &p.steps {
            out.push_str(&format!(
                "{vertex},{},{},{},{},{},{},{}\n",
                s.step,
                s.radius,
                s.mass,
                rational_string(&s.ratio),
                s.ratio_f,
                rational_string(&p.limit),
                rational_to_f64(&p.limit),
            ));
        }
    }
    out
}

fn f<S: Scalar>(x: S) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn solver_json<S: Scalar>(polytope: &ReflexivePolytope, refinement: u32, report: &SolverReport<S>) -> Value {
    json!({
        "name": polytope.name(),
        "refinement": refinement,
        "converged": report.converged,
        "iterations": report.iterations,
        "d_value": f(report.d_value),
        "nonlinear": f(report.nonlinear),
        "linear": f(report.linear),
        "grad_norm": f(report.grad_norm),
        "residual_l1": f(report.residual_l1),
        "residual_sup": f(report.residual_sup),
        "pushforward_mass": f(report.pushforward_mass),
        "pushforward_w1": f(report.pushforward_w1),
        "tail_bound": f(report.tail_bound),
        "grid_radius": f(report.radius),
        "grid_nodes": report.nodes,
        "sample": report.sample.iter().map(|p| rational_list(p)).collect::<Vec<_>>(),
        "theta_star": report.theta_star.iter().map(|&t| f(t)).collect::<Vec<_>>(),
    })
}

pub const CONVERGENCE_CSV_HEADER: &str = "iteration,d_value,grad_norm,residual_l1";

pub fn convergence_csv<S: Scalar>(report: &SolverReport<S>) -> String {
    let mut out = String::from(CONVERGENCE_CSV_HEADER);
    out.push('\n');
    for r in &report.history {
        out.push_str(&format!("{},{},{},{}\n", r.iteration, f(r.value), f(r.grad_norm), f(r.residual_l1)));
    }
    out
}

pub fn metric_csv<S: Scalar>(rows: &[MetricRow<S>]) -> String {
    let n = rows.first().map_or(0, |r| r.xi.len());
    let mut cols: Vec<String> = (0..n).map(|i| format!("xi{i}")).collect();
    cols.extend((0..n).map(|i| format!("x{i}")));
    for i in 0..n {
        for j in 0..n {
            cols.push(format!("h{i}{j}"));
        }
    }
    cols.push("positive_definite".into());
    let mut out = cols.join(",");
    out.push('\n');
    for r in rows {
        let vals: Vec<String> = r
            .xi
            .iter()
            .chain(&r.moment)
            .chain(&r.hessian)
            .map(|&v| f(v).to_string())
            .chain(std::iter::once(r.positive_definite.to_string()))
            .collect();
        out.push_str(&vals.join(","));
        out.push('\n');
    }
    out
}

pub fn properness_json<S: Scalar>(fit: &ProperFit<S>, prekopa: &[PrekopaOutcome<S>]) -> Value {
    json!({
        "delta": f(fit.delta),
        "c": f(fit.c),
        "members": fit.members.iter().enumerate().map(|(i, m)| json!({
            "member": i,
            "mass": f(m.mass),
            "ding": f(m.ding),
            "margin": f(m.margin),
        })).collect::<Vec<_>>(),
        "prekopa": prekopa.iter().map(|p| json!({
            "interpolated": f(p.interpolated),
            "chord": f(p.chord),
            "slack": f(p.slack),
            "holds": p.holds,
            "dropped_nodes": p.dropped_nodes,
        })).collect::<Vec<_>>(),
    })
}

pub const PROPERNESS_CSV_HEADER: &str = "member,mass,ding,margin";

pub fn properness_csv<S: Scalar>(fit: &ProperFit<S>) -> String {
    let mut out = String::from(PROPERNESS_CSV_HEADER);
    out.push('\n');
    for (i, m) in fit.members.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", f(m.mass), f(m.ding), f(m.margin)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::lookup;
    use crate::invariants::stability_report_for;

    #[test]
    fn polytope_documents_round_trip() {
        let f1 = lookup("F1").unwrap().polytope;
        let text = polytope_to_json(&f1);
        assert_eq!(polytope_from_json(&text).unwrap(), f1);
        let bad = r#"{"name":"x","dim":2,"vertices":[[1,0,0],[0,1],[-1,-1]]}"#;
        assert!(matches!(polytope_from_json(bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn alpha_uses_fraction_strings() {
        let p2 = lookup("P2").unwrap().polytope;
        let l = crate::invariants::solve_l(&p2.moments()).unwrap();
        let r = stability_report_for(&p2, &l, 0).unwrap();
        let v = alpha_json(&p2, &r);
        assert_eq!(v["alpha"], "0/1");
        assert_eq!(v["stable"], true);
        assert_eq!(v["volume"], "9/2");
        assert_eq!(v["volume_f"], 4.5);
        let row = alpha_csv_row(&p2, &r);
        assert_eq!(row.split(',').count(), ALPHA_CSV_HEADER.split(',').count());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
