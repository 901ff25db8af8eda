//! Markdown summaries of CSV artifacts written by this tool.

use std::fmt::Write as _;

use crate::error::LabError;
use crate::output::{Schema, TOOL};

/// A parsed artifact: experiment name, schema, rows and footer.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub experiment: String,
    pub schema: Schema,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
}

pub fn parse_artifact(name: &str, text: &str) -> Result<Artifact, LabError> {
    let foreign = |why: &str| LabError::Config(format!("{name}: not a mala-lab artifact ({why})"));
    let mut lines = text.lines();
    let mut tool = false;
    let mut experiment = None;
    let columns = loop {
        let line = lines.next().ok_or_else(|| foreign("no column line"))?;
        match line.strip_prefix("# ") {
            Some(meta) => {
                if let Some(t) = meta.strip_prefix("tool: ") {
                    tool = t.starts_with("mala-lab ");
                } else if let Some(e) = meta.strip_prefix("experiment: ") {
                    experiment = Some(e.to_string());
                }
            }
            None => break line,
        }
    };
    if !tool {
        return Err(foreign("missing tool header"));
    }
    let experiment = experiment.ok_or_else(|| foreign("missing experiment header"))?;
    let schema = Schema::from_columns(columns).ok_or_else(|| foreign("unknown column layout"))?;
    let width = schema.columns().len();
    let mut rows = Vec::new();
    let mut footer = Vec::new();
    for line in lines {
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta.split_once(": ").ok_or_else(|| foreign("malformed footer"))?;
            footer.push((k.to_string(), v.to_string()));
        } else {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != width {
                return Err(foreign("row width differs from header"));
            }
            rows.push(row);
        }
    }
    Ok(Artifact {
        name: name.to_string(),
        experiment,
        schema,
        rows,
        footer,
    })
}

/// One markdown section per artifact. An empty list gives an empty summary.
pub fn report_summary(artifacts: &[(String, String)]) -> Result<String, LabError> {
    let parsed = artifacts
        .iter()
        .map(|(n, t)| parse_artifact(n, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    if parsed.is_empty() {
        return Ok(out);
    }
    let _ = writeln!(out, "# {TOOL} summary\n");
    for a in &parsed {
        let _ = writeln!(out, "## {} ({})\n", a.experiment, a.name);
        match a.schema {
            Schema::Theory => theory(&mut out, a),
            Schema::Mixing => mixing(&mut out, a),
            Schema::Conductance => table(&mut out, &["s", "phi_s", "result"], a.rows.iter().map(|r| r.clone())),
            Schema::Lovasz => lovasz(&mut out, a),
            Schema::Sample => table(
                &mut out,
                &["chain", "iterations", "accepted", "rejected", "held", "acceptance rate"],
                a.rows.iter().map(|r| r[..6].to_vec()),
            ),
        }
        if !matches!(a.schema, Schema::Mixing) {
            for (k, v) in &a.footer {
                let _ = writeln!(out, "- {k}: {v}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn table(out: &mut String, head: &[&str], rows: impl Iterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", head.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn theory(out: &mut String, a: &Artifact) {
    let mut lemmas: Vec<&str> = Vec::new();
    for r in &a.rows {
        if !lemmas.contains(&r[0].as_str()) {
            lemmas.push(&r[0]);
        }
    }
    for lemma in lemmas {
        let rows: Vec<&Vec<String>> = a.rows.iter().filter(|r| r[0] == lemma).collect();
        let failed = rows.iter().filter(|r| r[7] != "PASS").count();
        let _ = writeln!(out, "### {lemma}: {} of {} pass\n", rows.len() - failed, rows.len());
        table(
            out,
            &["target", "ell_or_delta", "estimate", "bound", "margin", "result", "detail"],
            rows.iter().map(|r| {
                let margin = match (r[6].parse::<f64>(), r[3].parse::<f64>()) {
                    (Ok(b), Ok(e)) => format!("{:.4e}", b - e),
                    _ => String::new(),
                };
                vec![r[1].clone(), r[2].clone(), r[3].clone(), r[6].clone(), margin, r[7].clone(), r[8].clone()]
            }),
        );
    }
}

fn mixing(out: &mut String, a: &Artifact) {
    table(
        out,
        &["dim", "eta", "tau_hat", "predicted_n", "predicted_n_naive"],
        a.rows.iter().map(|r| r[..5].to_vec()),
    );
    let get = |k: &str| a.footer.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let _ = writeln!(out, "- fitted slope of log tau_hat vs log d: {}", get("slope").unwrap_or("none"));
    if let (Some(lo), Some(hi)) = (get("slope_ci_lo"), get("slope_ci_hi")) {
        let _ = writeln!(out, "- slope confidence interval ({}): [{lo}, {hi}]", get("slope_ci_level").unwrap_or("?"));
    }
    let _ = writeln!(out, "- predicted exponents: trace-aware 1, naive 1.5");
    if let (Some(p), Some(n)) = (get("predicted_slope"), get("naive_slope")) {
        let _ = writeln!(out, "- slopes of the predicted counts over these dims: trace-aware {p}, naive {n}");
    }
    for (k, v) in &a.footer {
        if matches!(k.as_str(), "max_slope" | "slope_check" | "warning" | "c0") {
            let _ = writeln!(out, "- {k}: {v}");
        }
    }
}

fn lovasz(out: &mut String, a: &Artifact) {
    let failed = a.rows.iter().filter(|r| r[4] != "PASS").count();
    let worst = a
        .rows
        .iter()
        .min_by(|x, y| {
            let sx: f64 = x[3].parse().unwrap_or(f64::NAN);
            let sy: f64 = y[3].parse().unwrap_or(f64::NAN);
            sx.total_cmp(&sy)
        });
    let _ = writeln!(out, "{} of {} iterations pass\n", a.rows.len() - failed, a.rows.len());
    if let Some(w) = worst {
        table(out, &["n (smallest slack)", "tv", "bound", "slack", "result"], std::iter::once(w.clone()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAIL: &str = "# tool: mala-lab 0.1.0\n# experiment: acceptance-tail\n# seed: 1\n# passed: 1\n# failed: 1\n\
lemma,target,ell_or_delta,estimate,ci_lo,ci_hi,bound,pass,detail\n\
acceptance-tail,isotropic(d=1;sigma=1),0.1,0.02,0.01,0.03,0.103,PASS,eta=0.1\n\
acceptance-tail,isotropic(d=1;sigma=1),0.05,0.9,0.8,0.95,0.056,FAIL,eta=3\n";

    #[test]
    fn empty_list_gives_empty_summary() {
        assert_eq!(report_summary(&[]).unwrap(), "");
    }

    #[test]
    fn failing_rows_are_marked() {
        let s = report_summary(&[("tail.csv".into(), TAIL.into())]).unwrap();
        assert!(s.contains("| isotropic(d=1;sigma=1) | 0.05 | 0.9 | 0.056 |"));
        assert!(s.contains("| FAIL |"));
        assert!(s.contains("1 of 2 pass"));
    }

    #[test]
    fn foreign_csv_rejected() {
        assert!(report_summary(&[("x.csv".into(), "a,b\n1,2\n".into())]).is_err());
        let wrong_columns = TAIL.replace("lemma,target", "lemma,tgt");
        assert!(report_summary(&[("x.csv".into(), wrong_columns)]).is_err());
        let ragged = format!("{TAIL}1,2\n");
        assert!(report_summary(&[("x.csv".into(), ragged)]).is_err());
    }
}
