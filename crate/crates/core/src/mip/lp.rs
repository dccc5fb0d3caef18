use std::fmt::Write as _;

use thiserror::Error;

use super::{Constraint, FormulationKind, MipModel, Relation, Var, VarKind};
use crate::model::JobId;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("variable '{0}' is not declared in the Binaries section")]
    UnknownVar(String),
    #[error("variable name '{0}' does not follow <prefix>_<job>_<slot>")]
    BadName(String),
}

const TERMS_PER_LINE: usize = 8;

/// Number with 12 significant digits, fixed notation when it is short enough.
fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_terms(out: &mut String, model: &MipModel, terms: &[(usize, f64)], what: &str) -> Result<(), LpError> {
    for (i, &(v, c)) in terms.iter().enumerate() {
        if !c.is_finite() {
            return Err(LpError::NonFinite(what.to_string()));
        }
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.vars[v].name;
        match (i, c < 0.0) {
            (0, false) => write!(out, " {} {name}", num(c)),
            (0, true) => write!(out, " - {} {name}", num(-c)),
            (_, false) => write!(out, " + {} {name}", num(c)),
            (_, true) => write!(out, " - {} {name}", num(-c)),
        }
        .unwrap();
    }
    Ok(())
}

/// Serializes the model in LP format. Variables keep their declaration order.
pub fn write_lp(model: &MipModel) -> Result<String, LpError> {
    let mut out = String::new();
    writeln!(out, "\\ formulation {}", model.kind).unwrap();
    out.push_str("Maximize\n obj:");
    write_terms(&mut out, model, &model.objective, "objective")?;
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        if !c.rhs.is_finite() {
            return Err(LpError::NonFinite(c.name.clone()));
        }
        write!(out, " {}:", c.name).unwrap();
        write_terms(&mut out, model, &c.terms, &c.name)?;
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
        };
        let rhs = if c.rhs == 0.0 { 0.0 } else { c.rhs };
        writeln!(out, " {rel} {}", num(rhs)).unwrap();
    }
    out.push_str("Bounds\nBinaries\n");
    for chunk in model.vars.chunks(10) {
        let names: Vec<&str> = chunk.iter().map(|v| v.name.as_str()).collect();
        writeln!(out, " {}", names.join(" ")).unwrap();
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "maximize" | "maximise" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_name(name: &str) -> Result<(FormulationKind, JobId, u32), LpError> {
    let bad = || LpError::BadName(name.to_string());
    let mut parts = name.split('_');
    let kind = match parts.next() {
        Some("x") => FormulationKind::OrigAt,
        Some("X") => FormulationKind::AggAt,
        Some("Y") => FormulationKind::AggBy,
        _ => return Err(bad()),
    };
    let job = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let slot = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((kind, JobId(job), slot))
}

struct Statement {
    line: usize,
    tokens: Vec<String>,
}

/// Splits a section body into `name: ...` statements.
fn statements(body: &[(usize, &str)]) -> Result<Vec<Statement>, LpError> {
    let mut out: Vec<Statement> = Vec::new();
    for &(line, text) in body {
        for tok in text.split_whitespace() {
            if let Some(name) = tok.strip_suffix(':') {
                out.push(Statement { line, tokens: vec![name.to_string()] });
            } else if let Some(st) = out.last_mut() {
                st.tokens.push(tok.to_string());
            } else {
                return Err(LpError::Syntax { line, msg: format!("expected a 'name:' label before '{tok}'") });
            }
        }
    }
    Ok(out)
}

fn parse_terms(
    tokens: &[String],
    line: usize,
    index: &std::collections::HashMap<String, usize>,
) -> Result<Vec<(usize, f64)>, LpError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in tokens {
        match tok.as_str() {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(LpError::Syntax { line, msg: format!("two coefficients in a row at '{tok}'") });
                    }
                    coef = Some(v);
                } else {
                    let &v = index.get(tok).ok_or_else(|| LpError::UnknownVar(tok.clone()))?;
                    terms.push((v, sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(LpError::Syntax { line, msg: "dangling coefficient".into() });
    }
    Ok(terms)
}

/// Reads LP text produced by [`write_lp`] (and simple hand-written variants).
pub fn parse_lp(text: &str) -> Result<MipModel, LpError> {
    let mut section = Section::Preamble;
    let mut kind = None;
    let mut bodies: Vec<(Section, usize, &str)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        if let Some(comment) = raw.trim_start().strip_prefix('\\') {
            if let Some(k) = comment.trim().strip_prefix("formulation ") {
                kind = k.trim().parse().ok();
            }
            continue;
        }
        if let Some(s) = section_of(raw) {
            section = s;
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        match section {
            Section::Preamble | Section::End => {
                return Err(LpError::Syntax { line, msg: format!("text outside a section: '{}'", raw.trim()) })
            }
            _ => bodies.push((section, line, raw)),
        }
    }
    if section != Section::End {
        return Err(LpError::Syntax { line: text.lines().count(), msg: "missing End".into() });
    }

    let mut vars = Vec::new();
    for &(_, _, body) in bodies.iter().filter(|b| b.0 == Section::Binaries) {
        for name in body.split_whitespace() {
            let (k, job, slot) = parse_name(name)?;
            kind.get_or_insert(k);
            vars.push(Var { name: name.to_string(), kind: VarKind::Binary, job, slot });
        }
    }
    let index: std::collections::HashMap<String, usize> =
        vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();

    let of = |s: Section| -> Vec<(usize, &str)> { bodies.iter().filter(|b| b.0 == s).map(|b| (b.1, b.2)).collect() };

    let mut objective = Vec::new();
    for st in statements(&of(Section::Objective))? {
        objective.extend(parse_terms(&st.tokens[1..], st.line, &index)?);
    }

    let mut constraints = Vec::new();
    for st in statements(&of(Section::Constraints))? {
        let name = st.tokens[0].clone();
        let rest = &st.tokens[1..];
        let pos = rest
            .iter()
            .position(|t| matches!(t.as_str(), "<=" | "=<" | "=" | ">=" | "=>"))
            .ok_or_else(|| LpError::Syntax { line: st.line, msg: format!("row '{name}' has no relation") })?;
        let mut terms = parse_terms(&rest[..pos], st.line, &index)?;
        let rhs_tokens = &rest[pos + 1..];
        let rhs_text = rhs_tokens.concat();
        let mut rhs: f64 = rhs_text
            .parse()
            .map_err(|_| LpError::Syntax { line: st.line, msg: format!("bad right-hand side '{rhs_text}'") })?;
        let relation = match rest[pos].as_str() {
            "=" => Relation::Eq,
            ">=" | "=>" => {
                for t in &mut terms {
                    t.1 = -t.1;
                }
                rhs = -rhs;
                Relation::Le
            }
            _ => Relation::Le,
        };
        constraints.push(Constraint { name, terms, relation, rhs });
    }

    Ok(MipModel { kind: kind.unwrap_or(FormulationKind::OrigAt), vars, objective, constraints })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(coef: f64) -> MipModel {
        MipModel {
            kind: FormulationKind::OrigAt,
            vars: vec![Var { name: "x_1_2".into(), kind: VarKind::Binary, job: JobId(1), slot: 2 }],
            objective: vec![(0, coef)],
            constraints: vec![],
        }
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(1.0 / 1.1), "0.909090909091");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(9.999999999999999), "10");
    }

    #[test]
    fn single_term_objective_line() {
        let text = write_lp(&one_var(1.0 / 1.1)).unwrap();
        assert!(text.contains(" obj: 0.909090909091 x_1_2\n"), "{text}");
    }

    #[test]
    fn empty_model_has_all_sections() {
        let text = write_lp(&MipModel::empty(FormulationKind::AggAt)).unwrap();
        for header in ["Maximize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.lines().any(|l| l == header), "{header} missing in\n{text}");
        }
        assert_eq!(parse_lp(&text).unwrap(), MipModel::empty(FormulationKind::AggAt));
    }

    #[test]
    fn non_finite_is_rejected() {
        assert_eq!(write_lp(&one_var(f64::NAN)), Err(LpError::NonFinite("objective".into())));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "Maximize\n obj: x_1_1\nSubject To\n c1: x_1_1 <= \nBinaries\n x_1_1\nEnd\n";
        assert!(matches!(parse_lp(text), Err(LpError::Syntax { line: 4, .. })));
        assert!(matches!(parse_lp("Maximize\n obj: x_1_1\n"), Err(LpError::Syntax { .. })));
        let ge = "Maximize\n obj: x_1_1\nSubject To\n c1: 2 x_1_1 >= 1\nBinaries\n x_1_1\nEnd\n";
        let m = parse_lp(ge).unwrap();
        assert_eq!(m.constraints[0].terms, vec![(0, -2.0)]);
        assert_eq!(m.constraints[0].rhs, -1.0);
    }
}
