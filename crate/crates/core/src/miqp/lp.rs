//! Mixed-integer LP text format: writer and the reader used for round trips.

use std::collections::HashMap;

use super::model::{Constraint, MiqpModel, ObjectiveSense, Sense, VarKind, Variable};
use crate::error::{Error, Result};

const HEADER_TAG: &str = "gridflow-miqp";
const TERMS_PER_LINE: usize = 8;

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn signed(x: f64) -> (char, String) {
    if x.is_sign_negative() {
        ('-', num(-x))
    } else {
        ('+', num(x))
    }
}

struct LineWriter {
    out: String,
    terms: usize,
}

impl LineWriter {
    fn term(&mut self, s: &str) {
        if self.terms > 0 && self.terms % TERMS_PER_LINE == 0 {
            self.out.push_str("\n   ");
        }
        self.out.push(' ');
        self.out.push_str(s);
        self.terms += 1;
    }

    fn raw(&mut self, s: &str) {
        self.out.push(' ');
        self.out.push_str(s);
    }
}

/// Renders the model. Output depends only on the model.
pub fn emit_lp(model: &MiqpModel) -> String {
    let name = |j: usize| model.variables[j].name.as_str();
    let mut out = format!(
        "\\ {HEADER_TAG} n_vehicles={} horizon={} big_m={}\n",
        model.n_vehicles,
        model.horizon,
        num(model.big_m)
    );
    out += match model.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    };
    let mut w = LineWriter {
        out: " obj:".into(),
        terms: 0,
    };
    for &(j, a) in &model.objective_linear {
        let (s, v) = signed(a);
        w.term(&format!("{s} {v} {}", name(j)));
    }
    if !model.objective_quadratic.is_empty() {
        w.raw("+ [");
        for &(i, j, q) in &model.objective_quadratic {
            let (s, v) = signed(2.0 * q);
            if i == j {
                w.term(&format!("{s} {v} {} ^ 2", name(i)));
            } else {
                w.term(&format!("{s} {v} {} * {}", name(i), name(j)));
            }
        }
        w.raw("] / 2");
    }
    let (s, v) = signed(model.objective_constant);
    w.raw(&format!("{s} {v}"));
    out += &w.out;
    out += "\nSubject To\n";
    for row in &model.constraints {
        let mut w = LineWriter {
            out: format!(" {}:", row.name),
            terms: 0,
        };
        for &(j, a) in &row.terms {
            let (s, v) = signed(a);
            w.term(&format!("{s} {v} {}", name(j)));
        }
        w.raw(&format!("{} {}", row.sense.as_str(), num(row.rhs)));
        out += &w.out;
        out.push('\n');
    }
    out += "Bounds\n";
    for v in &model.variables {
        out += &format!(" {} <= {} <= {}\n", num(v.lower), v.name, num(v.upper));
    }
    for (kind, title) in [
        (VarKind::Integer, "Generals"),
        (VarKind::Binary, "Binaries"),
    ] {
        let names: Vec<&str> = model
            .variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        out += title;
        out.push('\n');
        for chunk in names.chunks(TERMS_PER_LINE) {
            out += &format!(" {}\n", chunk.join(" "));
        }
    }
    out += "End\n";
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let ch = chars[k];
        if ch.is_whitespace() {
            k += 1;
            continue;
        }
        let sym = match ch {
            '[' => Some("["),
            ']' => Some("]"),
            '/' => Some("/"),
            '^' => Some("^"),
            '*' => Some("*"),
            '+' => Some("+"),
            '-' => Some("-"),
            ':' => Some(":"),
            _ => None,
        };
        if let Some(s) = sym {
            toks.push(Tok::Sym(s));
            k += 1;
            continue;
        }
        if matches!(ch, '<' | '>' | '=') {
            let (op, width) = match (ch, chars.get(k + 1)) {
                ('<', Some('=')) | ('=', Some('<')) => ("<=", 2),
                ('>', Some('=')) | ('=', Some('>')) => (">=", 2),
                ('<', _) => ("<=", 1),
                ('>', _) => (">=", 1),
                _ => ("=", 1),
            };
            toks.push(Tok::Sym(op));
            k += width;
            continue;
        }
        let start = k;
        if ch.is_ascii_digit() || ch == '.' {
            while k < chars.len() {
                let c = chars[k];
                let exp_sign = (c == '+' || c == '-') && matches!(chars[k - 1], 'e' | 'E');
                if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                    k += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[start..k].iter().collect();
            let v = s
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad number {s:?}")))?;
            toks.push(Tok::Num(v));
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            while k < chars.len() && (chars[k].is_alphanumeric() || matches!(chars[k], '_' | '.')) {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
                toks.push(Tok::Num(f64::INFINITY));
            } else {
                toks.push(Tok::Ident(s));
            }
            continue;
        }
        return Err(Error::parse(
            line_no,
            format!("unexpected character {ch:?}"),
        ));
    }
    Ok(toks)
}

struct Cursor {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    last_line: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |(l, _)| *l)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        let line = self.line();
        match self.next() {
            Some(Tok::Sym(t)) if t == s => Ok(()),
            other => Err(Error::parse(line, format!("expected `{s}`, got {other:?}"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        let line = self.line();
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(Error::parse(
                line,
                format!("expected a name, got {other:?}"),
            )),
        }
    }

    /// Optional sign followed by a number.
    fn signed_num(&mut self) -> Result<f64> {
        let line = self.line();
        let mut sign = 1.0;
        while let Some(Tok::Sym(s @ ("+" | "-"))) = self.peek() {
            if *s == "-" {
                sign = -sign;
            }
            self.pos += 1;
        }
        match self.next() {
            Some(Tok::Num(v)) => Ok(sign * v),
            other => Err(Error::parse(
                line,
                format!("expected a number, got {other:?}"),
            )),
        }
    }

    /// `[sign] [coef] name`, returning the coefficient and name; a number
    /// without a following name is a constant (name `None`).
    fn term(&mut self) -> Result<(f64, Option<String>)> {
        let line = self.line();
        let mut sign = 1.0;
        while let Some(Tok::Sym(s @ ("+" | "-"))) = self.peek() {
            if *s == "-" {
                sign = -sign;
            }
            self.pos += 1;
        }
        let mut coef = 1.0;
        if let Some(Tok::Num(v)) = self.peek() {
            coef = *v;
            self.pos += 1;
            if !matches!(self.peek(), Some(Tok::Ident(_))) {
                return Ok((sign * coef, None));
            }
        }
        match self.next() {
            Some(Tok::Ident(s)) => Ok((sign * coef, Some(s))),
            other => Err(Error::parse(
                line,
                format!("expected a term, got {other:?}"),
            )),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
}

fn section_of(line: &str) -> Option<Option<Section>> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "maximize" | "minimise" | "maximise" | "min" | "max" => {
            Some(Some(Section::Objective))
        }
        "subject to" | "such that" | "st" | "s.t." => Some(Some(Section::Constraints)),
        "bounds" => Some(Some(Section::Bounds)),
        "generals" | "general" | "gen" => Some(Some(Section::Generals)),
        "binaries" | "binary" | "bin" => Some(Some(Section::Binaries)),
        "end" => Some(None),
        _ => None,
    }
}

fn parse_header(line: &str) -> Option<(usize, usize, f64)> {
    let rest = line.strip_prefix('\\')?.trim().strip_prefix(HEADER_TAG)?;
    let mut n = None;
    let mut t = None;
    let mut m = None;
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=')?;
        match k {
            "n_vehicles" => n = v.parse().ok(),
            "horizon" => t = v.parse().ok(),
            "big_m" => m = v.parse().ok(),
            _ => {}
        }
    }
    Some((n?, t?, m?))
}

/// Reads a model written by [`emit_lp`]. Variable order follows the
/// `Bounds` section, so every variable must have a bounds line.
pub fn parse_lp(text: &str) -> Result<MiqpModel> {
    let mut header = None;
    let mut sense = None;
    let mut sections: Vec<(Section, Vec<(usize, Tok)>)> = Vec::new();
    let mut ended = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with('\\') {
            if header.is_none() {
                header = parse_header(line);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(Error::parse(line_no, "content after `End`"));
        }
        if let Some(sec) = section_of(line) {
            match sec {
                Some(s) => {
                    if s == Section::Objective {
                        sense = Some(if line.to_ascii_lowercase().starts_with("max") {
                            ObjectiveSense::Maximize
                        } else {
                            ObjectiveSense::Minimize
                        });
                    }
                    sections.push((s, Vec::new()));
                }
                None => ended = true,
            }
            continue;
        }
        let Some((_, toks)) = sections.last_mut() else {
            return Err(Error::parse(
                line_no,
                "content before the objective section",
            ));
        };
        toks.extend(tokenize(line, line_no)?.into_iter().map(|t| (line_no, t)));
    }
    let last_line = text.lines().count();
    if !ended {
        return Err(Error::parse(last_line, "missing `End`"));
    }
    let (n_vehicles, horizon, big_m) =
        header.ok_or_else(|| Error::parse(1, format!("missing `\\ {HEADER_TAG}` header line")))?;
    let sense = sense.ok_or_else(|| Error::parse(1, "missing objective section"))?;

    let find = |s: Section| {
        sections
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, t)| t.clone())
    };
    let cursor = |toks: Option<Vec<(usize, Tok)>>| Cursor {
        toks: toks.unwrap_or_default(),
        pos: 0,
        last_line,
    };

    // Bounds fix the variable table.
    let mut variables = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut c = cursor(find(Section::Bounds));
    while !c.done() {
        let line = c.line();
        let lower = c.signed_num()?;
        c.expect_sym("<=")?;
        let name = c.ident()?;
        c.expect_sym("<=")?;
        let upper = c.signed_num()?;
        if index.insert(name.clone(), variables.len()).is_some() {
            return Err(Error::parse(line, format!("duplicate bounds for `{name}`")));
        }
        variables.push(Variable {
            name,
            kind: VarKind::Continuous,
            lower,
            upper,
        });
    }
    for (sec, kind) in [
        (Section::Generals, VarKind::Integer),
        (Section::Binaries, VarKind::Binary),
    ] {
        let mut c = cursor(find(sec));
        while !c.done() {
            let line = c.line();
            let name = c.ident()?;
            let j = *index
                .get(&name)
                .ok_or_else(|| Error::parse(line, format!("undeclared variable `{name}`")))?;
            variables[j].kind = kind;
        }
    }
    let lookup = |name: &str, line: usize| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("undeclared variable `{name}`")))
    };

    let mut c = cursor(find(Section::Objective));
    let mut objective_constant = 0.0;
    let mut objective_linear = Vec::new();
    let mut objective_quadratic = Vec::new();
    if let (Some(Tok::Ident(_)), Some((_, Tok::Sym(":")))) = (c.peek().cloned(), c.toks.get(1)) {
        c.pos = 2;
    }
    while !c.done() {
        let line = c.line();
        // `+ [` opens the quadratic block.
        let save = c.pos;
        if matches!(c.peek(), Some(Tok::Sym("+"))) {
            c.pos += 1;
        }
        if matches!(c.peek(), Some(Tok::Sym("["))) {
            c.pos += 1;
            while !matches!(c.peek(), Some(Tok::Sym("]"))) {
                if c.done() {
                    return Err(Error::parse(line, "unterminated `[`"));
                }
                let line = c.line();
                let (coef, name) = c.term()?;
                let name = name.ok_or_else(|| Error::parse(line, "constant inside `[ ]`"))?;
                let i = lookup(&name, line)?;
                let j = match c.next() {
                    Some(Tok::Sym("^")) => {
                        match c.next() {
                            Some(Tok::Num(p)) if p == 2.0 => {}
                            other => {
                                return Err(Error::parse(
                                    line,
                                    format!("expected `2`, got {other:?}"),
                                ))
                            }
                        }
                        i
                    }
                    Some(Tok::Sym("*")) => lookup(&c.ident()?, line)?,
                    other => {
                        return Err(Error::parse(
                            line,
                            format!("expected `^` or `*`, got {other:?}"),
                        ))
                    }
                };
                objective_quadratic.push((i, j, coef / 2.0));
            }
            c.pos += 1;
            c.expect_sym("/")?;
            match c.next() {
                Some(Tok::Num(d)) if d == 2.0 => {}
                other => return Err(Error::parse(line, format!("expected `/ 2`, got {other:?}"))),
            }
            continue;
        }
        c.pos = save;
        let (coef, name) = c.term()?;
        match name {
            Some(name) => objective_linear.push((lookup(&name, line)?, coef)),
            None => objective_constant += coef,
        }
    }

    let mut constraints = Vec::new();
    let mut c = cursor(find(Section::Constraints));
    while !c.done() {
        let line = c.line();
        let name = c.ident()?;
        c.expect_sym(":")?;
        let mut terms = Vec::new();
        let sense = loop {
            match c.peek() {
                Some(Tok::Sym("<=")) => break Sense::Le,
                Some(Tok::Sym(">=")) => break Sense::Ge,
                Some(Tok::Sym("=")) => break Sense::Eq,
                None => return Err(Error::parse(line, format!("row `{name}` has no sense"))),
                _ => {}
            }
            let tline = c.line();
            let (coef, var) = c.term()?;
            let var = var.ok_or_else(|| Error::parse(tline, "constant on the left-hand side"))?;
            terms.push((lookup(&var, tline)?, coef));
        };
        c.pos += 1;
        let rhs = c.signed_num()?;
        constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }

    Ok(MiqpModel {
        n_vehicles,
        horizon,
        big_m,
        sense,
        variables,
        objective_constant,
        objective_linear,
        objective_quadratic,
        constraints,
    })
}
