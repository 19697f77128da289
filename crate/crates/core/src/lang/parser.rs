//! Line-oriented recursive-descent parser for `.icl` circuit files.

use std::collections::HashMap;

use super::ast::{CircuitAst, ElementKind, Label, SagnacArg, SourceSpan, Statement};
use super::{LangError, LangErrorKind};
use crate::fock::Role;
use crate::optics::Preset;

#[derive(Clone, Debug)]
struct Token<'a> {
    text: &'a str,
    span: SourceSpan,
}

fn tokenize(line: &str, line_no: u32) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<(usize, u32)> = None;
    let mut col = 0u32;
    for (byte, ch) in code.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                tokens.push(token(code, b, byte, line_no, c));
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(token(code, b, code.len(), line_no, c));
    }
    tokens
}

fn token(code: &str, from: usize, to: usize, line: u32, column: u32) -> Token<'_> {
    let text = &code[from..to];
    Token {
        text,
        span: SourceSpan::new(line, column, text.chars().count() as u32),
    }
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

/// Decimal or scientific literal: `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`.
fn is_number(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

const KEYWORDS: &str = "`mode`, `input`, `bs`, `phase`, `sagnac`, `route` or `preset`";
const ROLES: &str = "loop-co, loop-counter, alice, bob, discard or source";

struct LineParser<'a, 'b> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    declared: &'b HashMap<String, SourceSpan>,
}

impl<'a> LineParser<'a, '_> {
    fn keyword(&self) -> &Token<'a> {
        &self.tokens[0]
    }

    fn last(&self) -> &Token<'a> {
        &self.tokens[self.pos.max(1) - 1]
    }

    fn statement_span(&self) -> SourceSpan {
        self.keyword()
            .span
            .to(self.tokens.last().expect("non-empty line").span)
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn missing(&self, what: &str) -> LangError {
        let after = self.last();
        LangError::new(
            LangErrorKind::Syntax,
            self.keyword().span.to(after.span),
            format!("expected {what} after `{}`", after.text),
        )
    }

    fn label(&mut self, what: &str) -> Result<Label, LangError> {
        let t = self.next().ok_or_else(|| self.missing(what))?;
        if !is_label(t.text) {
            return Err(LangError::new(
                LangErrorKind::Syntax,
                t.span,
                format!(
                    "expected {what} ([A-Za-z][A-Za-z0-9._-]*), found `{}`",
                    t.text
                ),
            ));
        }
        Ok(Label {
            name: t.text.to_owned(),
            span: t.span,
        })
    }

    /// A label that must already be declared by a `mode` line.
    fn mode_ref(&mut self, what: &str) -> Result<Label, LangError> {
        let l = self.label(what)?;
        if !self.declared.contains_key(&l.name) {
            return Err(LangError::new(
                LangErrorKind::Undeclared,
                l.span,
                format!(
                    "mode `{}` is used before being declared with `mode`",
                    l.name
                ),
            ));
        }
        Ok(l)
    }

    fn number(&mut self, what: &str) -> Result<(f64, SourceSpan), LangError> {
        let t = self.next().ok_or_else(|| self.missing(what))?;
        parse_number(&t, what)
    }

    fn end(&mut self, expected: &str) -> Result<(), LangError> {
        match self.next() {
            None => Ok(()),
            Some(t) => Err(LangError::new(
                LangErrorKind::Syntax,
                t.span,
                format!("expected {expected}, found `{}`", t.text),
            )),
        }
    }
}

fn parse_number(t: &Token<'_>, what: &str) -> Result<(f64, SourceSpan), LangError> {
    let bad = || {
        LangError::new(
            LangErrorKind::Syntax,
            t.span,
            format!(
                "expected {what} (decimal or scientific literal), found `{}`",
                t.text
            ),
        )
    };
    if !is_number(t.text) {
        return Err(bad());
    }
    let x: f64 = t.text.parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(LangError::new(
            LangErrorKind::Syntax,
            t.span,
            format!("number `{}` is out of range", t.text),
        ));
    }
    Ok((x, t.span))
}

/// Parses `.icl` source into an AST. Labels must be declared before use.
pub fn parse(source: &str) -> Result<CircuitAst, LangError> {
    let mut statements = Vec::new();
    let mut declared: HashMap<String, SourceSpan> = HashMap::new();
    let mut input_seen: Option<SourceSpan> = None;
    let mut preset_seen: Option<SourceSpan> = None;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let tokens = tokenize(raw, line_no);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            tokens,
            pos: 1,
            declared: &declared,
        };
        let kw = p.keyword().clone();
        let stmt = match kw.text {
            "mode" => {
                let label = p.label("a mode label")?;
                let role_tok = p
                    .next()
                    .ok_or_else(|| p.missing(&format!("a role ({ROLES})")))?;
                let role: Role = role_tok.text.parse().map_err(|_| {
                    LangError::new(
                        LangErrorKind::Syntax,
                        role_tok.span,
                        format!("expected a role ({ROLES}), found `{}`", role_tok.text),
                    )
                })?;
                p.end("end of line after the role")?;
                if let Some(first) = declared.get(&label.name) {
                    return Err(LangError::new(
                        LangErrorKind::Syntax,
                        label.span,
                        format!(
                            "mode `{}` is already declared at line {}",
                            label.name, first.line
                        ),
                    ));
                }
                Statement::Mode {
                    span: p.statement_span(),
                    label,
                    role,
                }
            }
            "input" => {
                if let Some(first) = input_seen {
                    return Err(LangError::new(
                        LangErrorKind::Syntax,
                        kw.span,
                        format!("input is already declared at line {}", first.line),
                    ));
                }
                let mut labels = vec![p.mode_ref("an input mode label")?];
                while p.pos < p.tokens.len() {
                    labels.push(p.mode_ref("an input mode label")?);
                }
                input_seen = Some(kw.span);
                Statement::Input {
                    span: p.statement_span(),
                    labels,
                }
            }
            "bs" => {
                let m1 = p.mode_ref("a mode label (first beam-splitter port)")?;
                let m2 = p.mode_ref("a mode label (second beam-splitter port)")?;
                let inverse = match p.next() {
                    None => false,
                    Some(t) if t.text == "inverse" => {
                        p.end("end of line after `inverse`")?;
                        true
                    }
                    Some(t) => {
                        return Err(LangError::new(
                            LangErrorKind::Syntax,
                            t.span,
                            format!("expected `inverse` or end of line, found `{}`", t.text),
                        ))
                    }
                };
                element(&p, ElementKind::Bs { m1, m2, inverse })
            }
            "phase" => {
                let mode = p.mode_ref("a mode label")?;
                let (theta, _) = p.number("a phase in radians")?;
                p.end("end of line after the phase")?;
                element(&p, ElementKind::Phase { mode, theta })
            }
            "sagnac" => {
                let t = p
                    .next()
                    .ok_or_else(|| p.missing("a phase in radians or `phi`"))?;
                let phi = if t.text == "phi" {
                    SagnacArg::Phi
                } else {
                    SagnacArg::Number(parse_number(&t, "a phase in radians or `phi`")?.0)
                };
                p.end("end of line after the phase")?;
                element(&p, ElementKind::Sagnac { phi })
            }
            "route" => {
                let input = p.mode_ref("a mode label (routed input)")?;
                let through = p.mode_ref("a mode label (through port)")?;
                let discard = p.mode_ref("a mode label (discard port)")?;
                p.end("end of line after the discard port")?;
                element(
                    &p,
                    ElementKind::Route {
                        input,
                        through,
                        discard,
                    },
                )
            }
            "preset" => {
                let t = p
                    .next()
                    .ok_or_else(|| p.missing("a preset name (core4 or full12)"))?;
                let preset: Preset = t.text.parse().map_err(|_| {
                    LangError::new(
                        LangErrorKind::Syntax,
                        t.span,
                        format!(
                            "expected a preset name (core4 or full12), found `{}`",
                            t.text
                        ),
                    )
                })?;
                p.end("end of line after the preset name")?;
                Statement::Preset {
                    preset,
                    span: p.statement_span(),
                }
            }
            other => {
                return Err(LangError::new(
                    LangErrorKind::Syntax,
                    kw.span,
                    format!("expected {KEYWORDS}, found `{other}`"),
                ))
            }
        };

        let is_preset = matches!(stmt, Statement::Preset { .. });
        if let Some(first) = preset_seen {
            return Err(LangError::new(
                LangErrorKind::Syntax,
                stmt.span(),
                format!(
                    "a preset program must contain only the preset line (line {})",
                    first.line
                ),
            ));
        }
        if is_preset && !statements.is_empty() {
            return Err(LangError::new(
                LangErrorKind::Syntax,
                stmt.span(),
                "`preset` must be the only statement in a program".into(),
            ));
        }
        if is_preset {
            preset_seen = Some(stmt.span());
        }
        if let Statement::Mode { label, .. } = &stmt {
            declared.insert(label.name.clone(), label.span);
        }
        statements.push(stmt);
    }
    Ok(CircuitAst { statements })
}

fn element(p: &LineParser<'_, '_>, element: ElementKind) -> Statement {
    Statement::Element {
        element,
        span: p.statement_span(),
    }
}
