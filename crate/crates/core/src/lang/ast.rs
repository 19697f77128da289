use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fock::Role;
use crate::optics::Preset;

/// 1-based location of a token or statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        Self {
            line: line.max(1),
            column: column.max(1),
            length: length.max(1),
        }
    }

    /// From the start of `self` to the end of `other` (same line).
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        let end = other.column + other.length;
        SourceSpan::new(self.line, self.column, end.saturating_sub(self.column))
    }

    /// True if the span addresses characters that exist in `source`.
    pub fn within(&self, source: &str) -> bool {
        source
            .lines()
            .nth(self.line as usize - 1)
            .is_some_and(|l| (self.column + self.length - 1) as usize <= l.chars().count())
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SagnacArg {
    Number(f64),
    Phi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ElementKind {
    Bs {
        m1: Label,
        m2: Label,
        inverse: bool,
    },
    Phase {
        mode: Label,
        theta: f64,
    },
    Sagnac {
        phi: SagnacArg,
    },
    Route {
        input: Label,
        through: Label,
        discard: Label,
    },
}

impl ElementKind {
    pub fn labels(&self) -> Vec<&Label> {
        match self {
            ElementKind::Bs { m1, m2, .. } => vec![m1, m2],
            ElementKind::Phase { mode, .. } => vec![mode],
            ElementKind::Sagnac { .. } => vec![],
            ElementKind::Route {
                input,
                through,
                discard,
            } => vec![input, through, discard],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stmt", rename_all = "lowercase")]
pub enum Statement {
    Mode {
        label: Label,
        role: Role,
        span: SourceSpan,
    },
    Input {
        labels: Vec<Label>,
        span: SourceSpan,
    },
    Element {
        element: ElementKind,
        span: SourceSpan,
    },
    Preset {
        preset: Preset,
        span: SourceSpan,
    },
}

impl Statement {
    pub fn span(&self) -> SourceSpan {
        match self {
            Statement::Mode { span, .. }
            | Statement::Input { span, .. }
            | Statement::Element { span, .. }
            | Statement::Preset { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitAst {
    pub statements: Vec<Statement>,
}

impl CircuitAst {
    /// Copy with every span reset to `1:1`, for comparing structure only.
    pub fn without_spans(&self) -> CircuitAst {
        let z = SourceSpan::new(1, 1, 1);
        let l = |l: &Label| Label {
            name: l.name.clone(),
            span: z,
        };
        let statements = self
            .statements
            .iter()
            .map(|s| match s {
                Statement::Mode { label, role, .. } => Statement::Mode {
                    label: l(label),
                    role: *role,
                    span: z,
                },
                Statement::Input { labels, .. } => Statement::Input {
                    labels: labels.iter().map(l).collect(),
                    span: z,
                },
                Statement::Element { element, .. } => Statement::Element {
                    element: match element {
                        ElementKind::Bs { m1, m2, inverse } => ElementKind::Bs {
                            m1: l(m1),
                            m2: l(m2),
                            inverse: *inverse,
                        },
                        ElementKind::Phase { mode, theta } => ElementKind::Phase {
                            mode: l(mode),
                            theta: *theta,
                        },
                        ElementKind::Sagnac { phi } => ElementKind::Sagnac { phi: *phi },
                        ElementKind::Route {
                            input,
                            through,
                            discard,
                        } => ElementKind::Route {
                            input: l(input),
                            through: l(through),
                            discard: l(discard),
                        },
                    },
                    span: z,
                },
                Statement::Preset { preset, .. } => Statement::Preset {
                    preset: *preset,
                    span: z,
                },
            })
            .collect();
        CircuitAst { statements }
    }
}

impl fmt::Display for CircuitAst {
    /// Canonical source form: one statement per line, single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            match s {
                Statement::Mode { label, role, .. } => writeln!(f, "mode {} {}", label.name, role)?,
                Statement::Input { labels, .. } => {
                    f.write_str("input")?;
                    for l in labels {
                        write!(f, " {}", l.name)?;
                    }
                    writeln!(f)?;
                }
                Statement::Element { element, .. } => match element {
                    ElementKind::Bs { m1, m2, inverse } => {
                        write!(f, "bs {} {}", m1.name, m2.name)?;
                        if *inverse {
                            f.write_str(" inverse")?;
                        }
                        writeln!(f)?;
                    }
                    ElementKind::Phase { mode, theta } => {
                        writeln!(f, "phase {} {:?}", mode.name, theta)?
                    }
                    ElementKind::Sagnac {
                        phi: SagnacArg::Phi,
                    } => writeln!(f, "sagnac phi")?,
                    ElementKind::Sagnac {
                        phi: SagnacArg::Number(x),
                    } => writeln!(f, "sagnac {x:?}")?,
                    ElementKind::Route {
                        input,
                        through,
                        discard,
                    } => writeln!(f, "route {} {} {}", input.name, through.name, discard.name)?,
                },
                Statement::Preset { preset, .. } => writeln!(f, "preset {preset}")?,
            }
        }
        Ok(())
    }
}
