use std::collections::HashMap;
use std::sync::Arc;

use super::ast::{CircuitAst, ElementKind, Label, SagnacArg, SourceSpan, Statement};
use super::{LangError, LangErrorKind};
use crate::fock::{ModeId, ModeRegistry, Role};
use crate::optics::{Circuit, OpticalElement, PhaseArg};
use crate::scalar::Real;

fn compile_error(span: SourceSpan, message: String) -> LangError {
    LangError::new(LangErrorKind::Compile, span, message)
}

/// Builds the registry (declaration order) and circuit (statement order).
/// `sagnac phi` stays symbolic until the circuit is run.
pub fn compile<T: Real>(ast: &CircuitAst) -> Result<(Arc<ModeRegistry>, Circuit<T>), LangError> {
    if let [Statement::Preset { preset, .. }] = ast.statements.as_slice() {
        let circuit = preset.circuit(PhaseArg::Phi);
        return Ok((Arc::clone(circuit.registry()), circuit));
    }

    let mut registry = ModeRegistry::new();
    let mut ids: HashMap<&str, ModeId> = HashMap::new();
    let resolve = |ids: &HashMap<&str, ModeId>, l: &Label| {
        ids.get(l.name.as_str()).cloned().ok_or_else(|| {
            compile_error(
                l.span,
                format!(
                    "mode `{}` is used before being declared with `mode`",
                    l.name
                ),
            )
        })
    };

    let mut input: Option<Vec<ModeId>> = None;
    let mut elements = Vec::new();
    for stmt in &ast.statements {
        match stmt {
            Statement::Mode { label, role, .. } => {
                let id = registry
                    .add(&label.name, *role)
                    .map_err(|e| compile_error(label.span, e.to_string()))?;
                ids.insert(&label.name, id);
            }
            Statement::Input { labels, span } => {
                if input.is_some() {
                    return Err(compile_error(*span, "input is declared twice".into()));
                }
                input = Some(
                    labels
                        .iter()
                        .map(|l| resolve(&ids, l))
                        .collect::<Result<_, _>>()?,
                );
            }
            Statement::Element { element, span } => {
                let el = match element {
                    ElementKind::Bs { m1, m2, inverse } => {
                        let (a, b) = (resolve(&ids, m1)?, resolve(&ids, m2)?);
                        if a == b {
                            return Err(compile_error(
                                *span,
                                format!("beam splitter needs two distinct modes, got `{a}` twice"),
                            ));
                        }
                        OpticalElement::beam_splitter(&a, &b, *inverse)
                    }
                    ElementKind::Phase { mode, theta } => OpticalElement::PhaseShift {
                        mode: resolve(&ids, mode)?,
                        theta: T::lit(*theta),
                    },
                    ElementKind::Sagnac { phi } => {
                        let co: Vec<ModeId> = registry
                            .modes_with_role(Role::LoopCo)
                            .into_iter()
                            .cloned()
                            .collect();
                        let counter: Vec<ModeId> = registry
                            .modes_with_role(Role::LoopCounter)
                            .into_iter()
                            .cloned()
                            .collect();
                        if co.is_empty() || counter.is_empty() {
                            return Err(compile_error(
                                *span,
                                "sagnac needs at least one loop-co and one loop-counter mode declared before it"
                                    .into(),
                            ));
                        }
                        let phi = match phi {
                            SagnacArg::Phi => PhaseArg::Phi,
                            SagnacArg::Number(x) => PhaseArg::Value(T::lit(*x)),
                        };
                        OpticalElement::SagnacPhase { co, counter, phi }
                    }
                    ElementKind::Route {
                        input,
                        through,
                        discard,
                    } => {
                        let route = OpticalElement::Route {
                            input: resolve(&ids, input)?,
                            through: resolve(&ids, through)?,
                            discard: resolve(&ids, discard)?,
                        };
                        route
                            .validate(&registry)
                            .map_err(|e| compile_error(*span, e.to_string()))?;
                        route
                    }
                };
                elements.push(el);
            }
            Statement::Preset { span, .. } => {
                return Err(compile_error(
                    *span,
                    "`preset` must be the only statement in a program".into(),
                ));
            }
        }
    }

    let first_span = ast
        .statements
        .first()
        .map_or(SourceSpan::new(1, 1, 1), Statement::span);
    let input =
        input.ok_or_else(|| compile_error(first_span, "program declares no `input`".into()))?;
    let registry = Arc::new(registry);
    let circuit = Circuit::new(Arc::clone(&registry), input, elements)
        .map_err(|e| compile_error(first_span, e.to_string()))?;
    Ok((registry, circuit))
}
