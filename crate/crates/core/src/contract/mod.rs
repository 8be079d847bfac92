//! The contract dialect: parser, syntax tree and deterministic renderer.
//!
//! The dialect is the small, pre-0.5 flavoured subset that the pattern
//! templates and the schema compiler need. Anything outside it is rejected
//! with [`ParseError::Unsupported`] rather than dropped.

pub mod ast;
mod lexer;
mod parser;
mod render;

use std::collections::BTreeSet;

use thiserror::Error;

pub use ast::*;
pub(crate) use parser::is_reserved_word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: expected {expected}, found {found}")]
    Syntax {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("{span}: unsupported construct: {construct}")]
    Unsupported { span: Span, construct: String },
    #[error("{span}: {message}")]
    Invalid { span: Span, message: String },
}

impl ParseError {
    pub(crate) fn syntax(span: Span, expected: &str, found: String) -> Self {
        ParseError::Syntax {
            span,
            expected: expected.to_string(),
            found,
        }
    }

    pub(crate) fn unsupported(span: Span, construct: String) -> Self {
        ParseError::Unsupported { span, construct }
    }

    pub(crate) fn invalid(span: Span, message: String) -> Self {
        ParseError::Invalid { span, message }
    }

    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Unsupported { span, .. }
            | ParseError::Invalid { span, .. } => *span,
        }
    }
}

/// Parses contract source and checks the unit-level invariants.
pub fn parse(source: &str) -> Result<SourceUnit, ParseError> {
    let unit = parser::parse_unit(source)?;
    validate(&unit)?;
    Ok(unit)
}

/// Pretty-prints a unit. Output is a pure function of the tree's structure.
pub fn render(unit: &SourceUnit) -> String {
    render::render_unit(unit)
}

/// One-line header of a function, as it appears in rendered source.
pub fn function_signature(f: &FunctionDef) -> String {
    render::function_header(f)
}

/// Structural equality ignoring layout, comments and spans.
pub fn ast_equal(a: &SourceUnit, b: &SourceUnit) -> bool {
    a == b
}

/// Checks name uniqueness, placeholder counts and constant-function purity.
pub fn validate(unit: &SourceUnit) -> Result<(), ParseError> {
    let mut contract_names = BTreeSet::new();
    for c in &unit.contracts {
        if !contract_names.insert(c.name.as_str()) {
            return Err(ParseError::invalid(
                c.span,
                format!("duplicate contract name `{}`", c.name),
            ));
        }
        validate_contract(c)?;
    }
    Ok(())
}

/// Base contract names that do not resolve within the unit.
pub fn unresolved_bases(unit: &SourceUnit) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for c in &unit.contracts {
        for b in &c.bases {
            if unit.contract(b).is_none() {
                out.push((c.name.clone(), b.clone()));
            }
        }
    }
    out
}

fn validate_contract(c: &ContractDef) -> Result<(), ParseError> {
    let mut members = BTreeSet::new();
    let spans = c
        .state_vars
        .iter()
        .map(|v| v.span)
        .chain(c.functions.iter().map(|f| f.span))
        .chain(c.modifiers.iter().map(|m| m.span));
    for ((kind, name), span) in c.member_names().into_iter().zip(spans) {
        if !members.insert(name) {
            return Err(ParseError::invalid(
                span,
                format!("duplicate member `{name}` ({kind}) in contract `{}`", c.name),
            ));
        }
    }
    if let Some(ctor) = &c.constructor {
        unique_params(&ctor.params, "constructor")?;
        check_no_placeholder(&ctor.body, ctor.span, "constructor")?;
    }
    for f in &c.functions {
        unique_params(&f.params, &f.name)?;
        check_no_placeholder(&f.body, f.span, &f.name)?;
        if f.is_constant {
            let state: BTreeSet<&str> = c.state_vars.iter().map(|v| v.name.as_str()).collect();
            let mut locals: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
            locals.extend(f.returns.iter().filter_map(|r| r.name.clone()));
            check_constant_body(&f.body, &state, &mut locals, &f.name)?;
        }
    }
    for m in &c.modifiers {
        unique_params(&m.params, &m.name)?;
        if count_placeholders(&m.body) > 1 {
            return Err(ParseError::invalid(
                m.span,
                format!("modifier `{}` contains more than one placeholder", m.name),
            ));
        }
    }
    Ok(())
}

fn unique_params(params: &[Param], owner: &str) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert(p.name.as_str()) {
            return Err(ParseError::invalid(
                p.span,
                format!("duplicate parameter `{}` in `{owner}`", p.name),
            ));
        }
    }
    Ok(())
}

fn check_no_placeholder(body: &[Stmt], span: Span, owner: &str) -> Result<(), ParseError> {
    if count_placeholders(body) > 0 {
        return Err(ParseError::invalid(
            span,
            format!("placeholder `_;` outside a modifier, in `{owner}`"),
        ));
    }
    Ok(())
}

fn root_ident(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Ident(n) => Some(n),
        ExprKind::Index { base, .. } | ExprKind::Member { base, .. } => root_ident(base),
        _ => None,
    }
}

fn check_constant_body(
    body: &[Stmt],
    state: &BTreeSet<&str>,
    locals: &mut BTreeSet<String>,
    owner: &str,
) -> Result<(), ParseError> {
    let writes_state = |e: &Expr, locals: &BTreeSet<String>| {
        root_ident(e)
            .map(|n| state.contains(n) && !locals.contains(n))
            .unwrap_or(false)
    };
    let violation =
        |span: Span| ParseError::invalid(span, format!("constant function `{owner}` assigns to contract state"));
    for stmt in body {
        match &stmt.kind {
            StmtKind::VarDecl(v) => {
                locals.insert(v.name.clone());
            }
            StmtKind::Assign { target, .. } | StmtKind::Increment(target) => {
                if writes_state(target, locals) {
                    return Err(violation(stmt.span));
                }
            }
            StmtKind::Expr(Expr {
                kind: ExprKind::Push { array, .. },
                ..
            }) => {
                if writes_state(array, locals) {
                    return Err(violation(stmt.span));
                }
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                check_constant_body(then_branch, state, locals, owner)?;
                if let Some(e) = else_branch {
                    check_constant_body(e, state, locals, owner)?;
                }
            }
            StmtKind::For { counter, body, .. } => {
                locals.insert(counter.clone());
                check_constant_body(body, state, locals, owner)?;
            }
            _ => {}
        }
    }
    Ok(())
}
