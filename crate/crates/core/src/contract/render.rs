use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub(crate) fn render_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_contract(&mut out, c);
    }
    out
}

fn render_contract(out: &mut String, c: &ContractDef) {
    out.push_str("contract ");
    out.push_str(&c.name);
    if !c.bases.is_empty() {
        out.push_str(" is ");
        out.push_str(&c.bases.join(", "));
    }
    out.push_str(" {\n");

    let mut sections = 0;
    for v in &c.state_vars {
        out.push_str(INDENT);
        render_var_decl(out, v);
        out.push('\n');
    }
    if !c.state_vars.is_empty() {
        sections += 1;
    }
    let mut separate = |out: &mut String| {
        if sections > 0 {
            out.push('\n');
        }
        sections += 1;
    };
    if let Some(ctor) = &c.constructor {
        separate(out);
        let _ = write!(out, "{INDENT}function {}(", c.name);
        render_params(out, &ctor.params);
        out.push(')');
        render_invocations(out, &ctor.modifiers);
        out.push_str(" {\n");
        render_block(out, &ctor.body, 2);
        let _ = writeln!(out, "{INDENT}}}");
    }
    for f in &c.functions {
        separate(out);
        out.push_str(INDENT);
        out.push_str(&function_header(f));
        out.push_str(" {\n");
        render_block(out, &f.body, 2);
        let _ = writeln!(out, "{INDENT}}}");
    }
    for m in &c.modifiers {
        separate(out);
        let _ = write!(out, "{INDENT}modifier {}(", m.name);
        render_params(out, &m.params);
        out.push_str(") {\n");
        render_block(out, &m.body, 2);
        let _ = writeln!(out, "{INDENT}}}");
    }
    out.push_str("}\n");
}

/// `function name(params) modifiers [constant] [returns (...)]`
pub(crate) fn function_header(f: &FunctionDef) -> String {
    let mut out = String::new();
    let _ = write!(out, "function {}(", f.name);
    render_params(&mut out, &f.params);
    out.push(')');
    if f.is_internal {
        out.push_str(" internal");
    }
    render_invocations(&mut out, &f.modifiers);
    if f.is_constant {
        out.push_str(" constant");
    }
    if !f.returns.is_empty() {
        out.push_str(" returns (");
        for (i, r) in f.returns.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}", r.ty);
            if let Some(name) = &r.name {
                let _ = write!(out, " {name}");
            }
        }
        out.push(')');
    }
    out
}

fn render_params(out: &mut String, params: &[Param]) {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty, p.name);
    }
}

fn render_invocations(out: &mut String, invs: &[ModifierInvocation]) {
    for inv in invs {
        let _ = write!(out, " {}(", inv.name);
        render_expr_list(out, &inv.args);
        out.push(')');
    }
}

fn render_var_decl(out: &mut String, v: &VarDecl) {
    let _ = write!(out, "{} {}", v.ty, v.name);
    if let Some(init) = &v.init {
        out.push_str(" = ");
        render_expr(out, init, 0);
    }
    out.push(';');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn render_block(out: &mut String, body: &[Stmt], depth: usize) {
    for stmt in body {
        render_stmt(out, stmt, depth);
    }
}

fn render_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match &stmt.kind {
        StmtKind::VarDecl(v) => render_var_decl(out, v),
        StmtKind::Assign { target, value } => {
            render_expr(out, target, 0);
            out.push_str(" = ");
            render_expr(out, value, 0);
            out.push(';');
        }
        StmtKind::Increment(target) => {
            render_expr(out, target, 0);
            out.push_str("++;");
        }
        StmtKind::If { .. } => render_if(out, stmt, depth),
        StmtKind::For {
            counter,
            start,
            bound,
            body,
        } => {
            let _ = write!(out, "for (uint {counter} = ");
            render_expr(out, start, 0);
            let _ = write!(out, "; {counter} < ");
            render_expr(out, bound, PREC_CMP + 1);
            let _ = writeln!(out, "; {counter}++) {{");
            render_block(out, body, depth + 1);
            indent(out, depth);
            out.push('}');
        }
        StmtKind::Return(values) => match values.len() {
            0 => out.push_str("return;"),
            1 => {
                out.push_str("return ");
                render_expr(out, &values[0], 0);
                out.push(';');
            }
            _ => {
                out.push_str("return (");
                render_expr_list(out, values);
                out.push_str(");");
            }
        },
        StmtKind::Expr(e) => {
            render_expr(out, e, 0);
            out.push(';');
        }
        StmtKind::Placeholder => out.push_str("_;"),
        StmtKind::Break => out.push_str("break;"),
    }
    out.push('\n');
}

// Writes an if statement starting at the current position (indentation
// already emitted) and without the trailing newline.
fn render_if(out: &mut String, stmt: &Stmt, depth: usize) {
    let StmtKind::If {
        cond,
        then_branch,
        else_branch,
    } = &stmt.kind
    else {
        unreachable!("render_if called on a non-if statement");
    };
    out.push_str("if (");
    render_expr(out, cond, 0);
    out.push_str(") {\n");
    render_block(out, then_branch, depth + 1);
    indent(out, depth);
    out.push('}');
    if let Some(else_branch) = else_branch {
        if let [nested @ Stmt {
            kind: StmtKind::If { .. },
            ..
        }] = else_branch.as_slice()
        {
            out.push_str(" else ");
            render_if(out, nested, depth);
        } else {
            out.push_str(" else {\n");
            render_block(out, else_branch, depth + 1);
            indent(out, depth);
            out.push('}');
        }
    }
}

const PREC_AND: u8 = 1;
const PREC_CMP: u8 = 2;
const PREC_ATOM: u8 = 3;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op: BinaryOp::And, .. } => PREC_AND,
        ExprKind::Binary { .. } => PREC_CMP,
        _ => PREC_ATOM,
    }
}

fn render_expr_list(out: &mut String, exprs: &[Expr]) {
    for (i, e) in exprs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render_expr(out, e, 0);
    }
}

fn render_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = precedence(e);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Ident(name) => out.push_str(name),
        ExprKind::Literal(lit) => render_literal(out, lit),
        ExprKind::Member { base, member } => {
            render_expr(out, base, PREC_ATOM);
            out.push('.');
            out.push_str(member);
        }
        ExprKind::Index { base, index } => {
            render_expr(out, base, PREC_ATOM);
            out.push('[');
            render_expr(out, index, 0);
            out.push(']');
        }
        ExprKind::Push { array, value } => {
            render_expr(out, array, PREC_ATOM);
            out.push_str(".push(");
            render_expr(out, value, 0);
            out.push(')');
        }
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            render_expr_list(out, args);
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            render_expr(out, lhs, prec);
            let _ = write!(out, " {} ", op.symbol());
            render_expr(out, rhs, prec + 1);
        }
    }
    if parens {
        out.push(')');
    }
}

fn render_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Uint(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Literal::Address(a) => {
            let _ = write!(out, "{a}");
        }
        Literal::Bytes32(b) => {
            let _ = write!(out, "{b}");
        }
        Literal::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    '\0' => out.push_str("\\0"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
    }
}
