//! Terse constructors for syntax-tree fragments.

use crate::contract::*;
use crate::types::Address;

pub fn ident(name: &str) -> Expr {
    Expr::new(ExprKind::Ident(name.to_string()))
}

pub fn boolean(v: bool) -> Expr {
    Expr::new(ExprKind::Literal(Literal::Bool(v)))
}

pub fn uint(v: u128) -> Expr {
    Expr::new(ExprKind::Literal(Literal::Uint(v)))
}

pub fn address(a: Address) -> Expr {
    Expr::new(ExprKind::Literal(Literal::Address(a)))
}

pub fn sender() -> Expr {
    member(ident("msg"), "sender")
}

pub fn member(base: Expr, name: &str) -> Expr {
    Expr::new(ExprKind::Member {
        base: Box::new(base),
        member: name.to_string(),
    })
}

pub fn index(base: Expr, i: Expr) -> Expr {
    Expr::new(ExprKind::Index {
        base: Box::new(base),
        index: Box::new(i),
    })
}

pub fn call(callee: &str, args: Vec<Expr>) -> Expr {
    Expr::new(ExprKind::Call {
        callee: callee.to_string(),
        args,
    })
}

pub fn bin(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::new(ExprKind::Binary {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
    })
}

pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
    bin(BinaryOp::Eq, lhs, rhs)
}

pub fn and(lhs: Expr, rhs: Expr) -> Expr {
    bin(BinaryOp::And, lhs, rhs)
}

pub fn assign(target: Expr, value: Expr) -> Stmt {
    Stmt::new(StmtKind::Assign { target, value })
}

pub fn push(array: Expr, value: Expr) -> Stmt {
    Stmt::new(StmtKind::Expr(Expr::new(ExprKind::Push {
        array: Box::new(array),
        value: Box::new(value),
    })))
}

pub fn expr(e: Expr) -> Stmt {
    Stmt::new(StmtKind::Expr(e))
}

pub fn increment(target: Expr) -> Stmt {
    Stmt::new(StmtKind::Increment(target))
}

pub fn if_(cond: Expr, then_branch: Vec<Stmt>) -> Stmt {
    Stmt::new(StmtKind::If {
        cond,
        then_branch,
        else_branch: None,
    })
}

pub fn if_else(cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>) -> Stmt {
    Stmt::new(StmtKind::If {
        cond,
        then_branch,
        else_branch: Some(else_branch),
    })
}

/// `for (uint i = 0; i < bound; i++) { body }`
pub fn for_each(bound: Expr, body: Vec<Stmt>) -> Stmt {
    Stmt::new(StmtKind::For {
        counter: "i".to_string(),
        start: uint(0),
        bound,
        body,
    })
}

pub fn ret(values: Vec<Expr>) -> Stmt {
    Stmt::new(StmtKind::Return(values))
}

pub fn placeholder() -> Stmt {
    Stmt::new(StmtKind::Placeholder)
}

pub fn brk() -> Stmt {
    Stmt::new(StmtKind::Break)
}

pub fn local(ty: TypeName, name: &str, init: Option<Expr>) -> Stmt {
    Stmt::new(StmtKind::VarDecl(var(ty, name, init)))
}

pub fn var(ty: TypeName, name: &str, init: Option<Expr>) -> VarDecl {
    VarDecl {
        ty,
        name: name.to_string(),
        init,
        span: Span::default(),
    }
}

pub fn param(ty: TypeName, name: &str) -> Param {
    Param {
        ty,
        name: name.to_string(),
        span: Span::default(),
    }
}

pub fn invocation(name: &str, args: Vec<Expr>) -> ModifierInvocation {
    ModifierInvocation {
        name: name.to_string(),
        args,
        span: Span::default(),
    }
}

pub fn function(name: &str, params: Vec<Param>, body: Vec<Stmt>) -> FunctionDef {
    FunctionDef {
        name: name.to_string(),
        params,
        modifiers: Vec::new(),
        is_constant: false,
        is_internal: false,
        returns: Vec::new(),
        body,
        span: Span::default(),
    }
}

pub fn modifier(name: &str, params: Vec<Param>, body: Vec<Stmt>) -> ModifierDef {
    ModifierDef {
        name: name.to_string(),
        params,
        body,
        span: Span::default(),
    }
}

pub fn constructor(params: Vec<Param>, body: Vec<Stmt>) -> ConstructorDef {
    ConstructorDef {
        params,
        modifiers: Vec::new(),
        body,
        span: Span::default(),
    }
}

pub fn address_array() -> TypeName {
    TypeName::Array(ElementaryType::Address)
}
