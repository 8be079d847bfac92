use proptest::prelude::*;
use ubaas_core::contract::*;
use ubaas_core::types::{Address, Bytes32};

const NAMES: &[&str] = &["a", "b", "owner", "total", "items", "key"];
const CALLEES: &[&str] = &["f0", "f1", "sha256"];

fn elementary() -> impl Strategy<Value = ElementaryType> {
    prop_oneof![
        Just(ElementaryType::Uint),
        Just(ElementaryType::Bool),
        Just(ElementaryType::Address),
        Just(ElementaryType::String),
        Just(ElementaryType::Bytes32),
    ]
}

fn type_name() -> impl Strategy<Value = TypeName> {
    prop_oneof![
        3 => elementary().prop_map(TypeName::Elementary),
        1 => elementary().prop_map(TypeName::Array),
        1 => (elementary(), elementary()).prop_map(|(k, v)| TypeName::Mapping {
            key: k,
            value: Box::new(TypeName::Elementary(v)),
        }),
        1 => (elementary(), elementary()).prop_map(|(k, v)| TypeName::Mapping {
            key: k,
            value: Box::new(TypeName::Array(v)),
        }),
    ]
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<u128>().prop_map(Literal::Uint),
        any::<bool>().prop_map(Literal::Bool),
        "[ -~\n\t]{0,10}".prop_map(Literal::Str),
        any::<[u8; 20]>().prop_map(|b| Literal::Address(Address(b))),
        any::<[u8; 32]>().prop_map(|b| Literal::Bytes32(Bytes32(b))),
    ]
}

fn ident() -> impl Strategy<Value = Expr> {
    prop::sample::select(NAMES).prop_map(|n| Expr::new(ExprKind::Ident(n.to_string())))
}

/// An identifier with index and member accesses.
fn place() -> impl Strategy<Value = Expr> {
    ident().prop_recursive(2, 4, 1, |inner| {
        prop_oneof![
            (inner.clone(), ident()).prop_map(|(b, i)| Expr::new(ExprKind::Index {
                base: Box::new(b),
                index: Box::new(i),
            })),
            inner.prop_map(|b| Expr::new(ExprKind::Member {
                base: Box::new(b),
                member: "length".into(),
            })),
        ]
    })
}

/// Assignment target: an identifier with index accesses.
fn target() -> impl Strategy<Value = Expr> {
    (ident(), prop::collection::vec(ident(), 0..3)).prop_map(|(root, keys)| {
        keys.into_iter().fold(root, |b, k| {
            Expr::new(ExprKind::Index {
                base: Box::new(b),
                index: Box::new(k),
            })
        })
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        2 => place(),
        1 => literal().prop_map(|l| Expr::new(ExprKind::Literal(l))),
        1 => Just(Expr::new(ExprKind::Member {
            base: Box::new(Expr::new(ExprKind::Ident("msg".into()))),
            member: "sender".into(),
        })),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        let op = prop_oneof![
            Just(BinaryOp::Eq),
            Just(BinaryOp::Ne),
            Just(BinaryOp::Lt),
            Just(BinaryOp::Le),
            Just(BinaryOp::Gt),
            Just(BinaryOp::Ge),
            Just(BinaryOp::And),
        ];
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::new(ExprKind::Binary {
                op,
                lhs: Box::new(l),
                rhs: Box::new(r),
            })),
            (
                prop::sample::select(CALLEES),
                prop::collection::vec(inner.clone(), 0..3)
            )
                .prop_map(|(c, args)| {
                    Expr::new(ExprKind::Call {
                        callee: c.to_string(),
                        args,
                    })
                }),
            (place(), inner).prop_map(|(b, i)| Expr::new(ExprKind::Index {
                base: Box::new(b),
                index: Box::new(i),
            })),
        ]
    })
}

fn simple_stmt() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        (type_name(), 0..4usize, prop::option::of(expr())).prop_map(|(ty, i, init)| {
            Stmt::new(StmtKind::VarDecl(VarDecl {
                ty,
                name: format!("l{i}"),
                init,
                span: Span::default(),
            }))
        }),
        (target(), expr()).prop_map(|(target, value)| Stmt::new(StmtKind::Assign { target, value })),
        target().prop_map(|t| Stmt::new(StmtKind::Increment(t))),
        (target(), expr()).prop_map(|(a, v)| Stmt::new(StmtKind::Expr(Expr::new(ExprKind::Push {
            array: Box::new(a),
            value: Box::new(v),
        })))),
        (prop::sample::select(CALLEES), prop::collection::vec(expr(), 0..3)).prop_map(|(c, args)| {
            Stmt::new(StmtKind::Expr(Expr::new(ExprKind::Call {
                callee: c.to_string(),
                args,
            })))
        }),
        prop::collection::vec(expr(), 0..3).prop_map(|v| Stmt::new(StmtKind::Return(v))),
        Just(Stmt::new(StmtKind::Break)),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    simple_stmt().prop_recursive(2, 16, 3, |inner| {
        prop_oneof![
            (
                expr(),
                prop::collection::vec(inner.clone(), 0..3),
                prop::option::of(prop::collection::vec(inner.clone(), 0..3))
            )
                .prop_map(|(cond, then_branch, else_branch)| Stmt::new(StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                })),
            (expr(), expr(), prop::collection::vec(inner, 0..3)).prop_map(|(start, bound, body)| {
                Stmt::new(StmtKind::For {
                    counter: "i".into(),
                    start,
                    bound,
                    body,
                })
            }),
        ]
    })
}

fn params(prefix: &'static str) -> impl Strategy<Value = Vec<Param>> {
    prop::collection::vec(type_name(), 0..3).prop_map(move |tys| {
        tys.into_iter()
            .enumerate()
            .map(|(i, ty)| Param {
                ty,
                name: format!("{prefix}{i}"),
                span: Span::default(),
            })
            .collect()
    })
}

fn invocation() -> impl Strategy<Value = ModifierInvocation> {
    (0..2usize, prop::collection::vec(expr(), 0..2)).prop_map(|(i, args)| ModifierInvocation {
        name: format!("m{i}"),
        args,
        span: Span::default(),
    })
}

fn function(i: usize) -> impl Strategy<Value = FunctionDef> {
    (
        params("p"),
        prop::collection::vec(invocation(), 0..2),
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec((elementary(), prop::option::of(Just("r0"))), 0..3),
        prop::collection::vec(stmt(), 0..4),
    )
        .prop_map(move |(params, modifiers, is_constant, is_internal, rets, body)| {
            // Constant bodies only return, so they never write state.
            let body = if is_constant {
                body.into_iter()
                    .filter(|s| matches!(s.kind, StmtKind::Return(_)))
                    .collect()
            } else {
                body
            };
            let named = rets.len() == 1;
            FunctionDef {
                name: format!("f{i}"),
                params,
                modifiers,
                is_constant,
                is_internal,
                returns: rets
                    .into_iter()
                    .map(|(e, n)| ReturnParam {
                        ty: TypeName::Elementary(e),
                        name: n.filter(|_| named).map(str::to_string),
                        span: Span::default(),
                    })
                    .collect(),
                body,
                span: Span::default(),
            }
        })
}

fn modifier(i: usize) -> impl Strategy<Value = ModifierDef> {
    (params("q"), prop::collection::vec(stmt(), 0..3), 0..4usize).prop_map(move |(params, mut body, at)| {
        body.insert(at.min(body.len()), Stmt::new(StmtKind::Placeholder));
        ModifierDef {
            name: format!("m{i}"),
            params,
            body,
            span: Span::default(),
        }
    })
}

fn contract(i: usize) -> impl Strategy<Value = ContractDef> {
    (
        prop::collection::vec((type_name(), prop::option::of(expr())), 0..4),
        prop::option::of((
            params("c"),
            prop::collection::vec(invocation(), 0..2),
            prop::collection::vec(stmt(), 0..3),
        )),
        (0..3usize).prop_flat_map(|n| (0..n).map(function).collect::<Vec<_>>()),
        (0..3usize).prop_flat_map(|n| (0..n).map(modifier).collect::<Vec<_>>()),
        any::<bool>(),
    )
        .prop_map(move |(vars, ctor, functions, modifiers, inherit)| ContractDef {
            name: format!("C{i}"),
            bases: if inherit && i > 0 {
                vec![format!("C{}", i - 1)]
            } else {
                vec![]
            },
            state_vars: vars
                .into_iter()
                .enumerate()
                .map(|(k, (ty, init))| VarDecl {
                    ty,
                    name: format!("s{k}"),
                    init,
                    span: Span::default(),
                })
                .collect(),
            constructor: ctor.map(|(params, modifiers, body)| ConstructorDef {
                params,
                modifiers,
                body,
                span: Span::default(),
            }),
            functions,
            modifiers,
            span: Span::default(),
        })
}

fn unit() -> impl Strategy<Value = SourceUnit> {
    (1..4usize)
        .prop_flat_map(|n| (0..n).map(contract).collect::<Vec<_>>())
        .prop_map(|contracts| SourceUnit { contracts })
}

fn check_span(source: &str, err: &ParseError) {
    let span = err.span();
    let lines: Vec<&str> = source.split('\n').collect();
    assert!(
        span.line >= 1 && (span.line as usize) <= lines.len(),
        "line {} outside 1..={} for {err}",
        span.line,
        lines.len()
    );
    let width = lines[span.line as usize - 1].chars().count() + 1;
    assert!(
        span.column >= 1 && (span.column as usize) <= width,
        "column {} outside 1..={width} for {err}",
        span.column
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn render_then_parse_round_trips(u in unit()) {
        validate(&u).expect("generated units are well-formed");
        let text = render(&u);
        let back = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert!(ast_equal(&back, &u), "{}", text);
        prop_assert_eq!(render(&back), text);
    }

    #[test]
    fn errors_point_inside_arbitrary_input(src in "[a-z0-9(){};=<>&|!.,\"_\\[\\] \n]{0,80}") {
        if let Err(e) = parse(&src) {
            check_span(&src, &e);
        }
    }

    #[test]
    fn errors_point_inside_mutated_source(u in unit(), cut in any::<prop::sample::Index>(), len in 0..6usize, insert in "[{};()\"#@]?") {
        let text = render(&u);
        let chars: Vec<char> = text.chars().collect();
        let at = cut.index(chars.len() + 1);
        let end = (at + len).min(chars.len());
        let mutated: String = chars[..at].iter().chain(insert.chars().collect::<Vec<_>>().iter()).chain(chars[end..].iter()).collect();
        if let Err(e) = parse(&mutated) {
            check_span(&mutated, &e);
        }
    }
}
