//! The three pattern base contracts, instantiated per request.

use super::build::*;
use crate::contract::{BinaryOp, ContractDef, ElementaryType, ReturnParam, Span, Stmt, TypeName};
use crate::types::Address;

pub const MULTIPLE_AUTHORITIES: &str = "MultipleAuthorities";
pub const DYNAMIC_BINDING: &str = "DynamicBinding";
pub const EMBEDDED_PERMISSION: &str = "EmbeddedPermission";

/// M-of-N approval. The constructor seeds the authority list and threshold;
/// `requestAgreement` opens a round for the caller, who alone may then run
/// the guarded function once enough authorities have signed.
pub fn multiple_authorities(authorities: &[Address], threshold: u128) -> ContractDef {
    let mut c = ContractDef::new(MULTIPLE_AUTHORITIES);
    c.state_vars = vec![
        var(TypeName::uint(), "total", None),
        var(address_array(), "authority", None),
        var(TypeName::bool(), "agreeing", None),
        var(TypeName::uint(), "agreeThreshold", None),
        var(
            TypeName::Mapping {
                key: ElementaryType::Address,
                value: Box::new(TypeName::bool()),
            },
            "agreeState",
            None,
        ),
        var(TypeName::bool(), "agreePermission", None),
        var(TypeName::address(), "agreeRequester", None),
    ];

    let mut init: Vec<Stmt> = authorities
        .iter()
        .map(|a| push(ident("authority"), address(*a)))
        .collect();
    init.push(assign(ident("total"), uint(authorities.len() as u128)));
    init.push(assign(ident("agreeThreshold"), uint(threshold)));
    c.constructor = Some(constructor(Vec::new(), init));

    let request = function(
        "requestAgreement",
        Vec::new(),
        vec![
            assign(ident("agreeing"), boolean(true)),
            assign(ident("agreeRequester"), sender()),
        ],
    );
    let signature = function(
        "agreeSignature",
        Vec::new(),
        vec![
            assign(index(ident("agreeState"), sender()), boolean(true)),
            if_(
                call("agreeResult", Vec::new()),
                vec![assign(ident("agreePermission"), boolean(true))],
            ),
        ],
    );
    let mut result = function(
        "agreeResult",
        Vec::new(),
        vec![
            local(TypeName::uint(), "k", Some(uint(0))),
            for_each(
                ident("total"),
                vec![if_(
                    eq(
                        index(ident("agreeState"), index(ident("authority"), ident("i"))),
                        boolean(true),
                    ),
                    vec![increment(ident("k"))],
                )],
            ),
            if_else(
                bin(BinaryOp::Ge, ident("k"), ident("agreeThreshold")),
                vec![ret(vec![boolean(true)])],
                vec![ret(vec![boolean(false)])],
            ),
        ],
    );
    result.is_internal = true;
    result.returns = vec![ReturnParam {
        ty: TypeName::bool(),
        name: Some("signatureResult".to_string()),
        span: Span::default(),
    }];
    let mut reset = function(
        "initialAgree",
        Vec::new(),
        vec![
            for_each(
                ident("total"),
                vec![assign(
                    index(ident("agreeState"), index(ident("authority"), ident("i"))),
                    boolean(false),
                )],
            ),
            assign(ident("agreePermission"), boolean(false)),
            assign(ident("agreeing"), boolean(false)),
        ],
    );
    reset.is_internal = true;
    c.functions = vec![request, signature, result, reset];

    c.modifiers = vec![modifier(
        "isEnoughAgreement",
        Vec::new(),
        vec![if_(
            and(
                and(
                    eq(ident("agreeing"), boolean(true)),
                    eq(ident("agreePermission"), boolean(true)),
                ),
                eq(sender(), ident("agreeRequester")),
            ),
            vec![placeholder(), expr(call("initialAgree", Vec::new()))],
        )],
    )];
    c
}

/// Hash-locked access: whoever presents a preimage of `hashKey` passes.
pub fn dynamic_binding() -> ContractDef {
    let mut c = ContractDef::new(DYNAMIC_BINDING);
    c.state_vars = vec![
        var(TypeName::bytes32(), "hashKey", None),
        var(TypeName::bool(), "init", None),
        var(TypeName::address(), "owner", None),
    ];
    let initial = function(
        "initial",
        vec![param(TypeName::bytes32(), "key")],
        vec![if_(
            bin(BinaryOp::Ne, ident("init"), boolean(true)),
            vec![
                assign(ident("hashKey"), ident("key")),
                assign(ident("init"), boolean(true)),
                assign(ident("owner"), sender()),
            ],
        )],
    );
    let change = function(
        "changeKey",
        vec![
            param(TypeName::string(), "oldKey"),
            param(TypeName::bytes32(), "newKey"),
        ],
        vec![if_(
            eq(ident("init"), boolean(true)),
            vec![if_(
                eq(ident("hashKey"), call("sha256", vec![ident("oldKey")])),
                vec![if_(
                    eq(ident("owner"), sender()),
                    vec![assign(ident("hashKey"), ident("newKey"))],
                )],
            )],
        )],
    );
    c.functions = vec![initial, change];
    c.modifiers = vec![modifier(
        "verify",
        vec![param(TypeName::string(), "inputKey")],
        vec![if_(
            eq(ident("hashKey"), call("sha256", vec![ident("inputKey")])),
            vec![placeholder()],
        )],
    )];
    c
}

/// Caller allow-list, fixed at construction and replaceable by the owner.
pub fn embedded_permission() -> ContractDef {
    let mut c = ContractDef::new(EMBEDDED_PERMISSION);
    c.state_vars = vec![
        var(address_array(), "authority", None),
        var(TypeName::address(), "owner", None),
    ];
    c.constructor = Some(constructor(
        vec![param(address_array(), "temAuthority")],
        vec![
            assign(ident("owner"), sender()),
            assign(ident("authority"), ident("temAuthority")),
        ],
    ));
    c.functions = vec![function(
        "changeAuthority",
        vec![param(address_array(), "temAuthority")],
        vec![if_(
            eq(sender(), ident("owner")),
            vec![assign(ident("authority"), ident("temAuthority"))],
        )],
    )];
    c.modifiers = vec![modifier(
        "permission",
        Vec::new(),
        vec![for_each(
            member(ident("authority"), "length"),
            vec![if_(
                eq(sender(), index(ident("authority"), ident("i"))),
                vec![placeholder(), brk()],
            )],
        )],
    )];
    c
}

/// Constructor for the woven target that hands the allow-list to the base.
pub fn permission_constructor(authorized: &[Address]) -> crate::contract::ConstructorDef {
    let mut body = vec![local(address_array(), "addr", None)];
    body.extend(authorized.iter().map(|a| push(ident("addr"), address(*a))));
    body.push(expr(call(EMBEDDED_PERMISSION, vec![ident("addr")])));
    constructor(Vec::new(), body)
}
