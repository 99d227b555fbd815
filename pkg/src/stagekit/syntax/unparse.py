"""Deterministic unparser: 4-space indent, one statement per line.

The output re-parses to a structurally identical tree; parentheses are
inserted from operator precedence whenever a child binds looser than its
context (or equally, on the non-associating side).
"""

from __future__ import annotations

from ..errors import InternalError
from .ast import AstNode, EXPR_KINDS

INDENT = "    "

# precedence levels, loosest first
_PREC = {
    "Ternary": 1,
    "or": 2,
    "and": 3,
    "not": 4,
    "Compare": 5,
    "+": 6, "-": 6,
    "*": 7, "/": 7, "%": 7,
    "neg": 8,
    "postfix": 9,
}
_ATOM = 10


def unparse(node: AstNode) -> str:
    if node.kind == "Module":
        return "".join(_stmt(s, 0) for s in node.slots["body"])
    if node.kind in ("FunctionDef",) or node.kind in _STMT_EMITTERS:
        return _stmt(node, 0)
    if node.kind in EXPR_KINDS:
        return _expr(node, 0)
    raise InternalError(f"cannot unparse node kind {node.kind}")


def _block(block: AstNode, level: int) -> str:
    stmts = block.slots["stmts"]
    if not stmts:
        raise InternalError("cannot unparse an empty block")
    return "".join(_stmt(s, level) for s in stmts)


def _stmt(node: AstNode, level: int) -> str:
    pad = INDENT * level
    kind = node.kind
    if kind == "FunctionDef":
        params = ", ".join(p.slots["name"] for p in node.slots["params"])
        head = f"{pad}def {node.slots['name']}({params}):\n"
        return head + _block(node.slots["body"], level + 1)
    if kind == "If":
        out = f"{pad}if {_expr(node.slots['test'], 0)}:\n"
        out += _block(node.slots["body"], level + 1)
        orelse = node.slots["orelse"].slots["stmts"]
        if orelse:
            out += f"{pad}else:\n"
            out += _block(node.slots["orelse"], level + 1)
        return out
    if kind == "While":
        out = f"{pad}while {_expr(node.slots['test'], 0)}:\n"
        return out + _block(node.slots["body"], level + 1)
    if kind == "For":
        head = (f"{pad}for {node.slots['var'].slots['id']} in "
                f"{_expr(node.slots['iter'], 0)}:\n")
        return head + _block(node.slots["body"], level + 1)
    if kind in _STMT_EMITTERS:
        return pad + _STMT_EMITTERS[kind](node) + "\n"
    raise InternalError(f"cannot unparse statement kind {kind}")


def _simple_return(node):
    value = node.slots["value"]
    return "return" if value is None else f"return {_expr(value, 0)}"


def _simple_assert(node):
    msg = node.slots["msg"]
    text = f"assert {_expr(node.slots['test'], 0)}"
    return text if msg is None else f"{text}, {_expr(msg, 0)}"


_STMT_EMITTERS = {
    "Break": lambda n: "break",
    "Continue": lambda n: "continue",
    "Return": _simple_return,
    "Assign": lambda n: f"{_expr(n.slots['target'], 0)} = {_expr(n.slots['value'], 0)}",
    "AugAssign": lambda n: (f"{_expr(n.slots['target'], 0)} {n.slots['op']}= "
                            f"{_expr(n.slots['value'], 0)}"),
    "ExprStmt": lambda n: _expr(n.slots["value"], 0),
    "Assert": _simple_assert,
}


def _maybe_paren(text: str, prec: int, limit: int) -> str:
    return f"({text})" if prec < limit else text


def _expr(node: AstNode, limit: int) -> str:
    kind = node.kind
    if kind == "Name":
        return node.slots["id"]
    if kind == "IntLit":
        return str(node.slots["value"])
    if kind == "FloatLit":
        return repr(node.slots["value"])
    if kind == "BoolLit":
        return "True" if node.slots["value"] else "False"
    if kind == "NoneLit":
        return "None"
    if kind == "StrLit":
        value = node.slots["value"]
        escaped = value.replace("\\", "\\\\").replace("'", "\\'").replace(
            "\n", "\\n").replace("\t", "\\t")
        return f"'{escaped}'"
    if kind == "ListLiteral":
        inner = ", ".join(_expr(e, 0) for e in node.slots["elements"])
        return f"[{inner}]"
    if kind == "Call":
        func = _expr(node.slots["func"], _PREC["postfix"])
        parts = [_expr(a, 0) for a in node.slots["args"]]
        parts += [f"{n}={_expr(v, 0)}" for n, v in
                  zip(node.slots["kw_names"], node.slots["kw_values"])]
        return f"{func}({', '.join(parts)})"
    if kind == "Attribute":
        return f"{_expr(node.slots['value'], _PREC['postfix'])}.{node.slots['attr']}"
    if kind == "Subscript":
        base = _expr(node.slots["value"], _PREC["postfix"])
        return f"{base}[{_expr(node.slots['index'], 0)}]"
    if kind == "BinOp":
        prec = _PREC[node.slots["op"]]
        left = _expr(node.slots["left"], prec)
        right = _expr(node.slots["right"], prec + 1)
        return _maybe_paren(f"{left} {node.slots['op']} {right}", prec, limit)
    if kind == "BoolOp":
        prec = _PREC[node.slots["op"]]
        left = _expr(node.slots["left"], prec)
        right = _expr(node.slots["right"], prec + 1)
        return _maybe_paren(f"{left} {node.slots['op']} {right}", prec, limit)
    if kind == "Compare":
        prec = _PREC["Compare"]
        left = _expr(node.slots["left"], prec + 1)
        right = _expr(node.slots["right"], prec + 1)
        return _maybe_paren(f"{left} {node.slots['op']} {right}", prec, limit)
    if kind == "UnaryOp":
        op = node.slots["op"]
        if op == "not":
            prec = _PREC["not"]
            inner = _expr(node.slots["operand"], prec)
            return _maybe_paren(f"not {inner}", prec, limit)
        prec = _PREC["neg"]
        inner = _expr(node.slots["operand"], prec)
        return _maybe_paren(f"-{inner}", prec, limit)
    if kind == "Ternary":
        prec = _PREC["Ternary"]
        if_true = _expr(node.slots["if_true"], prec + 1)
        test = _expr(node.slots["test"], prec + 1)
        if_false = _expr(node.slots["if_false"], prec)
        return _maybe_paren(f"{if_true} if {test} else {if_false}", prec, limit)
    raise InternalError(f"cannot unparse expression kind {kind}")
