"""Shared machinery for the conversion passes: fresh-name generation,
tree rewriting helpers, and builders for calls into the dispatch namespace."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..syntax.ast import AstNode, make, set_origin
from ..syntax.qualnames import QualifiedName
from ..syntax.spans import generated_span

DISPATCH = "ag__"


@dataclass
class PassContext:
    counter: int = 0
    report: list = field(default_factory=list)

    def fresh(self, label: str) -> str:
        self.counter += 1
        return f"{DISPATCH}{label}_{self.counter}"

    def next_id(self) -> int:
        self.counter += 1
        return self.counter

    def note(self, pass_name: str, message: str):
        self.report.append(f"{pass_name}: {message}")


# --- node builders ------------------------------------------------------------

def name(ident: str) -> AstNode:
    return make("Name", None, id=ident)


def string(text: str) -> AstNode:
    return make("StrLit", None, value=text)


def intlit(value: int) -> AstNode:
    return make("IntLit", None, value=value)


def nonelit() -> AstNode:
    return make("NoneLit", None)


def boollit(value: bool) -> AstNode:
    return make("BoolLit", None, value=value)


def listlit(elements: list) -> AstNode:
    return make("ListLiteral", None, elements=list(elements))


def dispatch_call(op: str, args: list) -> AstNode:
    func = make("Attribute", None, value=name(DISPATCH), attr=op)
    return make("Call", None, func=func, args=list(args), kw_names=[],
                kw_values=[])


def assign(target: AstNode, value: AstNode) -> AstNode:
    return make("Assign", None, target=target, value=value)


def expr_stmt(value: AstNode) -> AstNode:
    return make("ExprStmt", None, value=value)


def return_stmt(value: AstNode | None) -> AstNode:
    return make("Return", None, value=value)


def block(stmts: list) -> AstNode:
    return make("Block", None, stmts=list(stmts))


def funcdef(fn_name: str, params: list, stmts: list) -> AstNode:
    return make("FunctionDef", None, name=fn_name,
                params=[make("Param", None, name=p) for p in params],
                body=block(stmts))


def if_node(test: AstNode, body_stmts: list, orelse_stmts: list) -> AstNode:
    return make("If", None, test=test, body=block(body_stmts),
                orelse=block(orelse_stmts))


def qn_expr(qualified: QualifiedName) -> AstNode:
    node = name(qualified.components[0])
    for part in qualified.components[1:]:
        if isinstance(part, str):
            node = make("Attribute", None, value=node, attr=part)
        else:
            node = make("Subscript", None, value=node, index=intlit(part))
    return node


def is_dispatch_call(expr: AstNode, op: str | None = None) -> bool:
    if expr.kind != "Call":
        return False
    func = expr.slots["func"]
    if func.kind != "Attribute" or func.slots["value"].kind != "Name":
        return False
    if func.slots["value"].slots["id"] != DISPATCH:
        return False
    return op is None or func.slots["attr"] == op


def namespace_of_call(expr: AstNode) -> str | None:
    """'m', 'ag' or 'ag__' when the callee is an attribute of that namespace."""
    func = expr.slots["func"]
    if func.kind == "Attribute" and func.slots["value"].kind == "Name":
        root = func.slots["value"].slots["id"]
        if root in ("m", "ag", DISPATCH):
            return root
    return None


# --- rewriting helpers ----------------------------------------------------------

def map_functions(module: AstNode, f) -> AstNode:
    """Apply ``f`` to every FunctionDef, innermost first.  Module-level
    statements outside functions pass through unconverted."""

    def visit(node: AstNode) -> AstNode:
        slots = {}
        changed = False
        for slot in node.child_slots():
            value = node.slots[slot]
            if isinstance(value, AstNode):
                new = visit(value)
                changed |= new is not value
                slots[slot] = new
            elif isinstance(value, list):
                new_list = [visit(v) for v in value]
                changed |= any(a is not b for a, b in zip(new_list, value))
                slots[slot] = new_list
            else:
                slots[slot] = value
        current = node if not changed else node.replace(**slots)
        if current.kind == "FunctionDef":
            return f(current)
        return current

    return visit(module)


def map_statements(fn: AstNode, f) -> AstNode:
    """Rebuild a function, applying ``f(stmt) -> stmt | [stmts]`` to every
    statement in every block, innermost blocks first.  Does not descend into
    nested FunctionDefs (map_functions already visited them)."""

    def visit_block(b: AstNode) -> AstNode:
        out = []
        for stmt in b.slots["stmts"]:
            rebuilt = _rebuild_stmt(stmt, visit_block)
            result = f(rebuilt)
            if isinstance(result, list):
                out.extend(result)
            else:
                out.append(result)
        return b.replace(stmts=out)

    return fn.replace(body=visit_block(fn.slots["body"]))


def _rebuild_stmt(stmt: AstNode, visit_block) -> AstNode:
    if stmt.kind in ("If",):
        return stmt.replace(body=visit_block(stmt.slots["body"]),
                            orelse=visit_block(stmt.slots["orelse"]))
    if stmt.kind in ("While", "For"):
        return stmt.replace(body=visit_block(stmt.slots["body"]))
    return stmt


def map_exprs(node: AstNode, f) -> AstNode:
    """Rebuild an expression tree bottom-up, applying ``f`` post-order."""
    from ..syntax.ast import EXPR_KINDS
    slots = {}
    changed = False
    for slot in node.child_slots():
        value = node.slots[slot]
        if isinstance(value, AstNode):
            new = map_exprs(value, f) if value.kind in EXPR_KINDS else value
            changed |= new is not value
            slots[slot] = new
        elif isinstance(value, list):
            new_list = [map_exprs(v, f) if v.kind in EXPR_KINDS else v
                        for v in value]
            changed |= any(a is not b for a, b in zip(new_list, value))
            slots[slot] = new_list
        else:
            slots[slot] = value
    current = node if not changed else node.replace(**slots)
    if current.kind in EXPR_KINDS:
        return f(current)
    return current


def stmt_map_exprs(stmt: AstNode, f) -> AstNode:
    """Apply an expression mapper to the expressions a statement itself
    evaluates (not to nested blocks or nested function bodies)."""
    kind = stmt.kind
    if kind in ("Assign", "AugAssign"):
        return stmt.replace(target=map_exprs(stmt.slots["target"], f),
                            value=map_exprs(stmt.slots["value"], f))
    if kind == "ExprStmt":
        return stmt.replace(value=map_exprs(stmt.slots["value"], f))
    if kind == "Return":
        value = stmt.slots["value"]
        return stmt if value is None else stmt.replace(value=map_exprs(value, f))
    if kind == "Assert":
        msg = stmt.slots["msg"]
        return stmt.replace(
            test=map_exprs(stmt.slots["test"], f),
            msg=None if msg is None else map_exprs(msg, f))
    if kind == "If":
        return stmt.replace(test=map_exprs(stmt.slots["test"], f))
    if kind == "While":
        return stmt.replace(test=map_exprs(stmt.slots["test"], f))
    if kind == "For":
        return stmt.replace(iter=map_exprs(stmt.slots["iter"], f))
    return stmt


def mark(nodes, origin: AstNode):
    """Give generated nodes an origin so source maps stay total."""
    if isinstance(nodes, AstNode):
        set_origin(nodes, origin)
        return nodes
    for node in nodes:
        set_origin(node, origin)
    return nodes
