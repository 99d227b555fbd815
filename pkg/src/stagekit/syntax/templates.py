"""Template-based code rewriting: parse quoted MSL once, then substitute
identifiers, expression nodes or statement lists for placeholder names.

Used by the conversion passes to build their generated code; building the
same trees by hand is error prone and unreadable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import (IntegrityError, MissingBinding, StagekitError,
                      TemplateTypeMismatch)
from .ast import AstNode, EXPR_KINDS, STMT_KINDS, copy_tree, make, tree_equal, walk
from .parser import parse_module
from .spans import GENERATED_FILE
from .unparse import unparse


@dataclass
class Template:
    text: str
    placeholder_names: frozenset = field(default=frozenset())

    def __post_init__(self):
        names = {n.slots["id"] for n in walk(self._parse()) if n.kind == "Name"}
        names |= {n.slots["name"] for n in walk(self._parse())
                  if n.kind in ("Param", "FunctionDef")}
        missing = set(self.placeholder_names) - names
        if missing:
            raise StagekitError(
                f"placeholders {sorted(missing)} do not occur in template")

    def _parse(self) -> AstNode:
        return parse_module(_dedent(self.text), GENERATED_FILE,
                            allow_reserved_prefix=True)


def replace(text: str, **bindings) -> list[AstNode]:
    """Convenience wrapper: placeholders are exactly the binding keys."""
    template = Template(text, frozenset(bindings))
    return template_replace(template, bindings)


def template_replace(template: Template, bindings: dict) -> list[AstNode]:
    unknown = set(bindings) - set(template.placeholder_names)
    if unknown:
        raise StagekitError(f"bindings {sorted(unknown)} are not placeholders")
    missing = set(template.placeholder_names) - set(bindings)
    if missing:
        raise MissingBinding(f"no binding for placeholder(s) {sorted(missing)}")

    module = template._parse()
    used: set[str] = set()
    body = _splice_stmts(module.slots["body"], bindings, used)
    result = [_subst(stmt, bindings, used) for stmt in body]

    for stmt in result:
        for node in walk(stmt):
            if node.kind == "Name" and node.slots["id"] in template.placeholder_names:
                raise IntegrityError(
                    f"residual placeholder {node.slots['id']!r} in output")
    _check_integrity(result)
    return result


def _dedent(text: str) -> str:
    lines = text.split("\n")
    indents = [len(l) - len(l.lstrip(" ")) for l in lines if l.strip()]
    cut = min(indents) if indents else 0
    return "\n".join(l[cut:] if l.strip() else "" for l in lines)


def _take(binding, used: set, key: str):
    """First occurrence inserts the bound node itself; repeats get copies so
    node identity stays unique."""
    if isinstance(binding, AstNode):
        if key in used:
            return copy_tree(binding)
        used.add(key)
        return binding
    if isinstance(binding, list):
        if key in used:
            return [copy_tree(n) if isinstance(n, AstNode) else n for n in binding]
        used.add(key)
        return list(binding)
    return binding


def _splice_stmts(stmts: list, bindings: dict, used: set) -> list:
    out = []
    for stmt in stmts:
        ph = _stmt_placeholder(stmt, bindings)
        if ph is not None:
            binding = _take(bindings[ph], used, ph)
            if isinstance(binding, AstNode):
                binding = [binding]
            if not isinstance(binding, list) or not all(
                    isinstance(n, AstNode) and n.kind in STMT_KINDS for n in binding):
                raise TemplateTypeMismatch(
                    f"placeholder {ph!r} in statement position needs a "
                    f"statement or statement list")
            out.extend(binding)
        else:
            out.append(stmt)
    return out


def _stmt_placeholder(stmt: AstNode, bindings: dict):
    if (stmt.kind == "ExprStmt" and stmt.slots["value"].kind == "Name"
            and stmt.slots["value"].slots["id"] in bindings):
        name = stmt.slots["value"].slots["id"]
        if isinstance(bindings[name], (list,)) or (
                isinstance(bindings[name], AstNode)
                and bindings[name].kind in STMT_KINDS):
            return name
    return None


def _subst(node: AstNode, bindings: dict, used: set) -> AstNode:
    kind = node.kind
    if kind == "Name" and node.slots["id"] in bindings:
        binding = bindings[node.slots["id"]]
        if isinstance(binding, str):
            return make("Name", node.span, id=binding)
        if isinstance(binding, AstNode) and binding.kind in EXPR_KINDS:
            return _take(binding, used, node.slots["id"])
        raise TemplateTypeMismatch(
            f"placeholder {node.slots['id']!r} in expression position needs "
            f"an identifier or expression node")

    slots = {}
    changed = False
    for slot in node.child_slots():
        value = node.slots[slot]
        if isinstance(value, AstNode):
            new = _subst(value, bindings, used)
            changed |= new is not value
            slots[slot] = new
        elif isinstance(value, list):
            if slot in ("body", "stmts") or (kind == "Module" and slot == "body"):
                items = _splice_stmts(value, bindings, used)
            elif kind == "FunctionDef" and slot == "params":
                items = _expand_params(value, bindings, used)
            else:
                items = value
            new_items = [_subst(v, bindings, used) for v in items]
            changed |= (len(new_items) != len(value)
                        or any(a is not b for a, b in zip(new_items, value)))
            slots[slot] = new_items
        else:
            slots[slot] = value

    data = {s: node.slots[s] for s in _data_slots(node)}
    if kind == "FunctionDef" and data["name"] in bindings:
        binding = bindings[data["name"]]
        if not isinstance(binding, str):
            raise TemplateTypeMismatch(
                f"function-name placeholder {data['name']!r} needs an identifier")
        data["name"] = binding
        changed = True
    if not changed and data == {s: node.slots[s] for s in _data_slots(node)}:
        return node
    return AstNode(kind, node.span, {**slots, **data}, origin=node.origin,
                   annotations=dict(node.annotations))


def _expand_params(params: list, bindings: dict, used: set) -> list:
    out = []
    for param in params:
        name = param.slots["name"]
        if name in bindings:
            binding = bindings[name]
            if isinstance(binding, str):
                binding = [binding]
            if isinstance(binding, (list, tuple)) and all(
                    isinstance(b, str) for b in binding):
                for b in binding:
                    out.append(make("Param", param.span, name=b))
            else:
                raise TemplateTypeMismatch(
                    f"parameter placeholder {name!r} needs identifier(s)")
        else:
            out.append(param)
    return out


def _data_slots(node: AstNode):
    from .ast import KINDS
    return KINDS[node.kind][1]


def _check_integrity(stmts: list[AstNode]):
    module = make("Module", None, body=stmts)
    try:
        text = unparse(module)
        reparsed = parse_module(text, GENERATED_FILE, allow_reserved_prefix=True)
    except StagekitError as exc:
        raise IntegrityError(f"template output does not round-trip: {exc}")
    if not tree_equal(module, reparsed):
        raise IntegrityError("template output changed under unparse/re-parse")
