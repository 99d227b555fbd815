"""Shell-friendly value literals shared by the CLI and the corpus manifest.

Tensor feeds:  ``f64[2,3]:1.0,2.0,...`` (row-major), scalars ``f64:16.0``,
booleans ``bool:true``.  Tree feeds use nested parens: ``tree:(5.0 () ())``
where ``()`` is the empty tree and ``(value left right)`` a node.
"""

from __future__ import annotations

from .errors import StagekitError
from .graph.ir import TypeSpec, TREE
from .graph.tensor import TensorValue, Tree, size_of


class FeedSyntaxError(StagekitError):
    pass


def parse_param_spec(text: str):
    """``name=f64[2,3]`` -> (name, TypeSpec); data-free form for tracing."""
    name, spec = _split_name(text)
    dtype, shape, rest = _parse_type(spec)
    if rest:
        raise FeedSyntaxError(f"unexpected data in parameter spec {text!r}")
    if dtype == "tree":
        return name, TREE
    return name, TypeSpec(dtype, shape)


def parse_feed(text: str):
    """``name=f64[2]:1,2`` or ``name=tree:(...)`` -> (name, value)."""
    name, spec = _split_name(text)
    return name, parse_value(spec)


def parse_value(spec: str):
    dtype, shape, rest = _parse_type(spec)
    if dtype == "tree":
        if rest is None:
            raise FeedSyntaxError("tree feed needs a literal, e.g. tree:(5 () ())")
        return parse_tree(rest)
    if rest is None:
        raise FeedSyntaxError(f"feed {spec!r} has no data (use NAME=dtype:...)")
    items = [s for s in rest.split(",") if s.strip() != ""]
    data = tuple(_scalar(dtype, s.strip()) for s in items)
    expected = size_of(shape)
    if len(data) != expected:
        raise FeedSyntaxError(
            f"feed {spec!r} needs {expected} values, got {len(data)}")
    return TensorValue(dtype, shape, data)


def _split_name(text: str):
    if "=" not in text:
        raise FeedSyntaxError(f"expected NAME=SPEC, got {text!r}")
    name, _, spec = text.partition("=")
    if not name.isidentifier():
        raise FeedSyntaxError(f"bad parameter name {name!r}")
    return name, spec


def _parse_type(spec: str):
    head, sep, rest = spec.partition(":")
    rest = rest if sep else None
    if head.startswith("tree"):
        return "tree", None, rest
    if "[" in head:
        dtype, _, dims = head.partition("[")
        if not dims.endswith("]"):
            raise FeedSyntaxError(f"bad shape in {spec!r}")
        dims = dims[:-1]
        shape = tuple(int(d) for d in dims.split(",")) if dims else ()
    else:
        dtype, shape = head, ()
    if dtype not in ("i64", "f64", "bool"):
        raise FeedSyntaxError(f"unknown dtype {dtype!r} in {spec!r}")
    return dtype, shape, rest


def _scalar(dtype: str, text: str):
    if dtype == "bool":
        if text in ("true", "True", "1"):
            return True
        if text in ("false", "False", "0"):
            return False
        raise FeedSyntaxError(f"bad bool literal {text!r}")
    if dtype == "i64":
        return int(text)
    return float(text)


def parse_tree(text: str) -> Tree:
    tree, rest = _read_tree(text.strip())
    if rest.strip():
        raise FeedSyntaxError(f"trailing text after tree literal: {rest!r}")
    return tree


def _read_tree(text: str):
    text = text.lstrip()
    if not text.startswith("("):
        raise FeedSyntaxError(f"expected '(' in tree literal at {text[:12]!r}")
    body = text[1:].lstrip()
    if body.startswith(")"):
        return Tree.empty(), body[1:]
    # value
    pos = 0
    while pos < len(body) and body[pos] not in " ()":
        pos += 1
    try:
        value = float(body[:pos])
    except ValueError:
        raise FeedSyntaxError(f"bad tree value {body[:pos]!r}")
    rest = body[pos:].lstrip()
    left, rest = _read_tree(rest)
    right, rest = _read_tree(rest.lstrip())
    rest = rest.lstrip()
    if not rest.startswith(")"):
        raise FeedSyntaxError("unclosed tree node")
    return Tree(value, left, right), rest[1:]
