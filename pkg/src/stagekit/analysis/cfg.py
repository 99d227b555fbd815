"""Intra-procedural control-flow graph over statement nodes.

Compound statements are represented by a single header node (the test);
their bodies' statements are separate nodes.  Two synthetic sentinels mark
entry and exit.  ``follow`` maps each compound statement to the node control
reaches after the whole construct completes, which is what the conversion
passes need to ask "what is live after this statement".
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InternalError
from ..syntax.ast import AstNode


class _Sentinel:
    def __init__(self, label: str):
        self.label = label

    def __repr__(self):
        return f"<{self.label}>"


@dataclass
class Cfg:
    fn: AstNode
    entry: _Sentinel
    exit: _Sentinel
    nodes: list = field(default_factory=list)
    succ: dict = field(default_factory=dict)
    pred: dict = field(default_factory=dict)
    follow: dict = field(default_factory=dict)
    dead: set = field(default_factory=set)

    def add_edge(self, src, dst):
        if dst not in self.succ[src]:
            self.succ[src].append(dst)
        if src not in self.pred[dst]:
            self.pred[dst].append(src)

    def statements(self):
        return [n for n in self.nodes if not isinstance(n, _Sentinel)]

    def edge_count(self):
        return sum(len(v) for v in self.succ.values())


@dataclass
class _LoopCtx:
    header: AstNode
    breaks: list = field(default_factory=list)


def build_cfg(fn: AstNode) -> Cfg:
    if fn.kind != "FunctionDef":
        raise InternalError("build_cfg expects a FunctionDef")
    cfg = Cfg(fn, _Sentinel("entry"), _Sentinel("exit"))
    builder = _Builder(cfg)
    builder.register(cfg.entry)
    builder.register(cfg.exit)
    frontier, pending = builder.build_block(
        fn.slots["body"].slots["stmts"], [cfg.entry], loops=[])
    builder.connect(frontier, pending, cfg.exit)
    cfg.nodes.remove(cfg.exit)  # keep exit last for readable dumps
    cfg.nodes.append(cfg.exit)
    _mark_dead(cfg)
    return cfg


class _Builder:
    def __init__(self, cfg: Cfg):
        self.cfg = cfg

    def register(self, node):
        if node not in self.cfg.succ:
            self.cfg.nodes.append(node)
            self.cfg.succ[node] = []
            self.cfg.pred[node] = []

    def connect(self, frontier, pending, target):
        for node in frontier:
            self.cfg.add_edge(node, target)
        for stmt in pending:
            self.cfg.follow[stmt] = target

    def build_block(self, stmts, preds, loops):
        """Returns (frontier, pending): nodes that fall through past the block
        and compound statements whose follow is the block's continuation."""
        frontier = list(preds)
        pending: list[AstNode] = []
        for stmt in stmts:
            frontier, pending = self.build_stmt(stmt, frontier, pending, loops)
        return frontier, pending

    def build_stmt(self, stmt, preds, pending, loops):
        self.register(stmt)
        self.connect(preds, pending, stmt)
        kind = stmt.kind

        if kind == "Return":
            self.cfg.add_edge(stmt, self.cfg.exit)
            return [], []
        if kind == "Break":
            if not loops:
                raise InternalError("break outside loop survived parsing")
            loops[-1].breaks.append(stmt)
            return [], []
        if kind == "Continue":
            if not loops:
                raise InternalError("continue outside loop survived parsing")
            self.cfg.add_edge(stmt, loops[-1].header)
            return [], []
        if kind == "If":
            body_f, body_p = self.build_block(
                stmt.slots["body"].slots["stmts"], [stmt], loops)
            orelse_stmts = stmt.slots["orelse"].slots["stmts"]
            if orelse_stmts:
                else_f, else_p = self.build_block(orelse_stmts, [stmt], loops)
            else:
                else_f, else_p = [stmt], []
            frontier = body_f + [n for n in else_f if n not in body_f]
            return frontier, body_p + else_p + [stmt]
        if kind in ("While", "For"):
            ctx = _LoopCtx(stmt)
            body_f, body_p = self.build_block(
                stmt.slots["body"].slots["stmts"], [stmt], loops + [ctx])
            self.connect(body_f, body_p, stmt)  # back edge
            return [stmt] + ctx.breaks, [stmt]
        # simple statement (incl. nested FunctionDef, Assign, ExprStmt, ...)
        return [stmt], []


def _mark_dead(cfg: Cfg):
    reachable = set()
    stack = [cfg.entry]
    while stack:
        node = stack.pop()
        if node in reachable:
            continue
        reachable.add(node)
        stack.extend(cfg.succ[node])
    cfg.dead = {n for n in cfg.nodes if n not in reachable}
