"""Reaching definitions (forward, may) and liveness (backward, may) over the
CFG, plus the derived must-defined-on-entry sets.

Kill semantics for qualified names: assigning ``a`` kills reaching defs of
``a`` and of every ``a.*``; assigning ``a.b`` does not kill ``a``.  Synthetic
definition sites exist for parameters and for the "undefined at entry" state
of every other symbol, which makes ``defined_on_entry`` a simple check: a
symbol is defined on entry iff no undefined-entry site reaches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .activity import ActivityInfo
from .cfg import Cfg
from ..syntax.qualnames import QualifiedName

PARAM_SITE = "param"
UNDEF_SITE = "undefined-entry"


@dataclass(frozen=True)
class DefSite:
    name: QualifiedName
    node: object  # statement node, PARAM_SITE or UNDEF_SITE

    @property
    def synthetic(self) -> bool:
        return self.node in (PARAM_SITE, UNDEF_SITE)


@dataclass
class FlowFacts:
    reach_in: dict = field(default_factory=dict)
    reach_out: dict = field(default_factory=dict)
    live_in: dict = field(default_factory=dict)
    live_out: dict = field(default_factory=dict)
    defined_on_entry: dict = field(default_factory=dict)

    def live_after(self, cfg: Cfg, stmt) -> set:
        """Symbols live once the whole (compound) statement has completed."""
        follow = cfg.follow.get(stmt, cfg.exit)
        return self.live_in.get(follow, set())


def _kills(name: QualifiedName, candidate: QualifiedName) -> bool:
    return candidate == name or candidate.starts_with(name)


def reaching_definitions(cfg: Cfg, act: ActivityInfo,
                         facts: FlowFacts | None = None) -> FlowFacts:
    facts = facts or FlowFacts()
    symbols = set()
    for node in cfg.statements():
        symbols |= act.reads(node) | act.writes(node)

    entry_out = {DefSite(QualifiedName((p,)), PARAM_SITE)
                 for p in act.scope.params}
    entry_out |= {DefSite(s, UNDEF_SITE) for s in symbols
                  if s.root not in act.scope.params}

    gen = {}
    writes = {}
    for node in cfg.nodes:
        if isinstance(node, type(cfg.entry)) and node in (cfg.entry, cfg.exit):
            continue
        w = act.writes(node)
        writes[node] = w
        gen[node] = {DefSite(q, node) for q in w}

    reach_in = {node: set() for node in cfg.nodes}
    reach_out = {node: set() for node in cfg.nodes}
    reach_out[cfg.entry] = entry_out

    changed = True
    while changed:
        changed = False
        for node in cfg.nodes:
            if node is cfg.entry:
                continue
            new_in = set()
            for pred in cfg.pred[node]:
                new_in |= reach_out[pred]
            node_writes = writes.get(node, set())
            survivors = {d for d in new_in
                         if not any(_kills(w, d.name) for w in node_writes)}
            new_out = gen.get(node, set()) | survivors
            if new_in != reach_in[node] or new_out != reach_out[node]:
                reach_in[node] = new_in
                reach_out[node] = new_out
                changed = True

    facts.reach_in = reach_in
    facts.reach_out = reach_out
    facts.defined_on_entry = {
        node: {s for s in symbols
               if any(d.name == s and d.node is not UNDEF_SITE for d in rin)
               and not any(d.name == s and d.node is UNDEF_SITE for d in rin)}
        for node, rin in reach_in.items()
    }
    return facts


def liveness(cfg: Cfg, act: ActivityInfo,
             facts: FlowFacts | None = None, extra_reads=None) -> FlowFacts:
    facts = facts or FlowFacts()
    extra_reads = extra_reads or {}
    live_in = {node: set() for node in cfg.nodes}
    live_out = {node: set() for node in cfg.nodes}

    changed = True
    while changed:
        changed = False
        for node in reversed(cfg.nodes):
            out = set()
            for succ in cfg.succ[node]:
                out |= live_in[succ]
            writes = act.writes(node)
            kept = {s for s in out if not any(_kills(w, s) for w in writes)}
            new_in = act.reads(node) | extra_reads.get(node, set()) | kept
            if out != live_out[node] or new_in != live_in[node]:
                live_out[node] = out
                live_in[node] = new_in
                changed = True

    facts.live_in = live_in
    facts.live_out = live_out
    return facts
