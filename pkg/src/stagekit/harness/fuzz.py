"""Random MSL program generation for differential testing.

Programs are deterministic in the seed, always terminate (loops count up to
literal bounds), never divide by zero (denominators are guarded with
``(e % k) + k``), and never read a variable that some path leaves unassigned.
The generator tracks a type per variable so strict-bool MSL never sees a type
error, and list indices are always reduced modulo the statically known list
length.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

ALL_FEATURES = frozenset({"if", "while", "for", "break", "continue", "lists",
                          "ternary", "logical", "calls"})


@dataclass(frozen=True)
class FuzzSpec:
    seed: int = 0
    max_stmts: int = 8
    max_depth: int = 3
    max_loop_bound: int = 5
    feature_mask: frozenset = ALL_FEATURES

    def __post_init__(self):
        if self.max_stmts < 0 or self.max_depth < 1 or self.max_loop_bound < 1:
            raise ValueError("bad fuzz spec")
        unknown = set(self.feature_mask) - ALL_FEATURES
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")


@dataclass
class _Scope:
    vars: dict = field(default_factory=dict)  # name -> 'int' | 'float' | 'bool'
    lists: dict = field(default_factory=dict)  # name -> static length
    frozen: set = field(default_factory=set)  # loop counters: read-only

    def copy(self) -> "_Scope":
        return _Scope(dict(self.vars), dict(self.lists), set(self.frozen))

    def of_type(self, kind: str) -> list:
        return sorted(n for n, t in self.vars.items() if t == kind)

    def assignable(self) -> list:
        return sorted(n for n in self.vars if n not in self.frozen)


class _Gen:
    def __init__(self, spec: FuzzSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.counter = 0
        self.features = spec.feature_mask
        self.helpers: list[str] = []
        self.helper_sigs: dict = {}

    def fresh(self, prefix: str = "v") -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def on(self, feature: str) -> bool:
        return feature in self.features

    # -- expressions -------------------------------------------------------

    def literal(self, kind: str) -> str:
        if kind == "int":
            return str(self.rng.randint(0, 10))
        if kind == "float":
            return f"{self.rng.randint(-40, 40) / 8.0}"
        return self.rng.choice(["True", "False"])

    def numeric(self, kind: str, scope: _Scope, depth: int) -> str:
        roll = self.rng.random()
        names = scope.of_type(kind)
        if depth <= 0 or roll < 0.3:
            if names and self.rng.random() < 0.6:
                return self.rng.choice(names)
            return self.literal(kind)
        if roll < 0.4 and self.on("ternary"):
            a = self.numeric(kind, scope, depth - 1)
            b = self.numeric(kind, scope, depth - 1)
            cond = self.boolean(scope, depth - 1)
            return f"({a} if {cond} else {b})"
        if roll < 0.5 and self.on("calls") and self.helpers:
            helper = self.rng.choice(self.helpers)
            result_kind, arg_kinds = self.helper_sigs[helper]
            if result_kind == kind:
                args = ", ".join(self.numeric(k, scope, depth - 1)
                                 for k in arg_kinds)
                return f"{helper}({args})"
        if roll < 0.58 and self.on("lists") and kind == "float" and scope.lists:
            name = self.rng.choice(sorted(scope.lists))
            index = self.index_into(name, scope, depth - 1)
            return f"{name}[{index}]"
        left = self.numeric(kind, scope, depth - 1)
        ops = ["+", "-", "*", "*", "+", "%"]
        if kind == "float":
            ops.append("/")  # '/' always yields float, so ints never divide
        op = self.rng.choice(ops)
        if op in ("/", "%"):
            denom = self.guarded_denominator(kind, scope, depth - 1)
            return f"({left} {op} {denom})"
        right = self.numeric(kind, scope, depth - 1)
        return f"({left} {op} {right})"

    def guarded_denominator(self, kind: str, scope: _Scope, depth: int) -> str:
        k = self.rng.randint(1, 4)
        inner = self.numeric(kind, scope, depth)
        guard = f"{k}.0" if kind == "float" else str(k)
        return f"(({inner} % {guard}) + {guard})"

    def index_into(self, name: str, scope: _Scope, depth: int) -> str:
        # sign-of-divisor modulo keeps any int expression in range
        length = scope.lists[name]
        inner = self.numeric("int", scope, max(depth, 0))
        return f"({inner}) % {length}"

    def boolean(self, scope: _Scope, depth: int) -> str:
        roll = self.rng.random()
        names = scope.of_type("bool")
        if depth <= 0 or roll < 0.25:
            if names and self.rng.random() < 0.5:
                return self.rng.choice(names)
            kind = self.rng.choice(["int", "float"])
            op = self.rng.choice(["<", ">", "<=", ">=", "==", "!="])
            return (f"{self.numeric(kind, scope, 0)} {op} "
                    f"{self.numeric(kind, scope, 0)}")
        if roll < 0.55 and self.on("logical"):
            op = self.rng.choice(["and", "or"])
            return (f"({self.boolean(scope, depth - 1)} {op} "
                    f"{self.boolean(scope, depth - 1)})")
        if roll < 0.65 and self.on("logical"):
            return f"not ({self.boolean(scope, depth - 1)})"
        kind = self.rng.choice(["int", "float"])
        op = self.rng.choice(["<", ">", "<=", ">=", "==", "!="])
        return (f"{self.numeric(kind, scope, depth - 1)} {op} "
                f"{self.numeric(kind, scope, depth - 1)}")

    # -- statements --------------------------------------------------------

    def body(self, scope: _Scope, budget: int, depth: int, indent: str,
             in_loop: bool) -> list:
        lines = []
        n = self.rng.randint(1, max(1, budget))
        for _ in range(n):
            lines.extend(self.statement(scope, depth, indent, in_loop))
        return lines

    def statement(self, scope: _Scope, depth: int, indent: str,
                  in_loop: bool) -> list:
        choices = ["assign", "assign", "update", "print"]
        if depth > 0:
            if self.on("if"):
                choices += ["if", "if"]
            if self.on("while"):
                choices.append("while")
            if self.on("for"):
                choices.append("for")
        if self.on("lists"):
            choices.append("list")
        choice = self.rng.choice(choices)

        if choice == "assign" or (choice == "update" and not scope.vars):
            kind = self.rng.choice(["int", "float", "float", "bool"])
            # the initializer must not see the name it defines
            expr = self.boolean(scope, depth) if kind == "bool" else \
                self.numeric(kind, scope, depth)
            name = self.fresh()
            scope.vars[name] = kind
            return [f"{indent}{name} = {expr}"]
        if choice == "update":
            targets = scope.assignable()
            if not targets:
                return [f"{indent}{self.fresh()} = {self.literal('int')}"]
            name = self.rng.choice(targets)
            kind = scope.vars[name]
            if kind == "bool":
                return [f"{indent}{name} = {self.boolean(scope, depth)}"]
            if self.rng.random() < 0.3:
                op = self.rng.choice(["+", "-", "*"])
                return [f"{indent}{name} {op}= "
                        f"{self.numeric(kind, scope, depth - 1)}"]
            return [f"{indent}{name} = {self.numeric(kind, scope, depth)}"]
        if choice == "print":
            numeric = scope.of_type("int") + scope.of_type("float")
            if not numeric:
                return [f"{indent}{self.fresh()} = {self.literal('int')}"]
            return [f"{indent}print({self.rng.choice(sorted(numeric))})"]
        if choice == "if":
            return self.if_statement(scope, depth, indent, in_loop)
        if choice == "while":
            return self.while_statement(scope, depth, indent)
        if choice == "for":
            return self.for_statement(scope, depth, indent)
        if choice == "list":
            return self.list_statement(scope, depth, indent)
        raise AssertionError(choice)

    def if_statement(self, scope: _Scope, depth: int, indent: str,
                     in_loop: bool) -> list:
        cond = self.boolean(scope, depth - 1)
        lines = [f"{indent}if {cond}:"]
        # branches only update existing variables, so the defined set is
        # path-independent
        body_scope = scope.copy()
        lines += self.branch_body(body_scope, depth, indent + "    ", in_loop)
        if self.rng.random() < 0.5:
            lines.append(f"{indent}else:")
            else_scope = scope.copy()
            lines += self.branch_body(else_scope, depth, indent + "    ",
                                      in_loop)
        return lines

    def branch_body(self, scope: _Scope, depth: int, indent: str,
                    in_loop: bool) -> list:
        lines = []
        for _ in range(self.rng.randint(1, 2)):
            targets = scope.assignable()
            if targets and self.rng.random() < 0.8:
                name = self.rng.choice(targets)
                kind = scope.vars[name]
                expr = self.boolean(scope, depth - 1) if kind == "bool" else \
                    self.numeric(kind, scope, depth - 1)
                lines.append(f"{indent}{name} = {expr}")
            elif in_loop and self.on("break") and self.rng.random() < 0.3:
                lines.append(f"{indent}break")
            else:
                numeric = scope.of_type("int") + scope.of_type("float")
                if numeric:
                    lines.append(
                        f"{indent}print({self.rng.choice(sorted(numeric))})")
                else:
                    lines.append(f"{indent}{self.fresh()} = 1")
        return lines

    def while_statement(self, scope: _Scope, depth: int, indent: str) -> list:
        counter = self.fresh("i")
        bound = self.rng.randint(1, self.spec.max_loop_bound)
        lines = [f"{indent}{counter} = 0",
                 f"{indent}while {counter} < {bound}:",
                 f"{indent}    {counter} = {counter} + 1"]
        scope.vars[counter] = "int"
        inner = scope.copy()
        inner.frozen.add(counter)  # the loop must keep counting up
        lines += self.loop_body(inner, depth, indent + "    ")
        return lines

    def for_statement(self, scope: _Scope, depth: int, indent: str) -> list:
        var = self.fresh("i")
        bound = self.rng.randint(1, self.spec.max_loop_bound)
        lines = [f"{indent}for {var} in range({bound}):"]
        inner = scope.copy()
        inner.vars[var] = "int"
        lines += self.loop_body(inner, depth, indent + "    ")
        return lines

    def loop_body(self, scope: _Scope, depth: int, indent: str) -> list:
        lines = []
        for _ in range(self.rng.randint(1, 2)):
            targets = scope.assignable()
            if targets and self.rng.random() < 0.75:
                name = self.rng.choice(targets)
                kind = scope.vars[name]
                expr = self.boolean(scope, depth - 1) if kind == "bool" else \
                    self.numeric(kind, scope, depth - 1)
                lines.append(f"{indent}{name} = {expr}")
            elif self.on("continue") and self.rng.random() < 0.4:
                lines.append(f"{indent}if {self.boolean(scope, depth - 1)}:")
                lines.append(f"{indent}    continue")
            elif self.on("break") and self.rng.random() < 0.4:
                lines.append(f"{indent}if {self.boolean(scope, depth - 1)}:")
                lines.append(f"{indent}    break")
            else:
                lines.append(f"{indent}{self.fresh('t')} = "
                             f"{self.numeric('float', scope, depth - 1)}")
        return lines

    def list_statement(self, scope: _Scope, depth: int, indent: str) -> list:
        if scope.lists and self.rng.random() < 0.6:
            name = self.rng.choice(sorted(scope.lists))
            roll = self.rng.random()
            if roll < 0.5:
                index = self.index_into(name, scope, depth - 1)
                value = self.numeric("float", scope, depth - 1)
                return [f"{indent}{name}[{index}] = {value}"]
            if roll < 0.75 and indent == "    ":  # top level only: length grows
                scope.lists[name] += 1
                return [f"{indent}{name}.append("
                        f"{self.numeric('float', scope, depth - 1)})"]
            if scope.lists[name] > 1 and indent == "    ":
                scope.lists[name] -= 1
                taken = self.fresh()
                scope.vars[taken] = "float"
                return [f"{indent}{taken} = {name}.pop()"]
            index = self.index_into(name, scope, depth - 1)
            value = self.numeric("float", scope, depth - 1)
            return [f"{indent}{name}[{index}] = {value}"]
        name = self.fresh("xs")
        length = self.rng.randint(1, 4)
        elements = ", ".join(self.numeric("float", scope, depth - 1)
                             for _ in range(length))
        scope.lists[name] = length
        return [f"{indent}{name} = [{elements}]"]

    # -- whole program --------------------------------------------------------

    def helper_function(self, index: int) -> list:
        name = f"helper{index}"
        arg_kinds = [self.rng.choice(["int", "float"])
                     for _ in range(self.rng.randint(1, 2))]
        result_kind = self.rng.choice(["int", "float"])
        scope = _Scope({f"a{i}": k for i, k in enumerate(arg_kinds)})
        params = ", ".join(f"a{i}" for i in range(len(arg_kinds)))
        lines = [f"def {name}({params}):"]
        if self.rng.random() < 0.5:
            expr = self.numeric(result_kind, scope, 1)
            tmp = self.fresh("h")
            scope.vars[tmp] = result_kind
            lines.append(f"    {tmp} = {expr}")
        lines.append(f"    return {self.numeric(result_kind, scope, 1)}")
        lines.append("")
        self.helpers.append(name)
        self.helper_sigs[name] = (result_kind, arg_kinds)
        return lines

    def generate(self) -> tuple[str, list]:
        lines: list[str] = []
        if self.on("calls"):
            for index in range(self.rng.randint(0, 2)):
                lines.extend(self.helper_function(index + 1))

        n_params = self.rng.randint(1, 3)
        param_kinds = [self.rng.choice(["int", "float", "float"])
                       for _ in range(n_params)]
        params = [f"p{i}" for i in range(n_params)]
        scope = _Scope({p: k for p, k in zip(params, param_kinds)})
        lines.append(f"def main({', '.join(params)}):")
        if self.spec.max_stmts == 0:
            lines.append(f"    return {self.literal('float')}")
            return "\n".join(lines) + "\n", param_kinds

        body = self.body(scope, self.spec.max_stmts, self.spec.max_depth,
                         "    ", in_loop=False)
        lines.extend(body)
        numeric = scope.of_type("float") + scope.of_type("int")
        if self.on("lists") and scope.lists and self.rng.random() < 0.25:
            lines.append(f"    return ag.stack("
                         f"{self.rng.choice(sorted(scope.lists))})")
        elif numeric:
            lines.append(f"    return {self.rng.choice(numeric)}")
        else:
            lines.append(f"    return {params[0]}")
        return "\n".join(lines) + "\n", param_kinds


def gen_program(spec: FuzzSpec) -> str:
    """Deterministic program text for a spec; parses and converts cleanly."""
    return _Gen(spec).generate()[0]


def gen_program_with_params(spec: FuzzSpec) -> tuple[str, list]:
    """(source, parameter kinds) for building matching input vectors."""
    return _Gen(spec).generate()


def gen_inputs(param_kinds: list, seed: int) -> list:
    rng = random.Random(seed)
    values = []
    for kind in param_kinds:
        if kind == "int":
            values.append(rng.randint(-10, 10))
        elif kind == "float":
            values.append(rng.randint(-80, 80) / 8.0)
        else:
            values.append(rng.random() < 0.5)
    return values
