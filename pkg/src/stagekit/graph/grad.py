"""Reverse-mode gradients over the functional IR.

The reverse pass walks one frame backwards accumulating adjoints.  Control
flow differentiates structurally, mirroring the continuation-passing shape of
the generated backward code:

* ``Cond`` produces a gradient Cond on the same predicate whose branches
  recompute their primal values and propagate the incoming adjoint to every
  differentiable captured value (zero in the branch that does not use it).
* ``FuncCall`` calls a derived gradient function ``f_grad(args..., dout)``
  returning one adjoint per differentiable parameter; recursive functions
  yield recursive gradient functions, with in-progress definitions resolving
  self-references.  The seed at the graph output is the constant 1.0.

``While`` is not differentiable here; training loops differentiate the
per-step loss inside the body instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import NonDifferentiable, WhileNotDifferentiable
from ..syntax.spans import generated_span
from . import tensor
from .ir import Graph, GraphFunction, Node, NodeRef, Subgraph, TypeSpec

_DIFF_OPS = frozenset({
    "Add", "Sub", "Mul", "Div", "Neg", "MatMul", "Transpose", "ReduceSum",
    "Tanh", "Sigmoid", "Where", "Cond", "FuncCall", "Index", "ListStack",
    "Const", "Param", "ListNew", "ListAppend", "TreeValue",
})


def gradient(graph: Graph, output, wrt: list) -> Graph:
    """Extended graph whose outputs are the original outputs followed by
    d(output)/d(p) for each parameter name in ``wrt``."""
    out = Graph()
    out.functions = dict(graph.functions)
    ref_map = _copy_frame_into(graph.main, out.main)
    out.main.outputs = [ref_map[_key(r)] for r in graph.main.outputs]

    if isinstance(output, int):
        target = out.main.outputs[output]
    elif isinstance(output, NodeRef):
        target = ref_map[_key(output)]
    else:
        raise NonDifferentiable("gradient target must be an output index or ref")
    if target.type.dtype != "f64" or target.type.shape != ():
        raise NonDifferentiable(
            f"gradient target must be a scalar f64, got {target.type.render()}")

    builder = _FrameBuilder(out.main, out)
    sweep = _Sweep(builder)
    sweep.adjoints[_key(target)] = builder.const_scalar(1.0)
    sweep.run(out.main.nodes)

    partials = []
    for name in wrt:
        param = out.param_named(name)
        spec = param.out_types[0]
        if spec.dtype != "f64":
            raise NonDifferentiable(
                f"parameter {name!r} has dtype {spec.dtype}; gradients need f64")
        adj = sweep.adjoints.get(_key(param.ref(0)))
        if adj is None:
            adj = builder.zeros_like(param.ref(0))
        partials.append(adj)
    out.main.outputs = list(out.main.outputs) + partials
    return out


def _key(ref: NodeRef):
    return (id(ref.node), ref.out)


def _copy_frame_into(src: Subgraph, dst: Subgraph) -> dict:
    """Copy a frame's nodes into ``dst`` (fresh node objects, shared nested
    subgraphs); returns old-ref -> new-ref."""
    ref_map: dict = {}
    for param in src.params:
        new = dst.add_param(param.attrs.get("name", "p"), param.out_types[0],
                            origin=param.origin)
        for out_idx in range(len(param.out_types)):
            ref_map[(id(param), out_idx)] = new.ref(out_idx)
    for node in src.nodes:
        new = Node(node.op, [ref_map[_key(r)] for r in node.inputs],
                   dict(node.attrs), node.origin, list(node.out_types))
        dst.add(new)
        for out_idx in range(len(node.out_types)):
            ref_map[(id(node), out_idx)] = new.ref(out_idx)
    return ref_map


@dataclass
class _FrameBuilder:
    frame: Subgraph
    graph: Graph

    def emit(self, op, inputs, attrs, out_types) -> Node:
        node = Node(op, list(inputs), attrs, generated_span(), list(out_types))
        self.frame.add(node)
        return node

    def const_scalar(self, value: float) -> NodeRef:
        node = self.emit("Const", [], {"value": tensor.scalar(value)},
                         [TypeSpec("f64", ())])
        return node.ref(0)

    def binary(self, op, a: NodeRef, b: NodeRef) -> NodeRef:
        dtype = tensor.result_dtype(_SYM[op], a.type.dtype, b.type.dtype)
        shape = None
        if a.type.shape is not None and b.type.shape is not None:
            shape = tensor.broadcast_shapes(a.type.shape, b.type.shape)
        return self.emit(op, [a, b], {}, [TypeSpec(dtype, shape)]).ref(0)

    def neg(self, a: NodeRef) -> NodeRef:
        return self.emit("Neg", [a], {}, [a.type]).ref(0)

    def zeros_like(self, ref: NodeRef) -> NodeRef:
        return self.binary("Mul", ref, self.const_scalar(0.0))

    def ones_like(self, ref: NodeRef) -> NodeRef:
        return self.binary("Add", self.zeros_like(ref), self.const_scalar(1.0))


_SYM = {"Add": "+", "Sub": "-", "Mul": "*", "Div": "/"}


@dataclass
class _Sweep:
    builder: _FrameBuilder
    adjoints: dict = field(default_factory=dict)

    def accumulate(self, ref: NodeRef, contribution: NodeRef):
        if ref.type.dtype != "f64":
            return  # gradients flow along f64 edges only
        key = _key(ref)
        if key in self.adjoints:
            self.adjoints[key] = self.builder.binary(
                "Add", self.adjoints[key], contribution)
        else:
            self.adjoints[key] = contribution

    def adjoint_of(self, node: Node, out: int = 0):
        return self.adjoints.get((id(node), out))

    def run(self, nodes: list):
        for node in reversed(list(nodes)):
            if not any(self.adjoint_of(node, i) is not None
                       for i in range(len(node.out_types))):
                continue
            self.visit(node)

    # -- per-op rules -------------------------------------------------------

    def visit(self, node: Node):
        op = node.op
        if op == "While":
            raise WhileNotDifferentiable(
                "gradients through While loops are not supported", node.origin)
        if op not in _DIFF_OPS:
            raise NonDifferentiable(f"op {op} is not differentiable",
                                    node.origin)
        b = self.builder
        dz = self.adjoint_of(node)

        if op in ("Const", "Param", "TreeValue"):
            return  # gradient leaves: adjoints stop here
        if op == "Add":
            self.accumulate(node.inputs[0], self._reduce_like(dz, node.inputs[0]))
            self.accumulate(node.inputs[1], self._reduce_like(dz, node.inputs[1]))
        elif op == "Sub":
            self.accumulate(node.inputs[0], self._reduce_like(dz, node.inputs[0]))
            self.accumulate(node.inputs[1],
                            self._reduce_like(b.neg(dz), node.inputs[1]))
        elif op == "Mul":
            x, y = node.inputs
            self.accumulate(x, self._reduce_like(b.binary("Mul", dz, y), x))
            self.accumulate(y, self._reduce_like(b.binary("Mul", dz, x), y))
        elif op == "Div":
            x, y = node.inputs
            self.accumulate(x, self._reduce_like(b.binary("Div", dz, y), x))
            dy = b.neg(b.binary("Div", b.binary("Mul", dz, node.ref(0)), y))
            self.accumulate(y, self._reduce_like(dy, y))
        elif op == "Neg":
            self.accumulate(node.inputs[0], b.neg(dz))
        elif op == "MatMul":
            x, y = node.inputs
            yt = b.emit("Transpose", [y], {"perm": (1, 0)},
                        [_transposed(y.type)]).ref(0)
            xt = b.emit("Transpose", [x], {"perm": (1, 0)},
                        [_transposed(x.type)]).ref(0)
            self.accumulate(x, _matmul(b, dz, yt))
            self.accumulate(y, _matmul(b, xt, dz))
        elif op == "Transpose":
            perm = node.attrs["perm"]
            inverse = tuple(perm.index(i) for i in range(len(perm)))
            spec = node.inputs[0].type
            self.accumulate(node.inputs[0],
                            b.emit("Transpose", [dz], {"perm": inverse},
                                   [spec]).ref(0))
        elif op == "ReduceSum":
            x = node.inputs[0]
            if x.type.dtype != "f64":
                raise NonDifferentiable("reduce_sum gradient needs f64 input",
                                        node.origin)
            self.accumulate(x, b.binary("Mul", dz, b.ones_like(x)))
        elif op == "Tanh":
            z = node.ref(0)
            one = b.const_scalar(1.0)
            self.accumulate(node.inputs[0], b.binary(
                "Mul", dz, b.binary("Sub", one, b.binary("Mul", z, z))))
        elif op == "Sigmoid":
            z = node.ref(0)
            one = b.const_scalar(1.0)
            self.accumulate(node.inputs[0], b.binary(
                "Mul", dz, b.binary("Mul", z, b.binary("Sub", one, z))))
        elif op == "Where":
            cond, x, y = node.inputs
            zero = b.zeros_like(dz)
            dx = b.emit("Where", [cond, dz, zero], {}, [dz.type]).ref(0)
            dy = b.emit("Where", [cond, zero, dz], {}, [dz.type]).ref(0)
            self.accumulate(x, dx)
            self.accumulate(y, dy)
        elif op == "Index":
            self._index_rule(node, dz)
        elif op == "ListStack":
            self._stack_rule(node, dz)
        elif op in ("ListNew", "ListAppend"):
            raise NonDifferentiable(
                "adjoint of a list value outside a stack chain", node.origin)
        elif op == "Cond":
            self._cond_rule(node)
        elif op == "FuncCall":
            self._call_rule(node)

    def _reduce_like(self, dz: NodeRef, target: NodeRef) -> NodeRef:
        """Undo forward broadcasting: equal shapes pass through, scalar
        targets get a full reduction."""
        tshape, zshape = target.type.shape, dz.type.shape
        if tshape == ():
            if zshape == ():
                return dz
            return self.builder.emit("ReduceSum", [dz], {},
                                     [TypeSpec(dz.type.dtype, ())]).ref(0)
        if tshape is not None and zshape is not None and tshape == zshape:
            return dz
        if tshape == zshape:
            return dz
        raise NonDifferentiable(
            f"gradient of broadcast from {tshape} to {zshape} is only "
            f"supported for scalars and equal shapes")

    def _index_rule(self, node: Node, dz: NodeRef):
        x, idx = node.inputs
        shape = x.type.shape
        if idx.node.op != "Const" or shape is None or len(shape) != 1 \
                or shape[0] is None:
            raise NonDifferentiable(
                "index gradient needs a constant index into a statically "
                "sized vector", node.origin)
        i = idx.node.attrs["value"].item()
        b = self.builder
        elems = []
        for j in range(shape[0]):
            elems.append(dz if j == i else b.zeros_like(dz))
        elem_spec = dz.type
        lst = b.emit("ListNew", elems, {},
                     [TypeSpec("list", None, elem_spec)]).ref(0)
        stacked = b.emit("ListStack", [lst], {},
                         [TypeSpec(x.type.dtype, (shape[0],) + elem_spec.shape)]
                         ).ref(0)
        self.accumulate(x, stacked)

    def _stack_rule(self, node: Node, dz: NodeRef):
        elements = _stack_chain_elements(node.inputs[0])
        if elements is None:
            raise NonDifferentiable(
                "stack gradient needs a statically traceable list", node.origin)
        b = self.builder
        for position, elem in enumerate(elements):
            index = b.emit("Const", [], {"value": tensor.scalar(position)},
                           [TypeSpec("i64", ())]).ref(0)
            part = b.emit("Index", [dz, index], {}, [elem.type]).ref(0)
            self.accumulate(elem, part)

    def _cond_rule(self, node: Node):
        b = self.builder
        n_then = node.attrs["n_then_caps"]
        pred = node.inputs[0]
        then_caps = node.inputs[1:1 + n_then]
        else_caps = node.inputs[1 + n_then:]
        dzs = [self.adjoint_of(node, i) for i in range(len(node.out_types))]

        diff_caps = []
        seen = set()
        for ref in list(then_caps) + list(else_caps):
            if ref.type.dtype == "f64" and _key(ref) not in seen:
                seen.add(_key(ref))
                diff_caps.append(ref)
        if not diff_caps:
            return

        live = [i for i, dz in enumerate(dzs) if dz is not None]
        then_grad = _branch_gradient(self.builder.graph,
                                     node.attrs["then_graph"], then_caps,
                                     diff_caps, live)
        else_grad = _branch_gradient(self.builder.graph,
                                     node.attrs["else_graph"], else_caps,
                                     diff_caps, live)
        inputs = [pred]
        inputs += list(diff_caps) + list(then_caps) + [dzs[i] for i in live]
        inputs += list(diff_caps) + list(else_caps) + [dzs[i] for i in live]
        out_types = [r.type for r in diff_caps]
        grad_node = b.emit("Cond", inputs, {
            "then_graph": then_grad,
            "else_graph": else_grad,
            "n_then_caps": len(diff_caps) + len(then_caps) + len(live),
            "n_else_caps": len(diff_caps) + len(else_caps) + len(live),
            "out_symbols": [f"d{i}" for i in range(len(diff_caps))],
        }, out_types)
        for position, ref in enumerate(diff_caps):
            self.accumulate(ref, grad_node.ref(position))

    def _call_rule(self, node: Node):
        graph = self.builder.graph
        fn = graph.functions[node.attrs["fn_name"]]
        dz = self.adjoint_of(node)
        grad_fn = _ensure_grad_function(graph, fn)
        diff_positions = [i for i, p in enumerate(fn.body.params)
                          if p.out_types[0].dtype == "f64"]
        call = self.builder.emit(
            "FuncCall", list(node.inputs) + [dz],
            {"fn_name": grad_fn.name},
            [fn.body.params[i].out_types[0] for i in diff_positions])
        for out_index, param_index in enumerate(diff_positions):
            self.accumulate(node.inputs[param_index], call.ref(out_index))


def _transposed(spec: TypeSpec) -> TypeSpec:
    if spec.shape is None:
        return spec
    return TypeSpec(spec.dtype, tuple(reversed(spec.shape)))


def _matmul(b: _FrameBuilder, x: NodeRef, y: NodeRef) -> NodeRef:
    sx, sy = x.type.shape, y.type.shape
    shape = None
    if sx is not None and sy is not None:
        shape = (sx[0], sy[1])
    return b.emit("MatMul", [x, y], {}, [TypeSpec("f64", shape)]).ref(0)


def _stack_chain_elements(ref: NodeRef):
    """Element refs of a list built by ListNew + ListAppend in one frame."""
    suffix = []
    node = ref.node
    while node.op == "ListAppend":
        suffix.append(node.inputs[1])
        node = node.inputs[0].node
    if node.op != "ListNew":
        return None
    return list(node.inputs) + list(reversed(suffix))


def _branch_gradient(graph: Graph, branch: Subgraph, caps: list,
                     diff_caps: list, live_outs: list) -> Subgraph:
    """Gradient branch: recompute the primal branch, then back-propagate the
    output adjoints to every differentiable captured value."""
    sg = Subgraph(closed=True)
    diff_params = [sg.add_param(f"c{i}", ref.type)
                   for i, ref in enumerate(diff_caps)]
    cap_params = [sg.add_param(f"p{i}", ref.type) for i, ref in enumerate(caps)]
    dz_params = [sg.add_param(f"dz{i}", branch.outputs[i].type)
                 for i in live_outs]

    # primal recompute with original captures bound to our params
    ref_map = {}
    for old_param, new_param in zip(branch.params, cap_params):
        ref_map[(id(old_param), 0)] = new_param.ref(0)
    for node in branch.nodes:
        new = Node(node.op, [ref_map[_key(r)] for r in node.inputs],
                   dict(node.attrs), node.origin, list(node.out_types))
        sg.add(new)
        for out_idx in range(len(node.out_types)):
            ref_map[(id(node), out_idx)] = new.ref(out_idx)

    builder = _FrameBuilder(sg, graph)
    sweep = _Sweep(builder)
    for dz_param, out_index in zip(dz_params, live_outs):
        mapped = ref_map[_key(branch.outputs[out_index])]
        sweep.accumulate(mapped, dz_param.ref(0))
    sweep.run(list(sg.nodes))

    outputs = []
    cap_lookup = {_key(c): p for c, p in zip(caps, cap_params)}
    for ref, diff_param in zip(diff_caps, diff_params):
        own = cap_lookup.get(_key(ref))
        adj = sweep.adjoints.get(_key(own.ref(0))) if own is not None else None
        outputs.append(adj if adj is not None
                       else builder.zeros_like(diff_param.ref(0)))
    sg.outputs = outputs
    return sg


_GRAD_SUFFIX = "_grad"


def _ensure_grad_function(graph: Graph, fn: GraphFunction) -> GraphFunction:
    name = fn.name + _GRAD_SUFFIX
    existing = graph.functions.get(name)
    if existing is not None:
        return existing

    diff_positions = [i for i, p in enumerate(fn.body.params)
                      if p.out_types[0].dtype == "f64"]
    if len(fn.body.outputs) != 1:
        raise NonDifferentiable(
            f"gradient of multi-output function {fn.name!r}")
    out_spec = fn.body.outputs[0].type
    if out_spec.dtype != "f64":
        raise NonDifferentiable(
            f"function {fn.name!r} returns {out_spec.render()}; gradients "
            f"need f64")

    body = Subgraph(closed=True)
    grad_fn = GraphFunction(name, body, (fn.specialization_key, "grad"))
    graph.functions[name] = grad_fn  # registered first: recursion resolves

    params = [body.add_param(p.attrs.get("name", f"a{i}"), p.out_types[0])
              for i, p in enumerate(fn.body.params)]
    dout = body.add_param("dout", out_spec)

    ref_map = {}
    for old_param, new_param in zip(fn.body.params, params):
        ref_map[(id(old_param), 0)] = new_param.ref(0)
    for node in fn.body.nodes:
        new = Node(node.op, [ref_map[_key(r)] for r in node.inputs],
                   dict(node.attrs), node.origin, list(node.out_types))
        body.add(new)
        for out_idx in range(len(node.out_types)):
            ref_map[(id(node), out_idx)] = new.ref(out_idx)

    builder = _FrameBuilder(body, graph)
    sweep = _Sweep(builder)
    out_ref = ref_map[_key(fn.body.outputs[0])]
    sweep.accumulate(out_ref, dout.ref(0))
    sweep.run(list(body.nodes))

    outputs = []
    for index in diff_positions:
        adj = sweep.adjoints.get(_key(params[index].ref(0)))
        outputs.append(adj if adj is not None
                       else builder.zeros_like(params[index].ref(0)))
    body.outputs = outputs
    return grad_fn
