"""DOT rendering for graph inspection: one cluster per subgraph, node labels
``op@line``, edges following input references."""

from __future__ import annotations

from .ir import Graph, Node, NodeRef, Subgraph, subgraphs_of


def to_dot(graph: Graph) -> str:
    lines = ["digraph stagekit {", "  rankdir=TB;", "  node [shape=box];"]
    emitted: set = set()
    counter = [0]
    ids: dict = {}  # per-graph stable numbering, independent of trace history

    def node_id(node: Node) -> str:
        if id(node) not in ids:
            ids[id(node)] = f"n{len(ids) + 1}"
        return ids[id(node)]

    def emit_subgraph(sg: Subgraph, label: str, indent: str):
        counter[0] += 1
        lines.append(f"{indent}subgraph cluster_{counter[0]} {{")
        lines.append(f"{indent}  label=\"{label}\";")
        for node in sg.all_nodes():
            if id(node) in emitted:
                continue
            emitted.add(id(node))
            tag = node.op
            if node.op == "Param":
                tag = f"Param {node.attrs.get('name', '')}"
            elif node.op == "FuncCall":
                tag = f"Call {node.attrs.get('fn_name', '')}"
            line = node.origin.start_line if not node.origin.is_generated else 0
            lines.append(f"{indent}  {node_id(node)} [label=\"{tag}@{line}\"];")
            for key, sub in subgraphs_of(node):
                emit_subgraph(sub, f"{node.op}.{key.removesuffix('_graph')}",
                              indent + "  ")
        lines.append(f"{indent}}}")

    emit_subgraph(graph.main, "main", "  ")
    for name, fn in graph.functions.items():
        emit_subgraph(fn.body, f"def {name}", "  ")

    def emit_edges(sg: Subgraph):
        for node in sg.nodes:
            for ref in node.inputs:
                lines.append(f"  {node_id(ref.node)} -> {node_id(node)};")
            for _, sub in subgraphs_of(node):
                emit_edges(sub)

    emit_edges(graph.main)
    for fn in graph.functions.values():
        emit_edges(fn.body)
    lines.append("}")
    return "\n".join(lines) + "\n"
