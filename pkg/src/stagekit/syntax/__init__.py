from .ast import (AstNode, EXPR_KINDS, KINDS, STMT_KINDS, copy_tree, make,
                  origin_of, set_origin, tree_equal, walk)
from .parser import GENERATED_PREFIX, parse_module
from .pretty import pretty_print
from .qualnames import QualifiedName, qn, qualified_name_of
from .spans import GENERATED_FILE, SourceSpan, generated_span
from .templates import Template, replace, template_replace
from .unparse import unparse

__all__ = [
    "AstNode", "EXPR_KINDS", "KINDS", "STMT_KINDS", "copy_tree", "make",
    "origin_of", "set_origin", "tree_equal", "walk",
    "GENERATED_PREFIX", "parse_module", "pretty_print",
    "QualifiedName", "qn", "qualified_name_of",
    "GENERATED_FILE", "SourceSpan", "generated_span",
    "Template", "replace", "template_replace", "unparse",
]
