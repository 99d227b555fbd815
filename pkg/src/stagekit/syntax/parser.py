"""Recursive-descent parser for MSL.

Grammar notes beyond the EBNF:

* ``elif`` chains are represented as nested ``If`` nodes in the else block.
* Chained comparisons ``a < b < c`` parse into a conjunction of pairwise
  comparisons; the middle operand is duplicated, so MSL re-evaluates it.
* Keyword arguments are accepted syntactically but are only legal in calls
  into the ``ag`` directive namespace.
* String literals are only legal as direct call arguments, inside a list
  literal that is itself a direct call argument, or as an assert message.
* Identifiers starting with the reserved ``ag__`` prefix are rejected unless
  the caller opts in (used when re-parsing generated code).
"""

from __future__ import annotations

from ..errors import MslSyntaxError
from .ast import AstNode, EXPR_KINDS, copy_tree, make, walk
from .lexer import Token, tokenize
from .spans import SourceSpan

KEYWORDS = frozenset({
    "def", "if", "elif", "else", "while", "for", "in", "break", "continue",
    "return", "assert", "and", "or", "not", "True", "False", "None",
})

# Not assignable / not usable as parameter or function names.
RESERVED_NAMES = frozenset({"m", "ag", "print", "range", "len",
                            "float", "int", "bool"})

GENERATED_PREFIX = "ag__"

AUG_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/"}
COMPARE_OPS = ("<", ">", "<=", ">=", "==", "!=")


def parse_module(source_text: str, file_name: str = "<input>",
                 allow_reserved_prefix: bool = False) -> AstNode:
    tokens = tokenize(source_text, file_name)
    parser = _Parser(tokens, file_name, allow_reserved_prefix)
    module = parser.parse_module()
    _validate_strings(module)
    return module


class _Parser:
    def __init__(self, tokens: list[Token], file: str, allow_reserved: bool):
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.allow_reserved = allow_reserved
        self.loop_depth = 0

    # -- token plumbing ------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_op(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value == value

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.value == word

    def expect_op(self, value: str) -> Token:
        if not self.at_op(value):
            self.fail(f"expected {value!r}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.peek().kind != kind:
            self.fail(f"expected {what}")
        return self.next()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            self.fail(f"expected {word!r}")
        return self.next()

    def fail(self, message: str):
        tok = self.peek()
        raise MslSyntaxError(f"{message}, found {tok.value or tok.kind!s}",
                             tok.span(self.file))

    def span_from(self, start: Token, end: Token | None = None) -> SourceSpan:
        last = end or self.tokens[self.pos - 1]
        return SourceSpan(self.file, start.line, start.col,
                          last.end_line, last.end_col)

    def node(self, kind, start, **slots) -> AstNode:
        n = make(kind, self.span_from(start), **slots)
        return n

    def identifier(self, tok: Token, binding: bool) -> str:
        if tok.value in KEYWORDS:
            raise MslSyntaxError(f"keyword {tok.value!r} cannot be used as a name",
                                 tok.span(self.file))
        if tok.value.startswith(GENERATED_PREFIX) and not self.allow_reserved:
            raise MslSyntaxError(
                f"identifier {tok.value!r} uses the reserved '{GENERATED_PREFIX}' prefix",
                tok.span(self.file))
        if binding and tok.value in RESERVED_NAMES:
            raise MslSyntaxError(f"cannot bind reserved name {tok.value!r}",
                                 tok.span(self.file))
        return tok.value

    # -- statements ------------------------------------------------------

    def parse_module(self) -> AstNode:
        start = self.peek()
        body = []
        while self.peek().kind != "eof":
            body.append(self.parse_statement())
        module = self.node("Module", start, body=body)
        if not body:
            module.slots["body"] = []
        return module

    def parse_block(self) -> AstNode:
        self.expect_op(":")
        self.expect_kind("newline", "a newline after ':'")
        self.expect_kind("indent", "an indented block")
        stmts = [self.parse_statement()]
        while self.peek().kind not in ("dedent", "eof"):
            stmts.append(self.parse_statement())
        self.expect_kind("dedent", "a dedent")
        block = make("Block", stmts[0].span, stmts=stmts)
        for stmt in stmts[1:]:
            block.span = block.span.merge(stmt.span)
        return block

    def parse_statement(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "name":
            word = tok.value
            if word == "def":
                return self.parse_funcdef()
            if word == "if":
                return self.parse_if()
            if word == "while":
                return self.parse_while()
            if word == "for":
                return self.parse_for()
            if word == "break":
                return self.parse_loop_jump("Break")
            if word == "continue":
                return self.parse_loop_jump("Continue")
            if word == "return":
                return self.parse_return()
            if word == "assert":
                return self.parse_assert()
        return self.parse_small_statement()

    def parse_funcdef(self) -> AstNode:
        start = self.expect_keyword("def")
        name_tok = self.expect_kind("name", "a function name")
        name = self.identifier(name_tok, binding=True)
        self.expect_op("(")
        params = []
        seen = set()
        while not self.at_op(")"):
            ptok = self.expect_kind("name", "a parameter name")
            pname = self.identifier(ptok, binding=True)
            if pname in seen:
                raise MslSyntaxError(f"duplicate parameter {pname!r}",
                                     ptok.span(self.file))
            seen.add(pname)
            params.append(make("Param", ptok.span(self.file), name=pname))
            if not self.at_op(")"):
                self.expect_op(",")
        self.expect_op(")")
        outer_depth, self.loop_depth = self.loop_depth, 0
        body = self.parse_block()
        self.loop_depth = outer_depth
        return self.node("FunctionDef", start, name=name, params=params, body=body)

    def parse_if(self) -> AstNode:
        start = self.expect_keyword("if")
        test = self.parse_expr()
        body = self.parse_block()
        orelse_stmts: list[AstNode] = []
        if self.at_keyword("elif"):
            # rewrite the keyword so the chain parses as a nested if
            elif_tok = self.peek()
            nested = self.parse_elif_as_if(elif_tok)
            orelse_stmts = [nested]
        elif self.at_keyword("else"):
            self.next()
            orelse_stmts = self.parse_block().slots["stmts"]
        orelse = self.node("Block", start, stmts=orelse_stmts)
        return self.node("If", start, test=test, body=body, orelse=orelse)

    def parse_elif_as_if(self, start: Token) -> AstNode:
        self.expect_keyword("elif")
        test = self.parse_expr()
        body = self.parse_block()
        orelse_stmts: list[AstNode] = []
        if self.at_keyword("elif"):
            orelse_stmts = [self.parse_elif_as_if(self.peek())]
        elif self.at_keyword("else"):
            self.next()
            orelse_stmts = self.parse_block().slots["stmts"]
        orelse = self.node("Block", start, stmts=orelse_stmts)
        return self.node("If", start, test=test, body=body, orelse=orelse)

    def parse_while(self) -> AstNode:
        start = self.expect_keyword("while")
        test = self.parse_expr()
        self.loop_depth += 1
        body = self.parse_block()
        self.loop_depth -= 1
        return self.node("While", start, test=test, body=body)

    def parse_for(self) -> AstNode:
        start = self.expect_keyword("for")
        var_tok = self.expect_kind("name", "a loop variable")
        var_name = self.identifier(var_tok, binding=True)
        var = make("Name", var_tok.span(self.file), id=var_name)
        self.expect_keyword("in")
        iterable = self.parse_expr()
        self.loop_depth += 1
        body = self.parse_block()
        self.loop_depth -= 1
        return self.node("For", start, var=var, iter=iterable, body=body)

    def parse_loop_jump(self, kind: str) -> AstNode:
        start = self.next()
        if self.loop_depth == 0:
            raise MslSyntaxError(f"'{start.value}' outside of a loop",
                                 start.span(self.file))
        self.expect_kind("newline", "end of statement")
        return self.node(kind, start)

    def parse_return(self) -> AstNode:
        start = self.expect_keyword("return")
        value = None
        if self.peek().kind != "newline":
            value = self.parse_expr()
        self.expect_kind("newline", "end of statement")
        return self.node("Return", start, value=value)

    def parse_assert(self) -> AstNode:
        start = self.expect_keyword("assert")
        test = self.parse_expr()
        msg = None
        if self.at_op(","):
            self.next()
            msg = self.parse_expr()
        self.expect_kind("newline", "end of statement")
        return self.node("Assert", start, test=test, msg=msg)

    def parse_small_statement(self) -> AstNode:
        start = self.peek()
        expr = self.parse_expr()
        if self.at_op("="):
            self.next()
            self.check_target(expr)
            value = self.parse_expr()
            if self.at_op("="):
                self.fail("chained assignment is not supported")
            self.expect_kind("newline", "end of statement")
            return self.node("Assign", start, target=expr, value=value)
        tok = self.peek()
        if tok.kind == "op" and tok.value in AUG_OPS:
            self.next()
            self.check_target(expr)
            value = self.parse_expr()
            self.expect_kind("newline", "end of statement")
            return self.node("AugAssign", start, target=expr, value=value,
                             op=AUG_OPS[tok.value])
        self.expect_kind("newline", "end of statement")
        return self.node("ExprStmt", start, value=expr)

    def check_target(self, expr: AstNode):
        if expr.kind not in ("Name", "Attribute", "Subscript"):
            raise MslSyntaxError("invalid assignment target", expr.span)
        if expr.kind == "Name":
            name = expr.slots["id"]
            if name in RESERVED_NAMES:
                raise MslSyntaxError(f"cannot assign to reserved name {name!r}",
                                     expr.span)
        else:
            root = expr
            while root.kind in ("Attribute", "Subscript"):
                root = root.slots["value"]
            if root.kind == "Name" and root.slots["id"] in ("m", "ag"):
                raise MslSyntaxError("cannot assign into a reserved namespace",
                                     expr.span)

    # -- expressions -----------------------------------------------------

    def parse_expr(self) -> AstNode:
        return self.parse_ternary()

    def parse_ternary(self) -> AstNode:
        start = self.peek()
        value = self.parse_or()
        if self.at_keyword("if"):
            self.next()
            test = self.parse_or()
            self.expect_keyword("else")
            if_false = self.parse_ternary()
            return self.node("Ternary", start, test=test, if_true=value,
                             if_false=if_false)
        return value

    def parse_or(self) -> AstNode:
        start = self.peek()
        left = self.parse_and()
        while self.at_keyword("or"):
            self.next()
            right = self.parse_and()
            left = self.node("BoolOp", start, op="or", left=left, right=right)
        return left

    def parse_and(self) -> AstNode:
        start = self.peek()
        left = self.parse_not()
        while self.at_keyword("and"):
            self.next()
            right = self.parse_not()
            left = self.node("BoolOp", start, op="and", left=left, right=right)
        return left

    def parse_not(self) -> AstNode:
        if self.at_keyword("not"):
            start = self.next()
            operand = self.parse_not()
            return self.node("UnaryOp", start, op="not", operand=operand)
        return self.parse_compare()

    def parse_compare(self) -> AstNode:
        start = self.peek()
        left = self.parse_arith()
        pairs = []
        while self.peek().kind == "op" and self.peek().value in COMPARE_OPS:
            op = self.next().value
            right = self.parse_arith()
            pairs.append((op, right))
        if not pairs:
            return left
        comparisons = []
        current = left
        for op, right in pairs:
            comparisons.append(
                self.node("Compare", start, op=op, left=current, right=right))
            current = copy_tree(right)
        result = comparisons[0]
        for cmp in comparisons[1:]:
            result = self.node("BoolOp", start, op="and", left=result, right=cmp)
        return result

    def parse_arith(self) -> AstNode:
        start = self.peek()
        left = self.parse_term()
        while self.peek().kind == "op" and self.peek().value in ("+", "-"):
            op = self.next().value
            right = self.parse_term()
            left = self.node("BinOp", start, op=op, left=left, right=right)
        return left

    def parse_term(self) -> AstNode:
        start = self.peek()
        left = self.parse_unary()
        while self.peek().kind == "op" and self.peek().value in ("*", "/", "%"):
            op = self.next().value
            right = self.parse_unary()
            left = self.node("BinOp", start, op=op, left=left, right=right)
        return left

    def parse_unary(self) -> AstNode:
        if self.at_op("-"):
            start = self.next()
            operand = self.parse_unary()
            return self.node("UnaryOp", start, op="-", operand=operand)
        return self.parse_postfix()

    def parse_postfix(self) -> AstNode:
        start = self.peek()
        expr = self.parse_atom()
        while True:
            if self.at_op("("):
                self.next()
                args, kw_names, kw_values = self.parse_args()
                self.expect_op(")")
                expr = self.node("Call", start, func=expr, args=args,
                                 kw_names=kw_names, kw_values=kw_values)
                self.check_kwargs(expr)
            elif self.at_op("."):
                self.next()
                attr_tok = self.expect_kind("name", "an attribute name")
                attr = self.identifier(attr_tok, binding=False)
                expr = self.node("Attribute", start, value=expr, attr=attr)
            elif self.at_op("["):
                self.next()
                index = self.parse_expr()
                self.expect_op("]")
                expr = self.node("Subscript", start, value=expr, index=index)
            else:
                return expr

    def parse_args(self):
        args, kw_names, kw_values = [], [], []
        while not self.at_op(")"):
            if (self.peek().kind == "name" and self.peek().value not in KEYWORDS
                    and self.peek(1).kind == "op" and self.peek(1).value == "="):
                name_tok = self.next()
                self.next()  # '='
                kw_names.append(name_tok.value)
                kw_values.append(self.parse_expr())
            else:
                if kw_names:
                    self.fail("positional argument after keyword argument")
                args.append(self.parse_expr())
            if not self.at_op(")"):
                self.expect_op(",")
        return args, kw_names, kw_values

    def check_kwargs(self, call: AstNode):
        if not call.slots["kw_names"]:
            return
        func = call.slots["func"]
        is_directive = (func.kind == "Attribute"
                        and func.slots["value"].kind == "Name"
                        and func.slots["value"].slots["id"] in ("ag", "ag__"))
        if not is_directive:
            raise MslSyntaxError(
                "keyword arguments are only allowed in 'ag.' directive calls",
                call.span)

    def parse_atom(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "name":
            if tok.value == "True" or tok.value == "False":
                self.next()
                return self.node("BoolLit", tok, value=tok.value == "True")
            if tok.value == "None":
                self.next()
                return self.node("NoneLit", tok)
            if tok.value in KEYWORDS:
                self.fail(f"unexpected keyword {tok.value!r}")
            self.next()
            name = self.identifier(tok, binding=False)
            return self.node("Name", tok, id=name)
        if tok.kind == "int":
            self.next()
            return self.node("IntLit", tok, value=int(tok.value))
        if tok.kind == "float":
            self.next()
            value = float(tok.value)
            if value in (float("inf"), float("-inf")):
                raise MslSyntaxError(f"float literal overflows: {tok.value}",
                                     tok.span(self.file))
            return self.node("FloatLit", tok, value=value)
        if tok.kind == "string":
            self.next()
            return self.node("StrLit", tok, value=tok.value)
        if self.at_op("("):
            self.next()
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        if self.at_op("["):
            start = self.next()
            elements = []
            while not self.at_op("]"):
                elements.append(self.parse_expr())
                if not self.at_op("]"):
                    self.expect_op(",")
            self.expect_op("]")
            return self.node("ListLiteral", start, elements=elements)
        self.fail("expected an expression")


def _validate_strings(module: AstNode):
    """Strings may appear only as direct call arguments (or inside a list
    literal passed directly to a call) and as assert messages."""
    allowed: set[int] = set()
    for node in walk(module):
        if node.kind == "Call":
            for arg in list(node.slots["args"]) + list(node.slots["kw_values"]):
                if arg.kind == "StrLit":
                    allowed.add(arg.uid)
                elif arg.kind == "ListLiteral":
                    for el in arg.slots["elements"]:
                        if el.kind == "StrLit":
                            allowed.add(el.uid)
        elif node.kind == "Assert":
            msg = node.slots["msg"]
            if msg is not None and msg.kind == "StrLit":
                allowed.add(msg.uid)
    for node in walk(module):
        if node.kind == "StrLit" and node.uid not in allowed:
            raise MslSyntaxError(
                "string literals are only allowed as call arguments and "
                "assert messages", node.span)
