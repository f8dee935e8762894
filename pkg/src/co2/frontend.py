"""Concrete syntax: tokenizer, recursive-descent parser and renderer.

Contracts::

    rec Z . addToCart.Z + creditCard.(~ok (+) ~no) + e
    ~addToCart; ~creditCard; (ok + no)

`;` continues an internal branch, `.` an external one; `(+)` separates
internal branches and `+` external ones.  A branch without continuation
continues with E.  A lone atom is an internal singleton.  A continuation is
either parenthesized, `0`, `E`, a recursion variable, a contract binding, or a
chain of singleton branches using the same separator.

Processes and systems::

    X(x) := do x a . X(x) + tau . do x b
    A[(x) (tell A {x} (a; b) . X(x) | fuse x)] | B[...]
    (s) (s[A says a | B says ~a.E] | A[do s a])

Formulas: true, atoms, !p, p & q, p | q, p -> q, X p, p U q, [] p, <> p.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from co2.contracts import (
    E, NIL, SUCCESS, Atom, BilateralContract, Contract, ContractError, ExtSum, IntSum, Nil, Ready, Rec,
    RecVar, Says, validate,
)
from co2.ltl import (
    Formula, LAlways, LAnd, LAtom, LEventually, LImplies, LNext, LNot, LOr, LTrue, LUntil, TRUE,
)
from co2.syntax import (
    NIL_P, Ask, Branch, Call, Definition, Delim, Do, Fuse, Latent, Name, Par, Process, ProcessError,
    RawSystem, Sum, SysBox, SysDelim, SysNil, SysPar, SysSession, Tau, Tell, Var, calls_in, free_idents,
    free_idents_system, prefix_guarded_calls,
)


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.msg = msg
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


# -- tokens ------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<sym>\(\+\)|:=|->|\[\]|<>|[()\[\]{},;.+|~!&])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*|0)
    """,
    re.VERBOSE,
)

KEYWORDS = {"rec", "ready", "E", "tau", "tell", "fuse", "do", "ask", "says", "contract", "true"}


@dataclass
class Token:
    kind: str  # "sym", "ident", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    line, col0 = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line, pos - col0 + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                col0 = pos + i + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - col0 + 1))
    return out


def _is_upper(s):
    return s[:1].isupper()


class Parser:
    def __init__(self, text: str, bindings: dict | None = None, sessions: set | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.bindings = dict(bindings or {})
        self.sessions = set(sessions or ())

    # basic helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.next()

    def ident(self, what="identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text == "0" or t.text in KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        return self.next()

    def end(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- contracts --
    def contract(self, env=()) -> Contract:
        start = self.tok
        c = self._contract(list(env), top=True)
        try:
            if not env:
                validate(c)
        except ContractError as e:
            raise ParseError(str(e), start.line, start.col) from None
        return c

    def _contract(self, env, top=False):
        if self.at("rec"):
            self.next()
            name = self.ident("recursion variable").text
            self.expect(".")
            body = self._contract(env + [name])
            return Rec(body, name)
        if self.at("ready"):
            tok = self.next()
            if not top:
                raise self.error("ready may appear at the top level only", tok)
            a = self.atom()
            self.expect(".")
            return Ready(a, self._contract(env))
        if self._at_primary(env):
            return self._primary(env)
        return self._sum(env)

    def _at_primary(self, env):
        t = self.tok
        if t.text in ("(", "0", "E"):
            return True
        return t.kind == "ident" and (t.text in env or t.text in self.bindings)

    def _primary(self, env):
        t = self.next()
        if t.text == "(":
            c = self._contract(env)
            self.expect(")")
            return c
        if t.text == "0":
            return NIL
        if t.text == "E":
            return E
        if t.text in env:
            return RecVar(env[::-1].index(t.text), t.text)
        return self.bindings[t.text]

    def _sum(self, env):
        start = self.tok
        branches = []
        kind = None
        a, sep, cont = self._branch(env)
        branches.append((a, cont))
        kind = {";": "int", ".": "ext", None: None}[sep]
        while self.at("(+)") or self.at("+"):
            op = self.next()
            k = "int" if op.text == "(+)" else "ext"
            if kind is not None and k != kind:
                raise self.error("cannot mix (+) and + in one sum; add parentheses", op)
            kind = k
            a, sep, cont = self._branch(env)
            if sep is not None and {";": "int", ".": "ext"}[sep] != kind:
                raise self.error("branch separator does not match the sum kind", start)
            branches.append((a, cont))
        atoms = [b[0] for b in branches]
        if len(set(atoms)) != len(atoms):
            raise ParseError("branch atoms must be pairwise distinct", start.line, start.col)
        if kind == "ext":
            return ExtSum(tuple(branches))
        return IntSum(tuple(branches))

    def _branch(self, env):
        a = self.atom()
        if self.at(";") or self.at("."):
            sep = self.next().text
            return a, sep, self._cont(env, sep)
        return a, None, E

    def _cont(self, env, sep):
        if self._at_primary(env):
            return self._primary(env)
        a = self.atom()
        other = "." if sep == ";" else ";"
        if self.at(other):
            raise self.error("mixing ; and . without parentheses")
        if self.at(sep):
            self.next()
            k = self._cont(env, sep)
        else:
            k = E
        return IntSum(((a, k),)) if sep == ";" else ExtSum(((a, k),))

    def atom(self) -> Atom:
        co = False
        if self.at("~"):
            self.next()
            co = True
        t = self.ident("atom")
        if t.text == "e" and co:
            raise self.error("~e is not allowed: e is self-dual", t)
        return Atom(t.text, co)

    # -- formulas --
    def formula(self) -> Formula:
        return self._implies()

    def _implies(self):
        left = self._or()
        if self.at("->"):
            self.next()
            return LImplies(left, self._implies())
        return left

    def _or(self):
        left = self._and()
        while self.at("|"):
            self.next()
            left = LOr(left, self._and())
        return left

    def _and(self):
        left = self._until()
        while self.at("&"):
            self.next()
            left = LAnd(left, self._until())
        return left

    def _until(self):
        left = self.unary_formula()
        if self.at("U"):
            self.next()
            return LUntil(left, self._until())
        return left

    def unary_formula(self) -> Formula:
        t = self.tok
        if t.text == "!":
            self.next()
            return LNot(self.unary_formula())
        if t.text == "X" and t.kind == "ident":
            self.next()
            return LNext(self.unary_formula())
        if t.text == "[]":
            self.next()
            return LAlways(self.unary_formula())
        if t.text == "<>":
            self.next()
            return LEventually(self.unary_formula())
        if t.text == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if t.text == "true":
            self.next()
            return TRUE
        return LAtom(self.atom())

    # -- processes --
    def ident_ref(self, what="session identifier"):
        t = self.ident(what)
        if _is_upper(t.text):
            raise self.error(f"expected a lowercase {what}, found {t.text!r}", t)
        return Name(t.text) if t.text in self.sessions else Var(t.text)

    def participant(self) -> str:
        t = self.ident("participant name")
        if not _is_upper(t.text):
            raise self.error(f"participant names start with an uppercase letter: {t.text!r}", t)
        return t.text

    def process(self) -> Process:
        items = [self._sumproc()]
        while self.at("|"):
            self.next()
            items.append(self._sumproc())
        return items[0] if len(items) == 1 else Par(tuple(items))

    def _at_delim(self):
        if not self.at("("):
            return False
        t1, t2 = self.peek(1), self.peek(2)
        return (
            t1.kind == "ident" and not _is_upper(t1.text) and t1.text not in KEYWORDS and t1.text != "0"
            and t2.text in (",", ")")
        )

    def _binders(self):
        self.expect("(")
        out = [self.ident_ref("bound identifier")]
        while self.at(","):
            self.next()
            out.append(self.ident_ref("bound identifier"))
        self.expect(")")
        return out

    def _sumproc(self) -> Process:
        if self._at_delim():
            binders = self._binders()
            body = self.process()
            for u in reversed(binders):
                body = Delim(u, body)
            return body
        if self._at_prefix():
            branches = [self._pbranch()]
            while self.at("+"):
                self.next()
                branches.append(self._pbranch())
            return Sum(tuple(branches))
        return self._atomic()

    def _at_prefix(self):
        return self.tok.kind == "ident" and self.tok.text in ("tau", "tell", "fuse", "do", "ask")

    def _atomic(self) -> Process:
        t = self.tok
        if t.text == "0":
            self.next()
            return NIL_P
        if t.text == "(":
            self.next()
            p = self.process()
            self.expect(")")
            return p
        if t.text == "{":
            self.next()
            x = self.ident_ref()
            self.expect("}")
            owner = self.participant()
            self.expect("says")
            return Latent(x, owner, self.contract())
        if t.kind == "ident" and _is_upper(t.text) and t.text not in KEYWORDS:
            self.next()
            args = []
            if self.at("("):
                self.next()
                if not self.at(")"):
                    args.append(self.ident_ref("argument"))
                    while self.at(","):
                        self.next()
                        args.append(self.ident_ref("argument"))
                self.expect(")")
            return Call(t.text, tuple(args))
        raise self.error(f"expected a process, found {t.text or 'end of input'!r}")

    def _pbranch(self) -> Branch:
        pi = self.prefix()
        if self.at("."):
            self.next()
            return Branch(pi, self._pcont())
        return Branch(pi, NIL_P)

    def _pcont(self) -> Process:
        if self._at_prefix():
            return Sum((self._pbranch(),))
        if self._at_delim():
            raise self.error("parenthesize a delimitation used as a continuation")
        return self._atomic()

    def prefix(self):
        t = self.next()
        match t.text:
            case "tau":
                return Tau()
            case "tell":
                to = self.participant()
                self.expect("{")
                x = self.ident_ref()
                self.expect("}")
                return Tell(to, x, self._tell_contract())
            case "fuse":
                return Fuse(self.ident_ref())
            case "do":
                x = self.ident_ref()
                return Do(x, self.atom())
            case "ask":
                x = self.ident_ref()
                return Ask(x, self.unary_formula())
        raise self.error(f"expected a prefix, found {t.text!r}", t)

    def _tell_contract(self) -> Contract:
        t = self.tok
        if t.text == "(":
            self.next()
            c = self.contract()
            self.expect(")")
            return c
        if t.text == "0":
            self.next()
            return NIL
        if t.text == "E":
            self.next()
            return E
        if t.kind == "ident" and t.text in self.bindings:
            self.next()
            return self.bindings[t.text]
        raise self.error("the contract of a tell must be parenthesized or a contract name")

    # -- systems --
    def system(self) -> RawSystem:
        items = [self._sysunit()]
        while self.at("|"):
            self.next()
            items.append(self._sysunit())
        return items[0] if len(items) == 1 else SysPar(tuple(items))

    def _sysunit(self) -> RawSystem:
        t = self.tok
        if self._at_delim():
            binders = self._binders()
            body = self.system()
            for u in reversed(binders):
                body = SysDelim(u, body)
            return body
        if t.text == "(":
            self.next()
            s = self.system()
            self.expect(")")
            return s
        if t.text == "0":
            self.next()
            return SysNil()
        if t.kind == "ident" and t.text not in KEYWORDS and self.peek().text == "[":
            self.next()
            self.expect("[")
            if _is_upper(t.text):
                p = self.process()
                self.expect("]")
                return SysBox(t.text, p)
            g = self.bilateral()
            self.expect("]")
            return SysSession(Name(t.text), g)
        raise self.error(f"expected a system, found {t.text or 'end of input'!r}")

    def bilateral(self) -> BilateralContract:
        start = self.tok
        a = self.participant()
        self.expect("says")
        c = self.contract()
        self.expect("|")
        b = self.participant()
        self.expect("says")
        d = self.contract()
        try:
            return BilateralContract(Says(a, c), Says(b, d))
        except ContractError as e:
            raise ParseError(str(e), start.line, start.col) from None


# -- addresses ---------------------------------------------------------------------


def assign_addresses(p: Process, root: str, path=()) -> Process:
    """Label each prefix with `root:i.j...` (parallel and branch indices)."""
    match p:
        case Par(items):
            return Par(tuple(assign_addresses(q, root, path + (i,)) for i, q in enumerate(items)))
        case Sum(branches):
            out = []
            for i, b in enumerate(branches):
                here = path + (i,)
                addr = f"{root}:{'.'.join(map(str, here))}"
                out.append(Branch(b.prefix, assign_addresses(b.cont, root, here), addr))
            return Sum(tuple(out))
        case Delim(u, body):
            return Delim(u, assign_addresses(body, root, path))
    return p


def strip_addresses(p: Process) -> Process:
    match p:
        case Par(items):
            return Par(tuple(strip_addresses(q) for q in items))
        case Sum(branches):
            return Sum(tuple(Branch(b.prefix, strip_addresses(b.cont)) for b in branches))
        case Delim(u, body):
            return Delim(u, strip_addresses(body))
    return p


def _address_system(s: RawSystem) -> RawSystem:
    match s:
        case SysBox(a, p):
            return SysBox(a, assign_addresses(p, a))
        case SysPar(items):
            return SysPar(tuple(_address_system(q) for q in items))
        case SysDelim(u, body):
            return SysDelim(u, _address_system(body))
    return s


# -- source files -------------------------------------------------------------------


@dataclass
class SourceFile:
    contracts: dict = field(default_factory=dict)
    definitions: dict = field(default_factory=dict)
    system: RawSystem | None = None

    def box_process(self, participant: str) -> Process:
        """The source process of a participant (all its boxes in parallel)."""
        found = []

        def go(s, binders):
            match s:
                case SysBox(a, p) if a == participant:
                    for u in reversed(binders):
                        p = Delim(u, p) if u in free_idents(p) else p
                    found.append(p)
                case SysPar(items):
                    for q in items:
                        go(q, binders)
                case SysDelim(u, body):
                    go(body, binders + [u])

        if self.system is not None:
            go(self.system, [])
        if not found:
            raise ProcessError(f"no participant {participant} in the system")
        return found[0] if len(found) == 1 else Par(tuple(found))

    def initial(self):
        from co2.system import normalize

        if self.system is None:
            raise ProcessError("the file has no system")
        return normalize(self.system)


def _session_names(text: str) -> set:
    toks = tokenize(text)
    out = set()
    for t, n in zip(toks, toks[1:]):
        if t.kind == "ident" and n.text == "[" and not _is_upper(t.text) and t.text not in KEYWORDS:
            out.add(t.text)
    return out


def parse_contract(text: str, bindings: dict | None = None) -> Contract:
    p = Parser(text, bindings)
    c = p.contract()
    p.end()
    return c


def parse_formula(text: str) -> Formula:
    p = Parser(text)
    f = p.formula()
    p.end()
    return f


def parse_process(text: str, root: str = "P", bindings: dict | None = None, sessions=()) -> Process:
    p = Parser(text, bindings, set(sessions))
    proc = p.process()
    p.end()
    return assign_addresses(proc, root)


def parse_bilateral(text: str) -> BilateralContract:
    p = Parser(text)
    g = p.bilateral()
    p.end()
    return g


def parse_system(text: str) -> SourceFile:
    """Parse a source file: contract bindings, definitions and one system."""
    sessions = _session_names(text)
    p = Parser(text, sessions=sessions)
    out = SourceFile()
    while p.tok.kind != "eof":
        t = p.tok
        if t.text == "contract":
            p.next()
            name = p.ident("contract name")
            if name.text in out.contracts:
                raise p.error(f"contract {name.text} defined twice", name)
            p.expect(":=")
            c = p.contract()
            out.contracts[name.text] = c
            p.bindings[name.text] = c
            continue
        if t.kind == "ident" and _is_upper(t.text) and p.peek().text in ("(", ":="):
            # A definition X(params) := P (a system never starts this way).
            save = p.i
            p.next()
            params = []
            if p.at("("):
                p.next()
                if not p.at(")"):
                    params.append(p.ident_ref("parameter"))
                    while p.at(","):
                        p.next()
                        params.append(p.ident_ref("parameter"))
                p.expect(")")
            if p.at(":="):
                p.next()
                if t.text in out.definitions:
                    raise p.error(f"process {t.text} defined twice", t)
                if any(isinstance(x, Name) for x in params):
                    raise p.error("parameters must not reuse session names", t)
                if len(set(params)) != len(params):
                    raise p.error("duplicate parameter", t)
                body = assign_addresses(p.process(), t.text)
                out.definitions[t.text] = Definition(t.text, tuple(params), body)
                continue
            p.i = save
        if out.system is not None:
            raise p.error("only one system per file")
        out.system = _address_system(p.system())
    _check(out)
    return out


def _check(src: SourceFile):
    defs = src.definitions
    for d in defs.values():
        extra = free_idents(d.body) - set(d.params)
        if extra:
            raise ParseError(f"{d.name}: free identifiers {', '.join(sorted(map(str, extra)))} are not parameters")
        if not prefix_guarded_calls(d.body):
            raise ParseError(f"{d.name}: process identifiers must be prefix-guarded")
    bodies = [d.body for d in defs.values()]
    procs = []
    if src.system is not None:
        def boxes(s):
            match s:
                case SysBox(_, p):
                    procs.append(p)
                case SysPar(items):
                    for q in items:
                        boxes(q)
                case SysDelim(_, body):
                    boxes(body)

        boxes(src.system)
        free = free_idents_system(src.system)
        loose = sorted(u.name for u in free if isinstance(u, Var))
        if loose:
            raise ParseError(f"unbound identifiers in the system: {', '.join(loose)}")
    for p in bodies + procs:
        for c in calls_in_deep(p):
            d = defs.get(c.name)
            if d is None:
                raise ParseError(f"undefined process identifier {c.name}")
            if len(d.params) != len(c.args):
                raise ParseError(f"{c.name} expects {len(d.params)} arguments, got {len(c.args)}")


def calls_in_deep(p: Process) -> list[Call]:
    return calls_in(p)


# -- rendering ---------------------------------------------------------------------


def render(x) -> str:
    from co2.system import System

    if isinstance(x, Contract):
        return render_contract(x)
    if isinstance(x, BilateralContract):
        return render_bilateral(x)
    if isinstance(x, Formula):
        return render_formula(x)
    if isinstance(x, Process):
        return render_process(x)
    if isinstance(x, System):
        return render_system(x)
    if isinstance(x, RawSystem):
        return render_raw_system(x)
    if isinstance(x, Atom):
        return str(x)
    raise TypeError(f"cannot render {x!r}")


def render_contract(c: Contract, names=()) -> str:
    if c == E:
        return "E"
    match c:
        case Nil():
            return "0"
        case RecVar(i):
            return names[len(names) - 1 - i]
        case Rec(body, hint):
            name = hint
            while name in names or name in ("E", "e"):
                name += "'"
            return f"rec {name} . {render_contract(body, names + (name,))}"
        case Ready(a, body):
            return f"ready {a} . {render_contract(body, names)}"
        case IntSum(branches):
            return " (+) ".join(_render_branch(a, k, ";", names) for a, k in branches)
        case ExtSum(branches):
            if len(branches) == 1 and branches[0][1] == E:
                return f"{branches[0][0]}.E"
            return " + ".join(_render_branch(a, k, ".", names) for a, k in branches)
    raise TypeError(c)


def _render_branch(a, k, sep, names):
    if k == E:
        return str(a)
    return f"{a}{sep}{' ' if sep == ';' else ''}{_render_cont(k, sep, names)}"


def _render_cont(k, sep, names):
    if k == E:
        return "E"
    match k:
        case Nil():
            return "0"
        case RecVar(i):
            return names[len(names) - 1 - i]
        case IntSum(((a, k2),)) if sep == ";":
            return _render_branch(a, k2, sep, names)
        case ExtSum(((a, k2),)) if sep == ".":
            return _render_branch(a, k2, sep, names)
    return f"({render_contract(k, names)})"


def render_bilateral(g: BilateralContract) -> str:
    return (
        f"{g.left.participant} says {render_contract(g.left.contract)} | "
        f"{g.right.participant} says {render_contract(g.right.contract)}"
    )


_PREC = {LImplies: 1, LOr: 2, LAnd: 3, LUntil: 4}


def render_formula(f: Formula, ctx=0) -> str:
    match f:
        case LTrue():
            return "true"
        case LAtom(a):
            return str(a)
        case LNot(a):
            return "!" + render_formula(a, 5)
        case LNext(a):
            return "X " + render_formula(a, 5)
        case LAlways(a):
            return "[] " + render_formula(a, 5)
        case LEventually(a):
            return "<> " + render_formula(a, 5)
    prec = _PREC[type(f)]
    op = {LImplies: "->", LOr: "|", LAnd: "&", LUntil: "U"}[type(f)]
    right_assoc = type(f) in (LImplies, LUntil)
    lp = prec + 1 if right_assoc else prec
    rp = prec if right_assoc else prec + 1
    s = f"{render_formula(f.left, lp)} {op} {render_formula(f.right, rp)}"
    return f"({s})" if prec < ctx else s


def render_prefix(pi) -> str:
    match pi:
        case Tau():
            return "tau"
        case Tell(to, x, c):
            return f"tell {to} {{{x}}} ({render_contract(c)})"
        case Fuse(x):
            return f"fuse {x}"
        case Do(x, a):
            return f"do {x} {a}"
        case Ask(x, f):
            return f"ask {x} {render_formula(f, 5)}"
    raise TypeError(pi)


def render_process(p: Process) -> str:
    match p:
        case Latent(x, owner, c):
            return f"{{{x}}} {owner} says {render_contract(c)}"
        case Sum(()):
            return "0"
        case Sum(branches):
            return " + ".join(_render_pbranch(b) for b in branches)
        case Par(()):
            return "0"
        case Par(items):
            return " | ".join(_par_item(q) for q in items)
        case Delim():
            binders = []
            while isinstance(p, Delim):
                binders.append(str(p.ident))
                p = p.body
            body = render_process(p)
            if isinstance(p, (Par, Sum)) and not _is_chain(p):
                body = f"({body})"
            return f"({', '.join(binders)}) {body}"
        case Call(name, args):
            return f"{name}({', '.join(map(str, args))})" if args else name
    raise TypeError(p)


def _is_chain(p):
    return isinstance(p, Sum) and len(p.branches) == 1


def _par_item(q):
    s = render_process(q)
    return f"({s})" if isinstance(q, Delim) else s


def _render_pbranch(b: Branch) -> str:
    head = render_prefix(b.prefix)
    k = b.cont
    if k == NIL_P:
        return head
    if isinstance(k, Sum) and len(k.branches) == 1:
        return f"{head} . {_render_pbranch(k.branches[0])}"
    if isinstance(k, Call):
        return f"{head} . {render_process(k)}"
    return f"{head} . ({render_process(k)})"


def render_system(s) -> str:
    items = [f"{n}[{render_bilateral(g)}]" for n, g in s.sessions]
    for a, ts in s.boxes:
        inner = " | ".join(_par_item(t) for t in ts) if ts else "0"
        items.append(f"{a}[{inner}]")
    body = " | ".join(items) if items else "0"
    if s.restricted:
        return f"({', '.join(map(str, s.restricted))}) ({body})"
    return body


def render_raw_system(s: RawSystem) -> str:
    match s:
        case SysBox(a, p):
            return f"{a}[{render_process(p)}]"
        case SysSession(n, g):
            return f"{n}[{render_bilateral(g)}]"
        case SysPar(items):
            return " | ".join(
                f"({render_raw_system(q)})" if isinstance(q, SysDelim) else render_raw_system(q) for q in items
            )
        case SysDelim(u, body):
            return f"({u}) ({render_raw_system(body)})"
        case SysNil():
            return "0"
    raise TypeError(s)


def render_file(src: SourceFile) -> str:
    lines = [f"contract {n} := {render_contract(c)}" for n, c in src.contracts.items()]
    for d in src.definitions.values():
        params = f"({', '.join(map(str, d.params))})" if d.params else ""
        lines.append(f"{d.name}{params} := {render_process(d.body)}")
    if src.system is not None:
        lines.append(render_raw_system(src.system))
    return "\n".join(lines) + "\n"
