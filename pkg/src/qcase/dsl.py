"""Textual case format: lexer, recursive-descent parser, canonical serializer.

Grammar (`#` starts a comment to end of line; whitespace is insignificant):

    file      := case
    case      := "case" STRING "{" body* "}"
    body      := target | scope | testing | detection | labels | assume
               | "mission_time" "=" NUMBER
    target    := "target" "{" kv* "}"            keys: p_target, confidence
    scope     := "scope" "{" (kv | profile)* "}" keys: p_oos, source
    profile   := "profile" "{" (NUMBER "->" NUMBER)+ "}"
    testing   := "testing" "{" kv* "}"           keys: samples, failures
    detection := "detection" ("srf"|"oos") "{" (kv | observed)* "}"
                                                 keys: p_detect, source
    observed  := "observed" "=" INTEGER "of" INTEGER
    labels    := "labels" "{" (kv | audit)* "}"  keys: rate
    audit     := "audit" "=" INTEGER "of" INTEGER
    assume    := "assume" STRING
    kv        := IDENT "=" (NUMBER | INTEGER | source_val)
    source_val:= ("expert" | "data") STRING

Strings are double-quoted, single-line, with backslash escapes for `"`
and `\\`. Numbers accept decimal and scientific notation. Keys within a
block are order-insensitive; duplicate keys and duplicate blocks are
errors. Parsing never raises anything but CaseSyntaxError, regardless of
input.

The serializer emits one canonical form: fixed block order (target,
mission_time, scope, testing, detection srf, detection oos, labels,
assume lines), two-space indentation, shortest round-trip number
rendering. `parse(serialize(b))` reproduces `b` exactly and serializing
again yields identical text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .evidence import (
    CaseBundle,
    DetectionEvidence,
    DetectionKind,
    LabelQuality,
    Provenance,
    SafetyTarget,
    ScopeEvidence,
    SemanticError,
    TestEvidence,
    validate_bundle,
)

__all__ = [
    "TokenKind",
    "Token",
    "ParseError",
    "CaseSyntaxError",
    "tokenize",
    "parse",
    "serialize",
    "FILE_EXTENSION",
]

FILE_EXTENSION = ".qcase"


class TokenKind(Enum):
    IDENT = "identifier"
    KEYWORD = "keyword"
    NUMBER = "number"
    INTEGER = "integer"
    STRING = "string"
    LBRACE = "'{'"
    RBRACE = "'}'"
    EQUALS = "'='"
    OF = "'of'"
    ARROW = "'->'"
    EOF = "end of input"


_KEYWORDS = frozenset(
    {
        "case",
        "target",
        "scope",
        "testing",
        "detection",
        "labels",
        "assume",
        "profile",
        "observed",
        "audit",
        "expert",
        "data",
    }
)

_BLOCK_KEYWORDS = ("target", "scope", "testing", "detection", "labels", "assume")


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    line: int
    col: int
    value: object = None  # decoded string / parsed number where applicable

    def describe(self) -> str:
        if self.kind in (TokenKind.KEYWORD, TokenKind.IDENT):
            return f"{self.kind.value} '{self.lexeme}'"
        return self.kind.value


@dataclass(frozen=True)
class ParseError:
    line: int
    col: int
    message: str
    expected: tuple[str, ...] = ()
    found: TokenKind | None = None
    code: str | None = None

    def __str__(self) -> str:
        return f"line {self.line}, col {self.col}: {self.message}"


class CaseSyntaxError(ValueError):
    """Parsing failed; carries every collected diagnostic."""

    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in errors) or "parse failed")


def _is_digit(ch: str) -> bool:
    # ASCII only: unicode digit characters are lexical errors
    return "0" <= ch <= "9"


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or "a" <= ch <= "z" or "A" <= ch <= "Z"


def _is_ident_part(ch: str) -> bool:
    return _is_ident_start(ch) or _is_digit(ch)


def tokenize(text: str) -> tuple[list[Token], list[ParseError]]:
    """Lex input into tokens, collecting lexical errors without stopping."""
    tokens: list[Token] = []
    errors: list[ParseError] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def advance(count: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if ch == "{":
            tokens.append(Token(TokenKind.LBRACE, "{", start_line, start_col))
            advance()
            continue
        if ch == "}":
            tokens.append(Token(TokenKind.RBRACE, "}", start_line, start_col))
            advance()
            continue
        if ch == "=":
            tokens.append(Token(TokenKind.EQUALS, "=", start_line, start_col))
            advance()
            continue
        if ch == "-":
            if i + 1 < n and text[i + 1] == ">":
                tokens.append(Token(TokenKind.ARROW, "->", start_line, start_col))
                advance(2)
            else:
                errors.append(
                    ParseError(start_line, start_col, "unexpected character '-'")
                )
                advance()
            continue
        if ch == '"':
            advance()
            parts: list[str] = []
            terminated = False
            while i < n:
                c = text[i]
                if c == '"':
                    advance()
                    terminated = True
                    break
                if c == "\n":
                    break
                if c == "\\":
                    if i + 1 < n and text[i + 1] in ('"', "\\"):
                        parts.append(text[i + 1])
                        advance(2)
                        continue
                    errors.append(
                        ParseError(line, col, "invalid escape sequence in string")
                    )
                    advance()
                    continue
                parts.append(c)
                advance()
            if not terminated:
                errors.append(
                    ParseError(start_line, start_col, "unterminated string literal")
                )
            raw = "".join(parts)
            tokens.append(
                Token(TokenKind.STRING, f'"{raw}"', start_line, start_col, value=raw)
            )
            continue
        if _is_digit(ch):
            j = i
            is_float = False
            while j < n and _is_digit(text[j]):
                j += 1
            if j < n and text[j] == ".":
                is_float = True
                j += 1
                while j < n and _is_digit(text[j]):
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and _is_digit(text[k]):
                    is_float = True
                    j = k
                    while j < n and _is_digit(text[j]):
                        j += 1
            lexeme = text[i:j]
            advance(j - i)
            if is_float:
                tokens.append(
                    Token(TokenKind.NUMBER, lexeme, start_line, start_col, value=float(lexeme))
                )
            else:
                tokens.append(
                    Token(TokenKind.INTEGER, lexeme, start_line, start_col, value=int(lexeme))
                )
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            advance(j - i)
            if word == "of":
                tokens.append(Token(TokenKind.OF, word, start_line, start_col))
            elif word in _KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, word, start_line, start_col))
            else:
                tokens.append(Token(TokenKind.IDENT, word, start_line, start_col))
            continue
        errors.append(
            ParseError(start_line, start_col, f"unexpected character {ch!r}")
        )
        advance()

    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens, errors


class _Panic(Exception):
    def __init__(self, error: ParseError):
        self.error = error


@dataclass
class _Block:
    """Raw parsed content of one block, prior to object construction."""

    name: str
    line: int
    col: int
    keys: dict[str, object] = field(default_factory=dict)
    profile: list[tuple[float, float]] | None = None
    pair: tuple[int, int] | None = None  # observed/audit counts
    source: tuple[Provenance, str] | None = None


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.errors: list[ParseError] = []

    # token plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def fail(self, expected: tuple[str, ...], message: str | None = None) -> _Panic:
        tok = self.peek()
        msg = message or f"expected {' or '.join(expected)}, found {tok.describe()}"
        return _Panic(ParseError(tok.line, tok.col, msg, expected=expected, found=tok.kind))

    def expect(self, kind: TokenKind, lexeme: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind is kind and (lexeme is None or tok.lexeme == lexeme):
            return self.advance()
        want = f"keyword '{lexeme}'" if lexeme else kind.value
        raise self.fail((want,))

    def number(self, what: str) -> float:
        tok = self.peek()
        if tok.kind in (TokenKind.NUMBER, TokenKind.INTEGER):
            self.advance()
            return float(tok.value)
        raise self.fail((f"number for {what}",))

    def integer(self, what: str) -> int:
        tok = self.peek()
        if tok.kind is TokenKind.INTEGER:
            self.advance()
            return int(tok.value)
        raise self.fail((f"integer for {what}",))

    def synchronize(self) -> None:
        """Skip ahead to something that can plausibly start a body item."""
        while True:
            tok = self.peek()
            if tok.kind is TokenKind.EOF:
                return
            if tok.kind is TokenKind.RBRACE:
                return
            if tok.kind is TokenKind.KEYWORD and tok.lexeme in _BLOCK_KEYWORDS:
                return
            self.advance()

    # grammar

    def parse_file(self) -> dict | None:
        try:
            self.expect(TokenKind.KEYWORD, "case")
            ident = self.expect(TokenKind.STRING)
            self.expect(TokenKind.LBRACE)
        except _Panic as p:
            self.errors.append(p.error)
            return None

        blocks: dict[str, _Block] = {}
        assumptions: list[tuple[str, Token]] = []
        mission_time: tuple[float, Token] | None = None

        while True:
            tok = self.peek()
            if tok.kind in (TokenKind.RBRACE, TokenKind.EOF):
                break
            try:
                if tok.kind is TokenKind.KEYWORD and tok.lexeme == "assume":
                    self.advance()
                    s = self.expect(TokenKind.STRING)
                    assumptions.append((s.value, s))
                elif tok.kind is TokenKind.KEYWORD and tok.lexeme in _BLOCK_KEYWORDS:
                    block = self.parse_block()
                    if block.name in blocks:
                        self.errors.append(
                            ParseError(
                                block.line,
                                block.col,
                                f"duplicate block '{block.name}'",
                                code="E_DUPLICATE_BLOCK",
                            )
                        )
                    else:
                        blocks[block.name] = block
                elif tok.kind is TokenKind.IDENT and tok.lexeme == "mission_time":
                    self.advance()
                    self.expect(TokenKind.EQUALS)
                    value = self.number("mission_time")
                    if mission_time is not None:
                        self.errors.append(
                            ParseError(
                                tok.line, tok.col, "duplicate key 'mission_time'",
                                code="E_DUPLICATE_KEY",
                            )
                        )
                    else:
                        mission_time = (value, tok)
                else:
                    raise self.fail(
                        tuple(f"'{k}'" for k in _BLOCK_KEYWORDS) + ("'}'",),
                        f"expected a block or assumption, found {tok.describe()}",
                    )
            except _Panic as p:
                self.errors.append(p.error)
                self.synchronize()

        try:
            self.expect(TokenKind.RBRACE)
            self.expect(TokenKind.EOF)
        except _Panic as p:
            self.errors.append(p.error)

        return {
            "id": ident.value,
            "id_token": ident,
            "blocks": blocks,
            "assumptions": assumptions,
            "mission_time": mission_time,
        }

    def parse_block(self) -> _Block:
        head = self.advance()  # the block keyword
        name = head.lexeme
        if name == "detection":
            sub = self.peek()
            if sub.kind is TokenKind.IDENT and sub.lexeme in ("srf", "oos"):
                self.advance()
                name = f"detection {sub.lexeme}"
            else:
                raise self.fail(("'srf'", "'oos'"))
        block = _Block(name=name, line=head.line, col=head.col)
        self.expect(TokenKind.LBRACE)
        while True:
            tok = self.peek()
            if tok.kind in (TokenKind.RBRACE, TokenKind.EOF):
                break
            if tok.kind is TokenKind.KEYWORD and tok.lexeme == "profile" and name == "scope":
                self.parse_profile(block)
            elif (
                tok.kind is TokenKind.KEYWORD
                and tok.lexeme == "observed"
                and name.startswith("detection")
            ):
                self.parse_count_pair(block, "observed")
            elif tok.kind is TokenKind.KEYWORD and tok.lexeme == "audit" and name == "labels":
                self.parse_count_pair(block, "audit")
            elif tok.kind is TokenKind.IDENT:
                self.parse_kv(block)
            else:
                raise self.fail(("a key", "'}'"))
        self.expect(TokenKind.RBRACE)
        return block

    def parse_profile(self, block: _Block) -> None:
        head = self.advance()
        if block.profile is not None:
            self.errors.append(
                ParseError(head.line, head.col, "duplicate profile", code="E_DUPLICATE_KEY")
            )
        self.expect(TokenKind.LBRACE)
        entries: list[tuple[float, float]] = []
        while self.peek().kind in (TokenKind.NUMBER, TokenKind.INTEGER):
            t = self.number("profile time")
            self.expect(TokenKind.ARROW)
            p = self.number("profile probability")
            entries.append((t, p))
        if not entries:
            raise self.fail(("at least one 'time -> probability' entry",))
        self.expect(TokenKind.RBRACE)
        if block.profile is None:
            block.profile = entries

    def parse_count_pair(self, block: _Block, key: str) -> None:
        head = self.advance()
        self.expect(TokenKind.EQUALS)
        first = self.integer(key)
        self.expect(TokenKind.OF)
        second = self.integer(key)
        if block.pair is not None:
            self.errors.append(
                ParseError(head.line, head.col, f"duplicate key '{key}'", code="E_DUPLICATE_KEY")
            )
        else:
            block.pair = (first, second)

    _KEY_TYPES = {
        "target": {"p_target": "number", "confidence": "number"},
        "scope": {"p_oos": "number", "source": "source"},
        "testing": {"samples": "integer", "failures": "integer"},
        "detection srf": {"p_detect": "number", "source": "source"},
        "detection oos": {"p_detect": "number", "source": "source"},
        "labels": {"rate": "number"},
    }

    def parse_kv(self, block: _Block) -> None:
        key_tok = self.advance()
        key = key_tok.lexeme
        self.expect(TokenKind.EQUALS)
        allowed = self._KEY_TYPES.get(block.name, {})
        kind = allowed.get(key)
        if kind is None:
            # consume a value to stay synchronized, then report
            tok = self.peek()
            if tok.kind in (TokenKind.NUMBER, TokenKind.INTEGER, TokenKind.STRING):
                self.advance()
            elif tok.kind is TokenKind.KEYWORD and tok.lexeme in ("expert", "data"):
                self.advance()
                if self.peek().kind is TokenKind.STRING:
                    self.advance()
            self.errors.append(
                ParseError(
                    key_tok.line,
                    key_tok.col,
                    f"unknown key '{key}' in block '{block.name}'",
                    code="E_UNKNOWN_KEY",
                )
            )
            return
        if kind == "number":
            value: object = self.number(key)
        elif kind == "integer":
            value = self.integer(key)
        else:
            tok = self.peek()
            if not (tok.kind is TokenKind.KEYWORD and tok.lexeme in ("expert", "data")):
                raise self.fail(("'expert'", "'data'"))
            self.advance()
            text = self.expect(TokenKind.STRING)
            value = (Provenance.EXPERT if tok.lexeme == "expert" else Provenance.DATA, text.value)
        if key == "source":
            if block.source is not None:
                self.errors.append(
                    ParseError(
                        key_tok.line, key_tok.col, "duplicate key 'source'",
                        code="E_DUPLICATE_KEY",
                    )
                )
            else:
                block.source = value
            return
        if key in block.keys:
            self.errors.append(
                ParseError(
                    key_tok.line, key_tok.col, f"duplicate key '{key}'",
                    code="E_DUPLICATE_KEY",
                )
            )
        else:
            block.keys[key] = value


# default provenance per evidence form; omitted from canonical output
_DEFAULT_PROVENANCE = {
    "scope point": Provenance.EXPERT,
    "scope profile": Provenance.DATA,
    "detection point": Provenance.EXPERT,
    "detection campaign": Provenance.DATA,
}


def _build_bundle(parsed: dict, errors: list[ParseError]) -> CaseBundle | None:
    blocks: dict[str, _Block] = parsed["blocks"]
    id_token: Token = parsed["id_token"]

    def block_error(block: _Block, message: str, code: str) -> None:
        errors.append(ParseError(block.line, block.col, message, code=code))

    target = None
    tb = blocks.get("target")
    if tb is None:
        errors.append(
            ParseError(
                id_token.line, id_token.col, "missing 'target' block", code="E_MISSING_BLOCK"
            )
        )
    else:
        missing = [k for k in ("p_target", "confidence") if k not in tb.keys]
        if missing:
            block_error(tb, f"target block is missing {', '.join(missing)}", "E_MISSING_KEY")
        else:
            try:
                target = SafetyTarget(p_target=tb.keys["p_target"], cl=tb.keys["confidence"])
            except ValueError as exc:
                block_error(tb, str(exc), "E_PROB_RANGE")

    test = None
    xb = blocks.get("testing")
    if xb is None:
        errors.append(
            ParseError(
                id_token.line, id_token.col, "missing 'testing' block", code="E_MISSING_BLOCK"
            )
        )
    else:
        missing = [k for k in ("samples", "failures") if k not in xb.keys]
        if missing:
            block_error(xb, f"testing block is missing {', '.join(missing)}", "E_MISSING_KEY")
        else:
            try:
                test = TestEvidence(samples=xb.keys["samples"], failures=xb.keys["failures"])
            except ValueError as exc:
                block_error(xb, str(exc), "E_COUNT_RANGE")

    scope = None
    sb = blocks.get("scope")
    if sb is not None:
        has_point = "p_oos" in sb.keys
        has_profile = sb.profile is not None
        if has_point and has_profile:
            block_error(sb, "scope declares both p_oos and a profile", "E_FORM_CONFLICT")
        elif not has_point and not has_profile:
            block_error(sb, "scope needs p_oos or a profile", "E_MISSING_KEY")
        else:
            form = "scope point" if has_point else "scope profile"
            prov, just = sb.source or (_DEFAULT_PROVENANCE[form], "")
            try:
                scope = ScopeEvidence(
                    point=sb.keys.get("p_oos"),
                    profile=tuple(sb.profile) if has_profile else None,
                    provenance=prov,
                    justification=just,
                )
            except ValueError as exc:
                block_error(sb, str(exc), "E_PROB_RANGE")

    detections: dict[str, DetectionEvidence | None] = {"srf": None, "oos": None}
    for sub in ("srf", "oos"):
        db = blocks.get(f"detection {sub}")
        if db is None:
            continue
        has_point = "p_detect" in db.keys
        has_pair = db.pair is not None
        if has_point and has_pair:
            block_error(db, "detection declares both p_detect and observed", "E_FORM_CONFLICT")
            continue
        if not has_point and not has_pair:
            block_error(db, "detection needs p_detect or observed", "E_MISSING_KEY")
            continue
        form = "detection point" if has_point else "detection campaign"
        prov, just = db.source or (_DEFAULT_PROVENANCE[form], "")
        try:
            detections[sub] = DetectionEvidence(
                kind=DetectionKind.SRF if sub == "srf" else DetectionKind.OOS,
                point=db.keys.get("p_detect"),
                campaign=db.pair,
                provenance=prov,
                justification=just,
            )
        except ValueError as exc:
            block_error(db, str(exc), "E_OOS_CAMPAIGN" if has_pair else "E_PROB_RANGE")

    labels = None
    lb = blocks.get("labels")
    if lb is not None:
        has_rate = "rate" in lb.keys
        has_audit = lb.pair is not None
        if has_rate and has_audit:
            block_error(lb, "labels declare both rate and audit", "E_FORM_CONFLICT")
        elif not has_rate and not has_audit:
            block_error(lb, "labels need rate or audit", "E_MISSING_KEY")
        else:
            try:
                labels = LabelQuality(rate=lb.keys.get("rate"), audit=lb.pair)
            except ValueError as exc:
                block_error(lb, str(exc), "E_PROB_RANGE")

    if errors or target is None or test is None:
        return None

    mission_time = parsed["mission_time"][0] if parsed["mission_time"] else None
    return CaseBundle(
        id=parsed["id"],
        target=target,
        test=test,
        scope=scope,
        detect_srf=detections["srf"],
        detect_oos=detections["oos"],
        labels=labels,
        assumptions=tuple(a for a, _ in parsed["assumptions"]),
        mission_time=mission_time,
    )


_SEMANTIC_WHERE_TO_BLOCK = {
    "target": "target",
    "testing": "testing",
    "scope": "scope",
    "scope.profile": "scope",
    "detection srf": "detection srf",
    "detection oos": "detection oos",
    "labels": "labels",
}


def _semantic_to_parse_errors(
    problems: list[SemanticError], blocks: dict[str, _Block], id_token: Token
) -> list[ParseError]:
    out = []
    for problem in problems:
        block = blocks.get(_SEMANTIC_WHERE_TO_BLOCK.get(problem.where, ""))
        line, col = (block.line, block.col) if block else (id_token.line, id_token.col)
        out.append(
            ParseError(line, col, f"{problem.code}: {problem.message}", code=problem.code)
        )
    return out


def parse(text: str, validate: bool = True) -> CaseBundle:
    """Parse case text into a bundle.

    With validate=True (the default) the returned bundle has already
    passed validate_bundle; semantic problems are reported as
    CaseSyntaxError entries positioned at the offending block. Raises
    CaseSyntaxError carrying every collected diagnostic on any failure.
    """
    tokens, errors = tokenize(text)
    parser = _Parser(tokens)
    parsed = parser.parse_file()
    errors.extend(parser.errors)
    if parsed is None:
        raise CaseSyntaxError(errors)
    bundle = _build_bundle(parsed, errors)
    if bundle is None or errors:
        raise CaseSyntaxError(errors)
    if validate:
        problems = validate_bundle(bundle)
        if problems:
            raise CaseSyntaxError(
                _semantic_to_parse_errors(problems, parsed["blocks"], parsed["id_token"])
            )
    return bundle


def _quote(value: str) -> str:
    if "\n" in value or "\r" in value:
        raise ValueError("case-format strings cannot contain newlines")
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _num(value: float) -> str:
    return repr(float(value))


def _source_lines(
    out: list[str],
    provenance: Provenance,
    justification: str,
    form: str,
) -> None:
    if provenance is _DEFAULT_PROVENANCE[form] and justification == "":
        return
    out.append(f"    source = {provenance.value} {_quote(justification)}")


def serialize(bundle: CaseBundle) -> str:
    """Render a bundle in the canonical interchange form."""
    out = [f"case {_quote(bundle.id)} {{"]
    out.append("  target {")
    out.append(f"    p_target = {_num(bundle.target.p_target)}")
    out.append(f"    confidence = {_num(bundle.target.cl)}")
    out.append("  }")
    if bundle.mission_time is not None:
        out.append(f"  mission_time = {_num(bundle.mission_time)}")
    if bundle.scope is not None:
        sc = bundle.scope
        out.append("  scope {")
        if sc.point is not None:
            out.append(f"    p_oos = {_num(sc.point)}")
            _source_lines(out, sc.provenance, sc.justification, "scope point")
        else:
            out.append("    profile {")
            for t, p in sc.profile:
                out.append(f"      {_num(t)} -> {_num(p)}")
            out.append("    }")
            _source_lines(out, sc.provenance, sc.justification, "scope profile")
        out.append("  }")
    out.append("  testing {")
    out.append(f"    samples = {bundle.test.samples}")
    out.append(f"    failures = {bundle.test.failures}")
    out.append("  }")
    for sub, det in (("srf", bundle.detect_srf), ("oos", bundle.detect_oos)):
        if det is None:
            continue
        out.append(f"  detection {sub} {{")
        if det.campaign is not None:
            d, t = det.campaign
            out.append(f"    observed = {d} of {t}")
            _source_lines(out, det.provenance, det.justification, "detection campaign")
        else:
            out.append(f"    p_detect = {_num(det.point)}")
            _source_lines(out, det.provenance, det.justification, "detection point")
        out.append("  }")
    if bundle.labels is not None:
        out.append("  labels {")
        if bundle.labels.rate is not None:
            out.append(f"    rate = {_num(bundle.labels.rate)}")
        else:
            d, a = bundle.labels.audit
            out.append(f"    audit = {d} of {a}")
        out.append("  }")
    for assumption in bundle.assumptions:
        out.append(f"  assume {_quote(assumption)}")
    out.append("}")
    return "\n".join(out) + "\n"
