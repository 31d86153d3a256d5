"""Declarative threshold trees over per-frame features.

A classifier is plain data: named constants plus a binary decision tree whose
guards are small arithmetic/boolean expressions. Configs round-trip through
an s-expression text format (see ``docs/config_format.md``)::

    (config cutie
      (windows 1 5)
      (const ratio_gate 1.07 published)
      (tree
        (if (> lt1_ratio ratio_gate)
          (interjection ratio)
          (clean ratio))))
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

from .embed_io import FrameEmbedding
from .errors import ConfigInvalid, InvalidFeature, LengthMismatch, TooShort, UnknownPreset
from .features import FEATURE_NAMES, FrameFeatures, StreamFeaturizer, mdrt

COMPARISONS = {">": lambda a, b: a > b, "<": lambda a, b: a < b,
               ">=": lambda a, b: a >= b, "<=": lambda a, b: a <= b}
_ARITY = {">": 2, "<": 2, ">=": 2, "<=": 2, "/": 2, "exp": 1, "mdrt": 1, "not": 1}
_VARIADIC = {"+", "*", "-", "and", "or"}
OPERATORS = frozenset(_ARITY) | _VARIADIC
CONSTANT_SOURCES = ("published", "free", "fixed")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ConfigInvalid(f"unknown operator {self.op!r}")
        n = _ARITY.get(self.op)
        if n is not None and len(self.args) != n:
            raise ConfigInvalid(f"{self.op} takes {n} argument(s), got {len(self.args)}")
        if n is None and len(self.args) < (1 if self.op == "-" else 2):
            raise ConfigInvalid(f"{self.op} needs more arguments")


Expr = Union[Num, Name, Op]


@dataclass(frozen=True)
class Leaf:
    is_interjection: bool
    rule: str


@dataclass(frozen=True)
class Branch:
    guard: Expr
    on_true: "Node"
    on_false: "Node"


Node = Union[Leaf, Branch]


@dataclass(frozen=True)
class Constant:
    value: float
    source: str = "fixed"


@dataclass(frozen=True)
class ClassifierConfig:
    name: str
    tree: Node
    constants: dict = field(default_factory=dict)
    warmup_frames: int = 0
    short_window: int = 1
    long_window: int = 5
    exclude_flagged: bool = True
    freeze_mdr: bool = False
    variance_floor: float = 1e-6

    def __post_init__(self):
        validate(self)

    def constant_values(self) -> dict[str, float]:
        return {k: c.value for k, c in self.constants.items()}

    def free_constants(self) -> list[str]:
        return [k for k, c in self.constants.items() if c.source == "free"]

    def with_constants(self, values: dict[str, float], source: str | None = None) -> "ClassifierConfig":
        constants = dict(self.constants)
        for k, v in values.items():
            if k not in constants:
                raise ConfigInvalid(f"unknown constant {k!r}")
            constants[k] = Constant(float(v), source or constants[k].source)
        return replace(self, constants=constants)


@dataclass(frozen=True)
class Verdict:
    frame_index: int
    is_interjection: bool
    fired_rule: str


# -- evaluation -------------------------------------------------------------

def _names(expr) -> set[str]:
    if isinstance(expr, Name):
        return {expr.name}
    if isinstance(expr, Op):
        return set().union(*(_names(a) for a in expr.args))
    return set()


def _walk(node):
    yield node
    if isinstance(node, Branch):
        yield from _walk(node.on_true)
        yield from _walk(node.on_false)


def validate(config: ClassifierConfig) -> None:
    if config.warmup_frames < 0:
        raise ConfigInvalid("warmup must be >= 0")
    if config.short_window < 1 or config.long_window < 1:
        raise ConfigInvalid("windows must be >= 1")
    if not config.variance_floor > 0:
        raise ConfigInvalid("variance floor must be > 0")
    for key, const in config.constants.items():
        if key in FEATURE_NAMES or key in OPERATORS:
            raise ConfigInvalid(f"constant {key!r} shadows a feature or operator")
        if const.source not in CONSTANT_SOURCES:
            raise ConfigInvalid(f"constant {key!r} has unknown source {const.source!r}")
        if not math.isfinite(const.value):
            raise ConfigInvalid(f"constant {key!r} is not finite")
    known = set(FEATURE_NAMES) | set(config.constants)
    for node in _walk(config.tree):
        if isinstance(node, Branch):
            unknown = _names(node.guard) - known
            if unknown:
                raise ConfigInvalid(f"unknown names in guard: {sorted(unknown)}")
        elif not isinstance(node, Leaf):
            raise ConfigInvalid(f"bad tree node {node!r}")


def eval_expr(expr: Expr, features: FrameFeatures, constants: dict | None = None, lenient: bool = False):
    """Evaluate ``expr`` against one frame's features.

    Referencing a feature that is not yet valid raises :class:`InvalidFeature`.
    With ``lenient`` set, a comparison touching such a feature is false
    instead, which is how trees refuse to fire during warm-up.
    """
    constants = constants or {}

    def ev(e):
        if isinstance(e, Num):
            return e.value
        if isinstance(e, Name):
            if e.name in constants:
                value = constants[e.name]
                return value.value if isinstance(value, Constant) else value
            return features.get(e.name)
        op, args = e.op, e.args
        if op in COMPARISONS:
            try:
                return COMPARISONS[op](ev(args[0]), ev(args[1]))
            except InvalidFeature:
                if lenient:
                    return False
                raise
        if op == "and":
            return all(ev(a) for a in args)
        if op == "or":
            return any(ev(a) for a in args)
        if op == "not":
            return not ev(args[0])
        if op == "+":
            return math.fsum(ev(a) for a in args)
        if op == "*":
            return math.prod(ev(a) for a in args)
        if op == "-":
            if len(args) == 1:
                return -ev(args[0])
            first = ev(args[0])
            return first - math.fsum(ev(a) for a in args[1:])
        if op == "/":
            return ev(args[0]) / ev(args[1])
        if op == "exp":
            return math.exp(ev(args[0]))
        if op == "mdrt":
            return mdrt(ev(args[0]))
        raise ConfigInvalid(f"unknown operator {op!r}")

    return ev(expr)


def decision_path(config: ClassifierConfig, features: FrameFeatures) -> tuple[Leaf, list[tuple[Branch, bool]]]:
    """Walk the tree for one frame; returns the leaf and every guard taken with its outcome."""
    constants = config.constant_values()
    node, path = config.tree, []
    while isinstance(node, Branch):
        taken = eval_expr(node.guard, features, constants, lenient=True)
        path.append((node, taken))
        node = node.on_true if taken else node.on_false
    return node, path


def decide(config: ClassifierConfig, features: FrameFeatures) -> tuple[Leaf, Branch | None]:
    """Walk the tree for one frame; returns the leaf and the last guard evaluated."""
    leaf, path = decision_path(config, features)
    return leaf, path[-1][0] if path else None


def classify_stream(frames: Sequence[FrameEmbedding], config: ClassifierConfig,
                    cache: dict | None = None) -> list[Verdict]:
    verdicts, _ = classify_with_features(frames, config, cache)
    return verdicts


def classify_with_features(frames: Sequence[FrameEmbedding], config: ClassifierConfig,
                           cache: dict | None = None) -> tuple[list[Verdict], list[FrameFeatures]]:
    """Classify frames ``1..n-1`` in order, feeding each verdict back into the features."""
    if len(frames) < 2:
        raise TooShort("need at least 2 frames")
    if not isinstance(config, ClassifierConfig):
        raise ConfigInvalid("expected a ClassifierConfig")
    fz = StreamFeaturizer(config.short_window, config.long_window, config.variance_floor,
                          exclude_flagged=config.exclude_flagged, freeze_mdr=config.freeze_mdr, cache=cache)
    fz.push(frames[0])
    verdicts, features = [], []
    for frame in frames[1:]:
        feats = fz.push(frame)
        if feats.frame_index <= config.warmup_frames:
            leaf = Leaf(False, "warmup")
        else:
            leaf, _ = decide(config, feats)
        fz.commit(leaf.is_interjection)
        verdicts.append(Verdict(feats.frame_index, leaf.is_interjection, leaf.rule))
        features.append(feats)
    return verdicts, features


# -- text format ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|([^\s();]+))")


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigInvalid(f"cannot tokenize at offset {pos}")
        pos = m.end()
        if m.group(1):
            continue
        tokens.append(m.group(2) or m.group(3) or m.group(4))
    return tokens


def _read_sexpr(tokens: list[str]):
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ConfigInvalid("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ConfigInvalid("unbalanced '('")
    return stack[0]


def _number(tok: str):
    try:
        value = float(tok)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _expr_from(s) -> Expr:
    if isinstance(s, str):
        value = _number(s)
        return Num(value) if value is not None else Name(s)
    if not s or not isinstance(s[0], str):
        raise ConfigInvalid(f"malformed expression {s!r}")
    return Op(s[0], tuple(_expr_from(a) for a in s[1:]))


def _node_from(s) -> Node:
    if not isinstance(s, list) or not s:
        raise ConfigInvalid(f"malformed tree node {s!r}")
    head = s[0]
    if head in ("interjection", "clean"):
        if len(s) != 2 or not isinstance(s[1], str):
            raise ConfigInvalid(f"leaf needs exactly one rule id: {s!r}")
        return Leaf(head == "interjection", s[1])
    if head == "if":
        if len(s) != 4:
            raise ConfigInvalid("(if guard on-true on-false) takes three parts")
        return Branch(_expr_from(s[1]), _node_from(s[2]), _node_from(s[3]))
    raise ConfigInvalid(f"unknown tree node {head!r}")


def _bool(tok: str) -> bool:
    if tok not in ("true", "false"):
        raise ConfigInvalid(f"expected true/false, got {tok!r}")
    return tok == "true"


def parse_config(text: str) -> ClassifierConfig:
    forms = _read_sexpr(_tokenize(text))
    if len(forms) != 1 or not isinstance(forms[0], list) or forms[0][:1] != ["config"] or len(forms[0]) < 2:
        raise ConfigInvalid("expected a single (config NAME ...) form")
    form = forms[0]
    kwargs: dict = {"name": form[1], "constants": {}}
    tree = None
    try:
        for item in form[2:]:
            key = item[0]
            if key == "windows":
                kwargs["short_window"], kwargs["long_window"] = int(item[1]), int(item[2])
            elif key == "warmup":
                kwargs["warmup_frames"] = int(item[1])
            elif key == "variance-floor":
                kwargs["variance_floor"] = float(item[1])
            elif key == "exclude-flagged":
                kwargs["exclude_flagged"] = _bool(item[1])
            elif key == "freeze-mdr":
                kwargs["freeze_mdr"] = _bool(item[1])
            elif key == "const":
                source = item[3] if len(item) > 3 else "fixed"
                kwargs["constants"][item[1]] = Constant(float(item[2]), source)
            elif key == "tree":
                tree = _node_from(item[1])
            else:
                raise ConfigInvalid(f"unknown config entry {key!r}")
    except (IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(f"malformed config entry: {exc}") from exc
    if tree is None:
        raise ConfigInvalid("config has no (tree ...)")
    return ClassifierConfig(tree=tree, **kwargs)


def load_config(path) -> ClassifierConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Name):
        return expr.name
    return "(" + " ".join([expr.op] + [format_expr(a) for a in expr.args]) + ")"


def _format_node(node: Node, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(node, Leaf):
        return [f"{pad}({'interjection' if node.is_interjection else 'clean'} {node.rule})"]
    lines = [f"{pad}(if {format_expr(node.guard)}"]
    lines += _format_node(node.on_true, indent + 1)
    lines += _format_node(node.on_false, indent + 1)
    lines[-1] += ")"
    return lines


def format_config(config: ClassifierConfig) -> str:
    lines = [f"(config {config.name}",
             f"  (windows {config.short_window} {config.long_window})",
             f"  (warmup {config.warmup_frames})",
             f"  (variance-floor {config.variance_floor!r})",
             f"  (exclude-flagged {'true' if config.exclude_flagged else 'false'})",
             f"  (freeze-mdr {'true' if config.freeze_mdr else 'false'})"]
    for key, const in config.constants.items():
        note = {"published": "published value", "free": "calibrated", "fixed": "fixed"}[const.source]
        lines.append(f"  (const {key} {const.value!r} {const.source})  ; {note}")
    tree = _format_node(config.tree, 2)
    lines.append("  (tree")
    lines += tree
    lines[-1] += "))"
    return "\n".join(lines) + "\n"


def save_config(path, config: ClassifierConfig) -> None:
    with open(path, "w") as fh:
        fh.write(format_config(config))


# -- verdict log ------------------------------------------------------------

def write_verdicts(path, verdicts: Sequence[Verdict]) -> None:
    with open(path, "w") as fh:
        for v in verdicts:
            fh.write(f"{v.frame_index} {'I' if v.is_interjection else 'N'} {v.fired_rule}\n")


def read_verdicts(path) -> list[Verdict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3 or parts[1] not in ("I", "N"):
                raise ConfigInvalid(f"{path}:{lineno}: malformed verdict line")
            out.append(Verdict(int(parts[0]), parts[1] == "I", parts[2]))
    return out


def verdict_flags(verdicts: Sequence[Verdict], n_frames: int) -> list[bool]:
    """Per-frame interjection flags including frame 0, which is never flagged."""
    if len(verdicts) != n_frames - 1:
        raise LengthMismatch(f"{len(verdicts)} verdicts for {n_frames} frames")
    return [False] + [v.is_interjection for v in verdicts]


# -- presets ----------------------------------------------------------------

# Only the tree shapes for Cutie and XMem are known, not their thresholds. The
# "free" constants and the variance floors below are placeholders sized for the
# default synthetic corpus (unit drift, dim 256) and are meant to be refit with
# cutguard.calibrate on real embeddings. A floor of 1e-6 lets the 2..4 frame
# warm-up windows produce heavy-tailed distances that swamp the running MDR
# maximum.
CUTIE = """
(config cutie
  (windows 1 5)
  (variance-floor 0.25)
  (const ratio_gate 1.07 published)
  (const st0_gate 100.0 free)
  (tree
    (if (> lt1_ratio ratio_gate)
      (if (> mdr (mdrt run_length))
        (if (> st0 st0_gate)
          (interjection st0_gate)
          (clean st0_gate))
        (clean mdr_gate))
      (clean ratio_gate))))
"""

XMEM = """
(config xmem
  (windows 1 5)
  (variance-floor 0.25)
  (const ratio_gate 1.07 published)
  (const st0_gate 100.0 free)
  (const st1_gate 2.0 free)
  (const lt0_gate 80.0 free)
  (tree
    (if (> lt1_ratio ratio_gate)
      (if (> mdr (mdrt run_length))
        (if (> st0 st0_gate)
          (if (> st1_ratio st1_gate)
            (if (> lt0 lt0_gate)
              (interjection lt0_gate)
              (clean lt0_gate))
            (clean st1_gate))
          (clean st0_gate))
        (clean mdr_gate))
      (clean ratio_gate))))
"""

SAM2 = """
(config sam2
  (windows 1 5)
  (const product_gate 287.0 published)
  (const st0_gate 170.0 published)
  (const st1_gate 1.0 published)
  (const mdr_gate 0.97 published)
  (const decay_rate 0.15 published)
  (const decay_center 170.0 published)
  (const decay_offset 1.03 published)
  (tree
    (if (> (* st0 st1_ratio) product_gate)
      (interjection product)
      (if (> st0 st0_gate)
        (interjection st0)
        (if (> st1_ratio st1_gate)
          (interjection st1)
          (if (> mdr_st mdr_gate)
            (interjection mdr)
            (if (> st1_ratio (+ (exp (* (- decay_rate) (- st0 decay_center))) decay_offset))
              (interjection decay)
              (clean decay))))))))
"""

_PRESETS = {"cutie": CUTIE, "xmem": XMEM, "sam2": SAM2}
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> ClassifierConfig:
    try:
        return parse_config(_PRESETS[name])
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(_PRESETS)}") from None
