"""Semantic pass: turn a parsed problem file into checked objects."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .. import anchor as anc
from .. import conslaw as cl
from .. import odeanchor as ode
from ..jetcore import EvolutionaryField, FieldSpec, JetPolynomial
from ..jetcore.gaussian import GaussianRational, I
from ..jetcore.jets import direction
from ..spinor import (
    DOTTED,
    LOWER,
    UNDOTTED,
    UPPER,
    Conj,
    ConstTensor,
    Constant,
    Deriv,
    EpsAtom,
    FieldAtom,
    Index,
    Product,
    Scale,
    SpinorEnv,
    SpinorIndexError,
    Sum,
    Sym,
    TensorAtom,
    UndeclaredSymbolError,
    componentize,
    componentize_multiplet,
    free_indices,
)
from .syntax import (
    BinOp,
    Call,
    ConjExpr,
    DerivExpr,
    Imag,
    Loc,
    MapExpr,
    Neg,
    Number,
    Pow,
    ProblemFile,
    Ref,
    Statement,
    SymExpr,
    TupleExpr,
    print_expr,
)

_PHASE = re.compile(r"y([1-9][0-9]*)$")
_POS = {"^": UPPER, "_": LOWER, None: None}


class SemanticError(Exception):
    def __init__(self, message: str, loc: Loc | None = None):
        where = f"{loc.line}:{loc.col}: " if loc else ""
        super().__init__(where + message)
        self.message = message
        self.loc = loc


@dataclass
class Namespace:
    fields: dict = field(default_factory=dict)
    tensors: dict = field(default_factory=dict)
    objects: dict = field(default_factory=dict)  # name -> (kind, object)

    def declare(self, kind: str, name: str, obj, loc):
        if name in self.objects or name in self.fields or name in self.tensors:
            raise SemanticError(f"{name!r} is already declared", loc)
        if kind == "field":
            self.fields[name] = obj
        elif kind == "tensor":
            self.tensors[name] = obj
        else:
            self.objects[name] = (kind, obj)

    def lookup(self, name: str, kind: str, loc):
        hit = self.objects.get(name)
        if hit is None:
            if name in self.fields or name in self.tensors:
                raise SemanticError(f"{name!r} is not a {kind}", loc)
            raise SemanticError(f"unknown name {name!r}", loc)
        found, obj = hit
        if found != kind:
            raise SemanticError(f"{name!r} is a {found}, expected a {kind}", loc)
        return obj


@dataclass
class TaskSpec:
    name: str
    call: Call
    options: dict
    loc: Loc | None
    args: list = field(default_factory=list)
    deferred_error: Exception | None = None


@dataclass
class LoadedFile:
    namespace: Namespace
    tasks: list


# -- constants and polynomials -------------------------------------------------


def constant_value(e) -> GaussianRational:
    if isinstance(e, Number):
        return GaussianRational(e.value)
    if isinstance(e, Imag):
        return I
    if isinstance(e, Neg):
        return -constant_value(e.arg)
    if isinstance(e, Pow):
        return constant_value(e.base) ** e.exponent
    if isinstance(e, BinOp):
        a, b = constant_value(e.left), constant_value(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if not b:
            raise SemanticError("division by zero", e.loc)
        return a / b
    raise SemanticError(f"expected a numeric constant, got {print_expr(e)}", getattr(e, "loc", None))


def is_constant(e) -> bool:
    if isinstance(e, (Number, Imag)):
        return True
    if isinstance(e, Neg):
        return is_constant(e.arg)
    if isinstance(e, Pow):
        return is_constant(e.base)
    if isinstance(e, BinOp):
        return is_constant(e.left) and is_constant(e.right)
    return False


def rational_value(e) -> Fraction:
    v = constant_value(e)
    if v.im:
        raise SemanticError("expected a real number", getattr(e, "loc", None))
    return v.re


def int_value(e) -> int:
    v = rational_value(e)
    if v.denominator != 1:
        raise SemanticError("expected an integer", getattr(e, "loc", None))
    return int(v)


def phase_polynomial(e) -> JetPolynomial:
    """Polynomial in the phase coordinates ``y1, y2, ...``."""
    if is_constant(e):
        return JetPolynomial.constant(constant_value(e))
    if isinstance(e, Ref) and e.indices is None:
        m = _PHASE.match(e.name)
        if not m:
            raise SemanticError(f"unknown phase coordinate {e.name!r} (use y1, y2, ...)", e.loc)
        return ode.coordinate(int(m.group(1)))
    if isinstance(e, Neg):
        return -phase_polynomial(e.arg)
    if isinstance(e, Pow):
        return phase_polynomial(e.base) ** e.exponent
    if isinstance(e, BinOp):
        a = phase_polynomial(e.left)
        if e.op == "/":
            return a.scale(1 / constant_value(e.right))
        b = phase_polynomial(e.right)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    raise SemanticError(f"not a phase-space polynomial: {print_expr(e)}", getattr(e, "loc", None))


# -- spinor expressions ----------------------------------------------------------


def _index(ix) -> Index:
    return Index(ix.name, _POS[ix.position])


def to_spinor(e, env: SpinorEnv):
    loc = getattr(e, "loc", None)
    if is_constant(e):
        return Constant(constant_value(e))
    if isinstance(e, Ref):
        idx = tuple(_index(x) for x in e.indices or ())
        if e.name in env.fields:
            return FieldAtom(e.name, idx)
        if e.name in env.tensors:
            return TensorAtom(e.name, idx)
        if e.name in ("eps", "epsd"):
            if len(idx) != 2:
                raise SemanticError("epsilon takes two indices", loc)
            kind = UNDOTTED if e.name == "eps" else DOTTED
            pos = {i.position for i in idx}
            if len(pos) != 1:
                raise SemanticError("epsilon indices must share a position", loc)
            return EpsAtom(kind, (Index(idx[0].name), Index(idx[1].name)), pos.pop() or LOWER)
        raise SemanticError(f"unknown name {e.name!r}", loc)
    if isinstance(e, ConjExpr):
        if e.indices is not None:
            if not isinstance(e.arg, Ref) or e.arg.indices is not None or e.arg.name not in env.fields:
                raise SemanticError("conj(...)[indices] needs a bare field name inside", loc)
            return FieldAtom(e.arg.name, tuple(_index(x) for x in e.indices), conj=True)
        return Conj(to_spinor(e.arg, env))
    if isinstance(e, DerivExpr):
        return Deriv(_index(e.undotted), _index(e.dotted), to_spinor(e.arg, env))
    if isinstance(e, SymExpr):
        return Sym(tuple(e.names), to_spinor(e.arg, env))
    if isinstance(e, Neg):
        return Scale(GaussianRational(-1), to_spinor(e.arg, env))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return Constant(GaussianRational(1))
        base = to_spinor(e.base, env)
        return Product((base,) * e.exponent)
    if isinstance(e, BinOp):
        if e.op == "/":
            c = constant_value(e.right)
            if not c:
                raise SemanticError("division by zero", loc)
            return Scale(1 / c, to_spinor(e.left, env))
        a, b = to_spinor(e.left, env), to_spinor(e.right, env)
        if e.op == "+":
            return Sum((a, b))
        if e.op == "-":
            return Sum((a, Scale(GaussianRational(-1), b)))
        if isinstance(a, Constant):
            return Scale(a.value, b)
        if isinstance(b, Constant):
            return Scale(b.value, a)
        return Product((a, b))
    raise SemanticError(f"not a spinor expression: {print_expr(e)}", loc)


def _validated(e, env: SpinorEnv, loc) -> tuple:
    expr = to_spinor(e, env)
    try:
        return expr, free_indices(expr, env)
    except (SpinorIndexError, UndeclaredSymbolError) as err:
        raise SemanticError(str(err).strip("'\""), loc) from None


def _split_names(free: dict, names, loc, where: str) -> tuple[list, list]:
    names = [ix.name for ix in names or ()]
    if set(names) != set(free):
        raise SemanticError(
            f"{where}: declared indices {sorted(names)} differ from the free indices {sorted(free)}", loc
        )
    und = [n for n in names if free[n][0] == UNDOTTED]
    dot = [n for n in names if free[n][0] == DOTTED]
    return und, dot


def _check_kinds(free: dict, und, dot, target: FieldSpec, loc, where: str):
    if len(und) != target.undotted or len(dot) != target.dotted:
        raise SemanticError(
            f"{where} needs {target.undotted} undotted and {target.dotted} dotted indices, "
            f"got {len(und)} and {len(dot)}", loc)
    want_u = UPPER if target.undotted_upper else LOWER
    want_d = UPPER if target.dotted_upper else LOWER
    for n in und:
        if free[n][1] != want_u:
            raise SemanticError(f"{where}: index {n!r} must be {want_u}", loc)
    for n in dot:
        if free[n][1] != want_d:
            raise SemanticError(f"{where}: index {n!r} must be {want_d}", loc)


# -- the loader -------------------------------------------------------------------


class Loader:
    def __init__(self):
        self.ns = Namespace()
        self.tasks: list = []

    def env(self, system: anc.EquationSystem | None = None, with_test: bool = False, loc=None) -> SpinorEnv:
        fields = dict(self.ns.fields)
        if system is not None:
            for spec in system.field_specs:
                declared = fields.get(spec.name)
                if declared is not None and declared != spec:
                    raise SemanticError(
                        f"field {spec.name!r} is declared with a different shape than in system {system.name}", loc)
                fields[spec.name] = spec
            if with_test:
                fields["xi"] = system.test_spec
        return SpinorEnv(fields=fields, tensors=dict(self.ns.tensors))

    def load(self, pf: ProblemFile) -> LoadedFile:
        for st in pf.statements:
            allowed = OPTIONS[st.keyword]
            for key, _ in st.options:
                if key not in allowed:
                    raise SemanticError(f"{st.keyword} {st.name}: unknown option {key!r}", st.loc)
            handler = getattr(self, f"_decl_{st.keyword}")
            try:
                handler(st)
            except SemanticError:
                raise
            except (ValueError, TypeError, KeyError, ArithmeticError) as err:
                raise SemanticError(f"{st.keyword} {st.name}: {err}", st.loc) from None
        return LoadedFile(self.ns, self.tasks)

    def _target_system(self, st: Statement):
        if st.target is None:
            return None
        return self.ns.lookup(st.target, "system", st.loc)

    # declarations

    def _decl_field(self, st: Statement):
        opts = dict(st.options)
        if st.value is not None or st.indices is not None:
            raise SemanticError("field declarations take options only (spin=, real, undotted=, dotted=)", st.loc)
        if "real" in opts:
            spec = FieldSpec(st.name, real=True)
        elif "spin" in opts:
            s = rational_value(opts["spin"])
            if s <= 0 or (2 * s).denominator != 1:
                raise SemanticError("spin must be a positive half-integer", st.loc)
            spec = FieldSpec(st.name, undotted=int(2 * s))
        else:
            u = int_value(opts["undotted"]) if opts.get("undotted") is not None else 0
            d = int_value(opts["dotted"]) if opts.get("dotted") is not None else 0
            spec = FieldSpec(st.name, undotted=u, dotted=d)
        self.ns.declare("field", st.name, spec, st.loc)

    def _decl_tensor(self, st: Statement):
        idx = st.indices or ()
        positions = tuple(_POS[x.position] or LOWER for x in idx)
        v = st.value
        if isinstance(v, Call) and v.name == "vector":
            if len(idx) != 2:
                raise SemanticError("vector(...) defines a bispinor with two indices", st.loc)
            comps = cl.hermitian_bispinor([rational_value(a) for a in v.args])
            kinds = (UNDOTTED, DOTTED)
        elif isinstance(v, MapExpr):
            kinds_opt = st.option("kinds")
            if not isinstance(kinds_opt, Ref) or set(kinds_opt.name) - {"u", "d"} or len(kinds_opt.name) != len(idx):
                raise SemanticError("tensor components need kinds=<u|d letters per index>", st.loc)
            kinds = tuple(UNDOTTED if c == "u" else DOTTED for c in kinds_opt.name)
            comps = {}
            for key, val in v.items:
                kv = key.items if isinstance(key, TupleExpr) else (key,)
                vals = tuple(int_value(k) for k in kv)
                if len(vals) != len(idx) or any(x not in (1, 2) for x in vals):
                    raise SemanticError("tensor component keys must list one value 1 or 2 per index", st.loc)
                comps[vals] = constant_value(val)
        else:
            raise SemanticError("tensor value must be vector(...) or a component map", st.loc)
        self.ns.declare("tensor", st.name, ConstTensor(st.name, kinds, positions, comps), st.loc)

    def _decl_system(self, st: Statement):
        self.ns.declare("system", st.name, self.system_value(st.value, st.loc), st.loc)

    def _decl_anchor(self, st: Statement):
        if st.indices is not None or st.target is not None and not isinstance(st.value, Call):
            system = self._target_system(st)
            if system is None:
                raise SemanticError("an anchor given by an expression needs 'for <system>'", st.loc)
            env = self.env(system, with_test=True, loc=st.loc)
            expr, free = _validated(st.value, env, st.loc)
            und, dot = _split_names(free, st.indices, st.loc, f"anchor {st.name}")
            _check_kinds(free, und, dot, system.field, st.loc, f"anchor {st.name}")
            polys = componentize_multiplet(expr, system.field, und, dot, env)
            obj = anc.anchor_from_polynomials(system, {(system.field.name, c): p for c, p in polys.items()}, st.name)
        else:
            obj = self.anchor_value(st.value, st.loc)
        self.ns.declare("anchor", st.name, obj, st.loc)

    def _decl_current(self, st: Statement):
        system = self._target_system(st)
        if st.indices is not None:
            env = self.env(system, loc=st.loc)
            expr, free = _validated(st.value, env, st.loc)
            declared = [ix.name for ix in st.indices]
            if len(declared) == 2:
                for n, want in zip(declared, (UNDOTTED, DOTTED)):
                    if n in free and free[n][0] != want:
                        have = "a dotted" if free[n][0] == DOTTED else "an undotted"
                        slot = "undotted" if want == UNDOTTED else "dotted"
                        raise SemanticError(
                            f"current {st.name}: index {n!r} must be {slot} but is bound to {have} field slot",
                            st.loc)
            und, dot = _split_names(free, st.indices, st.loc, f"current {st.name}")
            if len(und) != 1 or len(dot) != 1:
                raise SemanticError(
                    f"current {st.name} needs one undotted and one dotted index, got "
                    f"{len(und)} undotted and {len(dot)} dotted", st.loc)
            for n in und + dot:
                if free[n][1] != LOWER:
                    raise SemanticError(f"current {st.name}: index {n!r} must be lower", st.loc)
            j = {}
            for a in (1, 2):
                for ad in (1, 2):
                    j[direction(a, ad)] = componentize(expr, {und[0]: a, dot[0]: ad}, env)
            obj = cl.ConservedCurrent(j, system, st.name)
        else:
            obj = self.current_value(st.value, st.loc, system)
        self.ns.declare("current", st.name, obj, st.loc)

    def _decl_characteristic(self, st: Statement):
        system = self._target_system(st)
        if st.indices is not None or not isinstance(st.value, (Call, Ref, BinOp, Neg)) or self._is_spinor(st.value):
            if system is None:
                raise SemanticError("a characteristic given by an expression needs 'for <system>'", st.loc)
            env = self.env(system, loc=st.loc)
            expr, free = _validated(st.value, env, st.loc)
            und, dot = _split_names(free, st.indices, st.loc, f"characteristic {st.name}")
            _check_kinds(free, und, dot, system.test_spec, st.loc, f"characteristic {st.name}")
            obj = anc.Characteristic(componentize_multiplet(expr, system.test_spec, und, dot, env))
        else:
            obj = self.characteristic_value(st.value, st.loc, system)
        self.ns.declare("characteristic", st.name, obj, st.loc)

    def _decl_evolution(self, st: Statement):
        system = self._target_system(st)
        if st.indices is not None or self._is_spinor(st.value):
            if system is None:
                raise SemanticError("an evolutionary field given by an expression needs 'for <system>'", st.loc)
            env = self.env(system, loc=st.loc)
            expr, free = _validated(st.value, env, st.loc)
            und, dot = _split_names(free, st.indices, st.loc, f"evolution {st.name}")
            _check_kinds(free, und, dot, system.field, st.loc, f"evolution {st.name}")
            polys = componentize_multiplet(expr, system.field, und, dot, env)
            obj = EvolutionaryField({(system.field.name, c): p for c, p in polys.items()}, system.real_fields)
        else:
            obj = self.evolution_value(st.value, st.loc, system)
        self.ns.declare("evolution", st.name, obj, st.loc)

    def _decl_ode(self, st: Statement):
        self.ns.declare("ode", st.name, self.ode_value(st.value, st.loc), st.loc)

    def _decl_bivector(self, st: Statement):
        dim = st.option("dim")
        self.ns.declare("bivector", st.name, self.bivector_value(st.value, st.loc, dim), st.loc)

    def _decl_task(self, st: Statement):
        if not isinstance(st.value, Call):
            raise SemanticError("a task must be a call such as check_anchor(S, V)", st.loc)
        if st.value.name not in TASK_SIGNATURES:
            raise SemanticError(f"unknown task {st.value.name!r}", st.value.loc)
        opts = {}
        for k, v in st.options:
            if k in ("cap", "degcap"):
                opts[k] = int_value(v)
            elif k == "method":
                if not isinstance(v, Ref) or v.name not in ("auto", "both", "membership", "adjoint"):
                    raise SemanticError("method must be auto, both, membership or adjoint", st.loc)
                opts[k] = v.name
            elif k == "expect":
                opts[k] = v
            else:
                raise SemanticError(f"unknown task option {k!r}", st.loc)
        if any(t.name == st.name for t in self.tasks):
            raise SemanticError(f"task {st.name!r} is already declared", st.loc)
        args, deferred = self.task_arguments(st.value)
        self.tasks.append(TaskSpec(st.name, st.value, opts, st.loc, args, deferred))

    def _is_spinor(self, e) -> bool:
        """True when the expression mentions fields or tensors rather than objects."""
        if isinstance(e, Ref):
            return e.name in self.ns.fields or e.name in self.ns.tensors or e.name in ("eps", "epsd")
        if isinstance(e, (ConjExpr, DerivExpr, SymExpr)):
            return True
        if isinstance(e, BinOp):
            return self._is_spinor(e.left) or self._is_spinor(e.right)
        if isinstance(e, (Neg, Pow)):
            return self._is_spinor(e.arg if isinstance(e, Neg) else e.base)
        return False

    # object-valued expressions

    def _kwargs(self, call: Call, allowed: set) -> dict:
        kw = dict(call.kwargs)
        extra = set(kw) - allowed
        if extra:
            raise SemanticError(f"{call.name}() got unexpected arguments {sorted(extra)}", call.loc)
        return kw

    def _spin(self, call: Call) -> Fraction:
        kw = self._kwargs(call, {"spin"})
        if "spin" not in kw:
            if len(call.args) != 1:
                raise SemanticError(f"{call.name}() needs spin=<half-integer>", call.loc)
            kw["spin"] = call.args[0]
        s = rational_value(kw["spin"])
        if s <= 0 or (2 * s).denominator != 1:
            raise SemanticError("spin must be a positive half-integer", call.loc)
        return s

    def system_value(self, e, loc):
        if isinstance(e, Ref):
            return self.ns.lookup(e.name, "system", e.loc)
        if not isinstance(e, Call):
            raise SemanticError("expected a system", loc)
        if e.name == "bw":
            return anc.build_bw_system(self._spin(e))
        if e.name == "weyl":
            return anc.weyl_system()
        if e.name in ("equation", "lagrangian"):
            if len(e.args) != 2 or not isinstance(e.args[0], Ref):
                raise SemanticError(f"{e.name}(field, expression) expected", e.loc)
            fname = e.args[0].name
            spec = self.ns.fields.get(fname)
            if spec is None:
                raise SemanticError(f"unknown field {fname!r}", e.args[0].loc)
            env = self.env()
            expr, free = _validated(e.args[1], env, e.loc)
            if free:
                raise SemanticError(f"{e.name}() expression must have no free indices", e.loc)
            poly = componentize(expr, {}, env)
            if e.name == "lagrangian":
                return anc.lagrangian_system(spec, poly, name=f"lagrangian({fname})")
            if not spec.real:
                raise SemanticError("equation() supports a single real scalar field", e.loc)
            test = FieldSpec("xi", real=True)
            return anc.EquationSystem(f"equation({fname})", (spec,), test, {(0, 0): poly}, {(0, 0): 1})
        raise SemanticError(f"unknown system constructor {e.name}()", e.loc)

    def anchor_value(self, e, loc):
        if isinstance(e, Ref):
            return self.ns.lookup(e.name, "anchor", e.loc)
        if not isinstance(e, Call):
            raise SemanticError("expected an anchor", loc)
        if e.name == "bw_anchor":
            return anc.build_bw_anchor(self._spin(e))
        if e.name in ("canonical", "zero"):
            if len(e.args) != 1:
                raise SemanticError(f"{e.name}(system) expected", e.loc)
            system = self.system_value(e.args[0], e.loc)
            if e.name == "zero":
                return anc.zero_anchor(system)
            try:
                return anc.canonical_anchor(system)
            except anc.NotLagrangianError as err:
                raise SemanticError(f"canonical anchor unavailable: {err}", e.loc) from None
        raise SemanticError(f"unknown anchor constructor {e.name}()", e.loc)

    def _linear(self, e, kind: str, loc) -> list:
        """Decompose ``e`` into ``[(coefficient, object)]`` over named objects of ``kind``."""
        if isinstance(e, Ref):
            return [(GaussianRational(1), self.ns.lookup(e.name, kind, e.loc))]
        if isinstance(e, Neg):
            return [(-c, o) for c, o in self._linear(e.arg, kind, loc)]
        if isinstance(e, BinOp):
            if e.op in "+-":
                right = self._linear(e.right, kind, loc)
                if e.op == "-":
                    right = [(-c, o) for c, o in right]
                return self._linear(e.left, kind, loc) + right
            if e.op == "*":
                if is_constant(e.left):
                    c = constant_value(e.left)
                    return [(c * k, o) for k, o in self._linear(e.right, kind, loc)]
                if is_constant(e.right):
                    c = constant_value(e.right)
                    return [(c * k, o) for k, o in self._linear(e.left, kind, loc)]
            if e.op == "/" and is_constant(e.right):
                c = 1 / constant_value(e.right)
                return [(c * k, o) for k, o in self._linear(e.left, kind, loc)]
        if isinstance(e, Call):
            return [(GaussianRational(1), getattr(self, f"{kind}_value")(e, loc))]
        raise SemanticError(f"expected a linear combination of {kind}s", getattr(e, "loc", loc))

    def _k_argument(self, e):
        if isinstance(e, Ref) and e.name in self.ns.tensors:
            t = self.ns.tensors[e.name]
            if t.kinds != (UNDOTTED, DOTTED) or t.positions != (UPPER, UPPER):
                raise SemanticError("k must be a bispinor with upper undotted and dotted indices", e.loc)
            return {key: t.value(key) for key in ((1, 1), (1, 2), (2, 1), (2, 2))}
        if isinstance(e, Call) and e.name == "vector":
            return tuple(rational_value(a) for a in e.args)
        if isinstance(e, TupleExpr):
            return tuple(rational_value(a) for a in e.items)
        raise SemanticError("k must be a declared bispinor tensor, vector(...) or a 4-tuple", getattr(e, "loc", None))

    def _standard(self, e: Call):
        kw = self._kwargs(e, {"spin", "k"})
        s = rational_value(kw["spin"]) if "spin" in kw else None
        if s is None:
            raise SemanticError(f"{e.name}() needs spin=", e.loc)
        k = self._k_argument(kw["k"]) if "k" in kw else (1, 0, 0, 0)
        return cl.standard_current(s, k)

    def current_value(self, e, loc, system=None):
        if isinstance(e, Call):
            if e.name == "standard":
                return self._standard(e)[0]
            if e.name == "improper":
                if len(e.args) != 1 or not isinstance(e.args[0], MapExpr):
                    raise SemanticError("improper({(a, ad, b, bd): expr, ...}) expected", e.loc)
                env = self.env(system, loc=e.loc)
                biv = {}
                for key, val in e.args[0].items:
                    vals = tuple(int_value(k) for k in (key.items if isinstance(key, TupleExpr) else (key,)))
                    if len(vals) != 4 or any(v not in (1, 2) for v in vals):
                        raise SemanticError("improper() keys are (a, ad, b, bd) with values 1 or 2", e.loc)
                    expr, free = _validated(val, env, e.loc)
                    if free:
                        raise SemanticError("improper() entries must have no free indices", e.loc)
                    biv[(direction(vals[0], vals[1]), direction(vals[2], vals[3]))] = componentize(expr, {}, env)
                return cl.improper_current(system, biv)
            raise SemanticError(f"unknown current constructor {e.name}()", e.loc)
        parts = self._linear(e, "current", loc)
        out = None
        for c, j in parts:
            term = j.scale(c)
            out = term if out is None else out + term
        return out

    def characteristic_value(self, e, loc, system=None):
        if isinstance(e, Call):
            if e.name == "standard":
                return self._standard(e)[1].psi
            if e.name == "zero":
                if len(e.args) != 1:
                    raise SemanticError("zero(system) expected", e.loc)
                sys_ = self.system_value(e.args[0], e.loc)
                return anc.Characteristic({a: JetPolynomial() for a in sys_.equation_labels})
            if e.name == "extract":
                if len(e.args) not in (1, 2):
                    raise SemanticError("extract(current[, system]) expected", e.loc)
                j = self.current_value(e.args[0], e.loc) if not isinstance(e.args[0], Ref) else \
                    self.ns.lookup(e.args[0].name, "current", e.loc)
                sys_ = self.system_value(e.args[1], e.loc) if len(e.args) == 2 else (system or j.system)
                if sys_ is None:
                    raise SemanticError("extract() needs a system", e.loc)
                return cl.extract_characteristic(j, sys_).psi
            raise SemanticError(f"unknown characteristic constructor {e.name}()", e.loc)
        parts = self._linear(e, "characteristic", loc)
        out = None
        for c, p in parts:
            term = p.scale(c)
            out = term if out is None else out + term
        return out

    def evolution_value(self, e, loc, system=None):
        if isinstance(e, Ref):
            return self.ns.lookup(e.name, "evolution", e.loc)
        if isinstance(e, Call) and e.name == "anchor_map":
            if len(e.args) != 2:
                raise SemanticError("anchor_map(anchor, characteristic) expected", e.loc)
            V = self.anchor_value(e.args[0], e.loc)
            psi = self.characteristic_value(e.args[1], e.loc, system)
            return anc.anchor_map(V, psi, system)
        raise SemanticError("expected an evolutionary field", getattr(e, "loc", loc))

    def ode_value(self, e, loc):
        if isinstance(e, Ref):
            return self.ns.lookup(e.name, "ode", e.loc)
        if isinstance(e, TupleExpr):
            return ode.ODESystem([phase_polynomial(x) for x in e.items])
        if isinstance(e, Call) and e.name == "hamiltonian":
            if len(e.args) != 2:
                raise SemanticError("hamiltonian(bivector, H) expected", e.loc)
            return ode.hamiltonian_vector_field(self.bivector_value(e.args[0], e.loc), phase_polynomial(e.args[1]))
        raise SemanticError("expected an ODE right-hand side (F1, F2, ...)", getattr(e, "loc", loc))

    def bivector_value(self, e, loc, dim=None):
        if isinstance(e, Ref):
            return self.ns.lookup(e.name, "bivector", e.loc)
        if isinstance(e, Call) and e.name == "so3":
            return ode.so3_bivector()
        if isinstance(e, TupleExpr):
            rows = []
            for r in e.items:
                if not isinstance(r, TupleExpr):
                    raise SemanticError("a bivector matrix is a tuple of row tuples", getattr(r, "loc", loc))
                rows.append([phase_polynomial(x) for x in r.items])
            return ode.PhaseBivector(rows)
        if isinstance(e, MapExpr):
            entries = {}
            for key, val in e.items:
                if not isinstance(key, TupleExpr) or len(key.items) != 2:
                    raise SemanticError("bivector keys are index pairs (i, j)", getattr(key, "loc", loc))
                i, j = (int_value(k) for k in key.items)
                entries[(i, j)] = phase_polynomial(val)
            n = int_value(dim) if dim is not None else max((max(k) for k in entries), default=0)
            if any(min(k) < 1 or max(k) > n for k in entries):
                raise SemanticError("bivector index out of range", loc)
            return ode.PhaseBivector.from_entries(n, entries)
        raise SemanticError("expected a bivector", getattr(e, "loc", loc))

    def covector(self, e, loc):
        if not isinstance(e, TupleExpr):
            raise SemanticError("a covector is a tuple of polynomials", getattr(e, "loc", loc))
        return tuple(phase_polynomial(x) for x in e.items)

    def resolve(self, e, kind: str, loc):
        if kind == "covector":
            return self.covector(e, loc)
        return getattr(self, f"{kind}_value")(e, loc)

    def task_arguments(self, call: Call) -> tuple[list, Exception | None]:
        """Resolve task arguments; evaluation failures are deferred to the task."""
        sig = TASK_SIGNATURES[call.name]
        if call.kwargs:
            raise SemanticError(f"{call.name}() takes positional arguments only", call.loc)
        if len(call.args) != len(sig):
            raise SemanticError(f"{call.name}() takes {len(sig)} arguments ({', '.join(sig)})", call.loc)
        out = []
        for arg, kind in zip(call.args, sig):
            try:
                out.append(self.resolve(arg, kind, call.loc))
            except SemanticError:
                raise
            except Exception as err:  # noqa: BLE001 - reported per task
                return [], err
        return out, None


OPTIONS = {
    "field": {"spin", "real", "undotted", "dotted"},
    "tensor": {"kinds"},
    "bivector": {"dim"},
    "task": {"cap", "degcap", "method", "expect"},
    "system": set(), "anchor": set(), "current": set(), "characteristic": set(),
    "evolution": set(), "ode": set(),
}

TASK_SIGNATURES = {
    "check_anchor": ("system", "anchor"),
    "check_integrability": ("system", "anchor"),
    "check_conservation": ("current", "characteristic", "system"),
    "extract_characteristic": ("current", "system"),
    "check_roundtrip": ("current", "characteristic", "system"),
    "check_symmetry": ("system", "evolution"),
    "check_noether": ("system", "anchor", "characteristic"),
    "check_homomorphism": ("system", "anchor", "characteristic", "characteristic"),
    "currents_equivalent": ("current", "current", "system"),
    "check_f_invariance": ("ode", "bivector"),
    "check_jacobi": ("bivector",),
    "ode_bracket": ("bivector", "covector", "covector"),
}


def load(pf: ProblemFile) -> LoadedFile:
    return Loader().load(pf)
