"""Key-value files describing a driving measure.

Lines are ``key = value``; ``#`` starts a comment. ``kind`` selects one of

``beta``
    ``alpha = 1.5``
``expression``
    ``density = <expression in x and xc>`` where ``xc`` is 1 - x. numpy
    functions are available by bare name (``exp``, ``log``, ``log1p``,
    ``sqrt``, ``pi``, ...). Optional ``normalize = true``.
``grid``
    ``x = <increasing points in (0, 1)>`` and ``density = <values>``,
    whitespace separated; linear interpolation, constant beyond the end
    points, always normalized.

``label`` is optional for the generic kinds.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from coalesce.rates import LambdaMeasure

__all__ = ["MeasureFileError", "load_measure", "parse_measure"]

_NAMES = {
    name: getattr(np, name)
    for name in ("exp", "log", "log1p", "expm1", "sqrt", "sin", "cos", "abs", "power", "pi", "where")
}


class MeasureFileError(ValueError):
    pass


def _pairs(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MeasureFileError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise MeasureFileError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def _flag(v: str) -> bool:
    if v.lower() in ("1", "true", "yes"):
        return True
    if v.lower() in ("0", "false", "no"):
        return False
    raise MeasureFileError(f"not a boolean: {v!r}")


def parse_measure(text: str) -> LambdaMeasure:
    kv = _pairs(text)
    kind = kv.pop("kind", None)
    try:
        if kind == "beta":
            return LambdaMeasure.beta(float(kv["alpha"]))
        if kind == "expression":
            expr = kv["density"]
            code = compile(expr, "<density>", "eval")

            def density(x, xc):
                return np.broadcast_to(
                    eval(code, {"__builtins__": {}}, {**_NAMES, "x": x, "xc": xc}), np.shape(x)
                )

            return LambdaMeasure.from_density(
                density,
                complement=True,
                normalize=_flag(kv.get("normalize", "false")),
                label=kv.get("label", expr),
            )
        if kind == "grid":
            xs = np.array(kv["x"].split(), dtype=float)
            ys = np.array(kv["density"].split(), dtype=float)
            if xs.size != ys.size or xs.size < 2 or np.any(np.diff(xs) <= 0):
                raise MeasureFileError("grid needs matching, increasing x and density")
            if xs[0] <= 0 or xs[-1] >= 1 or np.any(ys < 0):
                raise MeasureFileError("grid points must lie in (0, 1) with density >= 0")
            return LambdaMeasure.from_density(
                lambda x: np.interp(x, xs, ys),
                normalize=True,
                label=kv.get("label", "grid"),
                breakpoints=xs,
            )
    except KeyError as e:
        raise MeasureFileError(f"missing key {e.args[0]!r} for kind {kind!r}") from None
    except (SyntaxError, NameError, TypeError) as e:
        raise MeasureFileError(f"bad density: {e}") from None
    raise MeasureFileError(f"unknown kind {kind!r}; use beta, expression or grid")


def load_measure(path) -> LambdaMeasure:
    return parse_measure(Path(path).read_text())
