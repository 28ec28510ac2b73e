"""Build codes and channels from plain JSON-style dictionaries."""
from __future__ import annotations

from fractions import Fraction

from .channels import FritchmanParams, GEParams
from .decoding import LayeredCode
from .equalrate import build_genms, build_midas, build_smds_baseline
from .unequalrate import build_adapted_ms, build_robust, build_unequal

__all__ = ["ConfigError", "build_code", "code_label", "channel_params", "FAMILIES"]

FAMILIES = ("genms", "ms", "midas", "smds", "unequal", "adapted-ms", "robust")


class ConfigError(ValueError):
    pass


def _req(spec: dict, *names):
    missing = [n for n in names if n not in spec]
    if missing:
        raise ConfigError(f"{spec.get('family')!r} spec is missing {', '.join(missing)}")
    return [spec[n] for n in names]


def build_code(spec: dict) -> LayeredCode:
    """Construct a code from e.g. ``{"family": "midas", "N": 2, "B": 3, "T": 4}``."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("code spec must be an object with a 'family' key")
    fam = spec["family"]
    seed = int(spec.get("seed", 0))
    certify = bool(spec.get("certify", False))
    field = spec.get("field")
    try:
        if fam in ("genms", "ms"):
            B, T = _req(spec, "B", "T")
            return build_genms(int(B), int(T), spec.get("W"), field, seed,
                               spec.get("backend", "random-smds"), bool(spec.get("reduce", False)), certify)
        if fam == "midas":
            N, B, T = _req(spec, "N", "B", "T")
            return build_midas(int(N), int(B), int(T), spec.get("W"), spec.get("backend", "random-smds"),
                               field, seed, spec.get("split"), certify)
        if fam == "smds":
            R, T = _req(spec, "rate", "T")
            return build_smds_baseline(Fraction(str(R)), int(T), int(spec.get("M", 1)), field, seed, certify)
        if fam == "unequal":
            M, T, B = _req(spec, "M", "T", "B")
            if int(spec.get("N", 0)) > 0:
                return build_robust(int(M), int(T), int(B), int(spec["N"]), field, seed,
                                    bool(spec.get("exact", False)), certify)
            return build_unequal(int(M), int(T), int(B), field, seed, int(spec.get("scale", 1)),
                                 certify, spec.get("W"))
        if fam == "robust":
            M, T, B, N = _req(spec, "M", "T", "B", "N")
            return build_robust(int(M), int(T), int(B), int(N), field, seed,
                                bool(spec.get("exact", False)), certify)
        if fam == "adapted-ms":
            M, T, B = _req(spec, "M", "T", "B")
            return build_adapted_ms(int(M), int(T), int(B), field, seed,
                                    bool(spec.get("reduce", True)), certify)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed {fam!r} spec: {exc}") from exc
    raise ConfigError(f"unknown family {fam!r}; expected one of {', '.join(FAMILIES)}")


def code_label(code: LayeredCode) -> str:
    """Compact parameter string for reports, e.g. ``N=2;B=9;T=12``."""
    keys = ("rate", "M", "N", "B", "T", "W", "backend")
    p = code.params
    parts = [f"{k}={p[k]}" for k in keys if p.get(k) is not None]
    return ";".join(parts + [f"R={code.rate}"])


def channel_params(spec: dict):
    """``{"model": "ge", "alpha":..., "beta":..., "eps":...}`` or the Fritchman analogue."""
    model = spec.get("model", "ge")
    try:
        if model == "ge":
            return GEParams(float(spec["alpha"]), float(spec["beta"]), float(spec.get("eps", 0.0)))
        if model == "fritchman":
            return FritchmanParams(int(spec["n_bad"]), float(spec["alpha"]), float(spec["beta"]),
                                   float(spec.get("eps", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"channel spec is missing {exc}") from exc
    raise ConfigError(f"unknown channel model {model!r}")
