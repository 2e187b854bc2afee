"""Command-line experiment runner.

Every subcommand takes flat flags or a JSON ``--config`` file (flags win),
draws all randomness from ``--seed`` through a Philox generator, and writes
CSV (first line ``# schema=1``) or JSON to ``--out`` or stdout.

Exit codes: 0 success, 2 bad configuration, 3 budget exhausted, 4 precision
exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import mpmath
import numpy as np

from . import __version__
from .errors import BudgetExceeded, PrecisionError

SCHEMA_LINE = "# schema=1\n"
EXIT_CONFIG, EXIT_BUDGET, EXIT_PRECISION = 2, 3, 4


class ConfigError(ValueError):
    pass


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(";") if v.strip()]


def _json_value(text):
    if isinstance(text, (dict, list)):
        return text
    return json.loads(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).lower()
    if s in ("1", "true", "yes"):
        return True
    if s in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# field name -> (converter, default, help); None default means required
COMMON = {
    "seed": (int, 0, "64-bit seed for the Philox generator"),
    "budget": (int, 10**8, "work cap; exceeding it exits with code 3"),
    "threads": (int, None, "worker threads (default: SPARSE_ORBIT_THREADS or 1)"),
    "out": (str, "-", "output path, '-' for stdout"),
}

SCHEMAS = {
    "decompose": {
        "N": (int, None, "modulus"),
        "C": (int, 2, "power"),
        "d": (int, 1, "divisor level of the approximation"),
    },
    "residues": {
        "N": (int, None, "modulus"),
        "C": (int, 2, "power"),
        "d": (int, 1, "gcd level for the Pow_N(x, d) column"),
    },
    "lemma-count": {
        "P": (str, "n^2", "integer polynomial"),
        "q": (_int_list, None, "comma-separated moduli"),
        "r": (int, 1, "second modulus, coprime to q"),
        "M": (int, 0, "m-window length (0: ceil(q^exponent))"),
        "N": (int, 0, "n-window length (0: ceil(q^exponent))"),
        "exponent": (float, 0.9, "window exponent when M or N is 0"),
        "trials": (int, 1, "random (a, x, t) per q"),
    },
    "char-sums": {
        "kind": (str, "burgess", "burgess | keith | progression"),
        "m_max": (int, 30, "largest modulus (burgess)"),
        "h_max": (int, 5, "largest window (burgess)"),
        "p_max": (int, 50, "largest prime (keith)"),
        "orders": (_int_list, [2, 3], "character orders (keith)"),
        "n": (int, 30, "modulus (progression)"),
        "step": (int, 3, "progression step (progression)"),
        "L": (int, 4, "progression length (progression)"),
    },
    "cf": {
        "quotients": (_int_list, [], "partial quotients a0,a1,..."),
        "spec": (_json_value, None, "JSON cf spec (used when quotients are absent)"),
        "length": (int, 0, "build denominators of this length instead"),
        "constraints": (_str_list, [], "';'-separated: none, prime, coprime, odd, 1modC:<C>"),
        "q1": (int, 2, "first denominator for construction"),
    },
    "rigidity": {
        "system": (str, "skew", "rotation | skew | flow"),
        "cf_spec": (_json_value, {"rule": "power", "exponent": 6, "terms": 7, "seed": [0, 2]}, "JSON cf spec"),
        "schedule": (str, "all", "'all', 'none' or comma-separated indices"),
        "offset": (int, 0, "decay-rule index offset"),
        "n_max": (int, 4, "largest convergent index profiled"),
        "grid": (int, 1000, "grid size G"),
        "samples": (int, 64, "t samples when t_max is large"),
    },
    "orbit": {
        "system": (str, "skew", "rotation | skew | flow"),
        "cf_spec": (_json_value, {"rule": "power", "exponent": 6, "terms": 5, "seed": [0, 1, 999999999]},
                    "JSON cf spec"),
        "schedule": (str, "none", "'all', 'none' or comma-separated indices"),
        "offset": (int, 0, "decay-rule index offset"),
        "C": (int, 2, "orbit times i^C"),
        "checkpoints": (_int_list, [1000, 10000], "comma-separated N values"),
        "starts": (int, 3, "number of seeded starting points"),
        "K": (int, 5, "frequency cutoff"),
        "format": (str, "csv", "csv | json"),
    },
    "vdc": {
        "count": (int, 100, "number of random sequences"),
        "length": (int, 64, "period length"),
        "H": (int, 8, "differencing range"),
    },
    "weyl": {
        "P": (_str_list, ["x^2"], "';'-separated polynomials"),
        "q": (_int_list, [7, 11], "comma-separated moduli"),
        "n": (int, 0, "differencing depth (0: skip the difference average)"),
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-orbit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON file with default field values")
        for field, (_, default, help_) in {**schema, **COMMON}.items():
            p.add_argument("--" + field.replace("_", "-"), dest=field, default=argparse.SUPPRESS,
                           help=f"{help_} (default: {default!r})")
    return parser


def resolve_config(command: str, flags: dict, config_path: str | None) -> dict:
    """Defaults, then the config file, then flags; every value is validated."""
    schema = {**SCHEMAS[command], **COMMON}
    raw = {}
    if config_path:
        try:
            with open(config_path) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {config_path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config: top level must be an object")
        file_cfg.pop("command", None)
        unknown = sorted(set(file_cfg) - set(schema))
        if unknown:
            raise ConfigError(f"config: unknown field(s) {unknown} for '{command}'")
        raw.update(file_cfg)
    raw.update(flags)
    cfg = {}
    for field, (conv, default, _) in schema.items():
        if field in raw:
            try:
                cfg[field] = conv(raw[field])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field '{field}': invalid value {raw[field]!r} ({exc})") from None
        elif default is None and field not in ("threads", "spec"):
            raise ConfigError(f"field '{field}': required for '{command}'")
        else:
            cfg[field] = default
    if cfg["threads"] is None:
        env = os.environ.get("SPARSE_ORBIT_THREADS", "1")
        try:
            cfg["threads"] = int(env)
        except ValueError:
            raise ConfigError(f"SPARSE_ORBIT_THREADS: invalid value {env!r}") from None
    if cfg["threads"] < 1:
        raise ConfigError("field 'threads': must be >= 1")
    if cfg["budget"] < 1:
        raise ConfigError("field 'budget': must be >= 1")
    return cfg


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed % 2**64))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _pmap(fn, items, threads):
    """Order-preserving map, optionally threaded."""
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _need(cost, budget, what):
    if cost > budget:
        raise BudgetExceeded(f"{what} needs about {cost} operations > budget {budget}")


# --- subcommands -------------------------------------------------------------


def cmd_decompose(cfg) -> str:
    from .powres import approximate_pow, h_direct, pow_count_array

    N, C, d = cfg["N"], cfg["C"], cfg["d"]
    if N < 1 or C < 1:
        raise ConfigError("fields 'N' and 'C' must be >= 1")
    _need(N * N, cfg["budget"], "decompose")
    combo, bound = approximate_pow(N, C, d)
    xs = np.arange(N)
    vals = combo.values(xs)
    exact = pow_count_array(N, C, xs)
    out = json.loads(combo.to_json())
    out.update(
        term_count=len(combo.terms),
        multiplicity=combo.multiplicity,
        size_bound=combo.size_bound(),
        max_abs_error_vs_oracle=float(np.max(np.abs(vals - h_direct(N, C, d)))),
        l1_distance=float(np.sum(np.abs(vals - exact)) / N),
        l1_bound=bound,
    )
    return json.dumps(out, indent=1, sort_keys=True) + "\n"


def cmd_residues(cfg) -> str:
    from .powres import pow_count_array, pow_count_gcd_array

    N, C, d = cfg["N"], cfg["C"], cfg["d"]
    if N < 1 or C < 1 or d < 1:
        raise ConfigError("fields 'N', 'C', 'd' must be >= 1")
    _need(N, cfg["budget"], "residues")
    xs = np.arange(N)
    pc = pow_count_array(N, C, xs)
    if N % d:
        raise ConfigError(f"field 'd': {d} does not divide N={N}")
    pg = pow_count_gcd_array(N, C, xs, d)
    return _csv(["x", "pow", f"pow_gcd_{d}"], zip(xs.tolist(), pc.tolist(), pg.tolist()))


def cmd_lemma_count(cfg) -> str:
    from .expsums import IntPolynomial, lemma_trials

    P = IntPolynomial.parse(cfg["P"].replace("n", "x"))
    rng = make_rng(cfg["seed"])
    rows = []
    for q in sorted(cfg["q"]):
        M = cfg["M"] or math.ceil(q ** cfg["exponent"])
        N = cfg["N"] or math.ceil(q ** cfg["exponent"])
        _need(q + N, cfg["budget"], "lemma-count")
        rows.extend(lemma_trials(P, q, cfg["r"], M, N, cfg["trials"], rng))
    keys = ["q", "r", "M", "N", "a", "x", "t", "lhs", "main_term", "ratio"]
    return _csv(keys, ([r[k] for k in keys] for r in rows))


def cmd_char_sums(cfg) -> str:
    from .arith import is_prime
    from .characters import (burgess_stat, character_of_order, enumerate_characters, progression_l1_all,
                             unit_root)

    kind = cfg["kind"]
    if kind == "burgess":
        m_max, h_max = cfg["m_max"], cfg["h_max"]
        _need(m_max**3 * h_max, cfg["budget"], "burgess sweep")

        def cell(m):
            out = []
            for j, chi in enumerate(enumerate_characters(m)):
                if chi.is_principal():
                    continue
                for h in range(1, h_max + 1):
                    s = burgess_stat(m, chi, h)
                    out.append((m, j, h, s, m * h, s < m * h))
            return out

        rows = [r for part in _pmap(cell, range(2, m_max + 1), cfg["threads"]) for r in part]
        return _csv(["m", "char", "h", "stat", "bound", "ok"], rows)
    if kind == "keith":
        from .characters import pair_count

        p_max = cfg["p_max"]
        _need(p_max**2 * 25, cfg["budget"], "keith sweep")

        def cell(p):
            out = []
            for k in cfg["orders"]:
                if (p - 1) % k or k < 2:
                    continue
                chi = character_of_order(p, k)
                for i in (1, 2, 3):
                    if i >= p:
                        continue
                    for a in range(k):
                        for b in range(k):
                            n = pair_count(p, chi, unit_root(a, k), unit_root(b, k), i)
                            dev = abs(n - p / k**2)
                            out.append((p, k, i, a, b, n, dev, math.sqrt(p) + 1, dev < math.sqrt(p) + 1))
            return out

        primes = [p for p in range(3, p_max + 1) if is_prime(p)]
        rows = [r for part in _pmap(cell, primes, cfg["threads"]) for r in part]
        return _csv(["p", "k", "i", "eps1", "eps2", "count", "deviation", "bound", "ok"], rows)
    if kind == "progression":
        n, step, L = cfg["n"], cfg["step"], cfg["L"]
        _need(n * n * L, cfg["budget"], "progression sweep")
        l1, excluded = progression_l1_all(n, step, L)
        bound = n * math.sqrt(step * L)
        rows = [(n, j, step, L, float(v), bool(ex), bound, bool(ex or v < bound))
                for j, (v, ex) in enumerate(zip(l1, excluded))]
        return _csv(["n", "char", "step", "L", "l1", "induced", "bound", "ok"], rows)
    raise ConfigError(f"field 'kind': unknown value {kind!r}")


def _constraint(text):
    if text.startswith("1modC:"):
        return {"name": "1modC", "C": int(text.split(":", 1)[1])}
    return text


def cmd_cf(cfg) -> str:
    from .diophantine import cf_from_denominators, cf_from_spec, construct_denominators, convergents_from_quotients

    if cfg["length"]:
        qs = construct_denominators(cfg["length"], [_constraint(c) for c in cfg["constraints"]],
                                    q1=cfg["q1"], budget=cfg["budget"])
        cf = cf_from_denominators(qs)
    elif cfg["quotients"]:
        cf = convergents_from_quotients(cfg["quotients"])
    elif cfg["spec"] is not None:
        cf = cf_from_spec(cfg["spec"])
    else:
        raise ConfigError("field 'quotients': give quotients, spec or length")
    rows = [(n, cf.quotients[n], cf.p[n], cf.q[n]) for n in range(len(cf))]
    return _csv(["n", "a", "p", "q"], rows)


def _schedule(text):
    if text in ("all", "none", ""):
        return "all" if text == "all" else ()
    return tuple(_int_list(text))


def _system(cfg):
    from .diophantine import cf_from_spec
    from .dynamics import Rotation, SkewProductSystem, SpecialFlowSystem, build_cocycle

    cf = cf_from_spec(cfg["cf_spec"])
    kind = cfg["system"]
    if kind == "rotation":
        return cf, Rotation(cf)
    g = build_cocycle(cf, _schedule(cfg["schedule"]), offset=cfg["offset"])
    if kind == "skew":
        return cf, SkewProductSystem(g, cf)
    if kind == "flow":
        return cf, SpecialFlowSystem(g)
    raise ConfigError(f"field 'system': unknown value {kind!r}")


def _big(v: int) -> str:
    return str(v) if v < 10**30 else mpmath.nstr(mpmath.mpf(v), 12)


def cmd_rigidity(cfg) -> str:
    from .dynamics import rigidity_profile

    cf, system = _system(cfg)
    n_max = min(cfg["n_max"], len(cf) - 2)

    def cell(n):
        q, q1 = cf.q[n], cf.q[n + 1]
        tmax = max(1, int(mpmath.floor(mpmath.mpf(q1) ** mpmath.mpf(0.8))))
        r = rigidity_profile(system, q, tmax, grid_size=cfg["grid"], samples=cfg["samples"],
                             budget=cfg["budget"])
        return (n, _big(q), mpmath.nstr(r.value, 12), _big(r.t_max), r.grid_size, r.sampled)

    rows = _pmap(cell, range(1, n_max + 1), cfg["threads"])
    return _csv(["n", "q_n", "rigidity", "t_max", "grid", "sampled"], rows)


def cmd_orbit(cfg) -> str:
    from .dynamics import TorusPoint
    from .equi import equidistribution_trend

    _, system = _system(cfg)
    cps = sorted(cfg["checkpoints"])
    _need(cps[-1] * cfg["starts"], cfg["budget"], "orbit")
    rng = make_rng(cfg["seed"])
    starts = [TorusPoint(Fraction(int(rng.integers(0, 2**53)), 2**53), float(rng.random()))
              for _ in range(cfg["starts"])]
    reps = _pmap(lambda p: equidistribution_trend(system, p, cfg["C"], cps, K=cfg["K"],
                                                  system_id=cfg["system"]), starts, cfg["threads"])
    if cfg["format"] == "json":
        return "[\n" + ",\n".join(r.to_json() for r in reps) + "\n]\n"
    if cfg["format"] != "csv":
        raise ConfigError(f"field 'format': unknown value {cfg['format']!r}")
    out = [SCHEMA_LINE]
    for j, r in enumerate(reps):
        body = r.to_csv().split("\n", 1)[1]
        if j:
            body = body.split("\n", 1)[1]
        out.append(body)
    return "".join(out)


def cmd_vdc(cfg) -> str:
    from .expsums import vdc_check

    _need(cfg["count"] * cfg["length"] * cfg["H"], cfg["budget"], "vdc")
    rng = make_rng(cfg["seed"])
    rows = []
    for i in range(cfg["count"]):
        r = np.sqrt(rng.random(cfg["length"]))
        a = r * np.exp(2j * np.pi * rng.random(cfg["length"]))
        lhs, rhs = vdc_check(a, cfg["H"])
        rows.append((i, lhs, rhs, lhs <= rhs + 1e-12))
    return _csv(["index", "lhs", "rhs", "ok"], rows)


def cmd_weyl(cfg) -> str:
    from .expsums import IntPolynomial, weyl_difference_avg, weyl_sum

    rows = []
    for text in cfg["P"]:
        P = IntPolynomial.parse(text)
        for q in sorted(cfg["q"]):
            _need(q ** max(1, cfg["n"] + 1), cfg["budget"], "weyl")
            s = abs(weyl_sum(P, q)) / q
            diff = weyl_difference_avg(P, q, cfg["n"]) if cfg["n"] else ""
            rows.append((text, q, s, cfg["n"], diff))
    return _csv(["P", "q", "abs_sum_over_q", "n", "difference_avg"], rows)


COMMANDS = {
    "decompose": cmd_decompose,
    "residues": cmd_residues,
    "lemma-count": cmd_lemma_count,
    "char-sums": cmd_char_sums,
    "cf": cmd_cf,
    "rigidity": cmd_rigidity,
    "orbit": cmd_orbit,
    "vdc": cmd_vdc,
    "weyl": cmd_weyl,
}


def run(command: str, cfg: dict) -> str:
    return COMMANDS[command](cfg)


def main(argv=None) -> int:
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    try:
        cfg = resolve_config(command, args, config_path)
        text = run(command, cfg)
    except ConfigError as exc:
        print(f"sparse-orbit {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"sparse-orbit {command}: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PrecisionError as exc:
        print(f"sparse-orbit {command}: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except ValueError as exc:
        print(f"sparse-orbit {command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg["out"] == "-":
        sys.stdout.write(text)
    else:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
