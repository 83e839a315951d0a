"""Command-line front end.

Model files are line based::

    [levels]
    g = 0.0
    e = 1.0

    [modes]
    c = 0.8

    [couplings]
    g -> e via c = 0.02      # |e><g| a_c plus its conjugate

    [continuum k]
    envelope = gaussian 0.05 0.75 0.05   # g0 center width  (or: flat g0)
    support = 0.45 1.05
    nodes = 100
    transition = alpha -> beta

    [policy]
    T = 1000
    kappa = 0.1

A ``[preset]`` section (``name = jc`` plus parameter overrides) may replace
the model sections.  ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass, replace

from .diagrams import combinatorial_bound, enumerate_order_n, render_diagram
from .elimination import EliminationPolicy, assemble_effective
from .model import (
    PRESETS,
    BosonMode,
    ContinuumFamily,
    FlatEnvelope,
    GaussianEnvelope,
    InteractionModel,
    MatterLevel,
    ModelValidationError,
    _with_partners,
    build_preset,
    discretize_continuum,
    validate_model,
)

__all__ = ["ModelFileError", "RunConfig", "parse_model_file", "parse_model_text", "run_pipeline", "main"]

_SECTIONS = ("preset", "levels", "modes", "couplings", "continuum", "policy")
_POLICY_KEYS = {
    "T": float, "kappa": float, "eps_deg": float, "pv_window": float, "theta_default": float,
    "drop_renormalization": lambda v: _parse_bool(v),
}


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _number(v: str, lineno: int, what: str, kind=float):
    try:
        return kind(v.strip().replace(" ", ""))
    except ValueError:
        raise ModelFileError(f"{what}: cannot parse {v.strip()!r} as a number", lineno) from None


def _sections(text: str):
    """Split into ``[(section, arg, [(lineno, key, value)...])]``."""
    out = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ModelFileError("unterminated section header", lineno)
            head = line[1:-1].split()
            if not head or head[0] not in _SECTIONS:
                raise ModelFileError(f"unknown section {line!r}", lineno)
            if head[0] == "continuum" and len(head) != 2:
                raise ModelFileError("continuum section needs a name: [continuum NAME]", lineno)
            if head[0] != "continuum" and len(head) != 1:
                raise ModelFileError(f"unexpected text in section header {line!r}", lineno)
            cur = (head[0], head[1] if len(head) > 1 else None, [], lineno)
            out.append(cur)
            continue
        if cur is None:
            raise ModelFileError("entry outside of any section", lineno)
        if "=" not in line:
            raise ModelFileError(f"expected 'key = value', got {line!r}", lineno)
        key, value = line.rsplit("=", 1) if cur[0] == "couplings" else line.split("=", 1)
        cur[2].append((lineno, key.strip(), value.strip()))
    return out


def _transition(text: str, lineno: int, levels: dict):
    parts = text.split("->")
    if len(parts) != 2:
        raise ModelFileError(f"expected 'LEVEL -> LEVEL', got {text!r}", lineno)
    a, b = parts[0].strip(), parts[1].strip()
    for name in (a, b):
        if name not in levels:
            raise ModelFileError(f"dangling level id {name!r}", lineno)
    return levels[a], levels[b]


def _envelope(value: str, lineno: int):
    tok = value.split()
    if not tok:
        raise ModelFileError("continuum.envelope is empty", lineno)
    kind, args = tok[0].lower(), tok[1:]
    nums = [_number(a, lineno, "continuum.envelope") for a in args]
    if kind == "gaussian" and len(nums) == 3:
        if nums[2] <= 0:
            raise ModelFileError("continuum.envelope width must be > 0", lineno)
        return GaussianEnvelope(*nums)
    if kind == "flat" and len(nums) == 1:
        return FlatEnvelope(nums[0])
    raise ModelFileError("continuum.envelope must be 'gaussian G0 CENTER WIDTH' or 'flat G0'", lineno)


def parse_model_text(text: str, name: str = "model"):
    """Parse model-file text into ``(InteractionModel, EliminationPolicy)``."""
    secs = _sections(text)
    policy_kw = {}
    preset = None
    levels_raw, modes_raw, couplings_raw, continua_raw = [], [], [], []
    seen = set()
    for sec, arg, entries, lineno in secs:
        tag = (sec, arg)
        if tag in seen:
            raise ModelFileError(f"duplicate section [{sec}{' ' + arg if arg else ''}]", lineno)
        seen.add(tag)
        if sec == "policy":
            for ln, k, v in entries:
                if k not in _POLICY_KEYS:
                    raise ModelFileError(f"unknown key policy.{k}", ln)
                try:
                    policy_kw[k] = _POLICY_KEYS[k](v)
                except ValueError:
                    raise ModelFileError(f"policy.{k}: cannot parse {v!r}", ln) from None
        elif sec == "preset":
            preset = entries
        elif sec == "levels":
            levels_raw = entries
        elif sec == "modes":
            modes_raw = entries
        elif sec == "couplings":
            couplings_raw = entries
        else:
            continua_raw.append((arg, entries, lineno))
    policy = EliminationPolicy(**policy_kw)

    if preset is not None:
        if levels_raw or modes_raw or couplings_raw or continua_raw:
            raise ModelFileError("[preset] cannot be combined with explicit model sections")
        params = {}
        pname = None
        for ln, k, v in preset:
            if k == "name":
                pname = v
                continue
            vals = v.split()
            if len(vals) > 1:
                params[k] = [_number(x, ln, f"preset.{k}", complex if "j" in x else float) for x in vals]
            elif k in ("N",):
                params[k] = _number(v, ln, f"preset.{k}", int)
            elif v.lower() in ("true", "false"):
                params[k] = _parse_bool(v)
            else:
                params[k] = _number(v, ln, f"preset.{k}", complex if "j" in v else float)
        if pname is None:
            raise ModelFileError("preset.name is required")
        try:
            model = build_preset(pname, params)
        except (ValueError, KeyError, TypeError) as exc:
            raise ModelFileError(f"preset: {exc}") from None
        _check_pv(model, policy)
        return model, policy

    if not levels_raw:
        raise ModelFileError("missing [levels] section")
    levels, ids = [], {}
    for ln, k, v in levels_raw:
        if k in ids:
            raise ModelFileError(f"duplicate level {k!r}", ln)
        ids[k] = len(levels)
        levels.append(MatterLevel(len(levels), k, _number(v, ln, f"levels.{k}")))
    modes, mode_ids = [], {}
    for ln, k, v in modes_raw:
        if k in mode_ids:
            raise ModelFileError(f"duplicate mode label {k!r}", ln)
        mode_ids[k] = len(modes)
        modes.append(BosonMode(k, _number(v, ln, f"modes.{k}")))
    pairs = []
    for ln, k, v in couplings_raw:
        if " via " not in k:
            raise ModelFileError(f"expected 'LEVEL -> LEVEL via MODE = g', got {k!r}", ln)
        trans, mode = k.rsplit(" via ", 1)
        mode = mode.strip()
        if mode not in mode_ids:
            raise ModelFileError(f"unknown mode {mode!r}", ln)
        a, b = _transition(trans, ln, ids)
        pairs.append((a, b, mode_ids[mode], False, _number(v, ln, "couplings", complex)))
    continua = []
    for cname, entries, lineno in continua_raw:
        fields = {}
        transitions = []
        for ln, k, v in entries:
            if k == "transition":
                transitions.append((_transition(v, ln, ids), ln))
            elif k in ("envelope", "support", "nodes"):
                fields[k] = (ln, v)
            else:
                raise ModelFileError(f"unknown key continuum.{k}", ln)
        for req in ("envelope", "support", "nodes"):
            if req not in fields:
                raise ModelFileError(f"continuum {cname}: missing field continuum.{req}", lineno)
        env = _envelope(fields["envelope"][1], fields["envelope"][0])
        ln, sv = fields["support"]
        sup = [_number(x, ln, "continuum.support") for x in sv.split()]
        if len(sup) != 2 or not sup[1] > sup[0]:
            raise ModelFileError("continuum.support must be 'LOW HIGH' with LOW < HIGH", ln)
        nodes = _number(fields["nodes"][1], fields["nodes"][0], "continuum.nodes", int)
        if nodes < 1:
            raise ModelFileError("continuum.nodes must be >= 1", fields["nodes"][0])
        if not transitions:
            raise ModelFileError(f"continuum {cname}: needs at least one 'transition'", lineno)
        try:
            new, gk = discretize_continuum(env, sup, nodes, sigma=cname)
        except ValueError as exc:
            raise ModelFileError(f"continuum {cname}: {exc}", lineno) from None
        idx = list(range(len(modes), len(modes) + len(new)))
        modes.extend(new)
        fam_trans = []
        for (a, b), ln in transitions:
            lo, hi = (a, b) if levels[a].omega < levels[b].omega else (b, a)
            fam_trans.append((lo, hi))
            for mi, g in zip(idx, gk):
                pairs.append((a, b, mi, False, complex(g)))
        continua.append(ContinuumFamily(cname, env, tuple(sup), nodes, tuple(fam_trans), tuple(idx)))
    try:
        model = validate_model(
            InteractionModel(tuple(levels), tuple(modes), tuple(_with_partners(pairs)), tuple(continua), name=name)
        )
    except ModelValidationError as exc:
        raise ModelFileError(f"invalid model: {exc}") from None
    _check_pv(model, policy)
    return model, policy


def _check_pv(model, policy):
    if model.continua and policy.pv_window is not None and policy.pv_window <= 0:
        raise ModelFileError("policy.pv_window must be > 0")


def parse_model_file(path: str):
    if not os.path.isfile(path):
        raise ModelFileError(f"model file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_model_text(text, name=name)


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str
    order: int = 1
    T: float | None = None
    kappa: float | None = None
    format: str = "text"
    diagrams_dir: str | None = None
    verify: bool = False
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")


def _load(cfg: RunConfig):
    if os.path.isfile(cfg.model):
        model, policy = parse_model_file(cfg.model)
    elif cfg.model in PRESETS:
        model, policy = build_preset(cfg.model), EliminationPolicy()
    else:
        raise ModelFileError(f"model file not found and not a preset: {cfg.model}")
    over = {}
    if cfg.T is not None:
        over["T"] = cfg.T
    if cfg.kappa is not None:
        over["kappa"] = cfg.kappa
    if over:
        policy = replace(policy, **over)
    return model, policy


def _emit(text: str, cfg: RunConfig):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_diagrams(model, order, directory):
    os.makedirs(directory, exist_ok=True)
    written = []
    for n in range(1, order + 1):
        for d in enumerate_order_n(model, n):
            path = os.path.join(directory, f"{model.name}_{d.id}.dot")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(render_diagram(d, "dot"))
            written.append(path)
    return written


def _weight_checks(model, order, seed, draws=5):
    """Random closed-form vs nested-quadrature weight comparisons (regulator-free)."""
    from .oracle import quadrature_weight
    from .weights import canonical_weight, placements

    rng = random.Random(seed)
    worst = 0.0
    rows = []
    for n in range(1, order + 1):
        classes = enumerate_order_n(model, n)
        for _ in range(draws):
            d = rng.choice(classes)
            s = rng.choice(d.strings)
            pl = rng.choice(placements(n))
            t = rng.uniform(0.1, 10.0)
            a = complex(canonical_weight(s, pl, limit=True)(t))
            b = quadrature_weight(s, pl, t, regulated=False)
            err = abs(a - b) / max(abs(b), 1e-300)
            worst = max(worst, err)
            rows.append({"order": n, "class": d.id, "placement": list(pl.order), "t": t, "rel_error": err})
    return worst, rows


def _report_line(r) -> str:
    if r.observable == "spectrum":
        head = f"spectrum: max level mismatch={r.abs_error:.3e}"
    else:
        head = f"{r.observable}: exact={r.exact:.9e} effective={r.effective:.9e} abs_error={r.abs_error:.3e}"
    return f"{head} expected<={r.expected_error:.3e}"


def run_pipeline(cfg: RunConfig) -> int:
    model, policy = _load(cfg)
    status = 0
    if cfg.command == "derive":
        H = assemble_effective(model, cfg.order, policy)
        doc = H.to_dict() if cfg.format == "json" else None
        text = json.dumps(doc, indent=2) + "\n" if doc is not None else H.to_text()
        if cfg.verify:
            from .oracle import compare_effective_vs_exact

            reports = compare_effective_vs_exact(model, policy, order=cfg.order, H_eff=H)
            if doc is not None:
                doc["verification"] = [r.to_dict() for r in reports]
                text = json.dumps(doc, indent=2) + "\n"
            else:
                text += "verification:\n" + "".join(
                    f"  {_report_line(r)} {'ok' if r.passed else 'FAIL'}\n" for r in reports)
            if not all(r.passed for r in reports):
                status = 2
        _emit(text, cfg)
    elif cfg.command == "diagrams":
        chunks = []
        doc = {"model": model.name, "orders": []}
        for n in range(1, cfg.order + 1):
            classes = enumerate_order_n(model, n)
            doc["orders"].append({
                "order": n,
                "classes": [
                    {"id": d.id, "strings": len(d.strings), "closed_loop": d.closed_loop,
                     "final_detuning": d.final_detuning, "canonical": d.canonical.label()}
                    for d in classes
                ],
            })
            chunks.append(f"order {n}: {len(classes)} classes\n")
            chunks.extend(render_diagram(d, "text") for d in classes)
        _emit(json.dumps(doc, indent=2) + "\n" if cfg.format == "json" else "".join(chunks), cfg)
    elif cfg.command == "verify":
        from .oracle import compare_effective_vs_exact

        reports = compare_effective_vs_exact(model, policy, order=cfg.order)
        worst, rows = _weight_checks(model, min(cfg.order, 3), cfg.seed)
        ok = all(r.passed for r in reports) and worst < 1e-8
        if cfg.format == "json":
            doc = {"model": model.name, "seed": cfg.seed, "reports": [r.to_dict() for r in reports],
                   "weight_checks": rows, "weight_worst_rel_error": worst, "passed": ok}
            text = json.dumps(doc, indent=2) + "\n"
        else:
            text = "".join(
                f"{_report_line(r)} truncation_change={r.truncation_change:.1e} "
                f"{'ok' if r.passed else 'FAIL'}\n" for r in reports)
            text += f"weights: {len(rows)} random checks, worst relative error {worst:.2e} " \
                    f"{'ok' if worst < 1e-8 else 'FAIL'}\n"
        _emit(text, cfg)
        status = 0 if ok else 2
    elif cfg.command == "bounds":
        rows = []
        ok = True
        for n in range(1, cfg.order + 1):
            classes = enumerate_order_n(model, n)
            b = combinatorial_bound(model.M, n)
            n_str = sum(len(d.strings) for d in classes)
            row = {"order": n, "M": model.M, "classes": len(classes), "strings": n_str, **b}
            within = len(classes) <= b["diagrams"] and n_str <= b["operators"]
            tight = b.get("first_order_tight", b.get("second_order_tight"))
            if tight is not None:
                within = within and len(classes) <= tight
            row["within_bounds"] = within
            ok = ok and within
            rows.append(row)
        if cfg.format == "json":
            text = json.dumps({"model": model.name, "rows": rows}, indent=2) + "\n"
        else:
            text = "".join(
                f"n={r['order']} M={r['M']}: classes={r['classes']} (bound {r['diagrams']}"
                + (f", tight {r.get('first_order_tight', r.get('second_order_tight'))}"
                   if 'first_order_tight' in r or 'second_order_tight' in r else "")
                + f") strings={r['strings']} (bound {r['operators']}) "
                + ("ok" if r["within_bounds"] else "EXCEEDED") + "\n" for r in rows)
        _emit(text, cfg)
        status = 0 if ok else 2
    else:
        raise ValueError(f"unknown command {cfg.command!r}")
    if cfg.diagrams_dir:
        _write_diagrams(model, cfg.order, cfg.diagrams_dir)
    return status


def _provenance(exc) -> str:
    tb = exc.__traceback__
    mod = "cli"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("jlmdiag."):
            mod = name.split(".", 1)[1]
        tb = tb.tb_next
    return mod


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jlmdiag", description="Diagrammatic effective Hamiltonians for light-matter models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("derive", "assemble the effective Hamiltonian"),
                        ("diagrams", "enumerate and render diagram classes"),
                        ("verify", "compare against the exact oracles"),
                        ("bounds", "check class counts against combinatorial bounds")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--model", required=True, help="model file, or a preset name")
        sp.add_argument("--order", type=int, default=1)
        sp.add_argument("--T", type=float, default=None)
        sp.add_argument("--kappa", type=float, default=None)
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--diagrams-dir", default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        if name == "derive":
            sp.add_argument("--verify", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command, model=args.model, order=args.order, T=args.T, kappa=args.kappa,
            format=args.format, diagrams_dir=args.diagrams_dir, verify=getattr(args, "verify", False),
            seed=args.seed, out=args.out,
        )
        return run_pipeline(cfg)
    except ModelFileError as exc:
        sys.stderr.write(f"jlmdiag: model file: {exc}\n")
    except ModelValidationError as exc:
        sys.stderr.write(f"jlmdiag: model: {exc}\n")
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(f"jlmdiag: {_provenance(exc)}: {exc}\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
