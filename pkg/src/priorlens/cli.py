"""Command-line entry point: `priorlens sample ...` and `priorlens analyze <mode> ...`.

Exit codes: 0 ok, 1 runtime/model error, 2 bad flags, 3 I/O failure.
Every emitted table starts with `# key=value` metadata lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import gp_t_distribution, infinitesimal_bias_law, uniform_law
from .complexity import k_lz
from .conditions import build_condition_tree
from .estimator import entropy_standard_error, mean_entropy, rank_curve, zipf_fit
from .expressivity import build_multi_layer, build_one_hidden, network_to_dict, verify
from .hypercube import OutputPattern, build_input_set, entropy_of_t, load_input_set
from .netsample import NetSpec, WeightLaw, run_campaign
from .oracle import class_sizes, enumerate_threshold_patterns, read_patterns, write_patterns

EXIT_RUNTIME, EXIT_USAGE, EXIT_IO = 1, 2, 3


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


# ---- config file --------------------------------------------------------------

def read_config(path: str) -> list[str]:
    """key=value lines -> ['--key', 'value', ...]; '#' starts a comment; 'true' marks a bare flag."""
    tokens = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() == "true":
                tokens.append(flag)
            elif value.lower() != "false":
                tokens += [flag, value]
    return tokens


def _split_config(argv: list[str]) -> tuple[list[str], str | None]:
    out, cfg, i = [], None, 0
    while i < len(argv):
        a = argv[i]
        if a == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            cfg = argv[i + 1]
            i += 2
            continue
        if a.startswith("--config="):
            cfg = a.split("=", 1)[1]
        else:
            out.append(a)
        i += 1
    return out, cfg


def _inject(argv: list[str], tokens: list[str]) -> list[str]:
    """Place config tokens right after the leading positionals so explicit flags win."""
    k = 0
    while k < len(argv) and not argv[k].startswith("-") and k < 2:
        k += 1
    return argv[:k] + tokens + argv[k:]


# ---- parsing helpers ----------------------------------------------------------

def parse_int_list(text: str) -> list[int]:
    """'0..8' (inclusive), '1,2,4', or a mix like '0..3,6'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _int_list(text: str) -> list[int]:
    try:
        return parse_int_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _inputs(args):
    spec = args.inputs
    if spec in ("hypercube01", "hypercube±1", "hypercube_pm1", "hypercubepm1"):
        sub = (args.subsample, args.seed if args.seed is not None else 0) if getattr(args, "subsample", None) else None
        return build_input_set(args.n, spec, subsample=sub)
    inp = load_input_set(spec)
    if args.n is not None and inp.n != args.n:
        raise UsageError(f"input file has dimension {inp.n}, --n says {args.n}")
    return inp


def _header(meta: dict) -> str:
    lines = []
    for k, v in meta.items():
        if isinstance(v, (dict, list, tuple)):
            v = json.dumps(v, sort_keys=True, separators=(",", ":"))
        lines.append(f"# {k}={v}\n")
    return "".join(lines)


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv(meta: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _base_meta(args, **extra) -> dict:
    d = {"version": __version__}
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "shards", None) is not None:
        d["shards"] = args.shards
    d.update(extra)
    return d


# ---- sample ---------------------------------------------------------------------

def _netspec(args) -> NetSpec:
    law = WeightLaw(kind=args.dist, scale=args.sigma_w,
                    bias=args.bias_dist if args.sigma_b > 0 else "none",
                    bias_scale=args.sigma_b, scaling=args.scaling)
    if args.arch == "perceptron":
        if args.widths:
            raise UsageError("--widths is only valid with --arch mlp")
        if args.n is None:
            raise UsageError("--n is required")
        # a perceptron has no hidden layer, so fan-in scaling would only rescale the whole output
        law = WeightLaw(kind=args.dist, scale=args.sigma_w, bias=law.bias,
                        bias_scale=args.sigma_b, scaling="none")
        return NetSpec((args.n, 1), args.act or "linear", law)
    if not args.widths:
        raise UsageError("--arch mlp needs --widths, e.g. 7,64,1")
    widths = tuple(int(w) for w in args.widths.split(","))
    if args.n is not None and widths[0] != args.n:
        raise UsageError(f"--widths starts with {widths[0]} but --n is {args.n}")
    args.n = widths[0]
    return NetSpec(widths, args.act or "relu", law)


def cmd_sample(args) -> int:
    spec = _netspec(args)
    inputs = _inputs(args)
    res = run_campaign(spec, inputs, args.samples, args.seed, shards=args.shards)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = res.metadata()
    meta["cutoff"] = args.cutoff

    (out / "campaign.json").write_text(json.dumps(dict(res.to_json_dict(), cutoff=args.cutoff),
                                                  indent=2, sort_keys=True) + "\n")
    h = res.thist
    probs = h.probabilities()
    (out / "thist.csv").write_text(_csv(meta, ["t", "count", "probability"],
                                        [(t, int(c), fmt(p)) for t, (c, p) in enumerate(zip(h.counts, probs))]))
    rc = rank_curve(res.freq, cutoff=args.cutoff)
    pats = rc.patterns()
    (out / "rank.csv").write_text(_csv(meta, ["rank", "probability", "pattern"],
                                       [(int(r), fmt(p), q.hex()) for r, p, q in zip(rc.ranks, rc.probabilities, pats)]))
    m = inputs.m
    rows = []
    for q, p in zip(pats, rc.probabilities):
        rows.append((q.hex(), q.t, fmt(entropy_of_t(q.t, m)), fmt(k_lz(q)), fmt(p)))
    (out / "patterns.csv").write_text(_csv(meta, ["pattern", "t", "H", "K_LZ", "probability"], rows))
    print(f"wrote {out}/campaign.json thist.csv rank.csv patterns.csv "
          f"({len(res.freq)} distinct patterns, {len(rc)} above cutoff)")
    return 0


# ---- analyze modes --------------------------------------------------------------

def cmd_gp_depth(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    inputs = _inputs(args)
    rows = []
    for L in args.layers:
        h = gp_t_distribution(inputs, L, args.sigma_w, args.sigma_b, args.mc_samples, args.seed + L,
                              activation=args.act, shards=args.shards)
        p = h.probabilities()
        rows.append((L, fmt(mean_entropy(h)), fmt(entropy_standard_error(h)), fmt(p[0]),
                     fmt(np.sqrt(p[0] * (1 - p[0]) / h.samples))))
    meta = _base_meta(args, mode="gp-depth", n=inputs.n, inputs=inputs.label, activation=args.act,
                      sigma_w=args.sigma_w, sigma_b=args.sigma_b, mc_samples=args.mc_samples,
                      seed_rule="seed+L")
    _emit(_csv(meta, ["L", "mean_entropy", "entropy_se", "p_t0", "p_t0_se"], rows), args.out)
    return 0


def cmd_laws(args) -> int:
    law = uniform_law(args.n) if args.law == "uniform" else infinitesimal_bias_law(args.n)
    meta = _base_meta(args, mode="laws", law=args.law, n=args.n)
    _emit(_csv(meta, ["t", "probability"], [(t, fmt(p)) for t, p in enumerate(law)]), args.out)
    return 0


def read_rank_csv(path) -> tuple[np.ndarray, np.ndarray]:
    ranks, probs = [], []
    with open(path) as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header is None:
            raise ValueError(f"{path}: empty rank file")
        try:
            ir, ip = header.index("rank"), header.index("probability")
        except ValueError:
            raise ValueError(f"{path}: needs 'rank' and 'probability' columns") from None
        for row in rows:
            if row:
                ranks.append(float(row[ir]))
                probs.append(float(row[ip]))
    return np.array(ranks), np.array(probs)


def cmd_zipf(args) -> int:
    ranks, probs = read_rank_csv(args.input)
    fit = zipf_fit((ranks, probs))
    d = dict(fit.to_dict(), source=str(args.input), version=__version__)
    _emit(json.dumps(d, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_conditions(args) -> int:
    tree = build_condition_tree(args.n, args.t)
    if args.format == "json":
        text = tree.to_json(indent=2) + "\n"
    else:
        text = _header(_base_meta(args, mode="conditions", n=args.n, t=args.t)) + tree.render() + "\n"
    _emit(text, args.out)
    return 0


def cmd_expressivity(args) -> int:
    m = 2**args.n
    if args.pattern:
        pats = [OutputPattern.from_string(args.pattern)]
        if pats[0].m != m:
            raise UsageError(f"pattern has {pats[0].m} bits, expected {m}")
    elif args.input:
        pats = read_patterns(args.input, m)
    else:
        raise UsageError("give --pattern or --in")
    nets, failed = [], 0
    for p in pats:
        spec, params = build_one_hidden(p, args.n) if args.layers == 0 else build_multi_layer(p, args.n, args.layers)
        ok = verify(spec, params, p)
        failed += not ok
        if args.out:
            nets.append(dict(network_to_dict(spec, params, p), verified=ok))
    if args.out:
        Path(args.out).write_text(json.dumps({"version": __version__, "n": args.n, "layers": args.layers,
                                              "networks": nets}) + "\n")
    print(f"compiled {len(pats)} patterns, {len(pats) - failed} verified, {failed} failed")
    return 0 if failed == 0 else EXIT_RUNTIME


def cmd_oracle(args) -> int:
    inputs = _inputs(args)
    pats = enumerate_threshold_patterns(inputs, with_bias=args.bias, t=args.t)
    if args.patterns_out:
        write_patterns(args.patterns_out, pats, inputs.m)
    sizes = class_sizes(pats)
    meta = _base_meta(args, mode="oracle", n=inputs.n, inputs=inputs.label, bias=args.bias,
                      total=len(pats))
    _emit(_csv(meta, ["t", "size"], sorted(sizes.items())), args.out)
    return 0


# ---- parser -----------------------------------------------------------------------

def _add_inputs(p):
    p.add_argument("--n", type=int, help="input dimension")
    p.add_argument("--inputs", default="hypercube01",
                   help="hypercube01, hypercube±1 (alias hypercube_pm1), or a comma-separated point file")
    p.add_argument("--subsample", type=int, help="random subset of hypercube points (drawn from --seed)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="priorlens", description="Priors over Boolean functions of random networks.")
    ap.add_argument("--version", action="version", version=f"priorlens {__version__}")
    ap.add_argument("--config", help="key=value file; explicit flags override it")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="Monte Carlo campaign over random networks")
    _add_inputs(s)
    s.add_argument("--arch", choices=("perceptron", "mlp"), default="perceptron")
    s.add_argument("--widths", help="comma-separated layer widths incl. input and output, e.g. 7,64,1")
    s.add_argument("--act", choices=("relu", "tanh", "erf", "linear"))
    s.add_argument("--dist", choices=("gaussian", "uniform"), default="gaussian")
    s.add_argument("--sigma-w", type=float, default=1.0)
    s.add_argument("--sigma-b", type=float, default=0.0)
    s.add_argument("--bias-dist", choices=("gaussian", "uniform"), default="gaussian")
    s.add_argument("--scaling", choices=("none", "fan_in", "sqrt_fan_in"), default="fan_in")
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--shards", type=int, default=1)
    s.add_argument("--cutoff", type=int, default=2, help="rank/pattern CSVs keep counts > cutoff")
    s.add_argument("--out", default="campaign_out")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze", help="analytic and exact analyses")
    modes = a.add_subparsers(dest="mode", required=True)

    g = modes.add_parser("gp-depth", help="infinite-width (NNGP) prior over depth")
    _add_inputs(g)
    g.add_argument("--layers", type=_int_list, default=list(range(9)), help="e.g. 0..8")
    g.add_argument("--sigma-w", type=float, default=1.0)
    g.add_argument("--sigma-b", type=float, default=0.0)
    g.add_argument("--act", choices=("relu", "tanh", "erf", "linear"), default="relu")
    g.add_argument("--mc-samples", type=int, default=100_000)
    g.add_argument("--seed", type=int)
    g.add_argument("--shards", type=int, default=1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gp_depth)

    lw = modes.add_parser("laws", help="closed-form P(T=t)")
    lw.add_argument("--n", type=int, required=True)
    lw.add_argument("--law", choices=("uniform", "infinitesimal-bias"), default="uniform")
    lw.add_argument("--out")
    lw.set_defaults(func=cmd_laws)

    z = modes.add_parser("zipf", help="fit a rank CSV to a power law")
    z.add_argument("--in", dest="input", required=True)
    z.add_argument("--out")
    z.set_defaults(func=cmd_zipf)

    c = modes.add_parser("conditions", help="decision tree of magnitude conditions for fixed t")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--out")
    c.set_defaults(func=cmd_conditions)

    e = modes.add_parser("expressivity", help="compile truth tables into ReLU nets and verify")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--pattern", help="bit string in input order")
    e.add_argument("--in", dest="input", help="hex pattern file ('# m=' header)")
    e.add_argument("--layers", type=int, default=0, help="0: single hidden layer of clauses; l>=1: l-layer form")
    e.add_argument("--out", help="JSON file of compiled networks")
    e.set_defaults(func=cmd_expressivity)

    o = modes.add_parser("oracle", help="exact threshold-pattern enumeration and |F_t|")
    _add_inputs(o)
    o.add_argument("--bias", action="store_true")
    o.add_argument("--t", type=int, help="restrict to one class")
    o.add_argument("--patterns-out", help="write the pattern set as hex lines")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle, seed=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv, cfg = _split_config(argv)
        if cfg:
            argv = _inject(argv, read_config(cfg))
    except UsageError as e:
        ap.print_usage(sys.stderr)
        print(f"priorlens: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"priorlens: cannot read config: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    if getattr(args, "shards", None) is not None:
        if args.shards < 1:
            print("priorlens: error: --shards must be >= 1", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"priorlens: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"priorlens: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as e:
        print(f"priorlens: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
