"""Command-line front end.

Subcommands: lr (single-source / criminal / subpopulation cases), mixture
(deterministic mixtures and the two-contributor network), pedigree
(paternity and sibling-paternity cases), bn (infer / ci on raw network
documents), glass (refractive-index Welch test), and scale (verbal-scale
lookup). Case files are JSON documents with "kind", "payload", and optional
"output" sections; relative paths inside a payload resolve against the case
file's directory.

Exit codes: 0 success, 1 usage, 2 validation (with the offending location),
3 compute. Reports are deterministic: rerunning a case byte-identically
reproduces the JSON output (Monte Carlo paths are gated by --seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bayesnet, mixture, oobn, report, trace
from .errors import (
    BothZero,
    EvlrError,
    ImpossibleEvidence,
    MalformedCase,
    NotPolytree,
    StateSpaceTooLarge,
    TooManyContributors,
    TooManyDraws,
)
from .evaluation import (
    HypothesisPair,
    LRValue,
    PropositionLevel,
    SCALES,
    likelihood_ratio,
    single_source_lr,
)
from .genetics import Profile, resolve_theta
from .population import load_frequency_table

USAGE_EXIT = 1
VALIDATION_EXIT = 2
COMPUTE_EXIT = 3

_COMPUTE_ERRORS = (
    BothZero,
    ImpossibleEvidence,
    NotPolytree,
    StateSpaceTooLarge,
    TooManyContributors,
    TooManyDraws,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# case-file plumbing
# ---------------------------------------------------------------------------

def _load_case(path: str) -> tuple[dict, Path]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise MalformedCase(f"{p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedCase(f"{p}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise MalformedCase(f"{p}: case file needs a top-level \"kind\"")
    doc.setdefault("payload", {})
    doc.setdefault("output", {})
    return doc, p.parent


def _need(payload: dict, key: str, where: str):
    if key not in payload:
        raise MalformedCase(f"{where}: payload.{key} is required")
    return payload[key]


def _load_table(ref, base: Path, where: str):
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = base / path
        return load_frequency_table(path)
    if isinstance(ref, dict):
        return load_frequency_table(ref, provenance=f"{where} (inline)")
    raise MalformedCase(f"{where}: freq table must be a path or inline object")


def _profile(payload: dict, key: str, where: str) -> Profile:
    raw = _need(payload, key, where)
    try:
        return Profile.from_dict(raw)
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise MalformedCase(f"{where}: payload.{key}: {exc}") from exc


def _evidence_arg(values, where: str) -> dict:
    out = {}
    for item in values or ():
        if "=" not in item:
            raise MalformedCase(f"{where}: evidence must be NODE=STATE, got {item!r}")
        node, state = item.split("=", 1)
        out[node] = state
    return out


def _hypotheses(payload: dict, where: str) -> HypothesisPair | None:
    raw = payload.get("hypotheses")
    if raw is None:
        return None
    try:
        level = PropositionLevel(raw.get("level", "source").lower())
    except ValueError:
        raise MalformedCase(
            f"{where}: payload.hypotheses.level must be offense/activity/source"
        ) from None
    try:
        return HypothesisPair(h_p=raw["h_p"], h_d=raw["h_d"], level=level)
    except KeyError as exc:
        raise MalformedCase(f"{where}: payload.hypotheses needs {exc}") from exc


# ---------------------------------------------------------------------------
# subcommand handlers (each returns a report dict)
# ---------------------------------------------------------------------------

def _run_lr(args) -> dict:
    doc, base = _load_case(args.case)
    kind = doc["kind"]
    payload = doc["payload"]
    where = args.case
    theta = args.theta if args.theta is not None else payload.get("theta", 0.0)
    extra = {}
    pair = _hypotheses(payload, where)
    if pair is not None:
        extra["hypotheses"] = {
            "h_p": pair.h_p, "h_d": pair.h_d, "level": pair.level.value,
        }

    if kind == "single_source":
        if "p_e_hp" in payload or "p_e_hd" in payload:
            lr = likelihood_ratio(
                float(_need(payload, "p_e_hp", where)),
                float(_need(payload, "p_e_hd", where)),
            )
            engine, table_name, theta_out = "analytic", None, None
        else:
            table = _load_table(
                args.freq or _need(payload, "freq_table", where), base, where
            )
            suspect = _profile(payload, "suspect_profile", where)
            lr = single_source_lr(suspect, table, resolve_theta(theta))
            engine, table_name = "analytic", table.provenance
            theta_out = resolve_theta(theta)
    elif kind == "criminal":
        if resolve_theta(theta) != 0.0:
            raise MalformedCase(
                f"{where}: the criminal network template draws founders "
                "independently (theta=0); use kind single_source for theta>0"
            )
        table = _load_table(
            args.freq or _need(payload, "freq_table", where), base, where
        )
        case = oobn.CaseSpec(
            kind="criminal",
            participants={
                "suspect": _profile(payload, "suspect_profile", where),
                "trace": _profile(payload, "trace_profile", where),
            },
            freqs=table,
            prior=float(payload.get("prior", 0.5)),
            founder=payload.get("founder", "iid"),
        )
        lr = oobn.criminal_case_lr(case)
        expanded = oobn.expand_case(case)
        engine, table_name, theta_out = expanded.engine_hint, table.provenance, None
        if args.dot:
            Path(args.dot).write_text(bayesnet.to_dot(expanded.network, expanded.evidence))
    elif kind == "subpopulation":
        if resolve_theta(theta) != 0.0:
            raise MalformedCase(
                f"{where}: the subpopulation template models co-ancestry "
                "through the indicator node, not theta"
            )
        tables = tuple(
            _load_table(t, base, where) for t in _need(payload, "tables", where)
        )
        case = oobn.CaseSpec(
            kind="subpopulation",
            participants={
                "suspect": _profile(payload, "suspect_profile", where),
                "trace": _profile(payload, "trace_profile", where),
            },
            freqs=tables[0],
            prior=float(payload.get("prior", 0.5)),
            subpop_tables=tables,
            subpop_weights=tuple(float(w) for w in _need(payload, "weights", where)),
        )
        lr = oobn.subpopulation_lr(case)
        expanded = oobn.expand_case(case)
        engine, theta_out = expanded.engine_hint, None
        table_name = ",".join(t.provenance for t in tables)
        extra["subpopulations"] = [t.subpopulation or "?" for t in tables]
        if args.dot:
            Path(args.dot).write_text(bayesnet.to_dot(expanded.network, expanded.evidence))
    else:
        raise MalformedCase(
            f"{where}: kind {kind!r} is not handled by 'lr' "
            "(expected single_source, criminal, or subpopulation)"
        )
    if args.dot and kind == "single_source":
        raise MalformedCase(f"{where}: single_source cases have no network to export")
    scale = args.scale or doc["output"].get("scale", "evett2000")
    return report.lr_report(
        lr, scale=scale, engine=engine, theta=theta_out,
        freq_table=table_name, extra=extra,
    )


def _mixture_hypothesis(spec: dict, profiles: dict, where: str) -> mixture.MixtureHypothesis:
    known = tuple(profiles[name] for name in spec.get("known", ()))
    return mixture.MixtureHypothesis(known=known, n_unknown=int(spec.get("n_unknown", 0)))


def _run_mixture(args) -> dict:
    doc, base = _load_case(args.case)
    kind = doc["kind"]
    payload = doc["payload"]
    where = args.case
    theta = resolve_theta(
        args.theta if args.theta is not None else payload.get("theta", 0.0)
    )
    table = _load_table(args.freq or _need(payload, "freq_table", where), base, where)
    scale = args.scale or doc["output"].get("scale", "evett2000")

    if kind == "mixture":
        observed = {
            m: tuple(a) for m, a in _need(payload, "observed", where).items()
        }
        profiles = {
            name: Profile.from_dict(p)
            for name, p in payload.get("profiles", {}).items()
        }
        try:
            hyp_p = _mixture_hypothesis(_need(payload, "hyp_p", where), profiles, where)
            hyp_d = _mixture_hypothesis(_need(payload, "hyp_d", where), profiles, where)
        except KeyError as exc:
            raise MalformedCase(f"{where}: hypothesis names unknown profile {exc}") from exc
        lr = mixture.mixture_lr(observed, hyp_p, hyp_d, table, theta)
        rmne = mixture.random_man_not_excluded(observed, table, theta)
        rep = report.lr_report(
            lr, scale=scale, engine="enumeration", theta=theta,
            freq_table=table.provenance,
        )
        rep["rmne"] = {
            "per_locus": {m: v for m, v in sorted(rmne.per_locus.items())},
            "combined": rmne.combined,
            "inclusion": rmne.inclusion,
        }
        if "peaks" in payload:
            peak_profile = mixture.PeakProfile.from_dict(payload["peaks"])
            rep["mixture_proportion"] = {
                m: peak_profile.proportion(m) for m in sorted(peak_profile.markers())
            }
        if "masking" in payload:
            spec = payload["masking"]
            rep["masking"] = mixture.masking_probability(
                int(_need(spec, "n_contributors", where)),
                table,
                _need(spec, "marker", where),
                int(_need(spec, "max_distinct", where)),
                method=spec.get("method", "auto"),
                n_samples=int(spec.get("n_samples", 1_000_000)),
                seed=args.seed,
            )
        return rep

    if kind == "mixture_network":
        if theta != 0.0:
            raise MalformedCase(
                f"{where}: the mixture network template draws founders "
                "independently (theta=0); use kind mixture for theta>0"
            )
        observed = {
            m: tuple(a) for m, a in _need(payload, "observed", where).items()
        }
        case = oobn.CaseSpec(
            kind="mixture_network",
            participants={
                "suspect": _profile(payload, "suspect_profile", where),
                "victim": _profile(payload, "victim_profile", where),
            },
            freqs=table,
            prior=float(payload.get("prior", 0.5)),
            observed_alleles=observed,
            hyp_p_cell=tuple(payload.get("hyp_p_cell", (True, True))),
            hyp_d_cell=tuple(payload.get("hyp_d_cell", (False, True))),
        )
        lr = oobn.mixture_network_lr(case)
        expanded = oobn.expand_case(case)
        if args.dot:
            Path(args.dot).write_text(bayesnet.to_dot(expanded.network, expanded.evidence))
        return report.lr_report(
            lr, scale=scale, engine=expanded.engine_hint, theta=None,
            freq_table=table.provenance,
        )
    raise MalformedCase(
        f"{where}: kind {kind!r} is not handled by 'mixture' "
        "(expected mixture or mixture_network)"
    )


def _run_pedigree(args) -> dict:
    doc, base = _load_case(args.case)
    kind = doc["kind"]
    payload = doc["payload"]
    where = args.case
    if kind not in ("paternity", "sibling_paternity"):
        raise MalformedCase(
            f"{where}: kind {kind!r} is not handled by 'pedigree' "
            "(expected paternity or sibling_paternity)"
        )
    table = _load_table(args.freq or _need(payload, "freq_table", where), base, where)
    participants = {
        "mother": _profile(payload, "mother_profile", where),
        "child": _profile(payload, "child_profile", where),
    }
    if kind == "paternity":
        participants["putative_father"] = _profile(payload, "father_profile", where)
    else:
        participants["sibling"] = _profile(payload, "sibling_profile", where)
    case = oobn.CaseSpec(
        kind=kind,
        participants=participants,
        freqs=table,
        prior=float(payload.get("prior", 0.5)),
        mutation_rate=float(payload.get("mutation_rate", 0.0)),
    )
    lr = oobn.paternity_lr(case)
    expanded = oobn.expand_case(case)
    if args.dot:
        Path(args.dot).write_text(bayesnet.to_dot(expanded.network, expanded.evidence))
    scale = args.scale or doc["output"].get("scale", "evett2000")
    rep = report.lr_report(
        lr, scale=scale, engine=expanded.engine_hint,
        freq_table=table.provenance,
        extra={"mutation_rate": case.mutation_rate, "variant": kind},
    )
    return rep


def _load_network_arg(args, where: str):
    if getattr(args, "net", None):
        return bayesnet.network_from_json(args.net)
    raise MalformedCase(f"{where}: --net is required")


def _run_bn_infer(args) -> dict:
    if args.case:
        doc, base = _load_case(args.case)
        if doc["kind"] != "bn_query":
            raise MalformedCase(f"{args.case}: expected kind bn_query")
        payload = doc["payload"]
        ref = _need(payload, "network", args.case)
        if isinstance(ref, str):
            path = Path(ref)
            net = bayesnet.network_from_json(
                path if path.is_absolute() else base / path
            )
        else:
            net = bayesnet.network_from_json(ref)
        target = _need(payload, "target", args.case)
        evidence = payload.get("evidence", {})
    else:
        net = _load_network_arg(args, "bn infer")
        target = args.target
        evidence = _evidence_arg(args.evidence, "bn infer")
        if args.evidence_json:
            evidence.update(json.loads(args.evidence_json))
    if target is None:
        raise MalformedCase("bn infer: --target is required")
    issues = bayesnet.validate(net)
    if issues:
        raise issues[0]
    if bayesnet.is_polytree(net):
        engine = "propagate"
        post = bayesnet.propagate(net, evidence, target)
    else:
        print(
            "notice: network is not a polytree; falling back to exact enumeration",
            file=sys.stderr,
        )
        engine = "enumeration"
        post = bayesnet.enumerate_joint(net, evidence, target)
    if args.dot:
        Path(args.dot).write_text(bayesnet.to_dot(net, evidence))
    states = net.node(target).states
    return {
        "target": target,
        "posterior": {s: float(p) for s, p in zip(states, post)},
        "evidence": dict(evidence),
        "engine": engine,
    }


def _run_bn_ci(args) -> dict:
    if args.case:
        doc, base = _load_case(args.case)
        if doc["kind"] != "ci_query":
            raise MalformedCase(f"{args.case}: expected kind ci_query")
        payload = doc["payload"]
        ref = _need(payload, "network", args.case)
        if isinstance(ref, str):
            path = Path(ref)
            net = bayesnet.network_from_json(
                path if path.is_absolute() else base / path
            )
        else:
            net = bayesnet.network_from_json(ref)
        s = payload.get("s", [])
        t = payload.get("t", [])
        u = payload.get("u", [])
    else:
        net = _load_network_arg(args, "bn ci")
        split = lambda v: [x for x in (v or "").split(",") if x]
        s, t, u = split(args.s), split(args.t), split(args.u)
    if not s or not t:
        raise MalformedCase("bn ci: both --s and --t node sets are required")
    separated = bayesnet.conditionally_independent(net, s, t, u)
    return {
        "s": sorted(s),
        "t": sorted(t),
        "u": sorted(u),
        "verdict": "separated" if separated else "connected",
        "engine": "moralization",
    }


def _run_glass(args) -> dict:
    alternative = args.alternative
    if args.case:
        doc, base = _load_case(args.case)
        if doc["kind"] != "glass":
            raise MalformedCase(f"{args.case}: expected kind glass")
        payload = doc["payload"]

        def sample(key):
            raw = _need(payload, key, args.case)
            if isinstance(raw, str):
                path = Path(raw)
                return trace.read_ri_csv(path if path.is_absolute() else base / path)
            return tuple(float(v) for v in raw)

        control = trace.RISample("control", sample("control"))
        recovered = trace.RISample("recovered", sample("recovered"))
        alternative = payload.get("alternative", alternative)
    else:
        if not args.control or not args.recovered:
            raise MalformedCase("glass: --control and --recovered are required")
        control = trace.RISample("control", trace.read_ri_csv(args.control))
        recovered = trace.RISample("recovered", trace.read_ri_csv(args.recovered))
    res = trace.glass_ri_ttest(control, recovered, alternative)
    return {
        "t": res.t,
        "df": res.df,
        "p_value": res.p_value,
        "alternative": alternative,
        "degenerate": res.degenerate,
        "n_control": len(control.measurements),
        "n_recovered": len(recovered.measurements),
        "engine": "welch",
    }


def _run_scale(args) -> dict:
    edition = args.edition.lower()
    if edition not in SCALES:
        raise MalformedCase(f"unknown scale edition {args.edition!r}")
    lr = LRValue(float(args.lr))
    rep = report.lr_report(lr, scale=edition, engine="scale")
    del rep["per_marker"]
    return rep


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(p, case=True, freq=True, theta=True):
    if case:
        p.add_argument("--case", required=False, help="case file (JSON)")
    p.add_argument("--format", choices=("text", "json"), default=None)
    p.add_argument("--dot", default=None, help="write the expanded network as DOT")
    p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo paths")
    p.add_argument("--scale", default=None, help="verbal scale edition")
    if freq:
        p.add_argument("--freq", default=None, help="frequency table (overrides case)")
    if theta:
        p.add_argument("--theta", default=None, help="co-ancestry value or preset")


def build_parser() -> _Parser:
    parser = _Parser(prog="evlr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lr", help="single-source / criminal / subpopulation LR")
    _add_common(p)
    p.set_defaults(handler=_run_lr, requires_case=True)

    p = sub.add_parser("mixture", help="mixture LR, RMNE, masking")
    _add_common(p)
    p.set_defaults(handler=_run_mixture, requires_case=True)

    p = sub.add_parser("pedigree", help="paternity / sibling-paternity LR")
    _add_common(p)
    p.set_defaults(handler=_run_pedigree, requires_case=True)

    p = sub.add_parser("bn", help="raw network queries")
    bn_sub = p.add_subparsers(dest="bn_command", required=True)
    pi = bn_sub.add_parser("infer", help="posterior of a target node")
    pi.add_argument("--net", default=None, help="network document (JSON)")
    pi.add_argument("--target", default=None)
    pi.add_argument(
        "-e", "--evidence", action="append", metavar="NODE=STATE", default=[]
    )
    pi.add_argument("--evidence-json", default=None)
    _add_common(pi, freq=False, theta=False)
    pi.set_defaults(handler=_run_bn_infer, requires_case=False)
    pc = bn_sub.add_parser("ci", help="moralization separation verdict")
    pc.add_argument("--net", default=None)
    pc.add_argument("--s", default=None, help="comma-separated node set")
    pc.add_argument("--t", default=None, help="comma-separated node set")
    pc.add_argument("--u", default="", help="conditioning node set")
    _add_common(pc, freq=False, theta=False)
    pc.set_defaults(handler=_run_bn_ci, requires_case=False)

    p = sub.add_parser("glass", help="refractive-index Welch t-test")
    p.add_argument("--control", default=None, help="control readings CSV")
    p.add_argument("--recovered", default=None, help="recovered readings CSV")
    p.add_argument(
        "--alternative",
        choices=("two-sided", "greater", "less"),
        default="two-sided",
    )
    _add_common(p, freq=False, theta=False)
    p.set_defaults(handler=_run_glass, requires_case=False)

    p = sub.add_parser("scale", help="verbal category of an LR value")
    p.add_argument("--lr", required=True, type=float)
    p.add_argument("--edition", required=True, help="evett1987|evett1998|evett2000")
    p.add_argument("--format", choices=("text", "json"), default=None)
    p.set_defaults(handler=_run_scale, requires_case=False)
    return parser


def _output_format(args, doc_format=None) -> str:
    if getattr(args, "format", None):
        return args.format
    if doc_format:
        return doc_format
    return "text"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "requires_case", False) and not args.case:
        parser.error(f"{args.command}: --case is required")
    doc_format = None
    if getattr(args, "case", None):
        try:
            doc, _ = _load_case(args.case)
            doc_format = doc.get("output", {}).get("format")
        except MalformedCase as exc:
            print(f"error: {exc}", file=sys.stderr)
            return VALIDATION_EXIT
    try:
        rep = args.handler(args)
    except _COMPUTE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return COMPUTE_EXIT
    except EvlrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    fmt = _output_format(args, doc_format)
    text = report.render_json(rep) if fmt == "json" else report.render_text(rep)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
