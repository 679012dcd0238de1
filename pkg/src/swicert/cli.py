"""Command line entry point: ``swicert synthesize|certify|simulate|generate``.

Exit codes: 0 success or certified, 1 analysis completed but not certified,
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from swicert import certifier, config as cfgmod, family as fam
from swicert.densities import densities_empirical, densities_from_profile
from swicert.errors import ConfigurationError, NumericalFailure, SwicertError, SynthesisUnavailable
from swicert.simulator import lipschitz_envelope_check, simulate

log = logging.getLogger("swicert")

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _round(obj):
    """Round every float to 9 significant digits, recursively."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.9g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(report):
    return json.dumps(_round(report), indent=2, sort_keys=True) + "\n"


def _pairs_block(cfg, pairs):
    return {
        str(i): {
            "class": cfg.family[i].cls.value,
            "P": p.P,
            "lambda": p.lam,
            "Q": p.Q,
            "source": p.source.value,
        }
        for i, p in sorted(pairs.items())
    }


def _mu_block(mu):
    return {f"{k}->{l}": v for (k, l), v in mu.items()}


def cmd_synthesize(cfg):
    pairs = fam.synthesize_family(cfg.family, cfg.Q, cfg.P)
    mu = fam.mu_table(pairs, cfg.graph)
    report = {
        "pairs": _pairs_block(cfg, pairs),
        "mu": _mu_block(mu),
        "lipschitz_constant": fam.lipschitz_constant(cfg.family),
        "uniformity_constant": fam.uniformity_constant(pairs),
    }
    return report, pairs, mu


def _bundle(cfg):
    if cfg.signal_kind == "profile":
        return densities_from_profile(cfg.profile())
    if cfg.signal_kind == "bundle":
        return cfg.bundle()
    sig = cfg.signal()
    tail = float(cfg.signal_block.get("tail_fraction", 0.5))
    return densities_empirical(sig, cfg.h, cfg.graph, tail)


def cmd_certify(cfg):
    report, pairs, mu = cmd_synthesize(cfg)
    bundle = _bundle(cfg)
    cert = certifier.certify(bundle, mu, pairs, cfg.family.classes)
    warnings = []
    if cert.provenance.value == "EmpiricalTail":
        warnings.append("densities estimated from a finite signal tail; verdict is indicative only")
        if not bundle.converged:
            warnings.append("empirical densities did not converge across the tail window")
    report.update(bundle=bundle.to_dict(), certificate=cert.to_dict(), warnings=warnings)
    return report, cert


def cmd_simulate(cfg, out_dir):
    report, pairs, mu = cmd_synthesize(cfg)
    sim = cfg.simulation
    if "x0" not in sim:
        raise ConfigurationError("simulate needs a simulation block with x0")
    sig = cfg.signal(horizon=sim.get("horizon"))
    L = fam.lipschitz_constant(cfg.family)
    runs = []
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, x0 in enumerate(sim["x0"]):
        traj = simulate(cfg.family, sig, x0, int(sim.get("samples_per_hold", 8)))
        env = certifier.envelope_check(traj, sig, pairs, mu, cfg.family.classes)
        tr = certifier.psi_trace(sig, pairs, mu, cfg.family.classes, traj.times)
        v0 = pairs[int(sig.indices[0])].V(traj.states[0])
        with np.errstate(over="ignore"):
            bound = np.exp(tr.psi) * v0
        name = f"trajectory_{k + 1}.csv"
        (out_dir / name).write_text(traj.to_csv(pairs, bound))
        r0 = float(np.linalg.norm(traj.states[0]))
        rT = float(np.linalg.norm(traj.states[-1]))
        runs.append({
            "x0": list(map(float, x0)),
            "csv": name,
            "final_time": float(traj.times[-1]),
            "final_norm": rT,
            "norm_ratio": rT / r0 if r0 > 0 else 0.0,
            "envelope": env.to_dict(),
            "lipschitz_envelope": lipschitz_envelope_check(traj, L),
        })
    report["simulation"] = {
        "signal_fingerprint": sig.fingerprint(),
        "n_switches": sig.n_switches,
        "horizon": sig.horizon,
        "runs": runs,
    }
    return report, all(r["envelope"]["passed"] for r in runs)


def cmd_generate(cfg, out_dir):
    sig = cfg.signal(horizon=cfg.simulation.get("horizon"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "signal.csv").write_text(sig.to_csv())
    return {"signal_csv": "signal.csv", "n_switches": sig.n_switches, "horizon": sig.horizon,
            "fingerprint": sig.fingerprint()}


def build_parser():
    p = argparse.ArgumentParser(prog="swicert", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["synthesize", "certify", "simulate", "generate"])
    p.add_argument("--config", required=True, help="JSON analysis config")
    p.add_argument("--out", help="output directory (reports, CSV traces)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config)
        out_dir = Path(args.out or cfg.out_dir or "swicert-out")
        code = EXIT_OK
        if args.command == "synthesize":
            report = cmd_synthesize(cfg)[0]
        elif args.command == "certify":
            report, cert = cmd_certify(cfg)
            code = EXIT_OK if cert.certified else EXIT_NOT_CERTIFIED
        elif args.command == "simulate":
            report, ok = cmd_simulate(cfg, out_dir)
            code = EXIT_OK if ok else EXIT_NOT_CERTIFIED
        else:
            report = cmd_generate(cfg, out_dir)
        text = dumps(report)
        if args.out or args.command in ("simulate", "generate"):
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / f"{args.command}.json").write_text(text)
        sys.stdout.write(text)
        return code
    except NumericalFailure as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except SwicertError as exc:
        hint = ""
        if isinstance(exc, SynthesisUnavailable):
            hint = " (add a 'P' override for this system under 'family')"
        log.error("configuration error: %s%s", exc, hint)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
